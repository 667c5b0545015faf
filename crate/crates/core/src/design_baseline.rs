//! WBE and FOS baseline pilot designs.
//!
//! WBE books are unit-norm tight frames: `Q Q^T = (n / tau) I`. For
//! `n = tau` this is an orthonormal basis, for `n = tau + 1` the regular
//! simplex (all pairwise correlations `-1/tau`), and for larger `n` a real
//! harmonic tight frame whose pairwise correlations are no longer all equal
//! (no real equiangular frame exists in general) while the tight-frame
//! property still holds exactly.
//!
//! FOS books reuse `tau` orthonormal sequences across all users; users in
//! the same group are fully correlated and groups are mutually orthogonal.

use crate::netmodel::{DesignKind, NetworkConfig, PilotBook};
use crate::{Error, Result};
use ndarray::Array2;
use std::f64::consts::PI;

/// Scope of the WBE frame: one frame of `K` columns reused in every cell
/// (column `j` assigned to slot `j`, so co-slot users across cells share a
/// sequence), or a single network-wide frame of `K_tot` distinct columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WbeScope {
    PerCell,
    Network,
}

/// How FOS maps users onto the `tau` orthonormal sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupingPolicy {
    /// Slot `j` (1-based, within each cell) uses sequence `((j-1) mod tau) + 1`.
    RoundRobin,
    /// Explicit per-user sequence indices (0-based, flat user order).
    Explicit(Vec<usize>),
}

/// The FOS sharing structure: for each sequence, the 0-based flat indices
/// of the users assigned to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FosAssignment {
    pub groups: Vec<Vec<usize>>,
}

impl FosAssignment {
    /// Sequence index (0-based) of a flat user index.
    pub fn sequence_of(&self, user: usize) -> usize {
        self.groups
            .iter()
            .position(|g| g.contains(&user))
            .expect("every user belongs to a group")
    }
}

/// Orthonormal basis frame (`n = tau`).
fn identity_frame(tau: usize) -> Array2<f64> {
    Array2::eye(tau)
}

/// Regular simplex: `tau + 1` unit vectors in `R^tau` with pairwise inner
/// product `-1/tau`, realized through the Helmert basis of the hyperplane
/// orthogonal to the all-ones vector.
fn simplex_frame(tau: usize) -> Array2<f64> {
    let n = tau + 1;
    let mut w = Array2::<f64>::zeros((tau, n));
    for k in 1..=tau {
        let norm = (k as f64 * (k + 1) as f64).sqrt();
        for j in 0..k {
            w[(k - 1, j)] = 1.0 / norm;
        }
        w[(k - 1, k)] = -(k as f64) / norm;
    }
    normalize_columns(&mut w);
    w
}

/// Real harmonic tight frame: `tau` rows of the real Fourier basis on `n`
/// points, chosen so every column has the same norm (the constant row plus
/// full cosine/sine pairs), then column-normalized.
fn harmonic_frame(tau: usize, n: usize) -> Result<Array2<f64>> {
    let pairs = if tau % 2 == 1 { (tau - 1) / 2 } else { tau / 2 };
    if 2 * pairs > n - 1 {
        return Err(Error::InfeasibleFrame { n, tau });
    }
    let mut q = Array2::<f64>::zeros((tau, n));
    let mut row = 0;
    if tau % 2 == 1 {
        let v = (1.0 / n as f64).sqrt();
        for j in 0..n {
            q[(row, j)] = v;
        }
        row += 1;
    }
    let amp = (2.0 / n as f64).sqrt();
    for k in 1..=pairs {
        for j in 0..n {
            let theta = 2.0 * PI * (k as f64) * (j as f64) / (n as f64);
            q[(row, j)] = amp * theta.cos();
            q[(row + 1, j)] = amp * theta.sin();
        }
        row += 2;
    }
    normalize_columns(&mut q);
    Ok(q)
}

fn normalize_columns(q: &mut Array2<f64>) {
    for mut col in q.columns_mut() {
        let norm = col.dot(&col).sqrt();
        col.mapv_inplace(|v| v / norm);
    }
}

/// One unit-norm tight frame of `n >= tau` columns in `R^tau`.
pub fn tight_frame(tau: usize, n: usize) -> Result<Array2<f64>> {
    if n < tau {
        return Err(Error::InfeasibleFrame { n, tau });
    }
    if n == tau {
        Ok(identity_frame(tau))
    } else if n == tau + 1 {
        Ok(simplex_frame(tau))
    } else {
        harmonic_frame(tau, n)
    }
}

/// Builds the WBE pilot book for the network under the given scope.
pub fn wbe_design(cfg: &NetworkConfig, scope: WbeScope) -> Result<PilotBook> {
    let tau = cfg.pilot_len();
    let k = cfg.users_per_cell();
    let q = match scope {
        WbeScope::PerCell => {
            let frame = tight_frame(tau, k)?;
            let mut q = Array2::<f64>::zeros((tau, cfg.k_tot()));
            for l in 0..cfg.cells() {
                for c in 0..k {
                    for r in 0..tau {
                        q[(r, l * k + c)] = frame[(r, c)];
                    }
                }
            }
            q
        }
        WbeScope::Network => tight_frame(tau, cfg.k_tot())?,
    };
    let blocks = (0..cfg.cells()).map(|l| l * k..(l + 1) * k).collect();
    PilotBook::new(q, DesignKind::Wbe, blocks)
}

/// Builds the FOS pilot book (identity columns reused per the policy) and
/// its sharing assignment.
pub fn fos_design(
    cfg: &NetworkConfig,
    policy: &GroupingPolicy,
) -> Result<(PilotBook, FosAssignment)> {
    let tau = cfg.pilot_len();
    let k = cfg.users_per_cell();
    let k_tot = cfg.k_tot();
    let seq_of: Vec<usize> = match policy {
        GroupingPolicy::RoundRobin => (0..k_tot).map(|u| (u % k) % tau).collect(),
        GroupingPolicy::Explicit(assign) => {
            if assign.len() != k_tot {
                return Err(Error::LengthMismatch(assign.len(), k_tot));
            }
            if let Some(&bad) = assign.iter().find(|&&s| s >= tau) {
                return Err(Error::ParseError(format!(
                    "sequence index {bad} out of range 0..{tau}"
                )));
            }
            assign.clone()
        }
    };
    let mut groups = vec![Vec::new(); tau];
    for (u, &s) in seq_of.iter().enumerate() {
        groups[s].push(u);
    }
    if let Some(empty) = groups.iter().position(|g| g.is_empty()) {
        if matches!(policy, GroupingPolicy::Explicit(_)) {
            return Err(Error::EmptyGroup(empty + 1));
        }
    }
    let mut q = Array2::<f64>::zeros((tau, k_tot));
    for (u, &s) in seq_of.iter().enumerate() {
        q[(s, u)] = 1.0;
    }
    let blocks = (0..cfg.cells()).map(|l| l * k..(l + 1) * k).collect();
    let book = PilotBook::new(q, DesignKind::Fos, blocks)?;
    Ok((book, FosAssignment { groups }))
}
