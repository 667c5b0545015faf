//! Effective bandwidths, majorization, and the T-transform construction of
//! orthogonal matrices with a prescribed weighted diagonal.
//!
//! The key entry point is [`schur_horn_factor`]: given a flat-spectrum cap
//! vector `x` that majorizes `z`, it builds an orthogonal `U` from at most
//! `K - 1` plane rotations with `diag(U^T diag(x) U) = z`.

use crate::{Error, Result};
use ndarray::Array2;

/// Sum-preservation tolerance for majorization checks.
pub const SUM_TOL: f64 = 1e-12;
/// Orthogonality / diagonal-match tolerance for constructed factors.
pub const ORTHO_TOL: f64 = 1e-9;

/// Effective bandwidth `eb(gamma) = gamma / (1 + gamma)`, strictly
/// increasing on `gamma > 0` with range `(0, 1)`.
pub fn effective_bandwidth(gamma: f64) -> Result<f64> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::NonPositiveTarget);
    }
    Ok(gamma / (1.0 + gamma))
}

/// Inverse of [`effective_bandwidth`]: `z / (1 - z)` for `z` in `(0, 1)`.
pub fn inverse_effective_bandwidth(z: f64) -> Result<f64> {
    if !(z.is_finite() && z > 0.0 && z < 1.0) {
        return Err(Error::NonPositiveTarget);
    }
    Ok(z / (1.0 - z))
}

/// A descending vector of effective bandwidths, each strictly in `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EbVector {
    z: Vec<f64>,
}

impl EbVector {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if z.is_empty() {
            return Err(Error::DimensionMismatch("empty eb vector".into()));
        }
        if z.iter().any(|&v| !(v.is_finite() && v > 0.0 && v < 1.0)) {
            return Err(Error::NonPositiveTarget);
        }
        if z.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::NotSorted);
        }
        Ok(EbVector { z })
    }

    /// Maps descending SINR targets through [`effective_bandwidth`].
    pub fn from_targets(gamma: &[f64]) -> Result<Self> {
        let z = gamma
            .iter()
            .map(|&g| effective_bandwidth(g))
            .collect::<Result<Vec<_>>>()?;
        EbVector::new(z)
    }

    pub fn values(&self) -> &[f64] {
        &self.z
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.z.iter().sum()
    }
}

/// The flat-spectrum majorant: `tau` equal leading entries `B`, then zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct CapVector {
    x: Vec<f64>,
    level: f64,
    tau: usize,
}

impl CapVector {
    pub fn values(&self) -> &[f64] {
        &self.x
    }

    /// The common value `B` of the leading entries.
    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn tau(&self) -> usize {
        self.tau
    }
}

/// Builds the cap vector for `z`: `B = sum(z) / tau` in the first `tau`
/// slots, zero elsewhere. It majorizes `z` exactly when `z_1 <= B`.
pub fn cap_vector(z: &EbVector, tau: usize) -> Result<CapVector> {
    let k = z.len();
    if tau < 1 || tau > k {
        return Err(Error::TauOutOfRange { tau, k });
    }
    let level = z.sum() / tau as f64;
    let mut x = vec![0.0; k];
    x[..tau].fill(level);
    Ok(CapVector { x, level, tau })
}

/// Majorization test: both vectors descending and equally long;
/// `x` majorizes `z` iff every prefix sum of `x` dominates and the totals
/// agree within [`SUM_TOL`].
pub fn majorizes(x: &[f64], z: &[f64]) -> Result<bool> {
    if x.len() != z.len() {
        return Err(Error::LengthMismatch(x.len(), z.len()));
    }
    if x.windows(2).any(|w| w[0] < w[1]) || z.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::NotSorted);
    }
    let mut sx = 0.0;
    let mut sz = 0.0;
    for i in 0..x.len() {
        sx += x[i];
        sz += z[i];
        if i + 1 < x.len() && sx < sz - SUM_TOL {
            return Ok(false);
        }
    }
    Ok((sx - sz).abs() <= SUM_TOL.max(SUM_TOL * sx.abs()))
}

/// An orthogonal matrix together with the number of plane rotations that
/// built it (at most `K - 1`).
#[derive(Debug, Clone)]
pub struct OrthoFactor {
    u: Array2<f64>,
    rotation_count: usize,
}

impl OrthoFactor {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.u
    }

    pub fn rotation_count(&self) -> usize {
        self.rotation_count
    }

    /// `max |(U^T U - I)_{ij}|`, for orthogonality checks.
    pub fn orthogonality_residual(&self) -> f64 {
        let k = self.u.dim().0;
        let g = self.u.t().dot(&self.u);
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }
}

/// Builds an orthogonal `U` with `diag(U^T diag(x) U) = z` via a chain of at
/// most `K - 1` plane rotations.
///
/// Targets are fixed largest-first. Each step rotates the adjacent
/// bracketing pair of the working values: with `a >= z_k >= b` the rotation
/// uses squared cosine `(z_k - b) / (a - b)`, retires one coordinate at
/// `z_k`, and replaces the pair's other value with `a + b - z_k` (so the
/// working sum is preserved exactly). A working value that already equals
/// the target is retired without a rotation, which makes `x = z` produce
/// the identity with zero rotations.
pub fn schur_horn_factor(x: &CapVector, z: &EbVector) -> Result<OrthoFactor> {
    let k = z.len();
    if x.values().len() != k {
        return Err(Error::LengthMismatch(x.values().len(), k));
    }
    if !majorizes(x.values(), z.values())? {
        return Err(Error::MajorizationViolation);
    }

    let zs = z.values();
    let mut u = Array2::<f64>::eye(k);
    // Working coordinates sorted by descending value; ties by lowest index.
    let mut active: Vec<(f64, usize)> = x.values().iter().cloned().zip(0..k).collect();
    active.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut assignment = vec![0usize; k];
    let mut rotation_count = 0usize;

    for (step, &zk) in zs.iter().enumerate() {
        if active.len() == 1 {
            let (w, coord) = active.pop().unwrap();
            debug_assert!((w - zk).abs() <= 1e-7, "final working value must hit z_K");
            assignment[step] = coord;
            continue;
        }
        // Exact hit: retire without a rotation.
        if let Some(pos) = active.iter().position(|&(w, _)| (w - zk).abs() <= SUM_TOL) {
            let (_, coord) = active.remove(pos);
            assignment[step] = coord;
            continue;
        }
        // Adjacent bracketing pair: the smallest working value >= z_k and
        // the largest working value < z_k.
        let n = active
            .iter()
            .rposition(|&(w, _)| w >= zk)
            .ok_or(Error::MajorizationViolation)?;
        if n + 1 >= active.len() {
            return Err(Error::MajorizationViolation);
        }
        let (a, coord_a) = active[n];
        let (b, coord_b) = active[n + 1];
        let c2 = (zk - b) / (a - b);
        let c = c2.sqrt();
        let s = (1.0 - c2).sqrt();
        // Right-multiply U by the plane rotation G(coord_a, coord_b):
        // G[a][a] = c, G[a][b] = -s, G[b][a] = s, G[b][b] = c.
        for r in 0..k {
            let ua = u[(r, coord_a)];
            let ub = u[(r, coord_b)];
            u[(r, coord_a)] = c * ua + s * ub;
            u[(r, coord_b)] = -s * ua + c * ub;
        }
        rotation_count += 1;
        assignment[step] = coord_a;
        let leftover = a + b - zk;
        active.remove(n + 1);
        active.remove(n);
        let pos = active
            .iter()
            .position(|&(w, c_)| w < leftover || (w == leftover && c_ > coord_b))
            .unwrap_or(active.len());
        active.insert(pos, (leftover, coord_b));
    }

    // Permute columns so coordinate k displays z_k.
    let mut permuted = Array2::<f64>::zeros((k, k));
    for (target_pos, &coord) in assignment.iter().enumerate() {
        for r in 0..k {
            permuted[(r, target_pos)] = u[(r, coord)];
        }
    }
    Ok(OrthoFactor {
        u: permuted,
        rotation_count,
    })
}
