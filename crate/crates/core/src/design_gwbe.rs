//! GWBE pilot construction: per-cell target inflation to the load-region
//! boundary, the T-transform synthesis of each cell's pilot block, and the
//! matching downlink power rule.
//!
//! Per-cell constructions are independent; each block satisfies the
//! weighted Gram identity `Q_l diag(z_l) Q_l^T = B_l I_tau`, and when every
//! cell sits exactly on its `tau / L` budget the blocks sum to the identity
//! across the network.

use crate::majorization::{
    cap_vector, effective_bandwidth, inverse_effective_bandwidth, schur_horn_factor, EbVector,
};
use crate::netmodel::{
    uplink_power_control, DesignKind, NetworkConfig, PilotBook, PowerAllocation, SinrTargets,
};
use crate::sinr_engine::delta_vector;
use crate::{DeltaVector, Error, Result};
use ndarray::Array2;

/// Tolerance on the per-cell budget equality after inflation.
pub const INFLATE_TOL: f64 = 1e-10;
/// Effective bandwidths below this would make `z^{-1/2}` blow up.
const RANK_EPS: f64 = 1e-14;

/// Everything the GWBE construction produces for one target set.
#[derive(Debug, Clone)]
pub struct GwbeDesignReport {
    pub pilot_book: PilotBook,
    pub inflated_targets: SinrTargets,
    pub per_cell_b: Vec<f64>,
    pub power: PowerAllocation,
}

fn cell_budget(cfg: &NetworkConfig) -> f64 {
    cfg.pilot_len() as f64 / cfg.cells() as f64
}

fn inflate_cell_uniform(z: &[f64], budget: f64, cap: f64, cell: usize) -> Result<Vec<f64>> {
    let sum: f64 = z.iter().sum();
    if sum > budget * (1.0 + INFLATE_TOL) {
        return Err(Error::RegionViolation {
            cell,
            used: sum,
            budget,
        });
    }
    let scale = budget / sum;
    let zh: Vec<f64> = z.iter().map(|v| v * scale).collect();
    if zh[0] > cap * (1.0 + 1e-12) {
        return Err(Error::MajorizationCapViolation { cell });
    }
    Ok(zh)
}

fn inflate_cell_capped(z: &[f64], budget: f64, cap: f64, cell: usize) -> Result<Vec<f64>> {
    let sum: f64 = z.iter().sum();
    if sum > budget * (1.0 + INFLATE_TOL) {
        return Err(Error::RegionViolation {
            cell,
            used: sum,
            budget,
        });
    }
    if z[0] > cap * (1.0 + 1e-12) {
        // Even without inflation the top entry breaks majorization.
        return Err(Error::MajorizationCapViolation { cell });
    }
    let k = z.len();
    let mut zh = z.to_vec();
    let mut pinned = vec![false; k];
    loop {
        let pinned_count = pinned.iter().filter(|&&p| p).count();
        let tail_budget = budget - cap * pinned_count as f64;
        let tail_sum: f64 = (0..k).filter(|&i| !pinned[i]).map(|i| z[i]).sum();
        if tail_sum <= 0.0 {
            break;
        }
        let scale = tail_budget / tail_sum;
        let mut newly = false;
        for i in 0..k {
            if pinned[i] {
                continue;
            }
            zh[i] = z[i] * scale;
            if zh[i] > cap * (1.0 + 1e-12) {
                pinned[i] = true;
                zh[i] = cap;
                newly = true;
            }
        }
        if !newly {
            break;
        }
    }
    Ok(zh)
}

fn targets_from_inflated_eb(base: &SinrTargets, zh_cells: Vec<Vec<f64>>) -> Result<SinrTargets> {
    // With K = tau the boundary sum forces every eb to one, which no finite
    // target attains; the clamp saturates those entries and the
    // construction degenerates to orthogonal pilots.
    let hat = zh_cells
        .iter()
        .map(|cell| {
            cell.iter()
                .map(|&z| inverse_effective_bandwidth(z.min(1.0 - 1e-15)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    base.clone().with_inflated(hat)
}

/// Uniform eb-domain inflation: per cell, scale `z = eb(gamma)` by
/// `(tau/L) / sum(z)` so the budget holds with equality.
///
/// Errors with [`Error::RegionViolation`] when a cell's budget is already
/// exceeded and with [`Error::MajorizationCapViolation`] when scaling would
/// push the largest effective bandwidth above `1/L` (reported, never
/// silently clipped; see [`inflate_targets_capped`] for the variant that
/// pins such entries at the cap).
pub fn inflate_targets(targets: &SinrTargets, cfg: &NetworkConfig) -> Result<SinrTargets> {
    inflate_with(targets, cfg, inflate_cell_uniform)
}

/// Cap-aware inflation: uniform eb-domain scaling, except that entries
/// which would exceed the `1/L` majorization cap are pinned there and the
/// remaining budget is redistributed over the tail (repeatedly, until no
/// entry exceeds the cap).
///
/// This coincides with [`inflate_targets`] whenever uniform scaling is
/// feasible, and extends it to target sets - like the third cell of the
/// reference antenna-sweep configuration - where the dominant user must be
/// held at the cap while the others absorb the slack.
pub fn inflate_targets_capped(targets: &SinrTargets, cfg: &NetworkConfig) -> Result<SinrTargets> {
    inflate_with(targets, cfg, inflate_cell_capped)
}

/// Per-cell inflation rule: (eb values, budget, cap, 1-based cell) -> inflated eb.
type CellInflationRule = fn(&[f64], f64, f64, usize) -> Result<Vec<f64>>;

fn inflate_with(
    targets: &SinrTargets,
    cfg: &NetworkConfig,
    cell_rule: CellInflationRule,
) -> Result<SinrTargets> {
    if targets.cells() != cfg.cells() || targets.users_per_cell() != cfg.users_per_cell() {
        return Err(Error::DimensionMismatch(
            "targets do not match the network layout".into(),
        ));
    }
    let budget = cell_budget(cfg);
    let cap = 1.0 / cfg.cells() as f64;
    let mut zh_cells = Vec::with_capacity(cfg.cells());
    for l in 0..cfg.cells() {
        let z: Vec<f64> = targets
            .cell(l)
            .iter()
            .map(|&g| effective_bandwidth(g))
            .collect::<Result<_>>()?;
        zh_cells.push(cell_rule(&z, budget, cap, l + 1)?);
    }
    targets_from_inflated_eb(targets, zh_cells)
}

/// Runs the load-achieving construction for one cell: effective bandwidths
/// `z` (descending), cap vector, T-transform factor, then the column-scaled
/// top rows. Returns the `tau x K` block and the cell's `B`.
fn build_cell_block(z: &[f64], tau: usize) -> Result<(Array2<f64>, f64)> {
    if z.iter().any(|&v| v <= RANK_EPS) {
        return Err(Error::NumericalRankLoss);
    }
    let eb = EbVector::new(z.to_vec())?;
    let x = cap_vector(&eb, tau)?;
    let factor = schur_horn_factor(&x, &eb)?;
    let u = factor.matrix();
    let k = z.len();
    let level = x.level();
    // Rows of U at the nonzero cap positions, columns scaled by
    // sqrt(B) / sqrt(z_k); the result is unit-norm by construction and the
    // final normalization only mops up rounding.
    let mut q = Array2::<f64>::zeros((tau, k));
    for c in 0..k {
        let scale = (level / z[c]).sqrt();
        for r in 0..tau {
            q[(r, c)] = u[(r, c)] * scale;
        }
    }
    for mut col in q.columns_mut() {
        let norm = col.dot(&col).sqrt();
        col.mapv_inplace(|v| v / norm);
    }
    Ok((q, level))
}

/// Algorithm-level entry point: inflates the targets (unless explicit
/// inflated targets are attached), builds each cell's pilot block, and
/// fills in the downlink power rule `P = delta * eb(gamma_hat)` under
/// uplink power control.
pub fn gwbe_design(targets: &SinrTargets, cfg: &NetworkConfig) -> Result<GwbeDesignReport> {
    let inflated = match targets.inflated() {
        Some(_) => targets.clone(),
        None => inflate_targets_capped(targets, cfg)?,
    };
    let hat = inflated.inflated().unwrap();

    let tau = cfg.pilot_len();
    let k = cfg.users_per_cell();
    if tau > k {
        // The construction needs K >= tau within each cell.
        return Err(Error::TauOutOfRange { tau, k });
    }
    let mut q = Array2::<f64>::zeros((tau, cfg.k_tot()));
    let mut per_cell_b = Vec::with_capacity(cfg.cells());
    let mut zhat_flat = Vec::with_capacity(cfg.k_tot());
    for l in 0..cfg.cells() {
        let z: Vec<f64> = hat[l]
            .iter()
            .map(|&g| effective_bandwidth(g))
            .collect::<Result<_>>()?;
        let (block, level) = build_cell_block(&z, tau)?;
        for c in 0..k {
            for r in 0..tau {
                q[(r, l * k + c)] = block[(r, c)];
            }
        }
        per_cell_b.push(level);
        zhat_flat.extend(z);
    }
    let blocks = (0..cfg.cells()).map(|l| l * k..(l + 1) * k).collect();
    let pilot_book = PilotBook::new(q, DesignKind::Gwbe, blocks)?;

    let mut power = uplink_power_control(cfg);
    let delta = delta_vector(&pilot_book, &power, cfg)?;
    power.downlink = delta
        .values
        .iter()
        .zip(&zhat_flat)
        .map(|(d, z)| d * z)
        .collect();

    Ok(GwbeDesignReport {
        pilot_book,
        inflated_targets: inflated,
        per_cell_b,
        power,
    })
}

/// The downlink power rule `P_u = delta_u * eb(gamma_hat_u)` for an
/// externally supplied delta vector; uplink powers are carried over.
pub fn gwbe_power_allocation(
    report: &GwbeDesignReport,
    delta: &DeltaVector,
) -> Result<PowerAllocation> {
    let zhat: Vec<f64> = report
        .inflated_targets
        .inflated_flat()
        .ok_or(Error::UnsetPower)?
        .iter()
        .map(|&g| effective_bandwidth(g))
        .collect::<Result<_>>()?;
    if delta.values.len() != zhat.len() {
        return Err(Error::LengthMismatch(delta.values.len(), zhat.len()));
    }
    let downlink: Vec<f64> = delta.values.iter().zip(&zhat).map(|(d, z)| d * z).collect();
    PowerAllocation::new(downlink, report.power.uplink.clone())
}

/// `max |Q_l diag(z_l) Q_l^T - B_l I|` over one cell block, 0-based `l`.
pub fn cell_gram_residual(report: &GwbeDesignReport, l: usize) -> f64 {
    let book = &report.pilot_book;
    let tau = book.tau();
    let block = &book.cell_blocks()[l];
    let hat = &report.inflated_targets.inflated().unwrap()[l];
    let mut m = Array2::<f64>::zeros((tau, tau));
    for (j, col) in block.clone().enumerate() {
        let z = hat[j] / (1.0 + hat[j]);
        let qc = book.q().column(col);
        for r in 0..tau {
            for c in 0..tau {
                m[(r, c)] += z * qc[r] * qc[c];
            }
        }
    }
    let b = report.per_cell_b[l];
    let mut worst = 0.0f64;
    for r in 0..tau {
        for c in 0..tau {
            let target = if r == c { b } else { 0.0 };
            worst = worst.max((m[(r, c)] - target).abs());
        }
    }
    worst
}

/// `max |sum_l Q_l diag(z_l) Q_l^T - I|` across the whole network.
pub fn network_gram_residual(report: &GwbeDesignReport) -> f64 {
    let book = &report.pilot_book;
    let tau = book.tau();
    let zhat: Vec<f64> = report
        .inflated_targets
        .inflated_flat()
        .unwrap()
        .iter()
        .map(|&g| g / (1.0 + g))
        .collect();
    let mut m = Array2::<f64>::zeros((tau, tau));
    for (u, &z) in zhat.iter().enumerate() {
        let qc = book.q().column(u);
        for r in 0..tau {
            for c in 0..tau {
                m[(r, c)] += z * qc[r] * qc[c];
            }
        }
    }
    let mut worst = 0.0f64;
    for r in 0..tau {
        for c in 0..tau {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((m[(r, c)] - target).abs());
        }
    }
    worst
}
