//! User-load bound, load-region membership, the spectral feasibility oracle
//! for explicit pilot books, and the region sweeps behind the load-region
//! and max-permitted-SINR experiments.
//!
//! The oracle reduces "do positive downlink powers exist meeting every
//! asymptotic SINR target" to a spectral-radius test: with
//! `M[u,v] = eb(g_u) rho_{u,v}^2 p_u beta[u,cell(v)]^2 / beta[u,cell(u)]`
//! the targets are achievable iff the Perron root of `M` is at most one.

use crate::design_baseline::{fos_design, wbe_design, GroupingPolicy, WbeScope};
use crate::majorization::effective_bandwidth;
use crate::netmodel::{
    uplink_power_control, DesignKind, NetworkConfig, PilotBook, PowerAllocation, SinrTargets,
};
use crate::{Error, Result};
use ndarray::Array2;
use rayon::prelude::*;

/// Feasibility margin on the spectral radius and the budget utilization.
pub const FEAS_TOL: f64 = 1e-9;
/// Power-iteration convergence tolerance on successive radius estimates.
pub const POWER_ITER_TOL: f64 = 1e-12;
/// Power-iteration step cap.
pub const POWER_ITER_CAP: usize = 100_000;

/// Which test decided a [`RegionVerdict`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    GwbeBudget,
    Spectral,
    Cap,
}

/// Feasibility classification of a target vector. For spectral verdicts
/// `feasible` holds exactly when `spectral_radius <= 1 + FEAS_TOL`; for
/// budget verdicts the radius slot carries the worst budget utilization
/// (and `L * max eb` for cap verdicts), so `<= 1` still means feasible.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionVerdict {
    pub feasible: bool,
    pub spectral_radius: f64,
    pub binding: Binding,
    /// A positive downlink power vector meeting every target, present when
    /// a spectral verdict is strictly feasible. Normalized to sum `K_tot`
    /// (the asymptotic regime is scale-free).
    pub witness_power: Option<Vec<f64>>,
}

/// The user-load bound `sqrt(tau * sum (1 + g) / g)` and its floor.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadBound {
    pub bound_real: f64,
    pub bound_int: u64,
}

/// Upper bound on how many users the network can serve at the given
/// targets; the caller compares `K_tot` against it.
pub fn userload_bound(targets: &SinrTargets, tau: usize) -> Result<LoadBound> {
    if tau < 1 {
        return Err(Error::TauOutOfRange { tau, k: 1 });
    }
    let mut sum = 0.0;
    for g in targets.gamma_flat() {
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::NonPositiveTarget);
        }
        sum += (1.0 + g) / g;
    }
    let bound_real = (tau as f64 * sum).sqrt();
    Ok(LoadBound {
        bound_real,
        bound_int: bound_real.floor() as u64,
    })
}

/// Budget scope for [`region_membership`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MembershipMode {
    /// Network-wide budget `sum eb <= tau`.
    Network,
    /// Equal split: per-cell budget `sum eb <= tau / L`.
    PerCell,
}

/// Checks the effective-bandwidth budget of the load region. The verdict's
/// radius slot carries the worst utilization (budget used / budget).
pub fn region_membership(
    targets: &SinrTargets,
    cfg: &NetworkConfig,
    mode: MembershipMode,
) -> RegionVerdict {
    let tau = cfg.pilot_len() as f64;
    let utilization = match mode {
        MembershipMode::Network => {
            let sum: f64 = targets.gamma_flat().iter().map(|&g| g / (1.0 + g)).sum();
            sum / tau
        }
        MembershipMode::PerCell => {
            let budget = tau / cfg.cells() as f64;
            (0..targets.cells())
                .map(|l| {
                    targets.cell(l).iter().map(|&g| g / (1.0 + g)).sum::<f64>() / budget
                })
                .fold(0.0, f64::max)
        }
    };
    RegionVerdict {
        feasible: utilization <= 1.0 + FEAS_TOL,
        spectral_radius: utilization,
        binding: Binding::GwbeBudget,
        witness_power: None,
    }
}

/// Spectral radius of a non-negative matrix by L1-normalized power
/// iteration from a positive start vector.
///
/// Matrices with a zero somewhere on the diagonal get an identity shift
/// first (a positive diagonal already rules out the periodic orbits that
/// stall plain power iteration; oracle matrices always have one because
/// every pilot is fully correlated with itself).
pub fn spectral_radius_nonneg(m: &Array2<f64>) -> Result<f64> {
    let n = m.dim().0;
    if n == 0 || m.dim().1 != n {
        return Err(Error::DimensionMismatch("matrix must be square".into()));
    }
    let needs_shift = (0..n).any(|i| m[(i, i)] <= 0.0);
    let mut flat = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            flat[i * n + j] = m[(i, j)] + if needs_shift && i == j { 1.0 } else { 0.0 };
        }
    }
    let mut x = vec![1.0 / n as f64; n];
    let radius = power_iteration_flat(&flat, n, &mut x)?;
    Ok(if needs_shift { radius - 1.0 } else { radius })
}

/// Core power iteration on a row-major flat matrix; `x` holds the start
/// vector (positive entries) and is left at the converged direction, so
/// callers sweeping nearby matrices can warm-start.
fn power_iteration_flat(m: &[f64], n: usize, x: &mut [f64]) -> Result<f64> {
    let mut y = vec![0.0f64; n];
    let mut last = f64::INFINITY;
    for _ in 0..POWER_ITER_CAP {
        for (i, yi) in y.iter_mut().enumerate() {
            let row = &m[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for (rv, xv) in row.iter().zip(x.iter()) {
                acc += rv * xv;
            }
            *yi = acc;
        }
        let norm: f64 = y.iter().sum();
        if !norm.is_finite() {
            return Err(Error::NonConvergence(POWER_ITER_CAP));
        }
        if norm <= 0.0 {
            // Nonnegative matrix annihilating a positive vector is zero on
            // the reachable block; the radius of that block is zero.
            return Ok(0.0);
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
        if (norm - last).abs() <= POWER_ITER_TOL * norm.max(1.0) {
            return Ok(norm);
        }
        last = norm;
    }
    Err(Error::NonConvergence(POWER_ITER_CAP))
}

/// Builds the oracle matrix `M` for a book, targets, gains and uplink
/// powers (flat user order).
pub fn oracle_matrix(
    book: &PilotBook,
    targets: &SinrTargets,
    cfg: &NetworkConfig,
    power_uplink: &PowerAllocation,
) -> Result<Array2<f64>> {
    let k_tot = cfg.k_tot();
    if book.k_tot() != k_tot || power_uplink.uplink.len() != k_tot {
        return Err(Error::DimensionMismatch(
            "book/power size does not match the network".into(),
        ));
    }
    if targets.cells() != cfg.cells() || targets.users_per_cell() != cfg.users_per_cell() {
        return Err(Error::DimensionMismatch(
            "targets do not match the network layout".into(),
        ));
    }
    let gamma = targets.gamma_flat();
    let gram = book.gram();
    let mut m = Array2::<f64>::zeros((k_tot, k_tot));
    for u in 0..k_tot {
        let eb = effective_bandwidth(gamma[u])?;
        let own = cfg.beta_own(u);
        for v in 0..k_tot {
            let rho = gram[(u, v)];
            let bc = cfg.beta(u, cfg.cell_of(v));
            m[(u, v)] = eb * rho * rho * power_uplink.uplink[u] * bc * bc / own;
        }
    }
    Ok(m)
}

/// Asymptotic feasibility of the targets for an explicit pilot book:
/// feasible iff the Perron root of the oracle matrix is at most one.
/// Strictly feasible verdicts also carry a positive witness power vector.
pub fn feasibility_oracle(
    book: &PilotBook,
    targets: &SinrTargets,
    cfg: &NetworkConfig,
    power_uplink: &PowerAllocation,
) -> Result<RegionVerdict> {
    let m = oracle_matrix(book, targets, cfg, power_uplink)?;
    let radius = spectral_radius_nonneg(&m)?;
    let feasible = radius <= 1.0 + FEAS_TOL;
    let witness_power = if feasible && radius < 1.0 - FEAS_TOL {
        witness_powers(&m, book, cfg, power_uplink)?
    } else {
        None
    };
    Ok(RegionVerdict {
        feasible,
        spectral_radius: radius,
        binding: Binding::Spectral,
        witness_power,
    })
}

/// Solves `(I - M) s = 1` directly (Gaussian elimination with partial
/// pivoting; the solution is the convergent Neumann series, hence positive
/// for radius < 1), maps the scaled variables back to powers
/// `P_u = delta_u * s_u`, and normalizes to `sum P = K_tot`.
fn witness_powers(
    m: &Array2<f64>,
    book: &PilotBook,
    cfg: &NetworkConfig,
    power_uplink: &PowerAllocation,
) -> Result<Option<Vec<f64>>> {
    let n = m.dim().0;
    let delta = crate::sinr_engine::delta_vector(book, power_uplink, cfg)?;
    let mut a = vec![0.0f64; n * n];
    let mut s = vec![1.0f64; n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = (if i == j { 1.0 } else { 0.0 }) - m[(i, j)];
        }
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r1, &r2| {
                a[r1 * n + col]
                    .abs()
                    .partial_cmp(&a[r2 * n + col].abs())
                    .unwrap()
            })
            .unwrap();
        if a[pivot * n + col].abs() < 1e-300 {
            return Ok(None);
        }
        if pivot != col {
            for j in 0..n {
                a.swap(col * n + j, pivot * n + j);
            }
            s.swap(col, pivot);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                a[row * n + j] -= f * a[col * n + j];
            }
            s[row] -= f * s[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = s[col];
        for j in col + 1..n {
            acc -= a[col * n + j] * s[j];
        }
        s[col] = acc / a[col * n + col];
    }
    // Rounding can spoil positivity only in near-singular cases; report no
    // witness rather than a non-physical one.
    if s.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
        return Ok(None);
    }
    let mut p: Vec<f64> = s.iter().zip(&delta.values).map(|(si, d)| si * d).collect();
    let total: f64 = p.iter().sum();
    let scale = n as f64 / total;
    for v in &mut p {
        *v *= scale;
    }
    Ok(Some(p))
}

/// The per-cell target shape for the max-permitted-SINR experiment:
/// slot `j` requires `multipliers[j] * gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetPattern {
    pub multipliers: Vec<f64>,
}

impl TargetPattern {
    /// The reference shape `[1, 1, 1/2, 1/2]` scaled to `K` slots: the
    /// first half of the slots at full weight, the rest at half weight.
    pub fn half_split(users_per_cell: usize) -> Self {
        let multipliers = (0..users_per_cell)
            .map(|j| if j < users_per_cell.div_ceil(2) { 1.0 } else { 0.5 })
            .collect();
        TargetPattern { multipliers }
    }

    fn targets_at(&self, gamma: f64, cells: usize) -> Result<SinrTargets> {
        let cell: Vec<f64> = self.multipliers.iter().map(|m| m * gamma).collect();
        SinrTargets::from_cells(vec![cell; cells])
    }
}

fn gwbe_pattern_feasible(targets: &SinrTargets, cfg: &NetworkConfig) -> bool {
    let budget_ok = region_membership(targets, cfg, MembershipMode::PerCell).feasible;
    let cap = 1.0 / cfg.cells() as f64;
    let cap_ok = targets
        .gamma_flat()
        .iter()
        .all(|&g| g / (1.0 + g) <= cap + FEAS_TOL);
    budget_ok && cap_ok
}

/// Largest scalar `gamma` (bisection to 1e-6) for which the pattern is
/// feasible under the design: GWBE uses the per-cell budget plus the
/// `eb <= 1/L` majorization cap, WBE and FOS run the spectral oracle on
/// their constructed books.
pub fn max_permitted_sinr(
    cfg: &NetworkConfig,
    pattern: &TargetPattern,
    design: DesignKind,
) -> Result<f64> {
    if pattern.multipliers.len() != cfg.users_per_cell() {
        return Err(Error::LengthMismatch(
            pattern.multipliers.len(),
            cfg.users_per_cell(),
        ));
    }
    let power = uplink_power_control(cfg);
    let book = match design {
        DesignKind::Wbe => Some(wbe_design(cfg, WbeScope::PerCell)?),
        DesignKind::Fos => Some(fos_design(cfg, &GroupingPolicy::RoundRobin)?.0),
        DesignKind::Gwbe => None,
        DesignKind::Explicit => {
            return Err(Error::ParseError(
                "max_permitted_sinr needs a named design".into(),
            ))
        }
    };
    let feasible = |gamma: f64| -> Result<bool> {
        let targets = pattern.targets_at(gamma, cfg.cells())?;
        match &book {
            None => Ok(gwbe_pattern_feasible(&targets, cfg)),
            Some(b) => Ok(feasibility_oracle(b, &targets, cfg, &power)?.feasible),
        }
    };

    const UPPER_PROBE: f64 = 1e3;
    if feasible(UPPER_PROBE)? {
        return Err(Error::BracketFailure(UPPER_PROBE));
    }
    let mut lo = 0.0f64;
    let mut hi = UPPER_PROBE;
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Grid specification for [`region_sweep`]: `points_per_axis` cells per
/// swept axis over `[0, gamma_max]`, three swept slots, and fixed targets
/// for the remaining slots of each cell.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub points_per_axis: usize,
    pub gamma_max: f64,
    pub fixed_tail: Vec<f64>,
}

impl GridSpec {
    /// The reference sweep: 120 cells per axis over `[0, 1.2]`, fourth
    /// per-cell target fixed at 0.1.
    pub fn reference() -> Self {
        GridSpec {
            points_per_axis: 120,
            gamma_max: 1.2,
            fixed_tail: vec![0.1],
        }
    }
}

/// One evaluated grid point for one design.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gamma: [f64; 3],
    pub design: DesignKind,
    pub feasible: bool,
    pub spectral_radius: f64,
}

/// Sweep result: per-design region volumes (measured in effective-bandwidth
/// coordinates) and their ratios against the GWBE volume.
#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub volumes: Vec<(DesignKind, f64)>,
    pub grid_points: usize,
}

impl SweepSummary {
    pub fn volume(&self, design: DesignKind) -> Option<f64> {
        self.volumes
            .iter()
            .find(|(d, _)| *d == design)
            .map(|(_, v)| *v)
    }

    /// `(design, V_GWBE / V_design - 1)` for every non-GWBE design present.
    pub fn ratios_vs_gwbe(&self) -> Vec<(DesignKind, f64)> {
        let gwbe = match self.volume(DesignKind::Gwbe) {
            Some(v) => v,
            None => return Vec::new(),
        };
        self.volumes
            .iter()
            .filter(|(d, _)| *d != DesignKind::Gwbe)
            .map(|(d, v)| (*d, gwbe / v - 1.0))
            .collect()
    }
}

/// Evaluates every design on every grid cell center and accumulates region
/// volumes. Rows are delivered to `sink` in deterministic grid order
/// (axis 1 outermost, then axis 2, then axis 3, designs in input order).
///
/// The volume of a cell is the product of the per-axis increments of the
/// effective bandwidth, i.e. volumes are measured in eb-coordinates where
/// the load region is linear; this is the parametrization-stable measure
/// for the volume ratios (documented in the README).
pub fn region_sweep(
    cfg: &NetworkConfig,
    grid: &GridSpec,
    designs: &[DesignKind],
    mut sink: impl FnMut(&SweepRow),
) -> Result<SweepSummary> {
    let n = grid.points_per_axis;
    let total = n.checked_pow(3).ok_or(Error::GridTooFine(usize::MAX))?;
    if total > 10_000_000 {
        return Err(Error::GridTooFine(total));
    }
    if 3 + grid.fixed_tail.len() != cfg.users_per_cell() {
        return Err(Error::DimensionMismatch(format!(
            "3 swept + {} fixed targets != K = {}",
            grid.fixed_tail.len(),
            cfg.users_per_cell()
        )));
    }

    let power = uplink_power_control(cfg);
    let books: Vec<(DesignKind, Option<WeightedRadius>)> = designs
        .iter()
        .map(|&d| -> Result<_> {
            let book = match d {
                DesignKind::Gwbe => None,
                DesignKind::Wbe => Some(wbe_design(cfg, WbeScope::PerCell)?),
                DesignKind::Fos => Some(fos_design(cfg, &GroupingPolicy::RoundRobin)?.0),
                DesignKind::Explicit => {
                    return Err(Error::ParseError("region_sweep needs named designs".into()))
                }
            };
            Ok((d, book.map(|b| WeightedRadius::from_book(&b, cfg, &power))))
        })
        .collect::<Result<_>>()?;

    let h = grid.gamma_max / n as f64;
    let centers: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
    // Per-axis eb increments: the z-measure of each grid cell.
    let weights: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i as f64 * h;
            let hi = (i + 1) as f64 * h;
            hi / (1.0 + hi) - lo / (1.0 + lo)
        })
        .collect();

    let k_tot = cfg.k_tot();
    let mut volumes = vec![0.0f64; designs.len()];
    for (i, &g1) in centers.iter().enumerate() {
        // Parallel over the second axis; the innermost axis stays serial so
        // each task is substantial, rows stay in grid order, and the warm
        // Perron vectors track the slowly varying targets along axis 3.
        let blocks: Vec<(Vec<SweepRow>, Vec<f64>)> = centers
            .par_iter()
            .enumerate()
            .map(|(j, &g2)| {
                let mut rows = Vec::with_capacity(n * designs.len());
                let mut vols = vec![0.0f64; designs.len()];
                let mut warm = vec![vec![1.0 / k_tot as f64; k_tot]; designs.len()];
                let mut cell = vec![0.0; 3 + grid.fixed_tail.len()];
                for (k, &g3) in centers.iter().enumerate() {
                    cell[0] = g1;
                    cell[1] = g2;
                    cell[2] = g3;
                    cell[3..].copy_from_slice(&grid.fixed_tail);
                    let mut sorted = cell.clone();
                    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
                    let eb_cell: Vec<f64> =
                        sorted.iter().map(|&g| g / (1.0 + g)).collect();
                    let w = weights[i] * weights[j] * weights[k];
                    for (d_idx, (design, oracle)) in books.iter().enumerate() {
                        let (feasible, radius) = match oracle {
                            None => {
                                let v = gwbe_cell_verdict(&eb_cell, cfg);
                                (v.feasible, v.spectral_radius)
                            }
                            Some(orc) => {
                                let radius = orc
                                    .radius(&eb_cell, &mut warm[d_idx])
                                    .expect("oracle on sweep grid");
                                (radius <= 1.0 + FEAS_TOL, radius)
                            }
                        };
                        if feasible {
                            vols[d_idx] += w;
                        }
                        rows.push(SweepRow {
                            gamma: [g1, g2, g3],
                            design: *design,
                            feasible,
                            spectral_radius: radius,
                        });
                    }
                }
                (rows, vols)
            })
            .collect();
        for (rows, vols) in blocks {
            for row in &rows {
                sink(row);
            }
            for (acc, v) in volumes.iter_mut().zip(vols) {
                *acc += v;
            }
        }
    }

    Ok(SweepSummary {
        volumes: designs.iter().copied().zip(volumes).collect(),
        grid_points: total,
    })
}

/// The eb-independent part of the oracle matrix for one book:
/// `W[u,v] = rho_{u,v}^2 p_u beta[u,cell(v)]^2 / beta[u,cell(u)]`, so that
/// the oracle matrix at targets `g` is `diag(eb(g)) W`. Sweeps re-evaluate
/// the radius for many eb vectors against the same `W`, warm-starting the
/// Perron vector from the neighbouring grid point.
struct WeightedRadius {
    w: Vec<f64>,
    n: usize,
    users_per_cell: usize,
}

impl WeightedRadius {
    fn from_book(book: &PilotBook, cfg: &NetworkConfig, power: &PowerAllocation) -> Self {
        let n = cfg.k_tot();
        let gram = book.gram();
        let mut w = vec![0.0f64; n * n];
        for u in 0..n {
            let own = cfg.beta_own(u);
            for v in 0..n {
                let rho = gram[(u, v)];
                let bc = cfg.beta(u, cfg.cell_of(v));
                w[u * n + v] = rho * rho * power.uplink[u] * bc * bc / own;
            }
        }
        WeightedRadius {
            w,
            n,
            users_per_cell: cfg.users_per_cell(),
        }
    }

    /// Radius of `diag(eb) W` where `eb_cell` holds one cell's effective
    /// bandwidths (identical cells, slot order matching the book columns).
    fn radius(&self, eb_cell: &[f64], x: &mut [f64]) -> Result<f64> {
        let n = self.n;
        let mut y = vec![0.0f64; n];
        let mut last = f64::INFINITY;
        for iter in 0..POWER_ITER_CAP {
            for (i, yi) in y.iter_mut().enumerate() {
                let row = &self.w[i * n..(i + 1) * n];
                let mut acc = 0.0;
                for (rv, xv) in row.iter().zip(x.iter()) {
                    acc += rv * xv;
                }
                *yi = acc * eb_cell[i % self.users_per_cell];
            }
            let norm: f64 = y.iter().sum();
            if !norm.is_finite() {
                return Err(Error::NonConvergence(iter));
            }
            if norm <= 0.0 {
                return Ok(0.0);
            }
            for (xi, yi) in x.iter_mut().zip(&y) {
                *xi = yi / norm;
            }
            if (norm - last).abs() <= POWER_ITER_TOL * norm.max(1.0) {
                return Ok(norm);
            }
            last = norm;
        }
        Err(Error::NonConvergence(POWER_ITER_CAP))
    }
}

fn gwbe_cell_verdict(eb_cell: &[f64], cfg: &NetworkConfig) -> RegionVerdict {
    let budget = cfg.pilot_len() as f64 / cfg.cells() as f64;
    let utilization = eb_cell.iter().sum::<f64>() / budget;
    if utilization > 1.0 + FEAS_TOL {
        return RegionVerdict {
            feasible: false,
            spectral_radius: utilization,
            binding: Binding::GwbeBudget,
            witness_power: None,
        };
    }
    let cap = 1.0 / cfg.cells() as f64;
    let worst = eb_cell.iter().fold(0.0f64, |a, &b| a.max(b));
    if worst > cap + FEAS_TOL {
        return RegionVerdict {
            feasible: false,
            spectral_radius: worst / cap,
            binding: Binding::Cap,
            witness_power: None,
        };
    }
    RegionVerdict {
        feasible: true,
        spectral_radius: utilization,
        binding: Binding::GwbeBudget,
        witness_power: None,
    }
}
