//! Closed-form SINR evaluation (finite antennas and the asymptotic limit)
//! and the Monte-Carlo link-level simulator used as an independent oracle.
//!
//! The Monte-Carlo estimator follows the mean-signal / effective-noise
//! decomposition of the downlink model: the useful signal is the
//! statistical-mean term of the MRT-precoded channel, and everything else
//! (precoder fluctuation, inter- and intra-cell interference, receiver
//! noise) is accumulated as effective noise. Trials use counter-based
//! per-(trial, user, cell) RNG streams, so results are bit-identical for a
//! fixed seed regardless of how trials are scheduled across threads.

use crate::netmodel::{DeltaVector, NetworkConfig, PilotBook, PowerAllocation};
use crate::{Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Denominators at or below this count as pilot-contamination-free and map
/// to an infinite asymptotic SINR, never NaN.
pub const DENOM_EPS: f64 = 1e-12;

/// Number of equal batches used for the Monte-Carlo confidence interval and
/// for the fixed parallel reduction tree.
const MC_BATCHES: u64 = 20;

/// How a [`SinrResult`] was produced.
#[derive(Debug, Clone, PartialEq)]
pub enum SinrMode {
    Finite(u32),
    Asymptotic,
    MonteCarlo { nt: u32, trials: u64, seed: u64 },
}

/// Per-user achievable SINR (linear); `ci_halfwidth` is present for
/// Monte-Carlo results (95% confidence half-widths, batch-means estimate).
#[derive(Debug, Clone, PartialEq)]
pub struct SinrResult {
    pub sinr: Vec<f64>,
    pub mode: SinrMode,
    pub ci_halfwidth: Option<Vec<f64>>,
}

fn check_sizes(book: &PilotBook, power: &PowerAllocation, cfg: &NetworkConfig) -> Result<()> {
    if book.k_tot() != cfg.k_tot() {
        return Err(Error::DimensionMismatch(format!(
            "book has {} columns for {} users",
            book.k_tot(),
            cfg.k_tot()
        )));
    }
    if power.uplink.len() != cfg.k_tot() || power.downlink.len() != cfg.k_tot() {
        return Err(Error::LengthMismatch(power.uplink.len(), cfg.k_tot()));
    }
    Ok(())
}

/// `delta_u = sum_v p_v beta[v, cell(u)] rho_{v,u}^2 + sigma_n^2`: the
/// channel-hardening limit of `||g_hat||^2 / N_t` for user `u`.
pub fn delta_vector(
    book: &PilotBook,
    power: &PowerAllocation,
    cfg: &NetworkConfig,
) -> Result<DeltaVector> {
    check_sizes(book, power, cfg)?;
    let k_tot = cfg.k_tot();
    let gram = book.gram();
    let values = (0..k_tot)
        .map(|u| {
            let cell = cfg.cell_of(u);
            let contamination: f64 = (0..k_tot)
                .map(|v| {
                    let rho = gram[(v, u)];
                    power.uplink[v] * cfg.beta(v, cell) * rho * rho
                })
                .sum();
            contamination + cfg.sigma_n2()
        })
        .collect();
    Ok(DeltaVector { values })
}

/// Finite-antenna achievable SINR under LS estimation and MRT precoding.
pub fn sinr_finite(
    book: &PilotBook,
    power: &PowerAllocation,
    delta: &DeltaVector,
    cfg: &NetworkConfig,
    nt: u32,
) -> Result<SinrResult> {
    let sinr = sinr_finite_values(book, power, delta, cfg, nt as f64)?;
    Ok(SinrResult {
        sinr,
        mode: SinrMode::Finite(nt),
        ci_halfwidth: None,
    })
}

/// Shared closed-form evaluator; `nt` is real-valued so threshold crossings
/// can be solved by bisection between integer grid points.
pub fn sinr_finite_values(
    book: &PilotBook,
    power: &PowerAllocation,
    delta: &DeltaVector,
    cfg: &NetworkConfig,
    nt: f64,
) -> Result<Vec<f64>> {
    check_sizes(book, power, cfg)?;
    if !power.downlink_is_set() {
        return Err(Error::UnsetPower);
    }
    if delta.values.len() != cfg.k_tot() {
        return Err(Error::LengthMismatch(delta.values.len(), cfg.k_tot()));
    }
    let k_tot = cfg.k_tot();
    let gram = book.gram();
    let mut out = Vec::with_capacity(k_tot);
    for u in 0..k_tot {
        let own = cfg.cell_of(u);
        let mut contamination = 0.0;
        let mut total_power = 0.0;
        for v in 0..k_tot {
            let bc = cfg.beta(u, cfg.cell_of(v));
            total_power += bc * power.downlink[v];
            if v != u {
                let rho = gram[(u, v)];
                contamination +=
                    rho * rho * power.uplink[u] * bc * bc * power.downlink[v] / delta.values[v];
            }
        }
        let pbar = total_power + cfg.sigma_w2();
        let denom = delta.values[u] * (contamination + pbar / nt);
        out.push(cfg.beta(u, own) * power.downlink[u] / denom);
    }
    Ok(out)
}

/// Asymptotic (`N_t -> infinity`) achievable SINR; users whose denominator
/// collapses are pilot-contamination-free and report `+inf`.
pub fn sinr_asymptotic(
    book: &PilotBook,
    power: &PowerAllocation,
    delta: &DeltaVector,
    cfg: &NetworkConfig,
) -> Result<SinrResult> {
    check_sizes(book, power, cfg)?;
    if !power.downlink_is_set() {
        return Err(Error::UnsetPower);
    }
    let k_tot = cfg.k_tot();
    let gram = book.gram();
    let mut sinr = Vec::with_capacity(k_tot);
    for u in 0..k_tot {
        let own = cfg.cell_of(u);
        let signal = cfg.beta(u, own) * power.downlink[u];
        let mut total = 0.0;
        for v in 0..k_tot {
            let rho = gram[(u, v)];
            let bc = cfg.beta(u, cfg.cell_of(v));
            total += rho * rho * power.uplink[u] * bc * bc * power.downlink[v] / delta.values[v];
        }
        let denom = delta.values[u] * total - signal;
        sinr.push(if denom <= DENOM_EPS {
            f64::INFINITY
        } else {
            signal / denom
        });
    }
    Ok(SinrResult {
        sinr,
        mode: SinrMode::Asymptotic,
        ci_halfwidth: None,
    })
}

/// The power-control lower bound on the asymptotic SINR:
/// `P_u / (delta_u q_u^T (sum_v (P_v/delta_v) q_v q_v^T) q_u - P_u)`.
///
/// For a GWBE book with the matching power rule this returns the inflated
/// targets exactly; with cross-cell gains at most the own-cell gains it
/// lower-bounds [`sinr_asymptotic`].
pub fn sinr_lower_bound_asym(
    book: &PilotBook,
    power: &PowerAllocation,
    delta: &DeltaVector,
    cfg: &NetworkConfig,
) -> Result<SinrResult> {
    check_sizes(book, power, cfg)?;
    if !power.downlink_is_set() {
        return Err(Error::UnsetPower);
    }
    let k_tot = cfg.k_tot();
    let gram = book.gram();
    let mut sinr = Vec::with_capacity(k_tot);
    for u in 0..k_tot {
        let mut quad = 0.0;
        for v in 0..k_tot {
            let rho = gram[(u, v)];
            quad += rho * rho * power.downlink[v] / delta.values[v];
        }
        let denom = delta.values[u] * quad - power.downlink[u];
        sinr.push(if denom <= DENOM_EPS {
            f64::INFINITY
        } else {
            power.downlink[u] / denom
        });
    }
    Ok(SinrResult {
        sinr,
        mode: SinrMode::Asymptotic,
        ci_halfwidth: None,
    })
}

/// Smallest real-valued antenna count at which user `user0` (0-based flat
/// index) reaches `gamma`, by bisection on the closed form; `None` when even
/// the asymptote stays below the target. The SINR is strictly increasing in
/// `nt`, so the crossing is unique.
pub fn threshold_crossing(
    book: &PilotBook,
    power: &PowerAllocation,
    delta: &DeltaVector,
    cfg: &NetworkConfig,
    user0: usize,
    gamma: f64,
) -> Result<Option<f64>> {
    let asym = sinr_asymptotic(book, power, delta, cfg)?;
    if asym.sinr[user0] < gamma {
        return Ok(None);
    }
    let phi = |nt: f64| -> Result<f64> {
        Ok(sinr_finite_values(book, power, delta, cfg, nt)?[user0])
    };
    let mut lo = 1.0f64;
    if phi(lo)? >= gamma {
        return Ok(Some(lo));
    }
    let mut hi = 2.0f64;
    while phi(hi)? < gamma {
        hi *= 2.0;
        if hi > 1e12 {
            return Ok(None);
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if phi(mid)? >= gamma {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

// ---------------------------------------------------------------------------
// Monte-Carlo simulator
// ---------------------------------------------------------------------------

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Fresh RNG for one (trial, entity) pair; entity indices separate channel
/// draws from estimation-noise draws so the streams never overlap.
fn stream_rng(seed: u64, trial: u64, entity: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(trial)));
    rng.set_stream(entity);
    rng
}

fn draw_cn01(rng: &mut ChaCha8Rng, out: &mut [Complex64]) {
    // CN(0,1): real and imaginary parts N(0, 1/2).
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for v in out.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v = Complex64::new(re * s, im * s);
    }
}

#[derive(Clone)]
struct McAccumulator {
    /// Sum over trials of the precoded own-channel coefficient.
    sum_signal: Vec<Complex64>,
    /// Sum of its squared magnitude.
    sum_signal2: Vec<f64>,
    /// Sum of interference power received from all other users.
    sum_interference: Vec<f64>,
    trials: u64,
}

impl McAccumulator {
    fn new(k_tot: usize) -> Self {
        McAccumulator {
            sum_signal: vec![Complex64::new(0.0, 0.0); k_tot],
            sum_signal2: vec![0.0; k_tot],
            sum_interference: vec![0.0; k_tot],
            trials: 0,
        }
    }

    fn merge(&mut self, other: &McAccumulator) {
        for (a, b) in self.sum_signal.iter_mut().zip(&other.sum_signal) {
            *a += b;
        }
        for (a, b) in self.sum_signal2.iter_mut().zip(&other.sum_signal2) {
            *a += b;
        }
        for (a, b) in self.sum_interference.iter_mut().zip(&other.sum_interference) {
            *a += b;
        }
        self.trials += other.trials;
    }

    fn sinr(&self, power: &PowerAllocation, sigma_w2: f64) -> Vec<f64> {
        let t = self.trials as f64;
        (0..self.sum_signal.len())
            .map(|u| {
                let mean = self.sum_signal[u] / t;
                let signal = mean.norm_sqr() * power.downlink[u];
                let var = (self.sum_signal2[u] / t - mean.norm_sqr()).max(0.0);
                let noise = var * power.downlink[u] + self.sum_interference[u] / t + sigma_w2;
                signal / noise
            })
            .collect()
    }
}

/// End-to-end Monte-Carlo SINR: draw channels, form LS estimates, MRT
/// precode, and decompose the received signal into its statistical-mean
/// part and effective noise. Returns the empirical SINR per user with a
/// 95% confidence half-width from batch means.
pub fn monte_carlo_sinr(
    book: &PilotBook,
    power: &PowerAllocation,
    cfg: &NetworkConfig,
    nt: u32,
    trials: u64,
    seed: u64,
) -> Result<SinrResult> {
    check_sizes(book, power, cfg)?;
    if !power.downlink_is_set() {
        return Err(Error::UnsetPower);
    }
    if trials < 1 {
        return Err(Error::DimensionMismatch("trials must be >= 1".into()));
    }
    let delta = delta_vector(book, power, cfg)?;
    let k_tot = cfg.k_tot();
    let cells = cfg.cells();
    let nt_usize = nt as usize;
    let gram = book.gram();

    // Uplink gains eta_{v,l} = sqrt(p_v beta[v,l]).
    let mut eta = vec![0.0; k_tot * cells];
    for v in 0..k_tot {
        for l in 0..cells {
            eta[v * cells + l] = (power.uplink[v] * cfg.beta(v, l)).sqrt();
        }
    }
    let sigma_n = cfg.sigma_n2().sqrt();

    // Fixed batch boundaries: determinism does not depend on thread count.
    let batches: Vec<(u64, u64)> = (0..MC_BATCHES)
        .map(|b| {
            let lo = trials * b / MC_BATCHES;
            let hi = trials * (b + 1) / MC_BATCHES;
            (lo, hi)
        })
        .filter(|(lo, hi)| hi > lo)
        .collect();

    let batch_accs: Vec<McAccumulator> = batches
        .par_iter()
        .map(|&(lo, hi)| {
            let mut acc = McAccumulator::new(k_tot);
            // channels h[v][l] as one flat buffer, precoders a[v]
            let mut h = vec![Complex64::new(0.0, 0.0); k_tot * cells * nt_usize];
            let mut a = vec![Complex64::new(0.0, 0.0); k_tot * nt_usize];
            let mut noise = vec![Complex64::new(0.0, 0.0); nt_usize];
            for trial in lo..hi {
                for v in 0..k_tot {
                    for l in 0..cells {
                        let entity = (v * cells + l) as u64;
                        let mut rng = stream_rng(seed, trial, entity);
                        let base = (v * cells + l) * nt_usize;
                        draw_cn01(&mut rng, &mut h[base..base + nt_usize]);
                    }
                }
                // LS estimate and MRT precoder for every user v:
                // ghat_v = sum_w eta_{w,cell(v)} rho_{w,v} h[w][cell(v)] + noise
                // a_v = ghat_v / sqrt(Nt delta_v)
                for v in 0..k_tot {
                    let cell_v = cfg.cell_of(v);
                    let mut rng = stream_rng(seed, trial, (k_tot * cells + v) as u64);
                    draw_cn01(&mut rng, &mut noise);
                    let av = &mut a[v * nt_usize..(v + 1) * nt_usize];
                    let scale = 1.0 / (nt as f64 * delta.values[v]).sqrt();
                    for (dst, n) in av.iter_mut().zip(&noise) {
                        *dst = *n * sigma_n;
                    }
                    for w in 0..k_tot {
                        let coeff = eta[w * cells + cell_v] * gram[(w, v)];
                        if coeff == 0.0 {
                            continue;
                        }
                        let hw = &h[(w * cells + cell_v) * nt_usize..][..nt_usize];
                        for (dst, hv) in av.iter_mut().zip(hw) {
                            *dst += hv * coeff;
                        }
                    }
                    for dst in av.iter_mut() {
                        *dst *= scale;
                    }
                }
                // Received coefficients: g_{u,v} = sqrt(beta[u,cell(v)]) h_{u,cell(v)}^H a_v
                for u in 0..k_tot {
                    let mut interference = 0.0;
                    for v in 0..k_tot {
                        let cell_v = cfg.cell_of(v);
                        let hu = &h[(u * cells + cell_v) * nt_usize..][..nt_usize];
                        let av = &a[v * nt_usize..(v + 1) * nt_usize];
                        let mut dot = Complex64::new(0.0, 0.0);
                        for (hv, avv) in hu.iter().zip(av) {
                            dot += hv.conj() * avv;
                        }
                        let g = dot * cfg.beta(u, cell_v).sqrt();
                        if v == u {
                            acc.sum_signal[u] += g;
                            acc.sum_signal2[u] += g.norm_sqr();
                        } else {
                            interference += g.norm_sqr() * power.downlink[v];
                        }
                    }
                    acc.sum_interference[u] += interference;
                }
                acc.trials += 1;
            }
            acc
        })
        .collect();

    // Batch means for the confidence interval; merge in fixed batch order.
    let mut total = McAccumulator::new(k_tot);
    for acc in &batch_accs {
        total.merge(acc);
    }
    let sinr = total.sinr(power, cfg.sigma_w2());
    let nb = batch_accs.len() as f64;
    let ci = (0..k_tot)
        .map(|u| {
            if batch_accs.len() < 2 {
                return f64::INFINITY;
            }
            let vals: Vec<f64> = batch_accs
                .iter()
                .map(|acc| acc.sinr(power, cfg.sigma_w2())[u])
                .collect();
            let mean = vals.iter().sum::<f64>() / nb;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nb - 1.0);
            1.96 * (var / nb).sqrt()
        })
        .collect();

    Ok(SinrResult {
        sinr,
        mode: SinrMode::MonteCarlo { nt, trials, seed },
        ci_halfwidth: Some(ci),
    })
}
