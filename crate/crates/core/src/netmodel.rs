//! Core domain types, user indexing, and configuration ingestion.
//!
//! The configuration format is a flat key/value text document (see the repo
//! README for the key table). All powers and gains are linear, never dB.

use crate::{Error, Result};
use ndarray::Array2;
use std::fmt::Write as _;
use std::ops::Range;

/// Unit-norm tolerance for pilot book columns.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Number of base-station antennas, or the asymptotic regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Antennas {
    Finite(u32),
    Asymptotic,
}

/// Which construction produced a pilot book.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DesignKind {
    Gwbe,
    Wbe,
    Fos,
    Explicit,
}

impl DesignKind {
    pub fn tag(&self) -> &'static str {
        match self {
            DesignKind::Gwbe => "GWBE",
            DesignKind::Wbe => "WBE",
            DesignKind::Fos => "FOS",
            DesignKind::Explicit => "EXPLICIT",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag.to_ascii_uppercase().as_str() {
            "GWBE" => Ok(DesignKind::Gwbe),
            "WBE" => Ok(DesignKind::Wbe),
            "FOS" => Ok(DesignKind::Fos),
            "EXPLICIT" => Ok(DesignKind::Explicit),
            other => Err(Error::ParseError(format!("unknown design tag `{other}`"))),
        }
    }
}

/// One user, identified by 1-based cell and in-cell slot indices.
///
/// The flat index is `(cell - 1) * K + slot`, also 1-based; `index0` is the
/// corresponding 0-based position used for array access.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UserId {
    pub cell: usize,
    pub slot: usize,
}

impl UserId {
    pub fn new(cell: usize, slot: usize) -> Self {
        assert!(cell >= 1 && slot >= 1, "UserId indices are 1-based");
        UserId { cell, slot }
    }

    pub fn flat(&self, users_per_cell: usize) -> usize {
        (self.cell - 1) * users_per_cell + self.slot
    }

    pub fn index0(&self, users_per_cell: usize) -> usize {
        self.flat(users_per_cell) - 1
    }

    pub fn from_flat(flat: usize, users_per_cell: usize) -> Self {
        assert!(flat >= 1, "flat index is 1-based");
        UserId {
            cell: (flat - 1) / users_per_cell + 1,
            slot: (flat - 1) % users_per_cell + 1,
        }
    }

    pub fn from_index0(idx: usize, users_per_cell: usize) -> Self {
        Self::from_flat(idx + 1, users_per_cell)
    }
}

/// Static description of the network: cell/user/antenna counts, pilot
/// length, noise variances and the large-scale gain tensor.
///
/// `beta[(u, l)]` is the linear large-scale gain from user `u` (0-based flat
/// index) to the base station of cell `l` (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    cells: usize,
    users_per_cell: usize,
    pilot_len: usize,
    antennas: Antennas,
    sigma_w2: f64,
    sigma_n2: f64,
    beta: Array2<f64>,
}

impl NetworkConfig {
    /// Builds a config with the (own-cell, cross-cell) scalar gain shorthand.
    #[allow(clippy::too_many_arguments)]
    pub fn with_uniform_gains(
        cells: usize,
        users_per_cell: usize,
        pilot_len: usize,
        antennas: Antennas,
        sigma_w2: f64,
        sigma_n2: f64,
        own_gain: f64,
        cross_gain: f64,
    ) -> Result<Self> {
        let k_tot = cells * users_per_cell;
        let mut beta = Array2::zeros((k_tot, cells));
        for u in 0..k_tot {
            let own = u / users_per_cell;
            for l in 0..cells {
                beta[(u, l)] = if l == own { own_gain } else { cross_gain };
            }
        }
        Self::new(
            cells,
            users_per_cell,
            pilot_len,
            antennas,
            sigma_w2,
            sigma_n2,
            beta,
        )
    }

    pub fn new(
        cells: usize,
        users_per_cell: usize,
        pilot_len: usize,
        antennas: Antennas,
        sigma_w2: f64,
        sigma_n2: f64,
        beta: Array2<f64>,
    ) -> Result<Self> {
        if cells < 1 || users_per_cell < 1 {
            return Err(Error::DimensionMismatch(
                "L and K must both be at least 1".into(),
            ));
        }
        if pilot_len < 1 {
            return Err(Error::TauOutOfRange {
                tau: pilot_len,
                k: users_per_cell,
            });
        }
        if let Antennas::Finite(nt) = antennas {
            if nt < 1 {
                return Err(Error::DimensionMismatch("Nt must be at least 1".into()));
            }
        }
        if !(sigma_w2.is_finite() && sigma_w2 >= 0.0) || !(sigma_n2.is_finite() && sigma_n2 >= 0.0)
        {
            return Err(Error::ParseError(
                "noise variances must be finite and non-negative".into(),
            ));
        }
        let k_tot = cells * users_per_cell;
        if beta.dim() != (k_tot, cells) {
            return Err(Error::DimensionMismatch(format!(
                "beta must be {k_tot} x {cells}, got {} x {}",
                beta.dim().0,
                beta.dim().1
            )));
        }
        // Cross-cell gains may exceed own-cell gains; only positivity is required.
        for (idx, &b) in beta.indexed_iter() {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::NonPositiveGain(format!(
                    "beta[({}, {})] = {b}",
                    idx.0, idx.1
                )));
            }
        }
        Ok(NetworkConfig {
            cells,
            users_per_cell,
            pilot_len,
            antennas,
            sigma_w2,
            sigma_n2,
            beta,
        })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn users_per_cell(&self) -> usize {
        self.users_per_cell
    }

    pub fn k_tot(&self) -> usize {
        self.cells * self.users_per_cell
    }

    pub fn pilot_len(&self) -> usize {
        self.pilot_len
    }

    pub fn antennas(&self) -> Antennas {
        self.antennas
    }

    pub fn sigma_w2(&self) -> f64 {
        self.sigma_w2
    }

    pub fn sigma_n2(&self) -> f64 {
        self.sigma_n2
    }

    /// Gain from flat user index `u` (0-based) to the BS of cell `l` (0-based).
    pub fn beta(&self, u: usize, l: usize) -> f64 {
        self.beta[(u, l)]
    }

    /// Own-cell gain of flat user index `u` (0-based).
    pub fn beta_own(&self, u: usize) -> f64 {
        self.beta[(u, self.cell_of(u))]
    }

    /// 0-based cell index of flat user index `u` (0-based).
    pub fn cell_of(&self, u: usize) -> usize {
        u / self.users_per_cell
    }

    /// Returns a copy with a different antenna count.
    pub fn with_antennas(&self, antennas: Antennas) -> Self {
        let mut c = self.clone();
        c.antennas = antennas;
        c
    }

    /// Returns a copy with a different cell count, keeping the per-cell
    /// layout and the (own, cross) gain structure when it is uniform.
    pub fn with_cells(&self, cells: usize) -> Result<Self> {
        let (own, cross) = self
            .uniform_gains()
            .ok_or_else(|| Error::DimensionMismatch("beta tensor is not uniform".into()))?;
        Self::with_uniform_gains(
            cells,
            self.users_per_cell,
            self.pilot_len,
            self.antennas,
            self.sigma_w2,
            self.sigma_n2,
            own,
            cross,
        )
    }

    /// `(own, cross)` when the gain tensor has the two-level structure.
    pub fn uniform_gains(&self) -> Option<(f64, f64)> {
        let own = self.beta[(0, 0)];
        let cross = if self.cells > 1 {
            self.beta[(0, 1)]
        } else {
            own
        };
        for u in 0..self.k_tot() {
            for l in 0..self.cells {
                let expect = if l == self.cell_of(u) { own } else { cross };
                if self.beta[(u, l)] != expect {
                    return None;
                }
            }
        }
        Some((own, cross))
    }

    /// Serializes to the flat key/value text format; `load_config` restores
    /// an identical value (floats are printed in shortest round-trip form).
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "L = {}", self.cells);
        let _ = writeln!(s, "K = {}", self.users_per_cell);
        let _ = writeln!(s, "tau = {}", self.pilot_len);
        match self.antennas {
            Antennas::Finite(nt) => {
                let _ = writeln!(s, "Nt = {nt}");
            }
            Antennas::Asymptotic => {
                let _ = writeln!(s, "Nt = asymptotic");
            }
        }
        let _ = writeln!(s, "sigma_w2 = {}", self.sigma_w2);
        let _ = writeln!(s, "sigma_n2 = {}", self.sigma_n2);
        match self.uniform_gains() {
            Some((own, cross)) => {
                let _ = writeln!(s, "beta_own = {own}");
                let _ = writeln!(s, "beta_cross = {cross}");
            }
            None => {
                let rows: Vec<String> = (0..self.k_tot())
                    .map(|u| {
                        (0..self.cells)
                            .map(|l| self.beta[(u, l)].to_string())
                            .collect::<Vec<_>>()
                            .join(" ")
                    })
                    .collect();
                let _ = writeln!(s, "beta = {}", rows.join(" ; "));
            }
        }
        s
    }
}

/// Per-user SINR requirements, grouped by cell and stored descending within
/// each cell (slot 1 carries the largest target).
#[derive(Debug, Clone, PartialEq)]
pub struct SinrTargets {
    per_cell: Vec<Vec<f64>>,
    inflated: Option<Vec<Vec<f64>>>,
}

impl SinrTargets {
    /// Builds targets from per-cell vectors; each cell is sorted descending.
    pub fn from_cells(cells: Vec<Vec<f64>>) -> Result<Self> {
        if cells.is_empty() || cells.iter().any(|c| c.is_empty()) {
            return Err(Error::DimensionMismatch("targets must be non-empty".into()));
        }
        let k = cells[0].len();
        if cells.iter().any(|c| c.len() != k) {
            return Err(Error::DimensionMismatch(
                "all cells must have the same number of targets".into(),
            ));
        }
        let mut per_cell = cells;
        for cell in &mut per_cell {
            if cell.iter().any(|&g| !(g.is_finite() && g > 0.0)) {
                return Err(Error::NonPositiveTarget);
            }
            cell.sort_by(|a, b| b.partial_cmp(a).unwrap());
        }
        Ok(SinrTargets {
            per_cell,
            inflated: None,
        })
    }

    /// Attaches explicit inflated targets; they must dominate the base
    /// targets elementwise and be descending within each cell.
    pub fn with_inflated(mut self, inflated: Vec<Vec<f64>>) -> Result<Self> {
        if inflated.len() != self.per_cell.len()
            || inflated
                .iter()
                .zip(&self.per_cell)
                .any(|(a, b)| a.len() != b.len())
        {
            return Err(Error::DimensionMismatch(
                "inflated targets must match the base layout".into(),
            ));
        }
        for (cell, (hat, base)) in inflated.iter().zip(&self.per_cell).enumerate() {
            for (h, g) in hat.iter().zip(base) {
                if !(h.is_finite() && *h > 0.0) {
                    return Err(Error::NonPositiveTarget);
                }
                if h < g {
                    return Err(Error::RegionViolation {
                        cell: cell + 1,
                        used: *h,
                        budget: *g,
                    });
                }
            }
            if hat.windows(2).any(|w| w[0] < w[1]) {
                return Err(Error::NotSorted);
            }
        }
        self.inflated = Some(inflated);
        Ok(self)
    }

    pub fn cells(&self) -> usize {
        self.per_cell.len()
    }

    pub fn users_per_cell(&self) -> usize {
        self.per_cell[0].len()
    }

    pub fn cell(&self, l: usize) -> &[f64] {
        &self.per_cell[l]
    }

    pub fn inflated(&self) -> Option<&Vec<Vec<f64>>> {
        self.inflated.as_ref()
    }

    /// Flat per-user targets in slot order.
    pub fn gamma_flat(&self) -> Vec<f64> {
        self.per_cell.iter().flatten().copied().collect()
    }

    /// Flat inflated targets, if present.
    pub fn inflated_flat(&self) -> Option<Vec<f64>> {
        self.inflated
            .as_ref()
            .map(|v| v.iter().flatten().copied().collect())
    }

    pub fn target(&self, user: UserId) -> f64 {
        self.per_cell[user.cell - 1][user.slot - 1]
    }
}

/// Downlink powers `P` (>= 0, zero meaning unset) and uplink pilot powers
/// `p` (> 0), per flat user index.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub downlink: Vec<f64>,
    pub uplink: Vec<f64>,
}

impl PowerAllocation {
    pub fn new(downlink: Vec<f64>, uplink: Vec<f64>) -> Result<Self> {
        if downlink.len() != uplink.len() {
            return Err(Error::LengthMismatch(downlink.len(), uplink.len()));
        }
        if downlink.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::ParseError(
                "downlink powers must be finite and non-negative".into(),
            ));
        }
        if uplink.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::NonPositiveGain("uplink pilot power".into()));
        }
        Ok(PowerAllocation { downlink, uplink })
    }

    pub fn downlink_is_set(&self) -> bool {
        self.downlink.iter().any(|&p| p > 0.0)
    }
}

/// Uplink power control: `p_u = 1 / beta_own(u)`, so the own-cell uplink
/// gain is exactly one for every user. Downlink powers are left unset.
pub fn uplink_power_control(cfg: &NetworkConfig) -> PowerAllocation {
    let uplink: Vec<f64> = (0..cfg.k_tot()).map(|u| 1.0 / cfg.beta_own(u)).collect();
    PowerAllocation {
        downlink: vec![0.0; cfg.k_tot()],
        uplink,
    }
}

/// Per-user `delta` values from the MRT normalization (Eq. 7 denominator):
/// contamination power plus uplink noise, each entry at least `sigma_n2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaVector {
    pub values: Vec<f64>,
}

/// The network pilot matrix: `tau x K_tot` unit-norm real columns with
/// per-cell column blocks and the design that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBook {
    q: Array2<f64>,
    design: DesignKind,
    cell_blocks: Vec<Range<usize>>,
}

impl PilotBook {
    pub fn new(q: Array2<f64>, design: DesignKind, cell_blocks: Vec<Range<usize>>) -> Result<Self> {
        let (tau, k_tot) = q.dim();
        if tau < 1 || k_tot < 1 {
            return Err(Error::DimensionMismatch("empty pilot matrix".into()));
        }
        let mut expect = 0usize;
        for b in &cell_blocks {
            if b.start != expect || b.end <= b.start {
                return Err(Error::DimensionMismatch(
                    "cell blocks must partition the columns".into(),
                ));
            }
            expect = b.end;
        }
        if expect != k_tot {
            return Err(Error::DimensionMismatch(
                "cell blocks must cover every column".into(),
            ));
        }
        let book = PilotBook {
            q,
            design,
            cell_blocks,
        };
        let res = book.max_unit_norm_residual();
        if res > UNIT_NORM_TOL {
            return Err(Error::DimensionMismatch(format!(
                "pilot columns must be unit-norm; worst residual {res:.3e}"
            )));
        }
        Ok(book)
    }

    pub fn q(&self) -> &Array2<f64> {
        &self.q
    }

    pub fn design(&self) -> DesignKind {
        self.design
    }

    pub fn cell_blocks(&self) -> &[Range<usize>] {
        &self.cell_blocks
    }

    pub fn tau(&self) -> usize {
        self.q.dim().0
    }

    pub fn k_tot(&self) -> usize {
        self.q.dim().1
    }

    /// Correlation `rho_{u,v} = q_u^T q_v` for 0-based flat indices.
    pub fn correlation(&self, u: usize, v: usize) -> f64 {
        self.q.column(u).dot(&self.q.column(v))
    }

    /// Full Gram matrix `Q^T Q`.
    pub fn gram(&self) -> Array2<f64> {
        self.q.t().dot(&self.q)
    }

    /// Largest deviation of any column norm from one.
    pub fn max_unit_norm_residual(&self) -> f64 {
        (0..self.k_tot())
            .map(|j| (self.q.column(j).dot(&self.q.column(j)).sqrt() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Plain-text export: a header line with `tau`, `K_tot`, the design tag
    /// and the cell count, then `tau` rows of 17-significant-digit entries.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "tau={} k_tot={} design={} cells={}\n",
            self.tau(),
            self.k_tot(),
            self.design.tag(),
            self.cell_blocks.len()
        );
        for r in 0..self.tau() {
            let row: Vec<String> = (0..self.k_tot())
                .map(|c| format!("{:.16e}", self.q[(r, c)]))
                .collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (q, design, cells) = Self::parse_text(text)?;
        let k_tot = q.dim().1;
        let per = k_tot / cells;
        let blocks = (0..cells).map(|l| l * per..(l + 1) * per).collect();
        PilotBook::new(q, design, blocks)
    }

    /// Parses the text format without the unit-norm validation, so that
    /// diagnostic tooling can report residuals on corrupted books.
    pub fn parse_text(text: &str) -> Result<(Array2<f64>, DesignKind, usize)> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::ParseError("empty pilot book".into()))?;
        let mut tau = None;
        let mut k_tot = None;
        let mut design = None;
        let mut cells = None;
        for field in header.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::ParseError(format!("bad header field `{field}`")))?;
            match key {
                "tau" => tau = Some(parse_usize(value)?),
                "k_tot" => k_tot = Some(parse_usize(value)?),
                "design" => design = Some(DesignKind::from_tag(value)?),
                "cells" => cells = Some(parse_usize(value)?),
                other => return Err(Error::ParseError(format!("unknown header key `{other}`"))),
            }
        }
        let (tau, k_tot, design, cells) = match (tau, k_tot, design, cells) {
            (Some(t), Some(k), Some(d), Some(c)) => (t, k, d, c),
            _ => return Err(Error::ParseError("incomplete pilot book header".into())),
        };
        if cells == 0 || k_tot % cells != 0 {
            return Err(Error::ParseError(
                "cell count must divide the column count".into(),
            ));
        }
        let mut data = Vec::with_capacity(tau * k_tot);
        for _ in 0..tau {
            let line = lines
                .next()
                .ok_or_else(|| Error::ParseError("pilot book has too few rows".into()))?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|e| Error::ParseError(format!("bad number `{t}`: {e}")))
                })
                .collect::<Result<_>>()?;
            if row.len() != k_tot {
                return Err(Error::ParseError(format!(
                    "expected {k_tot} entries per row, got {}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        let q = Array2::from_shape_vec((tau, k_tot), data)
            .map_err(|e| Error::ParseError(e.to_string()))?;
        Ok((q, design, cells))
    }
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse::<usize>()
        .map_err(|e| Error::ParseError(format!("bad integer `{s}`: {e}")))
}

/// A parsed configuration document: the network plus optional SINR targets
/// (`gamma`, and `gamma_hat` for explicit inflated replays).
#[derive(Debug, Clone)]
pub struct ConfigDoc {
    pub network: NetworkConfig,
    pub targets: Option<SinrTargets>,
}

/// Parses the network portion of a config document.
pub fn load_config(text: &str) -> Result<NetworkConfig> {
    Ok(parse_document(text)?.network)
}

/// Parses a full config document (network plus optional targets).
///
/// Recognized keys: `L`, `K`, `tau`, `Nt`, `sigma_w2`, `sigma_n2`,
/// `beta_own`/`beta_cross` or a full `beta` tensor (rows separated by `;`),
/// and optional `gamma` / `gamma_hat` per-cell target rows.
pub fn parse_document(text: &str) -> Result<ConfigDoc> {
    let mut kv = std::collections::BTreeMap::new();
    for raw in text.lines() {
        let line = match raw.split_once('#') {
            Some((body, _)) => body,
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::ParseError(format!("expected `key = value`, got `{line}`")))?;
        kv.insert(key.trim().to_string(), value.trim().to_string());
    }

    let need = |k: &str| -> Result<&String> { kv.get(k).ok_or(Error::MissingKey(k.into())) };
    let cells = parse_usize(need("L")?)?;
    let users = parse_usize(need("K")?)?;
    let tau = parse_usize(need("tau")?)?;
    let antennas = match need("Nt")?.as_str() {
        "asymptotic" | "inf" => Antennas::Asymptotic,
        n => Antennas::Finite(
            n.parse::<u32>()
                .map_err(|e| Error::ParseError(format!("bad Nt `{n}`: {e}")))?,
        ),
    };
    let parse_f64 = |k: &str| -> Result<f64> {
        need(k)?
            .parse::<f64>()
            .map_err(|e| Error::ParseError(format!("bad value for `{k}`: {e}")))
    };
    let sigma_w2 = parse_f64("sigma_w2")?;
    let sigma_n2 = if kv.contains_key("sigma_n2") {
        parse_f64("sigma_n2")?
    } else {
        1.0
    };

    let network = if kv.contains_key("beta") {
        let rows = parse_rows(kv.get("beta").unwrap())?;
        let k_tot = cells * users;
        if rows.len() != k_tot || rows.iter().any(|r| r.len() != cells) {
            return Err(Error::DimensionMismatch(format!(
                "beta must have {k_tot} rows of {cells} entries"
            )));
        }
        let beta = Array2::from_shape_vec((k_tot, cells), rows.into_iter().flatten().collect())
            .map_err(|e| Error::ParseError(e.to_string()))?;
        NetworkConfig::new(cells, users, tau, antennas, sigma_w2, sigma_n2, beta)?
    } else {
        let own = parse_f64("beta_own")?;
        // Single-cell networks may omit the cross gain.
        let cross = if cells > 1 || kv.contains_key("beta_cross") {
            parse_f64("beta_cross")?
        } else {
            own
        };
        if own <= 0.0 || cross <= 0.0 {
            return Err(Error::NonPositiveGain("beta_own / beta_cross".into()));
        }
        NetworkConfig::with_uniform_gains(
            cells, users, tau, antennas, sigma_w2, sigma_n2, own, cross,
        )?
    };

    let targets = match kv.get("gamma") {
        Some(g) => {
            let rows = parse_rows(g)?;
            if rows.len() != cells || rows.iter().any(|r| r.len() != users) {
                return Err(Error::DimensionMismatch(format!(
                    "gamma must have {cells} cells of {users} targets"
                )));
            }
            let mut t = SinrTargets::from_cells(rows)?;
            if let Some(gh) = kv.get("gamma_hat") {
                let rows = parse_rows(gh)?;
                if rows.len() != cells || rows.iter().any(|r| r.len() != users) {
                    return Err(Error::DimensionMismatch(format!(
                        "gamma_hat must have {cells} cells of {users} targets"
                    )));
                }
                t = t.with_inflated(rows)?;
            }
            Some(t)
        }
        None => None,
    };

    Ok(ConfigDoc { network, targets })
}

fn parse_rows(s: &str) -> Result<Vec<Vec<f64>>> {
    s.split(';')
        .map(|row| {
            row.split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|e| Error::ParseError(format!("bad number `{t}`: {e}")))
                })
                .collect()
        })
        .collect()
}
