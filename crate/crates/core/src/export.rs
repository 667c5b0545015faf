//! CSV assembly shared by the library tests and the CLI.
//!
//! All files use a `#`-prefixed comment preamble naming the design(s),
//! seed, and config hash, then an RFC-4180-style header row and numeric
//! rows with '.' decimals at 17 significant digits. No timestamps unless
//! explicitly requested, so identical inputs produce identical bytes.

use crate::load_analysis::SweepRow;
use crate::netmodel::{NetworkConfig, UserId};
use crate::sinr_engine::{SinrMode, SinrResult};
use std::fmt::Write as _;

/// 17-significant-digit rendering used for every floating-point field.
pub fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

/// The standard preamble: tool tag, then `key=value` metadata.
pub fn preamble(kind: &str, meta: &[(&str, String)]) -> String {
    let mut s = format!("# pilotload {kind}\n");
    let fields: Vec<String> = meta.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let _ = writeln!(s, "# {}", fields.join(" "));
    s
}

/// FNV-1a over the raw config text; stable, cheap, and good enough to tag
/// output files with the configuration they came from.
pub fn config_hash(text: &str) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

/// SINR results in the `(cell, slot, mode, Nt, sinr, ci_halfwidth, seed)`
/// column layout. Asymptotic rows carry `inf` in the `Nt` column.
pub fn sinr_csv(results: &[(String, SinrResult)], cfg: &NetworkConfig, meta: &str) -> String {
    let mut s = String::new();
    s.push_str(meta);
    s.push_str("design,cell,slot,mode,Nt,sinr,ci_halfwidth,seed\n");
    for (design, r) in results {
        let (mode, nt, seed) = match r.mode {
            SinrMode::Finite(nt) => ("finite", nt.to_string(), String::new()),
            SinrMode::Asymptotic => ("asymptotic", "inf".into(), String::new()),
            SinrMode::MonteCarlo { nt, trials: _, seed } => {
                ("monte_carlo", nt.to_string(), seed.to_string())
            }
        };
        for (idx, &v) in r.sinr.iter().enumerate() {
            let user = UserId::from_index0(idx, cfg.users_per_cell());
            let ci = r
                .ci_halfwidth
                .as_ref()
                .map(|c| fmt_f64(c[idx]))
                .unwrap_or_else(|| "0".into());
            let _ = writeln!(
                s,
                "{design},{},{},{mode},{nt},{},{ci},{seed}",
                user.cell,
                user.slot,
                fmt_f64(v)
            );
        }
    }
    s
}

/// Sweep surface rows: `(gamma1, gamma2, gamma3, design, feasible,
/// spectral_radius)`.
pub fn sweep_row_csv_header(meta: &str) -> String {
    format!("{meta}gamma1,gamma2,gamma3,design,feasible,spectral_radius\n")
}

pub fn sweep_row_csv(row: &SweepRow) -> String {
    format!(
        "{},{},{},{},{},{}\n",
        fmt_f64(row.gamma[0]),
        fmt_f64(row.gamma[1]),
        fmt_f64(row.gamma[2]),
        row.design.tag(),
        row.feasible as u8,
        fmt_f64(row.spectral_radius)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_has_17_significant_digits() {
        let s = fmt_f64(std::f64::consts::PI);
        assert_eq!(s, "3.1415926535897931e0");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        let parsed: f64 = s.parse().unwrap();
        assert_eq!(parsed, std::f64::consts::PI);
    }

    #[test]
    fn config_hash_is_stable() {
        let a = config_hash("L = 3\nK = 4\n");
        let b = config_hash("L = 3\nK = 4\n");
        assert_eq!(a, b);
        assert_ne!(a, config_hash("L = 2\nK = 4\n"));
    }
}
