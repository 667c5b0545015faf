//! Experiment runner: builds pilot books, maps load regions, sweeps cell
//! counts and antenna counts, and validates the closed forms against the
//! Monte-Carlo simulator. Every output file is a CSV whose header names the
//! designs, the seed, and a hash of the configuration; re-running a command
//! with the same inputs produces byte-identical files.

use clap::{Args, Parser, Subcommand};
use pilotload::design_baseline::{fos_design, wbe_design, GroupingPolicy, WbeScope};
use pilotload::design_gwbe::{
    cell_gram_residual, gwbe_design, inflate_targets_capped, GwbeDesignReport,
};
use pilotload::export::{config_hash, fmt_f64, preamble, sinr_csv, sweep_row_csv, sweep_row_csv_header};
use pilotload::load_analysis::{
    feasibility_oracle, max_permitted_sinr, region_sweep, GridSpec, TargetPattern,
};
use pilotload::netmodel::{parse_document, uplink_power_control, ConfigDoc, UserId};
use pilotload::sinr_engine::{
    delta_vector, monte_carlo_sinr, sinr_asymptotic, sinr_finite, threshold_crossing,
};
use pilotload::{
    Antennas, DesignKind, Error, NetworkConfig, PilotBook, PowerAllocation, SinrTargets,
};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_CODES_HELP: &str = "\
EXIT CODES:
    0   success
    1   I/O, parse, or internal errors
    2   infeasible targets (load-region or majorization-cap violations) and
        failed `verify` checks
    3   invalid configuration (missing keys, bad dimensions, non-positive
        gains or targets, infeasible frame sizes, grids over the limit)
    4   numerical failures (non-convergence, bracket failures)

Flags can also be set through environment variables with the PILOTLOAD_
prefix (e.g. PILOTLOAD_SEED=7).";

#[derive(Parser)]
#[command(
    name = "pilotload",
    about = "Pilot sequence design and SINR analysis for multi-cell massive MIMO",
    after_long_help = EXIT_CODES_HELP,
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Network configuration file
    #[arg(long, env = "PILOTLOAD_CONFIG")]
    config: PathBuf,
    /// Output directory for CSV artifacts
    #[arg(long, default_value = "out", env = "PILOTLOAD_OUT")]
    out: PathBuf,
    /// RNG seed, recorded in every output header
    #[arg(long, default_value_t = 1, env = "PILOTLOAD_SEED")]
    seed: u64,
    /// Comma-separated designs: gwbe, wbe, fos
    #[arg(long, default_value = "gwbe,wbe,fos", env = "PILOTLOAD_DESIGNS")]
    designs: String,
    /// Add a timestamp line to file headers (off by default so outputs are
    /// byte-reproducible)
    #[arg(long, default_value_t = false)]
    stamp: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Build pilot books for the configured targets and write them with a
    /// design report
    Design {
        #[command(flatten)]
        common: CommonArgs,
        /// WBE frame scope: percell (reused per cell) or network
        #[arg(long, default_value = "percell")]
        wbe_scope: String,
    },
    /// Map the load region over a 3-target grid and report volumes/ratios
    Region {
        #[command(flatten)]
        common: CommonArgs,
        /// Grid cells per swept axis
        #[arg(long, default_value_t = 120, env = "PILOTLOAD_GRID")]
        grid: usize,
        /// Largest swept SINR target
        #[arg(long, default_value_t = 1.2)]
        gamma_max: f64,
        /// Fixed target for every remaining per-cell slot
        #[arg(long, default_value_t = 0.1)]
        gamma_fixed: f64,
    },
    /// Maximum permitted SINR versus the number of cells
    Cells {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 2)]
        lmin: usize,
        #[arg(long, default_value_t = 6)]
        lmax: usize,
    },
    /// Achievable SINR versus the antenna count, with threshold crossings
    Antennas {
        #[command(flatten)]
        common: CommonArgs,
        /// Antenna grid: start:step:end
        #[arg(long, default_value = "10:10:500")]
        nt_grid: String,
        /// User whose threshold crossing is reported, as cell:slot
        #[arg(long, default_value = "3:1")]
        user: String,
    },
    /// Compare the closed-form SINR against the Monte-Carlo simulator
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        /// Monte-Carlo trials
        #[arg(long, default_value_t = 200_000, env = "PILOTLOAD_TRIALS")]
        trials: u64,
    },
    /// Check a pilot book file: unit norms, Gram identity, Welch trace,
    /// spectral radius at the configured targets
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Pilot book file to verify
        #[arg(long)]
        book: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &CliError) -> u8 {
    match err {
        CliError::Io(_) => 1,
        CliError::Lib(e) => match e {
            Error::RegionViolation { .. } | Error::MajorizationCapViolation { .. } => 2,
            Error::MissingKey(_)
            | Error::NonPositiveGain(_)
            | Error::DimensionMismatch(_)
            | Error::NonPositiveTarget
            | Error::LengthMismatch(_, _)
            | Error::NotSorted
            | Error::TauOutOfRange { .. }
            | Error::InfeasibleFrame { .. }
            | Error::EmptyGroup(_)
            | Error::UnsetPower
            | Error::GridTooFine(_) => 3,
            Error::MajorizationViolation
            | Error::NumericalRankLoss
            | Error::NonConvergence(_)
            | Error::BracketFailure(_) => 4,
            Error::ParseError(_) => 1,
        },
        CliError::Usage(_) => 1,
    }
}

#[derive(Debug)]
enum CliError {
    Io(std::io::Error),
    Lib(Error),
    Usage(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

type CliResult<T> = Result<T, CliError>;

struct Ctx {
    doc: ConfigDoc,
    config_text: String,
    out: PathBuf,
    seed: u64,
    designs: Vec<DesignKind>,
    stamp: bool,
}

impl Ctx {
    fn new(common: &CommonArgs) -> CliResult<Self> {
        let config_text = std::fs::read_to_string(&common.config)?;
        let doc = parse_document(&config_text)?;
        std::fs::create_dir_all(&common.out)?;
        let designs = common
            .designs
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| DesignKind::from_tag(s.trim()).map_err(CliError::from))
            .collect::<CliResult<Vec<_>>>()?;
        Ok(Ctx {
            doc,
            config_text,
            out: common.out.clone(),
            seed: common.seed,
            designs,
            stamp: common.stamp,
        })
    }

    fn cfg(&self) -> &NetworkConfig {
        &self.doc.network
    }

    fn targets(&self) -> CliResult<SinrTargets> {
        self.doc
            .targets
            .clone()
            .ok_or_else(|| CliError::Usage("config has no `gamma` targets".into()))
    }

    fn header(&self, kind: &str) -> String {
        let design_list = self
            .designs
            .iter()
            .map(|d| d.tag())
            .collect::<Vec<_>>()
            .join("+");
        let mut meta = vec![
            ("designs", design_list),
            ("seed", self.seed.to_string()),
            ("config", config_hash(&self.config_text)),
        ];
        let stamp;
        if self.stamp {
            stamp = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs().to_string())
                .unwrap_or_default();
            meta.push(("written_at", stamp));
        }
        preamble(kind, &meta)
    }

    fn write(&self, name: &str, body: &str) -> CliResult<PathBuf> {
        let path = self.out.join(name);
        std::fs::write(&path, body)?;
        println!("wrote {}", path.display());
        Ok(path)
    }
}

/// GWBE design plus the baseline books sharing its inflated targets and
/// power rule (each baseline gets its own delta vector).
struct DesignSet {
    gwbe: GwbeDesignReport,
    books: Vec<(DesignKind, PilotBook, PowerAllocation)>,
}

fn build_design_set(ctx: &Ctx, wbe_scope: WbeScope) -> CliResult<DesignSet> {
    let cfg = ctx.cfg();
    let targets = ctx.targets()?;
    let gwbe = gwbe_design(&targets, cfg)?;
    let zhat: Vec<f64> = gwbe
        .inflated_targets
        .inflated_flat()
        .unwrap()
        .iter()
        .map(|g| g / (1.0 + g))
        .collect();
    let mut books = Vec::new();
    for &design in &ctx.designs {
        let book = match design {
            DesignKind::Gwbe => continue,
            DesignKind::Wbe => wbe_design(cfg, wbe_scope)?,
            DesignKind::Fos => fos_design(cfg, &GroupingPolicy::RoundRobin)?.0,
            DesignKind::Explicit => {
                return Err(CliError::Usage("explicit books cannot be generated".into()))
            }
        };
        let mut power = uplink_power_control(cfg);
        let delta = delta_vector(&book, &power, cfg)?;
        power.downlink = delta.values.iter().zip(&zhat).map(|(d, z)| d * z).collect();
        books.push((design, book, power));
    }
    Ok(DesignSet { gwbe, books })
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    match cli.command {
        Command::Design { common, wbe_scope } => cmd_design(&Ctx::new(&common)?, &wbe_scope),
        Command::Region {
            common,
            grid,
            gamma_max,
            gamma_fixed,
        } => cmd_region(&Ctx::new(&common)?, grid, gamma_max, gamma_fixed),
        Command::Cells { common, lmin, lmax } => cmd_cells(&Ctx::new(&common)?, lmin, lmax),
        Command::Antennas {
            common,
            nt_grid,
            user,
        } => cmd_antennas(&Ctx::new(&common)?, &nt_grid, &user),
        Command::Validate { common, trials } => cmd_validate(&Ctx::new(&common)?, trials),
        Command::Verify { common, book } => cmd_verify(&Ctx::new(&common)?, &book),
    }
}

fn parse_wbe_scope(s: &str) -> CliResult<WbeScope> {
    match s {
        "percell" => Ok(WbeScope::PerCell),
        "network" => Ok(WbeScope::Network),
        other => Err(CliError::Usage(format!(
            "unknown WBE scope `{other}`, expected percell|network"
        ))),
    }
}

fn cmd_design(ctx: &Ctx, wbe_scope: &str) -> CliResult<ExitCode> {
    let scope = parse_wbe_scope(wbe_scope)?;
    let cfg = ctx.cfg();

    // Baseline books are target-independent; only the GWBE construction
    // needs the configured targets.
    if ctx.designs.contains(&DesignKind::Gwbe) {
        let targets = ctx.targets()?;
        let gwbe = gwbe_design(&targets, cfg)?;
        let mut book_text = ctx.header("design");
        book_text.push_str(&gwbe.pilot_book.to_text());
        ctx.write("gwbe_book.txt", &book_text)?;

        let mut report = ctx.header("design");
        report.push_str("cell,slot,gamma,gamma_hat,b_cell,delta,power_dl\n");
        let delta = delta_vector(&gwbe.pilot_book, &gwbe.power, cfg)?;
        let hat = gwbe.inflated_targets.inflated().unwrap();
        for u in 0..cfg.k_tot() {
            let id = UserId::from_index0(u, cfg.users_per_cell());
            let _ = writeln!(
                report,
                "{},{},{},{},{},{},{}",
                id.cell,
                id.slot,
                fmt_f64(targets.cell(id.cell - 1)[id.slot - 1]),
                fmt_f64(hat[id.cell - 1][id.slot - 1]),
                fmt_f64(gwbe.per_cell_b[id.cell - 1]),
                fmt_f64(delta.values[u]),
                fmt_f64(gwbe.power.downlink[u]),
            );
        }
        ctx.write("gwbe_report.csv", &report)?;
        let worst = (0..cfg.cells())
            .map(|l| cell_gram_residual(&gwbe, l))
            .fold(0.0, f64::max);
        println!("GWBE per-cell Gram residual: {worst:.3e}");
    }

    for &design in &ctx.designs {
        let book = match design {
            DesignKind::Gwbe | DesignKind::Explicit => continue,
            DesignKind::Wbe => wbe_design(cfg, scope)?,
            DesignKind::Fos => fos_design(cfg, &GroupingPolicy::RoundRobin)?.0,
        };
        let mut text = ctx.header("design");
        text.push_str(&book.to_text());
        ctx.write(&format!("{}_book.txt", design.tag().to_lowercase()), &text)?;
        if design == DesignKind::Fos {
            let (_, assign) = fos_design(cfg, &GroupingPolicy::RoundRobin)?;
            let mut groups = ctx.header("design");
            groups.push_str("sequence,cell,slot\n");
            for (s, members) in assign.groups.iter().enumerate() {
                for &u in members {
                    let id = UserId::from_index0(u, cfg.users_per_cell());
                    let _ = writeln!(groups, "{},{},{}", s + 1, id.cell, id.slot);
                }
            }
            ctx.write("fos_groups.csv", &groups)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_region(ctx: &Ctx, grid: usize, gamma_max: f64, gamma_fixed: f64) -> CliResult<ExitCode> {
    let cfg = ctx.cfg();
    if cfg.users_per_cell() < 4 {
        return Err(CliError::Usage(
            "region sweeps need K >= 4 (three swept targets plus the fixed tail)".into(),
        ));
    }
    let spec = GridSpec {
        points_per_axis: grid,
        gamma_max,
        fixed_tail: vec![gamma_fixed; cfg.users_per_cell() - 3],
    };
    let surface_path = ctx.out.join("region_surface.csv");
    let file = std::fs::File::create(&surface_path)?;
    let mut writer = std::io::BufWriter::new(file);
    use std::io::Write as _;
    writer.write_all(sweep_row_csv_header(&ctx.header("region")).as_bytes())?;
    let mut io_err = None;
    let summary = region_sweep(cfg, &spec, &ctx.designs, |row| {
        if io_err.is_none() {
            if let Err(e) = writer.write_all(sweep_row_csv(row).as_bytes()) {
                io_err = Some(e);
            }
        }
    })?;
    writer.flush()?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    println!("wrote {}", surface_path.display());

    let mut summary_csv = ctx.header("region");
    summary_csv.push_str("design,volume,ratio_vs_gwbe\n");
    let ratios = summary.ratios_vs_gwbe();
    for (design, volume) in &summary.volumes {
        let ratio = if *design == DesignKind::Gwbe {
            "0".to_string()
        } else {
            ratios
                .iter()
                .find(|(d, _)| d == design)
                .map(|(_, r)| fmt_f64(*r))
                .unwrap_or_default()
        };
        let _ = writeln!(summary_csv, "{},{},{ratio}", design.tag(), fmt_f64(*volume));
        println!("{}: volume {:.6}", design.tag(), volume);
    }
    for (design, ratio) in &ratios {
        println!("GWBE/{} - 1 = {:.4}", design.tag(), ratio);
    }
    ctx.write("region_summary.csv", &summary_csv)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_cells(ctx: &Ctx, lmin: usize, lmax: usize) -> CliResult<ExitCode> {
    let base = ctx.cfg();
    if lmin < 1 || lmin > lmax {
        return Err(CliError::Usage("need 1 <= lmin <= lmax".into()));
    }
    let pattern = TargetPattern::half_split(base.users_per_cell());
    let mut csv = ctx.header("cells");
    csv.push_str("L,design,max_permitted_sinr\n");
    for cells in lmin..=lmax {
        let cfg = base.with_cells(cells)?;
        for &design in &ctx.designs {
            let value = max_permitted_sinr(&cfg, &pattern, design)?;
            let _ = writeln!(csv, "{cells},{},{}", design.tag(), fmt_f64(value));
            println!("L={cells} {}: {value:.4}", design.tag());
        }
    }
    ctx.write("cells.csv", &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn parse_nt_grid(s: &str) -> CliResult<Vec<u32>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage("expected --nt-grid start:step:end".into()));
    }
    let parse = |t: &str| {
        t.parse::<u32>()
            .map_err(|e| CliError::Usage(format!("bad antenna count `{t}`: {e}")))
    };
    let (start, step, end) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
    if start < 1 || step < 1 || end < start {
        return Err(CliError::Usage("need 1 <= start <= end, step >= 1".into()));
    }
    Ok((start..=end).step_by(step as usize).collect())
}

fn parse_user(s: &str, cfg: &NetworkConfig) -> CliResult<UserId> {
    let (c, k) = s
        .split_once(':')
        .ok_or_else(|| CliError::Usage("expected --user cell:slot".into()))?;
    let cell: usize = c
        .parse()
        .map_err(|_| CliError::Usage(format!("bad cell `{c}`")))?;
    let slot: usize = k
        .parse()
        .map_err(|_| CliError::Usage(format!("bad slot `{k}`")))?;
    if cell < 1 || cell > cfg.cells() || slot < 1 || slot > cfg.users_per_cell() {
        return Err(CliError::Usage(format!(
            "user {cell}:{slot} outside the {}x{} layout",
            cfg.cells(),
            cfg.users_per_cell()
        )));
    }
    Ok(UserId::new(cell, slot))
}

fn cmd_antennas(ctx: &Ctx, nt_grid: &str, user: &str) -> CliResult<ExitCode> {
    let cfg = ctx.cfg();
    let grid = parse_nt_grid(nt_grid)?;
    let user_id = parse_user(user, cfg)?;
    let user0 = user_id.index0(cfg.users_per_cell());
    let gamma_target = ctx.targets()?.target(user_id);
    let set = build_design_set(ctx, WbeScope::PerCell)?;

    let mut curves: Vec<(String, Vec<(String, f64)>)> = Vec::new();
    let mut crossings = ctx.header("antennas");
    crossings.push_str("design,cell,slot,gamma_target,nt_interp,nt_exact\n");

    let mut eval = |design: DesignKind,
                    book: &PilotBook,
                    power: &PowerAllocation|
     -> CliResult<()> {
        let delta = delta_vector(book, power, cfg)?;
        let mut points = Vec::new();
        let mut prev: Option<(u32, f64)> = None;
        let mut interp: Option<f64> = None;
        for &nt in &grid {
            let s = sinr_finite(book, power, &delta, cfg, nt)?;
            let phi = s.sinr[user0];
            if interp.is_none() {
                if let Some((p_nt, p_phi)) = prev {
                    if p_phi < gamma_target && phi >= gamma_target {
                        let t = (gamma_target - p_phi) / (phi - p_phi);
                        interp = Some(p_nt as f64 + t * (nt - p_nt) as f64);
                    }
                } else if phi >= gamma_target {
                    interp = Some(nt as f64);
                }
            }
            prev = Some((nt, phi));
            points.push((nt.to_string(), phi));
        }
        let asym = sinr_asymptotic(book, power, &delta, cfg)?;
        points.push(("inf".into(), asym.sinr[user0]));
        let exact = threshold_crossing(book, power, &delta, cfg, user0, gamma_target)?;
        let _ = writeln!(
            crossings,
            "{},{},{},{},{},{}",
            design.tag(),
            user_id.cell,
            user_id.slot,
            fmt_f64(gamma_target),
            interp.map(fmt_f64).unwrap_or_else(|| "none".into()),
            exact.map(fmt_f64).unwrap_or_else(|| "none".into()),
        );
        println!(
            "{}: asymptote {:.4}, exact crossing {}",
            design.tag(),
            asym.sinr[user0],
            exact
                .map(|v| format!("{:.1}", v))
                .unwrap_or_else(|| "none".into())
        );
        curves.push((design.tag().to_string(), points));
        Ok(())
    };

    if ctx.designs.contains(&DesignKind::Gwbe) {
        eval(DesignKind::Gwbe, &set.gwbe.pilot_book, &set.gwbe.power)?;
    }
    for (design, book, power) in &set.books {
        eval(*design, book, power)?;
    }

    let mut csv = ctx.header("antennas");
    csv.push_str("design,cell,slot,Nt,sinr\n");
    for (design, points) in &curves {
        for (nt, phi) in points {
            let _ = writeln!(
                csv,
                "{design},{},{},{nt},{}",
                user_id.cell,
                user_id.slot,
                fmt_f64(*phi)
            );
        }
    }
    ctx.write("antennas.csv", &csv)?;
    ctx.write("crossings.csv", &crossings)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(ctx: &Ctx, trials: u64) -> CliResult<ExitCode> {
    let cfg = ctx.cfg();
    let nt = match cfg.antennas() {
        Antennas::Finite(nt) => nt,
        Antennas::Asymptotic => {
            return Err(CliError::Usage(
                "validate needs a finite Nt in the config".into(),
            ))
        }
    };
    let set = build_design_set(ctx, WbeScope::PerCell)?;
    let mut rows: Vec<(String, pilotload::sinr_engine::SinrResult)> = Vec::new();
    let mut table = ctx.header("validate");
    table.push_str("design,cell,slot,phi_closed,phi_mc,ci_halfwidth,z\n");
    let mut worst_z = 0.0f64;

    let mut eval = |design: DesignKind,
                    book: &PilotBook,
                    power: &PowerAllocation|
     -> CliResult<()> {
        let delta = delta_vector(book, power, cfg)?;
        let closed = sinr_finite(book, power, &delta, cfg, nt)?;
        let mc = monte_carlo_sinr(book, power, cfg, nt, trials, ctx.seed)?;
        let ci = mc.ci_halfwidth.clone().unwrap();
        for (u, ci_u) in ci.iter().enumerate() {
            let id = UserId::from_index0(u, cfg.users_per_cell());
            let z = (mc.sinr[u] - closed.sinr[u]).abs() / ci_u;
            worst_z = worst_z.max(z);
            let _ = writeln!(
                table,
                "{},{},{},{},{},{},{}",
                design.tag(),
                id.cell,
                id.slot,
                fmt_f64(closed.sinr[u]),
                fmt_f64(mc.sinr[u]),
                fmt_f64(*ci_u),
                fmt_f64(z)
            );
        }
        rows.push((design.tag().to_string(), mc));
        Ok(())
    };

    if ctx.designs.contains(&DesignKind::Gwbe) {
        eval(DesignKind::Gwbe, &set.gwbe.pilot_book, &set.gwbe.power)?;
    }
    for (design, book, power) in &set.books {
        eval(*design, book, power)?;
    }
    ctx.write("validate.csv", &table)?;
    ctx.write(
        "validate_mc.csv",
        &sinr_csv(&rows, cfg, &ctx.header("validate")),
    )?;
    println!("worst |mc - closed| / ci over all users: {worst_z:.2}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(ctx: &Ctx, book_path: &Path) -> CliResult<ExitCode> {
    let cfg = ctx.cfg();
    let text = std::fs::read_to_string(book_path)?;
    // Strip the CSV-style preamble that `design` writes before the header.
    let body: String = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n");
    let (q, design, _cells) = PilotBook::parse_text(&body)?;
    let (tau, k_tot) = q.dim();
    let mut ok = true;

    // Unit norms, reported even when they fail.
    let worst_norm = (0..k_tot)
        .map(|j| (q.column(j).dot(&q.column(j)).sqrt() - 1.0).abs())
        .fold(0.0f64, f64::max);
    let norm_ok = worst_norm <= 1e-9;
    ok &= norm_ok;
    println!(
        "unit norms: residual {worst_norm:.3e} [{}]",
        if norm_ok { "ok" } else { "FAIL" }
    );

    // Welch trace against the tight-frame bound.
    let gram = q.t().dot(&q);
    let trace2: f64 = (0..k_tot)
        .map(|i| (0..k_tot).map(|j| gram[(i, j)] * gram[(i, j)]).sum::<f64>())
        .sum();
    let bound = (k_tot * k_tot) as f64 / tau as f64;
    println!(
        "Welch trace: tr(G^2) = {trace2:.6} vs bound {bound:.6} (equality for tight frames)"
    );

    if !norm_ok {
        println!("verify: FAIL");
        return Ok(ExitCode::from(2));
    }
    let book = PilotBook::from_text(&body)?;

    if let Some(targets) = &ctx.doc.targets {
        // Per-cell weighted Gram residual against B_l = sum(z_l)/tau.
        if design == DesignKind::Gwbe {
            let inflated = match targets.inflated() {
                Some(_) => targets.clone(),
                None => inflate_targets_capped(targets, cfg)?,
            };
            let report = GwbeDesignReport {
                pilot_book: book.clone(),
                per_cell_b: (0..cfg.cells())
                    .map(|l| {
                        inflated.inflated().unwrap()[l]
                            .iter()
                            .map(|g| g / (1.0 + g))
                            .sum::<f64>()
                            / cfg.pilot_len() as f64
                    })
                    .collect(),
                inflated_targets: inflated,
                power: uplink_power_control(cfg),
            };
            let worst = (0..cfg.cells())
                .map(|l| cell_gram_residual(&report, l))
                .fold(0.0f64, f64::max);
            let gram_ok = worst <= 1e-8;
            ok &= gram_ok;
            println!(
                "per-cell Gram identity: residual {worst:.3e} [{}]",
                if gram_ok { "ok" } else { "FAIL" }
            );
        }
        let power = uplink_power_control(cfg);
        let verdict = feasibility_oracle(&book, targets, cfg, &power)?;
        println!(
            "spectral radius at config targets: {:.6} [{}]",
            verdict.spectral_radius,
            if verdict.feasible { "feasible" } else { "infeasible" }
        );
    }

    println!("verify: {}", if ok { "ok" } else { "FAIL" });
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}
