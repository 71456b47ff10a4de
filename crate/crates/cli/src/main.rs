mod config;
mod failure;
mod plot;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::builder::BoolishValueParser;
use clap::{ArgAction, Args, Parser, Subcommand};
use sbc_core::blockmap::{sweep_and_fit, BlockMap};
use sbc_core::normal_form::normal_form_report;
use sbc_core::transition::{fixed_exponent_fit, power_law_fit, quasi_regular_fit, Basis, FitSample};
use sbc_core::verify::{run_checks, Fault, CHECKS};
use sbc_core::{derive_constants, DerivedConstants, SweepResult};
use serde::{Deserialize, Serialize};

use config::ExperimentConfig;
use failure::Failure;

#[derive(Parser, Debug)]
#[command(name = "sbc", version, about = "Simultaneous binary collisions in the collinear four-body problem")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON experiment configuration; unknown keys are rejected.
    #[arg(long, global = true, env = "SBC_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory (overrides `outputs` in the config).
    #[arg(long, global = true, env = "SBC_OUT")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps; defaults to the available cores.
    #[arg(long, global = true, env = "SBC_WORKERS")]
    workers: Option<usize>,
    /// Seed for the randomised checks (overrides `seed` in the config).
    #[arg(long, global = true, env = "SBC_SEED")]
    seed: Option<u64>,
    #[arg(long, global = true, env = "SBC_EXTENDED_PRECISION", action = ArgAction::SetTrue, value_parser = BoolishValueParser::new())]
    extended_precision: bool,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Print the derived constants as JSON.
    Constants,
    /// Compute the exact normal form and check the conjugation certificate.
    Normalform {
        #[arg(long, env = "SBC_MAX_DEGREE", default_value_t = 9)]
        max_degree: usize,
    },
    /// Sweep the numerical block map, fit the energy jumps, write CSV, JSON and SVG.
    Blockmap {
        /// Use the uncoupled field.
        #[arg(long, env = "SBC_UNCOUPLED", action = ArgAction::SetTrue, value_parser = BoolishValueParser::new())]
        uncoupled: bool,
        /// Print dh1/dh2 against -(a2/a1)^(1/3) for every row.
        #[arg(long, env = "SBC_RATIO_CHECK", action = ArgAction::SetTrue, value_parser = BoolishValueParser::new())]
        ratio_check: bool,
        /// Fit existing data (columns v, dh1, dh2, dx, dy) instead of running a sweep.
        #[arg(long)]
        fit_csv: Option<PathBuf>,
    },
    /// Run the invariant battery and print a JSON report.
    Verify {
        /// List the checks and exit.
        #[arg(long)]
        list: bool,
        /// Corrupt an input on purpose (available: rh).
        #[arg(long)]
        inject_fault: Option<Fault>,
    },
    /// Dump one block-map passage as a trajectory CSV.
    Simulate {
        /// Entry offset on the collision orbit's cross-section.
        #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
        offset: f64,
        #[arg(long, env = "SBC_UNCOUPLED", action = ArgAction::SetTrue, value_parser = BoolishValueParser::new())]
        uncoupled: bool,
        /// Number of dense-output samples.
        #[arg(long, default_value_t = 400)]
        samples: usize,
    },
}

struct Ctx {
    cfg: ExperimentConfig,
    out: PathBuf,
    workers: usize,
}

impl Ctx {
    fn new(common: &Common) -> Result<Self, Failure> {
        if common.extended_precision {
            return Err(Failure::new("unsupported", "extended precision is not available in this build; only double precision is implemented"));
        }
        let mut cfg = ExperimentConfig::load(common.config.as_deref())?;
        if let Some(s) = common.seed {
            cfg.seed = s;
        }
        let out = common.out.clone().unwrap_or_else(|| cfg.outputs.clone());
        let workers = match common.workers {
            Some(0) => return Err(Failure::new("config", "--workers must be at least 1")),
            Some(n) => n,
            None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        };
        Ok(Ctx { cfg, out, workers })
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, Failure> {
        std::fs::create_dir_all(&self.out).map_err(|e| Failure::new("io", format!("cannot create {}: {e}", self.out.display())))?;
        let p = self.out.join(name);
        std::fs::write(&p, contents).map_err(|e| Failure::new("io", format!("cannot write {}: {e}", p.display())))?;
        Ok(p)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                e.exit();
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("{}", Failure::new("usage", first).line());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.line());
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Cmd::Verify { list: true, .. } = cli.cmd {
        for c in CHECKS.iter() {
            print_line(&format!("{}: {}", c.name, c.description))?;
        }
        return Ok(());
    }
    let ctx = Ctx::new(&cli.common)?;
    match cli.cmd {
        Cmd::Constants => constants(&ctx),
        Cmd::Normalform { max_degree } => normalform(&ctx, max_degree),
        Cmd::Blockmap { uncoupled, ratio_check, fit_csv } => match fit_csv {
            Some(p) => fit_file(&ctx, &p),
            None => blockmap(ctx, uncoupled, ratio_check),
        },
        Cmd::Verify { inject_fault, .. } => verify(&ctx, inject_fault),
        Cmd::Simulate { offset, uncoupled, samples } => simulate(ctx, offset, uncoupled, samples),
    }
}

fn print_line(s: &str) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{s}").map_err(Failure::from)
}

#[derive(Serialize)]
struct ConstantsReport {
    #[serde(flatten)]
    derived: DerivedConstants,
    al: [f64; 2],
    beta: [f64; 2],
    block_coefficient: [f64; 2],
    dh_ratio: f64,
}

fn constants(ctx: &Ctx) -> Result<(), Failure> {
    let m = ctx.cfg.mass_params()?;
    let d = derive_constants(&m)?;
    let rep = ConstantsReport {
        al: [d.al(0), d.al(1)],
        beta: [d.beta(0), d.beta(1)],
        block_coefficient: [d.block_coefficient(0), d.block_coefficient(1)],
        dh_ratio: -(d.a2 / d.a1).cbrt(),
        derived: d,
    };
    let json = serde_json::to_string_pretty(&rep)?;
    ctx.write("constants.json", &json)?;
    print_line(&json)
}

fn normalform(ctx: &Ctx, max_degree: usize) -> Result<(), Failure> {
    let rep = normal_form_report(&ctx.cfg.mass_params()?, max_degree)?;
    ctx.write("normalform.json", &serde_json::to_string_pretty(&rep)?)?;
    print_line(rep.render().trim_end())?;
    if !rep.certificate_ok() {
        return Err(Failure::new("certificate", format!("conjugation fails at degree {:?}", rep.certificate_defect_degree)));
    }
    Ok(())
}

#[derive(Serialize)]
struct CsvRow {
    s: f64,
    v: f64,
    dh1: f64,
    dh2: f64,
    dx: f64,
    dy: f64,
    time_rescaled: f64,
    time_physical: f64,
}

fn rows_csv(r: &SweepResult) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for x in &r.rows {
        w.serialize(CsvRow { s: x.s, v: x.v, dh1: x.dh1, dh2: x.dh2, dx: x.dx, dy: x.dy, time_rescaled: x.time_rescaled, time_physical: x.time_physical })?;
    }
    if r.rows.is_empty() {
        w.write_record(["s", "v", "dh1", "dh2", "dx", "dy", "time_rescaled", "time_physical"])?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::new("csv", e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::new("csv", e.to_string()))
}

fn blockmap(mut ctx: Ctx, uncoupled: bool, ratio_check: bool) -> Result<(), Failure> {
    ctx.cfg.uncoupled |= uncoupled;
    let bm = BlockMap::new(ctx.cfg.block_map_config()?)?;
    let offsets = ctx.cfg.offsets()?;
    let r = sweep_and_fit(&bm, &offsets, ctx.workers)?;
    ctx.write("blockmap.csv", &rows_csv(&r)?)?;
    ctx.write("blockmap.json", &serde_json::to_string_pretty(&r)?)?;
    let pts: Vec<(f64, f64)> = r.rows.iter().map(|x| (x.v, x.dh1)).collect();
    let line = r.coefficient_83.map(|c| (c, 8.0 / 3.0));
    ctx.write("blockmap.svg", &plot::loglog_svg(&pts, line, "energy jump against entry coordinate"))?;
    print_line(&format!("rows: {} ok, {} failed", r.rows.len(), r.failures.len()))?;
    for f in &r.failures {
        print_line(&format!("  s = {:e}: error[{}]: {}", f.s, f.class, f.message))?;
    }
    print_line(&format!("predicted: dh1 = {:.6} v^8/3, dh2 = {:.6} v^8/3", r.prediction.coeff_h1, r.prediction.coeff_h2))?;
    if ratio_check {
        let expect = -(bm.constants.a2 / bm.constants.a1).cbrt();
        print_line(&format!("{:>12} {:>12} {:>14} {:>14} {:>10}", "s", "v", "dh1/dh2", "expected", "rel.dev"))?;
        for (x, q) in r.rows.iter().zip(&r.dh_ratio) {
            print_line(&format!("{:>12.4e} {:>12.4e} {:>14.8} {:>14.8} {:>10.2e}", x.s, x.v, x.dh1 / x.dh2, expect, q - 1.0))?;
        }
        let sign = if r.dh_ratio.iter().all(|q| *q > 0.0) { "opposite signs: dh2 = -(a1/a2)^(1/3) dh1" } else { "sign convention not realised on every row" };
        print_line(&format!("dh1 and dh2 carry {sign}"))?;
    }
    let (Some(fit), Some(series)) = (&r.fit, &r.series) else {
        let why = r.fit_error.clone().unwrap_or_else(|| "no usable rows".into());
        print_line(&format!("fit refused: {why}"))?;
        return if ctx.cfg.uncoupled { Ok(()) } else { Err(Failure::new("fit", why)) };
    };
    print_line(&format!("free fit: exponent {:.5}, coefficient {:.6}, r^2 {:.8}", fit.exponent, fit.coefficient, fit.r_squared))?;
    print_line(&format!("grid fit: best exponent {} (log term: {}), neighbour residual ratio {:.2}", series.grid.best, series.grid.with_log, series.grid.selection_ratio))?;
    if let (Some(c), Some(q)) = (r.coefficient_83, r.coefficient_ratio) {
        print_line(&format!("coefficient of v^8/3: {c:.6} ({q:.5} of predicted)"))?;
    }
    print_line(&format!("max energy drift {:.2e}", r.max_energy_drift))?;
    print_line(&format!("outputs in {}", ctx.out.display()))?;
    let [lo, hi] = ctx.cfg.exponent_band;
    if !(lo..=hi).contains(&fit.exponent) {
        return Err(Failure::new("acceptance", format!("fitted exponent {:.5} outside [{lo}, {hi}]", fit.exponent)));
    }
    Ok(())
}

#[derive(Deserialize)]
struct FitRow {
    v: f64,
    dh1: f64,
    dh2: f64,
    dx: f64,
    dy: f64,
}

#[derive(Serialize)]
struct FitReport {
    samples: usize,
    free_exponent: f64,
    free_coefficient: f64,
    coefficient_83: f64,
    series: sbc_core::TransitionSeries,
}

fn fit_file(ctx: &Ctx, path: &Path) -> Result<(), Failure> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))?;
    let mut samples: Vec<FitSample> = Vec::new();
    for rec in rd.deserialize() {
        let r: FitRow = rec?;
        samples.push((r.v, [r.dh1, r.dh2, r.dx, r.dy]));
    }
    let v: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let d: Vec<f64> = samples.iter().map(|s| s.1[0]).collect();
    let free = power_law_fit(&v, &d)?;
    let (c, _) = fixed_exponent_fit(&v, &d, &[Basis::pow(8.0 / 3.0)], true)?;
    let series = quasi_regular_fit(&samples)?;
    let rep = FitReport { samples: samples.len(), free_exponent: free.exponent, free_coefficient: free.coefficient, coefficient_83: c[0], series };
    let json = serde_json::to_string_pretty(&rep)?;
    ctx.write("fit.json", &json)?;
    print_line(&json)
}

fn verify(ctx: &Ctx, fault: Option<Fault>) -> Result<(), Failure> {
    let rep = run_checks(ctx.cfg.seed, fault);
    let json = serde_json::to_string_pretty(&rep)?;
    ctx.write("verify.json", &json)?;
    print_line(&json)?;
    if !rep.passed {
        let failed: Vec<&str> = rep.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        return Err(Failure::new("verify", format!("{} check(s) failed: {}", failed.len(), failed.join(", "))));
    }
    Ok(())
}

fn simulate(mut ctx: Ctx, offset: f64, uncoupled: bool, samples: usize) -> Result<(), Failure> {
    if samples < 2 {
        return Err(Failure::new("config", "--samples must be at least 2"));
    }
    ctx.cfg.uncoupled |= uncoupled;
    let bm = BlockMap::new(ctx.cfg.block_map_config()?)?;
    let (row, traj) = bm.passage(offset)?;
    let (t0, t1) = (traj.times[0], traj.last().0);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["tau", "z1", "z2", "x", "h1", "h2", "y", "time_physical"])?;
    for k in 0..samples {
        let t = t0 + (t1 - t0) * k as f64 / (samples - 1) as f64;
        let y = if k + 1 == samples { traj.last().1 } else { traj.eval(t).ok_or_else(|| Failure::new("domain", "dense output outside span"))? };
        let mut rec = vec![format!("{t:e}")];
        rec.extend(y.iter().map(|x| format!("{x:e}")));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::new("csv", e.to_string()))?;
    let p = ctx.write("trajectory.csv", &String::from_utf8_lossy(&bytes))?;
    print_line(&serde_json::to_string_pretty(&row)?)?;
    print_line(&format!("trajectory written to {}", p.display()))
}
