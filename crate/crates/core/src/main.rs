use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hdla::dla::{self, ClusterState, RunOptions, StopRule};
use hdla::harness::{
    self, conc_suite, fullness_suite, height_suite, identities_suite, map_trials, mean_ci,
    notall_suite, path_suite, rec1_suite, tend_scaling, write_report, xbound_suite,
    ExperimentConfig, HarnessError, ReportFormat, ReportRow, SuiteReport, PILOT_SEED,
};
use hdla::observables::{height, isolated_path_length};
use hdla::theory::{self, EtaMode, LogScalar, TheoryContext};

#[derive(Parser)]
#[command(
    name = "hdla",
    version,
    about = "Diffusion-limited aggregation on the Boolean lattice"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone)]
struct Common {
    /// Dimension
    #[arg(long, global = true)]
    n: Option<u32>,
    /// Dimension grid `a:b:step`
    #[arg(long = "n-grid", global = true, value_parser = parse_grid)]
    n_grid: Option<Grid>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Master seed
    #[arg(long, global = true, env = "HDLA_SEED", value_parser = parse_seed)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value_t = 0.01)]
    eps: f64,
    /// Path exponent `a`
    #[arg(long, global = true, default_value_t = 0.45)]
    a: f64,
    /// Report destination; `-` for stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = ReportFormat::Csv)]
    format: ReportFormat,
    /// Worker threads, 0 for one per core
    #[arg(long = "parallel", global = true, default_value_t = 0)]
    parallel: usize,
    /// Checkpoints: comma-separated times, `a:b:step` ranges, or `pow2:MAX`
    #[arg(long, global = true, value_parser = parse_checkpoints)]
    checkpoints: Option<Times>,
}

#[derive(Clone)]
struct Grid(Vec<u32>);

#[derive(Clone)]
struct Times(Vec<u64>);

#[derive(Subcommand)]
enum Command {
    /// Run trials to termination and summarise them
    Simulate,
    /// Run a verification suite
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
    /// Evaluate a closed-form quantity
    Calc(CalcArgs),
    /// Scaling study over an n-grid
    Sweep,
    /// Re-run the fixed-seed pilot and print its golden values as JSON
    Pilot,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Fullness,
    Notall,
    Path,
    Height,
    Tend,
    Xbound,
    Identities,
    Conc,
    Rec1,
}

#[derive(Args)]
struct CalcArgs {
    #[arg(value_enum)]
    quantity: Quantity,
    /// Level
    #[arg(long)]
    k: Option<u64>,
    /// Level offset
    #[arg(long)]
    j: Option<u64>,
    /// Path length for `eta` (defaults to the context's `l`)
    #[arg(long)]
    ell: Option<u64>,
    /// Time argument of `xi` (defaults to `μ0`)
    #[arg(long)]
    t: Option<f64>,
    /// Number of summands for `conc-bound`
    #[arg(long = "count")]
    count: Option<u64>,
    /// Mean bound for `conc-bound`
    #[arg(long = "mean")]
    mean: Option<f64>,
    /// Range bound for `conc-bound`
    #[arg(long = "range")]
    range: Option<f64>,
    /// Deviation for `conc-bound`
    #[arg(long = "dev")]
    dev: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Quantity {
    Tau,
    Eta,
    Zeta,
    Xi,
    Mu0,
    J0,
    NotallBound,
    ConcBound,
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        return Err("expected a:b:step".into());
    };
    let num = |x: &str| x.trim().parse::<u32>().map_err(|e| format!("{x:?}: {e}"));
    let (a, b, step) = (num(a)?, num(b)?, num(step)?);
    if step == 0 || a > b {
        return Err("need a <= b and step >= 1".into());
    }
    Ok(Grid((a..=b).step_by(step as usize).collect()))
}

fn parse_seed(s: &str) -> Result<u64, String> {
    let s = s.trim();
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    }
    .map_err(|e| format!("{s:?}: {e}"))
}

fn parse_checkpoints(s: &str) -> Result<Times, String> {
    let num = |x: &str| x.trim().parse::<u64>().map_err(|e| format!("{x:?}: {e}"));
    let mut out = Vec::new();
    for item in s.split(',').filter(|x| !x.trim().is_empty()) {
        if let Some(max) = item.trim().strip_prefix("pow2:") {
            let max = num(max)?;
            out.push(0);
            out.extend((0..64).map(|p| 1u64 << p).take_while(|&t| t <= max));
        } else if item.contains(':') {
            let parts: Vec<&str> = item.split(':').collect();
            let [a, b, step] = parts.as_slice() else {
                return Err(format!("{item:?}: expected a:b:step"));
            };
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if step == 0 {
                return Err(format!("{item:?}: step must be positive"));
            }
            out.extend((a..=b).step_by(step as usize));
        } else {
            out.push(num(item)?);
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(Times(out))
}

impl Common {
    fn config(&self, default_ns: &[u32], default_trials: u64) -> ExperimentConfig {
        let ns = match (&self.n_grid, self.n) {
            (Some(g), _) => g.0.clone(),
            (None, Some(n)) => vec![n],
            (None, None) => default_ns.to_vec(),
        };
        ExperimentConfig {
            ns,
            trials: self.trials.unwrap_or(default_trials),
            master_seed: self.seed.unwrap_or(PILOT_SEED),
            eps: self.eps,
            a_exponent: self.a,
            checkpoints: self.checkpoints.clone().map(|t| t.0).unwrap_or_default(),
            output: self.out.clone(),
            format: self.format,
            parallelism: self.parallel,
            ..Default::default()
        }
    }
}

/// Where human-readable lines go: stderr when the report itself is on stdout.
fn say(cfg: &ExperimentConfig, line: &str) {
    if cfg.output.as_deref() == Some(std::path::Path::new("-")) {
        eprintln!("{line}");
    } else {
        println!("{line}");
    }
}

fn emit(cfg: &ExperimentConfig, rows: &[ReportRow]) -> Result<(), HarnessError> {
    match cfg.output.as_deref() {
        None => Ok(()),
        Some(p) if p == std::path::Path::new("-") => {
            write_report(rows, cfg.format, io::stdout().lock())
        }
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            write_report(rows, cfg.format, &mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}

fn finish(cfg: &ExperimentConfig, report: &SuiteReport) -> Result<bool, HarnessError> {
    for note in &report.notes {
        say(cfg, &format!("note: {note}"));
    }
    for c in &report.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        let detail = if c.detail.is_empty() {
            String::new()
        } else {
            format!(" ({})", c.detail)
        };
        say(cfg, &format!("{status} {}{detail}", c.name));
    }
    emit(cfg, &report.rows)?;
    Ok(report.passed())
}

fn simulate(cfg: &ExperimentConfig) -> Result<bool, HarnessError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &n in &cfg.ns {
        ClusterState::new(n)?;
        let opts = RunOptions {
            checkpoints: cfg.checkpoints.clone(),
            record_levels: false,
        };
        let results = map_trials(cfg.trials, cfg.master_seed, cfg.parallelism, |_, rng| {
            let mut c = ClusterState::new(n).expect("dimension checked");
            let r = dla::run(&mut c, rng, StopRule::UntilTermination, &opts);
            (r, isolated_path_length(&c), height(&c))
        });
        let tends: Vec<f64> = results
            .iter()
            .map(|(r, _, _)| r.t_end.unwrap_or(0) as f64)
            .collect();
        let paths: Vec<f64> = results.iter().map(|(_, m, _)| f64::from(*m)).collect();
        for (i, (r, m, _)) in results.iter().enumerate() {
            let row = |metric: &str, v: f64| {
                ReportRow::new("simulate", n, i, metric, v).with_provenance(1, cfg.master_seed)
            };
            rows.push(row("t_end", r.t_end.unwrap_or(0) as f64));
            rows.push(row("isolated_path_length", f64::from(*m)));
            for s in &r.snapshots {
                for (k, &count) in s.level_counts.iter().enumerate() {
                    rows.push(row(&format!("level_count.t{}.k{k}", s.t), count as f64));
                }
            }
        }
        let (tm, thw) = mean_ci(&tends);
        let (pm, phw) = mean_ci(&paths);
        let cells = (1u64 << n) as f64;
        for (metric, v, hw) in [
            ("t_end", tm, thw),
            ("t_end_ratio", tm / cells, thw / cells),
            ("isolated_path_length", pm, phw),
        ] {
            rows.push(
                ReportRow::new("simulate", n, "aggregate", metric, v)
                    .with_half_width(hw)
                    .with_provenance(cfg.trials, cfg.master_seed),
            );
        }
        say(
            cfg,
            &format!(
                "n={n} trials={} seed={:#x}: mean T_end {tm:.2} ± {thw:.2}, T_end/2^n {:.5}, mean isolated path {pm:.3} ± {phw:.3}",
                cfg.trials,
                cfg.master_seed,
                tm / cells
            ),
        );
    }
    emit(cfg, &rows)?;
    Ok(true)
}

fn need<T>(v: Option<T>, name: &str) -> Result<T, HarnessError> {
    v.ok_or_else(|| HarnessError::Config(format!("--{name} is required")))
}

fn calc(common: &Common, args: &CalcArgs) -> Result<bool, HarnessError> {
    let n = common.n.map(u64::from);
    let ctx = || -> Result<TheoryContext, HarnessError> {
        Ok(TheoryContext::with_exponent(need(n, "n")?, common.a)?)
    };
    let show = |name: &str, v: LogScalar| println!("{name} = {v} (ln {})", v.ln());
    match args.quantity {
        Quantity::Tau => {
            let t = theory::tau_k_eps(need(n, "n")?, need(args.k, "k")?, common.eps)?;
            println!("tau = {}", t.tau);
            println!("omega = {}", t.omega);
        }
        Quantity::Eta => {
            let ctx = ctx()?;
            let ell = args.ell.unwrap_or(ctx.ell);
            let j = need(args.j, "j")?;
            show("eta", theory::eta(j, ctx.n, ell, EtaMode::Exact)?);
            if let Ok(a) = theory::eta(j, ctx.n, ell, EtaMode::Asymptotic) {
                show("eta (asymptotic)", a);
            }
        }
        Quantity::Zeta => {
            let ctx = ctx()?;
            show("zeta", theory::zeta(need(args.j, "j")?, &ctx)?);
        }
        Quantity::Xi => {
            let ctx = ctx()?;
            let t = args.t.map(LogScalar::from_f64).unwrap_or(ctx.mu0);
            show("xi", theory::xi(need(args.j, "j")?, t, &ctx)?);
        }
        Quantity::Mu0 => {
            let ctx = ctx()?;
            show("mu0", ctx.mu0);
            show("mu1", ctx.mu1);
        }
        Quantity::J0 => {
            let ctx = ctx()?;
            println!("l = {}", ctx.ell);
            println!("k = {}", ctx.k);
            println!("j0 = {}", ctx.j0);
            println!("theta0 = {}", ctx.theta0);
        }
        Quantity::NotallBound => {
            let (n, k) = (need(n, "n")?, need(args.k, "k")?);
            println!("rho = {}", theory::notall_rho(n, k)?);
            println!("bound = {:e}", theory::notall_bound(n, k)?);
        }
        Quantity::ConcBound => {
            let b = theory::conc_bound(
                need(args.count, "count")?,
                need(args.mean, "mean")?,
                need(args.range, "range")?,
                need(args.dev, "dev")?,
            )?;
            println!("conc = {b}");
            println!(
                "hoeffding = {}",
                theory::hoeffding_bound(
                    args.count.unwrap(),
                    args.range.unwrap(),
                    args.dev.unwrap()
                )
            );
        }
    }
    Ok(true)
}

fn verify(common: &Common, suite: Suite) -> Result<bool, HarnessError> {
    let (ns, trials): (&[u32], u64) = match suite {
        Suite::Fullness | Suite::Notall => (&[20], 100),
        Suite::Path => (&harness::pilot::PATH_GRID, 200),
        Suite::Height => (&[24], 100),
        Suite::Tend => (&harness::pilot::TEND_GRID, 100),
        Suite::Xbound => (&[16], 500),
        Suite::Identities | Suite::Conc | Suite::Rec1 => (&[12], 1),
    };
    let cfg = common.config(ns, trials);
    let report = match suite {
        Suite::Fullness => fullness_suite(&cfg)?,
        Suite::Notall => notall_suite(&cfg)?,
        Suite::Path => path_suite(&cfg)?,
        Suite::Height => height_suite(&cfg)?,
        Suite::Tend => tend_scaling(&cfg)?,
        Suite::Xbound => xbound_suite(&cfg)?,
        Suite::Identities => identities_suite(&cfg)?,
        Suite::Conc => conc_suite(&cfg)?,
        Suite::Rec1 => rec1_suite(&cfg)?,
    };
    finish(&cfg, &report)
}

fn sweep(common: &Common) -> Result<bool, HarnessError> {
    let cfg = common.config(&harness::pilot::TEND_GRID, 100);
    let mut report = tend_scaling(&cfg)?;
    let path = path_suite(&cfg)?;
    report.rows.extend(path.rows);
    report.checks.extend(path.checks);
    finish(&cfg, &report)
}

fn run(cli: &Cli) -> Result<bool, HarnessError> {
    match &cli.command {
        Command::Simulate => simulate(&cli.common.config(&[12], 100)),
        Command::Verify { suite } => verify(&cli.common, *suite),
        Command::Calc(args) => calc(&cli.common, args),
        Command::Sweep => sweep(&cli.common),
        Command::Pilot => {
            let values = harness::pilot::run_pilot(cli.common.parallel)?;
            println!("{}", serde_json::to_string_pretty(&values)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
