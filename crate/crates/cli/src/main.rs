use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aslsim::config::{split_override, ExperimentConfig};
use aslsim::sim::{self, ComparisonRow, RunSummary};
use aslsim::trace::{self, CsvTraceWriter};
use aslsim::{Error, ModelProfile, SchedulerKind};
use clap::{Args, Parser, Subcommand};

/// Adaptive split learning scheduler simulator.
#[derive(Debug, Parser)]
#[command(name = "aslsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write slots.csv, episodes.csv and summary.json.
    Run(RunArgs),
    /// Run a scheduler x V matrix and write comparison.csv.
    Sweep(SweepArgs),
    /// Check a profile file and print its per-split table.
    ValidateProfile(ValidateArgs),
    /// Delay and energy reduction of one summary relative to another.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML experiment config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = "ASLSIM_OUT_DIR", default_value = "out")]
    out: PathBuf,
    /// Dotted config override, e.g. `--set run.episodes=10`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Scheduler: open, fixed-sl, delay-opt, energy-opt or oracle.
    #[arg(long)]
    scheduler: Option<SchedulerKind>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Schedulers to compare.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "open,fixed-sl,delay-opt,energy-opt"
    )]
    scheduler: Vec<SchedulerKind>,
    /// Multipliers applied to V for every scheduler.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    v_scales: Vec<f64>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Profile file; the bundled profile when omitted.
    path: Option<PathBuf>,
    /// Bytes per parameter used for the bit columns.
    #[arg(long, default_value_t = 4.0)]
    bytes_per_param: f64,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Reference summary (usually the fixed-sl run).
    baseline: PathBuf,
    /// Summary to compare against the reference.
    candidate: PathBuf,
}

/// Exit codes, one per failure category.
mod exit {
    pub const CONFIG: u8 = 3;
    pub const PROFILE: u8 = 4;
    pub const IO: u8 = 5;
    pub const SIMULATION: u8 = 6;
}

struct Failure {
    code: u8,
    category: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, category) = match &e {
            Error::Config(_) => (exit::CONFIG, "config"),
            Error::ProfileParse(_)
            | Error::InvalidLayer { .. }
            | Error::InvalidProfile(_)
            | Error::SplitOutOfRange { .. } => (exit::PROFILE, "profile"),
            Error::Io { .. } | Error::Trace(_) => (exit::IO, "io"),
            Error::InvalidDecision(_) | Error::UnreachableLink { .. } | Error::EmptyTrace => {
                (exit::SIMULATION, "simulation")
            }
        };
        Failure {
            code,
            category,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::ValidateProfile(a) => cmd_validate(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error [{}]: {}", f.category, f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(c: &Common) -> CliResult<ExperimentConfig> {
    let mut overrides = Vec::with_capacity(c.overrides.len() + 1);
    for o in &c.overrides {
        let (k, v) = split_override(o)?;
        overrides.push((k.to_string(), v.to_string()));
    }
    if let Some(seed) = c.seed {
        overrides.push(("run.seed".into(), seed.to_string()));
    }
    let cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p, &overrides)?,
        None => ExperimentConfig::from_toml_with_overrides("", &overrides)?,
    };
    Ok(cfg)
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| Failure {
        code: exit::IO,
        category: "io",
        message: format!("cannot create {}: {e}", dir.display()),
    })
}

fn cmd_run(a: RunArgs) -> CliResult<()> {
    let mut cfg = load_config(&a.common)?;
    if let Some(k) = a.scheduler {
        cfg.run.scheduler = k;
    }
    let run_cfg = cfg.to_run_config()?;
    let profile = cfg.load_profile()?;
    let out = &a.common.out;
    create_dir(out)?;

    let mut writer = CsvTraceWriter::create(out)?;
    let result = sim::run_with_sink(&run_cfg, &profile, &mut writer);
    // Keep whatever rows were produced even if the run failed.
    writer.finish()?;
    let summary = result?;

    let doc = serde_json::json!({ "config": cfg, "summary": summary });
    trace::write_json(&out.join(trace::SUMMARY_FILE), &doc)?;
    print_summary(&summary);
    println!("wrote {}", out.display());
    Ok(())
}

fn print_summary(s: &RunSummary) {
    println!("scheduler       {}", s.scheduler);
    println!(
        "slots           {} ({} devices x {} episodes)",
        s.slots, s.devices, s.episodes
    );
    println!(
        "V               {:.6e}{}",
        s.v,
        if s.v_calibrated { " (calibrated)" } else { "" }
    );
    println!("mean delay      {:.6} s", s.mean_delay);
    println!(
        "mean energy     {:.3} J (E_th {:.1} J)",
        s.mean_energy, s.e_th
    );
    println!("Q_T / T         {:.4}", s.stability_ratio);
}

fn cmd_sweep(a: SweepArgs) -> CliResult<()> {
    let cfg = load_config(&a.common)?;
    let profile = cfg.load_profile()?;
    let mut runs = Vec::new();
    for &scale in &a.v_scales {
        for &k in &a.scheduler {
            let mut c = cfg.clone();
            c.run.scheduler = k;
            c.penalty.v_scale *= scale;
            let label = if a.v_scales.len() > 1 {
                format!("{k}@v*{scale}")
            } else {
                k.to_string()
            };
            runs.push((label, c.to_run_config()?));
        }
    }
    let (summaries, rows) = sim::sweep(&runs, &profile)?;
    let out = &a.common.out;
    create_dir(out)?;
    trace::write_comparison(&out.join(trace::COMPARISON_FILE), &rows)?;
    trace::write_json(
        &out.join("sweep_summaries.json"),
        &serde_json::json!({ "config": cfg, "summaries": summaries }),
    )?;
    print_rows(&rows);
    println!("wrote {}", out.display());
    Ok(())
}

fn pct(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.1}%"))
}

fn print_rows(rows: &[ComparisonRow]) {
    println!(
        "{:<22} {:>12} {:>12} {:>10} {:>10} {:>10}",
        "label", "delay_s", "energy_j", "Q_T/T", "d_red", "e_red"
    );
    for r in rows {
        println!(
            "{:<22} {:>12.6} {:>12.2} {:>10.3} {:>10} {:>10}{}",
            r.label,
            r.mean_delay,
            r.mean_energy,
            r.stability_ratio,
            pct(r.delay_reduction_pct),
            pct(r.energy_reduction_pct),
            if r.population_mismatch {
                "  (population differs)"
            } else {
                ""
            }
        );
    }
}

fn cmd_validate(a: ValidateArgs) -> CliResult<()> {
    let profile = match &a.path {
        Some(p) => ModelProfile::load(p)?,
        None => ModelProfile::bundled_lenet(),
    };
    if !(a.bytes_per_param.is_finite() && a.bytes_per_param > 0.0) {
        return Err(Error::Config("bytes per parameter must be > 0".into()).into());
    }
    let bits = a.bytes_per_param * 8.0;
    println!(
        "profile {} ({} splits, {:.6e} training FLOPs)",
        profile.name(),
        profile.num_splits(),
        profile.total_flops()
    );
    println!(
        "{:>5} {:>16} {:>16} {:>14} {:>14} {:>14}",
        "split", "device_flops", "server_flops", "model_bits", "smashed_bits", "grad_bits"
    );
    for s in profile.split_points() {
        println!(
            "{:>5} {:>16.6e} {:>16.6e} {:>14.6e} {:>14.6e} {:>14.6e}",
            s,
            profile.device_flops(s)?,
            profile.server_flops(s)?,
            profile.device_params(s)? as f64 * bits,
            profile.smashed_size(s)? as f64 * bits,
            profile.gradient_size(s)? as f64 * bits,
        );
    }
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> CliResult<()> {
    let base = trace::read_summary(&a.baseline)?;
    let cand = trace::read_summary(&a.candidate)?;
    let labels = vec![base.scheduler.to_string(), cand.scheduler.to_string()];
    let mut rows = sim::compare(&labels, &[base.clone(), cand.clone()]);
    // The reference is the first summary whatever its scheduler.
    for r in &mut rows {
        if !r.population_mismatch {
            r.delay_reduction_pct = Some(sim::reduction_pct(r.mean_delay, base.mean_delay));
            r.energy_reduction_pct = Some(sim::reduction_pct(r.mean_energy, base.mean_energy));
        }
    }
    if base.profile_sha256 != cand.profile_sha256 {
        eprintln!("warning: summaries use different profiles");
    }
    print_rows(&rows);
    Ok(())
}
