use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mlgif::harness::{
    ballistic_gap_check, emit_outputs, fmt_f64, run_linear_toy, run_orbit_mc, run_table1, EigenTable, FilterVariant,
    RunMetrics, ScenarioConfig, ScenarioKind,
};
use mlgif::Result;

/// Gaussian integral filter experiments with multivariate Laplace process noise.
#[derive(Parser)]
#[command(name = "mlgif", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue/weight tables of the 3-D linear toy for both measurement matrices.
    LinearToy,
    /// Monte Carlo orbit tracking with one filter variant.
    Orbit,
    /// The interpolated-node sweep (n_t in {2,3,5}, n_m in {10,15,25}) plus the baseline UKF.
    Table1,
    /// Separation between the thrusting and ballistic nominal orbits after one interval.
    BallisticGap,
}

#[derive(Args)]
struct Common {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    filter: Option<FilterArg>,
    /// Time-update node count (gif-interp).
    #[arg(long, global = true)]
    nt: Option<usize>,
    /// Measurement-update node count; also the quadrature order.
    #[arg(long, global = true)]
    nm: Option<usize>,
    /// Monte Carlo run count.
    #[arg(long, global = true)]
    runs: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterArg {
    Gif,
    GifInterp,
    Ukf,
}

fn resolve(common: &Common, kind: ScenarioKind) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(path) => ScenarioConfig::load(path)?,
        None if kind == ScenarioKind::LinearToy => ScenarioConfig::linear_toy(),
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if let Some(f) = common.filter {
        cfg.filter.variant = match f {
            FilterArg::Gif => FilterVariant::Gif,
            FilterArg::GifInterp => FilterVariant::GifInterp,
            FilterArg::Ukf => FilterVariant::Ukf,
        };
    }
    if let Some(nt) = common.nt {
        cfg.filter.n_t = nt;
    }
    if let Some(nm) = common.nm {
        cfg.filter.n_m = nm;
        cfg.filter.n_q = nm;
    }
    if let Some(runs) = common.runs {
        cfg.runs = runs;
    }
    cfg.filter = cfg.filter.clone().normalized();
    cfg.validate()?;
    Ok(cfg)
}

fn print_metrics(m: &RunMetrics) {
    let f = &m.filter;
    println!(
        "{:<10} n_t={:<2} n_m={:<2} pos_rmse={:>12.3} m  vel_rmse={:>9.4} m/s  out3sigma={:>6.2}%  \
         mahalanobis={:>6.2}%  time={:>8.2} s  failed={}",
        f.variant.name(),
        f.n_t,
        f.n_m,
        m.pos_rmse,
        m.vel_rmse,
        m.pct_outside_axis,
        m.pct_outside_mahalanobis,
        m.wall_clock,
        m.failures.len()
    );
    for fail in &m.failures {
        eprintln!("run {} failed at epoch {}: {}", fail.run, fail.epoch, fail.message);
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let kind = match cli.command {
        Command::LinearToy => ScenarioKind::LinearToy,
        _ => ScenarioKind::OrbitTrack,
    };
    let cfg = resolve(&cli.common, kind)?;
    let dir = cfg.out_dir.clone();
    match cli.command {
        Command::LinearToy => {
            let tables = run_linear_toy(&cfg)?;
            for t in &tables {
                println!("{} n_m={}: {} mixands", t.case, t.nodes, t.rows.len());
            }
            emit_outputs(&dir, &cfg, &[], &tables)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Orbit => {
            let m = run_orbit_mc(&cfg)?;
            print_metrics(&m);
            let tables = if m.first_profile.is_empty() {
                vec![]
            } else {
                vec![EigenTable { case: "orbit".into(), nodes: m.filter.n_q, rows: m.first_profile.clone() }]
            };
            emit_outputs(&dir, &cfg, std::slice::from_ref(&m), &tables)?;
            Ok(exit_for(&[m]))
        }
        Command::Table1 => {
            let all = run_table1(&cfg)?;
            all.iter().for_each(print_metrics);
            let (table, _) = all.split_at(all.len() - 1);
            emit_outputs(&dir, &cfg, table, &[])?;
            std::fs::write(dir.join("timing.csv"), mlgif::harness::timing_csv(&all))?;
            Ok(exit_for(&all))
        }
        Command::BallisticGap => {
            let (dp, dv) = ballistic_gap_check(&cfg)?;
            println!("position gap {dp:.1} m, velocity gap {dv:.3} m/s");
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join("config.echo"), cfg.echo())?;
            std::fs::write(
                dir.join("ballistic_gap.csv"),
                format!("position_gap_m,velocity_gap_mps\n{},{}\n", fmt_f64(dp), fmt_f64(dv)),
            )?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn exit_for(metrics: &[RunMetrics]) -> ExitCode {
    if metrics.iter().any(|m| !m.failures.is_empty()) {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(3))
        }
    }
}
