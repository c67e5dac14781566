//! CSV and echo writers. Floats carry 17 significant digits.
//!
//! `metrics.csv` holds only deterministic quantities, so identical seeds give
//! byte-identical files. Wall-clock times go to `timing.csv`.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::gif::EigenWeight;
use crate::harness::config::{fmt_f64, FilterVariant, ScenarioConfig};
use crate::harness::linear_toy::EigenTable;
use crate::harness::orbit_mc::{RunMetrics, RunTrace};

const METRICS_NOTE: &str = "# pct_out_3sigma_axis counts each of the 6 scalar state errors against 3x its marginal sigma; \
pct_out_3sigma_mahalanobis counts epochs whose squared Mahalanobis distance exceeds the 6-dof chi-square 0.9973 quantile";

const METRICS_HEADER: &str = "variant,n_t,n_m,n_q,runs,failed_runs,epochs,pos_rmse_m,vel_rmse_mps,\
pct_out_3sigma_axis,pct_out_3sigma_mahalanobis,propagations";

const TIMING_HEADER: &str = "variant,n_t,n_m,n_q,wall_clock_s,ratio_to_ukf";

pub fn metrics_csv(metrics: &[RunMetrics]) -> String {
    let mut s = format!("{METRICS_NOTE}\n{METRICS_HEADER}\n");
    for m in metrics {
        let f = &m.filter;
        s += &format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            f.variant.name(),
            f.n_t,
            f.n_m,
            f.n_q,
            m.runs,
            m.failures.len(),
            m.epochs,
            fmt_f64(m.pos_rmse),
            fmt_f64(m.vel_rmse),
            fmt_f64(m.pct_outside_axis),
            fmt_f64(m.pct_outside_mahalanobis),
            m.propagations
        );
    }
    s
}

/// Wall-clock per variant with ratios to the first UKF row, when present.
pub fn timing_csv(metrics: &[RunMetrics]) -> String {
    let ukf = metrics.iter().find(|m| m.filter.variant == FilterVariant::Ukf).map(|m| m.wall_clock);
    let mut s = format!("{TIMING_HEADER}\n");
    for m in metrics {
        let f = &m.filter;
        let ratio = ukf.map(|u| fmt_f64(m.wall_clock / u)).unwrap_or_default();
        s += &format!("{},{},{},{},{},{}\n", f.variant.name(), f.n_t, f.n_m, f.n_q, fmt_f64(m.wall_clock), ratio);
    }
    s
}

pub fn trace_csv(trace: &RunTrace) -> String {
    const AXES: [&str; 6] = ["x", "y", "z", "vx", "vy", "vz"];
    let mut s = String::from("epoch");
    for a in AXES {
        s += &format!(",err_{a}");
    }
    for a in AXES {
        s += &format!(",sigma3_{a}");
    }
    s += ",mahalanobis_sq\n";
    for r in &trace.records {
        s += &r.epoch.to_string();
        for v in r.error.iter().chain(&r.sigma3) {
            s += ",";
            s += &fmt_f64(*v);
        }
        s += &format!(",{}\n", fmt_f64(r.mahalanobis_sq));
    }
    s
}

pub fn eigweight_csv(rows: &[EigenWeight]) -> String {
    let mut s = String::from("z,min_eig,max_eig,weight\n");
    for r in rows {
        let z = r.node.map(fmt_f64).unwrap_or_default();
        s += &format!("{z},{},{},{}\n", fmt_f64(r.min_eig), fmt_f64(r.max_eig), fmt_f64(r.weight));
    }
    s
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let mut f = fs::File::create(dir.join(name))?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

/// Writes `metrics.csv`, `timing.csv`, `trace_<run>.csv` for every trace of
/// every variant, `eigweight_<case>_<n>.csv` per table, and `config.echo`.
///
/// Traces are written only when a single variant is given, so file names
/// stay unambiguous.
pub fn emit_outputs(dir: &Path, cfg: &ScenarioConfig, metrics: &[RunMetrics], tables: &[EigenTable]) -> Result<()> {
    fs::create_dir_all(dir)?;
    write(dir, "config.echo", &cfg.echo())?;
    write(dir, "metrics.csv", &metrics_csv(metrics))?;
    write(dir, "timing.csv", &timing_csv(metrics))?;
    if let [single] = metrics {
        for t in &single.traces {
            write(dir, &format!("trace_{}.csv", t.run), &trace_csv(t))?;
        }
    }
    for t in tables {
        write(dir, &format!("eigweight_{}_{}.csv", t.case, t.nodes), &eigweight_csv(&t.rows))?;
    }
    Ok(())
}
