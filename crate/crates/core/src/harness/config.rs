//! Scenario configuration in a flat `key = value` text format.
//!
//! Keys are dotted (`gif.n_m = 25`), `#` starts a comment, lists are
//! comma-separated. Unknown or repeated keys are rejected. The echo written
//! by [`ScenarioConfig::echo`] parses back to an identical configuration.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gif::{BankFlavor, GaussianState, GifConfig};
use crate::interp::Abscissa;
use crate::models::{NoiseFrame, PhysicalConstants};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    LinearToy,
    OrbitTrack,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::LinearToy => "linear_toy",
            ScenarioKind::OrbitTrack => "orbit_track",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "linear_toy" => Ok(Self::LinearToy),
            "orbit_track" => Ok(Self::OrbitTrack),
            _ => Err(Error::Config(format!("unknown scenario '{s}'"))),
        }
    }
}

/// Which estimator a Monte Carlo run drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterVariant {
    /// GIF with the same Gauss-Laguerre nodes for every stage.
    Gif,
    /// GIF with few time-update nodes interpolated onto the measurement nodes.
    GifInterp,
    /// Single augmented-state UKF with Gaussian process noise.
    Ukf,
}

impl FilterVariant {
    pub fn name(self) -> &'static str {
        match self {
            FilterVariant::Gif => "gif",
            FilterVariant::GifInterp => "gif-interp",
            FilterVariant::Ukf => "ukf",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gif" => Ok(Self::Gif),
            "gif-interp" => Ok(Self::GifInterp),
            "ukf" => Ok(Self::Ukf),
            _ => Err(Error::Config(format!("unknown filter '{s}' (expected gif, gif-interp or ukf)"))),
        }
    }
}

fn frame_name(f: NoiseFrame) -> &'static str {
    match f {
        NoiseFrame::Inertial => "inertial",
        NoiseFrame::Velocity => "velocity",
    }
}

fn parse_frame(s: &str) -> Result<NoiseFrame> {
    match s {
        "inertial" => Ok(NoiseFrame::Inertial),
        "velocity" => Ok(NoiseFrame::Velocity),
        _ => Err(Error::Config(format!("unknown noise frame '{s}' (expected inertial or velocity)"))),
    }
}

fn abscissa_name(a: Abscissa) -> &'static str {
    match a {
        Abscissa::Z => "z",
        Abscissa::SqrtZ => "sqrt_z",
    }
}

fn parse_abscissa(s: &str) -> Result<Abscissa> {
    match s {
        "z" => Ok(Abscissa::Z),
        "sqrt_z" => Ok(Abscissa::SqrtZ),
        _ => Err(Error::Config(format!("unknown interpolation abscissa '{s}' (expected z or sqrt_z)"))),
    }
}

fn flavor_name(f: BankFlavor) -> &'static str {
    match f {
        BankFlavor::Ekf => "ekf",
        BankFlavor::Ukf => "ukf",
    }
}

fn parse_flavor(s: &str) -> Result<BankFlavor> {
    match s {
        "ekf" => Ok(BankFlavor::Ekf),
        "ukf" => Ok(BankFlavor::Ukf),
        _ => Err(Error::Config(format!("unknown bank flavor '{s}'"))),
    }
}

/// Estimator choice and node counts.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    pub variant: FilterVariant,
    pub n_t: usize,
    pub n_m: usize,
    pub n_q: usize,
    pub flavor: BankFlavor,
    pub abscissa: Abscissa,
}

impl FilterSpec {
    pub fn gif(n: usize) -> Self {
        Self { variant: FilterVariant::Gif, n_t: n, n_m: n, n_q: n, flavor: BankFlavor::Ukf, abscissa: Abscissa::Z }
    }

    pub fn gif_interp(n_t: usize, n_m: usize) -> Self {
        Self { variant: FilterVariant::GifInterp, n_t, n_m, n_q: n_m, flavor: BankFlavor::Ukf, abscissa: Abscissa::Z }
    }

    pub fn ukf() -> Self {
        Self { variant: FilterVariant::Ukf, n_t: 1, n_m: 1, n_q: 1, flavor: BankFlavor::Ukf, abscissa: Abscissa::Z }
    }

    /// The GIF configuration, or `None` for the single-UKF baseline.
    pub fn gif_config(&self) -> Option<GifConfig> {
        match self.variant {
            FilterVariant::Ukf => None,
            FilterVariant::Gif => {
                Some(GifConfig { abscissa: self.abscissa, ..GifConfig::constant(self.n_m, self.flavor) })
            }
            FilterVariant::GifInterp => Some(GifConfig {
                n_q: self.n_q,
                abscissa: self.abscissa,
                ..GifConfig::interpolated(self.n_t, self.n_m, self.flavor)
            }),
        }
    }

    /// Forces the node counts implied by the variant: constant-node GIF uses
    /// `n_m` everywhere, the baseline uses none.
    pub fn normalized(mut self) -> Self {
        match self.variant {
            FilterVariant::Gif => {
                self.n_t = self.n_m;
                self.n_q = self.n_m;
            }
            FilterVariant::Ukf => {
                self.n_t = 1;
                self.n_m = 1;
                self.n_q = 1;
            }
            FilterVariant::GifInterp => {}
        }
        self
    }
}

/// Fully resolved scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub seed: u64,
    pub runs: usize,
    pub epochs: usize,
    /// Seconds between measurements.
    pub cadence: f64,
    /// Run Monte Carlo trials on a thread pool.
    pub parallel: bool,
    pub filter: FilterSpec,
    /// Standard deviation of each axis of the filter's acceleration noise, m/s².
    pub noise_sigma: f64,
    /// Frame in which the filter's acceleration noise is constant over an interval.
    pub noise_frame: NoiseFrame,
    /// Along-track thrust of the simulated target, m/s².
    pub truth_thrust: f64,
    pub initial_position: [f64; 3],
    pub initial_velocity: [f64; 3],
    pub sigma_position: f64,
    pub sigma_velocity: f64,
    pub sigma_range: f64,
    pub sigma_range_rate: f64,
    pub sigma_angle_deg: f64,
    pub consts: PhysicalConstants,
    /// Upper bound on the integrator substep, s.
    pub max_step: f64,
    /// Node counts swept by the linear toy.
    pub toy_nodes: Vec<usize>,
    pub toy_measurement: [f64; 3],
    pub out_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::OrbitTrack,
            seed: 1,
            runs: 50,
            epochs: 50,
            cadence: 10_000.0,
            parallel: true,
            filter: FilterSpec::gif(10),
            noise_sigma: 1e-5,
            noise_frame: NoiseFrame::Velocity,
            truth_thrust: 3e-4,
            initial_position: [0.0, 7_000_000.0, 0.0],
            initial_velocity: [5_335.865, 0.0, 5_335.865],
            sigma_position: 100.0,
            sigma_velocity: 0.1,
            sigma_range: 3.0,
            sigma_range_rate: 0.03,
            sigma_angle_deg: 0.015,
            consts: PhysicalConstants::default(),
            max_step: crate::models::DEFAULT_MAX_STEP,
            toy_nodes: vec![5, 10, 20, 40],
            toy_measurement: [0.0, -15.0, -6.0],
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ScenarioConfig {
    /// The linear toy problem's defaults: EKF bank (exact for linear models).
    pub fn linear_toy() -> Self {
        let mut c = Self { kind: ScenarioKind::LinearToy, ..Self::default() };
        c.filter.flavor = BankFlavor::Ekf;
        c
    }

    /// Parses `text` on top of the defaults for its `scenario` key.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut seen = BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
            entries.push((lineno + 1, key.to_string(), value.to_string()));
        }
        let mut cfg = match entries.iter().find(|(_, k, _)| k == "scenario") {
            Some((_, _, v)) if ScenarioKind::parse(v)? == ScenarioKind::LinearToy => Self::linear_toy(),
            _ => Self::default(),
        };
        for (lineno, key, value) in &entries {
            cfg.set(key, value).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("line {lineno}: {msg}")),
                other => other,
            })?;
        }
        cfg.filter = cfg.filter.clone().normalized();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "scenario" => self.kind = ScenarioKind::parse(value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "runs" => self.runs = parse_num(key, value)?,
            "epochs" => self.epochs = parse_num(key, value)?,
            "cadence" => self.cadence = parse_num(key, value)?,
            "parallel" => self.parallel = parse_num(key, value)?,
            "filter.variant" => self.filter.variant = FilterVariant::parse(value)?,
            "filter.flavor" => self.filter.flavor = parse_flavor(value)?,
            "gif.abscissa" => self.filter.abscissa = parse_abscissa(value)?,
            "gif.n_t" => self.filter.n_t = parse_num(key, value)?,
            "gif.n_m" => self.filter.n_m = parse_num(key, value)?,
            "gif.n_q" => self.filter.n_q = parse_num(key, value)?,
            "noise.sigma" => self.noise_sigma = parse_num(key, value)?,
            "noise.frame" => self.noise_frame = parse_frame(value)?,
            "truth.thrust" => self.truth_thrust = parse_num(key, value)?,
            "initial.position" => self.initial_position = parse_array(key, value)?,
            "initial.velocity" => self.initial_velocity = parse_array(key, value)?,
            "initial.sigma_position" => self.sigma_position = parse_num(key, value)?,
            "initial.sigma_velocity" => self.sigma_velocity = parse_num(key, value)?,
            "radar.sigma_range" => self.sigma_range = parse_num(key, value)?,
            "radar.sigma_range_rate" => self.sigma_range_rate = parse_num(key, value)?,
            "radar.sigma_angle_deg" => self.sigma_angle_deg = parse_num(key, value)?,
            "constants.mu" => self.consts.mu = parse_num(key, value)?,
            "constants.re" => self.consts.re = parse_num(key, value)?,
            "constants.j2" => self.consts.j2 = parse_num(key, value)?,
            "integrator.max_step" => self.max_step = parse_num(key, value)?,
            "toy.n_m" => self.toy_nodes = parse_list(key, value)?,
            "toy.y" => self.toy_measurement = parse_array(key, value)?,
            "output.dir" => self.out_dir = PathBuf::from(value),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cadence", self.cadence),
            ("noise.sigma", self.noise_sigma),
            ("initial.sigma_position", self.sigma_position),
            ("initial.sigma_velocity", self.sigma_velocity),
            ("radar.sigma_range", self.sigma_range),
            ("radar.sigma_range_rate", self.sigma_range_rate),
            ("radar.sigma_angle_deg", self.sigma_angle_deg),
            ("integrator.max_step", self.max_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.truth_thrust >= 0.0) || !self.truth_thrust.is_finite() {
            return Err(Error::Config(format!("truth.thrust must be non-negative, got {}", self.truth_thrust)));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        let f = &self.filter;
        if f.n_t == 0 || f.n_m < f.n_t || f.n_q == 0 {
            return Err(Error::Config(format!(
                "node counts need 1 <= n_t <= n_m and n_q >= 1, got n_t={}, n_m={}, n_q={}",
                f.n_t, f.n_m, f.n_q
            )));
        }
        if self.toy_nodes.is_empty() || self.toy_nodes.contains(&0) {
            return Err(Error::Config("toy.n_m must list positive node counts".into()));
        }
        self.consts.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.initial_position.iter().all(|&v| v == 0.0) {
            return Err(Error::Config("initial position must be nonzero".into()));
        }
        Ok(())
    }

    /// Filter acceleration noise covariance `σ² I₃`.
    pub fn process_noise(&self) -> DMatrix<f64> {
        DMatrix::identity(3, 3) * (self.noise_sigma * self.noise_sigma)
    }

    /// Radar noise covariance, radians for the angles.
    pub fn measurement_noise(&self) -> DMatrix<f64> {
        let a = self.sigma_angle_deg.to_radians();
        let s = [self.sigma_range, self.sigma_range_rate, a, a];
        DMatrix::from_diagonal(&DVector::from_iterator(4, s.iter().map(|v| v * v)))
    }

    pub fn initial_state(&self) -> GaussianState {
        let mean = DVector::from_iterator(6, self.initial_position.iter().chain(&self.initial_velocity).copied());
        let sp = self.sigma_position * self.sigma_position;
        let sv = self.sigma_velocity * self.sigma_velocity;
        let cov = DMatrix::from_diagonal(&DVector::from_column_slice(&[sp, sp, sp, sv, sv, sv]));
        GaussianState { mean, covariance: cov }
    }

    /// Ratio of the true thrust to the filter's assumed acceleration sigma.
    pub fn noise_mismatch(&self) -> f64 {
        self.truth_thrust / self.noise_sigma
    }

    /// Every resolved key, one per line, in a fixed order.
    pub fn echo(&self) -> String {
        let arr = |a: &[f64]| a.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let f = &self.filter;
        let lines: Vec<(&str, String)> = vec![
            ("scenario", self.kind.name().into()),
            ("seed", self.seed.to_string()),
            ("runs", self.runs.to_string()),
            ("epochs", self.epochs.to_string()),
            ("cadence", fmt_f64(self.cadence)),
            ("parallel", self.parallel.to_string()),
            ("filter.variant", f.variant.name().into()),
            ("filter.flavor", flavor_name(f.flavor).into()),
            ("gif.abscissa", abscissa_name(f.abscissa).into()),
            ("gif.n_t", f.n_t.to_string()),
            ("gif.n_m", f.n_m.to_string()),
            ("gif.n_q", f.n_q.to_string()),
            ("noise.sigma", fmt_f64(self.noise_sigma)),
            ("noise.frame", frame_name(self.noise_frame).into()),
            ("truth.thrust", fmt_f64(self.truth_thrust)),
            ("initial.position", arr(&self.initial_position)),
            ("initial.velocity", arr(&self.initial_velocity)),
            ("initial.sigma_position", fmt_f64(self.sigma_position)),
            ("initial.sigma_velocity", fmt_f64(self.sigma_velocity)),
            ("radar.sigma_range", fmt_f64(self.sigma_range)),
            ("radar.sigma_range_rate", fmt_f64(self.sigma_range_rate)),
            ("radar.sigma_angle_deg", fmt_f64(self.sigma_angle_deg)),
            ("constants.mu", fmt_f64(self.consts.mu)),
            ("constants.re", fmt_f64(self.consts.re)),
            ("constants.j2", fmt_f64(self.consts.j2)),
            ("integrator.max_step", fmt_f64(self.max_step)),
            ("toy.n_m", self.toy_nodes.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", ")),
            ("toy.y", arr(&self.toy_measurement)),
            ("output.dir", self.out_dir.display().to_string()),
        ];
        let _ = writeln!(s, "# thrust / noise sigma = {}", fmt_f64(self.noise_mismatch()));
        for (k, v) in lines {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("invalid value '{value}' for '{key}'")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|p| parse_num(key, p.trim())).collect()
}

fn parse_array<const N: usize>(key: &str, value: &str) -> Result<[f64; N]> {
    let v: Vec<f64> = parse_list(key, value)?;
    v.try_into().map_err(|v: Vec<f64>| Error::Config(format!("'{key}' needs {N} values, got {}", v.len())))
}
