//! Two-body + J2 + thrust orbital motion and a geocentric radar.
//!
//! Units are SI throughout: meters, seconds, radians.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::{Error, Result};
use crate::gif::{Dynamics, MeasurementModel};

/// Default upper bound on the RK4 substep, seconds.
pub const DEFAULT_MAX_STEP: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Gravitational parameter, m³/s².
    pub mu: f64,
    /// Equatorial radius, m.
    pub re: f64,
    pub j2: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { mu: 3.986004418e14, re: 6_378_137.0, j2: 1.08262668e-3 }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        if self.mu > 0.0 && self.re > 0.0 && self.j2 >= 0.0 && self.mu.is_finite() && self.re.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid physical constants {self:?}")))
        }
    }
}

/// Inertial position (m) and velocity (m/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

impl OrbitState {
    pub fn new(position: Vector3<f64>, velocity: Vector3<f64>) -> Self {
        Self { position, velocity }
    }

    pub fn from_vector(x: &DVector<f64>) -> Result<Self> {
        if x.len() != 6 {
            return Err(Error::Domain(format!("orbit state needs 6 components, got {}", x.len())));
        }
        Ok(Self { position: Vector3::new(x[0], x[1], x[2]), velocity: Vector3::new(x[3], x[4], x[5]) })
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&[
            self.position.x,
            self.position.y,
            self.position.z,
            self.velocity.x,
            self.velocity.y,
            self.velocity.z,
        ])
    }

    fn is_finite(&self) -> bool {
        self.position.iter().chain(self.velocity.iter()).all(|v| v.is_finite())
    }

    /// Specific orbital energy `½v² - μ/r` (two-body).
    pub fn energy(&self, mu: f64) -> f64 {
        0.5 * self.velocity.norm_squared() - mu / self.position.norm()
    }
}

/// Thrust acceleration applied during propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThrustLaw {
    /// Fixed inertial acceleration vector, m/s².
    Constant(Vector3<f64>),
    /// Fixed magnitude along the instantaneous velocity, re-evaluated at
    /// every derivative evaluation.
    AlongTrack(f64),
    /// Fixed components in the instantaneous velocity frame
    /// (see [`velocity_frame`]), re-evaluated at every derivative evaluation.
    VelocityFrame(Vector3<f64>),
}

impl ThrustLaw {
    fn at(&self, state: &OrbitState) -> Vector3<f64> {
        match *self {
            ThrustLaw::Constant(a) => a,
            ThrustLaw::AlongTrack(mag) => along_track_thrust(&state.velocity, mag),
            ThrustLaw::VelocityFrame(c) => {
                let [t, n, b] = velocity_frame(state);
                t * c.x + n * c.y + b * c.z
            }
        }
    }
}

/// Right-handed orthonormal axes `[v̂, ĥ, v̂ × ĥ]`: along-track, orbit normal
/// (`r × v`), and the in-plane direction completing the triad. Falls back to
/// the inertial axes when `r ∥ v`.
pub fn velocity_frame(state: &OrbitState) -> [Vector3<f64>; 3] {
    let h = state.position.cross(&state.velocity);
    let (vn, hn) = (state.velocity.norm(), h.norm());
    if vn == 0.0 || hn == 0.0 {
        return [Vector3::x(), Vector3::y(), Vector3::z()];
    }
    let t = state.velocity / vn;
    let n = h / hn;
    [t, n, t.cross(&n)]
}

/// `magnitude · v / ‖v‖`; zero when `v = 0`.
pub fn along_track_thrust(velocity: &Vector3<f64>, magnitude: f64) -> Vector3<f64> {
    let speed = velocity.norm();
    if speed == 0.0 {
        Vector3::zeros()
    } else {
        velocity * (magnitude / speed)
    }
}

fn gravity(r: &Vector3<f64>, c: &PhysicalConstants) -> Vector3<f64> {
    let r2 = r.norm_squared();
    let rn = r2.sqrt();
    let central = -c.mu / (r2 * rn);
    let k = -1.5 * c.mu * c.j2 * c.re * c.re / (r2 * r2 * rn);
    let zr = r.z * r.z / r2;
    Vector3::new(
        central * r.x + k * (1.0 - 5.0 * zr) * r.x,
        central * r.y + k * (1.0 - 5.0 * zr) * r.y,
        central * r.z + k * (3.0 - 5.0 * zr) * r.z,
    )
}

/// Total acceleration: central gravity, J2, and thrust.
pub fn accel(state: &OrbitState, thrust: &Vector3<f64>, consts: &PhysicalConstants) -> Result<Vector3<f64>> {
    if state.position.norm_squared() == 0.0 {
        return Err(Error::Domain("acceleration undefined at the origin".into()));
    }
    Ok(gravity(&state.position, consts) + thrust)
}

fn derivative(s: &OrbitState, thrust: &ThrustLaw, c: &PhysicalConstants) -> OrbitState {
    OrbitState { position: s.velocity, velocity: gravity(&s.position, c) + thrust.at(s) }
}

fn axpy(s: &OrbitState, h: f64, d: &OrbitState) -> OrbitState {
    OrbitState { position: s.position + d.position * h, velocity: s.velocity + d.velocity * h }
}

/// Fixed-step RK4 over `dt` seconds using `ceil(dt / max_step)` equal substeps.
pub fn propagate(
    state: &OrbitState,
    thrust: &ThrustLaw,
    dt: f64,
    consts: &PhysicalConstants,
    max_step: f64,
) -> Result<OrbitState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("propagation interval must be positive, got {dt}")));
    }
    if !(max_step > 0.0) {
        return Err(Error::Domain(format!("substep must be positive, got {max_step}")));
    }
    if state.position.norm_squared() == 0.0 {
        return Err(Error::Propagation("state at the origin".into()));
    }
    let steps = (dt / max_step).ceil().max(1.0) as usize;
    let h = dt / steps as f64;
    let mut s = *state;
    for _ in 0..steps {
        let k1 = derivative(&s, thrust, consts);
        let k2 = derivative(&axpy(&s, 0.5 * h, &k1), thrust, consts);
        let k3 = derivative(&axpy(&s, 0.5 * h, &k2), thrust, consts);
        let k4 = derivative(&axpy(&s, h, &k3), thrust, consts);
        s.position += (k1.position + (k2.position + k3.position) * 2.0 + k4.position) * (h / 6.0);
        s.velocity += (k1.velocity + (k2.velocity + k3.velocity) * 2.0 + k4.velocity) * (h / 6.0);
        if !s.is_finite() {
            return Err(Error::Propagation("non-finite state during integration".into()));
        }
    }
    Ok(s)
}

/// Range, range-rate, right ascension, declination from Earth's center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarObservation {
    pub range: f64,
    pub range_rate: f64,
    pub right_ascension: f64,
    pub declination: f64,
}

impl RadarObservation {
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&[self.range, self.range_rate, self.right_ascension, self.declination])
    }
}

pub fn radar_measure(state: &OrbitState) -> Result<RadarObservation> {
    let r = &state.position;
    let rho = r.norm();
    if rho == 0.0 {
        return Err(Error::Domain("radar measurement undefined at the origin".into()));
    }
    Ok(RadarObservation {
        range: rho,
        range_rate: r.dot(&state.velocity) / rho,
        right_ascension: r.y.atan2(r.x),
        declination: (r.z / rho).clamp(-1.0, 1.0).asin(),
    })
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    a - 2.0 * PI * ((a - PI) / (2.0 * PI)).ceil()
}

/// Wraps the right-ascension component of a radar residual; the declination
/// residual is left as is.
pub fn innovation_wrap(dy: &DVector<f64>) -> DVector<f64> {
    let mut out = dy.clone();
    out[2] = wrap_angle(out[2]);
    out
}

/// Frame in which the filter holds its acceleration noise constant over an
/// interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseFrame {
    Inertial,
    /// Components along [`velocity_frame`] axes, which rotate with the orbit.
    Velocity,
}

/// Filter-side transition over one measurement interval: the noise vector is
/// an acceleration with constant components in `frame`.
#[derive(Debug, Clone)]
pub struct OrbitDynamics {
    pub consts: PhysicalConstants,
    pub interval: f64,
    pub max_step: f64,
    pub frame: NoiseFrame,
}

impl OrbitDynamics {
    pub fn new(consts: PhysicalConstants, interval: f64, frame: NoiseFrame) -> Self {
        Self { consts, interval, max_step: DEFAULT_MAX_STEP, frame }
    }
}

impl Dynamics for OrbitDynamics {
    fn state_dim(&self) -> usize {
        6
    }

    fn noise_dim(&self) -> usize {
        3
    }

    fn transition(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        let s = OrbitState::from_vector(x)?;
        let a = Vector3::new(v[0], v[1], v[2]);
        let thrust = match self.frame {
            NoiseFrame::Inertial => ThrustLaw::Constant(a),
            NoiseFrame::Velocity => ThrustLaw::VelocityFrame(a),
        };
        Ok(propagate(&s, &thrust, self.interval, &self.consts, self.max_step)?.to_vector())
    }
}

/// Geocentric radar measuring `(ρ, ρ̇, α, δ)` with an analytic Jacobian.
#[derive(Debug, Clone, Copy, Default)]
pub struct RadarModel;

impl MeasurementModel for RadarModel {
    fn measurement_dim(&self) -> usize {
        4
    }

    fn measure(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(radar_measure(&OrbitState::from_vector(x)?)?.to_vector())
    }

    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let s = OrbitState::from_vector(x)?;
        let (r, v) = (s.position, s.velocity);
        let rho2 = r.norm_squared();
        let rho = rho2.sqrt();
        let rxy2 = r.x * r.x + r.y * r.y;
        let rxy = rxy2.sqrt();
        if rho == 0.0 || rxy == 0.0 {
            return Err(Error::Domain("radar Jacobian singular on the polar axis".into()));
        }
        let rdotv = r.dot(&v);
        let mut j = DMatrix::zeros(4, 6);
        for i in 0..3 {
            j[(0, i)] = r[i] / rho;
            j[(1, i)] = v[i] / rho - rdotv * r[i] / (rho2 * rho);
            j[(1, i + 3)] = r[i] / rho;
        }
        j[(2, 0)] = -r.y / rxy2;
        j[(2, 1)] = r.x / rxy2;
        j[(3, 0)] = -r.z * r.x / (rho2 * rxy);
        j[(3, 1)] = -r.z * r.y / (rho2 * rxy);
        j[(3, 2)] = rxy / rho2;
        Ok(j)
    }

    fn residual(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        innovation_wrap(&(a - b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gif::central_difference;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn consts() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    fn leo(x: f64) -> OrbitState {
        OrbitState::new(Vector3::new(x, 0.0, 0.0), Vector3::zeros())
    }

    #[test]
    fn j2_vanishes_out_of_plane_on_equator() {
        let s = OrbitState::new(Vector3::new(5e6, 4e6, 0.0), Vector3::zeros());
        assert_eq!(accel(&s, &Vector3::zeros(), &consts()).unwrap().z, 0.0);
    }

    #[test]
    fn central_term_magnitude() {
        let c = PhysicalConstants { j2: 0.0, ..consts() };
        let a = accel(&leo(7.0e6), &Vector3::zeros(), &c).unwrap();
        let expected = 3.986004418e14 / 7.0e6f64.powi(2);
        assert!((a.x + expected).abs() < 1e-12 * expected);
        assert!((expected - 8.1347).abs() < 1e-4);
        assert_eq!(a.y, 0.0);
    }

    #[test]
    fn j2_term_matches_single_expression() {
        let c = consts();
        let r = 7.0e6f64;
        let with = accel(&leo(r), &Vector3::zeros(), &c).unwrap();
        let without = accel(&leo(r), &Vector3::zeros(), &PhysicalConstants { j2: 0.0, ..c }).unwrap();
        let expected = -1.5 * c.mu * c.j2 * c.re.powi(2) / r.powi(4);
        assert!(((with.x - without.x) - expected).abs() <= 1e-12 * expected.abs());

        // Off-plane point against the component formulas written out.
        let p = Vector3::new(3.1e6, -4.2e6, 5.3e6);
        let s = OrbitState::new(p, Vector3::zeros());
        let got = accel(&s, &Vector3::zeros(), &c).unwrap();
        let rn = p.norm();
        let k = -1.5 * c.mu * c.j2 * c.re.powi(2) / rn.powi(5);
        let f = 5.0 * p.z.powi(2) / rn.powi(2);
        let oracle = Vector3::new(
            -c.mu / rn.powi(3) * p.x + k * (1.0 - f) * p.x,
            -c.mu / rn.powi(3) * p.y + k * (1.0 - f) * p.y,
            -c.mu / rn.powi(3) * p.z + k * (3.0 - f) * p.z,
        );
        for i in 0..3 {
            assert!((got[i] - oracle[i]).abs() <= 1e-12 * oracle[i].abs());
        }
    }

    #[test]
    fn origin_is_singular() {
        assert!(accel(&leo(0.0), &Vector3::zeros(), &consts()).is_err());
        assert!(radar_measure(&leo(0.0)).is_err());
    }

    #[test]
    fn circular_orbit_closes_after_one_period() {
        let c = PhysicalConstants { j2: 0.0, ..consts() };
        let r = 7.0e6;
        let v = (c.mu / r).sqrt();
        let s0 = OrbitState::new(Vector3::new(r, 0.0, 0.0), Vector3::new(0.0, v, 0.0));
        let period = 2.0 * PI * (r.powi(3) / c.mu).sqrt();
        let s1 = propagate(&s0, &ThrustLaw::Constant(Vector3::zeros()), period, &c, 10.0).unwrap();
        assert!((s1.position - s0.position).norm() < 1.0);
    }

    #[test]
    fn ballistic_energy_is_conserved() {
        let c = PhysicalConstants { j2: 0.0, ..consts() };
        let s0 = OrbitState::new(Vector3::new(0.0, 7.0e6, 0.0), Vector3::new(5335.865, 0.0, 5335.865));
        let s1 = propagate(&s0, &ThrustLaw::Constant(Vector3::zeros()), 10_000.0, &c, 10.0).unwrap();
        let (e0, e1) = (s0.energy(c.mu), s1.energy(c.mu));
        assert!(((e1 - e0) / e0).abs() < 1e-9, "{}", (e1 - e0) / e0);
        let h0 = s0.position.cross(&s0.velocity);
        let h1 = s1.position.cross(&s1.velocity);
        assert!((h1 - h0).norm() / h0.norm() < 1e-9);
    }

    #[test]
    fn split_interval_matches_whole() {
        let s0 = OrbitState::new(Vector3::new(0.0, 7.0e6, 0.0), Vector3::new(5335.865, 0.0, 5335.865));
        let t = ThrustLaw::AlongTrack(3e-4);
        let whole = propagate(&s0, &t, 10_000.0, &consts(), 50.0).unwrap();
        let half = propagate(&s0, &t, 5_000.0, &consts(), 50.0).unwrap();
        let twice = propagate(&half, &t, 5_000.0, &consts(), 50.0).unwrap();
        assert!((whole.position - twice.position).norm() <= 1e-9 * whole.position.norm());
        assert!((whole.velocity - twice.velocity).norm() <= 1e-9 * whole.velocity.norm());
    }

    #[test]
    fn radar_examples() {
        let s = OrbitState::new(Vector3::new(7e6, 0.0, 0.0), Vector3::new(0.0, 7.5e3, 0.0));
        let o = radar_measure(&s).unwrap();
        assert_eq!((o.range, o.range_rate, o.right_ascension, o.declination), (7e6, 0.0, 0.0, 0.0));
        let o = radar_measure(&OrbitState::new(Vector3::new(0.0, 7e6, 0.0), Vector3::zeros())).unwrap();
        assert!((o.right_ascension - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn radar_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let rho: f64 = rng.random_range(6.5e6..4.0e7);
            let alpha: f64 = rng.random_range(-PI + 1e-9..PI);
            let delta: f64 = rng.random_range(-1.5..1.5);
            let r = Vector3::new(rho * delta.cos() * alpha.cos(), rho * delta.cos() * alpha.sin(), rho * delta.sin());
            let o = radar_measure(&OrbitState::new(r, Vector3::zeros())).unwrap();
            assert!((o.range - rho).abs() <= 1e-12 * rho);
            assert!((o.right_ascension - alpha).abs() <= 1e-12);
            assert!((o.declination - delta).abs() <= 1e-12);
        }
    }

    fn random_state(rng: &mut ChaCha8Rng) -> DVector<f64> {
        let r = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            .normalize()
            * rng.random_range(6.6e6..9.0e6);
        let v =
            Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * 7.5e3;
        OrbitState::new(r, v).to_vector()
    }

    fn assert_jacobian_close(analytic: &DMatrix<f64>, numeric: &DMatrix<f64>) {
        let scale = analytic.abs().max();
        for i in 0..analytic.nrows() {
            for j in 0..analytic.ncols() {
                let (a, n) = (analytic[(i, j)], numeric[(i, j)]);
                let row_scale = analytic.row(i).abs().max().max(1e-300);
                assert!(
                    (a - n).abs() <= 1e-5 * a.abs().max(1e-6 * row_scale).max(1e-12 * scale),
                    "({i},{j}) analytic {a} numeric {n}"
                );
            }
        }
    }

    #[test]
    fn radar_jacobian_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let x = random_state(&mut rng);
            let analytic = RadarModel.jacobian(&x).unwrap();
            let numeric = central_difference(|p| RadarModel.measure(p), &x, |v| 1e-4 * v.abs().max(1.0)).unwrap();
            assert_jacobian_close(&analytic, &numeric);
        }
    }

    #[test]
    fn wrap_examples() {
        let mk = |a: f64| DVector::from_column_slice(&[0.0, 0.0, a, 3.0]);
        assert!((innovation_wrap(&mk(2.0 * PI - 0.01))[2] + 0.01).abs() < 1e-12);
        assert_eq!(innovation_wrap(&mk(0.3))[2], 0.3);
        assert!((innovation_wrap(&mk(-PI - 0.1))[2] - (PI - 0.1)).abs() < 1e-12);
        assert_eq!(innovation_wrap(&mk(PI))[2], PI);
        assert_eq!(innovation_wrap(&mk(0.3))[3], 3.0);
    }

    #[test]
    fn along_track_examples() {
        let t = along_track_thrust(&Vector3::new(7500.0, 0.0, 0.0), 3e-4);
        assert_eq!(t, Vector3::new(3e-4, 0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                * 8e3;
            let t = along_track_thrust(&v, 3e-4);
            assert!((t.norm() - 3e-4).abs() < 1e-18);
            assert!(t.dot(&v) > 0.0);
        }
    }

    #[test]
    fn velocity_frame_is_right_handed_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let r = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                * 7e6;
            let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                * 7e3;
            let [t, n, b] = velocity_frame(&OrbitState::new(r, v));
            for (a, c) in [(t, n), (t, b), (n, b)] {
                assert!(a.dot(&c).abs() < 1e-12);
            }
            for a in [t, n, b] {
                assert!((a.norm() - 1.0).abs() < 1e-12);
            }
            assert!((t.cross(&n) - b).norm() < 1e-12);
            assert!(n.dot(&r).abs() < 1e-6 && t.dot(&v) > 0.0);
        }
        let radial = OrbitState::new(Vector3::new(7e6, 0.0, 0.0), Vector3::new(1.0, 0.0, 0.0));
        assert_eq!(velocity_frame(&radial), [Vector3::x(), Vector3::y(), Vector3::z()]);
    }

    #[test]
    fn velocity_frame_thrust_along_first_axis_is_along_track() {
        let s = OrbitState::new(Vector3::new(0.0, 7e6, 0.0), Vector3::new(5335.865, 0.0, 5335.865));
        let a = propagate(&s, &ThrustLaw::AlongTrack(3e-4), 1e4, &consts(), 50.0).unwrap();
        let b = propagate(&s, &ThrustLaw::VelocityFrame(Vector3::new(3e-4, 0.0, 0.0)), 1e4, &consts(), 50.0).unwrap();
        assert!((a.position - b.position).norm() < 1e-6);
        assert!((a.velocity - b.velocity).norm() < 1e-9);
    }
}
