//! One predict/update cycle of the 3-D linear toy, tabulating per-mixand
//! posterior eigenvalues against posterior weights.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::gif::{BankFlavor, EigenWeight, GaussianState, GifConfig, GifFilter};
use crate::harness::config::ScenarioConfig;
use crate::models::LinearModel;

/// Mixands lighter than this are treated as numerically absent when locating
/// the heaviest-tail node of a profile.
pub const RETAINED_WEIGHT_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyCase {
    FullRank,
    RankDeficient,
}

impl ToyCase {
    pub const ALL: [ToyCase; 2] = [ToyCase::FullRank, ToyCase::RankDeficient];

    pub fn name(self) -> &'static str {
        match self {
            ToyCase::FullRank => "full_rank",
            ToyCase::RankDeficient => "rank_deficient",
        }
    }

    pub fn measurement_matrix(self) -> DMatrix<f64> {
        match self {
            ToyCase::FullRank => LinearModel::toy_full_rank_h(),
            ToyCase::RankDeficient => LinearModel::toy_rank_deficient_h(),
        }
    }
}

/// Eigenvalue/weight profile of one posterior mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenTable {
    pub case: String,
    pub nodes: usize,
    pub rows: Vec<EigenWeight>,
}

/// Posterior profile for `case` with `n` constant nodes, prior `N(0, I)` and
/// process noise `Q = I`.
pub fn toy_profile(case: ToyCase, n: usize, y: &[f64; 3], flavor: BankFlavor) -> Result<Vec<EigenWeight>> {
    let model = LinearModel::toy(case.measurement_matrix())?;
    let prior = GaussianState::new(DVector::zeros(3), DMatrix::identity(3, 3))?;
    let filter = GifFilter::new(GifConfig::constant(n, flavor))?;
    let y = DVector::from_column_slice(y);
    let (_, diag) = filter.step(&prior, &y, &model, &model, &DMatrix::identity(3, 3), &model.r)?;
    Ok(diag.profile)
}

/// Both measurement matrices for every node count in `cfg.toy_nodes`.
pub fn run_linear_toy(cfg: &ScenarioConfig) -> Result<Vec<EigenTable>> {
    let mut out = Vec::new();
    for case in ToyCase::ALL {
        for &n in &cfg.toy_nodes {
            out.push(EigenTable {
                case: case.name().into(),
                nodes: n,
                rows: toy_profile(case, n, &cfg.toy_measurement, cfg.filter.flavor)?,
            });
        }
    }
    Ok(out)
}

/// Largest eigenvalue at the largest-`z` mixand whose weight is at least
/// [`RETAINED_WEIGHT_FLOOR`].
pub fn tail_max_eig(rows: &[EigenWeight]) -> Option<f64> {
    rows.iter().rev().find(|r| r.weight >= RETAINED_WEIGHT_FLOOR).map(|r| r.max_eig)
}

/// Ordinary least-squares line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    LineFit { slope, intercept: my - slope * mx, r_squared: sxy * sxy / (sxx * syy) }
}

/// The upper-`z` half of a profile (the larger half when the count is odd).
pub fn upper_half(rows: &[EigenWeight]) -> &[EigenWeight] {
    &rows[rows.len() / 2..]
}

/// Fit of the largest eigenvalue against `-ln(weight)` over the upper-`z`
/// half. A positive slope means the eigenvalue grows as the weight decays.
pub fn tail_fit(rows: &[EigenWeight]) -> LineFit {
    let tail = upper_half(rows);
    let x: Vec<f64> = tail.iter().map(|r| -r.weight.ln()).collect();
    let y: Vec<f64> = tail.iter().map(|r| r.max_eig).collect();
    fit_line(&x, &y)
}

/// `(max - min) / max` of a set of positive values.
pub fn relative_spread(values: impl IntoIterator<Item = f64>) -> f64 {
    let (lo, hi) = values.into_iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    (hi - lo) / hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_recovers_exact_line() {
        let x = [0.0, 1.0, 2.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let f = fit_line(&x, &y);
        assert!((f.slope - 3.0).abs() < 1e-14 && (f.intercept + 1.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
    }

    #[test]
    fn spread() {
        assert!((relative_spread([2.0, 1.5, 1.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn profiles_are_node_ordered_and_normalized() {
        let rows = toy_profile(ToyCase::FullRank, 10, &[0.0, -15.0, -6.0], BankFlavor::Ekf).unwrap();
        assert_eq!(rows.len(), 10);
        assert!(rows.windows(2).all(|w| w[0].node < w[1].node));
        assert!((rows.iter().map(|r| r.weight).sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
