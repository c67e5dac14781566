//! Node grids, per-entry interpolating curves, and remapping of a discretized
//! continuous mixture from one grid to another.
//!
//! A mixture discretized on a grid stores, per node, a mean, a lower Cholesky
//! factor, and a log-weight. Moving to another grid fits one curve per scalar
//! entry across the source nodes and evaluates it at the target nodes:
//! linear through two nodes, the quadratic through three, and a natural cubic
//! spline through four or more. Covariances come back as `L Lᵀ`, so they stay
//! symmetric positive semidefinite whatever the interpolant does.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::outer_square;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridPurpose {
    TimeUpdate,
    MeasurementUpdate,
    Quadrature,
}

/// Strictly increasing, positive mixing-parameter nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeGrid {
    nodes: Vec<f64>,
    purpose: GridPurpose,
}

impl NodeGrid {
    pub fn new(nodes: Vec<f64>, purpose: GridPurpose) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Config("node grid is empty".into()));
        }
        for (i, &z) in nodes.iter().enumerate() {
            if !z.is_finite() || z <= 0.0 {
                return Err(Error::Config(format!("grid node {i} = {z} is not a positive number")));
            }
            if i > 0 && z <= nodes[i - 1] {
                return Err(Error::Config(format!("grid nodes not strictly increasing at index {i}")));
            }
        }
        Ok(Self { nodes, purpose })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn purpose(&self) -> GridPurpose {
        self.purpose
    }

    pub fn first(&self) -> f64 {
        self.nodes[0]
    }

    pub fn last(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn with_purpose(&self, purpose: GridPurpose) -> Self {
        Self { nodes: self.nodes.clone(), purpose }
    }

    /// Whether `z` lies within `[first, last]`.
    pub fn spans(&self, z: f64) -> bool {
        z >= self.first() && z <= self.last()
    }
}

/// One Gaussian component pinned to a node.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixand {
    pub z: f64,
    pub mean: DVector<f64>,
    /// Lower-triangular covariance factor with non-negative diagonal.
    pub chol: DMatrix<f64>,
    pub log_weight: f64,
}

impl Mixand {
    pub fn covariance(&self) -> DMatrix<f64> {
        outer_square(&self.chol)
    }
}

/// A continuous mixture discretized on a grid, one mixand per node.
#[derive(Debug, Clone, PartialEq)]
pub struct CgmmBelief {
    grid: NodeGrid,
    mixands: Vec<Mixand>,
}

impl CgmmBelief {
    pub fn new(grid: NodeGrid, mixands: Vec<Mixand>) -> Result<Self> {
        if mixands.len() != grid.len() {
            return Err(Error::Domain(format!("{} mixands for a grid of {} nodes", mixands.len(), grid.len())));
        }
        if let Some((i, m)) = mixands.iter().enumerate().find(|(i, m)| m.z != grid.nodes()[*i]) {
            return Err(Error::Domain(format!("mixand {i} sits at z = {} but grid node is {}", m.z, grid.nodes()[i])));
        }
        Ok(Self { grid, mixands })
    }

    pub fn grid(&self) -> &NodeGrid {
        &self.grid
    }

    pub fn mixands(&self) -> &[Mixand] {
        &self.mixands
    }

    pub fn mixands_mut(&mut self) -> &mut [Mixand] {
        &mut self.mixands
    }

    pub fn into_mixands(self) -> Vec<Mixand> {
        self.mixands
    }

    pub fn state_dim(&self) -> usize {
        self.mixands[0].mean.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Linear,
    Quadratic,
    NaturalCubic,
}

/// An interpolant through `(node, value)` pairs. Evaluation outside the node
/// span is an error.
#[derive(Debug, Clone)]
pub struct Curve {
    nodes: Vec<f64>,
    values: Vec<f64>,
    kind: CurveKind,
    /// Second derivatives at the nodes (natural spline only).
    second: Vec<f64>,
}

impl Curve {
    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        let lo = self.nodes[0];
        let hi = self.nodes[self.nodes.len() - 1];
        if !(z >= lo && z <= hi) {
            return Err(Error::Extrapolation { z, lo, hi });
        }
        // Exact reproduction at the data nodes.
        if let Ok(i) = self.nodes.binary_search_by(|n| n.partial_cmp(&z).unwrap()) {
            return Ok(self.values[i]);
        }
        let (x, y) = (&self.nodes, &self.values);
        Ok(match self.kind {
            CurveKind::Linear => {
                let t = (z - x[0]) / (x[1] - x[0]);
                y[0] + t * (y[1] - y[0])
            }
            CurveKind::Quadratic => {
                let l0 = (z - x[1]) * (z - x[2]) / ((x[0] - x[1]) * (x[0] - x[2]));
                let l1 = (z - x[0]) * (z - x[2]) / ((x[1] - x[0]) * (x[1] - x[2]));
                let l2 = (z - x[0]) * (z - x[1]) / ((x[2] - x[0]) * (x[2] - x[1]));
                y[0] * l0 + y[1] * l1 + y[2] * l2
            }
            CurveKind::NaturalCubic => {
                let k = x.partition_point(|&n| n < z) - 1;
                let h = x[k + 1] - x[k];
                let a = (x[k + 1] - z) / h;
                let b = (z - x[k]) / h;
                let m = &self.second;
                a * y[k] + b * y[k + 1] + ((a * a * a - a) * m[k] + (b * b * b - b) * m[k + 1]) * h * h / 6.0
            }
        })
    }
}

/// Fits the interpolant for `values` over the grid's nodes: linear for two
/// nodes, quadratic for three, natural cubic spline for four or more.
pub fn fit_curve(nodes: &NodeGrid, values: &[f64]) -> Result<Curve> {
    fit_curve_raw(nodes.nodes(), values)
}

fn fit_curve_raw(nodes: &[f64], values: &[f64]) -> Result<Curve> {
    if nodes.len() != values.len() {
        return Err(Error::Domain(format!("{} values for {} nodes", values.len(), nodes.len())));
    }
    if nodes.len() < 2 {
        return Err(Error::Domain("interpolation needs at least two nodes".into()));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite value at interpolation node {i}")));
    }
    let kind = match nodes.len() {
        2 => CurveKind::Linear,
        3 => CurveKind::Quadratic,
        _ => CurveKind::NaturalCubic,
    };
    let second = if kind == CurveKind::NaturalCubic { natural_second_derivatives(nodes, values) } else { Vec::new() };
    Ok(Curve { nodes: nodes.to_vec(), values: values.to_vec(), kind, second })
}

/// Thomas-algorithm solve for spline second derivatives with zero end values.
fn natural_second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    let inner = n - 2;
    let mut diag = vec![0.0; inner];
    let mut rhs = vec![0.0; inner];
    let mut upper = vec![0.0; inner];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        diag[i - 1] = 2.0 * (h0 + h1);
        upper[i - 1] = h1;
        rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
    }
    // Sub-diagonal entry of row i (i >= 1) is h_{i}, the left interval of node i + 1.
    for i in 1..inner {
        let sub = x[i + 1] - x[i];
        let w = sub / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    for i in (0..inner).rev() {
        let next = if i + 1 < inner { m[i + 2] } else { 0.0 };
        m[i + 1] = (rhs[i] - upper[i] * next) / diag[i];
    }
    m
}

/// Linear map from values on a source grid to interpolated values on a
/// target grid. Every curve kind here is linear in the data, so one matrix
/// serves every scalar entry of a mixand.
struct InterpolationMatrix {
    rows: Vec<Vec<f64>>,
}

impl InterpolationMatrix {
    fn new(source: &[f64], target: &[f64]) -> Result<Self> {
        let n = source.len();
        let mut rows = vec![vec![0.0; n]; target.len()];
        let mut unit = vec![0.0; n];
        for j in 0..n {
            unit[j] = 1.0;
            let curve = fit_curve_raw(source, &unit)?;
            for (row, &z) in rows.iter_mut().zip(target) {
                row[j] = curve.eval(z)?;
            }
            unit[j] = 0.0;
        }
        Ok(Self { rows })
    }

    fn apply(&self, row: usize, values: impl Iterator<Item = f64>) -> f64 {
        self.rows[row].iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Coordinate along which the per-entry curves are fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Abscissa {
    /// The mixing parameter itself.
    #[default]
    Z,
    /// `√z`. Cholesky entries of `P + zG` are close to linear in `√z` once the
    /// `z` term dominates, and exactly so for a pure scale mixture.
    SqrtZ,
}

impl Abscissa {
    fn map(self, z: &[f64]) -> Vec<f64> {
        match self {
            Abscissa::Z => z.to_vec(),
            Abscissa::SqrtZ => z.iter().map(|v| v.sqrt()).collect(),
        }
    }
}

/// Re-expresses `belief` on `target` by interpolating, entry by entry, the
/// mixand means, the lower-triangular Cholesky entries, and the log-weights,
/// with `z` as the abscissa.
///
/// Identical grids return the belief unchanged. Log-weights are not
/// normalized.
pub fn remap_belief(belief: &CgmmBelief, target: &NodeGrid) -> Result<CgmmBelief> {
    remap_belief_along(belief, target, Abscissa::Z)
}

/// As [`remap_belief`], fitting the curves along `abscissa`.
pub fn remap_belief_along(belief: &CgmmBelief, target: &NodeGrid, abscissa: Abscissa) -> Result<CgmmBelief> {
    let source = belief.grid();
    if source.nodes() == target.nodes() {
        return Ok(CgmmBelief { grid: target.clone(), mixands: belief.mixands.clone() });
    }
    if let Some(&node) = target.nodes().iter().find(|&&z| !source.spans(z)) {
        return Err(Error::NestingViolation { node, lo: source.first(), hi: source.last() });
    }
    let map = InterpolationMatrix::new(&abscissa.map(source.nodes()), &abscissa.map(target.nodes()))?;
    let src = belief.mixands();
    let d = belief.state_dim();
    let mixands = target
        .nodes()
        .iter()
        .enumerate()
        .map(|(t, &z)| {
            let mean = DVector::from_fn(d, |i, _| map.apply(t, src.iter().map(|m| m.mean[i])));
            let mut chol = DMatrix::zeros(d, d);
            for r in 0..d {
                for c in 0..=r {
                    chol[(r, c)] = map.apply(t, src.iter().map(|m| m.chol[(r, c)]));
                }
                // A negative diagonal is an interpolation artifact.
                chol[(r, r)] = chol[(r, r)].max(0.0);
            }
            let log_weight = map.apply(t, src.iter().map(|m| m.log_weight));
            Mixand { z, mean, chol, log_weight }
        })
        .collect();
    Ok(CgmmBelief { grid: target.clone(), mixands })
}

/// A grid evaluated outside the span of the grid it is interpolated from.
#[derive(Debug, Clone, PartialEq)]
pub struct NestingViolation {
    pub source_index: usize,
    pub target_index: usize,
    pub node: f64,
    pub lo: f64,
    pub hi: f64,
}

impl fmt::Display for NestingViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "grid {} node {} lies outside grid {} span [{}, {}]",
            self.target_index, self.node, self.source_index, self.lo, self.hi
        )
    }
}

impl From<NestingViolation> for Error {
    fn from(v: NestingViolation) -> Self {
        Error::NestingViolation { node: v.node, lo: v.lo, hi: v.hi }
    }
}

/// Checks a pipeline of grids where each grid is evaluated from the one
/// before it. Returns the first violation.
pub fn check_nesting(grids: &[&NodeGrid]) -> std::result::Result<(), NestingViolation> {
    for (k, pair) in grids.windows(2).enumerate() {
        let (source, target) = (pair[0], pair[1]);
        if let Some(&node) = target.nodes().iter().find(|&&z| !source.spans(z)) {
            return Err(NestingViolation {
                source_index: k,
                target_index: k + 1,
                node,
                lo: source.first(),
                hi: source.last(),
            });
        }
    }
    Ok(())
}
