//! Gauss-Laguerre quadrature on `[0, ∞)` with weight `e^{-z}`.
//!
//! Nodes are the roots of the Laguerre polynomial `L_n`, found by Newton
//! iteration on the three-term recurrence. Weights use the closed form
//! `w_i = z_i / ((n + 1)^2 L_{n+1}(z_i)^2)`.

use crate::error::{Error, Result};

/// Largest supported rule order. Beyond this the smallest weights approach
/// the bottom of the double-precision range.
pub const MAX_ORDER: usize = 64;

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_REL_TOL: f64 = 1e-14;
const NEWTON_STALL_TOL: f64 = 1e-11;

/// An order-`n` Gauss-Laguerre rule. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLaguerreRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLaguerreRule {
    /// Builds the order-`n` rule, `1 <= n <= 64`.
    pub fn new(n: usize) -> Result<Self> {
        build_rule(n)
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes in ascending order.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Natural logarithms of the weights.
    pub fn log_weights(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.ln()).collect()
    }

    /// `Σ w_i f(z_i)`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, f: F) -> Result<f64> {
        integrate(self, f)
    }
}

/// Evaluates `L_n(z)` and `L_{n-1}(z)` with the stable upward recurrence.
fn laguerre_pair(n: usize, z: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    for k in 0..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - z) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// The Laguerre polynomial `L_n(z)`.
pub fn laguerre_eval(n: usize, z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::Domain(format!("laguerre_eval: non-finite argument {z}")));
    }
    Ok(laguerre_pair(n, z).0)
}

/// Derivative `L_n'(z) = n (L_n(z) - L_{n-1}(z)) / z`, valid for `z != 0`.
fn laguerre_derivative(n: usize, z: f64, ln: f64, ln1: f64) -> f64 {
    n as f64 * (ln - ln1) / z
}

pub fn build_rule(n: usize) -> Result<GaussLaguerreRule> {
    if n == 0 || n > MAX_ORDER {
        return Err(Error::Config(format!("Gauss-Laguerre order {n} outside supported range 1..={MAX_ORDER}")));
    }
    let nf = n as f64;
    let mut nodes: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        // Asymptotic seeds, each extrapolated from the two previous roots.
        let mut z = match i {
            0 => 3.0 / (1.0 + 2.4 * nf),
            1 => nodes[0] + 15.0 / (1.0 + 2.5 * nf),
            _ => {
                let ai = (i - 1) as f64;
                nodes[i - 1] + (1.0 + 2.55 * ai) / (1.9 * ai) * (nodes[i - 1] - nodes[i - 2])
            }
        };
        let mut converged = false;
        let mut last_step = f64::INFINITY;
        for _ in 0..NEWTON_MAX_ITER {
            let (ln, ln1) = laguerre_pair(n, z);
            let dz = ln / laguerre_derivative(n, z, ln, ln1);
            z -= dz;
            if !z.is_finite() {
                break;
            }
            // Small roots of high orders bottom out at round-off above the
            // relative tolerance; accept once the step stops shrinking there.
            let stalled = dz.abs() <= NEWTON_STALL_TOL * z.abs() && dz.abs() >= last_step;
            if dz.abs() <= NEWTON_REL_TOL * z.abs() || stalled {
                converged = true;
                break;
            }
            last_step = dz.abs();
        }
        let ordered = i == 0 || z > nodes[i - 1];
        if !converged || z <= 0.0 || !ordered {
            return Err(Error::Numerical(format!("Laguerre root {i} of order {n} failed to converge")));
        }
        nodes.push(z);
    }
    let scale = (nf + 1.0) * (nf + 1.0);
    let weights = nodes
        .iter()
        .map(|&z| {
            let next = laguerre_pair(n + 1, z).0;
            z / (scale * next * next)
        })
        .collect();
    Ok(GaussLaguerreRule { nodes, weights })
}

/// `Σ w_i f(z_i)`; fails if `f` is non-finite at any node.
pub fn integrate<F: FnMut(f64) -> f64>(rule: &GaussLaguerreRule, mut f: F) -> Result<f64> {
    let mut acc = 0.0;
    for (i, (&z, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        let fz = f(z);
        if !fz.is_finite() {
            return Err(Error::Numerical(format!("integrand non-finite at node {i} (z = {z})")));
        }
        acc += w * fz;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    /// Golub-Welsch: nodes are eigenvalues of the Jacobi matrix of the
    /// Laguerre recurrence, weights the squared first eigenvector components.
    fn golub_welsch(n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut j = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            j[(i, i)] = 2.0 * i as f64 + 1.0;
            if i + 1 < n {
                j[(i, i + 1)] = (i + 1) as f64;
                j[(i + 1, i)] = (i + 1) as f64;
            }
        }
        let eig = j.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> =
            (0..n).map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2))).collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        pairs.into_iter().unzip()
    }

    #[test]
    fn laguerre_low_orders() {
        assert_eq!(laguerre_eval(0, 3.7).unwrap(), 1.0);
        assert_eq!(laguerre_eval(1, 1.0).unwrap(), 0.0);
        let root = 2.0 - 2f64.sqrt();
        assert!(laguerre_eval(2, root).unwrap().abs() < 1e-12);
        let l2 = |z: f64| (z * z - 4.0 * z + 2.0) / 2.0;
        for &z in &[0.0, 0.3, 1.7, 5.0, 12.5] {
            assert_relative_eq!(laguerre_eval(2, z).unwrap(), l2(z), epsilon = 1e-13);
        }
    }

    #[test]
    fn laguerre_rejects_non_finite() {
        assert!(matches!(laguerre_eval(3, f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(laguerre_eval(3, f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn order_one_rule() {
        let rule = build_rule(1).unwrap();
        assert_relative_eq!(rule.nodes()[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(rule.weights()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn order_two_rule_closed_form() {
        let rule = build_rule(2).unwrap();
        let s2 = 2f64.sqrt();
        assert_relative_eq!(rule.nodes()[0], 2.0 - s2, epsilon = 1e-14);
        assert_relative_eq!(rule.nodes()[1], 2.0 + s2, epsilon = 1e-14);
        // w = z / (9 L_3(z)^2) simplifies to (2 ± √2) / 4.
        assert_relative_eq!(rule.weights()[0], (2.0 + s2) / 4.0, epsilon = 1e-14);
        assert_relative_eq!(rule.weights()[1], (2.0 - s2) / 4.0, epsilon = 1e-14);
        let first_moment = rule.integrate(|z| z).unwrap();
        assert_relative_eq!(first_moment, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn order_ten_moments() {
        let rule = build_rule(10).unwrap();
        let total: f64 = rule.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((rule.integrate(|z| z).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn order_range_is_enforced() {
        assert!(matches!(build_rule(0), Err(Error::Config(_))));
        assert!(matches!(build_rule(65), Err(Error::Config(_))));
        assert!(build_rule(64).is_ok());
    }

    #[test]
    fn integrate_examples() {
        let r5 = build_rule(5).unwrap();
        assert!((r5.integrate(|_| 1.0).unwrap() - 1.0).abs() < 1e-12);
        let r2 = build_rule(2).unwrap();
        assert!((r2.integrate(|z| z.powi(3)).unwrap() - 6.0).abs() < 1e-9);
        let r20 = build_rule(20).unwrap();
        assert!((r20.integrate(|z| (-z).exp()).unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn integrate_reports_bad_node() {
        let r3 = build_rule(3).unwrap();
        let err = r3.integrate(|z| if z > 2.0 { f64::NAN } else { z }).unwrap_err();
        assert!(err.to_string().contains("node 1"), "{err}");
    }

    #[test]
    fn nodes_are_roots_for_all_orders() {
        for n in 1..=MAX_ORDER {
            let rule = build_rule(n).unwrap();
            assert_eq!(rule.order(), n);
            for (i, &z) in rule.nodes().iter().enumerate() {
                assert!(z > 0.0);
                if i > 0 {
                    assert!(z > rule.nodes()[i - 1]);
                }
                let (ln, ln1) = laguerre_pair(n, z);
                let deriv = laguerre_derivative(n, z, ln, ln1);
                assert!(ln.abs() <= 1e-10 * deriv.abs().max(1.0), "n={n} i={i}");
            }
            assert!(rule.weights().iter().all(|&w| w > 0.0));
            let total: f64 = rule.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "n={n} sum={total}");
        }
    }

    #[test]
    fn weights_match_golub_welsch() {
        for n in 1..=40 {
            let rule = build_rule(n).unwrap();
            let (gw_nodes, gw_weights) = golub_welsch(n);
            for i in 0..n {
                assert_relative_eq!(rule.nodes()[i], gw_nodes[i], max_relative = 1e-10);
                assert!(
                    (rule.weights()[i] - gw_weights[i]).abs() < 1e-10,
                    "n={n} i={i}: {} vs {}",
                    rule.weights()[i],
                    gw_weights[i]
                );
            }
        }
    }

    #[test]
    fn monomial_exactness() {
        for n in 1..=20 {
            let rule = build_rule(n).unwrap();
            let mut factorial = 1.0;
            for k in 0..=(2 * n - 1) {
                if k > 0 {
                    factorial *= k as f64;
                }
                let got = rule.integrate(|z| z.powi(k as i32)).unwrap();
                assert!(((got - factorial) / factorial).abs() < 1e-8, "n={n} k={k}: {got} vs {factorial}");
            }
        }
    }
}
