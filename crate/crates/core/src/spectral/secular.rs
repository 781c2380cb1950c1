//! The vertex-condition system `M(λ) y = 0` on per-edge coefficients.
//!
//! Rows, vertex by vertex: continuity `f(end_i) - f(end_0)` for every further end,
//! then the flux row `cos(θ/2) Σ ∂f - sin(θ/2) f(end_0)` (`f(end_0)` alone at a
//! Dirichlet vertex), with `∂` the derivative into the edge. Every row is divided
//! by the largest single term entering it.

use nalgebra::{DMatrix, DVector};

use super::basis::Branch;
use crate::graph::MetricGraph;

/// Linear functionals on one edge's coefficient pair.
#[derive(Debug, Clone, Copy)]
struct EndRows {
    value: [f64; 2],
    flux: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Basis {
    /// `(s, c)` with `s' = c`, `c' = -λ s`; smooth through `λ = 0`. Used for the determinant.
    Fundamental,
    /// The representation of [`Branch`], with the `sin` column rescaled.
    Stored,
}

/// Scale applied to the first coefficient column of the positive branch.
fn sine_scale(k: f64) -> f64 {
    (1.0 + k * k).sqrt()
}

fn end_rows(lambda: f64, len: f64, basis: Basis) -> (EndRows, EndRows) {
    match (Branch::of(lambda), basis) {
        (Branch::Positive { k }, _) => {
            // Fundamental and stored bases coincide after rescaling: a·sin(kx)/k with a = σ y₀.
            let sigma = sine_scale(k);
            let (sin, cos) = (k * len).sin_cos();
            let start = EndRows { value: [0.0, 1.0], flux: [sigma, 0.0] };
            let end = EndRows { value: [sigma * sin / k, cos], flux: [-sigma * cos, k * sin] };
            (start, end)
        }
        (Branch::Zero, _) => {
            let start = EndRows { value: [0.0, 1.0], flux: [1.0, 0.0] };
            let end = EndRows { value: [len, 1.0], flux: [-1.0, 0.0] };
            (start, end)
        }
        (Branch::Negative { kappa }, Basis::Fundamental) => {
            // Both columns scaled by sech(κL).
            let sigma = (1.0 + kappa * kappa).sqrt();
            let t = kappa * len;
            let sech = 1.0 / t.cosh();
            let tanh = t.tanh();
            let start = EndRows { value: [0.0, sech], flux: [sigma * sech, 0.0] };
            let end = EndRows { value: [sigma * tanh / kappa, 1.0], flux: [-sigma, -kappa * tanh] };
            (start, end)
        }
        (Branch::Negative { kappa }, Basis::Stored) => {
            let e = (-kappa * len).exp();
            let start = EndRows { value: [1.0, e], flux: [-kappa, kappa * e] };
            let end = EndRows { value: [e, 1.0], flux: [kappa * e, -kappa] };
            (start, end)
        }
    }
}

pub(crate) fn matrix(g: &MetricGraph, lambda: f64, basis: Basis) -> DMatrix<f64> {
    let n = 2 * g.edge_count();
    let rows: Vec<(EndRows, EndRows)> = g.edges().iter().map(|e| end_rows(lambda, e.length, basis)).collect();
    let pick = |edge: usize, at_start: bool| if at_start { rows[edge].0 } else { rows[edge].1 };

    let mut m = DMatrix::<f64>::zeros(n, n);
    // Largest single term entering each row, so rows that cancel stay small.
    let mut size = vec![0.0f64; n];
    let mut put = |m: &mut DMatrix<f64>, r: usize, c: usize, x: f64| {
        m[(r, c)] += x;
        size[r] = size[r].max(x.abs());
    };
    let mut r = 0;
    for v in 0..g.vertex_count() {
        let ends = g.ends(v);
        let Some(first) = ends.first() else { continue };
        let base = pick(first.edge, first.at_start);
        for end in &ends[1..] {
            let here = pick(end.edge, end.at_start);
            for j in 0..2 {
                put(&mut m, r, 2 * end.edge + j, here.value[j]);
                put(&mut m, r, 2 * first.edge + j, -base.value[j]);
            }
            r += 1;
        }
        let cond = g.condition(v);
        if cond.is_dirichlet() {
            for j in 0..2 {
                put(&mut m, r, 2 * first.edge + j, base.value[j]);
            }
        } else {
            let (sin, cos) = (0.5 * cond.angle()).sin_cos();
            for end in ends {
                let here = pick(end.edge, end.at_start);
                for j in 0..2 {
                    put(&mut m, r, 2 * end.edge + j, cos * here.flux[j]);
                }
            }
            for j in 0..2 {
                put(&mut m, r, 2 * first.edge + j, -sin * base.value[j]);
            }
        }
        r += 1;
    }
    debug_assert_eq!(r, n);

    for (mut row, &scale) in m.row_iter_mut().zip(&size) {
        if scale > 0.0 {
            row /= scale;
        }
    }
    m
}

/// Regularized secular determinant: continuous in `λ`, zero exactly at eigenvalues.
pub fn secular_value(g: &MetricGraph, lambda: f64) -> f64 {
    if g.edge_count() == 0 {
        return 1.0;
    }
    matrix(g, lambda, Basis::Fundamental).determinant()
}

/// Singular values in descending order.
pub(crate) fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values below `rel · σ_max`.
pub(crate) fn nullity(g: &MetricGraph, lambda: f64, rel: f64) -> usize {
    if g.edge_count() == 0 {
        return 0;
    }
    let s = singular_values(&matrix(g, lambda, Basis::Stored));
    let top = s[0];
    s.iter().filter(|&&x| x < rel * top).count()
}

/// Right singular vector of the smallest singular value, in the stored basis.
pub(crate) fn null_vector(g: &MetricGraph, lambda: f64) -> Vec<[f64; 2]> {
    let m = matrix(g, lambda, Basis::Stored);
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let (idx, _) = svd.singular_values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty");
    let y: DVector<f64> = v_t.row(idx).transpose();
    from_scaled(lambda, &y)
}

fn from_scaled(lambda: f64, y: &DVector<f64>) -> Vec<[f64; 2]> {
    let branch = Branch::of(lambda);
    (0..y.len() / 2)
        .map(|e| {
            let (a, b) = (y[2 * e], y[2 * e + 1]);
            match branch {
                Branch::Positive { k } => [a * sine_scale(k) / k, b],
                _ => [a, b],
            }
        })
        .collect()
}

fn to_scaled(lambda: f64, coefficients: &[[f64; 2]]) -> DVector<f64> {
    let branch = Branch::of(lambda);
    DVector::from_iterator(
        2 * coefficients.len(),
        coefficients.iter().flat_map(|&[a, b]| match branch {
            Branch::Positive { k } => [a * k / sine_scale(k), b],
            _ => [a, b],
        }),
    )
}

/// `‖M y‖∞ / ‖y‖∞` for the row-normalized system in the stored basis.
pub(crate) fn residual(g: &MetricGraph, lambda: f64, coefficients: &[[f64; 2]]) -> f64 {
    let y = to_scaled(lambda, coefficients);
    let top = y.amax();
    if top == 0.0 {
        return 0.0;
    }
    (matrix(g, lambda, Basis::Stored) * &y).amax() / top
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::graph::{Edge, VertexCondition};

    #[test]
    fn dirichlet_interval_zeros() {
        let g = MetricGraph::interval(1.0, VertexCondition::dirichlet(), VertexCondition::dirichlet()).unwrap();
        for n in 1..6 {
            let k = n as f64 * PI;
            let below = secular_value(&g, (k - 1e-3).powi(2));
            let above = secular_value(&g, (k + 1e-3).powi(2));
            assert!(below * above < 0.0, "n = {n}");
            assert!(secular_value(&g, k * k).abs() < 1e-12);
        }
    }

    #[test]
    fn neumann_interval_zero_at_origin() {
        let g = MetricGraph::interval(1.0, VertexCondition::neumann(), VertexCondition::neumann()).unwrap();
        assert!(secular_value(&g, 0.0).abs() < 1e-15);
        assert!(secular_value(&g, -1e-3) * secular_value(&g, 1e-3) < 0.0);
    }

    #[test]
    fn continuous_across_zero() {
        let g = MetricGraph::new(
            vec![VertexCondition::robin(0.4), VertexCondition::neumann()],
            vec![Edge { u: 0, v: 0, length: 1.0 }, Edge { u: 0, v: 1, length: 1.3 }],
        )
        .unwrap();
        let at = secular_value(&g, 0.0);
        assert!((secular_value(&g, 1e-10) - at).abs() < 1e-8);
        assert!((secular_value(&g, -1e-10) - at).abs() < 1e-8);
    }

    #[test]
    fn null_vector_of_dirichlet_interval() {
        let g = MetricGraph::interval(1.0, VertexCondition::dirichlet(), VertexCondition::dirichlet()).unwrap();
        let lam = 4.0 * PI * PI;
        let c = null_vector(&g, lam);
        assert!(c[0][1].abs() < 1e-12 * c[0][0].abs());
        assert!(residual(&g, lam, &c) < 1e-12);
        assert_eq!(nullity(&g, lam, 1e-8), 1);
    }
}
