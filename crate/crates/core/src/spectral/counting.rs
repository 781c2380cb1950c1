//! Eigenvalue counting without root finding.
//!
//! For `λ` away from the Dirichlet spectra of the edge pieces,
//!
//! ```text
//! N(λ) = #{λ_n < λ} = N_D(λ) + n₋(Q(λ))
//! ```
//!
//! where `N_D` counts Dirichlet eigenvalues of the pieces below `λ` and `Q(λ)` is the
//! quadratic form `h[f] - λ‖f‖²` restricted to edgewise solutions, written in the
//! values at the non-Dirichlet vertices. Each piece of length `ℓ` contributes
//! `(1/s)[[c, -1], [-1, c]]` with `s = sin(kℓ)/k` and `c = cos kℓ`. Edges are split
//! into up to eight equal pieces (adding invisible Neumann vertices) so that no
//! piece sits close to one of its Dirichlet eigenvalues.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::graph::MetricGraph;

const MAX_PIECES: usize = 8;
const POLE_GUARD: f64 = 0.25;

/// `(c/s, 1/s)` for a piece of length `len`.
fn piece_entries(lambda: f64, len: f64) -> (f64, f64) {
    if lambda > 0.0 {
        let k = lambda.sqrt();
        let (sin, cos) = (k * len).sin_cos();
        (k * cos / sin, k / sin)
    } else if lambda < 0.0 {
        let kappa = (-lambda).sqrt();
        let t = kappa * len;
        (kappa / t.tanh(), kappa / t.sinh())
    } else {
        (1.0 / len, 1.0 / len)
    }
}

fn pieces(lambda: f64, len: f64) -> usize {
    if lambda <= 0.0 {
        return 1;
    }
    let k = lambda.sqrt();
    let mut best = (0.0, 1);
    for q in 1..=MAX_PIECES {
        let t = k * len / q as f64;
        let guard = if t < 0.5 * PI { 1.0 } else { t.sin().abs() };
        if guard >= POLE_GUARD {
            return q;
        }
        if guard > best.0 {
            best = (guard, q);
        }
    }
    best.1
}

/// Dirichlet eigenvalues `(jπ/ℓ)²` strictly below `λ`.
fn dirichlet_count(lambda: f64, len: f64) -> usize {
    if lambda <= 0.0 {
        return 0;
    }
    let r = lambda.sqrt() * len / PI;
    (r.ceil() as usize).saturating_sub(1)
}

/// Counting function of one graph, with the free-vertex numbering precomputed.
#[derive(Debug, Clone)]
pub struct Counter<'a> {
    g: &'a MetricGraph,
    free: Vec<Option<usize>>,
    free_count: usize,
}

impl<'a> Counter<'a> {
    pub fn new(g: &'a MetricGraph) -> Self {
        let mut free_count = 0;
        let free = g
            .conditions()
            .iter()
            .map(|c| {
                (!c.is_dirichlet()).then(|| {
                    free_count += 1;
                    free_count - 1
                })
            })
            .collect();
        Self { g, free, free_count }
    }

    pub fn graph(&self) -> &MetricGraph {
        self.g
    }

    /// Number of eigenvalues strictly below `lambda`, with multiplicity.
    pub fn count(&self, lambda: f64) -> usize {
        let g = self.g;
        let splits: Vec<usize> = g.edges().iter().map(|e| pieces(lambda, e.length)).collect();
        let size = self.free_count + splits.iter().map(|q| q - 1).sum::<usize>();
        let mut q = DMatrix::<f64>::zeros(size, size);
        let mut dirichlet = 0;
        let mut next_inner = self.free_count;

        let add = |q: &mut DMatrix<f64>, i: Option<usize>, j: Option<usize>, diag: f64, off: f64| match (i, j) {
            (Some(i), Some(j)) if i == j => q[(i, i)] += 2.0 * (diag - off),
            _ => {
                if let Some(i) = i {
                    q[(i, i)] += diag;
                }
                if let Some(j) = j {
                    q[(j, j)] += diag;
                }
                if let (Some(i), Some(j)) = (i, j) {
                    q[(i, j)] -= off;
                    q[(j, i)] -= off;
                }
            }
        };

        for (e, &parts) in g.edges().iter().zip(&splits) {
            let len = e.length / parts as f64;
            let (diag, off) = piece_entries(lambda, len);
            dirichlet += parts * dirichlet_count(lambda, len);
            let mut start = self.free[e.u];
            for _ in 1..parts {
                let inner = Some(next_inner);
                next_inner += 1;
                add(&mut q, start, inner, diag, off);
                start = inner;
            }
            add(&mut q, start, self.free[e.v], diag, off);
        }

        for (v, c) in g.conditions().iter().enumerate() {
            if let (Some(i), Some(alpha)) = (self.free[v], c.alpha()) {
                q[(i, i)] += alpha;
            }
        }

        let negative =
            if size == 0 { 0 } else { SymmetricEigen::new(q).eigenvalues.iter().filter(|&&x| x < 0.0).count() };
        dirichlet + negative
    }
}

/// Number of eigenvalues of `g` strictly below `lambda`.
pub fn count_below(g: &MetricGraph, lambda: f64) -> usize {
    Counter::new(g).count(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, VertexCondition};

    fn interval(l: f64, a: VertexCondition, b: VertexCondition) -> MetricGraph {
        MetricGraph::interval(l, a, b).unwrap()
    }

    #[test]
    fn dirichlet_interval() {
        let g = interval(1.0, VertexCondition::dirichlet(), VertexCondition::dirichlet());
        let pi2 = PI * PI;
        assert_eq!(count_below(&g, 0.5 * pi2), 0);
        assert_eq!(count_below(&g, 1.5 * pi2), 1);
        assert_eq!(count_below(&g, 24.0 * pi2), 4);
        assert_eq!(count_below(&g, 26.0 * pi2), 5);
    }

    #[test]
    fn neumann_interval_counts_zero_mode() {
        let g = interval(2.0, VertexCondition::neumann(), VertexCondition::neumann());
        assert_eq!(count_below(&g, -1.0), 0);
        assert_eq!(count_below(&g, 0.0), 0);
        assert_eq!(count_below(&g, 1e-6), 1);
        // eigenvalues (jπ/2)²
        for j in 1..30 {
            let lam = (j as f64 * PI / 2.0).powi(2);
            assert_eq!(count_below(&g, lam * (1.0 - 1e-9)), j);
            assert_eq!(count_below(&g, lam * (1.0 + 1e-9)), j + 1);
        }
    }

    #[test]
    fn robin_bound_state() {
        // f'(0) = -10 f(0) in the into-edge sense, Dirichlet at 1: one negative eigenvalue
        // with κ solving κ coth κ = 10.
        let g = interval(1.0, VertexCondition::robin(-10.0), VertexCondition::dirichlet());
        assert_eq!(count_below(&g, 0.0), 1);
        let kappa = {
            let (mut lo, mut hi) = (1.0f64, 20.0f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid / mid.tanh() < 10.0 {
                    lo = mid
                } else {
                    hi = mid
                }
            }
            lo
        };
        let lam = -kappa * kappa;
        assert_eq!(count_below(&g, lam * (1.0 + 1e-9)), 0);
        assert_eq!(count_below(&g, lam * (1.0 - 1e-9)), 1);
    }

    #[test]
    fn star_with_dirichlet_tips() {
        // Equilateral 3-star: cos(k) = 0 simple, sin(k) = 0 double.
        let g = MetricGraph::new(
            vec![
                VertexCondition::neumann(),
                VertexCondition::dirichlet(),
                VertexCondition::dirichlet(),
                VertexCondition::dirichlet(),
            ],
            (1..4).map(|v| Edge { u: 0, v, length: 1.0 }).collect(),
        )
        .unwrap();
        let n = |k: f64| count_below(&g, k * k);
        assert_eq!(n(PI / 2.0 - 1e-6), 0);
        assert_eq!(n(PI / 2.0 + 1e-6), 1);
        assert_eq!(n(PI - 1e-6), 1);
        assert_eq!(n(PI + 1e-6), 3);
        assert_eq!(n(1.5 * PI + 1e-6), 4);
    }

    #[test]
    fn loop_counts_both_modes() {
        // Circle of length 1 via a loop at a single Neumann vertex: 0, then (2πj)² doubly.
        let g = MetricGraph::new(vec![VertexCondition::neumann()], vec![Edge { u: 0, v: 0, length: 1.0 }]).unwrap();
        assert_eq!(count_below(&g, 1e-8), 1);
        let two_pi = 2.0 * PI;
        assert_eq!(count_below(&g, (two_pi - 1e-6).powi(2)), 1);
        assert_eq!(count_below(&g, (two_pi + 1e-6).powi(2)), 3);
        assert_eq!(count_below(&g, (2.0 * two_pi + 1e-6).powi(2)), 5);
    }

    #[test]
    fn subdivision_is_invisible() {
        let g = interval(1.0, VertexCondition::robin(0.7), VertexCondition::neumann());
        let split = MetricGraph::new(
            vec![VertexCondition::robin(0.7), VertexCondition::neumann(), VertexCondition::neumann()],
            vec![Edge { u: 0, v: 2, length: 0.37 }, Edge { u: 2, v: 1, length: 0.63 }],
        )
        .unwrap();
        for i in 0..400 {
            let lam = -3.0 + i as f64 * 1.37;
            assert_eq!(count_below(&g, lam), count_below(&split, lam), "λ = {lam}");
        }
    }
}
