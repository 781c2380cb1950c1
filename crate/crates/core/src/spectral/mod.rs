//! Spectrum of `-d²/dx²` on a metric graph with δ-type vertex conditions.
//!
//! Eigenvalues come from bisection on the counting function (see [`count_below`]),
//! which never misses or duplicates a root. Eigenfunctions are null vectors of the
//! secular matrix at the eigenvalue, stored per edge in closed form.

mod basis;
mod counting;
mod nodal;
mod secular;
mod solver;

use thiserror::Error;

pub use basis::Branch;
pub use counting::count_below;
pub use nodal::{is_proper, nodal_counts, zeros, NodalCounts};
pub use secular::secular_value;
pub use solver::{eigenvalue, eigenvalues, Spectrum, SpectrumQuery, WeylAudit};

use crate::graph::{EdgeId, GraphError, MetricGraph, VertexId};
use crate::par::Exec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("root bracketing failed: {0}")]
    BracketFailure(String),
    #[error("eigenvalue {lambda} has multiplicity {multiplicity}; eigenfunction not unique")]
    DegenerateEigenvalue { lambda: f64, multiplicity: usize },
    #[error("eigenfunction vanishes identically on edge {edge}")]
    IdenticallyZeroEdge { edge: EdgeId },
    #[error("eigenfunction {index} is improper")]
    ImproperEigenfunction { index: usize },
    #[error("eigenpair has no eigenfunction coefficients")]
    NoCoefficients,
    #[error("eigenvalue index must be at least 1, got {0}")]
    BadIndex(usize),
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    /// Relative bracket width at which bisection stops.
    pub root_tol: f64,
    /// Singular values below this fraction of the largest count towards multiplicity.
    pub multiplicity_tol: f64,
    /// Relative size of `|f(v)|` (against `sup |f|`) below which `f` vanishes at `v`.
    pub vertex_zero_tol: f64,
    /// Relative gap below which eigenvalues are treated as one cluster.
    pub cluster_tol: f64,
    pub exec: Exec,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            root_tol: 4.0 * f64::EPSILON,
            multiplicity_tol: 1e-8,
            vertex_zero_tol: 1e-9,
            cluster_tol: 1e-10,
            exec: Exec::default(),
        }
    }
}

/// An eigenvalue, optionally with its eigenfunction.
///
/// `coefficients` is empty until [`eigenfunction`] fills it; see [`Branch`] for
/// the per-edge representation.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub index: usize,
    pub lambda: f64,
    pub branch: Branch,
    pub multiplicity: usize,
    pub simple: bool,
    pub coefficients: Vec<[f64; 2]>,
    pub normalized: bool,
}

impl EigenPair {
    /// Signed spectral parameter: `√λ`, or `-√(-λ)` on the negative branch.
    pub fn k(&self) -> f64 {
        self.lambda.signum() * self.lambda.abs().sqrt()
    }

    fn require_coefficients(&self) -> Result<(), SpectralError> {
        if self.coefficients.is_empty() {
            Err(SpectralError::NoCoefficients)
        } else {
            Ok(())
        }
    }

    pub fn value(&self, g: &MetricGraph, e: EdgeId, x: f64) -> f64 {
        self.branch.value(self.coefficients[e], g.length(e), x)
    }

    /// Derivative along the edge orientation.
    pub fn derivative(&self, g: &MetricGraph, e: EdgeId, x: f64) -> f64 {
        self.branch.derivative(self.coefficients[e], g.length(e), x)
    }

    pub fn vertex_value(&self, g: &MetricGraph, v: VertexId) -> f64 {
        match g.ends(v).first() {
            Some(end) => self.value(g, end.edge, if end.at_start { 0.0 } else { g.length(end.edge) }),
            None => 0.0,
        }
    }

    /// Sum of derivatives into the edges at `v`.
    pub fn vertex_flux(&self, g: &MetricGraph, v: VertexId) -> f64 {
        g.ends(v)
            .iter()
            .map(|end| {
                if end.at_start {
                    self.derivative(g, end.edge, 0.0)
                } else {
                    -self.derivative(g, end.edge, g.length(end.edge))
                }
            })
            .sum()
    }

    /// L² norm from closed-form edge integrals.
    pub fn norm(&self, g: &MetricGraph) -> f64 {
        self.coefficients.iter().zip(g.edges()).map(|(&c, e)| self.branch.norm_sq(c, e.length)).sum::<f64>().sqrt()
    }

    /// `sup |f|`, attained at an edge end or an interior crest.
    pub fn sup_norm(&self, g: &MetricGraph) -> f64 {
        let mut sup: f64 = 0.0;
        for (e, edge) in g.edges().iter().enumerate() {
            let c = self.coefficients[e];
            let len = edge.length;
            sup = sup.max(self.value(g, e, 0.0).abs()).max(self.value(g, e, len).abs());
            if let Branch::Positive { k } = self.branch {
                let theta = c[1].atan2(c[0]);
                let half = 0.5 * std::f64::consts::PI;
                let first = ((theta - half) / std::f64::consts::PI).ceil();
                let x = (first * std::f64::consts::PI + half - theta) / k;
                if x < len {
                    sup = sup.max(c[0].hypot(c[1]));
                }
            }
        }
        sup
    }

    /// Coefficients of `A s + B c` with `(s, c) = (sinh κx, cosh κx)` on the negative branch.
    pub fn hyperbolic_coefficients(&self, g: &MetricGraph) -> Vec<[f64; 2]> {
        self.coefficients.iter().zip(g.edges()).map(|(&c, e)| self.branch.to_hyperbolic(c, e.length)).collect()
    }
}

/// Fills in the normalized eigenfunction of a simple eigenvalue.
///
/// The sign is fixed so that the first coefficient (in edge order) that is not
/// negligible is positive.
pub fn eigenfunction(g: &MetricGraph, pair: &EigenPair) -> Result<EigenPair, SpectralError> {
    if pair.multiplicity > 1 {
        return Err(SpectralError::DegenerateEigenvalue { lambda: pair.lambda, multiplicity: pair.multiplicity });
    }
    let mut out = pair.clone();
    out.coefficients = secular::null_vector(g, pair.lambda);
    let norm = out.norm(g);
    let top = out.coefficients.iter().flatten().fold(0.0f64, |m, c| m.max(c.abs()));
    let sign = out.coefficients.iter().flatten().find(|c| c.abs() > 1e-9 * top).map_or(1.0, |c| c.signum());
    for c in out.coefficients.iter_mut().flatten() {
        *c *= sign / norm;
    }
    out.normalized = true;
    Ok(out)
}

/// Residual of the vertex conditions in the row-normalized secular system.
pub fn vertex_residual(g: &MetricGraph, pair: &EigenPair) -> Result<f64, SpectralError> {
    pair.require_coefficients()?;
    Ok(secular::residual(g, pair.lambda, &pair.coefficients))
}

/// `h[f, f] / ‖f‖²` with `h[f, f] = Σ ∫ |f'|² + Σ α_v |f(v)|²`.
pub fn rayleigh_quotient(g: &MetricGraph, pair: &EigenPair) -> Result<f64, SpectralError> {
    pair.require_coefficients()?;
    let mut h: f64 = pair.coefficients.iter().zip(g.edges()).map(|(&c, e)| pair.branch.energy(c, e.length)).sum();
    for v in 0..g.vertex_count() {
        if let Some(alpha) = g.condition(v).alpha() {
            if g.degree(v) > 0 {
                h += alpha * pair.vertex_value(g, v).powi(2);
            }
        }
    }
    Ok(h / pair.norm(g).powi(2))
}

pub fn ground_energy(g: &MetricGraph, opts: &SpectralOptions) -> Result<f64, SpectralError> {
    Ok(eigenvalue(g, 1, opts)?.lambda)
}

/// Normalized ground state of a connected graph.
pub fn ground_state(g: &MetricGraph, opts: &SpectralOptions) -> Result<EigenPair, SpectralError> {
    eigenfunction(g, &eigenvalue(g, 1, opts)?)
}
