//! Zero sets, nodal counts and properness.

use super::{EigenPair, SpectralError, SpectralOptions};
use crate::graph::{cut, EdgePoint, MetricGraph, Partition};

/// L² norm below which a normalized eigenfunction counts as vanishing on an edge.
const ZERO_EDGE_NORM: f64 = 1e-9;

/// Interior zeros of an eigenfunction. Zeros within `vertex_zero_tol · L` of a
/// Dirichlet end are dropped; near any other vertex they are snapped onto it,
/// which leaves the partition improper.
pub fn zeros(g: &MetricGraph, pair: &EigenPair, opts: &SpectralOptions) -> Result<Partition, SpectralError> {
    pair.require_coefficients()?;
    let scale = pair.norm(g);
    let mut points = Vec::new();
    for (e, edge) in g.edges().iter().enumerate() {
        let c = pair.coefficients[e];
        let len = edge.length;
        if pair.branch.norm_sq(c, len).sqrt() < ZERO_EDGE_NORM * scale {
            return Err(SpectralError::IdenticallyZeroEdge { edge: e });
        }
        let slack = opts.vertex_zero_tol * len;
        for x in pair.branch.zeros(c, len, slack) {
            if x <= slack {
                if !g.condition(edge.u).is_dirichlet() {
                    points.push(EdgePoint::new(e, 0.0));
                }
            } else if x >= len - slack {
                if !g.condition(edge.v).is_dirichlet() {
                    points.push(EdgePoint::new(e, len));
                }
            } else {
                points.push(EdgePoint::new(e, x));
            }
        }
    }
    Ok(Partition::new(g, points))
}

/// `μ` (number of zeros) and `ν` (number of nodal domains) with the zero set.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalCounts {
    pub mu: usize,
    pub nu: usize,
    /// `β` of the graph cut at the zeros.
    pub betti_cut: usize,
    pub zeros: Partition,
}

/// Nodal counts, with `ν` obtained both from the components of `Γ∖P` and from the
/// Betti-number identity `ν = μ + k - (β_Γ - β_{Γ∖P})`.
pub fn nodal_counts(g: &MetricGraph, pair: &EigenPair, opts: &SpectralOptions) -> Result<NodalCounts, SpectralError> {
    let p = zeros(g, pair, opts)?;
    if !p.proper {
        return Err(SpectralError::ImproperEigenfunction { index: pair.index });
    }
    let cg = cut(g, &p)?;
    let mu = p.size();
    let nu = cg.component_count;
    let betti_cut = cg.graph.betti();
    let from_identity = (mu + g.component_count() + betti_cut) as i64 - g.betti() as i64;
    if from_identity != nu as i64 {
        return Err(SpectralError::Inconsistent(format!(
            "nodal domains: {nu} components but identity gives {from_identity}"
        )));
    }
    Ok(NodalCounts { mu, nu, betti_cut, zeros: p })
}

/// Simple, and non-vanishing (relative to `sup |f|`) at every non-Dirichlet vertex.
pub fn is_proper(g: &MetricGraph, pair: &EigenPair, opts: &SpectralOptions) -> bool {
    if !pair.simple || pair.coefficients.len() != g.edge_count() {
        return false;
    }
    let sup = pair.sup_norm(g);
    (0..g.vertex_count())
        .filter(|&v| g.degree(v) > 0 && !g.condition(v).is_dirichlet())
        .all(|v| pair.vertex_value(g, v).abs() > opts.vertex_zero_tol * sup)
}
