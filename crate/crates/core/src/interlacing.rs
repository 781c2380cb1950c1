//! Interlacing checks under a change of Robin coupling at one vertex and under
//! vertex identifications:
//!
//! ```text
//! λ_n(Γ_α) ≤ λ_n(Γ_α') ≤ λ_{n+1}(Γ_α)   for α < α' ≤ ∞
//! λ_n(Γ)   ≤ λ_n(Γ')   ≤ λ_{n+k}(Γ)     for k identifications
//! ```

use std::fmt;

use crate::graph::{glue, Edge, EdgePoint, GraphError, MetricGraph, VertexCondition, VertexId};
use crate::spectral::{eigenvalues, SpectralError, SpectralOptions, SpectrumQuery};

/// Violations are measured relative to `max(1, |λ|)`.
pub const INTERLACING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Robin,
    Glue,
    MultiGlue,
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Robin => "robin",
            Suite::Glue => "glue",
            Suite::MultiGlue => "multi_glue",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterlacingCheck {
    pub suite: Suite,
    pub description: String,
    /// Shift in the upper bound: 1 for a coupling change, `k` for `k` identifications.
    pub shift: usize,
    pub n_max: usize,
    /// Largest scaled violation of either inequality; `0` when both hold exactly.
    pub worst: f64,
    /// Index where `worst` occurs.
    pub worst_n: usize,
}

impl InterlacingCheck {
    pub fn passed(&self) -> bool {
        self.worst <= INTERLACING_TOL
    }
}

fn compare(
    base: &MetricGraph,
    modified: &MetricGraph,
    shift: usize,
    n_max: usize,
    opts: &SpectralOptions,
) -> Result<(f64, usize), SpectralError> {
    let lo = eigenvalues(base, SpectrumQuery::Count(n_max + shift), opts)?.lambdas();
    let mid = eigenvalues(modified, SpectrumQuery::Count(n_max), opts)?.lambdas();
    let mut worst = (0.0, 0);
    for n in 1..=n_max {
        let (a, b, c) = (lo[n - 1], mid[n - 1], lo[n - 1 + shift]);
        let scale = 1f64.max(b.abs());
        let v = ((a - b).max(b - c) / scale).max(0.0);
        if v > worst.0 {
            worst = (v, n);
        }
    }
    Ok(worst)
}

/// Raises the coupling at `v` to `to` (which may be Dirichlet).
pub fn robin_check(
    g: &MetricGraph,
    v: VertexId,
    to: VertexCondition,
    n_max: usize,
    opts: &SpectralOptions,
) -> Result<InterlacingCheck, SpectralError> {
    let from = g.condition(v);
    let (Some(a), b) = (from.alpha(), to.alpha()) else {
        return Err(SpectralError::Graph(GraphError::InvalidCoupling(f64::INFINITY)));
    };
    if let Some(b) = b.filter(|&b| b < a) {
        return Err(SpectralError::Graph(GraphError::InvalidCoupling(b)));
    }
    let (worst, worst_n) = compare(g, &g.with_condition(v, to), 1, n_max, opts)?;
    let target = b.map_or("inf".to_string(), |b| format!("{b}"));
    Ok(InterlacingCheck {
        suite: Suite::Robin,
        description: format!("vertex {v}: alpha {a} -> {target}"),
        shift: 1,
        n_max,
        worst,
        worst_n,
    })
}

/// Identifies each pair in turn; later pairs refer to the original vertex numbering.
pub fn glue_check(
    g: &MetricGraph,
    pairs: &[(VertexId, VertexId)],
    n_max: usize,
    opts: &SpectralOptions,
) -> Result<InterlacingCheck, SpectralError> {
    let glued = glue_all(g, pairs)?;
    let k = pairs.len();
    let (worst, worst_n) = compare(g, &glued, k, n_max, opts)?;
    let list: Vec<String> = pairs.iter().map(|(a, b)| format!("{a}~{b}")).collect();
    Ok(InterlacingCheck {
        suite: if k == 1 { Suite::Glue } else { Suite::MultiGlue },
        description: format!("identify {}", list.join(",")),
        shift: k,
        n_max,
        worst,
        worst_n,
    })
}

fn glue_all(g: &MetricGraph, pairs: &[(VertexId, VertexId)]) -> Result<MetricGraph, GraphError> {
    // current label of each original vertex
    let mut label: Vec<VertexId> = (0..g.vertex_count()).collect();
    let mut out = g.clone();
    for &(a, b) in pairs {
        let (la, lb) = (label[a], label[b]);
        let (keep, drop) = (la.min(lb), la.max(lb));
        out = glue(&out, keep, drop)?;
        for l in label.iter_mut() {
            if *l == drop {
                *l = keep;
            } else if *l > drop {
                *l -= 1;
            }
        }
    }
    Ok(out)
}

/// Inserts a Neumann vertex at each point. The spectrum is unchanged; the new
/// vertices are numbered after the existing ones, in the order given.
pub fn subdivide(g: &MetricGraph, points: &[EdgePoint]) -> Result<(MetricGraph, Vec<VertexId>), GraphError> {
    let mut conditions = g.conditions().to_vec();
    let mut ids = vec![0; points.len()];
    let mut cuts: Vec<Vec<(f64, VertexId)>> = vec![Vec::new(); g.edge_count()];
    for (i, p) in points.iter().enumerate() {
        let len = g.length(p.edge);
        if !(p.x > 0.0 && p.x < len) {
            return Err(GraphError::InvalidLength { edge: p.edge, length: p.x });
        }
        ids[i] = conditions.len();
        conditions.push(VertexCondition::neumann());
        cuts[p.edge].push((p.x, ids[i]));
    }
    let mut edges = Vec::new();
    for (e, edge) in g.edges().iter().enumerate() {
        let mut c = cuts[e].clone();
        c.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (mut at, mut from) = (0.0, edge.u);
        for (x, v) in c {
            edges.push(Edge { u: from, v, length: x - at });
            at = x;
            from = v;
        }
        edges.push(Edge { u: from, v: edge.v, length: edge.length - at });
    }
    Ok((MetricGraph::new(conditions, edges)?, ids))
}

/// Deterministic low-discrepancy fractions in `[0.15, 0.85]`.
fn fraction(i: usize) -> f64 {
    let golden = 0.618_033_988_749_895;
    0.15 + 0.7 * ((0.5 + golden * i as f64) % 1.0)
}

/// Coupling changes at every non-Dirichlet vertex, single identifications among
/// vertices and interior points, and two- and three-fold identifications.
pub fn run_suites(
    g: &MetricGraph,
    n_max: usize,
    opts: &SpectralOptions,
) -> Result<Vec<InterlacingCheck>, SpectralError> {
    let mut jobs: Vec<Job> = Vec::new();
    for v in 0..g.vertex_count() {
        let Some(a) = g.condition(v).alpha() else { continue };
        if g.degree(v) == 0 {
            continue;
        }
        for to in [VertexCondition::robin(a + 0.5), VertexCondition::robin(a + 3.0), VertexCondition::dirichlet()] {
            jobs.push(Job::Robin { g: g.clone(), v, to });
        }
        jobs.push(Job::Robin { g: g.with_condition(v, VertexCondition::robin(a - 2.0)), v, to: g.condition(v) });
    }

    let points: Vec<EdgePoint> = (0..g.edge_count()).map(|e| EdgePoint::new(e, fraction(e) * g.length(e))).collect();
    let (sub, _) = subdivide(g, &points)?;
    let candidates: Vec<VertexId> =
        (0..sub.vertex_count()).filter(|&v| !sub.condition(v).is_dirichlet() && sub.degree(v) > 0).collect();
    let pairs: Vec<(VertexId, VertexId)> = candidates
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| candidates[i + 1..].iter().map(move |&b| (a, b)))
        .take(12)
        .collect();
    for &p in &pairs {
        jobs.push(Job::Glue { g: sub.clone(), pairs: vec![p] });
    }
    if candidates.len() >= 3 {
        let c = &candidates;
        jobs.push(Job::Glue { g: sub.clone(), pairs: vec![(c[0], c[1]), (c[1], c[2])] });
        if c.len() >= 4 {
            jobs.push(Job::Glue { g: sub.clone(), pairs: vec![(c[0], c[2]), (c[1], c[3])] });
            jobs.push(Job::Glue { g: sub.clone(), pairs: vec![(c[0], c[1]), (c[2], c[3]), (c[1], c[2])] });
        }
    }
    opts.exec.try_map(&jobs, |job| match job {
        Job::Robin { g, v, to } => robin_check(g, *v, *to, n_max, opts),
        Job::Glue { g, pairs } => glue_check(g, pairs, n_max, opts),
    })
}

enum Job {
    Robin { g: MetricGraph, v: VertexId, to: VertexCondition },
    Glue { g: MetricGraph, pairs: Vec<(VertexId, VertexId)> },
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    #[test]
    fn subdivision_keeps_spectrum() {
        let g = MetricGraph::interval(1.0, VertexCondition::dirichlet(), VertexCondition::dirichlet()).unwrap();
        let (s, ids) = subdivide(&g, &[EdgePoint::new(0, 0.3), EdgePoint::new(0, 0.7)]).unwrap();
        assert_eq!(ids, vec![2, 3]);
        assert_eq!(s.edge_count(), 3);
        let l = eigenvalues(&s, SpectrumQuery::Count(4), &SpectralOptions::default()).unwrap().lambdas();
        for (n, x) in l.iter().enumerate() {
            let exact = ((n + 1) as f64 * PI).powi(2);
            assert!((x - exact).abs() < 1e-10 * exact);
        }
    }

    #[test]
    fn interval_robin_sweep() {
        let opts = SpectralOptions::default();
        let base = MetricGraph::interval(1.0, VertexCondition::robin(-2.0), VertexCondition::dirichlet()).unwrap();
        let mut g = base;
        for to in [VertexCondition::robin(0.0), VertexCondition::robin(1.0), VertexCondition::dirichlet()] {
            let c = robin_check(&g, 0, to, 20, &opts).unwrap();
            assert!(c.passed(), "{c:?}");
            g = g.with_condition(0, to);
        }
    }

    #[test]
    fn lowering_coupling_is_rejected() {
        let g = MetricGraph::interval(1.0, VertexCondition::robin(1.0), VertexCondition::dirichlet()).unwrap();
        assert!(robin_check(&g, 0, VertexCondition::robin(0.0), 5, &SpectralOptions::default()).is_err());
    }

    #[test]
    fn lasso_tail_onto_junction() {
        let g = MetricGraph::new(
            vec![VertexCondition::neumann(), VertexCondition::neumann()],
            vec![Edge { u: 0, v: 0, length: 1.0 }, Edge { u: 0, v: 1, length: 2.236 }],
        )
        .unwrap();
        let c = glue_check(&g, &[(0, 1)], 20, &SpectralOptions::default()).unwrap();
        assert!(c.passed(), "{c:?}");
    }

    #[test]
    fn gluing_ends_of_interval_gives_circle() {
        // Neumann interval of length 1 glued into a circle: 0, (2πj)² doubly.
        let g = MetricGraph::interval(1.0, VertexCondition::neumann(), VertexCondition::neumann()).unwrap();
        let circle = glue_all(&g, &[(0, 1)]).unwrap();
        let l = eigenvalues(&circle, SpectrumQuery::Count(5), &SpectralOptions::default()).unwrap().lambdas();
        let tp = (2.0 * PI).powi(2);
        for (x, e) in l.iter().zip([0.0, tp, tp, 4.0 * tp, 4.0 * tp]) {
            assert!((x - e).abs() < 1e-9 * e.max(1.0));
        }
    }

    #[test]
    fn relabelling_across_sequential_glues() {
        let g = MetricGraph::new(
            (0..4).map(|_| VertexCondition::neumann()).collect(),
            vec![Edge { u: 0, v: 1, length: 1.0 }, Edge { u: 1, v: 2, length: 1.3 }, Edge { u: 2, v: 3, length: 0.8 }],
        )
        .unwrap();
        let once = glue_all(&g, &[(0, 3), (1, 2)]).unwrap();
        assert_eq!(once.vertex_count(), 2);
        assert_eq!(once.betti(), 2);
        let chained = glue_all(&g, &[(0, 1), (1, 3)]).unwrap();
        assert_eq!(chained.vertex_count(), 2);
    }

    #[test]
    fn suites_pass_on_star() {
        let g = MetricGraph::new(
            vec![
                VertexCondition::neumann(),
                VertexCondition::dirichlet(),
                VertexCondition::dirichlet(),
                VertexCondition::neumann(),
            ],
            vec![Edge { u: 0, v: 1, length: 0.9 }, Edge { u: 0, v: 2, length: 1.0 }, Edge { u: 0, v: 3, length: 1.1 }],
        )
        .unwrap();
        let checks = run_suites(&g, 12, &SpectralOptions::default()).unwrap();
        assert!(checks.iter().any(|c| c.suite == Suite::MultiGlue));
        for c in checks {
            assert!(c.passed(), "{c:?}");
        }
    }
}
