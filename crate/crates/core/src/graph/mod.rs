//! Metric graphs with δ-type vertex conditions.
//!
//! A [`MetricGraph`] is an immutable value: a list of vertices, each carrying a
//! [`VertexCondition`], and a list of oriented edges with positive lengths.
//! Loops and parallel edges are allowed. The coordinate on edge `e = (u, v)`
//! runs from `0` at `u` to `L_e` at `v`.

mod text;
mod topology;

use std::f64::consts::PI;

use thiserror::Error;

pub use text::{parse_graph, write_graph, ParseError};
pub use topology::{
    build_robin_tree, choose_sections, cut, glue, is_bipartite, local_sections, Bipartition, CutGraph, EdgeOrigin,
    RobinTree, Subgraph,
};

pub type VertexId = usize;
pub type EdgeId = usize;

/// Relative distance to an edge end below which a point counts as sitting on a vertex.
pub const IMPROPER_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("edge {edge} has invalid length {length}")]
    InvalidLength { edge: EdgeId, length: f64 },
    #[error("edge {edge} references missing vertex {vertex}")]
    MissingVertex { edge: EdgeId, vertex: VertexId },
    #[error("graph has no vertices")]
    Empty,
    #[error("invalid vertex coupling {0}")]
    InvalidCoupling(f64),
    #[error("partition point {index} is improper (on a vertex, outside its edge, or repeated)")]
    ImproperPartition { index: usize },
    #[error("cannot glue vertex {0}: it carries a Dirichlet condition")]
    DirichletGlue(VertexId),
    #[error("cannot glue a vertex to itself")]
    SelfGlue,
    #[error("section points do not leave the graph connected")]
    Disconnects,
    #[error("expected {expected} angles, got {got}")]
    AngleCount { expected: usize, got: usize },
    #[error("graph is not connected")]
    NotConnected,
}

/// Maps an angle onto the half-open circle `(-π, π]`.
pub fn wrap_angle(phi: f64) -> f64 {
    if phi > -PI && phi <= PI {
        return phi;
    }
    let mut t = phi.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    // rem_euclid can return 0 for -0.0 and 2π-ε rounds; keep -π out of range.
    if t <= -PI {
        t += 2.0 * PI;
    }
    t
}

/// δ-type condition `cos(θ/2) Σ f'(v) = sin(θ/2) f(v)`, stored by its angle θ ∈ (-π, π].
///
/// The coupling strength is `α = tan(θ/2)`; θ = π is the Dirichlet condition and
/// θ = 0 is Neumann-Kirchhoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexCondition {
    angle: f64,
}

impl VertexCondition {
    pub fn neumann() -> Self {
        Self { angle: 0.0 }
    }

    pub fn dirichlet() -> Self {
        Self { angle: PI }
    }

    pub fn robin(alpha: f64) -> Self {
        if alpha.is_infinite() {
            return Self::dirichlet();
        }
        Self { angle: 2.0 * alpha.atan() }
    }

    pub fn from_angle(theta: f64) -> Self {
        Self { angle: wrap_angle(theta) }
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn is_dirichlet(&self) -> bool {
        self.angle == PI
    }

    /// Coupling strength; `None` for Dirichlet.
    pub fn alpha(&self) -> Option<f64> {
        if self.is_dirichlet() {
            None
        } else {
            Some((0.5 * self.angle).tan())
        }
    }

    /// Coupling of two glued vertices (couplings add).
    pub fn combine(&self, other: &Self) -> Option<Self> {
        Some(Self::robin(self.alpha()? + other.alpha()?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub length: f64,
}

/// One end of an edge, as seen from the vertex it is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeEnd {
    pub edge: EdgeId,
    /// `true` for the `x = 0` end.
    pub at_start: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricGraph {
    conditions: Vec<VertexCondition>,
    edges: Vec<Edge>,
    ends: Vec<Vec<EdgeEnd>>,
}

impl MetricGraph {
    pub fn new(conditions: Vec<VertexCondition>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        if conditions.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut ends = vec![Vec::new(); conditions.len()];
        for (id, e) in edges.iter().enumerate() {
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(GraphError::InvalidLength { edge: id, length: e.length });
            }
            for vertex in [e.u, e.v] {
                if vertex >= conditions.len() {
                    return Err(GraphError::MissingVertex { edge: id, vertex });
                }
            }
            ends[e.u].push(EdgeEnd { edge: id, at_start: true });
            ends[e.v].push(EdgeEnd { edge: id, at_start: false });
        }
        for c in &conditions {
            if !c.angle.is_finite() {
                return Err(GraphError::InvalidCoupling(c.angle));
            }
        }
        Ok(Self { conditions, edges, ends })
    }

    /// Single interval `[0, length]` with the given end conditions.
    pub fn interval(length: f64, start: VertexCondition, end: VertexCondition) -> Result<Self, GraphError> {
        Self::new(vec![start, end], vec![Edge { u: 0, v: 1, length }])
    }

    pub fn vertex_count(&self) -> usize {
        self.conditions.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e]
    }

    pub fn length(&self, e: EdgeId) -> f64 {
        self.edges[e].length
    }

    pub fn conditions(&self) -> &[VertexCondition] {
        &self.conditions
    }

    pub fn condition(&self, v: VertexId) -> VertexCondition {
        self.conditions[v]
    }

    /// Edge ends incident to `v`; a loop contributes two entries.
    pub fn ends(&self, v: VertexId) -> &[EdgeEnd] {
        &self.ends[v]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.ends[v].len()
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn min_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(f64::INFINITY, f64::min)
    }

    pub fn max_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(0.0, f64::max)
    }

    /// Vertex at the given end of an edge.
    pub fn end_vertex(&self, end: EdgeEnd) -> VertexId {
        let e = &self.edges[end.edge];
        if end.at_start {
            e.u
        } else {
            e.v
        }
    }

    /// Same graph with one vertex condition replaced.
    pub fn with_condition(&self, v: VertexId, condition: VertexCondition) -> Self {
        let mut conditions = self.conditions.clone();
        conditions[v] = condition;
        Self { conditions, edges: self.edges.clone(), ends: self.ends.clone() }
    }

    /// Connected-component label per vertex, and the number of components.
    pub fn components(&self) -> (Vec<usize>, usize) {
        let n = self.vertex_count();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for end in &self.ends[v] {
                    let e = &self.edges[end.edge];
                    let w = if end.at_start { e.v } else { e.u };
                    if label[w] == usize::MAX {
                        label[w] = count;
                        stack.push(w);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    pub fn component_count(&self) -> usize {
        self.components().1
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    /// First Betti number `|E| - |V| + k`.
    pub fn betti(&self) -> usize {
        self.edge_count() + self.component_count() - self.vertex_count()
    }

    /// Splits the graph into its connected components.
    pub fn component_subgraphs(&self) -> Vec<Subgraph> {
        let (label, count) = self.components();
        let mut vertex_maps: Vec<Vec<VertexId>> = vec![Vec::new(); count];
        let mut local = vec![0; self.vertex_count()];
        for (v, &c) in label.iter().enumerate() {
            local[v] = vertex_maps[c].len();
            vertex_maps[c].push(v);
        }
        let mut edge_maps: Vec<Vec<EdgeId>> = vec![Vec::new(); count];
        let mut edge_lists: Vec<Vec<Edge>> = vec![Vec::new(); count];
        for (id, e) in self.edges.iter().enumerate() {
            let c = label[e.u];
            edge_maps[c].push(id);
            edge_lists[c].push(Edge { u: local[e.u], v: local[e.v], length: e.length });
        }
        vertex_maps
            .into_iter()
            .zip(edge_maps)
            .zip(edge_lists)
            .map(|((vertex_map, edge_map), edges)| {
                let conditions = vertex_map.iter().map(|&v| self.conditions[v]).collect();
                let graph = MetricGraph::new(conditions, edges).expect("component of a valid graph");
                Subgraph { graph, vertex_map, edge_map }
            })
            .collect()
    }
}

/// A point on an edge, at distance `x` from the edge's start vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgePoint {
    pub edge: EdgeId,
    pub x: f64,
}

impl EdgePoint {
    pub fn new(edge: EdgeId, x: f64) -> Self {
        Self { edge, x }
    }

    /// Strictly inside the edge, away from both ends by more than `IMPROPER_TOL · L`.
    pub fn is_proper_on(&self, g: &MetricGraph) -> bool {
        if self.edge >= g.edge_count() {
            return false;
        }
        let l = g.length(self.edge);
        self.x > IMPROPER_TOL * l && self.x < l - IMPROPER_TOL * l
    }
}

/// An ordered set of partition points on a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub points: Vec<EdgePoint>,
    pub proper: bool,
}

impl Partition {
    /// Records the points in the given order and evaluates properness against `g`.
    pub fn new(g: &MetricGraph, points: Vec<EdgePoint>) -> Self {
        let proper = first_improper(g, &points).is_none();
        Self { points, proper }
    }

    pub fn empty() -> Self {
        Self { points: Vec::new(), proper: true }
    }

    /// Number of points, `μ(P)`.
    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points sorted by edge, then by coordinate.
    pub fn sorted(&self) -> Vec<EdgePoint> {
        let mut pts = self.points.clone();
        pts.sort_by(|a, b| a.edge.cmp(&b.edge).then(a.x.total_cmp(&b.x)));
        pts
    }

    /// Number of points on each edge of `g`.
    pub fn points_per_edge(&self, g: &MetricGraph) -> Vec<usize> {
        let mut counts = vec![0; g.edge_count()];
        for p in &self.points {
            if p.edge < counts.len() {
                counts[p.edge] += 1;
            }
        }
        counts
    }

    pub fn check_proper(&self, g: &MetricGraph) -> Result<(), GraphError> {
        match first_improper(g, &self.points) {
            Some(index) => Err(GraphError::ImproperPartition { index }),
            None => Ok(()),
        }
    }
}

fn first_improper(g: &MetricGraph, points: &[EdgePoint]) -> Option<usize> {
    for (i, p) in points.iter().enumerate() {
        if !p.is_proper_on(g) {
            return Some(i);
        }
        let l = g.length(p.edge);
        if points[..i].iter().any(|q| q.edge == p.edge && (q.x - p.x).abs() <= IMPROPER_TOL * l) {
            return Some(i);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn lasso(loop_len: f64, tail: f64) -> MetricGraph {
        MetricGraph::new(
            vec![VertexCondition::neumann(), VertexCondition::neumann()],
            vec![Edge { u: 0, v: 0, length: loop_len }, Edge { u: 0, v: 1, length: tail }],
        )
        .unwrap()
    }

    fn figure_eight() -> MetricGraph {
        MetricGraph::new(
            vec![VertexCondition::neumann()],
            vec![Edge { u: 0, v: 0, length: 1.0 }, Edge { u: 0, v: 0, length: 1.5 }],
        )
        .unwrap()
    }

    #[test]
    fn betti_numbers() {
        let interval = MetricGraph::interval(1.0, VertexCondition::dirichlet(), VertexCondition::dirichlet()).unwrap();
        assert_eq!(interval.betti(), 0);
        assert_eq!(figure_eight().betti(), 2);
        assert_eq!(lasso(1.0, 1.0).betti(), 1);
    }

    #[test]
    fn disconnected_betti_counts_components() {
        let g = MetricGraph::new(
            vec![VertexCondition::neumann(); 4],
            vec![Edge { u: 0, v: 1, length: 1.0 }, Edge { u: 2, v: 3, length: 1.0 }, Edge { u: 2, v: 2, length: 1.0 }],
        )
        .unwrap();
        assert_eq!(g.component_count(), 2);
        assert_eq!(g.betti(), 1);
    }

    #[test]
    fn rejects_bad_edges() {
        let bad = MetricGraph::new(vec![VertexCondition::neumann()], vec![Edge { u: 0, v: 1, length: 1.0 }]);
        assert_eq!(bad, Err(GraphError::MissingVertex { edge: 0, vertex: 1 }));
        let bad = MetricGraph::new(vec![VertexCondition::neumann(); 2], vec![Edge { u: 0, v: 1, length: 0.0 }]);
        assert!(matches!(bad, Err(GraphError::InvalidLength { .. })));
        let bad =
            MetricGraph::new(vec![VertexCondition::neumann(); 2], vec![Edge { u: 0, v: 1, length: f64::INFINITY }]);
        assert!(matches!(bad, Err(GraphError::InvalidLength { .. })));
    }

    #[test]
    fn angle_and_alpha_round_trip() {
        for alpha in [-10.0, -1.0, -0.25, 0.0, 0.3, 1.0, 7.5, 1e6] {
            let c = VertexCondition::robin(alpha);
            let back = c.alpha().unwrap();
            assert!((back - alpha).abs() <= 1e-12 * (1.0 + alpha * alpha), "{alpha} -> {back}");
        }
        assert!(VertexCondition::robin(f64::INFINITY).is_dirichlet());
        assert_eq!(VertexCondition::dirichlet().alpha(), None);
        assert_eq!(VertexCondition::from_angle(-PI).angle(), PI);
        assert!(VertexCondition::from_angle(3.0 * PI).is_dirichlet());
    }

    #[test]
    fn wrap_angle_range() {
        for raw in [-7.0, -PI, -3.0, 0.0, 3.0, PI, 4.0, 10.0 * PI] {
            let w = wrap_angle(raw);
            assert!(w > -PI && w <= PI, "{raw} -> {w}");
            assert!(((raw - w) / (2.0 * PI)).round() * 2.0 * PI - (raw - w) < 1e-12);
        }
    }

    #[test]
    fn partition_properness() {
        let g = lasso(1.0, 2.0);
        assert!(Partition::new(&g, vec![EdgePoint::new(0, 0.3), EdgePoint::new(1, 1.0)]).proper);
        assert!(!Partition::new(&g, vec![EdgePoint::new(0, 0.0)]).proper);
        assert!(!Partition::new(&g, vec![EdgePoint::new(1, 2.0)]).proper);
        assert!(!Partition::new(&g, vec![EdgePoint::new(0, 0.3), EdgePoint::new(0, 0.3)]).proper);
        assert!(!Partition::new(&g, vec![EdgePoint::new(5, 0.3)]).proper);
    }

    #[test]
    fn component_subgraphs_keep_maps() {
        let g = MetricGraph::new(
            vec![VertexCondition::neumann(), VertexCondition::dirichlet(), VertexCondition::robin(2.0)],
            vec![Edge { u: 0, v: 1, length: 1.0 }, Edge { u: 2, v: 2, length: 0.5 }],
        )
        .unwrap();
        let parts = g.component_subgraphs();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].vertex_map, vec![0, 1]);
        assert_eq!(parts[1].edge_map, vec![1]);
        assert_eq!(parts[1].graph.edge(0).length, 0.5);
        assert!(parts[0].graph.condition(1).is_dirichlet());
    }
}
