use std::collections::VecDeque;

use super::{Edge, EdgeId, EdgePoint, GraphError, MetricGraph, Partition, VertexCondition, VertexId};

/// A connected piece of a larger graph, with maps back to the parent's ids.
#[derive(Debug, Clone)]
pub struct Subgraph {
    pub graph: MetricGraph,
    /// Parent vertex for each local vertex.
    pub vertex_map: Vec<VertexId>,
    /// Parent edge for each local edge.
    pub edge_map: Vec<EdgeId>,
}

/// Where an edge of a split graph sits on the original graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeOrigin {
    pub edge: EdgeId,
    pub offset: f64,
}

#[derive(Debug, Clone)]
struct Split {
    graph: MetricGraph,
    origin: Vec<EdgeOrigin>,
    /// `(lower-coordinate side, higher-coordinate side)` vertex created for each input point.
    point_vertices: Vec<(VertexId, VertexId)>,
}

/// Splits every edge at the given interior points, attaching two new degree-one
/// vertices per point with the conditions produced by `conditions(i)`.
fn split_at_points(
    g: &MetricGraph,
    points: &[EdgePoint],
    conditions: impl Fn(usize) -> (VertexCondition, VertexCondition),
) -> Result<Split, GraphError> {
    Partition::new(g, points.to_vec()).check_proper(g)?;

    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].edge.cmp(&points[b].edge).then(points[a].x.total_cmp(&points[b].x)));

    let mut vertex_conditions = g.conditions().to_vec();
    let mut point_vertices = vec![(0, 0); points.len()];
    for &i in &order {
        let (minus, plus) = conditions(i);
        let lo = vertex_conditions.len();
        vertex_conditions.push(minus);
        vertex_conditions.push(plus);
        point_vertices[i] = (lo, lo + 1);
    }

    let mut edges = Vec::with_capacity(g.edge_count() + points.len());
    let mut origin = Vec::with_capacity(edges.capacity());
    let mut cursor = 0;
    for (id, e) in g.edges().iter().enumerate() {
        let mut start = e.u;
        let mut prev = 0.0;
        while cursor < order.len() && points[order[cursor]].edge == id {
            let i = order[cursor];
            let (minus, plus) = point_vertices[i];
            edges.push(Edge { u: start, v: minus, length: points[i].x - prev });
            origin.push(EdgeOrigin { edge: id, offset: prev });
            start = plus;
            prev = points[i].x;
            cursor += 1;
        }
        edges.push(Edge { u: start, v: e.v, length: e.length - prev });
        origin.push(EdgeOrigin { edge: id, offset: prev });
    }

    let graph = MetricGraph::new(vertex_conditions, edges)?;
    Ok(Split { graph, origin, point_vertices })
}

/// Locates the split-graph edge containing an original point, with its local coordinate.
fn locate_in(origin: &[EdgeOrigin], graph: &MetricGraph, p: EdgePoint) -> Option<(EdgeId, f64)> {
    origin.iter().enumerate().find_map(|(id, o)| {
        let local = p.x - o.offset;
        (o.edge == p.edge && local > 0.0 && local < graph.length(id)).then_some((id, local))
    })
}

/// `Γ∖P`: the graph cut at every point of a partition, with Dirichlet conditions
/// on the new degree-one vertices.
#[derive(Debug, Clone)]
pub struct CutGraph {
    pub graph: MetricGraph,
    pub origin: Vec<EdgeOrigin>,
    pub point_vertices: Vec<(VertexId, VertexId)>,
    /// Component label per vertex of `graph`.
    pub vertex_component: Vec<usize>,
    pub component_count: usize,
}

impl CutGraph {
    pub fn edge_component(&self, e: EdgeId) -> usize {
        self.vertex_component[self.graph.edge(e).u]
    }

    /// Cut-graph edge containing an original point strictly in its interior.
    pub fn locate(&self, p: EdgePoint) -> Option<(EdgeId, f64)> {
        locate_in(&self.origin, &self.graph, p)
    }

    /// Components in label order.
    pub fn components(&self) -> Vec<Subgraph> {
        self.graph.component_subgraphs()
    }

    /// `(component below, component above)` for each partition point.
    pub fn sides(&self, i: usize) -> (usize, usize) {
        let (lo, hi) = self.point_vertices[i];
        (self.vertex_component[lo], self.vertex_component[hi])
    }
}

pub fn cut(g: &MetricGraph, p: &Partition) -> Result<CutGraph, GraphError> {
    let split = split_at_points(g, &p.points, |_| (VertexCondition::dirichlet(), VertexCondition::dirichlet()))?;
    let (vertex_component, component_count) = split.graph.components();
    Ok(CutGraph {
        graph: split.graph,
        origin: split.origin,
        point_vertices: split.point_vertices,
        vertex_component,
        component_count,
    })
}

/// Identifies `v1` with `v0`; the merged vertex carries the sum of both couplings.
/// Vertices after `v1` shift down by one.
pub fn glue(g: &MetricGraph, v0: VertexId, v1: VertexId) -> Result<MetricGraph, GraphError> {
    if v0 == v1 {
        return Err(GraphError::SelfGlue);
    }
    for v in [v0, v1] {
        if v >= g.vertex_count() {
            return Err(GraphError::MissingVertex { edge: usize::MAX, vertex: v });
        }
    }
    let merged = g
        .condition(v0)
        .combine(&g.condition(v1))
        .ok_or(GraphError::DirichletGlue(if g.condition(v0).is_dirichlet() { v0 } else { v1 }))?;
    let relabel = |v: VertexId| {
        let v = if v == v1 { v0 } else { v };
        if v > v1 {
            v - 1
        } else {
            v
        }
    };
    let mut conditions: Vec<VertexCondition> = g.conditions().to_vec();
    conditions[v0] = merged;
    conditions.remove(v1);
    let edges = g.edges().iter().map(|e| Edge { u: relabel(e.u), v: relabel(e.v), length: e.length }).collect();
    MetricGraph::new(conditions, edges)
}

/// One section point, at the midpoint, on each edge outside a breadth-first spanning
/// tree that always explores the lowest-indexed edge first.
pub fn choose_sections(g: &MetricGraph) -> Vec<EdgePoint> {
    let mut tree_edge = vec![false; g.edge_count()];
    let mut seen = vec![false; g.vertex_count()];
    let mut queue = VecDeque::new();
    for root in 0..g.vertex_count() {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        queue.push_back(root);
        while let Some(v) = queue.pop_front() {
            let mut ends = g.ends(v).to_vec();
            ends.sort_by_key(|end| end.edge);
            for end in ends {
                let e = g.edge(end.edge);
                let w = if end.at_start { e.v } else { e.u };
                if !seen[w] {
                    seen[w] = true;
                    tree_edge[end.edge] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    (0..g.edge_count()).filter(|&e| !tree_edge[e]).map(|e| EdgePoint::new(e, 0.5 * g.length(e))).collect()
}

fn components_without(g: &MetricGraph, removed: &[bool]) -> usize {
    let mut parent: Vec<usize> = (0..g.vertex_count()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut count = g.vertex_count();
    for (id, e) in g.edges().iter().enumerate() {
        if removed[id] {
            continue;
        }
        let (a, b) = (find(&mut parent, e.u), find(&mut parent, e.v));
        if a != b {
            parent[a] = b;
            count -= 1;
        }
    }
    count
}

/// Section points adapted to a partition: in edge-index order, every edge carrying
/// a point of `q` receives one section point (the midpoint of its longest point-free
/// stretch) unless that would disconnect the graph. Yields `β_Γ - β_{Γ∖q}` points.
pub fn local_sections(g: &MetricGraph, q: &Partition) -> Result<Vec<EdgePoint>, GraphError> {
    q.check_proper(g)?;
    let base = g.component_count();
    let sorted = q.sorted();
    let mut removed = vec![false; g.edge_count()];
    let mut sections = Vec::new();
    for e in 0..g.edge_count() {
        let xs: Vec<f64> = sorted.iter().filter(|p| p.edge == e).map(|p| p.x).collect();
        if xs.is_empty() {
            continue;
        }
        removed[e] = true;
        if components_without(g, &removed) != base {
            removed[e] = false;
            continue;
        }
        let mut bounds = vec![0.0];
        bounds.extend(&xs);
        bounds.push(g.length(e));
        let (lo, hi) = bounds.windows(2).map(|w| (w[0], w[1])).fold((0.0, 0.0), |best, seg| {
            if seg.1 - seg.0 > best.1 - best.0 {
                seg
            } else {
                best
            }
        });
        sections.push(EdgePoint::new(e, 0.5 * (lo + hi)));
    }
    Ok(sections)
}

#[derive(Debug, Clone)]
pub struct Bipartition {
    pub bipartite: bool,
    /// `±1` per component of the cut graph when a proper 2-colouring exists.
    pub signs: Option<Vec<i8>>,
}

/// Whether the components of `Γ∖p` can be signed so that neighbours across every
/// partition point differ.
pub fn is_bipartite(g: &MetricGraph, p: &Partition) -> Result<Bipartition, GraphError> {
    let cg = cut(g, p)?;
    let n = cg.component_count;
    let mut adjacency = vec![Vec::new(); n];
    for i in 0..p.size() {
        let (a, b) = cg.sides(i);
        if a == b {
            return Ok(Bipartition { bipartite: false, signs: None });
        }
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    let mut signs = vec![0i8; n];
    for root in 0..n {
        if signs[root] != 0 {
            continue;
        }
        signs[root] = 1;
        let mut queue = VecDeque::from([root]);
        while let Some(c) = queue.pop_front() {
            for &d in &adjacency[c] {
                if signs[d] == 0 {
                    signs[d] = -signs[c];
                    queue.push_back(d);
                } else if signs[d] == signs[c] {
                    return Ok(Bipartition { bipartite: false, signs: None });
                }
            }
        }
    }
    Ok(Bipartition { bipartite: true, signs: Some(signs) })
}

/// `Γ_φ`: the graph split at section points, with the paired conditions
/// `α⁻ = -tan(φ/2)` on the lower-coordinate side and `α⁺ = tan(φ/2)` on the other.
#[derive(Debug, Clone)]
pub struct RobinTree {
    pub graph: MetricGraph,
    pub origin: Vec<EdgeOrigin>,
    /// `(v⁻, v⁺)` for each section point.
    pub section_vertices: Vec<(VertexId, VertexId)>,
    pub angles: Vec<f64>,
}

impl RobinTree {
    pub fn locate(&self, p: EdgePoint) -> Option<(EdgeId, f64)> {
        locate_in(&self.origin, &self.graph, p)
    }

    /// Maps a point of `Γ_φ` back to the original graph.
    pub fn to_original(&self, e: EdgeId, x: f64) -> EdgePoint {
        let o = self.origin[e];
        EdgePoint::new(o.edge, o.offset + x)
    }
}

pub fn build_robin_tree(g: &MetricGraph, sections: &[EdgePoint], phi: &[f64]) -> Result<RobinTree, GraphError> {
    if sections.len() != phi.len() {
        return Err(GraphError::AngleCount { expected: sections.len(), got: phi.len() });
    }
    let split =
        split_at_points(g, sections, |i| (VertexCondition::from_angle(-phi[i]), VertexCondition::from_angle(phi[i])))?;
    if split.graph.component_count() != g.component_count() {
        return Err(GraphError::Disconnects);
    }
    Ok(RobinTree {
        graph: split.graph,
        origin: split.origin,
        section_vertices: split.point_vertices,
        angles: phi.iter().map(|&a| super::wrap_angle(a)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn neumann_graph(n: usize, edges: &[(usize, usize, f64)]) -> MetricGraph {
        MetricGraph::new(
            vec![VertexCondition::neumann(); n],
            edges.iter().map(|&(u, v, length)| Edge { u, v, length }).collect(),
        )
        .unwrap()
    }

    fn lasso() -> MetricGraph {
        neumann_graph(2, &[(0, 0, 1.0), (0, 1, 1.0)])
    }

    fn figure_eight() -> MetricGraph {
        neumann_graph(1, &[(0, 0, 1.0), (0, 0, 1.5)])
    }

    // Union-find over the cut graph, kept separate from `MetricGraph::components`.
    fn oracle_components(g: &MetricGraph) -> usize {
        let mut parent: Vec<usize> = (0..g.vertex_count()).collect();
        fn root(p: &mut Vec<usize>, x: usize) -> usize {
            if p[x] == x {
                x
            } else {
                let r = root(p, p[x]);
                p[x] = r;
                r
            }
        }
        for e in g.edges() {
            let (a, b) = (root(&mut parent, e.u), root(&mut parent, e.v));
            parent[a] = b;
        }
        (0..g.vertex_count()).filter(|&v| root(&mut parent, v) == v).count()
    }

    #[test]
    fn cut_interval_in_half() {
        let g = MetricGraph::interval(1.0, VertexCondition::neumann(), VertexCondition::neumann()).unwrap();
        let p = Partition::new(&g, vec![EdgePoint::new(0, 0.5)]);
        let cg = cut(&g, &p).unwrap();
        assert_eq!(cg.graph.edge_count(), 2);
        assert_eq!(cg.graph.vertex_count(), 4);
        assert_eq!(cg.component_count, 2);
        assert!(cg.graph.edges().iter().all(|e| (e.length - 0.5).abs() < 1e-15));
        let (lo, hi) = cg.point_vertices[0];
        assert!(cg.graph.condition(lo).is_dirichlet() && cg.graph.condition(hi).is_dirichlet());
    }

    #[test]
    fn cut_lasso_loop_opens_cycle() {
        let g = lasso();
        let p = Partition::new(&g, vec![EdgePoint::new(0, 0.4)]);
        let cg = cut(&g, &p).unwrap();
        assert_eq!(cg.component_count, 1);
        assert_eq!(cg.graph.betti(), 0);
    }

    #[test]
    fn cut_figure_eight_one_loop() {
        let g = figure_eight();
        let p = Partition::new(&g, vec![EdgePoint::new(0, 0.3)]);
        let cg = cut(&g, &p).unwrap();
        assert_eq!(cg.graph.betti(), 1);
        assert_eq!(cg.component_count, oracle_components(&cg.graph));
        assert_eq!(cg.component_count, 1);
    }

    #[test]
    fn cut_rejects_improper_points() {
        let g = lasso();
        let p = Partition::new(&g, vec![EdgePoint::new(1, 0.0)]);
        assert_eq!(cut(&g, &p).unwrap_err(), GraphError::ImproperPartition { index: 0 });
    }

    #[test]
    fn cut_keeps_orientation_and_offsets() {
        let g = figure_eight();
        let p = Partition::new(&g, vec![EdgePoint::new(1, 1.2), EdgePoint::new(1, 0.2), EdgePoint::new(0, 0.5)]);
        let cg = cut(&g, &p).unwrap();
        let offsets: Vec<(usize, f64)> = cg.origin.iter().map(|o| (o.edge, o.offset)).collect();
        assert_eq!(offsets, vec![(0, 0.0), (0, 0.5), (1, 0.0), (1, 0.2), (1, 1.2)]);
        let (e, x) = cg.locate(EdgePoint::new(1, 0.7)).unwrap();
        assert_eq!(e, 3);
        assert!((x - 0.5).abs() < 1e-15);
    }

    #[test]
    fn glue_sums_couplings() {
        let g = MetricGraph::new(
            vec![VertexCondition::robin(1.0), VertexCondition::neumann(), VertexCondition::robin(-1.0)],
            vec![Edge { u: 0, v: 1, length: 1.0 }, Edge { u: 1, v: 2, length: 2.0 }],
        )
        .unwrap();
        let glued = glue(&g, 0, 2).unwrap();
        assert_eq!(glued.vertex_count(), 2);
        assert!(glued.condition(0).alpha().unwrap().abs() < 1e-15);
        assert_eq!(glued.betti(), 1);
    }

    #[test]
    fn glue_path_ends_gives_loop() {
        let g = MetricGraph::interval(1.0, VertexCondition::neumann(), VertexCondition::neumann()).unwrap();
        let glued = glue(&g, 0, 1).unwrap();
        assert_eq!(glued.vertex_count(), 1);
        assert_eq!(glued.edge(0).u, glued.edge(0).v);
        assert_eq!(glued.betti(), 1);
    }

    #[test]
    fn glue_rejects_dirichlet() {
        let g = MetricGraph::interval(1.0, VertexCondition::dirichlet(), VertexCondition::neumann()).unwrap();
        assert_eq!(glue(&g, 0, 1).unwrap_err(), GraphError::DirichletGlue(0));
    }

    #[test]
    fn sections_on_small_graphs() {
        let tree = neumann_graph(4, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 2.0)]);
        assert!(choose_sections(&tree).is_empty());
        assert_eq!(choose_sections(&lasso()), vec![EdgePoint::new(0, 0.5)]);
        assert_eq!(choose_sections(&figure_eight()), vec![EdgePoint::new(0, 0.5), EdgePoint::new(1, 0.75)]);
    }

    #[test]
    fn sections_of_theta_graph_leave_tree() {
        let theta = neumann_graph(2, &[(0, 1, 1.0), (0, 1, 1.3), (1, 0, 0.7)]);
        let s = choose_sections(&theta);
        assert_eq!(s.len(), 2);
        let cg = cut(&theta, &Partition::new(&theta, s)).unwrap();
        assert_eq!(cg.component_count, 1);
        assert_eq!(cg.graph.betti(), 0);
    }

    #[test]
    fn local_sections_examples() {
        let g = lasso();
        let tail_only = Partition::new(&g, vec![EdgePoint::new(1, 0.3), EdgePoint::new(1, 0.8)]);
        assert!(local_sections(&g, &tail_only).unwrap().is_empty());

        let on_loop = Partition::new(&g, vec![EdgePoint::new(0, 0.2), EdgePoint::new(0, 0.4)]);
        assert_eq!(local_sections(&g, &on_loop).unwrap(), vec![EdgePoint::new(0, 0.7)]);

        let f8 = figure_eight();
        let q = Partition::new(&f8, vec![EdgePoint::new(0, 0.25), EdgePoint::new(0, 0.75)]);
        let s = local_sections(&f8, &q).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].edge, 0);
        let cq = cut(&f8, &q).unwrap();
        assert_eq!(f8.betti() - cq.graph.betti(), s.len());
    }

    #[test]
    fn bipartiteness() {
        let g = lasso();
        let one = Partition::new(&g, vec![EdgePoint::new(0, 0.5)]);
        assert!(!is_bipartite(&g, &one).unwrap().bipartite);
        let two = Partition::new(&g, vec![EdgePoint::new(0, 0.25), EdgePoint::new(0, 0.75)]);
        let b = is_bipartite(&g, &two).unwrap();
        assert!(b.bipartite);
        assert_eq!(b.signs.unwrap().len(), 2);
        let tree = neumann_graph(4, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 2.0)]);
        let p = Partition::new(
            &tree,
            vec![EdgePoint::new(0, 0.5), EdgePoint::new(1, 0.2), EdgePoint::new(2, 0.4), EdgePoint::new(2, 1.5)],
        );
        assert!(is_bipartite(&tree, &p).unwrap().bipartite);
    }

    #[test]
    fn robin_tree_conditions() {
        let g = lasso();
        let t = build_robin_tree(&g, &choose_sections(&g), &[0.5 * PI]).unwrap();
        let (minus, plus) = t.section_vertices[0];
        assert!((t.graph.condition(minus).alpha().unwrap() + 1.0).abs() < 1e-14);
        assert!((t.graph.condition(plus).alpha().unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(t.graph.betti(), 0);

        let t = build_robin_tree(&g, &choose_sections(&g), &[0.0]).unwrap();
        let (minus, plus) = t.section_vertices[0];
        assert_eq!(t.graph.condition(minus).alpha(), Some(0.0));
        assert_eq!(t.graph.condition(plus).alpha(), Some(0.0));

        let t = build_robin_tree(&g, &choose_sections(&g), &[PI]).unwrap();
        let (minus, plus) = t.section_vertices[0];
        assert!(t.graph.condition(minus).is_dirichlet() && t.graph.condition(plus).is_dirichlet());
    }

    #[test]
    fn robin_tree_rejects_disconnecting_sections() {
        let g = lasso();
        let err = build_robin_tree(&g, &[EdgePoint::new(1, 0.5)], &[0.0]).unwrap_err();
        assert_eq!(err, GraphError::Disconnects);
    }

    #[test]
    fn regluing_sections_is_neumann() {
        let g = lasso();
        let t = build_robin_tree(&g, &choose_sections(&g), &[1.3]).unwrap();
        let (minus, plus) = t.section_vertices[0];
        let glued = glue(&t.graph, minus, plus).unwrap();
        assert!(glued.condition(minus.min(plus)).alpha().unwrap().abs() < 1e-12);
        assert_eq!(glued.betti(), 1);
    }
}
