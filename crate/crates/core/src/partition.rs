//! The energy functional `Λ(P) = max_j λ₁(Γ_j)` on partitions, and the map `Φ_m`
//! from angles on a torus to equipartitions.
//!
//! A [`Chart`] fixes the graph, the section points and `m`. At angles `φ` it builds
//! `Γ_φ`, takes the `(m+1-p)`-th eigenfunction (`p` = number of angles equal to
//! `π`), and returns its zero set, mapped back to `Γ`, as an equipartition.

use thiserror::Error;

use crate::graph::{
    build_robin_tree, choose_sections, cut, local_sections, wrap_angle, CutGraph, EdgePoint, GraphError, MetricGraph,
    Partition, RobinTree,
};
use crate::spectral::{
    count_below, eigenfunction, eigenvalue, ground_energy, ground_state, is_proper, zeros, EigenPair, SpectralError,
    SpectralOptions,
};

pub const EQUIPARTITION_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("angles outside the domain of the chart: {0}")]
    OutsideDomain(String),
    #[error("not an equipartition: component energies spread by {spread:e} (relative)")]
    NotEquipartition { spread: f64 },
    #[error("section point {index} sits on a zero of the ground state")]
    SectionOnZero { index: usize },
    #[error("partition left the neighbourhood of the base equipartition")]
    LeftNeighborhood,
    #[error("no boundary point of the top component borders a lower one")]
    NoDescentPoint,
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
}

fn outside(msg: impl Into<String>) -> PartitionError {
    PartitionError::OutsideDomain(msg.into())
}

/// Cut graph and the ground energy of each of its components.
pub fn component_energies(
    g: &MetricGraph,
    p: &Partition,
    opts: &SpectralOptions,
) -> Result<(CutGraph, Vec<f64>), PartitionError> {
    let cg = cut(g, p)?;
    let parts = cg.components();
    let energies = opts.exec.try_map(&parts, |s| ground_energy(&s.graph, opts))?;
    Ok((cg, energies))
}

pub fn lambda_of_partition(g: &MetricGraph, p: &Partition, opts: &SpectralOptions) -> Result<f64, PartitionError> {
    let (_, energies) = component_energies(g, p, opts)?;
    Ok(energies.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// `(max - min) / max(|mean|, tiny)` over component energies.
pub fn energy_spread(energies: &[f64]) -> f64 {
    let max = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = energies.iter().sum::<f64>() / energies.len() as f64;
    if max == min {
        0.0
    } else {
        (max - min) / mean.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn is_equipartition(
    g: &MetricGraph,
    p: &Partition,
    tol: f64,
    opts: &SpectralOptions,
) -> Result<bool, PartitionError> {
    let (_, energies) = component_energies(g, p, opts)?;
    Ok(energy_spread(&energies) <= tol)
}

/// Smallest `N` with `λ_{N-β+1}(Γ) ≥ λ_D`, where `λ_D = max_e (π/L_e)²`.
pub fn minimal_m(g: &MetricGraph) -> usize {
    let lambda_d = (std::f64::consts::PI / g.min_length()).powi(2);
    count_below(g, lambda_d) + g.betti()
}

#[derive(Debug, Clone)]
pub struct EquipartitionRecord {
    pub q: Partition,
    pub phi: Vec<f64>,
    pub m: usize,
    /// `Λ(q)`, the largest component ground energy.
    pub lambda: f64,
    /// The eigenpair of `Γ_φ` whose zeros give `q`.
    pub eigen: EigenPair,
    pub tree: RobinTree,
    /// Ground energies of the components of `Γ∖q`, in component order.
    pub components: Vec<f64>,
}

/// `Φ_m` for fixed section points.
#[derive(Debug, Clone)]
pub struct Chart<'a> {
    g: &'a MetricGraph,
    sections: Vec<EdgePoint>,
    m: usize,
    /// Points per edge of the base partition, in local mode.
    pattern: Option<Vec<usize>>,
    pub opts: SpectralOptions,
    pub equipartition_tol: f64,
}

impl<'a> Chart<'a> {
    /// Global chart with the default section points.
    pub fn global(g: &'a MetricGraph, m: usize, opts: SpectralOptions) -> Result<Self, PartitionError> {
        if !g.is_connected() {
            return Err(GraphError::NotConnected.into());
        }
        Ok(Self::with_sections(g, choose_sections(g), m, opts))
    }

    pub fn with_sections(g: &'a MetricGraph, sections: Vec<EdgePoint>, m: usize, opts: SpectralOptions) -> Self {
        Self { g, sections, m, pattern: None, opts, equipartition_tol: EQUIPARTITION_TOL }
    }

    /// Local chart around a proper equipartition, with `β_Γ - β_{Γ∖q0}` angles.
    pub fn local(g: &'a MetricGraph, q0: &Partition, opts: SpectralOptions) -> Result<Self, PartitionError> {
        let sections = local_sections(g, q0)?;
        Ok(Self {
            g,
            sections,
            m: q0.size(),
            pattern: Some(q0.points_per_edge(g)),
            opts,
            equipartition_tol: EQUIPARTITION_TOL,
        })
    }

    pub fn graph(&self) -> &MetricGraph {
        self.g
    }

    pub fn sections(&self) -> &[EdgePoint] {
        &self.sections
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.sections.len()
    }

    pub fn is_local(&self) -> bool {
        self.pattern.is_some()
    }

    pub fn tree(&self, phi: &[f64]) -> Result<RobinTree, PartitionError> {
        Ok(build_robin_tree(self.g, &self.sections, phi)?)
    }

    /// Number of angles equal to `π` after wrapping.
    fn dirichlet_sections(phi: &[f64]) -> usize {
        phi.iter().filter(|&&a| wrap_angle(a) == std::f64::consts::PI).count()
    }

    /// `Γ_φ` and its normalized `(m+1-p)`-th eigenfunction, checked to be simple and
    /// non-vanishing at every non-Dirichlet vertex.
    pub fn eigen(&self, phi: &[f64]) -> Result<(RobinTree, EigenPair), PartitionError> {
        let tree = self.tree(phi)?;
        let p = Self::dirichlet_sections(phi);
        if self.m < p {
            return Err(outside(format!("{p} angles at π exceed m + 1 = {}", self.m + 1)));
        }
        let pair = eigenvalue(&tree.graph, self.m + 1 - p, &self.opts)?;
        if !pair.simple {
            return Err(outside(format!("eigenvalue {} has multiplicity {}", pair.lambda, pair.multiplicity)));
        }
        let f = eigenfunction(&tree.graph, &pair)?;
        if !is_proper(&tree.graph, &f, &self.opts) {
            return Err(outside("eigenfunction vanishes at a vertex"));
        }
        Ok((tree, f))
    }

    /// `Λ(Φ_m(φ)) = λ_{m+1-p}(Γ_φ)`, with the domain checks of [`Chart::eigen`].
    pub fn lambda(&self, phi: &[f64]) -> Result<f64, PartitionError> {
        Ok(self.eigen(phi)?.1.lambda)
    }

    pub fn map(&self, phi: &[f64]) -> Result<EquipartitionRecord, PartitionError> {
        let (tree, f) = self.eigen(phi)?;
        let p = Self::dirichlet_sections(phi);
        let z = match zeros(&tree.graph, &f, &self.opts) {
            Ok(z) => z,
            Err(SpectralError::IdenticallyZeroEdge { edge }) => {
                return Err(outside(format!("eigenfunction vanishes on edge {edge} of the tree")))
            }
            Err(e) => return Err(e.into()),
        };
        if !z.proper {
            return Err(outside("a zero sits on a vertex of the tree"));
        }
        if z.size() != self.m - p {
            return Err(outside(format!("eigenfunction has {} zeros, expected {}", z.size(), self.m - p)));
        }
        let mut points: Vec<EdgePoint> = z.points.iter().map(|pt| tree.to_original(pt.edge, pt.x)).collect();
        points.extend(
            self.sections.iter().zip(phi).filter(|(_, &a)| wrap_angle(a) == std::f64::consts::PI).map(|(s, _)| *s),
        );
        let q = Partition::new(self.g, points);
        let q = Partition { points: q.sorted(), proper: q.proper };
        if !q.proper {
            return Err(outside("zero set is not a proper partition of the graph"));
        }
        if let Some(pattern) = &self.pattern {
            if &q.points_per_edge(self.g) != pattern {
                return Err(PartitionError::LeftNeighborhood);
            }
        }
        let (_, components) = component_energies(self.g, &q, &self.opts)?;
        let spread = energy_spread(&components);
        if spread > self.equipartition_tol {
            return Err(PartitionError::Inconsistent(format!("Φ_m image is not an equipartition (spread {spread:e})")));
        }
        let lambda = components.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(EquipartitionRecord { q, phi: tree.angles.clone(), m: self.m, lambda, eigen: f, tree, components })
    }

    /// Angles `φ` with `Φ_m(φ) = q`, read off from `tan(φ_i/2) = f'/f` for the ground
    /// state of the component of `Γ∖q` around each section point.
    pub fn inverse(&self, q: &Partition) -> Result<Vec<f64>, PartitionError> {
        let (cg, energies) = component_energies(self.g, q, &self.opts)?;
        let spread = energy_spread(&energies);
        if spread > self.equipartition_tol {
            return Err(PartitionError::NotEquipartition { spread });
        }
        let parts = cg.components();
        let mut states: Vec<Option<EigenPair>> = vec![None; parts.len()];
        let mut phi = Vec::with_capacity(self.sections.len());
        for (i, s) in self.sections.iter().enumerate() {
            let len = self.g.length(s.edge);
            if q.points.iter().any(|pt| pt.edge == s.edge && (pt.x - s.x).abs() <= self.opts.vertex_zero_tol * len) {
                phi.push(std::f64::consts::PI);
                continue;
            }
            let (ce, x) = cg.locate(*s).ok_or(PartitionError::SectionOnZero { index: i })?;
            let c = cg.edge_component(ce);
            let sub = &parts[c];
            if states[c].is_none() {
                states[c] = Some(ground_state(&sub.graph, &self.opts)?);
            }
            let f = states[c].as_ref().expect("filled above");
            let local = sub.edge_map.iter().position(|&e| e == ce).expect("edge in its component");
            let value = f.value(&sub.graph, local, x);
            let slope = f.derivative(&sub.graph, local, x);
            let sup = f.sup_norm(&sub.graph);
            let k = f.lambda.abs().sqrt().max(1.0);
            if value.abs() <= 1e-12 * sup && slope.abs() <= 1e-12 * sup * k {
                return Err(PartitionError::SectionOnZero { index: i });
            }
            phi.push(wrap_angle(2.0 * slope.atan2(value)));
        }
        Ok(phi)
    }
}

/// `Φ_m(φ)` with explicit section points.
pub fn phi_map(
    g: &MetricGraph,
    sections: &[EdgePoint],
    phi: &[f64],
    m: usize,
    opts: &SpectralOptions,
) -> Result<EquipartitionRecord, PartitionError> {
    Chart::with_sections(g, sections.to_vec(), m, *opts).map(phi)
}

/// `λ_{m+1-p}(Γ_φ)`.
pub fn lambda_phi(
    g: &MetricGraph,
    sections: &[EdgePoint],
    phi: &[f64],
    m: usize,
    opts: &SpectralOptions,
) -> Result<f64, PartitionError> {
    Chart::with_sections(g, sections.to_vec(), m, *opts).lambda(phi)
}

pub fn phi_inverse(
    g: &MetricGraph,
    sections: &[EdgePoint],
    q: &Partition,
    opts: &SpectralOptions,
) -> Result<Vec<f64>, PartitionError> {
    Chart::with_sections(g, sections.to_vec(), q.size(), *opts).inverse(q)
}

/// `Φ` in the neighbourhood of a proper equipartition `q0`, using [`local_sections`].
pub fn phi_map_local(
    g: &MetricGraph,
    q0: &Partition,
    phi: &[f64],
    opts: &SpectralOptions,
) -> Result<EquipartitionRecord, PartitionError> {
    let chart = Chart::local(g, q0, *opts)?;
    if phi.len() != chart.dim() {
        return Err(GraphError::AngleCount { expected: chart.dim(), got: phi.len() }.into());
    }
    chart.map(phi)
}

/// Outcome of moving one boundary point of the top component into a lower neighbour.
#[derive(Debug, Clone, PartialEq)]
pub struct DescentCheck {
    pub before: f64,
    pub after: f64,
    pub moved: usize,
    pub from: EdgePoint,
    pub to: EdgePoint,
}

impl DescentCheck {
    pub fn decreased(&self) -> bool {
        self.after < self.before
    }
}

/// Moves a point bordering the highest-energy component towards a lower-energy
/// neighbour by `step · L` and re-evaluates `Λ`.
pub fn descent_step(
    g: &MetricGraph,
    p: &Partition,
    step: f64,
    opts: &SpectralOptions,
) -> Result<DescentCheck, PartitionError> {
    let (cg, energies) = component_energies(g, p, opts)?;
    let before = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let top = energies.iter().position(|&e| e == before).expect("nonempty");
    for i in 0..p.size() {
        let (lo, hi) = cg.sides(i);
        let grow_up = lo == top && hi != top && energies[hi] < before;
        let grow_down = hi == top && lo != top && energies[lo] < before;
        if !(grow_up || grow_down) {
            continue;
        }
        let from = p.points[i];
        let len = g.length(from.edge);
        let x = if grow_up { from.x + step * len } else { from.x - step * len };
        let to = EdgePoint::new(from.edge, x);
        let mut points = p.points.clone();
        points[i] = to;
        let moved = Partition::new(g, points);
        if !moved.proper {
            continue;
        }
        // Do not jump over another point.
        let (a, b) = if from.x < x { (from.x, x) } else { (x, from.x) };
        if p.points.iter().enumerate().any(|(j, q)| j != i && q.edge == from.edge && q.x >= a && q.x <= b) {
            continue;
        }
        let after = lambda_of_partition(g, &moved, opts)?;
        return Ok(DescentCheck { before, after, moved: i, from, to });
    }
    Err(PartitionError::NoDescentPoint)
}

/// Single-point partitions with two components of equal ground energy, found by
/// scanning `samples` points per edge for sign changes of the energy difference.
pub fn single_point_equipartitions(
    g: &MetricGraph,
    samples: usize,
    opts: &SpectralOptions,
) -> Result<Vec<EdgePoint>, PartitionError> {
    let diff = |pt: EdgePoint| -> Result<Option<(f64, f64)>, PartitionError> {
        let p = Partition::new(g, vec![pt]);
        let (cg, energies) = component_energies(g, &p, opts)?;
        if cg.component_count != 2 {
            return Ok(None);
        }
        let (lo, hi) = cg.sides(0);
        Ok(Some((energies[lo] - energies[hi], energies[lo].abs().max(energies[hi].abs()))))
    };
    let mut found = Vec::new();
    for e in 0..g.edge_count() {
        let len = g.length(e);
        let xs: Vec<f64> = (0..samples).map(|i| (i as f64 + 0.5) / samples as f64 * len).collect();
        let values = opts.exec.try_map(&xs, |&x| diff(EdgePoint::new(e, x)))?;
        for (w, v) in xs.windows(2).zip(values.windows(2)) {
            let (Some((da, _)), Some((db, _))) = (v[0], v[1]) else { continue };
            if da == 0.0 {
                found.push(EdgePoint::new(e, w[0]));
                continue;
            }
            if da.signum() == db.signum() {
                continue;
            }
            let (mut a, mut b, mut fa) = (w[0], w[1], da);
            for _ in 0..100 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                let Some((fm, _)) = diff(EdgePoint::new(e, mid))? else { break };
                if fm.signum() == fa.signum() {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            let x = 0.5 * (a + b);
            // A jump in the difference (not a root) shows up as a large residual.
            if let Some((d, scale)) = diff(EdgePoint::new(e, x))? {
                if d.abs() <= 1e-6 * scale {
                    found.push(EdgePoint::new(e, x));
                }
            }
        }
    }
    Ok(found)
}
