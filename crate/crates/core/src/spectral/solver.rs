//! Eigenvalues by bisection on the counting function.

use std::f64::consts::PI;

use super::counting::Counter;
use super::{secular, Branch, EigenPair, SpectralError, SpectralOptions};
use crate::graph::MetricGraph;

const DOUBLING_BUDGET: usize = 2100;

/// Absolute width below which brackets are not split further.
fn abs_floor(g: &MetricGraph) -> f64 {
    1e-14 * (PI / g.total_length()).powi(2)
}

pub(crate) fn lower_bound(counter: &Counter) -> Result<f64, SpectralError> {
    let mut lo = -1.0;
    for _ in 0..DOUBLING_BUDGET {
        if counter.count(lo) == 0 {
            return Ok(lo);
        }
        lo *= 2.0;
    }
    Err(SpectralError::BracketFailure("no lower bound for the spectrum".into()))
}

/// Some `λ` with at least `n` eigenvalues below it.
pub(crate) fn upper_bound(counter: &Counter, n: usize) -> Result<f64, SpectralError> {
    let g = counter.graph();
    let k = PI * (n + g.vertex_count() + g.edge_count() + 1) as f64 / g.total_length();
    let mut hi = k * k;
    for _ in 0..DOUBLING_BUDGET {
        if counter.count(hi) >= n {
            return Ok(hi);
        }
        hi *= 2.0;
    }
    Err(SpectralError::BracketFailure(format!("no upper bound for eigenvalue {n}")))
}

fn stop(a: f64, b: f64, tol: f64, floor: f64) -> Option<f64> {
    let mid = a + 0.5 * (b - a);
    let done = b - a <= tol * a.abs().max(b.abs()) + floor || mid <= a || mid >= b;
    done.then_some(if a <= 0.0 && b >= 0.0 { 0.0 } else { mid })
}

/// Eigenvalues in `[a, b)`, as `(value, count)` clusters in ascending order.
#[allow(clippy::too_many_arguments)]
fn refine(counter: &Counter, a: f64, b: f64, na: usize, nb: usize, tol: f64, floor: f64, out: &mut Vec<(f64, usize)>) {
    if nb <= na {
        return;
    }
    if let Some(lambda) = stop(a, b, tol, floor) {
        out.push((lambda, nb - na));
        return;
    }
    let mid = a + 0.5 * (b - a);
    let nm = counter.count(mid).clamp(na, nb);
    refine(counter, a, mid, na, nm, tol, floor, out);
    refine(counter, mid, b, nm, nb, tol, floor, out);
}

/// Result of a Weyl-law completeness audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylAudit {
    pub samples: usize,
    /// Largest `|N(k) - Lk/π|` over the scan.
    pub max_discrepancy: f64,
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub pairs: Vec<EigenPair>,
    pub weyl: WeylAudit,
}

impl Spectrum {
    pub fn lambdas(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectrumQuery {
    /// The lowest `n` eigenvalues.
    Count(usize),
    /// Every eigenvalue with `k = √λ` below the bound.
    KMax(f64),
}

pub(crate) fn scale(g: &MetricGraph) -> f64 {
    (PI / g.total_length()).powi(2)
}

fn multiplicity(g: &MetricGraph, lambda: f64, cluster: usize, opts: &SpectralOptions) -> usize {
    cluster.max(secular::nullity(g, lambda, opts.multiplicity_tol))
}

fn pair(g: &MetricGraph, index: usize, lambda: f64, cluster: usize, opts: &SpectralOptions) -> EigenPair {
    let multiplicity = multiplicity(g, lambda, cluster, opts);
    EigenPair {
        index,
        lambda,
        branch: Branch::of(lambda),
        multiplicity,
        simple: multiplicity == 1,
        coefficients: Vec::new(),
        normalized: false,
    }
}

pub fn eigenvalues(g: &MetricGraph, query: SpectrumQuery, opts: &SpectralOptions) -> Result<Spectrum, SpectralError> {
    let counter = Counter::new(g);
    let total = g.total_length();
    let lo = lower_bound(&counter)?;
    let (hi, wanted) = match query {
        SpectrumQuery::Count(0) => {
            return Ok(Spectrum { pairs: Vec::new(), weyl: WeylAudit { samples: 0, max_discrepancy: 0.0, bound: 0.0 } })
        }
        SpectrumQuery::Count(n) => (upper_bound(&counter, n)?, Some(n)),
        SpectrumQuery::KMax(kmax) => ((kmax * kmax).max(0.0), None),
    };

    let step = PI / (4.0 * total);
    let mut nodes = vec![lo];
    let mut i = 0usize;
    loop {
        let lambda = (i as f64 * step).powi(2);
        if lambda >= hi {
            break;
        }
        nodes.push(lambda);
        i += 1;
    }
    nodes.push(hi.max(lo));
    let counts = opts.exec.map(&nodes, |&lambda| counter.count(lambda));

    if counts.windows(2).any(|w| w[1] < w[0]) {
        return Err(SpectralError::BracketFailure("counting function is not monotone on the scan grid".into()));
    }

    let negatives = counts.get(1).copied().unwrap_or(0);
    let bound = (g.vertex_count() + g.edge_count() + negatives) as f64;
    let mut max_discrepancy: f64 = 0.0;
    let mut samples = 0;
    for (&lambda, &n) in nodes.iter().zip(&counts).skip(1) {
        let weyl = total * lambda.max(0.0).sqrt() / PI;
        max_discrepancy = max_discrepancy.max((n as f64 - weyl).abs());
        samples += 1;
    }
    if max_discrepancy > bound {
        return Err(SpectralError::BracketFailure(format!(
            "Weyl audit failed: discrepancy {max_discrepancy:.2} exceeds {bound}"
        )));
    }

    let brackets: Vec<(f64, f64, usize, usize)> = nodes
        .windows(2)
        .zip(counts.windows(2))
        .filter(|(_, c)| c[1] > c[0])
        .map(|(x, c)| (x[0], x[1], c[0], c[1]))
        .collect();
    let floor = abs_floor(g);
    let found = opts.exec.map(&brackets, |&(a, b, na, nb)| {
        let mut out = Vec::new();
        refine(&counter, a, b, na, nb, opts.root_tol, floor, &mut out);
        out
    });

    let mut values: Vec<f64> = Vec::new();
    for (lambda, count) in found.into_iter().flatten() {
        values.extend(std::iter::repeat_n(lambda, count));
    }
    let cluster = cluster_sizes(&values, opts.cluster_tol, scale(g));
    if let Some(n) = wanted {
        values.truncate(n);
    }
    let indexed: Vec<(usize, f64, usize)> =
        values.iter().zip(&cluster).enumerate().map(|(i, (&l, &c))| (i + 1, l, c)).collect();
    let pairs = opts.exec.map(&indexed, |&(index, lambda, c)| pair(g, index, lambda, c, opts));
    Ok(Spectrum { pairs, weyl: WeylAudit { samples, max_discrepancy, bound } })
}

/// Size of the cluster each value belongs to; neighbours within `tol · max(|λ|, scale)` merge.
fn cluster_sizes(values: &[f64], tol: f64, scale: f64) -> Vec<usize> {
    let mut sizes = vec![1; values.len()];
    let mut start = 0;
    for i in 1..=values.len() {
        let split = i == values.len() || {
            let (a, b) = (values[i - 1], values[i]);
            b - a > tol * a.abs().max(b.abs()).max(scale)
        };
        if split {
            for s in &mut sizes[start..i] {
                *s = i - start;
            }
            start = i;
        }
    }
    sizes
}

/// The `n`-th eigenvalue (1-based) by direct bisection.
pub fn eigenvalue(g: &MetricGraph, n: usize, opts: &SpectralOptions) -> Result<EigenPair, SpectralError> {
    if n == 0 {
        return Err(SpectralError::BadIndex(0));
    }
    if g.edge_count() == 0 {
        return Err(SpectralError::BracketFailure("graph has no edges".into()));
    }
    let counter = Counter::new(g);
    let mut a = lower_bound(&counter)?;
    let mut b = upper_bound(&counter, n)?;
    let floor = abs_floor(g);
    let lambda = loop {
        if let Some(lambda) = stop(a, b, opts.root_tol, floor) {
            break lambda;
        }
        let mid = a + 0.5 * (b - a);
        if counter.count(mid) >= n {
            b = mid;
        } else {
            a = mid;
        }
    };
    let delta = opts.cluster_tol * lambda.abs().max(scale(g));
    let below = counter.count(lambda - delta);
    let cluster = counter.count(lambda + delta).saturating_sub(below).max(1);
    Ok(pair(g, n, lambda, cluster, opts))
}
