//! Gradient and Hessian of `Λ ∘ Φ_m` on the torus, critical points, Morse index,
//! and the check that the Morse index at an eigenfunction's zero set equals its
//! nodal deficiency `d_n = n - ν_n`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::graph::{build_robin_tree, wrap_angle, EdgePoint, MetricGraph};
use crate::partition::{Chart, PartitionError};
use crate::spectral::{
    eigenfunction, eigenvalue, eigenvalues, is_proper, nodal_counts, vertex_residual, Branch, EigenPair, SpectralError,
    SpectralOptions, SpectrumQuery,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MorseError {
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("critical point search did not converge: |∇Λ| = {grad_norm:e} after {iterations} iterations")]
    NoConvergence { grad_norm: f64, iterations: usize },
    #[error("critical point search left the domain of the chart")]
    LeftDomain,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorseOptions {
    pub spectral: SpectralOptions,
    /// Gradient norm accepted at a critical point.
    pub tol_grad: f64,
    /// Angle step for the Hessian.
    pub fd_step: f64,
    /// Hessian eigenvalues within `index_tol · ‖H‖` of zero make the point degenerate.
    pub index_tol: f64,
    pub max_iter: usize,
    /// Grid points per angle for 1-D scans.
    pub grid: usize,
}

impl Default for MorseOptions {
    fn default() -> Self {
        Self {
            spectral: SpectralOptions::default(),
            tol_grad: 1e-8,
            fd_step: 1e-4,
            index_tol: 1e-6,
            max_iter: 100,
            grid: 64,
        }
    }
}

/// Below this `|cos(φ/2)|` the gradient uses derivatives instead of values.
const DIRICHLET_SWITCH: f64 = 1e-3;

/// `∂Λ/∂φ_j` from the boundary data of the eigenfunction on `Γ_φ`:
/// `(f(v⁺)² - f(v⁻)²) / (2cos²(φ_j/2))`, or `(∂f(v⁺)² - ∂f(v⁻)²) / (2sin²(φ_j/2))`
/// near `φ_j = π`.
pub fn grad_lambda(chart: &Chart, phi: &[f64]) -> Result<Vec<f64>, MorseError> {
    let (tree, f) = chart.eigen(phi)?;
    let g = &tree.graph;
    Ok(tree
        .section_vertices
        .iter()
        .zip(&tree.angles)
        .map(|(&(minus, plus), &angle)| {
            let (sin, cos) = (0.5 * angle).sin_cos();
            if cos.abs() >= DIRICHLET_SWITCH {
                (f.vertex_value(g, plus).powi(2) - f.vertex_value(g, minus).powi(2)) / (2.0 * cos * cos)
            } else {
                (f.vertex_flux(g, plus).powi(2) - f.vertex_flux(g, minus).powi(2)) / (2.0 * sin * sin)
            }
        })
        .collect())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc + x * x).sqrt()
}

fn shifted(phi: &[f64], i: usize, h: f64) -> Vec<f64> {
    let mut p = phi.to_vec();
    p[i] = wrap_angle(p[i] + h);
    p
}

/// Central differences of the gradient, symmetrized.
fn gradient_jacobian(chart: &Chart, phi: &[f64], h: f64) -> Result<DMatrix<f64>, MorseError> {
    let k = phi.len();
    let mut jac = DMatrix::zeros(k, k);
    for i in 0..k {
        let up = grad_lambda(chart, &shifted(phi, i, h))?;
        let down = grad_lambda(chart, &shifted(phi, i, -h))?;
        for j in 0..k {
            jac[(j, i)] = (up[j] - down[j]) / (2.0 * h);
        }
    }
    Ok((&jac + jac.transpose()) * 0.5)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HessianEstimate {
    /// Richardson-extrapolated, symmetrized Hessian.
    pub matrix: DMatrix<f64>,
    /// `‖H_h - H_{h/2}‖ / ‖H‖`.
    pub discrepancy: f64,
}

pub fn hessian(chart: &Chart, phi: &[f64], h: f64) -> Result<HessianEstimate, MorseError> {
    let coarse = gradient_jacobian(chart, phi, h)?;
    let fine = gradient_jacobian(chart, phi, 0.5 * h)?;
    let matrix = (&fine * 4.0 - &coarse) / 3.0;
    let scale = matrix.norm();
    let discrepancy = if scale > 0.0 { (&coarse - &fine).norm() / scale } else { 0.0 };
    Ok(HessianEstimate { matrix, discrepancy })
}

/// `(number of eigenvalues below -tol·‖H‖, no eigenvalue within tol·‖H‖ of zero)`.
pub fn morse_index(hess: &DMatrix<f64>, tol: f64) -> (usize, bool) {
    if hess.nrows() == 0 {
        return (0, true);
    }
    let eig = SymmetricEigen::new(hess.clone()).eigenvalues;
    let scale = eig.amax();
    if scale == 0.0 {
        return (0, false);
    }
    let index = eig.iter().filter(|&&x| x < -tol * scale).count();
    let nondegenerate = eig.iter().all(|&x| x.abs() > tol * scale);
    (index, nondegenerate)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub phi: Vec<f64>,
    pub seed: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Damped Newton iteration on `∇Λ = 0` with a finite-difference Jacobian and a
/// backtracking line search on `|∇Λ|`.
pub fn find_critical(chart: &Chart, seed: &[f64], opts: &MorseOptions) -> Result<CriticalPoint, MorseError> {
    let mut phi: Vec<f64> = seed.iter().map(|&a| wrap_angle(a)).collect();
    let mut grad = grad_lambda(chart, &phi).map_err(|_| MorseError::LeftDomain)?;
    let mut gn = norm(&grad);
    let tol = 0.1 * opts.tol_grad;
    for iter in 0..opts.max_iter {
        if gn <= tol {
            return Ok(CriticalPoint { phi, seed: seed.to_vec(), grad_norm: gn, iterations: iter });
        }
        let h = opts.fd_step.min(gn.sqrt().max(1e-6));
        let jac = gradient_jacobian(chart, &phi, h).map_err(|_| MorseError::LeftDomain)?;
        let rhs = -DVector::from_column_slice(&grad);
        let step = jac.clone().lu().solve(&rhs).filter(|s| s.iter().all(|x| x.is_finite())).unwrap_or(rhs);
        let max_step = 0.5;
        let mut t = (max_step / step.amax()).min(1.0);
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = phi.iter().zip(step.iter()).map(|(&p, &s)| wrap_angle(p + t * s)).collect();
            if let Ok(g) = grad_lambda(chart, &trial) {
                let n = norm(&g);
                if n < gn {
                    phi = trial;
                    grad = g;
                    gn = n;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(MorseError::NoConvergence { grad_norm: gn, iterations: iter });
        }
    }
    if gn <= tol {
        return Ok(CriticalPoint { phi, seed: seed.to_vec(), grad_norm: gn, iterations: opts.max_iter });
    }
    Err(MorseError::NoConvergence { grad_norm: gn, iterations: opts.max_iter })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Degenerate critical point; no index claimed.
    Withheld,
    SkippedImproper,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Withheld => "withheld",
            Verdict::SkippedImproper => "skipped_improper",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MorseReport {
    pub n: usize,
    pub lambda: f64,
    pub mu: Option<usize>,
    pub nu: Option<usize>,
    pub deficiency: Option<usize>,
    /// `β_Γ - β_{Γ∖P}`: the number of angles in the local chart.
    pub dim: usize,
    pub phi_star: Vec<f64>,
    pub grad_norm: f64,
    pub hessian: DMatrix<f64>,
    pub richardson: f64,
    pub morse_index: Option<usize>,
    pub nondegenerate: bool,
    /// `|λ_{m+1}(Γ_φ*) - λ_n| / max(1, |λ_n|)`.
    pub lambda_mismatch: f64,
    pub verdict: Verdict,
}

impl MorseReport {
    fn skipped(n: usize, lambda: f64) -> Self {
        Self {
            n,
            lambda,
            mu: None,
            nu: None,
            deficiency: None,
            dim: 0,
            phi_star: Vec::new(),
            grad_norm: f64::NAN,
            hessian: DMatrix::zeros(0, 0),
            richardson: 0.0,
            morse_index: None,
            nondegenerate: false,
            lambda_mismatch: f64::NAN,
            verdict: Verdict::SkippedImproper,
        }
    }
}

/// Proper eigenfunction `f_n`, or `None` when it is degenerate or vanishes at a vertex.
fn proper_eigenfunction(
    g: &MetricGraph,
    pair: &EigenPair,
    opts: &SpectralOptions,
) -> Result<Option<EigenPair>, MorseError> {
    if !pair.simple {
        return Ok(None);
    }
    let f = eigenfunction(g, pair)?;
    Ok(is_proper(g, &f, opts).then_some(f))
}

pub fn verify_theorem(g: &MetricGraph, n: usize, opts: &MorseOptions) -> Result<MorseReport, MorseError> {
    let pair = eigenvalue(g, n, &opts.spectral)?;
    verify_pair(g, &pair, opts)
}

/// [`verify_theorem`] for an eigenvalue already computed.
pub fn verify_pair(g: &MetricGraph, pair: &EigenPair, opts: &MorseOptions) -> Result<MorseReport, MorseError> {
    let n = pair.index;
    let Some(f) = proper_eigenfunction(g, pair, &opts.spectral)? else {
        return Ok(MorseReport::skipped(n, pair.lambda));
    };
    let counts = match nodal_counts(g, &f, &opts.spectral) {
        Ok(c) => c,
        Err(SpectralError::ImproperEigenfunction { .. } | SpectralError::IdenticallyZeroEdge { .. }) => {
            return Ok(MorseReport::skipped(n, pair.lambda))
        }
        Err(e) => return Err(e.into()),
    };
    let deficiency = n
        .checked_sub(counts.nu)
        .ok_or_else(|| SpectralError::Inconsistent(format!("ν = {} exceeds n = {n}", counts.nu)))?;

    let chart = Chart::local(g, &counts.zeros, opts.spectral)?;
    let mut phi = chart.inverse(&counts.zeros)?;
    let mut grad = grad_lambda(&chart, &phi)?;
    if norm(&grad) > opts.tol_grad {
        if let Ok(cp) = find_critical(&chart, &phi, opts) {
            phi = cp.phi;
            grad = grad_lambda(&chart, &phi)?;
        }
    }
    let grad_norm = norm(&grad);
    let lambda_star = chart.lambda(&phi)?;
    let lambda_mismatch = (lambda_star - pair.lambda).abs() / pair.lambda.abs().max(1.0);

    let (hess, richardson) = if chart.dim() == 0 {
        (DMatrix::zeros(0, 0), 0.0)
    } else {
        let h = hessian(&chart, &phi, opts.fd_step)?;
        (h.matrix, h.discrepancy)
    };
    let (index, nondegenerate) = morse_index(&hess, opts.index_tol);
    let verdict = if grad_norm > opts.tol_grad || lambda_mismatch > 1e-8 {
        Verdict::Fail
    } else if !nondegenerate {
        Verdict::Withheld
    } else if index == deficiency {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(MorseReport {
        n,
        lambda: pair.lambda,
        mu: Some(counts.mu),
        nu: Some(counts.nu),
        deficiency: Some(deficiency),
        dim: chart.dim(),
        phi_star: phi,
        grad_norm,
        hessian: hess,
        richardson,
        morse_index: Some(index),
        nondegenerate,
        lambda_mismatch,
        verdict,
    })
}

/// Reports for every `n` in the range, computed independently per `n`.
pub fn verify_range(
    g: &MetricGraph,
    n_from: usize,
    n_to: usize,
    opts: &MorseOptions,
) -> Result<Vec<MorseReport>, MorseError> {
    if n_to < n_from || n_from == 0 {
        return Ok(Vec::new());
    }
    let spectrum = eigenvalues(g, SpectrumQuery::Count(n_to), &opts.spectral)?;
    let pairs = &spectrum.pairs[n_from - 1..];
    opts.spectral.exec.try_map(pairs, |p| verify_pair(g, p, opts))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxReport {
    pub n: usize,
    pub m: usize,
    /// `1` where `Λ*` minimizes over the `j`-th angle, `0` where it maximizes.
    pub sigma: Vec<u8>,
    /// For each step, `|λ_{idx-σ}(glued) - Λ*| / max(1, |Λ*|)`.
    pub glue_mismatch: Vec<f64>,
    pub morse_index: Option<usize>,
    pub nondegenerate: bool,
    /// `Σσ = m + 1 - n`.
    pub sum_ok: bool,
    /// `k - Σσ` equals the Morse index (only meaningful when nondegenerate).
    pub index_ok: bool,
}

impl MinimaxReport {
    pub fn sum(&self) -> usize {
        self.sigma.iter().map(|&s| s as usize).sum()
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.sum_ok && (!self.nondegenerate || self.index_ok) && self.glue_mismatch.iter().all(|&e| e <= tol)
    }
}

/// Determines each `σ_j` by scanning the `j`-th angle over the whole circle, with
/// sections before `j` glued back and the later angles held at `φ*`.
///
/// Along the scan, `λ_idx` of the partly cut graph stays between `λ_{idx-1}` and
/// `λ_idx` of the graph with section `j` glued, and `Λ*` is one of the two; which
/// one is `σ_j`.
pub fn mixed_minimax_check(
    g: &MetricGraph,
    n: usize,
    opts: &MorseOptions,
) -> Result<Option<MinimaxReport>, MorseError> {
    let report = verify_theorem(g, n, opts)?;
    if report.verdict == Verdict::SkippedImproper {
        return Ok(None);
    }
    let m = report.mu.expect("proper report");
    let f = eigenfunction(g, &eigenvalue(g, n, &opts.spectral)?)?;
    let zeros = nodal_counts(g, &f, &opts.spectral)?.zeros;
    let chart = Chart::local(g, &zeros, opts.spectral)?;
    let sections = chart.sections().to_vec();
    let phi_star = report.phi_star.clone();
    let target = report.lambda;
    let scale = target.abs().max(1.0);
    let tol = 1e-9;

    let level = |from: usize, angle: Option<f64>, idx: usize| -> Result<f64, MorseError> {
        let mut phi = phi_star[from..].to_vec();
        if let Some(a) = angle {
            phi[0] = a;
        }
        let tree = build_robin_tree(g, &sections[from..], &phi).map_err(PartitionError::from)?;
        Ok(eigenvalue(&tree.graph, idx, &opts.spectral)?.lambda)
    };

    let k = sections.len();
    let mut idx = m + 1;
    let mut sigma = Vec::with_capacity(k);
    let mut glue_mismatch = Vec::with_capacity(k);
    let grid: Vec<f64> = (0..opts.grid)
        .map(|i| -std::f64::consts::PI + (i as f64 + 0.5) * 2.0 * std::f64::consts::PI / opts.grid as f64)
        .collect();
    for j in 0..k {
        let values = opts.spectral.exec.try_map(&grid, |&a| level(j, Some(a), idx))?;
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s = if target <= lo + tol * scale {
            1
        } else if target >= hi - tol * scale {
            0
        } else {
            // Neither extreme: record as a failed step.
            glue_mismatch.push(f64::INFINITY);
            sigma.push(0);
            continue;
        };
        if idx <= s as usize {
            glue_mismatch.push(f64::INFINITY);
            sigma.push(s);
            continue;
        }
        idx -= s as usize;
        sigma.push(s);
        let glued = if j + 1 < k { level(j + 1, None, idx)? } else { eigenvalue(g, idx, &opts.spectral)?.lambda };
        glue_mismatch.push((glued - target).abs() / scale);
    }
    let total: usize = sigma.iter().map(|&s| s as usize).sum();
    let sum_ok = total + n == m + 1;
    let index_ok = report.morse_index == Some(k - total);
    Ok(Some(MinimaxReport {
        n,
        m,
        sigma,
        glue_mismatch,
        morse_index: report.morse_index,
        nondegenerate: report.nondegenerate,
        sum_ok,
        index_ok,
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeficiencyHistogram {
    pub betti: usize,
    /// Count of proper eigenfunctions with deficiency `d`, for `d = 0..=β`.
    pub counts: Vec<usize>,
    pub skipped: Vec<usize>,
}

impl DeficiencyHistogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn frequency(&self, d: usize) -> f64 {
        let t = self.total();
        if t == 0 {
            0.0
        } else {
            self.counts[d] as f64 / t as f64
        }
    }

    /// `C(β, d) / 2^β`.
    pub fn binomial_reference(&self, d: usize) -> f64 {
        let b = self.betti;
        let mut c = 1.0;
        for i in 0..d {
            c = c * (b - i) as f64 / (i + 1) as f64;
        }
        c / 2f64.powi(b as i32)
    }
}

pub fn deficiency_histogram(
    g: &MetricGraph,
    n_from: usize,
    n_to: usize,
    opts: &SpectralOptions,
) -> Result<DeficiencyHistogram, MorseError> {
    let betti = g.betti();
    let mut counts = vec![0; betti + 1];
    let mut skipped = Vec::new();
    if n_from == 0 || n_to < n_from {
        return Ok(DeficiencyHistogram { betti, counts, skipped });
    }
    let spectrum = eigenvalues(g, SpectrumQuery::Count(n_to), opts)?;
    let pairs = &spectrum.pairs[n_from - 1..];
    let ds = opts.exec.try_map(pairs, |p| -> Result<Option<usize>, MorseError> {
        let Some(f) = proper_eigenfunction(g, p, opts)? else { return Ok(None) };
        match nodal_counts(g, &f, opts) {
            Ok(c) => Ok(Some(p.index - c.nu)),
            Err(SpectralError::ImproperEigenfunction { .. } | SpectralError::IdenticallyZeroEdge { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        }
    })?;
    for (p, d) in pairs.iter().zip(ds) {
        match d {
            Some(d) if d <= betti => counts[d] += 1,
            Some(d) => {
                return Err(SpectralError::Inconsistent(format!(
                    "deficiency {d} exceeds β = {betti} at n = {}",
                    p.index
                ))
                .into())
            }
            None => skipped.push(p.index),
        }
    }
    Ok(DeficiencyHistogram { betti, counts, skipped })
}

/// Glues the eigenfunction of `Γ_φ` back into a function on `Γ`. Meaningful at
/// bipartite critical points, where values and slopes match across every section.
pub fn reconstruct(chart: &Chart, phi: &[f64]) -> Result<EigenPair, MorseError> {
    let (tree, f) = chart.eigen(phi)?;
    let g = chart.graph();
    let mut coefficients = vec![[0.0; 2]; g.edge_count()];
    for e in 0..g.edge_count() {
        let pieces: Vec<usize> = (0..tree.origin.len()).filter(|&p| tree.origin[p].edge == e).collect();
        let (first, last) = (pieces[0], *pieces.last().expect("edge has pieces"));
        coefficients[e] = match f.branch {
            Branch::Negative { kappa } => {
                let v0 = f.value(&tree.graph, first, 0.0);
                let d0 = f.derivative(&tree.graph, first, 0.0);
                let end = tree.graph.length(last);
                let v1 = f.value(&tree.graph, last, end);
                let d1 = f.derivative(&tree.graph, last, end);
                [0.5 * (v0 - d0 / kappa), 0.5 * (v1 + d1 / kappa)]
            }
            _ => f.coefficients[first],
        };
    }
    let mut out = f.clone();
    out.coefficients = coefficients;
    Ok(out)
}

/// Whether `f(v⁺)` and `f(v⁻)` share a sign at every section point.
pub fn is_bipartite_critical(chart: &Chart, phi: &[f64]) -> Result<bool, MorseError> {
    let (tree, f) = chart.eigen(phi)?;
    Ok(tree
        .section_vertices
        .iter()
        .all(|&(a, b)| f.vertex_value(&tree.graph, a) * f.vertex_value(&tree.graph, b) > 0.0))
}

/// Critical points reached from a uniform grid of seeds, deduplicated (wrap-aware, `1e-6`).
pub fn critical_points_from_grid(chart: &Chart, opts: &MorseOptions, per_axis: usize) -> Vec<CriticalPoint> {
    let k = chart.dim();
    if k == 0 {
        return Vec::new();
    }
    let total = per_axis.pow(k as u32);
    let seeds: Vec<Vec<f64>> = (0..total)
        .map(|mut i| {
            (0..k)
                .map(|_| {
                    let a = i % per_axis;
                    i /= per_axis;
                    -std::f64::consts::PI + (a as f64 + 0.5) * 2.0 * std::f64::consts::PI / per_axis as f64
                })
                .collect()
        })
        .collect();
    let found = opts.spectral.exec.map(&seeds, |s| find_critical(chart, s, opts).ok());
    let mut out: Vec<CriticalPoint> = Vec::new();
    for cp in found.into_iter().flatten() {
        if !out.iter().any(|o| o.phi.iter().zip(&cp.phi).all(|(a, b)| wrap_angle(a - b).abs() < 1e-6)) {
            out.push(cp);
        }
    }
    out.sort_by(|a, b| a.phi.partial_cmp(&b.phi).unwrap_or(std::cmp::Ordering::Equal));
    out
}

/// Residual of the glued function on `Γ`.
pub fn reconstruction_residual(chart: &Chart, phi: &[f64]) -> Result<f64, MorseError> {
    Ok(vertex_residual(chart.graph(), &reconstruct(chart, phi)?)?)
}

/// The section point of a chart nearest to an edge point, for diagnostics.
pub fn nearest_section(chart: &Chart, p: EdgePoint) -> Option<usize> {
    chart
        .sections()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.edge == p.edge)
        .min_by(|a, b| (a.1.x - p.x).abs().total_cmp(&(b.1.x - p.x).abs()))
        .map(|(i, _)| i)
}
