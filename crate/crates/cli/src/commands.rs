use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use qgraph_core::bundled;
use qgraph_core::graph::{parse_graph, MetricGraph};
use qgraph_core::interlacing::run_suites;
use qgraph_core::morse::{
    critical_points_from_grid, deficiency_histogram, is_bipartite_critical, mixed_minimax_check,
    reconstruction_residual, verify_range, MorseError, MorseOptions, Verdict,
};
use qgraph_core::partition::{minimal_m, Chart, PartitionError};
use qgraph_core::spectral::{
    count_below, eigenfunction, eigenvalues, is_proper, nodal_counts, SpectralError, SpectralOptions, SpectrumQuery,
};

use crate::table::{self, flag, opt, real};
use crate::{positive, CliError, Common, Format, MorseArgs};

/// Graph argument prefix selecting a bundled example instead of a file.
const BUNDLED_PREFIX: &str = "bundled:";

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<PartitionError> for CliError {
    fn from(e: PartitionError) -> Self {
        match e {
            PartitionError::Graph(g) => CliError::Input(g.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<MorseError> for CliError {
    fn from(e: MorseError) -> Self {
        match e {
            MorseError::Partition(p) => p.into(),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

pub struct Context {
    pub graph: MetricGraph,
    pub out: PathBuf,
    pub format: Format,
    pub spectral: SpectralOptions,
}

impl Context {
    pub fn new(c: &Common) -> Result<Self, CliError> {
        let mut spectral = SpectralOptions::default();
        if let Some(t) = c.tol_root {
            spectral.root_tol = positive("tol-root", t)?;
        }
        Ok(Self { graph: load_graph(&c.graph)?, out: c.out.clone(), format: c.format, spectral })
    }

    fn write(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        table::write(&self.out, name, self.format, header, rows)
    }
}

fn load_graph(path: &Path) -> Result<MetricGraph, CliError> {
    if let Some(name) = path.to_str().and_then(|s| s.strip_prefix(BUNDLED_PREFIX)) {
        return bundled::load(name).ok_or_else(|| {
            let names: Vec<&str> = bundled::ALL.iter().map(|(n, _)| *n).collect();
            CliError::Input(format!("no bundled graph `{name}`; available: {}", names.join(", ")))
        });
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_graph(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn morse_options(ctx: &Context, m: &MorseArgs) -> Result<MorseOptions, CliError> {
    Ok(MorseOptions {
        spectral: ctx.spectral,
        tol_grad: positive("tol-grad", m.tol_grad)?,
        fd_step: positive("fd-step", m.fd_step)?,
        ..MorseOptions::default()
    })
}

fn check_m(g: &MetricGraph, m: Option<usize>) -> Result<usize, CliError> {
    let min = minimal_m(g);
    match m {
        None => Ok(min + 1),
        Some(m) if m >= min => Ok(m),
        Some(m) => Err(CliError::Input(format!("--m {m} is below the smallest usable size {min}"))),
    }
}

pub fn spectrum(ctx: &Context, count: usize) -> Result<(), CliError> {
    let g = &ctx.graph;
    let s = eigenvalues(g, SpectrumQuery::Count(count), &ctx.spectral)?;
    let mut rows = Vec::with_capacity(s.pairs.len());
    for p in &s.pairs {
        let mut counts = None;
        let mut proper = false;
        if p.simple {
            let f = eigenfunction(g, p)?;
            proper = is_proper(g, &f, &ctx.spectral);
            if proper {
                counts = Some(nodal_counts(g, &f, &ctx.spectral)?);
            }
        }
        rows.push(vec![
            p.index.to_string(),
            real(p.k()),
            real(p.lambda),
            p.multiplicity.to_string(),
            flag(proper),
            opt(counts.as_ref().map(|c| c.mu)),
            opt(counts.as_ref().map(|c| c.nu)),
            opt(counts.as_ref().map(|c| p.index - c.nu)),
        ]);
    }
    ctx.write("spectrum", &["n", "k", "lambda", "multiplicity", "proper", "mu", "nu", "deficiency"], &rows)?;
    eprintln!(
        "{} eigenvalues; Weyl audit: max |N - Weyl| = {} (bound {}) over {} samples",
        s.pairs.len(),
        s.weyl.max_discrepancy,
        s.weyl.bound,
        s.weyl.samples
    );
    Ok(())
}

/// Grid point `i` of `count` on the circle, avoiding both `-π` and `π`.
fn grid_angle(i: usize, count: usize) -> f64 {
    -PI + (i as f64 + 0.5) * 2.0 * PI / count as f64
}

pub fn scan(ctx: &Context, m: Option<usize>, grid: Option<usize>, line: Option<usize>) -> Result<(), CliError> {
    let g = &ctx.graph;
    let chart = Chart::global(g, check_m(g, m)?, ctx.spectral)?;
    let dim = chart.dim();
    if dim == 0 {
        return Err(CliError::Input("the graph is a tree: there are no angles to scan".into()));
    }
    let points: Vec<Vec<f64>> = match line {
        Some(j) if j == 0 || j > dim => return Err(CliError::Input(format!("--line {j} outside 1..={dim}"))),
        Some(j) => {
            let count = grid.unwrap_or(256).max(1);
            (0..count)
                .map(|i| {
                    let mut phi = vec![0.0; dim];
                    phi[j - 1] = grid_angle(i, count);
                    phi
                })
                .collect()
        }
        None if dim == 1 => {
            let count = grid.unwrap_or(256).max(1);
            (0..count).map(|i| vec![grid_angle(i, count)]).collect()
        }
        None if dim == 2 => {
            let count = grid.unwrap_or(64).max(1);
            (0..count * count).map(|i| vec![grid_angle(i / count, count), grid_angle(i % count, count)]).collect()
        }
        None => {
            return Err(CliError::Input(format!(
                "a full scan needs at most two angles but this graph has {dim}; choose one with --line"
            )))
        }
    };
    let values = ctx.spectral.exec.map(&points, |phi| chart.lambda(phi).ok());
    let mut header: Vec<String> = (1..=dim).map(|i| format!("phi{i}")).collect();
    header.extend(["lambda".to_string(), "in_domain".to_string()]);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = points
        .iter()
        .zip(&values)
        .map(|(phi, v)| {
            let mut row: Vec<String> = phi.iter().map(|&x| real(x)).collect();
            row.push(opt(v.map(real)));
            row.push(flag(v.is_some()));
            row
        })
        .collect();
    let inside = values.iter().filter(|v| v.is_some()).count();
    ctx.write("lambda_scan", &header, &rows)?;
    eprintln!("m = {}, {} of {} grid points inside the domain", chart.m(), inside, rows.len());
    Ok(())
}

pub fn critical(ctx: &Context, m: Option<usize>, grid: usize, opts: &MorseOptions) -> Result<(), CliError> {
    let g = &ctx.graph;
    let chart = Chart::global(g, check_m(g, m)?, ctx.spectral)?;
    let dim = chart.dim();
    let found = critical_points_from_grid(&chart, opts, grid);
    let mut rows = Vec::with_capacity(found.len());
    for cp in &found {
        let lambda = chart.lambda(&cp.phi)?;
        let bipartite = is_bipartite_critical(&chart, &cp.phi)?;
        let residual = if bipartite { Some(reconstruction_residual(&chart, &cp.phi)?) } else { None };
        // index of the eigenvalue of the graph that Λ lands on, if it does
        let n = count_below(g, lambda - 1e-8 * lambda.abs().max(1.0)) + 1;
        let lambda_n = eigenvalues(g, SpectrumQuery::Count(n), &ctx.spectral)?.pairs[n - 1].lambda;
        let hit = (lambda_n - lambda).abs() <= 1e-8 * lambda.abs().max(1.0);
        let mut row: Vec<String> = cp.phi.iter().map(|&x| real(x)).collect();
        row.extend([
            real(lambda),
            real(cp.grad_norm),
            cp.iterations.to_string(),
            flag(bipartite),
            opt(residual.map(real)),
            opt(hit.then_some(n)),
        ]);
        rows.push(row);
    }
    let mut header: Vec<String> = (1..=dim).map(|i| format!("phi{i}")).collect();
    header.extend(["lambda", "grad_norm", "iterations", "bipartite", "residual", "n"].map(String::from));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    ctx.write("critical_points", &header, &rows)?;
    eprintln!("m = {}: {} distinct critical points from {} seeds per angle", chart.m(), rows.len(), grid);
    Ok(())
}

pub fn verify(
    ctx: &Context,
    (n_from, n_to): (usize, usize),
    opts: &MorseOptions,
    minimax: bool,
) -> Result<(), CliError> {
    let g = &ctx.graph;
    let reports = verify_range(g, n_from, n_to, opts)?;
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                real(r.lambda),
                opt(r.mu),
                opt(r.nu),
                opt(r.deficiency),
                opt(r.grad_norm.is_finite().then(|| real(r.grad_norm))),
                opt(r.morse_index),
                flag(r.nondegenerate),
                r.verdict.as_str().to_string(),
            ]
        })
        .collect();
    ctx.write(
        "morse_report",
        &["n", "lambda", "mu", "nu", "deficiency", "grad_norm", "morse_index", "nondegenerate", "verdict"],
        &rows,
    )?;
    let tally = |v: Verdict| reports.iter().filter(|r| r.verdict == v).count();
    let failed = tally(Verdict::Fail);
    eprintln!(
        "pass {}, fail {}, withheld {}, skipped (improper) {}",
        tally(Verdict::Pass),
        failed,
        tally(Verdict::Withheld),
        tally(Verdict::SkippedImproper)
    );
    let mut minimax_failed = 0;
    if minimax {
        let ns: Vec<usize> = (n_from..=n_to).collect();
        let results = opts.spectral.exec.try_map(&ns, |&n| mixed_minimax_check(g, n, opts))?;
        let mut rows = Vec::new();
        for r in results.into_iter().flatten() {
            let ok = r.passed(1e-8);
            minimax_failed += usize::from(!ok);
            let sigma: Vec<String> = r.sigma.iter().map(u8::to_string).collect();
            let worst = r.glue_mismatch.iter().copied().fold(0.0, f64::max);
            rows.push(vec![
                r.n.to_string(),
                r.m.to_string(),
                sigma.join(" "),
                r.sum().to_string(),
                real(worst),
                opt(r.morse_index),
                flag(r.sum_ok),
                flag(r.index_ok),
                flag(ok),
            ]);
        }
        eprintln!("minimax: {} rows checked, {} failed", rows.len(), minimax_failed);
        ctx.write(
            "minimax",
            &["n", "m", "sigma", "sigma_sum", "glue_mismatch", "morse_index", "sum_ok", "index_ok", "passed"],
            &rows,
        )?;
    }
    if failed > 0 || minimax_failed > 0 {
        return Err(CliError::Verification(format!("{failed} theorem rows and {minimax_failed} minimax rows failed")));
    }
    Ok(())
}

pub fn interlace(ctx: &Context, count: usize) -> Result<(), CliError> {
    let checks = run_suites(&ctx.graph, count, &ctx.spectral)?;
    println!("{:<10} {:>5} {:>12} {:>6}  modification", "suite", "shift", "worst", "at n");
    let mut failed = 0;
    for c in &checks {
        let mark = if c.passed() { "" } else { "  VIOLATED" };
        failed += usize::from(!c.passed());
        println!(
            "{:<10} {:>5} {:>12.3e} {:>6}  {}{}",
            c.suite.to_string(),
            c.shift,
            c.worst,
            c.worst_n,
            c.description,
            mark
        );
    }
    println!("{} modifications, {} violations", checks.len(), failed);
    if failed > 0 {
        return Err(CliError::Verification(format!("{failed} interlacing violations")));
    }
    Ok(())
}

pub fn histogram(ctx: &Context, (n_from, n_to): (usize, usize)) -> Result<(), CliError> {
    let h = deficiency_histogram(&ctx.graph, n_from, n_to, &ctx.spectral)?;
    let rows: Vec<Vec<String>> = (0..=h.betti)
        .map(|d| vec![d.to_string(), h.counts[d].to_string(), real(h.frequency(d)), real(h.binomial_reference(d))])
        .collect();
    ctx.write("deficiency_hist", &["d", "count", "frequency", "binomial_reference"], &rows)?;
    let skipped: Vec<String> = h.skipped.iter().map(usize::to_string).collect();
    eprintln!("{} proper eigenfunctions; skipped: [{}]", h.total(), skipped.join(", "));
    Ok(())
}

pub fn examples(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Input(format!("cannot create {}: {e}", out.display())))?;
    for (name, text) in bundled::ALL {
        let path = out.join(format!("{name}.graph"));
        fs::write(&path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}
