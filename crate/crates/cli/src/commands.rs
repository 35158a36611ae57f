//! Subcommand bodies. Each writes into a staging directory that is moved
//! into place only when the whole run succeeds.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use gelfand_core::continuation::{extremal_profile, trace_branch, Branch, ContinuationSettings, Fold};
use gelfand_core::estimates::{
    affine_gap, decay_check, dyadic_sequences, gradient_l1_check, l1_bound_check, lebesgue_norm,
    morrey_report, pohozaev_residual, MorreyParams, Target, GRADIENT_L1_CONSTANT,
};
use gelfand_core::io::{fmt_f64, write_branch, write_grid_function, write_json, write_solution, write_summary, SummaryRow};
use gelfand_core::oracles::{ball_lambda1, critical_exponents};
use gelfand_core::report::EstimateReport;
use gelfand_core::solver::{solve_minimal, Problem, Solution};
use gelfand_core::stability::{
    curvature_test_inequality, principal_eigenvalue, principal_eigenvalue_mode, quadratic_form,
    weighted_test_inequality, TestWeight,
};
use gelfand_core::{GridFunction, Nonlinearity, RadialGrid};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigError, LambdaChoice, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Subcommand {
    Solve,
    Branch,
    Spectrum,
    Verify,
    Atlas,
    Oracle,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver failure: {0}")]
    Solver(#[from] gelfand_core::Error),
    #[error("output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) | CliError::Output(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Files land in a hidden directory next to their destination and are
/// renamed into place on [`Staging::commit`]; dropping an uncommitted
/// staging area deletes everything written so far.
struct Staging {
    dir: PathBuf,
    out: PathBuf,
    files: Vec<String>,
    committed: bool,
    created_out: bool,
}

impl Staging {
    fn new(out: &Path) -> Result<Self> {
        let created_out = !out.exists();
        fs::create_dir_all(out)?;
        let dir = out.join(format!(".gelfand-partial-{}", std::process::id()));
        if dir.exists() {
            fs::remove_dir_all(&dir)?;
        }
        fs::create_dir(&dir)?;
        Ok(Self {
            dir,
            out: out.to_path_buf(),
            files: Vec::new(),
            committed: false,
            created_out,
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.path(name))?))
    }

    fn commit(mut self) -> Result<Vec<PathBuf>> {
        let mut done = Vec::with_capacity(self.files.len());
        for name in &self.files {
            let target = self.out.join(name);
            fs::rename(self.dir.join(name), &target)?;
            done.push(target);
        }
        fs::remove_dir_all(&self.dir)?;
        self.committed = true;
        Ok(done)
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.dir);
            if self.created_out {
                // fails, as intended, if anything else appeared there meanwhile
                let _ = fs::remove_dir(&self.out);
            }
        }
    }
}

/// Runs one subcommand and returns the files it wrote.
pub fn dispatch(cfg: &RunConfig, cmd: Subcommand, out: &Path, workers: Option<usize>) -> Result<Vec<PathBuf>> {
    check_preconditions(cfg, cmd)?;
    let mut stage = Staging::new(out)?;
    match cmd {
        Subcommand::Solve => solve(cfg, &mut stage)?,
        Subcommand::Branch => branch(cfg, &mut stage)?,
        Subcommand::Spectrum => spectrum(cfg, &mut stage)?,
        Subcommand::Verify => verify(cfg, &mut stage)?,
        Subcommand::Atlas => atlas(cfg, &mut stage, workers)?,
        Subcommand::Oracle => oracle(cfg, &mut stage)?,
    }
    stage.commit()
}

/// Everything that can be rejected without solving anything.
fn check_preconditions(cfg: &RunConfig, cmd: Subcommand) -> Result<()> {
    let invalid = |key: &'static str, reason: String| CliError::Config(ConfigError::Invalid { key, reason });
    match cmd {
        Subcommand::Solve | Subcommand::Spectrum | Subcommand::Verify => {
            cfg.require_n()?;
            cfg.require_lambda()?;
        }
        Subcommand::Branch => {
            cfg.require_n()?;
        }
        Subcommand::Atlas => {
            cfg.dimensions()?;
        }
        Subcommand::Oracle => {
            let (a, _) = cfg.dimensions()?;
            if a < 10 {
                return Err(invalid("n_range", format!("critical exponents need n >= 10, got {a}")));
            }
        }
    }
    let (lo, _) = cfg.dimensions()?;
    RadialGrid::new(cfg.cells, cfg.grading, lo, cfg.radius).map_err(|e| invalid("M", e.to_string()))?;
    if cmd == Subcommand::Verify {
        let n = cfg.require_n()?;
        if !(cfg.rho < 2.0 * cfg.radius / 3.0) {
            return Err(invalid("rho", format!("need rho < 2R/3 = {}", 2.0 * cfg.radius / 3.0)));
        }
        if n == 10 && !(-(cfg.rho / cfg.radius).ln() > cfg.delta / 12.0 && 1.5 * cfg.rho < cfg.radius) {
            return Err(invalid("rho", "the n = 10 weight needs |log rho| > delta/12".into()));
        }
        if let Some(a) = cfg.weight_a {
            let upper = 2.0 * (1.0 + (n as f64 - 1.0).sqrt());
            if !(a > 8.0 && a < upper) {
                return Err(invalid("weight_a", format!("need 8 < a < {upper:.6} for n = {n}")));
            }
        }
        let (p, beta) = morrey_params(cfg, n);
        MorreyParams::new(p, beta, n).map_err(|e| invalid("beta", e.to_string()))?;
    }
    Ok(())
}

fn grid(cfg: &RunConfig, n: usize) -> Result<Arc<RadialGrid>> {
    Ok(Arc::new(RadialGrid::new(cfg.cells, cfg.grading, n, cfg.radius)?))
}

fn settings(cfg: &RunConfig) -> ContinuationSettings {
    ContinuationSettings {
        ds: cfg.ds,
        max_points: cfg.max_points,
        sup_limit: cfg.sup_limit,
        tol: cfg.tol,
        ..Default::default()
    }
}

/// Traces just past the first fold.
fn locate_fold(cfg: &RunConfig, grid: Arc<RadialGrid>, f: Nonlinearity) -> Result<(Branch, Fold)> {
    let s = ContinuationSettings {
        points_after_fold: Some(2),
        ..settings(cfg)
    };
    let branch = trace_branch(grid, f, &s)?;
    let fold = branch.fold.ok_or(gelfand_core::Error::NoFold)?;
    Ok((branch, fold))
}

/// `(λ, λ⋆)`; `λ⋆` only when it had to be computed.
fn resolve_lambda(cfg: &RunConfig, grid: &Arc<RadialGrid>) -> Result<(f64, Option<f64>)> {
    match cfg.require_lambda()? {
        LambdaChoice::Absolute(l) => Ok((l, None)),
        LambdaChoice::Fraction(frac) => {
            let (_, fold) = locate_fold(cfg, grid.clone(), cfg.family)?;
            Ok((frac * fold.lambda_star, Some(fold.lambda_star)))
        }
    }
}

fn minimal_solution(cfg: &RunConfig) -> Result<(Solution, Option<f64>)> {
    let g = grid(cfg, cfg.require_n()?)?;
    let (lambda, star) = resolve_lambda(cfg, &g)?;
    let problem = Problem::new(g, cfg.family, lambda)?;
    Ok((solve_minimal(&problem, cfg.tol)?, star))
}

fn solve(cfg: &RunConfig, stage: &mut Staging) -> Result<()> {
    let (s, _) = minimal_solution(cfg)?;
    stage.path("solution.csv");
    stage.path("solution.json");
    write_solution(&s, &stage.dir, "solution")?;
    Ok(())
}

#[derive(Serialize)]
struct FoldRecord {
    n: usize,
    family: String,
    #[serde(rename = "M")]
    cells: usize,
    points: usize,
    lambda_star: Option<f64>,
    sup_at_fold: Option<f64>,
    index: Option<usize>,
}

fn branch(cfg: &RunConfig, stage: &mut Staging) -> Result<()> {
    let n = cfg.require_n()?;
    let mut b = trace_branch(grid(cfg, n)?, cfg.family, &settings(cfg))?;
    if cfg.stability {
        b.fill_stability()?;
    }
    write_branch(&b, stage.create("branch.csv")?)?;
    let record = FoldRecord {
        n,
        family: family_label(&cfg.family),
        cells: cfg.cells,
        points: b.points.len(),
        lambda_star: b.fold.map(|f| f.lambda_star),
        sup_at_fold: b.fold.map(|f| f.sup_at_fold),
        index: b.fold.map(|f| f.index),
    };
    write_json(&record, &stage.path("fold.json"))?;
    Ok(())
}

#[derive(Serialize)]
struct CertificateRecord {
    n: usize,
    family: String,
    lambda: f64,
    mode: usize,
    mu1: f64,
    stable: bool,
    marginal: bool,
    iterations: usize,
    /// `Q(φ₁)`, radial modes only.
    #[serde(skip_serializing_if = "Option::is_none")]
    rayleigh_quotient: Option<f64>,
    phi1_csv: String,
}

fn spectrum(cfg: &RunConfig, stage: &mut Staging) -> Result<()> {
    let (s, _) = minimal_solution(cfg)?;
    let f = s.problem.nonlinearity;
    let cert = principal_eigenvalue_mode(&s.u, &f, s.problem.lambda, cfg.mode)?;
    let rayleigh = if cfg.mode == 0 {
        Some(quadratic_form(&s.u, &f, s.problem.lambda, &cert.phi1)?)
    } else {
        None
    };
    write_grid_function(&cert.phi1, stage.create("phi1.csv")?)?;
    let record = CertificateRecord {
        n: s.problem.dimension(),
        family: family_label(&f),
        lambda: s.problem.lambda,
        mode: cert.mode,
        mu1: cert.mu1,
        stable: cert.stable,
        marginal: cert.marginal,
        iterations: cert.iterations,
        rayleigh_quotient: rayleigh,
        phi1_csv: "phi1.csv".into(),
    };
    write_json(&record, &stage.path("certificate.json"))?;
    Ok(())
}

fn morrey_params(cfg: &RunConfig, n: usize) -> (f64, f64) {
    (cfg.p.unwrap_or(2.0), cfg.beta.unwrap_or(0.5 * n as f64))
}

fn lemma_weight(cfg: &RunConfig, n: usize) -> Option<TestWeight> {
    match n {
        3..=9 => Some(TestWeight::Critical),
        10 => Some(TestWeight::Log10(cfg.delta)),
        n if n >= 11 => {
            let upper = 2.0 * (1.0 + (n as f64 - 1.0).sqrt());
            Some(TestWeight::Power(cfg.weight_a.unwrap_or(0.5 * (8.0 + upper))))
        }
        _ => None,
    }
}

/// All estimate reports for one converged minimal solution.
pub fn estimate_suite(cfg: &RunConfig, s: &Solution) -> gelfand_core::Result<Vec<EstimateReport>> {
    let u = &s.u;
    let f = s.problem.nonlinearity;
    let lambda = s.problem.lambda;
    let g = u.grid().clone();
    let n = g.dimension();
    let radius = g.radius();
    let mut reports = Vec::new();
    if let Some(w) = lemma_weight(cfg, n) {
        reports.push(weighted_test_inequality(u, cfg.rho, w)?);
    }
    let eta = GridFunction::from_fn(g.clone(), |r| 1.0 - r / radius)?;
    reports.push(curvature_test_inequality(u, &eta)?);
    reports.push(gradient_l1_check(u, GRADIENT_L1_CONSTANT)?);
    let poh = pohozaev_residual(s)?;
    reports.push(EstimateReport::new("pohozaev", poh, cfg.pohozaev_tol));
    let a = match cfg.l1_a {
        Some(a) => a,
        None => 2.0 * ball_lambda1(g.clone())?.lambda1,
    };
    let b = match cfg.l1_b {
        Some(b) => b,
        None => affine_gap(&f, lambda, a, 50f64.max(2.0 * u.sup_norm()))?.max(0.0),
    };
    reports.push(l1_bound_check(s, a, b)?);
    let (p, beta) = morrey_params(cfg, n);
    reports.push(morrey_report(u, MorreyParams::new(p, beta, n)?, cfg.center_samples)?);
    let seq = dyadic_sequences(u, cfg.levels)?;
    reports.push(decay_check(&seq)?.report(&seq));
    Ok(reports)
}

fn verify(cfg: &RunConfig, stage: &mut Staging) -> Result<()> {
    let (s, star) = minimal_solution(cfg)?;
    let reports = estimate_suite(cfg, &s)?;
    let frac = match (cfg.lambda, star) {
        (Some(LambdaChoice::Fraction(f)), _) => f,
        (_, Some(l)) => s.problem.lambda / l,
        _ => f64::NAN,
    };
    let label = family_label(&s.problem.nonlinearity);
    let rows: Vec<SummaryRow> = reports
        .iter()
        .map(|r| SummaryRow::new(r, s.problem.dimension(), &label, frac))
        .collect();
    write_json(&reports, &stage.path("reports.json"))?;
    write_summary(&rows, stage.create("summary.csv")?)?;
    Ok(())
}

/// `exp`, `power(q)`, `affine(a,b)` or `constant(c)`.
pub fn family_label(f: &Nonlinearity) -> String {
    match *f {
        Nonlinearity::Exponential => "exp".into(),
        Nonlinearity::Power { q } => format!("power({q})"),
        Nonlinearity::Affine { a, b } => format!("affine({a},{b})"),
        Nonlinearity::Constant { c } => format!("constant({c})"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtlasRow {
    pub n: usize,
    pub family: String,
    pub lambda_star: f64,
    pub sup_at_fold: f64,
    pub mu1_at_90pct: f64,
    pub w1_extremal: f64,
}

/// `‖u‖_{W^{1,q}(B_R)} = (‖u‖_q^q + ‖∇u‖_q^q)^{1/q}`.
fn sobolev_norm(u: &GridFunction, q: f64) -> gelfand_core::Result<f64> {
    let radius = u.grid().radius();
    let v = lebesgue_norm(u, q, radius, Target::Value)?;
    let d = lebesgue_norm(u, q, radius, Target::Gradient)?;
    Ok((v.powf(q) + d.powf(q)).powf(1.0 / q))
}

pub fn atlas_cell(cfg: &RunConfig, n: usize, f: Nonlinearity) -> gelfand_core::Result<AtlasRow> {
    let g = Arc::new(RadialGrid::new(cfg.cells, cfg.grading, n, cfg.radius)?);
    let s = ContinuationSettings {
        points_after_fold: Some(2),
        ..settings(cfg)
    };
    let branch = trace_branch(g.clone(), f, &s)?;
    let fold = branch.fold.ok_or(gelfand_core::Error::NoFold)?;
    let p = Problem::new(g, f, 0.9 * fold.lambda_star)?;
    let sol = solve_minimal(&p, cfg.tol)?;
    let mu1 = principal_eigenvalue(&sol.u, &f, p.lambda)?.mu1;
    let extremal = extremal_profile(&branch, cfg.extremal_tol)?;
    Ok(AtlasRow {
        n,
        family: family_label(&f),
        lambda_star: fold.lambda_star,
        sup_at_fold: fold.sup_at_fold,
        mu1_at_90pct: mu1,
        w1_extremal: sobolev_norm(&extremal, 2.0 + cfg.gamma)?,
    })
}

fn atlas(cfg: &RunConfig, stage: &mut Staging, workers: Option<usize>) -> Result<()> {
    let (lo, hi) = cfg.dimensions()?;
    let cells: Vec<(usize, Nonlinearity)> = (lo..=hi)
        .flat_map(|n| cfg.families.iter().map(move |&f| (n, f)))
        .collect();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = workers {
        pool = pool.num_threads(k);
    }
    let pool = pool.build().map_err(|e| CliError::Output(e.to_string()))?;
    let rows: Vec<AtlasRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(n, f)| atlas_cell(cfg, n, f))
            .collect::<gelfand_core::Result<Vec<_>>>()
    })?;
    let mut w = csv::Writer::from_writer(stage.create("atlas.csv")?);
    w.write_record(["n", "family", "lambda_star", "sup_at_fold", "mu1_at_90pct", "w1_2g_extremal"])?;
    for r in &rows {
        w.write_record([
            r.n.to_string(),
            r.family.clone(),
            fmt_f64(r.lambda_star),
            fmt_f64(r.sup_at_fold),
            fmt_f64(r.mu1_at_90pct),
            fmt_f64(r.w1_extremal),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn oracle(cfg: &RunConfig, stage: &mut Staging) -> Result<()> {
    let (lo, hi) = cfg.dimensions()?;
    let rows = (lo..=hi).map(critical_exponents).collect::<gelfand_core::Result<Vec<_>>>()?;
    write_json(&rows, &stage.path("oracle.json"))?;
    Ok(())
}
