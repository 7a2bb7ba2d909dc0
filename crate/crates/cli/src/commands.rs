use std::io::Write;
use std::path::{Path, PathBuf};

use lingrad_core::certificate::{
    evaluate, CertificateKind, CertificateReport, SampleSet, Tolerances,
};
use lingrad_core::energy::{energy_parts, Field, ProblemSpec};
use lingrad_core::field_io::Lgf1;
use lingrad_core::gallery::{
    build_bad_f0, by_name, rof_ball_counterexample, t3_counterexample, GalleryCase, CASE_NAMES,
};
use lingrad_core::geometry::{
    build_domain, curvature_condition_margin, generalized_mean_curvature,
};
use lingrad_core::solver::{boundary_datum_mass, solve, trace_error, SolveResult, SolverConfig};

use crate::error::{CliError, CliResult};
use crate::io::{read_dual, read_field, read_lgf1, write_atomic, write_dual, write_field};
use crate::report::Report;
use crate::specfile::{load_spec, DEFAULT_NX};

/// Residual tolerance for certificates of discrete solutions.
pub const GRID_TOL: f64 = 1e-4;
/// Mismatch `|u − u₀|` below `GRID_TIE·(1 + ‖u₀‖∞)` counts as attained.
pub const GRID_TIE: f64 = 1e-4;
/// Residual tolerance for closed-form gallery certificates.
pub const ANALYTIC_TOL: f64 = 1e-8;
/// Gap tolerance of gallery grid solves.
pub const GALLERY_GAP_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    CertificateFailed,
}

impl Outcome {
    pub fn exit_code(self) -> u8 {
        match self {
            Outcome::Success => 0,
            Outcome::CertificateFailed => 2,
        }
    }
}

fn emit(out: &mut dyn Write, report: &Report, path: Option<&Path>) -> CliResult<()> {
    out.write_all(report.to_text().as_bytes())
        .map_err(|e| CliError::io("<stdout>", e))?;
    if let Some(p) = path {
        write_atomic(p, report.to_json().as_bytes())?;
    }
    Ok(())
}

fn grid_tolerances(spec: &ProblemSpec, tol: f64, tie: f64) -> Tolerances {
    let mut t = Tolerances::uniform(tol);
    t.tie = tie * (1.0 + spec.max_abs_u0());
    t
}

/// Least-gradient for scalar TV without lower-order terms, vector for
/// `n > 1`, scalar otherwise.
pub fn default_kind(spec: &ProblemSpec) -> CertificateKind {
    let dom = &spec.domain;
    let pure = dom
        .cells()
        .iter()
        .all(|&c| spec.g.get(0, c) == 0.0 && spec.lambda.get(0, c) == 0.0);
    if spec.n() > 1 {
        CertificateKind::Vector
    } else if spec.integrand.name() == "tv" && pure {
        CertificateKind::LeastGradient
    } else {
        CertificateKind::Scalar
    }
}

fn solve_summary(
    report: &mut Report,
    prefix: &str,
    spec: &ProblemSpec,
    r: &SolveResult,
) -> CliResult<()> {
    report.push(format!("{prefix}nx"), spec.domain.nx());
    report.push(format!("{prefix}iterations"), r.iterations);
    report.push(format!("{prefix}converged"), r.converged);
    report.push_f64(format!("{prefix}energy"), r.gap.primal);
    report.push_f64(format!("{prefix}dual"), r.gap.dual);
    report.push_f64(format!("{prefix}gap"), r.gap.gap);
    report.push_f64(format!("{prefix}relative_gap"), r.gap.relative);
    report.push_f64(format!("{prefix}trace_error"), trace_error(spec, &r.u)?);
    report.push_f64(format!("{prefix}datum_mass"), boundary_datum_mass(spec));
    report.push_f64(format!("{prefix}max_abs_u"), r.u.max_abs(&spec.domain));
    Ok(())
}

pub struct SolveArgs {
    pub spec: PathBuf,
    pub nx: Option<usize>,
    pub max_iters: Option<usize>,
    pub gap_tol: Option<f64>,
    pub out: PathBuf,
    pub dual_out: Option<PathBuf>,
    pub history: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

pub fn run_solve(a: &SolveArgs, out: &mut dyn Write) -> CliResult<Outcome> {
    let file = load_spec(&a.spec)?;
    let nx = a.nx.or(file.nx()).unwrap_or(DEFAULT_NX);
    let spec = file.build(nx)?;
    let mut cfg: SolverConfig = file.solver_config();
    if let Some(v) = a.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = a.gap_tol {
        cfg.gap_tol = v;
    }
    let r = solve(&spec, &cfg)?;
    write_field(&a.out, &r.u)?;
    if let Some(p) = &a.dual_out {
        write_dual(p, &r.z, &spec.domain)?;
    }
    if let Some(p) = &a.history {
        write_atomic(p, r.history_csv().as_bytes())?;
    }
    let mut report = Report::new();
    report.push("integrand", file.integrand_name());
    solve_summary(&mut report, "", &spec, &r)?;
    emit(out, &report, a.report.as_deref())?;
    if !r.converged {
        eprintln!(
            "warning: gap tolerance {} not reached in {} iterations",
            cfg.gap_tol, r.iterations
        );
    }
    Ok(Outcome::Success)
}

pub struct CertifyArgs {
    pub spec: PathBuf,
    pub u: PathBuf,
    pub z: PathBuf,
    pub report: Option<PathBuf>,
    pub tol: f64,
    pub tie: f64,
    pub kind: Option<CertificateKind>,
}

/// The problem file built at the resolution of a stored field.
fn spec_for_field(spec_path: &Path, u: &Field) -> CliResult<ProblemSpec> {
    let file = load_spec(spec_path)?;
    let spec = file.build(u.nx())?;
    if u.channels() != spec.n() {
        return Err(CliError::Usage(format!(
            "field has {} channels, the integrand needs {}",
            u.channels(),
            spec.n()
        )));
    }
    u.check_compatible(&spec.domain)?;
    Ok(spec)
}

pub fn run_certify(a: &CertifyArgs, out: &mut dyn Write) -> CliResult<Outcome> {
    let u = read_field(&a.u)?;
    let spec = spec_for_field(&a.spec, &u)?;
    let z = read_dual(&a.z, &spec.domain)?;
    let kind = a.kind.unwrap_or_else(|| default_kind(&spec));
    let samples = SampleSet::from_grid(&spec, &u, &z)?;
    let cert = evaluate(
        &spec.integrand,
        &samples,
        kind,
        &grid_tolerances(&spec, a.tol, a.tie),
    )?;
    let mut report = Report::new();
    report.push_certificate("", &cert);
    emit(out, &report, a.report.as_deref())?;
    Ok(if cert.overall_pass {
        Outcome::Success
    } else {
        Outcome::CertificateFailed
    })
}

pub fn run_energy(spec_path: &Path, u_path: &Path, out: &mut dyn Write) -> CliResult<Outcome> {
    let u = read_field(u_path)?;
    let spec = spec_for_field(spec_path, &u)?;
    let parts = energy_parts(&spec, &u)?;
    let mut report = Report::new();
    report.push_f64("bulk", parts.bulk);
    report.push_f64("boundary", parts.boundary);
    report.push_f64("lower_order", parts.lower_order);
    report.push_f64("total", parts.total());
    report.push_f64("trace_error", trace_error(&spec, &u)?);
    emit(out, &report, None)?;
    Ok(Outcome::Success)
}

pub fn run_curvature(
    spec_path: &Path,
    nx: Option<usize>,
    csv: Option<&Path>,
    out: &mut dyn Write,
) -> CliResult<Outcome> {
    let file = load_spec(spec_path)?;
    let nx = nx.or(file.nx()).unwrap_or(DEFAULT_NX);
    let spec = file.build(nx)?;
    let dom = &spec.domain;
    let d = dom.dim();
    let g = file.g_scalar();
    let g_at = |x: &[f64]| g.as_ref().map(|e| e.eval(x)).unwrap_or(0.0);
    let margins = curvature_condition_margin(&spec.integrand, &g_at, dom, 0.0)?;
    let mut text = String::from("x,y,component,curvature,margin\n");
    let mut per_component = vec![(f64::INFINITY, f64::NEG_INFINITY); dom.n_components()];
    for (face, margin) in dom.boundary_faces().iter().zip(&margins) {
        let hf = generalized_mean_curvature(&spec.integrand, dom, &face.point[..d])?;
        let e = &mut per_component[face.component];
        e.0 = e.0.min(hf);
        e.1 = e.1.max(hf);
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            face.point[0], face.point[1], face.component, hf, margin
        ));
    }
    if let Some(p) = csv {
        write_atomic(p, text.as_bytes())?;
    }
    let mut report = Report::new();
    report.push("nx", nx);
    report.push("faces", margins.len());
    for (c, (lo, hi)) in per_component.iter().enumerate() {
        report.push_f64(format!("component{c}.min_curvature"), *lo);
        report.push_f64(format!("component{c}.max_curvature"), *hi);
    }
    let min_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
    report.push_f64("min_margin", min_margin);
    report.push("curvature_condition", min_margin >= 0.0);
    emit(out, &report, None)?;
    Ok(Outcome::Success)
}

pub fn run_convert(input: &Path, output: &Path, spec_path: Option<&Path>) -> CliResult<Outcome> {
    let raw: Lgf1 = read_lgf1(input)?;
    let text = match spec_path {
        Some(sp) => {
            let file = load_spec(sp)?;
            let domain = build_domain(file.shape().clone(), raw.nx)?;
            let field = Field::from_lgf1(raw)?;
            field.to_csv(&domain)?
        }
        None => {
            let mut s = String::from("i,j,channel,value\n");
            for ch in 0..raw.channels {
                for i in 0..raw.nx {
                    for j in 0..raw.ny {
                        let v = raw.data[(ch * raw.nx + i) * raw.ny + j];
                        s.push_str(&format!("{i},{j},{ch},{v}\n"));
                    }
                }
            }
            s
        }
    };
    write_atomic(output, text.as_bytes())?;
    Ok(Outcome::Success)
}

pub fn run_gallery_list(out: &mut dyn Write) -> CliResult<Outcome> {
    for name in CASE_NAMES {
        let case = by_name(name)?;
        writeln!(out, "{name}: {}", case.summary).map_err(|e| CliError::io("<stdout>", e))?;
    }
    Ok(Outcome::Success)
}

pub struct GalleryRunArgs {
    pub name: String,
    pub nx: Option<usize>,
    pub report: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub dual_out: Option<PathBuf>,
    pub eps: Option<f64>,
    pub t: Option<f64>,
}

fn gallery_case(a: &GalleryRunArgs) -> CliResult<GalleryCase> {
    Ok(match (a.name.as_str(), a.eps, a.t) {
        ("t3_counterexample", Some(eps), _) => t3_counterexample(&build_bad_f0(eps)?)?,
        ("rof_ball", _, Some(t)) => rof_ball_counterexample(t)?,
        (name, None, None) => by_name(name)?,
        (name, _, _) => {
            return Err(CliError::Usage(format!(
                "--eps applies to t3_counterexample and --t to rof_ball, not {name}"
            )))
        }
    })
}

fn grid_certificate(
    case: &GalleryCase,
    spec: &ProblemSpec,
    r: &SolveResult,
) -> CliResult<CertificateReport> {
    let samples = SampleSet::from_grid(spec, &r.u, &r.z)?;
    Ok(evaluate(
        &spec.integrand,
        &samples,
        case.kind,
        &grid_tolerances(spec, GRID_TOL, GRID_TIE),
    )?)
}

pub fn run_gallery(a: &GalleryRunArgs, out: &mut dyn Write) -> CliResult<Outcome> {
    let case = gallery_case(a)?;
    let mut report = Report::new();
    report.push("case", case.name);
    report.push("kind", case.kind.to_string());
    if let Some(v) = case.expected.attains_trace {
        report.push("expected.attains_trace", v);
    }
    if let Some(e) = case.expected.energy {
        report.push_f64("expected.energy", e);
        report.push("expected.energy_source", case.expected.energy_source);
    }
    let mut pass = true;
    if case.pair.is_some() {
        let cert = case.verify_reference(&Tolerances::uniform(ANALYTIC_TOL))?;
        pass &= cert.overall_pass;
        report.push_certificate("analytic.", &cert);
    }
    let nx = match (a.nx, case.pair.is_some()) {
        (Some(n), _) => Some(n),
        (None, false) => Some(case.default_nx),
        (None, true) => None,
    };
    if let Some(nx) = nx {
        let spec = case.spec(nx)?;
        let cfg = SolverConfig {
            gap_tol: GALLERY_GAP_TOL,
            max_iters: 100_000,
            ..SolverConfig::default()
        };
        let r = solve(&spec, &cfg)?;
        solve_summary(&mut report, "grid.", &spec, &r)?;
        if let Some(e) = case.expected.energy {
            report.push_f64("grid.energy_rel_error", (r.gap.primal - e).abs() / e.abs());
        }
        let cert = grid_certificate(&case, &spec, &r)?;
        pass &= cert.overall_pass;
        report.push_certificate("grid.", &cert);
        if let Some(p) = &a.out {
            write_field(p, &r.u)?;
        }
        if let Some(p) = &a.dual_out {
            write_dual(p, &r.z, &spec.domain)?;
        }
    } else if a.out.is_some() || a.dual_out.is_some() {
        return Err(CliError::Usage(
            "--out and --dual-out need a grid solve; pass --nx".into(),
        ));
    }
    report.push("certificate_pass", pass);
    emit(out, &report, a.report.as_deref())?;
    Ok(if pass {
        Outcome::Success
    } else {
        Outcome::CertificateFailed
    })
}
