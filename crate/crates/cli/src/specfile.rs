//! TOML problem-spec files.
//!
//! ```toml
//! [domain]
//! shape = "annulus"      # disk | annulus | rectangle | interval
//! r_in = 0.5
//! r_out = 1.0
//! nx = 128
//!
//! [integrand]
//! name = "tv"            # tv | area | hencky | weighted_tv:<expr> | vector_tv:<n> | bad_f0:<eps>
//!
//! [data]
//! u0 = "4/(3*r) - 4/3"   # expression, number, "file:<path.lgf>", or an array per channel
//! h = "4/(3*r) - 4/3"
//! lambda = 1
//!
//! [solver]
//! gap_tol = 1e-6
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use lingrad_core::convex::{
    make_area, make_hencky, make_tv, make_vector_tv, make_weighted_tv, Integrand, SpatialFn,
};
use lingrad_core::energy::{Field, ProblemSpec};
use lingrad_core::field_io::Lgf1;
use lingrad_core::gallery::{bad_f0_integrand, build_bad_f0};
use lingrad_core::geometry::{build_domain, GridDomain, Shape};
use lingrad_core::solver::SolverConfig;
use serde::Deserialize;
use toml::Spanned;

use crate::error::{CliError, CliResult};
use crate::expr::Expr;

/// Resolution used when neither the file nor the command line sets one.
pub const DEFAULT_NX: usize = 64;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    domain: DomainSection,
    integrand: IntegrandSection,
    #[serde(default)]
    data: DataSection,
    #[serde(default)]
    solver: SolverSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainSection {
    shape: Spanned<String>,
    r: Option<f64>,
    r_in: Option<f64>,
    r_out: Option<f64>,
    x0: Option<f64>,
    x1: Option<f64>,
    y0: Option<f64>,
    y1: Option<f64>,
    a: Option<f64>,
    b: Option<f64>,
    nx: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntegrandSection {
    name: Spanned<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DataSection {
    u0: Option<Spanned<toml::Value>>,
    g: Option<Spanned<toml::Value>>,
    h: Option<Spanned<toml::Value>>,
    lambda: Option<Spanned<toml::Value>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    max_iters: Option<usize>,
    gap_tol: Option<f64>,
    tau: Option<f64>,
    sigma: Option<f64>,
    theta: Option<f64>,
    check_every: Option<usize>,
    restart: Option<bool>,
    boundary_dualized: Option<bool>,
    enforce_step_bound: Option<bool>,
}

/// One channel of a data entry.
#[derive(Clone, Debug)]
enum Source {
    Expr(Expr),
    File(PathBuf),
}

/// A data entry: one source per channel, or one broadcast to all.
#[derive(Clone, Debug)]
struct DataEntry {
    channels: Vec<Source>,
}

impl DataEntry {
    fn constant(v: f64) -> Self {
        Self {
            channels: vec![Source::Expr(Expr::parse(&format!("{v:e}")).unwrap())],
        }
    }
}

/// A parsed spec file.
#[derive(Clone, Debug)]
pub struct SpecFile {
    path: PathBuf,
    shape: Shape,
    nx: Option<usize>,
    integrand_name: String,
    weight: Option<Expr>,
    u0: DataEntry,
    g: DataEntry,
    h: DataEntry,
    lambda: DataEntry,
    solver: SolverConfig,
}

/// 1-based line and column of byte `offset` in `text`.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before
        .rsplit('\n')
        .next()
        .map(|s| s.chars().count())
        .unwrap_or(0)
        + 1;
    (line, col)
}

pub fn load_spec(path: &Path) -> CliResult<SpecFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_spec(&text, path)
}

/// Parse spec text; `path` locates messages and relative file references.
pub fn parse_spec(text: &str, path: &Path) -> CliResult<SpecFile> {
    let spec_err = |offset: Option<usize>, message: String| {
        let (line, column) = match offset {
            Some(o) => {
                let (l, c) = line_col(text, o);
                (Some(l), Some(c))
            }
            None => (None, None),
        };
        CliError::Spec {
            path: path.to_path_buf(),
            line,
            column,
            message,
        }
    };
    let raw: RawSpec = toml::from_str(text)
        .map_err(|e| spec_err(e.span().map(|s| s.start), e.message().to_string()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();

    let dom = &raw.domain;
    let need = |v: Option<f64>, key: &str| {
        v.ok_or_else(|| {
            spec_err(
                Some(dom.shape.span().start),
                format!("shape '{}' needs [domain].{key}", dom.shape.get_ref()),
            )
        })
    };
    let shape = match dom.shape.get_ref().as_str() {
        "disk" => Shape::Disk {
            r: dom.r.unwrap_or(1.0),
        },
        "annulus" => Shape::Annulus {
            r_in: need(dom.r_in, "r_in")?,
            r_out: need(dom.r_out, "r_out")?,
        },
        "rectangle" => Shape::Rectangle {
            x0: need(dom.x0, "x0")?,
            x1: need(dom.x1, "x1")?,
            y0: need(dom.y0, "y0")?,
            y1: need(dom.y1, "y1")?,
        },
        "interval" => Shape::Interval {
            a: dom.a.unwrap_or(0.0),
            b: dom.b.unwrap_or(1.0),
        },
        other => {
            return Err(spec_err(
                Some(dom.shape.span().start),
                format!("unknown shape '{other}'; expected disk, annulus, rectangle or interval"),
            ))
        }
    };
    shape
        .validate()
        .map_err(|e| spec_err(Some(dom.shape.span().start), e.to_string()))?;

    // Columns inside a string are offset by the opening quote.
    let expr_at = |src: &str, offset: usize| {
        Expr::parse(src).map_err(|e| {
            spec_err(
                Some(offset + 1 + e.column - 1),
                format!("in expression '{src}': {}", e.message),
            )
        })
    };

    let name = raw.integrand.name.get_ref().trim().to_string();
    let name_offset = raw.integrand.name.span().start;
    let weight = match name.strip_prefix("weighted_tv:") {
        Some(w) => Some(expr_at(w, name_offset + "weighted_tv:".len())?),
        None => None,
    };

    let entry = |value: &Option<Spanned<toml::Value>>,
                 key: &str,
                 default: f64|
     -> CliResult<DataEntry> {
        let Some(v) = value else {
            return Ok(DataEntry::constant(default));
        };
        let offset = v.span().start;
        let one = |item: &toml::Value| -> CliResult<Source> {
            match item {
                toml::Value::String(s) => match s.strip_prefix("file:") {
                    Some(p) => Ok(Source::File(base.join(p))),
                    None => Ok(Source::Expr(expr_at(s, offset)?)),
                },
                toml::Value::Integer(i) => Ok(Source::Expr(Expr::parse(&i.to_string()).unwrap())),
                toml::Value::Float(f) => Ok(Source::Expr(Expr::parse(&format!("{f:e}")).unwrap())),
                other => Err(spec_err(
                    Some(offset),
                    format!(
                        "[data].{key} must be an expression, a number or a file reference, got {}",
                        other.type_str()
                    ),
                )),
            }
        };
        let channels = match v.get_ref() {
            toml::Value::Array(items) if !items.is_empty() => {
                items.iter().map(one).collect::<CliResult<Vec<_>>>()?
            }
            toml::Value::Array(_) => {
                return Err(spec_err(
                    Some(offset),
                    format!("[data].{key} is an empty array"),
                ))
            }
            item => vec![one(item)?],
        };
        Ok(DataEntry { channels })
    };

    let s = &raw.solver;
    let mut solver = SolverConfig::default();
    if let Some(v) = s.max_iters {
        solver.max_iters = v;
    }
    if let Some(v) = s.gap_tol {
        solver.gap_tol = v;
    }
    solver.tau = s.tau.or(solver.tau);
    solver.sigma = s.sigma.or(solver.sigma);
    if let Some(v) = s.theta {
        solver.theta = v;
    }
    if let Some(v) = s.check_every {
        solver.check_every = v;
    }
    if let Some(v) = s.restart {
        solver.restart = v;
    }
    if let Some(v) = s.boundary_dualized {
        solver.boundary_dualized = v;
    }
    if let Some(v) = s.enforce_step_bound {
        solver.enforce_step_bound = v;
    }

    let spec = SpecFile {
        path: path.to_path_buf(),
        shape,
        nx: dom.nx,
        integrand_name: name,
        weight,
        u0: entry(&raw.data.u0, "u0", 0.0)?,
        g: entry(&raw.data.g, "g", 0.0)?,
        h: entry(&raw.data.h, "h", 0.0)?,
        lambda: entry(&raw.data.lambda, "lambda", 0.0)?,
        solver,
    };
    if spec.lambda.channels.len() != 1 {
        return Err(spec_err(
            raw.data.lambda.as_ref().map(|v| v.span().start),
            "[data].lambda must be a single scalar".into(),
        ));
    }
    // Fail on bad integrand names at load time, not first use.
    spec.integrand()
        .map_err(|e| spec_err(Some(name_offset), e.to_string()))?;
    Ok(spec)
}

impl SpecFile {
    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Resolution from the file, if set.
    pub fn nx(&self) -> Option<usize> {
        self.nx
    }

    pub fn solver_config(&self) -> SolverConfig {
        self.solver.clone()
    }

    pub fn integrand_name(&self) -> &str {
        &self.integrand_name
    }

    pub fn integrand(&self) -> CliResult<Integrand> {
        let d = self.shape.dim();
        let name = self.integrand_name.as_str();
        let f = if let Some(w) = &self.weight {
            let (lo, hi) = self.weight_range(w)?;
            let w = w.clone();
            let weight: SpatialFn = Arc::new(move |x| w.eval(x));
            make_weighted_tv(weight, lo, hi, d)?
        } else if let Some(n) = name.strip_prefix("vector_tv:") {
            let n: usize = n.trim().parse().map_err(|_| {
                CliError::Usage(format!("vector_tv needs a channel count, got '{n}'"))
            })?;
            make_vector_tv(n, d)?
        } else if let Some(eps) = name.strip_prefix("bad_f0:") {
            let eps: f64 = eps
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad_f0 needs a numeric eps, got '{eps}'")))?;
            if d != 2 {
                return Err(CliError::Usage(
                    "bad_f0 needs a two-dimensional domain".into(),
                ));
            }
            bad_f0_integrand(&build_bad_f0(eps)?)?
        } else {
            match name {
                "tv" => make_tv(1, d)?,
                "area" => make_area(d)?,
                "hencky" => make_hencky(d)?,
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown integrand '{other}'; expected tv, area, hencky, weighted_tv:<expr>, vector_tv:<n> or bad_f0:<eps>"
                    )))
                }
            }
        };
        Ok(f)
    }

    /// Sampled bounds of a weight over the shape's bounding box.
    fn weight_range(&self, w: &Expr) -> CliResult<(f64, f64)> {
        let (x0, x1, y0, y1) = self.shape.bounds();
        let (kx, ky) = if self.shape.dim() == 1 {
            (4097, 1)
        } else {
            (257, 257)
        };
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..kx {
            for j in 0..ky {
                let x = x0 + (x1 - x0) * i as f64 / (kx - 1) as f64;
                let y = if ky == 1 {
                    0.0
                } else {
                    y0 + (y1 - y0) * j as f64 / (ky - 1) as f64
                };
                let p = [x, y];
                let p = &p[..self.shape.dim()];
                if self.shape.signed_distance(p) > 0.0 {
                    continue;
                }
                let v = w.eval(p);
                if !(v.is_finite() && v > 0.0) {
                    return Err(CliError::Usage(format!(
                        "weight '{}' is not positive at {p:?}: {v}",
                        w.source()
                    )));
                }
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        Ok((lo, hi))
    }

    /// The grid problem at resolution `nx`.
    pub fn build(&self, nx: usize) -> CliResult<ProblemSpec> {
        let integrand = self.integrand()?;
        let n = integrand.n_rows();
        let domain = build_domain(self.shape.clone(), nx)?;
        let g = self.cell_field(&self.g, "g", &domain, n)?;
        let h = self.cell_field(&self.h, "h", &domain, n)?;
        let lambda = self.cell_field(&self.lambda, "lambda", &domain, 1)?;
        let u0 = self.boundary_values(&domain, n)?;
        Ok(ProblemSpec::new(integrand, domain, u0, g, h, lambda)?)
    }

    fn broadcast<'a>(
        &self,
        entry: &'a DataEntry,
        key: &str,
        n: usize,
    ) -> CliResult<Vec<&'a Source>> {
        match entry.channels.len() {
            1 => Ok(vec![&entry.channels[0]; n]),
            k if k == n => Ok(entry.channels.iter().collect()),
            k => Err(CliError::Spec {
                path: self.path.clone(),
                line: None,
                column: None,
                message: format!("[data].{key} has {k} channels, the integrand needs {n}"),
            }),
        }
    }

    fn read_channel(&self, path: &Path, domain: &GridDomain) -> CliResult<Field> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let field = Field::from_lgf1(Lgf1::from_bytes(&bytes)?)?;
        if field.channels() != 1 {
            return Err(CliError::io(
                path,
                format!(
                    "expected a one-channel field, found {} channels",
                    field.channels()
                ),
            ));
        }
        field.check_compatible(domain)?;
        Ok(field)
    }

    fn cell_field(
        &self,
        entry: &DataEntry,
        key: &str,
        domain: &GridDomain,
        n: usize,
    ) -> CliResult<Field> {
        let sources = self.broadcast(entry, key, n)?;
        let d = domain.dim();
        let mut out = Field::zeros(domain, n);
        for (ch, src) in sources.into_iter().enumerate() {
            match src {
                Source::Expr(e) => {
                    for &c in domain.cells() {
                        out.set(ch, c, e.eval(&domain.center(c)[..d]));
                    }
                }
                Source::File(p) => {
                    let f = self.read_channel(p, domain)?;
                    for &c in domain.cells() {
                        out.set(ch, c, f.get(0, c));
                    }
                }
            }
        }
        Ok(out)
    }

    /// `u₀` at boundary points; file-backed channels use the adjacent cell.
    fn boundary_values(&self, domain: &GridDomain, n: usize) -> CliResult<Vec<f64>> {
        let sources = self.broadcast(&self.u0, "u0", n)?;
        let d = domain.dim();
        let faces = domain.boundary_faces();
        let mut out = vec![0.0; n * faces.len()];
        for (ch, src) in sources.into_iter().enumerate() {
            match src {
                Source::Expr(e) => {
                    for (b, face) in faces.iter().enumerate() {
                        out[b * n + ch] = e.eval(&face.point[..d]);
                    }
                }
                Source::File(p) => {
                    let f = self.read_channel(p, domain)?;
                    for (b, face) in faces.iter().enumerate() {
                        out[b * n + ch] = f.get(0, face.cell);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Scalar `g` as a point function, for curvature margins.
    pub fn g_scalar(&self) -> Option<Expr> {
        match self.g.channels.as_slice() {
            [Source::Expr(e)] => Some(e.clone()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> CliResult<SpecFile> {
        parse_spec(text, Path::new("test.toml"))
    }

    #[test]
    fn minimal_disk_spec_defaults_lambda_to_zero() {
        let s =
            parse("[domain]\nshape = \"disk\"\n[integrand]\nname = \"tv\"\n[data]\nu0 = \"0\"\n")
                .unwrap();
        let p = s.build(32).unwrap();
        assert!(p.domain.cells().iter().all(|&c| p.lambda.get(0, c) == 0.0));
        assert!(p.u0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn misspelled_key_is_named() {
        let e =
            parse("[domain]\nshape = \"disk\"\n[integrand]\nname = \"tv\"\n[data]\nlamda = 1\n")
                .unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("lamda"), "{msg}");
        assert!(msg.starts_with("test.toml:6:1"), "{msg}");
    }

    #[test]
    fn expression_errors_point_into_the_file() {
        let e = parse(
            "[domain]\nshape = \"disk\"\n[integrand]\nname = \"tv\"\n[data]\nu0 = \"1 + foo\"\n",
        )
        .unwrap_err();
        let msg = e.to_string();
        assert!(msg.starts_with("test.toml:6:11"), "{msg}");
        assert!(msg.contains("foo"));
    }

    #[test]
    fn unknown_integrand_and_shape() {
        let e = parse("[domain]\nshape = \"disk\"\n[integrand]\nname = \"tvv\"\n").unwrap_err();
        assert!(e.to_string().contains("unknown integrand"), "{e}");
        let e = parse("[domain]\nshape = \"square\"\n[integrand]\nname = \"tv\"\n").unwrap_err();
        assert!(e.to_string().contains("unknown shape"), "{e}");
        let e = parse("[domain]\nshape = \"annulus\"\nr_in = 1\n[integrand]\nname = \"tv\"\n")
            .unwrap_err();
        assert!(e.to_string().contains("r_out"), "{e}");
    }

    #[test]
    fn weighted_and_vector_integrands() {
        let s = parse(
            "[domain]\nshape = \"interval\"\n[integrand]\nname = \"weighted_tv:2 + (x - 0.5)^2\"\n",
        )
        .unwrap();
        assert_eq!(s.integrand().unwrap().name(), "weighted_tv");
        let s = parse("[domain]\nshape = \"disk\"\n[integrand]\nname = \"vector_tv:2\"\n[data]\nu0 = [\"x\", \"y\"]\n").unwrap();
        let p = s.build(32).unwrap();
        assert_eq!(p.n(), 2);
        let s = parse("[domain]\nshape = \"disk\"\n[integrand]\nname = \"vector_tv:2\"\n[data]\nu0 = [\"x\", \"y\", \"0\"]\n").unwrap();
        assert!(s.build(32).is_err());
        let e =
            parse("[domain]\nshape = \"interval\"\n[integrand]\nname = \"weighted_tv:x - 1\"\n")
                .unwrap_err();
        assert!(e.to_string().contains("not positive"), "{e}");
    }

    #[test]
    fn solver_overrides() {
        let s = parse("[domain]\nshape = \"disk\"\n[integrand]\nname = \"tv\"\n[solver]\nmax_iters = 7\ngap_tol = 1e-3\nrestart = false\n").unwrap();
        let c = s.solver_config();
        assert_eq!((c.max_iters, c.gap_tol, c.restart), (7, 1e-3, false));
        assert!(parse(
            "[domain]\nshape = \"disk\"\n[integrand]\nname = \"tv\"\n[solver]\nmaxiters = 7\n"
        )
        .is_err());
    }
}
