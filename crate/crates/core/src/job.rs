//! Job configurations, their execution, and report emission.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebroid::{FlatAlgebroid, OrbitVerdict, SignConvention, DEFAULT_FLOW_BUDGET};
use crate::catalog;
use crate::coframe::{derive_classifying_algebroid, invariant_tower, verify_classifying_data, Coframe, DeriveOptions, TowerOptions};
use crate::error::{Error, Result};
use crate::gstruct::{
    build_gstructure_algebroid, constant_section_homomorphism_residual, inner_action, verify_g_realization,
    GRealizationCandidate, GRealizationData, GTables, SOrder,
};
use crate::liealg::{
    antisymmetrization_rank, first_prolongation, make_algebra, presets, prolongation_tower, FiniteTypeVerdict,
    MatrixLieAlgebra, Signature,
};
use crate::mcform::{mc_residual, AValuedOneForm, Connection};
use crate::realize::{fiber_matrix_algebra, realize_bundle_fiber, verify_realization_numeric, RealizationCandidate};
use crate::symexpr::{parse_expr, Chart, Expr, ZeroOptions};
use crate::verdict::ResidualReport;

/// Default absolute tolerance of symbolic zero tests.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default tolerance of numeric (finite-difference or sampled) checks.
pub const DEFAULT_NUMERIC_TOL: f64 = 1e-6;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_SAMPLES: usize = 200;
/// Environment variable overriding [`DEFAULT_TOL`].
pub const TOL_ENV: &str = "CARTAN_TOL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum JobKind {
    CheckAlgebroid,
    Prolong,
    Coframe,
    McCheck,
    Gstructure,
    VerifyRealization,
    Realize,
    Orbit,
    Isotropy,
}

impl JobKind {
    pub const ALL: [JobKind; 9] = [
        JobKind::CheckAlgebroid,
        JobKind::Prolong,
        JobKind::Coframe,
        JobKind::McCheck,
        JobKind::Gstructure,
        JobKind::VerifyRealization,
        JobKind::Realize,
        JobKind::Orbit,
        JobKind::Isotropy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            JobKind::CheckAlgebroid => "check-algebroid",
            JobKind::Prolong => "prolong",
            JobKind::Coframe => "coframe",
            JobKind::McCheck => "mc-check",
            JobKind::Gstructure => "gstructure",
            JobKind::VerifyRealization => "verify-realization",
            JobKind::Realize => "realize",
            JobKind::Orbit => "orbit",
            JobKind::Isotropy => "isotropy",
        }
    }
}

impl fmt::Display for JobKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for JobKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<JobKind> {
        JobKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown job `{s}`")))
    }
}

// ---------------------------------------------------------------- raw schema

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    tol: Option<f64>,
    samples: Option<usize>,
    #[serde(rename = "check-algebroid")]
    check_algebroid: Option<RawCheck>,
    prolong: Option<RawProlong>,
    coframe: Option<RawCoframe>,
    #[serde(rename = "mc-check")]
    mc_check: Option<RawMc>,
    gstructure: Option<RawGStructure>,
    #[serde(rename = "verify-realization")]
    verify_realization: Option<RawVerify>,
    realize: Option<RawRealize>,
    orbit: Option<RawOrbit>,
    isotropy: Option<RawIsotropy>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChart {
    coords: Vec<String>,
    bounds: Vec<[f64; 2]>,
    #[serde(default)]
    guards: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CEntry {
    k: usize,
    i: usize,
    j: usize,
    value: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FEntry {
    a: usize,
    i: usize,
    value: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GammaEntry {
    k: usize,
    a: usize,
    j: usize,
    value: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BEntry {
    gamma: usize,
    i: usize,
    j: usize,
    value: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SEntry {
    gamma: usize,
    j: usize,
    alpha: usize,
    value: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhiEntry {
    a: usize,
    alpha: usize,
    value: String,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgebroid {
    preset: Option<String>,
    chart: Option<RawChart>,
    rank: Option<usize>,
    convention: Option<String>,
    #[serde(default, rename = "C")]
    c: Vec<CEntry>,
    #[serde(default, rename = "F")]
    f: Vec<FEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoframeData {
    chart: RawChart,
    theta: Vec<Vec<String>>,
    h: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCheck {
    #[serde(flatten)]
    algebroid: RawAlgebroid,
    isotropy_points: Option<Vec<Vec<f64>>>,
    realization: Option<RawCoframeData>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawGroup {
    Name(String),
    Matrices(Vec<Vec<Vec<f64>>>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProlong {
    group: RawGroup,
    max_k: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoframe {
    chart: RawChart,
    theta: Vec<Vec<String>>,
    s_max: Option<usize>,
    grid: Option<usize>,
    names: Option<Vec<String>>,
    generators: Option<Vec<String>>,
    inverse: Option<BTreeMap<String, String>>,
    bounds: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawForm {
    chart: RawChart,
    h: Vec<String>,
    eta: Vec<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConnection {
    #[serde(default)]
    gamma: Vec<GammaEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMc {
    algebroid: RawAlgebroid,
    form: RawForm,
    #[serde(default)]
    connections: Vec<RawConnection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCandidate {
    chart: RawChart,
    omega: Vec<Vec<String>>,
    phi: Vec<Vec<String>>,
    h: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGStructure {
    preset: Option<String>,
    group: Option<RawGroup>,
    chart: Option<RawChart>,
    #[serde(default)]
    c: Vec<CEntry>,
    #[serde(default)]
    b: Vec<BEntry>,
    #[serde(default, rename = "S")]
    s: Vec<SEntry>,
    #[serde(default, rename = "Theta")]
    theta: Vec<FEntry>,
    #[serde(default, rename = "Phi")]
    phi: Vec<PhiEntry>,
    s_order: Option<String>,
    convention: Option<String>,
    points: Option<usize>,
    numeric_tol: Option<f64>,
    symbolic: Option<bool>,
    candidate: Option<RawCandidate>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    algebroid: RawAlgebroid,
    realization: RawCoframeData,
    samples: Option<usize>,
    numeric_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRealize {
    #[serde(default)]
    algebroid: RawAlgebroid,
    point: Option<Vec<f64>>,
    #[serde(rename = "box")]
    half_width: Option<f64>,
    grid: Option<usize>,
    numeric_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOrbit {
    algebroid: RawAlgebroid,
    x: Vec<f64>,
    y: Vec<f64>,
    budget: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIsotropy {
    algebroid: RawAlgebroid,
    points: Vec<Vec<f64>>,
}

// ---------------------------------------------------------------- validated

/// Sign convention requested for an algebroid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConventionChoice {
    Fixed(SignConvention),
    /// Try every convention numerically and keep the one that certifies.
    Scan,
}

#[derive(Debug, Clone)]
pub struct AlgebroidSpec {
    pub algebroid: FlatAlgebroid,
    pub convention: ConventionChoice,
    pub preset: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CoframeData {
    pub coframe: Coframe,
    pub h: Vec<Expr>,
}

#[derive(Debug, Clone)]
pub enum Job {
    CheckAlgebroid {
        algebroid: AlgebroidSpec,
        isotropy_points: Vec<Vec<f64>>,
        realization: Option<CoframeData>,
    },
    Prolong {
        g: MatrixLieAlgebra,
        label: String,
        max_k: usize,
    },
    Coframe {
        coframe: Coframe,
        tower: TowerOptions,
        derive: DeriveOptions,
    },
    McCheck {
        algebroid: AlgebroidSpec,
        form: AValuedOneForm,
        connections: Vec<Connection>,
    },
    Gstructure {
        data: GRealizationData,
        label: String,
        convention: ConventionChoice,
        points: usize,
        numeric_tol: f64,
        symbolic: bool,
        candidate: Option<GRealizationCandidate>,
    },
    VerifyRealization {
        algebroid: AlgebroidSpec,
        realization: CoframeData,
        samples: usize,
        numeric_tol: f64,
    },
    Realize {
        algebroid: AlgebroidSpec,
        point: Vec<f64>,
        half_width: f64,
        grid: usize,
        numeric_tol: f64,
    },
    Orbit {
        algebroid: AlgebroidSpec,
        x: Vec<f64>,
        y: Vec<f64>,
        budget: usize,
    },
    Isotropy {
        algebroid: AlgebroidSpec,
        points: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone)]
pub struct JobConfig {
    pub seed: u64,
    pub tol: f64,
    pub samples: usize,
    pub warnings: Vec<String>,
    pub job: Job,
}

impl JobConfig {
    pub fn kind(&self) -> JobKind {
        match self.job {
            Job::CheckAlgebroid { .. } => JobKind::CheckAlgebroid,
            Job::Prolong { .. } => JobKind::Prolong,
            Job::Coframe { .. } => JobKind::Coframe,
            Job::McCheck { .. } => JobKind::McCheck,
            Job::Gstructure { .. } => JobKind::Gstructure,
            Job::VerifyRealization { .. } => JobKind::VerifyRealization,
            Job::Realize { .. } => JobKind::Realize,
            Job::Orbit { .. } => JobKind::Orbit,
            Job::Isotropy { .. } => JobKind::Isotropy,
        }
    }

    fn zero_options(&self) -> ZeroOptions {
        ZeroOptions {
            samples: self.samples,
            abs_tol: self.tol,
            seed: self.seed,
        }
    }

    /// A `realize` job on the constant-curvature algebroid.
    pub fn default_realize() -> JobConfig {
        JobConfig {
            seed: DEFAULT_SEED,
            tol: default_tol(),
            samples: DEFAULT_SAMPLES,
            warnings: Vec::new(),
            job: Job::Realize {
                algebroid: AlgebroidSpec {
                    algebroid: catalog::constant_curvature(),
                    convention: ConventionChoice::Fixed(SignConvention::default()),
                    preset: Some("constant-curvature".into()),
                },
                point: vec![1.0],
                half_width: crate::realize::DEFAULT_HALF_WIDTH,
                grid: 5,
                numeric_tol: DEFAULT_NUMERIC_TOL,
            },
        }
    }

    /// Sets the sample count of a `verify-realization` job.
    pub fn set_samples(&mut self, n: usize) -> Result<()> {
        match &mut self.job {
            Job::VerifyRealization { samples, .. } => {
                *samples = n;
                Ok(())
            }
            _ => Err(Error::Config("--samples applies to verify-realization".into())),
        }
    }

    /// Sets the base point of a `realize` job from `name=value` pairs.
    pub fn set_fiber(&mut self, assignments: &[(String, f64)]) -> Result<()> {
        let Job::Realize { algebroid, point, .. } = &mut self.job else {
            return Err(Error::Config("--fiber applies to realize".into()));
        };
        for (name, v) in assignments {
            let i = algebroid
                .algebroid
                .chart()
                .index_of(name)
                .ok_or_else(|| Error::Config(format!("--fiber: `{name}` is not a coordinate of the algebroid")))?;
            point[i] = *v;
        }
        Ok(())
    }

    pub fn set_box(&mut self, w: f64) -> Result<()> {
        match &mut self.job {
            Job::Realize { half_width, .. } if w > 0.0 => {
                *half_width = w;
                Ok(())
            }
            Job::Realize { .. } => Err(Error::Config("--box must be positive".into())),
            _ => Err(Error::Config("--box applies to realize".into())),
        }
    }
}

/// The absolute tolerance from `CARTAN_TOL`, or [`DEFAULT_TOL`].
pub fn default_tol() -> f64 {
    std::env::var(TOL_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<f64>().ok())
        .filter(|t| *t > 0.0)
        .unwrap_or(DEFAULT_TOL)
}

/// Parses `k=1,x=0.5` style assignments.
pub fn parse_assignments(s: &str) -> Result<Vec<(String, f64)>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (name, v) = p
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected name=value, got `{p}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("`{}` is not a number", v.trim())))?;
            Ok((name.trim().to_string(), v))
        })
        .collect()
}

pub fn load_config(path: &Path, expected: Option<JobKind>) -> Result<JobConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text, expected)
}

pub fn parse_config(text: &str, expected: Option<JobKind>) -> Result<JobConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
    let mut ld = Loader::default();
    let present: Vec<JobKind> = [
        (raw.check_algebroid.is_some(), JobKind::CheckAlgebroid),
        (raw.prolong.is_some(), JobKind::Prolong),
        (raw.coframe.is_some(), JobKind::Coframe),
        (raw.mc_check.is_some(), JobKind::McCheck),
        (raw.gstructure.is_some(), JobKind::Gstructure),
        (raw.verify_realization.is_some(), JobKind::VerifyRealization),
        (raw.realize.is_some(), JobKind::Realize),
        (raw.orbit.is_some(), JobKind::Orbit),
        (raw.isotropy.is_some(), JobKind::Isotropy),
    ]
    .into_iter()
    .filter_map(|(p, k)| p.then_some(k))
    .collect();
    let kind = match present.as_slice() {
        [k] => *k,
        [] => return Err(Error::Config("no job block: expected exactly one of the job tables".into())),
        many => {
            let names: Vec<_> = many.iter().map(|k| k.name()).collect();
            return Err(Error::Config(format!("expected exactly one job block, found {}", names.join(", "))));
        }
    };
    if let Some(e) = expected {
        if e != kind {
            return Err(Error::Config(format!("command `{e}` given a `{kind}` configuration")));
        }
    }
    let tol = raw.tol.unwrap_or_else(default_tol);
    if tol <= 0.0 {
        return Err(Error::Config("tol must be positive".into()));
    }
    let samples = raw.samples.unwrap_or(DEFAULT_SAMPLES);
    if samples == 0 {
        return Err(Error::Config("samples must be positive".into()));
    }
    let job = match kind {
        JobKind::CheckAlgebroid => {
            let r = raw.check_algebroid.unwrap();
            let algebroid = ld.algebroid(r.algebroid, "check-algebroid")?;
            let isotropy_points = match r.isotropy_points {
                Some(p) => p,
                None => default_isotropy_points(&algebroid),
            };
            let realization = r
                .realization
                .map(|c| ld.coframe_data(c, "check-algebroid.realization"))
                .transpose()?;
            Job::CheckAlgebroid {
                algebroid,
                isotropy_points,
                realization,
            }
        }
        JobKind::Prolong => {
            let r = raw.prolong.unwrap();
            let (g, label) = group(r.group)?;
            let max_k = r.max_k.unwrap_or(3);
            if max_k == 0 {
                return Err(Error::Config("prolong.max_k must be at least 1".into()));
            }
            Job::Prolong { g, label, max_k }
        }
        JobKind::Coframe => ld.coframe_job(raw.coframe.unwrap())?,
        JobKind::McCheck => {
            let r = raw.mc_check.unwrap();
            let algebroid = ld.algebroid(r.algebroid, "mc-check.algebroid")?;
            let mut chart = ld.chart(&r.form.chart, "mc-check.form")?;
            let h = ld.exprs(&r.form.h, &mut chart, "mc-check.form.h")?;
            let eta = r
                .form
                .eta
                .iter()
                .enumerate()
                .map(|(i, row)| ld.exprs(row, &mut chart, &format!("mc-check.form.eta[{}]", i + 1)))
                .collect::<Result<Vec<_>>>()?;
            let form = AValuedOneForm::new(chart, h, eta).map_err(|e| ctx("mc-check.form", e))?;
            let mut connections = Vec::new();
            for (ci, conn) in r.connections.iter().enumerate() {
                let path = format!("mc-check.connections[{}]", ci + 1);
                let mut ch = algebroid.algebroid.chart().clone();
                let mut entries = Vec::new();
                for (ei, g) in conn.gamma.iter().enumerate() {
                    let e = ld.expr(&g.value, &mut ch, &format!("{path}.gamma[{}]", ei + 1))?;
                    entries.push(((one(g.k, &path)?, one(g.a, &path)?, one(g.j, &path)?), e));
                }
                connections.push(Connection::from_entries(&algebroid.algebroid, entries).map_err(|e| ctx(&path, e))?);
            }
            Job::McCheck {
                algebroid,
                form,
                connections,
            }
        }
        JobKind::Gstructure => ld.gstructure_job(raw.gstructure.unwrap())?,
        JobKind::VerifyRealization => {
            let r = raw.verify_realization.unwrap();
            let algebroid = ld.algebroid(r.algebroid, "verify-realization.algebroid")?;
            let realization = ld.coframe_data(r.realization, "verify-realization.realization")?;
            Job::VerifyRealization {
                algebroid,
                realization,
                samples: r.samples.unwrap_or(100),
                numeric_tol: r.numeric_tol.unwrap_or(DEFAULT_NUMERIC_TOL),
            }
        }
        JobKind::Realize => {
            let r = raw.realize.unwrap();
            let mut alg_raw = r.algebroid;
            if alg_raw.preset.is_none() && alg_raw.chart.is_none() {
                alg_raw.preset = Some("constant-curvature".into());
            }
            let algebroid = ld.algebroid(alg_raw, "realize.algebroid")?;
            let point = r.point.unwrap_or_else(|| algebroid.algebroid.chart().center());
            Job::Realize {
                algebroid,
                point,
                half_width: r.half_width.unwrap_or(crate::realize::DEFAULT_HALF_WIDTH),
                grid: r.grid.unwrap_or(5),
                numeric_tol: r.numeric_tol.unwrap_or(DEFAULT_NUMERIC_TOL),
            }
        }
        JobKind::Orbit => {
            let r = raw.orbit.unwrap();
            Job::Orbit {
                algebroid: ld.algebroid(r.algebroid, "orbit.algebroid")?,
                x: r.x,
                y: r.y,
                budget: r.budget.unwrap_or(DEFAULT_FLOW_BUDGET),
            }
        }
        JobKind::Isotropy => {
            let r = raw.isotropy.unwrap();
            Job::Isotropy {
                algebroid: ld.algebroid(r.algebroid, "isotropy.algebroid")?,
                points: r.points,
            }
        }
    };
    Ok(JobConfig {
        seed: raw.seed.unwrap_or(DEFAULT_SEED),
        tol,
        samples,
        warnings: ld.warnings,
        job,
    })
}

fn ctx(path: &str, e: Error) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("{path}: {m}")),
        other => Error::Config(format!("{path}: {other}")),
    }
}

/// Converts a 1-based index.
fn one(i: usize, path: &str) -> Result<usize> {
    i.checked_sub(1)
        .ok_or_else(|| Error::Config(format!("{path}: indices are 1-based")))
}

fn default_isotropy_points(spec: &AlgebroidSpec) -> Vec<Vec<f64>> {
    if spec.preset.as_deref() == Some("constant-curvature") {
        return vec![vec![-1.0], vec![0.0], vec![1.0]];
    }
    vec![spec.algebroid.chart().center()]
}

fn group(raw: RawGroup) -> Result<(MatrixLieAlgebra, String)> {
    match raw {
        RawGroup::Name(name) => Ok((presets::by_name(&name)?, name)),
        RawGroup::Matrices(ms) => {
            let basis = ms
                .iter()
                .map(|rows| {
                    let n = rows.len();
                    if rows.iter().any(|r| r.len() != n) {
                        return Err(Error::ShapeMismatch);
                    }
                    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
                })
                .collect::<Result<Vec<_>>>()?;
            let m = basis.len();
            Ok((make_algebra(basis).map_err(|e| ctx("group", e))?, format!("{m}-dim matrix algebra")))
        }
    }
}

fn bochner_kahler_dim(name: &str) -> Option<usize> {
    let inner = name.strip_prefix("bochner-kahler(")?.strip_suffix(')')?;
    inner.trim().parse().ok().filter(|n| (1..=3).contains(n))
}

fn convention_choice(s: Option<&str>, default: ConventionChoice) -> Result<ConventionChoice> {
    match s {
        None => Ok(default),
        Some("scan") => Ok(ConventionChoice::Scan),
        Some(name) => SignConvention::from_name(name)
            .map(ConventionChoice::Fixed)
            .ok_or_else(|| Error::Config(format!("unknown convention `{name}`"))),
    }
}

#[derive(Default)]
struct Loader {
    warnings: Vec<String>,
}

impl Loader {
    fn chart(&mut self, raw: &RawChart, path: &str) -> Result<Chart> {
        if raw.coords.len() != raw.bounds.len() {
            return Err(Error::Config(format!("{path}.chart: one bounds pair per coordinate")));
        }
        let bounds: Vec<(f64, f64)> = raw.bounds.iter().map(|b| (b[0], b[1])).collect();
        let mut chart = Chart::new(&raw.coords, &bounds).map_err(|e| ctx(&format!("{path}.chart"), e))?;
        for (i, g) in raw.guards.iter().enumerate() {
            let e = parse_expr(g, &chart).map_err(|e| ctx(&format!("{path}.chart.guards[{}]", i + 1), e))?;
            chart.add_guard(e);
        }
        Ok(chart)
    }

    /// Parses against `chart`, adding guards for denominators not yet
    /// declared.
    fn expr(&mut self, text: &str, chart: &mut Chart, path: &str) -> Result<Expr> {
        let e = parse_expr(text, chart).map_err(|e| ctx(path, e))?;
        for g in e.singular_sets() {
            let shown = g.to_string();
            if chart.add_guard(g) {
                self.warnings
                    .push(format!("{path}: guard `{shown} ≠ 0` inferred from `{text}`"));
            }
        }
        Ok(e)
    }

    fn exprs(&mut self, texts: &[String], chart: &mut Chart, path: &str) -> Result<Vec<Expr>> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| self.expr(t, chart, &format!("{path}[{}]", i + 1)))
            .collect()
    }

    fn algebroid(&mut self, raw: RawAlgebroid, path: &str) -> Result<AlgebroidSpec> {
        if let Some(preset) = raw.preset {
            if raw.chart.is_some() || raw.rank.is_some() || !raw.c.is_empty() || !raw.f.is_empty() {
                return Err(Error::Config(format!("{path}: a preset excludes chart, rank, C and F")));
            }
            let alg = match preset.as_str() {
                "constant-curvature" => catalog::constant_curvature(),
                other => match bochner_kahler_dim(other) {
                    Some(n) => catalog::bochner_kahler(n),
                    None => return Err(Error::Config(format!("{path}: unknown algebroid preset `{other}`"))),
                },
            };
            let default = if preset.starts_with("bochner-kahler") {
                ConventionChoice::Scan
            } else {
                ConventionChoice::Fixed(SignConvention::default())
            };
            let convention = convention_choice(raw.convention.as_deref(), default).map_err(|e| ctx(path, e))?;
            let alg = match convention {
                ConventionChoice::Fixed(c) => alg.with_convention(c),
                ConventionChoice::Scan => alg,
            };
            return Ok(AlgebroidSpec {
                algebroid: alg,
                convention,
                preset: Some(preset),
            });
        }
        let raw_chart = raw
            .chart
            .as_ref()
            .ok_or_else(|| Error::Config(format!("{path}: needs `preset` or `chart`")))?;
        let mut chart = self.chart(raw_chart, path)?;
        let n = raw.rank.ok_or_else(|| Error::Config(format!("{path}: missing `rank`")))?;
        let mut c = Vec::new();
        for (idx, e) in raw.c.iter().enumerate() {
            let p = format!("{path}.C[{}]", idx + 1);
            let v = self.expr(&e.value, &mut chart, &p)?;
            c.push(((one(e.k, &p)?, one(e.i, &p)?, one(e.j, &p)?), v));
        }
        let mut f = Vec::new();
        for (idx, e) in raw.f.iter().enumerate() {
            let p = format!("{path}.F[{}]", idx + 1);
            let v = self.expr(&e.value, &mut chart, &p)?;
            f.push(((one(e.a, &p)?, one(e.i, &p)?), v));
        }
        let convention = convention_choice(raw.convention.as_deref(), ConventionChoice::Fixed(SignConvention::default()))
            .map_err(|e| ctx(path, e))?;
        let mut alg = FlatAlgebroid::from_entries(chart, n, c, f).map_err(|e| ctx(path, e))?;
        if let ConventionChoice::Fixed(cv) = convention {
            alg = alg.with_convention(cv);
        }
        self.warnings.extend(alg.warnings().iter().map(|w| format!("{path}: {w}")));
        Ok(AlgebroidSpec {
            algebroid: alg,
            convention,
            preset: None,
        })
    }

    fn coframe_rows(&mut self, rows: &[Vec<String>], chart: &mut Chart, path: &str) -> Result<Vec<Vec<Expr>>> {
        rows.iter()
            .enumerate()
            .map(|(i, r)| self.exprs(r, chart, &format!("{path}[{}]", i + 1)))
            .collect()
    }

    fn coframe_data(&mut self, raw: RawCoframeData, path: &str) -> Result<CoframeData> {
        let mut chart = self.chart(&raw.chart, path)?;
        let rows = self.coframe_rows(&raw.theta, &mut chart, &format!("{path}.theta"))?;
        let h = self.exprs(&raw.h, &mut chart, &format!("{path}.h"))?;
        let coframe = Coframe::new(chart, rows).map_err(|e| ctx(path, e))?;
        Ok(CoframeData { coframe, h })
    }

    fn coframe_job(&mut self, raw: RawCoframe) -> Result<Job> {
        let mut chart = self.chart(&raw.chart, "coframe")?;
        let rows = self.coframe_rows(&raw.theta, &mut chart, "coframe.theta")?;
        let generators = raw
            .generators
            .as_ref()
            .map(|g| self.exprs(g, &mut chart, "coframe.generators"))
            .transpose()?;
        let coframe = Coframe::new(chart.clone(), rows).map_err(|e| ctx("coframe", e))?;
        let mut tower = TowerOptions::new(raw.s_max.unwrap_or(3));
        if let Some(g) = raw.grid {
            tower.grid_per_axis = g;
        }
        tower.generators = generators;
        let mut derive = DeriveOptions {
            names: raw.names.clone(),
            bounds: raw.bounds.map(|b| b.iter().map(|p| (p[0], p[1])).collect()),
            ..DeriveOptions::default()
        };
        if let Some(inv) = raw.inverse {
            let names = raw
                .names
                .ok_or_else(|| Error::Config("coframe.inverse requires coframe.names".into()))?;
            let bounds = vec![(-1.0, 1.0); names.len()];
            let mut x_chart = Chart::new(&names, &bounds).map_err(|e| ctx("coframe.names", e))?;
            let mut map = BTreeMap::new();
            for (coord, text) in inv {
                if chart.index_of(&coord).is_none() {
                    return Err(Error::Config(format!("coframe.inverse: `{coord}` is not a chart coordinate")));
                }
                let e = self.expr(&text, &mut x_chart, &format!("coframe.inverse.{coord}"))?;
                map.insert(coord, e);
            }
            derive.inverse = Some(map);
        }
        Ok(Job::Coframe {
            coframe,
            tower,
            derive,
        })
    }

    fn gstructure_job(&mut self, raw: RawGStructure) -> Result<Job> {
        let (mut data, label, default_symbolic) = if let Some(preset) = &raw.preset {
            if raw.group.is_some()
                || raw.chart.is_some()
                || !(raw.c.is_empty() && raw.b.is_empty() && raw.s.is_empty() && raw.theta.is_empty() && raw.phi.is_empty())
            {
                return Err(Error::Config("gstructure: a preset excludes group, chart and tables".into()));
            }
            match preset.as_str() {
                "constant-curvature" => (catalog::constant_curvature_gdata(), preset.clone(), true),
                other => match bochner_kahler_dim(other) {
                    Some(n) => (catalog::bochner_kahler_gdata(n), preset.clone(), false),
                    None => return Err(Error::Config(format!("gstructure: unknown preset `{other}`"))),
                },
            }
        } else {
            let g_raw = raw
                .group
                .ok_or_else(|| Error::Config("gstructure: needs `preset` or `group`".into()))?;
            let (g, label) = group(g_raw)?;
            let raw_chart = raw
                .chart
                .as_ref()
                .ok_or_else(|| Error::Config("gstructure: missing `chart`".into()))?;
            let mut chart = self.chart(raw_chart, "gstructure")?;
            let mut t = GTables::default();
            for (i, e) in raw.c.iter().enumerate() {
                let p = format!("gstructure.c[{}]", i + 1);
                let v = self.expr(&e.value, &mut chart, &p)?;
                t.c.push(((one(e.k, &p)?, one(e.i, &p)?, one(e.j, &p)?), v));
            }
            for (i, e) in raw.b.iter().enumerate() {
                let p = format!("gstructure.b[{}]", i + 1);
                let v = self.expr(&e.value, &mut chart, &p)?;
                t.b.push(((one(e.gamma, &p)?, one(e.i, &p)?, one(e.j, &p)?), v));
            }
            for (i, e) in raw.s.iter().enumerate() {
                let p = format!("gstructure.S[{}]", i + 1);
                let v = self.expr(&e.value, &mut chart, &p)?;
                t.s.push(((one(e.gamma, &p)?, one(e.j, &p)?, one(e.alpha, &p)?), v));
            }
            for (i, e) in raw.theta.iter().enumerate() {
                let p = format!("gstructure.Theta[{}]", i + 1);
                let v = self.expr(&e.value, &mut chart, &p)?;
                t.theta.push(((one(e.a, &p)?, one(e.i, &p)?), v));
            }
            for (i, e) in raw.phi.iter().enumerate() {
                let p = format!("gstructure.Phi[{}]", i + 1);
                let v = self.expr(&e.value, &mut chart, &p)?;
                t.phi.push(((one(e.a, &p)?, one(e.alpha, &p)?), v));
            }
            let data = GRealizationData::new(g, chart, t).map_err(|e| ctx("gstructure", e))?;
            (data, label, true)
        };
        if let Some(o) = &raw.s_order {
            let order = SOrder::from_name(o).ok_or_else(|| Error::Config(format!("gstructure: unknown s_order `{o}`")))?;
            data = data.with_s_order(order);
        }
        let convention = convention_choice(raw.convention.as_deref(), ConventionChoice::Scan).map_err(|e| ctx("gstructure", e))?;
        let candidate = match raw.candidate {
            None => None,
            Some(c) => {
                let mut chart = self.chart(&c.chart, "gstructure.candidate")?;
                let omega = self.coframe_rows(&c.omega, &mut chart, "gstructure.candidate.omega")?;
                let phi = self.coframe_rows(&c.phi, &mut chart, "gstructure.candidate.phi")?;
                let h = self.exprs(&c.h, &mut chart, "gstructure.candidate.h")?;
                Some(GRealizationCandidate { chart, omega, phi, h })
            }
        };
        Ok(Job::Gstructure {
            data,
            label,
            convention,
            points: raw.points.unwrap_or(100),
            numeric_tol: raw.numeric_tol.unwrap_or(1e-8),
            symbolic: raw.symbolic.unwrap_or(default_symbolic),
            candidate,
        })
    }
}

// ---------------------------------------------------------------- reports

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Unknown,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::Unknown => 2,
        }
    }

    fn and(self, o: Outcome) -> Outcome {
        use Outcome::*;
        match (self, o) {
            (Fail, _) | (_, Fail) => Fail,
            (Unknown, _) | (_, Unknown) => Unknown,
            _ => Pass,
        }
    }

    fn of(passed: bool) -> Outcome {
        if passed {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }

    fn label(self) -> &'static str {
        match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Unknown => "UNKNOWN",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Section {
    pub title: String,
    pub outcome: Outcome,
    pub summary: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
    pub data: Value,
}

impl Section {
    fn new(title: &str, outcome: Outcome) -> Section {
        Section {
            title: title.to_string(),
            outcome,
            summary: Vec::new(),
            table: None,
            data: Value::Null,
        }
    }

    fn line(mut self, s: impl Into<String>) -> Section {
        self.summary.push(s.into());
        self
    }

    fn data(mut self, v: Value) -> Section {
        self.data = v;
        self
    }

    fn table(mut self, t: Table) -> Section {
        self.table = Some(t);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub abs_tol: f64,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numeric_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub job: JobKind,
    pub outcome: Outcome,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub conventions: BTreeMap<String, String>,
    pub warnings: Vec<String>,
    pub sections: Vec<Section>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        self.outcome.exit_code()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# cartan {}: {}\n\n", self.job, self.outcome.label()));
        out.push_str(&format!("- seed: {}\n", self.seed));
        out.push_str(&format!("- abs_tol: {:e}, samples: {}\n", self.tolerances.abs_tol, self.tolerances.samples));
        if let Some(t) = self.tolerances.numeric_tol {
            out.push_str(&format!("- numeric tolerance: {t:e}\n"));
        }
        for (k, v) in &self.conventions {
            out.push_str(&format!("- {k}: {v}\n"));
        }
        if !self.warnings.is_empty() {
            out.push_str("\n## Warnings\n\n");
            for w in &self.warnings {
                out.push_str(&format!("- {w}\n"));
            }
        }
        for s in &self.sections {
            out.push_str(&format!("\n## {} ({})\n\n", s.title, s.outcome.label()));
            for l in &s.summary {
                out.push_str(&format!("- {l}\n"));
            }
            if let Some(t) = &s.table {
                if !s.summary.is_empty() {
                    out.push('\n');
                }
                out.push_str(&format!("| {} |\n", t.headers.join(" | ")));
                out.push_str(&format!("|{}\n", "---|".repeat(t.headers.len())));
                for r in &t.rows {
                    out.push_str(&format!("| {} |\n", r.join(" | ")));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Markdown,
}

pub fn emit_report(report: &Report, format: Format, path: &Path) -> Result<()> {
    let text = match format {
        Format::Json => report.to_json(),
        Format::Markdown => report.to_markdown(),
    };
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn residual_section(title: &str, r: &ResidualReport) -> Section {
    let mut s = Section::new(title, Outcome::of(r.passed()))
        .line(format!("verdict: {}", r.verdict))
        .line(format!("components: {}, max |residual|: {:.3e}", r.components, r.max_abs));
    for w in &r.witnesses {
        s = s.line(format!("witness {} = {:.6e} at {}", w.component, w.value, fmt_point(&w.point)));
    }
    s.data(serde_json::to_value(r).expect("serializable"))
}

fn fmt_point(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|v| format!("{v:.6}")).collect();
    format!("({})", parts.join(", "))
}

fn fmt_num(v: f64) -> String {
    if v == v.round() && v.abs() < 1e6 {
        format!("{v:.0}")
    } else {
        format!("{v:.4}")
    }
}

fn isotropy_table(alg: &FlatAlgebroid, points: &[Vec<f64>], tol: f64) -> Result<Section> {
    let coords = alg.chart().coords().join(", ");
    let mut rows = Vec::new();
    let mut data = Vec::new();
    let mut ok = true;
    for p in points {
        let iso = alg.isotropy_at(p)?;
        let sig = Signature::of(&iso.constants.killing_form(), 1e-9);
        ok &= iso.closure_residual <= 1e-9_f64.max(tol);
        let point: Vec<String> = p.iter().map(|v| fmt_num(*v)).collect();
        rows.push(vec![
            point.join(", "),
            iso.dim().to_string(),
            sig.to_string(),
            iso.kind.to_string(),
            iso.kind.geometry().unwrap_or("-").to_string(),
        ]);
        data.push(json!({
            "point": p,
            "dim": iso.dim(),
            "killing_signature": sig,
            "type": iso.kind.to_string(),
            "geometry": iso.kind.geometry(),
            "closure_residual": iso.closure_residual,
            "orbit_rank": alg.orbit_rank_at(p)?,
        }));
    }
    Ok(Section::new("Isotropy", Outcome::of(ok))
        .table(Table {
            headers: vec![coords, "dim".into(), "Killing signature".into(), "algebra".into(), "geometry".into()],
            rows,
        })
        .data(Value::Array(data)))
}

/// Resolves a convention choice, recording a scan section when scanning.
fn resolve(
    spec: &AlgebroidSpec,
    cfg: &JobConfig,
    points: usize,
    tol: f64,
    conventions: &mut BTreeMap<String, String>,
    sections: &mut Vec<Section>,
) -> Result<FlatAlgebroid> {
    match spec.convention {
        ConventionChoice::Fixed(c) => {
            conventions.insert("sign convention".into(), c.name().into());
            Ok(spec.algebroid.clone().with_convention(c))
        }
        ConventionChoice::Scan => {
            let scan = catalog::convention_scan(&spec.algebroid, points, cfg.seed, tol)?;
            let rows = scan
                .trials
                .iter()
                .map(|t| {
                    vec![
                        t.convention.name().to_string(),
                        format!("{:.3e}", t.jacobi_max),
                        format!("{:.3e}", t.anchor_max),
                        Outcome::of(t.passed).label().to_string(),
                    ]
                })
                .collect();
            let chosen = scan.resolved.unwrap_or_default();
            let resolution = match scan.resolved {
                Some(c) => c.name().to_string(),
                None => "unresolved (no convention certifies)".into(),
            };
            conventions.insert("sign convention".into(), resolution.clone());
            sections.push(
                Section::new("Sign convention scan", Outcome::of(scan.resolved.is_some()))
                    .line(format!("{} random points, seed {}, tolerance {:e}", scan.points, scan.seed, scan.tol))
                    .line(format!("resolved: {resolution}"))
                    .table(Table {
                        headers: vec!["convention".into(), "max Jacobi".into(), "max anchor".into(), "result".into()],
                        rows,
                    })
                    .data(serde_json::to_value(&scan).expect("serializable")),
            );
            Ok(spec.algebroid.clone().with_convention(chosen))
        }
    }
}

fn algebroid_summary(alg: &FlatAlgebroid, preset: Option<&str>) -> Section {
    let mut s = Section::new("Algebroid", Outcome::Pass)
        .line(format!("rank {} over {} ({})", alg.n(), alg.chart().coords().join(", "), alg.d()));
    if let Some(p) = preset {
        s = s.line(format!("preset: {p}"));
    }
    let mut c = BTreeMap::new();
    for k in 0..alg.n() {
        for i in 0..alg.n() {
            for j in (i + 1)..alg.n() {
                let e = alg.c(k, i, j);
                if !e.is_zero() {
                    c.insert(format!("C^{}_{{{},{}}}", k + 1, i + 1, j + 1), e.to_string());
                }
            }
        }
    }
    let mut f = BTreeMap::new();
    for a in 0..alg.d() {
        for i in 0..alg.n() {
            let e = alg.f(a, i);
            if !e.is_zero() {
                f.insert(format!("F^{}_{}", a + 1, i + 1), e.to_string());
            }
        }
    }
    if alg.n() <= 4 {
        for (k, v) in c.iter().chain(&f) {
            s = s.line(format!("{k} = {v}"));
        }
    }
    s.data(json!({ "rank": alg.n(), "coords": alg.chart().coords(), "C": c, "F": f }))
}

pub fn run_job(cfg: &JobConfig) -> Result<Report> {
    let mut conventions = BTreeMap::new();
    let mut sections = Vec::new();
    let mut numeric_tol = None;
    let zo = cfg.zero_options();
    match &cfg.job {
        Job::CheckAlgebroid {
            algebroid,
            isotropy_points,
            realization,
        } => {
            let alg = resolve(algebroid, cfg, 100, 1e-8, &mut conventions, &mut sections)?;
            sections.push(algebroid_summary(&alg, algebroid.preset.as_deref()));
            let cert = alg.certify(&zo)?;
            sections.push(residual_section("Jacobi residual", &cert.jacobi));
            sections.push(residual_section("Anchor morphism residual", &cert.anchor));
            if let Some(r) = realization {
                let rep = verify_classifying_data(&r.coframe, &r.h, &alg, &zo)?;
                sections.push(residual_section("Realization: structure functions", &rep.structure));
                sections.push(residual_section("Realization: anchor", &rep.anchor));
            }
            if cert.passed() {
                sections.push(isotropy_table(&alg, isotropy_points, cfg.tol)?);
            }
        }
        Job::Prolong { g, label, max_k } => {
            let p1 = first_prolongation(g);
            let rank = antisymmetrization_rank(g);
            let tower = prolongation_tower(g, *max_k);
            let rank_nullity = p1.dim() + rank == g.n() * g.dim();
            let sig = Signature::of(&g.killing_form(), 1e-9);
            let outcome = match tower.verdict {
                FiniteTypeVerdict::FiniteType(_) => Outcome::Pass,
                FiniteTypeVerdict::Undetermined(_) => Outcome::Unknown,
            };
            sections.push(
                Section::new("Prolongation", outcome)
                    .line(format!("g = {label}: dim {} in gl({})", g.dim(), g.n()))
                    .line(format!("dims {:?}, verdict {}", tower.dims, tower.verdict))
                    .line(format!("rank of A on hom(R^n, g): {rank}"))
                    .line(format!("Killing signature {sig}, type {}", g.structure_constants().classify(1e-9)))
                    .data(json!({
                        "group": label,
                        "n": g.n(),
                        "dim": g.dim(),
                        "dims": tower.dims,
                        "verdict": tower.verdict,
                        "first_prolongation_dim": p1.dim(),
                        "antisymmetrization_rank": rank,
                        "killing_signature": sig,
                    })),
            );
            sections.push(
                Section::new("Rank-nullity", Outcome::of(rank_nullity))
                    .line(format!("{} + {} = {} · {}", p1.dim(), rank, g.n(), g.dim())),
            );
        }
        Job::Coframe { coframe, tower, derive } => {
            let n = coframe.n();
            let sf = coframe.structure_functions();
            let mut table = Vec::new();
            for k in 0..n {
                for i in 0..n {
                    for j in (i + 1)..n {
                        let e = &sf[(k * n + i) * n + j];
                        if !e.is_zero() {
                            table.push(vec![format!("C^{}_{{{},{}}}", k + 1, i + 1, j + 1), e.to_string()]);
                        }
                    }
                }
            }
            sections.push(
                Section::new("Structure functions", Outcome::Pass)
                    .table(Table {
                        headers: vec!["component".into(), "value".into()],
                        rows: table,
                    })
                    .data(json!(sf.iter().map(|e| e.to_string()).collect::<Vec<_>>())),
            );
            let tw = invariant_tower(coframe, tower)?;
            let rank = tw.rank();
            let gens: Vec<String> = tw.generators.iter().map(|g| format!("{} = {}", g.label, g.expr)).collect();
            sections.push(
                Section::new("Invariant tower", if rank.is_some() { Outcome::Pass } else { Outcome::Unknown })
                    .line(format!("ranks by order: {:?}", tw.ranks))
                    .line(match rank {
                        Some(r) => format!("rank {r}, stabilized at order {}", tw.stabilized_at.unwrap_or(0)),
                        None => "tower did not stabilize within s_max".into(),
                    })
                    .line(format!("generators: {}", if gens.is_empty() { "none".into() } else { gens.join("; ") }))
                    .data(json!({
                        "ranks": tw.ranks,
                        "rank": rank,
                        "stabilized_at": tw.stabilized_at,
                        "grid_points": tw.grid_points,
                        "generators": gens,
                    })),
            );
            if rank.is_some() {
                let mut opts = derive.clone();
                opts.zero = zo;
                let data = derive_classifying_algebroid(coframe, &tw, &opts)?;
                conventions.insert("sign convention".into(), data.algebroid.convention().name().into());
                sections.push(algebroid_summary(&data.algebroid, None));
                let cert = data.algebroid.certify(&zo)?;
                sections.push(residual_section("Jacobi residual", &cert.jacobi));
                sections.push(residual_section("Anchor morphism residual", &cert.anchor));
                let rep = verify_classifying_data(coframe, &data.h, &data.algebroid, &zo)?;
                sections.push(residual_section("Classifying data: structure functions", &rep.structure));
                sections.push(residual_section("Classifying data: anchor", &rep.anchor));
            }
        }
        Job::McCheck {
            algebroid,
            form,
            connections,
        } => {
            let alg = resolve(algebroid, cfg, 100, 1e-8, &mut conventions, &mut sections)?;
            let flat = Connection::flat(&alg);
            let all = std::iter::once(("flat connection".to_string(), &flat))
                .chain(connections.iter().enumerate().map(|(i, c)| (format!("connection {}", i + 1), c)));
            let mut first = true;
            for (name, conn) in all {
                let rep = mc_residual(form, &alg, conn, &zo)?;
                if first {
                    sections.push(residual_section("Anchor compatibility", &rep.anchor));
                    first = false;
                }
                let mut s = residual_section(&format!("Maurer-Cartan residual, {name}"), &rep.residual);
                if rep.advisory {
                    s = s.line("advisory only: anchor compatibility fails");
                }
                sections.push(s);
            }
        }
        Job::Gstructure {
            data,
            label,
            convention,
            points,
            numeric_tol: ntol,
            symbolic,
            candidate,
        } => {
            numeric_tol = Some(*ntol);
            let built = build_gstructure_algebroid(data)?;
            conventions.insert(
                "S order".into(),
                match data.s_order {
                    SOrder::OmegaPhi => "omega-phi".into(),
                    SOrder::PhiOmega => "phi-omega".into(),
                },
            );
            let spec = AlgebroidSpec {
                algebroid: built,
                convention: *convention,
                preset: Some(label.clone()),
            };
            let alg = resolve(&spec, cfg, *points, *ntol, &mut conventions, &mut sections)?;
            sections.push(
                algebroid_summary(&alg, Some(label)).line(format!("g of dimension {} in gl({})", data.m(), data.n())),
            );
            if *symbolic {
                let cert = alg.certify(&zo)?;
                sections.push(residual_section("Jacobi residual", &cert.jacobi));
                sections.push(residual_section("Anchor morphism residual", &cert.anchor));
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                let pts = alg.chart().sample(&mut rng, *points, &[])?;
                let cert = alg.numeric_certify(&pts, *ntol)?;
                sections.push(residual_section("Jacobi residual (numeric)", &cert.jacobi));
                sections.push(residual_section("Anchor morphism residual (numeric)", &cert.anchor));
            }
            let hom = constant_section_homomorphism_residual(&alg, data.g(), &zo)?;
            sections.push(residual_section("Constant-section homomorphism", &hom.residual));
            let mut rows = Vec::new();
            for a in 0..data.m() {
                let mut alpha = vec![0.0; data.m()];
                alpha[a] = 1.0;
                let act = inner_action(&alg, data.g(), &alpha)?;
                let field: Vec<String> = act.field.iter().map(|e| e.to_string()).collect();
                rows.push(vec![format!("E{}", a + 1), field.join(", ")]);
            }
            sections.push(Section::new("Inner action: induced fields", Outcome::Pass).table(Table {
                headers: vec!["generator".into(), format!("#(0,E) on ({})", alg.chart().coords().join(", "))],
                rows,
            }));
            if let Some(cand) = candidate {
                let rep = verify_g_realization(cand, data, &zo)?;
                sections.push(residual_section("Candidate: dω", &rep.d_omega));
                sections.push(residual_section("Candidate: dφ", &rep.d_phi));
                sections.push(residual_section("Candidate: dh", &rep.dh));
            }
        }
        Job::VerifyRealization {
            algebroid,
            realization,
            samples,
            numeric_tol: ntol,
        } => {
            numeric_tol = Some(*ntol);
            let alg = resolve(algebroid, cfg, 100, 1e-8, &mut conventions, &mut sections)?;
            let cand = RealizationCandidate::symbolic(&realization.coframe, &realization.h)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let pts = shrink(realization.coframe.chart(), 0.9).sample(&mut rng, *samples, &[])?;
            let rep = verify_realization_numeric(&cand, &alg, &pts, *ntol)?;
            sections.push(residual_section("dθ = C(h) θ∧θ", &rep.structure).line(format!("{} samples", rep.samples)));
            sections.push(residual_section("dh = F(h) θ", &rep.anchor));
        }
        Job::Realize {
            algebroid,
            point,
            half_width,
            grid,
            numeric_tol: ntol,
        } => {
            numeric_tol = Some(*ntol);
            let alg = resolve(algebroid, cfg, 100, 1e-8, &mut conventions, &mut sections)?;
            let ev = alg.evaluator()?;
            if !alg.chart().in_box(point) {
                return Err(Error::OutsideChart(point.clone()));
            }
            if ev.anchor_at(point).iter().any(|v| v.abs() > cfg.tol) {
                return Err(Error::Config(format!(
                    "realize: the anchor does not vanish at {}; only anchor-zero fibers can be realized",
                    fmt_point(point)
                )));
            }
            let g = fiber_matrix_algebra(&alg, point)?;
            let kind = g.structure_constants().classify(1e-9);
            let cand = realize_bundle_fiber(&g, *half_width, point.clone())?;
            let w = cand.chart.bounds()[0].half_width();
            let pts = cand.chart.chebyshev_grid(*grid, &[])?;
            let frozen = freeze(&alg, point)?;
            let rep = verify_realization_numeric(&cand, &frozen, &pts, *ntol)?;
            sections.push(
                Section::new("Fiber", Outcome::Pass)
                    .line(format!("base point {}", fmt_point(point)))
                    .line(format!("fiber algebra {kind}{}", kind.geometry().map(|g| format!(" ({g})")).unwrap_or_default()))
                    .line(format!("exponential chart [-{w}, {w}]^{} ({} grid points)", g.dim(), pts.len()))
                    .data(json!({ "point": point, "type": kind.to_string(), "half_width": w, "grid_points": pts.len() })),
            );
            sections.push(residual_section("dθ = C θ∧θ", &rep.structure));
            sections.push(residual_section("dh = 0", &rep.anchor));
        }
        Job::Orbit { algebroid, x, y, budget } => {
            let alg = resolve(algebroid, cfg, 100, 1e-8, &mut conventions, &mut sections)?;
            let v = alg.same_orbit(x, y, *budget)?;
            let (outcome, line) = match &v {
                OrbitVerdict::Yes { path, endpoint } => (
                    Outcome::Pass,
                    format!("same orbit: yes, {} flow segments reaching {}", path.len(), fmt_point(endpoint)),
                ),
                OrbitVerdict::No { reason } => (Outcome::Pass, format!("same orbit: no ({reason})")),
                OrbitVerdict::Unknown { closest, steps } => (
                    Outcome::Unknown,
                    format!("same orbit: unknown after {steps} steps (closest distance {closest:.3e})"),
                ),
            };
            sections.push(
                Section::new("Orbit", outcome)
                    .line(format!("from {} to {}", fmt_point(x), fmt_point(y)))
                    .line(line)
                    .data(serde_json::to_value(&v).expect("serializable")),
            );
        }
        Job::Isotropy { algebroid, points } => {
            let alg = resolve(algebroid, cfg, 100, 1e-8, &mut conventions, &mut sections)?;
            sections.push(isotropy_table(&alg, points, cfg.tol)?);
        }
    }
    let outcome = sections.iter().fold(Outcome::Pass, |acc, s| acc.and(s.outcome));
    Ok(Report {
        job: cfg.kind(),
        outcome,
        seed: cfg.seed,
        tolerances: Tolerances {
            abs_tol: cfg.tol,
            samples: cfg.samples,
            numeric_tol,
        },
        conventions,
        warnings: cfg.warnings.clone(),
        sections,
    })
}

/// The chart scaled about its center, keeping finite-difference stencils
/// inside.
fn shrink(chart: &Chart, factor: f64) -> Chart {
    let bounds: Vec<(f64, f64)> = chart
        .bounds()
        .iter()
        .map(|b| (b.mid() - factor * b.half_width(), b.mid() + factor * b.half_width()))
        .collect();
    let mut out = Chart::new(chart.coords(), &bounds).expect("shrunk chart is valid");
    for g in chart.guards() {
        out.add_guard(g.clone());
    }
    out
}

/// The constant algebroid with the structure functions of `alg` at `x`.
fn freeze(alg: &FlatAlgebroid, x: &[f64]) -> Result<FlatAlgebroid> {
    let n = alg.n();
    let c = alg.evaluator()?.c_at(x);
    let mut entries = Vec::new();
    for k in 0..n {
        for i in 0..n {
            for j in (i + 1)..n {
                let v = c[(k * n + i) * n + j];
                if v != 0.0 {
                    entries.push(((k, i, j), Expr::num(v)));
                }
            }
        }
    }
    let bounds: Vec<(f64, f64)> = x.iter().map(|v| (v - 1.0, v + 1.0)).collect();
    let chart = Chart::new(alg.chart().coords(), &bounds)?;
    Ok(FlatAlgebroid::from_entries(chart, n, entries, [])?.with_convention(alg.convention()))
}
