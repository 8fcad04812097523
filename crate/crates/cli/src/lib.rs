//! Command-line front end for `fano-core`.
//!
//! Every report is a JSON object carrying a `provenance` block with the seed,
//! the parameters and the tool version. JSON output is byte-stable for a
//! fixed command line; `table` output is meant for people.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fano_core::dims::{self, FanoParams, MultiDegree};
use fano_core::exactla::{Field, Matrix, PrimeField, Rationals};
use fano_core::fano::{
    fano_points_fq, stratify, tangent_dim, tangent_system, verdict, Classification,
};
use fano_core::forms::{
    form_of, gram_of, random_rank_r_vanishing_quadric, random_vanishing_form, vanishes_on,
    PolySystem, DEFAULT_BOUND,
};
use fano_core::grass::{canonicalize, random_plane, subspace_distance, FloatPlane, Plane};
use fano_core::io::{
    parse_instance, parse_population, read_epoch_csv, write_epoch_csv, AnyInstance, ExactInstance,
    InstanceFile, PopulationFile,
};
use fano_core::ssa::{
    difference_system, estimate_cumulants, generate_instance, identifiability_report,
    recover_from_epochs, recover_from_estimates, reduce_ambient_default, sample_epochs,
    CovarianceDivisor, EpochCumulants, InstanceOptions, RecoveryOptions,
};
use fano_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(
    name = "fano",
    version,
    about = "Fano schemes of conditionally generic intersections and stationary subspace analysis"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GlobalOpts {
    /// Seed of the random stream; trial `t` uses stream `t` of this seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Number of random instances in sampling runs.
    #[arg(long, global = true, default_value_t = 20)]
    pub trials: usize,
    /// Chordal distance below which a recovered plane matches the ground truth.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tolerance: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    #[serde(skip)]
    pub format: Format,
    /// Maximum number of candidates an enumeration may examine.
    #[arg(long, global = true, default_value_t = 10_000_000)]
    pub budget: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Rational,
    Prime,
    Float,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Expected dimensions, stratification and thresholds.
    Dims(DimsArgs),
    /// Conditionally generic instance as JSON.
    Gen(GenArgs),
    /// Tangent-space verdict for an instance, or for sampled instances.
    Tangent(TangentArgs),
    /// Finite-field Fano enumeration with strata.
    Census(CensusArgs),
    /// Random population instance with a planted stationary subspace.
    SsaGen(SsaGenArgs),
    /// Identifiability report for (n, k, s, r).
    SsaReport(SsaReportArgs),
    /// Numerical recovery of the stationary subspace.
    SsaRecover(SsaRecoverArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DimsArgs {
    #[arg(long)]
    pub n: i64,
    #[arg(long)]
    pub k: i64,
    /// Comma-separated degrees, e.g. 2,2.
    #[arg(long, value_delimiter = ',', required = true)]
    pub degrees: Vec<u32>,
}

/// Shape of sampled conditionally generic instances.
#[derive(Args, Debug, Clone, Serialize)]
pub struct SampleArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub degrees: Option<Vec<u32>>,
    /// Rank of every sampled quadric.
    #[arg(long)]
    pub rank: Option<usize>,
    /// Coefficients are nonzero integers in [-bound, bound].
    #[arg(long, default_value_t = DEFAULT_BOUND)]
    pub bound: i64,
    /// Sample the fixed plane at random instead of using the coordinate plane.
    #[arg(long)]
    pub random_plane: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GenArgs {
    #[command(flatten)]
    pub sample: SampleArgs,
    #[arg(long, value_enum, default_value_t = FieldKind::Rational)]
    pub field: FieldKind,
    /// Characteristic for `--field prime`.
    #[arg(long)]
    pub p: Option<u64>,
    /// Re-check vanishing and ranks before writing.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TangentArgs {
    /// Instance JSON; without it `--trials` instances are sampled.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Plane as JSON rows (inline or a file); defaults to the instance plane.
    #[arg(long)]
    pub plane: Option<String>,
    #[command(flatten)]
    pub sample: SampleArgs,
    #[arg(long, value_enum, default_value_t = FieldKind::Rational)]
    pub field: FieldKind,
    #[arg(long)]
    pub p: Option<u64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CensusArgs {
    #[arg(long)]
    pub q: u64,
    /// Instance JSON; rational instances are reduced modulo q. Without it
    /// `--trials` instances are sampled over F_q.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Plane whose strata are counted; defaults to the instance plane.
    #[arg(long)]
    pub plane: Option<String>,
    #[command(flatten)]
    pub sample: SampleArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SsaGenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub s: usize,
    #[arg(long)]
    pub rank: Option<usize>,
    /// Keep all epoch means equal so only covariances differ.
    #[arg(long)]
    pub no_mean_shift: bool,
    /// Also draw this many Gaussian samples per epoch.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Directory for `epoch<i>.csv` files when `--samples` is set.
    #[arg(long)]
    #[serde(skip)]
    pub csv_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SsaReportArgs {
    #[arg(long)]
    pub n: i64,
    #[arg(long)]
    pub k: i64,
    #[arg(long)]
    pub s: i64,
    #[arg(long)]
    pub r: Option<i64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SsaRecoverArgs {
    #[arg(long)]
    pub k: usize,
    /// Population JSON as written by `ssa-gen`; with `--csv` it only supplies
    /// the ground truth.
    #[arg(long)]
    pub population: Option<PathBuf>,
    /// Comma-separated epoch CSV files, epoch 0 first.
    #[arg(long, value_delimiter = ',')]
    pub csv: Vec<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
}

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Usage(String),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::BudgetExceeded { .. }) => 3,
            CliError::Core(Error::ContractViolation(_) | Error::Overflow(_)) => 1,
            CliError::Core(_) | CliError::Usage(_) | CliError::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome {
                    code,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    match execute(&cli) {
        Ok(text) => match &cli.global.output {
            Some(path) => match fs::write(path, &text) {
                Ok(()) => Outcome {
                    code: 0,
                    stdout: String::new(),
                    stderr: String::new(),
                },
                Err(e) => Outcome {
                    code: 2,
                    stdout: String::new(),
                    stderr: format!("error: cannot write {}: {e}\n", path.display()),
                },
            },
            None => Outcome {
                code: 0,
                stdout: text,
                stderr: String::new(),
            },
        },
        Err(e) => Outcome {
            code: e.exit_code(),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

/// A report: the JSON body plus the key of its main table, if any.
struct Report {
    body: Map<String, Value>,
    rows_key: Option<&'static str>,
    /// Some commands emit documents that are JSON whatever the format.
    json_only: bool,
}

fn execute(cli: &Cli) -> CliResult<String> {
    let g = &cli.global;
    let (name, params, report) = match &cli.command {
        Command::Dims(a) => ("dims", to_value(a), cmd_dims(a)?),
        Command::Gen(a) => ("gen", to_value(a), cmd_gen(g, a)?),
        Command::Tangent(a) => ("tangent", to_value(a), cmd_tangent(g, a)?),
        Command::Census(a) => ("census", to_value(a), cmd_census(g, a)?),
        Command::SsaGen(a) => ("ssa-gen", to_value(a), cmd_ssa_gen(g, a)?),
        Command::SsaReport(a) => ("ssa-report", to_value(a), cmd_ssa_report(a)?),
        Command::SsaRecover(a) => ("ssa-recover", to_value(a), cmd_ssa_recover(g, a)?),
    };
    let provenance = provenance(name, g, params);
    let mut body = report.body;
    body.insert("provenance".into(), provenance);
    let format = if report.json_only {
        Format::Json
    } else {
        g.format
    };
    Ok(render(&body, format, report.rows_key))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("arguments serialize")
}

fn provenance(command: &str, g: &GlobalOpts, params: Value) -> Value {
    let mut parameters = match to_value(g) {
        Value::Object(m) => m,
        _ => Map::new(),
    };
    if let Value::Object(m) = params {
        parameters.extend(flatten_sample(m));
    }
    json!({
        "tool": "fano",
        "version": VERSION,
        "command": command,
        "seed": g.seed,
        "parameters": Value::Object(parameters),
    })
}

/// Lifts the flattened `sample` group to the top level.
fn flatten_sample(m: Map<String, Value>) -> Map<String, Value> {
    let mut out = Map::new();
    for (k, v) in m {
        match (k.as_str(), v) {
            ("sample", Value::Object(inner)) => out.extend(inner),
            (_, v) => {
                out.insert(k, v);
            }
        }
    }
    out
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

/// Inline JSON or the path of a file holding it.
fn plane_text(arg: &str) -> CliResult<String> {
    if arg.trim_start().starts_with('[') {
        Ok(arg.to_string())
    } else {
        read_text(Path::new(arg))
    }
}

fn require<T: Clone>(v: &Option<T>, flag: &str, why: &str) -> CliResult<T> {
    v.clone()
        .ok_or_else(|| CliError::Usage(format!("missing {flag}: {why}")))
}

fn plane_rows<F: Field>(plane: &Plane<F>) -> Value {
    let f = plane.field();
    Value::Array(
        plane
            .basis()
            .to_rows()
            .iter()
            .map(|r| Value::Array(r.iter().map(|c| Value::String(f.format(c))).collect()))
            .collect(),
    )
}

fn float_plane_rows(p: &FloatPlane) -> Value {
    json!(p
        .basis()
        .row_iter()
        .map(|r| r.iter().copied().collect::<Vec<f64>>())
        .collect::<Vec<_>>())
}

fn classification_name(c: &Classification) -> String {
    match to_value(c) {
        Value::String(s) => s,
        other => other.to_string(),
    }
}

// ---------------------------------------------------------------- dims

fn cmd_dims(a: &DimsArgs) -> CliResult<Report> {
    let d = MultiDegree::new(a.degrees.clone())?;
    let p = FanoParams::new(a.n, a.k, d)?;
    let identifiable = dims::identifiable(&p)?;
    let mut body = Map::new();
    body.insert("n".into(), json!(a.n));
    body.insert("k".into(), json!(a.k));
    body.insert("degrees".into(), json!(a.degrees));
    body.insert(
        "grassmannian_dim".into(),
        json!(p.grassmannian_dim()? as i64),
    );
    body.insert("delta".into(), json!(dims::delta(&p)? as i64));
    body.insert("identifiable".into(), json!(identifiable));
    if a.degrees.iter().all(|&d| d == 2) {
        let th = dims::min_epoch_differences(a.n, a.k)?;
        body.insert(
            "epoch_thresholds".into(),
            json!({
                "delta_based": th.delta_based,
                "sharp_closed_form": th.sharp_closed_form,
                "upper_bound": th.upper_bound,
            }),
        );
    }
    body.insert(
        "forward_differences".into(),
        to_value(&dims::forward_differences(&p)?),
    );
    body.insert(
        "stratification".into(),
        to_value(&dims::stratification_table(&p)?),
    );
    Ok(Report {
        body,
        rows_key: Some("stratification"),
        json_only: false,
    })
}

// ---------------------------------------------------------------- gen

struct Shape {
    n: usize,
    k: usize,
    degrees: Vec<u32>,
}

fn shape(s: &SampleArgs) -> CliResult<Shape> {
    let why = "sampling needs the ambient dimension, plane dimension and degrees";
    let n = require(&s.n, "--n", why)?;
    let k = require(&s.k, "--k", why)?;
    let degrees = require(&s.degrees, "--degrees", why)?;
    if degrees.is_empty() {
        return Err(CliError::Usage(
            "--degrees must list at least one degree".into(),
        ));
    }
    if k >= n {
        return Err(Error::InvalidParameter(format!("need 0 <= k < n, got n={n}, k={k}")).into());
    }
    if let Some(r) = s.rank {
        if degrees.iter().any(|&d| d != 2) {
            return Err(Error::InvalidParameter(
                "--rank applies to quadric systems only (all degrees 2)".into(),
            )
            .into());
        }
        dims::require_rank_regime(k as i64, r as i64)?;
        if r > n + 1 {
            return Err(
                Error::InvalidParameter(format!("rank r = {r} exceeds n+1 = {}", n + 1)).into(),
            );
        }
    }
    Ok(Shape { n, k, degrees })
}

fn sample_instance<F: Field>(
    field: &F,
    shape: &Shape,
    s: &SampleArgs,
    rng: &mut ChaCha8Rng,
) -> CliResult<ExactInstance<F>> {
    let plane = if s.random_plane {
        random_plane(field, shape.n, shape.k, 3, rng)?
    } else {
        Plane::coordinate(field, shape.n, shape.k)?
    };
    let forms = shape
        .degrees
        .iter()
        .map(|&d| match s.rank {
            Some(r) => form_of(&random_rank_r_vanishing_quadric(
                field, shape.n, r, &plane, s.bound, rng,
            )?),
            None => random_vanishing_form(field, shape.n, d, &plane, s.bound, rng),
        })
        .collect::<fano_core::Result<Vec<_>>>()?;
    Ok(ExactInstance {
        system: PolySystem::new(forms)?,
        plane: Some(plane),
        provenance: None,
    })
}

fn verify_instance<F: Field>(inst: &ExactInstance<F>, rank: Option<usize>) -> CliResult<()> {
    let plane = inst
        .plane
        .as_ref()
        .ok_or_else(|| Error::ContractViolation("generated instance has no plane".into()))?;
    for (i, f) in inst.system.forms().iter().enumerate() {
        if !vanishes_on(f, plane)? {
            return Err(
                Error::ContractViolation(format!("form {i} does not vanish on the plane")).into(),
            );
        }
        if let Some(r) = rank {
            let got = gram_of(f)?.rank();
            if got != r {
                return Err(Error::ContractViolation(format!(
                    "quadric {i} has rank {got}, expected {r}"
                ))
                .into());
            }
        }
    }
    Ok(())
}

fn gen_with<F: Field>(field: &F, g: &GlobalOpts, a: &GenArgs) -> CliResult<InstanceFile> {
    let shape = shape(&a.sample)?;
    let mut rng = trial_rng(g.seed, 0);
    let inst = sample_instance(field, &shape, &a.sample, &mut rng)?;
    if a.verify {
        verify_instance(&inst, a.sample.rank)?;
    }
    Ok(InstanceFile::encode(&inst))
}

fn prime_field(kind: FieldKind, p: Option<u64>) -> CliResult<Option<PrimeField>> {
    match kind {
        FieldKind::Rational => Ok(None),
        FieldKind::Prime => Ok(Some(PrimeField::new(require(
            &p,
            "--p",
            "--field prime needs a characteristic",
        )?)?)),
        FieldKind::Float => Err(Error::InvalidParameter(
            "exact instances need --field rational or --field prime".into(),
        )
        .into()),
    }
}

fn cmd_gen(g: &GlobalOpts, a: &GenArgs) -> CliResult<Report> {
    let file = match prime_field(a.field, a.p)? {
        None => gen_with(&Rationals, g, a)?,
        Some(fp) => gen_with(&fp, g, a)?,
    };
    let body = match to_value(&file) {
        Value::Object(m) => m,
        _ => unreachable!("instance files are objects"),
    };
    Ok(Report {
        body,
        rows_key: None,
        json_only: true,
    })
}

// ---------------------------------------------------------------- tangent

fn load_instance(path: &Path) -> CliResult<AnyInstance> {
    Ok(parse_instance(&read_text(path)?)?)
}

fn pick_plane<F: Field>(inst: &ExactInstance<F>, arg: &Option<String>) -> CliResult<Plane<F>> {
    match arg {
        Some(text) => Ok(fano_core::io::parse_plane(
            inst.system.field(),
            &plane_text(text)?,
        )?),
        None => inst
            .plane
            .clone()
            .ok_or_else(|| CliError::Usage("the instance has no plane; pass --plane".into())),
    }
}

fn tangent_report<F: Field>(
    inst: &ExactInstance<F>,
    plane: &Plane<F>,
) -> CliResult<Map<String, Value>> {
    let ts = tangent_system(&inst.system, plane)?;
    let v = verdict(&inst.system, plane)?;
    let mut body = Map::new();
    body.insert("field".into(), to_value(&inst.system.field().desc()));
    body.insert("n".into(), json!(inst.system.n()));
    body.insert("k".into(), json!(plane.k()));
    body.insert("degrees".into(), json!(inst.system.degrees()));
    body.insert("plane".into(), plane_rows(plane));
    body.insert("delta".into(), json!(v.delta as i64));
    body.insert("equations".into(), json!(ts.matrix.rows()));
    body.insert("unknowns".into(), json!(ts.matrix.cols()));
    body.insert("rank".into(), json!(ts.rank()));
    body.insert("tangent_dim".into(), json!(v.tangent_dim));
    body.insert(
        "classification".into(),
        json!(classification_name(&v.classification)),
    );
    Ok(body)
}

fn tangent_trials<F: Field>(field: &F, g: &GlobalOpts, a: &TangentArgs) -> CliResult<Report> {
    let shape = shape(&a.sample)?;
    let mut rows = Vec::new();
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for t in 0..g.trials {
        let mut rng = trial_rng(g.seed, t as u64);
        let inst = sample_instance(field, &shape, &a.sample, &mut rng)?;
        let plane = inst
            .plane
            .clone()
            .expect("sampled instances carry their plane");
        let v = verdict(&inst.system, &plane)?;
        let name = classification_name(&v.classification);
        *counts.entry(name.clone()).or_default() += 1;
        rows.push(json!({"trial": t, "delta": v.delta as i64, "tangent_dim": v.tangent_dim, "classification": name}));
    }
    let mut body = Map::new();
    body.insert("field".into(), to_value(&field.desc()));
    body.insert("n".into(), json!(shape.n));
    body.insert("k".into(), json!(shape.k));
    body.insert("degrees".into(), json!(shape.degrees));
    body.insert("classification_counts".into(), to_value(&counts));
    body.insert("trials".into(), Value::Array(rows));
    Ok(Report {
        body,
        rows_key: Some("trials"),
        json_only: false,
    })
}

fn cmd_tangent(g: &GlobalOpts, a: &TangentArgs) -> CliResult<Report> {
    let Some(path) = &a.instance else {
        return match prime_field(a.field, a.p)? {
            None => tangent_trials(&Rationals, g, a),
            Some(fp) => tangent_trials(&fp, g, a),
        };
    };
    let body = match load_instance(path)? {
        AnyInstance::Rational(i) => tangent_report(&i, &pick_plane(&i, &a.plane)?)?,
        AnyInstance::Prime(i) => tangent_report(&i, &pick_plane(&i, &a.plane)?)?,
    };
    Ok(Report {
        body,
        rows_key: None,
        json_only: false,
    })
}

// ---------------------------------------------------------------- census

fn reduce_plane(plane: &Plane<Rationals>, fp: &PrimeField) -> CliResult<Plane<PrimeField>> {
    let rows = plane
        .basis()
        .to_rows()
        .iter()
        .map(|r| {
            r.iter()
                .map(|c| {
                    fp.reduce_rational(c).ok_or_else(|| {
                        Error::InvalidParameter(format!(
                            "plane entry {c} has a denominator divisible by {}",
                            fp.modulus()
                        ))
                    })
                })
                .collect::<fano_core::Result<Vec<_>>>()
        })
        .collect::<fano_core::Result<Vec<_>>>()?;
    let m = Matrix::from_rows(fp, rows);
    let reduced = canonicalize(&m)?;
    if reduced.k() != plane.k() {
        return Err(Error::InvalidParameter(format!(
            "the plane drops rank modulo {}",
            fp.modulus()
        ))
        .into());
    }
    Ok(reduced)
}

fn census_points(
    sys: &PolySystem<PrimeField>,
    k: usize,
    plane: Option<&Plane<PrimeField>>,
    budget: u64,
) -> CliResult<Map<String, Value>> {
    let points = fano_points_fq(sys, k, budget as u128)?;
    let mut lines = Vec::new();
    for pt in &points {
        let td = tangent_dim(sys, pt)?;
        let mut row = Map::new();
        row.insert("basis".into(), plane_rows(pt));
        row.insert("tangent_dim".into(), json!(td));
        if let Some(l) = plane {
            row.insert(
                "intersection_dim".into(),
                json!(fano_core::grass::intersection_dim(pt, l)?),
            );
        }
        lines.push(Value::Object(row));
    }
    let mut body = Map::new();
    body.insert("count".into(), json!(points.len()));
    if let Some(l) = plane {
        let strata = stratify(&points, l)?;
        body.insert(
            "strata".into(),
            Value::Object(
                strata
                    .iter()
                    .map(|(k, v)| (k.to_string(), json!(v)))
                    .collect(),
            ),
        );
    }
    body.insert("planes".into(), Value::Array(lines));
    Ok(body)
}

fn cmd_census(g: &GlobalOpts, a: &CensusArgs) -> CliResult<Report> {
    let fp = PrimeField::new(a.q)?;
    let Some(path) = &a.instance else {
        return census_trials(&fp, g, a);
    };
    let inst = match load_instance(path)? {
        AnyInstance::Prime(i) => {
            if i.system.field().modulus() != a.q {
                return Err(Error::InvalidParameter(format!(
                    "instance is over F_{}, but --q is {}",
                    i.system.field().modulus(),
                    a.q
                ))
                .into());
            }
            i
        }
        AnyInstance::Rational(i) => ExactInstance {
            system: i.system.reduce_mod(&fp)?,
            plane: i.plane.as_ref().map(|p| reduce_plane(p, &fp)).transpose()?,
            provenance: None,
        },
    };
    let n = inst.system.n();
    if let Some(want) = a.sample.n {
        if want != n {
            return Err(Error::InvalidParameter(format!(
                "--n is {want}, but the instance lives in P^{n}"
            ))
            .into());
        }
    }
    let plane = match &a.plane {
        Some(_) => Some(pick_plane(&inst, &a.plane)?),
        None => inst.plane.clone(),
    };
    let k = match (a.sample.k, &plane) {
        (Some(k), Some(p)) if k != p.k() => {
            return Err(Error::InvalidParameter(format!(
                "--k is {k}, but the plane has dimension {}",
                p.k()
            ))
            .into())
        }
        (Some(k), _) => k,
        (None, Some(p)) => p.k(),
        (None, None) => {
            return Err(CliError::Usage(
                "missing --k: the instance has no plane to take it from".into(),
            ))
        }
    };
    if k >= n {
        return Err(Error::InvalidParameter(format!("need 0 <= k < n, got n={n}, k={k}")).into());
    }
    let mut body = Map::new();
    body.insert("q".into(), json!(a.q));
    body.insert("n".into(), json!(n));
    body.insert("k".into(), json!(k));
    body.insert("degrees".into(), json!(inst.system.degrees()));
    if let Some(p) = &plane {
        body.insert("plane".into(), plane_rows(p));
    }
    body.extend(census_points(&inst.system, k, plane.as_ref(), g.budget)?);
    Ok(Report {
        body,
        rows_key: Some("planes"),
        json_only: false,
    })
}

fn census_trials(fp: &PrimeField, g: &GlobalOpts, a: &CensusArgs) -> CliResult<Report> {
    let shape = shape(&a.sample)?;
    let mut rows = Vec::new();
    let mut unique = 0;
    for t in 0..g.trials {
        let mut rng = trial_rng(g.seed, t as u64);
        let inst = sample_instance(fp, &shape, &a.sample, &mut rng)?;
        let plane = inst
            .plane
            .clone()
            .expect("sampled instances carry their plane");
        let points = fano_points_fq(&inst.system, shape.k, g.budget as u128)?;
        let strata = stratify(&points, &plane)?;
        let tangent = points
            .iter()
            .map(|pt| tangent_dim(&inst.system, pt))
            .collect::<fano_core::Result<Vec<_>>>()?;
        if points.len() == 1 {
            unique += 1;
        }
        rows.push(json!({
            "trial": t,
            "count": points.len(),
            "strata": Value::Object(strata.iter().map(|(k, v)| (k.to_string(), json!(v))).collect()),
            "max_tangent_dim": tangent.iter().copied().max().unwrap_or(0),
        }));
    }
    let params = FanoParams::new(
        shape.n as i64,
        shape.k as i64,
        MultiDegree::new(shape.degrees.clone())?,
    )?;
    let mut body = Map::new();
    body.insert("q".into(), json!(a.q));
    body.insert("n".into(), json!(shape.n));
    body.insert("k".into(), json!(shape.k));
    body.insert("degrees".into(), json!(shape.degrees));
    body.insert("delta".into(), json!(dims::delta(&params)? as i64));
    body.insert("unique_trials".into(), json!(unique));
    body.insert("trials".into(), Value::Array(rows));
    Ok(Report {
        body,
        rows_key: Some("trials"),
        json_only: false,
    })
}

// ---------------------------------------------------------------- ssa

fn cmd_ssa_gen(g: &GlobalOpts, a: &SsaGenArgs) -> CliResult<Report> {
    let mut opts = InstanceOptions::new(a.n, a.k, a.s).mean_shift(!a.no_mean_shift);
    if let Some(r) = a.rank {
        opts = opts.rank(r);
    }
    let mut rng = trial_rng(g.seed, 0);
    let inst = generate_instance(&opts, &mut rng)?;
    if let Some(m) = a.samples {
        let dir = require(
            &a.csv_dir,
            "--csv-dir",
            "--samples writes one CSV file per epoch",
        )?;
        fs::create_dir_all(&dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        let mut sample_rng = trial_rng(g.seed, 1);
        for (i, x) in sample_epochs(&inst, m, &mut sample_rng)?.iter().enumerate() {
            let path = dir.join(format!("epoch{i}.csv"));
            let file = fs::File::create(&path)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            write_epoch_csv(std::io::BufWriter::new(file), x)?;
        }
    }
    let body = match to_value(&PopulationFile::encode(&inst, None)) {
        Value::Object(m) => m,
        _ => unreachable!("population files are objects"),
    };
    Ok(Report {
        body,
        rows_key: None,
        json_only: true,
    })
}

fn cmd_ssa_report(a: &SsaReportArgs) -> CliResult<Report> {
    let r = identifiability_report(a.n, a.k, a.s, a.r)?;
    let body = match to_value(&r) {
        Value::Object(mut m) => {
            m.insert("delta".into(), json!(r.delta as i64));
            m
        }
        _ => unreachable!("reports are objects"),
    };
    Ok(Report {
        body,
        rows_key: None,
        json_only: false,
    })
}

fn cmd_ssa_recover(g: &GlobalOpts, a: &SsaRecoverArgs) -> CliResult<Report> {
    let population = a
        .population
        .as_ref()
        .map(|p| read_text(p).and_then(|t| Ok(parse_population(&t)?)))
        .transpose()?;
    let estimated = !a.csv.is_empty();
    let (epochs, truth): (Vec<EpochCumulants>, Option<FloatPlane>) = match (population, estimated) {
        (Some(inst), false) => (inst.epochs, inst.ground_truth),
        (pop, true) => {
            let epochs = a
                .csv
                .iter()
                .map(|p| {
                    let f = fs::File::open(p)
                        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", p.display())))?;
                    Ok(estimate_cumulants(
                        &read_epoch_csv(f)?,
                        CovarianceDivisor::Unbiased,
                    )?)
                })
                .collect::<CliResult<Vec<_>>>()?;
            (epochs, pop.and_then(|i| i.ground_truth))
        }
        (None, false) => {
            return Err(CliError::Usage(
                "pass --population, --csv, or both (the population then supplies the ground truth)"
                    .into(),
            ))
        }
    };
    let dim = epochs.first().map_or(0, EpochCumulants::dim);
    let system = difference_system(&epochs)?;
    let opts = RecoveryOptions {
        restarts: a.restarts,
        max_iter: a.max_iter,
        ..RecoveryOptions::default()
    };
    let mut rng = trial_rng(g.seed, 0);
    // Estimated cumulants keep their noisy linear forms in the objective.
    let (effective_n, quadric_count, rec) = if estimated {
        let rec = recover_from_estimates(&epochs, a.k, &opts, &mut rng)?;
        (dim.saturating_sub(1), system.quadrics.len(), rec)
    } else {
        let reduced = reduce_ambient_default(dim, &system.linear_forms, &system.quadrics, a.k)?;
        let rec = recover_from_epochs(&epochs, a.k, &opts, &mut rng)?;
        (reduced.ambient_n(), reduced.quadrics.len(), rec)
    };
    let identifiability = if quadric_count == 0 || a.k >= effective_n {
        Value::Null
    } else {
        to_value(&identifiability_report(
            effective_n as i64,
            a.k as i64,
            quadric_count as i64,
            None,
        )?)
    };
    let mut planes = Vec::new();
    let mut matches = false;
    for (i, p) in rec.planes.iter().enumerate() {
        let mut row = Map::new();
        row.insert("basis".into(), float_plane_rows(&p.plane));
        row.insert("residual".into(), json!(p.residual));
        row.insert("hits".into(), json!(p.hits));
        if let Some(t) = &truth {
            let d = subspace_distance(&p.plane, t)?;
            // Clusters come best first.
            matches |= i == 0 && d.chordal <= g.tolerance;
            row.insert("chordal_to_truth".into(), json!(d.chordal));
        }
        planes.push(Value::Object(row));
    }
    let mut body = Map::new();
    body.insert("n".into(), json!(dim.saturating_sub(1)));
    body.insert("k".into(), json!(a.k));
    body.insert("s".into(), json!(epochs.len() - 1));
    body.insert("linear_forms".into(), json!(system.linear_forms.len()));
    body.insert("quadrics".into(), json!(system.quadrics.len()));
    body.insert(
        "mode".into(),
        json!(if estimated { "estimated" } else { "population" }),
    );
    body.insert("effective_n".into(), json!(effective_n));
    body.insert("identifiability".into(), identifiability);
    body.insert("unique".into(), json!(rec.planes.len() == 1));
    if truth.is_some() {
        body.insert("matches_ground_truth".into(), json!(matches));
    }
    body.insert("diagnostics".into(), to_value(&rec.diagnostics));
    body.insert("planes".into(), Value::Array(planes));
    Ok(Report {
        body,
        rows_key: Some("planes"),
        json_only: false,
    })
}

// ---------------------------------------------------------------- rendering

fn render(body: &Map<String, Value>, format: Format, rows_key: Option<&str>) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(body).expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Table => render_table(body),
        Format::Csv => render_csv(body, rows_key),
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn render_table(body: &Map<String, Value>) -> String {
    let mut out = String::new();
    let mut tables = Vec::new();
    for (key, v) in body {
        match v {
            Value::Array(items) if items.first().is_some_and(Value::is_object) => {
                tables.push((key, items))
            }
            Value::Object(m) if key == "provenance" => {
                let _ = writeln!(out, "{key}: {}", Value::Object(m.clone()));
            }
            Value::Object(m) => {
                for (k, inner) in m {
                    let _ = writeln!(out, "{key}.{k}: {}", cell(inner));
                }
            }
            other => {
                let _ = writeln!(out, "{key}: {}", cell(other));
            }
        }
    }
    for (key, items) in tables {
        let cols: Vec<&String> = items[0]
            .as_object()
            .map(|m| m.keys().collect())
            .unwrap_or_default();
        let grid: Vec<Vec<String>> = items
            .iter()
            .map(|it| {
                cols.iter()
                    .map(|c| it.get(c.as_str()).map(cell).unwrap_or_default())
                    .collect()
            })
            .collect();
        let widths: Vec<usize> = cols
            .iter()
            .enumerate()
            .map(|(i, c)| {
                grid.iter()
                    .map(|r| r[i].len())
                    .chain([c.len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let _ = writeln!(out, "\n{key}:");
        let line = |cells: Vec<&str>| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        let _ = writeln!(out, "{}", line(cols.iter().map(|c| c.as_str()).collect()));
        for r in &grid {
            let _ = writeln!(out, "{}", line(r.iter().map(String::as_str).collect()));
        }
    }
    out
}

fn render_csv(body: &Map<String, Value>, rows_key: Option<&str>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    match rows_key.and_then(|k| body.get(k)).and_then(Value::as_array) {
        Some(items) if !items.is_empty() => {
            let cols: Vec<String> = items[0]
                .as_object()
                .map(|m| m.keys().cloned().collect())
                .unwrap_or_default();
            w.write_record(&cols).expect("in-memory write");
            for it in items {
                w.write_record(
                    cols.iter()
                        .map(|c| it.get(c.as_str()).map(cell).unwrap_or_default()),
                )
                .expect("in-memory write");
            }
        }
        _ => {
            let scalars: Vec<(&String, &Value)> = body
                .iter()
                .filter(|(_, v)| !v.is_array() && !v.is_object())
                .collect();
            w.write_record(scalars.iter().map(|(k, _)| k.as_str()))
                .expect("in-memory write");
            w.write_record(scalars.iter().map(|(_, v)| cell(v)))
                .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}
