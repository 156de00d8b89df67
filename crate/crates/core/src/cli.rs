//! Command-line front end. Exit codes: 0 certified or valid, 2 completed but
//! not certified, not converged or not valid, 1 usage or input error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};

use crate::config::Config;
use crate::equipartition::{certify, solve, SolveOptions};
use crate::error::{Error, Result};
use crate::fan::{validate_fan, ConeLabel, Fan};
use crate::group::GroupTable;
use crate::inscription::{solve_inscription, verify_inscription, ConvexBody, InscriptionOptions};
use crate::measure::{cone_masses, GaussianComponent, MassMode, Measure};
use crate::motion::RigidMotion;
use crate::report::Report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_UNCERTIFIED: i32 = 2;

/// Orthogonality defect above which a supplied rotation is rejected.
pub const SUPPLIED_ROTATION_TOL: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(
    name = "fanpart",
    version,
    about = "Fan equipartition and crosspolytope inscription solvers"
)]
struct Cli {
    #[command(subcommand)]
    task: Task,
}

#[derive(Subcommand, Debug)]
enum Task {
    /// Search for a rigid motion equipartitioning a measure, then certify it.
    Equipartition(Flags),
    /// Inscribe a rotated regular crosspolytope in a convex body.
    Inscribe(Flags),
    /// Check the fan axioms for a generator.
    ValidateFan(Flags),
    /// Cone masses of a sampled cloud under a supplied motion.
    Masses(Flags),
    /// Write a sampled cloud as CSV.
    Sample(Flags),
}

/// Flags override the same-named configuration keys.
#[derive(Args, Debug, Clone, Default)]
struct Flags {
    /// Configuration file (`key = value`, `[section]` headers).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    k: Option<String>,
    /// Fan generator, comma separated.
    #[arg(long = "fan-v", allow_hyphen_values = true)]
    fan_v: Option<String>,
    /// `ball:C:R`, `mixture:W@MEAN@COV;…` or `csv:PATH`.
    #[arg(long)]
    measure: Option<String>,
    /// `ball:C:R`, `ellipsoid:C:AXES|Q` or `lq:C:SCALES:Q`.
    #[arg(long)]
    body: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    multistarts: Option<String>,
    #[arg(long = "beta-max")]
    beta_max: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long = "polish-evaluations")]
    polish_evaluations: Option<String>,
    #[arg(long = "oracle-n")]
    oracle_n: Option<String>,
    #[arg(long = "oracle-seed")]
    oracle_seed: Option<String>,
    #[arg(long = "oracle-tol")]
    oracle_tol: Option<String>,
    #[arg(long = "gauge-tol")]
    gauge_tol: Option<String>,
    /// Use the identity motion.
    #[arg(long)]
    identity: bool,
    /// Rotation matrix, row-major, comma or semicolon separated.
    #[arg(long, allow_hyphen_values = true)]
    rotation: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    translation: Option<String>,
    #[arg(long)]
    threads: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

impl Flags {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let pairs = [
            ("group.p", &self.p),
            ("group.k", &self.k),
            ("fan.v", &self.fan_v),
            ("measure.spec", &self.measure),
            ("body.spec", &self.body),
            ("sample.n", &self.n),
            ("sample.seed", &self.seed),
            ("solve.multistarts", &self.multistarts),
            ("solve.beta_max", &self.beta_max),
            ("solve.tol", &self.tol),
            ("solve.polish_evaluations", &self.polish_evaluations),
            ("oracle.n", &self.oracle_n),
            ("oracle.seed", &self.oracle_seed),
            ("oracle.tol", &self.oracle_tol),
            ("inscribe.gauge_tol", &self.gauge_tol),
            ("motion.rotation", &self.rotation),
            ("motion.translation", &self.translation),
            ("run.threads", &self.threads),
            ("run.out", &self.out),
        ];
        let mut out: Vec<_> = pairs
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
            .collect();
        if self.identity {
            out.push(("motion.identity", "true".into()));
        }
        out
    }

    fn config(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                Config::parse(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
            }
            None => Config::default(),
        };
        for (k, v) in self.overrides() {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }
}

/// Numbers separated by commas, semicolons or whitespace.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split([',', ';', ' '])
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| Error::Parse(format!("`{t}` in `{s}`: {e}")))
        })
        .collect()
}

/// A list of length `d`; a single value is repeated.
fn parse_point(s: &str, d: usize, what: &str) -> Result<Vec<f64>> {
    let v = parse_list(s)?;
    match v.len() {
        1 => Ok(vec![v[0]; d]),
        n if n == d => Ok(v),
        n => Err(Error::Parse(format!("{what}: expected {d} values, got {n}"))),
    }
}

fn parse_square(s: &str, d: usize, what: &str) -> Result<DMatrix<f64>> {
    let v = parse_list(s)?;
    if v.len() != d * d {
        return Err(Error::Parse(format!(
            "{what}: expected {} entries, got {}",
            d * d,
            v.len()
        )));
    }
    Ok(DMatrix::from_row_slice(d, d, &v))
}

/// Parses a measure string for dimension `d`.
pub fn parse_measure(spec: &str, d: usize) -> Result<Measure> {
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("measure `{spec}`: expected KIND:PARAMS")))?;
    match kind {
        "ball" => {
            let (c, r) = rest
                .rsplit_once(':')
                .ok_or_else(|| Error::Parse(format!("measure `{spec}`: expected ball:CENTER:RADIUS")))?;
            let r = r
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("ball radius `{r}`: {e}")))?;
            Measure::uniform_ball(parse_point(c, d, "ball center")?, r)
        }
        "mixture" | "gauss" => {
            let mut comps = Vec::new();
            for part in rest.split(';').filter(|p| !p.trim().is_empty()) {
                let fields: Vec<&str> = part.split('@').collect();
                let [w, mean, cov] = fields[..] else {
                    return Err(Error::Parse(format!("mixture component `{part}`: expected W@MEAN@COV")));
                };
                let w = w
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("weight `{w}`: {e}")))?;
                let mean = parse_point(mean, d, "component mean")?;
                let cov_values = parse_list(cov)?;
                let cov = match cov_values.len() {
                    1 => DMatrix::identity(d, d) * cov_values[0],
                    _ => parse_square(cov, d, "component covariance")?,
                };
                comps.push(GaussianComponent::new(w, mean, cov)?);
            }
            Measure::mixture(comps)
        }
        "csv" => Measure::from_csv(rest, d),
        other => Err(Error::Parse(format!("unknown measure kind `{other}`"))),
    }
}

/// Parses a body string for dimension `d`.
pub fn parse_body(spec: &str, d: usize) -> Result<ConvexBody> {
    let parts: Vec<&str> = spec.split(':').collect();
    match parts[..] {
        ["ball", c, r] => {
            let r = r
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("ball radius `{r}`: {e}")))?;
            ConvexBody::ball(parse_point(c, d, "body center")?, r)
        }
        ["ellipsoid", c, shape] => {
            let center = parse_point(c, d, "body center")?;
            let v = parse_list(shape)?;
            if v.len() == d * d && d > 1 {
                ConvexBody::ellipsoid(center, DMatrix::from_row_slice(d, d, &v))
            } else {
                ConvexBody::ellipsoid_axes(center, &parse_point(shape, d, "semi-axes")?)
            }
        }
        ["lq", c, scales, q] => {
            let q = q
                .trim()
                .parse::<u32>()
                .map_err(|e| Error::Parse(format!("lq exponent `{q}`: {e}")))?;
            ConvexBody::lq_ball(
                parse_point(c, d, "body center")?,
                parse_point(scales, d, "lq scales")?,
                q,
            )
        }
        _ => Err(Error::Parse(format!(
            "body `{spec}`: expected ball:C:R, ellipsoid:C:AXES|Q or lq:C:SCALES:Q"
        ))),
    }
}

fn zeros(d: usize) -> String {
    vec!["0"; d].join(",")
}

fn table_of(cfg: &Config) -> Result<GroupTable> {
    GroupTable::new(cfg.parse_value("group.p")?, cfg.parse_value("group.k")?)
}

fn fan_of(cfg: &mut Config, table: &GroupTable) -> Result<Fan> {
    let d = table.order();
    if cfg.is_auto("fan.v") {
        let mut e0 = vec!["0"; d];
        e0[0] = "1";
        cfg.set("fan.v", e0.join(","))?;
    }
    let v = parse_list(cfg.get("fan.v"))?;
    Fan::voronoi(table, &v)
}

fn measure_of(cfg: &mut Config, d: usize) -> Result<Measure> {
    if cfg.is_auto("measure.spec") {
        cfg.set("measure.spec", format!("ball:{}:1", zeros(d)))?;
    }
    let m = parse_measure(cfg.get("measure.spec"), d)?;
    if m.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: m.dim(),
        });
    }
    Ok(m)
}

fn resolve(cfg: &mut Config, key: &str, value: &str) -> Result<()> {
    if cfg.is_auto(key) {
        cfg.set(key, value)?;
    }
    Ok(())
}

fn labels(d: usize) -> String {
    (0..2 * d)
        .map(|i| ConeLabel::from_index(i, d).to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Runs one task on an effective configuration. `auto` entries are resolved
/// in place so the report records what actually ran.
pub fn execute(task: &str, cfg: &mut Config) -> Result<(Report, i32)> {
    let threads: usize = cfg.parse_value("run.threads")?;
    if threads > 0 {
        // the global pool can be set once per process; later calls keep it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match task {
        "equipartition" => run_equipartition(cfg),
        "inscribe" => run_inscribe(cfg),
        "validate-fan" => run_validate_fan(cfg),
        "masses" => run_masses(cfg),
        "sample" => run_sample(cfg),
        other => Err(Error::InvalidParameter(format!("unknown task `{other}`"))),
    }
}

fn run_equipartition(cfg: &mut Config) -> Result<(Report, i32)> {
    let table = table_of(cfg)?;
    let d = table.order();
    let fan = fan_of(cfg, &table)?;
    let measure = measure_of(cfg, d)?;
    resolve(cfg, "solve.multistarts", "16")?;
    resolve(cfg, "solve.tol", "1e-6")?;
    resolve(cfg, "body.spec", "none")?;
    let seed: u64 = cfg.parse_value("sample.seed")?;
    let opts = SolveOptions {
        multistarts: cfg.parse_value("solve.multistarts")?,
        beta_max: cfg.parse_value("solve.beta_max")?,
        tolerance: cfg.parse_value("solve.tol")?,
        polish_evaluations: cfg.parse_value("solve.polish_evaluations")?,
        seed,
        ..Default::default()
    };
    let oracle_n: usize = cfg.parse_value("oracle.n")?;
    let oracle_seed: u64 = cfg.parse_value("oracle.seed")?;
    let oracle_tol: f64 = cfg.parse_value("oracle.tol")?;

    let cloud = measure.sample(cfg.parse_value("sample.n")?, seed)?;
    let result = solve(&cloud, &fan, &opts)?;
    let started = Instant::now();
    let cert = if oracle_n > 0 {
        Some(certify(&result, &measure, &fan, oracle_n, oracle_seed, oracle_tol)?)
    } else {
        None
    };
    let certify_secs = started.elapsed().as_secs_f64();

    let mut r = Report::new("equipartition");
    r.config(cfg);
    r.text("dimension", d);
    r.text("measure.kind", measure.kind());
    r.text("cloud.points", cloud.len());
    r.reals("fan.generator", fan.generator());
    r.matrix("rotation", result.motion.rotation());
    r.reals("translation", result.motion.translation().as_slice());
    r.text("labels", labels(d));
    r.reals("masses.cloud", &result.masses_hard.values());
    r.real("masses.cloud.max_deviation", result.masses_hard.max_deviation());
    r.real("residual_norm", result.residual_norm);
    r.real("count_floor", result.count_floor);
    r.text("converged", result.converged);
    r.text("best_start", result.best_start);
    r.text("starts_run", result.trace.len());
    for t in &result.trace {
        r.text(
            &format!("start[{}]", t.start),
            format!(
                "seed={} initial={} final={} polish_evaluations={} converged={}",
                t.seed,
                crate::report::num(t.initial_hard_residual),
                crate::report::num(t.final_hard_residual),
                t.polish_evaluations,
                t.converged
            ),
        );
    }
    let code = match &cert {
        Some(c) => {
            r.text("oracle.samples", c.oracle.samples);
            r.text("oracle.seed", c.oracle.seed);
            r.reals("oracle.masses", &c.oracle.masses.values());
            r.reals("oracle.std_errors", &c.oracle.std_errors);
            r.real("oracle.max_deviation", c.oracle.masses.max_deviation());
            r.real("oracle.tolerance", c.tolerance);
            for (label, m, allowed) in &c.violations {
                r.text(
                    "violation",
                    format!(
                        "{label} mass={} allowed={}",
                        crate::report::num(*m),
                        crate::report::num(*allowed)
                    ),
                );
            }
            r.text("certified", c.passed);
            if c.passed {
                EXIT_OK
            } else {
                EXIT_UNCERTIFIED
            }
        }
        None => {
            r.text("certified", "skipped");
            if result.converged {
                EXIT_OK
            } else {
                EXIT_UNCERTIFIED
            }
        }
    };
    r.text("status", if code == EXIT_OK { "ok" } else { "not-certified" });
    r.timing("solve_secs", result.elapsed_secs);
    r.timing("certify_secs", certify_secs);
    Ok((r, code))
}

fn run_inscribe(cfg: &mut Config) -> Result<(Report, i32)> {
    let table = table_of(cfg)?;
    let d = table.order();
    resolve(cfg, "body.spec", &format!("ball:{}:1", zeros(d)))?;
    resolve(cfg, "solve.multistarts", "8")?;
    resolve(cfg, "solve.tol", "1e-8")?;
    let body = parse_body(cfg.get("body.spec"), d)?;
    let opts = InscriptionOptions {
        multistarts: cfg.parse_value("solve.multistarts")?,
        tolerance: cfg.parse_value("solve.tol")?,
        seed: cfg.parse_value("sample.seed")?,
        ..Default::default()
    };
    let gauge_tol: f64 = cfg.parse_value("inscribe.gauge_tol")?;
    let started = Instant::now();
    let res = solve_inscription(&body, &table, &opts)?;
    let check = verify_inscription(&body, &res, gauge_tol);

    let mut r = Report::new("inscribe");
    r.config(cfg);
    r.text("dimension", d);
    r.text("body", &body);
    r.reals("center", &res.center);
    r.matrix("rotation", &res.rotation);
    r.real("scale", res.scale);
    for (i, v) in res.vertices.iter().enumerate() {
        r.reals(&format!("vertex[{}]", ConeLabel::from_index(i, d)), v);
    }
    r.reals("gauges", &check.gauges);
    r.real("residual_norm", res.residual_norm);
    r.text("converged", res.converged);
    r.text("best_start", res.best_start);
    r.text("starts_run", res.starts_run);
    r.real("rotation.orthogonality_defect", check.orthogonality_defect);
    for f in &check.failures {
        r.text("failure", f);
    }
    r.text("verified", check.passed);
    let code = if res.converged && check.passed {
        EXIT_OK
    } else {
        EXIT_UNCERTIFIED
    };
    r.text("status", if code == EXIT_OK { "ok" } else { "not-converged" });
    r.timing("solve_secs", started.elapsed().as_secs_f64());
    Ok((r, code))
}

fn run_validate_fan(cfg: &mut Config) -> Result<(Report, i32)> {
    let table = table_of(cfg)?;
    let d = table.order();
    let fan = fan_of(cfg, &table)?;
    let n: usize = cfg.parse_value("sample.n")?;
    let seed: u64 = cfg.parse_value("sample.seed")?;
    let started = Instant::now();
    let report = validate_fan(&fan, n, seed)?;
    let mut r = Report::new("validate-fan");
    r.config(cfg);
    r.text("dimension", d);
    r.reals("fan.generator", fan.generator());
    r.text("labels", labels(d));
    r.reals("fractions", &report.fractions);
    for (clause, msg) in &report.failures {
        r.text("failure", format!("{clause}: {msg}"));
    }
    r.text("valid", report.is_valid());
    let code = if report.is_valid() { EXIT_OK } else { EXIT_UNCERTIFIED };
    r.text("status", if code == EXIT_OK { "ok" } else { "invalid" });
    r.timing("validate_secs", started.elapsed().as_secs_f64());
    Ok((r, code))
}

fn motion_of(cfg: &Config, d: usize) -> Result<RigidMotion> {
    let identity: bool = cfg.parse_value("motion.identity")?;
    let rot = cfg.get("motion.rotation");
    let tr = cfg.get("motion.translation");
    if identity {
        if !rot.is_empty() || !tr.is_empty() {
            return Err(Error::InvalidParameter(
                "--identity excludes --rotation and --translation".into(),
            ));
        }
        return Ok(RigidMotion::identity(d));
    }
    if rot.is_empty() && tr.is_empty() {
        return Err(Error::InvalidParameter(
            "supply --identity or a motion via --rotation/--translation".into(),
        ));
    }
    let rotation = if rot.is_empty() {
        DMatrix::identity(d, d)
    } else {
        parse_square(rot, d, "rotation")?
    };
    let translation = if tr.is_empty() {
        DVector::zeros(d)
    } else {
        DVector::from_vec(parse_point(tr, d, "translation")?)
    };
    RigidMotion::with_tolerance(rotation, translation, SUPPLIED_ROTATION_TOL)
}

fn run_masses(cfg: &mut Config) -> Result<(Report, i32)> {
    let table = table_of(cfg)?;
    let d = table.order();
    let fan = fan_of(cfg, &table)?;
    let measure = measure_of(cfg, d)?;
    let motion = motion_of(cfg, d)?;
    let cloud = measure.sample(cfg.parse_value("sample.n")?, cfg.parse_value("sample.seed")?)?;
    let started = Instant::now();
    let masses = cone_masses(&cloud, &fan, &motion, MassMode::Hard)?;
    let n = cloud.len() as f64;
    let se: Vec<f64> = masses
        .values()
        .iter()
        .map(|m| (m * (1.0 - m) / n).max(0.0).sqrt())
        .collect();
    let mut r = Report::new("masses");
    r.config(cfg);
    r.text("dimension", d);
    r.text("cloud.points", cloud.len());
    r.matrix("rotation", motion.rotation());
    r.reals("translation", motion.translation().as_slice());
    r.text("labels", labels(d));
    r.reals("masses", &masses.values());
    r.reals("std_errors", &se);
    r.real("total", masses.total());
    r.real("max_deviation", masses.max_deviation());
    r.real("residual_norm", crate::equipartition::residual(&masses).norm());
    r.text("status", "ok");
    r.timing("masses_secs", started.elapsed().as_secs_f64());
    Ok((r, EXIT_OK))
}

fn run_sample(cfg: &mut Config) -> Result<(Report, i32)> {
    let table = table_of(cfg)?;
    let d = table.order();
    let measure = measure_of(cfg, d)?;
    let cloud = measure.sample(cfg.parse_value("sample.n")?, cfg.parse_value("sample.seed")?)?;
    let out = cfg.get("run.out").to_string();
    if out.is_empty() {
        let stdout = std::io::stdout();
        cloud.write_csv(stdout.lock())?;
    } else {
        let file = std::fs::File::create(&out).map_err(|e| Error::Io(format!("{out}: {e}")))?;
        cloud.write_csv(std::io::BufWriter::new(file))?;
    }
    let mut r = Report::new("sample");
    r.config(cfg);
    r.text("dimension", d);
    r.text("measure.kind", measure.kind());
    r.text("cloud.points", cloud.len());
    r.reals("cloud.mean", &cloud.mean());
    r.text("status", "ok");
    Ok((r, EXIT_OK))
}

/// Parses arguments, runs the task, prints or writes the report and returns
/// the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let (name, flags) = match &cli.task {
        Task::Equipartition(f) => ("equipartition", f),
        Task::Inscribe(f) => ("inscribe", f),
        Task::ValidateFan(f) => ("validate-fan", f),
        Task::Masses(f) => ("masses", f),
        Task::Sample(f) => ("sample", f),
    };
    let outcome = flags.config().and_then(|mut cfg| {
        let (report, code) = execute(name, &mut cfg)?;
        let out = cfg.get("run.out");
        if name != "sample" && !out.is_empty() {
            std::fs::write(out, report.to_string()).map_err(|e| Error::Io(format!("{out}: {e}")))?;
        }
        // without --out the sampled CSV itself occupies stdout
        if name != "sample" || !out.is_empty() {
            // a closed pipe (`| head`) is not worth a panic
            let mut stdout = std::io::stdout().lock();
            let _ = write!(stdout, "{report}").and_then(|_| stdout.flush());
        }
        Ok(code)
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}
