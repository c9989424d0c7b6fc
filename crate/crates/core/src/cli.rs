//! Command-line front end: reads a manifest (or a built-in), runs one
//! subcommand and prints a JSON report.
//!
//! Exit codes: 0 passed, 1 failed check, 2 manifest error, 3 numerical abort.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::connection::{nabla_f_check, pure_family_residual, Connection};
use crate::curvature::Curvature;
use crate::curves::{
    classify_curve, energy, integrate_geodesic, integrate_ph_curve, parallel_transport, richardson_estimate,
    surface_u_line, theorem6_check, transport_scaling_residual, write_csv, CurveState, PHCoefficients,
};
use crate::error::{Error, Result};
use crate::expr::{parse, Expression};
use crate::manifest::{Manifest, BUILTIN_NAMES, SCHEMA_VERSION};
use crate::report::{CheckReport, Detail, MaxTracker};
use crate::sampling::Sampling;
use crate::tensor::{is_hybrid, is_pure, multi_indices};
use crate::verify::{Outcome, Overrides, Target, Verifier};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "nilgeom", version, about = "Checks tensor identities on charts with a nilpotent structure")]
pub struct Cli {
    /// Manifest file (TOML).
    #[arg(long, global = true, conflicts_with = "builtin")]
    pub manifest: Option<PathBuf>,
    /// Built-in manifest: flat-B, curved-B, lifted-curved, kahler-4.
    #[arg(long, global = true)]
    pub builtin: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub points: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Trajectory CSV output.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Metric symmetry and nondegeneracy, f² = 0, rank f.
    Validate,
    /// Levi-Civita coefficients, torsion and metricity.
    Christoffel,
    /// Riemann tensor and its algebraic identities.
    Curvature,
    /// Purity or hybridity of the metric, the connection or the curvature.
    Purity {
        #[arg(long, value_enum, default_value = "metric")]
        target: PurityTarget,
        /// Slot pair, e.g. `--pair 0,1`.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        pair: Option<Vec<usize>>,
        #[arg(long)]
        hybrid: bool,
    },
    /// Complete lift of the [base] connection.
    Lift,
    /// Check one statement, or all of them.
    Verify {
        target: VerifyTarget,
        /// Conformal factor, overriding [conformal] h.
        #[arg(long)]
        h: Option<String>,
    },
    /// Integrate the geodesic from [curve].
    Geodesic,
    /// Integrate the forced curve from [curve] with coefficients a, b.
    PhCurve,
    /// Parallel transport of w0 along the [curve] geodesic.
    Transport,
    /// u-lines of the surface over the [surface] base geodesic.
    Surface,
    /// List built-in manifests.
    Builtins,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PurityTarget {
    Metric,
    Connection,
    Curvature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyTarget {
    Lemma1,
    Lemma2,
    Assertion1,
    Assertion2,
    Assertion3,
    Assertion4,
    Assertion5,
    Theorem1,
    Theorem2,
    Theorem3,
    Theorem4,
    Theorem5,
    Theorem6,
    Theorem7,
    CorollaryG,
    All,
}

impl VerifyTarget {
    fn targets(self) -> Vec<Target> {
        let name = self.to_possible_value().expect("no skipped variants").get_name().to_string();
        match Target::from_name(&name) {
            Some(t) => vec![t],
            None => Target::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Skipped {
    pub target: String,
    pub reason: String,
}

/// Top-level JSON document.
#[derive(Debug, Serialize)]
pub struct Envelope {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: String,
    pub manifest: String,
    pub manifest_digest: String,
    pub sampling: Sampling,
    pub passed: bool,
    pub max_residual: f64,
    pub points_sampled: usize,
    pub reports: Vec<CheckReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<Skipped>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<Value>,
}

impl Envelope {
    fn new(command: &str, manifest: &Manifest, sampling: Sampling) -> Self {
        Envelope {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION,
            command: command.to_string(),
            manifest: manifest.name.clone(),
            manifest_digest: manifest.digest.clone(),
            sampling,
            passed: true,
            max_residual: 0.0,
            points_sampled: 0,
            reports: Vec::new(),
            skipped: Vec::new(),
            data: None,
        }
    }

    fn add(&mut self, report: CheckReport) {
        self.passed &= report.passed;
        if report.max_residual.is_nan() || self.max_residual.is_nan() {
            self.max_residual = f64::NAN;
        } else {
            self.max_residual = self.max_residual.max(report.max_residual);
        }
        self.points_sampled += report.points_sampled;
        self.reports.push(report);
    }
}

/// Parses arguments and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(passed) => i32::from(!passed),
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        _ if e.is_numerical() => 3,
        Error::Precondition(_) => 1,
        _ => 2,
    }
}

fn load(cli: &Cli) -> Result<Manifest> {
    match (&cli.manifest, &cli.builtin) {
        (Some(path), _) => Manifest::load(path),
        (None, Some(name)) => Manifest::builtin(name).ok_or_else(|| {
            Error::manifest("builtin", format!("unknown built-in `{name}` (known: {})", BUILTIN_NAMES.join(", ")))
        }),
        (None, None) => Err(Error::manifest("cli", "pass --manifest PATH or --builtin NAME")),
    }
}

fn sampling_for(cli: &Cli, manifest: &Manifest) -> Result<Sampling> {
    let mut s = manifest.sampling;
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    if let Some(points) = cli.points {
        if points == 0 {
            return Err(Error::manifest("cli", "--points must be positive"));
        }
        s.points = points;
    }
    if let Some(tol) = cli.tol {
        if !(tol > 0.0) {
            return Err(Error::manifest("cli", "--tol must be positive"));
        }
        s.tol = tol;
    }
    Ok(s)
}

fn emit(cli: &Cli, envelope: &Envelope) -> Result<()> {
    let mut text = serde_json::to_string_pretty(envelope).expect("report serializes");
    text.push('\n');
    match &cli.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::manifest("cli", format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| Error::manifest("cli", e.to_string()))
        }
    }
}

fn write_trajectory(cli: &Cli, states: &[CurveState]) -> Result<()> {
    if let Some(path) = &cli.csv {
        let file = std::fs::File::create(path)
            .map_err(|e| Error::manifest("cli", format!("cannot create {}: {e}", path.display())))?;
        write_csv(states, std::io::BufWriter::new(file)).map_err(|e| Error::manifest("cli", e.to_string()))?;
    }
    Ok(())
}

fn components_json(components: &[Expression], dim: usize, rank: usize, names: &[String]) -> Value {
    let entries: Vec<Value> = multi_indices(dim, rank)
        .zip(components)
        .filter(|(_, e)| !e.is_zero())
        .map(|(idx, e)| {
            json!({
                "index": idx.iter().map(|i| i + 1).collect::<Vec<_>>(),
                "expr": e.display_with(names).to_string(),
            })
        })
        .collect();
    Value::Array(entries)
}

fn need<'a, T>(value: &'a Option<T>, section: &str) -> Result<&'a T> {
    value.as_ref().ok_or_else(|| Error::manifest(section, "section required by this command"))
}

fn execute(cli: &Cli) -> Result<bool> {
    if let Command::Builtins = cli.command {
        let mut out = std::io::stdout().lock();
        for name in BUILTIN_NAMES {
            writeln!(out, "{name}").map_err(|e| Error::manifest("cli", e.to_string()))?;
        }
        return Ok(true);
    }
    let manifest = load(cli)?;
    let sampling = sampling_for(cli, &manifest)?;
    let names = manifest.chart.coords.clone();
    let dim = manifest.dim();
    let metric = &manifest.chart.metric;
    let f = &manifest.chart.f;
    let command_name = match &cli.command {
        Command::Verify { target, .. } => format!("verify {}", target.to_possible_value().expect("visible").get_name()),
        Command::Purity { target, .. } => format!("purity {}", target.to_possible_value().expect("visible").get_name()),
        Command::Validate => "validate".into(),
        Command::Christoffel => "christoffel".into(),
        Command::Curvature => "curvature".into(),
        Command::Lift => "lift".into(),
        Command::Geodesic => "geodesic".into(),
        Command::PhCurve => "ph-curve".into(),
        Command::Transport => "transport".into(),
        Command::Surface => "surface".into(),
        Command::Builtins => "builtins".into(),
    };
    let mut env = Envelope::new(&command_name, &manifest, sampling);

    match &cli.command {
        Command::Builtins => unreachable!(),
        Command::Validate => {
            let mut report = manifest.chart.validate(&sampling)?;
            let kind = match manifest.kind {
                Some(crate::manifold::MetricType::BType) => "B",
                Some(crate::manifold::MetricType::KaehlerType) => "kaehler",
                None => "neither pure nor hybrid",
            };
            report.push(Detail::note("metric_type", kind));
            env.add(report);
        }
        Command::Christoffel => {
            let gamma = Connection::christoffel(metric)?;
            let torsion = gamma.torsion_residual(&sampling)?;
            let nabla_g = gamma.covariant_derivative(metric)?;
            let mut t = MaxTracker::default();
            let mut scale = 0.0f64;
            for p in sampling.sample_points(dim) {
                t.observe(nabla_g.evaluate(&p)?.max_abs(), &p);
                scale = scale.max(metric.evaluate(&p)?.max_abs());
            }
            let mut report = CheckReport::new("christoffel", sampling.points);
            report
                .push(Detail::check("torsion", torsion, sampling.tol))
                .push(t.detail("metricity", sampling.tol * (1.0 + scale)));
            env.add(report);
            env.data = Some(json!({ "christoffel": components_json(&gamma.coeffs, dim, 3, &names) }));
        }
        Command::Curvature => {
            let r = Curvature::riemann(&Connection::christoffel(metric)?);
            env.add(r.identities(Some(metric), &sampling)?);
            env.data = Some(json!({ "riemann": components_json(&r.components, dim, 4, &names) }));
        }
        Command::Purity { target, pair, hybrid } => {
            let (a, b) = match pair.as_deref() {
                Some([a, b]) => (*a, *b),
                _ => (0, 1),
            };
            let check = |t: &crate::tensor::TensorField| -> Result<CheckReport> {
                if a.max(b) >= t.rank() || a == b {
                    return Err(Error::manifest(
                        "cli",
                        format!("pair ({a},{b}) is not a pair of distinct slots of a rank-{} tensor", t.rank()),
                    ));
                }
                if *hybrid {
                    is_hybrid(t, a, b, f, &sampling)
                } else {
                    is_pure(t, a, b, f, &sampling)
                }
            };
            match target {
                PurityTarget::Metric => env.add(check(metric)?),
                PurityTarget::Connection => env.add(Connection::christoffel(metric)?.purity(f, &sampling)?),
                PurityTarget::Curvature => {
                    let r = Curvature::riemann(&Connection::christoffel(metric)?);
                    env.add(check(&r.lowered(metric)?)?);
                }
            }
        }
        Command::Lift => {
            let base = need(&manifest.base_metric, "base")?;
            if manifest.chart.m != 0 {
                return Err(Error::manifest("manifold", "lift needs m = 0"));
            }
            let lift = Connection::christoffel(base)?.complete_lift()?;
            env.add(pure_family_residual(&lift, manifest.chart.n, 0, &sampling)?);
            env.add(lift.purity(f, &sampling)?);
            env.add(nabla_f_check(&lift, f, &sampling)?);
            env.data = Some(json!({ "lifted_connection": components_json(&lift.coeffs, dim, 3, &names) }));
        }
        Command::Verify { target, h } => {
            let overrides = Overrides {
                h: h.as_deref()
                    .map(|t| parse(t, &names).map_err(|e| Error::manifest("cli", format!("--h: {e}"))))
                    .transpose()?,
            };
            let mut verifier = Verifier::new(&manifest, sampling, overrides);
            let single = *target != VerifyTarget::All;
            for t in target.targets() {
                match verifier.run(t) {
                    Ok(Outcome::Report(r)) => env.add(r),
                    Ok(Outcome::Skipped(reason)) if single => {
                        return Err(Error::Precondition(format!("{}: {reason}", t.name())))
                    }
                    Ok(Outcome::Skipped(reason)) => env.skipped.push(Skipped { target: t.name().into(), reason }),
                    Err(Error::Precondition(reason)) if !single => {
                        env.add(CheckReport::new(t.name(), 0).with(Detail::flag("precondition", false, reason)));
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        Command::Geodesic | Command::PhCurve | Command::Transport => {
            let c = need(&manifest.curve, "curve")?;
            let gamma = Connection::christoffel(metric)?;
            let coeffs =
                if matches!(cli.command, Command::PhCurve) { c.coeffs.clone() } else { PHCoefficients::zero() };
            let states = integrate_ph_curve(&gamma, f, &c.z0, &c.v0, &coeffs, c.t_end, c.step)?;
            let rich = richardson_estimate(&gamma, f, &c.z0, &c.v0, &coeffs, c.t_end, c.step)?;
            let e = energy(metric, &states)?;
            let classification = classify_curve(&gamma, f, &states)?;
            let mut report = CheckReport::new(command_name.clone(), states.len());
            report.push(Detail::value("richardson_estimate", rich));
            match &cli.command {
                Command::Geodesic => {
                    let drift = e.iter().fold(0.0f64, |m, x| m.max((x - e[0]).abs()));
                    report.push(Detail::check("energy_drift", drift, 1e-6));
                    for d in &classification.report.details {
                        report.push(d.clone());
                    }
                }
                Command::PhCurve => {
                    let (mut da, mut db) = (MaxTracker::default(), MaxTracker::default());
                    for fit in &classification.fits {
                        let at = [fit.t];
                        da.observe(fit.a - c.coeffs.a.eval(&at)?, &at);
                        if let Some(b) = fit.b {
                            db.observe(b - c.coeffs.b.eval(&at)?, &at);
                        }
                    }
                    for d in &classification.report.details {
                        report.push(d.clone());
                    }
                    report.push(da.detail("fitted_a", 1e-4)).push(db.detail("fitted_b", 1e-4));
                }
                _ => {
                    let w0 = c.w0.clone().unwrap_or_else(|| c.v0.clone());
                    let w = parallel_transport(&gamma, &states, &w0)?;
                    let norms: Vec<f64> = states
                        .iter()
                        .zip(&w)
                        .map(|(s, v)| Ok(metric.evaluate(&s.z)?.bilinear(v, v)))
                        .collect::<Result<_>>()?;
                    let drift = norms.iter().fold(0.0f64, |m, x| m.max((x - norms[0]).abs()));
                    let own = parallel_transport(&gamma, &states, &c.v0)?;
                    let self_res = states
                        .iter()
                        .zip(&own)
                        .flat_map(|(s, v)| s.zdot.iter().zip(v).map(|(a, b)| (a - b).abs()))
                        .fold(0.0f64, f64::max);
                    let lambda = parse("1 + t^2", &["t".to_string()])?;
                    let scaling = transport_scaling_residual(&gamma, &states, &w0, &lambda)?;
                    report
                        .push(Detail::check("transported_norm_drift", drift, 1e-6))
                        .push(Detail::check("velocity_self_transport", self_res, 1e-6))
                        .push(Detail::check("scaling_law", scaling, 1e-6));
                    env.data = Some(json!({ "transported": w.last() }));
                }
            }
            env.add(report);
            if env.data.is_none() {
                env.data = Some(json!({ "samples": states.len(), "final": states.last() }));
            }
            write_trajectory(cli, &states)?;
        }
        Command::Surface => {
            let s = need(&manifest.surface, "surface")?;
            let base = need(&manifest.base_metric, "base")?;
            let base_gamma = Connection::christoffel(base)?;
            let curve = integrate_geodesic(&base_gamma, &s.z0, &s.v0, s.u_end, s.step)?;
            env.add(theorem6_check(&base_gamma, &curve, &s.v, 1e-5)?);
            let mut lines = Vec::new();
            for &v in &s.v {
                lines.extend(surface_u_line(&curve, v)?);
            }
            env.data = Some(json!({ "u_lines": s.v.len(), "samples_per_line": curve.len() }));
            write_trajectory(cli, &lines)?;
        }
    }
    let passed = env.passed;
    emit(cli, &env)?;
    Ok(passed)
}
