//! TOML manifests describing a chart, its metric and the inputs of the curve
//! and surface checks, plus the built-in examples.
//!
//! ```toml
//! schema_version = 1
//! name = "curved-B"
//!
//! [manifold]
//! n = 1
//!
//! [metric]
//! components = [["z1^2 + 1", "1"], ["1", "0"]]
//! ```

use std::fmt::Write as _;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::connection::OneForm;
use crate::curves::PHCoefficients;
use crate::error::{Error, Result};
use crate::expr::{default_coord_names, parse, Expression};
use crate::manifold::{adapted_f, complete_lift_metric, metric_constraint_basis, ChartManifold, MetricType};
use crate::sampling::Sampling;
use crate::tensor::{is_hybrid, is_pure, Signature, TensorField};

pub const SCHEMA_VERSION: u32 = 1;

pub const BUILTIN_NAMES: [&str; 4] = ["flat-B", "curved-B", "lifted-curved", "kahler-4"];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    schema_version: Option<u32>,
    name: Option<String>,
    manifold: RawManifold,
    metric: RawMetric,
    structure: Option<RawStructure>,
    base: Option<RawBase>,
    conformal: Option<RawConformal>,
    form: Option<RawForm>,
    sampling: Option<RawSampling>,
    curve: Option<RawCurve>,
    surface: Option<RawSurface>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifold {
    n: usize,
    #[serde(default)]
    m: usize,
    coords: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMetric {
    components: Option<Vec<Vec<String>>>,
    #[serde(default)]
    complete_lift: bool,
    #[serde(rename = "type")]
    kind: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStructure {
    f: Vec<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBase {
    metric: Vec<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConformal {
    h: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawForm {
    q: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSampling {
    points: Option<usize>,
    #[serde(rename = "box")]
    bounds: Option<[f64; 2]>,
    seed: Option<u64>,
    tolerance: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCurve {
    z0: Vec<f64>,
    v0: Vec<f64>,
    t_end: f64,
    step: f64,
    a: Option<String>,
    b: Option<String>,
    w0: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSurface {
    z0: Vec<f64>,
    v0: Vec<f64>,
    u_end: f64,
    step: f64,
    v: Vec<f64>,
    curve: Option<Vec<String>>,
    h: Option<String>,
    t: Option<String>,
}

#[derive(Debug, Clone)]
pub struct CurveSpec {
    pub z0: Vec<f64>,
    pub v0: Vec<f64>,
    pub t_end: f64,
    pub step: f64,
    pub coeffs: PHCoefficients,
    pub w0: Option<Vec<f64>>,
}

/// A base geodesic `(z0, v0)` on the base chart, the fiber values `v` of the
/// u-lines, and an optional symbolic base curve with a reparametrization `(h, t)`.
#[derive(Debug, Clone)]
pub struct SurfaceSpec {
    pub z0: Vec<f64>,
    pub v0: Vec<f64>,
    pub u_end: f64,
    pub step: f64,
    pub v: Vec<f64>,
    pub curve: Option<Vec<Expression>>,
    pub h: Expression,
    pub t: Expression,
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub schema_version: u32,
    pub name: String,
    pub chart: ChartManifold,
    /// Declared or detected; `None` when the metric is neither pure nor hybrid.
    pub kind: Option<MetricType>,
    pub base_metric: Option<TensorField>,
    pub conformal: Option<Expression>,
    pub form: Option<OneForm>,
    pub sampling: Sampling,
    pub curve: Option<CurveSpec>,
    pub surface: Option<SurfaceSpec>,
    /// Hex sha256 of the manifest text.
    pub digest: String,
}

fn parse_in(section: &str, label: &str, text: &str, scope: &[String]) -> Result<Expression> {
    parse(text, scope).map_err(|e| Error::manifest(section, format!("{label}: {e}")))
}

fn parse_matrix(
    section: &str,
    rows: &[Vec<String>],
    dim: usize,
    scope: &[String],
    signature: &str,
) -> Result<TensorField> {
    if rows.len() != dim {
        return Err(Error::manifest(section, format!("expected {dim} rows, found {}", rows.len())));
    }
    let mut components = Vec::with_capacity(dim * dim);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::manifest(
                section,
                format!("row {} has {} entries, expected {dim} (matrix must be square)", i + 1, row.len()),
            ));
        }
        for (j, text) in row.iter().enumerate() {
            components.push(parse_in(section, &format!("component [{}][{}]", i + 1, j + 1), text, scope)?);
        }
    }
    TensorField::new(dim, Signature::parse(signature), components)
}

fn check_len(section: &str, label: &str, v: &[f64], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::manifest(section, format!("{label} has {} entries, expected {dim}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::manifest(section, format!("{label} must be finite")));
    }
    Ok(())
}

impl Manifest {
    pub fn load(path: &std::path::Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::manifest("file", format!("cannot read {}: {e}", path.display())))?;
        Manifest::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Manifest> {
        let raw: Raw =
            toml::from_str(text).map_err(|e| Error::manifest("toml", e.to_string().trim_end().to_string()))?;
        let digest = hex::encode(Sha256::digest(text.as_bytes()));
        let schema_version = raw.schema_version.unwrap_or(SCHEMA_VERSION);
        if schema_version != SCHEMA_VERSION {
            return Err(Error::manifest("schema_version", format!("unsupported version {schema_version}")));
        }
        let (n, m) = (raw.manifold.n, raw.manifold.m);
        if n == 0 {
            return Err(Error::manifest("manifold", "n must be at least 1"));
        }
        let dim = 2 * n + m;
        let coords = raw.manifold.coords.unwrap_or_else(|| default_coord_names(dim));
        if coords.len() != dim {
            return Err(Error::manifest(
                "manifold",
                format!("expected {dim} coordinate names, found {}", coords.len()),
            ));
        }
        for (i, c) in coords.iter().enumerate() {
            let valid = c.chars().next().is_some_and(|ch| ch.is_ascii_alphabetic() || ch == '_')
                && c.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_');
            if !valid || crate::expr::Func::from_name(c).is_some() || coords[..i].contains(c) {
                return Err(Error::manifest("manifold", format!("invalid or repeated coordinate name `{c}`")));
            }
        }
        let base_scope = coords[..n].to_vec();

        let base_metric =
            raw.base.as_ref().map(|b| parse_matrix("base", &b.metric, n, &base_scope, "ll")).transpose()?;

        let metric = match (&raw.metric.components, raw.metric.complete_lift) {
            (Some(rows), false) => parse_matrix("metric", rows, dim, &coords, "ll")?,
            (None, true) => {
                if m != 0 {
                    return Err(Error::manifest("metric", "complete_lift needs m = 0"));
                }
                let base = base_metric
                    .as_ref()
                    .ok_or_else(|| Error::manifest("metric", "complete_lift needs a [base] metric"))?;
                complete_lift_metric(base).map_err(|e| Error::manifest("metric", e.to_string()))?
            }
            (Some(_), true) => {
                return Err(Error::manifest("metric", "give either components or complete_lift, not both"))
            }
            (None, false) => return Err(Error::manifest("metric", "missing components")),
        };

        let f = raw.structure.as_ref().map(|s| parse_matrix("structure", &s.f, dim, &coords, "ul")).transpose()?;
        let chart = ChartManifold::new(n, m, Some(coords.clone()), metric, f)
            .map_err(|e| Error::manifest("manifold", e.to_string()))?;

        let sampling = {
            let d = Sampling::default();
            match raw.sampling {
                None => d,
                Some(s) => {
                    let [lo, hi] = s.bounds.unwrap_or([d.lo, d.hi]);
                    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                        return Err(Error::manifest("sampling", "box must be [lo, hi] with lo < hi"));
                    }
                    let tol = s.tolerance.unwrap_or(d.tol);
                    if !(tol > 0.0) {
                        return Err(Error::manifest("sampling", "tolerance must be positive"));
                    }
                    let points = s.points.unwrap_or(d.points);
                    if points == 0 {
                        return Err(Error::manifest("sampling", "points must be positive"));
                    }
                    Sampling { points, lo, hi, seed: s.seed.unwrap_or(d.seed), tol }
                }
            }
        };

        let conformal = raw.conformal.as_ref().map(|c| parse_in("conformal", "h", &c.h, &coords)).transpose()?;
        let form = match &raw.form {
            None => None,
            Some(f) => {
                if f.q.len() != dim {
                    return Err(Error::manifest("form", format!("q has {} entries, expected {dim}", f.q.len())));
                }
                let q =
                    f.q.iter()
                        .enumerate()
                        .map(|(i, t)| parse_in("form", &format!("q[{}]", i + 1), t, &coords))
                        .collect::<Result<_>>()?;
                Some(OneForm(q))
            }
        };

        let t_scope = ["t".to_string()];
        let curve = match raw.curve {
            None => None,
            Some(c) => {
                check_len("curve", "z0", &c.z0, dim)?;
                check_len("curve", "v0", &c.v0, dim)?;
                if let Some(w) = &c.w0 {
                    check_len("curve", "w0", w, dim)?;
                }
                if !(c.step > 0.0) || !(c.t_end >= 0.0) || !c.t_end.is_finite() {
                    return Err(Error::manifest("curve", "need step > 0 and finite t_end >= 0"));
                }
                let a = parse_in("curve", "a", c.a.as_deref().unwrap_or("0"), &t_scope)?;
                let b = parse_in("curve", "b", c.b.as_deref().unwrap_or("0"), &t_scope)?;
                Some(CurveSpec {
                    z0: c.z0,
                    v0: c.v0,
                    t_end: c.t_end,
                    step: c.step,
                    coeffs: PHCoefficients { a, b },
                    w0: c.w0,
                })
            }
        };

        let uv = ["u".to_string(), "v".to_string()];
        let surface = match raw.surface {
            None => None,
            Some(s) => {
                check_len("surface", "z0", &s.z0, n)?;
                check_len("surface", "v0", &s.v0, n)?;
                if !(s.step > 0.0) || !(s.u_end > 0.0) || !s.u_end.is_finite() {
                    return Err(Error::manifest("surface", "need step > 0 and finite u_end > 0"));
                }
                let curve = match s.curve {
                    None => None,
                    Some(c) => {
                        if c.len() != n {
                            return Err(Error::manifest(
                                "surface",
                                format!("curve has {} entries, expected {n}", c.len()),
                            ));
                        }
                        let u = &uv[..1];
                        Some(
                            c.iter()
                                .enumerate()
                                .map(|(i, t)| parse_in("surface", &format!("curve[{}]", i + 1), t, u))
                                .collect::<Result<_>>()?,
                        )
                    }
                };
                let h = parse_in("surface", "h", s.h.as_deref().unwrap_or("u^2"), &uv[..1])?;
                let t = parse_in("surface", "t", s.t.as_deref().unwrap_or("2*u*v"), &uv)?;
                Some(SurfaceSpec { z0: s.z0, v0: s.v0, u_end: s.u_end, step: s.step, v: s.v, curve, h, t })
            }
        };

        let kind = match raw.metric.kind.as_deref() {
            Some("B") | Some("b") => Some(MetricType::BType),
            Some("kaehler") | Some("kahler") => Some(MetricType::KaehlerType),
            Some(other) => {
                return Err(Error::manifest("metric", format!("unknown type `{other}` (use \"B\" or \"kaehler\")")))
            }
            None => detect_kind(&chart, &sampling)?,
        };

        Ok(Manifest {
            schema_version,
            name: raw.name.unwrap_or_else(|| "unnamed".into()),
            chart,
            kind,
            base_metric,
            conformal,
            form,
            sampling,
            curve,
            surface,
            digest,
        })
    }

    pub fn builtin(name: &str) -> Option<Manifest> {
        let text = builtin_text(name)?;
        Some(Manifest::from_toml(&text).expect("built-in manifests are valid"))
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }
}

fn detect_kind(chart: &ChartManifold, sampling: &Sampling) -> Result<Option<MetricType>> {
    if is_pure(&chart.metric, 0, 1, &chart.f, sampling)?.passed {
        Ok(Some(MetricType::BType))
    } else if is_hybrid(&chart.metric, 0, 1, &chart.f, sampling)?.passed {
        Ok(Some(MetricType::KaehlerType))
    } else {
        Ok(None)
    }
}

/// Manifest text of a built-in example.
pub fn builtin_text(name: &str) -> Option<String> {
    let text = match name {
        "flat-B" => FLAT_B.to_string(),
        "curved-B" => CURVED_B.to_string(),
        "lifted-curved" => LIFTED_CURVED.to_string(),
        "kahler-4" => kahler_text(),
        _ => return None,
    };
    Some(text)
}

const FLAT_B: &str = r#"schema_version = 1
name = "flat-B"

[manifold]
n = 1

[metric]
components = [["0", "1"], ["1", "0"]]

[base]
metric = [["1"]]

[conformal]
h = "7.5"

[form]
q = ["0", "1"]

[curve]
z0 = [0.1, 0.2]
v0 = [0.6, -0.3]
t_end = 1.0
step = 0.001
a = "0"
b = "1"
w0 = [0.4, 0.7]

[surface]
z0 = [0.0]
v0 = [1.0]
u_end = 1.0
step = 0.01
v = [-1.0, 0.5, 2.0]
curve = ["u^2"]
"#;

const CURVED_B: &str = r#"schema_version = 1
name = "curved-B"

[manifold]
n = 1

[metric]
components = [["z1^2 + 1", "1"], ["1", "0"]]

[conformal]
h = "7.5"

[form]
q = ["0.5", "-0.25"]

[curve]
z0 = [0.2, -0.1]
v0 = [0.7, 0.4]
t_end = 1.0
step = 0.001
a = "0.3"
b = "1 - t"
w0 = [0.3, -0.5]
"#;

const LIFTED_CURVED: &str = r#"schema_version = 1
name = "lifted-curved"

[manifold]
n = 2

[base]
metric = [["1", "0"], ["0", "1 + z1^2"]]

[metric]
complete_lift = true

[conformal]
h = "7.5"

[form]
q = ["0.2", "0", "0", "0.3"]

[curve]
z0 = [0.1, 0.2, 0.3, -0.1]
v0 = [0.5, 0.3, -0.2, 0.4]
t_end = 1.0
step = 0.001
a = "0"
b = "0.5"
w0 = [0.2, -0.4, 0.1, 0.3]

[surface]
z0 = [0.1, 0.2]
v0 = [0.5, 0.3]
u_end = 1.0
step = 0.01
v = [-1.0, 0.5, 1.5]
curve = ["sin(u)", "u^3"]
"#;

/// Hybrid metric at `n = 2` assembled from the constraint basis, with
/// coefficient functions of the base coordinates on the free entries.
fn kahler_text() -> String {
    let f = adapted_f(2, 0).evaluate(&[0.0; 4]).expect("constant");
    let basis = metric_constraint_basis(&f, MetricType::KaehlerType);
    let coefficient = |free: (usize, usize)| match free {
        (0, 0) => "1 + z2^2",
        (0, 1) => "0.5*z1",
        (1, 1) => "2 + sin(z1)",
        _ => "1",
    };
    let mut cells = vec![String::new(); 16];
    for (free, mat) in &basis {
        let c = coefficient(*free);
        for (cell, &w) in cells.iter_mut().zip(mat) {
            if w == 0.0 {
                continue;
            }
            let term = if w == 1.0 { format!("({c})") } else { format!("{w}*({c})") };
            if cell.is_empty() {
                *cell = term;
            } else {
                cell.push_str(" + ");
                cell.push_str(&term);
            }
        }
    }
    let mut rows = String::new();
    for i in 0..4 {
        let row: Vec<String> = (0..4)
            .map(|j| {
                let c = &cells[i * 4 + j];
                format!("\"{}\"", if c.is_empty() { "0" } else { c })
            })
            .collect();
        let sep = if i == 0 { "" } else { ", " };
        write!(rows, "{sep}[{}]", row.join(", ")).expect("string write");
    }
    format!(
        r#"schema_version = 1
name = "kahler-4"

[manifold]
n = 2

[metric]
type = "kaehler"
components = [{rows}]

[form]
q = ["0.2", "-0.1", "0", "0"]

[curve]
z0 = [0.1, 0.2, 0.0, 0.0]
v0 = [0.5, 0.3, 0.1, 0.2]
t_end = 1.0
step = 0.001
a = "0"
b = "1"
w0 = [0.1, 0.2, -0.3, 0.4]
"#
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_load_and_validate() {
        for name in BUILTIN_NAMES {
            let m = Manifest::builtin(name).unwrap();
            assert_eq!(m.name, name);
            let r = m.chart.validate(&m.sampling).unwrap();
            assert!(r.passed, "{name}: {r:?}");
        }
    }

    #[test]
    fn builtin_kinds() {
        assert_eq!(Manifest::builtin("flat-B").unwrap().kind, Some(MetricType::BType));
        assert_eq!(Manifest::builtin("curved-B").unwrap().kind, Some(MetricType::BType));
        assert_eq!(Manifest::builtin("lifted-curved").unwrap().kind, Some(MetricType::BType));
        let k = Manifest::builtin("kahler-4").unwrap();
        assert_eq!(k.kind, Some(MetricType::KaehlerType));
        let s = Sampling::default();
        assert!(is_hybrid(&k.chart.metric, 0, 1, &k.chart.f, &s).unwrap().passed);
        assert!(!is_pure(&k.chart.metric, 0, 1, &k.chart.f, &s).unwrap().passed);
    }

    #[test]
    fn lifted_metric_matches_hand_expansion() {
        let m = Manifest::builtin("lifted-curved").unwrap();
        let g = m.chart.metric.evaluate(&[0.5, 0.1, 0.7, -0.3]).unwrap();
        let expected = [
            0.0,
            0.0,
            1.0,
            0.0, //
            0.0,
            2.0 * 0.5 * 0.7,
            0.0,
            1.25, //
            1.0,
            0.0,
            0.0,
            0.0, //
            0.0,
            1.25,
            0.0,
            0.0,
        ];
        assert_eq!(g.data, expected);
    }

    #[test]
    fn non_square_metric_is_a_manifest_error() {
        let text = "[manifold]\nn = 1\n[metric]\ncomponents = [[\"1\", \"0\"], [\"0\"]]\n";
        match Manifest::from_toml(text) {
            Err(Error::Manifest { section, message }) => {
                assert_eq!(section, "metric");
                assert!(message.contains("square"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn expression_errors_carry_positions() {
        let text = "[manifold]\nn = 1\n[metric]\ncomponents = [[\"z1 +\", \"1\"], [\"1\", \"0\"]]\n";
        let err = Manifest::from_toml(text).unwrap_err().to_string();
        assert!(err.contains("[metric]") && err.contains("position 4"), "{err}");
        let text = "[manifold]\nn = 1\n[metric]\ncomponents = [[\"w\", \"1\"], [\"1\", \"0\"]]\n";
        assert!(Manifest::from_toml(text).unwrap_err().to_string().contains("unknown identifier"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "[manifold]\nn = 1\nq = 3\n[metric]\ncomponents = [[\"0\", \"1\"], [\"1\", \"0\"]]\n";
        assert!(matches!(Manifest::from_toml(text), Err(Error::Manifest { .. })));
    }

    #[test]
    fn digest_tracks_text() {
        let a = Manifest::builtin("flat-B").unwrap().digest;
        let b = Manifest::builtin("curved-B").unwrap().digest;
        assert_eq!(a.len(), 64);
        assert_ne!(a, b);
        assert_eq!(a, Manifest::builtin("flat-B").unwrap().digest);
    }
}
