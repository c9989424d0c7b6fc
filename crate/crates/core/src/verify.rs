//! Named statement checks over a [`Manifest`].
//!
//! Each target evaluates one claim on the manifest's chart and returns a
//! [`CheckReport`], or [`Outcome::Skipped`] when the manifest lacks the inputs
//! or the hypotheses the claim needs.

use serde::Serialize;

use crate::connection::{
    conformal_purity_scan, derivative_purity, nabla_f_check, tilde_connection_residual, Connection,
};
use crate::curvature::{
    classify_purity, evaluate_g_star, holomorphic_direction_value, ricci_identity_residual, Curvature, HolomorphicValue,
};
use crate::curves::{
    build_surface, classify_curve, energy, integrate_geodesic, integrate_ph_curve, reparametrize_surface,
    richardson_estimate, theorem6_check, theorem7_ph_transform, PHCoefficients, PH_THRESHOLD,
};
use crate::error::Result;
use crate::expr::Expression;
use crate::manifest::Manifest;
use crate::manifold::{kernel_basis, MetricType};
use crate::report::{CheckReport, Detail, MaxTracker};
use crate::sampling::Sampling;
use crate::tensor::TensorField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
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
}

impl Target {
    pub const ALL: [Target; 15] = [
        Target::Lemma1,
        Target::Lemma2,
        Target::Assertion1,
        Target::Theorem1,
        Target::Theorem2,
        Target::Theorem3,
        Target::Theorem4,
        Target::Theorem5,
        Target::CorollaryG,
        Target::Assertion2,
        Target::Assertion3,
        Target::Assertion4,
        Target::Assertion5,
        Target::Theorem6,
        Target::Theorem7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Target::Lemma1 => "lemma1",
            Target::Lemma2 => "lemma2",
            Target::Assertion1 => "assertion1",
            Target::Assertion2 => "assertion2",
            Target::Assertion3 => "assertion3",
            Target::Assertion4 => "assertion4",
            Target::Assertion5 => "assertion5",
            Target::Theorem1 => "theorem1",
            Target::Theorem2 => "theorem2",
            Target::Theorem3 => "theorem3",
            Target::Theorem4 => "theorem4",
            Target::Theorem5 => "theorem5",
            Target::Theorem6 => "theorem6",
            Target::Theorem7 => "theorem7",
            Target::CorollaryG => "corollary-g",
        }
    }

    pub fn from_name(name: &str) -> Option<Target> {
        Target::ALL.into_iter().find(|t| t.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Report(CheckReport),
    Skipped(String),
}

/// Values that override the manifest for a single run.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub h: Option<Expression>,
}

/// Holds derived objects so repeated targets do not rebuild them.
pub struct Verifier<'a> {
    pub manifest: &'a Manifest,
    pub sampling: Sampling,
    pub overrides: Overrides,
    gamma: Option<Connection>,
    curvature: Option<Curvature>,
    parallel: Option<bool>,
}

fn skip(reason: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome::Skipped(reason.into()))
}

fn renamed(mut report: CheckReport, name: &str) -> Outcome {
    report.check = name.to_string();
    Outcome::Report(report)
}

fn max_detail_residual(report: &CheckReport) -> (f64, f64) {
    let res = report.details.iter().filter_map(|d| d.residual.filter(|_| d.tolerance.is_some())).fold(0.0, f64::max);
    let tol = report.details.iter().filter_map(|d| d.tolerance).fold(0.0, f64::max);
    (res, tol)
}

impl<'a> Verifier<'a> {
    pub fn new(manifest: &'a Manifest, sampling: Sampling, overrides: Overrides) -> Self {
        Verifier { manifest, sampling, overrides, gamma: None, curvature: None, parallel: None }
    }

    fn f(&self) -> &TensorField {
        &self.manifest.chart.f
    }

    pub fn connection(&mut self) -> Result<&Connection> {
        if self.gamma.is_none() {
            self.gamma = Some(Connection::christoffel(&self.manifest.chart.metric)?);
        }
        Ok(self.gamma.as_ref().expect("just set"))
    }

    pub fn curvature(&mut self) -> Result<&Curvature> {
        if self.curvature.is_none() {
            let r = Curvature::riemann(self.connection()?);
            self.curvature = Some(r);
        }
        Ok(self.curvature.as_ref().expect("just set"))
    }

    /// `∇f ≤ 1e-10` at samples for the Levi-Civita connection.
    fn f_parallel(&mut self) -> Result<bool> {
        if let Some(p) = self.parallel {
            return Ok(p);
        }
        let f = self.f().clone();
        let nf = self.connection()?.covariant_derivative(&f)?;
        let mut worst = 0.0f64;
        for p in self.sampling.sample_points(self.manifest.dim()) {
            worst = worst.max(nf.evaluate(&p)?.max_abs());
        }
        let parallel = worst <= 1e-10;
        self.parallel = Some(parallel);
        Ok(parallel)
    }

    pub fn run(&mut self, target: Target) -> Result<Outcome> {
        let name = target.name();
        let sampling = self.sampling;
        let kind = self.manifest.kind;
        let f = self.f().clone();
        match target {
            Target::Lemma1 => {
                let gamma = self.connection()?.clone();
                Ok(renamed(nabla_f_check(&gamma, &f, &sampling)?, name))
            }
            Target::Lemma2 => {
                let gamma = self.connection()?.clone();
                Ok(renamed(ricci_identity_residual(&gamma, &f, &sampling)?, name))
            }
            Target::Assertion1 => {
                let Some(kind) = kind else { return skip("metric is neither pure nor hybrid") };
                if !self.f_parallel()? {
                    return skip("f is not parallel for the metric connection; no claim");
                }
                let metric = self.manifest.chart.metric.clone();
                let lowered = self.curvature()?.lowered(&metric)?;
                let mut report = classify_purity(&lowered, &f, kind, &sampling)?;
                if kind == MetricType::BType {
                    for label in ["pure(0,1)", "pure(2,3)"] {
                        if let Some(d) = report.details.iter_mut().find(|d| d.label == label) {
                            d.passed = Some(d.residual <= d.tolerance);
                            if d.passed == Some(false) {
                                report.passed = false;
                            }
                        }
                    }
                }
                Ok(renamed(report, name))
            }
            Target::Theorem1 => {
                if kind != Some(MetricType::BType) {
                    return skip("needs a pure metric");
                }
                let metric = self.manifest.chart.metric.clone();
                let lowered = self.curvature()?.lowered(&metric)?;
                Ok(renamed(classify_purity(&lowered, &f, MetricType::BType, &sampling)?, name))
            }
            Target::Theorem2 => {
                if kind != Some(MetricType::BType) {
                    return skip("needs a pure metric");
                }
                let g = self.manifest.chart.metric.clone();
                let dg = derivative_purity(&g, &f, &sampling)?;
                let lowered = self.curvature()?.lowered(&g)?;
                let r = classify_purity(&lowered, &f, MetricType::BType, &sampling)?;
                let (dg_res, dg_tol) = max_detail_residual(&dg);
                let (r_res, r_tol) = max_detail_residual(&r);
                let (a, b) = (dg_res <= dg_tol, r_res <= r_tol);
                let mut report = CheckReport::new(name, dg.points_sampled);
                report
                    .push(Detail::value("metric_derivative_purity", dg_res))
                    .push(Detail::value("curvature_purity_all_pairs", r_res))
                    .push(Detail::flag("equivalence", a == b, format!("derivative pure: {a}, curvature pure: {b}")));
                Ok(Outcome::Report(report))
            }
            Target::Theorem3 => {
                if kind != Some(MetricType::BType) {
                    return skip("needs a pure metric");
                }
                let g = self.manifest.chart.metric.clone();
                let dg = derivative_purity(&g, &f, &sampling)?;
                let cp = self.connection()?.purity(&f, &sampling)?;
                let (dg_res, _) = max_detail_residual(&dg);
                let mut report = CheckReport::new(name, dg.points_sampled);
                report
                    .push(Detail::value("metric_derivative_purity", dg_res))
                    .push(Detail::value("connection_purity", cp.max_residual))
                    .push(Detail::flag(
                        "equivalence",
                        dg.passed == cp.passed,
                        format!("derivative pure: {}, connection pure: {}", dg.passed, cp.passed),
                    ));
                Ok(Outcome::Report(report))
            }
            Target::Theorem4 => {
                if kind != Some(MetricType::BType) {
                    return skip("needs a pure metric");
                }
                Ok(renamed(tilde_connection_residual(&self.manifest.chart.metric, &f, &sampling)?, name))
            }
            Target::Theorem5 => {
                if kind != Some(MetricType::BType) {
                    return skip("needs a pure metric");
                }
                let Some(h) = self.overrides.h.clone().or_else(|| self.manifest.conformal.clone()) else {
                    return skip("no [conformal] h");
                };
                let report = conformal_purity_scan(&self.manifest.chart.metric, &h, &f, &sampling)?;
                Ok(renamed(report, name))
            }
            Target::CorollaryG => {
                let Some(kind) = kind else { return skip("metric is neither pure nor hybrid") };
                Ok(Outcome::Report(self.corollary_g(kind)?))
            }
            Target::Assertion2 | Target::Assertion3 | Target::Assertion4 => self.curve_pipeline(target),
            Target::Assertion5 => {
                let Some(surface) = &self.manifest.surface else { return skip("no [surface]") };
                let Some(curve) = &surface.curve else { return skip("no symbolic [surface] curve") };
                let s = build_surface(curve.clone())?;
                let box_sampling = sampling.with_box(0.1, 1.0);
                let (_, report) = reparametrize_surface(&s, &surface.h, &surface.t, &box_sampling)?;
                Ok(renamed(report, name))
            }
            Target::Theorem6 => {
                let Some(surface) = &self.manifest.surface else { return skip("no [surface]") };
                let Some(base) = &self.manifest.base_metric else { return skip("no [base] metric") };
                if self.manifest.chart.m != 0 {
                    return skip("needs m = 0");
                }
                let base_gamma = Connection::christoffel(base)?;
                let curve = integrate_geodesic(&base_gamma, &surface.z0, &surface.v0, surface.u_end, surface.step)?;
                Ok(renamed(theorem6_check(&base_gamma, &curve, &surface.v, 1e-5)?, name))
            }
            Target::Theorem7 => {
                let Some(q) = &self.manifest.form else { return skip("no [form] q") };
                let Some(c) = self.manifest.curve.clone() else { return skip("no [curve]") };
                if !self.manifest.chart.f_is_constant() {
                    return skip("needs a constant structure");
                }
                let q = q.clone();
                let gamma = self.connection()?.clone();
                let states = integrate_ph_curve(&gamma, &f, &c.z0, &c.v0, &c.coeffs, c.t_end, c.step)?;
                Ok(renamed(theorem7_ph_transform(&gamma, &q, &f, &states, 1e-4)?, name))
            }
        }
    }

    fn corollary_g(&mut self, kind: MetricType) -> Result<CheckReport> {
        let dim = self.manifest.dim();
        let sampling = self.sampling;
        let points = sampling.sample_points(dim);
        let vectors = sampling.sample_n(4 * points.len(), dim, 1);
        let (mut agree, mut holo) = (MaxTracker::default(), MaxTracker::default());
        let mut kernel_ok = true;
        let mut branch_ok = true;
        for (i, p) in points.iter().enumerate() {
            let g = self.manifest.chart.metric.evaluate(p)?;
            let f = self.manifest.chart.f.evaluate(p)?;
            let [x, y, v, w] = [&vectors[4 * i], &vectors[4 * i + 1], &vectors[4 * i + 2], &vectors[4 * i + 3]];
            let (full, short) = evaluate_g_star(&g, &f, x, y, v, w);
            agree.observe((full - short) / (1.0 + full.abs()), p);
            match holomorphic_direction_value(&g, &f, x) {
                HolomorphicValue::Definite { value, g_x_fx } => {
                    holo.observe((value + g_x_fx * g_x_fx) / (1.0 + value.abs()), p);
                    branch_ok &= kind == MetricType::BType;
                }
                HolomorphicValue::Indefinite { value } => {
                    holo.observe(value, p);
                    branch_ok &= kind == MetricType::KaehlerType;
                }
                HolomorphicValue::InKernel => branch_ok = false,
            }
            for k in kernel_basis(&f) {
                kernel_ok &= holomorphic_direction_value(&g, &f, &k) == HolomorphicValue::InKernel;
            }
        }
        let expected = match kind {
            MetricType::BType => "definite",
            MetricType::KaehlerType => "indefinite",
        };
        let mut report = CheckReport::new(Target::CorollaryG.name(), points.len());
        report
            .push(agree.detail("g_star_formulas", 1e-12))
            .push(holo.detail("holomorphic_value", 1e-12))
            .push(Detail::flag("branch", branch_ok, format!("expected {expected} at random directions")))
            .push(Detail::flag("kernel_short_circuit", kernel_ok, "kernel basis vectors"));
        Ok(report)
    }

    fn curve_pipeline(&mut self, target: Target) -> Result<Outcome> {
        let name = target.name();
        let Some(c) = self.manifest.curve.clone() else { return skip("no [curve]") };
        let f = self.f().clone();
        let gamma = self.connection()?.clone();
        let f0 = f.evaluate(&c.z0)?;
        let kernel = kernel_basis(&f0);
        let kernel_start = kernel.first().cloned().unwrap_or_default();
        let mut report = CheckReport::new(name, 0);
        let classification = match target {
            Target::Assertion2 => {
                let fv = f0.apply_to_vector(&c.v0);
                if fv.iter().all(|x| x.abs() <= 1e-12) {
                    return skip("v0 lies in ker f");
                }
                let states = integrate_geodesic(&gamma, &c.z0, &c.v0, c.t_end, c.step)?;
                let e = energy(&self.manifest.chart.metric, &states)?;
                let drift = e.iter().fold(0.0f64, |m, x| m.max((x - e[0]).abs()));
                let rich = richardson_estimate(&gamma, &f, &c.z0, &c.v0, &PHCoefficients::zero(), c.t_end, c.step)?;
                report
                    .push(Detail::check("energy_drift", drift, 1e-6))
                    .push(Detail::value("richardson_estimate", rich));
                classify_curve(&gamma, &f, &states)?
            }
            Target::Assertion3 => {
                let states = integrate_geodesic(&gamma, &c.z0, &kernel_start, c.t_end, c.step)?;
                classify_curve(&gamma, &f, &states)?
            }
            _ => {
                let states = integrate_ph_curve(&gamma, &f, &c.z0, &kernel_start, &c.coeffs, c.t_end, c.step)?;
                classify_curve(&gamma, &f, &states)?
            }
        };
        report.points_sampled = classification.fits.len();
        for d in &classification.report.details {
            report.push(d.clone());
        }
        match target {
            Target::Assertion2 => {}
            Target::Assertion3 => {
                report.push(Detail::flag("kernel_confined", classification.in_kernel_everywhere(), "special plane"));
            }
            _ => {
                report
                    .push(Detail::flag("kernel_confined", classification.in_kernel_everywhere(), "velocity in ker f"))
                    .push(Detail::flag(
                        "tangent_direction_parallel",
                        classification.direction_parallel(),
                        format!("threshold {PH_THRESHOLD:e}"),
                    ));
            }
        }
        Ok(Outcome::Report(report))
    }
}
