//! Riemann curvature of a connection and the purity statements built on it.
//!
//! Convention: `R^ρ_{σμν} = ∂_μΓ^ρ_{νσ} - ∂_νΓ^ρ_{μσ} + Γ^ρ_{μλ}Γ^λ_{νσ} - Γ^ρ_{νλ}Γ^λ_{μσ}`,
//! stored `[ρ][σ][μ][ν]`, so `[∇_μ, ∇_ν] v^ρ = R^ρ_{σμν} v^σ`.

use serde::Serialize;

use crate::connection::Connection;
use crate::error::Result;
use crate::expr::{sum, Expression};
use crate::manifold::MetricType;
use crate::report::{CheckReport, Detail, MaxTracker};
use crate::sampling::Sampling;
use crate::tensor::{multi_indices, Signature, TensorField, TensorValue};

#[derive(Debug, Clone, PartialEq)]
pub struct Curvature {
    pub dim: usize,
    pub components: Vec<Expression>,
}

impl Curvature {
    pub fn riemann(gamma: &Connection) -> Curvature {
        let dim = gamma.dim;
        let mut components = vec![Expression::zero(); dim.pow(4)];
        let at = |r: usize, s: usize, m: usize, n: usize| ((r * dim + s) * dim + m) * dim + n;
        for r in 0..dim {
            for s in 0..dim {
                for m in 0..dim {
                    for n in (m + 1)..dim {
                        let mut terms = vec![gamma.get(r, n, s).diff(m), -gamma.get(r, m, s).diff(n)];
                        for l in 0..dim {
                            let (a, b) = (gamma.get(r, m, l), gamma.get(l, n, s));
                            if !a.is_zero() && !b.is_zero() {
                                terms.push(a * b);
                            }
                            let (c, d) = (gamma.get(r, n, l), gamma.get(l, m, s));
                            if !c.is_zero() && !d.is_zero() {
                                terms.push(-(c * d));
                            }
                        }
                        let value = sum(terms);
                        components[at(r, s, n, m)] = -&value;
                        components[at(r, s, m, n)] = value;
                    }
                }
            }
        }
        Curvature { dim, components }
    }

    pub fn as_field(&self) -> TensorField {
        TensorField { dim: self.dim, signature: Signature::parse("ulll"), components: self.components.clone() }
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<TensorValue> {
        self.as_field().evaluate(point)
    }

    /// `R_{ρσμν} = g_{ρλ} R^λ_{σμν}`.
    pub fn lowered(&self, g: &TensorField) -> Result<TensorField> {
        self.as_field().lower_index(0, g)
    }

    pub fn is_flat(&self) -> bool {
        self.components.iter().all(Expression::is_zero)
    }

    /// Antisymmetry in the derivative slots and the cyclic identity over the
    /// three lower slots; with a metric also antisymmetry of the lowered first pair.
    pub fn identities(&self, g: Option<&TensorField>, sampling: &Sampling) -> Result<CheckReport> {
        let points = sampling.sample_points(self.dim);
        let lowered = g.map(|g| self.lowered(g)).transpose()?;
        let (mut anti, mut bianchi, mut pair) = (MaxTracker::default(), MaxTracker::default(), MaxTracker::default());
        let mut scale = 0.0f64;
        for p in &points {
            let r = self.evaluate(p)?;
            scale = scale.max(r.max_abs());
            anti.observe(r.symmetry_residual(2, 3, true), p);
            let mut worst = 0.0f64;
            for idx in multi_indices(self.dim, 4) {
                let (a, s, m, n) = (idx[0], idx[1], idx[2], idx[3]);
                let cyclic = r.get(&[a, s, m, n]) + r.get(&[a, m, n, s]) + r.get(&[a, n, s, m]);
                worst = worst.max(cyclic.abs());
            }
            bianchi.observe(worst, p);
            if let Some(low) = &lowered {
                pair.observe(low.evaluate(p)?.symmetry_residual(0, 1, true), p);
            }
        }
        let tol = sampling.tol * (1.0 + scale);
        let mut report = CheckReport::new("curvature_identities", points.len());
        report.push(anti.detail("antisymmetry(2,3)", tol)).push(bianchi.detail("first_bianchi", tol));
        if lowered.is_some() {
            report.push(pair.detail("lowered_antisymmetry(0,1)", tol));
        }
        Ok(report)
    }
}

/// Checks `[∇_μ, ∇_ν] f^ρ_σ = R^ρ_{λμν} f^λ_σ - R^λ_{σμν} f^ρ_λ` and purity of
/// `R` in its (upper, first lower) pair. A non-nilpotent `f` is reported as a
/// failed precondition; a non-parallel `f` drops the purity claim.
pub fn ricci_identity_residual(gamma: &Connection, f: &TensorField, sampling: &Sampling) -> Result<CheckReport> {
    let dim = gamma.dim;
    let points = sampling.sample_points(dim);
    let mut report = CheckReport::new("ricci_identity", points.len());

    let mut f_sq = MaxTracker::default();
    for p in &points {
        let fv = f.evaluate(p)?;
        f_sq.observe(fv.apply_f(&fv, 0)?.max_abs(), p);
    }
    if f_sq.max > sampling.tol {
        report.push(Detail::flag("precondition_f_squared", false, format!("max |f²| = {:e}; no claim made", f_sq.max)));
        return Ok(report);
    }
    let nabla_f = gamma.covariant_derivative(f)?;
    let mut nf = MaxTracker::default();
    for p in &points {
        nf.observe(nabla_f.evaluate(p)?.max_abs(), p);
    }
    let parallel = nf.max <= 1e-10;

    let curvature = Curvature::riemann(gamma);
    let second = gamma.covariant_derivative(&nabla_f)?;
    let (mut identity, mut purity) = (MaxTracker::default(), MaxTracker::default());
    let (mut id_scale, mut r_scale) = (0.0f64, 0.0f64);
    for p in &points {
        let r = curvature.evaluate(p)?;
        let fv = f.evaluate(p)?;
        let dd = second.evaluate(p)?;
        r_scale = r_scale.max(r.max_abs());
        id_scale = id_scale.max(dd.max_abs());
        let mut worst = 0.0f64;
        for idx in multi_indices(dim, 4) {
            let (m, n, rho, s) = (idx[0], idx[1], idx[2], idx[3]);
            let lhs = dd.get(&[m, n, rho, s]) - dd.get(&[n, m, rho, s]);
            let rhs: f64 = (0..dim)
                .map(|l| r.get(&[rho, l, m, n]) * fv.get(&[l, s]) - r.get(&[l, s, m, n]) * fv.get(&[rho, l]))
                .sum();
            worst = worst.max((lhs - rhs).abs());
        }
        identity.observe(worst, p);
        purity.observe(r.purity_residual(&fv, 0, 1, false)?, p);
    }
    report
        .push(Detail::value("nabla_f", nf.max))
        .push(identity.detail("commutator_identity", sampling.tol * (1.0 + id_scale + r_scale)));
    if parallel {
        report.push(purity.detail("curvature_purity(0,1)", sampling.tol * (1.0 + r_scale)));
    } else {
        report.push(Detail::value("curvature_purity(0,1)", purity.max).with_note("f not parallel; no purity claim"));
    }
    Ok(report)
}

/// Slot-pair purity classification of the lowered curvature `R_{ρσμν}`.
///
/// B-type: all six pairs, plus the all-or-nothing consistency flag.
/// Kähler-type: hybridity in the derivative pair (2,3) and purity in (3,0).
pub fn classify_purity(
    lowered: &TensorField,
    f: &TensorField,
    kind: MetricType,
    sampling: &Sampling,
) -> Result<CheckReport> {
    let points = sampling.sample_points(lowered.dim);
    let pairs: Vec<(usize, usize, bool)> = match kind {
        MetricType::BType => {
            [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)].into_iter().map(|(a, b)| (a, b, false)).collect()
        }
        MetricType::KaehlerType => vec![(2, 3, true), (3, 0, false)],
    };
    let mut trackers = vec![MaxTracker::default(); pairs.len()];
    let mut scale = 0.0f64;
    for p in &points {
        let r = lowered.evaluate(p)?;
        let fv = f.evaluate(p)?;
        scale = scale.max(r.max_abs());
        for (t, &(a, b, hybrid)) in trackers.iter_mut().zip(&pairs) {
            t.observe(r.purity_residual(&fv, a, b, hybrid)?, p);
        }
    }
    let tol = sampling.tol * (1.0 + scale);
    let name = match kind {
        MetricType::BType => "curvature_purity",
        MetricType::KaehlerType => "curvature_hybridity",
    };
    let mut report = CheckReport::new(name, points.len());
    let mut residuals = Vec::new();
    for (t, &(a, b, hybrid)) in trackers.iter().zip(&pairs) {
        let kind = if hybrid { "hybrid" } else { "pure" };
        report.push(t.detail(format!("{kind}({a},{b})"), tol));
        residuals.push(t.max);
    }
    if kind == MetricType::BType {
        let (lo, hi) = residuals.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
        let any = residuals.iter().any(|&r| r <= tol);
        let all = residuals.iter().all(|&r| r <= tol);
        let mut summary = CheckReport::new(name, points.len());
        for d in &report.details {
            // Individual pairs are informative here; the claim is the implication.
            summary.push(Detail { passed: None, ..d.clone() });
        }
        summary
            .push(Detail::flag("one_pair_implies_all", !any || all, format!("any pure: {any}, all pure: {all}")))
            .push(Detail::value("max_over_min_spread", hi - 10.0 * lo))
            .push(Detail::note("all_pairs_pure", all.to_string()));
        return Ok(summary);
    }
    Ok(report)
}

/// `G(x,y,v,w) = g(x,v)g(y,w) - g(x,w)g(y,v)`.
pub fn evaluate_g(g: &TensorValue, x: &[f64], y: &[f64], v: &[f64], w: &[f64]) -> f64 {
    g.bilinear(x, v) * g.bilinear(y, w) - g.bilinear(x, w) * g.bilinear(y, v)
}

/// `G*(x,y,v,w) = G(x,fy,v,fw)` and the short form `-g(x,fw)g(fy,v)`, in that order.
pub fn evaluate_g_star(g: &TensorValue, f: &TensorValue, x: &[f64], y: &[f64], v: &[f64], w: &[f64]) -> (f64, f64) {
    let fy = f.apply_to_vector(y);
    let fw = f.apply_to_vector(w);
    let full = evaluate_g(g, x, &fy, v, &fw);
    let short = -g.bilinear(x, &fw) * g.bilinear(&fy, v);
    (full, short)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HolomorphicValue {
    /// `fx = 0`.
    InKernel,
    /// `g(x,fx) ≠ 0`; `value = G(x,fx,x,fx) = -g(x,fx)²`.
    Definite { value: f64, g_x_fx: f64 },
    /// `g(x,fx) = 0`, as for every hybrid metric.
    Indefinite { value: f64 },
}

pub fn holomorphic_direction_value(g: &TensorValue, f: &TensorValue, x: &[f64]) -> HolomorphicValue {
    let fx = f.apply_to_vector(x);
    let norm = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm(&fx) <= 1e-12 * (1.0 + norm(x)) {
        return HolomorphicValue::InKernel;
    }
    let value = evaluate_g(g, x, &fx, x, &fx);
    let g_x_fx = g.bilinear(x, &fx);
    if g_x_fx.abs() <= 1e-12 * (1.0 + g.max_abs() * norm(x) * norm(&fx)) {
        HolomorphicValue::Indefinite { value }
    } else {
        HolomorphicValue::Definite { value, g_x_fx }
    }
}
