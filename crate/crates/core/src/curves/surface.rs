//! Surfaces `z^{n+i}(u, v) = v dz^i/du` over a base curve and their u-lines.

use crate::connection::Connection;
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::report::{CheckReport, Detail, MaxTracker};
use crate::sampling::Sampling;

use super::{covariant_derivative_along, fd_derivative, uniform_step, CurveState};

/// Base curve in `u` (variable 0); fibers in `(u, v)` (variables 0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct HolomorphicSurface {
    pub base: Vec<Expression>,
    pub fiber: Vec<Expression>,
}

pub fn build_surface(base: Vec<Expression>) -> Result<HolomorphicSurface> {
    if let Some(bad) = base.iter().find(|e| e.max_var().is_some_and(|v| v > 0)) {
        return Err(Error::Precondition(format!("base curve must depend on u only, found {bad:?}")));
    }
    let v = Expression::var(1);
    let fiber = base.iter().map(|e| &v * e.diff(0)).collect();
    Ok(HolomorphicSurface { base, fiber })
}

impl HolomorphicSurface {
    pub fn n(&self) -> usize {
        self.base.len()
    }

    /// Chart point `(z^i(u), v dz^i/du)`.
    pub fn point(&self, u: f64, v: f64) -> Result<Vec<f64>> {
        self.base.iter().chain(&self.fiber).map(|e| e.eval(&[u, v])).collect()
    }

    /// Pair condition for every `(z^i, z^{n+i})`.
    pub fn check(&self, sampling: &Sampling) -> Result<CheckReport> {
        let mut report = CheckReport::new("holomorphic_surface", sampling.points);
        for (i, (p, q)) in self.base.iter().zip(&self.fiber).enumerate() {
            for mut d in holomorphic_pair_check(p, q, sampling)?.details {
                d.label = format!("{}[{}]", d.label, i + 1);
                report.push(d);
            }
        }
        Ok(report)
    }
}

/// `∂p/∂u = ∂q/∂v` and `∂p/∂v = 0` for expressions in `(u, v)`.
pub fn holomorphic_pair_check(p: &Expression, q: &Expression, sampling: &Sampling) -> Result<CheckReport> {
    let (pu, pv, qv) = (p.diff(0), p.diff(1), q.diff(1));
    let points = sampling.sample_points(2);
    let (mut cr, mut flat) = (MaxTracker::default(), MaxTracker::default());
    let mut scale = 0.0f64;
    for x in &points {
        let (a, b) = (pu.eval(x)?, qv.eval(x)?);
        scale = scale.max(a.abs()).max(b.abs());
        cr.observe(a - b, x);
        flat.observe(pv.eval(x)?, x);
    }
    let tol = sampling.tol * (1.0 + scale);
    let mut report = CheckReport::new("holomorphic_pair", points.len());
    report.push(cr.detail("dp_du - dq_dv", tol)).push(flat.detail("dp_dv", tol));
    Ok(report)
}

/// Substitutes `u = h(u')`, `v = t(u', v')`. The pair condition survives
/// exactly when `dh/du' = ∂t/∂v'`, which is reported alongside the re-check.
pub fn reparametrize_surface(
    surface: &HolomorphicSurface,
    h: &Expression,
    t: &Expression,
    sampling: &Sampling,
) -> Result<(HolomorphicSurface, CheckReport)> {
    if h.max_var().is_some_and(|v| v > 0) {
        return Err(Error::Precondition("h must depend on u only".into()));
    }
    let (dh, dt) = (h.diff(0), t.diff(1));
    let points = sampling.sample_points(2);
    let mut constraint = MaxTracker::default();
    let mut scale = 0.0f64;
    for x in &points {
        let a = dh.eval(x)?;
        if a.abs() <= 1e-12 {
            return Err(Error::Precondition(format!("singular reparametrization: dh/du = {a:e} at {x:?}")));
        }
        let b = dt.eval(x)?;
        scale = scale.max(a.abs());
        constraint.observe(a - b, x);
    }
    let sub = |e: &Expression| e.map_vars(&|i| if i == 0 { h.clone() } else { t.clone() });
    let out = HolomorphicSurface {
        base: surface.base.iter().map(sub).collect(),
        fiber: surface.fiber.iter().map(sub).collect(),
    };
    let tol = sampling.tol * (1.0 + scale);
    let mut report = CheckReport::new("reparametrize_surface", points.len());
    report.push(constraint.detail("dh_du - dt_dv", tol));
    for d in out.check(sampling)?.details {
        report.push(d);
    }
    Ok((out, report))
}

/// `β(u) = (z(u), v ż(u))` sampled along a stored base curve, with `β̇ = (ż, v z̈)`.
pub fn surface_u_line(base: &[CurveState], v: f64) -> Result<Vec<CurveState>> {
    let h = uniform_step(base)?;
    let velocities: Vec<Vec<f64>> = base.iter().map(|s| s.zdot.clone()).collect();
    let acc = fd_derivative(&velocities, h)?;
    Ok(base
        .iter()
        .zip(&acc)
        .map(|(s, a)| CurveState {
            t: s.t,
            z: s.z.iter().copied().chain(s.zdot.iter().map(|x| v * x)).collect(),
            zdot: s.zdot.iter().copied().chain(a.iter().map(|x| v * x)).collect(),
        })
        .collect())
}

/// For each `v`, follows the u-line of the surface over a base geodesic and
/// measures `δγ̇/du` under the complete lift, with `γ̇ = (0, ż)`.
pub fn theorem6_check(base_gamma: &Connection, base: &[CurveState], v_values: &[f64], tol: f64) -> Result<CheckReport> {
    let n = base_gamma.dim;
    let lift = base_gamma.complete_lift()?;
    let velocities: Vec<Vec<f64>> = base.iter().map(|s| s.zdot.clone()).collect();
    let geodesic = covariant_derivative_along(base_gamma, base, &velocities)?;
    let pre = geodesic.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));

    let f = crate::manifold::adapted_f(n, 0);
    let (mut residual, mut identity) = (MaxTracker::default(), MaxTracker::default());
    for &v in v_values {
        let line = surface_u_line(base, v)?;
        let gamma_dot: Vec<Vec<f64>> =
            base.iter().map(|s| std::iter::repeat_n(0.0, n).chain(s.zdot.iter().copied()).collect()).collect();
        for (s, g) in line.iter().zip(&gamma_dot) {
            let fb = f.evaluate(&s.z)?.apply_to_vector(&s.zdot);
            let diff = fb.iter().zip(g).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            identity.observe(diff, &[s.t, v]);
        }
        let d = covariant_derivative_along(&lift, &line, &gamma_dot)?;
        for (s, r) in line.iter().zip(&d) {
            residual.observe(r.iter().fold(0.0f64, |m, x| m.max(x.abs())), &[s.t, v]);
        }
    }
    let mut report = CheckReport::new("surface_u_lines", base.len() * v_values.len());
    report
        .push(Detail::check("base_geodesic", pre, tol))
        .push(identity.detail("gamma_dot - f beta_dot", 1e-10))
        .push(residual.detail("covariant_derivative_gamma_dot", tol));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::integrate_geodesic;
    use crate::expr::parse;

    fn uv(text: &str) -> Expression {
        parse(text, &["u".to_string(), "v".to_string()]).unwrap()
    }

    #[test]
    fn surface_examples() {
        let s = build_surface(vec![uv("u")]).unwrap();
        assert_eq!(s.fiber[0], uv("v"));
        let s = build_surface(vec![uv("u^2")]).unwrap();
        assert_eq!(s.point(0.5, 3.0).unwrap(), vec![0.25, 3.0]);
        assert!(s.check(&Sampling::default()).unwrap().passed);
        assert!(build_surface(vec![uv("v")]).is_err());
    }

    #[test]
    fn pair_examples() {
        let s = Sampling::default();
        assert!(holomorphic_pair_check(&uv("u"), &uv("v"), &s).unwrap().passed);
        assert!(holomorphic_pair_check(&uv("u^2"), &uv("2*u*v"), &s).unwrap().passed);
        let r = holomorphic_pair_check(&uv("v"), &uv("v"), &s).unwrap();
        assert!(!r.passed);
        assert_eq!(r.residual("dp_dv"), 1.0);
    }

    #[test]
    fn reparametrization_examples() {
        let s = Sampling::default().with_box(0.1, 1.0);
        let surface = build_surface(vec![uv("sin(u)"), uv("u^3")]).unwrap();
        for (h, t) in [("u", "v"), ("2*u", "2*v"), ("u^2", "2*u*v")] {
            let (_, r) = reparametrize_surface(&surface, &uv(h), &uv(t), &s).unwrap();
            assert!(r.passed, "{h}, {t}: {r:?}");
        }
        let (_, r) = reparametrize_surface(&surface, &uv("2*u"), &uv("v"), &s).unwrap();
        assert!(!r.passed);
        assert!(reparametrize_surface(&surface, &uv("1"), &uv("v"), &s).is_err());
    }

    #[test]
    fn flat_u_lines_are_straight() {
        let base = integrate_geodesic(&Connection::zero(2), &[0.0, 0.0], &[1.0, -0.5], 1.0, 0.01).unwrap();
        let r = theorem6_check(&Connection::zero(2), &base, &[-1.0, 0.5, 2.0], 1e-9).unwrap();
        assert!(r.passed);
        assert_eq!(r.max_residual, 0.0);
    }
}
