//! Geodesics, holomorphically planar curves and parallel transport.
//!
//! Trajectories come from one fixed-step classical RK4 stepper. Covariant
//! derivatives along stored trajectories use fourth-order finite differences.

mod surface;

pub use surface::{
    build_surface, holomorphic_pair_check, reparametrize_surface, surface_u_line, theorem6_check, HolomorphicSurface,
};

use std::io::Write;

use serde::Serialize;

use crate::connection::{deformation_tensor, Connection, OneForm};
use crate::error::{Error, Result};
use crate::expr::{parse, Expression};
use crate::report::{CheckReport, Detail, MaxTracker};
use crate::tensor::TensorField;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveState {
    pub t: f64,
    pub z: Vec<f64>,
    pub zdot: Vec<f64>,
}

/// Forcing coefficients `a(t)`, `b(t)`; expressions in the single variable `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PHCoefficients {
    pub a: Expression,
    pub b: Expression,
}

impl PHCoefficients {
    pub fn zero() -> Self {
        PHCoefficients { a: Expression::zero(), b: Expression::zero() }
    }

    pub fn parse(a: &str, b: &str) -> Result<Self> {
        let scope = ["t".to_string()];
        Ok(PHCoefficients { a: parse(a, &scope)?, b: parse(b, &scope)? })
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn at_t(err: Error, t: f64) -> Error {
    match err {
        Error::Domain { expr, message } => Error::Domain { expr, message: format!("{message} at t = {t}") },
        other => other,
    }
}

struct Forcing<'a> {
    f: &'a TensorField,
    coeffs: &'a PHCoefficients,
}

fn acceleration(gamma: &Connection, forcing: Option<&Forcing>, t: f64, z: &[f64], zdot: &[f64]) -> Result<Vec<f64>> {
    let g = gamma.evaluate(z)?;
    let mut acc: Vec<f64> = Connection::contract_vectors(&g, zdot, zdot).into_iter().map(|x| -x).collect();
    if let Some(Forcing { f, coeffs }) = forcing {
        let a = coeffs.a.eval(&[t])?;
        let b = coeffs.b.eval(&[t])?;
        let fz = f.evaluate(z)?.apply_to_vector(zdot);
        for ((x, v), w) in acc.iter_mut().zip(zdot).zip(&fz) {
            *x += a * v + b * w;
        }
    }
    Ok(acc)
}

fn integrate(
    gamma: &Connection,
    forcing: Option<&Forcing>,
    z0: &[f64],
    v0: &[f64],
    t_end: f64,
    step: f64,
) -> Result<Vec<CurveState>> {
    let dim = gamma.dim;
    if z0.len() != dim || v0.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: z0.len().min(v0.len()) });
    }
    if !(step > 0.0) || !t_end.is_finite() || t_end < 0.0 {
        return Err(Error::Precondition(format!("need step > 0 and t_end >= 0 (step {step}, t_end {t_end})")));
    }
    let steps = ((t_end / step).round() as usize).max(usize::from(t_end > 0.0));
    let h = if steps == 0 { 0.0 } else { t_end / steps as f64 };
    let mut states = Vec::with_capacity(steps + 1);
    let (mut z, mut v) = (z0.to_vec(), v0.to_vec());
    states.push(CurveState { t: 0.0, z: z.clone(), zdot: v.clone() });
    let axpy = |x: &[f64], k: &[f64], s: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    for i in 0..steps {
        let t = i as f64 * h;
        let rhs = |t: f64, z: &[f64], v: &[f64]| acceleration(gamma, forcing, t, z, v).map_err(|e| at_t(e, t));
        let k1z = v.clone();
        let k1v = rhs(t, &z, &v)?;
        let k2z = axpy(&v, &k1v, h / 2.0);
        let k2v = rhs(t + h / 2.0, &axpy(&z, &k1z, h / 2.0), &k2z)?;
        let k3z = axpy(&v, &k2v, h / 2.0);
        let k3v = rhs(t + h / 2.0, &axpy(&z, &k2z, h / 2.0), &k3z)?;
        let k4z = axpy(&v, &k3v, h);
        let k4v = rhs(t + h, &axpy(&z, &k3z, h), &k4z)?;
        for d in 0..dim {
            z[d] += h / 6.0 * (k1z[d] + 2.0 * k2z[d] + 2.0 * k3z[d] + k4z[d]);
            v[d] += h / 6.0 * (k1v[d] + 2.0 * k2v[d] + 2.0 * k3v[d] + k4v[d]);
        }
        let t_next = (i + 1) as f64 * h;
        if z.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::Domain {
                expr: "trajectory".into(),
                message: format!("non-finite state at t = {t_next}"),
            });
        }
        states.push(CurveState { t: t_next, z: z.clone(), zdot: v.clone() });
    }
    Ok(states)
}

/// `z̈ + Γ(ż, ż) = 0`. The step is adjusted to divide `t_end` evenly.
pub fn integrate_geodesic(
    gamma: &Connection,
    z0: &[f64],
    v0: &[f64],
    t_end: f64,
    step: f64,
) -> Result<Vec<CurveState>> {
    integrate(gamma, None, z0, v0, t_end, step)
}

/// `z̈ + Γ(ż, ż) = a(t) ż + b(t) f(ż)`. Zero coefficients reproduce the geodesic output exactly.
pub fn integrate_ph_curve(
    gamma: &Connection,
    f: &TensorField,
    z0: &[f64],
    v0: &[f64],
    coeffs: &PHCoefficients,
    t_end: f64,
    step: f64,
) -> Result<Vec<CurveState>> {
    if coeffs.is_zero() {
        return integrate(gamma, None, z0, v0, t_end, step);
    }
    integrate(gamma, Some(&Forcing { f, coeffs }), z0, v0, t_end, step)
}

/// Step-halving estimate of the global error of a PH run (geodesic for zero
/// coefficients): `max |y_h - y_{h/2}| / 15` over shared times.
pub fn richardson_estimate(
    gamma: &Connection,
    f: &TensorField,
    z0: &[f64],
    v0: &[f64],
    coeffs: &PHCoefficients,
    t_end: f64,
    step: f64,
) -> Result<f64> {
    let coarse = integrate_ph_curve(gamma, f, z0, v0, coeffs, t_end, step)?;
    let fine = integrate_ph_curve(gamma, f, z0, v0, coeffs, t_end, step / 2.0)?;
    if fine.len() != 2 * coarse.len() - 1 {
        return Err(Error::Precondition("step does not halve evenly".into()));
    }
    let mut worst = 0.0f64;
    for (i, c) in coarse.iter().enumerate() {
        let fs = &fine[2 * i];
        for (a, b) in c.z.iter().chain(&c.zdot).zip(fs.z.iter().chain(&fs.zdot)) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst / 15.0)
}

/// `g(ż, ż)` at every sample.
pub fn energy(g: &TensorField, states: &[CurveState]) -> Result<Vec<f64>> {
    states.iter().map(|s| Ok(g.evaluate(&s.z)?.bilinear(&s.zdot, &s.zdot))).collect()
}

/// Fourth-order finite-difference derivative of equally spaced vector samples.
pub fn fd_derivative(values: &[Vec<f64>], h: f64) -> Result<Vec<Vec<f64>>> {
    let n = values.len();
    if n < 5 {
        return Err(Error::Precondition(format!("need at least 5 samples for differentiation, got {n}")));
    }
    let dim = values[0].len();
    let combo = |idx: [usize; 5], w: [f64; 5], sign: f64| -> Vec<f64> {
        (0..dim).map(|d| sign * idx.iter().zip(w).map(|(&i, c)| c * values[i][d]).sum::<f64>() / (12.0 * h)).collect()
    };
    const EDGE: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
    const NEAR: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
    const MID: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
    Ok((0..n)
        .map(|i| match i {
            0 => combo([0, 1, 2, 3, 4], EDGE, 1.0),
            1 => combo([0, 1, 2, 3, 4], NEAR, 1.0),
            _ if i == n - 1 => combo([n - 1, n - 2, n - 3, n - 4, n - 5], EDGE, -1.0),
            _ if i == n - 2 => combo([n - 1, n - 2, n - 3, n - 4, n - 5], NEAR, -1.0),
            _ => combo([i - 2, i - 1, i, i + 1, i + 2], MID, 1.0),
        })
        .collect())
}

fn uniform_step(states: &[CurveState]) -> Result<f64> {
    if states.len() < 2 {
        return Err(Error::Precondition("curve needs at least two samples".into()));
    }
    let h = (states[states.len() - 1].t - states[0].t) / (states.len() - 1) as f64;
    let uneven = states.windows(2).any(|w| ((w[1].t - w[0].t) - h).abs() > 1e-9 * (1.0 + h.abs()));
    if uneven || h == 0.0 {
        return Err(Error::Precondition("curve samples must be equally spaced".into()));
    }
    Ok(h)
}

/// `δV/dt = dV/dt + Γ(ż, V)` for a vector field `V` sampled along the curve.
pub fn covariant_derivative_along(
    gamma: &Connection,
    states: &[CurveState],
    field: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let h = uniform_step(states)?;
    let dv = fd_derivative(field, h)?;
    states
        .iter()
        .zip(dv)
        .zip(field)
        .map(|((s, mut d), v)| {
            let g = gamma.evaluate(&s.z)?;
            for (x, c) in d.iter_mut().zip(Connection::contract_vectors(&g, &s.zdot, v)) {
                *x += c;
            }
            Ok(d)
        })
        .collect()
}

fn lagrange(ts: &[f64], ys: &[&[f64]], t: f64) -> Vec<f64> {
    let dim = ys[0].len();
    let mut out = vec![0.0; dim];
    for j in 0..ts.len() {
        let mut w = 1.0;
        for k in 0..ts.len() {
            if k != j {
                w *= (t - ts[k]) / (ts[j] - ts[k]);
            }
        }
        for d in 0..dim {
            out[d] += w * ys[j][d];
        }
    }
    out
}

/// Position and velocity at `t` inside interval `i`, by cubic interpolation over four samples.
fn interpolate(states: &[CurveState], i: usize, t: f64) -> (Vec<f64>, Vec<f64>) {
    let n = states.len();
    if n < 4 {
        let (a, b) = (&states[i], &states[(i + 1).min(n - 1)]);
        let s = if b.t == a.t { 0.0 } else { (t - a.t) / (b.t - a.t) };
        let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p + s * (q - p)).collect();
        return (mix(&a.z, &b.z), mix(&a.zdot, &b.zdot));
    }
    let start = i.saturating_sub(1).min(n - 4);
    let window = &states[start..start + 4];
    let ts: Vec<f64> = window.iter().map(|s| s.t).collect();
    let zs: Vec<&[f64]> = window.iter().map(|s| s.z.as_slice()).collect();
    let vs: Vec<&[f64]> = window.iter().map(|s| s.zdot.as_slice()).collect();
    (lagrange(&ts, &zs, t), lagrange(&ts, &vs, t))
}

/// Solves `dw/dt = -Γ(ż, w)` over the sample intervals with RK4.
pub fn parallel_transport(gamma: &Connection, states: &[CurveState], w0: &[f64]) -> Result<Vec<Vec<f64>>> {
    if w0.len() != gamma.dim {
        return Err(Error::DimensionMismatch { expected: gamma.dim, found: w0.len() });
    }
    let rhs = |z: &[f64], zdot: &[f64], w: &[f64]| -> Result<Vec<f64>> {
        let g = gamma.evaluate(z)?;
        Ok(Connection::contract_vectors(&g, zdot, w).into_iter().map(|x| -x).collect())
    };
    let mut out = vec![w0.to_vec()];
    let mut w = w0.to_vec();
    for i in 0..states.len().saturating_sub(1) {
        let (a, b) = (&states[i], &states[i + 1]);
        let h = b.t - a.t;
        let (zm, vm) = interpolate(states, i, a.t + h / 2.0);
        let shift = |k: &[f64], s: f64| -> Vec<f64> { w.iter().zip(k).map(|(x, y)| x + s * y).collect() };
        let k1 = rhs(&a.z, &a.zdot, &w)?;
        let k2 = rhs(&zm, &vm, &shift(&k1, h / 2.0))?;
        let k3 = rhs(&zm, &vm, &shift(&k2, h / 2.0))?;
        let k4 = rhs(&b.z, &b.zdot, &shift(&k3, h))?;
        for d in 0..w.len() {
            w[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
        }
        out.push(w.clone());
    }
    Ok(out)
}

/// Transports `w0`, multiplies by `λ(t)` and compares `δ(λw)/dt` with `λ'(t) w`.
pub fn transport_scaling_residual(
    gamma: &Connection,
    states: &[CurveState],
    w0: &[f64],
    lambda: &Expression,
) -> Result<f64> {
    let w = parallel_transport(gamma, states, w0)?;
    let dl = lambda.diff(0);
    let scaled: Vec<Vec<f64>> = states
        .iter()
        .zip(&w)
        .map(|(s, v)| Ok(v.iter().map(|x| x * lambda.eval(&[s.t]).unwrap_or(f64::NAN)).collect()))
        .collect::<Result<_>>()?;
    let dv = covariant_derivative_along(gamma, states, &scaled)?;
    let mut worst = 0.0f64;
    for ((s, v), d) in states.iter().zip(&w).zip(&dv) {
        let lp = dl.eval(&[s.t])?;
        for (a, b) in d.iter().zip(v) {
            worst = worst.max((a - lp * b).abs());
        }
    }
    Ok(worst)
}

/// Fit of `δż/dt` onto `span{ż, fż}` at one sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleFit {
    pub t: f64,
    pub a: f64,
    /// `None` when `ż ∈ ker f`, where the `b` term is inert.
    pub b: Option<f64>,
    pub orthogonal: f64,
    /// Residual of the fit onto `ż` alone.
    pub tangent_orthogonal: f64,
    pub acceleration_norm: f64,
    pub in_kernel: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveClassification {
    pub fits: Vec<SampleFit>,
    pub report: CheckReport,
}

impl CurveClassification {
    pub fn is_ph(&self) -> bool {
        self.report.detail("ph_orthogonal").and_then(|d| d.passed) == Some(true)
    }

    pub fn is_geodesic(&self) -> bool {
        self.fits.iter().all(|s| s.acceleration_norm <= PH_THRESHOLD)
    }

    pub fn in_kernel_everywhere(&self) -> bool {
        self.fits.iter().all(|s| s.in_kernel)
    }

    pub fn direction_parallel(&self) -> bool {
        self.fits.iter().all(|s| s.tangent_orthogonal <= PH_THRESHOLD * (1.0 + s.acceleration_norm))
    }
}

/// Relative threshold for span membership of `δż/dt`.
pub const PH_THRESHOLD: f64 = 1e-6;
const KERNEL_TOL: f64 = 1e-10;

fn fit_sample(t: f64, acc: &[f64], u: &[f64], w: &[f64]) -> Result<SampleFit> {
    let (nu, nw, nd) = (norm(u), norm(w), norm(acc));
    if nu <= 1e-12 {
        return Err(Error::Precondition(format!("velocity vanishes at t = {t}; span is degenerate")));
    }
    let a_only = dot(acc, u) / (nu * nu);
    let tangent_orthogonal = norm(&acc.iter().zip(u).map(|(d, x)| d - a_only * x).collect::<Vec<_>>());
    let in_kernel = nw <= KERNEL_TOL * (1.0 + nu);
    if in_kernel {
        return Ok(SampleFit {
            t,
            a: a_only,
            b: None,
            orthogonal: tangent_orthogonal,
            tangent_orthogonal,
            acceleration_norm: nd,
            in_kernel,
        });
    }
    let gram = nalgebra::Matrix2::new(dot(u, u), dot(u, w), dot(u, w), dot(w, w));
    let rhs = nalgebra::Vector2::new(dot(acc, u), dot(acc, w));
    let sol =
        gram.lu().solve(&rhs).ok_or_else(|| Error::Precondition(format!("span {{ż, fż}} is degenerate at t = {t}")))?;
    let (a, b) = (sol[0], sol[1]);
    let orthogonal = norm(&acc.iter().zip(u).zip(w).map(|((d, x), y)| d - a * x - b * y).collect::<Vec<_>>());
    Ok(SampleFit { t, a, b: Some(b), orthogonal, tangent_orthogonal, acceleration_norm: nd, in_kernel })
}

/// Least-squares fit of `δż/dt` onto `span{ż, fż}` at every sample, plus the
/// plane residual `δ(fż)/dt` projected off the same span.
pub fn classify_curve(gamma: &Connection, f: &TensorField, states: &[CurveState]) -> Result<CurveClassification> {
    let velocities: Vec<Vec<f64>> = states.iter().map(|s| s.zdot.clone()).collect();
    let accel = covariant_derivative_along(gamma, states, &velocities)?;
    let fz: Vec<Vec<f64>> =
        states.iter().map(|s| Ok(f.evaluate(&s.z)?.apply_to_vector(&s.zdot))).collect::<Result<_>>()?;
    let plane = covariant_derivative_along(gamma, states, &fz)?;
    let mut fits = Vec::with_capacity(states.len());
    let (mut orth, mut geo, mut plane_res) = (MaxTracker::default(), MaxTracker::default(), MaxTracker::default());
    let mut kernel_off = MaxTracker::default();
    for (((s, acc), w), pw) in states.iter().zip(&accel).zip(&fz).zip(&plane) {
        let fit = fit_sample(s.t, acc, &s.zdot, w)?;
        let at = [s.t];
        orth.observe(fit.orthogonal / (1.0 + fit.acceleration_norm), &at);
        geo.observe(fit.acceleration_norm, &at);
        kernel_off.observe(norm(w), &at);
        let plane_fit = fit_sample(s.t, pw, &s.zdot, w)?;
        plane_res.observe(plane_fit.orthogonal / (1.0 + norm(pw)), &at);
        fits.push(fit);
    }
    let mut report = CheckReport::new("classify_curve", states.len());
    report
        .push(orth.detail("ph_orthogonal", PH_THRESHOLD))
        .push(Detail::value("max_covariant_acceleration", geo.max))
        .push(Detail::value("max_abs_f_zdot", kernel_off.max))
        .push(Detail::value("plane_transport_orthogonal", plane_res.max));
    Ok(CurveClassification { fits, report })
}

/// Classifies the same trajectory against `Γ` and `Γ + T(q)` and compares the
/// fitted coefficients with `ā = a + 2q(fż)`, `b̄ = b + 2q(ż)`.
pub fn theorem7_ph_transform(
    gamma: &Connection,
    q: &OneForm,
    f: &TensorField,
    states: &[CurveState],
    tol: f64,
) -> Result<CheckReport> {
    let before = classify_curve(gamma, f, states)?;
    let deformed = gamma.deform(&deformation_tensor(q, f)?)?;
    let after = classify_curve(&deformed, f, states)?;
    let (mut da, mut db) = (MaxTracker::default(), MaxTracker::default());
    for ((s, x), y) in states.iter().zip(&before.fits).zip(&after.fits) {
        let qv: Vec<f64> = q.0.iter().map(|e| e.eval(&s.z)).collect::<Result<_>>()?;
        let fz = f.evaluate(&s.z)?.apply_to_vector(&s.zdot);
        let at = [s.t];
        da.observe(y.a - (x.a + 2.0 * dot(&qv, &fz)), &at);
        if let (Some(b0), Some(b1)) = (x.b, y.b) {
            db.observe(b1 - (b0 + 2.0 * dot(&qv, &s.zdot)), &at);
        }
    }
    let mut ph_after = after.report.detail("ph_orthogonal").cloned().expect("fit detail");
    ph_after.label = "ph_after".into();
    let mut report = CheckReport::new("ph_transform", states.len());
    report
        .push(Detail::flag("ph_before", before.is_ph(), format!("orthogonal {:e}", before.report.max_residual)))
        .push(da.detail("a_shift", tol))
        .push(db.detail("b_shift", tol))
        .push(ph_after);
    Ok(report)
}

/// CSV with columns `t, z1..zd, zdot1..zdotd`.
pub fn write_csv<W: Write>(states: &[CurveState], mut out: W) -> std::io::Result<()> {
    let dim = states.first().map_or(0, |s| s.z.len());
    let mut header = vec!["t".to_string()];
    header.extend((1..=dim).map(|i| format!("z{i}")));
    header.extend((1..=dim).map(|i| format!("zdot{i}")));
    writeln!(out, "{}", header.join(","))?;
    for s in states {
        let row: Vec<String> = std::iter::once(s.t)
            .chain(s.z.iter().copied())
            .chain(s.zdot.iter().copied())
            .map(|x| x.to_string())
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Pointwise `f` applied to the stored velocities.
pub fn f_of_velocity(f: &TensorField, states: &[CurveState]) -> Result<Vec<Vec<f64>>> {
    states.iter().map(|s| Ok(f.evaluate(&s.z)?.apply_to_vector(&s.zdot))).collect()
}
