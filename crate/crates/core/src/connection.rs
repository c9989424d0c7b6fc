//! Affine connections: Levi-Civita coefficients from a metric, purity of the
//! coefficients with respect to `f`, covariant derivatives, complete lifts and
//! the pure affine deformations built from a one-form.

use crate::error::{Error, Result};
use crate::expr::{sum, Expression};
use crate::linalg;
use crate::report::{CheckReport, Detail, MaxTracker};
use crate::sampling::Sampling;
use crate::tensor::{multi_indices, Signature, Slot, TensorField, TensorValue};

/// Coefficients `Γ^σ_{αβ}`, stored `[σ][α][β]` row-major.
///
/// Not a tensor: under coordinate changes it picks up an inhomogeneous term.
/// It is still convenient to evaluate it into a [`TensorValue`] with signature
/// `ull` and reuse the slot machinery.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    pub dim: usize,
    pub coeffs: Vec<Expression>,
}

impl Connection {
    pub fn new(dim: usize, coeffs: Vec<Expression>) -> Result<Self> {
        if coeffs.len() != dim.pow(3) {
            return Err(Error::DimensionMismatch { expected: dim.pow(3), found: coeffs.len() });
        }
        Ok(Connection { dim, coeffs })
    }

    pub fn zero(dim: usize) -> Self {
        Connection { dim, coeffs: vec![Expression::zero(); dim.pow(3)] }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize) -> Expression) -> Self {
        let coeffs = multi_indices(dim, 3).map(|i| f(i[0], i[1], i[2])).collect();
        Connection { dim, coeffs }
    }

    pub fn get(&self, upper: usize, a: usize, b: usize) -> &Expression {
        &self.coeffs[(upper * self.dim + a) * self.dim + b]
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<TensorValue> {
        self.as_field().evaluate(point)
    }

    pub fn as_field(&self) -> TensorField {
        TensorField { dim: self.dim, signature: Signature::parse("ull"), components: self.coeffs.clone() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Expression::is_zero)
    }

    /// `max |Γ^σ_{αβ} - Γ^σ_{βα}|` over samples.
    pub fn torsion_residual(&self, sampling: &Sampling) -> Result<f64> {
        let mut worst = 0.0f64;
        for p in sampling.sample_points(self.dim) {
            worst = worst.max(self.evaluate(&p)?.symmetry_residual(1, 2, false));
        }
        Ok(worst)
    }

    /// Levi-Civita connection `2Γ^σ_{αβ} = g^{σλ}(∂_α g_{βλ} + ∂_β g_{λα} - ∂_λ g_{αβ})`.
    /// The inverse metric is symbolic (adjugate over determinant).
    pub fn christoffel(g: &TensorField) -> Result<Connection> {
        if g.signature != Signature::parse("ll") {
            return Err(Error::SlotMismatch("metric must have two lower slots".into()));
        }
        let dim = g.dim;
        let g_inv = g.inverse()?;
        if linalg::symbolic_det(&g.components, dim).is_zero() {
            return Err(Error::SingularMetric { point: Vec::new(), det: 0.0 });
        }
        let dg = g.partials();
        let d = |s: usize, a: usize, b: usize| dg.get(&[s, a, b]);
        let half = Expression::num(0.5);
        let mut coeffs = vec![Expression::zero(); dim.pow(3)];
        for s in 0..dim {
            for a in 0..dim {
                for b in a..dim {
                    let term = sum((0..dim).filter_map(|l| {
                        let gi = g_inv.get(&[s, l]);
                        if gi.is_zero() {
                            return None;
                        }
                        let bracket = d(a, b, l) + d(b, l, a) - d(l, a, b);
                        if bracket.is_zero() {
                            return None;
                        }
                        Some(gi * &bracket)
                    }));
                    let value = &half * &term;
                    coeffs[(s * dim + a) * dim + b] = value.clone();
                    coeffs[(s * dim + b) * dim + a] = value;
                }
            }
        }
        Ok(Connection { dim, coeffs })
    }

    /// Purity of the coefficients towards a constant `f`: the contractions
    /// `f^α_λ Γ^λ_{βσ}`, `Γ^α_{λσ} f^λ_β`, `Γ^α_{βλ} f^λ_σ` must coincide.
    pub fn purity(&self, f: &TensorField, sampling: &Sampling) -> Result<CheckReport> {
        let points = sampling.sample_points(self.dim);
        let mut pairs = [MaxTracker::default(), MaxTracker::default(), MaxTracker::default()];
        let mut scale = 0.0f64;
        for p in &points {
            let gamma = self.evaluate(p)?;
            let fv = f.evaluate(p)?;
            scale = scale.max(gamma.max_abs());
            let upper = gamma.apply_f(&fv, 0)?;
            let lower1 = gamma.apply_f(&fv, 1)?;
            let lower2 = gamma.apply_f(&fv, 2)?;
            pairs[0].observe(upper.max_abs_diff(&lower1), p);
            pairs[1].observe(upper.max_abs_diff(&lower2), p);
            pairs[2].observe(lower1.max_abs_diff(&lower2), p);
        }
        let tol = sampling.tol * (1.0 + scale);
        let mut report = CheckReport::new("connection_purity", points.len());
        report
            .push(pairs[0].detail("upper_vs_lower1", tol))
            .push(pairs[1].detail("upper_vs_lower2", tol))
            .push(pairs[2].detail("lower1_vs_lower2", tol));
        Ok(report)
    }

    /// `∇_σ T` with the new lower slot `σ` first: `+Γ` per upper slot, `-Γ` per lower slot.
    pub fn covariant_derivative(&self, t: &TensorField) -> Result<TensorField> {
        if t.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: t.dim });
        }
        let dim = self.dim;
        let partials = t.partials();
        let signature = partials.signature.clone();
        let slots = t.signature.slots().to_vec();
        Ok(TensorField::from_fn(dim, signature, |idx| {
            let s = idx[0];
            let rest = &idx[1..];
            let mut terms = vec![partials.get(idx).clone()];
            let mut src = rest.to_vec();
            for (k, slot) in slots.iter().enumerate() {
                for l in 0..dim {
                    src.copy_from_slice(rest);
                    src[k] = l;
                    let comp = t.get(&src);
                    if comp.is_zero() {
                        continue;
                    }
                    match slot {
                        Slot::Upper => {
                            let g = self.get(rest[k], s, l);
                            if !g.is_zero() {
                                terms.push(g * comp);
                            }
                        }
                        Slot::Lower => {
                            let g = self.get(l, s, rest[k]);
                            if !g.is_zero() {
                                terms.push(-(g * comp));
                            }
                        }
                    }
                }
            }
            sum(terms)
        }))
    }

    /// Complete lift of a base connection on `B` (dimension `n`) to the
    /// `2n`-dimensional chart `(u, y)`, with `y^s` the variable `n + s`:
    /// `Γ̂^h_{ik} = Γ^h_{ik}`, `Γ̂^{n+h}_{ik} = y^s ∂_s Γ^h_{ik}`,
    /// `Γ̂^{n+h}_{i,n+k} = Γ̂^{n+h}_{n+i,k} = Γ^h_{ik}`, all others zero.
    pub fn complete_lift(&self) -> Result<Connection> {
        let n = self.dim;
        if self.coeffs.iter().any(|e| e.max_var().is_some_and(|v| v >= n)) {
            return Err(Error::Precondition("base coefficients may only use the n base coordinates".into()));
        }
        let torsion = self.torsion_residual(&Sampling::default())?;
        if torsion > 1e-12 {
            return Err(Error::Precondition(format!("base connection is not symmetric (residual {torsion:e})")));
        }
        let dim = 2 * n;
        let mut lifted = Connection::zero(dim);
        for h in 0..n {
            for i in 0..n {
                for k in 0..n {
                    let base = self.get(h, i, k).clone();
                    let vertical = sum((0..n).map(|s| Expression::var(n + s) * base.diff(s)));
                    let at = |u: usize, a: usize, b: usize| (u * dim + a) * dim + b;
                    lifted.coeffs[at(h, i, k)] = base.clone();
                    lifted.coeffs[at(n + h, i, k)] = vertical;
                    lifted.coeffs[at(n + h, i, n + k)] = base.clone();
                    lifted.coeffs[at(n + h, n + i, k)] = base;
                }
            }
        }
        Ok(lifted)
    }

    /// `Γ̄ = Γ + T` for a (1,2) field `T`.
    pub fn deform(&self, t: &TensorField) -> Result<Connection> {
        if t.dim != self.dim || t.signature != Signature::parse("ull") {
            return Err(Error::DimensionMismatch { expected: self.dim, found: t.dim });
        }
        Ok(Connection { dim: self.dim, coeffs: self.coeffs.iter().zip(&t.components).map(|(a, b)| a + b).collect() })
    }

    /// Pointwise `Γ^α_{λβ} x^λ y^β`.
    pub fn contract_vectors(gamma: &TensorValue, x: &[f64], y: &[f64]) -> Vec<f64> {
        let dim = gamma.dim;
        (0..dim)
            .map(|a| {
                let mut acc = 0.0;
                for l in 0..dim {
                    if x[l] == 0.0 {
                        continue;
                    }
                    for b in 0..dim {
                        acc += gamma.data[(a * dim + l) * dim + b] * x[l] * y[b];
                    }
                }
                acc
            })
            .collect()
    }
}

/// Residual of the block identities of the pure family
/// `Γ^k_{is} = Γ^{n+k}_{i,n+s} = Γ^{n+k}_{n+i,s}` on a `2n+m` chart; with
/// `m = 0` the blocks that a complete lift leaves empty are checked as well.
pub fn pure_family_residual(conn: &Connection, n: usize, m: usize, sampling: &Sampling) -> Result<CheckReport> {
    let dim = 2 * n + m;
    if conn.dim != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: conn.dim });
    }
    let points = sampling.sample_points(dim);
    let mut identities = MaxTracker::default();
    let mut empty = MaxTracker::default();
    for p in &points {
        let g = conn.evaluate(p)?;
        let at = |u: usize, a: usize, b: usize| g.data[(u * dim + a) * dim + b];
        for k in 0..n {
            for i in 0..n {
                for s in 0..n {
                    let base = at(k, i, s);
                    identities.observe(base - at(n + k, i, n + s), p);
                    identities.observe(base - at(n + k, n + i, s), p);
                    if m == 0 {
                        for v in [at(k, i, n + s), at(k, n + i, s), at(k, n + i, n + s), at(n + k, n + i, n + s)] {
                            empty.observe(v, p);
                        }
                    }
                }
            }
        }
    }
    let mut report = CheckReport::new("pure_family", points.len());
    report.push(identities.detail("block_identities", sampling.tol));
    if m == 0 {
        report.push(empty.detail("empty_blocks", sampling.tol));
    }
    Ok(report)
}

/// Lemma-1 diagnostic: residuals of `∇f`, of the (upper, lower) purity of `Γ`,
/// and of `∂f`, plus the two implications between them.
pub fn nabla_f_check(conn: &Connection, f: &TensorField, sampling: &Sampling) -> Result<CheckReport> {
    let nabla_f = conn.covariant_derivative(f)?;
    let df = f.partials();
    let purity = conn.purity(f, sampling)?;
    let purity_residual = purity.residual("upper_vs_lower1");
    let purity_pass = purity.detail("upper_vs_lower1").and_then(|d| d.passed) == Some(true);
    let points = sampling.sample_points(conn.dim);
    let mut nf = MaxTracker::default();
    let mut pf = MaxTracker::default();
    for p in &points {
        nf.observe(nabla_f.evaluate(p)?.max_abs(), p);
        pf.observe(df.evaluate(p)?.max_abs(), p);
    }
    let tol = sampling.tol;
    let (a, c) = (nf.max <= tol, pf.max <= tol);
    let pure_case = !(a && purity_pass) || c;
    let constant_case = !(a && c) || purity_pass;
    let mut report = CheckReport::new("lemma1", points.len());
    report
        .push(Detail::value("nabla_f", nf.max))
        .push(Detail::value("gamma_purity_upper_lower", purity_residual))
        .push(Detail::value("partial_f", pf.max))
        .push(Detail::flag(
            "pure_and_parallel_implies_constant",
            pure_case,
            format!("nabla_f~0: {a}, pure: {purity_pass}, partial_f~0: {c}"),
        ))
        .push(Detail::flag("constant_and_parallel_implies_pure", constant_case, "f constant and parallel"));
    Ok(report)
}

/// Purity of `∂_σ g_{αβ}` (slot `σ` first) in each of its three slot pairs.
pub fn derivative_purity(g: &TensorField, f: &TensorField, sampling: &Sampling) -> Result<CheckReport> {
    let dg = g.partials();
    let points = sampling.sample_points(g.dim);
    let mut trackers = [MaxTracker::default(), MaxTracker::default(), MaxTracker::default()];
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let mut scale = 0.0f64;
    for p in &points {
        let v = dg.evaluate(p)?;
        let fv = f.evaluate(p)?;
        scale = scale.max(v.max_abs());
        for (t, &(a, b)) in trackers.iter_mut().zip(&pairs) {
            t.observe(v.purity_residual(&fv, a, b, false)?, p);
        }
    }
    let tol = sampling.tol * (1.0 + scale);
    let mut report = CheckReport::new("derivative_purity", points.len());
    for (t, (a, b)) in trackers.iter().zip(pairs) {
        report.push(t.detail(format!("slots({a},{b})"), tol));
    }
    Ok(report)
}

/// `g + g̃` with `g̃_{αβ} = g_{λβ} f^λ_α`; refuses a non-pure `g` or a singular sum.
pub fn metric_plus_tilde(g: &TensorField, f: &TensorField, sampling: &Sampling) -> Result<TensorField> {
    let purity = crate::tensor::is_pure(g, 0, 1, f, sampling)?;
    if !purity.passed {
        return Err(Error::Precondition(format!("metric is not pure (residual {:e})", purity.max_residual)));
    }
    let sum_metric = g.zip_with(&g.apply_f(f, 0)?, |a, b| a + b);
    for p in sampling.sample_points(g.dim) {
        let v = sum_metric.evaluate(&p)?;
        let det = linalg::determinant(&v.data, g.dim);
        if !det.is_finite() || det.abs() < linalg::SINGULAR_DET {
            return Err(Error::SingularMetric { point: p, det });
        }
    }
    Ok(sum_metric)
}

/// Sampled `max |Γ(g + g̃) - Γ(g)|`.
pub fn tilde_connection_residual(g: &TensorField, f: &TensorField, sampling: &Sampling) -> Result<CheckReport> {
    let gs = metric_plus_tilde(g, f, sampling)?;
    let a = Connection::christoffel(g)?;
    let b = Connection::christoffel(&gs)?;
    let points = sampling.sample_points(g.dim);
    let mut t = MaxTracker::default();
    for p in &points {
        t.observe(a.evaluate(p)?.max_abs_diff(&b.evaluate(p)?), p);
    }
    Ok(CheckReport::new("metric_plus_tilde_connection", points.len())
        .with(t.detail("max_abs(Γ(g+g̃) - Γ(g))", sampling.tol)))
}

/// Purity of `∂(h g)` and whether the gradient of `h` vanishes at the samples.
/// `passed` means `h g` still has pure partial derivatives.
pub fn conformal_purity_scan(
    g: &TensorField,
    h: &Expression,
    f: &TensorField,
    sampling: &Sampling,
) -> Result<CheckReport> {
    let scaled = g.map(|e| h * e);
    let inner = derivative_purity(&scaled, f, sampling)?;
    let worst = inner.details.iter().filter_map(|d| d.residual).fold(0.0f64, f64::max);
    let tol = inner.details.iter().filter_map(|d| d.tolerance).fold(0.0, f64::max);
    let points = sampling.sample_points(g.dim);
    let grad: Vec<Expression> = (0..g.dim).map(|s| h.diff(s)).collect();
    let mut grad_max = MaxTracker::default();
    for p in &points {
        for e in &grad {
            grad_max.observe(e.eval(p)?, p);
        }
    }
    let mut report = CheckReport::new("conformal_purity", points.len());
    let mut purity = Detail::check("scaled_derivative_purity", worst, tol);
    if let Some(at) = inner.details.iter().find(|d| d.residual == Some(worst)).and_then(|d| d.point.clone()) {
        purity = purity.at(&at);
    }
    report
        .push(purity)
        .push(Detail::value("max_abs_grad_h", grad_max.max))
        .push(Detail::note("h_gradient_vanishes", (grad_max.max <= sampling.tol).to_string()));
    Ok(report)
}

/// A one-form `q_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm(pub Vec<Expression>);

/// `T^n_{ik} = δ^n_i q̃_k + f^n_i q_k + δ^n_k q̃_i + f^n_k q_i` with `q̃_i = q_s f^s_i`.
pub fn deformation_tensor(q: &OneForm, f: &TensorField) -> Result<TensorField> {
    let dim = f.dim;
    if q.0.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: q.0.len() });
    }
    if !f.partials().components.iter().all(Expression::is_zero) {
        return Err(Error::Precondition("deformation tensor needs a constant structure".into()));
    }
    let fc = |a: usize, b: usize| f.get(&[a, b]);
    let q_tilde: Vec<Expression> = (0..dim).map(|i| sum((0..dim).map(|s| &q.0[s] * fc(s, i)))).collect();
    let delta = |a: usize, b: usize| if a == b { Expression::one() } else { Expression::zero() };
    Ok(TensorField::from_fn(dim, Signature::parse("ull"), |idx| {
        let (n, i, k) = (idx[0], idx[1], idx[2]);
        delta(n, i) * &q_tilde[k] + fc(n, i) * &q.0[k] + delta(n, k) * &q_tilde[i] + fc(n, k) * &q.0[i]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{default_coord_names, parse};
    use crate::manifold::adapted_f;

    fn metric(rows: &[&str]) -> TensorField {
        let dim = (rows.len() as f64).sqrt() as usize;
        let names = default_coord_names(dim);
        TensorField::new(dim, Signature::parse("ll"), rows.iter().map(|t| parse(t, &names).unwrap()).collect()).unwrap()
    }

    fn curved_b() -> TensorField {
        metric(&["z1^2 + 1", "1", "1", "0"])
    }

    #[test]
    fn constant_metric_is_flat() {
        assert!(Connection::christoffel(&metric(&["0", "1", "1", "0"])).unwrap().is_zero());
        assert!(Connection::christoffel(&metric(&["1", "0", "0", "1"])).unwrap().is_zero());
    }

    #[test]
    fn curved_b_metric_has_single_coefficient() {
        let gamma = Connection::christoffel(&curved_b()).unwrap();
        for p in Sampling::default().sample_points(2) {
            let v = gamma.evaluate(&p).unwrap();
            for idx in multi_indices(2, 3) {
                let expected = if idx == [1, 0, 0] { p[0] } else { 0.0 };
                assert!((v.get(&idx) - expected).abs() < 1e-14, "{idx:?}");
            }
        }
    }

    #[test]
    fn singular_metric_is_refused() {
        assert!(matches!(Connection::christoffel(&metric(&["1", "0", "0", "0"])), Err(Error::SingularMetric { .. })));
    }

    #[test]
    fn purity_examples() {
        let f = adapted_f(1, 0);
        let s = Sampling::default();
        assert!(Connection::zero(2).purity(&f, &s).unwrap().passed);
        let r = Connection::christoffel(&curved_b()).unwrap().purity(&f, &s).unwrap();
        assert!(r.passed && r.max_residual <= 1e-12);
        let mut broken = Connection::zero(2);
        broken.coeffs[0] = Expression::one();
        let r = broken.purity(&f, &s).unwrap();
        assert!(!r.passed);
        assert_eq!(r.max_residual, 1.0);
    }

    #[test]
    fn metricity_of_levi_civita() {
        let g = curved_b();
        let gamma = Connection::christoffel(&g).unwrap();
        let ng = gamma.covariant_derivative(&g).unwrap();
        for p in Sampling::default().sample_points(2) {
            assert!(ng.evaluate(&p).unwrap().max_abs() <= 1e-12);
        }
    }

    #[test]
    fn covariant_derivative_of_constant_scalar_vanishes() {
        let c = TensorField::new(2, Signature::scalar(), vec![Expression::num(3.0)]).unwrap();
        let d = Connection::christoffel(&curved_b()).unwrap().covariant_derivative(&c).unwrap();
        assert_eq!(d.signature, Signature::parse("l"));
        assert!(d.components.iter().all(Expression::is_zero));
    }

    #[test]
    fn parallel_structure_for_pure_connection() {
        // ∇_σ f^α_β = ∂_σ f^α_β + Γ^α_{σλ} f^λ_β - Γ^ν_{σβ} f^α_ν vanishes term by term.
        let f = adapted_f(1, 0);
        let gamma = Connection::christoffel(&curved_b()).unwrap();
        let r = nabla_f_check(&gamma, &f, &Sampling::default()).unwrap();
        assert!(r.passed);
        assert!(r.residual("nabla_f") <= 1e-12);
        assert!(r.residual("partial_f") == 0.0);
        let r = nabla_f_check(&Connection::zero(2), &f, &Sampling::default()).unwrap();
        assert_eq!(r.residual("nabla_f"), 0.0);
    }

    #[test]
    fn non_constant_structure_is_caught() {
        let names = default_coord_names(2);
        let f = TensorField::new(
            2,
            Signature::parse("ul"),
            ["0", "0", "exp(z1)", "0"].iter().map(|t| parse(t, &names).unwrap()).collect(),
        )
        .unwrap();
        let r = nabla_f_check(&Connection::zero(2), &f, &Sampling::default()).unwrap();
        assert!(r.residual("partial_f") > 0.3);
        assert!(r.residual("nabla_f") > 0.3);
        assert!(r.passed, "premise is false so the implication holds");
    }

    #[test]
    fn lift_of_zero_is_zero() {
        assert!(Connection::zero(2).complete_lift().unwrap().is_zero());
    }

    #[test]
    fn lift_of_one_dimensional_base() {
        let base = Connection::new(1, vec![Expression::var(0)]).unwrap();
        let lift = base.complete_lift().unwrap();
        let p = [0.7, -0.3];
        let v = lift.evaluate(&p).unwrap();
        assert_eq!(v.get(&[0, 0, 0]), 0.7);
        assert_eq!(v.get(&[1, 0, 0]), -0.3);
        assert_eq!(v.get(&[1, 0, 1]), 0.7);
        assert_eq!(v.get(&[1, 1, 0]), 0.7);
        let nonzero = v.data.iter().filter(|x| **x != 0.0).count();
        assert_eq!(nonzero, 4);
        let r = lift.purity(&adapted_f(1, 0), &Sampling::default()).unwrap();
        assert!(r.passed && r.max_residual <= 1e-12);
    }

    #[test]
    fn lift_rejects_asymmetric_base() {
        let mut coeffs = vec![Expression::zero(); 8];
        coeffs[1] = Expression::one();
        let base = Connection::new(2, coeffs).unwrap();
        assert!(matches!(base.complete_lift(), Err(Error::Precondition(_))));
    }

    #[test]
    fn metric_plus_tilde_examples() {
        let f = adapted_f(1, 0);
        let s = Sampling::default();
        let pair = metric(&["0", "1", "1", "0"]);
        let sum = metric_plus_tilde(&pair, &f, &s).unwrap();
        assert_eq!(sum.evaluate(&[0.0, 0.0]).unwrap().data, vec![1.0, 1.0, 1.0, 0.0]);
        let zero_f = TensorField::zeros(2, Signature::parse("ul"));
        assert_eq!(metric_plus_tilde(&pair, &zero_f, &s).unwrap(), pair);
        let r = tilde_connection_residual(&curved_b(), &f, &s).unwrap();
        assert!(r.passed && r.max_residual <= 1e-9);
    }

    #[test]
    fn metric_plus_tilde_refuses_non_pure_metric() {
        let id = metric(&["1", "0", "0", "1"]);
        assert!(matches!(metric_plus_tilde(&id, &adapted_f(1, 0), &Sampling::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn conformal_scan_examples() {
        let f = adapted_f(1, 0);
        let s = Sampling::default();
        let names = default_coord_names(2);
        for h in ["1", "7.5"] {
            let r = conformal_purity_scan(&curved_b(), &parse(h, &names).unwrap(), &f, &s).unwrap();
            assert!(r.passed);
            assert!(r.max_residual <= 1e-10);
        }
        let r = conformal_purity_scan(&curved_b(), &parse("exp(z1)", &names).unwrap(), &f, &s).unwrap();
        assert!(!r.passed);
        assert!(r.max_residual >= 1e-3);
    }

    /// Independent evaluation of the deformation formula, one term at a time.
    fn deformation_oracle(q: &[f64], f: &TensorValue) -> Vec<f64> {
        let dim = f.dim;
        let fv = |a: usize, b: usize| f.data[a * dim + b];
        let qt: Vec<f64> = (0..dim).map(|i| (0..dim).map(|s| q[s] * fv(s, i)).sum()).collect();
        let mut out = Vec::new();
        for n in 0..dim {
            for i in 0..dim {
                for k in 0..dim {
                    let mut t = 0.0;
                    if n == i {
                        t += qt[k];
                    }
                    t += fv(n, i) * q[k];
                    if n == k {
                        t += qt[i];
                    }
                    t += fv(n, k) * q[i];
                    out.push(t);
                }
            }
        }
        out
    }

    #[test]
    fn deformation_tensor_components() {
        let f = adapted_f(1, 0);
        let (q1, q2) = (0.3, -1.25);
        let q = OneForm(vec![Expression::num(q1), Expression::num(q2)]);
        let t = deformation_tensor(&q, &f).unwrap().evaluate(&[0.0, 0.0]).unwrap();
        assert_eq!(t.data, deformation_oracle(&[q1, q2], &f.evaluate(&[0.0, 0.0]).unwrap()));
        // Frozen from the oracle: T¹₁₁ = 2q₂, T²₁₁ = 2q₁, T²₁₂ = T²₂₁ = 2q₂.
        assert_eq!(t.get(&[0, 0, 0]), 2.0 * q2);
        assert_eq!(t.get(&[1, 0, 0]), 2.0 * q1);
        assert_eq!(t.get(&[1, 0, 1]), 2.0 * q2);
        assert_eq!(t.get(&[1, 1, 0]), 2.0 * q2);
        assert_eq!(t.data.iter().filter(|x| **x != 0.0).count(), 4);
        let zero = deformation_tensor(&OneForm(vec![Expression::zero(); 2]), &f).unwrap();
        assert!(zero.components.iter().all(Expression::is_zero));
    }

    #[test]
    fn deformation_is_pure_in_every_pair() {
        let f = adapted_f(2, 0);
        let names = default_coord_names(4);
        let q = OneForm(["z1", "1 + z2^2", "sin(z3)", "z4*z1"].iter().map(|t| parse(t, &names).unwrap()).collect());
        let t = deformation_tensor(&q, &f).unwrap();
        let s = Sampling::default();
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            assert!(crate::tensor::is_pure(&t, a, b, &f, &s).unwrap().passed);
        }
        let deformed = Connection::zero(4).deform(&t).unwrap();
        assert!(deformed.purity(&f, &s).unwrap().passed);
    }

    #[test]
    fn deform_by_zero_is_identity() {
        let gamma = Connection::christoffel(&curved_b()).unwrap();
        let same = gamma.deform(&TensorField::zeros(2, Signature::parse("ull"))).unwrap();
        assert_eq!(same, gamma);
    }
}
