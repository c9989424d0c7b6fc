//! Chart bookkeeping for a `2n+m`-dimensional chart `(z^i, z^{n+i}, z^{2n+a})`
//! carrying a nilpotent structure `f`.
//!
//! In the adapted basis `f^{n+i}_i = 1` and every other component vanishes, so
//! `f` maps base directions onto tangent-fiber directions and `ker f` is
//! spanned by the last `n+m` coordinate directions.

use crate::error::{Error, Result};
use crate::expr::{default_coord_names, sum, Expression};
use crate::linalg;
use crate::report::{CheckReport, Detail, MaxTracker};
use crate::sampling::Sampling;
use crate::tensor::{Signature, TensorField, TensorValue};

/// The constant adapted structure for base dimension `n` and `m` extra fiber coordinates.
pub fn adapted_f(n: usize, m: usize) -> TensorField {
    let dim = 2 * n + m;
    TensorField::from_fn(dim, Signature::parse("ul"), |idx| {
        if idx[1] < n && idx[0] == n + idx[1] {
            Expression::one()
        } else {
            Expression::zero()
        }
    })
}

/// Null-space basis of a (1,1) value, via row reduction with partial pivoting.
pub fn kernel_basis(f: &TensorValue) -> Vec<Vec<f64>> {
    linalg::null_space(&f.data, f.dim, f.dim, 1e-12)
}

/// Which symmetric relation `g̃_{αβ} = g_{λβ} f^λ_α` must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricType {
    /// `g̃` symmetric: `g(fx, y) = g(x, fy)`.
    BType,
    /// `g̃` antisymmetric: `g(x, fy) = -g(fx, y)`.
    KaehlerType,
}

/// Basis of constant symmetric matrices whose `g̃` is symmetric (B-type) or
/// antisymmetric (Kähler-type) for the constant structure `f`.
///
/// Each basis element is paired with the upper-triangular entry that is free
/// in it, which callers use to attach coefficient functions.
pub fn metric_constraint_basis(f: &TensorValue, kind: MetricType) -> Vec<((usize, usize), Vec<f64>)> {
    let dim = f.dim;
    let unknowns: Vec<(usize, usize)> = (0..dim).flat_map(|i| (i..dim).map(move |j| (i, j))).collect();
    let column = |a: usize, b: usize| {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        unknowns.iter().position(|&u| u == (a, b)).unwrap()
    };
    let sign = match kind {
        MetricType::BType => -1.0,
        MetricType::KaehlerType => 1.0,
    };
    // Row (α, β): g̃_{αβ} + sign * g̃_{βα} = 0 with g̃_{αβ} = Σ_λ g_{λβ} f^λ_α.
    let mut rows = Vec::new();
    for a in 0..dim {
        for b in a..dim {
            let mut row = vec![0.0; unknowns.len()];
            for l in 0..dim {
                row[column(l, b)] += f.data[l * dim + a];
                row[column(l, a)] += sign * f.data[l * dim + b];
            }
            rows.push(row);
        }
    }
    let flat: Vec<f64> = rows.concat();
    let basis = linalg::null_space(&flat, rows.len(), unknowns.len(), 1e-12);
    basis
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let col = (0..unknowns.len())
                .find(|&c| v[c] == 1.0 && basis.iter().enumerate().all(|(j, w)| j == k || w[c] == 0.0))
                .expect("row reduction leaves a unit free column");
            let free = unknowns[col];
            let mut m = vec![0.0; dim * dim];
            for (k, &(i, j)) in unknowns.iter().enumerate() {
                m[i * dim + j] = v[k];
                m[j * dim + i] = v[k];
            }
            (free, m)
        })
        .collect()
}

/// Complete lift `g^C = [[y^s ∂_s g_ij, g_ij], [g_ij, 0]]` of a base metric in
/// variables `0..n`, with `y^s` the variable `n + s`.
pub fn complete_lift_metric(base: &TensorField) -> Result<TensorField> {
    let n = base.dim;
    if base.signature != Signature::parse("ll") {
        return Err(Error::SlotMismatch("base metric must have two lower slots".into()));
    }
    if base.components.iter().any(|e| e.max_var().is_some_and(|v| v >= n)) {
        return Err(Error::Precondition("base metric may only use the n base coordinates".into()));
    }
    Ok(TensorField::from_fn(2 * n, Signature::parse("ll"), |idx| {
        let (a, b) = (idx[0], idx[1]);
        match (a < n, b < n) {
            (true, true) => {
                let g = base.get(&[a, b]);
                sum((0..n).map(|s| Expression::var(n + s) * g.diff(s)))
            }
            (true, false) => base.get(&[a, b - n]).clone(),
            (false, true) => base.get(&[a - n, b]).clone(),
            (false, false) => Expression::zero(),
        }
    }))
}

/// A chart with metric and structure.
#[derive(Debug, Clone)]
pub struct ChartManifold {
    pub n: usize,
    pub m: usize,
    pub coords: Vec<String>,
    pub metric: TensorField,
    pub f: TensorField,
}

impl ChartManifold {
    /// Builds a chart; `f` defaults to the adapted structure.
    pub fn new(
        n: usize,
        m: usize,
        coords: Option<Vec<String>>,
        metric: TensorField,
        f: Option<TensorField>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("base dimension n must be at least 1".into()));
        }
        let dim = 2 * n + m;
        let coords = coords.unwrap_or_else(|| default_coord_names(dim));
        if coords.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: coords.len() });
        }
        if metric.dim != dim || metric.signature != Signature::parse("ll") {
            return Err(Error::DimensionMismatch { expected: dim, found: metric.dim });
        }
        let f = f.unwrap_or_else(|| adapted_f(n, m));
        if f.dim != dim || f.signature != Signature::parse("ul") {
            return Err(Error::DimensionMismatch { expected: dim, found: f.dim });
        }
        Ok(ChartManifold { n, m, coords, metric, f })
    }

    pub fn dim(&self) -> usize {
        2 * self.n + self.m
    }

    /// `∂f ≡ 0` structurally, which every theorem check requires.
    pub fn f_is_constant(&self) -> bool {
        self.f.components.iter().all(|e| (0..self.dim()).all(|s| e.diff(s).is_zero()))
    }

    /// `g̃_{αβ} = g_{λβ} f^λ_α`.
    pub fn g_tilde(&self) -> TensorField {
        self.metric.apply_f(&self.f, 0).expect("shapes checked at construction")
    }

    /// Checks metric symmetry, nondegeneracy, `f² = 0` and `rank f = n` at samples.
    /// A degenerate metric aborts with the offending point.
    pub fn validate(&self, sampling: &Sampling) -> Result<CheckReport> {
        let dim = self.dim();
        let points = sampling.sample_points(dim);
        let mut symmetry = MaxTracker::default();
        let mut nilpotency = MaxTracker::default();
        let mut rank_defect = MaxTracker::default();
        let mut min_det = f64::INFINITY;
        for p in &points {
            let g = self.metric.evaluate(p)?;
            symmetry.observe(g.symmetry_residual(0, 1, false), p);
            let det = linalg::determinant(&g.data, dim);
            if !det.is_finite() || det.abs() < linalg::SINGULAR_DET {
                return Err(Error::SingularMetric { point: p.clone(), det });
            }
            min_det = min_det.min(det.abs());
            let f = self.f.evaluate(p)?;
            nilpotency.observe(f.apply_f(&f, 0)?.max_abs(), p);
            let r = linalg::rank(&f.data, dim, dim, 1e-10);
            rank_defect.observe(r as f64 - self.n as f64, p);
        }
        let mut report = CheckReport::new("validate", points.len());
        report
            .push(symmetry.detail("metric_symmetry", 1e-12))
            .push(Detail::value("min_abs_det", min_det))
            .push(nilpotency.detail("f_squared", 1e-12))
            .push(rank_defect.detail("rank_f_minus_n", 0.0))
            .push(Detail::note(
                "f_constant",
                if self.f_is_constant() { "true" } else { "false: theorem checks need a constant structure" },
            ));
        Ok(report)
    }
}

/// Coordinate change `(z̄) -> (z)` of the form
/// `z^i = φ^i(z̄^base)`, `z^{n+i} = Σ_k ∂_k φ^i z̄^{n+k}`, `z^{2n+a} = Θ^a(z̄^base, z̄^extra)`.
#[derive(Debug, Clone)]
pub struct TransitionMap {
    pub n: usize,
    pub m: usize,
    /// Functions of `z̄^1..z̄^n` (variables `0..n` of the full chart).
    pub phi: Vec<Expression>,
    /// Functions of `z̄^1..z̄^n` and `z̄^{2n+1}..z̄^{2n+m}`.
    pub theta: Vec<Expression>,
}

#[derive(Debug, Clone)]
pub struct LiftedTransition {
    /// The `2n+m` new coordinates as functions of the old ones.
    pub map: Vec<Expression>,
    /// `J^α_β = ∂z^α / ∂z̄^β`.
    pub jacobian: TensorField,
    pub report: CheckReport,
}

impl TransitionMap {
    pub fn new(n: usize, m: usize, phi: Vec<Expression>, theta: Vec<Expression>) -> Result<Self> {
        if phi.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: phi.len() });
        }
        if theta.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: theta.len() });
        }
        let dim = 2 * n + m;
        for e in &phi {
            if (n..dim).any(|v| e.depends_on(v)) {
                return Err(Error::Precondition("φ may depend on base coordinates only".into()));
            }
        }
        for e in &theta {
            if (n..2 * n).any(|v| e.depends_on(v)) {
                return Err(Error::Precondition("Θ may not depend on tangent-fiber coordinates".into()));
            }
        }
        Ok(TransitionMap { n, m, phi, theta })
    }

    pub fn identity(n: usize, m: usize) -> Self {
        TransitionMap {
            n,
            m,
            phi: (0..n).map(Expression::var).collect(),
            theta: (0..m).map(|a| Expression::var(2 * n + a)).collect(),
        }
    }

    /// The full coordinate map, its Jacobian, and a sampled certificate that
    /// the Jacobian commutes with the adapted structure.
    pub fn lift(&self, sampling: &Sampling) -> Result<LiftedTransition> {
        let (n, m) = (self.n, self.m);
        let dim = 2 * n + m;
        let mut map: Vec<Expression> = self.phi.clone();
        for i in 0..n {
            map.push(sum((0..n).map(|k| self.phi[i].diff(k) * Expression::var(n + k))));
        }
        map.extend(self.theta.iter().cloned());
        let jacobian = TensorField::from_fn(dim, Signature::parse("ul"), |idx| map[idx[0]].diff(idx[1]));

        let f = adapted_f(n, m).evaluate(&vec![0.0; dim])?;
        let points = sampling.sample_points(dim);
        let mut commutation = MaxTracker::default();
        for p in &points {
            let j = jacobian.evaluate(p)?;
            let base: Vec<f64> =
                (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).map(|(a, b)| j.data[a * dim + b]).collect();
            let det = linalg::determinant(&base, n);
            if !det.is_finite() || det.abs() < linalg::SINGULAR_DET {
                return Err(Error::SingularJacobian { point: p.clone(), det });
            }
            let jf = j.outer(&f).contract(1, 2)?;
            let fj = f.outer(&j).contract(1, 2)?;
            commutation.observe(jf.max_abs_diff(&fj), p);
        }
        let mut report = CheckReport::new("transition_commutes_with_f", points.len());
        report.push(commutation.detail("max_abs(Jf - fJ)", 1e-9));
        Ok(LiftedTransition { map, jacobian, report })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn adapted_structure_blocks() {
        let f = adapted_f(1, 0).evaluate(&[0.0, 0.0]).unwrap();
        assert_eq!(f.data, vec![0.0, 0.0, 1.0, 0.0]);
        let f = adapted_f(2, 0).evaluate(&[0.0; 4]).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let expected = if (a, b) == (2, 0) || (a, b) == (3, 1) { 1.0 } else { 0.0 };
                assert_eq!(f.get(&[a, b]), expected);
            }
        }
        for (n, m) in [(1, 0), (2, 1), (3, 2)] {
            let f = adapted_f(n, m).evaluate(&vec![0.0; 2 * n + m]).unwrap();
            assert_eq!(f.apply_f(&f, 0).unwrap().max_abs(), 0.0);
        }
    }

    #[test]
    fn adapted_structure_has_exactly_zero_partials() {
        let f = adapted_f(2, 1);
        assert!(f.partials().components.iter().all(|e| e.is_zero()));
    }

    #[test]
    fn kernels() {
        let f = adapted_f(1, 0).evaluate(&[0.0; 2]).unwrap();
        assert_eq!(kernel_basis(&f), vec![vec![0.0, 1.0]]);
        let f = adapted_f(2, 1).evaluate(&[0.0; 5]).unwrap();
        let k = kernel_basis(&f);
        assert_eq!(k.len(), 3);
        for v in &k {
            assert!(f.apply_to_vector(v).iter().all(|x| *x == 0.0));
        }
        let zero = TensorValue::zeros(3, Signature::parse("ul"));
        assert_eq!(kernel_basis(&zero).len(), 3);
    }

    #[test]
    fn identity_transition_commutes() {
        let lifted = TransitionMap::identity(1, 1).lift(&Sampling::default()).unwrap();
        assert!(lifted.report.passed);
        assert_eq!(lifted.report.max_residual, 0.0);
        let j = lifted.jacobian.evaluate(&[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(j, TensorValue::identity(3));
    }

    #[test]
    fn square_map_scales_fiber() {
        let names = default_coord_names(2);
        let t = TransitionMap::new(1, 0, vec![parse("z1^2", &names).unwrap()], vec![]).unwrap();
        let lifted = t.lift(&Sampling::default().with_box(0.5, 1.5)).unwrap();
        let z: Vec<f64> = lifted.map.iter().map(|e| e.eval(&[1.0, 3.0]).unwrap()).collect();
        assert_eq!(z, vec![1.0, 6.0]);
        assert!(lifted.report.passed);
    }

    #[test]
    fn singular_base_jacobian_is_reported() {
        let names = default_coord_names(2);
        let t = TransitionMap::new(1, 0, vec![parse("z1^2", &names).unwrap()], vec![]).unwrap();
        let s = Sampling { lo: 0.0, hi: 0.0, ..Sampling::default() };
        assert!(matches!(t.lift(&s), Err(Error::SingularJacobian { .. })));
    }

    #[test]
    fn transition_rejects_fiber_dependence() {
        let names = default_coord_names(2);
        assert!(TransitionMap::new(1, 0, vec![parse("z1 + z2", &names).unwrap()], vec![]).is_err());
    }

    #[test]
    fn b_type_constraint_basis_n1() {
        let f = adapted_f(1, 0).evaluate(&[0.0; 2]).unwrap();
        // g̃ = [[g12, g22], [0, 0]] symmetric forces g22 = 0.
        let basis = metric_constraint_basis(&f, MetricType::BType);
        assert_eq!(basis.len(), 2);
        for (_, m) in &basis {
            assert_eq!(m[3], 0.0);
        }
        // Hybrid at n = 1 forces g12 = g22 = 0, which is degenerate.
        let basis = metric_constraint_basis(&f, MetricType::KaehlerType);
        assert_eq!(basis.len(), 1);
        assert_eq!(basis[0].1, vec![1.0, 0.0, 0.0, 0.0]);
    }
}
