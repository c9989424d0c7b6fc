//! Dense tensor fields and their pointwise values.
//!
//! Components are stored row-major over `dim^rank` multi-indices, with slot
//! `0` varying slowest. Purity and hybridity of a slot pair with respect to a
//! (1,1) structure `f` are decided by sampling: the two single-slot
//! contractions with `f` must agree (pure) or cancel (hybrid) at every point.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{sum, Expression};
use crate::linalg;
use crate::report::{CheckReport, MaxTracker};
use crate::sampling::Sampling;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Slot {
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature(Vec<Slot>);

impl Signature {
    pub fn new(slots: Vec<Slot>) -> Self {
        Signature(slots)
    }

    /// From a compact spec such as `"ull"`.
    pub fn parse(spec: &str) -> Self {
        Signature(
            spec.chars()
                .map(|c| match c {
                    'u' | 'U' => Slot::Upper,
                    'l' | 'L' => Slot::Lower,
                    _ => panic!("signature characters are `u` or `l`, got `{c}`"),
                })
                .collect(),
        )
    }

    pub fn scalar() -> Self {
        Signature(Vec::new())
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.0
    }

    pub fn slot(&self, i: usize) -> Slot {
        self.0[i]
    }

    fn with(&self, i: usize, slot: Slot) -> Self {
        let mut s = self.0.clone();
        s[i] = slot;
        Signature(s)
    }

    fn without(&self, a: usize, b: usize) -> Self {
        Signature(self.0.iter().enumerate().filter(|(k, _)| *k != a && *k != b).map(|(_, s)| *s).collect())
    }

    fn prepend(&self, slot: Slot) -> Self {
        let mut s = vec![slot];
        s.extend_from_slice(&self.0);
        Signature(s)
    }
}

/// Iterator over all multi-indices of a given rank and dimension, row-major.
pub fn multi_indices(dim: usize, rank: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = dim.pow(rank as u32);
    (0..total).map(move |mut flat| {
        let mut idx = vec![0; rank];
        for k in (0..rank).rev() {
            idx[k] = flat % dim;
            flat /= dim;
        }
        idx
    })
}

fn flat_index(dim: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &i| acc * dim + i)
}

fn check_slot(sig: &Signature, slot: usize) -> Result<()> {
    if slot >= sig.rank() {
        return Err(Error::SlotMismatch(format!("slot {slot} out of range for rank {}", sig.rank())));
    }
    Ok(())
}

fn check_structure(dim: usize, f: &TensorValue) -> Result<()> {
    if f.dim != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: f.dim });
    }
    if f.signature.slots() != [Slot::Upper, Slot::Lower] {
        return Err(Error::SlotMismatch("structure must be a (1,1) tensor".into()));
    }
    Ok(())
}

/// Numeric tensor at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorValue {
    pub dim: usize,
    pub signature: Signature,
    pub data: Vec<f64>,
}

impl TensorValue {
    pub fn zeros(dim: usize, signature: Signature) -> Self {
        let len = dim.pow(signature.rank() as u32);
        TensorValue { dim, signature, data: vec![0.0; len] }
    }

    pub fn from_fn(dim: usize, signature: Signature, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let data = multi_indices(dim, signature.rank()).map(|i| f(&i)).collect();
        TensorValue { dim, signature, data }
    }

    /// Row-major matrix with signature `sig` (must be rank 2).
    pub fn matrix(dim: usize, signature: Signature, rows: &[f64]) -> Self {
        assert_eq!(signature.rank(), 2);
        assert_eq!(rows.len(), dim * dim);
        TensorValue { dim, signature, data: rows.to_vec() }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, Signature::parse("ul"), |i| if i[0] == i[1] { 1.0 } else { 0.0 })
    }

    pub fn rank(&self) -> usize {
        self.signature.rank()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[flat_index(self.dim, idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let k = flat_index(self.dim, idx);
        self.data[k] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &TensorValue) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn zip_with(&self, other: &TensorValue, f: impl Fn(f64, f64) -> f64) -> TensorValue {
        TensorValue {
            dim: self.dim,
            signature: self.signature.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    /// Sum over a paired index, one upper and one lower slot in either order; the rank drops by two.
    pub fn contract(&self, a: usize, b: usize) -> Result<TensorValue> {
        check_slot(&self.signature, a)?;
        check_slot(&self.signature, b)?;
        if a == b || self.signature.slot(a) == self.signature.slot(b) {
            return Err(Error::SlotMismatch(format!(
                "contraction needs an upper and a lower slot, got {a} ({:?}) and {b} ({:?})",
                self.signature.slot(a),
                self.signature.slot(b)
            )));
        }
        let sig = self.signature.without(a, b);
        let rank = self.rank();
        let mut full = vec![0; rank];
        Ok(TensorValue::from_fn(self.dim, sig, |rest| {
            let mut it = rest.iter();
            for (k, slot) in full.iter_mut().enumerate() {
                if k != a && k != b {
                    *slot = *it.next().unwrap();
                }
            }
            (0..self.dim)
                .map(|s| {
                    full[a] = s;
                    full[b] = s;
                    self.get(&full)
                })
                .sum()
        }))
    }

    /// Tensor product `self ⊗ other`, slots of `self` first.
    pub fn outer(&self, other: &TensorValue) -> TensorValue {
        let sig = Signature::new([self.signature.slots(), other.signature.slots()].concat());
        let mut data = Vec::with_capacity(self.data.len() * other.data.len());
        for a in &self.data {
            for b in &other.data {
                data.push(a * b);
            }
        }
        TensorValue { dim: self.dim, signature: sig, data }
    }

    /// Contracts the (1,1) structure `f` into one slot, keeping the signature.
    /// A lower slot receives `f`'s upper index, an upper slot its lower index.
    pub fn apply_f(&self, f: &TensorValue, slot: usize) -> Result<TensorValue> {
        check_structure(self.dim, f)?;
        check_slot(&self.signature, slot)?;
        let kind = self.signature.slot(slot);
        let dim = self.dim;
        let mut src = vec![0; self.rank()];
        Ok(TensorValue::from_fn(dim, self.signature.clone(), |idx| {
            src.copy_from_slice(idx);
            let mut acc = 0.0;
            for l in 0..dim {
                let coeff = match kind {
                    Slot::Lower => f.data[l * dim + idx[slot]],
                    Slot::Upper => f.data[idx[slot] * dim + l],
                };
                if coeff != 0.0 {
                    src[slot] = l;
                    acc += coeff * self.get(&src);
                }
            }
            acc
        }))
    }

    /// Lowers an upper slot with the metric value `g` (signature `ll`).
    pub fn lower(&self, slot: usize, g: &TensorValue) -> Result<TensorValue> {
        self.move_index(slot, g, Slot::Upper)
    }

    /// Raises a lower slot with the inverse metric value (signature `uu`).
    pub fn raise(&self, slot: usize, g_inv: &TensorValue) -> Result<TensorValue> {
        self.move_index(slot, g_inv, Slot::Lower)
    }

    fn move_index(&self, slot: usize, metric: &TensorValue, from: Slot) -> Result<TensorValue> {
        check_slot(&self.signature, slot)?;
        if self.signature.slot(slot) != from {
            return Err(Error::SlotMismatch(format!("slot {slot} is not {from:?}")));
        }
        if metric.dim != self.dim || metric.rank() != 2 {
            return Err(Error::DimensionMismatch { expected: self.dim, found: metric.dim });
        }
        let to = match from {
            Slot::Upper => Slot::Lower,
            Slot::Lower => Slot::Upper,
        };
        let dim = self.dim;
        let mut src = vec![0; self.rank()];
        Ok(TensorValue::from_fn(dim, self.signature.with(slot, to), |idx| {
            src.copy_from_slice(idx);
            (0..dim)
                .map(|l| {
                    src[slot] = l;
                    metric.data[idx[slot] * dim + l] * self.get(&src)
                })
                .sum()
        }))
    }

    /// `max |T(..a..b..) - T(..b..a..)|` over all components.
    pub fn symmetry_residual(&self, a: usize, b: usize, anti: bool) -> f64 {
        let sign = if anti { -1.0 } else { 1.0 };
        let mut swapped = vec![0; self.rank()];
        multi_indices(self.dim, self.rank()).fold(0.0, |m, idx| {
            swapped.copy_from_slice(&idx);
            swapped.swap(a, b);
            m.max((self.get(&idx) - sign * self.get(&swapped)).abs())
        })
    }

    /// Componentwise `|f_a T - f_b T|` (pure) or `|f_a T + f_b T|` (hybrid).
    pub fn purity_residual(&self, f: &TensorValue, a: usize, b: usize, hybrid: bool) -> Result<f64> {
        let left = self.apply_f(f, a)?;
        let right = self.apply_f(f, b)?;
        let sign = if hybrid { -1.0 } else { 1.0 };
        Ok(left.data.iter().zip(&right.data).fold(0.0, |m, (x, y)| m.max((x - sign * y).abs())))
    }

    /// Row-major copy of a rank-2 value as `dim x dim`.
    pub fn as_matrix(&self) -> &[f64] {
        assert_eq!(self.rank(), 2);
        &self.data
    }

    /// `f(x)` for a (1,1) value and a vector.
    pub fn apply_to_vector(&self, x: &[f64]) -> Vec<f64> {
        let dim = self.dim;
        (0..dim).map(|a| (0..dim).map(|b| self.data[a * dim + b] * x[b]).sum()).collect()
    }

    /// Bilinear form `g(x, y)` for a rank-2 value.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let dim = self.dim;
        let mut acc = 0.0;
        for a in 0..dim {
            for b in 0..dim {
                acc += self.data[a * dim + b] * x[a] * y[b];
            }
        }
        acc
    }
}

/// Tensor field with symbolic components.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub dim: usize,
    pub signature: Signature,
    pub components: Vec<Expression>,
}

impl TensorField {
    pub fn new(dim: usize, signature: Signature, components: Vec<Expression>) -> Result<Self> {
        let expected = dim.pow(signature.rank() as u32);
        if components.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: components.len() });
        }
        Ok(TensorField { dim, signature, components })
    }

    pub fn zeros(dim: usize, signature: Signature) -> Self {
        let len = dim.pow(signature.rank() as u32);
        TensorField { dim, signature, components: vec![Expression::zero(); len] }
    }

    pub fn from_fn(dim: usize, signature: Signature, mut f: impl FnMut(&[usize]) -> Expression) -> Self {
        let components = multi_indices(dim, signature.rank()).map(|i| f(&i)).collect();
        TensorField { dim, signature, components }
    }

    pub fn constant(value: &TensorValue) -> Self {
        TensorField {
            dim: value.dim,
            signature: value.signature.clone(),
            components: value.data.iter().map(|v| Expression::num(*v)).collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.signature.rank()
    }

    pub fn get(&self, idx: &[usize]) -> &Expression {
        &self.components[flat_index(self.dim, idx)]
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<TensorValue> {
        if point.len() < self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: point.len() });
        }
        let data = self.components.iter().map(|e| e.eval(point)).collect::<Result<Vec<_>>>()?;
        Ok(TensorValue { dim: self.dim, signature: self.signature.clone(), data })
    }

    /// True when every component is a numeric literal.
    pub fn is_constant(&self) -> bool {
        self.components.iter().all(|e| e.as_constant().is_some())
    }

    /// Coordinate partials `∂_σ T`, with the new lower slot `σ` placed first.
    pub fn partials(&self) -> TensorField {
        let sig = self.signature.prepend(Slot::Lower);
        let per = self.components.len();
        let mut components = Vec::with_capacity(per * self.dim);
        for s in 0..self.dim {
            components.extend(self.components.iter().map(|e| e.diff(s)));
        }
        TensorField { dim: self.dim, signature: sig, components }
    }

    pub fn map(&self, f: impl Fn(&Expression) -> Expression) -> TensorField {
        TensorField {
            dim: self.dim,
            signature: self.signature.clone(),
            components: self.components.iter().map(f).collect(),
        }
    }

    pub fn zip_with(&self, other: &TensorField, f: impl Fn(&Expression, &Expression) -> Expression) -> TensorField {
        TensorField {
            dim: self.dim,
            signature: self.signature.clone(),
            components: self.components.iter().zip(&other.components).map(|(a, b)| f(a, b)).collect(),
        }
    }

    /// Symbolic version of [`TensorValue::apply_f`].
    pub fn apply_f(&self, f: &TensorField, slot: usize) -> Result<TensorField> {
        check_slot(&self.signature, slot)?;
        if f.dim != self.dim || f.signature.slots() != [Slot::Upper, Slot::Lower] {
            return Err(Error::SlotMismatch("structure must be a (1,1) field of matching dimension".into()));
        }
        let kind = self.signature.slot(slot);
        let dim = self.dim;
        Ok(TensorField::from_fn(dim, self.signature.clone(), |idx| {
            let mut src = idx.to_vec();
            sum((0..dim).filter_map(|l| {
                let coeff = match kind {
                    Slot::Lower => &f.components[l * dim + idx[slot]],
                    Slot::Upper => &f.components[idx[slot] * dim + l],
                };
                if coeff.is_zero() {
                    return None;
                }
                src[slot] = l;
                Some(coeff * self.get(&src))
            }))
        }))
    }

    /// Lowers an upper slot with the symbolic metric `g` (signature `ll`).
    pub fn lower_index(&self, slot: usize, g: &TensorField) -> Result<TensorField> {
        self.move_index(slot, g, Slot::Upper)
    }

    /// Raises a lower slot with the symbolic inverse metric (signature `uu`).
    pub fn raise_index(&self, slot: usize, g_inv: &TensorField) -> Result<TensorField> {
        self.move_index(slot, g_inv, Slot::Lower)
    }

    fn move_index(&self, slot: usize, metric: &TensorField, from: Slot) -> Result<TensorField> {
        check_slot(&self.signature, slot)?;
        if self.signature.slot(slot) != from {
            return Err(Error::SlotMismatch(format!("slot {slot} is not {from:?}")));
        }
        if metric.dim != self.dim || metric.rank() != 2 {
            return Err(Error::DimensionMismatch { expected: self.dim, found: metric.dim });
        }
        let to = match from {
            Slot::Upper => Slot::Lower,
            Slot::Lower => Slot::Upper,
        };
        let dim = self.dim;
        Ok(TensorField::from_fn(dim, self.signature.with(slot, to), |idx| {
            let mut src = idx.to_vec();
            sum((0..dim).filter_map(|l| {
                let m = &metric.components[idx[slot] * dim + l];
                if m.is_zero() {
                    return None;
                }
                src[slot] = l;
                Some(m * self.get(&src))
            }))
        }))
    }

    /// Symbolic inverse of a rank-2 field, with both slots flipped.
    pub fn inverse(&self) -> Result<TensorField> {
        if self.rank() != 2 {
            return Err(Error::SlotMismatch("only rank-2 fields can be inverted".into()));
        }
        let flip = |s: Slot| match s {
            Slot::Upper => Slot::Lower,
            Slot::Lower => Slot::Upper,
        };
        let sig = Signature::new(self.signature.slots().iter().map(|s| flip(*s)).collect());
        let inv = linalg::symbolic_inverse(&self.components, self.dim);
        TensorField::new(self.dim, sig, inv)
    }
}

/// Shared driver for [`is_pure`] and [`is_hybrid`].
fn purity_report(
    check: &str,
    t: &TensorField,
    a: usize,
    b: usize,
    f: &TensorField,
    sampling: &Sampling,
    hybrid: bool,
) -> Result<CheckReport> {
    let points = sampling.sample_points(t.dim);
    let mut tracker = MaxTracker::default();
    let mut scale = 0.0f64;
    for p in &points {
        let tv = t.evaluate(p)?;
        let fv = f.evaluate(p)?;
        scale = scale.max(tv.max_abs());
        tracker.observe(tv.purity_residual(&fv, a, b, hybrid)?, p);
    }
    let tol = sampling.tol * (1.0 + scale);
    let mut report = CheckReport::new(check, points.len());
    report.push(tracker.detail(format!("slots({a},{b})"), tol));
    Ok(report)
}

/// Samples `|f_a T - f_b T|`; passes when the maximum is within `tol * (1 + max|T|)`.
pub fn is_pure(t: &TensorField, a: usize, b: usize, f: &TensorField, sampling: &Sampling) -> Result<CheckReport> {
    purity_report("pure", t, a, b, f, sampling, false)
}

/// Samples `|f_a T + f_b T|` with the same scaling as [`is_pure`].
pub fn is_hybrid(t: &TensorField, a: usize, b: usize, f: &TensorField, sampling: &Sampling) -> Result<CheckReport> {
    purity_report("hybrid", t, a, b, f, sampling, true)
}
