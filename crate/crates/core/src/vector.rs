//! Dense real vectors.
//!
//! Every parameter, momentum and gradient in the crate is a [`Vector`]. The
//! arithmetic here is pure (inputs are borrowed, results are fresh) and
//! refuses to hand back non-finite values: an overflow or a domain violation
//! becomes a [`NumError`] instead of a silent NaN.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Deref, Index};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum NumError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("{op}: argument out of domain at index {index}")]
    Domain { op: &'static str, index: usize },
    #[error("{op}: non-finite result at index {index}")]
    NonFinite { op: &'static str, index: usize },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(elements: Vec<f64>) -> Self {
        Self(elements)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn filled(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn add(&self, other: &Vector) -> Result<Vector, NumError> {
        self.zip_with(other, "add", |a, b| Ok(a + b))
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector, NumError> {
        self.zip_with(other, "sub", |a, b| Ok(a - b))
    }

    pub fn mul(&self, other: &Vector) -> Result<Vector, NumError> {
        self.zip_with(other, "mul", |a, b| Ok(a * b))
    }

    pub fn div(&self, other: &Vector) -> Result<Vector, NumError> {
        self.zip_with(other, "div", |a, b| if b == 0.0 { Err(()) } else { Ok(a / b) })
    }

    pub fn scale(&self, factor: f64) -> Result<Vector, NumError> {
        self.map_checked("scale", |a| Ok(a * factor))
    }

    pub fn sqrt(&self) -> Result<Vector, NumError> {
        self.map_checked("sqrt", |a| if a < 0.0 { Err(()) } else { Ok(libm::sqrt(a)) })
    }

    pub fn square(&self) -> Result<Vector, NumError> {
        self.map_checked("square", |a| Ok(a * a))
    }

    pub fn dot(&self, other: &Vector) -> Result<f64, NumError> {
        check_len(self.len(), other.len())?;
        let d: f64 = self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum();
        if d.is_finite() {
            Ok(d)
        } else {
            Err(NumError::NonFinite { op: "dot", index: 0 })
        }
    }

    /// Squared Euclidean norm.
    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|a| a * a).sum()
    }

    /// Euclidean norm, computed with scaling so that it does not overflow
    /// before the true norm does.
    pub fn norm(&self) -> f64 {
        let scale = self.0.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
        if scale == 0.0 || !scale.is_finite() {
            return scale;
        }
        let s: f64 = self.0.iter().map(|a| (a / scale) * (a / scale)).sum();
        scale * libm::sqrt(s)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, a| m.max(a.abs()))
    }

    fn zip_with(
        &self,
        other: &Vector,
        op: &'static str,
        f: impl Fn(f64, f64) -> Result<f64, ()>,
    ) -> Result<Vector, NumError> {
        check_len(self.len(), other.len())?;
        self.0
            .iter()
            .zip(&other.0)
            .enumerate()
            .map(|(index, (&a, &b))| finite(op, index, f(a, b)))
            .collect::<Result<Vec<_>, _>>()
            .map(Vector)
    }

    fn map_checked(
        &self,
        op: &'static str,
        f: impl Fn(f64) -> Result<f64, ()>,
    ) -> Result<Vector, NumError> {
        self.0
            .iter()
            .enumerate()
            .map(|(index, &a)| finite(op, index, f(a)))
            .collect::<Result<Vec<_>, _>>()
            .map(Vector)
    }
}

fn finite(op: &'static str, index: usize, value: Result<f64, ()>) -> Result<f64, NumError> {
    match value {
        Err(()) => Err(NumError::Domain { op, index }),
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(NumError::NonFinite { op, index }),
    }
}

pub(crate) fn check_len(left: usize, right: usize) -> Result<(), NumError> {
    if left == right {
        Ok(())
    } else {
        Err(NumError::LengthMismatch { left, right })
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<&[f64]> for Vector {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

impl<const N: usize> From<[f64; N]> for Vector {
    fn from(v: [f64; N]) -> Self {
        Self(v.to_vec())
    }
}

impl FromIterator<f64> for Vector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn norm_of_three_four() {
        assert_eq!(Vector::from([3.0, 4.0]).norm(), 5.0);
    }

    #[test]
    fn square_is_elementwise() {
        assert_eq!(Vector::from([2.0, -2.0]).square().unwrap(), Vector::from([4.0, 4.0]));
    }

    #[test]
    fn divide_by_zero_is_domain_error() {
        let err = Vector::from([1.0]).div(&Vector::from([0.0])).unwrap_err();
        assert_eq!(err, NumError::Domain { op: "div", index: 0 });
    }

    #[test]
    fn sqrt_of_negative_is_domain_error() {
        assert!(matches!(
            Vector::from([1.0, -1.0]).sqrt(),
            Err(NumError::Domain { index: 1, .. })
        ));
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let a = Vector::zeros(2);
        let b = Vector::zeros(3);
        assert_eq!(a.add(&b), Err(NumError::LengthMismatch { left: 2, right: 3 }));
        assert!(a.dot(&b).is_err());
    }

    #[test]
    fn overflow_surfaces_as_error() {
        let big = Vector::from([f64::MAX]);
        assert!(matches!(big.add(&big), Err(NumError::NonFinite { .. })));
        assert!(matches!(big.scale(2.0), Err(NumError::NonFinite { .. })));
    }

    #[test]
    fn norm_survives_large_components() {
        let v = Vector::from([1e200, 1e200]);
        let expected = 1e200 * core::f64::consts::SQRT_2;
        assert!((v.norm() - expected).abs() / expected < 1e-15);
    }

    proptest! {
        #[test]
        fn dot_self_is_norm_squared(v in prop::collection::vec(-1e3f64..1e3, 1..40)) {
            let v = Vector::new(v);
            let d = v.dot(&v).unwrap();
            let n = v.norm();
            prop_assert!((d - n * n).abs() <= 1e-12 * d.max(f64::MIN_POSITIVE));
        }

        #[test]
        fn ops_leave_inputs_untouched(a in prop::collection::vec(-1e3f64..1e3, 5), b in prop::collection::vec(0.5f64..1e3, 5)) {
            let va = Vector::new(a.clone());
            let vb = Vector::new(b.clone());
            let _ = va.add(&vb).unwrap();
            let _ = va.div(&vb).unwrap();
            let _ = vb.sqrt().unwrap();
            prop_assert_eq!(va.as_slice(), &a[..]);
            prop_assert_eq!(vb.as_slice(), &b[..]);
        }
    }
}
