//! Symmetric second-order tensors in six-component form.
//!
//! Components are ordered `11, 22, 33, 12, 13, 23` and the shear entries
//! are the true tensor components (no factor 2). Engineering (Voigt) and
//! Mandel scalings are applied only at the conversion functions below, so
//! every norm and contraction computed here is the exact tensor quantity.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// 6×6 matrix acting on six-component vectors.
pub type Mat6<T> = [[T; 6]; 6];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymTensor<T> {
    pub c: [T; 6],
}

impl<T: Scalar> SymTensor<T> {
    pub fn zero() -> Self {
        Self { c: [T::zero(); 6] }
    }

    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self { c: [o, o, o, z, z, z] }
    }

    pub fn new(c: [T; 6]) -> Self {
        Self { c }
    }

    pub fn diag(a: T, b: T, c: T) -> Self {
        let z = T::zero();
        Self { c: [a, b, c, z, z, z] }
    }

    pub fn trace(&self) -> T {
        self.c[0] + self.c[1] + self.c[2]
    }

    pub fn deviator(&self) -> Self {
        let m = self.trace() / T::lit(3.0);
        let mut out = *self;
        for v in &mut out.c[..3] {
            *v -= m;
        }
        out
    }

    /// Full double contraction `A : B`; off-diagonal terms count twice.
    pub fn contract(&self, other: &Self) -> T {
        let d = self.c[0] * other.c[0] + self.c[1] * other.c[1] + self.c[2] * other.c[2];
        let s = self.c[3] * other.c[3] + self.c[4] * other.c[4] + self.c[5] * other.c[5];
        d + T::two() * s
    }

    pub fn frobenius_norm(&self) -> T {
        self.contract(self).sqrt()
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = *self;
        for v in &mut out.c {
            *v *= s;
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| v.is_finite())
    }

    /// Engineering strain vector: shear entries are `γ = 2ε`.
    pub fn to_voigt_strain(&self) -> [T; 6] {
        let t = T::two();
        let c = self.c;
        [c[0], c[1], c[2], t * c[3], t * c[4], t * c[5]]
    }

    pub fn from_voigt_strain(v: &[T; 6]) -> Self {
        let h = T::lit(0.5);
        Self { c: [v[0], v[1], v[2], h * v[3], h * v[4], h * v[5]] }
    }

    /// Stress vector: components are stored unscaled.
    pub fn to_voigt_stress(&self) -> [T; 6] {
        self.c
    }

    pub fn from_voigt_stress(v: &[T; 6]) -> Self {
        Self { c: *v }
    }

    /// Mandel vector: shear entries scaled by √2 so that `A:B` is the
    /// Euclidean dot product of the Mandel vectors.
    pub fn to_mandel(&self) -> [T; 6] {
        let r = T::two().sqrt();
        let c = self.c;
        [c[0], c[1], c[2], r * c[3], r * c[4], r * c[5]]
    }

    pub fn from_mandel(v: &[T; 6]) -> Self {
        let r = T::one() / T::two().sqrt();
        Self { c: [v[0], v[1], v[2], r * v[3], r * v[4], r * v[5]] }
    }

    /// Strain of a plane-strain state from `(ε_xx, ε_yy, γ_xy)`; all
    /// out-of-plane components vanish.
    pub fn from_plane_strain(exx: T, eyy: T, gxy: T) -> Self {
        let z = T::zero();
        Self { c: [exx, eyy, z, T::lit(0.5) * gxy, z, z] }
    }
}

impl<T: Scalar> Add for SymTensor<T> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl<T: Scalar> AddAssign for SymTensor<T> {
    fn add_assign(&mut self, rhs: Self) {
        for (a, b) in self.c.iter_mut().zip(rhs.c) {
            *a = *a + b;
        }
    }
}

impl<T: Scalar> Sub for SymTensor<T> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        self -= rhs;
        self
    }
}

impl<T: Scalar> SubAssign for SymTensor<T> {
    fn sub_assign(&mut self, rhs: Self) {
        for (a, b) in self.c.iter_mut().zip(rhs.c) {
            *a = *a - b;
        }
    }
}

impl<T: Scalar> Mul<T> for SymTensor<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

impl<T: Scalar> Neg for SymTensor<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

pub fn mat6_zero<T: Scalar>() -> Mat6<T> {
    [[T::zero(); 6]; 6]
}

pub fn mat6_identity<T: Scalar>() -> Mat6<T> {
    let mut m = mat6_zero();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

pub fn mat6_mul_vec<T: Scalar>(m: &Mat6<T>, v: &[T; 6]) -> [T; 6] {
    let mut out = [T::zero(); 6];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row.iter().zip(v).map(|(&a, &b)| a * b).sum();
    }
    out
}

pub fn mat6_mul<T: Scalar>(a: &Mat6<T>, b: &Mat6<T>) -> Mat6<T> {
    let mut out = mat6_zero();
    for i in 0..6 {
        for j in 0..6 {
            out[i][j] = (0..6).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Deviatoric projector in Mandel (equivalently, plain tensor) components.
pub fn deviatoric_projector<T: Scalar>() -> Mat6<T> {
    let mut p = mat6_identity();
    let third = T::one() / T::lit(3.0);
    for row in p.iter_mut().take(3) {
        for v in row.iter_mut().take(3) {
            *v -= third;
        }
    }
    p
}

/// Converts a Mandel-form stiffness (`dσ_M / dε_M`) to the engineering
/// Voigt form used by B-matrix assembly (`dσ / dγ`).
pub fn mandel_to_voigt_moduli<T: Scalar>(m: &Mat6<T>) -> Mat6<T> {
    let r = T::one() / T::two().sqrt();
    let w = |i: usize| if i < 3 { T::one() } else { r };
    let mut out = mat6_zero();
    for i in 0..6 {
        for j in 0..6 {
            out[i][j] = w(i) * m[i][j] * w(j);
        }
    }
    out
}

pub fn voigt_to_mandel_moduli<T: Scalar>(v: &Mat6<T>) -> Mat6<T> {
    let r = T::two().sqrt();
    let w = |i: usize| if i < 3 { T::one() } else { r };
    let mut out = mat6_zero();
    for i in 0..6 {
        for j in 0..6 {
            out[i][j] = w(i) * v[i][j] * w(j);
        }
    }
    out
}

/// Euclidean norm of a plain six-vector.
pub fn vec6_norm<T: Scalar>(v: &[T; 6]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tensor() -> impl Strategy<Value = SymTensor<f64>> {
        prop::array::uniform6(-1e3..1e3f64).prop_map(SymTensor::new)
    }

    #[test]
    fn deviator_examples() {
        let i = SymTensor::<f64>::identity();
        assert_eq!(i.deviator(), SymTensor::zero());
        assert_eq!(SymTensor::<f64>::zero().deviator(), SymTensor::zero());
        let d = SymTensor::diag(3.0, 0.0, 0.0).deviator();
        assert_eq!(d, SymTensor::diag(2.0, -1.0, -1.0));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(SymTensor::<f64>::zero().frobenius_norm(), 0.0);
        assert!((SymTensor::<f64>::identity().frobenius_norm() - 3f64.sqrt()).abs() < 1e-15);
        let shear = SymTensor::new([0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert!((shear.frobenius_norm() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn plane_strain_embedding() {
        let e = SymTensor::from_plane_strain(1.0, 2.0, 0.5);
        assert_eq!(e.c, [1.0, 2.0, 0.0, 0.25, 0.0, 0.0]);
        assert_eq!(e.to_voigt_strain()[3], 0.5);
    }

    #[test]
    fn works_in_single_precision() {
        let d = SymTensor::<f32>::diag(3.0, 0.0, 0.0).deviator();
        assert_eq!(d, SymTensor::diag(2.0f32, -1.0, -1.0));
    }

    proptest! {
        #[test]
        fn deviator_is_traceless(t in tensor()) {
            let dev = t.deviator();
            prop_assert!(dev.trace().abs() <= 1e-12 * t.frobenius_norm().max(1.0));
            let back = dev + SymTensor::identity().scale(t.trace() / 3.0);
            for (a, b) in back.c.iter().zip(t.c) {
                prop_assert!((a - b).abs() <= 1e-12 * t.frobenius_norm().max(1.0));
            }
        }

        #[test]
        fn norm_splits_into_deviatoric_and_volumetric(t in tensor()) {
            let lhs = t.frobenius_norm().powi(2);
            let rhs = t.deviator().frobenius_norm().powi(2) + t.trace().powi(2) / 3.0;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1e-300));
        }

        #[test]
        fn voigt_and_mandel_round_trip(t in tensor()) {
            prop_assert_eq!(SymTensor::from_voigt_stress(&t.to_voigt_stress()), t);
            let s = SymTensor::from_voigt_strain(&t.to_voigt_strain());
            let m = SymTensor::from_mandel(&t.to_mandel());
            for k in 0..6 {
                prop_assert!((s.c[k] - t.c[k]).abs() <= 1e-15 * t.c[k].abs().max(1.0));
                prop_assert!((m.c[k] - t.c[k]).abs() <= 1e-13 * t.c[k].abs().max(1.0));
            }
            let mv = t.to_mandel();
            let dot: f64 = mv.iter().map(|x| x * x).sum();
            prop_assert!((dot - t.contract(&t)).abs() <= 1e-10 * dot.max(1.0));
        }
    }
}
