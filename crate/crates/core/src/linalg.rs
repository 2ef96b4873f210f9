//! Profile (skyline) storage with an in-place LU factorization, plus the
//! few dense kernels needed for local and Galerkin systems.
//!
//! Structural matrices here have a symmetric sparsity profile but the
//! consistent tangent of a non-associative material is not symmetric, so
//! the factorization keeps separate lower and upper profiles. No pivoting
//! is performed; the matrices we factor are positive definite or close to it.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular or indefinite: pivot {pivot:e} at row {row}")]
    Singular { row: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

#[derive(Debug, Clone)]
pub struct ProfileMatrix<T> {
    n: usize,
    first: Vec<usize>,
    lo_ptr: Vec<usize>,
    up_ptr: Vec<usize>,
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> ProfileMatrix<T> {
    /// Builds an empty matrix whose profile covers every coupling implied by
    /// the given groups of indices (one group per element).
    pub fn from_groups<I, G>(n: usize, groups: I) -> Self
    where
        I: IntoIterator<Item = G>,
        G: AsRef<[usize]>,
    {
        let mut first: Vec<usize> = (0..n).collect();
        for g in groups {
            let g = g.as_ref();
            if let Some(&lo) = g.iter().min() {
                for &i in g {
                    first[i] = first[i].min(lo);
                }
            }
        }
        Self::with_profile(first)
    }

    pub fn with_profile(first: Vec<usize>) -> Self {
        let n = first.len();
        let mut lo_ptr = Vec::with_capacity(n + 1);
        let mut up_ptr = Vec::with_capacity(n + 1);
        let (mut lo, mut up) = (0, 0);
        for (i, &f) in first.iter().enumerate() {
            assert!(f <= i, "profile start beyond diagonal");
            lo_ptr.push(lo);
            up_ptr.push(up);
            lo += i - f;
            up += i - f + 1;
        }
        lo_ptr.push(lo);
        up_ptr.push(up);
        Self {
            n,
            first,
            lo_ptr,
            up_ptr,
            lower: vec![T::zero(); lo],
            upper: vec![T::zero(); up],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored entries (both triangles, diagonal once).
    pub fn stored(&self) -> usize {
        self.lower.len() + self.upper.len()
    }

    pub fn zero_like(&self) -> Self {
        let mut z = self.clone();
        z.lower.iter_mut().for_each(|v| *v = T::zero());
        z.upper.iter_mut().for_each(|v| *v = T::zero());
        z
    }

    fn slot(&self, i: usize, j: usize) -> Option<(bool, usize)> {
        if i > j {
            (j >= self.first[i]).then(|| (true, self.lo_ptr[i] + j - self.first[i]))
        } else {
            (i >= self.first[j]).then(|| (false, self.up_ptr[j] + i - self.first[j]))
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        match self.slot(i, j) {
            Some((true, k)) => self.lower[k],
            Some((false, k)) => self.upper[k],
            None => T::zero(),
        }
    }

    /// Adds `v` at `(i, j)`. Panics if the entry lies outside the profile.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        match self.slot(i, j) {
            Some((true, k)) => self.lower[k] += v,
            Some((false, k)) => self.upper[k] += v,
            None => panic!("entry ({i}, {j}) outside the matrix profile"),
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![T::zero(); self.n];
        for i in 0..self.n {
            let f = self.first[i];
            let row = &self.lower[self.lo_ptr[i]..self.lo_ptr[i + 1]];
            let mut acc = T::zero();
            for (k, &l) in row.iter().enumerate() {
                acc += l * x[f + k];
            }
            y[i] += acc;
            // column i of the upper triangle, diagonal included
            let col = &self.upper[self.up_ptr[i]..self.up_ptr[i + 1]];
            for (k, &u) in col.iter().enumerate() {
                y[f + k] += u * x[i];
            }
        }
        y
    }

    /// Largest asymmetry `|a_ij - a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        let mut scale = T::zero();
        for i in 0..self.n {
            for j in self.first[i]..i {
                let (a, b) = (self.get(i, j), self.get(j, i));
                worst = worst.max((a - b).abs());
                scale = scale.max(a.abs()).max(b.abs());
            }
            scale = scale.max(self.get(i, i).abs());
        }
        if scale > T::zero() {
            worst / scale
        } else {
            T::zero()
        }
    }

    pub fn max_abs(&self) -> T {
        self.lower
            .iter()
            .chain(&self.upper)
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// In-place LU factorization `A = L U` with unit-diagonal `L`.
    pub fn factor(mut self) -> Result<ProfileLu<T>, LinalgError> {
        let n = self.n;
        let max_diag = (0..n).fold(T::zero(), |m, i| m.max(self.get(i, i).abs()));
        let tiny = T::epsilon() * T::lit(64.0) * max_diag.max(T::min_positive_value());
        for k in 0..n {
            let fk = self.first[k];
            // row k of L
            for j in fk..k {
                let p0 = fk.max(self.first[j]);
                let lrow = &self.lower[self.lo_ptr[k] + p0 - fk..self.lo_ptr[k] + j - fk];
                let ucol = &self.upper[self.up_ptr[j] + p0 - self.first[j]..self.up_ptr[j] + j - self.first[j]];
                let s: T = lrow.iter().zip(ucol).map(|(&a, &b)| a * b).sum();
                let ujj = self.upper[self.up_ptr[j + 1] - 1];
                let idx = self.lo_ptr[k] + j - fk;
                self.lower[idx] = (self.lower[idx] - s) / ujj;
            }
            // column k of U
            for i in fk..=k {
                let fi = self.first[i];
                let p0 = fi.max(fk);
                let lrow = &self.lower[self.lo_ptr[i] + p0 - fi..self.lo_ptr[i] + i - fi];
                let ucol = &self.upper[self.up_ptr[k] + p0 - fk..self.up_ptr[k] + i - fk];
                let s: T = lrow.iter().zip(ucol).map(|(&a, &b)| a * b).sum();
                self.upper[self.up_ptr[k] + i - fk] -= s;
            }
            let pivot = self.upper[self.up_ptr[k + 1] - 1];
            if !(pivot.abs() > tiny) {
                return Err(LinalgError::Singular { row: k, pivot: pivot.as_f64() });
            }
        }
        Ok(ProfileLu { m: self })
    }
}

/// Factorized profile matrix.
#[derive(Debug, Clone)]
pub struct ProfileLu<T> {
    m: ProfileMatrix<T>,
}

impl<T: Scalar> ProfileLu<T> {
    pub fn dim(&self) -> usize {
        self.m.n
    }

    /// Pivots of the factorization (the `D` of `LDLᵀ` for symmetric input).
    pub fn pivots(&self) -> Vec<T> {
        (0..self.m.n).map(|k| self.m.upper[self.m.up_ptr[k + 1] - 1]).collect()
    }

    /// For a symmetric input, positive pivots certify positive definiteness.
    pub fn all_pivots_positive(&self) -> bool {
        self.pivots().iter().all(|&p| p > T::zero())
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let m = &self.m;
        assert_eq!(b.len(), m.n);
        for i in 0..m.n {
            let f = m.first[i];
            let row = &m.lower[m.lo_ptr[i]..m.lo_ptr[i + 1]];
            let s: T = row.iter().zip(&b[f..i]).map(|(&l, &y)| l * y).sum();
            b[i] -= s;
        }
        for j in (0..m.n).rev() {
            let f = m.first[j];
            let col = &m.upper[m.up_ptr[j]..m.up_ptr[j + 1]];
            let xj = b[j] / col[j - f];
            b[j] = xj;
            for (k, &u) in col[..j - f].iter().enumerate() {
                b[f + k] -= u * xj;
            }
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Solves a small dense system by Gaussian elimination with partial pivoting.
pub fn solve_dense<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Result<Vec<T>, LinalgError> {
    let n = b.len();
    if a.len() != n {
        return Err(LinalgError::Dimension { expected: n, got: a.len() });
    }
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(T::zero(), |m, v| m.max(v.abs()));
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
            .unwrap();
        if !(a[p][k].abs() > T::epsilon() * T::lit(16.0) * scale) {
            return Err(LinalgError::Singular { row: k, pivot: a[p][k].as_f64() });
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f == T::zero() {
                continue;
            }
            for j in k..n {
                let akj = a[k][j];
                a[i][j] -= f * akj;
            }
            let bk = b[k];
            b[i] -= f * bk;
        }
    }
    for k in (0..n).rev() {
        let s: T = (k + 1..n).map(|j| a[k][j] * b[j]).sum();
        b[k] = (b[k] - s) / a[k][k];
    }
    Ok(b)
}

/// Dense Cholesky solve of a symmetric positive definite system. A pivot
/// below `rel_tol` times the corresponding original diagonal entry is
/// reported as singular, which flags (numerically) dependent rows.
pub fn cholesky_solve<T: Scalar>(a: &[Vec<T>], b: &[T], rel_tol: T) -> Result<Vec<T>, LinalgError> {
    let n = b.len();
    let mut l = vec![vec![T::zero(); n]; n];
    for j in 0..n {
        let s: T = (0..j).map(|k| l[j][k] * l[j][k]).sum();
        let d = a[j][j] - s;
        if !(d > rel_tol * a[j][j].abs()) || !(d > T::zero()) {
            return Err(LinalgError::Singular { row: j, pivot: d.as_f64() });
        }
        let dj = d.sqrt();
        l[j][j] = dj;
        for i in j + 1..n {
            let s: T = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            l[i][j] = (a[i][j] - s) / dj;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        let s: T = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (y[i] - s) / l[i][i];
    }
    for i in (0..n).rev() {
        let s: T = (i + 1..n).map(|k| l[k][i] * y[k]).sum();
        y[i] = (y[i] - s) / l[i][i];
    }
    Ok(y)
}

/// LU factors of a small fixed-size matrix (partial pivoting).
#[derive(Debug, Clone, Copy)]
pub struct SmallLu<T, const N: usize> {
    lu: [[T; N]; N],
    perm: [usize; N],
}

impl<T: Scalar, const N: usize> SmallLu<T, N> {
    pub fn new(mut a: [[T; N]; N]) -> Result<Self, LinalgError> {
        let scale = a.iter().flatten().fold(T::zero(), |m, v| m.max(v.abs()));
        let mut perm = [0usize; N];
        for (i, p) in perm.iter_mut().enumerate() {
            *p = i;
        }
        for k in 0..N {
            let mut p = k;
            for i in k + 1..N {
                if a[i][k].abs() > a[p][k].abs() {
                    p = i;
                }
            }
            if !(a[p][k].abs() > T::epsilon() * T::lit(16.0) * scale) {
                return Err(LinalgError::Singular { row: k, pivot: a[p][k].as_f64() });
            }
            a.swap(k, p);
            perm.swap(k, p);
            for i in k + 1..N {
                let f = a[i][k] / a[k][k];
                a[i][k] = f;
                for j in k + 1..N {
                    let akj = a[k][j];
                    a[i][j] -= f * akj;
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    pub fn solve(&self, b: &[T; N]) -> [T; N] {
        let mut x = [T::zero(); N];
        for i in 0..N {
            let mut s = b[self.perm[i]];
            for j in 0..i {
                s -= self.lu[i][j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..N).rev() {
            let mut s = x[i];
            for j in i + 1..N {
                s -= self.lu[i][j] * x[j];
            }
            x[i] = s / self.lu[i][i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_mul(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
    }

    fn banded_random(n: usize, band: usize, symmetric: bool, rng: &mut ChaCha8Rng) -> ProfileMatrix<f64> {
        let groups: Vec<Vec<usize>> = (0..n).map(|i| (i.saturating_sub(band)..=i).collect()).collect();
        let mut m = ProfileMatrix::from_groups(n, &groups);
        for i in 0..n {
            for j in i.saturating_sub(band)..i {
                let v = rng.gen_range(-1.0..1.0);
                m.add(i, j, v);
                m.add(j, i, if symmetric { v } else { v + rng.gen_range(-0.2..0.2) });
            }
            m.add(i, i, 2.0 * band as f64 + 1.0);
        }
        m
    }

    #[test]
    fn unsymmetric_profile_solve_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = banded_random(40, 5, false, &mut rng);
        let dense = m.to_dense();
        let x: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = dense_mul(&dense, &x);
        assert!(m.mul_vec(&x).iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-12));
        let lu = m.factor().unwrap();
        let got = lu.solve(&b);
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn irregular_profile() {
        // arrow-head coupling of the last row to everything
        let n = 12;
        let groups: Vec<Vec<usize>> = (0..n - 1).map(|i| vec![i, i + 1, n - 1]).collect();
        let mut m = ProfileMatrix::<f64>::from_groups(n, &groups);
        for g in &groups {
            for &i in g {
                for &j in g {
                    m.add(i, j, if i == j { 4.0 } else { -1.0 });
                }
            }
        }
        let x: Vec<f64> = (0..n).map(|i| i as f64 - 3.0).collect();
        let b = m.mul_vec(&x);
        let lu = m.factor().unwrap();
        assert!(lu.all_pivots_positive());
        for (g, e) in lu.solve(&b).iter().zip(&x) {
            assert!((g - e).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut m = ProfileMatrix::<f64>::from_groups(2, [[0usize, 1]]);
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            m.add(i, j, 1.0);
        }
        assert!(matches!(m.factor(), Err(LinalgError::Singular { row: 1, .. })));
    }

    #[test]
    fn dense_solvers() {
        let a = vec![vec![4.0, 1.0, 0.5], vec![1.0, 3.0, 0.2], vec![0.5, 0.2, 2.0]];
        let x = [1.0, -2.0, 0.5];
        let b = dense_mul(&a, &x);
        let g1 = solve_dense(a.clone(), b.clone()).unwrap();
        let g2 = cholesky_solve(&a, &b, 1e-12).unwrap();
        for k in 0..3 {
            assert!((g1[k] - x[k]).abs() < 1e-13);
            assert!((g2[k] - x[k]).abs() < 1e-13);
        }
        let small = SmallLu::new([[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]]).unwrap();
        let xs = small.solve(&[5.0, 3.0, 4.0]);
        for (g, e) in xs.iter().zip([1.0f64, 2.0, 1.0]) {
            assert!((g - e).abs() < 1e-14);
        }
        let dup = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(cholesky_solve(&dup, &[1.0, 1.0], 1e-10).is_err());
    }
}
