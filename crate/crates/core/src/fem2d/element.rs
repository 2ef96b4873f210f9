//! Bilinear quadrilateral with 2×2 Gauss quadrature, plane strain.
//!
//! Strain rows of `B` are `(ε_xx, ε_yy, γ_xy)`; element dofs are ordered
//! `(u_x, u_y)` per node.

use crate::scalar::Scalar;

pub type BMatrix<T> = [[T; 8]; 3];
pub type Mat3<T> = [[T; 3]; 3];

const NODE_XI: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

/// `(ξ, η, weight)` of the 2×2 rule.
pub fn gauss_points<T: Scalar>() -> [(T, T, T); 4] {
    let g = T::one() / T::lit(3.0).sqrt();
    [(-g, -g, T::one()), (g, -g, T::one()), (g, g, T::one()), (-g, g, T::one())]
}

pub fn shape<T: Scalar>(xi: T, eta: T) -> [T; 4] {
    let q = T::lit(0.25);
    NODE_XI.map(|[a, b]| q * (T::one() + T::lit(a) * xi) * (T::one() + T::lit(b) * eta))
}

fn shape_derivs<T: Scalar>(xi: T, eta: T) -> [[T; 2]; 4] {
    let q = T::lit(0.25);
    NODE_XI.map(|[a, b]| {
        let (a, b) = (T::lit(a), T::lit(b));
        [q * a * (T::one() + b * eta), q * b * (T::one() + a * xi)]
    })
}

/// Jacobian determinant and physical shape-function gradients.
pub fn jacobian<T: Scalar>(xy: &[[T; 2]; 4], xi: T, eta: T) -> (T, [[T; 2]; 4]) {
    let dn = shape_derivs(xi, eta);
    let mut j = [[T::zero(); 2]; 2];
    for a in 0..4 {
        for r in 0..2 {
            for c in 0..2 {
                j[r][c] += dn[a][r] * xy[a][c];
            }
        }
    }
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let inv = [[j[1][1] / det, -j[0][1] / det], [-j[1][0] / det, j[0][0] / det]];
    let grads = dn.map(|d| [inv[0][0] * d[0] + inv[0][1] * d[1], inv[1][0] * d[0] + inv[1][1] * d[1]]);
    (det, grads)
}

pub fn b_matrix<T: Scalar>(grads: &[[T; 2]; 4]) -> BMatrix<T> {
    let mut b = [[T::zero(); 8]; 3];
    for (a, g) in grads.iter().enumerate() {
        b[0][2 * a] = g[0];
        b[1][2 * a + 1] = g[1];
        b[2][2 * a] = g[1];
        b[2][2 * a + 1] = g[0];
    }
    b
}

/// `Bᵀ D B · w` accumulated into an 8×8 block.
pub fn add_btdb<T: Scalar>(ke: &mut [[T; 8]; 8], b: &BMatrix<T>, d: &Mat3<T>, w: T) {
    let mut db = [[T::zero(); 8]; 3];
    for r in 0..3 {
        for c in 0..8 {
            db[r][c] = (0..3).map(|k| d[r][k] * b[k][c]).sum();
        }
    }
    for i in 0..8 {
        for j in 0..8 {
            let v: T = (0..3).map(|k| b[k][i] * db[k][j]).sum();
            ke[i][j] += w * v;
        }
    }
}

/// In-plane block (rows/columns `xx, yy, xy`) of 6×6 Voigt moduli.
pub fn plane_block<T: Scalar>(d: &[[T; 6]; 6]) -> Mat3<T> {
    const IDX: [usize; 3] = [0, 1, 3];
    let mut m = [[T::zero(); 3]; 3];
    for (r, &i) in IDX.iter().enumerate() {
        for (c, &j) in IDX.iter().enumerate() {
            m[r][c] = d[i][j];
        }
    }
    m
}
