use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::element::{gauss_points, jacobian};
use crate::scalar::Scalar;

pub const MESH_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("element {element} references node {node}, but the mesh has {n_nodes} nodes")]
    BadNode { element: usize, node: usize, n_nodes: usize },
    #[error("element {element} has non-positive Jacobian {det:e} at Gauss point {gauss}")]
    Jacobian { element: usize, gauss: usize, det: f64 },
    #[error("boundary set `{0}` references a missing node")]
    BadSet(String),
    #[error("boundary set `{0}` is not defined")]
    UnknownSet(String),
    #[error("unsupported mesh schema version {0}")]
    Version(u32),
    #[error("invalid mesh JSON: {0}")]
    Json(String),
}

/// Four-node quadrilateral mesh with named boundary sets.
///
/// JSON layout (lengths in mm):
///
/// ```json
/// { "schema_version": 1,
///   "nodes": [[x, y], ...],
///   "elements": [[n0, n1, n2, n3], ...],
///   "node_sets": { "bottom": [0, 1, ...] },
///   "edge_sets": { "top": [[a, b], ...] } }
/// ```
///
/// Element nodes are counterclockwise; edges are node pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh2D<T> {
    pub schema_version: u32,
    pub nodes: Vec<[T; 2]>,
    pub elements: Vec<[usize; 4]>,
    #[serde(default)]
    pub node_sets: BTreeMap<String, Vec<usize>>,
    #[serde(default)]
    pub edge_sets: BTreeMap<String, Vec<[usize; 2]>>,
}

impl<T: Scalar> Mesh2D<T> {
    pub fn from_json(text: &str) -> Result<Self, MeshError> {
        let mesh: Self = serde_json::from_str(text).map_err(|e| MeshError::Json(e.to_string()))?;
        if mesh.schema_version != MESH_SCHEMA_VERSION {
            return Err(MeshError::Version(mesh.schema_version));
        }
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mesh serializes")
    }
}

impl<T: Scalar> Mesh2D<T> {
    pub fn new(nodes: Vec<[T; 2]>, elements: Vec<[usize; 4]>) -> Self {
        Self {
            schema_version: MESH_SCHEMA_VERSION,
            nodes,
            elements,
            node_sets: BTreeMap::new(),
            edge_sets: BTreeMap::new(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_coords(&self, e: usize) -> [[T; 2]; 4] {
        self.elements[e].map(|n| self.nodes[n])
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        let n = self.nodes.len();
        for (e, conn) in self.elements.iter().enumerate() {
            if let Some(&node) = conn.iter().find(|&&c| c >= n) {
                return Err(MeshError::BadNode { element: e, node, n_nodes: n });
            }
            let xy = self.element_coords(e);
            for (g, (xi, eta, _)) in gauss_points::<T>().into_iter().enumerate() {
                let (det, _) = jacobian(&xy, xi, eta);
                if !(det > T::zero()) {
                    return Err(MeshError::Jacobian { element: e, gauss: g, det: det.as_f64() });
                }
            }
        }
        for (name, set) in &self.node_sets {
            if set.iter().any(|&i| i >= n) {
                return Err(MeshError::BadSet(name.clone()));
            }
        }
        for (name, set) in &self.edge_sets {
            if set.iter().flatten().any(|&i| i >= n) {
                return Err(MeshError::BadSet(name.clone()));
            }
        }
        Ok(())
    }

    pub fn node_set(&self, name: &str) -> Result<&[usize], MeshError> {
        self.node_sets.get(name).map(|v| v.as_slice()).ok_or_else(|| MeshError::UnknownSet(name.into()))
    }

    pub fn edge_set(&self, name: &str) -> Result<&[[usize; 2]], MeshError> {
        self.edge_sets.get(name).map(|v| v.as_slice()).ok_or_else(|| MeshError::UnknownSet(name.into()))
    }

    pub fn area(&self) -> T {
        let mut a = T::zero();
        for e in 0..self.elements.len() {
            let xy = self.element_coords(e);
            for (xi, eta, w) in gauss_points::<T>() {
                a += w * jacobian(&xy, xi, eta).0;
            }
        }
        a
    }

    /// Returns a copy with elements visited in the given order.
    pub fn with_element_order(&self, order: &[usize]) -> Self {
        let mut m = self.clone();
        m.elements = order.iter().map(|&e| self.elements[e]).collect();
        m
    }

    /// Rectangular `nx × ny` grid on `[x0, x0+lx] × [y0, y0+ly]` with sets
    /// `bottom`, `top`, `left`, `right` (nodes) and `top`, `bottom` (edges).
    pub fn rectangle(x0: T, y0: T, lx: T, ly: T, nx: usize, ny: usize) -> Self {
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                let x = x0 + lx * T::lit(i as f64 / nx as f64);
                let y = y0 + ly * T::lit(j as f64 / ny as f64);
                nodes.push([x, y]);
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut elements = vec![];
        for j in 0..ny {
            for i in 0..nx {
                elements.push([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let mut m = Self::new(nodes, elements);
        m.node_sets.insert("bottom".into(), (0..=nx).map(|i| id(i, 0)).collect());
        m.node_sets.insert("top".into(), (0..=nx).map(|i| id(i, ny)).collect());
        m.node_sets.insert("left".into(), (0..=ny).map(|j| id(0, j)).collect());
        m.node_sets.insert("right".into(), (0..=ny).map(|j| id(nx, j)).collect());
        m.edge_sets.insert("bottom".into(), (0..nx).map(|i| [id(i, 0), id(i + 1, 0)]).collect());
        m.edge_sets.insert("top".into(), (0..nx).map(|i| [id(i + 1, ny), id(i, ny)]).collect());
        m
    }
}

/// Parameters of the structured O-grid around a centred circular hole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlateMeshSpec {
    /// Side length of the square (mm).
    pub width: f64,
    /// Hole radius (mm).
    pub radius: f64,
    /// Elements along each side of the square.
    pub n_side: usize,
    /// Element layers between the hole and the outer boundary.
    pub n_radial: usize,
    /// Ratio of the outermost to the innermost layer thickness.
    pub grading: f64,
    /// Random perturbation of interior nodes, as a fraction of the local
    /// element size. Zero gives the regular grid.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for PlateMeshSpec {
    fn default() -> Self {
        Self { width: 30.0, radius: 6.0, n_side: 14, n_radial: 14, grading: 3.0, jitter: 0.0, seed: 0 }
    }
}

impl PlateMeshSpec {
    /// Square plate with a centred hole; the origin is the hole centre.
    /// Nodes are numbered ring by ring from the hole outwards. Sets:
    /// `bottom`, `top`, `hole` and `top_left` (nodes), `top`, `bottom`,
    /// `hole` (edges).
    pub fn build<T: Scalar>(&self) -> Mesh2D<T> {
        let nc = 4 * self.n_side;
        let nr = self.n_radial;
        let h = 0.5 * self.width;
        // outer boundary, counterclockwise from the bottom-left corner
        let outer: Vec<[f64; 2]> = (0..nc)
            .map(|k| {
                let side = k / self.n_side;
                let t = (k % self.n_side) as f64 / self.n_side as f64;
                let s = -h + 2.0 * h * t;
                match side {
                    0 => [s, -h],
                    1 => [h, s],
                    2 => [-s, h],
                    _ => [-h, -s],
                }
            })
            .collect();
        // geometric layer thicknesses from the hole outwards
        let q = if nr > 1 { self.grading.powf(1.0 / (nr - 1) as f64) } else { 1.0 };
        let mut s = vec![0.0];
        let mut acc = 0.0;
        for i in 0..nr {
            acc += q.powi(i as i32);
            s.push(acc);
        }
        let s: Vec<f64> = s.iter().map(|v| v / acc).collect();

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut nodes = Vec::with_capacity((nr + 1) * nc);
        for (i, &si) in s.iter().enumerate() {
            for (k, o) in outer.iter().enumerate() {
                let ang = o[1].atan2(o[0]);
                let inner = [self.radius * ang.cos(), self.radius * ang.sin()];
                let mut p = [inner[0] + si * (o[0] - inner[0]), inner[1] + si * (o[1] - inner[1])];
                if self.jitter > 0.0 && i > 0 && i < nr {
                    let size = (s[i + 1] - s[i - 1]) * 0.5 * (o[0] - inner[0]).hypot(o[1] - inner[1]);
                    let arc = {
                        let o2 = outer[(k + 1) % nc];
                        (o2[0] - o[0]).hypot(o2[1] - o[1]) * (self.radius + si * (h - self.radius)) / h
                    };
                    let amp = self.jitter * size.min(arc);
                    p[0] += amp * rng.gen_range(-0.5..0.5);
                    p[1] += amp * rng.gen_range(-0.5..0.5);
                }
                nodes.push([T::lit(p[0]), T::lit(p[1])]);
            }
        }
        let id = |i: usize, k: usize| i * nc + (k % nc);
        let mut elements = Vec::with_capacity(nr * nc);
        for i in 0..nr {
            for k in 0..nc {
                elements.push([id(i, k), id(i + 1, k), id(i + 1, k + 1), id(i, k + 1)]);
            }
        }
        let mut m = Mesh2D::new(nodes, elements);
        let ring = |i: usize| (0..nc).map(move |k| id(i, k));
        let n = self.n_side;
        let bottom: Vec<usize> = (0..=n).map(|k| id(nr, k)).collect();
        let top: Vec<usize> = (2 * n..=3 * n).map(|k| id(nr, k)).collect();
        m.node_sets.insert("bottom".into(), bottom);
        m.node_sets.insert("top".into(), top);
        m.node_sets.insert("hole".into(), ring(0).collect());
        m.node_sets.insert("top_left".into(), vec![id(nr, 3 * self.n_side)]);
        let edges = |side: usize| -> Vec<[usize; 2]> {
            (side * self.n_side..(side + 1) * self.n_side).map(|k| [id(nr, k), id(nr, k + 1)]).collect()
        };
        m.edge_sets.insert("bottom".into(), edges(0));
        m.edge_sets.insert("top".into(), edges(2));
        m.edge_sets.insert("hole".into(), (0..nc).map(|k| [id(0, k + 1), id(0, k)]).collect());
        m
    }
}
