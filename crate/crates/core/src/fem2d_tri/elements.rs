//! Quadratic Lagrange and 10-DOF cubic Hermite elements on triangles.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{SMatrix, SVector};

use super::mesh::TriMesh2D;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    LagrangeP2,
    HermiteCubic,
}

impl ElementKind {
    pub fn local_dofs(self) -> usize {
        match self {
            Self::LagrangeP2 => 6,
            Self::HermiteCubic => 10,
        }
    }

    /// Polynomial degree `k`.
    pub fn degree(self) -> usize {
        match self {
            Self::LagrangeP2 => 2,
            Self::HermiteCubic => 3,
        }
    }

    /// Derivative order probed in rate studies.
    pub fn probe_order(self) -> usize {
        match self {
            Self::LagrangeP2 => 0,
            Self::HermiteCubic => 1,
        }
    }

    /// Quadrature degrees for the stiffness matrix and the load.
    pub fn quadrature_degrees(self) -> (usize, usize) {
        match self {
            Self::LagrangeP2 => (4, 5),
            Self::HermiteCubic => (6, 7),
        }
    }
}

impl FromStr for ElementKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p2" => Ok(Self::LagrangeP2),
            "hermite" => Ok(Self::HermiteCubic),
            _ => Err(Error::Parse(format!("unknown element kind {s:?} (expected p2 or hermite)"))),
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::LagrangeP2 => "p2",
            Self::HermiteCubic => "hermite",
        })
    }
}

/// What a global degree of freedom measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DofKind {
    /// Function value at a point.
    Value([f64; 2]),
    /// `d/dx` at a vertex.
    Dx([f64; 2]),
    /// `d/dy` at a vertex.
    Dy([f64; 2]),
}

/// Global numbering for one element family on one mesh.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub kind: ElementKind,
    /// Local-to-global map per triangle, in local basis order.
    pub element_dofs: Vec<Vec<usize>>,
    pub dofs: Vec<DofKind>,
    /// Degrees of freedom fixed to zero by the boundary condition.
    pub fixed: Vec<bool>,
}

impl DofMap {
    /// Quadratic Lagrange: vertices keep their indices, edge midpoints follow
    /// in order of first appearance. Local order is `v0 v1 v2 e01 e12 e20`.
    /// Hermite: vertex `v` owns `3v, 3v+1, 3v+2` (value, `d/dx`, `d/dy`),
    /// triangle `t` owns the centroid value `3V + t`.
    pub fn new(mesh: &TriMesh2D, kind: ElementKind) -> Self {
        match kind {
            ElementKind::LagrangeP2 => Self::lagrange(mesh),
            ElementKind::HermiteCubic => Self::hermite(mesh),
        }
    }

    fn lagrange(mesh: &TriMesh2D) -> Self {
        let nv = mesh.n_vertices();
        let mut dofs: Vec<DofKind> = mesh.vertices.iter().map(|&p| DofKind::Value(p)).collect();
        let mut fixed = mesh.boundary.clone();
        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edge_count: Vec<usize> = Vec::new();
        let mut element_dofs = Vec::with_capacity(mesh.n_triangles());
        for t in &mesh.triangles {
            let mut local = t.to_vec();
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                let key = (a.min(b), a.max(b));
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    let (p, q) = (mesh.vertices[a], mesh.vertices[b]);
                    dofs.push(DofKind::Value([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]));
                    edge_count.push(0);
                    dofs.len() - 1
                });
                edge_count[id - nv] += 1;
                local.push(id);
            }
            element_dofs.push(local);
        }
        fixed.extend(edge_count.iter().map(|&c| c == 1));
        Self { kind: ElementKind::LagrangeP2, element_dofs, dofs, fixed }
    }

    fn hermite(mesh: &TriMesh2D) -> Self {
        let nv = mesh.n_vertices();
        let mut dofs = Vec::with_capacity(3 * nv + mesh.n_triangles());
        let mut fixed = Vec::with_capacity(dofs.capacity());
        for (v, &p) in mesh.vertices.iter().enumerate() {
            dofs.extend([DofKind::Value(p), DofKind::Dx(p), DofKind::Dy(p)]);
            // u = 0 on the boundary kills the tangential derivative as well.
            fixed.extend([mesh.boundary[v], mesh.on_horizontal_side(v), mesh.on_vertical_side(v)]);
        }
        let mut element_dofs = Vec::with_capacity(mesh.n_triangles());
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let c = centroid(mesh, t);
            dofs.push(DofKind::Value(c));
            fixed.push(false);
            let mut local: Vec<usize> = tri.iter().flat_map(|&v| [3 * v, 3 * v + 1, 3 * v + 2]).collect();
            local.push(3 * nv + t);
            element_dofs.push(local);
        }
        Self { kind: ElementKind::HermiteCubic, element_dofs, dofs, fixed }
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.len()
    }

    pub fn n_free(&self) -> usize {
        self.fixed.iter().filter(|&&f| !f).count()
    }

    /// Interpolates `u` through its degrees of freedom; `u(x, y, a, b)` returns
    /// `d^a/dx^a d^b/dy^b u`.
    pub fn interpolate(&self, u: impl Fn(f64, f64, usize, usize) -> f64) -> Vec<f64> {
        self.dofs
            .iter()
            .map(|d| match *d {
                DofKind::Value(p) => u(p[0], p[1], 0, 0),
                DofKind::Dx(p) => u(p[0], p[1], 1, 0),
                DofKind::Dy(p) => u(p[0], p[1], 0, 1),
            })
            .collect()
    }
}

pub(crate) fn centroid(mesh: &TriMesh2D, t: usize) -> [f64; 2] {
    let [a, b, c] = mesh.triangles[t].map(|v| mesh.vertices[v]);
    [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
}

type Mat10 = SMatrix<f64, 10, 10>;

/// Shape functions of one triangle in physical coordinates.
#[derive(Debug, Clone)]
pub struct ElementBasis {
    kind: ElementKind,
    verts: [[f64; 2]; 3],
    /// Gradients of the barycentric coordinates 1 and 2.
    grad_l: [[f64; 2]; 2],
    /// Hermite only: monomial coefficients of the basis in scaled
    /// coordinates, one column per local DOF.
    coeffs: Mat10,
    center: [f64; 2],
    scale: f64,
}

/// Monomials `1 x y x^2 xy y^2 x^3 x^2y xy^2 y^3` with both first derivatives.
fn cubic_monomials(x: f64, y: f64) -> ([f64; 10], [f64; 10], [f64; 10]) {
    let v = [1.0, x, y, x * x, x * y, y * y, x * x * x, x * x * y, x * y * y, y * y * y];
    let dx = [0.0, 1.0, 0.0, 2.0 * x, y, 0.0, 3.0 * x * x, 2.0 * x * y, y * y, 0.0];
    let dy = [0.0, 0.0, 1.0, 0.0, x, 2.0 * y, 0.0, x * x, 2.0 * x * y, 3.0 * y * y];
    (v, dx, dy)
}

impl ElementBasis {
    pub fn new(mesh: &TriMesh2D, t: usize, kind: ElementKind) -> Result<Self> {
        let verts = mesh.triangles[t].map(|v| mesh.vertices[v]);
        let [p0, p1, p2] = verts;
        let (a, b, c, d) = (p1[0] - p0[0], p2[0] - p0[0], p1[1] - p0[1], p2[1] - p0[1]);
        let det = a * d - b * c;
        if det <= 0.0 {
            return Err(Error::MeshGeneration(format!("triangle {t} is degenerate or inverted")));
        }
        let grad_l = [[d / det, -b / det], [-c / det, a / det]];
        let center = centroid(mesh, t);
        let scale = [(p0, p1), (p1, p2), (p2, p0)]
            .iter()
            .map(|(p, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
            .fold(0.0, f64::max);
        let mut coeffs = Mat10::zeros();
        if kind == ElementKind::HermiteCubic {
            // Rows: functionals (value, scaled d/dx, scaled d/dy per vertex,
            // centroid value) applied to the monomials.
            let mut g = Mat10::zeros();
            for (i, p) in verts.iter().enumerate() {
                let (v, dx, dy) = cubic_monomials((p[0] - center[0]) / scale, (p[1] - center[1]) / scale);
                for m in 0..10 {
                    g[(3 * i, m)] = v[m];
                    g[(3 * i + 1, m)] = dx[m];
                    g[(3 * i + 2, m)] = dy[m];
                }
            }
            let (v, _, _) = cubic_monomials(0.0, 0.0);
            for m in 0..10 {
                g[(9, m)] = v[m];
            }
            coeffs = g
                .try_inverse()
                .ok_or_else(|| Error::MeshGeneration(format!("Hermite functionals singular on triangle {t}")))?;
        }
        Ok(Self { kind, verts, grad_l, coeffs, center, scale })
    }

    pub fn area(&self) -> f64 {
        let [p0, p1, p2] = self.verts;
        0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    }

    /// Barycentric coordinates of a physical point.
    pub fn barycentric(&self, x: f64, y: f64) -> [f64; 3] {
        let p0 = self.verts[0];
        let (dx, dy) = (x - p0[0], y - p0[1]);
        let l1 = self.grad_l[0][0] * dx + self.grad_l[0][1] * dy;
        let l2 = self.grad_l[1][0] * dx + self.grad_l[1][1] * dy;
        [1.0 - l1 - l2, l1, l2]
    }

    pub fn from_barycentric(&self, l: [f64; 3]) -> [f64; 2] {
        let v = self.verts;
        [
            l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
            l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
        ]
    }

    /// Values and gradients of all local shape functions at `(x, y)`.
    pub fn eval(&self, x: f64, y: f64) -> (Vec<f64>, Vec<[f64; 2]>) {
        match self.kind {
            ElementKind::LagrangeP2 => self.eval_p2(x, y),
            ElementKind::HermiteCubic => self.eval_hermite(x, y),
        }
    }

    fn eval_p2(&self, x: f64, y: f64) -> (Vec<f64>, Vec<[f64; 2]>) {
        let l = self.barycentric(x, y);
        let g1 = self.grad_l[0];
        let g2 = self.grad_l[1];
        let g = [[-g1[0] - g2[0], -g1[1] - g2[1]], g1, g2];
        let mut vals = Vec::with_capacity(6);
        let mut grads = Vec::with_capacity(6);
        for i in 0..3 {
            vals.push(l[i] * (2.0 * l[i] - 1.0));
            let f = 4.0 * l[i] - 1.0;
            grads.push([f * g[i][0], f * g[i][1]]);
        }
        for (i, j) in [(0, 1), (1, 2), (2, 0)] {
            vals.push(4.0 * l[i] * l[j]);
            grads.push([4.0 * (l[j] * g[i][0] + l[i] * g[j][0]), 4.0 * (l[j] * g[i][1] + l[i] * g[j][1])]);
        }
        (vals, grads)
    }

    fn eval_hermite(&self, x: f64, y: f64) -> (Vec<f64>, Vec<[f64; 2]>) {
        let h = self.scale;
        let (v, dx, dy) = cubic_monomials((x - self.center[0]) / h, (y - self.center[1]) / h);
        let v = SVector::<f64, 10>::from(v);
        let dx = SVector::<f64, 10>::from(dx);
        let dy = SVector::<f64, 10>::from(dy);
        let vals = self.coeffs.tr_mul(&v);
        let gx = self.coeffs.tr_mul(&dx);
        let gy = self.coeffs.tr_mul(&dy);
        // Derivative DOFs are physical, the local ones carry a factor h.
        let factor = |d: usize| if d < 9 && d % 3 != 0 { h } else { 1.0 };
        let out_v = (0..10).map(|d| factor(d) * vals[d]).collect();
        let out_g = (0..10).map(|d| [factor(d) * gx[d] / h, factor(d) * gy[d] / h]).collect();
        (out_v, out_g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem2d_tri::mesh::{build_symmetric_mesh, MeshParams};

    fn mesh() -> TriMesh2D {
        build_symmetric_mesh(&MeshParams::new(20)).unwrap()
    }

    #[test]
    fn dof_counts() {
        let m = mesh();
        let p2 = DofMap::new(&m, ElementKind::LagrangeP2);
        assert_eq!(p2.n_dofs(), 41 * 41);
        assert_eq!(p2.fixed.iter().filter(|&&f| f).count(), 4 * 40);
        let h = DofMap::new(&m, ElementKind::HermiteCubic);
        assert_eq!(h.n_dofs(), 3 * 21 * 21 + 2 * 400);
        // Boundary: 80 vertices fix the value, 76 non-corner ones one
        // derivative and the 4 corners both.
        assert_eq!(h.fixed.iter().filter(|&&f| f).count(), 80 + 76 + 8);
    }

    #[test]
    fn nodal_basis_property() {
        let m = mesh();
        for kind in [ElementKind::LagrangeP2, ElementKind::HermiteCubic] {
            let map = DofMap::new(&m, kind);
            for t in [0, 77, 311] {
                let b = ElementBasis::new(&m, t, kind).unwrap();
                for (i, &gi) in map.element_dofs[t].iter().enumerate() {
                    let (p, which) = match map.dofs[gi] {
                        DofKind::Value(p) => (p, 0),
                        DofKind::Dx(p) => (p, 1),
                        DofKind::Dy(p) => (p, 2),
                    };
                    let (v, g) = b.eval(p[0], p[1]);
                    for j in 0..kind.local_dofs() {
                        let got = match which {
                            0 => v[j],
                            1 => g[j][0],
                            _ => g[j][1],
                        };
                        let want = if i == j { 1.0 } else { 0.0 };
                        assert!((got - want).abs() < 1e-9, "{kind} t={t} i={i} j={j}: {got}");
                    }
                }
            }
        }
    }

    #[test]
    fn reproduces_local_polynomials() {
        let m = mesh();
        let cubic = |x: f64, y: f64, a: usize, b: usize| match (a, b) {
            (0, 0) => 1.0 + x - 2.0 * y + x * y + 3.0 * x * x * y - y * y * y,
            (1, 0) => 1.0 + y + 6.0 * x * y,
            (0, 1) => -2.0 + x + 3.0 * x * x - 3.0 * y * y,
            _ => unreachable!(),
        };
        let quad = |x: f64, y: f64, a: usize, b: usize| match (a, b) {
            (0, 0) => 2.0 - x + 0.5 * y + x * y - y * y,
            (1, 0) => -1.0 + y,
            (0, 1) => 0.5 + x - 2.0 * y,
            _ => unreachable!(),
        };
        for (kind, u) in [
            (ElementKind::LagrangeP2, &quad as &dyn Fn(f64, f64, usize, usize) -> f64),
            (ElementKind::HermiteCubic, &cubic),
        ] {
            let map = DofMap::new(&m, kind);
            let c = map.interpolate(u);
            for t in [3, 150, 700] {
                let b = ElementBasis::new(&m, t, kind).unwrap();
                let p = b.from_barycentric([0.2, 0.5, 0.3]);
                let (v, g) = b.eval(p[0], p[1]);
                let dofs = &map.element_dofs[t];
                let val: f64 = dofs.iter().zip(&v).map(|(&d, w)| c[d] * w).sum();
                let gx: f64 = dofs.iter().zip(&g).map(|(&d, w)| c[d] * w[0]).sum();
                let gy: f64 = dofs.iter().zip(&g).map(|(&d, w)| c[d] * w[1]).sum();
                assert!((val - u(p[0], p[1], 0, 0)).abs() < 1e-11, "{kind}");
                assert!((gx - u(p[0], p[1], 1, 0)).abs() < 1e-9, "{kind}");
                assert!((gy - u(p[0], p[1], 0, 1)).abs() < 1e-9, "{kind}");
            }
        }
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("p2".parse::<ElementKind>().unwrap(), ElementKind::LagrangeP2);
        assert_eq!("hermite".parse::<ElementKind>().unwrap(), ElementKind::HermiteCubic);
        assert!("p3".parse::<ElementKind>().is_err());
        assert_eq!(ElementKind::HermiteCubic.to_string(), "hermite");
    }
}
