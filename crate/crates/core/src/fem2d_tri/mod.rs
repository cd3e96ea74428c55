//! Poisson problems on triangulations of the unit square with quadratic
//! Lagrange and cubic Hermite elements, and pointwise rate studies at a
//! locally symmetric vertex.

mod elements;
mod mesh;

use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;

pub use elements::{DofKind, DofMap, ElementBasis, ElementKind};
pub use mesh::{build_symmetric_mesh, MeshParams, SymmetricPatch, TriMesh2D};

use crate::error::{Error, Result};
use crate::linalg::SparseSpdBuilder;
use crate::problems::Problem2D;
use crate::quadrature::TriangleRule;

/// Backward error accepted from the sparse solve.
pub const SOLVE_TOL: f64 = 1e-10;

/// Finite element solution together with its discretization.
#[derive(Debug, Clone)]
pub struct TriSolution {
    pub mesh: TriMesh2D,
    pub dofs: DofMap,
    /// One coefficient per global DOF, fixed ones included.
    pub coeffs: Vec<f64>,
    pub backward_error: f64,
    pub condition_estimate: Option<f64>,
}

impl TriSolution {
    pub fn kind(&self) -> ElementKind {
        self.dofs.kind
    }

    /// Value and gradient at `(x, y)`, evaluated on the first triangle that
    /// contains the point.
    pub fn eval(&self, x: f64, y: f64) -> Result<(f64, [f64; 2])> {
        for t in 0..self.mesh.n_triangles() {
            let b = ElementBasis::new(&self.mesh, t, self.kind())?;
            if b.barycentric(x, y).iter().all(|&l| l >= -1e-12) {
                let (v, g) = b.eval(x, y);
                let local = &self.dofs.element_dofs[t];
                let val = local.iter().zip(&v).map(|(&d, w)| self.coeffs[d] * w).sum();
                let gx = local.iter().zip(&g).map(|(&d, w)| self.coeffs[d] * w[0]).sum();
                let gy = local.iter().zip(&g).map(|(&d, w)| self.coeffs[d] * w[1]).sum();
                return Ok((val, [gx, gy]));
            }
        }
        Err(Error::OutOfDomain { x, a: 0.0, b: 1.0 })
    }

    /// Pointwise error at vertex `v`: `|e|` for Lagrange elements,
    /// `|d/dx e| + |d/dy e|` for Hermite elements.
    pub fn vertex_error(&self, problem: &Problem2D, v: usize) -> Result<f64> {
        let p = self.mesh.vertices[v];
        match self.kind() {
            ElementKind::LagrangeP2 => Ok((self.coeffs[v] - problem.exact(p[0], p[1], 0, 0)?).abs()),
            ElementKind::HermiteCubic => {
                let ex = self.coeffs[3 * v + 1] - problem.exact(p[0], p[1], 1, 0)?;
                let ey = self.coeffs[3 * v + 2] - problem.exact(p[0], p[1], 0, 1)?;
                Ok(ex.abs() + ey.abs())
            }
        }
    }

    /// Maximum probe error: over all Lagrange nodes, or over all vertices
    /// for Hermite elements.
    pub fn max_error(&self, problem: &Problem2D) -> Result<f64> {
        match self.kind() {
            ElementKind::LagrangeP2 => {
                let mut worst = 0.0_f64;
                for (d, kind) in self.dofs.dofs.iter().enumerate() {
                    if let DofKind::Value(p) = kind {
                        worst = worst.max((self.coeffs[d] - problem.exact(p[0], p[1], 0, 0)?).abs());
                    }
                }
                Ok(worst)
            }
            ElementKind::HermiteCubic => {
                let mut worst = 0.0_f64;
                for v in 0..self.mesh.n_vertices() {
                    worst = worst.max(self.vertex_error(problem, v)?);
                }
                Ok(worst)
            }
        }
    }
}

type LocalSystem = (Vec<f64>, Vec<f64>);

fn local_system(problem: &Problem2D, mesh: &TriMesh2D, t: usize, kind: ElementKind) -> Result<LocalSystem> {
    let (ds, df) = kind.quadrature_degrees();
    let n = kind.local_dofs();
    let basis = ElementBasis::new(mesh, t, kind)?;
    let area = basis.area();
    let mut k = vec![0.0; n * n];
    let mut f = vec![0.0; n];
    let stiff = TriangleRule::symmetric(ds);
    for (l, w) in stiff.points.iter().zip(&stiff.weights) {
        let p = basis.from_barycentric(*l);
        let (_, g) = basis.eval(p[0], p[1]);
        let w = w * area;
        for i in 0..n {
            for j in 0..n {
                k[i * n + j] += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
            }
        }
    }
    let load = TriangleRule::symmetric(df);
    for (l, w) in load.points.iter().zip(&load.weights) {
        let p = basis.from_barycentric(*l);
        let (v, _) = basis.eval(p[0], p[1]);
        let fw = w * area * (problem.f)(p[0], p[1]);
        for i in 0..n {
            f[i] += fw * v[i];
        }
    }
    Ok((k, f))
}

/// Galerkin solution of `-Laplace u = f` with homogeneous Dirichlet data.
/// Element matrices are computed in parallel and accumulated in element
/// order.
pub fn solve_tri(problem: &Problem2D, mesh: &TriMesh2D, kind: ElementKind) -> Result<TriSolution> {
    if problem.domain != [(0.0, 1.0), (0.0, 1.0)] {
        return Err(Error::InvalidArgument("triangular solver needs the unit square".into()));
    }
    let dofs = DofMap::new(mesh, kind);
    let mut free_index = vec![usize::MAX; dofs.n_dofs()];
    let mut n_free = 0;
    for (d, &fixed) in dofs.fixed.iter().enumerate() {
        if !fixed {
            free_index[d] = n_free;
            n_free += 1;
        }
    }
    let locals: Vec<LocalSystem> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|t| local_system(problem, mesh, t, kind))
        .collect::<Result<_>>()?;
    let n = kind.local_dofs();
    let mut builder = SparseSpdBuilder::new(n_free);
    let mut rhs = vec![0.0; n_free];
    for (t, (k, f)) in locals.iter().enumerate() {
        let map: Vec<usize> = dofs.element_dofs[t].iter().map(|&d| free_index[d]).collect();
        for i in 0..n {
            if map[i] == usize::MAX {
                continue;
            }
            rhs[map[i]] += f[i];
            for j in 0..n {
                if map[j] != usize::MAX {
                    builder.push(map[i], map[j], k[i * n + j]);
                }
            }
        }
    }
    let sol = builder.build()?.solve(&rhs, SOLVE_TOL, true)?;
    let mut coeffs = vec![0.0; dofs.n_dofs()];
    for (d, &fi) in free_index.iter().enumerate() {
        if fi != usize::MAX {
            coeffs[d] = sol.x[fi];
        }
    }
    Ok(TriSolution {
        mesh: mesh.clone(),
        dofs,
        coeffs,
        backward_error: sol.backward_error,
        condition_estimate: sol.condition_estimate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriProbe {
    X0,
    X0Prime,
    Max,
}

impl fmt::Display for TriProbe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::X0 => "x0",
            Self::X0Prime => "x0prime",
            Self::Max => "max",
        })
    }
}

/// Probe errors of one refinement level.
#[derive(Debug, Clone)]
pub struct TriLevel {
    pub n: usize,
    pub ndof: usize,
    pub err_x0: f64,
    pub err_x0prime: f64,
    pub err_max: f64,
    pub backward_error: f64,
    pub condition_estimate: Option<f64>,
    pub mesh: TriMesh2D,
}

impl TriLevel {
    pub fn error(&self, probe: TriProbe) -> f64 {
        match probe {
            TriProbe::X0 => self.err_x0,
            TriProbe::X0Prime => self.err_x0prime,
            TriProbe::Max => self.err_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriRateRow {
    pub kind: ElementKind,
    pub alpha: usize,
    pub probe: TriProbe,
    pub ndof_coarse: usize,
    pub ndof_fine: usize,
    pub err_coarse: f64,
    pub err_fine: f64,
    pub rate: f64,
}

/// `log(e_c / e_f) / log(sqrt(N_f) / sqrt(N_c))` with `N` the number of DOFs.
pub fn dof_rate(err_coarse: f64, err_fine: f64, ndof_coarse: usize, ndof_fine: usize) -> f64 {
    (err_coarse / err_fine).ln() / ((ndof_fine as f64).sqrt() / (ndof_coarse as f64).sqrt()).ln()
}

#[derive(Debug, Clone)]
pub struct TriStudy {
    pub levels: Vec<TriLevel>,
    /// Per probe (x0, x0prime, max), one row per consecutive pair of levels.
    pub rows: Vec<TriRateRow>,
}

impl TriStudy {
    pub fn rates(&self, probe: TriProbe) -> Vec<f64> {
        self.rows.iter().filter(|r| r.probe == probe).map(|r| r.rate).collect()
    }
}

/// Solves on the mesh ladder `ladder` (base lattice sizes, increasing) built
/// from `params` and tabulates probe rates.
pub fn tri_rate_study(
    problem: &Problem2D,
    kind: ElementKind,
    ladder: &[usize],
    params: &MeshParams,
) -> Result<TriStudy> {
    if ladder.len() < 2 {
        return Err(Error::InvalidArgument("a rate study needs at least two levels".into()));
    }
    if ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!("ladder {ladder:?} must be strictly increasing")));
    }
    let mut levels = Vec::with_capacity(ladder.len());
    for &n in ladder {
        let mesh = build_symmetric_mesh(&MeshParams { n, ..params.clone() })?;
        let sol = solve_tri(problem, &mesh, kind)?;
        let level = TriLevel {
            n,
            ndof: sol.dofs.n_dofs(),
            err_x0: sol.vertex_error(problem, mesh.patch.center_vertex)?,
            err_x0prime: sol.vertex_error(problem, mesh.x0prime_vertex)?,
            err_max: sol.max_error(problem)?,
            backward_error: sol.backward_error,
            condition_estimate: sol.condition_estimate,
            mesh,
        };
        log::info!(
            "{kind} n = {n}: ndof = {}, x0 {:.3e}, x0prime {:.3e}, max {:.3e}",
            level.ndof,
            level.err_x0,
            level.err_x0prime,
            level.err_max
        );
        levels.push(level);
    }
    let mut rows = Vec::new();
    for probe in [TriProbe::X0, TriProbe::X0Prime, TriProbe::Max] {
        for w in levels.windows(2) {
            let (c, f) = (&w[0], &w[1]);
            rows.push(TriRateRow {
                kind,
                alpha: kind.probe_order(),
                probe,
                ndof_coarse: c.ndof,
                ndof_fine: f.ndof,
                err_coarse: c.error(probe),
                err_fine: f.error(probe),
                rate: dof_rate(c.error(probe), f.error(probe), c.ndof, f.ndof),
            });
        }
    }
    Ok(TriStudy { levels, rows })
}

pub const TRI_CSV_HEADER: &str = "kind,alpha,probe,Ndof_coarse,Ndof_fine,err_coarse,err_fine,rate";

pub fn write_tri_csv<W: Write>(mut w: W, rows: &[TriRateRow]) -> io::Result<()> {
    writeln!(w, "{TRI_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{:.16e},{:.16e},{:.16e}",
            r.kind, r.alpha, r.probe, r.ndof_coarse, r.ndof_fine, r.err_coarse, r.err_fine, r.rate
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_source_gives_zero_solution() {
        let mesh = build_symmetric_mesh(&MeshParams::new(20)).unwrap();
        let zero = Problem2D::from_exact(|_, _, _, _| 0.0, [(0.0, 1.0), (0.0, 1.0)]);
        for kind in [ElementKind::LagrangeP2, ElementKind::HermiteCubic] {
            let sol = solve_tri(&zero, &mesh, kind).unwrap();
            assert!(sol.coeffs.iter().all(|&c| c == 0.0));
        }
    }

    #[test]
    fn p2_solution_is_accurate() {
        let mesh = build_symmetric_mesh(&MeshParams::new(16)).unwrap();
        let p = Problem2D::sin2d();
        let sol = solve_tri(&p, &mesh, ElementKind::LagrangeP2).unwrap();
        assert!(sol.backward_error <= SOLVE_TOL);
        assert!(sol.max_error(&p).unwrap() < 1e-3);
        let (v, g) = sol.eval(0.3, 0.4).unwrap();
        assert!((v - p.exact(0.3, 0.4, 0, 0).unwrap()).abs() < 1e-4);
        assert!((g[0] - p.exact(0.3, 0.4, 1, 0).unwrap()).abs() < 1e-1);
    }

    #[test]
    fn hermite_vertex_gradients_converge() {
        let mesh = build_symmetric_mesh(&MeshParams::new(16)).unwrap();
        let p = Problem2D::sin2d();
        let sol = solve_tri(&p, &mesh, ElementKind::HermiteCubic).unwrap();
        assert!(sol.max_error(&p).unwrap() < 1e-2);
    }

    #[test]
    fn dof_rate_uses_square_root() {
        let r = dof_rate(16.0, 1.0, 100, 400);
        assert!((r - 4.0).abs() < 1e-12);
    }

    #[test]
    fn csv_layout() {
        let row = TriRateRow {
            kind: ElementKind::LagrangeP2,
            alpha: 0,
            probe: TriProbe::X0Prime,
            ndof_coarse: 10,
            ndof_fine: 40,
            err_coarse: 1.0,
            err_fine: 0.25,
            rate: 2.0,
        };
        let mut out = Vec::new();
        write_tri_csv(&mut out, &[row]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(TRI_CSV_HEADER));
        assert!(lines.next().unwrap().starts_with("p2,0,x0prime,10,40,1.0000000000000000e0,"));
    }
}
