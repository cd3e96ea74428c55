//! Tensor-product spline Galerkin solver for `-Laplace u = f` on a rectangle.

use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness1d::{convergence_rate, RateFlag};
use crate::linalg::SparseSpdBuilder;
use crate::problems::Problem2D;
use crate::quadrature::GaussRule;
use crate::spline1d::{Partition1D, Side, SplineSpace1D};

/// Backward-error tolerance of the tensor-product solve.
pub const SOLVE_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorSpace2D {
    pub space_x: SplineSpace1D,
    pub space_y: SplineSpace1D,
}

impl TensorSpace2D {
    pub fn new(space_x: SplineSpace1D, space_y: SplineSpace1D) -> Self {
        Self { space_x, space_y }
    }

    /// Same degree, smoothness and uniform element count in both directions.
    pub fn uniform(domain: [(f64, f64); 2], n: usize, k: usize, mu: usize) -> Result<Self> {
        let sx = SplineSpace1D::new(Partition1D::uniform(domain[0].0, domain[0].1, n)?, k, mu)?;
        let sy = SplineSpace1D::new(Partition1D::uniform(domain[1].0, domain[1].1, n)?, k, mu)?;
        Ok(Self::new(sx, sy))
    }

    pub fn dim(&self) -> usize {
        self.space_x.dim() * self.space_y.dim()
    }
}

/// Coefficients stored row-major: `coeffs[i * dim_y + j]` multiplies
/// `B_i(x) B_j(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution2D {
    pub space: TensorSpace2D,
    pub coeffs: Vec<f64>,
}

impl DiscreteSolution2D {
    /// `d^a1/dx^a1 d^a2/dy^a2 u_h (x, y)`, with the 1D side rules per direction.
    pub fn eval(&self, x: f64, y: f64, alpha: (usize, usize), sides: (Option<Side>, Option<Side>)) -> Result<f64> {
        let (sx, sy) = (&self.space.space_x, &self.space.space_y);
        let ex = sx.element_for(x, alpha.0, sides.0)?;
        let ey = sy.element_for(y, alpha.1, sides.1)?;
        let bx = sx.basis_eval_on_element(ex, x, alpha.0);
        let by = sy.basis_eval_on_element(ey, y, alpha.1);
        let (fx, fy) = (sx.first_active(ex), sy.first_active(ey));
        let ny = sy.dim();
        let mut v = 0.0;
        for (i, bi) in bx.iter().enumerate() {
            let row = (fx + i) * ny + fy;
            for (j, bj) in by.iter().enumerate() {
                v += bi * bj * self.coeffs[row + j];
            }
        }
        Ok(v)
    }
}

/// 1D stiffness and mass matrices, dense by row over the full basis.
fn matrices_1d(space: &SplineSpace1D) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = space.dim();
    let k = space.k();
    let rule = GaussRule::new(k + 1);
    let bp = space.partition().breakpoints();
    let mut a = vec![vec![0.0; n]; n];
    let mut m = vec![vec![0.0; n]; n];
    for e in 0..space.n_elements() {
        let first = space.first_active(e);
        for (x, w) in rule.mapped(bp[e], bp[e + 1]) {
            let d = space.ders_on_element(e, x, 1);
            for i in 0..=k {
                for j in 0..=k {
                    a[first + i][first + j] += w * d[1][i] * d[1][j];
                    m[first + i][first + j] += w * d[0][i] * d[0][j];
                }
            }
        }
    }
    (a, m)
}

/// Galerkin solve with stiffness `A_x (x) M_y + M_x (x) A_y`.
pub fn solve_tensor(problem: &Problem2D, space: &TensorSpace2D) -> Result<DiscreteSolution2D> {
    let (sx, sy) = (&space.space_x, &space.space_y);
    for (d, s) in [(problem.domain[0], sx), (problem.domain[1], sy)] {
        let p = s.partition();
        if (p.a() - d.0).abs() > 1e-12 || (p.b() - d.1).abs() > 1e-12 {
            return Err(Error::InvalidArgument("tensor space does not match the problem domain".into()));
        }
    }
    let (nx, ny) = (sx.dim(), sy.dim());
    let mut coeffs = vec![0.0; nx * ny];
    if nx <= 2 || ny <= 2 {
        return Ok(DiscreteSolution2D { space: space.clone(), coeffs });
    }
    let (ax, mx) = matrices_1d(sx);
    let (ay, my) = matrices_1d(sy);
    let (kx, ky) = (sx.k(), sy.k());
    let (ix, iy) = (nx - 2, ny - 2);
    let dof = |i: usize, j: usize| (i - 1) * iy + (j - 1);

    let mut builder = SparseSpdBuilder::new(ix * iy);
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            let row = dof(i, j);
            for i2 in i.saturating_sub(kx).max(1)..(i + kx + 1).min(nx - 1) {
                for j2 in j.saturating_sub(ky).max(1)..(j + ky + 1).min(ny - 1) {
                    let v = ax[i][i2] * my[j][j2] + mx[i][i2] * ay[j][j2];
                    if v != 0.0 {
                        builder.push(row, dof(i2, j2), v);
                    }
                }
            }
        }
    }
    let mat = builder.build()?;

    let load = assemble_load(problem, space);
    let rhs: Vec<f64> = (1..nx - 1).flat_map(|i| (1..ny - 1).map(move |j| (i, j))).map(|(i, j)| load[i * ny + j]).collect();
    let sol = mat.solve(&rhs, SOLVE_TOL, false)?;
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            coeffs[i * ny + j] = sol.x[dof(i, j)];
        }
    }
    Ok(DiscreteSolution2D { space: space.clone(), coeffs })
}

fn assemble_load(problem: &Problem2D, space: &TensorSpace2D) -> Vec<f64> {
    let (sx, sy) = (&space.space_x, &space.space_y);
    let (kx, ky) = (sx.k(), sy.k());
    let rx = GaussRule::new(kx + 2);
    let ry = GaussRule::new(ky + 2);
    let (bx, by) = (sx.partition().breakpoints(), sy.partition().breakpoints());
    let ny = sy.dim();
    let rows: Vec<Vec<(usize, f64)>> = (0..sx.n_elements())
        .into_par_iter()
        .map(|ex| {
            let mut out = Vec::new();
            let fx = sx.first_active(ex);
            let xs: Vec<(f64, f64, Vec<f64>)> =
                rx.mapped(bx[ex], bx[ex + 1]).map(|(x, w)| (x, w, sx.basis_eval_on_element(ex, x, 0))).collect();
            for ey in 0..sy.n_elements() {
                let fy = sy.first_active(ey);
                let mut local = vec![0.0; (kx + 1) * (ky + 1)];
                for (y, wy) in ry.mapped(by[ey], by[ey + 1]) {
                    let vy = sy.basis_eval_on_element(ey, y, 0);
                    for (x, wx, vx) in &xs {
                        let f = (problem.f)(*x, y) * wx * wy;
                        for i in 0..=kx {
                            for j in 0..=ky {
                                local[i * (ky + 1) + j] += f * vx[i] * vy[j];
                            }
                        }
                    }
                }
                for i in 0..=kx {
                    for j in 0..=ky {
                        out.push(((fx + i) * ny + fy + j, local[i * (ky + 1) + j]));
                    }
                }
            }
            out
        })
        .collect();
    let mut load = vec![0.0; space.dim()];
    for row in rows {
        for (idx, v) in row {
            load[idx] += v;
        }
    }
    load
}

/// `|d^alpha (u - u_h)(x0, y0)|`.
pub fn mixed_deriv_error(
    problem: &Problem2D,
    sol: &DiscreteSolution2D,
    point: (f64, f64),
    alpha: (usize, usize),
    sides: (Option<Side>, Option<Side>),
) -> Result<f64> {
    let (kx, ky) = (sol.space.space_x.k(), sol.space.space_y.k());
    if alpha.0 > kx {
        return Err(Error::InvalidDerivativeOrder { k: kx, s: alpha.0 });
    }
    if alpha.1 > ky {
        return Err(Error::InvalidDerivativeOrder { k: ky, s: alpha.1 });
    }
    let uh = sol.eval(point.0, point.1, alpha, sides)?;
    let u = problem.exact(point.0, point.1, alpha.0, alpha.1)?;
    Ok((u - uh).abs())
}

/// Maximum of `|d^alpha (u - u_h)|` over the mesh vertices inside `region`.
pub fn vertex_max_error(
    problem: &Problem2D,
    sol: &DiscreteSolution2D,
    alpha: (usize, usize),
    region: [(f64, f64); 2],
) -> Result<f64> {
    let bx = sol.space.space_x.partition().breakpoints();
    let by = sol.space.space_y.partition().breakpoints();
    let inside = |v: f64, r: (f64, f64)| v >= r.0 - 1e-12 && v <= r.1 + 1e-12;
    let mut max = None::<f64>;
    for &x in bx.iter().filter(|&&x| inside(x, region[0])) {
        for &y in by.iter().filter(|&&y| inside(y, region[1])) {
            let e = mixed_deriv_error(problem, sol, (x, y), alpha, (None, None))?;
            max = Some(max.map_or(e, |m| m.max(e)));
        }
    }
    max.ok_or_else(|| Error::InvalidArgument("no mesh vertex inside the probe region".into()))
}

/// Where a tensor-product error is measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Probe2D {
    Point(f64, f64),
    /// Maximum over mesh vertices in `[0.1, 0.9]^2` of the unit square.
    InteriorVertices,
}

impl fmt::Display for Probe2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Point(x, y) => write!(f, "{x:.16e},{y:.16e}"),
            Self::InteriorVertices => write!(f, "vertices,vertices"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorRateRow {
    pub k1: usize,
    pub k2: usize,
    pub mu1: usize,
    pub mu2: usize,
    pub alpha: (usize, usize),
    pub probe: Probe2D,
    pub n: usize,
    pub err: f64,
    /// Rate against the previous level; `None` on the first.
    pub rate: Option<f64>,
    pub flag: Option<RateFlag>,
}

/// Uniform refinement study with `k1 = k2 = k`, `mu1 = mu2 = mu`. The ideal
/// order behind the flags is `k + 1 - max(alpha)`.
pub fn tensor_rate_study(
    problem: &Problem2D,
    k: usize,
    mu: usize,
    n_list: &[usize],
    alpha: (usize, usize),
    probes: &[Probe2D],
) -> Result<Vec<TensorRateRow>> {
    let sols: Vec<DiscreteSolution2D> = n_list
        .iter()
        .map(|&n| solve_tensor(problem, &TensorSpace2D::uniform(problem.domain, n, k, mu)?))
        .collect::<Result<_>>()?;
    let ideal = (k + 1) as f64 - alpha.0.max(alpha.1) as f64;
    let mut rows = Vec::new();
    for probe in probes {
        let mut prev: Option<(usize, f64)> = None;
        for (&n, sol) in n_list.iter().zip(&sols) {
            let err = match *probe {
                Probe2D::Point(x, y) => mixed_deriv_error(problem, sol, (x, y), alpha, (None, None))?,
                Probe2D::InteriorVertices => vertex_max_error(problem, sol, alpha, [(0.1, 0.9), (0.1, 0.9)])?,
            };
            let (rate, flag) = match prev {
                Some((pn, pe)) => {
                    let r = convergence_rate(pe, err, pn as f64, n as f64);
                    (Some(r), Some(RateFlag::classify(r, ideal, pe, err)))
                }
                None => (None, None),
            };
            rows.push(TensorRateRow { k1: k, k2: k, mu1: mu, mu2: mu, alpha, probe: *probe, n, err, rate, flag });
            prev = Some((n, err));
        }
    }
    Ok(rows)
}

pub const TENSOR_CSV_HEADER: &str = "k1,k2,mu1,mu2,a1,a2,x0,y0,N,err,rate,flag";

pub fn write_tensor_csv<W: Write>(mut w: W, rows: &[TensorRateRow]) -> io::Result<()> {
    writeln!(w, "{TENSOR_CSV_HEADER}")?;
    for r in rows {
        let rate = r.rate.map(|v| format!("{v:.16e}")).unwrap_or_default();
        let flag = r.flag.map(|f| f.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{:.16e},{},{}",
            r.k1, r.k2, r.mu1, r.mu2, r.alpha.0, r.alpha.1, r.probe, r.n, r.err, rate, flag
        )?;
    }
    Ok(())
}
