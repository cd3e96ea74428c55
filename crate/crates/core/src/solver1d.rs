//! Galerkin solves of `-u'' = f`: the global solution `u_h` and the local
//! projection onto a subregion with boundary data taken from `u`.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{backward_error, BandedSpd};
use crate::problems::Problem1D;
use crate::quadrature::GaussRule;
use crate::spline1d::{Partition1D, Side, SplineSpace1D};

/// Backward-error tolerance of the 1D linear solves.
pub const SOLVE_TOL: f64 = 1e-12;

/// A spline given by its B-spline coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSolution1D {
    pub space: SplineSpace1D,
    pub coeffs: Vec<f64>,
}

impl DiscreteSolution1D {
    pub fn new(space: SplineSpace1D, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.dim() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                space.dim(),
                coeffs.len()
            )));
        }
        Ok(Self { space, coeffs })
    }

    /// `s`-th derivative at `x`, with the side rules of
    /// [`SplineSpace1D::basis_eval`].
    pub fn eval(&self, x: f64, s: usize, side: Option<Side>) -> Result<f64> {
        let e = self.space.element_for(x, s, side)?;
        Ok(self.eval_on_element(e, x, s))
    }

    /// `s`-th derivative of the polynomial piece on element `e` at `x`.
    pub fn eval_on_element(&self, e: usize, x: f64, s: usize) -> f64 {
        let first = self.space.first_active(e);
        self.space
            .basis_eval_on_element(e, x, s)
            .iter()
            .zip(&self.coeffs[first..])
            .map(|(b, c)| b * c)
            .sum()
    }
}

struct Assembled {
    stiffness: BandedSpd,
    load: Vec<f64>,
}

/// Full stiffness matrix and load vector over all basis functions.
fn assemble(problem: &Problem1D, space: &SplineSpace1D) -> Result<Assembled> {
    let k = space.k();
    let rule = GaussRule::new(k + 2);
    let part = space.partition();
    let locals: Vec<(Vec<f64>, Vec<f64>)> = (0..space.n_elements())
        .into_par_iter()
        .map(|e| {
            let (xa, xb) = (part.breakpoints()[e], part.breakpoints()[e + 1]);
            let mut ke = vec![0.0; (k + 1) * (k + 1)];
            let mut fe = vec![0.0; k + 1];
            for (x, w) in rule.mapped(xa, xb) {
                let ders = space.ders_on_element(e, x, 1);
                let fx = (problem.f)(x);
                for i in 0..=k {
                    fe[i] += w * fx * ders[0][i];
                    for j in 0..=k {
                        ke[i * (k + 1) + j] += w * ders[1][i] * ders[1][j];
                    }
                }
            }
            (ke, fe)
        })
        .collect();

    let n = space.dim();
    let mut stiffness = BandedSpd::zeros(n, k);
    let mut load = vec![0.0; n];
    for (e, (ke, fe)) in locals.iter().enumerate() {
        let first = space.first_active(e);
        for i in 0..=k {
            load[first + i] += fe[i];
            for j in 0..=i {
                stiffness.add(first + i, first + j, ke[i * (k + 1) + j]);
            }
        }
    }
    for &(x, w) in &problem.point_loads {
        let (first, vals) = space.basis_eval(x, 0, None)?;
        for (j, v) in vals.iter().enumerate() {
            load[first + j] += w * v;
        }
    }
    Ok(Assembled { stiffness, load })
}

/// Solves for the coefficients in `free`, with every other coefficient fixed
/// to the value already stored in `coeffs`. Only the test functions indexed
/// by `free` enter the system.
fn solve_free(sys: &Assembled, free: Range<usize>, coeffs: &mut [f64]) -> Result<()> {
    if free.is_empty() {
        return Ok(());
    }
    let n = coeffs.len();
    let bw = sys.stiffness.bandwidth();
    let m = free.len();
    let mut a = BandedSpd::zeros(m, bw);
    let mut rhs = vec![0.0; m];
    for (li, gi) in free.clone().enumerate() {
        rhs[li] = sys.load[gi];
        let lo = gi.saturating_sub(bw);
        let hi = (gi + bw).min(n - 1);
        for gj in lo..=hi {
            let v = sys.stiffness.get(gi, gj);
            if free.contains(&gj) {
                if gj <= gi {
                    a.add(li, gj - free.start, v);
                }
            } else {
                rhs[li] -= v * coeffs[gj];
            }
        }
    }
    let x = a.solve(&rhs, SOLVE_TOL)?;
    coeffs[free].copy_from_slice(&x);
    Ok(())
}

/// Galerkin solution with homogeneous Dirichlet conditions.
pub fn solve_global(problem: &Problem1D, space: &SplineSpace1D) -> Result<DiscreteSolution1D> {
    check_domain(problem, space.partition())?;
    let n = space.dim();
    let mut coeffs = vec![0.0; n];
    if n > 2 {
        let sys = assemble(problem, space)?;
        solve_free(&sys, 1..n - 1, &mut coeffs)?;
    }
    DiscreteSolution1D::new(space.clone(), coeffs)
}

fn check_domain(problem: &Problem1D, part: &Partition1D) -> Result<()> {
    let (a, b) = problem.domain;
    let tol = 1e-12 * (b - a).abs().max(1.0);
    if (part.a() - a).abs() > tol || (part.b() - b).abs() > tol {
        return Err(Error::InvalidArgument(format!(
            "partition [{}, {}] does not match the problem domain [{a}, {b}]",
            part.a(),
            part.b()
        )));
    }
    Ok(())
}

/// Normwise relative residual `|F - K c| / (|K| |c| + |F|)` over the
/// interior test functions.
pub fn galerkin_residual(problem: &Problem1D, sol: &DiscreteSolution1D) -> Result<f64> {
    let n = sol.space.dim();
    if n <= 2 {
        return Ok(0.0);
    }
    let sys = assemble(problem, &sol.space)?;
    let kc = sys.stiffness.matvec(&sol.coeffs);
    let r: Vec<f64> = (1..n - 1).map(|i| sys.load[i] - kc[i]).collect();
    Ok(backward_error(&r, sys.stiffness.inf_norm(), &sol.coeffs, &sys.load[1..n - 1]))
}

/// A union of whole elements around a center point.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalRegion1D {
    pub center: f64,
    pub half_width: f64,
    /// Exponent with `d = h^sigma`, when built from one.
    pub sigma: Option<f64>,
    pub element_range: Range<usize>,
    /// The contained breakpoints are invariant under reflection through the center.
    pub symmetric: bool,
}

impl LocalRegion1D {
    /// Smallest union of elements covering `[center - half_width, center + half_width]`.
    pub fn new(partition: &Partition1D, center: f64, half_width: f64) -> Result<Self> {
        let (a, b) = (partition.a(), partition.b());
        if !(center > a && center < b) {
            return Err(Error::InvalidRegion(format!("center {center} is not inside ({a}, {b})")));
        }
        if !(half_width > 0.0) {
            return Err(Error::InvalidRegion(format!("half width {half_width} must be positive")));
        }
        let bp = partition.breakpoints();
        let tol = 1e-12 * (b - a);
        let lo = center - half_width;
        let hi = center + half_width;
        let first = bp.partition_point(|&p| p <= lo + tol).saturating_sub(1);
        let last = bp.partition_point(|&p| p < hi - tol).min(bp.len() - 1);
        let range = first..last;
        let symmetric = Self::check_symmetry(&bp[first..=last], center);
        Ok(Self { center, half_width, sigma: None, element_range: range, symmetric })
    }

    /// Region of diameter `h^sigma` with `h` the smallest element length.
    pub fn from_sigma(partition: &Partition1D, center: f64, sigma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&sigma) {
            return Err(Error::InvalidRegion(format!("sigma = {sigma} must lie in [0, 1)")));
        }
        let d = partition.h().powf(sigma);
        let mut region = Self::new(partition, center, 0.5 * d)?;
        region.sigma = Some(sigma);
        Ok(region)
    }

    fn check_symmetry(bp: &[f64], center: f64) -> bool {
        let n = bp.len();
        (0..n).all(|i| {
            let (l, r) = (bp[i], bp[n - 1 - i]);
            let scale = l.abs().max(r.abs()).max(center.abs()).max(1.0);
            ((l + r) - 2.0 * center).abs() <= 1e-13 * scale
        })
    }

    pub fn n_elements(&self) -> usize {
        self.element_range.len()
    }

    /// Breakpoints of the region as a partition of its own.
    pub fn sub_partition(&self, partition: &Partition1D) -> Result<Partition1D> {
        let r = &self.element_range;
        Partition1D::new(partition.breakpoints()[r.start..=r.end].to_vec())
    }
}

/// How boundary data of the local projection is taken from `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceMode {
    /// Match `u` and its derivatives up to order `mu` at both ends; test
    /// against the splines whose derivatives up to `mu` vanish there.
    #[default]
    MatchDerivatives,
    /// Match only the values of `u` at both ends; test against every spline
    /// vanishing there.
    Values,
}

/// Local Galerkin projection of `u` onto the spline space over `region`.
pub fn solve_local(
    problem: &Problem1D,
    space: &SplineSpace1D,
    region: &LocalRegion1D,
    mode: TraceMode,
) -> Result<DiscreteSolution1D> {
    check_domain(problem, space.partition())?;
    let u = problem.u_exact.as_ref().ok_or(Error::MissingExactSolution)?;
    let part = space.partition();
    let range = &region.element_range;
    if range.start == 0 || range.end == part.n_elements() {
        return Err(Error::InvalidRegion("region touches the domain boundary".into()));
    }
    if range.len() < 2 {
        return Err(Error::InvalidRegion(format!("region has {} element(s), need at least 2", range.len())));
    }
    let local = SplineSpace1D::new(region.sub_partition(part)?, space.k(), space.mu())?;
    let n = local.dim();
    let (xa, xb) = (local.partition().a(), local.partition().b());
    let fixed = match mode {
        TraceMode::MatchDerivatives => space.mu() + 1,
        TraceMode::Values => 1,
    };
    if n < 2 * fixed {
        return Err(Error::InvalidRegion(format!(
            "local space of dimension {n} cannot hold {fixed} trace conditions per end"
        )));
    }

    let mut coeffs = vec![0.0; n];
    // Left end: B_j^(d)(xa) vanishes for j > d, so the first `fixed`
    // functions carry all derivative traces up to order fixed - 1.
    let left = local.ders_on_element(0, xa, fixed - 1);
    let right = local.ders_on_element(local.n_elements() - 1, xb, fixed - 1);
    let k = local.k();
    let lhs = DMatrix::from_fn(fixed, fixed, |d, j| left[d][j]);
    let rhs = DVector::from_fn(fixed, |d, _| u(xa, d));
    let cl = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SolveFailed("left trace system is singular".into()))?;
    let rhs_r = DVector::from_fn(fixed, |d, _| u(xb, d));
    let lhs_r = DMatrix::from_fn(fixed, fixed, |d, j| right[d][k + 1 - fixed + j]);
    let cr = lhs_r
        .lu()
        .solve(&rhs_r)
        .ok_or_else(|| Error::SolveFailed("right trace system is singular".into()))?;
    coeffs[..fixed].copy_from_slice(cl.as_slice());
    coeffs[n - fixed..].copy_from_slice(cr.as_slice());

    let local_problem = Problem1D {
        f: problem.f.clone(),
        u_exact: problem.u_exact.clone(),
        domain: (xa, xb),
        point_loads: problem.point_loads.iter().copied().filter(|(x, _)| *x > xa && *x < xb).collect(),
    };
    let sys = assemble(&local_problem, &local)?;
    solve_free(&sys, fixed..n - fixed, &mut coeffs)?;
    DiscreteSolution1D::new(local, coeffs)
}
