//! Pointwise error sampling on mapped reference points, convergence rates
//! and Legendre coefficients of the error on an element.

use std::fmt;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::polyalg::legendre_values;
use crate::problems::Problem1D;
use crate::quadrature::GaussRule;
use crate::solver1d::{solve_global, DiscreteSolution1D};
use crate::spline1d::{Partition1D, SplineSpace1D};

/// Default interior region `[0.1, 0.9]`.
pub const DEFAULT_INTERIOR: (f64, f64) = (0.1, 0.9);
/// Errors below this are treated as round-off.
pub const SATURATION: f64 = 1e-12;
/// A rate at least `ideal + SUPER_MARGIN` counts as superconvergent.
pub const SUPER_MARGIN: f64 = 0.7;
/// A rate at most `ideal + NORMAL_MARGIN` counts as ordinary.
pub const NORMAL_MARGIN: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateFlag {
    Super,
    Normal,
    Inconclusive,
    Saturated,
}

impl RateFlag {
    pub fn classify(rate: f64, ideal: f64, err_coarse: f64, err_fine: f64) -> Self {
        if err_coarse < SATURATION || err_fine < SATURATION || !rate.is_finite() {
            Self::Saturated
        } else if rate >= ideal + SUPER_MARGIN {
            Self::Super
        } else if rate <= ideal + NORMAL_MARGIN {
            Self::Normal
        } else {
            Self::Inconclusive
        }
    }
}

impl fmt::Display for RateFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Super => "super",
            Self::Normal => "normal",
            Self::Inconclusive => "inconclusive",
            Self::Saturated => "saturated",
        })
    }
}

/// `log(a / b) / log(n_fine / n_coarse)`.
pub fn convergence_rate(err_coarse: f64, err_fine: f64, n_coarse: f64, n_fine: f64) -> f64 {
    (err_coarse / err_fine).ln() / (n_fine / n_coarse).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRecord {
    pub k: usize,
    pub mu: usize,
    pub s: usize,
    pub m: f64,
    pub n_coarse: usize,
    pub n_fine: usize,
    pub err_coarse: f64,
    pub err_fine: f64,
    pub rate: f64,
    pub flag: RateFlag,
}

impl RateRecord {
    pub fn new(k: usize, mu: usize, s: usize, m: f64, n: (usize, usize), err: (f64, f64)) -> Self {
        let rate = convergence_rate(err.0, err.1, n.0 as f64, n.1 as f64);
        let ideal = (k + 1) as f64 - s as f64;
        let flag = RateFlag::classify(rate, ideal, err.0, err.1);
        Self { k, mu, s, m, n_coarse: n.0, n_fine: n.1, err_coarse: err.0, err_fine: err.1, rate, flag }
    }

    /// The optimal global order `k + 1 - s`.
    pub fn ideal(&self) -> f64 {
        (self.k + 1) as f64 - self.s as f64
    }
}

/// Maximum of `|(u - u_h)^(s)|` over the points `((1-m)/2) x_{i-1} + ((1+m)/2) x_i`
/// of the elements lying inside `interior`. Each element is evaluated with
/// its own polynomial piece, so breakpoints get one-sided derivatives.
pub fn interior_max_error(
    problem: &Problem1D,
    sol: &DiscreteSolution1D,
    s: usize,
    m: f64,
    interior: (f64, f64),
) -> Result<f64> {
    if !(-1.0..=1.0).contains(&m) {
        return Err(Error::InvalidArgument(format!("reference coordinate m = {m} outside [-1, 1]")));
    }
    let u = problem.u_exact.as_ref().ok_or(Error::MissingExactSolution)?;
    let bp = sol.space.partition().breakpoints();
    let tol = 1e-12 * (bp[bp.len() - 1] - bp[0]);
    let mut max = None::<f64>;
    for e in 0..sol.space.n_elements() {
        let (xa, xb) = (bp[e], bp[e + 1]);
        if xa < interior.0 - tol || xb > interior.1 + tol {
            continue;
        }
        let x = 0.5 * (1.0 - m) * xa + 0.5 * (1.0 + m) * xb;
        let err = (u(x, s) - sol.eval_on_element(e, x, s)).abs();
        max = Some(max.map_or(err, |v| v.max(err)));
    }
    max.ok_or_else(|| Error::InvalidArgument(format!("no element lies inside [{}, {}]", interior.0, interior.1)))
}

/// Parameters of a rate sweep on uniform partitions of the problem domain.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub k: usize,
    pub mu: usize,
    pub s_list: Vec<usize>,
    pub n_list: Vec<usize>,
    pub m_grid: Vec<f64>,
    pub interior: (f64, f64),
}

/// Records of a sweep plus the refinement levels whose solve failed.
#[derive(Debug, Clone, Default)]
pub struct SweepReport {
    pub records: Vec<RateRecord>,
    pub failures: Vec<(usize, Error)>,
}

/// Reference grid `-1, -1 + step, ..., 1`.
pub fn m_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 2.0) {
        return Err(Error::InvalidArgument(format!("m-grid step {step} must lie in (0, 2]")));
    }
    let n = (2.0 / step).round() as usize;
    if ((n as f64) * step - 2.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("m-grid step {step} does not divide 2")));
    }
    Ok((0..=n).map(|i| if i == n { 1.0 } else { -1.0 + i as f64 * step }).collect())
}

/// Solves on each level of `n_list` and rates every `(s, m)` between
/// consecutive levels. Output is sorted by `(s, m, N)`.
pub fn rate_sweep(problem: &Problem1D, cfg: &SweepConfig) -> Result<SweepReport> {
    if cfg.n_list.len() < 2 {
        return Err(Error::InvalidArgument("a rate sweep needs at least two levels".into()));
    }
    for w in cfg.n_list.windows(2) {
        if w[1] != 2 * w[0] {
            return Err(Error::InvalidArgument(format!("levels must double: {} -> {}", w[0], w[1])));
        }
    }
    for &s in &cfg.s_list {
        if s > cfg.k {
            return Err(Error::InvalidDerivativeOrder { k: cfg.k, s });
        }
    }
    let (a, b) = problem.domain;
    let solutions: Vec<Result<DiscreteSolution1D>> = cfg
        .n_list
        .par_iter()
        .map(|&n| {
            let space = SplineSpace1D::new(Partition1D::uniform(a, b, n)?, cfg.k, cfg.mu)?;
            solve_global(problem, &space)
        })
        .collect();

    let mut report = SweepReport::default();
    for (n, sol) in cfg.n_list.iter().zip(&solutions) {
        if let Err(e) = sol {
            report.failures.push((*n, e.clone()));
        }
    }
    let mut cases = Vec::new();
    for &s in &cfg.s_list {
        for &m in &cfg.m_grid {
            for i in 0..cfg.n_list.len() - 1 {
                cases.push((s, m, i));
            }
        }
    }
    let rows: Vec<Result<Option<RateRecord>>> = cases
        .par_iter()
        .map(|&(s, m, i)| {
            let (Ok(coarse), Ok(fine)) = (&solutions[i], &solutions[i + 1]) else {
                return Ok(None);
            };
            let ec = interior_max_error(problem, coarse, s, m, cfg.interior)?;
            let ef = interior_max_error(problem, fine, s, m, cfg.interior)?;
            Ok(Some(RateRecord::new(cfg.k, cfg.mu, s, m, (cfg.n_list[i], cfg.n_list[i + 1]), (ec, ef))))
        })
        .collect();
    for row in rows {
        if let Some(r) = row? {
            report.records.push(r);
        }
    }
    report.records.sort_by(|x, y| {
        x.s.cmp(&y.s).then(x.m.total_cmp(&y.m)).then(x.n_coarse.cmp(&y.n_coarse))
    });
    Ok(report)
}

pub const RATE_CSV_HEADER: &str = "k,mu,s,m,N_coarse,N_fine,err_coarse,err_fine,rate,flag";

/// CSV with 17 significant digits per float.
pub fn write_rates_csv<W: Write>(mut w: W, records: &[RateRecord]) -> io::Result<()> {
    writeln!(w, "{RATE_CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{:.16e},{},{},{:.16e},{:.16e},{:.16e},{}",
            r.k, r.mu, r.s, r.m, r.n_coarse, r.n_fine, r.err_coarse, r.err_fine, r.rate, r.flag
        )?;
    }
    Ok(())
}

/// Coefficients `c_j = (e, L_j) / (L_j, L_j)`, `j = 0..=max_degree`, of the
/// error `e = u - u_h` on element `e` mapped to [-1, 1].
pub fn error_legendre_coeffs(
    problem: &Problem1D,
    sol: &DiscreteSolution1D,
    element: usize,
    max_degree: usize,
) -> Result<Vec<f64>> {
    let u = problem.u_exact.as_ref().ok_or(Error::MissingExactSolution)?;
    if element >= sol.space.n_elements() {
        return Err(Error::InvalidArgument(format!("element {element} out of range")));
    }
    let k = sol.space.k();
    let rule = GaussRule::new((2 * k + 6).max(max_degree + 4));
    let bp = sol.space.partition().breakpoints();
    let (xa, xb) = (bp[element], bp[element + 1]);
    let mut c = vec![0.0; max_degree + 1];
    for (t, w) in rule.nodes.iter().zip(&rule.weights) {
        let x = 0.5 * (1.0 - t) * xa + 0.5 * (1.0 + t) * xb;
        let e = u(x, 0) - sol.eval_on_element(element, x, 0);
        for (j, l) in legendre_values(max_degree, *t).into_iter().enumerate() {
            c[j] += w * e * l;
        }
    }
    for (j, cj) in c.iter_mut().enumerate() {
        *cj *= (2 * j + 1) as f64 / 2.0;
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(problem: &Problem1D, n: usize, k: usize, mu: usize) -> DiscreteSolution1D {
        let space = SplineSpace1D::new(Partition1D::uniform(0.0, 1.0, n).unwrap(), k, mu).unwrap();
        solve_global(problem, &space).unwrap()
    }

    #[test]
    fn flags() {
        assert_eq!(RateFlag::classify(4.8, 4.0, 1e-5, 1e-7), RateFlag::Super);
        assert_eq!(RateFlag::classify(4.2, 4.0, 1e-5, 1e-7), RateFlag::Normal);
        assert_eq!(RateFlag::classify(4.5, 4.0, 1e-5, 1e-7), RateFlag::Inconclusive);
        assert_eq!(RateFlag::classify(9.0, 4.0, 1e-5, 1e-13), RateFlag::Saturated);
    }

    #[test]
    fn rate_formula() {
        let r = RateRecord::new(3, 2, 0, 0.0, (60, 120), (1.6e-5, 1e-6));
        assert!((r.rate - 4.0).abs() < 1e-12);
        assert_eq!(r.ideal(), 4.0);
    }

    #[test]
    fn grid() {
        let g = m_grid(0.5).unwrap();
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(m_grid(0.01).unwrap().len(), 201);
        assert!(m_grid(0.3).is_err());
        assert!(m_grid(0.0).is_err());
    }

    #[test]
    fn reproduced_solution_has_tiny_error() {
        let p = Problem1D::poly(3).unwrap();
        let sol = solve(&p, 10, 3, 2);
        for s in 0..3 {
            for m in [-1.0, -0.3, 0.0, 0.8, 1.0] {
                assert!(interior_max_error(&p, &sol, s, m, DEFAULT_INTERIOR).unwrap() < 1e-9);
            }
        }
        let c = error_legendre_coeffs(&p, &sol, 4, 4).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn empty_interior_is_rejected() {
        let p = Problem1D::sin1d();
        let sol = solve(&p, 4, 2, 1);
        assert!(interior_max_error(&p, &sol, 0, 0.0, (0.1, 0.2)).is_err());
    }

    #[test]
    fn legendre_coefficients_of_known_error() {
        // u_h = 0 on one element, u = x^2 on [0, 1]: t = 2x - 1, x^2 = (t+1)^2/4
        // = (1/3 + ...) so c_0 = 1/3, c_1 = 1/2, c_2 = 1/6.
        let p = Problem1D::from_exact(
            |x, s| match s {
                0 => x * x,
                1 => 2.0 * x,
                2 => 2.0,
                _ => 0.0,
            },
            (0.0, 1.0),
        );
        let space = SplineSpace1D::new(Partition1D::uniform(0.0, 1.0, 1).unwrap(), 2, 1).unwrap();
        let zero = DiscreteSolution1D::new(space, vec![0.0; 3]).unwrap();
        let c = error_legendre_coeffs(&p, &zero, 0, 3).unwrap();
        let expect = [1.0 / 3.0, 0.5, 1.0 / 6.0, 0.0];
        for (a, b) in c.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn csv_layout() {
        let r = RateRecord::new(3, 2, 1, 0.25, (60, 120), (1e-4, 1.25e-5));
        let mut out = Vec::new();
        write_rates_csv(&mut out, &[r]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], RATE_CSV_HEADER);
        assert!(lines[1].starts_with("3,2,1,2.5000000000000000e-1,60,120,"));
        assert!(lines[1].ends_with(",normal"));
    }
}
