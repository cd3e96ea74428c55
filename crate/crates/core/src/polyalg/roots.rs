//! Real roots of a Legendre series on [-1, 1].
//!
//! The roots at 0 and +-1 are tested and divided out exactly, the remainder
//! is reduced to its squarefree part with an exact gcd, and only then is
//! anything rounded. Remaining roots are bracketed on a fine grid, bisected,
//! and polished with Newton's method. For polynomials with definite parity
//! only [0, 1] is searched and the result mirrored, so the output is exactly
//! symmetric.

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::legendre::legendre_series_eval;
use super::series::{LegendreCoeffs, Parity};
use crate::error::{Error, Result};

const GRID_STEP: f64 = 1e-3;
const BISECTION_TOL: f64 = 1e-13;
const MAX_BISECTIONS: usize = 80;
const MAX_NEWTON: usize = 50;

/// Sorted, distinct real roots of `p` in [-1, 1].
pub fn roots_in_interval(p: &LegendreCoeffs) -> Result<Vec<f64>> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let parity = p.parity();
    let mut mono = p.to_monomial();
    let mut known = Vec::new();
    for (r, value) in [(BigRational::zero(), 0.0), (BigRational::one(), 1.0), (-BigRational::one(), -1.0)] {
        if horner(&mono, &r).is_zero() {
            known.push(value);
            while mono.len() > 1 && horner(&mono, &r).is_zero() {
                mono = deflate(&mono, &r);
            }
        }
    }

    let rest = squarefree(&mono);
    let mut roots = known;
    if rest.len() > 1 {
        let q = LegendreCoeffs::from_monomial(&rest);
        roots.extend(isolate(&q, parity)?);
    }
    roots.sort_by(|a, b| a.partial_cmp(b).expect("roots are finite"));
    roots.dedup();
    Ok(roots)
}

fn horner(mono: &[BigRational], x: &BigRational) -> BigRational {
    mono.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
}

/// Quotient of `mono` by `(x - r)`; the remainder is discarded.
fn deflate(mono: &[BigRational], r: &BigRational) -> Vec<BigRational> {
    let n = mono.len();
    let mut out = vec![BigRational::zero(); n - 1];
    let mut carry = BigRational::zero();
    for i in (1..n).rev() {
        carry = &mono[i] + carry * r;
        out[i - 1] = carry.clone();
    }
    out
}

fn trim(mut v: Vec<BigRational>) -> Vec<BigRational> {
    while v.last().is_some_and(Zero::is_zero) {
        v.pop();
    }
    v
}

fn make_monic(v: Vec<BigRational>) -> Vec<BigRational> {
    let v = trim(v);
    match v.last() {
        Some(lead) => {
            let lead = lead.clone();
            v.into_iter().map(|c| c / &lead).collect()
        }
        None => v,
    }
}

fn poly_rem(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut r = trim(a.to_vec());
    let db = b.len() - 1;
    let lead = &b[db];
    while r.len() > db {
        let dr = r.len() - 1;
        let factor = &r[dr] / lead;
        for (i, bi) in b.iter().enumerate() {
            r[dr - db + i] -= &factor * bi;
        }
        r = trim(r);
    }
    r
}

fn poly_div(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut r = trim(a.to_vec());
    let db = b.len() - 1;
    if r.len() <= db {
        return vec![BigRational::zero()];
    }
    let mut q = vec![BigRational::zero(); r.len() - db];
    let lead = &b[db];
    while r.len() > db {
        let dr = r.len() - 1;
        let factor = &r[dr] / lead;
        for (i, bi) in b.iter().enumerate() {
            r[dr - db + i] -= &factor * bi;
        }
        q[dr - db] = factor;
        r = trim(r);
    }
    q
}

fn poly_gcd(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut x = make_monic(a.to_vec());
    let mut y = make_monic(b.to_vec());
    while !y.is_empty() {
        let r = make_monic(poly_rem(&x, &y));
        x = y;
        y = r;
    }
    x
}

fn squarefree(mono: &[BigRational]) -> Vec<BigRational> {
    let mono = trim(mono.to_vec());
    if mono.len() <= 2 {
        return mono;
    }
    let deriv: Vec<BigRational> = mono
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * BigRational::from_integer(i.into()))
        .collect();
    let g = poly_gcd(&mono, &deriv);
    if g.len() <= 1 {
        mono
    } else {
        poly_div(&mono, &g)
    }
}

/// Roots of a squarefree `q` in the open interval (-1, 1) with 0 excluded
/// whenever `q` was deflated by it.
fn isolate(q: &LegendreCoeffs, parity: Parity) -> Result<Vec<f64>> {
    let mut coeffs = q.to_f64();
    let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if scale > 0.0 {
        coeffs.iter_mut().for_each(|c| *c /= scale);
    }
    let mut dcoeffs = q.derivative().to_f64();
    if scale > 0.0 {
        dcoeffs.iter_mut().for_each(|c| *c /= scale);
    }
    let f = |x: f64| legendre_series_eval(&coeffs, x);
    let df = |x: f64| legendre_series_eval(&dcoeffs, x);

    let symmetric = parity != Parity::Mixed;
    let (lo, hi) = if symmetric { (0.0, 1.0) } else { (-1.0, 1.0) };
    let steps = ((hi - lo) / GRID_STEP).round() as usize;
    let mut found = Vec::new();
    let mut prev_x = lo;
    let mut prev_v = f(lo);
    for i in 1..=steps {
        let x = if i == steps { hi } else { lo + i as f64 * GRID_STEP };
        let v = f(x);
        if v == 0.0 {
            found.push(x);
        } else if prev_v != 0.0 && prev_v.signum() != v.signum() {
            found.push(refine(&f, &df, prev_x, x, prev_v)?);
        }
        prev_x = x;
        prev_v = v;
    }
    // The grid endpoints are never roots of the deflated polynomial except
    // in degenerate round-off cases; drop anything that landed on them.
    found.retain(|&x| x > -1.0 && x < 1.0 && !(symmetric && x == 0.0));
    if symmetric {
        let mirrored: Vec<f64> = found.iter().map(|x| -x).collect();
        found.extend(mirrored);
    }
    Ok(found)
}

fn refine(f: &impl Fn(f64) -> f64, df: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, fa: f64) -> Result<f64> {
    let mut sign_a = fa.signum();
    for _ in 0..MAX_BISECTIONS {
        if b - a <= BISECTION_TOL {
            break;
        }
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == sign_a {
            a = mid;
            sign_a = fm.signum();
        } else {
            b = mid;
        }
    }
    if b - a > 1e-12 {
        return Err(Error::RootRefinement { near: 0.5 * (a + b) });
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..MAX_NEWTON {
        let d = df(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let step = f(x) / d;
        let next = x - step;
        if !(a - 1e-12..=b + 1e-12).contains(&next) {
            break;
        }
        x = next;
        if step.abs() <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}
