//! Partitions, open knot vectors and B-spline evaluation for the spline
//! space of degree `k` and smoothness `C^mu`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Which one-sided limit to take at a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Strictly increasing breakpoints `x_0 < ... < x_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition1D {
    breakpoints: Vec<f64>,
}

impl Partition1D {
    pub fn new(breakpoints: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidPartition("need at least two breakpoints".into()));
        }
        if breakpoints.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidPartition("breakpoints must be finite".into()));
        }
        if let Some(w) = breakpoints.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPartition(format!(
                "breakpoints must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self { breakpoints })
    }

    /// `n` equal elements on `[a, b]`.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPartition("need at least one element".into()));
        }
        let h = (b - a) / n as f64;
        let mut bp: Vec<f64> = (0..=n).map(|i| a + i as f64 * h).collect();
        bp[n] = b;
        Self::new(bp)
    }

    /// Splits every element in half.
    pub fn refine(&self) -> Self {
        let mut bp = Vec::with_capacity(2 * self.breakpoints.len() - 1);
        for w in self.breakpoints.windows(2) {
            bp.push(w[0]);
            bp.push(0.5 * (w[0] + w[1]));
        }
        bp.push(self.b());
        Self { breakpoints: bp }
    }

    /// Moves every interior breakpoint by a seeded uniform offset of at most
    /// `rho` times the smaller adjacent element length. Requires `rho < 0.5`.
    pub fn perturbed(&self, rho: f64, seed: u64) -> Result<Self> {
        if !(0.0..0.5).contains(&rho) {
            return Err(Error::InvalidArgument(format!("perturbation rho = {rho} must lie in [0, 0.5)")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bp = &self.breakpoints;
        let mut out = bp.clone();
        for i in 1..bp.len() - 1 {
            let h = (bp[i] - bp[i - 1]).min(bp[i + 1] - bp[i]);
            let t: f64 = rng.gen_range(-1.0..=1.0);
            out[i] = bp[i] + rho * h * t;
        }
        Self::new(out)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn n_elements(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn a(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn b(&self) -> f64 {
        *self.breakpoints.last().expect("partition is nonempty")
    }

    /// Length of element `i`.
    pub fn h_i(&self, i: usize) -> f64 {
        self.breakpoints[i + 1] - self.breakpoints[i]
    }

    /// Smallest element length.
    pub fn h(&self) -> f64 {
        (0..self.n_elements()).map(|i| self.h_i(i)).fold(f64::INFINITY, f64::min)
    }

    pub fn h_max(&self) -> f64 {
        (0..self.n_elements()).map(|i| self.h_i(i)).fold(0.0, f64::max)
    }

    /// `max h_i / min h_i`.
    pub fn quasi_uniformity(&self) -> f64 {
        self.h_max() / self.h()
    }

    /// Element containing `x`, taking the right limit at interior breakpoints
    /// and the last element at `b`.
    pub fn element_of(&self, x: f64) -> Result<usize> {
        let (a, b) = (self.a(), self.b());
        if !(x >= a && x <= b) {
            return Err(Error::OutOfDomain { x, a, b });
        }
        let idx = self.breakpoints.partition_point(|&p| p <= x);
        Ok(idx.saturating_sub(1).min(self.n_elements() - 1))
    }

    /// Index `i` with `x == x_i` when `x` is an interior breakpoint.
    pub fn interior_breakpoint_index(&self, x: f64) -> Option<usize> {
        let n = self.n_elements();
        self.breakpoints[1..n].binary_search_by(|p| p.total_cmp(&x)).ok().map(|i| i + 1)
    }

    /// One breakpoint per line with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for x in &self.breakpoints {
            s.push_str(&format!("{x:.16e}\n"));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut bp = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: f64 = line
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}: {line:?}", n + 1)))?;
            bp.push(v);
        }
        Self::new(bp)
    }
}

/// The spline space on a partition: degree `k`, continuity `C^mu`, built on
/// an open knot vector with interior multiplicity `k - mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineSpace1D {
    partition: Partition1D,
    k: usize,
    mu: usize,
    knots: Vec<f64>,
}

impl SplineSpace1D {
    pub fn new(partition: Partition1D, k: usize, mu: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDegree { k, min: 1 });
        }
        if mu >= k {
            return Err(Error::InvalidSmoothness { k, mu });
        }
        let r = k - mu;
        let bp = partition.breakpoints();
        let mut knots = Vec::with_capacity(2 * (k + 1) + (bp.len() - 2) * r);
        knots.extend(std::iter::repeat(bp[0]).take(k + 1));
        for &x in &bp[1..bp.len() - 1] {
            knots.extend(std::iter::repeat(x).take(r));
        }
        knots.extend(std::iter::repeat(partition.b()).take(k + 1));
        Ok(Self { partition, k, mu, knots })
    }

    pub fn partition(&self) -> &Partition1D {
        &self.partition
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// `N (k - mu) + mu + 1`.
    pub fn dim(&self) -> usize {
        self.knots.len() - self.k - 1
    }

    pub fn n_elements(&self) -> usize {
        self.partition.n_elements()
    }

    /// Index of the first of the `k + 1` basis functions active on element `e`.
    pub fn first_active(&self, e: usize) -> usize {
        e * (self.k - self.mu)
    }

    /// Derivatives of orders `0..=n` of the `k + 1` basis functions active on
    /// element `e`, evaluated with the polynomial piece of that element.
    /// `out[d][j]` belongs to basis function `first_active(e) + j`.
    pub fn ders_on_element(&self, e: usize, x: f64, n: usize) -> Vec<Vec<f64>> {
        let p = self.k;
        let span = p + e * (p - self.mu);
        let u = &self.knots;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = x - u[span + 1 - j];
            right[j] = u[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let mut ders = vec![vec![0.0; p + 1]; n + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let nn = n.min(p);
        let mut a = vec![vec![0.0; p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=nn {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    let rk = rk as usize;
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                    d = a[s2][0] * ndu[rk][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if r as isize - 1 <= pk as isize { k - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = p as f64;
        for (k, row) in ders.iter_mut().enumerate().take(nn + 1).skip(1) {
            row.iter_mut().for_each(|v| *v *= factor);
            factor *= (p - k) as f64;
        }
        ders
    }

    /// `s`-th derivatives of the active basis functions on element `e`.
    pub fn basis_eval_on_element(&self, e: usize, x: f64, s: usize) -> Vec<f64> {
        self.ders_on_element(e, x, s).swap_remove(s)
    }

    /// Element used to evaluate an `s`-th derivative at `x`.
    ///
    /// Breakpoints default to the right limit (the left limit at `b`); above
    /// the smoothness order an explicit side is required.
    pub fn element_for(&self, x: f64, s: usize, side: Option<Side>) -> Result<usize> {
        let e = self.partition.element_of(x)?;
        match self.partition.interior_breakpoint_index(x) {
            Some(i) => match side {
                Some(Side::Left) => Ok(i - 1),
                Some(Side::Right) => Ok(i),
                None if s > self.mu => Err(Error::AmbiguousSide { x, s, mu: self.mu }),
                None => Ok(i),
            },
            None => Ok(e),
        }
    }

    /// First active index and the `s`-th derivatives of the `k + 1` active
    /// basis functions at `x`.
    pub fn basis_eval(&self, x: f64, s: usize, side: Option<Side>) -> Result<(usize, Vec<f64>)> {
        let e = self.element_for(x, s, side)?;
        Ok((self.first_active(e), self.basis_eval_on_element(e, x, s)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(n: usize, k: usize, mu: usize) -> SplineSpace1D {
        SplineSpace1D::new(Partition1D::uniform(0.0, 1.0, n).unwrap(), k, mu).unwrap()
    }

    #[test]
    fn dimensions() {
        assert_eq!(space(4, 3, 2).dim(), 7);
        assert_eq!(space(4, 3, 0).dim(), 13);
        assert_eq!(space(1, 2, 1).dim(), 3);
    }

    #[test]
    fn rejects_bad_smoothness() {
        let p = Partition1D::uniform(0.0, 1.0, 3).unwrap();
        assert_eq!(SplineSpace1D::new(p, 2, 2), Err(Error::InvalidSmoothness { k: 2, mu: 2 }));
    }

    #[test]
    fn partition_validation() {
        assert!(Partition1D::new(vec![0.0]).is_err());
        assert!(Partition1D::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(Partition1D::uniform(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn linear_hats() {
        let (first, v) = space(2, 1, 0).basis_eval(0.25, 0, None).unwrap();
        assert_eq!(first, 0);
        assert!((v[0] - 0.5).abs() < 1e-15 && (v[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn partition_of_unity_and_derivative_sum() {
        for (k, mu) in [(1, 0), (2, 1), (3, 0), (3, 1), (3, 2), (4, 3), (5, 2)] {
            let sp = space(5, k, mu);
            for i in 0..=100 {
                let x = i as f64 / 100.0;
                let (_, v) = sp.basis_eval(x, 0, None).unwrap();
                assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-13);
                let (_, d) = sp.basis_eval(x, 1, Some(Side::Right)).unwrap();
                assert!(d.iter().sum::<f64>().abs() < 1e-10);
            }
        }
    }

    fn global_values(sp: &SplineSpace1D, x: f64, s: usize) -> Vec<f64> {
        let (first, v) = sp.basis_eval(x, s, Some(Side::Right)).unwrap();
        let mut out = vec![0.0; sp.dim()];
        out[first..first + v.len()].copy_from_slice(&v);
        out
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let sp = space(2, 2, 1);
        let step = 1e-6;
        let d = global_values(&sp, 0.5, 1);
        let p = global_values(&sp, 0.5 + step, 0);
        let m = global_values(&sp, 0.5 - step, 0);
        for j in 0..sp.dim() {
            let fd = (p[j] - m[j]) / (2.0 * step);
            assert!((fd - d[j]).abs() < 1e-5, "j={j}: {fd} vs {}", d[j]);
        }
    }

    #[test]
    fn smoothness_across_breakpoints() {
        for (k, mu) in [(2, 1), (3, 1), (3, 2), (4, 3), (4, 1)] {
            let sp = space(4, k, mu);
            let x = 0.5;
            let e = 2;
            for s in 0..=mu {
                let right = sp.basis_eval_on_element(e, x, s);
                let left = sp.basis_eval_on_element(e - 1, x, s);
                let shift = k - mu;
                let first_r = sp.first_active(e);
                let first_l = sp.first_active(e - 1);
                assert_eq!(first_r - first_l, shift);
                for g in first_l..=first_r + k {
                    let l = if g >= first_l && g <= first_l + k { left[g - first_l] } else { 0.0 };
                    let r = if g >= first_r && g <= first_r + k { right[g - first_r] } else { 0.0 };
                    assert!((l - r).abs() < 1e-10 * (1.0 + l.abs()), "k={k} mu={mu} s={s} g={g}");
                }
            }
        }
    }

    #[test]
    fn side_rules_at_breakpoints() {
        let sp = space(4, 3, 1);
        assert!(matches!(sp.basis_eval(0.5, 2, None), Err(Error::AmbiguousSide { .. })));
        assert_eq!(sp.element_for(0.5, 1, None).unwrap(), 2);
        assert_eq!(sp.element_for(0.5, 2, Some(Side::Left)).unwrap(), 1);
        assert_eq!(sp.element_for(1.0, 3, None).unwrap(), 3);
        assert!(matches!(sp.basis_eval(1.5, 0, None), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn refine_and_perturb() {
        let p = Partition1D::uniform(0.0, 1.0, 4).unwrap();
        assert_eq!(p.refine().n_elements(), 8);
        let q = p.perturbed(0.3, 11).unwrap();
        assert_eq!(q, p.perturbed(0.3, 11).unwrap());
        assert_ne!(q, p);
        assert!(q.quasi_uniformity() < (1.0 + 0.3) / (1.0 - 0.6));
        assert!(p.perturbed(0.6, 1).is_err());
    }

    #[test]
    fn text_round_trip() {
        let p = Partition1D::uniform(0.0, 1.0, 7).unwrap().perturbed(0.2, 3).unwrap();
        assert_eq!(Partition1D::from_text(&p.to_text()).unwrap(), p);
        assert!(Partition1D::from_text("0\nabc\n").is_err());
    }
}
