//! Superconvergence points on the reference element and the predicted
//! exponent at a local symmetric center.

use std::fmt;

use super::roots::roots_in_interval;
use super::series::f_power_l1;
use crate::error::{Error, Result};

/// Largest supported transform power `k - s`.
pub const DEGREE_CAP: usize = 32;

/// Points of `e^(s)` on the reference element [-1, 1] for degree `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperconvergencePointSet {
    pub k: usize,
    pub s: usize,
    pub points: Vec<f64>,
    /// The positive root when `k - s` is odd.
    pub a_value: Option<f64>,
}

impl SuperconvergencePointSet {
    pub fn order(&self) -> usize {
        self.k - self.s
    }

    /// Distance from `m` to the nearest point of the set.
    pub fn distance(&self, m: f64) -> f64 {
        self.points.iter().map(|p| (p - m).abs()).fold(f64::INFINITY, f64::min)
    }

    /// Table-style text with 8 decimals: `±0.57735027`, `-1, 0, 1` or `0`.
    pub fn format_table(&self) -> String {
        match self.a_value {
            Some(a) => format!("±{a:.8}"),
            None => self.points.iter().map(|p| format_point(*p)).collect::<Vec<_>>().join(", "),
        }
    }
}

fn format_point(p: f64) -> String {
    if p == p.trunc() {
        format!("{}", p as i64)
    } else {
        format!("{p:.8}")
    }
}

impl fmt::Display for SuperconvergencePointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.format_table())
    }
}

/// Zeros of `F^(k-s)(L_1)` in [-1, 1].
///
/// For odd `k` and `s = 0` the leading `L_0` term of the error need not
/// cancel, so that case is only served when `assume_mean_cancellation` is set.
pub fn superconv_points(k: usize, s: usize, assume_mean_cancellation: bool) -> Result<SuperconvergencePointSet> {
    if k < 2 {
        return Err(Error::InvalidDegree { k, min: 2 });
    }
    if s > k {
        return Err(Error::InvalidDerivativeOrder { k, s });
    }
    if k % 2 == 1 && s == 0 && !assume_mean_cancellation {
        return Err(Error::MeanCancellationRequired { k });
    }
    let m = k - s;
    if m > DEGREE_CAP {
        return Err(Error::DegreeCap { m, cap: DEGREE_CAP });
    }
    let (points, a_value) = if m == 0 {
        (vec![0.0], None)
    } else if m % 2 == 0 {
        (vec![-1.0, 0.0, 1.0], None)
    } else {
        let roots = roots_in_interval(&f_power_l1(m))?;
        let a = roots.last().copied().ok_or(Error::RootRefinement { near: 0.5 })?;
        (vec![-a, a], Some(a))
    };
    Ok(SuperconvergencePointSet { k, s, points, a_value })
}

/// `k + 1 - s + min(sigma, (k-1)(1 - (2k-2+n)/(2k-2) sigma))`.
pub fn predicted_superconv_exponent(k: usize, s: usize, sigma: f64, n: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidDegree { k, min: 2 });
    }
    if s > k {
        return Err(Error::InvalidDerivativeOrder { k, s });
    }
    if !(1..=3).contains(&n) {
        return Err(Error::InvalidDimension(n));
    }
    if (k - s) % 2 == 1 {
        return Err(Error::OddParity { k, s });
    }
    let base = (2 * k - 2) as f64;
    let upper = base / (base + n as f64);
    if !(sigma > 0.0 && sigma < upper) {
        return Err(Error::SigmaOutOfRange { sigma, upper });
    }
    let kf = k as f64;
    let gain = sigma.min((kf - 1.0) * (1.0 - (base + n as f64) / base * sigma));
    Ok(kf + 1.0 - s as f64 + gain)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_entries() {
        let p = superconv_points(2, 1, false).unwrap();
        assert!((p.a_value.unwrap() - 0.57735027).abs() < 1e-8);
        assert_eq!(p.format_table(), "±0.57735027");
        let p = superconv_points(5, 0, true).unwrap();
        assert_eq!(p.format_table(), "±0.50491857");
        let p = superconv_points(4, 0, false).unwrap();
        assert_eq!(p.points, vec![-1.0, 0.0, 1.0]);
        assert_eq!(p.format_table(), "-1, 0, 1");
        assert_eq!(superconv_points(2, 2, false).unwrap().format_table(), "0");
    }

    #[test]
    fn argument_checks() {
        assert_eq!(superconv_points(1, 0, false), Err(Error::InvalidDegree { k: 1, min: 2 }));
        assert_eq!(superconv_points(3, 4, false), Err(Error::InvalidDerivativeOrder { k: 3, s: 4 }));
        assert_eq!(superconv_points(3, 0, false), Err(Error::MeanCancellationRequired { k: 3 }));
        assert_eq!(superconv_points(40, 1, false), Err(Error::DegreeCap { m: 39, cap: 32 }));
        assert!(superconv_points(34, 2, false).is_ok());
    }

    #[test]
    fn exponent_examples() {
        assert!((predicted_superconv_exponent(2, 0, 0.4, 1).unwrap() - 3.4).abs() < 1e-12);
        let near_zero = predicted_superconv_exponent(3, 1, 1e-9, 1).unwrap();
        assert!((near_zero - 3.0).abs() < 1e-8);
        let v = predicted_superconv_exponent(2, 0, 0.49, 2).unwrap();
        assert!((v - 3.02).abs() < 1e-12);
        assert!(matches!(predicted_superconv_exponent(2, 0, 0.5, 2), Err(Error::SigmaOutOfRange { .. })));
        assert!(matches!(predicted_superconv_exponent(2, 0, 0.0, 1), Err(Error::SigmaOutOfRange { .. })));
        assert_eq!(predicted_superconv_exponent(3, 0, 0.2, 1), Err(Error::OddParity { k: 3, s: 0 }));
        assert_eq!(predicted_superconv_exponent(2, 0, 0.2, 4), Err(Error::InvalidDimension(4)));
    }
}
