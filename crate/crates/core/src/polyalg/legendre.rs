//! Floating-point Legendre evaluation on [-1, 1].
//!
//! Values come from the three-term recurrence
//!
//! ```text
//! (n+1) L_{n+1}(x) = (2n+1) x L_n(x) - n L_{n-1}(x)
//! ```
//!
//! and derivatives from the same recurrence differentiated `s` times:
//!
//! ```text
//! (n+1) L_{n+1}^{(s)} = (2n+1) (x L_n^{(s)} + s L_n^{(s-1)}) - n L_{n-1}^{(s)}
//! ```

/// `L_j^{(s)}(x)`. Never expands to monomials.
pub fn legendre_eval(j: usize, s: usize, x: f64) -> f64 {
    if s > j {
        return 0.0;
    }
    // prev[d] = L_{n-1}^{(d)}, curr[d] = L_n^{(d)} for d = 0..=s
    let mut prev = vec![0.0; s + 1];
    let mut curr = vec![0.0; s + 1];
    curr[0] = 1.0;
    for n in 0..j {
        let nf = n as f64;
        let mut next = vec![0.0; s + 1];
        for d in 0..=s {
            let lower = if d > 0 { d as f64 * curr[d - 1] } else { 0.0 };
            next[d] = ((2.0 * nf + 1.0) * (x * curr[d] + lower) - nf * prev[d]) / (nf + 1.0);
        }
        prev = curr;
        curr = next;
    }
    curr[s]
}

/// All values `L_0(x), ..., L_n(x)`.
pub fn legendre_values(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n == 0 {
        return out;
    }
    out.push(x);
    for j in 1..n {
        let jf = j as f64;
        let v = ((2.0 * jf + 1.0) * x * out[j] - jf * out[j - 1]) / (jf + 1.0);
        out.push(v);
    }
    out
}

/// Evaluates `sum_j c_j L_j(x)` by forward recurrence.
pub fn legendre_series_eval(coeffs: &[f64], x: f64) -> f64 {
    if coeffs.is_empty() {
        return 0.0;
    }
    let values = legendre_values(coeffs.len() - 1, x);
    coeffs.iter().zip(values).map(|(c, l)| c * l).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_values() {
        for j in 0..12 {
            assert!((legendre_eval(j, 0, 1.0) - 1.0).abs() < 1e-14);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            assert!((legendre_eval(j, 0, -1.0) - sign).abs() < 1e-14);
        }
        assert_eq!(legendre_eval(5, 0, 1.0), 1.0);
    }

    #[test]
    fn low_degree_closed_forms() {
        assert_eq!(legendre_eval(1, 0, 0.25), 0.25);
        // -37/128, from the Rodrigues formula
        assert!((legendre_eval(4, 0, 0.5) + 0.2890625).abs() < 1e-15);
        // L_3 = (5x^3 - 3x)/2, L_3' = (15x^2 - 3)/2, L_3'' = 15x, L_3''' = 15
        let x = 0.3;
        assert!((legendre_eval(3, 1, x) - (15.0 * x * x - 3.0) / 2.0).abs() < 1e-14);
        assert!((legendre_eval(3, 2, x) - 15.0 * x).abs() < 1e-14);
        assert!((legendre_eval(3, 3, x) - 15.0).abs() < 1e-13);
        assert_eq!(legendre_eval(3, 4, x), 0.0);
    }

    #[test]
    fn derivative_endpoint_formula() {
        // L_n'(1) = n(n+1)/2
        for n in 1..10 {
            let expect = (n * (n + 1)) as f64 / 2.0;
            assert!((legendre_eval(n, 1, 1.0) - expect).abs() < 1e-11);
        }
    }

    #[test]
    fn reflection_symmetry() {
        for j in 0..9 {
            for s in 0..=j {
                for &x in &[0.1, 0.37, 0.8] {
                    let sign = if (j - s) % 2 == 0 { 1.0 } else { -1.0 };
                    let a = legendre_eval(j, s, -x);
                    let b = sign * legendre_eval(j, s, x);
                    assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()));
                }
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let step = 1e-5;
        for j in 1..8 {
            for s in 1..=j.min(3) {
                let x = 0.21;
                let fd = (legendre_eval(j, s - 1, x + step) - legendre_eval(j, s - 1, x - step))
                    / (2.0 * step);
                let exact = legendre_eval(j, s, x);
                assert!((fd - exact).abs() < 1e-6 * (1.0 + exact.abs()), "j={j} s={s}");
            }
        }
    }
}
