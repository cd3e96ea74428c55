//! Model problems `-u'' = f` and `-Laplace u = f` with closed-form solutions.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// `(x, s) -> u^(s)(x)`.
pub type Exact1D = Arc<dyn Fn(f64, usize) -> f64 + Send + Sync>;
/// `(x, y, a, b) -> d^a/dx^a d^b/dy^b u(x, y)`.
pub type Exact2D = Arc<dyn Fn(f64, f64, usize, usize) -> f64 + Send + Sync>;

/// `-u'' = f` on `[a, b]` with `u(a) = u(b) = 0`.
#[derive(Clone)]
pub struct Problem1D {
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub u_exact: Option<Exact1D>,
    pub domain: (f64, f64),
    /// Point sources `(x, w)` adding `w delta_x` to `f`. A spline whose first
    /// derivative jumps at `x` needs one to be an exact solution.
    pub point_loads: Vec<(f64, f64)>,
}

impl fmt::Debug for Problem1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem1D")
            .field("domain", &self.domain)
            .field("has_exact", &self.u_exact.is_some())
            .field("point_loads", &self.point_loads)
            .finish()
    }
}

impl Problem1D {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, domain: (f64, f64)) -> Self {
        Self { f: Arc::new(f), u_exact: None, domain, point_loads: Vec::new() }
    }

    /// Problem whose source is `-u''` taken from `u`.
    pub fn from_exact(u: impl Fn(f64, usize) -> f64 + Send + Sync + 'static, domain: (f64, f64)) -> Self {
        let u: Exact1D = Arc::new(u);
        let g = u.clone();
        Self { f: Arc::new(move |x| -g(x, 2)), u_exact: Some(u), domain, point_loads: Vec::new() }
    }

    /// `u = sin(pi x)` on [0, 1].
    pub fn sin1d() -> Self {
        Self::from_exact(|x, s| PI.powi(s as i32) * (PI * x + s as f64 * PI / 2.0).sin(), (0.0, 1.0))
    }

    /// `u = x (1 - x) (x + 1/2)^(k-2)` on [0, 1], a degree-`k` polynomial.
    pub fn poly(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument(format!("poly:{k} needs k >= 2")));
        }
        let mut c = vec![0.0, 1.0, -1.0];
        for _ in 2..k {
            // multiply by (x + 1/2)
            let mut next = vec![0.0; c.len() + 1];
            for (i, v) in c.iter().enumerate() {
                next[i] += 0.5 * v;
                next[i + 1] += v;
            }
            c = next;
        }
        let p = Polynomial::new(c);
        Ok(Self::from_exact(move |x, s| p.eval(x, s), (0.0, 1.0)))
    }

    pub fn exact(&self, x: f64, s: usize) -> Result<f64> {
        self.u_exact.as_ref().map(|u| u(x, s)).ok_or(Error::MissingExactSolution)
    }
}

/// `-Laplace u = f` on a rectangle with homogeneous Dirichlet data.
#[derive(Clone)]
pub struct Problem2D {
    pub f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub u_exact: Option<Exact2D>,
    pub domain: [(f64, f64); 2],
}

impl fmt::Debug for Problem2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem2D")
            .field("domain", &self.domain)
            .field("has_exact", &self.u_exact.is_some())
            .finish()
    }
}

impl Problem2D {
    pub fn from_exact(
        u: impl Fn(f64, f64, usize, usize) -> f64 + Send + Sync + 'static,
        domain: [(f64, f64); 2],
    ) -> Self {
        let u: Exact2D = Arc::new(u);
        let g = u.clone();
        Self { f: Arc::new(move |x, y| -g(x, y, 2, 0) - g(x, y, 0, 2)), u_exact: Some(u), domain }
    }

    /// `u = sin(pi x) sin(pi y)` on the unit square.
    pub fn sin2d() -> Self {
        let d = |t: f64, s: usize| PI.powi(s as i32) * (PI * t + s as f64 * PI / 2.0).sin();
        Self::from_exact(move |x, y, a, b| d(x, a) * d(y, b), [(0.0, 1.0), (0.0, 1.0)])
    }

    pub fn exact(&self, x: f64, y: f64, a: usize, b: usize) -> Result<f64> {
        self.u_exact.as_ref().map(|u| u(x, y, a, b)).ok_or(Error::MissingExactSolution)
    }
}

/// Dense polynomial in monomial form, ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// `p^(s)(x)` by Horner's scheme on the differentiated coefficients.
    pub fn eval(&self, x: f64, s: usize) -> f64 {
        let mut acc = 0.0;
        for (i, c) in self.coeffs.iter().enumerate().skip(s).rev() {
            let falling: f64 = ((i - s + 1)..=i).map(|v| v as f64).product();
            acc = acc * x + c * falling;
        }
        acc
    }
}

/// Built-in problem identifiers: `sin1d`, `sin2d` and `poly:<k>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemId {
    Sin1D,
    Sin2D,
    Poly(usize),
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sin1d" => Ok(Self::Sin1D),
            "sin2d" => Ok(Self::Sin2D),
            _ => {
                let k = s
                    .strip_prefix("poly:")
                    .and_then(|k| k.parse::<usize>().ok())
                    .ok_or_else(|| Error::Parse(format!("unknown problem id {s:?} (expected sin1d, sin2d or poly:<k>)")))?;
                if k < 2 {
                    return Err(Error::InvalidArgument(format!("poly:{k} needs k >= 2")));
                }
                Ok(Self::Poly(k))
            }
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Sin1D => write!(f, "sin1d"),
            Self::Sin2D => write!(f, "sin2d"),
            Self::Poly(k) => write!(f, "poly:{k}"),
        }
    }
}

impl ProblemId {
    pub fn problem_1d(self) -> Result<Problem1D> {
        match self {
            Self::Sin1D => Ok(Problem1D::sin1d()),
            Self::Poly(k) => Problem1D::poly(k),
            Self::Sin2D => Err(Error::InvalidArgument("sin2d is a two-dimensional problem".into())),
        }
    }

    /// Two-dimensional problem; `poly:<k>` becomes the product `p(x) p(y)`.
    pub fn problem_2d(self) -> Result<Problem2D> {
        match self {
            Self::Sin2D => Ok(Problem2D::sin2d()),
            Self::Poly(k) => {
                let p = Problem1D::poly(k)?.u_exact.expect("poly problems carry an exact solution");
                Ok(Problem2D::from_exact(move |x, y, a, b| p(x, a) * p(y, b), [(0.0, 1.0), (0.0, 1.0)]))
            }
            Self::Sin1D => Err(Error::InvalidArgument("sin1d is a one-dimensional problem".into())),
        }
    }
}
