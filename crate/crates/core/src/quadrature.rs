//! Gauss-Legendre rules on intervals and symmetric rules on triangles.

use crate::polyalg::legendre_values;

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// The `n`-point Gauss-Legendre rule, exact for degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "a Gauss rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_and_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (mid + half * x, half * w))
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let v = legendre_values(n, x);
    let p = v[n];
    let pm1 = if n >= 1 { v[n - 1] } else { 0.0 };
    let d = n as f64 * (x * p - pm1) / (x * x - 1.0);
    (p, d)
}

/// A quadrature rule on the reference triangle in barycentric coordinates.
/// Weights sum to one, so integrals are `area * sum w f`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// A fully symmetric rule exact for polynomials of total degree `degree`.
    /// Degrees 1 to 8 are available; 7 falls back on the degree-8 rule.
    pub fn symmetric(degree: usize) -> Self {
        let mut rule = Self { points: Vec::new(), weights: Vec::new() };
        match degree {
            0 | 1 => rule.centroid(1.0),
            2 => rule.orbit3(1.0 / 3.0, 2.0 / 3.0, 1.0 / 6.0),
            3 | 4 => {
                rule.orbit3(0.223381589678011, 0.108103018168070, 0.445948490915965);
                rule.orbit3(0.109951743655322, 0.816847572980459, 0.091576213509771);
            }
            5 => {
                rule.centroid(0.225);
                rule.orbit3(0.132394152788506, 0.059715871789770, 0.470142064105115);
                rule.orbit3(0.125939180544827, 0.797426985353087, 0.101286507323456);
            }
            6 => {
                rule.orbit3(0.116786275726379, 0.501426509658179, 0.249286745170910);
                rule.orbit3(0.050844906370207, 0.873821971016996, 0.063089014491502);
                rule.orbit6(0.082851075618374, 0.053145049844817, 0.310352451033784);
            }
            7 | 8 => {
                rule.centroid(0.144315607677787);
                rule.orbit3(0.095091634267285, 0.081414823414554, 0.459292588292723);
                rule.orbit3(0.103217370534718, 0.658861384496480, 0.170569307751760);
                rule.orbit3(0.032458497623198, 0.898905543365938, 0.050547228317031);
                rule.orbit6(0.027230314174435, 0.008394777409958, 0.263112829634638);
            }
            _ => panic!("no symmetric triangle rule of degree {degree}"),
        }
        rule
    }

    fn centroid(&mut self, w: f64) {
        self.points.push([1.0 / 3.0; 3]);
        self.weights.push(w);
    }

    /// The three points `(a, b, b)` and permutations, where `a + 2b = 1`.
    fn orbit3(&mut self, w: f64, a: f64, b: f64) {
        for p in [[a, b, b], [b, a, b], [b, b, a]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    /// The six permutations of `(a, b, 1 - a - b)`.
    fn orbit6(&mut self, w: f64, a: f64, b: f64) {
        let c = 1.0 - a - b;
        for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
