//! Quadrature on the reference triangle `{(0,0),(1,0),(0,1)}` and on `[0,1]`.

use thiserror::Error;

use crate::mesh::Point;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("unsupported quadrature degree {0} (supported: 1..=8)")]
pub struct UnsupportedDegree(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Reference coordinates `(x, y)`.
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Barycentric coordinates `(1 - x - y, x, y)` of each point.
    pub fn barycentric(&self) -> Vec<[f64; 3]> {
        self.points.iter().map(|p| [1.0 - p[0] - p[1], p[0], p[1]]).collect()
    }

    pub fn integrate<F: FnMut(Point) -> f64>(&self, mut f: F) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, &w)| w * f(p)).sum()
    }
}

/// Triangle rule exact for polynomials of total degree `degree`.
///
/// Degrees 1 and 2 use the centroid and edge-midpoint rules; higher degrees
/// use a collapsed (Duffy) tensor product of Gauss-Legendre rules, which has
/// positive weights and interior points.
pub fn make_quadrature(degree: usize) -> Result<QuadratureRule, UnsupportedDegree> {
    match degree {
        1 => Ok(QuadratureRule {
            points: vec![[1.0 / 3.0, 1.0 / 3.0]],
            weights: vec![0.5],
            degree,
        }),
        2 => Ok(QuadratureRule {
            points: vec![[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]],
            weights: vec![1.0 / 6.0; 3],
            degree,
        }),
        3..=8 => {
            // x^a y^b -> xi^a (1 - xi)^(b + 1) eta^b under x = xi, y = eta (1 - xi)
            let (xs, wxs) = gauss_legendre((degree + 2).div_ceil(2));
            let (es, wes) = gauss_legendre((degree + 1).div_ceil(2));
            let mut points = Vec::with_capacity(xs.len() * es.len());
            let mut weights = Vec::with_capacity(xs.len() * es.len());
            for (&xi, &wx) in xs.iter().zip(&wxs) {
                for (&eta, &we) in es.iter().zip(&wes) {
                    points.push([xi, eta * (1.0 - xi)]);
                    weights.push(wx * we * (1.0 - xi));
                }
            }
            Ok(QuadratureRule {
                points,
                weights,
                degree,
            })
        }
        d => Err(UnsupportedDegree(d)),
    }
}

/// `n`-point Gauss-Legendre rule on `[0, 1]`, exact to degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Newton from the Chebyshev-like initial guess on [-1, 1]
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        nodes[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
