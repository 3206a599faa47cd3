//! Polar quadrature for integrals against area measure on the plane.
//!
//! The grid is a tensor product of a uniform trapezoid rule in angle and
//! composite Gauss-Legendre panels in radius. The trapezoid rule integrates
//! `e^{i m theta}` exactly for `|m| < n_angular`, which keeps monomials
//! orthogonal to rounding level.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FockError, Result};
use crate::scaled::{pairwise_sum_real, ScaledComplex};

/// Gauss-Legendre order of every radial panel.
pub const PANEL_ORDER: usize = 16;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Composite Gauss-Legendre rule over the panel boundaries `edges`.
pub fn composite_gauss_legendre(edges: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let mut nodes = Vec::with_capacity((edges.len() - 1) * order);
    let mut weights = Vec::with_capacity(nodes.capacity());
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + half * xi);
            weights.push(half * wi);
        }
    }
    (nodes, weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub r_max: f64,
    pub n_radial: usize,
    pub n_angular: usize,
    pub tail_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            r_max: 12.0,
            n_radial: 480,
            n_angular: 512,
            tail_tol: 1e-12,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_max > 0.0 && self.r_max.is_finite()) {
            return Err(FockError::InvalidParams(format!("r_max must be positive, got {}", self.r_max)));
        }
        if self.n_radial < PANEL_ORDER || self.n_angular < 4 {
            return Err(FockError::InvalidParams(format!(
                "need n_radial >= {PANEL_ORDER} and n_angular >= 4, got {} and {}",
                self.n_radial, self.n_angular
            )));
        }
        if !(self.tail_tol > 0.0) {
            return Err(FockError::InvalidParams("tail_tol must be positive".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> PolarGrid {
        PolarGrid::new(self)
    }
}

/// Materialized polar grid. Radial weights include the Jacobian `r`.
#[derive(Debug, Clone)]
pub struct PolarGrid {
    pub radii: Vec<f64>,
    pub radial_weights: Vec<f64>,
    pub angles: Vec<f64>,
    pub unit: Vec<Complex64>,
    pub tail_tol: f64,
}

impl PolarGrid {
    pub fn new(spec: &QuadratureSpec) -> Self {
        let panels = spec.n_radial.div_ceil(PANEL_ORDER).max(1);
        let edges: Vec<f64> = (0..=panels).map(|k| spec.r_max * k as f64 / panels as f64).collect();
        let (radii, w) = composite_gauss_legendre(&edges, PANEL_ORDER);
        let radial_weights = radii.iter().zip(&w).map(|(r, w)| r * w).collect();
        let n = spec.n_angular;
        let angles: Vec<f64> = (0..n).map(|t| 2.0 * std::f64::consts::PI * t as f64 / n as f64).collect();
        let unit = angles.iter().map(|&a| Complex64::from_polar(1.0, a)).collect();
        PolarGrid {
            radii,
            radial_weights,
            angles,
            unit,
            tail_tol: spec.tail_tol,
        }
    }

    pub fn n_rings(&self) -> usize {
        self.radii.len()
    }

    pub fn n_angular(&self) -> usize {
        self.angles.len()
    }

    pub fn len(&self) -> usize {
        self.radii.len() * self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Angular weight of each node (`2 pi / n_angular`).
    pub fn angular_weight(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.angles.len() as f64
    }

    pub fn node(&self, ring: usize, k: usize) -> Complex64 {
        self.unit[k] * self.radii[ring]
    }

    /// All nodes in ring-major order.
    pub fn nodes(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.len());
        for &r in &self.radii {
            out.extend(self.unit.iter().map(|u| u * r));
        }
        out
    }

    /// Full quadrature weight of every node, ring-major.
    pub fn weights(&self) -> Vec<f64> {
        let aw = self.angular_weight();
        let mut out = Vec::with_capacity(self.len());
        for &w in &self.radial_weights {
            out.extend(std::iter::repeat_n(w * aw, self.angles.len()));
        }
        out
    }

    /// `\int integrand dm` over the disc `|z| <= r_max`, with the integrand
    /// given in scaled form. Fails if the outermost ring is not negligible.
    pub fn integrate(&self, integrand: impl Fn(Complex64) -> ScaledComplex + Sync) -> Result<ScaledComplex> {
        let aw = self.angular_weight();
        let values: Vec<ScaledComplex> = (0..self.n_rings())
            .into_par_iter()
            .flat_map_iter(|i| {
                let r = self.radii[i];
                let w = self.radial_weights[i] * aw;
                let integrand = &integrand;
                self.unit.iter().map(move |u| integrand(u * r).mul_complex(Complex64::new(w, 0.0)))
            })
            .collect();
        self.reduce_checked(&values)
    }

    /// Pairwise reduction of ring-major node contributions plus the
    /// outermost-ring tail test.
    pub fn reduce_checked(&self, values: &[ScaledComplex]) -> Result<ScaledComplex> {
        let top = values.iter().map(|v| v.exponent()).max().unwrap_or(i64::MIN);
        if top == i64::MIN {
            return Ok(ScaledComplex::ZERO);
        }
        let aligned: Vec<Complex64> = values.par_iter().map(|v| v.to_complex_at(top)).collect();
        let sum = self.reduce_checked_complex(&aligned)?;
        Ok(ScaledComplex::from_complex(sum) * ScaledComplex::from_log_phase(top as f64 * std::f64::consts::LN_2, 0.0))
    }

    /// As [`Self::reduce_checked`] for contributions already on a common scale.
    pub fn reduce_checked_complex(&self, aligned: &[Complex64]) -> Result<Complex64> {
        let n = self.n_angular();
        // aligned magnitudes are at most ~2, so the plain square root cannot overflow
        let abs: Vec<f64> = aligned.iter().map(|c| c.norm_sqr().sqrt()).collect();
        let total_abs = pairwise_sum_real(&abs);
        let ring_abs = pairwise_sum_real(&abs[abs.len() - n..]);
        let tol = self.tail_tol;
        // masses are in units of 2^top, so only the relative test is meaningful
        if ring_abs > tol * total_abs {
            return Err(FockError::TailNotConverged {
                radius: *self.radii.last().unwrap(),
                ratio: ring_abs / total_abs,
            });
        }
        Ok(crate::scaled::pairwise_sum(aligned))
    }
}
