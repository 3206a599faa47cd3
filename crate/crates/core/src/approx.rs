//! Weighted polynomial approximation: distances from a target `H` to the
//! span of `{z^j F}`, the extremal growth functional `K_n`, and the
//! experiment pipelines built on them.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::divided::divide_by_linear;
use crate::error::{FockError, Result};
use crate::fock::log_monomial_norm_sq;
use crate::function::{EntireFnHandle, EntireFunction};
use crate::quadrature::{PolarGrid, QuadratureSpec};
use crate::scaled::{pairwise_sum, pairwise_sum_real};

/// Relative singular value cutoff of the pseudo-inverse.
pub const DEFAULT_TAU: f64 = 1e-12;
/// Largest condition number of the equilibrated Gram matrix that is trusted.
pub const MAX_CONDITION: f64 = 1e14;

/// `ln s_j` for the basis `phi_j = z^j / s_j`, `s_j = ||z^j||`.
pub fn basis_log_scale(j: usize) -> f64 {
    0.5 * log_monomial_norm_sq(j)
}

/// A function sampled on a polar grid with the Fock weight folded in:
/// `a_l = F(zeta_l) e^{-pi |zeta_l|^2 / 2} sqrt(w_l / pi)`, so that
/// `<G, F> = sum_l g_l conj(a_l)` for any `G` sampled the same way.
#[derive(Debug, Clone)]
pub struct WeightedSamples {
    pub label: String,
    grid: PolarGrid,
    nodes: Vec<Complex64>,
    root_weights: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl WeightedSamples {
    pub fn new(f: &dyn EntireFunction, q: &QuadratureSpec) -> Result<Self> {
        q.validate()?;
        let grid = q.grid();
        let nodes = grid.nodes();
        let root_weights: Vec<f64> = grid.weights().iter().map(|w| (w / PI).sqrt()).collect();
        let mut s = WeightedSamples {
            label: f.label(),
            grid,
            nodes,
            root_weights,
            values: Vec::new(),
        };
        s.values = s.weigh(f);
        Ok(s)
    }

    /// Samples of another function on the same grid with the same weighting.
    pub fn weigh(&self, h: &dyn EntireFunction) -> Vec<Complex64> {
        self.nodes
            .par_iter()
            .zip(&self.root_weights)
            .map(|(&z, &rw)| h.eval(z).scale_exp(-0.5 * PI * z.norm_sqr()).to_complex() * rw)
            .collect()
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `||G||` of a weighted sample vector, failing when the outermost ring
    /// carries more than the tail tolerance of the mass.
    pub fn norm_of(&self, g: &[Complex64]) -> Result<f64> {
        let sq: Vec<f64> = g.iter().map(|v| v.norm_sqr()).collect();
        let total = pairwise_sum_real(&sq);
        let n = self.grid.n_angular();
        let ring = pairwise_sum_real(&sq[sq.len() - n..]);
        if ring > self.grid.tail_tol * total {
            return Err(FockError::TailNotConverged {
                radius: *self.grid.radii.last().unwrap(),
                ratio: ring / total,
            });
        }
        Ok(total.sqrt())
    }

    /// `<g, phi_j F>` for `j = 0..=n`.
    pub fn moments(&self, g: &[Complex64], n: usize) -> DVector<Complex64> {
        let prod: Vec<Complex64> = g.iter().zip(&self.values).map(|(h, a)| h * a.conj()).collect();
        let rings = ring_transforms(&prod, self.grid.n_angular());
        DVector::from_iterator(
            n + 1,
            (0..=n).map(|j| {
                let terms: Vec<Complex64> = self
                    .grid
                    .radii
                    .iter()
                    .zip(&rings)
                    .map(|(&r, y)| y[j % y.len()] * (j as f64 * r.ln() - basis_log_scale(j)).exp())
                    .collect();
                pairwise_sum(&terms)
            }),
        )
    }

    /// `g - p F` for `p = sum_j c_j phi_j`.
    pub fn residual(&self, g: &[Complex64], coeffs: &[Complex64]) -> Vec<Complex64> {
        let raw: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * (-basis_log_scale(j)).exp())
            .collect();
        self.nodes
            .par_iter()
            .zip(g.par_iter().zip(&self.values))
            .map(|(&z, (h, a))| {
                let p = raw.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c);
                h - p * a
            })
            .collect()
    }
}

/// Forward DFT of every ring: `y_i[m] = sum_l v_{il} e^{-i m theta_l}`.
fn ring_transforms(values: &[Complex64], n_angular: usize) -> Vec<Vec<Complex64>> {
    let fft = FftPlanner::new().plan_fft_forward(n_angular);
    values
        .par_chunks(n_angular)
        .map(|ring| {
            let mut buf = ring.to_vec();
            fft.process(&mut buf);
            buf
        })
        .collect()
}

/// `A_{jk} = <phi_j F, phi_k F>` for `j, k <= degree`, without factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub label: String,
    pub degree: usize,
    pub entries: DMatrix<Complex64>,
}

impl GramMatrix {
    /// Assembles every entry from the angular Fourier modes of `|a|^2` on each
    /// ring: `A_{jk} = sum_i r_i^{j+k} W_i(j - k) / (s_j s_k)`.
    pub fn assemble(samples: &WeightedSamples, degree: usize) -> Result<Self> {
        let n_ang = samples.grid.n_angular();
        if 2 * degree + 1 > n_ang {
            return Err(FockError::InvalidParams(format!(
                "n_angular = {n_ang} cannot resolve angular modes up to {degree}"
            )));
        }
        let sq: Vec<Complex64> = samples.values.iter().map(|a| Complex64::new(a.norm_sqr(), 0.0)).collect();
        let rings = ring_transforms(&sq, n_ang);
        let log_r: Vec<f64> = samples.grid.radii.iter().map(|r| r.ln()).collect();
        let log_s: Vec<f64> = (0..=degree).map(basis_log_scale).collect();

        // outermost ring share of the top diagonal entry
        let top = |i: usize| (2.0 * degree as f64 * log_r[i] - 2.0 * log_s[degree]).exp() * rings[i][0].re;
        let diag: Vec<f64> = (0..rings.len()).map(top).collect();
        let total = pairwise_sum_real(&diag);
        let last = *diag.last().unwrap();
        if last > samples.grid.tail_tol * total {
            return Err(FockError::TailNotConverged {
                radius: *samples.grid.radii.last().unwrap(),
                ratio: last / total,
            });
        }

        let pairs: Vec<(usize, usize)> = (0..=degree).flat_map(|j| (j..=degree).map(move |k| (j, k))).collect();
        let upper: Vec<Complex64> = pairs
            .par_iter()
            .map(|&(j, k)| {
                // W(j - k) = sum_l |a_l|^2 e^{i (j-k) theta_l} = y[(k - j) mod N]
                let m = k - j;
                let terms: Vec<Complex64> = rings
                    .iter()
                    .zip(&log_r)
                    .map(|(y, lr)| y[m] * ((j + k) as f64 * lr - log_s[j] - log_s[k]).exp())
                    .collect();
                pairwise_sum(&terms)
            })
            .collect();
        let mut entries = DMatrix::zeros(degree + 1, degree + 1);
        for (&(j, k), v) in pairs.iter().zip(upper) {
            if j == k {
                entries[(j, j)] = Complex64::new(v.re, 0.0);
            } else {
                entries[(j, k)] = v;
                entries[(k, j)] = v.conj();
            }
        }
        Ok(GramMatrix {
            label: samples.label.clone(),
            degree,
            entries,
        })
    }

    pub fn leading(&self, n: usize) -> GramMatrix {
        GramMatrix {
            label: self.label.clone(),
            degree: n,
            entries: self.entries.view((0, 0), (n + 1, n + 1)).into_owned(),
        }
    }
}

/// Jacobi-equilibrated, SVD-truncated pseudo-inverse of a Hermitian
/// positive semidefinite matrix.
#[derive(Debug, Clone)]
pub struct Pseudoinverse {
    equil: Vec<f64>,
    u: DMatrix<Complex64>,
    v_t: DMatrix<Complex64>,
    singular: Vec<f64>,
    pub tau: f64,
    /// `sigma_max / sigma_min` of the equilibrated matrix.
    pub condition: f64,
    pub rank: usize,
}

impl Pseudoinverse {
    pub fn new(matrix: &DMatrix<Complex64>, tau: f64) -> Result<Self> {
        let n = matrix.nrows();
        let mut equil = Vec::with_capacity(n);
        for j in 0..n {
            let d = matrix[(j, j)].re;
            if !(d > 0.0 && d.is_finite()) {
                return Err(FockError::IllConditionedSpan { rank: j, requested: n });
            }
            equil.push(1.0 / d.sqrt());
        }
        let scaled = DMatrix::from_fn(n, n, |j, k| matrix[(j, k)] * equil[j] * equil[k]);
        let svd = scaled.svd(true, true);
        let singular: Vec<f64> = svd.singular_values.iter().copied().collect();
        let smax = singular.iter().copied().fold(0.0, f64::max);
        let smin = singular.iter().copied().fold(f64::INFINITY, f64::min);
        let rank = singular.iter().filter(|&&s| s > tau * smax).count();
        Ok(Pseudoinverse {
            equil,
            u: svd.u.expect("requested"),
            v_t: svd.v_t.expect("requested"),
            singular,
            tau,
            condition: if smin > 0.0 { smax / smin } else { f64::INFINITY },
            rank,
        })
    }

    pub fn dim(&self) -> usize {
        self.equil.len()
    }

    pub fn discarded(&self) -> usize {
        self.dim() - self.rank
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular
    }

    fn cutoff(&self) -> f64 {
        self.tau * self.singular.iter().copied().fold(0.0, f64::max)
    }

    /// `M^+ b`.
    pub fn solve(&self, b: &DVector<Complex64>) -> DVector<Complex64> {
        let cut = self.cutoff();
        let eb = DVector::from_iterator(b.len(), b.iter().zip(&self.equil).map(|(x, d)| x * d));
        let mut y = self.u.adjoint() * eb;
        for (i, s) in self.singular.iter().enumerate() {
            y[i] = if *s > cut { y[i] / *s } else { Complex64::new(0.0, 0.0) };
        }
        let x = self.v_t.adjoint() * y;
        DVector::from_iterator(x.len(), x.iter().zip(&self.equil).map(|(x, d)| x * d))
    }

    /// `b^* M^+ b` as a sum of nonnegative terms.
    pub fn quadratic_form(&self, b: &DVector<Complex64>) -> f64 {
        let cut = self.cutoff();
        let eb = DVector::from_iterator(b.len(), b.iter().zip(&self.equil).map(|(x, d)| x * d));
        let y = self.u.adjoint() * eb;
        let terms: Vec<f64> = self
            .singular
            .iter()
            .zip(y.iter())
            .filter(|(s, _)| **s > cut)
            .map(|(s, y)| y.norm_sqr() / s)
            .collect();
        pairwise_sum_real(&terms)
    }
}

/// Gram matrix of `{phi_j F}` together with its factorization.
#[derive(Debug, Clone)]
pub struct GramSystem {
    pub gram: GramMatrix,
    /// Factorization of the normal matrix `conj(A)`, `conj(A)_{jk} = <phi_k F, phi_j F>`.
    pub pinv: Pseudoinverse,
}

impl GramSystem {
    pub fn new(gram: GramMatrix, tau: f64) -> Result<Self> {
        let normal = gram.entries.map(|v| v.conj());
        let pinv = Pseudoinverse::new(&normal, tau)?;
        if !(pinv.condition <= MAX_CONDITION) {
            return Err(FockError::DegreeTooHighForQuadrature {
                degree: gram.degree,
                condition: pinv.condition,
            });
        }
        Ok(GramSystem { gram, pinv })
    }

    pub fn degree(&self) -> usize {
        self.gram.degree
    }

    pub fn condition(&self) -> f64 {
        self.pinv.condition
    }

    /// Coefficients `c` of the least-squares `p = sum c_j phi_j` for moments `b`.
    pub fn solve(&self, b: &DVector<Complex64>) -> DVector<Complex64> {
        self.pinv.solve(b)
    }
}

pub fn build_gram(f: &dyn EntireFunction, n: usize, q: &QuadratureSpec) -> Result<GramSystem> {
    let samples = WeightedSamples::new(f, q)?;
    GramSystem::new(GramMatrix::assemble(&samples, n)?, DEFAULT_TAU)
}

/// `K_n(x0) = sup { |P(x0)| : ||P F|| <= 1, deg P <= n }`.
pub fn extremal_growth(g: &GramSystem, x0: f64) -> f64 {
    let n = g.degree();
    let v = DVector::from_iterator(
        n + 1,
        (0..=n).map(|j| {
            let m = if x0 == 0.0 {
                if j == 0 {
                    (-basis_log_scale(0)).exp()
                } else {
                    0.0
                }
            } else {
                (j as f64 * x0.abs().ln() - basis_log_scale(j)).exp() * if x0 < 0.0 && j % 2 == 1 { -1.0 } else { 1.0 }
            };
            Complex64::new(m, 0.0)
        }),
    );
    g.pinv.quadratic_form(&v).sqrt()
}

/// One least-squares fit of degree `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeFit {
    pub degree: usize,
    /// `||H - p F||` from the pointwise residual.
    pub distance: f64,
    /// `sqrt(||H||^2 - b^* A^+ b)`, clamped at zero.
    pub gram_distance: f64,
    pub condition: f64,
    pub discarded_rank: usize,
    /// `sqrt(eps * condition) ||H||`, the rounding scale of the fit.
    pub error_bound: f64,
}

/// Everything a projection backend needs: `F` and `H` on the grid and the
/// Gram matrix up to the largest degree.
#[derive(Debug, Clone)]
pub struct ProjectionProblem<'a> {
    pub samples: &'a WeightedSamples,
    pub target: &'a [Complex64],
    pub target_norm: f64,
    pub gram: &'a GramMatrix,
    pub tau: f64,
}

/// `K_n(x)` for every degree `n` up to where conditioning allows.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthTable {
    pub points: Vec<f64>,
    /// `values[n][i] = K_n(points[i])`.
    pub values: Vec<Vec<f64>>,
    pub conditions: Vec<f64>,
}

/// A least-squares backend, selected by name.
pub trait ProjectionStrategy: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &'static str;

    /// Fits for `n = 0, 1, ...` up to the Gram degree; stops early with the
    /// conditioning error once a degree is no longer trustworthy.
    fn fits(&self, problem: &ProjectionProblem<'_>) -> (Vec<DegreeFit>, Option<FockError>);

    /// Extremal growth at real points for `n = 0, 1, ...` up to the Gram degree.
    fn growth(&self, samples: &WeightedSamples, gram: &GramMatrix, tau: f64, points: &[f64]) -> (GrowthTable, Option<FockError>);
}

/// Jacobi-equilibrated Gram matrix, truncated SVD, residual on the grid.
#[derive(Debug, Clone, Copy, Default)]
pub struct GramSvd;

impl ProjectionStrategy for GramSvd {
    fn name(&self) -> &'static str {
        "gram-svd"
    }

    fn fits(&self, p: &ProjectionProblem<'_>) -> (Vec<DegreeFit>, Option<FockError>) {
        let b_all = p.samples.moments(p.target, p.gram.degree);
        let h2 = p.target_norm * p.target_norm;
        let mut out = Vec::new();
        for n in 0..=p.gram.degree {
            let sys = match GramSystem::new(p.gram.leading(n), p.tau) {
                Ok(s) => s,
                Err(e) => return (out, Some(e)),
            };
            let b = b_all.rows(0, n + 1).into_owned();
            let coeffs = sys.solve(&b);
            let res = p.samples.residual(p.target, coeffs.as_slice());
            let gram_sq = h2 - sys.pinv.quadratic_form(&b);
            out.push(DegreeFit {
                degree: n,
                distance: vnorm(&res),
                gram_distance: gram_sq.max(0.0).sqrt(),
                condition: sys.condition(),
                discarded_rank: sys.pinv.discarded(),
                error_bound: (f64::EPSILON * sys.condition()).sqrt() * p.target_norm,
            });
        }
        (out, None)
    }

    fn growth(&self, _samples: &WeightedSamples, gram: &GramMatrix, tau: f64, points: &[f64]) -> (GrowthTable, Option<FockError>) {
        let mut table = GrowthTable {
            points: points.to_vec(),
            values: Vec::new(),
            conditions: Vec::new(),
        };
        for n in 0..=gram.degree {
            match GramSystem::new(gram.leading(n), tau) {
                Ok(sys) => {
                    table.values.push(points.iter().map(|&x| extremal_growth(&sys, x)).collect());
                    table.conditions.push(sys.condition());
                }
                Err(e) => return (table, Some(e)),
            }
        }
        (table, None)
    }
}

/// Orthonormalizes `F, zF, z^2 F, ...` on the grid by Arnoldi with
/// reorthogonalization; needs no Gram matrix. The orthonormal polynomials
/// are tracked at the growth points through the same recurrence.
#[derive(Debug, Clone, Copy, Default)]
pub struct Arnoldi;

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    // <a, b> = sum a conj(b)
    let terms: Vec<Complex64> = a.par_iter().zip(b).map(|(x, y)| x * y.conj()).collect();
    pairwise_sum(&terms)
}

fn vnorm(a: &[Complex64]) -> f64 {
    pairwise_sum_real(&a.par_iter().map(|v| v.norm_sqr()).collect::<Vec<_>>()).sqrt()
}

struct ArnoldiStep {
    degree: usize,
    /// Squared loss ratio `(||z q_{n-1}|| / ||new component||)^2`, accumulated as a maximum.
    condition: f64,
    /// Values at the growth points of the newest orthonormal polynomial.
    poly: Vec<Complex64>,
    /// Newest orthonormal vector on the grid.
    vector: Vec<Complex64>,
}

/// Runs the Arnoldi process, handing every new orthonormal element to `visit`.
fn arnoldi_run(
    samples: &WeightedSamples,
    n_max: usize,
    tau: f64,
    points: &[f64],
    mut visit: impl FnMut(&ArnoldiStep),
) -> Option<FockError> {
    let nodes = samples.nodes();
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut polys: Vec<Vec<Complex64>> = Vec::new();
    let mut condition: f64 = 1.0;
    let mut next = samples.values.clone();
    let mut next_poly: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); points.len()];
    for n in 0..=n_max {
        let raw = vnorm(&next);
        for _ in 0..2 {
            for (q, pq) in basis.iter().zip(&polys) {
                let h = dot(&next, q);
                next.par_iter_mut().zip(q).for_each(|(v, qv)| *v -= h * qv);
                next_poly.iter_mut().zip(pq).for_each(|(v, pv)| *v -= h * pv);
            }
        }
        let kept = vnorm(&next);
        let loss = if kept > 0.0 { raw / kept } else { f64::INFINITY };
        condition = condition.max(loss * loss);
        if !(kept > tau * raw) || !(condition <= MAX_CONDITION) {
            return Some(FockError::DegreeTooHighForQuadrature { degree: n, condition });
        }
        next.par_iter_mut().for_each(|v| *v /= kept);
        next_poly.iter_mut().for_each(|v| *v /= kept);
        visit(&ArnoldiStep {
            degree: n,
            condition,
            poly: next_poly.clone(),
            vector: next.clone(),
        });
        let step: Vec<Complex64> = next.par_iter().zip(nodes).map(|(v, z)| v * z).collect();
        let step_poly: Vec<Complex64> = next_poly.iter().zip(points).map(|(v, x)| v * x).collect();
        basis.push(std::mem::replace(&mut next, step));
        polys.push(std::mem::replace(&mut next_poly, step_poly));
    }
    None
}

impl ProjectionStrategy for Arnoldi {
    fn name(&self) -> &'static str {
        "arnoldi"
    }

    fn fits(&self, p: &ProjectionProblem<'_>) -> (Vec<DegreeFit>, Option<FockError>) {
        let mut residual = p.target.to_vec();
        let mut out = Vec::new();
        let err = arnoldi_run(p.samples, p.gram.degree, p.tau, &[], |step| {
            let h = dot(&residual, &step.vector);
            residual.par_iter_mut().zip(&step.vector).for_each(|(r, q)| *r -= h * q);
            let distance = vnorm(&residual);
            out.push(DegreeFit {
                degree: step.degree,
                distance,
                gram_distance: distance,
                condition: step.condition,
                discarded_rank: 0,
                error_bound: (f64::EPSILON * step.condition).sqrt() * p.target_norm,
            });
        });
        (out, err)
    }

    fn growth(&self, samples: &WeightedSamples, gram: &GramMatrix, tau: f64, points: &[f64]) -> (GrowthTable, Option<FockError>) {
        let mut table = GrowthTable {
            points: points.to_vec(),
            values: Vec::new(),
            conditions: Vec::new(),
        };
        let mut sums = vec![0.0; points.len()];
        let err = arnoldi_run(samples, gram.degree, tau, points, |step| {
            for (s, v) in sums.iter_mut().zip(&step.poly) {
                *s += v.norm_sqr();
            }
            table.values.push(sums.iter().map(|s| s.sqrt()).collect());
            table.conditions.push(step.condition);
        });
        (table, err)
    }
}

/// Names accepted by [`projection_strategy`].
pub fn strategy_names() -> &'static [&'static str] {
    &["gram-svd", "arnoldi"]
}

pub fn projection_strategy(name: &str) -> Result<Arc<dyn ProjectionStrategy>> {
    match name {
        "gram-svd" => Ok(Arc::new(GramSvd)),
        "arnoldi" => Ok(Arc::new(Arnoldi)),
        other => Err(FockError::InvalidParams(format!(
            "unknown projection strategy {other:?}; expected one of {:?}",
            strategy_names()
        ))),
    }
}

/// Summary label of a distance profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Some degree reaches `d_n <= 1e-3 ||H||`.
    Decays,
    /// `d_n >= 0.5 ||H||` at every computed degree.
    Plateau,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceProfile {
    pub f_label: String,
    pub h_label: String,
    pub strategy: String,
    pub target_norm: f64,
    pub fits: Vec<DegreeFit>,
    /// Set when conditioning stopped the profile before the requested degree.
    pub truncated_at: Option<usize>,
    pub requested: usize,
}

impl DistanceProfile {
    pub fn distances(&self) -> Vec<f64> {
        self.fits.iter().map(|f| f.distance).collect()
    }

    pub fn relative(&self) -> Vec<f64> {
        self.fits.iter().map(|f| f.distance / self.target_norm).collect()
    }

    pub fn verdict(&self) -> Verdict {
        let rel = self.relative();
        if rel.is_empty() {
            Verdict::Inconclusive
        } else if rel.iter().any(|&r| r <= 1e-3) {
            Verdict::Decays
        } else if rel.iter().all(|&r| r >= 0.5) {
            Verdict::Plateau
        } else {
            Verdict::Inconclusive
        }
    }

    /// Largest increase `d_{n+1} - d_n` over the profile.
    pub fn worst_increase(&self) -> f64 {
        self.fits.windows(2).map(|w| w[1].distance - w[0].distance).fold(0.0, f64::max)
    }
}

/// Profile of `d_n = dist(H, span{phi_j F : j <= n})` with a precomputed Gram matrix.
pub fn distance_profile_with(
    samples: &WeightedSamples,
    gram: &GramMatrix,
    h: &dyn EntireFunction,
    strategy: &dyn ProjectionStrategy,
    tau: f64,
) -> Result<DistanceProfile> {
    let target = samples.weigh(h);
    let target_norm = samples.norm_of(&target)?;
    let problem = ProjectionProblem {
        samples,
        target: &target,
        target_norm,
        gram,
        tau,
    };
    let (fits, err) = strategy.fits(&problem);
    let truncated_at = match err {
        None => None,
        Some(FockError::DegreeTooHighForQuadrature { degree, .. }) => Some(degree),
        Some(e) => return Err(e),
    };
    Ok(DistanceProfile {
        f_label: samples.label.clone(),
        h_label: h.label(),
        strategy: strategy.name().to_string(),
        target_norm,
        fits,
        truncated_at,
        requested: gram.degree,
    })
}

pub fn distance_profile(
    f: &dyn EntireFunction,
    h: &dyn EntireFunction,
    n_max: usize,
    q: &QuadratureSpec,
    strategy: &dyn ProjectionStrategy,
) -> Result<DistanceProfile> {
    let samples = WeightedSamples::new(f, q)?;
    let gram = GramMatrix::assemble(&samples, n_max)?;
    distance_profile_with(&samples, &gram, h, strategy, DEFAULT_TAU)
}

/// `d_n` at a single degree, by the Gram route.
pub fn project_distance(f: &dyn EntireFunction, h: &dyn EntireFunction, n: usize, q: &QuadratureSpec) -> Result<f64> {
    let p = distance_profile(f, h, n, q, &GramSvd)?;
    match p.truncated_at {
        Some(d) => Err(FockError::DegreeTooHighForQuadrature {
            degree: d,
            condition: f64::INFINITY,
        }),
        None => Ok(p.fits[n].distance),
    }
}

/// Monomial coefficients of the least-squares `P` of degree `n` minimizing `||H - P F||`.
pub fn least_squares_polynomial(f: &dyn EntireFunction, h: &dyn EntireFunction, n: usize, q: &QuadratureSpec) -> Result<Vec<Complex64>> {
    let samples = WeightedSamples::new(f, q)?;
    let sys = GramSystem::new(GramMatrix::assemble(&samples, n)?, DEFAULT_TAU)?;
    let b = samples.moments(&samples.weigh(h), n);
    Ok(sys
        .solve(&b)
        .iter()
        .enumerate()
        .map(|(j, c)| c * (-basis_log_scale(j)).exp())
        .collect())
}

/// Least-squares fit of `H` by `span{e_lambda F : lambda in Lambda}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanFit {
    pub distance: f64,
    pub target_norm: f64,
    pub condition: f64,
    pub rank: usize,
}

/// `dist(H, span{e_lambda F})` by Gram-Schmidt with reorthogonalization on
/// the weighted grid vectors. A column whose new component falls below
/// `tau` of its norm is dropped; fails with `IllConditionedSpan` when fewer
/// than `min_rank` columns survive.
pub fn exp_span_distance(
    f: &dyn EntireFunction,
    h: &dyn EntireFunction,
    lambdas: &[Complex64],
    q: &QuadratureSpec,
    min_rank: usize,
) -> Result<SpanFit> {
    let samples = WeightedSamples::new(f, q)?;
    let mut residual = samples.weigh(h);
    let target_norm = samples.norm_of(&residual)?;
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    let mut condition: f64 = 1.0;
    for &l in lambdas {
        let mut col: Vec<Complex64> = samples.nodes().par_iter().zip(&samples.values).map(|(z, a)| a * (l * z).exp()).collect();
        let raw = samples.norm_of(&col)?;
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&col, q);
                col.par_iter_mut().zip(q).for_each(|(v, qv)| *v -= c * qv);
            }
        }
        let kept = vnorm(&col);
        if !(kept > DEFAULT_TAU * raw) {
            continue;
        }
        condition = condition.max((raw / kept).powi(2));
        col.par_iter_mut().for_each(|v| *v /= kept);
        let c = dot(&residual, &col);
        residual.par_iter_mut().zip(&col).for_each(|(r, qv)| *r -= c * qv);
        basis.push(col);
    }
    if basis.len() < min_rank {
        return Err(FockError::IllConditionedSpan {
            rank: basis.len(),
            requested: lambdas.len(),
        });
    }
    Ok(SpanFit {
        distance: vnorm(&residual),
        target_norm,
        condition,
        rank: basis.len(),
    })
}

/// Both profiles of the division test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivideReport {
    pub lambda: [f64; 2],
    pub original: DistanceProfile,
    pub divided: DistanceProfile,
    /// Ratio of the average log-decay rates, divided over original.
    pub rate_ratio: f64,
}

fn log_rate(p: &DistanceProfile) -> f64 {
    let d = p.relative();
    match (d.first(), d.last()) {
        (Some(a), Some(b)) if d.len() > 1 && *a > 0.0 && *b > 0.0 => (b.ln() - a.ln()) / (d.len() - 1) as f64,
        _ => 0.0,
    }
}

pub fn divide_zero_test(
    f: EntireFnHandle,
    h: EntireFnHandle,
    lambda: Complex64,
    n: usize,
    q: &QuadratureSpec,
    strategy: &dyn ProjectionStrategy,
) -> Result<DivideReport> {
    let samples = WeightedSamples::new(&*f, q)?;
    let kernel_norm = (PI * (PI * lambda.norm_sqr()).exp()).sqrt();
    let f_norm = samples.norm_of(&samples.values)?;
    if f.eval(lambda).abs() <= 1e-12 * f_norm * kernel_norm {
        return Err(FockError::ZeroOfF);
    }
    let h_norm = samples.norm_of(&samples.weigh(&*h))?;
    let residual = h.eval(lambda).abs() / (h_norm * kernel_norm);
    if residual > 1e-6 {
        return Err(FockError::NotAZero { residual });
    }
    let gram = GramMatrix::assemble(&samples, n)?;
    let original = distance_profile_with(&samples, &gram, &*h, strategy, DEFAULT_TAU)?;
    let quotient = divide_by_linear(h, lambda, true);
    let divided = distance_profile_with(&samples, &gram, &*quotient, strategy, DEFAULT_TAU)?;
    let (a, b) = (log_rate(&original), log_rate(&divided));
    Ok(DivideReport {
        lambda: [lambda.re, lambda.im],
        rate_ratio: if a != 0.0 { b / a } else { f64::NAN },
        original,
        divided,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::inner_product;
    use crate::function::{constant, exponential, monomial, product};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_gram_is_identity_in_scaled_basis() {
        let g = build_gram(&*constant(1.0), 5, &QuadratureSpec::default()).unwrap();
        for j in 0..=5 {
            for k in 0..=5 {
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((g.gram.entries[(j, k)] - expect).norm() < 1e-10, "{j},{k}");
            }
        }
        assert!(g.condition() < 1.0 + 1e-9);
    }

    #[test]
    fn exponential_gram_matches_direct_pairings() {
        let q = QuadratureSpec::default();
        let e1 = exponential(c(1.0, 0.0));
        let g = build_gram(&*e1, 4, &q).unwrap();
        for j in 0..=4 {
            for k in 0..=4 {
                let a = product(vec![monomial(j), e1.clone()]);
                let b = product(vec![monomial(k), e1.clone()]);
                let direct = inner_product(&*a, &*b, &q).unwrap() * (-basis_log_scale(j) - basis_log_scale(k)).exp();
                assert!((g.gram.entries[(j, k)] - direct).norm() < 1e-10 * direct.norm().max(1e-3), "{j},{k}");
            }
        }
    }

    #[test]
    fn extremal_growth_at_origin() {
        let g = build_gram(&*exponential(c(0.5, 0.0)), 6, &QuadratureSpec::default()).unwrap();
        let k0 = extremal_growth(&g, 0.0);
        let unit = DVector::from_iterator(7, (0..7).map(|j| c(if j == 0 { 1.0 } else { 0.0 }, 0.0)));
        let a00 = g.pinv.solve(&unit)[0].re * (-2.0 * basis_log_scale(0)).exp();
        assert!((k0 - a00.sqrt()).abs() < 1e-12 * k0);
    }

    #[test]
    fn strategies_agree() {
        let q = QuadratureSpec::default();
        let f = exponential(c(1.0, 0.0));
        let h = product(vec![exponential(c(0.0, 2.0)), f.clone()]);
        let a = distance_profile(&*f, &*h, 12, &q, &GramSvd).unwrap();
        let b = distance_profile(&*f, &*h, 12, &q, &Arnoldi).unwrap();
        for (x, y) in a.fits.iter().zip(&b.fits) {
            assert!((x.distance - y.distance).abs() < 1e-9 * a.target_norm, "{x:?} {y:?}");
        }
        assert!(projection_strategy("nope").is_err());
    }
}
