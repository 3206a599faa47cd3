//! The counterexample experiment: growth bands of `F`, the extremal growth
//! table, finiteness of `||FG||`, the distance profile and the pointwise
//! witness, assembled into one report.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::approx::{distance_profile_with, DistanceProfile, GramMatrix, ProjectionStrategy, WeightedSamples, DEFAULT_TAU};
use crate::error::{FockError, Result};
use crate::quadrature::QuadratureSpec;
use crate::sector::{ContourSpec, CounterexampleFunctions, CounterexampleParams};

/// `log|F|` against its growth bound at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthBandRow {
    pub r: f64,
    pub theta: f64,
    pub in_band: bool,
    pub log_abs_f: f64,
    pub bound: f64,
}

impl GrowthBandRow {
    pub fn excess(&self) -> f64 {
        self.log_abs_f - self.bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRow {
    pub x0: f64,
    pub n: usize,
    pub log_k: f64,
    pub x_gamma: f64,
}

impl KeyRow {
    pub fn gap(&self) -> f64 {
        self.log_k - self.x_gamma
    }
}

/// If `P_n F` is the best approximant of `H = FG`, then
/// `|H(x0)| <= K_n(x0) ||H|| |F(x0)| + d_n ||k_{x0}||`, so any excess of
/// `|H(x0)|` over the first term bounds `d_n` from below.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessRow {
    pub x0: f64,
    pub n: usize,
    pub log_abs_h: f64,
    /// `log(K_n(x0) ||H|| |F(x0)|)`.
    pub log_poly_term: f64,
    pub log_kernel_norm: f64,
    pub d_n: f64,
    /// `(|H(x0)| - K_n(x0) ||H|| |F(x0)|) / ||k_{x0}||` when positive.
    pub lower_bound: f64,
    /// `true` when `|H(x0)|` exceeds the polynomial term.
    pub resolvable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub params: CounterexampleParams,
    pub quadrature: QuadratureSpec,
    pub growth_band: Vec<GrowthBandRow>,
    pub key_table: Vec<KeyRow>,
    /// Degree where the growth table stopped, if conditioning ended it early.
    pub key_truncated_at: Option<usize>,
    pub fg_norm: f64,
    /// Share of `||FG||^2` on the outermost quadrature ring.
    pub fg_tail_ratio: f64,
    pub profile: DistanceProfile,
    pub witness: Vec<WitnessRow>,
    /// `(x, log|G(x)|, x^sigma)` on the positive axis.
    pub g_axis: Vec<[f64; 3]>,
}

impl CounterexampleReport {
    pub fn max_band_excess(&self) -> f64 {
        self.growth_band.iter().map(|r| r.excess()).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_key_gap(&self) -> f64 {
        self.key_table.iter().map(|r| r.gap()).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_relative_distance(&self) -> f64 {
        self.profile.relative().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Every resolvable witness row is consistent with the computed `d_n`.
    pub fn witness_consistent(&self) -> bool {
        self.witness.iter().filter(|w| w.resolvable).all(|w| w.d_n >= w.lower_bound * (1.0 - 1e-6))
    }
}

/// Growth bounds for `F`: on the bands `J` of half-width `1/10` around the
/// ridges `+-pi/(2 delta)`, the asymptotic size of the rotated `f_1`, and
/// `(pi/2) cos(1/5) r^2` elsewhere.
pub fn growth_band(funcs: &CounterexampleFunctions, radii: &[f64], n_angles: usize) -> Result<Vec<GrowthBandRow>> {
    let p = funcs.params();
    let ridge = PI / (2.0 * p.delta);
    let mut out = Vec::new();
    for &r in radii {
        for k in 0..n_angles {
            let theta = -PI + 2.0 * PI * k as f64 / n_angles as f64;
            let off = (theta.abs() - ridge).abs();
            let in_band = off <= 0.1;
            let bound = if in_band {
                let model = 0.5 * PI * (2.0 * off).cos() * r * r - (p.beta * off).cos() * r.powf(p.beta);
                // e^{model} + O(1), plus the second rotated term
                (model.exp() + 1.0).ln() + std::f64::consts::LN_2
            } else {
                0.5 * PI * (0.2f64).cos() * r * r
            };
            let v = funcs.big_f(Complex64::from_polar(r, theta))?;
            out.push(GrowthBandRow {
                r,
                theta,
                in_band,
                log_abs_f: v.log_mag(),
                bound,
            });
        }
    }
    Ok(out)
}

/// Runs the full experiment. `n_max` bounds both the growth table and the
/// distance profile.
pub fn counterexample_report(
    params: CounterexampleParams,
    n_max: usize,
    x_samples: &[f64],
    q: &QuadratureSpec,
    contour: &ContourSpec,
    strategy: &dyn ProjectionStrategy,
) -> Result<CounterexampleReport> {
    let stage = |name: &'static str| move |e: FockError| FockError::InvalidParams(format!("stage {name}: {e}"));
    let funcs = Arc::new(CounterexampleFunctions::new(params, contour)?);
    let growth = growth_band(&funcs, &[2.0, 3.0, 4.0, 5.0, 6.0, 8.0], 72).map_err(stage("growth-band"))?;

    let f = funcs.big_f_handle();
    let fg = funcs.product_handle();
    let samples = WeightedSamples::new(&*f, q).map_err(stage("sampling"))?;
    let gram = GramMatrix::assemble(&samples, n_max).map_err(stage("gram"))?;

    let (table, err) = strategy.growth(&samples, &gram, DEFAULT_TAU, x_samples);
    let key_truncated_at = match err {
        None => None,
        Some(FockError::DegreeTooHighForQuadrature { degree, .. }) => Some(degree),
        Some(e) => return Err(stage("key-estimate")(e)),
    };
    let key_table: Vec<KeyRow> = table
        .values
        .iter()
        .enumerate()
        .flat_map(|(n, row)| {
            row.iter().zip(x_samples).map(move |(k, &x0)| KeyRow {
                x0,
                n,
                log_k: k.ln(),
                x_gamma: x0.powf(params.gamma),
            })
        })
        .collect();

    let h = samples.weigh(&*fg);
    let sq: Vec<f64> = h.iter().map(|v| v.norm_sqr()).collect();
    let total: f64 = crate::scaled::pairwise_sum_real(&sq);
    let ring: f64 = crate::scaled::pairwise_sum_real(&sq[sq.len() - q.n_angular..]);
    let profile = distance_profile_with(&samples, &gram, &*fg, strategy, DEFAULT_TAU).map_err(stage("distance"))?;

    let mut witness = Vec::new();
    for (n, row) in table.values.iter().enumerate() {
        let Some(fit) = profile.fits.get(n) else { break };
        for (&x0, &k) in x_samples.iter().zip(row) {
            let z = Complex64::new(x0, 0.0);
            let log_abs_h = fg.eval(z).log_mag();
            let log_poly_term = k.ln() + profile.target_norm.ln() + f.eval(z).log_mag();
            let log_kernel_norm = 0.5 * (PI.ln() + PI * x0 * x0);
            let resolvable = log_abs_h > log_poly_term;
            let lower_bound = if resolvable {
                (log_abs_h - log_kernel_norm).exp() * (1.0 - (log_poly_term - log_abs_h).exp())
            } else {
                0.0
            };
            witness.push(WitnessRow {
                x0,
                n,
                log_abs_h,
                log_poly_term,
                log_kernel_norm,
                d_n: fit.distance,
                lower_bound,
                resolvable,
            });
        }
    }

    let g_axis = [2.0, 3.0, 4.0, 5.0]
        .iter()
        .map(|&x: &f64| Ok([x, funcs.big_g(Complex64::new(x, 0.0))?.log_mag(), x.powf(params.sigma_exp)]))
        .collect::<Result<Vec<_>>>()
        .map_err(stage("g-axis"))?;

    Ok(CounterexampleReport {
        params,
        quadrature: *q,
        growth_band: growth,
        key_table,
        key_truncated_at,
        fg_norm: total.sqrt(),
        fg_tail_ratio: ring / total,
        profile,
        witness,
        g_axis,
    })
}

/// Quadrature that resolves the counterexample up to degree 40.
pub fn counterexample_quadrature() -> QuadratureSpec {
    QuadratureSpec {
        r_max: 28.0,
        n_radial: 672,
        n_angular: 1024,
        tail_tol: 1e-12,
    }
}
