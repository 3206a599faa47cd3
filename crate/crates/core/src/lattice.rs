//! Lattice expansions on `Z + iZ`: the biorthogonal system `g_w`, expansion
//! coefficients, the continuous and discrete Cauchy transforms and the
//! Lagrange interpolation series.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::divided::{divide_by_linear, CircleInterpolant};
use crate::error::{FockError, Result};
use crate::fock::{norm, pairing};
use crate::function::{EntireFnHandle, EntireFunction};
use crate::quadrature::{composite_gauss_legendre, PolarGrid, QuadratureSpec, PANEL_ORDER};
use crate::scaled::{pairwise_sum, ScaledComplex};
use crate::sigma::{dist_to_lattice, dist_to_punctured_lattice, LatticePoint, SigmaEvaluator};

/// Smallest admissible distance from an evaluation point to the lattice.
pub const LATTICE_CLEARANCE: f64 = 0.05;

/// Lattice points in a closed disc around the origin, minus an excluded set,
/// ordered by modulus and then argument.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedLattice {
    pub radius: f64,
    pub excluded: Vec<LatticePoint>,
    pub points: Vec<LatticePoint>,
}

impl TruncatedLattice {
    /// `{w in Z + iZ \ {0} : |w| <= radius}`.
    pub fn new(radius: f64) -> Self {
        Self::with_excluded(radius, vec![LatticePoint::ORIGIN])
    }

    /// All lattice points of the disc, origin included.
    pub fn full(radius: f64) -> Self {
        Self::with_excluded(radius, Vec::new())
    }

    pub fn with_excluded(radius: f64, excluded: Vec<LatticePoint>) -> Self {
        let r = radius.floor() as i64;
        let r2 = radius * radius;
        let mut points: Vec<LatticePoint> = (-r..=r)
            .flat_map(|m| (-r..=r).map(move |n| LatticePoint::new(m, n)))
            .filter(|p| ((p.m * p.m + p.n * p.n) as f64) <= r2 && !excluded.contains(p))
            .collect();
        points.sort_by(|a, b| {
            let ka = a.m * a.m + a.n * a.n;
            let kb = b.m * b.m + b.n * b.n;
            ka.cmp(&kb).then_with(|| {
                let ta = (a.n as f64).atan2(a.m as f64);
                let tb = (b.n as f64).atan2(b.m as f64);
                ta.total_cmp(&tb)
            })
        });
        TruncatedLattice { radius, excluded, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn complex_points(&self) -> Vec<Complex64> {
        self.points.iter().map(|p| p.to_complex()).collect()
    }
}

/// `g_w = sigma0 / (sigma0'(w) (. - w))`.
#[derive(Debug, Clone)]
pub struct Biorthogonal {
    w: LatticePoint,
    /// `1 / sigma0'(w)`.
    inv_deriv: ScaledComplex,
}

impl EntireFunction for Biorthogonal {
    fn eval(&self, z: Complex64) -> ScaledComplex {
        let s = SigmaEvaluator::shared();
        if LatticePoint::nearest(z) == self.w {
            // sigma(z)/(z - w) is computed without cancellation, then divided by z
            return s.sigma_over_factor(z, self.w) / ScaledComplex::from_complex(z) * self.inv_deriv;
        }
        s.sigma0(z) / ScaledComplex::from_complex(z - self.w.to_complex()) * self.inv_deriv
    }
    fn label(&self) -> String {
        format!("g[{}]", self.w)
    }
    fn is_conjugation_symmetric(&self) -> bool {
        self.w.n == 0
    }
}

pub fn biorthogonal(w: LatticePoint) -> Result<Biorthogonal> {
    let s = SigmaEvaluator::shared();
    let d = s.sigma0_prime_at(w.to_complex())?;
    Ok(Biorthogonal { w, inv_deriv: d.recip() })
}

pub fn biorthogonal_g(w: Complex64) -> Result<EntireFnHandle> {
    let p = LatticePoint::try_from_complex(w)?;
    Ok(Arc::new(biorthogonal(p)?))
}

/// Per-lattice-point coefficients with summability diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSequence {
    pub points: Vec<LatticePoint>,
    pub values: Vec<Complex64>,
    /// `sum |v_w|^2 / log(1 + |w|)`.
    pub weighted_sum: f64,
    /// Empirical `C` in `|d_w| <= C e^{-(pi/2)|w|^2} log^{1/2}(2 + |w|)`.
    pub decay_constant: f64,
}

impl CoeffSequence {
    fn new(points: Vec<LatticePoint>, values: Vec<Complex64>, d: &[ScaledComplex]) -> Self {
        let weighted: Vec<f64> = points
            .iter()
            .zip(&values)
            .map(|(p, v)| v.norm_sqr() / (1.0 + p.to_complex().norm()).ln())
            .collect();
        let decay_constant = points
            .iter()
            .zip(d)
            .map(|(p, dw)| {
                let r = p.to_complex().norm();
                (dw.log_mag() + 0.5 * PI * r * r - 0.5 * (2.0 + r).ln().ln()).exp()
            })
            .fold(0.0, f64::max);
        CoeffSequence {
            points,
            values,
            weighted_sum: crate::scaled::pairwise_sum_real(&weighted),
            decay_constant,
        }
    }
}

/// `d_w = <g_w, F1>` over the lattice, in scaled form.
///
/// Exact when `F1` is a multiple of a reproducing kernel; otherwise one
/// quadrature pass shared by all `w`:
/// `d_w = (1/sigma0'(w)) (1/pi) \int sigma0(z) conj(F1(z)) / (z - w) dnu`.
pub fn d_coefficients(f1: &dyn EntireFunction, lattice: &TruncatedLattice, q: &QuadratureSpec) -> Result<Vec<ScaledComplex>> {
    let s = SigmaEvaluator::shared();
    if let Some((mu, c)) = f1.as_kernel() {
        return lattice
            .points
            .iter()
            .map(|&w| Ok(biorthogonal(w)?.eval(mu).mul_complex(c.conj())))
            .collect();
    }
    q.validate()?;
    let grid = q.grid();
    let nodes = grid.nodes();
    let weights = grid.weights();
    let base: Vec<ScaledComplex> = nodes
        .par_iter()
        .zip(&weights)
        .map(|(&z, &wt)| (s.sigma0(z) * f1.eval(z).conj()).scale_exp(-PI * z.norm_sqr()).mul_complex(Complex64::new(wt / PI, 0.0)))
        .collect();
    let top = base.iter().map(|v| v.exponent()).max().unwrap_or(i64::MIN);
    if top == i64::MIN {
        return Ok(vec![ScaledComplex::ZERO; lattice.len()]);
    }
    let aligned: Vec<Complex64> = base.iter().map(|v| v.to_complex_at(top)).collect();
    let unit = ScaledComplex::from_log_phase(top as f64 * std::f64::consts::LN_2, 0.0);
    lattice
        .points
        .par_iter()
        .map(|&w| {
            let wc = w.to_complex();
            let terms: Vec<Complex64> = nodes.iter().zip(&aligned).map(|(z, a)| a / (z - wc)).collect();
            let sum = grid.reduce_checked_complex(&terms)?;
            let deriv = s.sigma0_prime_at(wc)?;
            Ok(ScaledComplex::from_complex(sum) * unit / deriv)
        })
        .collect()
}

/// `d_w = <g_w, F1>` as a coefficient sequence.
pub fn coeff_d(f1: &dyn EntireFunction, lattice: &TruncatedLattice, q: &QuadratureSpec) -> Result<CoeffSequence> {
    let d = d_coefficients(f1, lattice, q)?;
    let values = d.iter().map(|v| v.to_complex()).collect();
    Ok(CoeffSequence::new(lattice.points.clone(), values, &d))
}

/// `c_w = F2(w) <g_w, F1>`.
pub fn coeff_cd(f1: &dyn EntireFunction, f2: &dyn EntireFunction, lattice: &TruncatedLattice, q: &QuadratureSpec) -> Result<CoeffSequence> {
    let d = d_coefficients(f1, lattice, q)?;
    let values = lattice.points.iter().zip(&d).map(|(w, dw)| (f2.eval(w.to_complex()) * *dw).to_complex()).collect();
    Ok(CoeffSequence::new(lattice.points.clone(), values, &d))
}

/// Bound on `sum_{|w| > R} C e^{-(pi/2)|w|^2} log^{1/2}(2+|w|) |a(w)|` over
/// shells of lattice points beyond the truncation radius; `log_a` is `log|a|`.
pub fn lattice_tail_bound(decay_constant: f64, radius: f64, log_a: impl Fn(Complex64) -> f64) -> f64 {
    let mut total = 0.0;
    let mut r_in = radius;
    loop {
        let r_out = r_in + 2.0;
        let ring = TruncatedLattice::full(r_out);
        let shell: f64 = ring
            .points
            .iter()
            .map(|p| p.to_complex())
            .filter(|w| w.norm() > r_in)
            .map(|w| {
                let r = w.norm();
                (-0.5 * PI * r * r + 0.5 * (2.0 + r).ln().ln() + log_a(w)).exp()
            })
            .sum();
        total += decay_constant * shell;
        r_in = r_out;
        if (shell * decay_constant <= 1e-6 * total && r_in > radius + 6.0) || r_in > radius + 60.0 || total == 0.0 && r_in > radius + 6.0 {
            break;
        }
    }
    total
}

fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

/// Partition of unity around the singular point: `1` for `s <= INNER`, `0` for `s >= OUTER`.
const INNER: f64 = 0.2;
const OUTER: f64 = 1.0;

fn cutoff(s: f64) -> f64 {
    1.0 - smooth_step((s - INNER) / (OUTER - INNER))
}

/// Values of the continuous Cauchy transform at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchyValue {
    /// `I(F1, F2)(z)` from the definition `<A(F2, z), F1> / sigma0(z)`.
    pub value: Complex64,
    /// The same quantity from the two singular integrals.
    pub two_integral: Complex64,
    /// `(1/pi) \int F2 conj(F1) / (z - zeta) dnu`.
    pub i1: Complex64,
    /// `(1/pi) \int sigma0 conj(F1) / (z - zeta) dnu`.
    pub i2: Complex64,
}

impl CauchyValue {
    pub fn route_gap(&self) -> f64 {
        (self.value - self.two_integral).norm()
    }
}

/// `I(F1, F2)(z) = <A(F2, z), F1> / sigma0(z)`
/// `= (1/pi) \int F2 conj(F1)/(z - zeta) dnu - (F2(z)/sigma0(z)) (1/pi) \int sigma0 conj(F1)/(z - zeta) dnu`,
/// normalized so that `z I(z) -> <F2, F1>`.
pub struct CauchyTransform {
    f1: EntireFnHandle,
    f2: EntireFnHandle,
    grid: PolarGrid,
    nodes: Vec<Complex64>,
    weights: Vec<f64>,
    /// `conj(F1) e^{-pi|zeta|^2} / pi` at the nodes.
    psi1: Vec<ScaledComplex>,
    f2_vals: Vec<ScaledComplex>,
    s0_vals: Vec<ScaledComplex>,
}

impl std::fmt::Debug for CauchyTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CauchyTransform({}, {})", self.f1.label(), self.f2.label())
    }
}

fn psi(f1: &dyn EntireFunction, z: Complex64) -> ScaledComplex {
    f1.eval(z).conj().scale_exp(-PI * z.norm_sqr()).mul_complex(Complex64::new(1.0 / PI, 0.0))
}

impl CauchyTransform {
    pub fn new(f1: EntireFnHandle, f2: EntireFnHandle, q: &QuadratureSpec) -> Result<Self> {
        q.validate()?;
        let grid = q.grid();
        let nodes = grid.nodes();
        let weights = grid.weights();
        let s = SigmaEvaluator::shared();
        let psi1 = nodes.par_iter().map(|&z| psi(&*f1, z)).collect();
        let f2_vals = nodes.par_iter().map(|&z| f2.eval(z)).collect();
        let s0_vals = nodes.par_iter().map(|&z| s.sigma0(z)).collect();
        Ok(CauchyTransform {
            f1,
            f2,
            grid,
            nodes,
            weights,
            psi1,
            f2_vals,
            s0_vals,
        })
    }

    fn check_point(z: Complex64) -> Result<()> {
        let d = dist_to_punctured_lattice(z);
        if d < LATTICE_CLEARANCE {
            return Err(FockError::NearLatticeZero {
                distance: d,
                minimum: LATTICE_CLEARANCE,
            });
        }
        Ok(())
    }

    /// `(I1, I2)` by a partition of unity: a local polar grid centred at `z`
    /// absorbs the `1/(z - zeta)` singularity, the global grid handles the rest.
    pub fn singular_integrals(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let outer = |vals: &[ScaledComplex]| -> Result<ScaledComplex> {
            let terms: Vec<ScaledComplex> = (0..self.nodes.len())
                .into_par_iter()
                .map(|k| {
                    let zeta = self.nodes[k];
                    let c = 1.0 - cutoff((zeta - z).norm());
                    if c == 0.0 {
                        return ScaledComplex::ZERO;
                    }
                    (vals[k] * self.psi1[k]).mul_complex(self.weights[k] * c / (z - zeta))
                })
                .collect();
            self.grid.reduce_checked(&terms)
        };
        let o1 = outer(&self.f2_vals)?;
        let o2 = outer(&self.s0_vals)?;

        // local part: zeta = z + s e^{i t}, dm / (z - zeta) = -e^{-i t} ds dt
        let panels: Vec<f64> = (0..=8).map(|k| OUTER * k as f64 / 8.0).collect();
        let (ss, sw) = composite_gauss_legendre(&panels, PANEL_ORDER);
        let n_t = 128;
        let s = SigmaEvaluator::shared();
        let local: Vec<(ScaledComplex, ScaledComplex)> = (0..ss.len() * n_t)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / n_t, idx % n_t);
                let t = 2.0 * PI * j as f64 / n_t as f64;
                let e = Complex64::from_polar(1.0, t);
                let zeta = z + e * ss[i];
                let w = -e.conj() * sw[i] * cutoff(ss[i]) * (2.0 * PI / n_t as f64);
                let p = psi(&*self.f1, zeta);
                ((self.f2.eval(zeta) * p).mul_complex(w), (s.sigma0(zeta) * p).mul_complex(w))
            })
            .collect();
        let l1 = crate::scaled::scaled_sum(&local.iter().map(|v| v.0).collect::<Vec<_>>());
        let l2 = crate::scaled::scaled_sum(&local.iter().map(|v| v.1).collect::<Vec<_>>());
        Ok(((o1 + l1).to_complex(), (o2 + l2).to_complex()))
    }

    pub fn eval(&self, z: Complex64) -> Result<CauchyValue> {
        Self::check_point(z)?;
        let s = SigmaEvaluator::shared();
        let ratio = self.f2.eval(z) / s.sigma0(z);

        let (i1, i2) = self.singular_integrals(z)?;
        let two_integral = (ScaledComplex::from_complex(i1) - ratio * ScaledComplex::from_complex(i2)).to_complex();

        // definition: B(zeta) = A(F2, z)(zeta) / sigma0(z) = (F2(zeta) - ratio sigma0(zeta)) / (z - zeta)
        let f2 = self.f2.clone();
        let circle = CircleInterpolant::new(z, 0.3, |zeta| {
            (f2.eval(zeta) - ratio * s.sigma0(zeta)) / ScaledComplex::from_complex(z - zeta)
        });
        let terms: Vec<ScaledComplex> = (0..self.nodes.len())
            .into_par_iter()
            .map(|k| {
                let zeta = self.nodes[k];
                let b = if circle.covers(zeta) {
                    circle.eval(zeta)
                } else {
                    (self.f2_vals[k] - ratio * self.s0_vals[k]) / ScaledComplex::from_complex(z - zeta)
                };
                (b * self.psi1[k]).mul_complex(Complex64::new(self.weights[k], 0.0))
            })
            .collect();
        let value = self.grid.reduce_checked(&terms)?.to_complex();
        Ok(CauchyValue {
            value,
            two_integral,
            i1,
            i2,
        })
    }
}

pub fn cauchy_i(f1: EntireFnHandle, f2: EntireFnHandle, z: Complex64, q: &QuadratureSpec) -> Result<CauchyValue> {
    CauchyTransform::new(f1, f2, q)?.eval(z)
}

/// Lattice sum together with an error bar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSum {
    pub value: Complex64,
    pub tail_bound: f64,
}

/// Both sides of `sum_w c_w [1/(z-w) + 1/(w-mu)] = I(F1,F2)(z) + <F2/(.-mu), F1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParsevalReport {
    pub lhs: Complex64,
    pub cauchy: CauchyValue,
    pub quotient_pairing: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
    /// Lattice truncation bound plus the quadrature floor.
    pub tail_bound: f64,
    pub lattice_tail: f64,
    pub quadrature_floor: f64,
}

/// Relative size test for a claimed zero `mu` of `f`: `|f(mu)| <= 1e-8 ||f|| ||k_mu||`.
pub fn check_zero(f: &dyn EntireFunction, mu: Complex64, q: &QuadratureSpec) -> Result<()> {
    let v = f.eval(mu);
    let nf = norm(f, q)?;
    let nk = (PI * (PI * mu.norm_sqr()).exp()).sqrt();
    let residual = v.abs() / (nf * nk);
    if residual > 1e-8 {
        return Err(FockError::NotAZero { residual });
    }
    Ok(())
}

pub fn parseval_sum(
    f1: EntireFnHandle,
    f2: EntireFnHandle,
    mu: Complex64,
    z: Complex64,
    lattice: &TruncatedLattice,
    q: &QuadratureSpec,
) -> Result<ParsevalReport> {
    check_zero(&*f2, mu, q)?;
    CauchyTransform::check_point(z)?;
    let d = d_coefficients(&*f1, lattice, q)?;
    let terms: Vec<Complex64> = lattice
        .points
        .iter()
        .zip(&d)
        .map(|(p, dw)| {
            let w = p.to_complex();
            (f2.eval(w) * *dw).to_complex() * (1.0 / (z - w) + 1.0 / (w - mu))
        })
        .collect();
    let lhs = pairwise_sum(&terms);
    let coeffs = CoeffSequence::new(lattice.points.clone(), terms.clone(), &d);
    let lattice_tail = lattice_tail_bound(coeffs.decay_constant, lattice.radius, |w| {
        f2.eval(w).log_mag() + (1.0 / (z - w) + 1.0 / (w - mu)).norm().ln()
    });

    let cauchy = CauchyTransform::new(f1.clone(), f2.clone(), q)?.eval(z)?;
    let quotient = divide_by_linear(f2, mu, true);
    let quotient_pairing = pairing(&*quotient, &*f1, q)?.to_complex();
    let rhs = cauchy.value + quotient_pairing;
    let scale: f64 = terms.iter().map(|t| t.norm()).sum::<f64>() + rhs.norm();
    let quadrature_floor = cauchy.route_gap() + 1e-13 * scale;
    Ok(ParsevalReport {
        lhs,
        cauchy,
        quotient_pairing,
        rhs,
        residual: (lhs - rhs).norm(),
        tail_bound: lattice_tail + quadrature_floor,
        lattice_tail,
        quadrature_floor,
    })
}

fn check_zero_local(f: &dyn EntireFunction, lambda: Complex64) -> Result<()> {
    let scale = (0..16)
        .map(|k| f.eval(lambda + Complex64::from_polar(1.0, PI * k as f64 / 8.0)).abs())
        .fold(0.0, f64::max);
    let residual = f.eval(lambda).abs() / scale;
    if residual > 1e-8 {
        return Err(FockError::NotAZero { residual });
    }
    Ok(())
}

/// `C(z) = sum_w d_w F2(w) F3(w) / ((z - w)(w - l1)(w - l2))`.
#[allow(clippy::too_many_arguments)]
pub fn weighted_cauchy_sum(
    f1: &dyn EntireFunction,
    f2: &dyn EntireFunction,
    f3: &dyn EntireFunction,
    l1: Complex64,
    l2: Complex64,
    z: Complex64,
    lattice: &TruncatedLattice,
    q: &QuadratureSpec,
) -> Result<LatticeSum> {
    if l1 == l2 {
        return Err(FockError::InvalidParams("the two zeros must be distinct".into()));
    }
    check_zero_local(f3, l1)?;
    check_zero_local(f3, l2)?;
    CauchyTransform::check_point(z)?;
    let d = d_coefficients(f1, lattice, q)?;
    let weight = |w: Complex64| 1.0 / ((z - w) * (w - l1) * (w - l2));
    let terms: Vec<Complex64> = lattice
        .points
        .iter()
        .zip(&d)
        .map(|(p, dw)| {
            let w = p.to_complex();
            (f2.eval(w) * f3.eval(w) * *dw).to_complex() * weight(w)
        })
        .collect();
    let seq = CoeffSequence::new(lattice.points.clone(), terms.clone(), &d);
    let tail = lattice_tail_bound(seq.decay_constant, lattice.radius, |w| {
        f2.eval(w).log_mag() + f3.eval(w).log_mag() + weight(w).norm().ln()
    });
    Ok(LatticeSum {
        value: pairwise_sum(&terms),
        tail_bound: tail,
    })
}

/// `sum_w w^k F(w) / (sigma'(w)(z - w))`, which approximates `z^k F(z) / sigma(z)`.
pub fn lagrange_sum(f: &dyn EntireFunction, k: u32, z: Complex64, lattice: &TruncatedLattice) -> Result<LatticeSum> {
    let d = dist_to_lattice(z);
    if d < LATTICE_CLEARANCE {
        return Err(FockError::NearLatticeZero {
            distance: d,
            minimum: LATTICE_CLEARANCE,
        });
    }
    let s = SigmaEvaluator::shared();
    let term = |p: LatticePoint| -> ScaledComplex {
        let w = p.to_complex();
        ScaledComplex::from_complex(w).powi(k as i32) * f.eval(w) / s.sigma_prime_at(p) / ScaledComplex::from_complex(z - w)
    };
    let terms: Vec<ScaledComplex> = lattice.points.iter().map(|&p| term(p)).collect();
    // the tail terms are explicit, so the bound sums them over shells
    let tail = lattice_tail_bound(1.0, lattice.radius, |w| {
        let r = w.norm();
        term(LatticePoint::nearest(w)).log_mag() + 0.5 * PI * r * r - 0.5 * (2.0 + r).ln().ln()
    });
    Ok(LatticeSum {
        value: crate::scaled::scaled_sum(&terms).to_complex(),
        tail_bound: tail,
    })
}

/// `sup_c #(points in D(c, R)) / (pi R^2)` over centres on a grid of spacing `R/8`.
pub fn upper_density(points: &[Complex64], r: f64) -> f64 {
    if points.is_empty() || r <= 0.0 {
        return 0.0;
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p.re);
        x1 = x1.max(p.re);
        y0 = y0.min(p.im);
        y1 = y1.max(p.im);
    }
    let h = r / 8.0;
    let nx = ((x1 - x0) / h).ceil() as usize + 1;
    let ny = ((y1 - y0) / h).ceil() as usize + 1;
    let best = (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let c = Complex64::new(x0 + (idx % nx) as f64 * h, y0 + (idx / nx) as f64 * h);
            points.iter().filter(|p| (*p - c).norm() <= r).count()
        })
        .max()
        .unwrap_or(0);
    best as f64 / (PI * r * r)
}
