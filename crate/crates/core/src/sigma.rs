//! Weierstrass sigma function of the square lattice `Z + iZ`.
//!
//! Inside the central cell `sigma` is evaluated from its Laurent expansion
//! `log(sigma(z)/z) = -sum_k G_{2k} z^{2k} / (2k)`; everywhere else the exact
//! quasi-periodicity
//!
//! `sigma(z + w) = (-1)^{m+n+mn} exp(pi conj(w) z + (pi/2)|w|^2) sigma(z)`, `w = m + in`,
//!
//! moves the argument back to the cell. The quasi-period constants of the
//! square lattice are `eta_1 = pi`, `eta_i = -i pi` (Legendre relation plus
//! the symmetry `sigma(iz) = i sigma(z)`).

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{FockError, Result};
use crate::function::{EntireFnHandle, EntireFunction};
use crate::scaled::ScaledComplex;

/// Largest `2k` kept in the Laurent series. On the central cell
/// `|z|^{2k} <= 2^{-k}`, so 128 leaves the truncation far below rounding.
const MAX_ORDER: usize = 128;

/// A point `m + in` of `Z + iZ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticePoint {
    pub m: i64,
    pub n: i64,
}

impl LatticePoint {
    pub const ORIGIN: LatticePoint = LatticePoint { m: 0, n: 0 };

    pub fn new(m: i64, n: i64) -> Self {
        LatticePoint { m, n }
    }

    /// Nearest lattice point.
    pub fn nearest(z: Complex64) -> Self {
        LatticePoint {
            m: z.re.round() as i64,
            n: z.im.round() as i64,
        }
    }

    /// Exact conversion; fails unless both coordinates are integers.
    pub fn try_from_complex(z: Complex64) -> Result<Self> {
        let p = Self::nearest(z);
        if p.to_complex() == z {
            Ok(p)
        } else {
            Err(FockError::NotLatticePoint(format!("{z}")))
        }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.m as f64, self.n as f64)
    }

    pub fn is_origin(self) -> bool {
        self.m == 0 && self.n == 0
    }

    /// `(-1)^{m+n+mn}`.
    pub fn sign(self) -> f64 {
        if (self.m + self.n + self.m * self.n).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}i", self.m, self.n)
    }
}

/// Distance from `z` to the nearest point of `Z + iZ`.
pub fn dist_to_lattice(z: Complex64) -> f64 {
    (z - LatticePoint::nearest(z).to_complex()).norm()
}

/// Distance from `z` to `Z + iZ` without the origin.
pub fn dist_to_punctured_lattice(z: Complex64) -> f64 {
    let p = LatticePoint::nearest(z);
    if !p.is_origin() {
        return (z - p.to_complex()).norm();
    }
    let mut best = f64::INFINITY;
    for (m, n) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)] {
        best = best.min((z - Complex64::new(m as f64, n as f64)).norm());
    }
    best
}

#[derive(Debug, Clone)]
pub struct SigmaEvaluator {
    /// `eisenstein[k] = G_{2k} = sum' w^{-2k}`; zero unless `4 | 2k`.
    eisenstein: Vec<f64>,
}

impl Default for SigmaEvaluator {
    fn default() -> Self {
        Self::new()
    }
}

impl SigmaEvaluator {
    pub fn new() -> Self {
        let kmax = MAX_ORDER / 2;
        // q-expansion of E4 at tau = i
        let q = (-2.0 * PI).exp();
        let mut e4 = 1.0;
        for n in 1..30u32 {
            let s3: f64 = (1..=n).filter(|d| n % d == 0).map(|d| (d as f64).powi(3)).sum();
            e4 += 240.0 * s3 * q.powi(n as i32);
        }
        let g4 = PI.powi(4) / 45.0 * e4;
        // Laurent coefficients of wp: c_k = (2k-1) G_{2k}
        let mut c = vec![0.0; kmax + 1];
        c[2] = 3.0 * g4;
        for k in 4..=kmax {
            let s: f64 = (2..=k - 2).map(|m| c[m] * c[k - m]).sum();
            c[k] = 3.0 / ((2 * k + 1) as f64 * (k - 3) as f64) * s;
        }
        let eisenstein = c.iter().enumerate().map(|(k, &ck)| if k < 2 { 0.0 } else { ck / (2 * k - 1) as f64 }).collect();
        SigmaEvaluator { eisenstein }
    }

    /// Process-wide shared instance.
    pub fn shared() -> &'static SigmaEvaluator {
        static INSTANCE: OnceLock<SigmaEvaluator> = OnceLock::new();
        INSTANCE.get_or_init(SigmaEvaluator::new)
    }

    /// Lattice sum `G_{2k}`.
    pub fn eisenstein(&self, k: usize) -> f64 {
        self.eisenstein.get(k).copied().unwrap_or(0.0)
    }

    /// `(eta_1, eta_i)` in the convention `sigma(z + w) = -exp(eta_w (z + w/2)) sigma(z)`.
    pub fn quasi_period_constants(&self) -> (Complex64, Complex64) {
        (Complex64::new(PI, 0.0), Complex64::new(0.0, -PI))
    }

    /// `log(sigma(z)/z)` for `z` in the central cell.
    fn log_sigma0_cell(&self, z: Complex64) -> Complex64 {
        let u = z * z * z * z;
        let mut acc = Complex64::new(0.0, 0.0);
        // Horner over m in G_{4m} u^m / (4m)
        let mmax = MAX_ORDER / 4;
        for m in (1..=mmax).rev() {
            acc = acc * u + self.eisenstein[2 * m] / (4 * m) as f64;
        }
        -(acc * u)
    }

    fn reduce(z: Complex64) -> (LatticePoint, Complex64) {
        let w = LatticePoint::nearest(z);
        (w, z - w.to_complex())
    }

    /// Log of the quasi-periodicity factor carrying the cell value at `z0` to `z0 + w`.
    fn log_factor(w: LatticePoint, z0: Complex64) -> Complex64 {
        let wc = w.to_complex();
        let phase = if w.sign() < 0.0 { PI } else { 0.0 };
        PI * wc.conj() * z0 + 0.5 * PI * wc.norm_sqr() + Complex64::new(0.0, phase)
    }

    pub fn sigma(&self, z: Complex64) -> ScaledComplex {
        let (w, z0) = Self::reduce(z);
        if z0 == Complex64::new(0.0, 0.0) {
            return ScaledComplex::ZERO;
        }
        ScaledComplex::exp(Self::log_factor(w, z0) + self.log_sigma0_cell(z0)).mul_complex(z0)
    }

    /// `sigma(z) / z`, with value 1 at the origin.
    pub fn sigma0(&self, z: Complex64) -> ScaledComplex {
        let (w, z0) = Self::reduce(z);
        if w.is_origin() {
            return ScaledComplex::exp(self.log_sigma0_cell(z0));
        }
        self.sigma(z) / ScaledComplex::from_complex(z)
    }

    /// Weierstrass zeta `sigma'/sigma` (infinite at lattice points).
    pub fn zeta(&self, z: Complex64) -> Complex64 {
        let (w, z0) = Self::reduce(z);
        PI * w.to_complex().conj() + 1.0 / z0 + self.zeta0_cell(z0)
    }

    /// Derivative of `log(sigma(z)/z)` in the central cell.
    fn zeta0_cell(&self, z: Complex64) -> Complex64 {
        let z2 = z * z;
        let u = z2 * z2;
        let mut acc = Complex64::new(0.0, 0.0);
        let mmax = MAX_ORDER / 4;
        for m in (1..=mmax).rev() {
            acc = acc * u + self.eisenstein[2 * m];
        }
        -(acc * z2 * z)
    }

    /// `sigma(z) / (z - w)` for a lattice point `w`, without cancellation when
    /// `w` is the lattice point nearest to `z`.
    pub fn sigma_over_factor(&self, z: Complex64, w: LatticePoint) -> ScaledComplex {
        let (near, z0) = Self::reduce(z);
        if near == w {
            return ScaledComplex::exp(Self::log_factor(w, z0) + self.log_sigma0_cell(z0));
        }
        self.sigma(z) / ScaledComplex::from_complex(z - w.to_complex())
    }

    /// `sigma'(w) = (-1)^{m+n+mn} e^{pi |w|^2 / 2}` at a lattice point.
    pub fn sigma_prime_at(&self, w: LatticePoint) -> ScaledComplex {
        ScaledComplex::from_log_phase(0.5 * PI * w.to_complex().norm_sqr(), if w.sign() < 0.0 { PI } else { 0.0 })
    }

    /// `sigma0'(w) = sigma'(w)/w` for `w` in the punctured lattice.
    pub fn sigma0_prime_at(&self, w: Complex64) -> Result<ScaledComplex> {
        let p = LatticePoint::try_from_complex(w)?;
        if p.is_origin() {
            return Err(FockError::NotLatticePoint("0 (the origin is excluded)".into()));
        }
        Ok(self.sigma_prime_at(p) / ScaledComplex::from_complex(w))
    }

    /// `sigma0'(z)` at an arbitrary point.
    pub fn sigma0_prime(&self, z: Complex64) -> ScaledComplex {
        let (w, z0) = Self::reduce(z);
        if w.is_origin() {
            return ScaledComplex::exp(self.log_sigma0_cell(z0)).mul_complex(self.zeta0_cell(z0));
        }
        if z0 == Complex64::new(0.0, 0.0) {
            return self.sigma_prime_at(w) / ScaledComplex::from_complex(z);
        }
        // sigma0' = sigma0 (zeta - 1/z); zeta - 1/z written without the 1/z0 pole cancelling
        let logd = PI * w.to_complex().conj() + 1.0 / z0 + self.zeta0_cell(z0) - 1.0 / z;
        self.sigma0(z).mul_complex(logd)
    }
}

/// `sigma` as an entire-function handle.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sigma;

impl EntireFunction for Sigma {
    fn eval(&self, z: Complex64) -> ScaledComplex {
        SigmaEvaluator::shared().sigma(z)
    }
    fn label(&self) -> String {
        "sigma".into()
    }
    fn is_conjugation_symmetric(&self) -> bool {
        true
    }
}

/// `sigma0 = sigma / z` as an entire-function handle.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sigma0;

impl EntireFunction for Sigma0 {
    fn eval(&self, z: Complex64) -> ScaledComplex {
        SigmaEvaluator::shared().sigma0(z)
    }
    fn label(&self) -> String {
        "sigma0".into()
    }
    fn is_conjugation_symmetric(&self) -> bool {
        true
    }
}

pub fn sigma_handle() -> EntireFnHandle {
    Arc::new(Sigma)
}

pub fn sigma0_handle() -> EntireFnHandle {
    Arc::new(Sigma0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Disc-truncated Weierstrass product. The exponential convergence factors
    /// and the `z^3` tail sum vanish over a disc by the square symmetry; the
    /// `z^4` tail uses `G4 = Gamma(1/4)^8 / (960 pi^2)` minus the partial sum.
    fn product_oracle(z: Complex64, radius: f64) -> Complex64 {
        let r = radius as i64;
        let g4 = statrs::function::gamma::gamma(0.25).powi(8) / (960.0 * PI * PI);
        let mut inner4 = Vec::new();
        let mut terms = Vec::new();
        for m in -r..=r {
            for n in -r..=r {
                let w = Complex64::new(m as f64, n as f64);
                if (m == 0 && n == 0) || w.norm() > radius {
                    continue;
                }
                let t = z / w;
                terms.push((Complex64::new(1.0, 0.0) - t).ln() + t + 0.5 * t * t);
                inner4.push(w.powi(-4));
            }
        }
        let tail4 = g4 - crate::scaled::pairwise_sum(&inner4).re;
        z * (crate::scaled::pairwise_sum(&terms) - z.powi(4) * tail4 / 4.0).exp()
    }

    #[test]
    fn g4_matches_gamma_closed_form() {
        let s = SigmaEvaluator::new();
        let g = statrs::function::gamma::gamma(0.25);
        let exact = g.powi(8) / (960.0 * PI * PI);
        assert!((s.eisenstein(2) - exact).abs() < 1e-13 * exact);
        // G8 = 3 G4^2 / 7 for g3 = 0
        assert!((s.eisenstein(4) - 3.0 * exact * exact / 7.0).abs() < 1e-12 * s.eisenstein(4));
        assert_eq!(s.eisenstein(3), 0.0);
    }

    #[test]
    fn matches_truncated_product() {
        let s = SigmaEvaluator::shared();
        for z in [Complex64::new(0.5, 0.0), Complex64::new(0.3, 0.4), Complex64::new(1.7, -0.6)] {
            let oracle = product_oracle(z, 200.0);
            let v = s.sigma(z).to_complex();
            assert!((v - oracle).norm() < 1e-9 * oracle.norm(), "z = {z}: {v} vs {oracle}");
        }
    }

    #[test]
    fn vanishes_exactly_on_the_lattice() {
        let s = SigmaEvaluator::shared();
        assert!(s.sigma(Complex64::new(0.0, 0.0)).is_zero());
        assert!(s.sigma(Complex64::new(1.0, 1.0)).is_zero());
        assert!(s.sigma0(Complex64::new(2.0, 1.0)).is_zero());
        assert_eq!(s.sigma0(Complex64::new(0.0, 0.0)).to_complex(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn derivative_at_one_matches_finite_difference() {
        let s = SigmaEvaluator::shared();
        let h = 1e-5;
        let one = Complex64::new(1.0, 0.0);
        let fd = (s.sigma0(one + h).to_complex() - s.sigma0(one - h).to_complex()) / (2.0 * h);
        let d = s.sigma0_prime_at(one).unwrap().to_complex();
        assert!((fd - d).norm() < 1e-6 * d.norm());
        assert!((d - s.sigma_prime_at(LatticePoint::new(1, 0)).to_complex()).norm() < 1e-15);
        assert!(matches!(s.sigma0_prime_at(Complex64::new(0.5, 0.0)), Err(FockError::NotLatticePoint(_))));
    }

    #[test]
    fn general_derivative_matches_finite_difference() {
        let s = SigmaEvaluator::shared();
        let h = 1e-6;
        for z in [Complex64::new(0.2, 0.1), Complex64::new(2.3, -1.4), Complex64::new(-3.1, 0.45)] {
            let fd = (s.sigma0(z + h).to_complex() - s.sigma0(z - h).to_complex()) / (2.0 * h);
            let d = s.sigma0_prime(z).to_complex();
            assert!((fd - d).norm() < 1e-7 * d.norm().max(1.0), "{z}");
        }
    }

    #[test]
    fn quasi_period_constants_follow_from_shift() {
        let s = SigmaEvaluator::shared();
        let (e1, ei) = s.quasi_period_constants();
        let z = Complex64::new(0.31, -0.22);
        for (w, eta) in [(Complex64::new(1.0, 0.0), e1), (Complex64::new(0.0, 1.0), ei)] {
            let lhs = s.sigma(z + w).to_complex();
            let rhs = -(eta * (z + w / 2.0)).exp() * s.sigma(z).to_complex();
            assert!((lhs - rhs).norm() < 1e-13 * rhs.norm());
        }
    }

    proptest! {
        #[test]
        fn modulus_is_lattice_periodic(r in 0.0f64..4.0, t in 0.0f64..6.283, gen in 0usize..2) {
            let s = SigmaEvaluator::shared();
            let z = Complex64::from_polar(r, t);
            let w = if gen == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 1.0) };
            let a = s.sigma(z + w).log_mag() - 0.5 * PI * (z + w).norm_sqr();
            let b = s.sigma(z).log_mag() - 0.5 * PI * z.norm_sqr();
            prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn odd_and_conjugation_symmetric(x in -5.0f64..5.0, y in -5.0f64..5.0) {
            let s = SigmaEvaluator::shared();
            let z = Complex64::new(x, y);
            let v = s.sigma(z);
            prop_assert!(v.rel_diff(-s.sigma(-z)) < 1e-12);
            prop_assert!(v.conj().rel_diff(s.sigma(z.conj())) < 1e-12);
            prop_assert!((s.sigma(Complex64::new(0.0, 1.0) * z).rel_diff(v.mul_complex(Complex64::new(0.0, 1.0)))) < 1e-12);
        }
    }
}
