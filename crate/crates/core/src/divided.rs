//! Removable singularities of entire quotients.
//!
//! For an entire `A` known only through a formula singular at `z0`
//! (such as `N(zeta) / (z0 - zeta)` with `N(z0) = 0`), values near `z0` come
//! from the Cauchy integral over a circle around `z0` evaluated by the
//! trapezoid rule, which converges geometrically for interior points.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::function::{EntireFnHandle, EntireFunction};
use crate::scaled::ScaledComplex;
use crate::sigma::SigmaEvaluator;

/// Nodes on the auxiliary circle.
const CIRCLE_NODES: usize = 64;

/// Values of an entire function on a circle around a centre, used to
/// interpolate inside half the radius.
#[derive(Debug, Clone)]
pub struct CircleInterpolant {
    centre: Complex64,
    radius: f64,
    nodes: Vec<Complex64>,
    values: Vec<Complex64>,
    exp2: i64,
}

impl CircleInterpolant {
    pub fn new(centre: Complex64, radius: f64, f: impl Fn(Complex64) -> ScaledComplex) -> Self {
        let nodes: Vec<Complex64> = (0..CIRCLE_NODES)
            .map(|j| centre + Complex64::from_polar(radius, 2.0 * PI * (j as f64 + 0.5) / CIRCLE_NODES as f64))
            .collect();
        let raw: Vec<ScaledComplex> = nodes.iter().map(|&s| f(s)).collect();
        let exp2 = raw.iter().map(|v| v.exponent()).max().unwrap_or(i64::MIN).max(-100_000);
        let values = raw.iter().map(|v| v.to_complex_at(exp2)).collect();
        CircleInterpolant {
            centre,
            radius,
            nodes,
            values,
            exp2,
        }
    }

    /// `true` when `zeta` is close enough to the centre to need the interpolant.
    pub fn covers(&self, zeta: Complex64) -> bool {
        (zeta - self.centre).norm() < 0.5 * self.radius
    }

    pub fn eval(&self, zeta: Complex64) -> ScaledComplex {
        let mut acc = Complex64::new(0.0, 0.0);
        for (s, v) in self.nodes.iter().zip(&self.values) {
            acc += v * (s - self.centre) / (s - zeta);
        }
        ScaledComplex::from_complex(acc / CIRCLE_NODES as f64) * ScaledComplex::from_log_phase(self.exp2 as f64 * std::f64::consts::LN_2, 0.0)
    }
}

/// `(f - f(mu)) / (. - mu)`; `f(mu)` is replaced by zero when `snap` is set.
#[derive(Debug, Clone)]
pub struct QuotientByLinear {
    inner: EntireFnHandle,
    mu: Complex64,
    f_mu: ScaledComplex,
    circle: CircleInterpolant,
}

impl QuotientByLinear {
    pub fn new(inner: EntireFnHandle, mu: Complex64, snap: bool) -> Self {
        let f_mu = if snap { ScaledComplex::ZERO } else { inner.eval(mu) };
        let direct = {
            let inner = inner.clone();
            move |s: Complex64| (inner.eval(s) - f_mu) / ScaledComplex::from_complex(s - mu)
        };
        let circle = CircleInterpolant::new(mu, 0.5, direct);
        QuotientByLinear { inner, mu, f_mu, circle }
    }
}

impl EntireFunction for QuotientByLinear {
    fn eval(&self, z: Complex64) -> ScaledComplex {
        if self.circle.covers(z) {
            self.circle.eval(z)
        } else {
            (self.inner.eval(z) - self.f_mu) / ScaledComplex::from_complex(z - self.mu)
        }
    }
    fn label(&self) -> String {
        format!("({})/(z-({},{}))", self.inner.label(), self.mu.re, self.mu.im)
    }
}

pub fn divide_by_linear(f: EntireFnHandle, mu: Complex64, snap: bool) -> EntireFnHandle {
    Arc::new(QuotientByLinear::new(f, mu, snap))
}

/// `A(F, z)(zeta) = (F(zeta) sigma0(z) - F(z) sigma0(zeta)) / (z - zeta)`.
#[derive(Debug, Clone)]
pub struct FrakA {
    f: EntireFnHandle,
    z: Complex64,
    sigma0_z: ScaledComplex,
    f_z: ScaledComplex,
    circle: CircleInterpolant,
}

impl FrakA {
    pub fn new(f: EntireFnHandle, z: Complex64) -> Self {
        let s = SigmaEvaluator::shared();
        let sigma0_z = s.sigma0(z);
        let f_z = f.eval(z);
        let direct = {
            let f = f.clone();
            move |zeta: Complex64| (f.eval(zeta) * sigma0_z - f_z * s.sigma0(zeta)) / ScaledComplex::from_complex(z - zeta)
        };
        let circle = CircleInterpolant::new(z, 0.3, direct);
        FrakA {
            f,
            z,
            sigma0_z,
            f_z,
            circle,
        }
    }
}

impl EntireFunction for FrakA {
    fn eval(&self, zeta: Complex64) -> ScaledComplex {
        if self.circle.covers(zeta) {
            return self.circle.eval(zeta);
        }
        let s = SigmaEvaluator::shared();
        (self.f.eval(zeta) * self.sigma0_z - self.f_z * s.sigma0(zeta)) / ScaledComplex::from_complex(self.z - zeta)
    }
    fn label(&self) -> String {
        format!("A({},({},{}))", self.f.label(), self.z.re, self.z.im)
    }
}

pub fn frak_a(f: EntireFnHandle, z: Complex64) -> EntireFnHandle {
    Arc::new(FrakA::new(f, z))
}
