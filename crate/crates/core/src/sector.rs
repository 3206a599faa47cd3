//! Entire continuations of sector-supported functions.
//!
//! For `h` analytic on a closed sector `Omega` and decaying along its edges,
//! `h_1(z) = (1/2 pi i) \int_{dOmega} h(w) dw / (z - w)` continues to an entire
//! function. The continuation is computed as
//!
//! `E(z) = (1/2 pi i) \int_{dOmega'} h(w) dw / (z - w) + h(z) 1[z in Omega']`
//!
//! where `Omega' = {|w| > R, |arg w| < phi}` with a small arc radius `R` and rays
//! rotated to an angle `phi` where `h` decays fast. The boundary is traversed
//! with `Omega'` on the left: lower ray outward, upper ray inward, then the arc
//! clockwise. Keeping `R` small avoids the `e^{pi R^2/2}` cancellation a large
//! arc would cause.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FockError, Result};
use crate::function::{EntireFnHandle, EntireFunction};
use crate::quadrature::{composite_gauss_legendre, PANEL_ORDER};
use crate::scaled::{pairwise_sum, ScaledComplex};

/// Exponent chain `1 < beta < gamma < delta < eta < sigma_exp < 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleParams {
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub eta: f64,
    pub sigma_exp: f64,
}

impl Default for CounterexampleParams {
    fn default() -> Self {
        CounterexampleParams {
            beta: 1.3,
            gamma: 1.4,
            delta: 1.5,
            eta: 1.7,
            sigma_exp: 1.8,
        }
    }
}

impl CounterexampleParams {
    pub fn validate(&self) -> Result<()> {
        let chain = [1.0, self.beta, self.gamma, self.delta, self.eta, self.sigma_exp, 2.0];
        let names = ["1", "beta", "gamma", "delta", "eta", "sigma_exp", "2"];
        for i in 0..chain.len() - 1 {
            if !(chain[i] < chain[i + 1]) {
                return Err(FockError::InvalidParams(format!(
                    "need {} < {} (got {} and {})",
                    names[i],
                    names[i + 1],
                    chain[i],
                    chain[i + 1]
                )));
            }
        }
        Ok(())
    }
}

/// Discretization of the sector boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourSpec {
    /// Arc radius.
    pub radius: f64,
    /// Gauss-Legendre nodes per unit length along each ray.
    pub n_ray: usize,
    /// Gauss-Legendre nodes on the arc.
    pub n_arc: usize,
    /// Longest admissible ray before declaring the tail unconverged.
    pub ray_length: f64,
}

impl Default for ContourSpec {
    fn default() -> Self {
        ContourSpec {
            radius: 0.75,
            n_ray: 80,
            n_arc: 192,
            ray_length: 64.0,
        }
    }
}

impl ContourSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius <= 2.0) {
            return Err(FockError::InvalidParams(format!("contour radius must lie in (0, 2], got {}", self.radius)));
        }
        if self.n_ray < PANEL_ORDER || self.n_arc < 2 * PANEL_ORDER {
            return Err(FockError::InvalidParams(format!(
                "need n_ray >= {} and n_arc >= {}",
                PANEL_ORDER,
                2 * PANEL_ORDER
            )));
        }
        if !(self.ray_length > 2.0 * self.radius) {
            return Err(FockError::InvalidParams("ray_length must exceed twice the arc radius".into()));
        }
        Ok(())
    }

    fn ray_panel(&self) -> f64 {
        PANEL_ORDER as f64 / self.n_ray as f64
    }
}

/// Principal power `z^p` with `1^p = 1`; `0^p = 0`.
pub fn principal_pow(z: Complex64, p: f64) -> Complex64 {
    if z == Complex64::new(0.0, 0.0) {
        return z;
    }
    (p * z.ln()).exp()
}

/// The two sector integrands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SectorIntegrand {
    /// `f(z) = exp(pi z^2 / 2 - z^beta)` on `|arg z| <= pi/4`.
    Gaussian { beta: f64 },
    /// `g(z) = exp(z^sigma)` on `|arg z| <= pi/(2 eta)`.
    StretchedExp { sigma_exp: f64 },
}

impl SectorIntegrand {
    pub fn log_value(&self, z: Complex64) -> Complex64 {
        match *self {
            SectorIntegrand::Gaussian { beta } => 0.5 * PI * z * z - principal_pow(z, beta),
            SectorIntegrand::StretchedExp { sigma_exp } => principal_pow(z, sigma_exp),
        }
    }

    pub fn eval(&self, z: Complex64) -> ScaledComplex {
        ScaledComplex::exp(self.log_value(z))
    }

    /// Open window of ray angles along which the integrand decays.
    pub fn decay_window(&self) -> (f64, f64) {
        match *self {
            SectorIntegrand::Gaussian { .. } => (FRAC_PI_4, 3.0 * FRAC_PI_4),
            SectorIntegrand::StretchedExp { sigma_exp } => (FRAC_PI_2 / sigma_exp, (1.5 * PI / sigma_exp).min(PI - 0.3)),
        }
    }

    /// Candidate ray angles: the window centre and two offsets.
    pub fn candidate_angles(&self) -> Vec<f64> {
        match *self {
            SectorIntegrand::Gaussian { .. } => vec![FRAC_PI_2, FRAC_PI_4 + 0.35, 3.0 * FRAC_PI_4 - 0.35],
            SectorIntegrand::StretchedExp { sigma_exp } => {
                let cap = PI - 0.3;
                vec![(PI / sigma_exp).min(cap), 0.75 * PI / sigma_exp, (1.25 * PI / sigma_exp).min(cap)]
            }
        }
    }

    pub fn label(&self) -> String {
        match *self {
            SectorIntegrand::Gaussian { beta } => format!("f[{beta}]"),
            SectorIntegrand::StretchedExp { sigma_exp } => format!("g[{sigma_exp}]"),
        }
    }
}

/// One discretized boundary `dOmega'`.
#[derive(Debug, Clone)]
pub struct PreparedContour {
    pub radius: f64,
    pub phi: f64,
    /// Radius at which the rays were truncated.
    pub ray_end: f64,
    ray_panel: f64,
    arc_panel: f64,
    nodes: Vec<Complex64>,
    /// `h(w_k) dw_k / (2 pi i)`.
    weights: Vec<Complex64>,
    peak: f64,
}

impl PreparedContour {
    pub fn new(integrand: &SectorIntegrand, spec: &ContourSpec, radius: f64, phi: f64) -> Result<Self> {
        let h = spec.ray_panel();
        // ray radii: two half panels at the corner, then uniform panels until the tail is negligible
        let mut edges = vec![radius, radius + 0.5 * h, radius + h];
        let (gx, _) = crate::quadrature::gauss_legendre(PANEL_ORDER);
        let log_cut = (1e-14f64).ln();
        let dir = Complex64::from_polar(1.0, phi);
        let dir_low = dir.conj();
        let mut peak = f64::NEG_INFINITY;
        let panel_max = |a: f64, b: f64| -> f64 {
            gx.iter()
                .map(|x| {
                    let t = 0.5 * (a + b) + 0.5 * (b - a) * x;
                    // both rays share |h| by conjugation symmetry
                    integrand.log_value(dir * t).re
                })
                .fold(f64::NEG_INFINITY, f64::max)
        };
        for pair in edges.clone().windows(2) {
            peak = peak.max(panel_max(pair[0], pair[1]));
        }
        loop {
            let a = *edges.last().unwrap();
            let b = a + h;
            let m = panel_max(a, b);
            peak = peak.max(m);
            edges.push(b);
            if m < peak + log_cut && b > radius + 2.0 {
                break;
            }
            if b > spec.ray_length {
                return Err(FockError::RayTailNotConverged { length: spec.ray_length });
            }
        }
        let ray_end = *edges.last().unwrap();
        let (ts, tw) = composite_gauss_legendre(&edges, PANEL_ORDER);

        let arc_panels = (spec.n_arc / PANEL_ORDER).max(2);
        // arc angles with half panels at both corners
        let step = 2.0 * phi / arc_panels as f64;
        let mut arc_edges = vec![-phi, -phi + 0.5 * step];
        for k in 1..arc_panels {
            arc_edges.push(-phi + k as f64 * step);
        }
        arc_edges.push(phi - 0.5 * step);
        arc_edges.push(phi);
        let (th, thw) = composite_gauss_legendre(&arc_edges, PANEL_ORDER);

        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        let mut nodes = Vec::with_capacity(2 * ts.len() + th.len());
        let mut weights = Vec::with_capacity(nodes.capacity());
        let mut push = |w: Complex64, dw: Complex64| {
            let v = integrand.eval(w).to_complex();
            nodes.push(w);
            weights.push(v * dw / two_pi_i);
        };
        for (t, wt) in ts.iter().zip(&tw) {
            push(dir_low * t, dir_low * *wt);
        }
        for (t, wt) in ts.iter().zip(&tw).rev() {
            push(dir * t, -dir * *wt);
        }
        for (a, wa) in th.iter().zip(&thw).rev() {
            let e = Complex64::from_polar(radius, *a);
            push(e, -Complex64::new(0.0, 1.0) * e * *wa);
        }
        for a in &th {
            peak = peak.max(integrand.log_value(Complex64::from_polar(radius, *a)).re);
        }
        Ok(PreparedContour {
            radius,
            phi,
            ray_end,
            ray_panel: h,
            arc_panel: step * radius,
            nodes,
            weights,
            peak: peak.exp(),
        })
    }

    /// Largest integrand modulus on the contour.
    pub fn peak(&self) -> f64 {
        self.peak
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Smallest ratio of distance to local panel length over the contour
    /// pieces, together with the distance and the spacing of the nearest piece.
    pub fn margin(&self, z: Complex64) -> (f64, f64, f64) {
        let mut best = (f64::INFINITY, f64::INFINITY, self.ray_panel);
        for dir in [Complex64::from_polar(1.0, self.phi), Complex64::from_polar(1.0, -self.phi)] {
            let t = (z * dir.conj()).re.clamp(self.radius, self.ray_end);
            let d = (z - dir * t).norm();
            let local = if t < self.radius + self.ray_panel { 0.5 * self.ray_panel } else { self.ray_panel };
            if d / local < best.0 {
                best = (d / local, d, local);
            }
        }
        let a = z.arg().clamp(-self.phi, self.phi);
        let d = (z - Complex64::from_polar(self.radius, a)).norm();
        let local = 0.5 * self.arc_panel;
        if d / local < best.0 {
            best = (d / local, d, local);
        }
        best
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.norm() > self.radius && z.arg().abs() < self.phi
    }

    /// `(1/2 pi i) \int h(w) dw / (z - w)`.
    pub fn cauchy(&self, z: Complex64) -> Complex64 {
        let terms: Vec<Complex64> = self.nodes.iter().zip(&self.weights).map(|(w, c)| c / (z - w)).collect();
        pairwise_sum(&terms)
    }
}

/// Entire continuation of one sector integrand, with several candidate
/// contours; each evaluation uses the contour farthest from the point.
#[derive(Debug, Clone)]
pub struct SectorContinuation {
    integrand: SectorIntegrand,
    contours: Vec<PreparedContour>,
}

impl SectorContinuation {
    pub fn new(integrand: SectorIntegrand, spec: &ContourSpec) -> Result<Self> {
        let radii = [spec.radius, 1.6 * spec.radius];
        Self::with_contours(integrand, spec, &integrand.candidate_angles(), &radii)
    }

    pub fn with_contours(integrand: SectorIntegrand, spec: &ContourSpec, angles: &[f64], radii: &[f64]) -> Result<Self> {
        spec.validate()?;
        let (lo, hi) = integrand.decay_window();
        let mut contours = Vec::new();
        for &phi in angles {
            if !(phi > lo && phi < hi) {
                return Err(FockError::InvalidParams(format!(
                    "ray angle {phi} outside the decay window ({lo}, {hi})"
                )));
            }
            for &r in radii {
                contours.push(PreparedContour::new(&integrand, spec, r, phi)?);
            }
        }
        Ok(SectorContinuation { integrand, contours })
    }

    pub fn integrand(&self) -> SectorIntegrand {
        self.integrand
    }

    pub fn contours(&self) -> &[PreparedContour] {
        &self.contours
    }

    fn best_contour(&self, z: Complex64) -> Result<&PreparedContour> {
        let mut best: Option<(&PreparedContour, (f64, f64, f64))> = None;
        for c in &self.contours {
            let m = c.margin(z);
            if best.is_none_or(|(_, b)| m.0 > b.0) {
                best = Some((c, m));
            }
        }
        let (c, (_, d, local)) = best.expect("at least one contour");
        let spacing = local / PANEL_ORDER as f64;
        if d < 2.0 * spacing {
            return Err(FockError::ContourTooClose { distance: d, spacing });
        }
        Ok(c)
    }

    fn eval_on(&self, c: &PreparedContour, z: Complex64) -> ScaledComplex {
        let base = ScaledComplex::from_complex(c.cauchy(z));
        if c.contains(z) {
            base + self.integrand.eval(z)
        } else {
            base
        }
    }

    pub fn eval(&self, z: Complex64) -> Result<ScaledComplex> {
        let c = self.best_contour(z)?;
        Ok(self.eval_on(c, z))
    }

    /// Evaluation on one specific contour (index into [`Self::contours`]).
    pub fn eval_with(&self, z: Complex64, index: usize) -> Result<ScaledComplex> {
        let c = &self.contours[index];
        let (_, d, local) = c.margin(z);
        let spacing = local / PANEL_ORDER as f64;
        if d < 2.0 * spacing {
            return Err(FockError::ContourTooClose { distance: d, spacing });
        }
        Ok(self.eval_on(c, z))
    }
}

/// `f(z) = exp(pi z^2/2 - z^beta)`.
pub fn eval_f(z: Complex64, p: &CounterexampleParams) -> ScaledComplex {
    SectorIntegrand::Gaussian { beta: p.beta }.eval(z)
}

/// `g(z) = exp(z^sigma)`.
pub fn eval_g(z: Complex64, p: &CounterexampleParams) -> ScaledComplex {
    SectorIntegrand::StretchedExp { sigma_exp: p.sigma_exp }.eval(z)
}

/// `f_1`, `F`, `G` for one parameter set.
#[derive(Debug, Clone)]
pub struct CounterexampleFunctions {
    params: CounterexampleParams,
    contour: ContourSpec,
    f1: SectorContinuation,
    g: SectorContinuation,
    rot: Complex64,
}

impl CounterexampleFunctions {
    pub fn new(params: CounterexampleParams, contour: &ContourSpec) -> Result<Self> {
        params.validate()?;
        Ok(CounterexampleFunctions {
            params,
            contour: *contour,
            f1: SectorContinuation::new(SectorIntegrand::Gaussian { beta: params.beta }, contour)?,
            g: SectorContinuation::new(SectorIntegrand::StretchedExp { sigma_exp: params.sigma_exp }, contour)?,
            rot: Complex64::from_polar(1.0, FRAC_PI_2 / params.delta),
        })
    }

    pub fn params(&self) -> &CounterexampleParams {
        &self.params
    }

    pub fn contour(&self) -> &ContourSpec {
        &self.contour
    }

    pub fn f1_continuation(&self) -> &SectorContinuation {
        &self.f1
    }

    pub fn g_continuation(&self) -> &SectorContinuation {
        &self.g
    }

    pub fn f1(&self, z: Complex64) -> Result<ScaledComplex> {
        self.f1.eval(z)
    }

    /// `F(z) = f_1(e^{-i pi/(2 delta)} z) + f_1(e^{i pi/(2 delta)} z)`.
    pub fn big_f(&self, z: Complex64) -> Result<ScaledComplex> {
        Ok(self.f1.eval(self.rot.conj() * z)? + self.f1.eval(self.rot * z)?)
    }

    pub fn big_g(&self, z: Complex64) -> Result<ScaledComplex> {
        self.g.eval(z)
    }

    pub fn f1_handle(self: &Arc<Self>) -> EntireFnHandle {
        Arc::new(CounterexampleFn { inner: self.clone(), which: Which::F1 })
    }

    pub fn big_f_handle(self: &Arc<Self>) -> EntireFnHandle {
        Arc::new(CounterexampleFn { inner: self.clone(), which: Which::BigF })
    }

    pub fn big_g_handle(self: &Arc<Self>) -> EntireFnHandle {
        Arc::new(CounterexampleFn { inner: self.clone(), which: Which::BigG })
    }

    /// `F G` as one handle.
    pub fn product_handle(self: &Arc<Self>) -> EntireFnHandle {
        Arc::new(CounterexampleFn { inner: self.clone(), which: Which::FG })
    }
}

#[derive(Debug, Clone, Copy)]
enum Which {
    F1,
    BigF,
    BigG,
    FG,
}

#[derive(Debug, Clone)]
struct CounterexampleFn {
    inner: Arc<CounterexampleFunctions>,
    which: Which,
}

impl EntireFunction for CounterexampleFn {
    fn eval(&self, z: Complex64) -> ScaledComplex {
        let r = match self.which {
            Which::F1 => self.inner.f1(z),
            Which::BigF => self.inner.big_f(z),
            Which::BigG => self.inner.big_g(z),
            Which::FG => self.inner.big_f(z).and_then(|f| Ok(f * self.inner.big_g(z)?)),
        };
        // candidate contours keep every point admissible; a failure surfaces as NaN
        r.unwrap_or_else(|_| ScaledComplex::from_complex(Complex64::new(f64::NAN, f64::NAN)))
    }

    fn label(&self) -> String {
        let p = self.inner.params;
        let c = self.inner.contour;
        let name = match self.which {
            Which::F1 => "f1",
            Which::BigF => "F",
            Which::BigG => "G",
            Which::FG => "FG",
        };
        format!(
            "{name}[{},{},{},{},{};{},{},{},{}]",
            p.beta, p.gamma, p.delta, p.eta, p.sigma_exp, c.radius, c.n_ray, c.n_arc, c.ray_length
        )
    }

    fn is_conjugation_symmetric(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn funcs() -> CounterexampleFunctions {
        CounterexampleFunctions::new(CounterexampleParams::default(), &ContourSpec::default()).unwrap()
    }

    #[test]
    fn params_chain_validation() {
        assert!(CounterexampleParams::default().validate().is_ok());
        let bad = CounterexampleParams {
            beta: 1.6,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn f_explicit_values() {
        let p = CounterexampleParams::default();
        let v = eval_f(Complex64::new(1.0, 0.0), &p);
        assert!((v.log_mag() - (PI / 2.0 - 1.0)).abs() < 1e-15);
        let r: f64 = 3.0;
        let v = eval_f(Complex64::from_polar(r, FRAC_PI_4), &p);
        let expect = -(PI * 1.3 / 4.0).cos() * r.powf(1.3);
        assert!((v.log_mag() - expect).abs() < 1e-12);
        let v = eval_f(Complex64::new(2.0, 0.0), &p);
        assert!((v.log_mag() - (2.0 * PI - 2f64.powf(1.3))).abs() < 1e-13);
    }

    #[test]
    fn principal_power_is_continuous_off_the_cut() {
        let mut prev = principal_pow(Complex64::from_polar(1.5, -3.1), 1.3);
        let mut t = -3.1;
        while t < 3.1 {
            t += 0.001;
            let v = principal_pow(Complex64::from_polar(1.5, t), 1.3);
            assert!((v - prev).norm() < 0.01);
            prev = v;
        }
        assert_eq!(principal_pow(Complex64::new(1.0, 0.0), 1.3), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn rays_truncate_before_the_limit() {
        let f = funcs();
        for c in f.f1_continuation().contours().iter().chain(f.g_continuation().contours()) {
            assert!(c.ray_end < 20.0, "phi = {}: {}", c.phi, c.ray_end);
        }
    }

    #[test]
    fn contours_agree_across_the_plane() {
        let f = funcs();
        for cont in [f.f1_continuation(), f.g_continuation()] {
            let n = cont.contours().len();
            for k in 0..40 {
                let z = Complex64::from_polar(0.3 + 0.2 * k as f64, 0.37 * k as f64 - 3.0);
                let mut vals = Vec::new();
                for i in 0..n {
                    if let Ok(v) = cont.eval_with(z, i) {
                        let c = &cont.contours()[i];
                        if c.margin(z).0 > 1.0 {
                            vals.push(v);
                        }
                    }
                }
                for v in &vals[1..] {
                    assert!(v.rel_diff(vals[0]) < 1e-10, "{z}: {:?} vs {:?}", v, vals[0]);
                }
            }
        }
    }

    #[test]
    fn axis_asymptotics() {
        let f = funcs();
        let x: f64 = 6.0;
        let v = f.f1(Complex64::new(x, 0.0)).unwrap();
        let ratio = (v.log_mag() - (PI * x * x / 2.0 - x.powf(1.3))).exp();
        assert!((0.5..=2.0).contains(&ratio), "{ratio}");
        let x: f64 = 5.0;
        let v = f.big_g(Complex64::new(x, 0.0)).unwrap();
        let ratio = (v.log_mag() - x.powf(1.8)).exp();
        assert!((0.5..=2.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn conjugation_symmetry() {
        let f = funcs();
        let z = Complex64::new(1.0, 2.0);
        assert!(f.f1(z.conj()).unwrap().rel_diff(f.f1(z).unwrap().conj()) < 1e-10);
        let z = Complex64::new(2.0, 1.0);
        assert!(f.big_g(z.conj()).unwrap().rel_diff(f.big_g(z).unwrap().conj()) < 1e-10);
        let v = f.big_f(Complex64::new(3.0, 0.0)).unwrap().to_complex();
        assert!(v.im.abs() < 1e-9 * v.norm());
    }

    #[test]
    fn g_is_bounded_off_its_sector() {
        let f = funcs();
        let v = f.big_g(Complex64::from_polar(6.0, 0.75 * PI)).unwrap();
        let scale = f.g_continuation().contours().iter().map(|c| c.peak()).fold(0.0, f64::max);
        assert!(v.abs() <= 10.0 * scale);
    }
}
