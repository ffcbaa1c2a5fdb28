//! Open-loop plant in pole-zero-gain form and the boundary configuration.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::DEFAULT_BISECT_TOL;
use crate::poly::{aberth_iterate, pair_conjugates, RealPolynomial};

const CONJUGATE_TOL: f64 = 1e-12;
const CANCELLATION_TOL: f64 = 1e-9;

/// `G(s) = gain * prod(s - zeros) / prod(s - poles)`, proper, with real
/// coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleZeroGain {
    gain: f64,
    zeros: Vec<Complex64>,
    poles: Vec<Complex64>,
}

impl PoleZeroGain {
    pub fn new(gain: f64, zeros: Vec<Complex64>, poles: Vec<Complex64>) -> Result<Self> {
        let plant = PoleZeroGain { gain, zeros, poles };
        plant.validate()?;
        Ok(plant)
    }

    /// Builds a plant from ascending numerator and denominator coefficients.
    pub fn from_rational(num: &[f64], den: &[f64]) -> Result<Self> {
        let num = RealPolynomial::try_new(num.to_vec())?;
        let den = RealPolynomial::try_new(den.to_vec())?;
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        if num.is_zero() {
            return Err(Error::ZeroGain);
        }
        if num.degree() > den.degree() {
            return Err(Error::NotProper {
                zeros: num.degree().unwrap_or(0),
                poles: den.degree().unwrap_or(0),
            });
        }
        let roots = |p: &RealPolynomial| -> Result<Vec<Complex64>> {
            if p.degree() == Some(0) {
                Ok(Vec::new())
            } else {
                p.all_complex_roots()
            }
        };
        let zeros = roots(&num)?;
        let poles = roots(&den)?;
        for z in &zeros {
            for p in &poles {
                if (z - p).norm() < CANCELLATION_TOL * (1.0 + p.norm()) {
                    return Err(Error::PoleZeroCancellation { zero: z.to_string(), pole: p.to_string() });
                }
            }
        }
        Self::new(num.leading() / den.leading(), zeros, poles)
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    pub fn is_biproper(&self) -> bool {
        self.zeros.len() == self.poles.len()
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
        if !self.gain.is_finite() || !self.zeros.iter().all(finite) || !self.poles.iter().all(finite) {
            return Err(Error::NonFinite);
        }
        if self.gain == 0.0 {
            return Err(Error::ZeroGain);
        }
        if self.zeros.len() > self.poles.len() {
            return Err(Error::NotProper { zeros: self.zeros.len(), poles: self.poles.len() });
        }
        check_conjugate_closed("zero", &self.zeros)?;
        check_conjugate_closed("pole", &self.poles)?;
        Ok(())
    }

    /// Product-form evaluation of `G(s)`.
    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let nearest = self.poles.iter().map(|p| (s - p).norm()).fold(f64::INFINITY, f64::min);
        if nearest < 1e-14 * (1.0 + s.norm()) {
            return Err(Error::PoleEvaluation { re: s.re, im: s.im });
        }
        Ok(self.eval_unchecked(s))
    }

    /// Pairs each zero with a pole so that long products of nearly
    /// cancelling factors stay in range.
    fn eval_unchecked(&self, s: Complex64) -> Complex64 {
        let m = self.zeros.len();
        let paired: Complex64 = self.zeros.iter().zip(&self.poles).map(|(z, p)| (s - z) / (s - p)).product();
        let rest: Complex64 = self.poles[m..].iter().map(|p| (s - p).inv()).product();
        paired * rest * self.gain
    }

    /// `G'(s) / G(s) = sum 1/(s - z) - sum 1/(s - p)`.
    pub fn log_derivative(&self, s: Complex64) -> Complex64 {
        let zs: Complex64 = self.zeros.iter().map(|z| (s - z).inv()).sum();
        let ps: Complex64 = self.poles.iter().map(|p| (s - p).inv()).sum();
        zs - ps
    }

    /// `G(inf)`: the gain for bi-proper plants, zero otherwise.
    pub fn feedthrough(&self) -> f64 {
        if self.is_biproper() {
            self.gain
        } else {
            0.0
        }
    }

    /// Smallest horizontal distance from any pole or zero to `Re(s) = sigma0`.
    pub fn boundary_clearance(&self, sigma0: f64) -> f64 {
        self.zeros
            .iter()
            .chain(&self.poles)
            .map(|z| (z.re - sigma0).abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn numerator(&self) -> RealPolynomial {
        RealPolynomial::from_roots(&self.zeros).scale(self.gain)
    }

    pub fn denominator(&self) -> RealPolynomial {
        RealPolynomial::from_roots(&self.poles)
    }

    /// `prod(s - p) + gain * prod(s - z)`, whose roots are the closed-loop
    /// poles at zero delay.
    pub fn char_poly_at_zero_delay(&self) -> Result<RealPolynomial> {
        if self.is_biproper() && (1.0 + self.gain).abs() <= 1e-14 {
            return Err(Error::DegenerateClosedLoop);
        }
        Ok(&self.denominator() + &self.numerator())
    }

    /// Roots of `1 + G(s)`, found without expanding `G` into coefficients.
    pub fn closed_loop_poles_at_zero_delay(&self) -> Result<Vec<Complex64>> {
        if self.is_biproper() && (1.0 + self.gain).abs() <= 1e-14 {
            return Err(Error::DegenerateClosedLoop);
        }
        if self.poles.is_empty() {
            return Ok(Vec::new());
        }
        let scale = self.poles.iter().map(|p| p.norm()).fold(1.0, f64::max);
        let guesses: Vec<Complex64> = self
            .poles
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let angle = 0.4 + 2.1 * k as f64;
                p + Complex64::from_polar(1e-3 * (1.0 + p.norm()).min(scale), angle)
            })
            .collect();
        let ratio = |s: Complex64| {
            let g = self.eval_unchecked(s);
            let f = g + 1.0;
            if f == Complex64::new(0.0, 0.0) {
                return None;
            }
            let dp: Complex64 = self.poles.iter().map(|p| (s - p).inv()).sum();
            let dz: Complex64 = self.zeros.iter().map(|z| (s - z).inv()).sum();
            Some(f / (dp + g * dz))
        };
        let roots = aberth_iterate(guesses, ratio)?;
        for r in &roots {
            let g = self.eval_unchecked(*r);
            let residual = (g + 1.0).norm() / (1.0 + g.norm());
            if !(residual < 1e-8) {
                return Err(Error::DidNotConverge { iterations: 0, max_correction: residual });
            }
        }
        Ok(pair_conjugates(roots))
    }
}

fn check_conjugate_closed(kind: &'static str, values: &[Complex64]) -> Result<()> {
    let mut unmatched: Vec<Complex64> = values.iter().filter(|z| !is_real(z)).copied().collect();
    while let Some(z) = unmatched.pop() {
        let tol = CONJUGATE_TOL * z.norm().max(1.0);
        match unmatched.iter().position(|w| (w - z.conj()).norm() <= tol) {
            Some(idx) => {
                unmatched.swap_remove(idx);
            }
            None => return Err(Error::NotConjugateClosed { kind, re: z.re, im: z.im }),
        }
    }
    Ok(())
}

fn is_real(z: &Complex64) -> bool {
    z.im.abs() <= CONJUGATE_TOL * z.norm().max(1.0)
}

/// The vertical boundary `Re(s) = sigma0` and solver settings.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConfig {
    pub sigma0: f64,
    /// Minimum allowed distance of poles and zeros from the boundary.
    pub clearance_tol: f64,
    /// Finite frequency horizon used when scanning for breakpoints; derived
    /// from the plant when `None`.
    pub omega_cap: Option<f64>,
    pub bisect_tol: f64,
    /// Treat repaired assumption violations (boundary perturbation) as errors.
    pub strict: bool,
}

impl BoundaryConfig {
    pub fn new(sigma0: f64) -> Self {
        BoundaryConfig {
            sigma0,
            clearance_tol: 1e-8,
            omega_cap: None,
            bisect_tol: DEFAULT_BISECT_TOL,
            strict: false,
        }
    }

    pub fn with_strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    pub fn with_omega_cap(mut self, cap: Option<f64>) -> Self {
        self.omega_cap = cap;
        self
    }

    pub fn with_bisect_tol(mut self, tol: f64) -> Self {
        self.bisect_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sigma0.is_finite() || self.sigma0 > 0.0 {
            return Err(Error::InvalidBoundary(format!("sigma0 must be <= 0, got {}", self.sigma0)));
        }
        if !(self.clearance_tol > 0.0) {
            return Err(Error::InvalidBoundary("clearance_tol must be positive".into()));
        }
        if !(self.bisect_tol > 0.0) {
            return Err(Error::InvalidBoundary("bisect_tol must be positive".into()));
        }
        if let Some(cap) = self.omega_cap {
            if !(cap > 0.0 && cap.is_finite()) {
                return Err(Error::InvalidBoundary("omega_cap must be positive and finite".into()));
            }
        }
        Ok(())
    }
}
