//! Dense real polynomials in ascending-power storage.
//!
//! Root solving is done with the Aberth–Ehrlich simultaneous iteration,
//! started from a Newton-polygon radius estimate so that polynomials whose
//! roots span many orders of magnitude converge from the first sweep.
//! Nonnegative real roots are extracted from the complex spectrum and then
//! re-isolated on the real line by sign-change bracketing and bisection.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::bisect;

/// Relative tolerance used to merge nearly coincident real roots.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-7;

const MAX_ABERTH_ITERATIONS: usize = 800;
const RESIDUAL_BOUND: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RealPolynomial {
    coeffs: Vec<f64>,
}

impl RealPolynomial {
    /// Builds a polynomial from ascending coefficients, dropping exact
    /// trailing zeros.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        debug_assert!(coeffs.iter().all(|c| c.is_finite()));
        RealPolynomial { coeffs }
    }

    pub fn try_new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self::new(coeffs))
    }

    pub fn zero() -> Self {
        RealPolynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// Monic polynomial with the given roots. Complex roots are expected in
    /// conjugate pairs; the imaginary round-off of the product is dropped.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut acc = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (k, &c) in acc.iter().enumerate() {
                next[k + 1] += c;
                next[k] -= c * r;
            }
            acc = next;
        }
        Self::new(acc.into_iter().map(|c| c.re).collect())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_at_complex(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * factor).collect())
    }

    fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// Distinct real roots in `[0, inf)`, ascending. Roots within
    /// `cluster_tol * (1 + |r|)` of each other are replaced by their mean.
    pub fn nonnegative_real_roots(&self, cluster_tol: f64) -> Result<Vec<f64>> {
        let degree = self.degree().ok_or(Error::ZeroPolynomial)?;
        if degree == 0 {
            return Ok(Vec::new());
        }

        let mut found = Vec::new();
        for z in self.all_complex_roots()? {
            let scale = 1.0 + z.norm();
            if z.im.abs() > 1e-6 * scale || z.re < -1e-9 * scale {
                continue;
            }
            let x = z.re.max(0.0);
            if let Some(r) = self.isolate_near(x, z.im.abs()) {
                found.push(r);
            }
        }
        Ok(cluster(found, cluster_tol))
    }

    /// Confirms a real root near `x`: first by a sign change in a small
    /// bracket (refined by bisection), otherwise by a small residual, which
    /// admits even-multiplicity roots.
    fn isolate_near(&self, x: f64, im: f64) -> Option<f64> {
        let width = (4.0 * im).max(1e-9 * (1.0 + x.abs()));
        let lo = (x - width).max(0.0);
        let hi = x + width;
        let (flo, fhi) = (self.eval(lo), self.eval(hi));
        if flo == 0.0 {
            return Some(lo);
        }
        if fhi == 0.0 {
            return Some(hi);
        }
        if flo.signum() != fhi.signum() {
            return Some(bisect(|w| self.eval(w), lo, hi, 1e-12));
        }
        let magnitude: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c.abs() * x.abs().powi(k as i32))
            .sum();
        if self.eval(x).abs() <= 1e-8 * magnitude {
            Some(x)
        } else {
            None
        }
    }

    /// All complex roots counted with multiplicity. Non-real roots are
    /// returned as exact conjugate pairs.
    pub fn all_complex_roots(&self) -> Result<Vec<Complex64>> {
        let degree = self.degree().ok_or(Error::ZeroPolynomial)?;
        if degree == 0 {
            return Err(Error::InvalidInput(
                "root finding needs a polynomial of degree >= 1".into(),
            ));
        }

        // Exact roots at the origin.
        let zeros_at_origin = self.coeffs.iter().take_while(|&&c| c == 0.0).count();
        let reduced = &self.coeffs[zeros_at_origin..];
        let mut roots = vec![Complex64::new(0.0, 0.0); zeros_at_origin];

        match reduced.len() {
            1 => {}
            2 => roots.push(Complex64::new(-reduced[0] / reduced[1], 0.0)),
            _ => roots.extend(aberth(reduced)?),
        }

        let roots = pair_conjugates(roots);
        let max_coeff = self.max_abs_coeff();
        for r in &roots {
            let denom = max_coeff * r.norm().max(1.0).powi(degree as i32);
            let residual = self.eval_at_complex(*r).norm() / denom;
            if denom.is_finite() && residual.is_finite() && residual > RESIDUAL_BOUND {
                return Err(Error::DidNotConverge {
                    iterations: MAX_ABERTH_ITERATIONS,
                    max_correction: residual,
                });
            }
        }
        Ok(roots)
    }
}

fn cluster(mut roots: Vec<f64>, cluster_tol: f64) -> Vec<f64> {
    roots.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(roots.len());
    let mut group: Vec<f64> = Vec::new();
    for r in roots {
        if let Some(&first) = group.first() {
            if (r - first).abs() > cluster_tol * (1.0 + first.abs()) {
                out.push(group.iter().sum::<f64>() / group.len() as f64);
                group.clear();
            }
        }
        group.push(r);
    }
    if !group.is_empty() {
        out.push(group.iter().sum::<f64>() / group.len() as f64);
    }
    out
}

/// Aberth–Ehrlich iteration on a polynomial with nonzero constant term.
fn aberth(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let n = coeffs.len() - 1;

    // Rescale x = S y so that the roots cluster around the unit circle.
    // The coefficient magnitudes are handled in log space to avoid overflow.
    let log_scale = ((coeffs[0].abs().ln() - coeffs[n].abs().ln()) / n as f64).clamp(-300.0, 300.0);
    let logs: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| if *c == 0.0 { f64::NEG_INFINITY } else { c.abs().ln() + k as f64 * log_scale })
        .collect();
    let log_max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = coeffs
        .iter()
        .zip(&logs)
        .map(|(c, l)| if *c == 0.0 { 0.0 } else { c.signum() * (l - log_max).exp() })
        .collect();

    let z = aberth_iterate(initial_guesses(&scaled), |z| newton_ratio(&scaled, z))?;
    let s = log_scale.exp();
    Ok(z.into_iter().map(|r| r * s).collect())
}

/// Simultaneous Aberth–Ehrlich iteration from `guesses`, where `ratio(z)`
/// returns the Newton correction `f(z) / f'(z)` (`None` at an exact zero).
pub(crate) fn aberth_iterate<F>(mut z: Vec<Complex64>, ratio: F) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> Option<Complex64>,
{
    let n = z.len();
    let mut converged = vec![false; n];
    let mut max_correction = f64::INFINITY;
    let mut iterations = 0;
    while iterations < MAX_ABERTH_ITERATIONS && converged.iter().any(|c| !c) {
        iterations += 1;
        max_correction = 0.0;
        for i in 0..n {
            if converged[i] {
                continue;
            }
            let Some(w) = ratio(z[i]) else {
                converged[i] = true;
                continue;
            };
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let step = w / (Complex64::new(1.0, 0.0) - w * repulsion);
            if !step.is_finite() {
                continue;
            }
            z[i] -= step;
            let rel = step.norm() / z[i].norm().max(f64::MIN_POSITIVE);
            max_correction = max_correction.max(rel);
            if rel <= 4.0 * f64::EPSILON {
                converged[i] = true;
            }
        }
    }

    // A couple of plain Newton steps tighten simple roots.
    for zi in z.iter_mut() {
        for _ in 0..2 {
            match ratio(*zi) {
                Some(w) if w.is_finite() && w.norm() < 1e-6 * zi.norm().max(1e-300) => *zi -= w,
                _ => break,
            }
        }
    }

    if z.iter().any(|r| !r.is_finite()) {
        return Err(Error::DidNotConverge { iterations, max_correction });
    }
    Ok(z)
}

/// Starting points on circles whose radii come from the upper convex hull
/// of `(k, ln|c_k|)`.
fn initial_guesses(coeffs: &[f64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let points: Vec<(usize, f64)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(k, c)| (k, c.abs().ln()))
        .collect();

    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &p in &points {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 as f64 - a.0 as f64) * (p.1 - a.1) - (b.1 - a.1) * (p.0 as f64 - a.0 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }

    let mut guesses = Vec::with_capacity(n);
    for pair in hull.windows(2) {
        let (i, li) = pair[0];
        let (j, lj) = pair[1];
        let count = j - i;
        let radius = ((li - lj) / count as f64).exp();
        for k in 0..count {
            let angle = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / count as f64 + 0.4 * (i as f64 + 1.0);
            guesses.push(Complex64::from_polar(radius, angle));
        }
    }
    debug_assert_eq!(guesses.len(), n);
    guesses
}

/// `p(z) / p'(z)`, evaluated on the reversed polynomial outside the unit
/// disk. `None` when `p(z)` is exactly zero.
fn newton_ratio(coeffs: &[f64], z: Complex64) -> Option<Complex64> {
    let n = coeffs.len() - 1;
    if z.norm() <= 1.0 {
        let (mut p, mut dp) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for &c in coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        if p.norm() == 0.0 {
            return None;
        }
        Some(p / dp)
    } else {
        // p(z) = z^n r(y), y = 1/z, r has the coefficients reversed.
        let y = z.inv();
        let (mut r, mut dr) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for &c in coeffs.iter() {
            dr = dr * y + r;
            r = r * y + c;
        }
        if r.norm() == 0.0 {
            return None;
        }
        // p'/p = (n - y r'(y)/r(y)) / z
        Some(z / (Complex64::new(n as f64, 0.0) - y * dr / r))
    }
}

/// Snaps the spectrum of a real polynomial onto exact conjugate pairs.
pub(crate) fn pair_conjugates(roots: Vec<Complex64>) -> Vec<Complex64> {
    let tol = |z: &Complex64| 1e-10 * (1.0 + z.norm());
    let mut real = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for z in roots {
        if z.im.abs() <= tol(&z) {
            real.push(Complex64::new(z.re, 0.0));
        } else if z.im > 0.0 {
            upper.push(z);
        } else {
            lower.push(z);
        }
    }
    // Unbalanced halves: the surplus with the smallest imaginary parts are
    // real roots perturbed off the axis.
    let by_im = |a: &Complex64, b: &Complex64| a.im.abs().total_cmp(&b.im.abs());
    upper.sort_by(by_im);
    lower.sort_by(by_im);
    while upper.len() > lower.len() {
        real.push(Complex64::new(upper.remove(0).re, 0.0));
    }
    while lower.len() > upper.len() {
        real.push(Complex64::new(lower.remove(0).re, 0.0));
    }

    let mut out = real;
    for u in upper {
        let (idx, _) = lower
            .iter()
            .enumerate()
            .map(|(k, l)| (k, (l.conj() - u).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("balanced halves");
        let l = lower.swap_remove(idx);
        let mid = (u + l.conj()) * 0.5;
        out.push(mid);
        out.push(mid.conj());
    }
    out
}

impl Add for &RealPolynomial {
    type Output = RealPolynomial;
    fn add(self, rhs: &RealPolynomial) -> RealPolynomial {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        RealPolynomial::new(
            (0..len)
                .map(|k| self.coeffs.get(k).unwrap_or(&0.0) + rhs.coeffs.get(k).unwrap_or(&0.0))
                .collect(),
        )
    }
}

impl Neg for &RealPolynomial {
    type Output = RealPolynomial;
    fn neg(self) -> RealPolynomial {
        self.scale(-1.0)
    }
}

impl Sub for &RealPolynomial {
    type Output = RealPolynomial;
    fn sub(self, rhs: &RealPolynomial) -> RealPolynomial {
        self + &(-rhs)
    }
}

impl Mul for &RealPolynomial {
    type Output = RealPolynomial;
    fn mul(self, rhs: &RealPolynomial) -> RealPolynomial {
        if self.is_zero() || rhs.is_zero() {
            return RealPolynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        RealPolynomial::new(out)
    }
}
