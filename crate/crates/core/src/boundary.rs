//! Magnitude and phase functions on the boundary `Re(s) = sigma0 < 0`, and
//! the frequency intervals on which a crossing root has a nonnegative delay
//! and an invariant crossing direction.
//!
//! On the boundary `s = sigma0 + j w`, a crossing root at delay `h` needs
//! `|G(s)| = e^{h sigma0}`, i.e. `h = H(w) = ln|G(s)| / sigma0 >= 0`, and the
//! phase condition `phi(w) = (2l + 1) pi - phi0`. Both `H` and `phi` are
//! expressed as sums over poles and zeros; their derivatives have closed
//! forms and their critical points are roots of explicit polynomials.


use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{bisect, sign};
use crate::plant::{BoundaryConfig, PoleZeroGain};
use crate::poly::{RealPolynomial, DEFAULT_CLUSTER_TOL};

/// Above this degree the explicit numerator polynomials are not used to
/// locate zeros; the sum forms are scanned instead.
const MAX_POLY_DEGREE: usize = 60;

/// One pole or zero seen from the boundary: `dsigma = sigma0 - Re`,
/// `omega = Im`.
#[derive(Debug, Clone, Copy)]
struct Term {
    dsigma: f64,
    omega: f64,
}

impl Term {
    fn gamma(&self, w: f64) -> f64 {
        let dw = w - self.omega;
        self.dsigma * self.dsigma + dw * dw
    }

    fn gamma_poly(&self) -> RealPolynomial {
        RealPolynomial::new(vec![self.omega * self.omega + self.dsigma * self.dsigma, -2.0 * self.omega, 1.0])
    }

    fn domega_poly(&self) -> RealPolynomial {
        RealPolynomial::new(vec![-self.omega, 1.0])
    }

    /// `(2 w_k - 3 w) ds^2 + (2 w_k - w) dw^2 - 2 sigma0 ds dw`
    fn phi_dd_poly(&self, sigma0: f64) -> RealPolynomial {
        let ds2 = self.dsigma * self.dsigma;
        let first = RealPolynomial::new(vec![2.0 * self.omega * ds2, -3.0 * ds2]);
        let dw = self.domega_poly();
        let dw2 = &dw * &dw;
        let second = &RealPolynomial::new(vec![2.0 * self.omega, -1.0]) * &dw2;
        let third = dw.scale(-2.0 * sigma0 * self.dsigma);
        &(&first + &second) + &third
    }
}

/// The boundary functions of one plant on one boundary line.
#[derive(Debug, Clone)]
pub struct BoundaryFunctions {
    plant: PoleZeroGain,
    sigma0: f64,
    zeros: Vec<Term>,
    poles: Vec<Term>,
    bisect_tol: f64,
}

impl BoundaryFunctions {
    pub fn new(plant: &PoleZeroGain, sigma0: f64, clearance_tol: f64) -> Result<Self> {
        if !(sigma0 < 0.0) || !sigma0.is_finite() {
            return Err(Error::InvalidBoundary(format!(
                "the shifted-boundary analysis needs sigma0 < 0, got {sigma0}"
            )));
        }
        let clearance = plant.boundary_clearance(sigma0);
        if clearance < clearance_tol {
            return Err(Error::BoundaryClearance { sigma0, clearance });
        }
        let term = |z: &Complex64| Term { dsigma: sigma0 - z.re, omega: z.im };
        Ok(BoundaryFunctions {
            plant: plant.clone(),
            sigma0,
            zeros: plant.zeros().iter().map(term).collect(),
            poles: plant.poles().iter().map(term).collect(),
            bisect_tol: crate::numeric::DEFAULT_BISECT_TOL,
        })
    }

    pub fn from_config(plant: &PoleZeroGain, cfg: &BoundaryConfig) -> Result<Self> {
        cfg.validate()?;
        let mut bf = Self::new(plant, cfg.sigma0, cfg.clearance_tol)?;
        bf.bisect_tol = cfg.bisect_tol;
        Ok(bf)
    }

    pub fn plant(&self) -> &PoleZeroGain {
        &self.plant
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn bisect_tol(&self) -> f64 {
        self.bisect_tol
    }

    pub fn root_at(&self, omega: f64) -> Complex64 {
        Complex64::new(self.sigma0, omega)
    }

    /// Delay at which `sigma0 + j w` satisfies the magnitude condition.
    pub fn h(&self, w: f64) -> f64 {
        let logs: f64 = self.zeros.iter().map(|t| t.gamma(w).ln()).sum::<f64>()
            - self.poles.iter().map(|t| t.gamma(w).ln()).sum::<f64>();
        self.plant.gain().abs().ln() / self.sigma0 + logs / (2.0 * self.sigma0)
    }

    pub fn h_prime(&self, w: f64) -> f64 {
        let sum = |terms: &[Term]| terms.iter().map(|t| (w - t.omega) / t.gamma(w)).sum::<f64>();
        (sum(&self.zeros) - sum(&self.poles)) / self.sigma0
    }

    pub fn h_double_prime(&self, w: f64) -> f64 {
        let sum = |terms: &[Term]| {
            terms
                .iter()
                .map(|t| {
                    let dw = w - t.omega;
                    let g = t.gamma(w);
                    (t.dsigma * t.dsigma - dw * dw) / (g * g)
                })
                .sum::<f64>()
        };
        (sum(&self.zeros) - sum(&self.poles)) / self.sigma0
    }

    /// Phase of `G(s) e^{-H(w) s}` up to a constant multiple of `pi`,
    /// continuous in `w`.
    pub fn phi(&self, w: f64) -> f64 {
        let sum = |terms: &[Term]| terms.iter().map(|t| ((w - t.omega) / t.dsigma).atan()).sum::<f64>();
        sum(&self.zeros) - sum(&self.poles) - w * self.h(w)
    }

    pub fn phi_prime(&self, w: f64) -> f64 {
        let sum = |terms: &[Term]| terms.iter().map(|t| t.dsigma / t.gamma(w)).sum::<f64>();
        sum(&self.zeros) - sum(&self.poles) - self.h(w) - w * self.h_prime(w)
    }

    pub fn phi_double_prime(&self, w: f64) -> f64 {
        let sum = |terms: &[Term]| {
            terms
                .iter()
                .map(|t| {
                    let g = t.gamma(w);
                    t.dsigma * (w - t.omega) / (g * g)
                })
                .sum::<f64>()
        };
        -2.0 * sum(&self.zeros) + 2.0 * sum(&self.poles) - 2.0 * self.h_prime(w) - w * self.h_double_prime(w)
    }

    /// Numerator of `sigma0 * H'(w)` over the common denominator
    /// `prod gamma_z * prod gamma_p`.
    pub fn h_prime_numerator(&self) -> RealPolynomial {
        let gz = product(self.zeros.iter().map(Term::gamma_poly));
        let gp = product(self.poles.iter().map(Term::gamma_poly));
        let partial = |terms: &[Term]| {
            let mut acc = RealPolynomial::zero();
            for (k, t) in terms.iter().enumerate() {
                let others = product(
                    terms.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, o)| o.gamma_poly()),
                );
                acc = &acc + &(&t.domega_poly() * &others);
            }
            acc
        };
        &(&gp * &partial(&self.zeros)) - &(&gz * &partial(&self.poles))
    }

    /// Numerator of `sigma0 * phi''(w)` over `(prod gamma_z * prod gamma_p)^2`.
    pub fn phi_dd_numerator(&self) -> RealPolynomial {
        let square = |p: RealPolynomial| &p * &p;
        let gz = square(product(self.zeros.iter().map(Term::gamma_poly)));
        let gp = square(product(self.poles.iter().map(Term::gamma_poly)));
        let partial = |terms: &[Term]| {
            let mut acc = RealPolynomial::zero();
            for (k, t) in terms.iter().enumerate() {
                let others = square(product(
                    terms.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, o)| o.gamma_poly()),
                ));
                acc = &acc + &(&t.phi_dd_poly(self.sigma0) * &others);
            }
            acc
        };
        &(&gp * &partial(&self.zeros)) - &(&gz * &partial(&self.poles))
    }

    fn h_prime_degree_bound(&self) -> usize {
        (2 * (self.zeros.len() + self.poles.len())).saturating_sub(1)
    }

    fn phi_dd_degree_bound(&self) -> usize {
        (4 * (self.zeros.len() + self.poles.len())).saturating_sub(1)
    }

    /// `lim H(w)` as `w -> inf`: `+inf` for strictly proper plants,
    /// `ln|d| / sigma0` otherwise.
    pub fn h_limit(&self) -> f64 {
        let d = self.plant.feedthrough();
        if d == 0.0 {
            f64::INFINITY
        } else {
            d.abs().ln() / self.sigma0
        }
    }

    /// Sign of `phi'` as `w -> inf`.
    fn phi_prime_tail_sign(&self, cap: f64) -> i32 {
        let d = self.plant.feedthrough();
        if d == 0.0 {
            -1
        } else {
            let s = sign(-d.abs().ln() / self.sigma0);
            if s != 0 {
                s
            } else {
                sign(self.phi_prime(4.0 * cap))
            }
        }
    }

    /// Value of `phi` as `w -> inf` on an interval whose `phi'` has sign
    /// `phi_sign` in its tail.
    fn phi_limit(&self, phi_sign: i32, cap: f64) -> f64 {
        if self.plant.feedthrough().abs() < 1.0 {
            phi_sign as f64 * f64::INFINITY
        } else {
            self.phi(1e3 * cap)
        }
    }

    /// Initial scan horizon: ten times the frequency extent of the poles and
    /// zeros seen from the boundary.
    pub fn default_omega_cap(&self) -> f64 {
        let extent = self
            .zeros
            .iter()
            .chain(&self.poles)
            .map(|t| t.omega.abs() + t.dsigma.abs())
            .fold(0.0, f64::max);
        10.0 * (1.0 + extent)
    }

    /// Sample points on `[0, cap]`: a uniform and a geometric grid plus a
    /// cluster around every pole/zero frequency at the scale of its
    /// distance to the boundary.
    fn scan_grid(&self, lo: f64, cap: f64, density: usize) -> Vec<f64> {
        let mut pts = vec![lo, cap];
        let n = 200 * density;
        for k in 1..n {
            pts.push(lo + (cap - lo) * k as f64 / n as f64);
        }
        let smallest = self
            .zeros
            .iter()
            .chain(&self.poles)
            .map(|t| t.dsigma.abs())
            .fold(f64::INFINITY, f64::min)
            .min(1.0);
        let start = (smallest * 1e-3).max(lo).max(1e-12 * cap);
        if start < cap {
            let ratio = (cap / start).ln();
            for k in 0..=n {
                pts.push(start * (ratio * k as f64 / n as f64).exp());
            }
        }
        let local = 30 * density;
        for t in self.zeros.iter().chain(&self.poles) {
            let center = t.omega.abs();
            let width = t.dsigma.abs();
            for k in 0..=local {
                let off = width * 10f64.powf(-3.0 + 6.0 * k as f64 / local as f64);
                pts.push(center + off);
                pts.push(center - off);
            }
            pts.push(center);
        }
        pts.retain(|p| *p >= lo && *p <= cap && p.is_finite());
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Strictly positive zeros of `f` in `(0, cap]` by sign changes on the
    /// scan grid, refining the grid until the count settles.
    fn scan_zeros<F: Fn(f64) -> f64>(&self, f: F, cap: f64, bound: usize) -> Vec<f64> {
        let mut previous: Option<Vec<f64>> = None;
        for density in [1, 2, 4, 8] {
            let grid = self.scan_grid(0.0, cap, density);
            let zeros = sign_change_zeros(&f, &grid[1..], self.bisect_tol);
            if let Some(prev) = &previous {
                if prev.len() == zeros.len() && zeros.len() <= bound {
                    return zeros;
                }
            }
            previous = Some(zeros);
        }
        previous.unwrap_or_default()
    }

    /// Hybrid zero finder: grid scan of the sum form, merged with the real
    /// roots of the explicit numerator polynomial when its degree is small
    /// enough for monomial arithmetic. Candidate polynomial roots are
    /// re-bracketed on the sum form.
    fn positive_zeros<F: Fn(f64) -> f64>(
        &self,
        f: F,
        numerator: impl FnOnce() -> RealPolynomial,
        bound: usize,
        cap: f64,
    ) -> Vec<f64> {
        let mut zeros = self.scan_zeros(&f, cap, bound);
        if bound <= MAX_POLY_DEGREE {
            let poly = numerator();
            if !poly.is_zero() {
                if let Ok(roots) = poly.nonnegative_real_roots(DEFAULT_CLUSTER_TOL) {
                    for r in roots {
                        if r <= 1e-9 || r > cap {
                            continue;
                        }
                        zeros.push(self.polish(&f, r));
                    }
                }
            }
        }
        zeros.retain(|z| *z > 1e-9);
        cluster_sorted(zeros)
    }

    fn polish<F: Fn(f64) -> f64>(&self, f: &F, r: f64) -> f64 {
        let mut width = 1e-9 * (1.0 + r);
        for _ in 0..8 {
            let lo = (r - width).max(0.0);
            let hi = r + width;
            if sign(f(lo)) * sign(f(hi)) < 0 {
                return bisect(f, lo, hi, self.bisect_tol);
            }
            width *= 10.0;
        }
        r
    }

    /// Scan horizon for this plant: `cap` (or the default) doubled while
    /// any of `H'`, `phi'`, `phi''` still changes sign in the added band.
    pub fn effective_omega_cap(&self, cap: Option<f64>) -> f64 {
        let mut cap = cap.unwrap_or_else(|| self.default_omega_cap());
        for _ in 0..64 {
            let grid = self.scan_grid(cap, 2.0 * cap, 1);
            let changes = |f: &dyn Fn(f64) -> f64| {
                grid.windows(2).any(|w| sign(f(w[0])) * sign(f(w[1])) < 0)
            };
            if changes(&|w| self.h_prime(w)) || changes(&|w| self.phi_prime(w)) || changes(&|w| self.phi_double_prime(w)) {
                cap *= 2.0;
            } else {
                break;
            }
        }
        cap
    }

    /// Positive zeros of `H'` in `(0, cap]`. `w = 0` is always a zero by
    /// conjugate symmetry and is left implicit.
    pub fn critical_points_h(&self, cap: f64) -> Vec<f64> {
        self.positive_zeros(|w| self.h_prime(w), || self.h_prime_numerator(), self.h_prime_degree_bound(), cap)
    }

    /// Positive zeros of `phi''` in `(0, cap]`.
    pub fn critical_points_phi_dd(&self, cap: f64) -> Vec<f64> {
        self.positive_zeros(
            |w| self.phi_double_prime(w),
            || self.phi_dd_numerator(),
            self.phi_dd_degree_bound(),
            cap,
        )
    }

    /// Finite point beyond `lo` where `f` has sign `target`, found by
    /// doubling. `None` if none is found before overflow.
    fn tail_point<F: Fn(f64) -> f64>(f: F, lo: f64, target: i32) -> Option<f64> {
        let mut x = (2.0 * lo).max(lo + 1.0);
        while x.is_finite() {
            if sign(f(x)) == target {
                return Some(x);
            }
            x *= 2.0;
        }
        None
    }

    /// Feasible intervals: where `H(w) >= 0`, built piecewise on the
    /// intervals where `H` is monotonic.
    pub fn feasible_intervals(&self, cap: f64) -> Vec<FeasiblePiece> {
        let breaks = self.critical_points_h(cap);
        self.feasible_from_breakpoints(&breaks)
    }

    fn feasible_from_breakpoints(&self, breaks: &[f64]) -> Vec<FeasiblePiece> {
        let mut edges = vec![0.0];
        edges.extend_from_slice(breaks);
        edges.push(f64::INFINITY);
        let value = |w: f64| if w.is_infinite() { self.h_limit() } else { self.h(w) };
        const ZERO: f64 = 1e-12;

        let mut pieces: Vec<FeasiblePiece> = Vec::new();
        let mut isolated: Vec<f64> = Vec::new();
        for pair in edges.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let (hl, hh) = (value(lo), value(hi));
            let zero_l = hl.abs() <= ZERO;
            let zero_h = hh.abs() <= ZERO;
            if (hl >= 0.0 || zero_l) && (hh >= 0.0 || zero_h) {
                pieces.push(FeasiblePiece { omega_lo: lo, omega_hi: hi, isolated: false });
            } else if zero_l && hh < 0.0 {
                isolated.push(lo);
            } else if zero_h && hl < 0.0 {
                isolated.push(hi);
            } else if hl < 0.0 && hh < 0.0 {
            } else {
                let upper = if hi.is_finite() {
                    hi
                } else {
                    match Self::tail_point(|w| self.h(w), lo, sign(hh)) {
                        Some(x) => x,
                        None => continue,
                    }
                };
                let w0 = bisect(|w| self.h(w), lo, upper, self.bisect_tol);
                if hl < 0.0 {
                    pieces.push(FeasiblePiece { omega_lo: w0, omega_hi: hi, isolated: false });
                } else {
                    pieces.push(FeasiblePiece { omega_lo: lo, omega_hi: w0, isolated: false });
                }
            }
        }
        for w in isolated {
            let covered = pieces.iter().any(|p| p.omega_lo <= w && w <= p.omega_hi);
            if !covered && w.is_finite() {
                pieces.push(FeasiblePiece { omega_lo: w, omega_hi: w, isolated: true });
            }
        }
        pieces.sort_by(|a, b| a.omega_lo.total_cmp(&b.omega_lo));
        pieces
    }

    /// Intervals partitioning `[0, inf)` on which `phi'` has a fixed sign,
    /// split at the zeros of `phi'`.
    pub fn direction_intervals(&self, cap: f64) -> Vec<DirectionInterval> {
        let dd = self.critical_points_phi_dd(cap);
        let zeros = self.phi_prime_zeros_from(&dd, cap);
        self.directions_from_zeros(&zeros, cap)
    }

    fn phi_prime_zeros_from(&self, dd_zeros: &[f64], cap: f64) -> Vec<f64> {
        let mut edges = vec![0.0];
        edges.extend_from_slice(dd_zeros);
        edges.push(f64::INFINITY);
        let tail = self.phi_prime_tail_sign(cap);
        let is_zero = |w: f64| w.is_finite() && self.phi_prime(w).abs() <= 1e-13 * (1.0 + self.h(w).abs());
        let value_sign = |w: f64| if w.is_infinite() { tail } else { sign(self.phi_prime(w)) };

        let mut zeros = Vec::new();
        for pair in edges.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            if is_zero(lo) {
                zeros.push(lo);
            }
            if is_zero(hi) {
                zeros.push(hi);
            }
            if value_sign(lo) * value_sign(hi) < 0 {
                let upper = if hi.is_finite() {
                    hi
                } else {
                    match Self::tail_point(|w| self.phi_prime(w), lo, tail) {
                        Some(x) => x,
                        None => continue,
                    }
                };
                zeros.push(bisect(|w| self.phi_prime(w), lo, upper, self.bisect_tol));
            }
        }
        cluster_sorted(zeros)
    }

    fn directions_from_zeros(&self, zeros: &[f64], cap: f64) -> Vec<DirectionInterval> {
        let mut edges = vec![0.0];
        edges.extend(zeros.iter().copied().filter(|z| *z > 0.0));
        edges.push(f64::INFINITY);
        edges
            .windows(2)
            .map(|pair| {
                let (lo, hi) = (pair[0], pair[1]);
                let phi_sign = if hi.is_finite() {
                    sign(self.phi_prime(0.5 * (lo + hi)))
                } else {
                    self.phi_prime_tail_sign(cap)
                };
                DirectionInterval { omega_lo: lo, omega_hi: hi, phi_sign }
            })
            .collect()
    }

    /// `I = I_h ∩ I_d`, annotated with monotonicity signs, crossing
    /// direction and endpoint values.
    pub fn intersect(&self, feasible: &[FeasiblePiece], directions: &[DirectionInterval], cap: f64) -> Vec<BoundaryInterval> {
        let mut out = Vec::new();
        for piece in feasible {
            if piece.isolated {
                let w = piece.omega_lo;
                if let Some(d) = directions.iter().find(|d| d.omega_lo <= w && w <= d.omega_hi) {
                    out.push(self.annotate(w, w, d.phi_sign, true, cap));
                }
                continue;
            }
            for d in directions {
                let lo = piece.omega_lo.max(d.omega_lo);
                let hi = piece.omega_hi.min(d.omega_hi);
                if lo < hi {
                    out.push(self.annotate(lo, hi, d.phi_sign, false, cap));
                }
            }
        }
        out.sort_by(|a, b| a.omega_lo.total_cmp(&b.omega_lo));
        out
    }

    fn annotate(&self, lo: f64, hi: f64, phi_sign: i32, tangential: bool, cap: f64) -> BoundaryInterval {
        let interior = if hi.is_finite() { 0.5 * (lo + hi) } else { lo.max(cap) * 2.0 + 1.0 };
        let h_sign = if hi.is_finite() || self.h_limit().is_infinite() {
            sign(self.h_prime(interior))
        } else {
            sign(self.h_limit() - self.h(lo))
        };
        let (phi_hi, h_hi) = if hi.is_finite() {
            (self.phi(hi), self.h(hi))
        } else {
            (self.phi_limit(phi_sign, cap), self.h_limit())
        };
        BoundaryInterval {
            omega_lo: lo,
            omega_hi: hi,
            h_sign,
            phi_sign,
            crossing_direction: crossing_direction(self.sigma0, phi_sign),
            phi_lo: self.phi(lo),
            phi_hi,
            h_lo: self.h(lo),
            h_hi,
            tangential,
        }
    }

    /// Boundary points where `H'` and `phi'` vanish together with a
    /// nonnegative delay and a confirmed characteristic root: crossing roots
    /// of multiplicity greater than one.
    pub fn multiplicity_guard(&self, h_zeros: &[f64], phi_prime_zeros: &[f64]) -> Vec<(f64, f64)> {
        let mut candidates = vec![0.0];
        candidates.extend_from_slice(h_zeros);
        let mut hits = Vec::new();
        for &w in &candidates {
            let near_zero = phi_prime_zeros.iter().any(|z| (z - w).abs() <= 1e-9 * (1.0 + w));
            let small = self.phi_prime(w).abs() <= 1e-9 * (1.0 + self.h(w).abs());
            if !(near_zero || small) {
                continue;
            }
            let h0 = self.h(w);
            if h0 < -1e-12 {
                continue;
            }
            let h0 = h0.max(0.0);
            let s = self.root_at(w);
            if let Ok(g) = self.plant.eval(s) {
                let residual = (g * (-s * h0).exp() + 1.0).norm();
                if residual < 1e-8 {
                    hits.push((w, h0));
                }
            }
        }
        hits
    }

    /// Runs the whole interval computation.
    pub fn compute_intervals(&self, cap: Option<f64>) -> IntervalSet {
        let omega_cap = self.effective_omega_cap(cap);
        let h_breakpoints = self.critical_points_h(omega_cap);
        let feasible = self.feasible_from_breakpoints(&h_breakpoints);
        let phi_dd_zeros = self.critical_points_phi_dd(omega_cap);
        let phi_prime_zeros = self.phi_prime_zeros_from(&phi_dd_zeros, omega_cap);
        let directions = self.directions_from_zeros(&phi_prime_zeros, omega_cap);
        let intervals = self.intersect(&feasible, &directions, omega_cap);
        let multiple_roots = self.multiplicity_guard(&h_breakpoints, &phi_prime_zeros);
        IntervalSet {
            sigma0: self.sigma0,
            omega_cap,
            h_breakpoints,
            phi_dd_zeros,
            phi_prime_zeros,
            feasible,
            directions,
            intervals,
            multiple_roots,
        }
    }
}

/// Crossing direction of a boundary root where `phi'` has sign `phi_sign`:
/// `+1` enters `Re(s) >= sigma0`, `-1` leaves it.
pub fn crossing_direction(sigma0: f64, phi_sign: i32) -> i32 {
    sign(sigma0) * phi_sign
}

fn product(iter: impl Iterator<Item = RealPolynomial>) -> RealPolynomial {
    iter.fold(RealPolynomial::constant(1.0), |acc, p| &acc * &p)
}

fn sign_change_zeros<F: Fn(f64) -> f64>(f: &F, grid: &[f64], tol: f64) -> Vec<f64> {
    let values: Vec<f64> = grid.iter().map(|&w| f(w)).collect();
    let mut zeros = Vec::new();
    for k in 0..grid.len().saturating_sub(1) {
        let (a, b) = (values[k], values[k + 1]);
        if a == 0.0 {
            zeros.push(grid[k]);
        } else if a * b < 0.0 {
            zeros.push(bisect(f, grid[k], grid[k + 1], tol));
        }
    }
    if values.last() == Some(&0.0) {
        zeros.push(*grid.last().unwrap());
    }
    zeros
}

fn cluster_sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(v.len());
    for x in v {
        match out.last() {
            Some(&last) if (x - last).abs() <= DEFAULT_CLUSTER_TOL * (1.0 + last.abs()) => {}
            _ => out.push(x),
        }
    }
    out
}

/// A piece of the boundary where `H >= 0` and `H` is monotonic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasiblePiece {
    pub omega_lo: f64,
    pub omega_hi: f64,
    /// Single point where `H` touches zero from below.
    pub isolated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectionInterval {
    pub omega_lo: f64,
    pub omega_hi: f64,
    pub phi_sign: i32,
}

/// One interval of `I`: `H >= 0`, `H` and `phi` monotonic, crossing
/// direction fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryInterval {
    pub omega_lo: f64,
    /// `f64::INFINITY` for the unbounded last interval.
    pub omega_hi: f64,
    pub h_sign: i32,
    pub phi_sign: i32,
    pub crossing_direction: i32,
    pub phi_lo: f64,
    pub phi_hi: f64,
    pub h_lo: f64,
    /// Limit value when `omega_hi` is infinite.
    pub h_hi: f64,
    /// Isolated point where `H` touches zero; never enumerated.
    pub tangential: bool,
}

impl BoundaryInterval {
    pub fn phi_min(&self) -> f64 {
        self.phi_lo.min(self.phi_hi)
    }

    pub fn phi_max(&self) -> f64 {
        self.phi_lo.max(self.phi_hi)
    }

    pub fn is_unbounded(&self) -> bool {
        self.omega_hi.is_infinite()
    }
}

/// Everything the interval stage produces for one boundary.
#[derive(Debug, Clone, Serialize)]
pub struct IntervalSet {
    pub sigma0: f64,
    pub omega_cap: f64,
    /// Positive zeros of `H'`.
    pub h_breakpoints: Vec<f64>,
    /// Positive zeros of `phi''`.
    pub phi_dd_zeros: Vec<f64>,
    /// Zeros of `phi'` (breakpoints of the direction intervals).
    pub phi_prime_zeros: Vec<f64>,
    pub feasible: Vec<FeasiblePiece>,
    pub directions: Vec<DirectionInterval>,
    pub intervals: Vec<BoundaryInterval>,
    /// Confirmed multiple crossing roots `(omega, delay)`.
    pub multiple_roots: Vec<(f64, f64)>,
}

/// Sampled `(w, H(w), phi(w))` for plotting.
pub fn sample_curves(bf: &BoundaryFunctions, omega_max: f64, samples: usize) -> Vec<(f64, f64, f64)> {
    (0..=samples)
        .map(|k| {
            let w = omega_max * k as f64 / samples as f64;
            (w, bf.h(w), bf.phi(w))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::tests::example_plant;
    use std::f64::consts::PI;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn example() -> BoundaryFunctions {
        BoundaryFunctions::new(&example_plant(), -0.1, 1e-8).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Zeros of `f` on `(0, hi]` by a dense uniform sign scan.
    fn dense_scan(f: impl Fn(f64) -> f64, hi: f64, step: f64) -> Vec<f64> {
        let n = (hi / step) as usize;
        let mut out = Vec::new();
        let mut prev = f(step);
        for k in 2..=n {
            let w = k as f64 * step;
            let v = f(w);
            if prev * v < 0.0 {
                out.push(w - 0.5 * step);
            }
            prev = v;
        }
        out
    }

    #[test]
    fn h_matches_log_magnitude() {
        let bf = example();
        let g = example_plant();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let w = rng.gen_range(0.0..40.0);
            let direct = g.eval(c(-0.1, w)).unwrap().norm().ln() / -0.1;
            assert!((bf.h(w) - direct).abs() <= 1e-10 * direct.abs().max(1.0), "w={w}");
        }
    }

    #[test]
    fn h_examples() {
        let bf = BoundaryFunctions::new(&PoleZeroGain::new(1.0, vec![], vec![c(-1.0, 0.0)]).unwrap(), -0.5, 1e-8).unwrap();
        assert!((bf.h(0.0) + 2.0 * 2f64.ln()).abs() < 1e-14);

        let bf = example();
        assert!((bf.h(0.642) - 4.488).abs() < 5e-3);
        for k in 0..=100 {
            assert!(bf.h(1.144 * k as f64 / 100.0) >= -1e-4);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let bf = example();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let check = |name: &str, analytic: f64, fd: f64| {
            let rel = (analytic - fd).abs() / analytic.abs().max(1e-3);
            assert!(rel < 1e-6, "{name}: {analytic} vs {fd}");
        };
        for _ in 0..50 {
            let w: f64 = rng.gen_range(0.0..6.0);
            let step = 1e-6 * (1.0 + w);
            let fd = |f: &dyn Fn(f64) -> f64| (f(w + step) - f(w - step)) / (2.0 * step);
            check("H'", bf.h_prime(w), fd(&|x| bf.h(x)));
            check("H''", bf.h_double_prime(w), fd(&|x| bf.h_prime(x)));
            check("phi'", bf.phi_prime(w), fd(&|x| bf.phi(x)));
            check("phi''", bf.phi_double_prime(w), fd(&|x| bf.phi_prime(x)));
        }
    }

    #[test]
    fn h_prime_numerator_roots_are_zeros_of_h_prime() {
        let bf = example();
        let p = bf.h_prime_numerator();
        assert!(p.degree().unwrap() <= 9);
        let roots = p.nonnegative_real_roots(DEFAULT_CLUSTER_TOL).unwrap();
        assert!(!roots.is_empty());
        for r in roots {
            let scale = bf.h_double_prime(r).abs().max(1.0);
            assert!(bf.h_prime(r).abs() < 1e-7 * scale, "r={r}");
        }
        // The numerator is sigma0 * H' times the positive denominator.
        for w in [0.3, 1.7, 4.0] {
            let den: f64 = bf.zeros.iter().chain(&bf.poles).map(|t| t.gamma(w)).product();
            assert!((p.eval(w) - 0.1 * -bf.h_prime(w) * den).abs() < 1e-9 * den);
        }
    }

    #[test]
    fn single_pole_numerator() {
        let g = PoleZeroGain::new(1.0, vec![], vec![c(-1.0, 0.0)]).unwrap();
        let bf = BoundaryFunctions::new(&g, -0.5, 1e-8).unwrap();
        assert_eq!(bf.h_prime_numerator().coeffs(), &[-0.0, -1.0]);
        assert!(bf.critical_points_h(100.0).is_empty());

        // phi'' numerator reduces to -Phi_p(w); check its roots by scanning.
        let p = bf.phi_dd_numerator();
        let expected = Term { dsigma: 0.5, omega: 0.0 }.phi_dd_poly(-0.5).scale(-1.0);
        assert_eq!(p, expected);
        let scan = dense_scan(|w| bf.phi_double_prime(w), 20.0, 1e-4);
        let roots: Vec<f64> = p.nonnegative_real_roots(DEFAULT_CLUSTER_TOL).unwrap().into_iter().filter(|r| *r > 0.0).collect();
        assert_eq!(roots.len(), scan.len());
        for (a, b) in roots.iter().zip(&scan) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn phi_dd_numerator_roots_are_zeros_of_phi_dd() {
        let bf = example();
        let p = bf.phi_dd_numerator();
        for r in p.nonnegative_real_roots(DEFAULT_CLUSTER_TOL).unwrap() {
            let scale = bf.phi_prime(r).abs().max(1.0) * 10.0;
            assert!(bf.phi_double_prime(r).abs() < 1e-7 * scale, "r={r}");
        }
    }

    #[test]
    fn critical_points_match_dense_scan() {
        let bf = example();
        let cap = bf.effective_omega_cap(None);
        let found = bf.critical_points_h(cap);
        let scan = dense_scan(|w| bf.h_prime(w), 10.0, 1e-4);
        assert_eq!(found.len(), scan.len(), "{found:?} vs {scan:?}");
        for (a, b) in found.iter().zip(&scan) {
            assert!((a - b).abs() < 1e-4);
        }
        assert!(found.iter().any(|w| (*w - 1.144).abs() < 1e-3));
        assert!(found.iter().any(|w| *w > 1.369 && *w < 2.249));
        assert_eq!(found, bf.critical_points_h(cap));
    }

    #[test]
    fn example_feasible_intervals() {
        let bf = example();
        let cap = bf.effective_omega_cap(None);
        let pieces = bf.feasible_intervals(cap);
        let expected = [(0.0, 1.144), (1.144, 1.369), (2.249, f64::INFINITY)];
        assert_eq!(pieces.len(), 3, "{pieces:?}");
        for (p, (lo, hi)) in pieces.iter().zip(expected) {
            assert!((p.omega_lo - lo).abs() < 1e-3);
            if hi.is_finite() {
                assert!((p.omega_hi - hi).abs() < 1e-3);
            } else {
                assert!(p.omega_hi.is_infinite());
            }
        }
    }

    #[test]
    fn feasible_cases() {
        // H < 0 everywhere: |G| > 1 on the whole line with |d| > 1.
        let g = PoleZeroGain::new(3.0, vec![c(-1.0, 0.0)], vec![c(-2.0, 0.0)]).unwrap();
        let bf = BoundaryFunctions::new(&g, -0.1, 1e-8).unwrap();
        assert!(bf.feasible_intervals(100.0).is_empty());

        // H >= 0 everywhere: small gain, strictly proper.
        let g = PoleZeroGain::new(0.1, vec![], vec![c(-1.0, 0.0)]).unwrap();
        let bf = BoundaryFunctions::new(&g, -0.5, 1e-8).unwrap();
        let pieces = bf.feasible_intervals(100.0);
        assert_eq!(pieces.len(), 1);
        assert_eq!(pieces[0].omega_lo, 0.0);
        assert!(pieces[0].omega_hi.is_infinite());
    }

    #[test]
    fn phi_examples() {
        let bf = example();
        assert_eq!(bf.phi(0.0), 0.0);
        assert!((bf.phi(0.642) + PI).abs() < 5e-3);
    }

    #[test]
    fn example_direction_intervals() {
        let bf = example();
        let cap = bf.effective_omega_cap(None);
        let dirs = bf.direction_intervals(cap);
        assert_eq!(dirs.len(), 3, "{dirs:?}");
        assert!((dirs[0].omega_hi - 1.156).abs() < 1e-3);
        assert!((dirs[1].omega_hi - 1.559).abs() < 1e-3);
        assert!(dirs[2].omega_hi.is_infinite());
        assert_eq!(dirs.iter().map(|d| d.phi_sign).collect::<Vec<_>>(), vec![-1, 1, -1]);
        for d in &dirs {
            let hi = if d.omega_hi.is_finite() { d.omega_hi } else { cap };
            for k in 1..20 {
                let w = d.omega_lo + (hi - d.omega_lo) * k as f64 / 20.0;
                assert_eq!(sign(bf.phi_prime(w)), d.phi_sign, "w={w}");
            }
        }
    }

    #[test]
    fn monotone_phi_prime_gives_single_direction_interval() {
        let g = PoleZeroGain::new(0.1, vec![], vec![c(-1.0, 0.0)]).unwrap();
        let bf = BoundaryFunctions::new(&g, -0.5, 1e-8).unwrap();
        let dirs = bf.direction_intervals(100.0);
        assert_eq!(dirs.len(), 1);
        assert_eq!(dirs[0].omega_lo, 0.0);
        assert!(dirs[0].omega_hi.is_infinite());
    }

    #[test]
    fn crossing_direction_signs() {
        assert_eq!(crossing_direction(-0.1, -1), 1);
        assert_eq!(crossing_direction(-0.1, 1), -1);
    }

    #[test]
    fn example_intersection_signs() {
        let set = example().compute_intervals(None);
        let expected = [
            (0.0, 1.144, 1, -1, 1),
            (1.144, 1.156, -1, -1, 1),
            (1.156, 1.369, -1, 1, -1),
            (2.249, f64::INFINITY, 1, -1, 1),
        ];
        assert_eq!(set.intervals.len(), 4, "{:?}", set.intervals);
        for (iv, (lo, hi, hs, ps, cd)) in set.intervals.iter().zip(expected) {
            assert!((iv.omega_lo - lo).abs() < 1e-3);
            assert!(if hi.is_finite() { (iv.omega_hi - hi).abs() < 1e-3 } else { iv.omega_hi.is_infinite() });
            assert_eq!((iv.h_sign, iv.phi_sign, iv.crossing_direction), (hs, ps, cd));
        }
        assert!(set.multiple_roots.is_empty());
    }

    #[test]
    fn intersect_edge_cases() {
        let bf = example();
        let feasible = [FeasiblePiece { omega_lo: 0.0, omega_hi: 1.0, isolated: false }];
        let dirs = [DirectionInterval { omega_lo: 2.0, omega_hi: 3.0, phi_sign: 1 }];
        assert!(bf.intersect(&feasible, &dirs, 10.0).is_empty());

        let feasible = [FeasiblePiece { omega_lo: 0.0, omega_hi: f64::INFINITY, isolated: false }];
        let dirs = [DirectionInterval { omega_lo: 0.0, omega_hi: f64::INFINITY, phi_sign: -1 }];
        assert_eq!(bf.intersect(&feasible, &dirs, 10.0).len(), 1);
    }

    #[test]
    fn interval_invariants_hold_on_samples() {
        let bf = example();
        let set = bf.compute_intervals(None);
        for iv in &set.intervals {
            let hi = if iv.omega_hi.is_finite() { iv.omega_hi } else { set.omega_cap };
            for k in 1..20 {
                let w = iv.omega_lo + (hi - iv.omega_lo) * k as f64 / 20.0;
                assert!(bf.h(w) >= -1e-12);
                assert_eq!(sign(bf.phi_prime(w)), iv.phi_sign);
                assert_eq!(sign(bf.h_prime(w)), iv.h_sign);
            }
        }
    }

    #[test]
    fn guard_detects_constructed_double_root() {
        // G = e^{-2} / (s + 1) has a double characteristic root at s = -2
        // for h = 1: G'/G = -1/(s+1) = h and G(s) e^{-hs} = -1 there.
        let g = PoleZeroGain::new((-2.0f64).exp(), vec![], vec![c(-1.0, 0.0)]).unwrap();
        let bf = BoundaryFunctions::new(&g, -2.0, 1e-8).unwrap();
        let set = bf.compute_intervals(None);
        assert_eq!(set.multiple_roots.len(), 1, "{set:?}");
        let (w, h) = set.multiple_roots[0];
        assert_eq!(w, 0.0);
        assert!((h - 1.0).abs() < 1e-12);

        // Moving the boundary slightly breaks the coincidence.
        let bf = BoundaryFunctions::new(&g, -2.0 - 1e-3, 1e-8).unwrap();
        assert!(bf.compute_intervals(None).multiple_roots.is_empty());
    }

    #[test]
    fn identity_between_log_derivative_and_boundary_derivatives() {
        let bf = example();
        let g = example_plant();
        // Holds at any boundary point with h0 = H(w0).
        for w in [0.642, 1.325, 2.377, 3.958] {
            let s = c(-0.1, w);
            let lhs = g.log_derivative(s) - bf.h(w);
            let rhs = c(bf.phi_prime(w) + w * bf.h_prime(w), 0.1 * bf.h_prime(w));
            assert!((lhs - rhs).norm() < 1e-7, "w={w}: {lhs} vs {rhs}");
        }
    }
}
