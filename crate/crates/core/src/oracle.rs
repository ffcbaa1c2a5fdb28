//! Independent checks on `f(s, h) = 1 + G(s) e^{-hs}`: root counts by the
//! argument principle on a rectangle, and Newton refinement of single roots.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::sign;
use crate::plant::PoleZeroGain;

const INITIAL_SEGMENTS: usize = 64;
/// Total evaluation budget for one contour.
pub const MAX_EVALUATIONS: usize = 1 << 20;
const MAX_NUDGES: usize = 5;
const NUDGE: f64 = 1e-3;
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;

/// Rectangle `[sigma_lo, sigma_hi] x [omega_lo, omega_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountRegion {
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub omega_lo: f64,
    pub omega_hi: f64,
}

impl CountRegion {
    /// Scales the right and vertical extents by `factor`, keeping the left
    /// edge.
    pub fn grown(&self, factor: f64) -> Self {
        let width = self.sigma_hi - self.sigma_lo;
        CountRegion {
            sigma_lo: self.sigma_lo,
            sigma_hi: self.sigma_lo + factor * width,
            omega_lo: self.omega_lo * factor,
            omega_hi: self.omega_hi * factor,
        }
    }

    pub fn contains(&self, s: Complex64) -> bool {
        s.re > self.sigma_lo && s.re < self.sigma_hi && s.im > self.omega_lo && s.im < self.omega_hi
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.sigma_lo, self.omega_lo),
            Complex64::new(self.sigma_hi, self.omega_lo),
            Complex64::new(self.sigma_hi, self.omega_hi),
            Complex64::new(self.sigma_lo, self.omega_hi),
        ]
    }

    fn nudged(&self) -> Self {
        let scale = 1.0 + self.omega_hi.abs().max(self.sigma_hi.abs());
        CountRegion {
            sigma_lo: self.sigma_lo,
            sigma_hi: self.sigma_hi + NUDGE * scale,
            omega_lo: self.omega_lo - NUDGE * scale,
            omega_hi: self.omega_hi + NUDGE * scale,
        }
    }
}

/// `1 + G(s) e^{-hs}`.
pub fn characteristic(plant: &PoleZeroGain, h: f64, s: Complex64) -> Result<Complex64> {
    Ok(plant.eval(s)? * (-s * h).exp() + 1.0)
}

/// Upper bound of `|G(s)|` over `|s| = r`, as a logarithm, for `r` beyond
/// every pole.
fn log_envelope(plant: &PoleZeroGain, r: f64) -> f64 {
    plant.gain().abs().ln() + plant.zeros().iter().map(|z| (r + z.norm()).ln()).sum::<f64>()
        - plant.poles().iter().map(|p| (r - p.norm()).ln()).sum::<f64>()
}

/// A rectangle containing every root of `f` with `Re(s) >= sigma0`.
///
/// Such a root has `|G(s)| = e^{h Re(s)} >= e^{h sigma0}`; outside the
/// radius where the envelope of `|G|` drops below that level there are none.
pub fn enclosure_bounds(plant: &PoleZeroGain, h: f64, sigma0: f64) -> Result<CountRegion> {
    let level = h * sigma0;
    let d = plant.feedthrough();
    if d != 0.0 && d.abs().ln() >= level {
        return Err(Error::UnboundedRegion);
    }
    let r_min = plant.poles().iter().map(|p| p.norm()).fold(0.0, f64::max);
    let mut r = (2.0 * r_min).max(r_min + 1.0).max(2.0 * sigma0.abs() + 1.0);
    let mut doublings = 0;
    while log_envelope(plant, r) >= level {
        r *= 2.0;
        doublings += 1;
        if doublings > 200 || !r.is_finite() {
            return Err(Error::UnboundedRegion);
        }
    }
    let r = 1.1 * r;
    Ok(CountRegion { sigma_lo: sigma0, sigma_hi: r, omega_lo: -r, omega_hi: r })
}

/// Number of roots of `f` inside `region`.
///
/// The winding number of `f` along the boundary counts zeros minus poles;
/// the poles of `G` inside are added back. If `f` vanishes on the contour
/// the right and vertical edges are pushed outwards and the count retried.
pub fn count_roots(plant: &PoleZeroGain, h: f64, region: &CountRegion) -> Result<usize> {
    if !(h >= 0.0) {
        return Err(Error::InvalidInput(format!("delay must be nonnegative, got {h}")));
    }
    let mut region = *region;
    let mut last_err = Error::BoundaryRoot;
    for _ in 0..=MAX_NUDGES {
        match winding_number(plant, h, &region) {
            Ok(w) => {
                let poles_inside = plant.poles().iter().filter(|p| region.contains(**p)).count() as i64;
                let zeros = w + poles_inside;
                if zeros < 0 {
                    return Err(Error::BoundaryRoot);
                }
                return Ok(zeros as usize);
            }
            Err(e @ Error::BoundaryRoot) => {
                last_err = e;
                region = region.nudged();
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err)
}

/// Roots of `f` with `Re(s) >= sigma0`, using [`enclosure_bounds`].
pub fn count_roots_right_of(plant: &PoleZeroGain, h: f64, sigma0: f64) -> Result<usize> {
    count_roots(plant, h, &enclosure_bounds(plant, h, sigma0)?)
}

fn winding_number(plant: &PoleZeroGain, h: f64, region: &CountRegion) -> Result<i64> {
    let corners = region.corners();
    let scale = 1.0 + region.sigma_hi.abs().max(region.omega_hi.abs());
    // Value of f and a bound on the rate of change of its argument.
    let eval = |s: Complex64| -> Result<Sample> {
        let ge = plant.eval(s).map_err(|_| Error::BoundaryRoot)? * (-s * h).exp();
        let f = ge + 1.0;
        if !f.is_finite() {
            return Err(Error::NonFinite);
        }
        if f.norm() < 1e-12 {
            return Err(Error::BoundaryRoot);
        }
        let df = ge * (plant.log_derivative(s) - h);
        let rate = if df.is_finite() { df.norm() / f.norm() } else { 0.0 };
        let pole_distance = plant.poles().iter().map(|p| (s - p).norm()).fold(f64::INFINITY, f64::min);
        Ok(Sample { f, rate, pole_distance })
    };

    let mut evaluations = 0usize;
    let mut total = 0.0;
    for k in 0..4 {
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        let length = (b - a).norm();
        let mut points: Vec<(f64, Sample)> = Vec::with_capacity(INITIAL_SEGMENTS + 1);
        for j in 0..=INITIAL_SEGMENTS {
            let t = j as f64 / INITIAL_SEGMENTS as f64;
            points.push((t, eval(a + (b - a) * t)?));
        }
        evaluations += points.len();

        // Depth-first refinement: the stack holds the points still to walk,
        // the last one being the next.
        points.reverse();
        let mut current = points.pop().expect("edge has sample points");
        while let Some(next) = points.pop() {
            let step = (next.1.f / current.1.f).arg();
            let span = (next.0 - current.0) * length;
            // A pole of G just outside next to a root just inside turns the
            // argument by a full 2 pi over a short stretch.
            let near_pole = span > 0.5 * current.1.pole_distance.min(next.1.pole_distance);
            let smooth = span * current.1.rate.max(next.1.rate) < FRAC_PI_4 && !near_pole;
            if step.abs() < FRAC_PI_2 && smooth {
                total += step;
                current = next;
                continue;
            }
            if span < 1e-14 * scale {
                return Err(Error::BoundaryRoot);
            }
            evaluations += 1;
            if evaluations > MAX_EVALUATIONS {
                return Err(Error::ContourBudget(MAX_EVALUATIONS));
            }
            let t = 0.5 * (current.0 + next.0);
            points.push(next);
            points.push((t, eval(a + (b - a) * t)?));
        }
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

#[derive(Clone, Copy)]
struct Sample {
    f: Complex64,
    rate: f64,
    pole_distance: f64,
}

/// Newton iteration on `f(., h)` from `s_guess`.
pub fn refine_root(plant: &PoleZeroGain, h: f64, s_guess: Complex64) -> Result<Complex64> {
    let mut s = s_guess;
    let mut last_step = f64::INFINITY;
    for iteration in 0..=NEWTON_MAX_ITER {
        let ge = plant.eval(s)? * (-s * h).exp();
        let f = ge + 1.0;
        if f.norm() < NEWTON_TOL {
            return Ok(s);
        }
        if iteration == NEWTON_MAX_ITER {
            break;
        }
        let df = ge * (plant.log_derivative(s) - h);
        let step = f / df;
        if !step.is_finite() {
            break;
        }
        s -= step;
        last_step = step.norm();
    }
    Err(Error::DidNotConverge { iterations: NEWTON_MAX_ITER, max_correction: last_step })
}

/// Sign of the horizontal motion of the root through `s0` at delay `h0`,
/// from its positions at `h0 - delta` and `h0 + delta`.
pub fn numeric_crossing_direction(plant: &PoleZeroGain, h0: f64, s0: Complex64, delta: f64) -> Result<i32> {
    let before = refine_root(plant, (h0 - delta).max(0.0), s0)?;
    let after = refine_root(plant, h0 + delta, s0)?;
    Ok(sign(after.re - before.re))
}
