#![allow(dead_code)]

use std::f64::consts::PI;

use delaymargin::PoleZeroGain;
use num_complex::Complex64;
use rand::Rng;

/// `(2s^2 + s + 3) / (s^3 + 2s^2 + 3s + 4)`.
pub fn example() -> PoleZeroGain {
    PoleZeroGain::from_rational(&[3.0, 1.0, 2.0], &[4.0, 3.0, 2.0, 1.0]).unwrap()
}

pub fn thowsen() -> PoleZeroGain {
    PoleZeroGain::from_rational(&[1.0], &[1.0, 2.0, 1.0, 1.0]).unwrap()
}

pub fn chen() -> PoleZeroGain {
    PoleZeroGain::from_rational(&[0.0, 1.0], &[1.0, 1.0, 1.0]).unwrap()
}

pub fn louisell() -> PoleZeroGain {
    PoleZeroGain::from_rational(&[-2.0, -1.0], &[4.0, 1.0, 1.0]).unwrap()
}

pub fn han_yu_gu() -> PoleZeroGain {
    PoleZeroGain::from_rational(&[3.0, -0.1], &[0.0, 1.0]).unwrap()
}

pub fn hu_liu() -> PoleZeroGain {
    PoleZeroGain::from_rational(&[1.0, -0.2], &[0.0, 1.0]).unwrap()
}

/// `prod_{n <= terms} (1 + s/(n pi)^2) / (1 + s/((n - 1/2) pi)^2)`.
pub fn heat(terms: usize) -> PoleZeroGain {
    let pi2 = PI * PI;
    let zeros = (1..=terms).map(|n| Complex64::new(-(n as f64).powi(2) * pi2, 0.0)).collect();
    let poles = (1..=terms).map(|n| Complex64::new(-(n as f64 - 0.5).powi(2) * pi2, 0.0)).collect();
    let gain = (1..=terms).map(|n| ((n as f64 - 0.5) / n as f64).powi(2)).product();
    PoleZeroGain::new(gain, zeros, poles).unwrap()
}

/// `count` conjugate-closed values in `[-5, 1] x [-5j, 5j]`.
pub fn random_roots<R: Rng>(rng: &mut R, count: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let re = rng.gen_range(-5.0..1.0);
        if count - out.len() >= 2 && rng.gen_bool(0.5) {
            let im = rng.gen_range(0.05..5.0);
            out.push(Complex64::new(re, im));
            out.push(Complex64::new(re, -im));
        } else {
            out.push(Complex64::new(re, 0.0));
        }
    }
    out
}

/// A random strictly proper plant with at most six poles and a boundary
/// in `[-1, -0.05]` clear of every pole and zero.
pub fn random_case<R: Rng>(rng: &mut R) -> (PoleZeroGain, f64) {
    loop {
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(0..n);
        let poles = random_roots(rng, n);
        let zeros = random_roots(rng, m);
        let gain = rng.gen_range(0.2..5.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let Ok(plant) = PoleZeroGain::new(gain, zeros, poles) else { continue };
        let separated = plant
            .zeros()
            .iter()
            .all(|z| plant.poles().iter().all(|p| (z - p).norm() > 1e-3));
        if !separated {
            continue;
        }
        for _ in 0..20 {
            let sigma0 = rng.gen_range(-1.0..-0.05);
            if plant.boundary_clearance(sigma0) > 1e-2 {
                return (plant, sigma0);
            }
        }
    }
}

/// Five-point central difference.
pub fn derivative(f: impl Fn(f64) -> f64, x: f64, step: f64) -> f64 {
    (-f(x + 2.0 * step) + 8.0 * f(x + step) - 8.0 * f(x - step) + f(x - 2.0 * step)) / (12.0 * step)
}

/// Distance from `s` to the nearest pole or zero.
pub fn singularity_distance(plant: &PoleZeroGain, s: Complex64) -> f64 {
    plant.zeros().iter().chain(plant.poles()).map(|t| (s - t).norm()).fold(f64::INFINITY, f64::min)
}
