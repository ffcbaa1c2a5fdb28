//! Critical delays in increasing order and the number of characteristic
//! roots in `Re(s) >= sigma0` between them.
//!
//! Every boundary interval carries a cursor on the phase lines
//! `(2l + 1) pi - phi0`. The cursor with the smallest pending delay is
//! consumed first, so events come out sorted and the root count can be
//! updated one crossing at a time.

use std::f64::consts::PI;

use log::{debug, info, warn};
use num_complex::Complex64;
use serde::Serialize;

use crate::boundary::{BoundaryFunctions, BoundaryInterval, IntervalSet};
use crate::error::{Error, Result};
use crate::numeric::{bisect, sign, DEFAULT_BISECT_TOL};
use crate::plant::{BoundaryConfig, PoleZeroGain};
use crate::poly::{RealPolynomial, DEFAULT_CLUSTER_TOL};

/// Frequencies below this are treated as a real crossing root.
const ZERO_OMEGA: f64 = 1e-10;
/// Relative delay gap under which two events count as simultaneous.
const TIE_TOL: f64 = 1e-10;
/// Distance from the boundary under which a zero-delay root is on it.
const ON_BOUNDARY_TOL: f64 = 1e-9;
const MAX_PERTURBATIONS: usize = 20;
/// Safety net for enumerations that would otherwise not terminate.
pub const MAX_EVENTS: usize = 100_000;

/// A characteristic root on the boundary at a critical delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossingEvent {
    pub delay: f64,
    pub omega: f64,
    #[serde(serialize_with = "serialize_complex")]
    pub root: Complex64,
    /// `+1` enters `Re(s) >= sigma0`, `-1` leaves it, `0` touches it.
    pub direction: i32,
    pub interval_index: usize,
    pub line_level: f64,
}

impl CrossingEvent {
    /// Number of roots crossing together: 1 on the real axis, 2 otherwise.
    pub fn multiplicity(&self) -> usize {
        if self.omega < ZERO_OMEGA {
            1
        } else {
            2
        }
    }

    /// Signed change of the root count across this event.
    pub fn count_change(&self) -> i64 {
        self.direction as i64 * self.multiplicity() as i64
    }
}

fn serialize_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

/// Delay interval with a constant number of roots in `Re(s) >= sigma0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayIntervalReport {
    pub h_lo: f64,
    /// `f64::INFINITY` when the count holds for all larger delays.
    pub h_hi: f64,
    pub count: usize,
    pub event_at_hi: Option<CrossingEvent>,
}

impl DelayIntervalReport {
    pub fn midpoint(&self) -> f64 {
        if self.h_hi.is_finite() {
            0.5 * (self.h_lo + self.h_hi)
        } else {
            self.h_lo + 1.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictFlag {
    Normal,
    /// `|G(inf)| >= 1`: infinitely many roots inside for every delay.
    BiproperUnitOrMore,
    /// `|G(inf)| < 1`: infinitely many roots inside beyond `h_cap`.
    BiproperCapped,
}

impl VerdictFlag {
    pub fn verdict(&self) -> &'static str {
        match self {
            VerdictFlag::Normal => "finitely many characteristic roots inside C_s for every delay",
            VerdictFlag::BiproperUnitOrMore => "infinitely many characteristic roots inside C_s for all delays",
            VerdictFlag::BiproperCapped => "unstable with infinitely many roots inside C_s beyond h_cap",
        }
    }
}

/// A delay range, open at the top. `closed_lo` marks ranges starting at
/// zero delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DelayRange {
    pub lo: f64,
    pub hi: f64,
    pub closed_lo: bool,
}

impl DelayRange {
    pub fn contains(&self, h: f64) -> bool {
        (h > self.lo || (self.closed_lo && h == self.lo)) && h < self.hi
    }
}

/// A frequency where `|G(j w)| = 1`, for the imaginary-axis analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalFrequency {
    pub omega: f64,
    pub base_delay: f64,
    pub period: f64,
    pub direction: i32,
}

/// Outcome of a bounded-horizon analysis.
#[derive(Debug, Clone, Serialize)]
pub struct DelayAnalysis {
    pub requested_sigma0: f64,
    /// Boundary actually analysed, after any perturbation.
    pub sigma0: f64,
    pub phase_offset: f64,
    pub initial_count: usize,
    pub intervals: Vec<BoundaryInterval>,
    pub critical_frequencies: Vec<CriticalFrequency>,
    pub events: Vec<CrossingEvent>,
    pub reports: Vec<DelayIntervalReport>,
    pub verdict_flag: VerdictFlag,
    pub h_cap: Option<f64>,
    /// The event limit was hit before the stop rule.
    pub truncated: bool,
    pub warnings: Vec<String>,
}

impl DelayAnalysis {
    /// Reports with no root inside, as delay ranges.
    pub fn stable_intervals(&self) -> Vec<DelayRange> {
        stable_ranges(&self.reports)
    }

    fn unit_feedthrough(requested: f64) -> Self {
        DelayAnalysis {
            requested_sigma0: requested,
            sigma0: requested,
            phase_offset: 0.0,
            initial_count: 0,
            intervals: Vec::new(),
            critical_frequencies: Vec::new(),
            events: Vec::new(),
            reports: Vec::new(),
            verdict_flag: VerdictFlag::BiproperUnitOrMore,
            h_cap: None,
            truncated: false,
            warnings: Vec::new(),
        }
    }
}

/// Outcome of the all-delays analysis.
#[derive(Debug, Clone, Serialize)]
pub struct AllDelaysVerdict {
    pub stable_intervals: Vec<DelayRange>,
    /// Number of leaving events over all delays.
    pub leaving_budget: usize,
    pub termination_delay: f64,
    pub verdict_flag: VerdictFlag,
    pub analysis: DelayAnalysis,
}

fn stable_ranges(reports: &[DelayIntervalReport]) -> Vec<DelayRange> {
    reports
        .iter()
        .filter(|r| r.count == 0 && r.h_hi > r.h_lo)
        .map(|r| DelayRange { lo: r.h_lo, hi: r.h_hi, closed_lo: r.h_lo == 0.0 })
        .collect()
}

/// `0` when `G(sigma0) > 0`, `pi` otherwise.
pub fn phase_offset(plant: &PoleZeroGain, sigma0: f64) -> Result<f64> {
    let g = plant.eval(Complex64::new(sigma0, 0.0))?;
    Ok(if g.re > 0.0 { 0.0 } else { PI })
}

/// Whether `H` and `phi` move the same way on the interval.
fn same_monotonicity(interval: &BoundaryInterval) -> bool {
    interval.h_sign * interval.phi_sign >= 0
}

fn line_in_range(interval: &BoundaryInterval, line: f64) -> bool {
    let slack = 1e-12 * (1.0 + line.abs());
    line.is_finite() && line >= interval.phi_min() - slack && line <= interval.phi_max() + slack
}

/// The phase line giving the smallest delay on `interval`.
pub fn initial_line(interval: &BoundaryInterval, phi0: f64) -> Result<f64> {
    let no_hit = Error::NoIntersection { omega_lo: interval.omega_lo, omega_hi: interval.omega_hi };
    let l = if same_monotonicity(interval) {
        ((interval.phi_min() + phi0) / (2.0 * PI) - 0.5).ceil()
    } else {
        ((interval.phi_max() + phi0) / (2.0 * PI) - 0.5).floor()
    };
    let line = (2.0 * l + 1.0) * PI - phi0;
    if line_in_range(interval, line) {
        Ok(line)
    } else {
        Err(no_hit)
    }
}

/// Walks the phase lines of one boundary interval in increasing delay.
#[derive(Debug, Clone)]
pub struct IntervalCursor {
    pub interval: BoundaryInterval,
    pub index: usize,
    pub line: f64,
    pub omega_current: f64,
    pub delay_current: f64,
    pub exhausted: bool,
    /// The lower endpoint belongs to the previous interval.
    skip_lo: bool,
    first_line: f64,
    steps: u64,
}

impl IntervalCursor {
    /// `None` if no phase line meets the interval.
    pub fn new(bf: &BoundaryFunctions, interval: BoundaryInterval, index: usize, phi0: f64, skip_lo: bool) -> Option<Self> {
        let line = initial_line(&interval, phi0).ok()?;
        let mut cursor = IntervalCursor {
            interval,
            index,
            line,
            omega_current: f64::NAN,
            delay_current: f64::NAN,
            exhausted: false,
            skip_lo,
            first_line: line,
            steps: 0,
        };
        cursor.settle(bf);
        (!cursor.exhausted).then_some(cursor)
    }

    /// Intersection of `phi` with the current line and its delay.
    pub fn solve_crossing(&self, bf: &BoundaryFunctions) -> (f64, f64) {
        let iv = &self.interval;
        let f = |w: f64| bf.phi(w) - self.line;
        let lo = iv.omega_lo;
        let omega = if f(lo) == 0.0 {
            lo
        } else {
            let hi = if iv.omega_hi.is_finite() {
                iv.omega_hi
            } else {
                let f_lo = f(lo);
                let mut hi = (2.0 * lo).max(lo + 1.0);
                for _ in 0..1000 {
                    if f(hi) * f_lo <= 0.0 {
                        break;
                    }
                    hi *= 2.0;
                }
                hi
            };
            if f(hi) == 0.0 {
                hi
            } else {
                polish(f, |w| bf.phi_prime(w), bisect(f, lo, hi, bf.bisect_tol()), lo, hi)
            }
        };
        (omega, bf.h(omega).max(0.0))
    }

    fn settle(&mut self, bf: &BoundaryFunctions) {
        loop {
            if !line_in_range(&self.interval, self.line) {
                self.exhausted = true;
                return;
            }
            let (omega, delay) = self.solve_crossing(bf);
            self.omega_current = omega;
            self.delay_current = delay;
            let at_lo = (omega - self.interval.omega_lo).abs() <= 1e-12 * (1.0 + omega);
            if !(self.skip_lo && at_lo) {
                return;
            }
            self.step_line();
        }
    }

    fn step_line(&mut self) {
        // Recomputed from the step count; repeated addition drifts by
        // many ulps after thousands of lines.
        self.steps += 1;
        let offset = self.steps as f64 * 2.0 * PI;
        self.line = if same_monotonicity(&self.interval) { self.first_line + offset } else { self.first_line - offset };
    }

    /// Moves to the next phase line.
    pub fn advance(&mut self, bf: &BoundaryFunctions) {
        if self.exhausted {
            return;
        }
        self.step_line();
        self.settle(bf);
    }

    fn event(&self, bf: &BoundaryFunctions) -> CrossingEvent {
        let omega = if self.omega_current < ZERO_OMEGA { 0.0 } else { self.omega_current };
        CrossingEvent {
            delay: self.delay_current,
            omega,
            root: bf.root_at(omega),
            direction: self.interval.crossing_direction,
            interval_index: self.index,
            line_level: self.line,
        }
    }
}

/// Newton steps on a bisection result, kept only while they stay in the
/// bracket and reduce the residual.
fn polish(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, mut w: f64, lo: f64, hi: f64) -> f64 {
    let mut fw = f(w);
    for _ in 0..3 {
        let d = df(w);
        if fw == 0.0 || d == 0.0 || !d.is_finite() {
            break;
        }
        let next = w - fw / d;
        let f_next = f(next);
        if !(next >= lo && next <= hi && f_next.abs() < fw.abs()) {
            break;
        }
        w = next;
        fw = f_next;
    }
    w
}

/// Phase lines meeting `interval`, with the number of roots crossing on
/// each (1 for a crossing at `w = 0`).
fn lines_on(interval: &BoundaryInterval, phi0: f64) -> Result<Vec<(f64, usize)>> {
    if !interval.phi_min().is_finite() || !interval.phi_max().is_finite() {
        return Err(Error::UnboundedLeavingInterval { omega_lo: interval.omega_lo });
    }
    let lo = ((interval.phi_min() + phi0) / (2.0 * PI) - 0.5).ceil();
    let hi = ((interval.phi_max() + phi0) / (2.0 * PI) - 0.5).floor();
    let mut out = Vec::new();
    let mut l = lo;
    while l <= hi {
        let line = (2.0 * l + 1.0) * PI - phi0;
        let real = interval.omega_lo < ZERO_OMEGA && (line - interval.phi_lo).abs() <= 1e-9;
        out.push((line, if real { 1 } else { 2 }));
        l += 1.0;
    }
    Ok(out)
}

fn leaving_intervals(intervals: &[BoundaryInterval]) -> impl Iterator<Item = &BoundaryInterval> {
    intervals.iter().filter(|iv| iv.crossing_direction == -1 && !iv.tangential)
}

/// Total number of leaving events over all delays.
pub fn leaving_count_total(intervals: &[BoundaryInterval], phi0: f64) -> Result<usize> {
    let mut total = 0;
    for iv in leaving_intervals(intervals) {
        total += lines_on(iv, phi0)?.len();
    }
    Ok(total)
}

/// Total number of roots that leave over all delays.
pub fn leaving_root_total(intervals: &[BoundaryInterval], phi0: f64) -> Result<usize> {
    let mut total = 0;
    for iv in leaving_intervals(intervals) {
        total += lines_on(iv, phi0)?.iter().map(|(_, m)| m).sum::<usize>();
    }
    Ok(total)
}

/// Roots of the zero-delay closed loop with `Re >= sigma0`.
pub fn initial_root_count(plant: &PoleZeroGain, sigma0: f64) -> Result<usize> {
    let roots = plant.closed_loop_poles_at_zero_delay()?;
    if roots.iter().any(|r| (r.re - sigma0).abs() < ON_BOUNDARY_TOL * (1.0 + r.norm().sqrt())) {
        return Err(Error::RootOnBoundary { sigma0 });
    }
    Ok(roots.iter().filter(|r| r.re >= sigma0).count())
}

/// When to stop enumerating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Stop after the last event with delay `<= h`.
    Horizon(f64),
    /// Stop once the count exceeds the roots still able to leave, or at
    /// `cap` (exclusive) if given.
    LeavingBudget { roots: usize, cap: Option<f64> },
}

#[derive(Debug, Clone)]
pub struct Enumeration {
    pub events: Vec<CrossingEvent>,
    pub reports: Vec<DelayIntervalReport>,
    pub truncated: bool,
    pub termination_delay: f64,
}

/// Merges the cursors of all intervals into one delay-ordered event list.
pub fn enumerate(
    bf: &BoundaryFunctions,
    intervals: &[BoundaryInterval],
    phi0: f64,
    initial_count: usize,
    stop: StopRule,
) -> Result<Enumeration> {
    let mut cursors: Vec<IntervalCursor> = Vec::new();
    for (k, iv) in intervals.iter().enumerate() {
        if iv.tangential {
            continue;
        }
        let shared = intervals.iter().any(|o| !o.tangential && o.omega_hi == iv.omega_lo);
        if let Some(c) = IntervalCursor::new(bf, *iv, k, phi0, shared) {
            cursors.push(c);
        }
    }

    let (horizon, cap) = match stop {
        StopRule::Horizon(h) => (h, None),
        StopRule::LeavingBudget { cap, .. } => (f64::INFINITY, cap),
    };
    let mut remaining = match stop {
        StopRule::LeavingBudget { roots, .. } => roots as i64,
        StopRule::Horizon(_) => i64::MAX,
    };

    let mut count = initial_count as i64;
    let mut events = Vec::new();
    let mut reports = Vec::new();
    let mut h_lo = 0.0;
    let mut truncated = false;
    let mut termination_delay = 0.0;
    // The last report holds only up to the next pending event.
    let mut last_hi = cap.unwrap_or(horizon);

    while let Some(next) = pick_next(&cursors) {
        let ev = cursors[next].event(bf);
        if ev.delay > horizon || cap.is_some_and(|c| ev.delay >= c) {
            break;
        }
        if count > remaining {
            debug!("stop: count {count} exceeds remaining leaving roots {remaining}");
            last_hi = ev.delay;
            break;
        }
        if events.len() >= MAX_EVENTS {
            warn!("event limit {MAX_EVENTS} reached at delay {}", ev.delay);
            truncated = true;
            last_hi = ev.delay;
            break;
        }
        cursors[next].advance(bf);

        reports.push(DelayIntervalReport { h_lo, h_hi: ev.delay, count: count as usize, event_at_hi: Some(ev) });
        h_lo = ev.delay;
        count += ev.count_change();
        if count < 0 {
            return Err(Error::NegativeCount { delay: ev.delay });
        }
        if ev.direction < 0 {
            remaining -= ev.multiplicity() as i64;
        }
        termination_delay = ev.delay;
        events.push(ev);
    }

    reports.push(DelayIntervalReport { h_lo, h_hi: last_hi.max(h_lo), count: count as usize, event_at_hi: None });
    Ok(Enumeration { events, reports, truncated, termination_delay })
}

/// Cursor with the smallest pending delay; ties go to the smaller `w`.
fn pick_next(cursors: &[IntervalCursor]) -> Option<usize> {
    let live = || cursors.iter().enumerate().filter(|(_, c)| !c.exhausted);
    let min_delay = live().map(|(_, c)| c.delay_current).fold(f64::INFINITY, f64::min);
    if !min_delay.is_finite() {
        return None;
    }
    live()
        .filter(|(_, c)| c.delay_current <= min_delay + TIE_TOL * (1.0 + min_delay))
        .min_by(|a, b| a.1.omega_current.total_cmp(&b.1.omega_current))
        .map(|(k, _)| k)
}

/// Boundary functions, intervals and zero-delay count, after moving the
/// boundary left as needed to satisfy the analysis assumptions.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub bf: BoundaryFunctions,
    pub set: IntervalSet,
    pub phi0: f64,
    pub initial_count: usize,
    pub warnings: Vec<String>,
}

pub fn prepare(plant: &PoleZeroGain, cfg: &BoundaryConfig) -> Result<Prepared> {
    cfg.validate()?;
    let mut sigma0 = cfg.sigma0;
    let mut warnings = Vec::new();
    for attempt in 0..=MAX_PERTURBATIONS {
        let trial = BoundaryConfig { sigma0, ..cfg.clone() };
        let err = match try_prepare(plant, &trial) {
            Ok(mut p) => {
                p.warnings = warnings;
                return Ok(p);
            }
            Err(e) => e,
        };
        if !err.is_assumption_violation() || cfg.strict || attempt == MAX_PERTURBATIONS {
            return Err(err);
        }
        let moved = sigma0 - 1e-6 * (1.0 + sigma0.abs());
        let msg = format!("{err}; boundary perturbed from {sigma0} to {moved}");
        warn!("{msg}");
        warnings.push(msg);
        sigma0 = moved;
    }
    unreachable!("perturbation loop returns on its last attempt")
}

fn try_prepare(plant: &PoleZeroGain, cfg: &BoundaryConfig) -> Result<Prepared> {
    let bf = BoundaryFunctions::from_config(plant, cfg)?;
    let set = bf.compute_intervals(cfg.omega_cap);
    if let Some(&(omega, delay)) = set.multiple_roots.first() {
        return Err(Error::MultipleRoot { omega, delay });
    }
    let initial_count = initial_root_count(plant, cfg.sigma0)?;
    let phi0 = phase_offset(plant, cfg.sigma0)?;
    info!(
        "sigma0 = {}: {} intervals, {} roots inside at zero delay",
        cfg.sigma0,
        set.intervals.len(),
        initial_count
    );
    Ok(Prepared { bf, set, phi0, initial_count, warnings: Vec::new() })
}

fn biproper_cap(plant: &PoleZeroGain, sigma0: f64) -> Option<f64> {
    let d = plant.feedthrough();
    (d != 0.0).then(|| d.abs().ln() / sigma0)
}

fn check_sigma0(cfg: &BoundaryConfig) -> Result<()> {
    if cfg.sigma0 >= 0.0 {
        return Err(Error::InvalidBoundary(
            "sigma0 = 0 is handled by the imaginary-axis analysis".into(),
        ));
    }
    Ok(())
}

/// Delay intervals and root counts on `[0, h_max]`.
pub fn analyze_up_to(plant: &PoleZeroGain, cfg: &BoundaryConfig, h_max: f64) -> Result<DelayAnalysis> {
    if !(h_max > 0.0 && h_max.is_finite()) {
        return Err(Error::InvalidInput(format!("h_max must be positive and finite, got {h_max}")));
    }
    cfg.validate()?;
    if cfg.sigma0 == 0.0 {
        let mut a = imaginary_axis_analysis(plant, h_max)?;
        a.requested_sigma0 = cfg.sigma0;
        return Ok(a);
    }
    if plant.feedthrough().abs() >= 1.0 {
        return Ok(DelayAnalysis::unit_feedthrough(cfg.sigma0));
    }
    let p = prepare(plant, cfg)?;
    let sigma0 = p.bf.sigma0();
    let h_cap = biproper_cap(plant, sigma0);
    let horizon = h_cap.map_or(h_max, |c| c.min(h_max));
    let run = enumerate(&p.bf, &p.set.intervals, p.phi0, p.initial_count, StopRule::Horizon(horizon))?;
    let verdict_flag = match h_cap {
        Some(c) if c < h_max => VerdictFlag::BiproperCapped,
        _ => VerdictFlag::Normal,
    };
    Ok(DelayAnalysis {
        requested_sigma0: cfg.sigma0,
        sigma0,
        phase_offset: p.phi0,
        initial_count: p.initial_count,
        intervals: p.set.intervals,
        critical_frequencies: Vec::new(),
        events: run.events,
        reports: run.reports,
        verdict_flag,
        h_cap,
        truncated: run.truncated,
        warnings: p.warnings,
    })
}

/// Stable delay intervals over all `h >= 0`.
pub fn analyze_all_delays(plant: &PoleZeroGain, cfg: &BoundaryConfig) -> Result<AllDelaysVerdict> {
    cfg.validate()?;
    check_sigma0(cfg)?;
    if plant.feedthrough().abs() >= 1.0 {
        return Ok(AllDelaysVerdict {
            stable_intervals: Vec::new(),
            leaving_budget: 0,
            termination_delay: 0.0,
            verdict_flag: VerdictFlag::BiproperUnitOrMore,
            analysis: DelayAnalysis::unit_feedthrough(cfg.sigma0),
        });
    }
    let p = prepare(plant, cfg)?;
    let sigma0 = p.bf.sigma0();
    let leaving_budget = leaving_count_total(&p.set.intervals, p.phi0)?;
    let roots = leaving_root_total(&p.set.intervals, p.phi0)?;
    let h_cap = biproper_cap(plant, sigma0);
    let run = enumerate(&p.bf, &p.set.intervals, p.phi0, p.initial_count, StopRule::LeavingBudget { roots, cap: h_cap })?;
    let verdict_flag = if h_cap.is_some() { VerdictFlag::BiproperCapped } else { VerdictFlag::Normal };
    let analysis = DelayAnalysis {
        requested_sigma0: cfg.sigma0,
        sigma0,
        phase_offset: p.phi0,
        initial_count: p.initial_count,
        intervals: p.set.intervals,
        critical_frequencies: Vec::new(),
        events: run.events,
        reports: run.reports,
        verdict_flag,
        h_cap,
        truncated: run.truncated,
        warnings: p.warnings,
    };
    Ok(AllDelaysVerdict {
        stable_intervals: analysis.stable_intervals(),
        leaving_budget,
        termination_delay: run.termination_delay,
        verdict_flag,
        analysis,
    })
}

/// `ln|G(j w)|` and its derivative. Poles and zeros on the axis make it
/// singular at their frequencies; those act as extra breakpoints.
struct AxisFunctions<'a> {
    plant: &'a PoleZeroGain,
}

impl AxisFunctions<'_> {
    fn terms(&self) -> impl Iterator<Item = (Complex64, f64)> + '_ {
        let z = self.plant.zeros().iter().map(|z| (*z, 1.0));
        let p = self.plant.poles().iter().map(|p| (*p, -1.0));
        z.chain(p)
    }

    fn h(&self, w: f64) -> f64 {
        self.plant.gain().abs().ln()
            + self
                .terms()
                .map(|(t, s)| 0.5 * s * (t.re * t.re + (w - t.im).powi(2)).ln())
                .sum::<f64>()
    }

    fn h_prime(&self, w: f64) -> f64 {
        self.terms()
            .map(|(t, s)| s * (w - t.im) / (t.re * t.re + (w - t.im).powi(2)))
            .sum()
    }

    fn singular_frequencies(&self) -> Vec<f64> {
        self.terms()
            .filter(|(t, _)| t.re == 0.0 && t.im >= 0.0)
            .map(|(t, _)| t.im)
            .collect()
    }

    /// Numerator of `H_im'` over the common denominator of the `gamma`s.
    fn h_prime_numerator(&self) -> RealPolynomial {
        let terms: Vec<(Complex64, f64)> = self.terms().collect();
        let gamma = |t: &Complex64| RealPolynomial::new(vec![t.re * t.re + t.im * t.im, -2.0 * t.im, 1.0]);
        let mut total = RealPolynomial::zero();
        for (k, (t, s)) in terms.iter().enumerate() {
            let mut term = RealPolynomial::new(vec![-t.im * s, *s]);
            for (j, (u, _)) in terms.iter().enumerate() {
                if j != k {
                    term = &term * &gamma(u);
                }
            }
            total = &total + &term;
        }
        total
    }

    /// Frequencies where `H_im` is monotone in between.
    fn breakpoints(&self) -> Result<Vec<f64>> {
        let mut pts = vec![0.0];
        let num = self.h_prime_numerator();
        if num.degree().unwrap_or(0) > 0 {
            pts.extend(num.nonnegative_real_roots(DEFAULT_CLUSTER_TOL)?);
        }
        pts.extend(self.singular_frequencies());
        pts.retain(|w| w.is_finite() && *w >= 0.0);
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        Ok(pts)
    }

    fn tail_sign(&self) -> i32 {
        match self.plant.feedthrough() {
            0.0 => -1,
            d => sign(d.abs().ln()),
        }
    }

    /// Solutions of `|G(j w)| = 1` with `w >= 0`, with tangential touches
    /// flagged.
    fn critical_frequencies(&self) -> Result<Vec<(f64, bool)>> {
        let bps = self.breakpoints()?;
        let singular = self.singular_frequencies();
        let is_singular = |w: f64| singular.iter().any(|s| (s - w).abs() <= 1e-12 * (1.0 + w));
        let f = |w: f64| self.h(w);
        let mut found: Vec<(f64, bool)> = Vec::new();

        for &w in &bps {
            if !is_singular(w) && self.h(w).abs() <= 1e-9 {
                if w < ZERO_OMEGA {
                    let g0 = self.plant.eval(Complex64::new(0.0, 0.0))?;
                    if g0.re < 0.0 {
                        return Err(Error::CriticalFrequencyZero);
                    }
                    continue;
                }
                found.push((w, true));
            }
        }
        for pair in bps.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if sign(f(a)) * sign(f(b)) < 0 {
                found.push((bisect(f, a, b, DEFAULT_BISECT_TOL), false));
            }
        }
        let last = *bps.last().unwrap_or(&0.0);
        let tail = self.tail_sign();
        if tail != 0 && sign(f(last)) == -tail {
            let mut hi = (2.0 * last).max(last + 1.0);
            for _ in 0..2000 {
                if sign(f(hi)) == tail {
                    break;
                }
                hi *= 2.0;
            }
            found.push((bisect(f, last, hi, DEFAULT_BISECT_TOL), false));
        }
        // A tangential touch may also show up as a spurious sign change.
        let touches: Vec<f64> = found.iter().filter(|f| f.1).map(|f| f.0).collect();
        found.retain(|(w, t)| *t || !touches.iter().any(|c| (c - w).abs() <= 1e-6 * (1.0 + c)));
        found.sort_by(|a, b| a.0.total_cmp(&b.0));
        found.dedup_by(|a, b| (a.0 - b.0).abs() <= 1e-9 * (1.0 + b.0));
        if found.iter().any(|(w, _)| *w < ZERO_OMEGA) {
            let g0 = self.plant.eval(Complex64::new(0.0, 0.0))?;
            if g0.re < 0.0 {
                return Err(Error::CriticalFrequencyZero);
            }
            found.retain(|(w, _)| *w >= ZERO_OMEGA);
        }
        Ok(found)
    }
}

/// Critical delays and root counts on the imaginary axis, `h` in `[0, h_max]`.
pub fn imaginary_axis_analysis(plant: &PoleZeroGain, h_max: f64) -> Result<DelayAnalysis> {
    if !(h_max > 0.0 && h_max.is_finite()) {
        return Err(Error::InvalidInput(format!("h_max must be positive and finite, got {h_max}")));
    }
    if plant.feedthrough().abs() >= 1.0 {
        return Ok(DelayAnalysis::unit_feedthrough(0.0));
    }
    let axis = AxisFunctions { plant };
    let mut critical = Vec::new();
    for (omega, tangential) in axis.critical_frequencies()? {
        let g = plant.eval(Complex64::new(0.0, omega))?;
        let period = 2.0 * PI / omega;
        let mut phase = (g.arg() - PI).rem_euclid(2.0 * PI);
        if phase <= 1e-9 || 2.0 * PI - phase <= 1e-9 {
            phase = 0.0;
        }
        let direction = if tangential { 0 } else { sign(-axis.h_prime(omega)) };
        critical.push(CriticalFrequency { omega, base_delay: phase / omega, period, direction });
    }

    let roots = plant.closed_loop_poles_at_zero_delay()?;
    let tol = |r: &Complex64| ON_BOUNDARY_TOL * (1.0 + r.norm().sqrt());
    let mut count = roots.iter().filter(|r| r.re > tol(r)).count() as i64;

    let mut events = Vec::new();
    for (k, cf) in critical.iter().enumerate() {
        let mut j = 0u64;
        loop {
            let delay = cf.base_delay + j as f64 * cf.period;
            if delay > h_max {
                break;
            }
            if events.len() >= MAX_EVENTS {
                return Err(Error::InvalidInput(format!("more than {MAX_EVENTS} crossings below h_max")));
            }
            let root = Complex64::new(0.0, cf.omega);
            events.push(CrossingEvent {
                delay,
                omega: cf.omega,
                root,
                direction: cf.direction,
                interval_index: k,
                line_level: plant.eval(root)?.arg() - delay * cf.omega,
            });
            j += 1;
        }
    }
    events.sort_by(|a, b| a.delay.total_cmp(&b.delay).then(a.omega.total_cmp(&b.omega)));

    // Roots on the axis at zero delay count only if they move inwards.
    for ev in events.iter().filter(|e| e.delay == 0.0) {
        if ev.direction > 0 {
            count += ev.multiplicity() as i64;
        }
    }
    let initial_count = count as usize;

    let mut reports = Vec::new();
    let mut h_lo = 0.0;
    for ev in events.iter().filter(|e| e.delay > 0.0) {
        reports.push(DelayIntervalReport { h_lo, h_hi: ev.delay, count: count as usize, event_at_hi: Some(*ev) });
        h_lo = ev.delay;
        count += ev.count_change();
        if count < 0 {
            return Err(Error::NegativeCount { delay: ev.delay });
        }
    }
    reports.push(DelayIntervalReport { h_lo, h_hi: h_max, count: count as usize, event_at_hi: None });

    Ok(DelayAnalysis {
        requested_sigma0: 0.0,
        sigma0: 0.0,
        phase_offset: 0.0,
        initial_count,
        intervals: Vec::new(),
        critical_frequencies: critical,
        events,
        reports,
        verdict_flag: VerdictFlag::Normal,
        h_cap: None,
        truncated: false,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::plant::tests::example_plant;

    pub(crate) fn thowsen() -> PoleZeroGain {
        PoleZeroGain::from_rational(&[1.0], &[1.0, 2.0, 1.0, 1.0]).unwrap()
    }

    pub(crate) fn chen() -> PoleZeroGain {
        PoleZeroGain::from_rational(&[0.0, 1.0], &[1.0, 1.0, 1.0]).unwrap()
    }

    pub(crate) fn louisell() -> PoleZeroGain {
        PoleZeroGain::from_rational(&[-2.0, -1.0], &[4.0, 1.0, 1.0]).unwrap()
    }

    pub(crate) fn han_yu_gu() -> PoleZeroGain {
        PoleZeroGain::from_rational(&[3.0, -0.1], &[0.0, 1.0]).unwrap()
    }

    pub(crate) fn hu_liu() -> PoleZeroGain {
        PoleZeroGain::from_rational(&[1.0, -0.2], &[0.0, 1.0]).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn stable(plant: &PoleZeroGain, sigma0: f64) -> Vec<DelayRange> {
        analyze_all_delays(plant, &BoundaryConfig::new(sigma0)).unwrap().stable_intervals
    }

    fn assert_ranges(got: &[DelayRange], want: &[(f64, f64)], tol: f64) {
        assert_eq!(got.len(), want.len(), "got {got:?}, want {want:?}");
        for (g, w) in got.iter().zip(want) {
            assert!(close(g.lo, w.0, tol) && close(g.hi, w.1, tol), "got {got:?}, want {want:?}");
        }
    }

    #[test]
    fn phase_offset_examples() {
        assert_eq!(phase_offset(&example_plant(), -0.1).unwrap(), 0.0);
        assert_eq!(phase_offset(&louisell(), -0.5).unwrap(), PI);
        let flipped = PoleZeroGain::new(-example_plant().gain(), example_plant().zeros().to_vec(), example_plant().poles().to_vec()).unwrap();
        assert_eq!(phase_offset(&flipped, -0.1).unwrap(), PI);
    }

    #[test]
    fn table_two_events() {
        let a = analyze_up_to(&example_plant(), &BoundaryConfig::new(-0.1), 7.0).unwrap();
        let delays = [0.879, 2.984, 3.280, 4.488, 4.556, 5.800, 6.831];
        let omegas = [2.377, 2.784, 1.325, 0.642, 3.192, 3.584, 3.958];
        let counts = [0, 2, 4, 2, 4, 6, 8, 10];
        assert_eq!(a.events.len(), 7, "{:?}", a.events);
        for (k, ev) in a.events.iter().enumerate() {
            assert!(close(ev.delay, delays[k], 1e-3), "event {k}: {ev:?}");
            assert!(close(ev.omega, omegas[k], 1e-3), "event {k}: {ev:?}");
        }
        let got: Vec<usize> = a.reports.iter().map(|r| r.count).collect();
        assert_eq!(got, counts);
        assert_eq!(a.reports.last().unwrap().h_hi, 7.0);
    }

    #[test]
    fn first_interval_crossings() {
        let bf = BoundaryFunctions::new(&example_plant(), -0.1, 1e-8).unwrap();
        let set = bf.compute_intervals(None);
        let first = set.intervals[0];
        assert!(close(initial_line(&first, 0.0).unwrap(), -PI, 1e-12), "{first:?}");
        let mut c = IntervalCursor::new(&bf, first, 0, 0.0, false).unwrap();
        assert!(close(c.omega_current, 0.642, 1e-3) && close(c.delay_current, 4.488, 1e-3));
        c.advance(&bf);
        assert!(close(c.line, -3.0 * PI, 1e-12));
        // Magnitude condition evaluated directly at the crossing frequency.
        assert!(close(c.omega_current, 1.031, 1e-3), "{c:?}");
        let g = example_plant().eval(Complex64::new(-0.1, c.omega_current)).unwrap();
        assert!(close(c.delay_current, g.norm().ln() / -0.1, 1e-9));
        assert!(close(c.delay_current, 9.105, 1e-3), "{c:?}");
    }

    #[test]
    fn shifted_boundary_stable_sets() {
        assert_ranges(&stable(&thowsen(), -0.01), &[(1.714, 4.267)], 1e-3);
        assert_ranges(&stable(&thowsen(), -0.02), &[(1.878, 4.125)], 1e-3);
        assert_ranges(&stable(&thowsen(), -0.03), &[(2.098, 3.894)], 1e-3);
        assert_ranges(&stable(&chen(), -0.01), &[(0.0, 2.467), (4.209, 7.261)], 1e-3);
        assert_ranges(&stable(&chen(), -0.1), &[(0.0, 1.612)], 1e-3);
        assert_ranges(&stable(&chen(), -0.5), &[(0.0, 0.811)], 1e-3);
        assert_ranges(&stable(&louisell(), -0.01), &[(0.010, 1.971)], 1e-3);
        assert_ranges(&stable(&louisell(), -0.1), &[(0.105, 1.745)], 1e-3);
        assert_ranges(&stable(&louisell(), -0.5), &[(0.573, 1.311)], 1e-3);
        assert_ranges(&stable(&han_yu_gu(), -0.01), &[(0.0, 0.484)], 1e-3);
        assert_ranges(&stable(&han_yu_gu(), -0.1), &[(0.0, 0.453)], 1e-3);
        assert_ranges(&stable(&han_yu_gu(), -1.0), &[(0.0, 0.294)], 1e-3);
        assert_ranges(&stable(&hu_liu(), -0.01), &[(0.0, 1.309)], 1e-3);
        assert_ranges(&stable(&hu_liu(), -0.5), &[(0.0, 0.655)], 1e-3);
        assert_ranges(&stable(&hu_liu(), -1.0), &[(0.0, 0.452)], 1e-3);
    }

    #[test]
    fn imaginary_axis_stable_sets() {
        let a = imaginary_axis_analysis(&thowsen(), 10.0).unwrap();
        let s2 = 2f64.sqrt();
        assert_ranges(&a.stable_intervals(), &[(PI / 2.0, s2 * PI), (2.5 * PI, 2.0 * s2 * PI)], 1e-6);
        let a = imaginary_axis_analysis(&louisell(), 6.0).unwrap();
        assert_ranges(&a.stable_intervals(), &[(0.0, 2.006), (4.443, 4.571)], 1e-3);
        let a = imaginary_axis_analysis(&han_yu_gu(), 5.0).unwrap();
        assert_ranges(&a.stable_intervals(), &[(0.0, 0.488)], 1e-3);
        let a = imaginary_axis_analysis(&hu_liu(), 5.0).unwrap();
        assert_ranges(&a.stable_intervals(), &[(0.0, 1.342)], 1e-3);
        let a = imaginary_axis_analysis(&chen(), 10.0).unwrap();
        assert_ranges(&a.stable_intervals(), &[(0.0, PI), (PI, 3.0 * PI), (3.0 * PI, 10.0)], 1e-9);
    }

    pub(crate) fn heat(terms: usize) -> PoleZeroGain {
        let pi2 = PI * PI;
        let zeros = (1..=terms).map(|n| Complex64::new(-(n as f64).powi(2) * pi2, 0.0)).collect();
        let poles = (1..=terms).map(|n| Complex64::new(-(n as f64 - 0.5).powi(2) * pi2, 0.0)).collect();
        let gain = (1..=terms).map(|n| ((n as f64 - 0.5) / n as f64).powi(2)).product();
        PoleZeroGain::new(gain, zeros, poles).unwrap()
    }

    #[test]
    fn heat_plant_stable_sets() {
        let g = heat(100);
        for (sigma0, hi) in [(-0.1, 1.575), (-0.5, 0.770), (-1.0, 0.551)] {
            let t = std::time::Instant::now();
            let v = analyze_all_delays(&g, &BoundaryConfig::new(sigma0)).unwrap();
            eprintln!("sigma0 {sigma0}: {:?} in {:?}", v.stable_intervals, t.elapsed());
            assert_ranges(&v.stable_intervals, &[(0.0, hi)], 2e-3);
        }
    }

    #[test]
    fn initial_root_count_examples() {
        assert_eq!(initial_root_count(&example_plant(), -0.1).unwrap(), 0);
        let g = PoleZeroGain::from_rational(&[1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(initial_root_count(&g, -3.0).unwrap(), 1);
        assert_eq!(initial_root_count(&g, -1.0).unwrap(), 0);
        assert!(matches!(initial_root_count(&g, -2.0), Err(Error::RootOnBoundary { .. })));
    }

    #[test]
    fn leaving_budget_matches_exhaustive_enumeration() {
        let bf = BoundaryFunctions::new(&example_plant(), -0.1, 1e-8).unwrap();
        let set = bf.compute_intervals(None);
        let leaving: Vec<_> = set.intervals.iter().filter(|iv| iv.crossing_direction == -1).collect();
        assert_eq!(leaving.len(), 1);
        assert!(close(leaving[0].omega_lo, 1.156, 1e-3) && close(leaving[0].omega_hi, 1.369, 1e-3));

        let n_s = leaving_count_total(&set.intervals, 0.0).unwrap();
        let idx = set.intervals.iter().position(|iv| iv.crossing_direction == -1).unwrap();
        let mut c = IntervalCursor::new(&bf, set.intervals[idx], idx, 0.0, false).unwrap();
        let mut seen = 0;
        while !c.exhausted {
            seen += 1;
            c.advance(&bf);
        }
        assert_eq!(seen, n_s);
        assert!(n_s >= 1);
    }

    #[test]
    fn no_leaving_intervals_give_zero_budget() {
        assert_eq!(leaving_count_total(&[], 0.0).unwrap(), 0);
    }

    #[test]
    fn narrow_phase_span_has_no_line() {
        let iv = BoundaryInterval {
            omega_lo: 0.0,
            omega_hi: 1.0,
            h_sign: 1,
            phi_sign: 1,
            crossing_direction: -1,
            phi_lo: 0.1,
            phi_hi: 1.0,
            h_lo: 0.0,
            h_hi: 1.0,
            tangential: false,
        };
        assert!(matches!(initial_line(&iv, 0.0), Err(Error::NoIntersection { .. })));
        assert_eq!(leaving_count_total(&[iv], 0.0).unwrap(), 0);
        // Shifted down across zero, it meets the line 0 once phi0 = pi.
        let iv = BoundaryInterval { phi_lo: -0.1, ..iv };
        assert_eq!(initial_line(&iv, PI).unwrap(), 0.0);
    }

    #[test]
    fn lines_are_odd_multiples_shifted_by_offset() {
        let bf = BoundaryFunctions::new(&louisell(), -0.1, 1e-8).unwrap();
        let set = bf.compute_intervals(None);
        for iv in &set.intervals {
            if let Ok(line) = initial_line(iv, PI) {
                let k = (line + PI - PI) / (2.0 * PI);
                assert!(close(k, k.round(), 1e-12), "{line}");
            }
        }
    }

    #[test]
    fn delays_strictly_increase_along_a_cursor() {
        // Strictly proper plant: the last interval is unbounded in phase.
        let g = PoleZeroGain::from_rational(&[1.0], &[2.0, 3.0, 1.0]).unwrap();
        let bf = BoundaryFunctions::new(&g, -0.2, 1e-8).unwrap();
        let set = bf.compute_intervals(None);
        let idx = set.intervals.iter().position(|iv| iv.is_unbounded()).unwrap();
        let phi0 = phase_offset(&g, -0.2).unwrap();
        let mut c = IntervalCursor::new(&bf, set.intervals[idx], idx, phi0, false).unwrap();
        let mut last = c.delay_current;
        for _ in 0..100 {
            c.advance(&bf);
            assert!(!c.exhausted);
            assert!(c.delay_current > last);
            last = c.delay_current;
        }
    }

    #[test]
    fn short_horizon_gives_one_report() {
        let a = analyze_up_to(&example_plant(), &BoundaryConfig::new(-0.1), 0.5).unwrap();
        assert!(a.events.is_empty());
        assert_eq!(a.reports.len(), 1);
        assert_eq!(a.reports[0].count, a.initial_count);
        assert_eq!((a.reports[0].h_lo, a.reports[0].h_hi), (0.0, 0.5));
    }

    #[test]
    fn no_intervals_give_one_report() {
        let bf = BoundaryFunctions::new(&example_plant(), -0.1, 1e-8).unwrap();
        let run = enumerate(&bf, &[], 0.0, 3, StopRule::Horizon(10.0)).unwrap();
        assert!(run.events.is_empty());
        assert_eq!(run.reports.len(), 1);
        assert_eq!((run.reports[0].h_lo, run.reports[0].h_hi, run.reports[0].count), (0.0, 10.0, 3));
    }

    #[test]
    fn reports_tile_the_horizon() {
        let a = analyze_up_to(&example_plant(), &BoundaryConfig::new(-0.1), 12.0).unwrap();
        assert_eq!(a.reports[0].h_lo, 0.0);
        for pair in a.reports.windows(2) {
            assert_eq!(pair[0].h_hi, pair[1].h_lo);
            let ev = pair[0].event_at_hi.unwrap();
            assert_eq!(pair[1].count as i64 - pair[0].count as i64, ev.count_change());
        }
    }

    #[test]
    fn biproper_unit_gain_short_circuits() {
        let g = PoleZeroGain::from_rational(&[1.0, 2.0], &[1.0, 1.0]).unwrap();
        let v = analyze_all_delays(&g, &BoundaryConfig::new(-0.1)).unwrap();
        assert_eq!(v.verdict_flag, VerdictFlag::BiproperUnitOrMore);
        assert!(v.stable_intervals.is_empty() && v.analysis.events.is_empty());
        let a = analyze_up_to(&g, &BoundaryConfig::new(-0.1), 5.0).unwrap();
        assert_eq!(a.verdict_flag, VerdictFlag::BiproperUnitOrMore);
        assert!(a.reports.is_empty());
    }

    #[test]
    fn biproper_small_gain_is_capped() {
        let g = hu_liu();
        let a = analyze_up_to(&g, &BoundaryConfig::new(-1.0), 10.0).unwrap();
        let cap = 0.2f64.ln() / -1.0;
        assert_eq!(a.verdict_flag, VerdictFlag::BiproperCapped);
        assert!(close(a.h_cap.unwrap(), cap, 1e-12));
        // Crossings accumulate at the cap, so the event guard ends the run
        // just short of it.
        let last = a.reports.last().unwrap().h_hi;
        if a.truncated {
            assert!(last < cap && cap - last < 1e-2, "{last}");
        } else {
            assert!(close(last, cap, 1e-12));
        }
        assert!(a.events.iter().all(|e| e.delay < cap));
    }

    #[test]
    fn pole_on_boundary_is_perturbed() {
        let g = PoleZeroGain::from_rational(&[1.0], &[2.0, 3.0, 1.0]).unwrap();
        let a = analyze_up_to(&g, &BoundaryConfig::new(-1.0), 5.0).unwrap();
        assert!(a.sigma0 < -1.0 && a.sigma0 > -1.0 - 1e-4);
        assert_eq!(a.warnings.len(), 1);
        let strict = analyze_up_to(&g, &BoundaryConfig::new(-1.0).with_strict(true), 5.0);
        assert!(matches!(strict, Err(Error::BoundaryClearance { .. })));
    }

    #[test]
    fn all_delays_rejects_the_imaginary_axis() {
        assert!(matches!(
            analyze_all_delays(&thowsen(), &BoundaryConfig::new(0.0)),
            Err(Error::InvalidBoundary(_))
        ));
    }

    #[test]
    fn small_gain_on_the_axis() {
        let g = PoleZeroGain::from_rational(&[0.5], &[1.0, 1.0]).unwrap();
        let a = imaginary_axis_analysis(&g, 10.0).unwrap();
        assert!(a.critical_frequencies.is_empty() && a.events.is_empty());
        assert_eq!(a.stable_intervals(), vec![DelayRange { lo: 0.0, hi: 10.0, closed_lo: true }]);
    }

    #[test]
    fn axis_delays_are_periodic() {
        let a = imaginary_axis_analysis(&thowsen(), 60.0).unwrap();
        for (k, cf) in a.critical_frequencies.iter().enumerate() {
            let d: Vec<f64> = a.events.iter().filter(|e| e.interval_index == k).map(|e| e.delay).collect();
            for pair in d.windows(2) {
                assert!((pair[1] - pair[0] - 2.0 * PI / cf.omega).abs() <= 1e-12 * (1.0 + pair[1]));
            }
        }
    }

    #[test]
    fn axis_critical_frequency_at_zero() {
        // G(0) = -1: s = 0 solves the characteristic equation for all delays.
        let g = PoleZeroGain::from_rational(&[-2.0], &[2.0, 1.0]).unwrap();
        assert_eq!(imaginary_axis_analysis(&g, 5.0).unwrap_err(), Error::CriticalFrequencyZero);
        // G(0) = +1 is harmless.
        let g = PoleZeroGain::from_rational(&[2.0], &[2.0, 1.0]).unwrap();
        assert!(imaginary_axis_analysis(&g, 5.0).is_ok());
    }

    #[test]
    fn events_satisfy_characteristic_equation() {
        let g = example_plant();
        let a = analyze_up_to(&g, &BoundaryConfig::new(-0.1), 20.0).unwrap();
        let bf = BoundaryFunctions::new(&g, -0.1, 1e-8).unwrap();
        for ev in &a.events {
            let f = g.eval(ev.root).unwrap() * (-ev.root * ev.delay).exp() + 1.0;
            assert!(f.norm() < 1e-8, "{ev:?} residual {}", f.norm());
            assert!(close(bf.h(ev.omega), ev.delay, 1e-9 * (1.0 + ev.delay)));
            assert_eq!(ev.direction, a.intervals[ev.interval_index].crossing_direction);
        }
    }
}
