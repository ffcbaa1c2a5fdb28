//! The `delaymargin` command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::{sample_curves, BoundaryFunctions, IntervalSet};
use crate::delays::{
    analyze_all_delays, analyze_up_to, imaginary_axis_analysis, prepare, AllDelaysVerdict, DelayAnalysis, DelayRange,
    VerdictFlag,
};
use crate::error::Error;
use crate::oracle::{count_roots_right_of, numeric_crossing_direction};
use crate::plant::{BoundaryConfig, PoleZeroGain};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ANALYSIS: i32 = 2;
pub const EXIT_STRICT: i32 = 3;

const CURVE_SAMPLES: usize = 2000;

/// Plant description read from JSON: either pole-zero-gain form or
/// ascending coefficient lists.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeros: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poles: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub den: Option<Vec<f64>>,
}

impl PlantSpec {
    pub fn to_plant(&self) -> Result<PoleZeroGain, Error> {
        let zpk = self.gain.is_some() || self.zeros.is_some() || self.poles.is_some();
        let rational = self.num.is_some() || self.den.is_some();
        match (zpk, rational) {
            (true, false) => {
                let gain = self.gain.ok_or_else(|| Error::InvalidInput("pole-zero form needs \"gain\"".into()))?;
                let poles = self.poles.as_ref().ok_or_else(|| Error::InvalidInput("pole-zero form needs \"poles\"".into()))?;
                let to_c = |v: &Vec<[f64; 2]>| v.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
                PoleZeroGain::new(gain, self.zeros.as_ref().map(to_c).unwrap_or_default(), to_c(poles))
            }
            (false, true) => match (&self.num, &self.den) {
                (Some(num), Some(den)) => PoleZeroGain::from_rational(num, den),
                _ => Err(Error::InvalidInput("rational form needs both \"num\" and \"den\"".into())),
            },
            (true, true) => Err(Error::InvalidInput("give either gain/zeros/poles or num/den, not both".into())),
            (false, false) => Err(Error::InvalidInput("plant needs gain/zeros/poles or num/den".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "delaymargin", version, about = "Relative stability of closed loops with an input delay")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Plant specification (JSON).
    plant: PathBuf,
    /// Boundary Re(s) = sigma0 (<= 0).
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<f64>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Write sampled (omega, H, phi) curves as CSV.
    #[arg(long)]
    emit_curves: Option<PathBuf>,
    /// Fail with exit code 3 instead of perturbing the boundary.
    #[arg(long)]
    strict: bool,
    /// Upper frequency for the breakpoint search.
    #[arg(long)]
    omega_cap: Option<f64>,
    /// Relative tolerance of the crossing-frequency bisection.
    #[arg(long)]
    bisect_tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Boundary intervals with monotonicity and crossing direction.
    Intervals(Common),
    /// Delay intervals and root counts up to a horizon.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Largest delay analysed.
        #[arg(long)]
        hmax: f64,
    },
    /// Stable delay intervals over all delays.
    Stability(Common),
    /// Delay intervals with respect to the imaginary axis.
    Imaginary {
        #[command(flatten)]
        common: Common,
        /// Largest delay analysed.
        #[arg(long)]
        hmax: f64,
    },
    /// Analyze, then cross-check counts and directions independently.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Largest delay analysed.
        #[arg(long)]
        hmax: f64,
        /// Earlier JSON output of `analyze` whose counts should be checked.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Analysis(Error),
    Mismatch(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Analysis(e)
    }
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let quiet = std::env::var("DELAYMARGIN_LOG").is_ok_and(|v| v == "quiet");
    match execute(cli.command, out, err, quiet) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Analysis(e)) => {
            let _ = writeln!(err, "error[{}]: {e}", e.name());
            if e.is_assumption_violation() {
                EXIT_STRICT
            } else {
                EXIT_ANALYSIS
            }
        }
        Err(Failure::Mismatch(msg)) => {
            let _ = writeln!(err, "error[VerificationMismatch]: {msg}");
            EXIT_ANALYSIS
        }
    }
}

fn read_plant(path: &Path) -> Result<(PlantSpec, PoleZeroGain), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let spec: PlantSpec =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("invalid plant file {}: {e}", path.display())))?;
    let plant = spec.to_plant().map_err(|e| match e {
        Error::InvalidInput(msg) => Failure::Usage(msg),
        other => Failure::Analysis(other),
    })?;
    Ok((spec, plant))
}

fn config(common: &Common, sigma: f64) -> BoundaryConfig {
    let mut cfg = BoundaryConfig::new(sigma).with_strict(common.strict).with_omega_cap(common.omega_cap);
    if let Some(tol) = common.bisect_tol {
        cfg = cfg.with_bisect_tol(tol);
    }
    cfg
}

fn required_sigma(common: &Common) -> Result<f64, Failure> {
    common.sigma.ok_or_else(|| Failure::Usage("--sigma is required".into()))
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write, quiet: bool) -> Result<(), Failure> {
    let text = match command {
        Command::Intervals(common) => {
            let (_, plant) = read_plant(&common.plant)?;
            let cfg = config(&common, required_sigma(&common)?);
            let prepared = prepare(&plant, &cfg)?;
            warn_all(err, &prepared.warnings, quiet);
            write_curves(&common, &prepared.bf, prepared.set.omega_cap)?;
            emit_intervals(&prepared.set, common.format)
        }
        Command::Analyze { common, hmax } => {
            let (_, plant) = read_plant(&common.plant)?;
            let cfg = config(&common, required_sigma(&common)?);
            let analysis = analyze_up_to(&plant, &cfg, hmax)?;
            warn_all(err, &analysis.warnings, quiet);
            curves_for(&common, &plant, &cfg, &analysis)?;
            emit_analysis(&analysis, common.format)
        }
        Command::Stability(common) => {
            let (_, plant) = read_plant(&common.plant)?;
            let cfg = config(&common, required_sigma(&common)?);
            let verdict = analyze_all_delays(&plant, &cfg)?;
            warn_all(err, &verdict.analysis.warnings, quiet);
            curves_for(&common, &plant, &cfg, &verdict.analysis)?;
            emit_verdict(&verdict, common.format)
        }
        Command::Imaginary { common, hmax } => {
            if common.sigma.is_some_and(|s| s != 0.0) {
                return Err(Failure::Usage("the imaginary-axis analysis uses sigma0 = 0".into()));
            }
            if common.emit_curves.is_some() {
                return Err(Failure::Usage("--emit-curves needs a boundary with sigma0 < 0".into()));
            }
            let (_, plant) = read_plant(&common.plant)?;
            let analysis = imaginary_axis_analysis(&plant, hmax)?;
            emit_analysis(&analysis, common.format)
        }
        Command::Verify { common, hmax, report } => {
            let (_, plant) = read_plant(&common.plant)?;
            let cfg = config(&common, required_sigma(&common)?);
            let analysis = analyze_up_to(&plant, &cfg, hmax)?;
            warn_all(err, &analysis.warnings, quiet);
            let rows = match report {
                Some(path) => read_report(&path)?,
                None => analysis.reports.iter().map(|r| (r.h_lo, r.h_hi, r.count)).collect(),
            };
            verify(&plant, &analysis, &rows, common.format)?
        }
    };
    out.write_all(text.as_bytes()).map_err(|e| Failure::Usage(format!("cannot write output: {e}")))
}

fn warn_all(err: &mut dyn Write, warnings: &[String], quiet: bool) {
    if !quiet {
        for w in warnings {
            let _ = writeln!(err, "warning: {w}");
        }
    }
}

fn curves_for(common: &Common, plant: &PoleZeroGain, cfg: &BoundaryConfig, analysis: &DelayAnalysis) -> Result<(), Failure> {
    if common.emit_curves.is_none() || analysis.verdict_flag == VerdictFlag::BiproperUnitOrMore {
        return Ok(());
    }
    let cfg = BoundaryConfig { sigma0: analysis.sigma0, ..cfg.clone() };
    let bf = BoundaryFunctions::from_config(plant, &cfg)?;
    let cap = bf.effective_omega_cap(cfg.omega_cap);
    write_curves(common, &bf, cap)
}

fn write_curves(common: &Common, bf: &BoundaryFunctions, omega_max: f64) -> Result<(), Failure> {
    let Some(path) = &common.emit_curves else { return Ok(()) };
    let mut text = String::from("omega,H,phi\n");
    for (w, h, phi) in sample_curves(bf, omega_max, CURVE_SAMPLES) {
        let _ = writeln!(text, "{w},{h},{phi}");
    }
    std::fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

#[derive(Deserialize)]
struct ReportRow {
    h_lo: f64,
    h_hi: Option<f64>,
    count: usize,
}

#[derive(Deserialize)]
struct ReportFile {
    reports: Vec<ReportRow>,
}

fn read_report(path: &Path) -> Result<Vec<(f64, f64, usize)>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let file: ReportFile =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("invalid report {}: {e}", path.display())))?;
    Ok(file.reports.into_iter().map(|r| (r.h_lo, r.h_hi.unwrap_or(f64::INFINITY), r.count)).collect())
}

#[derive(Serialize)]
struct CountCheck {
    h_lo: f64,
    h_hi: f64,
    delay: f64,
    reported: usize,
    oracle: usize,
}

#[derive(Serialize)]
struct DirectionCheck {
    delay: f64,
    omega: f64,
    reported: i32,
    oracle: i32,
}

#[derive(Serialize)]
struct Verification {
    sigma0: f64,
    counts: Vec<CountCheck>,
    directions: Vec<DirectionCheck>,
    mismatches: usize,
}

fn verify(plant: &PoleZeroGain, analysis: &DelayAnalysis, rows: &[(f64, f64, usize)], format: Format) -> Result<String, Failure> {
    if analysis.verdict_flag == VerdictFlag::BiproperUnitOrMore {
        return Ok(format!("{}\n", analysis.verdict_flag.verdict()));
    }
    let sigma0 = analysis.sigma0;
    let mut counts = Vec::new();
    for &(h_lo, h_hi, reported) in rows {
        if !(h_hi > h_lo) {
            continue;
        }
        let delay = if h_hi.is_finite() { 0.5 * (h_lo + h_hi) } else { h_lo + 1.0 };
        let oracle = count_roots_right_of(plant, delay, sigma0)?;
        counts.push(CountCheck { h_lo, h_hi, delay, reported, oracle });
    }
    let mut directions = Vec::new();
    for ev in analysis.events.iter().filter(|e| e.direction != 0 && e.delay > 0.0) {
        let oracle = numeric_crossing_direction(plant, ev.delay, ev.root, 1e-4)?;
        directions.push(DirectionCheck { delay: ev.delay, omega: ev.omega, reported: ev.direction, oracle });
    }
    let mismatches = counts.iter().filter(|c| c.reported != c.oracle).count()
        + directions.iter().filter(|d| d.reported != d.oracle).count();
    let result = Verification { sigma0, counts, directions, mismatches };

    let text = match format {
        Format::Json => json(&result),
        Format::Csv => {
            let mut t = String::from("kind,delay,reported,oracle\n");
            for c in &result.counts {
                let _ = writeln!(t, "count,{},{},{}", c.delay, c.reported, c.oracle);
            }
            for d in &result.directions {
                let _ = writeln!(t, "direction,{},{},{}", d.delay, d.reported, d.oracle);
            }
            t
        }
        Format::Table => {
            let mut t = format!("sigma0 = {}\n{:<22}{:>10}{:>10}  check\n", sigma0, "delay interval", "reported", "oracle");
            for c in &result.counts {
                let _ = writeln!(
                    t,
                    "{:<22}{:>10}{:>10}  {}",
                    bracket(c.h_lo, c.h_hi),
                    c.reported,
                    c.oracle,
                    ok(c.reported == c.oracle)
                );
            }
            let _ = writeln!(t, "\n{:>10}{:>10}{:>10}{:>10}  check", "delay", "omega", "CD", "oracle");
            for d in &result.directions {
                let _ = writeln!(
                    t,
                    "{:>10}{:>10}{:>10}{:>10}  {}",
                    f3(d.delay),
                    f3(d.omega),
                    signed(d.reported),
                    signed(d.oracle),
                    ok(d.reported == d.oracle)
                );
            }
            let _ = writeln!(t, "\nmismatches: {}", result.mismatches);
            t
        }
    };
    if result.mismatches > 0 {
        return Err(Failure::Mismatch(format!("{} mismatches\n{text}", result.mismatches)));
    }
    Ok(text)
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "MISMATCH"
    }
}

fn f3(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.3}")
    }
}

fn signed(d: i32) -> String {
    match d {
        d if d > 0 => format!("+{d}"),
        d => d.to_string(),
    }
}

fn bracket(lo: f64, hi: f64) -> String {
    let open = if lo == 0.0 { '[' } else { '(' };
    format!("{open}{}, {})", f3(lo), f3(hi))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Renders the boundary intervals.
pub fn emit_intervals(set: &IntervalSet, format: Format) -> String {
    match format {
        Format::Json => json(set),
        Format::Csv => {
            let mut t = String::from("omega_lo,omega_hi,h_sign,phi_sign,crossing_direction,phi_lo,phi_hi,h_lo,h_hi\n");
            for iv in &set.intervals {
                let _ = writeln!(
                    t,
                    "{},{},{},{},{},{},{},{},{}",
                    iv.omega_lo, iv.omega_hi, iv.h_sign, iv.phi_sign, iv.crossing_direction, iv.phi_lo, iv.phi_hi, iv.h_lo, iv.h_hi
                );
            }
            t
        }
        Format::Table => {
            let mut t = format!("sigma0 = {}\n", set.sigma0);
            let mut ends: Vec<f64> = set
                .feasible
                .iter()
                .flat_map(|p| [p.omega_lo, p.omega_hi])
                .chain(set.directions.iter().flat_map(|d| [d.omega_lo, d.omega_hi]))
                .filter(|w| *w > 0.0 && w.is_finite())
                .collect();
            ends.sort_by(f64::total_cmp);
            ends.dedup();
            let _ = writeln!(t, "breakpoints: {}", ends.iter().map(|w| f3(*w)).collect::<Vec<_>>().join(" "));
            let span = |lo: f64, hi: f64| format!("[{}, {}{}", f3(lo), f3(hi), if hi.is_finite() { "]" } else { ")" });
            let feasible: Vec<String> = set.feasible.iter().map(|p| span(p.omega_lo, p.omega_hi)).collect();
            let _ = writeln!(t, "feasible: {}", feasible.join(" "));
            let directions: Vec<String> = set.directions.iter().map(|d| span(d.omega_lo, d.omega_hi)).collect();
            let _ = writeln!(t, "directions: {}", directions.join(" "));
            let _ = writeln!(t, "{:<22}{:>4}{:>6}{:>5}", "interval", "H", "Phi", "CD");
            for iv in &set.intervals {
                let name = if iv.tangential {
                    format!("{{{}}}", f3(iv.omega_lo))
                } else {
                    span(iv.omega_lo, iv.omega_hi)
                };
                let _ = writeln!(
                    t,
                    "{:<22}{:>4}{:>6}{:>5}  {}",
                    name,
                    signed(iv.h_sign),
                    signed(iv.phi_sign),
                    signed(iv.crossing_direction),
                    if iv.crossing_direction > 0 { "entering" } else { "leaving" }
                );
            }
            t
        }
    }
}

fn header(a: &DelayAnalysis) -> String {
    let mut t = String::new();
    if a.sigma0 != a.requested_sigma0 {
        let _ = writeln!(t, "sigma0 = {} (perturbed from {})", a.sigma0, a.requested_sigma0);
    } else {
        let _ = writeln!(t, "sigma0 = {}", a.sigma0);
    }
    t
}

/// Renders delay intervals and counts.
pub fn emit_analysis(a: &DelayAnalysis, format: Format) -> String {
    match format {
        Format::Json => json(a),
        Format::Csv => {
            let mut t = String::from("h_lo,h_hi,count,crossing_omega,crossing_direction\n");
            for r in &a.reports {
                let (w, d) = match r.event_at_hi {
                    Some(ev) => (ev.omega.to_string(), signed(ev.direction)),
                    None => (String::new(), String::new()),
                };
                let _ = writeln!(t, "{},{},{},{},{}", r.h_lo, r.h_hi, r.count, w, d);
            }
            t
        }
        Format::Table => {
            let mut t = header(a);
            if a.verdict_flag == VerdictFlag::BiproperUnitOrMore {
                let _ = writeln!(t, "{}", a.verdict_flag.verdict());
                return t;
            }
            let _ = writeln!(t, "{:<22}{:>6}{:>10}{:>5}", "delay interval", "count", "omega", "CD");
            let n = a.reports.len();
            for (k, r) in a.reports.iter().enumerate() {
                let close = if k + 1 == n { ']' } else { ')' };
                let open = if k == 0 { '[' } else { '(' };
                let name = format!("{open}{}, {}{close}", f3(r.h_lo), f3(r.h_hi));
                match r.event_at_hi {
                    Some(ev) => {
                        let _ = writeln!(t, "{:<22}{:>6}{:>10}{:>5}", name, r.count, f3(ev.omega), signed(ev.direction));
                    }
                    None => {
                        let _ = writeln!(t, "{:<22}{:>6}", name, r.count);
                    }
                }
            }
            if a.verdict_flag == VerdictFlag::BiproperCapped {
                if let Some(cap) = a.h_cap {
                    let _ = writeln!(t, "beyond h = {}: {}", f3(cap), a.verdict_flag.verdict());
                }
            }
            if a.truncated {
                let _ = writeln!(t, "warning: event limit reached, output truncated");
            }
            let _ = writeln!(t, "stable: {}", ranges(&a.stable_intervals()));
            t
        }
    }
}

fn ranges(r: &[DelayRange]) -> String {
    if r.is_empty() {
        return "(none)".into();
    }
    r.iter()
        .map(|d| format!("{}{}, {})", if d.closed_lo { '[' } else { '(' }, f3(d.lo), f3(d.hi)))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Renders the all-delays verdict.
pub fn emit_verdict(v: &AllDelaysVerdict, format: Format) -> String {
    match format {
        Format::Json => json(v),
        Format::Csv => {
            let mut t = String::from("lo,hi,closed_lo\n");
            for d in &v.stable_intervals {
                let _ = writeln!(t, "{},{},{}", d.lo, d.hi, d.closed_lo);
            }
            t
        }
        Format::Table => {
            let mut t = header(&v.analysis);
            if v.verdict_flag == VerdictFlag::BiproperUnitOrMore {
                let _ = writeln!(t, "{}", v.verdict_flag.verdict());
                let _ = writeln!(t, "stable: (none)");
                return t;
            }
            let _ = writeln!(t, "leaving budget: {}", v.leaving_budget);
            let _ = writeln!(t, "termination delay: {}", f3(v.termination_delay));
            if let (VerdictFlag::BiproperCapped, Some(cap)) = (v.verdict_flag, v.analysis.h_cap) {
                let _ = writeln!(t, "beyond h = {}: {}", f3(cap), v.verdict_flag.verdict());
            }
            if v.analysis.truncated {
                let _ = writeln!(t, "warning: event limit reached, output truncated");
            }
            let _ = writeln!(t, "stable: {}", ranges(&v.stable_intervals));
            t
        }
    }
}
