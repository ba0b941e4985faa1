//! Experiment plumbing: runs, CSV series, convergence tables and timing.
//!
//! CSV files are deterministic for a given spec (floats use the shortest
//! round-trip form and no wall-clock columns appear); timings live in the
//! JSON summary only.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrators::{integrate, relative_drift, Method, Observer, StepRecord, Stepper, StepperConfig};
use crate::models::henon_heiles::{hh_initial_state, HhInit, HhScheme, HhState, PoincareCollector};
use crate::models::kgs::{kgs_initial, kgs_mass, solution_errors, Grid1D, KgsScheme, KgsState, SolitonParams};
use crate::numerics::NonlinearSolveConfig;

pub const HH_ORBIT_HEADER: &str = "t,q1,q2,p1,p2,H,RH,iters";
pub const KGS_RUN_HEADER: &str = "t,H,RH,M,RM,iters";
pub const POINCARE_HEADER: &str = "q2,p2,t_cross";
pub const PROFILE_HEADER: &str = "x,u,v,p,q,abs_phi";

/// Named Hénon–Heiles initial conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HhOrbit {
    /// At the escape energy `H = 1/6`.
    Chaotic,
    /// Regular box orbit at `H = 0.02`.
    Box,
}

impl HhOrbit {
    pub fn init(self) -> HhInit {
        match self {
            HhOrbit::Chaotic => HhInit::CHAOTIC,
            HhOrbit::Box => HhInit::BOX,
        }
    }
}

impl std::str::FromStr for HhOrbit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "chaotic" => Ok(HhOrbit::Chaotic),
            "box" => Ok(HhOrbit::Box),
            _ => Err(Error::Config(format!("unknown orbit '{s}' (expected chaotic or box)"))),
        }
    }
}

/// Domain, resolution and solitons of a KGS run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KgsSetup {
    pub x_left: f64,
    pub x_right: f64,
    pub h: f64,
    pub solitons: Vec<SolitonParams>,
}

impl KgsSetup {
    /// Single soliton moving left from `x0 = 20` on `[-50, 50]`.
    pub fn one_soliton() -> Self {
        Self {
            x_left: -50.0,
            x_right: 50.0,
            h: 0.1,
            solitons: vec![SolitonParams { c: -0.8, x0: 20.0 }],
        }
    }

    /// Two mirror-image solitons heading for a collision.
    pub fn collision() -> Self {
        Self {
            solitons: vec![SolitonParams { c: -0.8, x0: 20.0 }, SolitonParams { c: 0.8, x0: -20.0 }],
            ..Self::one_soliton()
        }
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::with_spacing(self.x_left, self.x_right, self.h)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        for s in &self.solitons {
            SolitonParams::new(s.c, s.x0)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ModelSpec {
    HenonHeiles { orbit: HhOrbit },
    Kgs(KgsSetup),
}

/// Everything that determines a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(flatten)]
    pub model: ModelSpec,
    pub method: Method,
    pub tau: f64,
    pub t_final: f64,
    /// Write every `stride`-th step to the series (the last step is always written).
    pub stride: usize,
    pub solver: NonlinearSolveConfig,
}

impl ExperimentSpec {
    pub fn henon_heiles(orbit: HhOrbit, method: Method, tau: f64, t_final: f64) -> Self {
        Self {
            model: ModelSpec::HenonHeiles { orbit },
            method,
            tau,
            t_final,
            stride: 1,
            solver: NonlinearSolveConfig::default(),
        }
    }

    pub fn kgs(setup: KgsSetup, method: Method, tau: f64, t_final: f64) -> Self {
        Self {
            model: ModelSpec::Kgs(setup),
            method,
            tau,
            t_final,
            stride: 1,
            solver: NonlinearSolveConfig::default(),
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(Error::Config(format!("t_final must be non-negative, got {}", self.t_final)));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        self.solver.validate()?;
        if let ModelSpec::Kgs(setup) = &self.model {
            setup.validate()?;
        }
        Ok(())
    }

    /// `t_final / tau` rounded to the nearest whole step.
    pub fn step_count(&self) -> Result<usize> {
        self.validate()?;
        Ok((self.t_final / self.tau).round() as usize)
    }

    fn stepper_config(&self) -> StepperConfig {
        StepperConfig::new(self.tau).with_solver(self.solver)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    SolverFailed { step: usize, message: String },
}

/// JSON summary of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub spec: ExperimentSpec,
    pub version: String,
    pub environment: String,
    pub status: RunStatus,
    /// Steps requested after rounding `t_final / tau`.
    pub steps: usize,
    pub steps_completed: usize,
    /// `steps * tau`, the time actually reached on success.
    pub t_final_actual: f64,
    pub records_written: usize,
    pub h0: f64,
    pub max_rh: f64,
    pub m0: Option<f64>,
    pub max_rm: Option<f64>,
    pub total_iterations: usize,
    pub wall_seconds: f64,
    pub crossings: Option<usize>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn succeeded(&self) -> bool {
        self.status == RunStatus::Completed
    }
}

fn environment_note() -> String {
    format!(
        "{}-{}, single-threaded, monotonic clock",
        std::env::consts::OS,
        std::env::consts::ARCH
    )
}

/// Where a run writes its files. Any sink may be absent.
#[derive(Default)]
pub struct Sinks<'a> {
    /// Per-step series (`hh-orbit` or `kgs-run` columns).
    pub series: Option<&'a mut dyn Write>,
    /// Hénon–Heiles section points.
    pub poincare: Option<&'a mut dyn Write>,
    /// KGS fields at the final time.
    pub profile: Option<&'a mut dyn Write>,
}

/// Streams strided rows and tracks drift; IO failures are kept for later.
struct SeriesObserver<'a, S, F> {
    sink: Option<&'a mut dyn Write>,
    stride: usize,
    row: F,
    h0: Option<f64>,
    m0: Option<f64>,
    max_rh: f64,
    max_rm: f64,
    iterations: usize,
    written: usize,
    steps: usize,
    last_row: Option<String>,
    io_error: Option<std::io::Error>,
    mass: Option<Box<dyn Fn(&S) -> f64 + 'a>>,
}

impl<'a, S, F> SeriesObserver<'a, S, F>
where
    F: FnMut(&StepRecord<'_, S>, f64, f64, Option<(f64, f64)>) -> String,
{
    fn new(sink: Option<&'a mut dyn Write>, stride: usize, row: F) -> Self {
        Self {
            sink,
            stride,
            row,
            h0: None,
            m0: None,
            max_rh: 0.0,
            max_rm: 0.0,
            iterations: 0,
            written: 0,
            steps: 0,
            last_row: None,
            io_error: None,
            mass: None,
        }
    }

    fn emit(&mut self, line: String) {
        if self.io_error.is_some() {
            return;
        }
        if let Some(w) = self.sink.as_mut() {
            if let Err(e) = writeln!(w, "{line}") {
                self.io_error = Some(e);
                return;
            }
            self.written += 1;
        }
    }

    /// Writes the final row if the stride skipped it.
    fn finish(&mut self) -> Result<()> {
        if let Some(line) = self.last_row.take() {
            self.emit(line);
        }
        if let Some(w) = self.sink.as_mut() {
            if let Err(e) = w.flush() {
                self.io_error.get_or_insert(e);
            }
        }
        match self.io_error.take() {
            Some(e) => Err(e.into()),
            None => Ok(()),
        }
    }
}

impl<S, F> Observer<S> for SeriesObserver<'_, S, F>
where
    F: FnMut(&StepRecord<'_, S>, f64, f64, Option<(f64, f64)>) -> String,
{
    fn observe(&mut self, r: &StepRecord<'_, S>) {
        let h0 = *self.h0.get_or_insert(r.hamiltonian);
        let rh = relative_drift(r.hamiltonian, h0);
        self.max_rh = self.max_rh.max(rh);
        let mass = self.mass.as_ref().map(|m| {
            let m = m(r.state);
            let m0 = *self.m0.get_or_insert(m);
            let rm = relative_drift(m, m0);
            self.max_rm = self.max_rm.max(rm);
            (m, rm)
        });
        self.iterations += r.solver_iterations;
        self.steps = r.step;
        if self.sink.is_none() {
            return;
        }
        let line = (self.row)(r, h0, rh, mass);
        if r.step % self.stride == 0 {
            self.last_row = None;
            self.emit(line);
        } else {
            self.last_row = Some(line);
        }
    }
}

fn fmt_row(values: &[f64], iters: usize) -> String {
    let mut s = String::new();
    for v in values {
        s.push_str(&format!("{v:?},"));
    }
    s.push_str(&iters.to_string());
    s
}

fn write_header(sink: &mut Option<&mut dyn Write>, header: &str) -> Result<()> {
    if let Some(w) = sink.as_mut() {
        writeln!(w, "{header}")?;
    }
    Ok(())
}

struct Totals {
    status: RunStatus,
    steps_completed: usize,
    records: usize,
    h0: f64,
    max_rh: f64,
    m0: Option<f64>,
    max_rm: Option<f64>,
    iterations: usize,
    wall: f64,
}

fn drive<T, F>(
    stepper: &T,
    z0: T::State,
    n: usize,
    obs: &mut SeriesObserver<'_, T::State, F>,
    extra: &mut impl Observer<T::State>,
) -> Result<(Totals, Option<T::State>)>
where
    T: Stepper,
    F: FnMut(&StepRecord<'_, T::State>, f64, f64, Option<(f64, f64)>) -> String,
{
    let start = Instant::now();
    let outcome = {
        let mut both = |r: &StepRecord<'_, T::State>| {
            obs.observe(r);
            extra.observe(r);
        };
        integrate(stepper, z0, n, &mut both)
    };
    let wall = start.elapsed().as_secs_f64();
    let (status, last) = match outcome {
        Ok(z) => (RunStatus::Completed, Some(z)),
        Err(Error::StepFailed { step, source }) if source.is_solver_failure() => (
            RunStatus::SolverFailed {
                step,
                message: source.to_string(),
            },
            None,
        ),
        Err(e) => return Err(e),
    };
    obs.finish()?;
    let has_mass = obs.mass.is_some();
    Ok((
        Totals {
            steps_completed: obs.steps,
            status,
            records: obs.written,
            h0: obs.h0.unwrap_or(0.0),
            max_rh: obs.max_rh,
            m0: if has_mass { obs.m0 } else { None },
            max_rm: has_mass.then_some(obs.max_rm),
            iterations: obs.iterations,
            wall,
        },
        last,
    ))
}

struct Nothing;

impl<S> Observer<S> for Nothing {
    fn observe(&mut self, _: &StepRecord<'_, S>) {}
}

/// Runs one experiment, streaming its files to `sinks`.
///
/// A solver failure is not an `Err`: the partial series is flushed and the
/// report carries [`RunStatus::SolverFailed`]. Bad configuration and IO
/// problems are returned as errors.
pub fn run_experiment(spec: &ExperimentSpec, mut sinks: Sinks<'_>) -> Result<RunReport> {
    let n = spec.step_count()?;
    let cfg = spec.stepper_config();
    let mut warnings = Vec::new();
    let (totals, crossings) = match &spec.model {
        ModelSpec::HenonHeiles { orbit } => {
            let z0 = hh_initial_state(&orbit.init())?;
            let stepper = HhScheme::new(spec.method, cfg)?;
            write_header(&mut sinks.series, HH_ORBIT_HEADER)?;
            let row = |r: &StepRecord<'_, HhState>, _h0: f64, rh: f64, _m: Option<(f64, f64)>| {
                let z = r.state;
                fmt_row(&[r.time, z.q1, z.q2, z.p1, z.p2, r.hamiltonian, rh], r.solver_iterations)
            };
            let mut obs = SeriesObserver::new(sinks.series.take(), spec.stride, row);
            let mut section = PoincareCollector::default();
            let (totals, _) = drive(&stepper, z0, n, &mut obs, &mut section)?;
            if let Some(w) = sinks.poincare.as_mut() {
                write_poincare(&section.crossings, w)?;
            }
            (totals, Some(section.crossings.len()))
        }
        ModelSpec::Kgs(setup) => {
            let grid = setup.grid()?;
            let init = kgs_initial(&grid, &setup.solitons);
            warnings.extend(init.warnings());
            let stepper = KgsScheme::new(&grid, spec.method, cfg)?;
            write_header(&mut sinks.series, KGS_RUN_HEADER)?;
            let row = |r: &StepRecord<'_, KgsState>, _h0: f64, rh: f64, m: Option<(f64, f64)>| {
                let (m, rm) = m.unwrap_or((f64::NAN, f64::NAN));
                fmt_row(&[r.time, r.hamiltonian, rh, m, rm], r.solver_iterations)
            };
            let mut obs = SeriesObserver::new(sinks.series.take(), spec.stride, row);
            obs.mass = Some(Box::new(move |s: &KgsState| kgs_mass(&grid, s)));
            let (totals, last) = drive(&stepper, init.state, n, &mut obs, &mut Nothing)?;
            if let (Some(w), Some(z)) = (sinks.profile.as_mut(), last.as_ref()) {
                write_profile(&grid, z, w)?;
            }
            (totals, None)
        }
    };
    Ok(RunReport {
        spec: spec.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        environment: environment_note(),
        status: totals.status,
        steps: n,
        steps_completed: totals.steps_completed,
        t_final_actual: n as f64 * spec.tau,
        records_written: totals.records,
        h0: totals.h0,
        max_rh: totals.max_rh,
        m0: totals.m0,
        max_rm: totals.max_rm,
        total_iterations: totals.iterations,
        wall_seconds: totals.wall,
        crossings,
        warnings,
    })
}

/// Runs without writing any files.
pub fn run_quiet(spec: &ExperimentSpec) -> Result<RunReport> {
    run_experiment(spec, Sinks::default())
}

pub fn write_poincare<W: Write + ?Sized>(crossings: &[crate::models::henon_heiles::Crossing], w: &mut W) -> Result<()> {
    writeln!(w, "{POINCARE_HEADER}")?;
    for c in crossings {
        writeln!(w, "{:?},{:?},{:?}", c.q2, c.p2, c.t_cross)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_profile<W: Write + ?Sized>(grid: &Grid1D, s: &KgsState, w: &mut W) -> Result<()> {
    writeln!(w, "{PROFILE_HEADER}")?;
    for (j, x) in grid.nodes().enumerate() {
        let abs_phi = s.p[j].hypot(s.q[j]);
        writeln!(w, "{x:?},{:?},{:?},{:?},{:?},{abs_phi:?}", s.u[j], s.v[j], s.p[j], s.q[j])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary<W: Write, T: Serialize>(value: &T, w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, value)?;
    Ok(())
}

/// `ln(e1 / e2) / ln(s1 / s2)`.
pub fn log_ratio_order(s1: f64, e1: f64, s2: f64, e2: f64) -> f64 {
    (e1 / e2).ln() / (s1 / s2).ln()
}

/// Least-squares slope of `ln e` against `ln s`.
pub fn fitted_order(steps: &[f64], errors: &[f64]) -> f64 {
    assert_eq!(steps.len(), errors.len());
    let n = steps.len() as f64;
    let xs: Vec<f64> = steps.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub step: f64,
    pub error_l2: f64,
    pub error_linf: f64,
    /// Against the previous row; `None` on the first.
    pub order_l2: Option<f64>,
    pub order_linf: Option<f64>,
}

/// Tabulates errors with log-ratio orders between consecutive rows.
pub fn convergence_table(steps: &[f64], errors_l2: &[f64], errors_linf: &[f64]) -> Result<Vec<ConvergenceRow>> {
    if steps.is_empty() || steps.len() != errors_l2.len() || steps.len() != errors_linf.len() {
        return Err(Error::Config("convergence table needs equally long, non-empty step and error lists".into()));
    }
    let increasing = steps.windows(2).all(|w| w[1] > w[0]);
    let decreasing = steps.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) || steps.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Config("step list must be positive and strictly monotone".into()));
    }
    Ok((0..steps.len())
        .map(|i| ConvergenceRow {
            step: steps[i],
            error_l2: errors_l2[i],
            error_linf: errors_linf[i],
            order_l2: (i > 0).then(|| log_ratio_order(steps[i - 1], errors_l2[i - 1], steps[i], errors_l2[i])),
            order_linf: (i > 0).then(|| log_ratio_order(steps[i - 1], errors_linf[i - 1], steps[i], errors_linf[i])),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Refinement {
    Temporal,
    Spatial,
}

/// Convergence study of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyStudy {
    pub method: Method,
    pub refinement: Refinement,
    pub rows: Vec<ConvergenceRow>,
    pub fitted_order_l2: f64,
    pub fitted_order_linf: f64,
}

impl AccuracyStudy {
    fn from_errors(method: Method, refinement: Refinement, steps: &[f64], l2: &[f64], linf: &[f64]) -> Result<Self> {
        Ok(Self {
            method,
            refinement,
            rows: convergence_table(steps, l2, linf)?,
            fitted_order_l2: fitted_order(steps, l2),
            fitted_order_linf: fitted_order(steps, linf),
        })
    }
}

/// Soliton accuracy runs against the exact solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KgsAccuracyConfig {
    pub x_left: f64,
    pub x_right: f64,
    pub soliton: SolitonParams,
    pub t_final: f64,
    /// Fixed spacing for the temporal study.
    pub h: f64,
    pub taus: Vec<f64>,
    /// Fixed step for the spatial study.
    pub tau: f64,
    pub hs: Vec<f64>,
    pub solver: NonlinearSolveConfig,
}

impl Default for KgsAccuracyConfig {
    fn default() -> Self {
        Self {
            x_left: -10.0,
            x_right: 10.0,
            soliton: SolitonParams { c: -0.8, x0: 0.0 },
            t_final: 1.0,
            h: 0.02,
            taus: vec![1.0 / 10.0, 1.0 / 11.0, 1.0 / 12.0, 1.0 / 13.0],
            tau: 0.001,
            hs: vec![2.0 / 10.0, 2.0 / 15.0, 2.0 / 20.0, 2.0 / 25.0],
            solver: NonlinearSolveConfig::default(),
        }
    }
}

fn kgs_error_at(cfg: &KgsAccuracyConfig, method: Method, grid: &Grid1D, tau: f64) -> Result<(f64, f64)> {
    let n = (cfg.t_final / tau).round() as usize;
    let stepper = KgsScheme::new(grid, method, StepperConfig::new(tau).with_solver(cfg.solver))?;
    let z0 = kgs_initial(grid, &[cfg.soliton]).state;
    let z = integrate(&stepper, z0, n, &mut Nothing)?;
    Ok(solution_errors(grid, &z, n as f64 * tau, &cfg.soliton))
}

/// Errors at `t_final` for each time step on the fixed grid.
pub fn kgs_temporal_accuracy(method: Method, cfg: &KgsAccuracyConfig) -> Result<AccuracyStudy> {
    let grid = Grid1D::with_spacing(cfg.x_left, cfg.x_right, cfg.h)?;
    let (mut l2, mut linf) = (Vec::new(), Vec::new());
    for &tau in &cfg.taus {
        let (a, b) = kgs_error_at(cfg, method, &grid, tau)?;
        l2.push(a);
        linf.push(b);
    }
    AccuracyStudy::from_errors(method, Refinement::Temporal, &cfg.taus, &l2, &linf)
}

/// Errors at `t_final` for each grid spacing at the fixed time step.
pub fn kgs_spatial_accuracy(method: Method, cfg: &KgsAccuracyConfig) -> Result<AccuracyStudy> {
    let (mut l2, mut linf) = (Vec::new(), Vec::new());
    for &h in &cfg.hs {
        let grid = Grid1D::with_spacing(cfg.x_left, cfg.x_right, h)?;
        let (a, b) = kgs_error_at(cfg, method, &grid, cfg.tau)?;
        l2.push(a);
        linf.push(b);
    }
    AccuracyStudy::from_errors(method, Refinement::Spatial, &cfg.hs, &l2, &linf)
}

/// Temporal convergence on Hénon–Heiles against a PAVF-C run with
/// `min(taus) / 64`, the finest affordable reference.
pub fn hh_temporal_accuracy(method: Method, orbit: HhOrbit, taus: &[f64], t_final: f64) -> Result<AccuracyStudy> {
    let tau_min = taus.iter().cloned().fold(f64::INFINITY, f64::min);
    if !tau_min.is_finite() || !(tau_min > 0.0) {
        return Err(Error::Config("reference unavailable: no positive time step given".into()));
    }
    let z0 = hh_initial_state(&orbit.init())?;
    let run = |m: Method, tau: f64| -> Result<HhState> {
        let n = (t_final / tau).round() as usize;
        if ((n as f64) * tau - t_final).abs() > 1e-9 * t_final.max(1.0) {
            return Err(Error::Config(format!("t_final {t_final} is not a whole number of steps {tau}")));
        }
        integrate(&HhScheme::new(m, StepperConfig::new(tau))?, z0, n, &mut Nothing)
    };
    let reference = run(Method::PavfC, tau_min / 64.0)?;
    let (mut l2, mut linf) = (Vec::new(), Vec::new());
    for &tau in taus {
        let z = run(method, tau)?;
        let d: Vec<f64> = z.to_array().iter().zip(reference.to_array()).map(|(a, b)| a - b).collect();
        l2.push(d.iter().map(|x| x * x).sum::<f64>().sqrt());
        linf.push(d.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    }
    AccuracyStudy::from_errors(method, Refinement::Temporal, taus, &l2, &linf)
}

/// Timing of one spec: median wall time over the measured repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub method: Method,
    pub median_seconds: f64,
    pub samples: Vec<f64>,
    pub steps: usize,
    pub total_iterations: usize,
}

/// Times each spec after one discarded warm-up run.
///
/// Specs must describe the same physics and differ only in method.
pub fn cost_benchmark(specs: &[ExperimentSpec], repeats: usize) -> Result<Vec<CostRow>> {
    if repeats == 0 {
        return Err(Error::Config("need at least one timed repetition".into()));
    }
    if let Some(first) = specs.first() {
        if specs.iter().any(|s| s.clone().with_method(first.method) != *first) {
            return Err(Error::Config("benchmark specs may differ only in method".into()));
        }
    }
    let mut rows = Vec::new();
    for spec in specs {
        let time_once = || -> Result<(f64, usize, usize)> {
            let r = run_quiet(spec)?;
            if let RunStatus::SolverFailed { step, message } = &r.status {
                return Err(Error::SolverFailed(format!("{} step {step}: {message}", spec.method)));
            }
            Ok((r.wall_seconds, r.total_iterations, r.steps))
        };
        time_once()?;
        let mut samples = Vec::with_capacity(repeats);
        let mut last = (0, 0);
        for _ in 0..repeats {
            let (t, iters, steps) = time_once()?;
            samples.push(t);
            last = (iters, steps);
        }
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        rows.push(CostRow {
            method: spec.method,
            median_seconds: sorted[sorted.len() / 2],
            samples,
            steps: last.1,
            total_iterations: last.0,
        });
    }
    Ok(rows)
}
