//! One-step methods over any [`HamiltonianSystem`] and [`Grouping`]: AVF,
//! PAVF, its adjoint, the composition PAVF-C and the averaged PAVF-P, plus
//! the time-stepping loop with observers.
//!
//! Every method solves `z' = z + tau S g(z, z')` for a method-specific
//! averaged gradient `g`:
//!
//! | method       | `g`                                                     |
//! |--------------|---------------------------------------------------------|
//! | AVF          | straight-line average of `grad H`                       |
//! | PAVF         | group averages along the grouping's path order          |
//! | PAVF-adjoint | group averages along the reversed path order            |
//! | PAVF-P       | mean of the PAVF and PAVF-adjoint group averages        |
//!
//! PAVF-C is the composition of PAVF and its adjoint at half steps.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{avf_averaged_gradient, path_averaged_gradient, Grouping, HamiltonianSystem, State};
use crate::numerics::{solve_nonlinear, NonlinearSolveConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "AVF")]
    Avf,
    #[serde(rename = "PAVF")]
    Pavf,
    #[serde(rename = "PAVF-adjoint")]
    PavfAdjoint,
    #[serde(rename = "PAVF-C")]
    PavfC,
    #[serde(rename = "PAVF-P")]
    PavfP,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Avf, Method::Pavf, Method::PavfAdjoint, Method::PavfC, Method::PavfP];

    /// The four schemes compared in the experiments.
    pub const COMPARED: [Method; 4] = [Method::Avf, Method::Pavf, Method::PavfC, Method::PavfP];

    pub fn label(self) -> &'static str {
        match self {
            Method::Avf => "AVF",
            Method::Pavf => "PAVF",
            Method::PavfAdjoint => "PAVF-adjoint",
            Method::PavfC => "PAVF-C",
            Method::PavfP => "PAVF-P",
        }
    }

    /// Lower-case form used on the command line and in file names.
    pub fn slug(self) -> &'static str {
        match self {
            Method::Avf => "avf",
            Method::Pavf => "pavf",
            Method::PavfAdjoint => "pavf-adjoint",
            Method::PavfC => "pavf-c",
            Method::PavfP => "pavf-p",
        }
    }

    /// Classical order of accuracy.
    pub fn order(self) -> u32 {
        match self {
            Method::Pavf | Method::PavfAdjoint => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.slug() == norm || (norm == "adjoint" && *m == Method::PavfAdjoint))
            .ok_or_else(|| Error::Config(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    /// Time step; negative values run the method backwards.
    pub tau: f64,
    pub solver: NonlinearSolveConfig,
}

impl StepperConfig {
    pub fn new(tau: f64) -> Self {
        Self {
            tau,
            solver: NonlinearSolveConfig::default(),
        }
    }

    pub fn with_solver(mut self, solver: NonlinearSolveConfig) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.tau.is_finite() || self.tau == 0.0 {
            return Err(Error::Config(format!("time step must be finite and nonzero, got {}", self.tau)));
        }
        self.solver.validate()
    }
}

/// Result of one step with the nonlinear iteration count it took.
#[derive(Debug, Clone, PartialEq)]
pub struct Step<S> {
    pub state: S,
    pub iterations: usize,
}

/// Anything that advances a state by a fixed step.
pub trait Stepper {
    type State: Clone;

    fn tau(&self) -> f64;

    fn step(&self, z: &Self::State) -> Result<Step<Self::State>>;

    /// Conserved energy the stepper is designed to preserve.
    fn energy(&self, z: &Self::State) -> f64;
}

fn solve_implicit<S, G>(sys: &S, cfg: &StepperConfig, z: &State, mut avg: G) -> Result<Step<State>>
where
    S: HamiltonianSystem + ?Sized,
    G: FnMut(&[f64], &[f64]) -> Vec<f64>,
{
    assert_eq!(z.len(), sys.dim(), "state length does not match system dimension");
    let tau = cfg.tau;
    let skew = sys.skew();
    let map = |z_new: &State| -> State {
        let g = avg(z, z_new);
        let f = skew.apply(&g);
        z.iter().zip(f).map(|(a, b)| a + tau * b).collect::<Vec<f64>>().into()
    };
    let (state, iterations) = solve_nonlinear(map, z.clone(), &cfg.solver)?;
    Ok(Step { state, iterations })
}

fn avf<S: HamiltonianSystem + ?Sized>(sys: &S, cfg: &StepperConfig, z: &State) -> Result<Step<State>> {
    solve_implicit(sys, cfg, z, |a, b| avf_averaged_gradient(sys, a, b))
}

fn pavf<S: HamiltonianSystem + ?Sized>(sys: &S, grouping: &Grouping, cfg: &StepperConfig, z: &State) -> Result<Step<State>> {
    solve_implicit(sys, cfg, z, |a, b| path_averaged_gradient(sys, grouping, a, b))
}

fn pavf_p<S: HamiltonianSystem + ?Sized>(
    sys: &S,
    grouping: &Grouping,
    reversed: &Grouping,
    cfg: &StepperConfig,
    z: &State,
) -> Result<Step<State>> {
    solve_implicit(sys, cfg, z, |a, b| {
        let fwd = path_averaged_gradient(sys, grouping, a, b);
        let rev = path_averaged_gradient(sys, reversed, a, b);
        fwd.into_iter().zip(rev).map(|(x, y)| 0.5 * (x + y)).collect()
    })
}

fn pavf_c<S: HamiltonianSystem + ?Sized>(
    sys: &S,
    grouping: &Grouping,
    reversed: &Grouping,
    cfg: &StepperConfig,
    z: &State,
) -> Result<Step<State>> {
    let half = cfg.with_tau(0.5 * cfg.tau);
    let first = pavf(sys, grouping, &half, z)?;
    let second = pavf(sys, reversed, &half, &first.state)?;
    Ok(Step {
        state: second.state,
        iterations: first.iterations + second.iterations,
    })
}

/// AVF step: `(z' - z) / tau = S int_0^1 grad H(xi z' + (1 - xi) z) dxi`.
pub fn step_avf<S: HamiltonianSystem + ?Sized>(sys: &S, cfg: &StepperConfig, z: &State) -> Result<State> {
    avf(sys, cfg, z).map(|s| s.state)
}

/// PAVF step along the grouping's path order.
pub fn step_pavf<S: HamiltonianSystem + ?Sized>(
    sys: &S,
    grouping: &Grouping,
    cfg: &StepperConfig,
    z: &State,
) -> Result<State> {
    pavf(sys, grouping, cfg, z).map(|s| s.state)
}

/// Adjoint of PAVF: the same scheme along the reversed path order.
pub fn step_pavf_adjoint<S: HamiltonianSystem + ?Sized>(
    sys: &S,
    grouping: &Grouping,
    cfg: &StepperConfig,
    z: &State,
) -> Result<State> {
    pavf(sys, &grouping.reversed(), cfg, z).map(|s| s.state)
}

/// PAVF-C: half a PAVF step followed by half an adjoint step.
pub fn step_pavf_c<S: HamiltonianSystem + ?Sized>(
    sys: &S,
    grouping: &Grouping,
    cfg: &StepperConfig,
    z: &State,
) -> Result<State> {
    pavf_c(sys, grouping, &grouping.reversed(), cfg, z).map(|s| s.state)
}

/// PAVF-P: one coupled implicit step whose group gradients are the mean of
/// the forward and reversed path patterns.
pub fn step_pavf_p<S: HamiltonianSystem + ?Sized>(
    sys: &S,
    grouping: &Grouping,
    cfg: &StepperConfig,
    z: &State,
) -> Result<State> {
    pavf_p(sys, grouping, &grouping.reversed(), cfg, z).map(|s| s.state)
}

/// Any of the five methods bound to a system, grouping and configuration.
pub struct GenericStepper<S> {
    sys: S,
    grouping: Grouping,
    reversed: Grouping,
    method: Method,
    cfg: StepperConfig,
}

impl<S: HamiltonianSystem> GenericStepper<S> {
    pub fn new(sys: S, grouping: Grouping, method: Method, cfg: StepperConfig) -> Result<Self> {
        cfg.validate()?;
        if grouping.dim() != sys.dim() {
            return Err(Error::InvalidGrouping(format!(
                "grouping covers {} indices but the system has dimension {}",
                grouping.dim(),
                sys.dim()
            )));
        }
        let reversed = grouping.reversed();
        Ok(Self {
            sys,
            grouping,
            reversed,
            method,
            cfg,
        })
    }

    pub fn system(&self) -> &S {
        &self.sys
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }
}

impl<S: HamiltonianSystem> Stepper for GenericStepper<S> {
    type State = State;

    fn tau(&self) -> f64 {
        self.cfg.tau
    }

    fn step(&self, z: &State) -> Result<Step<State>> {
        let (sys, cfg) = (&self.sys, &self.cfg);
        match self.method {
            Method::Avf => avf(sys, cfg, z),
            Method::Pavf => pavf(sys, &self.grouping, cfg, z),
            Method::PavfAdjoint => pavf(sys, &self.reversed, cfg, z),
            Method::PavfC => pavf_c(sys, &self.grouping, &self.reversed, cfg, z),
            Method::PavfP => pavf_p(sys, &self.grouping, &self.reversed, cfg, z),
        }
    }

    fn energy(&self, z: &State) -> f64 {
        self.sys.hamiltonian(z)
    }
}

/// What an observer sees after each step (and once for the initial state).
#[derive(Debug)]
pub struct StepRecord<'a, S> {
    pub step: usize,
    pub time: f64,
    pub state: &'a S,
    /// Recomputed from `state`.
    pub hamiltonian: f64,
    pub solver_iterations: usize,
    /// Monotonic time spent inside the step call.
    pub wall_nanos: u64,
}

pub trait Observer<S> {
    fn observe(&mut self, record: &StepRecord<'_, S>);
}

impl<S, F: FnMut(&StepRecord<'_, S>)> Observer<S> for F {
    fn observe(&mut self, record: &StepRecord<'_, S>) {
        self(record)
    }
}

/// Owned copy of a [`StepRecord`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint<S> {
    pub step: usize,
    pub time: f64,
    pub state: S,
    pub hamiltonian: f64,
    pub solver_iterations: usize,
    pub wall_nanos: u64,
}

/// Keeps every `stride`-th record plus the last one seen.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    stride: usize,
    pub points: Vec<TrajectoryPoint<S>>,
    pending_last: Option<TrajectoryPoint<S>>,
}

impl<S: Clone> Trajectory<S> {
    pub fn new() -> Self {
        Self::every(1)
    }

    pub fn every(stride: usize) -> Self {
        Self {
            stride: stride.max(1),
            points: Vec::new(),
            pending_last: None,
        }
    }

    /// Flushes the most recent record if the stride skipped it.
    pub fn finish(mut self) -> Self {
        if let Some(p) = self.pending_last.take() {
            self.points.push(p);
        }
        self
    }

    pub fn states(&self) -> impl Iterator<Item = &S> {
        self.points.iter().map(|p| &p.state)
    }
}

impl<S: Clone> Default for Trajectory<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Clone> Observer<S> for Trajectory<S> {
    fn observe(&mut self, r: &StepRecord<'_, S>) {
        let point = TrajectoryPoint {
            step: r.step,
            time: r.time,
            state: r.state.clone(),
            hamiltonian: r.hamiltonian,
            solver_iterations: r.solver_iterations,
            wall_nanos: r.wall_nanos,
        };
        if r.step % self.stride == 0 {
            self.points.push(point);
            self.pending_last = None;
        } else {
            self.pending_last = Some(point);
        }
    }
}

/// Tracks the largest relative energy drift and the iteration/time totals.
#[derive(Debug, Clone, Default)]
pub struct EnergyMonitor {
    pub h0: Option<f64>,
    pub max_relative_drift: f64,
    pub total_iterations: usize,
    pub total_wall_nanos: u64,
    pub steps: usize,
}

impl<S> Observer<S> for EnergyMonitor {
    fn observe(&mut self, r: &StepRecord<'_, S>) {
        let h0 = *self.h0.get_or_insert(r.hamiltonian);
        self.max_relative_drift = self.max_relative_drift.max(relative_drift(r.hamiltonian, h0));
        self.total_iterations += r.solver_iterations;
        self.total_wall_nanos += r.wall_nanos;
        self.steps = r.step;
    }
}

impl<S, A: Observer<S>, B: Observer<S>> Observer<S> for (A, B) {
    fn observe(&mut self, r: &StepRecord<'_, S>) {
        self.0.observe(r);
        self.1.observe(r);
    }
}

/// `|(x - x0) / x0|`, or the absolute drift when `x0` is zero.
pub fn relative_drift(x: f64, x0: f64) -> f64 {
    if x0 == 0.0 {
        (x - x0).abs()
    } else {
        ((x - x0) / x0).abs()
    }
}

/// Applies `stepper` `n_steps` times from `z0`, reporting every state
/// (including `z0` at step 0) to `observer`. On failure the observer keeps
/// the records up to the last good step.
pub fn integrate<T, O>(stepper: &T, z0: T::State, n_steps: usize, observer: &mut O) -> Result<T::State>
where
    T: Stepper,
    O: Observer<T::State>,
{
    let tau = stepper.tau();
    observer.observe(&StepRecord {
        step: 0,
        time: 0.0,
        state: &z0,
        hamiltonian: stepper.energy(&z0),
        solver_iterations: 0,
        wall_nanos: 0,
    });
    let mut z = z0;
    for n in 1..=n_steps {
        let start = Instant::now();
        let out = stepper.step(&z);
        let wall_nanos = start.elapsed().as_nanos() as u64;
        let step = out.map_err(|e| Error::StepFailed {
            step: n,
            source: Box::new(e),
        })?;
        z = step.state;
        observer.observe(&StepRecord {
            step: n,
            time: n as f64 * tau,
            state: &z,
            hamiltonian: stepper.energy(&z),
            solver_iterations: step.iterations,
            wall_nanos,
        });
    }
    Ok(z)
}

/// Runs [`integrate`] and collects every state.
pub fn trajectory<T: Stepper>(stepper: &T, z0: T::State, n_steps: usize) -> Result<Trajectory<T::State>> {
    let mut traj = Trajectory::new();
    integrate(stepper, z0, n_steps, &mut traj)?;
    Ok(traj.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{FnSystem, SkewStructure};
    use crate::numerics::max_abs_diff;

    fn oscillator() -> FnSystem {
        FnSystem::quadratic(1)
    }

    #[test]
    fn method_parsing_round_trips() {
        for m in Method::ALL {
            assert_eq!(m.slug().parse::<Method>().unwrap(), m);
        }
        assert_eq!("PAVF-C".parse::<Method>().unwrap(), Method::PavfC);
        assert_eq!("pavf_p".parse::<Method>().unwrap(), Method::PavfP);
        assert!("rk4".parse::<Method>().is_err());
    }

    #[test]
    fn zero_vector_field_is_stationary() {
        let sys = FnSystem::new(SkewStructure::Canonical { d: 2 }, |_| 1.0, |z| vec![0.0; z.len()]);
        let z = State::from([0.3, 0.1, -0.2, 0.9]);
        let cfg = StepperConfig::new(0.5);
        assert_eq!(step_avf(&sys, &cfg, &z).unwrap(), z);
    }

    #[test]
    fn avf_oscillator_large_step_is_cayley_rotation() {
        // tau = 2 is not a contraction for Picard; Newton solves the linear relation.
        let sys = oscillator();
        let cfg = StepperConfig::new(2.0).with_solver(NonlinearSolveConfig::newton());
        let z = step_avf(&sys, &cfg, &State::from([1.0, 0.0])).unwrap();
        assert!(max_abs_diff(&z, &[0.0, -1.0]) < 1e-12);

        let g = Grouping::singletons(2);
        let z = step_pavf(&sys, &g, &cfg, &State::from([1.0, 0.0])).unwrap();
        assert!(max_abs_diff(&z, &[0.0, -1.0]) < 1e-12);
    }

    #[test]
    fn pavf_c_oscillator_composes_two_rotations() {
        let sys = oscillator();
        let cfg = StepperConfig::new(2.0);
        let g = Grouping::singletons(2);
        let z = step_pavf_c(&sys, &g, &cfg, &State::from([1.0, 0.0])).unwrap();
        let theta = 4.0 * 0.5f64.atan();
        assert!(max_abs_diff(&z, &[theta.cos(), -theta.sin()]) < 1e-12);
        assert!((z[0] + 0.28).abs() < 1e-2 && (z[1] + 0.96).abs() < 1e-2);
    }

    #[test]
    fn single_group_collapses_to_avf() {
        let sys = oscillator();
        let cfg = StepperConfig::new(0.3);
        let g = Grouping::single(2);
        let z = State::from([0.4, -0.7]);
        let a = step_avf(&sys, &cfg, &z).unwrap();
        assert!(max_abs_diff(&step_pavf(&sys, &g, &cfg, &z).unwrap(), &a) < 1e-15);
        assert!(max_abs_diff(&step_pavf_adjoint(&sys, &g, &cfg, &z).unwrap(), &a) < 1e-15);
        assert!(max_abs_diff(&step_pavf_p(&sys, &g, &cfg, &z).unwrap(), &a) < 1e-15);
    }

    #[test]
    fn oscillator_energy_over_thousand_steps() {
        let g = Grouping::singletons(2);
        for method in Method::ALL {
            let stepper = GenericStepper::new(oscillator(), g.clone(), method, StepperConfig::new(0.1)).unwrap();
            let mut mon = EnergyMonitor::default();
            integrate(&stepper, State::from([1.0, 0.5]), 1000, &mut mon).unwrap();
            assert!(mon.max_relative_drift * 0.625 <= 1e-12, "{method}: {}", mon.max_relative_drift);
            assert_eq!(mon.steps, 1000);
        }
    }

    #[test]
    fn zero_steps_keeps_only_initial_state() {
        let stepper = GenericStepper::new(oscillator(), Grouping::single(2), Method::Avf, StepperConfig::new(0.1)).unwrap();
        let traj = trajectory(&stepper, State::from([1.0, 0.0]), 0).unwrap();
        assert_eq!(traj.points.len(), 1);
        assert_eq!(traj.points[0].state, State::from([1.0, 0.0]));
    }

    #[test]
    fn strided_trajectory_keeps_last_point() {
        let stepper = GenericStepper::new(oscillator(), Grouping::single(2), Method::Avf, StepperConfig::new(0.1)).unwrap();
        let mut traj = Trajectory::every(4);
        integrate(&stepper, State::from([1.0, 0.0]), 10, &mut traj).unwrap();
        let traj = traj.finish();
        let steps: Vec<usize> = traj.points.iter().map(|p| p.step).collect();
        assert_eq!(steps, vec![0, 4, 8, 10]);
    }

    #[test]
    fn failure_keeps_partial_trajectory() {
        // Picard diverges for tau = 3 on the oscillator.
        let cfg = StepperConfig::new(3.0).with_solver(NonlinearSolveConfig { max_iter: 20, ..Default::default() });
        let stepper = GenericStepper::new(oscillator(), Grouping::single(2), Method::Avf, cfg).unwrap();
        let mut traj = Trajectory::new();
        let err = integrate(&stepper, State::from([1.0, 0.0]), 5, &mut traj).unwrap_err();
        assert!(matches!(err, Error::StepFailed { step: 1, .. }));
        assert!(err.is_solver_failure());
        assert_eq!(traj.points.len(), 1);
    }

    #[test]
    fn config_rejects_zero_step() {
        assert!(StepperConfig::new(0.0).validate().is_err());
        assert!(StepperConfig::new(f64::NAN).validate().is_err());
        assert!(StepperConfig::new(-0.1).validate().is_ok());
    }
}
