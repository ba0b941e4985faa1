//! Hénon–Heiles system `H = 1/2 (q1^2 + q2^2 + p1^2 + p2^2) + q1^2 q2 - q2^3 / 3`
//! with the four hand-integrated schemes and Poincaré-section diagnostics.
//!
//! The partitioned schemes use the grouping `({q1}, {q2}, {p1}, {p2})`. In
//! that order the `(q1, p1)` pair is linear in the unknowns and is eliminated
//! in closed form; only `q2` needs a scalar implicit solve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{Grouping, HamiltonianSystem, SkewStructure, State};
use crate::integrators::{Method, Step, StepRecord, Stepper, StepperConfig, Observer};
use crate::numerics::{fixed_point_solve, solve_nonlinear, NonlinearSolveConfig, SolveMode};

/// Flat-state indices.
pub const Q1: usize = 0;
pub const Q2: usize = 1;
pub const P1: usize = 2;
pub const P2: usize = 3;

/// Energy of escape; orbits below it stay inside the bounded triangle.
pub const ESCAPE_ENERGY: f64 = 1.0 / 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HhState {
    pub q1: f64,
    pub q2: f64,
    pub p1: f64,
    pub p2: f64,
}

impl HhState {
    pub fn new(q1: f64, q2: f64, p1: f64, p2: f64) -> Self {
        Self { q1, q2, p1, p2 }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.q1, self.q2, self.p1, self.p2]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[Q1], a[Q2], a[P1], a[P2])
    }

    pub fn from_slice(z: &[f64]) -> Self {
        assert_eq!(z.len(), 4, "Hénon–Heiles state has four entries");
        Self::new(z[Q1], z[Q2], z[P1], z[P2])
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl From<HhState> for State {
    fn from(z: HhState) -> Self {
        State::new(z.to_array().to_vec())
    }
}

pub fn hh_energy(z: &HhState) -> f64 {
    0.5 * (z.q1 * z.q1 + z.q2 * z.q2 + z.p1 * z.p1 + z.p2 * z.p2) + z.q1 * z.q1 * z.q2 - z.q2.powi(3) / 3.0
}

/// `(dH/dq1, dH/dq2, dH/dp1, dH/dp2)`.
pub fn hh_gradient(z: &HhState) -> [f64; 4] {
    [
        z.q1 + 2.0 * z.q1 * z.q2,
        z.q2 + z.q1 * z.q1 - z.q2 * z.q2,
        z.p1,
        z.p2,
    ]
}

/// Energy level plus the free coordinates; `p1` is recovered from the energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HhInit {
    pub h0: f64,
    pub q1: f64,
    pub q2: f64,
    pub p2: f64,
}

impl HhInit {
    /// Chaotic orbit at the escape energy.
    pub const CHAOTIC: HhInit = HhInit { h0: 1.0 / 6.0, q1: 0.1, q2: -0.5, p2: 0.0 };
    /// Box orbit.
    pub const BOX: HhInit = HhInit { h0: 0.02, q1: 0.0, q2: -0.082, p2: 0.0 };
}

/// Slack for radicands that are zero in exact arithmetic.
const RADICAND_SLACK: f64 = 1e-14;

/// Solves the energy relation for `p1 >= 0`.
pub fn hh_initial_state(init: &HhInit) -> Result<HhState> {
    let partial = HhState::new(init.q1, init.q2, 0.0, init.p2);
    let radicand = 2.0 * (init.h0 - hh_energy(&partial));
    if radicand < -RADICAND_SLACK || !radicand.is_finite() {
        return Err(Error::InfeasibleEnergy { radicand });
    }
    Ok(HhState { p1: radicand.max(0.0).sqrt(), ..partial })
}

/// The Hénon–Heiles system for the generic integrators.
#[derive(Debug, Clone)]
pub struct HenonHeiles {
    skew: SkewStructure,
    closed_form: bool,
}

/// Hénon–Heiles with closed-form group averages for singleton groupings.
pub fn hh_system() -> HenonHeiles {
    HenonHeiles {
        skew: SkewStructure::Canonical { d: 2 },
        closed_form: true,
    }
}

impl HenonHeiles {
    /// Same system with every average computed by quadrature.
    pub fn quadrature_only(mut self) -> Self {
        self.closed_form = false;
        self
    }

    /// The grouping the hand-coded partitioned schemes are built on.
    pub fn scheme_grouping() -> Grouping {
        Grouping::singletons(4)
    }
}

impl HamiltonianSystem for HenonHeiles {
    fn dim(&self) -> usize {
        4
    }

    fn skew(&self) -> &SkewStructure {
        &self.skew
    }

    fn hamiltonian(&self, z: &[f64]) -> f64 {
        hh_energy(&HhState::from_slice(z))
    }

    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        hh_gradient(&HhState::from_slice(z)).to_vec()
    }

    fn polynomial_degree(&self) -> Option<u32> {
        Some(3)
    }

    fn closed_form_group_average(&self, grouping: &Grouping, z_old: &[f64], z_new: &[f64], k: usize) -> Option<Vec<f64>> {
        if !self.closed_form || grouping.len() != 4 {
            return None;
        }
        let i = grouping.group(k)[0];
        // Coordinates earlier on the path are already at the new state.
        let at = |j: usize| if grouping.owner(j) < k { z_new[j] } else { z_old[j] };
        let (a, b) = (z_old[i], z_new[i]);
        let mid = 0.5 * (a + b);
        let v = match i {
            Q1 => mid * (1.0 + 2.0 * at(Q2)),
            Q2 => {
                let q1 = at(Q1);
                mid + q1 * q1 - (a * a + a * b + b * b) / 3.0
            }
            _ => mid,
        };
        Some(vec![v])
    }
}

/// Nonlinear iterations spent in each block of a partitioned step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SubstepIterations {
    /// `(q1, p1)` block: eliminated in closed form, always zero.
    pub q1p1: usize,
    /// `(q2, p2)` block: scalar implicit solve.
    pub q2p2: usize,
}

/// `(q1, p1)` update with `q2` frozen at `q2_frozen`; linear in the unknowns.
fn q1p1_block(tau: f64, q1: f64, p1: f64, q2_frozen: f64) -> Result<(f64, f64)> {
    let a = 0.5 + q2_frozen;
    let c = 0.5 * tau * tau * a;
    let den = 1.0 + c;
    if den == 0.0 {
        return Err(Error::SingularMatrix { row: 0 });
    }
    let q1n = (q1 * (1.0 - c) + tau * p1) / den;
    let p1n = p1 - tau * a * (q1n + q1);
    Ok((q1n, p1n))
}

/// `(q2, p2)` update with `q1^2` frozen at `q1_sq`, solved by scalar fixed point.
fn q2p2_block(tau: f64, q2: f64, p2: f64, q1_sq: f64, solver: &NonlinearSolveConfig) -> Result<(f64, f64, usize)> {
    let force = |x: f64| -(0.5 * (x + q2) + q1_sq) + (x * x + x * q2 + q2 * q2) / 3.0;
    let map = |x: &[f64; 1]| [q2 + tau * p2 + 0.5 * tau * tau * force(x[0])];
    let (x, iters) = match solver.mode {
        SolveMode::FixedPoint => fixed_point_solve(map, [q2], solver)?,
        SolveMode::Newton => solve_nonlinear(map, [q2], solver)?,
    };
    let q2n = x[0];
    Ok((q2n, p2 + tau * force(q2n), iters))
}

fn pavf_forward(tau: f64, z: &HhState, solver: &NonlinearSolveConfig) -> Result<(HhState, SubstepIterations)> {
    let (q1, p1) = q1p1_block(tau, z.q1, z.p1, z.q2)?;
    let (q2, p2, iters) = q2p2_block(tau, z.q2, z.p2, q1 * q1, solver)?;
    Ok((HhState { q1, q2, p1, p2 }, SubstepIterations { q1p1: 0, q2p2: iters }))
}

fn pavf_reverse(tau: f64, z: &HhState, solver: &NonlinearSolveConfig) -> Result<(HhState, SubstepIterations)> {
    let (q2, p2, iters) = q2p2_block(tau, z.q2, z.p2, z.q1 * z.q1, solver)?;
    let (q1, p1) = q1p1_block(tau, z.q1, z.p1, q2)?;
    Ok((HhState { q1, q2, p1, p2 }, SubstepIterations { q1p1: 0, q2p2: iters }))
}

/// Fully implicit iteration over all four unknowns with the given force.
fn implicit_all<F>(tau: f64, z: &HhState, solver: &NonlinearSolveConfig, force: F) -> Result<(HhState, usize)>
where
    F: Fn(&HhState, &HhState) -> (f64, f64),
{
    let map = |x: &[f64; 4]| {
        let new = HhState::from_array(*x);
        let (f1, f2) = force(z, &new);
        [
            z.q1 + 0.5 * tau * (new.p1 + z.p1),
            z.q2 + 0.5 * tau * (new.p2 + z.p2),
            z.p1 + tau * f1,
            z.p2 + tau * f2,
        ]
    };
    let (x, iters) = solve_nonlinear(map, z.to_array(), solver)?;
    Ok((HhState::from_array(x), iters))
}

fn avf_force(o: &HhState, n: &HhState) -> (f64, f64) {
    let (m1, m2) = (0.5 * (o.q1 + n.q1), 0.5 * (o.q2 + n.q2));
    let f1 = -(0.5 * (n.q1 + o.q1) + (n.q1 * n.q2 + 4.0 * m1 * m2 + o.q1 * o.q2) / 3.0);
    let f2 = -0.5 * (n.q2 + o.q2) + (n.q2 * n.q2 + n.q2 * o.q2 + o.q2 * o.q2) / 3.0
        - (n.q1 * n.q1 + n.q1 * o.q1 + o.q1 * o.q1) / 3.0;
    (f1, f2)
}

fn pavf_p_force(o: &HhState, n: &HhState) -> (f64, f64) {
    let s1 = n.q1 + o.q1;
    let f1 = -0.5 * (s1 + s1 * (n.q2 + o.q2));
    let f2 = -0.5 * (n.q2 + o.q2 + n.q1 * n.q1 + o.q1 * o.q1) + (n.q2 * n.q2 + n.q2 * o.q2 + o.q2 * o.q2) / 3.0;
    (f1, f2)
}

/// Conventional AVF scheme; Simpson weights integrate the cubic terms exactly.
pub fn hh_step_avf(cfg: &StepperConfig, z: &HhState) -> Result<HhState> {
    implicit_all(cfg.tau, z, &cfg.solver, avf_force).map(|r| r.0)
}

/// Semi-implicit PAVF scheme.
pub fn hh_step_pavf(cfg: &StepperConfig, z: &HhState) -> Result<HhState> {
    pavf_forward(cfg.tau, z, &cfg.solver).map(|r| r.0)
}

/// PAVF step with per-block iteration counters.
pub fn hh_step_pavf_detailed(cfg: &StepperConfig, z: &HhState) -> Result<(HhState, SubstepIterations)> {
    pavf_forward(cfg.tau, z, &cfg.solver)
}

/// Adjoint of [`hh_step_pavf`]: `(q2, p2)` first, then `(q1, p1)`.
pub fn hh_step_pavf_adjoint(cfg: &StepperConfig, z: &HhState) -> Result<HhState> {
    pavf_reverse(cfg.tau, z, &cfg.solver).map(|r| r.0)
}

/// PAVF-C: PAVF to the intermediate state at `tau / 2`, then the adjoint.
pub fn hh_step_pavf_c(cfg: &StepperConfig, z: &HhState) -> Result<HhState> {
    let half = 0.5 * cfg.tau;
    let (mid, _) = pavf_forward(half, z, &cfg.solver)?;
    pavf_reverse(half, &mid, &cfg.solver).map(|r| r.0)
}

/// PAVF-P scheme; fully implicit through the `(q1' + q1)(q2' + q2)` term.
pub fn hh_step_pavf_p(cfg: &StepperConfig, z: &HhState) -> Result<HhState> {
    implicit_all(cfg.tau, z, &cfg.solver, pavf_p_force).map(|r| r.0)
}

/// Hand-coded Hénon–Heiles scheme as a [`Stepper`].
#[derive(Debug, Clone, Copy)]
pub struct HhScheme {
    pub method: Method,
    pub cfg: StepperConfig,
}

impl HhScheme {
    pub fn new(method: Method, cfg: StepperConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { method, cfg })
    }
}

impl Stepper for HhScheme {
    type State = HhState;

    fn tau(&self) -> f64 {
        self.cfg.tau
    }

    fn step(&self, z: &HhState) -> Result<Step<HhState>> {
        let (tau, solver) = (self.cfg.tau, &self.cfg.solver);
        let (state, iterations) = match self.method {
            Method::Avf => implicit_all(tau, z, solver, avf_force)?,
            Method::PavfP => implicit_all(tau, z, solver, pavf_p_force)?,
            Method::Pavf => {
                let (s, it) = pavf_forward(tau, z, solver)?;
                (s, it.q1p1 + it.q2p2)
            }
            Method::PavfAdjoint => {
                let (s, it) = pavf_reverse(tau, z, solver)?;
                (s, it.q1p1 + it.q2p2)
            }
            Method::PavfC => {
                let (mid, a) = pavf_forward(0.5 * tau, z, solver)?;
                let (s, b) = pavf_reverse(0.5 * tau, &mid, solver)?;
                (s, a.q2p2 + b.q2p2)
            }
        };
        Ok(Step { state, iterations })
    }

    fn energy(&self, z: &HhState) -> f64 {
        hh_energy(z)
    }
}

/// An upward pass through the section `q1 = 0, p1 > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub q2: f64,
    pub p2: f64,
    pub t_cross: f64,
    /// Full state interpolated to the crossing.
    pub state: HhState,
}

/// Locates a crossing between two consecutive samples by linear interpolation.
pub fn section_crossing(t0: f64, a: &HhState, t1: f64, b: &HhState) -> Option<Crossing> {
    let changes = (a.q1 < 0.0 && b.q1 >= 0.0) || (a.q1 > 0.0 && b.q1 <= 0.0);
    if !changes {
        return None;
    }
    let s = a.q1 / (a.q1 - b.q1);
    let lerp = |x: f64, y: f64| x + s * (y - x);
    let state = HhState::new(0.0, lerp(a.q2, b.q2), lerp(a.p1, b.p1), lerp(a.p2, b.p2));
    if state.p1 <= 0.0 {
        return None;
    }
    Some(Crossing {
        q2: state.q2,
        p2: state.p2,
        t_cross: lerp(t0, t1),
        state: HhState { q1: lerp(a.q1, b.q1), ..state },
    })
}

/// Crossings of `q1 = 0` with `p1 > 0` along a time-ordered sample sequence.
pub fn poincare_section<'a, I>(samples: I) -> Vec<Crossing>
where
    I: IntoIterator<Item = (f64, &'a HhState)>,
{
    let mut out = Vec::new();
    let mut prev: Option<(f64, &HhState)> = None;
    for (t, z) in samples {
        if let Some((t0, z0)) = prev {
            out.extend(section_crossing(t0, z0, t, z));
        }
        prev = Some((t, z));
    }
    out
}

/// Streaming section collector for use as an integration observer.
#[derive(Debug, Clone, Default)]
pub struct PoincareCollector {
    last: Option<(f64, HhState)>,
    pub crossings: Vec<Crossing>,
}

impl Observer<HhState> for PoincareCollector {
    fn observe(&mut self, r: &StepRecord<'_, HhState>) {
        if let Some((t0, z0)) = self.last {
            self.crossings.extend(section_crossing(t0, &z0, r.time, r.state));
        }
        self.last = Some((r.time, *r.state));
    }
}
