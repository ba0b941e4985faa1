//! Seeded property suites over random states of both models.
//!
//! | suite | property |
//! |-------|----------|
//! | a | single-group PAVF equals AVF |
//! | b | singleton group averages equal Itoh–Abe divided differences |
//! | c | adjoint pairing and symmetry of PAVF-C / PAVF-P |
//! | d | group increments telescope to the energy difference |
//! | e | hand-coded schemes equal the generic integrators |
//! | f | gradients agree with central differences of the energy |

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hamiltonian::{
    group_averaged_gradient, itoh_abe_discrete_gradient, path_averaged_gradient, Grouping, HamiltonianSystem, State,
};
use crate::integrators::{step_avf, step_pavf, step_pavf_adjoint, step_pavf_c, step_pavf_p, Method, Stepper, StepperConfig};
use crate::models::henon_heiles::{hh_system, HenonHeiles, HhScheme, HhState};
use crate::models::kgs::{kgs_system, Grid1D, KgsScheme, KgsState, KgsSystem};
use crate::numerics::max_abs_diff;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Random states (or state pairs) per model and check.
    pub samples: usize,
    /// Intervals of the small KGS grid on `[-10, 10]`.
    pub kgs_intervals: usize,
    pub hh_tau: f64,
    pub kgs_tau: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            samples: 100,
            kgs_intervals: 32,
            hh_tau: 0.1,
            kgs_tau: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub suite: char,
    pub name: String,
    pub samples: usize,
    /// Largest observed error, already scaled as the check defines it.
    pub worst: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

struct Models {
    hh: HenonHeiles,
    grid: Grid1D,
    kgs: KgsSystem,
}

impl Models {
    fn new(cfg: &VerifyConfig) -> Result<Self> {
        let grid = Grid1D::new(-10.0, 10.0, cfg.kgs_intervals)?;
        Ok(Self {
            hh: hh_system(),
            kgs: kgs_system(&grid),
            grid,
        })
    }

    fn hh_state(rng: &mut StdRng) -> State {
        State::new((0..4).map(|_| rng.random_range(-0.5..0.5)).collect())
    }

    fn kgs_state(&self, rng: &mut StdRng) -> State {
        let n = self.grid.len();
        let mut z: Vec<f64> = (0..4 * n).map(|_| rng.random_range(-0.5..0.5)).collect();
        for f in 0..4 {
            z[f * n] = 0.0;
            z[f * n + n - 1] = 0.0;
        }
        State::new(z)
    }

    /// A second state whose increments are bounded away from zero, keeping
    /// divided differences well conditioned. Boundary entries stay pinned.
    fn displaced(z: &State, rng: &mut StdRng, pinned: impl Fn(usize) -> bool) -> State {
        let v = z
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                if pinned(i) {
                    x
                } else {
                    let d = rng.random_range(0.05..0.5);
                    if rng.random_bool(0.5) { x + d } else { x - d }
                }
            })
            .collect();
        State::new(v)
    }

    fn kgs_pinned(&self) -> impl Fn(usize) -> bool {
        let n = self.grid.len();
        move |i| i % n == 0 || i % n == n - 1
    }
}

fn rng_for(cfg: &VerifyConfig, suite: char) -> StdRng {
    StdRng::seed_from_u64(cfg.seed.wrapping_mul(31).wrapping_add(suite as u64))
}

fn scaled(err: f64, scale: f64) -> f64 {
    err / scale.abs().max(1.0)
}

/// (a) PAVF with one group is AVF.
pub fn single_group_equals_avf(cfg: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let models = Models::new(cfg)?;
    let mut rng = rng_for(cfg, 'a');
    let mut hh_worst = 0.0f64;
    let hh_cfg = StepperConfig::new(cfg.hh_tau);
    let single = Grouping::single(4);
    for _ in 0..cfg.samples {
        let z = Models::hh_state(&mut rng);
        let a = step_pavf(&models.hh, &single, &hh_cfg, &z)?;
        let b = step_avf(&models.hh, &hh_cfg, &z)?;
        hh_worst = hh_worst.max(max_abs_diff(&a, &b));
    }
    let mut kgs_worst = 0.0f64;
    let kgs_cfg = StepperConfig::new(cfg.kgs_tau);
    let single = Grouping::single(models.kgs.dim());
    for _ in 0..cfg.samples {
        let z = models.kgs_state(&mut rng);
        let a = step_pavf(&models.kgs, &single, &kgs_cfg, &z)?;
        let b = step_avf(&models.kgs, &kgs_cfg, &z)?;
        kgs_worst = kgs_worst.max(max_abs_diff(&a, &b));
    }
    Ok(vec![
        check('a', "single-group PAVF = AVF (Henon-Heiles)", cfg.samples, hh_worst, 1e-12),
        check('a', "single-group PAVF = AVF (KGS)", cfg.samples, kgs_worst, 1e-12),
    ])
}

fn check(suite: char, name: &str, samples: usize, worst: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        suite,
        name: name.to_string(),
        samples,
        worst,
        tolerance,
    }
}

fn itoh_abe_gap<S: HamiltonianSystem>(sys: &S, a: &State, b: &State) -> f64 {
    let singles = Grouping::singletons(sys.dim());
    let ia = itoh_abe_discrete_gradient(sys, a, b);
    (0..sys.dim())
        .map(|k| {
            let g = group_averaged_gradient(sys, &singles, a, b, k)[0];
            scaled((g - ia[k]).abs(), ia[k])
        })
        .fold(0.0, f64::max)
}

/// (b) Singleton group averages are the Itoh–Abe divided differences.
pub fn singleton_groups_equal_itoh_abe(cfg: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let models = Models::new(cfg)?;
    let mut rng = rng_for(cfg, 'b');
    let (mut hh_worst, mut kgs_worst) = (0.0f64, 0.0f64);
    for _ in 0..cfg.samples {
        let a = Models::hh_state(&mut rng);
        let b = Models::displaced(&a, &mut rng, |_| false);
        hh_worst = hh_worst.max(itoh_abe_gap(&models.hh, &a, &b));
        let a = models.kgs_state(&mut rng);
        let b = Models::displaced(&a, &mut rng, models.kgs_pinned());
        kgs_worst = kgs_worst.max(itoh_abe_gap(&models.kgs, &a, &b));
    }
    Ok(vec![
        check('b', "singleton averages = Itoh-Abe (Henon-Heiles)", cfg.samples, hh_worst, 1e-12),
        check('b', "singleton averages = Itoh-Abe (KGS)", cfg.samples, kgs_worst, 1e-12),
    ])
}

/// Worst `|back(forward(z)) - z|` over the samples.
fn round_trip<T, F>(forward: &T, backward: &T, states: &[T::State], diff: F) -> Result<f64>
where
    T: Stepper,
    F: Fn(&T::State, &T::State) -> f64,
{
    let mut worst = 0.0f64;
    for z in states {
        let there = forward.step(z)?.state;
        let back = backward.step(&there)?.state;
        worst = worst.max(diff(&back, z));
    }
    Ok(worst)
}

/// (c) `adjoint(-tau) o PAVF(tau) = id`, and PAVF-C / PAVF-P are symmetric.
pub fn adjoint_and_symmetry(cfg: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let models = Models::new(cfg)?;
    let mut rng = rng_for(cfg, 'c');
    let hh_states: Vec<HhState> = (0..cfg.samples)
        .map(|_| HhState::from_slice(&Models::hh_state(&mut rng)))
        .collect();
    let kgs_states: Vec<KgsState> = (0..cfg.samples)
        .map(|_| KgsState::from_flat(&models.kgs_state(&mut rng)))
        .collect();
    let hh_diff = |a: &HhState, b: &HhState| a.max_abs_diff(b);
    let kgs_diff = |a: &KgsState, b: &KgsState| a.max_abs_diff(b);
    let (ht, kt) = (cfg.hh_tau, cfg.kgs_tau);
    let hh = |m: Method, tau: f64| HhScheme::new(m, StepperConfig::new(tau));
    let kgs = |m: Method, tau: f64| KgsScheme::new(&models.grid, m, StepperConfig::new(tau));

    let pairs = [
        ("adjoint(-tau) o PAVF(tau)", Method::Pavf, Method::PavfAdjoint),
        ("PAVF-C(-tau) o PAVF-C(tau)", Method::PavfC, Method::PavfC),
        ("PAVF-P(-tau) o PAVF-P(tau)", Method::PavfP, Method::PavfP),
    ];
    let mut out = Vec::new();
    for (label, fwd, back) in pairs {
        let worst = round_trip(&hh(fwd, ht)?, &hh(back, -ht)?, &hh_states, hh_diff)?;
        out.push(check('c', &format!("{label} = id (Henon-Heiles)"), cfg.samples, worst, 1e-10));
        let worst = round_trip(&kgs(fwd, kt)?, &kgs(back, -kt)?, &kgs_states, kgs_diff)?;
        out.push(check('c', &format!("{label} = id (KGS)"), cfg.samples, worst, 1e-10));
    }

    // The same pairing through the generic integrators on a random grouping.
    let mut worst = 0.0f64;
    for _ in 0..cfg.samples {
        let z = Models::hh_state(&mut rng);
        let grouping = random_grouping(4, &mut rng);
        let there = step_pavf(&models.hh, &grouping, &StepperConfig::new(ht), &z)?;
        let back = step_pavf_adjoint(&models.hh, &grouping, &StepperConfig::new(-ht), &there)?;
        worst = worst.max(max_abs_diff(&back, &z));
    }
    out.push(check('c', "generic adjoint pairing, random groupings (Henon-Heiles)", cfg.samples, worst, 1e-10));
    Ok(out)
}

/// Random partition of `0..m` into a random number of groups in random order.
pub fn random_grouping(m: usize, rng: &mut StdRng) -> Grouping {
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(rng);
    let k = rng.random_range(1..=m.min(8));
    let mut cuts: Vec<usize> = (1..m).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(k - 1).collect();
    cuts.sort_unstable();
    let mut groups = Vec::with_capacity(k);
    let mut start = 0;
    for c in cuts.into_iter().chain([m]) {
        groups.push(idx[start..c].to_vec());
        start = c;
    }
    Grouping::new(groups, m).expect("partition of 0..m")
}

fn telescoping_gap<S: HamiltonianSystem>(sys: &S, grouping: &Grouping, a: &State, b: &State) -> f64 {
    let g = path_averaged_gradient(sys, grouping, a, b);
    let lhs: f64 = g.iter().zip(b.iter().zip(a.iter())).map(|(g, (y, x))| g * (y - x)).sum();
    let (ha, hb) = (sys.hamiltonian(a), sys.hamiltonian(b));
    scaled((lhs - (hb - ha)).abs(), ha.abs().max(hb.abs()))
}

/// (d) `sum_k <g_k, z_k' - z_k> = H(z') - H(z)` for any grouping.
pub fn telescoping_identity(cfg: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let models = Models::new(cfg)?;
    let mut rng = rng_for(cfg, 'd');
    let (mut hh_worst, mut kgs_worst) = (0.0f64, 0.0f64);
    for _ in 0..cfg.samples {
        let (a, b) = (Models::hh_state(&mut rng), Models::hh_state(&mut rng));
        let grouping = random_grouping(4, &mut rng);
        hh_worst = hh_worst.max(telescoping_gap(&models.hh, &grouping, &a, &b));
        let (a, b) = (models.kgs_state(&mut rng), models.kgs_state(&mut rng));
        let grouping = random_grouping(models.kgs.dim(), &mut rng);
        kgs_worst = kgs_worst.max(telescoping_gap(&models.kgs, &grouping, &a, &b));
    }
    Ok(vec![
        check('d', "telescoping energy identity (Henon-Heiles)", cfg.samples, hh_worst, 1e-12),
        check('d', "telescoping energy identity (KGS)", cfg.samples, kgs_worst, 1e-12),
    ])
}

fn generic_step<S: HamiltonianSystem>(sys: &S, g: &Grouping, m: Method, cfg: &StepperConfig, z: &State) -> Result<State> {
    match m {
        Method::Avf => step_avf(sys, cfg, z),
        Method::Pavf => step_pavf(sys, g, cfg, z),
        Method::PavfAdjoint => step_pavf_adjoint(sys, g, cfg, z),
        Method::PavfC => step_pavf_c(sys, g, cfg, z),
        Method::PavfP => step_pavf_p(sys, g, cfg, z),
    }
}

/// (e) Hand-coded schemes agree with the generic integrators.
pub fn hand_coded_equal_generic(cfg: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let models = Models::new(cfg)?;
    let mut rng = rng_for(cfg, 'e');
    let hh_grouping = HenonHeiles::scheme_grouping();
    let kgs_grouping = models.kgs.scheme_grouping();
    let hh_states: Vec<State> = (0..cfg.samples).map(|_| Models::hh_state(&mut rng)).collect();
    let kgs_states: Vec<State> = (0..cfg.samples).map(|_| models.kgs_state(&mut rng)).collect();
    let mut out = Vec::new();
    for m in Method::ALL {
        let scfg = StepperConfig::new(cfg.hh_tau);
        let hand = HhScheme::new(m, scfg)?;
        let mut worst = 0.0f64;
        for z in &hh_states {
            let a = hand.step(&HhState::from_slice(z))?.state;
            let b = generic_step(&models.hh, &hh_grouping, m, &scfg, z)?;
            worst = worst.max(max_abs_diff(&a.to_array(), &b));
        }
        out.push(check('e', &format!("hand {m} = generic (Henon-Heiles)"), cfg.samples, worst, 1e-10));

        let scfg = StepperConfig::new(cfg.kgs_tau);
        let hand = KgsScheme::new(&models.grid, m, scfg)?;
        let mut worst = 0.0f64;
        for z in &kgs_states {
            let a = hand.step(&KgsState::from_flat(z))?.state;
            let b = generic_step(&models.kgs, &kgs_grouping, m, &scfg, z)?;
            worst = worst.max(max_abs_diff(&a.to_flat(), &b));
        }
        out.push(check('e', &format!("hand {m} = generic (KGS)"), cfg.samples, worst, 1e-10));
    }
    Ok(out)
}

fn fd_gap<S: HamiltonianSystem>(sys: &S, z: &State) -> f64 {
    let eps = 1e-6;
    let g = sys.gradient(z);
    let mut zp = z.clone();
    (0..z.len())
        .map(|i| {
            let x = zp[i];
            zp[i] = x + eps;
            let hp = sys.hamiltonian(&zp);
            zp[i] = x - eps;
            let hm = sys.hamiltonian(&zp);
            zp[i] = x;
            scaled(((hp - hm) / (2.0 * eps) - g[i]).abs(), g[i])
        })
        .fold(0.0, f64::max)
}

/// (f) Analytic gradients agree with central differences of `H`.
pub fn gradient_consistency(cfg: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let models = Models::new(cfg)?;
    let mut rng = rng_for(cfg, 'f');
    let (mut hh_worst, mut kgs_worst) = (0.0f64, 0.0f64);
    for _ in 0..cfg.samples {
        hh_worst = hh_worst.max(fd_gap(&models.hh, &Models::hh_state(&mut rng)));
        kgs_worst = kgs_worst.max(fd_gap(&models.kgs, &models.kgs_state(&mut rng)));
    }
    Ok(vec![
        check('f', "gradient vs central differences (Henon-Heiles)", cfg.samples, hh_worst, 1e-6),
        check('f', "gradient vs central differences (KGS)", cfg.samples, kgs_worst, 1e-6),
    ])
}

/// Runs suites (a) through (f) in order.
pub fn run_all(cfg: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let suites: [fn(&VerifyConfig) -> Result<Vec<CheckResult>>; 6] = [
        single_group_equals_avf,
        singleton_groups_equal_itoh_abe,
        adjoint_and_symmetry,
        telescoping_identity,
        hand_coded_equal_generic,
        gradient_consistency,
    ];
    let mut out = Vec::new();
    for s in suites {
        out.extend(s(cfg)?);
    }
    Ok(out)
}
