//! Klein–Gordon–Schrödinger equation on a bounded interval with homogeneous
//! Dirichlet boundaries, discretized by second-order central differences.
//!
//! With `phi = q + i p` and `v = u_t / 2` the semi-discrete system is
//!
//! ```text
//! U' = 2V
//! V' = (D U - U + P^2 + Q^2) / 2
//! P' =  D Q / 2 + U.Q
//! Q' = -D P / 2 - U.P
//! ```
//!
//! All four schemes share two linear stages. The meson stage eliminates `V`
//! and solves a real tridiagonal system for `U`; the nucleon stage solves one
//! complex tridiagonal system in `psi = P + i Q`, for which the semi-discrete
//! equation is `psi' = -i (D / 2 + U) psi`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{Grouping, HamiltonianSystem, SkewStructure, State};
use crate::integrators::{Method, Step, Stepper, StepperConfig};
use crate::numerics::{max_abs_diff, solve_nonlinear, ComplexTridiagonal, NonlinearSolveConfig, TridiagonalMatrix};

/// Uniform grid `x_j = x_left + j h`, `j = 0..=intervals`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_left: f64,
    pub x_right: f64,
    pub intervals: usize,
    pub h: f64,
}

impl Grid1D {
    pub fn new(x_left: f64, x_right: f64, intervals: usize) -> Result<Self> {
        if intervals < 4 {
            return Err(Error::Config(format!("grid needs at least 4 intervals, got {intervals}")));
        }
        if !(x_right > x_left) || !x_left.is_finite() || !x_right.is_finite() {
            return Err(Error::Config(format!("invalid interval [{x_left}, {x_right}]")));
        }
        Ok(Self {
            x_left,
            x_right,
            intervals,
            h: (x_right - x_left) / intervals as f64,
        })
    }

    /// Grid with spacing `h`; the interval length must be a whole number of steps.
    pub fn with_spacing(x_left: f64, x_right: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Config(format!("spacing must be positive, got {h}")));
        }
        let len = x_right - x_left;
        let j = (len / h).round();
        if (j * h - len).abs() > 1e-9 * len.abs().max(1.0) {
            return Err(Error::Config(format!("spacing {h} does not divide [{x_left}, {x_right}]")));
        }
        Self::new(x_left, x_right, j as usize)
    }

    /// Number of nodes, `J + 1`.
    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_left + j as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|j| self.x(j))
    }
}

/// Meson field `U`, `V = U_t / 2`, and nucleon parts `P`, `Q`, each of
/// length `J + 1` with the two boundary entries pinned to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KgsState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl KgsState {
    pub fn zeros(n: usize) -> Self {
        Self {
            u: vec![0.0; n],
            v: vec![0.0; n],
            p: vec![0.0; n],
            q: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Flat `(U, V, P, Q)` layout used by the generic integrators.
    pub fn to_flat(&self) -> State {
        let mut z = Vec::with_capacity(4 * self.len());
        for f in [&self.u, &self.v, &self.p, &self.q] {
            z.extend_from_slice(f);
        }
        State::new(z)
    }

    pub fn from_flat(z: &[f64]) -> Self {
        assert_eq!(z.len() % 4, 0, "flat KGS state length must be a multiple of 4");
        let n = z.len() / 4;
        Self {
            u: z[..n].to_vec(),
            v: z[n..2 * n].to_vec(),
            p: z[2 * n..3 * n].to_vec(),
            q: z[3 * n..].to_vec(),
        }
    }

    /// Boundary entries are zero and every entry is finite.
    pub fn is_admissible(&self) -> bool {
        let n = self.len();
        [&self.u, &self.v, &self.p, &self.q]
            .iter()
            .all(|f| f.len() == n && f[0] == 0.0 && f[n - 1] == 0.0 && f.iter().all(|x| x.is_finite()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            max_abs_diff(&self.u, &other.u),
            max_abs_diff(&self.v, &other.v),
            max_abs_diff(&self.p, &other.p),
            max_abs_diff(&self.q, &other.q),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    fn psi(&self) -> Vec<Complex64> {
        self.p.iter().zip(&self.q).map(|(&p, &q)| Complex64::new(p, q)).collect()
    }

    fn set_psi(&mut self, psi: &[Complex64]) {
        for (j, z) in psi.iter().enumerate() {
            self.p[j] = z.re;
            self.q[j] = z.im;
        }
    }
}

/// Velocity `c` (`|c| < 1`) and initial centre `x0` of a soliton.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonParams {
    pub c: f64,
    pub x0: f64,
}

impl SolitonParams {
    pub fn new(c: f64, x0: f64) -> Result<Self> {
        if !(c.abs() < 1.0) {
            return Err(Error::Config(format!("soliton velocity must satisfy |c| < 1, got {c}")));
        }
        Ok(Self { c, x0 })
    }

    fn gamma(&self) -> f64 {
        1.0 - self.c * self.c
    }
}

/// Central second difference with homogeneous Dirichlet ends.
///
/// Boundary rows and columns are zero, so the matrix is symmetric and acts
/// as the usual stencil on every state whose boundary entries vanish.
pub fn build_laplacian(grid: &Grid1D) -> TridiagonalMatrix {
    let n = grid.len();
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let interior = |j: usize| j > 0 && j + 1 < n;
    TridiagonalMatrix {
        sub: (0..n - 1)
            .map(|i| if interior(i) && interior(i + 1) { inv_h2 } else { 0.0 })
            .collect(),
        diag: (0..n).map(|j| if interior(j) { -2.0 * inv_h2 } else { 0.0 }).collect(),
        sup: (0..n - 1)
            .map(|i| if interior(i) && interior(i + 1) { inv_h2 } else { 0.0 })
            .collect(),
    }
}

/// Field values of the travelling soliton at `(x, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactFields {
    pub u: f64,
    /// `u_t / 2`.
    pub v: f64,
    pub phi: Complex64,
}

impl ExactFields {
    /// Nucleon components in the solver's convention `phi = q + i p`.
    pub fn p(&self) -> f64 {
        self.phi.im
    }

    pub fn q(&self) -> f64 {
        self.phi.re
    }
}

/// Exact one-soliton solution `(u, phi)`.
pub fn kgs_exact(x: f64, t: f64, s: &SolitonParams) -> (f64, Complex64) {
    let f = kgs_exact_fields(x, t, s);
    (f.u, f.phi)
}

pub fn kgs_exact_fields(x: f64, t: f64, s: &SolitonParams) -> ExactFields {
    let g = s.gamma();
    let sg = g.sqrt();
    let theta = (x - s.c * t - s.x0) / (2.0 * sg);
    let sech = 1.0 / theta.cosh();
    let sech2 = sech * sech;
    let u = 3.0 / (4.0 * g) * sech2;
    let u_t = 3.0 * s.c / (4.0 * g * sg) * sech2 * theta.tanh();
    let amp = 3.0 * std::f64::consts::SQRT_2 / (4.0 * sg) * sech2;
    let omega = (1.0 - s.c * s.c + s.c.powi(4)) / (2.0 * g);
    let phi = Complex64::from_polar(amp, s.c * x + omega * t);
    ExactFields { u, v: 0.5 * u_t, phi }
}

/// Initial data plus how much of the untruncated profile sat on the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct KgsInitial {
    pub state: KgsState,
    /// Largest absolute field value zeroed at the two boundary nodes.
    pub boundary_leak: f64,
}

impl KgsInitial {
    pub const LEAK_WARN: f64 = 1e-12;

    pub fn warnings(&self) -> Vec<String> {
        if self.boundary_leak > Self::LEAK_WARN {
            vec![format!(
                "soliton profile is {:.3e} at the boundary; Dirichlet truncation is not negligible",
                self.boundary_leak
            )]
        } else {
            Vec::new()
        }
    }
}

/// Superposition of solitons at `t = 0`.
pub fn kgs_initial(grid: &Grid1D, solitons: &[SolitonParams]) -> KgsInitial {
    let n = grid.len();
    let mut state = KgsState::zeros(n);
    for (j, x) in grid.nodes().enumerate() {
        for s in solitons {
            let f = kgs_exact_fields(x, 0.0, s);
            state.u[j] += f.u;
            state.v[j] += f.v;
            state.p[j] += f.p();
            state.q[j] += f.q();
        }
    }
    let mut leak = 0.0f64;
    for field in [&mut state.u, &mut state.v, &mut state.p, &mut state.q] {
        for j in [0, n - 1] {
            leak = leak.max(field[j].abs());
            field[j] = 0.0;
        }
    }
    KgsInitial { state, boundary_leak: leak }
}

/// Discrete energy, exactly as the unweighted quadratic form
/// `(-P'DP - Q'DQ - U'DU + U'U + 4V'V - 2 sum u (p^2 + q^2)) / 4`.
pub fn kgs_hamiltonian(grid: &Grid1D, s: &KgsState) -> f64 {
    let d = build_laplacian(grid);
    kgs_hamiltonian_with(&d, s)
}

fn kgs_hamiltonian_with(d: &TridiagonalMatrix, s: &KgsState) -> f64 {
    let quad = |x: &[f64]| -> f64 { x.iter().zip(d.mul_vec(x)).map(|(a, b)| a * b).sum() };
    let dot = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(a, b)| a * b).sum() };
    let coupling: f64 = (0..s.len()).map(|j| s.u[j] * (s.p[j] * s.p[j] + s.q[j] * s.q[j])).sum();
    0.25 * (-quad(&s.p) - quad(&s.q) - quad(&s.u) + dot(&s.u, &s.u) + 4.0 * dot(&s.v, &s.v) - 2.0 * coupling)
}

/// Discrete mass `h (|P|^2 + |Q|^2)`.
pub fn kgs_mass(grid: &Grid1D, s: &KgsState) -> f64 {
    grid.h * s.p.iter().chain(&s.q).map(|x| x * x).sum::<f64>()
}

/// Discrete L2 and max-norm errors against the exact soliton, each summed
/// over the four fields.
pub fn solution_errors(grid: &Grid1D, s: &KgsState, t: f64, soliton: &SolitonParams) -> (f64, f64) {
    let mut sq = [0.0f64; 4];
    let mut mx = [0.0f64; 4];
    for (j, x) in grid.nodes().enumerate() {
        let f = kgs_exact_fields(x, t, soliton);
        let e = [f.u - s.u[j], f.v - s.v[j], f.p() - s.p[j], f.q() - s.q[j]];
        for k in 0..4 {
            sq[k] += e[k] * e[k];
            mx[k] = mx[k].max(e[k].abs());
        }
    }
    let l2 = sq.iter().map(|v| (grid.h * v).sqrt()).sum();
    (l2, mx.iter().sum())
}

/// The semi-discrete system `Z' = S grad H(Z)` on `Z = (U, V, P, Q)`.
#[derive(Debug, Clone)]
pub struct KgsSystem {
    grid: Grid1D,
    lap: TridiagonalMatrix,
    skew: SkewStructure,
    closed_form: bool,
}

pub fn kgs_system(grid: &Grid1D) -> KgsSystem {
    KgsSystem {
        grid: *grid,
        lap: build_laplacian(grid),
        skew: SkewStructure::KgsBlock { n: grid.len() },
        closed_form: true,
    }
}

impl KgsSystem {
    pub fn quadrature_only(mut self) -> Self {
        self.closed_form = false;
        self
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// `({U}, {V}, {P}, {Q})`, the path order the hand-coded PAVF scheme follows.
    pub fn scheme_grouping(&self) -> Grouping {
        let n = self.grid.len();
        Grouping::blocks(&[n, n, n, n]).expect("four equal blocks are valid")
    }

    /// Which field a group is, if it is exactly one field block.
    fn block_of(&self, group: &[usize]) -> Option<usize> {
        let n = self.grid.len();
        let b = group[0] / n;
        (group.len() == n && group[0] == b * n && group.windows(2).all(|w| w[1] == w[0] + 1)).then_some(b)
    }
}

impl HamiltonianSystem for KgsSystem {
    fn dim(&self) -> usize {
        4 * self.grid.len()
    }

    fn skew(&self) -> &SkewStructure {
        &self.skew
    }

    fn hamiltonian(&self, z: &[f64]) -> f64 {
        kgs_hamiltonian_with(&self.lap, &KgsState::from_flat(z))
    }

    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let s = KgsState::from_flat(z);
        let n = s.len();
        let (du, dp, dq) = (self.lap.mul_vec(&s.u), self.lap.mul_vec(&s.p), self.lap.mul_vec(&s.q));
        let mut g = Vec::with_capacity(4 * n);
        g.extend((0..n).map(|j| 0.5 * (-du[j] + s.u[j] - (s.p[j] * s.p[j] + s.q[j] * s.q[j]))));
        g.extend(s.v.iter().map(|v| 2.0 * v));
        g.extend((0..n).map(|j| -0.5 * dp[j] - s.u[j] * s.p[j]));
        g.extend((0..n).map(|j| -0.5 * dq[j] - s.u[j] * s.q[j]));
        g
    }

    fn polynomial_degree(&self) -> Option<u32> {
        Some(3)
    }

    fn closed_form_group_average(&self, grouping: &Grouping, z_old: &[f64], z_new: &[f64], k: usize) -> Option<Vec<f64>> {
        if !self.closed_form || grouping.len() != 4 {
            return None;
        }
        let n = self.grid.len();
        let mut block_group = [0usize; 4];
        for g in 0..4 {
            block_group[self.block_of(grouping.group(g))?] = g;
        }
        let this = self.block_of(grouping.group(k))?;
        // Field `b` as seen from group k: new if earlier on the path, else old.
        let field = |b: usize| {
            let src = if block_group[b] < k { z_new } else { z_old };
            &src[b * n..(b + 1) * n]
        };
        let mid: Vec<f64> = (this * n..(this + 1) * n).map(|i| 0.5 * (z_old[i] + z_new[i])).collect();
        let out = match this {
            0 => {
                let (p, q) = (field(2), field(3));
                let dm = self.lap.mul_vec(&mid);
                (0..n).map(|j| 0.5 * (-dm[j] + mid[j] - (p[j] * p[j] + q[j] * q[j]))).collect()
            }
            1 => mid.iter().map(|v| 2.0 * v).collect(),
            _ => {
                let u = field(0);
                let dm = self.lap.mul_vec(&mid);
                (0..n).map(|j| -0.5 * dm[j] - u[j] * mid[j]).collect()
            }
        };
        Some(out)
    }
}

/// The two linear stages shared by every scheme at a fixed step size.
struct Stages<'a> {
    lap: &'a TridiagonalMatrix,
    tau: f64,
}

impl Stages<'_> {
    /// Solves the meson pair for `(U', V')` given the nonlinear source `nv`
    /// in `V' - V = tau ((D - I)(U + U') / 4 + nv)`.
    fn meson(&self, s: &KgsState, nv: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = s.len();
        let d = self.lap;
        let c = 0.25 * self.tau * self.tau;
        let mut a = TridiagonalMatrix {
            sub: d.sub.iter().map(|x| -c * x).collect(),
            diag: d.diag.iter().map(|x| 1.0 - c * (x - 1.0)).collect(),
            sup: d.sup.iter().map(|x| -c * x).collect(),
        };
        a.pin_row(0);
        a.pin_row(n - 1);
        let du = d.mul_vec(&s.u);
        let mut rhs: Vec<f64> = (0..n)
            .map(|j| s.u[j] + 2.0 * self.tau * s.v[j] + c * (du[j] - s.u[j]) + self.tau * self.tau * nv[j])
            .collect();
        rhs[0] = 0.0;
        rhs[n - 1] = 0.0;
        let u_new = a.solve(&rhs)?;
        let sum: Vec<f64> = s.u.iter().zip(&u_new).map(|(a, b)| a + b).collect();
        let dsum = d.mul_vec(&sum);
        let mut v_new: Vec<f64> = (0..n)
            .map(|j| s.v[j] + self.tau * (0.25 * (dsum[j] - sum[j]) + nv[j]))
            .collect();
        v_new[0] = 0.0;
        v_new[n - 1] = 0.0;
        Ok((u_new, v_new))
    }

    /// Solves `psi' - psi = -i tau (D (psi + psi') / 4 + alpha psi' + beta psi)`.
    /// Mass is conserved exactly when `alpha == beta`.
    fn nucleon(&self, psi: &[Complex64], alpha: &[f64], beta: &[f64]) -> Result<Vec<Complex64>> {
        let n = psi.len();
        let d = self.lap;
        let i_tau = Complex64::new(0.0, self.tau);
        let one = Complex64::new(1.0, 0.0);
        let mut m = ComplexTridiagonal {
            sub: d.sub.iter().map(|x| i_tau * (0.25 * x)).collect(),
            diag: (0..n).map(|j| one + i_tau * (0.25 * d.diag[j] + alpha[j])).collect(),
            sup: d.sup.iter().map(|x| i_tau * (0.25 * x)).collect(),
        };
        m.pin_row(0);
        m.pin_row(n - 1);
        let (pr, pi): (Vec<f64>, Vec<f64>) = psi.iter().map(|z| (z.re, z.im)).unzip();
        let (dr, di) = (d.mul_vec(&pr), d.mul_vec(&pi));
        let mut rhs: Vec<Complex64> = (0..n)
            .map(|j| psi[j] - i_tau * (Complex64::new(0.25 * dr[j], 0.25 * di[j]) + beta[j] * psi[j]))
            .collect();
        rhs[0] = Complex64::new(0.0, 0.0);
        rhs[n - 1] = Complex64::new(0.0, 0.0);
        m.solve(&rhs)
    }

    /// PAVF: meson stage with the old nucleon density, then the nucleon stage with `U'`.
    fn forward(&self, s: &KgsState) -> Result<KgsState> {
        let nv: Vec<f64> = (0..s.len()).map(|j| 0.5 * (s.p[j] * s.p[j] + s.q[j] * s.q[j])).collect();
        let (u, v) = self.meson(s, &nv)?;
        let half: Vec<f64> = u.iter().map(|x| 0.5 * x).collect();
        let psi = self.nucleon(&s.psi(), &half, &half)?;
        let mut out = KgsState { u, v, p: s.p.clone(), q: s.q.clone() };
        out.set_psi(&psi);
        Ok(out)
    }

    /// Adjoint: nucleon stage with the old `U`, then the meson stage with the new density.
    fn reverse(&self, s: &KgsState) -> Result<KgsState> {
        let half: Vec<f64> = s.u.iter().map(|x| 0.5 * x).collect();
        let psi = self.nucleon(&s.psi(), &half, &half)?;
        let nv: Vec<f64> = psi.iter().map(|z| 0.5 * z.norm_sqr()).collect();
        let (u, v) = self.meson(s, &nv)?;
        let mut out = KgsState { u, v, p: s.p.clone(), q: s.q.clone() };
        out.set_psi(&psi);
        Ok(out)
    }

    /// Fully implicit schemes: Picard iteration on the new nucleon field,
    /// with both linear stages solved exactly inside every sweep.
    fn coupled(&self, s: &KgsState, solver: &NonlinearSolveConfig, method: Method) -> Result<(KgsState, usize)> {
        let n = s.len();
        let psi_old = s.psi();
        let mut meson = (s.u.clone(), s.v.clone());
        let guess: Vec<f64> = s.p.iter().chain(&s.q).copied().collect();
        let mut failure = None;
        let map = |x: &Vec<f64>| -> Vec<f64> {
            let (pg, qg) = x.split_at(n);
            let nv: Vec<f64> = (0..n)
                .map(|j| {
                    let (p0, q0, p1, q1) = (s.p[j], s.q[j], pg[j], qg[j]);
                    match method {
                        Method::Avf => {
                            let (pm, qm) = (0.5 * (p0 + p1), 0.5 * (q0 + q1));
                            (p1 * p1 + 4.0 * pm * pm + p0 * p0 + q1 * q1 + 4.0 * qm * qm + q0 * q0) / 12.0
                        }
                        _ => 0.25 * (p0 * p0 + q0 * q0 + p1 * p1 + q1 * q1),
                    }
                })
                .collect();
            let (u_new, v_new) = match self.meson(s, &nv) {
                Ok(r) => r,
                Err(e) => {
                    failure = Some(e);
                    return vec![f64::NAN; 2 * n];
                }
            };
            let (alpha, beta): (Vec<f64>, Vec<f64>) = (0..n)
                .map(|j| {
                    let um = 0.5 * (s.u[j] + u_new[j]);
                    match method {
                        Method::Avf => (u_new[j] / 6.0 + um / 3.0, s.u[j] / 6.0 + um / 3.0),
                        _ => (0.5 * um, 0.5 * um),
                    }
                })
                .unzip();
            meson = (u_new, v_new);
            match self.nucleon(&psi_old, &alpha, &beta) {
                Ok(psi) => psi.iter().map(|z| z.re).chain(psi.iter().map(|z| z.im)).collect(),
                Err(e) => {
                    failure = Some(e);
                    vec![f64::NAN; 2 * n]
                }
            }
        };
        let result = solve_nonlinear(map, guess, solver);
        if let Some(e) = failure {
            return Err(e);
        }
        let (x, iters) = result?;
        let (u, v) = meson;
        Ok((
            KgsState {
                u,
                v,
                p: x[..n].to_vec(),
                q: x[n..].to_vec(),
            },
            iters,
        ))
    }
}

fn kgs_advance(lap: &TridiagonalMatrix, method: Method, cfg: &StepperConfig, s: &KgsState) -> Result<Step<KgsState>> {
    assert_eq!(s.len(), lap.dim(), "state length does not match grid");
    let full = Stages { lap, tau: cfg.tau };
    let (state, iterations) = match method {
        Method::Pavf => (full.forward(s)?, 0),
        Method::PavfAdjoint => (full.reverse(s)?, 0),
        Method::PavfC => {
            let half = Stages { lap, tau: 0.5 * cfg.tau };
            (half.reverse(&half.forward(s)?)?, 0)
        }
        Method::Avf | Method::PavfP => full.coupled(s, &cfg.solver, method)?,
    };
    Ok(Step { state, iterations })
}

/// Fully implicit AVF scheme (Simpson-weighted nonlinear terms).
pub fn kgs_step_avf(grid: &Grid1D, cfg: &StepperConfig, s: &KgsState) -> Result<KgsState> {
    kgs_advance(&build_laplacian(grid), Method::Avf, cfg, s).map(|r| r.state)
}

/// Linearly implicit PAVF scheme: one real and one complex tridiagonal solve.
pub fn kgs_step_pavf(grid: &Grid1D, cfg: &StepperConfig, s: &KgsState) -> Result<KgsState> {
    kgs_advance(&build_laplacian(grid), Method::Pavf, cfg, s).map(|r| r.state)
}

/// Adjoint PAVF scheme: nucleon stage first.
pub fn kgs_step_pavf_adjoint(grid: &Grid1D, cfg: &StepperConfig, s: &KgsState) -> Result<KgsState> {
    kgs_advance(&build_laplacian(grid), Method::PavfAdjoint, cfg, s).map(|r| r.state)
}

/// PAVF-C: PAVF then its adjoint, each over half a step.
pub fn kgs_step_pavf_c(grid: &Grid1D, cfg: &StepperConfig, s: &KgsState) -> Result<KgsState> {
    kgs_advance(&build_laplacian(grid), Method::PavfC, cfg, s).map(|r| r.state)
}

/// PAVF-P: averaged nonlinear terms, fully implicit.
pub fn kgs_step_pavf_p(grid: &Grid1D, cfg: &StepperConfig, s: &KgsState) -> Result<KgsState> {
    kgs_advance(&build_laplacian(grid), Method::PavfP, cfg, s).map(|r| r.state)
}

/// Hand-coded KGS scheme as a [`Stepper`].
#[derive(Debug, Clone)]
pub struct KgsScheme {
    grid: Grid1D,
    lap: TridiagonalMatrix,
    pub method: Method,
    pub cfg: StepperConfig,
}

impl KgsScheme {
    pub fn new(grid: &Grid1D, method: Method, cfg: StepperConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            grid: *grid,
            lap: build_laplacian(grid),
            method,
            cfg,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn mass(&self, s: &KgsState) -> f64 {
        kgs_mass(&self.grid, s)
    }
}

impl Stepper for KgsScheme {
    type State = KgsState;

    fn tau(&self) -> f64 {
        self.cfg.tau
    }

    fn step(&self, z: &KgsState) -> Result<Step<KgsState>> {
        kgs_advance(&self.lap, self.method, &self.cfg, z)
    }

    fn energy(&self, z: &KgsState) -> f64 {
        kgs_hamiltonian_with(&self.lap, z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::State;
    use crate::integrators::{step_avf, step_pavf, step_pavf_adjoint, step_pavf_c, step_pavf_p};
    use nalgebra::{DMatrix, DVector};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn soliton_setup() -> (Grid1D, KgsState) {
        let grid = Grid1D::new(-50.0, 50.0, 1000).unwrap();
        let s = SolitonParams::new(-0.8, 20.0).unwrap();
        (grid, kgs_initial(&grid, &[s]).state)
    }

    fn random_state(grid: &Grid1D, rng: &mut StdRng, amp: f64) -> KgsState {
        let n = grid.len();
        let mut field = || {
            let mut f: Vec<f64> = (0..n).map(|_| rng.random_range(-amp..amp)).collect();
            f[0] = 0.0;
            f[n - 1] = 0.0;
            f
        };
        KgsState { u: field(), v: field(), p: field(), q: field() }
    }

    #[test]
    fn grid_construction() {
        let g = Grid1D::new(-10.0, 10.0, 1000).unwrap();
        assert_eq!(g.len(), 1001);
        assert!((g.h - 0.02).abs() < 1e-15);
        assert_eq!(g.x(0), -10.0);
        assert!((g.x(1000) - 10.0).abs() < 1e-12);
        assert!(Grid1D::new(0.0, 1.0, 3).is_err());
        assert!(Grid1D::new(1.0, 0.0, 10).is_err());
        assert_eq!(Grid1D::with_spacing(-10.0, 10.0, 2.0 / 15.0).unwrap().intervals, 150);
        assert!(Grid1D::with_spacing(0.0, 1.0, 0.3).is_err());
    }

    #[test]
    fn laplacian_examples() {
        let g = Grid1D::new(-1.0, 1.0, 20).unwrap();
        let d = build_laplacian(&g);
        assert!(d.mul_vec(&vec![0.0; g.len()]).iter().all(|&v| v == 0.0));
        let sq: Vec<f64> = g.nodes().map(|x| x * x).collect();
        let lin: Vec<f64> = g.nodes().map(|x| 3.0 * x - 1.0).collect();
        let (dsq, dlin) = (d.mul_vec(&sq), d.mul_vec(&lin));
        for j in 2..g.len() - 2 {
            assert!((dsq[j] - 2.0).abs() < 1e-10, "row {j}: {}", dsq[j]);
            assert!(dlin[j].abs() < 1e-10);
        }
        // symmetric with zero boundary rows and columns
        assert_eq!(d.sub, d.sup);
        assert_eq!((d.diag[0], d.sup[0], d.sub[0]), (0.0, 0.0, 0.0));
    }

    #[test]
    fn exact_soliton_values() {
        let s = SolitonParams::new(0.0, 1.5).unwrap();
        let (u, phi) = kgs_exact(1.5, 0.0, &s);
        assert!((u - 0.75).abs() < 1e-15);
        assert!((phi.norm() - 3.0 * 2f64.sqrt() / 4.0).abs() < 1e-15);

        let s = SolitonParams::new(-0.8, 0.0).unwrap();
        let width = 2.0 * 0.36f64.sqrt();
        assert!(kgs_exact(40.0 * width, 0.0, &s).0 < 1e-15);
        for x in [-3.0, -0.7, 0.0, 0.4, 2.5] {
            let (u, phi) = kgs_exact(x, 0.3, &s);
            let r = phi.norm_sqr() / (2.0 * 0.36 * u * u);
            assert!((r - 1.0).abs() < 1e-12);
        }
        assert!(SolitonParams::new(1.0, 0.0).is_err());
    }

    #[test]
    fn exact_v_is_half_time_derivative() {
        let s = SolitonParams::new(0.6, -1.0).unwrap();
        let eps = 1e-6;
        for x in [-2.0, -1.0, 0.3, 1.7] {
            let du = (kgs_exact(x, eps, &s).0 - kgs_exact(x, -eps, &s).0) / (2.0 * eps);
            assert!((kgs_exact_fields(x, 0.0, &s).v - 0.5 * du).abs() < 1e-8);
        }
    }

    #[test]
    fn initial_states() {
        let g = Grid1D::new(-10.0, 10.0, 100).unwrap();
        let init = kgs_initial(&g, &[]);
        assert_eq!(init.state, KgsState::zeros(g.len()));
        assert!(init.warnings().is_empty());

        let s = SolitonParams::new(-0.8, 0.0).unwrap();
        let one = kgs_initial(&g, &[s]).state;
        let max = one.u.iter().cloned().fold(f64::MIN, f64::max);
        assert!((max - 25.0 / 12.0).abs() < 1e-12);
        assert_eq!(one.u[50], max);
        assert!(one.is_admissible());

        let g = Grid1D::new(-50.0, 50.0, 1000).unwrap();
        let two = kgs_initial(
            &g,
            &[SolitonParams::new(-0.8, 20.0).unwrap(), SolitonParams::new(0.8, -20.0).unwrap()],
        );
        let n = g.len();
        let asym = (0..n).map(|j| (two.state.u[j] - two.state.u[n - 1 - j]).abs()).fold(0.0, f64::max);
        assert!(asym <= 1e-12);

        let near = kgs_initial(&Grid1D::new(-5.0, 5.0, 100).unwrap(), &[SolitonParams::new(0.0, 4.0).unwrap()]);
        assert!(near.boundary_leak > 1e-12);
        assert_eq!(near.warnings().len(), 1);
        assert!(near.state.is_admissible());
    }

    #[test]
    fn hamiltonian_examples() {
        let g = Grid1D::new(0.0, 1.0, 10).unwrap();
        let n = g.len();
        assert_eq!(kgs_hamiltonian(&g, &KgsState::zeros(n)), 0.0);

        let mut s = KgsState::zeros(n);
        s.v = (0..n).map(|j| if j == 0 || j == n - 1 { 0.0 } else { j as f64 * 0.3 - 1.0 }).collect();
        let vv: f64 = s.v.iter().map(|x| x * x).sum();
        assert!((kgs_hamiltonian(&g, &s) - vv).abs() < 1e-13);

        let mut s = KgsState::zeros(n);
        s.u[4] = 1.0;
        let expect = 0.25 * (2.0 / (g.h * g.h) + 1.0);
        assert!((kgs_hamiltonian(&g, &s) - expect).abs() < 1e-12);
    }

    #[test]
    fn mass_examples() {
        let g = Grid1D::new(0.0, 1.0, 10).unwrap();
        let mut s = KgsState::zeros(g.len());
        assert_eq!(kgs_mass(&g, &s), 0.0);
        s.p[3] = 2.0;
        assert!((kgs_mass(&g, &s) - 0.4).abs() < 1e-15);

        let (g, s) = soliton_setup();
        // |phi|^2 integrates to 4/3 A^2 w with A^2 = 9/(8 gamma), w = 2 sqrt(gamma).
        let fine: f64 = {
            let sol = SolitonParams::new(-0.8, 20.0).unwrap();
            let m = 200_000;
            let dx = 100.0 / m as f64;
            (0..m).map(|i| kgs_exact(-50.0 + (i as f64 + 0.5) * dx, 0.0, &sol).1.norm_sqr() * dx).sum()
        };
        assert!((fine - 5.0).abs() < 1e-9);
        assert!((kgs_mass(&g, &s) - fine).abs() / fine < 0.01);
    }

    #[test]
    fn zero_state_is_fixed() {
        let g = Grid1D::new(-10.0, 10.0, 50).unwrap();
        let z = KgsState::zeros(g.len());
        let cfg = StepperConfig::new(0.05);
        for f in [kgs_step_avf, kgs_step_pavf, kgs_step_pavf_adjoint, kgs_step_pavf_c, kgs_step_pavf_p] {
            assert_eq!(f(&g, &cfg, &z).unwrap(), z);
        }
    }

    #[test]
    fn one_step_invariants() {
        let (g, s) = soliton_setup();
        let cfg = StepperConfig::new(0.05);
        let (h0, m0) = (kgs_hamiltonian(&g, &s), kgs_mass(&g, &s));
        let drift = |z: &KgsState| {
            (
                ((kgs_hamiltonian(&g, z) - h0) / h0).abs(),
                ((kgs_mass(&g, z) - m0) / m0).abs(),
            )
        };
        for f in [kgs_step_pavf, kgs_step_pavf_adjoint, kgs_step_pavf_c] {
            let (rh, rm) = drift(&f(&g, &cfg, &s).unwrap());
            assert!(rh <= 1e-12 && rm <= 1e-12, "rh {rh:e} rm {rm:e}");
        }
        let (rh, rm) = drift(&kgs_step_pavf_p(&g, &cfg, &s).unwrap());
        assert!(rh <= 1e-11 && rm <= 1e-11, "rh {rh:e} rm {rm:e}");
        let (rh, rm) = drift(&kgs_step_avf(&g, &cfg, &s).unwrap());
        assert!(rh <= 1e-11, "rh {rh:e}");
        assert!(rm > 1e-11, "rm {rm:e}");
    }

    #[test]
    fn meson_stage_matrix_row() {
        let g = Grid1D::new(0.0, 1.0, 10).unwrap();
        let d = build_laplacian(&g);
        let tau = 0.05;
        let c = tau * tau / 4.0;
        // Probe column j of the stage matrix through the solve: A e_j = rhs.
        let stage = Stages { lap: &d, tau };
        let mut s = KgsState::zeros(g.len());
        s.u[5] = 1.0;
        // rhs = U + c (D - I) U when V = 0 and nv = 0, so A U' = rhs;
        // check the interior row of A by applying it to the solution.
        let (u_new, _) = stage.meson(&s, &vec![0.0; g.len()]).unwrap();
        let diag = 1.0 + c * (2.0 / (g.h * g.h) + 1.0);
        let off = -c / (g.h * g.h);
        let row5 = off * u_new[4] + diag * u_new[5] + off * u_new[6];
        let rhs5 = 1.0 + c * (-2.0 / (g.h * g.h) - 1.0);
        assert!((row5 - rhs5).abs() < 1e-12);
    }

    #[test]
    fn adjoint_pairing_and_symmetry() {
        let (g, s) = soliton_setup();
        let fwd = StepperConfig::new(0.05);
        let back = StepperConfig::new(-0.05);
        let there = kgs_step_pavf(&g, &fwd, &s).unwrap();
        assert!(kgs_step_pavf_adjoint(&g, &back, &there).unwrap().max_abs_diff(&s) <= 1e-11);

        let there = kgs_step_pavf_c(&g, &fwd, &s).unwrap();
        assert!(kgs_step_pavf_c(&g, &back, &there).unwrap().max_abs_diff(&s) <= 1e-10);

        let there = kgs_step_pavf_p(&g, &fwd, &s).unwrap();
        assert!(kgs_step_pavf_p(&g, &back, &there).unwrap().max_abs_diff(&s) <= 1e-10);
    }

    #[test]
    fn pavf_c_is_composition_of_half_steps() {
        let (g, s) = soliton_setup();
        let half = StepperConfig::new(0.025);
        let composed = kgs_step_pavf_adjoint(&g, &half, &kgs_step_pavf(&g, &half, &s).unwrap()).unwrap();
        let direct = kgs_step_pavf_c(&g, &StepperConfig::new(0.05), &s).unwrap();
        assert!(direct.max_abs_diff(&composed) <= 1e-12);
    }

    #[test]
    fn pavf_p_iterates_pavf_does_not() {
        let (g, s) = soliton_setup();
        let cfg = StepperConfig::new(0.05);
        let pavf = KgsScheme::new(&g, Method::Pavf, cfg).unwrap();
        let pavf_p = KgsScheme::new(&g, Method::PavfP, cfg).unwrap();
        assert_eq!(pavf.step(&s).unwrap().iterations, 0);
        assert!(pavf_p.step(&s).unwrap().iterations > 0);
    }

    #[test]
    fn mass_identity_per_step() {
        let (g, mut s) = soliton_setup();
        let cfg = StepperConfig::new(0.05);
        let m0 = kgs_mass(&g, &s);
        for _ in 0..20 {
            let next = kgs_step_pavf(&g, &cfg, &s).unwrap();
            assert!((kgs_mass(&g, &next) - kgs_mass(&g, &s)).abs() <= 1e-13 * m0);
            s = next;
        }
    }

    #[test]
    fn closed_form_block_averages_match_quadrature() {
        let g = Grid1D::new(-10.0, 10.0, 16).unwrap();
        let sys = kgs_system(&g);
        let quad = kgs_system(&g).quadrature_only();
        let mut rng = StdRng::seed_from_u64(7);
        let a = random_state(&g, &mut rng, 1.0).to_flat();
        let b = random_state(&g, &mut rng, 1.0).to_flat();
        for grouping in [sys.scheme_grouping(), sys.scheme_grouping().reversed()] {
            for k in 0..4 {
                let x = crate::hamiltonian::group_averaged_gradient(&sys, &grouping, &a, &b, k);
                let y = crate::hamiltonian::group_averaged_gradient(&quad, &grouping, &a, &b, k);
                assert!(max_abs_diff(&x, &y) < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = Grid1D::new(-10.0, 10.0, 16).unwrap();
        let sys = kgs_system(&g);
        let mut rng = StdRng::seed_from_u64(11);
        let z = random_state(&g, &mut rng, 1.0).to_flat();
        let grad = sys.gradient(&z);
        let eps = 1e-6;
        for i in 0..z.len() {
            let (mut zp, mut zm) = (z.clone(), z.clone());
            zp[i] += eps;
            zm[i] -= eps;
            let fd = (sys.hamiltonian(&zp) - sys.hamiltonian(&zm)) / (2.0 * eps);
            assert!((fd - grad[i]).abs() < 1e-6, "component {i}");
        }
    }

    #[test]
    fn hand_schemes_match_generic() {
        let g = Grid1D::new(-10.0, 10.0, 32).unwrap();
        let sys = kgs_system(&g);
        let grouping = sys.scheme_grouping();
        let cfg = StepperConfig::new(0.05);
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..5 {
            let s = random_state(&g, &mut rng, 0.5);
            let z = s.to_flat();
            let check = |hand: KgsState, generic: State| {
                let d = max_abs_diff(&hand.to_flat(), &generic);
                assert!(d <= 1e-10, "difference {d:e}");
            };
            check(kgs_step_pavf(&g, &cfg, &s).unwrap(), step_pavf(&sys, &grouping, &cfg, &z).unwrap());
            check(
                kgs_step_pavf_adjoint(&g, &cfg, &s).unwrap(),
                step_pavf_adjoint(&sys, &grouping, &cfg, &z).unwrap(),
            );
            check(kgs_step_pavf_c(&g, &cfg, &s).unwrap(), step_pavf_c(&sys, &grouping, &cfg, &z).unwrap());
            check(kgs_step_pavf_p(&g, &cfg, &s).unwrap(), step_pavf_p(&sys, &grouping, &cfg, &z).unwrap());
            check(kgs_step_avf(&g, &cfg, &s).unwrap(), step_avf(&sys, &cfg, &z).unwrap());
        }
    }

    #[test]
    fn complex_nucleon_solve_matches_real_block_system() {
        let g = Grid1D::new(-10.0, 10.0, 40).unwrap();
        let d = build_laplacian(&g);
        let n = g.len();
        let tau = 0.05;
        let mut rng = StdRng::seed_from_u64(5);
        let s = random_state(&g, &mut rng, 1.0);
        let alpha: Vec<f64> = s.u.iter().map(|x| 0.5 * x).collect();
        let psi = Stages { lap: &d, tau }.nucleon(&s.psi(), &alpha, &alpha).unwrap();

        // [P'; Q'] - [P; Q] = tau [ (D/4 + a) Q' + (D/4 + a) Q ; -(D/4 + a) P' - (D/4 + a) P ]
        let dense = DMatrix::from_fn(n, n, |i, j| {
            let interior = i > 0 && i + 1 < n;
            let dij = if i == j {
                d.diag[i]
            } else if j + 1 == i {
                d.sub[j]
            } else if i + 1 == j {
                d.sup[i]
            } else {
                0.0
            };
            if interior {
                0.25 * dij + if i == j { alpha[i] } else { 0.0 }
            } else {
                0.0
            }
        });
        let mut a = DMatrix::<f64>::identity(2 * n, 2 * n);
        a.view_mut((0, n), (n, n)).copy_from(&(-tau * &dense));
        a.view_mut((n, 0), (n, n)).copy_from(&(tau * &dense));
        let (p, q) = (DVector::from_column_slice(&s.p), DVector::from_column_slice(&s.q));
        let mut rhs = DVector::zeros(2 * n);
        rhs.rows_mut(0, n).copy_from(&(&p + tau * &dense * &q));
        rhs.rows_mut(n, n).copy_from(&(&q - tau * &dense * &p));
        let x = a.lu().solve(&rhs).unwrap();
        for j in 0..n {
            assert!((x[j] - psi[j].re).abs() <= 1e-12);
            assert!((x[n + j] - psi[j].im).abs() <= 1e-12);
        }
    }

    #[test]
    fn solution_errors_vanish_on_exact_data() {
        let g = Grid1D::new(-10.0, 10.0, 400).unwrap();
        let sol = SolitonParams::new(-0.8, 0.0).unwrap();
        let s = kgs_initial(&g, &[sol]).state;
        let (l2, linf) = solution_errors(&g, &s, 0.0, &sol);
        // only the truncated boundary values differ
        let init = kgs_initial(&g, &[sol]);
        assert!(l2 < 1e-5 && linf < 4.0 * init.boundary_leak + 1e-15);
        let mut t = s.clone();
        t.u[200] += 0.1;
        let (_, linf) = solution_errors(&g, &t, 0.0, &sol);
        assert!((linf - 0.1).abs() < 1e-5);
    }
}
