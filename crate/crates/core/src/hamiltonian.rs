//! Hamiltonian systems `z' = S grad H(z)`, variable groupings, and the
//! path-averaged gradients every integrator is built from.
//!
//! All averaged gradients integrate `grad H` along a straight segment in
//! `xi in [0, 1]`. With a declared polynomial degree `d` the Gauss–Legendre
//! rule has `ceil(d / 2)` nodes, which is exact for the degree `d - 1`
//! integrand; otherwise an 8-node rule is used.

use std::fmt;
use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre_nodes, nodes_for_degree, Node};

/// Default node count for Hamiltonians without a declared degree.
pub const DEFAULT_QUADRATURE_NODES: usize = 8;

/// Increment below which the Itoh–Abe quotient falls back to the derivative.
pub const DIVIDED_DIFFERENCE_EPS: f64 = 1e-12;

/// A point in phase space.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct State(Vec<f64>);

impl State {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    /// Rejects NaN and infinite entries.
    pub fn try_new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!("state entry {i} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

impl Deref for State {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for State {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl AsRef<[f64]> for State {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl AsMut<[f64]> for State {
    fn as_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for State {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl<const N: usize> From<[f64; N]> for State {
    fn from(v: [f64; N]) -> Self {
        Self(v.to_vec())
    }
}

/// Constant skew-symmetric structure matrix `S`.
#[derive(Debug, Clone, PartialEq)]
pub enum SkewStructure {
    /// `[[0, I], [-I, 0]]` on `(q, p)` with `q, p` of length `d`.
    Canonical { d: usize },
    /// Dense row-major `m x m` matrix.
    Explicit { m: usize, entries: Vec<f64> },
    /// Four blocks of length `n` on `(U, V, P, Q)`:
    /// `U' = g_V`, `V' = -g_U`, `P' = -g_Q`, `Q' = g_P`.
    KgsBlock { n: usize },
}

impl SkewStructure {
    /// Checks `S^T = -S` entry-wise.
    pub fn explicit(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Config("explicit skew structure must be square".into()));
        }
        for i in 0..m {
            for j in 0..m {
                if rows[i][j] != -rows[j][i] {
                    return Err(Error::Config(format!(
                        "explicit skew structure is not skew-symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::Explicit {
            m,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Canonical { d } => 2 * d,
            Self::Explicit { m, .. } => *m,
            Self::KgsBlock { n } => 4 * n,
        }
    }

    /// `S v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim(), "vector length must match skew structure");
        match self {
            Self::Canonical { d } => {
                let (q, p) = v.split_at(*d);
                p.iter().copied().chain(q.iter().map(|x| -x)).collect()
            }
            Self::Explicit { m, entries } => entries
                .chunks_exact(*m)
                .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
                .collect(),
            Self::KgsBlock { n } => {
                let n = *n;
                let (u, rest) = v.split_at(n);
                let (vv, rest) = rest.split_at(n);
                let (p, q) = rest.split_at(n);
                let mut out = Vec::with_capacity(4 * n);
                out.extend_from_slice(vv);
                out.extend(u.iter().map(|x| -x));
                out.extend(q.iter().map(|x| -x));
                out.extend_from_slice(p);
                out
            }
        }
    }

    /// Dense row-major copy, mainly for checks.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let m = self.dim();
        let mut cols = Vec::with_capacity(m);
        for j in 0..m {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            cols.push(self.apply(&e));
        }
        (0..m).map(|i| (0..m).map(|j| cols[j][i]).collect()).collect()
    }
}

/// Ordered partition of the state indices `0..m` into disjoint groups.
///
/// The order is the path order: group `k` is averaged with groups before it
/// already at the new state and groups after it still at the old state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grouping {
    groups: Vec<Vec<usize>>,
    owner: Vec<usize>,
}

impl Grouping {
    pub fn new(groups: Vec<Vec<usize>>, m: usize) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidGrouping("at least one group is required".into()));
        }
        let mut owner = vec![usize::MAX; m];
        for (k, g) in groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::InvalidGrouping(format!("group {k} is empty")));
            }
            for &i in g {
                if i >= m {
                    return Err(Error::InvalidGrouping(format!("index {i} out of range for dimension {m}")));
                }
                if owner[i] != usize::MAX {
                    return Err(Error::InvalidGrouping(format!("index {i} appears in more than one group")));
                }
                owner[i] = k;
            }
        }
        if let Some(i) = owner.iter().position(|&o| o == usize::MAX) {
            return Err(Error::InvalidGrouping(format!("index {i} is not covered")));
        }
        Ok(Self { groups, owner })
    }

    /// One group holding every index; PAVF then reduces to AVF.
    pub fn single(m: usize) -> Self {
        Self::new(vec![(0..m).collect()], m).expect("single group is valid")
    }

    /// Each coordinate its own group, in index order.
    pub fn singletons(m: usize) -> Self {
        Self::new((0..m).map(|i| vec![i]).collect(), m).expect("singletons are valid")
    }

    /// Contiguous blocks of the given sizes.
    pub fn blocks(sizes: &[usize]) -> Result<Self> {
        let mut start = 0;
        let mut groups = Vec::with_capacity(sizes.len());
        for &s in sizes {
            groups.push((start..start + s).collect());
            start += s;
        }
        Self::new(groups, start)
    }

    /// Same groups, reversed path order. PAVF over the reversed grouping is
    /// the adjoint of PAVF over `self`.
    pub fn reversed(&self) -> Self {
        let groups: Vec<Vec<usize>> = self.groups.iter().rev().cloned().collect();
        Self::new(groups, self.owner.len()).expect("reversal preserves validity")
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.owner.len()
    }

    pub fn group(&self, k: usize) -> &[usize] {
        &self.groups[k]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Group index of coordinate `i`.
    pub fn owner(&self, i: usize) -> usize {
        self.owner[i]
    }
}

/// A Hamiltonian system with constant skew structure.
pub trait HamiltonianSystem: Send + Sync {
    fn dim(&self) -> usize;

    fn skew(&self) -> &SkewStructure;

    fn hamiltonian(&self, z: &[f64]) -> f64;

    fn gradient(&self, z: &[f64]) -> Vec<f64>;

    /// Degree of `H` when it is a polynomial.
    fn polynomial_degree(&self) -> Option<u32> {
        None
    }

    /// Hand-integrated group average for the forward path pattern, when the
    /// model knows one for this grouping. Must agree with quadrature.
    fn closed_form_group_average(
        &self,
        _grouping: &Grouping,
        _z_old: &[f64],
        _z_new: &[f64],
        _k: usize,
    ) -> Option<Vec<f64>> {
        None
    }
}

impl<T: HamiltonianSystem + ?Sized> HamiltonianSystem for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn skew(&self) -> &SkewStructure {
        (**self).skew()
    }
    fn hamiltonian(&self, z: &[f64]) -> f64 {
        (**self).hamiltonian(z)
    }
    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        (**self).gradient(z)
    }
    fn polynomial_degree(&self) -> Option<u32> {
        (**self).polynomial_degree()
    }
    fn closed_form_group_average(&self, g: &Grouping, a: &[f64], b: &[f64], k: usize) -> Option<Vec<f64>> {
        (**self).closed_form_group_average(g, a, b, k)
    }
}

/// Hides a model's closed-form group averages so that every average goes
/// through quadrature.
pub struct QuadratureOnly<S>(pub S);

impl<S: HamiltonianSystem> HamiltonianSystem for QuadratureOnly<S> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn skew(&self) -> &SkewStructure {
        self.0.skew()
    }
    fn hamiltonian(&self, z: &[f64]) -> f64 {
        self.0.hamiltonian(z)
    }
    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        self.0.gradient(z)
    }
    fn polynomial_degree(&self) -> Option<u32> {
        self.0.polynomial_degree()
    }
}

type EnergyFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradientFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A system assembled from closures.
pub struct FnSystem {
    skew: SkewStructure,
    energy: EnergyFn,
    gradient: GradientFn,
    degree: Option<u32>,
}

impl FnSystem {
    pub fn new<H, G>(skew: SkewStructure, energy: H, gradient: G) -> Self
    where
        H: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            skew,
            energy: Box::new(energy),
            gradient: Box::new(gradient),
            degree: None,
        }
    }

    pub fn with_degree(mut self, degree: u32) -> Self {
        self.degree = Some(degree);
        self
    }

    /// `H = 1/2 |z|^2` on the canonical structure of dimension `2d`.
    pub fn quadratic(d: usize) -> Self {
        Self::new(
            SkewStructure::Canonical { d },
            |z| 0.5 * z.iter().map(|v| v * v).sum::<f64>(),
            |z| z.to_vec(),
        )
        .with_degree(2)
    }
}

impl HamiltonianSystem for FnSystem {
    fn dim(&self) -> usize {
        self.skew.dim()
    }
    fn skew(&self) -> &SkewStructure {
        &self.skew
    }
    fn hamiltonian(&self, z: &[f64]) -> f64 {
        (self.energy)(z)
    }
    fn gradient(&self, z: &[f64]) -> Vec<f64> {
        (self.gradient)(z)
    }
    fn polynomial_degree(&self) -> Option<u32> {
        self.degree
    }
}

fn check_dim<S: HamiltonianSystem + ?Sized>(sys: &S, z: &[f64]) {
    assert_eq!(z.len(), sys.dim(), "state length {} does not match system dimension {}", z.len(), sys.dim());
}

pub fn eval_hamiltonian<S: HamiltonianSystem + ?Sized>(sys: &S, z: &[f64]) -> f64 {
    check_dim(sys, z);
    sys.hamiltonian(z)
}

pub fn eval_gradient<S: HamiltonianSystem + ?Sized>(sys: &S, z: &[f64]) -> Vec<f64> {
    check_dim(sys, z);
    sys.gradient(z)
}

/// Quadrature rule sized for the system's declared degree.
pub fn quadrature_nodes<S: HamiltonianSystem + ?Sized>(sys: &S) -> Vec<Node> {
    let n = sys
        .polynomial_degree()
        .map(nodes_for_degree)
        .unwrap_or(DEFAULT_QUADRATURE_NODES);
    gauss_legendre_nodes(n)
}

/// `int_0^1 grad H(xi z_new + (1 - xi) z_old) dxi`.
pub fn avf_averaged_gradient<S: HamiltonianSystem + ?Sized>(sys: &S, z_old: &[f64], z_new: &[f64]) -> Vec<f64> {
    check_dim(sys, z_old);
    check_dim(sys, z_new);
    let m = z_old.len();
    let mut acc = vec![0.0; m];
    let mut point = vec![0.0; m];
    for node in quadrature_nodes(sys) {
        for i in 0..m {
            point[i] = node.x * z_new[i] + (1.0 - node.x) * z_old[i];
        }
        for (a, g) in acc.iter_mut().zip(sys.gradient(&point)) {
            *a += node.w * g;
        }
    }
    acc
}

/// Average of `dH/dz_k` over group `k`'s segment, with earlier groups at
/// `z_new` and later groups at `z_old`. Uses the model's closed form if it
/// registers one for this grouping.
pub fn group_averaged_gradient<S: HamiltonianSystem + ?Sized>(
    sys: &S,
    grouping: &Grouping,
    z_old: &[f64],
    z_new: &[f64],
    k: usize,
) -> Vec<f64> {
    check_dim(sys, z_old);
    check_dim(sys, z_new);
    assert_eq!(grouping.dim(), sys.dim(), "grouping dimension must match system");
    assert!(k < grouping.len(), "group index {k} out of range for {} groups", grouping.len());
    if let Some(g) = sys.closed_form_group_average(grouping, z_old, z_new, k) {
        return g;
    }
    group_averaged_gradient_quadrature(sys, grouping, z_old, z_new, k)
}

fn group_averaged_gradient_quadrature<S: HamiltonianSystem + ?Sized>(
    sys: &S,
    grouping: &Grouping,
    z_old: &[f64],
    z_new: &[f64],
    k: usize,
) -> Vec<f64> {
    let idx = grouping.group(k);
    let mut point: Vec<f64> = (0..z_old.len())
        .map(|i| match grouping.owner(i).cmp(&k) {
            std::cmp::Ordering::Less => z_new[i],
            _ => z_old[i],
        })
        .collect();
    let mut acc = vec![0.0; idx.len()];
    for node in quadrature_nodes(sys) {
        for &i in idx {
            point[i] = node.x * z_new[i] + (1.0 - node.x) * z_old[i];
        }
        let g = sys.gradient(&point);
        for (a, &i) in acc.iter_mut().zip(idx) {
            *a += node.w * g[i];
        }
    }
    acc
}

/// Full-length vector of all group averages under the forward path.
pub fn path_averaged_gradient<S: HamiltonianSystem + ?Sized>(
    sys: &S,
    grouping: &Grouping,
    z_old: &[f64],
    z_new: &[f64],
) -> Vec<f64> {
    let mut out = vec![0.0; z_old.len()];
    for k in 0..grouping.len() {
        let gk = group_averaged_gradient(sys, grouping, z_old, z_new, k);
        for (&i, v) in grouping.group(k).iter().zip(gk) {
            out[i] = v;
        }
    }
    out
}

/// Coordinate-increment (Itoh–Abe) discrete gradient.
///
/// Component `k` is the divided difference of `H` when coordinate `k` moves
/// from `z_old` to `z_new` with coordinates `< k` already at `z_new`. Below
/// [`DIVIDED_DIFFERENCE_EPS`] the quotient is replaced by the partial
/// derivative at the corresponding corner point.
pub fn itoh_abe_discrete_gradient<S: HamiltonianSystem + ?Sized>(sys: &S, z_old: &[f64], z_new: &[f64]) -> Vec<f64> {
    check_dim(sys, z_old);
    check_dim(sys, z_new);
    let m = z_old.len();
    let mut point = z_old.to_vec();
    let mut h_prev = sys.hamiltonian(&point);
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        let dk = z_new[k] - z_old[k];
        if dk.abs() < DIVIDED_DIFFERENCE_EPS {
            // 0/0 limit: the segment integral of dH/dz_k over a degenerate segment.
            out.push(sys.gradient(&point)[k]);
            point[k] = z_new[k];
            h_prev = sys.hamiltonian(&point);
        } else {
            point[k] = z_new[k];
            let h_next = sys.hamiltonian(&point);
            out.push((h_next - h_prev) / dk);
            h_prev = h_next;
        }
    }
    out
}
