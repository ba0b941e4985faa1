//! Tridiagonal storage and the Thomas algorithm over real and complex scalars.

use std::ops::{Add, Div, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Scalar field the Thomas sweep runs over.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + PartialEq
{
    fn zero() -> Self;
    fn one() -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Square tridiagonal matrix stored by diagonals.
///
/// `sub[i]` sits at row `i + 1`, column `i`; `sup[i]` at row `i`, column `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix<T = f64> {
    pub sub: Vec<T>,
    pub diag: Vec<T>,
    pub sup: Vec<T>,
}

pub type ComplexTridiagonal = TridiagonalMatrix<Complex64>;

impl<T: Scalar> TridiagonalMatrix<T> {
    pub fn new(sub: Vec<T>, diag: Vec<T>, sup: Vec<T>) -> Result<Self> {
        let n = diag.len();
        if n == 0 || sub.len() + 1 != n || sup.len() + 1 != n {
            return Err(Error::Config(format!(
                "tridiagonal lengths sub={}, diag={}, sup={} are inconsistent",
                sub.len(),
                n,
                sup.len()
            )));
        }
        Ok(Self { sub, diag, sup })
    }

    /// Constant-band matrix `tridiag(lower, center, upper)`.
    pub fn constant(n: usize, lower: T, center: T, upper: T) -> Self {
        assert!(n > 0, "matrix dimension must be positive");
        Self {
            sub: vec![lower; n - 1],
            diag: vec![center; n],
            sup: vec![upper; n - 1],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(n, T::zero(), T::one(), T::zero())
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Replaces row `i` with the corresponding identity row.
    pub fn pin_row(&mut self, i: usize) {
        let n = self.dim();
        self.diag[i] = T::one();
        if i > 0 {
            self.sub[i - 1] = T::zero();
        }
        if i + 1 < n {
            self.sup[i] = T::zero();
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(x.len(), n, "vector length must match matrix dimension");
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc = acc + self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    acc = acc + self.sup[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }

    /// Strict row diagonal dominance.
    pub fn is_diagonally_dominant(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| {
            let mut off = 0.0;
            if i > 0 {
                off += self.sub[i - 1].modulus();
            }
            if i + 1 < n {
                off += self.sup[i].modulus();
            }
            self.diag[i].modulus() > off
        })
    }

    /// Thomas algorithm without pivoting.
    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        let n = self.dim();
        assert_eq!(rhs.len(), n, "right-hand side length must match matrix dimension");
        let mut c = vec![T::zero(); n];
        let mut d = vec![T::zero(); n];

        let mut pivot = self.diag[0];
        check_pivot(pivot, 0)?;
        if n > 1 {
            c[0] = self.sup[0] / pivot;
        }
        d[0] = rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.sub[i - 1] * c[i - 1];
            check_pivot(pivot, i)?;
            if i + 1 < n {
                c[i] = self.sup[i] / pivot;
            }
            d[i] = (rhs[i] - self.sub[i - 1] * d[i - 1]) / pivot;
        }

        for i in (0..n - 1).rev() {
            d[i] = d[i] - c[i] * d[i + 1];
        }
        Ok(d)
    }
}

fn check_pivot<T: Scalar>(pivot: T, row: usize) -> Result<()> {
    let m = pivot.modulus();
    if m == 0.0 || !m.is_finite() {
        Err(Error::SingularMatrix { row })
    } else {
        Ok(())
    }
}

pub fn solve_tridiagonal(a: &TridiagonalMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    a.solve(b)
}

pub fn solve_complex_tridiagonal(a: &ComplexTridiagonal, b: &[Complex64]) -> Result<Vec<Complex64>> {
    a.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn identity_returns_rhs() {
        let a = TridiagonalMatrix::<f64>::identity(5);
        let b = vec![1.0, -2.0, 3.5, 0.0, 7.0];
        assert_eq!(solve_tridiagonal(&a, &b).unwrap(), b);
    }

    #[test]
    fn second_difference_by_hand() {
        let a = TridiagonalMatrix::constant(3, -1.0, 2.0, -1.0);
        let x = solve_tridiagonal(&a, &[1.0, 1.0, 1.0]).unwrap();
        assert!(max_abs_diff(&x, &[1.5, 2.0, 1.5]) < 1e-15);
    }

    #[test]
    fn diagonal_case_divides() {
        let a = TridiagonalMatrix::constant(4, 0.0, 4.0, 0.0);
        let x = solve_tridiagonal(&a, &[4.0, 8.0, -2.0, 1.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, -0.5, 0.25]);
    }

    #[test]
    fn single_row() {
        let a = TridiagonalMatrix::new(vec![], vec![2.0], vec![]).unwrap();
        assert_eq!(solve_tridiagonal(&a, &[3.0]).unwrap(), vec![1.5]);
    }

    #[test]
    fn zero_pivot_is_singular() {
        let a = TridiagonalMatrix::constant(3, 1.0, 0.0, 1.0);
        assert!(matches!(
            solve_tridiagonal(&a, &[1.0, 1.0, 1.0]),
            Err(Error::SingularMatrix { row: 0 })
        ));
        // Second pivot vanishes: 1 - 1*1/1 = 0.
        let a = TridiagonalMatrix::constant(3, 1.0, 1.0, 1.0);
        assert!(matches!(
            solve_tridiagonal(&a, &[1.0, 1.0, 1.0]),
            Err(Error::SingularMatrix { row: 1 })
        ));
    }

    #[test]
    fn inconsistent_lengths_rejected() {
        assert!(TridiagonalMatrix::new(vec![1.0], vec![1.0, 2.0, 3.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn complex_identity_and_diag_i() {
        let n = 4;
        let b: Vec<Complex64> = (0..n).map(|k| Complex64::new(k as f64, 1.0 - k as f64)).collect();
        let id = ComplexTridiagonal::identity(n);
        assert_eq!(solve_complex_tridiagonal(&id, &b).unwrap(), b);

        let i = Complex64::new(0.0, 1.0);
        let a = ComplexTridiagonal::constant(n, Complex64::zero(), i, Complex64::zero());
        let ones = vec![Complex64::one(); n];
        for x in solve_complex_tridiagonal(&a, &ones).unwrap() {
            assert!((x - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn complex_recovers_known_solution() {
        // Deterministic "random" well-conditioned system built by forward multiplication.
        let n = 37;
        let f = |k: usize, s: f64| ((k as f64 * s).sin() * 0.4, (k as f64 * s * 1.3).cos() * 0.4);
        let sub: Vec<Complex64> = (0..n - 1).map(|k| { let (a, b) = f(k, 0.7); Complex64::new(a, b) }).collect();
        let sup: Vec<Complex64> = (0..n - 1).map(|k| { let (a, b) = f(k, 1.9); Complex64::new(a, b) }).collect();
        let diag: Vec<Complex64> = (0..n).map(|k| { let (a, b) = f(k, 0.3); Complex64::new(2.0 + a, b) }).collect();
        let a = ComplexTridiagonal::new(sub, diag, sup).unwrap();
        let x_known: Vec<Complex64> = (0..n).map(|k| Complex64::new(k as f64 * 0.1 - 1.0, (k as f64).sqrt())).collect();
        let b = a.mul_vec(&x_known);
        let x = solve_complex_tridiagonal(&a, &b).unwrap();
        for (u, v) in x.iter().zip(&x_known) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn pin_row_makes_identity_row() {
        let mut a = TridiagonalMatrix::constant(4, -1.0, 3.0, -1.0);
        a.pin_row(0);
        a.pin_row(3);
        let y = a.mul_vec(&[5.0, 1.0, 1.0, 6.0]);
        assert_eq!(y[0], 5.0);
        assert_eq!(y[3], 6.0);
    }

    fn dominant_system() -> impl Strategy<Value = (TridiagonalMatrix<f64>, Vec<f64>)> {
        (2usize..4096).prop_flat_map(|n| {
            (
                prop::collection::vec(-1.0..1.0f64, n - 1),
                prop::collection::vec(-1.0..1.0f64, n - 1),
                prop::collection::vec(0.1..2.0f64, n),
                prop::collection::vec(-10.0..10.0f64, n),
                prop::collection::vec(any::<bool>(), n),
            )
                .prop_map(|(sub, sup, margin, b, neg)| {
                    let n = margin.len();
                    let diag = (0..n)
                        .map(|i| {
                            let off = if i > 0 { sub[i - 1].abs() } else { 0.0 }
                                + if i + 1 < n { sup[i].abs() } else { 0.0 };
                            let d = off + margin[i];
                            if neg[i] { -d } else { d }
                        })
                        .collect();
                    (TridiagonalMatrix::new(sub, diag, sup).unwrap(), b)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn dominant_solve_reproduces_rhs((a, b) in dominant_system()) {
            prop_assert!(a.is_diagonally_dominant());
            let x = solve_tridiagonal(&a, &b).unwrap();
            let back = a.mul_vec(&x);
            let scale = 1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assert!(max_abs_diff(&back, &b) <= 1e-12 * scale);
        }
    }
}
