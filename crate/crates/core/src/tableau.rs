//! Gauss–Legendre collocation tableaus.
//!
//! Gauss methods satisfy `b_i a_ij + b_j a_ji = b_i b_j`, which makes them
//! conserve every quadratic invariant. Stage counts 1–3 use closed-form
//! coefficients; larger counts are built from Legendre roots.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest stage count accepted by [`gauss_tableau`].
pub const MAX_STAGES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl ButcherTableau {
    /// Builds a tableau from its coefficients; shapes must agree.
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let s = b.len();
        if s == 0 || c.len() != s || a.len() != s || a.iter().any(|row| row.len() != s) {
            return Err(Error::config("inconsistent Butcher tableau shape"));
        }
        Ok(ButcherTableau { a, b, c })
    }

    /// Explicit Euler, `a = [[0]]`, `b = [1]`.
    pub fn forward_euler() -> Self {
        ButcherTableau {
            a: vec![vec![0.0]],
            b: vec![1.0],
            c: vec![0.0],
        }
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i][j]
    }

    pub fn a_rows(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn symplectic_residual(&self) -> f64 {
        symplectic_residual(self)
    }
}

/// `max_ij |b_i a_ij + b_j a_ji - b_i b_j|`.
pub fn symplectic_residual(t: &ButcherTableau) -> f64 {
    let s = t.stages();
    let mut worst = 0.0_f64;
    for i in 0..s {
        for j in 0..s {
            let r = t.b[i] * t.a[i][j] + t.b[j] * t.a[j][i] - t.b[i] * t.b[j];
            worst = worst.max(r.abs());
        }
    }
    worst
}

/// The `s`-stage Gauss–Legendre collocation method, order `2s`.
pub fn gauss_tableau(s: usize) -> Result<ButcherTableau> {
    match s {
        1 => Ok(ButcherTableau {
            a: vec![vec![0.5]],
            b: vec![1.0],
            c: vec![0.5],
        }),
        2 => {
            let r3 = 3.0_f64.sqrt();
            Ok(ButcherTableau {
                a: vec![
                    vec![0.25, 0.25 - r3 / 6.0],
                    vec![0.25 + r3 / 6.0, 0.25],
                ],
                b: vec![0.5, 0.5],
                c: vec![0.5 - r3 / 6.0, 0.5 + r3 / 6.0],
            })
        }
        3 => {
            let r15 = 15.0_f64.sqrt();
            Ok(ButcherTableau {
                a: vec![
                    vec![5.0 / 36.0, 2.0 / 9.0 - r15 / 15.0, 5.0 / 36.0 - r15 / 30.0],
                    vec![5.0 / 36.0 + r15 / 24.0, 2.0 / 9.0, 5.0 / 36.0 - r15 / 24.0],
                    vec![5.0 / 36.0 + r15 / 30.0, 2.0 / 9.0 + r15 / 15.0, 5.0 / 36.0],
                ],
                b: vec![5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0],
                c: vec![0.5 - r15 / 10.0, 0.5, 0.5 + r15 / 10.0],
            })
        }
        4..=MAX_STAGES => gauss_from_legendre(s),
        _ => Err(Error::config(format!(
            "unsupported Gauss stage count {s} (1..={MAX_STAGES})"
        ))),
    }
}

/// Legendre polynomial `P_s(x)` and its derivative.
fn legendre(s: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=s {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = s as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Collocation tableau from the roots of `P_s`: nodes by Newton iteration,
/// weights from the Gauss formula, `a_ij` from the simplifying condition
/// `Σ_j a_ij c_j^(k-1) = c_i^k / k`, `k = 1..s`.
fn gauss_from_legendre(s: usize) -> Result<ButcherTableau> {
    let mut c = Vec::with_capacity(s);
    let mut b = Vec::with_capacity(s);
    for i in 0..s {
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (s as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(s, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(s, x);
        c.push(0.5 * (1.0 + x));
        b.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    let vander = DMatrix::from_fn(s, s, |k, j| c[j].powi(k as i32));
    let lu = vander.lu();
    let mut a = vec![vec![0.0; s]; s];
    for i in 0..s {
        let rhs = DVector::from_fn(s, |k, _| c[i].powi(k as i32 + 1) / (k as f64 + 1.0));
        let row = lu
            .solve(&rhs)
            .ok_or_else(|| Error::config("singular collocation system"))?;
        a[i].copy_from_slice(row.as_slice());
    }
    Ok(ButcherTableau { a, b, c })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `Σ b_i c_i^(k-1) - 1/k` for `k = 1..=order`.
    fn quadrature_defects(t: &ButcherTableau, order: usize) -> f64 {
        (1..=order)
            .map(|k| {
                let sum: f64 = t
                    .b()
                    .iter()
                    .zip(t.c())
                    .map(|(b, c)| b * c.powi(k as i32 - 1))
                    .sum();
                (sum - 1.0 / k as f64).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn one_stage_is_implicit_midpoint() {
        let t = gauss_tableau(1).unwrap();
        assert_eq!(t.a(0, 0), 0.5);
        assert_eq!(t.b(), &[1.0]);
        assert_eq!(t.c(), &[0.5]);
        assert_eq!(symplectic_residual(&t), 0.0);
    }

    #[test]
    fn two_and_three_stage_coefficients() {
        let r3 = 3.0_f64.sqrt();
        let t = gauss_tableau(2).unwrap();
        assert!((t.c()[0] - (0.5 - r3 / 6.0)).abs() < 1e-16);
        assert!((t.c()[1] - (0.5 + r3 / 6.0)).abs() < 1e-16);
        assert!(quadrature_defects(&t, 4) < 1e-15);
        assert!(symplectic_residual(&t) <= 1e-15);

        let r15 = 15.0_f64.sqrt();
        let t = gauss_tableau(3).unwrap();
        assert!((t.c()[0] - (0.5 - r15 / 10.0)).abs() < 1e-16);
        assert_eq!(t.c()[1], 0.5);
        assert!((t.b()[1] - 4.0 / 9.0).abs() < 1e-16);
        assert!(quadrature_defects(&t, 6) < 1e-15);
    }

    #[test]
    fn forward_euler_is_not_symplectic() {
        assert_eq!(symplectic_residual(&ButcherTableau::forward_euler()), 1.0);
    }

    #[test]
    fn closed_forms_agree_with_legendre_construction() {
        for s in 1..=3 {
            let closed = gauss_tableau(s).unwrap();
            let built = gauss_from_legendre(s).unwrap();
            for i in 0..s {
                assert!((closed.b()[i] - built.b()[i]).abs() < 1e-14);
                assert!((closed.c()[i] - built.c()[i]).abs() < 1e-14);
                for j in 0..s {
                    assert!((closed.a(i, j) - built.a(i, j)).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn every_supported_tableau_is_consistent() {
        for s in 1..=MAX_STAGES {
            let t = gauss_tableau(s).unwrap();
            let tol = if s <= 3 { 1e-14 } else { 1e-12 };
            let bsum: f64 = t.b().iter().sum();
            assert!((bsum - 1.0).abs() <= tol);
            for i in 0..s {
                let row: f64 = t.a_rows()[i].iter().sum();
                assert!((row - t.c()[i]).abs() <= tol, "s={s} row {i}");
            }
            assert!(symplectic_residual(&t) <= tol, "s={s}");
            assert!(quadrature_defects(&t, 2 * s) <= 1e-12, "s={s}");
        }
    }

    #[test]
    fn unsupported_stage_counts() {
        assert!(gauss_tableau(0).is_err());
        assert!(gauss_tableau(MAX_STAGES + 1).is_err());
        assert!(ButcherTableau::new(vec![vec![0.0]], vec![1.0, 0.0], vec![0.0]).is_err());
    }
}
