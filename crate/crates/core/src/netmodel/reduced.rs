use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
#[allow(unused_imports)] // float methods come from std under cfg(test)
use num_traits::Float;

use crate::linalg::Matrix;
use crate::{Error, Result};

/// Per-machine data needed by the reduced swing model.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Machine {
    pub inertia: f64,
    pub damping: f64,
    /// Mechanical power at the operating point (p.u.).
    pub p_mech: f64,
    /// Internal EMF phasor `E'` (p.u.).
    pub emf: Complex64,
}

/// Generator-only network with the swing-model coefficients
///
/// `θ̈_i + λ θ̇_i = Ω_i + Σ_j a_ij sin(θ_j − θ_i + α_ij)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ReducedNetwork {
    pub y_red: Matrix<Complex64>,
    pub emf_magnitude: Vec<f64>,
    /// Coupling strengths `a_ij` (rad/s²), zero diagonal.
    pub a: Matrix<f64>,
    /// Phase shifts `α_ij` (rad) in `(−π, π]`.
    pub alpha: Matrix<f64>,
    /// Natural accelerations `Ω_i` (rad/s²).
    pub omega: Vec<f64>,
    /// Homogeneous damping ratio `λ = D_i / M_i` (1/s).
    pub lambda: f64,
    /// Reference angular frequency (rad/s).
    pub omega_r: f64,
}

impl ReducedNetwork {
    pub fn n(&self) -> usize {
        self.omega.len()
    }

    /// Right-hand side of the swing model for machine `i` (without damping).
    pub fn acceleration(&self, theta: &[f64], i: usize) -> f64 {
        let mut acc = self.omega[i];
        for j in 0..self.n() {
            if j != i {
                acc += self.a[(i, j)] * (theta[j] - theta[i] + self.alpha[(i, j)]).sin();
            }
        }
        acc
    }

    /// Copy with a different damping ratio.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        ReducedNetwork { lambda, ..self.clone() }
    }

    /// Relabels machines: machine `k` of the result is machine `perm[k]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n();
        assert_eq!(perm.len(), n);
        ReducedNetwork {
            y_red: Matrix::from_fn(n, n, |i, j| self.y_red[(perm[i], perm[j])]),
            emf_magnitude: perm.iter().map(|&p| self.emf_magnitude[p]).collect(),
            a: Matrix::from_fn(n, n, |i, j| self.a[(perm[i], perm[j])]),
            alpha: Matrix::from_fn(n, n, |i, j| self.alpha[(perm[i], perm[j])]),
            omega: perm.iter().map(|&p| self.omega[p]).collect(),
            lambda: self.lambda,
            omega_r: self.omega_r,
        }
    }
}

fn wrap_angle(x: f64) -> f64 {
    // into (−π, π]
    let mut y = x % (2.0 * PI);
    if y <= -PI {
        y += 2.0 * PI;
    } else if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Fills `a_ij`, `α_ij`, `Ω_i` and `λ` from a Kron-reduced admittance.
///
/// Fails if `D_i/M_i` differs between machines by more than `1e-9`
/// relative, or if some `|E'_i|` is zero.
pub fn derive_coefficients(y_red: &Matrix<Complex64>, machines: &[Machine], omega_r: f64) -> Result<ReducedNetwork> {
    let n = machines.len();
    if !y_red.is_square() || y_red.rows() != n {
        return Err(Error::InvalidArgument("reduced admittance size does not match machine count".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("no machines".into()));
    }
    let ratio = |k: usize| machines[k].damping / machines[k].inertia;
    let lambda = ratio(0);
    for k in 1..n {
        let r = ratio(k);
        if (r - lambda).abs() > 1e-9 * lambda.abs().max(r.abs()).max(1e-300) {
            return Err(Error::HeterogeneousDamping { first: 1, second: k + 1, ratio_first: lambda, ratio_second: r });
        }
    }
    let e: Vec<f64> = machines.iter().map(|m| m.emf.norm()).collect();
    if let Some(k) = e.iter().position(|&v| v == 0.0) {
        return Err(Error::ZeroVoltage { bus: k + 1 });
    }
    let a = Matrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            omega_r * e[i] * e[j] * y_red[(i, j)].norm() / machines[i].inertia
        }
    });
    let alpha = Matrix::from_fn(n, n, |i, j| {
        let y = y_red[(i, j)];
        if i == j || y.norm() == 0.0 {
            0.0
        } else {
            wrap_angle(y.arg() - FRAC_PI_2)
        }
    });
    let omega = (0..n)
        .map(|i| omega_r * (machines[i].p_mech - e[i] * e[i] * y_red[(i, i)].re) / machines[i].inertia)
        .collect();
    Ok(ReducedNetwork { y_red: y_red.clone(), emf_magnitude: e, a, alpha, omega, lambda, omega_r })
}
