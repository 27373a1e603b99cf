//! Newton–Raphson AC power flow (polar form, flat start) and classical
//! machine initialization.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::linalg::{Lu, Matrix};
use crate::netmodel::{build_admittance, BusKind, Machine, PowerNetwork};
use crate::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 20;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PowerFlowSolution {
    /// Bus voltage phasors, indexed like [`PowerNetwork::buses`].
    pub voltage: Vec<Complex64>,
    /// Net injected active power per bus (p.u.).
    pub p_injection: Vec<f64>,
    /// Net injected reactive power per bus (p.u.).
    pub q_injection: Vec<f64>,
    /// Number of mismatch evaluations, the converged one included.
    pub iterations: usize,
    /// Largest |ΔP| or |ΔQ| among the solved equations at convergence.
    pub max_mismatch: f64,
}

impl PowerFlowSolution {
    /// Complex power delivered by the generator at bus position `k`.
    pub fn generation(&self, net: &PowerNetwork, k: usize) -> Complex64 {
        let bus = &net.buses()[k];
        Complex64::new(self.p_injection[k] + bus.p_load, self.q_injection[k] + bus.q_load)
    }
}

fn injections(y: &Matrix<Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    let i = y.mul_vec(v);
    v.iter().zip(&i).map(|(v, i)| v * i.conj()).collect()
}

/// Solves the power flow. Loads enter as constant power here; they become
/// constant impedances only in the dynamic model.
pub fn solve_power_flow(net: &PowerNetwork, tol: f64, max_iter: usize) -> Result<PowerFlowSolution> {
    let buses = net.buses();
    let nb = buses.len();
    // Loads are handled as specified injections, so the branch-only matrix is used.
    let y = build_admittance(&net_without_loads(net)?, &vec![Complex64::new(1.0, 0.0); nb])?.y;

    let mut p_spec = vec![0.0; nb];
    let mut q_spec = vec![0.0; nb];
    for (k, bus) in buses.iter().enumerate() {
        p_spec[k] -= bus.p_load;
        q_spec[k] -= bus.q_load;
        if let Some(g) = net.generator_at(k) {
            p_spec[k] += net.generators()[g].p_mech;
        }
    }
    let pvpq: Vec<usize> = (0..nb).filter(|&k| buses[k].kind != BusKind::Slack).collect();
    let pq: Vec<usize> = (0..nb).filter(|&k| buses[k].kind == BusKind::Pq).collect();

    let mut vm: Vec<f64> = buses.iter().map(|b| if b.kind == BusKind::Pq { 1.0 } else { b.v_set }).collect();
    let mut va = vec![0.0; nb];

    let polar = |vm: &[f64], va: &[f64]| -> Vec<Complex64> {
        vm.iter().zip(va).map(|(&m, &a)| Complex64::from_polar(m, a)).collect()
    };

    let mut iteration = 0;
    loop {
        iteration += 1;
        let v = polar(&vm, &va);
        let s = injections(&y, &v);
        let mut f = Vec::with_capacity(pvpq.len() + pq.len());
        f.extend(pvpq.iter().map(|&k| s[k].re - p_spec[k]));
        f.extend(pq.iter().map(|&k| s[k].im - q_spec[k]));
        let (worst, max_mismatch) = f.iter().enumerate().fold((0, 0.0_f64), |acc, (i, &x)| {
            if !(x.abs() <= acc.1) {
                (i, x.abs())
            } else {
                acc
            }
        });
        let worst_bus = if f.is_empty() {
            buses[0].id
        } else if worst < pvpq.len() {
            buses[pvpq[worst]].id
        } else {
            buses[pq[worst - pvpq.len()]].id
        };
        if !max_mismatch.is_finite() {
            return Err(Error::PowerFlowDiverged { iterations: iteration, worst_bus, mismatch: max_mismatch });
        }
        if max_mismatch < tol {
            return Ok(PowerFlowSolution {
                p_injection: s.iter().map(|s| s.re).collect(),
                q_injection: s.iter().map(|s| s.im).collect(),
                voltage: v,
                iterations: iteration,
                max_mismatch,
            });
        }
        if iteration > max_iter {
            return Err(Error::PowerFlowDiverged { iterations: iteration - 1, worst_bus, mismatch: max_mismatch });
        }

        let jac = jacobian(&y, &v, &vm, &pvpq, &pq);
        let lu = Lu::factor(&jac).map_err(|_| Error::JacobianSingular { iteration, worst_bus })?;
        let dx = lu.solve(&f);
        for (i, &k) in pvpq.iter().enumerate() {
            va[k] -= dx[i];
        }
        for (i, &k) in pq.iter().enumerate() {
            vm[k] -= dx[pvpq.len() + i];
        }
    }
}

fn net_without_loads(net: &PowerNetwork) -> Result<PowerNetwork> {
    let buses = net
        .buses()
        .iter()
        .cloned()
        .map(|mut b| {
            b.p_load = 0.0;
            b.q_load = 0.0;
            b
        })
        .collect();
    PowerNetwork::new(net.system(), buses, net.branches().to_vec(), net.generators().to_vec())
}

/// Jacobian of `[P(pvpq); Q(pq)]` with respect to `[θ(pvpq); |V|(pq)]`.
fn jacobian(y: &Matrix<Complex64>, v: &[Complex64], vm: &[f64], pvpq: &[usize], pq: &[usize]) -> Matrix<f64> {
    let nb = v.len();
    let ibus = y.mul_vec(v);
    let j = Complex64::new(0.0, 1.0);
    // dS/dθ = j diag(V) conj(diag(I) − Y diag(V))
    let ds_dva = Matrix::from_fn(nb, nb, |r, c| {
        let inner = if r == c { ibus[r] } else { Complex64::new(0.0, 0.0) } - y[(r, c)] * v[c];
        j * v[r] * inner.conj()
    });
    // dS/d|V| = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|)
    let ds_dvm = Matrix::from_fn(nb, nb, |r, c| {
        let unit = v[c] / vm[c];
        let mut out = v[r] * (y[(r, c)] * unit).conj();
        if r == c {
            out += ibus[r].conj() * unit;
        }
        out
    });
    let (na, nm) = (pvpq.len(), pq.len());
    Matrix::from_fn(na + nm, na + nm, |r, c| {
        let (row_bus, is_q) = if r < na { (pvpq[r], false) } else { (pq[r - na], true) };
        let entry = if c < na { ds_dva[(row_bus, pvpq[c])] } else { ds_dvm[(row_bus, pq[c - na])] };
        if is_q {
            entry.im
        } else {
            entry.re
        }
    })
}

/// Classical machine state at the pre-fault operating point.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ClassicalInit {
    /// Internal EMF phasors `E'_i`, indexed like [`PowerNetwork::generators`].
    pub emf: Vec<Complex64>,
    /// Initial rotor angles `θ_i(0) = arg E'_i` (rad); initial speeds are zero.
    pub theta0: Vec<f64>,
    /// Mechanical power of each machine (the power-flow generation).
    pub p_mech: Vec<f64>,
}

impl ClassicalInit {
    pub fn machines(&self, net: &PowerNetwork) -> Vec<Machine> {
        net.generators()
            .iter()
            .enumerate()
            .map(|(k, g)| Machine { inertia: g.m, damping: g.d, p_mech: self.p_mech[k], emf: self.emf[k] })
            .collect()
    }
}

/// EMF behind transient reactance: `E' = V + j x' conj(S / V)`.
pub fn internal_emf(terminal: Complex64, generation: Complex64, xd_prime: f64) -> Option<Complex64> {
    if terminal.norm() == 0.0 {
        return None;
    }
    let current = (generation / terminal).conj();
    Some(terminal + Complex64::new(0.0, xd_prime) * current)
}

pub fn init_classical(net: &PowerNetwork, pf: &PowerFlowSolution) -> Result<ClassicalInit> {
    let mut emf = Vec::with_capacity(net.generators().len());
    let mut p_mech = Vec::with_capacity(net.generators().len());
    for g in net.generators() {
        let k = net.bus_index(g.bus).expect("validated");
        let s = pf.generation(net, k);
        let e = internal_emf(pf.voltage[k], s, g.xd_prime).ok_or(Error::ZeroVoltage { bus: g.bus })?;
        emf.push(e);
        p_mech.push(s.re);
    }
    let theta0 = emf.iter().map(|e| e.arg()).collect();
    Ok(ClassicalInit { emf, theta0, p_mech })
}
