//! Time-domain swing-equation oracle: fault-on and post-fault reduced
//! networks, fixed-step RK4 integration and the rotor-angle diameter.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::netmodel::{
    augment_generators, build_admittance, derive_coefficients, kron_reduce, AdmittanceMatrix, Node, PowerNetwork,
    ReducedNetwork,
};
use crate::powerflow::{ClassicalInit, PowerFlowSolution};
use crate::{Error, Result};

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 5.0;

/// Three-phase-to-ground fault at a bus, cleared without topology change.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FaultScenario {
    pub bus: usize,
    /// Fault inception (s).
    pub start: f64,
    /// Clearing instant (s); equal to `start` means cleared immediately.
    pub clearing_time: f64,
}

impl FaultScenario {
    pub fn new(net: &PowerNetwork, bus: usize, clearing_time: f64) -> Result<Self> {
        if net.bus_index(bus).is_none() {
            return Err(Error::InvalidArgument(alloc::format!("fault bus {bus} does not exist")));
        }
        if !(clearing_time >= 0.0 && clearing_time.is_finite()) {
            return Err(Error::InvalidArgument(alloc::format!("invalid clearing time {clearing_time}")));
        }
        Ok(FaultScenario { bus, start: 0.0, clearing_time })
    }

    pub fn duration(&self) -> f64 {
        self.clearing_time - self.start
    }
}

/// Bus admittance with loads as constant impedances at the power-flow
/// voltages, extended by the generator internal nodes.
pub fn augmented_network(net: &PowerNetwork, pf: &PowerFlowSolution) -> Result<AdmittanceMatrix> {
    augment_generators(net, &build_admittance(net, &pf.voltage)?)
}

fn internal_nodes(net: &PowerNetwork) -> Vec<Node> {
    (0..net.generators().len()).map(Node::Internal).collect()
}

fn reduce(net: &PowerNetwork, init: &ClassicalInit, y_aug: &AdmittanceMatrix) -> Result<ReducedNetwork> {
    let red = kron_reduce(y_aug, &internal_nodes(net))?;
    derive_coefficients(&red.y, &init.machines(net), net.omega_r())
}

pub fn prefault_reduction(net: &PowerNetwork, pf: &PowerFlowSolution, init: &ClassicalInit) -> Result<ReducedNetwork> {
    reduce(net, init, &augmented_network(net, pf)?)
}

/// Fault-on reduced network: the faulted bus is tied to ground (its row
/// and column removed) before the Kron reduction.
pub fn faulted_reduction(
    net: &PowerNetwork,
    pf: &PowerFlowSolution,
    init: &ClassicalInit,
    fault: &FaultScenario,
) -> Result<ReducedNetwork> {
    let y = augmented_network(net, pf)?.grounded(Node::Bus(fault.bus))?;
    reduce(net, init, &y)
}

/// Fault-on reduced network with the fault modelled as a finite shunt
/// conductance (p.u.) instead of an ideal ground.
pub fn faulted_reduction_shunt(
    net: &PowerNetwork,
    pf: &PowerFlowSolution,
    init: &ClassicalInit,
    fault: &FaultScenario,
    shunt: f64,
) -> Result<ReducedNetwork> {
    let y = augmented_network(net, pf)?.with_shunt(Node::Bus(fault.bus), Complex64::new(shunt, 0.0))?;
    reduce(net, init, &y)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SwingState {
    pub theta: Vec<f64>,
    pub speed: Vec<f64>,
}

impl SwingState {
    /// Rest state at the given angles.
    pub fn at_rest(theta: &[f64]) -> Self {
        SwingState { theta: theta.to_vec(), speed: alloc::vec![0.0; theta.len()] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Phase {
    FaultOn,
    PostFault,
}

/// Uniform-grid trajectory of all machine angles and speeds.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Trajectory {
    pub t0: f64,
    pub step: f64,
    pub n: usize,
    pub phase: Phase,
    theta: Vec<f64>,
    speed: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.theta.len() / self.n.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.step
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn theta(&self, k: usize) -> &[f64] {
        &self.theta[k * self.n..(k + 1) * self.n]
    }

    pub fn speed(&self, k: usize) -> &[f64] {
        &self.speed[k * self.n..(k + 1) * self.n]
    }

    pub fn state(&self, k: usize) -> SwingState {
        SwingState { theta: self.theta(k).to_vec(), speed: self.speed(k).to_vec() }
    }

    pub fn last_state(&self) -> SwingState {
        self.state(self.len() - 1)
    }
}

fn derivative(net: &ReducedNetwork, theta: &[f64], speed: &[f64], d_theta: &mut [f64], d_speed: &mut [f64]) {
    for i in 0..net.n() {
        d_theta[i] = speed[i];
        d_speed[i] = net.acceleration(theta, i) - net.lambda * speed[i];
    }
}

/// Classical RK4 on `[t0, t1]`. The step is `h` shrunk just enough to land
/// exactly on `t1`.
pub fn integrate_swing(net: &ReducedNetwork, init: &SwingState, t_span: (f64, f64), h: f64) -> Result<Trajectory> {
    integrate_swing_until(net, init, t_span, h, |_, _| false)
}

/// Like [`integrate_swing`], stopping after the first step where `stop`
/// returns true for `(θ, θ̇)`.
pub fn integrate_swing_until(
    net: &ReducedNetwork,
    init: &SwingState,
    t_span: (f64, f64),
    h: f64,
    mut stop: impl FnMut(&[f64], &[f64]) -> bool,
) -> Result<Trajectory> {
    let n = net.n();
    let (t0, t1) = t_span;
    if !(h > 0.0) || !(t1 >= t0) {
        return Err(Error::InvalidArgument(alloc::format!("bad integration span {t_span:?} or step {h}")));
    }
    if init.theta.len() != n || init.speed.len() != n {
        return Err(Error::InvalidArgument("initial state size does not match machine count".into()));
    }
    let span = t1 - t0;
    let steps = if span == 0.0 { 0 } else { num_traits::Float::ceil(span / h - 1e-9).max(1.0) as usize };
    let step = if steps == 0 { h } else { span / steps as f64 };

    let mut theta = Vec::with_capacity((steps + 1) * n);
    let mut speed = Vec::with_capacity((steps + 1) * n);
    theta.extend_from_slice(&init.theta);
    speed.extend_from_slice(&init.speed);

    let mut x = init.theta.clone();
    let mut v = init.speed.clone();
    let mut k = [(alloc::vec![0.0; n], alloc::vec![0.0; n]), (alloc::vec![0.0; n], alloc::vec![0.0; n]),
        (alloc::vec![0.0; n], alloc::vec![0.0; n]), (alloc::vec![0.0; n], alloc::vec![0.0; n])];
    let mut xt = alloc::vec![0.0; n];
    let mut vt = alloc::vec![0.0; n];
    for s in 0..steps {
        derivative(net, &x, &v, &mut k[0].0, &mut k[0].1);
        for stage in 1..4 {
            let c = if stage == 3 { step } else { 0.5 * step };
            for i in 0..n {
                xt[i] = x[i] + c * k[stage - 1].0[i];
                vt[i] = v[i] + c * k[stage - 1].1[i];
            }
            let (dx, dv) = &mut k[stage];
            derivative(net, &xt, &vt, dx, dv);
        }
        for i in 0..n {
            x[i] += step / 6.0 * (k[0].0[i] + 2.0 * k[1].0[i] + 2.0 * k[2].0[i] + k[3].0[i]);
            v[i] += step / 6.0 * (k[0].1[i] + 2.0 * k[1].1[i] + 2.0 * k[2].1[i] + k[3].1[i]);
        }
        if !x.iter().chain(&v).all(|z| z.is_finite()) {
            return Err(Error::NonFinite { time: t0 + (s + 1) as f64 * step });
        }
        theta.extend_from_slice(&x);
        speed.extend_from_slice(&v);
        if stop(&x, &v) {
            break;
        }
    }
    Ok(Trajectory { t0, step, n, phase: Phase::PostFault, theta, speed })
}

/// Diameter of one state: `(D, Ḋ, argmax, argmin)`, ties to the lowest index.
pub fn state_diameter(theta: &[f64], speed: &[f64]) -> (f64, f64, usize, usize) {
    let mut hi = 0;
    let mut lo = 0;
    for (i, &t) in theta.iter().enumerate() {
        if t > theta[hi] {
            hi = i;
        }
        if t < theta[lo] {
            lo = i;
        }
    }
    (theta[hi] - theta[lo], speed[hi] - speed[lo], hi, lo)
}

/// `D(θ) = max θ − min θ` and its rate along a trajectory.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DiameterSeries {
    pub value: Vec<f64>,
    pub rate: Vec<f64>,
    pub argmax: Vec<usize>,
    pub argmin: Vec<usize>,
}

impl DiameterSeries {
    pub fn max(&self) -> f64 {
        self.value.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the first local maximum (the first-swing peak), or the last
    /// index if the series never turns down.
    pub fn first_peak(&self) -> usize {
        let v = &self.value;
        (1..v.len()).find(|&k| v[k] < v[k - 1]).map_or(v.len().saturating_sub(1), |k| k - 1)
    }
}

pub fn diameter(traj: &Trajectory) -> DiameterSeries {
    let len = traj.len();
    let mut out = DiameterSeries {
        value: Vec::with_capacity(len),
        rate: Vec::with_capacity(len),
        argmax: Vec::with_capacity(len),
        argmin: Vec::with_capacity(len),
    };
    for k in 0..len {
        let (d, r, hi, lo) = state_diameter(traj.theta(k), traj.speed(k));
        out.value.push(d);
        out.rate.push(r);
        out.argmax.push(hi);
        out.argmin.push(lo);
    }
    out
}

/// Fault-on and post-fault legs of one scenario.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FaultRun {
    pub fault_on: Trajectory,
    pub post_fault: Trajectory,
}

/// Integrates from rest at `theta0` through the fault-on network up to the
/// clearing instant, then through the post-fault network for `horizon`.
pub fn simulate_fault(
    fault_on: &ReducedNetwork,
    post_fault: &ReducedNetwork,
    theta0: &[f64],
    fault: &FaultScenario,
    horizon: f64,
    h: f64,
) -> Result<FaultRun> {
    let mut on = integrate_swing(fault_on, &SwingState::at_rest(theta0), (fault.start, fault.clearing_time), h)?;
    on.phase = Phase::FaultOn;
    let mut post = integrate_swing(post_fault, &on.last_state(), (fault.clearing_time, fault.clearing_time + horizon), h)?;
    post.phase = Phase::PostFault;
    Ok(FaultRun { fault_on: on, post_fault: post })
}
