//! Stability certification, critical clearing time and the margin index.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[allow(unused_imports)] // float methods come from std under cfg(test)
use num_traits::Float;

use crate::dynamics::{
    diameter, faulted_reduction, integrate_swing, integrate_swing_until, prefault_reduction, state_diameter,
    DiameterSeries, FaultScenario, SwingState, Trajectory, DEFAULT_HORIZON, DEFAULT_STEP,
};
use crate::envelope::{envelope_params, EnvelopeParams, PairPolicy, DEFAULT_EDGES};
use crate::gronwall::{propagate_with_switching, BoundConfig, BoundCurve, Verdict};
use crate::netmodel::{PowerNetwork, ReducedNetwork};
use crate::powerflow::{init_classical, solve_power_flow, ClassicalInit, PowerFlowSolution};
use crate::{Error, Result, DEFAULT_ZETA};

pub const DEFAULT_CCT_TOLERANCE: f64 = 0.005;
pub const DEFAULT_CCT_BRACKET: (f64, f64) = (0.0, 2.0);
/// Probes of the coarse scan that looks for non-monotone verdicts.
pub const MONOTONICITY_PROBES: usize = 16;

/// Numerical settings shared by every stage of a study.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StudyConfig {
    pub step: f64,
    pub horizon: f64,
    pub zeta: f64,
    pub edges: Vec<f64>,
    pub policy: PairPolicy,
    pub pf_tolerance: f64,
    pub pf_max_iter: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            step: DEFAULT_STEP,
            horizon: DEFAULT_HORIZON,
            zeta: DEFAULT_ZETA,
            edges: DEFAULT_EDGES.to_vec(),
            policy: PairPolicy::WorstCase,
            pf_tolerance: crate::powerflow::DEFAULT_TOLERANCE,
            pf_max_iter: crate::powerflow::DEFAULT_MAX_ITER,
        }
    }
}

/// A network prepared for fault studies: power flow, classical
/// initialization, the post-fault reduced network and its envelope.
///
/// The post-fault topology equals the pre-fault one.
#[derive(Debug, Clone)]
pub struct Study {
    pub net: PowerNetwork,
    pub config: StudyConfig,
    pub power_flow: PowerFlowSolution,
    pub init: ClassicalInit,
    pub post_fault: ReducedNetwork,
    envelope: Result<EnvelopeParams>,
}

impl Study {
    pub fn new(net: PowerNetwork, config: StudyConfig) -> Result<Self> {
        if !(config.step > 0.0 && config.horizon > 0.0) {
            return Err(Error::InvalidArgument("step and horizon must be positive".into()));
        }
        if !(config.zeta > 0.0 && config.zeta <= core::f64::consts::PI) {
            return Err(Error::InvalidArgument("zeta must lie in (0, π]".into()));
        }
        let power_flow = solve_power_flow(&net, config.pf_tolerance, config.pf_max_iter)?;
        let init = init_classical(&net, &power_flow)?;
        let post_fault = prefault_reduction(&net, &power_flow, &init)?;
        let envelope = envelope_params(&post_fault, config.policy, &config.edges);
        Ok(Study { net, config, power_flow, init, post_fault, envelope })
    }

    pub fn lambda(&self) -> f64 {
        self.post_fault.lambda
    }

    /// Post-fault envelope, or the reason it could not be built.
    pub fn envelope(&self) -> Result<&EnvelopeParams> {
        self.envelope.as_ref().map_err(Clone::clone)
    }

    pub fn bound_config(&self) -> BoundConfig {
        BoundConfig { zeta: self.config.zeta, horizon: self.config.horizon, ..BoundConfig::default() }
    }

    pub fn fault(&self, bus: usize, clearing_time: f64) -> Result<FaultScenario> {
        FaultScenario::new(&self.net, bus, clearing_time)
    }

    pub fn fault_on(&self, bus: usize) -> Result<ReducedNetwork> {
        faulted_reduction(&self.net, &self.power_flow, &self.init, &self.fault(bus, 0.0)?)
    }

    /// Fault-on trajectory from the pre-fault equilibrium to the clearing instant.
    pub fn fault_on_trajectory(&self, fault_on: &ReducedNetwork, clearing_time: f64) -> Result<Trajectory> {
        let mut traj = integrate_swing(
            fault_on,
            &SwingState::at_rest(&self.init.theta0),
            (0.0, clearing_time),
            self.config.step,
        )?;
        traj.phase = crate::dynamics::Phase::FaultOn;
        Ok(traj)
    }

    /// Analytic bound from the clearing state.
    pub fn bound_from(&self, state: &SwingState) -> Result<BoundCurve> {
        let (d0, rate0, _, _) = state_diameter(&state.theta, &state.speed);
        propagate_with_switching(self.envelope()?, self.lambda(), d0, rate0, &self.bound_config())
    }

    /// Post-fault trajectory over the horizon, optionally stopping once
    /// the diameter reaches ζ.
    pub fn post_fault_trajectory(&self, state: &SwingState, t_c: f64, stop_at_zeta: bool) -> Result<Trajectory> {
        let zeta = self.config.zeta;
        integrate_swing_until(&self.post_fault, state, (t_c, t_c + self.config.horizon), self.config.step, |th, sp| {
            stop_at_zeta && state_diameter(th, sp).0 >= zeta
        })
    }

    /// Full assessment of one clearing time.
    pub fn certify(&self, bus: usize, clearing_time: f64) -> Result<Assessment> {
        let fault = self.fault(bus, clearing_time)?;
        let fault_on = self.fault_on(fault.bus)?;
        let clearing = self.fault_on_trajectory(&fault_on, clearing_time)?.last_state();
        let (d0, rate0, _, _) = state_diameter(&clearing.theta, &clearing.speed);
        let curve = self.bound_from(&clearing)?;
        let numerical = match self.post_fault_trajectory(&clearing, clearing_time, false) {
            Ok(traj) => NumericalResult::from_trajectory(&traj, self.config.zeta),
            Err(Error::NonFinite { time }) => NumericalResult::blown_up(time - clearing_time),
            Err(e) => return Err(e),
        };
        let analytic = AnalyticResult::from_curve(&curve);
        let dominance = numerical.series.as_ref().map(|s| first_swing_dominance(&curve, s, self.config.step));
        Ok(Assessment {
            fault,
            clearing_time,
            lambda: self.lambda(),
            zeta: self.config.zeta,
            d0,
            rate0,
            envelope: self.envelope()?.clone(),
            margin_index: margin_index(self.envelope()?),
            analytic,
            numerical,
            first_swing_margin: dominance,
            curve,
        })
    }

    /// Stability verdict of one mode at one clearing time.
    pub fn is_stable(&self, fault_on: &ReducedNetwork, mode: CctMode, clearing_time: f64) -> Result<bool> {
        let clearing = self.fault_on_trajectory(fault_on, clearing_time)?.last_state();
        match mode {
            CctMode::Analytic => Ok(self.bound_from(&clearing)?.verdict == Verdict::BoundedBelowZeta),
            CctMode::Numerical => match self.post_fault_trajectory(&clearing, clearing_time, true) {
                Ok(traj) => {
                    let last = traj.last_state();
                    Ok(state_diameter(&last.theta, &last.speed).0 < self.config.zeta)
                }
                Err(Error::NonFinite { .. }) => Ok(false),
                Err(e) => Err(e),
            },
        }
    }

    /// Bisection on the clearing time for the largest stable value.
    pub fn estimate_cct(&self, bus: usize, mode: CctMode, bracket: (f64, f64), tolerance: f64) -> Result<CctResult> {
        let (lo0, hi0) = bracket;
        if !(lo0 >= 0.0 && hi0 > lo0 && tolerance > 0.0) {
            return Err(Error::InvalidArgument(alloc::format!("bad bracket {bracket:?} or tolerance {tolerance}")));
        }
        let fault_on = self.fault_on(bus)?;
        let mut log = Vec::new();
        let probe = |t: f64, log: &mut Vec<CctProbe>| -> Result<bool> {
            let stable = self.is_stable(&fault_on, mode, t)?;
            log.push(CctProbe { clearing_time: t, stable });
            Ok(stable)
        };
        if !probe(lo0, &mut log)? {
            return Err(Error::NoMargin { clearing_time: lo0 });
        }
        // coarse scan: a stable probe above an unstable one breaks monotonicity
        let mut non_monotone = None;
        let mut first_unstable: Option<f64> = None;
        for k in 1..=MONOTONICITY_PROBES {
            let t = lo0 + (hi0 - lo0) * k as f64 / MONOTONICITY_PROBES as f64;
            let stable = probe(t, &mut log)?;
            match (stable, first_unstable) {
                (false, None) => first_unstable = Some(t),
                (true, Some(u)) if non_monotone.is_none() => {
                    non_monotone = Some(NonMonotone { unstable_at: u, stable_at: t })
                }
                _ => {}
            }
        }
        let Some(first_unstable) = first_unstable else {
            return Ok(CctResult {
                mode,
                cct: hi0,
                capped: true,
                bracket,
                tolerance,
                probes: log,
                non_monotone,
            });
        };
        let step = (hi0 - lo0) / MONOTONICITY_PROBES as f64;
        let (mut lo, mut hi) = ((first_unstable - step).max(lo0), first_unstable);
        while hi - lo > tolerance {
            let mid = 0.5 * (lo + hi);
            if probe(mid, &mut log)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(CctResult { mode, cct: lo, capped: false, bracket, tolerance, probes: log, non_monotone })
    }

    pub fn margin_index(&self) -> Result<MarginIndex> {
        Ok(margin_index(self.envelope()?))
    }
}

/// Smallest `bound − D` over the shared grid up to the numerical first-swing
/// peak. Grid points past a ζ-crossing of the bound are skipped.
pub fn first_swing_dominance(curve: &BoundCurve, series: &DiameterSeries, step: f64) -> f64 {
    let end = series.first_peak();
    let mut worst = f64::INFINITY;
    for k in 0..=end {
        let t = k as f64 * step;
        match curve.value(t) {
            Some(b) => worst = worst.min(b - series.value[k]),
            // past a ζ-crossing the bound is +∞
            None => break,
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CctMode {
    Analytic,
    Numerical,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AnalyticResult {
    pub verdict: Verdict,
    pub peak: f64,
    pub peak_time: f64,
    pub crossing: Option<f64>,
    pub switches: usize,
    pub first_swing_switches: usize,
}

impl AnalyticResult {
    fn from_curve(curve: &BoundCurve) -> Self {
        AnalyticResult {
            verdict: curve.verdict,
            peak: curve.peak,
            peak_time: curve.peak_time,
            crossing: curve.crossing,
            switches: curve.switches.len(),
            first_swing_switches: curve.first_swing_switches(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct NumericalResult {
    pub stable: bool,
    pub peak: f64,
    pub peak_time: f64,
    /// Time of the first-swing maximum of D (s after clearing).
    pub first_peak_time: f64,
    /// `max |θ̇_i − θ̇_j|` at the end of the horizon (rad/s).
    pub frequency_spread: f64,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub series: Option<DiameterSeries>,
}

impl NumericalResult {
    fn from_trajectory(traj: &Trajectory, zeta: f64) -> Self {
        let series = diameter(traj);
        let (peak_k, peak) =
            series.value.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |a, (k, v)| if v > a.1 { (k, v) } else { a });
        let last = traj.last_state();
        let hi = last.speed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = last.speed.iter().copied().fold(f64::INFINITY, f64::min);
        NumericalResult {
            stable: peak < zeta,
            peak,
            peak_time: peak_k as f64 * traj.step,
            first_peak_time: series.first_peak() as f64 * traj.step,
            frequency_spread: hi - lo,
            series: Some(series),
        }
    }

    fn blown_up(time: f64) -> Self {
        NumericalResult {
            stable: false,
            peak: f64::INFINITY,
            peak_time: time,
            first_peak_time: time,
            frequency_spread: f64::INFINITY,
            series: None,
        }
    }
}

/// Outcome of [`Study::certify`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Assessment {
    pub fault: FaultScenario,
    pub clearing_time: f64,
    pub lambda: f64,
    pub zeta: f64,
    /// Diameter at clearing (rad).
    pub d0: f64,
    /// Diameter rate at clearing (rad/s).
    pub rate0: f64,
    pub envelope: EnvelopeParams,
    pub margin_index: MarginIndex,
    pub analytic: AnalyticResult,
    pub numerical: NumericalResult,
    /// `min(bound − D)` through the numerical first swing.
    pub first_swing_margin: Option<f64>,
    pub curve: BoundCurve,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CctProbe {
    pub clearing_time: f64,
    pub stable: bool,
}

/// A stable clearing time found above an unstable one.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct NonMonotone {
    pub unstable_at: f64,
    pub stable_at: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CctResult {
    pub mode: CctMode,
    pub cct: f64,
    /// No instability found in the bracket; `cct` is its upper end.
    pub capped: bool,
    pub bracket: (f64, f64),
    pub tolerance: f64,
    pub probes: Vec<CctProbe>,
    pub non_monotone: Option<NonMonotone>,
}

/// `μ = L / Γ` of the first envelope interval.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MarginIndex {
    pub mu: f64,
    pub gamma: f64,
    pub amplitude: f64,
}

pub fn margin_index(env: &EnvelopeParams) -> MarginIndex {
    let s = &env.segments[0];
    MarginIndex { mu: s.amplitude / s.gamma, gamma: s.gamma, amplitude: s.amplitude }
}

/// Parameter varied by [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SweepParameter {
    /// Series reactance of the branch between two buses.
    BranchReactance { from: usize, to: usize },
    /// Homogeneous damping ratio λ.
    Lambda,
}

impl SweepParameter {
    pub fn apply(&self, net: &PowerNetwork, value: f64) -> Result<PowerNetwork> {
        match *self {
            SweepParameter::BranchReactance { from, to } => net.with_branch_reactance(from, to, value),
            SweepParameter::Lambda => net.with_damping_ratio(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SweepRow {
    pub value: f64,
    pub mu: Option<f64>,
    pub cct_analytic: Option<f64>,
    pub cct_numerical: Option<f64>,
    pub error: Option<String>,
}

/// Runs the full pipeline for one sweep value.
pub fn sweep_point(
    net: &PowerNetwork,
    bus: usize,
    parameter: SweepParameter,
    value: f64,
    config: &StudyConfig,
) -> SweepRow {
    let mut row = SweepRow { value, mu: None, cct_analytic: None, cct_numerical: None, error: None };
    let study = match parameter.apply(net, value).and_then(|n| Study::new(n, config.clone())) {
        Ok(s) => s,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let mut errors = Vec::new();
    match study.margin_index() {
        Ok(m) => row.mu = Some(m.mu),
        Err(e) => errors.push(e.to_string()),
    }
    for mode in [CctMode::Analytic, CctMode::Numerical] {
        match study.estimate_cct(bus, mode, DEFAULT_CCT_BRACKET, DEFAULT_CCT_TOLERANCE) {
            Ok(r) if mode == CctMode::Analytic => row.cct_analytic = Some(r.cct),
            Ok(r) => row.cct_numerical = Some(r.cct),
            Err(e) => errors.push(alloc::format!("{mode:?}: {e}")),
        }
    }
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    row
}

/// Table of `(value, μ, CCT_analytic, CCT_numerical)`; failures are kept
/// in the row and the sweep goes on.
pub fn sweep(net: &PowerNetwork, bus: usize, parameter: SweepParameter, values: &[f64], config: &StudyConfig) -> Vec<SweepRow> {
    values.iter().map(|&v| sweep_point(net, bus, parameter, v, config)).collect()
}
