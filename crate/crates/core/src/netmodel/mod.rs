//! Static and dynamic network data, admittance matrices and Kron reduction.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

mod admittance;
mod kron;
mod reduced;

pub use admittance::{augment_generators, build_admittance, AdmittanceMatrix, Node};
pub use kron::{kron_reduce, kron_reduce_sequential};
pub use reduced::{derive_coefficients, Machine, ReducedNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Bus {
    pub id: usize,
    pub kind: BusKind,
    /// Voltage magnitude setpoint (p.u.); ignored for PQ buses.
    pub v_set: f64,
    pub p_load: f64,
    pub q_load: f64,
}

/// A π-model branch. `b` is the total line charging.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub r: f64,
    pub x: f64,
    pub b: f64,
}

/// Classical-model generator data on the system base.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Generator {
    pub bus: usize,
    /// Scheduled mechanical power (p.u.). For the slack machine the
    /// power-flow result replaces it.
    pub p_mech: f64,
    /// Inertia constant `M = 2H` (s).
    pub m: f64,
    /// Damping constant `D` (same time base as `m`).
    pub d: f64,
    /// Transient reactance `x'_d` (p.u.).
    pub xd_prime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SystemBase {
    pub base_mva: f64,
    pub freq_hz: f64,
}

impl SystemBase {
    /// Reference angular frequency `ω_R = 2π f` (rad/s).
    pub fn omega_r(&self) -> f64 {
        2.0 * core::f64::consts::PI * self.freq_hz
    }
}

/// A validated network: unique bus ids, one slack, consistent references,
/// positive inertia and transient reactance, at most one machine per bus.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PowerNetwork {
    system: SystemBase,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    generators: Vec<Generator>,
}

impl PowerNetwork {
    pub fn new(
        system: SystemBase,
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        generators: Vec<Generator>,
    ) -> Result<Self> {
        let net = PowerNetwork { system, buses, branches, generators };
        net.validate()?;
        Ok(net)
    }

    fn validate(&self) -> Result<()> {
        let invalid = |msg| Err(Error::InvalidNetwork(msg));
        if !(self.system.base_mva > 0.0) || !(self.system.freq_hz > 0.0) {
            return invalid(format!(
                "base_mva and freq_hz must be positive (got {}, {})",
                self.system.base_mva, self.system.freq_hz
            ));
        }
        if self.buses.is_empty() {
            return invalid("network has no buses".into());
        }
        for (k, bus) in self.buses.iter().enumerate() {
            if self.buses[..k].iter().any(|b| b.id == bus.id) {
                return invalid(format!("duplicate bus id {}", bus.id));
            }
            let finite = [bus.v_set, bus.p_load, bus.q_load].iter().all(|v| v.is_finite());
            if !finite {
                return invalid(format!("bus {} has non-finite data", bus.id));
            }
            if bus.kind != BusKind::Pq && !(bus.v_set > 0.0) {
                return invalid(format!("bus {} needs a positive voltage setpoint", bus.id));
            }
        }
        let slacks = self.buses.iter().filter(|b| b.kind == BusKind::Slack).count();
        if slacks != 1 {
            return invalid(format!("expected exactly one slack bus, found {slacks}"));
        }
        for br in &self.branches {
            for end in [br.from, br.to] {
                if self.bus_index(end).is_none() {
                    return invalid(format!("branch {}-{} references unknown bus {end}", br.from, br.to));
                }
            }
            if br.from == br.to {
                return invalid(format!("branch {}-{} is a self loop", br.from, br.to));
            }
            if ![br.r, br.x, br.b].iter().all(|v| v.is_finite()) {
                return invalid(format!("branch {}-{} has non-finite data", br.from, br.to));
            }
        }
        for (k, g) in self.generators.iter().enumerate() {
            if self.bus_index(g.bus).is_none() {
                return invalid(format!("generator {} references unknown bus {}", k + 1, g.bus));
            }
            if self.generators[..k].iter().any(|o| o.bus == g.bus) {
                return invalid(format!("more than one generator at bus {}", g.bus));
            }
            if !(g.m > 0.0) {
                return invalid(format!("generator at bus {} has non-positive inertia M = {}", g.bus, g.m));
            }
            if !(g.xd_prime > 0.0) {
                return invalid(format!(
                    "generator at bus {} has non-positive transient reactance x'd = {}",
                    g.bus, g.xd_prime
                ));
            }
            if !(g.d.is_finite() && g.p_mech.is_finite()) || g.d < 0.0 {
                return invalid(format!("generator at bus {} has invalid damping or power", g.bus));
            }
        }
        for bus in &self.buses {
            let has_gen = self.generators.iter().any(|g| g.bus == bus.id);
            if bus.kind != BusKind::Pq && !has_gen {
                return invalid(format!("{:?} bus {} carries no generator", bus.kind, bus.id));
            }
        }
        Ok(())
    }

    pub fn system(&self) -> SystemBase {
        self.system
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn omega_r(&self) -> f64 {
        self.system.omega_r()
    }

    /// Position of a bus id in [`buses`](Self::buses).
    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn slack_index(&self) -> usize {
        self.buses.iter().position(|b| b.kind == BusKind::Slack).expect("validated")
    }

    /// Generator connected to the bus at position `bus_index`, if any.
    pub fn generator_at(&self, bus_index: usize) -> Option<usize> {
        let id = self.buses[bus_index].id;
        self.generators.iter().position(|g| g.bus == id)
    }

    /// Copy with the series reactance of every `from`-`to` branch (either
    /// orientation) replaced.
    pub fn with_branch_reactance(&self, from: usize, to: usize, x: f64) -> Result<Self> {
        let mut out = self.clone();
        let mut hits = 0;
        for br in out.branches.iter_mut() {
            if (br.from == from && br.to == to) || (br.from == to && br.to == from) {
                br.x = x;
                hits += 1;
            }
        }
        if hits == 0 {
            return Err(Error::InvalidArgument(format!("no branch {from}-{to}")));
        }
        out.validate()?;
        Ok(out)
    }

    /// Copy with homogeneous damping `D_i = λ M_i`.
    pub fn with_damping_ratio(&self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("damping ratio must be non-negative, got {lambda}")));
        }
        let mut out = self.clone();
        for g in out.generators.iter_mut() {
            g.d = lambda * g.m;
        }
        Ok(out)
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use alloc::vec;

    /// Anderson-Fouad WSCC 9-bus system with classical machine data.
    pub fn ieee9(lambda: f64) -> PowerNetwork {
        let bus = |id, kind, v_set, p_load, q_load| Bus { id, kind, v_set, p_load, q_load };
        let br = |from, to, r, x, b| Branch { from, to, r, x, b };
        let gen = |bus, p_mech, m: f64, xd_prime| Generator { bus, p_mech, m, d: lambda * m, xd_prime };
        PowerNetwork::new(
            SystemBase { base_mva: 100.0, freq_hz: 60.0 },
            vec![
                bus(1, BusKind::Slack, 1.04, 0.0, 0.0),
                bus(2, BusKind::Pv, 1.025, 0.0, 0.0),
                bus(3, BusKind::Pv, 1.025, 0.0, 0.0),
                bus(4, BusKind::Pq, 1.0, 0.0, 0.0),
                bus(5, BusKind::Pq, 1.0, 1.25, 0.5),
                bus(6, BusKind::Pq, 1.0, 0.9, 0.3),
                bus(7, BusKind::Pq, 1.0, 0.0, 0.0),
                bus(8, BusKind::Pq, 1.0, 1.0, 0.35),
                bus(9, BusKind::Pq, 1.0, 0.0, 0.0),
            ],
            vec![
                br(1, 4, 0.0, 0.0576, 0.0),
                br(4, 5, 0.010, 0.085, 0.176),
                br(4, 6, 0.017, 0.092, 0.158),
                br(5, 7, 0.032, 0.161, 0.306),
                br(6, 9, 0.039, 0.170, 0.358),
                br(7, 8, 0.0085, 0.072, 0.149),
                br(8, 9, 0.0119, 0.1008, 0.209),
                br(2, 7, 0.0, 0.0625, 0.0),
                br(3, 9, 0.0, 0.0586, 0.0),
            ],
            vec![gen(1, 0.716, 47.28, 0.0608), gen(2, 1.63, 12.8, 0.1198), gen(3, 0.85, 6.02, 0.1813)],
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn two_bus() -> (SystemBase, Vec<Bus>, Vec<Branch>, Vec<Generator>) {
        (
            SystemBase { base_mva: 100.0, freq_hz: 60.0 },
            vec![
                Bus { id: 1, kind: BusKind::Slack, v_set: 1.0, p_load: 0.0, q_load: 0.0 },
                Bus { id: 2, kind: BusKind::Pv, v_set: 1.0, p_load: 0.0, q_load: 0.0 },
            ],
            vec![Branch { from: 1, to: 2, r: 0.0, x: 0.1, b: 0.0 }],
            vec![
                Generator { bus: 1, p_mech: 0.0, m: 10.0, d: 1.0, xd_prime: 0.2 },
                Generator { bus: 2, p_mech: 0.0, m: 5.0, d: 0.5, xd_prime: 0.2 },
            ],
        )
    }

    #[test]
    fn minimal_two_bus_is_valid() {
        let (s, b, br, g) = two_bus();
        let net = PowerNetwork::new(s, b, br, g).unwrap();
        assert_eq!(net.buses().len(), 2);
        assert_eq!(net.generators().len(), 2);
        assert!(net.buses().iter().all(|b| b.p_load == 0.0 && b.q_load == 0.0));
    }

    #[test]
    fn rejects_broken_invariants() {
        let (s, mut b, br, g) = two_bus();
        b[1].id = 1;
        assert!(PowerNetwork::new(s, b, br.clone(), g.clone()).is_err());

        let (s, mut b, br, g) = two_bus();
        b[1].kind = BusKind::Slack;
        assert!(PowerNetwork::new(s, b, br, g).is_err());

        let (s, b, mut br, g) = two_bus();
        br[0].to = 7;
        assert!(PowerNetwork::new(s, b, br, g).is_err());

        let (s, b, br, mut g) = two_bus();
        g[0].m = 0.0;
        assert!(PowerNetwork::new(s, b, br, g).is_err());

        let (s, b, br, mut g) = two_bus();
        g[1].xd_prime = -0.1;
        assert!(PowerNetwork::new(s, b, br, g).is_err());

        let (s, b, br, mut g) = two_bus();
        g[1].bus = 9;
        assert!(PowerNetwork::new(s, b, br, g).is_err());
    }

    #[test]
    fn reactance_edit_touches_only_that_branch() {
        let net = fixtures::ieee9(0.5);
        let edited = net.with_branch_reactance(5, 7, 0.12).unwrap();
        for (a, b) in net.branches().iter().zip(edited.branches()) {
            if (a.from, a.to) == (5, 7) {
                assert_eq!(b.x, 0.12);
                assert_eq!((a.r, a.b), (b.r, b.b));
            } else {
                assert_eq!(a, b);
            }
        }
        assert_eq!(net.buses(), edited.buses());
        assert_eq!(net.generators(), edited.generators());
        assert!(net.with_branch_reactance(1, 9, 0.1).is_err());
    }

    #[test]
    fn ieee9_inertia() {
        let net = fixtures::ieee9(0.5);
        let m: Vec<f64> = net.generators().iter().map(|g| g.m).collect();
        assert_eq!(m, vec![47.28, 12.8, 6.02]);
    }
}
