use tsbound_core::assess::{CctMode, Study, StudyConfig};
use tsbound_core::gronwall::Verdict;
use tsbound_core::netmodel::{Branch, Bus, BusKind, Generator, PowerNetwork, SystemBase};
use tsbound_core::Error;

fn machine_pair(lambda: f64, transfer: f64) -> PowerNetwork {
    let bus = |id, kind, p_load| Bus { id, kind, v_set: 1.0, p_load, q_load: 0.0 };
    PowerNetwork::new(
        SystemBase { base_mva: 100.0, freq_hz: 60.0 },
        vec![bus(1, BusKind::Slack, 0.0), bus(2, BusKind::Pv, 0.0), bus(3, BusKind::Pq, 0.2)],
        vec![
            Branch { from: 1, to: 3, r: 0.01, x: 0.1, b: 0.0 },
            Branch { from: 2, to: 3, r: 0.01, x: 0.1, b: 0.0 },
        ],
        vec![
            Generator { bus: 1, p_mech: 0.0, m: 10.0, d: lambda * 10.0, xd_prime: 0.2 },
            Generator { bus: 2, p_mech: transfer, m: 5.0, d: lambda * 5.0, xd_prime: 0.2 },
        ],
    )
    .unwrap()
}

#[test]
fn short_fault_is_certified_by_both_modes() {
    let study = Study::new(machine_pair(1.0, 0.5), StudyConfig::default()).unwrap();
    let a = study.certify(3, 0.05).unwrap();
    assert_eq!(a.analytic.verdict, Verdict::BoundedBelowZeta);
    assert!(a.numerical.stable);
    assert!(a.first_swing_margin.unwrap() >= -1e-12);
    assert!(a.margin_index.mu > 0.0);
}

#[test]
fn analytic_cct_never_exceeds_numerical() {
    let study = Study::new(machine_pair(1.0, 0.5), StudyConfig::default()).unwrap();
    let an = study.estimate_cct(3, CctMode::Analytic, (0.0, 2.0), 0.005).unwrap();
    let nu = study.estimate_cct(3, CctMode::Numerical, (0.0, 2.0), 0.005).unwrap();
    assert!(!nu.capped);
    assert!(an.cct <= nu.cct, "analytic {} numerical {}", an.cct, nu.cct);
}

#[test]
fn unknown_fault_bus_is_rejected() {
    let study = Study::new(machine_pair(1.0, 0.5), StudyConfig::default()).unwrap();
    assert!(matches!(study.certify(9, 0.1), Err(Error::InvalidArgument(_))));
}
