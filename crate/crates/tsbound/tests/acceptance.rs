//! One PASS/FAIL line per acceptance criterion.
//!
//! Lines tagged `[reported]` are printed but do not fail the run: they
//! cover absolute reference values that the criteria themselves allow to
//! degrade to an ordering check.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsbound::case::{parse_case, IEEE9};
use tsbound_core::assess::{CctMode, Study, StudyConfig, DEFAULT_CCT_BRACKET, DEFAULT_CCT_TOLERANCE};
use tsbound_core::envelope::{envelope_params, verify_envelope, EnvelopeParams, PairContext, PairPolicy, DEFAULT_EDGES};
use tsbound_core::gronwall::{propagate_with_switching, gronwall_bound, BoundConfig, DampingCase, SegmentOde};
use tsbound_core::linalg::{Lu, Matrix};
use tsbound_core::netmodel::{build_admittance, kron_reduce, kron_reduce_sequential, AdmittanceMatrix, BusKind, Node, PowerNetwork};
use tsbound_core::powerflow::{solve_power_flow, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};
use tsbound_core::Complex64;

#[derive(Default)]
struct Report {
    failed: Vec<String>,
}

impl Report {
    fn check(&mut self, id: &str, ok: bool, detail: impl AsRef<str>) {
        println!("{} {id}: {}", if ok { "PASS" } else { "FAIL" }, detail.as_ref());
        if !ok {
            self.failed.push(id.to_string());
        }
    }

    fn report(&self, id: &str, ok: bool, detail: impl AsRef<str>) {
        println!("{} {id} [reported]: {}", if ok { "PASS" } else { "FAIL" }, detail.as_ref());
    }
}

fn ieee9(lambda: f64) -> PowerNetwork {
    parse_case(IEEE9).unwrap().with_damping_ratio(lambda).unwrap()
}

fn study(net: PowerNetwork) -> Study {
    Study::new(net, StudyConfig::default()).unwrap()
}

fn cct(s: &Study, mode: CctMode) -> (f64, f64) {
    let start = Instant::now();
    let r = s.estimate_cct(1, mode, DEFAULT_CCT_BRACKET, DEFAULT_CCT_TOLERANCE).unwrap();
    assert!(!r.capped);
    (r.cct, start.elapsed().as_secs_f64())
}

fn clearing_times(rep: &mut Report) {
    let mut rows = Vec::new();
    let mut slowest: f64 = 0.0;
    for (lambda, ref_a, ref_n) in [(8.0, 0.66, 0.81), (0.5, 0.22, 0.33)] {
        let s = study(ieee9(lambda));
        let (a, ta) = cct(&s, CctMode::Analytic);
        let (n, tn) = cct(&s, CctMode::Numerical);
        slowest = slowest.max(ta).max(tn);
        rows.push((lambda, a, n, ref_a, ref_n));
    }
    let within = |x: f64, r: f64| (x - r).abs() <= 0.05;
    for &(lambda, a, n, ref_a, ref_n) in &rows {
        rep.report(
            &format!("1 lambda={lambda} analytic"),
            within(a, ref_a),
            format!("CCT {a:.3} s vs {ref_a} ± 0.05"),
        );
        rep.report(
            &format!("1 lambda={lambda} numerical"),
            within(n, ref_n),
            format!("CCT {n:.3} s vs {ref_n} ± 0.05"),
        );
    }
    let (hi, lo) = (rows[0], rows[1]);
    let ordering = hi.1 < hi.2 && lo.1 < lo.2 && hi.1 > lo.1 && hi.2 > lo.2;
    rep.check(
        "1 ordering",
        ordering,
        format!(
            "analytic < numerical ({:.3} < {:.3}, {:.3} < {:.3}); lambda=8 > lambda=0.5 in both modes",
            hi.1, hi.2, lo.1, lo.2
        ),
    );
    rep.check("1 runtime", slowest < 30.0, format!("slowest CCT {slowest:.2} s"));
}

fn first_swing_overlay(rep: &mut Report) {
    for (lambda, tc, switches) in [(8.0, 0.6, 0), (0.5, 0.2, 1)] {
        let a = study(ieee9(lambda)).certify(1, tc).unwrap();
        let margin = a.first_swing_margin.unwrap_or(f64::NEG_INFINITY);
        rep.check(
            &format!("2 lambda={lambda} tc={tc} dominance"),
            margin >= -1e-12,
            format!("min(bound - D) through the first swing = {margin:.3e}"),
        );
        rep.check(
            &format!("2 lambda={lambda} tc={tc} switches"),
            a.analytic.first_swing_switches == switches,
            format!("{} first-swing switch(es), expected {switches}", a.analytic.first_swing_switches),
        );
    }
}

fn reactance_sweep(rep: &mut Report) {
    let base = ieee9(0.5);
    let mut mus = Vec::new();
    let mut ccts = Vec::new();
    for (x, reference) in [(0.16, 0.33), (0.12, 0.34), (0.08, 0.35)] {
        let s = study(base.with_branch_reactance(5, 7, x).unwrap());
        let mu = s.margin_index().unwrap().mu;
        let (n, _) = cct(&s, CctMode::Numerical);
        println!("     x_57 = {x}: mu = {mu:.3}, numerical CCT = {n:.3} s");
        rep.report(&format!("3 x={x} numerical"), (n - reference).abs() <= 0.03, format!("CCT {n:.3} s vs {reference} ± 0.03"));
        mus.push(mu);
        ccts.push(n);
    }
    rep.check("3 mu", mus.windows(2).all(|w| w[1] > w[0]), format!("mu strictly increasing: {mus:.3?}"));
    rep.check("3 cct", ccts.windows(2).all(|w| w[1] >= w[0]), format!("numerical CCT non-decreasing: {ccts:.3?}"));
}

/// RK4 of `a ÿ + b ẏ + c y + d = −s(t)`, visiting `(t, y)` until `visit` says stop.
fn rk4_linear(ode: &SegmentOde, y0: f64, y1: f64, t_end: f64, h: f64, slack: impl Fn(f64) -> f64, mut visit: impl FnMut(f64, f64) -> bool) {
    let f = |t: f64, y: f64, v: f64| (v, -(ode.b * v + ode.c * y + ode.d + slack(t)) / ode.a);
    let (mut y, mut v) = (y0, y1);
    if !visit(0.0, y) {
        return;
    }
    for k in 0..(t_end / h).round() as usize {
        let t = k as f64 * h;
        let (k1y, k1v) = f(t, y, v);
        let (k2y, k2v) = f(t + h / 2.0, y + h / 2.0 * k1y, v + h / 2.0 * k1v);
        let (k3y, k3v) = f(t + h / 2.0, y + h / 2.0 * k2y, v + h / 2.0 * k2v);
        let (k4y, k4v) = f(t + h, y + h * k3y, v + h * k3v);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if !visit((k + 1) as f64 * h, y) {
            return;
        }
    }
}

fn closed_forms(rep: &mut Report) {
    let start = Instant::now();
    let cases = [
        ((1.0, 5.0, 2.0, -3.0, 0.5, 1.0), DampingCase::Overdamped),
        ((2.0, 4.0, 2.0, -1.0, 0.3, 2.0), DampingCase::Critical),
        ((1.5, 0.0, 0.0, -0.3, 1.0, 0.5), DampingCase::Undamped),
    ];
    for ((a, b, c, d, y0, y1), case) in cases {
        let ode = SegmentOde::new(a, b, c, d).unwrap();
        let form = gronwall_bound(&ode, y0, y1).unwrap();
        let mut worst: f64 = 0.0;
        rk4_linear(&ode, y0, y1, 10.0, 1e-3, |_| 0.0, |t, y| {
            worst = worst.max((form.value(t) - y).abs() / (1.0 + y.abs()));
            true
        });
        rep.check(
            &format!("4 {case:?}"),
            ode.case == case && worst < 1e-8,
            format!("max relative gap to the equality ODE on [0, 10] = {worst:.2e}"),
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations = 0;
    for draw in 0..200 {
        let a = rng.gen_range(0.5..2.0);
        let b = if draw % 3 == 0 { 0.0 } else { rng.gen_range(0.05..4.0) };
        let c = if b == 0.0 { rng.gen_range(0.0..5.0) } else { rng.gen_range(-2.0..8.0) };
        let d = rng.gen_range(-5.0..5.0);
        let (y0, y1) = (rng.gen_range(0.0..2.0), rng.gen_range(-2.0..2.0));
        let terms: Vec<(f64, f64, f64)> =
            (0..3).map(|_| (rng.gen_range(0.0..3.0), rng.gen_range(0.1..5.0), rng.gen_range(0.0..6.3))).collect();
        let slack = |t: f64| terms.iter().map(|&(amp, w, ph)| amp * (1.0 + (w * t + ph).sin())).sum::<f64>();
        let ode = SegmentOde::new(a, b, c, d).unwrap();
        let form = gronwall_bound(&ode, y0, y1).unwrap();
        rk4_linear(&ode, y0, y1, 4.0, 1e-3, slack, |t, y| {
            if y < 0.0 {
                return false;
            }
            let bound = form.value(t);
            if y > bound + 1e-9 * (1.0 + bound.abs()) {
                violations += 1;
                return false;
            }
            true
        });
    }
    rep.check("4 soundness", violations == 0, format!("{violations} of 200 slack trajectories exceed the bound"));
    let elapsed = start.elapsed().as_secs_f64();
    rep.check("4 runtime", elapsed < 10.0, format!("{elapsed:.2} s"));
}

const TWO_MACHINES: &str = "\
[system]
base_mva = 100
freq_hz = 60
[bus]
1 slack 1.0 0 0
2 pv    1.0 0 0
[branch]
1 2 0.02 0.25 0
[gen]
1 0.0 10.0 5.0 0.3
2 0.6  4.0 2.0 0.25
";

fn envelope_dominance(rep: &mut Report) {
    let s = study(ieee9(0.5));
    let env = s.envelope().unwrap();
    let dom = verify_envelope(env, &s.post_fault, 10_000, -1e-9, 5).unwrap();
    let samples: usize = dom.segments.iter().map(|d| d.samples).sum();
    rep.check(
        "5 nine-bus",
        dom.violations() == 0 && dom.min_margin() >= -1e-9,
        format!("{} violations in {samples} samples, min margin {:.3e}", dom.violations(), dom.min_margin()),
    );

    let two = study(parse_case(TWO_MACHINES).unwrap());
    let params = envelope_params(&two.post_fault, PairPolicy::Pair { max: 1, min: 0 }, &DEFAULT_EDGES).unwrap();
    let ctx = PairContext::new(&two.post_fault, 1, 0).unwrap();
    let mut gap: f64 = 0.0;
    for seg in &params.segments {
        for k in 0..=1000 {
            let d = seg.lo + (seg.hi - seg.lo) * k as f64 / 1000.0;
            gap = gap.max((seg.value(d) - ctx.rhs_bound(d)).abs());
        }
    }
    let exact = params.segments.iter().all(|s| s.exact);
    rep.check("5 two-machine", exact && gap < 1e-12, format!("exact = {exact}, max gap {gap:.2e}"));
}

/// RK4 of `γ̈ + λγ̇ = Γ_k − L_k sin(γ + Φ_k)` with the interval picked by γ.
fn comparison(env: &EnvelopeParams, lambda: f64, d0: f64, r0: f64, t_end: f64, h: f64) -> Vec<(f64, f64, f64)> {
    let acc = |y: f64, v: f64| {
        let s = &env.segments[env.segment_for(y.clamp(0.0, PI)).unwrap()];
        s.gamma - s.amplitude * (y + s.phase).sin() - lambda * v
    };
    let (mut y, mut v) = (d0, r0);
    let mut out = vec![(0.0, y, v)];
    for k in 0..(t_end / h).round() as usize {
        let (k1y, k1v) = (v, acc(y, v));
        let (k2y, k2v) = (v + h / 2.0 * k1v, acc(y + h / 2.0 * k1y, v + h / 2.0 * k1v));
        let (k3y, k3v) = (v + h / 2.0 * k2v, acc(y + h / 2.0 * k2y, v + h / 2.0 * k2v));
        let (k4y, k4v) = (v + h * k3v, acc(y + h * k3y, v + h * k3v));
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        out.push(((k + 1) as f64 * h, y, v));
    }
    out
}

fn comparison_dominance(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut accepted, mut skipped, mut worst) = (0, 0, f64::INFINITY);
    while accepted < 50 {
        let l = rng.gen_range(20.0..150.0);
        let gamma = rng.gen_range(0.1..0.6) * l;
        let phi = rng.gen_range(-0.15..0.15);
        let lambda = rng.gen_range(0.2..10.0);
        let d0 = rng.gen_range(0.0..1.4);
        let r0 = rng.gen_range(0.0..8.0);
        let env = EnvelopeParams::from_segments(&[(0.0, PI / 2.0, gamma, l, phi), (PI / 2.0, PI, gamma, l, phi)]).unwrap();
        let curve = propagate_with_switching(&env, lambda, d0, r0, &BoundConfig::default()).unwrap();
        let path = comparison(&env, lambda, d0, r0, 5.0, 1e-4);
        // draws where the comparison solution reaches the edge faster than
        // its initial rate fall outside the switching rule's premise
        if path.iter().any(|&(_, y, v)| (PI / 2.0..PI / 2.0 + 0.05).contains(&y) && v > r0) {
            skipped += 1;
            continue;
        }
        accepted += 1;
        let stop = curve.crossing.unwrap_or(5.0);
        for &(t, y, _) in &path {
            if t > stop || y < 0.0 {
                break;
            }
            worst = worst.min(curve.value(t).unwrap() - y);
        }
    }
    rep.check(
        "6",
        worst >= -1e-6,
        format!("min(bound - comparison) = {worst:.3e} over 50 draws ({skipped} draws outside the premise skipped)"),
    );
}

fn random_admittance(rng: &mut ChaCha8Rng, n: usize) -> AdmittanceMatrix {
    let mut y = Matrix::zeros(n, n);
    let mut add = |i: usize, j: usize, g: Complex64| {
        y[(i, i)] += g;
        y[(j, j)] += g;
        y[(i, j)] -= g;
        y[(j, i)] -= g;
    };
    for i in 1..n {
        add(i - 1, i, Complex64::new(rng.gen_range(0.1..2.0), rng.gen_range(-10.0..-1.0)));
    }
    for _ in 0..n {
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if i != j {
            add(i, j, Complex64::new(rng.gen_range(0.0..1.0), rng.gen_range(-5.0..-0.5)));
        }
    }
    for i in 0..n {
        y[(i, i)] += Complex64::new(rng.gen_range(0.0..0.5), rng.gen_range(-0.2..0.2));
    }
    AdmittanceMatrix::new((0..n).map(Node::Bus).collect(), y).unwrap()
}

fn kron_and_power_flow(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let keep_idx = [0usize, 2, 5];
    let elim_idx = [1usize, 3, 4];
    let keep: Vec<Node> = keep_idx.iter().map(|&i| Node::Bus(i)).collect();
    let (mut worst_terminal, mut worst_order) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let y = random_admittance(&mut rng, 6);
        let red = kron_reduce(&y, &keep).unwrap();
        let y_ll = y.y.select(&elim_idx, &elim_idx);
        let y_lg = y.y.select(&elim_idx, &keep_idx);
        let lu = Lu::factor(&y_ll).unwrap();
        for _ in 0..20 {
            let v: Vec<Complex64> =
                (0..3).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            // floating eliminated nodes: Y_ll v_l = −Y_lg v_g
            let rhs: Vec<Complex64> = y_lg.mul_vec(&v).into_iter().map(|z| -z).collect();
            let v_l = lu.solve(&rhs);
            let mut full = vec![Complex64::new(0.0, 0.0); 6];
            for (k, &i) in keep_idx.iter().enumerate() {
                full[i] = v[k];
            }
            for (k, &i) in elim_idx.iter().enumerate() {
                full[i] = v_l[k];
            }
            let currents = y.y.mul_vec(&full);
            let reduced = red.y.mul_vec(&v);
            let scale = keep_idx.iter().map(|&i| currents[i].norm()).fold(1e-300, f64::max);
            for (k, &i) in keep_idx.iter().enumerate() {
                worst_terminal = worst_terminal.max((reduced[k] - currents[i]).norm() / scale);
            }
        }
        let seq = kron_reduce_sequential(&y, &[Node::Bus(4), Node::Bus(1), Node::Bus(3)]).unwrap();
        let seq = kron_reduce(&seq, &keep).unwrap();
        worst_order = worst_order.max(seq.y.max_abs_diff(&red.y));
    }
    rep.check("7 kron terminal", worst_terminal < 1e-10, format!("max relative current error {worst_terminal:.2e}"));
    rep.check("7 kron order", worst_order < 1e-10, format!("sequential vs block {worst_order:.2e}"));

    let net = ieee9(0.5);
    let pf = solve_power_flow(&net, DEFAULT_TOLERANCE, DEFAULT_MAX_ITER).unwrap();
    // with loads as shunts the bus power balance is the generator output alone
    let y = build_admittance(&net, &pf.voltage).unwrap();
    let currents = y.y.mul_vec(&pf.voltage);
    let mut worst: f64 = 0.0;
    for (k, bus) in net.buses().iter().enumerate() {
        let s = pf.voltage[k] * currents[k].conj();
        let gen = match net.generator_at(k) {
            Some(_) => pf.generation(&net, k),
            None => Complex64::new(0.0, 0.0),
        };
        worst = worst.max((s.re - gen.re).abs());
        // reactive balance is free at voltage-controlled buses
        if bus.kind == BusKind::Pq || bus.kind == BusKind::Slack {
            worst = worst.max((s.im - gen.im).abs());
        }
        if bus.kind == BusKind::Pv {
            let p_mech = net.generators()[net.generator_at(k).unwrap()].p_mech;
            worst = worst.max((gen.re - p_mech).abs());
        }
    }
    rep.check("7 power flow", worst < 1e-8, format!("max bus residual {worst:.2e} p.u."));
}

fn main() {
    let mut rep = Report::default();
    clearing_times(&mut rep);
    first_swing_overlay(&mut rep);
    reactance_sweep(&mut rep);
    closed_forms(&mut rep);
    envelope_dominance(&mut rep);
    comparison_dominance(&mut rep);
    kron_and_power_flow(&mut rep);
    if rep.failed.is_empty() {
        println!("acceptance: all gated checks pass");
    } else {
        println!("acceptance: failed {:?}", rep.failed);
        std::process::exit(1);
    }
}
