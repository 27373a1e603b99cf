//! Sinusoidal upper envelope `Γ − L·sin(D + Φ)` of the right-hand side of
//! the rotor-angle-diameter dynamics, built per D-interval.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

#[allow(unused_imports)] // float methods come from std under cfg(test)
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{Lu, Matrix};
use crate::netmodel::ReducedNetwork;
use crate::{Error, Result};

/// Interval edges in D shared with the two linearization segments.
pub const DEFAULT_EDGES: [f64; 3] = [0.0, FRAC_PI_2, PI];
/// D-grid spacing used by the dominating fit.
pub const DEFAULT_GRID: f64 = 1e-3;

/// Which extreme-machine pairs the envelope must cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PairPolicy {
    /// Every ordered pair `(M, m)`, `M ≠ m`.
    #[default]
    WorstCase,
    /// A single pair, for diagnostics.
    Pair { max: usize, min: usize },
}

impl PairPolicy {
    fn pairs(self, n: usize) -> Vec<(usize, usize)> {
        match self {
            PairPolicy::WorstCase => (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect(),
            PairPolicy::Pair { max, min } => alloc::vec![(max, min)],
        }
    }
}

/// The machines holding the largest (`max`) and smallest (`min`) angle.
#[derive(Debug, Clone, Copy)]
pub struct PairContext<'a> {
    net: &'a ReducedNetwork,
    pub max: usize,
    pub min: usize,
}

impl<'a> PairContext<'a> {
    pub fn new(net: &'a ReducedNetwork, max: usize, min: usize) -> Result<Self> {
        let n = net.n();
        if max >= n || min >= n || max == min {
            return Err(Error::InvalidArgument(alloc::format!("invalid machine pair ({max}, {min}) for n = {n}")));
        }
        Ok(PairContext { net, max, min })
    }

    /// `Ω_M − Ω_m`.
    pub fn d_omega(&self) -> f64 {
        self.net.omega[self.max] - self.net.omega[self.min]
    }

    /// `f_j(x) = a_Mj sin(x − D + α_Mj) − a_mj sin(x + α_mj)` with `x = θ_j − θ_m`.
    pub fn fj(&self, j: usize, x: f64, d: f64) -> f64 {
        let (a, al) = (&self.net.a, &self.net.alpha);
        a[(self.max, j)] * (x - d + al[(self.max, j)]).sin() - a[(self.min, j)] * (x + al[(self.min, j)]).sin()
    }

    /// Terms of the right-hand side that involve only `M` and `m`.
    pub fn pair_terms(&self, d: f64) -> f64 {
        let (a, al) = (&self.net.a, &self.net.alpha);
        let (hi, lo) = (self.max, self.min);
        self.d_omega() + a[(hi, lo)] * (al[(hi, lo)] - d).sin() - a[(lo, hi)] * (d + al[(lo, hi)]).sin()
    }

    /// `K₀ + K_s sin D + K_c cos D` form of [`Self::pair_terms`].
    pub fn pair_terms_coefficients(&self) -> [f64; 3] {
        let (a, al) = (&self.net.a, &self.net.alpha);
        let (hi, lo) = (self.max, self.min);
        let (amm, amm_al) = (a[(hi, lo)], al[(hi, lo)]);
        let (amr, amr_al) = (a[(lo, hi)], al[(lo, hi)]);
        [
            self.d_omega(),
            -amm * amm_al.cos() - amr * amr_al.cos(),
            amm * amm_al.sin() - amr * amr_al.sin(),
        ]
    }

    /// Upper bound of the exact right-hand side over every configuration
    /// with diameter `d` realized by this pair.
    pub fn rhs_bound(&self, d: f64) -> f64 {
        let mut sum = self.pair_terms(d);
        for j in 0..self.net.n() {
            if j != self.max && j != self.min {
                sum += fj_max(d, j, self);
            }
        }
        sum
    }

    /// Exact right-hand side `Ω_M − Ω_m + Σ_j (...)` for a full angle vector
    /// in which this pair holds the extremes.
    pub fn exact_rhs(&self, theta: &[f64]) -> f64 {
        self.net.acceleration(theta, self.max) - self.net.acceleration(theta, self.min)
    }
}

/// Maximum of `f_j(x)` over `x ∈ [0, D]`.
///
/// `f_j` is a single sinusoid `P sin x + Q cos x` in `x`, so the maximum sits
/// at an endpoint or at the interior critical point.
pub fn fj_max(d: f64, j: usize, ctx: &PairContext) -> f64 {
    let (a, al) = (&ctx.net.a, &ctx.net.alpha);
    let (amj, amj_al) = (a[(ctx.max, j)], al[(ctx.max, j)]);
    let (anj, anj_al) = (a[(ctx.min, j)], al[(ctx.min, j)]);
    let p = amj * (amj_al - d).cos() - anj * anj_al.cos();
    let q = amj * (amj_al - d).sin() - anj * anj_al.sin();
    let at = |x: f64| p * x.sin() + q * x.cos();
    let mut best = at(0.0).max(at(d));
    let amp = p.hypot(q);
    if amp > 0.0 {
        let x_star = (FRAC_PI_2 - q.atan2(p)).rem_euclid(2.0 * PI);
        if x_star <= d {
            best = best.max(amp);
        }
    }
    best
}

/// Envelope record on one D-interval.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EnvelopeSegment {
    pub lo: f64,
    pub hi: f64,
    /// Γ (rad/s²).
    pub gamma: f64,
    /// L (rad/s²).
    pub amplitude: f64,
    /// Φ (rad).
    pub phase: f64,
    /// Largest gap between the envelope and the bound it covers, on the fit grid.
    pub fit_gap: f64,
    /// True when the envelope equals the covered bound identically.
    pub exact: bool,
}

impl EnvelopeSegment {
    /// `Γ − L sin(D + Φ)`.
    pub fn value(&self, d: f64) -> f64 {
        self.gamma - self.amplitude * (d + self.phase).sin()
    }

    fn from_coefficients(lo: f64, hi: f64, k: [f64; 3], fit_gap: f64, exact: bool) -> Result<Self> {
        let [k0, ks, kc] = k;
        let amplitude = ks.hypot(kc);
        // K_s sin D + K_c cos D = −L sin(D + Φ)
        let phase = (-kc).atan2(-ks);
        if !(k0 > 0.0) || !(amplitude > 0.0) {
            return Err(Error::EnvelopeInvalid { interval: (lo, hi), gamma: k0, amplitude });
        }
        Ok(EnvelopeSegment { lo, hi, gamma: k0, amplitude, phase, fit_gap, exact })
    }
}

/// Per-interval `(Γ, L, Φ)` covering `D ∈ [edges[0], edges[last]]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EnvelopeParams {
    pub policy: PairPolicy,
    pub segments: Vec<EnvelopeSegment>,
}

impl EnvelopeParams {
    /// Builds params from explicit `(lo, hi, Γ, L, Φ)` records.
    pub fn from_segments(records: &[(f64, f64, f64, f64, f64)]) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InvalidArgument("at least one envelope segment is required".into()));
        }
        let mut segments = Vec::with_capacity(records.len());
        for (k, &(lo, hi, gamma, amplitude, phase)) in records.iter().enumerate() {
            if !(lo < hi) || (k > 0 && lo != records[k - 1].1) {
                return Err(Error::InvalidArgument("envelope intervals must be contiguous and increasing".into()));
            }
            if !(gamma > 0.0) || !(amplitude > 0.0) {
                return Err(Error::EnvelopeInvalid { interval: (lo, hi), gamma, amplitude });
            }
            segments.push(EnvelopeSegment { lo, hi, gamma, amplitude, phase, fit_gap: 0.0, exact: false });
        }
        Ok(EnvelopeParams { policy: PairPolicy::WorstCase, segments })
    }

    pub fn edges(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.segments.iter().map(|s| s.lo).collect();
        e.push(self.segments.last().map_or(0.0, |s| s.hi));
        e
    }

    /// Index of the interval containing `d`; the last interval is closed.
    pub fn segment_for(&self, d: f64) -> Option<usize> {
        let last = self.segments.len() - 1;
        self.segments
            .iter()
            .position(|s| d >= s.lo && d < s.hi)
            .or_else(|| (d == self.segments[last].hi).then_some(last))
    }

    pub fn value(&self, d: f64) -> Option<f64> {
        self.segment_for(d).map(|k| self.segments[k].value(d))
    }
}

fn grid(lo: f64, hi: f64, h: f64) -> Vec<f64> {
    let n = ((hi - lo) / h).ceil().max(1.0) as usize;
    (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}

/// Minimax fit of `K₀ + K_s sin D + K_c cos D` to `(xs, ys)` by Lawson's
/// iteratively reweighted least squares.
fn minimax_sinusoid(xs: &[f64], ys: &[f64]) -> [f64; 3] {
    let basis = |x: f64| [1.0, x.sin(), x.cos()];
    let mut w = alloc::vec![1.0 / xs.len() as f64; xs.len()];
    let mut best = [0.0; 3];
    let mut best_err = f64::INFINITY;
    for _ in 0..300 {
        let mut ata = Matrix::zeros(3, 3);
        let mut atb = [0.0; 3];
        for (k, (&x, &y)) in xs.iter().zip(ys).enumerate() {
            let phi = basis(x);
            for r in 0..3 {
                atb[r] += w[k] * phi[r] * y;
                for c in 0..3 {
                    ata[(r, c)] += w[k] * phi[r] * phi[c];
                }
            }
        }
        // tiny ridge: on short intervals the basis is nearly collinear
        let scale = (0..3).map(|i| ata[(i, i)]).fold(0.0, f64::max);
        for i in 0..3 {
            ata[(i, i)] += 1e-14 * scale;
        }
        let Ok(lu) = Lu::factor(&ata) else { break };
        let sol = lu.solve(&atb);
        let coef = [sol[0], sol[1], sol[2]];
        let resid: Vec<f64> = xs
            .iter()
            .zip(ys)
            .map(|(&x, &y)| {
                let phi = basis(x);
                (coef[0] * phi[0] + coef[1] * phi[1] + coef[2] * phi[2] - y).abs()
            })
            .collect();
        let err = resid.iter().copied().fold(0.0, f64::max);
        if err < best_err {
            best_err = err;
            best = coef;
        }
        let total: f64 = w.iter().zip(&resid).map(|(w, r)| w * r).sum();
        if !(total > 0.0) {
            break;
        }
        for (wk, r) in w.iter_mut().zip(&resid) {
            *wk *= r / total;
        }
    }
    best
}

fn eval3(k: [f64; 3], d: f64) -> f64 {
    k[0] + k[1] * d.sin() + k[2] * d.cos()
}

/// Worst-case (or single-pair) envelope on each interval of `edges`.
///
/// For each interval the pair bound `max_{(M,m)} [pair terms + Σ_j f_jmax]`
/// is sampled on a `DEFAULT_GRID` D-grid and covered by the tightest
/// `K₀ + K_s sin D + K_c cos D`, shifted to dominate on a 10× finer grid
/// plus a curvature allowance for the gaps between its points. When a
/// single pair with an empty `f_j` sum dominates, the envelope is exact.
pub fn envelope_params(net: &ReducedNetwork, policy: PairPolicy, edges: &[f64]) -> Result<EnvelopeParams> {
    let n = net.n();
    if n < 2 {
        return Err(Error::InvalidArgument("the envelope needs at least two machines".into()));
    }
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) || edges[0] < 0.0 || edges[edges.len() - 1] > PI {
        return Err(Error::InvalidArgument("envelope edges must increase within [0, π]".into()));
    }
    let pairs = policy.pairs(n);
    let ctxs: Vec<PairContext> = pairs.iter().map(|&(hi, lo)| PairContext::new(net, hi, lo)).collect::<Result<_>>()?;
    let bound = |d: f64| ctxs.iter().map(|c| c.rhs_bound(d)).fold(f64::NEG_INFINITY, f64::max);
    // curvature allowance: second derivative of the covered bound and the envelope
    let a_sum: f64 = (0..n).map(|i| (0..n).map(|j| net.a[(i, j)]).sum::<f64>()).fold(0.0, f64::max);

    let mut segments = Vec::with_capacity(edges.len() - 1);
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let xs = grid(lo, hi, DEFAULT_GRID);
        if n == 2 {
            // a lone pair sinusoid is exact if it dominates the other pair everywhere
            let exact = ctxs.iter().find(|c| {
                let k = c.pair_terms_coefficients();
                ctxs.iter().all(|o| xs.iter().all(|&x| eval3(k, x) >= o.pair_terms(x) - 1e-12 * (1.0 + k[0].abs())))
            });
            if let Some(c) = exact {
                segments.push(EnvelopeSegment::from_coefficients(lo, hi, c.pair_terms_coefficients(), 0.0, true)?);
                continue;
            }
        }
        let ys: Vec<f64> = xs.iter().map(|&x| bound(x)).collect();
        let mut k = minimax_sinusoid(&xs, &ys);
        let fine = grid(lo, hi, DEFAULT_GRID / 10.0);
        let violation = fine.iter().map(|&x| bound(x) - eval3(k, x)).fold(f64::NEG_INFINITY, f64::max);
        let h_f = (hi - lo) / (fine.len() - 1) as f64;
        let curvature = 4.0 * a_sum + k[1].hypot(k[2]);
        k[0] += violation + h_f * h_f / 8.0 * curvature;
        let gap = xs.iter().zip(&ys).map(|(&x, &y)| eval3(k, x) - y).fold(0.0, f64::max);
        segments.push(EnvelopeSegment::from_coefficients(lo, hi, k, gap, false)?);
    }
    Ok(EnvelopeParams { policy, segments })
}

/// Dominance statistics for one interval.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SegmentDominance {
    pub samples: usize,
    pub violations: usize,
    pub min_margin: f64,
    /// Diameter at which the smallest margin occurred.
    pub worst_d: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DominanceReport {
    pub segments: Vec<SegmentDominance>,
}

impl DominanceReport {
    pub fn violations(&self) -> usize {
        self.segments.iter().map(|s| s.violations).sum()
    }

    pub fn min_margin(&self) -> f64 {
        self.segments.iter().map(|s| s.min_margin).fold(f64::INFINITY, f64::min)
    }
}

/// Samples `samples` random angle configurations per interval and compares
/// the envelope with the exact right-hand side.
///
/// Each draw picks `D` in the interval and an ordered pair allowed by the
/// policy, places `θ_m = 0`, `θ_M = D` and the other machines uniformly in
/// `[0, D]`. A margin below `tol` counts as a violation.
pub fn verify_envelope(
    params: &EnvelopeParams,
    net: &ReducedNetwork,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<DominanceReport> {
    let n = net.n();
    let pairs = params.policy.pairs(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = alloc::vec![0.0; n];
    let mut segments = Vec::with_capacity(params.segments.len());
    for seg in &params.segments {
        let mut stats = SegmentDominance { samples, violations: 0, min_margin: f64::INFINITY, worst_d: seg.lo };
        for _ in 0..samples {
            let d = rng.gen_range(seg.lo..seg.hi);
            let (hi, lo) = pairs[rng.gen_range(0..pairs.len())];
            let ctx = PairContext::new(net, hi, lo)?;
            for (j, t) in theta.iter_mut().enumerate() {
                *t = if j == lo {
                    0.0
                } else if j == hi {
                    d
                } else {
                    rng.gen_range(0.0..=d)
                };
            }
            let margin = seg.value(d) - ctx.exact_rhs(&theta);
            if margin < stats.min_margin {
                stats.min_margin = margin;
                stats.worst_d = d;
            }
            if margin < tol {
                stats.violations += 1;
            }
        }
        segments.push(stats);
    }
    Ok(DominanceReport { segments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::prefault_reduction;
    use crate::netmodel::{derive_coefficients, fixtures, Machine};
    use crate::powerflow::{init_classical, solve_power_flow};
    use crate::Complex64;
    use alloc::vec;

    fn ieee9_prefault(lambda: f64) -> ReducedNetwork {
        let net = fixtures::ieee9(lambda);
        let pf = solve_power_flow(&net, 1e-10, 20).unwrap();
        let init = init_classical(&net, &pf).unwrap();
        prefault_reduction(&net, &pf, &init).unwrap()
    }

    fn random_network(rng: &mut ChaCha8Rng, n: usize) -> ReducedNetwork {
        let y = Matrix::from_fn(n, n, |_, _| Complex64::new(0.0, 0.0));
        let mut red = derive_coefficients(
            &Matrix::from_fn(n, n, |i, j| if i == j { Complex64::new(1.0, -3.0) } else { Complex64::new(0.1, 1.0) }),
            &(0..n).map(|_| Machine { inertia: 1.0, damping: 0.5, p_mech: 0.5, emf: Complex64::new(1.0, 0.0) }).collect::<Vec<_>>(),
            1.0,
        )
        .unwrap();
        red.y_red = y;
        for i in 0..n {
            red.omega[i] = rng.gen_range(-5.0..5.0);
            for j in 0..n {
                if i != j {
                    red.a[(i, j)] = rng.gen_range(0.0..10.0);
                    red.alpha[(i, j)] = rng.gen_range(-0.5..0.5);
                }
            }
        }
        red
    }

    #[test]
    fn fj_max_at_zero_diameter() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = random_network(&mut rng, 3);
        let ctx = PairContext::new(&net, 0, 1).unwrap();
        let expect = net.a[(0, 2)] * net.alpha[(0, 2)].sin() - net.a[(1, 2)] * net.alpha[(1, 2)].sin();
        assert!((fj_max(0.0, 2, &ctx) - expect).abs() < 1e-15);
    }

    #[test]
    fn fj_max_unit_example_is_minus_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = random_network(&mut rng, 3);
        for (i, j) in [(0, 2), (1, 2)] {
            net.a[(i, j)] = 1.0;
            net.alpha[(i, j)] = 0.0;
        }
        let ctx = PairContext::new(&net, 0, 1).unwrap();
        let d = FRAC_PI_2;
        assert!((fj_max(d, 2, &ctx) + 1.0).abs() < 1e-15);
        assert!((ctx.fj(2, 0.0, d) + 1.0).abs() < 1e-15);
        assert!((ctx.fj(2, d, d) + 1.0).abs() < 1e-15);
        assert!((ctx.fj(2, d / 2.0, d) + 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn fj_max_matches_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let mut net = random_network(&mut rng, 3);
            for i in 0..2 {
                net.alpha[(i, 2)] = rng.gen_range(-PI..PI);
            }
            let ctx = PairContext::new(&net, 0, 1).unwrap();
            let d = rng.gen_range(0.0..PI);
            let m = (d / 1e-4).ceil() as usize;
            let brute = (0..=m).map(|k| ctx.fj(2, d * k as f64 / m as f64, d)).fold(f64::NEG_INFINITY, f64::max);
            let exact = fj_max(d, 2, &ctx);
            assert!(exact >= brute - 1e-12);
            assert!((exact - brute).abs() < 1e-6, "d={d} exact={exact} brute={brute}");
        }
    }

    #[test]
    fn fj_max_is_continuous() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = random_network(&mut rng, 4);
        let ctx = PairContext::new(&net, 2, 0).unwrap();
        let bound = 2.0 * (net.a[(2, 1)] + net.a[(0, 1)]);
        let h = 1e-5;
        let mut prev = fj_max(0.0, 1, &ctx);
        let mut d = h;
        while d < PI {
            let cur = fj_max(d, 1, &ctx);
            assert!((cur - prev).abs() <= bound * h, "jump at {d}");
            prev = cur;
            d += h;
        }
    }

    #[test]
    fn two_machines_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = random_network(&mut rng, 2);
        let params = envelope_params(&net, PairPolicy::Pair { max: 0, min: 1 }, &DEFAULT_EDGES).unwrap_or_else(|e| {
            panic!("{e}");
        });
        let ctx = PairContext::new(&net, 0, 1).unwrap();
        for seg in &params.segments {
            assert!(seg.exact);
            for k in 0..=100 {
                let d = seg.lo + (seg.hi - seg.lo) * k as f64 / 100.0;
                assert!((seg.value(d) - ctx.rhs_bound(d)).abs() < 1e-12);
            }
        }
        let report = verify_envelope(&params, &net, 2000, -1e-12, 1).unwrap();
        assert_eq!(report.violations(), 0);
        assert!(report.min_margin() >= -1e-12);
        assert!(report.min_margin() <= 1e-9);
    }

    #[test]
    fn ieee9_prefault_envelope_dominates() {
        let net = ieee9_prefault(0.5);
        let params = envelope_params(&net, PairPolicy::WorstCase, &DEFAULT_EDGES).unwrap();
        let report = verify_envelope(&params, &net, 10_000, -1e-9, 42).unwrap();
        assert_eq!(report.violations(), 0, "{report:?}");
    }

    #[test]
    fn halved_gamma_is_caught() {
        let net = ieee9_prefault(0.5);
        let mut params = envelope_params(&net, PairPolicy::WorstCase, &DEFAULT_EDGES).unwrap();
        for seg in params.segments.iter_mut() {
            seg.gamma /= 2.0;
        }
        let report = verify_envelope(&params, &net, 10_000, -1e-9, 42).unwrap();
        assert!(report.violations() > 0);
    }

    #[test]
    fn envelope_covers_pair_bound_on_fine_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = random_network(&mut rng, 4);
        let params = envelope_params(&net, PairPolicy::WorstCase, &[0.0, 0.8, 1.6, PI]).unwrap();
        let ctxs: Vec<PairContext> = PairPolicy::WorstCase.pairs(4).iter().map(|&(a, b)| PairContext::new(&net, a, b).unwrap()).collect();
        for seg in &params.segments {
            for k in 0..=20_000 {
                let d = seg.lo + (seg.hi - seg.lo) * k as f64 / 20_000.0;
                let b = ctxs.iter().map(|c| c.rhs_bound(d)).fold(f64::NEG_INFINITY, f64::max);
                assert!(seg.value(d) >= b - 1e-12);
            }
        }
    }

    #[test]
    fn segment_lookup_and_validation() {
        let p = EnvelopeParams::from_segments(&[(0.0, 1.0, 2.0, 1.0, 0.0), (1.0, 2.0, 3.0, 1.0, 0.1)]).unwrap();
        assert_eq!(p.segment_for(0.5), Some(0));
        assert_eq!(p.segment_for(1.0), Some(1));
        assert_eq!(p.segment_for(2.0), Some(1));
        assert_eq!(p.segment_for(2.5), None);
        assert_eq!(p.edges(), vec![0.0, 1.0, 2.0]);
        assert!(matches!(
            EnvelopeParams::from_segments(&[(0.0, 1.0, -1.0, 1.0, 0.0)]),
            Err(Error::EnvelopeInvalid { .. })
        ));
    }

    #[test]
    fn phase_convention() {
        let s = EnvelopeSegment::from_coefficients(0.0, 1.0, [3.0, -0.6, 0.8], 0.0, false).unwrap();
        for k in 0..10 {
            let d = k as f64 * 0.3;
            assert!((s.value(d) - eval3([3.0, -0.6, 0.8], d)).abs() < 1e-14);
        }
    }
}
