//! Second-order Gronwall bounds on the rotor-angle diameter.
//!
//! On each D-interval the envelope `Γ − L sin(D + Φ)` is replaced by the
//! chord of `sin` over the matching range of `γ = D + Φ`, which turns the
//! diameter dynamics into `a D̈ + b Ḋ + c D + d ≤ 0` with constant
//! coefficients. Each such inequality has a closed-form bound, and the
//! pieces are chained when the bound crosses an interval edge.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // float methods come from std under cfg(test)
use num_traits::Float;

use crate::envelope::EnvelopeParams;
use crate::{Error, Result, DEFAULT_ZETA};

/// Bisection tolerance on event times (s).
pub const EVENT_TOLERANCE: f64 = 1e-9;

/// Which closed form applies to a segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DampingCase {
    /// `b² − 4ac > 0`.
    Overdamped,
    /// `b² − 4ac ≤ 0`, `b ≠ 0`.
    Critical,
    /// `b² − 4ac ≤ 0`, `b = 0`.
    Undamped,
}

/// `a ÿ + b ẏ + c y + d ≤ 0` valid for `y` in `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SegmentOde {
    pub lo: f64,
    pub hi: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub discriminant: f64,
    pub case: DampingCase,
    /// `(b + √Δ) / 2a` when `Δ > 0`.
    pub v1: Option<f64>,
    /// `(b − √Δ) / 2a` when `Δ > 0`.
    pub v2: Option<f64>,
}

impl SegmentOde {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        Self::on_interval(a, b, c, d, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn on_interval(a: f64, b: f64, c: f64, d: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::InvalidArgument(alloc::format!("leading coefficient a = {a} must be positive")));
        }
        if ![b, c, d].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidArgument("segment coefficients must be finite".into()));
        }
        let disc = b * b - 4.0 * a * c;
        let (case, v1, v2) = if disc > 0.0 {
            let s = disc.sqrt();
            (DampingCase::Overdamped, Some((b + s) / (2.0 * a)), Some((b - s) / (2.0 * a)))
        } else if b != 0.0 {
            (DampingCase::Critical, None, None)
        } else {
            (DampingCase::Undamped, None, None)
        };
        Ok(SegmentOde { lo, hi, a, b, c, d, discriminant: disc, case, v1, v2 })
    }
}

/// Largest line `p + q γ` lying below `sin γ` on `[g0, g1]`, with `q` the
/// chord slope. Where `sin` is concave this is the chord itself.
pub fn chord_below_sin(g0: f64, g1: f64) -> (f64, f64) {
    let q = (g1.sin() - g0.sin()) / (g1 - g0);
    let gap = |g: f64| g.sin() - q * g;
    let mut p = gap(g0).min(gap(g1));
    // interior minima of sin γ − qγ sit where cos γ = q and sin γ < 0
    let base = q.clamp(-1.0, 1.0).acos();
    let k0 = ((g0 - PI) / (2.0 * PI)).floor() as i64 - 1;
    let k1 = ((g1 + PI) / (2.0 * PI)).ceil() as i64 + 1;
    for k in k0..=k1 {
        for g in [base + 2.0 * PI * k as f64, -base + 2.0 * PI * k as f64] {
            if g > g0 && g < g1 {
                p = p.min(gap(g));
            }
        }
    }
    (p, q)
}

/// Linear differential inequality for envelope interval `seg`.
///
/// With `sin γ ≥ p + q γ` on the interval, `D̈ + λḊ ≤ Γ − L sin(D + Φ)`
/// gives `(a, b, c, d) = (1, λ, L q, −(Γ − L p − L q Φ))`.
pub fn linearize_segment(env: &EnvelopeParams, seg: usize, lambda: f64) -> Result<SegmentOde> {
    let s = env.segments.get(seg).ok_or_else(|| {
        Error::InvalidArgument(alloc::format!("segment {seg} out of range (envelope has {})", env.segments.len()))
    })?;
    let (p, q) = chord_below_sin(s.lo + s.phase, s.hi + s.phase);
    let l = s.amplitude;
    SegmentOde::on_interval(1.0, lambda, l * q, -(s.gamma - l * p - l * q * s.phase), s.lo, s.hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Form {
    /// `p + k1 e^{−r1 t} + k2 e^{−r2 t}`
    Exp2 { p: f64, k1: f64, r1: f64, k2: f64, r2: f64 },
    /// `p + e^{−r t} (k0 + k1 t)`
    Crit { p: f64, k0: f64, k1: f64, r: f64 },
    /// `p + q t + k e^{−r t}`
    Ramp { p: f64, q: f64, k: f64, r: f64 },
    /// `y0 + y1 t + acc t² / 2`
    Quad { y0: f64, y1: f64, acc: f64 },
}

/// Gronwall bound for one segment, as a function of local time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    pub ode: SegmentOde,
    pub y0: f64,
    pub y1: f64,
    form: Form,
}

impl ClosedForm {
    pub fn value(&self, t: f64) -> f64 {
        if t == 0.0 {
            return self.y0;
        }
        match self.form {
            Form::Exp2 { p, k1, r1, k2, r2 } => p + k1 * (-r1 * t).exp() + k2 * (-r2 * t).exp(),
            Form::Crit { p, k0, k1, r } => p + (-r * t).exp() * (k0 + k1 * t),
            Form::Ramp { p, q, k, r } => p + q * t + k * (-r * t).exp(),
            Form::Quad { y0, y1, acc } => y0 + y1 * t + 0.5 * acc * t * t,
        }
    }

    pub fn rate(&self, t: f64) -> f64 {
        match self.form {
            Form::Exp2 { k1, r1, k2, r2, .. } => -k1 * r1 * (-r1 * t).exp() - k2 * r2 * (-r2 * t).exp(),
            Form::Crit { k0, k1, r, .. } => (-r * t).exp() * (k1 - r * k0 - r * k1 * t),
            Form::Ramp { q, k, r, .. } => q - k * r * (-r * t).exp(),
            Form::Quad { y1, acc, .. } => y1 + acc * t,
        }
    }

    /// The stationary point in `t > 0`, if any. Every form has at most one.
    pub fn stationary_point(&self) -> Option<f64> {
        let t = match self.form {
            Form::Exp2 { k1, r1, k2, r2, .. } => {
                // k1 r1 e^{−r1 t} = −k2 r2 e^{−r2 t}
                let ratio = -(k2 * r2) / (k1 * r1);
                if r1 == r2 || !(ratio > 0.0) || !ratio.is_finite() {
                    return None;
                }
                ratio.ln() / (r2 - r1)
            }
            Form::Crit { k0, k1, r, .. } => {
                if k1 == 0.0 || r == 0.0 {
                    return None;
                }
                (k1 - r * k0) / (r * k1)
            }
            Form::Ramp { q, k, r, .. } => {
                let ratio = q / (k * r);
                if !(ratio > 0.0) || !ratio.is_finite() {
                    return None;
                }
                -ratio.ln() / r
            }
            Form::Quad { y1, acc, .. } => {
                if acc == 0.0 {
                    return None;
                }
                -y1 / acc
            }
        };
        (t > 0.0 && t.is_finite()).then_some(t)
    }

    /// True when the curve grows without bound.
    pub fn diverges_up(&self) -> bool {
        match self.form {
            Form::Exp2 { k1, r1, k2, r2, .. } => {
                // the most negative rate dominates as t grows
                let (k_dom, r_dom, k_sub, r_sub) = if r1 < r2 { (k1, r1, k2, r2) } else { (k2, r2, k1, r1) };
                if r_dom < 0.0 && k_dom != 0.0 {
                    k_dom > 0.0
                } else {
                    r_sub < 0.0 && k_sub > 0.0
                }
            }
            Form::Crit { k0, k1, r, .. } => r < 0.0 && (k1 > 0.0 || (k1 == 0.0 && k0 > 0.0)),
            Form::Ramp { q, k, r, .. } => {
                if r < 0.0 && k != 0.0 {
                    k > 0.0
                } else {
                    q > 0.0
                }
            }
            Form::Quad { y1, acc, .. } => acc > 0.0 || (acc == 0.0 && y1 > 0.0),
        }
    }

    /// First `t ∈ (0, t_max]` where the curve crosses `level` upwards
    /// (`up`) or downwards. `t_max` may be infinite.
    pub fn first_crossing(&self, level: f64, up: bool, t_max: f64) -> Option<f64> {
        let mut knots = alloc::vec![0.0];
        if let Some(ts) = self.stationary_point() {
            if ts < t_max {
                knots.push(ts);
            }
        }
        knots.push(t_max);
        let beyond = |y: f64| if up { y >= level } else { y <= level };
        for w in knots.windows(2) {
            let (s0, mut s1) = (w[0], w[1]);
            if beyond(self.value(s0)) {
                // a crossing has to start from the near side of the level
                continue;
            }
            if !s1.is_finite() {
                // monotone tail: expand until the level is passed
                let mut span = 1.0f64.max(2.0 * s0);
                loop {
                    if beyond(self.value(s0 + span)) {
                        s1 = s0 + span;
                        break;
                    }
                    span *= 2.0;
                    if span > 1e9 {
                        return None;
                    }
                }
            } else if !beyond(self.value(s1)) {
                continue;
            }
            let (mut lo, mut hi) = (s0, s1);
            while hi - lo > EVENT_TOLERANCE {
                let mid = 0.5 * (lo + hi);
                if beyond(self.value(mid)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(hi);
        }
        None
    }
}

/// Closed-form second-order Gronwall bound for `a ÿ + b ẏ + c y + d ≤ 0`,
/// `y(0) = y₀`, `ẏ(0) = y₁`, `y ≥ 0`.
///
/// Overdamped: the solution of the equality. Critical (also used when
/// `Δ < 0`): the critically damped solution with the same `b`, which
/// bounds the underdamped one while `y ≥ 0`. Undamped:
/// `y₀ + y₁ t − (d / 2a) t²`.
pub fn gronwall_bound(ode: &SegmentOde, y0: f64, y1: f64) -> Result<ClosedForm> {
    if !(y0.is_finite() && y1.is_finite()) {
        return Err(Error::InvalidArgument("initial data must be finite".into()));
    }
    let SegmentOde { a, b, c, d, .. } = *ode;
    let form = match ode.case {
        DampingCase::Overdamped => {
            if c.abs() <= 1e-12 * (b * b / a) {
                // c → 0: a ÿ + b ẏ + d = 0
                let (r, q) = (b / a, -d / b);
                let k = -(y1 - q) / r;
                Form::Ramp { p: y0 - k, q, k, r }
            } else {
                let (v1, v2) = (ode.v1.expect("overdamped"), ode.v2.expect("overdamped"));
                let p = -d / c;
                let k2 = (y1 + v1 * (y0 - p)) / (v1 - v2);
                Form::Exp2 { p, k1: y0 - p - k2, r1: v1, k2, r2: v2 }
            }
        }
        DampingCase::Critical => {
            let r = b / (2.0 * a);
            let p = -4.0 * a * d / (b * b);
            Form::Crit { p, k0: y0 - p, k1: r * y0 + y1 + 2.0 * d / b, r }
        }
        DampingCase::Undamped => Form::Quad { y0, y1, acc: -d / a },
    };
    Ok(ClosedForm { ode: *ode, y0, y1, form })
}

/// Options for [`propagate_with_switching`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BoundConfig {
    /// Stability threshold ζ on D (rad).
    pub zeta: f64,
    /// Evaluation horizon (s).
    pub horizon: f64,
    /// Safety cap on the number of pieces.
    pub max_pieces: usize,
}

impl Default for BoundConfig {
    fn default() -> Self {
        BoundConfig { zeta: DEFAULT_ZETA, horizon: crate::dynamics::DEFAULT_HORIZON, max_pieces: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verdict {
    BoundedBelowZeta,
    CrossesZeta,
}

/// One piece of the bound curve.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BoundPiece {
    pub segment: usize,
    pub ode: SegmentOde,
    pub start: f64,
    pub end: f64,
    pub y0: f64,
    pub y1: f64,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub form: ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SwitchEvent {
    pub time: f64,
    /// The interval edge reached.
    pub value: f64,
    pub from: usize,
    pub to: usize,
}

/// Piecewise closed-form upper bound on `D(t)`, `t` measured from clearing.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct BoundCurve {
    pub pieces: Vec<BoundPiece>,
    pub switches: Vec<SwitchEvent>,
    pub peak: f64,
    pub peak_time: f64,
    /// Time at which the bound reaches ζ.
    pub crossing: Option<f64>,
    pub verdict: Verdict,
    /// Time of the first local maximum of the bound (end of the first swing).
    pub first_peak_time: f64,
    pub config: BoundConfig,
}

impl BoundCurve {
    /// Bound at time `t`; `None` past the last piece.
    pub fn value(&self, t: f64) -> Option<f64> {
        if t < 0.0 {
            return None;
        }
        let k = self.pieces.partition_point(|p| p.end < t);
        let piece = self.pieces.get(k)?;
        // at a switch instant the later piece holds the edge value exactly
        let piece = match self.pieces.get(k + 1) {
            Some(next) if next.start == t => next,
            _ => piece,
        };
        Some(piece.form.value(t - piece.start))
    }

    pub fn end_time(&self) -> f64 {
        self.pieces.last().map_or(0.0, |p| p.end)
    }

    /// Switch events up to and including the end of the first swing.
    pub fn first_swing_switches(&self) -> usize {
        self.switches.iter().filter(|s| s.time <= self.first_peak_time).count()
    }
}

/// Chains per-segment Gronwall bounds across envelope intervals, starting from the
/// clearing state `(D₀, Ḋ₀)`.
///
/// When the bound climbs to an interval's upper edge it restarts in the
/// next interval from the edge with rate `Ḋ₀`;
/// when it falls to a lower edge it restarts below with its own rate. The
/// verdict is `CrossesZeta` as soon as the bound reaches ζ, including a
/// last piece that grows without bound past the horizon.
pub fn propagate_with_switching(
    env: &EnvelopeParams,
    lambda: f64,
    d0: f64,
    rate0: f64,
    config: &BoundConfig,
) -> Result<BoundCurve> {
    if !(d0.is_finite() && rate0.is_finite()) {
        return Err(Error::InvalidArgument("initial diameter and rate must be finite".into()));
    }
    let zeta = config.zeta;
    let trivial = |verdict, crossing| -> Result<BoundCurve> {
        let ode = SegmentOde::new(1.0, lambda, 0.0, 0.0)?;
        let form = ClosedForm { ode, y0: d0, y1: rate0, form: Form::Quad { y0: d0, y1: 0.0, acc: 0.0 } };
        Ok(BoundCurve {
            pieces: alloc::vec![BoundPiece { segment: 0, ode, start: 0.0, end: 0.0, y0: d0, y1: rate0, form }],
            switches: Vec::new(),
            peak: d0,
            peak_time: 0.0,
            crossing,
            verdict,
            first_peak_time: 0.0,
            config: *config,
        })
    };
    if d0 >= zeta {
        return trivial(Verdict::CrossesZeta, Some(0.0));
    }
    let mut seg = env.segment_for(d0).ok_or_else(|| {
        Error::InvalidArgument(alloc::format!("initial diameter {d0} lies outside the envelope intervals"))
    })?;
    let last = env.segments.len() - 1;

    let mut pieces: Vec<BoundPiece> = Vec::new();
    let mut switches = Vec::new();
    let (mut t, mut y, mut rate) = (0.0, d0, rate0);
    let mut crossing = None;
    let mut past_horizon = false;
    let mut instant_switches = 0;
    while pieces.len() < config.max_pieces {
        let ode = linearize_segment(env, seg, lambda)?;
        let form = gronwall_bound(&ode, y, rate)?;
        let up_level = ode.hi.min(zeta);
        let up_is_zeta = zeta <= ode.hi || seg == last;
        let span = if past_horizon { f64::INFINITY } else { (config.horizon - t).max(0.0) };
        // a piece that starts on an edge and heads across it switches at once
        let heading = form.value(1e-7) - y;
        let event = if y == up_level && heading > 0.0 {
            Some((0.0, true))
        } else if seg > 0 && y == ode.lo && heading < 0.0 {
            Some((0.0, false))
        } else {
            let up = form.first_crossing(up_level, true, span);
            let down = if seg > 0 { form.first_crossing(ode.lo, false, span) } else { None };
            match (up, down) {
                (Some(u), Some(d)) if d < u => Some((d, false)),
                (Some(u), _) => Some((u, true)),
                (None, Some(d)) => Some((d, false)),
                (None, None) => None,
            }
        };
        let Some((tau, going_up)) = event else {
            if !past_horizon && form.diverges_up() {
                past_horizon = true;
                continue;
            }
            let end = if past_horizon { t } else { config.horizon.max(t) };
            pieces.push(BoundPiece { segment: seg, ode, start: t, end, y0: y, y1: rate, form });
            break;
        };
        if going_up && up_is_zeta {
            pieces.push(BoundPiece { segment: seg, ode, start: t, end: t + tau, y0: y, y1: rate, form });
            crossing = Some(t + tau);
            break;
        }
        instant_switches = if tau == 0.0 { instant_switches + 1 } else { 0 };
        if instant_switches > 2 {
            // both neighbours push the bound onto the edge: it stays there
            let flat = ClosedForm { ode, y0: y, y1: 0.0, form: Form::Quad { y0: y, y1: 0.0, acc: 0.0 } };
            let end = config.horizon.max(t);
            pieces.push(BoundPiece { segment: seg, ode, start: t, end, y0: y, y1: 0.0, form: flat });
            break;
        }
        if tau > 0.0 {
            pieces.push(BoundPiece { segment: seg, ode, start: t, end: t + tau, y0: y, y1: rate, form });
        }
        let (to, edge, new_rate) = if going_up { (seg + 1, ode.hi, rate0) } else { (seg - 1, ode.lo, form.rate(tau)) };
        switches.push(SwitchEvent { time: t + tau, value: edge, from: seg, to });
        t += tau;
        y = edge;
        rate = new_rate;
        seg = to;
    }

    let verdict = if crossing.is_some() { Verdict::CrossesZeta } else { Verdict::BoundedBelowZeta };
    let (peak, peak_time, first_peak_time) = scan_peaks(&pieces, config.horizon, crossing);
    Ok(BoundCurve { pieces, switches, peak, peak_time, crossing, verdict, first_peak_time, config: *config })
}

/// Global maximum within the horizon (or up to the crossing) and the time
/// of the first local maximum.
fn scan_peaks(pieces: &[BoundPiece], horizon: f64, crossing: Option<f64>) -> (f64, f64, f64) {
    let t_end = crossing.unwrap_or(horizon);
    let mut peak = f64::NEG_INFINITY;
    let mut peak_time = 0.0;
    let mut first_peak = None;
    let mut consider = |v: f64, t: f64| {
        if v > peak {
            peak = v;
            peak_time = t;
        }
    };
    for (k, p) in pieces.iter().enumerate() {
        if p.start > t_end {
            break;
        }
        let end = p.end.min(t_end);
        consider(p.form.value(0.0), p.start);
        consider(p.form.value(end - p.start), end);
        if let Some(ts) = p.form.stationary_point() {
            if p.start + ts <= end {
                consider(p.form.value(ts), p.start + ts);
                if first_peak.is_none() && p.form.rate(0.0) > 0.0 {
                    first_peak = Some(p.start + ts);
                }
            }
        }
        if first_peak.is_none() {
            if k == 0 && p.form.rate(0.0) <= 0.0 {
                first_peak = Some(p.start);
            } else if let Some(next) = pieces.get(k + 1) {
                // rate turning non-positive across a switch
                if p.form.rate(p.end - p.start) > 0.0 && next.form.rate(0.0) <= 0.0 {
                    first_peak = Some(p.end);
                }
            }
        }
    }
    (peak, peak_time, first_peak.unwrap_or(t_end))
}

/// Peak of a propagated curve, or its ζ-crossing time.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PeakReport {
    pub peak: f64,
    pub time: f64,
    pub crossing: Option<f64>,
}

pub fn bound_peak(curve: &BoundCurve) -> PeakReport {
    PeakReport { peak: curve.peak, time: curve.peak_time, crossing: curve.crossing }
}

/// Peak of a single closed form over `[0, horizon]`.
pub fn closed_form_peak(form: &ClosedForm, horizon: f64) -> (f64, f64) {
    let mut best = (form.value(0.0), 0.0);
    let mut take = |t: f64| {
        let v = form.value(t);
        if v > best.0 {
            best = (v, t);
        }
    };
    take(horizon);
    if let Some(ts) = form.stationary_point() {
        if ts <= horizon {
            take(ts);
        }
    }
    best
}
