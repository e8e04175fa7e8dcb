//! Blow-up and existence-time machinery built from scalar data alone: the
//! exponential fixed-point trichotomy, the Lambert-type bound on its largest
//! root, the existence horizon from the weighted-norm decay profile, the
//! cubic upper bound on the spatial moment of inertia with its discriminant
//! and verdict, and the collapse bound on mass outside a small ball.

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Result, VpilError};

/// Parameters of the map Phi(s) = c e^{A(s+1)}.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhiParams {
    pub c: f64,
    pub a: f64,
}

impl PhiParams {
    pub fn new(c: f64, a: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(VpilError::InvalidParameter(format!(
                "phi coefficient must be positive and finite, got {c}"
            )));
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(VpilError::InvalidParameter(format!(
                "phi exponent rate must be positive and finite, got {a}"
            )));
        }
        Ok(Self { c, a })
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.c * (self.a * (s + 1.0)).exp()
    }

    /// Largest c for which Phi has a fixed point: e^{-A} / (e A).
    pub fn threshold(&self) -> f64 {
        (-self.a).exp() / (std::f64::consts::E * self.a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PhiRoots {
    /// c above threshold: Phi(s) > s everywhere.
    None,
    /// c at threshold: single tangency root s = 1/A.
    Tangent(f64),
    /// c below threshold: two fixed points N1 < 1/A < N2.
    Two { n1: f64, n2: f64 },
}

/// Bisect Phi(s) - s = 0 on [lo, hi] where the sign changes, to 1e-12
/// relative. `increasing_at_lo` states the sign of Phi - s at lo.
fn bisect_fixed_point(p: &PhiParams, mut lo: f64, mut hi: f64) -> f64 {
    debug_assert!(p.eval(lo) - lo > 0.0 || lo == 0.0);
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi.max(1e-300) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if p.eval(mid) - mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn phi_threshold_and_roots(p: &PhiParams) -> (f64, PhiRoots) {
    let threshold = p.threshold();
    if (p.c - threshold).abs() <= 1e-14 * threshold {
        return (threshold, PhiRoots::Tangent(1.0 / p.a));
    }
    if p.c > threshold {
        return (threshold, PhiRoots::None);
    }
    // Phi - s is positive at 0, negative at the slope-1 point 1/A, and
    // positive again far out where the exponential wins.
    let split = 1.0 / p.a;
    let n1 = bisect_fixed_point(p, 0.0, split);
    let mut hi = 2.0 * split;
    while p.eval(hi) - hi <= 0.0 {
        hi *= 2.0;
    }
    // Reversed orientation on [split, hi]: negative at split, positive at hi.
    let (mut lo, mut hi) = (split, hi);
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi.max(1e-300) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if p.eval(mid) - mid < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let n2 = 0.5 * (lo + hi);
    (threshold, PhiRoots::Two { n1, n2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiClassification {
    ConvergesToN1,
    DecreasesToN1,
    Diverges,
    Constant,
}

impl PhiClassification {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ConvergesToN1 => "converges_to_N1",
            Self::DecreasesToN1 => "decreases_to_N1",
            Self::Diverges => "diverges",
            Self::Constant => "constant",
        }
    }
}

/// Iterate Phi from `s0` for `n` steps; the sequence stops early if it
/// overflows or passes 1000x the largest fixed point. Classification follows
/// the position of `s0` against the fixed points: below N1 the iterates
/// increase to N1, between the roots they decrease to N1, above N2 (or when
/// no fixed point exists) they diverge.
pub fn phi_iterate(
    p: &PhiParams,
    s0: f64,
    n: usize,
) -> Result<(Vec<f64>, PhiClassification)> {
    if !(s0 >= 0.0) || !s0.is_finite() {
        return Err(VpilError::InvalidParameter(format!(
            "iteration start must be nonnegative and finite, got {s0}"
        )));
    }
    if n == 0 {
        return Err(VpilError::InvalidParameter(
            "iteration count must be at least 1".into(),
        ));
    }
    let (_, roots) = phi_threshold_and_roots(p);
    let near = |s: f64, root: f64| (s - root).abs() <= 1e-9 * root.max(1.0);
    let classification = match roots {
        PhiRoots::Two { n1, n2 } => {
            if near(s0, n1) || near(s0, n2) {
                PhiClassification::Constant
            } else if s0 < n1 {
                PhiClassification::ConvergesToN1
            } else if s0 < n2 {
                PhiClassification::DecreasesToN1
            } else {
                PhiClassification::Diverges
            }
        }
        PhiRoots::Tangent(s_star) => {
            if near(s0, s_star) {
                PhiClassification::Constant
            } else if s0 < s_star {
                PhiClassification::ConvergesToN1
            } else {
                PhiClassification::Diverges
            }
        }
        PhiRoots::None => PhiClassification::Diverges,
    };
    let cap = 1e3
        * match roots {
            PhiRoots::Two { n2, .. } => n2,
            PhiRoots::Tangent(s) => s,
            PhiRoots::None => (1.0 / p.a).max(1.0),
        };
    let mut seq = Vec::with_capacity(n);
    let mut s = s0;
    for _ in 0..n {
        s = p.eval(s);
        seq.push(s);
        if !s.is_finite() || s > cap {
            break;
        }
    }
    Ok((seq, classification))
}

/// Default calibration for the Lambert-type root bound; the sharp constant
/// is sup of s^2 e^{-s}, which is 4/e^2 ~ 0.5413.
pub const DEFAULT_S_LARGE_C0: f64 = 0.55;

/// Upper bound c0 / (a b^2) for the larger root of a e^{b s} = s.
pub fn s_large_bound(a: f64, b: f64, c0: f64) -> Result<f64> {
    for (name, v) in [("a", a), ("b", b), ("c0", c0)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(VpilError::InvalidParameter(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    Ok(c0 / (a * b * b))
}

fn golden_section_max<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let ratio = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// Existence horizon from the decay profile psi(t) =
/// (2<t>)^m (t+1)^3 e^{-M(t+1)^3}: returns (T, C(m)) with C(m) = max psi
/// over t >= 0 and T = ((1/M) log(1/(e^{-e} M norm C(m))))^{1/3} - 1 when
/// that quantity is positive, absent otherwise.
pub fn existence_time_bound(norm_c2: f64, big_m: f64, m: f64) -> Result<(Option<f64>, f64)> {
    if !(norm_c2 > 0.0) || !norm_c2.is_finite() {
        return Err(VpilError::InvalidParameter(format!(
            "norm must be positive and finite, got {norm_c2}"
        )));
    }
    if !(big_m > 0.0) || !big_m.is_finite() {
        return Err(VpilError::InvalidParameter(format!(
            "decay constant must be positive and finite, got {big_m}"
        )));
    }
    if !(m > 3.0) {
        return Err(VpilError::InvalidParameter(format!(
            "weight exponent must exceed 3, got {m}"
        )));
    }
    let log_psi = |t: f64| -> f64 {
        let one_plus = 1.0 + t;
        m * (2.0 * (1.0 + t * t).sqrt()).ln() + 3.0 * one_plus.ln()
            - big_m * one_plus * one_plus * one_plus
    };
    // Scan out to where the exponential term has crushed psi, then refine.
    let mut t_hi = 1.0;
    let base = log_psi(0.0);
    while log_psi(t_hi) > base - 80.0 {
        t_hi *= 2.0;
    }
    let scan = 2000;
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=scan {
        let t = t_hi * i as f64 / scan as f64;
        let v = log_psi(t);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let lo = if best_i == 0 {
        0.0
    } else {
        t_hi * (best_i - 1) as f64 / scan as f64
    };
    let hi = t_hi * (best_i + 1).min(scan) as f64 / scan as f64;
    let t_star = golden_section_max(&log_psi, lo, hi, 1e-10);
    let c_of_m = log_psi(t_star).max(log_psi(0.0)).exp();

    let braced = (1.0 / big_m) * (1.0 / ((-std::f64::consts::E).exp() * big_m * norm_c2 * c_of_m)).ln();
    let t_bound = if braced > 1.0 {
        Some(braced.cbrt() - 1.0)
    } else {
        None
    };
    Ok((t_bound, c_of_m))
}

/// k(m) = m pi / (3 (m - 3)).
pub fn k_of_m(m: f64) -> f64 {
    m * std::f64::consts::PI / (3.0 * (m - 3.0))
}

/// Initial scalar data feeding the cubic bound on the moment of inertia.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CriterionInput {
    pub i0: f64,
    pub ip0: f64,
    pub ke0: f64,
    pub ee0: f64,
    pub c1: f64,
    pub k: f64,
    pub m: f64,
}

impl CriterionInput {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("initial inertia", self.i0 >= 0.0),
            ("initial kinetic energy", self.ke0 >= 0.0),
            ("initial field energy", self.ee0 >= 0.0),
            ("growth constant", self.c1 > 0.0),
            ("k factor", self.k > 0.0),
            ("weight exponent > 6", self.m > 6.0),
        ];
        for (name, ok) in checks {
            if !ok {
                return Err(VpilError::InvalidParameter(format!(
                    "criterion input violates {name}"
                )));
            }
        }
        for v in [self.i0, self.ip0, self.ke0, self.ee0, self.c1, self.k, self.m] {
            if !v.is_finite() {
                return Err(VpilError::NonFinite {
                    context: "criterion input",
                });
            }
        }
        Ok(())
    }
}

/// Caller-supplied calibration for the threshold inequality
/// E_E(0) - 2 KE(0) >= C (3 I(0)/|I'(0)| + k) * ratio.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConditionParams {
    pub c: f64,
    /// ||f_in||_L1 / ||f_in|| in the weighted C^2 norm.
    pub norm_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    BlowupPredicted,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::BlowupPredicted => "blowup_predicted",
            Self::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CriterionReport {
    /// g(t) = a3 t^3 + a2 t^2 + a1 t + a0 bounds the moment of inertia.
    pub a3: f64,
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
    /// I''(0) = 2 KE(0) - E_E(0) (attractive interaction).
    pub inertia_dd0: f64,
    pub discriminant: f64,
    pub t2: Option<f64>,
    pub g_at_t2: Option<f64>,
    /// Linear-in-t2 split of g(t2); m2 < 0 whenever I'(0) < 0.
    pub m2: Option<f64>,
    pub m3: Option<f64>,
    pub condition_23_satisfied: Option<bool>,
    pub verdict: Verdict,
}

impl CriterionReport {
    pub fn g(&self, t: f64) -> f64 {
        ((self.a3 * t + self.a2) * t + self.a1) * t + self.a0
    }

    pub fn g_prime(&self, t: f64) -> f64 {
        (3.0 * self.a3 * t + 2.0 * self.a2) * t + self.a1
    }
}

/// Cubic bound g on the moment of inertia and the finite-time verdict:
/// blow-up is predicted when I'(0) < 0 and g turns negative at the larger
/// critical point t2 of g.
pub fn cubic_bound(
    inp: &CriterionInput,
    condition: Option<&ConditionParams>,
) -> Result<CriterionReport> {
    inp.validate()?;
    let idd0 = 2.0 * inp.ke0 - inp.ee0;
    let b = inp.k * inp.c1 + idd0;
    let a3 = inp.c1 / 6.0;
    let a2 = b / 2.0;
    let a1 = inp.ip0;
    let a0 = inp.i0;
    let discriminant = b * b - 2.0 * inp.c1 * inp.ip0;
    let t2 = if discriminant > 0.0 {
        let root = (-b + discriminant.sqrt()) / inp.c1;
        (root > 0.0).then_some(root)
    } else {
        None
    };
    let (g_at_t2, m2, m3) = match t2 {
        Some(t) => {
            let m2 = (2.0 / 3.0 * inp.ip0 - b * b / (3.0 * inp.c1)) * t;
            let m3 = inp.i0 - b * inp.ip0 / (3.0 * inp.c1);
            let g = ((a3 * t + a2) * t + a1) * t + a0;
            (Some(g), Some(m2), Some(m3))
        }
        None => (None, None, None),
    };
    let condition_23_satisfied = match condition {
        Some(p) if inp.ip0 != 0.0 => {
            let rhs = p.c * (3.0 * inp.i0 / inp.ip0.abs() + inp.k) * p.norm_ratio;
            Some(inp.ee0 - 2.0 * inp.ke0 >= rhs)
        }
        _ => None,
    };
    let verdict = match (inp.ip0 < 0.0, g_at_t2) {
        (true, Some(g)) if g < 0.0 => Verdict::BlowupPredicted,
        _ => Verdict::Inconclusive,
    };
    Ok(CriterionReport {
        a3,
        a2,
        a1,
        a0,
        inertia_dd0: idd0,
        discriminant,
        t2,
        g_at_t2,
        m2,
        m3,
        condition_23_satisfied,
        verdict,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollapseReport {
    pub epsilon: f64,
    /// (t, 2 I(t) / epsilon^2) per sample: an upper bound for the mass
    /// outside the ball of radius epsilon.
    pub bounds: Vec<(f64, f64)>,
    /// Whether the bound decreases strictly over the final third of the
    /// series (the collapse signature).
    pub trend_decreasing: bool,
}

pub fn collapse_monitor(series: &[DiagnosticsRecord], epsilon: f64) -> Result<CollapseReport> {
    if series.len() < 3 {
        return Err(VpilError::Diagnostics(format!(
            "collapse monitor needs at least 3 samples, got {}",
            series.len()
        )));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(VpilError::InvalidParameter(format!(
            "collapse radius must be positive and finite, got {epsilon}"
        )));
    }
    let bounds: Vec<(f64, f64)> = series
        .iter()
        .map(|r| (r.t, 2.0 * r.inertia / (epsilon * epsilon)))
        .collect();
    let tail_start = (2 * bounds.len() / 3).min(bounds.len() - 2);
    let tail = &bounds[tail_start..];
    let trend_decreasing = tail.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(CollapseReport {
        epsilon,
        bounds,
        trend_decreasing,
    })
}
