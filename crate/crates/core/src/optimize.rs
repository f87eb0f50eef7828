//! Minimizers for the two power-allocation objectives.

use serde::Serialize;

use crate::mse::{BetaObjective, PirsObjective};
use crate::poly::{roots_up_to_quartic, solve_quartic_ferrari};

/// Imaginary parts below this are treated as numerical noise.
pub const IMAG_TOL: f64 = 1e-8;
/// Admissible β interval.
pub const BETA_MIN: f64 = 1e-9;
pub const BETA_MAX: f64 = 1.0 - 1e-9;
const FALLBACK_GRID: usize = 10_001;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OptStatus {
    /// The minimizer is an interior stationary point.
    Stationary,
    /// No admissible stationary point; the reported point is the best grid
    /// sample (β) or the limit of a monotone objective (P_IRS).
    NoInteriorOptimum,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptResult {
    pub argmin: f64,
    pub value: f64,
    /// Admissible stationary points that were compared.
    pub candidates: Vec<f64>,
    /// The leading derivative coefficient vanished, so a lower-degree solve
    /// and a grid scan were used.
    pub fallback_used: bool,
    pub status: OptStatus,
}

/// Best finite sample of `f` on `points` evenly spaced abscissae of
/// `[lo, hi]`, endpoints included.
pub fn grid_search<F: Fn(f64) -> Option<f64>>(
    f: F,
    lo: f64,
    hi: f64,
    points: usize,
) -> Option<(f64, f64)> {
    let steps = points.max(2) - 1;
    (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .filter_map(|x| f(x).filter(|v| v.is_finite()).map(|v| (x, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

fn admissible(z: &crate::linalg::C64) -> bool {
    z.im.abs() < IMAG_TOL && z.re >= BETA_MIN && z.re <= BETA_MAX
}

/// Minimize `ε(β)` over `(0, 1)` via the real roots of `ε'(β)`'s numerator.
pub fn optimize_beta(obj: &BetaObjective) -> OptResult {
    let fallback_used = obj.d.is_none();
    let roots = match obj.d {
        Some(d) => solve_quartic_ferrari(d).roots.to_vec(),
        None => roots_up_to_quartic(&obj.c),
    };
    let eval = |b: f64| obj.eval(b).ok().filter(|v| v.is_finite());
    let candidates: Vec<f64> = roots
        .iter()
        .filter(|z| admissible(z))
        .map(|z| z.re)
        .collect();
    let mut best = candidates
        .iter()
        .filter_map(|&b| eval(b).map(|v| (b, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    let mut status = OptStatus::Stationary;

    if fallback_used || best.is_none() {
        if let Some(g) = grid_search(eval, BETA_MIN, BETA_MAX, FALLBACK_GRID) {
            if best.map_or(true, |b| g.1 < b.1 - 1e-12 * b.1.abs()) {
                best = Some(g);
                status = OptStatus::NoInteriorOptimum;
            }
        }
    }
    let (argmin, value) = best.unwrap_or((f64::NAN, f64::NAN));
    if best.is_none() {
        status = OptStatus::NoInteriorOptimum;
    }
    OptResult {
        argmin,
        value,
        candidates,
        fallback_used,
        status,
    }
}

/// Minimize `ε(P_IRS)`; the stationary point is `√(e₃/e₁)`.
pub fn optimize_pirs(obj: &PirsObjective) -> OptResult {
    let [e1, e2, e3, e4] = obj.e;
    let limit = e2 / e4;
    let boundary = |argmin| OptResult {
        argmin,
        value: limit,
        candidates: Vec::new(),
        fallback_used: false,
        status: OptStatus::NoInteriorOptimum,
    };
    if !(e1 > 0.0) {
        // Monotone decreasing: the infimum is approached as P_IRS grows.
        return boundary(f64::INFINITY);
    }
    if !(e3 > 0.0) {
        return boundary(0.0);
    }
    let p = (e3 / e1).sqrt();
    OptResult {
        argmin: p,
        value: obj.eval(p).unwrap_or(f64::NAN),
        candidates: vec![p],
        fallback_used: false,
        status: OptStatus::Stationary,
    }
}
