//! Piecewise-linear epigraph form of the quadratic generation cost.
//!
//! A convex quadratic is replaced by the max of its secant chords on a
//! uniform grid. The chords over-estimate the true cost between breakpoints
//! by at most `a·h²/4` (h = segment width), are exact at the breakpoints,
//! and keep the scheduling problem linear.

use super::GenCost;
use crate::{Error, Result};

/// One affine piece `cost ≥ slope·p + intercept` of the epigraph.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostSegment {
    /// $/MW (per MW of setpoint, for the interval's cost term).
    pub slope: f64,
    /// $.
    pub intercept: f64,
}

/// Secant segments of `cost` on a uniform grid over `[pmin, pmax]` MW.
///
/// A linear cost (`a == 0`) collapses to a single exact segment whatever
/// `nseg` says. The returned pieces satisfy, for all p in range,
/// `0 ≤ max_k(slope_k·p + intercept_k) − cost(p) ≤ a·((pmax−pmin)/nseg)²/4`,
/// with equality at segment midpoints.
pub fn piecewise_cost(cost: &GenCost, pmin: f64, pmax: f64, nseg: usize) -> Result<Vec<CostSegment>> {
    if !(cost.a.is_finite() && cost.b.is_finite() && cost.c.is_finite()) {
        return Err(Error::Params("non-finite cost coefficients".into()));
    }
    if cost.a < 0.0 {
        return Err(Error::Params(format!("nonconvex cost: a = {} < 0", cost.a)));
    }
    if !(pmin.is_finite() && pmax.is_finite() && pmin < pmax) {
        return Err(Error::Params(format!(
            "invalid setpoint range [{pmin}, {pmax}] MW"
        )));
    }
    if nseg == 0 {
        return Err(Error::Params("need at least one cost segment".into()));
    }
    // Chord of the quadratic between p0 and p1:
    //   slope = a·(p0 + p1) + b, intercept chosen to pass through (p0, C(p0)).
    let chord = |p0: f64, p1: f64| {
        let slope = cost.a * (p0 + p1) + cost.b;
        CostSegment { slope, intercept: cost.energy_cost(p0) - slope * p0 }
    };
    if cost.a == 0.0 {
        return Ok(vec![chord(pmin, pmax)]);
    }
    let h = (pmax - pmin) / nseg as f64;
    Ok((0..nseg)
        .map(|k| chord(pmin + k as f64 * h, pmin + (k + 1) as f64 * h))
        .collect())
}

/// Value of the epigraph surrogate at `p`: the largest segment value.
pub fn eval_segments(segs: &[CostSegment], p: f64) -> f64 {
    segs.iter()
        .map(|s| s.slope * p + s.intercept)
        .fold(f64::NEG_INFINITY, f64::max)
}
