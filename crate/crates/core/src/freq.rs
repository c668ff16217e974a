//! Reduced-order frequency dynamics of a mixed synchronous/inverter system.
//!
//! All units are lumped into one second-order synthetic model. Synchronous
//! generators contribute inertia, load damping, and a lead-lag governor with
//! a shared turbine constant; inverter-based resources contribute virtual
//! inertia and damping measured through a fast first-order lag. For a step
//! load change the closed forms below give the frequency deviation, its
//! nadir, the initial rate of change, and each inverter's power response
//! with the exact peak, without any numerical search. `oracle_trace`
//! integrates the full block diagram (lags included) with fixed-step RK4 and
//! serves as an independent cross-check on every closed form.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Synchronous generator dynamic data, per-unit on its own `mva_base`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgParams {
    pub id: String,
    /// Inertia constant (2H), p.u.·s.
    pub inertia_m: f64,
    /// Load-damping coefficient, p.u.
    pub damping_d: f64,
    /// Governor mechanical gain, p.u.
    pub gain_k: f64,
    /// Droop, p.u. (speed regulation; the static gain is `gain_k / droop_r`).
    pub droop_r: f64,
    /// High-pressure turbine fraction, dimensionless.
    pub fraction_f: f64,
    /// Turbine/reheat time constant, seconds.
    pub turbine_t: f64,
    pub mva_base: f64,
}

/// Inverter-based resource dynamic data, per-unit on its own `mva_base`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IbrParams {
    pub id: String,
    /// Virtual inertia currently provided, p.u.·s.
    pub virtual_m: f64,
    /// Virtual damping currently provided, p.u.
    pub virtual_d: f64,
    /// Frequency-measurement lag, seconds. Two to three orders below the
    /// turbine constant.
    pub lag_t: f64,
    pub mva_base: f64,
    /// Feasible range for scheduled virtual inertia, p.u.·s.
    pub m_bounds: (f64, f64),
    /// Feasible range for scheduled virtual damping, p.u.
    pub d_bounds: (f64, f64),
    /// Values used when virtual inertia is not scheduled per interval.
    pub default_m: f64,
    pub default_d: f64,
}

impl IbrParams {
    /// Convenience constructor for analysis work where bounds and defaults
    /// do not matter: both bounds collapse onto the given values.
    pub fn fixed(id: &str, virtual_m: f64, virtual_d: f64, lag_t: f64, mva_base: f64) -> Self {
        IbrParams {
            id: id.to_string(),
            virtual_m,
            virtual_d,
            lag_t,
            mva_base,
            m_bounds: (virtual_m, virtual_m),
            d_bounds: (virtual_d, virtual_d),
            default_m: virtual_m,
            default_d: virtual_d,
        }
    }
}

/// Aggregated system model: one swing equation, one governor, one pair of
/// characteristic-polynomial coordinates.
///
/// `f_agg` is the aggregate transient governor gain Σ(K·F/R)·w, on the same
/// footing as `r_agg` = Σ(K/R)·w, so the damping ratio formula below is the
/// exact second-order reduction of the underlying block diagram.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    /// Total inertia, p.u.·s (synchronous plus virtual).
    pub m: f64,
    /// Total damping, p.u. (load damping plus virtual).
    pub d: f64,
    /// Aggregate static governor gain, p.u.
    pub r_agg: f64,
    /// Aggregate transient governor gain, p.u.
    pub f_agg: f64,
    /// Shared turbine time constant, seconds.
    pub t: f64,
    /// Natural frequency of the characteristic polynomial, rad/s.
    pub w_n: f64,
    /// Damping ratio.
    pub zeta: f64,
    /// Damped frequency, rad/s (zero when not underdamped).
    pub w_d: f64,
    /// System base power, MVA. Carries the per-unit footing of `m`, `d`.
    pub system_mva: f64,
    /// Nominal frequency, Hz.
    pub f0: f64,
}

impl SyntheticParams {
    /// Build directly from aggregate quantities.
    pub fn from_aggregates(
        m: f64,
        d: f64,
        r_agg: f64,
        f_agg: f64,
        t: f64,
        system_mva: f64,
        f0: f64,
    ) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::Params(format!("nonpositive inertia M = {m}")));
        }
        if !(t > 0.0) {
            return Err(Error::Params(format!("nonpositive turbine constant T = {t}")));
        }
        if !(d + r_agg > 0.0) {
            return Err(Error::Params(format!(
                "nonpositive net damping D + R_agg = {}",
                d + r_agg
            )));
        }
        if !(system_mva > 0.0) {
            return Err(Error::Params(format!("nonpositive system base {system_mva} MVA")));
        }
        let w_n = ((d + r_agg) / (m * t)).sqrt();
        let zeta = (m + t * (d + f_agg)) / (2.0 * (m * t * (d + r_agg)).sqrt());
        let w_d = if zeta < 1.0 {
            (1.0 - zeta * zeta).sqrt() * w_n
        } else {
            0.0
        };
        Ok(SyntheticParams { m, d, r_agg, f_agg, t, w_n, zeta, w_d, system_mva, f0 })
    }
}

/// Capacity-weighted aggregation of unit parameters into the synthetic model.
///
/// Weights are `mva_base / system_mva`. Inertia and damping sum over both
/// synchronous and inverter units; governor gains come from synchronous
/// units alone. All turbine constants must agree.
pub fn aggregate_params(
    sgs: &[SgParams],
    ibrs: &[IbrParams],
    system_mva: f64,
    f0: f64,
) -> Result<SyntheticParams> {
    if sgs.is_empty() {
        return Err(Error::Params("no synchronous source".into()));
    }
    let t = sgs[0].turbine_t;
    for sg in sgs {
        if (sg.turbine_t - t).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(Error::Params("heterogeneous turbine constants".into()));
        }
        if !(sg.droop_r > 0.0) {
            return Err(Error::Params(format!("nonpositive droop on {}", sg.id)));
        }
    }
    let mut m = 0.0;
    let mut d = 0.0;
    let mut r_agg = 0.0;
    let mut f_agg = 0.0;
    for sg in sgs {
        let w = sg.mva_base / system_mva;
        m += sg.inertia_m * w;
        d += sg.damping_d * w;
        r_agg += sg.gain_k / sg.droop_r * w;
        f_agg += sg.gain_k * sg.fraction_f / sg.droop_r * w;
    }
    for ibr in ibrs {
        let w = ibr.mva_base / system_mva;
        m += ibr.virtual_m * w;
        d += ibr.virtual_d * w;
    }
    SyntheticParams::from_aggregates(m, d, r_agg, f_agg, t, system_mva, f0)
}

/// True iff both characteristic roots lie strictly in the left half-plane
/// and the model preconditions hold.
pub fn stability_check(p: &SyntheticParams) -> bool {
    p.m > 0.0 && p.t > 0.0 && p.d + p.r_agg > 0.0 && p.zeta > 0.0
}

/// Shape constants of the underdamped step response, independent of the
/// disturbance size.
struct Shape {
    zw: f64,
    eta: f64,
    phi: f64,
}

fn shape(p: &SyntheticParams) -> Result<Shape> {
    if !(p.zeta < 1.0) {
        return Err(Error::Unsupported("overdamped: closed form unsupported".into()));
    }
    let zw = p.zeta * p.w_n;
    let gamma = (zw - p.t * p.w_n * p.w_n) / p.w_d;
    let eta = (1.0 + gamma * gamma).sqrt();
    let phi = f64::atan2(1.0, gamma);
    Ok(Shape { zw, eta, phi })
}

fn gain(p: &SyntheticParams, d_pe: f64) -> f64 {
    d_pe / (p.m * p.t * p.w_n * p.w_n)
}

/// Frequency deviation at time `t` after a step load change `d_pe`
/// (positive = load increase, so the deviation is negative).
pub fn freq_at(p: &SyntheticParams, d_pe: f64, t: f64) -> Result<f64> {
    let s = shape(p)?;
    if !(t >= 0.0) {
        return Err(Error::Params(format!("negative time {t}")));
    }
    if t == 0.0 || d_pe == 0.0 {
        return Ok(0.0);
    }
    let k = gain(p, d_pe);
    Ok(-k * (1.0 - s.eta * (-s.zw * t).exp() * (p.w_d * t + s.phi).sin()))
}

/// Extrema and envelope constants of the frequency response.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreqMetrics {
    /// Time of the frequency nadir, seconds.
    pub t_nadir: f64,
    /// Deviation at the nadir, p.u. (signed; negative for a load increase).
    pub delta_f_nadir: f64,
    /// Initial rate of change of frequency, p.u./s. Exactly `-d_pe / M`.
    pub rocof0: f64,
    /// Magnitude-style steady-state depression, `d_pe / (M·T·w_n²)`.
    pub delta_f_ss: f64,
    /// Envelope amplitude of the oscillatory term.
    pub eta: f64,
    /// Phase of the oscillatory term, rad.
    pub phi: f64,
}

/// Closed-form frequency metrics for a step disturbance.
pub fn freq_metrics(p: &SyntheticParams, d_pe: f64) -> Result<FreqMetrics> {
    let s = shape(p)?;
    if d_pe == 0.0 {
        return Ok(FreqMetrics {
            t_nadir: 0.0,
            delta_f_nadir: 0.0,
            rocof0: 0.0,
            delta_f_ss: 0.0,
            eta: 0.0,
            phi: 0.0,
        });
    }
    // First zero of dΔf/dt: the sinusoid phase advances from phi to the
    // governor-shifted angle; atan2 keeps the result in (0, pi / w_d).
    let t_nadir = f64::atan2(p.t * p.w_d, s.zw * p.t - 1.0) / p.w_d;
    Ok(FreqMetrics {
        t_nadir,
        delta_f_nadir: freq_at(p, d_pe, t_nadir)?,
        rocof0: -d_pe / p.m,
        delta_f_ss: gain(p, d_pe),
        eta: s.eta,
        phi: s.phi,
    })
}

/// Power-response coefficients in D-scaled form, regular at `virtual_d = 0`.
struct PowerShape {
    k: f64,
    a_s: f64,
    b_s: f64,
    c_s: f64,
}

fn power_shape(p: &SyntheticParams, ibr: &IbrParams, d_pe: f64, s: &Shape) -> PowerShape {
    let wn2 = p.w_n * p.w_n;
    let k = gain(p, d_pe);
    let a_s = ibr.virtual_d - ibr.virtual_m * p.t * wn2;
    let b_s = (2.0 * s.zw - p.t * wn2) * ibr.virtual_d - ibr.virtual_m * wn2;
    let c_s = (b_s - a_s * s.zw) / p.w_d;
    PowerShape { k, a_s, b_s, c_s }
}

fn power_value(p: &SyntheticParams, ibr: &IbrParams, s: &Shape, ps: &PowerShape, t: f64) -> f64 {
    ps.k * (ibr.virtual_d
        - (-s.zw * t).exp() * (ps.a_s * (p.w_d * t).cos() + ps.c_s * (p.w_d * t).sin()))
}

/// Inverter power response at time `t`, per-unit on the inverter's own base.
///
/// The value at exactly `t = 0` is 0 (pre-disturbance rest); the closed form
/// jumps to `d_pe·virtual_m / M` immediately after, which the measurement
/// lag smooths in the full model.
pub fn power_at(p: &SyntheticParams, ibr: &IbrParams, d_pe: f64, t: f64) -> Result<f64> {
    let s = shape(p)?;
    if !(t >= 0.0) {
        return Err(Error::Params(format!("negative time {t}")));
    }
    if t == 0.0 || d_pe == 0.0 {
        return Ok(0.0);
    }
    let ps = power_shape(p, ibr, d_pe, &s);
    Ok(power_value(p, ibr, &s, &ps, t))
}

/// Extrema and envelope constants of an inverter's power response.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerMetrics {
    /// Time of the largest-magnitude response, seconds. Zero when the
    /// initial inertial jump is never exceeded; `delta_p_max` then carries
    /// the jump value (the limit from above).
    pub t_peak: f64,
    /// Signed response of largest magnitude, p.u. on the inverter base.
    pub delta_p_max: f64,
    /// Steady-state response, `gain·virtual_d`, p.u.
    pub delta_p_ss: f64,
    /// Cosine coefficient of the oscillatory term (D-scaled alpha).
    pub alpha_scaled: f64,
    /// Phase-rate coefficient of the oscillatory term (D-scaled beta).
    pub beta_scaled: f64,
    /// Envelope amplitude of the oscillatory term.
    pub eta_p: f64,
    /// Phase of the oscillatory term, rad.
    pub phi_p: f64,
}

/// Closed-form power-response metrics for a step disturbance.
///
/// The peak is the largest-magnitude value over the initial jump and the
/// first two interior extrema; later extrema are closer to steady state by
/// the decaying envelope.
pub fn power_metrics(p: &SyntheticParams, ibr: &IbrParams, d_pe: f64) -> Result<PowerMetrics> {
    let s = shape(p)?;
    if d_pe == 0.0 {
        return Ok(PowerMetrics {
            t_peak: 0.0,
            delta_p_max: 0.0,
            delta_p_ss: 0.0,
            alpha_scaled: 0.0,
            beta_scaled: 0.0,
            eta_p: 0.0,
            phi_p: 0.0,
        });
    }
    let ps = power_shape(p, ibr, d_pe, &s);
    let half = std::f64::consts::PI / p.w_d;
    // Zeros of the response derivative, half a damped period apart; the
    // atan2 of (0, 0) in the fully degenerate zero-response case is 0, which
    // falls through to an all-zero candidate set.
    let num = p.w_d * (ps.b_s - 2.0 * s.zw * ps.a_s);
    let den = s.zw * ps.b_s + ps.a_s * (p.w_d * p.w_d - s.zw * s.zw);
    let mut t1 = f64::atan2(num, den) / p.w_d;
    if t1 <= 0.0 {
        t1 += half;
    }
    let t2 = t1 + half;
    let jump = ps.k * (ibr.virtual_d - ps.a_s);
    let mut t_peak = 0.0;
    let mut delta_p_max = jump;
    for tc in [t1, t2] {
        let v = power_value(p, ibr, &s, &ps, tc);
        if v.abs() > delta_p_max.abs() {
            t_peak = tc;
            delta_p_max = v;
        }
    }
    Ok(PowerMetrics {
        t_peak,
        delta_p_max,
        delta_p_ss: ps.k * ibr.virtual_d,
        alpha_scaled: ps.a_s,
        beta_scaled: ps.b_s,
        eta_p: f64::hypot(ps.a_s, ps.c_s),
        phi_p: f64::atan2(ps.a_s, ps.c_s),
    })
}

/// Fixed-step RK4 trace of the full block diagram.
#[derive(Clone, Debug)]
pub struct OracleTrace {
    pub t: Vec<f64>,
    /// Frequency deviation, p.u.
    pub delta_f: Vec<f64>,
    /// Per-inverter power response, p.u. on each inverter's own base;
    /// outer index follows the `ibrs` argument.
    pub ibr_power: Vec<Vec<f64>>,
}

/// Integrate the aggregate swing, the governor, and each inverter's lagged
/// response channel from rest under a step load change.
///
/// `p` must be the aggregate of the same system the `ibrs` belong to: their
/// ideal contributions are removed from the lumped inertia and damping and
/// replaced by explicit lagged channels, so the trace is the full-order
/// reference the closed forms approximate. No state is differentiated
/// numerically; inverter power comes from the proper state-space
/// realization of each `(virtual_m·s + virtual_d) / (1 + s·lag_t)` block.
pub fn oracle_trace(
    p: &SyntheticParams,
    ibrs: &[IbrParams],
    d_pe: f64,
    dt: f64,
    horizon: f64,
) -> Result<OracleTrace> {
    if !(dt > 0.0) || !(horizon > 0.0) {
        return Err(Error::Params(format!("nonpositive step or horizon ({dt}, {horizon})")));
    }
    struct Chan {
        w: f64,
        direct: f64,
        state_gain: f64,
        inv_lag: f64,
    }
    let mut m_sw = p.m;
    let mut d_sw = p.d;
    let mut chans = Vec::with_capacity(ibrs.len());
    for ibr in ibrs {
        if !(ibr.lag_t > 0.0) {
            return Err(Error::Params(format!("nonpositive lag on {}", ibr.id)));
        }
        let w = ibr.mva_base / p.system_mva;
        m_sw -= w * ibr.virtual_m;
        d_sw -= w * ibr.virtual_d;
        let direct = ibr.virtual_m / ibr.lag_t;
        chans.push(Chan {
            w,
            direct,
            state_gain: ibr.virtual_d - direct,
            inv_lag: 1.0 / ibr.lag_t,
        });
    }
    if !(m_sw > 1e-12) {
        return Err(Error::Params(
            "inverter channels remove all synchronous inertia".into(),
        ));
    }

    let n_states = 2 + chans.len();
    let deriv = |s: &[f64], out: &mut [f64]| {
        let df = s[0];
        let u = -df;
        let gov = p.f_agg * u + s[1];
        out[1] = ((p.r_agg - p.f_agg) * u - s[1]) / p.t;
        let mut inj = gov;
        for (j, c) in chans.iter().enumerate() {
            let x = s[2 + j];
            inj += c.w * (c.direct * u + x);
            out[2 + j] = (c.state_gain * u - x) * c.inv_lag;
        }
        out[0] = (inj - d_pe - d_sw * df) / m_sw;
    };

    let steps = (horizon / dt).ceil() as usize;
    let mut state = vec![0.0; n_states];
    let mut k1 = vec![0.0; n_states];
    let mut k2 = vec![0.0; n_states];
    let mut k3 = vec![0.0; n_states];
    let mut k4 = vec![0.0; n_states];
    let mut tmp = vec![0.0; n_states];

    let mut trace = OracleTrace {
        t: Vec::with_capacity(steps + 1),
        delta_f: Vec::with_capacity(steps + 1),
        ibr_power: vec![Vec::with_capacity(steps + 1); chans.len()],
    };
    let record = |trace: &mut OracleTrace, t: f64, s: &[f64]| {
        trace.t.push(t);
        trace.delta_f.push(s[0]);
        for (j, c) in chans.iter().enumerate() {
            trace.ibr_power[j].push(c.direct * (-s[0]) + s[2 + j]);
        }
    };
    record(&mut trace, 0.0, &state);

    for step in 1..=steps {
        deriv(&state, &mut k1);
        for i in 0..n_states {
            tmp[i] = state[i] + 0.5 * dt * k1[i];
        }
        deriv(&tmp, &mut k2);
        for i in 0..n_states {
            tmp[i] = state[i] + 0.5 * dt * k2[i];
        }
        deriv(&tmp, &mut k3);
        for i in 0..n_states {
            tmp[i] = state[i] + dt * k3[i];
        }
        deriv(&tmp, &mut k4);
        for i in 0..n_states {
            state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if !state[0].is_finite() || state[0].abs() > 10.0 {
            return Err(Error::Numerics("oracle diverged".into()));
        }
        record(&mut trace, step as f64 * dt, &state);
    }
    Ok(trace)
}
