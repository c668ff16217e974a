//! Reduced-order time-domain verification of a dispatch schedule.
//!
//! One uniform frequency state is driven by the mismatch between scheduled
//! generation and the second-by-second load, with every synchronous governor
//! and every inverter response channel realized as its own first-order state
//! (no signal is differentiated numerically). Setpoints and inverter control
//! parameters switch at interval boundaries; a sampled-and-held PI secondary
//! controller trims the remaining imbalance through the synchronous units.
//! [`violation_report`] then counts rate-of-change, nadir-band, and inverter
//! capacity excursions, at most one per interval per category.

use serde::{Deserialize, Serialize};

use crate::casedata::{Case, LoadProfile};
use crate::dispatch::DispatchSolution;
use crate::{Error, Result};

/// Integration, recording, secondary-control, and accounting settings.
///
/// The integration step must divide the 1 s load grid and stay below a tenth
/// of the fastest device time constant; [`SimConfig::for_case`] picks the
/// largest such step. Recording is decimated onto its own grid (full-rate
/// storage of an hour-long run is enormous, and every excursion of interest
/// lives on much slower timescales than the step).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Integration step, seconds.
    pub dt_s: f64,
    /// Trace grid, seconds; a multiple of `dt_s`.
    pub record_dt_s: f64,
    /// Secondary control on/off (off leaves only the primary response).
    pub agc_enabled: bool,
    /// Command refresh period, seconds; the signal is held in between.
    pub agc_period_s: f64,
    /// Proportional gain, p.u. command per p.u. frequency error.
    pub agc_kp: f64,
    /// Integral gain, p.u. command per p.u.·s accumulated error.
    pub agc_ki: f64,
    /// First-order measurement filter ahead of the controller, seconds.
    pub agc_filter_t_s: f64,
    /// Width of the central difference used for the rate series, seconds.
    pub rocof_window_s: f64,
    /// Nominal frequency, Hz.
    pub f0: f64,
    /// Rate-of-change limit for violation accounting, Hz/s.
    pub rocof_lim_hz_per_s: f64,
    /// Nadir band for violation accounting, Hz around nominal.
    pub nadir_band_hz: f64,
    /// Capacity-violation deadband as a fraction of each inverter's
    /// capacity. Inverters are routinely dispatched exactly at capacity, so
    /// without a deadband every regulation-scale wiggle of an inverter with
    /// a virtual response would count as an excursion.
    pub capacity_tol_frac: f64,
}

impl SimConfig {
    /// Defaults sized to `case`: the step divides 1 s and sits at or below a
    /// tenth of the fastest lag; 0.1 s rate window; 4 s secondary-control
    /// refresh with conventional single-area gains; limits from the case.
    pub fn for_case(case: &Case) -> Self {
        let mut fastest = 0.1_f64;
        for sg in &case.sgs {
            fastest = fastest.min(sg.params.turbine_t);
        }
        for ibr in &case.ibrs {
            fastest = fastest.min(ibr.params.lag_t);
        }
        let raw = (fastest / 10.0).min(0.01);
        // Largest 1/n step not exceeding a tenth of the fastest constant.
        let dt = 1.0 / (1.0 / raw).ceil();
        SimConfig {
            dt_s: dt,
            record_dt_s: 0.01_f64.max(dt),
            agc_enabled: true,
            agc_period_s: 4.0,
            agc_kp: 0.05,
            agc_ki: 0.5,
            agc_filter_t_s: 0.2,
            rocof_window_s: 0.1,
            f0: case.f0,
            rocof_lim_hz_per_s: case.limits.rocof_hz_per_s,
            nadir_band_hz: case.limits.nadir_band_hz,
            capacity_tol_frac: 0.005,
        }
    }
}

/// Recorded run: aligned series on the recording grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub t_s: Vec<f64>,
    /// System frequency, Hz; starts at nominal.
    pub f_hz: Vec<f64>,
    /// Windowed rate of change, Hz/s.
    pub rocof_hz_per_s: Vec<f64>,
    /// Held secondary-control command, MW (positive raises generation).
    pub agc_mw: Vec<f64>,
    pub sg_ids: Vec<String>,
    /// Mechanical power per synchronous unit, MW; outer index follows
    /// `sg_ids`.
    pub sg_mw: Vec<Vec<f64>>,
    pub ibr_ids: Vec<String>,
    /// Electrical power per inverter, MW; outer index follows `ibr_ids`.
    pub ibr_mw: Vec<Vec<f64>>,
}

/// One category's tally: intervals hit (at most one count per interval) and
/// the worst excursion seen anywhere.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryStat {
    pub count: usize,
    /// Hz/s for the rate category, Hz for nadir, MW beyond the limit for
    /// capacity.
    pub worst: f64,
}

/// Per-interval flags and extrema behind the category tallies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalViolations {
    pub index: usize,
    pub rocof: bool,
    pub nadir: bool,
    pub ibr_capacity: bool,
    pub max_rocof_hz_per_s: f64,
    pub max_freq_dev_hz: f64,
    /// Largest margin by which any inverter left its `[0, capacity]` range,
    /// MW; negative when every inverter stayed inside with room to spare.
    pub max_overage_mw: f64,
}

/// Violation accounting over a simulated horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub rocof: CategoryStat,
    pub nadir: CategoryStat,
    pub ibr_capacity: CategoryStat,
    pub intervals: Vec<IntervalViolations>,
}

impl ViolationReport {
    /// Counts across all three categories.
    pub fn total(&self) -> usize {
        self.rocof.count + self.nadir.count + self.ibr_capacity.count
    }
}

/// Per-inverter channel coefficients in effect during one interval.
#[derive(Clone, Copy)]
struct ChanGains {
    /// Feedthrough `M / T_lag`, p.u. on the unit base.
    direct: f64,
    /// Gain into the lag state, `D − M / T_lag`.
    state_gain: f64,
}

/// Everything that is piecewise constant over a dispatch interval.
struct IntervalInputs {
    /// Scheduled total generation, p.u. on the dynamics base.
    g_sched: f64,
    /// Setpoints in MW, aligned to the case unit order.
    p_sg_mw: Vec<f64>,
    p_ibr_mw: Vec<f64>,
    gains: Vec<ChanGains>,
    /// Secondary-control participation per synchronous unit (sums to 1).
    shares: Vec<f64>,
}

fn validate_alignment(case: &Case, solution: &DispatchSolution) -> Result<()> {
    if solution.intervals.is_empty() {
        return Err(Error::Params("empty schedule".into()));
    }
    for (t, iv) in solution.intervals.iter().enumerate() {
        if iv.index != t {
            return Err(Error::Params(format!(
                "schedule intervals must be contiguous from 0: found index {} at position {t}",
                iv.index
            )));
        }
        if iv.p_sg_mw.len() != case.sgs.len() || iv.p_ibr_mw.len() != case.ibrs.len() {
            return Err(Error::Params(format!(
                "interval {t} lists {} synchronous and {} inverter setpoints, case has {} and {}",
                iv.p_sg_mw.len(),
                iv.p_ibr_mw.len(),
                case.sgs.len(),
                case.ibrs.len()
            )));
        }
        if iv.m_ibr.len() != case.ibrs.len() || iv.d_ibr.len() != case.ibrs.len() {
            return Err(Error::Params(format!(
                "interval {t} schedules virtual (M, D) for {} inverters, case has {}",
                iv.m_ibr.len().min(iv.d_ibr.len()),
                case.ibrs.len()
            )));
        }
        for v in iv.p_sg_mw.iter().chain(&iv.p_ibr_mw).chain(&iv.m_ibr).chain(&iv.d_ibr) {
            if !v.is_finite() {
                return Err(Error::Params(format!("non-finite value in interval {t}'s schedule")));
            }
        }
        for (j, (&m, &d)) in iv.m_ibr.iter().zip(&iv.d_ibr).enumerate() {
            if m < 0.0 || d < 0.0 {
                return Err(Error::Params(format!(
                    "negative virtual (M, D) = ({m}, {d}) for {} in interval {t}",
                    case.ibrs[j].params.id
                )));
            }
        }
    }
    Ok(())
}

/// Exact whole-number ratio of two step sizes, or an error naming `what`.
fn exact_ratio(num: f64, den: f64, what: &str) -> Result<usize> {
    let r = num / den;
    let k = r.round();
    if !(k >= 1.0) || (r - k).abs() > 1e-9 * k {
        return Err(Error::Params(format!(
            "{what} ({num} s) must be a whole multiple of the integration step ({den} s)"
        )));
    }
    Ok(k as usize)
}

/// Integrate the schedule against the second-by-second load.
///
/// The frequency state obeys the synchronous swing; each governor
/// contributes through its own transient-droop state, each inverter through
/// its own lag state using the (M, D) scheduled for the active interval (an
/// inverter scheduled at (0, 0) contributes nothing). Load samples,
/// setpoints, and the held secondary command are all piecewise constant, and
/// every switching instant is a whole number of integration steps, so each
/// Runge–Kutta step integrates a smooth segment exactly.
pub fn simulate(
    case: &Case,
    solution: &DispatchSolution,
    profile: &LoadProfile,
    cfg: &SimConfig,
) -> Result<SimTrace> {
    validate_alignment(case, solution)?;
    let n_int = solution.intervals.len();
    if profile.resolution_s != 1 || profile.series_mw.len() as u64 != profile.duration_s {
        return Err(Error::Params("profile must be on a 1 s grid covering its duration".into()));
    }
    if profile.duration_s % n_int as u64 != 0 {
        return Err(Error::Params(format!(
            "profile covers {} s, not divisible into {n_int} equal intervals",
            profile.duration_s
        )));
    }
    let interval_s = (profile.duration_s / n_int as u64) as usize;
    if interval_s == 0 {
        return Err(Error::Params(format!(
            "profile covers {} s, shorter than the {n_int}-interval schedule",
            profile.duration_s
        )));
    }
    let dt = cfg.dt_s;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Params(format!("nonpositive integration step {dt} s")));
    }
    let steps_per_sec = exact_ratio(1.0, dt, "the 1 s load grid")?;
    let record_every = exact_ratio(cfg.record_dt_s, dt, "the recording grid")?;
    let agc_every = exact_ratio(cfg.agc_period_s, dt, "the secondary-control period")?;
    if !(cfg.rocof_window_s >= 2.0 * dt) {
        return Err(Error::Params(format!(
            "rate window {} s must cover at least two steps of {dt} s",
            cfg.rocof_window_s
        )));
    }
    let mut fastest = f64::INFINITY;
    for sg in &case.sgs {
        fastest = fastest.min(sg.params.turbine_t);
    }
    for ibr in &case.ibrs {
        fastest = fastest.min(ibr.params.lag_t);
    }
    if dt > fastest / 10.0 + 1e-12 {
        return Err(Error::Params(format!(
            "integration step {dt} s exceeds a tenth of the fastest device constant ({fastest} s)"
        )));
    }
    if !(cfg.agc_filter_t_s > 0.0) {
        return Err(Error::Params(format!(
            "nonpositive secondary-control filter constant {} s",
            cfg.agc_filter_t_s
        )));
    }

    let s_sys = case.system_mva;
    let nsg = case.sgs.len();
    let nibr = case.ibrs.len();

    struct SgDyn {
        w: f64,
        static_gain: f64,
        f: f64,
        t: f64,
        mva: f64,
    }
    let mut m_sg = 0.0;
    let mut d_sg = 0.0;
    let sg_dyn: Vec<SgDyn> = case
        .sgs
        .iter()
        .map(|u| {
            let p = &u.params;
            let w = p.mva_base / s_sys;
            m_sg += w * p.inertia_m;
            d_sg += w * p.damping_d;
            SgDyn {
                w,
                static_gain: p.gain_k / p.droop_r,
                f: p.fraction_f,
                t: p.turbine_t,
                mva: p.mva_base,
            }
        })
        .collect();
    if !(m_sg > 0.0) {
        return Err(Error::Params("no synchronous inertia to integrate".into()));
    }
    struct IbrDyn {
        w: f64,
        inv_lag: f64,
        mva: f64,
    }
    let ibr_dyn: Vec<IbrDyn> = case
        .ibrs
        .iter()
        .map(|u| IbrDyn {
            w: u.params.mva_base / s_sys,
            inv_lag: 1.0 / u.params.lag_t,
            mva: u.params.mva_base,
        })
        .collect();

    // Piecewise-constant inputs per interval.
    let inputs: Vec<IntervalInputs> = solution
        .intervals
        .iter()
        .map(|iv| {
            let total_mw: f64 = iv.p_sg_mw.iter().chain(&iv.p_ibr_mw).sum();
            let gains = iv
                .m_ibr
                .iter()
                .zip(&iv.d_ibr)
                .zip(&case.ibrs)
                .map(|((&m, &d), u)| {
                    let direct = m / u.params.lag_t;
                    ChanGains { direct, state_gain: d - direct }
                })
                .collect();
            let ru_total: f64 = iv.ru_sg_mw.iter().sum();
            let shares = if ru_total > 1e-9 {
                iv.ru_sg_mw.iter().map(|r| r / ru_total).collect()
            } else {
                vec![1.0 / nsg as f64; nsg]
            };
            IntervalInputs {
                g_sched: total_mw / s_sys,
                p_sg_mw: iv.p_sg_mw.clone(),
                p_ibr_mw: iv.p_ibr_mw.clone(),
                gains,
                shares,
            }
        })
        .collect();

    // State layout: [df, governor states, inverter states, filter, integral].
    let n_states = 1 + nsg + nibr + 2;
    let i_filt = 1 + nsg + nibr;
    let i_int = i_filt + 1;
    let mut x = vec![0.0_f64; n_states];

    let deriv = |x: &[f64], d: &mut [f64], iv: &IntervalInputs, load_pu: f64, c: f64| {
        let df = x[0];
        let u = -df;
        let mut inj = c;
        for (i, sg) in sg_dyn.iter().enumerate() {
            let xg = x[1 + i];
            inj += sg.w * sg.static_gain * (sg.f * u + xg);
            d[1 + i] = ((1.0 - sg.f) * u - xg) / sg.t;
        }
        for (j, ib) in ibr_dyn.iter().enumerate() {
            let z = x[1 + nsg + j];
            let g = &iv.gains[j];
            inj += ib.w * (g.direct * u + z);
            d[1 + nsg + j] = (g.state_gain * u - z) * ib.inv_lag;
        }
        d[0] = (inj + iv.g_sched - load_pu - d_sg * df) / m_sg;
        d[i_filt] = (df - x[i_filt]) / cfg.agc_filter_t_s;
        d[i_int] = -x[i_filt];
    };

    let total_steps = profile.duration_s as usize * steps_per_sec;
    let steps_per_interval = interval_s * steps_per_sec;
    let n_rec = total_steps / record_every + 1;
    let mut trace = SimTrace {
        t_s: Vec::with_capacity(n_rec),
        f_hz: Vec::with_capacity(n_rec),
        rocof_hz_per_s: Vec::new(),
        agc_mw: Vec::with_capacity(n_rec),
        sg_ids: case.sgs.iter().map(|u| u.params.id.clone()).collect(),
        sg_mw: vec![Vec::with_capacity(n_rec); nsg],
        ibr_ids: case.ibrs.iter().map(|u| u.params.id.clone()).collect(),
        ibr_mw: vec![Vec::with_capacity(n_rec); nibr],
    };

    let mut c_held = 0.0_f64;
    let mut k1 = vec![0.0; n_states];
    let mut k2 = vec![0.0; n_states];
    let mut k3 = vec![0.0; n_states];
    let mut k4 = vec![0.0; n_states];
    let mut tmp = vec![0.0; n_states];

    // Whole seconds exactly, fractional offset via the step product — keeps
    // second and interval boundaries at exact float values over long runs.
    let t_of = |k: usize| (k / steps_per_sec) as f64 + (k % steps_per_sec) as f64 * dt;

    let record =
        |trace: &mut SimTrace, k: usize, x: &[f64], iv: &IntervalInputs, c: f64| {
            let df = x[0];
            let u = -df;
            trace.t_s.push(t_of(k));
            trace.f_hz.push(cfg.f0 * (1.0 + df));
            trace.agc_mw.push(c * s_sys);
            for (i, sg) in sg_dyn.iter().enumerate() {
                let dev = sg.static_gain * (sg.f * u + x[1 + i]);
                trace.sg_mw[i]
                    .push(iv.p_sg_mw[i] + dev * sg.mva + iv.shares[i] * c * s_sys);
            }
            for (j, ib) in ibr_dyn.iter().enumerate() {
                let g = &iv.gains[j];
                let dev = g.direct * u + x[1 + nsg + j];
                trace.ibr_mw[j].push(iv.p_ibr_mw[j] + dev * ib.mva);
            }
        };

    for k in 0..=total_steps {
        let interval = (k / steps_per_interval).min(n_int - 1);
        let iv = &inputs[interval];
        if cfg.agc_enabled && k % agc_every == 0 {
            c_held = cfg.agc_kp * (-x[i_filt]) + cfg.agc_ki * x[i_int];
        }
        let c = if cfg.agc_enabled { c_held } else { 0.0 };
        if !x[0].is_finite() {
            return Err(Error::Numerics(format!("simulation diverged at t = {} s", t_of(k))));
        }
        if k % record_every == 0 {
            record(&mut trace, k, &x, iv, c);
        }
        if k == total_steps {
            break;
        }
        let load_pu = profile.series_mw[k / steps_per_sec] / s_sys;
        if !load_pu.is_finite() {
            return Err(Error::Numerics(format!("simulation diverged at t = {} s", t_of(k))));
        }
        deriv(&x, &mut k1, iv, load_pu, c);
        for i in 0..n_states {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        deriv(&tmp, &mut k2, iv, load_pu, c);
        for i in 0..n_states {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        deriv(&tmp, &mut k3, iv, load_pu, c);
        for i in 0..n_states {
            tmp[i] = x[i] + dt * k3[i];
        }
        deriv(&tmp, &mut k4, iv, load_pu, c);
        for i in 0..n_states {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    trace.rocof_hz_per_s = rocof_series(&trace.t_s, &trace.f_hz, cfg.rocof_window_s)?;
    Ok(trace)
}

/// Symmetric central difference of a frequency series over `window_s`.
///
/// Interior points use the full window; within half a window of either end
/// the difference shrinks symmetrically (never one-sided), so an isolated
/// step in the middle of a trace is measured with the full window's
/// attenuation. Units are Hz/s.
pub fn rocof_series(t_s: &[f64], f_hz: &[f64], window_s: f64) -> Result<Vec<f64>> {
    if t_s.len() != f_hz.len() {
        return Err(Error::Params(format!(
            "time and frequency series differ in length ({} vs {})",
            t_s.len(),
            f_hz.len()
        )));
    }
    let n = t_s.len();
    if n < 2 {
        return Ok(vec![0.0; n]);
    }
    let dt = t_s[1] - t_s[0];
    if !(dt > 0.0) {
        return Err(Error::Params("time axis must be strictly increasing".into()));
    }
    if !(window_s >= 2.0 * dt) {
        return Err(Error::Params(format!(
            "rate window {window_s} s must cover at least two samples of {dt} s"
        )));
    }
    let half = ((window_s / (2.0 * dt)).round() as usize).max(1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let h = half.min(i).min(n - 1 - i);
        if h == 0 {
            out.push(0.0);
        } else {
            out.push((f_hz[i + h] - f_hz[i - h]) / (t_s[i + h] - t_s[i - h]));
        }
    }
    Ok(out)
}

/// Count excursions per interval per category against the configured limits.
///
/// A rate violation needs the windowed rate beyond the limit; a nadir
/// violation needs the frequency outside the band around nominal; a capacity
/// violation needs some inverter's instantaneous power beyond its capacity
/// (or below zero) by more than the deadband. Each interval contributes at
/// most one count per category; extrema are reported regardless.
pub fn violation_report(
    trace: &SimTrace,
    solution: &DispatchSolution,
    case: &Case,
    cfg: &SimConfig,
) -> Result<ViolationReport> {
    let n_int = solution.intervals.len();
    if n_int == 0 || trace.t_s.is_empty() {
        return Err(Error::Params("empty schedule or trace".into()));
    }
    if trace.ibr_mw.len() != case.ibrs.len() {
        return Err(Error::Params(format!(
            "trace carries {} inverter series, case has {}",
            trace.ibr_mw.len(),
            case.ibrs.len()
        )));
    }
    let span = *trace.t_s.last().unwrap();
    if !(span > 0.0) {
        return Err(Error::Params("trace spans no time".into()));
    }
    let interval_s = span / n_int as f64;

    let mut intervals: Vec<IntervalViolations> = (0..n_int)
        .map(|index| IntervalViolations {
            index,
            rocof: false,
            nadir: false,
            ibr_capacity: false,
            max_rocof_hz_per_s: 0.0,
            max_freq_dev_hz: 0.0,
            max_overage_mw: f64::NEG_INFINITY,
        })
        .collect();

    for (i, &t) in trace.t_s.iter().enumerate() {
        let idx = ((t / interval_s) as usize).min(n_int - 1);
        let iv = &mut intervals[idx];
        iv.max_rocof_hz_per_s = iv.max_rocof_hz_per_s.max(trace.rocof_hz_per_s[i].abs());
        iv.max_freq_dev_hz = iv.max_freq_dev_hz.max((trace.f_hz[i] - cfg.f0).abs());
        for (j, series) in trace.ibr_mw.iter().enumerate() {
            let cap = case.ibrs[j].capacity_mw;
            let p = series[i];
            let over = (p - cap).max(-p);
            if over > iv.max_overage_mw {
                iv.max_overage_mw = over;
            }
            if over > cfg.capacity_tol_frac * cap {
                iv.ibr_capacity = true;
            }
        }
    }

    let mut report = ViolationReport {
        rocof: CategoryStat::default(),
        nadir: CategoryStat::default(),
        ibr_capacity: CategoryStat { count: 0, worst: f64::NEG_INFINITY },
        intervals: Vec::new(),
    };
    for iv in &mut intervals {
        if case.ibrs.is_empty() {
            iv.max_overage_mw = 0.0;
        }
        iv.rocof = iv.max_rocof_hz_per_s > cfg.rocof_lim_hz_per_s;
        iv.nadir = iv.max_freq_dev_hz > cfg.nadir_band_hz;
        report.rocof.count += iv.rocof as usize;
        report.nadir.count += iv.nadir as usize;
        report.ibr_capacity.count += iv.ibr_capacity as usize;
        report.rocof.worst = report.rocof.worst.max(iv.max_rocof_hz_per_s);
        report.nadir.worst = report.nadir.worst.max(iv.max_freq_dev_hz);
        report.ibr_capacity.worst = report.ibr_capacity.worst.max(iv.max_overage_mw);
    }
    if case.ibrs.is_empty() {
        report.ibr_capacity.worst = 0.0;
    }
    report.intervals = intervals;
    Ok(report)
}

/// Write the trace as CSV with stable headers
/// `t_s,f_hz,rocof_hz_per_s,agc_mw,sg:<id>…,ibr:<id>…`.
pub fn write_trace_csv(trace: &SimTrace, path: impl AsRef<std::path::Path>) -> Result<()> {
    let mut out = String::with_capacity(trace.t_s.len() * 96 + 128);
    out.push_str("t_s,f_hz,rocof_hz_per_s,agc_mw");
    for id in &trace.sg_ids {
        out.push_str(&format!(",sg:{id}"));
    }
    for id in &trace.ibr_ids {
        out.push_str(&format!(",ibr:{id}"));
    }
    out.push('\n');
    for i in 0..trace.t_s.len() {
        out.push_str(&format!(
            "{:?},{:?},{:?},{:?}",
            trace.t_s[i], trace.f_hz[i], trace.rocof_hz_per_s[i], trace.agc_mw[i]
        ));
        for series in &trace.sg_mw {
            out.push_str(&format!(",{:?}", series[i]));
        }
        for series in &trace.ibr_mw {
            out.push_str(&format!(",{:?}", series[i]));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::casedata::Provenance;
    use crate::dispatch::testutil::two_bus_case;
    use crate::dispatch::{DispatchSolution, IntervalSolution, MethodVariant, SolveStatus};
    use crate::freq::{aggregate_params, oracle_trace, IbrParams};

    /// Hand-built schedule for the two-bus fixture: one setpoint pair per
    /// interval, every inverter at the given virtual (M, D).
    fn flat_solution(n: usize, p_sg: f64, p_ibr: f64, m: f64, d: f64) -> DispatchSolution {
        let intervals = (0..n)
            .map(|index| IntervalSolution {
                index,
                total_load_mw: p_sg + p_ibr,
                d_pe: 0.0,
                p_sg_mw: vec![p_sg],
                ru_sg_mw: vec![0.0],
                rd_sg_mw: vec![0.0],
                p_ibr_mw: vec![p_ibr],
                ru_ibr_mw: vec![0.0],
                rd_ibr_mw: vec![0.0],
                peak_mw: vec![0.0],
                m_ibr: vec![m],
                d_ibr: vec![d],
                generation_cost: 0.0,
                reserve_cost: 0.0,
                status: SolveStatus::Optimal,
                gap: 0.0,
                nodes: 0,
                binaries: 0,
                refixed_for_stability: false,
                solve_ms: 0.0,
            })
            .collect();
        DispatchSolution {
            method: MethodVariant::I,
            intervals,
            objective: 0.0,
            generation_cost: 0.0,
            reserve_cost: 0.0,
        }
    }

    fn flat_profile(duration_s: u64, mw: f64) -> LoadProfile {
        LoadProfile {
            resolution_s: 1,
            duration_s,
            series_mw: vec![mw; duration_s as usize],
            provenance: Provenance::File { path: "test".into() },
        }
    }

    fn stepped_profile(duration_s: u64, base: f64, at: usize, delta: f64) -> LoadProfile {
        let mut p = flat_profile(duration_s, base);
        for v in p.series_mw[at..].iter_mut() {
            *v = base + delta;
        }
        p
    }

    #[test]
    fn balanced_schedule_holds_nominal_frequency_for_an_hour() {
        let case = two_bus_case(8.0);
        let sol = flat_solution(12, 100.0, 500.0, 2.0, 1.5);
        let profile = flat_profile(3600, 600.0);
        let cfg = SimConfig::for_case(&case);
        let trace = simulate(&case, &sol, &profile, &cfg).unwrap();
        assert_eq!(trace.t_s.len(), 360_001);
        assert_eq!(*trace.t_s.last().unwrap(), 3600.0);
        for &f in &trace.f_hz {
            assert!((f - 60.0).abs() <= 1e-9, "drifted to {f}");
        }
        for &r in &trace.rocof_hz_per_s {
            assert!(r.abs() <= 1e-9);
        }
        let report = violation_report(&trace, &sol, &case, &cfg).unwrap();
        assert_eq!(report.total(), 0);
        // Dispatched exactly at capacity with no transient: zero margin,
        // zero excursion.
        assert_eq!(report.ibr_capacity.worst, 0.0);
    }

    #[test]
    fn step_response_matches_the_reference_integration() {
        let case = two_bus_case(8.0);
        let (m, d) = (2.0, 1.5);
        let sol = flat_solution(1, 100.0, 500.0, m, d);
        let profile = stepped_profile(300, 600.0, 60, 25.0);
        let mut cfg = SimConfig::for_case(&case);
        cfg.agc_enabled = false;
        let trace = simulate(&case, &sol, &profile, &cfg).unwrap();

        let sg_params = case.sgs[0].params.clone();
        let ibr_params = IbrParams {
            virtual_m: m,
            virtual_d: d,
            ..case.ibrs[0].params.clone()
        };
        let agg =
            aggregate_params(&[sg_params], &[ibr_params.clone()], case.system_mva, case.f0)
                .unwrap();
        let d_pe = 25.0 / case.system_mva;
        let oracle = oracle_trace(&agg, &[ibr_params], d_pe, cfg.dt_s, 240.0).unwrap();

        let k0 = trace.t_s.iter().position(|&t| t == 60.0).unwrap();
        let stride = (cfg.record_dt_s / cfg.dt_s).round() as usize;
        let mut worst = 0.0_f64;
        for (i, idx) in (k0..trace.t_s.len()).enumerate() {
            let oi = i * stride;
            if oi >= oracle.delta_f.len() {
                break;
            }
            let f_ref = case.f0 * (1.0 + oracle.delta_f[oi]);
            worst = worst.max((trace.f_hz[idx] - f_ref).abs());
        }
        assert!(worst <= 1e-3, "worst frequency mismatch {worst} Hz");

        // Windowed rate never exceeds the instantaneous initial rate.
        let bound = d_pe / agg.m * case.f0;
        let max_rocof = trace
            .rocof_hz_per_s
            .iter()
            .fold(0.0_f64, |a, &r| a.max(r.abs()));
        assert!(max_rocof <= bound, "windowed {max_rocof} vs instantaneous {bound}");
        assert!(max_rocof >= 0.8 * bound, "window lost the event: {max_rocof} vs {bound}");
    }

    #[test]
    fn inverter_settles_to_its_damping_share_after_a_step() {
        let case = two_bus_case(8.0);
        let (m, d) = (2.0, 1.5);
        let sol = flat_solution(1, 100.0, 500.0, m, d);
        let profile = stepped_profile(300, 600.0, 60, 25.0);
        let mut cfg = SimConfig::for_case(&case);
        cfg.agc_enabled = false;
        let trace = simulate(&case, &sol, &profile, &cfg).unwrap();

        let end = trace.t_s.len() - 1;
        let df_end = trace.f_hz[end] / case.f0 - 1.0;
        let dev_pu = (trace.ibr_mw[0][end] - 500.0) / case.ibrs[0].params.mva_base;
        assert!(df_end < -1e-4, "no steady depression: {df_end}");
        assert!(
            (dev_pu - d * (-df_end)).abs() <= 1e-3,
            "inverter deviation {dev_pu} vs damping share {}",
            d * (-df_end)
        );
    }

    #[test]
    fn secondary_control_restores_frequency() {
        let case = two_bus_case(8.0);
        let sol = flat_solution(1, 100.0, 500.0, 2.0, 1.5);
        let profile = stepped_profile(300, 600.0, 60, 25.0);

        let mut cfg = SimConfig::for_case(&case);
        cfg.agc_enabled = false;
        let open = simulate(&case, &sol, &profile, &cfg).unwrap();
        let open_residual = (open.f_hz.last().unwrap() - 60.0).abs();

        cfg.agc_enabled = true;
        let closed = simulate(&case, &sol, &profile, &cfg).unwrap();
        let tail: Vec<f64> = closed
            .t_s
            .iter()
            .zip(&closed.f_hz)
            .filter(|(&t, _)| t >= 290.0)
            .map(|(_, &f)| (f - 60.0).abs())
            .collect();
        let worst_tail = tail.iter().fold(0.0_f64, |a, &v| a.max(v));
        assert!(worst_tail <= 0.01, "tail deviation {worst_tail} Hz");
        assert!(open_residual > 0.05, "step too small to matter: {open_residual}");
        assert!(worst_tail < open_residual / 10.0);
        let agc_end = *closed.agc_mw.last().unwrap();
        assert!(
            (agc_end - 25.0).abs() <= 2.0,
            "held command {agc_end} MW should carry most of the 25 MW step"
        );
    }

    #[test]
    fn rate_series_flags_ramps_and_ignores_offsets() {
        let t: Vec<f64> = (0..101).map(|i| i as f64 * 0.01).collect();
        let flat = vec![59.5; 101];
        for r in rocof_series(&t, &flat, 0.1).unwrap() {
            assert_eq!(r, 0.0);
        }
        let ramp: Vec<f64> = t.iter().map(|&x| 60.0 - 0.3 * x).collect();
        let rr = rocof_series(&t, &ramp, 0.1).unwrap();
        for (i, &r) in rr.iter().enumerate() {
            if i > 0 && i + 1 < rr.len() {
                assert!((r + 0.3).abs() < 1e-9, "sample {i}: {r}");
            }
        }
        assert_eq!(rr[0], 0.0);
        let err = rocof_series(&t, &ramp[..50], 0.1).unwrap_err().to_string();
        assert!(err.contains("length"), "got: {err}");
    }

    #[test]
    fn counting_is_capped_at_one_per_interval_per_category() {
        let case = two_bus_case(8.0);
        let cfg = SimConfig::for_case(&case);
        let sol = flat_solution(2, 100.0, 500.0, 0.0, 0.0);
        // Two intervals of 1 s each, recorded at 4 samples per interval.
        let n = 8;
        let t_s: Vec<f64> = (0..n).map(|i| (i + 1) as f64 * 0.25).collect();
        let mut trace = SimTrace {
            t_s,
            f_hz: vec![60.0; n],
            rocof_hz_per_s: vec![0.0; n],
            agc_mw: vec![0.0; n],
            sg_ids: vec!["sg1".into()],
            sg_mw: vec![vec![100.0; n]],
            ibr_ids: vec!["ibr1".into()],
            ibr_mw: vec![vec![500.0; n]],
        };
        // Interval 0: two rate spikes and a capacity overshoot beyond the
        // deadband; interval 1: a nadir excursion and a sub-deadband wiggle.
        trace.rocof_hz_per_s[0] = 0.9;
        trace.rocof_hz_per_s[1] = -0.8;
        trace.ibr_mw[0][2] = 510.0;
        trace.f_hz[5] = 60.2;
        trace.ibr_mw[0][6] = 501.0;

        let report = violation_report(&trace, &sol, &case, &cfg).unwrap();
        assert_eq!(report.rocof.count, 1);
        assert_eq!(report.nadir.count, 1);
        assert_eq!(report.ibr_capacity.count, 1);
        assert_eq!(report.rocof.worst, 0.9);
        assert!((report.nadir.worst - 0.2).abs() < 1e-12);
        assert_eq!(report.ibr_capacity.worst, 10.0);
        assert!(report.intervals[0].rocof && !report.intervals[1].rocof);
        assert!(!report.intervals[0].nadir && report.intervals[1].nadir);
        assert!(report.intervals[0].ibr_capacity && !report.intervals[1].ibr_capacity);
        assert_eq!(report.intervals[1].max_overage_mw, 1.0);
    }

    #[test]
    fn bad_inputs_are_rejected_and_divergence_is_named() {
        let case = two_bus_case(8.0);
        let cfg = SimConfig::for_case(&case);
        let profile = flat_profile(300, 600.0);

        let mut wrong = flat_solution(1, 100.0, 500.0, 0.0, 0.0);
        wrong.intervals[0].p_sg_mw.push(1.0);
        let err = simulate(&case, &wrong, &profile, &cfg).unwrap_err().to_string();
        assert!(err.contains("setpoints"), "got: {err}");

        let sol = flat_solution(1, 100.0, 500.0, 0.0, 0.0);
        let two = flat_solution(2, 100.0, 500.0, 0.0, 0.0);
        let ragged = flat_profile(301, 600.0);
        let err = simulate(&case, &two, &ragged, &cfg).unwrap_err().to_string();
        assert!(err.contains("divisible"), "got: {err}");

        let mut coarse = cfg;
        coarse.dt_s = 0.5;
        coarse.record_dt_s = 0.5;
        coarse.rocof_window_s = 1.0;
        let err = simulate(&case, &sol, &profile, &coarse).unwrap_err().to_string();
        assert!(err.contains("fastest device constant"), "got: {err}");

        let mut bad_load = flat_profile(300, 600.0);
        bad_load.series_mw[100] = f64::INFINITY;
        let err = simulate(&case, &sol, &bad_load, &cfg).unwrap_err().to_string();
        assert!(err.contains("simulation diverged at t = "), "got: {err}");
    }

    #[test]
    fn trace_csv_has_stable_headers() {
        let case = two_bus_case(8.0);
        let sol = flat_solution(1, 100.0, 500.0, 1.0, 1.0);
        let profile = flat_profile(300, 600.0);
        let cfg = SimConfig::for_case(&case);
        let trace = simulate(&case, &sol, &profile, &cfg).unwrap();
        let path = std::env::temp_dir()
            .join(format!("visched-{}-trace.csv", std::process::id()));
        write_trace_csv(&trace, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header, "t_s,f_hz,rocof_hz_per_s,agc_mw,sg:sg1,ibr:ibr1");
        assert_eq!(text.lines().count() - 1, trace.t_s.len());
        std::fs::remove_file(&path).ok();
    }
}
