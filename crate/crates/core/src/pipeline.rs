//! End-to-end orchestration: predictor training sized to a case's
//! schedulable ranges, the forecast → schedule → simulate → audit chain,
//! and the four-method comparison report.

use serde::{Deserialize, Serialize};
use visched_milp::MilpOptions;

use crate::casedata::{forecast_intervals, Case, ForecastSet, LoadProfile, DISPATCH_INTERVAL_S};
use crate::dispatch::{
    solve_horizon, worst_case_fixed_md, DispatchSolution, MethodConfig, MethodVariant,
    SurrogateModels,
};
use crate::sim::{simulate, violation_report, SimConfig, SimTrace, ViolationReport};
use crate::surrogate::{generate_dataset, train_mlp_with, TargetKind, TrainConfig};
use crate::{Error, Result};

/// Upper edge of the per-unit step range the stock predictors are trained
/// on. Covers the built-in scenarios (largest interval delta ≈ 0.043) with
/// 40% headroom; a case expecting larger disturbances needs a wider plan.
pub const STEP_RANGE_CEILING: f64 = 0.06;

/// Feature ranges for the two predictors, derived from what the case can
/// actually schedule.
///
/// Aggregate inertia and damping run from the synchronous fleet alone to
/// the fleet plus every inverter at its upper bound (capacity-weighted).
/// The per-unit ranges span the union of the inverter schedulable boxes,
/// and the step range is `[0, max_step]` — disturbance magnitudes enter
/// unsigned.
///
/// Returns `(nadir_box, peak_box)`: `[M, D, step]` and
/// `[M, D, unit M, unit D, step]`.
#[allow(clippy::type_complexity)]
pub fn feature_boxes(
    case: &Case,
    max_step: f64,
) -> Result<(Vec<(f64, f64)>, Vec<(f64, f64)>)> {
    if !(max_step > 0.0) {
        return Err(Error::Params(format!("nonpositive step ceiling {max_step}")));
    }
    if case.ibrs.is_empty() {
        return Err(Error::Params("case has no inverters; nothing to schedule".into()));
    }
    let sg = case.sg_aggregate()?;
    let mut m_range = (sg.m, sg.m);
    let mut d_range = (sg.d, sg.d);
    let mut unit_m = (f64::MAX, f64::MIN);
    let mut unit_d = (f64::MAX, f64::MIN);
    for (j, u) in case.ibrs.iter().enumerate() {
        let w = case.ibr_weight(j);
        m_range = (m_range.0 + w * u.params.m_bounds.0, m_range.1 + w * u.params.m_bounds.1);
        d_range = (d_range.0 + w * u.params.d_bounds.0, d_range.1 + w * u.params.d_bounds.1);
        unit_m = (unit_m.0.min(u.params.m_bounds.0), unit_m.1.max(u.params.m_bounds.1));
        unit_d = (unit_d.0.min(u.params.d_bounds.0), unit_d.1.max(u.params.d_bounds.1));
    }
    let nadir = vec![m_range, d_range, (0.0, max_step)];
    let peak = vec![m_range, d_range, unit_m, unit_d, (0.0, max_step)];
    Ok((nadir, peak))
}

/// Sizes and recipes for training the two predictors of a case.
///
/// Each recipe's seed also seeds its dataset, so a plan pins the entire
/// artifact: two plans with equal fields produce bit-identical models.
#[derive(Clone, Debug)]
pub struct TrainingPlan {
    pub n_nadir: usize,
    pub n_peak: usize,
    pub nadir: TrainConfig,
    pub peak: TrainConfig,
    /// Upper edge of the trained step range, per-unit.
    pub max_step: f64,
}

impl TrainingPlan {
    /// The shipping recipe: width-16 networks on 4000/6000-point datasets.
    pub fn standard(seed: u64) -> Self {
        TrainingPlan {
            n_nadir: 4000,
            n_peak: 6000,
            nadir: TrainConfig::nadir_tuned(seed),
            peak: TrainConfig::peak_tuned(seed.wrapping_add(1)),
            max_step: STEP_RANGE_CEILING,
        }
    }

    /// Small and fast: width-8 networks on a few hundred points. Accurate
    /// enough to exercise the full chain in tests, not for production use.
    pub fn quick(seed: u64) -> Self {
        let mut nadir = TrainConfig::nadir_tuned(seed);
        nadir.hidden = 8;
        nadir.epochs = 600;
        nadir.halve_every = 200;
        let mut peak = TrainConfig::peak_tuned(seed.wrapping_add(1));
        peak.hidden = 8;
        peak.epochs = 800;
        peak.halve_every = 250;
        TrainingPlan { n_nadir: 500, n_peak: 700, nadir, peak, max_step: STEP_RANGE_CEILING }
    }
}

/// Train both predictors over the case's schedulable ranges.
///
/// Deterministic: the same case and plan always yield bit-identical
/// models, regardless of thread count.
pub fn train_for_case(case: &Case, plan: &TrainingPlan) -> Result<SurrogateModels> {
    let (nadir_box, peak_box) = feature_boxes(case, plan.max_step)?;
    let fixed = case.sg_aggregate()?;
    let nds = generate_dataset(TargetKind::Nadir, &nadir_box, plan.n_nadir, plan.nadir.seed, &fixed)?;
    let nadir = train_mlp_with(&nds, &plan.nadir)?;
    let pds =
        generate_dataset(TargetKind::PeakPower, &peak_box, plan.n_peak, plan.peak.seed, &fixed)?;
    let peak = train_mlp_with(&pds, &plan.peak)?;
    let models = SurrogateModels { nadir, peak };
    models.validate()?;
    Ok(models)
}

/// Collapse a 1-second profile into the scheduling forecast: 5-minute
/// interval means on the case's dynamics base, split over its load buses.
pub fn prepare_forecast(case: &Case, profile: &LoadProfile) -> Result<ForecastSet> {
    let mut f = forecast_intervals(profile, DISPATCH_INTERVAL_S, case.system_mva)?;
    f.split_over(&case.network)?;
    Ok(f)
}

/// Largest disturbance magnitude anywhere in the horizon, per-unit.
pub fn max_abs_step(forecast: &ForecastSet) -> f64 {
    forecast.d_pe.iter().fold(0.0, |a, &v| a.max(v.abs()))
}

/// What to run in a comparison and how.
#[derive(Clone, Debug)]
pub struct CompareConfig {
    pub methods: Vec<MethodVariant>,
    pub milp: MilpOptions,
    /// `None` derives the integration setup from the case.
    pub sim: Option<SimConfig>,
    /// Keep the full simulation traces in the output. Off by default: an
    /// hour of trace for a many-unit case runs to tens of megabytes.
    pub keep_traces: bool,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            methods: vec![
                MethodVariant::I,
                MethodVariant::II,
                MethodVariant::III,
                MethodVariant::IV,
            ],
            milp: MilpOptions::default(),
            sim: None,
            keep_traces: false,
        }
    }
}

/// One method's line in the comparison: horizon costs, the share of the
/// reserve bill spent on transient peak headroom, and the audited
/// violation counts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: MethodVariant,
    /// Dollars over the horizon (generation plus every reserve product).
    pub total_cost: f64,
    pub generation_cost: f64,
    pub reserve_cost: f64,
    /// Dollars of the reserve bill paying for transient peak headroom on
    /// inverters.
    pub inertia_support_cost: f64,
    /// MW of transient peak headroom reserved, summed over inverters and
    /// intervals.
    pub inertia_support_reserve_mw: f64,
    pub rocof_violations: usize,
    pub nadir_violations: usize,
    pub capacity_violations: usize,
    /// The shared (M, D) sizing when the method fixes one (variants II and
    /// III).
    pub fixed_md: Option<(f64, f64)>,
    /// Slowest interval solve, milliseconds.
    pub max_interval_solve_ms: f64,
    /// Wall time of the horizon solve and of the simulation, seconds.
    pub schedule_s: f64,
    pub simulate_s: f64,
}

/// The serializable half of a comparison: summary rows plus the full
/// per-interval schedules and violation breakdowns behind them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: Vec<MethodRow>,
    pub solutions: Vec<DispatchSolution>,
    pub violations: Vec<ViolationReport>,
}

/// A finished comparison. `traces` aligns with `report.rows` when kept and
/// is empty otherwise.
#[derive(Clone, Debug)]
pub struct CompareOutput {
    pub report: CompareReport,
    pub traces: Vec<SimTrace>,
}

/// Schedule, simulate, and audit every requested method on one profile.
///
/// Variants II and III share one worst-case (M, D) sizing computed from
/// the horizon's largest disturbance. Method I never touches the
/// predictors; the others receive `models`.
pub fn run_compare(
    case: &Case,
    profile: &LoadProfile,
    models: &SurrogateModels,
    cfg: &CompareConfig,
) -> Result<CompareOutput> {
    if cfg.methods.is_empty() {
        return Err(Error::Params("no methods requested".into()));
    }
    models.validate()?;
    let forecast = prepare_forecast(case, profile)?;
    let worst = max_abs_step(&forecast);
    let needs_fixed = cfg
        .methods
        .iter()
        .any(|m| matches!(m, MethodVariant::II | MethodVariant::III));
    let fixed = if needs_fixed { Some(worst_case_fixed_md(case, worst, models)?) } else { None };
    let sim_cfg = cfg.sim.unwrap_or_else(|| SimConfig::for_case(case));

    let mut rows = Vec::with_capacity(cfg.methods.len());
    let mut solutions = Vec::with_capacity(cfg.methods.len());
    let mut violations = Vec::with_capacity(cfg.methods.len());
    let mut traces = Vec::new();
    for &variant in &cfg.methods {
        let (mc, fixed_md) = match variant {
            MethodVariant::I => (MethodConfig::method_i(), None),
            MethodVariant::II => {
                let (m, d) = fixed.expect("sized above");
                (MethodConfig::method_ii(m, d), Some((m, d)))
            }
            MethodVariant::III => {
                let (m, d) = fixed.expect("sized above");
                (MethodConfig::method_iii(m, d), Some((m, d)))
            }
            MethodVariant::IV => (MethodConfig::method_iv(), None),
        };
        let model_opt =
            if matches!(variant, MethodVariant::I) { None } else { Some(models) };
        let t0 = std::time::Instant::now();
        let sol = solve_horizon(case, &forecast, &mc, model_opt, &cfg.milp)?;
        let schedule_s = t0.elapsed().as_secs_f64();
        let t1 = std::time::Instant::now();
        let trace = simulate(case, &sol, profile, &sim_cfg)?;
        let simulate_s = t1.elapsed().as_secs_f64();
        let audit = violation_report(&trace, &sol, case, &sim_cfg)?;

        let mut support_cost = 0.0;
        let mut support_mw = 0.0;
        for iv in &sol.intervals {
            for (j, &pk) in iv.peak_mw.iter().enumerate() {
                support_cost += case.ibrs[j].cost.b_r * pk;
                support_mw += pk;
            }
        }
        rows.push(MethodRow {
            method: variant,
            total_cost: sol.objective,
            generation_cost: sol.generation_cost,
            reserve_cost: sol.reserve_cost,
            inertia_support_cost: support_cost,
            inertia_support_reserve_mw: support_mw,
            rocof_violations: audit.rocof.count,
            nadir_violations: audit.nadir.count,
            capacity_violations: audit.ibr_capacity.count,
            fixed_md,
            max_interval_solve_ms: sol.intervals.iter().map(|i| i.solve_ms).fold(0.0, f64::max),
            schedule_s,
            simulate_s,
        });
        solutions.push(sol);
        violations.push(audit);
        if cfg.keep_traces {
            traces.push(trace);
        }
    }
    Ok(CompareOutput { report: CompareReport { rows, solutions, violations }, traces })
}

/// Row labels of the rendered comparison table, in order.
pub const REPORT_ROW_LABELS: [&str; 6] = [
    "Total scheduling cost",
    "Inertia support cost",
    "Inertia support reserve",
    "Number of IBR capacity violations",
    "Number of RoCoF violations",
    "Number of frequency nadir violations",
];

/// Render the summary as CSV: one column per method, one row per label in
/// [`REPORT_ROW_LABELS`]. Costs in dollars, reserve in MW.
pub fn render_compare_csv(report: &CompareReport) -> String {
    let mut out = String::from("Index");
    for r in &report.rows {
        out.push(',');
        out.push_str(&format!("{:?}", r.method));
    }
    out.push('\n');
    let cells: [Vec<String>; 6] = [
        report.rows.iter().map(|r| format!("{:.2}", r.total_cost)).collect(),
        report.rows.iter().map(|r| format!("{:.2}", r.inertia_support_cost)).collect(),
        report.rows.iter().map(|r| format!("{:.2}", r.inertia_support_reserve_mw)).collect(),
        report.rows.iter().map(|r| r.capacity_violations.to_string()).collect(),
        report.rows.iter().map(|r| r.rocof_violations.to_string()).collect(),
        report.rows.iter().map(|r| r.nadir_violations.to_string()).collect(),
    ];
    for (label, row) in REPORT_ROW_LABELS.iter().zip(&cells) {
        out.push_str(label);
        for cell in row {
            out.push(',');
            out.push_str(cell);
        }
        out.push('\n');
    }
    out
}
