//! Study-system data: the built-in 39-bus case, case-file ingestion with
//! field-precise validation, synthetic load profiles, and per-interval
//! forecast / disturbance extraction.
//!
//! Two per-unit bases coexist deliberately. Network power (setpoints, flows,
//! reserves) is carried in MW against `s_base_mva` = 100 MVA; frequency
//! dynamics (inertia, damping, disturbance sizes) are per-unit on the case's
//! `system_mva` (the sum of unit ratings). Conversions are centralized here.

use crate::dispatch::{compute_gsf, GenCost};
use crate::freq::{aggregate_params, IbrParams, SgParams, SyntheticParams};
use crate::util::{seeded_stream, standard_normal};
use crate::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;

/// Scheduling interval length: setpoints, reserves, and virtual-inertia
/// schedules switch on this grid.
pub const DISPATCH_INTERVAL_S: u64 = 300;

/// One transmission branch of the DC network model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: u32,
    pub to: u32,
    /// Series reactance, p.u. on the network base.
    pub reactance: f64,
    /// Thermal flow limit, MW (applies in both directions).
    pub limit_mw: f64,
}

/// Nominal load at one bus; the proportions of these entries distribute an
/// aggregate load series over buses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BusLoad {
    pub bus: u32,
    pub mw: f64,
}

/// DC network: buses, branches, nominal loads, and (derived) the line-flow
/// sensitivity matrix with withdrawal at `ref_bus`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub buses: Vec<u32>,
    pub lines: Vec<Line>,
    pub ref_bus: u32,
    pub loads: Vec<BusLoad>,
    /// lines × buses sensitivity matrix; recomputed from the fields above on
    /// load (never serialized), reference column identically zero.
    #[serde(skip)]
    pub gsf: Vec<Vec<f64>>,
}

impl Network {
    pub fn total_nominal_load_mw(&self) -> f64 {
        self.loads.iter().map(|l| l.mw).sum()
    }
}

/// Operating limits the schedule must respect.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    /// Maximum tolerated rate of change of frequency, Hz/s.
    pub rocof_hz_per_s: f64,
    /// Maximum tolerated frequency-nadir deviation from nominal, Hz.
    pub nadir_band_hz: f64,
}

/// A synchronous generator with its cost model and dispatch range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgUnit {
    pub bus: u32,
    pub pmin_mw: f64,
    pub pmax_mw: f64,
    pub params: SgParams,
    pub cost: GenCost,
}

/// An inverter-based resource with its cost model and capacity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IbrUnit {
    pub bus: u32,
    pub capacity_mw: f64,
    pub params: IbrParams,
    pub cost: GenCost,
}

/// A complete study system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub schema_version: u32,
    pub name: String,
    pub network: Network,
    pub sgs: Vec<SgUnit>,
    pub ibrs: Vec<IbrUnit>,
    /// Base for frequency dynamics, MVA (sum of unit ratings).
    pub system_mva: f64,
    /// Base for network per-unit quantities, MVA.
    pub s_base_mva: f64,
    /// Nominal frequency, Hz.
    pub f0: f64,
    pub limits: Limits,
}

impl Case {
    /// Aggregate model of the synchronous fleet alone (inverters absent).
    pub fn sg_aggregate(&self) -> Result<SyntheticParams> {
        let sgs: Vec<SgParams> = self.sgs.iter().map(|u| u.params.clone()).collect();
        aggregate_params(&sgs, &[], self.system_mva, self.f0)
    }

    /// Aggregate model with every inverter providing the given virtual
    /// (M, D), listed in `self.ibrs` order.
    pub fn aggregate_with(&self, ibr_md: &[(f64, f64)]) -> Result<SyntheticParams> {
        if ibr_md.len() != self.ibrs.len() {
            return Err(Error::Params(format!(
                "expected {} inverter (M, D) pairs, got {}",
                self.ibrs.len(),
                ibr_md.len()
            )));
        }
        let sgs: Vec<SgParams> = self.sgs.iter().map(|u| u.params.clone()).collect();
        let ibrs: Vec<IbrParams> = self
            .ibrs
            .iter()
            .zip(ibr_md)
            .map(|(u, &(m, d))| IbrParams {
                virtual_m: m,
                virtual_d: d,
                ..u.params.clone()
            })
            .collect();
        aggregate_params(&sgs, &ibrs, self.system_mva, self.f0)
    }

    /// Capacity weight of inverter `i` on the dynamics base.
    pub fn ibr_weight(&self, i: usize) -> f64 {
        self.ibrs[i].params.mva_base / self.system_mva
    }

    /// Largest aggregate inertia the fleet can schedule: synchronous inertia
    /// plus every inverter at its upper bound.
    pub fn max_aggregate_inertia(&self) -> Result<f64> {
        let m: f64 = self
            .ibrs
            .iter()
            .map(|u| u.params.m_bounds.1 * u.params.mva_base / self.system_mva)
            .sum();
        Ok(self.sg_aggregate()?.m + m)
    }
}

/// The built-in study system: a 39-bus network whose generators at buses
/// 30, 35, 37, and 38 are inverter-based resources of 900/800/700/1000 MW,
/// with five synchronous units at buses 31–34 and 36.
///
/// Branch ratings are representative values sized to leave delivery headroom
/// on the generator step-up branches; the dynamic parameters are uniform
/// textbook values on 1000 MVA unit bases.
pub fn builtin_case() -> Case {
    const LINES: [(u32, u32, f64, f64); 46] = [
        (1, 2, 0.0411, 900.0),
        (1, 39, 0.0250, 1000.0),
        (2, 3, 0.0151, 700.0),
        (2, 25, 0.0086, 500.0),
        (2, 30, 0.0181, 1000.0),
        (3, 4, 0.0213, 500.0),
        (3, 18, 0.0133, 500.0),
        (4, 5, 0.0128, 600.0),
        (4, 14, 0.0129, 500.0),
        (5, 6, 0.0026, 1200.0),
        (5, 8, 0.0112, 900.0),
        (6, 7, 0.0092, 900.0),
        (6, 11, 0.0082, 480.0),
        (6, 31, 0.0250, 1800.0),
        (7, 8, 0.0046, 900.0),
        (8, 9, 0.0363, 900.0),
        (9, 39, 0.0250, 900.0),
        (10, 11, 0.0043, 600.0),
        (10, 13, 0.0043, 600.0),
        (10, 32, 0.0200, 1000.0),
        (12, 11, 0.0435, 500.0),
        (12, 13, 0.0435, 500.0),
        (13, 14, 0.0101, 600.0),
        (14, 15, 0.0217, 600.0),
        (15, 16, 0.0094, 600.0),
        (16, 17, 0.0089, 600.0),
        (16, 19, 0.0195, 600.0),
        (16, 21, 0.0135, 600.0),
        (16, 24, 0.0059, 600.0),
        (17, 18, 0.0082, 600.0),
        (17, 27, 0.0173, 600.0),
        (19, 20, 0.0138, 900.0),
        (19, 33, 0.0142, 1000.0),
        (20, 34, 0.0180, 1000.0),
        (21, 22, 0.0140, 900.0),
        (22, 23, 0.0096, 600.0),
        (22, 35, 0.0143, 900.0),
        (23, 24, 0.0350, 600.0),
        (23, 36, 0.0272, 1000.0),
        (25, 26, 0.0323, 600.0),
        (25, 37, 0.0232, 800.0),
        (26, 27, 0.0147, 600.0),
        (26, 28, 0.0474, 600.0),
        (26, 29, 0.0625, 600.0),
        (28, 29, 0.0151, 600.0),
        (29, 38, 0.0156, 1200.0),
    ];
    const LOADS: [(u32, f64); 19] = [
        (3, 322.0),
        (4, 500.0),
        (7, 233.8),
        (8, 522.0),
        (12, 8.5),
        (15, 320.0),
        (16, 329.0),
        (18, 158.0),
        (20, 680.0),
        (21, 274.0),
        (23, 247.5),
        (24, 308.6),
        (25, 224.0),
        (26, 139.0),
        (27, 281.0),
        (28, 206.0),
        (29, 283.5),
        (31, 9.2),
        (39, 1104.0),
    ];
    // (id, bus, inertia, cost a, b, c, reserve price)
    const SGS: [(&str, u32, f64, f64, f64, f64, f64); 5] = [
        ("sg1", 31, 6.0, 0.014, 20.0, 500.0, 10.0),
        ("sg2", 32, 5.4, 0.020, 20.0, 380.0, 10.0),
        ("sg3", 33, 5.0, 0.019, 20.0, 42.0, 10.0),
        ("sg5", 34, 6.0, 0.026, 20.0, 295.0, 10.0),
        ("sg6", 36, 5.3, 0.021, 20.0, 400.0, 10.0),
    ];
    // (id, bus, capacity MW, reserve price)
    const IBRS: [(&str, u32, f64, f64); 4] = [
        ("ibr1", 30, 900.0, 20.61),
        ("ibr2", 35, 800.0, 18.96),
        ("ibr3", 37, 700.0, 19.15),
        ("ibr4", 38, 1000.0, 20.06),
    ];

    let network = Network {
        buses: (1..=39).collect(),
        lines: LINES
            .iter()
            .map(|&(from, to, reactance, limit_mw)| Line { from, to, reactance, limit_mw })
            .collect(),
        ref_bus: 31,
        loads: LOADS.iter().map(|&(bus, mw)| BusLoad { bus, mw }).collect(),
        gsf: Vec::new(),
    };
    let sgs = SGS
        .iter()
        .map(|&(id, bus, inertia_m, a, b, c, b_r)| SgUnit {
            bus,
            pmin_mw: 50.0,
            pmax_mw: 900.0,
            params: SgParams {
                id: id.to_string(),
                inertia_m,
                damping_d: 1.0,
                gain_k: 1.0,
                droop_r: 0.006,
                fraction_f: 0.25,
                turbine_t: 1.2,
                mva_base: 1000.0,
            },
            cost: GenCost { a, b, c, b_r },
        })
        .collect();
    let ibrs = IBRS
        .iter()
        .map(|&(id, bus, capacity_mw, b_r)| IbrUnit {
            bus,
            capacity_mw,
            params: IbrParams {
                id: id.to_string(),
                virtual_m: 4.0,
                virtual_d: 1.0,
                lag_t: 0.02,
                mva_base: capacity_mw,
                m_bounds: (0.0, 8.0),
                d_bounds: (0.0, 6.0),
                default_m: 4.0,
                default_d: 1.0,
            },
            cost: GenCost { a: 0.001, b: 1.0, c: 50.0, b_r },
        })
        .collect();
    let mut case = Case {
        schema_version: 1,
        name: "builtin-39bus".to_string(),
        network,
        sgs,
        ibrs,
        system_mva: 8400.0,
        s_base_mva: 100.0,
        f0: 60.0,
        limits: Limits { rocof_hz_per_s: 0.5, nadir_band_hz: 0.1 },
    };
    case.network.gsf =
        compute_gsf(&case.network, case.network.ref_bus).expect("built-in network is connected");
    case
}

/// Write a case to pretty-printed JSON. The sensitivity matrix is derived
/// data and is not serialized.
pub fn save_case(case: &Case, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(case)?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Load and validate a case file, collecting every failed field into one
/// diagnostic rather than stopping at the first.
pub fn load_case(path: impl AsRef<Path>) -> Result<Case> {
    let text = std::fs::read_to_string(&path)?;
    let value: Value = serde_json::from_str(&text)?;
    case_from_value(&value)
}

/// Pull a typed value out of `v`, recording a path-qualified diagnostic on
/// failure.
fn de<T: DeserializeOwned>(v: &Value, path: &str, diags: &mut Vec<String>) -> Option<T> {
    match serde_json::from_value::<T>(v.clone()) {
        Ok(x) => Some(x),
        Err(e) => {
            diags.push(format!("{path}: {e}"));
            None
        }
    }
}

fn req<'a>(v: &'a Value, key: &str, path: &str, diags: &mut Vec<String>) -> Option<&'a Value> {
    match v.get(key) {
        Some(x) => Some(x),
        None => {
            diags.push(format!("{path}.{key}: missing"));
            None
        }
    }
}

fn line_tag(v: &Value) -> String {
    match (v.get("from").and_then(Value::as_u64), v.get("to").and_then(Value::as_u64)) {
        (Some(f), Some(t)) => format!(" ({f}-{t})"),
        _ => String::new(),
    }
}

fn unit_tag(v: &Value) -> String {
    match v.get("params").and_then(|p| p.get("id")).and_then(Value::as_str) {
        Some(id) => format!(" ({id})"),
        None => String::new(),
    }
}

fn case_from_value(v: &Value) -> Result<Case> {
    let d = &mut Vec::new();

    let schema_version: Option<u32> =
        req(v, "schema_version", "case", d).and_then(|x| de(x, "case.schema_version", d));
    let name: Option<String> = req(v, "name", "case", d).and_then(|x| de(x, "case.name", d));
    let system_mva: Option<f64> =
        req(v, "system_mva", "case", d).and_then(|x| de(x, "case.system_mva", d));
    let s_base_mva: Option<f64> =
        req(v, "s_base_mva", "case", d).and_then(|x| de(x, "case.s_base_mva", d));
    let f0: Option<f64> = req(v, "f0", "case", d).and_then(|x| de(x, "case.f0", d));
    let limits: Option<Limits> =
        req(v, "limits", "case", d).and_then(|x| de(x, "case.limits", d));

    let network = req(v, "network", "case", d).and_then(|nv| {
        let buses: Option<Vec<u32>> =
            req(nv, "buses", "network", d).and_then(|x| de(x, "network.buses", d));
        let ref_bus: Option<u32> =
            req(nv, "ref_bus", "network", d).and_then(|x| de(x, "network.ref_bus", d));
        let lines = req(nv, "lines", "network", d).and_then(|lv| match lv.as_array() {
            Some(arr) => {
                let mut out = Vec::with_capacity(arr.len());
                let mut ok = true;
                for (i, item) in arr.iter().enumerate() {
                    match de::<Line>(item, &format!("network.lines[{i}]{}", line_tag(item)), d) {
                        Some(l) => out.push(l),
                        None => ok = false,
                    }
                }
                ok.then_some(out)
            }
            None => {
                d.push("network.lines: expected an array".into());
                None
            }
        });
        let loads = req(nv, "loads", "network", d).and_then(|lv| match lv.as_array() {
            Some(arr) => {
                let mut out = Vec::with_capacity(arr.len());
                let mut ok = true;
                for (i, item) in arr.iter().enumerate() {
                    match de::<BusLoad>(item, &format!("network.loads[{i}]"), d) {
                        Some(l) => out.push(l),
                        None => ok = false,
                    }
                }
                ok.then_some(out)
            }
            None => {
                d.push("network.loads: expected an array".into());
                None
            }
        });
        match (buses, ref_bus, lines, loads) {
            (Some(buses), Some(ref_bus), Some(lines), Some(loads)) => {
                Some(Network { buses, lines, ref_bus, loads, gsf: Vec::new() })
            }
            _ => None,
        }
    });

    let sgs = req(v, "sgs", "case", d).and_then(|sv| match sv.as_array() {
        Some(arr) => {
            let mut out = Vec::with_capacity(arr.len());
            let mut ok = true;
            for (i, item) in arr.iter().enumerate() {
                match de::<SgUnit>(item, &format!("sgs[{i}]{}", unit_tag(item)), d) {
                    Some(u) => out.push(u),
                    None => ok = false,
                }
            }
            ok.then_some(out)
        }
        None => {
            d.push("sgs: expected an array".into());
            None
        }
    });
    let ibrs = req(v, "ibrs", "case", d).and_then(|sv| match sv.as_array() {
        Some(arr) => {
            let mut out = Vec::with_capacity(arr.len());
            let mut ok = true;
            for (i, item) in arr.iter().enumerate() {
                match de::<IbrUnit>(item, &format!("ibrs[{i}]{}", unit_tag(item)), d) {
                    Some(u) => out.push(u),
                    None => ok = false,
                }
            }
            ok.then_some(out)
        }
        None => {
            d.push("ibrs: expected an array".into());
            None
        }
    });

    if !d.is_empty() {
        return Err(schema_error(d));
    }
    let mut case = Case {
        schema_version: schema_version.unwrap(),
        name: name.unwrap(),
        network: network.unwrap(),
        sgs: sgs.unwrap(),
        ibrs: ibrs.unwrap(),
        system_mva: system_mva.unwrap(),
        s_base_mva: s_base_mva.unwrap(),
        f0: f0.unwrap(),
        limits: limits.unwrap(),
    };
    let semantic = validate_case(&case);
    if !semantic.is_empty() {
        return Err(schema_error(&semantic));
    }
    case.network.gsf = compute_gsf(&case.network, case.network.ref_bus)?;
    Ok(case)
}

fn schema_error(diags: &[String]) -> Error {
    Error::Params(format!("case schema violation: {}", diags.join("; ")))
}

/// Structural and physical checks on an assembled case; returns every failed
/// field, empty when the case is sound.
pub fn validate_case(case: &Case) -> Vec<String> {
    let mut d = Vec::new();
    if case.schema_version != 1 {
        d.push(format!("schema_version: unsupported version {}", case.schema_version));
    }
    for (label, value) in [
        ("system_mva", case.system_mva),
        ("s_base_mva", case.s_base_mva),
        ("f0", case.f0),
        ("limits.rocof_hz_per_s", case.limits.rocof_hz_per_s),
        ("limits.nadir_band_hz", case.limits.nadir_band_hz),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            d.push(format!("{label}: must be positive and finite, got {value}"));
        }
    }

    let net = &case.network;
    if net.buses.is_empty() {
        d.push("network.buses: empty".into());
    }
    let mut seen = std::collections::HashSet::new();
    for &b in &net.buses {
        if !seen.insert(b) {
            d.push(format!("network.buses: duplicate bus {b}"));
        }
    }
    let has_bus = |b: u32| net.buses.contains(&b);
    if !has_bus(net.ref_bus) {
        d.push(format!("network.ref_bus: unknown bus {}", net.ref_bus));
    }
    for l in &net.lines {
        let tag = format!("line {}-{}", l.from, l.to);
        if l.from == l.to {
            d.push(format!("{tag}: self-loop"));
        }
        for end in [l.from, l.to] {
            if !has_bus(end) {
                d.push(format!("{tag}: unknown bus {end}"));
            }
        }
        if !(l.reactance > 0.0 && l.reactance.is_finite()) {
            d.push(format!("{tag}: nonpositive reactance {}", l.reactance));
        }
        if !(l.limit_mw > 0.0 && l.limit_mw.is_finite()) {
            d.push(format!("{tag}: nonpositive flow limit {}", l.limit_mw));
        }
    }
    let mut load_buses = std::collections::HashSet::new();
    for l in &net.loads {
        if !has_bus(l.bus) {
            d.push(format!("load at bus {}: unknown bus", l.bus));
        }
        if !load_buses.insert(l.bus) {
            d.push(format!("load at bus {}: duplicate entry", l.bus));
        }
        if !(l.mw >= 0.0 && l.mw.is_finite()) {
            d.push(format!("load at bus {}: negative load {}", l.bus, l.mw));
        }
    }

    if case.sgs.is_empty() {
        d.push("sgs: no synchronous source".into());
    }
    let mut ids = std::collections::HashSet::new();
    for u in &case.sgs {
        let id = &u.params.id;
        if !ids.insert(id.clone()) {
            d.push(format!("{id}: duplicate unit id"));
        }
        if !has_bus(u.bus) {
            d.push(format!("{id}: unknown bus {}", u.bus));
        }
        if !(u.pmin_mw >= 0.0 && u.pmax_mw >= u.pmin_mw) {
            d.push(format!("{id}: dispatch range [{}, {}] is invalid", u.pmin_mw, u.pmax_mw));
        }
        let p = &u.params;
        for (label, value) in [
            ("inertia_m", p.inertia_m),
            ("gain_k", p.gain_k),
            ("droop_r", p.droop_r),
            ("turbine_t", p.turbine_t),
            ("mva_base", p.mva_base),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                d.push(format!("{id}.{label}: must be positive, got {value}"));
            }
        }
        if !(p.damping_d >= 0.0 && p.damping_d.is_finite()) {
            d.push(format!("{id}.damping_d: negative, got {}", p.damping_d));
        }
        if !(p.fraction_f >= 0.0 && p.fraction_f <= 1.0) {
            d.push(format!("{id}.fraction_f: outside [0, 1], got {}", p.fraction_f));
        }
        check_cost(id, &u.cost, &mut d);
    }
    for u in &case.ibrs {
        let id = &u.params.id;
        if !ids.insert(id.clone()) {
            d.push(format!("{id}: duplicate unit id"));
        }
        if !has_bus(u.bus) {
            d.push(format!("{id}: unknown bus {}", u.bus));
        }
        if !(u.capacity_mw > 0.0 && u.capacity_mw.is_finite()) {
            d.push(format!("{id}: nonpositive capacity {}", u.capacity_mw));
        }
        let p = &u.params;
        if !(p.lag_t > 0.0 && p.lag_t.is_finite()) {
            d.push(format!("{id}.lag_t: must be positive, got {}", p.lag_t));
        }
        if !(p.mva_base > 0.0 && p.mva_base.is_finite()) {
            d.push(format!("{id}.mva_base: must be positive, got {}", p.mva_base));
        }
        for (label, (lo, hi)) in [("m_bounds", p.m_bounds), ("d_bounds", p.d_bounds)] {
            if !(lo <= hi) {
                d.push(format!("{id}.{label}: min {lo} exceeds max {hi}"));
            }
            if !(lo >= 0.0) {
                d.push(format!("{id}.{label}: negative lower bound {lo}"));
            }
        }
        if !(p.default_m >= p.m_bounds.0 && p.default_m <= p.m_bounds.1) {
            d.push(format!("{id}.default_m: {} outside m_bounds", p.default_m));
        }
        if !(p.default_d >= p.d_bounds.0 && p.default_d <= p.d_bounds.1) {
            d.push(format!("{id}.default_d: {} outside d_bounds", p.default_d));
        }
        check_cost(id, &u.cost, &mut d);
    }

    // Connectivity (and endpoint sanity) via a trial sensitivity computation,
    // skipped if endpoint diagnostics already fired.
    if d.is_empty() {
        if let Err(e) = compute_gsf(&case.network, case.network.ref_bus) {
            d.push(format!("network: {e}"));
        }
    }
    d
}

fn check_cost(id: &str, c: &GenCost, d: &mut Vec<String>) {
    for (label, value) in [("a", c.a), ("b", c.b), ("c", c.c), ("b_r", c.b_r)] {
        if !value.is_finite() {
            d.push(format!("{id}.cost.{label}: not finite"));
        }
    }
    if c.a < 0.0 {
        d.push(format!("{id}.cost.a: nonconvex cost, a = {}", c.a));
    }
}

// ---------------------------------------------------------------------------
// Load profiles
// ---------------------------------------------------------------------------

/// A scheduled step change in the load series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepEvent {
    /// Time of the step, seconds from the start.
    pub t_s: u64,
    /// Added load from that time on, MW (may be negative).
    pub delta_mw: f64,
}

/// Recipe for a synthetic aggregate load series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub base_mw: f64,
    pub ramp_mw_per_h: f64,
    pub steps: Vec<StepEvent>,
    pub noise_sigma_mw: f64,
}

impl ProfileSpec {
    /// The default one-hour shape for the built-in case: a morning-style ramp
    /// with one block-load pickup at t = 2420 s. Sized so interval 8 carries
    /// a forecast delta near 0.0425 p.u. on the built-in dynamics base —
    /// large enough that inertia scheduling is exercised — while ordinary
    /// intervals stay near 0.005 p.u.
    ///
    /// The pickup lands 20 s *after* the 2400 s dispatch boundary on purpose:
    /// dispatch pre-positions generation at each interval's mean load, so a
    /// block arriving exactly on a boundary would be cancelled by the
    /// simultaneous setpoint change and never disturb the frequency. Placed
    /// just inside the interval, the raw step hits the system under exactly
    /// the inertia scheduled for that interval's forecast delta.
    pub fn default_hour() -> Self {
        ProfileSpec {
            base_mw: 5900.0,
            ramp_mw_per_h: 480.0,
            steps: vec![StepEvent { t_s: 2420, delta_mw: 340.0 }],
            noise_sigma_mw: 1.5,
        }
    }
}

/// Where a load series came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Synthetic { seed: u64, spec: ProfileSpec },
    File { path: String },
}

/// An aggregate load series on a 1-second grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile {
    /// Sample spacing, seconds (always 1).
    pub resolution_s: u64,
    /// Covered horizon, seconds (equals the sample count).
    pub duration_s: u64,
    /// Sample `i` is the load over `[i, i+1)` seconds, MW.
    pub series_mw: Vec<f64>,
    pub provenance: Provenance,
}

/// Generate `base + ramp + steps + noise`, clipped nonnegative, 1 s
/// resolution, bit-reproducible per seed.
pub fn synth_profile(spec: &ProfileSpec, seed: u64, duration_s: u64) -> Result<LoadProfile> {
    if !(spec.base_mw > 0.0) {
        return Err(Error::Params(format!("nonpositive base load {} MW", spec.base_mw)));
    }
    if !(spec.noise_sigma_mw >= 0.0) {
        return Err(Error::Params(format!("negative noise sigma {} MW", spec.noise_sigma_mw)));
    }
    if duration_s == 0 || duration_s % DISPATCH_INTERVAL_S != 0 {
        return Err(Error::Params(format!(
            "profile duration must be a positive multiple of {DISPATCH_INTERVAL_S} s, got {duration_s} s"
        )));
    }
    let mut rng = seeded_stream(seed, 0);
    let mut series = Vec::with_capacity(duration_s as usize);
    for t in 0..duration_s {
        let mut v = spec.base_mw + spec.ramp_mw_per_h * (t as f64) / 3600.0;
        for s in &spec.steps {
            if t >= s.t_s {
                v += s.delta_mw;
            }
        }
        v += spec.noise_sigma_mw * standard_normal(&mut rng);
        series.push(v.max(0.0));
    }
    Ok(LoadProfile {
        resolution_s: 1,
        duration_s,
        series_mw: series,
        provenance: Provenance::Synthetic { seed, spec: clone_spec(spec) },
    })
}

fn clone_spec(spec: &ProfileSpec) -> ProfileSpec {
    ProfileSpec { steps: spec.steps.clone(), ..*spec }
}

/// Write the profile as `t_seconds,load_mw` rows, one per second.
pub fn write_profile_csv(p: &LoadProfile, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::with_capacity(p.series_mw.len() * 16 + 24);
    out.push_str("t_seconds,load_mw\n");
    for (t, v) in p.series_mw.iter().enumerate() {
        out.push_str(&format!("{t},{v:?}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a profile CSV. The first two columns must be `t_seconds,load_mw`;
/// additional per-bus columns are tolerated and ignored (the aggregate
/// column is authoritative).
pub fn read_profile_csv(path: impl AsRef<Path>) -> Result<LoadProfile> {
    let text = std::fs::read_to_string(&path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Params("empty profile file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 || cols[0] != "t_seconds" || cols[1] != "load_mw" {
        return Err(Error::Params(format!(
            "profile header must start with t_seconds,load_mw, got {header:?}"
        )));
    }
    let mut series = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.splitn(3, ',');
        let t: u64 = parts
            .next()
            .unwrap()
            .parse()
            .map_err(|e| Error::Params(format!("profile row {i}: bad time: {e}")))?;
        if t != i as u64 {
            return Err(Error::Params(format!(
                "profile row {i}: expected t_seconds {i}, got {t} (1 s grid from 0 required)"
            )));
        }
        let v: f64 = parts
            .next()
            .ok_or_else(|| Error::Params(format!("profile row {i}: missing load_mw")))?
            .parse()
            .map_err(|e| Error::Params(format!("profile row {i}: bad load: {e}")))?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Params(format!("profile row {i}: negative load {v}")));
        }
        series.push(v);
    }
    let duration_s = series.len() as u64;
    if duration_s == 0 || duration_s % DISPATCH_INTERVAL_S != 0 {
        return Err(Error::Params(format!(
            "profile duration must be a positive multiple of {DISPATCH_INTERVAL_S} s, got {duration_s} s"
        )));
    }
    Ok(LoadProfile {
        resolution_s: 1,
        duration_s,
        series_mw: series,
        provenance: Provenance::File { path: path.as_ref().display().to_string() },
    })
}

// ---------------------------------------------------------------------------
// Forecasts
// ---------------------------------------------------------------------------

/// Per-interval forecast totals with signed disturbance sizes, optionally
/// split over load buses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastSet {
    pub interval_s: u64,
    /// Divisor turning an MW load change into the per-unit disturbance.
    pub base_mva: f64,
    /// Interval-mean load, MW, one entry per interval.
    pub totals_mw: Vec<f64>,
    /// Signed per-unit disturbance entering each interval:
    /// `(totals[t] − totals[t−1]) / base_mva`, zero for the first interval.
    pub d_pe: Vec<f64>,
    /// Buses of the per-bus split (empty until `split_over` is called).
    pub load_buses: Vec<u32>,
    /// interval × bus forecast, rows summing to `totals_mw` exactly: the
    /// last bus takes the remainder after the proportional shares.
    pub per_bus_mw: Vec<Vec<f64>>,
}

impl ForecastSet {
    pub fn n_intervals(&self) -> usize {
        self.totals_mw.len()
    }

    /// Distribute each interval total over the network's load buses in
    /// proportion to their nominal loads.
    pub fn split_over(&mut self, net: &Network) -> Result<()> {
        let total: f64 = net.total_nominal_load_mw();
        if !(total > 0.0) {
            return Err(Error::Params("network has no nominal load to split over".into()));
        }
        self.load_buses = net.loads.iter().map(|l| l.bus).collect();
        let shares: Vec<f64> = net.loads.iter().map(|l| l.mw / total).collect();
        self.per_bus_mw = self
            .totals_mw
            .iter()
            .map(|&tot| {
                let n = shares.len();
                let mut row = Vec::with_capacity(n);
                let mut partial = 0.0;
                for &s in &shares[..n - 1] {
                    let v = tot * s;
                    partial += v;
                    row.push(v);
                }
                row.push(tot - partial);
                row
            })
            .collect();
        Ok(())
    }
}

/// Collapse a 1-second profile into interval-mean forecasts (a perfect
/// average forecast) and the disturbance chain between consecutive
/// intervals, per-unit on `base_mva`.
pub fn forecast_intervals(
    p: &LoadProfile,
    interval_s: u64,
    base_mva: f64,
) -> Result<ForecastSet> {
    if interval_s == 0 {
        return Err(Error::Params("zero interval length".into()));
    }
    if !(base_mva > 0.0) {
        return Err(Error::Params(format!("nonpositive forecast base {base_mva} MVA")));
    }
    if p.duration_s < interval_s {
        return Err(Error::Params(format!(
            "profile covers {} s, shorter than one {interval_s} s interval",
            p.duration_s
        )));
    }
    if p.resolution_s != 1 || p.series_mw.len() as u64 != p.duration_s {
        return Err(Error::Params("profile must be on a 1 s grid covering its duration".into()));
    }
    if p.duration_s % interval_s != 0 {
        return Err(Error::Params(format!(
            "profile duration {} s is not a whole number of {interval_s} s intervals",
            p.duration_s
        )));
    }
    let nt = (p.duration_s / interval_s) as usize;
    let k = interval_s as usize;
    let totals_mw: Vec<f64> = (0..nt)
        .map(|t| p.series_mw[t * k..(t + 1) * k].iter().sum::<f64>() / k as f64)
        .collect();
    let d_pe: Vec<f64> = (0..nt)
        .map(|t| if t == 0 { 0.0 } else { (totals_mw[t] - totals_mw[t - 1]) / base_mva })
        .collect();
    Ok(ForecastSet {
        interval_s,
        base_mva,
        totals_mw,
        d_pe,
        load_buses: Vec::new(),
        per_bus_mw: Vec::new(),
    })
}
