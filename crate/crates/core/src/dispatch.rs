//! Interval dispatch: DC network sensitivities, piecewise-linear generation
//! costs, and the scheduling model with its four method variants.

pub mod build;
pub mod gsf;
pub mod pwl;
pub mod solve;
#[cfg(test)]
pub(crate) mod testutil;

pub use build::{build_interval_problem, COST_SEGMENTS};
pub use gsf::compute_gsf;
pub use pwl::{eval_segments, piecewise_cost, CostSegment};
pub use solve::{
    solve_horizon, worst_case_fixed_md, DispatchSolution, IntervalSolution, SolveStatus,
    SurrogateModels,
};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Generation cost model: quadratic energy cost `a·P² + b·P + c` plus a
/// linear price applied to every reserve product of the unit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenCost {
    /// Quadratic coefficient, $/MWh² (must be ≥ 0: convex).
    pub a: f64,
    /// Linear coefficient, $/MWh.
    pub b: f64,
    /// Constant term, $.
    pub c: f64,
    /// Reserve price, $/MWh.
    pub b_r: f64,
}

impl GenCost {
    /// Energy cost of output `p` MW over one hour.
    pub fn energy_cost(&self, p: f64) -> f64 {
        self.a * p * p + self.b * p + self.c
    }
}

/// The four scheduling variants compared throughout: setpoint-only
/// inverters, fixed virtual inertia without and with peak-headroom
/// reservation, and fully scheduled virtual inertia.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MethodVariant {
    I,
    II,
    III,
    IV,
}

/// How inverter virtual inertia and damping enter one interval's problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum IbrInertiaMode {
    /// Inverters follow power setpoints only and provide no virtual
    /// response; no (M, D) variables exist.
    None,
    /// Every inverter holds this same (M, D) pair, constant across
    /// intervals. Must lie inside each unit's schedulable box.
    Fixed { m: f64, d: f64 },
    /// Per-inverter (M, D) are per-interval decision variables inside each
    /// unit's schedulable box.
    Scheduled,
}

/// One scheduling variant: which inertia mode is in force and which
/// security constraints are built.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub variant: MethodVariant,
    pub ibr_inertia: IbrInertiaMode,
    /// Build the inertia floor and the nadir bound.
    pub freq_constraints: bool,
    /// Reserve transient-headroom on each inverter sized by the
    /// peak-response surrogate.
    pub peak_reserve_constraints: bool,
}

impl MethodConfig {
    /// Setpoint-only inverters, no frequency security.
    pub fn method_i() -> Self {
        MethodConfig {
            variant: MethodVariant::I,
            ibr_inertia: IbrInertiaMode::None,
            freq_constraints: false,
            peak_reserve_constraints: false,
        }
    }

    /// Fixed (M, D) on every inverter with the frequency constraints built,
    /// but no headroom reserved for the transient response.
    pub fn method_ii(m: f64, d: f64) -> Self {
        MethodConfig {
            variant: MethodVariant::II,
            ibr_inertia: IbrInertiaMode::Fixed { m, d },
            freq_constraints: true,
            peak_reserve_constraints: false,
        }
    }

    /// Fixed (M, D) with both the frequency constraints and the
    /// peak-headroom reservation.
    pub fn method_iii(m: f64, d: f64) -> Self {
        MethodConfig {
            variant: MethodVariant::III,
            ibr_inertia: IbrInertiaMode::Fixed { m, d },
            freq_constraints: true,
            peak_reserve_constraints: true,
        }
    }

    /// Per-interval scheduled (M, D) with all security constraints.
    pub fn method_iv() -> Self {
        MethodConfig {
            variant: MethodVariant::IV,
            ibr_inertia: IbrInertiaMode::Scheduled,
            freq_constraints: true,
            peak_reserve_constraints: true,
        }
    }

    /// Checks the variant/flag consistency table; every builder entry point
    /// calls this first.
    pub fn validate(&self) -> Result<()> {
        let ok = match self.variant {
            MethodVariant::I => {
                matches!(self.ibr_inertia, IbrInertiaMode::None)
                    && !self.freq_constraints
                    && !self.peak_reserve_constraints
            }
            MethodVariant::II => {
                matches!(self.ibr_inertia, IbrInertiaMode::Fixed { .. })
                    && self.freq_constraints
                    && !self.peak_reserve_constraints
            }
            MethodVariant::III => {
                matches!(self.ibr_inertia, IbrInertiaMode::Fixed { .. })
                    && self.freq_constraints
                    && self.peak_reserve_constraints
            }
            MethodVariant::IV => {
                matches!(self.ibr_inertia, IbrInertiaMode::Scheduled)
                    && self.freq_constraints
                    && self.peak_reserve_constraints
            }
        };
        if ok {
            if let IbrInertiaMode::Fixed { m, d } = self.ibr_inertia {
                if !(m.is_finite() && d.is_finite() && m >= 0.0 && d >= 0.0) {
                    return Err(Error::Params(format!(
                        "fixed virtual inertia ({m}, {d}) must be finite and nonnegative"
                    )));
                }
            }
            Ok(())
        } else {
            Err(Error::Params(format!(
                "inconsistent method configuration: variant {:?} with inertia {:?}, \
                 frequency constraints {}, peak reserve {}",
                self.variant, self.ibr_inertia, self.freq_constraints, self.peak_reserve_constraints
            )))
        }
    }
}
