//! Shared fixtures for the dispatch tests: a two-bus case small enough for
//! hand arithmetic, and zero-output predictor stubs whose encodings add no
//! binaries (their prediction is identically zero, leaving only the
//! structural constraints under test).

use crate::casedata::{BusLoad, Case, IbrUnit, Limits, Line, Network, SgUnit};
use crate::dispatch::{compute_gsf, GenCost};
use crate::freq::{IbrParams, SgParams};
use crate::surrogate::mlp::{Layer, TrainMeta};
use crate::surrogate::{encode_relu_milp, propagate_bounds, Mlp, MilpFragment};
use crate::util::Affine;

pub(crate) fn stub_meta() -> TrainMeta {
    TrainMeta {
        seed: 0,
        hidden: 0,
        epochs: 0,
        lr0: 0.0,
        halve_every: 1,
        batch: 1,
        momentum: 0.0,
        warm_start: false,
        best_val_mse: 0.0,
        final_train_mse: 0.0,
        loss_history: vec![],
    }
}

/// A single affine layer with zero weights: predicts 0 on the given box.
pub(crate) fn zero_net(bx: &[(f64, f64)]) -> Mlp {
    Mlp {
        layers: vec![Layer { w: vec![vec![0.0; bx.len()]], b: vec![0.0] }],
        input_scaler: bx.iter().map(|&(lo, hi)| Affine::from_range(lo, hi)).collect(),
        output_scaler: Affine::identity(),
        feature_names: (0..bx.len()).map(|j| format!("x{j}")).collect(),
        meta: stub_meta(),
    }
}

pub(crate) fn zero_frag(bx: &[(f64, f64)]) -> MilpFragment {
    let net = zero_net(bx);
    let nb = propagate_bounds(&net, &net.input_box()).unwrap();
    encode_relu_milp(&net, &nb).unwrap()
}

/// Boxes wide enough for every test system here.
pub(crate) fn nadir_box() -> Vec<(f64, f64)> {
    vec![(0.0, 20.0), (0.0, 20.0), (0.0, 1.0)]
}

pub(crate) fn peak_box() -> Vec<(f64, f64)> {
    vec![(0.0, 20.0), (0.0, 20.0), (0.0, 8.0), (0.0, 6.0), (0.0, 1.0)]
}

/// One 800-MW synchronous unit on the reference bus, one 500-MW inverter
/// and the 600-MW load on the other, joined by one line. Unit capacity
/// weights are 1, so the synchronous aggregate is exactly (M, D) = (3, 1).
pub(crate) fn two_bus_case(ibr_m_hi: f64) -> Case {
    let mut network = Network {
        buses: vec![1, 2],
        lines: vec![Line { from: 1, to: 2, reactance: 0.1, limit_mw: 1000.0 }],
        ref_bus: 1,
        loads: vec![BusLoad { bus: 2, mw: 600.0 }],
        gsf: vec![],
    };
    network.gsf = compute_gsf(&network, 1).unwrap();
    Case {
        schema_version: 1,
        name: "two-bus test system".into(),
        network,
        sgs: vec![SgUnit {
            bus: 1,
            pmin_mw: 0.0,
            pmax_mw: 800.0,
            params: SgParams {
                id: "sg1".into(),
                inertia_m: 3.0,
                damping_d: 1.0,
                gain_k: 1.0,
                droop_r: 0.05,
                fraction_f: 0.3,
                turbine_t: 2.0,
                mva_base: 1000.0,
            },
            cost: GenCost { a: 0.01, b: 5.0, c: 100.0, b_r: 8.0 },
        }],
        ibrs: vec![IbrUnit {
            bus: 2,
            capacity_mw: 500.0,
            params: IbrParams {
                id: "ibr1".into(),
                virtual_m: 4.0,
                virtual_d: 1.0,
                lag_t: 0.02,
                mva_base: 1000.0,
                m_bounds: (0.0, ibr_m_hi),
                d_bounds: (0.0, 6.0),
                default_m: 4.0,
                default_d: 1.0,
            },
            cost: GenCost { a: 0.0, b: 20.0, c: 10.0, b_r: 12.0 },
        }],
        system_mva: 1000.0,
        s_base_mva: 100.0,
        f0: 60.0,
        limits: Limits { rocof_hz_per_s: 0.5, nadir_band_hz: 0.1 },
    }
}
