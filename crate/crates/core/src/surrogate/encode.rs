//! Exact mixed-integer linear encoding of a trained ReLU network.
//!
//! Each free hidden neuron gets one binary and four inequalities tying its
//! post-activation to `max(pre, 0)` via its interval bounds as big-M
//! constants; neurons the bounds prove always-active or always-inactive are
//! fixed affinely with no binary. Scalers are folded into the coefficients,
//! so the fragment's inputs and output are in engineering units.

use rand::Rng;

use visched_milp::{solve_milp, MilpOptions, MilpProblem, MilpStatus, Sense, VarId};

use crate::surrogate::bounds::{folded_layers, NeuronBounds};
use crate::surrogate::mlp::{predict, Mlp};
use crate::util::seeded_stream;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct FragVar {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub binary: bool,
}

#[derive(Clone, Debug)]
pub struct FragRow {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Self-contained linear fragment: variables (fragment-local indices), rows
/// over them, and the positions of the input and output variables. Splice it
/// into a host problem with [`MilpFragment::append_to`].
#[derive(Clone, Debug)]
pub struct MilpFragment {
    pub vars: Vec<FragVar>,
    pub rows: Vec<FragRow>,
    pub inputs: Vec<usize>,
    pub output: usize,
    pub n_binaries: usize,
    pub n_always_active: usize,
    pub n_always_inactive: usize,
}

impl MilpFragment {
    /// Adds every fragment variable (names prefixed to stay unique) and row
    /// to `p`; returns the host ids of the inputs and the output.
    pub fn append_to(&self, p: &mut MilpProblem, prefix: &str) -> Result<(Vec<VarId>, VarId)> {
        let mut ids = Vec::with_capacity(self.vars.len());
        for v in &self.vars {
            let name = format!("{prefix}{}", v.name);
            let id = if v.binary {
                p.add_binary(name, 0.0)?
            } else {
                p.add_var(name, v.lo, v.hi, 0.0)?
            };
            ids.push(id);
        }
        for r in &self.rows {
            p.add_row(
                format!("{prefix}{}", r.name),
                r.sense,
                r.rhs,
                r.coeffs.iter().map(|&(v, a)| (ids[v], a)).collect(),
            )?;
        }
        Ok((self.inputs.iter().map(|&i| ids[i]).collect(), ids[self.output]))
    }
}

/// Compile the network into big-M rows using `bounds` (which must be valid
/// for the input box the fragment will be used on). Big-M constants are the
/// per-neuron interval bounds, inflated by a hair so boundary inputs stay
/// feasible under floating-point rounding.
pub fn encode_relu_milp(m: &Mlp, bounds: &NeuronBounds) -> Result<MilpFragment> {
    let layers = folded_layers(m)?;
    if bounds.hidden.len() + 1 != layers.len() {
        return Err(Error::Params(format!(
            "bounds cover {} hidden layers, network has {}",
            bounds.hidden.len(),
            layers.len() - 1
        )));
    }
    for (li, (lay, nb)) in layers.iter().zip(&bounds.hidden).enumerate() {
        if lay.b.len() != nb.len() {
            return Err(Error::Params(format!(
                "bounds for layer {li} cover {} neurons, layer has {}",
                nb.len(),
                lay.b.len()
            )));
        }
        for b in nb {
            if b.lo > b.hi {
                return Err(Error::Params(format!(
                    "bounds with lo > hi on layer {li} ({} > {})",
                    b.lo, b.hi
                )));
            }
        }
    }

    let mut frag = MilpFragment {
        vars: Vec::new(),
        rows: Vec::new(),
        inputs: Vec::new(),
        output: 0,
        n_binaries: 0,
        n_always_active: 0,
        n_always_inactive: 0,
    };
    let inflate = |v: f64| 1e-9 + 1e-12 * v.abs();

    for (j, &(lo, hi)) in bounds.input_box.iter().enumerate() {
        frag.inputs.push(frag.vars.len());
        frag.vars.push(FragVar {
            name: format!("x{j}"),
            lo,
            hi,
            binary: false,
        });
    }

    // prev[j] = fragment variable carrying the j-th input of the next layer.
    let mut prev: Vec<usize> = frag.inputs.clone();
    for (li, lay) in layers.iter().enumerate() {
        let last = li + 1 == layers.len();
        if last {
            let y = frag.vars.len();
            frag.vars.push(FragVar {
                name: "y".into(),
                lo: bounds.output.0 - inflate(bounds.output.0),
                hi: bounds.output.1 + inflate(bounds.output.1),
                binary: false,
            });
            let mut coeffs = vec![(y, 1.0)];
            for (j, &w) in lay.w[0].iter().enumerate() {
                coeffs.push((prev[j], -w));
            }
            frag.rows.push(FragRow {
                name: "out".into(),
                coeffs,
                sense: Sense::Eq,
                rhs: lay.b[0],
            });
            frag.output = y;
            return Ok(frag);
        }

        let nb = &bounds.hidden[li];
        let mut next = Vec::with_capacity(lay.b.len());
        for (i, (row, &b)) in lay.w.iter().zip(&lay.b).enumerate() {
            let bound = nb[i];
            let z = frag.vars.len();
            if bound.always_inactive() {
                frag.vars.push(FragVar {
                    name: format!("z{li}_{i}"),
                    lo: 0.0,
                    hi: 0.0,
                    binary: false,
                });
                frag.n_always_inactive += 1;
                next.push(z);
                continue;
            }
            let hi_m = bound.hi + inflate(bound.hi);
            frag.vars.push(FragVar {
                name: format!("z{li}_{i}"),
                lo: 0.0,
                hi: hi_m.max(0.0),
                binary: false,
            });
            next.push(z);
            // z - W p  appears in every structural row.
            let affine = |zc: f64, extra: Vec<(usize, f64)>| {
                let mut coeffs = vec![(z, zc)];
                for (j, &w) in row.iter().enumerate() {
                    coeffs.push((prev[j], -zc * w));
                }
                coeffs.extend(extra);
                coeffs
            };
            if bound.always_active() {
                frag.rows.push(FragRow {
                    name: format!("id{li}_{i}"),
                    coeffs: affine(1.0, vec![]),
                    sense: Sense::Eq,
                    rhs: b,
                });
                frag.n_always_active += 1;
                continue;
            }
            let lo_m = bound.lo - inflate(bound.lo);
            let a = frag.vars.len();
            frag.vars.push(FragVar {
                name: format!("a{li}_{i}"),
                lo: 0.0,
                hi: 1.0,
                binary: true,
            });
            frag.n_binaries += 1;
            // z ≤ ẑ − lo(1 − a):   z − Wp − lo·a ≤ b − lo
            frag.rows.push(FragRow {
                name: format!("ub{li}_{i}"),
                coeffs: affine(1.0, vec![(a, -lo_m)]),
                sense: Sense::Le,
                rhs: b - lo_m,
            });
            // z ≥ ẑ:   z − Wp ≥ b
            frag.rows.push(FragRow {
                name: format!("lb{li}_{i}"),
                coeffs: affine(1.0, vec![]),
                sense: Sense::Ge,
                rhs: b,
            });
            // z ≤ hi·a
            frag.rows.push(FragRow {
                name: format!("sw{li}_{i}"),
                coeffs: vec![(z, 1.0), (a, -hi_m)],
                sense: Sense::Le,
                rhs: 0.0,
            });
        }
        prev = next;
    }
    unreachable!("validated non-empty layer list")
}

/// One sampled disagreement between the fragment and the forward pass.
#[derive(Clone, Debug)]
pub struct VerifyFailure {
    pub x: Vec<f64>,
    pub forward: f64,
    pub milp_min: Option<f64>,
    pub milp_max: Option<f64>,
    pub note: String,
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub samples: usize,
    pub max_abs_diff: f64,
    pub failures: Vec<VerifyFailure>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.max_abs_diff <= 1e-6
    }
}

fn solve_fixed(frag: &MilpFragment, x: &[f64], maximize: bool) -> Result<(MilpStatus, f64)> {
    let mut p = MilpProblem::new("verify");
    let (input_ids, y) = frag.append_to(&mut p, "")?;
    for (id, &v) in input_ids.iter().zip(x) {
        p.set_bounds(*id, v, v)?;
    }
    p.set_objective(y, if maximize { -1.0 } else { 1.0 })?;
    let opts = MilpOptions {
        workers: 1,
        ..MilpOptions::default()
    };
    let sol = solve_milp(&p, &opts)?;
    let val = if sol.x.is_empty() { f64::NAN } else { sol.x[y] };
    Ok((sol.status, val))
}

/// For `n` seeded inputs drawn over the fragment's input box: fix the
/// inputs, solve for the smallest and largest feasible output, and compare
/// both against the forward pass. Any infeasible solve or disagreement above
/// 1e-6 is recorded as a failure with its witness input.
pub fn verify_encoding(m: &Mlp, frag: &MilpFragment, n: usize, seed: u64) -> Result<VerifyReport> {
    let mut rng = seeded_stream(seed, 0);
    let boxes: Vec<(f64, f64)> = frag
        .inputs
        .iter()
        .map(|&i| (frag.vars[i].lo, frag.vars[i].hi))
        .collect();
    let mut report = VerifyReport {
        samples: n,
        max_abs_diff: 0.0,
        failures: Vec::new(),
    };
    for _ in 0..n {
        let x: Vec<f64> = boxes
            .iter()
            .map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..hi) } else { lo })
            .collect();
        let want = predict(m, &x)?;
        let (st_min, y_min) = solve_fixed(frag, &x, false)?;
        let (st_max, y_max) = solve_fixed(frag, &x, true)?;
        if st_min != MilpStatus::Optimal || st_max != MilpStatus::Optimal {
            report.failures.push(VerifyFailure {
                x,
                forward: want,
                milp_min: (st_min == MilpStatus::Optimal).then_some(y_min),
                milp_max: (st_max == MilpStatus::Optimal).then_some(y_max),
                note: format!("solver returned {st_min:?}/{st_max:?}"),
            });
            continue;
        }
        let diff = (y_min - want).abs().max((y_max - want).abs());
        report.max_abs_diff = report.max_abs_diff.max(diff);
        if diff > 1e-6 {
            report.failures.push(VerifyFailure {
                x,
                forward: want,
                milp_min: Some(y_min),
                milp_max: Some(y_max),
                note: format!("output differs by {diff:e}"),
            });
        }
    }
    Ok(report)
}
