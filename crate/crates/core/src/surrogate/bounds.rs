//! Interval propagation of pre-activation ranges through a ReLU network.

use crate::surrogate::mlp::{Layer, Mlp};
use crate::{Error, Result};

/// Reachable pre-activation interval of one hidden neuron over an input box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NeuronBound {
    pub lo: f64,
    pub hi: f64,
}

impl NeuronBound {
    /// The ReLU is the identity everywhere on the box.
    pub fn always_active(&self) -> bool {
        self.lo >= 0.0
    }

    /// The ReLU clamps to zero everywhere on the box.
    pub fn always_inactive(&self) -> bool {
        self.hi <= 0.0
    }
}

/// Per-neuron pre-activation intervals (one vector per hidden layer) plus
/// the reachable output interval, all over a declared engineering-unit
/// input box.
#[derive(Clone, Debug)]
pub struct NeuronBounds {
    pub input_box: Vec<(f64, f64)>,
    pub hidden: Vec<Vec<NeuronBound>>,
    pub output: (f64, f64),
}

impl NeuronBounds {
    pub fn n_stable(&self) -> usize {
        self.hidden
            .iter()
            .flatten()
            .filter(|b| b.always_active() || b.always_inactive())
            .count()
    }

    pub fn n_free(&self) -> usize {
        self.hidden.iter().map(Vec::len).sum::<usize>() - self.n_stable()
    }
}

/// The network with both scalers folded away: same outputs as the scaled
/// forward pass (up to rounding), but expressed directly over engineering
/// inputs so bound propagation and the mixed-integer encoding share one
/// exact set of coefficients.
pub fn folded_layers(m: &Mlp) -> Result<Vec<Layer>> {
    m.validate()?;
    let mut layers = m.layers.clone();
    {
        let first = &mut layers[0];
        for (row, b) in first.w.iter_mut().zip(first.b.iter_mut()) {
            for (wj, s) in row.iter_mut().zip(&m.input_scaler) {
                *b -= *wj * s.shift / s.scale;
                *wj /= s.scale;
            }
        }
    }
    {
        let last = layers.last_mut().expect("validated non-empty");
        let s = m.output_scaler;
        for w in &mut last.w[0] {
            *w *= s.scale;
        }
        last.b[0] = last.b[0] * s.scale + s.shift;
    }
    Ok(layers)
}

/// Forward pass through [`folded_layers`]; returns each hidden layer's
/// pre-activations and the output. Term order matches the interval
/// propagation, so sampled values respect the computed bounds exactly.
pub fn forward_folded(layers: &[Layer], x: &[f64]) -> (Vec<Vec<f64>>, f64) {
    let mut pre_acts = Vec::with_capacity(layers.len().saturating_sub(1));
    let mut cur = x.to_vec();
    for (li, layer) in layers.iter().enumerate() {
        let last = li + 1 == layers.len();
        let mut pre = Vec::with_capacity(layer.b.len());
        for (row, b) in layer.w.iter().zip(&layer.b) {
            let mut acc = *b;
            for (w, v) in row.iter().zip(&cur) {
                acc += w * v;
            }
            pre.push(acc);
        }
        if last {
            return (pre_acts, pre[0]);
        }
        cur = pre.iter().map(|v| v.max(0.0)).collect();
        pre_acts.push(pre);
    }
    unreachable!("validated non-empty layer list")
}

/// Interval arithmetic through every affine layer and ReLU: per hidden
/// neuron the reachable pre-activation interval over `input_box`, with
/// always-active (lo ≥ 0) and always-inactive (hi ≤ 0) neurons identifiable
/// from the result.
pub fn propagate_bounds(m: &Mlp, input_box: &[(f64, f64)]) -> Result<NeuronBounds> {
    if input_box.len() != m.n_inputs() {
        return Err(Error::Params(format!(
            "input box has {} ranges, model expects {}",
            input_box.len(),
            m.n_inputs()
        )));
    }
    for &(lo, hi) in input_box {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::Params(format!("invalid input range [{lo}, {hi}]")));
        }
    }
    let layers = folded_layers(m)?;
    let mut cur: Vec<(f64, f64)> = input_box.to_vec();
    let mut hidden = Vec::with_capacity(layers.len() - 1);
    for (li, layer) in layers.iter().enumerate() {
        let last = li + 1 == layers.len();
        let mut pre = Vec::with_capacity(layer.b.len());
        for (row, b) in layer.w.iter().zip(&layer.b) {
            let mut lo = *b;
            let mut hi = *b;
            for (w, &(xl, xh)) in row.iter().zip(&cur) {
                if *w >= 0.0 {
                    lo += w * xl;
                    hi += w * xh;
                } else {
                    lo += w * xh;
                    hi += w * xl;
                }
            }
            pre.push(NeuronBound { lo, hi });
        }
        if last {
            return Ok(NeuronBounds {
                input_box: input_box.to_vec(),
                hidden,
                output: (pre[0].lo, pre[0].hi),
            });
        }
        cur = pre.iter().map(|b| (b.lo.max(0.0), b.hi.max(0.0))).collect();
        hidden.push(pre);
    }
    unreachable!("validated non-empty layer list")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::mlp::TrainMeta;
    use crate::util::{seeded_stream, Affine};
    use rand::Rng;

    fn meta() -> TrainMeta {
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

    fn tiny(w: f64, b: f64) -> Mlp {
        Mlp {
            layers: vec![
                Layer { w: vec![vec![w]], b: vec![b] },
                Layer { w: vec![vec![1.0]], b: vec![0.0] },
            ],
            input_scaler: vec![Affine::identity()],
            output_scaler: Affine::identity(),
            feature_names: vec!["x".into()],
            meta: meta(),
        }
    }

    #[test]
    fn unit_neuron_bounds_follow_the_box() {
        let nb = propagate_bounds(&tiny(1.0, 0.0), &[(-1.0, 1.0)]).unwrap();
        assert_eq!(nb.hidden[0][0], NeuronBound { lo: -1.0, hi: 1.0 });
        assert!(!nb.hidden[0][0].always_active());
        assert!(!nb.hidden[0][0].always_inactive());
    }

    #[test]
    fn shifted_neuron_is_marked_always_active() {
        let nb = propagate_bounds(&tiny(1.0, 2.0), &[(-1.0, 1.0)]).unwrap();
        assert_eq!(nb.hidden[0][0], NeuronBound { lo: 1.0, hi: 3.0 });
        assert!(nb.hidden[0][0].always_active());
        let nb = propagate_bounds(&tiny(1.0, -2.0), &[(-1.0, 1.0)]).unwrap();
        assert!(nb.hidden[0][0].always_inactive());
    }

    #[test]
    fn sampled_pre_activations_never_escape_the_bounds() {
        // Random 16-neuron net over a 3-feature box with nontrivial scalers.
        let mut rng = seeded_stream(77, 0);
        let h = 16;
        let d = 3;
        let layers = vec![
            Layer {
                w: (0..h)
                    .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
                    .collect(),
                b: (0..h).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            },
            Layer {
                w: vec![(0..h).map(|_| rng.gen_range(-1.0..1.0)).collect()],
                b: vec![rng.gen_range(-1.0..1.0)],
            },
        ];
        let m = Mlp {
            layers,
            input_scaler: vec![
                Affine::from_range(2.0, 9.0),
                Affine::from_range(0.0, 4.0),
                Affine::from_range(0.01, 0.06),
            ],
            output_scaler: Affine { shift: -0.3, scale: 0.02 },
            feature_names: vec!["m".into(), "d".into(), "p".into()],
            meta: meta(),
        };
        let input_box = [(2.0, 9.0), (0.0, 4.0), (0.01, 0.06)];
        let nb = propagate_bounds(&m, &input_box).unwrap();
        let folded = folded_layers(&m).unwrap();
        for _ in 0..100_000 {
            let x: Vec<f64> = input_box
                .iter()
                .map(|&(lo, hi)| rng.gen_range(lo..hi))
                .collect();
            let (pre, y) = forward_folded(&folded, &x);
            for (layer, bounds) in pre.iter().zip(&nb.hidden) {
                for (v, b) in layer.iter().zip(bounds) {
                    assert!(b.lo <= *v && *v <= b.hi, "{v} outside [{}, {}]", b.lo, b.hi);
                }
            }
            assert!(nb.output.0 <= y && y <= nb.output.1);
        }
    }

    #[test]
    fn folded_network_matches_the_scaled_forward_pass() {
        let mut rng = seeded_stream(78, 0);
        let m = Mlp {
            layers: vec![
                Layer {
                    w: (0..8)
                        .map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect())
                        .collect(),
                    b: (0..8).map(|_| rng.gen_range(-0.5..0.5)).collect(),
                },
                Layer {
                    w: vec![(0..8).map(|_| rng.gen_range(-1.0..1.0)).collect()],
                    b: vec![0.2],
                },
            ],
            input_scaler: vec![Affine::from_range(1.0, 3.0), Affine::from_range(-2.0, 5.0)],
            output_scaler: Affine { shift: 0.1, scale: 0.5 },
            feature_names: vec!["a".into(), "b".into()],
            meta: meta(),
        };
        let folded = folded_layers(&m).unwrap();
        for _ in 0..1000 {
            let x = vec![rng.gen_range(1.0..3.0), rng.gen_range(-2.0..5.0)];
            let (_, y) = forward_folded(&folded, &x);
            let want = crate::surrogate::mlp::predict(&m, &x).unwrap();
            assert!((y - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
    }
}
