//! Seeded sampling of the closed-form frequency metrics into training data.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;

use crate::freq::{freq_metrics, power_metrics, IbrParams, SyntheticParams};
use crate::util::{seeded_stream, Affine};
use crate::{Error, Result};

/// Which closed-form quantity a dataset (and the net trained on it) targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetKind {
    /// Magnitude of the frequency-nadir deviation, p.u.
    /// Features: total inertia M, total damping D, disturbance size.
    Nadir,
    /// Magnitude of one inverter's largest power response, p.u. on the
    /// inverter base. Features: M, D, the inverter's own virtual inertia and
    /// damping, disturbance size.
    PeakPower,
}

impl TargetKind {
    pub fn feature_names(self) -> Vec<String> {
        match self {
            TargetKind::Nadir => vec!["m".into(), "d".into(), "d_pe".into()],
            TargetKind::PeakPower => vec![
                "m".into(),
                "d".into(),
                "m_ibr".into(),
                "d_ibr".into(),
                "d_pe".into(),
            ],
        }
    }

    pub fn n_features(self) -> usize {
        match self {
            TargetKind::Nadir => 3,
            TargetKind::PeakPower => 5,
        }
    }
}

/// Feature matrix, target vector, and the affine map taking the sampled box
/// to the unit cube. Production datasets hold thousands of samples; tiny
/// ones are allowed for point checks.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    /// Row-major samples, engineering units.
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    /// Per-feature map onto [0, 1] over the sampled box.
    pub scaler: Vec<Affine>,
    pub seed: u64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

fn draw_sample(
    kind: TargetKind,
    feature_box: &[(f64, f64)],
    fixed: &SyntheticParams,
    seed: u64,
    index: usize,
    cap: usize,
) -> Result<(Vec<f64>, f64)> {
    let mut rng = seeded_stream(seed, index as u64);
    for _ in 0..cap {
        let x: Vec<f64> = feature_box
            .iter()
            .map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..hi) } else { lo })
            .collect();
        let p = SyntheticParams::from_aggregates(
            x[0],
            x[1],
            fixed.r_agg,
            fixed.f_agg,
            fixed.t,
            fixed.system_mva,
            fixed.f0,
        )?;
        if !(p.zeta < 1.0) {
            continue;
        }
        let target = match kind {
            TargetKind::Nadir => freq_metrics(&p, x[2])?.delta_f_nadir.abs(),
            TargetKind::PeakPower => {
                let ibr = IbrParams::fixed("sample", x[2], x[3], 1e-3, fixed.system_mva);
                power_metrics(&p, &ibr, x[4])?.delta_p_max.abs()
            }
        };
        if !target.is_finite() {
            continue;
        }
        return Ok((x, target));
    }
    Err(Error::Domain(format!(
        "box entirely infeasible: no sample with damping ratio below 1 in {cap} draws"
    )))
}

/// Sample `n` points uniformly in `feature_box`, evaluate the closed form,
/// and package the result. Points whose damping ratio reaches 1 are
/// resampled; a sample that fails 10·n consecutive draws aborts with an
/// infeasible-box error. `fixed` supplies the frozen aggregate context
/// (governor gains, turbine constant, base, nominal frequency); its inertia
/// and damping fields are ignored in favor of the drawn features.
///
/// Each sample owns an independent RNG stream derived from (`seed`, index),
/// so the result is bit-identical regardless of how the work is split over
/// threads.
pub fn generate_dataset(
    kind: TargetKind,
    feature_box: &[(f64, f64)],
    n: usize,
    seed: u64,
    fixed: &SyntheticParams,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Params("dataset size must be at least 1".into()));
    }
    if feature_box.len() != kind.n_features() {
        return Err(Error::Params(format!(
            "feature box has {} ranges, target needs {}",
            feature_box.len(),
            kind.n_features()
        )));
    }
    for &(lo, hi) in feature_box {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::Params(format!("invalid feature range [{lo}, {hi}]")));
        }
    }
    let cap = 10 * n;
    let workers = std::thread::available_parallelism()
        .map(|v| v.get())
        .unwrap_or(1)
        .min(8)
        .min(n)
        .max(1);
    let chunk = n.div_ceil(workers);
    let mut chunks: Vec<Result<Vec<(Vec<f64>, f64)>>> = Vec::with_capacity(workers);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let lo = w * chunk;
                let hi = ((w + 1) * chunk).min(n);
                s.spawn(move || {
                    (lo..hi)
                        .map(|i| draw_sample(kind, feature_box, fixed, seed, i, cap))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        for h in handles {
            chunks.push(h.join().expect("dataset worker panicked"));
        }
    });
    let mut inputs = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for c in chunks {
        for (x, y) in c? {
            inputs.push(x);
            targets.push(y);
        }
    }
    Ok(Dataset {
        feature_names: kind.feature_names(),
        inputs,
        targets,
        scaler: feature_box
            .iter()
            .map(|&(lo, hi)| Affine::from_range(lo, hi))
            .collect(),
        seed,
    })
}

/// Write `header = feature names + target` and one row per sample, using
/// shortest-roundtrip decimal so a read-back is bit-exact.
pub fn write_dataset_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{},target", ds.feature_names.join(","))?;
    for (x, y) in ds.inputs.iter().zip(&ds.targets) {
        for v in x {
            write!(out, "{v:?},")?;
        }
        writeln!(out, "{y:?}")?;
    }
    out.flush()?;
    Ok(())
}

/// Read a dataset written by [`write_dataset_csv`]. The sampling seed is not
/// stored in the file, and the scaler is reconstructed from the empirical
/// per-feature range.
pub fn read_dataset_csv(path: &Path) -> Result<Dataset> {
    let file = BufReader::new(std::fs::File::open(path)?);
    let mut lines = file.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Params(format!("{}: empty dataset file", path.display())))??;
    let cols: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    if cols.len() < 2 || cols.last().map(String::as_str) != Some("target") {
        return Err(Error::Params(format!(
            "{}: header must end with a target column",
            path.display()
        )));
    }
    let feature_names: Vec<String> = cols[..cols.len() - 1].to_vec();
    let d = feature_names.len();
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for (ln, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Params(format!("{}: bad number on data row {}", path.display(), ln + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != d + 1 {
            return Err(Error::Params(format!(
                "{}: row {} has {} fields, expected {}",
                path.display(),
                ln + 1,
                vals.len(),
                d + 1
            )));
        }
        inputs.push(vals[..d].to_vec());
        targets.push(vals[d]);
    }
    if inputs.is_empty() {
        return Err(Error::Params(format!("{}: no data rows", path.display())));
    }
    let scaler = (0..d)
        .map(|j| {
            let lo = inputs.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
            let hi = inputs.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max);
            Affine::from_range(lo, hi)
        })
        .collect();
    Ok(Dataset {
        feature_names,
        inputs,
        targets,
        scaler,
        seed: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed_context() -> SyntheticParams {
        SyntheticParams::from_aggregates(4.0, 1.0, 250.0 / 6.3, 50.0 / 6.3, 2.0, 8400.0, 60.0)
            .unwrap()
    }

    #[test]
    fn point_box_reproduces_the_direct_evaluation() {
        let fixed = fixed_context();
        let ds = generate_dataset(
            TargetKind::Nadir,
            &[(5.0, 5.0), (1.5, 1.5), (0.03, 0.03)],
            1,
            9,
            &fixed,
        )
        .unwrap();
        let p = SyntheticParams::from_aggregates(
            5.0, 1.5, fixed.r_agg, fixed.f_agg, fixed.t, fixed.system_mva, fixed.f0,
        )
        .unwrap();
        let want = freq_metrics(&p, 0.03).unwrap().delta_f_nadir.abs();
        assert_eq!(ds.targets[0], want);
        assert_eq!(ds.inputs[0], vec![5.0, 1.5, 0.03]);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let fixed = fixed_context();
        let feature_box = [(3.2, 6.6), (0.55, 3.1), (0.015, 0.06)];
        let a = generate_dataset(TargetKind::Nadir, &feature_box, 500, 42, &fixed).unwrap();
        let b = generate_dataset(TargetKind::Nadir, &feature_box, 500, 42, &fixed).unwrap();
        assert_eq!(a.inputs, b.inputs);
        assert_eq!(a.targets, b.targets);
        let c = generate_dataset(TargetKind::Nadir, &feature_box, 500, 43, &fixed).unwrap();
        assert_ne!(a.targets, c.targets);
    }

    #[test]
    fn infeasible_box_is_rejected_after_bounded_draws() {
        let fixed = fixed_context();
        // Tiny inertia with a huge transient gain is far overdamped.
        let err = generate_dataset(
            TargetKind::Nadir,
            &[(0.05, 0.06), (0.0, 0.1), (0.01, 0.02)],
            3,
            7,
            &fixed,
        )
        .unwrap_err();
        assert!(err.to_string().contains("box entirely infeasible"));
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let fixed = fixed_context();
        let feature_box = [(3.2, 6.6), (0.55, 3.1), (0.0, 8.0), (0.0, 6.0), (0.015, 0.06)];
        let ds = generate_dataset(TargetKind::PeakPower, &feature_box, 200, 5, &fixed).unwrap();
        let dir = std::env::temp_dir().join("visched-dataset-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("peak.csv");
        write_dataset_csv(&ds, &path).unwrap();
        let back = read_dataset_csv(&path).unwrap();
        assert_eq!(back.feature_names, ds.feature_names);
        assert_eq!(back.inputs, ds.inputs);
        assert_eq!(back.targets, ds.targets);
    }

    #[test]
    fn sampled_targets_stay_inside_the_corner_range() {
        // The closed-form targets are monotone enough over the working box
        // that the box corners realize the extreme values; every sampled
        // target must fall inside that corner range.
        let fixed = fixed_context();
        let feature_box = [(3.2, 6.6), (0.55, 3.1), (0.015, 0.06)];
        let ds = generate_dataset(TargetKind::Nadir, &feature_box, 2000, 11, &fixed).unwrap();
        let mut cmin = f64::INFINITY;
        let mut cmax = f64::NEG_INFINITY;
        for m in [3.2, 6.6] {
            for d in [0.55, 3.1] {
                for dpe in [0.015, 0.06] {
                    let p = SyntheticParams::from_aggregates(
                        m, d, fixed.r_agg, fixed.f_agg, fixed.t, fixed.system_mva, fixed.f0,
                    )
                    .unwrap();
                    let v = freq_metrics(&p, dpe).unwrap().delta_f_nadir.abs();
                    cmin = cmin.min(v);
                    cmax = cmax.max(v);
                }
            }
        }
        let lo = ds.targets.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ds.targets.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(cmin <= lo && hi <= cmax, "sampled [{lo}, {hi}] vs corners [{cmin}, {cmax}]");
        assert!(ds.targets.iter().all(|t| t.is_finite()));
    }
}
