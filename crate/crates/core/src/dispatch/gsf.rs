//! Line-flow sensitivities to bus injections under the DC power-flow model.
//!
//! The sensitivity matrix maps a balanced injection vector (MW in, MW out,
//! summing to zero) to line flows. Injections are measured against a
//! withdrawal at the reference bus, so the reference column is identically
//! zero and any balanced injection decomposes exactly over the columns.

use crate::casedata::Network;
use crate::{Error, Result};

/// Dense LU factorization with partial pivoting, kept so one factorization
/// can serve one right-hand side per line.
struct Lu {
    a: Vec<Vec<f64>>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(mut a: Vec<Vec<f64>>) -> Option<Lu> {
        let n = a.len();
        let mut perm = Vec::with_capacity(n);
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
            if a[piv][col].abs() < 1e-10 {
                return None;
            }
            a.swap(col, piv);
            perm.push(piv);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                a[row][col] = f;
                if f != 0.0 {
                    for k in col + 1..n {
                        a[row][k] -= f * a[col][k];
                    }
                }
            }
        }
        Some(Lu { a, perm })
    }

    fn solve(&self, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            b.swap(col, self.perm[col]);
            for row in col + 1..n {
                b[row] -= self.a[row][col] * b[col];
            }
        }
        for row in (0..n).rev() {
            let mut s = b[row];
            for k in row + 1..n {
                s -= self.a[row][k] * b[k];
            }
            b[row] = s / self.a[row][row];
        }
        b
    }
}

/// Compute the lines × buses sensitivity matrix for `net` with withdrawal at
/// `ref_bus`. Entry `[l][k]` is the MW flow induced on line `l` (positive in
/// its from→to direction) by injecting 1 MW at bus `k` and withdrawing it at
/// the reference bus.
///
/// Errors: unknown reference bus or line endpoint, nonpositive reactance, and
/// a singular reduced susceptance matrix ("disconnected or degenerate
/// network").
pub fn compute_gsf(net: &Network, ref_bus: u32) -> Result<Vec<Vec<f64>>> {
    let n = net.buses.len();
    let idx_of = |bus: u32| net.buses.iter().position(|&b| b == bus);
    let r = idx_of(ref_bus)
        .ok_or_else(|| Error::Params(format!("reference bus {ref_bus} not in bus list")))?;

    // Map full bus index -> reduced index (reference bus removed).
    let red: Vec<Option<usize>> = (0..n)
        .map(|i| {
            if i == r {
                None
            } else {
                Some(if i < r { i } else { i - 1 })
            }
        })
        .collect();

    let m = n - 1;
    let mut bred = vec![vec![0.0; m]; m];
    let mut ends = Vec::with_capacity(net.lines.len());
    for line in &net.lines {
        if !(line.reactance > 0.0) {
            return Err(Error::Params(format!(
                "line {}-{}: nonpositive reactance {}",
                line.from, line.to, line.reactance
            )));
        }
        let f = idx_of(line.from).ok_or_else(|| {
            Error::Params(format!("line {}-{}: unknown bus {}", line.from, line.to, line.from))
        })?;
        let t = idx_of(line.to).ok_or_else(|| {
            Error::Params(format!("line {}-{}: unknown bus {}", line.from, line.to, line.to))
        })?;
        let b = 1.0 / line.reactance;
        if let Some(rf) = red[f] {
            bred[rf][rf] += b;
        }
        if let Some(rt) = red[t] {
            bred[rt][rt] += b;
        }
        if let (Some(rf), Some(rt)) = (red[f], red[t]) {
            bred[rf][rt] -= b;
            bred[rt][rf] -= b;
        }
        ends.push((f, t, line.reactance));
    }

    if m == 0 {
        return Ok(vec![vec![0.0]; net.lines.len()]);
    }
    let lu = Lu::factor(bred)
        .ok_or_else(|| Error::Dispatch("disconnected or degenerate network".into()))?;

    // One solve per line: y solves B̃ y = (e_from - e_to), then the
    // sensitivity to bus k is y[k]/x. This uses the symmetry of B̃.
    let mut gsf = Vec::with_capacity(net.lines.len());
    for &(f, t, x) in &ends {
        let mut rhs = vec![0.0; m];
        if let Some(rf) = red[f] {
            rhs[rf] += 1.0;
        }
        if let Some(rt) = red[t] {
            rhs[rt] -= 1.0;
        }
        let y = lu.solve(rhs);
        let mut row = vec![0.0; n];
        for k in 0..n {
            if let Some(rk) = red[k] {
                row[k] = y[rk] / x;
            }
        }
        gsf.push(row);
    }
    Ok(gsf)
}
