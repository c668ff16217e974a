//! Shared helpers: seeded RNG streams, affine scalers, a small dense solve.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Independent, reproducible RNG stream derived from a master seed.
///
/// Streams with the same seed but different indices are statistically
/// independent, so per-sample or per-draw work can be parallelized or
/// reordered without changing any value.
pub fn seeded_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Invertible affine map `x -> (x - shift) / scale`.
///
/// `from_range` maps `[lo, hi]` onto `[0, 1]`; a degenerate range keeps
/// scale 1 so the map stays invertible.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub shift: f64,
    pub scale: f64,
}

impl Affine {
    pub fn identity() -> Self {
        Affine { shift: 0.0, scale: 1.0 }
    }

    pub fn from_range(lo: f64, hi: f64) -> Self {
        let scale = if hi - lo > 0.0 { hi - lo } else { 1.0 };
        Affine { shift: lo, scale }
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.shift) / self.scale
    }

    pub fn invert(&self, y: f64) -> f64 {
        y * self.scale + self.shift
    }
}

/// One standard-normal draw (Box–Muller). Consumes two uniforms per call so
/// the stream position advances deterministically.
pub fn standard_normal(rng: &mut impl rand::Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Solve the dense system `a x = b` by Gaussian elimination with partial
/// pivoting, in place. Returns None for a (numerically) singular matrix.
/// Used for the tiny least-squares solves in training warm starts.
pub fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    assert!(a.len() == n && a.iter().all(|r| r.len() == n));
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = seeded_stream(7, 3);
        let mut b = seeded_stream(7, 3);
        let mut c = seeded_stream(7, 4);
        let (x, y, z) = (a.next_u64(), b.next_u64(), c.next_u64());
        assert_eq!(x, y);
        assert_ne!(x, z);
    }

    #[test]
    fn affine_roundtrips() {
        let f = Affine::from_range(2.0, 10.0);
        assert_eq!(f.apply(2.0), 0.0);
        assert_eq!(f.apply(10.0), 1.0);
        let x = 3.71;
        assert!((f.invert(f.apply(x)) - x).abs() < 1e-15);
        let g = Affine::from_range(5.0, 5.0);
        assert_eq!(g.apply(5.0), 0.0);
        assert_eq!(g.invert(0.0), 5.0);
    }

    #[test]
    fn dense_solve_recovers_known_solution() {
        let mut a = vec![
            vec![4.0, 1.0, 0.0],
            vec![1.0, 3.0, 1.0],
            vec![0.0, 1.0, 2.0],
        ];
        let xs = [1.0, -2.0, 0.5];
        let mut b: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a[i][j] * xs[j]).sum())
            .collect();
        let got = solve_dense(&mut a, &mut b).unwrap();
        for (g, w) in got.iter().zip(xs.iter()) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_solve_rejects_singular() {
        let mut a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        let mut b = vec![1.0, 2.0];
        assert!(solve_dense(&mut a, &mut b).is_none());
    }
}
