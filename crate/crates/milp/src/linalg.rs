//! Dense LU factorization with partial pivoting.
//!
//! Sized for basis matrices of a few hundred rows; also reused by the
//! generation-shift-factor computation, which needs plain dense solves.

/// LU factors of a square matrix, stored in one flat buffer (row-major).
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl LuFactors {
    /// Factors a row-major `n x n` matrix. Returns `None` when a pivot falls
    /// below `1e-11`, which callers treat as singular.
    pub fn factor(a: &[f64], n: usize) -> Option<Self> {
        assert_eq!(a.len(), n * n);
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].abs();
            for i in (k + 1)..n {
                let v = lu[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best < 1e-11 {
                return None;
            }
            if p != k {
                perm.swap(k, p);
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
            }
            let pivot = lu[k * n + k];
            for i in (k + 1)..n {
                let m = lu[i * n + k] / pivot;
                lu[i * n + k] = m;
                if m != 0.0 {
                    for j in (k + 1)..n {
                        lu[i * n + j] -= m * lu[k * n + j];
                    }
                }
            }
        }
        Some(Self { n, lu, perm })
    }

    /// Solves `A x = b` in place: `b` enters as the right-hand side and leaves
    /// as the solution.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[i] = b[self.perm[i]];
        }
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        b.copy_from_slice(&x);
    }

    /// Solves `A' y = c` in place (transpose solve).
    pub fn solve_transpose(&self, c: &mut [f64]) {
        let n = self.n;
        let mut y = c.to_vec();
        // U' is lower triangular: forward substitution with division.
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu[j * n + i] * y[j];
            }
            y[i] = s / self.lu[i * n + i];
        }
        // L' is unit upper triangular: backward substitution.
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..n {
                s -= self.lu[j * n + i] * y[j];
            }
            y[i] = s;
        }
        for i in 0..n {
            c[self.perm[i]] = y[i];
        }
    }
}

/// One-shot dense solve of `A x = b`. Returns `None` for singular `A`.
pub fn solve_dense(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let lu = LuFactors::factor(a, n)?;
    let mut x = b.to_vec();
    lu.solve(&mut x);
    Some(x)
}
