//! Banded direct factorizations. Lexicographic ordering of box and ball
//! domains gives a bandwidth of one row of the domain, so these stay cheap
//! well past the sizes a dense factorization could handle.

use crate::error::{Error, Result};

/// Cholesky factor `L` of a symmetric positive definite band matrix with
/// half-bandwidth `bw`, stored row-wise: row `i` holds columns
/// `i - bw ..= i`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    lower: Vec<f64>,
}

impl BandedCholesky {
    /// Factors the matrix whose lower band is produced by `entry(i, j)`
    /// for `j <= i`, `i - j <= bw`.
    pub fn factor(n: usize, bw: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let w = bw + 1;
        let mut lower = vec![0.0; n * w];
        for i in 0..n {
            let first = i.saturating_sub(bw);
            for j in first..=i {
                let k0 = first.max(j.saturating_sub(bw));
                let mut s = entry(i, j);
                for k in k0..j {
                    s -= lower[i * w + k + bw - i] * lower[j * w + k + bw - j];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { row: i, pivot: s });
                    }
                    lower[i * w + bw] = s.sqrt();
                } else {
                    lower[i * w + j + bw - i] = s / lower[j * w + bw];
                }
            }
        }
        Ok(BandedCholesky { n, bw, lower })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Solves `L Lᵀ x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        assert_eq!(x.len(), n);
        let l = &self.lower;
        for i in 0..n {
            let first = i.saturating_sub(bw);
            let mut s = x[i];
            for k in first..i {
                s -= l[i * w + k + bw - i] * x[k];
            }
            x[i] = s / l[i * w + bw];
        }
        for i in (0..n).rev() {
            let last = (i + bw).min(n - 1);
            let mut s = x[i];
            for k in i + 1..=last {
                s -= l[k * w + i + bw - k] * x[k];
            }
            x[i] = s / l[i * w + bw];
        }
    }
}

/// General band matrix with `kl` sub- and `ku` super-diagonals, with room
/// for the fill produced by partial pivoting.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        // Row i stores columns i - kl ..= i + kl + ku.
        let offset = j as isize - i as isize + self.kl as isize;
        debug_assert!(offset >= 0 && (offset as usize) < self.width, "({i},{j}) outside band");
        i * self.width + offset as usize
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let off = j as isize - i as isize + self.kl as isize;
        if off < 0 || off as usize >= self.width {
            0.0
        } else {
            self.data[i * self.width + off as usize]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "({i},{j}) outside the declared band"
        );
        let s = self.slot(i, j);
        self.data[s] = value;
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let s = self.slot(i, j);
        self.data[s] += value;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Gaussian elimination with partial pivoting, consuming the matrix.
    pub fn solve(mut self, rhs: &[f64]) -> Result<Vec<f64>> {
        let (n, kl) = (self.n, self.kl);
        let upper = self.kl + self.ku;
        let mut b = rhs.to_vec();
        assert_eq!(b.len(), n);
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + upper).min(n - 1);
            let pivot_row = (k..=last_row)
                .max_by(|&a, &c| self.get(a, k).abs().total_cmp(&self.get(c, k).abs()))
                .unwrap();
            let pivot = self.get(pivot_row, k);
            if pivot.abs() <= f64::EPSILON * scale * n as f64 || !pivot.is_finite() {
                return Err(Error::Singular { row: k });
            }
            if pivot_row != k {
                for j in k..=last_col {
                    let a = self.get(k, j);
                    let c = self.get(pivot_row, j);
                    self.set_fill(k, j, c);
                    self.set_fill(pivot_row, j, a);
                }
                b.swap(k, pivot_row);
            }
            for i in k + 1..=last_row {
                let factor = self.get(i, k) / pivot;
                if factor == 0.0 {
                    continue;
                }
                self.set_fill(i, k, 0.0);
                for j in k + 1..=last_col {
                    let v = self.get(i, j) - factor * self.get(k, j);
                    self.set_fill(i, j, v);
                }
                b[i] -= factor * b[k];
            }
        }
        for i in (0..n).rev() {
            let last_col = (i + upper).min(n - 1);
            let mut s = b[i];
            for j in i + 1..=last_col {
                s -= self.get(i, j) * b[j];
            }
            b[i] = s / self.get(i, i);
        }
        Ok(b)
    }

    fn set_fill(&mut self, i: usize, j: usize, value: f64) {
        let s = self.slot(i, j);
        self.data[s] = value;
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn dense_matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
    }

    #[test]
    fn cholesky_solves_a_tridiagonal_system() {
        let n = 50;
        let a = |i: usize, j: usize| if i == j { 3.0 } else { -1.0 };
        let chol = BandedCholesky::factor(n, 1, a).unwrap();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = 3.0 * x_true[i];
                if i > 0 {
                    s -= x_true[i - 1];
                }
                if i + 1 < n {
                    s -= x_true[i + 1];
                }
                s
            })
            .collect();
        let mut x = b.clone();
        chol.solve_in_place(&mut x);
        for (p, q) in x.iter().zip(&x_true) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = |i: usize, j: usize| if i == j { 1.0 } else { -2.0 };
        assert!(matches!(
            BandedCholesky::factor(3, 1, a),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn lu_needs_pivoting_and_gets_it() {
        // Zero leading pivot forces a row swap.
        let mut m = BandMatrix::zeros(3, 1, 1);
        let dense = vec![
            vec![0.0, 2.0, 0.0],
            vec![1.0, 1.0, 3.0],
            vec![0.0, 4.0, -1.0],
        ];
        for (i, row) in dense.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    m.set(i, j, v);
                }
            }
        }
        let x_true = [1.0, -2.0, 0.5];
        let b = dense_matvec(&dense, &x_true);
        let x = m.solve(&b).unwrap();
        for (p, q) in x.iter().zip(&x_true) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn lu_matches_dense_residual_on_random_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (n, kl, ku) = (40, 3, 2);
        let mut m = BandMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                m.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        let x_true: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = m.matvec(&x_true);
        let x = m.clone().solve(&b).unwrap();
        let r = m.matvec(&x);
        let res = r.iter().zip(&b).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
        assert!(res < 1e-10, "residual {res}");
    }

    #[test]
    fn lu_reports_singular() {
        let m = BandMatrix::zeros(2, 1, 1);
        assert!(matches!(m.solve(&[1.0, 1.0]), Err(Error::Singular { .. })));
    }
}
