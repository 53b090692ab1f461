//! Tridiagonal and banded direct solvers.

/// Solves a tridiagonal system in place with the Thomas algorithm.
///
/// `lower[i]` couples row `i + 1` to `x[i]`, `upper[i]` couples row `i` to
/// `x[i + 1]`. No pivoting: intended for diagonally dominant matrices.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    assert_eq!(rhs.len(), n);
    assert!(lower.len() + 1 == n && upper.len() + 1 == n, "off-diagonals must have length n - 1");
    if n == 0 {
        return;
    }
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        c[i] = upper[i - 1] / beta;
        beta = diag[i] - lower[i - 1] * c[i];
        rhs[i] = (rhs[i] - lower[i - 1] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i + 1] * rhs[i + 1];
    }
}

/// Square band matrix with `kl` sub- and `ku` super-diagonals, with room for
/// the fill-in produced by partial pivoting.
#[derive(Clone, Debug)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SingularMatrix {
    pub column: usize,
}

impl BandMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku, "({i}, {j}) outside band");
        i * self.width + (j + self.kl - i)
    }

    /// Adds `value` to entry `(i, j)`, which must lie in the declared band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        assert!(j + self.kl >= i && j <= i + self.ku, "({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += value;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.kl + self.ku {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|x| *x = 0.0);
    }

    /// `y = A x` using the declared band only.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// Gaussian elimination with partial pivoting; overwrites `self` with the
    /// factors and `rhs` with the solution.
    pub fn solve_in_place(&mut self, rhs: &mut [f64]) -> Result<(), SingularMatrix> {
        let n = self.n;
        assert_eq!(rhs.len(), n);
        let reach = self.kl + self.ku;
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + reach).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(SingularMatrix { column: k });
            }
            if p != k {
                for j in k..=last_col {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.data.swap(a, b);
                }
                rhs.swap(k, p);
            }
            let pivot = self.data[self.idx(k, k)];
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let m = self.data[ik] / pivot;
                if m == 0.0 {
                    continue;
                }
                self.data[ik] = 0.0;
                for j in k + 1..=last_col {
                    let kj = self.data[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.data[ij] -= m * kj;
                }
                rhs[i] -= m * rhs[k];
            }
        }
        for i in (0..n).rev() {
            let last_col = (i + reach).min(n - 1);
            let mut s = rhs[i];
            for j in i + 1..=last_col {
                s -= self.data[self.idx(i, j)] * rhs[j];
            }
            rhs[i] = s / self.data[self.idx(i, i)];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn dense_solve(a: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
        a.clone().lu().solve(&DVector::from_column_slice(b)).unwrap().iter().copied().collect()
    }

    #[test]
    fn thomas_matches_dense_reference() {
        let n = 9;
        let lower: Vec<f64> = (0..n - 1).map(|i| -1.0 - 0.1 * i as f64).collect();
        let upper: Vec<f64> = (0..n - 1).map(|i| -0.5 + 0.05 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| 4.0 + i as f64).collect();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = diag[i];
            if i + 1 < n {
                a[(i + 1, i)] = lower[i];
                a[(i, i + 1)] = upper[i];
            }
        }
        let mut x = b.clone();
        solve_tridiagonal(&lower, &diag, &upper, &mut x);
        for (xi, ri) in x.iter().zip(dense_solve(&a, &b)) {
            assert!((xi - ri).abs() < 1e-14);
        }
    }

    #[test]
    fn band_solver_needs_pivoting() {
        // zero leading diagonal entry forces a row swap
        let mut m = BandMatrix::new(3, 1, 1);
        m.add(0, 0, 0.0);
        m.add(0, 1, 2.0);
        m.add(1, 0, 1.0);
        m.add(1, 1, 1.0);
        m.add(1, 2, 1.0);
        m.add(2, 1, 3.0);
        m.add(2, 2, 1.0);
        let mut rhs = vec![2.0, 3.0, 4.0];
        m.solve_in_place(&mut rhs).unwrap();
        for (x, e) in rhs.iter().zip([1.0, 1.0, 1.0]) {
            assert!((x - e).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_band_is_reported() {
        let mut m = BandMatrix::new(2, 1, 1);
        m.add(0, 0, 1.0);
        m.add(0, 1, 1.0);
        m.add(1, 0, 1.0);
        m.add(1, 1, 1.0);
        assert!(m.solve_in_place(&mut [1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn band_solver_matches_dense(
            n in 4usize..40,
            kl in 0usize..4,
            ku in 0usize..4,
            seed in any::<u64>(),
        ) {
            let mut state = seed | 1;
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let mut band = BandMatrix::new(n, kl, ku);
            let mut dense = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                    let v = next() + if i == j { 0.25 } else { 0.0 };
                    band.add(i, j, v);
                    dense[(i, j)] = v;
                }
            }
            let b: Vec<f64> = (0..n).map(|_| next()).collect();
            prop_assume!(dense.clone().lu().determinant().abs() > 1e-8);
            let reference = dense_solve(&dense, &b);
            let mut x = b.clone();
            band.clone().solve_in_place(&mut x).unwrap();
            let scale = reference.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (xi, ri) in x.iter().zip(&reference) {
                prop_assert!((xi - ri).abs() <= 1e-8 * scale, "{} vs {}", xi, ri);
            }
            let ax = band.mul_vec(&x);
            for (l, r) in ax.iter().zip(&b) {
                prop_assert!((l - r).abs() <= 1e-9 * scale);
            }
        }
    }
}
