//! Symmetric banded storage and a banded Cholesky factorization.
//!
//! The structured strip meshes produced by [`crate::mesh`] have a small,
//! known bandwidth, so a band LLT factorization is both simple and fast
//! enough for every system assembled in this crate.

use crate::error::{Error, Result};

/// Symmetric matrix stored as its lower band.
///
/// Entry (i, j) with `i - bw <= j <= i` lives at `data[i * (bw + 1) + j - i + bw]`.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn new(n: usize, bw: usize) -> Self {
        BandMatrix {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Adds `v` to the (i, j) entry; the mirrored entry is implied.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        assert!(
            r - c <= self.bw,
            "entry ({i}, {j}) outside bandwidth {}",
            self.bw
        );
        let k = self.idx(r, c);
        self.data[k] += v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.bw {
            0.0
        } else {
            self.data[self.idx(r, c)]
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        assert!(r - c <= self.bw);
        let k = self.idx(r, c);
        self.data[k] = v;
    }

    /// y = A x with the full symmetric matrix.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            for j in j0..=i {
                let a = self.data[self.idx(i, j)];
                y[i] += a * x[j];
                if i != j {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// Row/column elimination of Dirichlet dofs, preserving symmetry.
    ///
    /// For each `(dof, value)` pair the right-hand side of unconstrained rows
    /// is corrected by the eliminated column, the row and column are zeroed,
    /// the diagonal is set to one and the rhs entry to the prescribed value.
    pub fn apply_dirichlet(&mut self, rhs: &mut [f64], constraints: &[(usize, f64)]) {
        let mut fixed = vec![false; self.n];
        for &(dof, _) in constraints {
            fixed[dof] = true;
        }
        for &(dof, value) in constraints {
            let j0 = dof.saturating_sub(self.bw);
            let j1 = (dof + self.bw).min(self.n - 1);
            for j in j0..=j1 {
                if j == dof {
                    continue;
                }
                let a = self.get(dof, j);
                if a != 0.0 {
                    if !fixed[j] {
                        rhs[j] -= a * value;
                    }
                    self.set(dof, j, 0.0);
                }
            }
            self.set(dof, dof, 1.0);
            rhs[dof] = value;
        }
    }

    /// In-place banded LLT factorization. Fails on a non-positive pivot.
    pub fn cholesky(mut self) -> Result<BandCholesky> {
        let bw = self.bw;
        for j in 0..self.n {
            let mut d = self.data[self.idx(j, j)];
            let k0 = j.saturating_sub(bw);
            for k in k0..j {
                let l = self.data[self.idx(j, k)];
                d -= l * l;
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::Assembly(format!(
                    "matrix not positive definite (pivot {d:.3e} at row {j})"
                )));
            }
            let d = d.sqrt();
            let jj = self.idx(j, j);
            self.data[jj] = d;
            let i1 = (j + bw).min(self.n - 1);
            for i in (j + 1)..=i1 {
                let mut s = self.data[self.idx(i, j)];
                let k0 = i.saturating_sub(bw).max(j.saturating_sub(bw));
                for k in k0..j {
                    if j - k <= bw && i - k <= bw {
                        s -= self.data[self.idx(i, k)] * self.data[self.idx(j, k)];
                    }
                }
                let ij = self.idx(i, j);
                self.data[ij] = s / d;
            }
        }
        Ok(BandCholesky {
            n: self.n,
            bw,
            data: self.data,
        })
    }
}

/// Lower-triangular band factor from [`BandMatrix::cholesky`].
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandCholesky {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Solves A x = b by forward/backward substitution.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut x = b.to_vec();
        for i in 0..self.n {
            let j0 = i.saturating_sub(self.bw);
            let mut s = x[i];
            for j in j0..i {
                s -= self.data[self.idx(i, j)] * x[j];
            }
            x[i] = s / self.data[self.idx(i, i)];
        }
        for i in (0..self.n).rev() {
            let i1 = (i + self.bw).min(self.n - 1);
            let mut s = x[i];
            for j in (i + 1)..=i1 {
                s -= self.data[self.idx(j, i)] * x[j];
            }
            x[i] = s / self.data[self.idx(i, i)];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        // Gaussian elimination oracle, partial pivoting.
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
        let mut rhs = b.to_vec();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
            m.swap(k, p);
            rhs.swap(k, p);
            for i in (k + 1)..n {
                let f = m[i][k] / m[k][k];
                for j in k..n {
                    m[i][j] -= f * m[k][j];
                }
                rhs[i] -= f * rhs[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for j in (i + 1)..n {
                s -= m[i][j] * x[j];
            }
            x[i] = s / m[i][i];
        }
        x
    }

    #[test]
    fn cholesky_matches_dense_oracle() {
        let n = 12;
        let bw = 3;
        let mut band = BandMatrix::new(n, bw);
        let mut dense = vec![vec![0.0; n]; n];
        // Diagonally dominant SPD band matrix with deterministic entries.
        let mut s = 1u64;
        let mut rng = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        for i in 0..n {
            for j in i.saturating_sub(bw)..i {
                let v = rng() - 0.5;
                band.add(i, j, v);
                dense[i][j] += v;
                dense[j][i] += v;
            }
            let v = 4.0 + rng();
            band.add(i, i, v);
            dense[i][i] += v;
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = band.clone().cholesky().unwrap().solve(&b);
        let x_ref = dense_solve(&dense, &b);
        for (a, b) in x.iter().zip(&x_ref) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        // matvec round trip
        let ax = band.matvec(&x);
        for (a, b) in ax.iter().zip(&b) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn dirichlet_elimination_recovers_prescribed_values() {
        let n = 6;
        let mut a = BandMatrix::new(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        let mut rhs = vec![0.0; n];
        a.apply_dirichlet(&mut rhs, &[(0, 0.0), (n - 1, 1.0)]);
        let x = a.cholesky().unwrap().solve(&rhs);
        assert!((x[0]).abs() < 1e-14);
        assert!((x[n - 1] - 1.0).abs() < 1e-14);
        // Interior of a 1D Laplacian with linear boundary data is linear.
        for (i, xi) in x.iter().enumerate() {
            assert!((xi - i as f64 / (n - 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn non_spd_matrix_is_rejected() {
        let mut a = BandMatrix::new(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, -1.0);
        assert!(a.cholesky().is_err());
    }
}
