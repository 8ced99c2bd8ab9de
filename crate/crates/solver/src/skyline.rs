//! Profile-stored symmetric linear solver. The tangent systems here are
//! symmetric positive definite once the supports remove the rigid modes,
//! and mesh connectivity gives narrow, static column profiles, so an
//! in-place skyline LDL^T needs no reordering or pivoting and is fully
//! deterministic.

use crate::SolveError;
use nalgebra::DVector;

/// Upper-triangle skyline storage: column `j` holds rows
/// `first[j]..=j` contiguously.
#[derive(Debug, Clone)]
pub struct SkylineMatrix {
    n: usize,
    first: Vec<usize>,
    col_ptr: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineMatrix {
    /// Empty matrix with the profile implied by coupled index groups:
    /// within a group every pair of indices may be nonzero.
    pub fn from_couplings(n: usize, groups: &[Vec<usize>]) -> Self {
        let mut first: Vec<usize> = (0..n).collect();
        for group in groups {
            if let Some(&lo) = group.iter().min() {
                for &j in group {
                    first[j] = first[j].min(lo);
                }
            }
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        col_ptr.push(0);
        for j in 0..n {
            col_ptr.push(col_ptr[j] + (j - first[j] + 1));
        }
        let data = vec![0.0; col_ptr[n]];
        Self { n, first, col_ptr, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored entries (profile size), a determinism-friendly cost measure.
    pub fn profile_len(&self) -> usize {
        self.data.len()
    }

    pub fn reset(&mut self) {
        self.data.fill(0.0);
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i >= self.first[j] && i <= j, "entry ({i},{j}) outside profile");
        self.col_ptr[j] + (i - self.first[j])
    }

    /// Accumulate into the symmetric matrix; only the upper triangle is
    /// stored, so (i, j) and (j, i) land on the same entry.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        let k = self.idx(r, c);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        if r < self.first[c] {
            0.0
        } else {
            self.data[self.idx(r, c)]
        }
    }

    /// In-place LDL^T factorization. After return the storage holds
    /// D on the diagonal and D L^T off it. Fails on a non-positive pivot,
    /// which for these systems means missing constraints or a broken
    /// tangent rather than an admissible indefinite system.
    pub fn factorize(&mut self) -> Result<(), SolveError> {
        for j in 0..self.n {
            let fj = self.first[j];
            for i in fj..=j {
                let k0 = self.first[i].max(fj);
                let mut s = self.data[self.idx(i, j)];
                for k in k0..i {
                    let d_k = self.data[self.idx(k, k)];
                    s -= self.data[self.idx(k, i)] * self.data[self.idx(k, j)] / d_k;
                }
                let at = self.idx(i, j);
                self.data[at] = s;
            }
            let d = self.data[self.idx(j, j)];
            if !(d > 0.0) || !d.is_finite() {
                return Err(SolveError::SingularTangent { dof: j, pivot: d });
            }
        }
        Ok(())
    }

    /// Solve with a previously factorized matrix.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        assert!(b.len() == self.n, "right-hand side length mismatch");
        let mut x = b.clone();
        // Forward: L z = b, L_jk = u_kj / d_k for stored rows k of column j.
        for j in 0..self.n {
            let mut s = x[j];
            for k in self.first[j]..j {
                let d_k = self.data[self.idx(k, k)];
                s -= self.data[self.idx(k, j)] / d_k * x[k];
            }
            x[j] = s;
        }
        // Diagonal scale.
        for j in 0..self.n {
            x[j] /= self.data[self.idx(j, j)];
        }
        // Backward: L^T x = y, consuming columns right to left.
        for j in (0..self.n).rev() {
            let xj = x[j];
            for k in self.first[j]..j {
                let d_k = self.data[self.idx(k, k)];
                x[k] -= self.data[self.idx(k, j)] / d_k * xj;
            }
        }
        x
    }
}
