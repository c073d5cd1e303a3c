//! Dense real matrices with the handful of factorizations the solver needs.
//!
//! Everything here targets small matrices (a few dozen rows at most), so the
//! implementations favour robustness and determinism over speed: cyclic Jacobi
//! for symmetric eigenvalues, unblocked Cholesky, plain triangular solves.

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RealMat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RealMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut m = RealMat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> RealMat {
        let mut t = RealMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &RealMat) -> RealMat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matmul");
        let mut out = RealMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add_scaled(&mut self, other: &RealMat, s: f64) {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += s * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in self.data.iter_mut() {
            *a *= s;
        }
    }

    /// Frobenius inner product `tr(A^T B)`.
    /// Matrix-vector product `self * v`.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.cols, v.len());
        if self.cols == 0 {
            return vec![0.0; self.rows];
        }
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn dot(&self, other: &RealMat) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Trace product `tr(A B)` (sums `A[i,j] * B[j,i]`); neither factor needs
    /// to be symmetric.
    pub fn tr_product(&self, other: &RealMat) -> f64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut s = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                s += self[(i, j)] * other[(j, i)];
            }
        }
        s
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn trace(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Replaces the matrix by its symmetric part `(A + A^T)/2`.
    pub fn symmetrize(&mut self) {
        assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = v;
                self[(j, i)] = v;
            }
        }
    }
}

impl std::ops::Index<(usize, usize)> for RealMat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RealMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: RealMat,
}

impl Cholesky {
    /// Factors `A = L L^T`. Fails (returns `None`) when a pivot is not
    /// positive, which the interior-point loop treats as loss of definiteness.
    pub fn new(a: &RealMat) -> Option<Cholesky> {
        assert_eq!(a.rows(), a.cols());
        let n = a.rows();
        let mut l = RealMat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return None;
                    }
                    l[(i, i)] = s.sqrt();
                } else {
                    l[(i, j)] = s / l[(j, j)];
                }
            }
        }
        Some(Cholesky { l })
    }

    pub fn factor(&self) -> &RealMat {
        &self.l
    }

    /// Solves `A x = b` in place.
    pub fn solve_vec(&self, b: &mut [f64]) {
        let n = self.l.rows();
        assert_eq!(b.len(), n);
        // forward: L z = b
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[(i, k)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
        // backward: L^T x = z
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * b[k];
            }
            b[i] = s / self.l[(i, i)];
        }
    }

    /// Solves `A X = B` column-wise.
    pub fn solve_mat(&self, b: &RealMat) -> RealMat {
        let n = self.l.rows();
        assert_eq!(b.rows(), n);
        let mut out = b.clone();
        let mut col = vec![0.0; n];
        for j in 0..b.cols() {
            for i in 0..n {
                col[i] = out[(i, j)];
            }
            self.solve_vec(&mut col);
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        out
    }

    /// Inverse via two triangular solves.
    pub fn inverse(&self) -> RealMat {
        let n = self.l.rows();
        self.solve_mat(&RealMat::identity(n))
    }

    /// Computes `L^{-1} D L^{-T}` for a symmetric `D`; used in the step-length
    /// computation `max { a : X + a D >= 0 }`.
    pub fn congruence_inv(&self, d: &RealMat) -> RealMat {
        let n = self.l.rows();
        assert_eq!(d.rows(), n);
        assert_eq!(d.cols(), n);
        // W = L^{-1} D: forward-substitute on each column.
        let mut w = d.clone();
        for j in 0..n {
            for i in 0..n {
                let mut s = w[(i, j)];
                for k in 0..i {
                    s -= self.l[(i, k)] * w[(k, j)];
                }
                w[(i, j)] = s / self.l[(i, i)];
            }
        }
        // V = W L^{-T}: forward-substitute on each row (same factor).
        let mut v = w;
        for i in 0..n {
            for j in 0..n {
                let mut s = v[(i, j)];
                for k in 0..j {
                    s -= v[(i, k)] * self.l[(j, k)];
                }
                v[(i, j)] = s / self.l[(j, j)];
            }
        }
        v.symmetrize();
        v
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a
/// symmetric matrix, computed with the cyclic Jacobi method.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: RealMat,
}

/// Cyclic Jacobi on a symmetric matrix. Rotation sweeps stop once every
/// off-diagonal entry is negligible relative to the matrix scale.
pub fn sym_eig(a: &RealMat) -> SymEig {
    assert_eq!(a.rows(), a.cols());
    let n = a.rows();
    let mut m = a.clone();
    m.symmetrize();
    let mut v = RealMat::identity(n);
    if n > 1 {
        let scale = m.max_abs().max(1e-300);
        let tol = 1e-15 * scale;
        for _sweep in 0..64 {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off = off.max(m[(p, q)].abs());
                }
            }
            if off <= tol {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[(p, q)];
                    if apq.abs() <= tol * 1e-2 {
                        continue;
                    }
                    let app = m[(p, p)];
                    let aqq = m[(q, q)];
                    let theta = 0.5 * (aqq - app) / apq;
                    let t = if theta >= 0.0 {
                        1.0 / (theta + (1.0 + theta * theta).sqrt())
                    } else {
                        -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = m[(k, p)];
                        let akq = m[(k, q)];
                        m[(k, p)] = c * akp - s * akq;
                        m[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = m[(p, k)];
                        let aqk = m[(q, k)];
                        m[(p, k)] = c * apk - s * aqk;
                        m[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = RealMat::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, new_col)] = v[(k, old_col)];
        }
    }
    SymEig { values, vectors }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eig(a: &RealMat) -> f64 {
    if a.rows() == 0 {
        return 0.0;
    }
    sym_eig(a).values[0]
}
