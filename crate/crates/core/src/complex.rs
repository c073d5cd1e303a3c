//! Complex vectors, Hermitian matrices, and their real symmetric embedding.
//!
//! Complex scalars are plain `(re, im)` pairs of `f64` (no platform complex
//! intrinsics), so results are bit-reproducible across toolchains. A Hermitian
//! `H` embeds as the symmetric matrix
//!
//! ```text
//!   [ Re H  -Im H ]
//!   [ Im H   Re H ]
//! ```
//!
//! which is PSD exactly when `H` is, doubles every eigenvalue's multiplicity,
//! and doubles traces. Eigendecompositions run cyclic Jacobi on the embedding
//! and fold the doubled pairs back down.

use num_complex::Complex64;

use crate::realsym::{sym_eig, RealMat};

/// Relative tolerance for the Hermitian-input check on construction.
pub const HERM_INPUT_TOL: f64 = 1e-12;
/// Reconstruction bound for eigendecompositions, relative to `1 + ||H||_F`.
pub const EIG_RECONSTRUCT_TOL: f64 = 1e-9;
/// Orthonormality bound for eigenvector matrices.
pub const EIG_UNITARY_TOL: f64 = 1e-10;

/// Column vector over the complex field.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector {
    data: Vec<Complex64>,
}

impl ComplexVector {
    pub fn new(data: Vec<Complex64>) -> Self {
        ComplexVector { data }
    }

    pub fn zeros(n: usize) -> Self {
        ComplexVector {
            data: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn from_real(xs: &[f64]) -> Self {
        ComplexVector {
            data: xs.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn entries_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Inner product `self^H other` (conjugate-linear in `self`).
    pub fn inner(&self, other: &ComplexVector) -> Complex64 {
        assert_eq!(self.dim(), other.dim());
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, s: Complex64) -> ComplexVector {
        ComplexVector {
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &ComplexVector) -> ComplexVector {
        assert_eq!(self.dim(), other.dim());
        ComplexVector {
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &ComplexVector) -> ComplexVector {
        assert_eq!(self.dim(), other.dim());
        ComplexVector {
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Outer product `self * self^H` as a Hermitian matrix.
    pub fn outer(&self) -> HermMatrix {
        let n = self.dim();
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = self.data[i] * self.data[j].conj();
            }
        }
        HermMatrix::new(n, data)
    }
}

/// Dense row-major complex matrix, not necessarily square.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_data(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        CMat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn adjoint(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matmul");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &ComplexVector) -> ComplexVector {
        assert_eq!(self.cols, x.dim());
        let mut out = ComplexVector::zeros(self.rows);
        for i in 0..self.rows {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..self.cols {
                s += self.get(i, j) * x.entries()[j];
            }
            out.entries_mut()[i] = s;
        }
        out
    }
}

/// Hermitian matrix; construction averages `(H + H^H)/2` so the stored data is
/// Hermitian exactly. In debug and test builds the input is checked against the
/// type's symmetry tolerance before averaging.
#[derive(Debug, Clone, PartialEq)]
pub struct HermMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl HermMatrix {
    pub fn new(n: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), n * n, "bad Hermitian data length");
        #[cfg(any(debug_assertions, test))]
        {
            let max_abs = data.iter().fold(0.0f64, |m, z| m.max(z.norm()));
            let tol = HERM_INPUT_TOL * (1.0 + max_abs);
            for i in 0..n {
                for j in 0..n {
                    let d = (data[i * n + j] - data[j * n + i].conj()).norm();
                    debug_assert!(
                        d <= tol,
                        "input not Hermitian at ({i},{j}): asymmetry {d:.3e} > {tol:.3e}"
                    );
                }
            }
        }
        let mut h = data;
        for i in 0..n {
            for j in 0..=i {
                let avg = 0.5 * (h[i * n + j] + h[j * n + i].conj());
                h[i * n + j] = avg;
                h[j * n + i] = avg.conj();
            }
            let d = h[i * n + i];
            h[i * n + i] = Complex64::new(d.re, 0.0);
        }
        HermMatrix { n, data: h }
    }

    pub fn zeros(n: usize) -> Self {
        HermMatrix {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut h = HermMatrix::zeros(n);
        for i in 0..n {
            h.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        h
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut h = HermMatrix::zeros(n);
        for (i, &d) in diag.iter().enumerate() {
            h.data[i * n + i] = Complex64::new(d, 0.0);
        }
        h
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    pub fn as_cmat(&self) -> CMat {
        CMat::from_data(self.n, self.n, self.data.clone())
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i].re).sum()
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }

    /// Real inner product `Re tr(A B)`; both arguments Hermitian makes the
    /// trace real already.
    pub fn inner(&self, other: &HermMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                // tr(AB) = sum_ij A[i,j] B[j,i]
                let p = self.data[i * n + j] * other.data[j * n + i];
                s += p.re;
            }
        }
        s
    }

    pub fn add(&self, other: &HermMatrix) -> HermMatrix {
        assert_eq!(self.n, other.n);
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a + b)
            .collect();
        HermMatrix { n: self.n, data }
    }

    pub fn sub(&self, other: &HermMatrix) -> HermMatrix {
        assert_eq!(self.n, other.n);
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a - b)
            .collect();
        HermMatrix { n: self.n, data }
    }

    pub fn scale(&self, s: f64) -> HermMatrix {
        HermMatrix {
            n: self.n,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// Congruence `T self T^H` for a rectangular transfer `T` (rows x n).
    pub fn congruence(&self, t: &CMat) -> HermMatrix {
        assert_eq!(t.cols(), self.n);
        let tm = t.matmul(&self.as_cmat()).matmul(&t.adjoint());
        HermMatrix::new(t.rows(), tm.data)
    }

    pub fn quad_form(&self, x: &ComplexVector) -> f64 {
        assert_eq!(x.dim(), self.n);
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..self.n {
            for j in 0..self.n {
                s += x.entries()[i].conj() * self.data[i * self.n + j] * x.entries()[j];
            }
        }
        s.re
    }

    pub fn matvec(&self, x: &ComplexVector) -> ComplexVector {
        self.as_cmat().matvec(x)
    }

    pub fn min_eig(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        herm_eig(self).eigenvalues[0]
    }
}

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and a
/// unitary matrix of eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct EigDecomp {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
}

impl EigDecomp {
    pub fn eigenvector(&self, k: usize) -> ComplexVector {
        let n = self.eigenvectors.rows();
        let mut v = ComplexVector::zeros(n);
        for i in 0..n {
            v.entries_mut()[i] = self.eigenvectors.get(i, k);
        }
        v
    }
}

/// Real symmetric embedding of a Hermitian matrix (dimension doubles).
pub fn real_embed(h: &HermMatrix) -> RealMat {
    let n = h.dim();
    let mut m = RealMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h.get(i, j);
            m[(i, j)] = z.re;
            m[(i + n, j + n)] = z.re;
            m[(i, j + n)] = -z.im;
            m[(i + n, j)] = z.im;
        }
    }
    m
}

/// Inverse of `real_embed` for symmetric matrices that need not carry the
/// exact embedding structure: averages over the structure-preserving rotation,
/// so the result is Hermitian exactly and PSD whenever the input is.
pub fn herm_from_embedding(m: &RealMat) -> HermMatrix {
    assert_eq!(m.rows(), m.cols());
    assert_eq!(m.rows() % 2, 0, "embedding has even dimension");
    let n = m.rows() / 2;
    let mut data = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let re = 0.5 * (m[(i, j)] + m[(i + n, j + n)]);
            let im = 0.5 * (m[(i + n, j)] - m[(i, j + n)]);
            data[i * n + j] = Complex64::new(re, im);
        }
    }
    HermMatrix::new(n, data)
}

/// Eigendecomposition via cyclic Jacobi on the real embedding. The embedding
/// doubles each eigenvalue; the doubled spectrum is folded back by walking the
/// sorted real eigenvectors and keeping those that open new complex directions.
pub fn herm_eig(h: &HermMatrix) -> EigDecomp {
    let n = h.dim();
    if n == 0 {
        return EigDecomp {
            eigenvalues: vec![],
            eigenvectors: CMat::zeros(0, 0),
        };
    }
    let emb = real_embed(h);
    let se = sym_eig(&emb);
    let mut eigenvalues = Vec::with_capacity(n);
    let mut kept: Vec<ComplexVector> = Vec::with_capacity(n);
    for k in 0..2 * n {
        if kept.len() == n {
            break;
        }
        // complex candidate from the embedded eigenvector [u; v] -> u + i v
        let mut z = ComplexVector::zeros(n);
        for i in 0..n {
            z.entries_mut()[i] = Complex64::new(se.vectors[(i, k)], se.vectors[(i + n, k)]);
        }
        // project out directions already kept; the duplicated partner of a
        // kept vector projects to ~0 and is skipped
        for w in &kept {
            let c = w.inner(&z);
            z = z.sub(&w.scale(c));
        }
        let nrm = z.norm();
        if nrm > 1e-3 {
            kept.push(z.scale(Complex64::new(1.0 / nrm, 0.0)));
            eigenvalues.push(se.values[k]);
        }
    }
    assert_eq!(
        kept.len(),
        n,
        "embedding produced fewer than {n} independent eigenvectors"
    );
    let mut eigenvectors = CMat::zeros(n, n);
    for (k, v) in kept.iter().enumerate() {
        for i in 0..n {
            eigenvectors.set(i, k, v.entries()[i]);
        }
    }
    EigDecomp {
        eigenvalues,
        eigenvectors,
    }
}

/// Hermitian coefficient basis of dimension `d`, in a fixed deterministic
/// order: for each `p <= q`, the diagonal unit, then the real and imaginary
/// off-diagonal elements. Pairing `<B, M>` (real inner product) against the
/// basis reads off `M[p,p]`, `Re M[p,q]`, `Im M[p,q]` respectively.
pub fn herm_basis(d: usize) -> Vec<HermMatrix> {
    let mut out = Vec::with_capacity(d * d);
    for p in 0..d {
        for q in p..d {
            if p == q {
                let mut h = HermMatrix::zeros(d);
                h.data[p * d + p] = Complex64::new(1.0, 0.0);
                out.push(h);
            } else {
                let mut re = HermMatrix::zeros(d);
                re.data[p * d + q] = Complex64::new(0.5, 0.0);
                re.data[q * d + p] = Complex64::new(0.5, 0.0);
                out.push(re);
                let mut im = HermMatrix::zeros(d);
                im.data[p * d + q] = Complex64::new(0.0, 0.5);
                im.data[q * d + p] = Complex64::new(0.0, -0.5);
                out.push(im);
            }
        }
    }
    out
}

/// Reassembles a Hermitian multiplier from the per-basis-row duals produced by
/// constraints generated with [`herm_basis`].
pub fn herm_from_basis_duals(d: usize, duals: &[f64]) -> HermMatrix {
    assert_eq!(duals.len(), d * d);
    let mut data = vec![Complex64::new(0.0, 0.0); d * d];
    let mut idx = 0;
    for p in 0..d {
        for q in p..d {
            if p == q {
                data[p * d + p] = Complex64::new(duals[idx], 0.0);
                idx += 1;
            } else {
                let re = 0.5 * duals[idx];
                let im = 0.5 * duals[idx + 1];
                idx += 2;
                data[p * d + q] = Complex64::new(re, im);
                data[q * d + p] = Complex64::new(re, -im);
            }
        }
    }
    HermMatrix::new(d, data)
}
