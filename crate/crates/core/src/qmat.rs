//! Dense complex matrices for the handful of dimensions the pipeline needs
//! (2, 4 and the 16x16 probability map), with a cyclic Jacobi solver for
//! Hermitian eigenproblems and the PSD square root built on it.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Asymmetry allowed before a matrix is rejected as non-Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues in `[-PSD_CLAMP, 0)` are treated as zero by [`sqrt_psd`].
pub const PSD_CLAMP: f64 = 1e-9;

const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries. Fails if the entry count is not
    /// `dim * dim` or an entry is not finite.
    pub fn from_vec(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if let Some(bad) = data.iter().find(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::ParameterOutOfRange {
                name: "matrix entry",
                value: if bad.re.is_finite() { bad.im } else { bad.re },
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// `|ket><bra|`.
    pub fn outer(ket: &[Complex64], bra: &[Complex64]) -> Result<Self> {
        if ket.len() != bra.len() {
            return Err(Error::DimensionMismatch {
                expected: ket.len(),
                found: bra.len(),
            });
        }
        let dim = ket.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = ket[i] * bra[j].conj();
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks(self.dim)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    /// Elementwise complex conjugate in the standard basis.
    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        self.adjoint().conj()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Result<Complex64> {
        self.check_dim(other)?;
        let n = self.dim;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.data[i * n + j] * other.data[j * n + i];
            }
        }
        Ok(acc)
    }

    /// Kronecker product; entry `(p*db + q, r*db + s)` is `a[p][r] * b[q][s]`.
    pub fn kron(&self, other: &Self) -> Self {
        let (da, db) = (self.dim, other.dim);
        let n = da * db;
        let mut out = Self::zeros(n);
        for p in 0..da {
            for r in 0..da {
                let a = self.data[p * da + r];
                for q in 0..db {
                    for s in 0..db {
                        out.data[(p * db + q) * n + (r * db + s)] = a * other.data[q * db + s];
                    }
                }
            }
        }
        out
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    /// Largest elementwise modulus of `self - other`; infinite when the
    /// dimensions differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |a - a^dagger|` over all entries.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        dev
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Applies the matrix to a column vector.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok(self
            .rows()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Panics on dimension mismatch; use [`ComplexMatrix::matmul`] for a checked product.
impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix dimensions must agree")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions must agree");
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions must agree");
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for row in self.rows() {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Spectrum of a Hermitian matrix: ascending eigenvalues and the unitary whose
/// columns are the matching eigenvectors.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V diag(f(lambda)) V^dagger`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let mut out = ComplexMatrix::zeros(n);
        for (k, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_values(|x| x)
    }

    /// Eigenvector `k` as a column.
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        (0..self.values.len())
            .map(|i| self.vectors[(i, k)])
            .collect()
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEigen> {
    let deviation = a.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let n = a.dim();
    let mut m = a.clone();
    // Symmetrize so the rotations act on an exactly Hermitian matrix.
    for i in 0..n {
        m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let tol = JACOBI_TOL * a.frobenius_norm().max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off = max_off_diagonal(&m);
        if off < tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[(x, x)].re.total_cmp(&m[(y, y)].re));
    let values = order.iter().map(|&k| m[(k, k)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n);
    for (col, &k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, col)] = v[(i, k)];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

fn max_off_diagonal(m: &ComplexMatrix) -> f64 {
    let n = m.dim();
    let mut off = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            off = off.max(m[(i, j)].norm());
        }
    }
    off
}

/// One Jacobi step annihilating `m[p][q]`. The rotation is `G = D R` where
/// `D = diag(1, e^{-i phi})` makes the 2x2 block real and `R` is the classic
/// real symmetric rotation; `m <- G^dagger m G`, `v <- v G`.
fn rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let phase = apq / mag;
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let gpp = Complex64::new(c, 0.0);
    let gpq = Complex64::new(s, 0.0);
    let gqp = -phase.conj() * s;
    let gqq = phase.conj() * c;

    let n = m.dim();
    for k in 0..n {
        let (akp, akq) = (m[(k, p)], m[(k, q)]);
        m[(k, p)] = akp * gpp + akq * gqp;
        m[(k, q)] = akp * gpq + akq * gqq;
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vkp * gpp + vkq * gqp;
        v[(k, q)] = vkp * gpq + vkq * gqq;
    }
    for k in 0..n {
        let (apk, aqk) = (m[(p, k)], m[(q, k)]);
        m[(p, k)] = gpp.conj() * apk + gqp.conj() * aqk;
        m[(q, k)] = gpq.conj() * apk + gqq.conj() * aqk;
    }
    m[(p, p)] = Complex64::new(app - t * mag, 0.0);
    m[(q, q)] = Complex64::new(aqq + t * mag, 0.0);
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
}

/// Principal square root of a Hermitian PSD matrix.
pub fn sqrt_psd(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(a)?;
    let min = eig.values.first().copied().unwrap_or(0.0);
    if min < -PSD_CLAMP {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
        });
    }
    Ok(eig.map_values(|x| x.max(0.0).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(dim: usize, entries: &[(f64, f64)]) -> ComplexMatrix {
        ComplexMatrix::from_vec(dim, entries.iter().map(|&(r, i)| c(r, i)).collect()).unwrap()
    }

    fn hermitian_from(g: &ComplexMatrix) -> ComplexMatrix {
        g + &g.adjoint()
    }

    /// Naive triple-loop product for checking `kron` and `trace`.
    fn naive_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
        let n = a.dim();
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out[(i, j)] += a[(i, k)] * b[(k, j)];
                }
            }
        }
        out
    }

    fn singlet_projector() -> ComplexMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = [c(0.0, 0.0), c(h, 0.0), c(-h, 0.0), c(0.0, 0.0)];
        ComplexMatrix::outer(&psi, &psi).unwrap()
    }

    #[test]
    fn kron_identity() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(i2.kron(&i2), ComplexMatrix::identity(4));
    }

    #[test]
    fn kron_basis_projectors() {
        let p0 = ComplexMatrix::from_real_diagonal(&[1.0, 0.0]);
        let p1 = ComplexMatrix::from_real_diagonal(&[0.0, 1.0]);
        let expected = ComplexMatrix::from_real_diagonal(&[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(p0.kron(&p1), expected);
    }

    #[test]
    fn kron_index_layout() {
        let a = random_matrix(2, &[(1.0, 0.0), (2.0, 1.0), (3.0, -1.0), (4.0, 0.5)]);
        let b = random_matrix(2, &[(0.5, 0.0), (-1.0, 2.0), (0.0, 1.0), (2.0, 0.0)]);
        let k = a.kron(&b);
        for p in 0..2 {
            for q in 0..2 {
                for r in 0..2 {
                    for s in 0..2 {
                        assert_eq!(k[(p * 2 + q, r * 2 + s)], a[(p, r)] * b[(q, s)]);
                    }
                }
            }
        }
    }

    #[test]
    fn eig_diagonal() {
        let eig = hermitian_eig(&ComplexMatrix::from_real_diagonal(&[3.0, 1.0, 4.0, 2.0])).unwrap();
        assert_eq!(eig.values, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn eig_pauli_x() {
        let x = random_matrix(2, &[(0.0, 0.0), (1.0, 0.0), (1.0, 0.0), (0.0, 0.0)]);
        let eig = hermitian_eig(&x).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
        assert!(eig.reconstruct().max_abs_diff(&x) < 1e-12);
    }

    #[test]
    fn eig_pauli_y_complex_entries() {
        let y = random_matrix(2, &[(0.0, 0.0), (0.0, -1.0), (0.0, 1.0), (0.0, 0.0)]);
        let eig = hermitian_eig(&y).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
        for k in 0..2 {
            let v = eig.vector(k);
            let yv = y.apply(&v).unwrap();
            for i in 0..2 {
                assert!((yv[i] - v[i] * eig.values[k]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn eig_werner_spectrum() {
        // Characteristic polynomial of eta*P + (1-eta)/4*I: the singlet
        // direction is shifted by eta, the orthogonal complement is not.
        for &eta in &[0.0, 0.2, 0.5, 0.9, 1.0] {
            let rho = &singlet_projector().scale_real(eta)
                + &ComplexMatrix::identity(4).scale_real((1.0 - eta) / 4.0);
            let eig = hermitian_eig(&rho).unwrap();
            let low = (1.0 - eta) / 4.0;
            let high = (1.0 + 3.0 * eta) / 4.0;
            for k in 0..3 {
                assert!(
                    (eig.values[k] - low).abs() < 1e-12,
                    "{eta}: {:?}",
                    eig.values
                );
            }
            assert!((eig.values[3] - high).abs() < 1e-12);
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let a = random_matrix(2, &[(1.0, 0.0), (1.0, 0.0), (0.0, 0.0), (1.0, 0.0)]);
        assert!(matches!(hermitian_eig(&a), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn sqrt_examples() {
        let i4 = ComplexMatrix::identity(4);
        assert!(sqrt_psd(&i4).unwrap().max_abs_diff(&i4) < 1e-14);

        let d = ComplexMatrix::from_real_diagonal(&[4.0, 9.0, 0.0, 1.0]);
        let expected = ComplexMatrix::from_real_diagonal(&[2.0, 3.0, 0.0, 1.0]);
        assert!(sqrt_psd(&d).unwrap().max_abs_diff(&expected) < 1e-14);

        let p = singlet_projector();
        assert!(sqrt_psd(&p).unwrap().max_abs_diff(&p) < 1e-12);
    }

    #[test]
    fn sqrt_clamps_and_rejects() {
        let tiny = ComplexMatrix::from_real_diagonal(&[1.0, -5e-10]);
        let r = sqrt_psd(&tiny).unwrap();
        assert_eq!(r[(1, 1)], c(0.0, 0.0));

        let neg = ComplexMatrix::from_real_diagonal(&[1.0, -1e-6]);
        assert!(matches!(sqrt_psd(&neg), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn basic_identities() {
        let a = random_matrix(2, &[(1.0, 2.0), (0.3, -0.1), (2.0, 0.0), (-1.0, 1.0)]);
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(i2.matmul(&a).unwrap(), a);
        assert_eq!(a.adjoint().adjoint(), a);
        let t = singlet_projector().trace();
        assert!((t.re - 1.0).abs() < 1e-15 && t.im.abs() < 1e-12);
    }

    #[test]
    fn matmul_dimension_mismatch() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::identity(4);
        assert!(matches!(a.matmul(&b), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(
            a.trace_product(&b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn from_vec_validates() {
        assert!(ComplexMatrix::from_vec(2, vec![c(0.0, 0.0); 3]).is_err());
        assert!(ComplexMatrix::from_vec(1, vec![c(f64::NAN, 0.0)]).is_err());
    }

    fn entries(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
    }

    proptest! {
        #[test]
        fn kron_trace_factorizes(ea in entries(4), eb in entries(4)) {
            let a = hermitian_from(&random_matrix(2, &ea));
            let b = hermitian_from(&random_matrix(2, &eb));
            let k = a.kron(&b);
            let expected = a.trace() * b.trace();
            prop_assert!((k.trace() - expected).norm() < 1e-12);
        }

        #[test]
        fn kron_associative(ea in entries(4), eb in entries(4), ec in entries(4)) {
            let a = random_matrix(2, &ea);
            let b = random_matrix(2, &eb);
            let c = random_matrix(2, &ec);
            let left = a.kron(&b).kron(&c);
            let right = a.kron(&b.kron(&c));
            prop_assert!(left.max_abs_diff(&right) < 1e-12);
        }

        #[test]
        fn kron_mixed_product(ea in entries(4), eb in entries(4), ec in entries(4), ed in entries(4)) {
            // (A⊗B)(C⊗D) = AC⊗BD, with the product taken by the naive loop.
            let (a, b) = (random_matrix(2, &ea), random_matrix(2, &eb));
            let (c, d) = (random_matrix(2, &ec), random_matrix(2, &ed));
            let lhs = naive_product(&a.kron(&b), &c.kron(&d));
            let rhs = naive_product(&a, &c).kron(&naive_product(&b, &d));
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }

        #[test]
        fn eig_reconstructs(e in entries(16)) {
            let a = hermitian_from(&random_matrix(4, &e));
            let eig = hermitian_eig(&a).unwrap();
            prop_assert!(eig.reconstruct().max_abs_diff(&a) < 1e-9);
            let sum: f64 = eig.values.iter().sum();
            prop_assert!((sum - a.trace().re).abs() < 1e-10);
            prop_assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
            let vv = eig.vectors.adjoint().matmul(&eig.vectors).unwrap();
            prop_assert!(vv.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-10);
            for k in 0..4 {
                let v = eig.vector(k);
                let av = a.apply(&v).unwrap();
                for i in 0..4 {
                    prop_assert!((av[i] - v[i] * eig.values[k]).norm() < 1e-10);
                }
            }
        }

        #[test]
        fn sqrt_squares_back(e in entries(16)) {
            let g = random_matrix(4, &e);
            let a = g.adjoint().matmul(&g).unwrap();
            let r = sqrt_psd(&a).unwrap();
            prop_assert!(r.hermitian_deviation() < 1e-10);
            prop_assert!(hermitian_eig(&r).unwrap().values[0] > -1e-9);
            prop_assert!(r.matmul(&r).unwrap().max_abs_diff(&a) < 1e-8);
        }
    }
}
