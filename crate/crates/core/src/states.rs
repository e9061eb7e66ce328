//! Pure and mixed states used by the pipeline: the singlet, the two-qubit
//! Werner family and the flip-operator form valid for any local dimension.
//!
//! Basis order is `|00>, |01>, |10>, |11>` with the first qubit as the left
//! tensor factor.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qmat::{hermitian_eig, ComplexMatrix, PSD_CLAMP};

/// Default tolerance used when constructors validate their output.
pub const STATE_TOL: f64 = 1e-10;

/// Normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureStateVector {
    amplitudes: Vec<Complex64>,
}

impl PureStateVector {
    /// Fails unless the Euclidean norm is one within `1e-12`.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = norm(&amplitudes);
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::ParameterOutOfRange {
                name: "state norm",
                value: norm,
            });
        }
        Ok(Self { amplitudes })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|psi><psi|`.
    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
            .expect("ket and bra share a dimension")
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix(self.projector())
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian, unit-trace, positive semi-definite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    /// `I_d / d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    /// Wraps a matrix that is a density matrix by construction.
    pub(crate) fn from_trusted(m: ComplexMatrix) -> Self {
        Self(m)
    }
}

/// Singlet weight of a two-qubit Werner state, restricted to `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct WernerParameter(f64);

impl WernerParameter {
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::ParameterOutOfRange {
                name: "eta",
                value: eta,
            });
        }
        Ok(Self(eta))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Checks the density-matrix invariants in order: Hermiticity, unit trace,
/// then positivity (eigenvalues down to `-max(tol, 1e-9)` are accepted).
pub fn validate_density(m: &ComplexMatrix, tol: f64) -> Result<DensityMatrix> {
    let deviation = m.hermitian_deviation();
    if deviation > tol {
        return Err(Error::NotHermitian { deviation });
    }
    let trace = m.trace();
    if (trace.re - 1.0).abs() > tol || trace.im.abs() > tol {
        return Err(Error::TraceNotOne { trace: trace.re });
    }
    let symmetric = (m + &m.adjoint()).scale_real(0.5);
    let min_eigenvalue = hermitian_eig(&symmetric)?.values[0];
    if min_eigenvalue < -tol.max(PSD_CLAMP) {
        return Err(Error::NotPsd { min_eigenvalue });
    }
    Ok(DensityMatrix(m.clone()))
}

/// `(|01> - |10>) / sqrt(2)`.
pub fn bell_singlet() -> PureStateVector {
    let zero = Complex64::new(0.0, 0.0);
    PureStateVector {
        amplitudes: vec![
            zero,
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(-FRAC_1_SQRT_2, 0.0),
            zero,
        ],
    }
}

/// `eta |Psi-><Psi-| + (1 - eta)/4 I_4`.
pub fn werner_two_qubit(eta: WernerParameter) -> DensityMatrix {
    let eta = eta.value();
    let singlet = bell_singlet().projector().scale_real(eta);
    let noise = ComplexMatrix::identity(4).scale_real((1.0 - eta) / 4.0);
    DensityMatrix(&singlet + &noise)
}

/// Swap operator on `C^d (x) C^d`.
pub fn flip_operator(d: usize) -> Result<ComplexMatrix> {
    if d < 2 {
        return Err(Error::ParameterOutOfRange {
            name: "local dimension",
            value: d as f64,
        });
    }
    let mut f = ComplexMatrix::zeros(d * d);
    for i in 0..d {
        for j in 0..d {
            f[(i * d + j, j * d + i)] = Complex64::new(1.0, 0.0);
        }
    }
    Ok(f)
}

/// `coef F + zeta I_{d^2}` with `zeta` fixed by unit trace. Values of `coef`
/// outside the physical range yield `NotPsd`.
pub fn werner_general(coef: f64, d: usize) -> Result<DensityMatrix> {
    let flip = flip_operator(d)?;
    let dim = d * d;
    let zeta = (1.0 - coef * d as f64) / dim as f64;
    let m = &flip.scale_real(coef) + &ComplexMatrix::identity(dim).scale_real(zeta);
    validate_density(&m, STATE_TOL)
}
