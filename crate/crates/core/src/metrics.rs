//! Figures of merit for a reconstructed state: Uhlmann fidelity, purity and
//! two-qubit concurrence.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qmat::{hermitian_eig, sqrt_psd, ComplexMatrix};
use crate::states::{DensityMatrix, WernerParameter};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiguresOfMerit {
    pub fidelity: f64,
    pub purity: f64,
    pub concurrence: f64,
}

impl FiguresOfMerit {
    /// Fidelity of `estimate` against `reference`, plus the estimate's purity
    /// and concurrence.
    pub fn evaluate(estimate: &DensityMatrix, reference: &DensityMatrix) -> Result<Self> {
        Ok(Self {
            fidelity: fidelity(estimate, reference)?,
            purity: purity(estimate),
            concurrence: concurrence(estimate)?,
        })
    }
}

/// `(Tr sqrt(sqrt(sigma) rho sqrt(sigma)))^2`, clamped to `[0, 1]`.
pub fn fidelity(sigma: &DensityMatrix, rho: &DensityMatrix) -> Result<f64> {
    if sigma.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: sigma.dim(),
            found: rho.dim(),
        });
    }
    let root = sqrt_psd(sigma.matrix())?;
    let inner = hermitize(&(&(&root * rho.matrix()) * &root));
    let eig = hermitian_eig(&inner)?;
    let trace_root: f64 = eig.values.iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok((trace_root * trace_root).clamp(0.0, 1.0))
}

/// `Tr(rho^2)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix()
        .trace_product(rho.matrix())
        .expect("square matrix")
        .re
}

/// Wootters concurrence `max(0, l1 - l2 - l3 - l4)`, the `l_k` being the
/// decreasing square roots of the spectrum of `rho (Y (x) Y) rho* (Y (x) Y)`.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: rho.dim(),
        });
    }
    let yy = sigma_y().kron(&sigma_y());
    let flipped = &(&yy * &rho.matrix().conj()) * &yy;
    // sqrt(rho) rho~ sqrt(rho) is Hermitian with the same spectrum as rho rho~.
    let root = sqrt_psd(rho.matrix())?;
    let product = hermitize(&(&(&root * &flipped) * &root));
    let mut lambdas: Vec<f64> = hermitian_eig(&product)?
        .values
        .into_iter()
        .map(|v| v.max(0.0).sqrt())
        .collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let c = lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3];
    Ok(c.clamp(0.0, 1.0))
}

/// Concurrence of the two-qubit Werner state: `max(0, (3 eta - 1) / 2)`.
pub fn concurrence_werner_theory(eta: WernerParameter) -> f64 {
    ((3.0 * eta.value() - 1.0) / 2.0).max(0.0)
}

/// Purity of the two-qubit Werner state: `(1 + 3 eta^2) / 4`.
pub fn purity_werner_theory(eta: WernerParameter) -> f64 {
    (1.0 + 3.0 * eta.value().powi(2)) / 4.0
}

fn sigma_y() -> ComplexMatrix {
    let z = Complex64::new(0.0, 0.0);
    ComplexMatrix::from_vec(
        2,
        vec![z, Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), z],
    )
    .expect("2x2")
}

/// Removes rounding asymmetry from products that are Hermitian in exact arithmetic.
fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + &m.adjoint()).scale_real(0.5)
}
