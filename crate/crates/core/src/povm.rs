//! Qubit SIC-POVM, its 16-outcome two-qubit product, and Born-rule
//! probabilities.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qmat::{hermitian_eig, ComplexMatrix, HERMITIAN_TOL};
use crate::states::{DensityMatrix, PureStateVector};

/// Tolerance for positivity and completeness of measurement operators.
pub const POVM_TOL: f64 = 1e-10;

/// Outcome `alpha = 4 (i - 1) + (j - 1)` of the two-qubit measurement, where
/// `i` is the SIC element on the first qubit and `j` on the second (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OutcomeIndex(usize);

impl OutcomeIndex {
    pub const COUNT: usize = 16;

    pub fn new(alpha: usize) -> Result<Self> {
        if alpha >= Self::COUNT {
            return Err(Error::ParameterOutOfRange {
                name: "alpha",
                value: alpha as f64,
            });
        }
        Ok(Self(alpha))
    }

    pub fn from_pair(i: usize, j: usize) -> Result<Self> {
        if !(1..=4).contains(&i) || !(1..=4).contains(&j) {
            return Err(Error::ParameterOutOfRange {
                name: "outcome pair",
                value: (if (1..=4).contains(&i) { j } else { i }) as f64,
            });
        }
        Ok(Self(4 * (i - 1) + (j - 1)))
    }

    pub fn alpha(self) -> usize {
        self.0
    }

    /// 1-based `(i, j)`.
    pub fn pair(self) -> (usize, usize) {
        (self.0 / 4 + 1, self.0 % 4 + 1)
    }

    pub fn all() -> impl Iterator<Item = OutcomeIndex> {
        (0..Self::COUNT).map(OutcomeIndex)
    }
}

impl fmt::Display for OutcomeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (i, j) = self.pair();
        write!(f, "({i},{j})")
    }
}

/// Ordered positive operators resolving the identity.
#[derive(Clone, Debug)]
pub struct PovmSet {
    elements: Vec<ComplexMatrix>,
    labels: Vec<String>,
}

impl PovmSet {
    /// Validates positivity of every element and completeness of the set.
    pub fn new(elements: Vec<ComplexMatrix>, labels: Vec<String>) -> Result<Self> {
        if elements.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: elements.len(),
                found: labels.len(),
            });
        }
        let Some(first) = elements.first() else {
            return Err(Error::NotComplete {
                deviation: f64::INFINITY,
            });
        };
        let dim = first.dim();
        let mut sum = ComplexMatrix::zeros(dim);
        for m in &elements {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.dim(),
                });
            }
            let eig = hermitian_eig(m)?;
            if eig.values[0] < -POVM_TOL {
                return Err(Error::NotPsd {
                    min_eigenvalue: eig.values[0],
                });
            }
            sum = &sum + m;
        }
        let deviation = sum.max_abs_diff(&ComplexMatrix::identity(dim));
        if deviation > POVM_TOL {
            return Err(Error::NotComplete { deviation });
        }
        Ok(Self { elements, labels })
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn sum(&self) -> ComplexMatrix {
        self.elements
            .iter()
            .fold(ComplexMatrix::zeros(self.dim()), |acc, m| &acc + m)
    }

    /// Real matrix taking the coordinates of a Hermitian operator in an
    /// orthonormal Hermitian basis to the outcome expectations `Tr(M_k H)`.
    /// Rows index outcomes, columns basis elements.
    pub fn probability_map(&self) -> Vec<Vec<f64>> {
        let basis = hermitian_basis(self.dim());
        self.elements
            .iter()
            .map(|m| {
                basis
                    .iter()
                    .map(|h| m.trace_product(h).expect("same dimension").re)
                    .collect()
            })
            .collect()
    }

    /// Singular values of [`probability_map`](Self::probability_map), ascending.
    pub fn probability_map_singular_values(&self) -> Vec<f64> {
        let map = self.probability_map();
        let cols = map[0].len();
        let mut gram = ComplexMatrix::zeros(cols);
        for a in 0..cols {
            for b in 0..cols {
                let g: f64 = map.iter().map(|row| row[a] * row[b]).sum();
                gram[(a, b)] = Complex64::new(g, 0.0);
            }
        }
        hermitian_eig(&gram)
            .expect("Gram matrix is symmetric")
            .values
            .into_iter()
            .map(|v| v.max(0.0).sqrt())
            .collect()
    }
}

/// Orthonormal (Hilbert-Schmidt) basis of Hermitian `dim x dim` matrices.
fn hermitian_basis(dim: usize) -> Vec<ComplexMatrix> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        let mut e = ComplexMatrix::zeros(dim);
        e[(i, i)] = Complex64::new(1.0, 0.0);
        basis.push(e);
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            let mut sym = ComplexMatrix::zeros(dim);
            sym[(i, j)] = Complex64::new(h, 0.0);
            sym[(j, i)] = Complex64::new(h, 0.0);
            basis.push(sym);
            let mut anti = ComplexMatrix::zeros(dim);
            anti[(i, j)] = Complex64::new(0.0, h);
            anti[(j, i)] = Complex64::new(0.0, -h);
            basis.push(anti);
        }
    }
    basis
}

/// The four qubit vectors with pairwise overlap `|<phi_i|phi_j>|^2 = 1/3`.
pub fn sic_vectors() -> Vec<PureStateVector> {
    let a = Complex64::new(1.0 / 3f64.sqrt(), 0.0);
    let b = (2.0f64 / 3.0).sqrt();
    let mut out = vec![PureStateVector::new(vec![
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
    ])
    .expect("unit vector")];
    for k in 0..3 {
        let phase = Complex64::from_polar(b, 2.0 * PI * k as f64 / 3.0);
        out.push(PureStateVector::new(vec![a, phase]).expect("unit vector"));
    }
    out
}

/// `M_i = |phi_i><phi_i| / 2`.
pub fn sic_povm() -> PovmSet {
    let elements = sic_vectors()
        .iter()
        .map(|v| v.projector().scale_real(0.5))
        .collect();
    let labels = (1..=4).map(|i| i.to_string()).collect();
    PovmSet::new(elements, labels).expect("SIC-POVM is complete")
}

/// `M_alpha = M_i (x) M_j` ordered by [`OutcomeIndex`].
pub fn two_qubit_povm() -> PovmSet {
    let single = sic_povm();
    let mut elements = Vec::with_capacity(OutcomeIndex::COUNT);
    let mut labels = Vec::with_capacity(OutcomeIndex::COUNT);
    for alpha in OutcomeIndex::all() {
        let (i, j) = alpha.pair();
        elements.push(single.elements[i - 1].kron(&single.elements[j - 1]));
        labels.push(alpha.to_string());
    }
    PovmSet::new(elements, labels).expect("product of complete POVMs is complete")
}

/// `p(k) = Tr(M_k rho)`, clamped to `[0, 1]`.
pub fn born_probabilities(povm: &PovmSet, rho: &DensityMatrix) -> Result<Vec<f64>> {
    if povm.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: povm.dim(),
            found: rho.dim(),
        });
    }
    povm.elements
        .iter()
        .map(|m| {
            let p = m.trace_product(rho.matrix())?;
            debug_assert!(p.im.abs() < HERMITIAN_TOL);
            Ok(p.re.clamp(0.0, 1.0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{werner_two_qubit, WernerParameter};
    use proptest::prelude::*;

    fn werner(eta: f64) -> DensityMatrix {
        werner_two_qubit(WernerParameter::new(eta).unwrap())
    }

    #[test]
    fn sic_vector_examples() {
        let v = sic_vectors();
        assert_eq!(v.len(), 4);
        assert_eq!(
            v[0].amplitudes(),
            &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
        );
        for i in 0..4 {
            assert!((v[i].norm() - 1.0).abs() < 1e-12);
            for j in 0..4 {
                if i != j {
                    let overlap = v[i].inner(&v[j]).norm_sqr();
                    assert!((overlap - 1.0 / 3.0).abs() < 1e-12, "{i},{j}: {overlap}");
                }
            }
        }
    }

    #[test]
    fn sic_povm_examples() {
        let povm = sic_povm();
        assert_eq!(povm.len(), 4);
        assert!(povm.sum().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
        for m in povm.elements() {
            assert!((m.trace().re - 0.5).abs() < 1e-12);
            let eig = hermitian_eig(m).unwrap();
            assert!(eig.values[0].abs() < 1e-12);
            assert!((eig.values[1] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn two_qubit_examples() {
        let povm = two_qubit_povm();
        assert_eq!(povm.len(), 16);
        assert!(povm.sum().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
        let first = ComplexMatrix::from_real_diagonal(&[0.25, 0.0, 0.0, 0.0]);
        assert!(povm.elements()[0].max_abs_diff(&first) < 1e-15);
        for m in povm.elements() {
            assert!((m.trace().re - 0.25).abs() < 1e-12);
        }
        assert_eq!(povm.labels()[1], "(1,2)");
    }

    #[test]
    fn outcome_index_layout() {
        for alpha in OutcomeIndex::all() {
            let (i, j) = alpha.pair();
            assert_eq!(OutcomeIndex::from_pair(i, j).unwrap(), alpha);
            assert_eq!(alpha.alpha(), 4 * (i - 1) + (j - 1));
        }
        assert!(OutcomeIndex::new(16).is_err());
        assert!(OutcomeIndex::from_pair(0, 1).is_err());
        assert!(OutcomeIndex::from_pair(1, 5).is_err());
    }

    #[test]
    fn born_on_symmetric_states() {
        let p = born_probabilities(&sic_povm(), &DensityMatrix::maximally_mixed(2)).unwrap();
        assert!(p.iter().all(|x| (x - 0.25).abs() < 1e-12));
        let p = born_probabilities(&two_qubit_povm(), &werner(0.0)).unwrap();
        assert!(p.iter().all(|x| (x - 1.0 / 16.0).abs() < 1e-12));
    }

    #[test]
    fn born_on_singlet() {
        // Tr[(M_i ⊗ M_j) |Psi-><Psi-|] = (1 - |<phi_i|phi_j>|^2) / 8, from
        // the singlet's antisymmetry; zero on the diagonal, 1/12 elsewhere.
        let p = born_probabilities(&two_qubit_povm(), &werner(1.0)).unwrap();
        let v = sic_vectors();
        for alpha in OutcomeIndex::all() {
            let (i, j) = alpha.pair();
            let overlap = v[i - 1].inner(&v[j - 1]).norm_sqr();
            let expected = (1.0 - overlap) / 8.0;
            assert!((p[alpha.alpha()] - expected).abs() < 1e-12);
        }
        assert!(p[0].abs() < 1e-15);
        assert!((p[1] - 1.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn born_dimension_mismatch() {
        assert!(matches!(
            born_probabilities(&sic_povm(), &werner(0.5)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn informationally_complete() {
        let sv = two_qubit_povm().probability_map_singular_values();
        assert_eq!(sv.len(), 16);
        assert!(sv[0] > 1e-6, "smallest singular value {}", sv[0]);
    }

    #[test]
    fn incomplete_set_rejected() {
        let mut elements = sic_povm().elements().to_vec();
        elements.pop();
        let labels = vec![String::new(); 3];
        assert!(matches!(
            PovmSet::new(elements, labels),
            Err(Error::NotComplete { .. })
        ));
    }

    proptest! {
        #[test]
        fn probabilities_normalized(eta in 0.0f64..=1.0) {
            let p = born_probabilities(&two_qubit_povm(), &werner(eta)).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(p.iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }
}
