//! Chi-squared state estimation over the Cholesky parameterization
//! `sigma = T^dagger T / Tr(T^dagger T)` with `T` lower triangular.
//!
//! Any parameter vector maps to a physical state, so the fit is an
//! unconstrained minimization in 16 real variables.

pub mod nelder_mead;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::povm::PovmSet;
use crate::qmat::ComplexMatrix;
use crate::simulate::{CountVector, RandomSource};
use crate::states::DensityMatrix;

use self::nelder_mead::{minimize, NelderMeadOptions};

pub const PARAM_COUNT: usize = 16;

/// `(row, col)` of the complex off-diagonal entry fed by parameters
/// `t[4 + 2k]` (real part) and `t[5 + 2k]` (imaginary part).
const OFF_DIAGONAL: [(usize, usize); 6] = [(1, 0), (2, 1), (3, 2), (2, 0), (3, 1), (3, 0)];

const DEGENERATE_TRACE: f64 = 1e-30;
const RIDGE: f64 = 1e-12;

/// The 16 reals defining `T`: the diagonal first, then real/imaginary pairs
/// for `T10, T21, T32, T20, T31, T30`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CholeskyParams(pub [f64; PARAM_COUNT]);

impl CholeskyParams {
    pub fn new(t: [f64; PARAM_COUNT]) -> Result<Self> {
        if let Some(&bad) = t.iter().find(|x| !x.is_finite()) {
            return Err(Error::ParameterOutOfRange {
                name: "Cholesky parameter",
                value: bad,
            });
        }
        Ok(Self(t))
    }

    pub fn from_slice(t: &[f64]) -> Result<Self> {
        let arr: [f64; PARAM_COUNT] = t.try_into().map_err(|_| Error::DimensionMismatch {
            expected: PARAM_COUNT,
            found: t.len(),
        })?;
        Self::new(arr)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// The lower-triangular factor `T`.
    pub fn lower_factor(&self) -> ComplexMatrix {
        let t = &self.0;
        let mut m = ComplexMatrix::zeros(4);
        for i in 0..4 {
            m[(i, i)] = Complex64::new(t[i], 0.0);
        }
        for (k, &(r, c)) in OFF_DIAGONAL.iter().enumerate() {
            m[(r, c)] = Complex64::new(t[4 + 2 * k], t[5 + 2 * k]);
        }
        m
    }

    fn from_lower_factor(m: &ComplexMatrix) -> Self {
        let mut t = [0.0; PARAM_COUNT];
        for (i, ti) in t.iter_mut().enumerate().take(4) {
            *ti = m[(i, i)].re;
        }
        for (k, &(r, c)) in OFF_DIAGONAL.iter().enumerate() {
            t[4 + 2 * k] = m[(r, c)].re;
            t[5 + 2 * k] = m[(r, c)].im;
        }
        Self(t)
    }
}

/// Unnormalized `T^dagger T` computed from the parameters directly.
fn gram(t: &[f64; PARAM_COUNT]) -> [[Complex64; 4]; 4] {
    let mut f = [[Complex64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        f[i][i] = Complex64::new(t[i], 0.0);
    }
    for (k, &(r, c)) in OFF_DIAGONAL.iter().enumerate() {
        f[r][c] = Complex64::new(t[4 + 2 * k], t[5 + 2 * k]);
    }
    let mut g = [[Complex64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in i..4 {
            // Rows k < max(i, j) of T vanish in these columns.
            let mut acc = Complex64::new(0.0, 0.0);
            for row in f.iter().skip(j) {
                acc += row[i].conj() * row[j];
            }
            g[i][j] = acc;
            g[j][i] = acc.conj();
        }
    }
    g
}

/// `sigma = T^dagger T / Tr(T^dagger T)`.
pub fn params_to_state(t: &CholeskyParams) -> Result<DensityMatrix> {
    let g = gram(&t.0);
    let trace: f64 = (0..4).map(|i| g[i][i].re).sum();
    if trace <= DEGENERATE_TRACE {
        return Err(Error::DegenerateParams(trace));
    }
    let data = g
        .iter()
        .flat_map(|row| row.iter().map(|z| z / trace))
        .collect();
    Ok(DensityMatrix::from_trusted(ComplexMatrix::from_vec(
        4, data,
    )?))
}

/// Inverse of [`params_to_state`] up to scale: factors `sigma + 1e-12 I` as
/// `T^dagger T` with `T` lower triangular and a positive diagonal.
pub fn state_to_params(sigma: &DensityMatrix) -> Result<CholeskyParams> {
    if sigma.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: sigma.dim(),
        });
    }
    let n = 4;
    // Reversing the basis turns an upper-lower factorization into the usual
    // lower-upper one: J sigma J = L L^dagger gives T = J L^dagger J.
    let mut reversed = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            reversed[(i, j)] = sigma.matrix()[(n - 1 - i, n - 1 - j)];
        }
        reversed[(i, i)] += RIDGE;
    }
    let l = cholesky_lower(&reversed)?;
    let mut t = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            t[(i, j)] = l[(n - 1 - j, n - 1 - i)].conj();
        }
    }
    Ok(CholeskyParams::from_lower_factor(&t))
}

/// `A = L L^dagger` for Hermitian positive definite `A`.
fn cholesky_lower(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.dim();
    let mut l = ComplexMatrix::zeros(n);
    for j in 0..n {
        let mut pivot = a[(j, j)].re;
        for k in 0..j {
            pivot -= l[(j, k)].norm_sqr();
        }
        if pivot <= 0.0 || !pivot.is_finite() {
            return Err(Error::NotPsd {
                min_eigenvalue: pivot,
            });
        }
        let d = pivot.sqrt();
        l[(j, j)] = Complex64::new(d, 0.0);
        for i in (j + 1)..n {
            let mut acc = a[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = acc / d;
        }
    }
    Ok(l)
}

/// Default floor on expected counts in the chi-squared denominators. It only
/// guards against vanishing `c_alpha`; a floor near one count would replace
/// every weight once all expected counts drop below one, as they do at
/// `N = 10`.
pub const DEFAULT_DENOMINATOR_FLOOR: f64 = 1e-3;

/// `sum_alpha (n_alpha - c_alpha)^2 / max(c_alpha, floor)` with
/// `c_alpha = N Tr(M_alpha sigma(t))` and the default floor.
pub fn chi_squared(t: &CholeskyParams, observed: &CountVector, povm: &PovmSet) -> Result<f64> {
    chi_squared_with_floor(t, observed, povm, DEFAULT_DENOMINATOR_FLOOR)
}

pub fn chi_squared_with_floor(
    t: &CholeskyParams,
    observed: &CountVector,
    povm: &PovmSet,
    floor: f64,
) -> Result<f64> {
    if observed.len() != povm.len() {
        return Err(Error::DimensionMismatch {
            expected: povm.len(),
            found: observed.len(),
        });
    }
    let sigma = params_to_state(t)?;
    let n = observed.mean_pairs();
    povm.elements()
        .iter()
        .zip(observed.counts())
        .map(|(m, &obs)| {
            let c = n * m.trace_product(sigma.matrix())?.re;
            Ok((obs - c).powi(2) / c.max(floor))
        })
        .sum()
}

/// Chi-squared with the measurement operators unpacked for fast repeated
/// evaluation. Agrees with [`chi_squared_with_floor`].
struct Objective {
    /// Per outcome: real diagonal, then the upper off-diagonal entries.
    diag: Vec<[f64; 4]>,
    upper: Vec<[Complex64; 6]>,
    observed: Vec<f64>,
    mean_pairs: f64,
    floor: f64,
}

const UPPER: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

impl Objective {
    fn new(observed: &CountVector, povm: &PovmSet, floor: f64) -> Result<Self> {
        if povm.dim() != 4 || observed.len() != povm.len() {
            return Err(Error::DimensionMismatch {
                expected: povm.len(),
                found: observed.len(),
            });
        }
        let diag = povm
            .elements()
            .iter()
            .map(|m| std::array::from_fn(|i| m[(i, i)].re))
            .collect();
        let upper = povm
            .elements()
            .iter()
            .map(|m| std::array::from_fn(|k| m[UPPER[k]]))
            .collect();
        Ok(Self {
            diag,
            upper,
            observed: observed.counts().to_vec(),
            mean_pairs: observed.mean_pairs(),
            floor,
        })
    }

    fn value(&self, t: &[f64]) -> f64 {
        let t: &[f64; PARAM_COUNT] = t.try_into().expect("16 parameters");
        let g = gram(t);
        let trace: f64 = (0..4).map(|i| g[i][i].re).sum();
        if trace <= DEGENERATE_TRACE || !trace.is_finite() {
            return f64::INFINITY;
        }
        let scale = self.mean_pairs / trace;
        let mut chi2 = 0.0;
        for ((d, u), &obs) in self.diag.iter().zip(&self.upper).zip(&self.observed) {
            // Tr(M G) for Hermitian M, G: diagonal terms plus twice the real
            // part of M_ij G_ji over the upper triangle.
            let mut tr = 0.0;
            for i in 0..4 {
                tr += d[i] * g[i][i].re;
            }
            for (m, &(i, j)) in u.iter().zip(&UPPER) {
                let gji = g[j][i];
                tr += 2.0 * (m.re * gji.re - m.im * gji.im);
            }
            let c = scale * tr;
            chi2 += (obs - c).powi(2) / c.max(self.floor);
        }
        chi2
    }
}

/// Tuning of [`estimate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorConfig {
    /// Independent simplex runs; the first starts at the maximally mixed state.
    pub restarts: usize,
    /// Evaluation budget per restart.
    pub max_evaluations: usize,
    /// Simplex diameter at which a run counts as converged.
    pub simplex_tolerance: f64,
    /// Chi-squared spread across the simplex at which a run counts as converged.
    pub value_tolerance: f64,
    /// Standard deviation of the Gaussian offsets for restarts after the first.
    pub perturbation_scale: f64,
    /// Lower bound on the expected count in each denominator.
    pub denominator_floor: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Seed for restart perturbations.
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            restarts: 5,
            max_evaluations: 20_000,
            simplex_tolerance: 1e-9,
            value_tolerance: 1e-12,
            perturbation_scale: 0.05,
            denominator_floor: DEFAULT_DENOMINATOR_FLOOR,
            initial_step: 0.1,
            seed: 0x5eed,
        }
    }
}

/// Outcome of one simplex run.
#[derive(Clone, Debug, PartialEq)]
pub struct RestartSummary {
    pub start_chi2: f64,
    pub chi2: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimationResult {
    pub sigma: DensityMatrix,
    pub chi2: f64,
    pub params: CholeskyParams,
    /// Total objective evaluations over all restarts.
    pub evaluations: usize,
    pub restarts_used: usize,
    /// Whether the run that produced the returned parameters converged.
    pub converged: bool,
    pub restarts: Vec<RestartSummary>,
}

/// Minimizes the chi-squared over the Cholesky parameters. Returns the best of
/// `config.restarts` simplex runs; ties go to the earliest run.
pub fn estimate(
    observed: &CountVector,
    povm: &PovmSet,
    config: &EstimatorConfig,
) -> Result<EstimationResult> {
    if config.restarts == 0 {
        return Err(Error::ParameterOutOfRange {
            name: "restarts",
            value: 0.0,
        });
    }
    let objective = Objective::new(observed, povm, config.denominator_floor)?;
    let base = state_to_params(&DensityMatrix::maximally_mixed(4))?;
    let options = NelderMeadOptions {
        max_evaluations: config.max_evaluations,
        x_tolerance: config.simplex_tolerance,
        f_tolerance: config.value_tolerance,
        initial_step: config.initial_step,
    };
    let mut rng = RandomSource::new(config.seed);

    let mut best: Option<(Vec<f64>, f64, bool)> = None;
    let mut restarts = Vec::with_capacity(config.restarts);
    for r in 0..config.restarts {
        let mut start = base.0.to_vec();
        if r > 0 {
            for x in &mut start {
                *x += config.perturbation_scale * rng.standard_normal();
            }
        }
        let start_chi2 = objective.value(&start);
        let run = minimize(|t| objective.value(t), &start, &options);
        restarts.push(RestartSummary {
            start_chi2,
            chi2: run.value,
            evaluations: run.evaluations,
            converged: run.converged,
        });
        if best.as_ref().is_none_or(|(_, v, _)| run.value < *v) {
            best = Some((run.x, run.value, run.converged));
        }
    }

    let (x, _, converged) = best.expect("at least one restart");
    let params = CholeskyParams::from_slice(&x)?;
    let sigma = params_to_state(&params)?;
    let chi2 = chi_squared_with_floor(&params, observed, povm, config.denominator_floor)?;
    Ok(EstimationResult {
        sigma,
        chi2,
        params,
        evaluations: restarts.iter().map(|r| r.evaluations).sum(),
        restarts_used: restarts.len(),
        converged,
        restarts,
    })
}
