//! Noisy coincidence counts: each outcome receives an independent
//! Poisson-distributed number of pairs scaled by its Born probability.
//! Also the polarizer-rotation scans used to display the correlations.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::povm::{born_probabilities, OutcomeIndex, PovmSet};
use crate::qmat::ComplexMatrix;
use crate::states::{werner_two_qubit, DensityMatrix, WernerParameter};

/// Seeded, reproducible random stream.
#[derive(Clone, Debug)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent substream identified by `indices` under `master`. The
    /// result depends only on its arguments, so work split across threads
    /// draws the same numbers as a sequential run.
    pub fn derive(master: u64, indices: &[u64]) -> Self {
        let mut h = splitmix64(master);
        for &i in indices {
            h = splitmix64(h ^ splitmix64(i.wrapping_add(0x632b_e59b_d9b4_e019)));
        }
        Self::new(h)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Words consumed so far.
    pub fn position(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        // Box-Muller; 1 - u keeps the log argument in (0, 1].
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.random()
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Means below this use multiplication of uniforms; above, transformed rejection.
const PTRD_THRESHOLD: f64 = 30.0;

/// Draws from Poisson(`mean`).
pub fn poisson_sample(mean: f64, rng: &mut RandomSource) -> Result<u64> {
    if !mean.is_finite() || mean < 0.0 {
        return Err(Error::InvalidMean(mean));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    if mean < PTRD_THRESHOLD {
        Ok(poisson_knuth(mean, rng))
    } else {
        Ok(poisson_ptrd(mean, rng))
    }
}

fn poisson_knuth(mean: f64, rng: &mut RandomSource) -> u64 {
    let limit = (-mean).exp();
    let mut k = 0;
    let mut p = rng.uniform();
    while p > limit {
        k += 1;
        p *= rng.uniform();
    }
    k
}

/// Hörmann's transformed rejection with squeeze (PTRD).
fn poisson_ptrd(mean: f64, rng: &mut RandomSource) -> u64 {
    let slam = mean.sqrt();
    let loglam = mean.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.uniform() - 0.5;
        let v = rng.uniform();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -mean + k * loglam - ln_gamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// How simulated counts are reported.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CountMode {
    /// Poisson draw times probability, kept real.
    #[default]
    Real,
    /// As `Real`, rounded half to even.
    Rounded,
}

/// Coincidence counts per outcome together with the source's mean pair number.
#[derive(Clone, Debug, PartialEq)]
pub struct CountVector {
    counts: Vec<f64>,
    mean_pairs: f64,
}

impl CountVector {
    pub fn new(counts: Vec<f64>, mean_pairs: f64) -> Result<Self> {
        check_mean_pairs(mean_pairs)?;
        if let Some(&bad) = counts.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::ParameterOutOfRange {
                name: "count",
                value: bad,
            });
        }
        Ok(Self { counts, mean_pairs })
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn mean_pairs(&self) -> f64 {
        self.mean_pairs
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

fn check_mean_pairs(mean_pairs: f64) -> Result<()> {
    if !mean_pairs.is_finite() || mean_pairs <= 0.0 {
        return Err(Error::ParameterOutOfRange {
            name: "mean_pairs",
            value: mean_pairs,
        });
    }
    Ok(())
}

/// One experiment: `n_alpha = Pois(N) * Tr(M_alpha rho)`, one draw per outcome.
pub fn simulate_counts(
    rho: &DensityMatrix,
    povm: &PovmSet,
    mean_pairs: f64,
    rng: &mut RandomSource,
) -> Result<CountVector> {
    simulate_counts_with(rho, povm, mean_pairs, rng, CountMode::Real)
}

pub fn simulate_counts_with(
    rho: &DensityMatrix,
    povm: &PovmSet,
    mean_pairs: f64,
    rng: &mut RandomSource,
    mode: CountMode,
) -> Result<CountVector> {
    check_mean_pairs(mean_pairs)?;
    let probabilities = born_probabilities(povm, rho)?;
    let counts = probabilities
        .iter()
        .map(|&p| {
            let pairs = poisson_sample(mean_pairs, rng)? as f64;
            let n = pairs * p;
            Ok(match mode {
                CountMode::Real => n,
                CountMode::Rounded => n.round_ties_even(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    CountVector::new(counts, mean_pairs)
}

/// Noise-free counts `c_alpha = N Tr(M_alpha sigma)`.
pub fn expected_counts(
    sigma: &DensityMatrix,
    povm: &PovmSet,
    mean_pairs: f64,
) -> Result<CountVector> {
    check_mean_pairs(mean_pairs)?;
    let counts = born_probabilities(povm, sigma)?
        .into_iter()
        .map(|p| mean_pairs * p)
        .collect();
    CountVector::new(counts, mean_pairs)
}

/// Coincidence probability with one analyzer fixed at H (`|0>`) and the other
/// at angle `theta` from V, projecting onto `cos(theta)|1> + sin(theta)|0>`.
pub fn coincidence_probability(theta: f64, eta: WernerParameter) -> f64 {
    let zero = Complex64::new(0.0, 0.0);
    let h = [Complex64::new(1.0, 0.0), zero];
    let analyzer = [
        Complex64::new(theta.sin(), 0.0),
        Complex64::new(theta.cos(), 0.0),
    ];
    let projector = ComplexMatrix::outer(&h, &h)
        .expect("qubit")
        .kron(&ComplexMatrix::outer(&analyzer, &analyzer).expect("qubit"));
    let rho = werner_two_qubit(eta);
    projector
        .trace_product(rho.matrix())
        .expect("two-qubit operators")
        .re
        .clamp(0.0, 1.0)
}

/// Polarization correlation curve, noisy and noise-free.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationScan {
    pub angles: Vec<f64>,
    pub counts: Vec<f64>,
    pub expected: Vec<f64>,
    pub eta: f64,
    pub mean_pairs: f64,
}

impl CorrelationScan {
    /// `sqrt(sum (noisy - expected)^2 / sum expected^2)`.
    pub fn rms_relative_deviation(&self) -> f64 {
        let num: f64 = self
            .counts
            .iter()
            .zip(&self.expected)
            .map(|(n, e)| (n - e).powi(2))
            .sum();
        let den: f64 = self.expected.iter().map(|e| e * e).sum();
        (num / den).sqrt()
    }

    /// CSV with header `angle_deg,expected,noisy`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("angle_deg,expected,noisy\n");
        for ((angle, expected), noisy) in self.angles.iter().zip(&self.expected).zip(&self.counts) {
            let deg = (angle.to_degrees() * 1e9).round() / 1e9;
            writeln!(out, "{deg},{expected},{noisy}").expect("writing to String");
        }
        out
    }
}

/// Angles `0, step, ..., 360` degrees, returned in radians.
pub fn angle_grid(step_deg: f64) -> Result<Vec<f64>> {
    if !step_deg.is_finite() || step_deg <= 0.0 || step_deg > 360.0 {
        return Err(Error::ParameterOutOfRange {
            name: "angle step",
            value: step_deg,
        });
    }
    let steps = (360.0 / step_deg + 1e-9).floor() as usize;
    Ok((0..=steps)
        .map(|k| (k as f64 * step_deg).to_radians())
        .collect())
}

/// Default scan grid: 0 to 360 degrees in 5 degree steps.
pub fn default_angles() -> Vec<f64> {
    angle_grid(5.0).expect("valid step")
}

/// Noisy count per angle is `Pois(N) * p(theta)`; `expected` is `N p(theta)`.
pub fn correlation_scan(
    eta: WernerParameter,
    mean_pairs: f64,
    angles: &[f64],
    rng: &mut RandomSource,
) -> Result<CorrelationScan> {
    check_mean_pairs(mean_pairs)?;
    if angles.is_empty() {
        return Err(Error::ParameterOutOfRange {
            name: "angle count",
            value: 0.0,
        });
    }
    let mut counts = Vec::with_capacity(angles.len());
    let mut expected = Vec::with_capacity(angles.len());
    for &theta in angles {
        let p = coincidence_probability(theta, eta);
        counts.push(poisson_sample(mean_pairs, rng)? as f64 * p);
        expected.push(mean_pairs * p);
    }
    Ok(CorrelationScan {
        angles: angles.to_vec(),
        counts,
        expected,
        eta: eta.value(),
        mean_pairs,
    })
}

/// Contents of a counts file: 16 counts plus metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct CountsFile {
    pub counts: CountVector,
    pub seed: Option<u64>,
    pub eta: Option<f64>,
}

impl CountsFile {
    /// Header `alpha,i,j,count`, one row per outcome, then `# key=value`
    /// metadata lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,i,j,count\n");
        for (alpha, count) in OutcomeIndex::all().zip(self.counts.counts()) {
            let (i, j) = alpha.pair();
            writeln!(out, "{},{i},{j},{count}", alpha.alpha()).expect("writing to String");
        }
        writeln!(out, "# mean_pairs={}", self.counts.mean_pairs()).expect("writing to String");
        if let Some(seed) = self.seed {
            writeln!(out, "# seed={seed}").expect("writing to String");
        }
        if let Some(eta) = self.eta {
            writeln!(out, "# eta={eta}").expect("writing to String");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse { line, message };
        let mut counts: [Option<f64>; OutcomeIndex::COUNT] = [None; OutcomeIndex::COUNT];
        let mut rows = 0usize;
        let mut mean_pairs = None;
        let mut seed = None;
        let mut eta = None;
        let mut saw_header = false;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let Some((key, value)) = meta.split_once('=') else {
                    continue;
                };
                let value = value.trim();
                match key.trim() {
                    "mean_pairs" => {
                        let n: f64 = value.parse().map_err(|_| {
                            parse_err(line_no, format!("invalid mean_pairs `{value}`"))
                        })?;
                        check_mean_pairs(n).map_err(|e| parse_err(line_no, e.to_string()))?;
                        mean_pairs = Some(n);
                    }
                    "seed" => {
                        seed =
                            Some(value.parse().map_err(|_| {
                                parse_err(line_no, format!("invalid seed `{value}`"))
                            })?);
                    }
                    "eta" => {
                        eta =
                            Some(value.parse().map_err(|_| {
                                parse_err(line_no, format!("invalid eta `{value}`"))
                            })?);
                    }
                    _ => {}
                }
                continue;
            }
            if !saw_header {
                let header: Vec<&str> = line.split(',').map(str::trim).collect();
                if header != ["alpha", "i", "j", "count"] {
                    return Err(parse_err(
                        line_no,
                        format!("expected header `alpha,i,j,count`, found `{line}`"),
                    ));
                }
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(parse_err(
                    line_no,
                    format!("expected 4 fields, found {}", fields.len()),
                ));
            }
            let int = |s: &str, name: &str| {
                s.parse::<usize>()
                    .map_err(|_| parse_err(line_no, format!("invalid {name} `{s}`")))
            };
            let alpha = int(fields[0], "alpha")?;
            let i = int(fields[1], "i")?;
            let j = int(fields[2], "j")?;
            let outcome = OutcomeIndex::from_pair(i, j)
                .map_err(|_| parse_err(line_no, format!("invalid outcome pair ({i},{j})")))?;
            if outcome.alpha() != alpha {
                return Err(parse_err(
                    line_no,
                    format!("alpha {alpha} does not match pair ({i},{j})"),
                ));
            }
            let count: f64 = fields[3]
                .parse()
                .map_err(|_| parse_err(line_no, format!("invalid count `{}`", fields[3])))?;
            if !count.is_finite() || count < 0.0 {
                return Err(parse_err(
                    line_no,
                    format!("count must be >= 0, got {count}"),
                ));
            }
            if counts[alpha].replace(count).is_some() {
                return Err(parse_err(line_no, format!("duplicate alpha {alpha}")));
            }
            rows += 1;
        }

        let end = text.lines().count().max(1);
        if !saw_header {
            return Err(parse_err(end, "missing header `alpha,i,j,count`".into()));
        }
        if rows != OutcomeIndex::COUNT {
            return Err(parse_err(
                end,
                format!("expected {} count rows, found {rows}", OutcomeIndex::COUNT),
            ));
        }
        let mean_pairs = mean_pairs
            .ok_or_else(|| parse_err(end, "missing metadata field `mean_pairs`".into()))?;
        let counts = counts
            .iter()
            .map(|c| c.expect("all rows present"))
            .collect();
        Ok(Self {
            counts: CountVector::new(counts, mean_pairs)?,
            seed,
            eta,
        })
    }
}
