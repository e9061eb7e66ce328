//! Derivative-free simplex minimizer with dimension-adaptive coefficients
//! (reflection 1, expansion 1 + 2/n, contraction 3/4 - 1/(2n), shrink 1 - 1/n).

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evaluations: usize,
    /// Stop when every vertex lies within this max-norm distance of the best.
    pub x_tolerance: f64,
    /// Stop when the spread of function values across the simplex falls below this.
    pub f_tolerance: f64,
    /// Offset of each initial vertex from the start point along one axis.
    pub initial_step: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

pub fn minimize<F>(mut f: F, start: &[f64], options: &NelderMeadOptions) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = start.len();
    let nf = n as f64;
    let reflect = 1.0;
    let expand = 1.0 + 2.0 / nf;
    let contract = 0.75 - 1.0 / (2.0 * nf);
    let shrink = 1.0 - 1.0 / nf;

    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], evaluations: &mut usize| {
        *evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += options.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evaluations)).collect();

    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut second = vec![0.0; n];
    let mut order: Vec<usize> = (0..=n).collect();
    let mut converged = false;

    loop {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[n];
        let next_worst = order[n - 1];

        let spread = values[worst] - values[best];
        let diameter = simplex
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < options.x_tolerance || spread < options.f_tolerance {
            converged = true;
            break;
        }
        if evaluations >= options.max_evaluations {
            break;
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &idx in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&simplex[idx]) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= nf);

        let point = |coef: f64, out: &mut Vec<f64>, worst: &[f64], centroid: &[f64]| {
            for ((o, c), w) in out.iter_mut().zip(centroid).zip(worst) {
                *o = c + coef * (c - w);
            }
        };

        point(reflect, &mut trial, &simplex[worst], &centroid);
        let fr = eval(&trial, &mut evaluations);

        if fr < values[best] {
            point(reflect * expand, &mut second, &simplex[worst], &centroid);
            let fe = eval(&second, &mut evaluations);
            if fe < fr {
                simplex[worst].copy_from_slice(&second);
                values[worst] = fe;
            } else {
                simplex[worst].copy_from_slice(&trial);
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[next_worst] {
            simplex[worst].copy_from_slice(&trial);
            values[worst] = fr;
            continue;
        }

        // Outside contraction when the reflection beat the worst vertex,
        // inside contraction otherwise.
        let (coef, bound) = if fr < values[worst] {
            (reflect * contract, fr)
        } else {
            (-contract, values[worst])
        };
        point(coef, &mut second, &simplex[worst], &centroid);
        let fc = eval(&second, &mut evaluations);
        if fc <= bound {
            simplex[worst].copy_from_slice(&second);
            values[worst] = fc;
            continue;
        }

        let anchor = simplex[best].clone();
        for &idx in &order[1..] {
            for (x, a) in simplex[idx].iter_mut().zip(&anchor) {
                *x = a + shrink * (*x - a);
            }
            values[idx] = eval(&simplex[idx], &mut evaluations);
        }
    }

    let best = order[0];
    NelderMeadResult {
        x: simplex[best].clone(),
        value: values[best],
        evaluations,
        converged,
    }
}
