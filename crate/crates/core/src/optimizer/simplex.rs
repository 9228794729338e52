//! Nelder-Mead simplex search with dimension-adaptive coefficients.

/// Outcome of one simplex run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Stop when the spread of simplex values falls below this.
    pub value_tol: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Fresh simplexes built around the incumbent after convergence; the
    /// search stops early once a rebuild no longer improves by `value_tol`.
    pub rebuilds: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            value_tol: 1e-10,
            initial_step: 0.3,
            rebuilds: 3,
        }
    }
}

/// Minimizes `f` from `x0`. Non-finite values are treated as `+inf`.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    if x0.is_empty() {
        let v = eval(x0);
        return SimplexResult {
            x: Vec::new(),
            value: v,
            evaluations: 1,
            iterations: 0,
            converged: true,
        };
    }
    let mut best = x0.to_vec();
    let mut best_val = eval(&best);
    let mut evaluations = 1;
    let mut iterations = 0;
    let mut converged = false;
    let mut step = opts.initial_step;
    for round in 0..=opts.rebuilds {
        let remaining = opts.max_iterations.saturating_sub(iterations);
        if remaining == 0 {
            break;
        }
        let run = single_run(&mut eval, &best, best_val, step, opts.value_tol, remaining);
        evaluations += run.evaluations;
        iterations += run.iterations;
        converged = run.converged;
        let gain = best_val - run.value;
        if run.value < best_val {
            best = run.x;
            best_val = run.value;
        }
        if round > 0 && gain < opts.value_tol {
            break;
        }
        step *= 0.5;
    }
    SimplexResult {
        x: best,
        value: best_val,
        evaluations,
        iterations,
        converged,
    }
}

fn single_run<F>(
    eval: &mut F,
    x0: &[f64],
    f0: f64,
    step: f64,
    tol: f64,
    max_iterations: usize,
) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let nf = n as f64;
    // coefficients that keep the search effective in higher dimension; they
    // coincide with the classic (1, 2, 1/2, 1/2) at n = 2
    let nc = nf.max(2.0);
    let alpha = 1.0;
    let beta = 1.0 + 2.0 / nc;
    let gamma = 0.75 - 1.0 / (2.0 * nc);
    let delta = 1.0 - 1.0 / nc;

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut vals: Vec<f64> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    vals.push(f0);
    let mut evaluations = 0;
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step;
        vals.push(eval(&p));
        evaluations += 1;
        pts.push(p);
    }

    let mut order: Vec<usize> = (0..=n).collect();
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
        let lo = order[0];
        let hi = order[n];
        let second = order[n - 1];
        if vals[hi] - vals[lo] <= tol && vals[lo].is_finite() {
            converged = true;
            break;
        }
        iterations += 1;
        centroid.iter_mut().for_each(|c| *c = 0.0);
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&pts[i]) {
                *c += x / nf;
            }
        }
        for j in 0..n {
            trial[j] = centroid[j] + alpha * (centroid[j] - pts[hi][j]);
        }
        let fr = eval(&trial);
        evaluations += 1;
        if fr < vals[lo] {
            for j in 0..n {
                trial2[j] = centroid[j] + beta * (trial[j] - centroid[j]);
            }
            let fe = eval(&trial2);
            evaluations += 1;
            if fe < fr {
                pts[hi].copy_from_slice(&trial2);
                vals[hi] = fe;
            } else {
                pts[hi].copy_from_slice(&trial);
                vals[hi] = fr;
            }
            continue;
        }
        if fr < vals[second] {
            pts[hi].copy_from_slice(&trial);
            vals[hi] = fr;
            continue;
        }
        // contraction, outside if the reflection beat the worst point
        let outside = fr < vals[hi];
        for j in 0..n {
            trial2[j] = if outside {
                centroid[j] + gamma * (trial[j] - centroid[j])
            } else {
                centroid[j] - gamma * (centroid[j] - pts[hi][j])
            };
        }
        let fc = eval(&trial2);
        evaluations += 1;
        let accept = if outside { fc <= fr } else { fc < vals[hi] };
        if accept {
            pts[hi].copy_from_slice(&trial2);
            vals[hi] = fc;
            continue;
        }
        // shrink toward the best vertex
        let best = pts[lo].clone();
        for &i in &order[1..] {
            for j in 0..n {
                pts[i][j] = best[j] + delta * (pts[i][j] - best[j]);
            }
            vals[i] = eval(&pts[i]);
            evaluations += 1;
        }
    }
    let (bi, _) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .expect("simplex has vertices");
    SimplexResult {
        x: pts[bi].clone(),
        value: vals[bi],
        evaluations,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let r = minimize(
            |x| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2) + 0.5 * x[2].powi(2),
            &[0.0, 0.0, 0.0],
            &SimplexOptions::default(),
        );
        assert!(r.value < 1e-9, "{r:?}");
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] + 2.0).abs() < 1e-4);
    }

    #[test]
    fn rosenbrock() {
        let opts = SimplexOptions {
            value_tol: 1e-14,
            ..Default::default()
        };
        let r = minimize(
            |x| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
            &[-1.2, 1.0],
            &opts,
        );
        assert!(r.value < 1e-8, "{r:?}");
    }

    #[test]
    fn one_dimensional() {
        let r = minimize(|x| (x[0] - 0.3).powi(2), &[2.0], &SimplexOptions::default());
        assert!((r.x[0] - 0.3).abs() < 1e-4);
    }

    #[test]
    fn empty_parameter_vector() {
        let r = minimize(|_| 4.0, &[], &SimplexOptions::default());
        assert_eq!(r.value, 4.0);
        assert!(r.converged);
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let r = minimize(
            |x| if x[0] < 0.0 { f64::NAN } else { (x[0] - 0.5).powi(2) },
            &[1.0],
            &SimplexOptions::default(),
        );
        assert!((r.x[0] - 0.5).abs() < 1e-4);
    }

    #[test]
    fn deterministic() {
        let f = |x: &[f64]| (x[0] * x[1] - 1.0).powi(2) + (x[0] - x[1]).powi(2);
        let a = minimize(f, &[0.2, 3.0], &SimplexOptions::default());
        let b = minimize(f, &[0.2, 3.0], &SimplexOptions::default());
        assert_eq!(a, b);
    }
}
