//! Small dense optimizers used by both solvers: damped least squares with a
//! forward-difference Jacobian and the Nelder–Mead simplex method.

use nalgebra::{DMatrix, DVector};

/// A least-squares problem posed in local coordinates around a state.
///
/// `residual(s, δ)` evaluates the residual at the state moved by `δ` (in
/// scaled parameter units); `None` marks an infeasible move. `retract`
/// commits a move, which lets the state re-center its chart.
pub trait LeastSquares {
    type State: Clone;

    fn n_params(&self) -> usize;

    fn residual(&self, state: &Self::State, delta: &[f64]) -> Option<Vec<f64>>;

    fn retract(&self, state: &Self::State, delta: &[f64]) -> Self::State;

    /// Forward-difference step per scaled parameter.
    fn fd_step(&self) -> f64 {
        1e-5
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop once `‖r‖ ≤ tolerance`.
    pub tolerance: f64,
    pub initial_damping: f64,
    /// Halvings allowed when a step is infeasible.
    pub max_backtracks: usize,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-12,
            initial_damping: 1e-3,
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome<S> {
    pub state: S,
    pub residual: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn jacobian<P: LeastSquares>(problem: &P, state: &P::State, r0: &[f64], evals: &mut usize) -> DMatrix<f64> {
    let n = problem.n_params();
    let m = r0.len();
    let h = problem.fd_step();
    let mut jac = DMatrix::zeros(m, n);
    let mut delta = vec![0.0; n];
    for j in 0..n {
        delta[j] = h;
        *evals += 1;
        let (r, step) = match problem.residual(state, &delta) {
            Some(r) => (r, h),
            None => {
                delta[j] = -h;
                *evals += 1;
                match problem.residual(state, &delta) {
                    Some(r) => (r, -h),
                    None => {
                        delta[j] = 0.0;
                        continue;
                    }
                }
            }
        };
        for i in 0..m {
            jac[(i, j)] = (r[i] - r0[i]) / step;
        }
        delta[j] = 0.0;
    }
    jac
}

/// Levenberg–Marquardt on a [`LeastSquares`] problem starting at `state`.
pub fn levenberg_marquardt<P: LeastSquares>(problem: &P, state: P::State, opts: &LmOptions) -> LmOutcome<P::State> {
    let n = problem.n_params();
    let zero = vec![0.0; n];
    let mut evals = 1;
    let mut state = state;
    let mut r = problem
        .residual(&state, &zero)
        .expect("starting point must be feasible");
    let mut cost = norm2(&r);
    let mut lambda = opts.initial_damping;
    let mut iterations = 0;

    while iterations < opts.max_iterations && cost.sqrt() > opts.tolerance {
        iterations += 1;
        let jac = jacobian(problem, &state, &r, &mut evals);
        let jtj = jac.tr_mul(&jac);
        let grad = jac.tr_mul(&DVector::from_column_slice(&r));
        let mut improved = false;
        while lambda < 1e14 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * (1.0 + jtj[(i, i)]);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 4.0;
                continue;
            };
            let mut step: Vec<f64> = chol.solve(&(-&grad)).iter().copied().collect();
            let mut trial = None;
            for _ in 0..=opts.max_backtracks {
                evals += 1;
                if let Some(rt) = problem.residual(&state, &step) {
                    trial = Some(rt);
                    break;
                }
                step.iter_mut().for_each(|s| *s *= 0.5);
            }
            match trial {
                Some(rt) if norm2(&rt) < cost => {
                    state = problem.retract(&state, &step);
                    // re-evaluate at the committed state so charts stay consistent
                    evals += 1;
                    r = problem.residual(&state, &zero).unwrap_or(rt);
                    cost = norm2(&r);
                    lambda = (lambda / 3.0).max(1e-12);
                    improved = true;
                    break;
                }
                _ => lambda *= 4.0,
            }
        }
        if !improved {
            break;
        }
    }
    let residual_norm = cost.sqrt();
    LmOutcome {
        state,
        residual: r,
        residual_norm,
        iterations,
        evaluations: evals,
        converged: residual_norm <= opts.tolerance,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_evaluations: usize,
    /// Stop once the best value is at most this.
    pub target: f64,
    /// Stop once the simplex has shrunk below this size.
    pub min_size: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evaluations: 2000,
            target: 0.0,
            min_size: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Nelder–Mead simplex minimization with the standard coefficients
/// (reflection 1, expansion 2, contraction ½, shrink ½). The initial simplex
/// is `x0` plus `x0 + step_i e_i`.
pub fn nelder_mead<F>(f: F, x0: &[f64], steps: &[f64], opts: &NelderMeadOptions) -> NelderMeadOutcome
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut evals = n + 1;

    let combine =
        |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect() };

    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let size = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if values[0] <= opts.target || evals >= opts.max_evaluations || size < opts.min_size {
            break;
        }

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            centroid.iter_mut().zip(v).for_each(|(c, x)| *c += x / n as f64);
        }
        let worst = simplex[n].clone();
        let reflected = combine(&centroid, &worst, -1.0);
        let fr = f(&reflected);
        evals += 1;
        if fr < values[0] {
            let expanded = combine(&centroid, &worst, -2.0);
            let fe = f(&expanded);
            evals += 1;
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
        } else {
            let (cand, fc) = if fr < values[n] {
                let c = combine(&centroid, &reflected, 0.5);
                let v = f(&c);
                (c, v)
            } else {
                let c = combine(&centroid, &worst, 0.5);
                let v = f(&c);
                (c, v)
            };
            evals += 1;
            if fc < values[n].min(fr) {
                simplex[n] = cand;
                values[n] = fc;
            } else {
                let best = simplex[0].clone();
                for i in 1..=n {
                    simplex[i] = combine(&best, &simplex[i], 0.5);
                    values[i] = f(&simplex[i]);
                }
                evals += n;
            }
        }
    }
    NelderMeadOutcome {
        point: simplex[0].clone(),
        value: values[0],
        evaluations: evals,
    }
}
