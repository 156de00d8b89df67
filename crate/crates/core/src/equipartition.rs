//! Residual map and solver for equipartitioning motions.
//!
//! With `a_g`, `b_g` the masses of the moved cones `ρ(g(C))`, `ρ(−g(C))`, put
//! `t_g = a_g − b_g` and `s_g = a_g + b_g`. The residual stacks all `t_g`
//! followed by the consecutive differences `s_{g_i} − s_{g_{i+1}}`; it vanishes
//! exactly when every cone carries mass `1/(2d)`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fan::{validate_fan, ConeClassifier, ConeLabel};
use crate::measure::{
    cloud_support_bound, cone_masses, default_epsilon, label_margins, mc_oracle, MassMode, MassVector, Measure,
    OracleEstimate, PointCloud,
};
use crate::motion::{random_rotation, RigidMotion, RotationChart};
use crate::optim::{levenberg_marquardt, nelder_mead, LeastSquares, LmOptions, NelderMeadOptions};

/// Starts run in fixed-size batches; the search stops after the first batch
/// that produces a converged start.
pub const START_BATCH: usize = 1;

/// Sample count used to check the fan before searching.
const FAN_CHECK_SAMPLES: usize = 10_000;

/// The `(2d−1)`-vector `(t_0, …, t_{d−1}, s_0 − s_1, …, s_{d−2} − s_{d−1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    values: Vec<f64>,
    d: usize,
}

impl Residual {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The `t_g = a_g − b_g` block.
    pub fn t_block(&self) -> &[f64] {
        &self.values[..self.d]
    }

    /// Consecutive differences of `s_g = a_g + b_g`.
    pub fn s_block(&self) -> &[f64] {
        &self.values[self.d..]
    }

    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }
}

pub fn residual(mv: &MassVector) -> Residual {
    paired_residual(&mv.a, &mv.b)
}

/// The residual of any pair of per-element blocks `(a_g)` and `(b_g)`.
pub fn paired_residual(a: &[f64], b: &[f64]) -> Residual {
    assert_eq!(a.len(), b.len(), "blocks must have equal length");
    let d = a.len();
    let mut values = Vec::with_capacity(2 * d - 1);
    values.extend(a.iter().zip(b).map(|(a, b)| a - b));
    let s: Vec<f64> = a.iter().zip(b).map(|(a, b)| a + b).collect();
    values.extend(s.windows(2).map(|w| w[0] - w[1]));
    Residual { values, d }
}

/// `‖residual(cone_masses(cloud, fan, ρ, mode))‖²`.
pub fn objective(cloud: &PointCloud, fan: &dyn ConeClassifier, motion: &RigidMotion, mode: MassMode) -> Result<f64> {
    Ok(residual(&cone_masses(cloud, fan, motion, mode)?).norm_squared())
}

/// Smallest residual norm reachable by a cloud of `n` equally weighted
/// points: the masses are multiples of `1/n`, so an exact zero needs `2d | n`.
pub fn count_floor(d: usize, n: usize) -> f64 {
    if n.is_multiple_of(2 * d) {
        return 0.0;
    }
    // in counts the squared norm is Σ_g (s_g mod 2) + Σ (s_g − s_{g+1})²,
    // minimised over s_g = base + δ_g with Σ δ_g fixed; small |δ| suffice
    const SPREAD: i64 = 2;
    let base = (n / d) as i64;
    let extra = (n - d * (n / d)) as i64;
    let width = (2 * SPREAD + 1) as usize;
    let span = (2 * SPREAD * d as i64 + 1) as usize;
    let offset = SPREAD * d as i64;
    let mut cost = vec![u64::MAX; width * span];
    for (i, delta) in (-SPREAD..=SPREAD).enumerate() {
        cost[i * span + (delta + offset) as usize] = ((base + delta).rem_euclid(2)) as u64;
    }
    for _ in 1..d {
        let mut next = vec![u64::MAX; width * span];
        for (i, prev) in (-SPREAD..=SPREAD).enumerate() {
            for sum in 0..span {
                let c = cost[i * span + sum];
                if c == u64::MAX {
                    continue;
                }
                for (j, delta) in (-SPREAD..=SPREAD).enumerate() {
                    let ns = sum as i64 + delta;
                    if ns < 0 || ns >= span as i64 {
                        continue;
                    }
                    let step = (prev - delta).pow(2) as u64 + (base + delta).rem_euclid(2) as u64;
                    let slot = &mut next[j * span + ns as usize];
                    *slot = (*slot).min(c + step);
                }
            }
        }
        cost = next;
    }
    let best = (0..width)
        .map(|i| cost[i * span + (extra + offset) as usize])
        .min()
        .unwrap_or(u64::MAX);
    (best as f64).sqrt() / n as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub multistarts: usize,
    pub beta_start: f64,
    pub beta_max: f64,
    pub beta_growth: f64,
    /// Levenberg–Marquardt iterations per sharpness stage.
    pub max_iterations: usize,
    /// Convergence threshold on the hard residual norm.
    pub tolerance: f64,
    /// Translations stay within this multiple of the support radius of the
    /// cloud mean.
    pub translation_bound_factor: f64,
    /// Tail mass for the support radius; `None` uses `min(0.01, 1/(4d))`.
    pub epsilon: Option<f64>,
    /// Function evaluations for the derivative-free polish on the hard
    /// objective.
    pub polish_evaluations: usize,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            multistarts: 16,
            beta_start: 20.0,
            beta_max: 500.0,
            beta_growth: 2.5,
            max_iterations: 50,
            tolerance: 1e-6,
            translation_bound_factor: 2.0,
            epsilon: None,
            polish_evaluations: 20_000,
            seed: 0,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.multistarts == 0 {
            return bad("multistarts must be positive");
        }
        if !(self.beta_start > 0.0 && self.beta_start < self.beta_max) {
            return bad("sharpness schedule needs 0 < beta_start < beta_max");
        }
        if !(self.beta_growth > 1.0) {
            return bad("sharpness growth must exceed 1");
        }
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive");
        }
        if !(self.translation_bound_factor > 0.0) {
            return bad("translation bound factor must be positive");
        }
        Ok(())
    }

    /// The geometric sharpness schedule, ending exactly at `beta_max`.
    pub fn beta_schedule(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut b = self.beta_start;
        while b < self.beta_max {
            out.push(b);
            b *= self.beta_growth;
        }
        out.push(self.beta_max);
        out
    }
}

/// Parameter count `d(d−1)/2 + d` of the motion group against the residual
/// length `2d − 1`.
pub fn degrees_of_freedom(d: usize) -> (usize, usize) {
    (d * (d - 1) / 2 + d, 2 * d - 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageTrace {
    pub beta: f64,
    pub soft_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StartTrace {
    pub start: usize,
    pub seed: u64,
    pub initial_hard_residual: f64,
    pub stages: Vec<StageTrace>,
    pub polish_evaluations: usize,
    pub final_hard_residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct Certificate {
    pub oracle: OracleEstimate,
    pub tolerance: f64,
    pub passed: bool,
    /// Cones whose oracle mass missed `1/(2d)`: label, mass, allowed deviation.
    pub violations: Vec<(ConeLabel, f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub motion: RigidMotion,
    pub masses_hard: MassVector,
    pub residual_norm: f64,
    /// Smallest residual norm the cloud's point counts allow; zero for
    /// weighted clouds.
    pub count_floor: f64,
    pub converged: bool,
    pub best_start: usize,
    pub certificate: Option<Certificate>,
    pub trace: Vec<StartTrace>,
    pub seed: u64,
    pub elapsed_secs: f64,
}

impl SolveResult {
    /// Starts that reached the tolerance, in start order.
    pub fn converged_starts(&self) -> Vec<usize> {
        self.trace.iter().filter(|t| t.converged).map(|t| t.start).collect()
    }
}

/// Squared residual at which a search can stop: the tolerance, or the count
/// floor when that is larger.
fn stop_value(tolerance: f64, floor: f64) -> f64 {
    (tolerance * tolerance).max(floor * floor * (1.0 + 1e-9))
}

fn start_seed(seed: u64, start: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (start as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone)]
struct Placement {
    chart: RotationChart,
    translation: DVector<f64>,
}

/// The soft (or hard) residual as a function of chart coordinates and a
/// translation measured in units of the support radius.
struct MotionProblem<'a> {
    cloud: &'a PointCloud,
    fan: &'a dyn ConeClassifier,
    mode: MassMode,
    center: DVector<f64>,
    bound: f64,
    scale: f64,
}

impl MotionProblem<'_> {
    fn rotation_params(&self) -> usize {
        let d = self.center.len();
        d * (d - 1) / 2
    }

    fn moved(&self, s: &Placement, delta: &[f64]) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let k = self.rotation_params();
        let rot = s.chart.eval(&delta[..k])?;
        let mut t = s.translation.clone();
        for (ti, di) in t.iter_mut().zip(&delta[k..]) {
            *ti += self.scale * di;
        }
        let off = &t - &self.center;
        let r = off.norm();
        if r > self.bound {
            t = &self.center + off * (self.bound / r);
        }
        Ok((rot, t))
    }

    fn motion(&self, s: &Placement, delta: &[f64]) -> Option<RigidMotion> {
        let (rot, t) = self.moved(s, delta).ok()?;
        RigidMotion::new(rot, t).ok()
    }

    fn hard_objective(&self, s: &Placement, delta: &[f64]) -> f64 {
        self.motion(s, delta)
            .and_then(|m| objective(self.cloud, self.fan, &m, MassMode::Hard).ok())
            .unwrap_or(f64::INFINITY)
    }
}

/// Exact search of the hard objective along random lines through a
/// placement. Along a line every boundary point changes cone at a predicted
/// parameter value (first order in the step), so the masses at every
/// reachable state follow from one sorted sweep over these events. The best
/// state is confirmed with a full evaluation before it is returned.
fn line_scan(
    problem: &MotionProblem<'_>,
    state: &Placement,
    best: f64,
    radius: f64,
    lines: usize,
    rng: &mut ChaCha8Rng,
) -> (Option<(Vec<f64>, f64)>, usize) {
    let Some(fan) = problem.fan.as_voronoi() else {
        return (None, 0);
    };
    let d = fan.dim();
    let k = problem.rotation_params();
    let n = problem.n_params();
    let zero = vec![0.0; n];
    let Some(motion) = problem.motion(state, &zero) else {
        return (None, 0);
    };
    let Ok(masses) = cone_masses(problem.cloud, problem.fan, &motion, MassMode::Hard) else {
        return (None, 0);
    };
    let masses = masses.values();
    let omega = motion.rotation();
    let t = motion.translation();
    let weights = problem.cloud.weights();
    let u = fan.plus_rows();
    let spin = (std::f64::consts::SQRT_2 * radius).exp_m1();

    // boundary points: label, weight, body coordinates, plus-dots
    let mut pts: Vec<(usize, f64, Vec<f64>, Vec<f64>)> = Vec::new();
    let mut frozen = vec![crate::measure::CompensatedSum::default(); 2 * d];
    let mut active = Vec::new();
    for (i, (label, margin, r)) in label_margins(problem.cloud, fan, &motion).into_iter().enumerate() {
        // dots move by at most ‖ω' − ω‖·|x − t| + |t' − t| inside the region
        if margin > 2.0 * (spin * r + radius * problem.scale) + 1e-9 {
            frozen[label].add(weights[i]);
            continue;
        }
        active.push(i);
        let x = problem.cloud.point(i);
        let y0: Vec<f64> = (0..d)
            .map(|j| (0..d).map(|r| omega[(r, j)] * (x[r] - t[r])).sum())
            .collect();
        let dots: Vec<f64> = (0..d).map(|g| (0..d).map(|j| u[g * d + j] * y0[j]).sum()).collect();
        pts.push((label, weights[i], y0, dots));
    }

    let frozen: Vec<f64> = frozen.iter().map(|s| s.value()).collect();
    let active = problem.cloud.subset(&active);
    let local_value = |delta: &[f64]| {
        let Some(m) = problem.motion(state, delta) else {
            return f64::INFINITY;
        };
        let Ok(mv) = cone_masses(&active, problem.fan, &m, MassMode::Hard) else {
            return f64::INFINITY;
        };
        let values: Vec<f64> = frozen.iter().zip(mv.values()).map(|(a, b)| a + b).collect();
        residual(&MassVector::from_labels(&values, MassMode::Hard)).norm_squared()
    };
    let value_of = |m: &[f64]| residual(&MassVector::from_labels(m, MassMode::Hard)).norm_squared();
    let mut evals = 0;
    let mut ties = 0u64;
    let mut plateau: Option<Vec<f64>> = None;
    let mut dy = vec![0.0; d];
    let mut events: [Vec<(f64, usize, usize, f64)>; 2] = [Vec::new(), Vec::new()];
    for _ in 0..lines {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= len);
        let wt = omega.transpose() * DVector::from_column_slice(&v[k..]);
        events[0].clear();
        events[1].clear();
        for (label, w, y0, dots) in &pts {
            // y(s) ≈ (I − s·A(v))·y0 − s·scale·ωᵀv_t
            dy.iter_mut().zip(wt.iter()).for_each(|(a, b)| *a = -problem.scale * b);
            let mut idx = 0;
            for a in 0..d {
                for b in a + 1..d {
                    dy[a] -= v[idx] * y0[b];
                    dy[b] += v[idx] * y0[a];
                    idx += 1;
                }
            }
            let rates: Vec<f64> = (0..d).map(|g| (0..d).map(|j| u[g * d + j] * dy[j]).sum()).collect();
            let dot = |l: usize| if l < d { dots[l] } else { -dots[l - d] };
            let rate = |l: usize| if l < d { rates[l] } else { -rates[l - d] };
            let (d0, r0) = (dot(*label), rate(*label));
            let mut fwd = (f64::INFINITY, usize::MAX);
            let mut bwd = (f64::INFINITY, usize::MAX);
            for l in (0..2 * d).filter(|l| l != label) {
                let dr = rate(l) - r0;
                if dr == 0.0 {
                    continue;
                }
                let s = (d0 - dot(l)) / dr;
                if s > 0.0 && s < fwd.0 {
                    fwd = (s, l);
                } else if s < 0.0 && -s < bwd.0 {
                    bwd = (-s, l);
                }
            }
            if fwd.0 <= radius {
                events[0].push((fwd.0, *label, fwd.1, *w));
            }
            if bwd.0 <= radius {
                events[1].push((bwd.0, *label, bwd.1, *w));
            }
        }
        let mut line_best = (best, 0.0);
        for (side, list) in events.iter_mut().enumerate() {
            list.sort_by(|a, b| a.0.total_cmp(&b.0));
            let sign = if side == 0 { 1.0 } else { -1.0 };
            let mut m = masses.clone();
            for (j, &(s, from, to, w)) in list.iter().enumerate() {
                m[from] -= w;
                m[to] += w;
                let value = value_of(&m);
                let next = list.get(j + 1).map_or(radius.min(2.0 * s), |e| e.0);
                let at = sign * 0.5 * (s + next);
                if value < line_best.0 {
                    line_best = (value, at);
                } else if value <= best * (1.0 + 1e-9) {
                    ties += 1;
                    if rng.random_range(0..ties) == 0 {
                        plateau = Some(v.iter().map(|x| x * at).collect());
                    }
                }
            }
        }
        evals += 1;
        if line_best.1 == 0.0 {
            continue;
        }
        let delta: Vec<f64> = v.iter().map(|x| x * line_best.1).collect();
        let value = local_value(&delta);
        if value < best * (1.0 - 1e-9) {
            return (Some((delta, value)), evals);
        }
    }
    // no descent: a random state of equal value keeps the search moving
    (plateau.map(|delta| (delta, best)), evals)
}

/// Polish of the hard residual. Voronoi fans use exact line scans, moving
/// sideways across plateaus when no line descends and cycling the
/// trust-region radius; other fans fall back to Nelder–Mead restarted around
/// the incumbent in shrinking regions.
fn polish(
    problem: &MotionProblem<'_>,
    mut state: Placement,
    opts: &SolveOptions,
    seed: u64,
    floor: f64,
) -> (Placement, usize) {
    const RADII: [f64; 3] = [2e-3, 5e-4, 8e-3];
    let n = problem.n_params();
    let zero = vec![0.0; n];
    let target = stop_value(opts.tolerance, floor);
    let mut best = problem.hard_objective(&state, &zero);
    let mut evals = 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if problem.fan.as_voronoi().is_some() {
        let mut round = 0;
        while best > target && evals < opts.polish_evaluations {
            let radius = RADII[round % RADII.len()];
            let lines = (opts.polish_evaluations - evals).min(64);
            let (step, used) = line_scan(problem, &state, best, radius, lines, &mut rng);
            evals += used;
            let Some((delta, value)) = step else {
                round += 1;
                continue;
            };
            let candidate = problem.retract(&state, &delta);
            let confirmed = problem.hard_objective(&candidate, &zero);
            evals += 1;
            if confirmed <= best * (1.0 + 1e-9) {
                state = candidate;
                if value >= best * (1.0 - 1e-9) {
                    round += 1;
                }
                best = best.min(confirmed);
            } else {
                round += 1;
            }
        }
        return (state, evals);
    }
    let mut radius = 5e-2;
    while best > target && evals < opts.polish_evaluations && radius > 1e-7 {
        let nm = NelderMeadOptions {
            max_evaluations: (opts.polish_evaluations - evals).min(200 * n),
            target,
            min_size: 1e-10,
        };
        let out = nelder_mead(
            |x| problem.hard_objective(&state, x),
            &zero,
            &vec![0.5 * radius; n],
            &nm,
        );
        evals += out.evaluations;
        if out.value < best * (1.0 - 1e-9) {
            let candidate = problem.retract(&state, &out.point);
            let value = problem.hard_objective(&candidate, &zero);
            evals += 1;
            if value < best * (1.0 - 1e-9) {
                state = candidate;
                best = value;
                continue;
            }
        }
        radius *= 0.25;
    }
    (state, evals)
}

impl LeastSquares for MotionProblem<'_> {
    type State = Placement;

    fn n_params(&self) -> usize {
        self.rotation_params() + self.center.len()
    }

    fn residual(&self, s: &Placement, delta: &[f64]) -> Option<Vec<f64>> {
        let m = self.motion(s, delta)?;
        let mv = cone_masses(self.cloud, self.fan, &m, self.mode).ok()?;
        Some(residual(&mv).values)
    }

    fn retract(&self, s: &Placement, delta: &[f64]) -> Placement {
        let (rot, t) = self.moved(s, delta).expect("delta has the right length");
        Placement {
            chart: RotationChart::new(rot).expect("chart output is special orthogonal"),
            translation: t,
        }
    }
}

/// Searches for a rigid motion that equipartitions the cloud.
///
/// Each start places the translation at the weighted cloud mean and the
/// rotation at a Haar draw, anneals the softmax sharpness through the
/// geometric schedule with Levenberg–Marquardt on the smoothed residual, and
/// finishes with a Nelder–Mead polish of the hard residual. Fans without a
/// Voronoi structure skip the smoothed stages. Non-convergence is reported
/// through [`SolveResult::converged`], never as an error.
pub fn solve(cloud: &PointCloud, fan: &dyn ConeClassifier, opts: &SolveOptions) -> Result<SolveResult> {
    let started = Instant::now();
    opts.validate()?;
    let d = fan.dim();
    if cloud.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: cloud.dim(),
        });
    }
    let (params, residuals) = degrees_of_freedom(d);
    assert!(params >= residuals, "motion group too small for the residual");
    let report = validate_fan(fan, FAN_CHECK_SAMPLES, opts.seed)?;
    if let Some((clause, msg)) = report.failures.first() {
        return Err(Error::DegenerateFan(format!("{clause}: {msg}")));
    }

    let eps = opts.epsilon.unwrap_or_else(|| default_epsilon(d));
    let support = cloud_support_bound(cloud, eps)?;
    let scale = support.radius.max(1e-12);
    let center = DVector::from_vec(support.center.clone());
    let bound = opts.translation_bound_factor * scale;

    let floor = match cloud.uniform_weight() {
        Some(_) => count_floor(d, cloud.len()),
        None => 0.0,
    };
    let run_start = |start: usize| -> Result<(StartTrace, Placement, MassVector, f64)> {
        let seed = start_seed(opts.seed, start);
        let mut state = Placement {
            chart: RotationChart::new(random_rotation(d, seed))?,
            translation: center.clone(),
        };
        let hard = MotionProblem {
            cloud,
            fan,
            mode: MassMode::Hard,
            center: center.clone(),
            bound,
            scale,
        };
        let zero = vec![0.0; hard.n_params()];
        let initial_hard = hard.hard_objective(&state, &zero).sqrt();
        let mut stages = Vec::new();
        if fan.as_voronoi().is_some() {
            for beta in opts.beta_schedule() {
                let problem = MotionProblem {
                    mode: MassMode::Soft(beta),
                    center: center.clone(),
                    ..hard
                };
                let out = levenberg_marquardt(
                    &problem,
                    state,
                    &LmOptions {
                        max_iterations: opts.max_iterations,
                        tolerance: 1e-13,
                        ..Default::default()
                    },
                );
                state = out.state;
                stages.push(StageTrace {
                    beta,
                    soft_residual: out.residual_norm,
                    iterations: out.iterations,
                });
            }
        }

        let (state, evals) = polish(&hard, state, opts, seed, floor);

        let motion = hard.motion(&state, &zero).expect("state is a valid motion");
        let masses = cone_masses(cloud, fan, &motion, MassMode::Hard)?;
        let norm = residual(&masses).norm();
        Ok((
            StartTrace {
                start,
                seed,
                initial_hard_residual: initial_hard,
                stages,
                polish_evaluations: evals,
                final_hard_residual: norm,
                converged: norm <= opts.tolerance,
            },
            state,
            masses,
            norm,
        ))
    };

    let mut outcomes = Vec::new();
    let mut next = 0;
    while next < opts.multistarts {
        let end = (next + START_BATCH).min(opts.multistarts);
        let batch: Vec<_> = (next..end).into_par_iter().map(run_start).collect();
        for b in batch {
            outcomes.push(b?);
        }
        next = end;
        let stop = stop_value(opts.tolerance, floor);
        if outcomes.iter().any(|o| o.0.converged || o.3 * o.3 <= stop) {
            break;
        }
    }

    let best = outcomes
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .3.total_cmp(&b.1 .3))
        .map(|(i, _)| i)
        .expect("at least one start");
    let trace: Vec<StartTrace> = outcomes.iter().map(|o| o.0.clone()).collect();
    let (t, state, masses, norm) = outcomes.swap_remove(best);
    let motion = RigidMotion::new(state.chart.base().clone(), state.translation)?;
    Ok(SolveResult {
        motion,
        masses_hard: masses,
        residual_norm: norm,
        count_floor: floor,
        converged: t.converged,
        best_start: t.start,
        certificate: None,
        trace,
        seed: opts.seed,
        elapsed_secs: started.elapsed().as_secs_f64(),
    })
}

/// Minimum oracle sample count for [`certify`].
pub const MIN_CERTIFY_SAMPLES: usize = 100_000;

/// Checks the solution against `n` fresh samples of the measure: every
/// oracle mass must lie within `max(tol, 4·stderr)` of `1/(2d)`.
pub fn certify(
    result: &SolveResult,
    measure: &Measure,
    fan: &dyn ConeClassifier,
    n: usize,
    seed: u64,
    tol: f64,
) -> Result<Certificate> {
    certify_motion(&result.motion, measure, fan, n, seed, tol)
}

pub fn certify_motion(
    motion: &RigidMotion,
    measure: &Measure,
    fan: &dyn ConeClassifier,
    n: usize,
    seed: u64,
    tol: f64,
) -> Result<Certificate> {
    if n < MIN_CERTIFY_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "certification needs at least {MIN_CERTIFY_SAMPLES} samples, got {n}"
        )));
    }
    let oracle = mc_oracle(measure, fan, motion, n, seed)?;
    let d = fan.dim();
    let target = 1.0 / (2 * d) as f64;
    let violations: Vec<(ConeLabel, f64, f64)> = oracle
        .masses
        .values()
        .iter()
        .zip(&oracle.std_errors)
        .enumerate()
        .filter_map(|(i, (&m, &se))| {
            let allowed = tol.max(4.0 * se);
            ((m - target).abs() > allowed).then(|| (ConeLabel::from_index(i, d), m, allowed))
        })
        .collect();
    Ok(Certificate {
        passed: violations.is_empty(),
        oracle,
        tolerance: tol,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exhaustive minimum over every split of `n` points into `2d` cones.
    fn brute_floor(d: usize, n: usize) -> f64 {
        fn walk(slot: usize, left: usize, counts: &mut Vec<usize>, d: usize, best: &mut f64, n: usize) {
            if slot == 2 * d - 1 {
                counts.push(left);
                let a: Vec<f64> = counts[..d].iter().map(|&c| c as f64 / n as f64).collect();
                let b: Vec<f64> = counts[d..].iter().map(|&c| c as f64 / n as f64).collect();
                *best = best.min(paired_residual(&a, &b).norm());
                counts.pop();
                return;
            }
            for c in 0..=left {
                counts.push(c);
                walk(slot + 1, left - c, counts, d, best, n);
                counts.pop();
            }
        }
        let mut best = f64::INFINITY;
        walk(0, n, &mut Vec::new(), d, &mut best, n);
        best
    }

    #[test]
    fn count_floor_matches_exhaustive_search() {
        for (d, n) in [(3, 12), (3, 13), (3, 14), (3, 16), (3, 17), (5, 13), (5, 16)] {
            let expect = brute_floor(d, n);
            assert!(
                (count_floor(d, n) - expect).abs() < 1e-14,
                "d={d} n={n}: {} vs {expect}",
                count_floor(d, n)
            );
        }
        assert_eq!(count_floor(3, 100_002), 0.0);
        assert!(count_floor(3, 100_000) > 0.0);
    }

    #[test]
    fn worked_example() {
        let mv = MassVector::new(vec![0.2, 0.2, 0.1], vec![0.2, 0.1, 0.2], MassMode::Hard).unwrap();
        let r = residual(&mv);
        let expect = [0.0, 0.1, -0.1, 0.1, 0.0];
        for (a, b) in r.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((r.norm_squared() - 0.03).abs() < 1e-15);
        assert_eq!(r.t_block().len(), 3);
        assert_eq!(r.s_block().len(), 2);
    }

    #[test]
    fn equipartition_has_zero_residual() {
        for d in [3, 5, 9] {
            let v = 1.0 / (2 * d) as f64;
            let mv = MassVector::new(vec![v; d], vec![v; d], MassMode::Hard).unwrap();
            assert_eq!(residual(&mv).norm(), 0.0);
        }
    }

    #[test]
    fn quotient_by_common_shift() {
        // shifting every s_g by the same amount with t_g fixed
        let a = vec![0.1, 0.3, 0.05];
        let b = vec![0.2, 0.25, 0.1];
        let r0 = residual(&MassVector::new(a.clone(), b.clone(), MassMode::Hard).unwrap());
        let a1: Vec<f64> = a.iter().map(|x| x + 0.01).collect();
        let b1: Vec<f64> = b.iter().map(|x| x + 0.01).collect();
        let r1 = residual(&MassVector::new(a1, b1, MassMode::Hard).unwrap());
        for (x, y) in r0.values().iter().zip(r1.values()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_configuration_objective() {
        // all mass in cone (g,+): the t-block gives 1, the s-differences give
        // 1 at either end of the enumeration and 2 in the middle
        let by_hand = [2.0, 3.0, 2.0];
        for g in 0..3 {
            let mut a = vec![0.0; 3];
            a[g] = 1.0;
            let mv = MassVector::new(a, vec![0.0; 3], MassMode::Hard).unwrap();
            assert_eq!(residual(&mv).norm_squared(), by_hand[g]);
        }
    }

    #[test]
    fn dof_and_schedule() {
        for d in 2..40 {
            let (p, r) = degrees_of_freedom(d);
            assert!(p >= r);
        }
        let o = SolveOptions::default();
        let s = o.beta_schedule();
        assert_eq!(s.first(), Some(&20.0));
        assert_eq!(s.last(), Some(&500.0));
        assert!(s.windows(2).all(|w| w[1] > w[0]));
        assert!(SolveOptions {
            beta_growth: 1.0,
            ..o.clone()
        }
        .validate()
        .is_err());
        assert!(SolveOptions {
            beta_start: 600.0,
            ..o.clone()
        }
        .validate()
        .is_err());
        assert!(SolveOptions { tolerance: 0.0, ..o }.validate().is_err());
    }
}
