//! Inscribing a regular crosspolytope in a smooth strictly convex body.
//!
//! For an interior point `p` and rotation `ω`, the rays `p ± a·ω e_g` leave
//! the body after lengths `ℓ⁺_g` and `ℓ⁻_g`. When all `2d` lengths agree, the
//! exit points are the vertices of a rotated, scaled copy of the standard
//! crosspolytope. The same residual as for cone masses measures the
//! disagreement.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::equipartition::{paired_residual, Residual};
use crate::error::{Error, Result};
use crate::group::GroupTable;
use crate::motion::{orthogonality_defect, random_rotation, RotationChart, ORTHO_TOL};
use crate::optim::{levenberg_marquardt, LeastSquares, LmOptions};

/// Interior margin kept by the solver: `γ(p − c) ≤ 1 − INTERIOR_MARGIN`.
pub const INTERIOR_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum BodyKind {
    Ball {
        radius: f64,
    },
    /// `{x : (x − c)ᵀ Q (x − c) ≤ 1}`.
    Ellipsoid {
        shape: DMatrix<f64>,
    },
    /// `{x : Σ ((x_i − c_i)/s_i)^q ≤ 1}` with even `q`.
    LqBall {
        scales: Vec<f64>,
        q: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexBody {
    center: Vec<f64>,
    kind: BodyKind,
}

fn check_center(center: &[f64]) -> Result<()> {
    if center.is_empty() {
        return Err(Error::InvalidParameter("body dimension must be positive".into()));
    }
    if center.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("body center".into()));
    }
    Ok(())
}

impl ConvexBody {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        check_center(&center)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(Self {
            center,
            kind: BodyKind::Ball { radius },
        })
    }

    /// Ellipsoid from its shape matrix, which must be symmetric positive
    /// definite.
    pub fn ellipsoid(center: Vec<f64>, shape: DMatrix<f64>) -> Result<Self> {
        check_center(&center)?;
        let d = center.len();
        if shape.nrows() != d || shape.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: shape.nrows(),
            });
        }
        if shape.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("ellipsoid shape".into()));
        }
        let asym = (&shape - shape.transpose()).amax();
        if asym > 1e-12 * shape.amax().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "ellipsoid shape is not symmetric (defect {asym:e})"
            )));
        }
        if shape.clone().cholesky().is_none() {
            return Err(Error::InvalidParameter(
                "ellipsoid shape is not positive definite".into(),
            ));
        }
        Ok(Self {
            center,
            kind: BodyKind::Ellipsoid { shape },
        })
    }

    /// Axis-aligned ellipsoid with the given semi-axes.
    pub fn ellipsoid_axes(center: Vec<f64>, semi_axes: &[f64]) -> Result<Self> {
        if semi_axes.len() != center.len() {
            return Err(Error::DimensionMismatch {
                expected: center.len(),
                got: semi_axes.len(),
            });
        }
        if semi_axes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidParameter("semi-axes must be positive".into()));
        }
        let diag = DVector::from_iterator(semi_axes.len(), semi_axes.iter().map(|a| 1.0 / (a * a)));
        Self::ellipsoid(center, DMatrix::from_diagonal(&diag))
    }

    pub fn lq_ball(center: Vec<f64>, scales: Vec<f64>, q: u32) -> Result<Self> {
        check_center(&center)?;
        if scales.len() != center.len() {
            return Err(Error::DimensionMismatch {
                expected: center.len(),
                got: scales.len(),
            });
        }
        if scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidParameter("lq scales must be positive".into()));
        }
        if q < 2 || !q.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "lq exponent must be even and at least 2, got {q}"
            )));
        }
        Ok(Self {
            center,
            kind: BodyKind::LqBall { scales, q },
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    /// Gauge of a displacement from the center.
    pub fn gauge(&self, u: &[f64]) -> f64 {
        match &self.kind {
            BodyKind::Ball { radius } => u.iter().map(|v| v * v).sum::<f64>().sqrt() / radius,
            BodyKind::Ellipsoid { shape } => {
                let v = DVector::from_column_slice(u);
                v.dot(&(shape * &v)).max(0.0).sqrt()
            }
            BodyKind::LqBall { scales, q } => {
                // factor out the largest coordinate to avoid overflow
                let m = u.iter().zip(scales).map(|(v, s)| (v / s).abs()).fold(0.0, f64::max);
                if m == 0.0 {
                    return 0.0;
                }
                let sum: f64 = u.iter().zip(scales).map(|(v, s)| (v / (s * m)).powi(*q as i32)).sum();
                m * sum.powf(1.0 / *q as f64)
            }
        }
    }

    /// Gauge of a point, `γ(x − c)`.
    pub fn gauge_at(&self, x: &[f64]) -> f64 {
        let u: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        self.gauge(&u)
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Distance `a > 0` along `u` from the interior point `p` to the boundary,
    /// in units of `|u|`.
    pub fn ray_length(&self, p: &[f64], u: &[f64]) -> Result<f64> {
        self.check_len(p)?;
        self.check_len(u)?;
        let w: Vec<f64> = p.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let g = self.gauge(&w);
        if !(g < 1.0) {
            return Err(Error::NotInterior(g));
        }
        if u.iter().all(|v| *v == 0.0) || u.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "ray direction must be finite and nonzero".into(),
            ));
        }
        let quadratic = |a2: f64, b: f64, c: f64| {
            // positive root of a2·a² + 2b·a + c with c < 0
            let disc = (b * b - a2 * c).sqrt();
            if b >= 0.0 {
                -c / (b + disc)
            } else {
                (disc - b) / a2
            }
        };
        Ok(match &self.kind {
            BodyKind::Ball { radius } => {
                let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
                quadratic(dot(u, u), dot(&w, u), dot(&w, &w) - radius * radius)
            }
            BodyKind::Ellipsoid { shape } => {
                let wv = DVector::from_column_slice(&w);
                let uv = DVector::from_column_slice(u);
                let qu = shape * &uv;
                quadratic(uv.dot(&qu), wv.dot(&qu), wv.dot(&(shape * &wv)) - 1.0)
            }
            BodyKind::LqBall { .. } => {
                let at = |a: f64| {
                    let x: Vec<f64> = w.iter().zip(u).map(|(wi, ui)| wi + a * ui).collect();
                    self.gauge(&x)
                };
                // γ(w + a·u) ≥ a·γ(u) − γ(w) for a symmetric gauge
                let mut hi = (1.0 + g) / self.gauge(u);
                while at(hi) < 1.0 {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                loop {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi {
                        break;
                    }
                    if at(mid) < 1.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        })
    }
}

impl fmt::Display for ConvexBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        match &self.kind {
            BodyKind::Ball { radius } => write!(f, "ball:{}:{radius}", list(&self.center)),
            BodyKind::Ellipsoid { shape } => {
                let rows: Vec<String> = (0..shape.nrows())
                    .map(|i| list(&shape.row(i).iter().copied().collect::<Vec<_>>()))
                    .collect();
                write!(f, "ellipsoid:{}:{}", list(&self.center), rows.join(";"))
            }
            BodyKind::LqBall { scales, q } => write!(f, "lq:{}:{}:{q}", list(&self.center), list(scales)),
        }
    }
}

/// Ray lengths `(ℓ⁺, ℓ⁻)` along `±ω e_g` from `p`.
pub fn ray_lengths(body: &ConvexBody, p: &[f64], rotation: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = body.dim();
    if rotation.nrows() != d || rotation.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: rotation.nrows(),
        });
    }
    let mut plus = Vec::with_capacity(d);
    let mut minus = Vec::with_capacity(d);
    for g in 0..d {
        let col: Vec<f64> = rotation.column(g).iter().copied().collect();
        let neg: Vec<f64> = col.iter().map(|v| -v).collect();
        plus.push(body.ray_length(p, &col)?);
        minus.push(body.ray_length(p, &neg)?);
    }
    Ok((plus, minus))
}

/// Residual of the ray lengths: `ℓ⁺_g − ℓ⁻_g`, then consecutive differences
/// of `ℓ⁺_g + ℓ⁻_g`.
pub fn inscription_residual(
    body: &ConvexBody,
    p: &[f64],
    rotation: &DMatrix<f64>,
    table: &GroupTable,
) -> Result<Residual> {
    if table.order() != body.dim() {
        return Err(Error::DimensionMismatch {
            expected: table.order(),
            got: body.dim(),
        });
    }
    let (plus, minus) = ray_lengths(body, p, rotation)?;
    Ok(paired_residual(&plus, &minus))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InscriptionOptions {
    pub multistarts: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for InscriptionOptions {
    fn default() -> Self {
        Self {
            multistarts: 8,
            max_iterations: 200,
            tolerance: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InscriptionResult {
    pub center: Vec<f64>,
    pub rotation: DMatrix<f64>,
    pub scale: f64,
    /// `p + a·ω e_g` for every `g`, then `p − a·ω e_g`.
    pub vertices: Vec<Vec<f64>>,
    pub residual_norm: f64,
    pub converged: bool,
    pub best_start: usize,
    pub starts_run: usize,
    pub iterations: usize,
    pub seed: u64,
}

#[derive(Clone)]
struct Frame {
    chart: RotationChart,
    p: Vec<f64>,
}

struct InscriptionProblem<'a> {
    body: &'a ConvexBody,
    /// Translation unit: the smallest center-to-boundary distance along an axis.
    scale: f64,
}

impl InscriptionProblem<'_> {
    fn moved(&self, s: &Frame, delta: &[f64]) -> Option<(DMatrix<f64>, Vec<f64>)> {
        let k = s.chart.param_count();
        let rot = s.chart.eval(&delta[..k]).ok()?;
        let p: Vec<f64> = s.p.iter().zip(&delta[k..]).map(|(a, b)| a + self.scale * b).collect();
        if self.body.gauge_at(&p) > 1.0 - INTERIOR_MARGIN {
            return None;
        }
        Some((rot, p))
    }
}

impl LeastSquares for InscriptionProblem<'_> {
    type State = Frame;

    fn n_params(&self) -> usize {
        let d = self.body.dim();
        d * (d - 1) / 2 + d
    }

    fn residual(&self, s: &Frame, delta: &[f64]) -> Option<Vec<f64>> {
        let (rot, p) = self.moved(s, delta)?;
        let (plus, minus) = ray_lengths(self.body, &p, &rot).ok()?;
        Some(paired_residual(&plus, &minus).values().to_vec())
    }

    fn retract(&self, s: &Frame, delta: &[f64]) -> Frame {
        let (rot, p) = self.moved(s, delta).expect("accepted steps are interior");
        Frame {
            chart: RotationChart::new(rot).expect("chart output is special orthogonal"),
            p,
        }
    }

    fn fd_step(&self) -> f64 {
        1e-7
    }
}

/// Searches for an interior point and rotation with equal ray lengths.
///
/// Starts place `p` at the body center with a Haar rotation and run damped
/// least squares on the ray-length residual; steps that would leave the
/// interior are halved. The first start reaching the tolerance is returned,
/// otherwise the best start, flagged as not converged.
pub fn solve_inscription(
    body: &ConvexBody,
    table: &GroupTable,
    opts: &InscriptionOptions,
) -> Result<InscriptionResult> {
    let d = body.dim();
    if table.order() != d {
        return Err(Error::DimensionMismatch {
            expected: table.order(),
            got: d,
        });
    }
    if opts.multistarts == 0 || !(opts.tolerance > 0.0) {
        return Err(Error::InvalidParameter(
            "need positive multistarts and tolerance".into(),
        ));
    }
    let scale = (0..d)
        .flat_map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            let neg: Vec<f64> = e.iter().map(|v| -v).collect();
            [body.ray_length(body.center(), &e), body.ray_length(body.center(), &neg)]
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let problem = InscriptionProblem { body, scale };
    let lm = LmOptions {
        max_iterations: opts.max_iterations,
        tolerance: opts.tolerance * 1e-3,
        ..Default::default()
    };

    let mut best: Option<(usize, Frame, f64, usize)> = None;
    let mut starts_run = 0;
    for start in 0..opts.multistarts {
        starts_run += 1;
        let frame = Frame {
            chart: RotationChart::new(random_rotation(d, opts.seed.wrapping_add(start as u64)))?,
            p: body.center().to_vec(),
        };
        let out = levenberg_marquardt(&problem, frame, &lm);
        if best.as_ref().is_none_or(|b| out.residual_norm < b.2) {
            best = Some((start, out.state, out.residual_norm, out.iterations));
        }
        if out.residual_norm <= opts.tolerance {
            break;
        }
    }
    let (best_start, frame, residual_norm, iterations) = best.expect("at least one start");
    let rotation = frame.chart.base().clone();
    let (plus, minus) = ray_lengths(body, &frame.p, &rotation)?;
    let scale = plus.iter().chain(&minus).sum::<f64>() / (2 * d) as f64;
    let vertex = |g: usize, sign: f64| -> Vec<f64> {
        frame
            .p
            .iter()
            .enumerate()
            .map(|(i, pi)| pi + sign * scale * rotation[(i, g)])
            .collect()
    };
    let vertices = (0..d)
        .map(|g| vertex(g, 1.0))
        .chain((0..d).map(|g| vertex(g, -1.0)))
        .collect();
    Ok(InscriptionResult {
        center: frame.p.clone(),
        rotation,
        scale,
        vertices,
        residual_norm,
        converged: residual_norm <= opts.tolerance,
        best_start,
        starts_run,
        iterations,
        seed: opts.seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InscriptionCheck {
    pub gauges: Vec<f64>,
    pub orthogonality_defect: f64,
    pub determinant: f64,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Checks that every vertex lies on the boundary within `tol` in gauge, that
/// the rotation is special orthogonal and the scale positive.
pub fn verify_inscription(body: &ConvexBody, r: &InscriptionResult, tol: f64) -> InscriptionCheck {
    let gauges: Vec<f64> = r.vertices.iter().map(|v| body.gauge_at(v)).collect();
    let defect = orthogonality_defect(&r.rotation);
    let det = r.rotation.determinant();
    let mut failures = Vec::new();
    if r.vertices.len() != 2 * body.dim() {
        failures.push(format!(
            "expected {} vertices, got {}",
            2 * body.dim(),
            r.vertices.len()
        ));
    }
    for (i, g) in gauges.iter().enumerate() {
        if !((g - 1.0).abs() <= tol) {
            failures.push(format!("vertex {i} has gauge {g}"));
        }
    }
    if !(defect <= ORTHO_TOL) || !((det - 1.0).abs() <= ORTHO_TOL) {
        failures.push(format!("rotation defect {defect:e}, determinant {det}"));
    }
    if !(r.scale > 0.0) {
        failures.push(format!("scale {} is not positive", r.scale));
    }
    InscriptionCheck {
        gauges,
        orthogonality_defect: defect,
        determinant: det,
        passed: failures.is_empty(),
        failures,
    }
}
