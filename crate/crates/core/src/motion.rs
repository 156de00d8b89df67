//! Orientation-preserving rigid motions `x ↦ ωx + t` and exponential charts
//! on `SO(d)`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Tolerance on `‖ωᵀω − I‖` and `|det ω − 1|` for a valid rotation.
pub const ORTHO_TOL: f64 = 1e-10;

/// Truncation tolerance for the matrix exponential series.
const EXPM_TOL: f64 = 1e-12;

/// Frobenius norm of `ωᵀω − I`.
pub fn orthogonality_defect(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    (m.transpose() * m - DMatrix::<f64>::identity(n, n)).norm()
}

pub fn is_special_orthogonal(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && orthogonality_defect(m) <= tol && (m.determinant() - 1.0).abs() <= tol
}

/// Nearest orthogonal matrix in Frobenius norm (`U Vᵀ` from the SVD). If the
/// input has negative determinant the result is a reflection; callers that
/// start from a near-rotation never hit that case.
pub fn polar_project(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    u * vt
}

/// Skew-symmetric matrix with `A[i][j] = θ_(i,j) = −A[j][i]`, planes `(i, j)`
/// with `i < j` in row-major order.
pub fn skew_from_params(d: usize, theta: &[f64]) -> Result<DMatrix<f64>> {
    let n = d * (d - 1) / 2;
    if theta.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: theta.len(),
        });
    }
    let mut a = DMatrix::zeros(d, d);
    let mut idx = 0;
    for i in 0..d {
        for j in i + 1..d {
            a[(i, j)] = theta[idx];
            a[(j, i)] = -theta[idx];
            idx += 1;
        }
    }
    Ok(a)
}

/// Matrix exponential by scaling and squaring with a Taylor series.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.norm();
    let mut s = 0u32;
    if norm > 0.5 {
        s = (norm / 0.5).log2().ceil() as u32;
    }
    let scaled = a / 2f64.powi(s as i32);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..40 {
        term = &term * &scaled / k as f64;
        sum += &term;
        if term.norm() < EXPM_TOL * 1e-4 {
            break;
        }
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Local coordinates `θ ↦ base · exp(A(θ))` around a base rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationChart {
    base: DMatrix<f64>,
}

impl RotationChart {
    pub fn new(base: DMatrix<f64>) -> Result<Self> {
        if !is_special_orthogonal(&base, ORTHO_TOL) {
            return Err(Error::NotOrthogonal(orthogonality_defect(&base)));
        }
        Ok(Self { base })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            base: DMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.base.nrows()
    }

    /// Number of chart parameters, `d(d−1)/2`.
    pub fn param_count(&self) -> usize {
        let d = self.dim();
        d * (d - 1) / 2
    }

    pub fn base(&self) -> &DMatrix<f64> {
        &self.base
    }

    pub fn eval(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        let a = skew_from_params(self.dim(), theta)?;
        let m = &self.base * expm(&a);
        Ok(if orthogonality_defect(&m) > ORTHO_TOL {
            polar_project(&m)
        } else {
            m
        })
    }

    /// Re-centers the chart at `chart(θ)`.
    pub fn recenter(&mut self, theta: &[f64]) -> Result<()> {
        self.base = self.eval(theta)?;
        Ok(())
    }
}

/// `x ↦ ωx + t` with `ω ∈ SO(d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidMotion {
    rotation: DMatrix<f64>,
    translation: DVector<f64>,
}

impl RigidMotion {
    pub fn new(rotation: DMatrix<f64>, translation: DVector<f64>) -> Result<Self> {
        Self::with_tolerance(rotation, translation, ORTHO_TOL)
    }

    /// Like [`RigidMotion::new`] with a caller-chosen orthogonality tolerance.
    /// The stored rotation is polar-projected when the defect is nonzero but
    /// within tolerance.
    pub fn with_tolerance(rotation: DMatrix<f64>, translation: DVector<f64>, tol: f64) -> Result<Self> {
        if !rotation.is_square() {
            return Err(Error::DimensionMismatch {
                expected: rotation.nrows(),
                got: rotation.ncols(),
            });
        }
        if translation.len() != rotation.nrows() {
            return Err(Error::DimensionMismatch {
                expected: rotation.nrows(),
                got: translation.len(),
            });
        }
        if rotation.iter().chain(translation.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("rigid motion".into()));
        }
        if !is_special_orthogonal(&rotation, tol) {
            return Err(Error::NotOrthogonal(
                orthogonality_defect(&rotation).max((rotation.determinant() - 1.0).abs()),
            ));
        }
        let rotation = if orthogonality_defect(&rotation) > ORTHO_TOL {
            polar_project(&rotation)
        } else {
            rotation
        };
        Ok(Self { rotation, translation })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            rotation: DMatrix::identity(d, d),
            translation: DVector::zeros(d),
        }
    }

    pub fn translation_only(t: DVector<f64>) -> Self {
        let d = t.len();
        Self {
            rotation: DMatrix::identity(d, d),
            translation: t,
        }
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn rotation(&self) -> &DMatrix<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &DVector<f64> {
        &self.translation
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            })
        }
    }

    /// `ωx + t`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let v = &self.rotation * DVector::from_column_slice(x) + &self.translation;
        Ok(v.iter().copied().collect())
    }

    /// `ωᵀ(x − t)`.
    pub fn inverse_apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let v = self
            .rotation
            .tr_mul(&(DVector::from_column_slice(x) - &self.translation));
        Ok(v.iter().copied().collect())
    }

    /// `self ∘ first`: `x ↦ ω₂(ω₁x + t₁) + t₂`.
    pub fn compose(&self, first: &RigidMotion) -> RigidMotion {
        RigidMotion {
            rotation: &self.rotation * &first.rotation,
            translation: &self.rotation * &first.translation + &self.translation,
        }
    }

    pub fn inverse(&self) -> RigidMotion {
        RigidMotion {
            rotation: self.rotation.transpose(),
            translation: -(self.rotation.tr_mul(&self.translation)),
        }
    }

    /// Replaces the rotation by `ω·m` (used for orbit relabeling `ωP_h`).
    pub fn right_multiplied(&self, m: &DMatrix<f64>) -> RigidMotion {
        RigidMotion {
            rotation: &self.rotation * m,
            translation: self.translation.clone(),
        }
    }
}

/// Haar-distributed rotation: QR of a Gaussian matrix with the sign fix on
/// the triangular diagonal, then one column flipped if the determinant is −1.
pub fn random_rotation(d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_rotation_with(d, &mut rng)
}

pub fn random_rotation_with<R: rand::Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    assert!(d >= 2, "random_rotation requires d >= 2");
    let g = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}
