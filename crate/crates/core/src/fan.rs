//! Group-invariant fans of `2d` cones `{±g(C)}`.
//!
//! The main constructor is the Voronoi fan of an orbit `{±g(v)}`: the cone of
//! label `(g, ±)` is the set of `x` whose dot product with `±g(v)/|v|` is
//! maximal among all `2d` directions. Arbitrary fans can be supplied as a
//! [`ConeOracle`]; those support hard membership only.

use std::fmt;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::group::{Element, GroupTable, PermutationAction};

/// Minimum pairwise angle (radians) between distinct fan directions.
pub const ANGLE_TOL: f64 = 1e-6;

/// Minimum sample count accepted by [`validate_fan`].
pub const MIN_VALIDATION_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Cone label `(g, ±)`. The canonical enumeration lists all `+` labels by
/// element index, then all `−` labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConeLabel {
    pub sign: Sign,
    pub element: Element,
}

impl ConeLabel {
    pub fn new(element: Element, sign: Sign) -> Self {
        Self { sign, element }
    }

    pub fn plus(element: Element) -> Self {
        Self::new(element, Sign::Plus)
    }

    pub fn minus(element: Element) -> Self {
        Self::new(element, Sign::Minus)
    }

    /// Position in the canonical enumeration of `2d` labels.
    pub fn index(&self, d: usize) -> usize {
        match self.sign {
            Sign::Plus => self.element,
            Sign::Minus => d + self.element,
        }
    }

    pub fn from_index(i: usize, d: usize) -> Self {
        if i < d {
            Self::plus(i)
        } else {
            Self::minus(i - d)
        }
    }
}

impl fmt::Display for ConeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.sign {
            Sign::Plus => '+',
            Sign::Minus => '-',
        };
        write!(f, "({},{})", self.element, s)
    }
}

/// Anything that assigns each nonzero vector of `R^d` to one of `2d` cones.
pub trait ConeClassifier: Sync {
    fn table(&self) -> &GroupTable;

    fn dim(&self) -> usize {
        self.table().order()
    }

    fn classify(&self, y: &[f64]) -> ConeLabel;

    /// The Voronoi fan behind this classifier, when there is one. Smoothed
    /// membership is only available through it.
    fn as_voronoi(&self) -> Option<&Fan> {
        None
    }
}

/// Voronoi fan of the orbit `{±g(v)}`.
#[derive(Debug, Clone)]
pub struct Fan {
    table: GroupTable,
    generator: Vec<f64>,
    /// `d` unit vectors `g(v)/|v|`, row-major `d × d`; row `g` is `u[g,+]`.
    plus: Vec<f64>,
}

impl Fan {
    /// Builds the Voronoi fan of `{±g(v)}`.
    pub fn voronoi(table: &GroupTable, v: &[f64]) -> Result<Self> {
        let d = table.order();
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("fan generator".into()));
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("fan generator v must be nonzero".into()));
        }
        let diag: f64 = v.iter().sum();
        if diag <= 0.0 {
            return Err(Error::CommonRayViolation(diag));
        }
        let action = PermutationAction::new(table);
        let unit: Vec<f64> = v.iter().map(|x| x / norm).collect();
        let mut plus = Vec::with_capacity(d * d);
        for g in table.elements() {
            plus.extend(action.act(g, &unit)?);
        }

        // all 2d directions must be pairwise separated
        let mut dirs: Vec<Vec<f64>> = plus.chunks(d).map(|r| r.to_vec()).collect();
        dirs.extend(plus.chunks(d).map(|r| r.iter().map(|x| -x).collect::<Vec<_>>()));
        let mut min_angle = f64::INFINITY;
        for i in 0..dirs.len() {
            for j in i + 1..dirs.len() {
                let chord = dirs[i]
                    .iter()
                    .zip(&dirs[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let angle = 2.0 * (0.5 * chord).min(1.0).asin();
                min_angle = min_angle.min(angle);
            }
        }
        if min_angle <= ANGLE_TOL {
            return Err(Error::DegenerateFan(format!(
                "orbit directions coincide (minimum pairwise angle {min_angle:.3e} rad)"
            )));
        }

        Ok(Self {
            table: table.clone(),
            generator: v.to_vec(),
            plus,
        })
    }

    pub fn generator(&self) -> &[f64] {
        &self.generator
    }

    /// Unit direction `u[label]`.
    pub fn direction(&self, label: ConeLabel) -> Vec<f64> {
        let d = self.dim();
        let row = &self.plus[label.element * d..(label.element + 1) * d];
        match label.sign {
            Sign::Plus => row.to_vec(),
            Sign::Minus => row.iter().map(|x| -x).collect(),
        }
    }

    /// All `2d` directions as columns of a `d × 2d` matrix in label order.
    pub fn direction_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, 2 * d, |r, c| {
            let l = ConeLabel::from_index(c, d);
            let v = self.plus[l.element * d + r];
            match l.sign {
                Sign::Plus => v,
                Sign::Minus => -v,
            }
        })
    }

    /// Rows `u[g,+]`, flattened `d × d`.
    pub(crate) fn plus_rows(&self) -> &[f64] {
        &self.plus
    }

    /// Dot products `⟨y, u[g,+]⟩` for all `g`.
    #[inline]
    pub(crate) fn plus_dots(&self, y: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for (g, o) in out.iter_mut().enumerate() {
            let row = &self.plus[g * d..(g + 1) * d];
            *o = row.iter().zip(y).map(|(a, b)| a * b).sum();
        }
    }

    /// Argmax of `⟨y, u⟩` over the `2d` directions; ties go to the smallest
    /// label in the canonical enumeration.
    pub fn cone_index(&self, y: &[f64]) -> ConeLabel {
        let mut dots = vec![0.0; self.dim()];
        self.plus_dots(y, &mut dots);
        label_from_plus_dots(&dots)
    }

    /// Softmax weights `exp(β⟨ŷ,u⟩)/Σ exp(β⟨ŷ,u'⟩)` over the `2d` labels,
    /// `ŷ = y/|y|`. The zero vector gets uniform weights.
    pub fn soft_membership(&self, y: &[f64], beta: f64) -> Result<Vec<f64>> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sharpness must be positive, got {beta}"
            )));
        }
        let d = self.dim();
        let mut dots = vec![0.0; d];
        self.plus_dots(y, &mut dots);
        let norm = y.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut out = vec![0.0; 2 * d];
        softmax_from_plus_dots(&dots, norm, beta, &mut out);
        Ok(out)
    }
}

/// Hard label from the `d` positive dot products; negatives are their negation.
#[inline]
pub(crate) fn label_from_plus_dots(dots: &[f64]) -> ConeLabel {
    let mut imax = 0;
    let mut imin = 0;
    for (g, &v) in dots.iter().enumerate().skip(1) {
        if v > dots[imax] {
            imax = g;
        }
        if v < dots[imin] {
            imin = g;
        }
    }
    if dots[imax] >= -dots[imin] {
        ConeLabel::plus(imax)
    } else {
        ConeLabel::minus(imin)
    }
}

/// Writes softmax weights for all `2d` labels from the positive dots of an
/// unnormalized `y` with norm `norm`.
#[inline]
pub(crate) fn softmax_from_plus_dots(dots: &[f64], norm: f64, beta: f64, out: &mut [f64]) {
    let d = dots.len();
    if norm == 0.0 {
        out.iter_mut().for_each(|w| *w = 1.0 / (2 * d) as f64);
        return;
    }
    let scale = beta / norm;
    let peak = dots.iter().fold(0.0f64, |m, v| m.max(v.abs())) * scale;
    let mut total = 0.0;
    // terms below e^-50 relative to the largest are dropped
    let weight = |z: f64| if z < -50.0 { 0.0 } else { z.exp() };
    for (g, &v) in dots.iter().enumerate() {
        let p = weight(scale * v - peak);
        let m = weight(-scale * v - peak);
        out[g] = p;
        out[d + g] = m;
        total += p + m;
    }
    out.iter_mut().for_each(|w| *w /= total);
}

impl ConeClassifier for Fan {
    fn table(&self) -> &GroupTable {
        &self.table
    }

    fn classify(&self, y: &[f64]) -> ConeLabel {
        self.cone_index(y)
    }

    fn as_voronoi(&self) -> Option<&Fan> {
        Some(self)
    }
}

type ClassifyFn = dyn Fn(&[f64]) -> ConeLabel + Send + Sync;

/// A fan given only through its membership function.
pub struct ConeOracle {
    table: GroupTable,
    classify: Box<ClassifyFn>,
}

impl ConeOracle {
    pub fn new<F>(table: &GroupTable, classify: F) -> Self
    where
        F: Fn(&[f64]) -> ConeLabel + Send + Sync + 'static,
    {
        Self {
            table: table.clone(),
            classify: Box::new(classify),
        }
    }
}

impl fmt::Debug for ConeOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConeOracle")
            .field("d", &self.table.order())
            .finish_non_exhaustive()
    }
}

impl ConeClassifier for ConeOracle {
    fn table(&self) -> &GroupTable {
        &self.table
    }

    fn classify(&self, y: &[f64]) -> ConeLabel {
        (self.classify)(y)
    }
}

/// Which validity condition a fan failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FanClause {
    Partition,
    NonDegenerate,
    CommonRay,
    Uniqueness,
    Equivariance,
    ScaleInvariance,
}

impl fmt::Display for FanClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FanClause::Partition => "partition",
            FanClause::NonDegenerate => "non-degeneracy",
            FanClause::CommonRay => "common-ray",
            FanClause::Uniqueness => "uniqueness",
            FanClause::Equivariance => "equivariance",
            FanClause::ScaleInvariance => "scale-invariance",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub samples: usize,
    pub seed: u64,
    /// Fraction of uniform sphere samples per label, canonical order.
    pub fractions: Vec<f64>,
    pub failures: Vec<(FanClause, String)>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn failed(&self, clause: FanClause) -> bool {
        self.failures.iter().any(|(c, _)| *c == clause)
    }
}

fn sphere_point<R: rand::Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 1e-300 {
            return x.into_iter().map(|v| v / n).collect();
        }
    }
}

fn angle_to_diagonal(y: &[f64]) -> f64 {
    let d = y.len() as f64;
    let n = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let c = y.iter().sum::<f64>() / (n * d.sqrt());
    c.clamp(-1.0, 1.0).acos()
}

/// Unit vector at angle `eps` from unit `base`, in a random tangent direction.
fn perturb<R: rand::Rng>(base: &[f64], eps: f64, rng: &mut R) -> Vec<f64> {
    let d = base.len();
    let mut w = sphere_point(d, rng);
    let proj: f64 = w.iter().zip(base).map(|(a, b)| a * b).sum();
    w.iter_mut().zip(base).for_each(|(a, b)| *a -= proj * b);
    let n = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    base.iter()
        .zip(&w)
        .map(|(b, t)| eps.cos() * b + eps.sin() * t / n)
        .collect()
}

/// Sampling-based validation of the fan hypotheses: every direction gets a
/// label, every cone has positive solid angle, the diagonal is a common ray
/// of the positive cones and no other sampled ray is, and labels are
/// equivariant and scale invariant.
pub fn validate_fan(f: &dyn ConeClassifier, n: usize, seed: u64) -> Result<ValidationReport> {
    if n < MIN_VALIDATION_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "validation needs at least {MIN_VALIDATION_SAMPLES} samples, got {n}"
        )));
    }
    let table = f.table();
    let d = table.order();
    let action = PermutationAction::new(table);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();

    let mut counts = vec![0usize; 2 * d];
    let mut bad_labels = 0usize;
    let mut equivariance_misses = 0usize;
    let mut scale_misses = 0usize;
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let y = sphere_point(d, &mut rng);
        let l = f.classify(&y);
        if l.element >= d {
            bad_labels += 1;
            continue;
        }
        counts[l.index(d)] += 1;
        if i < 10_000 {
            let h = i % d;
            let hy = action.act(h, &y)?;
            if f.classify(&hy) != ConeLabel::new(table.mul(h, l.element), l.sign) {
                equivariance_misses += 1;
            }
            let lambda = if i % 2 == 0 { 0.25 } else { 8.0 };
            let sy: Vec<f64> = y.iter().map(|v| v * lambda).collect();
            if f.classify(&sy) != l {
                scale_misses += 1;
            }
        }
        samples.push(y);
    }
    let fractions: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();

    if bad_labels > 0 {
        failures.push((
            FanClause::Partition,
            format!("{bad_labels} samples received an out-of-range label"),
        ));
    }
    let empty: Vec<String> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == 0)
        .map(|(i, _)| ConeLabel::from_index(i, d).to_string())
        .collect();
    if !empty.is_empty() {
        failures.push((
            FanClause::NonDegenerate,
            format!("cones with zero sampled mass: {}", empty.join(" ")),
        ));
    }
    if equivariance_misses > 0 {
        failures.push((
            FanClause::Equivariance,
            format!("{equivariance_misses} samples violate label equivariance"),
        ));
    }
    if scale_misses > 0 {
        failures.push((
            FanClause::ScaleInvariance,
            format!("{scale_misses} samples change label under positive scaling"),
        ));
    }

    let diag: Vec<f64> = vec![1.0 / (d as f64).sqrt(); d];
    match f.as_voronoi() {
        Some(fan) => {
            let mut dots = vec![0.0; d];
            fan.plus_dots(&diag, &mut dots);
            let top = dots.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v.abs()));
            let spread = dots.iter().map(|v| top - v).fold(0.0f64, f64::max);
            if spread > 1e-12 {
                failures.push((
                    FanClause::CommonRay,
                    format!("diagonal misses a positive cone by {spread:.3e}"),
                ));
            }
            // {y : ⟨y, u_g⟩ equal for all g} is the diagonal line iff the
            // differences u_g − u_0 span its orthogonal complement
            let diffs = DMatrix::from_fn(d.saturating_sub(1).max(1), d, |r, c| {
                if d == 1 {
                    0.0
                } else {
                    fan.plus[(r + 1) * d + c] - fan.plus[c]
                }
            });
            let sv = diffs.singular_values();
            let rank = sv.iter().filter(|&&s| s > 1e-9).count();
            if rank + 1 < d {
                failures.push((
                    FanClause::Uniqueness,
                    format!("positive cones share a {}-dimensional family of rays", d - rank),
                ));
            }
            let mut shared = 0usize;
            for y in &samples {
                if angle_to_diagonal(y) <= 1e-3 {
                    continue;
                }
                fan.plus_dots(y, &mut dots);
                let hi = dots.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v.abs()));
                let lo = dots.iter().fold(f64::INFINITY, |m, &v| m.min(v));
                if hi - lo <= 1e-12 {
                    shared += 1;
                }
            }
            if shared > 0 {
                failures.push((
                    FanClause::Uniqueness,
                    format!("{shared} sampled rays off the diagonal lie in every positive cone"),
                ));
            }
        }
        None => {
            let probes = 50 * d;
            let mut seen = vec![false; d];
            let mut negative = 0;
            for _ in 0..probes {
                let y = perturb(&diag, 1e-4, &mut rng);
                let l = f.classify(&y);
                match l.sign {
                    Sign::Plus if l.element < d => seen[l.element] = true,
                    _ => negative += 1,
                }
            }
            if negative > 0 || seen.iter().any(|s| !s) {
                failures.push((
                    FanClause::CommonRay,
                    format!(
                        "near the diagonal: {negative} negative labels, {} positive cones unseen",
                        seen.iter().filter(|s| !**s).count()
                    ),
                ));
            }
            let mut shared = 0usize;
            for y in samples.iter().take(500) {
                if angle_to_diagonal(y) <= 1e-3 {
                    continue;
                }
                let mut hit = vec![false; d];
                for _ in 0..4 * d {
                    let l = f.classify(&perturb(y, 1e-4, &mut rng));
                    if l.sign == Sign::Plus && l.element < d {
                        hit[l.element] = true;
                    }
                }
                if hit.iter().all(|&h| h) {
                    shared += 1;
                }
            }
            if shared > 0 {
                failures.push((
                    FanClause::Uniqueness,
                    format!("{shared} sampled rays off the diagonal touch every positive cone"),
                ));
            }
        }
    }

    Ok(ValidationReport {
        samples: n,
        seed,
        fractions,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z3() -> GroupTable {
        GroupTable::new(3, 1).unwrap()
    }

    #[test]
    fn cross_fan_labels() {
        let t = z3();
        let f = Fan::voronoi(&t, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(f.cone_index(&[5.0, 1.0, -1.0]), ConeLabel::plus(0));
        assert_eq!(f.cone_index(&[1.0, 1.0, 1.0]), ConeLabel::plus(0));
        assert_eq!(f.cone_index(&[0.0, -5.0, 0.0]), ConeLabel::minus(1));
        assert_eq!(f.cone_index(&[0.0, 0.0, 0.0]), ConeLabel::plus(0));
        // cone (0,+) is {x0 >= |x1|, x0 >= |x2|}
        assert_eq!(f.cone_index(&[2.0, -1.9, 1.9]), ConeLabel::plus(0));
        assert_eq!(f.cone_index(&[2.0, -2.1, 1.9]), ConeLabel::minus(1));
        assert_eq!(f.direction(ConeLabel::minus(2)), vec![0.0, 0.0, -1.0]);
    }

    #[test]
    fn constructor_errors() {
        let t = z3();
        assert!(matches!(
            Fan::voronoi(&t, &[1.0, 1.0, 1.0]),
            Err(Error::DegenerateFan(_))
        ));
        assert!(matches!(
            Fan::voronoi(&t, &[-1.0, 0.0, 0.0]),
            Err(Error::CommonRayViolation(_))
        ));
        assert!(matches!(
            Fan::voronoi(&t, &[0.0, 0.0, 0.0]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            Fan::voronoi(&t, &[1.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn soft_membership_limits() {
        let t = z3();
        let f = Fan::voronoi(&t, &[1.0, 0.0, 0.0]).unwrap();
        let w = f.soft_membership(&[0.3, -0.2, 0.9], 1e-9).unwrap();
        assert!(w.iter().all(|v| (v - 1.0 / 6.0).abs() < 1e-9));
        let w = f.soft_membership(&[2.0, 2.0, 2.0], 7.0).unwrap();
        assert!((w[0] - w[1]).abs() < 1e-15 && (w[1] - w[2]).abs() < 1e-15);
        let w = f.soft_membership(&[0.0; 3], 7.0).unwrap();
        assert!(w.iter().all(|v| (v - 1.0 / 6.0).abs() < 1e-15));
        assert!(f.soft_membership(&[1.0; 3], 0.0).is_err());

        // deep inside (0,+): direct softmax evaluation as oracle
        let y = [1.0, 0.1, -0.2];
        let n = (1.0f64 + 0.01 + 0.04).sqrt();
        let dots = [1.0 / n, 0.1 / n, -0.2 / n, -1.0 / n, -0.1 / n, 0.2 / n];
        let z: f64 = dots.iter().map(|v| (200.0 * v).exp()).sum();
        let oracle: Vec<f64> = dots.iter().map(|v| (200.0 * v).exp() / z).collect();
        let w = f.soft_membership(&y, 200.0).unwrap();
        for (a, b) in w.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w[0] > 0.99);
    }

    #[test]
    fn validates_cross_fan() {
        let t = z3();
        let f = Fan::voronoi(&t, &[1.0, 0.0, 0.0]).unwrap();
        let r = validate_fan(&f, 60_000, 1).unwrap();
        assert!(r.is_valid(), "{:?}", r.failures);
        let se = (1.0 / 6.0 * 5.0 / 6.0 / 60_000f64).sqrt();
        for fr in &r.fractions {
            assert!((fr - 1.0 / 6.0).abs() < 4.0 * se);
        }
        assert!(validate_fan(&f, 100, 1).is_err());
    }

    #[test]
    fn validates_skewed_fan() {
        let t = z3();
        let f = Fan::voronoi(&t, &[1.0, 0.2, -0.2]).unwrap();
        let r = validate_fan(&f, 20_000, 2).unwrap();
        assert!(r.is_valid(), "{:?}", r.failures);
        assert!(r.fractions.iter().all(|&x| x > 0.0));
        assert!((r.fractions.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn subgroup_fixed_generator_is_degenerate() {
        // v depends only on the first digit, so the second factor fixes it
        let t = GroupTable::new(3, 2).unwrap();
        let v: Vec<f64> = (0..9).map(|i| if i % 3 == 0 { 2.0 } else { 0.5 }).collect();
        assert!(matches!(Fan::voronoi(&t, &v), Err(Error::DegenerateFan(_))));
    }

    #[test]
    fn detects_non_unique_common_ray() {
        // generator with a vanishing Fourier mode (character (1,2)) but
        // trivial stabilizer: the positive cones share a 3-dimensional face
        let t = GroupTable::new(3, 2).unwrap();
        let tau = std::f64::consts::TAU / 3.0;
        let v: Vec<f64> = (0..9)
            .map(|i| {
                let (a, b) = ((i % 3) as f64, (i / 3) as f64);
                1.5 + (tau * a).cos() + (tau * b).cos() + (tau * (a + b)).cos()
            })
            .collect();
        let f = Fan::voronoi(&t, &v).unwrap();
        let r = validate_fan(&f, 10_000, 5).unwrap();
        assert!(r.failed(FanClause::Uniqueness), "{:?}", r.failures);
        assert!(!r.failed(FanClause::CommonRay));
    }

    #[test]
    fn oracle_fans() {
        let t = z3();
        let fan = Fan::voronoi(&t, &[1.0, 0.3, 0.0]).unwrap();
        let good = ConeOracle::new(&t, move |y| fan.cone_index(y));
        let r = validate_fan(&good, 10_000, 3).unwrap();
        assert!(r.is_valid(), "{:?}", r.failures);

        // labels by the largest coordinate only, ignoring the cyclic shift
        let bad = ConeOracle::new(&t, |y: &[f64]| {
            if y[0] >= 0.0 {
                ConeLabel::plus(0)
            } else if y[1] >= 0.0 {
                ConeLabel::plus(1)
            } else {
                ConeLabel::minus(2)
            }
        });
        let r = validate_fan(&bad, 10_000, 3).unwrap();
        assert!(!r.is_valid());
        assert!(r.failed(FanClause::Equivariance));
        assert!(r.failed(FanClause::NonDegenerate));
    }

    #[test]
    fn label_enumeration() {
        for i in 0..10 {
            assert_eq!(ConeLabel::from_index(i, 5).index(5), i);
        }
        assert!(ConeLabel::plus(4) < ConeLabel::minus(0));
        assert_eq!(ConeLabel::minus(2).to_string(), "(2,-)");
    }
}
