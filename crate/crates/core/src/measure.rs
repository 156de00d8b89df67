//! Probability measures, their weighted point-cloud discretizations, and the
//! `2d` cone masses `a_g = μ(ρ(g(C)))`, `b_g = μ(ρ(−g(C)))`.

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fan::{label_from_plus_dots, softmax_from_plus_dots, ConeClassifier, ConeLabel, Fan};
use crate::motion::RigidMotion;

/// Added to every certification seed so oracle draws never reuse a solver
/// stream.
pub const ORACLE_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

/// Points per reduction chunk. Fixed so that sums do not depend on the
/// thread count.
const CHUNK: usize = 4096;

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub covariance: DMatrix<f64>,
    chol: DMatrix<f64>,
}

impl GaussianComponent {
    pub fn new(weight: f64, mean: Vec<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: covariance.nrows(),
            });
        }
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mixture weight must be positive, got {weight}"
            )));
        }
        if mean.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gaussian component".into()));
        }
        let asym = (&covariance - covariance.transpose()).norm();
        if asym > 1e-12 * covariance.norm().max(1.0) {
            return Err(Error::InvalidParameter("covariance must be symmetric".into()));
        }
        let chol = covariance
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidParameter("covariance must be positive definite".into()))?
            .l();
        Ok(Self {
            weight,
            mean,
            covariance,
            chol,
        })
    }

    /// Isotropic component `N(mean, σ² I)`.
    pub fn isotropic(weight: f64, mean: Vec<f64>, sigma: f64) -> Result<Self> {
        let d = mean.len();
        Self::new(weight, mean, DMatrix::identity(d, d) * (sigma * sigma))
    }
}

/// An absolutely continuous probability measure, or an empirical one loaded
/// from file.
#[derive(Debug, Clone)]
pub enum Measure {
    UniformBall { center: Vec<f64>, radius: f64 },
    GaussianMixture(Vec<GaussianComponent>),
    PointCloudFile { path: String, cloud: PointCloud },
}

impl Measure {
    pub fn uniform_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        if center.is_empty() || center.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("ball center".into()));
        }
        Ok(Measure::UniformBall { center, radius })
    }

    pub fn mixture(components: Vec<GaussianComponent>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::InvalidParameter("mixture needs a component".into()));
        };
        let d = first.mean.len();
        if let Some(c) = components.iter().find(|c| c.mean.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: c.mean.len(),
            });
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(Measure::GaussianMixture(components))
    }

    /// Loads a CSV point cloud (see [`PointCloud::from_csv`]).
    pub fn from_csv(path: impl AsRef<Path>, d: usize) -> Result<Self> {
        let cloud = PointCloud::from_csv(path.as_ref(), d)?;
        Ok(Measure::PointCloudFile {
            path: path.as_ref().display().to_string(),
            cloud,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Measure::UniformBall { center, .. } => center.len(),
            Measure::GaussianMixture(c) => c[0].mean.len(),
            Measure::PointCloudFile { cloud, .. } => cloud.dim(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Measure::UniformBall { .. } => "uniform_ball",
            Measure::GaussianMixture(_) => "gaussian_mixture",
            Measure::PointCloudFile { .. } => "point_cloud_file",
        }
    }

    /// Mean of the measure.
    pub fn mean(&self) -> Vec<f64> {
        match self {
            Measure::UniformBall { center, .. } => center.clone(),
            Measure::GaussianMixture(cs) => {
                let d = cs[0].mean.len();
                let mut m = vec![0.0; d];
                for c in cs {
                    for (mi, ci) in m.iter_mut().zip(&c.mean) {
                        *mi += c.weight * ci;
                    }
                }
                m
            }
            Measure::PointCloudFile { cloud, .. } => cloud.mean(),
        }
    }

    /// Draws a deterministic weighted cloud of `n` points. File measures
    /// return the loaded cloud unchanged.
    pub fn sample(&self, n: usize, seed: u64) -> Result<PointCloud> {
        if n == 0 {
            return Err(Error::InvalidParameter("sample count must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.dim();
        let mut points = Vec::with_capacity(n * d);
        match self {
            Measure::UniformBall { center, radius } => {
                let mut dir = vec![0.0; d];
                for _ in 0..n {
                    let r = loop {
                        dir.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
                        let r = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                        if r > 0.0 {
                            break r;
                        }
                    };
                    let u: f64 = rng.random();
                    let s = radius * u.powf(1.0 / d as f64) / r;
                    points.extend(dir.iter().zip(center).map(|(v, c)| c + s * v));
                }
            }
            Measure::GaussianMixture(cs) => {
                let mut z = DVector::zeros(d);
                for _ in 0..n {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut pick = cs.len() - 1;
                    for (i, c) in cs.iter().enumerate() {
                        acc += c.weight;
                        if u < acc {
                            pick = i;
                            break;
                        }
                    }
                    let c = &cs[pick];
                    z.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
                    let x = &c.chol * &z;
                    points.extend(x.iter().zip(&c.mean).map(|(v, m)| v + m));
                }
            }
            Measure::PointCloudFile { cloud, .. } => {
                let mut c = cloud.clone();
                c.provenance.seed = Some(seed);
                return Ok(c);
            }
        }
        Ok(PointCloud {
            dim: d,
            weights: vec![1.0 / n as f64; n],
            points,
            provenance: Provenance {
                measure: self.kind().into(),
                sampler: "chacha8-pseudorandom".into(),
                seed: Some(seed),
                n,
            },
        })
    }

    /// Weighted bootstrap of a file cloud, or fresh sampling otherwise.
    fn fresh_sample(&self, n: usize, seed: u64) -> Result<PointCloud> {
        match self {
            Measure::PointCloudFile { cloud, .. } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let cdf: Vec<f64> = cloud
                    .weights
                    .iter()
                    .scan(0.0, |acc, w| {
                        *acc += w;
                        Some(*acc)
                    })
                    .collect();
                let d = cloud.dim;
                let mut points = Vec::with_capacity(n * d);
                for _ in 0..n {
                    let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
                    let i = cdf.partition_point(|&c| c <= u).min(cloud.len() - 1);
                    points.extend_from_slice(cloud.point(i));
                }
                Ok(PointCloud {
                    dim: d,
                    weights: vec![1.0 / n as f64; n],
                    points,
                    provenance: Provenance {
                        measure: self.kind().into(),
                        sampler: "weighted-bootstrap".into(),
                        seed: Some(seed),
                        n,
                    },
                })
            }
            _ => self.sample(n, seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub measure: String,
    pub sampler: String,
    pub seed: Option<u64>,
    pub n: usize,
}

/// `N` points in `R^d` with positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    pub provenance: Provenance,
}

impl PointCloud {
    /// Builds a cloud; weights are renormalized to sum to one.
    pub fn new(dim: usize, points: Vec<f64>, weights: Option<Vec<f64>>) -> Result<Self> {
        if dim == 0 || !points.len().is_multiple_of(dim) || points.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: points.len(),
            });
        }
        let n = points.len() / dim;
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("point coordinates".into()));
        }
        let weights = match weights {
            None => vec![1.0 / n as f64; n],
            Some(w) => {
                if w.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: w.len(),
                    });
                }
                if w.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("point weights".into()));
                }
                if w.iter().any(|&v| v <= 0.0) {
                    return Err(Error::InvalidParameter("point weights must be positive".into()));
                }
                let mut s = CompensatedSum::default();
                w.iter().for_each(|&v| s.add(v));
                let total = s.value();
                w.into_iter().map(|v| v / total).collect()
            }
        };
        Ok(Self {
            dim,
            points,
            weights,
            provenance: Provenance {
                measure: "explicit".into(),
                sampler: "none".into(),
                seed: None,
                n,
            },
        })
    }

    /// Reads `d` coordinate columns and an optional trailing weight column.
    /// A non-numeric first row is treated as a header.
    pub fn from_csv(path: &Path, d: usize) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut weighted = None;
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.iter().all(|f| f.is_empty()) {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(|f| f.parse::<f64>()).collect();
            let vals = match parsed {
                Ok(v) => v,
                Err(_) if line == 0 => continue,
                Err(e) => return Err(Error::Parse(format!("{}:{}: {e}", path.display(), line + 1))),
            };
            let has_w = match vals.len() {
                n if n == d => false,
                n if n == d + 1 => true,
                n => {
                    return Err(Error::Parse(format!(
                        "{}:{}: expected {d} or {} columns, found {n}",
                        path.display(),
                        line + 1,
                        d + 1
                    )))
                }
            };
            if *weighted.get_or_insert(has_w) != has_w {
                return Err(Error::Parse(format!(
                    "{}:{}: inconsistent weight column",
                    path.display(),
                    line + 1
                )));
            }
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("{}:{}", path.display(), line + 1)));
            }
            points.extend_from_slice(&vals[..d]);
            if has_w {
                weights.push(vals[d]);
            }
        }
        let n = points.len() / d.max(1);
        let mut cloud = Self::new(d, points, weighted.unwrap_or(false).then_some(weights))?;
        cloud.provenance = Provenance {
            measure: "point_cloud_file".into(),
            sampler: "file".into(),
            seed: None,
            n,
        };
        Ok(cloud)
    }

    /// Writes `x0..x{d-1},w` rows with a header.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..self.dim).map(|i| format!("x{i}")).collect();
        header.push("w".into());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.point(i).iter().map(|v| v.to_string()).collect();
            row.push(self.weights[i].to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The common weight when all points weigh the same.
    pub fn uniform_weight(&self) -> Option<f64> {
        let w0 = *self.weights.first()?;
        self.weights.iter().all(|&w| w == w0).then_some(w0)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut acc = vec![CompensatedSum::default(); self.dim];
        for (i, w) in self.weights.iter().enumerate() {
            for (a, x) in acc.iter_mut().zip(self.point(i)) {
                a.add(w * x);
            }
        }
        acc.iter().map(|a| a.value()).collect()
    }

    /// The points at `idx` with their weights left as they are (not
    /// renormalized).
    pub(crate) fn subset(&self, idx: &[usize]) -> PointCloud {
        let mut points = Vec::with_capacity(idx.len() * self.dim);
        let mut weights = Vec::with_capacity(idx.len());
        for &i in idx {
            points.extend_from_slice(self.point(i));
            weights.push(self.weights[i]);
        }
        PointCloud {
            dim: self.dim,
            points,
            weights,
            provenance: self.provenance.clone(),
        }
    }

    /// Applies `x ↦ f(x)` to every point, keeping weights.
    pub fn map_points(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> PointCloud {
        let mut points = Vec::with_capacity(self.points.len());
        for i in 0..self.len() {
            points.extend(f(self.point(i)));
        }
        PointCloud {
            dim: self.dim,
            points,
            weights: self.weights.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MassMode {
    Hard,
    Soft(f64),
}

impl fmt::Display for MassMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MassMode::Hard => f.write_str("hard"),
            MassMode::Soft(b) => write!(f, "soft({b})"),
        }
    }
}

/// Masses of the `d` positive cones (`a`) and `d` negative cones (`b`).
#[derive(Debug, Clone, PartialEq)]
pub struct MassVector {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub mode: MassMode,
}

impl MassVector {
    pub fn new(a: Vec<f64>, b: Vec<f64>, mode: MassMode) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        Ok(Self { a, b, mode })
    }

    /// Builds from `2d` values in label order.
    pub fn from_labels(values: &[f64], mode: MassMode) -> Self {
        let d = values.len() / 2;
        Self {
            a: values[..d].to_vec(),
            b: values[d..].to_vec(),
            mode,
        }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn get(&self, l: ConeLabel) -> f64 {
        match l.sign {
            crate::fan::Sign::Plus => self.a[l.element],
            crate::fan::Sign::Minus => self.b[l.element],
        }
    }

    /// All `2d` masses in label order.
    pub fn values(&self) -> Vec<f64> {
        self.a.iter().chain(&self.b).copied().collect()
    }

    pub fn total(&self) -> f64 {
        let mut s = CompensatedSum::default();
        self.a.iter().chain(&self.b).for_each(|&v| s.add(v));
        s.value()
    }

    /// Largest `|m − 1/(2d)|` over all cones.
    pub fn max_deviation(&self) -> f64 {
        let target = 1.0 / (2 * self.dim()) as f64;
        self.a
            .iter()
            .chain(&self.b)
            .map(|m| (m - target).abs())
            .fold(0.0, f64::max)
    }
}

/// Cone masses of the cloud under the moved fan: `x` lies in `ρ(g(C))` iff
/// `ωᵀ(x − t)` lies in `g(C)`.
pub fn cone_masses(
    cloud: &PointCloud,
    fan: &dyn ConeClassifier,
    motion: &RigidMotion,
    mode: MassMode,
) -> Result<MassVector> {
    let d = fan.dim();
    if cloud.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: cloud.dim(),
        });
    }
    if motion.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: motion.dim(),
        });
    }
    let voronoi = fan.as_voronoi();
    if let MassMode::Soft(beta) = mode {
        if voronoi.is_none() {
            return Err(Error::InvalidParameter("soft membership requires a Voronoi fan".into()));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sharpness must be positive, got {beta}"
            )));
        }
    }
    // rows of ωᵀ, flattened; for Voronoi fans the rows of B = U ωᵀ so that
    // the positive dots are B(x − t) directly
    let rot = motion.rotation();
    let rt: Vec<f64> = (0..d * d).map(|k| rot[(k % d, k / d)]).collect();
    let fused: Option<Vec<f64>> = voronoi.map(|f| {
        let u = f.plus_rows();
        let mut b = vec![0.0; d * d];
        for g in 0..d {
            for i in 0..d {
                b[g * d + i] = (0..d).map(|j| u[g * d + j] * rt[j * d + i]).sum();
            }
        }
        b
    });
    let t: Vec<f64> = motion.translation().iter().copied().collect();
    let uniform = cloud.uniform_weight();

    let partials: Vec<Vec<CompensatedSum>> = cloud
        .points
        .par_chunks(CHUNK * d)
        .zip(cloud.weights.par_chunks(CHUNK))
        .map(|(pts, ws)| {
            let mut acc = vec![CompensatedSum::default(); 2 * d];
            let mut counts = vec![0usize; 2 * d];
            let mut diff = vec![0.0; d];
            let mut dots = vec![0.0; d];
            let mut y = vec![0.0; d];
            let mut soft = vec![0.0; 2 * d];
            // chunk-local plain sums; chunks are combined with compensation
            let mut plain = vec![0.0; 2 * d];
            let mat = fused.as_deref().unwrap_or(&rt);
            for (p, &w) in ws.iter().enumerate() {
                let x = &pts[p * d..p * d + d];
                for i in 0..d {
                    diff[i] = x[i] - t[i];
                }
                for g in 0..d {
                    let row = &mat[g * d..g * d + d];
                    let mut acc = 0.0;
                    for i in 0..d {
                        acc += row[i] * diff[i];
                    }
                    dots[g] = acc;
                }
                match mode {
                    MassMode::Hard => {
                        let label = if fused.is_some() {
                            label_from_plus_dots(&dots)
                        } else {
                            y.copy_from_slice(&dots);
                            fan.classify(&y)
                        };
                        if uniform.is_some() {
                            counts[label.index(d)] += 1;
                        } else {
                            acc[label.index(d)].add(w);
                        }
                    }
                    MassMode::Soft(beta) => {
                        let norm = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
                        softmax_from_plus_dots(&dots, norm, beta, &mut soft);
                        for (a, s) in plain.iter_mut().zip(&soft) {
                            *a += w * s;
                        }
                    }
                }
            }
            for (a, &v) in acc.iter_mut().zip(&plain) {
                a.add(v);
            }
            if let Some(w) = uniform {
                for (a, &c) in acc.iter_mut().zip(&counts) {
                    if c > 0 {
                        a.add(c as f64 * w);
                    }
                }
            }
            acc
        })
        .collect();

    let mut total = vec![CompensatedSum::default(); 2 * d];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.add(p.sum);
            t.add(p.comp);
        }
    }
    let vals: Vec<f64> = total.iter().map(|s| s.value()).collect();
    Ok(MassVector::from_labels(&vals, mode))
}

/// Per point: hard label index, gap between the largest and second largest
/// of the `2d` dot products `⟨ωᵀ(x − t), u⟩`, and `|x − t|`.
pub(crate) fn label_margins(cloud: &PointCloud, fan: &Fan, motion: &RigidMotion) -> Vec<(usize, f64, f64)> {
    let d = fan.dim();
    let rot = motion.rotation();
    let u = fan.plus_rows();
    let mut b = vec![0.0; d * d];
    for g in 0..d {
        for i in 0..d {
            b[g * d + i] = (0..d).map(|j| u[g * d + j] * rot[(i, j)]).sum();
        }
    }
    let t: Vec<f64> = motion.translation().iter().copied().collect();
    cloud
        .points
        .par_chunks(CHUNK * d)
        .flat_map_iter(|pts| {
            let b = &b;
            let t = &t;
            pts.chunks_exact(d).map(move |x| {
                let diff: Vec<f64> = x.iter().zip(t).map(|(a, c)| a - c).collect();
                let dots: Vec<f64> = (0..d)
                    .map(|g| {
                        let row = &b[g * d..g * d + d];
                        let mut acc = 0.0;
                        for i in 0..d {
                            acc += row[i] * diff[i];
                        }
                        acc
                    })
                    .collect();
                let label = label_from_plus_dots(&dots).index(d);
                let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                for v in dots.iter().flat_map(|&v| [v, -v]) {
                    if v > first {
                        second = first;
                        first = v;
                    } else if v > second {
                        second = v;
                    }
                }
                let r = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
                (label, first - second, r)
            })
        })
        .collect()
}

/// Independent Monte Carlo estimate of the cone masses of the measure.
#[derive(Debug, Clone)]
pub struct OracleEstimate {
    pub masses: MassVector,
    /// Binomial standard errors `√(m(1−m)/N)`, label order.
    pub std_errors: Vec<f64>,
    pub samples: usize,
    /// Seed as supplied; the stream actually used is `seed + ORACLE_SEED_OFFSET`.
    pub seed: u64,
}

/// Hard-mode cone masses from `n` fresh samples drawn with the oracle seed
/// stream.
pub fn mc_oracle(
    measure: &Measure,
    fan: &dyn ConeClassifier,
    motion: &RigidMotion,
    n: usize,
    seed: u64,
) -> Result<OracleEstimate> {
    let cloud = measure.fresh_sample(n, seed.wrapping_add(ORACLE_SEED_OFFSET))?;
    let masses = cone_masses(&cloud, fan, motion, MassMode::Hard)?;
    let std_errors = masses
        .values()
        .iter()
        .map(|m| (m * (1.0 - m) / n as f64).max(0.0).sqrt())
        .collect();
    Ok(OracleEstimate {
        masses,
        std_errors,
        samples: n,
        seed,
    })
}

/// A ball holding at least `1 − ε` of the mass.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportBound {
    pub center: Vec<f64>,
    pub radius: f64,
    pub epsilon: f64,
    /// Mass found outside the ball by the estimate (0 when exact).
    pub outside: f64,
}

/// Default tail mass for support bounds: `min(0.01, 1/(4d))`.
pub fn default_epsilon(d: usize) -> f64 {
    0.01f64.min(1.0 / (4 * d) as f64)
}

fn check_epsilon(eps: f64, d: usize) -> Result<()> {
    if eps > 0.0 && eps < 1.0 / (2 * d) as f64 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "support tail mass must lie in (0, 1/(2d)) = (0, {}), got {eps}",
            1.0 / (2 * d) as f64
        )))
    }
}

/// Smallest ball about the weighted mean covering `1 − ε` of the weight.
pub fn cloud_support_bound(cloud: &PointCloud, eps: f64) -> Result<SupportBound> {
    check_epsilon(eps, cloud.dim())?;
    let center = cloud.mean();
    let mut dist: Vec<(f64, f64)> = (0..cloud.len())
        .map(|i| {
            let r = cloud
                .point(i)
                .iter()
                .zip(&center)
                .map(|(x, c)| (x - c) * (x - c))
                .sum::<f64>()
                .sqrt();
            (r, cloud.weights[i])
        })
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut acc = CompensatedSum::default();
    let mut radius = dist.last().map(|p| p.0).unwrap_or(0.0);
    for &(r, w) in &dist {
        acc.add(w);
        if acc.value() >= 1.0 - eps {
            radius = r;
            break;
        }
    }
    let inside: f64 = dist.iter().filter(|p| p.0 <= radius).map(|p| p.1).sum();
    Ok(SupportBound {
        center,
        radius,
        epsilon: eps,
        outside: (1.0 - inside).max(0.0),
    })
}

/// Ball about the measure's mean carrying at least `1 − ε` of its mass:
/// exact for uniform balls, an empirical quantile of `2·10^5` samples for
/// mixtures, and the weight order statistic for file clouds.
pub fn support_bound(measure: &Measure, eps: f64) -> Result<SupportBound> {
    check_epsilon(eps, measure.dim())?;
    match measure {
        Measure::UniformBall { center, radius } => Ok(SupportBound {
            center: center.clone(),
            radius: *radius,
            epsilon: eps,
            outside: 0.0,
        }),
        Measure::GaussianMixture(_) => {
            let cloud = measure.sample(200_000, 0x5eed_b0d5)?;
            let center = measure.mean();
            let mut r: Vec<f64> = (0..cloud.len())
                .map(|i| {
                    cloud
                        .point(i)
                        .iter()
                        .zip(&center)
                        .map(|(x, c)| (x - c) * (x - c))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect();
            r.sort_by(f64::total_cmp);
            let k = (((1.0 - eps) * r.len() as f64).ceil() as usize).clamp(1, r.len());
            let radius = r[k - 1];
            Ok(SupportBound {
                center,
                radius,
                epsilon: eps,
                outside: (r.len() - k) as f64 / r.len() as f64,
            })
        }
        Measure::PointCloudFile { cloud, .. } => cloud_support_bound(cloud, eps),
    }
}
