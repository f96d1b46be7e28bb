//! Toy distributions: two moons, two concentric circles, and isotropic
//! Gaussians of any dimension.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Moons,
    Circles,
    GaussianNd,
}

fn default_n() -> usize {
    2000
}
fn default_noise() -> f64 {
    0.05
}
fn default_dim() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_noise")]
    pub noise: f64,
    /// Only meaningful for `gaussian_nd`; moons and circles are always 2D.
    #[serde(default = "default_dim")]
    pub dim: usize,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self::moons(default_n(), default_noise())
    }
}

impl DatasetSpec {
    pub fn moons(n: usize, noise: f64) -> Self {
        Self { kind: DatasetKind::Moons, n, noise, dim: 2 }
    }

    pub fn circles(n: usize, noise: f64) -> Self {
        Self { kind: DatasetKind::Circles, n, noise, dim: 2 }
    }

    pub fn gaussian(n: usize, dim: usize) -> Self {
        Self { kind: DatasetKind::GaussianNd, n, noise: 0.0, dim }
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            DatasetKind::Moons | DatasetKind::Circles => 2,
            DatasetKind::GaussianNd => self.dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("dataset size must be >= 1".into()));
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return Err(Error::InvalidArgument(format!("noise must be >= 0, got {}", self.noise)));
        }
        if self.kind == DatasetKind::GaussianNd && self.dim == 0 {
            return Err(Error::InvalidArgument("gaussian_nd needs dim >= 1".into()));
        }
        Ok(())
    }
}

/// Row-major points with a component label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dim: usize,
    pub points: Vec<f64>,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// `x0,x1[,label]` (or `x0..x{d-1}`).
    pub fn write_csv<W: Write>(&self, w: W, with_labels: bool) -> std::io::Result<()> {
        write_points_csv(w, &self.points, self.dim, with_labels.then_some(&self.labels[..]))
    }
}

pub fn points_header(dim: usize) -> String {
    (0..dim).map(|j| format!("x{j}")).collect::<Vec<_>>().join(",")
}

pub fn write_points_csv<W: Write>(
    mut w: W,
    points: &[f64],
    dim: usize,
    labels: Option<&[u8]>,
) -> std::io::Result<()> {
    let mut header = points_header(dim);
    if labels.is_some() {
        header.push_str(",label");
    }
    writeln!(w, "{header}")?;
    for (i, row) in points.chunks_exact(dim).enumerate() {
        let mut line = row.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        if let Some(l) = labels {
            line.push_str(&format!(",{}", l[i]));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Draws `spec.n` points. Moons: outer arc `(cos a, sin a)` and inner arc
/// `(1 - cos a, 0.5 - sin a)` with `a ~ U[0, pi]`. Circles: radii 1 and 0.5 with
/// `a ~ U[0, 2 pi)`. The first component gets `ceil(n/2)` points and comes
/// first. Gaussian noise of std `spec.noise` is added per coordinate.
pub fn generate(spec: &DatasetSpec, rng: &mut Rng) -> Result<Dataset> {
    spec.validate()?;
    let n = spec.n;
    let first = n.div_ceil(2);
    let dim = spec.dim();
    let mut points = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    match spec.kind {
        DatasetKind::GaussianNd => {
            points.extend((0..n * dim).map(|_| rng.normal()));
            labels.resize(n, 0);
        }
        DatasetKind::Moons | DatasetKind::Circles => {
            for i in 0..n {
                let outer = i < first;
                let (x, y) = match spec.kind {
                    DatasetKind::Moons => {
                        let a = rng.uniform_range(0.0, std::f64::consts::PI);
                        let (s, c) = a.sin_cos();
                        if outer {
                            (c, s)
                        } else {
                            (1.0 - c, 0.5 - s)
                        }
                    }
                    _ => {
                        let a = rng.uniform_range(0.0, std::f64::consts::TAU);
                        let (s, c) = a.sin_cos();
                        let r = if outer { 1.0 } else { 0.5 };
                        (r * c, r * s)
                    }
                };
                points.push(x);
                points.push(y);
                labels.push(u8::from(!outer));
            }
            if spec.noise > 0.0 {
                for p in &mut points {
                    *p += spec.noise * rng.normal();
                }
            }
        }
    }
    Ok(Dataset { dim, points, labels })
}

/// Per-axis affine map to zero mean and unit variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalization {
    pub fn identity(dim: usize) -> Self {
        Self { mean: vec![0.0; dim], std: vec![1.0; dim] }
    }

    /// Population statistics of `points`; a zero spread is replaced by 1.
    pub fn fit(points: &[f64], dim: usize) -> Self {
        let n = (points.len() / dim) as f64;
        let mut mean = vec![0.0; dim];
        for row in points.chunks_exact(dim) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for row in points.chunks_exact(dim) {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).map(|s| if s > 0.0 { s } else { 1.0 }).collect();
        Self { mean, std }
    }

    pub fn apply(&self, points: &mut [f64]) {
        let d = self.mean.len();
        for row in points.chunks_exact_mut(d) {
            for j in 0..d {
                row[j] = (row[j] - self.mean[j]) / self.std[j];
            }
        }
    }

    pub fn invert(&self, points: &mut [f64]) {
        let d = self.mean.len();
        for row in points.chunks_exact_mut(d) {
            for j in 0..d {
                row[j] = row[j] * self.std[j] + self.mean[j];
            }
        }
    }
}
