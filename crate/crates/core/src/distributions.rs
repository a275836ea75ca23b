//! Synthetic instance generators: uniform, Gaussian mixture, diagonal band
//! and clustered uniform.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_to_unit_square, Point, TspInstance};
use crate::seed::{derive_seed, rng_from_seed};
use crate::{Error, Result};

/// Kind-specific generation parameters. Defaults match what dataset
/// manifests record when no flags are given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    Uniform,
    GaussianMixture {
        min_modes: usize,
        max_modes: usize,
        /// Side of the square the mode centers are drawn from.
        extent: f64,
        spread: f64,
    },
    Diagonal {
        band_width: f64,
        jitter: f64,
    },
    ClusteredUniform {
        max_clusters: usize,
        radius_min: f64,
        radius_max: f64,
        uniform_probability: f64,
    },
}

impl GeneratorKind {
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::Uniform => "uniform",
            GeneratorKind::GaussianMixture { .. } => "gaussian_mixture",
            GeneratorKind::Diagonal { .. } => "diagonal",
            GeneratorKind::ClusteredUniform { .. } => "clustered_uniform",
        }
    }

    pub fn default_gaussian_mixture() -> Self {
        GeneratorKind::GaussianMixture {
            min_modes: 2,
            max_modes: 6,
            extent: 3.0,
            spread: 0.1,
        }
    }

    pub fn default_diagonal() -> Self {
        GeneratorKind::Diagonal {
            band_width: 0.1,
            jitter: 0.02,
        }
    }

    pub fn default_clustered_uniform() -> Self {
        GeneratorKind::ClusteredUniform {
            max_clusters: 8,
            radius_min: 0.05,
            radius_max: 0.25,
            uniform_probability: 0.2,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Ok(match name {
            "uniform" => GeneratorKind::Uniform,
            "gaussian_mixture" => Self::default_gaussian_mixture(),
            "diagonal" => Self::default_diagonal(),
            "clustered_uniform" => Self::default_clustered_uniform(),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown generator kind `{other}`"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    pub n: usize,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(kind: GeneratorKind, n: usize, seed: u64) -> Self {
        GeneratorConfig { kind, n, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n < 2 {
            return bad(format!("n must be >= 2, got {}", self.n));
        }
        match self.kind {
            GeneratorKind::Uniform => Ok(()),
            GeneratorKind::GaussianMixture {
                min_modes,
                max_modes,
                extent,
                spread,
            } => {
                if min_modes < 1 || max_modes < min_modes {
                    bad(format!("mode range [{min_modes}, {max_modes}] invalid"))
                } else if !(extent > 0.0 && extent.is_finite()) {
                    bad(format!("extent must be positive, got {extent}"))
                } else if !(spread > 0.0 && spread.is_finite()) {
                    bad(format!("spread must be positive, got {spread}"))
                } else {
                    Ok(())
                }
            }
            GeneratorKind::Diagonal { band_width, jitter } => {
                if !(band_width > 0.0 && band_width < 1.0) {
                    bad(format!("band_width must be in (0,1), got {band_width}"))
                } else if !(jitter >= 0.0 && jitter.is_finite()) {
                    bad(format!("jitter must be >= 0, got {jitter}"))
                } else {
                    Ok(())
                }
            }
            GeneratorKind::ClusteredUniform {
                max_clusters,
                radius_min,
                radius_max,
                uniform_probability,
            } => {
                if max_clusters < 1 {
                    bad("max_clusters must be >= 1".into())
                } else if !(radius_min >= 0.0 && radius_max >= radius_min && radius_max.is_finite())
                {
                    bad(format!("radius range [{radius_min}, {radius_max}] invalid"))
                } else if !(0.0..=1.0).contains(&uniform_probability) {
                    bad(format!(
                        "uniform_probability must be in [0,1], got {uniform_probability}"
                    ))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Instance `index` of the stream defined by this config.
    pub fn sample(&self, index: u64) -> Result<TspInstance> {
        self.validate()?;
        let seed = derive_seed(self.seed, self.kind.name(), &[index]);
        sample_kind(&self.kind, self.n, seed)
    }

    pub fn sample_many(&self, count: usize) -> Result<Vec<TspInstance>> {
        (0..count as u64).map(|i| self.sample(i)).collect()
    }
}

/// Draws one instance of `kind` from `seed`.
pub fn sample_kind(kind: &GeneratorKind, n: usize, seed: u64) -> Result<TspInstance> {
    match *kind {
        GeneratorKind::Uniform => sample_uniform(n, seed),
        GeneratorKind::GaussianMixture {
            min_modes,
            max_modes,
            extent,
            spread,
        } => {
            let mut rng = rng_from_seed(derive_seed(seed, "modes", &[]));
            let modes = rng.random_range(min_modes..=max_modes);
            sample_gaussian_mixture_in(n, modes, extent, spread, seed)
        }
        GeneratorKind::Diagonal { band_width, jitter } => {
            sample_diagonal(n, band_width, jitter, seed)
        }
        GeneratorKind::ClusteredUniform {
            max_clusters,
            radius_min,
            radius_max,
            uniform_probability,
        } => sample_clustered_uniform(
            n,
            max_clusters,
            (radius_min, radius_max),
            uniform_probability,
            seed,
        ),
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n must be >= 2, got {n}")));
    }
    Ok(())
}

/// `n` points i.i.d. uniform on the unit square.
pub fn sample_uniform(n: usize, seed: u64) -> Result<TspInstance> {
    check_n(n)?;
    let mut rng = rng_from_seed(seed);
    let points = (0..n)
        .map(|_| {
            let x: f64 = rng.random();
            let y: f64 = rng.random();
            Point::new(x, y)
        })
        .collect();
    TspInstance::new(points)
}

/// Gaussian mixture with centers in `[0, 3]^2`, then normalized.
pub fn sample_gaussian_mixture(
    n: usize,
    num_modes: usize,
    spread: f64,
    seed: u64,
) -> Result<TspInstance> {
    sample_gaussian_mixture_in(n, num_modes, 3.0, spread, seed)
}

pub fn sample_gaussian_mixture_in(
    n: usize,
    num_modes: usize,
    extent: f64,
    spread: f64,
    seed: u64,
) -> Result<TspInstance> {
    let raw = gaussian_mixture_raw(n, num_modes, extent, spread, seed)?;
    normalize_to_unit_square(&raw)
}

fn gaussian_mixture_raw(
    n: usize,
    num_modes: usize,
    extent: f64,
    spread: f64,
    seed: u64,
) -> Result<Vec<Point>> {
    check_n(n)?;
    if num_modes < 1 {
        return Err(Error::InvalidParameter("num_modes must be >= 1".into()));
    }
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "spread must be positive, got {spread}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let centers: Vec<Point> = (0..num_modes)
        .map(|_| Point::new(rng.random::<f64>() * extent, rng.random::<f64>() * extent))
        .collect();
    let noise = Normal::new(0.0, spread).expect("spread checked positive");
    Ok((0..n)
        .map(|_| {
            let c = centers[rng.random_range(0..num_modes)];
            Point::new(c.x + noise.sample(&mut rng), c.y + noise.sample(&mut rng))
        })
        .collect())
}

/// Points in a band around the main diagonal, then normalized.
pub fn sample_diagonal(n: usize, band_width: f64, jitter: f64, seed: u64) -> Result<TspInstance> {
    check_n(n)?;
    if !(band_width > 0.0 && band_width < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "band_width must be in (0,1), got {band_width}"
        )));
    }
    if !(jitter >= 0.0 && jitter.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "jitter must be >= 0, got {jitter}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let jit = (jitter > 0.0).then(|| Normal::new(0.0, jitter).expect("jitter checked"));
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let points: Vec<Point> = (0..n)
        .map(|_| {
            let t: f64 = rng.random();
            let offset = (rng.random::<f64>() - 0.5) * band_width;
            let (mut x, mut y) = (t - offset * inv_sqrt2, t + offset * inv_sqrt2);
            if let Some(j) = &jit {
                x += j.sample(&mut rng);
                y += j.sample(&mut rng);
            }
            Point::new(x.clamp(0.0, 1.0), y.clamp(0.0, 1.0))
        })
        .collect();
    normalize_to_unit_square(&points)
}

/// Uniform clusters of variable size. With probability
/// `uniform_probability` the draw is exactly `sample_uniform(n, seed)`.
pub fn sample_clustered_uniform(
    n: usize,
    max_clusters: usize,
    cluster_radius_range: (f64, f64),
    uniform_probability: f64,
    seed: u64,
) -> Result<TspInstance> {
    check_n(n)?;
    if max_clusters < 1 {
        return Err(Error::InvalidParameter("max_clusters must be >= 1".into()));
    }
    let (r_lo, r_hi) = cluster_radius_range;
    if !(r_lo >= 0.0 && r_hi >= r_lo && r_hi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "radius range [{r_lo}, {r_hi}] invalid"
        )));
    }
    if !(0.0..=1.0).contains(&uniform_probability) {
        return Err(Error::InvalidParameter(format!(
            "uniform_probability must be in [0,1], got {uniform_probability}"
        )));
    }
    let mut coin = rng_from_seed(derive_seed(seed, "clustered/coin", &[]));
    if coin.random::<f64>() < uniform_probability {
        return sample_uniform(n, seed);
    }
    let mut rng = rng_from_seed(seed);
    let k = rng.random_range(1..=max_clusters);
    let centers: Vec<Point> = (0..k)
        .map(|_| Point::new(rng.random(), rng.random()))
        .collect();
    let radii: Vec<f64> = (0..k)
        .map(|_| {
            if r_hi > r_lo {
                rng.random_range(r_lo..=r_hi)
            } else {
                r_lo
            }
        })
        .collect();
    TspInstance::new(place_in_clusters(n, &centers, &radii, &mut rng))
}

/// Assigns each point to a uniformly chosen cluster and places it
/// uniformly in the square of side `2 * radius` around the center.
fn place_in_clusters(n: usize, centers: &[Point], radii: &[f64], rng: &mut impl Rng) -> Vec<Point> {
    (0..n)
        .map(|_| {
            let c = rng.random_range(0..centers.len());
            let r = radii[c];
            let dx = (rng.random::<f64>() * 2.0 - 1.0) * r;
            let dy = (rng.random::<f64>() * 2.0 - 1.0) * r;
            Point::new(
                (centers[c].x + dx).clamp(0.0, 1.0),
                (centers[c].y + dy).clamp(0.0, 1.0),
            )
        })
        .collect()
}

/// `k` distinct indices of `0..len`, uniform without replacement.
pub fn sample_indices(len: usize, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    index::sample(rng, len, k).into_vec()
}

/// Number of connected components of the graph joining points closer than
/// `threshold` (single-linkage clustering cut at `threshold`).
pub fn single_linkage_clusters(points: &[Point], threshold: f64) -> usize {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let mut components = n;
    for i in 0..n {
        for j in (i + 1)..n {
            if points[i].dist(&points[j]) <= threshold {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                    components -= 1;
                }
            }
        }
    }
    components
}
