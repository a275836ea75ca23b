//! Two-component PCA of latent means and planar convex-hull areas.

use cogs_autodiff::Matrix;
use cogs_core::TspInstance;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vae::VaeModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca2 {
    /// Projected rows, in input order.
    pub coords: Vec<[f64; 2]>,
    /// Share of total variance on each component, descending.
    pub explained_variance_ratio: [f64; 2],
}

/// Projects the rows of `data` onto their top two principal components.
/// Component signs are fixed so the largest-magnitude loading is positive.
pub fn pca_2d(data: &Matrix) -> Result<Pca2> {
    let (rows, cols) = data.shape();
    if rows < 3 {
        return Err(Error::Config(format!("PCA needs at least 3 rows, got {rows}")));
    }
    if cols < 2 {
        return Err(Error::Config(format!("PCA needs at least 2 columns, got {cols}")));
    }
    let x = DMatrix::from_row_slice(rows, cols, data.data());
    let mean = x.row_mean();
    let mut centered = x.clone();
    for mut r in centered.row_iter_mut() {
        r -= &mean;
    }
    let cov = centered.transpose() * &centered / (rows as f64 - 1.0);
    let eig = SymmetricEigen::new(cov);
    let mut idx: Vec<usize> = (0..cols).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
    if !(total > 0.0) {
        return Err(Error::Core(cogs_core::Error::Degenerate("all latent means coincide".into())));
    }
    let mut comps = Vec::with_capacity(2);
    let mut ratio = [0.0; 2];
    for (k, &i) in idx.iter().take(2).enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        let pivot = v.iter().copied().fold(0.0_f64, |a, b| if b.abs() > a.abs() { b } else { a });
        if pivot < 0.0 {
            v = -v;
        }
        comps.push(v);
        ratio[k] = eig.eigenvalues[i].max(0.0) / total;
    }
    let coords = centered
        .row_iter()
        .map(|r| [r.dot(&comps[0].transpose()), r.dot(&comps[1].transpose())])
        .collect();
    Ok(Pca2 {
        coords,
        explained_variance_ratio: ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentProjection {
    pub labels: Vec<String>,
    /// `(label index, projected point)` per encoded instance.
    pub points: Vec<(usize, [f64; 2])>,
    pub explained_variance_ratio: [f64; 2],
}

impl LatentProjection {
    pub fn points_of(&self, label: usize) -> Vec<[f64; 2]> {
        self.points.iter().filter(|(l, _)| *l == label).map(|(_, p)| *p).collect()
    }
}

/// Encodes every instance to its posterior mean and projects the pooled
/// means onto two principal components.
pub fn latent_pca_projection(model: &VaeModel, datasets: &[(String, Vec<TspInstance>)]) -> Result<LatentProjection> {
    if let Some((name, _)) = datasets.iter().find(|(_, v)| v.is_empty()) {
        return Err(Error::Config(format!("dataset {name:?} is empty")));
    }
    let d = model.config().latent_dim;
    let mut pooled = Vec::new();
    let mut owners = Vec::new();
    for (li, (_, insts)) in datasets.iter().enumerate() {
        let mu = model.encode_means(insts)?;
        pooled.extend_from_slice(mu.data());
        owners.extend(std::iter::repeat_n(li, insts.len()));
    }
    let pca = pca_2d(&Matrix::from_vec(owners.len(), d, pooled))?;
    Ok(LatentProjection {
        labels: datasets.iter().map(|(n, _)| n.clone()).collect(),
        points: owners.into_iter().zip(pca.coords).collect(),
        explained_variance_ratio: pca.explained_variance_ratio,
    })
}

/// Area of the convex hull of planar points (0 for fewer than 3).
pub fn convex_hull_area(points: &[[f64; 2]]) -> f64 {
    let mut p: Vec<[f64; 2]> = points.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return 0.0;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for &q in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(q);
        }
        hull.pop();
    }
    let mut area = 0.0;
    for i in 0..hull.len() {
        let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
        area += a[0] * b[1] - a[1] * b[0];
    }
    area.abs() / 2.0
}
