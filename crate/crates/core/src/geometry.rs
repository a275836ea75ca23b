//! Points, instances, tours and the two quantities everything else is
//! measured in: closed tour length and optimality gap.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative tolerance used when comparing tour lengths and gaps.
pub const REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point { x, y }
    }
}

/// An ordered set of at least two locations inside the unit square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct TspInstance {
    points: Vec<Point>,
}

impl TspInstance {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidInstance(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        for (i, p) in points.iter().enumerate() {
            let ok = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
            if !ok(p.x) || !ok(p.y) {
                return Err(Error::InvalidInstance(format!(
                    "point {i} = ({}, {}) outside [0,1]^2",
                    p.x, p.y
                )));
            }
        }
        Ok(TspInstance { points })
    }

    /// Builds an instance after clamping every coordinate into `[0, 1]`.
    pub fn clamped(mut points: Vec<Point>) -> Result<Self> {
        for p in &mut points {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::InvalidInstance("non-finite coordinate".into()));
            }
            p.x = p.x.clamp(0.0, 1.0);
            p.y = p.y.clamp(0.0, 1.0);
        }
        TspInstance::new(points)
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        TspInstance::new(pairs.iter().copied().map(Point::from).collect())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    /// Coordinates flattened as `[x0, y0, x1, y1, ...]`.
    pub fn flat_coords(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.points[i].dist(&self.points[j])
    }
}

impl TryFrom<Vec<Point>> for TspInstance {
    type Error = Error;
    fn try_from(points: Vec<Point>) -> Result<Self> {
        TspInstance::new(points)
    }
}

impl From<TspInstance> for Vec<Point> {
    fn from(instance: TspInstance) -> Self {
        instance.points
    }
}

/// Row-major `n x n` Euclidean distance matrix.
pub fn distance_matrix(instance: &TspInstance) -> Vec<Vec<f64>> {
    let n = instance.n();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = instance.dist(i, j);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

pub(crate) fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::NotAPermutation {
            n,
            reason: format!("length {} != {n}", order.len()),
        });
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n {
            return Err(Error::NotAPermutation {
                n,
                reason: format!("index {i} out of range"),
            });
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::NotAPermutation {
                n,
                reason: format!("index {i} repeated"),
            });
        }
    }
    Ok(())
}

/// Closed-cycle length of `order`, including the edge back to the start.
pub fn tour_length(instance: &TspInstance, order: &[usize]) -> Result<f64> {
    check_permutation(order, instance.n())?;
    Ok(cycle_length_unchecked(instance.points(), order))
}

pub(crate) fn cycle_length_unchecked(points: &[Point], order: &[usize]) -> f64 {
    let n = order.len();
    let mut total = points[order[n - 1]].dist(&points[order[0]]);
    for w in order.windows(2) {
        total += points[w[0]].dist(&points[w[1]]);
    }
    total
}

/// A permutation of an instance's indices with its closed-cycle length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    order: Vec<usize>,
    length: f64,
}

impl Tour {
    pub fn new(instance: &TspInstance, order: Vec<usize>) -> Result<Self> {
        let length = tour_length(instance, &order)?;
        Ok(Tour { order, length })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn into_order(self) -> Vec<usize> {
        self.order
    }

    /// Rotates the cycle to start at index 0 and orients it so the second
    /// element is smaller than the last. Length is unchanged.
    pub fn canonical(mut self) -> Self {
        canonicalize_cycle(&mut self.order);
        self
    }

    /// True when the stored length matches a recomputation within
    /// [`REL_TOL`] relative.
    pub fn is_consistent_with(&self, instance: &TspInstance) -> bool {
        match tour_length(instance, &self.order) {
            Ok(len) => (len - self.length).abs() <= REL_TOL * len.max(1e-300),
            Err(_) => false,
        }
    }
}

pub(crate) fn canonicalize_cycle(order: &mut [usize]) {
    let n = order.len();
    if n == 0 {
        return;
    }
    let start = order.iter().position(|&i| i == 0).unwrap_or(0);
    order.rotate_left(start);
    if n > 2 && order[1] > order[n - 1] {
        order[1..].reverse();
    }
}

/// Relative excess of a model's cost over the reference cost.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GapValue(pub f64);

impl GapValue {
    pub fn fraction(self) -> f64 {
        self.0
    }

    pub fn percent(self) -> f64 {
        self.0 * 100.0
    }
}

pub fn optimality_gap(model_cost: f64, oracle_cost: f64) -> Result<GapValue> {
    if !(oracle_cost > 0.0) || !oracle_cost.is_finite() {
        return Err(Error::NonPositiveOracleCost(oracle_cost));
    }
    Ok(GapValue((model_cost - oracle_cost) / oracle_cost))
}

/// Translates and uniformly rescales `points` so the larger axis span is
/// exactly 1 and every coordinate lies in `[0, 1]`.
pub fn normalize_to_unit_square(points: &[Point]) -> Result<TspInstance> {
    if points.len() < 2 {
        return Err(Error::InvalidInstance(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(Error::InvalidInstance("non-finite coordinate".into()));
        }
        min_x = min_x.min(p.x);
        max_x = max_x.max(p.x);
        min_y = min_y.min(p.y);
        max_y = max_y.max(p.y);
    }
    let span = (max_x - min_x).max(max_y - min_y);
    if !(span > 0.0) {
        return Err(Error::Degenerate("all points identical".into()));
    }
    let scaled = points
        .iter()
        .map(|p| {
            // the extreme points land exactly on 1.0; rounding elsewhere is clamped
            Point::new(
                ((p.x - min_x) / span).clamp(0.0, 1.0),
                ((p.y - min_y) / span).clamp(0.0, 1.0),
            )
        })
        .collect();
    TspInstance::new(scaled)
}
