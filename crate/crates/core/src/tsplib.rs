//! TSPLib EUC_2D parsing and the TSPLib50 bootstrap dataset.
//!
//! Only the subset needed for 2D Euclidean instances is understood:
//! `KEY : VALUE` header lines, a `NODE_COORD_SECTION` of `id x y` triples
//! and an optional `EOF`.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::sample_indices;
use crate::geometry::{normalize_to_unit_square, Point, TspInstance};
use crate::seed::{derive_seed, rng_from_seed};
use crate::{Error, Result};

/// Points per TSPLib50 instance.
pub const TSPLIB50_N: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct TsplibInstance {
    pub name: String,
    pub dimension: usize,
    pub edge_weight_type: String,
    /// `(id, x, y)` in file order, original units.
    pub raw_points: Vec<(u64, f64, f64)>,
}

impl TsplibInstance {
    pub fn points(&self) -> Vec<Point> {
        self.raw_points
            .iter()
            .map(|&(_, x, y)| Point::new(x, y))
            .collect()
    }
}

fn split_header(line: &str) -> Option<(String, String)> {
    let (k, v) = line.split_once(':')?;
    Some((k.trim().to_ascii_uppercase(), v.trim().to_string()))
}

pub fn parse_tsplib(text: &str) -> Result<TsplibInstance> {
    let mut name = None;
    let mut dimension: Option<usize> = None;
    let mut edge_weight_type = None;
    let mut lines = text.lines();
    let mut in_coords = false;

    for raw in lines.by_ref() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let upper = line.to_ascii_uppercase();
        if upper.starts_with("NODE_COORD_SECTION") {
            in_coords = true;
            break;
        }
        if upper == "EOF" {
            break;
        }
        if upper.ends_with("_SECTION") {
            // any other data section: report the header problem below
            break;
        }
        let Some((key, value)) = split_header(line) else {
            return Err(Error::Tsplib(format!("unrecognised header line `{line}`")));
        };
        match key.as_str() {
            "NAME" => name = Some(value),
            "DIMENSION" => {
                dimension = Some(value.parse().map_err(|_| {
                    Error::Tsplib(format!("DIMENSION `{value}` is not a positive integer"))
                })?)
            }
            "EDGE_WEIGHT_TYPE" => edge_weight_type = Some(value.to_ascii_uppercase()),
            _ => {}
        }
    }

    let dimension = dimension.ok_or_else(|| Error::Tsplib("missing DIMENSION".into()))?;
    if dimension == 0 {
        return Err(Error::Tsplib("DIMENSION must be positive".into()));
    }
    let edge_weight_type =
        edge_weight_type.ok_or_else(|| Error::Tsplib("missing EDGE_WEIGHT_TYPE".into()))?;
    if edge_weight_type != "EUC_2D" {
        return Err(Error::UnsupportedFormat(edge_weight_type));
    }
    if !in_coords {
        return Err(Error::Tsplib("missing NODE_COORD_SECTION".into()));
    }

    let mut raw_points = Vec::with_capacity(dimension.min(1 << 20));
    let mut ids = HashSet::new();
    for raw in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.eq_ignore_ascii_case("EOF") || line.to_ascii_uppercase().ends_with("_SECTION") {
            break;
        }
        let mut fields = line.split_whitespace();
        let parse_err = || Error::Tsplib(format!("bad coordinate line `{line}`"));
        let id: u64 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(parse_err)?;
        let x: f64 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(parse_err)?;
        let y: f64 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(parse_err)?;
        if fields.next().is_some() || !x.is_finite() || !y.is_finite() {
            return Err(parse_err());
        }
        if !ids.insert(id) {
            return Err(Error::Tsplib(format!("duplicate node id {id}")));
        }
        raw_points.push((id, x, y));
    }
    if raw_points.len() != dimension {
        return Err(Error::Tsplib(format!(
            "DIMENSION is {dimension} but {} coordinates were read",
            raw_points.len()
        )));
    }

    Ok(TsplibInstance {
        name: name.unwrap_or_default(),
        dimension,
        edge_weight_type,
        raw_points,
    })
}

/// 50 distinct source nodes chosen uniformly, normalized to the unit square.
pub fn sample_tsplib50_instance(source: &TsplibInstance, seed: u64) -> Result<TspInstance> {
    let idx = sample_tsplib50_indices(source, seed)?;
    let points: Vec<Point> = idx
        .iter()
        .map(|&i| {
            let (_, x, y) = source.raw_points[i];
            Point::new(x, y)
        })
        .collect();
    normalize_to_unit_square(&points)
}

/// Source node positions (0-based, file order) selected by
/// [`sample_tsplib50_instance`] for `seed`.
pub fn sample_tsplib50_indices(source: &TsplibInstance, seed: u64) -> Result<Vec<usize>> {
    if source.dimension < TSPLIB50_N || source.raw_points.len() < TSPLIB50_N {
        return Err(Error::SourceTooSmall {
            name: source.name.clone(),
            dimension: source.dimension,
            required: TSPLIB50_N,
        });
    }
    let mut rng = rng_from_seed(seed);
    Ok(sample_indices(source.raw_points.len(), TSPLIB50_N, &mut rng))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tsplib50Dataset {
    pub instances: Vec<TspInstance>,
    pub provenance: Vec<Provenance>,
}

impl Tsplib50Dataset {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Tsplib50Options {
    /// Skip sources with more nodes than this.
    pub max_source_dimension: Option<usize>,
}

fn eligible(source: &TsplibInstance, opts: Tsplib50Options) -> bool {
    source.edge_weight_type == "EUC_2D"
        && source.dimension >= TSPLIB50_N
        && opts.max_source_dimension.is_none_or(|cap| source.dimension <= cap)
}

/// Builds `size` instances; instance `i` picks a source uniformly with
/// `derive_seed(master, "tsplib50/source", [i])` and samples its points
/// with `derive_seed(master, "tsplib50/points", [i])`.
pub fn build_tsplib50(
    sources: &[TsplibInstance],
    size: usize,
    master_seed: u64,
    opts: Tsplib50Options,
) -> Result<Tsplib50Dataset> {
    let pool: Vec<&TsplibInstance> = sources.iter().filter(|s| eligible(s, opts)).collect();
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let mut instances = Vec::with_capacity(size);
    let mut provenance = Vec::with_capacity(size);
    for i in 0..size as u64 {
        let mut pick = rng_from_seed(derive_seed(master_seed, "tsplib50/source", &[i]));
        let source = pool[pick.random_range(0..pool.len())];
        let seed = derive_seed(master_seed, "tsplib50/points", &[i]);
        instances.push(sample_tsplib50_instance(source, seed)?);
        provenance.push(Provenance {
            source: source.name.clone(),
            seed,
        });
    }
    Ok(Tsplib50Dataset {
        instances,
        provenance,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedSource {
    pub path: PathBuf,
    pub reason: String,
}

/// Every `*.tsp` file in `dir` (sorted by file name), split into parsed
/// eligible sources and rejected files with reasons.
pub fn load_source_dir(
    dir: &Path,
    opts: Tsplib50Options,
) -> Result<(Vec<(PathBuf, TsplibInstance)>, Vec<RejectedSource>)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("tsp"))
        })
        .collect();
    paths.sort();
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for path in paths {
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                rejected.push(RejectedSource {
                    path,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        match parse_tsplib(&text) {
            Ok(inst) if eligible(&inst, opts) => accepted.push((path, inst)),
            Ok(inst) => {
                let reason = if inst.dimension < TSPLIB50_N {
                    format!("dimension {} < {TSPLIB50_N}", inst.dimension)
                } else {
                    format!("dimension {} above cap", inst.dimension)
                };
                rejected.push(RejectedSource { path, reason });
            }
            Err(e) => rejected.push(RejectedSource {
                path,
                reason: e.to_string(),
            }),
        }
    }
    Ok((accepted, rejected))
}
