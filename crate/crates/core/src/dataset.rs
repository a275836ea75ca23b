//! Instance datasets and their on-disk container.
//!
//! Byte layout (all integers little-endian):
//!
//! | offset   | size             | field                                   |
//! |----------|------------------|-----------------------------------------|
//! | 0        | 8                | magic `COGSDSET`                        |
//! | 8        | 4                | format version, `u32` (currently 1)     |
//! | 12       | 4                | header length `H`, `u32`                |
//! | 16       | `H`              | header, compact UTF-8 JSON              |
//! | 16 + `H` | `count * n * 16` | coordinates, `f64` bits, x then y, instance-major |
//!
//! The header is [`DatasetHeader`] serialized with fields in declaration
//! order and no whitespace. Decoding rejects headers that are not in that
//! canonical form, so decode followed by encode reproduces the input bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distributions::GeneratorConfig;
use crate::geometry::{Point, TspInstance};
use crate::tsplib::Provenance;
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"COGSDSET";
pub const FORMAT_VERSION: u32 = 1;
const PREFIX: usize = 16;

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSource {
    Generator {
        config: GeneratorConfig,
    },
    Tsplib50 {
        files: Vec<String>,
        max_source_dimension: Option<usize>,
    },
    Vae {
        checkpoint: String,
    },
    Other {
        description: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub name: String,
    pub count: usize,
    pub n: usize,
    pub source: DatasetSource,
    pub master_seed: u64,
    pub provenance: Vec<Provenance>,
}

/// A named, seeded collection of equal-size instances.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceDataset {
    pub name: String,
    pub source: DatasetSource,
    pub master_seed: u64,
    pub instances: Vec<TspInstance>,
    /// One record per instance, or empty.
    pub provenance: Vec<Provenance>,
}

impl InstanceDataset {
    pub fn new(
        name: impl Into<String>,
        source: DatasetSource,
        master_seed: u64,
        instances: Vec<TspInstance>,
        provenance: Vec<Provenance>,
    ) -> Result<Self> {
        let ds = InstanceDataset {
            name: name.into(),
            source,
            master_seed,
            instances,
            provenance,
        };
        ds.check()?;
        Ok(ds)
    }

    /// `count` instances from a generator, instance `i` keyed by
    /// `derive_seed(config.seed, kind, [i])`.
    pub fn generate(name: impl Into<String>, config: &GeneratorConfig, count: usize) -> Result<Self> {
        config.validate()?;
        let mut instances = Vec::with_capacity(count);
        let mut provenance = Vec::with_capacity(count);
        for i in 0..count as u64 {
            let seed = crate::seed::derive_seed(config.seed, config.kind.name(), &[i]);
            instances.push(crate::distributions::sample_kind(&config.kind, config.n, seed)?);
            provenance.push(Provenance {
                source: config.kind.name().to_string(),
                seed,
            });
        }
        InstanceDataset::new(
            name,
            DatasetSource::Generator {
                config: config.clone(),
            },
            config.seed,
            instances,
            provenance,
        )
    }

    fn check(&self) -> Result<()> {
        if let Some(first) = self.instances.first() {
            let n = first.n();
            if let Some(i) = self.instances.iter().position(|x| x.n() != n) {
                return Err(Error::Dataset(format!(
                    "instance {i} has {} points, expected {n}",
                    self.instances[i].n()
                )));
            }
        }
        if !self.provenance.is_empty() && self.provenance.len() != self.instances.len() {
            return Err(Error::Dataset(format!(
                "{} provenance records for {} instances",
                self.provenance.len(),
                self.instances.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Points per instance (0 for an empty dataset).
    pub fn n(&self) -> usize {
        self.instances.first().map_or(0, TspInstance::n)
    }

    pub fn header(&self) -> DatasetHeader {
        DatasetHeader {
            name: self.name.clone(),
            count: self.len(),
            n: self.n(),
            source: self.source.clone(),
            master_seed: self.master_seed,
            provenance: self.provenance.clone(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header()).expect("header serializes");
        let mut out = Vec::with_capacity(PREFIX + header.len() + self.len() * self.n() * 16);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for x in &self.instances {
            for p in x.points() {
                out.extend_from_slice(&p.x.to_le_bytes());
                out.extend_from_slice(&p.y.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let err = |m: &str| Error::Dataset(m.to_string());
        if bytes.len() < PREFIX || &bytes[..8] != MAGIC {
            return Err(err("missing COGSDSET magic"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(Error::Dataset(format!("unsupported format version {version}")));
        }
        let hlen = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
        let body_start = PREFIX
            .checked_add(hlen)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| err("header length exceeds file"))?;
        let header_bytes = &bytes[PREFIX..body_start];
        let header: DatasetHeader = serde_json::from_slice(header_bytes)
            .map_err(|e| Error::Dataset(format!("header: {e}")))?;
        if serde_json::to_vec(&header).expect("header serializes") != header_bytes {
            return Err(err("header is not in canonical form"));
        }
        let body = &bytes[body_start..];
        let expected = header
            .count
            .checked_mul(header.n)
            .and_then(|v| v.checked_mul(16))
            .ok_or_else(|| err("count * n overflows"))?;
        if body.len() != expected {
            return Err(Error::Dataset(format!(
                "body has {} bytes, header declares {} instances of {} points ({expected} bytes)",
                body.len(),
                header.count,
                header.n
            )));
        }
        if header.count > 0 && header.n < 2 {
            return Err(err("instances need at least 2 points"));
        }
        let mut instances = Vec::with_capacity(header.count);
        let mut chunks = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        for i in 0..header.count {
            let points: Vec<Point> = (0..header.n)
                .map(|_| {
                    let x = chunks.next().expect("length checked");
                    let y = chunks.next().expect("length checked");
                    Point::new(x, y)
                })
                .collect();
            instances.push(
                TspInstance::new(points)
                    .map_err(|e| Error::Dataset(format!("instance {i}: {e}")))?,
            );
        }
        InstanceDataset::new(
            header.name,
            header.source,
            header.master_seed,
            instances,
            header.provenance,
        )
    }

    /// SHA-256 of the encoded bytes, hex.
    pub fn content_hash(&self) -> String {
        hash_hex(&self.encode())
    }

    /// Writes to a sibling temp file then renames, so readers never see a
    /// partial file.
    pub fn write_to(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.encode())
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        InstanceDataset::decode(&std::fs::read(path)?)
    }
}

/// Hash over the coordinates of a batch of instances, independent of any
/// dataset metadata.
pub fn instances_hash(instances: &[TspInstance]) -> String {
    let mut h = Sha256::new();
    for x in instances {
        h.update((x.n() as u64).to_le_bytes());
        for p in x.points() {
            h.update(p.x.to_le_bytes());
            h.update(p.y.to_le_bytes());
        }
    }
    to_hex(&h.finalize())
}

fn hash_hex(bytes: &[u8]) -> String {
    to_hex(&Sha256::digest(bytes))
}

fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    std::io::Write::write_all(&mut tmp, bytes)?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
