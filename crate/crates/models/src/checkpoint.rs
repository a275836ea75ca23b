//! Versioned binary container for model parameters and training state.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        8 bytes  "COGSCKPT"
//! version      u32
//! header_len   u32
//! header       header_len bytes of compact JSON (CheckpointHeader)
//! tensor_count u32
//! per tensor:  u16 name_len, name (UTF-8), u32 rows, u32 cols,
//!              rows*cols f64 values
//! ```
//!
//! Tensor names are prefixed `param/`, `adam_m/` or `adam_v/`. Decoding
//! rejects headers that would not re-encode identically, so a decoded
//! checkpoint always re-encodes to the same bytes.

use std::path::Path;

use cogs_autodiff::{Adam, AdamConfig, Matrix, ParamStore};
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{PolicyConfig, SolverPolicy};
use crate::vae::{VaeConfig, VaeModel};

#[derive(Serialize, Deserialize)]
struct VaeHyper {
    #[serde(flatten)]
    config: VaeConfig,
    #[serde(default)]
    output_std: f64,
}

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"COGSCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Position of a ChaCha8 stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    /// 32-byte key as lowercase hex.
    pub seed: String,
    pub stream: u64,
    /// Decimal string; the position does not fit a JSON number.
    pub word_pos: String,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        RngState {
            seed: rng.get_seed().iter().map(|b| format!("{b:02x}")).collect(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> Result<ChaCha8Rng> {
        let bad = || Error::Checkpoint("malformed rng state".into());
        if self.seed.len() != 64 || !self.seed.is_ascii() {
            return Err(bad());
        }
        let mut seed = [0u8; 32];
        for (i, b) in seed.iter_mut().enumerate() {
            *b = u8::from_str_radix(&self.seed[2 * i..2 * i + 2], 16).map_err(|_| bad())?;
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos.parse().map_err(|_| bad())?);
        Ok(rng)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    /// `"policy"` or `"vae"`.
    pub kind: String,
    pub hyperparameters: serde_json::Value,
    pub epoch: u64,
    pub rng: Option<RngState>,
    pub optimizer: Option<AdamConfig>,
    pub adam_step: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub tensors: Vec<(String, Matrix)>,
}

const PARAM: &str = "param/";
const ADAM_M: &str = "adam_m/";
const ADAM_V: &str = "adam_v/";

impl Checkpoint {
    fn from_parts(
        kind: &str,
        hyperparameters: serde_json::Value,
        params: &ParamStore,
        adam: Option<&Adam>,
        epoch: u64,
        rng: Option<&ChaCha8Rng>,
    ) -> Self {
        let mut tensors: Vec<(String, Matrix)> = params
            .names()
            .iter()
            .zip(params.values())
            .map(|(n, v)| (format!("{PARAM}{n}"), v.clone()))
            .collect();
        if let Some(a) = adam {
            for (prefix, moments) in [(ADAM_M, a.first_moments()), (ADAM_V, a.second_moments())] {
                tensors.extend(
                    params
                        .names()
                        .iter()
                        .zip(moments)
                        .map(|(n, v)| (format!("{prefix}{n}"), v.clone())),
                );
            }
        }
        Checkpoint {
            header: CheckpointHeader {
                kind: kind.to_string(),
                hyperparameters,
                epoch,
                rng: rng.map(RngState::capture),
                optimizer: adam.map(|a| a.config),
                adam_step: adam.map_or(0, Adam::step_count),
            },
            tensors,
        }
    }

    pub fn for_policy(policy: &SolverPolicy, adam: Option<&Adam>, epoch: u64, rng: Option<&ChaCha8Rng>) -> Self {
        let hyper = serde_json::to_value(policy.config()).expect("config serialises");
        Self::from_parts("policy", hyper, policy.params(), adam, epoch, rng)
    }

    pub fn for_vae(model: &VaeModel, adam: Option<&Adam>, epoch: u64, rng: Option<&ChaCha8Rng>) -> Self {
        let hyper = serde_json::to_value(VaeHyper {
            config: *model.config(),
            output_std: model.output_std(),
        })
        .expect("config serialises");
        Self::from_parts("vae", hyper, model.params(), adam, epoch, rng)
    }

    fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.header.kind != kind {
            return Err(Error::Checkpoint(format!(
                "expected a {kind} checkpoint, found {:?}",
                self.header.kind
            )));
        }
        Ok(())
    }

    fn store(&self) -> ParamStore {
        let mut s = ParamStore::new();
        for (name, m) in &self.tensors {
            if let Some(n) = name.strip_prefix(PARAM) {
                s.add(n, m.clone());
            }
        }
        s
    }

    /// Optimizer rebuilt from saved moments, if they were saved.
    pub fn adam(&self, params: &ParamStore) -> Result<Option<Adam>> {
        let Some(cfg) = self.header.optimizer else {
            return Ok(None);
        };
        let find = |prefix: &str, name: &str| -> Result<Matrix> {
            let key = format!("{prefix}{name}");
            self.tensors
                .iter()
                .find(|(n, _)| *n == key)
                .map(|(_, m)| m.clone())
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor {key}")))
        };
        let mut m = Vec::with_capacity(params.len());
        let mut v = Vec::with_capacity(params.len());
        for (name, p) in params.names().iter().zip(params.values()) {
            let (a, b) = (find(ADAM_M, name)?, find(ADAM_V, name)?);
            if a.shape() != p.shape() || b.shape() != p.shape() {
                return Err(Error::Checkpoint(format!("moment shape mismatch for {name}")));
            }
            m.push(a);
            v.push(b);
        }
        Ok(Some(Adam::from_state(cfg, m, v, self.header.adam_step)))
    }

    pub fn rng(&self) -> Result<Option<ChaCha8Rng>> {
        self.header.rng.as_ref().map(RngState::restore).transpose()
    }

    pub fn policy(&self) -> Result<SolverPolicy> {
        self.expect_kind("policy")?;
        let cfg: PolicyConfig = serde_json::from_value(self.header.hyperparameters.clone())
            .map_err(|e| Error::Checkpoint(format!("policy hyperparameters: {e}")))?;
        SolverPolicy::from_params(cfg, self.store())
    }

    pub fn vae(&self) -> Result<VaeModel> {
        self.expect_kind("vae")?;
        let hyper: VaeHyper = serde_json::from_value(self.header.hyperparameters.clone())
            .map_err(|e| Error::Checkpoint(format!("vae hyperparameters: {e}")))?;
        let mut model = VaeModel::from_params(hyper.config, self.store())?;
        model
            .set_output_std(hyper.output_std)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        Ok(model)
    }

    pub fn encode(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.header).expect("header serialises");
        let body: usize = self.tensors.iter().map(|(n, m)| 10 + n.len() + 8 * m.data().len()).sum();
        let mut out = Vec::with_capacity(24 + header.len() + body);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, m) in &self.tensors {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
            out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
            for v in m.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let hlen = r.u32()? as usize;
        let raw = r.take(hlen)?;
        let header: CheckpointHeader =
            serde_json::from_slice(raw).map_err(|e| Error::Checkpoint(format!("header: {e}")))?;
        if serde_json::to_vec(&header).ok().as_deref() != Some(raw) {
            return Err(Error::Checkpoint("header is not in canonical form".into()));
        }
        let count = r.u32()? as usize;
        // Each tensor takes at least 10 bytes; bound the allocation.
        if count > r.remaining() / 10 {
            return Err(Error::Checkpoint(format!("tensor count {count} exceeds file size")));
        }
        let mut tensors = Vec::with_capacity(count);
        for _ in 0..count {
            let nlen = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(nlen)?)
                .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?
                .to_string();
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            let len = rows
                .checked_mul(cols)
                .filter(|l| l.checked_mul(8).is_some_and(|b| b <= r.remaining()))
                .ok_or_else(|| Error::Checkpoint(format!("tensor {name} exceeds file size")))?;
            let data = r
                .take(len * 8)?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            if tensors.iter().any(|(n, _): &(String, Matrix)| *n == name) {
                return Err(Error::Checkpoint(format!("duplicate tensor {name}")));
            }
            tensors.push((name, Matrix::from_vec(rows, cols, data)));
        }
        if r.remaining() != 0 {
            return Err(Error::Checkpoint(format!("{} trailing bytes", r.remaining())));
        }
        Ok(Checkpoint { header, tensors })
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        Ok(cogs_core::dataset::write_atomic(path, &self.encode())?)
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        Self::decode(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        if k > self.remaining() {
            return Err(Error::Checkpoint("truncated file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + k];
        self.pos += k;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn policy_round_trip_is_byte_stable() {
        let p = SolverPolicy::new(PolicyConfig::tiny(), 4).unwrap();
        let adam = Adam::new(AdamConfig::default(), p.params());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        rng.next_u64();
        let ck = Checkpoint::for_policy(&p, Some(&adam), 3, Some(&rng));
        let bytes = ck.encode();
        let back = Checkpoint::decode(&bytes).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.encode(), bytes);
        let q = back.policy().unwrap();
        assert_eq!(q.params(), p.params());
        let mut r2 = back.rng().unwrap().unwrap();
        assert_eq!(r2.next_u64(), rng.next_u64());
        assert_eq!(back.adam(q.params()).unwrap().unwrap(), adam);
        assert!(back.vae().is_err());
    }

    #[test]
    fn rejects_damage() {
        let p = SolverPolicy::new(PolicyConfig::tiny(), 4).unwrap();
        let bytes = Checkpoint::for_policy(&p, None, 0, None).encode();
        assert!(Checkpoint::decode(&bytes[..bytes.len() - 1]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(Checkpoint::decode(&extra).is_err());
        let mut magic = bytes;
        magic[0] = b'X';
        assert!(Checkpoint::decode(&magic).is_err());
    }
}
