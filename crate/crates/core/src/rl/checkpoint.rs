//! Binary policy checkpoints.
//!
//! ```text
//! "DNAV" | version u16 | algorithm u8 | observation mode u8 | camera width u16 | camera height u16
//! seed u64 | steps u64 | config hash [32] | map hash [32]
//! networks u16, each: name | rank u8 | dims u32.. | layers u16 | layer records | f32 parameters
//! tensors u16, each: name | rank u8 | dims u32.. | f32 values
//! ```
//!
//! All integers and floats are little-endian. Names are a u16 length plus UTF-8 bytes.

use std::path::Path;

use crate::env::ObservationMode;
use crate::nn::{Activation, LayerSpec, Network, NetworkSpec, ParameterSet, Tensor};
use crate::rl::{Algorithm, PolicyNet, PolicyNoise};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"DNAV";
pub const CHECKPOINT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(String),
    #[error("not a checkpoint (bad magic bytes)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u16),
    #[error("checkpoint is truncated")]
    Truncated,
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("config hash mismatch: checkpoint has {found}, expected {expected}")]
    ConfigHashMismatch { expected: String, found: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub steps: u64,
    /// Lowercase hex SHA-256.
    pub config_hash: String,
    pub map_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyCheckpoint {
    pub meta: CheckpointMeta,
    pub policy: PolicyNet,
}

fn quantize(params: &ParameterSet) -> ParameterSet {
    let mut q = params.clone();
    for t in &mut q.tensors {
        t.data_mut().iter_mut().for_each(|v| *v = *v as f32 as f64);
    }
    q
}

impl PolicyCheckpoint {
    /// Rounds every parameter to `f32` so the in-memory policy equals its saved form.
    pub fn new(meta: CheckpointMeta, mut policy: PolicyNet) -> Self {
        let q = quantize(policy.actor.params());
        policy.actor.set_params(q).expect("same shapes");
        policy.noise = match policy.noise {
            PolicyNoise::Gaussian { log_std } => PolicyNoise::Gaussian { log_std: log_std.map(|v| v as f32 as f64) },
            PolicyNoise::Additive { sigma } => PolicyNoise::Additive { sigma: sigma as f32 as f64 },
        };
        Self { meta, policy }
    }

    pub fn observation_mode(&self) -> ObservationMode {
        self.policy.observation_mode()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = Vec::new();
        w.extend_from_slice(CHECKPOINT_MAGIC);
        w.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        w.push(self.policy.algorithm.tag());
        let shape = self.policy.actor.input_shape();
        let (mode, cw, ch) = match self.observation_mode() {
            ObservationMode::Lidar => (0u8, 0u16, 0u16),
            ObservationMode::Camera => (1, shape[1] as u16, shape[0] as u16),
        };
        w.push(mode);
        w.extend_from_slice(&cw.to_le_bytes());
        w.extend_from_slice(&ch.to_le_bytes());
        w.extend_from_slice(&self.meta.seed.to_le_bytes());
        w.extend_from_slice(&self.meta.steps.to_le_bytes());
        w.extend_from_slice(&hex_to_bytes(&self.meta.config_hash));
        w.extend_from_slice(&hex_to_bytes(&self.meta.map_hash));

        w.extend_from_slice(&1u16.to_le_bytes());
        write_name(&mut w, "actor");
        write_network(&mut w, &self.policy.actor);

        let (name, values) = match self.policy.noise {
            PolicyNoise::Gaussian { log_std } => ("log_std", log_std.to_vec()),
            PolicyNoise::Additive { sigma } => ("exploration_noise", vec![sigma]),
        };
        w.extend_from_slice(&1u16.to_le_bytes());
        write_name(&mut w, name);
        write_tensor(&mut w, &Tensor::from_vec(&[values.len()], values).expect("vector shape"));
        w
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = r.u16()?;
        if version != CHECKPOINT_VERSION {
            return Err(CheckpointError::UnsupportedVersion(version));
        }
        let tag = r.u8()?;
        let algorithm = Algorithm::from_tag(tag).ok_or_else(|| CheckpointError::Corrupt(format!("unknown algorithm tag {tag}")))?;
        let mode = match r.u8()? {
            0 => ObservationMode::Lidar,
            1 => ObservationMode::Camera,
            m => return Err(CheckpointError::Corrupt(format!("unknown observation mode {m}"))),
        };
        let (cw, ch) = (r.u16()? as usize, r.u16()? as usize);
        let seed = r.u64()?;
        let steps = r.u64()?;
        let config_hash = crate::hash_hex(r.take(32)?);
        let map_hash = crate::hash_hex(r.take(32)?);

        let mut actor = None;
        for _ in 0..r.u16()? {
            let name = r.name()?;
            let net = read_network(&mut r)?;
            if name == "actor" {
                actor = Some(net);
            }
        }
        let actor = actor.ok_or_else(|| CheckpointError::Corrupt("no actor network".into()))?;
        let mut noise = None;
        for _ in 0..r.u16()? {
            let name = r.name()?;
            let t = read_tensor(&mut r)?;
            noise = match (name.as_str(), t.data()) {
                ("log_std", [a, b]) => Some(PolicyNoise::Gaussian { log_std: [*a, *b] }),
                ("exploration_noise", [s]) => Some(PolicyNoise::Additive { sigma: *s }),
                _ => noise,
            };
        }
        if r.pos != bytes.len() {
            return Err(CheckpointError::Corrupt(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let noise = noise.ok_or_else(|| CheckpointError::Corrupt("missing policy noise tensor".into()))?;
        let policy = PolicyNet { algorithm, actor, noise };
        let expected_shape = match mode {
            ObservationMode::Lidar => policy.actor.input_shape().len() == 1,
            ObservationMode::Camera => policy.actor.input_shape() == [ch, cw, 3],
        };
        if !expected_shape {
            return Err(CheckpointError::Corrupt("header observation mode disagrees with the actor input".into()));
        }
        Ok(Self { meta: CheckpointMeta { seed, steps, config_hash, map_hash }, policy })
    }

    /// Checks provenance: a config mismatch is an error, a map mismatch only warns.
    pub fn validate(&self, config_hash: Option<&str>, map_hash: Option<&str>) -> Result<(), CheckpointError> {
        if let Some(expected) = config_hash {
            if expected != self.meta.config_hash {
                return Err(CheckpointError::ConfigHashMismatch { expected: expected.into(), found: self.meta.config_hash.clone() });
            }
        }
        if let Some(expected) = map_hash {
            if expected != self.meta.map_hash {
                log::warn!("checkpoint was trained on map {} but evaluated on {}", &self.meta.map_hash[..12], &expected[..expected.len().min(12)]);
            }
        }
        Ok(())
    }
}

/// Writes atomically through a temporary sibling file.
pub fn save_checkpoint(checkpoint: &PolicyCheckpoint, path: &Path) -> Result<(), CheckpointError> {
    let tmp = path.with_extension("dnav.tmp");
    std::fs::write(&tmp, checkpoint.encode()).map_err(|e| CheckpointError::Io(e.to_string()))?;
    std::fs::rename(&tmp, path).map_err(|e| CheckpointError::Io(e.to_string()))
}

pub fn load_checkpoint(path: &Path) -> Result<PolicyCheckpoint, CheckpointError> {
    let bytes = std::fs::read(path).map_err(|e| CheckpointError::Io(format!("{}: {e}", path.display())))?;
    PolicyCheckpoint::decode(&bytes)
}

fn hex_to_bytes(hex: &str) -> [u8; 32] {
    let mut out = [0u8; 32];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = hex.get(2 * i..2 * i + 2).and_then(|s| u8::from_str_radix(s, 16).ok()).unwrap_or(0);
    }
    out
}

fn write_name(w: &mut Vec<u8>, name: &str) {
    w.extend_from_slice(&(name.len() as u16).to_le_bytes());
    w.extend_from_slice(name.as_bytes());
}

fn write_shape(w: &mut Vec<u8>, shape: &[usize]) {
    w.push(shape.len() as u8);
    for &d in shape {
        w.extend_from_slice(&(d as u32).to_le_bytes());
    }
}

fn write_tensor(w: &mut Vec<u8>, t: &Tensor) {
    write_shape(w, t.shape());
    for &v in t.data() {
        w.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

fn activation_tag(a: Activation) -> u8 {
    match a {
        Activation::Tanh => 0,
        Activation::Relu => 1,
        Activation::Identity => 2,
    }
}

fn write_network(w: &mut Vec<u8>, net: &Network) {
    let spec = net.spec();
    write_shape(w, &spec.input_shape);
    w.extend_from_slice(&(spec.layers.len() as u16).to_le_bytes());
    for layer in &spec.layers {
        match *layer {
            LayerSpec::Dense { inputs, outputs, activation } => {
                w.push(1);
                for v in [inputs, outputs] {
                    w.extend_from_slice(&(v as u32).to_le_bytes());
                }
                w.push(activation_tag(activation));
            }
            LayerSpec::Conv2d { in_channels, out_channels, kernel, stride, activation } => {
                w.push(2);
                for v in [in_channels, out_channels, kernel, stride] {
                    w.extend_from_slice(&(v as u32).to_le_bytes());
                }
                w.push(activation_tag(activation));
            }
            LayerSpec::Flatten => w.push(3),
        }
    }
    for t in &net.params().tensors {
        write_tensor(w, t);
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or(CheckpointError::Truncated)?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn name(&mut self) -> Result<String, CheckpointError> {
        let n = self.u16()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| CheckpointError::Corrupt("name is not UTF-8".into()))
    }

    fn shape(&mut self) -> Result<Vec<usize>, CheckpointError> {
        let rank = self.u8()? as usize;
        (0..rank).map(|_| self.u32().map(|d| d as usize)).collect()
    }
}

fn read_activation(r: &mut Reader) -> Result<Activation, CheckpointError> {
    match r.u8()? {
        0 => Ok(Activation::Tanh),
        1 => Ok(Activation::Relu),
        2 => Ok(Activation::Identity),
        t => Err(CheckpointError::Corrupt(format!("unknown activation tag {t}"))),
    }
}

fn read_tensor(r: &mut Reader) -> Result<Tensor, CheckpointError> {
    let shape = r.shape()?;
    let n = shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).ok_or(CheckpointError::Truncated)?;
    let raw = r.take(n.checked_mul(4).ok_or(CheckpointError::Truncated)?)?;
    let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
    Tensor::from_vec(&shape, data).map_err(|e| CheckpointError::Corrupt(e.to_string()))
}

fn read_network(r: &mut Reader) -> Result<Network, CheckpointError> {
    let input_shape = r.shape()?;
    let count = r.u16()?;
    let mut layers = Vec::with_capacity(count as usize);
    for _ in 0..count {
        layers.push(match r.u8()? {
            1 => {
                let (inputs, outputs) = (r.u32()? as usize, r.u32()? as usize);
                LayerSpec::Dense { inputs, outputs, activation: read_activation(r)? }
            }
            2 => {
                let (in_channels, out_channels, kernel, stride) =
                    (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
                LayerSpec::Conv2d { in_channels, out_channels, kernel, stride, activation: read_activation(r)? }
            }
            3 => LayerSpec::Flatten,
            t => return Err(CheckpointError::Corrupt(format!("unknown layer kind {t}"))),
        });
    }
    let spec = NetworkSpec { input_shape, layers };
    let tensors = spec.param_shapes().iter().map(|_| read_tensor(r)).collect::<Result<Vec<_>, _>>()?;
    Network::new(spec, ParameterSet { tensors }).map_err(|e| CheckpointError::Corrupt(e.to_string()))
}
