//! Versioned binary policy checkpoints.
//!
//! Layout (little-endian): magic `LWCK`, `u32` version, 32-byte SHA-256 of
//! the metadata JSON, `u64` metadata length, metadata JSON, `u64` parameter
//! count, then the parameters as `f64`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::AgentError;
use crate::nn::{NetShape, Network};
use crate::ppo::{PpoConfig, PpoPolicy};

pub const MAGIC: &[u8; 4] = b"LWCK";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Meta {
    config: PpoConfig,
    shape: NetShape,
}

pub fn to_bytes(policy: &PpoPolicy) -> Vec<u8> {
    let meta = serde_json::to_vec(&Meta { config: policy.config.clone(), shape: policy.net.shape })
        .expect("metadata serialises");
    let mut out = Vec::with_capacity(52 + meta.len() + 8 * policy.net.params.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&Sha256::digest(&meta));
    out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
    out.extend_from_slice(&meta);
    out.extend_from_slice(&(policy.net.params.len() as u64).to_le_bytes());
    for p in &policy.net.params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], AgentError> {
        if self.buf.len() < n {
            return Err(AgentError::Checkpoint("truncated file".into()));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn u64(&mut self) -> Result<u64, AgentError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<PpoPolicy, AgentError> {
    let mut r = Reader { buf: bytes };
    if r.take(4)? != MAGIC {
        return Err(AgentError::Checkpoint("not a policy checkpoint".into()));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(AgentError::Checkpoint(format!("unsupported version {version}")));
    }
    let digest = r.take(32)?.to_vec();
    let meta_len = r.u64()? as usize;
    let meta = r.take(meta_len)?;
    if Sha256::digest(meta).as_slice() != digest.as_slice() {
        return Err(AgentError::Checkpoint("config digest mismatch".into()));
    }
    let meta: Meta = serde_json::from_slice(meta).map_err(|e| AgentError::Checkpoint(e.to_string()))?;
    let n = r.u64()? as usize;
    let raw = r.take(n.checked_mul(8).ok_or_else(|| AgentError::Checkpoint("bad length".into()))?)?;
    let params = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let net = Network::from_params(meta.shape, params)
        .ok_or_else(|| AgentError::Checkpoint("parameter count does not match network shape".into()))?;
    Ok(PpoPolicy { config: meta.config, net })
}

pub fn save(policy: &PpoPolicy, path: &Path) -> Result<(), AgentError> {
    fs::write(path, to_bytes(policy))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<PpoPolicy, AgentError> {
    from_bytes(&fs::read(path)?)
}
