//! Flat binary policy checkpoint, all integers and floats little-endian:
//!
//! ```text
//! magic        8 bytes  "ARSTPOL\0"
//! version      u32      1
//! obs_dim      u32
//! n_cont       u32
//! n_disc       u32
//! n_hidden     u32, then n_hidden u32 widths
//! n_layers     u32, then (out, in) u32 pairs: trunk, mean, logits, value
//! n_params     u32
//! params       n_params f32: per layer a row-major out×in weight matrix
//!              followed by out biases, then n_cont log-std values
//! ```
//!
//! A JSON sidecar with the same stem carries the run configuration and
//! training statistics.

use std::path::{Path, PathBuf};

use crate::net::PolicyNetwork;
use crate::AgentError;

pub const MAGIC: &[u8; 8] = b"ARSTPOL\0";
pub const VERSION: u32 = 1;

pub fn to_bytes(net: &PolicyNetwork) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 4 * net.params.len());
    let put = |v: usize, out: &mut Vec<u8>| out.extend_from_slice(&(v as u32).to_le_bytes());
    out.extend_from_slice(MAGIC);
    put(VERSION as usize, &mut out);
    put(net.obs_dim, &mut out);
    put(net.n_cont, &mut out);
    put(net.n_disc, &mut out);
    put(net.hidden.len(), &mut out);
    for &h in &net.hidden {
        put(h, &mut out);
    }
    let layers = net.layers();
    put(layers.len(), &mut out);
    for l in &layers {
        put(l.out, &mut out);
        put(l.inp, &mut out);
    }
    put(net.params.len(), &mut out);
    for &p in &net.params {
        out.extend_from_slice(&(p as f32).to_le_bytes());
    }
    out
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], AgentError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or_else(|| AgentError::InvalidCheckpoint("truncated".into()))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize, AgentError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }
}

pub fn from_bytes(data: &[u8]) -> Result<PolicyNetwork, AgentError> {
    let bad = |m: &str| AgentError::InvalidCheckpoint(m.into());
    let mut r = Reader { data, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = r.u32()?;
    if version != VERSION as usize {
        return Err(AgentError::InvalidCheckpoint(format!("unsupported version {version}")));
    }
    let obs_dim = r.u32()?;
    let n_cont = r.u32()?;
    let n_disc = r.u32()?;
    let n_hidden = r.u32()?;
    if n_hidden > 64 {
        return Err(bad("implausible layer count"));
    }
    let hidden = (0..n_hidden).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
    let mut net = PolicyNetwork { obs_dim, hidden, n_cont, n_disc, params: Vec::new() };
    let layers = net.layers();
    if r.u32()? != layers.len() {
        return Err(bad("layer count mismatch"));
    }
    for l in &layers {
        if (r.u32()?, r.u32()?) != (l.out, l.inp) {
            return Err(bad("layer shape mismatch"));
        }
    }
    let n = r.u32()?;
    if n != net.param_count() {
        return Err(bad("parameter count mismatch"));
    }
    let raw = r.take(4 * n)?;
    net.params = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64).collect();
    if r.pos != data.len() {
        return Err(bad("trailing bytes"));
    }
    if !net.is_finite() {
        return Err(bad("non-finite parameters"));
    }
    Ok(net)
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes the checkpoint and its JSON sidecar.
pub fn save(net: &PolicyNetwork, path: &Path, sidecar: &serde_json::Value) -> Result<(), AgentError> {
    std::fs::write(path, to_bytes(net))?;
    let text = serde_json::to_string_pretty(sidecar).expect("json value serializes");
    std::fs::write(sidecar_path(path), text + "\n")?;
    Ok(())
}

pub fn load(path: &Path) -> Result<PolicyNetwork, AgentError> {
    from_bytes(&std::fs::read(path)?)
}

pub fn load_sidecar(path: &Path) -> Result<serde_json::Value, AgentError> {
    let text = std::fs::read_to_string(sidecar_path(path))?;
    serde_json::from_str(&text).map_err(|e| AgentError::InvalidCheckpoint(format!("sidecar: {e}")))
}
