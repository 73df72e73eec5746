//! Checkpoint container for named tensors.
//!
//! Layout:
//!
//! ```text
//! cogbert-checkpoint 1
//! tensors <count>
//! <name> <rows> <cols>      (one line per tensor, in store order)
//! end
//! <row-major f64 little-endian values of every tensor, concatenated>
//! ```
//!
//! The model configuration is written next to it as JSON, with the same
//! file stem and a `.json` extension.

use std::fs;
use std::path::{Path, PathBuf};

use super::config::ModelConfig;
use super::encoder::Encoder;
use crate::error::{Error, Result};
use crate::io::{read_json, write_json};
use crate::numerics::{ParamStore, Tensor2D};

const MAGIC: &str = "cogbert-checkpoint 1";

pub fn config_sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

pub fn encode_tensors(store: &ParamStore) -> Vec<u8> {
    let mut header = format!("{MAGIC}\ntensors {}\n", store.len());
    for p in store.iter() {
        header.push_str(&format!("{} {} {}\n", p.name, p.value.rows(), p.value.cols()));
    }
    header.push_str("end\n");
    let mut bytes = header.into_bytes();
    for p in store.iter() {
        for v in p.value.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    bytes
}

pub fn decode_tensors(bytes: &[u8]) -> Result<Vec<(String, Tensor2D)>> {
    let bad = |m: String| Error::Checkpoint(m);
    let mut pos = 0;
    let mut next_line = || -> Result<&str> {
        let rest = &bytes[pos..];
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad("truncated header".into()))?;
        pos += nl + 1;
        std::str::from_utf8(&rest[..nl]).map_err(|_| bad("header is not UTF-8".into()))
    };
    if next_line()? != MAGIC {
        return Err(bad("not a cogbert checkpoint".into()));
    }
    let count: usize = next_line()?
        .strip_prefix("tensors ")
        .and_then(|c| c.parse().ok())
        .ok_or_else(|| bad("missing tensor count".into()))?;
    let mut shapes = Vec::with_capacity(count);
    for _ in 0..count {
        let line = next_line()?;
        let parts: Vec<&str> = line.split(' ').collect();
        let [name, rows, cols] = parts[..] else {
            return Err(bad(format!("bad header line `{line}`")));
        };
        let rows: usize = rows.parse().map_err(|_| bad(format!("bad rows in `{line}`")))?;
        let cols: usize = cols.parse().map_err(|_| bad(format!("bad cols in `{line}`")))?;
        shapes.push((name.to_string(), rows, cols));
    }
    if next_line()? != "end" {
        return Err(bad("missing header terminator".into()));
    }
    let expected: usize = shapes.iter().map(|(_, r, c)| r * c * 8).sum();
    let body = &bytes[pos..];
    if body.len() != expected {
        return Err(bad(format!("expected {expected} data bytes, found {}", body.len())));
    }
    let mut out = Vec::with_capacity(count);
    let mut chunks = body.chunks_exact(8);
    for (name, rows, cols) in shapes {
        let data = (0..rows * cols)
            .map(|_| f64::from_le_bytes(chunks.next().unwrap().try_into().unwrap()))
            .collect();
        out.push((name, Tensor2D::from_vec(rows, cols, data)?));
    }
    Ok(out)
}

impl Encoder {
    /// Writes the tensors to `path` and the config to its `.json` sidecar.
    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, encode_tensors(self.params())).map_err(|e| Error::io(path, e))?;
        write_json(&config_sidecar(path), self.config())
    }

    /// Loads a checkpoint using its sidecar config.
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: ModelConfig = read_json(&config_sidecar(path))?;
        Self::from_checkpoint(cfg, path)
    }

    /// Loads tensors for `cfg`; every tensor must be present with the expected shape.
    pub fn from_checkpoint(cfg: ModelConfig, path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let tensors = decode_tensors(&bytes)?;
        let mut enc = Encoder::zeroed(cfg)?;
        let mut problems = Vec::new();
        let mut seen = vec![false; enc.params().len()];
        for (name, t) in tensors {
            match enc.params().find(&name) {
                None => problems.push(format!("{name} (unexpected)")),
                Some(id) => {
                    let p = enc.params_mut().get_mut(id);
                    if p.value.shape() != t.shape() {
                        problems.push(format!(
                            "{name} (shape {:?}, expected {:?})",
                            t.shape(),
                            p.value.shape()
                        ));
                    } else {
                        p.value = t;
                        seen[id.index()] = true;
                    }
                }
            }
        }
        for (p, ok) in enc.params().iter().zip(&seen) {
            if !ok && !problems.iter().any(|m| m.starts_with(&format!("{} ", p.name))) {
                problems.push(format!("{} (missing)", p.name));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Checkpoint(format!("tensor mismatch: {}", problems.join(", "))));
        }
        Ok(enc)
    }
}

impl Encoder {
    /// Copies every checkpoint tensor whose name this encoder also has and
    /// returns the names that kept their current values. Checkpoint tensors
    /// with unknown names are ignored. The task-specific classifier head is
    /// skipped when its shape differs; any other shape mismatch is an error.
    pub fn load_matching(&mut self, path: &Path) -> Result<Vec<String>> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut seen = vec![false; self.params().len()];
        for (name, t) in decode_tensors(&bytes)? {
            let Some(id) = self.params().find(&name) else { continue };
            let p = self.params_mut().get_mut(id);
            if p.value.shape() != t.shape() {
                if name.starts_with("classifier.") {
                    continue;
                }
                return Err(Error::Checkpoint(format!(
                    "{name} has shape {:?}, expected {:?}",
                    t.shape(),
                    p.value.shape()
                )));
            }
            p.value = t;
            seen[id.index()] = true;
        }
        Ok(self
            .params()
            .iter()
            .zip(seen)
            .filter(|(_, s)| !s)
            .map(|(p, _)| p.name.clone())
            .collect())
    }
}
