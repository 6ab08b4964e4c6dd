//! Binary model checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   8 bytes  "XLPECKPT"
//! version u32      1
//! config  u64 length + UTF-8 `key = value` lines
//! blocks  u64 count, then per block:
//!         u64 name length + UTF-8 name, u64 rows, u64 cols, rows·cols f64
//! ```
//!
//! Values are stored as raw IEEE-754 bits, so a round trip is bit-exact.

use std::path::Path;

use xlpe_core::numkit::Matrix;
use xlpe_core::xlsan::{Model, ModelConfig};

use crate::config::RunConfig;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"XLPECKPT";
const VERSION: u32 = 1;
const MODEL_KEYS: &[&str] = &[
    "variant",
    "d_model",
    "heads",
    "tau",
    "d_ff",
    "enc_layers",
    "dec_layers",
    "vocab",
    "fusion",
    "xl_injection",
];

/// Serializes a model.
pub fn to_bytes(model: &Model) -> Vec<u8> {
    let cfg = model.config();
    let run = RunConfig {
        model: cfg.clone(),
        ..RunConfig::default()
    };
    let mut header = String::new();
    for line in run.to_text().lines() {
        if MODEL_KEYS.iter().any(|k| line.split(" = ").next() == Some(k)) {
            header.push_str(line);
            header.push('\n');
        }
    }
    header.push_str(&format!("seed = {}\n", cfg.seed));

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    put_str(&mut out, &header);
    out.extend_from_slice(&(model.params().len() as u64).to_le_bytes());
    for (name, m) in model.param_names().iter().zip(model.params()) {
        put_str(&mut out, name);
        out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
        for v in m.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u64).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Input(format!("checkpoint truncated at byte {}", self.at)))?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn len(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Input("checkpoint length overflows".into()))
    }

    fn string(&mut self) -> Result<&'a str> {
        let n = self.len()?;
        std::str::from_utf8(self.take(n)?).map_err(|_| Error::Input("checkpoint string is not UTF-8".into()))
    }
}

/// Parses a checkpoint produced by [`to_bytes`].
pub fn from_bytes(bytes: &[u8]) -> Result<Model> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(8).ok() != Some(&MAGIC[..]) {
        return Err(Error::Input("not a checkpoint (bad magic)".into()));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::Input(format!("unsupported checkpoint version {version}")));
    }
    let cfg = parse_header(r.string()?)?;
    let count = r.len()?;
    let mut names = Vec::new();
    let mut values = Vec::new();
    for _ in 0..count {
        names.push(r.string()?.to_owned());
        let (rows, cols) = (r.len()?, r.len()?);
        let n = rows
            .checked_mul(cols)
            .filter(|n| n.checked_mul(8).is_some())
            .ok_or_else(|| Error::Input("checkpoint block too large".into()))?;
        let data = r
            .take(n * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        values.push(Matrix::new(rows, cols, data)?);
    }
    if r.at != bytes.len() {
        return Err(Error::Input("trailing bytes after checkpoint".into()));
    }
    let model = Model::from_params(cfg, values)?;
    if model.param_names() != names.as_slice() {
        return Err(Error::Input("checkpoint parameter names do not match the configuration".into()));
    }
    Ok(model)
}

fn parse_header(text: &str) -> Result<ModelConfig> {
    let mut run = RunConfig::default();
    let mut seed = None;
    for line in text.lines() {
        let (k, v) = line
            .split_once(" = ")
            .ok_or_else(|| Error::Input(format!("bad checkpoint header line `{line}`")))?;
        if k == "seed" {
            seed = Some(v.parse().map_err(|_| Error::Input(format!("bad seed `{v}`")))?);
        } else if MODEL_KEYS.contains(&k) {
            run.set(k, v)?;
        } else {
            return Err(Error::Input(format!("unknown checkpoint header key `{k}`")));
        }
    }
    let seed = seed.ok_or_else(|| Error::Input("checkpoint header lacks a seed".into()))?;
    Ok(ModelConfig { seed, ..run.model })
}

/// Writes a checkpoint file.
pub fn save(model: &Model, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(model)).map_err(Error::write(path))
}

/// Reads a checkpoint file.
pub fn load(path: &Path) -> Result<Model> {
    let bytes = std::fs::read(path).map_err(Error::read(path))?;
    from_bytes(&bytes).map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}
