//! Binary checkpoint format. All integers are little-endian `u32`.
//!
//! ```text
//! "TIDE"                       4-byte magic
//! version                      currently 1
//! config_len, config           UTF-8 JSON of the model configuration
//! repeated until end of file:
//!   name_len, name             UTF-8 parameter name
//!   rank, extents[rank]
//!   values                     prod(extents) little-endian f32
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{TideConfig, TideVae};
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"TIDE";
pub const VERSION: u32 = 1;

pub fn encode_checkpoint<T: Scalar>(model: &TideVae<T>) -> Vec<u8> {
    let config = serde_json::to_string(model.config()).expect("config serializes");
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(config.len() as u32).to_le_bytes());
    out.extend_from_slice(config.as_bytes());
    for (name, t) in model.params().iter() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
        for &e in t.shape() {
            out.extend_from_slice(&(e as u32).to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn fail<T>(&self, detail: impl Into<String>) -> Result<T> {
        Err(Error::Checkpoint { offset: self.pos, detail: detail.into() })
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return self.fail(format!(
                "truncated while reading {what}: need {n} bytes, {} left",
                self.bytes.len() - self.pos
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn at_end(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

pub fn decode_checkpoint<T: Scalar>(bytes: &[u8]) -> Result<TideVae<T>> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4, "magic")? != MAGIC {
        cur.pos = 0;
        return cur.fail("bad magic, expected \"TIDE\"");
    }
    let version = cur.u32("version")?;
    if version != VERSION {
        cur.pos -= 4;
        return cur.fail(format!("unsupported version {version}"));
    }
    let len = cur.u32("config length")? as usize;
    let config_start = cur.pos;
    let raw = cur.take(len, "config")?;
    let config: TideConfig = std::str::from_utf8(raw)
        .map_err(|e| e.to_string())
        .and_then(|s| serde_json::from_str(s).map_err(|e| e.to_string())).map_err(|e| Error::Checkpoint { offset: config_start, detail: format!("bad config: {e}") })?;
    let mut model = TideVae::<T>::new(config, &mut Rng::new(0))
        .map_err(|e| Error::Checkpoint { offset: config_start, detail: e.to_string() })?;
    let mut seen = vec![false; model.params().len()];
    while !cur.at_end() {
        let record = cur.pos;
        let name_len = cur.u32("name length")? as usize;
        let name = std::str::from_utf8(cur.take(name_len, "name")?)
            .map_err(|_| Error::Checkpoint { offset: record, detail: "name is not UTF-8".into() })?
            .to_string();
        let Some(id) = model.params().find(&name) else {
            return Err(Error::Checkpoint { offset: record, detail: format!("unknown parameter {name:?}") });
        };
        if std::mem::replace(&mut seen[id.0], true) {
            return Err(Error::Checkpoint { offset: record, detail: format!("duplicate parameter {name:?}") });
        }
        let rank = cur.u32("rank")? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(cur.u32("extent")? as usize);
        }
        if shape != model.params().get(id).shape() {
            return Err(Error::Checkpoint {
                offset: record,
                detail: format!("{name}: shape {shape:?}, expected {:?}", model.params().get(id).shape()),
            });
        }
        let count: usize = shape.iter().product();
        let raw = cur.take(count * 4, "values")?;
        let data = raw
            .chunks_exact(4)
            .map(|c| T::of(f32::from_le_bytes(c.try_into().unwrap()) as f64))
            .collect();
        model.params_mut().set(id, Tensor::from_vec(&shape, data)?)?;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return cur.fail(format!("missing parameter {:?}", model.params().names()[missing]));
    }
    Ok(model)
}

pub fn save_checkpoint<T: Scalar>(model: &TideVae<T>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_checkpoint(model))?;
    Ok(())
}

pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<TideVae<T>> {
    decode_checkpoint(&std::fs::read(path)?)
}
