//! `EVEC` binary vector store.
//!
//! Layout, all little-endian: magic `EVEC`, version `u16`, dim `u32`,
//! count `u64`, then `count` records of `[id_len u16][id UTF-8][dim x f32]`.

use std::collections::BTreeMap;
use std::path::Path;

use super::Vector;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"EVEC";
const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 + 8;

/// Record id reserved for exporter metadata; skipped on load.
pub const META_ID: &str = "__meta__";

/// Vectors of one family (document or entity), keyed by id.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore {
    pub dim: usize,
    pub vectors: BTreeMap<String, Vector>,
}

impl VectorStore {
    pub fn new(dim: usize) -> Self {
        VectorStore {
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, id: impl Into<String>, v: Vector) -> Result<()> {
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: v.dim(),
            });
        }
        self.vectors.insert(id.into(), v);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Vector> {
        self.vectors.get(id)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

pub fn encode_vectors(store: &VectorStore) -> Result<Vec<u8>> {
    let dim = u32::try_from(store.dim)
        .map_err(|_| Error::VectorStore(format!("dim {} does not fit u32", store.dim)))?;
    let mut out = Vec::with_capacity(HEADER_LEN + store.len() * (store.dim * 4 + 16));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    out.extend_from_slice(&(store.len() as u64).to_le_bytes());
    for (id, v) in &store.vectors {
        if v.dim() != store.dim {
            return Err(Error::DimensionMismatch {
                expected: store.dim,
                actual: v.dim(),
            });
        }
        let id_len = u16::try_from(id.len())
            .map_err(|_| Error::VectorStore(format!("id `{id}` longer than 65535 bytes")))?;
        out.extend_from_slice(&id_len.to_le_bytes());
        out.extend_from_slice(id.as_bytes());
        for x in v.as_slice() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let s = self.buf.get(self.pos..end)?;
        self.pos = end;
        Some(s)
    }
}

pub fn decode_vectors(bytes: &[u8]) -> Result<VectorStore> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::VectorStore("file shorter than header".into()));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::VectorStore("bad magic, expected EVEC".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(Error::VectorStore(format!("unsupported version {version}")));
    }
    let dim = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(bytes[10..18].try_into().unwrap());
    if dim == 0 {
        return Err(Error::VectorStore("header declares dim 0".into()));
    }
    let mut r = Reader {
        buf: bytes,
        pos: HEADER_LEN,
    };
    let mut store = VectorStore::new(dim);
    for record in 0..count {
        let truncated = || Error::Truncated { record, count };
        let id_len = r.take(2).ok_or_else(truncated)?;
        let id_len = u16::from_le_bytes([id_len[0], id_len[1]]) as usize;
        let id = r.take(id_len).ok_or_else(truncated)?;
        let id = std::str::from_utf8(id)
            .map_err(|_| Error::VectorStore(format!("record {record}: id is not UTF-8")))?
            .to_string();
        let raw = r.take(dim * 4).ok_or_else(truncated)?;
        let values: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if id == META_ID {
            continue;
        }
        let v = Vector::new(values).map_err(|_| Error::NonFinite(id.clone()))?;
        if store.vectors.insert(id.clone(), v).is_some() {
            return Err(Error::VectorStore(format!("duplicate id `{id}`")));
        }
    }
    if r.pos != bytes.len() {
        return Err(Error::VectorStore(format!(
            "{} trailing bytes after {count} records",
            bytes.len() - r.pos
        )));
    }
    Ok(store)
}

pub fn save_vectors(store: &VectorStore, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_vectors(store)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_vectors(path: impl AsRef<Path>) -> Result<VectorStore> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_vectors(&bytes)
}
