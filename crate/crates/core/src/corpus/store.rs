//! Embedding stores and their two on-disk forms.
//!
//! Text form: a header line `{"dim": D}` (optionally carrying `"beta"` when the
//! file holds a policy vector) followed by one
//! `{"prompt_id", "response_id", "values": [..]}` record per line.
//!
//! Binary form: the 8 magic bytes `REALEMB1`, a little-endian `u32` dimension,
//! then repeated records of `u16` key length, key bytes
//! `prompt_id \0 response_id`, and `D` little-endian `f32` values.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::Embedding;
use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 8] = b"REALEMB1";

/// Map from `(prompt_id, response_id)` to a fixed-dimension embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    vectors: BTreeMap<(String, String), Embedding>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "store dimension must be at least 1".into(),
            ));
        }
        Ok(Self {
            dim,
            vectors: BTreeMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(
        &mut self,
        prompt_id: impl Into<String>,
        response_id: impl Into<String>,
        embedding: Embedding,
    ) -> Result<()> {
        if embedding.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: embedding.dim(),
            });
        }
        match self.vectors.entry((prompt_id.into(), response_id.into())) {
            Entry::Occupied(e) => Err(Error::DuplicateKey {
                prompt_id: e.key().0.clone(),
                response_id: e.key().1.clone(),
            }),
            Entry::Vacant(e) => {
                e.insert(embedding);
                Ok(())
            }
        }
    }

    pub fn get(&self, prompt_id: &str, response_id: &str) -> Option<&Embedding> {
        // BTreeMap<(String, String)> cannot be queried by (&str, &str) without allocating.
        self.vectors
            .get(&(prompt_id.to_owned(), response_id.to_owned()))
    }

    pub fn require(&self, prompt_id: &str, response_id: &str) -> Result<&Embedding> {
        self.get(prompt_id, response_id)
            .ok_or_else(|| Error::MissingEmbedding {
                prompt_id: prompt_id.into(),
                response_id: response_id.into(),
            })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, &Embedding)> {
        self.vectors
            .iter()
            .map(|((p, r), e)| (p.as_str(), r.as_str(), e))
    }

    /// A copy with every vector passed through `f`.
    pub fn map(&self, mut f: impl FnMut(&Embedding) -> Result<Embedding>) -> Result<Self> {
        let mut out = Self::new(self.dim)?;
        for ((p, r), e) in &self.vectors {
            out.insert(p.clone(), r.clone(), f(e)?)?;
        }
        Ok(out)
    }
}

/// Header of the text embedding format.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingHeader {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TextRecord<'a> {
    #[serde(borrow)]
    prompt_id: std::borrow::Cow<'a, str>,
    #[serde(borrow)]
    response_id: std::borrow::Cow<'a, str>,
    values: Vec<f64>,
}

/// Load either form, detected by the leading magic bytes.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingStore> {
    load_embeddings_with_header(path).map(|(s, _)| s)
}

pub fn load_embeddings_with_header(
    path: impl AsRef<Path>,
) -> Result<(EmbeddingStore, EmbeddingHeader)> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut magic = [0u8; 8];
    let n = read_up_to(&mut file, &mut magic).map_err(|e| Error::io(path, e))?;
    drop(file);
    if n == magic.len() && &magic == BINARY_MAGIC {
        let store = load_binary(path)?;
        let dim = store.dim();
        Ok((store, EmbeddingHeader { dim, beta: None }))
    } else {
        load_text(path)
    }
}

fn read_up_to(r: &mut impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..])? {
            0 => break,
            k => filled += k,
        }
    }
    Ok(filled)
}

fn record_error(path: &Path, line: usize, err: Error) -> Error {
    match err {
        Error::Parse { .. } | Error::Io { .. } => err,
        other => Error::parse(path, line, other.to_string()),
    }
}

fn load_text(path: &Path) -> Result<(EmbeddingStore, EmbeddingHeader)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let header: EmbeddingHeader = loop {
        match lines.next() {
            None => return Err(Error::format(path, "missing header line {\"dim\": D}")),
            Some((i, line)) => {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                break serde_json::from_str(&line)
                    .map_err(|e| Error::parse(path, i + 1, format!("bad header: {e}")))?;
            }
        }
    };
    let mut store = EmbeddingStore::new(header.dim).map_err(|e| record_error(path, 1, e))?;
    for (i, line) in lines {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TextRecord<'_> =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, line_no, e.to_string()))?;
        let emb = Embedding::new(rec.values).map_err(|e| record_error(path, line_no, e))?;
        store
            .insert(
                rec.prompt_id.into_owned(),
                rec.response_id.into_owned(),
                emb,
            )
            .map_err(|e| record_error(path, line_no, e))?;
    }
    Ok((store, header))
}

fn load_binary(path: &Path) -> Result<EmbeddingStore> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let truncated = || Error::format(path, "truncated binary embedding file");
    let mut pos = BINARY_MAGIC.len();
    let dim = u32::from_le_bytes(
        bytes
            .get(pos..pos + 4)
            .ok_or_else(truncated)?
            .try_into()
            .unwrap(),
    ) as usize;
    pos += 4;
    let mut store = EmbeddingStore::new(dim).map_err(|e| Error::format(path, e.to_string()))?;
    let mut record = 0usize;
    while pos < bytes.len() {
        record += 1;
        let key_len = u16::from_le_bytes(
            bytes
                .get(pos..pos + 2)
                .ok_or_else(truncated)?
                .try_into()
                .unwrap(),
        ) as usize;
        pos += 2;
        let key = bytes.get(pos..pos + key_len).ok_or_else(truncated)?;
        pos += key_len;
        let key = std::str::from_utf8(key)
            .map_err(|_| Error::format(path, format!("record {record}: key is not UTF-8")))?;
        let (prompt_id, response_id) = key.split_once('\0').ok_or_else(|| {
            Error::format(path, format!("record {record}: key lacks NUL separator"))
        })?;
        let raw = bytes.get(pos..pos + 4 * dim).ok_or_else(truncated)?;
        pos += 4 * dim;
        let values: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let emb = Embedding::from_f32(&values)
            .map_err(|e| Error::format(path, format!("record {record}: {e}")))?;
        store
            .insert(prompt_id, response_id, emb)
            .map_err(|e| Error::format(path, format!("record {record}: {e}")))?;
    }
    Ok(store)
}

/// Write the text form; `beta` is only set for persisted policies.
pub fn write_embeddings_text(
    store: &EmbeddingStore,
    path: impl AsRef<Path>,
    beta: Option<f64>,
) -> Result<usize> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e: std::io::Error| Error::io(path, e);
    let header = EmbeddingHeader {
        dim: store.dim(),
        beta,
    };
    serde_json::to_writer(&mut w, &header).map_err(|e| io(std::io::Error::other(e)))?;
    w.write_all(b"\n").map_err(io)?;
    for (p, r, e) in store.iter() {
        let rec = TextRecord {
            prompt_id: p.into(),
            response_id: r.into(),
            values: e.as_slice().to_vec(),
        };
        serde_json::to_writer(&mut w, &rec).map_err(|e| io(std::io::Error::other(e)))?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(store.len())
}

/// Write the binary form. Values are narrowed to `f32`.
pub fn write_embeddings_binary(store: &EmbeddingStore, path: impl AsRef<Path>) -> Result<usize> {
    let path = path.as_ref();
    let dim = u32::try_from(store.dim())
        .map_err(|_| Error::InvalidParameter("dimension exceeds u32".into()))?;
    let mut buf = Vec::with_capacity(12 + store.len() * (16 + 4 * store.dim()));
    buf.extend_from_slice(BINARY_MAGIC);
    buf.extend_from_slice(&dim.to_le_bytes());
    for (p, r, e) in store.iter() {
        if p.contains('\0') || r.contains('\0') {
            return Err(Error::InvalidParameter(format!(
                "key ({p}, {r}) contains NUL"
            )));
        }
        let key = format!("{p}\0{r}");
        let key_len = u16::try_from(key.len())
            .map_err(|_| Error::InvalidParameter(format!("key ({p}, {r}) too long")))?;
        buf.extend_from_slice(&key_len.to_le_bytes());
        buf.extend_from_slice(key.as_bytes());
        for &v in e.as_slice() {
            let narrowed = v as f32;
            if !narrowed.is_finite() {
                return Err(Error::NonFinite);
            }
            buf.extend_from_slice(&narrowed.to_le_bytes());
        }
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))?;
    Ok(store.len())
}
