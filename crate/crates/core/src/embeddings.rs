//! Per-token contextual embeddings stored in PEMB files.
//!
//! Binary layout, little-endian:
//!
//! ```text
//! "PEMB" | version: u16 = 1 | dim: u32 | count: u64
//! count × [ article_id: u32 | sentence: u32 | token: u32 | dim × f32 ]
//! ```
//!
//! A plain-text debug variant starts with a `PEMBTXT <version> <dim> <count>`
//! line followed by one `article sentence token v1 .. vdim` line per record.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::segment::Sentence;

pub const MAGIC: &[u8; 4] = b"PEMB";
pub const TEXT_MAGIC: &str = "PEMBTXT";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 + 8;

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("embedding file format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },
    #[error("no embedding for article {article_id}, sentence {sentence_index}, token {token_index}")]
    Missing {
        article_id: u32,
        sentence_index: usize,
        token_index: usize,
    },
    #[error("vector for {key:?} has length {actual}, expected {expected}")]
    Dimension {
        key: EmbeddingKey,
        expected: usize,
        actual: usize,
    },
    #[error("duplicate embedding key {0:?}")]
    Duplicate(EmbeddingKey),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn format_err(offset: usize, message: impl Into<String>) -> EmbeddingError {
    EmbeddingError::Format {
        offset,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EmbeddingKey {
    pub article_id: u32,
    pub sentence_index: u32,
    pub token_index: u32,
}

impl EmbeddingKey {
    pub fn new(article_id: u32, sentence_index: u32, token_index: u32) -> Self {
        EmbeddingKey {
            article_id,
            sentence_index,
            token_index,
        }
    }
}

/// What to return for tokens with no stored vector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OovPolicy {
    #[default]
    Zero,
    Error,
}

/// Token vectors of a fixed dimension. Records keep their insertion order
/// so that rewriting a loaded file reproduces it byte for byte.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    keys: Vec<EmbeddingKey>,
    data: Vec<f32>,
    index: HashMap<EmbeddingKey, usize>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dim must be positive");
        EmbeddingTable {
            dim,
            keys: Vec::new(),
            data: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn insert(&mut self, key: EmbeddingKey, vector: &[f32]) -> Result<(), EmbeddingError> {
        if vector.len() != self.dim {
            return Err(EmbeddingError::Dimension {
                key,
                expected: self.dim,
                actual: vector.len(),
            });
        }
        if self.index.contains_key(&key) {
            return Err(EmbeddingError::Duplicate(key));
        }
        self.index.insert(key, self.keys.len());
        self.keys.push(key);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn get(&self, key: &EmbeddingKey) -> Option<&[f32]> {
        self.index
            .get(key)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn iter(&self) -> impl Iterator<Item = (EmbeddingKey, &[f32])> {
        self.keys
            .iter()
            .zip(self.data.chunks_exact(self.dim))
            .map(|(&k, v)| (k, v))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.keys.len() * (12 + 4 * self.dim));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.keys.len() as u64).to_le_bytes());
        for (key, vector) in self.iter() {
            out.extend_from_slice(&key.article_id.to_le_bytes());
            out.extend_from_slice(&key.sentence_index.to_le_bytes());
            out.extend_from_slice(&key.token_index.to_le_bytes());
            for x in vector {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    /// Parse either the binary or the text format.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EmbeddingError> {
        if bytes.starts_with(TEXT_MAGIC.as_bytes()) {
            return Self::from_text(bytes);
        }
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(format_err(0, "bad magic, expected \"PEMB\""));
        }
        if bytes.len() < HEADER_LEN {
            return Err(format_err(bytes.len(), "truncated header"));
        }
        let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(format_err(4, format!("unsupported version {version}")));
        }
        let dim = u32_at(6) as usize;
        if dim == 0 {
            return Err(format_err(6, "dim must be positive"));
        }
        let count = u64::from_le_bytes(bytes[10..18].try_into().unwrap());
        let record_len = 12 + 4 * dim;
        let mut table = EmbeddingTable::new(dim);
        let mut offset = HEADER_LEN;
        let mut vector = vec![0f32; dim];
        for _ in 0..count {
            if offset + record_len > bytes.len() {
                return Err(format_err(
                    offset,
                    format!(
                        "truncated record, {} bytes left, need {record_len}",
                        bytes.len() - offset
                    ),
                ));
            }
            let key = EmbeddingKey::new(u32_at(offset), u32_at(offset + 4), u32_at(offset + 8));
            for (j, v) in vector.iter_mut().enumerate() {
                *v = f32::from_le_bytes(bytes[offset + 12 + 4 * j..offset + 16 + 4 * j].try_into().unwrap());
            }
            table.insert(key, &vector).map_err(|e| match e {
                EmbeddingError::Duplicate(k) => format_err(offset, format!("duplicate key {k:?}")),
                other => other,
            })?;
            offset += record_len;
        }
        if offset != bytes.len() {
            return Err(format_err(offset, "trailing bytes after last record"));
        }
        Ok(table)
    }

    fn from_text(bytes: &[u8]) -> Result<Self, EmbeddingError> {
        let text = std::str::from_utf8(bytes).map_err(|e| format_err(e.valid_up_to(), "invalid UTF-8"))?;
        let mut offset = 0;
        let mut lines = text.split_inclusive('\n');
        let header = lines.next().unwrap_or_default();
        let fields: Vec<&str> = header.split_whitespace().collect();
        let parse_header = || -> Option<(u16, usize, usize)> {
            if fields.len() != 4 || fields[0] != TEXT_MAGIC {
                return None;
            }
            Some((
                fields[1].parse().ok()?,
                fields[2].parse().ok()?,
                fields[3].parse().ok()?,
            ))
        };
        let (version, dim, count) =
            parse_header().ok_or_else(|| format_err(0, "expected header \"PEMBTXT <version> <dim> <count>\""))?;
        if version != VERSION {
            return Err(format_err(0, format!("unsupported version {version}")));
        }
        if dim == 0 {
            return Err(format_err(0, "dim must be positive"));
        }
        offset += header.len();
        let mut table = EmbeddingTable::new(dim);
        for line in lines {
            let here = offset;
            offset += line.len();
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 + dim {
                return Err(format_err(
                    here,
                    format!("expected {} fields, found {}", 3 + dim, fields.len()),
                ));
            }
            let int = |s: &str| {
                s.parse::<u32>()
                    .map_err(|_| format_err(here, format!("bad index {s:?}")))
            };
            let key = EmbeddingKey::new(int(fields[0])?, int(fields[1])?, int(fields[2])?);
            let vector = fields[3..]
                .iter()
                .map(|s| {
                    s.parse::<f32>()
                        .map_err(|_| format_err(here, format!("bad float {s:?}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            table.insert(key, &vector).map_err(|e| match e {
                EmbeddingError::Duplicate(k) => format_err(here, format!("duplicate key {k:?}")),
                other => other,
            })?;
        }
        if table.len() != count {
            return Err(format_err(
                offset,
                format!("header declares {count} records, found {}", table.len()),
            ));
        }
        Ok(table)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{TEXT_MAGIC} {VERSION} {} {}\n", self.dim, self.len());
        for (key, vector) in self.iter() {
            let _ = write!(out, "{} {} {}", key.article_id, key.sentence_index, key.token_index);
            for x in vector {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), EmbeddingError> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|source| EmbeddingError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable, EmbeddingError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| EmbeddingError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    EmbeddingTable::from_bytes(&bytes)
}

/// One vector per token of `sentence`.
pub fn sentence_vectors(
    table: &EmbeddingTable,
    article_id: u32,
    sentence: &Sentence,
    policy: OovPolicy,
) -> Result<Vec<Vec<f32>>, EmbeddingError> {
    sentence
        .tokens
        .iter()
        .map(|t| {
            let key = EmbeddingKey::new(article_id, sentence.index as u32, t.token_index as u32);
            match (table.get(&key), policy) {
                (Some(v), _) => Ok(v.to_vec()),
                (None, OovPolicy::Zero) => Ok(vec![0.0; table.dim()]),
                (None, OovPolicy::Error) => Err(EmbeddingError::Missing {
                    article_id,
                    sentence_index: sentence.index,
                    token_index: t.token_index,
                }),
            }
        })
        .collect()
}
