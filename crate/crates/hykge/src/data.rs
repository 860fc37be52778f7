//! Dataset ingestion, vocabularies, filtered-candidate indexes, and
//! portable checkpoints.
//!
//! Triple files hold one `head<TAB>relation<TAB>tail` fact per line.
//! Vocabulary ids are assigned lexicographically over the raw strings, so
//! the same files always produce the same ids regardless of load order.
//! The true-tail index spans the union of all splits and backs filtered
//! ranking.
//!
//! A checkpoint is a pair of files: `<path>` holds a flat `key = value`
//! manifest, `<path>.bin` the raw little-endian `f64` tensors concatenated
//! in [`TENSOR_NAMES`] order. Roundtrips are
//! bit-exact.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::models::{ModelKind, ModelState, ParamTensors, TENSOR_NAMES};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed line: {reason}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("empty {0} split")]
    EmptySplit(&'static str),
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("vocabulary mismatch: checkpoint hash {checkpoint:016x}, dataset hash {dataset:016x}")]
    VocabMismatch { checkpoint: u64, dataset: u64 },
}

/// An integer-coded fact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Triple {
    pub head: u32,
    pub relation: u32,
    pub tail: u32,
}

impl Triple {
    pub fn new(head: u32, relation: u32, tail: u32) -> Self {
        Self {
            head,
            relation,
            tail,
        }
    }

    pub fn h(&self) -> usize {
        self.head as usize
    }

    pub fn r(&self) -> usize {
        self.relation as usize
    }

    pub fn t(&self) -> usize {
        self.tail as usize
    }
}

/// Bijective string-to-id maps with ids dense and lexicographically ordered.
#[derive(Debug, Clone)]
pub struct Vocab {
    entities: Vec<String>,
    relations: Vec<String>,
    entity_ids: HashMap<String, u32>,
    relation_ids: HashMap<String, u32>,
}

impl Vocab {
    fn from_sorted(entities: Vec<String>, relations: Vec<String>) -> Self {
        let entity_ids = entities
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        let relation_ids = relations
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        Self {
            entities,
            relations,
            entity_ids,
            relation_ids,
        }
    }

    pub fn n_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn n_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn entity_id(&self, name: &str) -> Option<u32> {
        self.entity_ids.get(name).copied()
    }

    pub fn relation_id(&self, name: &str) -> Option<u32> {
        self.relation_ids.get(name).copied()
    }

    pub fn entity_name(&self, id: u32) -> &str {
        &self.entities[id as usize]
    }

    pub fn relation_name(&self, id: u32) -> &str {
        &self.relations[id as usize]
    }

    /// FNV-1a over all names in id order; pins checkpoints to a dataset.
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bytes: &[u8]| {
            for b in bytes {
                h ^= *b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for name in &self.entities {
            feed(name.as_bytes());
            feed(b"\n");
        }
        feed(b"\x00");
        for name in &self.relations {
            feed(name.as_bytes());
            feed(b"\n");
        }
        h
    }
}

/// Raw string triples of one split, in file order.
pub type RawTriples = Vec<(String, String, String)>;

/// Reads one split file: `head<TAB>relation<TAB>tail` per line, UTF-8,
/// blank lines rejected.
pub fn load_split(path: &Path) -> Result<RawTriples, DataError> {
    let text = fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        let lineno = i + 1;
        if line.is_empty() {
            return Err(DataError::MalformedLine {
                path: path.to_path_buf(),
                line: lineno,
                reason: "blank line".into(),
            });
        }
        let mut fields = line.split('\t');
        let (h, r, t) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
            (Some(h), Some(r), Some(t), None) => (h, r, t),
            _ => {
                return Err(DataError::MalformedLine {
                    path: path.to_path_buf(),
                    line: lineno,
                    reason: "expected exactly 3 tab-separated fields".into(),
                })
            }
        };
        if h.is_empty() || r.is_empty() || t.is_empty() {
            return Err(DataError::MalformedLine {
                path: path.to_path_buf(),
                line: lineno,
                reason: "empty field".into(),
            });
        }
        out.push((h.to_string(), r.to_string(), t.to_string()));
    }
    Ok(out)
}

/// A complete benchmark: three splits, the vocabulary over their union,
/// and the true-tail index used for filtered ranking.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub vocab: Vocab,
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
    true_tails: HashMap<(u32, u32), Vec<u32>>,
}

impl Dataset {
    /// Builds the vocabulary and index from raw splits. Duplicate triples
    /// within a split are kept; the index is deduplicated.
    pub fn build(
        train: RawTriples,
        valid: RawTriples,
        test: RawTriples,
    ) -> Result<Self, DataError> {
        if train.is_empty() {
            return Err(DataError::EmptySplit("train"));
        }
        let mut entities = BTreeSet::new();
        let mut relations = BTreeSet::new();
        for (h, r, t) in train.iter().chain(&valid).chain(&test) {
            entities.insert(h.clone());
            entities.insert(t.clone());
            relations.insert(r.clone());
        }
        let vocab = Vocab::from_sorted(
            entities.into_iter().collect(),
            relations.into_iter().collect(),
        );
        let encode = |raw: &RawTriples| -> Vec<Triple> {
            raw.iter()
                .map(|(h, r, t)| {
                    Triple::new(
                        vocab.entity_id(h).expect("entity in vocab"),
                        vocab.relation_id(r).expect("relation in vocab"),
                        vocab.entity_id(t).expect("entity in vocab"),
                    )
                })
                .collect()
        };
        let train = encode(&train);
        let valid = encode(&valid);
        let test = encode(&test);
        let true_tails = build_index(train.iter().chain(&valid).chain(&test));
        Ok(Self {
            vocab,
            train,
            valid,
            test,
            true_tails,
        })
    }

    /// Loads `train.txt`, `valid.txt`, `test.txt` from a directory.
    pub fn load_dir(dir: &Path) -> Result<Self, DataError> {
        let train = load_split(&dir.join("train.txt"))?;
        let valid = load_split(&dir.join("valid.txt"))?;
        let test = load_split(&dir.join("test.txt"))?;
        Self::build(train, valid, test)
    }

    pub fn n_entities(&self) -> usize {
        self.vocab.n_entities()
    }

    pub fn n_relations(&self) -> usize {
        self.vocab.n_relations()
    }

    /// All tails known true for `(h, r)` across every split, sorted.
    pub fn known_tails(&self, h: u32, r: u32) -> &[u32] {
        self.true_tails
            .get(&(h, r))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Augments the dataset with one reciprocal relation per original
    /// relation: every triple `(h, r, t)` of every split contributes a
    /// reverse fact `(t, r⁻¹, h)` to the index, and the train split gains
    /// the reverse triples so the reciprocal parameters receive signal.
    /// Reciprocal relation ids are `original + n_relations`.
    pub fn with_reciprocals(&self) -> Dataset {
        let n_r = self.n_relations() as u32;
        let mut relations: Vec<String> = self.vocab.relations.clone();
        relations.extend(
            self.vocab
                .relations
                .iter()
                .map(|r| format!("{r}@reciprocal")),
        );
        let vocab = Vocab {
            entities: self.vocab.entities.clone(),
            relations: relations.clone(),
            entity_ids: self.vocab.entity_ids.clone(),
            relation_ids: relations
                .iter()
                .enumerate()
                .map(|(i, s)| (s.clone(), i as u32))
                .collect(),
        };
        let reverse = |t: &Triple| Triple::new(t.tail, t.relation + n_r, t.head);
        let mut train = self.train.clone();
        train.extend(self.train.iter().map(reverse));
        let all = self
            .train
            .iter()
            .chain(&self.valid)
            .chain(&self.test)
            .flat_map(|t| [*t, reverse(t)])
            .collect::<Vec<_>>();
        Dataset {
            vocab,
            train,
            valid: self.valid.clone(),
            test: self.test.clone(),
            true_tails: build_index(all.iter()),
        }
    }
}

fn build_index<'a>(triples: impl Iterator<Item = &'a Triple>) -> HashMap<(u32, u32), Vec<u32>> {
    let mut index: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    for t in triples {
        index.entry((t.head, t.relation)).or_default().push(t.tail);
    }
    for tails in index.values_mut() {
        tails.sort_unstable();
        tails.dedup();
    }
    index
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

const CHECKPOINT_FORMAT: &str = "hykge-checkpoint-v1";

/// A model state together with the hash of the vocabulary it was trained on.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub state: ModelState,
    pub vocab_hash: u64,
}

impl Checkpoint {
    /// Fails with [`DataError::CorruptCheckpoint`] when the stored kind
    /// differs from the requested one.
    pub fn ensure_kind(&self, kind: ModelKind) -> Result<(), DataError> {
        if self.state.kind != kind {
            return Err(DataError::CorruptCheckpoint(format!(
                "manifest kind {} does not match requested kind {}",
                self.state.kind, kind
            )));
        }
        Ok(())
    }

    /// Fails with [`DataError::VocabMismatch`] when evaluated against a
    /// dataset with a different vocabulary.
    pub fn ensure_vocab(&self, dataset: &Dataset) -> Result<(), DataError> {
        let dataset_hash = dataset.vocab.hash();
        if self.vocab_hash != dataset_hash {
            return Err(DataError::VocabMismatch {
                checkpoint: self.vocab_hash,
                dataset: dataset_hash,
            });
        }
        Ok(())
    }
}

pub fn save_checkpoint(state: &ModelState, vocab_hash: u64, path: &Path) -> Result<(), DataError> {
    let io_err = |source: std::io::Error| DataError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut manifest = String::new();
    manifest.push_str(&format!("format = {CHECKPOINT_FORMAT}\n"));
    manifest.push_str(&format!("kind = {}\n", state.kind));
    manifest.push_str(&format!("dim = {}\n", state.dim));
    manifest.push_str(&format!("entities = {}\n", state.n_entities));
    manifest.push_str(&format!("relations = {}\n", state.n_relations));
    manifest.push_str(&format!("seed = {}\n", state.seed));
    manifest.push_str(&format!("vocab_hash = {vocab_hash:016x}\n"));
    for (name, tensor) in TENSOR_NAMES.iter().zip(state.params.as_list()) {
        manifest.push_str(&format!("tensor {name} = {}\n", tensor.len()));
    }
    fs::write(path, manifest).map_err(io_err)?;

    let bin_path = bin_path(path);
    let mut file = fs::File::create(&bin_path).map_err(io_err)?;
    let mut buf = Vec::with_capacity(state.params.total_len() * 8);
    for tensor in state.params.as_list() {
        for v in tensor {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    file.write_all(&buf).map_err(io_err)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, DataError> {
    let io_err = |source: std::io::Error| DataError::Io {
        path: path.to_path_buf(),
        source,
    };
    let corrupt = |msg: String| DataError::CorruptCheckpoint(msg);

    let manifest = fs::read_to_string(path).map_err(io_err)?;
    let mut fields: HashMap<String, String> = HashMap::new();
    for line in manifest.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| corrupt(format!("manifest line without '=': {line:?}")))?;
        fields.insert(key.trim().to_string(), value.trim().to_string());
    }
    let get = |key: &str| -> Result<&String, DataError> {
        fields
            .get(key)
            .ok_or_else(|| DataError::CorruptCheckpoint(format!("manifest missing key {key:?}")))
    };
    if get("format")? != CHECKPOINT_FORMAT {
        return Err(corrupt(format!("unknown format {:?}", get("format")?)));
    }
    let kind = ModelKind::parse(get("kind")?)
        .ok_or_else(|| corrupt(format!("unknown model kind {:?}", fields.get("kind"))))?;
    let parse_usize = |key: &str| -> Result<usize, DataError> {
        get(key)?
            .parse::<usize>()
            .map_err(|e| corrupt(format!("bad {key}: {e}")))
    };
    let dim = parse_usize("dim")?;
    let n_entities = parse_usize("entities")?;
    let n_relations = parse_usize("relations")?;
    let seed = get("seed")?
        .parse::<u64>()
        .map_err(|e| corrupt(format!("bad seed: {e}")))?;
    let vocab_hash = u64::from_str_radix(get("vocab_hash")?, 16)
        .map_err(|e| corrupt(format!("bad vocab_hash: {e}")))?;

    let mut lens = [0usize; 7];
    for (i, name) in TENSOR_NAMES.iter().enumerate() {
        lens[i] = parse_usize(&format!("tensor {name}"))?;
    }

    let bin_path = bin_path(path);
    let bytes = fs::read(&bin_path).map_err(|source| DataError::Io {
        path: bin_path.clone(),
        source,
    })?;
    let expected: usize = lens.iter().sum::<usize>() * 8;
    if bytes.len() != expected {
        return Err(corrupt(format!(
            "array file holds {} bytes, manifest expects {expected}",
            bytes.len()
        )));
    }
    let mut offset = 0usize;
    let mut read_tensor = |len: usize| -> Vec<f64> {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let mut b = [0u8; 8];
            b.copy_from_slice(&bytes[offset..offset + 8]);
            out.push(f64::from_le_bytes(b));
            offset += 8;
        }
        out
    };
    let params = ParamTensors {
        entity: read_tensor(lens[0]),
        entity_bias: read_tensor(lens[1]),
        rot_e: read_tensor(lens[2]),
        trans_e: read_tensor(lens[3]),
        rot_h: read_tensor(lens[4]),
        trans_h: read_tensor(lens[5]),
        curv_raw: read_tensor(lens[6]),
    };
    if params.entity.len() != n_entities * dim || params.entity_bias.len() != n_entities {
        return Err(corrupt("entity tensor sizes disagree with counts".into()));
    }

    Ok(Checkpoint {
        state: ModelState {
            kind,
            dim,
            n_entities,
            n_relations,
            seed,
            params,
        },
        vocab_hash,
    })
}

fn bin_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_os_string();
    os.push(".bin");
    PathBuf::from(os)
}
