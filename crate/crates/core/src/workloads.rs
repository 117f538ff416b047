//! Workload sets: the bundled reference layers, CSV files with header
//! `name,M,K,N`, and seeded random layers.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::Workload;

pub const CSV_HEADER: [&str; 4] = ["name", "M", "K", "N"];

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Malformed { line: u64, msg: String },
    #[error("line {line}: {column} must be a positive integer, got {value}")]
    NonPositive {
        line: u64,
        column: &'static str,
        value: String,
    },
    #[error("duplicate workload name {name:?}")]
    Duplicate { name: String },
    #[error("workload count must be at least 1")]
    ZeroCount,
    #[error("invalid range for {dim}: [{lo}, {hi}]")]
    InvalidRange { dim: &'static str, lo: u64, hi: u64 },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl PartialEq for WorkloadError {
    fn eq(&self, other: &Self) -> bool {
        self.to_string() == other.to_string()
    }
}

impl Eq for WorkloadError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkloadSet {
    entries: Vec<Workload>,
    source: String,
}

impl WorkloadSet {
    pub fn new(entries: Vec<Workload>, source: impl Into<String>) -> Result<Self, WorkloadError> {
        let mut seen = HashSet::new();
        for w in &entries {
            if !seen.insert(w.name()) {
                return Err(WorkloadError::Duplicate {
                    name: w.name().to_string(),
                });
            }
        }
        Ok(Self {
            entries,
            source: source.into(),
        })
    }

    pub fn entries(&self) -> &[Workload] {
        &self.entries
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Workload> {
        self.entries.iter().find(|w| w.name() == name)
    }

    /// Writes the canonical CSV form: header plus one row per workload.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), WorkloadError> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(CSV_HEADER)?;
        for w in &self.entries {
            wtr.write_record([
                w.name().to_string(),
                w.m().to_string(),
                w.k().to_string(),
                w.n().to_string(),
            ])?;
        }
        wtr.flush().map_err(|source| WorkloadError::Io {
            path: "<writer>".into(),
            source,
        })
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), WorkloadError> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|source| WorkloadError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.write_csv(file)
    }
}

/// The eight reference GEMM layers (ResNet-50, GNMT, DeepBench,
/// Transformer) as `(M, K, N)`.
pub fn builtin_table1() -> WorkloadSet {
    const ROWS: [(&str, u64, u64, u64); 8] = [
        ("RN0", 64, 12100, 147),
        ("RN1", 512, 784, 128),
        ("GNMT0", 128, 4096, 2048),
        ("GNMT1", 320, 4096, 3072),
        ("DB0", 1024, 50000, 16),
        ("DB1", 35, 2560, 4096),
        ("TF0", 31999, 84, 1024),
        ("TF1", 84, 4096, 1024),
    ];
    let entries = ROWS
        .iter()
        .map(|&(name, m, k, n)| Workload::new(name, m, k, n).expect("builtin dims are positive"))
        .collect();
    WorkloadSet::new(entries, "builtin").expect("builtin names are unique")
}

pub fn read_csv<R: Read>(input: R, source: impl Into<String>) -> Result<WorkloadSet, WorkloadError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .has_headers(true)
        .from_reader(input);

    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        let line = header.position().map_or(1, |p| p.line());
        return Err(WorkloadError::Malformed {
            line,
            msg: format!("expected header `{}`", CSV_HEADER.join(",")),
        });
    }

    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for record in rdr.records() {
        let record = record.map_err(|e| match e.position() {
            Some(p) => WorkloadError::Malformed {
                line: p.line(),
                msg: e.to_string(),
            },
            None => e.into(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let name = &record[0];
        if name.is_empty() {
            return Err(WorkloadError::Malformed {
                line,
                msg: "empty workload name".into(),
            });
        }
        let mut dims = [0u64; 3];
        for (slot, column) in dims.iter_mut().zip(["M", "K", "N"]) {
            let idx = CSV_HEADER.iter().position(|&h| h == column).unwrap();
            let raw = &record[idx];
            let v: i128 = raw.parse().map_err(|_| WorkloadError::Malformed {
                line,
                msg: format!("{column} is not an integer: {raw:?}"),
            })?;
            if v <= 0 {
                return Err(WorkloadError::NonPositive {
                    line,
                    column,
                    value: raw.to_string(),
                });
            }
            *slot = u64::try_from(v).map_err(|_| WorkloadError::Malformed {
                line,
                msg: format!("{column} out of range: {raw}"),
            })?;
        }
        if !seen.insert(name.to_string()) {
            return Err(WorkloadError::Duplicate { name: name.into() });
        }
        let w = Workload::new(name, dims[0], dims[1], dims[2]).expect("dims checked positive");
        entries.push(w);
    }
    WorkloadSet::new(entries, source)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<WorkloadSet, WorkloadError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| WorkloadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, path.display().to_string())
}

/// Inclusive bounds for randomly drawn dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomRanges {
    pub m: (u64, u64),
    pub k: (u64, u64),
    pub n: (u64, u64),
}

impl Default for RandomRanges {
    /// Brackets the ResNet-50 reference layers.
    fn default() -> Self {
        Self {
            m: (32, 2048),
            k: (128, 16384),
            n: (32, 2048),
        }
    }
}

fn log_uniform(rng: &mut impl Rng, (lo, hi): (u64, u64)) -> u64 {
    if lo == hi {
        return lo;
    }
    let x: f64 = rng.gen_range((lo as f64).ln()..=(hi as f64).ln());
    (x.exp().round() as u64).clamp(lo, hi)
}

/// `n` workloads with dimensions drawn log-uniformly from `ranges`.
/// Deterministic for a given seed on every platform.
pub fn generate_random(n: usize, ranges: &RandomRanges, seed: u64) -> Result<WorkloadSet, WorkloadError> {
    if n == 0 {
        return Err(WorkloadError::ZeroCount);
    }
    for (dim, (lo, hi)) in [("M", ranges.m), ("K", ranges.k), ("N", ranges.n)] {
        if lo == 0 || lo > hi {
            return Err(WorkloadError::InvalidRange { dim, lo, hi });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = (n - 1).to_string().len().max(3);
    let entries = (0..n)
        .map(|i| {
            let m = log_uniform(&mut rng, ranges.m);
            let k = log_uniform(&mut rng, ranges.k);
            let n = log_uniform(&mut rng, ranges.n);
            Workload::new(format!("rand{i:0width$}"), m, k, n).expect("ranges exclude zero")
        })
        .collect();
    WorkloadSet::new(entries, format!("random({seed})"))
}
