//! Seeded instance generators, benchmark loaders and the native JSONL store.

mod generate;
mod loaders;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::domain::{DomainError, ProblemInstance};

pub use generate::{gen_cvrp, gen_obp, gen_tsp, generate, instance_seed, CvrpParams, GeneratorSpec, ObpParams, TspMode, TspParams};
pub use loaders::{load_benchmark_dir, load_bpplib, load_cvrplib, load_tsplib, normalize_coords, parse_bpplib, parse_cvrplib, parse_tsplib};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("{source_name}:{line}: {reason}")]
    Parse {
        source_name: String,
        line: usize,
        reason: String,
    },
    #[error("unsupported format: {0}")]
    Unsupported(String),
    #[error("degenerate instance: {0}")]
    Degenerate(String),
    #[error("invalid generator spec: {0}")]
    Spec(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

impl InstanceError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        InstanceError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Writes one instance per line.
pub fn write_jsonl(path: &Path, instances: &[ProblemInstance]) -> Result<(), InstanceError> {
    let file = File::create(path).map_err(|e| InstanceError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for inst in instances {
        let line = serde_json::to_string(inst).expect("instances always serialize");
        writeln!(out, "{line}").map_err(|e| InstanceError::io(path, e))?;
    }
    out.flush().map_err(|e| InstanceError::io(path, e))
}

pub fn read_jsonl(path: &Path) -> Result<Vec<ProblemInstance>, InstanceError> {
    let file = File::open(path).map_err(|e| InstanceError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| InstanceError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let inst = serde_json::from_str(&line).map_err(|e| InstanceError::Parse {
            source_name: path.display().to_string(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(inst);
    }
    Ok(out)
}
