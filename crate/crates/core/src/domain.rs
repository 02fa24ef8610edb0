//! Domain types shared by every other module.
//!
//! Everything here is immutable after construction and validated on the way
//! in, so downstream code can rely on the invariants without re-checking.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Errors raised while constructing domain values.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("heuristic code is empty")]
    EmptyCode,
    #[error("code must define `{name}` exactly once, found {found} definitions")]
    FunctionCount { name: &'static str, found: usize },
    #[error("origin {origin} requires {expected} parent(s), got {got}")]
    ParentCount {
        origin: Origin,
        expected: usize,
        got: usize,
    },
    #[error("performance vector marked valid contains a non-finite score at {0}")]
    NonFiniteScore(usize),
    #[error("row has {got} scores but the matrix tracks {expected} instances")]
    RowLength { expected: usize, got: usize },
    #[error("duplicate heuristic in population: {0}")]
    DuplicateMember(HeuristicId),
    #[error("population member {0} has no valid performance vector")]
    InvalidMember(HeuristicId),
    #[error("population row {0} is out of range")]
    UnknownRow(usize),
    #[error("invalid instance {id}: {reason}")]
    Instance { id: String, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// The three heuristic design tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Obp,
    Tsp,
    Cvrp,
}

impl Task {
    /// Name of the function a heuristic for this task must define.
    pub fn function_name(self) -> &'static str {
        match self {
            Task::Obp => "priority",
            Task::Tsp | Task::Cvrp => "select_next_node",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Obp => "obp",
            Task::Tsp => "tsp",
            Task::Cvrp => "cvrp",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Task {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "obp" => Ok(Task::Obp),
            "tsp" => Ok(Task::Tsp),
            "cvrp" => Ok(Task::Cvrp),
            other => Err(DomainError::Config(format!("unknown task `{other}`"))),
        }
    }
}

/// How a heuristic came to exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Init,
    Cs,
    Ls,
    Builtin,
}

impl Origin {
    pub fn parent_count(self) -> usize {
        match self {
            Origin::Cs => 2,
            Origin::Ls => 1,
            Origin::Init | Origin::Builtin => 0,
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Origin::Init => "init",
            Origin::Cs => "cs",
            Origin::Ls => "ls",
            Origin::Builtin => "builtin",
        };
        f.write_str(s)
    }
}

/// Run-unique heuristic identifier, rendered as `h<number>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HeuristicId(pub u64);

impl fmt::Display for HeuristicId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h{}", self.0)
    }
}

impl std::str::FromStr for HeuristicId {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.strip_prefix('h')
            .unwrap_or(s)
            .parse()
            .map(HeuristicId)
            .map_err(|_| DomainError::Config(format!("bad heuristic id `{s}`")))
    }
}

/// Digest of normalized heuristic source.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DedupeKey(String);

impl DedupeKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DedupeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0[..12.min(self.0.len())])
    }
}

/// Strips a trailing `#` comment from one line, ignoring `#` inside string
/// literals.
fn strip_comment(line: &str) -> &str {
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        if escaped {
            escaped = false;
            continue;
        }
        match (quote, c) {
            (Some(_), '\\') => escaped = true,
            (Some(q), c) if c == q => quote = None,
            (None, '"') | (None, '\'') => quote = Some(c),
            (None, '#') => return &line[..i],
            _ => {}
        }
    }
    line
}

/// Textual normalization: comments, blank lines and per-line surrounding
/// whitespace are dropped before hashing.
pub fn make_dedupe_key(code: &str) -> DedupeKey {
    let mut hasher = Sha256::new();
    for line in code.lines() {
        let line = strip_comment(line).trim();
        if line.is_empty() {
            continue;
        }
        hasher.update(line.as_bytes());
        hasher.update(b"\n");
    }
    DedupeKey(hex::encode(hasher.finalize()))
}

/// Counts top-level or nested `def <name>(` occurrences.
pub(crate) fn count_definitions(code: &str, name: &str) -> usize {
    code.lines()
        .map(|l| strip_comment(l).trim_start())
        .filter(|l| {
            l.strip_prefix("def ")
                .map(|rest| {
                    let rest = rest.trim_start();
                    rest.strip_prefix(name)
                        .map(|after| after.trim_start().starts_with('('))
                        .unwrap_or(false)
                })
                .unwrap_or(false)
        })
        .count()
}

/// One candidate program: a one-sentence thought plus its source code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heuristic {
    pub id: HeuristicId,
    pub thought: String,
    pub code: String,
    pub origin: Origin,
    pub parent_ids: Vec<HeuristicId>,
    pub dedupe_key: DedupeKey,
}

impl Heuristic {
    pub fn new(
        id: HeuristicId,
        task: Task,
        thought: impl Into<String>,
        code: impl Into<String>,
        origin: Origin,
        parent_ids: Vec<HeuristicId>,
    ) -> Result<Self, DomainError> {
        let code = code.into();
        if code.trim().is_empty() {
            return Err(DomainError::EmptyCode);
        }
        let name = task.function_name();
        let found = count_definitions(&code, name);
        if found != 1 {
            return Err(DomainError::FunctionCount { name, found });
        }
        if parent_ids.len() != origin.parent_count() {
            return Err(DomainError::ParentCount {
                origin,
                expected: origin.parent_count(),
                got: parent_ids.len(),
            });
        }
        let dedupe_key = make_dedupe_key(&code);
        Ok(Heuristic {
            id,
            thought: thought.into(),
            code,
            origin,
            parent_ids,
            dedupe_key,
        })
    }
}

/// Per-instance scores of one heuristic. Invalid vectors hold `+inf`
/// everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceVector {
    scores: Vec<f64>,
    valid: bool,
}

impl PerformanceVector {
    pub fn valid(scores: Vec<f64>) -> Result<Self, DomainError> {
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(DomainError::NonFiniteScore(i));
        }
        Ok(PerformanceVector {
            scores,
            valid: true,
        })
    }

    pub fn invalid(m: usize) -> Self {
        PerformanceVector {
            scores: vec![f64::INFINITY; m],
            valid: false,
        }
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn is_valid(&self) -> bool {
        self.valid
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Mean score; `+inf` for invalid vectors.
    pub fn mean(&self) -> f64 {
        if !self.valid {
            return f64::INFINITY;
        }
        if self.scores.is_empty() {
            return 0.0;
        }
        self.scores.iter().sum::<f64>() / self.scores.len() as f64
    }
}

/// Scores of a set of heuristics over a fixed, ordered instance list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PerformanceMatrix {
    heuristic_ids: Vec<HeuristicId>,
    rows: Vec<PerformanceVector>,
    instance_ids: Vec<String>,
}

impl PerformanceMatrix {
    pub fn new(instance_ids: Vec<String>) -> Self {
        PerformanceMatrix {
            heuristic_ids: Vec::new(),
            rows: Vec::new(),
            instance_ids,
        }
    }

    /// Builds a matrix of valid rows from raw scores; heuristic ids are
    /// `h0..h{k-1}` and instance ids `i0..i{m-1}`.
    pub fn from_scores(scores: &[Vec<f64>]) -> Result<Self, DomainError> {
        let m = scores.first().map_or(0, Vec::len);
        let mut matrix = PerformanceMatrix::new((0..m).map(|j| format!("i{j}")).collect());
        for (i, row) in scores.iter().enumerate() {
            matrix.push(HeuristicId(i as u64), PerformanceVector::valid(row.clone())?)?;
        }
        Ok(matrix)
    }

    /// Appends a row and returns its index.
    pub fn push(&mut self, id: HeuristicId, row: PerformanceVector) -> Result<usize, DomainError> {
        if row.len() != self.instance_ids.len() {
            return Err(DomainError::RowLength {
                expected: self.instance_ids.len(),
                got: row.len(),
            });
        }
        self.heuristic_ids.push(id);
        self.rows.push(row);
        Ok(self.rows.len() - 1)
    }

    pub fn row(&self, index: usize) -> Option<&PerformanceVector> {
        self.rows.get(index)
    }

    pub fn rows(&self) -> &[PerformanceVector] {
        &self.rows
    }

    pub fn heuristic_ids(&self) -> &[HeuristicId] {
        &self.heuristic_ids
    }

    pub fn instance_ids(&self) -> &[String] {
        &self.instance_ids
    }

    pub fn row_of(&self, id: HeuristicId) -> Option<usize> {
        self.heuristic_ids.iter().position(|h| *h == id)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of instances (columns).
    pub fn width(&self) -> usize {
        self.instance_ids.len()
    }

    /// Indices of all rows with a valid vector.
    pub fn valid_rows(&self) -> Vec<usize> {
        (0..self.rows.len()).filter(|&r| self.rows[r].valid).collect()
    }
}

/// The current generation's members, referenced by matrix row.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    members: Vec<usize>,
    generation: usize,
}

impl Population {
    /// `archive[r]` must be the heuristic owning matrix row `r`.
    pub fn new(
        members: Vec<usize>,
        generation: usize,
        archive: &[Heuristic],
        matrix: &PerformanceMatrix,
    ) -> Result<Self, DomainError> {
        let mut keys = HashSet::new();
        for &row in &members {
            let heuristic = archive.get(row).ok_or(DomainError::UnknownRow(row))?;
            if !matrix.row(row).is_some_and(PerformanceVector::is_valid) {
                return Err(DomainError::InvalidMember(heuristic.id));
            }
            if !keys.insert(&heuristic.dedupe_key) {
                return Err(DomainError::DuplicateMember(heuristic.id));
            }
        }
        Ok(Population {
            members,
            generation,
        })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Symmetric Euclidean distance matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn euclidean(coords: &[[f64; 2]]) -> Self {
        let n = coords.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = ((coords[i][0] - coords[j][0]).powi(2)
                    + (coords[i][1] - coords[j][1]).powi(2))
                .sqrt();
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        DistanceMatrix { n, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Task-specific instance data.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Obp {
        capacity: f64,
        items: Vec<f64>,
    },
    Tsp {
        coords: Vec<[f64; 2]>,
        distances: DistanceMatrix,
    },
    Cvrp {
        depot: usize,
        coords: Vec<[f64; 2]>,
        demands: Vec<f64>,
        capacity: f64,
        distances: DistanceMatrix,
    },
}

impl Payload {
    pub fn task(&self) -> Task {
        match self {
            Payload::Obp { .. } => Task::Obp,
            Payload::Tsp { .. } => Task::Tsp,
            Payload::Cvrp { .. } => Task::Cvrp,
        }
    }

    pub fn obp(capacity: f64, items: Vec<f64>) -> Self {
        Payload::Obp { capacity, items }
    }

    pub fn tsp(coords: Vec<[f64; 2]>) -> Self {
        let distances = DistanceMatrix::euclidean(&coords);
        Payload::Tsp { coords, distances }
    }

    pub fn cvrp(coords: Vec<[f64; 2]>, demands: Vec<f64>, capacity: f64) -> Self {
        let distances = DistanceMatrix::euclidean(&coords);
        Payload::Cvrp {
            depot: 0,
            coords,
            demands,
            capacity,
            distances,
        }
    }

    /// Number of items (OBP) or nodes (TSP/CVRP, depot included).
    pub fn size(&self) -> usize {
        match self {
            Payload::Obp { items, .. } => items.len(),
            Payload::Tsp { coords, .. } | Payload::Cvrp { coords, .. } => coords.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceSource {
    Generated,
    Benchmark,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub source: InstanceSource,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

impl InstanceMeta {
    pub fn generated() -> Self {
        InstanceMeta {
            source: InstanceSource::Generated,
            params: BTreeMap::new(),
        }
    }

    pub fn benchmark() -> Self {
        InstanceMeta {
            source: InstanceSource::Benchmark,
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }
}

/// A validated problem instance with its reference score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct ProblemInstance {
    id: String,
    payload: Payload,
    baseline: f64,
    meta: InstanceMeta,
}

const COORD_EPS: f64 = 1e-9;

impl ProblemInstance {
    pub fn new(
        id: impl Into<String>,
        payload: Payload,
        baseline: f64,
        meta: InstanceMeta,
    ) -> Result<Self, DomainError> {
        let id = id.into();
        let fail = |reason: String| DomainError::Instance {
            id: id.clone(),
            reason,
        };
        match &payload {
            Payload::Obp { capacity, items } => {
                if !(*capacity > 0.0 && capacity.is_finite()) {
                    return Err(fail(format!("capacity {capacity} must be positive")));
                }
                if items.is_empty() {
                    return Err(fail("no items".into()));
                }
                if let Some(s) = items.iter().find(|&&s| !(s > 0.0 && s <= *capacity)) {
                    return Err(fail(format!("item size {s} outside (0, {capacity}]")));
                }
            }
            Payload::Tsp { coords, .. } => {
                if coords.len() < 2 {
                    return Err(fail("fewer than 2 nodes".into()));
                }
                check_coords(coords).map_err(fail)?;
            }
            Payload::Cvrp {
                depot,
                coords,
                demands,
                capacity,
                ..
            } => {
                if coords.len() < 2 {
                    return Err(fail("no customers".into()));
                }
                if demands.len() != coords.len() {
                    return Err(fail("demand count differs from node count".into()));
                }
                if *depot >= coords.len() {
                    return Err(fail(format!("depot {depot} out of range")));
                }
                check_coords(coords).map_err(fail)?;
                for (i, &d) in demands.iter().enumerate() {
                    if i == *depot {
                        if d != 0.0 {
                            return Err(fail(format!("depot demand {d} must be 0")));
                        }
                    } else if !(d > 0.0 && d <= *capacity) {
                        return Err(fail(format!("demand {d} of node {i} outside (0, {capacity}]")));
                    }
                }
            }
        }
        if !(baseline > 0.0 && baseline.is_finite()) {
            return Err(fail(format!("baseline {baseline} must be positive")));
        }
        Ok(ProblemInstance {
            id,
            payload,
            baseline,
            meta,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn task(&self) -> Task {
        self.payload.task()
    }

    pub fn payload(&self) -> &Payload {
        &self.payload
    }

    pub fn baseline(&self) -> f64 {
        self.baseline
    }

    pub fn meta(&self) -> &InstanceMeta {
        &self.meta
    }

    /// Relative gap of a raw objective value against the baseline.
    pub fn gap(&self, raw: f64) -> f64 {
        (raw - self.baseline) / self.baseline
    }
}

fn check_coords(coords: &[[f64; 2]]) -> Result<(), String> {
    for p in coords {
        for &v in p {
            if !(-COORD_EPS..=1.0 + COORD_EPS).contains(&v) {
                return Err(format!("coordinate {v} outside [0, 1]"));
            }
        }
    }
    Ok(())
}

/// Native serialized form; distance matrices are rebuilt from coordinates.
#[derive(Serialize, Deserialize)]
struct RawInstance {
    id: String,
    task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    capacity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    items: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coords: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    demands: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    depot: Option<usize>,
    baseline: f64,
    meta: InstanceMeta,
}

impl From<ProblemInstance> for RawInstance {
    fn from(inst: ProblemInstance) -> Self {
        let mut raw = RawInstance {
            id: inst.id,
            task: inst.payload.task(),
            capacity: None,
            items: None,
            coords: None,
            demands: None,
            depot: None,
            baseline: inst.baseline,
            meta: inst.meta,
        };
        match inst.payload {
            Payload::Obp { capacity, items } => {
                raw.capacity = Some(capacity);
                raw.items = Some(items);
            }
            Payload::Tsp { coords, .. } => raw.coords = Some(coords),
            Payload::Cvrp {
                depot,
                coords,
                demands,
                capacity,
                ..
            } => {
                raw.depot = Some(depot);
                raw.coords = Some(coords);
                raw.demands = Some(demands);
                raw.capacity = Some(capacity);
            }
        }
        raw
    }
}

impl TryFrom<RawInstance> for ProblemInstance {
    type Error = DomainError;

    fn try_from(raw: RawInstance) -> Result<Self, Self::Error> {
        let missing = |field: &str| DomainError::Instance {
            id: raw.id.clone(),
            reason: format!("missing field `{field}`"),
        };
        let payload = match raw.task {
            Task::Obp => Payload::obp(
                raw.capacity.ok_or_else(|| missing("capacity"))?,
                raw.items.clone().ok_or_else(|| missing("items"))?,
            ),
            Task::Tsp => Payload::tsp(raw.coords.clone().ok_or_else(|| missing("coords"))?),
            Task::Cvrp => {
                let coords = raw.coords.clone().ok_or_else(|| missing("coords"))?;
                let distances = DistanceMatrix::euclidean(&coords);
                Payload::Cvrp {
                    depot: raw.depot.unwrap_or(0),
                    coords,
                    demands: raw.demands.clone().ok_or_else(|| missing("demands"))?,
                    capacity: raw.capacity.ok_or_else(|| missing("capacity"))?,
                    distances,
                }
            }
        };
        ProblemInstance::new(raw.id, payload, raw.baseline, raw.meta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BF: &str = "import numpy as np\ndef priority(item, bins):\n    return -(bins - item)\n";

    #[test]
    fn comment_lines_do_not_change_key() {
        let commented = "import numpy as np\n# best fit\ndef priority(item, bins):\n    return -(bins - item)  # tight\n";
        assert_eq!(make_dedupe_key(BF), make_dedupe_key(commented));
    }

    #[test]
    fn renamed_identifier_changes_key() {
        let renamed = BF.replace("item", "size");
        assert_ne!(make_dedupe_key(BF), make_dedupe_key(&renamed));
    }

    #[test]
    fn trailing_blank_lines_ignored() {
        let padded = format!("{BF}\n\n");
        assert_eq!(make_dedupe_key(BF), make_dedupe_key(&padded));
    }

    #[test]
    fn hash_inside_string_is_kept() {
        let a = "def priority(item, bins):\n    s = 'a#b'\n    return bins\n";
        let b = "def priority(item, bins):\n    s = 'a#c'\n    return bins\n";
        assert_ne!(make_dedupe_key(a), make_dedupe_key(b));
    }

    #[test]
    fn heuristic_requires_single_definition() {
        let twice = format!("{BF}\ndef priority(item, bins):\n    return bins\n");
        let err = Heuristic::new(HeuristicId(0), Task::Obp, "t", twice, Origin::Init, vec![]);
        assert!(matches!(err, Err(DomainError::FunctionCount { found: 2, .. })));
        let none = Heuristic::new(HeuristicId(0), Task::Tsp, "t", BF, Origin::Init, vec![]);
        assert!(matches!(none, Err(DomainError::FunctionCount { found: 0, .. })));
        assert_eq!(
            Heuristic::new(HeuristicId(0), Task::Obp, "t", "  \n", Origin::Init, vec![]),
            Err(DomainError::EmptyCode)
        );
    }

    #[test]
    fn parent_count_follows_origin() {
        let ok = Heuristic::new(
            HeuristicId(3),
            Task::Obp,
            "t",
            BF,
            Origin::Cs,
            vec![HeuristicId(1), HeuristicId(2)],
        );
        assert!(ok.is_ok());
        let bad = Heuristic::new(HeuristicId(3), Task::Obp, "t", BF, Origin::Ls, vec![]);
        assert!(matches!(bad, Err(DomainError::ParentCount { expected: 1, got: 0, .. })));
    }

    #[test]
    fn invalid_vector_is_all_infinite() {
        let v = PerformanceVector::invalid(4);
        assert!(!v.is_valid());
        assert!(v.scores().iter().all(|s| *s == f64::INFINITY));
        assert!(PerformanceVector::valid(vec![0.1, f64::NAN]).is_err());
        // negative gaps are legal against non-optimal baselines
        assert!(PerformanceVector::valid(vec![-0.2, 0.1]).is_ok());
    }

    #[test]
    fn matrix_rejects_wrong_row_length() {
        let mut m = PerformanceMatrix::new(vec!["a".into(), "b".into()]);
        let err = m.push(HeuristicId(0), PerformanceVector::valid(vec![0.1]).unwrap());
        assert_eq!(err, Err(DomainError::RowLength { expected: 2, got: 1 }));
    }

    #[test]
    fn population_rejects_duplicate_keys() {
        let h0 = Heuristic::new(HeuristicId(0), Task::Obp, "a", BF, Origin::Init, vec![]).unwrap();
        let mut h1 = h0.clone();
        h1.id = HeuristicId(1);
        let matrix = PerformanceMatrix::from_scores(&[vec![0.1], vec![0.2]]).unwrap();
        let err = Population::new(vec![0, 1], 0, &[h0, h1], &matrix);
        assert_eq!(err, Err(DomainError::DuplicateMember(HeuristicId(1))));
    }

    #[test]
    fn instance_invariants() {
        let meta = InstanceMeta::generated;
        assert!(ProblemInstance::new("a", Payload::obp(10.0, vec![11.0]), 1.0, meta()).is_err());
        assert!(ProblemInstance::new("a", Payload::obp(10.0, vec![5.0]), 0.0, meta()).is_err());
        let coords = vec![[0.0, 0.0], [1.0, 1.0]];
        assert!(ProblemInstance::new(
            "c",
            Payload::cvrp(coords.clone(), vec![1.0, 3.0], 5.0),
            1.0,
            meta()
        )
        .is_err());
        assert!(ProblemInstance::new(
            "c",
            Payload::cvrp(coords.clone(), vec![0.0, 6.0], 5.0),
            1.0,
            meta()
        )
        .is_err());
        assert!(ProblemInstance::new("t", Payload::tsp(vec![[0.0, 0.0], [1.5, 0.0]]), 1.0, meta()).is_err());
        let tsp = ProblemInstance::new("t", Payload::tsp(coords), 2.0, meta()).unwrap();
        match tsp.payload() {
            Payload::Tsp { distances, .. } => {
                assert_eq!(distances.get(0, 1), distances.get(1, 0));
                assert_eq!(distances.get(1, 1), 0.0);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn native_json_round_trip() {
        let inst = ProblemInstance::new(
            "c0",
            Payload::cvrp(vec![[0.1, 0.2], [0.3, 0.9], [0.5, 0.5]], vec![0.0, 3.0, 4.0], 7.0),
            1.25,
            InstanceMeta::generated().with("seed", 3),
        )
        .unwrap();
        let text = serde_json::to_string(&inst).unwrap();
        let back: ProblemInstance = serde_json::from_str(&text).unwrap();
        assert_eq!(inst, back);
    }
}
