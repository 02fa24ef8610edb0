use std::collections::HashMap;
use std::path::Path;

use crate::domain::{InstanceMeta, Payload, ProblemInstance, Task};
use crate::problems::{cvrp_baseline, obp_lower_bound, tsp_baseline};

use super::InstanceError;

const OBP_CAPACITY: f64 = 100.0;

/// Translates to the origin and divides by the larger axis extent.
pub fn normalize_coords(points: &[[f64; 2]]) -> Result<Vec<[f64; 2]>, InstanceError> {
    if points.len() < 2 {
        return Err(InstanceError::Degenerate("fewer than 2 points".into()));
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let scale = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(InstanceError::Degenerate("all points coincide".into()));
    }
    Ok(points
        .iter()
        .map(|p| [(p[0] - lo[0]) / scale, (p[1] - lo[1]) / scale])
        .collect())
}

fn parse_err(name: &str, line: usize, reason: impl Into<String>) -> InstanceError {
    InstanceError::Parse {
        source_name: name.to_string(),
        line,
        reason: reason.into(),
    }
}

fn num(name: &str, line: usize, tok: &str) -> Result<f64, InstanceError> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_err(name, line, format!("expected a number, found `{tok}`")))
}

/// BPP text: item count, capacity, then one size per line. A second column,
/// when present, is read as the multiplicity of that size.
pub fn parse_bpplib(name: &str, text: &str) -> Result<ProblemInstance, InstanceError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, count) = lines.next().ok_or_else(|| parse_err(name, 1, "empty file"))?;
    let count = num(name, ln, count)? as usize;
    let (ln, cap) = lines.next().ok_or_else(|| parse_err(name, ln + 1, "missing capacity"))?;
    let capacity = num(name, ln, cap)?;
    if capacity <= 0.0 {
        return Err(parse_err(name, ln, "capacity must be positive"));
    }
    let mut sizes = Vec::with_capacity(count);
    for (ln, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        let size = num(name, ln, toks[0])?;
        let times = match toks.get(1) {
            Some(t) => num(name, ln, t)? as usize,
            None => 1,
        };
        if !(size > 0.0 && size <= capacity) {
            return Err(parse_err(name, ln, format!("item size {size} outside (0, {capacity}]")));
        }
        sizes.extend(std::iter::repeat_n(size * OBP_CAPACITY / capacity, times));
    }
    if sizes.len() != count {
        return Err(parse_err(name, 1, format!("header says {count} items, found {}", sizes.len())));
    }
    let baseline = obp_lower_bound(OBP_CAPACITY, &sizes);
    let meta = InstanceMeta::benchmark().with("original_capacity", capacity);
    Ok(ProblemInstance::new(name, Payload::obp(OBP_CAPACITY, sizes), baseline, meta)?)
}

struct Tsplib {
    header: HashMap<String, (usize, String)>,
    sections: HashMap<String, Vec<(usize, Vec<String>)>>,
}

const SECTIONS: [&str; 4] = ["NODE_COORD_SECTION", "DEMAND_SECTION", "DEPOT_SECTION", "EDGE_WEIGHT_SECTION"];

fn split_tsplib(text: &str) -> Tsplib {
    let mut header = HashMap::new();
    let mut sections: HashMap<String, Vec<(usize, Vec<String>)>> = HashMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let first = line.split([' ', ':', '\t']).next().unwrap_or("").to_uppercase();
        if first == "EOF" {
            break;
        }
        if SECTIONS.contains(&first.as_str()) || first.ends_with("_SECTION") {
            sections.entry(first.clone()).or_default();
            current = Some(first);
            continue;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.trim().chars().all(|c| c.is_ascii_uppercase() || c == '_') && !k.trim().is_empty() {
                header.insert(k.trim().to_uppercase(), (i + 1, v.trim().to_string()));
                current = None;
                continue;
            }
        }
        if let Some(sec) = &current {
            let toks = line.split_whitespace().map(str::to_string).collect();
            sections.get_mut(sec).expect("section opened").push((i + 1, toks));
        }
    }
    Tsplib { header, sections }
}

fn euc_2d_only(name: &str, doc: &Tsplib) -> Result<(), InstanceError> {
    match doc.header.get("EDGE_WEIGHT_TYPE") {
        Some((_, t)) if t.eq_ignore_ascii_case("EUC_2D") => Ok(()),
        Some((_, t)) => Err(InstanceError::Unsupported(format!("{name}: edge weight type {t}"))),
        None => Err(InstanceError::Unsupported(format!("{name}: missing EDGE_WEIGHT_TYPE"))),
    }
}

/// Node ids mapped to coordinates in file order.
fn node_coords(name: &str, doc: &Tsplib) -> Result<Vec<(i64, [f64; 2])>, InstanceError> {
    let rows = doc
        .sections
        .get("NODE_COORD_SECTION")
        .ok_or_else(|| parse_err(name, 0, "missing NODE_COORD_SECTION"))?;
    let mut out = Vec::with_capacity(rows.len());
    for (ln, toks) in rows {
        if toks.len() < 3 {
            return Err(parse_err(name, *ln, "coordinate line needs id, x, y"));
        }
        let id = num(name, *ln, &toks[0])? as i64;
        out.push((id, [num(name, *ln, &toks[1])?, num(name, *ln, &toks[2])?]));
    }
    if let Some((ln, dim)) = doc.header.get("DIMENSION") {
        let dim = num(name, *ln, dim)? as usize;
        if dim != out.len() {
            return Err(parse_err(name, *ln, format!("DIMENSION {dim} but {} coordinates", out.len())));
        }
    }
    Ok(out)
}

pub fn parse_tsplib(name: &str, text: &str) -> Result<ProblemInstance, InstanceError> {
    let doc = split_tsplib(text);
    euc_2d_only(name, &doc)?;
    let nodes = node_coords(name, &doc)?;
    let coords: Vec<[f64; 2]> = nodes.iter().map(|(_, c)| *c).collect();
    let coords = normalize_coords(&coords)?;
    let payload = Payload::tsp(coords);
    let Payload::Tsp { distances, .. } = &payload else { unreachable!() };
    let baseline = tsp_baseline(distances);
    Ok(ProblemInstance::new(name, payload, baseline, InstanceMeta::benchmark())?)
}

/// CVRPLIB: the depot listed in DEPOT_SECTION becomes node 0, other nodes
/// keep their file order.
pub fn parse_cvrplib(name: &str, text: &str) -> Result<ProblemInstance, InstanceError> {
    let doc = split_tsplib(text);
    euc_2d_only(name, &doc)?;
    let (cap_ln, cap) = doc
        .header
        .get("CAPACITY")
        .ok_or_else(|| parse_err(name, 0, "missing CAPACITY"))?;
    let capacity = num(name, *cap_ln, cap)?;
    let nodes = node_coords(name, &doc)?;
    let mut demand_of = HashMap::new();
    for (ln, toks) in doc.sections.get("DEMAND_SECTION").ok_or_else(|| parse_err(name, 0, "missing DEMAND_SECTION"))? {
        if toks.len() < 2 {
            return Err(parse_err(name, *ln, "demand line needs id and demand"));
        }
        demand_of.insert(num(name, *ln, &toks[0])? as i64, (*ln, num(name, *ln, &toks[1])?));
    }
    let depot_id = doc
        .sections
        .get("DEPOT_SECTION")
        .and_then(|rows| rows.first())
        .map(|(ln, toks)| num(name, *ln, &toks[0]).map(|v| v as i64))
        .transpose()?
        .unwrap_or(nodes[0].0);
    let depot_pos = nodes
        .iter()
        .position(|(id, _)| *id == depot_id)
        .ok_or_else(|| parse_err(name, 0, format!("depot {depot_id} has no coordinates")))?;
    let mut order = vec![depot_pos];
    order.extend((0..nodes.len()).filter(|&i| i != depot_pos));

    let mut coords = Vec::with_capacity(nodes.len());
    let mut demands = Vec::with_capacity(nodes.len());
    for (k, &i) in order.iter().enumerate() {
        let (id, c) = nodes[i];
        coords.push(c);
        let d = match demand_of.get(&id) {
            Some(&(_, d)) => d,
            None => return Err(parse_err(name, 0, format!("node {id} has no demand"))),
        };
        if k == 0 {
            demands.push(0.0);
        } else if !(d > 0.0 && d <= capacity) {
            let ln = demand_of[&id].0;
            return Err(parse_err(name, ln, format!("demand {d} outside (0, {capacity}]")));
        } else {
            demands.push(d);
        }
    }
    let payload = Payload::cvrp(normalize_coords(&coords)?, demands, capacity);
    let baseline = cvrp_baseline(&payload);
    let meta = InstanceMeta::benchmark().with("depot_id", depot_id);
    Ok(ProblemInstance::new(name, payload, baseline, meta)?)
}

fn load_with(path: &Path, parse: fn(&str, &str) -> Result<ProblemInstance, InstanceError>) -> Result<ProblemInstance, InstanceError> {
    let text = std::fs::read_to_string(path).map_err(|e| InstanceError::io(path, e))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    parse(&name, &text)
}

pub fn load_bpplib(path: &Path) -> Result<ProblemInstance, InstanceError> {
    load_with(path, parse_bpplib)
}

pub fn load_tsplib(path: &Path) -> Result<ProblemInstance, InstanceError> {
    load_with(path, parse_tsplib)
}

pub fn load_cvrplib(path: &Path) -> Result<ProblemInstance, InstanceError> {
    load_with(path, parse_cvrplib)
}

/// Loads every benchmark file for `task` in a directory, sorted by name.
/// Files that fail to parse are reported in the warning list and skipped.
pub fn load_benchmark_dir(dir: &Path, task: Task) -> Result<(Vec<ProblemInstance>, Vec<String>), InstanceError> {
    let (exts, parse): (&[&str], fn(&Path) -> Result<ProblemInstance, InstanceError>) = match task {
        Task::Obp => (&["txt", "bpp"], load_bpplib),
        Task::Tsp => (&["tsp"], load_tsplib),
        Task::Cvrp => (&["vrp"], load_cvrplib),
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| InstanceError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| exts.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    paths.sort();
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for p in paths {
        match parse(&p) {
            Ok(inst) => out.push(inst),
            Err(e) => warnings.push(e.to_string()),
        }
    }
    if out.is_empty() {
        warnings.push(format!("no {task} benchmark instances found in {}", dir.display()));
    }
    Ok((out, warnings))
}
