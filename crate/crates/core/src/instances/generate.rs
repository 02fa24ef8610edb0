use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Weibull};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{InstanceMeta, Payload, ProblemInstance, Task};
use crate::problems::{cvrp_baseline, tsp_baseline, ObpBound};

use super::InstanceError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObpParams {
    pub shapes: Vec<f64>,
    pub scales: Vec<f64>,
    /// Inclusive item-count range.
    pub items: (usize, usize),
    pub capacity: f64,
    pub bound: ObpBound,
}

impl Default for ObpParams {
    fn default() -> Self {
        ObpParams {
            shapes: vec![1.0, 3.0, 5.0],
            scales: vec![5.0, 10.0, 20.0, 40.0, 80.0],
            items: (200, 2000),
            capacity: 100.0,
            bound: ObpBound::MartelloToth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TspMode {
    Clustered,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TspParams {
    pub nodes: (usize, usize),
    pub mode: TspMode,
    /// (cluster count, standard deviation) pairs cycled across instances.
    pub clusters: Vec<(usize, f64)>,
}

impl Default for TspParams {
    fn default() -> Self {
        TspParams {
            nodes: (10, 200),
            mode: TspMode::Clustered,
            clusters: vec![(3, 0.03), (3, 0.07), (10, 0.03), (10, 0.07)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvrpParams {
    /// Node count including the depot.
    pub nodes: (usize, usize),
    pub capacity: (u32, u32),
    pub demand: (u32, u32),
}

impl Default for CvrpParams {
    fn default() -> Self {
        CvrpParams {
            nodes: (20, 200),
            capacity: (10, 150),
            demand: (1, 10),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub task: Task,
    pub count: usize,
    pub seed: u64,
    #[serde(default)]
    pub obp: ObpParams,
    #[serde(default)]
    pub tsp: TspParams,
    #[serde(default)]
    pub cvrp: CvrpParams,
}

impl GeneratorSpec {
    /// Training-set defaults: 128 OBP, 128 TSP or 256 CVRP instances.
    pub fn training(task: Task, seed: u64) -> Self {
        let count = match task {
            Task::Obp | Task::Tsp => 128,
            Task::Cvrp => 256,
        };
        GeneratorSpec {
            task,
            count,
            seed,
            obp: ObpParams::default(),
            tsp: TspParams::default(),
            cvrp: CvrpParams::default(),
        }
    }

    /// Tiny instances for smoke tests and examples.
    pub fn small(task: Task, count: usize, seed: u64) -> Self {
        let mut spec = GeneratorSpec::training(task, seed);
        spec.count = count;
        spec.obp.items = (50, 100);
        spec.tsp.nodes = (10, 20);
        spec.cvrp.nodes = (10, 20);
        spec
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        let bad = |m: &str| Err(InstanceError::Spec(m.to_string()));
        let range_ok = |(a, b): (usize, usize)| a <= b;
        match self.task {
            Task::Obp => {
                let p = &self.obp;
                if p.shapes.is_empty() || p.scales.is_empty() {
                    return bad("shape and scale sets must be non-empty");
                }
                if p.shapes.iter().chain(&p.scales).any(|v| !(*v > 0.0 && v.is_finite())) {
                    return bad("shapes and scales must be positive");
                }
                if !range_ok(p.items) || p.items.0 == 0 {
                    return bad("item range must be non-empty and positive");
                }
                if !(p.capacity >= 1.0 && p.capacity.is_finite()) {
                    return bad("capacity must be at least 1");
                }
            }
            Task::Tsp => {
                let p = &self.tsp;
                if !range_ok(p.nodes) || p.nodes.0 < 2 {
                    return bad("node range must be non-empty with at least 2 nodes");
                }
                if p.mode == TspMode::Clustered
                    && (p.clusters.is_empty() || p.clusters.iter().any(|&(k, s)| k == 0 || !(s > 0.0)))
                {
                    return bad("clustered mode needs positive cluster counts and deviations");
                }
            }
            Task::Cvrp => {
                let p = &self.cvrp;
                if !range_ok(p.nodes) || p.nodes.0 < 2 {
                    return bad("node range must include the depot and a customer");
                }
                if p.capacity.0 > p.capacity.1 || p.demand.0 > p.demand.1 || p.demand.0 == 0 {
                    return bad("capacity and demand ranges must be non-empty, demands positive");
                }
                if p.capacity.1 < p.demand.1 {
                    return bad("capacity range cannot cover the largest demand");
                }
            }
        }
        Ok(())
    }
}

/// Per-instance seed so output does not depend on generation order.
pub fn instance_seed(seed: u64, index: usize) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn generate(spec: &GeneratorSpec) -> Result<Vec<ProblemInstance>, InstanceError> {
    match spec.task {
        Task::Obp => gen_obp(spec),
        Task::Tsp => gen_tsp(spec),
        Task::Cvrp => gen_cvrp(spec),
    }
}

fn build<F>(spec: &GeneratorSpec, one: F) -> Result<Vec<ProblemInstance>, InstanceError>
where
    F: Fn(usize, &mut ChaCha8Rng) -> Result<ProblemInstance, InstanceError> + Sync,
{
    spec.validate()?;
    (0..spec.count)
        .into_par_iter()
        .map(|i| one(i, &mut ChaCha8Rng::seed_from_u64(instance_seed(spec.seed, i))))
        .collect()
}

pub fn gen_obp(spec: &GeneratorSpec) -> Result<Vec<ProblemInstance>, InstanceError> {
    let p = &spec.obp;
    build(spec, |i, rng| {
        let shape = *p.shapes.choose(rng).expect("validated non-empty");
        let scale = *p.scales.choose(rng).expect("validated non-empty");
        let n = rng.random_range(p.items.0..=p.items.1);
        let dist = Weibull::new(scale, shape).map_err(|e| InstanceError::Spec(e.to_string()))?;
        let items: Vec<f64> = (0..n)
            .map(|_| dist.sample(rng).round().clamp(1.0, p.capacity))
            .collect();
        let baseline = p.bound.compute(p.capacity, &items);
        let meta = InstanceMeta::generated()
            .with("seed", spec.seed)
            .with("index", i)
            .with("shape", shape)
            .with("scale", scale);
        Ok(ProblemInstance::new(format!("obp-{i:04}"), Payload::obp(p.capacity, items), baseline, meta)?)
    })
}

pub fn gen_tsp(spec: &GeneratorSpec) -> Result<Vec<ProblemInstance>, InstanceError> {
    let p = &spec.tsp;
    build(spec, |i, rng| {
        let n = rng.random_range(p.nodes.0..=p.nodes.1);
        let mut meta = InstanceMeta::generated().with("seed", spec.seed).with("index", i);
        let coords: Vec<[f64; 2]> = match p.mode {
            TspMode::Uniform => uniform_points(rng, n),
            TspMode::Clustered => {
                let (k, sigma) = p.clusters[i % p.clusters.len()];
                meta = meta.with("clusters", k).with("sigma", sigma);
                clustered_points(rng, n, k, sigma)
                    .into_iter()
                    .map(|[x, y]| [x.clamp(0.0, 1.0), y.clamp(0.0, 1.0)])
                    .collect()
            }
        };
        let payload = Payload::tsp(coords);
        let Payload::Tsp { distances, .. } = &payload else { unreachable!() };
        let baseline = tsp_baseline(distances);
        Ok(ProblemInstance::new(format!("tsp-{i:04}"), payload, baseline, meta)?)
    })
}

pub(crate) fn uniform_points<R: Rng>(rng: &mut R, n: usize) -> Vec<[f64; 2]> {
    (0..n).map(|_| [rng.random(), rng.random()]).collect()
}

/// Points around `k` centres drawn in [0.2, 0.8]², before clipping.
pub(crate) fn clustered_points<R: Rng>(rng: &mut R, n: usize, k: usize, sigma: f64) -> Vec<[f64; 2]> {
    let centres: Vec<[f64; 2]> = (0..k)
        .map(|_| [rng.random_range(0.2..=0.8), rng.random_range(0.2..=0.8)])
        .collect();
    let noise = Normal::new(0.0, sigma).expect("sigma validated positive");
    (0..n)
        .map(|_| {
            let c = centres.choose(rng).expect("at least one centre");
            [c[0] + noise.sample(rng), c[1] + noise.sample(rng)]
        })
        .collect()
}

pub fn gen_cvrp(spec: &GeneratorSpec) -> Result<Vec<ProblemInstance>, InstanceError> {
    let p = &spec.cvrp;
    build(spec, |i, rng| {
        let n = rng.random_range(p.nodes.0..=p.nodes.1);
        let coords = uniform_points(rng, n);
        let mut demands: Vec<f64> = (0..n).map(|_| rng.random_range(p.demand.0..=p.demand.1) as f64).collect();
        demands[0] = 0.0;
        let max_demand = demands.iter().cloned().fold(0.0, f64::max);
        let capacity = loop {
            let q = rng.random_range(p.capacity.0..=p.capacity.1) as f64;
            if q >= max_demand {
                break q;
            }
        };
        let payload = Payload::cvrp(coords, demands, capacity);
        let baseline = cvrp_baseline(&payload);
        let meta = InstanceMeta::generated()
            .with("seed", spec.seed)
            .with("index", i)
            .with("capacity", capacity);
        Ok(ProblemInstance::new(format!("cvrp-{i:04}"), payload, baseline, meta)?)
    })
}
