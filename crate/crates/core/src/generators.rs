//! Seeded instance generators: satisfiable partitioned coloring, uniformly
//! random coloring, and sensor fields.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::csp::{CspInstance, VariableId};
use crate::error::GenError;

/// Target placements tried before a target with no visible sensor is
/// reported as an error.
pub const MAX_PLACEMENT_ATTEMPTS: u32 = 100;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    MintonColoring,
    RandomColoring,
    SensorField,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::MintonColoring => "minton",
            Family::RandomColoring => "random",
            Family::SensorField => "sensor",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        match s {
            "minton" => Some(Family::MintonColoring),
            "random" => Some(Family::RandomColoring),
            "sensor" => Some(Family::SensorField),
            _ => None,
        }
    }
}

/// Sensor field geometry. Distances are in feet.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorParams {
    pub width: f64,
    pub height: f64,
    pub rows: u32,
    pub cols: u32,
    pub range: f64,
    pub targets: usize,
}

impl Default for SensorParams {
    fn default() -> Self {
        SensorParams {
            width: 200.0,
            height: 200.0,
            rows: 14,
            cols: 16,
            range: 25.0,
            targets: 30,
        }
    }
}

impl SensorParams {
    pub fn sensor_count(&self) -> usize {
        (self.rows * self.cols) as usize
    }

    /// Sensor positions on a uniform grid with half-spacing margins, indexed
    /// row-major.
    pub fn sensor_positions(&self) -> Vec<(f64, f64)> {
        let dx = self.width / self.cols as f64;
        let dy = self.height / self.rows as f64;
        (0..self.rows)
            .flat_map(|r| {
                (0..self.cols).map(move |c| ((c as f64 + 0.5) * dx, (r as f64 + 0.5) * dy))
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub family: Family,
    /// Variable count; for sensor fields this is the target count.
    pub n: usize,
    /// Edges per node: `m = density * n` for both coloring families.
    pub density: f64,
    pub k: u32,
    pub sensor: SensorParams,
}

impl GeneratorConfig {
    pub fn minton(n: usize, density: f64, k: u32) -> Self {
        GeneratorConfig {
            family: Family::MintonColoring,
            n,
            density,
            k,
            sensor: SensorParams::default(),
        }
    }

    pub fn random(n: usize, density: f64) -> Self {
        GeneratorConfig {
            family: Family::RandomColoring,
            n,
            density,
            k: 3,
            sensor: SensorParams::default(),
        }
    }

    pub fn sensor(params: SensorParams) -> Self {
        GeneratorConfig {
            family: Family::SensorField,
            n: params.targets,
            density: 0.0,
            k: 3,
            sensor: params,
        }
    }

    /// Edge count implied by the configuration (sensor fields: unknown until
    /// generated, reported as 0).
    pub fn edge_count(&self) -> usize {
        match self.family {
            Family::MintonColoring => (self.density * self.n as f64).round() as usize,
            Family::RandomColoring => random_edge_count(self.n, self.density),
            Family::SensorField => 0,
        }
    }

    pub fn generate(&self, seed: u64) -> Result<CspInstance, GenError> {
        match self.family {
            Family::MintonColoring => gen_minton(self.n, self.edge_count(), self.k, seed),
            Family::RandomColoring => gen_random_k(self.n, self.density, self.k, seed),
            Family::SensorField => gen_sensor_field(&self.sensor, seed),
        }
    }

    /// `family n m k seed`
    pub fn manifest_line(&self, instance: &CspInstance, seed: u64) -> String {
        format!(
            "{} {} {} {} {}",
            self.family.as_str(),
            instance.num_variables(),
            instance.num_constraints(),
            instance.k(),
            seed
        )
    }
}

/// Edge count for density `d` over `n` nodes: `round(d * n)`, the same
/// edges-per-node scale as the Minton families, so `d = 2.3` sits inside the
/// 3-colorability phase transition.
pub fn random_edge_count(n: usize, d: f64) -> usize {
    (d * n as f64).round() as usize
}

/// Satisfiable coloring: variables are split into `k` equal groups and every
/// edge joins random members of two distinct random groups.
pub fn gen_minton(n: usize, m: usize, k: u32, seed: u64) -> Result<CspInstance, GenError> {
    gen_minton_with_witness(n, m, k, seed).map(|(inst, _)| inst)
}

/// Like [`gen_minton`], also returning the generating partition
/// (group index per variable), which is a proper coloring.
pub fn gen_minton_with_witness(
    n: usize,
    m: usize,
    k: u32,
    seed: u64,
) -> Result<(CspInstance, Vec<u32>), GenError> {
    if k == 0 || !n.is_multiple_of(k as usize) {
        return Err(GenError::UnevenPartition { n, k });
    }
    let size = n / k as usize;
    let all_pairs = n * n.saturating_sub(1) / 2;
    let within = k as usize * (size * size.saturating_sub(1) / 2);
    let available = all_pairs - within;
    if m > available {
        return Err(GenError::InfeasibleEdgeCount {
            requested: m,
            available,
        });
    }
    let mut rng = rng_from_seed(seed);
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(&mut rng);
    let groups: Vec<&[u32]> = order.chunks(size.max(1)).collect();
    let mut group_of = vec![0u32; n];
    for (g, members) in groups.iter().enumerate() {
        for &x in members.iter() {
            group_of[x as usize] = g as u32;
        }
    }
    let mut seen = BTreeSet::new();
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let ga = rng.gen_range(0..k as usize);
        let gb = rng.gen_range(0..k as usize);
        if ga == gb {
            continue;
        }
        let a = groups[ga][rng.gen_range(0..size)];
        let b = groups[gb][rng.gen_range(0..size)];
        if seen.insert((a.min(b), a.max(b))) {
            edges.push((a, b));
        }
    }
    Ok((CspInstance::coloring(n, k, &edges)?, group_of))
}

/// Uniform random 3-coloring graph with `round(d * n)` distinct edges.
pub fn gen_random(n: usize, d: f64, seed: u64) -> Result<CspInstance, GenError> {
    gen_random_k(n, d, 3, seed)
}

pub fn gen_random_k(n: usize, d: f64, k: u32, seed: u64) -> Result<CspInstance, GenError> {
    if !(d.is_finite() && d >= 0.0) {
        return Err(GenError::InvalidParameter(format!("density {d}")));
    }
    gen_random_edges(n, random_edge_count(n, d), k, seed)
}

/// Uniform random coloring graph with exactly `m` distinct edges.
pub fn gen_random_edges(n: usize, m: usize, k: u32, seed: u64) -> Result<CspInstance, GenError> {
    let available = n * n.saturating_sub(1) / 2;
    if m > available {
        return Err(GenError::InfeasibleEdgeCount {
            requested: m,
            available,
        });
    }
    let mut rng = rng_from_seed(seed);
    let mut seen = BTreeSet::new();
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let a = rng.gen_range(0..n as u32);
        let b = rng.gen_range(0..n as u32);
        if a != b && seen.insert((a.min(b), a.max(b))) {
            edges.push((a, b));
        }
    }
    Ok(CspInstance::coloring(n, k, &edges)?)
}

/// Sensors on a grid, targets uniformly placed; each target sees the sensors
/// within `range`. Targets whose visible sets intersect are constrained.
pub fn gen_sensor_field(params: &SensorParams, seed: u64) -> Result<CspInstance, GenError> {
    if params.targets == 0 {
        return Err(GenError::InvalidParameter(
            "target count must be >= 1".into(),
        ));
    }
    if params.rows == 0 || params.cols == 0 {
        return Err(GenError::InvalidParameter("sensor grid is empty".into()));
    }
    if !(params.width > 0.0 && params.height > 0.0 && params.range > 0.0) {
        return Err(GenError::InvalidParameter(
            "field size and range must be positive".into(),
        ));
    }
    let sensors = params.sensor_positions();
    let mut rng = rng_from_seed(seed);
    let r2 = params.range * params.range;
    let mut visible = Vec::with_capacity(params.targets);
    for t in 0..params.targets {
        let mut attempts = 0;
        loop {
            attempts += 1;
            let tx = rng.gen::<f64>() * params.width;
            let ty = rng.gen::<f64>() * params.height;
            let seen: Vec<u32> = sensors
                .iter()
                .enumerate()
                .filter(|(_, &(sx, sy))| (sx - tx).powi(2) + (sy - ty).powi(2) <= r2)
                .map(|(i, _)| i as u32)
                .collect();
            if !seen.is_empty() {
                visible.push(seen);
                break;
            }
            if attempts >= MAX_PLACEMENT_ATTEMPTS {
                return Err(GenError::EmptyVisibility {
                    target: t,
                    attempts,
                });
            }
        }
    }
    let mut edges = Vec::new();
    for a in 0..visible.len() {
        for b in a + 1..visible.len() {
            if visible[a]
                .iter()
                .any(|s| visible[b].binary_search(s).is_ok())
            {
                edges.push((a as u32, b as u32));
            }
        }
    }
    Ok(CspInstance::sensor(visible, &edges)?)
}

/// Random initial value per variable, drawn uniformly from its domain.
pub fn random_initial_values(instance: &CspInstance, seed: u64) -> crate::csp::Assignment {
    let mut rng = rng_from_seed(seed);
    instance
        .variables()
        .map(|x: VariableId| {
            let d = instance.domain(x);
            (x, d[rng.gen_range(0..d.len())].clone())
        })
        .collect()
}
