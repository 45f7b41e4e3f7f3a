//! Experiment configuration files.
//!
//! A configuration is TOML with a few top-level keys and one `[[grid]]`
//! table per family sweep:
//!
//! ```toml
//! suite = "sat-coloring"
//! protocols = ["apo", "awc"]
//! cycle_limit = 1000
//! seed = 7
//!
//! [[grid]]
//! family = "minton"
//! n = [15, 30]
//! density = [2.0, 2.3, 2.7]
//! k = 3
//! instances = 25
//! ```

use std::path::PathBuf;

use serde::Deserialize;

use crate::error::HarnessError;
use crate::generators::{Family, GeneratorConfig, SensorParams};
use crate::metrics::CellInfo;
use crate::sim::{Protocol, DEFAULT_CYCLE_LIMIT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    SatColoring,
    RandomColoring60,
    RuntimeColoring,
    Tracking,
    Custom,
}

impl Suite {
    pub fn as_str(self) -> &'static str {
        match self {
            Suite::SatColoring => "sat-coloring",
            Suite::RandomColoring60 => "random-coloring60",
            Suite::RuntimeColoring => "runtime-coloring",
            Suite::Tracking => "tracking",
            Suite::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Suite> {
        [
            Suite::SatColoring,
            Suite::RandomColoring60,
            Suite::RuntimeColoring,
            Suite::Tracking,
            Suite::Custom,
        ]
        .into_iter()
        .find(|x| x.as_str() == s)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    suite: Suite,
    protocols: Vec<String>,
    #[serde(default = "default_cycle_limit")]
    cycle_limit: u64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    out: Option<PathBuf>,
    #[serde(default)]
    grid: Vec<RawGrid>,
}

fn default_cycle_limit() -> u64 {
    DEFAULT_CYCLE_LIMIT
}

fn one() -> usize {
    1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    family: String,
    #[serde(default)]
    n: Vec<usize>,
    #[serde(default)]
    density: Vec<f64>,
    #[serde(default)]
    k: Option<u32>,
    #[serde(default)]
    targets: Vec<usize>,
    #[serde(default)]
    rows: Option<u32>,
    #[serde(default)]
    cols: Option<u32>,
    #[serde(default)]
    width: Option<f64>,
    #[serde(default)]
    height: Option<f64>,
    #[serde(default)]
    range: Option<f64>,
    instances: usize,
    #[serde(default = "one")]
    assignments: usize,
}

/// One point of an experiment grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub info: CellInfo,
    pub generator: GeneratorConfig,
    pub instances: usize,
    /// Initial assignments drawn per instance.
    pub assignments: usize,
}

impl Cell {
    pub fn new(generator: GeneratorConfig, instances: usize, assignments: usize) -> Cell {
        Cell {
            info: cell_info(&generator),
            generator,
            instances,
            assignments,
        }
    }

    pub fn trials(&self) -> usize {
        self.instances * self.assignments
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub suite: Suite,
    pub protocols: Vec<Protocol>,
    pub cycle_limit: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub cells: Vec<Cell>,
}

fn invalid(path: impl Into<String>, msg: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        path: path.into(),
        msg: msg.into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig, HarnessError> {
        let raw: RawConfig = toml::from_str(text)?;
        if raw.protocols.is_empty() {
            return Err(invalid("protocols", "at least one protocol is required"));
        }
        let mut protocols = Vec::new();
        for (i, p) in raw.protocols.iter().enumerate() {
            let p = Protocol::parse(p).ok_or_else(|| {
                invalid(format!("protocols[{i}]"), format!("unknown protocol `{p}`"))
            })?;
            if protocols.contains(&p) {
                return Err(invalid(format!("protocols[{i}]"), "listed twice"));
            }
            protocols.push(p);
        }
        if raw.cycle_limit == 0 {
            return Err(invalid("cycle_limit", "must be positive"));
        }
        if raw.grid.is_empty() {
            return Err(invalid("grid", "at least one [[grid]] table is required"));
        }
        let mut cells = Vec::new();
        for (i, g) in raw.grid.iter().enumerate() {
            expand(g, &format!("grid[{i}]"), &mut cells)?;
        }
        let mut keys: Vec<&str> = cells.iter().map(|c| c.info.key.as_str()).collect();
        keys.sort_unstable();
        if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
            return Err(invalid("grid", format!("cell `{}` appears twice", w[0])));
        }
        Ok(ExperimentConfig {
            suite: raw.suite,
            protocols,
            cycle_limit: raw.cycle_limit,
            seed: raw.seed,
            out: raw.out,
            cells,
        })
    }

    pub fn total_trials(&self) -> usize {
        self.cells.iter().map(Cell::trials).sum::<usize>() * self.protocols.len()
    }
}

fn expand(g: &RawGrid, path: &str, cells: &mut Vec<Cell>) -> Result<(), HarnessError> {
    let field = |f: &str| format!("{path}.{f}");
    let family = Family::parse(&g.family)
        .ok_or_else(|| invalid(field("family"), format!("unknown family `{}`", g.family)))?;
    if g.instances == 0 {
        return Err(invalid(field("instances"), "must be positive"));
    }
    if g.assignments == 0 {
        return Err(invalid(field("assignments"), "must be positive"));
    }
    match family {
        Family::MintonColoring | Family::RandomColoring => {
            for (f, set) in [
                ("targets", !g.targets.is_empty()),
                ("rows", g.rows.is_some()),
                ("cols", g.cols.is_some()),
                ("width", g.width.is_some()),
                ("height", g.height.is_some()),
                ("range", g.range.is_some()),
            ] {
                if set {
                    return Err(invalid(field(f), "only applies to sensor grids"));
                }
            }
            if g.n.is_empty() {
                return Err(invalid(field("n"), "at least one size is required"));
            }
            if g.density.is_empty() {
                return Err(invalid(
                    field("density"),
                    "at least one density is required",
                ));
            }
            let k = g.k.unwrap_or(3);
            if k == 0 {
                return Err(invalid(field("k"), "must be positive"));
            }
            for (j, &d) in g.density.iter().enumerate() {
                if !(d.is_finite() && d > 0.0) {
                    return Err(invalid(format!("{path}.density[{j}]"), "must be positive"));
                }
            }
            for (j, &n) in g.n.iter().enumerate() {
                if n == 0 {
                    return Err(invalid(format!("{path}.n[{j}]"), "must be positive"));
                }
                if family == Family::MintonColoring && !n.is_multiple_of(k as usize) {
                    return Err(invalid(
                        format!("{path}.n[{j}]"),
                        format!("{n} is not divisible by k = {k}"),
                    ));
                }
                for &d in &g.density {
                    let mut gen = match family {
                        Family::MintonColoring => GeneratorConfig::minton(n, d, k),
                        _ => GeneratorConfig::random(n, d),
                    };
                    gen.k = k;
                    cells.push(Cell::new(gen, g.instances, g.assignments));
                }
            }
        }
        Family::SensorField => {
            for (f, set) in [
                ("n", !g.n.is_empty()),
                ("density", !g.density.is_empty()),
                ("k", g.k.is_some()),
            ] {
                if set {
                    return Err(invalid(field(f), "does not apply to sensor grids"));
                }
            }
            if g.targets.is_empty() {
                return Err(invalid(
                    field("targets"),
                    "at least one target count is required",
                ));
            }
            let base = SensorParams::default();
            let params = SensorParams {
                rows: g.rows.unwrap_or(base.rows),
                cols: g.cols.unwrap_or(base.cols),
                width: g.width.unwrap_or(base.width),
                height: g.height.unwrap_or(base.height),
                range: g.range.unwrap_or(base.range),
                ..base
            };
            if params.rows == 0 || params.cols == 0 {
                return Err(invalid(field("rows"), "grid must have at least one sensor"));
            }
            for (f, v) in [
                ("width", params.width),
                ("height", params.height),
                ("range", params.range),
            ] {
                if !(v.is_finite() && v > 0.0) {
                    return Err(invalid(field(f), "must be positive"));
                }
            }
            for (j, &t) in g.targets.iter().enumerate() {
                if t == 0 {
                    return Err(invalid(format!("{path}.targets[{j}]"), "must be positive"));
                }
                let gen = GeneratorConfig::sensor(SensorParams {
                    targets: t,
                    ..params
                });
                cells.push(Cell::new(gen, g.instances, g.assignments));
            }
        }
    }
    Ok(())
}

/// Stable textual key for a generator configuration. The key carries every
/// parameter, so [`parse_cell_key`] recovers the generator exactly.
pub fn cell_key(g: &GeneratorConfig) -> String {
    match g.family {
        Family::MintonColoring | Family::RandomColoring => {
            format!("{}:n={}:d={}:k={}", g.family.as_str(), g.n, g.density, g.k)
        }
        Family::SensorField => {
            let s = &g.sensor;
            format!(
                "sensor:targets={}:rows={}:cols={}:w={}:h={}:range={}",
                s.targets, s.rows, s.cols, s.width, s.height, s.range
            )
        }
    }
}

pub fn cell_info(g: &GeneratorConfig) -> CellInfo {
    let sensor = g.family == Family::SensorField;
    CellInfo {
        key: cell_key(g),
        family: g.family,
        n: g.n,
        density: (!sensor).then_some(g.density),
        targets: sensor.then_some(g.sensor.targets),
    }
}

pub fn parse_cell_key(key: &str) -> Option<GeneratorConfig> {
    let mut parts = key.split(':');
    let family = Family::parse(parts.next()?)?;
    let mut fields = std::collections::BTreeMap::new();
    for p in parts {
        let (k, v) = p.split_once('=')?;
        if fields.insert(k, v).is_some() {
            return None;
        }
    }
    let take = |k: &str| fields.get(k).copied();
    let g = match family {
        Family::MintonColoring | Family::RandomColoring => {
            if fields.len() != 3 {
                return None;
            }
            let n = take("n")?.parse().ok()?;
            let d = take("d")?.parse().ok()?;
            let k = take("k")?.parse().ok()?;
            let mut g = match family {
                Family::MintonColoring => GeneratorConfig::minton(n, d, k),
                _ => GeneratorConfig::random(n, d),
            };
            g.k = k;
            g
        }
        Family::SensorField => {
            if fields.len() != 6 {
                return None;
            }
            GeneratorConfig::sensor(SensorParams {
                targets: take("targets")?.parse().ok()?,
                rows: take("rows")?.parse().ok()?,
                cols: take("cols")?.parse().ok()?,
                width: take("w")?.parse().ok()?,
                height: take("h")?.parse().ok()?,
                range: take("range")?.parse().ok()?,
            })
        }
    };
    (cell_key(&g) == key).then_some(g)
}

/// Preset configuration files, by name.
pub const PRESETS: [(&str, &str); 4] = [
    (
        "sat-coloring-desk",
        include_str!("../../presets/sat-coloring-desk.toml"),
    ),
    (
        "random-coloring60-desk",
        include_str!("../../presets/random-coloring60-desk.toml"),
    ),
    (
        "runtime-coloring-desk",
        include_str!("../../presets/runtime-coloring-desk.toml"),
    ),
    (
        "tracking-desk",
        include_str!("../../presets/tracking-desk.toml"),
    ),
];

pub fn preset(name: &str) -> Result<ExperimentConfig, HarnessError> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| HarnessError::UnknownSuite(name.to_string()))?;
    ExperimentConfig::from_toml(text)
}
