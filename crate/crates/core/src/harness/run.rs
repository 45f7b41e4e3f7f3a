//! Suite execution and single-trial replay.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::csp::CspInstance;
use crate::error::HarnessError;
use crate::generators::random_initial_values;
use crate::metrics::{summarize, write_summary_csv, write_trials_csv, BatchSummary, TrialRecord};
use crate::sim::{run_trial, Protocol, SimOptions};

use super::config::{cell_info, parse_cell_key, ExperimentConfig};
use super::manifest::{Manifest, ManifestEntry};
use super::seeds::{instance_seed, value_seed};

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Worker threads; 0 picks the number of CPUs.
    pub jobs: usize,
    pub trace: bool,
    pub assert_invariants: bool,
    /// Overrides the configured cycle limit.
    pub cycle_limit: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            jobs: 0,
            trace: false,
            assert_invariants: true,
            cycle_limit: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteOutput {
    /// Ordered by cell (config order), trial index, then protocol.
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<BatchSummary>,
    pub manifest: Manifest,
}

impl SuiteOutput {
    pub fn violation_count(&self) -> usize {
        self.records.iter().map(|r| r.result.violations.len()).sum()
    }
}

fn sim_options(cycle_limit: u64, trace: bool, assert_invariants: bool) -> SimOptions {
    SimOptions {
        cycle_limit,
        trace,
        assert_invariants,
        ..SimOptions::default()
    }
}

pub fn run_suite(
    config: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<SuiteOutput, HarnessError> {
    let cycle_limit = opts.cycle_limit.unwrap_or(config.cycle_limit);
    let sim = sim_options(cycle_limit, opts.trace, opts.assert_invariants);
    let jobs: Vec<(usize, usize, usize)> = config
        .cells
        .iter()
        .enumerate()
        .flat_map(|(c, cell)| {
            (0..cell.instances).flat_map(move |i| (0..cell.assignments).map(move |j| (c, i, j)))
        })
        .collect();
    let work = |&(c, i, j): &(usize, usize, usize)| -> Result<Vec<TrialRecord>, HarnessError> {
        let cell = &config.cells[c];
        let iseed = instance_seed(config.seed, &cell.info.key, i);
        let vseed = value_seed(config.seed, &cell.info.key, i, j);
        let instance = cell.generator.generate(iseed)?;
        let values = random_initial_values(&instance, vseed);
        config
            .protocols
            .iter()
            .map(|&p| {
                Ok(TrialRecord {
                    cell: cell.info.clone(),
                    index: i * cell.assignments + j,
                    instance_seed: iseed,
                    value_seed: vseed,
                    result: run_trial(&instance, p, Some(&values), &sim, vseed)?,
                })
            })
            .collect()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| HarnessError::Config {
            path: "jobs".into(),
            msg: e.to_string(),
        })?;
    let batches: Vec<Vec<TrialRecord>> =
        pool.install(|| jobs.par_iter().map(work).collect::<Result<_, _>>())?;
    let records: Vec<TrialRecord> = batches.into_iter().flatten().collect();
    let summaries = summarize(&records).map_err(|e| HarnessError::Config {
        path: "grid".into(),
        msg: e.to_string(),
    })?;
    let mut entries = Vec::with_capacity(records.len());
    for cell in &config.cells {
        for &p in &config.protocols {
            for r in records
                .iter()
                .filter(|r| r.cell.key == cell.info.key && r.result.protocol == p)
            {
                entries.push(ManifestEntry {
                    suite: config.suite,
                    cell: r.cell.key.clone(),
                    protocol: p,
                    instance_seed: r.instance_seed,
                    value_seed: r.value_seed,
                });
            }
        }
    }
    Ok(SuiteOutput {
        records,
        summaries,
        manifest: Manifest {
            seed: config.seed,
            cycle_limit,
            assert_invariants: opts.assert_invariants,
            entries,
        },
    })
}

/// Writes `trials.csv`, `summary.csv`, `manifest.txt` and, when any record
/// holds a trace, `traces.txt`.
pub fn write_outputs(dir: &Path, out: &SuiteOutput) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    write_trials_csv(fs::File::create(dir.join("trials.csv"))?, &out.records)?;
    write_summary_csv(fs::File::create(dir.join("summary.csv"))?, &out.summaries)?;
    fs::write(dir.join("manifest.txt"), out.manifest.to_text())?;
    if out.records.iter().any(|r| r.result.trace.is_some()) {
        let mut f = std::io::BufWriter::new(fs::File::create(dir.join("traces.txt"))?);
        for r in &out.records {
            if let Some(lines) = &r.result.trace {
                writeln!(f, "# {} {} {}", r.cell.key, r.result.protocol, r.index)?;
                for l in lines {
                    writeln!(f, "{l}")?;
                }
            }
        }
        f.flush()?;
    }
    Ok(())
}

/// Regenerates the instance and initial values behind a manifest entry.
pub fn rebuild(
    entry: &ManifestEntry,
) -> Result<(CspInstance, crate::csp::Assignment), HarnessError> {
    let g = parse_cell_key(&entry.cell).ok_or_else(|| HarnessError::UnknownTrial {
        cell: entry.cell.clone(),
        index: 0,
    })?;
    let instance = g.generate(entry.instance_seed)?;
    let values = random_initial_values(&instance, entry.value_seed);
    Ok((instance, values))
}

/// Re-executes trial `index` of `cell`, for one protocol or for every
/// protocol the manifest lists for that cell.
pub fn replay(
    manifest: &Manifest,
    cell: &str,
    index: usize,
    protocol: Option<Protocol>,
    trace: bool,
) -> Result<Vec<TrialRecord>, HarnessError> {
    let protocols = match protocol {
        Some(p) => vec![p],
        None => manifest.protocols(cell),
    };
    let unknown = || HarnessError::UnknownTrial {
        cell: cell.to_string(),
        index,
    };
    if protocols.is_empty() {
        return Err(unknown());
    }
    let info = parse_cell_key(cell)
        .map(|g| cell_info(&g))
        .ok_or_else(unknown)?;
    let sim = sim_options(manifest.cycle_limit, trace, manifest.assert_invariants);
    protocols
        .into_iter()
        .map(|p| {
            let entry = manifest.find(cell, p, index).ok_or_else(unknown)?;
            let (instance, values) = rebuild(entry)?;
            Ok(TrialRecord {
                cell: info.clone(),
                index,
                instance_seed: entry.instance_seed,
                value_seed: entry.value_seed,
                result: run_trial(&instance, p, Some(&values), &sim, entry.value_seed)?,
            })
        })
        .collect()
}
