//! Batch statistics: per-cell means, standard deviations, link and
//! centralization percentages, and the paired one-sided t-test.

use std::collections::BTreeMap;
use std::io::Write;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::StatsError;
use crate::generators::Family;
use crate::sim::{Protocol, TrialResult, TrialVerdict};

pub const SUMMARY_HEADER: [&str; 22] = [
    "protocol",
    "family",
    "n",
    "density",
    "targets",
    "trials",
    "solved_pct",
    "cycles_mean",
    "cycles_sd",
    "msgs_mean",
    "msgs_sd",
    "bytes_mean",
    "bytes_sd",
    "work_mean",
    "work_sd",
    "links_pct_mean",
    "links_pct_sd",
    "central_pct_mean",
    "central_pct_sd",
    "p_value",
    "cycles_completed_mean",
    "cycles_completed_sd",
];

/// Share of the `n(n-1)` possible directed links present in agent views.
pub fn pct_links(t: &TrialResult) -> f64 {
    if t.n < 2 {
        return 100.0;
    }
    100.0 * t.links_directed as f64 / (t.n * (t.n - 1)) as f64
}

/// Largest single view, counting its owner, as a share of all agents.
pub fn pct_central(t: &TrialResult) -> f64 {
    if t.n == 0 {
        return 0.0;
    }
    100.0 * t.max_view as f64 / t.n as f64
}

/// Mean and sample standard deviation. A single sample has deviation 0.
pub fn mean_sd(xs: &[f64]) -> Result<(f64, f64), StatsError> {
    if xs.is_empty() {
        return Err(StatsError::EmptyBatch);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Ok((mean, 0.0));
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    Ok((mean, (ss / (n - 1.0)).sqrt()))
}

/// One-sided paired t-test of `mean(b - a) <= 0`. Small p-values mean `b`
/// is reliably larger than `a`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(StatsError::TooFewSamples(a.len()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let (mean, sd) = mean_sd(&d)?;
    if sd == 0.0 {
        return Ok(if mean == 0.0 {
            0.5
        } else if mean > 0.0 {
            0.0
        } else {
            1.0
        });
    }
    let n = d.len() as f64;
    let t = mean / (sd / n.sqrt());
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).expect("degrees of freedom are positive");
    Ok(1.0 - dist.cdf(t))
}

/// Where a trial sits in an experiment grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CellInfo {
    /// Stable textual key, e.g. `minton:n=30:d=2.3:k=3`.
    pub key: String,
    pub family: Family,
    pub n: usize,
    pub density: Option<f64>,
    pub targets: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub cell: CellInfo,
    pub index: usize,
    pub instance_seed: u64,
    pub value_seed: u64,
    pub result: TrialResult,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Stat {
    pub mean: f64,
    pub sd: f64,
}

impl Stat {
    fn of(xs: &[f64]) -> Stat {
        mean_sd(xs).map_or(Stat::default(), |(mean, sd)| Stat { mean, sd })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchSummary {
    pub protocol: Protocol,
    pub cell: CellInfo,
    pub trials: usize,
    /// Trials that solved or refuted their instance, in percent.
    pub solved_pct: f64,
    pub cycles: Stat,
    pub messages: Stat,
    pub bytes: Stat,
    pub work: Stat,
    pub links_pct: Stat,
    pub central_pct: Stat,
    /// p(AWC <= APO) on cycles, over pairs sharing both seeds.
    pub p_value: Option<f64>,
    /// Same test on message counts.
    pub p_messages: Option<f64>,
    /// Same test on serial work.
    pub p_work: Option<f64>,
    /// Cycle statistics over completed trials only.
    pub cycles_completed: Option<Stat>,
    /// `true` for a single-trial batch whose deviations are 0 by convention.
    pub single: bool,
}

fn paired(
    apo: &[&TrialRecord],
    awc: &[&TrialRecord],
    f: impl Fn(&TrialResult) -> f64,
) -> Option<f64> {
    let by_seed: BTreeMap<(u64, u64), &TrialRecord> = awc
        .iter()
        .map(|r| ((r.instance_seed, r.value_seed), *r))
        .collect();
    let (a, b): (Vec<f64>, Vec<f64>) = apo
        .iter()
        .filter_map(|r| {
            by_seed
                .get(&(r.instance_seed, r.value_seed))
                .map(|o| (f(&r.result), f(&o.result)))
        })
        .unzip();
    paired_t_test(&a, &b).ok()
}

/// Aggregates trial records into one summary per (cell, protocol), ordered
/// by cell key then protocol. The result does not depend on record order.
pub fn summarize(records: &[TrialRecord]) -> Result<Vec<BatchSummary>, StatsError> {
    if records.is_empty() {
        return Err(StatsError::EmptyBatch);
    }
    let mut groups: BTreeMap<(String, Protocol), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.cell.key.clone(), r.result.protocol))
            .or_default()
            .push(r);
    }
    for g in groups.values_mut() {
        g.sort_by_key(|r| (r.instance_seed, r.value_seed, r.index));
    }
    let mut out = Vec::new();
    for ((key, protocol), rs) in &groups {
        let col = |f: &dyn Fn(&TrialResult) -> f64| -> Vec<f64> {
            rs.iter().map(|r| f(&r.result)).collect()
        };
        let completed: Vec<f64> = rs
            .iter()
            .filter(|r| r.result.verdict.terminated())
            .map(|r| r.result.cycles as f64)
            .collect();
        let apo = groups.get(&(key.clone(), Protocol::Apo));
        let awc = groups.get(&(key.clone(), Protocol::Awc));
        let (p_value, p_messages, p_work) = match (apo, awc) {
            (Some(a), Some(b)) => (
                paired(a, b, |t| t.cycles as f64),
                paired(a, b, |t| t.messages as f64),
                paired(a, b, |t| t.work as f64),
            ),
            _ => (None, None, None),
        };
        let terminated = rs.iter().filter(|r| r.result.verdict.terminated()).count();
        out.push(BatchSummary {
            protocol: *protocol,
            cell: rs[0].cell.clone(),
            trials: rs.len(),
            solved_pct: 100.0 * terminated as f64 / rs.len() as f64,
            cycles: Stat::of(&col(&|t| t.cycles as f64)),
            messages: Stat::of(&col(&|t| t.messages as f64)),
            bytes: Stat::of(&col(&|t| t.bytes as f64)),
            work: Stat::of(&col(&|t| t.work as f64)),
            links_pct: Stat::of(&col(&pct_links)),
            central_pct: Stat::of(&col(&pct_central)),
            p_value,
            p_messages,
            p_work,
            cycles_completed: (!completed.is_empty()).then(|| Stat::of(&completed)),
            single: rs.len() == 1,
        });
    }
    Ok(out)
}

fn num(x: f64) -> String {
    format!("{x:.4}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl BatchSummary {
    pub fn csv_row(&self) -> Vec<String> {
        let density = self
            .cell
            .density
            .map(|d| format!("{d}"))
            .unwrap_or_default();
        let targets = self.cell.targets.map(|t| t.to_string()).unwrap_or_default();
        let cc = self.cycles_completed;
        vec![
            self.protocol.as_str().to_string(),
            self.cell.family.as_str().to_string(),
            self.cell.n.to_string(),
            density,
            targets,
            self.trials.to_string(),
            num(self.solved_pct),
            num(self.cycles.mean),
            num(self.cycles.sd),
            num(self.messages.mean),
            num(self.messages.sd),
            num(self.bytes.mean),
            num(self.bytes.sd),
            num(self.work.mean),
            num(self.work.sd),
            num(self.links_pct.mean),
            num(self.links_pct.sd),
            num(self.central_pct.mean),
            num(self.central_pct.sd),
            opt(self.p_value),
            opt(cc.map(|s| s.mean)),
            opt(cc.map(|s| s.sd)),
        ]
    }
}

pub fn write_summary_csv<W: Write>(w: W, rows: &[BatchSummary]) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(SUMMARY_HEADER)?;
    for r in rows {
        wr.write_record(r.csv_row())?;
    }
    wr.flush()?;
    Ok(())
}

pub const TRIAL_HEADER: [&str; 25] = [
    "cell",
    "index",
    "protocol",
    "instance_seed",
    "value_seed",
    "verdict",
    "cycles",
    "messages",
    "bytes",
    "work",
    "wall_ns",
    "links_pct",
    "central_pct",
    "sessions",
    "violations",
    "init",
    "ok",
    "evaluate_req",
    "wait",
    "evaluate_reply",
    "accept",
    "awc_ok",
    "nogood",
    "link",
    "no_solution_cycle",
];

impl TrialRecord {
    pub fn csv_row(&self) -> Vec<String> {
        let t = &self.result;
        let mut row = vec![
            self.cell.key.clone(),
            self.index.to_string(),
            t.protocol.as_str().to_string(),
            self.instance_seed.to_string(),
            self.value_seed.to_string(),
            t.verdict.as_str().to_string(),
            t.cycles.to_string(),
            t.messages.to_string(),
            t.bytes.to_string(),
            t.work.to_string(),
            t.wall_ns.to_string(),
            num(pct_links(t)),
            num(pct_central(t)),
            t.sessions.to_string(),
            t.violations.len().to_string(),
        ];
        row.extend(t.messages_by_kind.iter().map(|c| c.to_string()));
        row.push(
            t.no_solution_cycle
                .map(|c| c.to_string())
                .unwrap_or_default(),
        );
        row
    }
}

pub fn write_trials_csv<W: Write>(w: W, records: &[TrialRecord]) -> Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(TRIAL_HEADER)?;
    for r in records {
        wr.write_record(r.csv_row())?;
    }
    wr.flush()?;
    Ok(())
}

/// Percentage of records whose verdict is `v`.
pub fn verdict_pct(records: &[&TrialRecord], v: TrialVerdict) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    100.0 * records.iter().filter(|r| r.result.verdict == v).count() as f64 / records.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::MESSAGE_KINDS;

    fn result(protocol: Protocol, cycles: u64, n: usize, links: u64, max_view: u64) -> TrialResult {
        TrialResult {
            protocol,
            verdict: TrialVerdict::Solved,
            cycles,
            messages: cycles * 10,
            messages_by_kind: [0; MESSAGE_KINDS],
            bytes: 0,
            work: cycles,
            wall_ns: 0,
            n,
            links_directed: links,
            max_view,
            sessions: 0,
            no_solution_cycle: None,
            final_assignment: None,
            violations: vec![],
            trace: None,
        }
    }

    #[test]
    fn link_percentages() {
        assert_eq!(pct_links(&result(Protocol::Apo, 1, 5, 20, 5)), 100.0);
        // star with 10 nodes after the start-up exchange: 2(n-1) links
        let star = result(Protocol::Apo, 1, 10, 18, 10);
        assert!((pct_links(&star) - 200.0 / 10.0).abs() < 1e-9);
        assert_eq!(pct_central(&result(Protocol::Apo, 1, 4, 0, 1)), 25.0);
        assert_eq!(pct_central(&result(Protocol::Apo, 1, 4, 12, 4)), 100.0);
    }

    #[test]
    fn mean_and_sample_sd() {
        assert_eq!(mean_sd(&[10.0, 20.0, 30.0]).unwrap(), (20.0, 10.0));
        assert_eq!(mean_sd(&[7.0]).unwrap(), (7.0, 0.0));
        assert_eq!(mean_sd(&[]), Err(StatsError::EmptyBatch));
    }

    #[test]
    fn t_test_edge_cases() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(paired_t_test(&a, &a).unwrap(), 0.5);
        let b: Vec<f64> = a.iter().map(|x| x + 10.0).collect();
        assert_eq!(paired_t_test(&a, &b).unwrap(), 0.0);
        let mut noisy = b.clone();
        noisy[0] += 0.01;
        assert!(paired_t_test(&a, &noisy).unwrap() < 1e-6);
        assert!(paired_t_test(&b, &a).unwrap() > 0.99);
        assert_eq!(
            paired_t_test(&[1.0], &[2.0]),
            Err(StatsError::TooFewSamples(1))
        );
        assert_eq!(
            paired_t_test(&[1.0, 2.0], &[2.0]),
            Err(StatsError::LengthMismatch(2, 1))
        );
    }

    #[test]
    fn t_test_matches_reference_value() {
        // d = [1, 2, 3, 4, 5]: mean 3, sd sqrt(2.5), t = 4.2426 with 4 df
        let a = [0.0; 5];
        let b = [1.0, 2.0, 3.0, 4.0, 5.0];
        let p = paired_t_test(&a, &b).unwrap();
        assert!((p - 0.006_618).abs() < 1e-5, "{p}");
    }

    fn record(protocol: Protocol, seed: u64, cycles: u64) -> TrialRecord {
        TrialRecord {
            cell: CellInfo {
                key: "minton:n=5:m=10:k=3".into(),
                family: Family::MintonColoring,
                n: 5,
                density: Some(2.0),
                targets: None,
            },
            index: seed as usize,
            instance_seed: seed,
            value_seed: seed + 100,
            result: result(protocol, cycles, 5, 8, 3),
        }
    }

    #[test]
    fn summary_pairs_protocols_and_ignores_order() {
        let mut recs = vec![
            record(Protocol::Apo, 1, 10),
            record(Protocol::Apo, 2, 20),
            record(Protocol::Apo, 3, 30),
            record(Protocol::Awc, 1, 15),
            record(Protocol::Awc, 2, 26),
            record(Protocol::Awc, 3, 34),
        ];
        let s = summarize(&recs).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].protocol, Protocol::Apo);
        assert_eq!(
            s[0].cycles,
            Stat {
                mean: 20.0,
                sd: 10.0
            }
        );
        assert!(s[0].p_value.unwrap() < 0.05);
        assert_eq!(s[0].p_value, s[1].p_value);
        recs.reverse();
        assert_eq!(summarize(&recs).unwrap(), s);
    }

    #[test]
    fn single_trial_batch_is_flagged() {
        let s = summarize(&[record(Protocol::Apo, 1, 12)]).unwrap();
        assert!(s[0].single);
        assert_eq!(s[0].cycles.sd, 0.0);
        assert_eq!(s[0].p_value, None);
    }

    #[test]
    fn csv_has_the_declared_columns() {
        let s = summarize(&[record(Protocol::Apo, 1, 12)]).unwrap();
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SUMMARY_HEADER.join(","));
        assert_eq!(
            lines.next().unwrap().split(',').count(),
            SUMMARY_HEADER.len()
        );
    }
}
