//! Run manifests: every seed needed to regenerate each trial.
//!
//! Header lines start with `#` and carry `key=value` settings; every other
//! line is `suite cell protocol instance_seed value_seed`. The position of a
//! line among those with the same cell and protocol is the trial index.

use std::fmt::Write as _;

use crate::error::HarnessError;
use crate::sim::{Protocol, DEFAULT_CYCLE_LIMIT};

use super::config::{parse_cell_key, Suite};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub suite: Suite,
    pub cell: String,
    pub protocol: Protocol,
    pub instance_seed: u64,
    pub value_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub seed: u64,
    pub cycle_limit: u64,
    pub assert_invariants: bool,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut s = String::from("# apo-dcsp run manifest\n");
        let _ = writeln!(s, "# seed={}", self.seed);
        let _ = writeln!(s, "# cycle_limit={}", self.cycle_limit);
        let _ = writeln!(s, "# assert_invariants={}", self.assert_invariants);
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{} {} {} {} {}",
                e.suite.as_str(),
                e.cell,
                e.protocol,
                e.instance_seed,
                e.value_seed
            );
        }
        s
    }

    pub fn parse(text: &str) -> Result<Manifest, HarnessError> {
        let mut m = Manifest {
            seed: 0,
            cycle_limit: DEFAULT_CYCLE_LIMIT,
            assert_invariants: true,
            entries: Vec::new(),
        };
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let bad = |msg: String| HarnessError::Manifest { line: line_no, msg };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                if let Some((k, v)) = header.trim().split_once('=') {
                    let v = v.trim();
                    match k.trim() {
                        "seed" => m.seed = v.parse().map_err(|_| bad(format!("bad seed `{v}`")))?,
                        "cycle_limit" => {
                            m.cycle_limit = v
                                .parse()
                                .map_err(|_| bad(format!("bad cycle limit `{v}`")))?
                        }
                        "assert_invariants" => {
                            m.assert_invariants =
                                v.parse().map_err(|_| bad(format!("bad flag `{v}`")))?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 5 {
                return Err(bad(format!("expected 5 fields, found {}", f.len())));
            }
            let suite =
                Suite::parse(f[0]).ok_or_else(|| bad(format!("unknown suite `{}`", f[0])))?;
            if parse_cell_key(f[1]).is_none() {
                return Err(bad(format!("malformed cell `{}`", f[1])));
            }
            let protocol =
                Protocol::parse(f[2]).ok_or_else(|| bad(format!("unknown protocol `{}`", f[2])))?;
            let seed = |s: &str| s.parse::<u64>().map_err(|_| bad(format!("bad seed `{s}`")));
            m.entries.push(ManifestEntry {
                suite,
                cell: f[1].to_string(),
                protocol,
                instance_seed: seed(f[3])?,
                value_seed: seed(f[4])?,
            });
        }
        Ok(m)
    }

    /// The `index`-th entry for `cell` under `protocol`.
    pub fn find(&self, cell: &str, protocol: Protocol, index: usize) -> Option<&ManifestEntry> {
        self.entries
            .iter()
            .filter(|e| e.cell == cell && e.protocol == protocol)
            .nth(index)
    }

    /// Protocols recorded for `cell`, in first-seen order.
    pub fn protocols(&self, cell: &str) -> Vec<Protocol> {
        let mut out = Vec::new();
        for e in self.entries.iter().filter(|e| e.cell == cell) {
            if !out.contains(&e.protocol) {
                out.push(e.protocol);
            }
        }
        out
    }
}
