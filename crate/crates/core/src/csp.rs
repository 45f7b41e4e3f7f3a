//! Problem representation: variables, finite domains, binary constraints.
//!
//! A [`CspInstance`] is immutable once built. Variables are dense integer
//! indices; constraints are stored once per unordered pair and adjacency is
//! precomputed per variable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::CspError;

/// Default cap on the product of domain sizes accepted by [`brute_force`].
pub const DEFAULT_BRUTE_FORCE_CAP: u128 = 10_000_000;

/// Number of sensors a target asks for when enough are visible.
pub const SENSORS_PER_TARGET: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableId(pub u32);

impl VariableId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Name used for lexicographic tie-breaks. Zero padding makes name order
    /// agree with numeric order.
    pub fn name(self) -> String {
        format!("{:06}", self.0)
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Coloring,
    Sensor,
}

impl Kind {
    pub fn relation(self) -> Relation {
        match self {
            Kind::Coloring => Relation::NotEquals,
            Kind::Sensor => Relation::NotIntersects,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Coloring => "coloring",
            Kind::Sensor => "sensor",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    NotEquals,
    NotIntersects,
}

/// A domain value. Sensor sets are kept sorted so that set equality is
/// representation equality.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Color(u32),
    Sensors(Vec<u32>),
}

impl Value {
    pub fn sensors(mut ids: Vec<u32>) -> Value {
        ids.sort_unstable();
        ids.dedup();
        Value::Sensors(ids)
    }

    /// Number of scalar elements the value carries on the wire.
    pub fn width(&self) -> usize {
        match self {
            Value::Color(_) => 1,
            Value::Sensors(s) => s.len(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Color(c) => write!(f, "{c}"),
            Value::Sensors(s) => {
                let parts: Vec<String> = s.iter().map(|x| x.to_string()).collect();
                write!(f, "{{{}}}", parts.join(","))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub a: VariableId,
    pub b: VariableId,
    pub relation: Relation,
}

impl Constraint {
    pub fn swapped(self) -> Constraint {
        Constraint {
            a: self.b,
            b: self.a,
            relation: self.relation,
        }
    }

    pub fn other(&self, x: VariableId) -> Option<VariableId> {
        if self.a == x {
            Some(self.b)
        } else if self.b == x {
            Some(self.a)
        } else {
            None
        }
    }
}

pub type Assignment = BTreeMap<VariableId, Value>;

/// Checks one binary constraint against a pair of values.
pub fn is_satisfied(c: &Constraint, va: &Value, vb: &Value) -> Result<bool, CspError> {
    satisfies(c.relation, va, vb)
}

pub(crate) fn satisfies(relation: Relation, va: &Value, vb: &Value) -> Result<bool, CspError> {
    match (relation, va, vb) {
        (Relation::NotEquals, Value::Color(x), Value::Color(y)) => Ok(x != y),
        (Relation::NotIntersects, Value::Sensors(x), Value::Sensors(y)) => Ok(disjoint(x, y)),
        _ => Err(CspError::KindMismatch),
    }
}

/// Relation check for values already known to match the relation's kind.
pub(crate) fn compatible(relation: Relation, va: &Value, vb: &Value) -> bool {
    satisfies(relation, va, vb).unwrap_or(false)
}

fn disjoint(x: &[u32], y: &[u32]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return false,
        }
    }
    true
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CspInstance {
    kind: Kind,
    /// Color count for coloring instances; per-target sensor demand for
    /// sensor instances.
    k: u32,
    domains: Vec<Vec<Value>>,
    constraints: Vec<Constraint>,
    adjacency: Vec<Vec<VariableId>>,
    /// Visible sensors per target (sensor kind only).
    visible: Option<Vec<Vec<u32>>>,
}

impl CspInstance {
    /// Graph coloring instance with `k` colors over `n` variables.
    pub fn coloring(n: usize, k: u32, edges: &[(u32, u32)]) -> Result<CspInstance, CspError> {
        if k == 0 {
            return Err(CspError::InvalidInstance(
                "color count must be positive".into(),
            ));
        }
        let domain: Vec<Value> = (0..k).map(Value::Color).collect();
        let constraints = edges
            .iter()
            .map(|&(a, b)| Constraint {
                a: VariableId(a),
                b: VariableId(b),
                relation: Relation::NotEquals,
            })
            .collect();
        CspInstance::build(Kind::Coloring, k, vec![domain; n], constraints, None)
    }

    /// Sensor allocation instance. Each target's domain is every
    /// `min(|visible|, 3)`-subset of its visible sensors.
    pub fn sensor(visible: Vec<Vec<u32>>, edges: &[(u32, u32)]) -> Result<CspInstance, CspError> {
        let mut canon = Vec::with_capacity(visible.len());
        let mut domains = Vec::with_capacity(visible.len());
        for (i, v) in visible.into_iter().enumerate() {
            let mut v = v;
            v.sort_unstable();
            let before = v.len();
            v.dedup();
            if v.len() != before {
                return Err(CspError::InvalidInstance(format!(
                    "target {i} lists a sensor twice"
                )));
            }
            if v.is_empty() {
                return Err(CspError::InvalidInstance(format!(
                    "target {i} sees no sensor"
                )));
            }
            let c = v.len().min(SENSORS_PER_TARGET);
            domains.push(
                combinations(&v, c)
                    .into_iter()
                    .map(Value::Sensors)
                    .collect(),
            );
            canon.push(v);
        }
        let constraints = edges
            .iter()
            .map(|&(a, b)| Constraint {
                a: VariableId(a),
                b: VariableId(b),
                relation: Relation::NotIntersects,
            })
            .collect();
        CspInstance::build(
            Kind::Sensor,
            SENSORS_PER_TARGET as u32,
            domains,
            constraints,
            Some(canon),
        )
    }

    fn build(
        kind: Kind,
        k: u32,
        domains: Vec<Vec<Value>>,
        constraints: Vec<Constraint>,
        visible: Option<Vec<Vec<u32>>>,
    ) -> Result<CspInstance, CspError> {
        let n = domains.len();
        for (i, d) in domains.iter().enumerate() {
            if d.is_empty() {
                return Err(CspError::InvalidInstance(format!(
                    "variable {i} has an empty domain"
                )));
            }
            let uniq: BTreeSet<&Value> = d.iter().collect();
            if uniq.len() != d.len() {
                return Err(CspError::InvalidInstance(format!(
                    "variable {i} has duplicate domain values"
                )));
            }
        }
        let mut seen = BTreeSet::new();
        let mut adjacency = vec![Vec::new(); n];
        for c in &constraints {
            if c.a.index() >= n || c.b.index() >= n {
                return Err(CspError::UnknownVariable(if c.a.index() >= n {
                    c.a
                } else {
                    c.b
                }));
            }
            if c.a == c.b {
                return Err(CspError::InvalidInstance(format!("self-loop on {}", c.a)));
            }
            if c.relation != kind.relation() {
                return Err(CspError::KindMismatch);
            }
            let key = (c.a.min(c.b), c.a.max(c.b));
            if !seen.insert(key) {
                return Err(CspError::InvalidInstance(format!(
                    "duplicate constraint between {} and {}",
                    key.0, key.1
                )));
            }
            adjacency[c.a.index()].push(c.b);
            adjacency[c.b.index()].push(c.a);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        Ok(CspInstance {
            kind,
            k,
            domains,
            constraints,
            adjacency,
            visible,
        })
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn relation(&self) -> Relation {
        self.kind.relation()
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn num_variables(&self) -> usize {
        self.domains.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn variables(&self) -> impl Iterator<Item = VariableId> + '_ {
        (0..self.domains.len() as u32).map(VariableId)
    }

    pub fn contains(&self, x: VariableId) -> bool {
        x.index() < self.domains.len()
    }

    pub fn domain(&self, x: VariableId) -> &[Value] {
        &self.domains[x.index()]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn neighbors(&self, x: VariableId) -> &[VariableId] {
        &self.adjacency[x.index()]
    }

    pub fn are_neighbors(&self, a: VariableId, b: VariableId) -> bool {
        self.adjacency[a.index()].binary_search(&b).is_ok()
    }

    /// Visible-sensor sets, present for sensor instances.
    pub fn visible_sensors(&self) -> Option<&[Vec<u32>]> {
        self.visible.as_deref()
    }

    /// Number of values each target must be assigned (sensor kind), i.e.
    /// `min(|D_i|, 3)`.
    pub fn demand(&self, x: VariableId) -> usize {
        self.domains[x.index()][0].width()
    }

    pub fn domain_product(&self) -> u128 {
        self.domains
            .iter()
            .fold(1u128, |acc, d| acc.saturating_mul(d.len() as u128))
    }

    pub fn check_value(&self, x: VariableId, v: &Value) -> Result<(), CspError> {
        if !self.contains(x) {
            return Err(CspError::UnknownVariable(x));
        }
        if self.domains[x.index()].contains(v) {
            Ok(())
        } else {
            Err(CspError::ValueNotInDomain(x))
        }
    }

    /// Canonical line-oriented text form.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} {} {} {}\n",
            self.kind.as_str(),
            self.num_variables(),
            self.num_constraints(),
            self.k
        );
        for c in &self.constraints {
            out.push_str(&format!("{} {}\n", c.a.0, c.b.0));
        }
        if let Some(visible) = &self.visible {
            for v in visible {
                let parts: Vec<String> = v.iter().map(|s| s.to_string()).collect();
                out.push_str(&parts.join(" "));
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<CspInstance, CspError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(parse_err(1, "header must be `kind n m k`"));
        }
        let kind = match fields[0] {
            "coloring" => Kind::Coloring,
            "sensor" => Kind::Sensor,
            other => return Err(parse_err(1, &format!("unknown kind `{other}`"))),
        };
        let n: usize = parse_num(fields[1], 1)?;
        let m: usize = parse_num(fields[2], 1)?;
        let k: u32 = parse_num(fields[3], 1)?;
        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let (no, line) = lines
                .next()
                .ok_or_else(|| parse_err(0, "fewer constraint lines than declared"))?;
            let ab: Vec<&str> = line.split_whitespace().collect();
            if ab.len() != 2 {
                return Err(parse_err(no + 1, "constraint line must be `a b`"));
            }
            edges.push((parse_num(ab[0], no + 1)?, parse_num(ab[1], no + 1)?));
        }
        let inst = match kind {
            Kind::Coloring => CspInstance::coloring(n, k, &edges)?,
            Kind::Sensor => {
                if k as usize != SENSORS_PER_TARGET {
                    return Err(parse_err(1, "sensor instances require k = 3"));
                }
                let mut visible = Vec::with_capacity(n);
                for _ in 0..n {
                    let (no, line) = lines
                        .next()
                        .ok_or_else(|| parse_err(0, "fewer target lines than declared"))?;
                    let ids = line
                        .split_whitespace()
                        .map(|s| parse_num(s, no + 1))
                        .collect::<Result<Vec<u32>, _>>()?;
                    visible.push(ids);
                }
                CspInstance::sensor(visible, &edges)?
            }
        };
        if let Some((no, line)) = lines.next() {
            if !line.trim().is_empty() {
                return Err(parse_err(no + 1, "trailing content"));
            }
        }
        Ok(inst)
    }
}

fn parse_err(line: usize, msg: &str) -> CspError {
    CspError::Parse {
        line,
        msg: msg.to_string(),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T, CspError> {
    s.parse()
        .map_err(|_| parse_err(line, &format!("`{s}` is not a number")))
}

/// All `c`-subsets of a sorted slice, in lexicographic order.
pub(crate) fn combinations(items: &[u32], c: usize) -> Vec<Vec<u32>> {
    fn rec(items: &[u32], c: usize, start: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == c {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            if items.len() - i < c - cur.len() {
                break;
            }
            cur.push(items[i]);
            rec(items, c, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(items, c, 0, &mut Vec::with_capacity(c), &mut out);
    out
}

/// Neighbors of `x` present in `view` whose constraint with `x` is violated
/// when `x` takes `v`.
pub fn conflicts_of(
    instance: &CspInstance,
    x: VariableId,
    v: &Value,
    view: &Assignment,
) -> Result<BTreeSet<VariableId>, CspError> {
    if !instance.contains(x) {
        return Err(CspError::UnknownVariable(x));
    }
    let mut out = BTreeSet::new();
    for &y in instance.neighbors(x) {
        if let Some(vy) = view.get(&y) {
            if !satisfies(instance.relation(), v, vy)? {
                out.insert(y);
            }
        }
    }
    Ok(out)
}

pub fn verify_solution(instance: &CspInstance, a: &Assignment) -> Result<bool, CspError> {
    for x in instance.variables() {
        match a.get(&x) {
            None => return Err(CspError::PartialAssignment(x)),
            Some(v) => instance.check_value(x, v)?,
        }
    }
    for c in instance.constraints() {
        if !is_satisfied(c, &a[&c.a], &a[&c.b])? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Number of violated constraints under a complete assignment.
pub fn count_violations(instance: &CspInstance, a: &Assignment) -> usize {
    instance
        .constraints()
        .iter()
        .filter(|c| match (a.get(&c.a), a.get(&c.b)) {
            (Some(x), Some(y)) => !compatible(c.relation, x, y),
            _ => false,
        })
        .count()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Satisfiable(Assignment),
    Unsatisfiable,
}

impl Verdict {
    pub fn is_satisfiable(&self) -> bool {
        matches!(self, Verdict::Satisfiable(_))
    }
}

/// Exhaustive depth-first search over every variable in index order.
/// Refuses instances whose domain product exceeds `cap`.
pub fn brute_force(instance: &CspInstance, cap: u128) -> Result<Verdict, CspError> {
    let product = instance.domain_product();
    if product > cap {
        return Err(CspError::CapExceeded { product, cap });
    }
    let n = instance.num_variables();
    let mut chosen: Vec<usize> = vec![0; n];
    let rel = instance.relation();
    // depth-first with an explicit stack of domain cursors
    let mut depth = 0usize;
    if n == 0 {
        return Ok(Verdict::Satisfiable(Assignment::new()));
    }
    chosen[0] = 0;
    loop {
        let x = VariableId(depth as u32);
        let dom = instance.domain(x);
        if chosen[depth] >= dom.len() {
            if depth == 0 {
                return Ok(Verdict::Unsatisfiable);
            }
            depth -= 1;
            chosen[depth] += 1;
            continue;
        }
        let v = &dom[chosen[depth]];
        let ok = instance
            .neighbors(x)
            .iter()
            .filter(|y| y.index() < depth)
            .all(|&y| compatible(rel, v, &instance.domain(y)[chosen[y.index()]]));
        if !ok {
            chosen[depth] += 1;
            continue;
        }
        if depth + 1 == n {
            let a = instance
                .variables()
                .map(|y| (y, instance.domain(y)[chosen[y.index()]].clone()))
                .collect();
            return Ok(Verdict::Satisfiable(a));
        }
        depth += 1;
        chosen[depth] = 0;
    }
}
