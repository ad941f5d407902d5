//! Hybrid one-dimensional cellular automata over fuzzy states.
//!
//! Every cell carries its own elementary (radius-1, two-state) rule. On real
//! valued states in `[0, 1]` a rule acts through the multilinear extension of
//! its truth table, so Boolean states evolve exactly as in the classical
//! automaton while intermediate values interpolate between corners. The
//! lattice has a null boundary: the virtual cells beyond either end hold 0.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest cell count accepted by [`enumerate_basins`].
pub const MAX_CENSUS_CELLS: usize = 20;

/// An elementary rule number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Rule(u8);

impl Rule {
    pub const ZERO: Rule = Rule(0);
    pub const IDENTITY: Rule = Rule(204);
    pub const COMPLEMENT: Rule = Rule(51);

    pub fn new(number: u32) -> Result<Self> {
        u8::try_from(number).map(Rule).map_err(|_| Error::InvalidRule(number))
    }

    pub const fn from_u8(number: u8) -> Self {
        Rule(number)
    }

    pub fn number(self) -> u8 {
        self.0
    }

    /// The rule whose output is the negation of this one.
    pub fn complement(self) -> Rule {
        Rule(!self.0)
    }

    pub fn truth_table(self) -> TruthTable {
        let mut table = [false; 8];
        for (k, slot) in table.iter_mut().enumerate() {
            *slot = (self.0 >> k) & 1 == 1;
        }
        TruthTable(table)
    }

    #[inline]
    pub fn apply_bool(self, l: bool, c: bool, r: bool) -> bool {
        let idx = (usize::from(l) << 2) | (usize::from(c) << 1) | usize::from(r);
        (self.0 >> idx) & 1 == 1
    }

    /// Multilinear evaluation without range checks on the inputs.
    #[inline]
    pub fn apply_fuzzy(self, l: f64, c: f64, r: f64) -> f64 {
        let bit = |k: u8| f64::from((self.0 >> k) & 1);
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        // interpolate along r, then c, then l
        let c0l0 = lerp(bit(0), bit(1), r);
        let c1l0 = lerp(bit(2), bit(3), r);
        let c0l1 = lerp(bit(4), bit(5), r);
        let c1l1 = lerp(bit(6), bit(7), r);
        let l0 = lerp(c0l0, c1l0, c);
        let l1 = lerp(c0l1, c1l1, c);
        lerp(l0, l1, l).clamp(0.0, 1.0)
    }
}

impl TryFrom<u32> for Rule {
    type Error = Error;

    fn try_from(value: u32) -> Result<Self> {
        Rule::new(value)
    }
}

impl From<Rule> for u32 {
    fn from(rule: Rule) -> u32 {
        u32::from(rule.0)
    }
}

impl std::fmt::Display for Rule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Next-state bits indexed by the neighborhood code `4l + 2c + r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TruthTable(pub [bool; 8]);

impl TruthTable {
    pub fn get(&self, l: bool, c: bool, r: bool) -> bool {
        self.0[(usize::from(l) << 2) | (usize::from(c) << 1) | usize::from(r)]
    }
}

pub fn decode_rule(number: u32) -> Result<TruthTable> {
    Rule::new(number).map(Rule::truth_table)
}

/// Evaluates `rule` on a fuzzy neighborhood.
pub fn eval_rule_fuzzy(rule: Rule, l: f64, c: f64, r: f64) -> Result<f64> {
    for v in [l, c, r] {
        check_unit(v)?;
    }
    Ok(rule.apply_fuzzy(l, c, r))
}

fn check_unit(v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Domain(v))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Null,
}

/// One rule per cell.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RuleVector {
    rules: Vec<Rule>,
}

impl RuleVector {
    pub fn new(rules: Vec<Rule>) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::Config("a rule vector needs at least one cell".into()));
        }
        Ok(RuleVector { rules })
    }

    pub fn from_numbers(numbers: &[u32]) -> Result<Self> {
        let rules = numbers.iter().map(|&n| Rule::new(n)).collect::<Result<Vec<_>>>()?;
        RuleVector::new(rules)
    }

    pub fn uniform(rule: Rule, cells: usize) -> Result<Self> {
        RuleVector::new(vec![rule; cells])
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rules_mut(&mut self) -> &mut [Rule] {
        &mut self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn boundary(&self) -> Boundary {
        Boundary::Null
    }
}

impl std::fmt::Display for RuleVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, r) in self.rules.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Cell values, each within `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    cells: Vec<f64>,
}

impl StateVector {
    pub fn new(cells: Vec<f64>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Config("a state vector needs at least one cell".into()));
        }
        for &v in &cells {
            check_unit(v)?;
        }
        Ok(StateVector { cells })
    }

    /// Boolean configuration with cell `i` set from bit `i` of `bits`.
    pub fn from_bits(bits: u32, cells: usize) -> Self {
        StateVector {
            cells: (0..cells).map(|i| f64::from((bits >> i) & 1)).collect(),
        }
    }

    /// Inverse of [`StateVector::from_bits`]; `None` unless every cell is 0 or 1.
    pub fn to_bits(&self) -> Option<u32> {
        if self.cells.len() > 32 {
            return None;
        }
        let mut bits = 0u32;
        for (i, &v) in self.cells.iter().enumerate() {
            if v == 1.0 {
                bits |= 1 << i;
            } else if v != 0.0 {
                return None;
            }
        }
        Some(bits)
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn is_boolean(&self) -> bool {
        self.cells.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.cells
    }
}

fn step_into(cells: &[f64], rules: &[Rule], out: &mut [f64]) {
    let n = cells.len();
    for i in 0..n {
        let l = if i == 0 { 0.0 } else { cells[i - 1] };
        let r = if i + 1 == n { 0.0 } else { cells[i + 1] };
        out[i] = rules[i].apply_fuzzy(l, cells[i], r);
    }
}

/// One synchronous update of every cell.
pub fn step(state: &StateVector, rv: &RuleVector) -> Result<StateVector> {
    if state.len() != rv.len() {
        return Err(Error::Shape {
            expected: rv.len(),
            found: state.len(),
        });
    }
    let mut out = vec![0.0; state.len()];
    step_into(&state.cells, &rv.rules, &mut out);
    Ok(StateVector { cells: out })
}

/// A state rounded onto `2^q` levels per cell; orders lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttractorSignature {
    levels: Vec<u16>,
    q: u8,
}

impl AttractorSignature {
    pub fn new(levels: Vec<u16>, q: u8) -> Result<Self> {
        check_depth(q)?;
        let max = max_level(q);
        if let Some(&bad) = levels.iter().find(|&&l| u32::from(l) > max) {
            return Err(Error::Config(format!(
                "signature level {bad} exceeds {max} for bit depth {q}"
            )));
        }
        Ok(AttractorSignature { levels, q })
    }

    pub fn levels(&self) -> &[u16] {
        &self.levels
    }

    pub fn depth(&self) -> u8 {
        self.q
    }

    pub fn l1_distance(&self, other: &AttractorSignature) -> u64 {
        self.levels
            .iter()
            .zip(&other.levels)
            .map(|(&a, &b)| u64::from(a.abs_diff(b)))
            .sum()
    }
}

fn check_depth(q: u8) -> Result<()> {
    if (1..=16).contains(&q) {
        Ok(())
    } else {
        Err(Error::Config(format!("quantization depth {q} outside 1..=16")))
    }
}

fn max_level(q: u8) -> u32 {
    (1u32 << q) - 1
}

fn quantize_cells(cells: &[f64], q: u8) -> AttractorSignature {
    let scale = f64::from(max_level(q));
    // f64::round rounds half away from zero
    let levels = cells.iter().map(|&v| (v * scale).round() as u16).collect();
    AttractorSignature { levels, q }
}

pub fn quantize(state: &StateVector, q: u8) -> Result<AttractorSignature> {
    check_depth(q)?;
    Ok(quantize_cells(&state.cells, q))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub max_steps: usize,
    pub q: u8,
    pub epsilon: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            max_steps: 64,
            q: 8,
            epsilon: 1e-6,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        check_depth(self.q)?;
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be at least 1".into()));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "epsilon {} must be finite and non-negative",
                self.epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttractorResult {
    pub signature: AttractorSignature,
    pub steps_to_attractor: usize,
    /// 0 when `converged` is false.
    pub cycle_length: usize,
    pub converged: bool,
}

/// Runs the automaton from `start` until its quantized trajectory repeats.
///
/// The trajectory stops early as a fixed point when two successive raw
/// states differ by less than `cfg.epsilon` in every cell. Otherwise the
/// first repeated signature closes a cycle, which is identified by its
/// lexicographically smallest member.
pub fn find_attractor(start: &StateVector, rv: &RuleVector, cfg: &EngineConfig) -> Result<AttractorResult> {
    cfg.validate()?;
    if start.len() != rv.len() {
        return Err(Error::Shape {
            expected: rv.len(),
            found: start.len(),
        });
    }
    let n = start.len();
    let mut current = start.cells.clone();
    let mut next = vec![0.0; n];
    let mut history = vec![quantize_cells(&current, cfg.q)];
    let mut seen: HashMap<AttractorSignature, usize> = HashMap::new();
    seen.insert(history[0].clone(), 0);

    for t in 1..=cfg.max_steps {
        step_into(&current, &rv.rules, &mut next);
        let delta = current
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut current, &mut next);
        if delta < cfg.epsilon {
            return Ok(AttractorResult {
                signature: quantize_cells(&current, cfg.q),
                steps_to_attractor: t - 1,
                cycle_length: 1,
                converged: true,
            });
        }
        let sig = quantize_cells(&current, cfg.q);
        if let Some(&first) = seen.get(&sig) {
            let signature = history[first..]
                .iter()
                .min()
                .cloned()
                .expect("cycle contains at least one state");
            return Ok(AttractorResult {
                signature,
                steps_to_attractor: first,
                cycle_length: t - first,
                converged: true,
            });
        }
        seen.insert(sig.clone(), t);
        history.push(sig);
    }

    Ok(AttractorResult {
        signature: quantize_cells(&current, cfg.q),
        steps_to_attractor: cfg.max_steps,
        cycle_length: 0,
        converged: false,
    })
}

/// Exhaustive decomposition of the Boolean state-transition graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasinCensus {
    pub cells: usize,
    /// Basin id of every state, indexed by its bit encoding.
    pub basin_of: Vec<u32>,
    /// Cycle of each basin, starting from its smallest state and following
    /// the transition order.
    pub attractor_cycles: Vec<Vec<u32>>,
}

impl BasinCensus {
    pub fn basin_count(&self) -> usize {
        self.attractor_cycles.len()
    }

    pub fn basin_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.basin_count()];
        for &b in &self.basin_of {
            sizes[b as usize] += 1;
        }
        sizes
    }
}

/// Successor of a Boolean configuration encoded as bits.
pub fn boolean_successor(rules: &[Rule], bits: u32) -> u32 {
    let n = rules.len();
    let mut out = 0u32;
    for (i, rule) in rules.iter().enumerate() {
        let l = i > 0 && (bits >> (i - 1)) & 1 == 1;
        let c = (bits >> i) & 1 == 1;
        let r = i + 1 < n && (bits >> (i + 1)) & 1 == 1;
        if rule.apply_bool(l, c, r) {
            out |= 1 << i;
        }
    }
    out
}

pub fn enumerate_basins(rv: &RuleVector, cells: usize) -> Result<BasinCensus> {
    if cells > MAX_CENSUS_CELLS {
        return Err(Error::ResourceLimit {
            cells,
            limit: MAX_CENSUS_CELLS,
        });
    }
    if rv.len() != cells {
        return Err(Error::Shape {
            expected: cells,
            found: rv.len(),
        });
    }
    let total = 1usize << cells;
    let next: Vec<u32> = (0..total as u32).map(|s| boolean_successor(&rv.rules, s)).collect();

    const UNSEEN: u32 = u32::MAX;
    let mut basin_of = vec![UNSEEN; total];
    // walk id that last visited each state, so the current path is recognizable
    let mut visited_by = vec![UNSEEN; total];
    let mut cycles: Vec<Vec<u32>> = Vec::new();
    let mut path = Vec::new();

    for origin in 0..total as u32 {
        if basin_of[origin as usize] != UNSEEN {
            continue;
        }
        path.clear();
        let mut s = origin;
        let basin = loop {
            let idx = s as usize;
            if basin_of[idx] != UNSEEN {
                break basin_of[idx];
            }
            if visited_by[idx] == origin {
                let pos = path.iter().position(|&p| p == s).expect("state is on the path");
                let mut cycle: Vec<u32> = path[pos..].to_vec();
                let min_at = cycle
                    .iter()
                    .enumerate()
                    .min_by_key(|&(_, &v)| v)
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                cycle.rotate_left(min_at);
                cycles.push(cycle);
                break (cycles.len() - 1) as u32;
            }
            visited_by[idx] = origin;
            path.push(s);
            s = next[idx];
        };
        for &p in &path {
            basin_of[p as usize] = basin;
        }
    }

    Ok(BasinCensus {
        cells,
        basin_of,
        attractor_cycles: cycles,
    })
}
