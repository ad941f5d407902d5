//! Clonal-selection search over rule vectors.
//!
//! Each generation the population is ranked by affinity (penalized training
//! accuracy). The `n_sel` best antibodies are cloned in inverse proportion
//! to their rank, the clones are hypermutated at a rate that falls with
//! affinity, and the best `N - d` of parents and clones survive next to `d`
//! random newcomers.

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ca::{Rule, RuleVector};
use crate::classifier::{build_classifier, fitness, EncodedDataset, TrainedClassifier, TrainingSetup};
use crate::error::{Error, Result};
use crate::rng::{stream, StreamRng};

// stream tags for derived generators
const TAG_INIT: u64 = 1;
const TAG_CLONE: u64 = 2;
const TAG_NEWCOMER: u64 = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct Antibody {
    pub rv: RuleVector,
    pub affinity: Option<f64>,
}

impl Antibody {
    pub fn new(rv: RuleVector) -> Self {
        Antibody { rv, affinity: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub population: usize,
    pub selection: usize,
    pub clone_factor: f64,
    /// Steepness of the affinity-inverse mutation rate.
    pub mutation_decay: f64,
    pub newcomers: usize,
    pub generations: usize,
    pub stagnation: usize,
    pub target_fitness: f64,
    pub rule_set: Vec<Rule>,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig::with_population(40)
    }
}

impl EvolutionConfig {
    /// Defaults for a population of `population` antibodies.
    pub fn with_population(population: usize) -> Self {
        EvolutionConfig {
            population,
            selection: 10.min(population),
            clone_factor: 1.0,
            mutation_decay: 3.0,
            newcomers: population.div_ceil(10),
            generations: 100,
            stagnation: 20,
            target_fitness: 0.99,
            rule_set: (0..=255).map(Rule::from_u8).collect(),
            seed: 7,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.rule_set.is_empty() {
            return fail("rule set is empty".into());
        }
        if self.population == 0 {
            return fail("population must be at least 1".into());
        }
        if self.selection < 1 || self.selection > self.population {
            return fail(format!(
                "selection size {} must lie in 1..={}",
                self.selection, self.population
            ));
        }
        if self.newcomers >= self.population {
            return fail(format!(
                "newcomer count {} must be below the population {}",
                self.newcomers, self.population
            ));
        }
        if !(self.clone_factor > 0.0 && self.clone_factor.is_finite()) {
            return fail(format!("clone factor {} must be positive", self.clone_factor));
        }
        if !(self.mutation_decay >= 0.0 && self.mutation_decay.is_finite()) {
            return fail(format!("mutation decay {} must be non-negative", self.mutation_decay));
        }
        if self.generations == 0 {
            return fail("at least one generation is required".into());
        }
        Ok(())
    }

    fn sorted_rule_set(&self) -> Vec<Rule> {
        let mut set = self.rule_set.clone();
        set.sort();
        set.dedup();
        set
    }
}

fn random_rv(cells: usize, rules: &[Rule], rng: &mut StreamRng) -> RuleVector {
    let genes = (0..cells)
        .map(|_| *rules.choose(rng).expect("non-empty rule set"))
        .collect();
    RuleVector::new(genes).expect("cells >= 1")
}

pub fn init_population(cells: usize, cfg: &EvolutionConfig) -> Result<Vec<Antibody>> {
    cfg.validate()?;
    if cells == 0 {
        return Err(Error::Config("antibodies need at least one cell".into()));
    }
    let rules = cfg.sorted_rule_set();
    Ok((0..cfg.population)
        .map(|i| {
            let mut rng = stream(cfg.seed, &[TAG_INIT, i as u64]);
            Antibody::new(random_rv(cells, &rules, &mut rng))
        })
        .collect())
}

/// Clones per rank: `max(1, round(β·N / rank))` for ranks `1..=n_sel`.
pub fn clone_counts(cfg: &EvolutionConfig) -> Vec<usize> {
    (1..=cfg.selection)
        .map(|rank| {
            let n = (cfg.clone_factor * cfg.population as f64 / rank as f64).round();
            (n as usize).max(1)
        })
        .collect()
}

/// Per-gene mutation probability `exp(-ρ·affinity)`.
pub fn mutation_rate(cfg: &EvolutionConfig, affinity: f64) -> f64 {
    (-cfg.mutation_decay * affinity).exp()
}

pub fn hypermutate(a: &Antibody, cfg: &EvolutionConfig, rng: &mut StreamRng) -> Antibody {
    let rules = cfg.sorted_rule_set();
    let mut rv = a.rv.clone();
    if rules.len() > 1 {
        let alpha = mutation_rate(cfg, a.affinity.unwrap_or(0.0));
        for gene in rv.rules_mut() {
            if rng.random_bool(alpha.clamp(0.0, 1.0)) {
                // uniform over the rule set minus the current allele
                let current = rules.binary_search(gene).ok();
                let mut k = rng.random_range(0..rules.len() - usize::from(current.is_some()));
                if let Some(c) = current {
                    if k >= c {
                        k += 1;
                    }
                }
                *gene = rules[k];
            }
        }
    }
    Antibody::new(rv)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Best affinity after this generation's replacement step.
    pub best: f64,
    /// Mean affinity of the population that entered the generation.
    pub mean: f64,
    /// Attractor count of the best antibody.
    pub attractors: usize,
    pub evaluations: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvolutionTrace {
    pub generations: Vec<GenerationRecord>,
}

impl EvolutionTrace {
    pub fn is_elitist(&self) -> bool {
        self.generations.windows(2).all(|w| w[1].best >= w[0].best)
    }

    pub fn best(&self) -> Option<f64> {
        self.generations.last().map(|g| g.best)
    }

    /// Tab-separated generation log with a header line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("generation\tbest\tmean\tattractors\tevaluations\n");
        for g in &self.generations {
            out.push_str(&format!(
                "{}\t{:.6}\t{:.6}\t{}\t{}\n",
                g.generation, g.best, g.mean, g.attractors, g.evaluations
            ));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionOutcome {
    pub best: TrainedClassifier,
    pub best_affinity: f64,
    pub trace: EvolutionTrace,
}

struct Scored {
    antibody: Antibody,
    affinity: f64,
    attractors: usize,
}

fn evaluate(batch: Vec<Antibody>, data: &EncodedDataset, setup: &TrainingSetup) -> Result<Vec<Scored>> {
    batch
        .into_par_iter()
        .map(|mut antibody| {
            let report = fitness(&antibody.rv, data, &setup.engine)?;
            antibody.affinity = Some(report.score);
            Ok(Scored {
                antibody,
                affinity: report.score,
                attractors: report.map.len(),
            })
        })
        .collect()
}

fn rank(scored: &mut [Scored]) {
    // stable: earlier entries win ties
    scored.sort_by(|a, b| b.affinity.total_cmp(&a.affinity));
}

/// Runs the clonal-selection loop and packages the best rule vector found.
pub fn evolve(data: &EncodedDataset, setup: &TrainingSetup, cfg: &EvolutionConfig) -> Result<EvolutionOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Argument("cannot evolve on an empty dataset".into()));
    }
    let cells = setup.feature_config.state_len(setup.window_len);
    if data.cells() != cells {
        return Err(Error::Shape {
            expected: cells,
            found: data.cells(),
        });
    }
    let rules = cfg.sorted_rule_set();
    let counts = clone_counts(cfg);
    let mut population = init_population(cells, cfg)?;
    let mut trace = EvolutionTrace::default();
    let mut best: Option<(Antibody, f64)> = None;
    let mut stagnant = 0;

    for generation in 0..cfg.generations {
        let mut parents = evaluate(population, data, setup)?;
        let mean = parents.iter().map(|s| s.affinity).sum::<f64>() / parents.len() as f64;
        rank(&mut parents);

        let mut clones = Vec::new();
        for (parent, &n) in parents.iter().zip(&counts) {
            for _ in 0..n {
                let mut rng = stream(cfg.seed, &[TAG_CLONE, generation as u64, clones.len() as u64]);
                clones.push(hypermutate(&parent.antibody, cfg, &mut rng));
            }
        }
        let clone_total = clones.len();
        let mut pool = parents;
        pool.extend(evaluate(clones, data, setup)?);
        rank(&mut pool);

        let leader = &pool[0];
        let improved = best.as_ref().is_none_or(|(_, a)| leader.affinity > *a);
        if improved {
            best = Some((leader.antibody.clone(), leader.affinity));
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        let best_affinity = best.as_ref().map(|(_, a)| *a).unwrap_or(0.0);
        trace.generations.push(GenerationRecord {
            generation,
            best: best_affinity,
            mean,
            attractors: leader.attractors,
            evaluations: cfg.population + clone_total,
        });

        pool.truncate(cfg.population - cfg.newcomers);
        population = pool.into_iter().map(|s| s.antibody).collect();
        for j in 0..cfg.newcomers {
            let mut rng = stream(cfg.seed, &[TAG_NEWCOMER, generation as u64, j as u64]);
            population.push(Antibody::new(random_rv(cells, &rules, &mut rng)));
        }

        if best_affinity >= cfg.target_fitness || (cfg.stagnation > 0 && stagnant >= cfg.stagnation) {
            break;
        }
    }

    let (antibody, best_affinity) = best.expect("at least one generation ran");
    let (clf, _) = build_classifier(antibody.rv, data, setup)?;
    Ok(EvolutionOutcome {
        best: clf,
        best_affinity,
        trace,
    })
}
