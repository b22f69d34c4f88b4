//! Genetic search over symbol-to-variable assignments.
//!
//! Two operator suites share one generational loop. The testing suite
//! (`Mode::Cbt`) ignores validity and lets the simulator sort things out.
//! The construction suite (`Mode::Cbc`) only ever emits admissible
//! chromosomes.

mod ops;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::check::{classify_variables, validate_assignment, ValidationReport, VariablePartition};
use crate::container::{Trace, VariableTable};
use crate::expr::SlotId;
use crate::model::apply_assignment;
use crate::sim::{causalize, fitness, isolate_with_divisors, Fitness};
use crate::translate::{EquationModel, SlotType};

pub use ops::{crossover, generate_individual, mutate, pmx_repair};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Chromosome {
    pub genes: Vec<usize>,
}

impl Chromosome {
    pub fn new(genes: Vec<usize>) -> Self {
        Chromosome { genes }
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.genes.iter().all(|g| seen.insert(*g))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Cbt,
    Cbc,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Cbt => "cbt",
            Mode::Cbc => "cbc",
        })
    }
}

impl FromStr for Mode {
    type Err = GaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cbt" => Ok(Mode::Cbt),
            "cbc" => Ok(Mode::Cbc),
            _ => Err(GaError::InvalidConfig(format!("unknown mode `{s}`"))),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaError {
    #[error("no chromosome satisfying the constraints was found within budget:\n{0}")]
    ConstraintsUnsatisfiable(ValidationReport),
    #[error("the problem has no input or reference trace")]
    NoReferenceTrace,
    #[error("parents have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("{slots} slots cannot be filled injectively from {variables} variables")]
    SlotsExceedVariables { slots: usize, variables: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub max_generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub tournament_size: usize,
    pub elitism: usize,
    pub rng_seed: u64,
    pub retry_budget: usize,
    pub backtrack_budget: usize,
    /// Stop once a generation's best MSE falls below this threshold.
    pub early_stop: Option<f64>,
    /// Repair duplicate genes after CbT crossover.
    pub cbt_repair: bool,
    /// Worker threads for fitness evaluation; `None` uses the global pool.
    pub threads: Option<usize>,
}

pub const EARLY_STOP_MSE: f64 = 1e-12;

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 400,
            max_generations: 10,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            tournament_size: 2,
            elitism: 2,
            rng_seed: 0,
            retry_budget: 100,
            backtrack_budget: 1000,
            early_stop: Some(EARLY_STOP_MSE),
            cbt_repair: false,
            threads: None,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), GaError> {
        let bad = |m: &str| Err(GaError::InvalidConfig(m.to_string()));
        if self.elitism == 0 || self.elitism >= self.population_size {
            return bad("elitism must satisfy 0 < elitism < population size");
        }
        for (name, p) in [
            ("crossover rate", self.crossover_rate),
            ("mutation rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(GaError::InvalidConfig(format!(
                    "{name} {p} is outside [0, 1]"
                )));
            }
        }
        if self.tournament_size == 0 {
            return bad("tournament size must be positive");
        }
        if self.max_generations == 0 {
            return bad("at least one generation is required");
        }
        if self.threads == Some(0) {
            return bad("thread count must be positive");
        }
        Ok(())
    }

    /// Reads `CONSTRUCT_THREADS` into `threads`.
    pub fn with_env_threads(mut self) -> Result<Self, GaError> {
        if let Ok(v) = std::env::var("CONSTRUCT_THREADS") {
            let n = v.trim().parse::<usize>().map_err(|_| {
                GaError::InvalidConfig(format!("CONSTRUCT_THREADS={v} is not a count"))
            })?;
            self.threads = Some(n);
        }
        Ok(self)
    }
}

/// Number of injective assignments of `num_slots` slots to
/// `num_variables` variables.
pub fn search_space_size(num_slots: u64, num_variables: u64) -> Result<BigUint, GaError> {
    if num_slots > num_variables {
        return Err(GaError::SlotsExceedVariables {
            slots: num_slots as usize,
            variables: num_variables as usize,
        });
    }
    Ok(((num_variables - num_slots + 1)..=num_variables)
        .fold(BigUint::from(1u32), |acc, k| acc * k))
}

/// A synthesis instance plus the derived tables the operators consult.
#[derive(Clone, Debug)]
pub struct Problem {
    pub model: EquationModel,
    pub variables: VariableTable,
    pub inputs: Option<Trace>,
    pub reference: Option<Trace>,
    partition: VariablePartition,
    /// `compat[slot][var]`: the variable's type fits the slot's inferred type.
    compat: Vec<Vec<bool>>,
    /// Per equation, the slots it can be solved for, each with the slots
    /// appearing in divisors the solution introduces.
    solvable: Vec<Vec<(SlotId, Vec<SlotId>)>>,
    /// Per equation, the distinct slots it references.
    eq_slots: Vec<Vec<SlotId>>,
    state_slots: Vec<SlotId>,
}

impl Problem {
    /// `model` should already carry inferred slot types.
    pub fn new(
        model: EquationModel,
        variables: VariableTable,
        inputs: Option<Trace>,
        reference: Option<Trace>,
    ) -> Self {
        let partition = classify_variables(&variables);
        let compat = model
            .slots
            .iter()
            .map(|s| {
                variables
                    .iter()
                    .map(|v| s.inferred_type.accepts(v.vtype))
                    .collect()
            })
            .collect();
        let eq_slots: Vec<Vec<SlotId>> = (0..model.equations.len())
            .map(|i| model.equation_slots(i))
            .collect();
        let solvable = model
            .equations
            .iter()
            .zip(&eq_slots)
            .map(|(eq, slots)| {
                if eq.state().is_some() {
                    return Vec::new();
                }
                slots
                    .iter()
                    .filter_map(|s| {
                        let (_, divisors) = isolate_with_divisors(eq, s).ok()?;
                        let mut in_divisors = Vec::new();
                        for d in &divisors {
                            d.for_each_var(&mut |v, _| {
                                if !in_divisors.contains(v) {
                                    in_divisors.push(*v);
                                }
                            });
                        }
                        Some((*s, in_divisors))
                    })
                    .collect()
            })
            .collect();
        let state_slots = model
            .equations
            .iter()
            .filter_map(|eq| eq.state().copied())
            .collect();
        Problem {
            model,
            variables,
            inputs,
            reference,
            partition,
            compat,
            solvable,
            eq_slots,
            state_slots,
        }
    }

    pub fn num_slots(&self) -> usize {
        self.model.slots.len()
    }

    pub fn partition(&self) -> &VariablePartition {
        &self.partition
    }

    pub fn slot_type(&self, s: SlotId) -> SlotType {
        self.model.slots[s].inferred_type
    }

    pub fn compatible(&self, slot: SlotId, var: usize) -> bool {
        self.compat[slot][var]
    }

    pub fn validate(&self, c: &Chromosome) -> ValidationReport {
        validate_assignment(&self.model, &self.variables, c)
    }

    /// The CbC acceptance test: C0..C4 hold, and the bound model
    /// causalizes without dividing by anything but nonzero parameter
    /// expressions.
    pub fn is_admissible(&self, c: &Chromosome) -> bool {
        self.validate(c).valid
            && apply_assignment(&self.model, c, &self.variables)
                .ok()
                .is_some_and(|b| causalize(&b).is_ok_and(|plan| plan.division_safe))
    }

    pub fn evaluate(&self, c: &Chromosome) -> Fitness {
        let (Some(inputs), Some(reference)) = (&self.inputs, &self.reference) else {
            return Fitness::Invalid;
        };
        match apply_assignment(&self.model, c, &self.variables) {
            Ok(b) => fitness(&b, inputs, reference),
            Err(_) => Fitness::Invalid,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GenerationStats {
    #[serde(rename = "gen")]
    pub generation: usize,
    pub best_mse: Option<f64>,
    pub mean_finite_mse: Option<f64>,
    pub simulatable_fraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaResult {
    pub mode: Mode,
    pub population: usize,
    pub generations: usize,
    pub seed: u64,
    pub best: (Chromosome, Fitness),
    pub per_generation: Vec<GenerationStats>,
    /// Distinct chromosomes simulated.
    pub evaluations: usize,
}

#[derive(Serialize)]
struct Report<'a> {
    mode: Mode,
    population: usize,
    generations: usize,
    seed: u64,
    per_generation: &'a [GenerationStats],
    best_genes: &'a [usize],
    best_mse: Option<f64>,
    evaluations: usize,
}

impl GaResult {
    pub fn report_json(&self) -> String {
        let r = Report {
            mode: self.mode,
            population: self.population,
            generations: self.generations,
            seed: self.seed,
            per_generation: &self.per_generation,
            best_genes: &self.best.0.genes,
            best_mse: self.best.1.mse(),
            evaluations: self.evaluations,
        };
        let mut s = serde_json::to_string_pretty(&r).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Where a chromosome handed to an observer came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    Init,
    Crossover,
    Mutation,
}

pub fn run_ga(mode: Mode, problem: &Problem, cfg: &GaConfig) -> Result<GaResult, GaError> {
    run_ga_observed(mode, problem, cfg, &mut |_, _| {})
}

fn tournament(rng: &mut ChaCha8Rng, scores: &[Fitness], size: usize) -> usize {
    (0..size)
        .map(|_| rng.gen_range(0..scores.len()))
        .min_by_key(|&i| (scores[i], i))
        .expect("tournament size is positive")
}

pub fn run_ga_observed(
    mode: Mode,
    problem: &Problem,
    cfg: &GaConfig,
    observe: &mut dyn FnMut(Origin, &Chromosome),
) -> Result<GaResult, GaError> {
    cfg.validate()?;
    if problem.inputs.is_none() || problem.reference.is_none() {
        return Err(GaError::NoReferenceTrace);
    }
    let pool = match cfg.threads {
        Some(n) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| GaError::InvalidConfig(e.to_string()))?,
        ),
        None => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut population = Vec::with_capacity(cfg.population_size);
    for _ in 0..cfg.population_size {
        let c = generate_individual(mode, problem, cfg, &mut rng)?;
        observe(Origin::Init, &c);
        population.push(c);
    }

    let mut cache: HashMap<Vec<usize>, Fitness> = HashMap::new();
    let mut best: Option<(Chromosome, Fitness)> = None;
    let mut per_generation = Vec::new();
    for generation in 0..cfg.max_generations {
        let mut pending: Vec<&Chromosome> = Vec::new();
        {
            let mut queued = std::collections::HashSet::new();
            for c in &population {
                if !cache.contains_key(&c.genes) && queued.insert(&c.genes) {
                    pending.push(c);
                }
            }
        }
        let eval = || {
            pending
                .par_iter()
                .map(|c| problem.evaluate(c))
                .collect::<Vec<_>>()
        };
        let results = match &pool {
            Some(p) => p.install(eval),
            None => eval(),
        };
        for (c, f) in pending.iter().zip(results) {
            cache.insert(c.genes.clone(), f);
        }
        let scores: Vec<Fitness> = population.iter().map(|c| cache[&c.genes]).collect();

        let mut ranked: Vec<usize> = (0..population.len()).collect();
        ranked.sort_by_key(|&i| (scores[i], i));
        let gen_best = scores[ranked[0]];
        if best.as_ref().is_none_or(|(_, f)| gen_best < *f) {
            best = Some((population[ranked[0]].clone(), gen_best));
        }
        let finite: Vec<f64> = scores.iter().filter_map(|f| f.mse()).collect();
        per_generation.push(GenerationStats {
            generation,
            best_mse: gen_best.mse(),
            mean_finite_mse: (!finite.is_empty())
                .then(|| finite.iter().sum::<f64>() / finite.len() as f64),
            simulatable_fraction: finite.len() as f64 / population.len() as f64,
        });

        let done = cfg
            .early_stop
            .is_some_and(|eps| gen_best.mse().is_some_and(|m| m < eps));
        if done || generation + 1 == cfg.max_generations {
            break;
        }

        let mut next: Vec<Chromosome> = ranked[..cfg.elitism]
            .iter()
            .map(|&i| population[i].clone())
            .collect();
        while next.len() < cfg.population_size {
            let a = &population[tournament(&mut rng, &scores, cfg.tournament_size)];
            let b = &population[tournament(&mut rng, &scores, cfg.tournament_size)];
            let (mut c1, mut c2) = if rng.gen::<f64>() < cfg.crossover_rate {
                let (c1, c2) = crossover(mode, a, b, problem, cfg, &mut rng)?;
                observe(Origin::Crossover, &c1);
                observe(Origin::Crossover, &c2);
                (c1, c2)
            } else {
                (a.clone(), b.clone())
            };
            for c in [&mut c1, &mut c2] {
                if rng.gen::<f64>() < cfg.mutation_rate {
                    *c = mutate(mode, c, problem, cfg, &mut rng);
                    observe(Origin::Mutation, c);
                }
            }
            next.push(c1);
            if next.len() < cfg.population_size {
                next.push(c2);
            }
        }
        population = next;
    }

    Ok(GaResult {
        mode,
        population: cfg.population_size,
        generations: cfg.max_generations,
        seed: cfg.rng_seed,
        best: best.expect("at least one generation ran"),
        per_generation,
        evaluations: cache.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn search_space() {
        assert_eq!(
            search_space_size(12, 12).unwrap(),
            BigUint::from(479_001_600u64)
        );
        assert_eq!(search_space_size(1, 5).unwrap(), BigUint::from(5u32));
        assert_eq!(
            search_space_size(12, 13).unwrap(),
            BigUint::from(6_227_020_800u64)
        );
        assert!(matches!(
            search_space_size(3, 2),
            Err(GaError::SlotsExceedVariables { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let ok = GaConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            GaConfig {
                elitism: 0,
                ..ok.clone()
            },
            GaConfig {
                elitism: 400,
                ..ok.clone()
            },
            GaConfig {
                crossover_rate: 1.5,
                ..ok.clone()
            },
            GaConfig {
                mutation_rate: -0.1,
                ..ok.clone()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("cbc".parse::<Mode>().unwrap(), Mode::Cbc);
        assert!("CBC".parse::<Mode>().is_err());
    }
}
