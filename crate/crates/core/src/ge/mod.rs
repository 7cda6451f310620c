//! Grammatical evolution over the DMM design space.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::dmm_space::{kingsley_config, HwParams};
use crate::grammar::Grammar;
use crate::simulator::{fitness, simulate, FitnessWeights, Normalizers, WeightsError};
use crate::trace::Trace;

mod decode;
mod engine;
mod ops;

pub use decode::{decode, derivation_steps, derive_text, Derivation, InvalidReason, Phenotype, Step};
pub use engine::{best_index, run_sequential, step, GeRun, GeState, GenerationLog};
pub use ops::{crossover, crossover_at, mutate};

/// Fitness of invalid individuals and exhausted simulations; sorts after
/// every finite fitness.
pub const WORST_FITNESS: f64 = f64::INFINITY;

/// A variable-length string of 8-bit codons.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Genotype(Vec<u8>);

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("a genotype needs at least one codon")]
pub struct EmptyGenotype;

impl Genotype {
    pub fn new(codons: Vec<u8>) -> Result<Self, EmptyGenotype> {
        if codons.is_empty() {
            Err(EmptyGenotype)
        } else {
            Ok(Self(codons))
        }
    }

    pub fn codons(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; kept for the `len`/`is_empty` pairing.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub genotype: Genotype,
    /// `None` until decoded.
    pub phenotype: Option<Phenotype>,
    /// `None` until evaluated.
    pub fitness: Option<f64>,
    /// ADM count of the phenotype, 0 when invalid or not decoded.
    pub sim_estimate: usize,
}

impl Individual {
    pub fn new(genotype: Genotype) -> Self {
        Self { genotype, phenotype: None, fitness: None, sim_estimate: 0 }
    }

    /// Fitness for ranking; unevaluated counts as worst.
    pub fn score(&self) -> f64 {
        self.fitness.unwrap_or(WORST_FITNESS)
    }

    /// Decoded and valid but not yet simulated.
    pub fn needs_simulation(&self) -> bool {
        self.fitness.is_none() && matches!(self.phenotype, Some(Phenotype::Valid(_)))
    }
}

/// Parameters of the generational loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeParams {
    pub population_size: usize,
    pub generations: usize,
    pub p_crossover: f64,
    pub p_mutation: f64,
    pub max_wraps: usize,
    pub tournament_size: usize,
    pub elitism_count: usize,
    pub rng_seed: u64,
    /// Initial genome lengths are uniform in `init_len_min..=init_len_max`.
    pub init_len_min: usize,
    pub init_len_max: usize,
}

impl Default for GeParams {
    fn default() -> Self {
        Self {
            population_size: 60,
            generations: 100,
            p_crossover: 0.80,
            p_mutation: 0.02,
            max_wraps: 3,
            tournament_size: 3,
            elitism_count: 1,
            rng_seed: 0,
            init_len_min: 20,
            init_len_max: 60,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParamsError {
    #[error("population size must be even and positive")]
    Population,
    #[error("probabilities must lie in [0, 1]")]
    Probability,
    #[error("tournament size must be at least 1")]
    Tournament,
    #[error("elitism count exceeds the population")]
    Elitism,
    #[error("initial genome length range is empty or starts at 0")]
    InitLength,
}

impl GeParams {
    pub fn validate(&self) -> Result<(), ParamsError> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if self.population_size == 0 || !self.population_size.is_multiple_of(2) {
            return Err(ParamsError::Population);
        }
        if !prob(self.p_crossover) || !prob(self.p_mutation) {
            return Err(ParamsError::Probability);
        }
        if self.tournament_size == 0 {
            return Err(ParamsError::Tournament);
        }
        if self.elitism_count > self.population_size {
            return Err(ParamsError::Elitism);
        }
        if self.init_len_min == 0 || self.init_len_min > self.init_len_max {
            return Err(ParamsError::InitLength);
        }
        Ok(())
    }
}

/// Everything a fitness evaluation reads. Immutable and cheap to share.
#[derive(Clone, Debug)]
pub struct Evaluator {
    pub grammar: Arc<Grammar>,
    pub trace: Arc<Trace>,
    pub hw: HwParams,
    pub weights: FitnessWeights,
    pub max_wraps: usize,
}

impl Evaluator {
    /// Weights `w` (time, memory, energy) normalized by Kingsley on the same
    /// trace.
    pub fn new(
        grammar: Arc<Grammar>,
        trace: Arc<Trace>,
        hw: HwParams,
        w: [f64; 3],
        max_wraps: usize,
    ) -> Result<Self, WeightsError> {
        let weights = kingsley_weights(&trace, &hw, w)?;
        Ok(Self { grammar, trace, hw, weights, max_wraps })
    }

    /// Decodes if needed and sets the load estimate; invalid individuals get
    /// [`WORST_FITNESS`] right away.
    pub fn prepare(&self, ind: &mut Individual) {
        let phenotype = ind
            .phenotype
            .get_or_insert_with(|| decode(&ind.genotype, &self.grammar, self.max_wraps));
        ind.sim_estimate = phenotype.adm_count();
        if !phenotype.is_valid() {
            ind.fitness = Some(WORST_FITNESS);
        }
    }

    /// Full evaluation; an already evaluated individual is left as is.
    pub fn evaluate(&self, ind: &mut Individual) {
        self.prepare(ind);
        if ind.fitness.is_some() {
            return;
        }
        let dmm = ind.phenotype.as_ref().and_then(Phenotype::dmm).expect("prepared and valid");
        let metrics = simulate(dmm, &self.trace, &self.hw);
        ind.fitness = Some(fitness(&metrics, &self.weights));
    }
}

/// Weights normalized by the metrics of `kingsley_config(32)` on `trace`.
pub fn kingsley_weights(trace: &Trace, hw: &HwParams, w: [f64; 3]) -> Result<FitnessWeights, WeightsError> {
    let baseline = simulate(&kingsley_config(32), trace, hw);
    FitnessWeights::new(w, Normalizers::from_baseline(&baseline))
}

/// Free-function form of [`Evaluator::evaluate`] on an owned individual.
pub fn evaluate(mut ind: Individual, evaluator: &Evaluator) -> Individual {
    evaluator.evaluate(&mut ind);
    ind
}
