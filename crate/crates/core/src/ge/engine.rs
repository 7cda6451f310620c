//! The generational loop.
//!
//! [`GeState`] owns the population and the only random generator. Drivers
//! alternate [`GeState::prepare`], evaluation of the individuals flagged by
//! [`Individual::needs_simulation`] (sequentially or elsewhere), and
//! [`GeState::finish_generation`], which logs and breeds the next generation.

use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{crossover, mutate, Evaluator, GeParams, Genotype, Individual, Phenotype, WORST_FITNESS};

/// One row of the per-generation log.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerationLog {
    pub generation: usize,
    pub best_fitness: f64,
    /// Mean over finite fitnesses; infinite when there are none.
    pub mean_fitness: f64,
    pub best_adm_count: usize,
    pub invalid_count: usize,
    pub best_genotype: Genotype,
}

impl GenerationLog {
    pub const CSV_HEADER: &'static str = "generation,best_fitness,mean_fitness,best_adm_count,invalid_count";
}

/// Outcome of a full run.
#[derive(Clone, Debug, PartialEq)]
pub struct GeRun {
    pub best: Individual,
    pub log: Vec<GenerationLog>,
}

fn rank(a: &Individual, ia: usize, b: &Individual, ib: usize) -> Ordering {
    a.score().total_cmp(&b.score()).then(ia.cmp(&ib))
}

/// Index of the fittest individual, earliest on ties.
pub fn best_index(pop: &[Individual]) -> Option<usize> {
    (0..pop.len()).min_by(|&a, &b| rank(&pop[a], a, &pop[b], b))
}

fn tournament<R: Rng + ?Sized>(pop: &[Individual], k: usize, rng: &mut R) -> usize {
    let mut best = rng.gen_range(0..pop.len());
    for _ in 1..k {
        let c = rng.gen_range(0..pop.len());
        if rank(&pop[c], c, &pop[best], best) == Ordering::Less {
            best = c;
        }
    }
    best
}

/// A child that still equals its parent keeps the parent's evaluation.
fn child_of(parent: &Individual, genotype: Genotype) -> Individual {
    if genotype == parent.genotype {
        parent.clone()
    } else {
        Individual::new(genotype)
    }
}

/// Breeds the next generation: the `elitism_count` best are copied
/// unchanged, the rest come from tournament selection, crossover and
/// mutation.
pub fn step<R: Rng + ?Sized>(pop: &[Individual], params: &GeParams, rng: &mut R) -> Vec<Individual> {
    let n = params.population_size;
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&a, &b| rank(&pop[a], a, &pop[b], b));
    let mut next: Vec<Individual> = order.iter().take(params.elitism_count.min(n)).map(|&i| pop[i].clone()).collect();
    while next.len() < n {
        let a = &pop[tournament(pop, params.tournament_size, rng)];
        let b = &pop[tournament(pop, params.tournament_size, rng)];
        let (c1, c2) = crossover(&a.genotype, &b.genotype, params.p_crossover, rng);
        let c1 = mutate(&c1, params.p_mutation, rng);
        let c2 = mutate(&c2, params.p_mutation, rng);
        next.push(child_of(a, c1));
        if next.len() < n {
            next.push(child_of(b, c2));
        }
    }
    next
}

#[derive(Clone, Debug)]
pub struct GeState {
    pub params: GeParams,
    pub population: Vec<Individual>,
    /// Index of the current generation.
    pub generation: usize,
    pub log: Vec<GenerationLog>,
    best: Option<Individual>,
    rng: ChaCha8Rng,
}

impl GeState {
    /// Random initial population. `params` must be valid.
    pub fn new(params: GeParams) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
        let population = (0..params.population_size)
            .map(|_| {
                let len = rng.gen_range(params.init_len_min..=params.init_len_max);
                let codons = (0..len).map(|_| rng.gen()).collect();
                Individual::new(Genotype(codons))
            })
            .collect();
        Self { params, population, generation: 0, log: Vec::new(), best: None, rng }
    }

    /// Decodes new individuals and scores the invalid ones.
    pub fn prepare(&mut self, evaluator: &Evaluator) {
        for ind in &mut self.population {
            evaluator.prepare(ind);
        }
    }

    /// Whether every individual has a fitness.
    pub fn evaluated(&self) -> bool {
        self.population.iter().all(|i| i.fitness.is_some())
    }

    /// Logs the evaluated generation, then breeds the next one unless the
    /// run is over. Returns whether a new generation was bred.
    pub fn finish_generation(&mut self) -> bool {
        debug_assert!(self.evaluated());
        self.record();
        if self.generation >= self.params.generations {
            return false;
        }
        self.population = step(&self.population, &self.params, &mut self.rng);
        self.generation += 1;
        true
    }

    fn record(&mut self) {
        let pop = &self.population;
        let bi = best_index(pop).expect("population is never empty");
        let best = &pop[bi];
        let finite: Vec<f64> = pop.iter().map(Individual::score).filter(|f| f.is_finite()).collect();
        let mean = if finite.is_empty() {
            WORST_FITNESS
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        };
        let invalid = pop.iter().filter(|i| matches!(i.phenotype, Some(Phenotype::Invalid(_)))).count();
        self.log.push(GenerationLog {
            generation: self.generation,
            best_fitness: best.score(),
            mean_fitness: mean,
            best_adm_count: best.sim_estimate,
            invalid_count: invalid,
            best_genotype: best.genotype.clone(),
        });
        if self.best.as_ref().is_none_or(|b| best.score() < b.score()) {
            self.best = Some(best.clone());
        }
    }

    pub fn into_run(self) -> GeRun {
        let best = self
            .best
            .or_else(|| best_index(&self.population).map(|i| self.population[i].clone()))
            .expect("population is never empty");
        GeRun { best, log: self.log }
    }
}

/// Runs the whole loop on the calling thread.
pub fn run_sequential(evaluator: &Evaluator, params: &GeParams) -> GeRun {
    let mut state = GeState::new(*params);
    loop {
        state.prepare(evaluator);
        for ind in &mut state.population {
            if ind.needs_simulation() {
                evaluator.evaluate(ind);
            }
        }
        if !state.finish_generation() {
            return state.into_run();
        }
    }
}
