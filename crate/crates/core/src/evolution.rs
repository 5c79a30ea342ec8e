//! Generational real-coded evolutionary algorithm.
//!
//! Linear rank selection, uniform/whole-arithmetic crossover, elitism and
//! non-uniform mutation whose step size and application rate shrink as the
//! run approaches its last generation. Every random decision is drawn from a
//! ChaCha stream keyed by `(seed, generation, slot)`, so a run is fully
//! determined by its seed no matter how fitness evaluation is scheduled.

use std::time::Instant;

use rand::distr::{Distribution, weighted::WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::Genome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeneKind {
    Real,
    /// Integer valued; crossed over like a categorical, mutated on the real
    /// line and rounded.
    Integer,
    Boolean,
    Categorical(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gene {
    pub kind: GeneKind,
    pub lo: f64,
    pub hi: f64,
    /// Excluded from mutation and crossover exchange.
    pub frozen: bool,
    pinned: Option<f64>,
}

impl Gene {
    pub fn real(lo: f64, hi: f64) -> Self {
        Gene {
            kind: GeneKind::Real,
            lo,
            hi,
            frozen: false,
            pinned: None,
        }
    }

    pub fn integer(lo: f64, hi: f64) -> Self {
        Gene {
            kind: GeneKind::Integer,
            ..Gene::real(lo, hi)
        }
    }

    pub fn boolean() -> Self {
        Gene {
            kind: GeneKind::Boolean,
            ..Gene::real(0.0, 1.0)
        }
    }

    pub fn categorical(choices: usize) -> Self {
        Gene {
            kind: GeneKind::Categorical(choices as u32),
            ..Gene::real(0.0, (choices.max(2) - 1) as f64)
        }
    }

    pub fn frozen(mut self) -> Self {
        self.frozen = true;
        self
    }

    /// Frozen at `value`; random genomes carry exactly this value.
    pub fn pinned(mut self, value: f64) -> Self {
        self.frozen = true;
        self.pinned = Some(value);
        self
    }

    pub fn pinned_value(&self) -> Option<f64> {
        self.pinned
    }

    pub fn is_discrete(&self) -> bool {
        !matches!(self.kind, GeneKind::Real)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if let Some(v) = self.pinned {
            return v;
        }
        match self.kind {
            GeneKind::Real => rng.random_range(self.lo..=self.hi),
            GeneKind::Integer => rng.random_range(self.lo as i64..=self.hi as i64) as f64,
            GeneKind::Boolean => f64::from(u8::from(rng.random_bool(0.5))),
            GeneKind::Categorical(n) => rng.random_range(0..n.max(1)) as f64,
        }
    }
}

/// Per-position gene kinds and bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneSpace {
    genes: Vec<Gene>,
}

impl GeneSpace {
    pub fn new(genes: Vec<Gene>) -> Self {
        GeneSpace { genes }
    }

    /// `dim` real genes on `[lo, hi]`.
    pub fn uniform_real(dim: usize, lo: f64, hi: f64) -> Self {
        GeneSpace::new(vec![Gene::real(lo, hi); dim])
    }

    pub fn genes(&self) -> &[Gene] {
        &self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Genome {
        Genome {
            genes: self.genes.iter().map(|g| g.sample(rng)).collect(),
        }
    }

    pub fn contains(&self, genome: &Genome) -> bool {
        genome.len() == self.len()
            && genome
                .genes
                .iter()
                .zip(&self.genes)
                .all(|(v, g)| *v >= g.lo && *v <= g.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EaConfig {
    pub population_size: usize,
    /// Number of offspring generations (`t_max`).
    pub generations: usize,
    pub rank_pressure: f64,
    pub elitism_fraction: f64,
    pub mutation_rate_start: f64,
    /// Lower bound of the decaying per-gene mutation probability.
    pub mutation_rate_floor: f64,
    /// Shape `b` of the non-uniform mutation step.
    pub mutation_shape: f64,
    pub crossover_rate: f64,
    pub seed: u64,
    /// Evaluate fitness on the rayon pool.
    pub parallel: bool,
    /// Fill `elapsed_ms` from the wall clock (makes histories non-reproducible).
    pub record_wall_time: bool,
}

impl Default for EaConfig {
    fn default() -> Self {
        EaConfig {
            population_size: 30,
            generations: 60,
            rank_pressure: 0.5,
            elitism_fraction: 0.05,
            mutation_rate_start: 0.70,
            mutation_rate_floor: 0.05,
            mutation_shape: 5.0,
            crossover_rate: 0.9,
            seed: 1,
            parallel: true,
            record_wall_time: false,
        }
    }
}

impl EaConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} outside [0, 1]")))
            }
        };
        if self.population_size < 2 {
            return Err(Error::Config("population_size must be at least 2".into()));
        }
        if self.generations < 1 {
            return Err(Error::Config("generations must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.elitism_fraction) {
            return Err(Error::Config(format!(
                "elitism_fraction = {} outside [0, 1)",
                self.elitism_fraction
            )));
        }
        unit("rank_pressure", self.rank_pressure)?;
        unit("mutation_rate_start", self.mutation_rate_start)?;
        unit("mutation_rate_floor", self.mutation_rate_floor)?;
        unit("crossover_rate", self.crossover_rate)?;
        if self.mutation_shape.is_nan() || self.mutation_shape < 1.0 {
            return Err(Error::Config("mutation_shape must be at least 1".into()));
        }
        Ok(())
    }

    pub fn elite_count(&self) -> usize {
        ((self.elitism_fraction * self.population_size as f64).ceil() as usize)
            .min(self.population_size)
    }

    /// Per-gene mutation probability when breeding from generation `t`.
    pub fn mutation_rate(&self, t: usize) -> f64 {
        let decay = 1.0 - t as f64 / self.generations as f64;
        (self.mutation_rate_start * decay).max(self.mutation_rate_floor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genome: Genome,
    /// Loss to minimize (RMSE); meaningful only when `evaluated`.
    pub fitness: f64,
    pub evaluated: bool,
}

impl Individual {
    fn new(genome: Genome) -> Self {
        Individual {
            genome,
            fitness: f64::INFINITY,
            evaluated: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_rmse: f64,
    pub mean_rmse: f64,
    pub active_rules: usize,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunHistory {
    pub generations: Vec<GenerationStats>,
}

impl RunHistory {
    pub const CSV_HEADER: &'static str = "generation,best_rmse,mean_rmse,active_rules,elapsed_ms";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for s in &self.generations {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                s.generation, s.best_rmse, s.mean_rmse, s.active_rules, s.elapsed_ms
            ));
        }
        out
    }

    pub fn best(&self) -> impl Iterator<Item = f64> + '_ {
        self.generations.iter().map(|s| s.best_rmse)
    }

    pub fn is_monotone(&self) -> bool {
        self.generations
            .windows(2)
            .all(|w| w[1].best_rmse <= w[0].best_rmse)
    }
}

/// What the EA optimizes.
pub trait Problem: Sync {
    fn gene_space(&self) -> &GeneSpace;

    fn random_genome(&self, rng: &mut ChaCha8Rng) -> Genome {
        self.gene_space().sample(rng)
    }

    /// Genomes placed at the front of the initial population.
    fn initial_genomes(&self) -> Vec<Genome> {
        Vec::new()
    }

    /// Loss, lower is better. Must be non-negative and not NaN.
    fn fitness(&self, genome: &Genome) -> Result<f64>;

    /// Active rule count reported in the history; 0 if not applicable.
    fn rule_count(&self, _genome: &Genome) -> usize {
        0
    }
}

/// Selection probability of each rank (best first):
/// `(1/n) * (eta_plus - (eta_plus - eta_minus) * k / (n - 1))` with
/// `eta_plus = 1 + pressure`, `eta_minus = 1 - pressure`.
pub fn linear_rank_probabilities(n: usize, pressure: f64) -> Vec<f64> {
    assert!(n >= 2, "rank selection needs at least two individuals");
    let (hi, lo) = (1.0 + pressure, 1.0 - pressure);
    (0..n)
        .map(|k| (hi - (hi - lo) * k as f64 / (n - 1) as f64) / n as f64)
        .collect()
}

/// `Delta(t, y) = y * (1 - gamma^((1 - t/t_max)^b))`.
pub fn nonuniform_delta(t: usize, t_max: usize, y: f64, b: f64, gamma: f64) -> f64 {
    let exponent = (1.0 - t as f64 / t_max as f64).max(0.0).powf(b);
    y * (1.0 - gamma.powf(exponent))
}

/// Deterministic core of [`nonuniform_mutate`]: `upward` is the `omega = 0`
/// branch, `gamma` the uniform draw.
pub fn nonuniform_step(
    x: f64,
    (lo, hi): (f64, f64),
    t: usize,
    t_max: usize,
    b: f64,
    upward: bool,
    gamma: f64,
) -> f64 {
    let moved = if upward {
        x + nonuniform_delta(t, t_max, hi - x, b, gamma)
    } else {
        x - nonuniform_delta(t, t_max, x - lo, b, gamma)
    };
    moved.clamp(lo, hi)
}

/// Non-uniform mutation of one real gene at generation `t`.
pub fn nonuniform_mutate<R: Rng + ?Sized>(
    x: f64,
    bounds: (f64, f64),
    t: usize,
    cfg: &EaConfig,
    rng: &mut R,
) -> f64 {
    let upward = rng.random_bool(0.5);
    let gamma: f64 = rng.random();
    nonuniform_step(x, bounds, t, cfg.generations, cfg.mutation_shape, upward, gamma)
}

/// Apply mutation gene by gene with probability `cfg.mutation_rate(t)`.
pub fn mutate<R: Rng + ?Sized>(
    genome: &mut Genome,
    space: &GeneSpace,
    t: usize,
    cfg: &EaConfig,
    rng: &mut R,
) {
    let rate = cfg.mutation_rate(t);
    for (x, gene) in genome.genes.iter_mut().zip(space.genes()) {
        if gene.frozen || !rng.random_bool(rate) {
            continue;
        }
        *x = match gene.kind {
            GeneKind::Real => nonuniform_mutate(*x, (gene.lo, gene.hi), t, cfg, rng),
            GeneKind::Integer => nonuniform_mutate(*x, (gene.lo, gene.hi), t, cfg, rng)
                .round()
                .clamp(gene.lo, gene.hi),
            GeneKind::Boolean | GeneKind::Categorical(_) => gene.sample(rng),
        };
    }
}

/// Whole-arithmetic crossover for real genes (`beta` per gene) and uniform
/// exchange (`swap` per gene) for discrete genes.
pub fn crossover_with(
    a: &Genome,
    b: &Genome,
    space: &GeneSpace,
    mut beta: impl FnMut() -> f64,
    mut swap: impl FnMut() -> bool,
) -> Result<(Genome, Genome)> {
    if a.len() != b.len() || a.len() != space.len() {
        return Err(Error::SpecMismatch(a.len(), b.len()));
    }
    let mut c1 = a.clone();
    let mut c2 = b.clone();
    for (i, gene) in space.genes().iter().enumerate() {
        let (x, y) = (a.genes[i], b.genes[i]);
        if gene.frozen {
            continue;
        }
        if gene.is_discrete() {
            if swap() {
                c1.genes[i] = y;
                c2.genes[i] = x;
            }
        } else {
            let w = beta();
            let (lo, hi) = (x.min(y), x.max(y));
            c1.genes[i] = (w * x + (1.0 - w) * y).clamp(lo, hi);
            c2.genes[i] = ((1.0 - w) * x + w * y).clamp(lo, hi);
        }
    }
    Ok((c1, c2))
}

pub fn crossover<R: Rng + ?Sized>(
    a: &Genome,
    b: &Genome,
    space: &GeneSpace,
    rng: &mut R,
) -> Result<(Genome, Genome)> {
    let rng = std::cell::RefCell::new(rng);
    crossover_with(
        a,
        b,
        space,
        || rng.borrow_mut().random::<f64>(),
        || rng.borrow_mut().random_bool(0.5),
    )
}

fn stream_rng(seed: u64, generation: usize, slot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((generation as u64) << 32) | slot as u64);
    rng
}

fn evaluate<P: Problem + ?Sized>(problem: &P, pop: &mut [Individual], parallel: bool) -> Result<()> {
    let run = |ind: &mut Individual| -> Result<()> {
        if ind.evaluated {
            return Ok(());
        }
        let f = problem.fitness(&ind.genome).map_err(|e| Error::Fitness {
            genome: Box::new(ind.genome.clone()),
            source: Box::new(e),
        })?;
        if f.is_nan() || f < 0.0 {
            return Err(Error::Fitness {
                genome: Box::new(ind.genome.clone()),
                source: Box::new(Error::InvalidParameter(format!("fitness {f} is not a loss"))),
            });
        }
        ind.fitness = f;
        ind.evaluated = true;
        Ok(())
    };
    let results: Vec<Result<()>> = if parallel {
        pop.par_iter_mut().map(run).collect()
    } else {
        pop.iter_mut().map(run).collect()
    };
    results.into_iter().collect()
}

/// Indices sorted best-first; ties keep population order.
fn ranking(pop: &[Individual]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&i, &j| pop[i].fitness.total_cmp(&pop[j].fitness).then(i.cmp(&j)));
    order
}

fn stats<P: Problem + ?Sized>(
    problem: &P,
    pop: &[Individual],
    generation: usize,
    start: Option<Instant>,
) -> GenerationStats {
    let best = ranking(pop)[0];
    let n = pop.len() as f64;
    GenerationStats {
        generation,
        best_rmse: pop[best].fitness,
        mean_rmse: pop.iter().map(|i| i.fitness / n).sum(),
        active_rules: problem.rule_count(&pop[best].genome),
        elapsed_ms: start.map_or(0, |s| s.elapsed().as_millis() as u64),
    }
}

/// Run the generational loop for `cfg.generations` offspring generations and
/// return the best individual of the last generation with the history.
pub fn evolve<P: Problem + ?Sized>(cfg: &EaConfig, problem: &P) -> Result<(Individual, RunHistory)> {
    cfg.validate()?;
    let space = problem.gene_space();
    let n = cfg.population_size;
    let start = cfg.record_wall_time.then(Instant::now);

    let mut seeds = problem.initial_genomes();
    seeds.truncate(n);
    for g in &seeds {
        if g.len() != space.len() {
            return Err(Error::SpecMismatch(space.len(), g.len()));
        }
    }
    let mut pop: Vec<Individual> = seeds.into_iter().map(Individual::new).collect();
    for i in pop.len()..n {
        let mut rng = stream_rng(cfg.seed, 0, i);
        pop.push(Individual::new(problem.random_genome(&mut rng)));
    }
    evaluate(problem, &mut pop, cfg.parallel)?;
    let mut history = RunHistory {
        generations: vec![stats(problem, &pop, 0, start)],
    };

    let probs = linear_rank_probabilities(n, cfg.rank_pressure);
    let picker = WeightedIndex::new(&probs).map_err(|e| Error::Config(e.to_string()))?;
    let elites = cfg.elite_count();
    let pairs = (n - elites).div_ceil(2);

    for generation in 1..=cfg.generations {
        let t = generation - 1;
        let order = ranking(&pop);
        let breed = |k: usize| -> Result<[Genome; 2]> {
            let mut rng = stream_rng(cfg.seed, generation, k);
            let a = &pop[order[picker.sample(&mut rng)]].genome;
            let b = &pop[order[picker.sample(&mut rng)]].genome;
            let (mut c1, mut c2) = if rng.random_bool(cfg.crossover_rate) {
                crossover(a, b, space, &mut rng)?
            } else {
                (a.clone(), b.clone())
            };
            mutate(&mut c1, space, t, cfg, &mut rng);
            mutate(&mut c2, space, t, cfg, &mut rng);
            Ok([c1, c2])
        };
        let children: Vec<[Genome; 2]> = if cfg.parallel {
            (0..pairs).into_par_iter().map(breed).collect::<Result<_>>()?
        } else {
            (0..pairs).map(breed).collect::<Result<_>>()?
        };
        let mut next: Vec<Individual> = order[..elites].iter().map(|&i| pop[i].clone()).collect();
        next.extend(children.into_iter().flatten().map(Individual::new).take(n - elites));
        evaluate(problem, &mut next, cfg.parallel)?;
        pop = next;
        history.generations.push(stats(problem, &pop, generation, start));
    }

    let best = ranking(&pop)[0];
    Ok((pop.swap_remove(best), history))
}
