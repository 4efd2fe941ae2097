//! Genetic algorithm engines.
//!
//! [`evolve`] runs the binary-chromosome GA: evaluate, shape fitness, apply
//! penalties, then build a full replacement population by roulette selection,
//! crossover, mutation and inversion, with the best `elitism_count` members
//! copied unchanged. [`real::evolve_real`] is the floating-point variant.

pub mod operators;
pub mod real;

use thiserror::Error;

use crate::encoding::{random_chromosome, Chromosome, EncodingError, GenomeLayout};
use crate::parallel::{map_ordered, Execution};
use crate::problems::{Problem, Sense};
use crate::rng::RandomSource;
use crate::trace::{is_feasible, Annotation, FinalBest, GenerationRecord, Genome, RunTrace};

pub use operators::{
    crossover, crossover_at, fitness_proportionate, fitness_shift, invert_range, invert_segment, mutate,
    penalized_objective, select_parent, Proportions, RouletteWheel,
};
pub use real::{evolve_real, RealGaConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaError {
    #[error("population is empty")]
    EmptyPopulation,
    #[error("chromosome lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid GA configuration: {0}")]
    Config(String),
    #[error("layout decodes {layout} parameters but the problem has {problem}")]
    LayoutDimension { layout: usize, problem: usize },
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}

/// How the fitness constant `A` in `F = A − cost` is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FitnessShift {
    /// `A = max cost + margin × (max cost − min cost)` over the finite costs of
    /// the current generation.
    Adaptive { margin: f64 },
    /// Fixed `A`.
    Constant(f64),
}

impl Default for FitnessShift {
    fn default() -> Self {
        FitnessShift::Adaptive { margin: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub max_generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub inversion_prob: f64,
    pub crossover_points: usize,
    pub elitism_count: usize,
    pub fitness_shift: FitnessShift,
    pub penalty_coefficient: f64,
    /// The coefficient doubles every this many generations while the
    /// incumbent is infeasible. Zero disables growth.
    pub penalty_growth_interval: usize,
    pub execution: Execution,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 50,
            max_generations: 100,
            crossover_prob: 0.9,
            mutation_prob: 0.01,
            inversion_prob: 0.05,
            crossover_points: 1,
            elitism_count: 2,
            fitness_shift: FitnessShift::default(),
            penalty_coefficient: 1e3,
            penalty_growth_interval: 50,
            execution: Execution::default(),
        }
    }
}

pub(crate) fn check_probability(name: &str, p: f64) -> Result<(), GaError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(GaError::Config(format!("{name} must lie in [0, 1], got {p}")))
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), GaError> {
        if self.population_size == 0 {
            return Err(GaError::Config("population_size must be positive".into()));
        }
        check_probability("crossover_prob", self.crossover_prob)?;
        check_probability("mutation_prob", self.mutation_prob)?;
        check_probability("inversion_prob", self.inversion_prob)?;
        if self.crossover_points == 0 {
            return Err(GaError::Config("crossover_points must be positive".into()));
        }
        if self.elitism_count >= self.population_size {
            return Err(GaError::Config(format!(
                "elitism_count ({}) must be below population_size ({})",
                self.elitism_count, self.population_size
            )));
        }
        if !(self.penalty_coefficient >= 0.0 && self.penalty_coefficient.is_finite()) {
            return Err(GaError::Config("penalty_coefficient must be finite and >= 0".into()));
        }
        match self.fitness_shift {
            FitnessShift::Adaptive { margin } if !(margin >= 0.0 && margin.is_finite()) => {
                Err(GaError::Config("fitness margin must be finite and >= 0".into()))
            }
            FitnessShift::Constant(a) if !a.is_finite() => {
                Err(GaError::Config("fitness constant must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    /// Objective evaluations a full run performs.
    pub fn evaluation_count(&self) -> usize {
        self.population_size + self.max_generations * (self.population_size - self.elitism_count)
    }
}

/// Raw evaluation of one decoded candidate.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Evaluation {
    pub decoded: Vec<f64>,
    pub raw: f64,
    pub constraints: Vec<f64>,
}

impl Evaluation {
    pub fn of(problem: &dyn Problem, decoded: Vec<f64>) -> Self {
        let raw = problem.objective(&decoded);
        let constraints = problem.constraints(&decoded);
        Self { decoded, raw, constraints }
    }

    pub fn is_finite(&self) -> bool {
        self.raw.is_finite() && self.constraints.iter().all(|g| g.is_finite())
    }

    /// Penalized objective on the minimization scale; `+inf` when non-finite.
    pub fn cost(&self, sense: Sense, coefficient: f64) -> f64 {
        if !self.is_finite() {
            return f64::INFINITY;
        }
        let c = sense.to_cost(penalized_objective(self.raw, &self.constraints, coefficient, sense));
        if c.is_nan() {
            f64::INFINITY
        } else {
            c
        }
    }
}

#[derive(Clone, Debug)]
struct Member {
    genome: Chromosome,
    eval: Evaluation,
    cost: f64,
}

/// Member indices ordered by cost, ties by index.
pub(crate) fn rank_by_cost(costs: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
    order
}

/// Fitness values for a generation's costs.
pub fn shape_fitness(costs: &[f64], shift: FitnessShift) -> Vec<f64> {
    let a = match shift {
        FitnessShift::Constant(a) => a,
        FitnessShift::Adaptive { margin } => {
            let finite = costs.iter().copied().filter(|c| c.is_finite());
            let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c), hi.max(c)));
            if hi < lo {
                return vec![0.0; costs.len()];
            }
            hi + margin * (hi - lo)
        }
    };
    costs.iter().map(|&c| fitness_shift(c, a)).collect()
}

pub(crate) fn mean_finite(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.filter(|v| v.is_finite()).fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Runs the binary GA from a random initial population.
///
/// The reported best is the cheapest feasible design seen during the run, or
/// the best penalized one if nothing feasible was found.
pub fn evolve(
    problem: &dyn Problem,
    layout: &GenomeLayout,
    cfg: &GaConfig,
    src: &mut RandomSource,
) -> Result<RunTrace, GaError> {
    evolve_seeded(problem, layout, cfg, &[], src)
}

/// Runs the binary GA with `initial` designs encoded into the first members
/// of the starting population; the rest are random.
pub fn evolve_seeded(
    problem: &dyn Problem,
    layout: &GenomeLayout,
    cfg: &GaConfig,
    initial: &[Vec<f64>],
    src: &mut RandomSource,
) -> Result<RunTrace, GaError> {
    cfg.validate()?;
    if layout.dimension() != problem.dimension() {
        return Err(GaError::LayoutDimension { layout: layout.dimension(), problem: problem.dimension() });
    }
    let sense = problem.sense();
    let width = layout.total_bits();
    let n = cfg.population_size;

    let mut genomes = Vec::with_capacity(n);
    for design in initial.iter().take(n) {
        genomes.push(layout.encode(design)?);
    }
    while genomes.len() < n {
        genomes.push(random_chromosome(width, src));
    }

    let evaluate = |batch: &[Chromosome]| -> Vec<Evaluation> {
        map_ordered(batch, cfg.execution, |c| {
            let decoded = layout.decode(c).expect("chromosome width matches layout");
            Evaluation::of(problem, decoded)
        })
    };

    let mut coefficient = cfg.penalty_coefficient;
    let mut evaluations = n;
    let mut non_finite = 0;
    let mut degenerate_generations = 0;

    let evals = evaluate(&genomes);
    let mut population: Vec<Member> = genomes
        .into_iter()
        .zip(evals)
        .map(|(genome, eval)| {
            let cost = eval.cost(sense, coefficient);
            Member { genome, eval, cost }
        })
        .collect();
    non_finite += population.iter().filter(|m| !m.eval.is_finite()).count();

    let mut incumbent = population[rank_by_cost(&population.iter().map(|m| m.cost).collect::<Vec<_>>())[0]].clone();
    let mut best_feasible: Option<Member> = None;
    let mut records = Vec::with_capacity(cfg.max_generations + 1);

    for generation in 0..=cfg.max_generations {
        if generation > 0 {
            let costs: Vec<f64> = population.iter().map(|m| m.cost).collect();
            let order = rank_by_cost(&costs);
            let wheel = RouletteWheel::new(&shape_fitness(&costs, cfg.fitness_shift))?;
            if wheel.is_degenerate() {
                degenerate_generations += 1;
            }

            let mut next: Vec<Member> = order[..cfg.elitism_count].iter().map(|&i| population[i].clone()).collect();
            let mut offspring = Vec::with_capacity(n - next.len());
            while next.len() + offspring.len() < n {
                let a = &population[wheel.spin(src)].genome;
                let b = &population[wheel.spin(src)].genome;
                let (c1, c2) = if src.chance(cfg.crossover_prob) {
                    crossover(a, b, cfg.crossover_points, src)?
                } else {
                    (a.clone(), b.clone())
                };
                for mut child in [c1, c2] {
                    if next.len() + offspring.len() == n {
                        break;
                    }
                    mutate(&mut child, cfg.mutation_prob, src);
                    if src.chance(cfg.inversion_prob) {
                        invert_segment(&mut child, src);
                    }
                    offspring.push(child);
                }
            }
            let evals = evaluate(&offspring);
            evaluations += evals.len();
            non_finite += evals.iter().filter(|e| !e.is_finite()).count();
            next.extend(offspring.into_iter().zip(evals).map(|(genome, eval)| {
                let cost = eval.cost(sense, coefficient);
                Member { genome, eval, cost }
            }));
            population = next;

            if cfg.penalty_growth_interval > 0
                && generation % cfg.penalty_growth_interval == 0
                && !is_feasible(&incumbent.eval.constraints)
            {
                coefficient *= 2.0;
                for m in population.iter_mut().chain(std::iter::once(&mut incumbent)) {
                    m.cost = m.eval.cost(sense, coefficient);
                }
            }
        }

        let costs: Vec<f64> = population.iter().map(|m| m.cost).collect();
        let best = &population[rank_by_cost(&costs)[0]];
        if best.cost < incumbent.cost {
            incumbent = best.clone();
        }
        for m in population.iter().filter(|m| m.eval.is_finite() && is_feasible(&m.eval.constraints)) {
            if best_feasible.as_ref().is_none_or(|b| m.cost < b.cost) {
                best_feasible = Some(m.clone());
            }
        }
        records.push(GenerationRecord {
            generation,
            best_objective: sense.from_cost(best.cost),
            mean_objective: sense.from_cost(mean_finite(costs.iter().copied())),
            best_genome: Genome::Bits(best.genome.clone()),
            annotation: Annotation::None,
        });
    }

    let incumbent = best_feasible.unwrap_or(incumbent);
    let feasible = is_feasible(&incumbent.eval.constraints);
    Ok(RunTrace {
        records,
        best: FinalBest {
            genome: Genome::Bits(incumbent.genome),
            decoded: incumbent.eval.decoded,
            objective: incumbent.eval.raw,
            penalized: sense.from_cost(incumbent.cost),
            constraints: incumbent.eval.constraints,
            feasible,
        },
        evaluations,
        non_finite,
        degenerate_generations,
    })
}
