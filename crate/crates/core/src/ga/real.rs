//! Floating-point GA over real vectors.
//!
//! Each generation keeps the better half of the population unchanged
//! (truncation selection) and refills the rest with blend-crossover children
//! of survivor pairs, perturbed by clamped gaussian mutation.

use crate::parallel::{map_ordered, Execution};
use crate::problems::Problem;
use crate::rng::RandomSource;
use crate::trace::{is_feasible, Annotation, FinalBest, GenerationRecord, Genome, RunTrace};

use super::{check_probability, mean_finite, rank_by_cost, Evaluation, GaError};

#[derive(Clone, Debug, PartialEq)]
pub struct RealGaConfig {
    pub population_size: usize,
    pub max_generations: usize,
    /// Upper end of the per-pair blend weight, drawn from `(0, blend]`.
    pub blend: f64,
    /// Mutation standard deviation as a fraction of each gene's range.
    pub sigma: f64,
    pub mutation_prob: f64,
    pub elitism_count: usize,
    /// Hard cap on objective evaluations, including the initial population.
    pub max_evaluations: Option<usize>,
    pub penalty_coefficient: f64,
    pub execution: Execution,
}

impl Default for RealGaConfig {
    fn default() -> Self {
        Self {
            population_size: 40,
            max_generations: 100,
            blend: 1.0,
            sigma: 0.1,
            mutation_prob: 0.1,
            elitism_count: 2,
            max_evaluations: None,
            penalty_coefficient: 1e3,
            execution: Execution::default(),
        }
    }
}

impl RealGaConfig {
    pub fn validate(&self) -> Result<(), GaError> {
        if self.population_size < 2 {
            return Err(GaError::Config("population_size must be at least 2".into()));
        }
        if !(self.blend > 0.0 && self.blend <= 1.0) {
            return Err(GaError::Config(format!("blend must lie in (0, 1], got {}", self.blend)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(GaError::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        check_probability("mutation_prob", self.mutation_prob)?;
        if self.elitism_count >= self.population_size {
            return Err(GaError::Config("elitism_count must be below population_size".into()));
        }
        if let Some(cap) = self.max_evaluations {
            if cap < self.population_size {
                return Err(GaError::Config(format!(
                    "max_evaluations ({cap}) must cover the initial population ({})",
                    self.population_size
                )));
            }
        }
        Ok(())
    }

    /// Members kept unchanged each generation.
    pub fn survivors(&self) -> usize {
        self.population_size.div_ceil(2).max(self.elitism_count)
    }
}

/// Blend pair: `(β a + (1−β) b, β b + (1−β) a)` gene by gene.
pub fn blend_crossover(a: &[f64], b: &[f64], beta: f64) -> (Vec<f64>, Vec<f64>) {
    let c1 = a.iter().zip(b).map(|(x, y)| beta * x + (1.0 - beta) * y).collect();
    let c2 = a.iter().zip(b).map(|(x, y)| beta * y + (1.0 - beta) * x).collect();
    (c1, c2)
}

/// Adds `N(0, (sigma × range)²)` to each gene with probability `p`, then clamps.
pub fn gaussian_mutation(x: &mut [f64], bounds: &[(f64, f64)], sigma: f64, p: f64, src: &mut RandomSource) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        if src.chance(p) {
            *v += sigma * (hi - lo) * src.next_gaussian();
        }
        *v = v.clamp(lo, hi);
    }
}

struct Member {
    genome: Vec<f64>,
    eval: Evaluation,
    cost: f64,
}

pub fn evolve_real(problem: &dyn Problem, cfg: &RealGaConfig, src: &mut RandomSource) -> Result<RunTrace, GaError> {
    cfg.validate()?;
    let bounds = problem.bounds();
    if bounds.len() != problem.dimension() {
        return Err(GaError::Config("problem bounds do not match its dimension".into()));
    }
    if let Some(&(lo, hi)) = bounds.iter().find(|(lo, hi)| !(lo <= hi)) {
        return Err(GaError::Config(format!("invalid gene bounds [{lo}, {hi}]")));
    }
    let sense = problem.sense();
    let n = cfg.population_size;
    let cap = cfg.max_evaluations.unwrap_or(usize::MAX);

    let evaluate = |batch: &[Vec<f64>]| -> Vec<Evaluation> {
        map_ordered(batch, cfg.execution, |x| Evaluation::of(problem, x.clone()))
    };
    let make = |genomes: Vec<Vec<f64>>, evals: Vec<Evaluation>| -> Vec<Member> {
        genomes
            .into_iter()
            .zip(evals)
            .map(|(genome, eval)| {
                let cost = eval.cost(sense, cfg.penalty_coefficient);
                Member { genome, eval, cost }
            })
            .collect()
    };

    let initial: Vec<Vec<f64>> = (0..n).map(|_| bounds.iter().map(|&(lo, hi)| src.uniform(lo, hi)).collect()).collect();
    let evals = evaluate(&initial);
    let mut evaluations = evals.len();
    let mut non_finite = evals.iter().filter(|e| !e.is_finite()).count();
    let mut population = make(initial, evals);
    let mut records = Vec::new();

    let survivors = cfg.survivors();
    for generation in 0..=cfg.max_generations {
        if generation > 0 {
            let budget = cap.saturating_sub(evaluations).min(n - survivors);
            if budget == 0 {
                break;
            }
            let costs: Vec<f64> = population.iter().map(|m| m.cost).collect();
            let order = rank_by_cost(&costs);
            let mut slots: Vec<Option<Member>> = population.into_iter().map(Some).collect();
            let kept: Vec<Member> = order[..survivors].iter().map(|&i| slots[i].take().unwrap()).collect();

            let mut children = Vec::with_capacity(budget);
            while children.len() < budget {
                let i = src.below(kept.len());
                let mut j = src.below(kept.len() - 1);
                if j >= i {
                    j += 1;
                }
                let beta = cfg.blend * (1.0 - src.next_unit());
                let (c1, c2) = blend_crossover(&kept[i].genome, &kept[j].genome, beta);
                for mut child in [c1, c2] {
                    if children.len() == budget {
                        break;
                    }
                    gaussian_mutation(&mut child, &bounds, cfg.sigma, cfg.mutation_prob, src);
                    children.push(child);
                }
            }
            let evals = evaluate(&children);
            evaluations += evals.len();
            non_finite += evals.iter().filter(|e| !e.is_finite()).count();
            population = kept;
            population.extend(make(children, evals));
        }

        let costs: Vec<f64> = population.iter().map(|m| m.cost).collect();
        let best = &population[rank_by_cost(&costs)[0]];
        records.push(GenerationRecord {
            generation,
            best_objective: sense.from_cost(best.cost),
            mean_objective: sense.from_cost(mean_finite(costs.iter().copied())),
            best_genome: Genome::Real(best.genome.clone()),
            annotation: Annotation::None,
        });
    }

    let costs: Vec<f64> = population.iter().map(|m| m.cost).collect();
    let best = population.swap_remove(rank_by_cost(&costs)[0]);
    Ok(RunTrace {
        records,
        best: FinalBest {
            feasible: is_feasible(&best.eval.constraints),
            genome: Genome::Real(best.genome),
            decoded: best.eval.decoded,
            objective: best.eval.raw,
            penalized: sense.from_cost(best.cost),
            constraints: best.eval.constraints,
        },
        evaluations,
        non_finite,
        degenerate_generations: 0,
    })
}
