//! Photosynthetic algorithm.
//!
//! Each parameter is a fixed-width DHAP bit string. Every iteration draws a
//! light intensity `L`, computes the CO₂ fixation rate
//! `r = V_max / (1 + A / L)` and picks the Benson–Calvin cycle with
//! probability `r / V_max`, photorespiration otherwise:
//!
//! - Benson–Calvin (exploitation): each working string swaps one contiguous
//!   segment with the incumbent's string for the same parameter. Segment
//!   lengths step through the carbon counts 3, 5, 6, 7 of the sugar
//!   interconversions in the pathway.
//! - Photorespiration (exploration): each working string has one segment of
//!   1 to 4 bits complemented, then every bit flips with probability
//!   `2 / string_bits`.
//!
//! The shuffled strings are decoded and evaluated. A candidate that beats the
//! incumbent replaces it, so the incumbent objective never worsens. The run
//! stops after `max_iterations` or after `stall_window` iterations without
//! improvement.

use thiserror::Error;

use crate::encoding::{random_chromosome, Chromosome, EncodingError, FieldSpec, GenomeLayout};
use crate::ga::{mean_finite, rank_by_cost, Evaluation};
use crate::parallel::{map_ordered, Execution};
use crate::problems::Problem;
use crate::rng::RandomSource;
use crate::trace::{is_feasible, Annotation, Cycle, FinalBest, GenerationRecord, Genome, LightStep, RunTrace};

/// Benson–Calvin segment lengths, in bits.
pub const CARBON_SEGMENTS: [usize; 4] = [3, 5, 6, 7];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PaError {
    #[error("invalid PA configuration: {0}")]
    Config(String),
    #[error("light intensity must be positive, got {0}")]
    NonPositiveLight(f64),
    #[error("fixation rate {rate} outside [0, {v_max}]")]
    RateOutOfRange { rate: f64, v_max: f64 },
    #[error("need at least {needed} strings, got {actual}")]
    TooFewStrings { needed: usize, actual: usize },
    #[error("strings have different widths")]
    WidthMismatch,
    #[error("field {0} must be continuous with the configured string width")]
    Field(usize),
    #[error("{fields} fields given for a {dimension}-parameter problem")]
    Dimension { fields: usize, dimension: usize },
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PaConfig {
    pub v_max: f64,
    /// CO₂ affinity constant `A`.
    pub affinity: f64,
    /// Light intensity range, lx.
    pub light_low: f64,
    pub light_high: f64,
    pub string_bits: usize,
    /// Working parameter sets evaluated per iteration.
    pub strings_per_parameter: usize,
    pub max_iterations: usize,
    /// Iterations without improvement before stopping; zero disables.
    pub stall_window: usize,
    /// Longest segment photorespiration complements; zero disables it.
    pub max_segment: usize,
    /// Per-bit flip probability in photorespiration; `None` means `2 / string_bits`.
    pub flip_prob: Option<f64>,
    pub penalty_coefficient: f64,
    pub execution: Execution,
}

impl Default for PaConfig {
    fn default() -> Self {
        Self {
            v_max: 30.0,
            affinity: 1e4,
            light_low: 1e4,
            light_high: 5e4,
            string_bits: 16,
            strings_per_parameter: 1,
            max_iterations: 500,
            stall_window: 200,
            max_segment: 4,
            flip_prob: None,
            penalty_coefficient: 1e3,
            execution: Execution::default(),
        }
    }
}

impl PaConfig {
    pub fn validate(&self) -> Result<(), PaError> {
        let bad = |m: String| Err(PaError::Config(m));
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return bad(format!("v_max must be positive, got {}", self.v_max));
        }
        if !(self.affinity > 0.0 && self.affinity.is_finite()) {
            return bad(format!("affinity must be positive, got {}", self.affinity));
        }
        if !(self.light_low > 0.0 && self.light_low <= self.light_high && self.light_high.is_finite()) {
            return bad(format!("need 0 < light_low <= light_high, got [{}, {}]", self.light_low, self.light_high));
        }
        if self.string_bits == 0 || self.string_bits > crate::encoding::MAX_FIELD_BITS {
            return bad(format!("string_bits out of range: {}", self.string_bits));
        }
        if self.strings_per_parameter == 0 {
            return bad("strings_per_parameter must be positive".into());
        }
        if let Some(p) = self.flip_prob {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("flip_prob must lie in [0, 1], got {p}"));
            }
        }
        Ok(())
    }

    pub fn photorespiration(&self) -> Photorespiration {
        Photorespiration {
            max_segment: self.max_segment,
            flip_prob: self.flip_prob.unwrap_or(2.0 / self.string_bits as f64),
        }
    }
}

/// Uniform light intensity on `[light_low, light_high]`.
pub fn light_intensity(cfg: &PaConfig, src: &mut RandomSource) -> f64 {
    src.uniform(cfg.light_low, cfg.light_high)
}

/// `V_max / (1 + A / L)`.
pub fn fixation_rate(light: f64, cfg: &PaConfig) -> Result<f64, PaError> {
    if !(light > 0.0) {
        return Err(PaError::NonPositiveLight(light));
    }
    Ok(cfg.v_max / (1.0 + cfg.affinity / light))
}

/// Benson–Calvin with probability `r / V_max`.
pub fn choose_cycle(rate: f64, cfg: &PaConfig, src: &mut RandomSource) -> Result<Cycle, PaError> {
    if !(0.0..=cfg.v_max).contains(&rate) {
        return Err(PaError::RateOutOfRange { rate, v_max: cfg.v_max });
    }
    Ok(if src.next_unit() < rate / cfg.v_max { Cycle::BensonCalvin } else { Cycle::Photorespiration })
}

/// Position in the carbon-count segment schedule.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CarbonSchedule {
    step: usize,
}

impl CarbonSchedule {
    pub fn next_length(&mut self) -> usize {
        let len = CARBON_SEGMENTS[self.step % CARBON_SEGMENTS.len()];
        self.step += 1;
        len
    }
}

fn common_width(strings: &[Chromosome]) -> Result<usize, PaError> {
    let width = strings.first().map_or(0, Chromosome::len);
    if strings.iter().any(|s| s.len() != width) {
        return Err(PaError::WidthMismatch);
    }
    Ok(width)
}

/// Swaps one schedule-length segment inside each consecutive pair
/// `(0, 1), (2, 3), …`; an odd last string is left alone.
pub fn benson_calvin_shuffle(
    strings: &mut [Chromosome],
    schedule: &mut CarbonSchedule,
    src: &mut RandomSource,
) -> Result<(), PaError> {
    if strings.len() < 2 {
        return Err(PaError::TooFewStrings { needed: 2, actual: strings.len() });
    }
    let width = common_width(strings)?;
    for pair in strings.chunks_exact_mut(2) {
        let len = schedule.next_length().min(width);
        let start = src.below(width - len + 1);
        let (a, b) = pair.split_at_mut(1);
        a[0].bits_mut()[start..start + len].swap_with_slice(&mut b[0].bits_mut()[start..start + len]);
    }
    Ok(())
}

/// Photorespiration move parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Photorespiration {
    pub max_segment: usize,
    pub flip_prob: f64,
}

/// Complements one random segment per string, then flips bits independently.
/// Returns the number of independent flips.
pub fn photorespiration_shuffle(
    strings: &mut [Chromosome],
    params: &Photorespiration,
    src: &mut RandomSource,
) -> Result<usize, PaError> {
    if strings.is_empty() {
        return Err(PaError::TooFewStrings { needed: 1, actual: 0 });
    }
    let width = common_width(strings)?;
    let mut flips = 0;
    for s in strings.iter_mut() {
        let max_len = params.max_segment.min(width);
        if max_len > 0 {
            let len = 1 + src.below(max_len);
            let start = src.below(width - len + 1);
            crate::ga::invert_range(s, start, start + len);
        }
        flips += crate::ga::mutate(s, params.flip_prob, src);
    }
    Ok(flips)
}

struct Candidate {
    strings: Vec<Chromosome>,
    eval: Evaluation,
    cost: f64,
}

/// Minimizes (or maximizes, per the problem's sense) `problem` with one
/// continuous field of width `string_bits` per parameter.
pub fn pa_optimize(
    problem: &dyn Problem,
    fields: &[FieldSpec],
    cfg: &PaConfig,
    src: &mut RandomSource,
) -> Result<RunTrace, PaError> {
    cfg.validate()?;
    if fields.len() != problem.dimension() {
        return Err(PaError::Dimension { fields: fields.len(), dimension: problem.dimension() });
    }
    for (i, f) in fields.iter().enumerate() {
        if !matches!(f, FieldSpec::Continuous { .. }) || f.bits() != cfg.string_bits {
            return Err(PaError::Field(i));
        }
    }
    let layout = GenomeLayout::new(fields.to_vec())?;
    let sense = problem.sense();
    let photo = cfg.photorespiration();

    let evaluate = |sets: &[Vec<Chromosome>]| -> Vec<Evaluation> {
        map_ordered(sets, cfg.execution, |strings| {
            let decoded = layout.decode(&Chromosome::concat(strings)).expect("string widths match layout");
            Evaluation::of(problem, decoded)
        })
    };

    let mut working: Vec<Vec<Chromosome>> = (0..cfg.strings_per_parameter)
        .map(|_| fields.iter().map(|_| random_chromosome(cfg.string_bits, src)).collect())
        .collect();
    let evals = evaluate(&working);
    let mut evaluations = evals.len();
    let mut non_finite = evals.iter().filter(|e| !e.is_finite()).count();
    let costs: Vec<f64> = evals.iter().map(|e| e.cost(sense, cfg.penalty_coefficient)).collect();
    let first = rank_by_cost(&costs)[0];
    let mut incumbent = Candidate { strings: working[first].clone(), eval: evals[first].clone(), cost: costs[first] };

    let mut records = vec![GenerationRecord {
        generation: 0,
        best_objective: sense.from_cost(incumbent.cost),
        mean_objective: sense.from_cost(mean_finite(costs.iter().copied())),
        best_genome: Genome::Bits(Chromosome::concat(&incumbent.strings)),
        annotation: Annotation::Light(None),
    }];

    let mut schedule = CarbonSchedule::default();
    let mut last_improvement = 0;
    for iteration in 1..=cfg.max_iterations {
        let light = light_intensity(cfg, src);
        let rate = fixation_rate(light, cfg)?;
        let cycle = choose_cycle(rate, cfg, src)?;

        let previous = working.clone();
        for set in working.iter_mut() {
            match cycle {
                Cycle::BensonCalvin => {
                    for (p, s) in set.iter_mut().enumerate() {
                        let mut pair = [incumbent.strings[p].clone(), std::mem::replace(s, Chromosome::zeros(0))];
                        benson_calvin_shuffle(&mut pair, &mut schedule, src)?;
                        let [_, shuffled] = pair;
                        *s = shuffled;
                    }
                }
                Cycle::Photorespiration => {
                    photorespiration_shuffle(set, &photo, src)?;
                }
            }
        }

        let evals = evaluate(&working);
        evaluations += evals.len();
        let mut costs = Vec::with_capacity(evals.len());
        for (j, eval) in evals.into_iter().enumerate() {
            if !eval.is_finite() {
                non_finite += 1;
                working[j] = previous[j].clone();
                continue;
            }
            let cost = eval.cost(sense, cfg.penalty_coefficient);
            costs.push(cost);
            if cost < incumbent.cost {
                incumbent = Candidate { strings: working[j].clone(), eval, cost };
                last_improvement = iteration;
            }
        }

        records.push(GenerationRecord {
            generation: iteration,
            best_objective: sense.from_cost(incumbent.cost),
            mean_objective: sense.from_cost(mean_finite(costs.into_iter())),
            best_genome: Genome::Bits(Chromosome::concat(&incumbent.strings)),
            annotation: Annotation::Light(Some(LightStep { intensity: light, rate, cycle })),
        });
        if cfg.stall_window > 0 && iteration - last_improvement >= cfg.stall_window {
            break;
        }
    }

    Ok(RunTrace {
        records,
        best: FinalBest {
            feasible: is_feasible(&incumbent.eval.constraints),
            genome: Genome::Bits(Chromosome::concat(&incumbent.strings)),
            decoded: incumbent.eval.decoded,
            objective: incumbent.eval.raw,
            penalized: sense.from_cost(incumbent.cost),
            constraints: incumbent.eval.constraints,
        },
        evaluations,
        non_finite,
        degenerate_generations: 0,
    })
}
