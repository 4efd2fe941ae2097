//! Genetic operators on bit chromosomes and the fitness shaping that feeds
//! roulette selection.

use crate::encoding::Chromosome;
use crate::problems::Sense;
use crate::rng::RandomSource;

use super::GaError;

/// `A − y`, clamped below at zero. Non-finite `y` gets zero fitness.
#[inline]
pub fn fitness_shift(y: f64, a: f64) -> f64 {
    let f = a - y;
    if f.is_nan() {
        0.0
    } else {
        f.max(0.0)
    }
}

/// Selection probabilities proportional to fitness.
#[derive(Clone, Debug, PartialEq)]
pub struct Proportions {
    pub probabilities: Vec<f64>,
    /// Set when every fitness was zero and the probabilities fell back to uniform.
    pub degenerate: bool,
}

/// `f_i / Σ f`. Negative or non-finite entries count as zero; an all-zero
/// input yields uniform probabilities with `degenerate` set.
pub fn fitness_proportionate(values: &[f64]) -> Proportions {
    let clean: Vec<f64> = values.iter().map(|&v| if v.is_finite() && v > 0.0 { v } else { 0.0 }).collect();
    let total: f64 = clean.iter().sum();
    if total > 0.0 && total.is_finite() {
        Proportions { probabilities: clean.iter().map(|v| v / total).collect(), degenerate: false }
    } else {
        let n = values.len().max(1) as f64;
        Proportions { probabilities: vec![1.0 / n; values.len()], degenerate: !values.is_empty() }
    }
}

/// Cumulative roulette wheel built once per generation.
#[derive(Clone, Debug)]
pub struct RouletteWheel {
    cumulative: Vec<f64>,
    degenerate: bool,
}

impl RouletteWheel {
    pub fn new(fitness: &[f64]) -> Result<Self, GaError> {
        if fitness.is_empty() {
            return Err(GaError::EmptyPopulation);
        }
        let Proportions { probabilities, degenerate } = fitness_proportionate(fitness);
        let mut acc = 0.0;
        let cumulative = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { cumulative, degenerate })
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Index drawn with probability proportional to fitness.
    pub fn spin(&self, src: &mut RandomSource) -> usize {
        let total = *self.cumulative.last().expect("non-empty wheel");
        let r = src.next_unit() * total;
        let i = self.cumulative.partition_point(|&c| c <= r);
        if i < self.cumulative.len() {
            return i;
        }
        // r landed on the rounding edge: last slot with non-zero width.
        let mut j = self.cumulative.len() - 1;
        while j > 0 && self.cumulative[j] == self.cumulative[j - 1] {
            j -= 1;
        }
        j
    }
}

/// Roulette-wheel parent draw over a fitness vector.
pub fn select_parent(fitness: &[f64], src: &mut RandomSource) -> Result<usize, GaError> {
    Ok(RouletteWheel::new(fitness)?.spin(src))
}

/// Children from exchanging alternate segments between sorted `cuts`.
/// A cut at `k` separates bit `k - 1` from bit `k`.
pub fn crossover_at(p1: &Chromosome, p2: &Chromosome, cuts: &[usize]) -> Result<(Chromosome, Chromosome), GaError> {
    if p1.len() != p2.len() {
        return Err(GaError::LengthMismatch(p1.len(), p2.len()));
    }
    let mut c1 = p1.clone();
    let mut c2 = p2.clone();
    let mut swap = false;
    let mut start = 0;
    for &end in cuts.iter().chain(std::iter::once(&p1.len())) {
        let end = end.min(p1.len());
        if swap && start < end {
            c1.bits_mut()[start..end].copy_from_slice(&p2.bits()[start..end]);
            c2.bits_mut()[start..end].copy_from_slice(&p1.bits()[start..end]);
        }
        swap = !swap;
        start = start.max(end);
    }
    Ok((c1, c2))
}

/// `points`-point crossover with distinct cuts drawn uniformly from
/// `1..len`. Requests for more cuts than positions use every position.
pub fn crossover(
    p1: &Chromosome,
    p2: &Chromosome,
    points: usize,
    src: &mut RandomSource,
) -> Result<(Chromosome, Chromosome), GaError> {
    if p1.len() != p2.len() {
        return Err(GaError::LengthMismatch(p1.len(), p2.len()));
    }
    let positions = p1.len().saturating_sub(1);
    let k = points.min(positions);
    // partial Fisher–Yates over 1..len
    let mut pool: Vec<usize> = (1..p1.len()).collect();
    for i in 0..k {
        let j = i + src.below(positions - i);
        pool.swap(i, j);
    }
    let mut cuts = pool[..k].to_vec();
    cuts.sort_unstable();
    crossover_at(p1, p2, &cuts)
}

/// Flips each bit independently with probability `p_m`.
pub fn mutate(c: &mut Chromosome, p_m: f64, src: &mut RandomSource) -> usize {
    let mut flips = 0;
    for bit in c.bits_mut() {
        if src.chance(p_m) {
            *bit = !*bit;
            flips += 1;
        }
    }
    flips
}

/// Complements bits `start..end`.
pub fn invert_range(c: &mut Chromosome, start: usize, end: usize) {
    for bit in &mut c.bits_mut()[start..end] {
        *bit = !*bit;
    }
}

/// Complements one segment with endpoints drawn uniformly from `0..=len`.
/// Returns the segment; it may be empty.
pub fn invert_segment(c: &mut Chromosome, src: &mut RandomSource) -> (usize, usize) {
    let a = src.below(c.len() + 1);
    let b = src.below(c.len() + 1);
    let (start, end) = (a.min(b), a.max(b));
    invert_range(c, start, end);
    (start, end)
}

/// Quadratic exterior penalty on `g_i <= 0` constraints, added when
/// minimizing and subtracted when maximizing.
pub fn penalized_objective(raw: f64, constraints: &[f64], coefficient: f64, sense: Sense) -> f64 {
    let violation: f64 = constraints.iter().map(|&g| g.max(0.0).powi(2)).sum();
    let penalty = coefficient * violation;
    match sense {
        Sense::Minimize => raw + penalty,
        Sense::Maximize => raw - penalty,
    }
}
