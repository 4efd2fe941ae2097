//! Per-generation run records and their CSV form.

use std::fmt::Write as _;

use crate::encoding::Chromosome;

/// Genome in the trace: a bit string or a real vector.
#[derive(Clone, Debug, PartialEq)]
pub enum Genome {
    Bits(Chromosome),
    Real(Vec<f64>),
}

impl Genome {
    pub fn as_bits(&self) -> Option<&Chromosome> {
        match self {
            Genome::Bits(c) => Some(c),
            Genome::Real(_) => None,
        }
    }

    pub fn as_real(&self) -> Option<&[f64]> {
        match self {
            Genome::Real(v) => Some(v),
            Genome::Bits(_) => None,
        }
    }
}

/// Which photosynthetic cycle an iteration ran.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cycle {
    BensonCalvin,
    Photorespiration,
}

impl Cycle {
    pub fn as_str(self) -> &'static str {
        match self {
            Cycle::BensonCalvin => "benson_calvin",
            Cycle::Photorespiration => "photorespiration",
        }
    }
}

/// Light intensity (lx), fixation rate and the cycle it selected.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LightStep {
    pub intensity: f64,
    pub rate: f64,
    pub cycle: Cycle,
}

/// Engine-specific columns appended to a record.
#[derive(Clone, Debug, PartialEq)]
pub enum Annotation {
    None,
    /// Photosynthetic step; `None` for the initial evaluation, which draws no light.
    Light(Option<LightStep>),
    DiffusivityError(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Best (penalized) objective in the objective's own sense.
    pub best_objective: f64,
    /// Mean over finite objective values of the generation.
    pub mean_objective: f64,
    pub best_genome: Genome,
    pub annotation: Annotation,
}

/// Best solution at the end of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct FinalBest {
    pub genome: Genome,
    pub decoded: Vec<f64>,
    /// Raw objective, without penalty.
    pub objective: f64,
    pub penalized: f64,
    pub constraints: Vec<f64>,
    pub feasible: bool,
}

/// Tolerance used for the feasibility flag.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

pub fn is_feasible(constraints: &[f64]) -> bool {
    constraints.iter().all(|&g| g <= FEASIBILITY_TOLERANCE)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub records: Vec<GenerationRecord>,
    pub best: FinalBest,
    /// Objective evaluations performed.
    pub evaluations: usize,
    /// Evaluations that produced a non-finite objective.
    pub non_finite: usize,
    /// Generations whose fitness vector was all zero.
    pub degenerate_generations: usize,
}

impl RunTrace {
    pub fn best_objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.best_objective)
    }

    /// CSV body: column header line followed by one line per record.
    /// `header_lines` are written first, each prefixed with `# `.
    pub fn to_csv(&self, header_lines: &[String]) -> String {
        let mut out = String::new();
        for line in header_lines {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(
            out,
            "# evaluations={} non_finite={} degenerate_generations={}",
            self.evaluations, self.non_finite, self.degenerate_generations
        );
        out.push_str("generation,best_objective,mean_objective");
        match self.records.first().map(|r| &r.best_genome) {
            Some(Genome::Real(v)) => {
                for i in 0..v.len() {
                    let _ = write!(out, ",g{i}");
                }
            }
            _ => out.push_str(",best_genome_hex"),
        }
        match self.records.first().map(|r| &r.annotation) {
            Some(Annotation::Light(_)) => out.push_str(",L,r,cycle"),
            Some(Annotation::DiffusivityError(_)) => out.push_str(",e_kappa"),
            _ => {}
        }
        out.push('\n');
        for r in &self.records {
            let _ = write!(out, "{},{},{}", r.generation, r.best_objective, r.mean_objective);
            match &r.best_genome {
                Genome::Bits(c) => {
                    let _ = write!(out, ",{}", c.to_hex());
                }
                Genome::Real(v) => {
                    for x in v {
                        let _ = write!(out, ",{x}");
                    }
                }
            }
            match &r.annotation {
                Annotation::None => {}
                Annotation::Light(Some(step)) => {
                    let _ = write!(out, ",{},{},{}", step.intensity, step.rate, step.cycle.as_str());
                }
                Annotation::Light(None) => out.push_str(",,,initial"),
                Annotation::DiffusivityError(e) => {
                    let _ = write!(out, ",{e}");
                }
            }
            out.push('\n');
        }
        out
    }
}
