//! Executes a parsed run and writes its output files.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use tempfile::NamedTempFile;

use crate::encoding::GenomeLayout;
use crate::fem::{fem_inverse, solve_displacements, BeamInverse, FemModel, MaterialVector};
use crate::ga::{evolve, evolve_real, evolve_seeded};
use crate::heat::{error_kappa, ivbv_inverse, synthetic_kappa, DiffusivityField, DiffusivityInverse, IvbvSetup};
use crate::pa::pa_optimize;
use crate::problems::{DeJong, KeaneBump, PressureVessel, Problem};
use crate::rng::RandomSource;
use crate::trace::{Annotation, RunTrace};

use super::config::{EngineConfig, RunConfig, Task};
use super::CliError;

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Result of one seed: the trace plus extra summary lines and files.
struct Outcome {
    problem: String,
    trace: RunTrace,
    summary: Vec<String>,
    files: Vec<(&'static str, String)>,
}

fn optimize(
    problem: &dyn Problem,
    layout: &GenomeLayout,
    engine: &EngineConfig,
    src: &mut RandomSource,
) -> Result<RunTrace, CliError> {
    match engine {
        EngineConfig::Ga(cfg) => evolve(problem, layout, cfg, src).map_err(runtime),
        EngineConfig::GaReal(cfg) => evolve_real(problem, cfg, src).map_err(runtime),
        EngineConfig::Pa(cfg) => pa_optimize(problem, layout.fields(), cfg, src).map_err(runtime),
    }
}

fn with_header(header: &[String], body: &str) -> String {
    let mut out = String::new();
    for line in header {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str(body);
    out
}

fn execute(cfg: &RunConfig, header: &[String], src: &mut RandomSource) -> Result<Outcome, CliError> {
    let simple = |problem: &dyn Problem, layout: &GenomeLayout, src: &mut RandomSource| -> Result<Outcome, CliError> {
        Ok(Outcome {
            problem: problem.name().to_string(),
            trace: optimize(problem, layout, &cfg.engine, src)?,
            summary: Vec::new(),
            files: Vec::new(),
        })
    };
    match &cfg.task {
        Task::DeJong { alpha, half_length, dim, layout } => {
            let p = DeJong::new(*alpha, *half_length, *dim).map_err(|e| CliError::Usage(e.to_string()))?;
            simple(&p, layout, src)
        }
        Task::Bump { layout } => match &cfg.engine {
            EngineConfig::Ga(ga) => Ok(Outcome {
                problem: "bump".into(),
                trace: evolve_seeded(&KeaneBump, layout, ga, &[KeaneBump::START.to_vec()], src).map_err(runtime)?,
                summary: Vec::new(),
                files: Vec::new(),
            }),
            _ => simple(&KeaneBump, layout, src),
        },
        Task::Vessel { variant, layout } => simple(&PressureVessel::new(*variant), layout, src),
        Task::FemInverse { target } => {
            let model = FemModel::beam(target).map_err(runtime)?;
            let measured = solve_displacements(&model).map_err(runtime)?;
            let (estimate, trace) = match &cfg.engine {
                EngineConfig::Pa(pa) => fem_inverse(&measured, pa, src).map_err(runtime)?,
                EngineConfig::GaReal(real) => {
                    let problem = BeamInverse::new(measured.clone()).map_err(runtime)?;
                    let trace = evolve_real(&problem, real, src).map_err(runtime)?;
                    let estimate = MaterialVector::from_slice(&trace.best.decoded).expect("8 parameters");
                    (estimate, trace)
                }
                EngineConfig::Ga(_) => return Err(CliError::Usage("fem-inverse does not support engine ga".into())),
            };
            let names = ["E1", "nu1", "E2", "nu2", "E3", "nu3", "E4", "nu4"];
            let mut csv = String::from("parameter,estimate,target,relative_error\n");
            let mut summary = Vec::new();
            for (i, name) in names.iter().enumerate() {
                let (est, tgt) = (estimate.0[i], target.0[i]);
                let rel = (est - tgt) / tgt;
                let _ = writeln!(csv, "{name},{est},{tgt},{rel}");
                summary.push(format!("estimate.{name}={est}"));
            }
            let measured_line = measured.0.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
            summary.push(format!("measured_displacements={measured_line}"));
            Ok(Outcome {
                problem: "fem-inverse".into(),
                trace,
                summary,
                files: vec![("estimate.csv", with_header(header, &csv))],
            })
        }
        Task::Ivbv { grid, times, bounds, truth } => {
            let truth = match truth {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| runtime(format!("cannot read {}: {e}", path.display())))?;
                    let field = DiffusivityField::from_csv(&text).map_err(runtime)?;
                    if field.n() != *grid {
                        return Err(runtime(format!(
                            "{} holds a {}x{} field but grid is {grid}",
                            path.display(),
                            field.n(),
                            field.n()
                        )));
                    }
                    field
                }
                None => DiffusivityField::from_fn(*grid, synthetic_kappa).map_err(runtime)?,
            };
            let setup = IvbvSetup::new(*grid, *times, *bounds).map_err(runtime)?;
            let measured = setup.measure(&truth).map_err(runtime)?;
            let EngineConfig::GaReal(real) = &cfg.engine else {
                return Err(CliError::Usage("ivbv needs engine ga-real".into()));
            };
            let problem = DiffusivityInverse::new(setup.clone(), measured.clone()).map_err(runtime)?;
            let (estimate, trace) = ivbv_inverse(&problem, real, src, Some(&truth)).map_err(runtime)?;
            let initial_e_kappa = match trace.records.first().map(|r| &r.annotation) {
                Some(Annotation::DiffusivityError(e)) => *e,
                _ => f64::NAN,
            };
            let summary = vec![
                format!("time_step={}", setup.clock.dt),
                format!("e_u={}", trace.best.objective),
                format!("e_kappa={}", error_kappa(&truth, &estimate).map_err(runtime)?),
                format!("e_kappa_initial_best={initial_e_kappa}"),
            ];
            Ok(Outcome {
                problem: "ivbv".into(),
                trace,
                summary,
                files: vec![
                    ("kappa_estimate.csv", with_header(header, &estimate.to_csv())),
                    ("kappa_true.csv", with_header(header, &truth.to_csv())),
                    ("measured.csv", with_header(header, &measured.to_csv())),
                ],
            })
        }
    }
}

fn engine_name(engine: &EngineConfig) -> &'static str {
    match engine {
        EngineConfig::Ga(_) => "ga",
        EngineConfig::GaReal(_) => "ga-real",
        EngineConfig::Pa(_) => "pa",
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn summary_text(header: &[String], engine: &str, seed: u64, o: &Outcome, wall: f64) -> String {
    let t = &o.trace;
    let b = &t.best;
    let mut lines = vec![
        format!("problem={}", o.problem),
        format!("engine={engine}"),
        format!("seed={seed}"),
        format!("best_objective={}", b.objective),
        format!("penalized_objective={}", b.penalized),
        format!("solution={}", join(&b.decoded)),
    ];
    for (i, g) in b.constraints.iter().enumerate() {
        lines.push(format!("g{}={g}", i + 1));
    }
    lines.push(format!("feasible={}", b.feasible));
    lines.push(format!("generations={}", t.records.len().saturating_sub(1)));
    lines.push(format!("evaluations={}", t.evaluations));
    lines.push(format!("non_finite={}", t.non_finite));
    lines.extend(o.summary.iter().cloned());
    lines.push(format!("wall_time_s={wall:.3}"));
    let mut body = lines.join("\n");
    body.push('\n');
    with_header(header, &body)
}

/// Writes `contents` to `dir/name` through a temporary file in `dir`, so a
/// failed run never leaves a truncated file behind.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| runtime(format!("cannot write in {}: {e}", dir.display())))?;
    tmp.write_all(contents.as_bytes())
        .and_then(|_| tmp.flush())
        .map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))?;
    tmp.persist(&path).map_err(|e| runtime(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(path)
}

/// Runs every requested seed and writes its outputs.
pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    for r in 0..cfg.repeat {
        let seed = cfg.seed.wrapping_add(r);
        let dir = if cfg.repeat > 1 { cfg.out.join(format!("seed-{seed}")) } else { cfg.out.clone() };
        std::fs::create_dir_all(&dir).map_err(|e| runtime(format!("cannot create {}: {e}", dir.display())))?;
        let header = cfg.header_lines(seed);
        let mut src = RandomSource::new(seed);
        let start = Instant::now();
        let outcome = execute(cfg, &header, &mut src)?;
        let wall = start.elapsed().as_secs_f64();

        let mut files = vec![("trace.csv", outcome.trace.to_csv(&header))];
        files.extend(outcome.files.iter().cloned());
        files.push(("summary.txt", summary_text(&header, engine_name(&cfg.engine), seed, &outcome, wall)));
        for (name, contents) in &files {
            write_atomic(&dir, name, contents)?;
        }
        println!(
            "{} seed={seed} best={} feasible={} -> {}",
            cfg.subcommand,
            outcome.trace.best.objective,
            outcome.trace.best.feasible,
            dir.display()
        );
    }
    Ok(())
}
