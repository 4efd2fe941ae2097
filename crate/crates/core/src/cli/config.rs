//! Command-line and config-file parsing into a typed run description.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Arg, ArgMatches, Command};

use crate::encoding::{FieldSpec, GenomeLayout};
use crate::fem::MaterialVector;
use crate::ga::{FitnessShift, GaConfig, RealGaConfig};
use crate::heat::{DEFAULT_KAPPA_BOUNDS, DEFAULT_TIMES};
use crate::pa::PaConfig;
use crate::parallel::Execution;
use crate::problems::{KeaneBump, Problem, VesselVariant};

use super::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subcommand {
    DeJong,
    Bump,
    Vessel,
    FemInverse,
    Ivbv,
    PaDemo,
}

impl Subcommand {
    pub const ALL: [Subcommand; 6] = [
        Subcommand::DeJong,
        Subcommand::Bump,
        Subcommand::Vessel,
        Subcommand::FemInverse,
        Subcommand::Ivbv,
        Subcommand::PaDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::DeJong => "dejong",
            Subcommand::Bump => "bump",
            Subcommand::Vessel => "vessel",
            Subcommand::FemInverse => "fem-inverse",
            Subcommand::Ivbv => "ivbv",
            Subcommand::PaDemo => "pa-demo",
        }
    }

    fn about(self) -> &'static str {
        match self {
            Subcommand::DeJong => "Minimize the generalized De Jong function sum |x_i|^alpha",
            Subcommand::Bump => "Maximize Keane's bump function under its two constraints",
            Subcommand::Vessel => "Minimum-cost pressure vessel design with four constraints",
            Subcommand::FemInverse => "Recover per-element (E, nu) of the plane-stress beam from displacements",
            Subcommand::Ivbv => "Recover a diffusivity field from three temperature snapshots",
            Subcommand::PaDemo => "Photosynthetic algorithm on a small De Jong problem",
        }
    }

    /// Engines the subcommand accepts; the first is the default.
    pub fn engines(self) -> &'static [EngineKind] {
        use EngineKind::*;
        match self {
            Subcommand::DeJong | Subcommand::Bump => &[Ga, GaReal, Pa],
            Subcommand::Vessel => &[Ga],
            Subcommand::FemInverse => &[Pa, GaReal],
            Subcommand::Ivbv => &[GaReal],
            Subcommand::PaDemo => &[Pa],
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EngineKind {
    Ga,
    GaReal,
    Pa,
}

impl EngineKind {
    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Ga => "ga",
            EngineKind::GaReal => "ga-real",
            EngineKind::Pa => "pa",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ga" => Ok(EngineKind::Ga),
            "ga-real" => Ok(EngineKind::GaReal),
            "pa" => Ok(EngineKind::Pa),
            other => Err(format!("unknown engine {other:?} (expected ga, ga-real or pa)")),
        }
    }
}

struct Key {
    name: &'static str,
    help: &'static str,
    /// Empty means every subcommand.
    subcommands: &'static [Subcommand],
    /// Empty means every engine.
    engines: &'static [EngineKind],
}

impl Key {
    fn in_subcommand(&self, sub: Subcommand) -> bool {
        self.subcommands.is_empty() || self.subcommands.contains(&sub)
    }

    fn in_engine(&self, engine: EngineKind) -> bool {
        self.engines.is_empty() || self.engines.contains(&engine)
    }
}

use EngineKind::{Ga, GaReal, Pa};
use Subcommand::{Bump, DeJong, FemInverse, Ivbv, PaDemo, Vessel};

const fn key(
    name: &'static str,
    help: &'static str,
    subcommands: &'static [Subcommand],
    engines: &'static [EngineKind],
) -> Key {
    Key { name, help, subcommands, engines }
}

/// Every accepted key. Each one is both a `--flag` and a config-file key.
const KEYS: &[Key] = &[
    key("seed", "Random seed (u64)", &[], &[]),
    key("engine", "Optimizer: ga, ga-real or pa", &[], &[]),
    key("out", "Output directory", &[], &[]),
    key("repeat", "Run this many consecutive seeds", &[], &[]),
    key("execution", "Population evaluation: parallel or sequential", &[], &[]),
    key("alpha", "De Jong exponent", &[DeJong, PaDemo], &[]),
    key("dim", "Number of variables", &[DeJong, PaDemo], &[]),
    key("half-length", "Search box is [-r, r] per variable", &[DeJong, PaDemo], &[]),
    key("bits", "Bits per encoded variable", &[DeJong, Bump, FemInverse, PaDemo], &[Ga, Pa]),
    key("variant", "Vessel cost formula: kannan-kramer or printed", &[Vessel], &[]),
    key("target", "Generating material vector E1,nu1,...,E4,nu4", &[FemInverse], &[]),
    key("grid", "Interior grid size N (N x N unknowns)", &[Ivbv], &[]),
    key("times", "Measurement times t1,t2,t3", &[Ivbv], &[]),
    key("kappa-lo", "Lower diffusivity bound", &[Ivbv], &[]),
    key("kappa-hi", "Upper diffusivity bound", &[Ivbv], &[]),
    key("kappa-file", "CSV matrix of the true diffusivity (default: built-in two-bump field)", &[Ivbv], &[]),
    key("pop", "Population size", &[], &[Ga, GaReal]),
    key("generations", "Maximum generations", &[], &[Ga, GaReal]),
    key("pc", "Crossover probability", &[], &[Ga]),
    key("pm", "Mutation probability (per bit for ga, per gene for ga-real)", &[], &[Ga, GaReal]),
    key("inversion", "Inversion probability", &[], &[Ga]),
    key("points", "Crossover points", &[], &[Ga]),
    key("elitism", "Individuals copied unchanged each generation", &[], &[Ga, GaReal]),
    key("margin", "Fitness shift margin as a fraction of the cost range", &[], &[Ga]),
    key("penalty", "Initial penalty coefficient", &[Bump, Vessel], &[]),
    key(
        "penalty-interval",
        "Double the penalty every this many generations while infeasible (0: never)",
        &[Bump, Vessel],
        &[Ga],
    ),
    key("blend", "Upper end of the blend weight", &[], &[GaReal]),
    key("sigma", "Mutation standard deviation as a fraction of each range", &[], &[GaReal]),
    key("budget", "Maximum objective evaluations, or none", &[], &[GaReal]),
    key("vmax", "Maximum fixation rate", &[], &[Pa]),
    key("affinity", "CO2 affinity constant", &[], &[Pa]),
    key("light-low", "Lower light intensity", &[], &[Pa]),
    key("light-high", "Upper light intensity", &[], &[Pa]),
    key("strings", "Working parameter sets per iteration", &[], &[Pa]),
    key("iterations", "Maximum iterations", &[], &[Pa]),
    key("stall", "Stop after this many iterations without improvement (0: never)", &[], &[Pa]),
    key("max-segment", "Longest segment photorespiration complements", &[], &[Pa]),
    key("flip-prob", "Photorespiration bit flip probability, or auto", &[], &[Pa]),
];

fn find_key(name: &str) -> Option<&'static Key> {
    KEYS.iter().find(|k| k.name == name)
}

fn default_value(sub: Subcommand, engine: EngineKind, key: &str) -> String {
    let ga = GaConfig::default();
    let real = RealGaConfig::default();
    let pa = PaConfig::default();
    let specific = match (sub, engine, key) {
        (DeJong, _, "alpha") => Some("3"),
        (DeJong, _, "dim") => Some("40"),
        (DeJong, _, "half-length") => Some("256"),
        (PaDemo, _, "alpha") => Some("1"),
        (PaDemo, _, "dim") => Some("2"),
        (PaDemo, _, "half-length") => Some("5.12"),
        (Bump, _, "bits") => Some("20"),
        (DeJong | Bump | Vessel, _, "pop") => Some("100"),
        (DeJong, _, "generations") => Some("200"),
        (DeJong, Ga, "pm") => Some("0.002"),
        (DeJong, Ga, "points") => Some("2"),
        (Bump | Vessel, _, "generations") => Some("1000"),
        (DeJong | Bump, Pa, "iterations") => Some("5000"),
        (PaDemo, _, "iterations") => Some("2000"),
        (Ivbv, _, "generations") => Some("100000"),
        (Ivbv, _, "budget") => Some("40000"),
        (Ivbv, _, "pop") => Some("20"),
        (Ivbv, _, "sigma") => Some("0.05"),
        (Ivbv, _, "pm") => Some("0.05"),
        (FemInverse, GaReal, "generations") => Some("250"),
        _ => None,
    };
    if let Some(v) = specific {
        return v.to_string();
    }
    let (kappa_lo, kappa_hi) = DEFAULT_KAPPA_BOUNDS;
    match key {
        "seed" => "1".into(),
        "engine" => engine.name().into(),
        "out" => "out".into(),
        "repeat" => "1".into(),
        "execution" => execution_name(Execution::default()).into(),
        "bits" => pa.string_bits.to_string(),
        "variant" => VesselVariant::default().to_string(),
        "target" => join(&MaterialVector::TARGET.0),
        "grid" => "8".into(),
        "times" => join(&DEFAULT_TIMES),
        "kappa-lo" => kappa_lo.to_string(),
        "kappa-hi" => kappa_hi.to_string(),
        "kappa-file" => "none".into(),
        "pop" if engine == GaReal => real.population_size.to_string(),
        "pop" => ga.population_size.to_string(),
        "generations" if engine == GaReal => real.max_generations.to_string(),
        "generations" => ga.max_generations.to_string(),
        "pc" => ga.crossover_prob.to_string(),
        "pm" if engine == GaReal => real.mutation_prob.to_string(),
        "pm" => ga.mutation_prob.to_string(),
        "inversion" => ga.inversion_prob.to_string(),
        "points" => ga.crossover_points.to_string(),
        "elitism" if engine == GaReal => real.elitism_count.to_string(),
        "elitism" => ga.elitism_count.to_string(),
        "margin" => match ga.fitness_shift {
            FitnessShift::Adaptive { margin } => margin.to_string(),
            FitnessShift::Constant(_) => "0.01".into(),
        },
        "penalty" => ga.penalty_coefficient.to_string(),
        "penalty-interval" => ga.penalty_growth_interval.to_string(),
        "blend" => real.blend.to_string(),
        "sigma" => real.sigma.to_string(),
        "budget" => real.max_evaluations.map_or("none".into(), |b| b.to_string()),
        "vmax" => pa.v_max.to_string(),
        "affinity" => pa.affinity.to_string(),
        "light-low" => pa.light_low.to_string(),
        "light-high" => pa.light_high.to_string(),
        "strings" => pa.strings_per_parameter.to_string(),
        "iterations" => pa.max_iterations.to_string(),
        "stall" => pa.stall_window.to_string(),
        "max-segment" => pa.max_segment.to_string(),
        "flip-prob" => pa.flip_prob.map_or("auto".into(), |p| p.to_string()),
        other => unreachable!("no default for {other}"),
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

pub(crate) fn execution_name(e: Execution) -> &'static str {
    match e {
        Execution::Sequential => "sequential",
        Execution::Parallel => "parallel",
    }
}

/// Engine with its resolved settings.
#[derive(Clone, Debug, PartialEq)]
pub enum EngineConfig {
    Ga(GaConfig),
    GaReal(RealGaConfig),
    Pa(PaConfig),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Task {
    DeJong { alpha: u32, half_length: f64, dim: usize, layout: GenomeLayout },
    Bump { layout: GenomeLayout },
    Vessel { variant: VesselVariant, layout: GenomeLayout },
    FemInverse { target: MaterialVector },
    Ivbv { grid: usize, times: [f64; 3], bounds: (f64, f64), truth: Option<PathBuf> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub engine: EngineConfig,
    pub task: Task,
    pub seed: u64,
    pub repeat: u64,
    pub out: PathBuf,
    /// Every result-affecting key with its resolved value, sorted by key.
    pub resolved: BTreeMap<String, String>,
    /// `field.<i>.<key>` lines of a layout read from the config file.
    pub layout_lines: Vec<String>,
}

impl RunConfig {
    /// Comment lines written at the top of every output file for `seed`.
    pub fn header_lines(&self, seed: u64) -> Vec<String> {
        let mut lines = vec![
            format!("bioopt {}", env!("CARGO_PKG_VERSION")),
            format!("command={}", self.subcommand),
            format!("seed={seed}"),
        ];
        lines.extend(self.resolved.iter().filter(|(k, _)| k.as_str() != "seed").map(|(k, v)| format!("{k}={v}")));
        lines.extend(self.layout_lines.iter().cloned());
        lines
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn command() -> Command {
    let mut cmd = Command::new("bioopt")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Genetic and photosynthetic optimization of benchmark and inverse problems")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for sub in Subcommand::ALL {
        let engines: Vec<&str> = sub.engines().iter().map(|e| e.name()).collect();
        let mut sc = Command::new(sub.name())
            .about(sub.about())
            .after_help(format!("Engines: {} (default {})", engines.join(", "), engines[0]))
            .arg(
                Arg::new("config").long("config").value_name("FILE").help("key=value file; flags override its entries"),
            );
        for k in KEYS.iter().filter(|k| k.in_subcommand(sub)) {
            sc = sc.arg(Arg::new(k.name).long(k.name).value_name("VALUE").help(k.help));
        }
        cmd = cmd.subcommand(sc);
    }
    cmd
}

/// Reads `key=value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut entries = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected key=value, got {line:?}", n + 1)))?;
        entries.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(entries)
}

pub fn parse_config<I, T>(args: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = command().try_get_matches_from(args)?;
    let (name, sub_matches) = matches.subcommand().expect("subcommand is required");
    let sub = Subcommand::from_name(name).expect("registered subcommand");

    let mut given: BTreeMap<String, String> = BTreeMap::new();
    let mut layout_entries: Vec<(String, String)> = Vec::new();
    if let Some(path) = sub_matches.get_one::<String>("config") {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config file {path}: {e}")))?;
        for (k, v) in parse_config_text(&text)? {
            if k.starts_with("field.") {
                layout_entries.push((k, v));
            } else {
                match find_key(&k) {
                    Some(key) if key.in_subcommand(sub) => {
                        given.insert(k, v);
                    }
                    Some(_) => return Err(usage(format!("key `{k}` does not apply to {sub}"))),
                    None => return Err(usage(format!("unknown key `{k}`"))),
                }
            }
        }
    }
    overlay_flags(sub, sub_matches, &mut given);

    let engine: EngineKind = match given.get("engine") {
        Some(v) => v.parse().map_err(|e: String| usage(format!("key `engine`: {e}")))?,
        None => sub.engines()[0],
    };
    if !sub.engines().contains(&engine) {
        let names: Vec<&str> = sub.engines().iter().map(|e| e.name()).collect();
        return Err(usage(format!("engine {engine} is not available for {sub} (choose {})", names.join(", "))));
    }
    for k in given.keys() {
        let key = find_key(k).expect("validated above");
        if !key.in_engine(engine) {
            return Err(usage(format!("key `{k}` does not apply to engine {engine}")));
        }
    }
    if !layout_entries.is_empty() && !(matches!(sub, DeJong | Bump | Vessel | PaDemo) && engine != GaReal) {
        return Err(usage(format!(
            "key `{}` needs a bit-string engine on dejong, bump, vessel or pa-demo",
            layout_entries[0].0
        )));
    }

    let mut resolved = BTreeMap::new();
    for k in KEYS.iter().filter(|k| k.in_subcommand(sub) && k.in_engine(engine)) {
        let v = given.get(k.name).cloned().unwrap_or_else(|| default_value(sub, engine, k.name));
        resolved.insert(k.name.to_string(), v);
    }
    Resolver { resolved: &resolved }.build(sub, engine, &layout_entries, resolved.clone())
}

fn overlay_flags(sub: Subcommand, m: &ArgMatches, given: &mut BTreeMap<String, String>) {
    for k in KEYS.iter().filter(|k| k.in_subcommand(sub)) {
        if let Some(v) = m.get_one::<String>(k.name) {
            given.insert(k.name.to_string(), v.clone());
        }
    }
}

struct Resolver<'a> {
    resolved: &'a BTreeMap<String, String>,
}

impl Resolver<'_> {
    fn raw(&self, key: &str) -> &str {
        self.resolved.get(key).map(String::as_str).expect("resolved key")
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: fmt::Display,
    {
        let v = self.raw(key);
        v.parse().map_err(|e| usage(format!("invalid value {v:?} for key `{key}`: {e}")))
    }

    fn optional<T: FromStr>(&self, key: &str, none: &str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        if self.raw(key) == none {
            Ok(None)
        } else {
            self.get(key).map(Some)
        }
    }

    fn list(&self, key: &str, len: usize) -> Result<Vec<f64>, CliError> {
        let v = self.raw(key);
        let items = v
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| usage(format!("invalid value {v:?} for key `{key}`: {e}")))?;
        if items.len() != len {
            return Err(usage(format!("key `{key}` needs {len} comma-separated numbers, got {}", items.len())));
        }
        Ok(items)
    }

    fn execution(&self) -> Result<Execution, CliError> {
        match self.raw("execution") {
            "parallel" => Ok(Execution::Parallel),
            "sequential" => Ok(Execution::Sequential),
            v => Err(usage(format!("invalid value {v:?} for key `execution`: expected parallel or sequential"))),
        }
    }

    fn engine(&self, engine: EngineKind) -> Result<EngineConfig, CliError> {
        let execution = self.execution()?;
        let penalty = if self.resolved.contains_key("penalty") { self.get("penalty")? } else { 1e3 };
        let cfg = match engine {
            Ga => {
                let cfg = GaConfig {
                    population_size: self.get("pop")?,
                    max_generations: self.get("generations")?,
                    crossover_prob: self.get("pc")?,
                    mutation_prob: self.get("pm")?,
                    inversion_prob: self.get("inversion")?,
                    crossover_points: self.get("points")?,
                    elitism_count: self.get("elitism")?,
                    fitness_shift: FitnessShift::Adaptive { margin: self.get("margin")? },
                    penalty_coefficient: penalty,
                    penalty_growth_interval: if self.resolved.contains_key("penalty-interval") {
                        self.get("penalty-interval")?
                    } else {
                        0
                    },
                    execution,
                };
                cfg.validate().map_err(|e| usage(e.to_string()))?;
                EngineConfig::Ga(cfg)
            }
            GaReal => {
                let cfg = RealGaConfig {
                    population_size: self.get("pop")?,
                    max_generations: self.get("generations")?,
                    blend: self.get("blend")?,
                    sigma: self.get("sigma")?,
                    mutation_prob: self.get("pm")?,
                    elitism_count: self.get("elitism")?,
                    max_evaluations: self.optional("budget", "none")?,
                    penalty_coefficient: penalty,
                    execution,
                };
                cfg.validate().map_err(|e| usage(e.to_string()))?;
                EngineConfig::GaReal(cfg)
            }
            Pa => {
                let cfg = PaConfig {
                    v_max: self.get("vmax")?,
                    affinity: self.get("affinity")?,
                    light_low: self.get("light-low")?,
                    light_high: self.get("light-high")?,
                    string_bits: self.get("bits")?,
                    strings_per_parameter: self.get("strings")?,
                    max_iterations: self.get("iterations")?,
                    stall_window: self.get("stall")?,
                    max_segment: self.get("max-segment")?,
                    flip_prob: self.optional("flip-prob", "auto")?,
                    penalty_coefficient: penalty,
                    execution,
                };
                cfg.validate().map_err(|e| usage(e.to_string()))?;
                EngineConfig::Pa(cfg)
            }
        };
        Ok(cfg)
    }

    fn layout(
        &self,
        entries: &[(String, String)],
        fallback: impl FnOnce() -> Result<GenomeLayout, CliError>,
    ) -> Result<GenomeLayout, CliError> {
        if entries.is_empty() {
            fallback()
        } else {
            GenomeLayout::from_config(entries.iter().map(|(k, v)| (k.as_str(), v.as_str())))
                .map_err(|e| usage(e.to_string()))
        }
    }

    fn build(
        &self,
        sub: Subcommand,
        engine: EngineKind,
        layout_entries: &[(String, String)],
        resolved: BTreeMap<String, String>,
    ) -> Result<RunConfig, CliError> {
        let engine_cfg = self.engine(engine)?;
        let bits = || -> Result<usize, CliError> {
            if self.resolved.contains_key("bits") {
                self.get("bits")
            } else {
                Ok(16)
            }
        };
        let task = match sub {
            DeJong | PaDemo => {
                let alpha: u32 = self.get("alpha")?;
                let half_length: f64 = self.get("half-length")?;
                let dim: usize = self.get("dim")?;
                let layout = self.layout(layout_entries, || {
                    GenomeLayout::uniform(dim, bits()?, -half_length, half_length).map_err(|e| usage(e.to_string()))
                })?;
                Task::DeJong { alpha, half_length, dim, layout }
            }
            Bump => {
                let layout = self.layout(layout_entries, || {
                    let (lo, hi) = KeaneBump.bounds()[0];
                    GenomeLayout::uniform(2, bits()?, lo, hi).map_err(|e| usage(e.to_string()))
                })?;
                Task::Bump { layout }
            }
            Vessel => {
                let layout = self.layout(layout_entries, || Ok(GenomeLayout::pressure_vessel()))?;
                Task::Vessel { variant: self.get("variant")?, layout }
            }
            FemInverse => {
                let v = self.list("target", 8)?;
                let target = MaterialVector::from_slice(&v).expect("8 values");
                for i in 0..4 {
                    let (e, nu) = (target.modulus(i), target.poisson(i));
                    if !(e > 0.0 && nu > 0.0 && nu < 0.5) {
                        return Err(usage(format!("key `target`: element {} needs E > 0 and 0 < nu < 0.5", i + 1)));
                    }
                }
                Task::FemInverse { target }
            }
            Ivbv => {
                let t = self.list("times", 3)?;
                let bounds = (self.get("kappa-lo")?, self.get("kappa-hi")?);
                let grid: usize = self.get("grid")?;
                if grid == 0 {
                    return Err(usage("key `grid` must be positive"));
                }
                Task::Ivbv {
                    grid,
                    times: [t[0], t[1], t[2]],
                    bounds,
                    truth: self.optional::<PathBuf>("kappa-file", "none")?,
                }
            }
        };
        if let (
            Task::DeJong { layout, .. } | Task::Bump { layout } | Task::Vessel { layout, .. },
            EngineConfig::Pa(pa),
        ) = (&task, &engine_cfg)
        {
            if let Some(i) = layout
                .fields()
                .iter()
                .position(|f| !matches!(f, FieldSpec::Continuous { bits, .. } if *bits == pa.string_bits))
            {
                return Err(usage(format!(
                    "key `field.{i}.bits`: the pa engine needs continuous fields of {} bits",
                    pa.string_bits
                )));
            }
        }
        let mut resolved = resolved;
        let seed = self.get("seed")?;
        let repeat: u64 = self.get("repeat")?;
        if repeat == 0 {
            return Err(usage("key `repeat` must be at least 1"));
        }
        let out = PathBuf::from(self.raw("out"));
        resolved.remove("out");
        resolved.remove("repeat");
        let layout_lines = if layout_entries.is_empty() {
            Vec::new()
        } else {
            match &task {
                Task::DeJong { layout, .. } | Task::Bump { layout } | Task::Vessel { layout, .. } => {
                    layout.to_config_lines()
                }
                _ => Vec::new(),
            }
        };
        Ok(RunConfig { subcommand: sub, engine: engine_cfg, task, seed, repeat, out, resolved, layout_lines })
    }
}
