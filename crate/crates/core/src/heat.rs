//! Variable-diffusivity heat equation on the unit square and the inverse
//! estimation of the diffusivity field from temperature snapshots.
//!
//! The grid has `n × n` interior nodes at `(i·h, j·h)`, `i, j = 1..=n`,
//! `h = 1/(n+1)`; the boundary ring sits on the edges of the square and is
//! held at zero. Fields are stored row-major with `j` (the y index) as the row.
//! Face diffusivity is the mean of the two adjacent nodes; faces touching the
//! boundary use the interior node's value. Time stepping is forward Euler.

use std::fmt::Write as _;

use thiserror::Error;

use crate::ga::{evolve_real, GaError, RealGaConfig};
use crate::problems::Problem;
use crate::rng::RandomSource;
use crate::trace::{Annotation, Genome, RunTrace};

/// Scale constant of the error metrics.
pub const METRIC_SCALE: f64 = 100.0;

/// Safety factor applied to the explicit stability bound.
pub const STABILITY_FACTOR: f64 = 0.9;

pub const DEFAULT_TIMES: [f64; 3] = [0.01, 0.02, 0.04];
pub const DEFAULT_KAPPA_BOUNDS: (f64, f64) = (0.1, 5.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeatError {
    #[error("grid size must be positive")]
    EmptyGrid,
    #[error("expected {expected} values for the grid, got {actual}")]
    Shape { expected: usize, actual: usize },
    #[error("diffusivity at ({i}, {j}) must be positive and finite, got {value}")]
    NonPositive { i: usize, j: usize, value: f64 },
    #[error("time step {dt} exceeds the stability limit; use dt <= {admissible}")]
    Unstable { dt: f64, admissible: f64 },
    #[error("invalid measurement times: {0}")]
    Times(String),
    #[error("grids do not match ({0} vs {1})")]
    GridMismatch(usize, usize),
    #[error("reference field is identically zero")]
    ZeroDenominator,
    #[error("invalid diffusivity bounds [{0}, {1}]")]
    Bounds(f64, f64),
    #[error("CSV line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Ga(#[from] GaError),
}

pub fn spacing(n: usize) -> f64 {
    1.0 / (n as f64 + 1.0)
}

/// Largest stable explicit step, `h²/(4 κ_max)`.
pub fn stability_limit(kappa_max: f64, h: f64) -> f64 {
    h * h / (4.0 * kappa_max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiffusivityField {
    n: usize,
    values: Vec<f64>,
}

impl DiffusivityField {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self, HeatError> {
        if n == 0 {
            return Err(HeatError::EmptyGrid);
        }
        if values.len() != n * n {
            return Err(HeatError::Shape { expected: n * n, actual: values.len() });
        }
        if let Some(k) = values.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(HeatError::NonPositive { i: k % n, j: k / n, value: values[k] });
        }
        Ok(Self { n, values })
    }

    pub fn uniform(n: usize, kappa: f64) -> Result<Self, HeatError> {
        Self::new(n, vec![kappa; n * n])
    }

    /// Samples `f(x, y)` at the interior nodes.
    pub fn from_fn(n: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self, HeatError> {
        let h = spacing(n);
        let values = (0..n * n).map(|k| f((k % n + 1) as f64 * h, (k / n + 1) as f64 * h)).collect();
        Self::new(n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.n + i]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::MIN, f64::max)
    }

    pub fn to_csv(&self) -> String {
        matrix_csv(self.n, &self.values)
    }

    pub fn from_csv(text: &str) -> Result<Self, HeatError> {
        let (n, values) = parse_matrix(text)?;
        Self::new(n, values)
    }
}

/// Smooth two-bump test field with values in `[0.5, 2.0]`:
/// `0.5 + 1.2·exp(−|p − (0.3, 0.3)|²/0.05) + 0.9·exp(−|p − (0.7, 0.65)|²/0.03)`,
/// clamped to 2.
pub fn synthetic_kappa(x: f64, y: f64) -> f64 {
    let bump = |cx: f64, cy: f64, w: f64| (-((x - cx).powi(2) + (y - cy).powi(2)) / w).exp();
    (0.5 + 1.2 * bump(0.3, 0.3, 0.05) + 0.9 * bump(0.7, 0.65, 0.03)).min(2.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemperatureField {
    n: usize,
    values: Vec<f64>,
    pub time: f64,
}

impl TemperatureField {
    /// `u = 1` at every interior node, `t = 0`.
    pub fn initial(n: usize) -> Self {
        Self { n, values: vec![1.0; n * n], time: 0.0 }
    }

    pub fn new(n: usize, values: Vec<f64>, time: f64) -> Result<Self, HeatError> {
        if n == 0 {
            return Err(HeatError::EmptyGrid);
        }
        if values.len() != n * n {
            return Err(HeatError::Shape { expected: n * n, actual: values.len() });
        }
        Ok(Self { n, values, time })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.n + i]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Snapshots at three increasing times on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSet {
    pub snapshots: [TemperatureField; 3],
}

impl MeasurementSet {
    pub fn n(&self) -> usize {
        self.snapshots[0].n
    }

    pub fn times(&self) -> [f64; 3] {
        [0, 1, 2].map(|k| self.snapshots[k].time)
    }

    /// One block per snapshot, each preceded by a `# t=<time>` line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for s in &self.snapshots {
            let _ = writeln!(out, "# t={}", s.time);
            out.push_str(&matrix_csv(s.n, &s.values));
        }
        out
    }
}

fn matrix_csv(n: usize, values: &[f64]) -> String {
    let mut out = String::new();
    for row in values.chunks(n) {
        let line: Vec<String> = row.iter().map(f64::to_string).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn parse_matrix(text: &str) -> Result<(usize, Vec<f64>), HeatError> {
    let mut values = Vec::new();
    let mut n = 0;
    let mut rows = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| HeatError::Csv { line: idx + 1, message: e.to_string() })?;
        if rows == 0 {
            n = row.len();
        } else if row.len() != n {
            return Err(HeatError::Csv {
                line: idx + 1,
                message: format!("expected {n} columns, found {}", row.len()),
            });
        }
        values.extend(row);
        rows += 1;
    }
    if rows != n {
        return Err(HeatError::Csv { line: 0, message: format!("matrix must be square, got {rows}×{n}") });
    }
    Ok((n, values))
}

/// Face diffusivities and the update ratio for one `(κ, dt, h)`.
struct Stencil {
    n: usize,
    /// `east[j*(n+1) + i]` is the face left of node `i` in row `j`.
    east: Vec<f64>,
    /// `north[i*(n+1) + j]` is the face below node `j` in column `i`.
    north: Vec<f64>,
    ratio: f64,
}

impl Stencil {
    fn new(kappa: &DiffusivityField, dt: f64, h: f64) -> Result<Self, HeatError> {
        let admissible = stability_limit(kappa.max(), h);
        if !(dt > 0.0) || dt > admissible * (1.0 + 1e-12) {
            return Err(HeatError::Unstable { dt, admissible });
        }
        let n = kappa.n;
        let face = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => 0.5 * (a + b),
            (Some(v), None) | (None, Some(v)) => v,
            (None, None) => unreachable!(),
        };
        let at = |i: usize, j: usize| kappa.get(i, j);
        let mut east = vec![0.0; (n + 1) * n];
        let mut north = vec![0.0; (n + 1) * n];
        for j in 0..n {
            for f in 0..=n {
                let left = (f > 0).then(|| at(f - 1, j));
                let right = (f < n).then(|| at(f, j));
                east[j * (n + 1) + f] = face(left, right);
            }
        }
        for i in 0..n {
            for f in 0..=n {
                let below = (f > 0).then(|| at(i, f - 1));
                let above = (f < n).then(|| at(i, f));
                north[i * (n + 1) + f] = face(below, above);
            }
        }
        Ok(Self { n, east, north, ratio: dt / (h * h) })
    }

    fn apply(&self, u: &[f64], out: &mut [f64]) {
        let n = self.n;
        let val = |i: isize, j: isize| {
            if i < 0 || j < 0 || i >= n as isize || j >= n as isize {
                0.0
            } else {
                u[j as usize * n + i as usize]
            }
        };
        for j in 0..n {
            for i in 0..n {
                let c = u[j * n + i];
                let (ii, jj) = (i as isize, j as isize);
                let ke = self.east[j * (n + 1) + i + 1];
                let kw = self.east[j * (n + 1) + i];
                let kn = self.north[i * (n + 1) + j + 1];
                let ks = self.north[i * (n + 1) + j];
                let flux = ke * (val(ii + 1, jj) - c) - kw * (c - val(ii - 1, jj)) + kn * (val(ii, jj + 1) - c)
                    - ks * (c - val(ii, jj - 1));
                out[j * n + i] = c + self.ratio * flux;
            }
        }
    }
}

fn check_grid(a: usize, b: usize) -> Result<(), HeatError> {
    if a == b {
        Ok(())
    } else {
        Err(HeatError::GridMismatch(a, b))
    }
}

/// One explicit step. Fails with the admissible step when
/// `dt > h²/(4 max κ)`.
pub fn step(u: &TemperatureField, kappa: &DiffusivityField, dt: f64, h: f64) -> Result<TemperatureField, HeatError> {
    check_grid(u.n, kappa.n)?;
    let stencil = Stencil::new(kappa, dt, h)?;
    let mut out = vec![0.0; u.values.len()];
    stencil.apply(&u.values, &mut out);
    Ok(TemperatureField { n: u.n, values: out, time: u.time + dt })
}

/// Step counts for three measurement times on a fixed `dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: [usize; 3],
}

impl TimeGrid {
    /// `times` must be positive, increasing and integer multiples of `dt`.
    pub fn new(times: [f64; 3], dt: f64) -> Result<Self, HeatError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(HeatError::Times(format!("time step must be positive, got {dt}")));
        }
        check_times(times)?;
        let mut steps = [0; 3];
        for (k, &t) in times.iter().enumerate() {
            let q = t / dt;
            let r = q.round();
            if (q - r).abs() > 1e-9 * q.max(1.0) {
                return Err(HeatError::Times(format!("{t} is not a multiple of dt = {dt}")));
            }
            steps[k] = r as usize;
        }
        Ok(Self { dt, steps })
    }

    /// Largest step not above `STABILITY_FACTOR · h²/(4 κ_max)` that divides
    /// all three times.
    pub fn for_bound(times: [f64; 3], kappa_max: f64, h: f64) -> Result<Self, HeatError> {
        check_times(times)?;
        let target = STABILITY_FACTOR * stability_limit(kappa_max, h);
        let first = (times[0] / target).ceil().max(1.0) as usize;
        (first..first.saturating_mul(1000).max(first + 1))
            .find_map(|m| Self::new(times, times[0] / m as f64).ok())
            .ok_or_else(|| HeatError::Times(format!("no common time step for {times:?}")))
    }

    pub fn times(&self) -> [f64; 3] {
        self.steps.map(|s| s as f64 * self.dt)
    }
}

fn check_times(times: [f64; 3]) -> Result<(), HeatError> {
    if !(times[0] > 0.0 && times[0] < times[1] && times[1] < times[2] && times[2].is_finite()) {
        return Err(HeatError::Times(format!("need 0 < t1 < t2 < t3, got {times:?}")));
    }
    Ok(())
}

/// Snapshots at `times`, starting from `u = 1`.
pub fn simulate(kappa: &DiffusivityField, times: [f64; 3], dt: f64, h: f64) -> Result<MeasurementSet, HeatError> {
    simulate_on(kappa, &TimeGrid::new(times, dt)?, h)
}

pub fn simulate_on(kappa: &DiffusivityField, clock: &TimeGrid, h: f64) -> Result<MeasurementSet, HeatError> {
    let stencil = Stencil::new(kappa, clock.dt, h)?;
    let n = kappa.n;
    let mut cur = vec![1.0; n * n];
    let mut next = vec![0.0; n * n];
    let mut done = 0;
    let snapshots = clock.steps.map(|target| {
        while done < target {
            stencil.apply(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
            done += 1;
        }
        TemperatureField { n, values: cur.clone(), time: target as f64 * clock.dt }
    });
    Ok(MeasurementSet { snapshots })
}

fn relative_l1<'a>(
    reference: impl Iterator<Item = &'a f64>,
    other: impl Iterator<Item = &'a f64>,
) -> Result<f64, HeatError> {
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in reference.zip(other) {
        num += (a - b).abs();
        den += a.abs();
    }
    if den == 0.0 {
        return Err(HeatError::ZeroDenominator);
    }
    Ok(METRIC_SCALE * num / den)
}

/// `A Σ|u_measured − u_computed| / Σ|u_measured|`, summed over the grid and all
/// three snapshots.
pub fn error_u(measured: &MeasurementSet, computed: &MeasurementSet) -> Result<f64, HeatError> {
    check_grid(measured.n(), computed.n())?;
    let times = (measured.times(), computed.times());
    if times.0.iter().zip(&times.1).any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0)) {
        return Err(HeatError::Times(format!("snapshot times differ: {:?} vs {:?}", times.0, times.1)));
    }
    relative_l1(measured.snapshots.iter().flat_map(|s| &s.values), computed.snapshots.iter().flat_map(|s| &s.values))
}

/// `A Σ|κ_known − κ_predicted| / Σ|κ_known|`.
pub fn error_kappa(known: &DiffusivityField, predicted: &DiffusivityField) -> Result<f64, HeatError> {
    check_grid(known.n, predicted.n)?;
    relative_l1(known.values.iter(), predicted.values.iter())
}

/// Grid, measurement times, gene bounds and the shared time step. The step is
/// fixed from the upper gene bound so every candidate runs on the same clock.
#[derive(Clone, Debug, PartialEq)]
pub struct IvbvSetup {
    pub n: usize,
    pub h: f64,
    pub kappa_bounds: (f64, f64),
    pub clock: TimeGrid,
}

impl IvbvSetup {
    pub fn new(n: usize, times: [f64; 3], kappa_bounds: (f64, f64)) -> Result<Self, HeatError> {
        if n == 0 {
            return Err(HeatError::EmptyGrid);
        }
        let (lo, hi) = kappa_bounds;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(HeatError::Bounds(lo, hi));
        }
        let h = spacing(n);
        Ok(Self { n, h, kappa_bounds, clock: TimeGrid::for_bound(times, hi, h)? })
    }

    pub fn measure(&self, kappa: &DiffusivityField) -> Result<MeasurementSet, HeatError> {
        check_grid(self.n, kappa.n)?;
        simulate_on(kappa, &self.clock, self.h)
    }
}

/// `E_u` between the measurements and the forward solve of a candidate field.
#[derive(Clone, Debug)]
pub struct DiffusivityInverse {
    setup: IvbvSetup,
    measured: MeasurementSet,
}

impl DiffusivityInverse {
    pub fn new(setup: IvbvSetup, measured: MeasurementSet) -> Result<Self, HeatError> {
        check_grid(setup.n, measured.n())?;
        let expected = setup.clock.times();
        if expected.iter().zip(measured.times()).any(|(a, b)| (a - b).abs() > 1e-12 * a.max(1.0)) {
            return Err(HeatError::Times(format!(
                "measurements at {:?} do not match the setup times {expected:?}",
                measured.times()
            )));
        }
        if measured.snapshots.iter().all(|s| s.values.iter().all(|&v| v == 0.0)) {
            return Err(HeatError::ZeroDenominator);
        }
        Ok(Self { setup, measured })
    }

    pub fn setup(&self) -> &IvbvSetup {
        &self.setup
    }

    pub fn evaluate(&self, kappa: &DiffusivityField) -> Result<f64, HeatError> {
        error_u(&self.measured, &self.setup.measure(kappa)?)
    }
}

impl Problem for DiffusivityInverse {
    fn name(&self) -> &str {
        "ivbv"
    }

    fn dimension(&self) -> usize {
        self.setup.n * self.setup.n
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![self.setup.kappa_bounds; self.dimension()]
    }

    fn objective(&self, x: &[f64]) -> f64 {
        DiffusivityField::new(self.setup.n, x.to_vec()).and_then(|k| self.evaluate(&k)).unwrap_or(f64::NAN)
    }
}

/// Runs the real-coded GA on `E_u`. With a known field, each record is
/// annotated with the `E_κ` of its best genome.
pub fn ivbv_inverse(
    problem: &DiffusivityInverse,
    cfg: &RealGaConfig,
    src: &mut RandomSource,
    truth: Option<&DiffusivityField>,
) -> Result<(DiffusivityField, RunTrace), HeatError> {
    if let Some(t) = truth {
        check_grid(problem.setup.n, t.n)?;
    }
    let mut trace = evolve_real(problem, cfg, src)?;
    let estimate = DiffusivityField::new(problem.setup.n, trace.best.decoded.clone())?;
    if let Some(t) = truth {
        for r in &mut trace.records {
            if let Genome::Real(v) = &r.best_genome {
                let predicted = DiffusivityField::new(problem.setup.n, v.clone())?;
                r.annotation = Annotation::DiffusivityError(error_kappa(t, &predicted)?);
            }
        }
    }
    Ok((estimate, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn clock(n: usize, kmax: f64) -> (f64, TimeGrid) {
        let h = spacing(n);
        (h, TimeGrid::for_bound(DEFAULT_TIMES, kmax, h).unwrap())
    }

    fn rotate(n: usize, v: &[f64]) -> Vec<f64> {
        // (i, j) -> (j, n-1-i)
        let mut out = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                out[(n - 1 - i) * n + j] = v[j * n + i];
            }
        }
        out
    }

    #[test]
    fn zero_field_is_equilibrium() {
        let k = DiffusivityField::uniform(5, 1.3).unwrap();
        let h = spacing(5);
        let u = TemperatureField::new(5, vec![0.0; 25], 0.0).unwrap();
        let next = step(&u, &k, 0.5 * stability_limit(1.3, h), h).unwrap();
        assert!(next.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hot_cell_spreads_evenly() {
        let n = 5;
        let h = spacing(n);
        let mut v = vec![0.0; n * n];
        v[2 * n + 2] = 1.0;
        let u = TemperatureField::new(n, v, 0.0).unwrap();
        let k = DiffusivityField::uniform(n, 0.7).unwrap();
        let dt = 0.8 * stability_limit(0.7, h);
        let next = step(&u, &k, dt, h).unwrap();
        let inc = next.get(1, 2);
        assert!(inc > 0.0);
        for (i, j) in [(3, 2), (2, 1), (2, 3)] {
            assert_eq!(next.get(i, j), inc);
        }
        assert_relative_eq!(inc, 0.7 * dt / (h * h), max_relative = 1e-12);
        assert_relative_eq!(next.total(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn constant_kappa_matches_five_point_stencil() {
        let n = 4;
        let h = spacing(n);
        let kappa = 1.7;
        let dt = 0.9 * stability_limit(kappa, h);
        let mut src = RandomSource::new(3);
        let v: Vec<f64> = (0..n * n).map(|_| src.next_unit()).collect();
        let got = step(
            &TemperatureField::new(n, v.clone(), 0.0).unwrap(),
            &DiffusivityField::uniform(n, kappa).unwrap(),
            dt,
            h,
        )
        .unwrap();
        let at =
            |i: i32, j: i32| if (0..4).contains(&i) && (0..4).contains(&j) { v[(j * 4 + i) as usize] } else { 0.0 };
        for j in 0..4 {
            for i in 0..4 {
                let lap = at(i + 1, j) + at(i - 1, j) + at(i, j + 1) + at(i, j - 1) - 4.0 * at(i, j);
                let expected = at(i, j) + dt * kappa / (h * h) * lap;
                assert_relative_eq!(got.get(i as usize, j as usize), expected, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn unstable_step_reports_limit() {
        let k = DiffusivityField::uniform(4, 2.0).unwrap();
        let h = spacing(4);
        let limit = stability_limit(2.0, h);
        match step(&TemperatureField::initial(4), &k, 1.01 * limit, h) {
            Err(HeatError::Unstable { admissible, .. }) => assert_relative_eq!(admissible, limit),
            other => panic!("{other:?}"),
        }
        assert!(step(&TemperatureField::initial(4), &k, limit, h).is_ok());
    }

    #[test]
    fn first_snapshot_at_dt_is_one_step() {
        let n = 6;
        let h = spacing(n);
        let k = DiffusivityField::from_fn(n, synthetic_kappa).unwrap();
        let dt = 0.5 * stability_limit(k.max(), h);
        let m = simulate(&k, [dt, 2.0 * dt, 4.0 * dt], dt, h).unwrap();
        let once = step(&TemperatureField::initial(n), &k, dt, h).unwrap();
        assert_eq!(m.snapshots[0].values(), once.values());
    }

    #[test]
    fn heat_decreases_every_step() {
        let n = 8;
        let h = spacing(n);
        let k = DiffusivityField::from_fn(n, synthetic_kappa).unwrap();
        let dt = 0.9 * stability_limit(k.max(), h);
        let mut u = TemperatureField::initial(n);
        let mut total = u.total();
        for _ in 0..100 {
            u = step(&u, &k, dt, h).unwrap();
            assert!(u.total() < total);
            total = u.total();
        }
    }

    #[test]
    fn uniform_kappa_solution_has_rotation_symmetry() {
        let n = 7;
        let k = DiffusivityField::uniform(n, 1.1).unwrap();
        let (h, clock) = clock(n, 1.1);
        let m = simulate_on(&k, &clock, h).unwrap();
        for s in &m.snapshots {
            let r = rotate(n, s.values());
            for (a, b) in s.values().iter().zip(&r) {
                assert_relative_eq!(*a, *b, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn time_grid_divides_all_times() {
        let (_, c) = clock(8, 5.0);
        assert_eq!(c.steps, [18, 36, 72]);
        assert!(c.dt <= STABILITY_FACTOR * stability_limit(5.0, spacing(8)));
        assert!(TimeGrid::new([0.01, 0.02, 0.04], 0.003).is_err());
        assert!(TimeGrid::new([0.02, 0.01, 0.04], 0.01).is_err());
    }

    #[test]
    fn synthetic_field_range() {
        let k = DiffusivityField::from_fn(32, synthetic_kappa).unwrap();
        assert!(k.values().iter().all(|&v| (0.5..=2.0).contains(&v)));
        assert!(k.max() > 1.5);
    }

    #[test]
    fn metric_examples() {
        let k = DiffusivityField::from_fn(4, synthetic_kappa).unwrap();
        let doubled = DiffusivityField::new(4, k.values().iter().map(|v| 2.0 * v).collect()).unwrap();
        assert_eq!(error_kappa(&k, &k).unwrap(), 0.0);
        assert_relative_eq!(error_kappa(&k, &doubled).unwrap(), 100.0, max_relative = 1e-12);

        let (h, c) = clock(4, 2.0);
        let m = simulate_on(&k, &c, h).unwrap();
        let mut zero = m.clone();
        for s in &mut zero.snapshots {
            s.values.iter_mut().for_each(|v| *v = 0.0);
        }
        assert_eq!(error_u(&m, &m).unwrap(), 0.0);
        assert_relative_eq!(error_u(&m, &zero).unwrap(), 100.0, max_relative = 1e-12);
        assert_eq!(error_u(&zero, &m), Err(HeatError::ZeroDenominator));
    }

    #[test]
    fn csv_round_trip() {
        let k = DiffusivityField::from_fn(5, synthetic_kappa).unwrap();
        assert_eq!(DiffusivityField::from_csv(&k.to_csv()).unwrap(), k);
        assert!(matches!(DiffusivityField::from_csv("1,2\n3\n"), Err(HeatError::Csv { .. })));
        assert!(matches!(DiffusivityField::from_csv("1,2\n"), Err(HeatError::Csv { .. })));
        assert!(matches!(DiffusivityField::from_csv("1,0\n1,1\n"), Err(HeatError::NonPositive { .. })));
    }

    #[test]
    fn objective_zero_at_truth_and_nan_outside_domain() {
        let setup = IvbvSetup::new(5, DEFAULT_TIMES, DEFAULT_KAPPA_BOUNDS).unwrap();
        let truth = DiffusivityField::from_fn(5, synthetic_kappa).unwrap();
        let problem = DiffusivityInverse::new(setup.clone(), setup.measure(&truth).unwrap()).unwrap();
        assert_eq!(problem.objective(truth.values()), 0.0);
        assert!(problem.objective(&[1.0; 25]) > 0.0);
        assert!(problem.objective(&[-1.0; 25]).is_nan());
        assert!(problem.objective(&[50.0; 25]).is_nan());
    }

    #[test]
    fn inverse_small_grid_improves_and_logs_kappa_error() {
        let n = 3;
        let setup = IvbvSetup::new(n, DEFAULT_TIMES, DEFAULT_KAPPA_BOUNDS).unwrap();
        let truth = DiffusivityField::from_fn(n, synthetic_kappa).unwrap();
        let problem = DiffusivityInverse::new(setup.clone(), setup.measure(&truth).unwrap()).unwrap();
        let cfg = RealGaConfig { population_size: 20, max_generations: 150, ..Default::default() };
        let (estimate, trace) = ivbv_inverse(&problem, &cfg, &mut RandomSource::new(5), Some(&truth)).unwrap();
        let best: Vec<f64> = trace.best_objectives().collect();
        assert!(best.windows(2).all(|w| w[1] <= w[0]));
        assert!(best[best.len() - 1] < best[0] / 5.0);
        assert!(trace.records.iter().all(|r| matches!(r.annotation, Annotation::DiffusivityError(e) if e >= 0.0)));
        assert_eq!(estimate.values(), &trace.best.decoded[..]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn maximum_principle(
            n in 2usize..7,
            raw in proptest::collection::vec(0.1f64..5.0, 36),
            factor in 0.1f64..1.0
        ) {
            let k = DiffusivityField::new(n, raw[..n * n].to_vec()).unwrap();
            let h = spacing(n);
            let dt = factor * stability_limit(k.max(), h);
            let m = simulate(&k, [dt, 5.0 * dt, 40.0 * dt], dt, h).unwrap();
            for s in &m.snapshots {
                prop_assert!(s.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
            }
        }

        #[test]
        fn metrics_non_negative_and_scale_invariant(
            a in proptest::collection::vec(0.1f64..5.0, 16),
            b in proptest::collection::vec(0.1f64..5.0, 16),
            c in 0.01f64..100.0
        ) {
            let ka = DiffusivityField::new(4, a.clone()).unwrap();
            let kb = DiffusivityField::new(4, b.clone()).unwrap();
            let e = error_kappa(&ka, &kb).unwrap();
            prop_assert!(e >= 0.0);
            prop_assert_eq!(e == 0.0, a == b);
            let sa = DiffusivityField::new(4, a.iter().map(|v| v * c).collect()).unwrap();
            let sb = DiffusivityField::new(4, b.iter().map(|v| v * c).collect()).unwrap();
            prop_assert!((error_kappa(&sa, &sb).unwrap() - e).abs() <= 1e-9 * e.max(1.0));

            let h = spacing(4);
            let clock = TimeGrid::for_bound(DEFAULT_TIMES, 5.0, h).unwrap();
            let ma = simulate_on(&ka, &clock, h).unwrap();
            let mb = simulate_on(&kb, &clock, h).unwrap();
            let eu = error_u(&ma, &mb).unwrap();
            prop_assert!(eu >= 0.0);
            let scale = |m: &MeasurementSet| {
                let mut s = m.clone();
                for snap in &mut s.snapshots {
                    snap.values.iter_mut().for_each(|v| *v *= c);
                }
                s
            };
            prop_assert!((error_u(&scale(&ma), &scale(&mb)).unwrap() - eu).abs() <= 1e-9 * eu.max(1.0));
        }
    }
}
