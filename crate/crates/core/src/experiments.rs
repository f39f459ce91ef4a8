//! Duration sweeps, switch-count gaps and bisection locators for the
//! critical durations.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{BangOffControl, ControlRecord, ControlType};
use crate::error::{Error, Result};
use crate::optimizer::{
    best_over_ns_range, optimize_problem, optimize_switch_count_seeded, optimize_type, select_best,
    DurationMap, ObjectiveKind, OptimizationConfig, TypeOptimum, TypeProblem,
};

/// Gap above which a larger switch count counts as a genuine improvement.
pub const GAP_THRESHOLD: f64 = 1e-8;
/// Infidelity treated as unit fidelity when locating the speed limit.
pub const QSL_EPS: f64 = 1e-10;
/// Inconcurrence treated as unit concurrence.
pub const TAU_MIN_EPS: f64 = 1e-8;
pub const DEFAULT_PRECISION: f64 = 1e-5;

/// Best control for one `(T, ns)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub total_duration: f64,
    pub switch_count: usize,
    pub best_cost: f64,
    pub best_type: String,
    pub best_durations: Vec<f64>,
    pub wall_time_s: f64,
    pub converged: bool,
}

/// `min, min + step, ...` up to `max` inclusive.
pub fn uniform_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && step.is_finite()) {
        return Err(Error::InvalidArgument("grid bounds must be finite".into()));
    }
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("grid step must be positive, got {step}")));
    }
    if !(min > 0.0) {
        return Err(Error::InvalidArgument(format!("grid must start above 0, got {min}")));
    }
    if min > max {
        return Err(Error::InvalidArgument(format!("empty grid: {min} > {max}")));
    }
    let count = ((max - min) / step * (1.0 + 1e-12)).floor() as usize + 1;
    Ok((0..count).map(|k| min + k as f64 * step).collect())
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("duration grid is empty".into()));
    }
    if grid.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::InvalidArgument("grid durations must be positive and finite".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// One row per `(T, ns)` with `ns` in `0..=ns_max`, ordered by `T` then `ns`.
pub fn sweep(
    kind: ObjectiveKind,
    grid: &[f64],
    ns_max: usize,
    config: &OptimizationConfig,
) -> Result<Vec<SweepRow>> {
    validate_grid(grid)?;
    config.validate()?;
    let per_t: Vec<Result<Vec<SweepRow>>> = grid
        .par_iter()
        .map(|&t| {
            let range = best_over_ns_range(ns_max, t, kind, config)?;
            Ok(range
                .into_iter()
                .map(|r| SweepRow {
                    total_duration: t,
                    switch_count: r.switch_count,
                    best_cost: r.best_cost,
                    best_type: r.best.control_type.to_string(),
                    best_durations: r.best.best_durations,
                    wall_time_s: r.wall_time.as_secs_f64(),
                    converged: r.all_converged,
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::with_capacity(grid.len() * (ns_max + 1));
    for r in per_t {
        rows.extend(r?);
    }
    Ok(rows)
}

/// `cost(ns) - cost(ns + 1)` at the same `T` for every row; `None` for the
/// last switch count of each duration.
pub fn row_gaps(rows: &[SweepRow]) -> Vec<Option<f64>> {
    rows.iter()
        .map(|row| {
            rows.iter()
                .find(|r| r.total_duration == row.total_duration && r.switch_count == row.switch_count + 1)
                .map(|next| row.best_cost - next.best_cost)
        })
        .collect()
}

/// Writes rows as CSV, with a `delta_cost` column when `gaps` is set.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], gaps: bool, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["T", "ns", "cost", "best_type", "durations_json", "wall_time_s"];
    if gaps {
        header.push("delta_cost");
    }
    w.write_record(&header).map_err(csv_error)?;
    let deltas = if gaps { row_gaps(rows) } else { Vec::new() };
    for (k, row) in rows.iter().enumerate() {
        let durations = serde_json::to_string(&row.best_durations)
            .map_err(|e| Error::Io(e.to_string()))?;
        let mut record = vec![
            row.total_duration.to_string(),
            row.switch_count.to_string(),
            row.best_cost.to_string(),
            row.best_type.clone(),
            durations,
            row.wall_time_s.to_string(),
        ];
        if gaps {
            record.push(deltas[k].map(|d| d.to_string()).unwrap_or_default());
        }
        w.write_record(&record).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// One point of a gap curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub total_duration: f64,
    pub gap: f64,
}

/// `best(ns = i) - best(ns = i + 1)` at one duration, with the `i + 1`
/// optimum.
pub fn gap_at(
    kind: ObjectiveKind,
    total_duration: f64,
    i: usize,
    config: &OptimizationConfig,
) -> Result<(f64, TypeOptimum, bool)> {
    let range = best_over_ns_range(i + 1, total_duration, kind, config)?;
    let converged = range.iter().all(|r| r.all_converged);
    let gap = range[i].best_cost - range[i + 1].best_cost;
    Ok((gap, range[i + 1].best.clone(), converged))
}

pub fn gap_curve(
    kind: ObjectiveKind,
    grid: &[f64],
    i: usize,
    config: &OptimizationConfig,
) -> Result<Vec<GapPoint>> {
    validate_grid(grid)?;
    grid.par_iter()
        .map(|&t| {
            gap_at(kind, t, i, config).map(|(gap, _, _)| GapPoint {
                total_duration: t,
                gap,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CriticalTime {
    Tc,
    Tsb,
    Tqsl,
    #[serde(rename = "tau_c")]
    TauC,
    #[serde(rename = "tau_min")]
    TauMin,
}

impl CriticalTime {
    pub fn name(self) -> &'static str {
        match self {
            Self::Tc => "Tc",
            Self::Tsb => "Tsb",
            Self::Tqsl => "Tqsl",
            Self::TauC => "tau_c",
            Self::TauMin => "tau_min",
        }
    }
}

/// Result of a bisection search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalTimeEstimate {
    pub name: CriticalTime,
    /// Midpoint of the final bracket.
    pub value: f64,
    pub bracket: (f64, f64),
    pub detector_threshold: f64,
    pub seed: u64,
    /// Optimum found at the upper end of the final bracket.
    pub witness: ControlRecord,
    pub witness_cost: f64,
    pub evaluations: usize,
    /// Every optimization along the way had a converged start.
    pub converged: bool,
}

impl CriticalTimeEstimate {
    pub fn witness_control(&self) -> Result<BangOffControl> {
        self.witness.to_control()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("estimate serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| {
            Error::Parse(format!("line {} column {}: {e}", e.line(), e.column()))
        })
    }
}

struct Probe {
    crossed: bool,
    optimum: TypeOptimum,
    converged: bool,
}

struct Bisection {
    low: f64,
    high: f64,
    witness: TypeOptimum,
    evaluations: usize,
    converged: bool,
}

/// Shrinks `bracket` around the point where `probe` starts reporting
/// `crossed`. The probe sees the result of every previous call in order.
fn bisect<F>(bracket: (f64, f64), precision: f64, what: &str, mut probe: F) -> Result<Bisection>
where
    F: FnMut(f64) -> Result<Probe>,
{
    let (mut low, mut high) = bracket;
    if !(low.is_finite() && high.is_finite() && 0.0 < low && low < high) {
        return Err(Error::InvalidArgument(format!(
            "bracket must satisfy 0 < low < high, got ({low}, {high})"
        )));
    }
    if !(precision > 0.0 && precision.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "precision must be positive, got {precision}"
        )));
    }
    let at_low = probe(low)?;
    let at_high = probe(high)?;
    if at_low.crossed || !at_high.crossed {
        return Err(Error::BracketFailure {
            low,
            high,
            what: what.to_string(),
        });
    }
    let mut converged = at_low.converged && at_high.converged;
    let mut witness = at_high.optimum;
    let mut evaluations = 2;
    while high - low > precision {
        let mid = 0.5 * (low + high);
        let p = probe(mid)?;
        evaluations += 1;
        converged &= p.converged;
        if p.crossed {
            high = mid;
            witness = p.optimum;
        } else {
            low = mid;
        }
    }
    Ok(Bisection {
        low,
        high,
        witness,
        evaluations,
        converged,
    })
}

fn estimate(
    name: CriticalTime,
    threshold: f64,
    config: &OptimizationConfig,
    b: Bisection,
) -> CriticalTimeEstimate {
    CriticalTimeEstimate {
        name,
        value: 0.5 * (b.low + b.high),
        bracket: (b.low, b.high),
        detector_threshold: threshold,
        seed: config.rng_seed,
        witness_cost: b.witness.best_cost,
        witness: ControlRecord::from_control(&b.witness.control()),
        evaluations: b.evaluations,
        converged: b.converged,
    }
}

/// Smallest duration at which `ns = i + 1` beats `ns = i` by more than
/// `threshold`.
pub fn find_gap_onset(
    kind: ObjectiveKind,
    i: usize,
    bracket: (f64, f64),
    threshold: f64,
    precision: f64,
    config: &OptimizationConfig,
) -> Result<CriticalTimeEstimate> {
    config.validate()?;
    let what = format!("gap between switch counts {i} and {}", i + 1);
    let b = bisect(bracket, precision, &what, |t| {
        let (gap, optimum, converged) = gap_at(kind, t, i, config)?;
        Ok(Probe {
            crossed: gap > threshold,
            optimum,
            converged,
        })
    })?;
    let name = match kind {
        ObjectiveKind::StatePrepInfidelity => CriticalTime::Tc,
        ObjectiveKind::Inconcurrence => CriticalTime::TauC,
    };
    Ok(estimate(name, threshold, config, b))
}

/// Duration at which both outer bang segments of the `P0N` optimum vanish.
pub fn find_tsb(
    bracket: (f64, f64),
    precision: f64,
    config: &OptimizationConfig,
) -> Result<CriticalTimeEstimate> {
    config.validate()?;
    let p0n: ControlType = "P0N".parse()?;
    let b = bisect(bracket, precision, "vanishing P0N bang segment", |t| {
        let optimum = optimize_type(&p0n, t, ObjectiveKind::StatePrepInfidelity, config)?;
        let d = &optimum.best_durations;
        Ok(Probe {
            crossed: d[0].max(d[2]) < config.simplex_floor,
            converged: optimum.converged,
            optimum,
        })
    })?;
    Ok(estimate(CriticalTime::Tsb, config.simplex_floor, config, b))
}

/// Controls searched when testing reachability.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlFamily {
    /// Every type with this many switches.
    SwitchCount(usize),
    /// Explicit types, each with its own duration tying.
    Ansatz(Vec<(ControlType, DurationMap)>),
}

impl ControlFamily {
    /// `P_{t1} 0_{t2} P_{t3} 0_{t4} N_{t3} 0_{t2} N_{t1}`.
    pub fn symmetric_ansatz() -> Self {
        let t: ControlType = "P0P0N0N".parse().expect("valid type");
        Self::Ansatz(vec![(t, DurationMap::palindrome(7))])
    }
}

/// Best optimum over a family at one duration, plus its convergence flag.
pub fn family_best(
    kind: ObjectiveKind,
    family: &ControlFamily,
    total_duration: f64,
    config: &OptimizationConfig,
    seeds: &[BangOffControl],
) -> Result<(TypeOptimum, bool)> {
    match family {
        ControlFamily::SwitchCount(ns) => {
            let r = optimize_switch_count_seeded(*ns, total_duration, kind, config, seeds)?;
            let converged = r.all_converged();
            Ok((r.best, converged))
        }
        ControlFamily::Ansatz(members) => {
            if members.is_empty() {
                return Err(Error::InvalidArgument("ansatz has no types".into()));
            }
            let mut solved = Vec::with_capacity(members.len());
            for (t, map) in members {
                let warm: Vec<Vec<f64>> = seeds
                    .iter()
                    .filter(|s| s.control_type() == t)
                    .map(|s| s.durations().to_vec())
                    .collect();
                let problem = TypeProblem::new(t, total_duration, kind).with_map(map.clone());
                solved.push(optimize_problem(&problem, config, &warm)?);
            }
            let converged = solved.iter().all(|o| o.converged);
            Ok((select_best(&solved).clone(), converged))
        }
    }
}

/// Smallest duration at which the family reaches cost `eps`. Each probe is
/// warm-started from the optima at both ends of the current bracket.
pub fn estimate_reachability(
    kind: ObjectiveKind,
    family: &ControlFamily,
    eps: f64,
    bracket: (f64, f64),
    precision: f64,
    config: &OptimizationConfig,
) -> Result<CriticalTimeEstimate> {
    config.validate()?;
    let mut below: Option<BangOffControl> = None;
    let mut above: Option<BangOffControl> = None;
    let what = format!("{} cost reaching {eps:e}", kind.name());
    let b = bisect(bracket, precision, &what, |t| {
        let seeds: Vec<BangOffControl> = below.iter().chain(above.iter()).cloned().collect();
        let (optimum, converged) = family_best(kind, family, t, config, &seeds)?;
        let crossed = optimum.best_cost <= eps;
        if crossed {
            above = Some(optimum.control());
        } else {
            below = Some(optimum.control());
        }
        Ok(Probe {
            crossed,
            optimum,
            converged,
        })
    })?;
    let name = match kind {
        ObjectiveKind::StatePrepInfidelity => CriticalTime::Tqsl,
        ObjectiveKind::Inconcurrence => CriticalTime::TauMin,
    };
    Ok(estimate(name, eps, config, b))
}

/// Speed limit for state preparation with `ns` switches.
pub fn estimate_qsl(
    ns: usize,
    infidelity_eps: f64,
    bracket: (f64, f64),
    precision: f64,
    config: &OptimizationConfig,
) -> Result<CriticalTimeEstimate> {
    estimate_reachability(
        ObjectiveKind::StatePrepInfidelity,
        &ControlFamily::SwitchCount(ns),
        infidelity_eps,
        bracket,
        precision,
        config,
    )
}

/// Minimal time to unit concurrence from `|00⟩` with `ns` switches.
pub fn estimate_tau_min(
    ns: usize,
    inconcurrence_eps: f64,
    bracket: (f64, f64),
    precision: f64,
    config: &OptimizationConfig,
) -> Result<CriticalTimeEstimate> {
    estimate_reachability(
        ObjectiveKind::Inconcurrence,
        &ControlFamily::SwitchCount(ns),
        inconcurrence_eps,
        bracket,
        precision,
        config,
    )
}
