//! Multi-start quasi-Newton search over duration vectors.
//!
//! For a fixed control type the durations live on the simplex
//! `{t_k >= 0, Σ t_k = T}`. The simplex is mapped smoothly from free
//! variables (see [`simplex`]), every start runs BFGS with adjoint gradients,
//! and the best start is cleaned up: segments shorter than the floor become
//! exact zeros and the point is polished once more.

pub mod bfgs;
pub mod objective;
pub mod simplex;

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{enumerate_types, BangOffControl, ControlLevel, ControlType};
use crate::error::{Error, Result};

use self::bfgs::{BfgsSettings, Termination};
pub use self::objective::{objective, objective_and_gradient, ObjectiveKind};
use self::objective::Workspace;
pub use self::simplex::DurationMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizationConfig {
    pub n_starts: usize,
    pub rng_seed: u64,
    /// BFGS stops once `‖∇‖∞` falls below this.
    pub gradient_tolerance: f64,
    /// BFGS stops once an accepted step changes the cost by less than this.
    pub cost_tolerance: f64,
    pub max_iterations: usize,
    /// Durations below this are clamped to exactly zero.
    pub simplex_floor: f64,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        Self {
            n_starts: 100,
            rng_seed: 0,
            gradient_tolerance: 1e-12,
            cost_tolerance: 1e-15,
            max_iterations: 2000,
            simplex_floor: 1e-6,
        }
    }
}

impl OptimizationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_starts == 0 {
            return Err(Error::InvalidArgument("n_starts must be at least 1".into()));
        }
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.gradient_tolerance) || !positive(self.cost_tolerance) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        if !(self.simplex_floor >= 0.0) {
            return Err(Error::InvalidArgument("simplex_floor must be non-negative".into()));
        }
        Ok(())
    }

    fn bfgs(&self) -> BfgsSettings {
        BfgsSettings {
            gradient_tolerance: self.gradient_tolerance,
            cost_tolerance: self.cost_tolerance,
            max_iterations: self.max_iterations,
        }
    }
}

/// Best duration vector found for one control type at one total duration.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeOptimum {
    pub control_type: ControlType,
    pub total_duration: f64,
    pub best_durations: Vec<f64>,
    pub best_cost: f64,
    /// At least one start met a BFGS stopping rule before the iteration cap.
    pub converged: bool,
    pub starts_used: usize,
}

impl TypeOptimum {
    pub fn control(&self) -> BangOffControl {
        BangOffControl::new(self.control_type.clone(), self.best_durations.clone())
            .expect("optimizer keeps lengths in sync")
    }

    /// `true` if `self` should be preferred over `other`: strictly lower
    /// cost, or equal cost and an earlier type.
    pub fn beats(&self, other: &TypeOptimum) -> bool {
        match self.best_cost.total_cmp(&other.best_cost) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => self.control_type < other.control_type,
        }
    }
}

/// Problem definition for one multi-start run.
#[derive(Debug, Clone)]
pub struct TypeProblem<'a> {
    pub control_type: &'a ControlType,
    pub map: DurationMap,
    pub total_duration: f64,
    pub kind: ObjectiveKind,
}

impl<'a> TypeProblem<'a> {
    pub fn new(control_type: &'a ControlType, total_duration: f64, kind: ObjectiveKind) -> Self {
        Self {
            control_type,
            map: DurationMap::identity(control_type.len()),
            total_duration,
            kind,
        }
    }

    pub fn with_map(mut self, map: DurationMap) -> Self {
        assert_eq!(map.segments(), self.control_type.len());
        self.map = map;
        self
    }
}

struct Descent {
    durations: Vec<f64>,
    cost: f64,
    converged: bool,
}

fn descend(problem: &TypeProblem<'_>, u0: &[f64], settings: &BfgsSettings) -> Descent {
    let levels = problem.control_type.levels();
    let n = levels.len();
    let total = problem.total_duration;
    let mut workspace = Workspace::new(n);
    let mut t = vec![0.0; n];
    let mut grad_t = vec![0.0; n];

    let outcome = bfgs::minimize(
        |u, grad_u| {
            problem.map.durations(u, total, &mut t);
            let cost = workspace.cost_and_gradient(problem.kind, levels, &t, &mut grad_t);
            problem.map.pull_back(u, &t, total, &grad_t, grad_u);
            cost
        },
        u0,
        settings,
    );
    problem.map.durations(&outcome.x, total, &mut t);
    Descent {
        durations: t,
        cost: outcome.value,
        converged: outcome.termination != Termination::MaxIterations,
    }
}

/// Derives an independent stream per (seed, type) so results do not depend on
/// scheduling.
fn type_rng(seed: u64, control_type: &ControlType) -> ChaCha8Rng {
    let mut h = seed ^ 0x9E37_79B9_7F4A_7C15;
    for level in control_type.levels() {
        h = splitmix(h ^ (level.index() as u64 + 1));
    }
    h = splitmix(h ^ control_type.len() as u64);
    ChaCha8Rng::seed_from_u64(h)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Multi-start optimization of one type, with optional warm starts given as
/// duration vectors (rescaled to the requested total).
pub fn optimize_problem(
    problem: &TypeProblem<'_>,
    config: &OptimizationConfig,
    warm_starts: &[Vec<f64>],
) -> Result<TypeOptimum> {
    config.validate()?;
    let total = problem.total_duration;
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "total duration must be positive, got {total}"
        )));
    }
    let settings = config.bfgs();
    let mut rng = type_rng(config.rng_seed, problem.control_type);

    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(config.n_starts + warm_starts.len());
    for warm in warm_starts {
        if warm.len() != problem.control_type.len() {
            return Err(Error::LengthMismatch {
                levels: problem.control_type.len(),
                durations: warm.len(),
            });
        }
        let sum: f64 = warm.iter().sum();
        if sum > 0.0 {
            let scaled: Vec<f64> = warm.iter().map(|t| t * total / sum).collect();
            starts.push(problem.map.preimage(&scaled, total));
        }
    }
    for _ in 0..config.n_starts {
        starts.push(problem.map.random_point(&mut rng));
    }

    let mut best: Option<Descent> = None;
    let mut any_converged = false;
    for u0 in &starts {
        let d = descend(problem, u0, &settings);
        any_converged |= d.converged;
        if best.as_ref().is_none_or(|b| d.cost < b.cost) {
            best = Some(d);
        }
    }
    let best = best.expect("at least one start");
    let (durations, cost) = clamp_and_polish(problem, best.durations, best.cost, config, &settings);

    Ok(TypeOptimum {
        control_type: problem.control_type.clone(),
        total_duration: total,
        best_durations: durations,
        best_cost: cost.clamp(0.0, 1.0),
        converged: any_converged,
        starts_used: starts.len(),
    })
}

/// Segments shorter than this fraction of `T` are tried at exactly zero.
const PRUNE_FRACTION: f64 = 1e-4;
/// A pruned point is kept if it costs at most this much more.
const PRUNE_SLACK: f64 = 1e-12;

/// Near a face of the simplex the squared-variable map flattens the cost, so
/// descents stall with tiny leftover segments. Segments below the floor are
/// zeroed together, then each short segment is tried at zero in turn; a
/// candidate is polished and kept only if it is no worse.
fn clamp_and_polish(
    problem: &TypeProblem<'_>,
    durations: Vec<f64>,
    cost: f64,
    config: &OptimizationConfig,
    settings: &BfgsSettings,
) -> (Vec<f64>, f64) {
    let total = problem.total_duration;
    let mut current = (durations, cost);

    let below_floor: Vec<usize> = (0..current.0.len())
        .filter(|&k| current.0[k] > 0.0 && current.0[k] < config.simplex_floor)
        .collect();
    if !below_floor.is_empty() {
        if let Some(next) = polish_without(problem, &current, &below_floor, settings) {
            current = next;
        }
    }

    let short = (PRUNE_FRACTION * total).max(config.simplex_floor);
    let mut order: Vec<usize> = (0..current.0.len())
        .filter(|&k| current.0[k] > 0.0 && current.0[k] < short)
        .collect();
    order.sort_by(|&a, &b| current.0[a].total_cmp(&current.0[b]));
    for k in order {
        if current.0[k] == 0.0 {
            continue;
        }
        if let Some(next) = polish_without(problem, &current, &[k], settings) {
            current = next;
        }
    }
    current
}

/// Zeroes `drop` (on top of existing zeros), rescales and polishes. `None`
/// if the result is worse than `current`.
fn polish_without(
    problem: &TypeProblem<'_>,
    current: &(Vec<f64>, f64),
    drop: &[usize],
    settings: &BfgsSettings,
) -> Option<(Vec<f64>, f64)> {
    let total = problem.total_duration;
    let mut clamped = current.0.clone();
    for &k in drop {
        let j = problem.map.free_of(k);
        for s in 0..clamped.len() {
            if problem.map.free_of(s) == j {
                clamped[s] = 0.0;
            }
        }
    }
    let kept: f64 = clamped.iter().sum();
    if kept <= 0.0 {
        return None;
    }
    clamped.iter_mut().for_each(|t| *t *= total / kept);
    // Zero variables have zero gradient, so the polish keeps them at zero.
    let u0 = problem.map.preimage(&clamped, total);
    let polished = descend(problem, &u0, settings);
    if polished.cost > current.1 + PRUNE_SLACK {
        return None;
    }
    let mut out = polished.durations;
    for (o, c) in out.iter_mut().zip(&clamped) {
        if *c == 0.0 {
            *o = 0.0;
        }
    }
    Some((out, polished.cost))
}

/// Multi-start optimization of the durations of one type.
pub fn optimize_type(
    control_type: &ControlType,
    total_duration: f64,
    kind: ObjectiveKind,
    config: &OptimizationConfig,
) -> Result<TypeOptimum> {
    optimize_problem(&TypeProblem::new(control_type, total_duration, kind), config, &[])
}

/// Result over all types with a given switch count.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchCountOptimum {
    pub switch_count: usize,
    pub best: TypeOptimum,
    /// One entry per type, in enumeration order.
    pub per_type: Vec<TypeOptimum>,
}

impl SwitchCountOptimum {
    /// Every type had at least one converged start.
    pub fn all_converged(&self) -> bool {
        self.per_type.iter().all(|t| t.converged)
    }
}

fn symmetry_partner(kind: ObjectiveKind, t: &ControlType) -> ControlType {
    match kind {
        ObjectiveKind::StatePrepInfidelity => t.flipped(),
        ObjectiveKind::Inconcurrence => t.negated(),
    }
}

fn mirror(kind: ObjectiveKind, optimum: &TypeOptimum) -> TypeOptimum {
    let image = kind.symmetry_image(&optimum.control());
    TypeOptimum {
        control_type: image.control_type().clone(),
        best_durations: image.durations().to_vec(),
        ..optimum.clone()
    }
}

/// Optimizes every type with `ns` switches.
pub fn optimize_switch_count(
    ns: usize,
    total_duration: f64,
    kind: ObjectiveKind,
    config: &OptimizationConfig,
) -> Result<SwitchCountOptimum> {
    optimize_switch_count_seeded(ns, total_duration, kind, config, &[])
}

/// As [`optimize_switch_count`], with extra warm starts. Each seed is routed
/// to the type it belongs to (or that type's symmetry partner).
///
/// Only one type of each symmetry pair is optimized; the partner's optimum
/// is the mirror image with the same cost.
pub fn optimize_switch_count_seeded(
    ns: usize,
    total_duration: f64,
    kind: ObjectiveKind,
    config: &OptimizationConfig,
    seeds: &[BangOffControl],
) -> Result<SwitchCountOptimum> {
    let types = enumerate_types(ns);
    optimize_types_seeded(&types, ns, total_duration, kind, config, seeds)
}

/// Optimizes an explicit list of types (all of switch count `ns`).
pub fn optimize_types_seeded(
    types: &[ControlType],
    ns: usize,
    total_duration: f64,
    kind: ObjectiveKind,
    config: &OptimizationConfig,
    seeds: &[BangOffControl],
) -> Result<SwitchCountOptimum> {
    config.validate()?;
    if types.is_empty() {
        return Err(Error::InvalidArgument("no control types to optimize".into()));
    }
    let index: HashMap<&ControlType, usize> = types.iter().enumerate().map(|(i, t)| (t, i)).collect();

    // Representative = the earlier member of each symmetry pair present.
    let mut representative: Vec<usize> = Vec::with_capacity(types.len());
    for (i, t) in types.iter().enumerate() {
        let partner = symmetry_partner(kind, t);
        let rep = index.get(&partner).map_or(i, |&j| i.min(j));
        representative.push(rep);
    }

    let mut warm: Vec<Vec<Vec<f64>>> = vec![Vec::new(); types.len()];
    for seed in seeds {
        if let Some(&i) = index.get(seed.control_type()) {
            let rep = representative[i];
            if rep == i {
                warm[i].push(seed.durations().to_vec());
            } else {
                warm[rep].push(kind.symmetry_image(seed).durations().to_vec());
            }
        }
    }

    let reps: Vec<usize> = (0..types.len()).filter(|&i| representative[i] == i).collect();
    let solved: Vec<Result<TypeOptimum>> = reps
        .par_iter()
        .map(|&i| {
            optimize_problem(
                &TypeProblem::new(&types[i], total_duration, kind),
                config,
                &warm[i],
            )
        })
        .collect();

    let mut by_index: Vec<Option<TypeOptimum>> = vec![None; types.len()];
    for (&i, result) in reps.iter().zip(solved) {
        by_index[i] = Some(result?);
    }
    for i in 0..types.len() {
        let rep = representative[i];
        if rep != i {
            let mirrored = mirror(kind, by_index[rep].as_ref().expect("solved"));
            by_index[i] = Some(mirrored);
        }
    }
    let per_type: Vec<TypeOptimum> = by_index.into_iter().map(|o| o.expect("filled")).collect();
    let best = select_best(&per_type).clone();
    Ok(SwitchCountOptimum {
        switch_count: ns,
        best,
        per_type,
    })
}

/// Lowest cost, ties to the earliest type.
pub fn select_best(candidates: &[TypeOptimum]) -> &TypeOptimum {
    let mut best = &candidates[0];
    for c in &candidates[1..] {
        if c.beats(best) {
            best = c;
        }
    }
    best
}

/// `control` with one extra zero-length segment appended, or `None` if
/// no level can follow the last one (never happens with three levels).
fn padded(control: &BangOffControl, at_end: bool) -> BangOffControl {
    let levels = control.levels();
    let neighbour = if at_end { levels.last() } else { levels.first() };
    let extra = ControlLevel::ALL
        .into_iter()
        .find(|l| Some(l) != neighbour)
        .expect("three levels");
    let mut new_levels = levels.to_vec();
    let mut durations = control.durations().to_vec();
    if at_end {
        new_levels.push(extra);
        durations.push(0.0);
    } else {
        new_levels.insert(0, extra);
        durations.insert(0, 0.0);
    }
    BangOffControl::new(ControlType::new_unchecked(new_levels), durations)
        .expect("lengths match")
}

/// Opens a zero-length segment slightly so the descent can grow it.
fn opened(control: &BangOffControl, at_end: bool) -> BangOffControl {
    let mut c = padded(control, at_end);
    let total = control.total_duration();
    let eps = 1e-3;
    let mut durations: Vec<f64> = c.durations().iter().map(|t| t * (1.0 - eps)).collect();
    let slot = if at_end { durations.len() - 1 } else { 0 };
    durations[slot] = eps * total;
    c = BangOffControl::new(c.control_type().clone(), durations).expect("lengths match");
    c
}

/// Best cost for every switch count up to `ns_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct NsBest {
    pub switch_count: usize,
    pub best_cost: f64,
    pub best: TypeOptimum,
    pub all_converged: bool,
    pub wall_time: Duration,
}

/// Runs switch counts `0..=ns_max`, seeding each with the previous optimum
/// padded by one extra segment so that the best cost never increases.
pub fn best_over_ns_range(
    ns_max: usize,
    total_duration: f64,
    kind: ObjectiveKind,
    config: &OptimizationConfig,
) -> Result<Vec<NsBest>> {
    best_over_ns_range_seeded(ns_max, total_duration, kind, config, &[])
}

/// As [`best_over_ns_range`], with extra seeds routed to matching types.
pub fn best_over_ns_range_seeded(
    ns_max: usize,
    total_duration: f64,
    kind: ObjectiveKind,
    config: &OptimizationConfig,
    seeds: &[BangOffControl],
) -> Result<Vec<NsBest>> {
    let mut out: Vec<NsBest> = Vec::with_capacity(ns_max + 1);
    for ns in 0..=ns_max {
        let mut ns_seeds: Vec<BangOffControl> = seeds
            .iter()
            .filter(|s| s.control_type().switch_count() == ns)
            .cloned()
            .collect();
        let previous = out.last().map(|p| p.best.control());
        if let Some(prev) = &previous {
            ns_seeds.push(opened(prev, true));
            ns_seeds.push(opened(prev, false));
        }
        let clock = Instant::now();
        let result = optimize_switch_count_seeded(ns, total_duration, kind, config, &ns_seeds)?;
        let mut best = result.best.clone();
        if let (Some(prev), Some(prev_best)) = (&previous, out.last()) {
            // The padded previous optimum is itself an `ns` control with the
            // same cost, which keeps the sequence monotone.
            for at_end in [true, false] {
                let candidate = padded(prev, at_end);
                let nested = TypeOptimum {
                    control_type: candidate.control_type().clone(),
                    total_duration,
                    best_durations: candidate.durations().to_vec(),
                    best_cost: prev_best.best_cost,
                    converged: true,
                    starts_used: 0,
                };
                if nested.best_cost < best.best_cost {
                    best = nested;
                }
            }
        }
        out.push(NsBest {
            switch_count: ns,
            best_cost: best.best_cost,
            best,
            all_converged: result.all_converged(),
            wall_time: clock.elapsed(),
        });
    }
    Ok(out)
}
