//! Time-resolved sampling of an evolution under a bang-off control.

use crate::control::BangOffControl;
use crate::error::{Error, Result};
use crate::quantum::{
    self, bell_coefficients, concurrence, reduced_bloch, BellCoefficients, BlochVector,
    TwoQubitState,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub time: f64,
    pub state: TwoQubitState,
    pub bloch: BlochVector,
    pub bell: BellCoefficients,
    pub concurrence: f64,
}

impl TrajectorySample {
    fn at(time: f64, state: TwoQubitState) -> Self {
        Self {
            time,
            state,
            bloch: reduced_bloch(&state),
            bell: bell_coefficients(&state),
            concurrence: concurrence(&state),
        }
    }
}

/// Sample times `0, step, 2·step, ...` up to `total`, with `total` itself
/// always present.
pub fn sample_times(total: f64, step: f64) -> Vec<f64> {
    let mut times = Vec::new();
    let mut k = 0u64;
    loop {
        let t = k as f64 * step;
        if t > total * (1.0 + 1e-12) + 1e-15 {
            break;
        }
        times.push(t.min(total));
        k += 1;
    }
    if times.last().is_some_and(|&t| t < total) {
        let last = *times.last().expect("non-empty");
        if total - last <= 1e-12 * total.max(1.0) {
            *times.last_mut().expect("non-empty") = total;
        } else {
            times.push(total);
        }
    }
    times
}

/// States along the evolution at `0, step, ..., T`.
///
/// Each sample is propagated exactly from the start of the segment that
/// contains it, so no error accumulates across samples.
pub fn sample_trajectory(
    initial: &TwoQubitState,
    control: &BangOffControl,
    sample_step: f64,
) -> Result<Vec<TrajectorySample>> {
    if !(sample_step > 0.0 && sample_step.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "sample step must be positive, got {sample_step}"
        )));
    }
    control.check_structure()?;
    let total = control.total_duration();
    let times = sample_times(total, sample_step);

    // State at the start of every segment.
    let n = control.levels().len();
    let mut starts = Vec::with_capacity(n);
    let mut entry_states = Vec::with_capacity(n);
    let mut clock = 0.0;
    let mut amps = *initial.amplitudes();
    for (level, dt) in control.segments() {
        starts.push(clock);
        entry_states.push(amps);
        quantum::apply_segment(level, dt, &mut amps);
        clock += dt;
    }

    let mut samples = Vec::with_capacity(times.len());
    for &t in &times {
        if n == 0 {
            samples.push(TrajectorySample::at(t, *initial));
            continue;
        }
        // Later segment owns a switch instant; T belongs to the last one.
        let k = if t >= total {
            n - 1
        } else {
            starts.partition_point(|&s| s <= t).saturating_sub(1)
        };
        let (level, dt) = (control.levels()[k], control.durations()[k]);
        let offset = if t >= total { dt } else { (t - starts[k]).clamp(0.0, dt) };
        let mut amps = entry_states[k];
        quantum::apply_segment(level, offset, &mut amps);
        samples.push(TrajectorySample::at(t, TwoQubitState::from_raw(amps)));
    }
    Ok(samples)
}
