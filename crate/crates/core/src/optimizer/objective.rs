//! Costs `1 - F` and `1 - C` with adjoint gradients over segment durations.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::control::{BangOffControl, ControlLevel};
use crate::error::Result;
use crate::linalg::{ComplexVector, DIM, ZERO};
use crate::quantum::{
    self, apply_generator, apply_segment, prep_initial_state, prep_target_state, TwoQubitState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    /// `1 - |⟨ψ_t|ψ_f⟩|²` from the `hx = -2` ground state to the `hx = +2` one.
    StatePrepInfidelity,
    /// `1 - 2|ad - bc|` starting from `|00⟩`.
    Inconcurrence,
}

impl ObjectiveKind {
    pub fn initial_state(self) -> TwoQubitState {
        match self {
            Self::StatePrepInfidelity => *prep_initial_state(),
            Self::Inconcurrence => TwoQubitState::zero_zero(),
        }
    }

    /// The control transform under which this cost is exactly invariant:
    /// time-reversal-with-negation for state preparation, plain negation for
    /// entanglement from `|00⟩`.
    pub fn symmetry_image(self, control: &BangOffControl) -> BangOffControl {
        match self {
            Self::StatePrepInfidelity => control.flipped(),
            Self::Inconcurrence => control.negated(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::StatePrepInfidelity => "fidelity",
            Self::Inconcurrence => "concurrence",
        }
    }
}

/// Cost and `∂cost/∂t_k` for a control.
pub fn objective_and_gradient(
    kind: ObjectiveKind,
    control: &BangOffControl,
) -> Result<(f64, Vec<f64>)> {
    control.check_structure()?;
    let mut workspace = Workspace::new(control.levels().len());
    let mut grad = vec![0.0; control.levels().len()];
    let cost = workspace.cost_and_gradient(kind, control.levels(), control.durations(), &mut grad);
    Ok((cost.clamp(0.0, 1.0), grad))
}

/// Cost only.
pub fn objective(kind: ObjectiveKind, control: &BangOffControl) -> Result<f64> {
    let final_state = quantum::evolve(&kind.initial_state(), control)?;
    Ok(cost_of_state(kind, &final_state))
}

/// Cost of a final state, clamped to `[0, 1]` against rounding.
pub fn cost_of_state(kind: ObjectiveKind, state: &TwoQubitState) -> f64 {
    let raw = match kind {
        ObjectiveKind::StatePrepInfidelity => 1.0 - quantum::fidelity(state, prep_target_state()),
        ObjectiveKind::Inconcurrence => 1.0 - quantum::concurrence(state),
    };
    raw.clamp(0.0, 1.0)
}

/// Scratch buffers for repeated evaluations along one descent.
pub(crate) struct Workspace {
    forward: Vec<ComplexVector>,
}

impl Workspace {
    pub(crate) fn new(segments: usize) -> Self {
        Self {
            forward: vec![[ZERO; DIM]; segments],
        }
    }

    /// Forward sweep for the states, backward sweep for a costate.
    ///
    /// Fidelity: `o = ⟨t|ψ_f⟩` is sesquilinear, so the costate is pulled back
    /// with `U†`. Concurrence: `z = ψᵀMψ` is bilinear, so it is pulled back
    /// with `Uᵀ`, which equals `U` because every segment Hamiltonian is real
    /// symmetric.
    pub(crate) fn cost_and_gradient(
        &mut self,
        kind: ObjectiveKind,
        levels: &[ControlLevel],
        durations: &[f64],
        grad: &mut [f64],
    ) -> f64 {
        let n = levels.len();
        if self.forward.len() < n {
            self.forward.resize(n, [ZERO; DIM]);
        }
        let mut psi = *kind.initial_state().amplitudes();
        for k in 0..n {
            apply_segment(levels[k], durations[k], &mut psi);
            self.forward[k] = psi;
        }

        match kind {
            ObjectiveKind::StatePrepInfidelity => {
                let target = prep_target_state().amplitudes();
                let overlap = inner(target, &psi);
                let mut costate = *target;
                for k in (0..n).rev() {
                    let d = inner(&costate, &apply_generator(levels[k], &self.forward[k]));
                    grad[k] = -2.0 * (overlap.conj() * d).re;
                    apply_segment(levels[k], -durations[k], &mut costate);
                }
                1.0 - overlap.norm_sqr()
            }
            ObjectiveKind::Inconcurrence => {
                let [a, b, c, d] = psi;
                let z = a * d - b * c;
                let modulus = z.norm();
                // ∇_ψ (ψᵀMψ) = 2Mψ with M the (a↔d, -b↔c) pairing.
                let mut costate = [d, -c, -b, a];
                for k in (0..n).rev() {
                    if modulus > 0.0 {
                        let dz = bilinear(&costate, &apply_generator(levels[k], &self.forward[k]));
                        grad[k] = -2.0 * (z.conj() * dz).re / modulus;
                    } else {
                        grad[k] = 0.0;
                    }
                    apply_segment(levels[k], durations[k], &mut costate);
                }
                1.0 - 2.0 * modulus
            }
        }
    }
}

#[inline]
fn inner(x: &ComplexVector, y: &ComplexVector) -> Complex64 {
    crate::linalg::inner(x, y)
}

#[inline]
fn bilinear(x: &ComplexVector, y: &ComplexVector) -> Complex64 {
    let mut acc = ZERO;
    for k in 0..DIM {
        acc += x[k] * y[k];
    }
    acc
}
