//! Python bindings: controls and their costs, the optimizer, the
//! critical-duration searches and trajectory sampling.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bangoff::control::{canonicalize, enumerate_types as all_types, validate};
use bangoff::experiments::{
    self, ControlFamily, CriticalTimeEstimate, DEFAULT_PRECISION, GAP_THRESHOLD, QSL_EPS,
    TAU_MIN_EPS,
};
use bangoff::optimizer::{objective_and_gradient, optimize_switch_count, optimize_type};
use bangoff::quantum::{evolve, prep_initial_state, TwoQubitState};
use bangoff::trajectory::sample_trajectory;
use bangoff::{BangOffControl, ControlRecord, ControlType, ObjectiveKind, OptimizationConfig};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn kind_of(name: &str) -> PyResult<ObjectiveKind> {
    match name {
        "fidelity" => Ok(ObjectiveKind::StatePrepInfidelity),
        "concurrence" => Ok(ObjectiveKind::Inconcurrence),
        other => Err(value_error(format!(
            "objective must be 'fidelity' or 'concurrence', got {other:?}"
        ))),
    }
}

fn initial_state(name: &str) -> PyResult<TwoQubitState> {
    match name {
        "prep" => Ok(*prep_initial_state()),
        "00" => Ok(TwoQubitState::zero_zero()),
        other => Err(value_error(format!(
            "initial state must be 'prep' or '00', got {other:?}"
        ))),
    }
}

fn config(starts: usize, seed: u64) -> PyResult<OptimizationConfig> {
    let c = OptimizationConfig {
        n_starts: starts,
        rng_seed: seed,
        ..OptimizationConfig::default()
    };
    c.validate().map_err(value_error)?;
    Ok(c)
}

/// A bang-off control: a word over `P`, `0`, `N` and one duration per letter.
#[pyclass(name = "Control", module = "bangoff", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyControl {
    inner: BangOffControl,
}

#[pymethods]
impl PyControl {
    #[new]
    fn new(control_type: &str, durations: Vec<f64>) -> PyResult<Self> {
        let t: ControlType = control_type.parse().map_err(value_error)?;
        let inner = BangOffControl::new(t, durations).map_err(value_error)?;
        validate(&inner, inner.total_duration()).map_err(value_error)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let record = ControlRecord::from_json(text).map_err(value_error)?;
        let inner = record.to_control().map_err(value_error)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        ControlRecord::from_control(&self.inner).to_json()
    }

    #[getter]
    fn control_type(&self) -> String {
        self.inner.control_type().to_string()
    }

    #[getter]
    fn durations(&self) -> Vec<f64> {
        self.inner.durations().to_vec()
    }

    #[getter]
    fn total_duration(&self) -> f64 {
        self.inner.total_duration()
    }

    #[getter]
    fn switch_count(&self) -> usize {
        self.inner.control_type().switch_count()
    }

    /// Time-reversed and negated.
    fn flipped(&self) -> Self {
        Self {
            inner: self.inner.flipped(),
        }
    }

    fn negated(&self) -> Self {
        Self {
            inner: self.inner.negated(),
        }
    }

    /// Zero-length segments dropped and equal neighbours merged.
    fn canonical(&self) -> Self {
        Self {
            inner: canonicalize(&self.inner),
        }
    }

    /// Cost under `objective` (`"fidelity"` or `"concurrence"`).
    fn cost(&self, objective: &str) -> PyResult<f64> {
        Ok(self.cost_and_gradient(objective)?.0)
    }

    /// Cost and its derivative with respect to each duration.
    fn cost_and_gradient(&self, objective: &str) -> PyResult<(f64, Vec<f64>)> {
        objective_and_gradient(kind_of(objective)?, &self.inner).map_err(value_error)
    }

    /// Final amplitudes on `|00>, |01>, |10>, |11>`.
    #[pyo3(signature = (initial = "prep"))]
    fn final_state(&self, initial: &str) -> PyResult<Vec<Complex64>> {
        let out = evolve(&initial_state(initial)?, &self.inner).map_err(value_error)?;
        Ok(out.amplitudes().to_vec())
    }

    /// One dict per sample time with the amplitudes, the reduced Bloch
    /// vector of qubit 1, the Bell weights and the concurrence.
    #[pyo3(signature = (step, initial = "prep"))]
    fn trajectory<'py>(
        &self,
        py: Python<'py>,
        step: f64,
        initial: &str,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let samples =
            sample_trajectory(&initial_state(initial)?, &self.inner, step).map_err(value_error)?;
        samples
            .iter()
            .map(|s| {
                let d = PyDict::new(py);
                d.set_item("t", s.time)?;
                d.set_item("amplitudes", s.state.amplitudes().to_vec())?;
                d.set_item("bloch", (s.bloch.x, s.bloch.y, s.bloch.z))?;
                d.set_item("bell_weights", s.bell.weights().to_vec())?;
                d.set_item("concurrence", s.concurrence)?;
                Ok(d)
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Control({:?}, {:?})", self.control_type(), self.inner.durations())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

/// Best control found by `optimize`.
#[pyclass(name = "Optimum", module = "bangoff", frozen, get_all)]
struct PyOptimum {
    control: PyControl,
    cost: f64,
    converged: bool,
}

#[pymethods]
impl PyOptimum {
    fn __repr__(&self) -> String {
        format!(
            "Optimum({}, cost={:e}, converged={})",
            self.control.__repr__(),
            self.cost,
            self.converged
        )
    }
}

/// Result of a bisection search for a critical duration.
#[pyclass(name = "CriticalEstimate", module = "bangoff", frozen)]
struct PyCriticalEstimate {
    inner: CriticalTimeEstimate,
}

#[pymethods]
impl PyCriticalEstimate {
    #[getter]
    fn name(&self) -> &'static str {
        self.inner.name.name()
    }

    #[getter]
    fn value(&self) -> f64 {
        self.inner.value
    }

    #[getter]
    fn bracket(&self) -> (f64, f64) {
        self.inner.bracket
    }

    #[getter]
    fn witness(&self) -> PyResult<PyControl> {
        let inner = self.inner.witness_control().map_err(value_error)?;
        Ok(PyControl { inner })
    }

    #[getter]
    fn witness_cost(&self) -> f64 {
        self.inner.witness_cost
    }

    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn __repr__(&self) -> String {
        format!(
            "CriticalEstimate({}, value={}, bracket={:?})",
            self.name(),
            self.inner.value,
            self.inner.bracket
        )
    }
}

/// All control types with `ns` switches, in lexicographic order.
#[pyfunction]
fn enumerate_types(ns: usize) -> Vec<String> {
    all_types(ns).iter().map(ToString::to_string).collect()
}

/// Multi-start optimization at total duration `T`, over every type with `ns`
/// switches or over the single type `control_type`.
#[pyfunction]
#[pyo3(signature = (objective, T, ns = None, control_type = None, starts = 100, seed = 0))]
#[allow(non_snake_case)]
fn optimize(
    py: Python<'_>,
    objective: &str,
    T: f64,
    ns: Option<usize>,
    control_type: Option<&str>,
    starts: usize,
    seed: u64,
) -> PyResult<PyOptimum> {
    let kind = kind_of(objective)?;
    let config = config(starts, seed)?;
    let single: Option<ControlType> = control_type
        .map(|w| w.parse().map_err(value_error))
        .transpose()?;
    let (optimum, converged) = py
        .detach(|| match (single, ns) {
            (Some(t), _) => optimize_type(&t, T, kind, &config).map(|o| {
                let c = o.converged;
                (o, c)
            }),
            (None, Some(ns)) => optimize_switch_count(ns, T, kind, &config).map(|r| {
                let c = r.all_converged();
                (r.best, c)
            }),
            (None, None) => Err(bangoff::Error::InvalidArgument(
                "give ns or control_type".into(),
            )),
        })
        .map_err(value_error)?;
    Ok(PyOptimum {
        control: PyControl {
            inner: optimum.control(),
        },
        cost: optimum.best_cost,
        converged,
    })
}

/// Best cost for every `(T, ns)` pair with `ns <= ns_max`, as tuples
/// `(T, ns, cost, type, durations)`.
#[pyfunction]
#[pyo3(signature = (objective, grid, ns_max, starts = 100, seed = 0))]
fn sweep(
    py: Python<'_>,
    objective: &str,
    grid: Vec<f64>,
    ns_max: usize,
    starts: usize,
    seed: u64,
) -> PyResult<Vec<(f64, usize, f64, String, Vec<f64>)>> {
    let kind = kind_of(objective)?;
    let config = config(starts, seed)?;
    let rows = py
        .detach(|| experiments::sweep(kind, &grid, ns_max, &config))
        .map_err(value_error)?;
    Ok(rows
        .into_iter()
        .map(|r| (r.total_duration, r.switch_count, r.best_cost, r.best_type, r.best_durations))
        .collect())
}

/// Critical duration by bisection. `which` is one of `"tc"`, `"tsb"`,
/// `"qsl"`, `"tauc"`, `"taumin"`.
#[pyfunction]
#[pyo3(signature = (which, bracket, ns = None, threshold = None, precision = DEFAULT_PRECISION, starts = 100, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn critical(
    py: Python<'_>,
    which: &str,
    bracket: (f64, f64),
    ns: Option<usize>,
    threshold: Option<f64>,
    precision: f64,
    starts: usize,
    seed: u64,
) -> PyResult<PyCriticalEstimate> {
    let config = config(starts, seed)?;
    let prep = ObjectiveKind::StatePrepInfidelity;
    let entangle = ObjectiveKind::Inconcurrence;
    let inner = py
        .detach(|| match which {
            "tc" => experiments::find_gap_onset(
                prep,
                ns.unwrap_or(1),
                bracket,
                threshold.unwrap_or(GAP_THRESHOLD),
                precision,
                &config,
            ),
            "tauc" => experiments::find_gap_onset(
                entangle,
                ns.unwrap_or(0),
                bracket,
                threshold.unwrap_or(GAP_THRESHOLD),
                precision,
                &config,
            ),
            "tsb" => experiments::find_tsb(bracket, precision, &config),
            "qsl" => experiments::estimate_reachability(
                prep,
                &ControlFamily::SwitchCount(ns.unwrap_or(9)),
                threshold.unwrap_or(QSL_EPS),
                bracket,
                precision,
                &config,
            ),
            "taumin" => experiments::estimate_tau_min(
                ns.unwrap_or(3),
                threshold.unwrap_or(TAU_MIN_EPS),
                bracket,
                precision,
                &config,
            ),
            other => Err(bangoff::Error::InvalidArgument(format!(
                "unknown critical duration {other:?}"
            ))),
        })
        .map_err(value_error)?;
    Ok(PyCriticalEstimate { inner })
}

#[pymodule]
#[pyo3(name = "bangoff")]
fn bangoff_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyControl>()?;
    m.add_class::<PyOptimum>()?;
    m.add_class::<PyCriticalEstimate>()?;
    m.add_function(wrap_pyfunction!(enumerate_types, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(critical, m)?)?;
    Ok(())
}
