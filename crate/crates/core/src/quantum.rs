//! Exact dynamics of the symmetrically coupled two-qubit system
//!
//! `H = -2g S1z S2z - hz (S1z + S2z) - hx (S1x + S2x)` with `g = hz = 1`
//! and spin-1/2 operators `S = σ/2`, on the basis `|00⟩, |01⟩, |10⟩, |11⟩`
//! (qubit 1 is the left index). Piecewise-constant evolution is exact: every
//! segment propagator comes from the spectral decomposition of its
//! Hamiltonian, and the three bang-off levels have their decompositions
//! cached.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::LazyLock;

use num_complex::Complex64;

use crate::control::{BangOffControl, ControlLevel};
use crate::error::{Error, Result};
use crate::linalg::{
    self, ComplexMatrix, ComplexVector, RealMatrix, SpectralDecomposition, DIM, ONE, ZERO,
};

pub const COUPLING: f64 = 1.0;
pub const STATIC_FIELD: f64 = 1.0;

/// Field values of the initial and target ground states for state
/// preparation.
pub const INITIAL_FIELD: f64 = -2.0;
pub const TARGET_FIELD: f64 = 2.0;

const NORM_TOLERANCE: f64 = 1e-12;
const DEGENERACY_GAP: f64 = 1e-10;

/// Normalized pure state `a|00⟩ + b|01⟩ + c|10⟩ + d|11⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    amps: ComplexVector,
}

impl TwoQubitState {
    /// Rejects amplitudes whose squared norm is off by more than 1e-12.
    pub fn new(amps: ComplexVector) -> Result<Self> {
        let norm_sq: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "state has squared norm {norm_sq}, expected 1"
            )));
        }
        Ok(Self { amps })
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(amps: ComplexVector) -> Result<Self> {
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidArgument("cannot normalize a zero state".into()));
        }
        Ok(Self {
            amps: amps.map(|z| z / norm),
        })
    }

    /// Computational basis state `index` (0 = |00⟩, ..., 3 = |11⟩).
    pub fn basis(index: usize) -> Self {
        let mut amps = [ZERO; DIM];
        amps[index] = ONE;
        Self { amps }
    }

    /// The product state `|00⟩`.
    pub fn zero_zero() -> Self {
        Self::basis(0)
    }

    pub(crate) fn from_raw(amps: ComplexVector) -> Self {
        Self { amps }
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        linalg::inner(&self.amps, &other.amps)
    }

    /// `(Z⊗Z)|ψ⟩`, which maps `H(hx)` to `H(-hx)` under conjugation.
    pub fn parity_conjugate(&self) -> Self {
        let [a, b, c, d] = self.amps;
        Self {
            amps: [a, -b, -c, d],
        }
    }
}

/// Real symmetric matrix of `H(hx)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianMatrix {
    pub field: f64,
    entries: RealMatrix,
}

impl HamiltonianMatrix {
    pub fn entries(&self) -> &RealMatrix {
        &self.entries
    }

    pub fn spectrum(&self) -> SpectralDecomposition {
        SpectralDecomposition::of_symmetric(&self.entries)
    }
}

pub fn build_hamiltonian(hx: f64) -> HamiltonianMatrix {
    // S_z eigenvalue of each qubit for the four basis states: |0⟩ -> +1/2.
    const SPIN_Z: [(f64, f64); DIM] = [(0.5, 0.5), (0.5, -0.5), (-0.5, 0.5), (-0.5, -0.5)];
    let mut entries = [[0.0; DIM]; DIM];
    for (i, &(z1, z2)) in SPIN_Z.iter().enumerate() {
        entries[i][i] = -2.0 * COUPLING * z1 * z2 - STATIC_FIELD * (z1 + z2);
    }
    // S1x couples 0<->2 and 1<->3; S2x couples 0<->1 and 2<->3.
    let off = -0.5 * hx;
    for (i, j) in [(0, 2), (1, 3), (0, 1), (2, 3)] {
        entries[i][j] = off;
        entries[j][i] = off;
    }
    HamiltonianMatrix { field: hx, entries }
}

static LEVEL_SPECTRA: LazyLock<[SpectralDecomposition; 3]> =
    LazyLock::new(|| ControlLevel::ALL.map(|level| build_hamiltonian(level.field()).spectrum()));

static LEVEL_HAMILTONIANS: LazyLock<[HamiltonianMatrix; 3]> =
    LazyLock::new(|| ControlLevel::ALL.map(|level| build_hamiltonian(level.field())));

/// Forces construction of the cached `P`, `0`, `N` spectra. Safe to call from
/// any thread, any number of times.
pub fn warm_cache() {
    LazyLock::force(&LEVEL_SPECTRA);
    LazyLock::force(&LEVEL_HAMILTONIANS);
}

pub fn level_spectrum(level: ControlLevel) -> &'static SpectralDecomposition {
    &LEVEL_SPECTRA[level.index()]
}

pub fn level_hamiltonian(level: ControlLevel) -> &'static HamiltonianMatrix {
    &LEVEL_HAMILTONIANS[level.index()]
}

fn spectrum_for_field(hx: f64) -> SpectralDecomposition {
    ControlLevel::ALL
        .into_iter()
        .find(|level| level.field() == hx)
        .map(|level| *level_spectrum(level))
        .unwrap_or_else(|| build_hamiltonian(hx).spectrum())
}

/// Ground state of `H(hx)` with its largest amplitude real and positive.
pub fn ground_state(hx: f64) -> Result<TwoQubitState> {
    lowest_eigenstate(&spectrum_for_field(hx), hx)
}

fn lowest_eigenstate(spectrum: &SpectralDecomposition, hx: f64) -> Result<TwoQubitState> {
    let gap = spectrum.eigenvalues[1] - spectrum.eigenvalues[0];
    if gap < DEGENERACY_GAP {
        return Err(Error::DegenerateGround { hx, gap });
    }
    let v = spectrum.eigenvector(0);
    Ok(fix_global_phase(v.map(|x| Complex64::new(x, 0.0))))
}

fn fix_global_phase(amps: ComplexVector) -> TwoQubitState {
    let largest = amps.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let pivot = amps
        .iter()
        .position(|z| z.norm() >= largest - 1e-12)
        .expect("non-empty");
    let phase = amps[pivot].conj() / amps[pivot].norm();
    TwoQubitState::normalized(amps.map(|z| z * phase)).expect("eigenvector is non-zero")
}

/// Cached initial state `|ψ_i⟩`, the ground state at `hx = -2`.
pub fn prep_initial_state() -> &'static TwoQubitState {
    static STATE: LazyLock<TwoQubitState> =
        LazyLock::new(|| ground_state(INITIAL_FIELD).expect("hx = -2 is non-degenerate"));
    &STATE
}

/// Cached target state `|ψ_t⟩`, the ground state at `hx = +2`.
pub fn prep_target_state() -> &'static TwoQubitState {
    static STATE: LazyLock<TwoQubitState> =
        LazyLock::new(|| ground_state(TARGET_FIELD).expect("hx = +2 is non-degenerate"));
    &STATE
}

/// `exp(-i H(hx) dt)` for one constant-field segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator {
    pub field: f64,
    pub duration: f64,
    entries: ComplexMatrix,
}

impl Propagator {
    pub fn entries(&self) -> &ComplexMatrix {
        &self.entries
    }

    pub fn apply(&self, state: &TwoQubitState) -> TwoQubitState {
        TwoQubitState::from_raw(linalg::mat_vec(&self.entries, &state.amps))
    }

    /// Largest entry of `|U†U - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let product = linalg::mat_mul(&linalg::adjoint(&self.entries), &self.entries);
        linalg::max_abs_diff(&product, &linalg::complex_identity())
    }
}

pub fn propagator(hx: f64, dt: f64) -> Result<Propagator> {
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "segment duration must be finite and non-negative, got {dt}"
        )));
    }
    let entries = if dt == 0.0 {
        linalg::complex_identity()
    } else {
        spectrum_for_field(hx).exp_matrix(dt)
    };
    Ok(Propagator {
        field: hx,
        duration: dt,
        entries,
    })
}

/// Applies one bang-off segment in place.
#[inline]
pub(crate) fn apply_segment(level: ControlLevel, dt: f64, amps: &mut ComplexVector) {
    if dt != 0.0 {
        level_spectrum(level).apply_exp(dt, amps);
    }
}

/// `-i H ψ` for a bang-off level.
#[inline]
pub(crate) fn apply_generator(level: ControlLevel, amps: &ComplexVector) -> ComplexVector {
    let h = linalg::real_mat_vec(level_hamiltonian(level).entries(), amps);
    h.map(|z| Complex64::new(z.im, -z.re))
}

/// Evolves `state` through the segments of `control`, left to right.
pub fn evolve(state: &TwoQubitState, control: &BangOffControl) -> Result<TwoQubitState> {
    control.check_structure()?;
    let mut amps = state.amps;
    for (level, dt) in control.segments() {
        apply_segment(level, dt, &mut amps);
    }
    Ok(TwoQubitState::from_raw(amps))
}

/// Final state together with `∂|ψ_f⟩/∂t_k` for every segment `k`.
///
/// `∂|ψ_f⟩/∂t_k = U_n···U_{k+1} (-i H_k) U_k···U_1 |ψ⟩`. One forward sweep
/// stores the intermediate states, one backward sweep accumulates the
/// trailing products `U_n···U_{k+1}`.
pub fn evolve_with_segment_gradients(
    state: &TwoQubitState,
    control: &BangOffControl,
) -> Result<(TwoQubitState, Vec<ComplexVector>)> {
    control.check_structure()?;
    let n = control.levels().len();
    let mut forward = Vec::with_capacity(n);
    let mut amps = state.amps;
    for (level, dt) in control.segments() {
        apply_segment(level, dt, &mut amps);
        forward.push(amps);
    }

    let mut gradients = vec![[ZERO; DIM]; n];
    let mut trailing = linalg::complex_identity();
    for k in (0..n).rev() {
        let level = control.levels()[k];
        let local = apply_generator(level, &forward[k]);
        gradients[k] = linalg::mat_vec(&trailing, &local);
        let u = level_spectrum(level).exp_matrix(control.durations()[k]);
        trailing = linalg::mat_mul(&trailing, &u);
    }
    Ok((TwoQubitState::from_raw(amps), gradients))
}

/// `|⟨target|final⟩|²`.
pub fn fidelity(final_state: &TwoQubitState, target: &TwoQubitState) -> f64 {
    target.inner(final_state).norm_sqr()
}

/// `ad - bc`; the concurrence is twice its modulus.
pub fn concurrence_amplitude(state: &TwoQubitState) -> Complex64 {
    let [a, b, c, d] = state.amps;
    a * d - b * c
}

/// `2|ad - bc|`.
pub fn concurrence(state: &TwoQubitState) -> f64 {
    2.0 * concurrence_amplitude(state).norm()
}

/// Bloch vector of a single-qubit (possibly mixed) state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn length(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Bloch vector of qubit 1 after tracing out qubit 2.
pub fn reduced_bloch(state: &TwoQubitState) -> BlochVector {
    let [a, b, c, d] = state.amps;
    let rho_00 = a.norm_sqr() + b.norm_sqr();
    let rho_11 = c.norm_sqr() + d.norm_sqr();
    let rho_01 = a * c.conj() + b * d.conj();
    BlochVector {
        x: 2.0 * rho_01.re,
        y: -2.0 * rho_01.im,
        z: rho_00 - rho_11,
    }
}

/// Components on `|Φ⁺⟩`, `|Φ⁻⟩`, `|Ψ⁺⟩` and the singlet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellCoefficients {
    pub phi_plus: Complex64,
    pub phi_minus: Complex64,
    pub psi_plus: Complex64,
    pub singlet_residual: Complex64,
}

impl BellCoefficients {
    /// `[|C1|², |C2|², |C3|²]`.
    pub fn weights(&self) -> [f64; 3] {
        [
            self.phi_plus.norm_sqr(),
            self.phi_minus.norm_sqr(),
            self.psi_plus.norm_sqr(),
        ]
    }
}

pub fn bell_coefficients(state: &TwoQubitState) -> BellCoefficients {
    let [a, b, c, d] = state.amps;
    BellCoefficients {
        phi_plus: (a + d) * FRAC_1_SQRT_2,
        phi_minus: (a - d) * FRAC_1_SQRT_2,
        psi_plus: (b + c) * FRAC_1_SQRT_2,
        singlet_residual: (b - c) * FRAC_1_SQRT_2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bell_phi_plus() -> TwoQubitState {
        TwoQubitState::normalized([ONE, ZERO, ZERO, ONE]).unwrap()
    }

    /// det(A - λI) by cofactor expansion; test-only oracle.
    fn char_poly(a: &RealMatrix, lambda: f64) -> f64 {
        fn det(m: &[Vec<f64>]) -> f64 {
            if m.len() == 1 {
                return m[0][0];
            }
            (0..m.len())
                .map(|j| {
                    let minor: Vec<Vec<f64>> = m[1..]
                        .iter()
                        .map(|row| {
                            row.iter()
                                .enumerate()
                                .filter(|&(k, _)| k != j)
                                .map(|(_, &x)| x)
                                .collect()
                        })
                        .collect();
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    sign * m[0][j] * det(&minor)
                })
                .sum()
        }
        let m: Vec<Vec<f64>> = (0..DIM)
            .map(|i| {
                (0..DIM)
                    .map(|j| a[i][j] - if i == j { lambda } else { 0.0 })
                    .collect()
            })
            .collect();
        det(&m)
    }

    /// Smallest root of the characteristic polynomial: scan then bisect.
    fn smallest_root(a: &RealMatrix) -> f64 {
        let mut lo = -20.0;
        let step = 1e-3;
        while char_poly(a, lo).signum() == char_poly(a, lo + step).signum() {
            lo += step;
        }
        let mut hi = lo + step;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if char_poly(a, lo).signum() == char_poly(a, mid).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// exp(-iH dt) via scaling and squaring of a Taylor series; test-only oracle.
    fn taylor_exp(h: &RealMatrix, dt: f64) -> ComplexMatrix {
        let squarings = 10;
        let scale = dt / f64::powi(2.0, squarings);
        let a: ComplexMatrix =
            std::array::from_fn(|i| std::array::from_fn(|j| c(0.0, -h[i][j] * scale)));
        let mut sum = linalg::complex_identity();
        let mut term = linalg::complex_identity();
        for k in 1..30 {
            term = linalg::mat_mul(&term, &a).map(|row| row.map(|z| z / k as f64));
            for i in 0..DIM {
                for j in 0..DIM {
                    sum[i][j] += term[i][j];
                }
            }
        }
        for _ in 0..squarings {
            sum = linalg::mat_mul(&sum, &sum);
        }
        sum
    }

    #[test]
    fn hamiltonian_without_field_is_diagonal() {
        let h = build_hamiltonian(0.0);
        let expected = [-1.5, 0.5, 0.5, 0.5];
        for i in 0..DIM {
            for j in 0..DIM {
                let want = if i == j { expected[i] } else { 0.0 };
                assert_eq!(h.entries()[i][j], want);
            }
        }
    }

    #[test]
    fn hamiltonian_flip_couplings() {
        let h = build_hamiltonian(4.0);
        let e = h.entries();
        for (i, j) in [(0, 1), (0, 2), (1, 3), (2, 3)] {
            assert_eq!(e[i][j], -2.0);
            assert_eq!(e[j][i], -2.0);
        }
        assert_eq!(e[0][3], 0.0);
        assert_eq!(e[1][2], 0.0);
    }

    #[test]
    fn hamiltonian_parity_conjugation() {
        let plus = build_hamiltonian(2.0);
        let minus = build_hamiltonian(-2.0);
        let parity = [1.0, -1.0, -1.0, 1.0];
        for i in 0..DIM {
            for j in 0..DIM {
                assert_eq!(
                    parity[i] * minus.entries()[i][j] * parity[j],
                    plus.entries()[i][j]
                );
            }
        }
    }

    #[test]
    fn spectral_decomposition_invariants() {
        for hx in [-4.0, -2.0, 0.0, 0.7, 2.0, 4.0] {
            let h = build_hamiltonian(hx);
            let s = h.spectrum();
            let r = s.reconstruct();
            for i in 0..DIM {
                for j in 0..DIM {
                    assert!((r[i][j] - h.entries()[i][j]).abs() < 1e-12);
                    let dot: f64 = (0..DIM).map(|k| s.vectors[k][i] * s.vectors[k][j]).sum();
                    assert!((dot - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn ground_state_without_field_is_00() {
        let g = ground_state(0.0).unwrap();
        assert_eq!(g.amplitudes(), &[ONE, ZERO, ZERO, ZERO]);
    }

    #[test]
    fn ground_state_energy_matches_characteristic_root() {
        let h = build_hamiltonian(-2.0);
        let g = ground_state(-2.0).unwrap();
        let hg = linalg::real_mat_vec(h.entries(), g.amplitudes());
        let energy = linalg::inner(g.amplitudes(), &hg).re;
        let root = smallest_root(h.entries());
        assert!((energy - root).abs() < 1e-10, "{energy} vs {root}");
        assert!((g.norm() - 1.0).abs() < 1e-12);
        assert!(g.amplitudes().iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn target_ground_state_is_parity_image_of_initial() {
        let initial = ground_state(-2.0).unwrap();
        let target = ground_state(2.0).unwrap();
        let image = initial.parity_conjugate();
        // Same state up to phase, and the phase convention pins it exactly.
        assert!((fidelity(&image, &target) - 1.0).abs() < 1e-12);
        for k in 0..DIM {
            assert!((image.amplitudes()[k] - target.amplitudes()[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn degenerate_ground_level_is_an_error() {
        // The physical Hamiltonian never has a degenerate ground level, so
        // feed a synthetic spectrum.
        let mut spectrum = build_hamiltonian(0.0).spectrum();
        spectrum.eigenvalues = [0.5, 0.5 + 1e-12, 1.0, 2.0];
        assert!(matches!(
            lowest_eigenstate(&spectrum, 0.0),
            Err(Error::DegenerateGround { .. })
        ));
        for hx in [-4.0, -2.0, 0.0, 2.0, 4.0] {
            assert!(ground_state(hx).is_ok());
        }
    }

    #[test]
    fn propagator_zero_duration_is_identity() {
        for hx in [-4.0, 0.0, 1.3, 4.0] {
            let u = propagator(hx, 0.0).unwrap();
            assert_eq!(u.entries(), &linalg::complex_identity());
        }
    }

    #[test]
    fn propagator_without_field_on_00_is_a_phase() {
        let t = 0.83;
        let u = propagator(0.0, t).unwrap();
        let out = u.apply(&TwoQubitState::zero_zero());
        let want = Complex64::from_polar(1.0, 1.5 * t);
        assert!((out.amplitudes()[0] - want).norm() < 1e-14);
        for k in 1..DIM {
            assert_eq!(out.amplitudes()[k].norm(), 0.0);
        }
        for i in 0..DIM {
            for j in 0..DIM {
                if i != j {
                    assert_eq!(u.entries()[i][j], ZERO);
                }
            }
        }
    }

    #[test]
    fn propagator_matches_taylor_oracle() {
        let u = propagator(4.0, 0.1).unwrap();
        assert!(u.unitarity_defect() < 1e-14);
        let oracle = taylor_exp(build_hamiltonian(4.0).entries(), 0.1);
        assert!(linalg::max_abs_diff(u.entries(), &oracle) < 1e-13);

        let u = propagator(-1.7, 2.3).unwrap();
        let oracle = taylor_exp(build_hamiltonian(-1.7).entries(), 2.3);
        assert!(linalg::max_abs_diff(u.entries(), &oracle) < 1e-12);
    }

    #[test]
    fn propagator_rejects_negative_duration() {
        assert!(propagator(0.0, -0.1).is_err());
    }

    #[test]
    fn evolve_empty_control_is_identity() {
        let s = *prep_initial_state();
        assert_eq!(evolve(&s, &BangOffControl::empty()).unwrap(), s);
    }

    #[test]
    fn evolve_off_field_keeps_00_a_product_state() {
        for t in [0.1, 1.0, FRAC_PI_2, 7.3] {
            let control = BangOffControl::from_word("0", vec![t]).unwrap();
            let out = evolve(&TwoQubitState::zero_zero(), &control).unwrap();
            assert!(concurrence(&out) < 1e-15);
        }
    }

    #[test]
    fn evolve_rejects_invalid_controls() {
        let bad = BangOffControl::from_word("PP", vec![0.1, 0.1]).unwrap();
        assert!(evolve(&TwoQubitState::zero_zero(), &bad).is_err());
        let bad = BangOffControl::from_word("PN", vec![0.1, -0.1]).unwrap();
        assert!(evolve(&TwoQubitState::zero_zero(), &bad).is_err());
    }

    #[test]
    fn evolve_agrees_with_dense_propagators() {
        let control = BangOffControl::from_word("P0NP", vec![0.3, 0.2, 0.45, 0.1]).unwrap();
        let mut s = *prep_initial_state();
        for (level, dt) in control.segments() {
            s = propagator(level.field(), dt).unwrap().apply(&s);
        }
        let fast = evolve(prep_initial_state(), &control).unwrap();
        for k in 0..DIM {
            assert!((s.amplitudes()[k] - fast.amplitudes()[k]).norm() < 1e-14);
        }
    }

    #[test]
    fn single_segment_zero_duration_gradient_is_generator() {
        let control = BangOffControl::from_word("P", vec![0.0]).unwrap();
        let s = prep_initial_state();
        let (_, grads) = evolve_with_segment_gradients(s, &control).unwrap();
        let h = build_hamiltonian(4.0);
        let hs = linalg::real_mat_vec(h.entries(), s.amplitudes());
        for k in 0..DIM {
            let want = c(0.0, -1.0) * hs[k];
            assert!((grads[0][k] - want).norm() < 1e-15);
        }
    }

    #[test]
    fn segment_gradients_match_central_differences() {
        let control =
            BangOffControl::from_word("N0P", vec![0.37, 0.81, 0.22]).unwrap();
        let s = prep_initial_state();
        let (_, grads) = evolve_with_segment_gradients(s, &control).unwrap();
        let h = 1e-6;
        for k in 0..3 {
            let mut plus = control.durations().to_vec();
            let mut minus = plus.clone();
            plus[k] += h;
            minus[k] -= h;
            let fp = evolve(s, &BangOffControl::from_word("N0P", plus).unwrap()).unwrap();
            let fm = evolve(s, &BangOffControl::from_word("N0P", minus).unwrap()).unwrap();
            for j in 0..DIM {
                let fd = (fp.amplitudes()[j] - fm.amplitudes()[j]) / (2.0 * h);
                let err = (fd - grads[k][j]).norm();
                assert!(err <= 1e-6 * grads[k][j].norm().max(1e-3), "k={k} j={j} err={err}");
            }
        }
    }

    #[test]
    fn fidelity_examples() {
        let zz = TwoQubitState::zero_zero();
        assert_eq!(fidelity(&zz, &zz), 1.0);
        assert_eq!(fidelity(&zz, &TwoQubitState::basis(3)), 0.0);
        assert!((fidelity(&zz, &bell_phi_plus()) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn concurrence_examples() {
        assert_eq!(concurrence(&TwoQubitState::zero_zero()), 0.0);
        assert!((concurrence(&bell_phi_plus()) - 1.0).abs() < 1e-15);
        let product = TwoQubitState::normalized([ONE; 4]).unwrap();
        assert!(concurrence(&product).abs() < 1e-15);
    }

    #[test]
    fn bloch_examples() {
        let b = reduced_bloch(&TwoQubitState::zero_zero());
        assert_eq!((b.x, b.y, b.z), (0.0, 0.0, 1.0));
        let b = reduced_bloch(&bell_phi_plus());
        assert!(b.length() < 1e-15);
        // |+⟩⊗|0⟩ sits on +x; (|0⟩ + i|1⟩)/√2 ⊗ |0⟩ on +y.
        let plus = TwoQubitState::normalized([ONE, ZERO, ONE, ZERO]).unwrap();
        let b = reduced_bloch(&plus);
        assert!((b.x - 1.0).abs() < 1e-15 && b.y.abs() < 1e-15 && b.z.abs() < 1e-15);
        let plus_i = TwoQubitState::normalized([ONE, ZERO, c(0.0, 1.0), ZERO]).unwrap();
        let b = reduced_bloch(&plus_i);
        assert!((b.y - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bell_examples() {
        let b = bell_coefficients(&TwoQubitState::zero_zero());
        assert!((b.phi_plus.re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((b.phi_minus.re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(b.psi_plus, ZERO);
        assert_eq!(b.singlet_residual, ZERO);

        let psi_plus = TwoQubitState::normalized([ZERO, ONE, ONE, ZERO]).unwrap();
        let b = bell_coefficients(&psi_plus);
        assert!((b.psi_plus - ONE).norm() < 1e-15);
        assert!(b.phi_plus.norm() < 1e-15 && b.phi_minus.norm() < 1e-15);
    }

    #[test]
    fn off_field_quarter_turn_phase() {
        // At T = π/2 the relative phase between |00⟩ and the rest is e^{iπ}.
        let g = *prep_initial_state();
        let control = BangOffControl::from_word("0", vec![FRAC_PI_2]).unwrap();
        let out = evolve(&g, &control).unwrap();
        let rel = out.amplitudes()[0] / g.amplitudes()[0] * (out.amplitudes()[3] / g.amplitudes()[3]).conj();
        assert!((rel - Complex64::from_polar(1.0, PI)).norm() < 1e-12);
    }

    #[test]
    fn new_state_checks_norm() {
        assert!(TwoQubitState::new([ONE, ONE, ZERO, ZERO]).is_err());
        assert!(TwoQubitState::new([ONE, ZERO, ZERO, ZERO]).is_ok());
        assert!(TwoQubitState::normalized([ZERO; 4]).is_err());
    }
}
