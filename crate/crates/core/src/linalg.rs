//! Small fixed-size dense linear algebra for the 4-dimensional two-qubit space.
//!
//! Everything here works on stack arrays. The only nontrivial routine is the
//! cyclic Jacobi eigensolver for real symmetric 4×4 matrices, which is all the
//! propagator construction needs.

use num_complex::Complex64;

pub const DIM: usize = 4;

pub type RealMatrix = [[f64; DIM]; DIM];
pub type ComplexMatrix = [[Complex64; DIM]; DIM];
pub type ComplexVector = [Complex64; DIM];

const JACOBI_OFF_DIAGONAL_TOL: f64 = 1e-15;
const JACOBI_MAX_SWEEPS: usize = 64;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Eigen-decomposition `A = V Λ Vᵀ` of a real symmetric matrix.
///
/// Eigenvalues are ascending and `vectors[i][j]` is component `i` of the
/// `j`-th eigenvector (columns are eigenvectors). Each eigenvector is signed
/// so that its largest-magnitude component is positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: [f64; DIM],
    pub vectors: RealMatrix,
}

impl SpectralDecomposition {
    /// Cyclic Jacobi rotations until the largest off-diagonal entry drops
    /// below 1e-15.
    pub fn of_symmetric(matrix: &RealMatrix) -> Self {
        let mut a = *matrix;
        let mut v = real_identity();

        for _ in 0..JACOBI_MAX_SWEEPS {
            if max_off_diagonal(&a) < JACOBI_OFF_DIAGONAL_TOL {
                break;
            }
            for p in 0..DIM {
                for q in (p + 1)..DIM {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }

        let mut order = [0, 1, 2, 3];
        order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));

        let mut eigenvalues = [0.0; DIM];
        let mut vectors = [[0.0; DIM]; DIM];
        for (col, &src) in order.iter().enumerate() {
            eigenvalues[col] = a[src][src];
            let mut pivot = 0;
            for row in 1..DIM {
                if v[row][src].abs() > v[pivot][src].abs() + 1e-14 {
                    pivot = row;
                }
            }
            let sign = if v[pivot][src] < 0.0 { -1.0 } else { 1.0 };
            for row in 0..DIM {
                vectors[row][col] = sign * v[row][src];
            }
        }
        Self {
            eigenvalues,
            vectors,
        }
    }

    /// `V Λ Vᵀ`.
    pub fn reconstruct(&self) -> RealMatrix {
        let mut out = [[0.0; DIM]; DIM];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = (0..DIM)
                    .map(|k| self.vectors[i][k] * self.eigenvalues[k] * self.vectors[j][k])
                    .sum();
            }
        }
        out
    }

    /// Column `j` of `V`.
    pub fn eigenvector(&self, j: usize) -> [f64; DIM] {
        std::array::from_fn(|i| self.vectors[i][j])
    }

    /// Applies `exp(-i H dt) = V exp(-i Λ dt) Vᵀ` to `state` in place.
    #[inline]
    pub fn apply_exp(&self, dt: f64, state: &mut ComplexVector) {
        let v = &self.vectors;
        let mut rotated = [ZERO; DIM];
        for (k, slot) in rotated.iter_mut().enumerate() {
            let mut acc = ZERO;
            for i in 0..DIM {
                acc += state[i] * v[i][k];
            }
            let (s, c) = (self.eigenvalues[k] * dt).sin_cos();
            *slot = acc * Complex64::new(c, -s);
        }
        for (i, out) in state.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in 0..DIM {
                acc += rotated[k] * v[i][k];
            }
            *out = acc;
        }
    }

    /// Dense `exp(-i H dt)`.
    pub fn exp_matrix(&self, dt: f64) -> ComplexMatrix {
        let phases: [Complex64; DIM] = std::array::from_fn(|k| {
            let (s, c) = (self.eigenvalues[k] * dt).sin_cos();
            Complex64::new(c, -s)
        });
        let mut out = [[ZERO; DIM]; DIM];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                let mut acc = ZERO;
                for k in 0..DIM {
                    acc += phases[k] * (self.vectors[i][k] * self.vectors[j][k]);
                }
                *entry = acc;
            }
        }
        out
    }
}

fn rotate(a: &mut RealMatrix, v: &mut RealMatrix, p: usize, q: usize) {
    let apq = a[p][q];
    if apq == 0.0 {
        return;
    }
    let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    for k in 0..DIM {
        let akp = a[k][p];
        let akq = a[k][q];
        a[k][p] = c * akp - s * akq;
        a[k][q] = s * akp + c * akq;
    }
    for k in 0..DIM {
        let apk = a[p][k];
        let aqk = a[q][k];
        a[p][k] = c * apk - s * aqk;
        a[q][k] = s * apk + c * aqk;
    }
    // The rotation annihilates (p, q) analytically; pin it to avoid residue.
    a[p][q] = 0.0;
    a[q][p] = 0.0;

    for row in v.iter_mut() {
        let vp = row[p];
        let vq = row[q];
        row[p] = c * vp - s * vq;
        row[q] = s * vp + c * vq;
    }
}

fn max_off_diagonal(a: &RealMatrix) -> f64 {
    let mut m: f64 = 0.0;
    for (i, row) in a.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if i != j {
                m = m.max(x.abs());
            }
        }
    }
    m
}

pub fn real_identity() -> RealMatrix {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 }))
}

pub fn complex_identity() -> ComplexMatrix {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { ONE } else { ZERO }))
}

pub fn mat_mul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = [[ZERO; DIM]; DIM];
    for i in 0..DIM {
        for k in 0..DIM {
            let aik = a[i][k];
            for j in 0..DIM {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn mat_vec(a: &ComplexMatrix, x: &ComplexVector) -> ComplexVector {
    std::array::from_fn(|i| (0..DIM).map(|k| a[i][k] * x[k]).sum())
}

#[inline]
pub fn real_mat_vec(a: &RealMatrix, x: &ComplexVector) -> ComplexVector {
    std::array::from_fn(|i| {
        let mut acc = ZERO;
        for k in 0..DIM {
            acc += x[k] * a[i][k];
        }
        acc
    })
}

pub fn adjoint(a: &ComplexMatrix) -> ComplexMatrix {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i].conj()))
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..DIM {
        for j in 0..DIM {
            m = m.max((a[i][j] - b[i][j]).norm());
        }
    }
    m
}

/// `⟨x|y⟩`, conjugate-linear in the first argument.
#[inline]
pub fn inner(x: &ComplexVector, y: &ComplexVector) -> Complex64 {
    let mut acc = ZERO;
    for k in 0..DIM {
        acc += x[k].conj() * y[k];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_symmetric() -> RealMatrix {
        [
            [2.0, -1.0, 0.5, 0.0],
            [-1.0, 3.0, 0.25, -0.75],
            [0.5, 0.25, -1.0, 2.0],
            [0.0, -0.75, 2.0, 0.5],
        ]
    }

    #[test]
    fn jacobi_reconstructs_and_is_orthogonal() {
        let a = sample_symmetric();
        let eig = SpectralDecomposition::of_symmetric(&a);
        let r = eig.reconstruct();
        for i in 0..DIM {
            for j in 0..DIM {
                assert!((r[i][j] - a[i][j]).abs() < 1e-12);
                let dot: f64 = (0..DIM).map(|k| eig.vectors[k][i] * eig.vectors[k][j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-12);
            }
        }
        assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn jacobi_on_diagonal_input_is_a_permutation() {
        let a = [
            [0.5, 0.0, 0.0, 0.0],
            [0.0, -1.5, 0.0, 0.0],
            [0.0, 0.0, 2.0, 0.0],
            [0.0, 0.0, 0.0, 0.25],
        ];
        let eig = SpectralDecomposition::of_symmetric(&a);
        assert_eq!(eig.eigenvalues, [-1.5, 0.25, 0.5, 2.0]);
        assert_eq!(eig.eigenvector(0), [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn trace_and_determinant_are_preserved() {
        let a = sample_symmetric();
        let eig = SpectralDecomposition::of_symmetric(&a);
        let trace: f64 = (0..DIM).map(|i| a[i][i]).sum();
        assert!((eig.eigenvalues.iter().sum::<f64>() - trace).abs() < 1e-12);
    }

    #[test]
    fn exp_matrix_matches_in_place_application() {
        let eig = SpectralDecomposition::of_symmetric(&sample_symmetric());
        let u = eig.exp_matrix(0.37);
        let x: ComplexVector = [
            Complex64::new(0.3, 0.1),
            Complex64::new(-0.2, 0.5),
            Complex64::new(0.7, 0.0),
            Complex64::new(0.0, -0.4),
        ];
        let mut y = x;
        eig.apply_exp(0.37, &mut y);
        let z = mat_vec(&u, &x);
        for k in 0..DIM {
            assert!((y[k] - z[k]).norm() < 1e-14);
        }
    }
}
