//! Smooth map from unconstrained variables onto the duration simplex.
//!
//! `t_s = T · u_{f(s)}² / Σ_j w_j u_j²`, where `f` assigns each segment to a
//! free variable and `w_j` counts the segments sharing variable `j`. With
//! the identity assignment this is the plain squared-variable normalization;
//! tying segments together gives palindromic ansätze.

use rand::Rng;
use rand_distr::Exp1;

#[derive(Debug, Clone, PartialEq)]
pub struct DurationMap {
    segment_to_free: Vec<usize>,
    weights: Vec<f64>,
}

impl DurationMap {
    /// One free variable per segment.
    pub fn identity(segments: usize) -> Self {
        Self {
            segment_to_free: (0..segments).collect(),
            weights: vec![1.0; segments],
        }
    }

    /// Segment `s` shares its variable with segment `len - 1 - s`, giving
    /// duration vectors that read the same backwards.
    pub fn palindrome(segments: usize) -> Self {
        let free = segments.div_ceil(2);
        let segment_to_free: Vec<usize> = (0..segments).map(|s| s.min(segments - 1 - s)).collect();
        let mut weights = vec![0.0; free];
        for &j in &segment_to_free {
            weights[j] += 1.0;
        }
        Self {
            segment_to_free,
            weights,
        }
    }

    pub fn segments(&self) -> usize {
        self.segment_to_free.len()
    }

    pub fn free_count(&self) -> usize {
        self.weights.len()
    }

    /// Free variable that drives segment `s`.
    pub fn free_of(&self, s: usize) -> usize {
        self.segment_to_free[s]
    }

    fn weighted_norm(&self, u: &[f64]) -> f64 {
        self.weights.iter().zip(u).map(|(w, x)| w * x * x).sum()
    }

    /// Writes the segment durations for `u` into `out`.
    pub fn durations(&self, u: &[f64], total: f64, out: &mut [f64]) {
        let norm = self.weighted_norm(u);
        for (o, &j) in out.iter_mut().zip(&self.segment_to_free) {
            *o = total * u[j] * u[j] / norm;
        }
    }

    /// Chain rule from `∂C/∂t_s` to `∂C/∂u_j`.
    pub fn pull_back(&self, u: &[f64], durations: &[f64], total: f64, grad_t: &[f64], grad_u: &mut [f64]) {
        let norm = self.weighted_norm(u);
        let mean: f64 = grad_t.iter().zip(durations).map(|(g, t)| g * t).sum::<f64>() / total;
        grad_u.iter_mut().for_each(|g| *g = 0.0);
        for (s, &j) in self.segment_to_free.iter().enumerate() {
            grad_u[j] += grad_t[s];
        }
        for j in 0..grad_u.len() {
            grad_u[j] = 2.0 * total * u[j] / norm * (grad_u[j] - self.weights[j] * mean);
        }
    }

    /// A variable vector whose image is `durations` (which must respect the
    /// tying and sum to `total`).
    pub fn preimage(&self, durations: &[f64], total: f64) -> Vec<f64> {
        let mut u = vec![0.0; self.free_count()];
        for (s, &j) in self.segment_to_free.iter().enumerate().rev() {
            u[j] = (durations[s].max(0.0) / total).sqrt();
        }
        u
    }

    /// Uniform point on the free simplex via normalized exponentials.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.free_count())
            .map(|j| {
                let e: f64 = rng.sample(Exp1);
                (e / self.weights[j]).sqrt()
            })
            .collect()
    }
}
