//! Lawson–Hanson active-set nonnegative least squares in Gram form.
//!
//! Minimizes ‖Σ λᵢ aᵢ − b‖² over λ ≥ 0 given only G = [⟨aᵢ,aⱼ⟩] and
//! c = [⟨aᵢ,b⟩], so the same code serves any inner product.

use nalgebra::{DMatrix, DVector};

pub const MAX_OUTER_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsOutcome {
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves the Gram-form problem. A non-converged outcome carries the best
/// iterate reached within [`MAX_OUTER_ITERS`].
pub fn nnls_gram(gram: &DMatrix<f64>, c: &DVector<f64>) -> NnlsOutcome {
    let n = c.len();
    let scale = gram.diagonal().iter().chain(c.iter()).fold(1.0_f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale;
    let mut lambda = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    // Generators whose entry was refused at the current iterate; prevents the
    // classic zero-step cycling on degenerate data.
    let mut refused = vec![false; n];

    for outer in 0..MAX_OUTER_ITERS {
        let w = c - gram * &lambda;
        let candidate = (0..n)
            .filter(|&j| !passive[j] && !refused[j])
            .max_by(|&a, &b| w[a].total_cmp(&w[b]))
            .filter(|&j| w[j] > tol);
        let Some(j) = candidate else {
            return NnlsOutcome { coefficients: lambda.iter().copied().collect(), iterations: outer, converged: true };
        };
        passive[j] = true;
        if solve_passive(gram, c, &passive)[j] <= tol {
            passive[j] = false;
            refused[j] = true;
            continue;
        }

        loop {
            let s = solve_passive(gram, c, &passive);
            let blocking = (0..n).filter(|&i| passive[i] && s[i] <= 0.0);
            let alpha = blocking.map(|i| lambda[i] / (lambda[i] - s[i])).fold(f64::INFINITY, f64::min);
            if !alpha.is_finite() {
                lambda = s;
                break;
            }
            lambda += (s - &lambda) * alpha;
            for i in 0..n {
                if passive[i] && lambda[i] <= tol * 1e-3 {
                    passive[i] = false;
                    lambda[i] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
        refused.iter_mut().for_each(|r| *r = false);
    }
    NnlsOutcome { coefficients: lambda.iter().copied().collect(), iterations: MAX_OUTER_ITERS, converged: false }
}

// Unconstrained least squares on the passive set; zeros elsewhere. SVD keeps
// dependent generators (duplicates, opposite pairs) well defined.
fn solve_passive(gram: &DMatrix<f64>, c: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let idx: Vec<usize> = (0..c.len()).filter(|&i| passive[i]).collect();
    let k = idx.len();
    let sub = DMatrix::from_fn(k, k, |a, b| gram[(idx[a], idx[b])]);
    let rhs = DVector::from_fn(k, |a, _| c[idx[a]]);
    let eps = 1e-13 * sub.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let sol = sub.svd(true, true).solve(&rhs, eps).unwrap_or_else(|_| DVector::zeros(k));
    let mut full = DVector::zeros(c.len());
    for (a, &i) in idx.iter().enumerate() {
        full[i] = sol[a];
    }
    full
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gram_of(vectors: &[Vec<f64>], b: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        let n = vectors.len();
        (
            DMatrix::from_fn(n, n, |i, j| dot(&vectors[i], &vectors[j])),
            DVector::from_fn(n, |i, _| dot(&vectors[i], b)),
        )
    }

    #[test]
    fn identity_generators() {
        let (g, c) = gram_of(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[2.0, 3.0]);
        let out = nnls_gram(&g, &c);
        assert!(out.converged);
        assert!((out.coefficients[0] - 2.0).abs() < 1e-14);
        assert!((out.coefficients[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn clips_negative_directions() {
        let (g, c) = gram_of(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[-2.0, 3.0]);
        let out = nnls_gram(&g, &c);
        assert_eq!(out.coefficients[0], 0.0);
        assert!((out.coefficients[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn dependent_generators() {
        let (g, c) = gram_of(&[vec![1.0, 0.0], vec![2.0, 0.0], vec![-1.0, 0.0]], &[4.0, 1.0]);
        let out = nnls_gram(&g, &c);
        assert!(out.converged);
        let combo = out.coefficients[0] + 2.0 * out.coefficients[1] - out.coefficients[2];
        assert!((combo - 4.0).abs() < 1e-12);
    }

    proptest! {
        // Optimality of the returned λ: ∇ = Gλ − c is ≥ 0 off the support and ≈ 0 on it,
        // up to rounding at the magnitude of the terms in Gλ.
        #[test]
        fn kkt_conditions_hold(
            vectors in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 3), 1..6),
            b in prop::collection::vec(-3.0..3.0f64, 3),
        ) {
            let (g, c) = gram_of(&vectors, &b);
            let out = nnls_gram(&g, &c);
            prop_assert!(out.converged);
            let lambda = DVector::from_vec(out.coefficients.clone());
            let grad = &g * &lambda - &c;
            let magnitude = (g.abs() * &lambda).amax().max(c.amax()).max(1.0);
            let tol = 1e-9 * magnitude;
            for i in 0..lambda.len() {
                prop_assert!(lambda[i] >= 0.0);
                if lambda[i] > 0.0 {
                    prop_assert!(grad[i].abs() <= tol, "active gradient {}", grad[i]);
                } else {
                    prop_assert!(grad[i] >= -tol, "inactive gradient {}", grad[i]);
                }
            }
        }
    }
}
