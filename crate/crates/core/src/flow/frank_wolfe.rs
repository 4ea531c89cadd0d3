//! Pairwise Frank-Wolfe for convex quadratics over the probability simplex.
//!
//! Minimizes `E(w) = wᵀ K w` for a positive semidefinite `K`. The simplex
//! vertices are single-atom measures, so the linear subproblem is just the
//! atom of smallest potential `(K w)_i`. Each step moves mass from the
//! worst supported atom to the best atom with an exact line search.

use serde::{Deserialize, Serialize};

/// A quadratic form `wᵀ K w` on the simplex of `dim()` atoms.
pub trait SimplexQuadratic {
    fn dim(&self) -> usize;

    /// Potentials `K w`.
    fn apply(&self, w: &[f64]) -> Vec<f64>;

    /// `K[i][j]`.
    fn entry(&self, i: usize, j: usize) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FwOptions {
    /// Stop once `(E - lower) <= tolerance * E`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FwOptions {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_iterations: 100_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FwSolution {
    pub weights: Vec<f64>,
    /// `wᵀ K w` at the returned weights.
    pub value: f64,
    /// Best Frank-Wolfe lower bound on the minimum seen along the way.
    pub lower_bound: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl FwSolution {
    pub fn relative_gap(&self) -> f64 {
        (self.value - self.lower_bound) / self.value
    }
}

pub fn minimize<Q: SimplexQuadratic + ?Sized>(q: &Q, options: FwOptions) -> FwSolution {
    let n = q.dim();
    assert!(n > 0, "empty simplex");
    let mut w = vec![1.0 / n as f64; n];
    let mut lower_bound = f64::NEG_INFINITY;
    let mut value = f64::INFINITY;
    for iter in 0..options.max_iterations {
        let g = q.apply(&w);
        value = dot(&w, &g);
        let (best, g_best) = argmin(&g);
        lower_bound = lower_bound.max(2.0 * g_best - value);
        if value - lower_bound <= options.tolerance * value.abs() {
            return FwSolution { weights: w, value, lower_bound, iterations: iter, converged: true };
        }
        let (worst, g_worst) = g
            .iter()
            .enumerate()
            .filter(|(i, _)| w[*i] > 0.0)
            .map(|(i, &x)| (i, x))
            .fold((usize::MAX, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        if worst == best || g_worst <= g_best {
            return FwSolution { weights: w, value, lower_bound: value, iterations: iter, converged: true };
        }
        let curvature = q.entry(best, best) + q.entry(worst, worst) - 2.0 * q.entry(best, worst);
        let step = if curvature > 0.0 {
            ((g_worst - g_best) / curvature).min(w[worst])
        } else {
            w[worst]
        };
        w[worst] -= step;
        w[best] += step;
        if w[worst] < 1e-300 {
            w[worst] = 0.0;
        }
    }
    FwSolution { weights: w, value, lower_bound, iterations: options.max_iterations, converged: false }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn argmin(g: &[f64]) -> (usize, f64) {
    g.iter()
        .enumerate()
        .map(|(i, &x)| (i, x))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Dense(Vec<Vec<f64>>);

    impl SimplexQuadratic for Dense {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, w: &[f64]) -> Vec<f64> {
            self.0.iter().map(|row| dot(row, w)).collect()
        }
        fn entry(&self, i: usize, j: usize) -> f64 {
            self.0[i][j]
        }
    }

    #[test]
    fn diagonal_minimizer_is_harmonic() {
        // min Σ d_i w_i² on the simplex: w_i ∝ 1/d_i, value 1/Σ(1/d_i)
        let d = [1.0, 2.0, 4.0];
        let k = Dense((0..3).map(|i| (0..3).map(|j| if i == j { d[i] } else { 0.0 }).collect()).collect());
        let sol = minimize(&k, FwOptions::default());
        assert!(sol.converged);
        let expected = 1.0 / (1.0 + 0.5 + 0.25);
        assert!((sol.value - expected).abs() < 1e-8 * expected);
        assert!((sol.weights[0] - expected).abs() < 1e-4);
    }

    #[test]
    fn corner_solution() {
        // one atom dominates: optimum sits on a vertex
        let k = Dense(vec![vec![1.0, 1.0], vec![1.0, 3.0]]);
        let sol = minimize(&k, FwOptions::default());
        assert!((sol.value - 1.0).abs() < 1e-9);
        assert!(sol.weights[1] < 1e-9);
    }
}
