//! Time partitions with per-interval step sizes and polynomial degrees.

use crate::error::{Error, Result};

/// Smallest admissible local degree of the C1 trial space.
pub const MIN_DEGREE: usize = 2;

/// Partition `0 = t_0 < t_1 < ... < t_N = T` with a degree `r_n >= 2` on every
/// interval `I_n = (t_{n-1}, t_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMesh {
    nodes: Vec<f64>,
    degrees: Vec<usize>,
}

impl TimeMesh {
    /// Uniform partition of `(0, T)` into `n` intervals of degree `r`.
    pub fn uniform(horizon: f64, intervals: usize, degree: usize) -> Result<Self> {
        if degree < MIN_DEGREE {
            return Err(Error::InvalidDegree {
                degree,
                min: MIN_DEGREE,
            });
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Validation(format!(
                "final time must be positive, got {horizon}"
            )));
        }
        if intervals == 0 {
            return Err(Error::Validation(
                "at least one interval is required".into(),
            ));
        }
        let nodes = (0..=intervals)
            .map(|n| n as f64 * horizon / intervals as f64)
            .collect();
        Ok(Self {
            nodes,
            degrees: vec![degree; intervals],
        })
    }

    /// Mesh from explicit node and degree arrays.
    pub fn from_arrays(nodes: Vec<f64>, degrees: Vec<usize>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Validation("a mesh needs at least two nodes".into()));
        }
        if degrees.len() != nodes.len() - 1 {
            return Err(Error::Validation(format!(
                "{} nodes require {} degrees, got {}",
                nodes.len(),
                nodes.len() - 1,
                degrees.len()
            )));
        }
        if nodes.iter().any(|t| !t.is_finite()) {
            return Err(Error::Validation("mesh nodes must be finite".into()));
        }
        if let Some(w) = nodes.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::Validation(format!(
                "mesh nodes must be strictly increasing ({} >= {})",
                w[0], w[1]
            )));
        }
        if let Some(&r) = degrees.iter().find(|&&r| r < MIN_DEGREE) {
            return Err(Error::Validation(format!(
                "degree {r} is below the minimum {MIN_DEGREE}"
            )));
        }
        Ok(Self { nodes, degrees })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Number of intervals `N`.
    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Interval `n` (zero-based) as `(t_n, t_{n+1})`.
    pub fn interval(&self, n: usize) -> (f64, f64) {
        (self.nodes[n], self.nodes[n + 1])
    }

    /// Step size `k` of interval `n` (zero-based).
    pub fn step(&self, n: usize) -> f64 {
        self.nodes[n + 1] - self.nodes[n]
    }

    pub fn steps(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.windows(2).map(|w| w[1] - w[0])
    }

    /// Largest step size.
    pub fn max_step(&self) -> f64 {
        self.steps().fold(0.0, f64::max)
    }

    /// Index of the interval owning `t`: nodes belong to the interval on their
    /// left, except `t_0` which belongs to the first interval.
    pub fn locate(&self, t: f64) -> Option<usize> {
        if !(t >= self.start() && t <= self.end()) {
            return None;
        }
        let idx = self.nodes[1..].partition_point(|&node| node < t);
        Some(idx.min(self.len() - 1))
    }
}

/// Per-interval flags for the sufficient solvability bound
/// `(L k_n / 2) sqrt(8 + k_n^2) < 1`.
pub fn contraction_check(mesh: &TimeMesh, lipschitz: f64) -> Vec<bool> {
    mesh.steps()
        .map(|k| contraction_factor(lipschitz, k) < 1.0)
        .collect()
}

/// Contraction bound of the fixed-point operator on a step of size `k`.
pub fn contraction_factor(lipschitz: f64, k: f64) -> f64 {
    0.5 * lipschitz * k * (8.0 + k * k).sqrt()
}
