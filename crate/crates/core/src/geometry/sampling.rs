use serde::{Deserialize, Serialize};

use crate::Vec3;

/// Concentric coordinate spheres with quasi-uniform points on each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePolicy {
    pub radii: Vec<f64>,
    pub points_per_shell: usize,
}

impl SamplePolicy {
    /// `n_shells` radii log-spaced in `[r_min, r_max]`.
    pub fn log_shells(r_min: f64, r_max: f64, n_shells: usize, points_per_shell: usize) -> Self {
        let n = n_shells.max(2);
        let (a, b) = (r_min.ln(), r_max.ln());
        let radii = (0..n)
            .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
            .collect();
        SamplePolicy { radii, points_per_shell }
    }

    /// Every sample point, shell by shell.
    pub fn points(&self) -> impl Iterator<Item = (f64, Vec3)> + '_ {
        self.radii.iter().enumerate().flat_map(move |(s, &r)| {
            fibonacci_sphere(self.points_per_shell, s as f64 * 0.61803398875)
                .into_iter()
                .map(move |u| (r, u * r))
        })
    }
}

impl Default for SamplePolicy {
    fn default() -> Self {
        SamplePolicy::log_shells(0.01, 100.0, 60, 64)
    }
}

/// `n` unit vectors on a Fibonacci spiral, rotated in azimuth by
/// `twist` turns. Always contains the poles when `n ≥ 2`.
pub fn fibonacci_sphere(n: usize, twist: f64) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = if n == 1 { 0.0 } else { 1.0 - 2.0 * i as f64 / (n - 1) as f64 };
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let az = golden * i as f64 + std::f64::consts::TAU * twist;
            Vec3::new(rho * az.cos(), rho * az.sin(), z)
        })
        .collect()
}
