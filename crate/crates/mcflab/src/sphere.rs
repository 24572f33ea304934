//! Equal-weight quadrature samplings of spheres r·S^{n-1}.

use nalgebra::DVector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Surface area of the unit sphere S^{n-1} in R^n.
pub fn unit_sphere_area(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => std::f64::consts::TAU,
        _ => std::f64::consts::TAU / (n as f64 - 2.0) * unit_sphere_area(n - 2),
    }
}

pub fn sphere_area(n: usize, r: f64) -> f64 {
    unit_sphere_area(n) * r.powi(n as i32 - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SphereScheme {
    UniformAngle,
    Fibonacci,
    MonteCarlo,
}

impl std::fmt::Display for SphereScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SphereScheme::UniformAngle => "uniform-angle",
            SphereScheme::Fibonacci => "fibonacci",
            SphereScheme::MonteCarlo => "monte-carlo",
        };
        f.write_str(s)
    }
}

/// Equal-weight node set on r·S^{n-1}; weights sum to the sphere area.
#[derive(Debug, Clone)]
pub struct SphereSampling {
    pub dimension: usize,
    pub radius: f64,
    pub nodes: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
    pub scheme: SphereScheme,
    pub seed: u64,
}

impl SphereSampling {
    /// Scheme chosen by dimension: n=2 uniform angles, n=3 Fibonacci lattice,
    /// otherwise seeded Gaussian sampling.
    pub fn default_for(n: usize, r: f64, count: usize, seed: u64) -> Result<Self> {
        let scheme = match n {
            2 => SphereScheme::UniformAngle,
            3 => SphereScheme::Fibonacci,
            _ => SphereScheme::MonteCarlo,
        };
        Self::new(n, r, count, scheme, seed)
    }

    pub fn new(n: usize, r: f64, count: usize, scheme: SphereScheme, seed: u64) -> Result<Self> {
        if n < 1 || count < 2 || !(r > 0.0) {
            return Err(Error::UnsupportedScheme {
                scheme: format!("{scheme} with count {count}, r {r}"),
                n,
            });
        }
        let nodes = match (scheme, n) {
            (_, 1) => (0..count)
                .map(|j| DVector::from_element(1, if j % 2 == 0 { r } else { -r }))
                .collect(),
            (SphereScheme::UniformAngle, 2) => (0..count)
                .map(|j| {
                    let theta = std::f64::consts::TAU * j as f64 / count as f64;
                    DVector::from_column_slice(&[r * theta.cos(), r * theta.sin()])
                })
                .collect(),
            (SphereScheme::Fibonacci, 3) => {
                let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
                (0..count)
                    .map(|j| {
                        let z = 1.0 - (2.0 * j as f64 + 1.0) / count as f64;
                        let rho = (1.0 - z * z).max(0.0).sqrt();
                        let phi = std::f64::consts::TAU * (j as f64 / golden).fract();
                        DVector::from_column_slice(&[
                            r * rho * phi.cos(),
                            r * rho * phi.sin(),
                            r * z,
                        ])
                    })
                    .collect()
            }
            (SphereScheme::MonteCarlo, _) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..count)
                    .map(|_| {
                        loop {
                            let v = DVector::from_iterator(
                                n,
                                (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)),
                            );
                            let norm = v.norm();
                            if norm > 1e-8 {
                                return v * (r / norm);
                            }
                        }
                    })
                    .collect()
            }
            _ => {
                return Err(Error::UnsupportedScheme { scheme: scheme.to_string(), n });
            }
        };
        let w = sphere_area(n, r) / count as f64;
        Ok(Self {
            dimension: n,
            radius: r,
            nodes,
            weights: vec![w; count],
            scheme,
            seed,
        })
    }

    pub fn count(&self) -> usize {
        self.nodes.len()
    }

    /// Serial quadrature sum of a scalar integrand over the sampling.
    pub fn integrate<F: FnMut(&DVector<f64>) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, &w)| w * f(x))
            .sum()
    }

    /// Index of the antipodal node of node `j`, if it is present exactly.
    pub fn antipode_index(&self, j: usize) -> Option<usize> {
        let target = -&self.nodes[j];
        let tol = 1e-9 * self.radius;
        self.nodes.iter().position(|p| (p - &target).norm() <= tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn uniform_angles_four_points() {
        let s = SphereSampling::new(2, 1.0, 4, SphereScheme::UniformAngle, 0).unwrap();
        let expected = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (node, exp) in s.nodes.iter().zip(expected) {
            assert!((node[0] - exp[0]).abs() < 1e-12);
            assert!((node[1] - exp[1]).abs() < 1e-12);
        }
        assert!(s.weights.iter().all(|&w| (w - PI / 2.0).abs() < 1e-12));
    }

    #[test]
    fn fibonacci_weight_sum() {
        let s = SphereSampling::new(3, 1.0, 100, SphereScheme::Fibonacci, 0).unwrap();
        let total: f64 = s.weights.iter().sum();
        assert!((total - 4.0 * PI).abs() < 1e-12 * 4.0 * PI);
        for node in &s.nodes {
            assert!((node.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_quadrature_cos_squared() {
        let s = SphereSampling::new(2, 1.0, 360, SphereScheme::UniformAngle, 0).unwrap();
        let integral = s.integrate(|x| x[0] * x[0]);
        assert!((integral - PI).abs() < 1e-10, "integral {integral}");
    }

    #[test]
    fn monte_carlo_is_seeded_and_on_sphere() {
        let a = SphereSampling::new(4, 2.0, 50, SphereScheme::MonteCarlo, 42).unwrap();
        let b = SphereSampling::new(4, 2.0, 50, SphereScheme::MonteCarlo, 42).unwrap();
        let c = SphereSampling::new(4, 2.0, 50, SphereScheme::MonteCarlo, 43).unwrap();
        assert_eq!(a.nodes, b.nodes);
        assert_ne!(a.nodes, c.nodes);
        for node in &a.nodes {
            assert!((node.norm() - 2.0).abs() < 1e-12 * 2.0);
        }
        let total: f64 = a.weights.iter().sum();
        assert!((total - sphere_area(4, 2.0)).abs() < 1e-12 * total);
    }

    #[test]
    fn scheme_dimension_mismatch_rejected() {
        assert!(SphereSampling::new(3, 1.0, 10, SphereScheme::UniformAngle, 0).is_err());
        assert!(SphereSampling::new(2, 1.0, 10, SphereScheme::Fibonacci, 0).is_err());
        assert!(SphereSampling::new(2, 1.0, 1, SphereScheme::UniformAngle, 0).is_err());
    }

    #[test]
    fn area_formula() {
        assert_eq!(unit_sphere_area(1), 2.0);
        assert_eq!(unit_sphere_area(2), TAU);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-14);
    }

    #[test]
    fn antipodes_on_even_circle() {
        let s = SphereSampling::new(2, 1.0, 8, SphereScheme::UniformAngle, 0).unwrap();
        assert_eq!(s.antipode_index(1), Some(5));
        let odd = SphereSampling::new(2, 1.0, 7, SphereScheme::UniformAngle, 0).unwrap();
        assert_eq!(odd.antipode_index(0), None);
    }
}
