//! Clutteredness of a table-top scene.
//!
//! Object positions are summarized by a bivariate Gaussian `p`, the table by
//! a uniform density `q = 1/V` over the workspace. The measure is
//!
//! ```text
//! h(p)    = ½·ln((2πe)^r · det⁺Σ)          differential entropy
//! h(p, q) = ln V                            cross entropy against the table
//! D       = max(0, h(p, q) − h(p))          divergence
//! ξ       = exp(−D)                         clutteredness, in (0, 1]
//! ```
//!
//! `ξ = 1` means the objects are spread at least as widely as a uniform
//! placement would be; ξ falls towards 0 as they bunch together.
//!
//! When the objects are collinear the sample covariance has rank 1. The
//! entropy is then taken over the supporting line (pseudo-determinant over
//! the non-degenerate eigen-directions), the way a singular Gaussian is
//! normally treated, rather than letting the ridge term send it to −∞.

use std::f64::consts::{E, PI};

use nalgebra::{Matrix2, Point2, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scene::{Scene, WorkspaceBounds};

/// Ridge added to the sample covariance, in m².
pub const COVARIANCE_RIDGE: f64 = 1e-6;
/// Sample-covariance eigenvalues at or below this fraction of the largest one
/// are treated as degenerate directions.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianFit {
    pub mean: Point2<f64>,
    pub covariance: Matrix2<f64>,
    /// Number of non-degenerate directions of the underlying data (1 or 2).
    pub rank: usize,
}

impl GaussianFit {
    /// Full-rank fit from an explicit covariance.
    pub fn new(mean: Point2<f64>, covariance: Matrix2<f64>) -> Self {
        GaussianFit {
            mean,
            covariance,
            rank: 2,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.covariance.determinant()
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let eig = SymmetricEigen::new(self.covariance).eigenvalues;
        let (a, b) = (eig[0], eig[1]);
        if a >= b {
            [a, b]
        } else {
            [b, a]
        }
    }

    /// Log-density of the full (ridge-regularized) Gaussian.
    pub fn ln_pdf(&self, p: &Point2<f64>) -> f64 {
        let inv = self
            .covariance
            .try_inverse()
            .expect("covariance is positive definite");
        let d = p - self.mean;
        -0.5 * d.dot(&(inv * d)) - (2.0 * PI).ln() - 0.5 * self.determinant().ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClutterResult {
    pub fit: GaussianFit,
    /// h(p), nats.
    pub entropy_p: f64,
    /// h(p, q), nats.
    pub cross_entropy_pq: f64,
    /// D(p‖q) after clamping at zero, nats.
    pub divergence: f64,
    pub xi: f64,
}

/// Sample mean and sample covariance (divisor N−1, plus a small ridge) of the
/// object centers.
pub fn fit_gaussian(scene: &Scene) -> Result<GaussianFit> {
    let n = scene.objects.len();
    if n < 2 {
        return Err(Error::DegenerateScene { objects: n });
    }
    let mean = Point2::from(
        scene
            .objects
            .iter()
            .map(|o| o.position.coords)
            .sum::<nalgebra::Vector2<f64>>()
            / n as f64,
    );
    let mut sample = Matrix2::zeros();
    for o in &scene.objects {
        let d = o.position - mean;
        sample += d * d.transpose();
    }
    sample /= (n - 1) as f64;

    let eig = SymmetricEigen::new(sample).eigenvalues;
    let largest = eig.max();
    let rank = eig
        .iter()
        .filter(|&&l| l > DEGENERACY_TOLERANCE * largest)
        .count()
        .max(1);

    Ok(GaussianFit {
        mean,
        covariance: sample + Matrix2::identity() * COVARIANCE_RIDGE,
        rank,
    })
}

pub fn differential_entropy(fit: &GaussianFit) -> f64 {
    let ln_2pi_e = (2.0 * PI * E).ln();
    let eig = fit.eigenvalues();
    let r = fit.rank.clamp(1, 2);
    let ln_pdet: f64 = eig[..r].iter().map(|l| l.ln()).sum();
    0.5 * (r as f64 * ln_2pi_e + ln_pdet)
}

/// Cross entropy of the fit against the uniform density on the workspace,
/// with `p` taken as truncated to the workspace: exactly `ln(area)`.
pub fn cross_entropy_uniform(_fit: &GaussianFit, bounds: &WorkspaceBounds) -> f64 {
    bounds.area().ln()
}

pub fn kl_divergence(fit: &GaussianFit, bounds: &WorkspaceBounds) -> f64 {
    (cross_entropy_uniform(fit, bounds) - differential_entropy(fit)).max(0.0)
}

pub fn clutteredness(scene: &Scene) -> Result<ClutterResult> {
    let fit = fit_gaussian(scene)?;
    let entropy_p = differential_entropy(&fit);
    let cross_entropy_pq = cross_entropy_uniform(&fit, &scene.bounds);
    let divergence = (cross_entropy_pq - entropy_p).max(0.0);
    Ok(ClutterResult {
        fit,
        entropy_p,
        cross_entropy_pq,
        divergence,
        xi: (-divergence).exp(),
    })
}

/// ξ for planning: scenes with fewer than two objects carry no clutter.
pub fn scene_xi(scene: &Scene) -> f64 {
    match clutteredness(scene) {
        Ok(r) => r.xi,
        Err(_) => 1.0,
    }
}

/// Grid quadrature used to check the closed forms above. Not used by the
/// planner.
pub mod oracle {
    use super::*;

    fn cell_log_densities(
        fit: &GaussianFit,
        bounds: &WorkspaceBounds,
        grid_n: usize,
    ) -> (Vec<f64>, f64) {
        let dx = bounds.width() / grid_n as f64;
        let dy = bounds.depth() / grid_n as f64;
        let inv = fit
            .covariance
            .try_inverse()
            .expect("covariance is positive definite");
        let norm = -(2.0 * PI).ln() - 0.5 * fit.determinant().ln();
        let mut out = Vec::with_capacity(grid_n * grid_n);
        for i in 0..grid_n {
            let x = bounds.x_min + (i as f64 + 0.5) * dx;
            for j in 0..grid_n {
                let y = bounds.y_min + (j as f64 + 0.5) * dy;
                let d = nalgebra::Vector2::new(x - fit.mean.x, y - fit.mean.y);
                out.push(norm - 0.5 * d.dot(&(inv * d)));
            }
        }
        (out, dx * dy)
    }

    /// Probability mass of the (untruncated) Gaussian inside the bounds.
    pub fn gaussian_mass_inside(fit: &GaussianFit, bounds: &WorkspaceBounds, grid_n: usize) -> f64 {
        let (logs, da) = cell_log_densities(fit, bounds, grid_n);
        logs.iter().map(|l| l.exp()).sum::<f64>() * da
    }

    /// D(p̃‖q) by midpoint Riemann summation, where p̃ is the Gaussian
    /// truncated to the workspace and renormalized.
    pub fn kl_numeric_oracle(fit: &GaussianFit, bounds: &WorkspaceBounds, grid_n: usize) -> f64 {
        assert!(grid_n >= 64, "grid_n must be at least 64");
        let (logs, da) = cell_log_densities(fit, bounds, grid_n);
        let mass: f64 = logs.iter().map(|l| l.exp()).sum::<f64>() * da;
        let ln_mass = mass.ln();
        let ln_area = bounds.area().ln();
        logs.iter()
            .map(|&l| {
                let lt = l - ln_mass;
                lt.exp() * (lt + ln_area)
            })
            .sum::<f64>()
            * da
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{generate_uncluttered_scene, SceneObject};
    use approx::assert_relative_eq;
    use nalgebra::Point3;

    fn bounds(w: f64, h: f64) -> WorkspaceBounds {
        WorkspaceBounds {
            x_min: 0.0,
            x_max: w,
            y_min: 0.0,
            y_max: h,
            z_max: 0.5,
        }
    }

    /// −∫ p ln p over a wide grid, independent of the closed form.
    fn entropy_by_quadrature(cov: Matrix2<f64>) -> f64 {
        let inv = cov.try_inverse().unwrap();
        let norm = 1.0 / (2.0 * PI * cov.determinant().sqrt());
        let s = cov.diagonal().max().sqrt();
        let half = 10.0 * s;
        let n = 800;
        let h = 2.0 * half / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let v = nalgebra::Vector2::new(
                    -half + (i as f64 + 0.5) * h,
                    -half + (j as f64 + 0.5) * h,
                );
                let p = norm * (-0.5 * v.dot(&(inv * v))).exp();
                if p > 0.0 {
                    acc -= p * p.ln();
                }
            }
        }
        acc * h * h
    }

    #[test]
    fn four_corner_fit() {
        let b = WorkspaceBounds {
            x_min: -1.0,
            x_max: 3.0,
            y_min: -1.0,
            y_max: 3.0,
            z_max: 0.5,
        };
        let objects = vec![
            SceneObject::new(1, 0.0, 0.0),
            SceneObject::new(2, 2.0, 0.0),
            SceneObject::new(3, 0.0, 2.0),
            SceneObject::new(4, 2.0, 2.0),
        ];
        let scene = Scene::new(b, objects, Point3::new(1.0, -1.0, 0.3)).unwrap();
        let fit = fit_gaussian(&scene).unwrap();
        assert_relative_eq!(fit.mean, Point2::new(1.0, 1.0), epsilon = 1e-12);
        assert_relative_eq!(
            fit.covariance[(0, 0)],
            4.0 / 3.0 + COVARIANCE_RIDGE,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            fit.covariance[(1, 1)],
            4.0 / 3.0 + COVARIANCE_RIDGE,
            epsilon = 1e-12
        );
        assert_relative_eq!(fit.covariance[(0, 1)], 0.0, epsilon = 1e-12);
        assert_eq!(fit.rank, 2);
    }

    #[test]
    fn collinear_row_stays_positive_definite() {
        let scene = generate_uncluttered_scene(0.15, 5).unwrap();
        let fit = fit_gaussian(&scene).unwrap();
        assert!(fit.determinant() > 0.0);
        assert_eq!(fit.rank, 1);
    }

    #[test]
    fn single_object_is_degenerate() {
        let scene = Scene::new(
            bounds(1.0, 1.0),
            vec![SceneObject::new(1, 0.5, 0.5)],
            Point3::new(0.5, 0.0, 0.3),
        )
        .unwrap();
        assert!(matches!(
            fit_gaussian(&scene),
            Err(Error::DegenerateScene { objects: 1 })
        ));
    }

    #[test]
    fn identity_entropy_matches_quadrature() {
        let fit = GaussianFit::new(Point2::origin(), Matrix2::identity());
        let numeric = entropy_by_quadrature(Matrix2::identity());
        assert_relative_eq!(numeric, 2.837877, epsilon = 1e-4);
        assert_relative_eq!(differential_entropy(&fit), numeric, epsilon = 1e-4);
    }

    #[test]
    fn scaled_identity_entropy_adds_ln4() {
        let cov = Matrix2::identity() * 4.0;
        let fit = GaussianFit::new(Point2::origin(), cov);
        let base = differential_entropy(&GaussianFit::new(Point2::origin(), Matrix2::identity()));
        assert_relative_eq!(
            differential_entropy(&fit),
            base + 4.0_f64.ln(),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            differential_entropy(&fit),
            entropy_by_quadrature(cov),
            epsilon = 1e-4
        );
    }

    #[test]
    fn entropy_is_symmetric_in_axis_order() {
        let a = GaussianFit::new(Point2::origin(), Matrix2::new(0.3, 0.0, 0.0, 0.07));
        let b = GaussianFit::new(Point2::origin(), Matrix2::new(0.07, 0.0, 0.0, 0.3));
        assert_relative_eq!(
            differential_entropy(&a),
            differential_entropy(&b),
            epsilon = 1e-14
        );
    }

    #[test]
    fn cross_entropy_is_log_area() {
        let fit = GaussianFit::new(Point2::new(0.5, 0.5), Matrix2::identity() * 0.01);
        assert_relative_eq!(
            cross_entropy_uniform(&fit, &bounds(2.0, 2.0)),
            4.0_f64.ln(),
            epsilon = 1e-14
        );
        assert_eq!(cross_entropy_uniform(&fit, &bounds(1.0, 1.0)), 0.0);
        let d = cross_entropy_uniform(&fit, &bounds(1.2, 0.8))
            - cross_entropy_uniform(&fit, &bounds(0.6, 0.4));
        assert_relative_eq!(d, 4.0_f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn divergence_clamps_at_zero() {
        let fit = GaussianFit::new(Point2::new(0.5, 0.5), Matrix2::identity());
        assert_eq!(kl_divergence(&fit, &bounds(1.0, 1.0)), 0.0);
    }

    #[test]
    fn tight_cluster_divergence() {
        // −½·ln((2πe)²·1e-8) = 6.372463; the grid oracle on the truncated
        // density agrees to four digits.
        let fit = GaussianFit::new(Point2::new(0.5, 0.5), Matrix2::identity() * 1e-4);
        let unit = bounds(1.0, 1.0);
        let d = kl_divergence(&fit, &unit);
        let numeric = oracle::kl_numeric_oracle(&fit, &unit, 512);
        assert_relative_eq!(numeric, 6.372463, epsilon = 1e-3);
        assert_relative_eq!(d, 6.372463, epsilon = 1e-6);
        assert!((d - numeric).abs() / numeric < 0.02);

        let quad = bounds(2.0, 2.0);
        let shifted = GaussianFit::new(Point2::new(1.0, 1.0), fit.covariance);
        assert_relative_eq!(
            kl_divergence(&shifted, &quad) - d,
            4.0_f64.ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn oracle_is_nonnegative_and_converges() {
        let fit = GaussianFit::new(
            Point2::new(0.4, 0.3),
            Matrix2::new(0.02, 0.005, 0.005, 0.01),
        );
        let b = bounds(1.0, 0.6);
        let coarse = oracle::kl_numeric_oracle(&fit, &b, 256);
        let fine = oracle::kl_numeric_oracle(&fit, &b, 512);
        assert!(coarse >= 0.0 && fine >= 0.0);
        assert!((coarse - fine).abs() / fine < 0.005);
    }

    #[test]
    fn xi_of_zero_divergence_is_one() {
        let scene = generate_uncluttered_scene(0.15, 5).unwrap();
        let r = clutteredness(&scene).unwrap();
        assert_eq!(r.divergence, 0.0);
        assert_eq!(r.xi, 1.0);
    }

    #[test]
    fn single_object_scene_has_unit_xi_for_planning() {
        let scene = Scene::new(
            bounds(1.0, 1.0),
            vec![SceneObject::new(1, 0.5, 0.5)],
            Point3::new(0.5, 0.0, 0.3),
        )
        .unwrap();
        assert_eq!(scene_xi(&scene), 1.0);
    }
}
