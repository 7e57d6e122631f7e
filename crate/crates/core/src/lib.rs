//! Legible grasp trajectories for table-top scenes.
//!
//! * [`clutter`] measures how bunched together the objects are (ξ ∈ (0, 1]).
//! * [`planner`] generates trajectories with a potential field whose
//!   repulsion is scaled by ξ and by proximity to the direct route.
//! * [`baseline`] produces the hover-and-drop reference trajectory.
//! * [`legibility`] scores both with simulated observers.
//!
//! ```
//! use legifield::{clutter, planner, scene};
//!
//! let scene = scene::generate_cluttered_scene(20, 7, 0.01).unwrap();
//! let xi = clutter::clutteredness(&scene).unwrap().xi;
//! assert!(xi > 0.0 && xi <= 1.0);
//! let traj = planner::gen_legible_traj(&scene, 4, &planner::FieldConfig::default()).unwrap();
//! assert!(traj.converged);
//! ```

pub mod baseline;
pub mod cli;
pub mod clutter;
pub mod config;
pub mod error;
pub mod legibility;
pub mod planner;
pub mod plot;
pub mod scene;
pub mod trajectory;

pub use error::{Error, Result};
