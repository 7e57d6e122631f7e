use std::path::PathBuf;

use nalgebra::Point3;

use crate::trajectory::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("could not place {requested} objects: only {placed} placed after {attempts} attempts")]
    Placement {
        placed: usize,
        requested: usize,
        attempts: usize,
    },

    #[error("scene has {objects} object(s); at least 2 are needed to fit a distribution")]
    DegenerateScene { objects: usize },

    #[error("unknown target object id {0}")]
    UnknownTarget(u32),

    #[error("point ({:.6}, {:.6}, {:.6}) lies inside the body of obstacle {obstacle}", .point.x, .point.y, .point.z)]
    Singularity { obstacle: u32, point: Point3<f64> },

    #[error(
        "planner stalled in a local minimum at ({:.6}, {:.6}, {:.6}) after {iteration} iterations",
        .position.x, .position.y, .position.z
    )]
    LocalMinimum {
        position: Point3<f64>,
        iteration: usize,
        /// Trajectory up to the stall, already smoothed.
        partial: Box<Trajectory>,
    },

    #[error(
        "trajectory has {waypoints} waypoint(s), fewer than the {sections} sections requested"
    )]
    TooFewWaypoints { waypoints: usize, sections: usize },

    #[error("target {target} does not appear in the ranked guesses {ranked:?}")]
    TargetUnranked { target: u32, ranked: Vec<u32> },

    #[error("{path}: {}", describe_io(.source))]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn describe_io(e: &std::io::Error) -> String {
    match e.kind() {
        std::io::ErrorKind::NotFound => "file not found".to_string(),
        _ => e.to_string(),
    }
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input (as opposed to planner failures).
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::LocalMinimum { .. } | Error::Singularity { .. })
    }
}
