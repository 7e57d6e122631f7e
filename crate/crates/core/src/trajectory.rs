//! End-effector trajectories and their on-disk form: a `k,x,y,z` CSV plus a
//! `.meta.json` sidecar.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerTag {
    PotentialField,
    Baseline,
}

impl PlannerTag {
    pub const ALL: [PlannerTag; 2] = [PlannerTag::PotentialField, PlannerTag::Baseline];

    pub fn as_str(self) -> &'static str {
        match self {
            PlannerTag::PotentialField => "potential_field",
            PlannerTag::Baseline => "baseline",
        }
    }
}

impl std::fmt::Display for PlannerTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub waypoints: Vec<Point3<f64>>,
    pub planner: PlannerTag,
    pub target: u32,
    pub converged: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn first(&self) -> &Point3<f64> {
        &self.waypoints[0]
    }

    pub fn last(&self) -> &Point3<f64> {
        self.waypoints.last().expect("trajectory is non-empty")
    }

    pub fn step_lengths(&self) -> Vec<f64> {
        self.waypoints
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .collect()
    }

    pub fn arc_length(&self) -> f64 {
        self.step_lengths().iter().sum()
    }

    pub fn max_z(&self) -> f64 {
        self.waypoints
            .iter()
            .map(|p| p.z)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Sidecar written next to every trajectory CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryMeta {
    pub planner: PlannerTag,
    pub target: u32,
    pub converged: bool,
    pub xi: f64,
    pub config: RunConfig,
}

/// `traj.csv` → `traj.meta.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

pub fn to_csv(waypoints: &[Point3<f64>]) -> String {
    let mut out = String::from("k,x,y,z\n");
    for (k, p) in waypoints.iter().enumerate() {
        writeln!(out, "{k},{:.6},{:.6},{:.6}", p.x, p.y, p.z).unwrap();
    }
    out
}

pub fn parse_csv(text: &str, origin: &Path) -> Result<Vec<Point3<f64>>> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        message: format!("line {line}: {message}"),
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "k,x,y,z" => {}
        _ => return Err(err(1, "expected header `k,x,y,z`".into())),
    }
    let mut points = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(err(
                i + 1,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let k: usize = fields[0]
            .parse()
            .map_err(|_| err(i + 1, format!("bad index `{}`", fields[0])))?;
        if k != points.len() {
            return Err(err(i + 1, format!("index {k} out of sequence")));
        }
        let mut xyz = [0.0; 3];
        for (slot, f) in xyz.iter_mut().zip(&fields[1..]) {
            *slot = f
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| err(i + 1, format!("bad coordinate `{f}`")))?;
        }
        points.push(Point3::from(xyz));
    }
    if points.is_empty() {
        return Err(err(1, "no waypoints".into()));
    }
    Ok(points)
}

pub fn write_trajectory(path: &Path, traj: &Trajectory, meta: &TrajectoryMeta) -> Result<()> {
    fs::write(path, to_csv(&traj.waypoints)).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let mut text = serde_json::to_string_pretty(meta).expect("metadata serializes");
    text.push('\n');
    fs::write(&side, text).map_err(|e| Error::io(&side, e))
}

pub fn read_waypoints(path: &Path) -> Result<Vec<Point3<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, path)
}

/// Reads the sidecar if one exists next to `csv`.
pub fn read_meta(csv: &Path) -> Result<Option<TrajectoryMeta>> {
    let side = sidecar_path(csv);
    if !side.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| Error::Parse {
            path: side,
            message: e.to_string(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_fixed_precision() {
        let text = to_csv(&[Point3::new(0.1, 0.25, 1.0 / 3.0)]);
        assert_eq!(text, "k,x,y,z\n0,0.100000,0.250000,0.333333\n");
    }

    #[test]
    fn csv_parses_back() {
        let pts = vec![Point3::new(0.5, 0.0, 0.25), Point3::new(0.5, 0.1, 0.2)];
        let back = parse_csv(&to_csv(&pts), Path::new("t.csv")).unwrap();
        assert_eq!(back, pts);
    }

    #[test]
    fn malformed_csv_is_a_parse_error() {
        for bad in [
            "x,y\n0,1\n",
            "k,x,y,z\n0,1,2\n",
            "k,x,y,z\n0,a,2,3\n",
            "k,x,y,z\n1,0,0,0\n",
            "k,x,y,z\n",
        ] {
            assert!(
                matches!(parse_csv(bad, Path::new("t.csv")), Err(Error::Parse { .. })),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn sidecar_shares_basename() {
        assert_eq!(
            sidecar_path(Path::new("out/pf_4.csv")),
            PathBuf::from("out/pf_4.meta.json")
        );
    }
}
