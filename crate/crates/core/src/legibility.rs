//! Simulated-observer legibility evaluation.
//!
//! A trajectory is cut into cumulative arc-length sections. After each
//! section an observer ranks the objects it believes are being reached for,
//! and the guess is scored by summing the planar distances from each wrong
//! guess to the true target until the target is named. Lower is better.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::Point3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{gen_baseline_traj, BaselineConfig};
use crate::error::{Error, Result};
use crate::planner::{gen_legible_traj, FieldConfig};
use crate::scene::Scene;
use crate::trajectory::{PlannerTag, Trajectory};

/// Observers name at most this many objects.
pub const MAX_RANKED: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observer {
    /// Ranks objects by distance to the current end-effector position.
    PointPosition,
    /// Ranks objects by distance to the ray along the latest motion.
    VelocityExtrapolation,
}

impl Observer {
    pub fn as_str(self) -> &'static str {
        match self {
            Observer::PointPosition => "point_position",
            Observer::VelocityExtrapolation => "velocity_extrapolation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedGuess {
    pub section: usize,
    pub ranked_ids: Vec<u32>,
}

/// Cumulative prefixes ending at arc-length fractions `k / n_sections`.
///
/// Prefix `k` ends at the last waypoint not beyond its cut, moved forward
/// when needed so that every prefix is strictly longer than the previous one.
/// The last prefix is always the whole trajectory.
pub fn section_trajectory(traj: &Trajectory, n_sections: usize) -> Result<Vec<&[Point3<f64>]>> {
    let n = traj.len();
    if n_sections == 0 || n < n_sections {
        return Err(Error::TooFewWaypoints {
            waypoints: n,
            sections: n_sections,
        });
    }
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = 0.0;
    cumulative.push(0.0);
    for w in traj.waypoints.windows(2) {
        acc += (w[1] - w[0]).norm();
        cumulative.push(acc);
    }
    let total = acc;
    let slack = 1e-12 * total.max(1.0);

    let mut ends = Vec::with_capacity(n_sections);
    let mut previous: Option<usize> = None;
    for k in 1..=n_sections {
        let end = if k == n_sections {
            n - 1
        } else {
            let cut = total * k as f64 / n_sections as f64;
            let at_cut = cumulative
                .partition_point(|&c| c <= cut + slack)
                .saturating_sub(1);
            let lowest = previous.map_or(0, |p| p + 1);
            let highest = n - 1 - (n_sections - k);
            at_cut.clamp(lowest, highest)
        };
        ends.push(end);
        previous = Some(end);
    }
    Ok(ends.into_iter().map(|e| &traj.waypoints[..=e]).collect())
}

fn sort_and_truncate(mut keyed: Vec<(f64, f64, u32)>) -> Vec<u32> {
    keyed.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    keyed.into_iter().take(MAX_RANKED).map(|k| k.2).collect()
}

pub fn observer_rank(
    scene: &Scene,
    prefix: &[Point3<f64>],
    observer: Observer,
    section: usize,
) -> RankedGuess {
    let end = *prefix.last().expect("prefix is non-empty");
    let heading = prefix
        .iter()
        .rev()
        .map(|p| end - p)
        .find(|d| d.norm() > 1e-12)
        .map(|d| d.normalize());

    let keyed = scene
        .objects
        .iter()
        .map(|o| {
            let to_obj = o.grasp_point() - end;
            let from_end = to_obj.norm();
            let primary = match (observer, heading) {
                (Observer::VelocityExtrapolation, Some(u)) => {
                    let t = to_obj.dot(&u).max(0.0);
                    (to_obj - u * t).norm()
                }
                _ => from_end,
            };
            (primary, from_end, o.id)
        })
        .collect();

    RankedGuess {
        section,
        ranked_ids: sort_and_truncate(keyed),
    }
}

fn planar_gap(scene: &Scene, a: u32, b: u32) -> Result<f64> {
    let pa = scene.target(a)?.position;
    let pb = scene.target(b)?.position;
    Ok((pa - pb).norm())
}

/// Sum of planar distances from each guess before the target to the target.
pub fn rank_distance(scene: &Scene, guess: &RankedGuess, target: u32) -> Result<f64> {
    let Some(pos) = guess.ranked_ids.iter().position(|&id| id == target) else {
        return Err(Error::TargetUnranked {
            target,
            ranked: guess.ranked_ids.clone(),
        });
    };
    guess.ranked_ids[..pos]
        .iter()
        .try_fold(0.0, |acc, &id| Ok(acc + planar_gap(scene, id, target)?))
}

/// Like [`rank_distance`], but a target the observer never named scores the
/// sum over every guess made.
pub fn rank_distance_saturated(
    scene: &Scene,
    guess: &RankedGuess,
    target: u32,
) -> Result<(f64, bool)> {
    match rank_distance(scene, guess, target) {
        Ok(d) => Ok((d, true)),
        Err(Error::TargetUnranked { .. }) => {
            let total = guess.ranked_ids.iter().try_fold(0.0, |acc, &id| {
                Ok::<_, Error>(acc + planar_gap(scene, id, target)?)
            })?;
            Ok((total, false))
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub target: u32,
    pub planner: PlannerTag,
    pub section: usize,
    pub rank_distance: f64,
    pub ranked_ids: Vec<u32>,
    pub target_ranked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub planner: PlannerTag,
    pub section: usize,
    pub mean: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub target: u32,
    pub planner: PlannerTag,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub observer: Observer,
    pub n_sections: usize,
    pub cells: Vec<Cell>,
    pub summary: Vec<SummaryRow>,
    pub failures: Vec<Failure>,
}

impl ComparisonReport {
    pub fn mean(&self, planner: PlannerTag, section: usize) -> Option<f64> {
        self.summary
            .iter()
            .find(|r| r.planner == planner && r.section == section)
            .map(|r| r.mean)
    }

    pub fn score(&self, target: u32, planner: PlannerTag, section: usize) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.target == target && c.planner == planner && c.section == section)
            .map(|c| c.rank_distance)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    /// Aligned plain-text table: one row per target and planner, then the
    /// per-section means.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let mut header = format!("{:>6}  {:<16}", "target", "planner");
        for s in 1..=self.n_sections {
            write!(header, "  {:>10}", format!("section {s}")).unwrap();
        }
        writeln!(out, "{header}").unwrap();
        let mut rows: BTreeMap<(u32, PlannerTag), Vec<Option<f64>>> = BTreeMap::new();
        for c in &self.cells {
            rows.entry((c.target, c.planner))
                .or_insert_with(|| vec![None; self.n_sections])[c.section - 1] =
                Some(c.rank_distance);
        }
        for ((target, planner), scores) in &rows {
            let mut line = format!("{target:>6}  {:<16}", planner.as_str());
            for s in scores {
                match s {
                    Some(v) => write!(line, "  {v:>10.6}").unwrap(),
                    None => write!(line, "  {:>10}", "-").unwrap(),
                }
            }
            writeln!(out, "{line}").unwrap();
        }
        for f in &self.failures {
            writeln!(
                out,
                "{:>6}  {:<16}  failed: {}",
                f.target,
                f.planner.as_str(),
                f.error
            )
            .unwrap();
        }
        writeln!(out).unwrap();
        writeln!(
            out,
            "{:<16}  {:>7}  {:>10}  {:>5}",
            "planner", "section", "mean", "count"
        )
        .unwrap();
        for r in &self.summary {
            writeln!(
                out,
                "{:<16}  {:>7}  {:>10.6}  {:>5}",
                r.planner.as_str(),
                r.section,
                r.mean,
                r.count
            )
            .unwrap();
        }
        out
    }
}

pub fn plan(
    scene: &Scene,
    target: u32,
    planner: PlannerTag,
    field: &FieldConfig,
    baseline: &BaselineConfig,
) -> Result<Trajectory> {
    match planner {
        PlannerTag::PotentialField => gen_legible_traj(scene, target, field),
        PlannerTag::Baseline => {
            baseline.validate(scene, field.clearance_margin)?;
            gen_baseline_traj(scene, target, baseline)
        }
    }
}

fn score_trajectory(
    scene: &Scene,
    traj: &Trajectory,
    n_sections: usize,
    observer: Observer,
) -> Result<Vec<Cell>> {
    section_trajectory(traj, n_sections)?
        .into_iter()
        .enumerate()
        .map(|(i, prefix)| {
            let guess = observer_rank(scene, prefix, observer, i + 1);
            let (rank_distance, target_ranked) =
                rank_distance_saturated(scene, &guess, traj.target)?;
            Ok(Cell {
                target: traj.target,
                planner: traj.planner,
                section: i + 1,
                rank_distance,
                ranked_ids: guess.ranked_ids,
                target_ranked,
            })
        })
        .collect()
}

/// Plans every target with both planners, scores each section and averages
/// per planner and section. Planner failures are recorded, not fatal.
pub fn compare_planners(
    scene: &Scene,
    targets: &[u32],
    n_sections: usize,
    observer: Observer,
    field: &FieldConfig,
    baseline: &BaselineConfig,
) -> Result<ComparisonReport> {
    if targets.is_empty() {
        return Err(Error::validation(
            "targets",
            "at least one target is required",
        ));
    }
    if n_sections == 0 {
        return Err(Error::validation(
            "sections",
            "at least one section is required",
        ));
    }
    for &t in targets {
        scene.target(t)?;
    }

    let jobs: Vec<(u32, PlannerTag)> = targets
        .iter()
        .flat_map(|&t| PlannerTag::ALL.into_iter().map(move |p| (t, p)))
        .collect();
    let outcomes: Vec<std::result::Result<Vec<Cell>, Failure>> = jobs
        .par_iter()
        .map(|&(target, planner)| {
            let fail = |error: String| Failure {
                target,
                planner,
                error,
            };
            let traj =
                plan(scene, target, planner, field, baseline).map_err(|e| fail(e.to_string()))?;
            if !traj.converged {
                return Err(fail(format!(
                    "did not converge within {} iterations",
                    field.max_iters
                )));
            }
            score_trajectory(scene, &traj, n_sections, observer).map_err(|e| fail(e.to_string()))
        })
        .collect();

    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(c) => cells.extend(c),
            Err(f) => failures.push(f),
        }
    }

    let mut sums: BTreeMap<(PlannerTag, usize), (f64, usize)> = BTreeMap::new();
    for c in &cells {
        let e = sums.entry((c.planner, c.section)).or_insert((0.0, 0));
        e.0 += c.rank_distance;
        e.1 += 1;
    }
    let summary = sums
        .into_iter()
        .map(|((planner, section), (sum, count))| SummaryRow {
            planner,
            section,
            mean: sum / count as f64,
            count,
        })
        .collect();

    Ok(ComparisonReport {
        observer,
        n_sections,
        cells,
        summary,
        failures,
    })
}
