//! SVG rendering of scenes and trajectories: a top-down view plus a height
//! profile against normalized arc length.

use std::fmt::Write;

use nalgebra::Point3;

use crate::scene::Scene;
use crate::trajectory::PlannerTag;

const WIDTH: f64 = 800.0;
const MARGIN: f64 = 40.0;
const PROFILE_HEIGHT: f64 = 220.0;
const DASHES: [&str; 4] = ["none", "8 4", "3 3", "12 4 3 4"];

/// One trajectory to draw.
#[derive(Debug, Clone)]
pub struct Track {
    pub label: String,
    pub planner: Option<PlannerTag>,
    pub waypoints: Vec<Point3<f64>>,
}

fn color(planner: Option<PlannerTag>) -> &'static str {
    match planner {
        Some(PlannerTag::PotentialField) => "#1f77b4",
        Some(PlannerTag::Baseline) => "#6e6e6e",
        None => "#d62728",
    }
}

struct Frame {
    scale: f64,
    x0: f64,
    y_max: f64,
    top_height: f64,
}

impl Frame {
    fn new(scene: &Scene) -> Self {
        let b = &scene.bounds;
        let scale = (WIDTH - 2.0 * MARGIN) / b.width();
        Frame {
            scale,
            x0: b.x_min,
            y_max: b.y_max,
            top_height: b.depth() * scale,
        }
    }

    fn top(&self, x: f64, y: f64) -> (f64, f64) {
        (
            MARGIN + (x - self.x0) * self.scale,
            MARGIN + (self.y_max - y) * self.scale,
        )
    }

    fn profile_origin(&self) -> f64 {
        2.0 * MARGIN + self.top_height
    }
}

/// Builds the SVG document. `target`, when given, is drawn highlighted.
pub fn render_svg(scene: &Scene, target: Option<u32>, tracks: &[Track]) -> String {
    let frame = Frame::new(scene);
    let height = frame.profile_origin() + PROFILE_HEIGHT + MARGIN;
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}">"#
    )
    .unwrap();
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    let (bx, by) = frame.top(scene.bounds.x_min, scene.bounds.y_max);
    writeln!(
        svg,
        r#"<rect class="workspace" x="{bx:.2}" y="{by:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        scene.bounds.width() * frame.scale,
        frame.top_height
    )
    .unwrap();

    for o in &scene.objects {
        let (cx, cy) = frame.top(o.position.x, o.position.y);
        let (class, fill) = if Some(o.id) == target {
            ("object target", "#e6550d")
        } else {
            ("object", "#74c476")
        };
        writeln!(
            svg,
            r#"<circle class="{class}" data-id="{}" cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="{fill}" stroke="black"/>"#,
            o.id,
            o.radius * frame.scale
        )
        .unwrap();
    }

    let (sx, sy) = frame.top(scene.start.x, scene.start.y);
    writeln!(
        svg,
        r#"<path class="start" d="M {:.2} {:.2} l 12 0 l -12 -12 z" fill="black"/>"#,
        sx - 6.0,
        sy + 6.0
    )
    .unwrap();

    let origin = frame.profile_origin();
    let plot_w = WIDTH - 2.0 * MARGIN;
    writeln!(
        svg,
        r#"<rect class="profile-frame" x="{MARGIN:.2}" y="{origin:.2}" width="{plot_w:.2}" height="{PROFILE_HEIGHT:.2}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{MARGIN:.2}" y="{:.2}" font-size="12">z (m) vs arc length fraction</text>"#,
        origin - 6.0
    )
    .unwrap();

    let z_max = scene.bounds.z_max;
    for (i, track) in tracks.iter().enumerate() {
        let stroke = color(track.planner);
        let dash = DASHES[i % DASHES.len()];
        let tag = track.planner.map_or("unknown", PlannerTag::as_str);

        let top: Vec<String> = track
            .waypoints
            .iter()
            .map(|p| {
                let (x, y) = frame.top(p.x, p.y);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        writeln!(
            svg,
            r#"<polyline class="track" data-planner="{tag}" data-label="{}" points="{}" fill="none" stroke="{stroke}" stroke-width="2" stroke-dasharray="{dash}"/>"#,
            escape(&track.label),
            top.join(" ")
        )
        .unwrap();

        let mut cumulative = vec![0.0];
        for w in track.waypoints.windows(2) {
            let last = *cumulative.last().unwrap();
            cumulative.push(last + (w[1] - w[0]).norm());
        }
        let total = cumulative.last().copied().unwrap_or(0.0);
        let profile: Vec<String> = track
            .waypoints
            .iter()
            .zip(&cumulative)
            .map(|(p, s)| {
                let fraction = if total > 0.0 { s / total } else { 0.0 };
                let x = MARGIN + fraction * plot_w;
                let y = origin + PROFILE_HEIGHT * (1.0 - (p.z / z_max).clamp(0.0, 1.0));
                format!("{x:.2},{y:.2}")
            })
            .collect();
        writeln!(
            svg,
            r#"<polyline class="profile" data-planner="{tag}" data-label="{}" points="{}" fill="none" stroke="{stroke}" stroke-width="2" stroke-dasharray="{dash}"/>"#,
            escape(&track.label),
            profile.join(" ")
        )
        .unwrap();
    }

    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
