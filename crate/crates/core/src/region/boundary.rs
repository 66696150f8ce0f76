//! Traced frontiers and geometric checks on them.

use crate::error::{Error, Result};

use super::Strategy;

/// Tolerance of the discrete concavity test, in bits/s/Hz.
pub const CONCAVITY_TOLERANCE: f64 = 1e-6;

/// Largest chord between consecutive points, relative to the larger axis
/// intercept, before the grid is reported as too coarse.
const MAX_RELATIVE_GAP: f64 = 0.05;

/// One boundary point: generator parameter and per-user capacities (bits/s/Hz).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    pub parameter: f64,
    pub capacities: Vec<f64>,
}

/// Points of a traced frontier, ordered by generator parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionBoundary {
    pub strategy: Strategy,
    pub points: Vec<BoundaryPoint>,
    pub warnings: Vec<String>,
}

impl RegionBoundary {
    pub fn new(strategy: Strategy, points: Vec<BoundaryPoint>) -> Self {
        Self { strategy, points, warnings: Vec::new() }
    }

    pub fn users(&self) -> usize {
        self.points.first().map_or(0, |p| p.capacities.len())
    }

    /// Largest capacity any point reaches for `user`.
    pub fn max_capacity(&self, user: usize) -> f64 {
        self.points.iter().map(|p| p.capacities[user]).fold(0.0, f64::max)
    }

    /// Two-user frontier from the `C2` axis to the `C1` axis: the traced
    /// points ordered by increasing `C1`, extended horizontally and vertically
    /// to the axes (the region is closed downward).
    pub fn frontier(&self) -> Result<Vec<[f64; 2]>> {
        if self.users() != 2 {
            return Err(Error::Unsupported("frontier geometry is defined for two users".into()));
        }
        let mut pts: Vec<[f64; 2]> = self.points.iter().map(|p| [p.capacities[0], p.capacities[1]]).collect();
        if pts.first().map(|p| p[0]) > pts.last().map(|p| p[0]) {
            pts.reverse();
        }
        let (first, last) = (pts[0], pts[pts.len() - 1]);
        let mut out = Vec::with_capacity(pts.len() + 2);
        out.push([0.0, first[1]]);
        out.extend(pts);
        out.push([last[0], 0.0]);
        out.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
        Ok(out)
    }

    /// Largest distance by which a frontier point lies below the chord of its
    /// neighbours. Zero for a concave frontier.
    pub fn concavity_violation(&self) -> Result<f64> {
        let pts = self.frontier()?;
        let mut worst: f64 = 0.0;
        for w in pts.windows(3) {
            let (p, q, r) = (w[0], w[1], w[2]);
            let (ux, uy) = (r[0] - p[0], r[1] - p[1]);
            let len = ux.hypot(uy);
            if len < 1e-14 {
                continue;
            }
            // positive cross product: q lies above the chord p→r
            let cross = ux * (q[1] - p[1]) - uy * (q[0] - p[0]);
            worst = worst.max(-cross / len);
        }
        Ok(worst)
    }

    pub fn is_concave(&self, tolerance: f64) -> Result<bool> {
        Ok(self.concavity_violation()? <= tolerance)
    }

    /// Distance from the origin to the frontier along the ray at `angle`
    /// (radians in `[0, π/2]`), by intersecting the piecewise-linear frontier.
    pub fn radius_along(&self, angle: f64) -> Result<f64> {
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&angle) {
            return Err(Error::invalid("angle", format!("ray angle must lie in [0, π/2], got {angle}")));
        }
        let pts = self.frontier()?;
        let (dx, dy) = (angle.cos(), angle.sin());
        let mut best: f64 = 0.0;
        for w in pts.windows(2) {
            let (p, q) = (w[0], w[1]);
            let (ex, ey) = (q[0] - p[0], q[1] - p[1]);
            let det = dx * (-ey) + ex * dy;
            if det.abs() < 1e-300 {
                continue;
            }
            // t d = p + u e
            let t = (p[0] * (-ey) + ex * p[1]) / det;
            let u = (dx * p[1] - dy * p[0]) / det;
            if (-1e-12..=1.0 + 1e-12).contains(&u) && t > best {
                best = t;
            }
        }
        Ok(best)
    }

    /// Records warnings when the frontier fails the concavity test or the
    /// grid leaves gaps too wide to certify it.
    pub fn certify(&mut self) {
        if self.users() != 2 {
            return;
        }
        let scale = self.max_capacity(0).max(self.max_capacity(1));
        let inner_widest = self
            .points
            .windows(2)
            .map(|w| {
                let (a, b) = (&w[0].capacities, &w[1].capacities);
                (b[0] - a[0]).hypot(b[1] - a[1])
            })
            .fold(0.0, f64::max);
        if scale > 0.0 && inner_widest > MAX_RELATIVE_GAP * scale {
            self.warnings.push(format!(
                "{}: grid too coarse to certify concavity (widest gap {:.3e} of {:.3e})",
                self.strategy, inner_widest, scale
            ));
        }
        if let Ok(v) = self.concavity_violation() {
            if v > CONCAVITY_TOLERANCE {
                self.warnings.push(format!("{}: frontier violates concavity by {v:.3e}", self.strategy));
            }
        }
    }
}
