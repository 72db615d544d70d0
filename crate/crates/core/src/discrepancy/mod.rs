//! Discrepancy between an empirical measure and the circular law over balls,
//! balls inside a smaller disk, and lower-left quadrants.
//!
//! Every report carries a certified bracket `lower ≤ D ≤ upper`. The lower
//! end is attained by a concrete witness; the upper end comes from a cover
//! of the space of centers by cells, each with a rigorous bound (see
//! [`WorkStats::certificate`]).

mod balls;
mod kolmogorov;
mod oracle;

pub use balls::{discrepancy_balls, discrepancy_bulk, empirical_ball_discrepancy, two_sample_lower};
pub use kolmogorov::{kolmogorov_2d, quadrant_oracle};
pub use oracle::{brute_force_oracle, ORACLE_MAX_ATOMS};

use crate::error::Result;
use crate::reference::Ball;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Radius used for "just inside" and "just outside" limits of a ball.
pub const TINY_RADIUS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Full,
    Bulk { tau: f64 },
    Kolmogorov2d,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Witness {
    Ball(Ball),
    /// Quadrant `(-∞, s] × (-∞, t]`; an open flag means the limit from the
    /// left in that coordinate.
    Corner { corner: [f64; 2], s_open: bool, t_open: bool },
}

impl Witness {
    pub fn ball(&self) -> Option<&Ball> {
        match self {
            Witness::Ball(b) => Some(b),
            Witness::Corner { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkStats {
    /// Centers at which concrete balls were evaluated.
    pub candidates: usize,
    /// Square and polar cells visited by the certificate.
    pub cells: usize,
    pub grid_h: f64,
    /// Half-width of the square box covered by square cells.
    pub box_half_width: f64,
    /// Every evaluated lattice center is an integer multiple of this.
    pub lattice_spacing: f64,
    pub floor_side: f64,
    /// Lower bound from the fixed initial exploration.
    pub reference_lower: f64,
    /// Refinement target at the final lower bound.
    pub target_slack: f64,
    /// Cells were left unrefined because of the cell budget.
    pub truncated: bool,
    pub certificate: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub variant: Variant,
    pub lower: f64,
    pub upper: f64,
    pub witness: Witness,
    pub work: WorkStats,
}

impl DiscrepancyReport {
    pub fn slack(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscrepancyOpts {
    /// Finest cell side; `None` picks [`default_grid_h`].
    pub grid_h: Option<f64>,
    /// Pair and triple circumcenters are candidates when `n` is at most this.
    pub max_candidates: usize,
    /// A cell is split while its bound exceeds the best lower bound so far
    /// by more than `min(slack_abs, slack_rel · lower)`.
    pub slack_rel: f64,
    pub slack_abs: f64,
    pub max_cells: usize,
}

impl Default for DiscrepancyOpts {
    fn default() -> Self {
        Self { grid_h: None, max_candidates: 24, slack_rel: 0.4, slack_abs: 0.02, max_cells: 2_000_000 }
    }
}

/// `min(0.01, n^{-3/4}) / 2`.
pub fn default_grid_h(n: usize) -> f64 {
    0.5 * 0.01f64.min((n as f64).powf(-0.75))
}

/// Euclidean distance; every atom count in this module goes through it.
pub fn dist(a: Complex64, b: Complex64) -> f64 {
    let (x, y) = (a.re - b.re, a.im - b.im);
    (x * x + y * y).sqrt()
}

/// Midpoints of pairs and circumcenters of non-degenerate triples.
pub fn circumcenters(points: &[Complex64]) -> Vec<Complex64> {
    let n = points.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            out.push(0.5 * (points[i] + points[j]));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if let Some(c) = circumcenter(points[i], points[j], points[k]) {
                    out.push(c);
                }
            }
        }
    }
    out
}

fn circumcenter(a: Complex64, b: Complex64, c: Complex64) -> Option<Complex64> {
    let (bx, by) = (b.re - a.re, b.im - a.im);
    let (cx, cy) = (c.re - a.re, c.im - a.im);
    let det = 2.0 * (bx * cy - by * cx);
    if det.abs() < 1e-12 {
        return None;
    }
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    Some(Complex64::new(a.re + (cy * b2 - by * c2) / det, a.im + (bx * c2 - cx * b2) / det))
}

/// A concrete ball and its discrepancy value.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Candidate {
    pub value: f64,
    pub radius: f64,
    pub center: Complex64,
}

impl Candidate {
    pub const NONE: Candidate =
        Candidate { value: f64::NEG_INFINITY, radius: f64::INFINITY, center: Complex64 { re: 0.0, im: 0.0 } };

    /// Larger value wins; ties go to the smaller radius, then the
    /// lexicographically smaller center.
    pub fn beats(&self, other: &Candidate) -> bool {
        use std::cmp::Ordering::*;
        match self.value.total_cmp(&other.value) {
            Greater => true,
            Less => false,
            Equal => match other.radius.total_cmp(&self.radius) {
                Greater => true,
                Less => false,
                Equal => (self.center.re, self.center.im) < (other.center.re, other.center.im),
            },
        }
    }

    pub fn best(a: Candidate, b: Candidate) -> Candidate {
        if b.beats(&a) {
            b
        } else {
            a
        }
    }
}
