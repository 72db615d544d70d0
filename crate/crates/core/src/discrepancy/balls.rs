//! Certified ball discrepancy over all balls and over balls inside a disk.
//!
//! The space of centers is covered by dyadic squares of `[-B, B]²` and, for
//! the full variant, by polar cells `r ∈ [r0, r1], θ ∈ [θ0, θ1]` outside.
//! On a cell every center `c` is related to a representative `c'`: atom
//! distances move by a bounded amount and the reference mass of a ball is
//! sandwiched between balls around `c'`, which yields a bound on the
//! discrepancy of every ball with center in the cell in terms of the sorted
//! atom distances from `c'` alone. Cells whose bound exceeds the reference
//! lower bound by more than the target slack are split.

use super::{
    circumcenters, default_grid_h, dist, Candidate, DiscrepancyOpts, DiscrepancyReport, Variant, Witness, WorkStats,
    TINY_RADIUS,
};
use crate::error::{Error, Result};
use crate::reference::{disk_overlap, mu_inf_ball, Ball};
use crate::spectra::SpectralSample;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_4, SQRT_2};

/// Depth of the dyadic centers evaluated before refinement starts.
const EXPLORE_DEPTH: u32 = 5;
const MAX_SQUARE_DEPTH: u32 = 40;
/// Absolute inflation of polar widths and cell bounds against rounding.
const WIDTH_GUARD: f64 = 1e-12;
const BOUND_GUARD: f64 = 1e-12;

/// `|μ_n(B) − μ∞(B)|` for a closed ball.
pub fn empirical_ball_discrepancy(points: &[Complex64], ball: &Ball) -> f64 {
    let k = points.iter().filter(|p| dist(**p, ball.center) <= ball.radius).count();
    (k as f64 / points.len() as f64 - mu_inf_ball(ball)).abs()
}

pub fn discrepancy_balls(sample: &SpectralSample, opts: &DiscrepancyOpts) -> Result<DiscrepancyReport> {
    let h = check_inputs(sample, opts)?;
    let max_abs = sample.points.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let rho = max_abs.max(1.0);
    let b = tree_half(rho);
    let tree = Tree { points: &sample.points, nf: sample.len() as f64, half: b, mode: Mode::Full { rho, max_abs } };
    Ok(certify(&tree, h, opts, Variant::Full))
}

/// Balls contained in `B_{1-τ}(0)`.
pub fn discrepancy_bulk(sample: &SpectralSample, tau: f64, opts: &DiscrepancyOpts) -> Result<DiscrepancyReport> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidArgument(format!("tau must lie in (0, 1), got {tau}")));
    }
    let h = check_inputs(sample, opts)?;
    let rho_b = 1.0 - tau;
    let tree = Tree { points: &sample.points, nf: sample.len() as f64, half: rho_b, mode: Mode::Bulk { rho_b } };
    Ok(certify(&tree, h, opts, Variant::Bulk { tau }))
}

/// Half-width of the square box, a multiple of 1/8 so every dyadic cell
/// center is exact.
fn tree_half(rho: f64) -> f64 {
    (12.0 * rho).ceil() / 8.0
}

fn check_inputs(sample: &SpectralSample, opts: &DiscrepancyOpts) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::InvalidArgument("discrepancy of an empty sample".into()));
    }
    if sample.points.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidArgument("sample has non-finite points".into()));
    }
    if !(opts.slack_rel >= 0.0 && opts.slack_abs >= 0.0) {
        return Err(Error::InvalidArgument("slack targets must be non-negative".into()));
    }
    let h = opts.grid_h.unwrap_or_else(|| default_grid_h(sample.len()));
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("grid_h must be positive, got {h}")));
    }
    Ok(h)
}

#[derive(Clone, Copy)]
enum Mode {
    Full { rho: f64, max_abs: f64 },
    Bulk { rho_b: f64 },
}

struct Tree<'a> {
    points: &'a [Complex64],
    nf: f64,
    half: f64,
    mode: Mode,
}

#[derive(Clone, Copy)]
enum Cell {
    Square { ix: i64, iy: i64, depth: u32 },
    /// `r1` may be infinite.
    Polar { r0: f64, r1: f64, th0: f64, th1: f64 },
}

#[derive(Clone, Copy)]
struct Node {
    cell: Cell,
    inherited: f64,
}

fn sorted_distances(points: &[Complex64], c: Complex64) -> Vec<f64> {
    let mut d: Vec<f64> = points.iter().map(|p| dist(*p, c)).collect();
    d.sort_unstable_by(f64::total_cmp);
    d
}

fn count_le(d: &[f64], r: f64) -> usize {
    d.partition_point(|&x| x <= r)
}

/// Calls `f(value, #below, #at-or-below)` for each distinct distance.
fn for_each_run(d: &[f64], mut f: impl FnMut(f64, usize, usize)) {
    let mut i = 0;
    while i < d.len() {
        let v = d[i];
        let mut j = i + 1;
        while j < d.len() && d[j] == v {
            j += 1;
        }
        f(v, i, j);
        i = j;
    }
}

fn offer(best: &mut Candidate, value: f64, radius: f64, center: Complex64) {
    *best = Candidate::best(*best, Candidate { value, radius, center });
}

/// Distinct distances with the number of atoms strictly below and at or below.
fn runs(d: &[f64]) -> Vec<(f64, usize, usize)> {
    let mut out = Vec::with_capacity(d.len());
    for_each_run(d, |v, below, upto| out.push((v, below, upto)));
    out
}

/// `max_j max(upto_j/n − lo(v_j), hi(v_j) − below_j/n, floor)` for
/// nondecreasing `lo` and `hi`. A term is skipped when the last evaluated
/// `lo` (`hi` on the way down) already shows it cannot raise the maximum.
/// Raising `floor` to a known lower bound of the discrepancy changes no
/// upper bound and skips most terms.
fn sweep_bound(
    runs: &[(f64, usize, usize)],
    nf: f64,
    floor: f64,
    lo: impl Fn(f64) -> f64,
    hi: impl Fn(f64) -> f64,
) -> f64 {
    let mut bound = floor.max(0.0);
    let mut lo_known = 0.0;
    for &(v, _, upto) in runs {
        if upto as f64 / nf - lo_known > bound {
            lo_known = lo(v);
            bound = bound.max(upto as f64 / nf - lo_known);
        }
    }
    let mut hi_known = 1.0;
    for &(v, below, _) in runs.iter().rev() {
        if hi_known - below as f64 / nf > bound {
            hi_known = hi(v);
            bound = bound.max(hi_known - below as f64 / nf);
        }
    }
    bound + BOUND_GUARD
}

/// Bound over every ball whose center lies within `delta` of a center at
/// distance `dc` from the origin. The overlap shrinks as the center moves
/// away from the origin, so only the count needs the radius shift.
fn square_bound(runs: &[(f64, usize, usize)], dc: f64, nf: f64, delta: f64, floor: f64) -> f64 {
    sweep_bound(
        runs,
        nf,
        floor,
        |v| if v > delta { disk_overlap(dc + delta, v - delta) } else { 0.0 },
        |v| disk_overlap((dc - delta).max(0.0), v + delta),
    )
}

/// Best concrete closed ball at `c` over radii at and just below each atom
/// distance, ignoring balls whose value is below `floor`. Open radii are
/// ranked with the mass at the distance itself and the winner is rescored
/// exactly.
fn concrete_full(d: &[f64], runs: &[(f64, usize, usize)], c: Complex64, nf: f64, floor: f64) -> Candidate {
    let dc = c.norm();
    let mut pick = Candidate::NONE;
    let mut m_known = 0.0;
    for &(v, below, upto) in runs {
        if upto as f64 / nf - m_known < pick.value.max(floor) {
            continue;
        }
        let r = v.max(TINY_RADIUS);
        m_known = disk_overlap(dc, r);
        offer(&mut pick, upto as f64 / nf - m_known, r, c);
        if v > TINY_RADIUS {
            offer(&mut pick, below as f64 / nf - m_known, v - TINY_RADIUS, c);
        }
    }
    let mut m_known = 1.0;
    for &(v, below, upto) in runs.iter().rev() {
        if m_known - below as f64 / nf < pick.value.max(floor) {
            continue;
        }
        let r = v.max(TINY_RADIUS);
        m_known = disk_overlap(dc, r);
        offer(&mut pick, m_known - upto as f64 / nf, r, c);
        if v > TINY_RADIUS {
            offer(&mut pick, m_known - below as f64 / nf, v - TINY_RADIUS, c);
        }
    }
    if pick.radius.is_finite() {
        pick.value = (count_le(d, pick.radius) as f64 / nf - disk_overlap(dc, pick.radius)).abs();
    }
    pick
}

fn concrete_bulk(d: &[f64], c: Complex64, nf: f64, rho_b: f64) -> Candidate {
    let r_max = rho_b - c.norm();
    let mut best = Candidate::NONE;
    if !(r_max > 0.0) {
        return best;
    }
    let mut eval = |r: f64| {
        if r > 0.0 && r <= r_max {
            offer(&mut best, (count_le(d, r) as f64 / nf - r * r).abs(), r, c);
        }
    };
    for_each_run(d, |v, _, _| {
        eval(v.max(TINY_RADIUS));
        eval(v - TINY_RADIUS);
    });
    eval(r_max);
    best
}

/// Bound on `|μ_n(B) − μ∞(B)|` over all radii when every atom distance may
/// exceed its value at the representative by up to `alpha`, fall short of it
/// by up to `gamma`, and the reference mass lies between `m(R')` and
/// `m(R' + beta)` for a shifted radius `R'`.
fn radial_bound(runs: &[(f64, usize, usize)], dc: f64, nf: f64, widths: (f64, f64, f64), floor: f64) -> f64 {
    let (alpha, beta, gamma) = widths;
    let m = |r: f64| if r <= 0.0 { 0.0 } else { disk_overlap(dc, r) };
    sweep_bound(runs, nf, floor, |v| m(v - alpha), |v| m(v + gamma + beta))
}

/// Same for balls inside `B_{ρ_b}`, where `μ∞(B_R) = R²`, for centers within
/// `delta` of the representative and radii up to `r_cap`.
fn bulk_cell_bound(d: &[f64], nf: f64, delta: f64, r_cap: f64) -> f64 {
    if !(r_cap > 0.0) {
        return f64::NEG_INFINITY;
    }
    let mut bound = count_le(d, delta) as f64 / nf;
    for_each_run(d, |v, below, upto| {
        if v > delta && v <= r_cap + delta {
            bound = bound.max(upto as f64 / nf - (v - delta) * (v - delta));
        }
        if v + delta <= r_cap {
            bound = bound.max((v + delta) * (v + delta) - below as f64 / nf);
        }
    });
    bound.max(r_cap * r_cap - count_le(d, r_cap - delta) as f64 / nf) + BOUND_GUARD
}

impl Tree<'_> {
    fn side(&self, depth: u32) -> f64 {
        2.0 * self.half / (1u64 << depth) as f64
    }

    /// Exact whenever `half` has few significant bits.
    fn square_center(&self, ix: i64, iy: i64, depth: u32) -> Complex64 {
        let cells = 1i64 << depth;
        let unit = self.half / cells as f64;
        Complex64::new((2 * ix + 1 - cells) as f64 * unit, (2 * iy + 1 - cells) as f64 * unit)
    }

    fn evaluate_center(&self, c: Complex64) -> Candidate {
        let d = sorted_distances(self.points, c);
        match self.mode {
            Mode::Full { .. } => concrete_full(&d, &runs(&d), c, self.nf, f64::NEG_INFINITY),
            Mode::Bulk { rho_b } => concrete_bulk(&d, c, self.nf, rho_b),
        }
    }

    fn polar_geometry(&self, r0: f64, r1: f64, th0: f64, th1: f64) -> (f64, f64) {
        let Mode::Full { rho, max_abs } = self.mode else { unreachable!("polar cells only cover the full variant") };
        let inv1 = if r1.is_finite() { 1.0 / (r1 - rho) } else { 0.0 };
        let eps = 0.5 * rho * rho * (1.0 / (r0 - rho) - inv1) + WIDTH_GUARD;
        let a = max_abs * (th1 - th0) * 0.5 + WIDTH_GUARD;
        (eps, a)
    }

    /// Own bound of the cell, floored at `best`, and the concrete candidate at
    /// its representative when it could reach `best`.
    fn evaluate(&self, cell: &Cell, best: f64) -> (f64, Candidate) {
        match *cell {
            Cell::Square { ix, iy, depth } => {
                let c = self.square_center(ix, iy, depth);
                let delta = self.side(depth) * SQRT_2 * 0.5;
                if matches!(self.mode, Mode::Full { .. }) && c.norm() - delta >= self.half {
                    // the polar cells cover every center this far out
                    return (f64::NEG_INFINITY, Candidate::NONE);
                }
                let d = sorted_distances(self.points, c);
                match self.mode {
                    Mode::Full { .. } => {
                        let runs = runs(&d);
                        let bound = square_bound(&runs, c.norm(), self.nf, delta, best);
                        let cand =
                            if bound >= best { concrete_full(&d, &runs, c, self.nf, best) } else { Candidate::NONE };
                        (bound, cand)
                    }
                    Mode::Bulk { rho_b } => (
                        bulk_cell_bound(&d, self.nf, delta, rho_b - c.norm() + delta),
                        concrete_bulk(&d, c, self.nf, rho_b),
                    ),
                }
            }
            Cell::Polar { r0, r1, th0, th1 } => {
                let (eps, a) = self.polar_geometry(r0, r1, th0, th1);
                let mid = 0.5 * (th0 + th1);
                let c = Complex64::from_polar(r0, mid);
                let d = sorted_distances(self.points, c);
                (radial_bound(&runs(&d), r0, self.nf, (eps + a, eps, a), best), Candidate::NONE)
            }
        }
    }

    fn split(&self, cell: &Cell, floor_depth: u32, floor_width: f64) -> Option<Vec<Cell>> {
        match *cell {
            Cell::Square { ix, iy, depth } => (depth < floor_depth).then(|| {
                let mut kids = Vec::with_capacity(4);
                for (a, b) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    kids.push(Cell::Square { ix: 2 * ix + a, iy: 2 * iy + b, depth: depth + 1 });
                }
                kids
            }),
            Cell::Polar { r0, r1, th0, th1 } => {
                let (eps, a) = self.polar_geometry(r0, r1, th0, th1);
                if eps + a <= floor_width {
                    return None;
                }
                if a >= eps {
                    let mid = 0.5 * (th0 + th1);
                    return Some(vec![
                        Cell::Polar { r0, r1, th0, th1: mid },
                        Cell::Polar { r0, r1, th0: mid, th1 },
                    ]);
                }
                // halve in 1/(r - ρ), which halves the radial width term
                let Mode::Full { rho, .. } = self.mode else { unreachable!() };
                let v0 = if r1.is_finite() { 1.0 / (r1 - rho) } else { 0.0 };
                let v1 = 1.0 / (r0 - rho);
                let rm = rho + 2.0 / (v0 + v1);
                if !(rm > r0 && rm < r1) {
                    return None;
                }
                Some(vec![Cell::Polar { r0, r1: rm, th0, th1 }, Cell::Polar { r0: rm, r1, th0, th1 }])
            }
        }
    }

    fn initial_centers(&self, max_candidates: usize) -> Vec<Complex64> {
        let mut centers = vec![Complex64::new(0.0, 0.0)];
        centers.extend_from_slice(self.points);
        if self.points.len() <= max_candidates {
            centers.extend(circumcenters(self.points));
        }
        for depth in 0..=EXPLORE_DEPTH {
            let cells = 1i64 << depth;
            for ix in 0..cells {
                for iy in 0..cells {
                    centers.push(self.square_center(ix, iy, depth));
                }
            }
        }
        centers
    }
}

fn reduce(cands: impl IntoIterator<Item = Candidate>) -> Candidate {
    cands.into_iter().fold(Candidate::NONE, Candidate::best)
}

fn certify(tree: &Tree, h: f64, opts: &DiscrepancyOpts, variant: Variant) -> DiscrepancyReport {
    let centers = tree.initial_centers(opts.max_candidates);
    let found: Vec<Candidate> = centers.par_iter().map(|&c| tree.evaluate_center(c)).collect();
    let mut best = reduce(found);
    let reference = best.value.max(0.0);
    let slack_for = |v: f64| opts.slack_abs.min(opts.slack_rel * v.max(0.0));
    // Squares at one level are split against the best value found on the
    // levels above, which is the same for every grid fine enough to reach
    // that level; polar cells only use the initial value. Either way a finer
    // grid refines a superset of cells, so the bracket can only tighten.
    let polar_threshold = reference + slack_for(reference);

    let mut floor_depth = 0;
    while floor_depth < MAX_SQUARE_DEPTH && tree.side(floor_depth) > h {
        floor_depth += 1;
    }
    let floor_side = tree.side(floor_depth);
    let floor_width = SQRT_2 * floor_side;

    let mut work = WorkStats {
        candidates: centers.len(),
        grid_h: h,
        box_half_width: tree.half,
        floor_side,
        reference_lower: reference,
        ..WorkStats::default()
    };

    let mut frontier = vec![Node { cell: Cell::Square { ix: 0, iy: 0, depth: 0 }, inherited: f64::INFINITY }];
    if let Mode::Full { .. } = tree.mode {
        for k in 0..8 {
            let cell = Cell::Polar {
                r0: tree.half,
                r1: f64::INFINITY,
                th0: k as f64 * FRAC_PI_4,
                th1: (k + 1) as f64 * FRAC_PI_4,
            };
            frontier.push(Node { cell, inherited: f64::INFINITY });
        }
    }

    let mut leaf_max = f64::NEG_INFINITY;
    let mut deepest = EXPLORE_DEPTH;
    while !frontier.is_empty() {
        let above = best.value.max(0.0);
        let square_threshold = above + slack_for(above);
        let evals: Vec<(f64, Candidate)> = frontier.par_iter().map(|n| tree.evaluate(&n.cell, above)).collect();
        let mut next = Vec::new();
        for (node, (own, cand)) in frontier.iter().zip(evals) {
            work.cells += 1;
            let threshold = match node.cell {
                Cell::Square { depth, .. } => {
                    work.candidates += 1;
                    deepest = deepest.max(depth);
                    square_threshold
                }
                Cell::Polar { .. } => polar_threshold,
            };
            best = Candidate::best(best, cand);
            let bound = own.min(node.inherited);
            let kids = if bound > threshold { tree.split(&node.cell, floor_depth, floor_width) } else { None };
            match kids {
                Some(kids) if work.cells < opts.max_cells => {
                    next.extend(kids.into_iter().map(|cell| Node { cell, inherited: bound }));
                }
                other => {
                    work.truncated |= other.is_some();
                    leaf_max = leaf_max.max(bound);
                }
            }
        }
        frontier = next;
    }

    let lower = best.value.clamp(0.0, 1.0);
    let upper = leaf_max.max(lower).min(1.0);
    work.target_slack = slack_for(lower);
    work.lattice_spacing = tree.half / (1u64 << deepest) as f64;
    work.certificate = certificate_text(&tree.mode);
    DiscrepancyReport { variant, lower, upper, witness: Witness::Ball(Ball::new(best.center, best.radius)), work }
}

fn certificate_text(mode: &Mode) -> String {
    match mode {
        Mode::Full { rho, max_abs } => format!(
            "closed balls; ov(d, r) = mu_inf of a ball of radius r centered at distance d, ov(., r<=0) = 0; \
             d_j sorted distinct atom distances from the cell representative c', k_le/k_lt counts at or below / strictly below; \
             squares of [-B,B]^2 (B = {b}) with half-diagonal s, c' the center: \
             bound = max_j max(k_le(d_j)/n - ov(|c'|+s, d_j-s), ov(max(|c'|-s,0), d_j+s) - k_lt(d_j)/n); \
             squares outside |c| < B are dropped; polar cells r in [r0,r1], theta in [t0,t1] cover |c| >= B, \
             c' = r0 e^(i(t0+t1)/2), eps = rho^2/2 (1/(r0-rho) - 1/(r1-rho)), a = max|atom| (t1-t0)/2: \
             bound = max_j max(k_le(d_j)/n - ov(r0, d_j-eps-a), ov(r0, d_j+eps+a) - k_lt(d_j)/n); \
             rho = max(1, max|atom|) = {rho}, max|atom| = {max_abs}; every bound is at least 0 and the min with the parent's; \
             upper = min(1, max(lower, max leaf bound))",
            b = tree_half(*rho)
        ),
        Mode::Bulk { rho_b } => format!(
            "closed balls inside the disk of radius {rho_b}, mu_inf = R^2; squares of half-diagonal s around c', \
             R_cap = {rho_b} - |c'| + s; cell bound = max of k_le(s)/n, k_le(d_j)/n - (d_j - s)^2 for s < d_j <= R_cap + s, \
             (d_j + s)^2 - k_lt(d_j)/n for d_j + s <= R_cap, R_cap^2 - k_le(R_cap - s)/n; \
             a cell's bound is the min with its parent's; upper = min(1, max(lower, max leaf bound))"
        ),
    }
}

/// Largest `|μ_n(B) − ν(B)|` over concrete balls for an atomic reference `ν`
/// in place of the circular law. Centers are the origin, both atom sets and
/// the coarse dyadic lattice; radii are the atom distances and just below.
/// A lower bound for the two-sample discrepancy, used as a self-test.
pub fn two_sample_lower(points: &[Complex64], reference: &[Complex64]) -> Result<f64> {
    if points.is_empty() || reference.is_empty() {
        return Err(Error::InvalidArgument("two-sample discrepancy needs non-empty samples".into()));
    }
    let tree = Tree { points, nf: points.len() as f64, half: 2.0, mode: Mode::Bulk { rho_b: 1.0 } };
    let mut centers = tree.initial_centers(0);
    centers.extend_from_slice(reference);
    let nf = points.len() as f64;
    let mf = reference.len() as f64;
    let best = centers
        .par_iter()
        .map(|&c| {
            let a = sorted_distances(points, c);
            let b = sorted_distances(reference, c);
            let mut v = 0.0f64;
            for d in a.iter().chain(&b) {
                for r in [d.max(TINY_RADIUS), d - TINY_RADIUS] {
                    v = v.max((count_le(&a, r) as f64 / nf - count_le(&b, r) as f64 / mf).abs());
                }
            }
            v
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}
