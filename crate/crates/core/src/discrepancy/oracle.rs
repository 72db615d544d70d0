//! Dense-grid reference value for small samples, used to audit brackets.

use super::{circumcenters, dist, TINY_RADIUS};
use crate::error::{Error, Result};
use crate::reference::disk_overlap;
use crate::spectra::SpectralSample;
use num_complex::Complex64;
use rayon::prelude::*;

pub const ORACLE_MAX_ATOMS: usize = 64;

/// Largest `|μ_n(B) − μ∞(B)|` over closed balls whose centers are the lattice
/// `center_grid_h · Z²` inside `[-domain_radius, domain_radius]²`, the origin,
/// the atoms, pair midpoints and triple circumcenters, and whose radii are the
/// multiples of `radius_grid_h` up to the radius covering both atoms and disk
/// plus each atom distance and the distance less `1e-9`.
///
/// Every term is attained by an explicit ball, so this is a lower bound on the
/// discrepancy; its resolution is set by the two grid spacings.
pub fn brute_force_oracle(
    sample: &SpectralSample,
    center_grid_h: f64,
    radius_grid_h: f64,
    domain_radius: f64,
) -> Result<f64> {
    let pts = &sample.points;
    let n = pts.len();
    if n == 0 {
        return Err(Error::InvalidArgument("oracle needs at least one atom".into()));
    }
    if n > ORACLE_MAX_ATOMS {
        return Err(Error::CostGuard(format!("oracle limited to {ORACLE_MAX_ATOMS} atoms, got {n}")));
    }
    if !(center_grid_h > 0.0 && radius_grid_h > 0.0 && domain_radius > 0.0) {
        return Err(Error::InvalidArgument("oracle grids and domain must be positive".into()));
    }
    let k = (domain_radius / center_grid_h).floor() as i64;
    let lattice = (2 * k + 1) * (2 * k + 1);
    if lattice > 20_000_000 {
        return Err(Error::CostGuard(format!("{lattice} oracle centers")));
    }

    let mut centers = vec![Complex64::new(0.0, 0.0)];
    centers.extend_from_slice(pts);
    centers.extend(circumcenters(pts));
    centers.extend((-k..=k).flat_map(|i| {
        (-k..=k).map(move |j| Complex64::new(i as f64 * center_grid_h, j as f64 * center_grid_h))
    }));

    let nf = n as f64;
    let value = centers
        .par_iter()
        .map(|&c| {
            let dist: Vec<f64> = pts.iter().map(|p| dist(*p, c)).collect();
            let dc = c.norm();
            let eval = |r: f64| {
                let k = dist.iter().filter(|&&d| d <= r).count();
                (k as f64 / nf - disk_overlap(dc, r)).abs()
            };
            let mut v = 0.0f64;
            for &d in &dist {
                v = v.max(eval(d.max(TINY_RADIUS)));
                if d > TINY_RADIUS {
                    v = v.max(eval(d - TINY_RADIUS));
                }
            }
            let reach = dist.iter().copied().fold(dc + 1.0, f64::max);
            let steps = (reach / radius_grid_h).ceil() as usize + 1;
            for j in 1..=steps {
                v = v.max(eval(j as f64 * radius_grid_h));
            }
            v
        })
        .reduce(|| 0.0, f64::max);
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::super::{discrepancy_balls, DiscrepancyOpts};
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_atom() {
        let s = SpectralSample::from_points(vec![c(0.0, 0.0)]);
        assert!(brute_force_oracle(&s, 0.1, 0.1, 1.0).unwrap() >= 1.0 - 1e-6);
    }

    #[test]
    fn cost_guard() {
        let s = SpectralSample::from_points(vec![c(0.0, 0.0); 65]);
        assert!(matches!(brute_force_oracle(&s, 0.1, 0.1, 1.0), Err(Error::CostGuard(_))));
    }

    #[test]
    fn ring_of_sixteen_is_bracketed() {
        let pts: Vec<_> =
            (0..16).map(|k| Complex64::from_polar(0.5, k as f64 * std::f64::consts::PI / 8.0)).collect();
        let s = SpectralSample::from_points(pts);
        let opts = DiscrepancyOpts { grid_h: Some(0.05), ..Default::default() };
        let r = discrepancy_balls(&s, &opts).unwrap();
        let o = brute_force_oracle(&s, r.work.lattice_spacing, 0.01, r.work.box_half_width).unwrap();
        assert!(o >= r.lower - 1e-12 && o <= r.upper, "{o} vs [{}, {}]", r.lower, r.upper);
    }

    #[test]
    fn atoms_on_lattice_match_lower() {
        let pts = vec![c(0.5, 0.0), c(-0.5, 0.0), c(0.0, 0.5), c(0.0, -0.5)];
        let s = SpectralSample::from_points(pts);
        let opts = DiscrepancyOpts { grid_h: Some(0.1), ..Default::default() };
        let r = discrepancy_balls(&s, &opts).unwrap();
        let o = brute_force_oracle(&s, r.work.lattice_spacing, 0.01, r.work.box_half_width).unwrap();
        assert_eq!(o, r.lower);
    }
}
