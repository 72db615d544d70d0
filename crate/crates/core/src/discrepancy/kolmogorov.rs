//! Two-dimensional Kolmogorov distance over lower-left quadrants.

use super::{DiscrepancyReport, Variant, Witness, WorkStats};
use crate::error::{Error, Result};
use crate::reference::mu_inf_quadrant;
use crate::spectra::SpectralSample;
use num_complex::Complex64;
use rayon::prelude::*;

/// Distinct sorted values and the rank of each input among them.
fn ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut distinct = values.to_vec();
    distinct.sort_unstable_by(f64::total_cmp);
    distinct.dedup();
    let rank = values.iter().map(|v| distinct.partition_point(|x| x < v)).collect();
    (distinct, rank)
}

/// `(count index, coordinate, open)` triples: each coordinate is visited
/// closed (count includes it) and open (count stops just before), plus a
/// point beyond every atom and the unit disk.
fn stops(distinct: &[f64]) -> Vec<(usize, f64, bool)> {
    let mut out = Vec::with_capacity(2 * distinct.len() + 1);
    for (i, &v) in distinct.iter().enumerate() {
        out.push((i, v, true));
        out.push((i + 1, v, false));
    }
    let top = distinct.last().copied().unwrap_or(0.0).max(1.0) + 1.0;
    out.push((distinct.len(), top, false));
    out
}

/// Exact `sup_{s,t} |F_n(s,t) − F∞(s,t)|`.
pub fn kolmogorov_2d(sample: &SpectralSample) -> Result<DiscrepancyReport> {
    let pts = &sample.points;
    if pts.is_empty() {
        return Err(Error::InvalidArgument("kolmogorov distance of an empty sample".into()));
    }
    if pts.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidArgument("sample has non-finite points".into()));
    }
    let nf = pts.len() as f64;
    let (xs, xr) = ranks(&pts.iter().map(|z| z.re).collect::<Vec<_>>());
    let (ys, yr) = ranks(&pts.iter().map(|z| z.im).collect::<Vec<_>>());
    let (sx, sy) = (stops(&xs), stops(&ys));

    // by_x[a] lists the y ranks of atoms with x rank a
    let mut by_x = vec![Vec::new(); xs.len()];
    for (a, b) in xr.iter().zip(&yr) {
        by_x[*a].push(*b);
    }
    // prefix[a][b] = #{x rank < a, y rank < b}, built row by row
    let mut prefix = Vec::with_capacity(xs.len() + 1);
    let mut col = vec![0u32; ys.len()];
    for a in 0..=xs.len() {
        let mut row = Vec::with_capacity(ys.len() + 1);
        let mut acc = 0u32;
        row.push(0);
        for c in &col {
            acc += c;
            row.push(acc);
        }
        prefix.push(row);
        if a < xs.len() {
            for &b in &by_x[a] {
                col[b] += 1;
            }
        }
    }

    let best = sx
        .par_iter()
        .map(|&(a, s, s_open)| {
            let mut best = (f64::NEG_INFINITY, [0.0, 0.0], false, false);
            for &(b, t, t_open) in &sy {
                let v = (prefix[a][b] as f64 / nf - mu_inf_quadrant(s, t)).abs();
                if v > best.0 {
                    best = (v, [s, t], s_open, t_open);
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::NEG_INFINITY, [0.0, 0.0], false, false), |acc, x| if x.0 > acc.0 { x } else { acc });

    let value = best.0.clamp(0.0, 1.0);
    let work = WorkStats {
        candidates: sx.len() * sy.len(),
        certificate: "exact: F_n is constant between atom coordinates, F_inf is monotone, so the supremum \
                      is attained at an atom coordinate from the left or right in each variable"
            .into(),
        ..WorkStats::default()
    };
    Ok(DiscrepancyReport {
        variant: Variant::Kolmogorov2d,
        lower: value,
        upper: value,
        witness: Witness::Corner { corner: best.1, s_open: best.2, t_open: best.3 },
        work,
    })
}

/// Closed quadrants with corners on the lattice `h·Z²` inside `[-half, half]²`.
pub fn quadrant_oracle(points: &[Complex64], h: f64, half: f64) -> Result<f64> {
    if points.is_empty() || !(h > 0.0) || !(half > 0.0) {
        return Err(Error::InvalidArgument("quadrant oracle needs atoms and a positive grid".into()));
    }
    let k = (half / h).floor() as i64;
    if (2 * k + 1).pow(2) as f64 * points.len() as f64 > 5e9 {
        return Err(Error::CostGuard(format!("{} corners for {} atoms", (2 * k + 1).pow(2), points.len())));
    }
    let nf = points.len() as f64;
    Ok((-k..=k)
        .into_par_iter()
        .map(|i| {
            let s = i as f64 * h;
            let mut v = 0.0f64;
            for j in -k..=k {
                let t = j as f64 * h;
                let count = points.iter().filter(|z| z.re <= s && z.im <= t).count();
                v = v.max((count as f64 / nf - mu_inf_quadrant(s, t)).abs());
            }
            v
        })
        .reduce(|| 0.0, f64::max))
}
