//! Tables of the exact mean-Ginibre quantities.

use crate::error::{Error, Result};
use crate::ginibre_exact::{bulk_bound, dbar, lemma_rate, mean_ball_mass_origin};
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactRow {
    pub n: u64,
    pub radius: f64,
    pub mean_mass: f64,
    pub dbar: f64,
    pub lemma_rate: f64,
    /// `None` at `R = 1`, where the bound is not defined.
    pub bulk_bound: Option<f64>,
}

pub fn ginibre_exact_table(n_list: &[u64], radii: &[f64]) -> Result<Vec<ExactRow>> {
    if n_list.iter().any(|&n| n == 0) {
        return Err(Error::InvalidSpec("n must be at least 1".into()));
    }
    if radii.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidSpec("radii must be positive and finite".into()));
    }
    let mut out = Vec::with_capacity(n_list.len() * radii.len());
    for &n in n_list {
        let rate = lemma_rate(n);
        for &radius in radii {
            out.push(ExactRow {
                n,
                radius,
                mean_mass: mean_ball_mass_origin(n, radius),
                dbar: dbar(n, radius),
                lemma_rate: rate,
                bulk_bound: bulk_bound(n, radius).ok(),
            });
        }
    }
    Ok(out)
}

/// CSV with header `n,radius,mean_mass,dbar,lemma_rate,bulk_bound`.
pub fn write_exact_csv<W: Write>(rows: &[ExactRow], mut w: W) -> Result<()> {
    writeln!(w, "n,radius,mean_mass,dbar,lemma_rate,bulk_bound")?;
    for r in rows {
        let b = r.bulk_bound.map(|b| b.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{},{},{b}", r.n, r.radius, r.mean_mass, r.dbar, r.lemma_rate)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows() {
        let rows = ginibre_exact_table(&[5, 50], &[0.5, 1.0]).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows[1].bulk_bound.is_none() && rows[0].bulk_bound.is_some());
        assert!((rows[1].dbar - rows[1].lemma_rate).abs() <= 1e-14 * rows[1].lemma_rate);
        let mut buf = Vec::new();
        write_exact_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().nth(2).unwrap().ends_with(','));
        assert!(ginibre_exact_table(&[0], &[0.5]).is_err());
        assert!(ginibre_exact_table(&[5], &[-1.0]).is_err());
    }
}
