//! The circular law `μ∞`, uniform on the closed unit disk: ball masses,
//! quadrant masses, shell suprema and the logarithmic potential.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI};

/// Closed disk `B_r(c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    #[serde(with = "complex_pair")]
    pub center: Complex64,
    pub radius: f64,
}

pub(crate) mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

impl Ball {
    pub fn new(center: Complex64, radius: f64) -> Self {
        assert!(radius >= 0.0, "negative radius {radius}");
        Self { center, radius }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (z - self.center).norm() <= self.radius
    }
}

const EDGE_TOL: f64 = 1e-14;

/// Area of `B_r(c) ∩ B_1(0)` divided by `π`, for `d = |c|`.
pub fn disk_overlap(d: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if d >= 1.0 + r - EDGE_TOL {
        return 0.0;
    }
    if d + r <= 1.0 + EDGE_TOL {
        return (r * r).min(1.0);
    }
    if d + 1.0 <= r + EDGE_TOL {
        return 1.0;
    }
    // proper lens: two circular caps cut by the radical line, with cap
    // heights formed without cancellation so far-away centers stay accurate
    let h_unit = (r - d + 1.0) * (r + d - 1.0) / (2.0 * d);
    let h_ball = (1.0 - (d - r)) * (1.0 + (d - r)) / (2.0 * d);
    ((cap_area(1.0, h_unit) + cap_area(r, h_ball)) / PI).clamp(0.0, 1.0)
}

/// Area of the cap of height `h` cut from a disk of radius `rho`.
fn cap_area(rho: f64, h: f64) -> f64 {
    let h = h.clamp(0.0, 2.0 * rho);
    let half_chord = (h * (2.0 * rho - h)).max(0.0).sqrt();
    let theta = half_chord.atan2(rho - h);
    let t = 2.0 * theta;
    if t < 0.05 {
        // ρ²(t - sin t)/2 by series
        let t2 = t * t;
        0.5 * rho * rho * t * t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0 * (1.0 - t2 / 72.0)))
    } else {
        rho * rho * theta - (rho - h) * half_chord
    }
}

pub fn mu_inf_ball(b: &Ball) -> f64 {
    disk_overlap(b.center.norm(), b.radius)
}

/// `∫_{-1}^{a} √(1-x²) dx` for `a ∈ [-1, 1]`.
fn half_disk_prefix(a: f64) -> f64 {
    let a = a.clamp(-1.0, 1.0);
    0.5 * (a * (1.0 - a * a).max(0.0).sqrt() + a.asin()) + FRAC_PI_4
}

/// `μ∞((-∞, s] × (-∞, t])`, closed form from circular segments.
pub fn mu_inf_quadrant(s: f64, t: f64) -> f64 {
    let s = s.clamp(-1.0, 1.0);
    let t = t.clamp(-1.0, 1.0);
    // |x| < c is where the chord crosses the line y = t
    let c = (1.0 - t * t).max(0.0).sqrt();
    let m = s.clamp(-c, c);
    let middle = half_disk_prefix(m) - half_disk_prefix(-c);
    let area = if t >= 0.0 {
        2.0 * half_disk_prefix(s) - (middle - t * (m + c))
    } else {
        middle + t * (m + c)
    };
    (area / PI).clamp(0.0, 1.0)
}

/// `μ∞({|z| ≤ 1-w ... 1})`: the concentric annulus at the edge, `2w - w²`.
fn edge_annulus(w: f64) -> f64 {
    if w >= 1.0 {
        1.0
    } else {
        2.0 * w - w * w
    }
}

/// Strip of width `w` through the center, the `R → ∞` limit of shells.
fn central_strip(w: f64) -> f64 {
    let a = (0.5 * w).min(1.0);
    (2.0 / PI) * (a * (1.0 - a * a).max(0.0).sqrt() + a.asin())
}

fn shell_mass(d: f64, r: f64, w: f64) -> f64 {
    disk_overlap(d, r + w) - disk_overlap(d, r)
}

/// `sup_{c,R} μ∞({R ≤ |z-c| ≤ R+w})`: best of the analytic candidates and a
/// grid search over `|c| ∈ [0,3]`, `R ∈ [0,4]` with local refinement.
pub fn mu_inf_shell_sup(w: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    if w >= 1.0 {
        return 1.0;
    }
    let mut best = edge_annulus(w).max(central_strip(w));
    let (mut bd, mut br) = (0.0, 1.0 - w);
    let step = 0.02;
    for i in 0..=150 {
        let d = i as f64 * step;
        for j in 0..=200 {
            let r = j as f64 * step;
            let m = shell_mass(d, r, w);
            if m > best {
                best = m;
                bd = d;
                br = r;
            }
        }
    }
    // compass search around the incumbent
    let mut h = step;
    while h > 1e-9 {
        let mut moved = false;
        for (dd, dr) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            let (d, r) = ((bd + dd).max(0.0), (br + dr).max(0.0));
            let m = shell_mass(d, r, w);
            if m > best {
                best = m;
                bd = d;
                br = r;
                moved = true;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    best.min(1.0)
}

/// Rigorous upper bound for the shell supremum: the `μ∞` mass of a width-`w`
/// shell is at most `min(1, 2w)` because every circle meets the unit disk
/// in an arc of length at most `2π`, and the density is `1/π`.
pub fn shell_mass_bound(w: f64) -> f64 {
    (2.0 * w.max(0.0)).min(1.0)
}

/// `U∞(z) = -∫ ln|z-t| dμ∞(t)`.
pub fn u_inf(z: Complex64) -> f64 {
    let r = z.norm();
    if r <= 1.0 {
        0.5 * (1.0 - r * r)
    } else {
        -r.ln()
    }
}
