//! Analytic lower-bound pipeline: soft-potential replacement, per-cell
//! Temple bounds, piecewise energy floors, and the lattice covering
//! constants behind the stability parameters `c1`, `c2`.
//!
//! Every unnamed constant in the bound is an explicit caller parameter with
//! default 1 and is echoed in the report; the underlying constants are
//! existential, and hiding a chosen value would fabricate precision.

use crate::parallel;
use crate::potential::RadialPotential;
use crate::scattering::{self, ScatteringError};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LowerBoundError {
    #[error("annulus requires R = {outer:.6} > R0 a = {inner:.6}")]
    InvalidAnnulus { inner: f64, outer: f64 },
    #[error("Temple gap 3 pi Y/l^2 - 4 a n^2/l^3 = {gap:.3e} is not positive at n = {n}")]
    NegativeTempleGap { n: usize, gap: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
}

/// Constant soft potential on the annulus `[R0 a, R]`, normalized so that
/// `\int U0 dx = 4 pi` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftPotential {
    pub inner: f64,
    pub outer: f64,
    pub value: f64,
}

impl SoftPotential {
    pub fn evaluate(&self, r: f64) -> f64 {
        if r >= self.inner && r <= self.outer {
            self.value
        } else {
            0.0
        }
    }
}

/// `U0 = 3 / (R^3 - (R0 a)^3)` on the annulus.
pub fn soft_potential(a: f64, r0: f64, big_r: f64) -> Result<SoftPotential, LowerBoundError> {
    let inner = r0 * a;
    if big_r <= inner || big_r.is_nan() {
        return Err(LowerBoundError::InvalidAnnulus {
            inner,
            outer: big_r,
        });
    }
    Ok(SoftPotential {
        inner,
        outer: big_r,
        value: 3.0 / (big_r.powi(3) - inner.powi(3)),
    })
}

/// Per-particle Temple bound for `n` particles in a Neumann cell of side
/// `ell`. The factors, kept separate on purpose:
/// density term `4 pi a n / l^3 (1 - 1/n)`, the unnamed `(1 - const Y)`,
/// the volume shrink `(1 - 2R/l)^3`, the normalization
/// `(1 + (4 pi n/3)(2R/l)^3)^{-1}`, and the Temple correction
/// `1 - (3/pi) a n / ((R^3 - (a R0)^3)(3 pi Y/l^2 - 4 a n^2/l^3))`.
pub fn temple_cell_bound(
    n: usize,
    ell: f64,
    a: f64,
    big_r: f64,
    r0: f64,
    y_low: f64,
    unnamed_const: f64,
) -> Result<f64, LowerBoundError> {
    if n < 1 {
        return Err(LowerBoundError::InvalidInput(format!(
            "cell occupancy n = {n} must be at least 1"
        )));
    }
    let nf = n as f64;
    let gap = 3.0 * PI * y_low / (ell * ell) - 4.0 * a * nf * nf / ell.powi(3);
    if gap <= 0.0 {
        return Err(LowerBoundError::NegativeTempleGap { n, gap });
    }
    let density_term = 4.0 * PI * a * nf / ell.powi(3) * (1.0 - 1.0 / nf);
    let const_term = 1.0 - unnamed_const * y_low;
    let shrink = (1.0 - 2.0 * big_r / ell).powi(3);
    let norm = 1.0 / (1.0 + 4.0 * PI * nf / 3.0 * (2.0 * big_r / ell).powi(3));
    let temple_factor =
        1.0 - 3.0 / PI * a * nf / ((big_r.powi(3) - (a * r0).powi(3)) * gap);
    Ok(density_term * const_term * shrink * norm * temple_factor)
}

/// Piecewise per-particle floor: the dilute branch
/// `4 pi a n / l^3 (1 - 1/n)(1 - C Y)` for `n <= 4 l^3 rho`, the saturated
/// branch `8 pi a rho (1 - C Y)` for `n >= 4 l^3 rho`, and the larger of
/// the two exactly at the crossover.
pub fn cell_energy_floor(
    n: usize,
    ell: f64,
    rho: f64,
    a: f64,
    y_low: f64,
    const_c: f64,
) -> f64 {
    let nf = n as f64;
    let crossover = 4.0 * ell.powi(3) * rho;
    let branch1 =
        || 4.0 * PI * a * nf / ell.powi(3) * (1.0 - 1.0 / nf) * (1.0 - const_c * y_low);
    let branch2 = || 8.0 * PI * a * rho * (1.0 - const_c * y_low);
    if nf < crossover {
        branch1()
    } else if nf > crossover {
        branch2()
    } else {
        branch1().max(branch2())
    }
}

/// Integer covering constants from the lattice of cubes of side `r1 / 2`
/// (lengths in units of `r1`):
/// `n2` cubes suffice to cover a ball of radius `R0`, at most `n3` cubes
/// come within `3 R0` of any point, and `n1` is the smallest integer >= 3
/// with `n1^2 / n2 >= 2 n1`, so that `g^2/n2 - g >= g^2/(2 n2)` for every
/// occupancy `g >= n1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoveringConstants {
    pub n1: u64,
    pub n2: u64,
    pub n3: u64,
}

/// Resolution of the worst-case search over ball centers: centers are
/// sampled on a uniform grid of this many points per axis across one
/// lattice cell (endpoints included).
pub const COVERING_CENTER_SAMPLES: usize = 5;

fn axis_distance(x: f64, index: i64, side: f64) -> f64 {
    let lo = index as f64 * side;
    let hi = lo + side;
    if x < lo {
        lo - x
    } else if x > hi {
        x - hi
    } else {
        0.0
    }
}

// Number of lattice cubes of side `side` whose distance to `center` is at
// most `radius`. The third axis is counted in closed form.
fn cubes_within(center: [f64; 3], radius: f64, side: f64) -> u64 {
    let range = |c: f64| {
        let lo = ((c - radius) / side).floor() as i64 - 1;
        let hi = ((c + radius) / side).ceil() as i64 + 1;
        lo..=hi
    };
    let mut count = 0u64;
    for i in range(center[0]) {
        let dx = axis_distance(center[0], i, side);
        let rem_x = radius * radius - dx * dx;
        if rem_x < 0.0 {
            continue;
        }
        for j in range(center[1]) {
            let dy = axis_distance(center[1], j, side);
            let rem = rem_x - dy * dy;
            if rem < 0.0 {
                continue;
            }
            let t = rem.sqrt();
            let k_hi = ((center[2] + t) / side).floor() as i64;
            let k_lo = ((center[2] - t) / side).ceil() as i64 - 1;
            count += (k_hi - k_lo + 1).max(0) as u64;
        }
    }
    count
}

fn worst_case_cover(radius: f64, side: f64) -> u64 {
    let k = COVERING_CENTER_SAMPLES;
    let mut centers = Vec::with_capacity(k * k * k);
    for i in 0..k {
        for j in 0..k {
            for l in 0..k {
                centers.push([
                    side * i as f64 / (k - 1) as f64,
                    side * j as f64 / (k - 1) as f64,
                    side * l as f64 / (k - 1) as f64,
                ]);
            }
        }
    }
    parallel::map(&centers, |&c| cubes_within(c, radius, side))
        .into_iter()
        .max()
        .unwrap_or(0)
}

/// Covering constants for `ratio = R0 / r1`. Pure enumeration, so the
/// outputs are exact integers reproducible across runs.
pub fn covering_constants(ratio: f64) -> CoveringConstants {
    if ratio <= 0.0 {
        return CoveringConstants {
            n1: 3,
            n2: 1,
            n3: 1,
        };
    }
    let side = 0.5;
    let n2 = worst_case_cover(ratio, side).max(1);
    let n3 = worst_case_cover(3.0 * ratio, side).max(1);
    // smallest n1 >= 3 with n1^2/n2 >= 2 n1, i.e. n1 >= 2 n2
    let n1 = (2 * n2).max(3);
    CoveringConstants { n1, n2, n3 }
}

/// The concrete stability parameters from the covering constants:
/// `c1 = 4 n1` and `c2 = max(2 sqrt(n2 n3), n2 n3 / (4 n1))`.
pub fn default_c_constants(ratio: f64) -> (f64, f64) {
    let c = covering_constants(ratio);
    let c1 = 4.0 * c.n1 as f64;
    let prod = (c.n2 * c.n3) as f64;
    let c2 = (2.0 * prod.sqrt()).max(prod / (4.0 * c.n1 as f64));
    (c1, c2)
}

/// One row of the per-cell table; `bound` is `None` where the Temple gap
/// closes and the bound does not apply.
#[derive(Debug, Clone, PartialEq)]
pub struct TempleRow {
    pub n: usize,
    pub bound: Option<f64>,
}

/// Assembled lower-bound quantities at one density point.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundReport {
    /// `(a^3 rho)^{1/17}`
    pub y_low: f64,
    /// `R = a (a^3 rho)^{-5/17}`
    pub big_r: f64,
    /// `3 Y / min(1, SL[v_plus])`
    pub epsilon: f64,
    /// `l = a Y^{-6}`
    pub ell: f64,
    pub temple_rows: Vec<TempleRow>,
    /// `4 pi a rho (1 - C Y)`
    pub floor_per_particle: f64,
    /// `epsilon < t / (2 (1 + t))`
    pub epsilon_admissible: bool,
    /// `R >= 2 R0 a`, which holds once the gas is dilute enough
    pub r_geq_2r0a: bool,
    pub sl_v_plus: f64,
    pub const_c: f64,
    pub t: f64,
    pub a: f64,
    pub rho: f64,
}

/// Compute every lower-bound ingredient at `(a, rho)` for interaction `v`
/// (already at scattering length `a`; its support radius plays `R0 a`).
pub fn assemble_lower_bound(
    v: &RadialPotential,
    a: f64,
    rho: f64,
    const_c: f64,
    t: f64,
) -> Result<LowerBoundReport, LowerBoundError> {
    if !a.is_finite() || a <= 0.0 || !rho.is_finite() || rho <= 0.0 {
        return Err(LowerBoundError::InvalidInput(format!(
            "need a > 0 and rho > 0, got ({a}, {rho})"
        )));
    }
    let gas = a.powi(3) * rho;
    if gas >= 1.0 {
        return Err(LowerBoundError::InvalidInput(format!(
            "a^3 rho = {gas} must be below 1"
        )));
    }
    if !t.is_finite() || t <= 0.0 {
        return Err(LowerBoundError::InvalidInput(format!(
            "t must be positive, got {t}"
        )));
    }
    let y_low = gas.powf(1.0 / 17.0);
    let big_r = a * gas.powf(-5.0 / 17.0);
    let ell = a * y_low.powi(-6);
    let (v_plus, _) = v.decompose();
    let sl_v_plus = scattering::scattering_length(&v_plus)?;
    let epsilon = 3.0 * y_low / sl_v_plus.min(1.0);
    let r0a = v.r0();

    let n_max = (8.0 / 3.0 * rho * ell.powi(3) / y_low).floor().min(100.0) as usize;
    let mut temple_rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let bound = match temple_cell_bound(n, ell, a, big_r, r0a / a, y_low, const_c) {
            Ok(b) => Some(b),
            Err(LowerBoundError::NegativeTempleGap { .. }) => None,
            Err(e) => return Err(e),
        };
        temple_rows.push(TempleRow { n, bound });
    }

    Ok(LowerBoundReport {
        y_low,
        big_r,
        epsilon,
        ell,
        temple_rows,
        floor_per_particle: 4.0 * PI * a * rho * (1.0 - const_c * y_low),
        epsilon_admissible: epsilon < t / (2.0 * (1.0 + t)),
        r_geq_2r0a: big_r >= 2.0 * r0a,
        sl_v_plus,
        const_c,
        t,
        a,
        rho,
    })
}
