//! Shared test oracles, independent of the library's solver path.
//!
//! For piecewise-constant potentials the reduced zero-energy equation has
//! closed-form solutions per shell (sinh/cosh, sin/cos, or linear), so the
//! pair (u, u') can be propagated exactly through the segments. The
//! scattering length then follows from the exterior line without any grid.

#![allow(dead_code)]

use bosegas::potential::{RadialPotential, Segment};
use rand::Rng;
use std::f64::consts::PI;

/// Propagate (u, u') across one shell of constant potential value `v0`.
pub fn propagate_segment(u: f64, w: f64, v0: f64, width: f64) -> (f64, f64) {
    let k = 0.5 * v0;
    if k > 0.0 {
        let kappa = k.sqrt();
        let (s, c) = ((kappa * width).sinh(), (kappa * width).cosh());
        (u * c + w * s / kappa, u * kappa * s + w * c)
    } else if k < 0.0 {
        let omega = (-k).sqrt();
        let (s, c) = ((omega * width).sin(), (omega * width).cos());
        (u * c + w * s / omega, -u * omega * s + w * c)
    } else {
        (u + w * width, w)
    }
}

/// Exact (u, u') at the support edge, starting from u(0) = 0, u'(0) = 1.
pub fn propagate_to_support_edge(v: &RadialPotential) -> (f64, f64) {
    let mut u = 0.0;
    let mut w = 1.0;
    for s in v.segments() {
        let (nu, nw) = propagate_segment(u, w, s.value, s.r_hi - s.r_lo);
        u = nu;
        w = nw;
    }
    (u, w)
}

/// Closed-form scattering length: the exterior tail is u'(R0) (r - a).
/// None when the tail slope vanishes (bound-state threshold).
pub fn oracle_scattering_length(v: &RadialPotential) -> Option<f64> {
    let (u, w) = propagate_to_support_edge(v);
    if w == 0.0 {
        return None;
    }
    Some(v.r0() - u / w)
}

/// Count nodes of u on (0, r_max] by dense closed-form sampling inside the
/// support plus the exact exterior line.
pub fn oracle_node_count(v: &RadialPotential, r_max: f64) -> usize {
    let mut nodes = 0;
    let mut u = 0.0;
    let mut w = 1.0;
    let mut prev_sign = 1.0_f64; // u > 0 just off the origin
    let samples_per_segment = 4000;
    for s in v.segments() {
        let width = s.r_hi - s.r_lo;
        for i in 1..=samples_per_segment {
            let x = width * i as f64 / samples_per_segment as f64;
            let (uu, _) = propagate_segment(u, w, s.value, x);
            if uu == 0.0 || uu.signum() != prev_sign {
                nodes += 1;
                prev_sign = if uu == 0.0 { -prev_sign } else { uu.signum() };
            }
        }
        let (nu, nw) = propagate_segment(u, w, s.value, width);
        u = nu;
        w = nw;
    }
    // exterior line u + w (r - R0) on (R0, r_max]
    if w != 0.0 {
        let crossing = v.r0() - u / w;
        if crossing > v.r0() && crossing <= r_max && u != 0.0 {
            nodes += 1;
        }
    }
    nodes
}

/// Random piecewise-constant potential with 1 to 4 segments, mixed signs,
/// certified free of bound states by the node-counting oracle and kept
/// away from the zero-crossing thresholds of the scattering length.
pub fn random_safe_potential<R: Rng>(rng: &mut R) -> RadialPotential {
    loop {
        let n_seg = rng.random_range(1..=4usize);
        let mut bounds: Vec<f64> = (0..n_seg)
            .map(|_| rng.random_range(0.2..2.0))
            .collect();
        bounds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        bounds.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        let mut segments = Vec::new();
        let mut lo = 0.0;
        for &hi in &bounds {
            segments.push(Segment {
                r_lo: lo,
                r_hi: hi,
                value: rng.random_range(-3.0..6.0),
            });
            lo = hi;
        }
        let Ok(v) = RadialPotential::from_segments(segments) else {
            continue;
        };
        if oracle_node_count(&v, 4.0 * v.r0()) > 0 {
            continue;
        }
        let (_, w) = propagate_to_support_edge(&v);
        if w.abs() < 0.05 {
            continue;
        }
        match oracle_scattering_length(&v) {
            Some(a) if a.abs() >= 0.05 => return v,
            _ => continue,
        }
    }
}

/// Independent re-evaluation of the per-cell Temple bound with a different
/// algebraic grouping of the same factors. None when the gap closes.
pub fn temple_bound_duplicate(
    n: usize,
    ell: f64,
    a: f64,
    big_r: f64,
    r0: f64,
    y_low: f64,
    unnamed_const: f64,
) -> Option<f64> {
    let nf = n as f64;
    let gap = (3.0 * PI * y_low - 4.0 * a * nf * nf / ell) / (ell * ell);
    if gap <= 0.0 {
        return None;
    }
    let two_r_over_ell = 2.0 * big_r / ell;
    let density = 4.0 * PI * (a * nf / (ell * ell * ell)) * (1.0 - 1.0 / nf);
    let temple = 1.0
        - 3.0 * a * nf / (PI * (big_r * big_r * big_r - (a * r0).powi(3)) * gap);
    Some(
        density * (1.0 - unnamed_const * y_low) * (1.0 - two_r_over_ell).powi(3)
            / (1.0 + (4.0 * PI * nf / 3.0) * two_r_over_ell.powi(3))
            * temple,
    )
}

/// The mixed-sign potential used to exercise the non-monotone branches:
/// shallow attraction first, a thin repulsive shell at the edge. Its
/// profile exceeds 1 inside (M > 1) while the scattering length stays
/// positive and no bound state exists.
pub fn attractive_core_potential() -> RadialPotential {
    RadialPotential::new(
        vec![
            Segment {
                r_lo: 0.0,
                r_hi: 1.0,
                value: -0.5,
            },
            Segment {
                r_lo: 1.0,
                r_hi: 1.1,
                value: 2.0,
            },
        ],
        1.1,
        0.0,
        0.0,
        0.5,
    )
    .unwrap()
}

/// Barrier potential of the acceptance runs: value 50 on [0, 1].
pub fn tall_barrier() -> RadialPotential {
    RadialPotential::new(
        vec![Segment {
            r_lo: 0.0,
            r_hi: 1.0,
            value: 50.0,
        }],
        1.0,
        1.0,
        50.0,
        0.0,
    )
    .unwrap()
}

/// rho such that (4 pi / 3) a^3 rho equals the given gas parameter.
pub fn rho_for_gas(gas: f64, a: f64) -> f64 {
    gas / (4.0 * PI / 3.0 * a.powi(3))
}
