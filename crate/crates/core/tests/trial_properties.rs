//! Structural properties of the trial state: the sandwich bound, the
//! reduction to the nearest-neighbor form for repulsive potentials,
//! continuity across the R_tilde sphere, and finite-difference checks of
//! the closed-form gradient, including the non-monotone-profile branches.

mod common;

use bosegas::scattering;
use bosegas::trial::{
    evaluate_f_p, grad_log_psi, log_psi, near_tie_manifold, neighbor_stats,
    ParticleConfiguration, TrialParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn barrier_trial(box_l: f64) -> (bosegas::RadialPotential, TrialParams) {
    let v = common::tall_barrier();
    let a = scattering::scattering_length(&v).unwrap();
    let rho = common::rho_for_gas(1.6e-3, a);
    let params = TrialParams::build(&v, a, rho, box_l).unwrap();
    (v, params)
}

// trial parameters for the attractive-core potential, sized so that
// b is just above the allowed minimum and the box holds it
fn attractive_trial(box_l: f64) -> (bosegas::RadialPotential, TrialParams) {
    let v = common::attractive_core_potential();
    let a = scattering::scattering_length(&v).unwrap();
    let b_target = 2.5;
    let gas = (a / b_target).powi(4);
    let rho = common::rho_for_gas(gas, a);
    let params = TrialParams::build(&v, a, rho, box_l).unwrap();
    (v, params)
}

fn random_config<R: Rng>(rng: &mut R, n: usize, box_l: f64) -> ParticleConfiguration {
    let positions = (0..n)
        .map(|_| {
            [
                rng.random_range(0.0..box_l),
                rng.random_range(0.0..box_l),
                rng.random_range(0.0..box_l),
            ]
        })
        .collect();
    ParticleConfiguration::new(positions, box_l)
}

// clustered configurations stress the in-range branches
fn clustered_config<R: Rng>(
    rng: &mut R,
    n: usize,
    box_l: f64,
    spread: f64,
) -> ParticleConfiguration {
    let c = box_l / 2.0;
    let positions = (0..n)
        .map(|_| {
            [
                c + rng.random_range(-spread..spread),
                c + rng.random_range(-spread..spread),
                c + rng.random_range(-spread..spread),
            ]
        })
        .collect();
    ParticleConfiguration::new(positions, box_l)
}

#[allow(clippy::needless_range_loop)]
fn fd_grad_log_psi(
    config: &ParticleConfiguration,
    params: &TrialParams,
    h: f64,
) -> Vec<[f64; 3]> {
    let n = config.len();
    let mut out = vec![[0.0; 3]; n];
    for i in 0..n {
        for c in 0..3 {
            let base = config.positions()[i];
            let mut plus = config.clone();
            let mut shifted = base;
            shifted[c] += h;
            plus.set_position(i, shifted);
            let mut minus = config.clone();
            shifted = base;
            shifted[c] -= h;
            minus.set_position(i, shifted);
            out[i][c] = (log_psi(&plus, params) - log_psi(&minus, params)) / (2.0 * h);
        }
    }
    out
}

fn assert_grad_matches_fd(
    config: &ParticleConfiguration,
    params: &TrialParams,
    tol: f64,
) {
    let grad = grad_log_psi(config, params).unwrap();
    let fd = fd_grad_log_psi(config, params, 1e-6);
    for i in 0..config.len() {
        for c in 0..3 {
            let denom = grad[i][c].abs().max(fd[i][c].abs());
            if denom < 1e-9 {
                continue;
            }
            let rel = (grad[i][c] - fd[i][c]).abs() / denom;
            assert!(
                rel <= tol || (grad[i][c] - fd[i][c]).abs() <= 5e-10,
                "particle {i} coord {c}: analytic {} vs fd {}",
                grad[i][c],
                fd[i][c]
            );
        }
    }
}

#[test]
fn profile_exceeds_one_for_attractive_core() {
    let (v, params) = attractive_trial(6.0);
    assert!(
        params.m_sup() > 1.01,
        "expected a non-monotone profile with M > 1, got {}",
        params.m_sup()
    );
    // f decreases through the attractive region: not monotone
    assert!(params.f(0.05) > params.f(0.9));
    // M = sup f is at most twice the sup of the untruncated profile
    let sol = scattering::solve_zero_energy(&v, 4.0 * v.r0(), 100_000).unwrap();
    let sup_fa = (0..sol.grid.len())
        .map(|i| sol.f_at(i))
        .fold(1.0_f64, f64::max);
    assert!(params.m_sup() <= 2.0 * sup_fa + 1e-12);
}

#[test]
fn trial_state_is_order_dependent() {
    // the product over ordered factors is not label-symmetric: swapping
    // two particles changes which priors each factor watches
    let (_, params) = barrier_trial(10.0);
    let rt = params.r_tilde();
    let x0 = [5.0, 5.0, 5.0];
    let x1 = [5.0 + 0.7 * rt, 5.0, 5.0];
    let x2 = [5.0 - 1.3 * rt, 5.0, 5.0];
    let forward = log_psi(
        &ParticleConfiguration::new(vec![x0, x1, x2], 10.0),
        &params,
    );
    let swapped = log_psi(
        &ParticleConfiguration::new(vec![x2, x1, x0], 10.0),
        &params,
    );
    assert!(
        (forward - swapped).abs() > 1e-6,
        "expected order dependence, got {forward} vs {swapped}"
    );
}

#[test]
fn sandwich_bound_monotone_profile() {
    let (_, params) = barrier_trial(10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..2000 {
        let config = random_config(&mut rng, 16, 10.0);
        check_sandwich(&config, &params);
    }
}

#[test]
fn sandwich_bound_nonmonotone_profile() {
    let (_, params) = attractive_trial(6.0);
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for _ in 0..2000 {
        let config = random_config(&mut rng, 16, 6.0);
        check_sandwich(&config, &params);
    }
}

fn check_sandwich(config: &ParticleConfiguration, params: &TrialParams) {
    let m = params.m_sup();
    for p in 0..config.len() {
        let f_p = evaluate_f_p(config, p, params);
        let mut within_b = 0usize;
        let mut within_rt = 0usize;
        for q in 0..p {
            let d = config.distance(p, q);
            if d <= params.b() {
                within_b += 1;
            }
            if d <= params.r_tilde() {
                within_rt += 1;
            }
        }
        let lower = 1.0 - within_b as f64;
        let upper = 1.0 + (m - 1.0) * within_rt as f64;
        assert!(
            f_p >= lower - 1e-12 && f_p <= upper + 1e-12,
            "p = {p}: F_p = {f_p} outside [{lower}, {upper}]"
        );
    }
}

#[test]
fn reduces_to_nearest_neighbor_for_repulsive_potential() {
    let (_, params) = barrier_trial(10.0);
    // monotonicity of the table, sampled finely
    let mut prev = params.f(0.0);
    for i in 1..=2000 {
        let r = params.b() * i as f64 / 2000.0;
        let cur = params.f(r);
        assert!(cur >= prev - 1e-12, "profile not monotone at r = {r}");
        prev = cur;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..2000 {
        let config = clustered_config(&mut rng, 10, 10.0, 2.5);
        for p in 0..config.len() {
            let f_p = evaluate_f_p(&config, p, &params);
            let expected = if p == 0 {
                1.0
            } else {
                let dmin = (0..p)
                    .map(|q| config.distance(p, q))
                    .fold(f64::INFINITY, f64::min);
                params.f(dmin)
            };
            assert!(
                (f_p - expected).abs() <= 1e-12,
                "p = {p}: {f_p} vs nearest-neighbor {expected}"
            );
        }
    }
}

#[test]
fn continuity_across_r_tilde_sphere() {
    let (_, params) = barrier_trial(10.0);
    let rt = params.r_tilde();
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let mut worst = 0.0_f64;
    for _ in 0..300 {
        let mut config = clustered_config(&mut rng, 6, 10.0, 2.0);
        let p = 5;
        let j = rng.random_range(0..p);
        // aim particle j at the R_tilde sphere around particle p
        let (d, norm) = config.displacement(j, p);
        let dir = [d[0] / norm, d[1] / norm, d[2] / norm];
        let xp = config.positions()[p];
        let eps = 1e-12 * rt;
        config.set_position(
            j,
            [
                xp[0] + dir[0] * (rt - eps),
                xp[1] + dir[1] * (rt - eps),
                xp[2] + dir[2] * (rt - eps),
            ],
        );
        let inside = evaluate_f_p(&config, p, &params);
        config.set_position(
            j,
            [
                xp[0] + dir[0] * (rt + eps),
                xp[1] + dir[1] * (rt + eps),
                xp[2] + dir[2] * (rt + eps),
            ],
        );
        let outside = evaluate_f_p(&config, p, &params);
        worst = worst.max((inside - outside).abs());
    }
    assert!(worst <= 1e-9, "directional limits differ by {worst}");
}

#[test]
fn continuity_across_r_tilde_nonmonotone() {
    let (_, params) = attractive_trial(6.0);
    let rt = params.r_tilde();
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let mut worst = 0.0_f64;
    for _ in 0..300 {
        let mut config = clustered_config(&mut rng, 6, 6.0, 1.5);
        let p = 5;
        let j = rng.random_range(0..p);
        let (d, norm) = config.displacement(j, p);
        let dir = [d[0] / norm, d[1] / norm, d[2] / norm];
        let xp = config.positions()[p];
        let eps = 1e-12 * rt;
        let place = |cfg: &mut ParticleConfiguration, r: f64| {
            cfg.set_position(
                j,
                [xp[0] + dir[0] * r, xp[1] + dir[1] * r, xp[2] + dir[2] * r],
            );
        };
        place(&mut config, rt - eps);
        let inside = evaluate_f_p(&config, p, &params);
        place(&mut config, rt + eps);
        let outside = evaluate_f_p(&config, p, &params);
        worst = worst.max((inside - outside).abs());
    }
    assert!(worst <= 1e-9, "directional limits differ by {worst}");
}

#[test]
fn gradient_matches_finite_differences_random() {
    let (_, params) = barrier_trial(10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let delta = 1e-6 * params.r_tilde();
    let mut checked = 0;
    while checked < 200 {
        let config = clustered_config(&mut rng, 8, 10.0, 2.2);
        if near_tie_manifold(&config, &params, delta) {
            continue;
        }
        assert_grad_matches_fd(&config, &params, 1e-5);
        checked += 1;
    }
}

#[test]
fn gradient_matches_finite_differences_all_branches() {
    let (_, params) = attractive_trial(6.0);
    let delta = 1e-6 * params.r_tilde();
    let mut rng = ChaCha8Rng::seed_from_u64(59);
    let mut minus_branch_hits = 0usize;
    let mut switch_region_hits = 0usize;
    let mut checked = 0;
    while checked < 300 {
        let config = clustered_config(&mut rng, 6, 6.0, 1.4);
        if near_tie_manifold(&config, &params, delta) {
            continue;
        }
        for p in 0..config.len() {
            let stats = neighbor_stats(&config, p, &params);
            if stats.theta_minus {
                minus_branch_hits += 1;
                if stats.big_r_p > 2.0 * params.r_tilde() && stats.big_r_p < params.b() {
                    switch_region_hits += 1;
                }
            }
        }
        assert_grad_matches_fd(&config, &params, 1e-5);
        checked += 1;
    }
    assert!(
        minus_branch_hits > 0,
        "test never reached the negative-part branch"
    );
    assert!(
        switch_region_hits > 0,
        "test never reached the T' switch region"
    );
}

#[test]
fn gradient_matches_finite_differences_staged_cluster() {
    // hand-placed configuration pinning the negative-part branch with the
    // switch derivative active: prior within R_tilde at small separation
    // (profile above 1), prior beyond 2 R_tilde but inside b
    let (_, params) = attractive_trial(6.0);
    let rt = params.r_tilde();
    let c = 3.0;
    // particle 2 sees particle 0 at 0.274 (inside the attractive core)
    // and particle 1 at 2.317 (inside the switch window)
    let config = ParticleConfiguration::new(
        vec![
            [c, c, c],
            [c + 0.211 + 2.31, c - 0.148 + 0.1, c + 0.094 - 0.15],
            [c + 0.211, c - 0.148, c + 0.094],
        ],
        6.0,
    );
    let stats = neighbor_stats(&config, 2, &params);
    assert!(stats.theta_minus, "expected the negative-part branch");
    assert!(stats.big_r_p > 2.0 * rt && stats.big_r_p < params.b());
    assert!(!near_tie_manifold(&config, &params, 1e-6 * rt));
    assert_grad_matches_fd(&config, &params, 1e-5);
}

#[test]
fn log_psi_finite_and_bounded_by_sup() {
    let (_, params) = attractive_trial(6.0);
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for _ in 0..200 {
        let config = clustered_config(&mut rng, 12, 6.0, 1.2);
        let lp = log_psi(&config, &params);
        assert!(lp.is_finite());
        assert!(lp <= 12.0 * params.m_sup().ln() + 1e-9);
    }
}

#[test]
fn tie_manifold_filter_detects_staged_ties() {
    let (_, params) = barrier_trial(10.0);
    let rt = params.r_tilde();
    // exact crossing of the R_tilde sphere
    let config = ParticleConfiguration::new(
        vec![[5.0, 5.0, 5.0], [5.0 + rt, 5.0, 5.0]],
        10.0,
    );
    assert!(near_tie_manifold(&config, &params, 1e-6 * rt));
    // equidistant beyond-range priors tie for R_p
    let d = rt * 1.5;
    let config = ParticleConfiguration::new(
        vec![[5.0 - d, 5.0, 5.0], [5.0 + d, 5.0, 5.0], [5.0, 5.0, 5.0]],
        10.0,
    );
    assert!(near_tie_manifold(&config, &params, 1e-6 * rt));
}
