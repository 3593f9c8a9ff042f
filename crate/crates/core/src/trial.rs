//! Generalized Dyson trial state.
//!
//! The trial wavefunction is an ordered product `Phi_N = prod_p F_p` where
//! `F_p` looks at all earlier particles near `x_p` through the truncated
//! zero-energy profile `f`. With purely repulsive interactions `f` is
//! monotone and `F_p` collapses to Dyson's nearest-neighbor factor; with
//! attractive parts `f` need not be monotone, and `F_p` interpolates
//! between the worst in-range profile value and the nearest out-of-range
//! one via the radial switch `T`.
//!
//! Geometry per particle `p` (distances under minimum image, priors `j < p`):
//! `r_p` is the distance of the prior within `R_tilde` minimizing `f`,
//! `R_p` the smallest prior distance beyond `R_tilde` (or `R_tilde` itself
//! when no prior lies beyond).

use crate::potential::RadialPotential;
use crate::scattering::{self, ScatteringError};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TrialError {
    #[error("correlation range b = {b:.6} must be below half the box L/2 = {half_l:.6}")]
    BoxTooSmall { b: f64, half_l: f64 },
    #[error("truncated profile value f_a(b) = {f_at_b:.6} must be positive")]
    InvalidTruncation { f_at_b: f64 },
    #[error("b = {b:.6} must exceed max(2 R0 a, 4a) = {required:.6}")]
    TruncationTooShort { b: f64, required: f64 },
    #[error("gas parameter (4 pi/3) a^3 rho = {0:.6} exceeds 1")]
    GasParameterTooLarge(f64),
    #[error("caller scattering length {expected:.9} disagrees with the solved profile ({got:.9})")]
    ScatteringMismatch { expected: f64, got: f64 },
    #[error("gradient requested at zero amplitude (F_{p} = 0)")]
    GradientAtZeroAmplitude { p: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
}

/// All constants of the trial state plus the tabulated core profile.
///
/// On `[r_match, b]` the profile and its derivative are the exact tail
/// formulas `f = (1 - a/r)/(1 - a/b)`, `f' = (a/r^2)/(1 - a/b)`; inside the
/// support they come from the dense radial solve, interpolated with cubic
/// Hermite patches on `(u, u')` so the profile and its derivative belong
/// to one C^1 function. `T` switches from 1 at `2 R_tilde` to 0 at `b`.
#[derive(Debug, Clone)]
pub struct TrialParams {
    a: f64,
    y_up: f64,
    b: f64,
    r_match: f64,
    r_tilde: f64,
    m_sup: f64,
    core_h: f64,
    /// Scaled reduced solution u / f_a(b) at the core grid nodes.
    core_u: Vec<f64>,
    core_u_prime: Vec<f64>,
}

impl TrialParams {
    /// Build the trial constants for interaction `v` with scattering length
    /// `a` at density `rho` in a periodic box of side `box_l`.
    pub fn build(
        v: &RadialPotential,
        a: f64,
        rho: f64,
        box_l: f64,
    ) -> Result<Self, TrialError> {
        if a == 0.0 {
            return Ok(Self::free());
        }
        let inputs_ok = a.is_finite() && a > 0.0 && rho.is_finite() && rho > 0.0 && box_l.is_finite() && box_l > 0.0;
        if !inputs_ok {
            return Err(TrialError::InvalidInput(format!(
                "need a > 0, rho > 0, box_l > 0, got ({a}, {rho}, {box_l})"
            )));
        }
        let gas = 4.0 * std::f64::consts::PI / 3.0 * a.powi(3) * rho;
        if gas > 1.0 {
            return Err(TrialError::GasParameterTooLarge(gas));
        }
        let y_up = gas.powf(0.25);
        let b = a / y_up;
        let f_at_b = 1.0 - y_up;
        if f_at_b <= 0.0 {
            return Err(TrialError::InvalidTruncation { f_at_b });
        }
        if b >= 0.5 * box_l {
            return Err(TrialError::BoxTooSmall {
                b,
                half_l: 0.5 * box_l,
            });
        }
        let r_match = v.r0();
        let required = (2.0 * r_match).max(4.0 * a);
        if b <= required {
            return Err(TrialError::TruncationTooShort { b, required });
        }
        let r_tilde = r_match.max(2.0 * a);

        let sol = scattering::solve_zero_energy(
            v,
            4.0 * r_match.max(a),
            scattering::DEFAULT_TAIL_STEPS,
        )?;
        if (sol.a - a).abs() > 1e-6 * a.abs().max(1.0) {
            return Err(TrialError::ScatteringMismatch {
                expected: a,
                got: sol.a,
            });
        }

        // Core tables on the solver grid, one node past r_match so the
        // Hermite patches never extrapolate.
        let core_h = sol.grid[1] - sol.grid[0];
        let n_core = (sol.grid.partition_point(|&r| r <= r_match) + 1).min(sol.grid.len());
        let inv_fb = 1.0 / f_at_b;
        let core_u: Vec<f64> = sol.u[..n_core].iter().map(|&u| u * inv_fb).collect();
        let core_u_prime: Vec<f64> =
            sol.u_prime[..n_core].iter().map(|&w| w * inv_fb).collect();

        let m_sup = (1..n_core)
            .map(|i| core_u[i] / sol.grid[i])
            .chain(std::iter::once(core_u_prime[0]))
            .fold(1.0_f64, f64::max);
        let params = Self {
            a,
            y_up,
            b,
            r_match,
            r_tilde,
            m_sup,
            core_h,
            core_u,
            core_u_prime,
        };
        debug_assert!(params.f(params.r_tilde) > 0.5);
        Ok(params)
    }

    /// Degenerate parameters for the free gas: `f` identically 1.
    pub fn free() -> Self {
        Self {
            a: 0.0,
            y_up: 0.0,
            b: 0.0,
            r_match: 0.0,
            r_tilde: 0.0,
            m_sup: 1.0,
            core_h: 1.0,
            core_u: Vec::new(),
            core_u_prime: Vec::new(),
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn y_up(&self) -> f64 {
        self.y_up
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn r_tilde(&self) -> f64 {
        self.r_tilde
    }

    pub fn r_match(&self) -> f64 {
        self.r_match
    }

    /// Sup norm of the profile.
    pub fn m_sup(&self) -> f64 {
        self.m_sup
    }

    // Cubic Hermite evaluation of the scaled u and its derivative.
    fn core_u_at(&self, r: f64) -> (f64, f64) {
        let x = r / self.core_h;
        let i = (x as usize).min(self.core_u.len().saturating_sub(2));
        let t = x - i as f64;
        let h = self.core_h;
        let (u0, u1) = (self.core_u[i], self.core_u[i + 1]);
        let (m0, m1) = (self.core_u_prime[i] * h, self.core_u_prime[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let value = (2.0 * t3 - 3.0 * t2 + 1.0) * u0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * u1
            + (t3 - t2) * m1;
        let deriv = ((6.0 * t2 - 6.0 * t) * (u0 - u1)
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (3.0 * t2 - 2.0 * t) * m1)
            / h;
        (value, deriv)
    }

    /// Truncated scattering profile `f`.
    pub fn f(&self, r: f64) -> f64 {
        if r >= self.b {
            1.0
        } else if r >= self.r_match {
            (1.0 - self.a / r) / (1.0 - self.a / self.b)
        } else if r == 0.0 {
            self.core_u_prime[0]
        } else {
            self.core_u_at(r).0 / r
        }
    }

    /// Radial derivative of `f` (0 beyond `b`).
    pub fn f_prime(&self, r: f64) -> f64 {
        if r >= self.b {
            0.0
        } else if r >= self.r_match {
            (self.a / (r * r)) / (1.0 - self.a / self.b)
        } else if r == 0.0 {
            0.0
        } else {
            let (u, du) = self.core_u_at(r);
            (du * r - u) / (r * r)
        }
    }

    /// Radial switch: 1 up to `2 R_tilde`, 0 from `b` on.
    pub fn t(&self, r: f64) -> f64 {
        if r <= 2.0 * self.r_tilde {
            1.0
        } else if r >= self.b {
            0.0
        } else {
            (1.0 / r - 1.0 / self.b) / (0.5 / self.r_tilde - 1.0 / self.b)
        }
    }

    /// Derivative of `T`, nonzero only on the open interval
    /// `(2 R_tilde, b)`; the endpoint jumps are irrelevant because `T'`
    /// only ever multiplies terms supported there.
    pub fn t_prime(&self, r: f64) -> f64 {
        if r > 2.0 * self.r_tilde && r < self.b {
            (-1.0 / (r * r)) / (0.5 / self.r_tilde - 1.0 / self.b)
        } else {
            0.0
        }
    }

    /// Error integrals `K = 4 pi \int_0^b |f'| r^2 dr` and
    /// `L = 4 pi \int_{2 R_tilde}^b |T'| r^2 dr` by trapezoidal quadrature.
    pub fn error_integrals(&self) -> (f64, f64) {
        if self.b == 0.0 {
            return (0.0, 0.0);
        }
        let four_pi = 4.0 * std::f64::consts::PI;
        let n = 20_000;
        let h = self.b / n as f64;
        let mut k_int = 0.0;
        let mut prev = 0.0;
        for i in 1..=n {
            let r = i as f64 * h;
            let cur = self.f_prime(r).abs() * r * r;
            k_int += 0.5 * (prev + cur) * h;
            prev = cur;
        }
        let lo = 2.0 * self.r_tilde;
        let mut l_int = 0.0;
        if self.b > lo {
            let h = (self.b - lo) / n as f64;
            // integrand is constant on the open interval; midpoints dodge
            // the endpoint convention
            for i in 0..n {
                let r = lo + (i as f64 + 0.5) * h;
                l_int += self.t_prime(r).abs() * r * r * h;
            }
        }
        (four_pi * k_int, four_pi * l_int)
    }
}

/// N particle positions in a periodic cubic box of side `box_l`, all
/// wrapped into `[0, L)`. Pair separations use minimum image, which is
/// single-valued for correlations of range below `L/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleConfiguration {
    positions: Vec<[f64; 3]>,
    box_l: f64,
}

fn wrap(x: f64, l: f64) -> f64 {
    let y = x % l;
    if y < 0.0 {
        y + l
    } else {
        y
    }
}

impl ParticleConfiguration {
    pub fn new(positions: Vec<[f64; 3]>, box_l: f64) -> Self {
        assert!(box_l > 0.0, "box side must be positive");
        let positions = positions
            .into_iter()
            .map(|p| [wrap(p[0], box_l), wrap(p[1], box_l), wrap(p[2], box_l)])
            .collect();
        Self { positions, box_l }
    }

    /// Deterministic start: first N sites of a simple cubic lattice.
    pub fn lattice(n: usize, box_l: f64) -> Self {
        let m = (n as f64).cbrt().ceil() as usize;
        let spacing = box_l / m as f64;
        let mut positions = Vec::with_capacity(n);
        'fill: for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    if positions.len() == n {
                        break 'fill;
                    }
                    positions.push([
                        (i as f64 + 0.5) * spacing,
                        (j as f64 + 0.5) * spacing,
                        (k as f64 + 0.5) * spacing,
                    ]);
                }
            }
        }
        Self::new(positions, box_l)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn box_l(&self) -> f64 {
        self.box_l
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn set_position(&mut self, i: usize, p: [f64; 3]) {
        self.positions[i] = [
            wrap(p[0], self.box_l),
            wrap(p[1], self.box_l),
            wrap(p[2], self.box_l),
        ];
    }

    pub fn push_position(&mut self, p: [f64; 3]) {
        self.positions.push([
            wrap(p[0], self.box_l),
            wrap(p[1], self.box_l),
            wrap(p[2], self.box_l),
        ]);
    }

    pub fn pop_position(&mut self) {
        self.positions.pop();
    }

    /// Minimum-image displacement `x_i - x_j` and its norm.
    pub fn displacement(&self, i: usize, j: usize) -> ([f64; 3], f64) {
        let a = self.positions[i];
        let b = self.positions[j];
        let l = self.box_l;
        let mut d = [0.0; 3];
        for c in 0..3 {
            let mut x = a[c] - b[c];
            if x > 0.5 * l {
                x -= l;
            } else if x < -0.5 * l {
                x += l;
            }
            d[c] = x;
        }
        let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        (d, norm)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.displacement(i, j).1
    }
}

/// Which branch of `F_p` is active for particle `p`, with the argmin
/// particles and distances that define it.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborStats {
    pub p: usize,
    /// Distance of the in-range prior minimizing `f`; ties broken by
    /// smaller distance, then smaller index.
    pub r_p: Option<f64>,
    /// `R_tilde` when every prior is in range, otherwise the smallest
    /// prior distance beyond `R_tilde`.
    pub big_r_p: f64,
    pub i_p: Option<usize>,
    pub j_p: Option<usize>,
    pub theta_in: bool,
    pub theta_out: bool,
    pub theta_plus: bool,
    pub theta_minus: bool,
}

/// Scan the priors `j < p` and classify the branch.
pub fn neighbor_stats(
    config: &ParticleConfiguration,
    p: usize,
    params: &TrialParams,
) -> NeighborStats {
    let r_tilde = params.r_tilde();
    let mut best_in: Option<(f64, f64, usize)> = None; // (f value, distance, index)
    let mut best_out: Option<(f64, usize)> = None;
    for j in 0..p {
        let d = config.distance(p, j);
        if d <= r_tilde {
            let fd = params.f(d);
            let cand = (fd, d, j);
            best_in = Some(match best_in {
                None => cand,
                Some(cur) => {
                    if cand < cur {
                        cand
                    } else {
                        cur
                    }
                }
            });
        } else {
            let cand = (d, j);
            best_out = Some(match best_out {
                None => cand,
                Some(cur) => {
                    if cand < cur {
                        cand
                    } else {
                        cur
                    }
                }
            });
        }
    }
    if p == 0 {
        // no priors: both indicator products are empty, F_1 = 1
        return NeighborStats {
            p,
            r_p: None,
            big_r_p: r_tilde,
            i_p: None,
            j_p: None,
            theta_in: true,
            theta_out: true,
            theta_plus: false,
            theta_minus: false,
        };
    }
    let theta_in = best_out.is_none();
    let theta_out = best_in.is_none();
    let (r_p, i_p) = match best_in {
        Some((_, d, j)) => (Some(d), Some(j)),
        None => (None, None),
    };
    let (big_r_p, j_p) = match best_out {
        Some((d, j)) => (d, Some(j)),
        None => (r_tilde, None),
    };
    let (theta_plus, theta_minus) = if !theta_in && !theta_out {
        let gap = params.f(big_r_p) - params.f(r_p.unwrap());
        (gap >= 0.0, gap < 0.0)
    } else {
        (false, false)
    };
    NeighborStats {
        p,
        r_p,
        big_r_p,
        i_p,
        j_p,
        theta_in,
        theta_out,
        theta_plus,
        theta_minus,
    }
}

/// `F_p` from precomputed stats.
pub fn f_p_from_stats(stats: &NeighborStats, params: &TrialParams) -> f64 {
    if stats.p == 0 {
        return 1.0;
    }
    if stats.theta_in {
        params.f(stats.r_p.unwrap())
    } else if stats.theta_out {
        params.f(stats.big_r_p)
    } else {
        let fr = params.f(stats.r_p.unwrap());
        let gap = params.f(stats.big_r_p) - fr;
        fr + params.t(stats.big_r_p) * gap.min(0.0)
    }
}

/// The per-particle factor `F_p`.
pub fn evaluate_f_p(config: &ParticleConfiguration, p: usize, params: &TrialParams) -> f64 {
    f_p_from_stats(&neighbor_stats(config, p, params), params)
}

/// `log |Phi_N| = sum_p log F_p`; negative infinity when any factor
/// vanishes (zero-amplitude configurations carry zero sampling weight).
pub fn log_psi(config: &ParticleConfiguration, params: &TrialParams) -> f64 {
    log_psi_from(config, params, 0)
}

/// Partial sum `sum_{q >= k} log F_q`, the only part of `log Psi` that a
/// move of particle k can change.
pub(crate) fn log_psi_from(
    config: &ParticleConfiguration,
    params: &TrialParams,
    k: usize,
) -> f64 {
    let mut total = 0.0;
    for q in k..config.len() {
        let f = evaluate_f_p(config, q, params);
        if f <= 0.0 {
            return f64::NEG_INFINITY;
        }
        total += f.ln();
    }
    total
}

fn unit(d: [f64; 3], norm: f64) -> [f64; 3] {
    [d[0] / norm, d[1] / norm, d[2] / norm]
}

/// Gradient of `log Psi` for every particle, from the closed-form branch
/// gradients of `F_p`. Only the slots `p`, `i_p`, `j_p` of each factor are
/// touched; everything else is exactly zero.
pub fn grad_log_psi(
    config: &ParticleConfiguration,
    params: &TrialParams,
) -> Result<Vec<[f64; 3]>, TrialError> {
    let n = config.len();
    let mut grad = vec![[0.0; 3]; n];
    for p in 1..n {
        let stats = neighbor_stats(config, p, params);
        let f_p = f_p_from_stats(&stats, params);
        if f_p <= 0.0 {
            return Err(TrialError::GradientAtZeroAmplitude { p });
        }
        let inv_f = 1.0 / f_p;

        let mut grad_i = [0.0; 3];
        let mut grad_j = [0.0; 3];
        if let (Some(i_p), Some(r_p)) = (stats.i_p, stats.r_p) {
            // coefficient of -n_r f'(r_p): Theta_in + Theta_-(1 - T) + Theta_+
            let coeff = if stats.theta_in || stats.theta_plus {
                1.0
            } else if stats.theta_minus {
                1.0 - params.t(stats.big_r_p)
            } else {
                0.0
            };
            if coeff != 0.0 && r_p > 0.0 {
                let (d, norm) = config.displacement(p, i_p);
                let nr = unit(d, norm);
                let mag = -params.f_prime(r_p) * coeff;
                grad_i = [nr[0] * mag, nr[1] * mag, nr[2] * mag];
            }
        }
        if let Some(j_p) = stats.j_p {
            let r = stats.big_r_p;
            let coeff = if stats.theta_out {
                params.f_prime(r)
            } else if stats.theta_minus {
                params.t(r) * params.f_prime(r)
                    + params.t_prime(r) * (params.f(r) - params.f(stats.r_p.unwrap()))
            } else {
                0.0
            };
            if coeff != 0.0 {
                let (d, norm) = config.displacement(p, j_p);
                let nr = unit(d, norm);
                grad_j = [-nr[0] * coeff, -nr[1] * coeff, -nr[2] * coeff];
            }
        }

        for c in 0..3 {
            grad[p][c] -= (grad_i[c] + grad_j[c]) * inv_f;
        }
        if let Some(i_p) = stats.i_p {
            for c in 0..3 {
                grad[i_p][c] += grad_i[c] * inv_f;
            }
        }
        if let Some(j_p) = stats.j_p {
            for c in 0..3 {
                grad[j_p][c] += grad_j[c] * inv_f;
            }
        }
    }
    Ok(grad)
}

/// True when the configuration sits within `delta` of a branch switch or
/// argmin tie, where one-sided gradients disagree with central
/// differences. Used to filter finite-difference checks.
pub fn near_tie_manifold(
    config: &ParticleConfiguration,
    params: &TrialParams,
    delta: f64,
) -> bool {
    let r_tilde = params.r_tilde();
    let n = config.len();
    for p in 1..n {
        for j in 0..p {
            let d = config.distance(p, j);
            if d < delta
                || (d - r_tilde).abs() < delta
                || (d - 2.0 * r_tilde).abs() < delta
                || (d - params.b()).abs() < delta
            {
                return true;
            }
        }
        let stats = neighbor_stats(config, p, params);
        if let (Some(i_p), Some(r_p)) = (stats.i_p, stats.r_p) {
            let f_best = params.f(r_p);
            for j in 0..p {
                if j == i_p {
                    continue;
                }
                let d = config.distance(p, j);
                if d <= r_tilde && (params.f(d) - f_best).abs() < 1e-9 * params.m_sup() {
                    return true;
                }
            }
        }
        if let Some(j_p) = stats.j_p {
            for j in 0..p {
                if j == j_p {
                    continue;
                }
                let d = config.distance(p, j);
                if d > r_tilde && (d - stats.big_r_p).abs() < delta {
                    return true;
                }
            }
        }
        if !stats.theta_in && !stats.theta_out {
            let gap = params.f(stats.big_r_p) - params.f(stats.r_p.unwrap());
            if gap.abs() < 1e-9 * params.m_sup() {
                return true;
            }
        }
    }
    false
}
