//! Metropolis sampling of the trial state and the variational energy.
//!
//! The estimator uses the gradient form of the Rayleigh quotient: under the
//! weight `|Phi|^2`, averaging `sum_i |grad_i log Phi|^2 + sum_{i<j} v(r_ij)`
//! gives `<Phi|H|Phi> / ||Phi||^2`. The trial factors are only piecewise
//! smooth, so no second derivatives ever appear.

use crate::potential::RadialPotential;
use crate::trial::{self, ParticleConfiguration, TrialError, TrialParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum VmcError {
    #[error("non-finite sample in the estimator stream")]
    NonFiniteSample,
    #[error("need at least {need} particles, got {got}")]
    TooFewParticles { need: usize, got: usize },
    #[error(transparent)]
    Trial(#[from] TrialError),
}

/// Monte Carlo mean with blocking error bars.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub n_burn_in: usize,
    pub acceptance_rate: f64,
    /// mean / (4 pi a rho N)
    pub ratio_to_bogoliubov: f64,
}

/// Norm-ratio probe result: `||Phi_N||^2 / (||Phi_{N-1}||^2 Lambda)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormRatioEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

/// Chain controls. The proposal step is tuned toward 50% acceptance during
/// burn-in and frozen afterwards, so production sweeps satisfy detailed
/// balance with a fixed kernel.
#[derive(Debug, Clone, Copy)]
pub struct ChainSettings {
    pub seed: u64,
    pub n_samples: usize,
    pub n_burn_in: usize,
}

impl ChainSettings {
    pub fn new(seed: u64, n_samples: usize, n_burn_in: usize) -> Self {
        Self {
            seed,
            n_samples,
            n_burn_in,
        }
    }
}

/// `sum_i |grad_i log Phi|^2 + sum_{i<j} v(r_ij)` for one configuration.
pub fn local_variational_integrand(
    config: &ParticleConfiguration,
    params: &TrialParams,
    v: &RadialPotential,
) -> Result<f64, TrialError> {
    let grad = trial::grad_log_psi(config, params)?;
    let mut total = 0.0;
    for g in &grad {
        total += g[0] * g[0] + g[1] * g[1] + g[2] * g[2];
    }
    let n = config.len();
    for i in 0..n {
        for j in 0..i {
            let d = config.distance(i, j);
            if d < v.r0() {
                total += v.evaluate(d);
            }
        }
    }
    Ok(total)
}

/// Sequential-sweep Metropolis sampler of `|Phi_N|^2` with single-particle
/// cube proposals. Deterministic for a given seed: every proposal draws
/// exactly four uniforms regardless of outcome.
pub struct MetropolisChain<'a> {
    params: &'a TrialParams,
    config: ParticleConfiguration,
    rng: ChaCha8Rng,
    step: f64,
    accepted: u64,
    attempted: u64,
}

impl<'a> MetropolisChain<'a> {
    pub fn new(params: &'a TrialParams, n: usize, box_l: f64, seed: u64) -> Self {
        // half a mean interparticle distance to start
        let step = 0.5 * box_l / (n as f64).cbrt();
        Self::with_initial_step(params, n, box_l, seed, step)
    }

    pub fn with_initial_step(
        params: &'a TrialParams,
        n: usize,
        box_l: f64,
        seed: u64,
        step: f64,
    ) -> Self {
        assert!(step > 0.0, "proposal step must be positive");
        Self {
            params,
            config: ParticleConfiguration::lattice(n, box_l),
            rng: ChaCha8Rng::seed_from_u64(seed),
            step,
            accepted: 0,
            attempted: 0,
        }
    }

    pub fn config(&self) -> &ParticleConfiguration {
        &self.config
    }

    pub fn step_size(&self) -> f64 {
        self.step
    }

    pub fn reset_counters(&mut self) {
        self.accepted = 0;
        self.attempted = 0;
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.attempted == 0 {
            0.0
        } else {
            self.accepted as f64 / self.attempted as f64
        }
    }

    /// One sweep: a single-particle proposal for each particle in order.
    pub fn sweep(&mut self) {
        let n = self.config.len();
        for k in 0..n {
            let old = self.config.positions()[k];
            let dx = self.rng.random_range(-0.5..0.5) * self.step;
            let dy = self.rng.random_range(-0.5..0.5) * self.step;
            let dz = self.rng.random_range(-0.5..0.5) * self.step;
            let accept_u: f64 = self.rng.random_range(0.0..1.0);

            // only factors F_q with q >= k depend on x_k
            let tail_old = trial::log_psi_from(&self.config, self.params, k);
            self.config
                .set_position(k, [old[0] + dx, old[1] + dy, old[2] + dz]);
            let tail_new = trial::log_psi_from(&self.config, self.params, k);

            self.attempted += 1;
            let accept = if tail_new == f64::NEG_INFINITY {
                false
            } else if tail_new >= tail_old {
                true
            } else {
                accept_u < (2.0 * (tail_new - tail_old)).exp()
            };
            if accept {
                self.accepted += 1;
            } else {
                self.config.set_position(k, old);
            }
        }
    }

    /// Burn-in with step tuning toward 50% acceptance, frozen at the end.
    pub fn burn_in(&mut self, n_sweeps: usize) {
        let window = 50;
        let mut window_start_accepted = self.accepted;
        let mut window_start_attempted = self.attempted;
        for s in 0..n_sweeps {
            self.sweep();
            if (s + 1) % window == 0 {
                let acc = (self.accepted - window_start_accepted) as f64
                    / (self.attempted - window_start_attempted).max(1) as f64;
                if acc > 0.55 {
                    self.step = (self.step * 1.1).min(0.45 * self.config.box_l());
                } else if acc < 0.45 {
                    self.step *= 0.9;
                }
                window_start_accepted = self.accepted;
                window_start_attempted = self.attempted;
            }
        }
        self.reset_counters();
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Blocking analysis: recursively pair-average the series and report the
/// most conservative (plateau) standard error across block levels.
#[derive(Debug, Clone)]
pub struct BlockingResult {
    pub mean: f64,
    pub stderr: f64,
    /// (block size, stderr estimate) per level, smallest block first.
    pub levels: Vec<(usize, f64)>,
}

pub fn blocking_analysis(samples: &[f64]) -> BlockingResult {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n.max(1) as f64;
    let mut levels = Vec::new();
    let mut data: Vec<f64> = samples.to_vec();
    let mut block = 1usize;
    loop {
        let m = data.len();
        if m < 16 {
            break;
        }
        let mu = data.iter().sum::<f64>() / m as f64;
        let var = data.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (m as f64 - 1.0);
        levels.push((block, (var / m as f64).sqrt()));
        let mut next = Vec::with_capacity(m / 2);
        for pair in data.chunks_exact(2) {
            next.push(0.5 * (pair[0] + pair[1]));
        }
        data = next;
        block *= 2;
    }
    let stderr = levels
        .iter()
        .map(|&(_, s)| s)
        .fold(0.0_f64, f64::max);
    BlockingResult {
        mean,
        stderr,
        levels,
    }
}

/// Inverse-variance weighted merge of independent estimates.
pub fn combine_inverse_variance(estimates: &[(f64, f64)]) -> (f64, f64) {
    let mut wsum = 0.0;
    let mut msum = 0.0;
    for &(m, s) in estimates {
        let w = 1.0 / (s * s).max(1e-300);
        wsum += w;
        msum += w * m;
    }
    (msum / wsum, (1.0 / wsum).sqrt())
}

/// Run one Metropolis chain and average the variational integrand.
pub fn run_energy_chain(
    v: &RadialPotential,
    params: &TrialParams,
    n: usize,
    box_l: f64,
    rho: f64,
    settings: ChainSettings,
) -> Result<EnergyEstimate, VmcError> {
    if n < 1 {
        return Err(VmcError::TooFewParticles { need: 1, got: n });
    }
    let mut chain = MetropolisChain::new(params, n, box_l, settings.seed);
    chain.burn_in(settings.n_burn_in);
    let mut samples = Vec::with_capacity(settings.n_samples);
    for _ in 0..settings.n_samples {
        chain.sweep();
        let e = local_variational_integrand(chain.config(), params, v)?;
        if !e.is_finite() {
            return Err(VmcError::NonFiniteSample);
        }
        samples.push(e);
    }
    let blocking = blocking_analysis(&samples);
    let bogoliubov = 4.0 * std::f64::consts::PI * params.a() * rho * n as f64;
    Ok(EnergyEstimate {
        mean: blocking.mean,
        stderr: blocking.stderr,
        n_samples: settings.n_samples,
        n_burn_in: settings.n_burn_in,
        acceptance_rate: chain.acceptance_rate(),
        ratio_to_bogoliubov: if bogoliubov != 0.0 {
            blocking.mean / bogoliubov
        } else {
            f64::NAN
        },
    })
}

/// Variational upper-bound run: box side from `L = (N / rho)^{1/3}`, trial
/// parameters built in place.
pub fn estimate_upper_bound(
    v: &RadialPotential,
    a: f64,
    rho: f64,
    n: usize,
    settings: ChainSettings,
) -> Result<EnergyEstimate, VmcError> {
    if n < 2 {
        return Err(VmcError::TooFewParticles { need: 2, got: n });
    }
    let box_l = (n as f64 / rho).cbrt();
    let params = TrialParams::build(v, a, rho, box_l)?;
    run_energy_chain(v, &params, n, box_l, rho, settings)
}

/// Estimate `||Phi_N||^2 / (||Phi_{N-1}||^2 Lambda)` by sampling the first
/// `N - 1` particles from `|Phi_{N-1}|^2` and averaging `F_N^2` over a
/// uniformly placed last particle. Valid because `Phi_N = Phi_{N-1} F_N`.
pub fn norm_ratio_probe(
    params: &TrialParams,
    n: usize,
    box_l: f64,
    settings: ChainSettings,
) -> Result<NormRatioEstimate, VmcError> {
    if n < 2 {
        return Err(VmcError::TooFewParticles { need: 2, got: n });
    }
    let mut chain = MetropolisChain::new(params, n - 1, box_l, settings.seed);
    chain.burn_in(settings.n_burn_in);
    let mut samples = Vec::with_capacity(settings.n_samples);
    for _ in 0..settings.n_samples {
        chain.sweep();
        let x = chain.rng_mut().random_range(0.0..1.0) * box_l;
        let y = chain.rng_mut().random_range(0.0..1.0) * box_l;
        let z = chain.rng_mut().random_range(0.0..1.0) * box_l;
        let mut config = chain.config().clone();
        config.push_position([x, y, z]);
        let f_n = trial::evaluate_f_p(&config, n - 1, params);
        samples.push(f_n * f_n);
    }
    let blocking = blocking_analysis(&samples);
    Ok(NormRatioEstimate {
        mean: blocking.mean,
        stderr: blocking.stderr,
        n_samples: settings.n_samples,
    })
}
