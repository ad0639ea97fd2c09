//! Potential theory on the torus: the pair potential behind the contour
//! integrand, its Fourier coefficients in closed form and by independent
//! quadrature, the mean of log|g| on the contour circle, a Metropolis
//! sampler for the associated log-gas, and the empirical equidistribution
//! limit.
//!
//! The n-torus integrand's pairwise interaction, written on z = e^{i theta},
//! is exp(-sum_{j != k} f(theta_k - theta_j)) with the pair potential
//!
//!   f(theta) = -log( |e^{i theta} - 1| |e^{i theta} - q1 q2|
//!                    / (|e^{i theta} - q1| |e^{i theta} - q2|) ),
//!
//! continuous, bounded below, with a single +infinity at theta = 0. Writing
//! q_j = |q_j| e^{i tau_j} and g_sigma(theta) = log|e^{i theta} - sigma|,
//!
//!   f = -g_1(theta) - g_{|q1 q2|}(theta - tau1 - tau2)
//!       + g_{|q1|}(theta - tau1) + g_{|q2|}(theta - tau2),
//!
//! whose Fourier coefficients are classical: c_k(g_sigma) =
//! -min{sigma^|k|, sigma^-|k|}/(2|k|) for k != 0 and max{0, log sigma} at
//! k = 0. Hence c_0(f) = 0 and, for k != 0,
//!
//!   c_k(f) = (1/(2|k|)) (1 + e^{-ik(tau1+tau2)} |q1 q2|^{|k|}
//!                          - e^{-ik tau1} |q1|^{|k|} - e^{-ik tau2} |q2|^{|k|}),
//!
//! real and strictly positive in the supported regimes (q1 = conj(q2), or
//! both real in the unit interval — where the phase factors collapse and
//! c_k(f) = (1-|q1|^{|k|})(1-|q2|^{|k|})/(2|k|)). Positivity of c_k drives
//! everything downstream: the gas with density proportional to
//! exp(-sum_{j != k} f) equidistributes, the minimum energy I_0 is 0, is
//! attained only by the uniform measure, and for continuous h
//!
//!   (1/n) log E_n[ e^{sum_j h(theta_j)} ] -> (1/2 pi) integral of h
//!
//! as n grows — the mechanism behind the radius bound, which this module
//! verifies by Markov-chain Monte Carlo.

use crate::nekrasov::MultiplicativeParams;
use crate::{Error, Result};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// The pair potential as four shifted log-distance terms, cached in polar
/// form so a single evaluation costs four cosines and four logarithms.
#[derive(Clone, Copy, Debug)]
pub struct PairPotential {
    /// (sigma, tau, sign): signed terms sign * log|e^{i(theta-tau)} - sigma|.
    terms: [(f64, f64, f64); 4],
}

impl PairPotential {
    pub fn new(q1: Complex64, q2: Complex64) -> Self {
        let q12 = q1 * q2;
        PairPotential {
            terms: [
                (1.0, 0.0, -1.0),
                (q12.norm(), q12.arg(), -1.0),
                (q1.norm(), q1.arg(), 1.0),
                (q2.norm(), q2.arg(), 1.0),
            ],
        }
    }

    /// f(theta); +infinity exactly at theta = 0 (mod 2 pi).
    pub fn eval(&self, theta: f64) -> f64 {
        let mut v = 0.0;
        for (sigma, tau, sign) in self.terms {
            // log|e^{i(theta-tau)} - sigma| = log(1 + sigma^2
            //   - 2 sigma cos(theta-tau)) / 2; the sigma = 0 term vanishes.
            v += sign * 0.5 * (1.0 + sigma * sigma - 2.0 * sigma * (theta - tau).cos()).ln();
        }
        v
    }
}

/// The pair potential f(theta) for the pair (q1, q2); +infinity at 0.
pub fn f_potential(theta: f64, q1: Complex64, q2: Complex64) -> f64 {
    PairPotential::new(q1, q2).eval(theta)
}

/// Closed-form Fourier coefficient of g_sigma(theta) = log|e^{i theta} -
/// sigma|: -min{sigma^|k|, sigma^-|k|}/(2|k|) for k != 0, max{0, log sigma}
/// for k = 0.
pub fn fourier_g(sigma: f64, k: i64) -> f64 {
    assert!(sigma > 0.0, "sigma must be positive");
    if k == 0 {
        0f64.max(sigma.ln())
    } else {
        let ak = k.unsigned_abs() as i32;
        -sigma.powi(ak).min(sigma.powi(-ak)) / (2.0 * ak as f64)
    }
}

/// Tanh-sinh quadrature of `f` over [a, b]: handles integrable endpoint
/// singularities (here logarithmic ones) at spectral accuracy.
fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let h = 7.6 / 760.0;
    let mut sum = 0.0;
    for i in -760i64..=760 {
        let t = i as f64 * h;
        let s = FRAC_PI_2 * t.sinh();
        let w = half * FRAC_PI_2 * t.cosh() / s.cosh().powi(2);
        if !w.is_finite() || w < 1e-300 {
            continue;
        }
        let x = mid + half * s.tanh();
        if x <= a || x >= b {
            continue;
        }
        sum += w * f(x);
    }
    sum * h
}

/// Fourier coefficient of g_sigma by direct quadrature: an independent
/// oracle for [`fourier_g`]. Uses the midpoint rule for sigma != 1 (the
/// integrand is analytic on the torus) and tanh-sinh on the half-period for
/// sigma = 1, where log|e^{i theta} - 1| = log(2 sin(theta/2)) has an
/// integrable singularity at 0.
pub fn fourier_g_quadrature(sigma: f64, k: i64, m: u32) -> f64 {
    assert!(sigma > 0.0, "sigma must be positive");
    if (sigma - 1.0).abs() > 1e-12 {
        let mut sum = 0.0;
        for j in 0..m {
            let theta = TAU * (j as f64 + 0.5) / m as f64;
            let g = (1.0 + sigma * sigma - 2.0 * sigma * theta.cos()).ln() * 0.5;
            sum += g * (k as f64 * theta).cos();
        }
        sum / m as f64
    } else {
        // Even integrand: c_k = (1/pi) * integral over (0, pi) of
        // log(2 sin(theta/2)) cos(k theta).
        tanh_sinh(|theta| (2.0 * (theta / 2.0).sin()).ln() * (k as f64 * theta).cos(), 0.0, PI)
            / PI
    }
}

/// Closed-form Fourier coefficient of the pair potential:
/// c_0(f) = 0 and for k != 0
///
///   c_k(f) = (1/(2|k|)) (1 + e^{-ik(tau1+tau2)} |q1 q2|^{|k|}
///                          - e^{-ik tau1} |q1|^{|k|} - e^{-ik tau2} |q2|^{|k|}).
///
/// In the supported regimes tau1 + tau2 = 0 and the value is real positive;
/// the general phase on the |q1 q2| term keeps f real (c_{-k} = conj(c_k))
/// for arbitrary complex q's as well.
pub fn fourier_f(k: i64, q1: Complex64, q2: Complex64) -> Complex64 {
    assert!(q1.norm() < 1.0 && q2.norm() < 1.0, "|q_i| < 1 required");
    if k == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let ak = k.unsigned_abs() as i32;
    let kf = k as f64;
    let q12 = q1 * q2;
    let one = Complex64::new(1.0, 0.0);
    let term = |q: Complex64| Complex64::from_polar(q.norm().powi(ak), -kf * q.arg());
    (one + term(q12) - term(q1) - term(q2)) / (2.0 * ak as f64)
}

/// Fourier coefficient of f by quadrature, the oracle for [`fourier_f`].
/// The pole at 0 is handled by the split f = (f + g_1) - g_1: the first
/// part, -log|e^{i theta} - q1 q2| + log|e^{i theta} - q1| +
/// log|e^{i theta} - q2|, is analytic on the torus and integrated by the
/// midpoint rule; the singular -g_1 part goes through tanh-sinh.
pub fn fourier_f_quadrature(k: i64, q1: Complex64, q2: Complex64, m: u32) -> Complex64 {
    let q12 = q1 * q2;
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..m {
        let theta = TAU * (j as f64 + 0.5) / m as f64;
        let e = Complex64::from_polar(1.0, theta);
        let smooth = -(e - q12).norm().ln() + (e - q1).norm().ln() + (e - q2).norm().ln();
        sum += Complex64::from_polar(1.0, -(k as f64) * theta).scale(smooth);
    }
    let singular = if k == 0 {
        tanh_sinh(|theta| (2.0 * (theta / 2.0).sin()).ln(), 0.0, PI) / PI
    } else {
        fourier_g_quadrature(1.0, k, m)
    };
    sum / m as f64 - Complex64::new(singular, 0.0)
}

/// Closed form of the circle mean (1/2 pi) * integral of log|g(rho, theta)|,
/// where g is the one-particle factor of the contour integrand: the u-part
/// averages to zero on an admissible circle and only the matter part
/// survives,
///
///   log_g_mean = sum_m max{ log|p_m|, log rho }.
pub fn log_g_mean(rho: f64, mp: &MultiplicativeParams) -> Result<f64> {
    let umax = mp.u.iter().map(|u| u.norm()).fold(0.0, f64::max);
    let umin = mp.u.iter().map(|u| u.norm()).fold(f64::INFINITY, f64::min);
    let qmax = mp.q1.norm().max(mp.q2.norm());
    if rho <= umax || (qmax > 0.0 && rho >= umin / qmax) {
        return Err(Error::Inadmissible(format!(
            "rho = {rho} outside the admissible annulus ({umax}, {})",
            if qmax > 0.0 { umin / qmax } else { f64::INFINITY }
        )));
    }
    Ok(mp.p.iter().map(|p| p.norm().ln().max(rho.ln())).sum())
}

/// Midpoint quadrature of the circle mean of log|g|: the oracle for
/// [`log_g_mean`], including the u-dependent factors whose mean cancels.
pub fn log_g_mean_quadrature(rho: f64, mp: &MultiplicativeParams, m: u32) -> Result<f64> {
    log_g_mean(rho, mp)?; // same admissibility check
    let mut sum = 0.0;
    for j in 0..m {
        let theta = TAU * (j as f64 + 0.5) / m as f64;
        let z = Complex64::from_polar(rho, theta);
        let mut lg = 0.0;
        for &pm in &mp.p {
            lg += (z - pm).norm().ln();
        }
        for &ua in &mp.u {
            lg += (ua * z).norm().ln()
                - (z - ua).norm().ln()
                - (mp.q1 * mp.q2 * z - ua).norm().ln();
        }
        sum += lg;
    }
    Ok(sum / m as f64)
}

/// Configuration of one log-gas Metropolis chain. The chain performs
/// `steps` recording epochs separated by 2n full sweeps of single-site
/// proposals (width `proposal_width`, uniform); the first `burn_in` epochs
/// are discarded.
#[derive(Clone, Debug)]
pub struct LogGasConfig {
    pub n: usize,
    pub q1: Complex64,
    pub q2: Complex64,
    pub steps: u32,
    pub burn_in: u32,
    pub seed: u64,
    pub proposal_width: f64,
}

impl LogGasConfig {
    pub fn new(n: usize, q1: Complex64, q2: Complex64, seed: u64) -> Self {
        LogGasConfig { n, q1, q2, steps: 160, burn_in: 32, seed, proposal_width: PI / 4.0 }
    }
}

/// A sampled chain: recorded configurations and the overall acceptance rate.
#[derive(Clone, Debug)]
pub struct GasChain {
    pub samples: Vec<Vec<f64>>,
    pub acceptance: f64,
}

fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t == TAU {
        0.0
    } else {
        t
    }
}

/// Energy change of moving site j to `new`: sum over k != j of both
/// orientations of the pair potential. +infinity (certain rejection) when
/// the move lands on another particle — the density vanishes there.
pub(crate) fn delta_energy(pot: &PairPotential, thetas: &[f64], j: usize, new: f64) -> f64 {
    let old = thetas[j];
    let mut delta = 0.0;
    for (k, &tk) in thetas.iter().enumerate() {
        if k == j {
            continue;
        }
        delta += pot.eval(new - tk) + pot.eval(tk - new)
            - pot.eval(old - tk)
            - pot.eval(tk - old);
    }
    delta
}

/// Runs the Metropolis chain for the density proportional to
/// exp(-sum_{j != k} f(theta_k - theta_j)).
pub fn sample_log_gas(cfg: &LogGasConfig) -> Result<GasChain> {
    if cfg.n == 0 {
        return Err(Error::Inadmissible("particle count must be positive".into()));
    }
    if cfg.steps <= cfg.burn_in {
        return Err(Error::Inadmissible(format!(
            "steps = {} must exceed burn_in = {}",
            cfg.steps, cfg.burn_in
        )));
    }
    if !(cfg.proposal_width > 0.0) {
        return Err(Error::Inadmissible("proposal width must be positive".into()));
    }
    let pot = PairPotential::new(cfg.q1, cfg.q2);
    let n = cfg.n;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // Equally spaced start: already near the equilibrium (uniform) profile.
    let mut thetas: Vec<f64> = (0..n).map(|j| TAU * j as f64 / n as f64).collect();
    let stride = 2 * n; // sweeps between recorded epochs
    let mut samples = Vec::with_capacity((cfg.steps - cfg.burn_in) as usize);
    let mut proposed = 0u64;
    let mut accepted = 0u64;
    for epoch in 0..cfg.steps {
        for _ in 0..stride {
            for j in 0..n {
                let new = wrap_angle(
                    thetas[j] + (rng.random::<f64>() - 0.5) * cfg.proposal_width,
                );
                let delta = delta_energy(&pot, &thetas, j, new);
                proposed += 1;
                // Metropolis: accept with min(1, e^{-delta}); delta = +inf
                // (coincident angles) never accepts.
                if delta <= 0.0 || rng.random::<f64>() < (-delta).exp() {
                    thetas[j] = new;
                    accepted += 1;
                }
            }
        }
        if epoch >= cfg.burn_in {
            samples.push(thetas.clone());
        }
    }
    Ok(GasChain { samples, acceptance: accepted as f64 / proposed as f64 })
}

/// The normalized interaction energy I[delta_theta] = (1/n^2)
/// sum_{j != k} f(theta_j - theta_k) of one configuration; its infimum over
/// point-free measures is 0, attained only by the uniform measure.
pub fn interaction_energy(thetas: &[f64], q1: Complex64, q2: Complex64) -> f64 {
    let pot = PairPotential::new(q1, q2);
    let n = thetas.len();
    let mut e = 0.0;
    for (j, &tj) in thetas.iter().enumerate() {
        for (k, &tk) in thetas.iter().enumerate() {
            if j != k {
                e += pot.eval(tj - tk);
            }
        }
    }
    e / (n * n) as f64
}

/// Fraction of recorded configurations whose normalized energy is at most
/// eta — the near-minimizer sets used as a mixing diagnostic.
pub fn energy_fraction_below(
    samples: &[Vec<f64>],
    q1: Complex64,
    q2: Complex64,
    eta: f64,
) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let below = samples
        .iter()
        .filter(|s| interaction_energy(s, q1, q2) <= eta)
        .count();
    below as f64 / samples.len() as f64
}

/// A Monte Carlo estimate with a block-bootstrap error bar.
#[derive(Clone, Copy, Debug)]
pub struct HLimitEstimate {
    pub value: f64,
    pub error_bar: f64,
    pub acceptance: f64,
    pub samples: usize,
}

fn log_mean_exp(sums: &[f64]) -> f64 {
    let smax = sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = sums.iter().map(|s| (s - smax).exp()).sum::<f64>() / sums.len() as f64;
    smax + mean.ln()
}

fn h_limit_from_sums(n: usize, sums: &[f64], seed: u64) -> (f64, f64) {
    let value = log_mean_exp(sums) / n as f64;
    // Block bootstrap: consecutive blocks respect the chain's residual
    // autocorrelation; resample circular block starts.
    let count = sums.len();
    let block = (count as f64).sqrt().ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut replicates = Vec::with_capacity(256);
    for _ in 0..256 {
        let mut resampled = Vec::with_capacity(count);
        while resampled.len() < count {
            let start = rng.random_range(0..count);
            for i in 0..block.min(count - resampled.len()) {
                resampled.push(sums[(start + i) % count]);
            }
        }
        replicates.push(log_mean_exp(&resampled) / n as f64);
    }
    let mean = replicates.iter().sum::<f64>() / replicates.len() as f64;
    let var = replicates.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>()
        / (replicates.len() - 1) as f64;
    (value, var.sqrt())
}

/// Estimates (1/n) log E_n[e^{sum_j h(theta_j)}] over one chain. Converges
/// to the Lebesgue mean of h as n grows.
pub fn estimate_h_limit(
    h: impl Fn(f64) -> f64,
    cfg: &LogGasConfig,
) -> Result<HLimitEstimate> {
    let chain = sample_log_gas(cfg)?;
    if chain.acceptance < 0.02 {
        return Err(Error::NonMixing(format!(
            "acceptance rate {:.4} below 0.02; narrow the proposal width",
            chain.acceptance
        )));
    }
    let sums: Vec<f64> = chain
        .samples
        .iter()
        .map(|s| s.iter().map(|&t| h(t)).sum::<f64>())
        .collect();
    let (value, error_bar) = h_limit_from_sums(cfg.n, &sums, cfg.seed);
    Ok(HLimitEstimate { value, error_bar, acceptance: chain.acceptance, samples: sums.len() })
}

/// Runs independent chains (distinct seeds) in parallel and merges their
/// samples in seed order, so the estimate is deterministic for a given seed
/// list and any thread count.
pub fn estimate_h_limit_multi(
    h: (impl Fn(f64) -> f64 + Sync),
    cfg: &LogGasConfig,
    seeds: &[u64],
) -> Result<HLimitEstimate> {
    assert!(!seeds.is_empty(), "need at least one seed");
    let chains: Vec<GasChain> = seeds
        .par_iter()
        .map(|&seed| sample_log_gas(&LogGasConfig { seed, ..cfg.clone() }))
        .collect::<Result<Vec<_>>>()?;
    let acceptance =
        chains.iter().map(|c| c.acceptance).sum::<f64>() / chains.len() as f64;
    if acceptance < 0.02 {
        return Err(Error::NonMixing(format!(
            "mean acceptance rate {acceptance:.4} below 0.02"
        )));
    }
    let sums: Vec<f64> = chains
        .iter()
        .flat_map(|c| c.samples.iter())
        .map(|s| s.iter().map(|&t| h(t)).sum::<f64>())
        .collect();
    let (value, error_bar) = h_limit_from_sums(cfg.n, &sums, seeds[0]);
    Ok(HLimitEstimate { value, error_bar, acceptance, samples: sums.len() })
}

/// One root-statistic row of a convergence report.
#[derive(Clone, Copy, Debug)]
pub struct RadiusRow {
    pub n: u32,
    pub root_stat: f64,
}

/// Root statistics |Z_n|^{1/n} for n >= 1 — the empirical counterpart of
/// the radius bounds.
pub fn empirical_radius(values: &[Complex64]) -> Vec<RadiusRow> {
    values
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, z)| RadiusRow { n: n as u32, root_stat: z.norm().powf(1.0 / n as f64) })
        .collect()
}

/// Running maximum of the root statistic from `from` on — compared against
/// the theoretical bound (with slack) in the verification suites.
pub fn radius_running_max(rows: &[RadiusRow], from: u32) -> f64 {
    rows.iter().filter(|r| r.n >= from).map(|r| r.root_stat).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::a_n_series;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn f_values_and_pole() {
        let zero = c(0.0, 0.0);
        assert_eq!(f_potential(0.0, zero, zero), f64::INFINITY);
        assert!((f_potential(PI, zero, zero) + 2f64.ln()).abs() < 1e-14);
        // Pole persists for generic parameters.
        assert_eq!(f_potential(0.0, c(0.3, 0.1), c(0.3, -0.1)), f64::INFINITY);
    }

    #[test]
    fn f_is_even_in_both_regimes() {
        let pairs = [
            (c(0.3, 0.4), c(0.3, -0.4)),   // conjugate with phases
            (c(0.55, 0.0), c(0.2, 0.0)),   // both real positive
            (c(-0.9, 0.0), c(-0.9, 0.0)),  // both real negative
        ];
        for (q1, q2) in pairs {
            for i in 1..40 {
                let theta = 0.157 * i as f64;
                let d = (f_potential(theta, q1, q2) - f_potential(-theta, q1, q2)).abs();
                assert!(d < 1e-13, "q=({q1},{q2}), theta={theta}: {d}");
            }
        }
    }

    #[test]
    fn fourier_g_closed_form_examples() {
        assert_eq!(fourier_g(0.5, 0), 0.0);
        assert!((fourier_g(2.0, 0) - 2f64.ln()).abs() < 1e-15);
        assert!((fourier_g(0.5, 2) + 1.0 / 16.0).abs() < 1e-15);
        assert!((fourier_g(0.5, -2) + 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn fourier_g_matches_quadrature() {
        for sigma in [0.3, 0.5, 2.0] {
            for k in -4i64..=4 {
                let closed = fourier_g(sigma, k);
                let quad = fourier_g_quadrature(sigma, k, 512);
                assert!((closed - quad).abs() < 1e-10, "sigma={sigma} k={k}: {closed} vs {quad}");
            }
        }
        // Singular case sigma = 1 through tanh-sinh.
        for k in 1i64..=4 {
            let quad = fourier_g_quadrature(1.0, k, 0);
            let closed = fourier_g(1.0, k);
            assert!((closed - quad).abs() < 1e-10, "k={k}: {closed} vs {quad}");
        }
    }

    #[test]
    fn fourier_f_closed_form_properties() {
        assert_eq!(fourier_f(0, c(0.3, 0.0), c(0.2, 0.0)), c(0.0, 0.0));
        // Real pair: (1 - q1^k)(1 - q2^k) / (2k), exactly.
        let (q1, q2) = (0.3f64, 0.2f64);
        for k in 1i64..=8 {
            let got = fourier_f(k, c(q1, 0.0), c(q2, 0.0));
            let want = (1.0 - q1.powi(k as i32)) * (1.0 - q2.powi(k as i32)) / (2.0 * k as f64);
            assert!((got.re - want).abs() < 1e-15 && got.im.abs() < 1e-15, "k={k}");
        }
        // Conjugate pair: real, positive, above the (1-|q1 q2|^{k/2})^2 bound.
        let q1 = c(0.4, 0.35);
        let q2 = q1.conj();
        for k in 1i64..=16 {
            let ck = fourier_f(k, q1, q2);
            assert!(ck.im.abs() < 1e-15);
            let bound =
                (1.0 - (q1 * q2).norm().powf(k as f64 / 2.0)).powi(2) / (2.0 * k as f64);
            assert!(ck.re >= bound - 1e-15, "k={k}: {} < {bound}", ck.re);
        }
    }

    #[test]
    fn fourier_f_matches_quadrature() {
        let q1 = c(0.3, 0.0);
        let q2 = c(0.2, 0.0);
        for k in 0i64..=8 {
            let closed = fourier_f(k, q1, q2);
            let quad = fourier_f_quadrature(k, q1, q2, 2048);
            assert!(
                (closed - quad).norm() < 1e-8,
                "k={k}: {closed} vs {quad}"
            );
        }
        // c_0 vanishes by quadrature as well.
        assert!(fourier_f_quadrature(0, q1, q2, 2048).norm() < 1e-8);
        // A conjugate pair with phases exercises the phase factors.
        let q1 = c(0.25, 0.3);
        let q2 = q1.conj();
        for k in 1i64..=6 {
            let closed = fourier_f(k, q1, q2);
            let quad = fourier_f_quadrature(k, q1, q2, 2048);
            assert!((closed - quad).norm() < 1e-8, "k={k}");
        }
    }

    #[test]
    fn log_g_mean_examples() {
        let mp = MultiplicativeParams::new(c(0.3, 0.0), c(0.2, 0.0), vec![c(1.0, 0.0)], vec![]);
        assert_eq!(log_g_mean(2.0, &mp).unwrap(), 0.0);
        assert!(matches!(log_g_mean(0.9, &mp), Err(Error::Inadmissible(_))));

        let mp = MultiplicativeParams::new(
            c(0.3, 0.0),
            c(0.2, 0.0),
            vec![c(1.0, 0.0)],
            vec![c(3.0, 0.0)],
        );
        assert!((log_g_mean(2.0, &mp).unwrap() - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn log_g_mean_matches_quadrature() {
        let mp = MultiplicativeParams::new(
            c(0.3, 0.05),
            c(0.3, -0.05),
            vec![c(1.0, 0.0), Complex64::from_polar(1.1, 2.0)],
            vec![c(3.0, 0.5), c(0.4, -0.2)],
        );
        let rho = 2.0;
        let closed = log_g_mean(rho, &mp).unwrap();
        let quad = log_g_mean_quadrature(rho, &mp, 4096).unwrap();
        assert!((closed - quad).abs() < 1e-6, "{closed} vs {quad}");
    }

    #[test]
    fn single_particle_chain_is_uniform() {
        // With one particle there is no interaction and every proposal is
        // accepted; a full-circle proposal width makes the recorded samples
        // exactly iid uniform, which the KS test below assumes.
        let cfg = LogGasConfig {
            steps: 10_032,
            burn_in: 32,
            proposal_width: TAU,
            ..LogGasConfig::new(1, c(0.3, 0.0), c(0.2, 0.0), 42)
        };
        let chain = sample_log_gas(&cfg).unwrap();
        assert!((chain.acceptance - 1.0).abs() < 1e-12); // no interaction
        let mut xs: Vec<f64> = chain.samples.iter().map(|s| s[0] / TAU).collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let mut d: f64 = 0.0;
        for (i, x) in xs.iter().enumerate() {
            d = d.max((x - i as f64 / n).abs()).max(((i + 1) as f64 / n - x).abs());
        }
        // Kolmogorov-Smirnov at alpha = 0.01.
        assert!(d * n.sqrt() < 1.63, "KS statistic {}", d * n.sqrt());
    }

    #[test]
    fn delta_energy_matches_full_recomputation() {
        let q1 = c(0.3, 0.4);
        let q2 = c(0.3, -0.4);
        let pot = PairPotential::new(q1, q2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let thetas: Vec<f64> = (0..6).map(|_| rng.random::<f64>() * TAU).collect();
        let n = thetas.len();
        for j in 0..n {
            let new = rng.random::<f64>() * TAU;
            let delta = delta_energy(&pot, &thetas, j, new);
            let before = interaction_energy(&thetas, q1, q2) * (n * n) as f64;
            let mut moved = thetas.clone();
            moved[j] = new;
            let after = interaction_energy(&moved, q1, q2) * (n * n) as f64;
            assert!(
                (delta - (after - before)).abs() < 1e-12,
                "site {j}: {delta} vs {}",
                after - before
            );
        }
    }

    #[test]
    fn gas_shows_repulsion_and_low_energy() {
        let q = c(-0.9, 0.0);
        let n = 24;
        let cfg = LogGasConfig {
            steps: 128,
            burn_in: 32,
            ..LogGasConfig::new(n, q, q, 7)
        };
        let chain = sample_log_gas(&cfg).unwrap();
        assert!(chain.acceptance > 0.05 && chain.acceptance < 0.95);

        let gap_var = |configs: &[Vec<f64>]| -> f64 {
            let mut gaps = Vec::new();
            for s in configs {
                let mut sorted = s.clone();
                sorted.sort_by(f64::total_cmp);
                for w in sorted.windows(2) {
                    gaps.push(w[1] - w[0]);
                }
                gaps.push(TAU - sorted[n - 1] + sorted[0]);
            }
            let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
            gaps.iter().map(|g| (g - mean) * (g - mean)).sum::<f64>() / gaps.len() as f64
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let iid: Vec<Vec<f64>> = (0..chain.samples.len())
            .map(|_| (0..n).map(|_| rng.random::<f64>() * TAU).collect())
            .collect();
        let vg = gap_var(&chain.samples);
        let vi = gap_var(&iid);
        assert!(vg < 0.7 * vi, "gas {vg} vs iid {vi}");

        // Normalized energy hovers at its continuum minimum 0, up to the
        // finite-n equilibrium offset: in the Gaussian-mode approximation
        // E|S_m|^2 = n/(1 + 2 c_m n), so E[I] = -4 sum_m c_m^2/(1 + 2 c_m n),
        // about -0.26 here (n = 24, q = -0.9) and O(log n / n) in general.
        let mean_energy = chain
            .samples
            .iter()
            .map(|s| interaction_energy(s, q, q))
            .sum::<f64>()
            / chain.samples.len() as f64;
        assert!(mean_energy > -0.45 && mean_energy < 0.3, "mean energy {mean_energy}");
        assert!(energy_fraction_below(&chain.samples, q, q, 0.5) > 0.9);
    }

    #[test]
    fn h_limit_constant_is_exact() {
        let cfg = LogGasConfig {
            steps: 48,
            burn_in: 8,
            ..LogGasConfig::new(8, c(0.3, 0.0), c(0.2, 0.0), 3)
        };
        let est = estimate_h_limit(|_| 0.7, &cfg).unwrap();
        assert!((est.value - 0.7).abs() < 1e-12);
        assert!(est.error_bar < 1e-12);
        assert_eq!(est.samples, 40);
    }

    #[test]
    fn multi_chain_merge_is_deterministic() {
        let cfg = LogGasConfig {
            steps: 24,
            burn_in: 8,
            ..LogGasConfig::new(6, c(0.3, 0.0), c(0.2, 0.0), 0)
        };
        let a = estimate_h_limit_multi(|t| t.cos(), &cfg, &[11, 12, 13]).unwrap();
        let b = estimate_h_limit_multi(|t| t.cos(), &cfg, &[11, 12, 13]).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.error_bar, b.error_bar);
        assert_eq!(a.samples, 48);
    }

    #[test]
    fn empirical_radius_rows() {
        let values: Vec<Complex64> = (0..10).map(|n| c(3f64.powi(n), 0.0)).collect();
        for row in empirical_radius(&values) {
            assert!((row.root_stat - 3.0).abs() < 1e-12);
        }

        let series = a_n_series(c(0.3, 0.0), c(0.2, 0.0), 40);
        let rows = empirical_radius(&series);
        for row in rows.iter().filter(|r| r.n >= 10) {
            assert!(
                row.root_stat > 0.8 && row.root_stat < 1.1,
                "n={}: {}",
                row.n,
                row.root_stat
            );
        }
        assert!(radius_running_max(&rows, 10) <= 1.1);
    }
}
