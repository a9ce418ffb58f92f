//! Closed-form quantization-error and distortion bounds, plus brute-force
//! and Monte Carlo checks of them.

use std::collections::VecDeque;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::channel::{draw_channel, FadingSpec, RngStream};
use crate::codebook::{CpCodebook, QuantizeMode};
use crate::error::{Error, Result};
use crate::field::{enumerate_cp_messages, PrimeModulus};
use crate::gains::optimal_beamformer_miso;

/// Mean and variance of `|y_i|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsMoments {
    pub mu: f64,
    pub sigma2: f64,
}

impl AbsMoments {
    pub fn new(mu: f64, sigma2: f64) -> Result<Self> {
        if !(mu > 0.0) || !(sigma2 >= 0.0) {
            return Err(Error::Parameter(format!("need mu > 0 and sigma2 >= 0, got {mu}, {sigma2}")));
        }
        Ok(Self { mu, sigma2 })
    }
}

/// Moments of `|z|` for `z ~ CN(0, 1)`: `μ = √π/2`, `σ² = 1 − π/4`.
pub fn rayleigh_abs_moments() -> AbsMoments {
    AbsMoments { mu: PI.sqrt() / 2.0, sigma2: 1.0 - PI / 4.0 }
}

/// Moments of `|h|` for a single fading coefficient with unit average power.
///
/// For Rician fading with an all-ones LOS term, `|h|` is Rice distributed
/// and `E|h| = s√(π/2) e^{-κ/2} [(1+κ) I₀(κ/2) + κ I₁(κ/2)]` with
/// `s² = 1/(2(κ+1))`; `E|h|² = 1` in every case.
pub fn fading_abs_moments(fading: &FadingSpec) -> Result<AbsMoments> {
    fading.validate()?;
    match *fading {
        FadingSpec::Rayleigh => Ok(rayleigh_abs_moments()),
        FadingSpec::Rician { kappa } => {
            let s = (0.5 / (kappa + 1.0)).sqrt();
            let half = 0.5 * kappa;
            let mu = s
                * (PI / 2.0).sqrt()
                * (-half).exp()
                * ((1.0 + kappa) * bessel_i(0, half) + kappa * bessel_i(1, half));
            AbsMoments::new(mu, (1.0 - mu * mu).max(0.0))
        }
    }
}

/// Modified Bessel function of the first kind, orders 0 and 1, by power series.
fn bessel_i(order: u32, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = if order == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    for m in 1..200 {
        term *= q / (m as f64 * (m + order) as f64);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

fn sqrt_cos(p: PrimeModulus) -> Result<f64> {
    if p.get() < 5 {
        return Err(Error::Precondition(format!(
            "p = {p} gives cos(2π/p) <= 0; bounds need p >= 5"
        )));
    }
    Ok((2.0 * PI / p.get() as f64).cos().sqrt())
}

/// Smallest rate for which the bounds apply: `1 / (1 + √cos(2π/p))`.
pub fn min_rate(p: PrimeModulus) -> Result<f64> {
    Ok(1.0 / (1.0 + sqrt_cos(p)?))
}

/// `R √cos(2π/p) + R − 1`, after checking the rate condition.
fn rate_term(p: PrimeModulus, n: usize, k: usize) -> Result<f64> {
    let c = sqrt_cos(p)?;
    if k == 0 || k > n || n == 0 || n >= p.get() as usize {
        return Err(Error::Unsupported(format!("need 1 <= k <= n <= p - 1, got p = {p}, n = {n}, k = {k}")));
    }
    let rate = k as f64 / n as f64;
    let min = 1.0 / (1.0 + c);
    if rate < min {
        return Err(Error::Precondition(format!(
            "rate {rate:.4} is below min_rate(p = {p}) = {min:.4}"
        )));
    }
    Ok(rate * c + rate - 1.0)
}

/// Upper bound on the mean squared chordal quantization error:
/// `1 − (R√cos(2π/p) + R − 1)² μ² / (μ² + σ²)`.
pub fn qe_bound(p: PrimeModulus, n: usize, k: usize, m: AbsMoments) -> Result<f64> {
    let t = rate_term(p, n, k)?;
    Ok(1.0 - t * t * m.mu * m.mu / (m.mu * m.mu + m.sigma2))
}

/// Upper bound on the normalized distortion against EGT:
/// `1 − (R√cos(2π/p) + R − 1)² / (1 + σ² / (n μ²))`.
pub fn distortion_bound(p: PrimeModulus, n: usize, k: usize, m: AbsMoments) -> Result<f64> {
    let t = rate_term(p, n, k)?;
    Ok(1.0 - t * t / (1.0 + m.sigma2 / (n as f64 * m.mu * m.mu)))
}

/// Largest ambient space the covering-radius search will exhaust.
pub const COVERING_CAP: u64 = 10_000_000;

/// Hamming covering radius of `{(f(1), ..., f(n)) : f ∈ CF_p(k)}` over `F_p`.
///
/// Every word of `F_p^n` gets its exact distance to the code by a
/// multi-source breadth-first search seeded at the codewords; the radius is
/// the largest such distance.
pub fn grs_covering_radius_bruteforce(p: PrimeModulus, n: usize, k: usize) -> Result<usize> {
    let q = p.get() as u64;
    if k < 1 || k > n || n as u64 >= q {
        return Err(Error::Unsupported(format!("need 1 <= k <= n <= p - 1, got p = {p}, n = {n}, k = {k}")));
    }
    let space = q
        .checked_pow(n as u32)
        .filter(|&s| s <= COVERING_CAP)
        .ok_or_else(|| Error::Unsupported(format!("{q}^{n} words exceed the cap of {COVERING_CAP}")))?;

    let mut dist = vec![u8::MAX; space as usize];
    let mut queue = VecDeque::new();
    for f in enumerate_cp_messages(p, k)? {
        let word = (1..=n as u64).try_fold(0u64, |acc, a| {
            f.eval(p.element(a)).map(|v| acc * q + v.value() as u64)
        })?;
        if dist[word as usize] == u8::MAX {
            dist[word as usize] = 0;
            queue.push_back(word);
        }
    }
    let powers: Vec<u64> = (0..n).map(|j| q.pow(j as u32)).collect();
    let mut radius = 0u8;
    while let Some(w) = queue.pop_front() {
        let d = dist[w as usize];
        radius = radius.max(d);
        for &pw in &powers {
            let digit = (w / pw) % q;
            let base = w - digit * pw;
            for v in 0..q {
                let nb = (base + v * pw) as usize;
                if dist[nb] == u8::MAX {
                    dist[nb] = d + 1;
                    queue.push_back(nb as u64);
                }
            }
        }
    }
    Ok(radius as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QeEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Monte Carlo mean of the squared chordal distance from a random line
/// (a normalized i.i.d. fading vector) to its nearest codeword.
pub fn empirical_qe(cb: &CpCodebook, fading: &FadingSpec, trials: usize, seed: u64) -> Result<QeEstimate> {
    fading.validate()?;
    if trials < 2 {
        return Err(Error::Parameter("need at least two trials".into()));
    }
    let n = cb.n();
    let samples: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let h = draw_channel(fading, None, 1, n, RngStream::new(seed, t))?;
            let y = optimal_beamformer_miso(h.matrix().row(0))?;
            let d = cb.quantize(&y, QuantizeMode::Pruned)?.distance;
            Ok(d * d)
        })
        .collect::<Result<_>>()?;
    let mean = samples.iter().sum::<f64>() / trials as f64;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (trials as f64 - 1.0);
    Ok(QeEstimate { mean, std_error: (var / trials as f64).sqrt(), trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::RngStream;

    fn pm(v: u32) -> PrimeModulus {
        PrimeModulus::new(v).unwrap()
    }

    /// Direct max-min over the whole space; the oracle for the BFS.
    fn covering_radius_naive(p: PrimeModulus, n: usize, k: usize) -> usize {
        let q = p.get() as u64;
        let code: Vec<Vec<u64>> = enumerate_cp_messages(p, k)
            .unwrap()
            .map(|f| (1..=n as u64).map(|a| f.eval(p.element(a)).unwrap().value() as u64).collect())
            .collect();
        let mut radius = 0;
        for w in 0..q.pow(n as u32) {
            let y: Vec<u64> = (0..n).rev().map(|j| (w / q.pow(j as u32)) % q).collect();
            let best = code
                .iter()
                .map(|c| c.iter().zip(&y).filter(|(a, b)| a != b).count())
                .min()
                .unwrap();
            radius = radius.max(best);
        }
        radius
    }

    #[test]
    fn rayleigh_moment_identities() {
        let m = rayleigh_abs_moments();
        assert!((m.mu * m.mu + m.sigma2 - 1.0).abs() < 1e-15);
        assert!((m.mu - 0.886227).abs() < 1e-6);
        assert!((m.sigma2 - 0.214602).abs() < 1e-6);
    }

    #[test]
    fn rayleigh_moments_monte_carlo() {
        let mut src = RngStream::new(21, 0).source();
        let n = 1_000_000;
        let samples: Vec<f64> = (0..n).map(|_| src.complex_normal().norm()).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!((mean - 0.8862).abs() < 0.002);
        assert!((var - 0.2146).abs() < 0.002);
    }

    #[test]
    fn rician_moments_match_monte_carlo() {
        let m0 = fading_abs_moments(&FadingSpec::Rician { kappa: 0.0 }).unwrap();
        assert!((m0.mu - rayleigh_abs_moments().mu).abs() < 1e-14);
        for kappa in [0.05, 0.25, 3.0] {
            let m = fading_abs_moments(&FadingSpec::Rician { kappa }).unwrap();
            let mut src = RngStream::new(22, 0).source();
            let n = 400_000;
            let mean = (0..n)
                .map(|_| crate::channel::sample_rician(1, 1, kappa, &mut src).unwrap().matrix()[(0, 0)].norm())
                .sum::<f64>()
                / n as f64;
            assert!((mean - m.mu).abs() < 0.003, "kappa {kappa}: {mean} vs {}", m.mu);
        }
    }

    #[test]
    fn min_rate_values() {
        assert!((min_rate(pm(5)).unwrap() - 0.6427).abs() < 1e-4);
        assert!((min_rate(pm(11)).unwrap() - 0.521594).abs() < 1e-6);
        assert!((min_rate(pm(10007)).unwrap() - 0.5).abs() < 1e-4);
        assert!(matches!(min_rate(pm(3)), Err(Error::Precondition(_))));
    }

    #[test]
    fn qe_bound_values() {
        let m = rayleigh_abs_moments();
        let b = qe_bound(pm(5), 4, 4, m).unwrap();
        assert!((b - (1.0 - (2.0 * PI / 5.0).cos() * PI / 4.0)).abs() < 1e-12);
        assert!((b - 0.7573).abs() < 1e-4);
        let c = (2.0 * PI / 11.0).cos().sqrt();
        let t = 0.7 * c + 0.7 - 1.0;
        let b = qe_bound(pm(11), 10, 7, m).unwrap();
        assert!((b - (1.0 - t * t * PI / 4.0)).abs() < 1e-12);
        assert!((b - 0.908116).abs() < 1e-6);
        // R = 1, large p: σ²/(μ²+σ²).
        let b = qe_bound(pm(10007), 4, 4, m).unwrap();
        assert!((b - m.sigma2).abs() < 1e-6);
        assert!(matches!(qe_bound(pm(5), 4, 2, m), Err(Error::Precondition(_))));
        assert!(qe_bound(pm(3), 2, 2, m).is_err());
    }

    #[test]
    fn distortion_bound_values() {
        let m = rayleigh_abs_moments();
        let b = distortion_bound(pm(5), 4, 4, m).unwrap();
        let cos = (2.0 * PI / 5.0).cos();
        assert!((b - (1.0 - cos / (1.0 + m.sigma2 / (4.0 * m.mu * m.mu)))).abs() < 1e-12);
        assert!((b - 0.710).abs() < 1e-3);
        let flat = AbsMoments::new(1.0, 0.0).unwrap();
        assert!((distortion_bound(pm(5), 4, 4, flat).unwrap() - (1.0 - cos)).abs() < 1e-12);
        // Decreasing in n at fixed rate and p.
        let p = pm(11);
        assert!(distortion_bound(p, 10, 10, m).unwrap() < distortion_bound(p, 4, 4, m).unwrap());
        // Trend along n = p - 1, R = 1.
        let trend: Vec<f64> = [5, 7, 11].iter().map(|&q| distortion_bound(pm(q), q as usize - 1, q as usize - 1, m).unwrap()).collect();
        assert!(trend[0] > trend[1] && trend[1] > trend[2]);
    }

    #[test]
    fn covering_radius_matches_naive_and_n_minus_k() {
        for (q, n, k) in [(5u32, 4usize, 1usize), (5, 4, 2), (5, 4, 3), (5, 4, 4), (5, 3, 2), (7, 4, 2)] {
            let bfs = grs_covering_radius_bruteforce(pm(q), n, k).unwrap();
            assert_eq!(bfs, covering_radius_naive(pm(q), n, k), "p={q} n={n} k={k}");
            assert_eq!(bfs, n - k);
        }
        assert_eq!(grs_covering_radius_bruteforce(pm(7), 6, 3).unwrap(), 3);
        assert!(matches!(grs_covering_radius_bruteforce(pm(23), 22, 3), Err(Error::Unsupported(_))));
    }

    #[test]
    fn empirical_qe_examples() {
        let cb = CpCodebook::new(pm(5), 4, 4).unwrap();
        let est = empirical_qe(&cb, &FadingSpec::Rayleigh, 2_000, 1).unwrap();
        assert!(est.mean <= 1.0 && est.mean >= 0.0);
        assert!(est.mean + 3.0 * est.std_error <= qe_bound(pm(5), 4, 4, rayleigh_abs_moments()).unwrap());
        // Codewords quantize to themselves.
        for j in [0u64, 99, 624] {
            assert!(cb.quantize(&cb.codeword(j), QuantizeMode::Pruned).unwrap().distance < 1e-7);
        }
    }
}
