//! Seeded, parallel Monte-Carlo oracles.
//!
//! One 64-bit master seed drives every run. Worker `w` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` switched to stream `w`, takes a fixed
//! contiguous share of the samples, and the per-worker statistics are merged
//! in stream order. Results therefore depend on `(seed, workers)` only, never
//! on thread scheduling.

use std::thread;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::fiber::{AttackSpec, FiberSpec, GramSymbol};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCReport {
    pub estimate: f64,
    /// Sample standard deviation over `√samples`.
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
}

impl MCReport {
    /// `(estimate - reference) / std_error`; zero when both coincide exactly.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = self.estimate - reference;
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}

/// Generator for worker `stream` under master `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let w = other.count as f64 / count as f64;
        Moments { count, mean: self.mean + delta * w, m2: self.m2 + other.m2 + delta * delta * self.count as f64 * w }
    }
}

/// Mean of `draw` over `samples` draws split across `workers` streams.
pub fn parallel_mean<F>(samples: u64, seed: u64, workers: usize, draw: F) -> Result<MCReport>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    if samples == 0 {
        return Err(Error::ZeroSamples);
    }
    if workers == 0 {
        return Err(Error::ZeroWorkers);
    }
    let share = samples / workers as u64;
    let extra = samples % workers as u64;
    let draw = &draw;
    let parts: Vec<Moments> = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers as u64)
            .map(|w| {
                let count = share + u64::from(w < extra);
                scope.spawn(move || {
                    let mut rng = stream_rng(seed, w);
                    let mut m = Moments::default();
                    for _ in 0..count {
                        m.push(draw(&mut rng));
                    }
                    m
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    let variance = if total.count > 1 { total.m2 / (total.count - 1) as f64 } else { 0.0 };
    Ok(MCReport {
        estimate: total.mean,
        std_error: (variance.max(0.0) / total.count as f64).sqrt(),
        samples,
        seed,
        workers,
    })
}

/// Monte-Carlo estimate of `E exp(-α† G_n α)` with i.i.d. circular complex
/// Gaussian `α_t ~ N_C(0, E)`.
pub fn expected_error_mc(
    sym: &GramSymbol,
    n: usize,
    energy: f64,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<MCReport> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    if !(energy.is_finite() && energy >= 0.0) {
        return Err(Error::InvalidEnergy(energy));
    }
    let taps: Vec<(usize, f64)> =
        sym.taps().iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(k, c)| (k + 1, *c)).collect();
    let scale = (energy / 2.0).sqrt();
    let outputs = n + sym.band();
    parallel_mean(samples, seed, workers, |rng| {
        if taps.is_empty() {
            return 1.0;
        }
        let alpha: Vec<Complex64> = (0..n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(scale * re, scale * im)
            })
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); outputs];
        for &(delay, c) in &taps {
            for (j, a) in alpha.iter().enumerate() {
                out[j + delay] += a * c;
            }
        }
        (-out.iter().map(|z| z.norm_sqr()).sum::<f64>()).exp()
    })
}

fn check_homodyne(amplitude: f64, pulses: usize) -> Result<()> {
    if amplitude.is_nan() || amplitude < 0.0 {
        return Err(Error::Negative(amplitude));
    }
    if pulses == 0 {
        return Err(Error::ZeroDimension);
    }
    Ok(())
}

fn quadrature_sum(rng: &mut ChaCha8Rng, noise: &Normal<f64>, mean: f64, pulses: usize) -> f64 {
    (0..pulses).map(|_| mean + noise.sample(rng)).sum()
}

/// Equal-prior homodyne test on `n` pulses: outcomes are `N(0, ½)` under the
/// baseline and `N(√2 α_s, ½)` under the attack, and the decision thresholds
/// the sum at `n √2 α_s / 2`. Each trial draws one sum per hypothesis and
/// scores the average of the two error indicators.
pub fn homodyne_mc(amplitude: f64, pulses: usize, samples: u64, seed: u64, workers: usize) -> Result<MCReport> {
    check_homodyne(amplitude, pulses)?;
    let noise = Normal::new(0.0, 0.5f64.sqrt()).expect("valid variance");
    let shift = 2f64.sqrt() * amplitude;
    let threshold = pulses as f64 * shift / 2.0;
    parallel_mean(samples, seed, workers, |rng| {
        let null = quadrature_sum(rng, &noise, 0.0, pulses);
        let alt = quadrature_sum(rng, &noise, shift, pulses);
        let false_alarm = f64::from(u8::from(null > threshold));
        let miss = f64::from(u8::from(alt <= threshold));
        0.5 * (false_alarm + miss)
    })
}

/// Composite alternative: the test is tuned to the weakest amplitude and
/// applied against every listed attack.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeHomodyneReport {
    /// False-alarm rate under the baseline.
    pub type_one: MCReport,
    /// Miss rate under each attack, in input order.
    pub type_two: Vec<MCReport>,
    /// Largest average error `½(type I + type II)` over the attacks.
    pub worst_error: f64,
    pub worst_attack: usize,
}

pub fn composite_homodyne_mc(
    amplitudes: &[f64],
    pulses: usize,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<CompositeHomodyneReport> {
    if amplitudes.is_empty() {
        return Err(Error::NoAttacks);
    }
    for &a in amplitudes {
        check_homodyne(a, pulses)?;
    }
    let weakest = amplitudes.iter().copied().fold(f64::INFINITY, f64::min);
    let noise = Normal::new(0.0, 0.5f64.sqrt()).expect("valid variance");
    let threshold = pulses as f64 * 2f64.sqrt() * weakest / 2.0;

    let type_one = parallel_mean(samples, seed, workers, |rng| {
        f64::from(u8::from(quadrature_sum(rng, &noise, 0.0, pulses) > threshold))
    })?;
    let type_two = amplitudes
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let shift = 2f64.sqrt() * a;
            // distinct streams per hypothesis: offset the seed by the attack index
            parallel_mean(samples, seed.wrapping_add(1 + i as u64), workers, |rng| {
                f64::from(u8::from(quadrature_sum(rng, &noise, shift, pulses) <= threshold))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (worst_attack, worst_error) = type_two
        .iter()
        .map(|r| 0.5 * (type_one.estimate + r.estimate))
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    Ok(CompositeHomodyneReport { type_one, type_two, worst_error, worst_attack })
}

/// Random fiber with `1..=max_blocks` blocks (τ in [0.5, 1], θ in [0.05, 0.95])
/// and a random valid attack on it, for calibration sweeps.
pub fn random_scenario(rng: &mut impl Rng, max_blocks: usize, energy: f64) -> Result<(FiberSpec, AttackSpec)> {
    let blocks = rng.random_range(1..=max_blocks.max(1));
    let tau: Vec<f64> = (0..blocks).map(|_| rng.random_range(0.5..=1.0)).collect();
    let theta: Vec<f64> = (0..blocks).map(|_| rng.random_range(0.05..0.95)).collect();
    let position = rng.random_range(1..=blocks);
    let attack_tau = rng.random_range(0.0..=tau[position - 1]);
    let attack_theta = rng.random_range(0.0..=1.0);
    let spec = FiberSpec::new(tau, theta, energy)?;
    Ok((spec, AttackSpec::new(position, attack_tau, attack_theta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::erf::erfc;

    fn normal_cdf(x: f64) -> f64 {
        0.5 * erfc(-x / 2f64.sqrt())
    }

    #[test]
    fn null_symbol_is_exact() {
        let sym = GramSymbol::from_taps(vec![0.0; 4]);
        let r = expected_error_mc(&sym, 6, 1.0, 5000, 3, 2).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.std_error, 0.0);
    }

    #[test]
    fn single_mode_matches_determinant() {
        let flat = GramSymbol::from_taps(vec![0.0, 1.0, 0.0, 0.0]);
        let r = expected_error_mc(&flat, 1, 1.0, 1_000_000, 11, 4).unwrap();
        assert!(r.z_score(0.5).abs() < 3.0, "{r:?}");
    }

    #[test]
    fn reproducible_per_seed_and_workers() {
        let sym = GramSymbol::from_taps(vec![0.0, 0.6, 0.0, -0.3]);
        let a = expected_error_mc(&sym, 5, 0.7, 20_000, 42, 3).unwrap();
        let b = expected_error_mc(&sym, 5, 0.7, 20_000, 42, 3).unwrap();
        assert_eq!(a, b);
        let c = expected_error_mc(&sym, 5, 0.7, 20_000, 43, 3).unwrap();
        assert_ne!(a.estimate, c.estimate);
    }

    #[test]
    fn rejects_zero_samples_and_workers() {
        let sym = GramSymbol::from_taps(vec![0.0, 1.0]);
        assert_eq!(expected_error_mc(&sym, 2, 1.0, 0, 1, 1), Err(Error::ZeroSamples));
        assert_eq!(homodyne_mc(1.0, 2, 0, 1, 1), Err(Error::ZeroSamples));
        assert_eq!(homodyne_mc(1.0, 2, 10, 1, 0), Err(Error::ZeroWorkers));
    }

    #[test]
    fn homodyne_identical_hypotheses() {
        let r = homodyne_mc(0.0, 4, 100_000, 5, 2).unwrap();
        assert!(r.z_score(0.5).abs() < 3.0, "{r:?}");
    }

    #[test]
    fn homodyne_single_pulse_matches_normal_cdf() {
        let r = homodyne_mc(1.0, 1, 1_000_000, 9, 4).unwrap();
        assert!(r.z_score(normal_cdf(-1.0)).abs() < 3.0, "{r:?}");
    }

    #[test]
    fn composite_test_uses_weakest_attack() {
        let r = composite_homodyne_mc(&[0.8, 0.4, 1.2], 3, 200_000, 21, 4).unwrap();
        assert_eq!(r.worst_attack, 1);
        let threshold_z = 3f64.sqrt() * 0.4; // (n √2 a / 2) / sqrt(n/2)
        assert!(r.type_one.z_score(normal_cdf(-threshold_z)).abs() < 3.0);
        assert!(r.type_two[1].z_score(normal_cdf(-threshold_z)).abs() < 3.0);
        assert!(r.type_two[2].estimate < r.type_two[1].estimate);
    }

    #[test]
    fn moments_merge_matches_sequential() {
        let xs: Vec<f64> = (0..101).map(|i| ((i * 37) % 17) as f64 / 3.0).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        xs[..40].iter().for_each(|&x| a.push(x));
        xs[40..].iter().for_each(|&x| b.push(x));
        let merged = a.merge(b);
        assert_eq!(merged.count, whole.count);
        assert!((merged.mean - whole.mean).abs() < 1e-12);
        assert!((merged.m2 - whole.m2).abs() < 1e-9);
    }
}
