//! Santha-Vazirani sources: every bit is 0 with probability `1/2 + b`, where
//! the bias `b ∈ [−ε, ε]` may depend on the full history and on the
//! adversary symbol `z`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bell::Setting;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvParams {
    pub epsilon: f64,
}

impl SvParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        validate_epsilon(epsilon)?;
        Ok(SvParams { epsilon })
    }
}

pub(crate) fn validate_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..0.5).contains(&epsilon) {
        return Err(Error::param("epsilon", format!("{epsilon} outside [0, 1/2)")));
    }
    Ok(())
}

/// Rule choosing the bias of the next bit.
pub trait BiasStrategy: Send + Sync + fmt::Debug {
    /// Bias `b` with `P(next = 0 | history) = 1/2 + b`.
    fn bias(&self, history: &[u8], z: u32) -> f64;
}

/// Fair coin.
#[derive(Clone, Copy, Debug, Default)]
pub struct Honest;

impl BiasStrategy for Honest {
    fn bias(&self, _history: &[u8], _z: u32) -> f64 {
        0.0
    }
}

/// The same bias on every bit.
#[derive(Clone, Copy, Debug)]
pub struct ConstantBias(pub f64);

impl BiasStrategy for ConstantBias {
    fn bias(&self, _history: &[u8], _z: u32) -> f64 {
        self.0
    }
}

/// Pushes each bit toward the corresponding bit of `target` (repeated
/// cyclically) with the full allowed bias.
#[derive(Clone, Debug)]
pub struct GreedyTarget {
    target: Vec<u8>,
    epsilon: f64,
}

impl GreedyTarget {
    pub fn new(target: Vec<u8>, epsilon: f64) -> Result<Self> {
        if target.is_empty() {
            return Err(Error::Empty("greedy target string"));
        }
        Ok(GreedyTarget { target, epsilon })
    }

    pub fn all_zeros(epsilon: f64) -> Self {
        GreedyTarget { target: vec![0], epsilon }
    }
}

impl BiasStrategy for GreedyTarget {
    fn bias(&self, history: &[u8], _z: u32) -> f64 {
        let want = self.target[history.len() % self.target.len()];
        if want == 0 {
            self.epsilon
        } else {
            -self.epsilon
        }
    }
}

/// Steers consecutive 4-bit groups toward one fixed measurement setting.
#[derive(Clone, Debug)]
pub struct SettingSteering {
    setting: Setting,
    epsilon: f64,
}

impl SettingSteering {
    pub fn new(setting: Setting, epsilon: f64) -> Self {
        SettingSteering { setting, epsilon }
    }
}

impl BiasStrategy for SettingSteering {
    fn bias(&self, history: &[u8], _z: u32) -> f64 {
        if self.setting.bit(history.len() % 4) == 0 {
            self.epsilon
        } else {
            -self.epsilon
        }
    }
}

/// Bits emitted so far and the bias used for each.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SvTranscript {
    pub bits: Vec<u8>,
    pub biases: Vec<f64>,
}

impl SvTranscript {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// A source instance: strategy, adversary symbol and the transcript it has produced.
#[derive(Debug, Clone)]
pub struct SvSource {
    epsilon: f64,
    strategy: Arc<dyn BiasStrategy>,
    z: u32,
    transcript: SvTranscript,
}

impl SvSource {
    pub fn new(epsilon: f64, strategy: Arc<dyn BiasStrategy>, z: u32) -> Result<Self> {
        validate_epsilon(epsilon)?;
        Ok(SvSource { epsilon, strategy, z, transcript: SvTranscript::default() })
    }

    pub fn honest() -> Self {
        SvSource { epsilon: 0.0, strategy: Arc::new(Honest), z: 0, transcript: SvTranscript::default() }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn transcript(&self) -> &SvTranscript {
        &self.transcript
    }

    pub fn into_transcript(self) -> SvTranscript {
        self.transcript
    }

    pub fn next_bit<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<u8> {
        let b = self.strategy.bias(&self.transcript.bits, self.z);
        if !(b.abs() <= self.epsilon) {
            return Err(Error::StrategyViolation { bias: b, epsilon: self.epsilon, step: self.transcript.len() });
        }
        let bit = u8::from(rng.random::<f64>() >= 0.5 + b);
        self.transcript.bits.push(bit);
        self.transcript.biases.push(b);
        Ok(bit)
    }

    /// Four bits, bit `i` becoming the input of party `i + 1`.
    pub fn draw_setting<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Setting> {
        let mut bits = [0u8; 4];
        for b in &mut bits {
            *b = self.next_bit(rng)?;
        }
        Ok(Setting::from_bits(bits))
    }

    /// Index in `0..n` from `log2 n` bits read big-endian.
    pub fn draw_index<R: Rng + ?Sized>(&mut self, n: u64, rng: &mut R) -> Result<u64> {
        let width = index_width(n)?;
        let mut index = 0u64;
        for _ in 0..width {
            index = (index << 1) | u64::from(self.next_bit(rng)?);
        }
        Ok(index)
    }
}

/// `log2 n` for a power of two `n`.
pub fn index_width(n: u64) -> Result<u32> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::param("n", format!("{n} is not a power of two")));
    }
    Ok(n.trailing_zeros())
}

/// `((1/2 − ε)^L, (1/2 + ε)^L)`: extreme probabilities of any fixed `L`-bit string.
pub fn string_probability_bounds(epsilon: f64, length: u32) -> (f64, f64) {
    let l = length as i32;
    ((0.5 - epsilon).powi(l), (0.5 + epsilon).powi(l))
}

/// Exact distribution of the next `length` bits after `prefix`, indexed by
/// the big-endian value of the emitted string. Walks the full strategy tree.
pub fn exact_string_distribution(
    strategy: &dyn BiasStrategy,
    epsilon: f64,
    z: u32,
    prefix: &[u8],
    length: u32,
) -> Result<Vec<f64>> {
    if length > 24 {
        return Err(Error::SizeGuard(format!("{length}-bit strategy tree")));
    }
    let mut probs = vec![1.0];
    let mut history = prefix.to_vec();
    for _ in 0..length {
        let mut next = Vec::with_capacity(probs.len() * 2);
        for (value, &p) in probs.iter().enumerate() {
            // rebuild this leaf's history from its big-endian value
            let depth = history.len() - prefix.len();
            for (k, h) in history[prefix.len()..].iter_mut().enumerate() {
                *h = ((value >> (depth - 1 - k)) & 1) as u8;
            }
            let b = strategy.bias(&history, z);
            if !(b.abs() <= epsilon) {
                return Err(Error::StrategyViolation { bias: b, epsilon, step: history.len() });
            }
            next.push(p * (0.5 + b));
            next.push(p * (0.5 - b));
        }
        probs = next;
        history.push(0);
    }
    Ok(probs)
}

/// Replays a transcript against its strategy and checks every recorded bias.
pub fn audit(transcript: &SvTranscript, strategy: &dyn BiasStrategy, epsilon: f64, z: u32) -> Result<()> {
    if transcript.bits.len() != transcript.biases.len() {
        return Err(Error::param("transcript", "bits and biases differ in length"));
    }
    for step in 0..transcript.bits.len() {
        let b = strategy.bias(&transcript.bits[..step], z);
        if b != transcript.biases[step] {
            return Err(Error::param("transcript", format!("bias mismatch at step {step}")));
        }
        if !(b.abs() <= epsilon) {
            return Err(Error::StrategyViolation { bias: b, epsilon, step });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(2024)
    }

    #[test]
    fn fair_coin_mean() {
        let mut src = SvSource::honest();
        let mut r = rng();
        let ones: u32 = (0..100_000).map(|_| u32::from(src.next_bit(&mut r).unwrap())).sum();
        let mean = f64::from(ones) / 1e5;
        assert!((mean - 0.5).abs() < 0.01);
    }

    #[test]
    fn violating_strategy_is_rejected() {
        let mut src = SvSource::new(0.1, Arc::new(ConstantBias(0.2)), 0).unwrap();
        assert!(matches!(src.next_bit(&mut rng()), Err(Error::StrategyViolation { step: 0, .. })));
        assert!(src.transcript().is_empty());
        assert!(SvSource::new(0.5, Arc::new(Honest), 0).is_err());
    }

    #[test]
    fn greedy_zeros_exact_probability() {
        let g = GreedyTarget::all_zeros(0.1);
        let d = exact_string_distribution(&g, 0.1, 0, &[], 3).unwrap();
        assert!((d[0] - 0.216).abs() < 1e-15);
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_bias_setting_probability() {
        let d = exact_string_distribution(&ConstantBias(0.1), 0.1, 0, &[], 4).unwrap();
        assert!((d[0] - 0.1296).abs() < 1e-15);
        let d = exact_string_distribution(&ConstantBias(0.1), 0.1, 0, &[], 2).unwrap();
        assert!((d[0] - 0.36).abs() < 1e-15);
    }

    #[test]
    fn setting_uses_bit_i_for_party_i() {
        let mut src = SvSource::new(0.3, Arc::new(GreedyTarget::new(vec![0, 0, 0, 1], 0.3).unwrap()), 0).unwrap();
        let mut r = rng();
        for _ in 0..200 {
            let u = src.draw_setting(&mut r).unwrap();
            let t = src.transcript();
            let bits: [u8; 4] = t.bits[t.len() - 4..].try_into().unwrap();
            assert_eq!(u, Setting::from_bits(bits));
        }
        let u = Setting::from_bits([0, 0, 0, 1]);
        assert_eq!(u.to_string(), "0001");
        assert!(u.in_u0());
    }

    #[test]
    fn uniform_settings_chi_square() {
        let mut src = SvSource::honest();
        let mut r = rng();
        let mut counts = [0u32; 16];
        let n = 100_000;
        for _ in 0..n {
            counts[src.draw_setting(&mut r).unwrap().index()] += 1;
        }
        let expected = f64::from(n) / 16.0;
        let chi2: f64 = counts.iter().map(|&c| (f64::from(c) - expected).powi(2) / expected).sum();
        // 15 degrees of freedom, p = 0.001 critical value
        assert!(chi2 < 37.70, "chi2 = {chi2}");
        assert_eq!(src.transcript().len(), 4 * n as usize);
    }

    #[test]
    fn draw_index_edges() {
        let mut src = SvSource::honest();
        let mut r = rng();
        assert_eq!(src.draw_index(1, &mut r).unwrap(), 0);
        assert!(src.transcript().is_empty());
        assert!(src.draw_index(6, &mut r).is_err());
        let mut counts = [0u32; 4];
        for _ in 0..40_000 {
            counts[src.draw_index(4, &mut r).unwrap() as usize] += 1;
        }
        for c in counts {
            assert!((f64::from(c) / 40_000.0 - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn index_distribution_respects_bounds_exhaustively() {
        let eps = 0.15;
        let strategies: Vec<Box<dyn BiasStrategy>> = vec![
            Box::new(Honest),
            Box::new(ConstantBias(eps)),
            Box::new(ConstantBias(-eps)),
            Box::new(GreedyTarget::new(vec![1, 0, 1], eps).unwrap()),
            Box::new(SettingSteering::new(Setting::new(0b0110).unwrap(), eps)),
        ];
        for n in [1u64, 2, 4, 8, 16] {
            let width = index_width(n).unwrap();
            let (lo, hi) = string_probability_bounds(eps, width);
            for s in &strategies {
                for prefix in [&[][..], &[1, 0, 0][..]] {
                    let d = exact_string_distribution(s.as_ref(), eps, 0, prefix, width).unwrap();
                    assert_eq!(d.len() as u64, n);
                    for &p in &d {
                        assert!(p <= hi + 1e-15 && p >= lo - 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn probability_bounds_arithmetic() {
        assert_eq!(string_probability_bounds(0.0, 5), (1.0 / 32.0, 1.0 / 32.0));
        let (lo, hi) = string_probability_bounds(0.1, 2);
        assert!((lo - 0.16).abs() < 1e-15 && (hi - 0.36).abs() < 1e-15);
        let (lo, hi) = string_probability_bounds(0.5 - 1e-9, 1);
        assert!((lo - 1e-9).abs() < 1e-15 && (hi - 1.0).abs() < 1e-8);
    }

    #[test]
    fn audit_replays_transcript() {
        let strat = Arc::new(GreedyTarget::new(vec![0, 1], 0.2).unwrap());
        let mut src = SvSource::new(0.2, strat.clone(), 0).unwrap();
        let mut r = rng();
        for _ in 0..64 {
            src.next_bit(&mut r).unwrap();
        }
        audit(src.transcript(), strat.as_ref(), 0.2, 0).unwrap();
        let mut tampered = src.transcript().clone();
        tampered.biases[3] = 0.0;
        assert!(audit(&tampered, strat.as_ref(), 0.2, 0).is_err());
        let json = serde_json::to_string(src.transcript()).unwrap();
        let back: SvTranscript = serde_json::from_str(&json).unwrap();
        assert_eq!(&back, src.transcript());
    }

    #[test]
    fn empirical_string_frequency_within_bounds() {
        // fixed 3-bit target string under a steering strategy aimed elsewhere
        let eps = 0.2;
        let strat = Arc::new(GreedyTarget::new(vec![1, 1, 0], eps).unwrap());
        let target = [0u8, 1, 0];
        let runs = 1_000_000u32;
        let mut r = rng();
        let mut hits = 0u32;
        for _ in 0..runs {
            let mut src = SvSource::new(eps, strat.clone(), 0).unwrap();
            let s: Vec<u8> = (0..3).map(|_| src.next_bit(&mut r).unwrap()).collect();
            hits += u32::from(s == target);
        }
        let f = f64::from(hits) / f64::from(runs);
        let (lo, hi) = string_probability_bounds(eps, 3);
        let sigma = (hi * (1.0 - hi) / f64::from(runs)).sqrt().max((lo * (1.0 - lo) / f64::from(runs)).sqrt());
        assert!(f >= lo - 3.0 * sigma && f <= hi + 3.0 * sigma, "f = {f}");
    }
}
