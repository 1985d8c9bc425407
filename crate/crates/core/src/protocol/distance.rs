//! Distance of an output symbol from uniform, conditioned on the adversary's variables.

use serde::Serialize;

use crate::error::{Error, Result};

/// Distribution of `S` given one value `(z, w)` of the adversary's variables.
#[derive(Clone, Debug, Serialize)]
pub struct Conditional {
    pub w: u32,
    pub z: u32,
    /// `P(z | w)`.
    pub weight: f64,
    /// `P(S = s | z, w)` for each symbol `s`.
    pub dist: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceReport {
    /// `½ max_{s,w,z} |P(s|z,w) − 1/|Σ||`.
    pub d: f64,
    /// `½ Σ_s max_w Σ_z P(z|w) |P(s|z,w) − 1/|Σ||`.
    pub d_c: f64,
    pub alphabet: usize,
    pub conditionals: Vec<Conditional>,
}

const TOL: f64 = 1e-9;

pub fn distance_d(conditionals: Vec<Conditional>) -> Result<DistanceReport> {
    let first = conditionals.first().ok_or(Error::Empty("conditional family"))?;
    let sigma = first.dist.len();
    if sigma == 0 {
        return Err(Error::Empty("output alphabet"));
    }
    for c in &conditionals {
        if c.dist.len() != sigma {
            return Err(Error::param("conditionals", "alphabet sizes differ"));
        }
        let s: f64 = c.dist.iter().sum();
        if (s - 1.0).abs() > TOL || c.dist.iter().any(|&p| p < -TOL) {
            return Err(Error::Unnormalized(s));
        }
        if !(c.weight >= 0.0) {
            return Err(Error::param("weight", format!("{} is negative", c.weight)));
        }
    }
    let mut ws: Vec<u32> = conditionals.iter().map(|c| c.w).collect();
    ws.sort_unstable();
    ws.dedup();
    for &w in &ws {
        let total: f64 = conditionals.iter().filter(|c| c.w == w).map(|c| c.weight).sum();
        if (total - 1.0).abs() > TOL {
            return Err(Error::param("weight", format!("P(z | w = {w}) sums to {total}")));
        }
    }
    let uniform = 1.0 / sigma as f64;
    let d = 0.5 * conditionals.iter().flat_map(|c| c.dist.iter().map(|p| (p - uniform).abs())).fold(0.0, f64::max);
    let d_c = 0.5
        * (0..sigma)
            .map(|s| {
                ws.iter()
                    .map(|&w| {
                        conditionals
                            .iter()
                            .filter(|c| c.w == w)
                            .map(|c| c.weight * (c.dist[s] - uniform).abs())
                            .sum::<f64>()
                    })
                    .fold(0.0, f64::max)
            })
            .sum::<f64>();
    Ok(DistanceReport { d, d_c, alphabet: sigma, conditionals })
}

impl DistanceReport {
    /// `d_c ≤ |Σ| d`.
    pub fn satisfies_conversion(&self) -> bool {
        self.d_c <= self.alphabet as f64 * self.d + 1e-12
    }
}

/// Standard normal quantile for two-sided 99% intervals.
pub const Z99: f64 = 2.575_829_303_548_901;

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Binomial standard error `sqrt(p(1 − p)/n)`.
pub fn binomial_sigma(p: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}
