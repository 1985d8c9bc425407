//! Monte Carlo runs of the protocol against a finite adversary family.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::distance::{binomial_sigma, distance_d, wilson_interval, Conditional, DistanceReport, Z99};
use super::{goodness_oracle, proposition_bound, run_protocol, PropositionBound, ProtocolParams};
use crate::bell::{DeviceStrategy, TimeOrderedDevice};
use crate::error::{Error, Result};
use crate::sv::{BiasStrategy, SvSource};

/// Device and source behaviour for one value `z` of the adversary's variable.
#[derive(Clone, Debug)]
pub struct AdversaryComponent {
    pub weight: f64,
    /// One strategy shared by every device, or one per device.
    pub devices: Vec<Arc<dyn DeviceStrategy>>,
    pub sv: Arc<dyn BiasStrategy>,
}

/// Finite adversary: `z` is drawn from the component weights at the start of each run.
#[derive(Clone, Debug)]
pub struct Adversary {
    components: Vec<AdversaryComponent>,
}

impl Adversary {
    pub fn new(components: Vec<AdversaryComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Empty("adversary components"));
        }
        if components.iter().any(|c| !(c.weight > 0.0) || c.devices.is_empty()) {
            return Err(Error::param("adversary", "weights must be positive and devices nonempty"));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::param("adversary", format!("weights sum to {total}")));
        }
        Ok(Self { components })
    }

    pub fn single(device: Arc<dyn DeviceStrategy>, sv: Arc<dyn BiasStrategy>) -> Self {
        Self { components: vec![AdversaryComponent { weight: 1.0, devices: vec![device], sv }] }
    }

    pub fn components(&self) -> &[AdversaryComponent] {
        &self.components
    }

    fn draw_z<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        if self.components.len() == 1 {
            return 0;
        }
        let r: f64 = rng.random();
        let mut acc = 0.0;
        for (z, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if r < acc {
                return z as u32;
            }
        }
        self.components.len() as u32 - 1
    }

    fn devices(&self, z: u32, k: usize) -> Result<Vec<TimeOrderedDevice>> {
        let c = &self.components[z as usize];
        match c.devices.len() {
            1 => Ok((0..k).map(|_| TimeOrderedDevice::new(c.devices[0].clone(), z)).collect()),
            n if n == k => Ok(c.devices.iter().map(|s| TimeOrderedDevice::new(s.clone(), z)).collect()),
            n => Err(Error::param("adversary", format!("component {z} has {n} device strategies for k = {k}"))),
        }
    }
}

/// Summary of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub z: u32,
    pub accepted: bool,
    pub z_k: f64,
    pub output_bit: Option<u8>,
    pub selection: Vec<u64>,
    pub realized_m: Vec<usize>,
    /// Verdict of the (μ, δ)-goodness oracle on the selected boxes.
    pub good: bool,
}

/// Random stream for trial `trial`: stream `trial` of the ChaCha8 generator keyed by `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn run_trial(params: &ProtocolParams, adversary: &Adversary, seed: u64, trial: u64) -> Result<TrialRecord> {
    let mut rng = trial_rng(seed, trial);
    let z = adversary.draw_z(&mut rng);
    let mut devices = adversary.devices(z, params.k)?;
    let mut sv = SvSource::new(params.epsilon, adversary.components[z as usize].sv.clone(), z)?;
    let (result, transcript) = run_protocol(params, &mut devices, &mut sv, &mut rng)?;
    Ok(TrialRecord {
        trial,
        z,
        accepted: result.accepted,
        z_k: result.z_k,
        output_bit: result.output_bit,
        selection: transcript.devices.iter().map(|d| d.chosen).collect(),
        realized_m: transcript.devices.iter().map(|d| d.realized_m).collect(),
        good: goodness_oracle(&transcript.estimation, params),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ZEstimate {
    pub z: u32,
    pub prior: f64,
    pub trials: u64,
    pub accepted: u64,
    /// Accepted runs with output 0.
    pub zeros: u64,
    pub p0: Option<f64>,
    pub p0_interval: Option<(f64, f64)>,
    pub p0_sigma: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BiasEstimate {
    pub trials: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    pub acceptance_interval: (f64, f64),
    pub acceptance_sigma: f64,
    /// Fraction of runs whose selected boxes were (μ, δ)-good.
    pub good_fraction: f64,
    pub per_z: Vec<ZEstimate>,
    /// Distances of the output among accepted runs, weighting `z` by `P(z | accept)`;
    /// absent when nothing was accepted.
    pub distance: Option<DistanceReport>,
    /// Standard error of the estimated `d` (half the largest per-`z` binomial error).
    pub d_sigma: Option<f64>,
    pub bound: PropositionBound,
}

/// Runs `trials` independent protocol runs in parallel (on the current rayon pool) and
/// estimates the output distance from uniform. Records come back in trial order.
pub fn estimate_output_bias(
    params: &ProtocolParams,
    adversary: &Adversary,
    trials: u64,
    seed: u64,
) -> Result<(BiasEstimate, Vec<TrialRecord>)> {
    params.validate()?;
    if trials == 0 {
        return Err(Error::param("trials", "at least one trial is required"));
    }
    let records =
        (0..trials).into_par_iter().map(|i| run_trial(params, adversary, seed, i)).collect::<Result<Vec<_>>>()?;
    Ok((summarize(params, adversary, &records), records))
}

pub fn summarize(params: &ProtocolParams, adversary: &Adversary, records: &[TrialRecord]) -> BiasEstimate {
    let trials = records.len() as u64;
    let accepted = records.iter().filter(|r| r.accepted).count() as u64;
    let rate = accepted as f64 / trials.max(1) as f64;
    let per_z: Vec<ZEstimate> = adversary
        .components
        .iter()
        .enumerate()
        .map(|(z, c)| {
            let z = z as u32;
            let mine = records.iter().filter(|r| r.z == z);
            let n = mine.clone().count() as u64;
            let acc = mine.clone().filter(|r| r.accepted).count() as u64;
            let zeros = mine.filter(|r| r.output_bit == Some(0)).count() as u64;
            let p0 = (acc > 0).then(|| zeros as f64 / acc as f64);
            ZEstimate {
                z,
                prior: c.weight,
                trials: n,
                accepted: acc,
                zeros,
                p0,
                p0_interval: p0.map(|_| wilson_interval(zeros, acc, Z99)),
                p0_sigma: p0.map(|p| binomial_sigma(p, acc)),
            }
        })
        .collect();
    let conditionals: Vec<Conditional> = per_z
        .iter()
        .filter_map(|e| {
            e.p0.map(|p| Conditional {
                w: 0,
                z: e.z,
                weight: e.accepted as f64 / accepted as f64,
                dist: vec![p, 1.0 - p],
            })
        })
        .collect();
    let distance = if accepted > 0 { distance_d(conditionals).ok() } else { None };
    let d_sigma = distance.as_ref().map(|_| per_z.iter().filter_map(|e| e.p0_sigma).fold(0.0, f64::max) / 2.0);
    BiasEstimate {
        trials,
        accepted,
        acceptance_rate: rate,
        acceptance_interval: wilson_interval(accepted, trials, Z99),
        acceptance_sigma: binomial_sigma(rate, trials),
        good_fraction: records.iter().filter(|r| r.good).count() as f64 / trials.max(1) as f64,
        per_z,
        distance,
        d_sigma,
        bound: proposition_bound(params),
    }
}
