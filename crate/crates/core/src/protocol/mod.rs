//! The amplification protocol: draw settings, select one box per device,
//! test the Bell value of the selected boxes and XOR their majority bits.

pub mod bounds;
pub mod distance;
pub mod simulate;

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bell::{standard_bell_value, BellFunctional, NsBox, Outcome, Setting, TimeOrderedDevice};
use crate::error::{Error, Result};
use crate::sv::{SvSource, SvTranscript};

pub use bounds::{
    acceptance_threshold, azuma_rejection_bound, completeness_bound, f_epsilon, proposition_bound,
    robustness_threshold, xor_bias_bound, xor_zero_probability, PropositionBound,
};
pub use distance::{distance_d, Conditional, DistanceReport};
pub use simulate::{estimate_output_bias, run_trial, Adversary, AdversaryComponent, BiasEstimate, TrialRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolParams {
    pub epsilon: f64,
    pub delta: f64,
    pub mu: f64,
    pub k: usize,
    /// de Finetti parameter; only enters the final bound.
    pub t: f64,
    /// Kept runs requested per device; truncated to a power of two before selection.
    pub n: Vec<u64>,
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        self.validate_scalars()?;
        if self.n.len() != self.k {
            return Err(Error::param("n", format!("{} entries for k = {}", self.n.len(), self.k)));
        }
        if self.n.contains(&0) {
            return Err(Error::param("n", "every device needs at least one kept run"));
        }
        Ok(())
    }

    /// Everything except the per-device counts `n`.
    pub fn validate_scalars(&self) -> Result<()> {
        crate::sv::validate_epsilon(self.epsilon)?;
        if !(self.delta > 0.0 && self.delta <= 8.0) {
            return Err(Error::param("delta", format!("{} outside (0, 8]", self.delta)));
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(Error::param("mu", format!("{} outside (0, 1)", self.mu)));
        }
        if self.k == 0 {
            return Err(Error::param("k", "at least one device is required"));
        }
        if !(self.t > 0.0) {
            return Err(Error::param("t", "must be positive"));
        }
        let th = acceptance_threshold(self);
        if !(th > 0.0 && th < 1.0) {
            return Err(Error::param("threshold", format!("{th} outside (0, 1)")));
        }
        Ok(())
    }
}

/// Largest power of two not exceeding `n` (`n ≥ 1`).
pub fn truncate_pow2(n: u64) -> u64 {
    1 << (63 - n.leading_zeros())
}

#[derive(Clone, Debug, Serialize)]
pub struct DeviceTranscript {
    /// Every use, kept or discarded.
    pub uses: Vec<(Setting, Outcome)>,
    /// Indices into `uses` of the kept runs, after truncation.
    pub kept: Vec<usize>,
    /// Settings drawn (`m_j`).
    pub realized_m: usize,
    /// Kept runs after truncation (`n_j`).
    pub n: u64,
    /// Selected kept run (`a_j`).
    pub chosen: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunTranscript {
    pub devices: Vec<DeviceTranscript>,
    pub sv: SvTranscript,
    pub estimation: EstimationRecord,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProtocolResult {
    pub accepted: bool,
    pub z_k: f64,
    pub output_bit: Option<u8>,
    pub majority_bits: Vec<u8>,
    pub theoretical_bound: f64,
}

/// Per-selected-box data for the verification analysis. `zeta` and `bell_values` come from
/// the simulator's knowledge of the true boxes; the accept/abort decision never reads them.
#[derive(Clone, Debug, Default, Serialize)]
pub struct EstimationRecord {
    pub b: Vec<u8>,
    /// Bell value `δ_l` of the box behind the selected run.
    pub bell_values: Vec<f64>,
    /// `ζ_l = (1/2 − ε)⁴ δ_l`.
    pub zeta: Vec<f64>,
    /// `X_l = Σ_{i≤l} (ζ_i − B_i)`.
    pub x: Vec<f64>,
}

impl EstimationRecord {
    fn push(&mut self, b: u8, bell: f64, epsilon: f64) {
        let zeta = (0.5 - epsilon).powi(4) * bell;
        let prev = self.x.last().copied().unwrap_or(0.0);
        self.b.push(b);
        self.bell_values.push(bell);
        self.zeta.push(zeta);
        self.x.push(prev + zeta - f64::from(b));
    }

    /// Largest `|X_l − X_{l−1}|`.
    pub fn max_increment(&self) -> f64 {
        let mut prev = 0.0;
        self.x
            .iter()
            .map(|&x| {
                let d = (x - prev).abs();
                prev = x;
                d
            })
            .fold(0.0, f64::max)
    }
}

/// True iff at least `μk` of the selected boxes have Bell value below `δ`.
pub fn goodness_oracle(record: &EstimationRecord, params: &ProtocolParams) -> bool {
    let good = record.bell_values.iter().filter(|&&v| v < params.delta).count();
    good as f64 >= params.mu * record.bell_values.len() as f64 - 1e-12
}

/// One run of the protocol on `devices` (one per device, fresh histories) fed by `sv`.
pub fn run_protocol<R: Rng + ?Sized>(
    params: &ProtocolParams,
    devices: &mut [TimeOrderedDevice],
    sv: &mut SvSource,
    rng: &mut R,
) -> Result<(ProtocolResult, RunTranscript)> {
    params.validate()?;
    if devices.len() != params.k {
        return Err(Error::param("devices", format!("{} supplied for k = {}", devices.len(), params.k)));
    }
    if (sv.epsilon() - params.epsilon).abs() > 0.0 {
        return Err(Error::param("sv", "source epsilon differs from protocol epsilon"));
    }
    // step 1: measure every drawn setting, keep those in the inequality
    let mut boxes: Vec<Vec<Arc<NsBox>>> = Vec::with_capacity(params.k);
    let mut transcripts = Vec::with_capacity(params.k);
    for (device, &want) in devices.iter_mut().zip(&params.n) {
        let mut kept = Vec::new();
        let mut kept_boxes = Vec::new();
        while (kept.len() as u64) < want {
            let u = sv.draw_setting(rng)?;
            let (_, nsbox) = device.measure(u, rng)?;
            if u.in_inequality() {
                kept.push(device.history().len() - 1);
                kept_boxes.push(nsbox);
            }
        }
        let n = truncate_pow2(want);
        kept.truncate(n as usize);
        kept_boxes.truncate(n as usize);
        boxes.push(kept_boxes);
        transcripts.push(DeviceTranscript {
            uses: device.history().to_vec(),
            realized_m: device.history().len(),
            kept,
            n,
            chosen: 0,
        });
    }
    // step 2
    for t in transcripts.iter_mut() {
        t.chosen = sv.draw_index(t.n, rng)?;
    }
    // step 3
    let functional = BellFunctional::standard();
    let mut estimation = EstimationRecord::default();
    let mut majority_bits = Vec::with_capacity(params.k);
    for (t, kept_boxes) in transcripts.iter().zip(&boxes) {
        let (u, x) = t.uses[t.kept[t.chosen as usize]];
        let nsbox = &kept_boxes[t.chosen as usize];
        estimation.push(functional.get(x, u), standard_bell_value(nsbox), params.epsilon);
        majority_bits.push(x.majority_bit());
    }
    let z_k = estimation.b.iter().map(|&b| f64::from(b)).sum::<f64>() / params.k as f64;
    // a count landing exactly on the threshold must not be rejected by round-off in 1 − μ
    let accepted = z_k <= acceptance_threshold(params) * (1.0 + 1e-12);
    // step 4
    let output_bit = accepted.then(|| majority_bits.iter().fold(0, |acc, b| acc ^ b));
    let result =
        ProtocolResult { accepted, z_k, output_bit, majority_bits, theoretical_bound: proposition_bound(params).total };
    let transcript = RunTranscript { devices: transcripts, sv: sv.transcript().clone(), estimation };
    Ok((result, transcript))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{FirstUseThen, IidStrategy};
    use crate::quantum::ideal_quantum_box;
    use crate::sv::GreedyTarget;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(k: usize, n: u64) -> ProtocolParams {
        ProtocolParams { epsilon: 0.0, delta: 0.8, mu: 0.9, k, t: 1e6, n: vec![n; k] }
    }

    fn devices(k: usize, nsbox: NsBox) -> Vec<TimeOrderedDevice> {
        let s: Arc<dyn crate::bell::DeviceStrategy> = Arc::new(IidStrategy::new(nsbox));
        (0..k).map(|_| TimeOrderedDevice::new(s.clone(), 0)).collect()
    }

    #[test]
    fn validation() {
        let mut p = params(2, 1);
        assert!(p.validate().is_ok());
        p.mu = 1.0;
        assert!(p.validate().is_err());
        let mut p = params(2, 1);
        p.n = vec![1];
        assert!(p.validate().is_err());
        let mut p = params(2, 1);
        p.delta = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn truncation() {
        assert_eq!(truncate_pow2(1), 1);
        assert_eq!(truncate_pow2(7), 4);
        assert_eq!(truncate_pow2(8), 8);
        assert_eq!(truncate_pow2(178), 128);
    }

    #[test]
    fn honest_quantum_devices_always_accept() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = ideal_quantum_box();
        for _ in 0..50 {
            let p = params(5, 3);
            let mut devs = devices(5, q.clone());
            let mut sv = SvSource::honest();
            let (res, tr) = run_protocol(&p, &mut devs, &mut sv, &mut rng).unwrap();
            assert_eq!(res.z_k, 0.0);
            assert!(res.accepted);
            assert_eq!(res.output_bit, Some(res.majority_bits.iter().fold(0, |a, b| a ^ b)));
            for d in &tr.devices {
                assert_eq!(d.n, 2);
                assert_eq!(d.kept.len(), 2);
                assert!(d.chosen < d.n);
                assert!(d.kept.iter().all(|&i| d.uses[i].0.in_inequality()));
                assert!(d.realized_m >= 3);
                assert_eq!(d.realized_m, d.uses.len());
            }
            assert!(tr.estimation.bell_values.iter().all(|v| v.abs() < 1e-12));
            assert!(goodness_oracle(&tr.estimation, &p));
        }
    }

    #[test]
    fn sv_bits_consumed_in_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = ProtocolParams { epsilon: 0.1, ..params(2, 4) };
        let mut devs = devices(2, ideal_quantum_box());
        let mut sv = SvSource::new(0.1, Arc::new(GreedyTarget::all_zeros(0.1)), 0).unwrap();
        let (_, tr) = run_protocol(&p, &mut devs, &mut sv, &mut rng).unwrap();
        let settings: usize = tr.devices.iter().map(|d| d.realized_m).sum();
        assert_eq!(tr.sv.len(), 4 * settings + 2 * 2);
        crate::sv::audit(&tr.sv, &GreedyTarget::all_zeros(0.1), 0.1, 0).unwrap();
    }

    #[test]
    fn uniform_boxes_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = params(100, 1);
        let accepted = (0..200)
            .filter(|_| {
                let mut devs = devices(100, NsBox::uniform());
                run_protocol(&p, &mut devs, &mut SvSource::honest(), &mut rng).unwrap().0.accepted
            })
            .count();
        assert_eq!(accepted, 0);
    }

    #[test]
    fn supermartingale_increments_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = params(50, 2);
        let s: Arc<dyn crate::bell::DeviceStrategy> =
            Arc::new(FirstUseThen::new(NsBox::uniform(), ideal_quantum_box()));
        let mut devs: Vec<_> = (0..50).map(|_| TimeOrderedDevice::new(s.clone(), 0)).collect();
        let (_, tr) = run_protocol(&p, &mut devs, &mut SvSource::honest(), &mut rng).unwrap();
        let e = &tr.estimation;
        assert!(e.max_increment() <= 1.0);
        assert!(e.zeta.iter().all(|&z| (0.0..=0.5).contains(&z)));
        // only a device's very first use sees the uniform box
        for (d, v) in tr.devices.iter().zip(&e.bell_values) {
            let first_use = d.kept[d.chosen as usize] == 0;
            assert!((v - if first_use { 4.0 } else { 0.0 }).abs() < 1e-12);
        }
    }

    #[test]
    fn goodness_boundary() {
        let p = ProtocolParams { mu: 0.75, ..params(4, 1) };
        let rec = |good: usize| {
            let mut r = EstimationRecord::default();
            for i in 0..4 {
                r.push(0, if i < good { 0.0 } else { 4.0 }, 0.0);
            }
            r
        };
        // ⌈μk⌉ = 3
        assert!(!goodness_oracle(&rec(2), &p));
        assert!(goodness_oracle(&rec(3), &p));
    }

    #[test]
    fn mixture_device_bell_values_follow_posterior() {
        use crate::bell::MixtureStrategy;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mix = MixtureStrategy::new(vec![0.5, 0.5], vec![NsBox::uniform(), NsBox::parity_box()]).unwrap();
        let s: Arc<dyn crate::bell::DeviceStrategy> = Arc::new(mix.clone());
        let p = params(1, 2);
        for _ in 0..20 {
            let mut devs = vec![TimeOrderedDevice::new(s.clone(), 0)];
            let (_, tr) = run_protocol(&p, &mut devs, &mut SvSource::honest(), &mut rng).unwrap();
            let d = &tr.devices[0];
            let idx = d.kept[d.chosen as usize];
            let post = mix.posterior(&d.uses[..idx]).unwrap();
            let expected = post[0] * 4.0;
            assert!((tr.estimation.bell_values[0] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn single_honest_device_majority_within_quarter() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = params(1, 1);
        let trials = 20_000;
        let zeros = (0..trials)
            .filter(|_| {
                let mut devs = devices(1, ideal_quantum_box());
                run_protocol(&p, &mut devs, &mut SvSource::honest(), &mut rng).unwrap().0.output_bit == Some(0)
            })
            .count();
        let f = zeros as f64 / trials as f64;
        assert!((0.25..=0.75).contains(&f));
        assert!((f - 0.5).abs() < 4.0 * (0.25 / trials as f64).sqrt());
    }

    #[test]
    fn wrong_device_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut devs = devices(1, NsBox::uniform());
        assert!(run_protocol(&params(2, 1), &mut devs, &mut SvSource::honest(), &mut rng).is_err());
    }

    #[test]
    fn count_on_threshold_is_accepted() {
        // k = 2000, δ = 0.8, μ = 0.9: threshold·k is 5 in exact arithmetic
        let p = params(2000, 1);
        assert!(5.0 / 2000.0 > acceptance_threshold(&p));
        assert!(5.0 / 2000.0 <= acceptance_threshold(&p) * (1.0 + 1e-12));
        assert!(6.0 / 2000.0 > acceptance_threshold(&p) * (1.0 + 1e-12));
    }
}
