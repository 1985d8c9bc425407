//! TOML experiment configuration. Unknown keys are rejected.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bell::{DeviceStrategy, FirstUseThen, IidStrategy, MixtureStrategy, NsBox, Setting};
use crate::error::{Error, Result};
use crate::lp::adversarial_box;
use crate::protocol::{Adversary, AdversaryComponent, ProtocolParams};
use crate::quantum::{noisy_quantum_box, NoiseSpec};
use crate::sv::{BiasStrategy, ConstantBias, GreedyTarget, Honest, SettingSteering};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every trial derives its own stream from it.
    #[serde(default)]
    pub seed: u64,
    pub certify: Option<CertifyConfig>,
    pub simulate: Option<SimulateConfig>,
    pub definetti: Option<DeFinettiConfig>,
    pub quantum_check: Option<QuantumCheckConfig>,
    pub bounds: Option<BoundsConfig>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn section<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T> {
        section.as_ref().ok_or_else(|| Error::Config(format!("missing section `[{name}]`")))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    pub deltas: Vec<f64>,
    /// Also solve every instance with the second LP back-end.
    #[serde(default = "yes")]
    pub cross_check: bool,
}

fn yes() -> bool {
    true
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self { deltas: vec![0.0, 0.1, 0.2, 0.4, 0.8], cross_check: true }
    }
}

/// A single four-party box.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoxSpec {
    Quantum {
        #[serde(default)]
        noise: NoiseSpec,
    },
    Uniform,
    Parity,
    /// LP optimizer for `setting` at Bell value `delta`, leaning towards `guess`.
    Adversarial {
        delta: f64,
        setting: u8,
        guess: u8,
    },
    /// JSON box file (`{"p": [[...16]; 16], "order": "outcome-major"}`).
    File {
        path: PathBuf,
    },
}

impl BoxSpec {
    pub fn build(&self) -> Result<NsBox> {
        match self {
            BoxSpec::Quantum { noise } => noisy_quantum_box(noise),
            BoxSpec::Uniform => Ok(NsBox::uniform()),
            BoxSpec::Parity => Ok(NsBox::parity_box()),
            BoxSpec::Adversarial { delta, setting, guess } => adversarial_box(*delta, Setting::new(*setting)?, *guess),
            BoxSpec::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read box file {}: {e}", path.display())))?;
                NsBox::from_json(&serde_json::from_str(&text)?)
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum DeviceSpec {
    /// The same box on every use.
    Iid {
        #[serde(rename = "box")]
        nsbox: BoxSpec,
    },
    FirstUseThen {
        first: BoxSpec,
        later: BoxSpec,
    },
    /// Hidden choice of box made once, updated by Bayes' rule on the device's own history.
    Mixture {
        weights: Vec<f64>,
        components: Vec<BoxSpec>,
    },
}

impl DeviceSpec {
    pub fn build(&self) -> Result<Arc<dyn DeviceStrategy>> {
        Ok(match self {
            DeviceSpec::Iid { nsbox } => Arc::new(IidStrategy::new(nsbox.build()?)),
            DeviceSpec::FirstUseThen { first, later } => Arc::new(FirstUseThen::new(first.build()?, later.build()?)),
            DeviceSpec::Mixture { weights, components } => Arc::new(MixtureStrategy::new(
                weights.clone(),
                components.iter().map(BoxSpec::build).collect::<Result<_>>()?,
            )?),
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case", deny_unknown_fields)]
pub enum SvSpec {
    Honest,
    Constant {
        bias: f64,
    },
    /// Push every bit towards 0.
    GreedyZeros,
    /// Push bit `i` towards `target[i mod len]`.
    Greedy {
        target: Vec<u8>,
    },
    /// Push each 4-bit setting draw towards `setting`.
    Steer {
        setting: u8,
    },
}

impl SvSpec {
    pub fn build(&self, epsilon: f64) -> Result<Arc<dyn BiasStrategy>> {
        Ok(match self {
            SvSpec::Honest => Arc::new(Honest),
            SvSpec::Constant { bias } => {
                if bias.abs() > epsilon {
                    return Err(Error::Config(format!("constant bias {bias} exceeds epsilon {epsilon}")));
                }
                Arc::new(ConstantBias(*bias))
            }
            SvSpec::GreedyZeros => Arc::new(GreedyTarget::all_zeros(epsilon)),
            SvSpec::Greedy { target } => Arc::new(GreedyTarget::new(target.clone(), epsilon)?),
            SvSpec::Steer { setting } => Arc::new(SettingSteering::new(Setting::new(*setting)?, epsilon)),
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySpec {
    pub weight: f64,
    /// One entry shared by all devices, or one per device.
    pub devices: Vec<DeviceSpec>,
    pub sv: SvSpec,
}

/// Kept runs per device: one count for all, or one per device.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UsesSpec {
    All(u64),
    PerDevice(Vec<u64>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub mu: f64,
    pub k: usize,
    pub t: f64,
    pub n: UsesSpec,
    pub trials: u64,
    pub adversary: Vec<AdversarySpec>,
}

impl SimulateConfig {
    pub fn params(&self) -> Result<ProtocolParams> {
        let n = match &self.n {
            UsesSpec::All(v) => vec![*v; self.k],
            UsesSpec::PerDevice(v) => v.clone(),
        };
        let params = ProtocolParams { epsilon: self.epsilon, delta: self.delta, mu: self.mu, k: self.k, t: self.t, n };
        params.validate()?;
        Ok(params)
    }

    pub fn adversary(&self) -> Result<Adversary> {
        let components = self
            .adversary
            .iter()
            .map(|a| {
                Ok(AdversaryComponent {
                    weight: a.weight,
                    devices: a.devices.iter().map(DeviceSpec::build).collect::<Result<_>>()?,
                    sv: a.sv.build(self.epsilon)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Adversary::new(components)
    }
}

/// Uses per device: explicit, or from the block-size recursion.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeFinettiUses {
    Explicit(Vec<usize>),
    Recursion(BlockSizeSpec),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSizeSpec {
    pub epsilon: f64,
    pub k: usize,
    pub t: f64,
    #[serde(default = "default_k_exponent")]
    pub k_exponent: f64,
}

fn default_k_exponent() -> f64 {
    crate::definetti::DEFAULT_K_EXPONENT
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeFinettiConfig {
    pub uses: DeFinettiUses,
    pub epsilon: f64,
    /// `t_2..t_k`.
    pub t: Vec<f64>,
    pub sv: SvSpec,
    /// Exchangeable mixture: weights and one single-use box `q[u][x]` per component,
    /// shared by every device and use.
    pub weights: Vec<f64>,
    pub components: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumCheckConfig {
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default = "default_mixing_grid")]
    pub mixing_grid: Vec<f64>,
    #[serde(default = "default_rotations")]
    pub rotations: Vec<f64>,
}

fn default_mixing_grid() -> Vec<f64> {
    vec![0.25, 0.5]
}

fn default_rotations() -> Vec<f64> {
    vec![0.01, 0.05, 0.1]
}

impl Default for QuantumCheckConfig {
    fn default() -> Self {
        Self { noise: NoiseSpec::default(), mixing_grid: default_mixing_grid(), rotations: default_rotations() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub mu: f64,
    pub k: usize,
    pub t: f64,
    #[serde(default = "default_k_exponent")]
    pub k_exponent: f64,
}

impl BoundsConfig {
    /// Parameters without per-device counts; only the closed-form bounds use them.
    pub fn params(&self) -> Result<ProtocolParams> {
        let p = ProtocolParams {
            epsilon: self.epsilon,
            delta: self.delta,
            mu: self.mu,
            k: self.k,
            t: self.t,
            n: Vec::new(),
        };
        p.validate_scalars()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIM: &str = r#"
seed = 11
[simulate]
epsilon = 0.1
delta = 0.8
mu = 0.9
k = 3
t = 100.0
n = 2
trials = 10
[[simulate.adversary]]
weight = 1.0
devices = [{ model = "iid", box = { kind = "quantum", noise = { state_mixing = 0.01 } } }]
sv = { strategy = "greedy_zeros" }
"#;

    #[test]
    fn parses_simulate_section() {
        let cfg = ExperimentConfig::from_toml(SIM).unwrap();
        assert_eq!(cfg.seed, 11);
        let sim = cfg.simulate.unwrap();
        assert_eq!(sim.params().unwrap().n, vec![2, 2, 2]);
        sim.adversary().unwrap();
    }

    #[test]
    fn unknown_key_rejected() {
        let err = ExperimentConfig::from_toml(&SIM.replace("mu = 0.9", "mu = 0.9\nmue = 0.9")).unwrap_err();
        assert!(err.to_string().contains("mue"), "{err}");
        let err = ExperimentConfig::from_toml(&SIM.replace("state_mixing", "state_mix")).unwrap_err();
        assert!(err.to_string().contains("state_mix"), "{err}");
    }

    #[test]
    fn missing_field_named() {
        let err = ExperimentConfig::from_toml(&SIM.replace("k = 3\n", "")).unwrap_err();
        assert!(err.to_string().contains("`k`"), "{err}");
    }

    #[test]
    fn mu_one_rejected() {
        let cfg = ExperimentConfig::from_toml(&SIM.replace("mu = 0.9", "mu = 1.0")).unwrap();
        assert!(cfg.simulate.unwrap().params().is_err());
        let b = BoundsConfig { epsilon: 0.0, delta: 0.8, mu: 1.0, k: 10, t: 1.0, k_exponent: 2.0 };
        assert!(b.params().is_err());
    }

    #[test]
    fn definetti_uses_forms() {
        let text = r#"
[definetti]
uses = { epsilon = 0.0, k = 2, t = 2.0 }
epsilon = 0.0
t = [2.0]
sv = { strategy = "honest" }
weights = [1.0]
components = [[[1.0, 0.0], [0.0, 1.0]]]
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert!(matches!(cfg.definetti.unwrap().uses, DeFinettiUses::Recursion(_)));
        let cfg = ExperimentConfig::from_toml(&text.replace("{ epsilon = 0.0, k = 2, t = 2.0 }", "[1, 4]")).unwrap();
        assert!(matches!(cfg.definetti.unwrap().uses, DeFinettiUses::Explicit(_)));
    }

    #[test]
    fn missing_section() {
        let cfg = ExperimentConfig::default();
        let err = ExperimentConfig::section(&cfg.simulate, "simulate").unwrap_err();
        assert!(err.to_string().contains("[simulate]"));
    }
}
