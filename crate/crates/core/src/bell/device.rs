//! Devices that are reused over time. A strategy maps the device's own past
//! settings and outcomes (plus the adversary symbol) to the box used next,
//! so later uses can never influence earlier ones.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use super::{NsBox, Outcome, Setting};
use crate::error::{Error, Result};

pub trait DeviceStrategy: Send + Sync + fmt::Debug {
    fn next_box(&self, history: &[(Setting, Outcome)], z: u32) -> Result<Arc<NsBox>>;
}

/// The same box at every use.
#[derive(Clone, Debug)]
pub struct IidStrategy {
    nsbox: Arc<NsBox>,
}

impl IidStrategy {
    pub fn new(nsbox: NsBox) -> Self {
        IidStrategy { nsbox: Arc::new(nsbox) }
    }
}

impl DeviceStrategy for IidStrategy {
    fn next_box(&self, _history: &[(Setting, Outcome)], _z: u32) -> Result<Arc<NsBox>> {
        Ok(Arc::clone(&self.nsbox))
    }
}

/// `first` on the first use, `later` on every use after.
#[derive(Clone, Debug)]
pub struct FirstUseThen {
    first: Arc<NsBox>,
    later: Arc<NsBox>,
}

impl FirstUseThen {
    pub fn new(first: NsBox, later: NsBox) -> Self {
        FirstUseThen { first: Arc::new(first), later: Arc::new(later) }
    }
}

impl DeviceStrategy for FirstUseThen {
    fn next_box(&self, history: &[(Setting, Outcome)], _z: u32) -> Result<Arc<NsBox>> {
        Ok(Arc::clone(if history.is_empty() { &self.first } else { &self.later }))
    }
}

/// A hidden component `c` is drawn once with probability `weights[c]`, after
/// which every use is an independent use of `components[c]`. Conditioning on
/// the history yields the Bayes-updated mixture.
#[derive(Clone, Debug)]
pub struct MixtureStrategy {
    weights: Vec<f64>,
    components: Vec<NsBox>,
}

impl MixtureStrategy {
    pub fn new(weights: Vec<f64>, components: Vec<NsBox>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(Error::param("weights", "need one weight per component"));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::param("weights", "weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Unnormalized(total));
        }
        Ok(MixtureStrategy { weights, components })
    }

    /// Component weights after observing `history`.
    pub fn posterior(&self, history: &[(Setting, Outcome)]) -> Result<Vec<f64>> {
        let mut w = self.weights.clone();
        for (l, &(u, x)) in history.iter().enumerate() {
            for (wc, comp) in w.iter_mut().zip(&self.components) {
                *wc *= comp.prob(x, u);
            }
            let total: f64 = w.iter().sum();
            if total <= 0.0 {
                return Err(Error::ZeroProbabilityHistory { use_index: l });
            }
            w.iter_mut().for_each(|v| *v /= total);
        }
        Ok(w)
    }
}

impl DeviceStrategy for MixtureStrategy {
    fn next_box(&self, history: &[(Setting, Outcome)], _z: u32) -> Result<Arc<NsBox>> {
        let w = self.posterior(history)?;
        let mut p = [0.0; super::TABLE_LEN];
        for (wc, comp) in w.iter().zip(&self.components) {
            for (acc, v) in p.iter_mut().zip(comp.table()) {
                *acc += wc * v;
            }
        }
        Ok(Arc::new(NsBox::new(p)?))
    }
}

/// Next-use box of a strategy after `history`.
pub fn condition_device(strategy: &dyn DeviceStrategy, history: &[(Setting, Outcome)], z: u32) -> Result<Arc<NsBox>> {
    // the history must be reachable under the strategy itself
    for l in 0..history.len() {
        let (u, x) = history[l];
        if strategy.next_box(&history[..l], z)?.prob(x, u) <= 0.0 {
            return Err(Error::ZeroProbabilityHistory { use_index: l });
        }
    }
    strategy.next_box(history, z)
}

/// One simulated device: a strategy plus the history of its own uses.
#[derive(Debug)]
pub struct TimeOrderedDevice {
    strategy: Arc<dyn DeviceStrategy>,
    z: u32,
    history: Vec<(Setting, Outcome)>,
}

impl TimeOrderedDevice {
    pub fn new(strategy: Arc<dyn DeviceStrategy>, z: u32) -> Self {
        TimeOrderedDevice { strategy, z, history: Vec::new() }
    }

    pub fn history(&self) -> &[(Setting, Outcome)] {
        &self.history
    }

    pub fn current_box(&self) -> Result<Arc<NsBox>> {
        self.strategy.next_box(&self.history, self.z)
    }

    /// Performs the next use; returns the outcome and the box it was drawn from.
    pub fn measure<R: Rng + ?Sized>(&mut self, u: Setting, rng: &mut R) -> Result<(Outcome, Arc<NsBox>)> {
        let nsbox = self.current_box()?;
        let x = nsbox.sample(u, rng);
        self.history.push((u, x));
        Ok((x, nsbox))
    }
}
