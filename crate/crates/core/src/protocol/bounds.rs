//! Closed-form bounds used by the protocol.

use serde::Serialize;

use super::ProtocolParams;

/// `(1/2 − ε)⁴ · (δ/2) · (1 − μ)`.
pub fn acceptance_threshold(params: &ProtocolParams) -> f64 {
    (0.5 - params.epsilon).powi(4) * params.delta / 2.0 * (1.0 - params.mu)
}

/// `2^{m−1} Π ε_i`, capped at 1/2: bias of the XOR of independent bits with biases `ε_i`.
pub fn xor_bias_bound(eps: &[f64]) -> f64 {
    (0.5 * eps.iter().map(|e| 2.0 * e).product::<f64>()).min(0.5)
}

/// `P(X_1 ⊕ … ⊕ X_m = 0)` for independent bits with `P(X_i = 0) = p[i]`.
pub fn xor_zero_probability(p: &[f64]) -> f64 {
    p.iter().fold(1.0, |acc, &pi| acc * pi + (1.0 - acc) * (1.0 - pi))
}

/// `k (1/2 − ε)⁸ (1 − μ)² δ²`, the exponent shared by the estimation bounds.
fn estimation_exponent(params: &ProtocolParams) -> f64 {
    params.k as f64 * (0.5 - params.epsilon).powi(8) * (1.0 - params.mu).powi(2) * params.delta.powi(2)
}

/// Lower bound on the rejection probability for devices that are not (μ, δ)-good.
pub fn azuma_rejection_bound(params: &ProtocolParams) -> f64 {
    -(-estimation_exponent(params) / 8.0).exp_m1()
}

/// Lower bound on the acceptance probability for honest devices below [`robustness_threshold`].
pub fn completeness_bound(params: &ProtocolParams) -> f64 {
    -(-estimation_exponent(params) / 2048.0).exp_m1()
}

/// Largest probability of any set of settings that the threshold test treats alike.
pub fn f_epsilon(epsilon: f64) -> f64 {
    let (lo, hi) = (0.5 - epsilon, 0.5 + epsilon);
    hi.powi(4) + lo.powi(4) + 4.0 * lo.powi(3) * hi + 2.0 * lo.powi(2) * hi.powi(2)
}

/// Bell value `δ̃` that honest devices may have and still pass the test w.h.p.
pub fn robustness_threshold(epsilon: f64, mu: f64, delta: f64) -> f64 {
    (1.0 - mu) * delta * (0.5 - epsilon).powi(4) * f_epsilon(epsilon) / (4.0 * (0.5 + epsilon).powi(4))
}

/// Terms of the final distance bound, for `d_c` and for `d`.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct PropositionBound {
    /// `((11 + 7δ)/16)^{μk}`; may overflow to infinity when `δ > 5/7`.
    pub lp_term: f64,
    /// `log₂` of `lp_term`, always finite.
    pub lp_term_log2: f64,
    /// `2 exp(−k(1/2 − ε)⁸(1 − μ)²δ²/8)`.
    pub estimation_term: f64,
    /// `4/√t`.
    pub definetti_term: f64,
    pub total: f64,
    /// The same three terms before converting `d` to `d_c` (each halved).
    pub d_terms: [f64; 3],
    pub d_total: f64,
}

pub fn proposition_bound(params: &ProtocolParams) -> PropositionBound {
    let lp_term_log2 = params.mu * params.k as f64 * ((11.0 + 7.0 * params.delta) / 16.0).log2();
    let lp_term = lp_term_log2.exp2();
    let estimation_term = 2.0 * (-estimation_exponent(params) / 8.0).exp();
    let definetti_term = 4.0 / params.t.sqrt();
    let d_terms = [lp_term / 2.0, estimation_term / 2.0, definetti_term / 2.0];
    PropositionBound {
        lp_term,
        lp_term_log2,
        estimation_term,
        definetti_term,
        total: lp_term + estimation_term + definetti_term,
        d_terms,
        d_total: d_terms.iter().sum(),
    }
}
