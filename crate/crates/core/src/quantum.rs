//! Four-qubit state and single-qubit X/Z measurements that reach the
//! algebraic minimum of the Bell functional, plus a two-parameter noise model.
//!
//! Qubit `i` belongs to party `i + 1`; computational basis index bit `i` is
//! qubit `i`, matching the box index convention in [`crate::bell`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bell::{NsBox, Outcome, Setting, DEFAULT_TOL, OUTCOMES, PARTIES, SETTINGS, TABLE_LEN};
use crate::error::{Error, Result};

const DIM: usize = 16;
type Qubit = [Complex64; 2];

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Pure four-qubit state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: [Complex64; DIM],
}

impl StateVector {
    pub fn new(amplitudes: [Complex64; DIM]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::param("state", format!("squared norm {norm} != 1")));
        }
        Ok(StateVector { amplitudes })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(mut amplitudes: [Complex64; DIM]) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::param("state", "zero vector"));
        }
        amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(StateVector { amplitudes })
    }

    pub fn amplitudes(&self) -> &[Complex64; DIM] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn with_global_phase(&self, phi: f64) -> StateVector {
        let ph = Complex64::from_polar(1.0, phi);
        StateVector { amplitudes: self.amplitudes.map(|a| a * ph) }
    }

    pub fn density(&self) -> DensityMatrix {
        let mut rho = [[Complex64::default(); DIM]; DIM];
        for (i, row) in rho.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.amplitudes[i] * self.amplitudes[j].conj();
            }
        }
        DensityMatrix { rho }
    }
}

fn two_qubit(a: Qubit, b: Qubit) -> [Complex64; 4] {
    // index bit 0 = first qubit
    [a[0] * b[0], a[1] * b[0], a[0] * b[1], a[1] * b[1]]
}

fn pair_sum(a: [Complex64; 4], b: [Complex64; 4], sign: f64) -> [Complex64; 4] {
    std::array::from_fn(|i| (a[i] + b[i] * sign) * FRAC_1_SQRT_2)
}

use std::f64::consts::FRAC_1_SQRT_2;

fn ket0() -> Qubit {
    [c(1.0), c(0.0)]
}
fn ket1() -> Qubit {
    [c(0.0), c(1.0)]
}
fn ket_plus() -> Qubit {
    [c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)]
}
fn ket_minus() -> Qubit {
    [c(FRAC_1_SQRT_2), c(-FRAC_1_SQRT_2)]
}

/// `(|φ−⟩|φ̃+⟩ + |ψ+⟩|ψ̃−⟩)/√2` with parties 1,2 in the first pair and 3,4 in
/// the second, where `|φ̃+⟩ = (|0+⟩ + |1−⟩)/√2` and `|ψ̃−⟩ = (|0−⟩ − |1+⟩)/√2`.
pub fn build_state() -> StateVector {
    let phi_minus = pair_sum(two_qubit(ket0(), ket0()), two_qubit(ket1(), ket1()), -1.0);
    let psi_plus = pair_sum(two_qubit(ket0(), ket1()), two_qubit(ket1(), ket0()), 1.0);
    let phi_tilde_plus = pair_sum(two_qubit(ket0(), ket_plus()), two_qubit(ket1(), ket_minus()), 1.0);
    let psi_tilde_minus = pair_sum(two_qubit(ket0(), ket_minus()), two_qubit(ket1(), ket_plus()), -1.0);
    let mut amplitudes = [Complex64::default(); DIM];
    for (idx, amp) in amplitudes.iter_mut().enumerate() {
        let (lo, hi) = (idx & 3, idx >> 2);
        *amp = (phi_minus[lo] * phi_tilde_plus[hi] + psi_plus[lo] * psi_tilde_minus[hi]) * FRAC_1_SQRT_2;
    }
    StateVector { amplitudes }
}

/// Per party and per input bit, the two basis vectors (outcome 0, outcome 1).
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBasis {
    vectors: [[[Qubit; 2]; 2]; PARTIES],
}

impl MeasurementBasis {
    pub fn new(vectors: [[[Qubit; 2]; 2]; PARTIES]) -> Result<Self> {
        for (party, per_input) in vectors.iter().enumerate() {
            for pair in per_input {
                let [a, b] = pair;
                let na = a[0].norm_sqr() + a[1].norm_sqr();
                let nb = b[0].norm_sqr() + b[1].norm_sqr();
                let overlap = (a[0].conj() * b[0] + a[1].conj() * b[1]).norm();
                if (na - 1.0).abs() > 1e-12 || (nb - 1.0).abs() > 1e-12 || overlap > 1e-12 {
                    return Err(Error::param("basis", format!("party {} basis is not orthonormal", party + 1)));
                }
            }
        }
        Ok(MeasurementBasis { vectors })
    }

    /// X basis `{|+⟩, |−⟩}` for input 0 and Z basis `{|0⟩, |1⟩}` for input 1.
    pub fn ideal() -> Self {
        let per_party = [[ket_plus(), ket_minus()], [ket0(), ket1()]];
        MeasurementBasis { vectors: [per_party; PARTIES] }
    }

    pub fn vector(&self, party: usize, input: u8, outcome: u8) -> Qubit {
        self.vectors[party][usize::from(input)][usize::from(outcome)]
    }

    /// Rotates every basis vector by `theta` about the Bloch `y` axis, which is
    /// orthogonal to both the X and Z measurement axes.
    pub fn rotated(&self, theta: f64) -> Self {
        let (s, co) = (theta / 2.0).sin_cos();
        let rot = |v: Qubit| -> Qubit { [v[0] * co - v[1] * s, v[0] * s + v[1] * co] };
        MeasurementBasis { vectors: self.vectors.map(|inputs| inputs.map(|pair| pair.map(rot))) }
    }

    /// Product vector `⊗_i |b^{u_i}_{x_i}⟩` in the computational basis.
    fn product_vector(&self, x: Outcome, u: Setting) -> [Complex64; DIM] {
        let factors: [Qubit; PARTIES] = std::array::from_fn(|i| self.vector(i, u.bit(i), x.bit(i)));
        std::array::from_fn(|q| (0..PARTIES).map(|i| factors[i][(q >> i) & 1]).product())
    }
}

/// 16×16 density operator.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    rho: [[Complex64; DIM]; DIM],
}

impl DensityMatrix {
    pub fn maximally_mixed() -> Self {
        let mut rho = [[Complex64::default(); DIM]; DIM];
        for (i, row) in rho.iter_mut().enumerate() {
            row[i] = c(1.0 / DIM as f64);
        }
        DensityMatrix { rho }
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.rho[i][j]
    }

    pub fn trace(&self) -> f64 {
        (0..DIM).map(|i| self.rho[i][i].re).sum()
    }

    fn expectation(&self, v: &[Complex64; DIM]) -> f64 {
        let mut total = Complex64::default();
        for i in 0..DIM {
            let row: Complex64 = (0..DIM).map(|j| self.rho[i][j] * v[j]).sum();
            total += v[i].conj() * row;
        }
        total.re
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Weight of the maximally mixed state.
    pub state_mixing: f64,
    /// Rotation of every party's bases, in radians.
    #[serde(default)]
    pub basis_rotation: f64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.state_mixing) {
            return Err(Error::param("state_mixing", format!("{} outside [0, 1]", self.state_mixing)));
        }
        if !self.basis_rotation.is_finite() {
            return Err(Error::param("basis_rotation", "must be finite"));
        }
        Ok(())
    }
}

/// Born-rule box of a pure state.
pub fn born_box(state: &StateVector, bases: &MeasurementBasis) -> Result<NsBox> {
    born_table(bases, |v| {
        let amp: Complex64 = v.iter().zip(state.amplitudes()).map(|(b, a)| b.conj() * a).sum();
        amp.norm_sqr()
    })
}

/// Born-rule box of a density operator.
pub fn born_box_mixed(rho: &DensityMatrix, bases: &MeasurementBasis) -> Result<NsBox> {
    born_table(bases, |v| rho.expectation(v))
}

fn born_table(bases: &MeasurementBasis, prob: impl Fn(&[Complex64; DIM]) -> f64) -> Result<NsBox> {
    let mut p = [0.0; TABLE_LEN];
    for u in Setting::all() {
        for x in Outcome::all() {
            // clamp tiny negative round-off from the mixed path
            p[x.index() * SETTINGS + u.index()] = prob(&bases.product_vector(x, u)).max(0.0);
        }
    }
    debug_assert_eq!(p.len(), OUTCOMES * SETTINGS);
    NsBox::with_tol(p, DEFAULT_TOL)
}

/// `ρ = (1−m)|Ψ⟩⟨Ψ| + m·I/16` and bases rotated by the noise angle.
pub fn apply_noise(
    state: &StateVector,
    bases: &MeasurementBasis,
    noise: &NoiseSpec,
) -> Result<(DensityMatrix, MeasurementBasis)> {
    noise.validate()?;
    let pure = state.density();
    let mixed = DensityMatrix::maximally_mixed();
    let m = noise.state_mixing;
    let mut rho = pure.rho;
    for i in 0..DIM {
        for j in 0..DIM {
            rho[i][j] = pure.rho[i][j] * (1.0 - m) + mixed.rho[i][j] * m;
        }
    }
    let rotated = if noise.basis_rotation == 0.0 { bases.clone() } else { bases.rotated(noise.basis_rotation) };
    Ok((DensityMatrix { rho }, rotated))
}

/// Box produced by the ideal state and bases under `noise`.
pub fn noisy_quantum_box(noise: &NoiseSpec) -> Result<NsBox> {
    let (rho, bases) = apply_noise(&build_state(), &MeasurementBasis::ideal(), noise)?;
    born_box_mixed(&rho, &bases)
}

/// The noiseless box.
pub fn ideal_quantum_box() -> NsBox {
    born_box(&build_state(), &MeasurementBasis::ideal()).expect("ideal quantum statistics are a valid box")
}

/// Fits the slope `c` in `bell_value ≈ c·θ` at small rotation angles.
pub fn rotation_sensitivity(thetas: &[f64]) -> Result<Vec<(f64, f64)>> {
    let f = crate::bell::BellFunctional::standard();
    thetas
        .iter()
        .map(|&theta| {
            let b = noisy_quantum_box(&NoiseSpec { state_mixing: 0.0, basis_rotation: theta })?;
            Ok((theta, crate::bell::bell_value(&b, &f)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{bell_value, is_no_signaling, BellFunctional};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Amplitudes obtained by expanding the state by hand into the
    /// computational basis, indexed `q1 + 2 q2 + 4 q3 + 8 q4`:
    /// every amplitude is ±1/4.
    const EXPANDED: [f64; 16] =
        [0.25, 0.25, 0.25, -0.25, 0.25, -0.25, -0.25, -0.25, 0.25, -0.25, -0.25, -0.25, -0.25, -0.25, -0.25, 0.25];

    #[test]
    fn state_matches_hand_expansion() {
        let s = build_state();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        for (a, e) in s.amplitudes().iter().zip(EXPANDED) {
            assert!((a.re - e).abs() < 1e-15 && a.im.abs() < 1e-15);
        }
        let oracle = StateVector::new(EXPANDED.map(c)).unwrap();
        assert!((s.inner(&oracle).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ideal_box_reaches_algebraic_minimum() {
        let f = BellFunctional::standard();
        assert!(bell_value(&ideal_quantum_box(), &f).abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_is_uniform() {
        let b = noisy_quantum_box(&NoiseSpec { state_mixing: 1.0, basis_rotation: 0.0 }).unwrap();
        assert!(b.table().iter().all(|&v| (v - 1.0 / 16.0).abs() < 1e-12));
        assert!((bell_value(&b, &BellFunctional::standard()) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn mixing_scales_bell_value_linearly() {
        let f = BellFunctional::standard();
        for m in [0.0, 0.1, 0.25, 0.5, 1.0] {
            let b = noisy_quantum_box(&NoiseSpec { state_mixing: m, basis_rotation: 0.0 }).unwrap();
            assert!((bell_value(&b, &f) - 4.0 * m).abs() < 1e-9, "m = {m}");
        }
    }

    #[test]
    fn zero_noise_is_identity() {
        let s = build_state();
        let bases = MeasurementBasis::ideal();
        let (rho, rotated) = apply_noise(&s, &bases, &NoiseSpec::default()).unwrap();
        assert_eq!(rotated, bases);
        assert_eq!(rho, s.density());
        let (rho, _) = apply_noise(&s, &bases, &NoiseSpec { state_mixing: 1.0, basis_rotation: 0.0 }).unwrap();
        assert_eq!(rho, DensityMatrix::maximally_mixed());
        assert!(apply_noise(&s, &bases, &NoiseSpec { state_mixing: 1.5, basis_rotation: 0.0 }).is_err());
    }

    #[test]
    fn rotation_noise_grows_continuously() {
        let pts = rotation_sensitivity(&[1e-3, 1e-2, 1e-1]).unwrap();
        let mut prev = 0.0;
        for &(theta, v) in &pts {
            assert!(v > prev, "bell value must grow with theta");
            // bounded by a constant times theta at small angles
            assert!(v / theta < 10.0, "theta {theta}: value {v}");
            prev = v;
        }
    }

    fn random_qubit(rng: &mut ChaCha8Rng) -> Qubit {
        let v = [
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5),
        ];
        let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        [v[0] / n, v[1] / n]
    }

    fn random_basis(rng: &mut ChaCha8Rng) -> MeasurementBasis {
        let vectors = std::array::from_fn(|_| {
            std::array::from_fn(|_| {
                let a = random_qubit(rng);
                // orthogonal complement, with a random phase
                let ph = Complex64::from_polar(1.0, rng.random::<f64>() * 6.0);
                [a, [-a[1].conj() * ph, a[0].conj() * ph]]
            })
        });
        MeasurementBasis::new(vectors).unwrap()
    }

    #[test]
    fn random_quantum_statistics_are_no_signaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let amps = std::array::from_fn(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            let s = StateVector::normalized(amps).unwrap();
            let bases = random_basis(&mut rng);
            let b = born_box(&s, &bases).unwrap();
            assert!(is_no_signaling(b.table(), 1e-9).0);
        }
    }

    proptest::proptest! {
        #[test]
        fn global_phase_invariance(phi in 0.0f64..6.3) {
            let s = build_state();
            let bases = MeasurementBasis::ideal().rotated(0.3);
            let a = born_box(&s, &bases).unwrap();
            let b = born_box(&s.with_global_phase(phi), &bases).unwrap();
            for (x, y) in a.table().iter().zip(b.table()) {
                proptest::prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
