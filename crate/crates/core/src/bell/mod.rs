//! Four-party binary-input/binary-output boxes and the Bell functional they
//! are scored against.
//!
//! Index convention used everywhere in the crate: bit `i` of a setting or
//! outcome index belongs to party `i + 1`, and box tables are stored
//! outcome-major (`p[x * 16 + u]`).

mod device;
mod product;

pub use device::{condition_device, DeviceStrategy, FirstUseThen, IidStrategy, MixtureStrategy, TimeOrderedDevice};
pub use product::{product_box, JointBox};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PARTIES: usize = 4;
pub const SETTINGS: usize = 16;
pub const OUTCOMES: usize = 16;
pub const TABLE_LEN: usize = SETTINGS * OUTCOMES;

/// Default validation tolerance for normalization, positivity and no-signaling.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Measurement settings `(u1, u2, u3, u4)` packed into the low four bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Setting(u8);

impl Setting {
    pub fn new(index: u8) -> Result<Self> {
        if usize::from(index) < SETTINGS {
            Ok(Setting(index))
        } else {
            Err(Error::param("setting", format!("index {index} out of range 0..16")))
        }
    }

    pub fn from_bits(bits: [u8; 4]) -> Self {
        Setting(pack(bits))
    }

    pub fn index(self) -> usize {
        usize::from(self.0)
    }

    pub fn raw(self) -> u8 {
        self.0
    }

    /// Input of party `party` (0-based).
    pub fn bit(self, party: usize) -> u8 {
        (self.0 >> party) & 1
    }

    pub fn weight(self) -> u32 {
        self.0.count_ones()
    }

    /// Weight-one settings.
    pub fn in_u0(self) -> bool {
        self.weight() == 1
    }

    /// Weight-three settings.
    pub fn in_u1(self) -> bool {
        self.weight() == 3
    }

    pub fn in_inequality(self) -> bool {
        self.in_u0() || self.in_u1()
    }

    pub fn all() -> impl Iterator<Item = Setting> {
        (0..SETTINGS as u8).map(Setting)
    }

    /// The eight settings that carry nonzero Bell coefficients: U0 then U1.
    pub fn inequality_settings() -> [Setting; 8] {
        [
            Setting(0b0001),
            Setting(0b0010),
            Setting(0b0100),
            Setting(0b1000),
            Setting(0b1110),
            Setting(0b1101),
            Setting(0b1011),
            Setting(0b0111),
        ]
    }
}

impl std::fmt::Display for Setting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // party 1 printed first
        for i in 0..PARTIES {
            write!(f, "{}", self.bit(i))?;
        }
        Ok(())
    }
}

/// Measurement outcomes `(x1, x2, x3, x4)` packed into the low four bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Outcome(u8);

impl Outcome {
    pub fn new(index: u8) -> Result<Self> {
        if usize::from(index) < OUTCOMES {
            Ok(Outcome(index))
        } else {
            Err(Error::param("outcome", format!("index {index} out of range 0..16")))
        }
    }

    pub fn from_bits(bits: [u8; 4]) -> Self {
        Outcome(pack(bits))
    }

    pub fn index(self) -> usize {
        usize::from(self.0)
    }

    pub fn raw(self) -> u8 {
        self.0
    }

    pub fn bit(self, party: usize) -> u8 {
        (self.0 >> party) & 1
    }

    pub fn parity(self) -> u8 {
        (self.0.count_ones() & 1) as u8
    }

    /// Majority of the first three outputs.
    pub fn majority_bit(self) -> u8 {
        majority(self.bit(0), self.bit(1), self.bit(2))
    }

    pub fn all() -> impl Iterator<Item = Outcome> {
        (0..OUTCOMES as u8).map(Outcome)
    }
}

fn pack(bits: [u8; 4]) -> u8 {
    bits.iter().enumerate().fold(0, |acc, (i, b)| acc | ((b & 1) << i))
}

/// 0 if at least two of the inputs are 0, else 1.
pub fn majority(x1: u8, x2: u8, x3: u8) -> u8 {
    u8::from((x1 & 1) + (x2 & 1) + (x3 & 1) >= 2)
}

/// Coefficient table `B(x, u)` of the four-party inequality.
#[derive(Clone, Debug, PartialEq)]
pub struct BellFunctional {
    b: [u8; TABLE_LEN],
}

impl BellFunctional {
    /// `B(x,u) = 1` iff `u ∈ U0` and the outputs have even parity, or
    /// `u ∈ U1` and the outputs have odd parity.
    pub fn standard() -> Self {
        let mut b = [0u8; TABLE_LEN];
        for u in Setting::all() {
            for x in Outcome::all() {
                b[table_index(x, u)] = Self::coefficient(x, u);
            }
        }
        BellFunctional { b }
    }

    /// Coefficient of the standard functional, without building the table.
    #[inline]
    pub fn coefficient(x: Outcome, u: Setting) -> u8 {
        u8::from((u.in_u0() && x.parity() == 0) || (u.in_u1() && x.parity() == 1))
    }

    /// An arbitrary 0/1 table, for testing `bell_value` against other functionals.
    pub fn from_table(b: [u8; TABLE_LEN]) -> Result<Self> {
        if b.iter().any(|&v| v > 1) {
            return Err(Error::param("functional", "coefficients must be 0 or 1"));
        }
        Ok(BellFunctional { b })
    }

    pub fn get(&self, x: Outcome, u: Setting) -> u8 {
        self.b[table_index(x, u)]
    }

    pub fn as_f64(&self) -> [f64; TABLE_LEN] {
        self.b.map(f64::from)
    }
}

impl Default for BellFunctional {
    fn default() -> Self {
        Self::standard()
    }
}

#[inline]
pub fn table_index(x: Outcome, u: Setting) -> usize {
    x.index() * SETTINGS + u.index()
}

/// One violated constraint reported by [`is_no_signaling`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Normalization {
        setting: usize,
        sum: f64,
    },
    Negative {
        outcome: usize,
        setting: usize,
        value: f64,
    },
    /// Marginal of the other parties differs between the two inputs of `party` (0-based).
    Signaling {
        party: usize,
        setting: usize,
        outcome_rest: usize,
        difference: f64,
    },
}

/// Checks normalization, positivity, and per-party no-signaling for a table
/// over `parties` binary parties stored as `p[x * 2^parties + u]`.
pub(crate) fn check_table(p: &[f64], parties: usize, tol: f64) -> Vec<Violation> {
    let n = 1usize << parties;
    debug_assert_eq!(p.len(), n * n);
    let mut out = Vec::new();
    for u in 0..n {
        let sum: f64 = (0..n).map(|x| p[x * n + u]).sum();
        if !sum.is_finite() || (sum - 1.0).abs() > tol {
            out.push(Violation::Normalization { setting: u, sum });
        }
    }
    for (i, &v) in p.iter().enumerate() {
        if !v.is_finite() || v < -tol {
            out.push(Violation::Negative { outcome: i / n, setting: i % n, value: v });
        }
    }
    for party in 0..parties {
        let bit = 1usize << party;
        for u in (0..n).filter(|u| u & bit == 0) {
            for x in (0..n).filter(|x| x & bit == 0) {
                let m0 = p[x * n + u] + p[(x | bit) * n + u];
                let m1 = p[x * n + (u | bit)] + p[(x | bit) * n + (u | bit)];
                let difference = m0 - m1;
                if !difference.is_finite() || difference.abs() > tol {
                    out.push(Violation::Signaling { party, setting: u, outcome_rest: x, difference });
                }
            }
        }
    }
    out
}

/// Returns whether the table is a valid no-signaling box within `tol`,
/// together with every violated constraint.
pub fn is_no_signaling(p: &[f64; TABLE_LEN], tol: f64) -> (bool, Vec<Violation>) {
    let v = check_table(p, PARTIES, tol);
    (v.is_empty(), v)
}

/// Conditional distribution `P(x|u)` over four parties with validated
/// normalization, positivity and no-signaling.
#[derive(Clone, Debug, PartialEq)]
pub struct NsBox {
    p: [f64; TABLE_LEN],
    tol: f64,
}

impl NsBox {
    pub fn new(p: [f64; TABLE_LEN]) -> Result<Self> {
        Self::with_tol(p, DEFAULT_TOL)
    }

    pub fn with_tol(p: [f64; TABLE_LEN], tol: f64) -> Result<Self> {
        let violations = check_table(&p, PARTIES, tol);
        if let Some(first) = violations.first() {
            return Err(Error::InvalidBox(format!("{} violated constraint(s), first: {first:?}", violations.len())));
        }
        Ok(NsBox { p, tol })
    }

    pub fn from_fn(tol: f64, f: impl Fn(Outcome, Setting) -> f64) -> Result<Self> {
        let mut p = [0.0; TABLE_LEN];
        for u in Setting::all() {
            for x in Outcome::all() {
                p[table_index(x, u)] = f(x, u);
            }
        }
        Self::with_tol(p, tol)
    }

    pub fn uniform() -> Self {
        NsBox { p: [1.0 / OUTCOMES as f64; TABLE_LEN], tol: DEFAULT_TOL }
    }

    /// Local deterministic box: party `i` answers `responses[i][u_i]`.
    pub fn local_deterministic(responses: [[u8; 2]; PARTIES]) -> Self {
        let mut p = [0.0; TABLE_LEN];
        for u in Setting::all() {
            let bits = std::array::from_fn(|i| responses[i][usize::from(u.bit(i))]);
            p[table_index(Outcome::from_bits(bits), u)] = 1.0;
        }
        NsBox { p, tol: DEFAULT_TOL }
    }

    /// All 256 local deterministic strategies (four response functions per party).
    pub fn all_local_deterministic() -> impl Iterator<Item = NsBox> {
        (0u32..256).map(|code| {
            let responses = std::array::from_fn(|party| {
                let f = (code >> (2 * party)) & 3;
                [(f & 1) as u8, ((f >> 1) & 1) as u8]
            });
            NsBox::local_deterministic(responses)
        })
    }

    /// Box with `P(x|u) = 1/8` on outcomes of parity `parity(u)`, where the
    /// parity is the one the functional rewards against: odd on U0, even on
    /// U1 and even elsewhere. Scores zero on the standard functional.
    pub fn parity_box() -> Self {
        let mut p = [0.0; TABLE_LEN];
        for u in Setting::all() {
            let wanted = u8::from(u.in_u0());
            for x in Outcome::all().filter(|x| x.parity() == wanted) {
                p[table_index(x, u)] = 1.0 / 8.0;
            }
        }
        NsBox { p, tol: DEFAULT_TOL }
    }

    /// Convex combination `alpha * self + (1 - alpha) * other`.
    pub fn mix(&self, other: &NsBox, alpha: f64) -> Result<NsBox> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::param("alpha", format!("{alpha} outside [0, 1]")));
        }
        let p = std::array::from_fn(|i| alpha * self.p[i] + (1.0 - alpha) * other.p[i]);
        Ok(NsBox { p, tol: self.tol.max(other.tol) })
    }

    pub fn prob(&self, x: Outcome, u: Setting) -> f64 {
        self.p[table_index(x, u)]
    }

    pub fn table(&self) -> &[f64; TABLE_LEN] {
        &self.p
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Probability that `maj(x1, x2, x3) = bit` at setting `u`.
    pub fn majority_prob(&self, u: Setting, bit: u8) -> f64 {
        Outcome::all().filter(|x| x.majority_bit() == bit).map(|x| self.prob(x, u)).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, u: Setting, rng: &mut R) -> Outcome {
        let r: f64 = rng.random();
        let mut acc = 0.0;
        let mut last_positive = 0u8;
        for x in 0..OUTCOMES as u8 {
            let q = self.p[usize::from(x) * SETTINGS + u.index()];
            if q > 0.0 {
                last_positive = x;
                acc += q;
                if r < acc {
                    return Outcome(x);
                }
            }
        }
        Outcome(last_positive)
    }

    pub fn to_json(&self) -> BoxJson {
        BoxJson {
            p: (0..OUTCOMES).map(|x| self.p[x * SETTINGS..(x + 1) * SETTINGS].to_vec()).collect(),
            order: BoxJson::ORDER.to_string(),
        }
    }

    pub fn from_json(json: &BoxJson) -> Result<Self> {
        if json.order != BoxJson::ORDER {
            return Err(Error::InvalidBox(format!("unsupported order `{}`", json.order)));
        }
        if json.p.len() != OUTCOMES || json.p.iter().any(|row| row.len() != SETTINGS) {
            return Err(Error::InvalidBox("expected a 16x16 table".into()));
        }
        let mut p = [0.0; TABLE_LEN];
        for (x, row) in json.p.iter().enumerate() {
            p[x * SETTINGS..(x + 1) * SETTINGS].copy_from_slice(row);
        }
        NsBox::new(p)
    }
}

/// Wire format for boxes: `p[x][u]` with `order = "outcome-major"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxJson {
    pub p: Vec<Vec<f64>>,
    pub order: String,
}

impl BoxJson {
    pub const ORDER: &'static str = "outcome-major";
}

/// `Σ_{x,u} B(x,u) P(x|u)`.
pub fn bell_value(nsbox: &NsBox, functional: &BellFunctional) -> f64 {
    nsbox.p.iter().zip(functional.b.iter()).filter(|(_, &b)| b == 1).map(|(p, _)| p).sum()
}

/// Bell value of the standard functional, summing only the 64 nonzero terms.
pub fn standard_bell_value(nsbox: &NsBox) -> f64 {
    let mut total = 0.0;
    for u in Setting::inequality_settings() {
        let parity = u8::from(u.in_u1());
        for x in Outcome::all().filter(|x| x.parity() == parity) {
            total += nsbox.prob(x, u);
        }
    }
    total
}

/// Validates a raw table and scores it.
pub fn bell_value_of_table(p: &[f64; TABLE_LEN], functional: &BellFunctional) -> Result<f64> {
    let nsbox = NsBox::new(*p)?;
    Ok(bell_value(&nsbox, functional))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn majority_truth_table() {
        assert_eq!(majority(0, 0, 1), 0);
        assert_eq!(majority(1, 1, 0), 1);
        assert_eq!(majority(0, 0, 0), 0);
        assert_eq!(majority(1, 1, 1), 1);
        assert_eq!(majority(1, 0, 0), 0);
    }

    #[test]
    fn functional_structure() {
        let b = BellFunctional::standard();
        let mut nonzero_settings = 0;
        for u in Setting::all() {
            let count = Outcome::all().filter(|&x| b.get(x, u) == 1).count();
            if count > 0 {
                nonzero_settings += 1;
                assert_eq!(count, 8);
                assert!(u.in_inequality());
            }
        }
        assert_eq!(nonzero_settings, 8);
    }

    #[test]
    fn setting_encoding() {
        let u = Setting::from_bits([0, 0, 0, 1]);
        assert!(u.in_u0());
        assert_eq!(u.raw(), 0b1000);
        assert_eq!(u.to_string(), "0001");
        assert!(Setting::new(16).is_err());
    }

    #[test]
    fn uniform_box_scores_four() {
        let v = bell_value(&NsBox::uniform(), &BellFunctional::standard());
        assert!((v - 4.0).abs() < 1e-12);
        assert!((standard_bell_value(&NsBox::uniform()) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_box_is_no_signaling() {
        let (ok, v) = is_no_signaling(NsBox::uniform().table(), DEFAULT_TOL);
        assert!(ok);
        assert!(v.is_empty());
    }

    #[test]
    fn parity_box_is_no_signaling_and_reaches_zero() {
        let pb = NsBox::parity_box();
        let (ok, v) = is_no_signaling(pb.table(), DEFAULT_TOL);
        assert!(ok, "{v:?}");
        assert!(bell_value(&pb, &BellFunctional::standard()).abs() < 1e-12);
    }

    #[test]
    fn signaling_box_reports_party_one() {
        // p(0000|0000) = 1, p(0000|1000) = 0 (spread over the rest), others uniform
        let mut p = [1.0 / 16.0; TABLE_LEN];
        for x in Outcome::all() {
            p[table_index(x, Setting(0b0000))] = if x.raw() == 0 { 1.0 } else { 0.0 };
            p[table_index(x, Setting(0b0001))] = if x.raw() == 0 { 0.0 } else { 1.0 / 15.0 };
        }
        let (ok, v) = is_no_signaling(&p, DEFAULT_TOL);
        assert!(!ok);
        assert!(v.iter().any(|v| matches!(v, Violation::Signaling { party: 0, setting: 0, .. })));
        assert!(NsBox::new(p).is_err());
    }

    #[test]
    fn rejects_unnormalized_and_negative() {
        let mut p = [1.0 / 16.0; TABLE_LEN];
        p[0] = 0.5;
        let (_, v) = is_no_signaling(&p, DEFAULT_TOL);
        assert!(v.iter().any(|v| matches!(v, Violation::Normalization { setting: 0, .. })));
        let mut p = [1.0 / 16.0; TABLE_LEN];
        p[0] = -0.1;
        p[16] += 0.1 + 1.0 / 16.0;
        let (_, v) = is_no_signaling(&p, DEFAULT_TOL);
        assert!(v.iter().any(|v| matches!(v, Violation::Negative { .. })));
        assert!(bell_value_of_table(&p, &BellFunctional::standard()).is_err());
    }

    #[test]
    fn local_bound_by_exhaustion() {
        let b = BellFunctional::standard();
        let boxes: Vec<_> = NsBox::all_local_deterministic().collect();
        assert_eq!(boxes.len(), 256);
        let min = boxes.iter().map(|bx| bell_value(bx, &b)).fold(f64::INFINITY, f64::min);
        assert_eq!(min, 2.0);
        for bx in &boxes {
            assert!(is_no_signaling(bx.table(), DEFAULT_TOL).0);
        }
    }

    #[test]
    fn json_round_trip_keeps_layout() {
        let pb = NsBox::parity_box();
        let json = serde_json::to_string(&pb.to_json()).unwrap();
        assert!(json.contains("\"order\":\"outcome-major\""));
        let back: BoxJson = serde_json::from_str(&json).unwrap();
        assert_eq!(back.p[1][1], pb.prob(Outcome(1), Setting(1)));
        assert_eq!(NsBox::from_json(&back).unwrap(), pb);
        let bad = BoxJson { p: back.p.clone(), order: "setting-major".into() };
        assert!(NsBox::from_json(&bad).is_err());
    }

    fn det_box() -> impl Strategy<Value = NsBox> {
        (0u32..256).prop_map(|c| NsBox::all_local_deterministic().nth(c as usize).unwrap())
    }

    proptest! {
        #[test]
        fn bell_value_is_linear(a in det_box(), b in det_box(), alpha in 0.0f64..=1.0) {
            let f = BellFunctional::standard();
            let mixed = a.mix(&b, alpha).unwrap();
            let expected = alpha * bell_value(&a, &f) + (1.0 - alpha) * bell_value(&b, &f);
            prop_assert!((bell_value(&mixed, &f) - expected).abs() < 1e-12);
        }

        #[test]
        fn majority_is_symmetric(a in 0u8..2, b in 0u8..2, c in 0u8..2) {
            let m = majority(a, b, c);
            prop_assert_eq!(m, majority(b, a, c));
            prop_assert_eq!(m, majority(c, b, a));
            prop_assert_eq!(m, majority(a, c, b));
        }
    }
}
