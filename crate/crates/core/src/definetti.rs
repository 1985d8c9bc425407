//! Exact de Finetti statistics for small time-ordered no-signaling systems.
//!
//! A system has `k` devices; device `j` is used `n_j` times. Each use takes an
//! input from an alphabet of size `|Λ|` and returns an output from `|Σ|`.
//! Uses are laid out device-major: position `p = n_1 + … + n_{j−1} + l` for use
//! `l` of device `j`, and the full input/output vectors are mixed-radix numbers
//! with position 0 as the least significant digit.
//!
//! All 1-norms are unnormalized (maximum 2).

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sv::{exact_string_distribution, BiasStrategy};

/// Largest `|Σ|^N · |Λ|^N` accepted for a dense table.
pub const MAX_TABLE: usize = 1 << 22;
const NORM_TOL: f64 = 1e-9;

/// Joint distribution of two discrete variables, row-major `p[a * nb + b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDist {
    na: usize,
    nb: usize,
    p: Vec<f64>,
}

impl JointDist {
    pub fn new(na: usize, nb: usize, p: Vec<f64>) -> Result<Self> {
        if na == 0 || nb == 0 || p.len() != na * nb {
            return Err(Error::param("joint", format!("expected {na}×{nb} entries, got {}", p.len())));
        }
        if let Some(v) = p.iter().find(|v| !(**v >= -NORM_TOL)) {
            return Err(Error::param("joint", format!("negative entry {v}")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(Error::Unnormalized(sum));
        }
        Ok(Self { na, nb, p })
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.p[a * self.nb + b]
    }

    pub fn marginal_a(&self) -> Vec<f64> {
        (0..self.na).map(|a| (0..self.nb).map(|b| self.get(a, b)).sum()).collect()
    }

    pub fn marginal_b(&self) -> Vec<f64> {
        (0..self.nb).map(|b| (0..self.na).map(|a| self.get(a, b)).sum()).collect()
    }

    /// `‖p_AB − p_A ⊗ p_B‖₁`.
    pub fn product_distance(&self) -> f64 {
        let (pa, pb) = (self.marginal_a(), self.marginal_b());
        let mut d = 0.0;
        for a in 0..self.na {
            for b in 0..self.nb {
                d += (self.get(a, b) - pa[a] * pb[b]).abs();
            }
        }
        d
    }
}

/// `I(A:B)` in bits.
pub fn mutual_information(joint: &JointDist) -> f64 {
    let (pa, pb) = (joint.marginal_a(), joint.marginal_b());
    let mut i = 0.0;
    for a in 0..joint.na {
        for b in 0..joint.nb {
            let p = joint.get(a, b);
            if p > 0.0 {
                i += p * (p / (pa[a] * pb[b])).log2();
            }
        }
    }
    i.max(0.0)
}

/// `(‖p_AB − p_A ⊗ p_B‖₁, sqrt(2 ln 2 · I(A:B)))`; the first never exceeds the second.
pub fn pinsker_gap(joint: &JointDist) -> (f64, f64) {
    (joint.product_distance(), (2.0 * LN_2 * mutual_information(joint)).sqrt())
}

/// Dense conditional distribution `P(x_all | u_all)` of `k` devices.
#[derive(Clone, Debug)]
pub struct JointBoxSystem {
    n: Vec<usize>,
    inputs: usize,
    outputs: usize,
    positions: usize,
    /// `p[u_all * outputs^N + x_all]`
    p: Vec<f64>,
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    base.checked_pow(u32::try_from(exp).ok()?)
}

impl JointBoxSystem {
    /// Builds the table from `f(x, u)`, where `x` and `u` list one symbol per position,
    /// and checks normalization and time-ordered no-signaling exhaustively.
    pub fn from_fn(
        n: &[usize],
        inputs: usize,
        outputs: usize,
        mut f: impl FnMut(&[usize], &[usize]) -> f64,
    ) -> Result<Self> {
        if n.is_empty() {
            return Err(Error::Empty("device list"));
        }
        if n.contains(&0) || inputs == 0 || outputs < 2 {
            return Err(Error::param("system", "use counts and alphabets must be positive, |Σ| ≥ 2"));
        }
        let positions: usize = n.iter().sum();
        let size = checked_pow(outputs, positions)
            .zip(checked_pow(inputs, positions))
            .and_then(|(a, b)| a.checked_mul(b))
            .filter(|&s| s <= MAX_TABLE)
            .ok_or_else(|| {
                Error::SizeGuard(format!(
                    "{positions} uses with |Λ| = {inputs}, |Σ| = {outputs} exceeds {MAX_TABLE} table entries; use fewer uses or smaller alphabets"
                ))
            })?;
        let xs = outputs.pow(positions as u32);
        let mut p = vec![0.0; size];
        let mut x = vec![0; positions];
        let mut u = vec![0; positions];
        for (ui, chunk) in p.chunks_mut(xs).enumerate() {
            digits(ui, inputs, &mut u);
            for (xi, slot) in chunk.iter_mut().enumerate() {
                digits(xi, outputs, &mut x);
                *slot = f(&x, &u);
            }
        }
        let system = Self { n: n.to_vec(), inputs, outputs, positions, p };
        system.validate()?;
        Ok(system)
    }

    /// Each device answers every use with its own single-use box `boxes[j][u][x]`.
    pub fn iid_product(n: &[usize], boxes: &[Vec<Vec<f64>>]) -> Result<Self> {
        Self::mixture(n, &[1.0], &[boxes.to_vec()])
    }

    /// `Σ_c w_c Π_p q_{c,j(p)}(x_p | u_p)`: each component is an i.i.d. product.
    pub fn mixture(n: &[usize], weights: &[f64], components: &[Vec<Vec<Vec<f64>>>]) -> Result<Self> {
        if weights.len() != components.len() || weights.is_empty() {
            return Err(Error::param("mixture", "one weight per component required"));
        }
        if components.iter().any(|c| c.len() != n.len()) {
            return Err(Error::param("mixture", "each component needs one box per device"));
        }
        let inputs = components[0][0].len();
        let outputs = components[0][0].first().map_or(0, Vec::len);
        let shapes_ok = components.iter().flatten().all(|b| b.len() == inputs && b.iter().all(|r| r.len() == outputs));
        if !shapes_ok {
            return Err(Error::param("mixture", "all single-use boxes must share alphabets"));
        }
        let owner: Vec<usize> = n.iter().enumerate().flat_map(|(j, &c)| std::iter::repeat_n(j, c)).collect();
        Self::from_fn(n, inputs, outputs, |x, u| {
            weights
                .iter()
                .zip(components)
                .map(|(w, comp)| {
                    w * x.iter().zip(u).zip(&owner).map(|((&xp, &up), &j)| comp[j][up][xp]).product::<f64>()
                })
                .sum()
        })
    }

    pub fn devices(&self) -> usize {
        self.n.len()
    }

    pub fn uses(&self) -> &[usize] {
        &self.n
    }

    pub fn input_alphabet(&self) -> usize {
        self.inputs
    }

    pub fn output_alphabet(&self) -> usize {
        self.outputs
    }

    fn offset(&self, device: usize) -> usize {
        self.n[..device].iter().sum()
    }

    fn x_count(&self) -> usize {
        self.outputs.pow(self.positions as u32)
    }

    pub fn prob(&self, x: &[usize], u: &[usize]) -> f64 {
        let xi = pack(x, self.outputs);
        let ui = pack(u, self.inputs);
        self.p[ui * self.x_count() + xi]
    }

    fn validate(&self) -> Result<()> {
        let xs = self.x_count();
        for (ui, chunk) in self.p.chunks(xs).enumerate() {
            if let Some(v) = chunk.iter().find(|v| !(**v >= -NORM_TOL)) {
                return Err(Error::InvalidBox(format!("negative entry {v} at input {ui}")));
            }
            let s: f64 = chunk.iter().sum();
            if (s - 1.0).abs() > NORM_TOL {
                return Err(Error::InvalidBox(format!("input {ui} sums to {s}")));
            }
        }
        // every per-device prefix vector (c_1..c_k) with 0 ≤ c_j ≤ n_j
        let mut prefix = vec![0; self.devices()];
        loop {
            self.check_prefix(&prefix)?;
            let mut j = 0;
            loop {
                if j == prefix.len() {
                    return Ok(());
                }
                prefix[j] += 1;
                if prefix[j] <= self.n[j] {
                    break;
                }
                prefix[j] = 0;
                j += 1;
            }
        }
    }

    /// Marginal on the first `prefix[j]` uses of each device must not depend on later inputs.
    fn check_prefix(&self, prefix: &[usize]) -> Result<()> {
        let mut inside = vec![false; self.positions];
        for (j, &c) in prefix.iter().enumerate() {
            let o = self.offset(j);
            inside[o..o + c].iter_mut().for_each(|s| *s = true);
        }
        let marginal = |ui: usize| self.marginal(ui, &inside);
        let mut u = vec![0; self.positions];
        let mut reference_u = vec![0; self.positions];
        for ui in 0..self.inputs.pow(self.positions as u32) {
            digits(ui, self.inputs, &mut u);
            for (r, (&v, &ins)) in reference_u.iter_mut().zip(u.iter().zip(&inside)) {
                *r = if ins { v } else { 0 };
            }
            let ri = pack(&reference_u, self.inputs);
            if ri == ui {
                continue;
            }
            let (a, b) = (marginal(ui), marginal(ri));
            if let Some((idx, d)) =
                a.iter().zip(&b).map(|(x, y)| (x - y).abs()).enumerate().find(|(_, d)| *d > NORM_TOL)
            {
                return Err(Error::InvalidBox(format!(
                    "time-ordered no-signaling violated: prefix {prefix:?}, input {ui}, marginal entry {idx} differs by {d:e}"
                )));
            }
        }
        Ok(())
    }

    /// Marginal over outputs at the positions flagged in `keep`, indexed by the packed
    /// full output vector with discarded positions zeroed.
    fn marginal(&self, ui: usize, keep: &[bool]) -> Vec<f64> {
        let xs = self.x_count();
        let row = &self.p[ui * xs..(ui + 1) * xs];
        let mut out = vec![0.0; xs];
        let weights: Vec<usize> = (0..self.positions).map(|p| self.outputs.pow(p as u32)).collect();
        let mut x = vec![0; self.positions];
        for (xi, &v) in row.iter().enumerate() {
            digits(xi, self.outputs, &mut x);
            let kept: usize = x.iter().zip(keep).zip(&weights).filter(|((_, k), _)| **k).map(|((d, _), w)| d * w).sum();
            out[kept] += v;
        }
        out
    }
}

fn digits(mut v: usize, radix: usize, out: &mut [usize]) {
    for d in out.iter_mut() {
        *d = v % radix;
        v /= radix;
    }
}

fn pack(d: &[usize], radix: usize) -> usize {
    d.iter().rev().fold(0, |acc, &v| acc * radix + v)
}

/// Joint distribution `ν(a, u_all)` of the selection and the inputs.
#[derive(Clone, Debug, Serialize)]
pub struct InputDistribution {
    pub atoms: Vec<InputAtom>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InputAtom {
    pub weight: f64,
    pub selection: Vec<usize>,
    pub inputs: Vec<usize>,
}

impl InputDistribution {
    /// Uniform inputs and selection.
    pub fn uniform(system: &JointBoxSystem) -> Self {
        let n_inputs = system.inputs.pow(system.positions as u32);
        let n_sel: usize = system.n.iter().product();
        let w = 1.0 / (n_inputs * n_sel) as f64;
        let mut atoms = Vec::with_capacity(n_inputs * n_sel);
        let mut u = vec![0; system.positions];
        let mut a = vec![0; system.devices()];
        for ui in 0..n_inputs {
            digits(ui, system.inputs, &mut u);
            for si in 0..n_sel {
                mixed_digits(si, &system.n, &mut a);
                atoms.push(InputAtom { weight: w, selection: a.clone(), inputs: u.clone() });
            }
        }
        Self { atoms }
    }

    /// Inputs and selection read off an ε-SV source in protocol order: every input
    /// (`log₂|Λ|` bits, big-endian) position by position, then each `a_j` in
    /// `log₂ n_j` bits. Alphabet size and every `n_j` must be powers of two.
    pub fn from_sv(system: &JointBoxSystem, strategy: &dyn BiasStrategy, epsilon: f64, z: u32) -> Result<Self> {
        let input_bits = pow2_width(system.inputs, "input alphabet")?;
        let sel_bits: Vec<u32> = system.n.iter().map(|&c| pow2_width(c, "use count")).collect::<Result<_>>()?;
        let total = input_bits * system.positions as u32 + sel_bits.iter().sum::<u32>();
        let probs = exact_string_distribution(strategy, epsilon, z, &[], total)?;
        let mut atoms = Vec::new();
        for (value, &weight) in probs.iter().enumerate() {
            if weight == 0.0 {
                continue;
            }
            let mut remaining = total;
            let mut take = |bits: u32| {
                remaining -= bits;
                (value >> remaining) & ((1 << bits) - 1)
            };
            let inputs: Vec<usize> = (0..system.positions).map(|_| take(input_bits)).collect();
            let selection: Vec<usize> = sel_bits.iter().map(|&b| take(b)).collect();
            atoms.push(InputAtom { weight, selection, inputs });
        }
        Ok(Self { atoms })
    }

    /// `ν(a)` for every selection with positive weight, in lexicographic order.
    pub fn selection_weights(&self) -> Vec<(Vec<usize>, f64)> {
        let mut map = std::collections::BTreeMap::<Vec<usize>, f64>::new();
        for atom in &self.atoms {
            *map.entry(atom.selection.clone()).or_default() += atom.weight;
        }
        map.into_iter().collect()
    }
}

fn pow2_width(v: usize, what: &'static str) -> Result<u32> {
    if v.is_power_of_two() {
        Ok(v.trailing_zeros())
    } else {
        Err(Error::param(what, format!("{v} is not a power of two")))
    }
}

fn mixed_digits(mut v: usize, radices: &[usize], out: &mut [usize]) {
    for (d, &r) in out.iter_mut().zip(radices) {
        *d = v % r;
        v /= r;
    }
}

/// Statistic at one selection `(a_1..a_k)`.
#[derive(Clone, Debug, Serialize)]
pub struct DeFinettiReport {
    pub selection: Vec<usize>,
    /// `ν(a)`.
    pub selection_weight: f64,
    #[serde(rename = "T")]
    pub t: f64,
    /// Per-level terms for devices `2..=k`: `E ‖q(x_{<i}, x_i) − q(x_{<i}) ⊗ q(x_i)‖₁`,
    /// with `x_{<i}` the selected outputs of devices `1..i−1`.
    pub levels: Vec<f64>,
    /// Largest `lhs − rhs` of Pinsker's inequality over every enumerated conditional.
    pub pinsker_max_gap: f64,
    pub conditionals_checked: usize,
    pub norm_convention: &'static str,
}

const NORM_CONVENTION: &str = "unnormalized 1-norm (twice the statistical distance, max 2)";

/// Exact `T` at `selection` with the inputs distributed as `ν(u | a)`.
pub fn t_statistic(system: &JointBoxSystem, selection: &[usize], nu: &InputDistribution) -> Result<f64> {
    Ok(selection_report(system, selection, nu)?.t)
}

/// Exact `T`, per-level terms and Pinsker checks at one selection.
pub fn selection_report(
    system: &JointBoxSystem,
    selection: &[usize],
    nu: &InputDistribution,
) -> Result<DeFinettiReport> {
    let k = system.devices();
    if selection.len() != k || selection.iter().zip(&system.n).any(|(a, n)| a >= n) {
        return Err(Error::param("selection", format!("{selection:?} out of range for uses {:?}", system.n)));
    }
    let atoms: Vec<&InputAtom> = nu.atoms.iter().filter(|a| a.selection == selection).collect();
    let weight: f64 = atoms.iter().map(|a| a.weight).sum();
    if weight <= 0.0 {
        return Err(Error::param("selection", format!("{selection:?} has zero probability under ν")));
    }
    let selected: Vec<usize> = (0..k).map(|j| system.offset(j) + selection[j]).collect();
    let mut past = vec![false; system.positions];
    for j in 0..k {
        let o = system.offset(j);
        past[o..o + selection[j]].iter_mut().for_each(|s| *s = true);
    }
    let mut keep = past.clone();
    selected.iter().for_each(|&p| keep[p] = true);
    let sigma = system.outputs;
    let weights: Vec<usize> = (0..system.positions).map(|p| sigma.pow(p as u32)).collect();
    let sel_count = sigma.pow(k as u32);

    let mut t = 0.0;
    let mut levels = vec![0.0; k.saturating_sub(1)];
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut checked = 0;
    let mut x = vec![0; system.positions];
    for atom in atoms {
        let w = atom.weight / weight;
        let marginal = system.marginal(pack(&atom.inputs, system.inputs), &keep);
        // group by past outputs: only indices with selected digits zero start a group
        for (xi, _) in marginal.iter().enumerate() {
            digits(xi, sigma, &mut x);
            if !keep.iter().zip(&x).all(|(k, d)| *k || *d == 0) || selected.iter().any(|&p| x[p] != 0) {
                continue;
            }
            let mut joint = vec![0.0; sel_count];
            for (si, slot) in joint.iter_mut().enumerate() {
                let mut idx = xi;
                let mut s = si;
                for &p in &selected {
                    idx += (s % sigma) * weights[p];
                    s /= sigma;
                }
                *slot = marginal[idx];
            }
            let p_past: f64 = joint.iter().sum();
            if p_past <= 1e-15 {
                continue;
            }
            joint.iter_mut().for_each(|v| *v /= p_past);
            t += w * p_past * distance_to_product(&joint, sigma, k);
            for i in 1..k {
                // devices 0..i-1 vs device i, marginalizing devices > i
                let lower = sigma.pow(i as u32);
                let mut pair = vec![0.0; lower * sigma];
                for (si, &v) in joint.iter().enumerate() {
                    let a = si % lower;
                    let b = (si / lower) % sigma;
                    pair[a * sigma + b] += v;
                }
                let jd = JointDist::new(lower, sigma, pair)?;
                let (lhs, rhs) = pinsker_gap(&jd);
                worst = worst.max(lhs - rhs);
                checked += 1;
                levels[i - 1] += w * p_past * lhs;
            }
        }
    }
    let report = DeFinettiReport {
        selection: selection.to_vec(),
        selection_weight: weight,
        t,
        levels,
        pinsker_max_gap: if checked == 0 { 0.0 } else { worst },
        conditionals_checked: checked,
        norm_convention: NORM_CONVENTION,
    };
    let sum: f64 = report.levels.iter().sum();
    if report.t > sum + 1e-9 {
        return Err(Error::InvalidBox(format!("triangle inequality failed: T = {} > Σ T_i = {sum}", report.t)));
    }
    Ok(report)
}

/// `‖q − ⊗_j q_j‖₁` for a joint over `k` variables of `sigma` symbols each (variable 0 least significant).
fn distance_to_product(joint: &[f64], sigma: usize, k: usize) -> f64 {
    let mut marg = vec![vec![0.0; sigma]; k];
    for (si, &v) in joint.iter().enumerate() {
        let mut s = si;
        for m in marg.iter_mut() {
            m[s % sigma] += v;
            s /= sigma;
        }
    }
    joint
        .iter()
        .enumerate()
        .map(|(si, &v)| {
            let mut s = si;
            let mut prod = 1.0;
            for m in &marg {
                prod *= m[s % sigma];
                s /= sigma;
            }
            (v - prod).abs()
        })
        .sum()
}

/// Threshold and probability bound for `T` under an ε-SV selection.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct DeFinettiThreshold {
    /// `Σ_{i≥2} sqrt(8 ln2 · log₂|Σ| · t_i² · Σ_{j<i} n_j / n_i^{1−log₂(1+2ε)})`.
    pub threshold: f64,
    /// `Σ_{i≥2} 1/t_i`.
    pub probability_bound: f64,
    /// `Σ_{i≥2} sqrt(8 ln2 · log₂|Σ| · t_i · Σ_{j<i} n_j / n_i)`, before substituting `t_i`.
    pub pre_substitution_threshold: f64,
    /// `Σ_{i≥2} sqrt(n_i^{log₂(1+2ε)} / t_i)`.
    pub pre_substitution_bound: f64,
}

/// `t[i − 2]` is `t_i` for `i = 2..=k`.
pub fn definetti_rhs(n: &[f64], t: &[f64], epsilon: f64, sigma_size: usize) -> Result<DeFinettiThreshold> {
    crate::sv::validate_epsilon(epsilon)?;
    if n.iter().any(|&v| !(v > 0.0)) || t.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::param("n/t", "must be positive"));
    }
    if t.len() + 1 != n.len().max(1) {
        return Err(Error::param(
            "t",
            format!("need {} values (one per device after the first)", n.len().saturating_sub(1)),
        ));
    }
    if sigma_size < 2 {
        return Err(Error::param("sigma_size", "must be at least 2"));
    }
    let c = 8.0 * LN_2 * (sigma_size as f64).log2();
    let e = (1.0 + 2.0 * epsilon).log2();
    let mut out = DeFinettiThreshold {
        threshold: 0.0,
        probability_bound: 0.0,
        pre_substitution_threshold: 0.0,
        pre_substitution_bound: 0.0,
    };
    let mut earlier = n.first().copied().unwrap_or(0.0);
    for (&ni, &ti) in n.iter().skip(1).zip(t) {
        out.threshold += (c * ti * ti * earlier / ni.powf(1.0 - e)).sqrt();
        out.probability_bound += 1.0 / ti;
        out.pre_substitution_threshold += (c * ti * earlier / ni).sqrt();
        out.pre_substitution_bound += (ni.powf(e) / ti).sqrt();
        earlier += ni;
    }
    Ok(out)
}

/// Block sizes `n_1 = 1`, `n_i^{1−log₂(1+2ε)} = 8 ln2 · k^e · t³ · n_{i−1}` (rounded up),
/// stored as base-2 logarithms so astronomically large schedules stay finite.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BlockSizes {
    pub log2: Vec<f64>,
}

/// Exponent of `k` in the recursion used by [`block_sizes`].
pub const DEFAULT_K_EXPONENT: f64 = 2.0;

impl BlockSizes {
    /// `n_i` as an integer when it is exactly representable.
    pub fn exact(&self, i: usize) -> Option<u64> {
        let l = *self.log2.get(i)?;
        (l < 53.0).then(|| l.exp2().round() as u64)
    }

    pub fn display(&self, i: usize) -> String {
        match self.exact(i) {
            Some(v) => v.to_string(),
            None => scientific(self.log2[i]),
        }
    }
}

/// `2^log2` in scientific notation.
pub fn scientific(log2: f64) -> String {
    let l10 = log2 * std::f64::consts::LOG10_2;
    let exp = l10.floor();
    format!("{:.4}e{}", 10f64.powf(l10 - exp), exp as i64)
}

pub fn block_sizes(epsilon: f64, k: usize, t: f64, k_exponent: f64) -> Result<BlockSizes> {
    crate::sv::validate_epsilon(epsilon)?;
    if k == 0 || !(t > 0.0) {
        return Err(Error::param("k/t", "k ≥ 1 and t > 0 required"));
    }
    let growth = 1.0 / (1.0 - (1.0 + 2.0 * epsilon).log2());
    let base = (8.0 * LN_2).log2() + k_exponent * (k as f64).log2() + 3.0 * t.log2();
    let mut log2 = vec![0.0];
    for _ in 1..k {
        let l = ((base + log2.last().unwrap()) * growth).max(0.0);
        let l = if l < 52.0 { (l.exp2() * (1.0 - 1e-14)).ceil().log2() } else { l };
        log2.push(l);
    }
    Ok(BlockSizes { log2 })
}

/// Selection-weighted summary over every selection with positive probability.
#[derive(Clone, Debug, Serialize)]
pub struct SelectionSweep {
    pub uses: Vec<usize>,
    /// `E_{a∼ν} T`.
    pub mean_t: f64,
    pub threshold: DeFinettiThreshold,
    /// `ν(T ≥ threshold)`.
    pub fraction_above_threshold: f64,
    pub pinsker_max_gap: f64,
    pub conditionals_checked: usize,
    pub selections: Vec<DeFinettiReport>,
}

/// Evaluates every selection (in parallel) and compares against [`definetti_rhs`].
pub fn sweep(system: &JointBoxSystem, nu: &InputDistribution, t: &[f64], epsilon: f64) -> Result<SelectionSweep> {
    let n: Vec<f64> = system.n.iter().map(|&v| v as f64).collect();
    let threshold = definetti_rhs(&n, t, epsilon, system.outputs)?;
    let selections =
        nu.selection_weights().par_iter().map(|(a, _)| selection_report(system, a, nu)).collect::<Result<Vec<_>>>()?;
    let mean_t = selections.iter().map(|r| r.selection_weight * r.t).sum();
    let fraction_above_threshold =
        selections.iter().filter(|r| r.t >= threshold.threshold).fold(0.0, |acc, r| acc + r.selection_weight);
    Ok(SelectionSweep {
        uses: system.n.clone(),
        mean_t,
        threshold,
        fraction_above_threshold,
        pinsker_max_gap: selections.iter().map(|r| r.pinsker_max_gap).fold(f64::NEG_INFINITY, f64::max),
        conditionals_checked: selections.iter().map(|r| r.conditionals_checked).sum(),
        selections,
    })
}
