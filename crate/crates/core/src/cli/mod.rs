//! Command implementations behind the `randamp` binary.

pub mod config;
pub mod manifest;

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::json;

use crate::bell::{is_no_signaling, standard_bell_value, Setting, DEFAULT_TOL};
use crate::definetti::{block_sizes, sweep, BlockSizes, InputDistribution, JointBoxSystem};
use crate::error::{Error, Result};
use crate::lp::{certification_report, predictability_bound, CertificationReport, LpBackend, MicroLp};
use crate::protocol::{self, estimate_output_bias, truncate_pow2, TrialRecord};
use crate::quantum::{build_state, ideal_quantum_box, noisy_quantum_box, rotation_sensitivity, NoiseSpec};
use config::{CertifyConfig, DeFinettiUses, ExperimentConfig, QuantumCheckConfig};
use manifest::{sha256_hex, OutputSet, RunManifest};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Certify,
    Simulate,
    Definetti,
    QuantumCheck,
    Bounds,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Certify => "certify",
            Command::Simulate => "simulate",
            Command::Definetti => "definetti",
            Command::QuantumCheck => "quantum-check",
            Command::Bounds => "bounds",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub jobs: Option<usize>,
}

#[derive(Debug)]
pub struct CommandOutcome {
    /// 0 on success; 1 when a certification check fails.
    pub exit_code: i32,
    /// Human-readable summary for stdout.
    pub text: String,
    pub manifest: RunManifest,
}

/// Runs `command` with overrides from `opts` applied to `config`, writing outputs and a manifest to `opts.out`.
pub fn run(command: Command, config: &ExperimentConfig, opts: &RunOptions) -> Result<CommandOutcome> {
    let mut config = config.clone();
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    if let (Some(trials), Some(sim)) = (opts.trials, config.simulate.as_mut()) {
        sim.trials = trials;
    }
    let work = || match command {
        Command::Certify => certify_cmd(&config),
        Command::Simulate => simulate_cmd(&config),
        Command::Definetti => definetti_cmd(&config),
        Command::QuantumCheck => quantum_check_cmd(&config),
        Command::Bounds => bounds_cmd(&config),
    };
    let (exit_code, text, outputs, summary) = match opts.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let config_sha = sha256_hex(&serde_json::to_vec(&config)?);
    let manifest = outputs.commit(&opts.out, command.name(), config_sha, summary)?;
    Ok(CommandOutcome { exit_code, text, manifest })
}

type Produced = (i32, String, OutputSet, serde_json::Value);

#[derive(Serialize)]
struct CertifySummary<'a> {
    pass: bool,
    deltas: Vec<f64>,
    max_optima: Vec<f64>,
    bounds: Vec<f64>,
    monotone: bool,
    max_backend_gap: Option<f64>,
    reports: &'a [CertificationReport],
}

pub fn certify_cmd(config: &ExperimentConfig) -> Result<Produced> {
    let cfg = config.certify.clone().unwrap_or_default();
    certify_grid(&cfg)
}

fn certify_grid(cfg: &CertifyConfig) -> Result<Produced> {
    if cfg.deltas.is_empty() {
        return Err(Error::Config("certify.deltas must not be empty".into()));
    }
    let backend: Option<&dyn LpBackend> = if cfg.cross_check { Some(&MicroLp) } else { None };
    let reports = cfg.deltas.iter().map(|&d| certification_report(d, backend)).collect::<Result<Vec<_>>>()?;
    let pass = reports.iter().all(|r| r.pass);
    let mut order: Vec<&CertificationReport> = reports.iter().collect();
    order.sort_by(|a, b| a.delta.total_cmp(&b.delta));
    let monotone = order.windows(2).all(|w| w[1].max_optimum >= w[0].max_optimum - 1e-9);
    let max_backend_gap = reports.iter().filter_map(|r| r.max_backend_gap).reduce(f64::max);
    let summary = CertifySummary {
        pass,
        deltas: reports.iter().map(|r| r.delta).collect(),
        max_optima: reports.iter().map(|r| r.max_optimum).collect(),
        bounds: reports.iter().map(|r| r.bound).collect(),
        monotone,
        max_backend_gap,
        reports: &reports,
    };
    let mut text = String::from("delta      max optimum   bound (11+7δ)/32   result\n");
    for r in &reports {
        let _ = writeln!(
            text,
            "{:<10} {:<13.10} {:<18.10} {}",
            r.delta,
            r.max_optimum,
            r.bound,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    if let Some(gap) = max_backend_gap {
        let _ = writeln!(text, "largest back-end disagreement: {gap:.3e}");
    }
    let mut out = OutputSet::new();
    out.add_json("certify.json", &summary)?;
    let brief = json!({ "pass": pass, "max_optima": summary.max_optima, "monotone": monotone });
    Ok((if pass { 0 } else { 1 }, text, out, brief))
}

#[derive(Serialize)]
struct CsvRow {
    trial: u64,
    z: u32,
    accepted: u8,
    z_k: f64,
    output_bit: String,
    selection: String,
    realized_m: String,
    good: u8,
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

/// Per-trial table: `trial, z, accepted, z_k, output_bit, selection, realized_m, good`.
pub fn trials_csv(records: &[TrialRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(CsvRow {
            trial: r.trial,
            z: r.z,
            accepted: r.accepted.into(),
            z_k: r.z_k,
            output_bit: r.output_bit.map(|b| b.to_string()).unwrap_or_default(),
            selection: join(&r.selection),
            realized_m: join(&r.realized_m),
            good: r.good.into(),
        })?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn simulate_cmd(config: &ExperimentConfig) -> Result<Produced> {
    let sim = ExperimentConfig::section(&config.simulate, "simulate")?;
    let params = sim.params()?;
    let adversary = sim.adversary()?;
    let (estimate, records) = estimate_output_bias(&params, &adversary, sim.trials, config.seed)?;
    let mut text = format!(
        "trials {}  accepted {}  acceptance rate {:.6} (99% CI {:.6}..{:.6})\n",
        estimate.trials,
        estimate.accepted,
        estimate.acceptance_rate,
        estimate.acceptance_interval.0,
        estimate.acceptance_interval.1
    );
    match &estimate.distance {
        Some(d) => {
            let _ = writeln!(
                text,
                "d = {:.6e}  d_c = {:.6e}  σ(d) = {:.3e}",
                d.d,
                d.d_c,
                estimate.d_sigma.unwrap_or(f64::NAN)
            );
        }
        None => text.push_str("no accepted runs: output bias not estimated\n"),
    }
    let _ = writeln!(text, "bound on d_c: {:.6e}", estimate.bound.total);
    let mut out = OutputSet::new();
    out.add_json("simulate.json", &json!({ "seed": config.seed, "params": params, "estimate": estimate }))?;
    out.add("trials.csv", trials_csv(&records)?);
    let brief = json!({
        "accepted": estimate.accepted,
        "trials": estimate.trials,
        "d": estimate.distance.as_ref().map(|d| d.d),
        "d_c": estimate.distance.as_ref().map(|d| d.d_c),
    });
    Ok((0, text, out, brief))
}

pub fn definetti_cmd(config: &ExperimentConfig) -> Result<Produced> {
    let cfg = ExperimentConfig::section(&config.definetti, "definetti")?;
    let (uses, schedule): (Vec<usize>, Option<BlockSizes>) = match &cfg.uses {
        DeFinettiUses::Explicit(n) => (n.clone(), None),
        DeFinettiUses::Recursion(spec) => {
            let b = block_sizes(spec.epsilon, spec.k, spec.t, spec.k_exponent)?;
            let n = (0..spec.k)
                .map(|i| {
                    b.exact(i).map(|v| truncate_pow2(v) as usize).ok_or_else(|| {
                        Error::SizeGuard(format!(
                            "n_{} = {} cannot be enumerated; give explicit small `uses`",
                            i + 1,
                            b.display(i)
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (n, Some(b))
        }
    };
    // exchangeable: every device shares each component's box
    let components: Vec<Vec<Vec<Vec<f64>>>> = cfg.components.iter().map(|q| vec![q.clone(); uses.len()]).collect();
    let system = JointBoxSystem::mixture(&uses, &cfg.weights, &components)?;
    let strategy = cfg.sv.build(cfg.epsilon)?;
    let nu = InputDistribution::from_sv(&system, strategy.as_ref(), cfg.epsilon, 0)?;
    let result = sweep(&system, &nu, &cfg.t, cfg.epsilon)?;
    let pass =
        result.fraction_above_threshold <= result.threshold.probability_bound + 1e-12 && result.pinsker_max_gap <= 1e-9;
    let text = format!(
        "uses {:?}  E[T] = {:.6e}  threshold {:.6}  ν(T ≥ threshold) = {:.6} ≤ {:.6}: {}\nPinsker: {} conditionals, largest gap {:.3e}\n",
        result.uses,
        result.mean_t,
        result.threshold.threshold,
        result.fraction_above_threshold,
        result.threshold.probability_bound,
        if pass { "pass" } else { "FAIL" },
        result.conditionals_checked,
        result.pinsker_max_gap,
    );
    let mut out = OutputSet::new();
    out.add_json("definetti.json", &json!({ "pass": pass, "block_sizes": schedule, "sweep": result }))?;
    let brief = json!({ "pass": pass, "mean_t": result.mean_t, "uses": result.uses });
    Ok((if pass { 0 } else { 1 }, text, out, brief))
}

#[derive(Serialize)]
struct QuantumReport {
    amplitudes_re: Vec<f64>,
    norm: f64,
    ideal_bell_value: f64,
    ideal_no_signaling: bool,
    majority_zero_probability: Vec<(String, f64)>,
    mixing: Vec<MixingCheck>,
    rotations: Vec<(f64, f64)>,
    configured_noise: NoiseSpec,
    configured_bell_value: f64,
    configured_no_signaling: bool,
    pass: bool,
}

#[derive(Serialize)]
struct MixingCheck {
    state_mixing: f64,
    bell_value: f64,
    expected: f64,
}

pub fn quantum_check_cmd(config: &ExperimentConfig) -> Result<Produced> {
    let cfg: QuantumCheckConfig = config.quantum_check.clone().unwrap_or_default();
    cfg.noise.validate()?;
    let state = build_state();
    let ideal = ideal_quantum_box();
    let ideal_bell_value = standard_bell_value(&ideal);
    let mixing = cfg
        .mixing_grid
        .iter()
        .map(|&m| {
            let b = noisy_quantum_box(&NoiseSpec { state_mixing: m, basis_rotation: 0.0 })?;
            Ok(MixingCheck { state_mixing: m, bell_value: standard_bell_value(&b), expected: 4.0 * m })
        })
        .collect::<Result<Vec<_>>>()?;
    let configured = noisy_quantum_box(&cfg.noise)?;
    let report = QuantumReport {
        amplitudes_re: state.amplitudes().iter().map(|a| a.re).collect(),
        norm: state.norm_sqr(),
        ideal_bell_value,
        ideal_no_signaling: is_no_signaling(ideal.table(), DEFAULT_TOL).0,
        majority_zero_probability: Setting::inequality_settings()
            .iter()
            .map(|u| (u.to_string(), ideal.majority_prob(*u, 0)))
            .collect(),
        rotations: rotation_sensitivity(&cfg.rotations)?,
        configured_noise: cfg.noise,
        configured_bell_value: standard_bell_value(&configured),
        configured_no_signaling: is_no_signaling(configured.table(), DEFAULT_TOL).0,
        pass: false,
        mixing,
    };
    let pass = report.ideal_bell_value.abs() <= 1e-12
        && report.ideal_no_signaling
        && report.configured_no_signaling
        && report.mixing.iter().all(|m| (m.bell_value - m.expected).abs() <= 1e-9);
    let report = QuantumReport { pass, ..report };
    let mut text = format!(
        "ideal Bell value {:.3e}  no-signaling {}\nconfigured noise {:?}: Bell value {:.6}\n",
        report.ideal_bell_value, report.ideal_no_signaling, report.configured_noise, report.configured_bell_value
    );
    for m in &report.mixing {
        let _ = writeln!(
            text,
            "state mixing {}: Bell value {:.12} (expected {})",
            m.state_mixing, m.bell_value, m.expected
        );
    }
    let mut out = OutputSet::new();
    out.add_json("quantum-check.json", &report)?;
    Ok((if pass { 0 } else { 1 }, text, out, json!({ "pass": pass, "ideal_bell_value": ideal_bell_value })))
}

/// `v` rounded to 12 significant digits, in scientific notation outside `[1e-4, 1e9)`.
pub fn format_value(v: f64) -> String {
    let rounded: f64 = format!("{v:.11e}").parse().unwrap_or(v);
    if rounded == 0.0 || (1e-4..1e9).contains(&rounded.abs()) {
        rounded.to_string()
    } else {
        format!("{rounded:e}")
    }
}

/// Number of leading block sizes listed individually in the bounds table.
const SCHEDULE_ROWS: usize = 8;

pub fn bounds_cmd(config: &ExperimentConfig) -> Result<Produced> {
    let cfg = ExperimentConfig::section(&config.bounds, "bounds")?;
    let params = cfg.params()?;
    let threshold = protocol::acceptance_threshold(&params);
    let rejection = protocol::azuma_rejection_bound(&params);
    let completeness = protocol::completeness_bound(&params);
    let f = protocol::f_epsilon(params.epsilon);
    let robust = protocol::robustness_threshold(params.epsilon, params.mu, params.delta);
    let prop = protocol::proposition_bound(&params);
    let rows = params.k.min(SCHEDULE_ROWS + 1);
    let schedule = block_sizes(params.epsilon, rows, params.t, cfg.k_exponent)?;

    let mut text = String::new();
    let mut row = |name: &str, value: String| {
        let _ = writeln!(text, "{name:<44} {value}");
    };
    row("epsilon", format_value(params.epsilon));
    row("delta", format_value(params.delta));
    row("mu", format_value(params.mu));
    row("k", params.k.to_string());
    row("t", format_value(params.t));
    row("acceptance threshold (1/2-e)^4 (d/2)(1-mu)", format_value(threshold));
    row("LP bound per majority bit (11+7d)/32", format_value(predictability_bound(params.delta)));
    row("rejection bound (not good)", format_value(rejection));
    row("acceptance bound (honest, Bell <= tolerance)", format_value(completeness));
    row("f(epsilon)", format_value(f));
    row("noise tolerance", format_value(robust));
    let big = |v: f64| {
        let shown = if v.is_finite() { format_value(v) } else { crate::definetti::scientific(prop.lp_term_log2) };
        if v >= 1.0 {
            format!("{shown} (vacuous)")
        } else {
            shown
        }
    };
    row("d_c bound: LP term", big(prop.lp_term));
    row("d_c bound: estimation term", format_value(prop.estimation_term));
    row("d_c bound: de Finetti term", format_value(prop.definetti_term));
    row("d_c bound: total", big(prop.total));
    row("d bound: total", big(prop.d_total));
    row("k exponent in block-size recursion", cfg.k_exponent.to_string());
    for i in 0..rows {
        row(&format!("n_{}", i + 1), schedule.display(i));
    }
    if params.k > rows {
        row("n_i for i > 9", "(recursion continues)".into());
    }
    let report = json!({
        "params": params,
        "acceptance_threshold": threshold,
        "lp_bound": predictability_bound(params.delta),
        "azuma_rejection_bound": rejection,
        "completeness_bound": completeness,
        "f_epsilon": f,
        "robustness_threshold": robust,
        "proposition": prop,
        "k_exponent": cfg.k_exponent,
        "block_sizes_log2": schedule.log2,
        "block_sizes": (0..rows).map(|i| schedule.display(i)).collect::<Vec<_>>(),
    });
    let mut out = OutputSet::new();
    out.add("bounds.txt", text.clone().into_bytes());
    out.add_json("bounds.json", &report)?;
    Ok((0, text, out, json!({ "acceptance_threshold": threshold, "d_c_bound": prop.total })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use config::{BoundsConfig, CertifyConfig};

    fn opts(dir: &std::path::Path) -> RunOptions {
        RunOptions { out: dir.to_path_buf(), seed: None, trials: None, jobs: Some(2) }
    }

    #[test]
    fn certify_zero() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            certify: Some(CertifyConfig { deltas: vec![0.0], cross_check: false }),
            ..Default::default()
        };
        let o = run(Command::Certify, &cfg, &opts(dir.path())).unwrap();
        assert_eq!(o.exit_code, 0);
        assert!(o.manifest.summary["max_optima"][0].as_f64().unwrap() <= 0.34375);
        manifest::verify_manifest(dir.path()).unwrap();
    }

    #[test]
    fn certify_empty_grid_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            certify: Some(CertifyConfig { deltas: vec![], cross_check: false }),
            ..Default::default()
        };
        assert!(matches!(run(Command::Certify, &cfg, &opts(dir.path())), Err(Error::Config(_))));
    }

    #[test]
    fn bounds_table_examples() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            bounds: Some(BoundsConfig { epsilon: 0.0, delta: 0.8, mu: 0.9, k: 1_000_000, t: 2.0, k_exponent: 2.0 }),
            ..Default::default()
        };
        let o = run(Command::Bounds, &cfg, &opts(dir.path())).unwrap();
        assert!(o.text.contains("0.0025"));
        let rejection = o.text.lines().find(|l| l.starts_with("rejection bound")).unwrap();
        assert!(rejection.ends_with(&format_value(1.0 - (-3.125f64).exp())), "{rejection}");
        assert!(o.text.lines().any(|l| l.starts_with("noise tolerance") && l.ends_with(" 0.01")));
        let huge = ExperimentConfig {
            bounds: Some(BoundsConfig { epsilon: 0.49, delta: 0.8, mu: 0.9, k: 3, t: 10.0, k_exponent: 2.0 }),
            ..Default::default()
        };
        let o = run(Command::Bounds, &huge, &opts(dir.path())).unwrap();
        let n3 = o.text.lines().find(|l| l.starts_with("n_3")).unwrap();
        assert!(n3.contains('e') && !n3.contains("inf"), "{n3}");
    }

    #[test]
    fn value_formatting() {
        assert_eq!(format_value(0.0024999999999999996), "0.0025");
        assert_eq!(format_value(0.0), "0");
        assert_eq!(format_value(1.5e-20), "1.5e-20");
        assert_eq!(format_value(178.0), "178");
    }

    #[test]
    fn quantum_check_defaults_pass() {
        let dir = tempfile::tempdir().unwrap();
        let o = run(Command::QuantumCheck, &ExperimentConfig::default(), &opts(dir.path())).unwrap();
        assert_eq!(o.exit_code, 0, "{}", o.text);
    }

    #[test]
    fn simulate_requires_section() {
        let dir = tempfile::tempdir().unwrap();
        let err = run(Command::Simulate, &ExperimentConfig::default(), &opts(dir.path())).unwrap_err();
        assert!(err.to_string().contains("[simulate]"));
    }
}
