use approx::assert_abs_diff_eq;
use randamp::bell::{is_no_signaling, standard_bell_value, Setting};
use randamp::lp::{
    build_instance, certification_report, certify_bound, predictability_bound, solve, DenseSimplex, LpBackend, MicroLp,
    LP_TOL,
};

/// Optima of every instance at each δ, from an independent interior-point/simplex solver;
/// identical across the 8 settings and both guesses.
const FIXTURES: [(f64, f64); 5] = [(0.0, 0.25), (0.1, 0.3125), (0.2, 0.375), (0.4, 0.425), (0.8, 0.475)];

#[test]
fn optima_match_fixtures() {
    for (delta, expected) in FIXTURES {
        let report = certification_report(delta, Some(&MicroLp)).unwrap();
        assert_eq!(report.instances.len(), 16);
        for inst in &report.instances {
            assert_abs_diff_eq!(inst.value, expected, epsilon = 1e-8);
            assert_abs_diff_eq!(inst.cross_check_value.unwrap(), expected, epsilon = 1e-7);
        }
        assert!(report.pass);
        assert!(report.max_backend_gap.unwrap() <= 1e-7);
        // the bound is not attained on this grid
        assert!(report.bound - report.max_optimum >= 0.006);
    }
}

#[test]
fn dual_certificates_verify_independently() {
    for (delta, _) in FIXTURES {
        for u in Setting::inequality_settings() {
            for guess in [0, 1] {
                let inst = build_instance(u, delta, guess).unwrap();
                let sol = solve(&inst).unwrap();
                let cert = sol.dual_certificate.as_ref().unwrap();
                let check = cert.check(&inst);
                assert!(check.residual < 1e-9, "{u} {guess}: residual {}", check.residual);
                assert!(check.min_multiplier > -1e-9);
                // weak duality from the certificate alone
                assert!(check.value >= sol.value - LP_TOL);
                assert_abs_diff_eq!(check.value, sol.value, epsilon = 1e-8);
                assert!(cert.certificate_value() <= 2.0 * predictability_bound(delta) + 1e-8);
                assert!(cert.lambda().iter().all(|&l| l >= -1e-9));
            }
        }
    }
}

#[test]
fn optimizers_are_feasible_boxes() {
    for (delta, expected) in FIXTURES {
        let u = Setting::new(0b1011).unwrap();
        let sol = DenseSimplex::default().solve(&build_instance(u, delta, 1).unwrap()).unwrap();
        assert!(is_no_signaling(sol.nsbox.table(), 1e-8).0);
        assert!(standard_bell_value(&sol.nsbox) <= delta + 1e-8);
        let lean = sol.nsbox.majority_prob(u, 1) - 0.5;
        assert_abs_diff_eq!(lean, expected, epsilon = 1e-8);
    }
}

#[test]
fn optimum_concave_and_increasing_in_delta() {
    let grid: Vec<f64> = (0..=16).map(|i| i as f64 * 0.05).collect();
    let u = Setting::new(0b0100).unwrap();
    let values: Vec<f64> = grid.iter().map(|&d| solve(&build_instance(u, d, 0).unwrap()).unwrap().value).collect();
    for w in values.windows(2) {
        assert!(w[1] >= w[0] - 1e-9);
    }
    for w in values.windows(3) {
        assert!(w[1] >= 0.5 * (w[0] + w[2]) - 1e-9);
    }
    for (d, v) in grid.iter().zip(&values) {
        assert!(*v <= predictability_bound(*d) + 1e-8);
    }
}

#[test]
fn certify_bound_passes() {
    let r = certify_bound(0.0).unwrap();
    assert!(r.max_optimum <= 0.34375);
}
