//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the observed numbers once its assertions hold, and enforcing its time
//! budget.

use std::time::Instant;

use brokerage::dist::Distribution;
use brokerage::eval::{
    expected_fee_revenue, expected_max_surplus, expected_myerson_revenue, ratio_report,
    EvalMethod,
};
use brokerage::mech::{
    bne_affine, bne_general, mhr_constant_schedule, run_fee_mechanism, thm1_schedule,
    FeeSchedule,
};
use brokerage::num;
use brokerage::verify::{
    check_ln13, check_main1, check_max_iid_mhr, check_mhr, check_optimal_fee,
    check_prior_independent_exact8, check_unif_3approx, gdelta_experiment,
    random_regular_staircase, random_staircase_seller,
};

fn quad() -> EvalMethod {
    EvalMethod::Quadrature { abs_tol: 1e-8 }
}

fn uniform01() -> Distribution {
    Distribution::uniform(0.0, 1.0).unwrap()
}

fn budget(start: Instant, seconds: f64, what: &str) {
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < seconds, "{what} took {elapsed:.1}s, budget {seconds}s");
}

#[test]
fn criterion_1_uniform_pair_closed_forms() {
    let start = Instant::now();
    let buyer = uniform01();
    let seller = uniform01();
    let w = FeeSchedule::Affine { alpha: 2.0, beta: 1.0 };
    let strategy = bne_affine(&buyer, 2.0, 1.0).unwrap();

    let rev = expected_fee_revenue(&buyer, &seller, &w, &strategy, &quad()).unwrap();
    let opt = expected_myerson_revenue(&buyer, &seller, &quad()).unwrap();
    let sur = expected_max_surplus(&buyer, &seller, &quad()).unwrap();
    assert!((rev.value - 1.0 / 48.0).abs() <= 1e-6, "rev {}", rev.value);
    assert!((opt.value - 1.0 / 24.0).abs() <= 1e-6, "opt {}", opt.value);
    assert!((sur.value - 1.0 / 6.0).abs() <= 1e-6, "surplus {}", sur.value);

    let report = ratio_report(&buyer, &seller, &w, &quad()).unwrap();
    assert!((report.ratio_rev - 2.0).abs() <= 1e-5, "ratio_rev {}", report.ratio_rev);
    assert!((report.ratio_surplus - 8.0).abs() <= 1e-5, "ratio_surplus {}", report.ratio_surplus);

    let mc = EvalMethod::MonteCarlo { n_samples: 1_000_000, seed: 2024 };
    let rev_mc = expected_fee_revenue(&buyer, &seller, &w, &strategy, &mc).unwrap();
    let opt_mc = expected_myerson_revenue(&buyer, &seller, &mc).unwrap();
    let sur_mc = expected_max_surplus(&buyer, &seller, &mc).unwrap();
    for (est, truth, name) in [
        (rev_mc, 1.0 / 48.0, "rev"),
        (opt_mc, 1.0 / 24.0, "opt_rev"),
        (sur_mc, 1.0 / 6.0, "surplus"),
    ] {
        assert!(
            (est.value - truth).abs() <= 4.0 * est.error,
            "mc {name} {} vs {truth}, se {}",
            est.value,
            est.error
        );
    }

    budget(start, 5.0, "criterion 1");
    println!(
        "PASS criterion 1: uniform pair rev {:.8} opt {:.8} surplus {:.8} ratios {:.6}/{:.6}",
        rev.value, opt.value, sur.value, report.ratio_rev, report.ratio_surplus
    );
}

#[test]
fn criterion_2_prior_independent_surplus_identity() {
    let start = Instant::now();
    let mut sellers = vec![
        Distribution::worst_case_seller(0.1).unwrap(),
        Distribution::worst_case_seller(0.01).unwrap(),
    ];
    for i in 0..20 {
        sellers.push(random_staircase_seller(99, i, 6).unwrap());
    }
    for s in &sellers {
        let check = check_prior_independent_exact8(s, &quad()).unwrap();
        assert!(check.pass, "{}", check.summary_line());
        assert!(check.observed <= 1e-6, "{}", check.summary_line());
    }
    budget(start, 30.0, "criterion 2");
    println!(
        "PASS criterion 2: surplus = 8 x rev(2,1) and ratio 9 at alpha 1.5 and 3 on {} sellers",
        sellers.len()
    );
}

#[test]
fn criterion_3_affine_schedule_bounds() {
    let start = Instant::now();
    let buyers = [
        uniform01(),
        Distribution::power(2.0, 1.0).unwrap(),
        Distribution::power(5.0, 1.0).unwrap(),
        Distribution::exponential(1.0).unwrap(),
    ];
    let mut sellers = vec![uniform01()];
    for i in 0..10 {
        sellers.push(random_regular_staircase(17, i, 0.0, 0.9, 8).unwrap());
    }
    let mut n = 0;
    for b in &buyers {
        for s in &sellers {
            let checks = check_main1(b, s, &quad())
                .unwrap_or_else(|e| panic!("buyer {b} seller {s}: {e}"));
            for c in checks {
                assert!(c.pass, "{}", c.summary_line());
                n += 1;
            }
        }
    }
    budget(start, 120.0, "criterion 3");
    println!("PASS criterion 3: {n} revenue/surplus bound checks over 4 buyers x 11 sellers");
}

#[test]
fn criterion_4_uniform_three_approx() {
    let start = Instant::now();
    let mut sellers = vec![
        uniform01(),
        Distribution::worst_case_seller(0.1).unwrap(),
        Distribution::worst_case_seller(0.01).unwrap(),
    ];
    for i in 0..10 {
        sellers.push(random_regular_staircase(23, i, 0.0, 0.9, 8).unwrap());
    }
    for (i, s) in sellers.iter().enumerate() {
        let check = check_unif_3approx(s, &quad()).unwrap();
        assert!(check.pass, "{}", check.summary_line());
        if i == 0 {
            assert!(check.fixtures.contains("y 5.00000000e-1"), "{}", check.fixtures);
            assert!(check.fixtures.contains("3.51562500e-2"), "{}", check.fixtures);
        }
    }
    budget(start, 60.0, "criterion 4");
    println!(
        "PASS criterion 4: best of the two candidate schedules is a 3-approximation on {} sellers",
        sellers.len()
    );
}

#[test]
fn criterion_5_mhr_constant_fee() {
    let start = Instant::now();
    let buyer = uniform01();
    let seller = uniform01();
    let w = mhr_constant_schedule(&buyer, &seller, 10_000).unwrap();
    let (alpha, k) = w.as_affine().unwrap();
    assert_eq!(alpha, 1.0);
    assert!((k - 1.0 / 3.0).abs() <= 1e-3, "fee {k}");
    let strategy = bne_affine(&buyer, 1.0, k).unwrap();
    let rev = expected_fee_revenue(&buyer, &seller, &w, &strategy, &quad()).unwrap();
    let sur = expected_max_surplus(&buyer, &seller, &quad()).unwrap();
    assert!((rev.value - 1.0 / 27.0).abs() <= 1e-6, "rev {}", rev.value);
    assert!((sur.value / rev.value - 4.5).abs() <= 1e-3, "ratio {}", sur.value / rev.value);

    let pairs = [
        (Distribution::uniform(1.0, 2.0).unwrap(), uniform01()),
        (Distribution::uniform(0.0, 2.0).unwrap(), uniform01()),
        (Distribution::power(2.0, 1.0).unwrap(), uniform01()),
    ];
    for (b, s) in &pairs {
        let check = check_mhr(b, s, &quad()).unwrap();
        assert!(check.pass, "{}", check.summary_line());
    }
    budget(start, 60.0, "criterion 5");
    println!(
        "PASS criterion 5: constant fee {k:.6} earns {:.8} (ratio {:.4}) plus {} more pairs",
        rev.value,
        sur.value / rev.value,
        pairs.len()
    );
}

#[test]
fn criterion_6_optimal_recovery() {
    let start = Instant::now();
    let exp = Distribution::exponential(1.0).unwrap();
    let rgpd = Distribution::rgpd(-6.0, 0.25, 1.0).unwrap();

    let a = check_optimal_fee(&uniform01(), &uniform01(), &quad()).unwrap();
    let b = check_optimal_fee(&exp, &rgpd, &quad()).unwrap();
    let c = check_ln13(&uniform01(), 1.0, 1.0, -1.0, &quad()).unwrap();
    let d = check_ln13(&exp, 1.0, 0.25, -6.0, &quad()).unwrap();
    for check in [&a, &b, &c, &d] {
        assert!(check.pass, "{}", check.summary_line());
        assert!(check.observed <= 1e-4, "{}", check.summary_line());
    }
    budget(start, 60.0, "criterion 6");
    println!(
        "PASS criterion 6: optimal-fee and closed-form schedules recover the benchmark within 1e-4 \
         (gaps {:.2e} {:.2e} {:.2e} {:.2e})",
        a.observed, b.observed, c.observed, d.observed
    );
}

#[test]
fn criterion_7_shrinking_delta() {
    let start = Instant::now();
    let deltas = [0.1, 0.01, 0.001];
    let (rows, checks) = gdelta_experiment(&deltas, &quad()).unwrap();
    for c in &checks {
        assert!(c.pass, "{}", c.summary_line());
    }
    for r in &rows {
        assert!(
            (r.max_surplus - r.closed_form_surplus).abs() <= 1e-5,
            "delta {}: surplus {} vs closed form {}",
            r.delta,
            r.max_surplus,
            r.closed_form_surplus
        );
    }
    for pair in rows.windows(2) {
        assert!(
            pair[1].surplus_gap > pair[0].surplus_gap,
            "surplus gap must grow as delta shrinks: {} then {}",
            pair[0].surplus_gap,
            pair[1].surplus_gap
        );
    }
    for r in &rows {
        assert!(
            r.revenue_gap >= r.surplus_gap / 8.0 - 1e-6,
            "delta {}: revenue gap {} vs surplus gap {}",
            r.delta,
            r.revenue_gap,
            r.surplus_gap
        );
    }
    budget(start, 300.0, "criterion 7");
    let gaps: Vec<String> = rows.iter().map(|r| format!("{:.4}", r.surplus_gap)).collect();
    println!("PASS criterion 7: surplus gaps grow without bound: {}", gaps.join(" < "));
}

#[test]
fn criterion_8_structural_identities() {
    let start = Instant::now();
    let buyer = uniform01();
    let seller = uniform01();

    // Equilibrium solver consistency: scan-and-bisect agrees with the
    // closed form on interior costs, and both are monotone.
    let grid: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
    let schedules = [(2.0, 1.0), (1.0, 0.25), (0.5, 0.1), (1.5, 0.3), (3.0, 0.7)];
    for &(alpha, beta) in &schedules {
        let w = FeeSchedule::Affine { alpha, beta };
        let closed = bne_affine(&buyer, alpha, beta).unwrap();
        let general = bne_general(&buyer, &w, &grid).unwrap();
        let cmax = alpha - beta - 0.01;
        let mut last = f64::NEG_INFINITY;
        for &c in &grid {
            if c <= cmax {
                let pc = closed.price(c);
                let pg = general.price(c);
                assert!((pc - pg).abs() <= 1e-8, "alpha {alpha} beta {beta} c {c}: {pc} vs {pg}");
                assert!(pg >= last, "bid must be nondecreasing at c {c}");
                last = pg;
            }
        }
    }

    // Ex-post rationality on a 100x100 grid under the closed-form schedule.
    let w = thm1_schedule(&buyer).unwrap();
    let strategy = bne_affine(&buyer, 2.0, 1.0).unwrap();
    let mut trades = 0;
    for i in 0..100 {
        for j in 0..100 {
            let v = (i as f64 + 0.5) / 100.0;
            let c = (j as f64 + 0.5) / 100.0;
            let out = run_fee_mechanism(&w, &strategy, v, c);
            if out.traded {
                trades += 1;
                assert!(out.buyer_payment <= v + 1e-12, "buyer pays above value");
                assert!(out.seller_receipt >= c - 1e-12, "seller paid below cost");
                assert!(out.broker_fee >= -1e-12, "negative fee");
                assert!(
                    (out.buyer_payment - out.seller_receipt - out.broker_fee).abs() <= 1e-12,
                    "payments must balance"
                );
            }
        }
    }
    assert!(trades > 0, "the closed-form schedule must trade somewhere");

    // Hazard-rate and virtual-preference identities.
    let exp = Distribution::exponential(1.0).unwrap();
    for v in [0.1, 0.5, 1.0, 2.0] {
        assert!((exp.hazard(v).unwrap() - 1.0).abs() <= 1e-9);
        assert!((exp.virtual_value(v).unwrap() - (v - 1.0)).abs() <= 1e-9);
    }
    for v in [0.1, 0.3, 0.7, 0.9] {
        assert!((buyer.hazard(v).unwrap() - 1.0 / (1.0 - v)).abs() <= 1e-9);
        assert!((buyer.virtual_value(v).unwrap() - (2.0 * v - 1.0)).abs() <= 1e-9);
        assert!((seller.virtual_cost(v).unwrap() - 2.0 * v).abs() <= 1e-9);
        let t = buyer.virtual_value(v).unwrap();
        assert!((buyer.inverse_virtual_value(t).unwrap() - v).abs() <= 1e-9);
    }

    // Partial-integration identity: E[(phi_B(v) - t)^+] = (tau - t) S(tau)
    // where tau = phi_B^{-1}(t), checked by quadrature.
    for t in [-0.5, 0.0, 0.3, 0.6] {
        let tau = buyer.inverse_virtual_value(t).unwrap();
        let lhs = num::integrate(
            |v| (buyer.virtual_value(v).unwrap() - t).max(0.0) * buyer.pdf(v),
            tau,
            1.0,
            1e-10,
        )
        .unwrap()
        .value;
        let rhs = (tau - t) * buyer.survival(tau);
        assert!((lhs - rhs).abs() <= 1e-8, "t {t}: {lhs} vs {rhs}");
    }

    // The same identity drives the two benchmark paths; they must agree.
    let mc = EvalMethod::MonteCarlo { n_samples: 1_000_000, seed: 77 };
    let q = expected_myerson_revenue(&buyer, &seller, &quad()).unwrap();
    let m = expected_myerson_revenue(&buyer, &seller, &mc).unwrap();
    assert!((q.value - m.value).abs() <= 4.0 * m.error, "{} vs {}", q.value, m.value);

    // Maxima of iid MHR draws stay MHR.
    for b in [&buyer, &exp] {
        let checks = check_max_iid_mhr(b, &seller, &[1, 2, 3, 5, 10], &quad()).unwrap();
        for c in &checks {
            assert!(c.pass, "{}", c.summary_line());
        }
    }

    budget(start, 30.0, "criterion 8");
    println!(
        "PASS criterion 8: equilibrium, ex-post rationality, hazard and payment identities, \
         iid-maximum closure"
    );
}

#[test]
fn criterion_9_cli_determinism() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_brokerage");

    let run = |out: &std::path::Path, args: &[&str]| {
        let result = std::process::Command::new(bin)
            .args(args)
            .arg("--out")
            .arg(out)
            .output()
            .expect("binary runs");
        assert!(result.status.success(), "{args:?}");
        std::fs::read(out).unwrap()
    };

    let sweep_args = [
        "sweep",
        "--buyer",
        "uniform:0,1",
        "--seller",
        "uniform:0,1",
        "--alpha-range",
        "0.2,2",
        "--beta-range",
        "0,1",
        "--steps",
        "3",
        "--method",
        "mc",
        "--samples",
        "5000",
        "--seed",
        "11",
    ];
    let a = run(&dir.path().join("a.csv"), &sweep_args);
    let b = run(&dir.path().join("b.csv"), &sweep_args);
    assert!(!a.is_empty());
    assert_eq!(a, b, "Monte Carlo sweep must be byte-identical under one seed");

    let verify_args = ["verify", "exact8"];
    let c = run(&dir.path().join("c.csv"), &verify_args);
    let d = run(&dir.path().join("d.csv"), &verify_args);
    assert!(!c.is_empty());
    assert_eq!(c, d, "randomized fixture battery must be byte-identical run to run");

    budget(start, 60.0, "criterion 9");
    println!("PASS criterion 9: repeated CLI runs produce byte-identical output files");
}
