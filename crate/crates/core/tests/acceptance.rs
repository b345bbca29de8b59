//! Acceptance criteria 1-11. Runs as a plain binary and prints one line per
//! criterion; pass criterion numbers as arguments to run a subset.

use std::time::Instant;

use imvar::approx::{fit_scalar, fit_vector, SAConfig};
use imvar::calibration::{
    timing_accuracy_study, validity_margin, validity_study, Approximation, ContourMethod, Scenario,
};
use imvar::contour::{
    exact_binomial_contour, grid_eval, mc_contour, AxisSpec, ExactBinomialContour, McContour, PossibilityContour,
};
use imvar::family::{GaussianScalarFamily, GaussianVectorFamily, VariationalFamily};
use imvar::inference::{
    choquet_upper_expectation, lower_probability, upper_probability, ChoquetSpec, Hypothesis, SearchBudget,
};
use imvar::model::{
    anchor, soft_threshold, Anchor, Bernoulli, GammaParam, LogNormal, LogNormalParam, Model, ModelSpec,
};
use imvar::nuisance::{censored_contour, CensoringDistribution};
use imvar::rng::stream;
use nalgebra::DMatrix;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn binomial_data() -> imvar::model::Dataset {
    Bernoulli::dataset(15, 6)
}

fn c1_exact_vs_mc() -> Outcome {
    let m = 10_000;
    let contour = McContour::new(Bernoulli, binomial_data(), m).unwrap();
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for i in 0..20 {
        let theta = 0.05 + 0.9 * i as f64 / 19.0;
        let exact = exact_binomial_contour(15, 6, theta);
        let mc = contour.evaluate(&[theta], 1000 + i as u64).value;
        let tol = 4.0 * (exact * (1.0 - exact) / m as f64).sqrt();
        pass &= (mc - exact).abs() <= tol;
        worst = worst.max((mc - exact).abs() / tol.max(f64::MIN_POSITIVE));
    }
    outcome(pass, format!("worst |mc-exact|/tol = {worst:.3}"))
}

fn binomial_scenario(replications: usize) -> Scenario {
    Scenario {
        model: ModelSpec::Binomial,
        truth: vec![0.4],
        generator: None,
        n: 15,
        replications,
        contour: ContourMethod::Exact,
        approximation: Approximation::None,
        sa: SAConfig::default(),
        grid: vec![],
        covariates: None,
        quantile: None,
        censoring: None,
        alphas: vec![0.05, 0.1, 0.25, 0.5],
        seed: 2024,
    }
}

fn c2_validity() -> Outcome {
    let r = 2000;
    let report = validity_study(&binomial_scenario(r)).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (&a, &c) in report.alphas.iter().zip(&report.cdf) {
        let bound = a + validity_margin(a, r);
        pass &= c <= bound;
        parts.push(format!("F({a})={c:.4}<={bound:.4}"));
    }
    outcome(pass, parts.join(" "))
}

fn c3_credal_mass() -> Outcome {
    let data = binomial_data();
    let contour = ExactBinomialContour::new(15, 6);
    let family = GaussianScalarFamily::new(anchor(&Bernoulli, &data).unwrap(), 1.0).unwrap();
    let config = SAConfig::with_seed(31);
    let (fit, trace) = fit_scalar(&family, &contour, &config).unwrap();
    let mut rng = stream(77, &[]);
    let draws = 100_000;
    let inside = (0..draws)
        .filter(|_| {
            let t = fit.sample_one(&mut rng)[0];
            t > 0.0 && t < 1.0 && exact_binomial_contour(15, 6, t) > 0.1
        })
        .count();
    let mass = inside as f64 / draws as f64;
    outcome(
        (mass - 0.9).abs() <= 0.05,
        format!(
            "xi = {:.4}, {} iterations, Q(cut) = {mass:.4}",
            fit.xi,
            trace.iterations()
        ),
    )
}

fn bivariate_timing(n: usize) -> imvar::calibration::TimingReport {
    let scenario = Scenario {
        model: ModelSpec::BivariateNormal,
        truth: vec![0.5],
        generator: None,
        n,
        replications: 100,
        contour: ContourMethod::Naive,
        approximation: Approximation::Vector,
        sa: SAConfig {
            m_inner: 500,
            ..SAConfig::default()
        },
        grid: vec![AxisSpec::new(0.0, 0.95, 100)],
        covariates: None,
        quantile: None,
        censoring: None,
        alphas: vec![0.5],
        seed: 50 + n as u64,
    };
    timing_accuracy_study(&scenario).unwrap()
}

fn c4_table_trend() -> Outcome {
    let reports: Vec<_> = [50, 100, 200].into_iter().map(bivariate_timing).collect();
    let l1: Vec<f64> = reports.iter().map(|r| r.mean_l1).collect();
    let rel: Vec<f64> = reports.iter().map(|r| r.relative_time).collect();
    let decreasing = l1[0] > l1[1] && l1[1] > l1[2];
    let drop = 1.0 - l1[2] / l1[0];
    let faster = rel.iter().all(|&r| r > 1.0);
    outcome(
        decreasing && drop >= 0.4 && faster,
        format!(
            "L1 {:.4}/{:.4}/{:.4} (drop {:.0}%), relative time {:.2}/{:.2}/{:.2}",
            l1[0],
            l1[1],
            l1[2],
            100.0 * drop,
            rel[0],
            rel[1],
            rel[2]
        ),
    )
}

fn c5_vector_consistency() -> Outcome {
    let data = binomial_data();
    let contour = ExactBinomialContour::new(15, 6);
    let a = anchor(&Bernoulli, &data).unwrap();
    let scalar = GaussianScalarFamily::new(a.clone(), 1.0).unwrap();
    let vector = GaussianVectorFamily::new(a, vec![1.0]).unwrap();
    let gap = (0..20)
        .map(|s| {
            let config = SAConfig::with_seed(500 + s);
            let (fs, _) = fit_scalar(&scalar, &contour, &config).unwrap();
            let (fv, _) = fit_vector(&vector, &contour, &config).unwrap();
            (fv.xi[0] - fs.xi).abs()
        })
        .sum::<f64>()
        / 20.0;

    // Target: a Gaussian contour with precision diag(4,1) and index (1.6, 0.7).
    let j = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.0]));
    let anchor2 = Anchor::new(vec![0.3, -0.2], j).unwrap();
    let target = GaussianVectorFamily::new(anchor2.clone(), vec![1.6, 0.7]).unwrap();
    let start = GaussianVectorFamily::new(anchor2, vec![1.0, 1.0]).unwrap();
    let (fit, _) = fit_vector(&start, &target, &SAConfig::with_seed(9)).unwrap();
    let mut worst: f64 = 0.0;
    for (plus, minus) in fit.boundary_points(0.1).unwrap() {
        for p in [plus, minus] {
            worst = worst.max((target.contour(&p) - 0.1).abs());
        }
    }
    outcome(
        gap < 0.1 && worst <= 0.04,
        format!(
            "mean |xi_v - xi_s| = {gap:.4}; diag(4,1) xi = ({:.3}, {:.3}), max |pi - 0.1| = {worst:.4}",
            fit.xi[0], fit.xi[1]
        ),
    )
}

fn c6_gamma() -> Outcome {
    let alphas: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let scenario = Scenario {
        model: ModelSpec::Gamma {
            param: GammaParam::LogShapeLogScale,
        },
        truth: vec![7f64.ln(), 3f64.ln()],
        generator: None,
        n: 25,
        replications: 500,
        contour: ContourMethod::Naive,
        approximation: Approximation::Vector,
        sa: SAConfig::default(),
        grid: vec![],
        covariates: None,
        quantile: None,
        censoring: None,
        alphas: alphas.clone(),
        seed: 7,
    };
    let report = validity_study(&scenario).unwrap();
    let (dev, worst) = alphas
        .iter()
        .zip(&report.cdf)
        .map(|(a, c)| ((c - a).abs(), *a))
        .fold((0.0, 0.0), |m, v| if v.0 > m.0 { v } else { m });
    outcome(
        dev <= 0.06,
        format!(
            "max |F(a) - a| = {dev:.4} at a = {worst} ({} failures)",
            report.failures
        ),
    )
}

fn c7_lasso() -> Outcome {
    let d = 50;
    let mut truth = vec![0.0; d];
    truth[..5].fill(5.0);
    let scenario = Scenario {
        model: ModelSpec::NormalMeans {
            dim: d,
            sigma: 1.0,
            lambda: None,
        },
        truth,
        generator: None,
        n: d,
        replications: 500,
        contour: ContourMethod::Naive,
        approximation: Approximation::Vector,
        sa: SAConfig::default(),
        grid: vec![],
        covariates: None,
        quantile: None,
        censoring: None,
        alphas: vec![0.1],
        seed: 8,
    };
    let report = validity_study(&scenario).unwrap();
    let (mut signal, mut noise) = (0.0, 0.0);
    for xi in &report.xi_hats {
        signal += xi[..5].iter().sum::<f64>() / 5.0;
        noise += xi[5..].iter().sum::<f64>() / (d - 5) as f64;
    }
    let k = report.xi_hats.len() as f64;
    let (signal, noise) = (signal / k, noise / k);
    let f = report.cdf[0];
    outcome(
        signal > noise && (0.07..=0.13).contains(&f),
        format!("mean xi signal {signal:.3} vs noise {noise:.3}; F(0.1) = {f:.4}"),
    )
}

fn c8_soft_threshold() -> Outcome {
    let mut rng = stream(88, &[]);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x: f64 = rng.random_range(-6.0..6.0);
        let lambda: f64 = rng.random_range(0.0..3.0);
        let objective = |t: f64| 0.5 * (x - t).powi(2) + lambda * t.abs();
        let (mut lo, mut hi) = (-x.abs() - 1.0, x.abs() + 1.0);
        let mut best = 0.0;
        for _ in 0..8 {
            let h = (hi - lo) / 1000.0;
            best = (0..=1000)
                .map(|i| lo + h * i as f64)
                .min_by(|a, b| objective(*a).total_cmp(&objective(*b)))
                .unwrap();
            lo = best - 2.0 * h;
            hi = best + 2.0 * h;
        }
        worst = worst.max((soft_threshold(x, lambda) - best).abs());
    }
    outcome(worst <= 1e-6, format!("max deviation {worst:.2e}"))
}

fn c9_quantile() -> Outcome {
    let scenario = Scenario {
        model: ModelSpec::Gamma {
            param: GammaParam::ShapeScale,
        },
        truth: vec![2.53],
        generator: Some(vec![4.0, 1.0]),
        n: 100,
        replications: 250,
        contour: ContourMethod::Bootstrap,
        approximation: Approximation::None,
        sa: SAConfig {
            m_inner: 500,
            ..SAConfig::default()
        },
        grid: vec![],
        covariates: None,
        quantile: Some(0.25),
        censoring: None,
        alphas: vec![0.1],
        seed: 9,
    };
    let report = validity_study(&scenario).unwrap();
    let f = report.cdf[0];
    outcome(f <= 0.15, format!("P(pi <= 0.1) = {f:.4}"))
}

fn c10_censored() -> Outcome {
    let model = LogNormal::new(LogNormalParam::MeanVariance);
    let truth = [1.0, 0.25];
    let data = model.sample(&truth, 40, &mut stream(10, &[]));
    let floor = data.responses.iter().cloned().fold(f64::INFINITY, f64::min);
    let ghat = CensoringDistribution::degenerate(0.5 * floor);
    let m = 4000;
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let theta = [0.8 + 0.04 * i as f64, 0.25 + 0.01 * (i as f64 - 5.0)];
        let c = censored_contour(&model, &data, &ghat, &theta, m, 100 + i)
            .unwrap()
            .value;
        let u = mc_contour(&model, &data, &theta, m, 200 + i).unwrap().value;
        let p = 0.5 * (c + u);
        let se = (2.0 * p * (1.0 - p) / m as f64).sqrt().max(1.0 / m as f64);
        worst = worst.max((c - u).abs() / se);
    }
    outcome(worst <= 3.0, format!("max |censored - uncensored| = {worst:.2} se"))
}

fn c11_properties() -> Outcome {
    let mut failures = Vec::new();
    let j = DMatrix::from_row_slice(2, 2, &[3.0, 0.8, 0.8, 1.5]);
    let a = Anchor::new(vec![0.2, 0.4], j).unwrap();
    let g = GaussianScalarFamily::new(a.clone(), 1.3).unwrap();
    let budget = SearchBudget {
        seed: 11,
        ..SearchBudget::default()
    };
    let sup = |h: &Hypothesis| upper_probability(&g, h, &budget, None).unwrap().value;

    let a1 = Hypothesis::Box {
        lo: vec![1.0, f64::NEG_INFINITY],
        hi: vec![2.0, f64::INFINITY],
    };
    let a2 = Hypothesis::HalfSpace {
        a: vec![-1.0, -1.0],
        b: 0.5,
    };
    let union = Hypothesis::Union(vec![a1.clone(), a2.clone()]);
    if (sup(&union) - sup(&a1).max(sup(&a2))).abs() > 1e-12 {
        failures.push("maxitivity");
    }
    let wider = Hypothesis::Box {
        lo: vec![0.5, f64::NEG_INFINITY],
        hi: vec![2.0, f64::INFINITY],
    };
    if sup(&a1) > sup(&wider) + 1e-12 {
        failures.push("monotonicity");
    }
    for h in [&a1, &a2, &wider] {
        let low = lower_probability(&g, h, &budget, None).unwrap().value;
        let comp = sup(&h.complement().unwrap());
        if (low - (1.0 - comp)).abs() > 1e-12 || low > sup(h) + 1e-12 {
            failures.push("conjugacy");
        }
    }

    let constant = ChoquetSpec::new(|_: &[f64]| 2.5).with_budget(budget);
    if (choquet_upper_expectation(&g, &constant, None).unwrap().value - 2.5).abs() > 1e-6 {
        failures.push("choquet constant");
    }
    let ind_h = a1.clone();
    let indicator = ChoquetSpec::new(move |t: &[f64]| if ind_h.contains(t) { 1.0 } else { 0.0 }).with_budget(budget);
    let e = choquet_upper_expectation(&g, &indicator, None).unwrap().value;
    if (e - sup(&a1)).abs() > 1.0 / 200.0 {
        failures.push("choquet indicator");
    }

    let v = GaussianVectorFamily::new(a, vec![1.3, 1.3]).unwrap();
    let mut rng = stream(12, &[]);
    for _ in 0..200 {
        let t: Vec<f64> = (0..2).map(|_| rng.random_range(-3.0..3.0)).collect();
        let (qs, qv) = (g.quadratic(&t) / (1.3 * 1.3), v.quadratic(&t));
        let (cs, cv) = (g.contour(&t), v.contour(&t));
        if (qs - qv).abs() > 1e-10 * qs.abs() || (cs - cv).abs() > 1e-10 * cs.abs() {
            failures.push("scalar/vector consistency");
            break;
        }
    }

    let contour = McContour::new(Bernoulli, binomial_data(), 300).unwrap();
    let axes = [AxisSpec::new(0.05, 0.95, 40)];
    let one = grid_eval(&contour, &axes, 5, Some(1)).unwrap();
    let four = grid_eval(&contour, &axes, 5, Some(4)).unwrap();
    let study = |t| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .unwrap()
            .install(|| validity_study(&binomial_scenario(200)).unwrap())
            .values
    };
    if one != four || study(1) != study(3) {
        failures.push("thread determinism");
    }
    failures.dedup();
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "all invariants hold".into()
        } else {
            format!("failed: {}", failures.join(", "))
        },
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("exact vs Monte Carlo binomial contour", c1_exact_vs_mc),
        ("validity of the exact binomial contour", c2_validity),
        ("scalar fit credal-mass matching", c3_credal_mass),
        ("naive vs variational timing/accuracy trend", c4_table_trend),
        ("vector fit consistency", c5_vector_consistency),
        ("gamma vector-fit calibration", c6_gamma),
        ("lasso many-means scenario", c7_lasso),
        ("soft-threshold correctness", c8_soft_threshold),
        ("nonparametric quantile IM validity", c9_quantile),
        ("censored-data reduction", c10_censored),
        ("property suites", c11_properties),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let k = i + 1;
        if !selected.is_empty() && !selected.contains(&k) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {k:>2} [{}] {name}: {} ({secs:.1} s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
