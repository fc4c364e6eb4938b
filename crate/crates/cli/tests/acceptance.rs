//! Acceptance suite. Each test prints one `PASS`/`FAIL` line; run with
//! `cargo test -p mvope-cli --test acceptance -- --nocapture --test-threads=1`
//! to see them in order.

use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;

use mvope::estimators::ess;
use mvope::learner::{crm_lower_bound, default_init};
use mvope::simulation::{
    make_coverage_dataset, make_learning_benchmark, min_sample_size_for_coverage, run_cod_study,
    run_coverage_study, sample_cell, true_value, CodConfig, CoverageConfig, CoverageRow, Family,
};
use mvope::{
    baseline_shifted_ips, corrected_sample_size, evaluate, ips_value, ips_variance, learn, sample,
    snips_analytic_gradient, snips_value, snips_variance, Action, CrmConfig, EssMethod,
    EstimatorKind, KernelConfig, LoggedDataset, Policy, RngSeed,
};
use rand::Rng;
use rayon::prelude::*;

const COVERAGE_SEED: u64 = 1;

fn verdict(id: u32, title: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} {tag}  {title}: {detail}");
    assert!(pass, "criterion {id} ({title}) failed: {detail}");
}

fn act(v: Vec<f64>) -> Action<f64> {
    Action::new(v).unwrap()
}

fn coverage_table() -> &'static [CoverageRow] {
    static TABLE: OnceLock<Vec<CoverageRow>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let config = CoverageConfig {
            target_sigmas: vec![1.0, 0.5, 0.25, 0.125],
            sample_sizes: (3..=12).map(|k| 1usize << k).collect(),
            replications: 1000,
            kinds: vec![EstimatorKind::Snips],
            methods: EssMethod::ALL.to_vec(),
            ..CoverageConfig::desk(COVERAGE_SEED)
        };
        run_coverage_study(&config).unwrap()
    })
}

fn coverage_at(method: EssMethod, sigma: f64, n: usize) -> f64 {
    coverage_table()
        .iter()
        .find(|r| r.method == method && r.target_sigma == sigma && r.n == n)
        .map(|r| r.coverage)
        .unwrap()
}

#[test]
fn c01_coverage_gap() {
    let clt = coverage_at(EssMethod::CltOnly, 0.125, 64);
    let dinfr = coverage_at(EssMethod::DInfR, 0.125, 64);
    let pass = clt < 0.90 && dinfr - clt >= 0.05;
    verdict(
        1,
        "coverage gap at sigma=0.125, N=64",
        pass,
        &format!(
            "clt={clt:.3} (<0.90), dinfr={dinfr:.3}, gap={:.3} (>=0.05)",
            dinfr - clt
        ),
    );
}

#[test]
fn c02_coverage_convergence() {
    let mut misses = Vec::new();
    let mut seen = Vec::new();
    for sigma in [1.0, 0.5] {
        for m in EssMethod::ALL {
            let c = coverage_at(m, sigma, 4096);
            seen.push(format!("{}@{sigma}={c:.3}", m.name()));
            if (c - 0.95).abs() > 0.03 {
                misses.push(format!("{}@{sigma}", m.name()));
            }
        }
    }
    verdict(
        2,
        "coverage within 0.95+-0.03 at N=4096",
        misses.is_empty(),
        &format!("{}; outside: [{}]", seen.join(" "), misses.join(", ")),
    );
}

#[test]
fn c03_interval_dominance() {
    let mut rng = RngSeed::new(3, 0).rng();
    let mut violations = 0;
    let mut checked = 0;
    for i in 0..100u64 {
        let d = rng.random_range(1..=5);
        let n = rng.random_range(2..=300);
        let logging = Policy::isotropic_gaussian(Action::zeros(d), 1.0).unwrap();
        let actions = sample(&logging, RngSeed::new(3, 1 + i), n).unwrap();
        let rewards: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random::<f64>() < 0.3 {
                    rng.random_range(0.0..5.0)
                } else {
                    0.0
                }
            })
            .collect();
        let ds = LoggedDataset::from_policy(logging, actions, rewards).unwrap();
        let mean = act((0..d).map(|_| rng.random_range(-1.0..1.0)).collect());
        let sigma = rng.random_range(0.05..1.5);
        let (target, kernel) = if i % 2 == 0 {
            (Policy::isotropic_gaussian(mean, sigma).unwrap(), None)
        } else {
            (
                Policy::deterministic(mean),
                Some(KernelConfig::isotropic(sigma, d).unwrap()),
            )
        };
        for kind in EstimatorKind::ALL {
            let clt = match evaluate(
                &ds,
                &target,
                kernel.as_ref(),
                kind,
                EssMethod::CltOnly,
                0.05,
            ) {
                Ok(r) => r,
                Err(_) => continue,
            };
            for m in EssMethod::ALL {
                let r = evaluate(&ds, &target, kernel.as_ref(), kind, m, 0.05).unwrap();
                checked += 1;
                if !(r.ci_low <= clt.ci_low && r.ci_high >= clt.ci_high) {
                    violations += 1;
                }
            }
        }
    }
    verdict(
        3,
        "corrected CI contains CLT CI",
        violations == 0 && checked > 0,
        &format!("{checked} comparisons over 100 instances, {violations} violations"),
    );
}

#[test]
fn c04_sample_size_reduction() {
    let rows = min_sample_size_for_coverage(coverage_table(), 0.95);
    let dinfr: Vec<_> = rows
        .iter()
        .filter(|r| r.method == EssMethod::DInfR)
        .collect();
    let best = dinfr
        .iter()
        .filter_map(|r| r.ratio_vs_clt)
        .fold(f64::NEG_INFINITY, f64::max);
    let detail = rows
        .iter()
        .filter(|r| matches!(r.method, EssMethod::CltOnly | EssMethod::DInfR))
        .map(|r| {
            format!(
                "{}@{}:N*={}",
                r.method.name(),
                r.target_sigma,
                r.n_star
                    .map_or("not reached".to_string(), |n| n.to_string())
            )
        })
        .collect::<Vec<_>>()
        .join(" ");
    verdict(
        4,
        "N*(clt)/N*(dinfr) >= 4 for some sigma",
        best >= 4.0,
        &format!("best ratio={best}; {detail}"),
    );
}

#[test]
fn c05_ips_unbiased() {
    let d = 5;
    let n = 1 << 14;
    let target = Policy::isotropic_gaussian(Action::splat(0.5, d).unwrap(), 0.5).unwrap();
    let truth = true_value(&target, d).unwrap();
    let estimates: Vec<f64> = (0..500u64)
        .into_par_iter()
        .map(|r| {
            let ds = make_coverage_dataset(RngSeed::new(5, r), n, d).unwrap();
            evaluate(
                &ds,
                &target,
                None,
                EstimatorKind::Ips,
                EssMethod::CltOnly,
                0.05,
            )
            .unwrap()
            .value
        })
        .collect();
    let k = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / k;
    let var = estimates
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .sum::<f64>()
        / (k - 1.0);
    let se = (var / k).sqrt();
    let z = (mean - truth) / se;
    verdict(
        5,
        "IPS mean within 3 SE of truth",
        z.abs() <= 3.0,
        &format!("mean={mean:.6} truth={truth:.6} se={se:.2e} z={z:.2}"),
    );
}

#[test]
fn c06_curse_of_dimensionality() {
    let config = CodConfig {
        dims: vec![1, 8],
        epsilons: vec![0.4],
        ..CodConfig::desk(6)
    };
    assert_eq!(config.n_samples, 100_000);
    let study = run_cod_study(&config).unwrap();
    let mass = |family: Family, d: usize| {
        study
            .mass
            .iter()
            .find(|r| r.family == family && r.d == d && r.epsilon == 0.4)
            .unwrap()
            .clone()
    };
    let uniform = mass(Family::Uniform, 8);
    let normal = mass(Family::Normal, 8);

    // exact KS statistic of 2|x| for x ~ U(-1/2, 1/2) against U(0, 1)
    let cell = sample_cell(
        Family::Uniform,
        1,
        config.n_samples,
        config.normal_sigma,
        RngSeed::new(6, 0),
    );
    let n = cell.normalised_distances.len() as f64;
    let ks = cell
        .normalised_distances
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = x.clamp(0.0, 1.0);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);

    let mass_ok = (uniform.empirical_fraction - 0.16777).abs() <= 0.01;
    let ks_ok = ks < 0.01;
    let normal_ok = normal.empirical_fraction > uniform.empirical_fraction;
    verdict(
        6,
        "curse-of-dimensionality checks",
        mass_ok && ks_ok && normal_ok,
        &format!(
            "uniform d=8 eps=0.4 fraction={:.5} (analytic {:.5}); d=1 KS={ks:.5}; normal fraction={:.5}",
            uniform.empirical_fraction, uniform.analytic_fraction, normal.empirical_fraction
        ),
    );
}

#[test]
fn c07_gradient_check() {
    let mut rng = RngSeed::new(7, 0).rng();
    let mut worst: f64 = 0.0;
    let mut i = 0u64;
    for &d in &[1usize, 3, 5] {
        for &n in &[10usize, 100] {
            for _ in 0..if d == 5 { 4 } else { 3 } {
                i += 1;
                let logging = Policy::isotropic_gaussian(Action::zeros(d), 1.0).unwrap();
                let actions = sample(&logging, RngSeed::new(7, i), n).unwrap();
                let rewards: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
                let ds = LoggedDataset::from_policy(logging, actions, rewards).unwrap();
                let mu: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
                let sigmas: Vec<f64> = (0..d).map(|_| rng.random_range(0.5..1.5)).collect();
                let kernel = KernelConfig::new(sigmas).unwrap();
                let analytic = snips_analytic_gradient(&ds, &mu, &kernel).unwrap();
                let value = |m: &[f64]| {
                    let target = Policy::deterministic(act(m.to_vec()));
                    evaluate(
                        &ds,
                        &target,
                        Some(&kernel),
                        EstimatorKind::Snips,
                        EssMethod::CltOnly,
                        0.05,
                    )
                    .unwrap()
                    .value
                };
                let fd = mvope::finite_difference_gradient(value, &mu, 1e-5).unwrap();
                let diff = analytic
                    .iter()
                    .zip(&fd)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                let scale = fd.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-8);
                worst = worst.max(diff / scale);
            }
        }
    }
    assert_eq!(i, 20);
    verdict(
        7,
        "analytic SNIPS gradient vs central differences",
        worst <= 1e-5,
        &format!("20 instances, worst relative error {worst:.2e}"),
    );
}

#[test]
fn c08_learner_recovery() {
    let d = 3;
    let ds = make_learning_benchmark(RngSeed::new(8, 0), 50_000, d).unwrap();
    let config = CrmConfig::new(KernelConfig::isotropic(0.25, d).unwrap());
    let learned = learn(&ds, &config, &default_init(&ds)).unwrap();
    let learned_obj = crm_lower_bound(&ds, &learned.mu, &config).unwrap();

    let axis: Vec<f64> = (0..21).map(|k| -1.0 + 0.1 * k as f64).collect();
    let mut grid = Vec::with_capacity(axis.len().pow(3));
    for &x in &axis {
        for &y in &axis {
            for &z in &axis {
                grid.push([x, y, z]);
            }
        }
    }
    let (best_obj, best) = grid
        .par_iter()
        .map(|p| (crm_lower_bound(&ds, p, &config).unwrap(), *p))
        .reduce(
            || (f64::NEG_INFINITY, [0.0; 3]),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );

    let linf = learned
        .mu
        .iter()
        .zip(&best)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let shortfall = (best_obj - learned_obj) / best_obj.abs();
    verdict(
        8,
        "learner recovers grid-oracle maximiser",
        linf <= 0.15 && shortfall <= 0.01,
        &format!(
            "mu={:.3?} grid best={best:.1?} Linf={linf:.3}; objective {learned_obj:.5} vs {best_obj:.5} (shortfall {:.2}%)",
            learned.mu.as_slice(),
            100.0 * shortfall
        ),
    );
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[test]
fn c09_algebraic_identities() {
    let mut rng = RngSeed::new(9, 0).rng();
    let mut failures = Vec::new();
    for _ in 0..200 {
        let n = rng.random_range(2..=50);
        let w: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0.0..1.0f64).powi(3) * 10.0)
            .collect();
        let r: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..5.0)).collect();
        if w.iter().sum::<f64>() == 0.0 {
            continue;
        }
        let beta = rng.random_range(-3.0..3.0);
        let mean_w = w.iter().sum::<f64>() / n as f64;
        let ips = ips_value(&w, &r).unwrap();
        if !rel_close(
            baseline_shifted_ips(&w, &r, beta).unwrap(),
            ips + beta * (1.0 - mean_w),
        ) {
            failures.push("baseline identity");
        }
        let c = 2f64.powf(rng.random_range(-10.0..10.0));
        let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
        if !rel_close(
            snips_value(&scaled, &r).unwrap(),
            snips_value(&w, &r).unwrap(),
        ) {
            failures.push("snips scale invariance");
        }
        let p2 = ess(&w, None, EssMethod::P2).unwrap();
        let dinf = ess(&w, None, EssMethod::DInf).unwrap();
        let p2r = ess(&w, Some(&r), EssMethod::P2R).unwrap();
        let dinfr = ess(&w, Some(&r), EssMethod::DInfR).unwrap();
        if dinf > p2 * (1.0 + 1e-12) || dinfr > p2r * (1.0 + 1e-12) {
            failures.push("dinf <= p2");
        }
        if corrected_sample_size(n, n as f64).unwrap() != n as f64
            || corrected_sample_size(n, 1.0).unwrap() != 1.0
        {
            failures.push("n_tilde endpoints");
        }

        let ones = vec![1.0; n];
        let nf = n as f64;
        let mean_r = r.iter().sum::<f64>() / nf;
        let sample_var = r.iter().map(|x| (x - mean_r) * (x - mean_r)).sum::<f64>() / (nf - 1.0);
        let ips1 = ips_value(&ones, &r).unwrap();
        let snips1 = snips_value(&ones, &r).unwrap();
        if !rel_close(ips1, mean_r) || !rel_close(snips1, mean_r) {
            failures.push("unit-weight estimates");
        }
        if !rel_close(ips_variance(&ones, &r, ips1, nf).unwrap(), sample_var)
            || !rel_close(snips_variance(&ones, &r, snips1, nf).unwrap(), sample_var)
        {
            failures.push("unit-weight variances");
        }
    }
    failures.dedup();
    verdict(
        9,
        "algebraic identities at 1e-12",
        failures.is_empty(),
        &format!("200 random instances; failures: [{}]", failures.join(", ")),
    );
}

#[test]
fn c10_support_diagnostic() {
    let d = 5;
    let n = 20_000;
    let bandwidth = 0.1;
    let logging = Policy::uniform_box(Action::zeros(d), Action::splat(1.0, d).unwrap()).unwrap();
    let actions = sample(&logging, RngSeed::new(10, 0), n).unwrap();
    let rewards = vec![1.0; n];
    let ds = LoggedDataset::from_policy(logging.clone(), actions, rewards).unwrap();

    // Monte-Carlo oracle: E_logging[w] is the kernel mass inside the box
    let kernel_policy = Policy::isotropic_gaussian(Action::zeros(d), bandwidth).unwrap();
    let oracle_n = 1_000_000;
    let inside = sample(&kernel_policy, RngSeed::new(10, 1), oracle_n)
        .unwrap()
        .iter()
        .filter(|a| a.iter().all(|&x| (0.0..=1.0).contains(&x)))
        .count();
    let oracle = inside as f64 / oracle_n as f64;

    let corner = Policy::deterministic(Action::zeros(d));
    let kernel = KernelConfig::isotropic(bandwidth, d).unwrap();
    let violated = evaluate(
        &ds,
        &corner,
        Some(&kernel),
        EstimatorKind::Snips,
        EssMethod::DInfR,
        0.05,
    )
    .unwrap();
    let same = evaluate(
        &ds,
        &logging,
        None,
        EstimatorKind::Snips,
        EssMethod::DInfR,
        0.05,
    )
    .unwrap();

    let pass = violated.support_flag
        && violated.mean_weight < 0.5
        && same.mean_weight == 1.0
        && !same.support_flag;
    verdict(
        10,
        "support diagnostic",
        pass,
        &format!(
            "corner target: mean weight {:.4} (MC oracle {oracle:.4}), flag={}; identical policy: mean weight {}, flag={}",
            violated.mean_weight, violated.support_flag, same.mean_weight, same.support_flag
        ),
    );
}

fn run_mvope(workers: &str, args: &[&std::ffi::OsStr]) {
    let status = Command::new(env!("CARGO_BIN_EXE_mvope"))
        .env(mvope_cli::WORKERS_ENV, workers)
        .args(args)
        .status()
        .unwrap();
    assert!(status.success(), "mvope {args:?} exited with {status}");
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn c11_reproducible_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    std::fs::write(
        p("coverage.json"),
        r#"{"master_seed": 11, "sample_sizes": [8, 64, 512, 4096], "replications": 200}"#,
    )
    .unwrap();
    std::fs::write(p("cod.json"), r#"{"master_seed": 11}"#).unwrap();

    for (workers, tag) in [("1", "a"), ("4", "b")] {
        let (cov, cdf, mass) = (
            p(&format!("cov_{tag}.csv")),
            p(&format!("cdf_{tag}.csv")),
            p(&format!("mass_{tag}.csv")),
        );
        run_mvope(
            workers,
            &[
                "coverage".as_ref(),
                "--config".as_ref(),
                p("coverage.json").as_os_str(),
                "--out".as_ref(),
                cov.as_os_str(),
            ],
        );
        run_mvope(
            workers,
            &[
                "cod".as_ref(),
                "--config".as_ref(),
                p("cod.json").as_os_str(),
                "--out-cdf".as_ref(),
                cdf.as_os_str(),
                "--out-mass".as_ref(),
                mass.as_os_str(),
            ],
        );
    }
    let same = |name: &str| {
        let (a, b) = (
            read(&p(&format!("{name}_a.csv"))),
            read(&p(&format!("{name}_b.csv"))),
        );
        !a.is_empty() && a == b
    };
    let (cov, cdf, mass) = (same("cov"), same("cdf"), same("mass"));
    verdict(
        11,
        "byte-identical CSVs with 1 and 4 workers",
        cov && cdf && mass,
        &format!("coverage={cov} cdf={cdf} mass={mass}"),
    );
}
