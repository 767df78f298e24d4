//! Acceptance suite. Runs every criterion at its pinned tolerance and prints
//! one PASS/FAIL line per criterion; exits nonzero if any criterion fails.
//!
//! Reference model BD: ∅ → A at θ_1 = 10, A → ∅ at θ_2 · x_A with θ_2 = 1,
//! x0 = 0, f(x) = x_A, t = 1. Model PROD: birth at θ_1 θ_2 with θ = (2, 5),
//! death at θ_3 · x_A with θ_3 = 1.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use crn_sens::estimators::FiniteDifference;
use crn_sens::model::{shifted, Monomial};
use crn_sens::montecarlo::run_collect;
use crn_sens::oracle::{self, Partial};
use crn_sens::simulate::{simulate_coupled_trajectory, split_rates, Channel};
use crn_sens::{
    coupled_sens_difference, run_estimator, sample_first_order, sample_output, sample_second_order,
    EstimateResult, EstimatorConfig, Kinetics, PropensitySpec, RatePolynomial, RunOptions, StreamKey,
};

const T: f64 = 1.0;
const SIGMAS: f64 = 3.0;
const SEED: u64 = 20_240_601;

struct Report {
    failures: usize,
}

impl Report {
    fn record(&mut self, id: u32, name: &str, pass: bool, detail: String, started: Instant) {
        if !pass {
            self.failures += 1;
        }
        println!(
            "[{}] criterion {id:>2} {name}: {detail} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
    }
}

fn describe(r: &EstimateResult, target: f64) -> String {
    format!(
        "mean {:.6} ± {:.6} (n = {}), target {target:.6}, |z| = {:.2}",
        r.mean,
        r.stderr,
        r.n,
        (r.mean - target).abs() / r.stderr
    )
}

fn bd_second(i: usize, j: usize, c: f64, n: u64, workers: usize) -> EstimateResult {
    let net = common::birth_death();
    let th = common::theta(&[10.0, 1.0]);
    let f = common::count_a();
    let cfg = EstimatorConfig { t: T, c, i, j, n_samples: n };
    run_estimator(
        |k| sample_second_order(&net, &[0], &f, &th, &cfg, k),
        &RunOptions::new(n, SEED).workers(workers),
    )
    .unwrap()
}

fn bd_mean(n: u64, workers: usize) -> EstimateResult {
    let net = common::birth_death();
    let th = common::theta(&[10.0, 1.0]);
    let f = common::count_a();
    run_estimator(|k| sample_output(&net, &[0], &f, &th, T, k), &RunOptions::new(n, SEED).workers(workers)).unwrap()
}

fn bd_first(q: usize, n: u64, workers: usize) -> EstimateResult {
    let net = common::birth_death();
    let th = common::theta(&[10.0, 1.0]);
    let f = common::count_a();
    run_estimator(
        |k| sample_first_order(&net, &[0], &f, &th, q, T, 1.0, k),
        &RunOptions::new(n, SEED).workers(workers),
    )
    .unwrap()
}

fn prod_second(n: u64, workers: usize) -> EstimateResult {
    let net = common::product_birth();
    let th = common::theta(&[2.0, 5.0, 1.0]);
    let f = common::count_a();
    let cfg = EstimatorConfig { t: T, c: 1.0, i: 0, j: 1, n_samples: n };
    run_estimator(
        |k| sample_second_order(&net, &[0], &f, &th, &cfg, k),
        &RunOptions::new(n, SEED).workers(workers),
    )
    .unwrap()
}

fn combined_margin(a: &EstimateResult, b: &EstimateResult) -> f64 {
    ((SIGMAS * a.stderr).powi(2) + (SIGMAS * b.stderr).powi(2)).sqrt()
}

fn main() -> ExitCode {
    let mut report = Report { failures: 0 };
    let mean_target = oracle::linear_bd_mean(0.0, 10.0, 1.0, T).unwrap();
    let d1_target = oracle::linear_bd_sens(0.0, 10.0, 1.0, T, Partial::D1).unwrap();
    let d2_target = oracle::linear_bd_sens(0.0, 10.0, 1.0, T, Partial::D2).unwrap();
    let d12_target = oracle::linear_bd_sens(0.0, 10.0, 1.0, T, Partial::D12).unwrap();
    let d22_target = oracle::linear_bd_sens(0.0, 10.0, 1.0, T, Partial::D22).unwrap();
    let prod_target = oracle::product_birth_mixed([2.0, 5.0, 1.0], T).unwrap();

    // 1
    let started = Instant::now();
    let c1 = bd_mean(100_000, 0);
    report.record(1, "SSA mean on BD", c1.within(mean_target, SIGMAS), describe(&c1, mean_target), started);

    // 2
    let started = Instant::now();
    let c2a = bd_first(0, 10_000, 0);
    let c2b = bd_first(1, 10_000, 0);
    report.record(
        2,
        "first-order unbiasedness",
        c2a.within(d1_target, SIGMAS) && c2b.within(d2_target, SIGMAS),
        format!("θ_1: {}; θ_2: {}", describe(&c2a, d1_target), describe(&c2b, d2_target)),
        started,
    );

    // 3
    let started = Instant::now();
    let c3 = bd_second(0, 1, 1.0, 100_000, 0);
    report.record(3, "second-order mixed (S-hat channels)", c3.within(d12_target, SIGMAS), describe(&c3, d12_target), started);

    // 4
    let started = Instant::now();
    let c4 = prod_second(100_000, 0);
    report.record(4, "second-order mixed on PROD (D-hat channel)", c4.within(prod_target, SIGMAS), describe(&c4, prod_target), started);

    // 5
    let started = Instant::now();
    let (c5, samples) = {
        let net = common::birth_death();
        let th = common::theta(&[10.0, 1.0]);
        let f = common::count_a();
        let cfg = EstimatorConfig { t: T, c: 1.0, i: 0, j: 0, n_samples: 100_000 };
        run_collect(|k| sample_second_order(&net, &[0], &f, &th, &cfg, k), &RunOptions::new(100_000, SEED)).unwrap()
    };
    let finite = samples.iter().all(|v| v.is_finite());
    report.record(
        5,
        "zero Hessian (θ_1, θ_1)",
        c5.within(0.0, SIGMAS) && finite,
        format!("{}, all samples finite: {finite}", describe(&c5, 0.0)),
        started,
    );

    // 6
    let started = Instant::now();
    let c6 = bd_second(1, 1, 1.0, 200_000, 0);
    report.record(6, "pure second derivative (θ_2, θ_2)", c6.within(d22_target, SIGMAS), describe(&c6, d22_target), started);

    // 7
    let started = Instant::now();
    let lo = bd_second(0, 1, 0.3, 100_000, 0);
    let hi = bd_second(0, 1, 3.0, 100_000, 0);
    let margin = combined_margin(&lo, &hi);
    report.record(
        7,
        "c-invariance",
        (lo.mean - hi.mean).abs() < margin,
        format!(
            "c=0.3: {:.6} ± {:.6}; c=3.0: {:.6} ± {:.6}; |diff| {:.6} < {:.6}",
            lo.mean,
            lo.stderr,
            hi.mean,
            hi.stderr,
            (lo.mean - hi.mean).abs(),
            margin
        ),
        started,
    );

    // 8
    let started = Instant::now();
    let swapped = bd_second(1, 0, 1.0, 100_000, 0);
    let margin = combined_margin(&c3, &swapped);
    report.record(
        8,
        "symmetry (i, j) vs (j, i)",
        (c3.mean - swapped.mean).abs() < margin,
        format!(
            "(1,2): {:.6}; (2,1): {:.6} ± {:.6}; |diff| {:.6} < {:.6}",
            c3.mean,
            swapped.mean,
            swapped.stderr,
            (c3.mean - swapped.mean).abs(),
            margin
        ),
        started,
    );

    // 9
    let started = Instant::now();
    let fd_target = oracle::fd_on_oracle(0, 1, 0.1, |th| oracle::linear_bd_mean(0.0, th[0], th[1], T), &[10.0, 1.0]).unwrap();
    let c9 = {
        let net = common::birth_death();
        let th = common::theta(&[10.0, 1.0]);
        let f = common::count_a();
        let fd = FiniteDifference::new(&net, &th, 0, 1, 0.1).unwrap();
        run_estimator(|k| fd.sample(&[0], &f, T, k), &RunOptions::new(1_000_000, SEED)).unwrap()
    };
    let distinguishable = (c9.mean - d12_target).abs() > SIGMAS * c9.stderr;
    report.record(
        9,
        "finite-difference bias (ε = 0.1)",
        c9.within(fd_target, SIGMAS),
        format!(
            "{}; exact {d12_target:.6}, bias {:+.6}, distinguishable from exact at this n: {distinguishable}",
            describe(&c9, fd_target),
            fd_target - d12_target
        ),
        started,
    );

    // 10
    let started = Instant::now();
    let (pass10, detail10) = coupling_identities();
    report.record(10, "coupling identities", pass10, detail10, started);

    // 11
    let started = Instant::now();
    let reruns = [
        ("1", c1.mean, bd_mean(100_000, 3).mean),
        ("2a", c2a.mean, bd_first(0, 10_000, 3).mean),
        ("2b", c2b.mean, bd_first(1, 10_000, 3).mean),
        ("3", c3.mean, bd_second(0, 1, 1.0, 100_000, 3).mean),
        ("4", c4.mean, prod_second(100_000, 3).mean),
    ];
    let mismatched: Vec<&str> = reruns.iter().filter(|r| r.1.to_bits() != r.2.to_bits()).map(|r| r.0).collect();
    report.record(
        11,
        "determinism across worker counts",
        mismatched.is_empty(),
        format!("criteria 1-4 rerun with 3 workers; mismatches: {mismatched:?}"),
        started,
    );

    // 12
    let started = Instant::now();
    let (pass12, detail12) = derivative_correctness();
    report.record(12, "propensity derivatives vs central differences", pass12, detail12, started);

    println!(
        "acceptance: {} of 12 criteria passed",
        12 - report.failures
    );
    if report.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn coupling_identities() -> (bool, String) {
    let mut problems = Vec::new();
    let mut s = StreamKey::root(SEED).child(10).stream();

    // equal starts stay identical, and every step's channel split is exact
    let mut steps = 0usize;
    let mut models = 0usize;
    while steps < 10_000 || models < 1_000 {
        models += 1;
        let (net, p) = common::random_network(&mut s);
        let th = common::random_theta(&mut s, p);
        let kin = Kinetics::new(&net, &th).unwrap();
        let x = common::random_state(&mut s, net.species(), 6);
        let key = StreamKey::root(SEED).descend(&[10, models as u64]);
        let traj = simulate_coupled_trajectory(&kin, &x, &x, 0.5, &mut key.stream()).unwrap();
        steps += traj.events.len();
        if traj.events.iter().any(|e| e.channel != Channel::Shared) || traj.end.z1 != traj.end.z2 {
            problems.push(format!("equal-start pair separated (model {models})"));
        }

        // offset start: replay and check the split at every visited joint state
        let zeta = net.stoich(0);
        let Ok(z1) = shifted(&x, zeta) else { continue };
        let traj = simulate_coupled_trajectory(&kin, &z1, &x, 0.5, &mut key.child(1).stream()).unwrap();
        let (mut a, mut b) = (z1.clone(), x.clone());
        for ev in traj.events.iter().map(Some).chain([None]) {
            for k in 0..net.reactions() {
                let la = kin.value(k, &a).unwrap();
                let lb = kin.value(k, &b).unwrap();
                let sp = split_rates(la, lb);
                let tol = 4.0 * f64::EPSILON * la.max(lb);
                if sp.shared < 0.0
                    || sp.first < 0.0
                    || sp.second < 0.0
                    || (sp.shared + sp.first - la).abs() > tol
                    || (sp.shared + sp.second - lb).abs() > tol
                {
                    problems.push(format!("bad split {la} / {lb}"));
                }
            }
            if let Some(ev) = ev {
                let zk = net.stoich(ev.reaction);
                if ev.moves(Channel::First) {
                    a.iter_mut().zip(zk).for_each(|(v, d)| *v += d);
                }
                if ev.moves(Channel::Second) {
                    b.iter_mut().zip(zk).for_each(|(v, d)| *v += d);
                }
                if a.iter().chain(&b).any(|&v| v < 0) {
                    problems.push("negative state in coupled pair".into());
                }
            }
        }
        if a != traj.end.z1 || b != traj.end.z2 {
            problems.push("replay disagrees with the coupled endpoint".into());
        }
    }

    // offset preservation under state-independent propensities
    let imm = common::immigration();
    let th = common::theta(&[7.0]);
    let kin = Kinetics::new(&imm, &th).unwrap();
    for r in 0..1_000u64 {
        let traj = simulate_coupled_trajectory(&kin, &[5], &[4], 2.0, &mut StreamKey::root(SEED).descend(&[11, r]).stream()).unwrap();
        if traj.events.iter().any(|e| e.channel != Channel::Shared) || traj.end.z1[0] - traj.end.z2[0] != 1 {
            problems.push(format!("immigration offset not preserved (run {r})"));
        }
    }

    // zero-duration sub-estimates
    let bd = common::birth_death();
    let th = common::theta(&[10.0, 1.0]);
    let f = common::count_a();
    for r in 0..1_000u64 {
        let key = StreamKey::root(SEED).descend(&[12, r]);
        let x = [(r % 20) as i64];
        let d = crn_sens::simulate::coupled_output_difference(&bd, &x, &[1], &th, 0.0, &f, &key).unwrap();
        if d != 1.0 {
            problems.push(format!("D-hat at zero duration is {d}, expected Δf = 1"));
        }
        for q in 0..2 {
            let s = coupled_sens_difference(&bd, &x, &[1], &th, &f, q, 0.0, 1.0, &key).unwrap();
            if s != 0.0 {
                problems.push(format!("S-hat at zero duration is {s}"));
            }
        }
    }

    let detail = format!(
        "{models} random models, {steps} equal-start steps, 1000 immigration pairs, 1000 zero-duration draws; {} violations",
        problems.len()
    );
    (problems.is_empty(), if problems.is_empty() { detail } else { format!("{detail}: {}", problems[0]) })
}

fn derivative_correctness() -> (bool, String) {
    let mut s = StreamKey::root(SEED).child(12).stream();
    let h = 1e-5;
    let rel = 1e-6;
    let mut worst = 0.0f64;
    let mut checks = 0usize;
    for _ in 0..1_000 {
        let p = 3;
        let terms = (0..1 + (s.uniform() * 3.0) as usize)
            .map(|_| Monomial {
                coeff: 0.1 + 2.0 * s.uniform(),
                exponents: (0..p).map(|_| (s.uniform() * 4.0) as u32).collect(),
            })
            .collect();
        let orders: Vec<u32> = (0..2).map(|_| (s.uniform() * 3.0) as u32).collect();
        let spec = PropensitySpec::mass_action(RatePolynomial::new(p, terms).unwrap(), orders);
        let th: Vec<f64> = (0..p).map(|_| 0.2 + 2.8 * s.uniform()).collect();
        let x: Vec<i64> = (0..2).map(|_| (s.uniform() * 15.0) as i64).collect();
        let shift = |q: usize, d: f64| {
            let mut v = th.clone();
            v[q] += d;
            v
        };
        let mut compare = |a: f64, b: f64| {
            checks += 1;
            let err = if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
            worst = worst.max(err);
        };
        for i in 0..p {
            compare(
                spec.gradient(&x, &th, i),
                (spec.value(&x, &shift(i, h)) - spec.value(&x, &shift(i, -h))) / (2.0 * h),
            );
            for j in 0..p {
                compare(
                    spec.hessian(&x, &th, i, j),
                    (spec.gradient(&x, &shift(j, h), i) - spec.gradient(&x, &shift(j, -h), i)) / (2.0 * h),
                );
            }
        }
    }
    (worst <= rel, format!("{checks} comparisons over 1000 (x, θ) draws, worst relative error {worst:.2e} (limit {rel:.0e})"))
}
