//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits nonzero
//! if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use percoflow::catalog::{euler_distribution, euler_function, euler_series_partial, finite_horizon_cdf, inverse_beta_cdf, naor_urn, urn_tau};
use percoflow::exchange::{classify, final_states, simulate_path, stationary_measure, Recurrence};
use percoflow::graphs::GraphWindow;
use percoflow::percolation::{coupling_check_values, q_sequence, uncovered_census, CensusConfig};
use percoflow::stats::{empirical_law, total_variation};
use percoflow::stream::{run_trials, stream};
use percoflow::tree::{
    branching_survival, char_poly_largest_root, fixed_point, infinite_path_criterion, logistic_closed_form,
    r_recurrence, rho_m, tree_uncovered_probe, DEFAULT_POPULATION_CAP, DEFAULT_PROBE_BUDGET,
};
use percoflow::DistributionSpec;

const SEED: u64 = 20_240_611;

struct Outcome {
    pass: bool,
    detail: String,
    /// Serialized Monte Carlo output, compared across worker counts.
    fingerprint: String,
}

fn outcome(pass: bool, detail: String, fingerprint: String) -> Outcome {
    Outcome {
        pass,
        detail,
        fingerprint,
    }
}

fn finite_example() -> DistributionSpec {
    DistributionSpec::finite(vec![0.3, 0.3, 0.15, 0.25]).unwrap()
}

// 1: covered set of N_0 against {k : X_k > 0}
fn coupling(workers: usize) -> Outcome {
    let specs = [
        finite_example(),
        DistributionSpec::geometric_tail(vec![0.4], 0.5).unwrap(),
        DistributionSpec::power(2.0).unwrap(),
    ];
    let mut failures = 0;
    let mut fp = Vec::new();
    for (k, spec) in specs.iter().enumerate() {
        let res = run_trials(100, workers, |trial| {
            let mut rng = stream(SEED, "acceptance.coupling", ((k as u64) << 32) | trial);
            let draws: Vec<u64> = (0..=10_000).map(|_| spec.sample(&mut rng)).collect();
            let ok = coupling_check_values(&draws).is_ok();
            let zeros = percoflow::exchange::path_from_draws(&draws).iter().filter(|&&x| x == 0).count();
            (ok, zeros)
        });
        failures += res.iter().filter(|(ok, _)| !ok).count();
        fp.push(res.iter().map(|r| r.1).collect::<Vec<_>>());
    }
    outcome(
        failures == 0,
        format!("300 paths x 10^4 steps, {failures} mismatches"),
        format!("{fp:?}"),
    )
}

// 2: stationary law of the uniform chains
fn uniform_stationary(workers: usize) -> Outcome {
    let ms: Vec<u64> = (2..=6).collect();
    let mut worst_exact: f64 = 0.0;
    for &m in &ms {
        let spec = DistributionSpec::uniform(m as usize).unwrap();
        let tau = stationary_measure(&spec, m as usize).unwrap().normalized.unwrap();
        let closed = urn_tau(m).unwrap();
        for (a, b) in tau.iter().zip(&closed) {
            worst_exact = worst_exact.max((a - b).abs());
        }
    }
    let tvs = run_trials(ms.len() as u64, workers, |i| {
        let m = ms[i as usize];
        let spec = DistributionSpec::uniform(m as usize).unwrap();
        let path = simulate_path(&spec, 1_000_000, &mut stream(SEED, "acceptance.occupation", m)).unwrap();
        total_variation(&empirical_law(path.states.iter().copied(), m as usize), &urn_tau(m).unwrap())
    });
    let worst_tv = tvs.iter().cloned().fold(0.0, f64::max);
    outcome(
        worst_exact <= 1e-12 && worst_tv < 0.01,
        format!("max |tau - closed form| = {worst_exact:.2e} (tol 1e-12), max TV = {worst_tv:.4} (tol 0.01)"),
        format!("{tvs:?}"),
    )
}

// 3: geometric fountains and the Euler distribution
fn euler(_: usize) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_identity: f64 = 0.0;
    let mut worst_tau0: f64 = 0.0;
    for p in [0.3, 0.5, 0.8] {
        let k = 300;
        let tau = stationary_measure(&DistributionSpec::geometric(p).unwrap(), k).unwrap().normalized.unwrap();
        let euler = euler_distribution(p, k).unwrap();
        for (a, b) in tau.iter().zip(&euler) {
            worst = worst.max((a - b).abs());
        }
        let phi = euler_function(p).unwrap().value;
        worst_identity = worst_identity.max((phi * euler_series_partial(p, k) - 1.0).abs());
        worst_tau0 = worst_tau0.max((tau[0] - phi).abs());
    }
    outcome(
        worst <= 1e-10 && worst_identity <= 1e-10 && worst_tau0 <= 1e-10,
        format!(
            "max entry diff {worst:.2e}, |tau_0 - (p;p)_inf| {worst_tau0:.2e}, q-binomial residual {worst_identity:.2e} (tol 1e-10)"
        ),
        String::new(),
    )
}

// 4: urn law at m = 5
fn urn(workers: usize) -> Outcome {
    let law = naor_urn(5, 100_000, SEED, workers).unwrap();
    outcome(
        law.tv_distance < 0.02,
        format!("TV = {:.4} at 10^5 trials (tol 0.02)", law.tv_distance),
        format!("{:?}", law.empirical),
    )
}

// 5: recurrence classes
fn classes(_: usize) -> Outcome {
    let cases = [
        (DistributionSpec::power(0.5).unwrap(), Recurrence::NullRecurrent),
        (DistributionSpec::power(1.0).unwrap(), Recurrence::NullRecurrent),
        (DistributionSpec::power(2.0).unwrap(), Recurrence::Transient),
        (DistributionSpec::geometric(0.5).unwrap(), Recurrence::PositiveRecurrent),
        (DistributionSpec::geometric_tail(vec![0.2, 0.3], 0.9).unwrap(), Recurrence::PositiveRecurrent),
        (finite_example(), Recurrence::PositiveRecurrent),
        (DistributionSpec::uniform(3).unwrap(), Recurrence::PositiveRecurrent),
    ];
    let wrong: Vec<String> = cases
        .iter()
        .filter(|(s, want)| classify(s) != *want)
        .map(|(s, want)| format!("{s:?}: {:?} != {want:?}", classify(s)))
        .collect();
    outcome(wrong.is_empty(), format!("{} cases, {} wrong {wrong:?}", cases.len(), wrong.len()), String::new())
}

/// Power tail c = 2 with head length 8 and mu_0 = 0.7.
fn census_spec() -> DistributionSpec {
    let rest = (1.0 - 2.0 / 7.0 - 0.7) / 7.0;
    let mut head = vec![0.7];
    head.extend(std::iter::repeat_n(rest, 7));
    DistributionSpec::power_tail(head, 2.0).unwrap()
}

/// `Σ_{a,b<side} ∏_{i≤a, j≤b} F(i+j)`: exact expected uncovered count on a
/// square window of N_0^2.
fn exact_square_expectation(spec: &DistributionSpec, side: usize) -> f64 {
    let lf: Vec<f64> = (0..2 * side as u64).map(|k| spec.ln_cdf(k)).collect();
    let mut col = vec![0.0; side];
    let mut total = 0.0;
    for a in 0..side {
        let mut run = 0.0;
        for b in 0..side {
            run += lf[a + b];
            col[b] += run;
            total += col[b].exp();
        }
    }
    total
}

// 6: uncovered count on N_0 and N_0^2
fn line_census(workers: usize) -> Outcome {
    let spec = census_spec();
    let w1 = GraphWindow::natural(1, 10_000).unwrap();
    let cfg = |trials| CensusConfig {
        trials,
        seed: SEED,
        workers,
        clusters: false,
    };
    let s1 = uncovered_census(&w1, &spec, &cfg(10_000)).unwrap();
    let expected: f64 = q_sequence(&spec, 9_999).iter().sum();
    let rel = (s1.mean - expected).abs() / expected;
    let fit = s1.geometric_fit.clone().unwrap();
    let w2 = GraphWindow::natural(2, 300).unwrap();
    let s2 = uncovered_census(&w2, &spec, &cfg(2_000)).unwrap();
    let (m1, se1, m2, se2) = (s1.mean, s1.stderr(), s2.mean, s2.stderr());
    let sigma = (se2 * se2 + (2.0 * m1 * se1).powi(2)).sqrt();
    let product_bound = m2 <= m1 * m1 + 3.0 * sigma;
    let exact2 = exact_square_expectation(&spec, 300);
    let exact2_ok = (m2 - exact2).abs() <= 4.0 * se2;
    let corrected = m2 <= m1 * m1 / spec.pmf(0) + 3.0 * sigma;
    let pass = rel <= 0.05 && fit.chi_square.passes(0.001) && product_bound && exact2_ok && corrected;
    outcome(
        pass,
        format!(
            "N_0 mean {m1:.4} vs sum q_m {expected:.4} (rel {rel:.4}, tol 0.05); geometric fit p_hat {:.4}, chi2 p-value {:.4} (> 0.001); \
             N_0^2 mean {m2:.4} <= m1^2 + 3 sigma = {:.4}; exact N_0^2 window mean {exact2:.4} within 4 se; m2 <= m1^2/mu_0 + 3 sigma",
            fit.p_hat,
            fit.chi_square.p_value,
            m1 * m1 + 3.0 * sigma
        ),
        format!("{}|{}", serde_json::to_string(&s1).unwrap(), serde_json::to_string(&s2).unwrap()),
    )
}

// 7: X_n / n against y^2/(1+y)^2
fn inverse_beta(workers: usize) -> Outcome {
    let spec = DistributionSpec::power(2.0).unwrap();
    let n = 10_000u64;
    let xs = final_states(&spec, n, 10_000, SEED, workers);
    let mut pass = true;
    let mut parts = Vec::new();
    for y in [0.5, 1.0, 2.0] {
        let bound = (y * n as f64).floor() as u64;
        let emp = xs.iter().filter(|&&x| x <= bound).count() as f64 / xs.len() as f64;
        let limit = inverse_beta_cdf(2.0, y).unwrap();
        let exact = finite_horizon_cdf(&spec, n, bound);
        pass &= (emp - limit).abs() <= 0.02;
        parts.push(format!("y={y}: empirical {emp:.4}, limit {limit:.4}, exact finite-n {exact:.4}"));
    }
    outcome(pass, format!("{} (tol 0.02)", parts.join("; ")), format!("{xs:?}"))
}

// 8: depth recurrence against tree Monte Carlo
fn tree_depths(workers: usize) -> Outcome {
    let spec = finite_example();
    let trials = 100_000;
    let mut worst_z: f64 = 0.0;
    let mut fp = Vec::new();
    let mut trend_ok = true;
    for n in [2usize, 3] {
        let r = r_recurrence(&spec, n, 15).unwrap();
        let mut empirical = Vec::new();
        for m in (0..=10).chain([15]) {
            let probe = tree_uncovered_probe(&spec, n, m, trials, SEED, workers, DEFAULT_PROBE_BUDGET).unwrap();
            let sigma = (r.values[m] * (1.0 - r.values[m]) / trials as f64).sqrt();
            let diff = (probe.frequency - r.values[m]).abs();
            if m <= 10 {
                let z = if sigma > 0.0 { diff / sigma } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
                worst_z = worst_z.max(z);
            }
            empirical.push((m, probe.frequency, probe.stderr));
            fp.push(probe.hits);
        }
        let at = |m: usize| empirical.iter().find(|e| e.0 == m).unwrap();
        let (e5, e10, e15) = (at(5), at(10), at(15));
        trend_ok &= r.values[5] <= r.values[10] && r.values[10] <= r.values[15];
        trend_ok &= e10.1 >= e5.1 - 3.0 * (e5.2 + e10.2) && e15.1 >= e10.1 - 3.0 * (e10.2 + e15.2);
    }
    // liminf bound on the binary tree for F(N) in {0.6, 0.75, 1}
    let r = r_recurrence(&spec, 2, 60).unwrap();
    let mut liminf_ok = true;
    let mut crossings = Vec::new();
    for big_n in 1..=3u64 {
        let f = spec.cdf(big_n);
        let x = fixed_point(f, 2).unwrap();
        let cross = (big_n as usize..=60).find(|&m| r.values[m] >= x);
        match cross {
            Some(c) => {
                liminf_ok &= r.values[c..].iter().all(|&v| v >= x - 1e-9);
                crossings.push(format!("F={f}: x_N={x:.4}, from m={c}"));
            }
            None => {
                liminf_ok = false;
                crossings.push(format!("F={f}: no crossing"));
            }
        }
    }
    outcome(
        worst_z <= 3.0 && trend_ok && liminf_ok,
        format!(
            "worst |r_hat - r| = {worst_z:.2} sigma over n=2,3, m<=10 (tol 3); trend m=5,10,15 {}; liminf {}",
            if trend_ok { "ok" } else { "violated" },
            crossings.join(", ")
        ),
        format!("{fp:?}"),
    )
}

// 9: closed form 1 - exp(-c 2^m) against the recurrence
fn logistic(_: usize) -> Outcome {
    let specs = [
        DistributionSpec::uniform(2).unwrap(),
        DistributionSpec::finite(vec![0.9, 0.1]).unwrap(),
        finite_example(),
        DistributionSpec::two_point(3, 0.5).unwrap(),
        DistributionSpec::uniform(6).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for spec in &specs {
        let fit = logistic_closed_form(spec, 40).unwrap();
        let r = r_recurrence(spec, 2, 40).unwrap();
        for m in fit.n0 as usize..=40 {
            worst = worst.max((fit.log_complement[m] - r.log_complement[m]).abs());
        }
    }
    outcome(
        worst <= 1e-12,
        format!("{} specs, max |ln(1-r) difference| over n_0 <= m <= 40 = {worst:.2e} (tol 1e-12)", specs.len()),
        String::new(),
    )
}

// 10: rho(M) for the two-point family, and branching survival
fn mean_matrix(workers: usize) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut disagreements = Vec::new();
    let mut fp = Vec::new();
    let mut cases: Vec<(usize, DistributionSpec)> = Vec::new();
    for n in [2usize, 3, 4] {
        for p in [0.3, 0.5, 0.7] {
            let spec = DistributionSpec::two_point(n, p).unwrap();
            let rho = rho_m(&spec, n, 1e-15).unwrap().value;
            let root = char_poly_largest_root(n, p).unwrap();
            worst = worst.max((rho - root).abs());
            cases.push((n, spec));
        }
    }
    let closed = (0.5 + 1.25f64.sqrt()) / 2.0;
    let at_half = (rho_m(&DistributionSpec::two_point(2, 0.5).unwrap(), 2, 1e-15).unwrap().value - closed).abs();
    for p in [0.4, 0.6] {
        cases.push((2, DistributionSpec::two_point(1, p).unwrap()));
    }
    for (n, spec) in &cases {
        let verdict = infinite_path_criterion(spec, *n, spec.support_max().unwrap() as usize, 1e-9)
            .unwrap()
            .verdict
            .as_bool();
        let s = branching_survival(spec, *n, 60, 10_000, SEED, workers, DEFAULT_POPULATION_CAP).unwrap();
        fp.push(s.survivors);
        if verdict != Some(s.survives) {
            disagreements.push(format!("n={n} {:?}: rho verdict {verdict:?}, survivors {}", spec.head(), s.survivors));
        }
    }
    outcome(
        worst <= 1e-9 && at_half <= 1e-9 && disagreements.is_empty(),
        format!(
            "max |rho - root| = {worst:.2e}, (2,0.5) off closed form by {at_half:.2e} (tol 1e-9); survival vs verdict on {} specs: {} disagreements {disagreements:?}",
            cases.len(),
            disagreements.len()
        ),
        format!("{fp:?}"),
    )
}

type Criterion = (&'static str, fn(usize) -> Outcome, Option<Duration>);

fn criteria() -> Vec<Criterion> {
    vec![
        ("AC1 coupling identity", coupling, Some(Duration::from_secs(10))),
        ("AC2 uniform stationary law", uniform_stationary, Some(Duration::from_secs(30))),
        ("AC3 geometric fountain / Euler law", euler, None),
        ("AC4 urn law", urn, None),
        ("AC5 classification", classes, None),
        ("AC6 uncovered count on N_0 and N_0^2", line_census, Some(Duration::from_secs(120))),
        ("AC7 rescaled limit", inverse_beta, None),
        ("AC8 tree depth recurrence", tree_depths, None),
        ("AC9 logistic closed form", logistic, None),
        ("AC10 mean matrix and branching", mean_matrix, Some(Duration::from_secs(120))),
    ]
}

fn cli_census_bytes(workers: usize, dir: &std::path::Path) -> Vec<u8> {
    let out = dir.join(format!("census_{workers}.csv"));
    let run = Command::new(env!("CARGO_BIN_EXE_percoflow"))
        .args(["perc", "census", "--dist", "power:c=2,K=8", "--window", "2000", "--trials", "500"])
        .args(["--seed", "11", "--workers", &workers.to_string(), "--out"])
        .arg(&out)
        .output()
        .expect("run percoflow");
    assert!(run.status.success());
    std::fs::read(&out).unwrap()
}

fn main() {
    let mut all_pass = true;
    let mut fingerprints = Vec::new();
    for (name, run, limit) in criteria() {
        let start = Instant::now();
        let o = run(1);
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed < l);
        let pass = o.pass && in_time;
        all_pass &= pass;
        let budget = limit.map(|l| format!(", budget {}s", l.as_secs())).unwrap_or_default();
        println!(
            "{} {name}: {} [{:.1}s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
        fingerprints.push((run, o.fingerprint));
    }

    let start = Instant::now();
    let mut mismatched = Vec::new();
    for (i, (run, fp)) in fingerprints.iter().enumerate() {
        for workers in [4, 8] {
            if run(workers).fingerprint != *fp {
                mismatched.push(format!("AC{} at {workers} workers", i + 1));
            }
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let base = cli_census_bytes(1, dir.path());
    for workers in [4, 8] {
        if cli_census_bytes(workers, dir.path()) != base {
            mismatched.push(format!("CLI census CSV at {workers} workers"));
        }
    }
    let pass = mismatched.is_empty();
    all_pass &= pass;
    println!(
        "{} AC11 determinism: criteria 1-10 and CLI census CSV under 1, 4, 8 workers, {} mismatches {mismatched:?} [{:.1}s]",
        if pass { "PASS" } else { "FAIL" },
        mismatched.len(),
        start.elapsed().as_secs_f64()
    );

    if !all_pass {
        std::process::exit(1);
    }
}
