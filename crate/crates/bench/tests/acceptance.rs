//! Acceptance criteria C1–C11, one PASS/FAIL line each.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use replicable::dp2rep::{dp_to_replicable_weak, ExponentialMechanism, FiniteClass, WeakLearnerConfig};
use replicable::dtdist::{
    influence_oracle, r_infl_est_monotone, r_infl_est_subcube, tv_exact, DecisionTreeDistribution, ExactPmf, TreeNode,
};
use replicable::lift::{lift_end_to_end, AffParityLearner, TreeEstimator};
use replicable::parity::ProductDistribution;
use replicable::{BitVector, Dataset, FiniteDistribution, Hypothesis, LabeledExample, Restriction, SeedStream};
use replicable_bench::accuracy::cube_error;
use replicable_bench::config::{BUILD_DT_TREE, LearnerSpec};
use replicable_bench::harness::{estimate_replicability, Outcome};
use replicable_bench::{preset, run_experiment, ExperimentConfig, ReplicabilityReport};

const THREADS: usize = 4;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn rho_ok(r: &ReplicabilityReport, rho: f64) -> (bool, String) {
    let bound = rho + 3.0 * r.wilson.half_width;
    (r.rho_hat <= bound, format!("rho_hat={:.4} <= {:.4}", r.rho_hat, bound))
}

fn timed(limit: Duration, start: Instant) -> (bool, String) {
    let t = start.elapsed();
    (t < limit, format!("{:.1}s < {}s", t.as_secs_f64(), limit.as_secs()))
}

fn run(config: &ExperimentConfig) -> ReplicabilityReport {
    run_experiment(config, THREADS).expect("valid config").summary
}

fn outputs(r: &ReplicabilityReport) -> impl Iterator<Item = &Outcome> {
    r.records.iter().flat_map(|t| [&t.a, &t.b])
}

fn c1() -> Verdict {
    let start = Instant::now();
    let c = preset("r-mean").unwrap();
    assert_eq!((c.alpha, c.rho, c.beta, c.trials), (0.02, 0.2, 0.01, 1000));
    let r = run(&c);
    let within = outputs(&r)
        .filter(|o| o.output.as_ref().is_ok_and(|v| (v.parse::<f64>().unwrap() - 0.5).abs() <= 0.4))
        .count() as f64
        / (2 * r.trials) as f64;
    let (rho, rho_msg) = rho_ok(&r, 0.2);
    let (time, time_msg) = timed(Duration::from_secs(30), start);
    verdict(rho && within >= 0.99 && time, format!("{rho_msg}, accurate={within:.4} >= 0.99, {time_msg}"))
}

fn c2() -> Verdict {
    let start = Instant::now();
    let (alpha, support) = (0.1, 64u64);
    let f = |v: u64| v.min(support) as f64 / support as f64;
    let mut pass = true;
    let mut details = Vec::new();
    for q in [0.25, 0.5, 0.9] {
        let mut c = preset("r-quantile").unwrap();
        c.learner = LearnerSpec::RQuantile { q };
        c.trials = 300;
        let r = run(&c);
        let good = outputs(&r)
            .filter(|o| {
                o.output.as_ref().is_ok_and(|v| {
                    let x: u64 = v.parse().unwrap();
                    (1..=support).contains(&x) && f(x) >= q - alpha && f(x - 1) < q + alpha
                })
            })
            .count() as f64
            / (2 * r.trials) as f64;
        let (rho, rho_msg) = rho_ok(&r, 0.3);
        pass &= rho && good >= 0.95;
        details.push(format!("q={q}: post={good:.3}, {rho_msg}"));
    }
    let (time, time_msg) = timed(Duration::from_secs(120), start);
    verdict(pass && time, format!("{}; {time_msg}", details.join("; ")))
}

fn c3() -> Verdict {
    let c = preset("aff-parity").unwrap();
    assert_eq!((c.beta, c.rho, c.trials), (0.01, 0.02, 500));
    let Some(replicable_bench::config::TargetSpec::AffineParity { w, b }) = c.target else {
        unreachable!()
    };
    let target = Hypothesis::AffineParity {
        w: BitVector::from_index(w, 10),
        b,
    }
    .canonical();
    let r = run(&c);
    let exact = outputs(&r).filter(|o| o.output.as_deref() == Ok(target.as_str())).count() as f64 / (2 * r.trials) as f64;
    let zero = outputs(&r).filter(|o| o.error == Some(0.0)).count() as f64 / (2 * r.trials) as f64;
    let (rho, rho_msg) = rho_ok(&r, 0.02);
    verdict(
        rho && exact >= 0.99 && zero >= 0.99,
        format!("exact={exact:.3} >= 0.99, zero-error={zero:.3}, {rho_msg}"),
    )
}

fn c4() -> Verdict {
    let c = preset("ge-nonreplicable").unwrap();
    assert_eq!((c.n, c.trials), (Some(200), 1000));
    let r = run(&c);
    verdict(r.rho_hat >= 0.05, format!("rho_hat={:.4} >= 0.05", r.rho_hat))
}

/// A monotone depth-2 tree: leaves increase left to right and normalize to mass 1.
fn random_monotone_tree(d: usize, rng: &mut SeedStream) -> DecisionTreeDistribution {
    let a = rng.below(d as u64) as usize;
    let others: Vec<usize> = (0..d).filter(|&j| j != a).collect();
    let b = others[rng.below(others.len() as u64) as usize];
    let c = others[rng.below(others.len() as u64) as usize];
    let mut v: Vec<f64> = (0..4).map(|_| 0.2 + rng.uniform_unit()).collect();
    v.sort_by(f64::total_cmp);
    let scale = 4.0 / v.iter().sum::<f64>();
    let v: Vec<f64> = v.iter().map(|x| x * scale).collect();
    let root = TreeNode::split(
        a,
        TreeNode::split(b, TreeNode::Leaf(v[0]), TreeNode::Leaf(v[1])),
        TreeNode::split(c, TreeNode::Leaf(v[2]), TreeNode::Leaf(v[3])),
    );
    DecisionTreeDistribution::new(d, root).unwrap()
}

fn is_monotone(dist: &dyn ExactPmf) -> bool {
    let d = dist.dim();
    (0..1u64 << d).all(|j| {
        let x = BitVector::from_index(j, d);
        (0..d).filter(|&i| !x.get(i)).all(|i| dist.pmf(&x) <= dist.pmf(&x.flipped(i)) + 1e-15)
    })
}

fn c5() -> Verdict {
    let (alpha, beta, rho) = (0.05, 0.05, 0.5);
    let mut rng = SeedStream::new(2025).derive("c5");
    let mut cases: Vec<(Box<dyn ExactPmf>, FiniteDistribution)> = Vec::new();
    for _ in 0..20 {
        let d = 4 + rng.below(5) as usize;
        let p: Vec<f64> = (0..d).map(|_| 0.5 + 0.45 * rng.uniform_unit()).collect();
        let product = ProductDistribution::new(p).unwrap();
        let labeled = product.labeled(&Hypothesis::AllZero).unwrap();
        cases.push((Box::new(product), labeled));
    }
    for _ in 0..10 {
        let d = 4 + rng.below(5) as usize;
        let tree = random_monotone_tree(d, &mut rng);
        let labeled = tree.labeled(|_| false).unwrap();
        cases.push((Box::new(tree), labeled));
    }
    let pi = Restriction::empty();
    let (mut runs, mut mono_ok, mut sub_ok) = (0, 0, 0);
    let mut monotone_inputs = true;
    for (t, (exact, labeled)) in cases.iter_mut().enumerate() {
        monotone_inputs &= is_monotone(exact.as_ref());
        let d = exact.dim();
        for i in [rng.below(d as u64) as usize, rng.below(d as u64) as usize] {
            let truth = influence_oracle(exact.as_ref(), &pi, i).unwrap();
            let shared = SeedStream::new(t as u64).derive(&format!("infl-{i}"));
            let mut data = SeedStream::data(t as u64).derive(&format!("infl-{i}"));
            let m = r_infl_est_monotone(labeled, &pi, i, alpha, beta, rho, &shared, &mut data);
            let s = r_infl_est_subcube(labeled, &pi, i, alpha, beta, rho, &shared, &mut data);
            runs += 1;
            mono_ok += m.is_ok_and(|v| (v - truth).abs() <= alpha) as u32;
            sub_ok += s.is_ok_and(|v| (v - truth).abs() <= alpha) as u32;
        }
    }
    let (fm, fs) = (mono_ok as f64 / runs as f64, sub_ok as f64 / runs as f64);
    verdict(
        monotone_inputs && fm >= 0.95 && fs >= 0.95,
        format!("{runs} runs: monotone={fm:.3}, subcube={fs:.3} (>= 0.95), inputs monotone={monotone_inputs}"),
    )
}

fn c6() -> Verdict {
    let start = Instant::now();
    let c = preset("build-dt").unwrap();
    assert_eq!((c.alpha, c.rho, c.beta, c.trials), (0.2, 0.5, 0.1, 100));
    let truth = DecisionTreeDistribution::parse(6, BUILD_DT_TREE).unwrap();
    let r = run(&c);
    let close = outputs(&r)
        .filter(|o| {
            o.output.as_ref().is_ok_and(|s| {
                let learned = DecisionTreeDistribution::parse(6, s).unwrap();
                tv_exact(&truth, &learned).unwrap() <= 0.2
            })
        })
        .count() as f64
        / (2 * r.trials) as f64;
    let (rho, rho_msg) = rho_ok(&r, 0.5);
    let (time, time_msg) = timed(Duration::from_secs(600), start);
    verdict(rho && close >= 0.9 && time, format!("tv<=0.2 in {close:.3} >= 0.9, {rho_msg}, {time_msg}"))
}

fn c7() -> Verdict {
    let (d, alpha, beta, rho) = (8, 0.25, 0.1, 0.5);
    let c = preset("parity-lift").unwrap();
    assert_eq!((c.alpha, c.beta, c.rho, c.trials), (alpha, beta, rho, 100));
    let Some(replicable_bench::config::TargetSpec::AffineParity { w, b }) = c.target else {
        unreachable!()
    };
    let target = Hypothesis::AffineParity {
        w: BitVector::from_index(w, d),
        b,
    };
    let product = ProductDistribution::hard_instance(d, 200).unwrap();
    let population = product.labeled(&target).unwrap();
    let exp = |shared: &SeedStream, data: &mut SeedStream| {
        let mut source = population.clone();
        match lift_end_to_end(&mut source, TreeEstimator::Monotone, &AffParityLearner, 1, alpha, beta, rho, shared, data) {
            Ok(h) => {
                let h = Hypothesis::Lifted(Box::new(h));
                let err = cube_error(&h, &product, &|x| target.eval(x)).unwrap();
                Outcome::ok(h.canonical(), Some(err))
            }
            Err(e) => Outcome::failed(e),
        }
    };
    let r = estimate_replicability("lift", &exp, c.seed, 100, THREADS, alpha);
    let accurate = r.accuracy.fraction_within;
    let (rho_pass, rho_msg) = rho_ok(&r, rho);

    let mut naive = preset("ge-nonreplicable").unwrap();
    naive.distribution = c.distribution.clone();
    naive.target = c.target.clone();
    let nr = run(&naive);
    verdict(
        rho_pass && accurate >= 0.9 && nr.rho_hat > 0.05,
        format!("err<=0.25 in {accurate:.3} >= 0.9, {rho_msg}, naive rho_hat={:.4} > 0.05", nr.rho_hat),
    )
}

fn c8() -> Verdict {
    let c = preset("ows-learn").unwrap();
    assert_eq!((c.alpha, c.rho, c.beta, c.trials), (0.2, 0.3, 0.05, 300));
    let r = run(&c);
    let accurate = r.accuracy.fraction_within;
    let failures = r.failure_rate();
    let (rho, rho_msg) = rho_ok(&r, 0.3);
    verdict(
        rho && accurate >= 0.95 && failures <= 0.05,
        format!("err<=0.2 in {accurate:.3} >= 0.95, {rho_msg}, failure rate={failures:.3} <= 0.05"),
    )
}

/// All multisets of `size` drawn from `points`, as index vectors.
fn multisets(points: usize, size: usize) -> Vec<Vec<usize>> {
    if size == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in multisets(points, size - 1) {
        let start = rest.last().copied().unwrap_or(0);
        for p in start..points {
            let mut v = rest.clone();
            v.push(p);
            out.push(v);
        }
    }
    out
}

fn c9() -> Verdict {
    let points: Vec<LabeledExample> = [(false, false), (false, true), (true, false), (true, true)]
        .iter()
        .map(|&(x, y)| LabeledExample::new(BitVector::from_bools(&[x]), y))
        .collect();
    let identity = Hypothesis::AffineParity {
        w: BitVector::ones(1),
        b: false,
    };
    let class = FiniteClass::new(vec![Hypothesis::Constant(false), Hypothesis::Constant(true), identity]).unwrap();
    let dataset = |idx: &[usize]| Dataset::from_examples(1, idx.iter().map(|&i| points[i].clone())).unwrap();
    let mistakes = |idx: &[usize], h: &Hypothesis| {
        idx.iter().filter(|&&i| h.eval(&points[i].x) != points[i].y).count() as f64
    };
    let samples = multisets(points.len(), 5);
    let mut pairs = 0;
    let mut pass = samples.len() == 56;
    let mut worst = 0.0f64;
    for eps in [0.1, 1.0] {
        let mech = ExponentialMechanism::new(eps).unwrap();
        // Softmax of −ε·mistakes/2, computed directly.
        let closed = |idx: &[usize]| {
            let w: Vec<f64> = class.hypotheses().iter().map(|h| (-eps * mistakes(idx, h) / 2.0).exp()).collect();
            let z: f64 = w.iter().sum();
            w.into_iter().map(|v| v / z).collect::<Vec<_>>()
        };
        for s in &samples {
            let ps = closed(s);
            let mech_ps = mech.probabilities(&class, &dataset(s));
            pass &= ps.iter().zip(&mech_ps).all(|(a, b)| (a - b).abs() < 1e-12);
            for pos in 0..s.len() {
                for replacement in 0..points.len() {
                    let mut t = s.clone();
                    t[pos] = replacement;
                    let pt = closed(&t);
                    pairs += 1;
                    for (a, b) in ps.iter().zip(&pt) {
                        let ratio = (a / b).max(b / a);
                        worst = worst.max(ratio.ln() / eps);
                        pass &= ratio <= eps.exp();
                    }
                }
            }
        }
    }
    verdict(pass, format!("{pairs} neighboring pairs, max ln-ratio/eps={worst:.4} <= 1"))
}

fn c10() -> Verdict {
    let c = preset("dp2rep-weak").unwrap();
    assert_eq!((c.rho, c.beta, c.trials), (0.2, 0.05, 300));
    let Some(replicable_bench::config::TargetSpec::Point { index }) = c.target else {
        unreachable!()
    };
    let LearnerSpec::Dp2rep { epsilon, m0, max_candidates } = c.learner else {
        unreachable!()
    };
    let d = 4;
    let star = BitVector::from_index(index, d);
    let uniform = ProductDistribution::uniform(d);
    let population = uniform.labeled(&Hypothesis::Point(star.clone())).unwrap();
    let class = FiniteClass::point_functions(d);
    let mech = ExponentialMechanism::new(epsilon).unwrap();
    let config = WeakLearnerConfig { m0, max_candidates };
    let exp = |shared: &SeedStream, data: &mut SeedStream| {
        let mut source = population.clone();
        match dp_to_replicable_weak(&mech, &class, &mut source, c.rho, c.beta, config, shared, data) {
            Ok(h) => {
                let err = cube_error(&h, &uniform, &|x| *x == star).unwrap();
                Outcome::ok(h.canonical(), Some(err))
            }
            Err(e) => Outcome::failed(e),
        }
    };
    let r = estimate_replicability("dp2rep", &exp, c.seed, c.trials, THREADS, 3.0 / 8.0);
    let accurate = r.accuracy.fraction_within;
    let (rho, rho_msg) = rho_ok(&r, c.rho);
    verdict(rho && accurate >= 0.95, format!("err<=3/8 in {accurate:.3} >= 0.95, {rho_msg}"))
}

fn c11() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_rlearn");
    let dir = tempfile::tempdir().unwrap();
    let mut config = preset("coin").unwrap();
    config.trials = 30;
    let config_path = dir.path().join("coin.json");
    std::fs::write(&config_path, config.to_json()).unwrap();
    let config_arg = config_path.to_str().unwrap().to_string();
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("rho-estimate", vec!["--config".into(), config_arg]),
        ("run-ows", vec![]),
        ("run-parity", vec![]),
        ("run-lift", vec![]),
        ("build-dt", vec![]),
        ("run-dp2rep", vec![]),
    ];
    let run_once = |sub: &str, extra: &[String], out: &Path, threads: &str| {
        let status = Command::new(bin)
            .arg(sub)
            .args(extra)
            .args(["--trials", "30", "--threads", threads, "--out"])
            .arg(out)
            .output()
            .expect("binary runs");
        status.status.success()
    };
    let mut pass = true;
    let mut mismatched = Vec::new();
    for (sub, extra) in &runs {
        let a = dir.path().join(format!("{sub}-a"));
        let b = dir.path().join(format!("{sub}-b"));
        pass &= run_once(sub, extra, &a, "1") && run_once(sub, extra, &b, "3");
        for f in ["report.json", "trials.csv"] {
            let same = matches!((std::fs::read(a.join(f)), std::fs::read(b.join(f))), (Ok(x), Ok(y)) if x == y);
            if !same {
                mismatched.push(format!("{sub}/{f}"));
            }
        }
    }
    pass &= mismatched.is_empty();
    verdict(pass, format!("{} subcommands rerun, mismatches: {mismatched:?}", runs.len()))
}

type Criterion = (&'static str, &'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("C1", "replicable rounding of a mean", c1),
        ("C2", "replicable quantile postcondition", c2),
        ("C3", "affine parity exact recovery", c3),
        ("C4", "naive elimination is not replicable", c4),
        ("C5", "influence estimators match the oracle", c5),
        ("C6", "decision-tree distribution learning", c6),
        ("C7", "lifted parity learner end to end", c7),
        ("C8", "one-way-sequence learner", c8),
        ("C9", "exponential mechanism is pure DP", c9),
        ("C10", "weak learner from a DP learner", c10),
        ("C11", "CLI reports are deterministic", c11),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let v = check();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        failed += !v.pass as u32;
        println!("{tag} {id} {name}: {} [{:.1}s]", v.detail, start.elapsed().as_secs_f64());
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
