//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::f64::consts::SQRT_2;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use bellbox::analysis::{
    chsh_value, classify, derive_critical_inequality, efficiency_threshold, membership,
    membership_lp, visibility_threshold, Classification, Membership, MEMBERSHIP_STRATEGY_CAP,
};
use bellbox::facets::is_positivity;
use bellbox::functional::chsh_coefficients;
use bellbox::local::{local_bound_of, strategy_count};
use bellbox::lp::{solve, verify_certificate, LinearProgram, LpStatus, Sense, SolveOptions};
use bellbox::quantum::{behavior_from_setup, named_setup, random_setup, singlet_with_angles};
use bellbox::symmetry::relabellings;
use bellbox::{
    enumerate_facets, local_bound, mix, named_behavior, no_signalling_defect, Behavior,
    FacetCaps, LocalModel, Scenario,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn singlet() -> Behavior {
    behavior_from_setup(&named_setup("singlet_chsh", None).unwrap()).unwrap()
}

/// Every membership LP solved by the criteria, re-verified for criterion 9.
fn lp_verifies(b: &Behavior) -> Result<(), String> {
    let lp = membership_lp(b, MEMBERSHIP_STRATEGY_CAP).map_err(|e| e.to_string())?;
    let out = solve(&lp, &SolveOptions::default()).map_err(|e| e.to_string())?;
    let report = verify_certificate(&lp, &out);
    check(report.passed, || format!("verification failed: {:?}", report.failures))?;
    match out.status {
        LpStatus::Feasible => check(report.residual.unwrap() <= 1e-7, || "residual".into()),
        LpStatus::Infeasible => check(report.farkas_margin.unwrap() > 0.0, || "margin".into()),
        s => Err(format!("unexpected status {s:?}")),
    }
}

fn c1() -> Outcome {
    let ints: Vec<i64> = chsh_coefficients().iter().map(|&c| c as i64).collect();
    let (bound, _) = local_bound_of(&Scenario::chsh(), &ints, 16).map_err(|e| e.to_string())?;
    check(bound == 2, || format!("bound {bound}"))?;
    Ok(format!("bound = {bound} over 16 strategies"))
}

fn c2() -> Outcome {
    let s = chsh_value(&singlet()).map_err(|e| e.to_string())?;
    check((s - 2.0 * SQRT_2).abs() <= 1e-9, || format!("S = {s}"))?;
    Ok(format!("S = {s:.12}"))
}

fn random_model(rng: &mut ChaCha8Rng, s: &Scenario) -> LocalModel {
    let count = strategy_count(s) as usize;
    let k = rng.random_range(1..=6.min(count));
    let mut picks: Vec<usize> = Vec::new();
    while picks.len() < k {
        let i = rng.random_range(0..count);
        if !picks.contains(&i) {
            picks.push(i);
        }
    }
    let ws: Vec<f64> = picks.iter().map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = ws.iter().sum();
    LocalModel::new(s.clone(), picks.into_iter().zip(ws).map(|(i, w)| (i, w / total)).collect())
        .unwrap()
}

fn c3(lps: &mut Vec<Behavior>) -> Outcome {
    let scenarios = [
        Scenario::chsh(),
        Scenario::uniform(2, 2, 3).unwrap(),
        Scenario::uniform(2, 3, 2).unwrap(),
        Scenario::uniform(3, 2, 2).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = &scenarios[seed as usize % scenarios.len()];
        let b = random_model(&mut rng, s).behavior().unwrap();
        match membership(&b, 1e-9).map_err(|e| format!("seed {seed}: {e}"))? {
            Membership::Local(m) => worst = worst.max(m.behavior().unwrap().max_abs_diff(&b)),
            Membership::Nonlocal(_) => return Err(format!("seed {seed}: local model reported nonlocal")),
        }
        check(worst <= 1e-7, || format!("seed {seed}: reproduction error {worst:e}"))?;
        lps.push(b);
    }
    let q = singlet();
    let Membership::Nonlocal(w) = membership(&q, 1e-9).map_err(|e| e.to_string())? else {
        return Err("singlet reported local".into());
    };
    let (bound, _) = local_bound(q.scenario(), w.functional.coeffs()).unwrap();
    let violation = w.functional.value(&q) - bound;
    check(bound == 2.0 && violation > 0.8, || format!("bound {bound}, violation {violation}"))?;
    check((violation - (2.0 * SQRT_2 - 2.0)).abs() <= 1e-6, || format!("violation {violation}"))?;
    lps.push(q);
    Ok(format!("200 local models, max error {worst:.1e}; singlet violation {violation:.9}"))
}

fn c4(lps: &mut Vec<Behavior>) -> Outcome {
    let u = named_behavior("uniform", None).unwrap();
    let q = singlet();
    let tq = visibility_threshold(&q, &u, 1e-6).map_err(|e| e.to_string())?;
    let s = chsh_value(&q).unwrap();
    check((tq.critical - 2.0 / s).abs() <= 1e-6, || format!("singlet v* = {}", tq.critical))?;
    check((tq.critical - std::f64::consts::FRAC_1_SQRT_2).abs() <= 1e-6, || format!("singlet v* = {}", tq.critical))?;
    let pr = named_behavior("pr_box", None).unwrap();
    let tp = visibility_threshold(&pr, &u, 1e-6).map_err(|e| e.to_string())?;
    check((tp.critical - 0.5).abs() <= 1e-6, || format!("PR v* = {}", tp.critical))?;
    for (p, t) in [(&q, &tq), (&pr, &tp)] {
        for v in [t.bracket.0, t.bracket.1] {
            lps.push(mix(&[(v, p), (1.0 - v, &u)]).unwrap());
        }
    }
    Ok(format!("singlet v* = {:.8} (2/S = {:.8}); PR v* = {:.8}", tq.critical, 2.0 / s, tp.critical))
}

fn c5(lps: &mut Vec<Behavior>) -> Outcome {
    let setup = named_setup("singlet_chsh", None).unwrap();
    let lifted = setup.lifted(1.0).unwrap().scenario();
    check(strategy_count(&lifted) == 81 && lifted.dim() == 36, || {
        format!("lifted scenario has {} strategies, dim {}", strategy_count(&lifted), lifted.dim())
    })?;
    let t = efficiency_threshold(&setup, 1e-4).map_err(|e| e.to_string())?;
    let analytic = 2.0 / (1.0 + SQRT_2);
    check((t.critical - 0.8284).abs() <= 1e-3, || format!("eta* = {}", t.critical))?;
    check((t.critical - analytic).abs() <= 1e-3, || format!("eta* = {}", t.critical))?;
    let at = |eta: f64| behavior_from_setup(&setup.lifted(eta).unwrap()).unwrap();
    let endpoints = (membership(&at(0.5), 1e-9), membership(&at(1.0), 1e-9));
    check(matches!(endpoints, (Ok(Membership::Local(_)), Ok(Membership::Nonlocal(_)))), || {
        "endpoint verdicts at eta = 0.5 and 1 are not local / nonlocal".into()
    })?;
    for eta in [t.bracket.0, t.bracket.1, 0.5, 1.0] {
        lps.push(at(eta));
    }
    Ok(format!("eta* = {:.6} (2/(1+sqrt 2) = {analytic:.6}), {} bisection steps", t.critical, t.iterations))
}

fn c6(lps: &mut Vec<Behavior>) -> Outcome {
    let s = Scenario::chsh();
    let facets = enumerate_facets(&s, FacetCaps::default()).map_err(|e| e.to_string())?;
    let positivity = facets.iter().filter(|f| is_positivity(f).unwrap()).count();
    let chsh_class = facets
        .iter()
        .filter(|f| f.local_bound() == 2.0 && f.coeffs().iter().all(|c| c.abs() == 1.0))
        .count();
    check(facets.len() == 24 && positivity == 16 && chsh_class == 8, || {
        format!("{} facets, {positivity} positivity, {chsh_class} CHSH-class", facets.len())
    })?;
    let group = relabellings(&s, 1 << 20).unwrap();
    for perm in &group {
        for f in &facets {
            let g = f.permuted(perm).unwrap().canonical().unwrap();
            check(facets.iter().any(|h| h.same_inequality(&g)), || "not closed under relabelling".into())?;
        }
    }
    let u = named_behavior("uniform", None).unwrap();
    let pr = named_behavior("pr_box", None).unwrap();
    let mut samples = vec![singlet(), pr.clone()];
    for k in 0..30 {
        let t = 0.21 * k as f64;
        samples.push(behavior_from_setup(&singlet_with_angles(&[t, t + 1.5], &[t + 0.8, t - 0.7])).unwrap());
    }
    for perm in group.iter().step_by(8) {
        let b = mix(&[(0.8, &pr), (0.2, &u)]).unwrap();
        let mut p = vec![0.0; 16];
        for (i, &j) in perm.iter().enumerate() {
            p[j] = b.probs()[i];
        }
        samples.push(Behavior::new(s.clone(), p, 1e-12).unwrap());
    }
    let mut certificates = 0;
    for b in &samples {
        if let Membership::Nonlocal(w) = membership(b, 1e-9).map_err(|e| e.to_string())? {
            check(facets.iter().any(|f| f.same_inequality(&w.functional)), || {
                format!("certificate {:?} is not a facet", w.functional.coeffs())
            })?;
            certificates += 1;
        }
        lps.push(b.clone());
    }
    Ok(format!(
        "24 facets (16 positivity + 8 CHSH), closed under {} relabellings; {certificates} certificates in the census",
        group.len()
    ))
}

fn c7(lps: &mut Vec<Behavior>) -> Outcome {
    let mut parts = Vec::new();
    let pr = named_behavior("pr_box", None).unwrap();
    match classify(&pr, 1e-9).map_err(|e| e.to_string())? {
        Classification::WeaklyNonlocal(w) => {
            let (bound, _) = local_bound(pr.scenario(), w.functional.coeffs()).unwrap();
            check(w.functional.value(&pr) - bound > 0.0, || "PR witness not violated".into())?;
            parts.push(format!("pr_box WeaklyNonlocal (violation {:.3})", w.violation));
        }
        other => return Err(format!("pr_box -> {:?}", other.verdict())),
    }
    let u = named_behavior("uniform", None).unwrap();
    match classify(&u, 1e-9).map_err(|e| e.to_string())? {
        Classification::Local(m) => {
            let err = m.behavior().unwrap().max_abs_diff(&u);
            check(err <= 1e-7, || format!("uniform model error {err}"))?;
            parts.push("uniform Local".into());
        }
        other => return Err(format!("uniform -> {:?}", other.verdict())),
    }
    let sd = named_behavior("signalling_demo", None).unwrap();
    match classify(&sd, 1e-9).map_err(|e| e.to_string())? {
        Classification::Signalling(r) => {
            check(r.max_defect == 1.0, || format!("defect {}", r.max_defect))?;
            check(no_signalling_defect(&sd).max_defect == 1.0, || "defect recompute".into())?;
            parts.push("signalling_demo Signalling (defect 1)".into());
        }
        other => return Err(format!("signalling_demo -> {:?}", other.verdict())),
    }
    derive_critical_inequality(&sd, 1e-9).map_err(|e| e.to_string())?;
    lps.extend([pr, u, sd]);
    Ok(parts.join("; "))
}

fn c8() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..500u64 {
        let dims = (1 + (seed % 4) as usize, 1 + ((seed / 4) % 4) as usize);
        let inputs = (1 + (seed % 3) as usize, 1 + ((seed / 3) % 3) as usize);
        let setup = random_setup(seed, dims, inputs).map_err(|e| e.to_string())?;
        let b = behavior_from_setup(&setup).map_err(|e| format!("seed {seed}: {e}"))?;
        worst = worst.max(no_signalling_defect(&b).max_defect);
        check(worst <= 1e-9, || format!("seed {seed}: defect {worst:e}"))?;
    }
    Ok(format!("500 setups, max defect {worst:.1e}"))
}

/// Degenerate instances with known statuses.
fn regression_set() -> Vec<(LinearProgram, LpStatus)> {
    let beale = LinearProgram::new(
        vec![
            vec![1.0, 0.0, 0.0, 0.25, -8.0, -1.0, 9.0],
            vec![0.0, 1.0, 0.0, 0.5, -12.0, -0.5, 3.0],
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0],
        ],
        vec![0.0, 0.0, 1.0],
    )
    .unwrap()
    .with_objective(Sense::Minimize, vec![0.0, 0.0, 0.0, -0.75, 20.0, -0.5, 6.0])
    .unwrap();
    let klee_minty = LinearProgram::new(
        vec![
            vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            vec![20.0, 1.0, 0.0, 0.0, 1.0, 0.0],
            vec![200.0, 20.0, 1.0, 0.0, 0.0, 1.0],
        ],
        vec![1.0, 100.0, 10000.0],
    )
    .unwrap()
    .with_objective(Sense::Maximize, vec![100.0, 10.0, 1.0, 0.0, 0.0, 0.0])
    .unwrap();
    let contradictory = LinearProgram::new(vec![vec![1.0, 1.0], vec![1.0, 1.0]], vec![1.0, 2.0]).unwrap();
    let redundant = LinearProgram::new(vec![vec![1.0, 1.0]; 3], vec![1.0; 3]).unwrap();
    let unbounded = LinearProgram::new(vec![vec![1.0, -1.0]], vec![0.0])
        .unwrap()
        .with_objective(Sense::Maximize, vec![1.0, 0.0])
        .unwrap();
    vec![
        (beale, LpStatus::Optimal),
        (klee_minty, LpStatus::Optimal),
        (contradictory, LpStatus::Infeasible),
        (redundant, LpStatus::Feasible),
        (unbounded, LpStatus::Unbounded),
    ]
}

fn c9(lps: &[Behavior]) -> Outcome {
    for (i, b) in lps.iter().enumerate() {
        lp_verifies(b).map_err(|e| format!("workload LP {i}: {e}"))?;
    }
    let set = regression_set();
    for (i, (lp, expected)) in set.iter().enumerate() {
        let out = solve(lp, &SolveOptions::default()).map_err(|e| e.to_string())?;
        check(out.status == *expected, || format!("regression {i}: {:?} != {expected:?}", out.status))?;
        let report = verify_certificate(lp, &out);
        check(report.passed, || format!("regression {i}: {:?}", report.failures))?;
    }
    Ok(format!("{} workload LPs and {} regression LPs verified", lps.len(), set.len()))
}

fn c10() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let f = |name: &str| dir.join(name).to_str().unwrap().to_string();
    let tmp = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let out_a = tmp.join("determinism_a.toml");
    let out_b = tmp.join("determinism_b.toml");
    let runs: Vec<Vec<String>> = vec![
        vec!["validate".into(), f("singlet_chsh.setup.toml")],
        vec!["validate".into(), f("bad_normalization.toml")],
        vec!["classify".into(), f("pr_box.toml")],
        vec!["classify".into(), f("uniform.toml")],
        vec!["classify".into(), f("signalling_demo.toml")],
        vec!["classify".into(), f("werner_0.5.setup.toml")],
        vec!["membership".into(), f("singlet_chsh.toml")],
        vec!["membership".into(), f("werner_0.7.toml")],
        vec!["derive-inequality".into(), f("werner_0.75.toml")],
        vec!["facets".into(), f("chsh_scenario.toml")],
        vec!["chsh".into(), f("werner_1.0.toml")],
        vec!["quantum".into(), f("singlet_chsh.setup.toml"), "--efficiency".into(), "0.9".into()],
        vec!["quantum".into(), "--random".into(), "--seed".into(), "7".into(), "--dims".into(), "3,4".into()],
        vec!["threshold".into(), "visibility".into(), f("singlet_chsh.toml")],
        vec!["threshold".into(), "efficiency".into(), f("singlet_chsh.setup.toml")],
    ];
    let mut verbs = std::collections::BTreeSet::new();
    for args in &runs {
        let run = |extra: &Path| {
            let mut cmd = Command::new(env!("CARGO_BIN_EXE_bellbox"));
            cmd.args(args).args(["--format", "structured"]).env_remove("BELLBOX_TOL");
            if args[0] == "derive-inequality" {
                cmd.arg("--output").arg(extra);
            }
            cmd.output().map_err(|e| e.to_string())
        };
        let (a, b) = (run(&out_a)?, run(&out_b)?);
        check(a.stdout == b.stdout && a.status == b.status, || format!("`{}` differs between runs", args.join(" ")))?;
        check(!a.stdout.is_empty(), || format!("`{}` produced no report", args.join(" ")))?;
        verbs.insert(args[0].clone());
    }
    let docs_equal = std::fs::read(&out_a).map_err(|e| e.to_string())? == std::fs::read(&out_b).map_err(|e| e.to_string())?;
    check(docs_equal, || "emitted inequality documents differ".into())?;
    check(verbs.len() == 8, || format!("only {} verbs covered", verbs.len()))?;
    Ok(format!("{} invocations over all 8 verbs byte-identical", runs.len()))
}

fn main() {
    let mut lps = Vec::new();
    let criteria: Vec<(&str, Duration, Box<dyn FnOnce(&mut Vec<Behavior>) -> Outcome>)> = vec![
        ("CHSH local bound", Duration::from_secs(1), Box::new(|_| c1())),
        ("Tsirelson value", Duration::from_secs(1), Box::new(|_| c2())),
        ("membership soundness", Duration::from_secs(30), Box::new(c3)),
        ("visibility threshold", Duration::from_secs(10), Box::new(c4)),
        ("detection-efficiency threshold", Duration::from_secs(60), Box::new(c5)),
        ("facet census", Duration::from_secs(10), Box::new(c6)),
        ("three-type classification", Duration::from_secs(5), Box::new(c7)),
        ("no-signalling property suite", Duration::from_secs(60), Box::new(|_| c8())),
        ("LP self-verification", Duration::from_secs(60), Box::new(|l: &mut Vec<Behavior>| c9(l))),
        ("end-to-end determinism", Duration::from_secs(120), Box::new(|_| c10())),
    ];
    let mut failures = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = run(&mut lps);
        let elapsed = start.elapsed();
        let result = result.and_then(|detail| {
            if elapsed <= limit {
                Ok(detail)
            } else {
                Err(format!("{detail}; took {elapsed:.2?}, limit {limit:?}"))
            }
        });
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{elapsed:.2?}]", i + 1),
            Err(why) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {why} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 10 acceptance criteria passed");
}
