//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::{BTreeMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};

use amdl_core::active_df::{robust_rpu_learn, AbstainingClassifier};
use amdl_core::complexity::{disagreement_coefficient, star_number, star_number_max, vc_dimension, VcDimension};
use amdl_core::domain::{
    best_nu, loss, max_disagreement, worst_loss, Hypothesis, HypothesisClass, LabeledDistribution, MdlInstance,
    VersionSpace,
};
use amdl_core::instances::{
    gen_agnostic_lb, gen_prop1, gen_random, gen_star_lb, kl_bernoulli, kl_bernoulli_integral, star_lb_labeler,
    verify_separation, Example1Case, FamilySpec,
};
use amdl_core::oracle::{Example, OracleSet, SampleSource};
use amdl_harness::instance_file::{family_metadata, write_instance};
use amdl_harness::profile::Knobs;
use amdl_harness::report::{build_report, read_sweep};
use amdl_harness::run::{
    records_to_csv, run_many, run_trials, Algorithm, RunConfig, TrialContext, TrialRun, TrialSpec,
};
use amdl_harness::sweep::{parse_config, run_sweep, summary_to_csv};

type Outcome = Result<String, String>;

const DELTA: f64 = 0.1;
/// Required success frequency `1 - δ - 0.05`.
const PAC_RATE: f64 = 1.0 - DELTA - 0.05;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn ctx(spec: FamilySpec) -> TrialContext {
    let inst = spec.generate().unwrap();
    let meta = family_metadata(&spec);
    let id = amdl_harness::instance_file::instance_id(&meta);
    TrialContext::new(inst, id, meta.family).unwrap()
}

fn runs(ctx: &mut TrialContext, alg: Algorithm, eps: f64, trials: usize, seed: u64) -> Vec<TrialRun> {
    if alg == Algorithm::ActiveDf {
        ctx.ensure_star().unwrap();
    }
    let spec = TrialSpec { alg, eps, delta: DELTA, knobs: Knobs::desk(), trace: false, timing: false };
    run_many(ctx, &spec, trials, seed).unwrap()
}

// 1 ----------------------------------------------------------------------

fn agnostic_table() -> Outcome {
    let (k, nu, eps) = (4, 0.4, 0.05);
    let base = gen_agnostic_lb(k, nu, eps, None).map_err(|e| e.to_string())?;
    let (h1, h2) = (base.class().hypothesis(0), base.class().hypothesis(1));
    let mut checked = 0;
    let mut expect = |name: String, got: f64, want: f64| -> Result<(), String> {
        checked += 1;
        check(got == want, format!("{name}: got {got:?}, want {want:?}"))
    };
    expect("L(h1,D1)".into(), loss(h1, &base.distributions()[0]).unwrap(), 0.0)?;
    expect("L(h2,D1)".into(), loss(h2, &base.distributions()[0]).unwrap(), nu)?;
    for i in 2..=k {
        let flipped = gen_agnostic_lb(k, nu, eps, Some(i)).unwrap();
        let (d, dp) = (&base.distributions()[i - 1], &flipped.distributions()[i - 1]);
        expect(format!("L(h1,D{i})"), loss(h1, d).unwrap(), nu - 2.0 * eps)?;
        expect(format!("L(h1,D'{i})"), loss(h1, dp).unwrap(), nu + 2.0 * eps)?;
        expect(format!("L(h2,D{i})"), loss(h2, d).unwrap(), nu / 2.0 - 2.0 * eps)?;
        expect(format!("L(h2,D'{i})"), loss(h2, dp).unwrap(), nu / 2.0 + 2.0 * eps)?;
    }
    Ok(format!("{checked} entries exact"))
}

// 2 ----------------------------------------------------------------------

fn prop1_coefficients() -> Outcome {
    let eps = 0.05;
    for k in [2usize, 4, 8] {
        let inst = gen_prop1(k, eps).unwrap();
        let hstar = inst.class().hypothesis(0);
        for (i, d) in inst.distributions().iter().enumerate() {
            let t = disagreement_coefficient(d, inst.class(), hstar, eps).unwrap();
            check(t == 1.0, format!("k={k}: theta_{i} = {t}"))?;
        }
        let avg = inst.average_distribution().unwrap();
        let t = disagreement_coefficient(&avg, inst.class(), hstar, eps / k as f64).unwrap();
        check(t == k as f64, format!("k={k}: average theta = {t}"))?;
    }
    Ok("k = 2, 4, 8".into())
}

// 3 ----------------------------------------------------------------------

type Pmf = Vec<[f64; 2]>;

fn raw_pmf(d: &LabeledDistribution) -> Pmf {
    d.marginal().iter().zip(d.eta_plus()).map(|(&m, &e)| [m * (1.0 - e), m * e]).collect()
}

/// Unanimous label of `v` at each point, if any.
fn unanimous(class: &HypothesisClass, v: &VersionSpace, x: usize) -> Option<i8> {
    let first = class.hypothesis(v.members()[0]).predict(x);
    v.members().iter().all(|&h| class.hypothesis(h).predict(x) == first).then_some(first)
}

fn forced(m: f64, label: i8) -> [f64; 2] {
    if label == 1 {
        [0.0, m]
    } else {
        [m, 0.0]
    }
}

fn tv(pmf: &Pmf, draws: &[Example]) -> f64 {
    let mut counts = vec![[0usize; 2]; pmf.len()];
    for &(x, y) in draws {
        counts[x][usize::from(y == 1)] += 1;
    }
    let n = draws.len() as f64;
    0.5 * pmf
        .iter()
        .zip(&counts)
        .map(|(p, c)| (p[0] - c[0] as f64 / n).abs() + (p[1] - c[1] as f64 / n).abs())
        .sum::<f64>()
}

fn within_3_sigma(n: usize, p: f64, observed: u64) -> bool {
    let sigma = (n as f64 * p * (1.0 - p)).sqrt();
    (observed as f64 - n as f64 * p).abs() <= 3.0 * sigma
}

fn samplers() -> Outcome {
    const N: usize = 100_000;
    let class = HypothesisClass::new(
        [[-1, -1, -1, -1, -1, -1], [-1, 1, -1, -1, 1, -1], [-1, 1, 1, -1, -1, -1], [1, 1, 1, 1, 1, -1]]
            .iter()
            .map(|r| Hypothesis::from_ints(r).unwrap())
            .collect(),
    )
    .unwrap();
    let d = LabeledDistribution::new(vec![0.25, 0.2, 0.1, 0.2, 0.15, 0.1], vec![0.1, 0.9, 0.5, 0.0, 0.7, 0.3]).unwrap();
    let inst = MdlInstance::new(class.clone(), vec![d.clone()], None).unwrap();
    let mut notes = Vec::new();

    // induced
    let v = VersionSpace::from_indices(vec![0, 1, 2]);
    let region = v.region_map(&class).unwrap();
    let mut pmf = raw_pmf(&d);
    let mut dis_mass = 0.0;
    for (x, p) in pmf.iter_mut().enumerate() {
        match unanimous(&class, &v, x) {
            Some(l) => *p = forced(d.marginal()[x], l),
            None => dis_mass += d.marginal()[x],
        }
    }
    let mut o = OracleSet::new(&inst, 101);
    let draws: Vec<Example> = (0..N).map(|_| o.sample_induced(0, &region).unwrap()).collect();
    let t = tv(&pmf, &draws);
    check(t <= 0.02, format!("induced TV {t}"))?;
    check(
        within_3_sigma(N, dis_mass, o.ledger().total_labels()),
        format!("induced labels {}", o.ledger().total_labels()),
    )?;
    notes.push(format!("induced tv={t:.4}"));

    // imputed
    let outputs: Vec<i8> = vec![0, 1, 0, -1, 1, 0];
    let f = AbstainingClassifier::new(outputs.clone()).unwrap();
    let mut pmf = raw_pmf(&d);
    let mut abstain = 0.0;
    for (x, &fx) in outputs.iter().enumerate() {
        if fx == 0 {
            abstain += d.marginal()[x];
        } else {
            pmf[x] = forced(d.marginal()[x], fx);
        }
    }
    let mut o = OracleSet::new(&inst, 102);
    let draws: Vec<Example> = (0..N).map(|_| o.sample_imputed(0, &f).unwrap()).collect();
    let t = tv(&pmf, &draws);
    check(t <= 0.02, format!("imputed TV {t}"))?;
    check(
        within_3_sigma(N, abstain, o.ledger().total_labels()),
        format!("imputed labels {}", o.ledger().total_labels()),
    )?;
    notes.push(format!("imputed tv={t:.4}"));

    // surrogate
    let v = VersionSpace::from_indices(vec![0, 1]);
    let region = v.region_map(&class).unwrap();
    let mut o = OracleSet::new(&inst, 103);
    let pool = o.sample_conditional_agreement(0, &region, 50).unwrap();
    let agr: f64 = (0..6).filter(|&x| unanimous(&class, &v, x).is_some()).map(|x| d.marginal()[x]).sum();
    let mut pmf: Pmf = raw_pmf(&d)
        .into_iter()
        .enumerate()
        .map(|(x, p)| if unanimous(&class, &v, x).is_some() { [0.0, 0.0] } else { p })
        .collect();
    for &(x, y) in &pool {
        pmf[x][usize::from(y == 1)] += agr / pool.len() as f64;
    }
    let before = o.ledger().total_labels();
    let draws: Vec<Example> = (0..N).map(|_| o.sample_surrogate(0, &region, &pool).unwrap()).collect();
    let t = tv(&pmf, &draws);
    check(t <= 0.02, format!("surrogate TV {t}"))?;
    let spent = o.ledger().total_labels() - before;
    check(within_3_sigma(N, 1.0 - agr, spent), format!("surrogate labels {spent}"))?;
    notes.push(format!("surrogate tv={t:.4}"));
    Ok(notes.join(", "))
}

// 4 ----------------------------------------------------------------------

fn pac_suites() -> Outcome {
    let suites: Vec<(&str, FamilySpec, Algorithm, f64)> = vec![
        ("prop1 k=8", FamilySpec::Prop1 { k: 8, eps: 0.05 }, Algorithm::ActiveDdLarge, 0.05),
        (
            "example1 a",
            FamilySpec::Example1 { nu_prime: 0.2, eps: 0.02, case: Example1Case::A },
            Algorithm::ActiveDdSmall,
            0.02,
        ),
        (
            "example1 b",
            FamilySpec::Example1 { nu_prime: 0.2, eps: 0.02, case: Example1Case::B },
            Algorithm::ActiveDdSmall,
            0.02,
        ),
        ("star-lb k=2 theta=4", FamilySpec::StarLb { k: 2, theta: 4, i: 1, j: 2 }, Algorithm::ActiveDf, 0.05),
        (
            "agnostic-lb k=4",
            FamilySpec::AgnosticLb { k: 4, nu: 0.4, eps: 0.05, flipped: None },
            Algorithm::PassiveHedge,
            0.05,
        ),
        (
            "agnostic-lb k=4",
            FamilySpec::AgnosticLb { k: 4, nu: 0.4, eps: 0.05, flipped: None },
            Algorithm::ActiveDdSmall,
            0.05,
        ),
    ];
    let mut notes = Vec::new();
    let mut failed = Vec::new();
    for (name, spec, alg, eps) in suites {
        let mut c = ctx(spec);
        let rs = runs(&mut c, alg, eps, 100, 0);
        let rate = rs.iter().filter(|r| r.record.success).count() as f64 / rs.len() as f64;
        let mean = rs.iter().map(|r| r.record.labels_total as f64).sum::<f64>() / rs.len() as f64;
        let line = format!("{name}/{alg} {rate:.2} (mean labels {mean:.0})");
        if rate < PAC_RATE {
            failed.push(line.clone());
        }
        notes.push(line);
    }
    if failed.is_empty() {
        Ok(notes.join("; "))
    } else {
        Err(failed.join("; "))
    }
}

// 5 ----------------------------------------------------------------------

fn epoch_invariants() -> Outcome {
    let mut epochs = 0;
    let mut survival = Vec::new();
    for (spec, labeler) in [
        (FamilySpec::StarLb { k: 2, theta: 4, i: 1, j: 2 }, Some(star_lb_labeler(4, 1, 2))),
        (FamilySpec::StarLb { k: 4, theta: 3, i: 3, j: 1 }, Some(star_lb_labeler(3, 3, 1))),
        (FamilySpec::Prop1 { k: 8, eps: 0.05 }, None),
    ] {
        let mut c = ctx(spec.clone());
        let rs = runs(&mut c, Algorithm::ActiveDdLarge, 0.05, 100, 500);
        let class = c.instance.class();
        let mut kept = 0;
        for r in &rs {
            let mut prev = class.full_version_space();
            for e in &r.result.epochs {
                epochs += 1;
                check(e.version_space.is_subset_of(&prev), format!("{spec:?}: epoch {} grew V", e.epoch))?;
                let center = e.center.resolve(class).unwrap();
                for &h in e.version_space.members() {
                    let rho = max_disagreement(class.hypothesis(h), &center, &c.instance).unwrap();
                    check(rho <= 2.0 * e.eps_n, format!("{spec:?}: rho {rho} > 2*{}", e.eps_n))?;
                }
                prev = e.version_space.clone();
            }
            if let Some(l) = labeler {
                if r.result.epochs.iter().all(|e| e.version_space.contains(l)) {
                    kept += 1;
                }
            }
        }
        if labeler.is_some() {
            let rate = kept as f64 / rs.len() as f64;
            check(rate >= 1.0 - DELTA, format!("{spec:?}: labeler survived {rate}"))?;
            survival.push(format!("{rate:.2}"));
        }
    }
    Ok(format!("{epochs} epochs checked, labeler survival {}", survival.join("/")))
}

// 6 ----------------------------------------------------------------------

/// A zero-error class member of a noiseless instance.
fn labeler_of(inst: &MdlInstance) -> Hypothesis {
    let (h, nu) = best_nu(inst);
    assert_eq!(nu, 0.0);
    inst.class().hypothesis(h).clone()
}

fn rpu_reliability() -> Outcome {
    let xi = 0.1;
    let mut instances = vec![gen_star_lb(2, 4, 1, 2).unwrap(), gen_star_lb(3, 3, 2, 0).unwrap()];
    instances.extend((0..4).map(|s| gen_random(6, 10, 2, false, 40 + s).unwrap()));
    let mut useful = 0;
    let mut trials = 0;
    for inst in &instances {
        let h = labeler_of(inst);
        let star = star_number_max(inst.class(), 128).unwrap().value;
        let dists: Vec<usize> = (0..inst.k()).collect();
        let weights: Vec<(&LabeledDistribution, f64)> =
            inst.distributions().iter().map(|d| (d, 1.0 / inst.k() as f64)).collect();
        let mixture = LabeledDistribution::mixture(&weights).unwrap();
        for seed in 0..50 {
            let mut o = OracleSet::new(inst, seed);
            let f =
                robust_rpu_learn(inst.class(), &mut o, &dists, SampleSource::Direct, xi, DELTA, star, 0.02).unwrap();
            check(f.violations(&h).is_empty(), format!("violations at {:?}", f.violations(&h)))?;
            trials += 1;
            if f.abstention_mass(&mixture) <= xi {
                useful += 1;
            }
        }
    }
    let rate = useful as f64 / trials as f64;
    check(rate >= 1.0 - DELTA, format!("robust learner abstention <= xi in {rate}"))?;

    // the full distribution-free pipeline
    let mut c = ctx(FamilySpec::StarLb { k: 2, theta: 4, i: 2, j: 3 });
    let h = labeler_of(&c.instance);
    let rs = runs(&mut c, Algorithm::ActiveDf, 0.05, 100, 900);
    let mut epochs_ok = 0;
    let mut classifiers = 0;
    for r in &rs {
        let mut all = true;
        for e in &r.result.df_epochs {
            if let Some(f) = &e.classifier {
                classifiers += 1;
                check(f.violations(&h).is_empty(), format!("epoch {} classifier is unreliable", e.epoch))?;
                all &= e.abstain_mass_max <= e.eps_n;
            }
        }
        if all && r.result.failure.is_none() {
            epochs_ok += 1;
        }
    }
    let pipe = epochs_ok as f64 / rs.len() as f64;
    check(pipe >= 1.0 - DELTA, format!("pipeline abstention within eps_n in {pipe}"))?;
    Ok(format!("robust learner {rate:.2} useful over {trials} runs; pipeline {pipe:.2} over {classifiers} classifiers"))
}

// 7 ----------------------------------------------------------------------

fn fits(csv_text: &str) -> Fits {
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let row: BTreeMap<String, String> = headers.iter().zip(rec.iter()).map(|(h, v)| (h.into(), v.into())).collect();
        out.insert((row["figure"].clone(), row["series"].clone()), row);
    }
    out
}

type Fits = BTreeMap<(String, String), BTreeMap<String, String>>;

fn sweep(config: &str) -> (Vec<amdl_harness::sweep::CellSummary>, Fits) {
    let cfg = parse_config(config).unwrap();
    let out = run_sweep(&cfg).unwrap();
    assert!(out.cells.iter().all(|c| c.skipped.is_none()), "skipped cells in sweep");
    let rows = read_sweep(summary_to_csv(&out.cells).as_bytes()).unwrap();
    let rep = build_report(&rows);
    (out.cells, fits(&rep.fits))
}

fn scaling() -> Outcome {
    // (a) labels against ln(1/ε) on a star instance before its version space collapses
    let (_, f) = sweep(
        r#"
trials = 50
seed = 0
delta = 0.1
[[cells]]
family = "star-lb"
params = { k = 2, theta = 16, i = 1, j = 3 }
eps = [0.1, 0.05, 0.025]
algs = ["active-dd-large"]
"#,
    );
    let a = &f[&("labels_vs_eps".to_string(), "star-lb|active-dd-large|i=1;j=3;k=2;theta=16".to_string())];
    let r2: f64 = a["r2"].parse().unwrap();
    let a_ok = r2 >= 0.9;

    // (b) labels against k on the agnostic family
    let (_, f) = sweep(
        r#"
trials = 50
seed = 0
delta = 0.1
[[cells]]
family = "agnostic-lb"
params = { k = [2, 4, 8], nu = 0.4 }
eps = [0.05]
algs = ["active-dd-small"]
"#,
    );
    let b = &f[&("labels_vs_k".to_string(), "agnostic-lb|active-dd-small|nu=0.4|eps=0.05".to_string())];
    let exp: f64 = b["loglog_exponent"].parse().unwrap();
    let b_ok = (0.7..=1.3).contains(&exp);

    // (c) naive passive baseline against the active learner
    let (cells, _) = sweep(
        r#"
trials = 50
seed = 0
delta = 0.1
[[cells]]
family = "prop1"
params = { k = 8 }
eps = [0.05]
algs = ["active-dd-large", "passive-naive"]
"#,
    );
    let active = cells.iter().find(|c| c.alg == "active-dd-large").unwrap();
    let naive = cells.iter().find(|c| c.alg == "passive-naive").unwrap();
    let c_ok = naive.mean_labels > active.mean_labels && active.success_rate >= 0.9 && naive.success_rate >= 0.9;

    let detail = format!(
        "(a) r2={r2:.3}, (b) exponent={exp:.3}, (c) naive {:.0} vs active {:.0} at {:.2}/{:.2}",
        naive.mean_labels, active.mean_labels, naive.success_rate, active.success_rate
    );
    if a_ok && b_ok && c_ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// 8 ----------------------------------------------------------------------

fn separation() -> Outcome {
    let mut notes = Vec::new();
    for theta in [2, 3] {
        let rep = verify_separation(2, theta, &[], 0.1).map_err(|e| e.to_string())?;
        check(
            rep.exhaustive == Some(true),
            format!("theta={theta}: exhaustive {:?}, witness {:?}", rep.exhaustive, rep.witness),
        )?;
        check(rep.agree() == Some(true), format!("theta={theta}: analytic {}", rep.analytic))?;
        notes.push(format!("theta={theta}: {} labelings", rep.labelings_checked));
    }
    let grid = [0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95];
    let mut worst = 0.0f64;
    let mut points = 0;
    for &p in &grid {
        for &q in &grid {
            let diff = (kl_bernoulli(p, q).unwrap() - kl_bernoulli_integral(p, q).unwrap()).abs();
            worst = worst.max(diff);
            points += 1;
        }
    }
    check(points >= 20 && worst <= 1e-9, format!("KL gap {worst:e}"))?;
    notes.push(format!("KL {points} points, max gap {worst:.1e}"));
    Ok(notes.join(", "))
}

// 9 ----------------------------------------------------------------------

fn patterns(class: &HypothesisClass, pts: &[usize]) -> usize {
    class
        .hypotheses()
        .iter()
        .map(|h| pts.iter().map(|&x| h.predict(x)).collect::<Vec<_>>())
        .collect::<HashSet<_>>()
        .len()
}

fn subsets(m: usize) -> impl Iterator<Item = Vec<usize>> {
    (1u32..1 << m).map(move |s| (0..m).filter(|&x| s >> x & 1 == 1).collect())
}

fn brute_vc(class: &HypothesisClass) -> usize {
    subsets(class.num_points()).filter(|p| patterns(class, p) == 1 << p.len()).map(|p| p.len()).max().unwrap_or(0)
}

fn brute_star(class: &HypothesisClass, hstar: &Hypothesis) -> usize {
    subsets(class.num_points())
        .filter(|pts| {
            pts.iter().all(|&xi| {
                class.hypotheses().iter().any(|h| pts.iter().all(|&x| (h.predict(x) != hstar.predict(x)) == (x == xi)))
            })
        })
        .map(|p| p.len())
        .max()
        .unwrap_or(0)
}

fn brute_nu(inst: &MdlInstance) -> f64 {
    inst.class()
        .hypotheses()
        .iter()
        .map(|h| {
            inst.distributions()
                .iter()
                .map(|d| (0..d.num_points()).map(|x| d.joint(x, -h.predict(x))).sum::<f64>())
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

fn complexity_oracles() -> Outcome {
    let mut checked = 0;
    for s in 0..50u64 {
        let m = 2 + (s as usize % 7);
        let h = (1 + (s as usize * 7) % 16).min(1 << m);
        let k = 1 + s as usize % 3;
        let inst = gen_random(m, h, k, s % 2 == 0, 1000 + s).unwrap();
        let class = inst.class();
        let vc = vc_dimension(class, m).unwrap();
        check(vc == VcDimension::Exact(brute_vc(class)), format!("seed {s}: vc {vc:?} vs {}", brute_vc(class)))?;
        for hs in class.hypotheses() {
            let st = star_number(class, hs, 128).unwrap();
            check(!st.lower_bound_only && st.value == brute_star(class, hs), format!("seed {s}: star {}", st.value))?;
        }
        let nu = best_nu(&inst).1;
        check((nu - brute_nu(&inst)).abs() <= 1e-12, format!("seed {s}: nu {nu} vs {}", brute_nu(&inst)))?;
        let by_worst = class.hypotheses().iter().map(|h| worst_loss(h, &inst).unwrap()).fold(f64::INFINITY, f64::min);
        check(by_worst == nu, format!("seed {s}: worst_loss minimum {by_worst} vs {nu}"))?;
        checked += 1;
    }
    Ok(format!("{checked} random instances"))
}

// 10 ---------------------------------------------------------------------

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    let cases = [
        ("prop1", FamilySpec::Prop1 { k: 4, eps: 0.1 }, Algorithm::ActiveDdLarge, 0.1),
        ("star", FamilySpec::StarLb { k: 2, theta: 4, i: 1, j: 2 }, Algorithm::ActiveDf, 0.1),
        ("agn", FamilySpec::AgnosticLb { k: 2, nu: 0.4, eps: 0.05, flipped: None }, Algorithm::ActiveDdSmall, 0.05),
        ("agn", FamilySpec::AgnosticLb { k: 2, nu: 0.4, eps: 0.05, flipped: None }, Algorithm::PassiveNaive, 0.05),
    ];
    for (name, spec, alg, eps) in cases {
        let path = dir.path().join(format!("{name}.json"));
        write_instance(&path, &spec.generate().unwrap(), Some(family_metadata(&spec))).map_err(|e| e.to_string())?;
        let cfg = RunConfig {
            instance: path.clone(),
            alg,
            eps,
            delta: DELTA,
            trials: 5,
            seed: 42,
            knobs: Knobs::desk(),
            trace: None,
            timing: false,
            workers: None,
        };
        let a = records_to_csv(&run_trials(&cfg).map_err(|e| e.to_string())?);
        let b = records_to_csv(&run_trials(&cfg).map_err(|e| e.to_string())?);
        check(a == b, format!("{name}/{alg}: library records differ"))?;

        let cli = |out: &str| -> Result<Vec<u8>, String> {
            let target = dir.path().join(out);
            let status = Command::new(env!("CARGO_BIN_EXE_amdl"))
                .args(["run", "--instance"])
                .arg(&path)
                .args(["--alg", alg.tag(), "--eps", &eps.to_string(), "--trials", "5", "--seed", "42", "--out"])
                .arg(&target)
                .status()
                .map_err(|e| e.to_string())?;
            check(status.success(), format!("amdl run exited with {status}"))?;
            std::fs::read(&target).map_err(|e| e.to_string())
        };
        let (x, y) = (cli(&format!("{name}-{alg}-1.csv"))?, cli(&format!("{name}-{alg}-2.csv"))?);
        check(x == y, format!("{name}/{alg}: CLI output differs"))?;
        check(x == a.as_bytes(), format!("{name}/{alg}: CLI and library disagree"))?;
        notes.push(format!("{name}/{alg}"));
    }
    Ok(format!("identical bytes for {}", notes.join(", ")))
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("agnostic loss table", agnostic_table),
        ("prop1 disagreement coefficients", prop1_coefficients),
        ("sampler distributions", samplers),
        ("PAC success suites", pac_suites),
        ("version-space invariants", epoch_invariants),
        ("RPU reliability", rpu_reliability),
        ("scaling shapes", scaling),
        ("lower-bound separation", separation),
        ("complexity oracles", complexity_oracles),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({detail})", n + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {}: FAIL {name} ({detail})", n + 1);
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
