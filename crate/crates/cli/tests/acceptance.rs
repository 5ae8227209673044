//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints one PASS/FAIL line; pass criterion numbers as arguments
//! to run a subset (`cargo test --test acceptance -- 3 6`).

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use plstar::adaptive::{OracleChoice, Randomization};
use plstar::eq::{DepthPolicy, EquivalenceOracle};
use plstar::experiment::{CompareRow, Experiment};
use plstar::learn::{lstar_learn, LearnerConfig, LearningMetrics, MembershipOracle, TableInit};
use plstar::mealy::{equivalent, MealyBuilder, MealyMachine};
use plstar::rng::Xoshiro256;
use plstar::sampling::{chvatal_sample, SamplingSpec};
use plstar::spl::{FeatureExpr, FeatureModel, ProductLine, Variability};
use plstar::stats;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

const SEED: u64 = 42;
const COMPARE_ORDERS: usize = 20;
const CORRELATION_ORDERS: usize = 200;

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/vending")
}

fn experiment() -> &'static Experiment {
    static EXP: OnceLock<Experiment> = OnceLock::new();
    EXP.get_or_init(|| {
        let dir = fixture();
        let line = ProductLine::load_components(&dir.join("feature_model.json"), &dir.join("components"))
            .expect("fixture loads");
        let spec = SamplingSpec::for_model(&line.model, 3).unwrap();
        let sample = chvatal_sample(&line.model, &spec).unwrap();
        let mut exp = Experiment::new(&line, sample).unwrap();
        exp.oracle = OracleChoice::WpAuto { min_depth: 2 };
        exp.randomize = Randomization { alphabet: true, prefixes: true, suffixes: true };
        exp.seed = SEED;
        exp.verify = true;
        exp
    })
}

/// The shared 20-order comparison and how long it took.
fn comparison() -> &'static Result<(Vec<CompareRow>, Duration), String> {
    static ROWS: OnceLock<Result<(Vec<CompareRow>, Duration), String>> = OnceLock::new();
    ROWS.get_or_init(|| {
        let t = Instant::now();
        let exp = experiment();
        let orders = exp.orders(COMPARE_ORDERS).map_err(|e| e.to_string())?;
        let rows = exp.compare(&orders).map_err(|e| e.to_string())?;
        Ok((rows, t.elapsed()))
    })
}

fn rows() -> Result<&'static [CompareRow], String> {
    comparison().as_ref().map(|(r, _)| r.as_slice()).map_err(Clone::clone)
}

fn random_machine(rng: &mut Xoshiro256, states: usize, inputs: usize, outputs: usize) -> MealyMachine {
    let names: Vec<String> = (0..inputs).map(|i| format!("i{i}")).collect();
    let mut b = MealyBuilder::new(names.clone()).unwrap();
    b.initial("s0");
    for s in 0..states {
        for a in &names {
            let to = rng.index(states);
            let out = rng.index(outputs);
            b.transition(&format!("s{s}"), a, &format!("o{out}"), &format!("s{to}")).unwrap();
        }
    }
    b.build().unwrap().trim()
}

fn learn(sul: &MealyMachine, mut eq: EquivalenceOracle<'_>) -> Result<(MealyMachine, u64), String> {
    let mut mq = MembershipOracle::new(sul);
    let out = lstar_learn(&mut mq, &mut eq, &TableInit::classic(sul.num_inputs()), LearnerConfig::default())
        .map_err(|e| e.to_string())?;
    Ok((out.model, out.metrics.rounds))
}

fn same(a: &MealyMachine, b: &MealyMachine) -> bool {
    equivalent(a, b).map(|e| e.is_equivalent()).unwrap_or(false)
}

fn c1_learning_correctness() -> Check {
    let t = Instant::now();
    let mut rng = Xoshiro256::substream(SEED, "acceptance-machines", &[]);
    for i in 0..200 {
        let states = 2 + rng.index(9);
        let inputs = 2 + rng.index(3);
        let outputs = 2 + rng.index(2);
        let sul = random_machine(&mut rng, states, inputs, outputs);
        let (h, rounds) = learn(&sul, EquivalenceOracle::perfect(&sul))?;
        ensure!(same(&h, &sul), "machine {i}: perfect-oracle result differs from the SUL");
        ensure!(
            rounds as usize <= sul.num_states(),
            "machine {i}: {rounds} rounds for {} states",
            sul.num_states()
        );
        let (h, _) = learn(&sul, EquivalenceOracle::wp(&sul, DepthPolicy::auto_for(&sul)))?;
        ensure!(same(&h, &sul), "machine {i}: Wp-oracle result differs from the SUL");
    }
    let el = t.elapsed();
    ensure!(el < Duration::from_secs(60), "took {el:?}");
    Ok(format!("200 machines, {:.1}s", el.as_secs_f64()))
}

fn c2_adaptive_safety() -> Check {
    let exp = experiment();
    let dir = fixture();
    let line = ProductLine::load_components(&dir.join("feature_model.json"), &dir.join("components"))
        .map_err(|e| e.to_string())?;
    let non_mandatory = line.model.non_mandatory_features().map_err(|e| e.to_string())?.len();
    ensure!(non_mandatory == 6, "{non_mandatory} non-mandatory features");
    ensure!(exp.suls.len() >= 10, "sample has {} products", exp.suls.len());
    let (lo, hi) = exp
        .suls
        .iter()
        .map(MealyMachine::num_states)
        .fold((usize::MAX, 0), |(lo, hi), n| (lo.min(n), hi.max(n)));
    ensure!(lo >= 8 && hi <= 60, "product sizes {lo}..{hi}");
    // compare() verifies every learned model against its product and fails otherwise
    let (rows, el) = comparison().as_ref().map_err(Clone::clone)?;
    ensure!(rows.len() == COMPARE_ORDERS, "{} orders", rows.len());
    ensure!(*el < Duration::from_secs(600), "took {el:?}");
    Ok(format!(
        "{} products ({lo}-{hi} states), {} orders all correct, {:.1}s",
        exp.suls.len(),
        rows.len(),
        el.as_secs_f64()
    ))
}

fn column(rows: &[CompareRow], f: impl Fn(&CompareRow) -> u64) -> Vec<f64> {
    rows.iter().map(|r| f(r) as f64).collect()
}

fn c3_rounds() -> Check {
    let rows = rows()?;
    let better = rows.iter().filter(|r| r.pl.rounds < r.na.rounds).count();
    ensure!(
        better * 10 >= rows.len() * 9,
        "PL* needs fewer rounds on only {better}/{} orders",
        rows.len()
    );
    let test = stats::paired_t_one_sided(&column(rows, |r| r.pl.rounds), &column(rows, |r| r.na.rounds))
        .map_err(|e| e.to_string())?;
    ensure!(test.p_value < 0.05, "paired p = {}", test.p_value);
    Ok(format!("{better}/{} orders better, p = {:.2e}", rows.len(), test.p_value))
}

fn c4_resets_symbols() -> Check {
    let rows = rows()?;
    let mut detail = Vec::new();
    for (name, pl, na) in [
        ("resets", column(rows, |r| r.pl.total_resets()), column(rows, |r| r.na.total_resets())),
        ("symbols", column(rows, |r| r.pl.total_symbols()), column(rows, |r| r.na.total_symbols())),
    ] {
        let (mp, mn) = (stats::mean(&pl).unwrap(), stats::mean(&na).unwrap());
        ensure!(mp < mn, "mean total {name}: PL* {mp} vs non-adaptive {mn}");
        let test = stats::paired_t_one_sided(&pl, &na).map_err(|e| e.to_string())?;
        ensure!(test.p_value < 0.05, "total {name}: p = {}", test.p_value);
        detail.push(format!(
            "{name} {:+.1}% p = {:.2e}",
            stats::improvement_percentage(mp, mn).unwrap(),
            test.p_value
        ));
    }
    Ok(detail.join(", "))
}

fn c5_eq_dominance() -> Check {
    let rows = rows()?;
    let mut detail = Vec::new();
    let pl = rows.iter().map(|r| r.pl).sum::<LearningMetrics>();
    let na = rows.iter().map(|r| r.na).sum::<LearningMetrics>();
    for (arm, m) in [("PL*", pl), ("non-adaptive", na)] {
        let (eq, mq) = (m.eq_resets, m.mq_resets);
        ensure!(eq >= 10 * mq, "{arm}: eq resets {eq} < 10 x mq resets {mq}");
        detail.push(format!("{arm} {:.1}x", eq as f64 / mq as f64));
    }
    Ok(detail.join(", "))
}

fn c6_correlation() -> Check {
    let exp = experiment();
    let orders = exp.orders(CORRELATION_ORDERS).map_err(|e| e.to_string())?;
    let runs = exp.plstar_runs(&orders).map_err(|e| e.to_string())?;
    let d: Vec<f64> = orders.iter().map(|o| exp.score(o)).collect();
    let resets: Vec<f64> = runs.iter().map(|m| m.total_resets() as f64).collect();
    let symbols: Vec<f64> = runs.iter().map(|m| m.total_symbols() as f64).collect();
    let r = stats::pearson(&d, &resets).map_err(|e| e.to_string())?;
    let s = stats::pearson(&d, &symbols).map_err(|e| e.to_string())?;
    let detail = format!(
        "{} orders, resets r = {:.3} p = {:.2e}, symbols r = {:.3} p = {:.2e}",
        orders.len(),
        r.statistic,
        r.p_value,
        s.statistic,
        s.p_value
    );
    ensure!(r.statistic < 0.0 && r.p_value < 0.05, "{detail}");
    ensure!(s.statistic < 0.0, "{detail}");
    Ok(detail)
}

/// `m` with one transition changed; with `extra`, that transition instead
/// leads to a copy of its target whose behaviour differs in one output.
fn mutant(m: &MealyMachine, rng: &mut Xoshiro256, extra: bool) -> MealyMachine {
    let n = m.num_states();
    let mut b = MealyBuilder::new(m.inputs().to_vec()).unwrap();
    b.initial(&format!("s{}", m.initial()));
    let (ms, ma) = (rng.index(n), rng.index(m.num_inputs()) as u32);
    let flip = |o: &str| if o == "o0" { "o1" } else { "o0" };
    for s in 0..n {
        for a in 0..m.num_inputs() as u32 {
            let (to, out) = m.step(s, a);
            let (mut to, mut out) = (format!("s{to}"), m.output_name(out).to_string());
            if (s, a) == (ms, ma) {
                if extra {
                    to = "copy".into();
                } else if rng.index(2) == 0 {
                    out = flip(&out).to_string();
                } else {
                    to = format!("s{}", rng.index(n));
                }
            }
            b.transition(&format!("s{s}"), &m.inputs()[a as usize], &out, &to).unwrap();
        }
    }
    if extra {
        let (target, _) = m.step(ms, ma);
        let changed = rng.index(m.num_inputs()) as u32;
        for a in 0..m.num_inputs() as u32 {
            let (to, out) = m.step(target, a);
            let out = m.output_name(out);
            let out = if a == changed { flip(out) } else { out };
            b.transition("copy", &m.inputs()[a as usize], out, &format!("s{to}")).unwrap();
        }
    }
    b.build().unwrap().trim()
}

fn c7_wp_completeness() -> Check {
    let t = Instant::now();
    let mut rng = Xoshiro256::substream(SEED, "acceptance-wp-pool", &[]);
    let mut pairs = 0;
    let mut found = 0;
    for inputs in 1..=3 {
        // hypotheses come out of a closed, consistent table, so they are
        // minimal; keep the pool that way
        let mut pool: Vec<MealyMachine> = Vec::new();
        while pool.len() < 24 {
            let states = 1 + rng.index(6);
            let raw = random_machine(&mut rng, states, inputs, 2);
            let (m, _) = learn(&raw, EquivalenceOracle::perfect(&raw))?;
            pool.push(m);
        }
        let mut suls: Vec<MealyMachine> = (0..24)
            .map(|_| {
                let states = 1 + rng.index(6);
                random_machine(&mut rng, states, inputs, 2)
            })
            .collect();
        for m in &pool {
            for extra in [false, false, true, true] {
                if !extra || m.num_states() < 6 {
                    suls.push(mutant(m, &mut rng, extra));
                }
            }
        }
        for h in &pool {
            for s in suls.iter().chain(&pool) {
                let gap = s.num_states().saturating_sub(h.num_states());
                for depth in [gap, gap + 1] {
                    let mut eq = EquivalenceOracle::wp(s, DepthPolicy::Fixed(depth));
                    let cex = eq.find_counterexample(h).map_err(|e| e.to_string())?;
                    let differs = !same(h, s);
                    ensure!(
                        cex.is_some() == differs,
                        "depth {depth}: Wp says {} but machines are {}",
                        if cex.is_some() { "different" } else { "equal" },
                        if differs { "different" } else { "equivalent" }
                    );
                    if let Some(c) = cex {
                        let word = s.decode(&c.input);
                        ensure!(h.run(&word).unwrap() != s.run(&word).unwrap(), "spurious counterexample {word:?}");
                    }
                    pairs += 1;
                    found += usize::from(differs);
                }
            }
        }
    }
    let el = t.elapsed();
    ensure!(el < Duration::from_secs(120), "took {el:?}");
    Ok(format!("{pairs} checks ({found} inequivalent), {:.1}s", el.as_secs_f64()))
}

fn random_feature_model(rng: &mut Xoshiro256) -> FeatureModel {
    loop {
        let target = 5 + rng.index(8);
        let mut spec: Vec<(String, Option<String>, Option<Variability>)> = vec![("f0".into(), None, None)];
        let mut groups = 0;
        while spec.len() < target {
            let parent = spec[rng.index(spec.len())].0.clone();
            let roll = rng.index(10);
            if roll < 3 && spec.len() + 2 <= target {
                let g = format!("g{groups}");
                groups += 1;
                let size = 2 + rng.index((target - spec.len()).min(3) - 1);
                for _ in 0..size {
                    let kind = if roll == 0 { Variability::Or(g.clone()) } else { Variability::Alternative(g.clone()) };
                    spec.push((format!("f{}", spec.len()), Some(parent.clone()), Some(kind)));
                }
            } else {
                let kind = if roll < 5 { Variability::Mandatory } else { Variability::Optional };
                spec.push((format!("f{}", spec.len()), Some(parent), Some(kind)));
            }
        }
        // pre-order: children must follow their parent, which holds by construction
        let mut constraints = Vec::new();
        if rng.index(2) == 0 {
            let a = 1 + rng.index(spec.len() - 1);
            let b = 1 + rng.index(spec.len() - 1);
            if a != b {
                constraints.push(FeatureExpr::parse(&format!("!f{a} | f{b}")).unwrap());
            }
        }
        let Ok(fm) = FeatureModel::from_features(&spec, constraints) else { continue };
        match fm.non_mandatory_features() {
            Ok(nm) if nm.len() >= 3 => return fm,
            _ => continue,
        }
    }
}

fn c8_sampling_coverage() -> Check {
    let mut rng = Xoshiro256::substream(SEED, "acceptance-feature-models", &[]);
    let mut products = 0;
    for m in 0..10 {
        let fm = random_feature_model(&mut rng);
        ensure!(fm.len() <= 12, "model {m} has {} features", fm.len());
        // brute force: every subset of the features, filtered by validity
        let valid: Vec<u64> = (0..1u64 << fm.len())
            .map(plstar::spl::Configuration::from_mask)
            .filter(|c| fm.is_valid(c).unwrap())
            .map(|c| c.mask())
            .collect();
        for t in 1..=3 {
            let spec = SamplingSpec::for_model(&fm, t).map_err(|e| e.to_string())?;
            let sample = chvatal_sample(&fm, &spec).map_err(|e| e.to_string())?;
            let again = chvatal_sample(&fm, &spec).map_err(|e| e.to_string())?;
            ensure!(sample == again, "model {m}, t = {t}: sampler is not deterministic");
            let chosen: Vec<u64> = sample.products().iter().map(|c| c.mask()).collect();
            ensure!(chosen.iter().all(|c| valid.contains(c)), "model {m}, t = {t}: invalid product");
            let u = spec.universe();
            let mut combo: Vec<usize> = (0..t).collect();
            loop {
                let care = combo.iter().fold(0u64, |acc, &i| acc | 1 << u[i]);
                let needed: HashSet<u64> = valid.iter().map(|c| c & care).collect();
                for value in needed {
                    ensure!(
                        chosen.iter().any(|c| c & care == value),
                        "model {m}, t = {t}: tuple care {care:#b} value {value:#b} uncovered"
                    );
                }
                let Some(i) = (0..t).rev().find(|&i| combo[i] != i + u.len() - t) else { break };
                combo[i] += 1;
                for j in i + 1..t {
                    combo[j] = combo[j - 1] + 1;
                }
            }
            products += sample.len();
        }
    }
    Ok(format!("10 models x t = 1..3, {products} sampled products"))
}

fn c9_stats_golden() -> Check {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden/stats_golden.json");
    let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let golden: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let num = |v: &serde_json::Value, k: &str| v[k].as_f64().unwrap();
    let vec = |v: &serde_json::Value| -> Vec<f64> {
        v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
    };
    let datasets = golden["datasets"].as_array().unwrap();
    ensure!(datasets.len() == 5, "{} datasets", datasets.len());
    let mut checked = 0;
    for (i, d) in datasets.iter().enumerate() {
        let (a, b) = (vec(&d["a"]), vec(&d["b"]));
        let (ma, sa) = stats::describe(&a).map_err(|e| e.to_string())?;
        let (mb, sb) = stats::describe(&b).map_err(|e| e.to_string())?;
        let p = stats::paired_t_one_sided(&a, &b).map_err(|e| e.to_string())?;
        let w = stats::unpaired_t_two_sided(&a, &b).map_err(|e| e.to_string())?;
        let r = stats::pearson(&a, &b).map_err(|e| e.to_string())?;
        for (k, got) in [
            ("mean_a", ma),
            ("std_a", sa),
            ("mean_b", mb),
            ("std_b", sb),
            ("paired_t", p.statistic),
            ("paired_p", p.p_value),
            ("welch_t", w.statistic),
            ("welch_p", w.p_value),
            ("welch_df", w.degrees_of_freedom),
            ("pearson_r", r.statistic),
            ("pearson_p", r.p_value),
        ] {
            ensure!((got - num(d, k)).abs() <= 1e-6, "dataset {i} {k}: {got} vs {}", d[k]);
            checked += 1;
        }
    }
    let minepump = stats::improvement_percentage(18.005, 30.0).map_err(|e| e.to_string())?;
    ensure!((minepump - 39.983_333_333).abs() < 1e-6, "improvement {minepump}");
    Ok(format!("{checked} values within 1e-6, improvement {minepump:.4}%"))
}

fn c10_determinism() -> Check {
    let bin = env!("CARGO_BIN_EXE_plstar");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let status = Command::new(bin)
            .args(["compare", "--orders", "3", "--seed", "7", "--model"])
            .arg(fixture())
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(status.status.success(), "compare failed: {}", String::from_utf8_lossy(&status.stderr));
        outputs.push(std::fs::read(out.join("compare.csv")).map_err(|e| e.to_string())?);
    }
    ensure!(outputs[0] == outputs[1], "compare.csv differs between runs");
    Ok(format!("{} identical bytes", outputs[0].len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("learning correctness", c1_learning_correctness),
        ("adaptive safety", c2_adaptive_safety),
        ("fewer rounds", c3_rounds),
        ("fewer resets and symbols", c4_resets_symbols),
        ("equivalence queries dominate", c5_eq_dominance),
        ("D correlates negatively with cost", c6_correlation),
        ("Wp completeness", c7_wp_completeness),
        ("sampling coverage", c8_sampling_coverage),
        ("statistics golden values", c9_stats_golden),
        ("determinism", c10_determinism),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let result = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("criterion {n:2} {name}: PASS ({detail})"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:2} {name}: FAIL ({why})");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
