//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each, and
//! exits non-zero if any fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{city, small_config, spiked_cohort, traveling_wave};
use wavecast::eval::{mase, seasonal_naive, EvalReport, Stratum};
use wavecast::experiment::{run_cohort, run_experiment, write_outputs, ExperimentConfig, RunPlan};
use wavecast::learn::{
    fit, fit_gradient_boosting, fit_tree, grid_search, Algorithm, FeatureSubset, HyperParams, Node, SplitCriterion,
};
use wavecast::output::{FORECASTS_HEADER, NEIGHBORS_HEADER, PLOTDATA_HEADER, REPORTS_HEADER, SUMMARY_HEADER};
use wavecast::preprocess::{flag_anomalous, split_and_normalize, SupervisedDataset};
use wavecast::similarity::{dtw_distance, Criterion, SimilarityOptions};

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("took {:.2}s, limit {limit_s}s", elapsed.as_secs_f64())
    })
}

// 1 ---------------------------------------------------------------------------

fn naive_mase_is_one() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let m = rng.random_range(1..=4);
        let len = rng.random_range(m + 3..60);
        let series: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..100.0)).collect();
        let history = &series[..m];
        let actuals = &series[m..];
        let indices: Vec<usize> = (m..len).collect();
        let naive = seasonal_naive(&series, m, &indices).map_err(|e| e.to_string())?;
        let base = mase(&naive, actuals, history, m).map_err(|e| e.to_string())?;
        worst = worst.max((base - 1.0).abs());
        for c in [1e-3, 1.0, 1e4] {
            let scale = |v: &[f64]| v.iter().map(|x| x * c).collect::<Vec<_>>();
            let preds: Vec<f64> = actuals.iter().map(|a| a + rng.random_range(-5.0..5.0)).collect();
            let plain = mase(&preds, actuals, history, m).map_err(|e| e.to_string())?;
            let scaled = mase(&scale(&preds), &scale(actuals), &scale(history), m).map_err(|e| e.to_string())?;
            ensure((plain - scaled).abs() <= 1e-12, || format!("c={c}: {plain} vs {scaled}"))?;
        }
    }
    ensure(worst <= 1e-12, || format!("naive MASE off by {worst:e}"))?;
    within(start.elapsed(), 1.0)?;
    Ok(format!("max |MASE - 1| = {worst:e}"))
}

// 2 ---------------------------------------------------------------------------

fn mase_hand_check() -> Outcome {
    let v = mase(&[3.0, 4.0, 5.0], &[2.0, 4.0, 6.0], &[1.0], 1).map_err(|e| e.to_string())?;
    ensure(v == 0.4, || format!("MASE = {v:?}"))?;
    Ok(format!("MASE = {v}"))
}

// 3 ---------------------------------------------------------------------------

/// Minimum cost over every monotone warping path, by explicit enumeration.
fn brute_force_dtw(p: &[f64], q: &[f64]) -> f64 {
    fn walk(p: &[f64], q: &[f64], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + (p[i] - q[j]).abs();
        if i + 1 == p.len() && j + 1 == q.len() {
            *best = best.min(acc);
            return;
        }
        if i + 1 < p.len() {
            walk(p, q, i + 1, j, acc, best);
        }
        if j + 1 < q.len() {
            walk(p, q, i, j + 1, acc, best);
        }
        if i + 1 < p.len() && j + 1 < q.len() {
            walk(p, q, i + 1, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(p, q, 0, 0, 0.0, &mut best);
    best
}

fn dtw_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let series = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let len = rng.random_range(1..=6);
        (0..len).map(|_| rng.random_range(0..=2) as f64).collect()
    };
    let pairs = 600;
    for _ in 0..pairs {
        let (p, q) = (series(&mut rng), series(&mut rng));
        let fast = dtw_distance(&p, &q).map_err(|e| e.to_string())?;
        let slow = brute_force_dtw(&p, &q);
        ensure(fast == slow, || format!("{p:?} vs {q:?}: {fast} != {slow}"))?;
    }
    within(start.elapsed(), 10.0)?;
    Ok(format!("{pairs} pairs agree"))
}

// 4 ---------------------------------------------------------------------------

fn exact_params(depth: Option<usize>) -> HyperParams {
    HyperParams {
        max_depth: depth,
        bootstrap: false,
        feature_subset: FeatureSubset::All,
        ..HyperParams::new(Algorithm::RandomForest, 1)
    }
}

fn unique_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    while rows.len() < n {
        let r: Vec<f64> = (0..d).map(|_| rng.random_range(0..8) as f64).collect();
        if !rows.contains(&r) {
            rows.push(r);
        }
    }
    rows
}

fn median_oracle(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Leaf reached by `row`, identified by its path bits.
fn leaf_path(node: &Node, row: &[f64]) -> (Vec<bool>, f64) {
    let mut path = Vec::new();
    let mut node = node;
    loop {
        match node {
            Node::Leaf { value } => return (path, *value),
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let go_left = row[*feature] <= *threshold;
                path.push(go_left);
                node = if go_left { left } else { right };
            }
        }
    }
}

fn tree_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);

    // (a) exact interpolation
    for _ in 0..200 {
        let n = rng.random_range(1..=8);
        let d = rng.random_range(1..=3);
        let x = unique_rows(&mut rng, n, d);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
        let ds = SupervisedDataset::from_rows(x.clone(), y.clone()).map_err(|e| e.to_string())?;
        let model = fit(&ds, &exact_params(None), rng.random()).map_err(|e| e.to_string())?;
        let pred = model.predict(&x).map_err(|e| e.to_string())?;
        let train_mae: f64 = pred.iter().zip(&y).map(|(p, t)| (p - t).abs()).sum::<f64>() / n as f64;
        ensure(train_mae == 0.0, || format!("(a) training MAE {train_mae} on {x:?}"))?;
    }

    // (b) boosting training MSE never increases
    let mut worst_rise = f64::NEG_INFINITY;
    for _ in 0..20 {
        let n = rng.random_range(6..=20);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random_range(0.0..10.0)).collect()).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * r[1] - r[2] + rng.random_range(-1.0..1.0)).collect();
        let ds = SupervisedDataset::from_rows(x.clone(), y.clone()).map_err(|e| e.to_string())?;
        let params = HyperParams {
            max_depth: Some(rng.random_range(1..=3)),
            learning_rate: [0.01, 0.1, 0.5, 1.0][rng.random_range(0..4)],
            feature_subset: FeatureSubset::All,
            ..HyperParams::new(Algorithm::GradientBoosting, 30)
        };
        let model = fit_gradient_boosting(&ds, &params, rng.random()).map_err(|e| e.to_string())?;
        let mse: Vec<f64> = model
            .staged_predict(&x)
            .iter()
            .map(|p| p.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64)
            .collect();
        for w in mse.windows(2) {
            let slack = 1e-12 * w[0].max(1.0);
            worst_rise = worst_rise.max(w[1] - w[0]);
            ensure(w[1] <= w[0] + slack, || format!("(b) MSE rose {} -> {}", w[0], w[1]))?;
        }
    }

    // (c) MAE leaves hold the median of the rows that reach them
    for _ in 0..200 {
        let n = rng.random_range(1..=8);
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(0..3) as f64]).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0..20) as f64).collect();
        let ds = SupervisedDataset::from_rows(x.clone(), y.clone()).map_err(|e| e.to_string())?;
        let depth = [Some(1), Some(2), None][rng.random_range(0..3)];
        let params = HyperParams {
            split_criterion: SplitCriterion::Mae,
            ..exact_params(depth)
        };
        let tree = fit_tree(&ds, &params, &mut rng).map_err(|e| e.to_string())?;
        let mut groups: BTreeMap<Vec<bool>, (f64, Vec<f64>)> = BTreeMap::new();
        for (row, t) in x.iter().zip(&y) {
            let (path, value) = leaf_path(&tree.root, row);
            groups.entry(path).or_insert((value, Vec::new())).1.push(*t);
        }
        for (value, targets) in groups.values() {
            let m = median_oracle(targets);
            ensure(*value == m, || format!("(c) leaf {value} but median of {targets:?} is {m}"))?;
        }
    }
    Ok(format!("(a) 200 exact fits, (b) largest stage-to-stage MSE change {worst_rise:e}, (c) 200 trees"))
}

// 5 ---------------------------------------------------------------------------

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let synth = traveling_wave(6, 80, 20, 0.1, 5);
    synth.write_csvs(dir.path());
    let text = small_config(&synth, 11);
    let mut bytes = Vec::new();
    for jobs in [1, 4] {
        let mut config = ExperimentConfig::from_toml(&text, dir.path()).map_err(|e| e.to_string())?;
        config.jobs = jobs;
        config.out = dir.path().join(format!("out{jobs}"));
        run_experiment(&config).map_err(|e| e.to_string())?;
        let path = config.out.join(&synth.config.disease).join("reports.csv");
        bytes.push(fs::read(&path).map_err(|e| e.to_string())?);
    }
    ensure(bytes[0] == bytes[1], || "reports.csv differs between --jobs 1 and --jobs 4".into())?;
    let rows = bytes[0].iter().filter(|&&b| b == b'\n').count() - 1;
    Ok(format!("{rows} report rows byte-identical"))
}

// 6 ---------------------------------------------------------------------------

fn wave_plan(seed: u64) -> RunPlan {
    let grid = vec![
        HyperParams {
            max_depth: Some(4),
            ..HyperParams::new(Algorithm::RandomForest, 25)
        },
        HyperParams::new(Algorithm::RandomForest, 25),
    ];
    RunPlan {
        criteria: vec![Criterion::Geographic],
        k_values: vec![3],
        algorithms: vec![Algorithm::RandomForest],
        grids: BTreeMap::from([(Algorithm::RandomForest, grid)]),
        seed,
        similarity: SimilarityOptions::new(common::GDP_YEARS),
        trace: None,
    }
}

fn mean_test_mase(reports: &[EvalReport], criterion: Criterion, k: usize) -> Result<f64, String> {
    let values: Vec<f64> = reports
        .iter()
        .filter(|r| r.criterion == criterion && r.k_neighbors == k)
        .map(|r| r.test_mase.ok_or_else(|| format!("undefined MASE for {}", r.city)))
        .collect::<Result<_, _>>()?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

const WAVE_SEEDS: [u64; 5] = [101, 202, 303, 404, 505];

fn traveling_wave_gain() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    for seed in WAVE_SEEDS {
        let synth = traveling_wave(20, 150, 30, 0.1, seed);
        let run = run_cohort(&synth.cohort(), &synth.config, &wave_plan(seed)).map_err(|e| e.to_string())?;
        ensure(run.failures.is_empty(), || format!("seed {seed}: {:?}", run.failures))?;
        let base = mean_test_mase(&run.reports, Criterion::None, 0)?;
        let geo = mean_test_mase(&run.reports, Criterion::Geographic, 3)?;
        let gain = 1.0 - geo / base;
        parts.push(format!("{seed}: {base:.3} -> {geo:.3} ({:.1}%)", 100.0 * gain));
        ensure(geo < base && gain >= 0.05, || {
            format!("seed {seed}: baseline {base:.4}, geographic k=3 {geo:.4}")
        })?;
    }
    within(start.elapsed(), 60.0)?;
    Ok(format!("{} in {:.1}s", parts.join(", "), start.elapsed().as_secs_f64()))
}

// 7 ---------------------------------------------------------------------------

fn anomaly_strata() -> Outcome {
    let spiked = [2, 5, 8];
    let synth = spiked_cohort(10, &spiked, 7);
    let cohort = synth.cohort();
    for i in 0..10 {
        let split = split_and_normalize(&cohort.series[&city(i)], &synth.config).map_err(|e| e.to_string())?;
        let flagged = flag_anomalous(&split.train, &split.test, 4.0).map_err(|e| e.to_string())?;
        ensure(flagged == spiked.contains(&i), || format!("city {i} flagged = {flagged}"))?;
    }

    let mut plan = wave_plan(7);
    plan.criteria.clear();
    let run = run_cohort(&cohort, &synth.config, &plan).map_err(|e| e.to_string())?;
    let anomalous: Vec<String> = run.reports.iter().filter(|r| r.anomalous).map(|r| r.city.to_string()).collect();
    ensure(anomalous == ["C02", "C05", "C08"], || format!("reports flag {anomalous:?}"))?;
    let n = |stratum| {
        run.summary
            .iter()
            .find(|r| r.criterion == Criterion::None && r.stratum == stratum)
            .map(|r| r.n_cities)
    };
    ensure(n(Stratum::BelowThreshold) == Some(7) && n(Stratum::All) == Some(10), || {
        format!("strata sizes {:?} / {:?}", n(Stratum::BelowThreshold), n(Stratum::All))
    })?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_outputs(&run, dir.path(), false, false).map_err(|e| e.to_string())?;
    let summary = fs::read_to_string(dir.path().join("summary.csv")).map_err(|e| e.to_string())?;
    let strata: Vec<(String, String)> = summary
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[4].to_string(), f[9].to_string())
        })
        .collect();
    ensure(
        strata.contains(&("z<4".into(), "7".into())) && strata.contains(&("all".into(), "10".into())),
        || format!("summary.csv strata {strata:?}"),
    )?;
    Ok("flags C02, C05, C08; strata z<4 n=7, all n=10".into())
}

// 8 ---------------------------------------------------------------------------

fn grid_contract() -> Outcome {
    // two regimes repeated; CV MAEs worked out by hand:
    // unlimited depth 0, depth 1 (2.5 + 1.25 + 2.5 + 2.5) / 4
    let x: Vec<Vec<f64>> = (0..12).map(|i| vec![(i % 3) as f64]).collect();
    let y: Vec<f64> = x.iter().map(|r| 5.0 * r[0]).collect();
    let ds = SupervisedDataset::from_rows(x, y).map_err(|e| e.to_string())?;
    let deep = exact_params(None);
    let stump = exact_params(Some(1));
    let twin = HyperParams {
        n_trees: 2,
        ..deep.clone()
    };

    let (best, score) = grid_search(&ds, &[stump.clone(), deep.clone()], 0).map_err(|e| e.to_string())?;
    ensure(best == deep && score == 0.0, || format!("picked {best} with {score}"))?;
    let (best, score) = grid_search(&ds, std::slice::from_ref(&stump), 0).map_err(|e| e.to_string())?;
    ensure(best == stump && score == 2.1875, || format!("stump CV MAE {score}"))?;
    for grid in [[deep.clone(), twin.clone()], [twin.clone(), deep.clone()]] {
        let (best, _) = grid_search(&ds, &grid, 0).map_err(|e| e.to_string())?;
        ensure(best == grid[0], || format!("tie went to {best}"))?;
    }
    Ok("unlimited depth wins (0 vs 2.1875); ties keep grid order".into())
}

// 9 ---------------------------------------------------------------------------

fn first_line(path: &Path) -> Result<String, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(text.lines().next().unwrap_or_default().to_string())
}

fn format_compatibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let synth = traveling_wave(5, 78, 26, 0.1, 9);
    synth.write_csvs(dir.path());
    fs::write(dir.path().join("config.toml"), small_config(&synth, 3)).map_err(|e| e.to_string())?;

    let status = Command::new(env!("CARGO_BIN_EXE_wavecast"))
        .args(["run", "--config"])
        .arg(dir.path().join("config.toml"))
        .args(["--jobs", "2"])
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?
        .status;
    ensure(status.success(), || format!("wavecast run exited with {status}"))?;

    let out = dir.path().join("out").join(&synth.config.disease);
    for (file, header) in [
        ("reports.csv", REPORTS_HEADER),
        ("summary.csv", SUMMARY_HEADER),
        ("plotdata.csv", PLOTDATA_HEADER),
        ("neighbors.csv", NEIGHBORS_HEADER),
        ("forecasts.csv", FORECASTS_HEADER),
    ] {
        let got = first_line(&out.join(file))?;
        ensure(got == header, || format!("{file}: header `{got}`"))?;
    }
    ensure(
        REPORTS_HEADER == "city_id,disease,algorithm,criterion,k,anomalous,train_mae,train_mase,test_mae,test_mase,scale,params",
        || "reports header drifted".into(),
    )?;
    Ok("five files with documented headers".into())
}

fn main() {
    let criteria: [Check; 9] = [
        ("metric exactness", naive_mase_is_one),
        ("MASE hand-check", mase_hand_check),
        ("DTW oracle", dtw_oracle),
        ("tree oracles", tree_oracles),
        ("determinism across --jobs", determinism),
        ("traveling-wave gain", traveling_wave_gain),
        ("anomaly stratification", anomaly_strata),
        ("grid-search contract", grid_contract),
        ("format compatibility", format_compatibility),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
