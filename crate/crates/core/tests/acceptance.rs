//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the verdict lines are
//! always printed. Criterion 9 needs a real CASAS corpus and is skipped
//! unless `MRAR_CASAS_DIR` points at one.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use common::*;
use mrar::crf::{crf_decode, crf_forward_backward, crf_objective_with, fcrf_decode, CrfParams};
use mrar::eval::grid::{grid_search, smoothing_grid, GridAxis, Prefer};
use mrar::eval::{
    accuracy_all, accuracy_per_resident, format_duration, measure_time, run_benchmark, BenchmarkPlan,
    DatasetInput, PredictionSet,
};
use mrar::hmm::{train_fhmm, train_hmm, viterbi, viterbi_fhmm, FhmmParams, HmmParams};
use mrar::ingest::synth::{generate_synthetic, generator_symbol, SynthConfig, SynthShape};
use mrar::ingest::{load_casas, split_by_days, SplitSpec};
use mrar::model::{Hyperparams, Model, ModelKind};
use mrar::rnn::{Cell, Head, RnnConfig, RnnParams};
use mrar::{ActivityFrame, Dataset, Exec, LabelSpace, SequenceInstance};
use ndarray::Array2;
use rand::Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Label-space shapes with at most 9 joint states.
const SMALL_SHAPES: [&[usize]; 9] = [&[2], &[3], &[9], &[2, 2], &[2, 3], &[3, 2], &[3, 3], &[4, 2], &[2, 2, 2]];

fn random_shape(rng: &mut rand_chacha::ChaCha8Rng) -> &'static [usize] {
    SMALL_SHAPES[rng.gen_range(0..SMALL_SHAPES.len())]
}

/// Rows drawn from weights {1, 2} so that many paths tie exactly.
fn tied_hmm(rng: &mut rand_chacha::ChaCha8Rng, sizes: &[usize], symbols: usize) -> HmmParams {
    let mut p = random_hmm(rng, sizes, symbols);
    let mut row = |n: usize| {
        let w: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 2.0 }).collect();
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect::<Vec<f64>>()
    };
    let j = p.prior.len();
    p.prior = row(j);
    for mut r in p.transition.rows_mut() {
        r.assign(&ndarray::Array1::from(row(j)));
    }
    for mut r in p.emission.rows_mut() {
        r.assign(&ndarray::Array1::from(row(symbols + 1)));
    }
    p
}

fn criterion_1() -> Check {
    let mut rng = rng(101);
    let (mut hmm, mut fhmm, mut crf, mut fcrf) = (0, 0, 0, 0);
    for case in 0..120 {
        let sizes = random_shape(&mut rng);
        let frames = frames(sizes);
        let joint = frames.len();
        let len = rng.gen_range(1..=6);
        let symbols = rng.gen_range(1..=4);

        let p = if case % 4 == 0 { tied_hmm(&mut rng, sizes, symbols) } else { random_hmm(&mut rng, sizes, symbols) };
        let obs = symbol_obs(&mut rng, len, symbols);
        let want = brute_force_best(joint, len, |path| hmm_path_score(&p, &obs, path)).1;
        let got = viterbi(&p, &obs);
        ensure(got == want, || format!("hmm case {case}: viterbi {got:?} vs enumeration {want:?}"))?;
        hmm += 1;

        let f = random_fhmm(&mut rng, sizes, symbols);
        let want = brute_force_best(joint, len, |path| fhmm_path_score(&f, &obs, path)).1;
        let got = viterbi_fhmm(&f, &obs);
        for (m, seq) in got.iter().enumerate() {
            let expect: Vec<usize> = want.iter().map(|&j| frames[j][m]).collect();
            ensure(seq == &expect, || format!("fhmm case {case}: resident {m} {seq:?} vs {expect:?}"))?;
        }
        fhmm += 1;

        let dim = rng.gen_range(1..=3);
        let x = feature_obs(&mut rng, len, dim);
        let t = CrfTables::random(&mut rng, dim, joint, 2.0);
        let want = brute_force_best(joint, len, |path| t.score(&x, path)).1;
        let got = crf_decode(&t.params(), &x);
        ensure(got == want, || format!("crf case {case}: {got:?} vs {want:?}"))?;
        crf += 1;

        let ft = FcrfTables::random(&mut rng, dim, sizes, 2.0);
        let want = brute_force_best(joint, len, |path| {
            let fr: Vec<Vec<usize>> = path.iter().map(|&j| frames[j].clone()).collect();
            ft.score(&x, &fr)
        })
        .1;
        let got = fcrf_decode(&ft.params(), &x);
        for (m, seq) in got.iter().enumerate() {
            let expect: Vec<usize> = want.iter().map(|&j| frames[j][m]).collect();
            ensure(seq == &expect, || format!("fcrf case {case}: resident {m} {seq:?} vs {expect:?}"))?;
        }
        fcrf += 1;
    }
    Ok(format!("{hmm} HMM, {fhmm} fHMM, {crf} CRF, {fcrf} fCRF instances match enumeration"))
}

fn criterion_2() -> Check {
    let mut rng = rng(202);
    let mut worst = 0.0f64;
    let mut draws = 0;
    for _ in 0..200 {
        let labels = rng.gen_range(1..=3);
        let len = rng.gen_range(1..=4);
        let dim = rng.gen_range(1..=3);
        let t = CrfTables::random(&mut rng, dim, labels, 3.0);
        let x = feature_obs(&mut rng, len, dim);
        let inf = crf_forward_backward(&t.params(), &x);

        let mut scores = Vec::new();
        let mut paths = Vec::new();
        for_each_path(labels, len, |p| {
            scores.push(t.score(&x, p));
            paths.push(p.to_vec());
        });
        let log_z = log_sum_exp(&scores);
        worst = worst.max(rel_err(inf.log_z, log_z, 1e-300));
        let mut node = Array2::<f64>::zeros((len, labels));
        let mut edges = vec![Array2::<f64>::zeros((labels, labels)); len.saturating_sub(1)];
        for (p, s) in paths.iter().zip(&scores) {
            let w = (s - log_z).exp();
            for tt in 0..len {
                node[[tt, p[tt]]] += w;
                if tt > 0 {
                    edges[tt - 1][[p[tt - 1], p[tt]]] += w;
                }
            }
        }
        for (a, b) in inf.node.iter().zip(node.iter()) {
            worst = worst.max(rel_err(*a, *b, 1e-12));
        }
        for (ea, eb) in inf.edges.iter().zip(&edges) {
            for (a, b) in ea.iter().zip(eb.iter()) {
                worst = worst.max(rel_err(*a, *b, 1e-12));
            }
        }
        draws += 1;
    }
    ensure(worst < 1e-10, || format!("worst relative error {worst:.3e} against enumeration"))?;

    // marginal consistency on larger chains
    let mut consistency = 0.0f64;
    for _ in 0..200 {
        let labels = rng.gen_range(1..=9);
        let len = rng.gen_range(1..=40);
        let t = CrfTables::random(&mut rng, 3, labels, 5.0);
        let inf = crf_forward_backward(&t.params(), &feature_obs(&mut rng, len, 3));
        for tt in 0..len {
            consistency = consistency.max((inf.node.row(tt).sum() - 1.0).abs());
        }
        for (k, e) in inf.edges.iter().enumerate() {
            for i in 0..labels {
                consistency = consistency.max((e.row(i).sum() - inf.node[[k, i]]).abs());
                consistency = consistency.max((e.column(i).sum() - inf.node[[k + 1, i]]).abs());
            }
        }
    }
    ensure(consistency < 1e-9, || format!("marginal consistency violated by {consistency:.3e}"))?;
    Ok(format!("{draws} draws, worst relative error {worst:.2e}, consistency error {consistency:.2e}"))
}

fn crf_dataset(rng: &mut rand_chacha::ChaCha8Rng, sizes: &[usize], dim: usize, days: usize, len: usize) -> Dataset {
    let frames = frames(sizes);
    let instances = (0..days)
        .map(|d| {
            let obs = feature_obs(rng, len, dim);
            let labels = (0..len).map(|_| frames[rng.gen_range(0..frames.len())].clone()).collect();
            frames_to_instance(&format!("d{d}"), obs, labels)
        })
        .collect();
    Dataset::from_instances(instances, LabelSpace::with_sizes(sizes).unwrap()).unwrap()
}

fn criterion_3() -> Check {
    let mut rng = rng(303);
    let mut report = Vec::new();

    let ds = crf_dataset(&mut rng, &[2, 2], 3, 3, 6);
    let labels = ds.label_space.combined_size();
    let mut params = CrfParams::zeros(3, labels);
    params.weights_mut().iter_mut().for_each(|w| *w = rng.gen_range(-0.5..0.5));
    let (_, grad) = crf_objective_with(&params, &ds, Exec::Sequential).map_err(|e| e.to_string())?;
    let mut w = params.weights().to_vec();
    let mut worst = 0.0f64;
    for _ in 0..30 {
        let i = rng.gen_range(0..w.len());
        let numeric = central_difference(&mut w, i, 1e-5, |v| {
            let mut p = params.clone();
            p.weights_mut().copy_from_slice(v);
            crf_objective_with(&p, &ds, Exec::Sequential).unwrap().0
        });
        worst = worst.max(rel_err(grad[i], numeric, 1e-4));
    }
    ensure(worst < 1e-6, || format!("CRF gradient relative error {worst:.3e}"))?;
    report.push(format!("CRF {worst:.1e}"));

    let space = LabelSpace::with_sizes(&[2, 3]).unwrap();
    for cell in [Cell::Tanh, Cell::Gru, Cell::Lstm] {
        for head in [Head::Combined, Head::Separate] {
            let cfg = RnnConfig::new(cell, head, 3, 0.1, 7);
            let p = RnnParams::init(&cfg, 4, &space, &mut rng);
            let obs = feature_obs(&mut rng, 5, 4);
            let truth: Vec<Vec<usize>> = (0..5)
                .map(|_| {
                    let f = [rng.gen_range(0..2), rng.gen_range(0..3)];
                    match head {
                        Head::Combined => vec![combined_index(&[2, 3], &f)],
                        Head::Separate => f.to_vec(),
                    }
                })
                .collect();
            let worst = rnn_gradient_check(&p, &obs, &truth, 30, &mut rng);
            ensure(worst < 1e-6, || format!("{} {} gradient relative error {worst:.3e}", cell.name(), head.name()))?;
            report.push(format!("{}/{} {worst:.1e}", cell.name(), head.name()));
        }
    }
    Ok(format!("30 coordinates each; worst relative errors: {}", report.join(", ")))
}

fn criterion_4() -> Check {
    let mut rng = rng(404);
    let shapes: [&[usize]; 5] = [&[2, 2], &[3, 3], &[2, 3, 2], &[4], &[3, 2]];
    for case in 0..100 {
        let sizes = shapes[case % shapes.len()];
        let symbols = rng.gen_range(2..=6);
        let f: FhmmParams = random_fhmm(&mut rng, sizes, symbols);
        let len = rng.gen_range(1..=40);
        let obs = symbol_obs(&mut rng, len, symbols);
        let embedded = viterbi(&f.product_embedding(), &obs);
        let factored = viterbi_fhmm(&f, &obs);
        let frames = frames(sizes);
        for (m, seq) in factored.iter().enumerate() {
            let expect: Vec<usize> = embedded.iter().map(|&j| frames[j][m]).collect();
            ensure(seq == &expect, || format!("case {case}: resident {m} differs"))?;
        }
    }
    Ok("100 instances decode identically".into())
}

fn criterion_5() -> Check {
    let shape = SynthShape::default();
    let cfg = SynthConfig::random(&[3, 3], 8, 2000, 25, shape, 505, 506).map_err(|e| e.to_string())?;
    let ds = generate_synthetic(&cfg).map_err(|e| e.to_string())?;
    let (train, val, test) = split_by_days(&ds, SplitSpec::new(20, 2, 3)).map_err(|e| e.to_string())?;
    let gen_of: Vec<usize> = train.codec.rows().iter().map(|r| generator_symbol(r)).collect();
    ensure(gen_of.len() == cfg.symbols, || format!("only {} of {} symbols seen", gen_of.len(), cfg.symbols))?;

    let axes = vec![GridAxis::new("alpha", smoothing_grid(), Prefer::Larger)];
    let pick = grid_search(axes, 2, Exec::Parallel, |a| {
        let h = train_hmm(&train, a[0])?;
        let preds = Model::Hmm(h).predict_dataset(&val, Exec::Sequential)?;
        accuracy_all(&preds, &val.instances)
    })
    .map_err(|e| e.to_string())?;
    let alpha = pick.best[0];
    let hmm = train_hmm(&train, alpha).map_err(|e| e.to_string())?;
    let fhmm = train_fhmm(&train, alpha).map_err(|e| e.to_string())?;

    let joint = cfg.joint_transition();
    let mut worst_t = 0.0f64;
    let mut worst_e = 0.0f64;
    for i in 0..9 {
        for j in 0..9 {
            worst_t = worst_t.max((hmm.transition[[i, j]] - joint[[i, j]]).abs());
        }
        for (c, &g) in gen_of.iter().enumerate() {
            worst_e = worst_e.max((hmm.emission[[i, c]] - cfg.emission[[i, g]]).abs());
            worst_e = worst_e.max((fhmm.emission[[i, c]] - cfg.emission[[i, g]]).abs());
        }
        for m in 0..2 {
            for k in 0..3 {
                worst_t = worst_t.max((fhmm.transitions[m][[i, k]] - cfg.transitions[m][[i, k]]).abs());
            }
        }
    }
    ensure(worst_t <= 0.02 && worst_e <= 0.02, || {
        format!("table error transition {worst_t:.4}, emission {worst_e:.4} (limit 0.02)")
    })?;

    let prior = cfg.joint_prior();
    let oracle = PredictionSet::new(
        test.instances
            .iter()
            .map(|inst| {
                let syms: Vec<usize> = inst.observations.iter().map(|o| generator_symbol(&o.features)).collect();
                let path = reference_viterbi(&prior, &joint, &cfg.emission, &syms);
                path.into_iter().map(|j| ActivityFrame(frames(&[3, 3])[j].clone())).collect()
            })
            .collect(),
    );
    let oracle_acc = accuracy_all(&oracle, &test.instances).map_err(|e| e.to_string())?;
    let mut accs = Vec::new();
    for model in [Model::Hmm(hmm), Model::Fhmm(fhmm)] {
        let preds = model.predict_dataset(&test, Exec::Parallel).map_err(|e| e.to_string())?;
        let acc = accuracy_all(&preds, &test.instances).map_err(|e| e.to_string())?;
        ensure((acc - oracle_acc).abs() <= 0.02, || {
            format!("{} accuracy {acc:.4} vs generator oracle {oracle_acc:.4}", model.kind())
        })?;
        accs.push(acc);
    }
    Ok(format!(
        "alpha={alpha:e}; max table error transition {worst_t:.4}, emission {worst_e:.4}; accuracy_all HMM {:.4}, fHMM {:.4}, generator oracle {oracle_acc:.4}",
        accs[0], accs[1]
    ))
}

fn archive_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).expect("archive directory");
    dir
}

fn criterion_6() -> Check {
    let cfg = coupled_generator(&[2, 2], 6, 150, 8, 606);
    let ds = generate_synthetic(&cfg).map_err(|e| e.to_string())?;
    let (train, val, test) = split_by_days(&ds, SplitSpec::new(6, 1, 1)).map_err(|e| e.to_string())?;
    let plan = BenchmarkPlan {
        base: Hyperparams { max_iter: 200, max_epochs: 30, patience: 5, ..Default::default() },
        hidden_grid: vec![4.0, 8.0],
        learning_rate_grid: vec![0.03, 0.1, 0.3],
        max_expansions: 1,
        repeats: 3,
        ..Default::default()
    };
    let report = run_benchmark(&plan, &[DatasetInput { name: "coupled".into(), train, val, test }])
        .map_err(|e| e.to_string())?;
    let dir = archive_dir();
    std::fs::write(dir.join("report.txt"), report.to_text()).map_err(|e| e.to_string())?;
    std::fs::write(dir.join("report.csv"), report.accuracy_csv()).map_err(|e| e.to_string())?;
    std::fs::write(dir.join("summary.json"), report.to_json()).map_err(|e| e.to_string())?;
    let groups = report.group_summaries();
    let g = &groups[0];
    ensure(report.rows.len() == 10, || format!("{} rows instead of 10", report.rows.len()))?;
    let (Some(c), Some(s)) = (g.combined_all, g.separate_all) else {
        return Err("a label-encoding group has no completed model".into());
    };
    Ok(format!(
        "combined {:.2}% vs separate {:.2}% (gap {:+.2} points), archived in {}",
        100.0 * c,
        100.0 * s,
        100.0 * (s - c),
        dir.display()
    ))
}

fn random_predictions(rng: &mut rand_chacha::ChaCha8Rng) -> (Vec<SequenceInstance>, PredictionSet) {
    let m = rng.gen_range(1..=3);
    let sizes: Vec<usize> = (0..m).map(|_| rng.gen_range(1..=4)).collect();
    let days = rng.gen_range(1..=4);
    let mut truth = Vec::new();
    let mut preds = Vec::new();
    for d in 0..days {
        let len = rng.gen_range(1..=30);
        let draw = |rng: &mut rand_chacha::ChaCha8Rng| sizes.iter().map(|&k| rng.gen_range(0..k)).collect::<Vec<_>>();
        let frames: Vec<Vec<usize>> = (0..len).map(|_| draw(rng)).collect();
        let guess: Vec<ActivityFrame> = frames
            .iter()
            .map(|f| if rng.gen_bool(0.5) { ActivityFrame(f.clone()) } else { ActivityFrame(draw(rng)) })
            .collect();
        truth.push(frames_to_instance(&format!("d{d}"), feature_obs(rng, len, 1), frames));
        preds.push(guess);
    }
    (truth, PredictionSet::new(preds))
}

fn criterion_7() -> Check {
    let frames = |v: &[[usize; 2]]| v.iter().map(|f| f.to_vec()).collect::<Vec<_>>();
    let inst = |id: &str, v: &[[usize; 2]]| frames_to_instance(id, feature_obs(&mut rng(1), v.len(), 1), frames(v));
    let set = |v: &[&[[usize; 2]]]| {
        PredictionSet::new(v.iter().map(|s| s.iter().map(|f| ActivityFrame(f.to_vec())).collect()).collect())
    };
    let e = |r: mrar::Result<f64>| r.map_err(|e| e.to_string());

    let truth = vec![inst("a", &[[0, 1], [1, 1], [2, 0], [1, 0]])];
    ensure(e(accuracy_per_resident(&set(&[&[[0, 1], [1, 1], [2, 0], [1, 0]]]), &truth, 0))? == 1.0, || "perfect".into())?;
    ensure(e(accuracy_per_resident(&set(&[&[[0, 1], [1, 1], [2, 0], [0, 0]]]), &truth, 0))? == 0.75, || "3 of 4".into())?;

    let long: Vec<[usize; 2]> = vec![[0, 0]; 1000];
    let half: Vec<[usize; 2]> = (0..1000).map(|t| [usize::from(t < 500), 0]).collect();
    let truth = vec![inst("short", &[[1, 1]; 10]), inst("long", &long)];
    let preds = set(&[&[[1, 1]; 10], &half]);
    ensure(e(accuracy_per_resident(&preds, &truth, 0))? == 0.75, || "instances must be weighted equally".into())?;

    let truth = vec![inst("j", &[[0, 0], [0, 1], [0, 0], [0, 1]])];
    let preds = set(&[&[[0, 0], [0, 0], [0, 0], [0, 0]]]);
    ensure(e(accuracy_per_resident(&preds, &truth, 0))? == 1.0, || "R1 should be 1".into())?;
    ensure(e(accuracy_all(&preds, &truth))? == 0.5, || "joint should be 0.5".into())?;

    let mut rng = rng(707);
    for case in 0..1000 {
        let (truth, preds) = random_predictions(&mut rng);
        let all = e(accuracy_all(&preds, &truth))?;
        let m = truth[0].activities[0].0.len();
        for r in 0..m {
            let acc = e(accuracy_per_resident(&preds, &truth, r))?;
            ensure((0.0..=1.0).contains(&all) && all <= acc, || format!("case {case}: all {all} > R{r} {acc}"))?;
        }
    }

    let len = 1000;
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| vec![rng.gen_range(0..2), rng.gen_range(0..2)];
    let fr: Vec<Vec<usize>> = (0..len).map(|_| draw(&mut rng)).collect();
    let guess: Vec<ActivityFrame> = (0..len).map(|_| ActivityFrame(draw(&mut rng))).collect();
    let truth = vec![frames_to_instance("mc", feature_obs(&mut rng, len, 1), fr)];
    let mc = e(accuracy_all(&PredictionSet::new(vec![guess]), &truth))?;
    ensure((mc - 0.25).abs() <= 0.05, || format!("uniform random joint accuracy {mc}"))?;
    Ok(format!("metric examples exact; 1000 random sets bounded; random-guess joint accuracy {mc:.3}"))
}

fn criterion_8() -> Check {
    let cfg = SynthConfig::random(&[15, 15], 37, 1000, 26, SynthShape::default(), 808, 809).map_err(|e| e.to_string())?;
    let ds = generate_synthetic(&cfg).map_err(|e| e.to_string())?;
    let (train, _, test) = split_by_days(&ds, SplitSpec::CASAS).map_err(|e| e.to_string())?;
    let (result, seconds) = measure_time(|| -> mrar::Result<f64> {
        let (model, _) = mrar::model::train_model(
            ModelKind::table_rows()[6],
            &Hyperparams { alpha: 1e-2, ..Default::default() },
            &train,
            None,
            Exec::Parallel,
        )?;
        accuracy_all(&model.predict_dataset(&test, Exec::Parallel)?, &test.instances)
    });
    let acc = result.map_err(|e| e.to_string())?;
    ensure(seconds < 10.0, || format!("HMM train+predict took {seconds:.2} s"))?;
    ensure(format_duration(3599.0) == "3599.00 sec" && format_duration(3601.0) == "1.00 hrs", || {
        "duration rendering".into()
    })?;
    Ok(format!(
        "J=225, S=37, {} training steps: {} (accuracy_all {acc:.3})",
        train.total_steps(),
        format_duration(seconds)
    ))
}

fn criterion_9() -> Outcome {
    let Some(dir) = std::env::var_os("MRAR_CASAS_DIR") else {
        return Outcome::Skip("MRAR_CASAS_DIR not set".into());
    };
    let run = || -> mrar::Result<f64> {
        let ds = load_casas(&PathBuf::from(dir))?;
        let (train, val, test) = split_by_days(&ds, SplitSpec::CASAS)?;
        let axes = vec![GridAxis::new("alpha", smoothing_grid(), Prefer::Larger)];
        let pick = grid_search(axes, 2, Exec::Parallel, |a| {
            let preds = Model::Hmm(train_hmm(&train, a[0])?).predict_dataset(&val, Exec::Sequential)?;
            accuracy_all(&preds, &val.instances)
        })?;
        let model = Model::Hmm(train_hmm(&train, pick.best[0])?);
        accuracy_all(&model.predict_dataset(&test, Exec::Parallel)?, &test.instances)
    };
    match run() {
        Ok(acc) if (acc - 0.5658).abs() <= 0.10 => Outcome::Pass(format!("HMM accuracy_all {:.2}%", 100.0 * acc)),
        Ok(acc) => Outcome::Fail(format!("HMM accuracy_all {:.2}%, outside 56.58 ± 10", 100.0 * acc)),
        Err(e) => Outcome::Fail(e.to_string()),
    }
}

fn run(check: fn() -> Check) -> Outcome {
    match catch_unwind(AssertUnwindSafe(check)) {
        Ok(Ok(msg)) => Outcome::Pass(msg),
        Ok(Err(msg)) => Outcome::Fail(msg),
        Err(p) => Outcome::Fail(
            p.downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()),
        ),
    }
}

fn main() {
    let criteria: [(u32, &str, f64, fn() -> Check); 8] = [
        (1, "decoding oracles", 30.0, criterion_1),
        (2, "inference oracles", f64::INFINITY, criterion_2),
        (3, "gradient checks", 60.0, criterion_3),
        (4, "fHMM/HMM embedding", f64::INFINITY, criterion_4),
        (5, "synthetic recovery", 120.0, criterion_5),
        (6, "combined vs separate report", f64::INFINITY, criterion_6),
        (7, "metric suite", f64::INFINITY, criterion_7),
        (8, "efficiency sanity", f64::INFINITY, criterion_8),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let mut outcome = run(check);
        let secs = start.elapsed().as_secs_f64();
        if let Outcome::Pass(msg) = &outcome {
            if secs > budget {
                outcome = Outcome::Fail(format!("{msg}; took {secs:.1} s, budget {budget} s"));
            }
        }
        match outcome {
            Outcome::Pass(msg) => println!("PASS  [{id}] {name} ({secs:.2} s): {msg}"),
            Outcome::Fail(msg) => {
                failed += 1;
                println!("FAIL  [{id}] {name} ({secs:.2} s): {msg}");
            }
            Outcome::Skip(msg) => println!("SKIP  [{id}] {name}: {msg}"),
        }
    }
    match criterion_9() {
        Outcome::Pass(msg) => println!("PASS  [9] real CASAS check (optional): {msg}"),
        Outcome::Fail(msg) => println!("FAIL  [9] real CASAS check (optional, not counted): {msg}"),
        Outcome::Skip(msg) => println!("SKIP  [9] real CASAS check (optional): {msg}"),
    }
    println!("acceptance: {} of 8 required criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
