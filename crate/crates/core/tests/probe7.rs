//! Temporary sizing/quality probe for the heavy acceptance run. Not part of
//! the suite; run explicitly with `--nocapture` and delete afterwards.

use std::time::Instant;

use nalgebra::DMatrix;
use ringdown::classify::{fit, ClassifierSpec};
use ringdown::dataset::{EventClass, ExperimentPlan, FeatureDataset, Grid};
use ringdown::experiment::{
    aggregate, freeze_params, make_folds, make_label_split, roc_auc_ovr, run_plan,
};
use ringdown::modal::{extract_features, ExtractionConfig};
use ringdown::seed::derive_seed;
use ringdown::ssl::{label_spreading_engine, self_train, MixedSet};
use ringdown::synth::{
    default_signatures, generate_dataset, ClassSignature, GeneratorConfig, ModeSpec,
};

fn candidate_sigs() -> Vec<ClassSignature> {
    vec![
        ClassSignature {
            class: EventClass::LL,
            modes: vec![
                ModeSpec {
                    freq_hz: (0.0, 0.0),
                    damping: (-0.55, -0.15),
                    scale: [0.008, 0.05, 0.06],
                },
                ModeSpec {
                    freq_hz: (0.2, 1.2),
                    damping: (-0.5, -0.1),
                    scale: [0.004, 0.12, 0.03],
                },
                ModeSpec {
                    freq_hz: (0.8, 2.2),
                    damping: (-1.0, -0.3),
                    scale: [0.002, 0.04, 0.008],
                },
            ],
            offset_base: [1.0, 0.0, 60.0],
            dip_depth_vm: 0.0,
            spatial_decay: 0.8,
        },
        ClassSignature {
            class: EventClass::GL,
            modes: vec![
                ModeSpec {
                    freq_hz: (0.0, 0.0),
                    damping: (-0.55, -0.15),
                    scale: [-0.008, -0.05, -0.06],
                },
                ModeSpec {
                    freq_hz: (0.2, 1.2),
                    damping: (-0.5, -0.1),
                    scale: [0.004, 0.12, 0.03],
                },
                ModeSpec {
                    freq_hz: (0.8, 2.2),
                    damping: (-1.0, -0.3),
                    scale: [0.002, 0.04, 0.008],
                },
            ],
            offset_base: [1.0, 0.0, 60.0],
            dip_depth_vm: 0.0,
            spatial_decay: 0.8,
        },
        ClassSignature {
            class: EventClass::LT,
            modes: vec![
                ModeSpec {
                    freq_hz: (0.3, 1.8),
                    damping: (-0.9, -0.2),
                    scale: [0.006, 0.15, 0.02],
                },
                ModeSpec {
                    freq_hz: (0.0, 0.0),
                    damping: (-1.2, -0.5),
                    scale: [0.0, 0.08, 0.0],
                },
            ],
            offset_base: [1.0, 0.0, 60.0],
            dip_depth_vm: 0.0,
            spatial_decay: 2.5,
        },
        ClassSignature {
            class: EventClass::BF,
            modes: vec![
                ModeSpec {
                    freq_hz: (0.8, 2.8),
                    damping: (-2.5, -0.8),
                    scale: [0.010, 0.10, 0.015],
                },
                ModeSpec {
                    freq_hz: (0.5, 1.8),
                    damping: (-1.5, -0.5),
                    scale: [0.004, 0.05, 0.008],
                },
            ],
            offset_base: [1.0, 0.0, 60.0],
            dip_depth_vm: 0.08,
            spatial_decay: 1.5,
        },
    ]
}

fn build(
    name: &str,
    sigs: &[ClassSignature],
    load: (f64, f64),
    fluct: f64,
    duration: f64,
    seed: u64,
) -> (String, FeatureDataset) {
    let gen = GeneratorConfig {
        m: 4,
        duration_s: duration,
        load_scale: load,
        fluctuation: fluct,
        counts: [120, 120, 120, 80],
        snr_db: Some(45.0),
        ..Default::default()
    };
    let events = generate_dataset(&gen, sigs, seed).unwrap();
    let ext = ExtractionConfig {
        p: 2,
        m_prime: 2,
        pencil_l: Some((duration * 30.0 / 3.0).round() as usize),
        detrend: true,
    };
    let (features, _) = extract_features(&events, &ext).unwrap();
    (name.to_string(), features)
}

fn rows(x: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), x.ncols(), |i, j| x[(idx[i], j)])
}

fn accuracy(got: &[i32], want: &[i32]) -> f64 {
    let hit = got.iter().zip(want).filter(|(a, b)| a == b).count();
    hit as f64 / want.len() as f64
}

#[test]
fn probe_ssl_quality() {
    let seed = 101u64;
    let variants: Vec<(String, FeatureDataset)> = vec![
        build("wide-load", &candidate_sigs(), (0.6, 1.4), 0.05, 6.0, seed),
        build("wider", &candidate_sigs(), (0.5, 1.5), 0.05, 6.0, seed),
        build("rays", &candidate_sigs(), (0.45, 1.7), 0.05, 6.0, seed),
    ];

    for (name, features) in &variants {
        println!("=== variant {name} (d = {}) ===", features.dim());
        let folds = make_folds(features.len(), 5, derive_seed(seed, &[1])).unwrap();
        let i_v = &folds[0];
        let i_t: Vec<usize> = folds[1..].iter().flatten().copied().collect();
        let split = make_label_split(
            &i_t,
            &features.labels,
            24,
            0.1,
            0.4,
            derive_seed(seed, &[2, 0, 0]),
            10_000,
        )
        .unwrap();
        let x_l = rows(&features.x, &split.labeled);
        let y_l: Vec<i32> = split.labeled.iter().map(|&i| features.labels[i]).collect();
        let x_u = rows(&features.x, &split.unlabeled);
        let m = MixedSet::assemble(&x_l, &y_l, &x_u).unwrap();
        let truth: Vec<i32> = m
            .unlabeled_order
            .iter()
            .map(|&src| features.labels[split.unlabeled[src]])
            .collect();

        let x_v = rows(&features.x, i_v);
        let y_v: Vec<i32> = i_v.iter().map(|&i| features.labels[i]).collect();
        let auc_of = |train_x: &DMatrix<f64>, train_y: &[i32]| -> f64 {
            let model = fit(&ClassifierSpec::knn(5), train_x, train_y).unwrap();
            let scores = model.score(&x_v).unwrap();
            roc_auc_ovr(&scores, model.classes(), &y_v).unwrap().value
        };
        println!("supervised kNN(5) AUC on fold 0: {:.4}", auc_of(&x_l, &y_l));

        // Supervised kNN labels on the pool (one-shot self-training).
        let sup = fit(&ClassifierSpec::knn(5), &x_l, &y_l).unwrap();
        let sup_labels = sup.predict(&m.unlabeled_x()).unwrap();
        println!("kNN(5) one-shot pool accuracy: {:.3}", accuracy(&sup_labels, &truth));

        // Batched self-training.
        for (spec_name, spec) in [
            ("kNN(5)", ClassifierSpec::knn(5)),
            ("kNN(3)", ClassifierSpec::knn(3)),
        ] {
            let st = self_train(&spec, &m, 100).unwrap();
            let st_pool = &st[m.n_labeled..];
            let full_auc = auc_of(&m.x, &st);
            println!(
                "self-train {spec_name} batch 100: pool accuracy {:.3}, final kNN AUC {:.4}",
                accuracy(st_pool, &truth),
                full_auc
            );
        }

        // Label spreading across the grid.
        for alpha in [0.2, 0.5, 0.8, 0.95] {
            let mut line = format!("spread alpha {alpha:4}: ");
            for scale in [0.08, 0.1, 0.15, 0.25] {
                match label_spreading_engine(&m, alpha, scale, 1e-6, 1000) {
                    Ok(out) => {
                        let acc = accuracy(&out.labels[m.n_labeled..], &truth);
                        line.push_str(&format!("s{scale:<4}={acc:.3} "));
                    }
                    Err(e) => line.push_str(&format!("s{scale:<4}=ERR({e:.20}) ")),
                }
            }
            println!("{line}");
        }

        // Best spread config end-to-end AUC.
        let mut best = (0.0f64, 0.0, 0.0);
        for alpha in [0.2, 0.5, 0.8, 0.95] {
            for scale in [0.08, 0.1, 0.15, 0.25] {
                if let Ok(out) = label_spreading_engine(&m, alpha, scale, 1e-6, 1000) {
                    let acc = accuracy(&out.labels[m.n_labeled..], &truth);
                    if acc > best.0 {
                        best = (acc, alpha, scale);
                    }
                }
            }
        }
        let out = label_spreading_engine(&m, best.1, best.2, 1e-6, 1000).unwrap();
        println!(
            "best spread (alpha {}, scale {}): accuracy {:.3}, final kNN AUC {:.4}",
            best.1,
            best.2,
            best.0,
            auc_of(&m.x, &out.labels)
        );

        // Class confusion of the best spread, to see which classes bleed.
        let mut confusion = [[0usize; 4]; 4];
        for (got, want) in out.labels[m.n_labeled..].iter().zip(&truth) {
            confusion[(want - 1) as usize][(got - 1) as usize] += 1;
        }
        println!("spread confusion (rows = truth LL/GL/LT/BF):");
        for row in confusion {
            println!("  {row:?}");
        }

        // What the labeled-only transductive CV would freeze.
        let plan = slice_plan(seed);
        let frozen = freeze_params(&plan, &x_l, &y_l).unwrap();
        println!("frozen LS params on this split: {:?}", frozen.ls);
    }
    let _ = Instant::now();
}

fn slice_plan(master_seed: u64) -> ExperimentPlan {
    use ringdown::classify::ClassifierKind::*;
    use ringdown::dataset::EngineKind::*;
    let mut grids: std::collections::BTreeMap<String, Grid> = std::collections::BTreeMap::new();
    grids.insert("kNN".into(), Grid::from([("k".into(), vec![3.0, 5.0])]));
    grids.insert("DT".into(), Grid::from([("max_depth".into(), vec![3.0, 5.0])]));
    grids.insert(
        "GB".into(),
        Grid::from([
            ("n_trees".into(), vec![4.0]),
            ("learning_rate".into(), vec![0.5]),
            ("max_depth".into(), vec![1.0]),
        ]),
    );
    grids.insert("SVML".into(), Grid::from([("C".into(), vec![1.0])]));
    grids.insert(
        "SVMR".into(),
        Grid::from([("C".into(), vec![1.0]), ("gamma".into(), vec![0.1])]),
    );
    grids.insert(
        "label_spreading".into(),
        Grid::from([
            ("alpha".into(), vec![0.2, 0.5, 0.8]),
            ("sigma_scale".into(), vec![0.15, 0.25]),
        ]),
    );
    ExperimentPlan {
        n_k: 5,
        n_q: 10,
        n_l: 24,
        delta_u: 50,
        n_r: 5,
        b_min: 0.125,
        b_max: 0.5,
        master_seed,
        engines: vec![SelfTraining, LabelSpreading],
        classifiers: vec![Knn, Dt, Gb, Svml, Svmr],
        grids,
        self_train_batch: Some(200),
        max_split_tries: 10_000,
        pairs: Some(vec![
            (SelfTraining, Knn),
            (SelfTraining, Dt),
            (SelfTraining, Gb),
            (SelfTraining, Svml),
            (SelfTraining, Svmr),
            (LabelSpreading, Knn),
        ]),
    }
}

#[test]
fn probe_three_seeds() {
    let t_all = Instant::now();
    let mut passes = 0usize;
    for seed in [101u64, 202, 303] {
        let t0 = Instant::now();
        let gen = GeneratorConfig {
            m: 4,
            duration_s: 6.0,
            load_scale: (0.6, 1.4),
            fluctuation: 0.05,
            counts: [120, 120, 120, 80],
            snr_db: Some(45.0),
            ..Default::default()
        };
        let events = generate_dataset(&gen, &candidate_sigs(), seed).unwrap();
        let ext = ExtractionConfig {
            p: 2,
            m_prime: 2,
            pencil_l: Some(60),
            detrend: true,
        };
        let (features, _) = extract_features(&events, &ext).unwrap();
        let plan = slice_plan(seed);
        let out = run_plan(&features, &plan, &[], &|_, _| {}).unwrap();
        if !out.failures.is_empty() {
            println!("seed {seed}: {} FAILURES", out.failures.len());
            for f in out.failures.iter().take(12) {
                println!("  {f:?}");
            }
        }

        let agg = aggregate(&out.results);
        let final_s = agg.iter().map(|r| r.s).max().unwrap();
        let ls_s0 = agg
            .iter()
            .find(|r| r.engine == "label_spreading" && r.s == 0)
            .unwrap();
        let ls_fin = agg
            .iter()
            .find(|r| r.engine == "label_spreading" && r.s == final_s)
            .unwrap();
        let a = ls_fin.p5_auc >= ls_s0.p5_auc + 0.02;
        let b = agg
            .iter()
            .filter(|r| r.engine == "self_training" && r.s == final_s)
            .all(|r| ls_fin.p5_auc >= r.p5_auc);
        let best_st = agg
            .iter()
            .filter(|r| r.engine == "self_training" && r.s == final_s)
            .map(|r| r.p5_auc)
            .fold(f64::NEG_INFINITY, f64::max);
        println!(
            "seed {seed}: {:.1}s | LS s0 p5 {:.4} final p5 {:.4} | best ST final p5 {:.4} | (a) {} (b) {}",
            t0.elapsed().as_secs_f64(),
            ls_s0.p5_auc,
            ls_fin.p5_auc,
            best_st,
            if a { "PASS" } else { "FAIL" },
            if b { "PASS" } else { "FAIL" },
        );
        if a && b {
            passes += 1;
        }
    }
    println!(
        "total {:.1}s, {passes}/3 seeds pass",
        t_all.elapsed().as_secs_f64()
    );
}

#[test]
fn probe_ls_failures() {
    use ringdown::classify::ClassifierKind::Knn;
    use ringdown::dataset::EngineKind::LabelSpreading;
    let t_all = Instant::now();
    for seed in [101u64, 202, 303] {
        let t0 = Instant::now();
        let gen = GeneratorConfig {
            m: 4,
            duration_s: 6.0,
            load_scale: (0.6, 1.4),
            fluctuation: 0.05,
            counts: [120, 120, 120, 80],
            snr_db: Some(45.0),
            ..Default::default()
        };
        let events = generate_dataset(&gen, &candidate_sigs(), seed).unwrap();
        let ext = ExtractionConfig {
            p: 2,
            m_prime: 2,
            pencil_l: Some(60),
            detrend: true,
        };
        let (features, _) = extract_features(&events, &ext).unwrap();
        let mut plan = slice_plan(seed);
        plan.engines = vec![LabelSpreading];
        plan.classifiers = vec![Knn];
        plan.pairs = Some(vec![(LabelSpreading, Knn)]);
        plan.b_min = 0.125;
        plan.grids.insert(
            "label_spreading".into(),
            Grid::from([
                ("alpha".into(), vec![0.2, 0.5, 0.8]),
                ("sigma_scale".into(), vec![0.15, 0.25]),
            ]),
        );
        let out = run_plan(&features, &plan, &[], &|_, _| {}).unwrap();
        println!(
            "seed {seed}: {:.1}s | {} results, {} failures",
            t0.elapsed().as_secs_f64(),
            out.results.len(),
            out.failures.len()
        );
        for f in out.failures.iter().take(15) {
            println!("  {f:?}");
        }
        let agg = aggregate(&out.results);
        let final_s = agg.iter().map(|r| r.s).max().unwrap();
        for r in agg.iter().filter(|r| r.s == 0 || r.s == final_s) {
            println!(
                "  {} {} s={} p5 {:.4} mean {:.4} n_cells {}",
                r.engine, r.classifier, r.s, r.p5_auc, r.mean_auc, r.n_cells
            );
        }
    }
    println!("ls-only total {:.1}s", t_all.elapsed().as_secs_f64());
}


#[test]
fn probe_scale_basin() {
    use ringdown::classify::ClassifierKind::Knn;
    use ringdown::dataset::EngineKind::LabelSpreading;
    let t_all = Instant::now();
    // (tag for split seeds, b_min, sigma_scale grid, alpha grid)
    let configs: Vec<(u64, f64, Vec<f64>, Vec<f64>)> = vec![
        (50, 0.05, vec![0.1, 0.15], vec![0.2, 0.5, 0.8]),
        (51, 0.125, vec![0.1, 0.15], vec![0.2, 0.5, 0.8]),
        (52, 0.125, vec![0.1, 0.15], vec![0.5, 0.8, 0.95]),
        (53, 0.125, vec![0.15, 0.25], vec![0.5, 0.8, 0.95]),
        (54, 0.1, vec![0.1, 0.15], vec![0.2, 0.5, 0.8]),
    ];
    struct Rec {
        seed: u64,
        rep: u64,
        s0: f64,
        fin: f64,
        acc: f64,
        alpha: f64,
        scale: f64,
        min_class: usize,
    }
    for (tag, b_min, scales, alphas) in &configs {
        let mut recs: Vec<Rec> = Vec::new();
        let mut errs = 0usize;
        for seed in [101u64, 202, 303] {
            let gen = GeneratorConfig {
                m: 4,
                duration_s: 6.0,
                load_scale: (0.6, 1.4),
                fluctuation: 0.05,
                counts: [120, 120, 120, 80],
                snr_db: Some(45.0),
                ..Default::default()
            };
            let events = generate_dataset(&gen, &candidate_sigs(), seed).unwrap();
            let ext = ExtractionConfig {
                p: 2,
                m_prime: 2,
                pencil_l: Some(60),
                detrend: true,
            };
            let (features, _) = extract_features(&events, &ext).unwrap();
            for rep in 0..20u64 {
                let folds =
                    make_folds(features.len(), 5, derive_seed(seed, &[888, *tag, rep])).unwrap();
                let i_v = &folds[0];
                let i_t: Vec<usize> = folds[1..].iter().flatten().copied().collect();
                let split = make_label_split(
                    &i_t,
                    &features.labels,
                    24,
                    *b_min,
                    0.5,
                    derive_seed(seed, &[999, *tag, rep]),
                    10_000,
                )
                .unwrap();
                let x_l = rows(&features.x, &split.labeled);
                let y_l: Vec<i32> = split.labeled.iter().map(|&i| features.labels[i]).collect();
                let mut counts = [0usize; 4];
                for &l in &y_l {
                    counts[(l - 1) as usize] += 1;
                }
                let mut plan = slice_plan(seed);
                plan.engines = vec![LabelSpreading];
                plan.classifiers = vec![Knn];
                plan.pairs = Some(vec![(LabelSpreading, Knn)]);
                plan.grids.insert(
                    "label_spreading".into(),
                    Grid::from([
                        ("alpha".into(), alphas.clone()),
                        ("sigma_scale".into(), scales.clone()),
                    ]),
                );
                let frozen = freeze_params(&plan, &x_l, &y_l).unwrap();
                let (alpha, scale) = frozen.ls.unwrap();
                let f2 = &frozen.f2[&Knn];

                let x_v = rows(&features.x, i_v);
                let y_v: Vec<i32> = i_v.iter().map(|&i| features.labels[i]).collect();
                let auc_of = |train_x: &DMatrix<f64>, train_y: &[i32]| -> f64 {
                    let model = fit(f2, train_x, train_y).unwrap();
                    let scores = model.score(&x_v).unwrap();
                    roc_auc_ovr(&scores, model.classes(), &y_v).unwrap().value
                };
                let s0 = auc_of(&x_l, &y_l);

                let x_u = rows(&features.x, &split.unlabeled);
                let m = MixedSet::assemble(&x_l, &y_l, &x_u).unwrap();
                let truth: Vec<i32> = m
                    .unlabeled_order
                    .iter()
                    .map(|&src| features.labels[split.unlabeled[src]])
                    .collect();
                match label_spreading_engine(&m, alpha, scale, 1e-6, 1000) {
                    Ok(out) => {
                        let fin = auc_of(&m.x, &out.labels);
                        let acc = accuracy(&out.labels[m.n_labeled..], &truth);
                        recs.push(Rec {
                            seed,
                            rep,
                            s0,
                            fin,
                            acc,
                            alpha,
                            scale,
                            min_class: *counts.iter().min().unwrap(),
                        });
                    }
                    Err(_) => errs += 1,
                }
            }
        }
        let q = |mut v: Vec<f64>, p: f64| -> f64 {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v[((v.len() - 1) as f64 * p).round() as usize]
        };
        let s0s: Vec<f64> = recs.iter().map(|r| r.s0).collect();
        let fins: Vec<f64> = recs.iter().map(|r| r.fin).collect();
        println!(
            "b{b_min} scales {scales:?} alphas {alphas:?}: n {} err {errs}",
            recs.len()
        );
        println!(
            "  s0    min {:.3} p5 {:.3} p10 {:.3} med {:.3}",
            q(s0s.clone(), 0.0),
            q(s0s.clone(), 0.05),
            q(s0s.clone(), 0.10),
            q(s0s, 0.5),
        );
        println!(
            "  final min {:.3} p5 {:.3} p10 {:.3} med {:.3}",
            q(fins.clone(), 0.0),
            q(fins.clone(), 0.05),
            q(fins.clone(), 0.10),
            q(fins, 0.5),
        );
        recs.sort_by(|a, b| a.fin.partial_cmp(&b.fin).unwrap());
        for r in recs.iter().take(5) {
            println!(
                "  worst: seed {} rep {} s0 {:.3} fin {:.3} acc {:.3} a{} sc{} minclass {}",
                r.seed, r.rep, r.s0, r.fin, r.acc, r.alpha, r.scale, r.min_class
            );
        }
    }
    println!("basin total {:.1}s", t_all.elapsed().as_secs_f64());
}

#[test]
fn probe_modal_trial22() {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use ringdown::dataset::Channel;
    use std::f64::consts::TAU;
    let (n, ts, m) = (300usize, 1.0 / 30.0, 2usize);
    let cfg = ExtractionConfig {
        p: 4,
        m_prime: 2,
        pencil_l: None,
        detrend: false,
    };
    let mut rng = StdRng::seed_from_u64(7201);
    for trial in 0..30 {
        let p_true = trial % 4 + 1;
        let mut freqs: Vec<f64> = Vec::new();
        while freqs.len() < p_true {
            let f = rng.gen_range(0.25..2.8);
            if freqs.iter().all(|&g| (g - f).abs() >= 0.4) {
                freqs.push(f);
            }
        }
        let poles: Vec<(f64, f64)> = freqs
            .iter()
            .map(|&f| (rng.gen_range(-0.4..-0.05), TAU * f))
            .collect();
        let residues: Vec<Vec<(f64, f64)>> = (0..m)
            .map(|_| {
                poles
                    .iter()
                    .map(|_| (rng.gen_range(0.5..1.5), rng.gen_range(-3.0..3.0)))
                    .collect()
            })
            .collect();
        if trial != 22 {
            continue;
        }
        let y = DMatrix::from_fn(m, n, |i, s| {
            let time = s as f64 * ts;
            poles
                .iter()
                .enumerate()
                .map(|(k, &(sig, om))| {
                    let (mag, th) = residues[i][k];
                    mag * (sig * time).exp() * (om * time + th).cos()
                })
                .sum()
        });
        println!("trial {trial}: p_true {p_true}");
        for (k, &(s, o)) in poles.iter().enumerate() {
            println!(
                "  true k{k}: sigma {s:+.15e} omega {o:.15e} mags {:?} ths {:?}",
                residues.iter().map(|r| r[k].0).collect::<Vec<_>>(),
                residues.iter().map(|r| r[k].1).collect::<Vec<_>>()
            );
        }
        let est = ringdown::modal::estimate_modes(&y, ts, &cfg, Channel::Vm).unwrap();
        for (k, &(s, o)) in est.poles.iter().enumerate() {
            println!(
                "  est  k{k}: sigma {s:+.6} omega {o:.6} ({:.4} Hz) mags {:?}",
                o / TAU,
                est.residues.iter().map(|r| r[k].0).collect::<Vec<_>>()
            );
        }
    }
}

#[test]
fn probe_svd_accuracy() {
    use nalgebra::SVD;
    use ringdown::modal::build_block_hankel;
    let poles = [
        (-2.678603608721084e-1, 8.669939763540617e0),
        (-5.359716911410300e-2, 6.119928115018156e0),
        (-2.539331237270566e-1, 1.299223591962102e1),
    ];
    let mags = [
        [1.170929841649587, 1.4105761354527822, 0.8550302595049128],
        [0.8385772240041176, 0.9636819890933319, 0.9168945068668086],
    ];
    let ths = [
        [-0.7460971729169974, -0.7015019495012957, 0.7487625381472602],
        [-0.012866506717074788, -1.5150890381308293, 1.9715546721750945],
    ];
    let (n, ts, l) = (300usize, 1.0 / 30.0, 150usize);
    let y = DMatrix::from_fn(2, n, |i, s| {
        let time = s as f64 * ts;
        poles
            .iter()
            .enumerate()
            .map(|(k, &(sg, om))| mags[i][k] * (sg * time).exp() * (om * time + ths[i][k]).cos())
            .sum()
    });
    let h = build_block_hankel(&y, l).unwrap();
    let svd = SVD::new(h.clone(), true, true);
    let s1 = svd.singular_values[0];
    println!("nalgebra sv ratios:");
    for i in 0..9 {
        println!("  {:.6e}", svd.singular_values[i] / s1);
    }
    // Reconstruction error of the truncated rank-6 SVD vs the full matrix.
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let mut recon = DMatrix::zeros(h.nrows(), h.ncols());
    for k in 0..6 {
        let uk = u.column(k);
        let vk = vt.row(k);
        let sk = svd.singular_values[k];
        for a in 0..h.nrows() {
            for b in 0..h.ncols() {
                recon[(a, b)] += sk * uk[a] * vk[b];
            }
        }
    }
    let err = (&h - &recon).abs().max();
    println!("rank-6 reconstruction max err / s1: {:.3e}", err / s1);
    // Orthogonality of the leading right singular vectors.
    let mut worst = 0.0f64;
    for a in 0..6 {
        for b in 0..6 {
            let dot: f64 = (0..h.ncols()).map(|j| vt[(a, j)] * vt[(b, j)]).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    println!("V orthogonality worst dev: {:.3e}", worst);
    // Pencil residual with nalgebra's V.
    let mut vr = DMatrix::zeros(l + 1, 6);
    for c in 0..6 {
        vr.set_column(c, &vt.row(c).transpose());
    }
    let v1 = vr.rows(0, l).into_owned();
    let v2 = vr.rows(1, l).into_owned();
    let x = SVD::new(v1.clone(), true, true).solve(&v2, 1e-12).unwrap();
    let resid = (&v1 * &x - &v2).abs().max();
    println!("pencil solve residual max: {:.3e}", resid);
    let zs = x.complex_eigenvalues();
    for z in zs.iter() {
        let lam = z.ln();
        if lam.im > 0.0 {
            println!("  z-eig: sigma {:+.9} omega {:.9}", lam.re * 30.0, lam.im * 30.0);
        }
    }
}
