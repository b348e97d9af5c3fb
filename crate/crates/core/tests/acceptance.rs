//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use asanakit::benchmark::{run_benchmark, table1_configs};
use asanakit::classifiers::{
    softmax_loss_and_grad, train, Family, Fitted, Matrix, Mlp, ModelSpec,
};
use asanakit::correction::{evaluate_pose, profile_from_samples, PoseProfile, ProfileSet};
use asanakit::dataset::{
    mudra_templates, synth_hand_frame, synth_mudra_dataset, synth_recording, Dataset, HandKinematics, SplitSpec,
};
use asanakit::geometry::{angle_at, extract_features};
use asanakit::session::{
    activity_report, replay, DateRange, LogStore, Server, ServerMessage, SessionConfig, SessionManager, UNSTABLE,
};
use asanakit::skeleton::{Kind, Landmark, LandmarkFrame};

type Outcome = Result<String, String>;

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    check(
        elapsed.as_secs_f64() < limit_s,
        format!("took {:.2}s, limit {limit_s}s", elapsed.as_secs_f64()),
    )
}

// ---------------------------------------------------------------- oracles

/// Interior angle from the normalized dot product.
fn dot_angle(a: &Landmark, b: &Landmark, c: &Landmark) -> f64 {
    let (ux, uy) = (a.x - b.x, a.y - b.y);
    let (vx, vy) = (c.x - b.x, c.y - b.y);
    let cos = (ux * vx + uy * vy) / (ux.hypot(uy) * vx.hypot(vy));
    cos.clamp(-1.0, 1.0).acos().to_degrees()
}

/// Brute-force KNN: sort every distance, vote, lowest class wins ties.
fn knn_oracle(train: &[(Vec<f64>, usize)], q: &[f64], k: usize, n_classes: usize) -> usize {
    let mut d: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, (x, _))| (x.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt(), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut votes = vec![0usize; n_classes];
    for &(_, i) in d.iter().take(k) {
        votes[train[i].1] += 1;
    }
    let best = *votes.iter().max().unwrap();
    votes.iter().position(|&v| v == best).unwrap()
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    diff / scale.max(1e-12)
}

fn numeric_grad(params: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let h = 1e-5;
    let mut p = params.to_vec();
    (0..params.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let up = f(&p);
            p[i] = orig - h;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn random_problem(rng: &mut ChaCha8Rng, n: usize, d: usize, classes: usize) -> (Matrix, Vec<usize>) {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| normal.sample(rng)).collect()).collect();
    let y = (0..n).map(|i| if i < classes { i } else { rng.random_range(0..classes) }).collect();
    (Matrix::from_rows(&rows).unwrap(), y)
}

/// Random hand-kind dataset whose label depends on the first two features.
fn random_hand_dataset(rng: &mut ChaCha8Rng, n: usize, classes: usize) -> Dataset {
    let names: Vec<String> = (0..classes).map(|c| format!("c{c}")).collect();
    let mut d = Dataset::new(Kind::Hand, names.clone());
    for i in 0..n {
        let v: Vec<f64> = (0..Kind::Hand.feature_length()).map(|_| rng.random_range(0.0..180.0)).collect();
        let label = if i < classes {
            i
        } else {
            (((v[0] + v[1]) / 360.0 * classes as f64) as usize).min(classes - 1)
        };
        d.push(&names[label], format!("r{i}"), v).unwrap();
    }
    d
}

fn transform(frame: &LandmarkFrame, rng: &mut ChaCha8Rng) -> LandmarkFrame {
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    let s = rng.random_range(0.1..10.0);
    let (tx, ty) = (rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0));
    let flip = if rng.random_bool(0.5) { -1.0 } else { 1.0 };
    let (sin, cos) = theta.sin_cos();
    let mut out = frame.clone();
    for l in &mut out.landmarks {
        let x = flip * l.x;
        let (rx, ry) = (cos * x - sin * l.y, sin * x + cos * l.y);
        l.x = s * rx + tx;
        l.y = s * ry + ty;
    }
    out
}

// ---------------------------------------------------------------- criteria

fn geometry_oracles() -> Outcome {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 1000 {
        let mut p = || Landmark::at(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let (a, b, c) = (p(), p(), p());
        if (a.x - b.x).hypot(a.y - b.y) < 1e-3 || (c.x - b.x).hypot(c.y - b.y) < 1e-3 {
            continue;
        }
        let got = angle_at(&a, &b, &c).map_err(|e| e.to_string())?;
        worst = worst.max((got - dot_angle(&a, &b, &c)).abs());
        n += 1;
    }
    check(worst <= 1e-9, format!("angle_at differs from the dot-product oracle by {worst:e} deg"))?;

    let template = &mudra_templates()[0];
    let mut inv_worst: f64 = 0.0;
    for i in 0..100 {
        let frame = if i % 2 == 0 {
            synth_hand_frame(template, 8.0, i % 4 == 0, &mut rng)
        } else {
            let lm = (0..Kind::Body.landmark_count())
                .map(|_| Landmark::at(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
                .collect();
            LandmarkFrame::new(Kind::Body, lm)
        };
        let topo = frame.kind.topology();
        let base = extract_features(&frame, topo, 0.3).map_err(|e| e.to_string())?;
        let moved = extract_features(&transform(&frame, &mut rng), topo, 0.3).map_err(|e| e.to_string())?;
        for (a, b) in base.values.iter().zip(&moved.values) {
            inv_worst = inv_worst.max((a - b).abs());
        }
    }
    check(inv_worst <= 1e-6, format!("features move by {inv_worst:e} deg under similarity transforms"))?;
    within(clock.elapsed(), 5.0)?;
    Ok(format!(
        "max oracle gap {worst:.1e} deg over 1000 triples, max invariance gap {inv_worst:.1e} deg over 100 transforms, {:.2}s",
        clock.elapsed().as_secs_f64()
    ))
}

fn classifier_checks() -> Outcome {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_lr: f64 = 0.0;
    let mut worst_mlp: f64 = 0.0;
    for t in 0..20 {
        let classes = 3;
        let (x, y) = random_problem(&mut rng, 10, 4, classes);
        let params: Vec<f64> = (0..classes * 5).map(|_| rng.random_range(-0.5..0.5)).collect();
        let (_, g) = softmax_loss_and_grad(&params, &x, &y, classes, 0.01);
        let ng = numeric_grad(&params, |p| softmax_loss_and_grad(p, &x, &y, classes, 0.01).0);
        worst_lr = worst_lr.max(relative_error(&g, &ng));

        let mlp = Mlp::new_random(4, 6, classes, 0.01, t as u64);
        let (_, g) = mlp.loss_and_grad(&x, &y);
        let ng = numeric_grad(&mlp.params, |p| {
            let mut m = mlp.clone();
            m.params.copy_from_slice(p);
            m.loss_and_grad(&x, &y).0
        });
        worst_mlp = worst_mlp.max(relative_error(&g, &ng));
    }
    check(worst_lr <= 1e-4, format!("logistic gradient relative error {worst_lr:e}"))?;
    check(worst_mlp <= 1e-4, format!("mlp gradient relative error {worst_mlp:e}"))?;

    for t in 0..10 {
        let d = random_hand_dataset(&mut rng, 90, 3);
        let spec = ModelSpec::new(Family::Gbdt)
            .with("n_rounds", 20)
            .with("max_depth", 3)
            .with("learning_rate", 0.3)
            .with_seed(t);
        let m = train(&spec, &d).map_err(|e| e.to_string())?;
        let Fitted::Gbdt(g) = &m.fitted else {
            return Err("gbdt spec did not fit a gbdt".into());
        };
        check(
            g.loss_history.windows(2).all(|w| w[1] <= w[0]),
            format!("gbdt loss increased on dataset {t}: {:?}", g.loss_history),
        )?;
    }

    let d = synth_mudra_dataset(20, 6.0, 3).map_err(|e| e.to_string())?;
    let probe: Vec<&[f64]> = d.rows();
    let families = [
        ModelSpec::new(Family::Knn),
        ModelSpec::new(Family::DecisionTree),
        ModelSpec::new(Family::RandomForest).with("n_estimators", 10),
        ModelSpec::new(Family::GaussianNb),
        ModelSpec::new(Family::LogisticRegression).with("max_iter", 200),
        ModelSpec::new(Family::LinearSvm),
        ModelSpec::new(Family::Mlp).with("hidden", 16),
        ModelSpec::new(Family::Gbdt).with("n_rounds", 10),
        ModelSpec::new(Family::OneVsRest(Box::new(ModelSpec::new(Family::GaussianNb)))),
    ];
    for spec in families {
        let spec = spec.with_seed(9);
        let a = train(&spec, &d).map_err(|e| e.to_string())?;
        let b = train(&spec, &d).map_err(|e| e.to_string())?;
        check(a == b, format!("{spec} is not deterministic"))?;
        for x in &probe {
            let (pa, pb) = (a.predict_values(x).unwrap(), b.predict_values(x).unwrap());
            check(pa == pb, format!("{spec} predictions differ between identical fits"))?;
        }
    }
    within(clock.elapsed(), 60.0)?;
    Ok(format!(
        "gradient rel. error logistic {worst_lr:.1e}, mlp {worst_mlp:.1e} (20 problems of 10x4, 3 classes, step 1e-5); gbdt loss monotone on 10 datasets; 9 families deterministic; {:.2}s",
        clock.elapsed().as_secs_f64()
    ))
}

fn knn_equivalence() -> Outcome {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let classes = 5;
    let train_set = random_hand_dataset(&mut rng, 200, classes);
    let queries: Vec<Vec<f64>> = (0..200)
        .map(|_| (0..Kind::Hand.feature_length()).map(|_| rng.random_range(0.0..180.0)).collect())
        .collect();
    let pairs: Vec<(Vec<f64>, usize)> =
        train_set.samples.iter().map(|s| (s.features.values.clone(), s.label)).collect();
    for k in [3, 5, 9] {
        let m = train(&ModelSpec::new(Family::Knn).with("k", k), &train_set).map_err(|e| e.to_string())?;
        let agree = queries
            .iter()
            .filter(|q| m.predict_values(q).unwrap().label == knn_oracle(&pairs, q, k as usize, classes))
            .count();
        check(agree == queries.len(), format!("k={k}: {agree}/200 predictions agree"))?;
    }
    within(clock.elapsed(), 5.0)?;
    Ok(format!("200/200 agreement for k = 3, 5, 9; {:.2}s", clock.elapsed().as_secs_f64()))
}

fn benchmark_criteria() -> (Outcome, Outcome) {
    let clock = Instant::now();
    let run = || -> Result<_, String> {
        let d = synth_mudra_dataset(500, 6.0, 42).map_err(|e| e.to_string())?;
        run_benchmark(&d, &SplitSpec::default(), &table1_configs(42)).map_err(|e| e.to_string())
    };
    let outcome = match run() {
        Ok(o) => o,
        Err(e) => return (Err(e.clone()), Err(e)),
    };
    let elapsed = clock.elapsed();

    let c4 = (|| {
        check(
            (outcome.train_size, outcome.test_size) == (2000, 500),
            format!("split is {}/{}", outcome.train_size, outcome.test_size),
        )?;
        let gbdt = outcome
            .row_index("GBDT with RandomSearch CV")
            .ok_or("no GBDT with RandomSearch CV row")?;
        let acc = outcome.rows[gbdt].accuracy;
        let rank = outcome.rank(gbdt);
        check(acc >= 0.95, format!("GBDT+search accuracy {acc:.3} < 0.95"))?;
        check(rank <= 3, format!("GBDT+search ranks {rank} of {}", outcome.rows.len()))?;
        within(elapsed, 600.0)?;
        Ok(format!(
            "GBDT+search accuracy {acc:.3}, rank {rank} of {} configurations, {:.1}s",
            outcome.rows.len(),
            elapsed.as_secs_f64()
        ))
    })();

    let c5 = (|| {
        let r = &outcome.best_report;
        check(r.classes.len() == 5, format!("{} classes in the report", r.classes.len()))?;
        let support: u64 = r.classes.iter().map(|c| c.support).sum();
        check(support == 500, format!("supports sum to {support}"))?;
        let worst = r.classes.iter().min_by(|a, b| a.f1.total_cmp(&b.f1)).unwrap();
        check(worst.f1 >= 0.90, format!("{} F1 {:.3} < 0.90", worst.name, worst.f1))?;
        Ok(format!(
            "best model {}: min per-class F1 {:.3} ({}), supports sum to {support}",
            outcome.rows[outcome.best].classifier, worst.f1, worst.name
        ))
    })();
    (c4, c5)
}

fn correction_properties() -> Outcome {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let topo = Kind::Hand.topology();
    let templates = mudra_templates();

    for trial in 0..100 {
        let t = &templates[trial % templates.len()];
        let frame = synth_hand_frame(t, 6.0, trial % 2 == 1, &mut rng);
        let observed = extract_features(&frame, topo, 0.3).map_err(|e| e.to_string())?.values;

        // monotonicity: widening every band never adds or grows a deviation
        let mut narrow = PoseProfile::new("p", Kind::Hand);
        let mut wide = PoseProfile::new("p", Kind::Hand);
        for (j, joint) in topo.angle_joints.iter().enumerate() {
            let target = (observed[j] + rng.random_range(-25.0..25.0)).clamp(0.0, 180.0);
            let tol = rng.random_range(0.5..15.0);
            narrow = narrow.angle(joint.name, target, tol);
            wide = wide.angle(joint.name, target, tol + rng.random_range(0.0..10.0));
        }
        let slope_target = rng.random_range(-60.0..60.0);
        let slope_tol = rng.random_range(1.0..20.0);
        narrow = narrow.slope("palm_axis", slope_target, slope_tol);
        wide = wide.slope("palm_axis", slope_target, slope_tol + 5.0);
        let rn = evaluate_pose(&frame, &narrow, 0.3).map_err(|e| e.to_string())?;
        let rw = evaluate_pose(&frame, &wide, 0.3).map_err(|e| e.to_string())?;
        for dw in &rw.deviations {
            let dn = rn.deviations.iter().find(|d| d.constraint_name == dw.constraint_name);
            check(
                dn.is_some_and(|dn| dw.excess <= dn.excess),
                format!("trial {trial}: widening {} increased its deviation", dw.constraint_name),
            )?;
        }
        check(!rn.correct || rw.correct, format!("trial {trial}: widening turned correct into incorrect"))?;

        // locality: turning one joint only affects that joint's constraint
        let kin = HandKinematics::from_landmarks(&t.landmarks);
        let base = kin.frame(&kin.angles);
        let base_values = extract_features(&base, topo, 0.3).map_err(|e| e.to_string())?.values;
        let mut profile = PoseProfile::new("p", Kind::Hand);
        for (j, joint) in topo.angle_joints.iter().enumerate() {
            let tol = rng.random_range(4.0..10.0);
            let target = base_values[j] + rng.random_range(-0.5..0.5) * tol;
            profile = profile.angle(joint.name, target, tol);
        }
        let before = evaluate_pose(&base, &profile, 0.3).map_err(|e| e.to_string())?;
        check(before.correct, format!("trial {trial}: unperturbed frame already deviates"))?;
        let finger = rng.random_range(0..5);
        let turn = rng.random_range(1..4);
        let mut angles = kin.angles;
        // bending further changes the interior angle by exactly |step|
        let step = rng.random_range(20.0..40.0) * if angles[finger][turn] < 0.0 { -1.0 } else { 1.0 };
        angles[finger][turn] += step;
        let after = evaluate_pose(&kin.frame(&angles), &profile, 0.3).map_err(|e| e.to_string())?;
        let joint = topo.angle_joints[3 * finger + turn - 1].name;
        let names: BTreeSet<&str> = after.deviations.iter().map(|d| d.constraint_name.as_str()).collect();
        check(
            names == BTreeSet::from([joint]),
            format!("trial {trial}: turning {joint} flagged {names:?}"),
        )?;
    }

    // self-consistency: a profile built from held poses accepts those poses
    let mut total = 0;
    let mut accepted = 0;
    let mut worst: f64 = 1.0;
    for (i, t) in templates.iter().enumerate() {
        let frames: Vec<LandmarkFrame> = (0..200).map(|_| synth_hand_frame(t, 1.0, false, &mut rng)).collect();
        let mut d = Dataset::new(Kind::Hand, vec![t.name.clone()]);
        for (n, f) in frames.iter().enumerate() {
            let v = extract_features(f, topo, 0.3).map_err(|e| e.to_string())?.values;
            d.push(&t.name, format!("{i}:{n}"), v).map_err(|e| e.to_string())?;
        }
        let profile = profile_from_samples(&d, 2.0, 5.0).map_err(|e| e.to_string())?;
        let ok = frames
            .iter()
            .filter(|f| evaluate_pose(f, &profile, 0.3).map(|r| r.correct).unwrap_or(false))
            .count();
        worst = worst.min(ok as f64 / frames.len() as f64);
        accepted += ok;
        total += frames.len();
    }
    let rate = accepted as f64 / total as f64;
    check(rate >= 0.95, format!("profile_from_samples accepts {:.1}% of its sources", rate * 100.0))?;
    Ok(format!(
        "monotonicity and locality hold on 100 pairs; self-consistency {:.1}% (worst pose {:.1}%) at 1 deg hold jitter; {:.2}s",
        rate * 100.0,
        worst * 100.0,
        clock.elapsed().as_secs_f64()
    ))
}

fn stream_replay() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = synth_mudra_dataset(100, 6.0, 7).map_err(|e| e.to_string())?;
    let model = train(&ModelSpec::new(Family::Knn).with("k", 5), &d).map_err(|e| e.to_string())?;
    let store = Arc::new(LogStore::open(dir.path()).map_err(|e| e.to_string())?);
    let manager = SessionManager::new(
        Arc::new(model),
        Arc::new(ProfileSet::default()),
        store.clone(),
        SessionConfig::default(),
    );
    let server = Server::bind("127.0.0.1:0", Arc::new(manager)).map_err(|e| e.to_string())?;
    let addr = server.local_addr().map_err(|e| e.to_string())?;
    let stop = server.shutdown_handle().map_err(|e| e.to_string())?;
    let worker = std::thread::spawn(move || server.run());

    let frames = synth_recording("Prana", 300, 30.0, 6.0, 11).map_err(|e| e.to_string())?;
    let result = replay(addr, "acceptance", &frames);
    stop.shutdown();
    let _ = worker.join();
    let r = result.map_err(|e| e.to_string())?;

    let mut labels = Vec::new();
    let mut latencies = Vec::new();
    for (i, reply) in r.replies.iter().enumerate() {
        let ServerMessage::Result(res) = reply else {
            return Err(format!("reply {} is not a result: {reply:?}", i + 1));
        };
        check(res.seq == i as u64 + 1, format!("reply {} carries seq {}", i + 1, res.seq))?;
        labels.push(res.label.clone());
        latencies.push(res.lat_ms);
    }
    check(labels.len() == 300, format!("{} results for 300 frames", labels.len()))?;
    let first_stable = labels.iter().position(|l| l != UNSTABLE).ok_or("never stabilized")? + 1;
    check(first_stable <= 15, format!("first stable label at frame {first_stable}"))?;
    check(
        labels[first_stable - 1..].iter().all(|l| l == "Prana"),
        "smoothed label is not Prana throughout",
    )?;
    check(r.logged_frames == 300, format!("{} frames logged", r.logged_frames))?;

    let today = chrono::Utc::now().date_naive();
    let report = activity_report("acceptance", DateRange::last_days(today, 7), &store).map_err(|e| e.to_string())?;
    let seconds = report.poses.get("Prana").map(|p| p.seconds).ok_or("no Prana time in the report")?;
    let duration = (frames[299].timestamp_ms - frames[0].timestamp_ms) as f64 / 1000.0;
    let interval = 1.0 / 30.0;
    check(
        (seconds - duration).abs() <= interval,
        format!("report says {seconds:.3}s of Prana, replay lasted {duration:.3}s"),
    )?;

    latencies.sort_by(f64::total_cmp);
    let max = *latencies.last().unwrap();
    let median = latencies[latencies.len() / 2];
    check(max < 5.0, format!("slowest frame took {max:.3} ms"))?;
    Ok(format!(
        "300 in-order results, stable at frame {first_stable}, report {seconds:.3}s vs replay {duration:.3}s, latency median {median:.3} ms max {max:.3} ms"
    ))
}

fn main() {
    let (c4, c5) = benchmark_criteria();
    let results: Vec<(&str, Outcome)> = vec![
        ("geometry oracles", geometry_oracles()),
        ("classifier determinism and gradients", classifier_checks()),
        ("knn brute-force equivalence", knn_equivalence()),
        ("model comparison on synthetic mudras", c4),
        ("per-class report of the best model", c5),
        ("correction properties", correction_properties()),
        ("end-to-end stream replay", stream_replay()),
    ];
    let mut failed = 0;
    for (i, (name, r)) in results.iter().enumerate() {
        match r {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
