//! One pass/fail line per acceptance criterion; exits nonzero on any failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use handguide_cli::args::{BenchArgs, MethodArg, PresetArg, ReplayArgs};
use handguide_cli::commands;
use handguide_core::guidance::{
    decompose_traced, joint_step, scaled_target, session_step, GuidanceConfig, GuidanceState, HandSample,
    LimitPolicy,
};
use handguide_core::model::{samples, Configuration, JointLimits, RobotModel};
use handguide_core::registration::bench::{draw_trial, run_benchmark, BenchConfig, BenchReport, Scenario};
use handguide_core::registration::{icp, model_cloud, IcpParams, Method, Preset, MODEL_SAMPLES};
use handguide_core::simcontrol::{controller_tick, synth_scene, Clutter, ControllerState, MotionLimits, SceneSpec};
use nalgebra::{Point3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_q(rng: &mut ChaCha8Rng, model: &RobotModel) -> Configuration {
    Configuration(
        model
            .joints
            .iter()
            .map(|j| rng.random_range(j.limits.lower..=j.limits.upper))
            .collect(),
    )
}

fn random_vector(rng: &mut ChaCha8Rng, scale: f64) -> Vector3<f64> {
    Vector3::new(
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
    )
}

/// Center of link `k + 1`'s primitive, which lies inside zone `k`.
fn zone_center(model: &RobotModel, q: &[f64], k: usize) -> Point3<f64> {
    let poses = model.forward_kinematics(q).unwrap();
    let c = model.links[k + 1].collision.as_ref().unwrap();
    poses[k + 1].compose(c.placement()).transform_point(&Point3::origin())
}

fn closed_form() -> Outcome {
    let start = Instant::now();
    let z = Unit::new_unchecked(Vector3::z());
    let limits = JointLimits {
        lower: -3.0,
        upper: 3.0,
        max_velocity: 1.0,
    };
    let step = joint_step(
        &Point3::origin(),
        &z,
        0.0,
        &limits,
        &Point3::new(1.0, 0.0, 0.0),
        &Point3::new(1.0, 0.1, 0.0),
        &GuidanceConfig::default(),
    );
    let elapsed = start.elapsed().as_secs_f64();
    let angle = 0.1f64.atan2(1.0);
    let residual = 1.01f64.sqrt() - 1.0;
    let e_angle = (step.applied - angle).abs();
    let e_res = (step.residual.norm() - residual).abs();
    check(
        e_angle <= 1e-9 && e_res <= 1e-9 && (step.applied - 0.0996687).abs() < 5e-8 && (step.residual.norm() - 0.0049876).abs() < 5e-8 && elapsed < 1.0,
        format!(
            "dtheta {:.7} (err {e_angle:.1e}), |residual| {:.7} (err {e_res:.1e}), {elapsed:.2e} s",
            step.applied,
            step.residual.norm()
        ),
    )
}

fn residual_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut violations = 0;
    let mut steps_checked = 0;
    for i in 0..10_000 {
        let model = samples::random_chain(rng.random_range(2..=8), i);
        let q = random_q(&mut rng, &model);
        let prev = Point3::from(random_vector(&mut rng, 1.0));
        let d = random_vector(&mut rng, 0.2);
        let config = GuidanceConfig {
            limit_policy: if rng.random_bool(0.5) { LimitPolicy::Clamp } else { LimitPolicy::Reject },
            max_step_angle: rng.random_range(0.01..3.0),
            ..GuidanceConfig::default()
        };
        let start = rng.random_range(0..model.joint_count());
        let (_, steps) = decompose_traced(&model, &q, &prev, &(prev + d), start, &config).unwrap();
        let mut before = d.norm();
        for (_, s) in &steps {
            steps_checked += 1;
            if s.residual.norm() > before + 1e-12 {
                violations += 1;
            }
            before = s.residual.norm();
        }
    }
    check(
        violations == 0,
        format!("10000 chains, {steps_checked} joint steps, {violations} increases"),
    )
}

fn limit_safety() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut failures = 0;
    let mut clamp_steps = 0;
    let mut rejected = 0;
    for i in 0..10_000 {
        let model = samples::random_chain(rng.random_range(2..=8), 50_000 + i);
        let policy = if i % 2 == 0 { LimitPolicy::Clamp } else { LimitPolicy::Reject };
        let config = GuidanceConfig {
            limit_policy: policy,
            max_step_angle: rng.random_range(0.05..1.5),
            ..GuidanceConfig::default()
        };
        let mut state = GuidanceState::new(random_q(&mut rng, &model));
        let k = rng.random_range(0..model.joint_count());
        let mut p = zone_center(&model, &state.q, k);
        for n in 0..10 {
            let sample = HandSample::new(n as f64 / 30.0, p);
            let (next, update) = session_step(&state, &model, &sample, &config).unwrap();
            if let (Some(update), handguide_core::guidance::Engagement::Engaged { zone, last }) = (&update, state.mode) {
                match policy {
                    LimitPolicy::Clamp => {
                        clamp_steps += 1;
                        if !model.within_limits(&next.q) {
                            failures += 1;
                        }
                    }
                    LimitPolicy::Reject => {
                        let target = scaled_target(&last, &p, config.sensitivity);
                        let (_, steps) = decompose_traced(&model, &state.q, &last, &target, zone, &config).unwrap();
                        for (j, s) in steps {
                            if !model.joints[j].limits.contains(state.q[j] + s.desired) {
                                rejected += 1;
                                if update.dq[j] != 0.0 || next.q[j] != state.q[j] {
                                    failures += 1;
                                }
                            }
                        }
                    }
                }
            }
            state = next;
            p += random_vector(&mut rng, 0.15);
        }
    }
    check(
        failures == 0,
        format!("10000 sessions, {clamp_steps} clamp updates, {rejected} rejected joint steps, {failures} violations"),
    )
}

fn entry_frames() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut moved = 0;
    let mut entries = 0;
    while entries < 1_000 {
        let model = samples::random_chain(rng.random_range(2..=8), rng.random());
        let q = random_q(&mut rng, &model);
        let k = rng.random_range(0..model.joint_count());
        let inside = zone_center(&model, &q, k) + random_vector(&mut rng, 0.01);
        let config = GuidanceConfig {
            limit_policy: if rng.random_bool(0.5) { LimitPolicy::Clamp } else { LimitPolicy::Reject },
            ..GuidanceConfig::default()
        };
        let mut state = GuidanceState::new(q.clone());
        if rng.random_bool(0.5) {
            state = session_step(&state, &model, &HandSample::untracked(0.0), &config).unwrap().0;
        }
        let (next, update) = session_step(&state, &model, &HandSample::new(1.0, inside), &config).unwrap();
        if next.mode.zone().is_none() {
            continue;
        }
        entries += 1;
        if update.is_some() || next.q != q {
            moved += 1;
        }
    }
    check(moved == 0, format!("{entries} entries, {moved} moved the arm"))
}

fn icp_recovery() -> Outcome {
    let model = samples::kr5_like();
    let start = Instant::now();
    let mut good = 0;
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..50 {
        let trial = draw_trial(&model, 2024, i, 0.1, 10f64.to_radians());
        let spec = SceneSpec {
            base_pose: trial.truth,
            q: trial.q.clone(),
            clutter: Clutter::default(),
            noise_sigma: 0.0,
            preset: Preset::Big,
            seed: trial.scene_seed,
        };
        let scene = synth_scene(&model, &spec).unwrap();
        let source = model_cloud(&model, &trial.q, MODEL_SAMPLES, 7).unwrap();
        let Ok(result) = icp(&source, &scene.cloud, &trial.seed_pose, &IcpParams::default()) else {
            continue;
        };
        let (dt, dr) = scene.ground_truth.pose_error(&result.transform);
        worst = (worst.0.max(dt), worst.1.max(dr.to_degrees()), worst.2.max(result.rms));
        if dt < 1e-3 && dr < 0.1f64.to_radians() && result.rms < 1e-3 {
            good += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    check(
        good >= 48 && elapsed < 60.0,
        format!(
            "{good}/50 within 1 mm / 0.1 deg / rms 1 mm (worst {:.2e} m, {:.2e} deg, rms {:.2e}), {elapsed:.1} s",
            worst.0, worst.1, worst.2
        ),
    )
}

fn table_one() -> (Outcome, Option<BenchReport>) {
    let model = samples::kr5_like();
    let config = BenchConfig {
        scenarios: Scenario::standard(),
        trials: 20,
        seed: 0,
        noise_sigma: 0.003,
        ..BenchConfig::default()
    };
    let start = Instant::now();
    let report = match run_benchmark(&model, &config) {
        Ok(r) => r,
        Err(e) => return (Err(e.to_string()), None),
    };
    let elapsed = start.elapsed().as_secs_f64();
    println!("{}", report.table().trim_end());
    let mean = |name: &str| {
        report
            .stats
            .iter()
            .find(|s| s.scenario == name)
            .and_then(|s| s.mean)
            .unwrap_or(f64::INFINITY)
    };
    let (icp_small, congruent_small) = (mean("ICP-small"), mean("Congruent-small"));
    let outcome = check(
        icp_small <= 0.01 && congruent_small <= 0.03 && elapsed < 600.0,
        format!("ICP-small mean {icp_small:.5} m, Congruent-small mean {congruent_small:.5} m, {elapsed:.0} s"),
    );
    (outcome, Some(report))
}

fn clutter_degradation(segmented: Option<&BenchReport>) -> Outcome {
    let model = samples::kr5_like();
    let mut scenario = Scenario::new(Method::Congruent, Preset::Small);
    let base = BenchConfig {
        scenarios: vec![scenario],
        trials: 20,
        seed: 0,
        noise_sigma: 0.003,
        ..BenchConfig::default()
    };
    let fresh;
    let segmented = match segmented {
        Some(r) => r,
        None => {
            fresh = run_benchmark(&model, &base).map_err(|e| e.to_string())?;
            &fresh
        }
    };
    scenario.clutter = Clutter::touching_table();
    let cluttered = run_benchmark(
        &model,
        &BenchConfig {
            scenarios: vec![scenario],
            ..base.clone()
        },
    )
    .map_err(|e| e.to_string())?;
    let rate = |report: &BenchReport, s: &Scenario| {
        report
            .records_for(s)
            .iter()
            .filter(|r| r.within(0.05, 5f64.to_radians()))
            .count()
    };
    let seg = rate(segmented, &Scenario::new(Method::Congruent, Preset::Small));
    let clut = rate(&cluttered, &scenario);
    check(
        clut < seg,
        format!("Congruent-small success {seg}/20 segmented, {clut}/20 with a touching table"),
    )
}

fn controller() -> Outcome {
    let limits = MotionLimits {
        max_velocity: vec![1.0],
        max_acceleration: vec![2.0],
    };
    let mut s = ControllerState::at_rest(vec![0.0]);
    s.target = vec![1.0];
    let mut ticks = 0usize;
    while !s.is_settled() && ticks < 10_000 {
        s = controller_tick(&s, &limits, 0.001);
        ticks += 1;
    }
    let timing_ok = (ticks as i64 - 1500).abs() <= 2 && (s.position[0] - 1.0).abs() < 1e-6;

    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut violations = 0;
    let mut fuzz_ticks = 0;
    while fuzz_ticks < 10_000 {
        let n = rng.random_range(1..=8);
        let limits = MotionLimits {
            max_velocity: (0..n).map(|_| rng.random_range(0.1..3.0)).collect(),
            max_acceleration: (0..n).map(|_| rng.random_range(0.2..8.0)).collect(),
        };
        let dt = rng.random_range(0.001..0.02);
        let mut s = ControllerState::at_rest(vec![0.0; n]);
        for tick in 0..250 {
            if tick % rng.random_range(5..60) == 0 {
                s.target = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            }
            let next = controller_tick(&s, &limits, dt);
            for i in 0..n {
                let dv = (next.velocity[i] - s.velocity[i]).abs();
                if next.velocity[i].abs() > limits.max_velocity[i] + 1e-12 || dv > limits.max_acceleration[i] * dt + 1e-9 {
                    violations += 1;
                }
            }
            s = next;
            fuzz_ticks += 1;
        }
    }
    check(
        timing_ok && violations == 0,
        format!("settled in {ticks} ticks (closed form 1500), {fuzz_ticks} fuzz ticks, {violations} limit violations"),
    )
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let read = |p: PathBuf| std::fs::read(&p).map_err(|e| format!("{}: {e}", p.display()));
    let bench = |name: &str| -> Result<(Vec<u8>, Vec<u8>), String> {
        let out = dir.path().join(name);
        commands::bench(&BenchArgs {
            model: None,
            trials: 2,
            seed: 9,
            noise: 0.003,
            method: vec![MethodArg::Icp, MethodArg::Congruent],
            preset: vec![PresetArg::Small],
            clutter: false,
            out: Some(out.clone()),
        })
        .map_err(|e| e.to_string())?;
        Ok((read(out.join("table.txt"))?, read(out.join("records.jsonl"))?))
    };
    let replay = |name: &str| -> Result<Vec<u8>, String> {
        let out = dir.path().join(name);
        commands::replay_cmd(&ReplayArgs {
            model: Some(data("planar_two_link.json")),
            trajectory: data("two_sample.jsonl"),
            dt: handguide_core::simcontrol::DEFAULT_TICK,
            sensitivity: 1.0,
            max_step_angle: Some(0.5),
            max_acceleration: handguide_core::simcontrol::DEFAULT_MAX_ACCELERATION,
            out: Some(out.clone()),
        })
        .map_err(|e| e.to_string())?;
        read(out)
    };
    let (b1, b2) = (bench("bench-a")?, bench("bench-b")?);
    let (r1, r2) = (replay("replay-a.jsonl")?, replay("replay-b.jsonl")?);
    check(
        b1 == b2 && r1 == r2,
        format!(
            "bench {} + {} bytes identical: {}, replay {} bytes identical: {}",
            b1.0.len(),
            b1.1.len(),
            b1 == b2,
            r1.len(),
            r1 == r2
        ),
    )
}

fn throughput() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let model = samples::random_chain(8, 8);
    let config = GuidanceConfig::default();
    let limits = MotionLimits::from_model(&model, 2.0);
    let dt = handguide_core::simcontrol::DEFAULT_TICK;
    let ticks_per_sample = 8;
    let mut state = GuidanceState::new(model.zero_configuration());
    let mut ctrl = ControllerState::at_rest(state.q.0.clone());
    let mut p = zone_center(&model, &state.q, 7);
    let n = 20_000;
    let mut updates = 0;
    let start = Instant::now();
    for i in 0..n {
        let sample = HandSample::new(i as f64 / 30.0, p);
        let (next, update) = session_step(&state, &model, &sample, &config).unwrap();
        if update.is_some() {
            updates += 1;
        }
        state = next;
        ctrl.target = state.q.0.clone();
        for _ in 0..ticks_per_sample {
            ctrl = controller_tick(&ctrl, &limits, dt);
        }
        p += random_vector(&mut rng, 0.01);
        if state.mode.zone().is_none() {
            p = zone_center(&model, &state.q, rng.random_range(0..8));
        }
    }
    let rate = n as f64 / start.elapsed().as_secs_f64();
    check(
        rate >= 1000.0 && updates > n / 2,
        format!("{rate:.0} samples/s on an 8-joint chain ({updates} decompositions, {ticks_per_sample} ticks per sample)"),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |name: &str, outcome: Outcome| {
        match &outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    };
    report("single-joint closed form", closed_form());
    report("residual monotonicity fuzz", residual_monotonicity());
    report("limit safety fuzz", limit_safety());
    report("entry-frame rule", entry_frames());
    report("controller timing and limits", controller());
    report("throughput", throughput());
    report("determinism", determinism());
    report("ICP recovery", icp_recovery());
    let (table, bench) = table_one();
    report("benchmark table", table);
    report("clutter degradation", clutter_degradation(bench.as_ref()));
    if failed == 0 {
        println!("all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
