use std::path::PathBuf;

use crosswalk_core::calibration::*;
use crosswalk_core::decision::VehicleState;
use crosswalk_core::pedestrian::*;
use crosswalk_core::Error;

fn reference_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/reference")
}

fn reference(name: &str) -> TrajectoryDataset {
    load_trajectories(&reference_dir().join(name)).unwrap()
}

fn quick() -> CalibrationConfig {
    CalibrationConfig {
        search: PatternSearchConfig {
            restarts: 2,
            max_evals: 3000,
            ..Default::default()
        },
        ..Default::default()
    }
}

#[test]
fn shipped_reference_files_are_up_to_date() {
    let dir = tempfile::tempdir().unwrap();
    write_reference_files(dir.path()).unwrap();
    for (name, _) in reference_datasets().unwrap() {
        let fresh = std::fs::read(dir.path().join(name)).unwrap();
        let shipped = std::fs::read(reference_dir().join(name)).unwrap();
        assert!(fresh == shipped, "{name} differs from a fresh generation");
    }
}

#[test]
fn scenario_reference_roundtrip() {
    let d = reference("scenario_normal.csv");
    assert_eq!(d.trajectories.len(), 1);
    let tr = &d.trajectories[0];
    assert_eq!(tr.label, ScenarioLabel::CrossFirst);
    assert_eq!(tr.len(), 600);
    assert!((tr.dt - 0.01).abs() < 1e-12);
    let regenerated = trajectory_from_scenario(
        &crosswalk_core::scenarios::scenario_normal(),
        "scenario_normal",
        ScenarioLabel::CrossFirst,
        600,
    )
    .unwrap();
    assert_eq!(tr.d_ped, regenerated.d_ped);
    assert_eq!(tr.v_ped, regenerated.v_ped);
}

#[test]
fn fit_sfm_at_truth_is_exact() {
    let d = reference("sfm_reference.csv");
    let fit = fit_sfm(&d, &SfmParams::default(), &quick()).unwrap();
    assert_eq!(fit.rss, 0.0);
    assert_eq!(fit.params, SfmParams::default());
}

#[test]
fn fit_sfm_recovers_from_perturbed_start() {
    let d = reference("sfm_reference.csv");
    let truth = SfmParams::default();
    let v = truth.as_vector();
    let init = truth.with_vector(&[v[0] * 1.2, v[1] * 1.2, v[2] * 1.2, v[3] * 1.2]);
    let fit = fit_sfm(&d, &init, &CalibrationConfig::default()).unwrap();
    assert!(fit.rss <= fit.init_rss);
    assert!(fit.rss / (d.n_samples() as f64) < 1e-6);
    for (got, want) in fit.params.as_vector().iter().zip(v) {
        assert!(((got - want) / want).abs() < 0.05, "{got} vs {want}");
    }
}

#[test]
fn constant_speed_without_vehicle_fits_desired_speed() {
    let n = 300;
    let dt = 0.01;
    let trajectory = Trajectory {
        id: "walker".into(),
        label: ScenarioLabel::Yield,
        dt,
        t: (0..n).map(|k| k as f64 * dt).collect(),
        d_ped: (0..n).map(|k| -8.0 + 1.1 * k as f64 * dt).collect(),
        v_ped: vec![1.1; n],
    };
    let d = TrajectoryDataset {
        trajectories: vec![trajectory],
        source: "mem".into(),
    };
    let cfg = CalibrationConfig {
        context: RolloutContext::absent(),
        ..quick()
    };
    let fit = fit_sfm(&d, &SfmParams::default(), &cfg).unwrap();
    assert!((fit.params.v0 - 1.1).abs() < 1e-3, "{:?}", fit.params);
    assert!(fit.rss < fit.init_rss);
}

#[test]
fn fit_mdp_self_consistent() {
    let d = reference("mdp_reference.csv");
    let fit = fit_mdp(&d, &CrossingMdp::default(), &quick()).unwrap();
    assert_eq!(fit.rss, 0.0);
}

/// Rolls the fitted MDP out against a vehicle and reports whether the
/// pedestrian cleared the collision area before the vehicle reached the conflict point.
fn crosses_before_vehicle(model: &CrossingMdp, vehicle: VehicleContext) -> bool {
    let cfg = PedestrianConfig {
        mdp: *model,
        ..PedestrianConfig::with_model(PedestrianSource::Mdp)
    };
    let (d, _) = rollout(&cfg, None, REFERENCE_START, &vehicle, 2.0, 0.01, 1000).unwrap();
    let mut veh = match vehicle {
        VehicleContext::Kinematic { d_veh0, v_veh0, .. } => VehicleState::new(d_veh0, v_veh0),
        VehicleContext::Absent => return true,
    };
    let decel = match vehicle {
        VehicleContext::Kinematic { decel, .. } => decel,
        VehicleContext::Absent => 0.0,
    };
    for d_ped in d {
        if d_ped > 2.0 {
            return true;
        }
        if veh.d_veh <= 0.0 {
            return false;
        }
        veh = crosswalk_core::engine::vehicle_step(&veh, -decel, 0.01);
    }
    false
}

#[test]
fn fitted_mdp_behaves_per_label() {
    let d = reference("mdp_reference.csv");
    let mut template = CrossingMdp::default();
    template.rewards.goal = 20.0;
    template.rewards.proximity = 80.0;
    let split = |label| TrajectoryDataset {
        trajectories: d.trajectories.iter().filter(|t| t.label == label).cloned().collect(),
        source: d.source.clone(),
    };
    let ctx = RolloutContext::default();
    let cross = fit_mdp(&split(ScenarioLabel::CrossFirst), &template, &quick()).unwrap();
    assert!(cross.rss <= cross.init_rss);
    assert!(crosses_before_vehicle(&cross.model, ctx.cross_first));
    let yielding = fit_mdp(&split(ScenarioLabel::Yield), &template, &quick()).unwrap();
    assert!(!crosses_before_vehicle(&yielding.model, ctx.yield_));
}

#[test]
fn fitting_is_deterministic() {
    let d = reference("sfm_reference.csv");
    let init = SfmParams {
        v0: 1.5,
        ..Default::default()
    };
    let a = fit_sfm(&d, &init, &quick()).unwrap();
    let b = fit_sfm(&d, &init, &quick()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn file_errors() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    assert!(load_trajectories(&empty).is_err());
    assert!(matches!(
        load_trajectories(&dir.path().join("missing.csv")),
        Err(Error::Io(_))
    ));
    let dataset = reference("mdp_reference.csv");
    let path = dir.path().join("copy.csv");
    dataset.write_csv(std::fs::File::create(&path).unwrap()).unwrap();
    let back = load_trajectories(&path).unwrap();
    assert_eq!(back.trajectories, dataset.trajectories);
}
