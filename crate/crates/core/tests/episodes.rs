use camrobot::episode::{read_episode, write_episode};
use camrobot::eval::{add_metric, default_eval_points};
use camrobot::heatmap::Heatmap;
use camrobot::kinematics::{panda_like, panda_ready_pose, PartLabel};
use camrobot::pipeline::{
    estimate_episode, estimate_frame, AllVisibleDetector, DecodeSettings, SelectionConfig,
};
use camrobot::pnp::PnpOptions;
use camrobot::synth::{
    default_intrinsics, generate_episode, ScenarioKind, ScenarioSpec, PARTIAL_VIEW_DISTANCE,
};

fn scenario(kind: ScenarioKind, seed: u64, n_frames: usize) -> ScenarioSpec {
    ScenarioSpec {
        kind,
        seed,
        n_frames,
        home_q: Some(panda_ready_pose().angles),
        distance_range: match kind {
            ScenarioKind::BaseOnly | ScenarioKind::EndEffectorOnly => PARTIAL_VIEW_DISTANCE,
            _ => ScenarioSpec::default().distance_range,
        },
        ..ScenarioSpec::default()
    }
}

fn everything() -> AllVisibleDetector {
    AllVisibleDetector {
        parts: vec![PartLabel::Base, PartLabel::EndEffector],
    }
}

#[test]
fn manifest_round_trip_is_lossless() {
    let (chain, layout) = panda_like();
    let mut s = scenario(ScenarioKind::RobotInAndOut, 4, 5);
    s.heatmap_noise = 0.05;
    s.pixel_noise_sigma = 1.0;
    s.embedding_seed = Some(11);
    let ep = generate_episode(&chain, &layout, &default_intrinsics(), &s)
        .unwrap()
        .episode;
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_episode(dir.path(), &ep).unwrap();
    let back = read_episode(&manifest).unwrap();
    assert_eq!(back, ep);
}

#[test]
fn corrupt_heatmap_names_its_frame() {
    let (chain, layout) = panda_like();
    let ep = generate_episode(
        &chain,
        &layout,
        &default_intrinsics(),
        &scenario(ScenarioKind::RobotInView, 1, 3),
    )
    .unwrap()
    .episode;
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_episode(dir.path(), &ep).unwrap();
    std::fs::write(
        dir.path().join("heatmaps/frame_0002/kp_03.bin"),
        [1u8, 2, 3],
    )
    .unwrap();
    let err = read_episode(&manifest).unwrap_err().to_string();
    assert!(err.contains("frame 2"), "{err}");
}

#[test]
fn noiseless_episode_recovers_ground_truth() {
    let (chain, layout) = panda_like();
    let points = default_eval_points(&chain, &layout).unwrap();
    for seed in 0..3 {
        let ep = generate_episode(
            &chain,
            &layout,
            &default_intrinsics(),
            &scenario(ScenarioKind::RobotInView, seed, 10),
        )
        .unwrap()
        .episode;
        let gt = ep.ground_truth.unwrap();
        let est = estimate_episode(
            &ep.frames,
            &chain,
            &layout,
            &ep.intrinsics,
            &everything(),
            &DecodeSettings::new(ep.heatmap_stride as f64, ep.sigma),
            &SelectionConfig::for_sigma(ep.sigma).unwrap(),
            &PnpOptions::default(),
        )
        .unwrap();
        let add = add_metric(&est.pose, &gt, &points).unwrap();
        assert!(add < 1e-5, "seed {seed}: ADD {add}");
        assert!(est.frames.iter().all(|f| f.kept.len() == 12));
    }
}

#[test]
fn alternating_partial_views_pool_no_worse_than_frames() {
    let (chain, layout) = panda_like();
    let points = default_eval_points(&chain, &layout).unwrap();
    let base = layout.ids_for_part(&PartLabel::Base);
    let hand = layout.ids_for_part(&PartLabel::EndEffector);
    for seed in 0..5 {
        let mut ep = generate_episode(
            &chain,
            &layout,
            &default_intrinsics(),
            &scenario(ScenarioKind::RobotInView, seed, 6),
        )
        .unwrap()
        .episode;
        for f in ep.frames.iter_mut() {
            let hidden = if f.frame_index % 2 == 0 { &hand } else { &base };
            for id in hidden {
                let h = &f.heatmaps[id];
                f.heatmaps
                    .insert(*id, Heatmap::zeros(h.width(), h.height()).unwrap());
            }
        }
        let gt = ep.ground_truth.unwrap();
        let dec = DecodeSettings::new(ep.heatmap_stride as f64, ep.sigma);
        let cfg = SelectionConfig::for_sigma(ep.sigma).unwrap();
        let opts = PnpOptions::default();
        let worst = ep
            .frames
            .iter()
            .map(|f| {
                let e = estimate_frame(
                    f,
                    &chain,
                    &layout,
                    &ep.intrinsics,
                    &everything(),
                    &dec,
                    &cfg,
                    &opts,
                )
                .unwrap();
                assert_eq!(e.kept.len(), 6);
                add_metric(&e.pose, &gt, &points).unwrap()
            })
            .fold(0.0f64, f64::max);
        let pooled = estimate_episode(
            &ep.frames,
            &chain,
            &layout,
            &ep.intrinsics,
            &everything(),
            &dec,
            &cfg,
            &opts,
        )
        .unwrap();
        let add = add_metric(&pooled.pose, &gt, &points).unwrap();
        assert!(
            add <= worst.max(1e-9),
            "seed {seed}: pooled {add} vs worst frame {worst}"
        );
    }
}
