use iaware::cli::{self, RunConfig};
use iaware::filter::{self, FilterState, Scan};
use iaware::interaction::InteractionModel;
use iaware::{Execution, RandomSource};

fn config(name: &str) -> RunConfig {
    let path = format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"));
    RunConfig::from_file(path).unwrap()
}

fn inputs(run: &RunConfig) -> (iaware::scenario::GroundTruth, Vec<Scan>) {
    let truth = cli::simulate_truth(run).unwrap();
    let scans = cli::simulate_scans(run, &truth);
    (truth, scans)
}

#[test]
fn parallel_and_sequential_runs_are_bit_identical() {
    for name in ["braking.cfg", "swarm.cfg"] {
        let run = config(name);
        let (truth, scans) = inputs(&run);
        let mut cfg = cli::filter_config(&run, &truth).unwrap();
        let rng = RandomSource::new(run.seed);
        cfg.execution = Execution::Sequential;
        let seq = cli::run_filter(&cfg, &scans, &rng).unwrap();
        cfg.execution = Execution::Parallel;
        let par = cli::run_filter(&cfg, &scans, &rng).unwrap();
        assert_eq!(seq, par, "{name}");
    }
}

#[test]
fn empty_scans_never_confirm_a_birth() {
    let mut run = config("braking.cfg");
    run.scenario.num_frames = 20;
    let (truth, _) = inputs(&run);
    let cfg = cli::filter_config(&run, &truth).unwrap();
    let (p_s, p_d, r_b) = (cfg.p_s, cfg.p_d, run.birth.r);
    let missed = |r: f64| {
        let present = r * (1.0 - p_d);
        present / (present + 1.0 - r)
    };

    let rng = RandomSource::new(5);
    let mut state = FilterState::new();
    for k in 0..20 {
        state = filter::step(&state, &Scan::new(k, vec![]), &cfg, &rng).unwrap();
        assert!(state.estimates.is_empty(), "frame {k}");
        for t in state.posterior.tracks() {
            let mut want = missed(r_b);
            for _ in t.label().birth_time..k {
                want = missed(p_s * want);
            }
            assert!((t.r() - want).abs() < 1e-12, "frame {k} {}: {} vs {want}", t.label(), t.r());
        }
    }
}

#[test]
fn flat_interaction_changes_no_metric() {
    let mut run = config("swarm.cfg");
    run.filter.interaction.sigma_d = f64::INFINITY;
    let (truth, scans) = inputs(&run);
    let s = cli::compare_on(&run, &truth, &scans).unwrap();
    assert_eq!(s.baseline, s.interaction);
    assert_eq!(s.ospa_difference(), 0.0);
}

#[test]
fn straight_traffic_is_barely_affected_by_interaction() {
    let mut run = config("braking.cfg");
    run.scenario.vehicles.brake_frame = None;
    for seed in 1..=5 {
        let run = run.clone().with_seed(seed);
        let (truth, scans) = inputs(&run);
        let s = cli::compare_on(&run, &truth, &scans).unwrap();
        let rel = s.ospa_difference().abs() / s.baseline.ospa_total;
        assert!(rel < 0.05, "seed {seed}: relative OSPA change {rel}");
    }
}

#[test]
fn swarm_interaction_does_not_worsen_cardinality() {
    let base = config("swarm.cfg");
    let (mut b, mut i) = (0.0, 0.0);
    for seed in 1..=20 {
        let run = base.clone().with_seed(seed);
        let (truth, scans) = inputs(&run);
        let s = cli::compare_on(&run, &truth, &scans).unwrap();
        b += s.baseline.abs_card_error;
        i += s.interaction.abs_card_error;
    }
    assert!(i <= b + 1e-12, "interaction {i} vs baseline {b}");
}

#[test]
fn interaction_engages_in_both_regimes() {
    for (name, model) in [("braking.cfg", InteractionModel::FrontVehicle), ("swarm.cfg", InteractionModel::Swarm)] {
        let run = config(name);
        assert_eq!(run.filter.interaction.model, model);
        let (truth, scans) = inputs(&run);
        let cfg = cli::filter_config(&run, &truth).unwrap();
        let out = cli::run_filter(&cfg, &scans, &RandomSource::new(1)).unwrap();
        let warm = cfg.interaction_warmup as usize;
        assert!(out.diagnostics[..warm].iter().all(|d| !d.interaction_active));
        assert!(out.diagnostics[warm..].iter().all(|d| d.interaction_active));
        assert!(out.diagnostics.iter().map(|d| d.interaction_pairs).sum::<usize>() > 0, "{name}");
    }
}

#[test]
fn full_scale_run_completes() {
    let run = config("scale.cfg");
    let (truth, scans) = inputs(&run);
    assert_eq!(truth.tracks.len(), 60);
    assert_eq!(scans.len(), 245);
    let cfg = cli::filter_config(&run, &truth).unwrap();
    let out = cli::run_filter(&cfg, &scans, &RandomSource::new(run.seed)).unwrap();
    assert_eq!(out.diagnostics.len(), 245);
    let metrics = cli::evaluate(&truth, &out.estimates, &run.metrics).unwrap();
    let mean = cli::MetricMeans::of(&metrics);
    assert!(mean.ospa_total < 20.0, "mean OSPA {}", mean.ospa_total);
}
