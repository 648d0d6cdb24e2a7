use hbtree::analysis::{far_auth, frr_auth};
use hbtree::sim::{simulate, simulate_tree_protocol, Baseline, Rate, SimConfig};
use hbtree::{NoiseRate, ProtocolParams, RootSeed};

const SEEDS: u64 = 20;
const MIN_COVERAGE: u64 = 18;

fn params(r: usize, tau: usize) -> ProtocolParams {
    ProtocolParams {
        eps: NoiseRate::Dyadic { k: 2 },
        k_x: 32,
        k_y: 64,
        r,
        r_tr: r.min(48),
        tau,
        d: 2,
        beta: 8,
        s: 1,
        checked_noise: false,
    }
}

fn coverage(prediction: f64, rate: impl Fn(u64) -> Rate) -> u64 {
    (0..SEEDS).filter(|&s| rate(s).contains(prediction)).count() as u64
}

#[test]
fn forced_leaf_frr_intervals_cover_closed_form() {
    let want = frr_auth(48, 12, &0.25f64);
    let hits = coverage(want, |seed| {
        let mut cfg = SimConfig::new(params(48, 12), 30, 1500, RootSeed::from_u64(100 + seed));
        cfg.force_target_leaf = true;
        simulate_tree_protocol(&cfg).unwrap().frr
    });
    assert!(hits >= MIN_COVERAGE, "{hits}/{SEEDS} cover {want}");
}

#[test]
fn impostor_far_intervals_cover_closed_form() {
    let want: f64 = far_auth(32, 10);
    let hits = coverage(want, |seed| {
        let mut cfg = SimConfig::new(params(32, 10), 30, 1500, RootSeed::from_u64(200 + seed));
        cfg.impostor_fraction = 1.0;
        simulate_tree_protocol(&cfg).unwrap().far
    });
    assert!(hits >= MIN_COVERAGE, "{hits}/{SEEDS} cover {want}");
}

#[test]
fn exhaustive_search_with_one_tag_is_plain_hbplus() {
    let want = frr_auth(48, 12, &0.25f64);
    let hits = coverage(want, |seed| {
        let mut cfg = SimConfig::new(params(48, 12), 1, 1500, RootSeed::from_u64(300 + seed));
        cfg.baseline = Baseline::ExhaustiveHb;
        simulate(&cfg).unwrap().frr
    });
    assert!(hits >= MIN_COVERAGE, "{hits}/{SEEDS} cover {want}");
}

#[test]
fn zero_noise_tree_is_error_free_at_depth_three() {
    let mut p = params(48, 0);
    p.eps = NoiseRate::Zero;
    p.d = 3;
    let cfg = SimConfig::new(p, 300, 600, RootSeed::from_u64(7));
    let st = simulate_tree_protocol(&cfg).unwrap();
    assert_eq!(st.frr.successes, 0);
    assert_eq!(st.tally.false_branch_events, 0);
    assert_eq!(st.tally.legit_wrong_leaf, 0);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let mut cfg = SimConfig::new(params(48, 12), 60, 800, RootSeed::from_u64(11));
    cfg.impostor_fraction = 0.25;
    cfg.iterate = true;
    let one = simulate_tree_protocol(&cfg).unwrap();
    for w in [2, 4, 7] {
        cfg.workers = w;
        assert_eq!(simulate_tree_protocol(&cfg).unwrap(), one, "workers = {w}");
    }
}

#[test]
fn pooled_impostor_far_is_unbiased() {
    let want: f64 = far_auth(32, 10);
    let (mut hits, mut trials) = (0, 0);
    for seed in 0..100 {
        let mut cfg = SimConfig::new(params(32, 10), 30, 3000, RootSeed::from_u64(400 + seed));
        cfg.impostor_fraction = 1.0;
        let far = simulate_tree_protocol(&cfg).unwrap().far;
        hits += far.successes;
        trials += far.trials;
    }
    let pooled = Rate::new(hits, trials);
    let sigma = (want * (1.0 - want) / trials as f64).sqrt();
    assert!(
        (pooled.estimate - want).abs() <= 3.0 * sigma,
        "{} vs {want}",
        pooled.estimate
    );
}
