use proptest::prelude::*;

use wbp_core::clustering::{kmeans, ClusterAssignment};
use wbp_core::features::{dissimilarity_matrix, sequence_features, FrameStore, GrayFrame, Material};
use wbp_core::model::{
    accumulate_channel, sequence_score, stimulus_intensity, wundt_eval, AccumulatorParams, FeatureSequence, LwcModel,
    Step, WundtParams,
};
use wbp_core::oracle::{baseline_greedy, baseline_random, expected_revenue_uplift, random_instance, RevenueCategory, RevenueInput};
use wbp_core::sequencer::{generate_storyline, StorylineConfig};
use wbp_core::training::{train, TrainConfig, TrainingExample};

fn unit() -> impl Strategy<Value = f64> {
    0.0..=1.0f64
}

fn wundt() -> impl Strategy<Value = WundtParams<f64>> {
    (0.0..5.0f64, 1e-3..10.0f64, -3.0..3.0f64, 0.0..5.0f64, 1e-3..10.0f64, -3.0..3.0f64)
        .prop_map(|(a, b, c, d, e, f)| WundtParams::new(a, b, c, d, e, f))
}

fn steps(max_len: usize) -> impl Strategy<Value = Vec<Step<f64>>> {
    prop::collection::vec((unit(), unit(), unit()).prop_map(|(d, a, e)| Step::new(d, a, e)), 1..=max_len)
}

fn accum() -> impl Strategy<Value = AccumulatorParams<f64>> {
    (unit(), unit(), unit(), unit(), unit(), unit()).prop_map(|(a, b, c, d, e, f)| AccumulatorParams::new(a, b, c, d, e, f))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn wundt_stays_within_its_plateaus(w in wundt(), x in -50.0..50.0f64) {
        let e = wundt_eval(&w, x).unwrap();
        prop_assert!(e >= -w.p_max && e <= w.r_max, "{e} outside [-{}, {}]", w.p_max, w.r_max);
    }

    #[test]
    fn identical_branches_cancel(w in wundt(), xs in prop::collection::vec(-1e3..1e3f64, 1000)) {
        let same = WundtParams::new(w.r_max, w.rho_r, w.d_r, w.r_max, w.rho_r, w.d_r);
        for x in xs {
            prop_assert_eq!(wundt_eval(&same, x).unwrap(), 0.0);
        }
    }

    #[test]
    fn large_magnitudes_stay_finite(
        p in prop::array::uniform6(-1e3..1e3f64),
        x in -1e3..1e3f64,
    ) {
        let w = WundtParams::new(p[0].abs(), p[1].abs().max(1e-6), p[2], p[3].abs(), p[4].abs().max(1e-6), p[5]);
        prop_assert!(wundt_eval(&w, x).unwrap().is_finite());
    }

    #[test]
    fn decay_extremes(vs in prop::collection::vec(unit(), 1..20)) {
        prop_assert_eq!(accumulate_channel(0.0, &vs).unwrap(), *vs.last().unwrap());
        let sum = accumulate_channel(1.0, &vs).unwrap();
        let direct: f64 = vs.iter().sum();
        prop_assert!((sum - direct).abs() <= 1e-12 * vs.len() as f64);
    }

    #[test]
    fn intensity_is_linear_in_a_weight(a in accum(), s in steps(10)) {
        let seq = FeatureSequence::unit(s).unwrap();
        let with = |w_a: f64| stimulus_intensity(&AccumulatorParams { w_a, ..a }, &seq).unwrap();
        let base = with(0.0);
        let one = with(a.w_a) - base;
        let two = with(2.0 * a.w_a) - base;
        prop_assert!((two - 2.0 * one).abs() <= 1e-12, "{two} vs 2 * {one}");
    }

    #[test]
    fn reversal_only_moves_dissimilarity(seed in any::<u64>(), n in 2usize..8) {
        let set = random_instance(seed, n).unwrap();
        let ids: Vec<String> = set.materials().iter().map(|m| m.id.clone()).collect();
        let rev: Vec<String> = ids.iter().rev().cloned().collect();
        let f = sequence_features::<f64, _>(&ids, &set, 0.1).unwrap();
        let r = sequence_features::<f64, _>(&rev, &set, 0.1).unwrap();
        prop_assert_eq!(f.len(), ids.len());
        for ch in [1, 2] {
            let mut back = r.column(ch);
            back.reverse();
            prop_assert_eq!(f.column(ch), back);
        }
    }

    #[test]
    fn uplift_scales_with_weights(
        cats in prop::collection::vec((0.0..0.1f64, 0.1..10.0f64, 0.1..10.0f64), 1..6),
    ) {
        let build = |s: f64| RevenueInput {
            categories: cats
                .iter()
                .enumerate()
                .map(|(i, &(w, x, y))| RevenueCategory { name: format!("c{i}"), weight: w * s, x, y })
                .collect(),
        };
        let one = expected_revenue_uplift(&build(1.0)).unwrap();
        let two = expected_revenue_uplift(&build(2.0)).unwrap();
        prop_assert_eq!(two, 2.0 * one);
    }
}

fn noise_frame(seed: u64, size: usize) -> GrayFrame {
    // Small xorshift so every case gets a different, reproducible texture.
    let mut s = seed | 1;
    let data = (0..size * size)
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s % 256) as f64
        })
        .collect();
    GrayFrame::new(size, size, data).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dissimilarity_matrix_on_noise(seeds in prop::collection::vec(any::<u64>(), 2..4), size in 11usize..40) {
        let store = FrameStore::default();
        let mut ms = Vec::new();
        for (i, &s) in seeds.iter().enumerate() {
            store.insert(format!("f{i}"), noise_frame(s, size));
            ms.push(Material::image(format!("m{i}"), format!("f{i}"), 0.5, 0.5));
        }
        let d = dissimilarity_matrix(&ms, &store).unwrap();
        for i in 0..ms.len() {
            prop_assert_eq!(d.get(i, i), 0.0);
            for j in 0..ms.len() {
                prop_assert_eq!(d.get(i, j), d.get(j, i));
                prop_assert!((0.0..=1.0).contains(&d.get(i, j)));
            }
        }
    }
}

fn points(seed: u64, n: usize) -> Vec<(String, Vec<f64>)> {
    let set = random_instance(seed, n).unwrap();
    set.materials()
        .iter()
        .map(|m| (m.id.clone(), m.embeddings[0].clone()))
        .collect()
}

fn smallest_first(a: &ClusterAssignment<f64>) -> bool {
    let min_id = a.ids.iter().min().unwrap();
    a.label_of(min_id) == Some(0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kmeans_inertia_never_rises(seed in any::<u64>(), n in 3usize..30, k in 1usize..4) {
        let pts = points(seed, n);
        let a = kmeans(&pts, k.min(n), seed, 100, 1e-9).unwrap();
        for w in a.history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{:?}", a.history);
        }
        prop_assert!(smallest_first(&a));
        prop_assert_eq!(a, kmeans(&pts, k.min(n), seed, 100, 1e-9).unwrap());
    }

    #[test]
    fn larger_budget_never_hurts(seed in any::<u64>(), n in 2usize..9, k in 1usize..4, n_max in 1usize..8) {
        let set = random_instance(seed, n).unwrap();
        let model = LwcModel::<f64>::reference();
        let cfg = StorylineConfig { k: k.min(n), n_max, seed, ..StorylineConfig::default() };
        let (small, _) = generate_storyline(&set, &model, &cfg).unwrap();
        let (big, _) = generate_storyline(&set, &model, &StorylineConfig { n_max: n_max + 1, ..cfg.clone() }).unwrap();
        prop_assert!(big.total_objective >= small.total_objective);
        small.check(n_max).unwrap();
    }

    #[test]
    fn baselines_respect_budget(seed in any::<u64>(), n in 1usize..12, n_max in 1usize..9) {
        let set = random_instance(seed, n).unwrap();
        let model = LwcModel::<f64>::reference();
        prop_assert!(baseline_random(&set, &model, n_max, seed, 0.1).unwrap().len() <= n_max);
        prop_assert!(baseline_greedy(&set, &model, n_max, 0.1).unwrap().len() <= n_max);
    }
}

#[test]
fn permutation_changes_score_under_memory() {
    let mut m = LwcModel::<f64>::reference();
    m.accum = AccumulatorParams::new(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.9, 0.9, 0.9);
    let a = Step::new(0.1, 0.9, 0.2);
    let b = Step::new(0.8, 0.1, 0.7);
    let ab = sequence_score(&m, &FeatureSequence::unit(vec![a, b]).unwrap()).unwrap();
    let ba = sequence_score(&m, &FeatureSequence::unit(vec![b, a]).unwrap()).unwrap();
    assert_ne!(ab, ba);
}

#[test]
fn training_clamps_hold_every_epoch() {
    // One epoch at a time so the clamp can be observed after each update.
    let data = vec![TrainingExample::new(
        FeatureSequence::unit(vec![Step::new(1.0, 1.0, 1.0); 4]).unwrap(),
        0.0,
    )
    .unwrap()];
    let mut m = LwcModel::<f64>::canonical();
    let cfg = TrainConfig { learning_rate: 5.0, epochs: 1, ..TrainConfig::default() };
    for _ in 0..50 {
        m = train(&m, &data, &cfg).unwrap().model;
        assert!(m.wundt.rho_r >= 1e-6 && m.wundt.rho_p >= 1e-6);
        for l in m.accum.lambdas() {
            assert!((0.0..=1.0).contains(&l));
        }
    }
}
