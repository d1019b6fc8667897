use forge_core::fixtures::{random_scene, SceneSpec};
use forge_core::pipeline::analyze_scene;
use forge_core::synthesis::{default_choice_vocab, derive_seed, gen_qa, to_choice_format};
use forge_core::PipelineConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Upper 1% point of chi-square with 3 degrees of freedom.
const CHI2_CRIT_DF3_P01: f64 = 11.345;

#[test]
fn answer_position_is_uniform() {
    let cfg = PipelineConfig {
        depth_scale: 0.01,
        ..PipelineConfig::default()
    };
    let vocab = default_choice_vocab();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut counts = [0u64; 4];
    let mut id = 0;
    while counts.iter().sum::<u64>() < 2000 {
        id += 1;
        let a = analyze_scene(random_scene(&mut rng, id, &SceneSpec::default()).scene, &cfg).unwrap();
        let seed = derive_seed(17, id);
        for (k, item) in gen_qa(&a.scene, &a.relations, 10, seed).items.iter().enumerate() {
            let c = to_choice_format(item, &vocab, derive_seed(seed, k as u64 + 1)).unwrap();
            counts[c.answer] += 1;
        }
    }
    let n = counts.iter().sum::<u64>() as f64;
    let expected = n / 4.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    assert!(chi2 < CHI2_CRIT_DF3_P01, "chi2 = {chi2:.3}, counts {counts:?}");
}
