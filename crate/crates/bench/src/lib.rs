//! Seeded workloads shared by the benchmarks in `benches/`.

use forge_core::eval::GroundedTriplet;
use forge_core::fixtures::{random_depth_objects, random_scene, SceneSpec};
use forge_core::{DepthObject, Rect, SceneRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn depth_objects(n: usize, seed: u64) -> Vec<DepthObject> {
    random_depth_objects(&mut ChaCha8Rng::seed_from_u64(seed), n)
}

/// Scene with painted depth, sized `width` x `height`.
pub fn scene(width: u32, height: u32, objects: usize, seed: u64) -> SceneRecord {
    let spec = SceneSpec {
        width,
        height,
        min_objects: objects,
        max_objects: objects,
        ..SceneSpec::default()
    };
    random_scene(&mut ChaCha8Rng::seed_from_u64(seed), 1, &spec).scene
}

/// `n` ground-truth triplets and `n` noisy predictions over them.
pub fn matching_instance(n: usize, seed: u64) -> (Vec<GroundedTriplet>, Vec<GroundedTriplet>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rect = |rng: &mut ChaCha8Rng| {
        let x = rng.gen_range(0.0..200.0);
        let y = rng.gen_range(0.0..200.0);
        Rect::new(x, y, x + rng.gen_range(10.0..60.0), y + rng.gen_range(10.0..60.0))
    };
    let gt: Vec<GroundedTriplet> = (0..n)
        .map(|_| GroundedTriplet {
            subject_label: ["person", "dog", "car"][rng.gen_range(0..3)].into(),
            subject_box: rect(&mut rng),
            predicate: ["on", "beside", "in front of"][rng.gen_range(0..3)].into(),
            object_label: ["table", "road", "grass"][rng.gen_range(0..3)].into(),
            object_box: rect(&mut rng),
        })
        .collect();
    let preds = gt
        .iter()
        .map(|g| {
            let mut p = g.clone();
            let d = rng.gen_range(-3.0..3.0);
            p.subject_box = Rect::new(p.subject_box.x1 + d, p.subject_box.y1, p.subject_box.x2 + d, p.subject_box.y2);
            p
        })
        .collect();
    (gt, preds)
}
