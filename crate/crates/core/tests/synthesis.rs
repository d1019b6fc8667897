use std::collections::{HashMap, HashSet};

use forge_core::eval::{ground_truth, parse_prediction};
use forge_core::geometry::ZRange;
use forge_core::scene::{BBox, ImageMeta, ObjectInstance, SceneRecord, Triplet};
use forge_core::spatial::{assign_layers, group_triplets_by_layer, relation_between, DepthObject, RelationKind, SpatialRelation};
use forge_core::synthesis::{
    default_choice_vocab, emit_jsonl, gen_conv, gen_qa, qa_record, read_jsonl, render_desc, to_choice_format, ChoiceItem,
    InstructionRecord, QaKind, Rewriter, Speaker, Task, DESC_PROMPT,
};
use forge_core::{ForgeError, Result};

fn object(id: u64, label: &str, x: f64) -> ObjectInstance {
    ObjectInstance {
        id,
        image_id: 1,
        label: label.into(),
        bbox: BBox::new(x, 10.0, 40.0, 30.0),
        mask: None,
    }
}

/// Hydrant-in-snow scene with hand-picked depth ranges.
struct Fixture {
    scene: SceneRecord,
    depth: Vec<DepthObject>,
}

fn hydrant() -> Fixture {
    let scene = SceneRecord {
        meta: ImageMeta {
            id: 1,
            file_name: "hydrant.jpg".into(),
            width: 640,
            height: 480,
            depth_file: "hydrant.png".into(),
        },
        objects: vec![
            object(1, "fire hydrant", 10.0),
            object(2, "snow", 100.0),
            object(3, "fence", 200.0),
            object(4, "tree", 300.0),
            object(5, "building", 400.0),
        ],
        triplets: vec![
            Triplet::new(1, "enclosed by", 2),
            Triplet::new(1, "in front of", 3),
            Triplet::new(3, "in front of", 5),
            Triplet::new(4, "attached to", 3),
        ],
        depth: None,
    };
    let ranges = [(0.5, 1.0), (0.4, 1.2), (2.0, 2.5), (1.8, 3.0), (3.5, 6.0)];
    let depth = ranges
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| DepthObject::new(i as u64 + 1, ZRange::new(a, b).unwrap()))
        .collect();
    Fixture { scene, depth }
}

fn depth_relations(depth: &[DepthObject]) -> Vec<SpatialRelation> {
    let mut out = Vec::new();
    for a in depth {
        for b in depth {
            if a.id != b.id {
                out.push(relation_between(a, b, 1e-6));
            }
        }
    }
    out
}

fn gpt_text(rec: &InstructionRecord, k: usize) -> &str {
    &rec.conversations[2 * k + 1].value
}

#[test]
fn desc_groups_triplets_by_layer() {
    let f = hydrant();
    let layers = assign_layers(&f.depth).unwrap();
    let grouped = group_triplets_by_layer(&f.scene.triplets, &layers).unwrap();
    let rec = render_desc(&f.scene, &layers, &grouped, None);
    assert_eq!(rec.task, Task::Desc);
    assert!(rec.is_well_formed());
    assert_eq!(rec.conversations[0].value, DESC_PROMPT);
    let text = gpt_text(&rec, 0);
    let layer1 = text.split("Layer 2:").next().unwrap();
    assert!(layer1.starts_with("Layer 1:"));
    assert!(layer1.contains("A fire hydrant is in front of the fence."));
    assert!(layer1.contains("A fire hydrant is enclosed by the snow."));
    let layer2 = text.split("Layer 2:").nth(1).unwrap();
    assert!(layer2.contains("A tree is attached to the fence."));
    // building heads layer 3 with no triplets of its own
    assert!(text.contains("Layer 3:\nA building is in this layer."));
}

#[test]
fn desc_degenerate_single_layer() {
    let mut f = hydrant();
    f.scene.objects.truncate(1);
    f.scene.triplets.clear();
    let layers = assign_layers(&f.depth[..1]).unwrap();
    let rec = render_desc(&f.scene, &layers, &[vec![]], None);
    assert_eq!(gpt_text(&rec, 0), "Layer 1:\nA fire hydrant is in this layer.");
}

struct Fixed(Result<String>);

impl Rewriter for Fixed {
    fn rewrite(&self, _prompt: &str) -> Result<String> {
        match &self.0 {
            Ok(s) => Ok(s.clone()),
            Err(_) => Err(ForgeError::Llm {
                attempts: 1,
                message: "down".into(),
            }),
        }
    }
}

struct Capture(std::cell::RefCell<String>);

impl Rewriter for Capture {
    fn rewrite(&self, prompt: &str) -> Result<String> {
        *self.0.borrow_mut() = prompt.to_string();
        Err(ForgeError::Empty("capture only"))
    }
}

#[test]
fn rewriter_output_is_guarded() {
    let f = hydrant();
    let layers = assign_layers(&f.depth).unwrap();
    let grouped = group_triplets_by_layer(&f.scene.triplets, &layers).unwrap();
    let template = render_desc(&f.scene, &layers, &grouped, None);

    let good = "Layer 1: Snow encloses a fire hydrant (it is enclosed by snow), which stands in front of the fence.\n\
                Layer 2: A tree is attached to the fence, which is in front of the building.";
    let rec = render_desc(&f.scene, &layers, &grouped, Some(&Fixed(Ok(good.into()))));
    assert_eq!(gpt_text(&rec, 0), good);

    // "attached to" dropped
    let lossy = good.replace("attached to", "next to");
    let rec = render_desc(&f.scene, &layers, &grouped, Some(&Fixed(Ok(lossy))));
    assert_eq!(rec, template);

    let rec = render_desc(&f.scene, &layers, &grouped, Some(&Fixed(Err(ForgeError::Empty("x")))));
    assert_eq!(rec, template);

    let cap = Capture(Default::default());
    render_desc(&f.scene, &layers, &grouped, Some(&cap));
    let prompt = cap.0.borrow();
    assert!(prompt.contains("(tree, attached to, fence)"));
    assert!(prompt.contains("Layer 1:"));
}

#[test]
fn front_back_answer_states_the_nearer_object() {
    let f = hydrant();
    let rels = vec![
        SpatialRelation::new(RelationKind::InFrontOf, 1, 5),
        SpatialRelation::new(RelationKind::Behind, 5, 1),
    ];
    let batch = gen_qa(&f.scene, &rels, 2, 7);
    assert_eq!(batch.shortfall, 0);
    let item = batch
        .items
        .iter()
        .find(|i| i.question == "Is the building closer to the camera than the fire hydrant?")
        .expect("question generated");
    assert_eq!(item.answer, "No, the fire hydrant is closer to the camera than the building.");
    assert_eq!(item.kind, QaKind::FrontBack);
    assert_eq!(item.fact.statement(), "the fire hydrant is in front of the building");
}

#[test]
fn same_depth_pair_is_unrealizable() {
    let mut f = hydrant();
    f.scene.objects.truncate(2);
    let rels = vec![
        SpatialRelation::new(RelationKind::SameDepth, 1, 2),
        SpatialRelation::new(RelationKind::SameDepth, 2, 1),
    ];
    let batch = gen_qa(&f.scene, &rels, 1, 0);
    assert!(batch.items.is_empty());
    assert_eq!(batch.shortfall, 1);
}

#[test]
fn qa_is_deterministic_and_without_replacement() {
    let f = hydrant();
    let rels = depth_relations(&f.depth);
    let a = gen_qa(&f.scene, &rels, 50, 99);
    let b = gen_qa(&f.scene, &rels, 50, 99);
    assert_eq!(a, b);
    let qs: HashSet<_> = a.items.iter().map(|i| (&i.question, &i.subject_ids)).collect();
    assert_eq!(qs.len(), a.items.len());
    assert!(a.items.iter().any(|i| i.kind == QaKind::Sorting));
    let c = gen_qa(&f.scene, &rels, 5, 100);
    assert_ne!(a.items[..5], c.items[..]);
}

#[test]
fn sorting_answer_orders_by_depth() {
    let f = hydrant();
    let rels = depth_relations(&f.depth);
    let batch = gen_qa(&f.scene, &rels, 200, 3);
    let item = batch
        .items
        .iter()
        .find(|i| i.kind == QaKind::Sorting && i.subject_ids == vec![1, 3, 5])
        .expect("hydrant/fence/building triple");
    assert_eq!(item.answer, "From nearest to farthest: the fire hydrant, the fence, the building.");
}

#[test]
fn qa_record_shape() {
    let f = hydrant();
    let batch = gen_qa(&f.scene, &depth_relations(&f.depth), 1, 1);
    let rec = qa_record(&batch.items[0]);
    assert_eq!(rec.task, Task::Qa);
    assert_eq!(rec.conversations.len(), 2);
    assert!(rec.is_well_formed());
}

#[test]
fn conv_has_four_exchanges_and_parsable_graph() {
    let f = hydrant();
    let layers = assign_layers(&f.depth).unwrap();
    let rels = depth_relations(&f.depth);
    let rec = gen_conv(&f.scene, &rels, &layers).unwrap();
    assert_eq!(rec.task, Task::Conv);
    assert_eq!(rec.conversations.len(), 8);
    assert!(rec.is_well_formed());
    assert_eq!(rec.conversations[7].from, Speaker::Gpt);
    let parsed = parse_prediction(gpt_text(&rec, 3));
    assert!(parsed.diagnostics.is_empty());
    assert_eq!(parsed.triplets, ground_truth(&f.scene).unwrap());
    assert!(gpt_text(&rec, 1).contains("The fire hydrant is in front of the fence."));
    assert!(gpt_text(&rec, 2).starts_with("Layer 1: the fire hydrant, spanned in depth by the snow."));
}

#[test]
fn conv_two_objects_one_triplet() {
    let mut f = hydrant();
    f.scene.objects.truncate(2);
    f.scene.triplets = vec![Triplet::new(1, "enclosed by", 2)];
    let layers = assign_layers(&f.depth[..2]).unwrap();
    let rels = depth_relations(&f.depth[..2]);
    let rec = gen_conv(&f.scene, &rels, &layers).unwrap();
    assert_eq!(rec.conversations.len(), 8);
    assert_eq!(parse_prediction(gpt_text(&rec, 3)).triplets.len(), 1);
}

#[test]
fn choice_format_contract() {
    let f = hydrant();
    let rels = depth_relations(&f.depth);
    let item = gen_qa(&f.scene, &rels, 1, 5).items.remove(0);
    let vocab = default_choice_vocab();
    let c = to_choice_format(&item, &vocab, 11).unwrap();
    assert_eq!(c, to_choice_format(&item, &vocab, 11).unwrap());
    let distinct: HashSet<_> = c.choices.iter().collect();
    assert_eq!(distinct.len(), 4);
    assert_eq!(c.choices[c.answer], item.fact.statement());
    assert!(c.id.contains("-choice-"));
    assert!(matches!(
        to_choice_format(&item, &vocab[..3], 11),
        Err(ForgeError::InvalidParameter { name: "relation_vocab", .. })
    ));
}

#[test]
fn choice_distractors_never_hold() {
    let f = hydrant();
    let rels = depth_relations(&f.depth);
    let holds: HashSet<(String, String, String)> = {
        let names: HashMap<u64, &str> = f.scene.objects.iter().map(|o| (o.id, o.label.as_str())).collect();
        rels.iter()
            .map(|r| (names[&r.a].to_string(), r.kind.phrase().to_string(), names[&r.b].to_string()))
            .collect()
    };
    for (k, item) in gen_qa(&f.scene, &rels, 40, 8).items.iter().enumerate() {
        let c = to_choice_format(item, &default_choice_vocab(), k as u64).unwrap();
        for (i, choice) in c.choices.iter().enumerate() {
            let true_here = holds.iter().any(|(s, p, o)| *choice == format!("the {s} is {p} the {o}"));
            if i == c.answer {
                assert!(true_here, "{choice}");
            } else {
                assert!(!true_here, "distractor holds: {choice}");
            }
        }
    }
}

#[test]
fn jsonl_round_trip_and_shape() {
    let dir = tempfile::tempdir().unwrap();
    let f = hydrant();
    let rels = depth_relations(&f.depth);
    let layers = assign_layers(&f.depth).unwrap();
    let grouped = group_triplets_by_layer(&f.scene.triplets, &layers).unwrap();
    let records = vec![
        render_desc(&f.scene, &layers, &grouped, None),
        gen_conv(&f.scene, &rels, &layers).unwrap(),
        qa_record(&gen_qa(&f.scene, &rels, 1, 0).items[0]),
    ];
    let path = dir.path().join("out.jsonl");
    assert_eq!(emit_jsonl(&records, &path).unwrap(), 3);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 3);
    let first = text.lines().next().unwrap();
    assert!(first.starts_with(r#"{"id":"1-desc","image":"hydrant.jpg","task":"desc","conversations":[{"from":"human","value":"#));
    let back: Vec<InstructionRecord> = read_jsonl(&path).unwrap();
    assert_eq!(back, records);

    let empty = dir.path().join("empty.jsonl");
    assert_eq!(emit_jsonl::<ChoiceItem>(&[], &empty).unwrap(), 0);
    assert_eq!(std::fs::read(&empty).unwrap().len(), 0);

    assert!(emit_jsonl(&records, dir.path().join("missing/dir/out.jsonl")).is_err());
}

#[test]
fn choice_jsonl_field_order() {
    let c = ChoiceItem {
        id: "1-choice-0".into(),
        image: "a.jpg".into(),
        question: "q".into(),
        choices: ["a".into(), "b".into(), "c".into(), "d".into()],
        answer: 2,
    };
    let mut buf = Vec::new();
    forge_core::synthesis::write_jsonl(&[c], &mut buf).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        "{\"id\":\"1-choice-0\",\"image\":\"a.jpg\",\"question\":\"q\",\"choices\":[\"a\",\"b\",\"c\",\"d\"],\"answer\":2}\n"
    );
}
