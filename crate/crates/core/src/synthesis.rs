//! Instruction-data generation: layered descriptions, spatial QA, multi-turn
//! reasoning conversations and four-option choice questions.
//!
//! Everything here is template based and a pure function of its inputs and
//! seed. An optional [`Rewriter`] may polish descriptions; its output is only
//! kept when it still mentions every word of every triplet.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};
use crate::eval::ground_truth;
use crate::llm::{build_prompt, desc_rewrite_template};
use crate::scene::{normalize_label, SceneRecord, Triplet};
use crate::spatial::{LayerAssignment, RelationKind, SpatialRelation};

pub const DESC_PROMPT: &str =
    "Describe the spatial layout of this image in detail, layer by layer from near to far, including the scene graph of each layer.";

pub const CONV_PROMPTS: [&str; 4] = [
    "List the objects in the image together with their bounding boxes [x1,y1,x2,y2].",
    "Describe the spatial relation in depth between each pair of these objects.",
    "Group the objects into depth layers from near to far.",
    "Now write the complete scene graph, one grounded triplet per line.",
];

pub fn default_choice_vocab() -> Vec<String> {
    [
        "in front of",
        "behind",
        "above",
        "below",
        "to the left of",
        "to the right of",
        "larger than",
        "smaller than",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Desc,
    Qa,
    Conv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Human,
    Gpt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub from: Speaker,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionRecord {
    pub id: String,
    pub image: String,
    pub task: Task,
    pub conversations: Vec<Turn>,
}

impl InstructionRecord {
    fn from_pairs(id: String, image: String, task: Task, pairs: Vec<(String, String)>) -> Self {
        let conversations = pairs
            .into_iter()
            .flat_map(|(q, a)| {
                [
                    Turn { from: Speaker::Human, value: q },
                    Turn { from: Speaker::Gpt, value: a },
                ]
            })
            .collect();
        InstructionRecord {
            id,
            image,
            task,
            conversations,
        }
    }

    /// Nonempty and strictly alternating human/gpt, starting with human.
    pub fn is_well_formed(&self) -> bool {
        !self.conversations.is_empty()
            && self.conversations.iter().enumerate().all(|(i, t)| {
                t.from == if i % 2 == 0 { Speaker::Human } else { Speaker::Gpt }
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QaKind {
    FrontBack,
    UpDown,
    LeftRight,
    Sorting,
    Occlusion,
    Size,
}

impl QaKind {
    pub const ALL: [QaKind; 6] = [
        QaKind::FrontBack,
        QaKind::UpDown,
        QaKind::LeftRight,
        QaKind::Sorting,
        QaKind::Occlusion,
        QaKind::Size,
    ];
}

/// A relational statement "the {subject} is {predicate} the {object}".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fact {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

impl Fact {
    pub fn statement(&self) -> String {
        format!("the {} is {} the {}", self.subject, self.predicate, self.object)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAItem {
    pub id: String,
    pub image: String,
    pub question: String,
    pub answer: String,
    pub kind: QaKind,
    pub subject_ids: Vec<u64>,
    /// The true statement the answer rests on.
    pub fact: Fact,
    /// Every predicate phrase that holds from `fact.subject` to `fact.object`.
    pub holds: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChoiceItem {
    pub id: String,
    pub image: String,
    pub question: String,
    pub choices: [String; 4],
    pub answer: usize,
}

/// Text-to-text polishing step, typically an LLM endpoint.
pub trait Rewriter {
    fn rewrite(&self, prompt: &str) -> Result<String>;
}

/// SplitMix64 mix of a base seed and a stream id.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn labels(scene: &SceneRecord) -> HashMap<u64, &str> {
    scene.objects.iter().map(|o| (o.id, o.label.as_str())).collect()
}

fn article(word: &str) -> &'static str {
    match word.chars().next() {
        Some(c) if "aeiou".contains(c) => "An",
        _ => "A",
    }
}

fn triplet_sentence(t: &Triplet, names: &HashMap<u64, &str>) -> String {
    let s = names.get(&t.subject_id).copied().unwrap_or("object");
    let o = names.get(&t.object_id).copied().unwrap_or("object");
    format!("{} {s} is {} the {o}.", article(s), t.predicate)
}

/// Template text: one "Layer k:" section per layer, one sentence per triplet.
pub fn layered_text(scene: &SceneRecord, layers: &LayerAssignment, grouped: &[Vec<Triplet>]) -> String {
    let names = labels(scene);
    let mut sections = Vec::with_capacity(layers.len());
    for (k, layer) in layers.layers.iter().enumerate() {
        let mut s = format!("Layer {}:", k + 1);
        let triplets = grouped.get(k).map(Vec::as_slice).unwrap_or(&[]);
        if triplets.is_empty() {
            let basic = names.get(&layer.basic).copied().unwrap_or("object");
            s.push_str(&format!("\n{} {basic} is in this layer.", article(basic)));
        }
        for t in triplets {
            s.push('\n');
            s.push_str(&triplet_sentence(t, &names));
        }
        sections.push(s);
    }
    sections.join("\n\n")
}

/// True when every word of every triplet's subject, predicate and object occurs in `text`.
pub fn preserves_triplets(text: &str, scene: &SceneRecord, triplets: &[Triplet]) -> bool {
    let names = labels(scene);
    let hay = text.to_lowercase();
    triplets.iter().all(|t| {
        let parts = [
            names.get(&t.subject_id).copied().unwrap_or(""),
            t.predicate.as_str(),
            names.get(&t.object_id).copied().unwrap_or(""),
        ];
        parts
            .iter()
            .flat_map(|p| p.split_whitespace())
            .all(|w| hay.contains(&w.to_lowercase()))
    })
}

/// Layered description record. A rewriter's output replaces the template only
/// when it keeps every triplet's words; any rewriter failure falls back silently.
pub fn render_desc(
    scene: &SceneRecord,
    layers: &LayerAssignment,
    grouped: &[Vec<Triplet>],
    rewriter: Option<&dyn Rewriter>,
) -> InstructionRecord {
    let template = layered_text(scene, layers, grouped);
    let mut text = template.clone();
    if let Some(rw) = rewriter {
        let names = labels(scene);
        let graph: Vec<String> = grouped
            .iter()
            .flatten()
            .map(|t| {
                format!(
                    "({}, {}, {})",
                    names.get(&t.subject_id).copied().unwrap_or("?"),
                    t.predicate,
                    names.get(&t.object_id).copied().unwrap_or("?")
                )
            })
            .collect();
        let fields = HashMap::from([("scene_graph", graph.join("\n")), ("layers", template.clone())]);
        match build_prompt(&desc_rewrite_template(), &fields).and_then(|p| rw.rewrite(&p)) {
            Ok(out) => {
                let all: Vec<Triplet> = grouped.iter().flatten().cloned().collect();
                if !out.trim().is_empty() && preserves_triplets(&out, scene, &all) {
                    text = out.trim().to_string();
                } else {
                    log::info!("image {}: rewrite dropped triplet content, using template", scene.meta.id);
                }
            }
            Err(e) => log::warn!("image {}: rewriter failed ({e}), using template", scene.meta.id),
        }
    }
    InstructionRecord::from_pairs(
        format!("{}-desc", scene.meta.id),
        scene.meta.file_name.clone(),
        Task::Desc,
        vec![(DESC_PROMPT.to_string(), text)],
    )
}

/// Result of QA sampling.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QaBatch {
    pub items: Vec<QAItem>,
    /// How many of the requested items could not be realized.
    pub shortfall: usize,
}

struct Candidate {
    kind: QaKind,
    question: String,
    answer: String,
    subject_ids: Vec<u64>,
    fact: Fact,
    holds: Vec<String>,
}

type RelIndex = BTreeMap<(u64, u64), Vec<RelationKind>>;

fn index_relations(relations: &[SpatialRelation]) -> RelIndex {
    let mut idx: RelIndex = BTreeMap::new();
    for r in relations {
        idx.entry((r.a, r.b)).or_default().push(r.kind);
    }
    idx
}

fn holds_between(idx: &RelIndex, a: u64, b: u64) -> Vec<String> {
    let mut v: Vec<String> = idx
        .get(&(a, b))
        .map(|ks| ks.iter().map(|k| k.phrase().to_string()).collect())
        .unwrap_or_default();
    v.sort();
    v.dedup();
    v
}

/// `(question, yes-answer, no-answer)` for a pairwise kind, where the
/// yes-answer applies when `kind` holds from `a` to `b`.
fn pair_candidate(kind: RelationKind, a: &str, b: &str) -> Option<(QaKind, String, String)> {
    use RelationKind::*;
    let c = match kind {
        InFrontOf => (
            QaKind::FrontBack,
            format!("Is the {a} closer to the camera than the {b}?"),
            format!("Yes, the {a} is closer to the camera than the {b}."),
        ),
        Behind => (
            QaKind::FrontBack,
            format!("Is the {a} closer to the camera than the {b}?"),
            format!("No, the {b} is closer to the camera than the {a}."),
        ),
        Above => (
            QaKind::UpDown,
            format!("Is the {a} above the {b}?"),
            format!("Yes, the {a} is above the {b}."),
        ),
        Below => (
            QaKind::UpDown,
            format!("Is the {a} above the {b}?"),
            format!("No, the {a} is below the {b}."),
        ),
        LeftOf => (
            QaKind::LeftRight,
            format!("Is the {a} to the left of the {b}?"),
            format!("Yes, the {a} is to the left of the {b}."),
        ),
        RightOf => (
            QaKind::LeftRight,
            format!("Is the {a} to the left of the {b}?"),
            format!("No, the {a} is to the right of the {b}."),
        ),
        LargerThan => (
            QaKind::Size,
            format!("Is the {a} larger than the {b}?"),
            format!("Yes, the {a} is larger than the {b}."),
        ),
        SmallerThan => (
            QaKind::Size,
            format!("Is the {a} larger than the {b}?"),
            format!("No, the {a} is smaller than the {b}."),
        ),
        Occludes => (
            QaKind::Occlusion,
            format!("Does the {a} occlude the {b}?"),
            format!("Yes, the {a} occludes the {b}."),
        ),
        OccludedBy => (
            QaKind::Occlusion,
            format!("Does the {a} occlude the {b}?"),
            format!("No, the {a} is occluded by the {b}."),
        ),
        Covers | CoveredBy | SameDepth => return None,
    };
    Some(c)
}

/// The fact a pairwise answer rests on, oriented so its predicate is the
/// "positive" phrase of the axis.
fn pair_fact(kind: RelationKind, a: &str, b: &str) -> Option<(Fact, bool)> {
    use RelationKind::*;
    let positive = match kind {
        InFrontOf | Above | LeftOf | LargerThan | Occludes => true,
        Behind | Below | RightOf | SmallerThan | OccludedBy => false,
        _ => return None,
    };
    let phrase_kind = if positive { kind } else { kind.inverse() };
    let (s, o) = if positive { (a, b) } else { (b, a) };
    Some((
        Fact {
            subject: s.to_string(),
            predicate: phrase_kind.phrase().to_string(),
            object: o.to_string(),
        },
        positive,
    ))
}

fn candidates(scene: &SceneRecord, relations: &[SpatialRelation]) -> Vec<Candidate> {
    let names = labels(scene);
    let idx = index_relations(relations);
    let mut out = Vec::new();

    for r in relations {
        let (Some(&a), Some(&b)) = (names.get(&r.a), names.get(&r.b)) else { continue };
        if a == b {
            continue;
        }
        let (Some((kind, question, answer)), Some((fact, positive))) =
            (pair_candidate(r.kind, a, b), pair_fact(r.kind, a, b))
        else {
            continue;
        };
        let (fs, fo) = if positive { (r.a, r.b) } else { (r.b, r.a) };
        out.push(Candidate {
            kind,
            question,
            answer,
            subject_ids: vec![r.a, r.b],
            fact,
            holds: holds_between(&idx, fs, fo),
        });
    }

    // sorting: triples whose three pairs are all strictly ordered in depth
    let ids: Vec<u64> = scene.objects.iter().map(|o| o.id).collect();
    let in_front = |x: u64, y: u64| {
        idx.get(&(x, y))
            .is_some_and(|ks| ks.contains(&RelationKind::InFrontOf))
    };
    let ordered = |x: u64, y: u64| in_front(x, y) || in_front(y, x);
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            if !ordered(ids[i], ids[j]) {
                continue;
            }
            for k in j + 1..ids.len() {
                let tri = [ids[i], ids[j], ids[k]];
                if !(ordered(tri[0], tri[2]) && ordered(tri[1], tri[2])) {
                    continue;
                }
                let lab: Vec<&str> = tri.iter().map(|id| names[id]).collect();
                if lab[0] == lab[1] || lab[0] == lab[2] || lab[1] == lab[2] {
                    continue;
                }
                let mut sorted = tri;
                sorted.sort_by_key(|&x| std::cmp::Reverse(tri.iter().filter(|&&y| in_front(x, y)).count()));
                let sl: Vec<&str> = sorted.iter().map(|id| names[id]).collect();
                out.push(Candidate {
                    kind: QaKind::Sorting,
                    question: format!(
                        "Sort the {}, the {} and the {} from nearest to farthest.",
                        lab[0], lab[1], lab[2]
                    ),
                    answer: format!("From nearest to farthest: the {}, the {}, the {}.", sl[0], sl[1], sl[2]),
                    subject_ids: tri.to_vec(),
                    fact: Fact {
                        subject: sl[0].to_string(),
                        predicate: RelationKind::InFrontOf.phrase().to_string(),
                        object: sl[2].to_string(),
                    },
                    holds: holds_between(&idx, sorted[0], sorted[2]),
                });
            }
        }
    }
    out
}

/// Samples up to `n` QA items without replacement: each draw picks a kind
/// uniformly among kinds with candidates left, then a candidate uniformly.
pub fn gen_qa(scene: &SceneRecord, relations: &[SpatialRelation], n: usize, seed: u64) -> QaBatch {
    let mut pools: BTreeMap<QaKind, Vec<Candidate>> = BTreeMap::new();
    for c in candidates(scene, relations) {
        pools.entry(c.kind).or_default().push(c);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items = Vec::with_capacity(n);
    while items.len() < n {
        let live: Vec<QaKind> = pools.iter().filter(|(_, v)| !v.is_empty()).map(|(k, _)| *k).collect();
        let Some(&kind) = live.choose(&mut rng) else { break };
        let pool = pools.get_mut(&kind).expect("live kind");
        let c = pool.swap_remove(rng.gen_range(0..pool.len()));
        items.push(QAItem {
            id: format!("{}-qa-{}", scene.meta.id, items.len()),
            image: scene.meta.file_name.clone(),
            question: c.question,
            answer: c.answer,
            kind: c.kind,
            subject_ids: c.subject_ids,
            fact: c.fact,
            holds: c.holds,
        });
    }
    let shortfall = n - items.len();
    if shortfall > 0 {
        log::warn!(
            "image {}: only {} of {n} QA items realizable",
            scene.meta.id,
            items.len()
        );
    }
    QaBatch { items, shortfall }
}

pub fn qa_record(item: &QAItem) -> InstructionRecord {
    InstructionRecord::from_pairs(
        item.id.clone(),
        item.image.clone(),
        Task::Qa,
        vec![(item.question.clone(), item.answer.clone())],
    )
}

fn depth_sentence(kind: RelationKind, a: &str, b: &str) -> Option<String> {
    use RelationKind::*;
    Some(match kind {
        InFrontOf => format!("The {a} is in front of the {b}."),
        Behind => format!("The {a} is behind the {b}."),
        Covers => format!("The {a} extends both nearer and farther than the {b}."),
        CoveredBy => format!("The {a} lies within the depth span of the {b}."),
        SameDepth => format!("The {a} is at the same depth as the {b}."),
        _ => return None,
    })
}

/// Four-exchange reasoning conversation ending in the grounded scene graph.
pub fn gen_conv(
    scene: &SceneRecord,
    relations: &[SpatialRelation],
    layers: &LayerAssignment,
) -> Result<InstructionRecord> {
    let names = labels(scene);
    let order: HashMap<u64, usize> = scene.objects.iter().enumerate().map(|(i, o)| (o.id, i)).collect();

    let mut listing = Vec::with_capacity(scene.objects.len());
    for o in &scene.objects {
        let r = o.extent()?;
        listing.push(format!("{} [{},{},{},{}]", o.label, r.x1, r.y1, r.x2, r.y2));
    }

    let mut pairwise: Vec<String> = relations
        .iter()
        .filter(|r| r.kind.is_depth())
        .filter(|r| matches!((order.get(&r.a), order.get(&r.b)), (Some(i), Some(j)) if i < j))
        .filter_map(|r| depth_sentence(r.kind, names[&r.a], names[&r.b]))
        .collect();
    if pairwise.is_empty() {
        pairwise.push("There is only one object, so there are no pairwise relations.".into());
    }

    let layering: Vec<String> = layers
        .layers
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let mut s = format!("Layer {}: the {}", k + 1, names.get(&l.basic).copied().unwrap_or("object"));
            if !l.members.is_empty() {
                let m: Vec<String> = l
                    .members
                    .iter()
                    .map(|id| format!("the {}", names.get(id).copied().unwrap_or("object")))
                    .collect();
                s.push_str(&format!(", spanned in depth by {}", m.join(", ")));
            }
            s.push('.');
            s
        })
        .collect();

    let graph: Vec<String> = ground_truth(scene)?.iter().map(|t| t.to_line()).collect();

    let answers = [listing.join("\n"), pairwise.join("\n"), layering.join("\n"), graph.join("\n")];
    Ok(InstructionRecord::from_pairs(
        format!("{}-conv", scene.meta.id),
        scene.meta.file_name.clone(),
        Task::Conv,
        CONV_PROMPTS.iter().map(|p| p.to_string()).zip(answers).collect(),
    ))
}

/// Four-option version of a QA item: the true statement plus three false ones,
/// shuffled with `seed`.
///
/// Distractors are the reversed statement and the statement with each vocab
/// predicate that does not hold between the two objects.
pub fn to_choice_format(item: &QAItem, relation_vocab: &[String], seed: u64) -> Result<ChoiceItem> {
    let mut vocab: Vec<String> = relation_vocab.iter().map(|v| normalize_label(v)).collect();
    vocab.sort();
    vocab.dedup();
    if vocab.len() < 4 {
        return Err(ForgeError::InvalidParameter {
            name: "relation_vocab",
            message: format!("need at least 4 distinct entries, got {}", vocab.len()),
        });
    }
    let fact = &item.fact;
    let truth = fact.statement();
    let mut pool = vec![Fact {
        subject: fact.object.clone(),
        predicate: fact.predicate.clone(),
        object: fact.subject.clone(),
    }
    .statement()];
    for p in &vocab {
        if *p == fact.predicate || item.holds.contains(p) {
            continue;
        }
        pool.push(
            Fact {
                subject: fact.subject.clone(),
                predicate: p.clone(),
                object: fact.object.clone(),
            }
            .statement(),
        );
    }
    pool.retain(|s| *s != truth);
    pool.sort();
    pool.dedup();
    if pool.len() < 3 {
        return Err(ForgeError::InsufficientDistractors { found: pool.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut options: Vec<String> = pool.choose_multiple(&mut rng, 3).cloned().collect();
    options.push(truth.clone());
    options.shuffle(&mut rng);
    let answer = options.iter().position(|o| *o == truth).expect("truth present");
    let choices: [String; 4] = options.try_into().expect("exactly four options");
    Ok(ChoiceItem {
        id: item.id.replace("-qa-", "-choice-"),
        image: item.image.clone(),
        question: format!(
            "Which statement about the {} and the {} is correct?",
            fact.subject, fact.object
        ),
        choices,
        answer,
    })
}

/// Writes one compact JSON object per line; returns the record count.
pub fn emit_jsonl<T: Serialize>(records: &[T], path: impl AsRef<Path>) -> Result<usize> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| ForgeError::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_jsonl(records, &mut w).map_err(|e| match e {
        ForgeError::Io { source, .. } => ForgeError::io(path, source),
        other => other,
    })?;
    w.flush().map_err(|e| ForgeError::io(path, e))?;
    Ok(records.len())
}

pub fn write_jsonl<T: Serialize, W: Write>(records: &[T], mut w: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| ForgeError::io("<jsonl>", e))?;
    }
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| ForgeError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| ForgeError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| ForgeError::Schema {
            field: format!("{}:{}", path.display(), i + 1),
            message: e.to_string(),
        })?);
    }
    Ok(out)
}
