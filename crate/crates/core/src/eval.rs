//! Scene-graph prediction parsing, IoU-gated triplet matching, Recall/mRecall
//! and choice-QA accuracy.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{ForgeError, Result};
use crate::scene::{normalize_label, Rect, SceneRecord};
use crate::synthesis::ChoiceItem;

/// A triplet whose endpoints carry image boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundedTriplet {
    pub subject_label: String,
    pub subject_box: Rect,
    pub predicate: String,
    pub object_label: String,
    pub object_box: Rect,
}

fn fmt_box(r: &Rect) -> String {
    format!("[{},{},{},{}]", r.x1, r.y1, r.x2, r.y2)
}

impl GroundedTriplet {
    /// One line of the prediction grammar: `(label [x1,y1,x2,y2], predicate, label [x1,y1,x2,y2])`.
    pub fn to_line(&self) -> String {
        format!(
            "({} {}, {}, {} {})",
            self.subject_label,
            fmt_box(&self.subject_box),
            self.predicate,
            self.object_label,
            fmt_box(&self.object_box)
        )
    }
}

/// Ground-truth grounded triplets of a scene; object boxes are mask tight boxes
/// when a mask exists.
pub fn ground_truth(scene: &SceneRecord) -> Result<Vec<GroundedTriplet>> {
    scene
        .triplets
        .iter()
        .map(|t| {
            let endpoint = |id| {
                scene.object(id).ok_or_else(|| ForgeError::UnresolvedTriplet {
                    subject_id: t.subject_id,
                    predicate: t.predicate.clone(),
                    object_id: t.object_id,
                    reason: format!("object {id} not in image {}", scene.meta.id),
                })
            };
            let (s, o) = (endpoint(t.subject_id)?, endpoint(t.object_id)?);
            Ok(GroundedTriplet {
                subject_label: s.label.clone(),
                subject_box: s.extent()?,
                predicate: t.predicate.clone(),
                object_label: o.label.clone(),
                object_box: o.extent()?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    /// 1-based
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedPrediction {
    pub triplets: Vec<GroundedTriplet>,
    pub diagnostics: Vec<ParseDiagnostic>,
}

fn triplet_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        let num = r"([-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?)";
        let bx = format!(r"\[\s*{num}\s*,\s*{num}\s*,\s*{num}\s*,\s*{num}\s*\]");
        let text = r"([^\[\](),]+?)";
        Regex::new(&format!(
            r"\(\s*{text}\s*{bx}\s*,\s*{text}\s*,\s*{text}\s*{bx}\s*\)"
        ))
        .expect("static regex")
    })
}

/// Extracts grounded triplets from free text, one or more per line.
///
/// Lines that carry no well-formed triplet, or an unbalanced extra `(`, are
/// reported as diagnostics; blank lines are ignored.
pub fn parse_prediction(text: &str) -> ParsedPrediction {
    let re = triplet_regex();
    let mut out = ParsedPrediction::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut found = 0;
        for caps in re.captures_iter(line) {
            found += 1;
            let n = |k: usize| caps[k].parse::<f64>().unwrap_or(f64::NAN);
            let subject_box = Rect::new(n(2), n(3), n(4), n(5));
            let object_box = Rect::new(n(8), n(9), n(10), n(11));
            if !subject_box.is_valid() || !object_box.is_valid() {
                out.diagnostics.push(ParseDiagnostic {
                    line: line_no,
                    message: format!("degenerate box in {:?}", &caps[0]),
                });
                continue;
            }
            out.triplets.push(GroundedTriplet {
                subject_label: normalize_label(&caps[1]),
                subject_box,
                predicate: normalize_label(&caps[6]),
                object_label: normalize_label(&caps[7]),
                object_box,
            });
        }
        let opens = line.matches('(').count();
        if found == 0 {
            out.diagnostics.push(ParseDiagnostic {
                line: line_no,
                message: format!("no triplet matching `(label [x1,y1,x2,y2], predicate, label [x1,y1,x2,y2])` in {:?}", line.trim()),
            });
        } else if opens > found {
            out.diagnostics.push(ParseDiagnostic {
                line: line_no,
                message: format!("{} malformed triplet(s) alongside {found} valid", opens - found),
            });
        }
    }
    out
}

/// Intersection over union of two corner-form boxes; 0 when disjoint.
pub fn iou(a: &Rect, b: &Rect) -> f64 {
    let inter = a.intersection_area(b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchStrategy {
    /// Maximum number of one-to-one matches.
    #[default]
    MaxCardinality,
    /// Greedy in descending min-IoU; can fall short of the maximum.
    Greedy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchConfig {
    pub iou_threshold: f64,
    /// Normalized text -> canonical text, applied to labels and predicates.
    pub synonyms: HashMap<String, String>,
    pub strategy: MatchStrategy,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            iou_threshold: 0.5,
            synonyms: HashMap::new(),
            strategy: MatchStrategy::default(),
        }
    }
}

impl MatchConfig {
    pub fn with_threshold(iou_threshold: f64) -> Result<Self> {
        if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
            return Err(ForgeError::InvalidParameter {
                name: "iou_threshold",
                message: format!("must lie in (0, 1], got {iou_threshold}"),
            });
        }
        Ok(MatchConfig {
            iou_threshold,
            ..Default::default()
        })
    }

    fn canonical<'a>(&'a self, text: &'a str) -> &'a str {
        self.synonyms.get(text).map(String::as_str).unwrap_or(text)
    }

    /// `min(IoU_subject, IoU_object)` when labels and predicate agree and both
    /// IoUs clear the threshold.
    pub fn match_score(&self, pred: &GroundedTriplet, gt: &GroundedTriplet) -> Option<f64> {
        let same = |a: &str, b: &str| self.canonical(a) == self.canonical(b);
        if !(same(&pred.subject_label, &gt.subject_label)
            && same(&pred.object_label, &gt.object_label)
            && same(&pred.predicate, &gt.predicate))
        {
            return None;
        }
        let score = iou(&pred.subject_box, &gt.subject_box).min(iou(&pred.object_box, &gt.object_box));
        (score > self.iou_threshold).then_some(score)
    }
}

/// One-to-one pairs `(pred index, gt index)`, sorted by pred index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Matching {
    pub pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn matched_gt(&self, gt_len: usize) -> Vec<bool> {
        let mut hit = vec![false; gt_len];
        for &(_, g) in &self.pairs {
            if let Some(h) = hit.get_mut(g) {
                *h = true;
            }
        }
        hit
    }
}

/// Candidate edges per prediction, best score first, ties by gt index.
fn candidates(preds: &[GroundedTriplet], gt: &[GroundedTriplet], cfg: &MatchConfig) -> Vec<Vec<(f64, usize)>> {
    preds
        .iter()
        .map(|p| {
            let mut c: Vec<(f64, usize)> = gt
                .iter()
                .enumerate()
                .filter_map(|(j, g)| cfg.match_score(p, g).map(|s| (s, j)))
                .collect();
            c.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            c
        })
        .collect()
}

pub fn match_triplets(preds: &[GroundedTriplet], gt: &[GroundedTriplet], cfg: &MatchConfig) -> Matching {
    let cand = candidates(preds, gt, cfg);
    let mut pairs = match cfg.strategy {
        MatchStrategy::Greedy => greedy(&cand, gt.len()),
        MatchStrategy::MaxCardinality => max_cardinality(&cand, gt.len()),
    };
    pairs.sort_unstable();
    Matching { pairs }
}

fn greedy(cand: &[Vec<(f64, usize)>], gt_len: usize) -> Vec<(usize, usize)> {
    let mut edges: Vec<(f64, usize, usize)> = cand
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.iter().map(move |&(s, j)| (s, i, j)))
        .collect();
    edges.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut pred_used = vec![false; cand.len()];
    let mut gt_used = vec![false; gt_len];
    let mut out = Vec::new();
    for (_, i, j) in edges {
        if !pred_used[i] && !gt_used[j] {
            pred_used[i] = true;
            gt_used[j] = true;
            out.push((i, j));
        }
    }
    out
}

/// Augmenting-path bipartite matching. Predictions are seeded in descending
/// best-score order and try their edges best-first, so easy matches settle
/// on their highest-IoU partner.
fn max_cardinality(cand: &[Vec<(f64, usize)>], gt_len: usize) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..cand.len()).filter(|&i| !cand[i].is_empty()).collect();
    order.sort_by(|&a, &b| cand[b][0].0.total_cmp(&cand[a][0].0).then(a.cmp(&b)));

    let mut gt_owner: Vec<Option<usize>> = vec![None; gt_len];
    for &i in &order {
        let mut visited = vec![false; gt_len];
        augment(i, cand, &mut gt_owner, &mut visited);
    }
    gt_owner
        .iter()
        .enumerate()
        .filter_map(|(j, p)| p.map(|i| (i, j)))
        .collect()
}

fn augment(i: usize, cand: &[Vec<(f64, usize)>], owner: &mut [Option<usize>], visited: &mut [bool]) -> bool {
    for &(_, j) in &cand[i] {
        if visited[j] {
            continue;
        }
        visited[j] = true;
        if owner[j].is_none_or(|k| augment(k, cand, owner, visited)) {
            owner[j] = Some(i);
            return true;
        }
    }
    false
}

/// Matched ground truth over all ground truth.
pub fn compute_recall(matching: &Matching, gt: &[GroundedTriplet]) -> Result<f64> {
    if gt.is_empty() {
        return Err(ForgeError::Empty("ground truth (recall undefined)"));
    }
    Ok(matching.len() as f64 / gt.len() as f64)
}

/// Mean of per-predicate recalls over predicates with at least one gt instance.
pub fn compute_mean_recall(matching: &Matching, gt: &[GroundedTriplet]) -> Result<f64> {
    if gt.is_empty() {
        return Err(ForgeError::Empty("ground truth (mean recall undefined)"));
    }
    let mut acc = RecallAccumulator::default();
    acc.add(matching, gt);
    Ok(acc.report()?.mean_recall)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PredicateStats {
    pub matched: u64,
    pub total: u64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub recall: f64,
    pub mean_recall: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub per_predicate: BTreeMap<String, PredicateStats>,
}

/// Order-independent per-predicate counts merged across images.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecallAccumulator {
    counts: BTreeMap<String, (u64, u64)>,
}

impl RecallAccumulator {
    pub fn add(&mut self, matching: &Matching, gt: &[GroundedTriplet]) {
        let hit = matching.matched_gt(gt.len());
        for (g, h) in gt.iter().zip(hit) {
            let e = self.counts.entry(g.predicate.clone()).or_default();
            e.0 += h as u64;
            e.1 += 1;
        }
    }

    pub fn merge(&mut self, other: &RecallAccumulator) {
        for (k, (m, t)) in &other.counts {
            let e = self.counts.entry(k.clone()).or_default();
            e.0 += m;
            e.1 += t;
        }
    }

    pub fn report(&self) -> Result<EvalReport> {
        let total: u64 = self.counts.values().map(|c| c.1).sum();
        if total == 0 {
            return Err(ForgeError::Empty("ground truth (recall undefined)"));
        }
        let matched: u64 = self.counts.values().map(|c| c.0).sum();
        let per_predicate: BTreeMap<String, PredicateStats> = self
            .counts
            .iter()
            .filter(|(_, c)| c.1 > 0)
            .map(|(k, &(m, t))| {
                (
                    k.clone(),
                    PredicateStats {
                        matched: m,
                        total: t,
                        recall: m as f64 / t as f64,
                    },
                )
            })
            .collect();
        let n = per_predicate.len();
        let mean_recall = per_predicate.values().map(|s| s.recall).sum::<f64>() / n as f64;
        Ok(EvalReport {
            recall: matched as f64 / total as f64,
            mean_recall,
            n,
            per_predicate,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaScore {
    pub accuracy: f64,
    pub total: usize,
    pub correct: usize,
    /// Gold ids with no prediction; each counts as wrong.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub missing: Vec<String>,
}

pub fn score_choice_qa(predictions: &HashMap<String, usize>, gold: &[ChoiceItem]) -> QaScore {
    let mut correct = 0;
    let mut missing = Vec::new();
    for item in gold {
        match predictions.get(&item.id) {
            Some(&p) if p == item.answer => correct += 1,
            Some(_) => {}
            None => missing.push(item.id.clone()),
        }
    }
    let total = gold.len();
    QaScore {
        accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
        total,
        correct,
        missing,
    }
}

/// Renders a report the way result tables print it: percentages to 2 decimals.
pub fn headline(report: &EvalReport) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "Recall: {:.2}  mRecall: {:.2}  (N = {})",
        report.recall * 100.0,
        report.mean_recall * 100.0,
        report.n
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(x1: f64, y1: f64, x2: f64, y2: f64) -> Rect {
        Rect::new(x1, y1, x2, y2)
    }

    fn gt(s: &str, sb: Rect, p: &str, o: &str, ob: Rect) -> GroundedTriplet {
        GroundedTriplet {
            subject_label: s.into(),
            subject_box: sb,
            predicate: p.into(),
            object_label: o.into(),
            object_box: ob,
        }
    }

    #[test]
    fn parses_grammar_example() {
        let p = parse_prediction("(fire hydrant [10,20,50,90], in front of, fence [0,30,200,120])");
        assert!(p.diagnostics.is_empty());
        assert_eq!(p.triplets.len(), 1);
        let t = &p.triplets[0];
        assert_eq!(t.subject_label, "fire hydrant");
        assert_eq!(t.object_label, "fence");
        assert_eq!(t.predicate, "in front of");
        assert_eq!(t.object_box, r(0.0, 30.0, 200.0, 120.0));
    }

    #[test]
    fn whitespace_and_case_are_tolerated() {
        let p = parse_prediction("  (  Fire   Hydrant [ 10 , 20,50 ,90.5 ] ,  In Front  Of ,fence[0,30,200,120] ) ");
        assert_eq!(p.triplets.len(), 1);
        assert_eq!(p.triplets[0].subject_label, "fire hydrant");
        assert_eq!(p.triplets[0].predicate, "in front of");
        assert_eq!(p.triplets[0].subject_box.y2, 90.5);
    }

    #[test]
    fn missing_box_is_diagnosed() {
        let p = parse_prediction("(fire hydrant, in front of, fence [0,30,200,120])");
        assert!(p.triplets.is_empty());
        assert_eq!(p.diagnostics.len(), 1);
        assert_eq!(p.diagnostics[0].line, 1);
    }

    #[test]
    fn mixed_lines() {
        let text = "Here is the graph:\n(a [0,0,1,1], on, b [0,0,2,2])\n\n(a [0,0,1,1] on b)\n(c [0,0,1,1], near, d [1,1,2,2]), (e [0,0], x, f [0,0,1,1])";
        let p = parse_prediction(text);
        assert_eq!(p.triplets.len(), 2);
        let lines: Vec<_> = p.diagnostics.iter().map(|d| d.line).collect();
        assert_eq!(lines, vec![1, 4, 5]);
    }

    #[test]
    fn degenerate_box_is_diagnosed() {
        let p = parse_prediction("(a [5,0,1,1], on, b [0,0,2,2])");
        assert!(p.triplets.is_empty());
        assert_eq!(p.diagnostics.len(), 1);
    }

    #[test]
    fn line_format_round_trips() {
        let t = gt("fire hydrant", r(10.0, 20.5, 50.0, 90.0), "in front of", "fence", r(0.0, 30.0, 200.0, 120.0));
        assert_eq!(t.to_line(), "(fire hydrant [10,20.5,50,90], in front of, fence [0,30,200,120])");
        assert_eq!(parse_prediction(&t.to_line()).triplets, vec![t]);
    }

    /// Counts unit cells of the integer grid inside both / either box.
    fn pixel_iou(a: [i32; 4], b: [i32; 4]) -> f64 {
        let inside = |bx: [i32; 4], x: i32, y: i32| x >= bx[0] && x < bx[2] && y >= bx[1] && y < bx[3];
        let (mut i, mut u) = (0, 0);
        for x in -5..40 {
            for y in -5..40 {
                let (pa, pb) = (inside(a, x, y), inside(b, x, y));
                i += (pa && pb) as u32;
                u += (pa || pb) as u32;
            }
        }
        i as f64 / u as f64
    }

    #[test]
    fn iou_examples() {
        let a = r(0.0, 0.0, 10.0, 10.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &r(20.0, 20.0, 30.0, 30.0)), 0.0);
        let oracle = pixel_iou([0, 0, 10, 10], [5, 0, 15, 10]);
        assert!((oracle - 1.0 / 3.0).abs() < 1e-12);
        assert!((iou(&a, &r(5.0, 0.0, 15.0, 10.0)) - oracle).abs() < 1e-12);
    }

    fn box_with_iou(base: Rect, target: f64) -> Rect {
        // shift right by d: IoU = (10-d)/(10+d) for a 10-wide box
        let d = 10.0 * (1.0 - target) / (1.0 + target);
        r(base.x1 + d, base.y1, base.x2 + d, base.y2)
    }

    #[test]
    fn threshold_is_strict_and_uses_min_iou() {
        let sb = r(0.0, 0.0, 10.0, 10.0);
        let ob = r(20.0, 0.0, 30.0, 10.0);
        let g = gt("a", sb, "on", "b", ob);
        let cfg = MatchConfig::default();
        let p = gt("a", box_with_iou(sb, 0.6), "on", "b", box_with_iou(ob, 0.6));
        assert_eq!(match_triplets(&[p], std::slice::from_ref(&g), &cfg).len(), 1);
        let p = gt("a", box_with_iou(sb, 0.4), "on", "b", box_with_iou(ob, 0.6));
        assert_eq!(match_triplets(&[p], std::slice::from_ref(&g), &cfg).len(), 0);
        // IoU exactly 0.5 fails the strict ">"
        let p = gt("a", r(0.0, 0.0, 10.0, 5.0), "on", "b", ob);
        assert_eq!(iou(&p.subject_box, &sb), 0.5);
        assert_eq!(match_triplets(&[p], &[g], &cfg).len(), 0);
    }

    #[test]
    fn one_to_one() {
        let sb = r(0.0, 0.0, 10.0, 10.0);
        let ob = r(20.0, 0.0, 30.0, 10.0);
        let g = gt("a", sb, "on", "b", ob);
        let m = match_triplets(&[g.clone(), g.clone()], &[g], &MatchConfig::default());
        assert_eq!(m.pairs, vec![(0, 0)]);
    }

    #[test]
    fn labels_and_predicate_must_agree() {
        let sb = r(0.0, 0.0, 10.0, 10.0);
        let g = gt("a", sb, "in front of", "b", sb);
        let cfg = MatchConfig::default();
        assert!(match_triplets(&[gt("a", sb, "in front", "b", sb)], std::slice::from_ref(&g), &cfg).is_empty());
        assert!(match_triplets(&[gt("c", sb, "in front of", "b", sb)], std::slice::from_ref(&g), &cfg).is_empty());
        let mut cfg = MatchConfig::default();
        cfg.synonyms.insert("c".into(), "a".into());
        assert_eq!(match_triplets(&[gt("c", sb, "in front of", "b", sb)], &[g], &cfg).len(), 1);
    }

    #[test]
    fn greedy_can_fall_short_of_maximum() {
        // P0 overlaps G0 strongly and G1 weakly; P1 overlaps only G0.
        let ob = r(100.0, 0.0, 110.0, 10.0);
        let g0 = gt("a", r(0.0, 0.0, 10.0, 10.0), "on", "b", ob);
        let g1 = gt("a", r(2.0, 0.0, 12.0, 10.0), "on", "b", ob);
        let p0 = gt("a", r(0.5, 0.0, 10.5, 10.0), "on", "b", ob);
        let p1 = gt("a", r(-1.5, 0.0, 8.5, 10.0), "on", "b", ob);
        let preds = [p0, p1];
        let gts = [g0, g1];
        let mut cfg = MatchConfig::default();
        assert_eq!(match_triplets(&preds, &gts, &cfg).len(), 2);
        cfg.strategy = MatchStrategy::Greedy;
        assert_eq!(match_triplets(&preds, &gts, &cfg).len(), 1);
    }

    #[test]
    fn recall_arithmetic() {
        let sb = r(0.0, 0.0, 10.0, 10.0);
        let gts = vec![
            gt("a", sb, "on", "b", sb),
            gt("a", sb, "on", "c", sb),
            gt("a", sb, "beside", "d", sb),
        ];
        let m = Matching { pairs: vec![(0, 0), (1, 2)] };
        assert!((compute_recall(&m, &gts).unwrap() - 2.0 / 3.0).abs() < 1e-9);
        assert!((compute_mean_recall(&m, &gts).unwrap() - 0.75).abs() < 1e-12);
        assert_eq!(compute_recall(&Matching::default(), &gts).unwrap(), 0.0);
        assert_eq!(compute_mean_recall(&Matching::default(), &gts).unwrap(), 0.0);
        let all = Matching { pairs: vec![(0, 0), (1, 1), (2, 2)] };
        assert_eq!(compute_recall(&all, &gts).unwrap(), 1.0);
        assert!(compute_recall(&m, &[]).is_err());
        assert!(compute_mean_recall(&m, &[]).is_err());
    }

    #[test]
    fn single_class_mean_equals_recall() {
        let sb = r(0.0, 0.0, 10.0, 10.0);
        let gts = vec![gt("a", sb, "on", "b", sb), gt("c", sb, "on", "d", sb)];
        let m = Matching { pairs: vec![(0, 1)] };
        assert_eq!(compute_recall(&m, &gts).unwrap(), compute_mean_recall(&m, &gts).unwrap());
    }

    fn choice(id: &str, answer: usize) -> ChoiceItem {
        ChoiceItem {
            id: id.into(),
            image: "x.jpg".into(),
            question: "q".into(),
            choices: ["a".into(), "b".into(), "c".into(), "d".into()],
            answer,
        }
    }

    #[test]
    fn choice_accuracy() {
        let gold = vec![choice("1", 0), choice("2", 1), choice("3", 2), choice("4", 3)];
        let all: HashMap<_, _> = gold.iter().map(|g| (g.id.clone(), g.answer)).collect();
        assert_eq!(score_choice_qa(&all, &gold).accuracy, 1.0);
        let mut half = all.clone();
        half.insert("1".into(), 3);
        half.remove("2");
        let s = score_choice_qa(&half, &gold);
        assert_eq!(s.accuracy, 0.5);
        assert_eq!(s.missing, vec!["2".to_string()]);
    }

    #[test]
    fn report_json_shape() {
        let sb = r(0.0, 0.0, 10.0, 10.0);
        let gts = vec![gt("a", sb, "on", "b", sb)];
        let mut acc = RecallAccumulator::default();
        acc.add(&Matching { pairs: vec![(0, 0)] }, &gts);
        let v = serde_json::to_value(acc.report().unwrap()).unwrap();
        assert_eq!(v["N"], 1);
        assert_eq!(v["per_predicate"]["on"]["matched"], 1);
        assert_eq!(v["recall"], 1.0);
    }
}
