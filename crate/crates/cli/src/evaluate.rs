use std::collections::{BTreeMap, BTreeSet, HashMap};

use forge_core::eval::{ground_truth, headline, EvalReport, GroundedTriplet, QaScore};
use forge_core::{match_triplets, parse_prediction, score_choice_qa, ChoiceItem, RecallAccumulator};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::{EvalQaArgs, EvalSggArgs};
use crate::common::{load_config, load_scenes, read_jsonl_lines, thread_pool, write_json, CliError, CliResult};

#[derive(Deserialize)]
struct SggPrediction {
    image_id: u64,
    output: String,
}

#[derive(Deserialize)]
struct QaPrediction {
    id: String,
    answer: usize,
}

#[derive(Serialize)]
struct SggReport {
    #[serde(flatten)]
    report: EvalReport,
    /// Ground-truth images without any prediction line.
    missing_images: Vec<u64>,
}

pub fn run_sgg(args: &EvalSggArgs) -> CliResult<()> {
    let mut cfg = load_config(&args.config)?;
    if let Some(iou) = args.iou {
        cfg.iou = iou;
    }
    if let Some(k) = args.topk {
        cfg.topk = Some(k);
    }
    cfg.validate()?;
    let matcher = cfg.match_config()?;
    let pool = thread_pool(args.config.jobs)?;

    let scenes = load_scenes(&args.annotations)?;
    let gold: BTreeMap<u64, Vec<GroundedTriplet>> = scenes
        .iter()
        .map(|s| Ok((s.meta.id, ground_truth(s)?)))
        .collect::<forge_core::Result<_>>()?;

    let mut outputs: HashMap<u64, Vec<GroundedTriplet>> = HashMap::new();
    let mut unparsed = 0usize;
    for p in read_jsonl_lines::<SggPrediction>(&args.pred)? {
        if !gold.contains_key(&p.image_id) {
            log::warn!("prediction for unknown image {} ignored", p.image_id);
            continue;
        }
        let parsed = parse_prediction(&p.output);
        unparsed += parsed.diagnostics.len();
        outputs.entry(p.image_id).or_default().extend(parsed.triplets);
    }
    if unparsed > 0 {
        log::warn!("{unparsed} prediction lines could not be parsed");
    }
    let missing_images: Vec<u64> = gold.keys().filter(|id| !outputs.contains_key(id)).copied().collect();

    let acc = pool.install(|| {
        gold.par_iter()
            .map(|(id, gt)| {
                let mut preds = outputs.get(id).map(Vec::as_slice).unwrap_or(&[]);
                if let Some(k) = cfg.topk {
                    preds = &preds[..preds.len().min(k)];
                }
                let mut acc = RecallAccumulator::default();
                acc.add(&match_triplets(preds, gt, &matcher), gt);
                acc
            })
            .reduce(RecallAccumulator::default, |mut a, b| {
                a.merge(&b);
                a
            })
    });
    let report = acc
        .report()
        .map_err(|_| CliError::NoInput("no ground-truth triplets".into()))?;
    println!("{}", headline(&report));
    if !missing_images.is_empty() {
        println!("images without predictions: {}", missing_images.len());
    }
    if let Some(out) = &args.out {
        write_json(out, &SggReport { report, missing_images })?;
    }
    Ok(())
}

pub fn run_qa(args: &EvalQaArgs) -> CliResult<()> {
    let gold: Vec<ChoiceItem> = read_jsonl_lines(&args.gold)?;
    if gold.is_empty() {
        return Err(CliError::NoInput("no QA items".into()));
    }
    let known: BTreeSet<&str> = gold.iter().map(|g| g.id.as_str()).collect();
    let mut preds = HashMap::new();
    for p in read_jsonl_lines::<QaPrediction>(&args.pred)? {
        if !known.contains(p.id.as_str()) {
            log::warn!("prediction for unknown item {} ignored", p.id);
            continue;
        }
        preds.insert(p.id, p.answer);
    }
    let score: QaScore = score_choice_qa(&preds, &gold);
    if !score.missing.is_empty() {
        log::warn!("{} items without a prediction counted wrong", score.missing.len());
    }
    println!(
        "Accuracy: {:.2}  ({} / {})",
        score.accuracy * 100.0,
        score.correct,
        score.total
    );
    if let Some(out) = &args.out {
        write_json(out, &score)?;
    }
    Ok(())
}
