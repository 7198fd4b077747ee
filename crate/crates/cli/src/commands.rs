use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use webly_core::assembly::{mix_sources, split_train_val, MixQuota};
use webly_core::bench::{
    run_filter_bias_demo, run_noise_sweep, write_bias_report, write_sweep_summary, ClusterParams,
    NoiseSweepConfig,
};
use webly_core::eval::{
    accuracy, classification_map, detection_map, RankedItem, Sweep,
};
use webly_core::fusion::{
    fuse_average_all, fuse_product_all, predict, temporal_average, ProbabilityVector,
};
use webly_core::io::{
    parse_feature_matrix, parse_id_scores, parse_labels, parse_manifest,
    parse_predictions, parse_probability_series, parse_relevance, parse_segments,
    parse_video_probabilities, render_pr_svg, write_manifest, write_pr_curve, write_predictions,
    write_relevance, write_report, write_segments, write_video_probabilities, FeatureMatrix,
    MetricTable, PredictionRow, ProbabilitySeries, RelevanceRow, SampleSet, Segment,
    VideoProbabilities,
};
use webly_core::localization::{
    localize_frame_by_frame, localize_sliding_window, LocalizationConfig,
};
use webly_core::walk::{filter_by_class, FilterConfig, FilterPolicy, WalkConfig};

use crate::{
    BenchBiasArgs, BenchNoiseArgs, ClassifyArgs, ClassifyMode, Cli, Command, EvalAccArgs,
    EvalDetectArgs, EvalMapArgs, FilterArgs, FuseArgs, Fusion, LocalizeArgs, LocalizeMode,
    MixArgs, SplitArgs, UsageError, WalkArgs,
};

/// Images are kept 450 per class unless told otherwise.
const DEFAULT_TOP_K: usize = 450;

pub(crate) fn dispatch(cli: &Cli) -> Result<()> {
    let primary = match &cli.command {
        Command::Filter(a) => filter(a)?,
        Command::Mix(a) => mix(a)?,
        Command::Split(a) => split(a)?,
        Command::Fuse(a) => fuse(a)?,
        Command::Classify(a) => classify(a)?,
        Command::Localize(a) => localize(a)?,
        Command::EvalAcc(a) => eval_acc(a)?,
        Command::EvalMap(a) => eval_map(a)?,
        Command::EvalDetect(a) => eval_detect(a)?,
        Command::BenchNoise(a) => bench_noise(a)?,
        Command::BenchBias(a) => bench_bias(a)?,
    };
    write_sidecar(cli, &primary)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    tool: &'static str,
    version: &'static str,
    threads: Option<usize>,
    command: &'a Command,
}

/// `<primary>.config.json`, or `config.json` when the primary output is a directory.
fn sidecar_path(primary: &Path) -> PathBuf {
    if primary.is_dir() {
        primary.join("config.json")
    } else {
        let mut name = primary.as_os_str().to_owned();
        name.push(".config.json");
        PathBuf::from(name)
    }
}

fn write_sidecar(cli: &Cli, primary: &Path) -> Result<()> {
    let sidecar = Sidecar {
        tool: "webly",
        version: env!("CARGO_PKG_VERSION"),
        threads: cli.threads,
        command: &cli.command,
    };
    let mut text = serde_json::to_string_pretty(&sidecar)?;
    text.push('\n');
    write(&sidecar_path(primary), &text)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn read_manifest(path: &Path) -> Result<SampleSet> {
    parse_manifest(&read_text(path)?).with_context(|| format!("in {}", path.display()))
}

fn read_features(path: &Path) -> Result<FeatureMatrix> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_feature_matrix(&bytes).with_context(|| format!("in {}", path.display()))
}

fn video_id_of(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_owned)
        .with_context(|| format!("cannot derive a video id from {}", path.display()))
}

fn read_series(paths: &[PathBuf]) -> Result<Vec<ProbabilitySeries>> {
    let series = paths
        .par_iter()
        .map(|p| {
            parse_probability_series(&video_id_of(p)?, &read_text(p)?)
                .with_context(|| format!("in {}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut seen = BTreeSet::new();
    for s in &series {
        if !seen.insert(s.video_id()) {
            bail!("video `{}` given twice", s.video_id());
        }
        if s.class_names() != series[0].class_names() {
            bail!(
                "video `{}` lists different classes than `{}`",
                s.video_id(),
                series[0].video_id()
            );
        }
    }
    Ok(series)
}

fn filter_config(w: &WalkArgs) -> FilterConfig {
    FilterConfig {
        gamma: w.gamma,
        self_loops: w.self_loops,
        max_nodes: w.max_nodes,
        walk: WalkConfig {
            beta: w.beta,
            tol: w.tol,
            max_iter: w.max_iter,
        },
    }
}

fn filter(a: &FilterArgs) -> Result<PathBuf> {
    let samples = read_manifest(&a.manifest)?;
    let features = read_features(&a.features)?;
    let policy = match (a.top_k, a.threshold) {
        (_, Some(t)) => FilterPolicy::Threshold(t),
        (k, None) => FilterPolicy::TopK(k.unwrap_or(DEFAULT_TOP_K)),
    };
    let cfg = filter_config(&a.walk);
    let out = filter_by_class(&samples, &features, &cfg, policy)?;

    let rows: Vec<RelevanceRow> = samples
        .iter()
        .enumerate()
        .map(|(i, rec)| RelevanceRow {
            id: rec.id.clone(),
            class_label: rec.class_label.clone(),
            relevance: out.relevance[i],
            relative: out.relevance[i] * out.class_size[i] as f64,
            kept: out.kept[i],
        })
        .collect();
    let kept: Vec<usize> = (0..samples.len()).filter(|&i| out.kept[i]).collect();
    write(&a.out_manifest, write_manifest(&samples.select(&kept)))?;
    write(&a.out_relevance, write_relevance(&rows))?;
    for (class, iters, residual) in &out.diagnostics {
        eprintln!("{class}: converged in {iters} iterations (residual {residual:.3e})");
    }
    println!("kept {} of {} samples", kept.len(), samples.len());
    Ok(a.out_manifest.clone())
}

fn mix(a: &MixArgs) -> Result<PathBuf> {
    let quota: MixQuota = a
        .quota
        .parse()
        .map_err(|e| UsageError(format!("invalid --quota: {e}")))?;
    let mut records = Vec::new();
    for path in &a.manifests {
        records.extend(read_manifest(path)?.into_records());
    }
    let candidates = SampleSet::new(records)?;
    let mut by_id: HashMap<String, f64> = HashMap::new();
    for path in &a.relevance {
        let rows = parse_relevance(&read_text(path)?).with_context(|| format!("in {}", path.display()))?;
        for r in rows {
            if by_id.insert(r.id.clone(), r.relative).is_some() {
                bail!("sample `{}` has relevance in more than one file", r.id);
            }
        }
    }
    let relevance: Vec<f64> = if a.relevance.is_empty() {
        vec![0.0; candidates.len()]
    } else {
        candidates
            .iter()
            .map(|r| {
                by_id
                    .get(&r.id)
                    .copied()
                    .with_context(|| format!("no relevance for sample `{}`", r.id))
            })
            .collect::<Result<_>>()?
    };
    let mixed = mix_sources(&candidates, &relevance, &quota, a.allow_short)?;
    write(&a.out, write_manifest(&mixed))?;
    println!("mixed {} samples ({quota} per class)", mixed.len());
    Ok(a.out.clone())
}

fn split(a: &SplitArgs) -> Result<PathBuf> {
    let set = read_manifest(&a.manifest)?;
    let (train, val) = split_train_val(&set, a.ratio, a.seed)?;
    write(&a.out_train, write_manifest(&train))?;
    write(&a.out_val, write_manifest(&val))?;
    println!("train {} / val {}", train.len(), val.len());
    Ok(a.out_train.clone())
}

fn read_table(path: &Path) -> Result<VideoProbabilities> {
    parse_video_probabilities(&read_text(path)?).with_context(|| format!("in {}", path.display()))
}

/// Per-video vectors of every table, aligned on the first table's video order.
fn align_tables(tables: &[VideoProbabilities], names: &[PathBuf]) -> Result<Vec<(String, Vec<ProbabilityVector>)>> {
    let first = &tables[0];
    let lookups: Vec<HashMap<&str, &Vec<f64>>> = tables
        .iter()
        .map(|t| t.rows.iter().map(|(v, p)| (v.as_str(), p)).collect())
        .collect();
    for (t, name) in tables.iter().zip(names) {
        if t.class_names != first.class_names {
            bail!("{} lists different classes than {}", name.display(), names[0].display());
        }
        if t.rows.len() != first.rows.len() {
            bail!("{} has {} videos, {} has {}", name.display(), t.rows.len(), names[0].display(), first.rows.len());
        }
    }
    first
        .rows
        .iter()
        .map(|(video, _)| {
            let vectors = lookups
                .iter()
                .zip(names)
                .map(|(lookup, name)| {
                    let p = lookup
                        .get(video.as_str())
                        .with_context(|| format!("video `{video}` missing from {}", name.display()))?;
                    Ok(ProbabilityVector::new((*p).clone(), first.class_names.clone())?)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((video.clone(), vectors))
        })
        .collect()
}

fn prediction_row(video: &str, p: &ProbabilityVector) -> PredictionRow {
    let pred = predict(p);
    PredictionRow {
        video_id: video.to_owned(),
        predicted: pred.label,
        score: pred.probability,
        tie: pred.tie,
    }
}

fn fuse(a: &FuseArgs) -> Result<PathBuf> {
    let mut paths = a.streams.clone();
    paths.extend(a.flow_streams.iter().cloned());
    let tables = paths.iter().map(|p| read_table(p)).collect::<Result<Vec<_>>>()?;
    let aligned = align_tables(&tables, &paths)?;
    let n_main = a.streams.len();

    let mut fused_rows = Vec::with_capacity(aligned.len());
    let mut predictions = Vec::with_capacity(aligned.len());
    for (video, vectors) in &aligned {
        let mut streams = vectors[..n_main].to_vec();
        if vectors.len() > n_main {
            streams.push(fuse_average_all(&vectors[n_main..])?);
        }
        let fused = match a.fusion {
            Fusion::Average => fuse_average_all(&streams)?,
            Fusion::Product => fuse_product_all(&streams)
                .with_context(|| format!("video `{video}`"))?,
        };
        predictions.push(prediction_row(video, &fused));
        fused_rows.push((video.clone(), fused.into_probs()));
    }
    let table = VideoProbabilities {
        class_names: tables[0].class_names.clone(),
        rows: fused_rows,
    };
    write(&a.out, write_video_probabilities(&table))?;
    if let Some(path) = &a.predictions {
        write(path, write_predictions(&predictions))?;
    }
    println!("fused {} videos", table.rows.len());
    Ok(a.out.clone())
}

fn classify(a: &ClassifyArgs) -> Result<PathBuf> {
    let mut series = read_series(&a.series)?;
    series.sort_by(|x, y| x.video_id().cmp(y.video_id()));
    let averages = series
        .par_iter()
        .map(temporal_average)
        .collect::<Result<Vec<_>, _>>()?;
    let text = match a.mode {
        ClassifyMode::Trimmed => write_predictions(
            &series
                .iter()
                .zip(&averages)
                .map(|(s, p)| prediction_row(s.video_id(), p))
                .collect::<Vec<_>>(),
        ),
        ClassifyMode::Untrimmed => write_video_probabilities(&VideoProbabilities {
            class_names: series[0].class_names().to_vec(),
            rows: series
                .iter()
                .zip(averages)
                .map(|(s, p)| (s.video_id().to_owned(), p.into_probs()))
                .collect(),
        }),
    };
    write(&a.out, text)?;
    println!("classified {} videos", series.len());
    Ok(a.out.clone())
}

fn localize(a: &LocalizeArgs) -> Result<PathBuf> {
    let series = read_series(&a.series)?;
    let cfg = LocalizationConfig {
        prob_threshold: a.threshold.unwrap_or(0.5),
        min_duration_s: a.min_duration,
        window_s: a.window,
        stride_s: a.stride,
        merge_overlaps: a.merge,
        gap_frames: a.gap_frames,
    };
    let per_video = series
        .par_iter()
        .map(|s| {
            match a.mode {
                LocalizeMode::Frames => localize_frame_by_frame(s, &cfg),
                LocalizeMode::Window => localize_sliding_window(s, &cfg),
            }
            .with_context(|| format!("video `{}`", s.video_id()))
        })
        .collect::<Result<Vec<_>>>()?;
    let segments: Vec<Segment> = per_video.into_iter().flatten().collect();
    write(&a.out, write_segments(&segments))?;
    println!("{} segments in {} videos", segments.len(), series.len());
    Ok(a.out.clone())
}

fn single_labels(path: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (video, class) in parse_labels(&read_text(path)?).with_context(|| format!("in {}", path.display()))? {
        if out.insert(video.clone(), class).is_some() {
            bail!("video `{video}` has several labels in {}", path.display());
        }
    }
    Ok(out)
}

fn eval_acc(a: &EvalAccArgs) -> Result<PathBuf> {
    if a.predictions.len() != a.truth.len() {
        return Err(UsageError(format!(
            "got {} prediction files but {} truth files",
            a.predictions.len(),
            a.truth.len()
        ))
        .into());
    }
    let mut table = MetricTable::new("split", vec!["accuracy".into()]);
    let mut sum = 0.0;
    for (i, (pred_path, truth_path)) in a.predictions.iter().zip(&a.truth).enumerate() {
        let truth = single_labels(truth_path)?;
        let preds = parse_predictions(&read_text(pred_path)?)
            .with_context(|| format!("in {}", pred_path.display()))?;
        let mut pairs = Vec::with_capacity(preds.len());
        let mut seen = BTreeSet::new();
        for p in &preds {
            let t = truth
                .get(&p.video_id)
                .with_context(|| format!("no truth for video `{}`", p.video_id))?;
            if !seen.insert(p.video_id.as_str()) {
                bail!("video `{}` predicted twice in {}", p.video_id, pred_path.display());
            }
            pairs.push((p.predicted.as_str(), t.as_str()));
        }
        if let Some(missing) = truth.keys().find(|v| !seen.contains(v.as_str())) {
            bail!("no prediction for video `{missing}` in {}", pred_path.display());
        }
        let acc = accuracy(&pairs)?;
        sum += acc;
        table.push_row(format!("split{}", i + 1), vec![acc]);
    }
    table.push_row("mean", vec![sum / a.predictions.len() as f64]);
    write(&a.out, write_report(&table))?;
    println!("mean accuracy {:.4}", sum / a.predictions.len() as f64);
    Ok(a.out.clone())
}

fn eval_map(a: &EvalMapArgs) -> Result<PathBuf> {
    let scores = read_table(&a.scores)?;
    let labels = parse_labels(&read_text(&a.truth)?).with_context(|| format!("in {}", a.truth.display()))?;
    let videos: BTreeSet<&str> = scores.rows.iter().map(|(v, _)| v.as_str()).collect();
    if let Some((v, _)) = labels.iter().find(|(v, _)| !videos.contains(v.as_str())) {
        bail!("truth video `{v}` has no scores");
    }
    let positives: BTreeSet<(&str, &str)> = labels.iter().map(|(v, c)| (v.as_str(), c.as_str())).collect();
    let evaluated: BTreeSet<&str> = labels.iter().map(|(_, c)| c.as_str()).collect();
    if let Some(c) = evaluated.iter().find(|c| !scores.class_names.iter().any(|n| n == *c)) {
        bail!("truth class `{c}` is not a score column");
    }
    // classes without any positive video are not ranked
    let mut per_class = BTreeMap::new();
    for (k, class) in scores.class_names.iter().enumerate() {
        if !evaluated.contains(class.as_str()) {
            continue;
        }
        let items = scores
            .rows
            .iter()
            .map(|(video, p)| RankedItem {
                id: video.clone(),
                score: p[k],
                positive: positives.contains(&(video.as_str(), class.as_str())),
            })
            .collect();
        per_class.insert(class.clone(), items);
    }
    let (mean, per) = classification_map(&per_class)?;
    let mut table = MetricTable::new("class", vec!["ap".into()]);
    for (class, ap) in per {
        table.push_row(class, vec![ap]);
    }
    table.push_row("mean", vec![mean]);
    write(&a.out, write_report(&table))?;
    println!("mAP {mean:.4}");
    Ok(a.out.clone())
}

fn read_segments(path: &Path) -> Result<Vec<Segment>> {
    parse_segments(&read_text(path)?).with_context(|| format!("in {}", path.display()))
}

fn eval_detect(a: &EvalDetectArgs) -> Result<PathBuf> {
    if a.thresholds.is_empty() {
        return Err(UsageError("--thresholds needs at least one value".into()).into());
    }
    let dets = read_segments(&a.detections)?;
    let truth = read_segments(&a.truth)?;
    let map = detection_map(&dets, &truth, &a.thresholds)?;
    write(&a.out, write_report(&map.to_metric_table(&a.name)))?;
    println!(
        "mAP {}",
        map.mean.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" ")
    );
    Ok(a.out.clone())
}

fn bench_noise(a: &BenchNoiseArgs) -> Result<PathBuf> {
    let sweep = if a.thresholds.is_empty() {
        webly_core::bench::default_removal_sweep()
    } else {
        Sweep::Thresholds(a.thresholds.clone())
    };
    let cfg = NoiseSweepConfig {
        clusters: ClusterParams {
            n_inliers: a.inliers,
            n_outlier_pool: a.pool,
            dim: a.dim,
            separation: a.separation,
            sigma: a.sigma,
            seed: a.seed,
        },
        levels: a.levels.clone(),
        filter: filter_config(&a.walk),
        sweep,
    };
    let results = run_noise_sweep(&cfg)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("cannot create {}", a.out_dir.display()))?;
    for r in &results {
        write(&a.out_dir.join(level_file(r.level)), write_pr_curve(&r.points))?;
    }
    write(&a.out_dir.join("summary.csv"), write_sweep_summary(&results))?;
    if a.svg {
        let curves: Vec<(String, Vec<_>)> = results
            .iter()
            .map(|r| (format!("{:.0}% noise", r.level * 100.0), r.points.clone()))
            .collect();
        write(&a.out_dir.join("pr.svg"), render_pr_svg("random-walk filtering", &curves))?;
    }
    for r in &results {
        let best = r.best_recall_at_full_precision().unwrap_or(f64::NAN);
        println!(
            "noise {:>5.2}: recall {:.3} at precision 1, matched P=R={:.3}",
            r.level, best, r.matched.precision
        );
    }
    Ok(a.out_dir.clone())
}

fn level_file(level: f64) -> String {
    format!("noise_{level:.2}.csv")
}

fn bench_bias(a: &BenchBiasArgs) -> Result<PathBuf> {
    let samples = read_manifest(&a.manifest)?;
    let features = read_features(&a.features)?;
    let confidences = parse_id_scores(&read_text(&a.confidences)?)
        .with_context(|| format!("in {}", a.confidences.display()))?;
    let conf_by_id: HashMap<&str, f64> = confidences.iter().map(|(id, s)| (id.as_str(), *s)).collect();
    let conf: Vec<f64> = samples
        .iter()
        .map(|r| {
            conf_by_id
                .get(r.id.as_str())
                .copied()
                .with_context(|| format!("no confidence for sample `{}`", r.id))
        })
        .collect::<Result<_>>()?;

    let independent = match (a.top_k, a.threshold) {
        (Some(k), _) => FilterPolicy::TopK(k),
        (None, Some(t)) => FilterPolicy::Threshold(t),
        (None, None) => return Err(UsageError("give --top-k or --threshold".into()).into()),
    };
    let supervised = match (a.confidence_threshold, a.top_k) {
        (Some(t), _) => FilterPolicy::Threshold(t),
        (None, Some(k)) => FilterPolicy::TopK(k),
        (None, None) => {
            return Err(UsageError("give --top-k or --confidence-threshold".into()).into())
        }
    };
    let cfg = filter_config(&a.walk);
    let walked = filter_by_class(&samples, &features, &cfg, FilterPolicy::Threshold(0.0))?;
    let relative: Vec<f64> = walked
        .relevance
        .iter()
        .zip(&walked.class_size)
        .map(|(r, &n)| r * n as f64)
        .collect();
    let rows = run_filter_bias_demo(&samples, &relative, &conf, independent, supervised)?;
    write(&a.out, write_bias_report(&rows))?;
    for r in &rows {
        println!(
            "{}: jaccard {:.3} (chance {:.3})",
            r.class_label, r.jaccard, r.chance_jaccard
        );
    }
    Ok(a.out.clone())
}
