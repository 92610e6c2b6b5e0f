//! Command-line entry point: one subcommand per pipeline stage, all
//! artifacts written under `--out`, every bundle finished with a
//! content-hash manifest.
//!
//! Later stages reuse earlier artifacts from the same bundle when the
//! stored configuration matches the resolved one, and recompute them
//! otherwise; results are identical for any `--threads` value.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sevml::automl::{
    compare_models, finalize, tune_model, FinalModel, FinalizeOutcome, LeaderboardEntry,
    PipelineConfig, SortMetric, TuneOutcome,
};
use sevml::dataset::{
    load_csv, profile, stratified_split, synthesize_table1, write_csv, Dataset, FeatureSchema,
    Severity,
};
use sevml::explain::{
    explain_model, force_breakdown, shap_summary, ExplainOptions, ShapMatrix, ShapSummary,
};
use sevml::metrics::{pr_average_precision, roc_auc_ovr, ConfusionMatrix, MetricReport};
use sevml::models::{argmax, ModelKind, Proba};
use sevml::report::{
    leaderboard_csv, render_svg, shap_values_csv, write_run_bundle, Artifact, PlotData, PlotSpec,
};
use sevml::resample::smote_tomek;
use sevml::{stream, Error, Result, N_CATEGORIES};

#[derive(Parser)]
#[command(
    name = "sevml",
    version,
    about = "Crash-severity AutoML: encode, rebalance, compare, tune, finalize, explain, report"
)]
struct Cli {
    /// Cap worker threads; results are identical for any value.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a CSV against the crash schema and summarize it
    Validate(ValidateArgs),
    /// Print per-level severity counts for a dataset
    Profile(ProfileArgs),
    /// Generate a synthetic dataset matching the published marginals
    Synth(SynthArgs),
    /// Rebalance a dataset with SMOTE followed by Tomek-link removal
    Resample(ResampleArgs),
    /// Cross-validate the model zoo into a leaderboard
    Compare(PipelineArgs),
    /// Random-search hyperparameters for one model
    Tune(ModelStageArgs),
    /// Train the chosen model and score the holdout once
    Finalize(ModelStageArgs),
    /// Compute Shapley attributions for the finalized model
    Explain(ExplainArgs),
    /// Render SVG plots and finish the run bundle
    Report(ExplainArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// Input CSV with the 17 feature columns plus Severity
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long)]
    data: PathBuf,
    /// Also write profile.json into this bundle directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of rows to generate
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Couple dark/non-intersection odds among fatal rows
    #[arg(long, default_value = "on", value_parser = ["on", "off"])]
    interactions: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ResampleArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// SMOTE neighbor count
    #[arg(long, default_value_t = sevml::automl::SMOTE_K)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

/// Flags that override the JSON config file, which overrides defaults.
#[derive(Args)]
struct ConfigArgs {
    /// JSON file mirroring the pipeline configuration
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Holdout fraction in (0, 0.5]
    #[arg(long)]
    holdout: Option<f64>,
    /// Cross-validation fold count
    #[arg(long)]
    folds: Option<usize>,
    /// Skip SMOTE+Tomek inside training folds
    #[arg(long)]
    no_resample: bool,
    /// Skip z-score normalization
    #[arg(long)]
    no_normalize: bool,
    /// |r| above which correlated features are dropped
    #[arg(long)]
    threshold: Option<f64>,
    /// Leaderboard metric: accuracy, auc, recall, precision, or f1
    #[arg(long)]
    sort_metric: Option<String>,
    /// Comma-separated model kinds to include
    #[arg(long)]
    models: Option<String>,
    /// Random-search candidate count for tuning
    #[arg(long)]
    budget: Option<usize>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Bundle directory; every artifact lands here
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ModelStageArgs {
    #[command(flatten)]
    base: PipelineArgs,
    /// Model kind; defaults to the tuned or leaderboard winner
    #[arg(long)]
    model: Option<String>,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    base: PipelineArgs,
    /// Model kind; defaults to the tuned or leaderboard winner
    #[arg(long)]
    model: Option<String>,
    /// Dataset row to break down (repeatable); defaults to holdout rows
    #[arg(long = "instance")]
    instances: Vec<usize>,
    /// Explain every dataset row instead
    #[arg(long)]
    all: bool,
    /// Category for force breakdowns; defaults to the predicted one
    #[arg(long)]
    category: Option<usize>,
    /// Permutations per instance for non-tree models
    #[arg(long, default_value_t = 500)]
    permutations: usize,
    /// Background sample size for non-tree models
    #[arg(long, default_value_t = 100)]
    background: usize,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Schema(_) | Error::Validation(_) | Error::Stratify { .. } | Error::Io { .. } => 2,
        Error::Config(_) => 3,
        Error::Model(_) | Error::Resample(_) | Error::Explain(_) | Error::Render(_) => 4,
    }
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: configuring {threads} threads: {e}");
            std::process::exit(3);
        }
    }
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Validate(args) => cmd_validate(&args),
        Command::Profile(args) => cmd_profile(&args),
        Command::Synth(args) => cmd_synth(&args),
        Command::Resample(args) => cmd_resample(&args),
        Command::Compare(args) => {
            let ctx = Ctx::new("compare", &args)?;
            stage_compare(&ctx).map(|_| ())
        }
        Command::Tune(args) => {
            let ctx = Ctx::new("tune", &args.base)?;
            stage_tune(&ctx, parse_kind_flag(&args.model)?).map(|_| ())
        }
        Command::Finalize(args) => {
            let ctx = Ctx::new("finalize", &args.base)?;
            stage_finalize(&ctx, parse_kind_flag(&args.model)?).map(|_| ())
        }
        Command::Explain(args) => {
            let ctx = Ctx::new("explain", &args.base)?;
            stage_explain(&ctx, &args).map(|_| ())
        }
        Command::Report(args) => {
            let ctx = Ctx::new("report", &args.base)?;
            stage_report(&ctx, &args)
        }
    }
}

fn parse_kind(s: &str) -> Result<ModelKind> {
    ModelKind::ALL
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown model kind '{s}'; expected one of {}",
                ModelKind::ALL.map(|k| k.name()).join(", ")
            ))
        })
}

fn parse_kind_flag(flag: &Option<String>) -> Result<Option<ModelKind>> {
    flag.as_deref().map(parse_kind).transpose()
}

fn parse_sort_metric(s: &str) -> Result<SortMetric> {
    let all = [
        SortMetric::Accuracy,
        SortMetric::Auc,
        SortMetric::Recall,
        SortMetric::Precision,
        SortMetric::F1,
    ];
    all.into_iter().find(|m| m.name() == s).ok_or_else(|| {
        Error::Config(format!(
            "unknown sort metric '{s}'; expected one of {}",
            all.map(|m| m.name()).join(", ")
        ))
    })
}

/// defaults < config file < flags, validated at the end.
fn resolve_config(args: &ConfigArgs) -> Result<PipelineConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
            serde_json::from_slice::<PipelineConfig>(&bytes)
                .map_err(|e| Error::Config(format!("parsing {}: {e}", path.display())))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.holdout {
        cfg.holdout_fraction = v;
    }
    if let Some(v) = args.folds {
        cfg.cv_folds = v;
    }
    if args.no_resample {
        cfg.resample = false;
    }
    if args.no_normalize {
        cfg.normalize = false;
    }
    if let Some(v) = args.threshold {
        cfg.multicollinearity_threshold = v;
    }
    if let Some(s) = &args.sort_metric {
        cfg.sort_metric = parse_sort_metric(s)?;
    }
    if let Some(s) = &args.models {
        cfg.models = s
            .split(',')
            .map(|p| parse_kind(p.trim()))
            .collect::<Result<Vec<_>>>()?;
    }
    if let Some(v) = args.budget {
        cfg.tune_budget = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| Error::Validation(format!("parsing {}: {e}", path.display())))
}

fn severity_names() -> [String; N_CATEGORIES] {
    Severity::ALL.map(|s| s.text().to_string())
}

// ---------------------------------------------------------------------
// Stage-free commands
// ---------------------------------------------------------------------

fn cmd_validate(args: &ValidateArgs) -> Result<()> {
    let data = load_csv(&args.data, &FeatureSchema::crash())?;
    let counts = data.class_counts();
    println!(
        "ok: {} rows, {} features, severity counts minor={} serious={} fatal={}",
        data.n_rows(),
        data.schema().len(),
        counts[0],
        counts[1],
        counts[2]
    );
    println!("schema hash {}", data.schema().hash_hex());
    Ok(())
}

fn cmd_profile(args: &ProfileArgs) -> Result<()> {
    let data = load_csv(&args.data, &FeatureSchema::crash())?;
    let table = profile(&data)?;
    println!(
        "{:<22} {:<28} {:>6} {:>7} {:>8} {:>6}",
        "feature", "level", "total", "minor", "serious", "fatal"
    );
    for row in &table.rows {
        println!(
            "{:<22} {:<28} {:>6} {:>7} {:>8} {:>6}",
            row.feature, row.level, row.total, row.per_class[0], row.per_class[1], row.per_class[2]
        );
    }
    if let Some(out) = &args.out {
        write_run_bundle(out, &[Artifact::json("profile.json", &table)?])?;
        println!("wrote {}", out.join("profile.json").display());
    }
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let interactions = args.interactions == "on";
    let data = synthesize_table1(args.n, args.seed, interactions)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(args.out.display().to_string(), e))?;
    let csv_path = args.out.join("synthetic.csv");
    write_csv(&data, &csv_path)?;
    #[derive(Serialize)]
    struct SynthMeta {
        n: usize,
        seed: u64,
        interactions: bool,
    }
    write_run_bundle(
        &args.out,
        &[Artifact::json(
            "synth.json",
            &SynthMeta {
                n: args.n,
                seed: args.seed,
                interactions,
            },
        )?],
    )?;
    let counts = data.class_counts();
    println!(
        "wrote {} ({} rows: minor={} serious={} fatal={})",
        csv_path.display(),
        data.n_rows(),
        counts[0],
        counts[1],
        counts[2]
    );
    Ok(())
}

fn cmd_resample(args: &ResampleArgs) -> Result<()> {
    let data = load_csv(&args.data, &FeatureSchema::crash())?;
    let kinds = data.schema().column_kinds();
    let output = smote_tomek(
        data.matrix(),
        &data.label_codes(),
        &kinds,
        args.k,
        args.seed,
    )?;
    let labels = output
        .labels
        .iter()
        .map(|&c| Severity::from_code(c).expect("resampled labels stay in range"))
        .collect();
    let resampled = Dataset::from_parts(output.matrix, labels, data.schema().clone())?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(args.out.display().to_string(), e))?;
    write_csv(&resampled, &args.out.join("resampled.csv"))?;
    write_run_bundle(
        &args.out,
        &[Artifact::json("resample_report.json", &output.report)?],
    )?;
    let counts = resampled.class_counts();
    println!(
        "wrote {} ({} rows: minor={} serious={} fatal={})",
        args.out.join("resampled.csv").display(),
        resampled.n_rows(),
        counts[0],
        counts[1],
        counts[2]
    );
    Ok(())
}

// ---------------------------------------------------------------------
// Pipeline stages sharing one bundle
// ---------------------------------------------------------------------

struct Ctx {
    command: &'static str,
    config: PipelineConfig,
    data: Dataset,
    data_path: PathBuf,
    out: PathBuf,
}

impl Ctx {
    fn new(command: &'static str, base: &PipelineArgs) -> Result<Ctx> {
        let config = resolve_config(&base.cfg)?;
        let data = load_csv(&base.data, &FeatureSchema::crash())?;
        Ok(Ctx {
            command,
            config,
            data,
            data_path: base.data.clone(),
            out: base.out.clone(),
        })
    }

    /// True when the bundle's stored configuration equals the resolved
    /// one, making earlier-stage artifacts safe to reuse.
    fn stored_config_matches(&self) -> bool {
        let path = self.out.join("config.json");
        path.exists()
            && matches!(read_json::<PipelineConfig>(&path), Ok(c) if c == self.config)
    }

    /// config.json plus run.json: the fully-resolved configuration and
    /// enough provenance to replay the run.
    fn echo_artifacts(&self) -> Result<Vec<Artifact>> {
        let bytes = fs::read(&self.data_path)
            .map_err(|e| Error::io(self.data_path.display().to_string(), e))?;
        let digest = Sha256::digest(&bytes);
        let mut sha = String::with_capacity(64);
        for b in digest {
            let _ = write!(sha, "{b:02x}");
        }
        #[derive(Serialize)]
        struct RunMeta<'a> {
            command: &'a str,
            data_path: String,
            data_sha256: String,
        }
        Ok(vec![
            Artifact::json("config.json", &self.config)?,
            Artifact::json(
                "run.json",
                &RunMeta {
                    command: self.command,
                    data_path: self.data_path.display().to_string(),
                    data_sha256: sha,
                },
            )?,
        ])
    }
}

#[derive(Serialize, Deserialize)]
struct Splits {
    train: Vec<usize>,
    holdout: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct HoldoutReport {
    report: MetricReport,
    confusion: ConfusionMatrix,
}

#[derive(Serialize, Deserialize)]
struct HoldoutEval {
    labels: Vec<usize>,
    scores: Vec<Proba>,
}

fn stage_compare(ctx: &Ctx) -> Result<Vec<LeaderboardEntry>> {
    let outcome = compare_models(&ctx.config, &ctx.data)?;
    let mut artifacts = ctx.echo_artifacts()?;
    artifacts.push(Artifact::json("leaderboard.json", &outcome.leaderboard)?);
    artifacts.push(Artifact {
        path: "leaderboard.csv".to_string(),
        bytes: leaderboard_csv(&outcome.leaderboard)?,
    });
    artifacts.push(Artifact::json("fold_metrics.json", &outcome.fold_reports)?);
    artifacts.push(Artifact::json("preprocessing.json", &outcome.preprocess)?);
    artifacts.push(Artifact::json("leakage.json", &outcome.leakage)?);
    artifacts.push(Artifact::json(
        "splits.json",
        &Splits {
            train: outcome.train_indices.clone(),
            holdout: outcome.holdout_indices.clone(),
        },
    )?);
    write_run_bundle(&ctx.out, &artifacts)?;
    println!(
        "{:<9} {:>9} {:>8} {:>8} {:>10} {:>8}",
        "model", "accuracy", "auc", "recall", "precision", "f1"
    );
    for e in &outcome.leaderboard {
        println!(
            "{:<9} {:>9.4} {:>8.4} {:>8.4} {:>10.4} {:>8.4}",
            e.kind.name(),
            e.accuracy,
            e.auc,
            e.recall,
            e.precision,
            e.f1
        );
    }
    println!(
        "audited {} resampled training rows across {} folds: {} leakage violations",
        outcome.leakage.train_rows_audited, outcome.leakage.folds, outcome.leakage.violations
    );
    Ok(outcome.leaderboard)
}

fn load_or_compare(ctx: &Ctx) -> Result<Vec<LeaderboardEntry>> {
    let path = ctx.out.join("leaderboard.json");
    if ctx.stored_config_matches() && path.exists() {
        return read_json(&path);
    }
    stage_compare(ctx)
}

fn stage_tune(ctx: &Ctx, flag: Option<ModelKind>) -> Result<TuneOutcome> {
    let kind = match flag {
        Some(k) => k,
        None => load_or_compare(ctx)?[0].kind,
    };
    let outcome = tune_model(&ctx.config, &ctx.data, kind, ctx.config.tune_budget)?;
    let mut artifacts = ctx.echo_artifacts()?;
    artifacts.push(Artifact::json("tuned.json", &outcome)?);
    write_run_bundle(&ctx.out, &artifacts)?;
    println!(
        "tuned {} over {} candidates: best {} {:.4} with {:?}",
        kind.name(),
        outcome.candidates.len(),
        outcome.sort_metric,
        outcome.score,
        outcome.hyper
    );
    Ok(outcome)
}

/// Winner choice for finalization: explicit flag, else a matching tuned
/// result, else the leaderboard top (comparing first if needed).
fn choose_final_model(
    ctx: &Ctx,
    flag: Option<ModelKind>,
) -> Result<(ModelKind, BTreeMap<String, f64>)> {
    let tuned_path = ctx.out.join("tuned.json");
    let tuned: Option<TuneOutcome> = if ctx.stored_config_matches() && tuned_path.exists() {
        Some(read_json(&tuned_path)?)
    } else {
        None
    };
    match flag {
        Some(k) => {
            let hyper = tuned
                .filter(|t| t.kind == k)
                .map(|t| t.hyper)
                .unwrap_or_default();
            Ok((k, hyper))
        }
        None => match tuned {
            Some(t) => Ok((t.kind, t.hyper)),
            None => Ok((load_or_compare(ctx)?[0].kind, BTreeMap::new())),
        },
    }
}

fn stage_finalize(ctx: &Ctx, flag: Option<ModelKind>) -> Result<FinalizeOutcome> {
    let (kind, hyper) = choose_final_model(ctx, flag)?;
    let outcome = finalize(&ctx.config, &ctx.data, kind, &hyper)?;
    let mut artifacts = ctx.echo_artifacts()?;
    artifacts.push(Artifact::json("model.json", &outcome.model)?);
    artifacts.push(Artifact::json(
        "holdout_report.json",
        &HoldoutReport {
            report: outcome.report.clone(),
            confusion: outcome.confusion.clone(),
        },
    )?);
    artifacts.push(Artifact::json(
        "holdout_eval.json",
        &HoldoutEval {
            labels: outcome.holdout_labels.clone(),
            scores: outcome.holdout_scores.clone(),
        },
    )?);
    artifacts.push(Artifact::json(
        "splits.json",
        &Splits {
            train: outcome.train_indices.clone(),
            holdout: outcome.holdout_indices.clone(),
        },
    )?);
    write_run_bundle(&ctx.out, &artifacts)?;
    println!(
        "finalized {} on {} training rows; holdout accuracy {:.4}, macro AUC {:.4}",
        kind.name(),
        outcome.train_indices.len(),
        outcome.report.accuracy,
        outcome.report.auc_ovr_macro
    );
    Ok(outcome)
}

fn load_or_finalize(ctx: &Ctx, flag: Option<ModelKind>) -> Result<FinalModel> {
    let path = ctx.out.join("model.json");
    if ctx.stored_config_matches() && path.exists() {
        let model: FinalModel = read_json(&path)?;
        if flag.is_none_or(|k| k == model.fitted.kind()) {
            return Ok(model);
        }
    }
    Ok(stage_finalize(ctx, flag)?.model)
}

#[derive(Serialize)]
struct ShapBase {
    model: ModelKind,
    output_kind: sevml::explain::OutputKind,
    base: Proba,
}

fn stage_explain(ctx: &Ctx, args: &ExplainArgs) -> Result<(ShapMatrix, ShapSummary)> {
    let model = load_or_finalize(ctx, parse_kind_flag(&args.model)?)?;
    let labels = ctx.data.label_codes();
    let (train_indices, holdout_indices) = stratified_split(
        &labels,
        ctx.config.holdout_fraction,
        stream::derive(ctx.config.seed, "holdout", &[]),
    )?;
    let instance_ids: Vec<usize> = if args.all {
        (0..ctx.data.n_rows()).collect()
    } else if !args.instances.is_empty() {
        args.instances.clone()
    } else {
        holdout_indices
    };
    let opts = ExplainOptions {
        n_permutations: args.permutations,
        background_size: args.background,
    };
    let matrix_path = ctx.out.join("shap_matrix.json");
    let reused: Option<ShapMatrix> = if ctx.stored_config_matches() && matrix_path.exists() {
        read_json::<ShapMatrix>(&matrix_path)
            .ok()
            .filter(|m| m.instance_ids == instance_ids && m.model_kind == model.fitted.kind())
    } else {
        None
    };
    let shap = match reused {
        Some(m) => m,
        None => explain_model(
            &model,
            &ctx.data,
            &train_indices,
            &instance_ids,
            ctx.config.seed,
            &opts,
        )?,
    };
    let summary = shap_summary(&shap)?;
    let mut artifacts = ctx.echo_artifacts()?;
    artifacts.push(Artifact::json("shap_matrix.json", &shap)?);
    artifacts.push(Artifact {
        path: "shap_values.csv".to_string(),
        bytes: shap_values_csv(&shap)?,
    });
    artifacts.push(Artifact::json(
        "shap_base.json",
        &ShapBase {
            model: shap.model_kind,
            output_kind: shap.output_kind,
            base: shap.base,
        },
    )?);
    artifacts.push(Artifact::json("summary.json", &summary)?);
    let force_ids: Vec<usize> = if args.instances.is_empty() {
        vec![shap.instance_ids[0]]
    } else {
        args.instances.clone()
    };
    for &id in &force_ids {
        let row = shap
            .instance_ids
            .iter()
            .position(|&i| i == id)
            .expect("force targets are explained instances");
        let category = args.category.unwrap_or_else(|| argmax(&shap.outputs[row]));
        let force = force_breakdown(&shap, id, category)?;
        artifacts.push(Artifact::json(format!("force_{id}.json"), &force)?);
    }
    write_run_bundle(&ctx.out, &artifacts)?;
    println!(
        "explained {} instances of {} ({} features); top feature overall: {}",
        shap.instance_ids.len(),
        shap.model_kind.name(),
        shap.feature_names.len(),
        summary.feature_names[summary.order_overall[0]]
    );
    Ok((shap, summary))
}

fn stage_report(ctx: &Ctx, args: &ExplainArgs) -> Result<()> {
    let (_, summary) = stage_explain(ctx, args)?;
    let holdout_report: HoldoutReport = read_json(&ctx.out.join("holdout_report.json"))?;
    let eval: HoldoutEval = read_json(&ctx.out.join("holdout_eval.json"))?;
    let model: FinalModel = read_json(&ctx.out.join("model.json"))?;
    let model_name = model.fitted.kind().name();
    let categories = severity_names();
    let roc = roc_auc_ovr(&eval.labels, &eval.scores)?;
    let pr = pr_average_precision(&eval.labels, &eval.scores)?;
    let mut plots = vec![
        (
            "plots/confusion.svg".to_string(),
            PlotSpec::new(
                PlotData::Confusion {
                    matrix: holdout_report.confusion.clone(),
                    categories: categories.clone(),
                },
                format!("Holdout confusion ({model_name})"),
            ),
        ),
        (
            "plots/roc.svg".to_string(),
            PlotSpec::new(
                PlotData::Roc {
                    curves: roc,
                    categories: categories.clone(),
                },
                format!("Holdout ROC ({model_name})"),
            ),
        ),
        (
            "plots/pr.svg".to_string(),
            PlotSpec::new(
                PlotData::Pr {
                    curves: pr,
                    categories: categories.clone(),
                },
                format!("Holdout precision-recall ({model_name})"),
            ),
        ),
        (
            "plots/shap_bar.svg".to_string(),
            PlotSpec::new(
                PlotData::ShapBar {
                    summary: summary.clone(),
                    category: None,
                },
                format!("Mean |contribution| ({model_name})"),
            ),
        ),
        (
            "plots/shap_beeswarm.svg".to_string(),
            PlotSpec::new(
                PlotData::ShapBeeswarm {
                    summary: summary.clone(),
                    category: 2,
                },
                format!("Contribution beeswarm, Fatal ({model_name})"),
            ),
        ),
    ];
    let mut force_files: Vec<String> = fs::read_dir(&ctx.out)
        .map_err(|e| Error::io(ctx.out.display().to_string(), e))?
        .filter_map(|entry| entry.ok())
        .filter_map(|entry| entry.file_name().into_string().ok())
        .filter(|name| name.starts_with("force_") && name.ends_with(".json"))
        .collect();
    force_files.sort();
    for name in force_files {
        let force: sevml::explain::ForceBreakdown = read_json(&ctx.out.join(&name))?;
        let stem = name.trim_end_matches(".json");
        let title = format!(
            "Prediction breakdown, instance {} / {} ({model_name})",
            force.instance, categories[force.category]
        );
        plots.push((
            format!("plots/{stem}.svg"),
            PlotSpec::new(PlotData::Force { breakdown: force }, title),
        ));
    }
    let mut artifacts = ctx.echo_artifacts()?;
    for (path, spec) in &plots {
        artifacts.push(Artifact::text(path.clone(), render_svg(spec)?));
    }
    let n_plots = plots.len();
    let manifest = write_run_bundle(&ctx.out, &artifacts)?;
    println!(
        "rendered {n_plots} plots; bundle holds {} files (manifest.json)",
        manifest.files.len()
    );
    Ok(())
}
