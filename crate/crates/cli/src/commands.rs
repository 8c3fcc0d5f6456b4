use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use sitrep_core::config::{ConfigError, PipelineConfig};
use sitrep_core::corpus::{attach_bias, ingest_paths, load_bias_csv, partition_timespans, ArticleKind, BiasRating};
use sitrep_core::evalkit::{
    aggregate_review, edit_study, load_edit_pairs, load_labels_csv, render_review_table, report_citation_quality,
    CitationQuality, EditStudy, ReviewReport,
};
use sitrep_core::pipeline::{self, PipelineError};
use sitrep_core::providers::{CapabilityRouter, ProviderError};
use sitrep_core::report::{self, from_json, write_atomic, ExportFormat};
use sitrep_core::summarize::DetailLevel;

use crate::{BuildArgs, EvalArgs, ExportArgs, Failure, IngestArgs, ServeArgs};

type CmdResult = Result<(), Failure>;

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn require_file(what: &str, path: &Path) -> CmdResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("{what} not found: {}", path.display())))
    }
}

fn absolute(path: &Path) -> PathBuf {
    std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf())
}

/// Write to standard output; a closed pipe is not an error.
fn emit(text: &str) -> CmdResult {
    use std::io::Write;
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(runtime(e)),
        _ => Ok(()),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> CmdResult {
    let mut text = serde_json::to_string_pretty(value).map_err(runtime)?;
    text.push('\n');
    write_atomic(path, text.as_bytes()).map_err(runtime)
}

#[derive(Serialize)]
struct SpanStats {
    index: usize,
    start_date: String,
    end_date: String,
    articles: usize,
}

#[derive(Serialize)]
struct CorpusStats {
    articles: usize,
    first_date: String,
    last_date: String,
    snippets: usize,
    full_articles: usize,
    sources: BTreeMap<String, usize>,
    bias: Option<BTreeMap<BiasRating, usize>>,
    timespans: Vec<SpanStats>,
}

pub fn ingest(args: IngestArgs) -> CmdResult {
    for path in &args.corpus {
        require_file("corpus file", path)?;
    }
    if let Some(path) = &args.bias_csv {
        require_file("bias CSV", path)?;
    }
    if args.weeks == 0 {
        return Err(usage("--weeks must be positive"));
    }
    let articles = ingest_paths(&args.corpus).map_err(runtime)?;
    let spans = partition_timespans(&articles, args.weeks).map_err(runtime)?;
    let mut sources = BTreeMap::new();
    for a in &articles {
        *sources.entry(a.source_name.clone()).or_insert(0) += 1;
    }
    let bias = match &args.bias_csv {
        Some(path) => {
            let ratings = load_bias_csv(path).map_err(runtime)?;
            let mut counts = BTreeMap::new();
            for rating in attach_bias(&articles, &ratings).into_values() {
                *counts.entry(rating).or_insert(0) += 1;
            }
            Some(counts)
        }
        None => None,
    };
    let dates = articles.iter().map(|a| a.published_at);
    let stats = CorpusStats {
        articles: articles.len(),
        first_date: dates.clone().min().map(|d| d.to_string()).unwrap_or_default(),
        last_date: dates.max().map(|d| d.to_string()).unwrap_or_default(),
        snippets: articles.iter().filter(|a| a.kind == ArticleKind::Snippet).count(),
        full_articles: articles.iter().filter(|a| a.kind == ArticleKind::FullArticle).count(),
        sources,
        bias,
        timespans: spans
            .iter()
            .map(|(t, members)| SpanStats {
                index: t.index,
                start_date: t.start_date.to_string(),
                end_date: t.end_date.to_string(),
                articles: members.len(),
            })
            .collect(),
    };
    match &args.out {
        Some(path) => write_json(path, &stats),
        None => emit(&format!("{}\n", serde_json::to_string_pretty(&stats).map_err(runtime)?)),
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig, Failure> {
    match path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|source| usage(ConfigError::Io { path: path.to_path_buf(), source }))?;
            PipelineConfig::from_toml_str(&text, &absolute(path)).map_err(usage)
        }
        None => Ok(PipelineConfig { base_dir: absolute(Path::new(".")), ..PipelineConfig::default() }),
    }
}

/// Command-line values win over the config file. Paths given on the
/// command line are relative to the working directory.
fn apply_overrides(config: &mut PipelineConfig, args: &BuildArgs) {
    if !args.corpus.is_empty() {
        config.corpus = args.corpus.iter().map(|p| absolute(p)).collect();
    }
    if let Some(p) = &args.bias_csv {
        config.bias_csv = Some(absolute(p));
    }
    if let Some(p) = &args.output {
        config.output = absolute(p);
    }
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = args.$field.clone() { config.$field = v; } )* };
    }
    set!(
        scenario_name, seed, weeks, cluster_threshold, min_cluster_size, n_sets, dedup_threshold,
        sentences_per_snippet, top_k, entail_threshold, parallelism
    );
    if let Some(ts) = &args.generated_at {
        config.generated_at = Some(ts.clone());
    }
}

fn pipeline_failure(e: PipelineError) -> Failure {
    match &e {
        PipelineError::Config(_)
        | PipelineError::Prompt(_)
        | PipelineError::Provider(ProviderError::Config { .. }) => usage(e),
        _ => runtime(e),
    }
}

pub fn build(args: BuildArgs) -> CmdResult {
    let mut config = load_config(args.config.as_deref())?;
    apply_overrides(&mut config, &args);
    config.validate().map_err(usage)?;
    config.check_inputs().map_err(usage)?;
    let out = pipeline::build(&config).map_err(pipeline_failure)?;
    let path = config.resolve(&config.output);
    report::export(&out.report, ExportFormat::Json, &path).map_err(runtime)?;
    if let Some(dump) = &args.dump_clusters {
        write_json(dump, &out.clusters)?;
        tracing::info!(path = %dump.display(), "cluster dump written");
    }
    emit(&format!("{}\n", path.display()))
}

fn read_report(path: &Path) -> Result<report::SituationReport, Failure> {
    require_file("report", path)?;
    let text = std::fs::read_to_string(path).map_err(runtime)?;
    from_json(&text).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

pub fn export(args: ExportArgs) -> CmdResult {
    let format = ExportFormat::from_str(&args.format).map_err(usage)?;
    let report = read_report(&args.report)?;
    report::export(&report, format, &args.out).map_err(runtime)?;
    emit(&format!("{}\n", args.out.display()))
}

pub fn serve(args: ServeArgs) -> CmdResult {
    require_file("report", &args.report)?;
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(runtime)?;
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
        tracing::info!("shutting down");
    };
    rt.block_on(sitrep_server::serve(&args.report, args.bind, args.cors_origin.as_deref(), shutdown))
        .map_err(runtime)
}

#[derive(Serialize)]
struct EvalReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    edit_study: Option<EditStudy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    review: Option<ReviewReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    citation_quality: Option<BTreeMap<DetailLevel, CitationQuality>>,
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

fn render_eval(report: &EvalReport) -> String {
    let mut out = String::new();
    if let Some(s) = &report.edit_study {
        let _ = writeln!(out, "edit study (pairs={})", s.pairs);
        let rows = [
            ("bleu", pct(s.mean_bleu)),
            ("rouge_l_f1", pct(s.mean_rouge_l_f1)),
            ("levenshtein_char", format!("{:.1}", s.mean_levenshtein_char)),
            ("levenshtein_normalized", pct(s.mean_levenshtein_normalized)),
            ("tokens_inserted", pct(s.mean_tokens_inserted_pct)),
            ("tokens_deleted", pct(s.mean_tokens_deleted_pct)),
            ("unedited", pct(s.unedited_fraction)),
        ];
        for (name, value) in rows {
            let _ = writeln!(out, "  {name:<24} {value:>8}");
        }
    }
    if let Some(r) = &report.review {
        out.push_str(&render_review_table(r));
    }
    if let Some(levels) = &report.citation_quality {
        let _ = writeln!(out, "citation quality");
        let _ = writeln!(out, "  {:<14} {:>9} {:>9} {:>9} {:>9}", "level", "precision", "recall", "coverage", "multi");
        for (level, q) in levels {
            let _ = writeln!(
                out,
                "  {:<14} {:>9} {:>9} {:>9} {:>9}",
                level.as_str(),
                pct(q.precision),
                pct(q.recall),
                pct(q.coverage),
                pct(q.multi_citation_rate)
            );
        }
    }
    out
}

pub fn eval(args: EvalArgs) -> CmdResult {
    if args.pairs.is_none() && args.labels.is_none() && args.report.is_none() {
        return Err(usage("eval needs at least one of --pairs, --labels, --report"));
    }
    let edit_study = match &args.pairs {
        Some(path) => {
            require_file("edit pairs", path)?;
            Some(edit_study(&load_edit_pairs(path).map_err(runtime)?))
        }
        None => None,
    };
    let review = match &args.labels {
        Some(path) => {
            require_file("labels CSV", path)?;
            Some(aggregate_review(&load_labels_csv(path).map_err(runtime)?))
        }
        None => None,
    };
    let citation_quality = match &args.report {
        Some(path) => {
            let report = read_report(path)?;
            let config = match &args.config {
                Some(_) => {
                    let c = load_config(args.config.as_deref())?;
                    c.validate().map_err(usage)?;
                    c
                }
                None => PipelineConfig::default(),
            };
            let threshold = args.entail_threshold.unwrap_or(config.entail_threshold);
            if !(0.0..=1.0).contains(&threshold) {
                return Err(usage(format!("--entail-threshold must be in [0, 1], got {threshold}")));
            }
            let judge = CapabilityRouter::from_config(&config.provider, config.seed).map_err(usage)?;
            Some(report_citation_quality(&report, &judge, threshold).map_err(runtime)?)
        }
        None => None,
    };
    let result = EvalReport { edit_study, review, citation_quality };
    emit(&render_eval(&result))?;
    if let Some(path) = &args.report_out {
        write_json(path, &result)?;
    }
    Ok(())
}
