//! End-to-end report build: ingest, cluster and name chapters, ask and
//! de-duplicate questions, extract and rank contexts, summarize, assemble.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::clustering::{
    assign_expansion, cluster_articles, format_retrieval_query, name_chapter, Chapter, ClusterError,
};
use crate::config::{ConfigError, PipelineConfig};
use crate::corpus::{
    attach_bias, ingest_paths, load_bias_csv, partition_timespans, ArticleIndex, BiasRating, CorpusError,
    NewsArticle, Timespan,
};
use crate::extraction::{extract_answers, split_snippets, to_context, validate_and_select, ArticleSnippet};
use crate::parallel::bounded_map;
use crate::prompts::{
    PromptError, PromptSet, PromptTemplate, HEADLINE_PLACEHOLDERS, QUESTIONS_PLACEHOLDERS, SUMMARY_PLACEHOLDERS,
};
use crate::providers::{CapabilityRouter, ModelProvider, ProviderError};
use crate::questions::{chapter_articles, deduplicate_questions, generate_question_sets, QuestionError, StrategicQuestion};
use crate::report::{
    assemble_report, AssemblyInput, BuildStats, ChapterBuild, Provenance, ReportError, Section, SectionFlag,
    SituationReport,
};
use crate::summarize::{summarize_section, SummaryError};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("prompts: {0}")]
    Prompt(#[from] PromptError),
    #[error("providers: {0}")]
    Provider(ProviderError),
    #[error("ingest: {0}")]
    Corpus(#[from] CorpusError),
    #[error("clustering: {0}")]
    Cluster(#[from] ClusterError),
    #[error("questions: {0}")]
    Questions(#[from] QuestionError),
    #[error("extraction: section {section}: {source}")]
    Extraction { section: String, source: ProviderError },
    #[error("summarize: {0}")]
    Summary(#[from] SummaryError),
    #[error("report: {0}")]
    Report(#[from] ReportError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterDumpEntry {
    pub chapter_id: Option<String>,
    pub size: usize,
    pub member_ids: Vec<String>,
    pub top_terms: Vec<String>,
    pub headline: Option<String>,
    pub retrieval_query: Option<String>,
    pub expansion_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterDumpSpan {
    #[serde(flatten)]
    pub timespan: Timespan,
    pub articles: usize,
    pub clusters: Vec<ClusterDumpEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingest,
    Cluster,
    Questions,
    Extraction,
    Summarize,
    Assemble,
}

#[derive(Debug, Clone)]
pub struct BuildOutput {
    pub report: SituationReport,
    pub clusters: Vec<ClusterDumpSpan>,
    pub timings: BTreeMap<Stage, Duration>,
}

#[derive(Default)]
struct Timer(BTreeMap<Stage, Duration>);

impl Timer {
    fn time<T>(&mut self, stage: Stage, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        *self.0.entry(stage).or_default() += start.elapsed();
        out
    }
}

fn load_prompts(config: &PipelineConfig) -> Result<PromptSet, PromptError> {
    let mut set = PromptSet::default();
    let p = &config.prompts;
    if let Some(path) = &p.headline {
        set.headline = PromptTemplate::from_file(&config.resolve(path), HEADLINE_PLACEHOLDERS)?;
    }
    if let Some(path) = &p.questions {
        set.questions = PromptTemplate::from_file(&config.resolve(path), QUESTIONS_PLACEHOLDERS)?;
    }
    if let Some(path) = &p.summary {
        set.summary = PromptTemplate::from_file(&config.resolve(path), SUMMARY_PLACEHOLDERS)?;
    }
    Ok(set)
}

/// The config as recorded in provenance. The output path is left out: it
/// says where the report went, not how it was made.
fn config_snapshot(config: &PipelineConfig) -> serde_json::Value {
    let mut value = serde_json::to_value(config).expect("config serializes");
    if let Some(map) = value.as_object_mut() {
        map.remove("output");
    }
    value
}

/// Build a report with providers constructed from the config.
pub fn build(config: &PipelineConfig) -> Result<BuildOutput, PipelineError> {
    config.validate()?;
    config.check_inputs()?;
    let router = CapabilityRouter::from_config(&config.provider, config.seed).map_err(PipelineError::Provider)?;
    build_with(config, &router)
}

/// Build a report with an explicit provider router.
pub fn build_with(config: &PipelineConfig, router: &CapabilityRouter) -> Result<BuildOutput, PipelineError> {
    config.validate()?;
    let mut timer = Timer::default();
    let prompts = load_prompts(config)?;
    let params = config.sampling.params(config.seed);

    let (corpus, expansion, bias) = timer.time(Stage::Ingest, || -> Result<_, PipelineError> {
        let resolve = |paths: &[std::path::PathBuf]| paths.iter().map(|p| config.resolve(p)).collect::<Vec<_>>();
        let corpus = ingest_paths(&resolve(&config.corpus))?;
        let expansion = if config.expansion.is_empty() { Vec::new() } else { ingest_paths(&resolve(&config.expansion))? };
        let ratings = match &config.bias_csv {
            Some(p) => load_bias_csv(&config.resolve(p))?,
            None => Vec::new(),
        };
        Ok((corpus, expansion, ratings))
    })?;
    let index = {
        let mut index = ArticleIndex::new(&corpus);
        for a in &expansion {
            if index.get(&a.id).is_some() {
                return Err(CorpusError::DuplicateId(a.id.clone()).into());
            }
            index.insert(a.clone());
        }
        index
    };
    let all: Vec<NewsArticle> = corpus.iter().chain(&expansion).cloned().collect();
    let bias: BTreeMap<String, BiasRating> = attach_bias(&all, &bias);
    let spans = partition_timespans(&corpus, config.weeks)?;
    tracing::info!(articles = corpus.len(), expansion = expansion.len(), timespans = spans.len(), "corpus ingested");

    let mut stats = BuildStats { articles: corpus.len() + expansion.len(), ..Default::default() };
    let mut dump = Vec::new();
    let mut built = Vec::new();
    for (span, articles) in &spans {
        let (chapters, dump_span) = timer.time(Stage::Cluster, || {
            cluster_span(config, span, articles, &expansion, &index, router, &prompts.headline, &params)
        })?;
        dump.push(dump_span);
        let mut chapter_builds = Vec::new();
        for chapter in chapters {
            let sections = build_sections(config, &chapter, &index, &bias, router, &prompts, &mut timer, &mut stats)?;
            chapter_builds.push(ChapterBuild { chapter, sections });
        }
        stats.chapters += chapter_builds.len();
        built.push((*span, chapter_builds));
    }

    let generated_at = match &config.generated_at {
        Some(ts) => ts.clone(),
        None => {
            let latest = corpus.iter().map(|a| a.published_at).max().expect("partition rejects an empty corpus");
            format!("{}T00:00:00Z", latest.format("%Y-%m-%d"))
        }
    };
    let provenance = Provenance {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        config: config_snapshot(config),
        providers: router.identities().into_iter().map(|(c, id)| (c.to_string(), id.to_string())).collect(),
        prompts: prompts.hashes(),
        stats,
    };
    let report = timer.time(Stage::Assemble, || {
        assemble_report(AssemblyInput {
            scenario_name: config.scenario_name.clone(),
            generated_at,
            timespans: built,
            articles: &index,
            bias: &bias,
            levels: config.detail_levels.clone(),
            provenance,
        })
    })?;
    for (stage, elapsed) in &timer.0 {
        tracing::info!(?stage, millis = elapsed.as_millis() as u64, "stage timing");
    }
    Ok(BuildOutput { report, clusters: dump, timings: timer.0 })
}

#[allow(clippy::too_many_arguments)]
fn cluster_span(
    config: &PipelineConfig,
    span: &Timespan,
    articles: &[NewsArticle],
    expansion: &[NewsArticle],
    index: &ArticleIndex,
    provider: &dyn ModelProvider,
    headline_prompt: &PromptTemplate,
    params: &crate::providers::SamplingParams,
) -> Result<(Vec<Chapter>, ClusterDumpSpan), PipelineError> {
    let mut dump = ClusterDumpSpan { timespan: *span, articles: articles.len(), clusters: Vec::new() };
    if articles.is_empty() {
        return Ok((Vec::new(), dump));
    }
    let (model, clusters) = cluster_articles(articles, config.cluster_threshold)?;
    let kept: Vec<usize> = (0..clusters.len()).filter(|&i| clusters[i].len() >= config.min_cluster_size).collect();
    let labels: Vec<String> = (1..=kept.len()).map(|n| format!("t{}-c{n}", span.index)).collect();
    let jobs: Vec<(usize, &String)> = kept.iter().copied().zip(&labels).collect();
    let headlines = bounded_map(&jobs, config.parallelism, |&(i, label)| {
        name_chapter(label, &clusters[i], index, provider, headline_prompt, params)
    });

    let span_expansion: Vec<&NewsArticle> = expansion.iter().filter(|a| span.contains(a.published_at)).collect();
    let centroids: Vec<_> = kept.iter().map(|&i| &clusters[i].centroid).collect();
    let assignment = assign_expansion(&model, &centroids, &span_expansion, config.cluster_threshold);

    let mut chapters = Vec::new();
    for (slot, (&(i, label), headline)) in jobs.iter().zip(headlines).enumerate() {
        let headline = headline?;
        let cluster = clusters[i].clone();
        let mut expanded: std::collections::BTreeSet<String> = cluster.member_ids.iter().cloned().collect();
        expanded.extend(
            span_expansion.iter().zip(&assignment).filter(|(_, a)| **a == Some(slot)).map(|(art, _)| art.id.clone()),
        );
        chapters.push(Chapter {
            id: label.clone(),
            timespan_index: span.index,
            retrieval_query: format_retrieval_query(&headline, span, config.date_style)?,
            headline,
            cluster,
            expanded_article_ids: expanded,
        });
    }
    for (i, cluster) in clusters.iter().enumerate() {
        let chapter = kept.iter().position(|&k| k == i).map(|slot| &chapters[slot]);
        dump.clusters.push(ClusterDumpEntry {
            chapter_id: chapter.map(|c| c.id.clone()),
            size: cluster.len(),
            member_ids: cluster.member_ids.clone(),
            top_terms: cluster.centroid.top_terms(5),
            headline: chapter.map(|c| c.headline.clone()),
            retrieval_query: chapter.map(|c| c.retrieval_query.clone()),
            expansion_ids: chapter
                .map(|c| c.expanded_article_ids.iter().filter(|id| !cluster.member_ids.contains(id)).cloned().collect())
                .unwrap_or_default(),
        });
    }
    Ok((chapters, dump))
}

#[allow(clippy::too_many_arguments)]
fn build_sections(
    config: &PipelineConfig,
    chapter: &Chapter,
    index: &ArticleIndex,
    bias: &BTreeMap<String, BiasRating>,
    provider: &dyn ModelProvider,
    prompts: &PromptSet,
    timer: &mut Timer,
    stats: &mut BuildStats,
) -> Result<Vec<Section>, PipelineError> {
    let params = config.sampling.params(config.seed);
    let questions: Vec<StrategicQuestion> = timer.time(Stage::Questions, || -> Result<_, PipelineError> {
        let sets = generate_question_sets(chapter, index, config.n_sets, &params, provider, &prompts.questions, config.parallelism)?;
        stats.dropped_question_lines += sets.dropped_lines;
        stats.empty_question_sets += sets.empty_sets;
        if sets.sets.is_empty() {
            tracing::warn!(chapter = %chapter.id, "no questions generated; chapter kept without sections");
            return Ok(Vec::new());
        }
        Ok(deduplicate_questions(&sets.sets, provider, config.dedup_threshold)?)
    })?;

    let snippets: Vec<ArticleSnippet> = chapter_articles(chapter, index)
        .into_iter()
        .flat_map(|a| split_snippets(a, config.sentences_per_snippet))
        .collect();

    let mut sections = Vec::new();
    for (n, question) in questions.into_iter().enumerate() {
        let id = format!("{}-q{}", chapter.id, n + 1);
        let contexts = timer.time(Stage::Extraction, || {
            let outcome = extract_answers(&question.text, &snippets, provider, config.parallelism);
            stats.failed_snippets += outcome.failed_snippets;
            let candidates = outcome
                .candidates
                .iter()
                .filter_map(|c| {
                    let article = index.get(&c.snippet.article_id)?;
                    Some(to_context(&id, c, article, bias.get(&article.id).copied().unwrap_or_default()))
                })
                .collect();
            validate_and_select(&id, &question.text, candidates, provider, config.top_k, config.parallelism)
                .map_err(|source| PipelineError::Extraction { section: id.clone(), source })
        })?;

        let mut section = Section {
            id: id.clone(),
            question,
            contexts,
            summaries: BTreeMap::new(),
            flags: Default::default(),
        };
        if section.contexts.is_empty() {
            section.flags.insert(SectionFlag::NoRelevantContexts);
            stats.empty_sections += 1;
        } else {
            let summaries = timer.time(Stage::Summarize, || {
                bounded_map(&config.detail_levels, config.parallelism, |&level| {
                    summarize_section(&id, &section.question.text, &section.contexts, level, &prompts.summary, provider, &params)
                })
            });
            for summary in summaries {
                let summary = summary?;
                stats.dangling_citations += summary.dangling_citations;
                section.summaries.insert(summary.level, summary);
            }
        }
        stats.sections += 1;
        stats.contexts += section.contexts.len();
        sections.push(section);
    }
    Ok(sections)
}
