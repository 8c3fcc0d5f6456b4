//! Situation report generation: a dated multi-source news corpus becomes a
//! timeline of timespans, each holding major-event chapters whose sections
//! answer strategic questions with citation-grounded summaries.
//!
//! Stages, in pipeline order:
//!
//! * [`corpus`]: JSONL ingestion, N-week timespans, source bias ratings.
//! * [`clustering`]: TF-IDF agglomerative clustering into chapters.
//! * [`questions`]: sampled strategic questions, de-duplicated.
//! * [`extraction`]: QA-driven claim contexts, validated and ranked.
//! * [`summarize`]: cited summaries at three detail levels.
//! * [`report`]: assembly, JSON/HTML export.
//!
//! [`providers`] abstracts every model call; [`evalkit`] holds the
//! content-review metrics.

pub mod clustering;
pub mod config;
pub mod corpus;
pub mod evalkit;
pub mod extraction;
pub mod parallel;
pub mod pipeline;
pub mod prompts;
pub mod providers;
pub mod questions;
pub mod report;
pub mod summarize;
pub mod text;
