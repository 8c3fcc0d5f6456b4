use std::path::PathBuf;

use sitrep_core::config::PipelineConfig;
use sitrep_core::pipeline::build;
use sitrep_core::report::{to_json, SectionFlag};
use sitrep_core::summarize::DetailLevel;

fn fixture_config() -> PipelineConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/sitrep.toml");
    PipelineConfig::load(&path).expect("fixture config loads")
}

#[test]
fn fixture_build_is_well_formed() {
    let out = build(&fixture_config()).unwrap();
    let report = &out.report;
    assert_eq!(report.timespans.len(), 2);
    assert!(report.chapters().count() >= 4, "chapters: {}", report.chapters().count());
    for chapter in report.chapters() {
        assert!(chapter.headline.chars().count() <= 35, "{}", chapter.headline);
        assert!(chapter.cluster_size >= 2);
        assert!(!chapter.sections.is_empty(), "{} has no sections", chapter.id);
    }
    for section in report.sections() {
        assert!(section.contexts.len() <= 5);
        for c in &section.contexts {
            assert!((0.0..=1.0).contains(&c.validation_score));
            assert!(report.articles.contains_key(&c.article_id));
        }
        if section.flags.contains(&SectionFlag::NoRelevantContexts) {
            assert!(section.contexts.is_empty());
            continue;
        }
        for level in DetailLevel::ALL {
            let s = &section.summaries[&level];
            assert_eq!(s.citation_coverage(), 1.0);
            for sentence in &s.sentences {
                for &k in &sentence.citations {
                    assert!(k >= 1 && k <= section.contexts.len());
                }
            }
        }
    }
    assert!(report.contexts().count() > 0);
    assert_eq!(report.generated_at, "2022-10-25T00:00:00Z");
}

#[test]
fn fixture_build_is_deterministic() {
    let config = fixture_config();
    let a = to_json(&build(&config).unwrap().report).unwrap();
    let b = to_json(&build(&config).unwrap().report).unwrap();
    assert_eq!(a, b);
}

#[test]
fn cluster_dump_covers_every_article() {
    let out = build(&fixture_config()).unwrap();
    let total: usize = out.clusters.iter().map(|s| s.clusters.iter().map(|c| c.size).sum::<usize>()).sum();
    assert_eq!(total, 30);
    let chapters = out.clusters.iter().flat_map(|s| &s.clusters).filter(|c| c.chapter_id.is_some()).count();
    assert_eq!(chapters, out.report.chapters().count());
}

#[test]
fn output_path_does_not_change_report() {
    let a = fixture_config();
    let mut b = fixture_config();
    b.output = PathBuf::from("/elsewhere/other.json");
    let ra = to_json(&build(&a).unwrap().report).unwrap();
    let rb = to_json(&build(&b).unwrap().report).unwrap();
    assert_eq!(ra, rb);
    assert!(!ra.contains("\"output\""));
}
