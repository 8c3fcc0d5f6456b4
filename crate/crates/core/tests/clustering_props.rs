use std::collections::BTreeSet;

use chrono::NaiveDate;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use sitrep_core::clustering::{cluster_articles, tfidf_vectorize, EventCluster};
use sitrep_core::corpus::{ArticleKind, NewsArticle};

const VOCAB: [&str; 12] =
    ["kyiv", "drone", "missile", "bridge", "crimea", "grain", "odesa", "kherson", "lyman", "power", "nato", "iran"];

fn article(i: usize, body: String) -> NewsArticle {
    NewsArticle {
        id: format!("a{i:03}"),
        source_name: "AP".into(),
        url: String::new(),
        published_at: NaiveDate::from_ymd_opt(2022, 10, 3).unwrap(),
        title: String::new(),
        body,
        kind: ArticleKind::Snippet,
    }
}

fn docs() -> impl Strategy<Value = Vec<NewsArticle>> {
    prop::collection::vec(prop::collection::vec(0..VOCAB.len(), 1..6), 2..14).prop_map(|docs| {
        docs.into_iter()
            .enumerate()
            .map(|(i, words)| article(i, words.iter().map(|&w| VOCAB[w]).collect::<Vec<_>>().join(" ")))
            .collect()
    })
}

type Partition = BTreeSet<BTreeSet<String>>;

fn partition(clusters: &[EventCluster]) -> Partition {
    clusters.iter().map(|c| c.member_ids.iter().cloned().collect()).collect()
}

fn cluster(articles: &[NewsArticle], threshold: f64) -> Partition {
    partition(&cluster_articles(articles, threshold).unwrap().1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn permutation_invariant(articles in docs(), threshold in 0.0f64..1.2, seed in any::<u64>()) {
        let reference = cluster(&articles, threshold);
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let mut shuffled = articles.clone();
        for _ in 0..10 {
            shuffled.shuffle(&mut rng);
            prop_assert_eq!(&cluster(&shuffled, threshold), &reference);
        }
    }

    #[test]
    fn raising_threshold_never_adds_clusters(articles in docs()) {
        let counts: Vec<usize> =
            [0.0, 0.25, 0.5, 0.8, 1.0].iter().map(|&t| cluster(&articles, t).len()).collect();
        prop_assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{:?}", counts);
    }

    #[test]
    fn threshold_two_gives_one_cluster(articles in docs()) {
        prop_assert_eq!(cluster(&articles, 2.0).len(), 1);
    }

    #[test]
    fn threshold_zero_gives_singletons_for_distinct_vectors(articles in docs()) {
        let (model, clusters) = cluster_articles(&articles, 0.0).unwrap();
        let vectors: Vec<_> =
            articles.iter().map(|a| model.transform(&sitrep_core::clustering::article_tokens(a))).collect();
        for i in 0..vectors.len() {
            for j in (i + 1)..vectors.len() {
                prop_assume!(vectors[i].cosine_distance(&vectors[j]) > 0.0);
            }
        }
        prop_assert_eq!(clusters.len(), articles.len());
    }

    #[test]
    fn identical_documents_share_a_cluster(articles in docs(), pick in any::<prop::sample::Index>(), threshold in 0.0f64..1.0) {
        let source = pick.get(&articles).clone();
        let mut with_copy = articles.clone();
        with_copy.push(article(999, source.body.clone()));
        let clusters = cluster(&with_copy, threshold);
        let home = clusters.iter().find(|c| c.contains(&source.id)).unwrap();
        prop_assert!(home.contains("a999"));
    }

    #[test]
    fn clusters_cover_every_article_once(articles in docs(), threshold in 0.0f64..2.0) {
        let clusters = cluster_articles(&articles, threshold).unwrap().1;
        let mut ids: Vec<&String> = clusters.iter().flat_map(|c| &c.member_ids).collect();
        ids.sort();
        let mut expected: Vec<&String> = articles.iter().map(|a| &a.id).collect();
        expected.sort();
        prop_assert_eq!(ids, expected);
        for pair in clusters.windows(2) {
            prop_assert!(pair[0].len() >= pair[1].len());
        }
    }

    #[test]
    fn term_in_every_document_weighs_zero(docs in prop::collection::vec(prop::collection::vec(0..VOCAB.len(), 0..5), 1..8)) {
        let tokens: Vec<Vec<String>> = docs
            .iter()
            .map(|d| std::iter::once("ukraine".to_string()).chain(d.iter().map(|&w| VOCAB[w].to_string())).collect())
            .collect();
        for v in tfidf_vectorize(&tokens).unwrap() {
            prop_assert_eq!(v.weight("ukraine"), 0.0);
        }
    }
}
