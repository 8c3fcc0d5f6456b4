//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs the `sitrep` binary against the bundled fixture.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use sitrep_core::clustering::cluster_articles;
use sitrep_core::corpus::{ingest_corpus, partition_timespans, BiasRating, NewsArticle};
use sitrep_core::evalkit::{bleu, citation_quality, edit_study, levenshtein, load_edit_pairs, rouge_l, token_churn, EditPair};
use sitrep_core::extraction::ClaimContext;
use sitrep_core::providers::{
    Capability, CharSpan, MockProvider, ModelProvider, ProviderError, ProviderIdentity, QaAnswer, SamplingParams,
};
use sitrep_core::questions::{deduplicate_questions, StrategicQuestion};
use sitrep_core::report::{from_json, SectionFlag, SituationReport};
use sitrep_core::summarize::{parse_citations, DetailLevel, GroundedSummary};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn sitrep() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sitrep"))
}

// ---------------------------------------------------------------- metrics

/// Strings over {a, b, c} of length <= 8, indexed by length then base-3 value.
struct Universe {
    offsets: [usize; 10],
    strings: Vec<Vec<u8>>,
}

impl Universe {
    fn new(max_len: usize) -> Self {
        let mut offsets = [0usize; 10];
        let mut strings = Vec::new();
        for len in 0..=max_len {
            offsets[len] = strings.len();
            for value in 0..3usize.pow(len as u32) {
                let mut s = vec![0u8; len];
                let mut v = value;
                for slot in s.iter_mut().rev() {
                    *slot = (v % 3) as u8;
                    v /= 3;
                }
                strings.push(s);
            }
        }
        offsets[max_len + 1] = strings.len();
        Universe { offsets, strings }
    }

    /// Index of the string with its last symbol removed.
    fn init(&self, id: usize) -> usize {
        let len = self.strings[id].len();
        let value = id - self.offsets[len];
        self.offsets[len - 1] + value / 3
    }
}

/// Memoized recursive edit distance over the universe: d(a, b) from the
/// three one-symbol-shorter subproblems.
struct Oracle<'a> {
    u: &'a Universe,
    n: usize,
    memo: Vec<u8>,
}

impl Oracle<'_> {
    fn d(&mut self, a: usize, b: usize) -> u8 {
        let slot = a * self.n + b;
        if self.memo[slot] != u8::MAX {
            return self.memo[slot];
        }
        let (sa, sb) = (&self.u.strings[a], &self.u.strings[b]);
        let value = if sa.is_empty() {
            sb.len() as u8
        } else if sb.is_empty() {
            sa.len() as u8
        } else {
            let same = sa[sa.len() - 1] == sb[sb.len() - 1];
            let (ia, ib) = (self.u.init(a), self.u.init(b));
            let sub = self.d(ia, ib) + u8::from(!same);
            let del = self.d(ia, b) + 1;
            let ins = self.d(a, ib) + 1;
            sub.min(del).min(ins)
        };
        self.memo[slot] = value;
        value
    }
}

/// Plain recursion with a hash-map memo, for arbitrary strings.
fn oracle_distance(a: &[char], b: &[char]) -> usize {
    fn go(a: &[char], b: &[char], i: usize, j: usize, memo: &mut std::collections::HashMap<(usize, usize), usize>) -> usize {
        if i == 0 {
            return j;
        }
        if j == 0 {
            return i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let v = (go(a, b, i - 1, j - 1, memo) + usize::from(a[i - 1] != b[j - 1]))
            .min(go(a, b, i - 1, j, memo) + 1)
            .min(go(a, b, i, j - 1, memo) + 1);
        memo.insert((i, j), v);
        v
    }
    go(a, b, a.len(), b.len(), &mut Default::default())
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

fn metric_oracle() -> Outcome {
    let start = Instant::now();
    let universe = Universe::new(8);
    let n = universe.strings.len();
    let mut oracle = Oracle { u: &universe, n, memo: vec![u8::MAX; n * n] };
    let text: Vec<String> =
        universe.strings.iter().map(|s| s.iter().map(|&c| (b'a' + c) as char).collect()).collect();
    let mut checked = 0usize;
    for a in 0..n {
        for b in 0..n {
            let expected = oracle.d(a, b) as usize;
            let (got, _) = levenshtein(&text[a], &text[b]);
            ensure!(got == expected, "levenshtein({:?}, {:?}) = {got}, oracle {expected}", text[a], text[b]);
            checked += 1;
        }
    }

    let alphabet: Vec<char> = "abcdeé漢 .".chars().collect();
    let mut rng = StdRng::seed_from_u64(2022);
    for _ in 0..1000 {
        let word = |rng: &mut StdRng| -> Vec<char> {
            let len = rng.random_range(0..40);
            (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect()
        };
        let (a, b) = (word(&mut rng), word(&mut rng));
        let (sa, sb): (String, String) = (a.iter().collect(), b.iter().collect());
        let expected = oracle_distance(&a, &b);
        let (got, norm) = levenshtein(&sa, &sb);
        ensure!(got == expected, "levenshtein({sa:?}, {sb:?}) = {got}, oracle {expected}");
        let max = a.len().max(b.len());
        let want_norm = if max == 0 { 0.0 } else { expected as f64 / max as f64 };
        ensure!(close(norm, want_norm), "normalized {norm} != {want_norm}");
    }

    let (k, kn) = levenshtein("kitten", "sitting");
    ensure!(k == 3 && close(kn, 3.0 / 7.0), "kitten/sitting gave ({k}, {kn})");
    let b = bleu("the cat", "the cat sat", 2);
    ensure!(close(b, (1.0f64 - 3.0 / 2.0).exp()), "bleu example gave {b}");
    let r = rouge_l("a b c", "a c");
    ensure!(close(r.precision, 2.0 / 3.0) && close(r.recall, 1.0) && close(r.f1, 0.8), "rouge_l example gave {r:?}");
    let churn = |g: &str, e: &str| token_churn(&EditPair { generated: g.into(), edited: e.into(), question_id: None });
    ensure!(churn("a b", "a b c d") == (1.0, 0.0), "churn insert example");
    ensure!(churn("a b", "a") == (0.0, 0.5), "churn delete example");

    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:.1?} (limit 30 s)");
    Ok(format!("{checked} exhaustive pairs + 1000 random pairs + derived values, {elapsed:.1?}"))
}

// ---------------------------------------------------------------- pipeline

fn build_fixture(out: &Path) -> Result<(), String> {
    let status = sitrep()
        .args(["-q", "build", "--config"])
        .arg(fixtures().join("sitrep.toml"))
        .arg("--output")
        .arg(out)
        .stdout(Stdio::null())
        .status()
        .map_err(|e| format!("cannot run sitrep: {e}"))?;
    ensure!(status.success(), "sitrep build exited with {status}");
    Ok(())
}

fn determinism(dir: &Path) -> Outcome {
    let start = Instant::now();
    let (a, b) = (dir.join("run1.json"), dir.join("run2.json"));
    build_fixture(&a)?;
    build_fixture(&b)?;
    let elapsed = start.elapsed();
    let (x, y) = (std::fs::read(&a).map_err(|e| e.to_string())?, std::fs::read(&b).map_err(|e| e.to_string())?);
    ensure!(x == y, "report bytes differ between runs");
    ensure!(elapsed < Duration::from_secs(10), "two builds took {elapsed:.1?} (limit 10 s)");
    Ok(format!("{} bytes identical across two runs, {elapsed:.1?}", x.len()))
}

fn load_report(path: &Path) -> Result<SituationReport, String> {
    from_json(&std::fs::read_to_string(path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

fn structure(report: &SituationReport) -> Outcome {
    report.validate(&DetailLevel::ALL).map_err(|e| format!("report validation: {e}"))?;
    ensure!(!report.timespans.is_empty() && report.chapters().count() > 0, "no timespans or chapters");
    for c in report.chapters() {
        ensure!(c.headline.chars().count() <= 35, "headline too long: {:?}", c.headline);
    }
    let mut citations = 0;
    for s in report.sections() {
        ensure!(s.contexts.len() <= 5, "{} has {} contexts", s.id, s.contexts.len());
        for c in &s.contexts {
            ensure!((0.0..=1.0).contains(&c.validation_score), "{} score {}", c.id, c.validation_score);
            ensure!(report.articles.contains_key(&c.article_id), "{} -> missing article {}", c.id, c.article_id);
        }
        if s.flags.contains(&SectionFlag::NoRelevantContexts) {
            continue;
        }
        for level in DetailLevel::ALL {
            let summary = s.summaries.get(&level).ok_or(format!("{} lacks {level}", s.id))?;
            ensure!(summary.citation_coverage() == 1.0, "{} {level} coverage {}", s.id, summary.citation_coverage());
            for sentence in &summary.sentences {
                for &k in &sentence.citations {
                    let ctx = s.contexts.get(k.wrapping_sub(1)).ok_or(format!("{} cites [{k}]", s.id))?;
                    ensure!(report.articles.contains_key(&ctx.article_id), "citation chain broken at {}", ctx.id);
                    citations += 1;
                }
            }
        }
    }
    Ok(format!(
        "{} chapters, {} sections, {} contexts, {citations} citations resolved",
        report.chapters().count(),
        report.sections().count(),
        report.contexts().count()
    ))
}

// ---------------------------------------------------------------- clustering

type Partition = BTreeSet<BTreeSet<String>>;

fn partition(articles: &[NewsArticle], threshold: f64) -> Partition {
    let (_, clusters) = cluster_articles(articles, threshold).expect("clustering succeeds");
    clusters.iter().map(|c| c.member_ids.iter().cloned().collect()).collect()
}

fn synthetic_spans(rng: &mut StdRng) -> Vec<Vec<NewsArticle>> {
    const VOCAB: [&str; 10] = ["kyiv", "drone", "missile", "bridge", "crimea", "grain", "kherson", "lyman", "power", "iran"];
    let template = ingest_corpus(&fixtures().join("corpus.jsonl")).expect("fixture corpus")[0].clone();
    (0..20)
        .map(|_| {
            (0..rng.random_range(2..15))
                .map(|i| {
                    let words: Vec<&str> = (0..rng.random_range(1..6)).map(|_| VOCAB[rng.random_range(0..VOCAB.len())]).collect();
                    NewsArticle { id: format!("s{i:02}"), title: String::new(), body: words.join(" "), ..template.clone() }
                })
                .collect()
        })
        .collect()
}

fn clustering() -> Outcome {
    let corpus = ingest_corpus(&fixtures().join("corpus.jsonl")).map_err(|e| e.to_string())?;
    let mut spans: Vec<Vec<NewsArticle>> =
        partition_timespans(&corpus, 2).map_err(|e| e.to_string())?.into_iter().map(|(_, a)| a).collect();
    let mut rng = StdRng::seed_from_u64(7);
    spans.extend(synthetic_spans(&mut rng));
    let sweep = [0.2, 0.4, 0.6, 0.8, 1.0];
    for (i, span) in spans.iter().enumerate() {
        for threshold in sweep {
            let reference = partition(span, threshold);
            let mut shuffled = span.clone();
            for _ in 0..10 {
                shuffled.shuffle(&mut rng);
                ensure!(partition(&shuffled, threshold) == reference, "span {i}: shuffle changed partition at {threshold}");
            }
        }
        let counts: Vec<usize> = sweep.iter().map(|&t| partition(span, t).len()).collect();
        ensure!(counts.windows(2).all(|w| w[1] <= w[0]), "span {i}: counts {counts:?} not monotone");

        for original in span {
            let mut with_copy = span.clone();
            with_copy.push(NewsArticle { id: format!("{}-copy", original.id), ..original.clone() });
            for threshold in sweep {
                let p = partition(&with_copy, threshold);
                let home = p.iter().find(|c| c.contains(&original.id)).expect("article placed");
                ensure!(home.contains(&format!("{}-copy", original.id)), "span {i}: copy of {} split at {threshold}", original.id);
            }
        }
        ensure!(partition(span, 2.0).len() == 1, "span {i}: threshold 2 gave several clusters");
    }
    Ok(format!("{} spans, 10 shuffles x 5 thresholds, sweep {sweep:?}", spans.len()))
}

// ---------------------------------------------------------------- dedup

/// 1.0 for identical strings, otherwise at most 0.5.
struct BelowOneJudge;

impl ModelProvider for BelowOneJudge {
    fn identity(&self, _: Capability) -> ProviderIdentity {
        ProviderIdentity { backend: "acceptance".into(), model: "below-one".into() }
    }
    fn generate(&self, _: &str, _: &SamplingParams) -> Result<String, ProviderError> {
        unreachable!()
    }
    fn qa_extract(&self, _: &str, _: &str) -> Result<Option<QaAnswer>, ProviderError> {
        unreachable!()
    }
    fn answer_select(&self, _: &str, _: &str) -> Result<f64, ProviderError> {
        unreachable!()
    }
    fn duplicate_score(&self, a: &str, b: &str) -> Result<f64, ProviderError> {
        Ok(if a == b { 1.0 } else { 0.5 * MockProvider::new(0).duplicate_score(a, b)? })
    }
    fn entail(&self, _: &str, _: &str) -> Result<f64, ProviderError> {
        unreachable!()
    }
}

fn dedup(report: &SituationReport) -> Outcome {
    let mock = MockProvider::new(0);
    let pool: Vec<String> = report.sections().map(|s| s.question.text.clone()).collect();
    ensure!(pool.len() >= 4, "fixture report has too few questions");
    let mut rng = StdRng::seed_from_u64(11);
    let mut trials = 0;
    for _ in 0..200 {
        let sets: Vec<Vec<StrategicQuestion>> = (0..rng.random_range(1..4))
            .map(|s| {
                (0..rng.random_range(1..7))
                    .map(|_| StrategicQuestion {
                        chapter_ref: "c".into(),
                        text: pool[rng.random_range(0..pool.len())].clone(),
                        set_index: s,
                    })
                    .collect()
            })
            .collect();
        let flat = sets.concat();
        for threshold in [0.25, 0.5, 0.75, 1.0] {
            let once = deduplicate_questions(&sets, &mock, threshold).map_err(|e| e.to_string())?;
            let twice = deduplicate_questions(&[once.clone()], &mock, threshold).map_err(|e| e.to_string())?;
            ensure!(once == twice, "not idempotent at {threshold}");
        }
        let exact = deduplicate_questions(&sets, &BelowOneJudge, 1.0).map_err(|e| e.to_string())?;
        let mut expected: Vec<&str> = Vec::new();
        for q in &flat {
            if !expected.contains(&q.text.as_str()) {
                expected.push(&q.text);
            }
        }
        ensure!(exact.iter().map(|q| q.text.as_str()).collect::<Vec<_>>() == expected, "exact duplicates not removed");
        let one = deduplicate_questions(&sets, &mock, 0.0).map_err(|e| e.to_string())?;
        ensure!(one.len() == 1 && one[0] == flat[0], "threshold 0 kept {}", one.len());
        trials += 1;
    }
    Ok(format!("{trials} random set collections over {} fixture questions", pool.len()))
}

// ---------------------------------------------------------------- edits

fn edit_direction() -> Outcome {
    let pairs = load_edit_pairs(&fixtures().join("human_edits.jsonl")).map_err(|e| e.to_string())?;
    ensure!(!pairs.is_empty(), "no edit pairs");
    let study = edit_study(&pairs);
    for (i, m) in study.per_pair.iter().enumerate() {
        ensure!(m.tokens_inserted_pct > m.tokens_deleted_pct, "pair {i}: inserted {} <= deleted {}", m.tokens_inserted_pct, m.tokens_deleted_pct);
        ensure!(m.levenshtein_normalized > 0.0, "pair {i}: no character edits");
    }
    Ok(format!(
        "inserted {:.1}% > deleted {:.1}%, normalized levenshtein {:.3}",
        100.0 * study.mean_tokens_inserted_pct,
        100.0 * study.mean_tokens_deleted_pct,
        study.mean_levenshtein_normalized
    ))
}

// ---------------------------------------------------------------- citations

fn ctx(window: &str) -> ClaimContext {
    ClaimContext {
        id: String::new(),
        question_ref: "q".into(),
        article_id: "a".into(),
        snippet_range: (0, 1),
        answer_span: CharSpan::new(0, 1),
        answer_text: String::new(),
        claim_sentence: window.into(),
        window_range: (0, 1),
        window_text: window.into(),
        extraction_confidence: 1.0,
        validation_score: 1.0,
        source_bias: BiasRating::Unknown,
    }
}

fn citation_fixtures() -> Outcome {
    let judge = MockProvider::new(0);
    let quality = |raw: &str, windows: &[&str], threshold: f64| {
        let contexts: Vec<ClaimContext> = windows.iter().map(|w| ctx(w)).collect();
        let summary = GroundedSummary {
            question_ref: "q".into(),
            level: DetailLevel::Normal,
            sentences: parse_citations(raw, contexts.len()).sentences,
            raw_text: raw.into(),
            dangling_citations: 0,
        };
        citation_quality(&summary, &contexts, &judge, threshold).map_err(|e| e.to_string())
    };
    let cases: [(&str, &str, &[&str], f64, (f64, f64)); 5] = [
        ("all supported", "Drones struck Kyiv [1]. Air defenses held [2].", &["Drones struck Kyiv overnight.", "Air defenses held firm."], 0.5, (1.0, 1.0)),
        ("half supported", "Drones struck Kyiv [1]. Grain prices fell sharply [1].", &["Drones struck Kyiv overnight."], 0.5, (0.5, 0.5)),
        ("irrelevant extra citation", "Drones struck Kyiv [1][2].", &["Drones struck Kyiv overnight.", "Grain ships left Odesa."], 0.5, (0.5, 1.0)),
        ("jointly required citations", "Drones Kyiv power outages [1][2].", &["Drones Kyiv", "power outages"], 0.75, (1.0, 1.0)),
        ("unsupported", "Drones struck Kyiv [1].", &["Grain ships left Odesa."], 0.5, (0.0, 0.0)),
    ];
    for (name, raw, windows, threshold, (precision, recall)) in cases {
        let q = quality(raw, windows, threshold)?;
        ensure!(q.precision == precision && q.recall == recall, "{name}: got P={} R={}, want P={precision} R={recall}", q.precision, q.recall);
    }
    let uncited = quality("Drones struck Kyiv [1]. Markets were calm.", &["Drones struck Kyiv overnight."], 0.5)?;
    ensure!(uncited.coverage == 0.5 && uncited.recall == 0.5 && uncited.precision == 1.0, "uncited sentence case: {uncited:?}");
    Ok(format!("{} constructed summaries match analytic precision/recall", cases.len() + 1))
}

// ---------------------------------------------------------------- service

struct ServerGuard(Child);

impl Drop for ServerGuard {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn service(report_path: &Path, report: &SituationReport) -> Outcome {
    let port = std::net::TcpListener::bind("127.0.0.1:0").and_then(|l| l.local_addr()).map_err(|e| e.to_string())?.port();
    let _server = ServerGuard(
        sitrep()
            .args(["-q", "serve", "--report"])
            .arg(report_path)
            .args(["--bind", &format!("127.0.0.1:{port}")])
            .stdout(Stdio::null())
            .spawn()
            .map_err(|e| e.to_string())?,
    );
    let client = reqwest::blocking::Client::builder().timeout(Duration::from_secs(5)).build().map_err(|e| e.to_string())?;
    let base = format!("http://127.0.0.1:{port}");
    let get = |path: &str| client.get(format!("{base}{path}")).send();

    let deadline = Instant::now() + Duration::from_secs(10);
    loop {
        match get("/healthz") {
            Ok(r) if r.status() == 200 => {
                ensure!(r.text().map_err(|e| e.to_string())? == "ok", "/healthz body is not ok");
                break;
            }
            _ if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(50)),
            _ => return Err("/healthz never answered 200".into()),
        }
    }
    // The report loads right after the listener is up.
    let full = loop {
        let r = get("/report").map_err(|e| e.to_string())?;
        if r.status() == 503 && Instant::now() < deadline {
            std::thread::sleep(Duration::from_millis(50));
            continue;
        }
        ensure!(r.status() == 200, "/report answered {}", r.status());
        let ctype = r.headers().get("content-type").and_then(|v| v.to_str().ok()).unwrap_or("").to_string();
        ensure!(ctype.starts_with("application/json"), "/report content-type {ctype}");
        break r.text().map_err(|e| e.to_string())?;
    };
    ensure!(full == std::fs::read_to_string(report_path).map_err(|e| e.to_string())?, "/report differs from the file");

    let section = report.sections().find(|s| !s.contexts.is_empty()).ok_or("no section with contexts")?;
    let chapter = report.chapters().next().ok_or("no chapter")?;
    for path in [
        "/timespans".to_string(),
        format!("/chapters/{}", chapter.id),
        format!("/sections/{}", section.id),
        format!("/contexts/{}", section.contexts[0].id),
    ] {
        let r = get(&path).map_err(|e| e.to_string())?;
        ensure!(r.status() == 200, "{path} answered {}", r.status());
    }
    let body: serde_json::Value = get(&format!("/sections/{}", section.id))
        .and_then(|r| r.json())
        .map_err(|e| e.to_string())?;
    ensure!(body["summaries"].as_object().map(|m| m.len()) == Some(3), "section lacks three summary levels");
    for path in ["/chapters/nope", "/sections/nope", "/contexts/nope"] {
        let status = get(path).map_err(|e| e.to_string())?.status();
        ensure!(status == 404, "{path} answered {status}");
    }
    Ok("healthz 200, /report matches file, projections 200, unknown ids 404".into())
}

// ---------------------------------------------------------------- runner

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
    });
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("PASS  {name:<34} {secs:>6.2}s  {detail}");
            true
        }
        Err(why) => {
            println!("FAIL  {name:<34} {secs:>6.2}s  {why}");
            false
        }
    }
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let report_path = dir.path().join("run1.json");
    let mut results = Vec::new();

    results.push(run("metric oracle equivalence", metric_oracle));
    results.push(run("pipeline determinism", || determinism(dir.path())));
    let report = load_report(&report_path);
    results.push(run("structural invariants", || structure(report.as_ref().map_err(Clone::clone)?)));
    results.push(run("clustering properties", clustering));
    results.push(run("dedup properties", || dedup(report.as_ref().map_err(Clone::clone)?)));
    results.push(run("edit-metrics direction", edit_direction));
    results.push(run("citation-quality fixtures", citation_fixtures));
    results.push(run("service contract", || service(&report_path, report.as_ref().map_err(Clone::clone)?)));

    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
