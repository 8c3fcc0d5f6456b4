use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{ReportError, Section, SituationReport, SCHEMA_VERSION};
use crate::summarize::{CitedSentence, DetailLevel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Html,
}

impl FromStr for ExportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ExportFormat::Json),
            "html" => Ok(ExportFormat::Html),
            _ => Err(ReportError::UnknownFormat(s.to_string())),
        }
    }
}

/// Canonical JSON: pretty-printed, fixed key order, trailing newline.
pub fn to_json(report: &SituationReport) -> Result<String, ReportError> {
    let mut out = serde_json::to_string_pretty(report)?;
    out.push('\n');
    Ok(out)
}

pub fn from_json(json: &str) -> Result<SituationReport, ReportError> {
    let report: SituationReport = serde_json::from_str(json)?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(ReportError::SchemaVersion(report.schema_version));
    }
    Ok(report)
}

/// Write through a temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    let io = |source| ReportError::Io { path: path.display().to_string(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn export(report: &SituationReport, format: ExportFormat, path: &Path) -> Result<(), ReportError> {
    let body = match format {
        ExportFormat::Json => to_json(report)?,
        ExportFormat::Html => render_html(report),
    };
    write_atomic(path, body.as_bytes())
}

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

/// Escape a summary sentence, turning valid `[k]` markers into links to
/// the section's contexts.
fn linked_sentence(sentence: &CitedSentence, section: &Section) -> String {
    let raw = &sentence.raw;
    let mut out = String::new();
    let mut rest = raw.as_str();
    while let Some(open) = rest.find('[') {
        out.push_str(&esc(&rest[..open]));
        let after = &rest[open + 1..];
        let digits = after.bytes().take_while(u8::is_ascii_digit).count();
        let target = (digits > 0 && after[digits..].starts_with(']'))
            .then(|| after[..digits].parse::<usize>().ok())
            .flatten()
            .and_then(|k| section.contexts.get(k.wrapping_sub(1)).map(|c| (k, c)));
        match target {
            Some((k, context)) => {
                let _ = write!(out, "<a class=\"cite\" href=\"#context-{}\">[{k}]</a>", esc(&context.id));
                rest = &after[digits + 1..];
            }
            None => {
                out.push('[');
                rest = after;
            }
        }
    }
    out.push_str(&esc(rest));
    out
}

const STYLE: &str = "body{font-family:sans-serif;max-width:60rem;margin:auto;padding:1rem}\
.bias{font-size:.75rem;padding:0 .3rem;border-radius:.2rem;background:#ddd}\
.bias-left{background:#4a7bd1;color:#fff}.bias-lean_left{background:#9bb8ea}\
.bias-center{background:#b9a4d6}.bias-lean_right{background:#eaa39b}\
.bias-right{background:#d14a4a;color:#fff}.flag{color:#a33}\
.summary{margin:.5rem 0}.context{font-size:.9rem;margin:.3rem 0}";

/// Static single-file rendering with `chapter-`, `section-` and `context-`
/// anchors.
pub fn render_html(report: &SituationReport) -> String {
    let mut h = String::new();
    let _ = writeln!(h, "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">");
    let _ = writeln!(h, "<title>{}</title>\n<style>{STYLE}</style>\n</head>\n<body>", esc(&report.scenario_name));
    let _ = writeln!(h, "<h1>{}</h1>\n<p>Generated {}</p>", esc(&report.scenario_name), esc(&report.generated_at));

    h.push_str("<nav><ol>\n");
    for span in &report.timespans {
        let t = &span.timespan;
        let _ = writeln!(h, "<li>{} to {}<ul>", t.start_date, t.end_date);
        for c in &span.chapters {
            let _ = writeln!(h, "<li><a href=\"#chapter-{0}\">{1}</a></li>", esc(&c.id), esc(&c.headline));
        }
        h.push_str("</ul></li>\n");
    }
    h.push_str("</ol></nav>\n");

    for span in &report.timespans {
        let t = &span.timespan;
        let _ = writeln!(h, "<h2 id=\"timespan-{}\">{} to {}</h2>", t.index, t.start_date, t.end_date);
        for chapter in &span.chapters {
            let _ = writeln!(h, "<section id=\"chapter-{}\">", esc(&chapter.id));
            let _ = writeln!(h, "<h3>{}</h3>", esc(&chapter.headline));
            let _ = writeln!(h, "<p class=\"query\"><code>{}</code></p>", esc(&chapter.retrieval_query));
            for section in &chapter.sections {
                render_section(&mut h, report, section);
            }
            h.push_str("</section>\n");
        }
    }
    h.push_str("</body>\n</html>\n");
    h
}

fn render_section(h: &mut String, report: &SituationReport, section: &Section) {
    let _ = writeln!(h, "<article id=\"section-{}\">", esc(&section.id));
    let _ = writeln!(h, "<h4>{}</h4>", esc(&section.question.text));
    if !section.flags.is_empty() {
        h.push_str("<p class=\"flag\">No relevant contexts were found for this question.</p>\n");
    }
    for level in DetailLevel::ALL {
        let Some(summary) = section.summaries.get(&level) else { continue };
        let text: Vec<String> = summary.sentences.iter().map(|s| linked_sentence(s, section)).collect();
        let _ = writeln!(h, "<div class=\"summary level-{level}\"><strong>{level}</strong>: {}</div>", text.join(" "));
    }
    if !section.contexts.is_empty() {
        h.push_str("<ol class=\"contexts\">\n");
        for c in &section.contexts {
            let (source, url, title) = report
                .articles
                .get(&c.article_id)
                .map(|a| (a.source.as_str(), a.url.as_str(), a.title.as_str()))
                .unwrap_or(("", "", ""));
            let _ = writeln!(
                h,
                "<li class=\"context\" id=\"context-{}\">{} <span class=\"score\">({:.3})</span> \
                 <a href=\"{}\">{}: {}</a> <span class=\"bias bias-{}\">{}</span></li>",
                esc(&c.id),
                esc(&c.window_text),
                c.validation_score,
                esc(url),
                esc(source),
                esc(title),
                c.source_bias,
                c.source_bias,
            );
        }
        h.push_str("</ol>\n");
    }
    h.push_str("</article>\n");
}
