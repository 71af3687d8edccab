//! JSON-lines corpus files.
//!
//! One report per line, in the field order of [`ExecutionReport`]. A corpus
//! may start with a metadata header line (`"kind": "corpus_header"`) naming
//! the generator, the seed and a hash of the config that produced it.
//! Parsing never drops a record silently: every malformed line is reported
//! with its line number and the JSON path of the offending field.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use tether_core::report::{Corpus, ExecutionReport, ValidationError};

pub const HEADER_KIND: &str = "corpus_header";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusHeader {
    /// Always [`HEADER_KIND`].
    pub kind: String,
    pub generator: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Hex SHA-256 of the canonical JSON config.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_sha256: Option<String>,
    pub report_count: usize,
}

impl CorpusHeader {
    pub fn new(generator: impl Into<String>, seed: Option<u64>, config_sha256: Option<String>, report_count: usize) -> Self {
        Self { kind: HEADER_KIND.into(), generator: generator.into(), seed, config_sha256, report_count }
    }
}

/// How unknown keys are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    /// Unknown keys are errors.
    #[default]
    Strict,
    /// Unknown keys are warnings.
    Lenient,
}

/// A malformed record.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {}{message}", path.as_deref().map(|p| format!("at `{p}`: ")).unwrap_or_default())]
pub struct RecordError {
    pub line: usize,
    /// JSON path of the offending field, when known.
    pub path: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("{} malformed record(s); first: {}", .0.len(), .0[0])]
    Records(Vec<RecordError>),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("header declares {declared} reports but the file holds {found}")]
    CountMismatch { declared: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusFile {
    pub header: Option<CorpusHeader>,
    pub corpus: Corpus,
    /// Unknown-key warnings (lenient mode only).
    pub warnings: Vec<String>,
}

const REPORT_KEYS: &[&str] = &[
    "report_id",
    "sequence_index",
    "phase_label",
    "family_id",
    "retry_index",
    "status",
    "test_results",
    "error_entries",
    "script_before",
    "script_after",
    "timestamp",
];
const CASE_KEYS: &[&str] = &["case_name", "verdict", "duration_ms", "error_text"];
const ENTRY_KEYS: &[&str] = &["raw_text", "stage"];

fn unknown_keys(value: &Value) -> Vec<String> {
    fn check(obj: &serde_json::Map<String, Value>, allowed: &[&str], prefix: &str, out: &mut Vec<String>) {
        out.extend(
            obj.keys()
                .filter(|k| !allowed.contains(&k.as_str()))
                .map(|k| if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") }),
        );
    }
    let mut out = Vec::new();
    let Some(obj) = value.as_object() else { return out };
    check(obj, REPORT_KEYS, "", &mut out);
    for (field, allowed) in [("test_results", CASE_KEYS), ("error_entries", ENTRY_KEYS)] {
        if let Some(items) = obj.get(field).and_then(Value::as_array) {
            for (i, item) in items.iter().enumerate() {
                if let Some(o) = item.as_object() {
                    check(o, allowed, &format!("{field}[{i}]"), &mut out);
                }
            }
        }
    }
    out
}

/// Parses and validates one record. Returns the report and any unknown-key
/// warnings (always empty in strict mode, where they are errors instead).
pub fn parse_report(text: &str, line: usize, strictness: Strictness) -> Result<(ExecutionReport, Vec<String>), RecordError> {
    let error = |path: Option<String>, message: String| RecordError { line, path, message };
    let value: Value = serde_json::from_str(text).map_err(|e| error(None, e.to_string()))?;
    let unknown = unknown_keys(&value);
    if strictness == Strictness::Strict {
        if let Some(first) = unknown.first() {
            return Err(error(Some(first.clone()), "unknown key".into()));
        }
    }
    let report: ExecutionReport = serde_path_to_error::deserialize(&value).map_err(|e| {
        let path = e.path().to_string();
        error((path != ".").then_some(path), e.into_inner().to_string())
    })?;
    report.validate().map_err(|e| error(None, e.to_string()))?;
    let warnings = unknown.into_iter().map(|k| format!("line {line}: unknown key `{k}` ignored")).collect();
    Ok((report, warnings))
}

/// Serializes one report as a single line (without the newline).
pub fn emit_report(report: &ExecutionReport) -> String {
    serde_json::to_string(report).expect("reports always serialize")
}

fn parse_header(value: &Value, line: usize) -> Option<Result<CorpusHeader, RecordError>> {
    if value.get("kind").and_then(Value::as_str) != Some(HEADER_KIND) {
        return None;
    }
    Some(serde_path_to_error::deserialize(value).map_err(|e| RecordError {
        line,
        path: Some(e.path().to_string()),
        message: e.into_inner().to_string(),
    }))
}

/// Parses a whole corpus file. Blank lines are skipped; all malformed
/// records are collected before failing.
pub fn read_corpus(text: &str, strictness: Strictness) -> Result<CorpusFile, CorpusError> {
    let mut header = None;
    let mut reports = Vec::new();
    let mut warnings = Vec::new();
    let mut errors = Vec::new();
    let mut first_record = true;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        if std::mem::take(&mut first_record) {
            if let Ok(value) = serde_json::from_str::<Value>(raw) {
                match parse_header(&value, line) {
                    Some(Ok(h)) => {
                        header = Some(h);
                        continue;
                    }
                    Some(Err(e)) => {
                        errors.push(e);
                        continue;
                    }
                    None => {}
                }
            }
        }
        match parse_report(raw, line, strictness) {
            Ok((report, w)) => {
                reports.push(report);
                warnings.extend(w);
            }
            Err(e) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        return Err(CorpusError::Records(errors));
    }
    if let Some(h) = &header {
        if h.report_count != reports.len() {
            return Err(CorpusError::CountMismatch { declared: h.report_count, found: reports.len() });
        }
    }
    Ok(CorpusFile { header, corpus: Corpus::new(reports)?, warnings })
}

/// Serializes a corpus, header first when given. Every line ends in `\n`.
pub fn write_corpus(header: Option<&CorpusHeader>, corpus: &Corpus) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        out.push_str(&serde_json::to_string(h).expect("header serializes"));
        out.push('\n');
    }
    for report in corpus.reports() {
        out.push_str(&emit_report(report));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const NO_ARTIFACT: &str = r#"{"report_id":"r1","sequence_index":0,"family_id":"f","retry_index":0,"status":"NO_ARTIFACT","test_results":[],"error_entries":[{"raw_text":"Could not extract code from LLM response","stage":"CODER"}],"timestamp":"2025-01-06T08:00:00Z"}"#;
    const COMPLETED: &str = r#"{"report_id":"r2","sequence_index":1,"family_id":"f","retry_index":1,"status":"COMPLETED","test_results":[{"case_name":"a","verdict":"PASS","duration_ms":10},{"case_name":"b","verdict":"PASS","duration_ms":12}],"error_entries":[],"timestamp":"2025-01-06T09:00:00Z"}"#;

    #[test]
    fn no_artifact_record_is_valid() {
        let (r, w) = parse_report(NO_ARTIFACT, 1, Strictness::Strict).unwrap();
        assert!(r.test_results.is_empty());
        assert!(w.is_empty());
    }

    #[test]
    fn two_passing_cases() {
        let (r, _) = parse_report(COMPLETED, 1, Strictness::Strict).unwrap();
        assert_eq!(r.test_results.len(), 2);
    }

    #[test]
    fn completed_with_failure_names_the_invariant() {
        let text = COMPLETED.replacen(r#""verdict":"PASS""#, r#""verdict":"FAIL""#, 1);
        let err = parse_report(&text, 4, Strictness::Strict).unwrap_err();
        assert_eq!(err.line, 4);
        assert!(err.message.contains("failing case"), "{err}");
    }

    #[test]
    fn type_errors_carry_the_field_path() {
        let text = COMPLETED.replace(r#""duration_ms":12"#, r#""duration_ms":"slow""#);
        let err = parse_report(&text, 1, Strictness::Strict).unwrap_err();
        assert_eq!(err.path.as_deref(), Some("test_results[1].duration_ms"));
    }

    #[test]
    fn unknown_keys_strict_and_lenient() {
        let text = COMPLETED.replace(r#""case_name":"a","#, r#""case_name":"a","dom":1,"#);
        let err = parse_report(&text, 1, Strictness::Strict).unwrap_err();
        assert_eq!(err.path.as_deref(), Some("test_results[0].dom"));
        let (_, warnings) = parse_report(&text, 1, Strictness::Lenient).unwrap();
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn round_trip_is_byte_stable() {
        for text in [NO_ARTIFACT, COMPLETED] {
            let (r, _) = parse_report(text, 1, Strictness::Strict).unwrap();
            assert_eq!(emit_report(&r), text);
        }
    }

    #[test]
    fn absent_scripts_are_omitted() {
        let (r, _) = parse_report(COMPLETED, 1, Strictness::Strict).unwrap();
        assert!(!emit_report(&r).contains("script_before"));
    }

    #[test]
    fn every_malformed_record_is_reported() {
        let text = format!("{NO_ARTIFACT}\nnot json\n\n{{}}\n{COMPLETED}\n");
        match read_corpus(&text, Strictness::Strict) {
            Err(CorpusError::Records(errors)) => {
                assert_eq!(errors.iter().map(|e| e.line).collect::<Vec<_>>(), vec![2, 4]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_stream_is_empty_corpus() {
        let file = read_corpus("", Strictness::Strict).unwrap();
        assert!(file.corpus.is_empty());
    }

    #[test]
    fn duplicate_ids_name_both_positions() {
        let dup = COMPLETED.replace("\"r2\"", "\"r1\"");
        let err = read_corpus(&format!("{NO_ARTIFACT}\n{dup}\n"), Strictness::Strict).unwrap_err();
        assert_eq!(
            err,
            CorpusError::Validation(ValidationError::DuplicateReportId { report_id: "r1".into(), first: 0, second: 1 })
        );
    }

    #[test]
    fn header_round_trips_and_counts_are_checked() {
        let file = read_corpus(&format!("{NO_ARTIFACT}\n{COMPLETED}\n"), Strictness::Strict).unwrap();
        let header = CorpusHeader::new("test", Some(7), Some("ab".into()), 2);
        let text = write_corpus(Some(&header), &file.corpus);
        let again = read_corpus(&text, Strictness::Strict).unwrap();
        assert_eq!(again.header, Some(header.clone()));
        assert_eq!(write_corpus(again.header.as_ref(), &again.corpus), text);

        let short = CorpusHeader { report_count: 3, ..header };
        let text = write_corpus(Some(&short), &file.corpus);
        assert!(matches!(read_corpus(&text, Strictness::Strict), Err(CorpusError::CountMismatch { .. })));
    }
}
