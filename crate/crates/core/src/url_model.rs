//! Crawl-record parsing and URL path normalization.
//!
//! Raw crawl lines carry a domain, a path as crawled, and an HTTP status
//! code. Paths are normalized into ordered directory segments: queries and
//! fragments are stripped, file-like final segments are dropped, and the
//! remaining segment count is the path's depth. All normalization is purely
//! string-based; nothing here touches the network or the filesystem.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Errors produced while parsing crawl records or normalizing paths.
#[derive(Debug, thiserror::Error)]
pub enum UrlError {
    /// The crawl line is missing a field, has an empty/invalid domain, or a
    /// non-integer status code.
    #[error("malformed crawl record: {0}")]
    MalformedRecord(String),
    /// The path contains a "." or ".." directory segment. Traversal
    /// artifacts are discarded, not resolved.
    #[error("rejected path: {0}")]
    Rejected(String),
}

/// One crawled HTTP response: domain, path as crawled, status code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrawlRecord {
    pub domain: String,
    #[serde(rename = "path")]
    pub raw_path: String,
    pub status: u16,
}

/// A single directory name. Non-empty, case preserved, and free of the
/// separator and query/fragment characters ('/', '?', '#').
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Segment(String);

impl Segment {
    /// Wraps a directory name, rejecting empty strings, "."/"..", and names
    /// containing '/', '?' or '#'.
    pub fn new(name: impl Into<String>) -> Result<Self, UrlError> {
        let name = name.into();
        if name.is_empty() || name == "." || name == ".." {
            return Err(UrlError::MalformedRecord(format!(
                "invalid segment {name:?}"
            )));
        }
        if name.contains(['/', '?', '#']) {
            return Err(UrlError::MalformedRecord(format!(
                "segment {name:?} contains a reserved character"
            )));
        }
        Ok(Segment(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Segment {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// A normalized path: an ordered list of directory segments. The empty
/// sequence is the site root. Depth is the number of segments.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PathSeq(Vec<Segment>);

impl PathSeq {
    pub fn root() -> Self {
        PathSeq(Vec::new())
    }

    pub fn new(segments: Vec<Segment>) -> Self {
        PathSeq(segments)
    }

    /// Builds a path from plain strings, validating each segment.
    pub fn from_names<I, S>(names: I) -> Result<Self, UrlError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let segments = names
            .into_iter()
            .map(Segment::new)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PathSeq(segments))
    }

    /// Number of directory segments; "/news/2023" has depth 2.
    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Segment> {
        self.0.iter()
    }

    /// Returns this path extended by one more segment.
    pub fn child(&self, segment: Segment) -> PathSeq {
        let mut segments = self.0.clone();
        segments.push(segment);
        PathSeq(segments)
    }

    /// Renders the path with a leading slash; the root renders as "/".
    pub fn render(&self) -> String {
        if self.0.is_empty() {
            return "/".to_string();
        }
        let mut out = String::new();
        for seg in &self.0 {
            out.push('/');
            out.push_str(seg.as_str());
        }
        out
    }
}

impl fmt::Display for PathSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl<'a> IntoIterator for &'a PathSeq {
    type Item = &'a Segment;
    type IntoIter = std::slice::Iter<'a, Segment>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Parses one newline-delimited JSON crawl record with keys `domain`,
/// `path`, `status`. Fields are extracted verbatim; no normalization.
pub fn parse_crawl_line(line: &str) -> Result<CrawlRecord, UrlError> {
    let record: CrawlRecord = serde_json::from_str(line)
        .map_err(|e| UrlError::MalformedRecord(format!("{e}: {line:?}")))?;
    if record.domain.is_empty() || record.domain.contains('/') {
        return Err(UrlError::MalformedRecord(format!(
            "invalid domain {:?}",
            record.domain
        )));
    }
    if !(100..=599).contains(&record.status) {
        return Err(UrlError::MalformedRecord(format!(
            "status {} out of range",
            record.status
        )));
    }
    Ok(record)
}

/// Normalizes a raw crawled path into a directory sequence.
///
/// Rules:
/// - everything from the first '?' or '#' is stripped
/// - the path is split on '/' and empty segments are dropped
/// - a final segment containing a '.' is treated as a file and dropped;
///   the drop repeats while the new final segment still contains a '.',
///   which makes normalization idempotent on its own rendered output
/// - case is preserved; no percent-decoding is applied
///
/// Paths with a "." or ".." directory segment are rejected outright.
pub fn normalize_path(raw_path: &str) -> Result<PathSeq, UrlError> {
    let stripped = match raw_path.find(['?', '#']) {
        Some(idx) => &raw_path[..idx],
        None => raw_path,
    };
    let mut names: Vec<&str> = stripped.split('/').filter(|s| !s.is_empty()).collect();
    while let Some(last) = names.last() {
        if last.contains('.') && *last != "." && *last != ".." {
            names.pop();
        } else {
            break;
        }
    }
    if names.iter().any(|s| *s == "." || *s == "..") {
        return Err(UrlError::Rejected(raw_path.to_string()));
    }
    let segments = names
        .into_iter()
        .map(Segment::new)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PathSeq(segments))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_extracts_fields_verbatim() {
        let rec = parse_crawl_line(r#"{"domain":"example.edu","path":"/news/2024","status":200}"#)
            .unwrap();
        assert_eq!(rec.domain, "example.edu");
        assert_eq!(rec.raw_path, "/news/2024");
        assert_eq!(rec.status, 200);
    }

    #[test]
    fn parse_rejects_empty_domain() {
        assert!(parse_crawl_line(r#"{"domain":"","path":"/a","status":200}"#).is_err());
    }

    #[test]
    fn parse_rejects_non_integer_status() {
        assert!(parse_crawl_line(r#"{"domain":"x.gov","path":"/a","status":"ok"}"#).is_err());
    }

    #[test]
    fn parse_rejects_missing_field_and_bad_range() {
        assert!(parse_crawl_line(r#"{"domain":"x.gov","status":200}"#).is_err());
        assert!(parse_crawl_line(r#"{"domain":"x.gov","path":"/a","status":99}"#).is_err());
        assert!(parse_crawl_line(r#"{"domain":"a/b","path":"/a","status":200}"#).is_err());
    }

    #[test]
    fn normalize_strips_query_and_file() {
        let p = normalize_path("/news/2024/index.html?q=1").unwrap();
        assert_eq!(p, PathSeq::from_names(["news", "2024"]).unwrap());
    }

    #[test]
    fn normalize_root() {
        assert_eq!(normalize_path("/").unwrap(), PathSeq::root());
        assert_eq!(normalize_path("").unwrap(), PathSeq::root());
    }

    #[test]
    fn normalize_rejects_traversal() {
        assert!(matches!(normalize_path("/a/../b"), Err(UrlError::Rejected(_))));
        assert!(matches!(normalize_path("/./a"), Err(UrlError::Rejected(_))));
    }

    #[test]
    fn normalize_drops_empty_segments() {
        let p = normalize_path("/news//today/").unwrap();
        assert_eq!(p, PathSeq::from_names(["news", "today"]).unwrap());
    }

    #[test]
    fn trailing_traversal_segment_is_not_a_file() {
        // A final ".." contains a '.' but is a traversal artifact, not a file.
        assert!(normalize_path("/a/..").is_err());
    }

    #[test]
    fn dotted_segments_strip_until_clean() {
        assert_eq!(normalize_path("/v1.0/index.html").unwrap(), PathSeq::root());
        let p = normalize_path("/docs/v1.0/readme.md").unwrap();
        assert_eq!(p, PathSeq::from_names(["docs"]).unwrap());
        // a dotted segment survives when a clean one follows it
        let p = normalize_path("/v1.0/docs").unwrap();
        assert_eq!(p, PathSeq::from_names(["v1.0", "docs"]).unwrap());
    }

    #[test]
    fn fragment_stripped_before_split() {
        let p = normalize_path("/docs#section/extra").unwrap();
        assert_eq!(p, PathSeq::from_names(["docs"]).unwrap());
    }

    #[test]
    fn case_preserved() {
        let p = normalize_path("/Article/News").unwrap();
        assert_eq!(p.segments()[0].as_str(), "Article");
    }

    #[test]
    fn depth_counts_segments() {
        assert_eq!(normalize_path("/news/2023").unwrap().depth(), 2);
        assert_eq!(PathSeq::root().depth(), 0);
        assert_eq!(PathSeq::from_names(["a", "b", "c", "d"]).unwrap().depth(), 4);
    }

    #[test]
    fn render_round_trip() {
        let p = normalize_path("/news/2024").unwrap();
        assert_eq!(p.render(), "/news/2024");
        assert_eq!(PathSeq::root().render(), "/");
    }
}
