//! Client for a public crawl-index (CDX) HTTP API.
//!
//! Queries `{index_url}/{crawl_id}-index?url=domain/*&output=json`, walks
//! the paginated NDJSON result set, and maps each row to a [`CrawlRecord`].
//! Rows whose URL host differs from the queried domain are dropped, so the
//! output never carries a foreign domain. Transport errors and 5xx
//! responses are retried with exponential backoff; a 404 from the index is
//! reported as an unknown crawl.

use super::DatasetError;
use crate::url_model::CrawlRecord;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

/// Connection settings for the crawl-index API.
#[derive(Debug, Clone)]
pub struct CdxConfig {
    /// Base URL of the index service, without a trailing slash.
    pub index_url: String,
    /// Crawl identifier, e.g. "CC-MAIN-2023-40".
    pub crawl_id: String,
    /// Total attempts per request (first try included).
    pub max_attempts: u32,
    /// First retry delay; doubles on every further retry.
    pub backoff_base: Duration,
    /// Concurrent page fetches. Results merge in page order regardless.
    pub jobs: usize,
}

impl Default for CdxConfig {
    fn default() -> Self {
        CdxConfig {
            index_url: "https://index.commoncrawl.org".to_string(),
            crawl_id: "CC-MAIN-2023-40".to_string(),
            max_attempts: 5,
            backoff_base: Duration::from_millis(500),
            jobs: 1,
        }
    }
}

pub struct CdxClient {
    config: CdxConfig,
    agent: ureq::Agent,
}

impl CdxClient {
    pub fn new(config: CdxConfig) -> Self {
        let agent_config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .http_status_as_error(false)
            .build();
        CdxClient { config, agent: agent_config.into() }
    }

    fn endpoint(&self) -> String {
        format!(
            "{}/{}-index",
            self.config.index_url.trim_end_matches('/'),
            self.config.crawl_id
        )
    }

    /// One GET with retry/backoff. Returns (status, body).
    fn get(&self, url: &str) -> Result<(u16, String), DatasetError> {
        let mut delay = self.config.backoff_base;
        let mut last_err = String::new();
        for attempt in 1..=self.config.max_attempts {
            match self.agent.get(url).call() {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    if (500..600).contains(&status) {
                        last_err = format!("server error {status}");
                    } else {
                        let body = resp.body_mut().read_to_string().map_err(|e| {
                            DatasetError::Network { attempts: attempt, message: e.to_string() }
                        })?;
                        return Ok((status, body));
                    }
                }
                Err(e) => last_err = e.to_string(),
            }
            if attempt < self.config.max_attempts {
                std::thread::sleep(delay);
                delay *= 2;
            }
        }
        Err(DatasetError::Network {
            attempts: self.config.max_attempts,
            message: last_err,
        })
    }

    /// Fetches every record of `domain/*` from the index, paginating and
    /// merging pages in order.
    pub fn fetch_domain(&self, domain: &str) -> Result<Vec<CrawlRecord>, DatasetError> {
        let query = percent_encode(&format!("{domain}/*"));
        let base = format!("{}?url={}&output=json", self.endpoint(), query);

        let (status, body) = self.get(&format!("{base}&showNumPages=true"))?;
        if status == 404 {
            return Err(DatasetError::UnknownCrawl(self.config.crawl_id.clone()));
        }
        let pages = parse_num_pages(&body);
        if pages == 0 {
            return Ok(Vec::new());
        }

        let results: Vec<Option<Vec<CrawlRecord>>> = if self.config.jobs <= 1 {
            let mut out = Vec::with_capacity(pages);
            for page in 0..pages {
                out.push(Some(self.fetch_page(&base, page, domain)?));
            }
            out
        } else {
            self.fetch_pages_concurrent(&base, pages, domain)?
        };

        Ok(results.into_iter().flatten().flatten().collect())
    }

    fn fetch_page(
        &self,
        base: &str,
        page: usize,
        domain: &str,
    ) -> Result<Vec<CrawlRecord>, DatasetError> {
        let (status, body) = self.get(&format!("{base}&page={page}"))?;
        if status == 404 {
            // Index reports pages past the end (or an empty result) as 404.
            return Ok(Vec::new());
        }
        Ok(parse_cdx_body(&body, domain))
    }

    fn fetch_pages_concurrent(
        &self,
        base: &str,
        pages: usize,
        domain: &str,
    ) -> Result<Vec<Option<Vec<CrawlRecord>>>, DatasetError> {
        let slots: Mutex<Vec<Option<Vec<CrawlRecord>>>> = Mutex::new(vec![None; pages]);
        let next = AtomicUsize::new(0);
        let first_err: Mutex<Option<DatasetError>> = Mutex::new(None);
        std::thread::scope(|scope| {
            for _ in 0..self.config.jobs.min(pages) {
                scope.spawn(|| loop {
                    let page = next.fetch_add(1, Ordering::SeqCst);
                    if page >= pages || first_err.lock().unwrap().is_some() {
                        return;
                    }
                    match self.fetch_page(base, page, domain) {
                        Ok(records) => slots.lock().unwrap()[page] = Some(records),
                        Err(e) => {
                            let mut slot = first_err.lock().unwrap();
                            if slot.is_none() {
                                *slot = Some(e);
                            }
                            return;
                        }
                    }
                });
            }
        });
        if let Some(e) = first_err.into_inner().unwrap() {
            return Err(e);
        }
        Ok(slots.into_inner().unwrap())
    }
}

/// Reads {"pages": N} out of a showNumPages response; a body that carries
/// no page count is treated as a single page.
fn parse_num_pages(body: &str) -> usize {
    let trimmed = body.trim();
    if trimmed.is_empty() {
        return 0;
    }
    serde_json::from_str::<serde_json::Value>(trimmed)
        .ok()
        .and_then(|v| v.get("pages").and_then(|p| p.as_u64()))
        .map(|p| p as usize)
        .unwrap_or(1)
}

/// Parses NDJSON CDX rows, keeping rows whose URL host matches `domain`.
fn parse_cdx_body(body: &str, domain: &str) -> Vec<CrawlRecord> {
    body.lines()
        .filter_map(|line| parse_cdx_row(line, domain))
        .collect()
}

fn parse_cdx_row(line: &str, domain: &str) -> Option<CrawlRecord> {
    let row: serde_json::Value = serde_json::from_str(line.trim()).ok()?;
    let url = row.get("url")?.as_str()?;
    let status = match row.get("status") {
        Some(serde_json::Value::String(s)) => s.parse::<u16>().ok()?,
        Some(serde_json::Value::Number(n)) => u16::try_from(n.as_u64()?).ok()?,
        _ => return None,
    };
    let (host, path) = split_url(url)?;
    if !host.eq_ignore_ascii_case(domain) {
        return None;
    }
    Some(CrawlRecord { domain: domain.to_string(), raw_path: path, status })
}

/// Splits an absolute http(s) URL into (host, path-with-query). Ports and
/// userinfo are stripped from the host.
fn split_url(url: &str) -> Option<(String, String)> {
    let rest = url.split_once("://")?.1;
    let (authority, path) = match rest.find('/') {
        Some(idx) => (&rest[..idx], rest[idx..].to_string()),
        None => (rest, "/".to_string()),
    };
    let authority = authority.rsplit_once('@').map_or(authority, |(_, h)| h);
    let host = if let Some(stripped) = authority.strip_prefix('[') {
        stripped.split_once(']').map(|(h, _)| h).unwrap_or(stripped)
    } else {
        authority.split(':').next().unwrap_or(authority)
    };
    if host.is_empty() {
        return None;
    }
    Some((host.to_string(), path))
}

/// Percent-encodes everything outside RFC 3986 unreserved characters.
fn percent_encode(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for byte in s.bytes() {
        match byte {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'.' | b'_' | b'~' | b'*' => {
                out.push(byte as char)
            }
            _ => out.push_str(&format!("%{byte:02X}")),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_url_variants() {
        assert_eq!(
            split_url("https://example.com/a/b?q=1"),
            Some(("example.com".into(), "/a/b?q=1".into()))
        );
        assert_eq!(
            split_url("http://example.com:8080/x"),
            Some(("example.com".into(), "/x".into()))
        );
        assert_eq!(
            split_url("http://example.com"),
            Some(("example.com".into(), "/".into()))
        );
        assert_eq!(split_url("garbage"), None);
    }

    #[test]
    fn rows_from_other_hosts_are_dropped() {
        let body = concat!(
            r#"{"url":"https://example.com/keep","status":"200"}"#,
            "\n",
            r#"{"url":"https://www.example.com/drop","status":"200"}"#,
            "\n",
            r#"{"url":"https://example.com/also","status":301}"#,
            "\n",
        );
        let records = parse_cdx_body(body, "example.com");
        assert_eq!(records.len(), 2);
        assert!(records.iter().all(|r| r.domain == "example.com"));
        assert_eq!(records[1].status, 301);
    }

    #[test]
    fn num_pages_parsing() {
        assert_eq!(parse_num_pages(r#"{"pages": 3, "pageSize": 5}"#), 3);
        assert_eq!(parse_num_pages(""), 0);
        // NDJSON body without a page count is one page of results.
        assert_eq!(parse_num_pages(r#"{"url":"x","status":"200"}"#), 1);
    }
}
