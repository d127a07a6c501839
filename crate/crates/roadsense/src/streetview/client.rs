use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use roadsense_core::coverage::{QueryRecord, QueryStatus, YearMonth};
use roadsense_core::GeoPoint;
use serde::Deserialize;

use super::requests::{build_image_request, build_metadata_request, redact_key, ImageSize, RequestError, DEFAULT_BASE_URL};

/// Number of leading queries checked for a denied key before the rest run.
pub const PROBE_SIZE: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

/// No HTTP response was received (connect failure, timeout, reset).
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct TransportFailure(pub String);

pub trait Transport: Sync {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportFailure>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build();
        Self {
            agent: ureq::Agent::new_with_config(config),
        }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(30))
    }
}

impl Transport for UreqTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, TransportFailure> {
        let mut resp = self
            .agent
            .get(url)
            .call()
            .map_err(|e| TransportFailure(redact_key(&e.to_string())))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .with_config()
            .limit(16 * 1024 * 1024)
            .read_to_vec()
            .map_err(|e| TransportFailure(e.to_string()))?;
        Ok(HttpResponse { status, body })
    }
}

/// Source of `queried_at` timestamps.
pub trait Clock: Sync {
    fn now(&self) -> String;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> String {
        chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string()
    }
}

/// Returns the same timestamp for every query; used for reproducible runs.
pub struct FixedClock(pub String);

impl Clock for FixedClock {
    fn now(&self) -> String {
        self.0.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientConfig {
    pub base_url: String,
    pub api_key: String,
    pub max_concurrency: usize,
    /// Requests per second across all workers; 0 disables the limit.
    pub rate_per_s: f64,
    /// Extra attempts after a transient failure.
    pub retries: u32,
    /// First backoff delay; doubles on each retry.
    pub backoff_ms: u64,
    pub image_size: ImageSize,
    /// Directory under which `images/<segment_id>.jpg` is written. `None`
    /// skips image downloads.
    pub out_dir: Option<PathBuf>,
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_BASE_URL.into(),
            api_key: String::new(),
            max_concurrency: 4,
            rate_per_s: 10.0,
            retries: 3,
            backoff_ms: 200,
            image_size: ImageSize::default(),
            out_dir: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FetchError {
    #[error(transparent)]
    Request(#[from] RequestError),
    #[error(
        "{denied} of the first {probed} queries were REQUEST_DENIED; check that the API key is valid, \
         has the Street View Static API enabled and has quota left"
    )]
    Denied { denied: usize, probed: usize },
    #[error("writing image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("max_concurrency must be at least 1")]
    Concurrency,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FetchOutcome {
    /// One record per input point, in input order.
    pub records: Vec<QueryRecord>,
    pub fetched: usize,
    pub reused: usize,
}

/// What a metadata response says about a location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetadataReply {
    Final {
        status: QueryStatus,
        pano_id: Option<String>,
        capture_date: Option<YearMonth>,
    },
    /// Worth retrying; carries the HTTP-style code recorded if retries run out.
    Transient(u16),
}

#[derive(Deserialize)]
struct MetadataBody {
    status: String,
    pano_id: Option<String>,
    date: Option<String>,
}

/// Interprets one metadata HTTP response.
///
/// `OVER_QUERY_LIMIT` and `UNKNOWN_ERROR` are retried like HTTP 429 and 500.
/// `NOT_FOUND` is treated as no imagery; `INVALID_REQUEST` is a permanent
/// 400. Capture dates that are not `YYYY-MM` are dropped.
pub fn parse_metadata(resp: &HttpResponse) -> MetadataReply {
    let final_status = |status| MetadataReply::Final {
        status,
        pano_id: None,
        capture_date: None,
    };
    match resp.status {
        200 => {}
        429 | 500..=599 => return MetadataReply::Transient(resp.status),
        code => return final_status(QueryStatus::TransportError(code)),
    }
    let Ok(body) = serde_json::from_slice::<MetadataBody>(&resp.body) else {
        return final_status(QueryStatus::TransportError(200));
    };
    match body.status.as_str() {
        "OK" => MetadataReply::Final {
            status: QueryStatus::Ok,
            pano_id: body.pano_id.filter(|p| !p.is_empty()),
            capture_date: body.date.and_then(|d| d.parse().ok()),
        },
        "ZERO_RESULTS" | "NOT_FOUND" => final_status(QueryStatus::ZeroResults),
        "REQUEST_DENIED" => final_status(QueryStatus::RequestDenied),
        "OVER_QUERY_LIMIT" => MetadataReply::Transient(429),
        "UNKNOWN_ERROR" => MetadataReply::Transient(500),
        _ => final_status(QueryStatus::TransportError(400)),
    }
}

struct TokenBucket {
    rate: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    fn new(rate: f64) -> Self {
        Self {
            rate,
            state: Mutex::new((1.0, Instant::now())),
        }
    }

    fn acquire(&self) {
        if self.rate <= 0.0 {
            return;
        }
        loop {
            let wait = {
                let mut s = self.state.lock().expect("rate limiter lock");
                let now = Instant::now();
                s.0 = (s.0 + now.duration_since(s.1).as_secs_f64() * self.rate).min(1.0);
                s.1 = now;
                if s.0 >= 1.0 {
                    s.0 -= 1.0;
                    return;
                }
                (1.0 - s.0) / self.rate
            };
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

enum Attempt<T> {
    Done(T),
    Retry(u16),
}

struct Fetcher<'a> {
    config: &'a ClientConfig,
    transport: &'a dyn Transport,
    clock: &'a dyn Clock,
    bucket: TokenBucket,
}

impl Fetcher<'_> {
    /// Runs `interpret` on responses until it yields a final answer or the
    /// retry budget is spent. Exhaustion gives the last code seen (0 when no
    /// response ever arrived).
    fn with_retries<T>(&self, url: &str, interpret: impl Fn(&HttpResponse) -> Attempt<T>) -> Result<T, u16> {
        let mut code = 0;
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                let delay = self.config.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                std::thread::sleep(Duration::from_millis(delay));
            }
            self.bucket.acquire();
            match self.transport.get(url) {
                Ok(resp) => match interpret(&resp) {
                    Attempt::Done(v) => return Ok(v),
                    Attempt::Retry(c) => code = c,
                },
                Err(e) => {
                    log::debug!("{}: {e}", redact_key(url));
                    code = 0;
                }
            }
        }
        Err(code)
    }

    fn query(&self, segment_id: &str, location: GeoPoint) -> Result<QueryRecord, FetchError> {
        let mut record = QueryRecord {
            segment_id: segment_id.to_string(),
            location,
            status: QueryStatus::TransportError(0),
            pano_id: None,
            capture_date: None,
            image_path: None,
            queried_at: self.clock.now(),
        };
        let url = build_metadata_request(&self.config.base_url, location, &self.config.api_key)?;
        let reply = self.with_retries(&url, |resp| match parse_metadata(resp) {
            MetadataReply::Transient(code) => Attempt::Retry(code),
            MetadataReply::Final {
                status,
                pano_id,
                capture_date,
            } => Attempt::Done((status, pano_id, capture_date)),
        });
        let (status, pano_id, capture_date) = match reply {
            Ok(v) => v,
            Err(code) => {
                record.status = QueryStatus::TransportError(code);
                return Ok(record);
            }
        };
        record.status = status;
        if status != QueryStatus::Ok {
            return Ok(record);
        }
        record.pano_id = pano_id;
        record.capture_date = capture_date;

        if let Some(out_dir) = &self.config.out_dir {
            let url = build_image_request(&self.config.base_url, location, &self.config.api_key, self.config.image_size)?;
            let image = self.with_retries(&url, |resp| match resp.status {
                200 => Attempt::Done(Ok(resp.body.clone())),
                429 | 500..=599 => Attempt::Retry(resp.status),
                code => Attempt::Done(Err(code)),
            });
            match image {
                Ok(Ok(bytes)) => {
                    let relative = format!("images/{segment_id}.jpg");
                    let path = out_dir.join(&relative);
                    let write = || -> std::io::Result<()> {
                        std::fs::create_dir_all(path.parent().expect("image path has a parent"))?;
                        std::fs::write(&path, &bytes)
                    };
                    write().map_err(|source| FetchError::Image { path: path.clone(), source })?;
                    record.image_path = Some(relative);
                }
                // imagery exists but could not be downloaded: not usable
                Ok(Err(code)) | Err(code) => {
                    record.status = QueryStatus::TransportError(code);
                    record.pano_id = None;
                    record.capture_date = None;
                }
            }
        }
        Ok(record)
    }

    /// Queries `jobs` with up to `max_concurrency` threads; results are
    /// returned in job order.
    fn run(
        &self,
        jobs: &[(usize, &str, GeoPoint)],
        on_record: &(dyn Fn(&QueryRecord) + Sync),
    ) -> Result<Vec<(usize, QueryRecord)>, FetchError> {
        let next = AtomicUsize::new(0);
        let results: Mutex<Vec<Option<QueryRecord>>> = Mutex::new(vec![None; jobs.len()]);
        let failure: Mutex<Option<FetchError>> = Mutex::new(None);
        let workers = self.config.max_concurrency.min(jobs.len()).max(1);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    if failure.lock().expect("failure lock").is_some() {
                        return;
                    }
                    let j = next.fetch_add(1, Ordering::Relaxed);
                    let Some(&(_, id, p)) = jobs.get(j) else { return };
                    match self.query(id, p) {
                        Ok(rec) => {
                            on_record(&rec);
                            results.lock().expect("results lock")[j] = Some(rec);
                        }
                        Err(e) => {
                            failure.lock().expect("failure lock").get_or_insert(e);
                            return;
                        }
                    }
                });
            }
        });
        if let Some(e) = failure.into_inner().expect("failure lock") {
            return Err(e);
        }
        let results = results.into_inner().expect("results lock");
        Ok(jobs
            .iter()
            .zip(results)
            .map(|(&(i, _, _), r)| (i, r.expect("every job completed")))
            .collect())
    }
}

/// Queries imagery availability at every point, in input order.
///
/// Records in `existing` are reused by segment id unless they ended in a
/// transport error, so an interrupted run can be resumed. `on_record` sees
/// each freshly fetched record as soon as it completes (in completion
/// order), which lets callers journal progress.
pub fn fetch_all(
    points: &[(String, GeoPoint)],
    config: &ClientConfig,
    transport: &dyn Transport,
    existing: &[QueryRecord],
    clock: &dyn Clock,
    on_record: &(dyn Fn(&QueryRecord) + Sync),
) -> Result<FetchOutcome, FetchError> {
    if config.max_concurrency == 0 {
        return Err(FetchError::Concurrency);
    }
    if config.api_key.is_empty() {
        return Err(RequestError::EmptyKey.into());
    }
    let previous: HashMap<&str, &QueryRecord> = existing
        .iter()
        .filter(|r| !matches!(r.status, QueryStatus::TransportError(_)))
        .map(|r| (r.segment_id.as_str(), r))
        .collect();

    let mut records: Vec<Option<QueryRecord>> = vec![None; points.len()];
    let mut pending = Vec::new();
    for (i, (id, p)) in points.iter().enumerate() {
        match previous.get(id.as_str()) {
            Some(r) => records[i] = Some((*r).clone()),
            None => pending.push((i, id.as_str(), *p)),
        }
    }
    let reused = points.len() - pending.len();

    let fetcher = Fetcher {
        config,
        transport,
        clock,
        bucket: TokenBucket::new(config.rate_per_s),
    };
    let probe_len = pending.len().min(PROBE_SIZE);
    let probe = fetcher.run(&pending[..probe_len], on_record)?;
    let denied = probe.iter().filter(|(_, r)| r.status == QueryStatus::RequestDenied).count();
    if denied * 2 > probe_len {
        return Err(FetchError::Denied {
            denied,
            probed: probe_len,
        });
    }
    let rest = fetcher.run(&pending[probe_len..], on_record)?;
    for (i, r) in probe.into_iter().chain(rest) {
        records[i] = Some(r);
    }
    Ok(FetchOutcome {
        records: records.into_iter().map(|r| r.expect("every point has a record")).collect(),
        fetched: pending.len(),
        reused,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;

    /// Scripted transport: answers by metadata status per latitude sign and
    /// fails the first `fail_first` calls with 503.
    struct Scripted {
        calls: AtomicUsize,
        fail_first: usize,
        metadata_status: &'static str,
        no_connection: bool,
    }

    impl Scripted {
        fn new(metadata_status: &'static str) -> Self {
            Self {
                calls: AtomicUsize::new(0),
                fail_first: 0,
                metadata_status,
                no_connection: false,
            }
        }
    }

    impl Transport for Scripted {
        fn get(&self, url: &str) -> Result<HttpResponse, TransportFailure> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if self.no_connection {
                return Err(TransportFailure("connection refused".into()));
            }
            if n < self.fail_first {
                return Ok(HttpResponse {
                    status: 503,
                    body: vec![],
                });
            }
            let body = if url.contains("/metadata?") {
                format!(r#"{{"status":"{}","pano_id":"pano","date":"2015-07"}}"#, self.metadata_status).into_bytes()
            } else {
                b"\xFF\xD8\xFF\xD9".to_vec()
            };
            Ok(HttpResponse { status: 200, body })
        }
    }

    fn config() -> ClientConfig {
        ClientConfig {
            api_key: "K".into(),
            rate_per_s: 0.0,
            backoff_ms: 1,
            ..ClientConfig::default()
        }
    }

    fn points(n: usize) -> Vec<(String, GeoPoint)> {
        (0..n)
            .map(|i| (format!("{i}#0"), GeoPoint::new(i as f64 / 100.0, 1.0).unwrap()))
            .collect()
    }

    fn fetch(points: &[(String, GeoPoint)], config: &ClientConfig, t: &dyn Transport) -> Result<FetchOutcome, FetchError> {
        fetch_all(points, config, t, &[], &FixedClock("2020-01-01T00:00:00Z".into()), &|_| {})
    }

    #[test]
    fn metadata_statuses() {
        let ok = |s: &str| HttpResponse {
            status: 200,
            body: format!(r#"{{"status":"{s}","date":"2014-11","pano_id":"x"}}"#).into_bytes(),
        };
        assert_eq!(
            parse_metadata(&ok("OK")),
            MetadataReply::Final {
                status: QueryStatus::Ok,
                pano_id: Some("x".into()),
                capture_date: Some(YearMonth { year: 2014, month: 11 }),
            }
        );
        let status_of = |r: MetadataReply| match r {
            MetadataReply::Final { status, .. } => Some(status),
            MetadataReply::Transient(_) => None,
        };
        assert_eq!(status_of(parse_metadata(&ok("ZERO_RESULTS"))), Some(QueryStatus::ZeroResults));
        assert_eq!(status_of(parse_metadata(&ok("NOT_FOUND"))), Some(QueryStatus::ZeroResults));
        assert_eq!(status_of(parse_metadata(&ok("REQUEST_DENIED"))), Some(QueryStatus::RequestDenied));
        assert_eq!(status_of(parse_metadata(&ok("INVALID_REQUEST"))), Some(QueryStatus::TransportError(400)));
        assert_eq!(parse_metadata(&ok("OVER_QUERY_LIMIT")), MetadataReply::Transient(429));
        let err = HttpResponse { status: 502, body: vec![] };
        assert_eq!(parse_metadata(&err), MetadataReply::Transient(502));
        let forbidden = HttpResponse { status: 403, body: vec![] };
        assert_eq!(status_of(parse_metadata(&forbidden)), Some(QueryStatus::TransportError(403)));
    }

    #[test]
    fn all_ok_saves_images() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ClientConfig {
            out_dir: Some(dir.path().to_path_buf()),
            ..config()
        };
        let out = fetch(&points(5), &cfg, &Scripted::new("OK")).unwrap();
        assert_eq!(out.records.len(), 5);
        for (i, r) in out.records.iter().enumerate() {
            assert_eq!(r.segment_id, format!("{i}#0"));
            assert_eq!(r.status, QueryStatus::Ok);
            assert!(r.is_consistent());
            let path = dir.path().join(r.image_path.as_ref().unwrap());
            assert_eq!(std::fs::read(path).unwrap(), b"\xFF\xD8\xFF\xD9");
        }
    }

    #[test]
    fn retries_then_succeeds() {
        let t = Scripted {
            fail_first: 2,
            ..Scripted::new("OK")
        };
        let cfg = ClientConfig {
            max_concurrency: 1,
            ..config()
        };
        let out = fetch(&points(1), &cfg, &t).unwrap();
        assert_eq!(out.records[0].status, QueryStatus::Ok);
        assert_eq!(t.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn retries_exhausted() {
        let t = Scripted {
            fail_first: 100,
            ..Scripted::new("OK")
        };
        let cfg = ClientConfig { retries: 2, ..config() };
        let out = fetch(&points(1), &cfg, &t).unwrap();
        assert_eq!(out.records[0].status, QueryStatus::TransportError(503));
        assert_eq!(t.calls.load(Ordering::SeqCst), 3);

        let t = Scripted {
            no_connection: true,
            ..Scripted::new("OK")
        };
        let out = fetch(&points(1), &cfg, &t).unwrap();
        assert_eq!(out.records[0].status, QueryStatus::TransportError(0));
    }

    #[test]
    fn denied_probe_aborts() {
        let t = Scripted::new("REQUEST_DENIED");
        match fetch(&points(50), &config(), &t) {
            Err(FetchError::Denied { denied: 20, probed: 20 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(t.calls.load(Ordering::SeqCst), 20);
    }

    #[test]
    fn existing_records_are_reused() {
        let pts = points(6);
        let first = fetch(&pts[..3], &config(), &Scripted::new("ZERO_RESULTS")).unwrap();
        let t = Scripted::new("ZERO_RESULTS");
        let clock = FixedClock("2020-01-01T00:00:00Z".into());
        let resumed = fetch_all(&pts, &config(), &t, &first.records, &clock, &|_| {}).unwrap();
        assert_eq!(resumed.reused, 3);
        assert_eq!(resumed.fetched, 3);
        assert_eq!(t.calls.load(Ordering::SeqCst), 3);
        let full = fetch(&pts, &config(), &Scripted::new("ZERO_RESULTS")).unwrap();
        assert_eq!(resumed.records, full.records);
    }

    #[test]
    fn empty_key_and_zero_concurrency() {
        let cfg = ClientConfig {
            api_key: String::new(),
            ..config()
        };
        assert!(matches!(fetch(&points(1), &cfg, &Scripted::new("OK")), Err(FetchError::Request(RequestError::EmptyKey))));
        let cfg = ClientConfig {
            max_concurrency: 0,
            ..config()
        };
        assert!(matches!(fetch(&points(1), &cfg, &Scripted::new("OK")), Err(FetchError::Concurrency)));
    }

    #[test]
    fn token_bucket_spaces_requests() {
        let bucket = TokenBucket::new(100.0);
        let start = Instant::now();
        for _ in 0..11 {
            bucket.acquire();
        }
        // first token is free, the next ten arrive 10 ms apart
        assert!(start.elapsed() >= Duration::from_millis(95));
    }
}
