//! A local stand-in for the imagery API, for tests and offline demos.
//!
//! The fixture is a JSON object mapping `"lat,lon"` (7 decimals, as sent in
//! requests) to the metadata body to return:
//!
//! ```json
//! {"13.7500000,100.5000000": {"status": "OK", "pano_id": "p1", "date": "2015-03"}}
//! ```
//!
//! Locations not in the map answer `ZERO_RESULTS`. The map may instead be
//! wrapped as `{"responses": {...}, "fail_first": 2}`, in which case the first
//! `fail_first` requests receive HTTP 503. Image requests succeed with a
//! small JPEG for locations whose metadata status is `OK` and 404 otherwise.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use serde_json::Value;

/// Smallest well-formed JPEG (SOI, APP0 stub, EOI) served for every image.
pub const MOCK_JPEG: &[u8] = b"\xFF\xD8\xFF\xE0\x00\x10JFIF\x00\x01\x01\x00\x00\x01\x00\x01\x00\x00\xFF\xD9";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MockFixture {
    pub responses: BTreeMap<String, Value>,
    pub fail_first: usize,
}

impl MockFixture {
    pub fn from_json(input: &[u8]) -> Result<Self, String> {
        let doc: Value = serde_json::from_slice(input).map_err(|e| e.to_string())?;
        let obj = doc.as_object().ok_or("mock fixture must be a JSON object")?;
        let (map, fail_first) = match obj.get("responses") {
            Some(r) => (
                r.as_object().ok_or("`responses` must be an object")?,
                obj.get("fail_first").and_then(Value::as_u64).unwrap_or(0) as usize,
            ),
            None => (obj, 0),
        };
        Ok(Self {
            responses: map.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
            fail_first,
        })
    }

    /// Registers a canned `OK` response for a location key.
    pub fn ok(&mut self, location: String, pano_id: &str, date: &str) {
        self.responses.insert(
            location,
            serde_json::json!({"status": "OK", "pano_id": pano_id, "date": date}),
        );
    }

    pub fn to_json(&self) -> String {
        let responses: serde_json::Map<String, Value> =
            self.responses.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let doc = if self.fail_first > 0 {
            serde_json::json!({"responses": responses, "fail_first": self.fail_first})
        } else {
            Value::Object(responses)
        };
        serde_json::to_string_pretty(&doc).expect("fixture serializes")
    }
}

pub fn location_key(lat: f64, lon: f64) -> String {
    format!("{lat:.7},{lon:.7}")
}

pub struct MockServer {
    addr: SocketAddr,
    requests: Arc<AtomicUsize>,
    stop: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Binds to an ephemeral localhost port and serves until dropped.
    pub fn start(fixture: MockFixture) -> std::io::Result<Self> {
        Self::bind("127.0.0.1:0", fixture)
    }

    pub fn bind(addr: &str, fixture: MockFixture) -> std::io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        let requests = Arc::new(AtomicUsize::new(0));
        let stop = Arc::new(AtomicBool::new(false));
        let fixture = Arc::new(fixture);
        let accept = {
            let (requests, stop) = (requests.clone(), stop.clone());
            std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    let (requests, fixture) = (requests.clone(), fixture.clone());
                    std::thread::spawn(move || {
                        let _ = serve(stream, &fixture, &requests);
                    });
                }
            })
        };
        Ok(Self {
            addr,
            requests,
            stop,
            accept: Some(accept),
        })
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Requests received so far, including failed ones.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    /// Blocks the calling thread for the lifetime of the server.
    pub fn wait(mut self) {
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the accept loop
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

fn query_param<'a>(query: &'a str, name: &str) -> Option<&'a str> {
    query.split('&').find_map(|kv| kv.strip_prefix(name)?.strip_prefix('='))
}

fn respond(stream: &mut TcpStream, status: &str, content_type: &str, body: &[u8]) -> std::io::Result<()> {
    write!(
        stream,
        "HTTP/1.1 {status}\r\nContent-Type: {content_type}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    )?;
    stream.write_all(body)?;
    stream.flush()
}

fn serve(mut stream: TcpStream, fixture: &MockFixture, requests: &AtomicUsize) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    loop {
        let mut header = String::new();
        if reader.read_line(&mut header)? == 0 || header == "\r\n" || header == "\n" {
            break;
        }
    }
    let target = request_line.split_whitespace().nth(1).unwrap_or("/");
    if request_line.is_empty() {
        return Ok(());
    }
    let n = requests.fetch_add(1, Ordering::SeqCst);
    if n < fixture.fail_first {
        return respond(&mut stream, "503 Service Unavailable", "text/plain", b"try again");
    }
    let (path, query) = target.split_once('?').unwrap_or((target, ""));
    let location = query_param(query, "location").unwrap_or("");
    let metadata = fixture
        .responses
        .get(location)
        .cloned()
        .unwrap_or_else(|| serde_json::json!({"status": "ZERO_RESULTS"}));
    let has_key = query_param(query, "key").is_some_and(|k| !k.is_empty());
    match path {
        "/maps/api/streetview/metadata" => {
            let body = if has_key {
                metadata
            } else {
                serde_json::json!({"status": "REQUEST_DENIED"})
            };
            respond(&mut stream, "200 OK", "application/json", body.to_string().as_bytes())
        }
        "/maps/api/streetview" if has_key && metadata["status"] == "OK" => {
            respond(&mut stream, "200 OK", "image/jpeg", MOCK_JPEG)
        }
        _ => respond(&mut stream, "404 Not Found", "text/plain", b"not found"),
    }
}
