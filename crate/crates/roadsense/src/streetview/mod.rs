//! Street-level imagery availability queries.

mod client;
pub mod mock;
mod requests;

pub use client::{
    fetch_all, parse_metadata, ClientConfig, Clock, FetchError, FetchOutcome, FixedClock, HttpResponse, MetadataReply,
    SystemClock, Transport, TransportFailure, UreqTransport, PROBE_SIZE,
};
pub use requests::{
    build_image_request, build_metadata_request, redact_key, ImageSize, RequestError, DEFAULT_BASE_URL,
};
