use roadsense_core::GeoPoint;
use url::form_urlencoded::byte_serialize;

pub const DEFAULT_BASE_URL: &str = "https://maps.googleapis.com";

/// Largest image edge the static imagery API serves.
pub const MAX_IMAGE_EDGE: u32 = 640;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RequestError {
    #[error("API key is empty; set STREETVIEW_API_KEY or `api_key` in the config")]
    EmptyKey,
    #[error("image size {width}x{height} outside 1..={MAX_IMAGE_EDGE} per edge")]
    SizeOutOfRange { width: u32, height: u32 },
    #[error("invalid base URL `{0}`")]
    BaseUrl(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImageSize {
    pub width: u32,
    pub height: u32,
}

impl Default for ImageSize {
    fn default() -> Self {
        Self {
            width: MAX_IMAGE_EDGE,
            height: MAX_IMAGE_EDGE,
        }
    }
}

fn base(base_url: &str) -> Result<&str, RequestError> {
    let trimmed = base_url.trim_end_matches('/');
    match url::Url::parse(trimmed) {
        Ok(u) if matches!(u.scheme(), "http" | "https") => Ok(trimmed),
        _ => Err(RequestError::BaseUrl(base_url.to_string())),
    }
}

fn query(p: GeoPoint, api_key: &str) -> Result<String, RequestError> {
    if api_key.is_empty() {
        return Err(RequestError::EmptyKey);
    }
    let key: String = byte_serialize(api_key.as_bytes()).collect();
    Ok(format!("location={:.7},{:.7}&key={key}", p.lat(), p.lon()))
}

pub fn build_metadata_request(base_url: &str, p: GeoPoint, api_key: &str) -> Result<String, RequestError> {
    Ok(format!("{}/maps/api/streetview/metadata?{}", base(base_url)?, query(p, api_key)?))
}

pub fn build_image_request(base_url: &str, p: GeoPoint, api_key: &str, size: ImageSize) -> Result<String, RequestError> {
    let edge = 1..=MAX_IMAGE_EDGE;
    if !edge.contains(&size.width) || !edge.contains(&size.height) {
        return Err(RequestError::SizeOutOfRange {
            width: size.width,
            height: size.height,
        });
    }
    Ok(format!(
        "{}/maps/api/streetview?size={}x{}&{}",
        base(base_url)?,
        size.width,
        size.height,
        query(p, api_key)?
    ))
}

/// Replaces the `key` query value so URLs can be logged.
pub fn redact_key(url: &str) -> String {
    match url.find("key=") {
        Some(i) => {
            let end = url[i..].find('&').map_or(url.len(), |j| i + j);
            format!("{}key=REDACTED{}", &url[..i], &url[end..])
        }
        None => url.to_string(),
    }
}
