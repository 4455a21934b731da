use std::collections::HashMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::parse_dataset;
use crate::error::{Error, Result};
use crate::numberfield::FieldDescriptor;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
    pub etag: Option<String>,
}

pub trait Transport {
    /// Plain GET. Transport failures are `Error::Network`; HTTP status codes
    /// are returned in the response.
    fn get(&self, url: &str) -> Result<HttpResponse>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl Default for UreqTransport {
    fn default() -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(std::time::Duration::from_secs(30)))
            .build();
        UreqTransport { agent: config.into() }
    }
}

impl Transport for UreqTransport {
    fn get(&self, url: &str) -> Result<HttpResponse> {
        let network = |e: &dyn std::fmt::Display| Error::Network { message: e.to_string(), cached_fallback: false };
        let mut response = self.agent.get(url).call().map_err(|e| network(&e))?;
        let status = response.status().as_u16();
        let etag = response
            .headers()
            .get("etag")
            .and_then(|v| v.to_str().ok())
            .map(str::to_string);
        let mut body = Vec::new();
        response
            .body_mut()
            .as_reader()
            .read_to_end(&mut body)
            .map_err(|e| network(&e))?;
        Ok(HttpResponse { status, body, etag })
    }
}

/// Fake transport serving canned responses and recording every request.
#[derive(Default)]
pub struct RecordingTransport {
    responses: HashMap<String, HttpResponse>,
    calls: Mutex<Vec<String>>,
}

impl RecordingTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn respond(&mut self, url: &str, response: HttpResponse) {
        self.responses.insert(url.to_string(), response);
    }

    pub fn calls(&self) -> Vec<String> {
        self.calls.lock().expect("recorder lock").clone()
    }
}

impl Transport for RecordingTransport {
    fn get(&self, url: &str) -> Result<HttpResponse> {
        self.calls.lock().expect("recorder lock").push(url.to_string());
        self.responses.get(url).cloned().ok_or_else(|| Error::Network {
            message: format!("no route to {url}"),
            cached_fallback: false,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemoteQuery {
    pub field: String,
    pub level: String,
    pub t_min: f64,
    pub t_max: f64,
}

impl RemoteQuery {
    pub fn url(&self, base_url: &str) -> String {
        let encode = |s: &str| -> String {
            s.bytes()
                .map(|b| match b {
                    b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'.' | b'_' | b'~' => (b as char).to_string(),
                    _ => format!("%{b:02X}"),
                })
                .collect()
        };
        format!(
            "{}?field={}&level={}&t_min={}&t_max={}",
            base_url.trim_end_matches('?'),
            encode(&self.field),
            encode(&self.level),
            self.t_min,
            self.t_max
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct FetchOptions {
    pub network_allowed: bool,
    /// Ask the server again even when the query is cached.
    pub refresh: bool,
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    url: String,
    etag: Option<String>,
    content: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn atomic_write(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, &target)?;
    Ok(target)
}

fn cached(cache_dir: &Path, index: &Path) -> Option<(CacheEntry, PathBuf)> {
    let entry: CacheEntry = serde_json::from_str(&fs::read_to_string(index).ok()?).ok()?;
    let path = cache_dir.join(format!("{}.json", entry.content));
    path.is_file().then_some((entry, path))
}

/// Fetches a dataset into `cache_dir`. Payloads are stored under their
/// SHA-256 and indexed by the hash of the request URL; a cached query is
/// served without touching the transport unless a refresh is requested.
pub fn fetch_remote(
    transport: &dyn Transport,
    base_url: &str,
    query: &RemoteQuery,
    cache_dir: &Path,
    options: &FetchOptions,
) -> Result<PathBuf> {
    let url = query.url(base_url);
    let index = cache_dir.join(format!("query-{}.idx", sha256_hex(url.as_bytes())));
    let hit = cached(cache_dir, &index);
    if let Some((_, path)) = &hit {
        if !options.refresh {
            return Ok(path.clone());
        }
    }
    if !options.network_allowed {
        return Err(Error::Config(format!(
            "{url} is not cached and network access is disabled"
        )));
    }
    let response = match transport.get(&url) {
        Ok(r) => r,
        Err(Error::Network { message, .. }) => {
            return Err(Error::Network { message, cached_fallback: hit.is_some() })
        }
        Err(e) => return Err(e),
    };
    match response.status {
        200..=299 => {}
        404 => return Err(Error::NotFound(url)),
        s => {
            return Err(Error::Network {
                message: format!("{url}: HTTP status {s}"),
                cached_fallback: hit.is_some(),
            })
        }
    }
    if let (Some((entry, path)), Some(etag)) = (&hit, &response.etag) {
        if entry.etag.as_deref() == Some(etag.as_str()) {
            return Ok(path.clone());
        }
    }
    let text = std::str::from_utf8(&response.body)
        .map_err(|e| Error::Parse(format!("{url}: payload is not UTF-8: {e}")))?;
    let field = FieldDescriptor::parse(&query.field)?;
    parse_dataset(text, &field, &url)?;
    fs::create_dir_all(cache_dir)?;
    let content = sha256_hex(&response.body);
    let path = atomic_write(cache_dir, &format!("{content}.json"), &response.body)?;
    let entry = CacheEntry { url, etag: response.etag, content };
    let index_name = index.file_name().and_then(|n| n.to_str()).expect("index name is ASCII");
    atomic_write(
        cache_dir,
        index_name,
        serde_json::to_string(&entry).expect("cache entry serializes").as_bytes(),
    )?;
    Ok(path)
}
