//! Client for decoders served over HTTP.
//!
//! Request: `POST <endpoint>` with `{"latent": [512 numbers], "seq": n}`.
//! Response: `200`, `image/png` body holding a 512x512 8-bit grayscale image,
//! and an `X-Seq` header equal to the request's `seq`.

use std::sync::Arc;
use std::time::Duration;

use formforge_core::decoder::IMAGE_SIZE;
use formforge_core::{LatentVector, SketchImage};
use reqwest::StatusCode;
use tokio::sync::Semaphore;

pub const DEFAULT_IN_FLIGHT: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum DecoderError {
    #[error("decoder unavailable: {0}")]
    Unavailable(String),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("decoder rejected latent: {0}")]
    Rejected(String),
}

#[derive(Clone, Debug)]
pub struct ExternalDecoder {
    client: reqwest::Client,
    endpoint: String,
    timeout: Duration,
    permits: Arc<Semaphore>,
}

impl ExternalDecoder {
    /// `endpoint` is a base URL (`/generate` is appended) or the full
    /// `.../generate` URL.
    pub fn new(endpoint: &str, timeout: Duration) -> Result<Self, DecoderError> {
        let endpoint = endpoint.trim_end_matches('/');
        let endpoint = if endpoint.ends_with("/generate") {
            endpoint.to_string()
        } else {
            format!("{endpoint}/generate")
        };
        reqwest::Url::parse(&endpoint)
            .map_err(|e| DecoderError::Unavailable(format!("bad endpoint {endpoint:?}: {e}")))?;
        let client = reqwest::Client::builder()
            .build()
            .map_err(|e| DecoderError::Unavailable(e.to_string()))?;
        Ok(ExternalDecoder {
            client,
            endpoint,
            timeout,
            permits: Arc::new(Semaphore::new(DEFAULT_IN_FLIGHT)),
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub async fn decode(
        &self,
        z: &LatentVector<f64>,
        seq: u64,
    ) -> Result<SketchImage, DecoderError> {
        let _permit = self
            .permits
            .acquire()
            .await
            .map_err(|_| DecoderError::Unavailable("client closed".into()))?;
        let body = serde_json::json!({ "latent": z.as_slice(), "seq": seq });
        let request = self
            .client
            .post(&self.endpoint)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body.to_string())
            .send();
        let response = tokio::time::timeout(self.timeout, request)
            .await
            .map_err(|_| DecoderError::Unavailable("timed out".into()))?
            .map_err(|e| DecoderError::Unavailable(e.to_string()))?;

        let status = response.status();
        match status {
            StatusCode::OK => {}
            StatusCode::BAD_REQUEST => {
                let text = response.text().await.unwrap_or_default();
                return Err(DecoderError::Rejected(text));
            }
            StatusCode::SERVICE_UNAVAILABLE => {
                return Err(DecoderError::Unavailable("decoder overloaded".into()));
            }
            other => {
                return Err(DecoderError::ProtocolViolation(format!(
                    "unexpected status {other}"
                )));
            }
        }
        let content_type = response
            .headers()
            .get(reqwest::header::CONTENT_TYPE)
            .and_then(|v| v.to_str().ok())
            .unwrap_or("");
        if !content_type.starts_with("image/png") {
            return Err(DecoderError::ProtocolViolation(format!(
                "content type {content_type:?}"
            )));
        }
        let echoed = response
            .headers()
            .get("x-seq")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok());
        if echoed != Some(seq) {
            return Err(DecoderError::ProtocolViolation(format!(
                "X-Seq {echoed:?} does not echo {seq}"
            )));
        }
        let bytes = tokio::time::timeout(self.timeout, response.bytes())
            .await
            .map_err(|_| DecoderError::Unavailable("timed out".into()))?
            .map_err(|e| DecoderError::Unavailable(e.to_string()))?;
        parse_png(&bytes)
    }
}

/// Accepts only a 512x512 single-channel 8-bit PNG.
pub fn parse_png(bytes: &[u8]) -> Result<SketchImage, DecoderError> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| DecoderError::ProtocolViolation(format!("body is not a PNG: {e}")))?;
    let image::DynamicImage::ImageLuma8(gray) = img else {
        return Err(DecoderError::ProtocolViolation(format!(
            "expected 8-bit grayscale, got {:?}",
            img.color()
        )));
    };
    let (w, h) = gray.dimensions();
    if (w as usize, h as usize) != (IMAGE_SIZE, IMAGE_SIZE) {
        return Err(DecoderError::ProtocolViolation(format!(
            "expected {IMAGE_SIZE}x{IMAGE_SIZE} image, got {w}x{h}"
        )));
    }
    SketchImage::from_pixels(w as usize, h as usize, gray.into_raw())
        .map_err(|e| DecoderError::ProtocolViolation(e.to_string()))
}
