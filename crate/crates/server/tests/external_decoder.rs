use std::time::Duration;

use axum::http::{header, HeaderMap, HeaderValue};
use axum::response::IntoResponse;
use axum::routing::post;
use axum::Router;
use formforge_core::decoder::decode;
use formforge_core::{LatentVector, SketchImage};
use formforge_server::{bind, serve, DecoderError, ExternalDecoder, ServerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

async fn spawn_router(app: Router) -> String {
    let (listener, addr) = bind("127.0.0.1", 0).await.unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await });
    format!("http://{addr}")
}

fn png_response(png: Vec<u8>, seq: &str) -> axum::response::Response {
    let mut headers = HeaderMap::new();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("image/png"));
    headers.insert("x-seq", HeaderValue::from_str(seq).unwrap());
    (headers, png).into_response()
}

fn random_latent(seed: u64) -> LatentVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    LatentVector::new((0..512).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap()
}

#[tokio::test]
async fn loopback_procedural_sidecar_is_byte_identical() {
    let store = tempfile::tempdir().unwrap();
    let (listener, addr) = bind("127.0.0.1", 0).await.unwrap();
    tokio::spawn(serve(listener, ServerConfig::new(store.path())));
    let client = ExternalDecoder::new(&format!("http://{addr}"), Duration::from_secs(5)).unwrap();
    assert!(client.endpoint().ends_with("/generate"));
    for seed in 0..5 {
        let z = random_latent(seed);
        let img = client.decode(&z, seed).await.unwrap();
        assert_eq!(img, decode(&z));
        assert_eq!(img.to_png(), decode(&z).to_png());
    }
    let zero = client.decode(&LatentVector::zeros(), 0).await.unwrap();
    assert_eq!(zero, decode(&LatentVector::<f64>::zeros()));
}

#[tokio::test]
async fn unreachable_endpoint_is_unavailable() {
    // Bind then drop to obtain a port nobody listens on.
    let (listener, addr) = bind("127.0.0.1", 0).await.unwrap();
    drop(listener);
    let client = ExternalDecoder::new(&format!("http://{addr}"), Duration::from_secs(2)).unwrap();
    let err = client.decode(&LatentVector::zeros(), 1).await.unwrap_err();
    assert!(matches!(err, DecoderError::Unavailable(_)), "{err}");
    assert!(err.to_string().starts_with("decoder unavailable"));
}

#[tokio::test]
async fn slow_decoder_times_out_as_unavailable() {
    let app = Router::new().route(
        "/generate",
        post(|| async {
            tokio::time::sleep(Duration::from_secs(5)).await;
            png_response(decode(&LatentVector::<f64>::zeros()).to_png(), "1")
        }),
    );
    let base = spawn_router(app).await;
    let client = ExternalDecoder::new(&base, Duration::from_millis(200)).unwrap();
    let err = client.decode(&LatentVector::zeros(), 1).await.unwrap_err();
    assert!(matches!(err, DecoderError::Unavailable(_)), "{err}");
}

#[tokio::test]
async fn malformed_responses_are_protocol_violations() {
    let wrong_size = SketchImage::black(511, 511).to_png();
    let good = decode(&LatentVector::<f64>::zeros()).to_png();
    let mut rgb = Vec::new();
    image::DynamicImage::new_rgb8(512, 512)
        .write_to(&mut std::io::Cursor::new(&mut rgb), image::ImageFormat::Png)
        .unwrap();
    let cases: Vec<(&str, Router)> = vec![
        ("511x511 image", {
            let png = wrong_size.clone();
            Router::new().route(
                "/generate",
                post(move || async move { png_response(png, "1") }),
            )
        }),
        ("seq not echoed", {
            let png = good.clone();
            Router::new().route(
                "/generate",
                post(move || async move { png_response(png, "2") }),
            )
        }),
        (
            "not a png",
            Router::new().route(
                "/generate",
                post(|| async { png_response(b"hello".to_vec(), "1") }),
            ),
        ),
        (
            "wrong media type",
            Router::new().route("/generate", post(|| async { "plain text" })),
        ),
        ("colour image", {
            let png = rgb.clone();
            Router::new().route(
                "/generate",
                post(move || async move { png_response(png, "1") }),
            )
        }),
        (
            "server error",
            Router::new().route(
                "/generate",
                post(|| async { axum::http::StatusCode::INTERNAL_SERVER_ERROR }),
            ),
        ),
    ];
    for (label, app) in cases {
        let base = spawn_router(app).await;
        let client = ExternalDecoder::new(&base, Duration::from_secs(2)).unwrap();
        let err = client.decode(&LatentVector::zeros(), 1).await.unwrap_err();
        assert!(
            matches!(err, DecoderError::ProtocolViolation(_)),
            "{label}: {err}"
        );
        assert!(err.to_string().starts_with("protocol violation"), "{label}");
    }
}

#[tokio::test]
async fn overload_and_rejection_status_codes() {
    let app = Router::new()
        .route(
            "/busy/generate",
            post(|| async { axum::http::StatusCode::SERVICE_UNAVAILABLE }),
        )
        .route(
            "/strict/generate",
            post(|| async {
                (
                    axum::http::StatusCode::BAD_REQUEST,
                    "expected 512 latent variables",
                )
            }),
        );
    let base = spawn_router(app).await;
    let busy = ExternalDecoder::new(&format!("{base}/busy"), Duration::from_secs(2)).unwrap();
    assert!(matches!(
        busy.decode(&LatentVector::zeros(), 0).await,
        Err(DecoderError::Unavailable(_))
    ));
    let strict =
        ExternalDecoder::new(&format!("{base}/strict/generate"), Duration::from_secs(2)).unwrap();
    assert!(matches!(
        strict.decode(&LatentVector::zeros(), 0).await,
        Err(DecoderError::Rejected(_))
    ));
}

#[tokio::test]
async fn sends_wire_protocol_body() {
    let app = Router::new().route(
        "/generate",
        post(|body: axum::body::Bytes| async move {
            let v: serde_json::Value = serde_json::from_slice(&body).unwrap();
            let latent = v["latent"].as_array().unwrap();
            assert_eq!(latent.len(), 512);
            let seq = v["seq"].as_u64().unwrap().to_string();
            let values: Vec<f64> = latent.iter().map(|x| x.as_f64().unwrap()).collect();
            png_response(decode(&LatentVector::new(values).unwrap()).to_png(), &seq)
        }),
    );
    let base = spawn_router(app).await;
    let client = ExternalDecoder::new(&base, Duration::from_secs(5)).unwrap();
    let z = random_latent(3);
    assert_eq!(client.decode(&z, 123).await.unwrap(), decode(&z));
}
