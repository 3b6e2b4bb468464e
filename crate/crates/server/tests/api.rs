use std::time::{Duration, Instant};

use formforge_core::decoder::decode;
use formforge_core::{LatentVector, SketchImage};
use formforge_server::{bind, serve, DecoderBackend, ServerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

struct Running {
    base: String,
    _store: tempfile::TempDir,
}

async fn start(configure: impl FnOnce(&mut ServerConfig)) -> Running {
    let store = tempfile::tempdir().unwrap();
    let mut config = ServerConfig::new(store.path());
    configure(&mut config);
    let (listener, addr) = bind("127.0.0.1", 0).await.unwrap();
    tokio::spawn(serve(listener, config));
    Running {
        base: format!("http://{addr}"),
        _store: store,
    }
}

async fn post_json(url: &str, body: String) -> reqwest::Response {
    reqwest::Client::new()
        .post(url)
        .header("content-type", "application/json")
        .body(body)
        .send()
        .await
        .unwrap()
}

fn latent_json(values: &[f64], seq: u64) -> String {
    json!({ "latent": values, "seq": seq }).to_string()
}

#[tokio::test]
async fn zero_latent_returns_decode_of_zero() {
    let s = start(|_| {}).await;
    let resp = post_json(
        &format!("{}/api/generate", s.base),
        latent_json(&[0.0; 512], 17),
    )
    .await;
    assert_eq!(resp.status(), 200);
    assert_eq!(resp.headers()["content-type"], "image/png");
    assert_eq!(resp.headers()["x-seq"], "17");
    let body = resp.bytes().await.unwrap();
    let expected = decode(&LatentVector::<f64>::zeros());
    assert_eq!(body.as_ref(), expected.to_png().as_slice());
    let img = SketchImage::from_png(&body).unwrap();
    assert_eq!((img.width(), img.height()), (512, 512));
    assert_eq!(img, expected);
}

#[tokio::test]
async fn wrong_length_is_rejected() {
    let s = start(|_| {}).await;
    for n in [0usize, 511, 513] {
        let resp = post_json(
            &format!("{}/api/generate", s.base),
            latent_json(&vec![0.0; n], 1),
        )
        .await;
        assert_eq!(resp.status(), 400, "length {n}");
        let body: Value = resp.json().await.unwrap();
        assert!(body["error"]
            .as_str()
            .unwrap()
            .contains("expected 512 latent variables"));
    }
}

#[tokio::test]
async fn non_finite_or_non_numeric_is_rejected() {
    let s = start(|_| {}).await;
    let zeros = vec!["0"; 511].join(",");
    for bad in ["1e999", "\"NaN\"", "null", "\"1.0\"", "[0]"] {
        let body = format!("{{\"latent\":[{zeros},{bad}],\"seq\":1}}");
        let resp = post_json(&format!("{}/api/generate", s.base), body).await;
        assert_eq!(resp.status(), 400, "value {bad}");
    }
    let resp = post_json(&format!("{}/api/generate", s.base), "not json".into()).await;
    assert_eq!(resp.status(), 400);
    let resp = post_json(&format!("{}/api/generate", s.base), r#"{"seq":1}"#.into()).await;
    assert_eq!(resp.status(), 400);
}

#[tokio::test]
async fn out_of_range_values_are_clamped() {
    let s = start(|_| {}).await;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut values: Vec<f64> = (0..512).map(|_| rng.random_range(-3.0..3.0)).collect();
    values[1] = 4.2;
    values[33] = -7.5;
    let resp = post_json(&format!("{}/generate", s.base), latent_json(&values, 2)).await;
    assert_eq!(resp.status(), 200);
    let img = SketchImage::from_png(&resp.bytes().await.unwrap()).unwrap();
    values[1] = 3.0;
    values[33] = -3.0;
    assert_eq!(img, decode(&LatentVector::new(values).unwrap()));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_identical_requests_agree() {
    let s = start(|_| {}).await;
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let values: Vec<f64> = (0..512).map(|_| rng.random_range(-3.0..3.0)).collect();
    let body = latent_json(&values, 5);
    let url = format!("{}/api/generate", s.base);
    let tasks: Vec<_> = (0..32)
        .map(|_| {
            let (url, body) = (url.clone(), body.clone());
            tokio::spawn(async move { post_json(&url, body).await.bytes().await.unwrap() })
        })
        .collect();
    let mut bodies = Vec::new();
    for t in tasks {
        bodies.push(t.await.unwrap());
    }
    assert!(bodies.iter().all(|b| b == &bodies[0]));
    assert_eq!(
        SketchImage::from_png(&bodies[0]).unwrap(),
        decode(&LatentVector::new(values).unwrap())
    );
}

#[tokio::test]
async fn median_latency_is_interactive() {
    let s = start(|_| {}).await;
    let client = reqwest::Client::new();
    let url = format!("{}/api/generate", s.base);
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut times = Vec::new();
    for seq in 0..41 {
        let values: Vec<f64> = (0..512).map(|_| rng.random_range(-3.0..3.0)).collect();
        let start = Instant::now();
        let resp = client
            .post(&url)
            .header("content-type", "application/json")
            .body(latent_json(&values, seq))
            .send()
            .await
            .unwrap();
        assert_eq!(resp.status(), 200);
        resp.bytes().await.unwrap();
        times.push(start.elapsed());
    }
    times.sort();
    let p50 = times[times.len() / 2];
    assert!(p50 < Duration::from_millis(50), "p50 {p50:?}");
}

#[tokio::test]
async fn config_reports_dimensions_and_defaults() {
    let s = start(|_| {}).await;
    let body: Value = reqwest::get(format!("{}/api/config", s.base))
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(
        body,
        json!({"dims":512, "image_size":512, "v_max":3.0,
               "defaults":{"sensitivity":2.0,"decay_rate":0.7,"brush_sigma":1.5}})
    );
}

#[tokio::test]
async fn samples_crud() {
    let s = start(|_| {}).await;
    let client = reqwest::Client::new();
    let url = format!("{}/api/samples", s.base);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut ids = Vec::new();
    let mut latents = Vec::new();
    for _ in 0..3 {
        let values: Vec<f64> = (0..512).map(|_| rng.random_range(-3.0..3.0)).collect();
        let resp = post_json(&url, json!({ "latent": values }).to_string()).await;
        assert_eq!(resp.status(), 201);
        let rec: Value = resp.json().await.unwrap();
        let restored: Vec<f64> = rec["latent"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        assert_eq!(restored, values);
        ids.push(rec["id"].as_str().unwrap().to_string());
        latents.push(values);
    }
    let list: Value = client.get(&url).send().await.unwrap().json().await.unwrap();
    let listed: Vec<&str> = list
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["id"].as_str().unwrap())
        .collect();
    assert_eq!(listed, ids.iter().map(String::as_str).collect::<Vec<_>>());

    let thumb = client
        .get(format!("{url}/{}/thumbnail.png", ids[0]))
        .send()
        .await
        .unwrap();
    assert_eq!(thumb.status(), 200);
    let thumb = SketchImage::from_png(&thumb.bytes().await.unwrap()).unwrap();
    assert_eq!(
        thumb,
        decode(&LatentVector::new(latents[0].clone()).unwrap()).resize_bilinear(128, 128)
    );

    let del = client
        .delete(format!("{url}/{}", ids[1]))
        .send()
        .await
        .unwrap();
    assert_eq!(del.status(), 204);
    let again = client
        .delete(format!("{url}/{}", ids[1]))
        .send()
        .await
        .unwrap();
    assert_eq!(again.status(), 404);
    let one: Value = client
        .get(format!("{url}/{}", ids[2]))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let values: Vec<f64> = one["latent"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(values, latents[2]);
    let list: Value = client.get(&url).send().await.unwrap().json().await.unwrap();
    assert_eq!(list.as_array().unwrap().len(), 2);

    let bad = post_json(&url, json!({ "latent": [0.0, 0.0, 0.0] }).to_string()).await;
    assert_eq!(bad.status(), 400);
}

#[tokio::test]
async fn root_and_atlas() {
    let dir = tempfile::tempdir().unwrap();
    let atlas = dir.path().join("atlas.png");
    SketchImage::black(8, 8).save_png(&atlas).unwrap();
    let ui = dir.path().join("ui");
    std::fs::create_dir(&ui).unwrap();
    std::fs::write(ui.join("index.html"), "<p>ui</p>").unwrap();

    let plain = start(|_| {}).await;
    let page = reqwest::get(format!("{}/", plain.base)).await.unwrap();
    assert_eq!(page.status(), 200);
    assert_eq!(
        reqwest::get(format!("{}/atlas.png", plain.base))
            .await
            .unwrap()
            .status(),
        404
    );

    let (atlas2, ui2) = (atlas.clone(), ui.clone());
    let full = start(move |c| {
        c.atlas = Some(atlas2);
        c.ui_dir = Some(ui2);
    })
    .await;
    let page = reqwest::get(format!("{}/", full.base))
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    assert_eq!(page, "<p>ui</p>");
    let png = reqwest::get(format!("{}/atlas.png", full.base))
        .await
        .unwrap()
        .bytes()
        .await
        .unwrap();
    assert_eq!(
        SketchImage::from_png(&png).unwrap(),
        SketchImage::black(8, 8)
    );
}

#[tokio::test]
async fn external_backend_is_transparent() {
    let sidecar = start(|_| {}).await;
    let url = sidecar.base.clone();
    let front = start(move |c| {
        c.decoder =
            DecoderBackend::parse(&format!("external:{url}"), Duration::from_secs(5)).unwrap();
    })
    .await;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let values: Vec<f64> = (0..512).map(|_| rng.random_range(-3.0..3.0)).collect();
    let resp = post_json(
        &format!("{}/api/generate", front.base),
        latent_json(&values, 9),
    )
    .await;
    assert_eq!(resp.status(), 200);
    assert_eq!(resp.headers()["x-seq"], "9");
    let img = SketchImage::from_png(&resp.bytes().await.unwrap()).unwrap();
    assert_eq!(img, decode(&LatentVector::new(values).unwrap()));
}
