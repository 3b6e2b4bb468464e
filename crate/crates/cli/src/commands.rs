use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use formforge_core::dataset::{normalize_image, synth_latents, CorpusDir};
use formforge_core::features::{compute_descriptor, load_features, write_features, FeatureVector};
use formforge_core::grid::{gridify, render_montage};
use formforge_core::latent::LATENT_DIMS;
use formforge_core::trace::{format_values, parse_values, InteractionTrace};
use formforge_core::tsne::{calibrate_affinities, tsne_embed, TsneOptions};
use formforge_core::{decode, LatentVector, SketchImage};
use formforge_server::{DecoderBackend, ServerConfig, DEFAULT_DECODE_TIMEOUT};

use crate::Command;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Prep {
            input,
            output,
            mirror,
            size,
        } => prep(&input, &output, mirror, size),
        Command::Synth { n, seed, output } => synth(n, seed, &output),
        Command::Features { input, output } => features(&input, &output),
        Command::Atlas {
            features,
            output,
            perplexity,
            iters,
            seed,
            thumb,
            corpus,
            assignment,
        } => atlas(&AtlasArgs {
            features,
            output,
            perplexity,
            iters,
            seed,
            thumb,
            corpus,
            assignment,
        }),
        Command::Generate {
            latent,
            output,
            decoder,
        } => generate(&latent, &output, &decoder),
        Command::Replay { trace, output } => replay(&trace, output.as_deref()),
        Command::Serve {
            port,
            host,
            decoder,
            store,
            ui,
            atlas,
        } => serve(port, &host, &decoder, store, ui, atlas),
    }
}

fn stem(name: &str) -> &str {
    Path::new(name)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(name)
}

/// Streams the corpus so only one image is held at a time. Mirrors are listed
/// after all originals in the manifest.
fn prep(input: &Path, output: &Path, mirror: bool, size: usize) -> Result<()> {
    let corpus = CorpusDir::open(input)?;
    if corpus.files.is_empty() {
        bail!("no PNG images in {}", input.display());
    }
    std::fs::create_dir_all(output).with_context(|| format!("creating {}", output.display()))?;
    let mut originals = Vec::with_capacity(corpus.files.len());
    let mut mirrors = Vec::new();
    for (name, path) in corpus.files.iter().zip(corpus.paths()) {
        let raw = SketchImage::load(&path)?;
        let img = normalize_image(&raw, size)
            .with_context(|| format!("normalizing {}", path.display()))?;
        let base = format!("{}.png", stem(name));
        img.save_png(output.join(&base))?;
        originals.push(base);
        if mirror {
            let flipped = format!("{}_mirror.png", stem(name));
            img.flip_horizontal().save_png(output.join(&flipped))?;
            mirrors.push(flipped);
        }
    }
    let count = originals.len() + mirrors.len();
    originals.extend(mirrors);
    CorpusDir::write_manifest(output, &originals)?;
    eprintln!("prep: wrote {count} images to {}", output.display());
    Ok(())
}

fn synth(n: usize, seed: u64, output: &Path) -> Result<()> {
    if n == 0 {
        bail!("--n must be at least 1");
    }
    std::fs::create_dir_all(output).with_context(|| format!("creating {}", output.display()))?;
    let mut names = Vec::with_capacity(n);
    for (i, z) in synth_latents(n, seed).iter().enumerate() {
        let name = format!("synth_{i:05}.png");
        decode(z).save_png(output.join(&name))?;
        names.push(name);
    }
    CorpusDir::write_manifest(output, &names)?;
    eprintln!("synth: wrote {n} images to {}", output.display());
    Ok(())
}

fn features(input: &Path, output: &Path) -> Result<()> {
    let corpus = CorpusDir::open(input)?;
    if corpus.files.is_empty() {
        bail!("no PNG images in {}", input.display());
    }
    let mut names = Vec::with_capacity(corpus.files.len());
    let mut vectors: Vec<FeatureVector<f64>> = Vec::with_capacity(corpus.files.len());
    for path in corpus.paths() {
        let img = SketchImage::load(&path)?;
        let v =
            compute_descriptor(&img).with_context(|| format!("describing {}", path.display()))?;
        names.push(path.to_string_lossy().into_owned());
        vectors.push(v);
    }
    write_features(output, Some(&names), &vectors)?;
    eprintln!(
        "features: {} vectors -> {}",
        vectors.len(),
        output.display()
    );
    Ok(())
}

struct AtlasArgs {
    features: PathBuf,
    output: PathBuf,
    perplexity: f64,
    iters: usize,
    seed: u64,
    thumb: usize,
    corpus: Option<PathBuf>,
    assignment: Option<PathBuf>,
}

fn atlas(args: &AtlasArgs) -> Result<()> {
    let table = load_features::<f64>(&args.features)?;
    let n = table.len();
    if n == 0 {
        bail!("{} holds no feature rows", args.features.display());
    }
    let image_paths: Vec<PathBuf> = match (&args.corpus, &table.names) {
        (Some(dir), _) => {
            let corpus = CorpusDir::open(dir)?;
            if corpus.files.len() != n {
                bail!(
                    "corpus {} has {} images but the feature file has {n} rows",
                    dir.display(),
                    corpus.files.len()
                );
            }
            corpus.paths().collect()
        }
        (None, Some(names)) => names.iter().map(PathBuf::from).collect(),
        (None, None) => bail!("feature file has no image column; pass --corpus DIR"),
    };

    let started = Instant::now();
    let embedding = if n == 1 {
        formforge_core::Embedding2D {
            coords: vec![[0.0, 0.0]],
            kl_history: Vec::new(),
        }
    } else {
        let limit = (n - 1) as f64;
        let perplexity = if args.perplexity > limit {
            let p = ((n - 1) as f64 / 3.0).max(1.0);
            eprintln!(
                "atlas: perplexity {} too large for {n} points, using {p}",
                args.perplexity
            );
            p
        } else {
            args.perplexity
        };
        let p = calibrate_affinities(&table.vectors, perplexity)?;
        let opts = TsneOptions::default()
            .with_iterations(args.iters)
            .with_seed(args.seed);
        tsne_embed(&p, &opts)
    };
    let t_embed = started.elapsed();
    let grid = gridify(&embedding)?;
    let t_grid = started.elapsed() - t_embed;

    let thumbs = image_paths
        .iter()
        .map(|p| {
            SketchImage::load(p)
                .map(|img| img.resize_bilinear(args.thumb.max(1), args.thumb.max(1)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let montage = render_montage(&thumbs, &grid, args.thumb)?;
    montage.save_png(&args.output)?;
    if let Some(path) = &args.assignment {
        grid.write_csv(path)?;
    }
    eprintln!(
        "atlas: {n} points on a {s}x{s} grid (t-SNE {:.1}s, assignment {:.1}s, cost {:.6}) -> {}",
        t_embed.as_secs_f64(),
        t_grid.as_secs_f64(),
        grid.total_cost,
        args.output.display(),
        s = grid.side,
    );
    Ok(())
}

fn read_latent(path: &Path) -> Result<LatentVector<f64>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let values = parse_values::<f64>(&text)?;
    if values.len() != LATENT_DIMS {
        bail!(
            "expected {LATENT_DIMS} latent values in {}, found {}",
            path.display(),
            values.len()
        );
    }
    Ok(LatentVector::new(values)?)
}

fn generate(latent: &Path, output: &Path, decoder: &str) -> Result<()> {
    let z = read_latent(latent)?;
    let backend = DecoderBackend::parse(decoder, DEFAULT_DECODE_TIMEOUT)?;
    let img = match backend {
        DecoderBackend::Procedural => decode(&z),
        DecoderBackend::External(client) => tokio::runtime::Builder::new_current_thread()
            .enable_all()
            .build()?
            .block_on(client.decode(&z, 0))?,
    };
    img.save_png(output)?;
    Ok(())
}

fn replay(trace: &Path, output: Option<&Path>) -> Result<()> {
    let values = InteractionTrace::<f64>::load(trace)?.replay()?;
    let text = format_values(values.as_slice());
    match output {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn serve(
    port: u16,
    host: &str,
    decoder: &str,
    store: PathBuf,
    ui: Option<PathBuf>,
    atlas: Option<PathBuf>,
) -> Result<()> {
    let mut config = ServerConfig::new(store);
    config.decoder = DecoderBackend::parse(decoder, DEFAULT_DECODE_TIMEOUT)?;
    config.ui_dir = ui;
    config.atlas = atlas;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let (listener, addr) = formforge_server::bind(host, port).await?;
        eprintln!("serving on http://{addr}");
        formforge_server::serve(listener, config).await?;
        Ok(())
    })
}
