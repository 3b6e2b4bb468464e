//! Latent-space sketch exploration: interaction model, procedural decoder,
//! corpus preparation, descriptors, t-SNE, grid assignment and sample storage.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the bottom of this file name the common instantiations.

pub mod dataset;
pub mod decoder;
pub mod error;
pub mod features;
pub mod grid;
pub mod lap;
pub mod latent;
pub mod raster;
pub mod scalar;
pub mod store;
pub mod trace;
pub mod tsne;

pub use dataset::{mirror_augment, normalize_image, synth_corpus, synth_latents, CorpusDir};
pub use decoder::{decode, decode_intensity, mirror_latent, QuadPrimitive, IMAGE_SIZE};
pub use error::{Error, Result};
pub use features::{
    compute_descriptor, FeatureSource, FeatureTable, FeatureVector, DESCRIPTOR_DIMS,
};
pub use grid::{gridify, gridify_points, render_montage, GridAssignment};
pub use lap::{solve_lap, CostMatrix, LapSolution};
pub use latent::{
    CursorEvent, InteractionConfig, LatentVector, Point, TickRingState, LATENT_DIMS, V_MAX,
};
pub use raster::SketchImage;
pub use scalar::Scalar;
pub use store::{SavedSample, SessionStore};
pub use trace::{InteractionTrace, TraceHeader};
pub use tsne::{calibrate_affinities, tsne_embed, AffinityMatrix, Embedding2D, TsneOptions};

pub type LatentF64 = LatentVector<f64>;
pub type LatentF32 = LatentVector<f32>;
pub type TickRingF64 = TickRingState<f64>;
pub type TickRingF32 = TickRingState<f32>;
pub type ConfigF64 = InteractionConfig<f64>;
pub type TraceF64 = InteractionTrace<f64>;
pub type FeatureVectorF64 = FeatureVector<f64>;
pub type FeatureTableF64 = FeatureTable<f64>;
pub type AffinitiesF64 = AffinityMatrix<f64>;
pub type EmbeddingF64 = Embedding2D<f64>;
pub type EmbeddingF32 = Embedding2D<f32>;
pub type GridAssignmentF64 = GridAssignment<f64>;
pub type CostMatrixF64 = CostMatrix<f64>;
pub type SessionStoreF64 = SessionStore<f64>;
