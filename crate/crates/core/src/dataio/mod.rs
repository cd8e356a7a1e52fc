//! Image codecs, manifests, landmark alignment and the synthetic generator.

mod align;
mod image;
mod manifest;
mod netpbm;
mod synth;

pub use align::{
    solve_affine, warp_affine, Affine, AlignmentTemplate, Landmarks5, Point, FRONTAL_112,
};
pub use image::{
    normalize, quantize, read_raw_tensor, resize_bilinear, write_raw_tensor, RAW_TENSOR_MAGIC,
};
pub use manifest::{
    decode_image, default_class_names, load_dataset, load_manifest, Dataset, DatasetManifest,
    ManifestRecord, EXPRESSIONS,
};
pub use netpbm::{decode_pnm, encode_pnm, write_pnm, PnmImage};
pub use synth::{
    apportion, generate_synthetic, SynthConfig, SynthDataset, SynthSample, RAF_SUPPORTS,
    TRAIN_EVAL_RATIO,
};
