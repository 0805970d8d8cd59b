//! Cross-lingual word vectors: text-format embedding tables, supervised
//! orthogonal alignment, and per-pair embedding features.

mod embeddings;
mod features;
mod procrustes;
pub mod svd;

pub use embeddings::{
    avg_context_vector, load_embeddings, lookup, parse_embeddings, save_embeddings, write_embeddings, EmbeddingTable,
};
pub use features::{pair_feature_vector, PairFeatureVector};
pub use procrustes::{
    apply_mapping, dictionary_matrices, load_dictionary, parse_dictionary, preprocess_rows, procrustes_align,
    AlignOptions, OrthogonalMap,
};
