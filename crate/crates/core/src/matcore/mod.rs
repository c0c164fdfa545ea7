//! Complex matrix tuples with the normalized-trace geometry, seeded streams
//! and reference samplers (Ginibre, GUE, tensor embeddings).

mod matrix;
mod random;
mod tuple;

pub use matrix::{CMatrix, C64};
pub use random::{
    complex_gaussian_matrix, gue_from_rng, sample_ginibre, sample_gue, sample_unitary,
    standard_gaussian_tuple,
    tensor_embed, Seed, MAX_TENSOR_SIZE,
};
pub use tuple::MatrixTuple;

/// `Σ_j tr_n(X_j^* Y_j)`.
pub fn trace_inner_product(x: &MatrixTuple, y: &MatrixTuple) -> crate::Result<C64> {
    x.trace_inner_product(y)
}

/// Largest singular value over all entries of the tuple.
pub fn operator_norm(x: &MatrixTuple) -> f64 {
    x.operator_norm()
}

pub fn sa_embedding(x: &MatrixTuple) -> MatrixTuple {
    x.sa_embedding()
}

/// Hex SHA-256 of the little-endian bytes of `samples`, prefixed by their shape.
pub fn fingerprint(samples: &[MatrixTuple]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    if let Some(first) = samples.first() {
        h.update((first.n() as u64).to_le_bytes());
        h.update((first.m() as u64).to_le_bytes());
    }
    h.update((samples.len() as u64).to_le_bytes());
    let mut buf = Vec::new();
    for s in samples {
        buf.clear();
        s.write_le(&mut buf).expect("writing to a Vec cannot fail");
        h.update(&buf);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
