//! Seed derivation and configuration digests.

use sha2::{Digest, Sha256};

/// Mixes a parent seed with labelled parts into a child seed. Parts are
/// length-prefixed so `["ab", "c"]` and `["a", "bc"]` differ.
pub fn derive_seed(parent: u64, parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    h.update(parent.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("sha256 output has 32 bytes"))
}

/// Seed of one question's debate.
pub fn question_seed(global_seed: u64, question_id: &str) -> u64 {
    derive_seed(global_seed, &[b"question", question_id.as_bytes()])
}

/// Seed of one agent call.
pub fn call_seed(question_seed: u64, round: usize, agent_index: usize, attempt: u32) -> u64 {
    derive_seed(
        question_seed,
        &[
            b"call",
            &(round as u64).to_le_bytes(),
            &(agent_index as u64).to_le_bytes(),
            &attempt.to_le_bytes(),
        ],
    )
}

pub fn selection_seed(question_seed: u64) -> u64 {
    derive_seed(question_seed, &[b"select"])
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
