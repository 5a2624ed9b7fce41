//! Language-free text embedding by feature hashing.
//!
//! Character trigrams of the padded, lower-cased text plus whole word tokens
//! are hashed into `dim` buckets with a sign bit, summed and unit-normalized.
//! Identical strings give identical vectors; unrelated strings are close to
//! orthogonal.

use crate::model::Embedding;

/// Seed shared by fixture generation and the oracle embedder.
pub const DEFAULT_HASH_SEED: u64 = 0x5eed;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    // final avalanche so neighbouring buckets are not correlated
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h
}

/// Returns `None` for text without any alphanumeric content.
pub fn hash_embed(text: &str, dim: usize, seed: u64) -> Option<Embedding> {
    assert!(dim > 0, "embedding dimension must be positive");
    let normalized: String = text
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    let words: Vec<&str> = normalized.split_whitespace().collect();
    if words.is_empty() {
        return None;
    }

    let mut acc = vec![0.0f64; dim];
    let mut add = |feature: &[u8], weight: f64| {
        let h = fnv1a(seed, feature);
        let idx = (h % dim as u64) as usize;
        let sign = if (h >> 63) & 1 == 1 { -1.0 } else { 1.0 };
        acc[idx] += sign * weight;
    };

    for word in &words {
        add(format!("w:{word}").as_bytes(), 2.0);
        let padded: Vec<char> = format!(" {word} ").chars().collect();
        for gram in padded.windows(3) {
            let g: String = gram.iter().collect();
            add(format!("c:{g}").as_bytes(), 1.0);
        }
    }

    let emb = Embedding::new(acc).ok()?;
    // A full cancellation is astronomically unlikely but would give a zero
    // vector; fall back to a single bucket so the contract still holds.
    match emb.normalized() {
        Ok(unit) => Some(unit),
        Err(_) => {
            let mut v = vec![0.0; dim];
            v[(fnv1a(seed, normalized.as_bytes()) % dim as u64) as usize] = 1.0;
            Embedding::new(v).ok()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(a: &Embedding, b: &Embedding) -> f64 {
        a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn unit_norm_and_deterministic() {
        let a = hash_embed("a red mug on the desk", 64, 7).unwrap();
        let b = hash_embed("a red mug on the desk", 64, 7).unwrap();
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn distinct_strings_are_not_parallel() {
        let a = hash_embed("advice", 128, 0).unwrap();
        let b = hash_embed("frying pan", 128, 0).unwrap();
        assert!(dot(&a, &b) < 1.0 - 1e-6);
    }

    #[test]
    fn related_strings_score_higher() {
        let q = hash_embed("mention of advice", 256, 0).unwrap();
        let hit = hash_embed("my best advice is to start small", 256, 0).unwrap();
        let miss = hash_embed("the pan is heating on the stove", 256, 0).unwrap();
        assert!(dot(&q, &hit) > dot(&q, &miss));
    }

    #[test]
    fn punctuation_only_has_no_embedding() {
        assert!(hash_embed("  ,.; ", 16, 0).is_none());
    }
}
