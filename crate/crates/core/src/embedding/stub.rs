//! Deterministic hash-seeded encoder used in place of external models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::Vector;

fn feature_rng(feature: &str, seed: u64) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(feature.as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

/// Unit-norm pseudorandom projection of `text`.
///
/// The vector is the sum of one random direction per lowercased word plus one
/// for the whole normalized string, so texts sharing words are correlated and
/// distinct texts differ.
pub fn stub_encode(text: &str, dim: usize, seed: u64) -> Vector {
    let dim = dim.max(1);
    let normalized: String = text
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    let mut features: Vec<String> = normalized
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| format!("w:{w}"))
        .collect();
    features.push(format!("s:{normalized}"));

    let mut acc = vec![0.0f64; dim];
    for f in &features {
        let mut rng = feature_rng(f, seed);
        for a in acc.iter_mut() {
            *a += rng.random_range(-1.0..1.0);
        }
    }
    let norm = acc.iter().map(|x| x * x).sum::<f64>().sqrt();
    let values: Vec<f32> = if norm > 0.0 {
        acc.iter().map(|x| (x / norm) as f32).collect()
    } else {
        let mut e = vec![0.0; dim];
        e[0] = 1.0;
        e
    };
    Vector::new(values).expect("finite by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos(a: &Vector, b: &Vector) -> f64 {
        let dot: f64 = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| *x as f64 * *y as f64)
            .sum();
        dot / (a.norm() * b.norm())
    }

    #[test]
    fn deterministic() {
        let a = stub_encode("graph neural networks", 32, 1);
        let b = stub_encode("graph neural networks", 32, 1);
        assert_eq!(a, b);
        assert_ne!(a, stub_encode("graph neural networks", 32, 2));
        assert_eq!(a.dim(), 32);
    }

    #[test]
    fn unit_norm() {
        for text in ["", "a", "named entity recognition", "ünïcödé text"] {
            let v = stub_encode(text, 100, 9);
            assert!((v.norm() - 1.0).abs() < 1e-6, "{text}: {}", v.norm());
        }
    }

    #[test]
    fn distinct_texts_are_far() {
        let a = stub_encode("a", 64, 0);
        let b = stub_encode("b", 64, 0);
        assert!(cos(&a, &b) < 0.9);
    }

    #[test]
    fn shared_words_correlate() {
        let a = stub_encode("neural machine translation", 256, 0);
        let b = stub_encode("statistical machine translation", 256, 0);
        let c = stub_encode("protein folding", 256, 0);
        assert!(cos(&a, &b) > cos(&a, &c));
    }
}
