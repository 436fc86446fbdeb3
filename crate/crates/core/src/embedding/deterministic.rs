use super::{check_inputs, Embedder, EmbeddingVector};
use crate::error::Result;
use crate::par::{self, Exec};

const SEED: u64 = 0x5eed_c0de_2024_0001;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const NGRAM: usize = 3;

/// Offline embedder: signed feature hashing of lowercased character
/// trigrams (text padded with one space on each side), L2-normalized and
/// rounded to `f32`. A pure function of the input text.
#[derive(Debug, Clone)]
pub struct DeterministicEmbedder {
    dim: usize,
    exec: Exec,
}

impl DeterministicEmbedder {
    pub const MODEL_NAME: &'static str = "deterministic-trigram-v1";

    pub fn new(dim: usize, exec: Exec) -> Self {
        assert!(dim > 0, "dim must be positive");
        Self { dim, exec }
    }

    fn hash(bytes: &[u8]) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325 ^ SEED;
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
        // final avalanche so low bits and the sign bit are well mixed
        h ^= h >> 33;
        h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
        h ^= h >> 33;
        h
    }

    pub fn embed_text(&self, text: &str) -> EmbeddingVector {
        let mut chars: Vec<char> = Vec::with_capacity(text.len() + 2);
        chars.push(' ');
        chars.extend(text.chars().flat_map(char::to_lowercase));
        chars.push(' ');

        let mut acc = vec![0.0f64; self.dim];
        let mut buf = [0u8; 4 * NGRAM];
        for w in chars.windows(NGRAM) {
            let mut n = 0;
            for c in w {
                n += c.encode_utf8(&mut buf[n..]).len();
            }
            let h = Self::hash(&buf[..n]);
            let idx = (h % self.dim as u64) as usize;
            acc[idx] += if h >> 63 == 0 { 1.0 } else { -1.0 };
        }
        let mut norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            // every feature cancelled; fall back to a fixed unit direction
            acc[0] = 1.0;
            norm = 1.0;
        }
        EmbeddingVector::quantized(acc.into_iter().map(|v| v / norm).collect())
            .expect("normalized hash features are finite")
    }
}

impl Embedder for DeterministicEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        check_inputs(texts)?;
        Ok(par::map_slice(self.exec, texts, |t| self.embed_text(t)))
    }
}
