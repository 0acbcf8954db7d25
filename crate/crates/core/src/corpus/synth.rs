//! Deterministic synthetic corpus generation.
//!
//! Documents are drawn from a topic mixture model whose topic-word
//! distributions share a power-law envelope over the vocabulary, so the
//! generated corpora exhibit both topical structure and the heavy-tailed
//! rank/frequency curve typical of natural-language bag-of-words data. Used
//! for test fixtures and for exercising the CLI when no real UCI corpus is
//! at hand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SparseCorpus;

/// Parameters of the synthetic generator.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    /// Number of documents.
    pub num_docs: usize,
    /// Vocabulary size.
    pub vocab_size: usize,
    /// Number of latent topics used for generation.
    pub num_topics: usize,
    /// Mean document length in tokens (lengths vary around this).
    pub avg_doc_len: usize,
    /// Exponent of the power-law envelope over word ranks.
    pub zipf_exponent: f64,
    /// Symmetric Dirichlet concentration for per-document topic weights.
    pub doc_topic_concentration: f64,
    /// RNG seed; equal seeds give bit-identical corpora.
    pub seed: u64,
}

impl SynthConfig {
    /// A corpus at the scale of the KOS bag-of-words data set
    /// (3430 documents, 6906 words, about 0.47M tokens).
    pub fn kos_scale(seed: u64) -> Self {
        SynthConfig {
            num_docs: 3430,
            vocab_size: 6906,
            num_topics: 20,
            avg_doc_len: 136,
            zipf_exponent: 1.05,
            doc_topic_concentration: 0.2,
            seed,
        }
    }

    /// A small corpus for fast tests (200 docs, 400 words).
    pub fn small(seed: u64) -> Self {
        SynthConfig {
            num_docs: 200,
            vocab_size: 400,
            num_topics: 8,
            avg_doc_len: 60,
            zipf_exponent: 1.05,
            doc_topic_concentration: 0.2,
            seed,
        }
    }
}

/// Generates a corpus from the mixture model described in the module docs.
pub fn generate_synthetic(cfg: &SynthConfig) -> SparseCorpus {
    assert!(cfg.num_docs >= 1 && cfg.vocab_size >= 2 && cfg.num_topics >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let w = cfg.vocab_size;
    let k = cfg.num_topics;

    // Shifted power-law envelope over word ids (id order doubles as rank
    // order). The shift flattens the head the way stop-word filtering does
    // in the UCI corpora; without it the top ranks dominate far more than
    // in real bag-of-words data.
    let shift = w as f64 / 250.0;
    let envelope: Vec<f64> = (0..w)
        .map(|i| 1.0 / ((i + 1) as f64 + shift).powf(cfg.zipf_exponent))
        .collect();

    // Topic-word CDFs: envelope modulated by gamma noise so topics place
    // their mass on different words while the marginal stays heavy-tailed.
    let mut topic_cdfs: Vec<Vec<f64>> = Vec::with_capacity(k);
    for _ in 0..k {
        let mut cdf = Vec::with_capacity(w);
        let mut acc = 0.0;
        for &e in &envelope {
            acc += e * gamma_sample(&mut rng, 0.35);
            cdf.push(acc);
        }
        let total = acc;
        for v in cdf.iter_mut() {
            *v /= total;
        }
        topic_cdfs.push(cdf);
    }

    let mut docs = Vec::with_capacity(cfg.num_docs);
    for _ in 0..cfg.num_docs {
        // Document topic weights: symmetric Dirichlet via normalized gammas
        // (Marsaglia-Tsang needs shape >= 1; boost + power correction).
        let alpha = cfg.doc_topic_concentration;
        let mut weights = vec![0.0f64; k];
        let mut sum = 0.0;
        for wgt in weights.iter_mut() {
            let g = gamma_sample(&mut rng, alpha);
            *wgt = g;
            sum += g;
        }
        if sum <= 0.0 {
            weights[0] = 1.0;
            sum = 1.0;
        }
        let mut theta_cdf = Vec::with_capacity(k);
        let mut acc = 0.0;
        for wgt in &weights {
            acc += wgt / sum;
            theta_cdf.push(acc);
        }

        // Length between half and 1.5x the mean, uniformly.
        let lo = (cfg.avg_doc_len / 2).max(2);
        let hi = cfg.avg_doc_len + cfg.avg_doc_len / 2;
        let len = rng.gen_range(lo..=hi);

        let mut counts: std::collections::BTreeMap<u32, u32> = Default::default();
        for _ in 0..len {
            let z = sample_cdf(&theta_cdf, rng.gen::<f64>());
            let word = sample_cdf(&topic_cdfs[z], rng.gen::<f64>());
            *counts.entry(word as u32).or_insert(0) += 1;
        }
        docs.push(counts.into_iter().collect::<Vec<_>>());
    }

    SparseCorpus::from_docs(docs, w, Vec::new()).expect("generated docs are non-empty and in range")
}

fn sample_cdf(cdf: &[f64], u: f64) -> usize {
    match cdf.binary_search_by(|p| p.partial_cmp(&u).unwrap()) {
        Ok(i) => i,
        Err(i) => i.min(cdf.len() - 1),
    }
}

/// Gamma(shape, 1) sampler, valid for any shape > 0 (Marsaglia-Tsang with
/// the standard shape < 1 boost).
fn gamma_sample<R: Rng>(rng: &mut R, shape: f64) -> f64 {
    if shape < 1.0 {
        let u: f64 = rng.gen_range(1e-300..1.0);
        return gamma_sample(rng, shape + 1.0) * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = normal_sample(rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.gen_range(1e-300..1.0);
        if u.ln() < 0.5 * x * x + d - d * v + d * v.ln() {
            return d * v;
        }
    }
}

fn normal_sample<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; one draw per call keeps the stream simple.
    let u1: f64 = rng.gen_range(1e-300..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{fit_zipf, word_frequencies};

    #[test]
    fn generation_is_deterministic() {
        let a = generate_synthetic(&SynthConfig::small(9));
        let b = generate_synthetic(&SynthConfig::small(9));
        assert_eq!(a, b);
        let c = generate_synthetic(&SynthConfig::small(10));
        assert_ne!(a, c);
    }

    #[test]
    fn kos_scale_shape() {
        let c = generate_synthetic(&SynthConfig::kos_scale(1));
        assert_eq!(c.num_docs(), 3430);
        assert_eq!(c.vocab_size(), 6906);
        let tokens = c.total_tokens() as f64;
        assert!(tokens > 350_000.0 && tokens < 600_000.0, "tokens = {tokens}");
    }

    #[test]
    fn frequency_curve_is_heavy_tailed() {
        let c = generate_synthetic(&SynthConfig::kos_scale(1));
        let ft = word_frequencies(&c);
        let fit = fit_zipf(&ft, 16).unwrap();
        assert!(fit.h > 0.8 && fit.h < 1.8, "h = {}", fit.h);
        assert!(fit.r_squared > 0.8, "r2 = {}", fit.r_squared);
    }
}
