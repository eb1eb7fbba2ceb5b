//! Skip-gram with negative sampling over a (bilingual) corpus.
//!
//! A desk-scale source of static token embeddings. Negatives are drawn from
//! the unigram distribution raised to 0.75 and the learning rate decays
//! linearly over all epochs. With one thread the result is a pure function of
//! corpus, configuration and seed. With more threads, workers update shared
//! weights without locking (asynchronous SGD) and results vary run to run.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use rand::Rng;

use crate::corpus::Corpus;
use crate::embedding::{EmbedError, EmbeddingTable};
use crate::rng;

/// Dot products entering the sigmoid are clipped to this magnitude.
pub const MAX_EXP: f32 = 10.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SgnsConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub min_count: u64,
    pub epochs: usize,
    pub learning_rate: f32,
    pub seed: u64,
    pub threads: usize,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        SgnsConfig {
            dim: 64,
            window: 5,
            negatives: 5,
            min_count: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 0,
            threads: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SgnsOutcome {
    pub table: EmbeddingTable,
    /// Mean logistic loss per prediction (one positive or negative target)
    /// for each epoch.
    pub epoch_losses: Vec<f64>,
}

#[inline]
fn load(w: &AtomicU32) -> f32 {
    f32::from_bits(w.load(Ordering::Relaxed))
}

#[inline]
fn store(w: &AtomicU32, v: f32) {
    w.store(v.to_bits(), Ordering::Relaxed)
}

#[inline]
fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

struct Model<'a> {
    input: Vec<AtomicU32>,
    output: Vec<AtomicU32>,
    dim: usize,
    noise: Vec<f64>,
    cfg: &'a SgnsConfig,
    total_words: u64,
    processed: AtomicU64,
}

impl Model<'_> {
    fn sample_noise<R: Rng>(&self, rng: &mut R) -> u32 {
        let u = rng.random::<f64>() * self.noise.last().copied().unwrap_or(1.0);
        self.noise.partition_point(|&c| c <= u).min(self.noise.len() - 1) as u32
    }

    fn learning_rate(&self) -> f32 {
        let done = self.processed.load(Ordering::Relaxed) as f32 / self.total_words.max(1) as f32;
        self.cfg.learning_rate * (1.0 - done).max(1e-4)
    }

    /// One pass over `sentences`; returns (summed loss, number of predictions).
    fn run<R: Rng>(&self, sentences: &[Vec<u32>], rng: &mut R) -> (f64, u64) {
        let d = self.dim;
        let mut grad = vec![0f32; d];
        let mut loss = 0f64;
        let mut predictions = 0u64;
        for sentence in sentences {
            let lr = self.learning_rate();
            for (i, &center) in sentence.iter().enumerate() {
                let span = rng.random_range(1..=self.cfg.window);
                let lo = i.saturating_sub(span);
                let hi = (i + span).min(sentence.len() - 1);
                for (j, &context) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let inp = &self.input[center as usize * d..(center as usize + 1) * d];
                    for k in 0..=self.cfg.negatives {
                        let (target, label) = if k == 0 {
                            (context, 1.0f32)
                        } else {
                            let t = self.sample_noise(rng);
                            if t == context {
                                continue;
                            }
                            (t, 0.0)
                        };
                        predictions += 1;
                        let out = &self.output[target as usize * d..(target as usize + 1) * d];
                        let dot: f32 = inp.iter().zip(out).map(|(a, b)| load(a) * load(b)).sum();
                        let f = dot.clamp(-MAX_EXP, MAX_EXP);
                        let s = sigmoid(f);
                        loss -= if label > 0.5 {
                            (s as f64).max(1e-12).ln()
                        } else {
                            (1.0 - s as f64).max(1e-12).ln()
                        };
                        let g = (label - s) * lr;
                        for ((gk, a), b) in grad.iter_mut().zip(inp).zip(out) {
                            *gk += g * load(b);
                            store(b, load(b) + g * load(a));
                        }
                    }
                    for (a, gk) in inp.iter().zip(&grad) {
                        store(a, load(a) + gk);
                    }
                }
            }
            self.processed.fetch_add(sentence.len() as u64, Ordering::Relaxed);
        }
        (loss, predictions)
    }
}

/// Trains embeddings for every token occurring at least `min_count` times.
///
/// Rows are ordered by descending frequency, ties alphabetically.
pub fn train_sgns(corpus: &Corpus, cfg: &SgnsConfig) -> Result<SgnsOutcome, EmbedError> {
    if cfg.dim < 2 {
        return Err(EmbedError::InvalidConfig("dim must be at least 2".into()));
    }
    if cfg.window < 1 {
        return Err(EmbedError::InvalidConfig("window must be at least 1".into()));
    }
    if cfg.epochs == 0 {
        return Err(EmbedError::InvalidConfig("epochs must be at least 1".into()));
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for s in corpus {
        for t in s.tokens() {
            *counts.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let mut vocab: Vec<(&str, u64)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= cfg.min_count.max(1))
        .collect();
    if vocab.is_empty() {
        return Err(EmbedError::EmptyCorpus);
    }
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let ids: HashMap<&str, u32> = vocab.iter().enumerate().map(|(i, (w, _))| (*w, i as u32)).collect();
    let sentences: Vec<Vec<u32>> = corpus
        .iter()
        .map(|s| s.tokens().iter().filter_map(|t| ids.get(t.as_str()).copied()).collect::<Vec<_>>())
        .filter(|s| s.len() > 1)
        .collect();

    let mut acc = 0.0;
    let noise: Vec<f64> = vocab
        .iter()
        .map(|(_, c)| {
            acc += (*c as f64).powf(0.75);
            acc
        })
        .collect();

    let d = cfg.dim;
    let n = vocab.len();
    let mut init = rng::stream(cfg.seed, u64::MAX);
    let input: Vec<AtomicU32> = (0..n * d)
        .map(|_| AtomicU32::new(((init.random::<f32>() - 0.5) / d as f32).to_bits()))
        .collect();
    let output: Vec<AtomicU32> = (0..n * d).map(|_| AtomicU32::new(0f32.to_bits())).collect();
    let words_per_epoch: u64 = sentences.iter().map(|s| s.len() as u64).sum();
    let model = Model {
        input,
        output,
        dim: d,
        noise,
        cfg,
        total_words: words_per_epoch * cfg.epochs as u64,
        processed: AtomicU64::new(0),
    };

    let threads = cfg.threads.max(1);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let (loss, predictions) = if threads == 1 {
            model.run(&sentences, &mut rng::stream(cfg.seed, epoch as u64))
        } else {
            let chunk = sentences.len().div_ceil(threads).max(1);
            std::thread::scope(|scope| {
                let handles: Vec<_> = sentences
                    .chunks(chunk)
                    .enumerate()
                    .map(|(t, part)| {
                        let model = &model;
                        let key = (epoch as u64) << 16 | t as u64;
                        scope.spawn(move || model.run(part, &mut rng::stream(cfg.seed, key)))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("training worker panicked"))
                    .fold((0.0, 0), |(l, p), (l2, p2)| (l + l2, p + p2))
            })
        };
        epoch_losses.push(if predictions == 0 { 0.0 } else { loss / predictions as f64 });
    }

    let vectors: Vec<f32> = model.input.iter().map(load).collect();
    let table = EmbeddingTable::new(vocab.into_iter().map(|(w, _)| w.to_owned()).collect(), vectors, d)?;
    Ok(SgnsOutcome { table, epoch_losses })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Corpus {
        Corpus::from_lines(
            "toy",
            [
                "the cat sat on the mat with the other cat",
                "a dog lay on the rug near the other dog",
            ],
        )
    }

    fn cfg() -> SgnsConfig {
        SgnsConfig {
            dim: 8,
            window: 2,
            negatives: 3,
            min_count: 1,
            epochs: 2,
            seed: 17,
            ..Default::default()
        }
    }

    #[test]
    fn second_epoch_has_lower_loss() {
        let out = train_sgns(&toy(), &cfg()).unwrap();
        assert_eq!(out.epoch_losses.len(), 2);
        assert!(out.epoch_losses[1] < out.epoch_losses[0], "{:?}", out.epoch_losses);
    }

    #[test]
    fn second_epoch_lower_across_seeds() {
        for seed in 0..50 {
            let out = train_sgns(&toy(), &SgnsConfig { seed, ..cfg() }).unwrap();
            assert!(out.epoch_losses[1] < out.epoch_losses[0], "seed {seed}: {:?}", out.epoch_losses);
        }
    }

    #[test]
    fn loss_keeps_falling_on_a_longer_run() {
        let lines: Vec<String> = toy().iter().map(|s| s.to_string()).cycle().take(200).collect();
        let c = Corpus::from_lines("toy", lines.iter().map(String::as_str));
        let out = train_sgns(&c, &SgnsConfig { epochs: 4, ..cfg() }).unwrap();
        assert!(out.epoch_losses[3] < out.epoch_losses[0], "{:?}", out.epoch_losses);
    }

    #[test]
    fn min_count_filters_vocab() {
        let c = Corpus::from_lines("t", ["a a a a a b b c", "a b"]);
        let out = train_sgns(&c, &SgnsConfig { dim: 4, ..Default::default() }).unwrap();
        assert_eq!(out.table.vocab(), ["a"]);
        let err = train_sgns(&Corpus::from_lines("t", ["x y"]), &SgnsConfig::default()).unwrap_err();
        assert!(matches!(err, EmbedError::EmptyCorpus));
    }

    #[test]
    fn single_thread_is_bit_identical() {
        let a = train_sgns(&toy(), &cfg()).unwrap();
        let b = train_sgns(&toy(), &cfg()).unwrap();
        assert_eq!(a.table, b.table);
        assert_eq!(a.epoch_losses, b.epoch_losses);
    }

    #[test]
    fn multi_thread_runs_and_stays_finite() {
        let out = train_sgns(&toy(), &SgnsConfig { threads: 3, ..cfg() }).unwrap();
        assert!(out.table.rows().all(|(_, r)| r.iter().all(|v| v.is_finite())));
    }

    #[test]
    fn invalid_config() {
        assert!(matches!(
            train_sgns(&toy(), &SgnsConfig { dim: 1, ..cfg() }),
            Err(EmbedError::InvalidConfig(_))
        ));
        assert!(matches!(
            train_sgns(&toy(), &SgnsConfig { window: 0, ..cfg() }),
            Err(EmbedError::InvalidConfig(_))
        ));
    }
}
