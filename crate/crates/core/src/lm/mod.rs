//! Word-level language model over directory sequences.
//!
//! The vocabulary maps directory names to ids with four reserved specials.
//! Paths become training samples by prefixing SOS to the inputs and
//! appending EOS to the targets, so a path of depth d contributes d+1
//! next-token targets and the model learns sequence termination. Training
//! minimizes masked cross-entropy with Adam and stops early when validation
//! loss fails to improve for `patience` epochs, restoring the best weights.
//!
//! Single precision everywhere except [`gradient_check`], which casts the
//! model to f64 and compares analytic gradients against central finite
//! differences.

mod checkpoint;
mod net;
mod tensor;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use net::EncodedBatch;

use crate::dataset::Corpus;
use crate::url_model::{PathSeq, Segment};
use net::{Adam, NetDims, NetParams};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub type TokenId = u32;

pub const UNK: TokenId = 0;
pub const PAD: TokenId = 1;
pub const SOS: TokenId = 2;
pub const EOS: TokenId = 3;
const SPECIAL_TOKENS: [&str; 4] = ["<unk>", "<pad>", "<sos>", "<eos>"];

#[derive(Debug, thiserror::Error)]
pub enum LmError {
    #[error("training corpus contains no paths")]
    EmptyTrainingSet,
    #[error("word {0:?} is not in the vocabulary")]
    UnknownWord(String),
    #[error("hyper-parameter grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
}

/// Token/id bijection with reserved specials at ids 0..=3.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
    min_freq: u32,
}

impl Vocabulary {
    /// Rebuilds a vocabulary from its token list (specials included first).
    pub fn from_tokens(tokens: Vec<String>, min_freq: u32) -> Result<Self, LmError> {
        if tokens.len() < SPECIAL_TOKENS.len()
            || tokens[..4] != SPECIAL_TOKENS.map(String::from)[..]
        {
            return Err(LmError::Checkpoint("vocabulary specials missing".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (id, token) in tokens.iter().enumerate() {
            if index.insert(token.clone(), id as TokenId).is_some() {
                return Err(LmError::Checkpoint(format!("duplicate token {token:?}")));
            }
        }
        Ok(Vocabulary { tokens, index, min_freq })
    }

    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn min_freq(&self) -> u32 {
        self.min_freq
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id_of(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn is_special(id: TokenId) -> bool {
        id < SPECIAL_TOKENS.len() as TokenId
    }

    /// Corpus token id, or UNK for out-of-vocabulary names.
    pub fn encode_segment(&self, segment: &Segment) -> TokenId {
        self.id_of(segment.as_str()).unwrap_or(UNK)
    }
}

/// Builds the vocabulary from training-corpus segment frequencies. Ids are
/// assigned to names with frequency >= min_freq, most frequent first,
/// lexicographic on ties, after the four specials.
pub fn build_vocabulary(train: &Corpus, min_freq: u32) -> Vocabulary {
    let mut freq: HashMap<&str, u32> = HashMap::new();
    for path in train.all_paths() {
        for seg in path.segments() {
            *freq.entry(seg.as_str()).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, u32)> = freq.into_iter().filter(|(_, c)| *c >= min_freq).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let mut tokens: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
    tokens.extend(kept.into_iter().map(|(t, _)| t.to_string()));
    Vocabulary::from_tokens(tokens, min_freq).expect("specials are present by construction")
}

/// Encodes a path prefix for the model: SOS followed by the ids of the
/// first `max_depth` segments. PAD only ever appears through batching.
pub fn encode(path: &PathSeq, vocab: &Vocabulary, max_depth: usize) -> Vec<TokenId> {
    let mut ids = Vec::with_capacity(path.depth().min(max_depth) + 1);
    ids.push(SOS);
    for seg in path.segments().iter().take(max_depth) {
        ids.push(vocab.encode_segment(seg));
    }
    ids
}

/// Next-token targets for a complete path: its segment ids followed by EOS.
pub fn encode_targets(path: &PathSeq, vocab: &Vocabulary, max_depth: usize) -> Vec<TokenId> {
    let mut ids: Vec<TokenId> = path
        .segments()
        .iter()
        .take(max_depth)
        .map(|s| vocab.encode_segment(s))
        .collect();
    ids.push(EOS);
    ids
}

/// Training configuration. The grid-search domains for the first five
/// fields are {5,10}, {3,5}, {128,256,512}, {2,3,4} and {0.2,0.4,0.6};
/// learning rate, batch size and the epoch cap are implementation defaults
/// recorded in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub max_depth: usize,
    pub min_freq: u32,
    pub embedding_size: usize,
    pub n_layers: usize,
    pub dropout_rate: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            max_depth: 10,
            min_freq: 3,
            embedding_size: 128,
            n_layers: 2,
            dropout_rate: 0.2,
            learning_rate: 1e-3,
            batch_size: 64,
            patience: 10,
            max_epochs: 200,
            seed: 0,
        }
    }
}

impl HyperParams {
    /// The full 2·2·3·3·3 = 108-configuration grid.
    pub fn full_grid() -> Vec<HyperParams> {
        let mut grid = Vec::new();
        for &max_depth in &[5usize, 10] {
            for &min_freq in &[3u32, 5] {
                for &embedding_size in &[128usize, 256, 512] {
                    for &n_layers in &[2usize, 3, 4] {
                        for &dropout_rate in &[0.2f64, 0.4, 0.6] {
                            grid.push(HyperParams {
                                max_depth,
                                min_freq,
                                embedding_size,
                                n_layers,
                                dropout_rate,
                                ..HyperParams::default()
                            });
                        }
                    }
                }
            }
        }
        grid
    }

    /// Desk-scale 8-configuration subset: {5,10} × {32,64} × {0.2,0.4}
    /// with min_freq 3 and 2 layers.
    pub fn desk_grid() -> Vec<HyperParams> {
        let mut grid = Vec::new();
        for &max_depth in &[5usize, 10] {
            for &embedding_size in &[32usize, 64] {
                for &dropout_rate in &[0.2f64, 0.4] {
                    grid.push(HyperParams {
                        max_depth,
                        embedding_size,
                        dropout_rate,
                        ..HyperParams::default()
                    });
                }
            }
        }
        grid
    }
}

/// Immutable trained model: vocabulary plus all network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguageModel {
    pub vocab: Vocabulary,
    pub hparams: HyperParams,
    pub(crate) params: NetParams<f32>,
}

impl LanguageModel {
    /// Freshly initialized (untrained) model, seeded by the hyperparams.
    pub fn init(vocab: Vocabulary, hparams: HyperParams) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(hparams.seed);
        let params = NetParams::init(
            NetDims {
                vocab: vocab.size(),
                embed: hparams.embedding_size,
                n_layers: hparams.n_layers,
            },
            &mut rng,
        );
        LanguageModel { vocab, hparams, params }
    }

    pub(crate) fn from_parts(
        vocab: Vocabulary,
        hparams: HyperParams,
        params: NetParams<f32>,
    ) -> Self {
        LanguageModel { vocab, hparams, params }
    }

    pub fn param_count(&self) -> usize {
        self.params.param_count()
    }

    /// Probability distribution over the next token given an encoded
    /// prefix. Passing a dropout RNG selects training mode; evaluation
    /// mode is deterministic.
    pub fn forward(&self, prefix: &[TokenId], train_rng: Option<&mut ChaCha20Rng>) -> Vec<f32> {
        let dropout = train_rng.map(|rng| (self.hparams.dropout_rate, rng));
        net::forward_prefix_dropout(&self.params, prefix, dropout)
    }

    /// The k most probable next directories after `prefix`, specials
    /// excluded, sorted by probability descending then name ascending.
    pub fn predict_topk(&self, prefix: &PathSeq, k: usize) -> Vec<(Segment, f64)> {
        let ids = encode(prefix, &self.vocab, self.hparams.max_depth);
        let probs = self.forward(&ids, None);
        let mut ranked: Vec<(TokenId, f64)> = probs
            .iter()
            .enumerate()
            .filter(|(id, _)| !Vocabulary::is_special(*id as TokenId))
            .map(|(id, &p)| (id as TokenId, p as f64))
            .collect();
        ranked.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| self.vocab.token(a.0).cmp(self.vocab.token(b.0)))
        });
        ranked
            .into_iter()
            .take(k)
            .map(|(id, p)| {
                (
                    Segment::new(self.vocab.token(id)).expect("vocabulary tokens are valid"),
                    p,
                )
            })
            .collect()
    }

    /// Top-n vocabulary words whose embedding is closest to `word`'s by
    /// cosine similarity, excluding the word itself and the specials.
    pub fn embedding_similarity(
        &self,
        word: &str,
        n: usize,
    ) -> Result<Vec<(Segment, f64)>, LmError> {
        let id = self
            .vocab
            .id_of(word)
            .filter(|id| !Vocabulary::is_special(*id))
            .ok_or_else(|| LmError::UnknownWord(word.to_string()))?;
        let query: Vec<f64> = self.params.embedding.row(id as usize).iter().map(|&v| v as f64).collect();
        let mut scored = Vec::new();
        for other in 4..self.vocab.size() as TokenId {
            if other == id {
                continue;
            }
            let row: Vec<f64> = self
                .params
                .embedding
                .row(other as usize)
                .iter()
                .map(|&v| v as f64)
                .collect();
            scored.push((other, cosine(&query, &row)));
        }
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| self.vocab.token(a.0).cmp(self.vocab.token(b.0)))
        });
        Ok(scored
            .into_iter()
            .take(n)
            .map(|(id, s)| {
                (
                    Segment::new(self.vocab.token(id)).expect("vocabulary tokens are valid"),
                    s,
                )
            })
            .collect())
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    MaxEpochs,
    EarlyStopping,
    NoEpochs,
}

/// Per-epoch losses plus which epoch's weights were kept.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingReport {
    pub epochs: Vec<EpochStats>,
    /// 1-based; 0 when no epoch ran.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stop_reason: StopReason,
}

fn corpus_samples(corpus: &Corpus, vocab: &Vocabulary, max_depth: usize) -> Vec<(Vec<TokenId>, Vec<TokenId>)> {
    corpus
        .all_paths()
        .map(|p| (encode(p, vocab, max_depth), encode_targets(p, vocab, max_depth)))
        .collect()
}

fn mean_loss_over(
    params: &NetParams<f32>,
    samples: &[(Vec<TokenId>, Vec<TokenId>)],
    batch_size: usize,
) -> f64 {
    let mut loss_sum = 0.0;
    let mut n = 0usize;
    for chunk in samples.chunks(batch_size.max(1)) {
        let batch = EncodedBatch::from_samples(chunk, PAD);
        let (l, c, _) = net::forward(params, &batch, None);
        loss_sum += l;
        n += c;
    }
    if n == 0 {
        0.0
    } else {
        loss_sum / n as f64
    }
}

/// Mean validation loss (nats per target token) of a trained model on a
/// corpus; None when the corpus holds no paths.
pub fn validation_loss(model: &LanguageModel, corpus: &Corpus) -> Option<f64> {
    let samples = corpus_samples(corpus, &model.vocab, model.hparams.max_depth);
    if samples.is_empty() {
        return None;
    }
    Some(mean_loss_over(&model.params, &samples, model.hparams.batch_size))
}

/// Trains a model on `train`, early-stopping on `val` loss. The vocabulary
/// is built from `train` only. Returns the best-epoch model.
pub fn train(
    train_corpus: &Corpus,
    val_corpus: &Corpus,
    hparams: &HyperParams,
) -> Result<(LanguageModel, TrainingReport), LmError> {
    let vocab = build_vocabulary(train_corpus, hparams.min_freq);
    let samples = corpus_samples(train_corpus, &vocab, hparams.max_depth);
    if samples.is_empty() {
        return Err(LmError::EmptyTrainingSet);
    }
    let val_samples = corpus_samples(val_corpus, &vocab, hparams.max_depth);

    let mut rng = ChaCha20Rng::seed_from_u64(hparams.seed);
    let mut params = NetParams::<f32>::init(
        NetDims {
            vocab: vocab.size(),
            embed: hparams.embedding_size,
            n_layers: hparams.n_layers,
        },
        &mut rng,
    );
    let mut adam = Adam::new(&params, hparams.learning_rate);

    let mut report = TrainingReport {
        epochs: Vec::new(),
        best_epoch: 0,
        best_val_loss: f64::INFINITY,
        stop_reason: StopReason::NoEpochs,
    };
    let mut best_params: Option<NetParams<f32>> = None;
    let mut epochs_since_best = 0usize;

    let mut order: Vec<usize> = (0..samples.len()).collect();
    for epoch in 1..=hparams.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut n_targets = 0usize;
        for chunk in order.chunks(hparams.batch_size.max(1)) {
            let chunk_samples: Vec<_> = chunk.iter().map(|&i| samples[i].clone()).collect();
            let batch = EncodedBatch::from_samples(&chunk_samples, PAD);
            let (l, c, cache) =
                net::forward(&params, &batch, Some((hparams.dropout_rate, &mut rng)));
            let grads = net::backward(&params, &batch, &cache);
            adam.step(&mut params, &grads);
            loss_sum += l;
            n_targets += c;
        }
        let train_loss = loss_sum / n_targets.max(1) as f64;
        let val_loss = if val_samples.is_empty() {
            train_loss
        } else {
            mean_loss_over(&params, &val_samples, hparams.batch_size)
        };
        report.epochs.push(EpochStats { epoch, train_loss, val_loss });

        if val_loss < report.best_val_loss {
            report.best_val_loss = val_loss;
            report.best_epoch = epoch;
            best_params = Some(params.clone());
            epochs_since_best = 0;
        } else {
            epochs_since_best += 1;
            if epochs_since_best >= hparams.patience {
                report.stop_reason = StopReason::EarlyStopping;
                break;
            }
        }
    }
    if report.stop_reason != StopReason::EarlyStopping && !report.epochs.is_empty() {
        report.stop_reason = StopReason::MaxEpochs;
    }
    if let Some(best) = best_params {
        params = best;
    }
    Ok((LanguageModel::from_parts(vocab, hparams.clone(), params), report))
}

/// One grid-search trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRun {
    pub hparams: HyperParams,
    pub best_val_loss: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub param_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSearchResult {
    pub best_index: usize,
    pub runs: Vec<GridRun>,
}

/// Trains every configuration and keeps the one with the lowest validation
/// loss; ties prefer fewer parameters, then earlier grid order.
pub fn grid_search(
    train_corpus: &Corpus,
    val_corpus: &Corpus,
    grid: &[HyperParams],
) -> Result<(LanguageModel, GridSearchResult), LmError> {
    if grid.is_empty() {
        return Err(LmError::EmptyGrid);
    }
    let mut runs = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, f64, usize, LanguageModel)> = None;
    for (idx, hparams) in grid.iter().enumerate() {
        let (model, report) = train(train_corpus, val_corpus, hparams)?;
        let param_count = model.param_count();
        let val = if report.best_val_loss.is_finite() {
            report.best_val_loss
        } else {
            f64::INFINITY
        };
        runs.push(GridRun {
            hparams: hparams.clone(),
            best_val_loss: val,
            best_epoch: report.best_epoch,
            epochs_run: report.epochs.len(),
            param_count,
        });
        let better = match &best {
            None => true,
            Some((_, best_val, best_count, _)) => {
                val < *best_val || (val == *best_val && param_count < *best_count)
            }
        };
        if better {
            best = Some((idx, val, param_count, model));
        }
    }
    let (best_index, _, _, model) = best.expect("grid is non-empty");
    Ok((model, GridSearchResult { best_index, runs }))
}

/// Result of comparing analytic gradients against central finite
/// differences on a double-precision copy of the model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub per_group: Vec<(String, f64)>,
    pub n_params: usize,
    pub skipped: bool,
}

/// Checks every parameter of every group with step 1e-5, dropout disabled.
/// Relative error is |a-f| / max(|a|+|f|, 1e-6); the floor keeps the f64
/// cancellation noise of the central difference (about 4e-11 at this step)
/// from dominating parameters whose true gradient is near zero. A batch
/// with no targets is reported as skipped with error 0.
pub fn gradient_check(model: &LanguageModel, batch_paths: &[PathSeq]) -> GradCheckReport {
    let samples: Vec<_> = batch_paths
        .iter()
        .map(|p| {
            (
                encode(p, &model.vocab, model.hparams.max_depth),
                encode_targets(p, &model.vocab, model.hparams.max_depth),
            )
        })
        .collect();
    let batch = EncodedBatch::from_samples(&samples, PAD);
    if batch.n_targets() == 0 {
        return GradCheckReport {
            max_rel_error: 0.0,
            per_group: Vec::new(),
            n_params: 0,
            skipped: true,
        };
    }

    let mut params: NetParams<f64> = model.params.cast();
    let (_, n, cache) = net::forward(&params, &batch, None);
    let analytic = net::backward(&params, &batch, &cache);

    let step = 1e-5;
    let mut per_group: Vec<(String, f64)> = Vec::new();
    let mut n_params = 0usize;
    let group_names: Vec<String> = params
        .named_tensors()
        .into_iter()
        .map(|(name, _)| name)
        .collect();
    let analytic_tensors: Vec<Vec<f64>> = analytic
        .named_tensors()
        .into_iter()
        .map(|(_, m)| m.data.clone())
        .collect();

    for (g_idx, name) in group_names.iter().enumerate() {
        let mut group_max = 0.0f64;
        for (i, &a) in analytic_tensors[g_idx].iter().enumerate() {
            let original = params.tensors_mut()[g_idx].data[i];
            params.tensors_mut()[g_idx].data[i] = original + step;
            let (loss_plus, _, _) = net::forward(&params, &batch, None);
            params.tensors_mut()[g_idx].data[i] = original - step;
            let (loss_minus, _, _) = net::forward(&params, &batch, None);
            params.tensors_mut()[g_idx].data[i] = original;
            let fd = (loss_plus - loss_minus) / n as f64 / (2.0 * step);
            let rel = (a - fd).abs() / (a.abs() + fd.abs()).max(1e-6);
            if rel > group_max {
                group_max = rel;
            }
        }
        n_params += analytic_tensors[g_idx].len();
        per_group.push((name.clone(), group_max));
    }
    let max_rel_error = per_group.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    GradCheckReport { max_rel_error, per_group, n_params, skipped: false }
}

/// Builds the small deterministic model + batch used by the gradcheck
/// command: `vocab_size` tokens (specials included), untrained weights,
/// dropout disabled, and four short paths over the synthetic words.
pub fn gradcheck_fixture(
    seed: u64,
    vocab_size: usize,
    embedding_size: usize,
    n_layers: usize,
) -> (LanguageModel, Vec<PathSeq>) {
    let n_words = vocab_size.saturating_sub(4).max(1);
    let words: Vec<String> = (0..n_words).map(|i| format!("w{i:02}")).collect();
    let mut tokens: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
    tokens.extend(words.iter().cloned());
    let vocab = Vocabulary::from_tokens(tokens, 1).expect("fixture tokens are valid");
    let hparams = HyperParams {
        max_depth: 8,
        min_freq: 1,
        embedding_size,
        n_layers,
        dropout_rate: 0.0,
        seed,
        ..HyperParams::default()
    };
    let model = LanguageModel::init(vocab, hparams);
    let mut rng = ChaCha20Rng::seed_from_u64(seed.wrapping_add(1));
    let batch: Vec<PathSeq> = (0..4)
        .map(|_| {
            let depth = rand::Rng::random_range(&mut rng, 2..=4);
            let names = (0..depth)
                .map(|_| words[rand::Rng::random_range(&mut rng, 0..words.len())].clone());
            PathSeq::from_names(names).expect("fixture segments are valid")
        })
        .collect();
    (model, batch)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(entries: &[(&str, &[&str])]) -> Corpus {
        let mut c = Corpus::new();
        for (domain, paths) in entries {
            for p in *paths {
                let seq = PathSeq::from_names(p.split('/').filter(|s| !s.is_empty())).unwrap();
                c.insert(domain, seq);
            }
        }
        c
    }

    #[test]
    fn vocabulary_threshold() {
        let c = corpus(&[(
            "d",
            &["news/a", "news/b", "news/c", "news/d", "news/e", "rare/x", "rare2"],
        )]);
        // "news" appears 5 times, "rare" once.
        let vocab = build_vocabulary(&c, 3);
        assert!(vocab.id_of("news").is_some());
        assert!(vocab.id_of("rare").is_none());
        assert_eq!(
            vocab.encode_segment(&Segment::new("rare").unwrap()),
            UNK
        );
    }

    #[test]
    fn empty_corpus_vocabulary_is_specials_only() {
        let vocab = build_vocabulary(&Corpus::new(), 3);
        assert_eq!(vocab.size(), 4);
        assert_eq!(vocab.token(UNK), "<unk>");
        assert_eq!(vocab.token(PAD), "<pad>");
        assert_eq!(vocab.token(SOS), "<sos>");
        assert_eq!(vocab.token(EOS), "<eos>");
    }

    #[test]
    fn vocabulary_orders_by_frequency_then_name() {
        let c = corpus(&[("d", &["b/b/b", "a/a/a", "c"])]);
        // a and b appear 3 times each, c once.
        let vocab = build_vocabulary(&c, 1);
        assert_eq!(vocab.token(4), "a");
        assert_eq!(vocab.token(5), "b");
        assert_eq!(vocab.token(6), "c");
    }

    #[test]
    fn encode_shapes() {
        let c = corpus(&[("d", &["news/2024"])]);
        let vocab = build_vocabulary(&c, 1);
        let p = PathSeq::from_names(["news", "2024"]).unwrap();
        let ids = encode(&p, &vocab, 10);
        assert_eq!(ids[0], SOS);
        assert_eq!(ids.len(), 3);
        assert_eq!(encode(&PathSeq::root(), &vocab, 10), vec![SOS]);
        let deep = PathSeq::from_names((0..12).map(|i| format!("s{i}"))).unwrap();
        assert_eq!(encode(&deep, &vocab, 10).len(), 11);
        let targets = encode_targets(&p, &vocab, 10);
        assert_eq!(targets.last(), Some(&EOS));
        assert_eq!(targets.len(), 3);
    }

    #[test]
    fn encode_never_emits_pad() {
        let c = corpus(&[("d", &["a/b/c", "x/y"])]);
        let vocab = build_vocabulary(&c, 1);
        for p in c.all_paths() {
            assert!(!encode(p, &vocab, 10).contains(&PAD));
            assert!(!encode_targets(p, &vocab, 10).contains(&PAD));
        }
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(HyperParams::full_grid().len(), 108);
        assert_eq!(HyperParams::desk_grid().len(), 8);
    }

    fn tiny_hparams() -> HyperParams {
        HyperParams {
            max_depth: 10,
            min_freq: 1,
            embedding_size: 12,
            n_layers: 2,
            dropout_rate: 0.0,
            learning_rate: 1e-2,
            batch_size: 8,
            patience: 10,
            max_epochs: 0,
            seed: 7,
        }
    }

    #[test]
    fn zero_epochs_returns_initial_weights() {
        let c = corpus(&[("d", &["a/b", "c"])]);
        let hp = tiny_hparams();
        let (model, report) = train(&c, &c, &hp).unwrap();
        let fresh = LanguageModel::init(build_vocabulary(&c, 1), hp);
        assert_eq!(model.params, fresh.params);
        assert_eq!(report.stop_reason, StopReason::NoEpochs);
        assert_eq!(report.best_epoch, 0);
    }

    #[test]
    fn empty_training_set_is_an_error() {
        let hp = tiny_hparams();
        assert!(matches!(
            train(&Corpus::new(), &Corpus::new(), &hp),
            Err(LmError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn initial_loss_is_log_vocab_size() {
        let c = corpus(&[("d", &["news/2024", "about/team", "login", "shop/cart"])]);
        let vocab = build_vocabulary(&c, 1);
        let hp = HyperParams { min_freq: 1, embedding_size: 16, ..tiny_hparams() };
        let model = LanguageModel::init(vocab.clone(), hp);
        let loss = validation_loss(&model, &c).unwrap();
        let uniform = (vocab.size() as f64).ln();
        assert!(
            (loss - uniform).abs() / uniform < 0.05,
            "initial loss {loss} vs ln|V| {uniform}"
        );
    }

    #[test]
    fn training_reduces_loss_on_tiny_corpus() {
        let c = corpus(&[("d", &["a/b"])]);
        let hp = HyperParams { max_epochs: 40, ..tiny_hparams() };
        let (_, report) = train(&c, &c, &hp).unwrap();
        let first = report.epochs.first().unwrap().val_loss;
        let last = report.best_val_loss;
        assert!(last < first, "loss did not decrease: {first} -> {last}");
        // strictly decreasing across the first few epochs
        for w in report.epochs.windows(2).take(4) {
            assert!(w[1].val_loss < w[0].val_loss);
        }
    }

    #[test]
    fn overfit_single_path_predicts_continuation() {
        let c = corpus(&[("d", &["a/b"])]);
        let hp = HyperParams { max_epochs: 300, embedding_size: 8, ..tiny_hparams() };
        let (model, _) = train(&c, &c, &hp).unwrap();
        let top = model.predict_topk(&PathSeq::from_names(["a"]).unwrap(), 1);
        assert_eq!(top[0].0.as_str(), "b");
        assert!(top[0].1 > 0.9, "p(b|a) = {}", top[0].1);
    }

    #[test]
    fn topk_saturation_returns_all_non_specials() {
        let c = corpus(&[("d", &["a/b", "c/d"])]);
        let vocab = build_vocabulary(&c, 1);
        let n_words = vocab.size() - 4;
        let model = LanguageModel::init(vocab, HyperParams { min_freq: 1, ..tiny_hparams() });
        let top = model.predict_topk(&PathSeq::root(), n_words + 10);
        assert_eq!(top.len(), n_words);
        let total: f64 = top.iter().map(|(_, p)| p).sum();
        assert!(total <= 1.0 + 1e-6);
        // sorted by probability descending
        for w in top.windows(2) {
            assert!(w[0].1 >= w[1].1);
        }
    }

    #[test]
    fn deterministic_training() {
        let c = corpus(&[("d", &["a/b", "c/d", "a/c"])]);
        let hp = HyperParams { max_epochs: 5, dropout_rate: 0.3, ..tiny_hparams() };
        let (m1, r1) = train(&c, &c, &hp).unwrap();
        let (m2, r2) = train(&c, &c, &hp).unwrap();
        assert_eq!(m1.params, m2.params);
        assert_eq!(r1, r2);
    }

    #[test]
    fn grid_of_one_returns_it() {
        let c = corpus(&[("d", &["a/b"])]);
        let hp = HyperParams { max_epochs: 2, ..tiny_hparams() };
        let (_, result) = grid_search(&c, &c, std::slice::from_ref(&hp)).unwrap();
        assert_eq!(result.best_index, 0);
        assert_eq!(result.runs.len(), 1);
    }

    #[test]
    fn trained_config_beats_untrained_in_grid() {
        let c = corpus(&[("d", &["a/b", "a/c", "a/d"])]);
        let untrained = HyperParams { max_epochs: 0, ..tiny_hparams() };
        let trained = HyperParams { max_epochs: 15, ..tiny_hparams() };
        let (_, result) = grid_search(&c, &c, &[untrained, trained]).unwrap();
        assert_eq!(result.best_index, 1);
    }

    #[test]
    fn empty_grid_is_an_error() {
        let c = corpus(&[("d", &["a"])]);
        assert!(matches!(grid_search(&c, &c, &[]), Err(LmError::EmptyGrid)));
    }

    #[test]
    fn grid_ties_prefer_fewer_parameters() {
        let c = corpus(&[("d", &["a/b"])]);
        // both run zero epochs, so validation losses tie; the smaller
        // model must win even though it comes second in grid order
        let big = HyperParams { embedding_size: 32, ..tiny_hparams() };
        let small = HyperParams { embedding_size: 8, ..tiny_hparams() };
        let (model, result) = grid_search(&c, &c, &[big, small]).unwrap();
        assert_eq!(result.best_index, 1);
        assert_eq!(model.hparams.embedding_size, 8);
    }

    #[test]
    fn embedding_similarity_identity_and_orthogonal() {
        let c = corpus(&[("d", &["a/b", "c"])]);
        let vocab = build_vocabulary(&c, 1);
        let mut model = LanguageModel::init(
            vocab,
            HyperParams { min_freq: 1, embedding_size: 4, ..tiny_hparams() },
        );
        // Orthogonal one-hot embeddings for the three corpus words (ids 4..7).
        model.params.embedding.fill(0.0);
        for (i, row) in (4..7).enumerate() {
            model.params.embedding.row_mut(row)[i] = 1.0;
        }
        let sims = model.embedding_similarity("a", 5).unwrap();
        assert!(sims.iter().all(|(_, s)| s.abs() < 1e-12));
        // A duplicate direction scores 1.0.
        let dup = model.params.embedding.row(4).to_vec();
        model.params.embedding.row_mut(6).copy_from_slice(&dup);
        let sims = model.embedding_similarity("a", 1).unwrap();
        assert!((sims[0].1 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn embedding_similarity_unknown_word() {
        let c = corpus(&[("d", &["a"])]);
        let model = LanguageModel::init(
            build_vocabulary(&c, 1),
            HyperParams { min_freq: 1, ..tiny_hparams() },
        );
        assert!(matches!(
            model.embedding_similarity("nope", 3),
            Err(LmError::UnknownWord(_))
        ));
        assert!(matches!(
            model.embedding_similarity("<sos>", 3),
            Err(LmError::UnknownWord(_))
        ));
    }

    #[test]
    fn gradient_check_small_model() {
        let c = corpus(&[("d", &["a/b/c", "b/c", "c/a"])]);
        let vocab = build_vocabulary(&c, 1);
        let model = LanguageModel::init(
            vocab,
            HyperParams {
                min_freq: 1,
                embedding_size: 6,
                n_layers: 2,
                dropout_rate: 0.0,
                ..tiny_hparams()
            },
        );
        let paths: Vec<PathSeq> = c.all_paths().cloned().collect();
        let report = gradient_check(&model, &paths);
        assert!(!report.skipped);
        assert!(
            report.max_rel_error < 1e-3,
            "max rel error {}",
            report.max_rel_error
        );
    }

    #[test]
    fn gradient_check_empty_batch_is_skipped() {
        let c = corpus(&[("d", &["a"])]);
        let model = LanguageModel::init(
            build_vocabulary(&c, 1),
            HyperParams { min_freq: 1, ..tiny_hparams() },
        );
        let report = gradient_check(&model, &[]);
        assert!(report.skipped);
        assert_eq!(report.max_rel_error, 0.0);
    }
}
