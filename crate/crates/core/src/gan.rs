//! Generator, (K+1)-class discriminator, the adversarial losses, the
//! training loop and relapse prediction.
//!
//! Class layout: 0 = Relapsed, 1 = Abstinent, 2 = Generated. The fake
//! probability `p2` plays the role of `1 - D(x)` of the binary game.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::Label;
use crate::imaging::{flatten_image, SentimentImage};
use crate::seeds::stage_rng;
use crate::tensornet::{softmax, AdamState, LayerSpec, Network, Tensor};

pub const NUM_CLASSES: usize = 3;
pub const CLASS_RELAPSED: usize = 0;
pub const CLASS_ABSTINENT: usize = 1;
pub const CLASS_GENERATED: usize = 2;

/// Probabilities are clamped to [1e-12, 1 - 1e-12] before every log.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GanError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("training data must contain both labeled classes")]
    SingleClass,
    #[error("batch_size {batch} exceeds dataset size {data}")]
    BatchTooLarge { batch: usize, data: usize },
    #[error("batch label must be relapsed or abstinent")]
    BadLabel,
    #[error("degenerate model: p(relapsed) + p(abstinent) underflowed to 0")]
    DegenerateModel,
    #[error(transparent)]
    Shape(#[from] crate::tensornet::ShapeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    SemiSupervised,
    Vanilla,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Discriminator steps per generator step.
    pub d_steps_per_g_step: usize,
    pub noise_dim: usize,
    pub seed: u64,
    pub mode: TrainMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 7000,
            batch_size: 128,
            learning_rate: 1e-4,
            d_steps_per_g_step: 1,
            noise_dim: 64,
            seed: 0,
            mode: TrainMode::SemiSupervised,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub epoch: usize,
    pub l_supervised: f64,
    pub l_unsupervised: f64,
    pub l_total: f64,
    pub g_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GanModel {
    pub generator: Network,
    pub discriminator: Network,
    pub noise_dim: usize,
}

/// Discriminator: two conv layers then a 3-logit head over 2x10x10 input.
pub fn discriminator_spec() -> Vec<LayerSpec> {
    vec![
        LayerSpec::Conv2d { in_channels: 2, out_channels: 16, kernel: 3, stride: 1, padding: 1 },
        LayerSpec::LeakyRelu { slope: 0.2 },
        LayerSpec::Conv2d { in_channels: 16, out_channels: 32, kernel: 3, stride: 2, padding: 1 },
        LayerSpec::LeakyRelu { slope: 0.2 },
        LayerSpec::Flatten,
        LayerSpec::Dense { inputs: 800, outputs: NUM_CLASSES },
    ]
}

/// Generator: noise -> dense -> 32x5x5 -> transposed conv -> conv -> sigmoid.
pub fn generator_spec(noise_dim: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::Dense { inputs: noise_dim, outputs: 800 },
        LayerSpec::Relu,
        LayerSpec::Reshape { shape: vec![32, 5, 5] },
        LayerSpec::TransposedConv2d {
            in_channels: 32,
            out_channels: 16,
            kernel: 3,
            stride: 2,
            padding: 1,
            output_padding: 1,
        },
        LayerSpec::Relu,
        LayerSpec::Conv2d { in_channels: 16, out_channels: 2, kernel: 3, stride: 1, padding: 1 },
        LayerSpec::Sigmoid,
    ]
}

impl GanModel {
    pub fn new(noise_dim: usize, seed: u64) -> GanModel {
        GanModel {
            generator: Network::new(
                generator_spec(noise_dim),
                crate::seeds::subseed(seed, "init-generator"),
            ),
            discriminator: Network::new(
                discriminator_spec(),
                crate::seeds::subseed(seed, "init-discriminator"),
            ),
            noise_dim,
        }
    }
}

/// Convert an image to the 2x10x10 input tensor (channel-major, matching
/// the flattened feature layout of the baselines).
pub fn image_tensor(image: &SentimentImage) -> Tensor {
    Tensor::from_vec(&[2, 10, 10], flatten_image(image))
}

pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Softmax class probabilities of the discriminator for one input.
pub fn discriminator_probs(model: &GanModel, input: &Tensor) -> Result<Vec<f64>, GanError> {
    let logits = model.discriminator.forward(input)?;
    Ok(softmax(&logits.data))
}

fn batch_probs(model: &GanModel, batch: &[Tensor]) -> Result<Vec<Vec<f64>>, GanError> {
    batch.iter().map(|x| discriminator_probs(model, x)).collect()
}

/// Supervised loss: mean over the batch of
/// `-log p(y | x, y < K+1) = -log(p_y / (p_0 + p_1))`.
pub fn supervised_loss(model: &GanModel, batch: &[(Tensor, usize)]) -> Result<f64, GanError> {
    if batch.is_empty() {
        return Err(GanError::EmptyBatch);
    }
    let mut total = 0.0;
    for (x, label) in batch {
        if *label >= CLASS_GENERATED {
            return Err(GanError::BadLabel);
        }
        let p = discriminator_probs(model, x)?;
        let conditional = p[*label] / (p[CLASS_RELAPSED] + p[CLASS_ABSTINENT]);
        total += -clamp_prob(conditional).ln();
    }
    Ok(total / batch.len() as f64)
}

/// Unsupervised loss:
/// `-mean log(1 - p_fake(real)) - mean log(p_fake(fake))`.
pub fn unsupervised_loss(
    model: &GanModel,
    real: &[Tensor],
    fake: &[Tensor],
) -> Result<f64, GanError> {
    if real.is_empty() || fake.is_empty() {
        return Err(GanError::EmptyBatch);
    }
    let mut real_term = 0.0;
    for p in batch_probs(model, real)? {
        real_term += -(1.0 - clamp_prob(p[CLASS_GENERATED])).ln();
    }
    let mut fake_term = 0.0;
    for p in batch_probs(model, fake)? {
        fake_term += -clamp_prob(p[CLASS_GENERATED]).ln();
    }
    Ok(real_term / real.len() as f64 + fake_term / fake.len() as f64)
}

/// The classic two-player binary value function with `D(x) = 1 - p_fake(x)`:
/// `V~ = mean log D(real) + mean log(1 - D(fake))`.
pub fn binary_value(model: &GanModel, real: &[Tensor], fake: &[Tensor]) -> Result<f64, GanError> {
    if real.is_empty() || fake.is_empty() {
        return Err(GanError::EmptyBatch);
    }
    let mut real_term = 0.0;
    for p in batch_probs(model, real)? {
        real_term += (1.0 - clamp_prob(p[CLASS_GENERATED])).ln();
    }
    let mut fake_term = 0.0;
    for p in batch_probs(model, fake)? {
        fake_term += clamp_prob(p[CLASS_GENERATED]).ln();
    }
    Ok(real_term / real.len() as f64 + fake_term / fake.len() as f64)
}

/// The binary discriminator cost
/// `J(D) = -1/2 E log D(real) - 1/2 E log(1 - D(fake))`; algebraically
/// `V~ = -2 J(D)` on equal-size batches.
pub fn binary_discriminator_cost(
    model: &GanModel,
    real: &[Tensor],
    fake: &[Tensor],
) -> Result<f64, GanError> {
    Ok(-0.5 * binary_value(model, real, fake)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorLossKind {
    /// `-mean log(1 - p_fake(G(z)))`: pushes samples toward the real classes.
    NonSaturating,
    /// `+mean log(p_fake(G(z)))`: the zero-sum J(G) = -J(D) form.
    ZeroSum,
}

pub fn generator_loss(
    model: &GanModel,
    fake: &[Tensor],
    kind: GeneratorLossKind,
) -> Result<f64, GanError> {
    if fake.is_empty() {
        return Err(GanError::EmptyBatch);
    }
    let mut total = 0.0;
    for p in batch_probs(model, fake)? {
        let p_fake = clamp_prob(p[CLASS_GENERATED]);
        total += match kind {
            GeneratorLossKind::NonSaturating => -(1.0 - p_fake).ln(),
            GeneratorLossKind::ZeroSum => p_fake.ln(),
        };
    }
    Ok(total / fake.len() as f64)
}

/// Conditional relapse probability `p_0 / (p_0 + p_1)`.
pub fn predict_relapse(model: &GanModel, image: &SentimentImage) -> Result<f64, GanError> {
    predict_relapse_tensor(model, &image_tensor(image))
}

pub fn predict_relapse_tensor(model: &GanModel, input: &Tensor) -> Result<f64, GanError> {
    let p = discriminator_probs(model, input)?;
    let real_mass = p[CLASS_RELAPSED] + p[CLASS_ABSTINENT];
    if real_mass <= 0.0 {
        return Err(GanError::DegenerateModel);
    }
    Ok(p[CLASS_RELAPSED] / real_mass)
}

fn sample_noise(rng: &mut ChaCha8Rng, noise_dim: usize) -> Tensor {
    // z ~ unif[0,1]^noise_dim
    Tensor::from_vec(&[noise_dim], (0..noise_dim).map(|_| rng.gen::<f64>()).collect())
}

/// Draw n generator samples; entries are strictly inside (0,1).
pub fn sample_generator(model: &GanModel, n: usize, seed: u64) -> Vec<Tensor> {
    let mut rng = stage_rng(seed, "sample");
    (0..n)
        .map(|_| {
            let z = sample_noise(&mut rng, model.noise_dim);
            model.generator.forward(&z).expect("generator shape is static")
        })
        .collect()
}

// --- analytic logit gradients -------------------------------------------
//
// All discriminator losses are functions of p = softmax(logits), so the
// chain rule collapses to small closed forms per sample:
//   supervised (label y < 2):     g_k = q_k - [k == y]   for k < 2, g_2 = 0
//                                 where q_k = p_k / (p_0 + p_1)
//   -log(1 - p2) (real term):     g_k = p2 * ([k == 2] - p_k) / (1 - p2)
//   -log(p2)     (fake term):     g_k = p_k - [k == 2]
//   +log(p2)     (zero-sum G):    g_k = [k == 2] - p_k

fn grad_supervised(p: &[f64], label: usize) -> Vec<f64> {
    let s = p[CLASS_RELAPSED] + p[CLASS_ABSTINENT];
    let mut g = vec![0.0; NUM_CLASSES];
    for k in 0..CLASS_GENERATED {
        g[k] = p[k] / s - if k == label { 1.0 } else { 0.0 };
    }
    g
}

fn grad_neg_log_one_minus_pfake(p: &[f64]) -> Vec<f64> {
    let p2 = clamp_prob(p[CLASS_GENERATED]);
    (0..NUM_CLASSES)
        .map(|k| p2 * (if k == CLASS_GENERATED { 1.0 } else { 0.0 } - p[k]) / (1.0 - p2))
        .collect()
}

fn grad_neg_log_pfake(p: &[f64]) -> Vec<f64> {
    (0..NUM_CLASSES)
        .map(|k| p[k] - if k == CLASS_GENERATED { 1.0 } else { 0.0 })
        .collect()
}

struct StepLosses {
    supervised: f64,
    unsupervised: f64,
}

/// One discriminator update on (labeled, unlabeled-real, fake) batches.
/// Fake inputs are treated as constants (detached from the generator).
fn discriminator_step(
    model: &mut GanModel,
    adam: &mut AdamState,
    labeled: &[(Tensor, usize)],
    real: &[Tensor],
    fake: &[Tensor],
    mode: TrainMode,
) -> Result<StepLosses, GanError> {
    let mut grads = model.discriminator.zero_grads();
    let mut supervised = 0.0;
    let mut unsupervised = 0.0;

    let accumulate = |model: &GanModel,
                          grads: &mut Vec<crate::tensornet::LayerGrads>,
                          x: &Tensor,
                          logit_grad: &dyn Fn(&[f64]) -> Vec<f64>,
                          weight: f64|
     -> Result<Vec<f64>, GanError> {
        let cache = model.discriminator.forward_cached(x)?;
        let p = softmax(&cache.output().data);
        let g = Tensor::from_vec(&[NUM_CLASSES], logit_grad(&p));
        let (sample_grads, _) = model.discriminator.backward(&cache, &g);
        for (t, s) in grads.iter_mut().zip(&sample_grads) {
            t.add_scaled(s, weight);
        }
        Ok(p)
    };

    match mode {
        TrainMode::SemiSupervised => {
            let wl = 1.0 / labeled.len() as f64;
            for (x, label) in labeled {
                if *label >= CLASS_GENERATED {
                    return Err(GanError::BadLabel);
                }
                let label = *label;
                let p = accumulate(model, &mut grads, x, &|p| grad_supervised(p, label), wl)?;
                let conditional = p[label] / (p[CLASS_RELAPSED] + p[CLASS_ABSTINENT]);
                supervised += -clamp_prob(conditional).ln() * wl;
            }
            let wr = 1.0 / real.len() as f64;
            for x in real {
                let p = accumulate(model, &mut grads, x, &grad_neg_log_one_minus_pfake, wr)?;
                unsupervised += -(1.0 - clamp_prob(p[CLASS_GENERATED])).ln() * wr;
            }
            let wf = 1.0 / fake.len() as f64;
            for x in fake {
                let p = accumulate(model, &mut grads, x, &grad_neg_log_pfake, wf)?;
                unsupervised += -clamp_prob(p[CLASS_GENERATED]).ln() * wf;
            }
        }
        TrainMode::Vanilla => {
            // Ascend V~ by descending -V~, which equals the unsupervised loss.
            let wr = 1.0 / real.len() as f64;
            for x in real {
                let p = accumulate(model, &mut grads, x, &grad_neg_log_one_minus_pfake, wr)?;
                unsupervised += -(1.0 - clamp_prob(p[CLASS_GENERATED])).ln() * wr;
            }
            let wf = 1.0 / fake.len() as f64;
            for x in fake {
                let p = accumulate(model, &mut grads, x, &grad_neg_log_pfake, wf)?;
                unsupervised += -clamp_prob(p[CLASS_GENERATED]).ln() * wf;
            }
        }
    }

    adam.step(&mut model.discriminator.params, &grads);
    Ok(StepLosses { supervised, unsupervised })
}

/// One generator update: backprop the generator objective through the
/// (frozen) discriminator into the generator.
fn generator_step(
    model: &mut GanModel,
    adam: &mut AdamState,
    noise: &[Tensor],
    kind: GeneratorLossKind,
) -> Result<f64, GanError> {
    let mut grads = model.generator.zero_grads();
    let mut loss = 0.0;
    let w = 1.0 / noise.len() as f64;
    for z in noise {
        let g_cache = model.generator.forward_cached(z)?;
        let image = g_cache.output().clone();
        let d_cache = model.discriminator.forward_cached(&image)?;
        let p = softmax(&d_cache.output().data);
        let p_fake = clamp_prob(p[CLASS_GENERATED]);
        let (value, logit_grad) = match kind {
            GeneratorLossKind::NonSaturating => {
                (-(1.0 - p_fake).ln(), grad_neg_log_one_minus_pfake(&p))
            }
            GeneratorLossKind::ZeroSum => {
                let g: Vec<f64> = grad_neg_log_pfake(&p).iter().map(|v| -v).collect();
                (p_fake.ln(), g)
            }
        };
        loss += value * w;
        let g = Tensor::from_vec(&[NUM_CLASSES], logit_grad);
        let (_, image_grad) = model.discriminator.backward(&d_cache, &g);
        let (sample_grads, _) = model.generator.backward(&g_cache, &image_grad);
        for (t, s) in grads.iter_mut().zip(&sample_grads) {
            t.add_scaled(s, w);
        }
    }
    adam.step(&mut model.generator.params, &grads);
    Ok(loss)
}

/// Labeled training example: image tensor plus class index (0 or 1).
pub type LabeledExample = (Tensor, usize);

pub fn class_index(label: Label) -> Option<usize> {
    match label {
        Label::Relapsed => Some(CLASS_RELAPSED),
        Label::Abstinent => Some(CLASS_ABSTINENT),
        Label::Unlabeled => None,
    }
}

/// Minimax training loop: per iteration, K discriminator updates then
/// one generator update; one LossReport per epoch, batch-averaged.
/// Deterministic given `config.seed`.
pub fn train(
    labeled: &[LabeledExample],
    unlabeled: &[Tensor],
    config: &TrainConfig,
) -> Result<(GanModel, Vec<LossReport>), GanError> {
    if labeled.is_empty() {
        return Err(GanError::EmptyBatch);
    }
    let has = |class: usize| labeled.iter().any(|(_, l)| *l == class);
    if !has(CLASS_RELAPSED) || !has(CLASS_ABSTINENT) {
        return Err(GanError::SingleClass);
    }
    if config.batch_size > labeled.len() {
        return Err(GanError::BatchTooLarge { batch: config.batch_size, data: labeled.len() });
    }

    let mut model = GanModel::new(config.noise_dim, config.seed);
    let mut d_adam = AdamState::new(&model.discriminator.params, config.learning_rate);
    let mut g_adam = AdamState::new(&model.generator.params, config.learning_rate);
    let mut shuffle_rng = stage_rng(config.seed, "shuffle");
    let mut noise_rng = stage_rng(config.seed, "noise");

    // When no separate unlabeled pool is supplied, labeled images are
    // reused with their labels ignored.
    let unlabeled_pool: Vec<Tensor> = if unlabeled.is_empty() {
        labeled.iter().map(|(x, _)| x.clone()).collect()
    } else {
        unlabeled.to_vec()
    };

    let g_kind = match config.mode {
        TrainMode::SemiSupervised => GeneratorLossKind::NonSaturating,
        TrainMode::Vanilla => GeneratorLossKind::ZeroSum,
    };

    let mut reports = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..labeled.len()).collect();
    let mut unlabeled_cursor = 0usize;
    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_sup = 0.0;
        let mut epoch_unsup = 0.0;
        let mut epoch_g = 0.0;
        let mut iterations = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<LabeledExample> =
                chunk.iter().map(|&i| labeled[i].clone()).collect();
            let m = batch.len();
            let mut last = StepLosses { supervised: 0.0, unsupervised: 0.0 };
            for _ in 0..config.d_steps_per_g_step {
                let real: Vec<Tensor> = (0..m)
                    .map(|_| {
                        let x = unlabeled_pool[unlabeled_cursor % unlabeled_pool.len()].clone();
                        unlabeled_cursor += 1;
                        x
                    })
                    .collect();
                let fake: Vec<Tensor> = (0..m)
                    .map(|_| {
                        let z = sample_noise(&mut noise_rng, config.noise_dim);
                        model.generator.forward(&z).expect("static generator shape")
                    })
                    .collect();
                last = discriminator_step(
                    &mut model,
                    &mut d_adam,
                    &batch,
                    &real,
                    &fake,
                    config.mode,
                )?;
            }
            let noise: Vec<Tensor> =
                (0..m).map(|_| sample_noise(&mut noise_rng, config.noise_dim)).collect();
            let g_loss = generator_step(&mut model, &mut g_adam, &noise, g_kind)?;
            epoch_sup += last.supervised;
            epoch_unsup += last.unsupervised;
            epoch_g += g_loss;
            iterations += 1;
        }
        let n = iterations as f64;
        let l_supervised = epoch_sup / n;
        let l_unsupervised = epoch_unsup / n;
        reports.push(LossReport {
            epoch,
            l_supervised,
            l_unsupervised,
            // Exact decomposition: total = supervised + unsupervised.
            l_total: l_supervised + l_unsupervised,
            g_loss: epoch_g / n,
        });
    }
    Ok((model, reports))
}

const GAN_MAGIC: &str = "SENTIGAN-GAN 1";

/// Store both networks in one checkpoint file: a magic line, the noise
/// dimension, a length-prefixed generator section, then the
/// discriminator. Bit-exact round-trip.
pub fn store_gan_model(
    model: &GanModel,
    path: impl AsRef<std::path::Path>,
) -> Result<(), crate::tensornet::CheckpointError> {
    use std::io::Write;
    let mut gen = Vec::new();
    crate::tensornet::write_network(&mut gen, &model.generator)?;
    let mut disc = Vec::new();
    crate::tensornet::write_network(&mut disc, &model.discriminator)?;
    let mut out = Vec::new();
    writeln!(out, "{GAN_MAGIC}")?;
    writeln!(out, "{}", model.noise_dim)?;
    out.extend_from_slice(&(gen.len() as u64).to_le_bytes());
    out.extend_from_slice(&gen);
    out.extend_from_slice(&disc);
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_gan_model(
    path: impl AsRef<std::path::Path>,
) -> Result<GanModel, crate::tensornet::CheckpointError> {
    use crate::tensornet::CheckpointError;
    let bytes = std::fs::read(path)?;
    let malformed = |m: &str| CheckpointError::Malformed(m.to_string());
    let mut pos = 0usize;
    let line = |pos: &mut usize| -> Result<String, CheckpointError> {
        let start = *pos;
        while *pos < bytes.len() && bytes[*pos] != b'\n' {
            *pos += 1;
        }
        if *pos >= bytes.len() {
            return Err(CheckpointError::Malformed("truncated header".to_string()));
        }
        let s = String::from_utf8(bytes[start..*pos].to_vec())
            .map_err(|_| CheckpointError::Malformed("non-utf8 header".to_string()))?;
        *pos += 1;
        Ok(s)
    };
    if line(&mut pos)? != GAN_MAGIC {
        return Err(malformed("bad magic"));
    }
    let noise_dim: usize =
        line(&mut pos)?.parse().map_err(|_| malformed("bad noise_dim"))?;
    if pos + 8 > bytes.len() {
        return Err(malformed("truncated generator length"));
    }
    let gen_len = u64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap()) as usize;
    pos += 8;
    if pos + gen_len > bytes.len() {
        return Err(malformed("truncated generator section"));
    }
    let generator = crate::tensornet::read_network(&mut &bytes[pos..pos + gen_len])?;
    let discriminator = crate::tensornet::read_network(&mut &bytes[pos + gen_len..])?;
    Ok(GanModel { generator, discriminator, noise_dim })
}

/// Loss history CSV: epoch,l_supervised,l_unsupervised,l_total,g_loss
/// with 9 significant digits.
pub fn loss_history_csv(reports: &[LossReport]) -> String {
    let mut out = String::from("epoch,l_supervised,l_unsupervised,l_total,g_loss\n");
    for r in reports {
        out.push_str(&format!(
            "{},{:.8e},{:.8e},{:.8e},{:.8e}\n",
            r.epoch, r.l_supervised, r.l_unsupervised, r.l_total, r.g_loss
        ));
    }
    out
}
