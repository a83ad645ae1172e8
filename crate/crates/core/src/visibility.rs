//! Robot-part visibility detection.
//!
//! Two detectors share the [`VisibilityReport`] output:
//!
//! * a prompt-pair classifier over embedding vectors, where the image embedding passes
//!   through a low-rank adapted linear map `h = W0·x + scale·B·(A·x)` and each part is
//!   scored by a two-way softmax over cosine similarities with a positive and a negative
//!   prompt embedding;
//! * a geometric oracle for synthetic scenes that counts keypoints projecting inside
//!   the image.
//!
//! Only `B` and `A` are trained; `W0` is frozen and its hash is recorded in checkpoints.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::camera::{project, CameraIntrinsics};
use crate::error::{Error, Result};
use crate::kinematics::{keypoints_3d, JointState, KeypointLayout, KinematicChain, PartLabel};
use crate::pnp::MIN_CORRESPONDENCES;
use crate::scalar::Real;
use crate::se3::PoseSE3;

pub const DEFAULT_RANK: usize = 2;
pub const DEFAULT_TEMPERATURE: f64 = 0.07;
pub const VISIBILITY_THRESHOLD: f64 = 0.5;
/// Learning-rate bound below which full-batch training is monotone over 10-epoch windows
/// on the bundled synthetic embedding sets.
pub const STABLE_LR: f64 = 0.1;

/// Frozen weight plus trainable low-rank update.
#[derive(Debug, Clone, PartialEq)]
pub struct LoraAdapter<T: Real> {
    w0: DMatrix<T>,
    b: DMatrix<T>,
    a: DMatrix<T>,
    scale: T,
}

impl<T: Real> LoraAdapter<T> {
    /// Standard initialization: `A ~ N(0, 1/r)` element-wise, `B = 0`.
    pub fn init(w0: DMatrix<T>, rank: usize, scale: T, seed: u64) -> Result<Self> {
        let (d, k) = w0.shape();
        check_rank(rank, d, k)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let std = (1.0 / rank as f64).sqrt();
        let a = DMatrix::from_fn(rank, k, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            T::lit(z * std)
        });
        Ok(Self {
            w0,
            b: DMatrix::zeros(d, rank),
            a,
            scale,
        })
    }

    pub fn from_parts(w0: DMatrix<T>, b: DMatrix<T>, a: DMatrix<T>, scale: T) -> Result<Self> {
        let (d, k) = w0.shape();
        let rank = a.nrows();
        check_rank(rank, d, k)?;
        if b.shape() != (d, rank) {
            return Err(Error::Dimension {
                expected: d * rank,
                got: b.len(),
            });
        }
        if a.ncols() != k {
            return Err(Error::Dimension {
                expected: k,
                got: a.ncols(),
            });
        }
        Ok(Self { w0, b, a, scale })
    }

    pub fn rank(&self) -> usize {
        self.a.nrows()
    }

    /// Output dimension `d`.
    pub fn output_dim(&self) -> usize {
        self.w0.nrows()
    }

    /// Input dimension `k`.
    pub fn input_dim(&self) -> usize {
        self.w0.ncols()
    }

    pub fn w0(&self) -> &DMatrix<T> {
        &self.w0
    }

    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    /// SHA-256 over the row-major `f64` little-endian bytes of `W0`, prefixed by its shape.
    pub fn w0_hash(&self) -> String {
        matrix_hash(&self.w0)
    }

    pub fn cast<U: Real>(&self) -> LoraAdapter<U> {
        let c = |m: &DMatrix<T>| m.map(|x| U::lit(x.as_f64()));
        LoraAdapter {
            w0: c(&self.w0),
            b: c(&self.b),
            a: c(&self.a),
            scale: U::lit(self.scale.as_f64()),
        }
    }
}

fn check_rank(rank: usize, d: usize, k: usize) -> Result<()> {
    if rank == 0 || rank >= d.min(k) {
        return Err(Error::Parameter(format!(
            "rank must satisfy 1 <= r < min(d, k) = {}, got {rank}",
            d.min(k)
        )));
    }
    Ok(())
}

pub fn matrix_hash<T: Real>(m: &DMatrix<T>) -> String {
    let mut h = Sha256::new();
    h.update((m.nrows() as u64).to_le_bytes());
    h.update((m.ncols() as u64).to_le_bytes());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            h.update(m[(r, c)].as_f64().to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// `h = W0·x + scale·B·(A·x)`, never forming `B·A`.
pub fn lora_forward<T: Real>(adapter: &LoraAdapter<T>, x: &DVector<T>) -> Result<DVector<T>> {
    if x.len() != adapter.input_dim() {
        return Err(Error::Dimension {
            expected: adapter.input_dim(),
            got: x.len(),
        });
    }
    let ax = &adapter.a * x;
    Ok(&adapter.w0 * x + (&adapter.b * ax) * adapter.scale)
}

/// Positive/negative prompt embeddings for one part.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptPair<T: Real> {
    pub positive: DVector<T>,
    pub negative: DVector<T>,
    pub temperature: T,
}

impl<T: Real> PromptPair<T> {
    pub fn new(positive: DVector<T>, negative: DVector<T>, temperature: T) -> Result<Self> {
        if positive.len() != negative.len() {
            return Err(Error::Dimension {
                expected: positive.len(),
                got: negative.len(),
            });
        }
        if positive.norm() == T::zero() || negative.norm() == T::zero() {
            return Err(Error::Parameter("prompt embeddings must be nonzero".into()));
        }
        if !(temperature > T::zero()) {
            return Err(Error::Parameter("temperature must be positive".into()));
        }
        Ok(Self {
            positive,
            negative,
            temperature,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PromptPairBank<T: Real> {
    pub pairs: BTreeMap<PartLabel, PromptPair<T>>,
}

impl<T: Real> PromptPairBank<T> {
    pub fn get(&self, part: &PartLabel) -> Result<&PromptPair<T>> {
        self.pairs
            .get(part)
            .ok_or_else(|| Error::Parameter(format!("no prompt pair for part '{part}'")))
    }
}

fn cosine<T: Real>(a: &DVector<T>, b: &DVector<T>) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: b.len(),
            got: a.len(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == T::zero() || nb == T::zero() {
        return Err(Error::Parameter(
            "cosine similarity of a zero-norm vector".into(),
        ));
    }
    Ok(a.dot(b) / (na * nb))
}

#[inline]
fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// Positive-class mass of `softmax(cos(x, pos)/T, cos(x, neg)/T)`.
pub fn classify_part<T: Real>(image_emb: &DVector<T>, pair: &PromptPair<T>) -> Result<T> {
    let cp = cosine(image_emb, &pair.positive)?;
    let cn = cosine(image_emb, &pair.negative)?;
    Ok(sigmoid((cp - cn) / pair.temperature))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartVisibility {
    pub visible: bool,
    pub probability: f64,
}

impl PartVisibility {
    pub fn from_probability(probability: f64) -> Self {
        Self {
            visible: probability > VISIBILITY_THRESHOLD,
            probability,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VisibilityReport {
    pub parts: BTreeMap<PartLabel, PartVisibility>,
}

impl VisibilityReport {
    pub fn all_visible(parts: &[PartLabel]) -> Self {
        Self {
            parts: parts
                .iter()
                .map(|p| (p.clone(), PartVisibility::from_probability(1.0)))
                .collect(),
        }
    }

    /// Parts absent from the report count as not visible.
    pub fn is_visible(&self, part: &PartLabel) -> bool {
        self.parts.get(part).is_some_and(|v| v.visible)
    }

    pub fn visible_parts(&self) -> Vec<PartLabel> {
        self.parts
            .iter()
            .filter(|(_, v)| v.visible)
            .map(|(p, _)| p.clone())
            .collect()
    }
}

/// Visibility of every part of an adapted image embedding.
pub fn classify_parts<T: Real>(
    adapter: &LoraAdapter<T>,
    bank: &PromptPairBank<T>,
    image_emb: &DVector<T>,
) -> Result<VisibilityReport> {
    let h = lora_forward(adapter, image_emb)?;
    let mut parts = BTreeMap::new();
    for (label, pair) in &bank.pairs {
        let p = classify_part(&h, pair)?.as_f64();
        parts.insert(label.clone(), PartVisibility::from_probability(p));
    }
    Ok(VisibilityReport { parts })
}

/// A part is visible iff at least four of its keypoints project in front of the camera
/// and inside the image shrunk by `margin_px`.
pub fn oracle_visibility<T: Real>(
    chain: &KinematicChain<T>,
    layout: &KeypointLayout<T>,
    q: &JointState<T>,
    pose: &PoseSE3<T>,
    k: &CameraIntrinsics<T>,
    margin_px: T,
) -> Result<VisibilityReport> {
    let points = keypoints_3d(chain, layout, q)?;
    let mut parts = BTreeMap::new();
    for part in layout.parts() {
        let inside = layout
            .ids_for_part(&part)
            .iter()
            .filter(|id| {
                project(k, pose, &points[id])
                    .map(|px| k.contains(&px, margin_px))
                    .unwrap_or(false)
            })
            .count();
        let p = if inside >= MIN_CORRESPONDENCES {
            1.0
        } else {
            0.0
        };
        parts.insert(part, PartVisibility::from_probability(p));
    }
    Ok(VisibilityReport { parts })
}

/// One labelled training or evaluation example.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEmbedding<T: Real> {
    pub embedding: DVector<T>,
    pub part: PartLabel,
    pub visible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Gradient-descent step size. Full-batch training on the bundled synthetic sets
    /// decreases the loss over every 10-epoch window for `lr <= STABLE_LR`.
    pub lr: f64,
    pub seed: u64,
    /// Decoupled L2 shrinkage applied to `B` and `A` every step.
    pub weight_decay: f64,
    /// Mini-batch size; `None` trains on the full set every step.
    pub batch_size: Option<usize>,
    /// Also update the prompt embeddings.
    pub train_prompts: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            lr: 0.3,
            weight_decay: 0.01,
            seed: 0,
            batch_size: None,
            train_prompts: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome<T: Real> {
    pub adapter: LoraAdapter<T>,
    pub bank: PromptPairBank<T>,
    /// Mean training loss before training followed by the loss after each epoch.
    pub loss_curve: Vec<T>,
}

/// Mean binary cross-entropy of the classifier over `samples`.
pub fn mean_loss<T: Real>(
    adapter: &LoraAdapter<T>,
    bank: &PromptPairBank<T>,
    samples: &[LabeledEmbedding<T>],
) -> Result<T> {
    let mut total = T::zero();
    for s in samples {
        let pair = bank.get(&s.part)?;
        let h = lora_forward(adapter, &s.embedding)?;
        let z = (cosine(&h, &pair.positive)? - cosine(&h, &pair.negative)?) / pair.temperature;
        // softplus(−z) for positives, softplus(z) for negatives.
        let m = if s.visible { -z } else { z };
        total += softplus(m);
    }
    Ok(total / T::lit(samples.len().max(1) as f64))
}

fn softplus<T: Real>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `∂cos(h, e)/∂h`.
fn dcos_dh<T: Real>(h: &DVector<T>, e: &DVector<T>) -> DVector<T> {
    let (nh, ne) = (h.norm(), e.norm());
    let c = h.dot(e) / (nh * ne);
    e / (nh * ne) - h * (c / (nh * nh))
}

/// Gradient descent on binary cross-entropy, updating only `B` and `A` (and the prompt
/// embeddings when enabled). `W0` is left untouched.
pub fn train_few_shot<T: Real>(
    adapter: &LoraAdapter<T>,
    bank: &PromptPairBank<T>,
    samples: &[LabeledEmbedding<T>],
    config: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    let mut counts: BTreeMap<&PartLabel, [usize; 2]> = BTreeMap::new();
    for s in samples {
        bank.get(&s.part)?;
        if s.embedding.len() != adapter.input_dim() {
            return Err(Error::Dimension {
                expected: adapter.input_dim(),
                got: s.embedding.len(),
            });
        }
        counts.entry(&s.part).or_default()[s.visible as usize] += 1;
    }
    if counts.is_empty() {
        return Err(Error::Training("no training samples".into()));
    }
    if let Some((part, c)) = counts.iter().find(|(_, c)| c[0] == 0 || c[1] == 0) {
        return Err(Error::Training(format!(
            "part '{part}' needs at least one visible and one invisible sample (got {} / {})",
            c[1], c[0]
        )));
    }
    if !(config.lr > 0.0) {
        return Err(Error::Training("learning rate must be positive".into()));
    }

    let mut adapter = adapter.clone();
    let mut bank = bank.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let batch = config
        .batch_size
        .unwrap_or(samples.len())
        .clamp(1, samples.len());
    let lr = T::lit(config.lr);
    let mut loss_curve = vec![mean_loss(&adapter, &bank, samples)?];

    for _ in 0..config.epochs {
        if config.batch_size.is_some() {
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(batch) {
            let n = T::lit(chunk.len() as f64);
            let mut grad_b = DMatrix::zeros(adapter.b.nrows(), adapter.b.ncols());
            let mut grad_a = DMatrix::zeros(adapter.a.nrows(), adapter.a.ncols());
            let mut grad_prompts: BTreeMap<PartLabel, (DVector<T>, DVector<T>)> = BTreeMap::new();
            for &i in chunk {
                let s = &samples[i];
                let pair = bank.get(&s.part)?;
                let ax = &adapter.a * &s.embedding;
                let h = &adapter.w0 * &s.embedding + (&adapter.b * &ax) * adapter.scale;
                let z =
                    (cosine(&h, &pair.positive)? - cosine(&h, &pair.negative)?) / pair.temperature;
                let y = if s.visible { T::one() } else { T::zero() };
                let dz = (sigmoid(z) - y) / pair.temperature;
                let g_h = (dcos_dh(&h, &pair.positive) - dcos_dh(&h, &pair.negative)) * dz;
                grad_b += &g_h * ax.transpose() * adapter.scale;
                grad_a += (adapter.b.transpose() * &g_h) * s.embedding.transpose() * adapter.scale;
                if config.train_prompts {
                    let entry = grad_prompts
                        .entry(s.part.clone())
                        .or_insert_with(|| (DVector::zeros(h.len()), DVector::zeros(h.len())));
                    entry.0 += dcos_dh(&pair.positive, &h) * dz;
                    entry.1 -= dcos_dh(&pair.negative, &h) * dz;
                }
            }
            let shrink = T::one() - lr * T::lit(config.weight_decay);
            adapter.b = &adapter.b * shrink - grad_b * (lr / n);
            adapter.a = &adapter.a * shrink - grad_a * (lr / n);
            for (part, (gp, gn)) in grad_prompts {
                let pair = bank.pairs.get_mut(&part).expect("checked above");
                pair.positive -= gp * (lr / n);
                pair.negative -= gn * (lr / n);
            }
        }
        loss_curve.push(mean_loss(&adapter, &bank, samples)?);
    }
    Ok(TrainOutcome {
        adapter,
        bank,
        loss_curve,
    })
}

/// Fraction of samples whose predicted visibility matches the label, overall and per part.
pub fn accuracy<T: Real>(
    adapter: &LoraAdapter<T>,
    bank: &PromptPairBank<T>,
    samples: &[LabeledEmbedding<T>],
) -> Result<(f64, BTreeMap<PartLabel, f64>)> {
    let mut per: BTreeMap<PartLabel, (usize, usize)> = BTreeMap::new();
    for s in samples {
        let h = lora_forward(adapter, &s.embedding)?;
        let p = classify_part(&h, bank.get(&s.part)?)?.as_f64();
        let e = per.entry(s.part.clone()).or_default();
        e.1 += 1;
        if (p > VISIBILITY_THRESHOLD) == s.visible {
            e.0 += 1;
        }
    }
    let correct: usize = per.values().map(|v| v.0).sum();
    let total: usize = per.values().map(|v| v.1).sum();
    let overall = if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    };
    Ok((
        overall,
        per.into_iter()
            .map(|(k, (c, n))| (k, c as f64 / n as f64))
            .collect(),
    ))
}

/// Keeps the first `shots` samples of every (part, class) after a seeded shuffle.
///
/// For a fixed seed, smaller shot counts select subsets of larger ones.
pub fn few_shot_subset<T: Real>(
    samples: &[LabeledEmbedding<T>],
    shots: usize,
    seed: u64,
) -> Vec<LabeledEmbedding<T>> {
    let mut idx: Vec<usize> = (0..samples.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut taken: BTreeMap<(PartLabel, bool), usize> = BTreeMap::new();
    let mut keep = Vec::new();
    for i in idx {
        let s = &samples[i];
        let n = taken.entry((s.part.clone(), s.visible)).or_default();
        if *n < shots {
            *n += 1;
            keep.push(i);
        }
    }
    keep.sort_unstable();
    keep.into_iter().map(|i| samples[i].clone()).collect()
}

/// Generator of image embeddings whose per-part visibility is linearly encoded.
///
/// An image embedding is `Σ_p ±(separation/2)·u_p + noise`, with the sign given by part
/// `p`'s visibility, unit directions `u_p`, and isotropic Gaussian noise of standard
/// deviation `noise_sigma`. Prompt embeddings are independent random unit vectors, so the
/// unadapted classifier is near chance.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticEmbeddingModel {
    pub dimension: usize,
    pub noise_sigma: f64,
    pub separation: f64,
    pub directions: BTreeMap<PartLabel, DVector<f64>>,
    pub prompts: BTreeMap<PartLabel, (DVector<f64>, DVector<f64>)>,
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    let v: DVector<f64> = DVector::from_fn(dim, |_, _| StandardNormal.sample(rng));
    let n = v.norm();
    v / n
}

impl SyntheticEmbeddingModel {
    /// Class means sit `margin_sigmas · noise_sigma` from the decision boundary.
    pub fn new(
        parts: &[PartLabel],
        dimension: usize,
        noise_sigma: f64,
        margin_sigmas: f64,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let directions = parts
            .iter()
            .map(|p| (p.clone(), random_unit(&mut rng, dimension)))
            .collect();
        let prompts = parts
            .iter()
            .map(|p| {
                (
                    p.clone(),
                    (
                        random_unit(&mut rng, dimension),
                        random_unit(&mut rng, dimension),
                    ),
                )
            })
            .collect();
        Self {
            dimension,
            noise_sigma,
            separation: 2.0 * margin_sigmas * noise_sigma,
            directions,
            prompts,
        }
    }

    /// Bundled configuration: base and end-effector, 16-dimensional, margin 2σ.
    pub fn bundled(seed: u64) -> Self {
        Self::new(
            &[PartLabel::Base, PartLabel::EndEffector],
            16,
            0.25,
            2.0,
            seed,
        )
    }

    pub fn parts(&self) -> Vec<PartLabel> {
        self.directions.keys().cloned().collect()
    }

    /// Embedding of an image in which `visible` says which parts appear.
    pub fn embed(&self, visible: &BTreeMap<PartLabel, bool>, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let mut x = DVector::from_fn(self.dimension, |_, _| {
            let z: f64 = StandardNormal.sample(rng);
            z * self.noise_sigma
        });
        for (part, dir) in &self.directions {
            let sign = if visible.get(part).copied().unwrap_or(false) {
                1.0
            } else {
                -1.0
            };
            x += dir * (sign * self.separation / 2.0);
        }
        x
    }

    /// `n_images` random images, each contributing one labelled sample per part.
    pub fn sample(&self, n_images: usize, rng: &mut ChaCha8Rng) -> Vec<LabeledEmbedding<f64>> {
        let mut out = Vec::with_capacity(n_images * self.directions.len());
        for _ in 0..n_images {
            let vis: BTreeMap<PartLabel, bool> = self
                .directions
                .keys()
                .map(|p| (p.clone(), rng.random_bool(0.5)))
                .collect();
            let x = self.embed(&vis, rng);
            for (part, &v) in &vis {
                out.push(LabeledEmbedding {
                    embedding: x.clone(),
                    part: part.clone(),
                    visible: v,
                });
            }
        }
        out
    }

    pub fn prompt_bank(&self, temperature: f64) -> PromptPairBank<f64> {
        PromptPairBank {
            pairs: self
                .prompts
                .iter()
                .map(|(p, (pos, neg))| {
                    (
                        p.clone(),
                        PromptPair::new(pos.clone(), neg.clone(), temperature)
                            .expect("unit prompts"),
                    )
                })
                .collect(),
        }
    }
}

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Format(format!("{what}: ragged rows")));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn prompt_files(bank: &PromptPairBank<f64>) -> BTreeMap<PartLabel, PromptPairFile> {
    bank.pairs
        .iter()
        .map(|(p, pair)| {
            (
                p.clone(),
                PromptPairFile {
                    positive: pair.positive.iter().copied().collect(),
                    negative: pair.negative.iter().copied().collect(),
                    temperature: pair.temperature,
                },
            )
        })
        .collect()
}

fn bank_from_files(prompts: &BTreeMap<PartLabel, PromptPairFile>) -> Result<PromptPairBank<f64>> {
    let mut pairs = BTreeMap::new();
    for (part, f) in prompts {
        let pair = PromptPair::new(
            DVector::from_vec(f.positive.clone()),
            DVector::from_vec(f.negative.clone()),
            f.temperature,
        )?;
        pairs.insert(part.clone(), pair);
    }
    Ok(PromptPairBank { pairs })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptPairFile {
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
    pub temperature: f64,
}

/// On-disk adapter and prompt bank. Matrices are stored row by row; `w0_sha256` is
/// checked against `w0` on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterCheckpoint {
    pub schema_version: u32,
    pub scale: f64,
    pub w0_sha256: String,
    pub w0: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub a: Vec<Vec<f64>>,
    pub prompts: BTreeMap<PartLabel, PromptPairFile>,
}

impl AdapterCheckpoint {
    pub fn new(adapter: &LoraAdapter<f64>, bank: &PromptPairBank<f64>) -> Self {
        Self {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            scale: adapter.scale(),
            w0_sha256: adapter.w0_hash(),
            w0: matrix_rows(adapter.w0()),
            b: matrix_rows(adapter.b()),
            a: matrix_rows(adapter.a()),
            prompts: prompt_files(bank),
        }
    }

    pub fn restore(&self) -> Result<(LoraAdapter<f64>, PromptPairBank<f64>)> {
        if self.schema_version != CHECKPOINT_SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint schema_version {}",
                self.schema_version
            )));
        }
        let w0 = matrix_from_rows(&self.w0, "w0")?;
        if matrix_hash(&w0) != self.w0_sha256 {
            return Err(Error::Format("w0 does not match its recorded hash".into()));
        }
        let adapter = LoraAdapter::from_parts(
            w0,
            matrix_from_rows(&self.b, "b")?,
            matrix_from_rows(&self.a, "a")?,
            self.scale,
        )?;
        Ok((adapter, bank_from_files(&self.prompts)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSample {
    pub embedding: Vec<f64>,
    pub part: PartLabel,
    pub visible: bool,
}

impl EmbeddingSample {
    pub fn to_labeled(&self) -> LabeledEmbedding<f64> {
        LabeledEmbedding {
            embedding: DVector::from_vec(self.embedding.clone()),
            part: self.part.clone(),
            visible: self.visible,
        }
    }

    pub fn from_labeled(s: &LabeledEmbedding<f64>) -> Self {
        Self {
            embedding: s.embedding.iter().copied().collect(),
            part: s.part.clone(),
            visible: s.visible,
        }
    }
}

/// Labelled embeddings with the prompt pair of every part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingDataset {
    pub schema_version: u32,
    pub prompts: BTreeMap<PartLabel, PromptPairFile>,
    /// Pool from which few-shot subsets are drawn.
    pub train: Vec<EmbeddingSample>,
    pub test: Vec<EmbeddingSample>,
}

impl EmbeddingDataset {
    /// Draws `n_train` and `n_test` images from `model` with a seeded generator.
    pub fn synthetic(
        model: &SyntheticEmbeddingModel,
        n_train: usize,
        n_test: usize,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let train = model
            .sample(n_train, &mut rng)
            .iter()
            .map(EmbeddingSample::from_labeled)
            .collect();
        let test = model
            .sample(n_test, &mut rng)
            .iter()
            .map(EmbeddingSample::from_labeled)
            .collect();
        Self {
            schema_version: CHECKPOINT_SCHEMA_VERSION,
            prompts: prompt_files(&model.prompt_bank(DEFAULT_TEMPERATURE)),
            train,
            test,
        }
    }

    pub fn bank(&self) -> Result<PromptPairBank<f64>> {
        bank_from_files(&self.prompts)
    }

    pub fn dimension(&self) -> Option<usize> {
        self.train
            .first()
            .or(self.test.first())
            .map(|s| s.embedding.len())
    }
}
