//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the numeric routines under test; only plain data
//! types and the seeded PRNG are shared.
#![allow(dead_code)]

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};

use rbmvec::clustering::{Linkage, SimilarityMatrix, StopRule};
use rbmvec::rbm::{RbmParams, INIT_WEIGHT_STD};
use rbmvec::rng::Prng;

// ------------------------------------------------------------------ RBM

pub fn w(p: &RbmParams<f64>, i: usize, j: usize) -> f64 {
    p.weights[i * p.hidden() + j]
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `E(v, h)` summed term by term.
pub fn energy_terms(p: &RbmParams<f64>, v: &[f64], h: &[f64]) -> f64 {
    let mut e = 0.0;
    for i in 0..p.visible() {
        e += 0.5 * (v[i] - p.visible_bias[i]) * (v[i] - p.visible_bias[i]);
    }
    for j in 0..p.hidden() {
        e -= p.hidden_bias[j] * h[j];
        for i in 0..p.visible() {
            e -= v[i] * w(p, i, j) * h[j];
        }
    }
    e
}

/// `Σ_{h ∈ {0,1}^H} exp(−E(v, h))` by enumerating every hidden state.
pub fn brute_force_boltzmann_sum(p: &RbmParams<f64>, v: &[f64]) -> f64 {
    let nh = p.hidden();
    let mut total = 0.0;
    for mask in 0u32..(1 << nh) {
        let h: Vec<f64> = (0..nh).map(|j| ((mask >> j) & 1) as f64).collect();
        total += (-energy_terms(p, v, &h)).exp();
    }
    total
}

pub fn hidden_probs(p: &RbmParams<f64>, v: &[f64]) -> Vec<f64> {
    (0..p.hidden())
        .map(|j| {
            let mut a = p.hidden_bias[j];
            for i in 0..p.visible() {
                a += v[i] * w(p, i, j);
            }
            logistic(a)
        })
        .collect()
}

pub fn visible_means(p: &RbmParams<f64>, h: &[f64]) -> Vec<f64> {
    (0..p.visible())
        .map(|i| {
            let mut m = p.visible_bias[i];
            for j in 0..p.hidden() {
                m += w(p, i, j) * h[j];
            }
            m
        })
        .collect()
}

/// CD-1 replayed step by step: per sample, per hidden unit, one uniform draw
/// decides the binary state.
pub fn scripted_cd1(
    p: &RbmParams<f64>,
    batch: &[Vec<f64>],
    lr: f64,
    wd: f64,
    rng: &mut Prng,
) -> (RbmParams<f64>, f64) {
    let (nv, nh) = (p.visible(), p.hidden());
    let mut pos = vec![vec![0.0; nh]; nv];
    let mut neg = vec![vec![0.0; nh]; nv];
    let mut dv = vec![0.0; nv];
    let mut dh = vec![0.0; nh];
    let mut err = 0.0;
    for v in batch {
        let ph = hidden_probs(p, v);
        let h: Vec<f64> = ph
            .iter()
            .map(|&q| {
                let u: f64 = rng.random();
                if u < q {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let v2 = visible_means(p, &h);
        let ph2 = hidden_probs(p, &v2);
        for i in 0..nv {
            for j in 0..nh {
                pos[i][j] += v[i] * ph[j];
                neg[i][j] += v2[i] * ph2[j];
            }
            dv[i] += v[i] - v2[i];
            err += (v[i] - v2[i]).powi(2);
        }
        for j in 0..nh {
            dh[j] += ph[j] - ph2[j];
        }
    }
    let b = batch.len() as f64;
    let mut weights = p.weights.clone();
    for i in 0..nv {
        for j in 0..nh {
            let old = w(p, i, j);
            weights[i * nh + j] = old + lr * (pos[i][j] - neg[i][j]) / b - lr * wd * old;
        }
    }
    let vb = (0..nv).map(|i| p.visible_bias[i] + lr * dv[i] / b).collect();
    let hb = (0..nh).map(|j| p.hidden_bias[j] + lr * dh[j] / b).collect();
    (RbmParams::from_parts(nv, nh, weights, vb, hb).unwrap(), err)
}

/// Epoch loop replayed: shuffle indices, batches in order (short tail kept).
pub fn scripted_train(
    mut p: RbmParams<f64>,
    data: &[Vec<f64>],
    epochs: usize,
    batch_size: usize,
    lr: f64,
    wd: f64,
    rng: &mut Prng,
) -> RbmParams<f64> {
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..epochs {
        order.shuffle(rng);
        for chunk in order.chunks(batch_size) {
            let batch: Vec<Vec<f64>> = chunk.iter().map(|&k| data[k].clone()).collect();
            p = scripted_cd1(&p, &batch, lr, wd, rng).0;
        }
    }
    p
}

/// Row-major `N(0, INIT_WEIGHT_STD²)` weights, zero biases.
pub fn scripted_init(nv: usize, nh: usize, rng: &mut Prng) -> RbmParams<f64> {
    let normal = Normal::new(0.0, INIT_WEIGHT_STD).unwrap();
    let weights = (0..nv * nh).map(|_| normal.sample(rng)).collect();
    RbmParams::from_parts(nv, nh, weights, vec![0.0; nv], vec![0.0; nh]).unwrap()
}

pub fn random_rbm(rng: &mut impl Rng, nv: usize, nh: usize, scale: f64) -> RbmParams<f64> {
    let mut u = |s: f64| rng.random_range(-s..s);
    let weights = (0..nv * nh).map(|_| u(scale)).collect();
    let vb = (0..nv).map(|_| u(scale)).collect();
    let hb = (0..nh).map(|_| u(scale)).collect();
    RbmParams::from_parts(nv, nh, weights, vb, hb).unwrap()
}

/// Replays a fixed list of uniforms through `Rng::random::<f64>()`.
pub struct Script {
    draws: Vec<f64>,
    next: usize,
}

impl Script {
    pub fn new(draws: &[f64]) -> Self {
        Script {
            draws: draws.to_vec(),
            next: 0,
        }
    }

    pub fn used(&self) -> usize {
        self.next
    }
}

impl RngCore for Script {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        let u = self.draws[self.next];
        self.next += 1;
        ((u * (1u64 << 53) as f64) as u64) << 11
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let b = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&b[..chunk.len()]);
        }
    }
}

// ------------------------------------------------------------------ AHC

#[derive(Clone, Debug)]
enum Tree {
    Leaf(usize),
    Node(Box<Tree>, Box<Tree>, usize),
}

impl Tree {
    fn birth(&self) -> i64 {
        match self {
            Tree::Leaf(_) => -1,
            Tree::Node(_, _, b) => *b as i64,
        }
    }

    fn leaves(&self, out: &mut Vec<usize>) {
        match self {
            Tree::Leaf(i) => out.push(*i),
            Tree::Node(l, r, _) => {
                l.leaves(out);
                r.leaves(out);
            }
        }
    }
}

/// `½(s(A,N) + s(B,N))` unrolled from the original matrix: the cluster that
/// was formed later is split first.
fn wpgma(m: &SimilarityMatrix<f64>, x: &Tree, y: &Tree) -> f64 {
    match (x, y) {
        (Tree::Leaf(i), Tree::Leaf(j)) => m.get(*i, *j),
        _ if x.birth() > y.birth() => {
            let Tree::Node(l, r, _) = x else { unreachable!() };
            0.5 * (wpgma(m, l, y) + wpgma(m, r, y))
        }
        _ => {
            let Tree::Node(l, r, _) = y else { unreachable!() };
            0.5 * (wpgma(m, x, l) + wpgma(m, x, r))
        }
    }
}

fn pair_score(m: &SimilarityMatrix<f64>, linkage: Linkage, x: &Tree, y: &Tree) -> f64 {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    x.leaves(&mut a);
    y.leaves(&mut b);
    match linkage {
        Linkage::Single => {
            let mut best = f64::NEG_INFINITY;
            for &i in &a {
                for &j in &b {
                    best = best.max(m.get(i, j));
                }
            }
            best
        }
        Linkage::Average => wpgma(m, x, y),
        Linkage::SizeWeightedAverage => {
            let mut sum = 0.0;
            for &i in &a {
                for &j in &b {
                    sum += m.get(i, j);
                }
            }
            sum / (a.len() * b.len()) as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMerge {
    pub members_a: Vec<usize>,
    pub members_b: Vec<usize>,
    pub score: f64,
}

/// Naive agglomeration: every step rescans all cluster pairs and scores each
/// from the original matrix. Clusters sit in a list; merging positions
/// `p < q` puts the union at `p` and removes `q`.
pub fn reference_ahc(
    m: &SimilarityMatrix<f64>,
    linkage: Linkage,
    stop: StopRule<f64>,
) -> (Vec<usize>, Vec<ReferenceMerge>) {
    let n = m.len();
    let mut clusters: Vec<Tree> = (0..n).map(Tree::Leaf).collect();
    let mut merges = Vec::new();
    let mut step = 0;
    while clusters.len() > 1 {
        if let StopRule::NumClusters(k) = stop {
            if clusters.len() == k {
                break;
            }
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for p in 0..clusters.len() {
            for q in (p + 1)..clusters.len() {
                let s = pair_score(m, linkage, &clusters[p], &clusters[q]);
                if best.is_none_or(|(b, _, _)| s > b) {
                    best = Some((s, p, q));
                }
            }
        }
        let (s, p, q) = best.unwrap();
        if let StopRule::Threshold(t) = stop {
            if s < t {
                break;
            }
        }
        let right = clusters.remove(q);
        let left = clusters[p].clone();
        let (mut ma, mut mb) = (Vec::new(), Vec::new());
        left.leaves(&mut ma);
        right.leaves(&mut mb);
        merges.push(ReferenceMerge {
            members_a: ma,
            members_b: mb,
            score: s,
        });
        clusters[p] = Tree::Node(Box::new(left), Box::new(right), step);
        step += 1;
    }
    let mut label = vec![0; n];
    for (c, t) in clusters.iter().enumerate() {
        let mut leaves = Vec::new();
        t.leaves(&mut leaves);
        for &i in &leaves {
            label[i] = c;
        }
    }
    (canonical(&label), merges)
}

/// Relabels by first appearance in item order.
pub fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

pub fn random_similarity(rng: &mut impl Rng, n: usize) -> SimilarityMatrix<f64> {
    let mut s = vec![1.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v: f64 = rng.random_range(-1.0..1.0);
            s[i * n + j] = v;
            s[j * n + i] = v;
        }
    }
    SimilarityMatrix::new((0..n).map(|i| format!("x{i}")).collect(), s).unwrap()
}

// ------------------------------------------------------------------ metrics

fn rat(n: usize, d: usize) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn harmonic(p: &BigRational, r: &BigRational) -> BigRational {
    if (p + r).is_zero() {
        BigRational::zero()
    } else {
        BigRational::from_integer(2.into()) * p * r / (p + r)
    }
}

/// Enumerates all unordered pairs.
pub fn pairwise_oracle(pred: &[usize], truth: &[usize]) -> (BigRational, BigRational, BigRational) {
    let n = pred.len();
    let (mut both, mut in_pred, mut in_true) = (0, 0, 0);
    for i in 0..n {
        for j in (i + 1)..n {
            let sp = pred[i] == pred[j];
            let st = truth[i] == truth[j];
            in_pred += sp as usize;
            in_true += st as usize;
            both += (sp && st) as usize;
        }
    }
    let p = if in_pred == 0 { BigRational::one() } else { rat(both, in_pred) };
    let r = if in_true == 0 { BigRational::one() } else { rat(both, in_true) };
    let f = harmonic(&p, &r);
    (p, r, f)
}

/// Per-item precision and recall, averaged.
pub fn bcubed_oracle(pred: &[usize], truth: &[usize]) -> (BigRational, BigRational, BigRational) {
    let n = pred.len();
    let mut p_sum = BigRational::zero();
    let mut r_sum = BigRational::zero();
    for e in 0..n {
        let same_cluster = (0..n).filter(|&x| pred[x] == pred[e]).count();
        let same_class = (0..n).filter(|&x| truth[x] == truth[e]).count();
        let both = (0..n).filter(|&x| pred[x] == pred[e] && truth[x] == truth[e]).count();
        p_sum += rat(both, same_cluster);
        r_sum += rat(both, same_class);
    }
    let p = p_sum / rat(n, 1);
    let r = r_sum / rat(n, 1);
    let f = harmonic(&p, &r);
    (p, r, f)
}

// ------------------------------------------------------------------ k-means

/// Minimum within-cluster sum of squares over all two-way splits.
pub fn best_two_split(points: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = points.len();
    let mut best = (f64::INFINITY, vec![]);
    for mask in 1u32..(1 << (n - 1)) {
        let labels: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
        let mut wcss = 0.0;
        for c in 0..2 {
            let members: Vec<&Vec<f64>> = (0..n).filter(|&i| labels[i] == c).map(|i| &points[i]).collect();
            let d = points[0].len();
            let mean: Vec<f64> = (0..d)
                .map(|k| members.iter().map(|p| p[k]).sum::<f64>() / members.len() as f64)
                .collect();
            for p in members {
                wcss += p.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            }
        }
        if wcss < best.0 {
            best = (wcss, labels);
        }
    }
    best
}
