//! Digit map from words over `{0..b-1}^d` to cubes of `[0,1]^d`, random
//! Cantor sets, and floored Euclidean energies.

mod energy;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::tree::{OffspringLaw, Tree};

pub use energy::{cap_criterion, euclid_energy, cube_energy_check, CapCriterionReport, CapRow, CubeEnergyReport};

/// A decreasing kernel profile `g: (0, ∞) -> (0, ∞)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum EuclidGauge {
    /// `t^-alpha`.
    Power { alpha: f64 },
    /// `(1 + log⁺(1/t))^beta`.
    Log { beta: f64 },
    Constant { c: f64 },
}

impl EuclidGauge {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            EuclidGauge::Power { alpha } => t.powf(-alpha),
            EuclidGauge::Log { beta } => (1.0 + (1.0 / t).ln().max(0.0)).powf(beta),
            EuclidGauge::Constant { c } => c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            EuclidGauge::Power { alpha } => alpha >= 0.0 && alpha.is_finite(),
            EuclidGauge::Log { beta } => beta >= 0.0 && beta.is_finite(),
            EuclidGauge::Constant { c } => c > 0.0 && c.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidGauge(format!("{self:?} is not a decreasing positive profile")))
        }
    }
}

/// A cube of side `side` with lower corner `anchor`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub anchor: Vec<f64>,
    pub side: f64,
}

/// `R(ω_1 … ω_k) = Σ b^-n ω_n`, each letter given by its `d` digits.
pub fn map_r(b: u32, d: usize, word: &[Vec<u32>]) -> Result<Cube> {
    if b < 2 || d == 0 {
        return Err(Error::InvalidArgument(format!("need b >= 2 and d >= 1, got b = {b}, d = {d}")));
    }
    let mut anchor = vec![0.0; d];
    let mut side = 1.0;
    for (n, letter) in word.iter().enumerate() {
        if letter.len() != d {
            return Err(Error::InvalidArgument(format!("letter {n} has {} digits, expected {d}", letter.len())));
        }
        side /= b as f64;
        for (x, &digit) in anchor.iter_mut().zip(letter) {
            if digit >= b {
                return Err(Error::AlphabetMismatch { expected: b, found: digit + 1 });
            }
            *x += digit as f64 * side;
        }
    }
    Ok(Cube { anchor, side })
}

/// Edge letters of a tree embedded in the `b^d`-ary tree. Letter `ℓ` has
/// digits `(ℓ / b^i) mod b` for `i < d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeLabeling {
    b: u32,
    d: usize,
    letters: Vec<u32>,
}

impl CubeLabeling {
    pub fn new(tree: &Tree, b: u32, d: usize, letters: Vec<u32>) -> Result<Self> {
        let alphabet = alphabet_size(b, d)?;
        if letters.len() != tree.len() {
            return Err(Error::InvalidArgument(format!("{} letters for {} vertices", letters.len(), tree.len())));
        }
        let widest = tree.child_counts().iter().copied().max().unwrap_or(0);
        if widest > alphabet {
            return Err(Error::AlphabetMismatch { expected: alphabet, found: widest });
        }
        let mut seen = vec![u32::MAX; alphabet as usize];
        for v in 0..tree.leaves().start {
            for c in tree.children(v) {
                let l = letters[c];
                if l >= alphabet {
                    return Err(Error::AlphabetMismatch { expected: alphabet, found: l + 1 });
                }
                if seen[l as usize] == v as u32 {
                    return Err(Error::InvalidArgument(format!("vertex {v} has two children labeled {l}")));
                }
                seen[l as usize] = v as u32;
            }
        }
        Ok(Self { b, d, letters })
    }

    /// Children take letters `0, 1, 2, …` in order.
    pub fn canonical(tree: &Tree, b: u32, d: usize) -> Result<Self> {
        let mut letters = vec![0; tree.len()];
        for v in 0..tree.leaves().start {
            for (i, c) in tree.children(v).enumerate() {
                letters[c] = i as u32;
            }
        }
        Self::new(tree, b, d, letters)
    }

    /// Each sibling set gets a uniformly random injection into the alphabet.
    pub fn random(tree: &Tree, b: u32, d: usize, seed: u64) -> Result<Self> {
        let alphabet = alphabet_size(b, d)?;
        let mut rng = rng::rng(seed);
        let mut pool: Vec<u32> = (0..alphabet).collect();
        let mut letters = vec![0; tree.len()];
        for v in 0..tree.leaves().start {
            let kids = tree.children(v);
            if kids.len() > pool.len() {
                return Err(Error::AlphabetMismatch { expected: alphabet, found: kids.len() as u32 });
            }
            let (chosen, _) = pool.partial_shuffle(&mut rng, kids.len());
            for (c, &l) in kids.zip(chosen.iter()) {
                letters[c] = l;
            }
        }
        Self::new(tree, b, d, letters)
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn letter(&self, v: usize) -> u32 {
        self.letters[v]
    }

    pub fn digits(&self, v: usize) -> Vec<u32> {
        let mut l = self.letters[v];
        (0..self.d)
            .map(|_| {
                let digit = l % self.b;
                l /= self.b;
                digit
            })
            .collect()
    }

    /// Integer coordinates of every vertex's cube in units of `b^-depth`,
    /// laid out as `d` consecutive entries per vertex.
    pub fn integer_coords(&self, tree: &Tree) -> Vec<u64> {
        let d = self.d;
        let mut coords = vec![0u64; tree.len() * d];
        for v in 1..tree.len() {
            let p = tree.parent(v).expect("non-root");
            let digits = self.digits(v);
            for i in 0..d {
                coords[v * d + i] = coords[p * d + i] * self.b as u64 + digits[i] as u64;
            }
        }
        coords
    }

    /// The cube `R(σ)`.
    pub fn cube(&self, tree: &Tree, v: usize) -> Cube {
        let mut path = Vec::with_capacity(tree.depth(v));
        let mut u = v;
        while let Some(p) = tree.parent(u) {
            path.push(self.digits(u));
            u = p;
        }
        path.reverse();
        map_r(self.b, self.d, &path).expect("labels validated")
    }
}

fn alphabet_size(b: u32, d: usize) -> Result<u32> {
    if b < 2 || d == 0 {
        return Err(Error::InvalidArgument(format!("need b >= 2 and d >= 1, got b = {b}, d = {d}")));
    }
    (b as u64)
        .checked_pow(d as u32)
        .filter(|&n| n <= u32::MAX as u64 / 2)
        .map(|n| n as u32)
        .ok_or(Error::TooLarge { what: "cube alphabet", needed: (b as u128).saturating_pow(d as u32), cap: u32::MAX as u128 / 2 })
}

/// Galton-Watson tree of kept subcubes: each kept cube keeps `k` of its
/// `b^d` subcubes with probability `q_k`, placed uniformly at random.
pub fn cantor_sample(q: &OffspringLaw, b: u32, d: usize, height: usize, seed: u64) -> Result<(Tree, CubeLabeling)> {
    let alphabet = alphabet_size(b, d)?;
    if q.max_children() > alphabet {
        return Err(Error::InvalidLaw(format!(
            "law keeps up to {} subcubes but only {alphabet} exist",
            q.max_children()
        )));
    }
    let tree = Tree::sample_gw(q, height, rng::derive_seed(seed, "cantor-tree", 0))?;
    let labeling = CubeLabeling::random(&tree, b, d, rng::derive_seed(seed, "cantor-letters", 0))?;
    Ok((tree, labeling))
}
