//! Random generation of well-typed terms and datasets.
//!
//! A type is drawn first, then a term of that type is built top-down by
//! inspecting the shape of the type. Every example is rejected and redrawn
//! when no term of the drawn type fits the depth budget or when the term
//! needs more binders than there are reserved names.
//!
//! Randomness: example `i` of a dataset uses its own ChaCha8 stream seeded
//! with [`sub_seed`]`(seed, i)` (through `rand_core`'s `seed_from_u64`), so
//! results do not depend on how the work is spread over threads.

mod split;
mod term;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rename::{bfs_rename, RenameError};
use crate::syntax::{Term, Type, TypingContext};

pub use split::{split_dataset, SplitError, Splits};
pub use term::{gen_term, min_term_depth};

/// Consecutive rejected draws tolerated for one example.
pub const MAX_RETRIES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// No printed target type appears in two splits.
    TypeDisjoint,
    /// No printed term appears in two splits.
    TermDisjoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub max_type_depth: usize,
    pub max_term_depth: usize,
    pub p_branch: f64,
    pub n_examples: usize,
    pub split_ratios: [f64; 3],
    pub split_mode: SplitMode,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_type_depth: 7,
            max_term_depth: 7,
            p_branch: 0.5,
            n_examples: 1000,
            split_ratios: [0.8, 0.1, 0.1],
            split_mode: SplitMode::TypeDisjoint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("no term of type `{ty}` fits in depth {max_depth}")]
    Unproducible { ty: Type, max_depth: usize },
    #[error("example {id}: gave up after {MAX_RETRIES} consecutive rejected draws")]
    RetriesExhausted { id: u64 },
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.max_type_depth == 0 || self.max_term_depth == 0 {
            return Err(GenError::Config("depths must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p_branch) {
            return Err(GenError::Config(format!(
                "p_branch {} is not a probability",
                self.p_branch
            )));
        }
        if self.split_ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(GenError::Config("split ratios must be non-negative".into()));
        }
        let sum: f64 = self.split_ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(GenError::Config(format!("split ratios sum to {sum}, not 1")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Example {
    pub id: u64,
    /// BFS-renamed term.
    pub term: Term,
    pub target_type: Type,
    pub term_depth: usize,
    pub type_depth: usize,
}

/// SplitMix64 finalizer over `seed` and `stream`; the per-example seed.
pub fn sub_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn example_rng(seed: u64, id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(seed, id))
}

/// Draws a type: branch into an arrow with probability `p_branch` while the
/// depth allows it, otherwise pick a base type of `ctx` uniformly.
pub fn gen_type<R: Rng + ?Sized>(
    rng: &mut R,
    ctx: &TypingContext,
    max_depth: usize,
    p_branch: f64,
) -> Type {
    let branch = rng.gen_bool(p_branch);
    if branch && max_depth > 1 {
        let left = gen_type(rng, ctx, max_depth - 1, p_branch);
        let right = gen_type(rng, ctx, max_depth - 1, p_branch);
        Type::arrow(left, right)
    } else {
        let bases = ctx.base_types();
        assert!(!bases.is_empty(), "context has no base types");
        Type::Base(bases[rng.gen_range(0..bases.len())].clone())
    }
}

/// Generates example `id` of the dataset described by `cfg`.
pub fn gen_example(cfg: &GenConfig, ctx: &TypingContext, id: u64) -> Result<Example, GenError> {
    let mut rng = example_rng(cfg.seed, id);
    for _ in 0..MAX_RETRIES {
        let ty = gen_type(&mut rng, ctx, cfg.max_type_depth, cfg.p_branch);
        let raw = match gen_term(&mut rng, &ty, ctx, cfg.max_term_depth, cfg.p_branch) {
            Ok(t) => t,
            Err(GenError::Unproducible { .. }) => continue,
            Err(e) => return Err(e),
        };
        let term = match bfs_rename(&raw) {
            Ok(t) => t,
            Err(RenameError::TooManyBinders(_)) => continue,
            Err(e) => return Err(GenError::Config(e.to_string())),
        };
        return Ok(Example {
            id,
            term_depth: term.depth(),
            type_depth: ty.depth(),
            term,
            target_type: ty,
        });
    }
    Err(GenError::RetriesExhausted { id })
}

/// Generates `cfg.n_examples` examples under the global context `{x : T}`.
pub fn gen_dataset(cfg: &GenConfig) -> Result<Vec<Example>, GenError> {
    gen_dataset_in(cfg, &TypingContext::global())
}

pub fn gen_dataset_in(cfg: &GenConfig, ctx: &TypingContext) -> Result<Vec<Example>, GenError> {
    cfg.validate()?;
    (0..cfg.n_examples as u64)
        .into_par_iter()
        .map(|id| gen_example(cfg, ctx, id))
        .collect()
}

/// [`gen_dataset`] on a dedicated pool of `workers` threads.
pub fn gen_dataset_with_workers(cfg: &GenConfig, workers: usize) -> Result<Vec<Example>, GenError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| GenError::Config(e.to_string()))?;
    pool.install(|| gen_dataset(cfg))
}
