//! Test support for blockshelf: fixture apps, a seeded workspace generator
//! and brute-force oracles.

pub mod build;
pub mod fixtures;
pub mod gen;
pub mod oracle;

pub use build::Builder;
pub use fixtures::{
    builtin_fixtures, calculator, fixture_files, fixture_path, fixtures_dir, pusheen, pusheen_tasks,
    pusheen_unshelved, tutorial, Task,
};
pub use gen::{random_workspace, workspace_with_blocks, GenConfig};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic RNG for test case `case` of suite `suite`.
pub fn rng(suite: u64, case: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(suite.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ case)
}
