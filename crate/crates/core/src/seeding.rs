//! Deterministic RNG streams derived from one master seed.
//!
//! Every consumer of randomness names its stream, so adding paths or
//! episodes never reshuffles the draws of existing ones.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose of an RNG stream. Each (kind, index) pair is an independent
/// ChaCha stream under the same master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    /// Simulated OU path noise, indexed by path.
    SimPath,
    /// Per-path parameter draws of the training environment.
    EnvParams,
    /// Training environment path noise, indexed by path.
    EnvPath,
    /// Path-order shuffle, indexed by episode.
    TrainShuffle,
    /// Epsilon-greedy action draws during training.
    TrainAction,
    /// Action draws for randomized baselines and test harnesses.
    Baseline,
}

impl StreamKind {
    fn id(self) -> u64 {
        match self {
            StreamKind::SimPath => 1,
            StreamKind::EnvParams => 2,
            StreamKind::EnvPath => 3,
            StreamKind::TrainShuffle => 4,
            StreamKind::TrainAction => 5,
            StreamKind::Baseline => 6,
        }
    }
}

/// RNG for the given (master seed, stream kind, index) triple.
pub fn stream(master_seed: u64, kind: StreamKind, index: u64) -> ChaCha8Rng {
    debug_assert!(index < 1 << 56, "stream index exceeds id space");
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(kind.id() << 56 | index);
    rng
}
