//! Counter-based random substreams.
//!
//! Every stream is a ChaCha8 generator keyed by the master seed with the stream
//! index as its ChaCha stream id, so run `i` draws the same numbers no matter
//! which thread executes it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream reserved for per-battery quantities such as the rotation axis.
pub const BATTERY_STREAM: u64 = u64::MAX;

pub fn substream(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}
