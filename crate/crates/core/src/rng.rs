use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded generator on an independent stream, so that e.g. initialization and
/// sampling draws never shift each other.
pub(crate) fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) mod streams {
    pub const INIT: u64 = 0;
    pub const TRAIN: u64 = 1;
    pub const SUBWORD_INIT: u64 = 2;
    pub const DOC_INIT: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const INFER: u64 = 5;
}
