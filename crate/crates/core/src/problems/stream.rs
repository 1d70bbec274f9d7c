use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Position in a reproducible sample sequence.
///
/// Sample `k` of a stream is drawn from ChaCha8 keyed by `base_seed`
/// (expanded with `seed_from_u64`) on stream id `k`, so a sample depends only
/// on `(base_seed, counter)` and never on how many draws preceded it in
/// another stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SampleStream {
    pub base_seed: u64,
    pub counter: u64,
}

impl SampleStream {
    pub fn new(base_seed: u64) -> Self {
        SampleStream { base_seed, counter: 0 }
    }

    /// Independent stream number `index` derived from `base_seed`.
    pub fn substream(base_seed: u64, index: u64) -> Self {
        SampleStream::new(base_seed ^ index)
    }

    /// Generator for the sample at the current counter.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        rng.set_stream(self.counter);
        rng
    }

    pub fn advanced(self, by: u64) -> Self {
        SampleStream {
            counter: self.counter + by,
            ..self
        }
    }
}
