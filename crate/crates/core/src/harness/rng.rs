use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// A reproducible random stream identified by `(root_seed, stream_id)`.
///
/// Backed by ChaCha8, a counter-based generator: the root seed fixes the key,
/// the stream id selects an independent 2^64-block keystream, and the word
/// position is the counter. Replicate `r` of an experiment always draws from
/// stream `r`, so output never depends on scheduling.
#[derive(Clone, Debug)]
pub struct RngStream {
    root_seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

pub fn derive_stream(root_seed: u64, stream_id: u64) -> RngStream {
    let mut inner = ChaCha8Rng::seed_from_u64(root_seed);
    inner.set_stream(stream_id);
    RngStream {
        root_seed,
        stream_id,
        inner,
    }
}

impl RngStream {
    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// A child stream, deterministic in `(root_seed, stream_id, label)`.
    pub fn substream(&self, label: u64) -> RngStream {
        let mixed = splitmix(self.root_seed ^ splitmix(self.stream_id.wrapping_add(0x9e37_79b9)));
        derive_stream(mixed, label)
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        // 53 random mantissa bits
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Uniform integer in [0, bound).
    pub fn index(&mut self, bound: usize) -> usize {
        use rand::Rng;
        self.inner.random_range(0..bound)
    }

    pub fn exp1(&mut self) -> f64 {
        rand_distr::Exp1.sample(&mut self.inner)
    }

    pub fn sign(&mut self) -> f64 {
        if self.inner.next_u32() & 1 == 1 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn normals(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.normal()).collect()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.inner);
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_key_same_sequence() {
        let mut a = derive_stream(42, 0);
        let mut b = derive_stream(42, 0);
        for _ in 0..100 {
            assert_eq!(a.normal().to_bits(), b.normal().to_bits());
        }
    }

    #[test]
    fn streams_are_uncorrelated() {
        let n = 100_000;
        let mut a = derive_stream(42, 0);
        let mut b = derive_stream(42, 1);
        let x = a.normals(n);
        let y = b.normals(n);
        let mx = x.iter().sum::<f64>() / n as f64;
        let my = y.iter().sum::<f64>() / n as f64;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (u, v) in x.iter().zip(&y) {
            sxy += (u - mx) * (v - my);
            sxx += (u - mx).powi(2);
            syy += (v - my).powi(2);
        }
        let corr = sxy / (sxx * syy).sqrt();
        assert!(corr.abs() < 0.01, "corr = {corr}");
    }

    #[test]
    fn counter_advances() {
        let mut s = derive_stream(7, 3);
        assert_eq!(s.counter(), 0);
        s.next_u64();
        assert_eq!(s.counter(), 2);
        assert_eq!(s.root_seed(), 7);
        assert_eq!(s.stream_id(), 3);
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut s = derive_stream(1, 1);
        for _ in 0..10_000 {
            let u = s.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
