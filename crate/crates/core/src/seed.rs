//! Seeded random streams.
//!
//! Every random draw in the crate goes through a [`Seed`]. The generator is
//! ChaCha8 (`rand_chacha::ChaCha8Rng`), keyed by `ChaCha8Rng::seed_from_u64`
//! of the seed value. Independent purposes use distinct ChaCha stream ids
//! (see [`Stream`]), so drawing more numbers for one purpose never shifts
//! another. Nested experiments derive child seeds with [`Seed::derive`],
//! which is a SplitMix64 finalizer over `(seed, tag)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct Seed(pub u64);

/// Stream ids for the per-purpose substreams of a seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Gaussian = 1,
    FactorLeft = 2,
    FactorRight = 3,
    KrylovStart = 4,
    Breakdown = 5,
    Sketch = 6,
    Padding = 7,
    Init = 8,
    Batch = 9,
    Data = 10,
}

impl Seed {
    pub fn new(value: u64) -> Self {
        Seed(value)
    }

    pub fn rng(self, stream: Stream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream as u64);
        rng
    }

    /// Child seed for a numbered sub-experiment (repeat, step, size index).
    pub fn derive(self, tag: u64) -> Seed {
        let mut z = self
            .0
            .wrapping_add(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(tag.wrapping_mul(0xD1B5_4A32_D192_ED03));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Seed(z ^ (z >> 31))
    }
}

impl From<u64> for Seed {
    fn from(value: u64) -> Self {
        Seed(value)
    }
}

pub(crate) fn fill_normal(rng: &mut ChaCha8Rng, out: &mut [f64], mean: f64, std: f64) {
    if mean == 0.0 && std == 1.0 {
        for x in out.iter_mut() {
            *x = StandardNormal.sample(rng);
        }
    } else {
        let dist = Normal::new(mean, std).expect("std validated by caller");
        for x in out.iter_mut() {
            *x = dist.sample(rng);
        }
    }
}

pub(crate) fn normal_vec(rng: &mut ChaCha8Rng, len: usize, mean: f64, std: f64) -> Vec<f64> {
    let mut v = vec![0.0; len];
    fill_normal(rng, &mut v, mean, std);
    v
}
