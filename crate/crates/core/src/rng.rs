//! Reproducible random streams.
//!
//! Every independent unit of parallel work (a trial, a block of shots, a block of
//! MLE games) draws from its own ChaCha8 stream, addressed by the root seed plus a
//! 64-bit stream id. Results therefore do not depend on how units are scheduled
//! across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

use crate::qstate::QubitState;

/// Root seed of an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RootSeed(pub u64);

impl RootSeed {
    /// Stream `id` of this seed. Distinct ids give independent streams.
    pub fn stream(self, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(id);
        rng
    }

    /// Stream for unit `index` of experiment family `tag`.
    pub fn substream(self, tag: u16, index: u64) -> ChaCha8Rng {
        debug_assert!(index < 1 << 48);
        self.stream((u64::from(tag) << 48) | index)
    }

    /// An independent root seed for sub-experiment `label`, drawn from the reserved
    /// tag `u16::MAX`.
    pub fn child(self, label: u64) -> RootSeed {
        RootSeed(self.substream(u16::MAX, label).random())
    }
}

/// A uniformly random direction on the sphere as `(polar, azimuth)`:
/// `cos(polar)` uniform on `[-1, 1]`, azimuth uniform on `[0, 2 pi)`.
pub fn haar_direction<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let cos_polar: f64 = rng.random_range(-1.0..=1.0);
    let azimuth = rng.random::<f64>() * TAU;
    (cos_polar.acos(), azimuth)
}

/// A Haar-random pure qubit state.
pub fn haar_qubit<R: Rng + ?Sized>(rng: &mut R) -> QubitState {
    let (polar, azimuth) = haar_direction(rng);
    QubitState::from_bloch(polar, azimuth)
}
