//! Deterministic delay schedules.
//!
//! A schedule decides which memory entries are refreshed (at the new iterate
//! `x_{k+1}`) after step `k`. The refresh set is a pure function of the
//! schedule, `k`, and the current stamps, so a step never carries hidden RNG
//! state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DelaySchedule {
    /// Refresh component `k mod N` after step `k`. Delays reach `N - 1`.
    Cyclic,
    /// Each component refreshes independently with probability `p`, and is
    /// forced to refresh when its delay would otherwise exceed `max_delay`.
    RandomBounded { max_delay: usize, p: f64, seed: u64 },
    /// Component `i` refreshes every `max_delay + 1` steps with phase `i`,
    /// so its delay cycles through `0..=max_delay`.
    Constant { max_delay: usize },
}

impl DelaySchedule {
    pub fn validate(&self) -> Result<()> {
        if let Self::RandomBounded { p, .. } = *self {
            if !(0.0..=1.0).contains(&p) {
                return invalid(format!("refresh probability p must lie in [0, 1], got {p}"));
            }
        }
        Ok(())
    }

    /// Effective delay bound `T` for `n` components.
    pub fn max_delay(&self, n: usize) -> usize {
        match *self {
            Self::Cyclic => n.saturating_sub(1),
            Self::RandomBounded { max_delay, .. } | Self::Constant { max_delay } => max_delay,
        }
    }

    /// Components to refresh after step `k`, ascending. `stamps[i]` is the
    /// iteration whose iterate produced entry `i`.
    pub fn refresh_set(&self, k: usize, stamps: &[usize]) -> Vec<usize> {
        let n = stamps.len();
        match *self {
            Self::Cyclic => vec![k % n],
            Self::Constant { max_delay } => {
                let period = max_delay + 1;
                (0..n).filter(|i| (k + 1 + i).is_multiple_of(period)).collect()
            }
            Self::RandomBounded { max_delay, p, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                (0..n)
                    .filter(|&i| {
                        // Draw for every component so the stream layout is fixed.
                        let draw = rng.random::<f64>() < p;
                        let forced = k + 1 - stamps[i] > max_delay;
                        draw || forced
                    })
                    .collect()
            }
        }
    }
}
