use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Identifier of the random generator, recorded in corpus metadata.
pub const GENERATOR_ID: &str = "chacha8-rand_chacha-0.3";

/// Source of the simulator's Bernoulli decisions. Probabilities of exactly
/// 0 or 1 are decided without consulting the source.
pub trait DecisionSource {
    /// Returns true with probability `p`, for `0 < p < 1`.
    fn branch(&mut self, p: f64) -> bool;

    fn chance(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            self.branch(p)
        }
    }
}

/// Seeded ChaCha8 decisions.
#[derive(Debug, Clone)]
pub struct SeededDecisions {
    rng: ChaCha8Rng,
}

impl SeededDecisions {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

/// Uniform in [0, 1) from the top 53 bits.
pub(crate) fn unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl DecisionSource for SeededDecisions {
    fn branch(&mut self, p: f64) -> bool {
        unit(&mut self.rng) < p
    }
}

/// Second, independent stream for cosmetic choices (durations, message
/// templates) so they never perturb the decision sequence.
pub(crate) fn cosmetic_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// SplitMix64 step, used to derive per-run seeds from a base seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Replays a fixed prefix of branch outcomes, then takes `false` and records
/// every branch it sees. Used to enumerate all decision paths.
#[derive(Debug, Clone, Default)]
pub struct ExhaustiveDecisions {
    prefix: Vec<bool>,
    taken: Vec<(bool, f64)>,
}

impl DecisionSource for ExhaustiveDecisions {
    fn branch(&mut self, p: f64) -> bool {
        let choice = self.prefix.get(self.taken.len()).copied().unwrap_or(false);
        self.taken.push((choice, p));
        choice
    }
}

impl ExhaustiveDecisions {
    /// Probability of the path taken so far.
    pub fn weight(&self) -> f64 {
        self.taken
            .iter()
            .map(|&(c, p)| if c { p } else { 1.0 - p })
            .product()
    }

    pub fn depth(&self) -> usize {
        self.taken.len()
    }

    /// The next unexplored path, in depth-first order.
    fn advance(&self) -> Option<Vec<bool>> {
        let last_false = self.taken.iter().rposition(|(c, _)| !c)?;
        let mut next: Vec<bool> = self.taken[..last_false].iter().map(|(c, _)| *c).collect();
        next.push(true);
        Some(next)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("more than {0} decision paths")]
pub struct PathLimit(pub usize);

/// Runs `f` once per decision path and returns each path's weight with its
/// result. The weights sum to 1.
pub fn enumerate_paths<R>(
    limit: usize,
    mut f: impl FnMut(&mut ExhaustiveDecisions) -> R,
) -> Result<Vec<(f64, R)>, PathLimit> {
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    loop {
        if out.len() == limit {
            return Err(PathLimit(limit));
        }
        let mut d = ExhaustiveDecisions { prefix, taken: Vec::new() };
        let r = f(&mut d);
        out.push((d.weight(), r));
        match d.advance() {
            Some(next) => prefix = next,
            None => return Ok(out),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_is_reproducible() {
        let draw = |seed| {
            let mut d = SeededDecisions::new(seed);
            (0..64).map(|_| d.chance(0.5)).collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    #[test]
    fn trivial_probabilities_skip_the_source() {
        let mut d = ExhaustiveDecisions::default();
        assert!(!d.chance(0.0));
        assert!(d.chance(1.0));
        assert_eq!(d.depth(), 0);
    }

    #[test]
    fn enumerates_every_path_once() {
        // Two coins, the second only after heads.
        let paths = enumerate_paths(16, |d| {
            let a = d.chance(0.25);
            let b = a && d.chance(0.5);
            (a, b)
        })
        .unwrap();
        let results: Vec<_> = paths.iter().map(|(_, r)| *r).collect();
        assert_eq!(results, [(false, false), (true, false), (true, true)]);
        let weights: Vec<_> = paths.iter().map(|(w, _)| *w).collect();
        assert_eq!(weights, [0.75, 0.125, 0.125]);
        assert!(enumerate_paths(2, |d| d.chance(0.5) && d.chance(0.5)).is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: Vec<u64> = (0..100).map(|i| derive_seed(42, i)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), seeds.len());
    }
}
