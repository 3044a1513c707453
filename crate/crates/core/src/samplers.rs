//! Seeded random streams and the discrete draws used for spawning.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::{Error, Result};

/// Reproducible random stream identified by `(seed, stream id)`.
///
/// ChaCha8 is counter based, so streams are independent and the output is
/// identical on every platform.
#[derive(Clone, Debug)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::from_seed(expand_seed(seed));
        rng.set_stream(stream);
        RngStream { rng }
    }

    /// Stream for one occupied configuration at one step: the key is derived
    /// from `(seed, step)` and the stream id is the packed configuration.
    pub fn for_cell(seed: u64, step: u64, cell_key: u64) -> Self {
        let mut rng = ChaCha8Rng::from_seed(expand_seed(splitmix64(seed ^ splitmix64(step))));
        rng.set_stream(cell_key);
        RngStream { rng }
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn expand_seed(seed: u64) -> [u8; 32] {
    let mut out = [0u8; 32];
    let mut s = seed;
    for chunk in out.chunks_exact_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    out
}

/// Exact Binomial(n, q) draw.
pub fn binomial(n: u64, q: f64, rng: &mut RngStream) -> Result<u64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidProbability(q));
    }
    if n == 0 || q == 0.0 {
        return Ok(0);
    }
    if q == 1.0 {
        return Ok(n);
    }
    let dist = Binomial::new(n, q).map_err(|_| Error::InvalidProbability(q))?;
    Ok(dist.sample(rng))
}

/// Multinomial draw by sequential conditional binomials, added into `counts`.
///
/// `probs` must sum to one within `1e-12`; `counts.len()` must match.
pub fn multinomial_into(n: u64, probs: &[f64], rng: &mut RngStream, counts: &mut [u64]) -> Result<()> {
    debug_assert_eq!(probs.len(), counts.len());
    if n == 0 {
        return Ok(());
    }
    let mut remaining = n;
    let mut mass = 1.0;
    let last = probs.len() - 1;
    for (k, &p) in probs.iter().enumerate() {
        if k == last {
            counts[k] += remaining;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 1.0 };
        let c = binomial(remaining, q, rng)?;
        counts[k] += c;
        remaining -= c;
        mass -= p;
        if remaining == 0 {
            break;
        }
    }
    Ok(())
}

pub fn multinomial(n: u64, probs: &[f64], rng: &mut RngStream) -> Result<Vec<u64>> {
    check_probs(probs)?;
    let mut counts = vec![0; probs.len()];
    multinomial_into(n, probs, rng, &mut counts)?;
    debug_assert_eq!(counts.iter().sum::<u64>(), n);
    Ok(counts)
}

fn check_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::MalformedProbabilities("empty".into()));
    }
    if let Some(p) = probs.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
        return Err(Error::MalformedProbabilities(format!("entry {p}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::MalformedProbabilities(format!("sum {total}")));
    }
    Ok(())
}

/// `floor(x) + Bernoulli(frac(x))`; unbiased for `x >= 0`.
#[inline]
pub fn stochastic_round(x: f64, rng: &mut RngStream) -> Result<u64> {
    if !(x >= 0.0) {
        return Err(Error::NegativeMagnitude(x));
    }
    let whole = x.floor();
    let frac = x - whole;
    let up = frac > 0.0 && rng.uniform() < frac;
    Ok(whole as u64 + up as u64)
}

/// Spawning probabilities out of one configuration for one amplitude
/// component.
///
/// `total` is `P_tot = sum_k |A_k| dt`; `probs[k] = |A_k| dt / P_tot`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SpawnTable {
    pub total: f64,
    pub probs: Vec<f64>,
}

impl SpawnTable {
    pub fn clear(&mut self) {
        self.total = 0.0;
        self.probs.clear();
    }

    /// Rebuild from non-negative weights `|A_k| dt`.
    pub fn fill(&mut self, weights: impl Iterator<Item = f64>) {
        self.probs.clear();
        self.probs.extend(weights);
        self.total = self.probs.iter().sum();
        if self.total > 0.0 {
            let inv = self.total.recip();
            self.probs.iter_mut().for_each(|p| *p *= inv);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0.0
    }

    /// Children per target for `parents` walkers, added into `counts`.
    ///
    /// Expected count on target `k` is `parents * P_tot * probs[k]`. When
    /// `P_tot > 1` the integer part is realised as full rounds of `parents`
    /// children and the remainder binomially.
    pub fn spawn(&self, parents: u64, rng: &mut RngStream, counts: &mut [u64]) -> Result<()> {
        if parents == 0 || self.total == 0.0 {
            return Ok(());
        }
        let full = self.total.floor();
        let frac = self.total - full;
        for _ in 0..full as u64 {
            multinomial_into(parents, &self.probs, rng, counts)?;
        }
        let n_sp = binomial(parents, frac, rng)?;
        multinomial_into(n_sp, &self.probs, rng, counts)
    }
}
