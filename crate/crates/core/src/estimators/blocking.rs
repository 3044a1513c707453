//! Reblocking error analysis for autocorrelated Monte Carlo series.
//!
//! The series is repeatedly halved by pairwise averaging. At each level the
//! standard error of the ratio `sum num / sum den` is estimated by a
//! delete-one jackknife over blocks, and the plateau level is the smallest
//! block size `B` with `B^3 > 2 n (se_B / se_0)^4`.

use crate::Real;

/// Fewer samples than this and the error is flagged unreliable.
pub const MIN_SAMPLES: usize = 64;

/// Keep at least this many blocks at the deepest level.
const MIN_BLOCKS: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct BlockingResult<T> {
    pub mean: T,
    pub error: T,
    /// False when the series is too short or no plateau was reached.
    pub reliable: bool,
    /// Chosen level; block size is `2^level`.
    pub level: usize,
    /// Error estimate at every level, for inspection.
    pub per_level: Vec<T>,
}

/// Standard error of the mean of a plain series.
pub fn blocking_error<T: Real>(series: &[T]) -> BlockingResult<T> {
    let pairs: Vec<(T, T)> = series.iter().map(|&x| (x, T::one())).collect();
    ratio_blocking_error(&pairs)
}

/// Standard error of `sum a / sum b` for a series of `(a, b)` pairs.
pub fn ratio_blocking_error<T: Real>(series: &[(T, T)]) -> BlockingResult<T> {
    let n = series.len();
    let (sa, sb) = sums(series);
    let mean = if sb != T::zero() { sa / sb } else { T::nan() };
    if n < 2 {
        return BlockingResult {
            mean,
            error: T::nan(),
            reliable: false,
            level: 0,
            per_level: Vec::new(),
        };
    }

    let mut per_level = Vec::new();
    let mut blocks: Vec<(T, T)> = series.to_vec();
    loop {
        per_level.push(jackknife_ratio_se(&blocks));
        if blocks.len() / 2 < MIN_BLOCKS {
            break;
        }
        blocks = blocks
            .chunks_exact(2)
            .map(|c| (c[0].0 + c[1].0, c[0].1 + c[1].1))
            .collect();
    }

    let se0 = per_level[0];
    let nf = T::from_usize(n).unwrap();
    let two = T::lit(2.0);
    let plateau = per_level.iter().enumerate().position(|(level, &se)| {
        let b = T::from_usize(1usize << level).unwrap();
        if se0 == T::zero() {
            return true;
        }
        let ratio = se / se0;
        b * b * b > two * nf * ratio.powi(4)
    });
    let (level, reliable) = match plateau {
        Some(l) => (l, n >= MIN_SAMPLES),
        None => (per_level.len() - 1, false),
    };
    BlockingResult {
        mean,
        error: per_level[level],
        reliable,
        level,
        per_level,
    }
}

fn sums<T: Real>(xs: &[(T, T)]) -> (T, T) {
    xs.iter()
        .fold((T::zero(), T::zero()), |(a, b), &(x, y)| (a + x, b + y))
}

/// Delete-one jackknife standard error of `sum a / sum b` over blocks.
fn jackknife_ratio_se<T: Real>(blocks: &[(T, T)]) -> T {
    let nb = blocks.len();
    if nb < 2 {
        return T::nan();
    }
    let (sa, sb) = sums(blocks);
    let loo: Vec<T> = blocks
        .iter()
        .map(|&(a, b)| (sa - a) / (sb - b))
        .collect();
    let nbf = T::from_usize(nb).unwrap();
    let m = loo.iter().copied().sum::<T>() / nbf;
    let var = loo.iter().map(|&x| (x - m) * (x - m)).sum::<T>();
    ((nbf - T::one()) / nbf * var).sqrt()
}
