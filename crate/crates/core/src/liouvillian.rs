//! Element-wise access to the shifted, importance-weighted Liouvillian.
//!
//! Configurations are basis operators `|row><col|`. For a source pair the
//! superoperator couples to targets through three kinds of moves: `H` acting
//! from the left (row changes), `H` acting from the right (column changes),
//! and the jump term `gamma * F rho F^dag` with `F = S^-` (both lowered).

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::lattice::{SpinConfig, XyzModel};
use crate::Real;

/// Basis operator `|row><col|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConfigPair {
    pub row: SpinConfig,
    pub col: SpinConfig,
}

impl ConfigPair {
    #[inline]
    pub const fn new(row: SpinConfig, col: SpinConfig) -> Self {
        ConfigPair { row, col }
    }

    #[inline]
    pub const fn diagonal(c: SpinConfig) -> Self {
        ConfigPair { row: c, col: c }
    }

    #[inline]
    pub fn is_diagonal(self) -> bool {
        self.row == self.col
    }

    /// Packed `row | col << 32`; unique per pair.
    #[inline]
    pub fn key(self) -> u64 {
        self.row.0 as u64 | (self.col.0 as u64) << 32
    }

    #[inline]
    pub fn from_key(key: u64) -> Self {
        ConfigPair {
            row: SpinConfig(key as u32),
            col: SpinConfig((key >> 32) as u32),
        }
    }

    /// Hermitian partner `|col><row|`.
    pub fn transpose(self) -> Self {
        ConfigPair {
            row: self.col,
            col: self.row,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Connection<T> {
    pub target: ConfigPair,
    pub amplitude: Complex<T>,
}

/// Off-diagonal configurations carry weight `exp(-p)`, diagonal ones 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceScheme<T> {
    pub p: T,
}

impl<T: Real> ImportanceScheme<T> {
    pub fn new(p: T) -> Self {
        ImportanceScheme { p }
    }

    pub fn none() -> Self {
        ImportanceScheme { p: T::zero() }
    }

    pub fn weight(&self, pair: ConfigPair) -> T {
        if pair.is_diagonal() {
            T::one()
        } else {
            (-self.p).exp()
        }
    }

    /// `w(target) / w(source)`.
    #[inline]
    pub fn ratio(&self, source_diagonal: bool, target_diagonal: bool) -> T {
        match (source_diagonal, target_diagonal) {
            (true, false) => (-self.p).exp(),
            (false, true) => self.p.exp(),
            _ => T::one(),
        }
    }
}

impl<T: Real> Default for ImportanceScheme<T> {
    fn default() -> Self {
        Self::none()
    }
}

/// `L~_{pair,pair}`: commutator energy difference, decay and shift.
///
/// Importance weights cancel on the diagonal.
pub fn diagonal_element<T: Real>(model: &XyzModel<T>, pair: ConfigPair, shift: T) -> Complex<T> {
    let half_gamma = model.params.gamma * T::lit(0.5);
    let up = T::from_u32(pair.row.count_up() + pair.col.count_up()).unwrap();
    let de = model.hamiltonian_diagonal(pair.row) - model.hamiltonian_diagonal(pair.col);
    Complex::new(-shift - half_gamma * up, -de)
}

/// Scratch buffers reused across [`connections_into`] calls.
#[derive(Default)]
pub struct ConnectionScratch<T> {
    row_moves: Vec<(SpinConfig, Complex<T>)>,
    col_moves: Vec<(SpinConfig, Complex<T>)>,
}

/// All off-diagonal superoperator elements out of `pair`, appended to `out`.
pub fn connections_into<T: Real>(
    model: &XyzModel<T>,
    pair: ConfigPair,
    importance: &ImportanceScheme<T>,
    scratch: &mut ConnectionScratch<T>,
    out: &mut Vec<Connection<T>>,
) {
    let src_diag = pair.is_diagonal();
    let zero = Complex::new(T::zero(), T::zero());
    let minus_i = Complex::new(T::zero(), -T::one());
    let plus_i = Complex::new(T::zero(), T::one());

    scratch.row_moves.clear();
    model.hamiltonian_offdiagonal_into(pair.row, &mut scratch.row_moves);
    for &(r, a) in &scratch.row_moves {
        let target = ConfigPair::new(r, pair.col);
        let w = importance.ratio(src_diag, target.is_diagonal());
        let amp = minus_i * a * w;
        if amp != zero {
            out.push(Connection { target, amplitude: amp });
        }
    }

    scratch.col_moves.clear();
    model.hamiltonian_offdiagonal_into(pair.col, &mut scratch.col_moves);
    for &(c, a) in &scratch.col_moves {
        let target = ConfigPair::new(pair.row, c);
        let w = importance.ratio(src_diag, target.is_diagonal());
        let amp = plus_i * a.conj() * w;
        if amp != zero {
            out.push(Connection { target, amplitude: amp });
        }
    }

    let gamma = model.params.gamma;
    if gamma != T::zero() {
        let both = pair.row.0 & pair.col.0;
        let mut bits = both;
        while bits != 0 {
            let k = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let target = ConfigPair::new(pair.row.lower(k), pair.col.lower(k));
            let w = importance.ratio(src_diag, target.is_diagonal());
            out.push(Connection {
                target,
                amplitude: Complex::new(gamma * w, T::zero()),
            });
        }
    }
}

pub fn connections<T: Real>(
    model: &XyzModel<T>,
    pair: ConfigPair,
    importance: &ImportanceScheme<T>,
) -> Vec<Connection<T>> {
    let mut out = Vec::new();
    connections_into(model, pair, importance, &mut ConnectionScratch::default(), &mut out);
    out
}

/// Largest stable Euler step estimated from Gershgorin column sums.
///
/// Only a handful of extremal pairs are probed (all-up, all-down, the
/// checkerboards and their crossings); returns `+inf` when every probed
/// column is zero. Meant for warnings, not as a hard limit.
pub fn stability_bound<T: Real>(model: &XyzModel<T>) -> T {
    let n = model.n_sites();
    let up = SpinConfig::all_up(n);
    let down = SpinConfig::ALL_DOWN;
    let mut checker = 0u32;
    for r in 0..model.lattice.rows {
        for c in 0..model.lattice.cols {
            if (r + c) % 2 == 0 {
                checker |= 1 << (r * model.lattice.cols + c);
            }
        }
    }
    let a = SpinConfig(checker);
    let b = SpinConfig(checker ^ up.0);
    let probes = [up, down, a, b];
    let importance = ImportanceScheme::none();
    let mut scratch = ConnectionScratch::default();
    let mut conns = Vec::new();
    let mut widest = T::zero();
    for &r in &probes {
        for &c in &probes {
            let pair = ConfigPair::new(r, c);
            conns.clear();
            connections_into(model, pair, &importance, &mut scratch, &mut conns);
            let sum = diagonal_element(model, pair, T::zero()).norm()
                + conns.iter().map(|x| x.amplitude.norm()).sum::<T>();
            widest = widest.max(sum);
        }
    }
    if widest == T::zero() {
        T::infinity()
    } else {
        widest.recip()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, ModelParams};

    const UP: SpinConfig = SpinConfig(1);
    const DN: SpinConfig = SpinConfig(0);

    fn single_spin(h: f64) -> XyzModel<f64> {
        XyzModel::new(
            build_lattice(1, 1, false).unwrap(),
            ModelParams::xyz(0.0, 0.0, 0.0).with_field(h, 0.0),
        )
    }

    #[test]
    fn single_spin_diagonal() {
        let m = single_spin(0.0);
        assert_eq!(diagonal_element(&m, ConfigPair::diagonal(DN), 0.0), Complex::new(0.0, 0.0));
        assert_eq!(diagonal_element(&m, ConfigPair::diagonal(UP), 0.0), Complex::new(-1.0, 0.0));
        assert_eq!(diagonal_element(&m, ConfigPair::new(UP, DN), 0.0), Complex::new(-0.5, 0.0));
        assert_eq!(diagonal_element(&m, ConfigPair::diagonal(DN), 0.3), Complex::new(-0.3, 0.0));
    }

    #[test]
    fn single_spin_jump() {
        let m = single_spin(0.0);
        let c = connections(&m, ConfigPair::diagonal(UP), &ImportanceScheme::none());
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].target, ConfigPair::diagonal(DN));
        assert_eq!(c[0].amplitude, Complex::new(1.0, 0.0));
        assert!(connections(&m, ConfigPair::new(UP, DN), &ImportanceScheme::none()).is_empty());
    }

    #[test]
    fn exchange_row_move() {
        let m = XyzModel::new(build_lattice(1, 2, false).unwrap(), ModelParams::xyz(0.225, 0.335, 0.25));
        let pair = ConfigPair::new(SpinConfig(0b01), SpinConfig(0b00));
        let c = connections(&m, pair, &ImportanceScheme::none());
        let hit = c
            .iter()
            .find(|x| x.target == ConfigPair::new(SpinConfig(0b10), SpinConfig(0b00)))
            .unwrap();
        assert!((hit.amplitude - Complex::new(0.0, -0.14)).norm() < 1e-15);
    }

    #[test]
    fn importance_weighting() {
        let m = XyzModel::new(build_lattice(1, 2, false).unwrap(), ModelParams::xyz(0.225, 0.335, 0.25));
        let pair = ConfigPair::diagonal(SpinConfig(0b11));
        let c = connections(&m, pair, &ImportanceScheme::new(1.5));
        let hit = c
            .iter()
            .find(|x| x.target == ConfigPair::new(SpinConfig(0b00), SpinConfig(0b11)))
            .unwrap();
        let expect = Complex::new(0.0, -1.0) * Complex::new(-0.0275, 0.0) * (-1.5f64).exp();
        assert!((hit.amplitude - expect).norm() < 1e-15);
    }

    #[test]
    fn unweighting_recovers_plain_amplitudes() {
        let m = XyzModel::new(
            build_lattice(2, 2, true).unwrap(),
            ModelParams::xyz(0.225, 0.335, 0.25).with_field(0.1, 0.4),
        );
        let imp = ImportanceScheme::new(2.5);
        for r in 0..16 {
            for c in 0..16 {
                let pair = ConfigPair::new(SpinConfig(r), SpinConfig(c));
                let plain = connections(&m, pair, &ImportanceScheme::none());
                let weighted = connections(&m, pair, &imp);
                assert_eq!(plain.len(), weighted.len());
                for (a, b) in plain.iter().zip(&weighted) {
                    assert_eq!(a.target, b.target);
                    let back = b.amplitude * imp.weight(pair) / imp.weight(b.target);
                    assert!((back - a.amplitude).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn no_self_targets_or_zeros() {
        let m = XyzModel::new(
            build_lattice(2, 2, true).unwrap(),
            ModelParams::xyz(0.3, 0.3, 0.25).with_field(0.05, 1.0),
        );
        for r in 0..16 {
            for c in 0..16 {
                let pair = ConfigPair::new(SpinConfig(r), SpinConfig(c));
                for x in connections(&m, pair, &ImportanceScheme::new(1.0)) {
                    assert_ne!(x.target, pair);
                    assert!(x.amplitude.norm() > 0.0);
                }
            }
        }
    }

    #[test]
    fn key_roundtrip() {
        let p = ConfigPair::new(SpinConfig(0xdead_beef), SpinConfig(7));
        assert_eq!(ConfigPair::from_key(p.key()), p);
    }

    /// Exhaustive column-sum scan, independent of the probe set.
    fn exhaustive_bound(m: &XyzModel<f64>) -> f64 {
        let n = m.n_sites();
        let mut widest: f64 = 0.0;
        for r in 0..(1u32 << n) {
            for c in 0..(1u32 << n) {
                let pair = ConfigPair::new(SpinConfig(r), SpinConfig(c));
                let s = diagonal_element(m, pair, 0.0).norm()
                    + connections(m, pair, &ImportanceScheme::none())
                        .iter()
                        .map(|x| x.amplitude.norm())
                        .sum::<f64>();
                widest = widest.max(s);
            }
        }
        1.0 / widest
    }

    #[test]
    fn stability_bounds() {
        let m = single_spin(0.0);
        assert_eq!(exhaustive_bound(&m), 0.5);
        assert_eq!(stability_bound(&m), 0.5);

        let mut dead = single_spin(0.0);
        dead.params.gamma = 0.0;
        assert!(stability_bound(&dead).is_infinite());

        let m = XyzModel::new(build_lattice(2, 2, true).unwrap(), ModelParams::xyz(0.225, 0.335, 0.25));
        let probe = stability_bound(&m);
        let exact = exhaustive_bound(&m);
        assert!(probe.is_finite() && probe > 0.0);
        // probing a subset can only over-estimate the step
        assert!(probe >= exact - 1e-15);
        assert!(probe <= 1.5 * exact, "probe {probe} exhaustive {exact}");
    }
}
