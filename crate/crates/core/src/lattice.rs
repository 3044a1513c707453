//! Dissipative XYZ Heisenberg lattice: geometry and element-wise Hamiltonian.
//!
//! Exchange terms use `S = sigma / 2`, so bond matrix elements carry a factor
//! 1/4; the in-plane field couples to `sigma` directly.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

/// Largest lattice the bit encoding supports.
pub const MAX_SITES: usize = 32;

/// z-basis configuration; bit `k` set means spin `k` is up.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpinConfig(pub u32);

impl SpinConfig {
    pub const ALL_DOWN: SpinConfig = SpinConfig(0);

    pub fn all_up(n_sites: usize) -> Self {
        SpinConfig(low_mask(n_sites))
    }

    #[inline]
    pub fn bits(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn is_up(self, site: usize) -> bool {
        self.0 >> site & 1 == 1
    }

    /// +1 for up, -1 for down.
    #[inline]
    pub fn spin(self, site: usize) -> i32 {
        if self.is_up(site) {
            1
        } else {
            -1
        }
    }

    #[inline]
    pub fn flip(self, site: usize) -> Self {
        SpinConfig(self.0 ^ (1 << site))
    }

    #[inline]
    pub fn lower(self, site: usize) -> Self {
        SpinConfig(self.0 & !(1 << site))
    }

    #[inline]
    pub fn count_up(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_valid(self, n_sites: usize) -> bool {
        self.0 & !low_mask(n_sites) == 0
    }
}

fn low_mask(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    pub rows: usize,
    pub cols: usize,
    pub periodic: bool,
    bonds: Vec<(usize, usize)>,
}

/// Rectangular lattice with row-major site indices.
///
/// Each site emits its `+x` bond and then its `+y` bond. With periodic
/// boundaries a length-2 direction therefore produces doubled bonds; those
/// are kept unless [`Lattice::dedupe_bonds`] is applied. Wrapping along a
/// length-1 direction would be a self-loop and is skipped.
pub fn build_lattice(rows: usize, cols: usize, periodic: bool) -> Result<Lattice> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidLattice(format!("zero-size lattice {rows}x{cols}")));
    }
    if periodic && rows < 2 && cols < 2 {
        return Err(Error::InvalidLattice(
            "periodic lattice needs at least one dimension >= 2".into(),
        ));
    }
    if rows * cols > MAX_SITES {
        return Err(Error::InvalidLattice(format!(
            "{} sites exceeds the {MAX_SITES}-site limit",
            rows * cols
        )));
    }
    let mut bonds = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let site = r * cols + c;
            if c + 1 < cols {
                bonds.push((site, r * cols + c + 1));
            } else if periodic && cols > 1 {
                bonds.push((site, r * cols));
            }
            if r + 1 < rows {
                bonds.push((site, (r + 1) * cols + c));
            } else if periodic && rows > 1 {
                bonds.push((site, c));
            }
        }
    }
    Ok(Lattice {
        rows,
        cols,
        periodic,
        bonds,
    })
}

impl Lattice {
    pub fn n_sites(&self) -> usize {
        self.rows * self.cols
    }

    pub fn bonds(&self) -> &[(usize, usize)] {
        &self.bonds
    }

    /// Collapse bonds that join the same unordered pair of sites.
    pub fn dedupe_bonds(mut self) -> Self {
        let mut seen = Vec::with_capacity(self.bonds.len());
        self.bonds.retain(|&(a, b)| {
            let key = (a.min(b), a.max(b));
            if seen.contains(&key) {
                false
            } else {
                seen.push(key);
                true
            }
        });
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub jx: T,
    pub jy: T,
    pub jz: T,
    pub gamma: T,
    pub h: T,
    pub theta: T,
}

impl<T: Real> ModelParams<T> {
    /// Zero-field XYZ couplings with unit dissipation rate.
    pub fn xyz(jx: T, jy: T, jz: T) -> Self {
        ModelParams {
            jx,
            jy,
            jz,
            gamma: T::one(),
            h: T::zero(),
            theta: T::zero(),
        }
    }

    pub fn with_field(mut self, h: T, theta: T) -> Self {
        self.h = h;
        self.theta = theta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > T::zero()) {
            return Err(Error::param("gamma", format!("must be > 0, got {}", self.gamma)));
        }
        if !(self.h >= T::zero()) {
            return Err(Error::param("h", format!("must be >= 0, got {}", self.h)));
        }
        for (name, v) in [("jx", self.jx), ("jy", self.jy), ("jz", self.jz), ("theta", self.theta)] {
            if !v.is_finite() {
                return Err(Error::param(name, "must be finite"));
            }
        }
        Ok(())
    }
}

/// Lattice plus couplings: everything the Liouvillian needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XyzModel<T> {
    pub lattice: Lattice,
    pub params: ModelParams<T>,
}

impl<T: Real> XyzModel<T> {
    pub fn new(lattice: Lattice, params: ModelParams<T>) -> Self {
        XyzModel { lattice, params }
    }

    pub fn n_sites(&self) -> usize {
        self.lattice.n_sites()
    }

    /// `sum_bonds (Jz/4) s_a s_b` with `s = +-1`.
    pub fn hamiltonian_diagonal(&self, c: SpinConfig) -> T {
        let aligned: i32 = self
            .lattice
            .bonds
            .iter()
            .map(|&(a, b)| c.spin(a) * c.spin(b))
            .sum();
        self.params.jz * T::lit(0.25) * T::from_i32(aligned).unwrap()
    }

    /// Off-diagonal row `<c'|H|c>` for all `c' != c`, appended to `out`.
    ///
    /// Identical targets (from doubled bonds) are merged and exact zeros
    /// dropped.
    pub fn hamiltonian_offdiagonal_into(&self, c: SpinConfig, out: &mut Vec<(SpinConfig, Complex<T>)>) {
        let start = out.len();
        let p = &self.params;
        let quarter = T::lit(0.25);
        let flip_flop = (p.jx + p.jy) * quarter;
        let double_flip = (p.jx - p.jy) * quarter;
        for &(a, b) in &self.lattice.bonds {
            let amp = if c.is_up(a) != c.is_up(b) {
                flip_flop
            } else {
                double_flip
            };
            push_merged(out, start, c.flip(a).flip(b), Complex::new(amp, T::zero()));
        }
        if p.h > T::zero() {
            let (s, co) = p.theta.sin_cos();
            let re = p.h * co;
            let im = p.h * s;
            for k in 0..self.lattice.n_sites() {
                // <dn|sy|up> = +i, <up|sy|dn> = -i
                let amp = if c.is_up(k) {
                    Complex::new(re, im)
                } else {
                    Complex::new(re, -im)
                };
                push_merged(out, start, c.flip(k), amp);
            }
        }
        let zero = Complex::new(T::zero(), T::zero());
        let mut i = start;
        while i < out.len() {
            if out[i].1 == zero {
                out.swap_remove(i);
            } else {
                i += 1;
            }
        }
    }

    pub fn hamiltonian_offdiagonal(&self, c: SpinConfig) -> Vec<(SpinConfig, Complex<T>)> {
        let mut out = Vec::new();
        self.hamiltonian_offdiagonal_into(c, &mut out);
        out
    }

    /// Sites that `S^-` can lower, with the lowered configuration.
    pub fn jump_targets(&self, c: SpinConfig) -> Vec<(usize, SpinConfig)> {
        jump_targets(c, self.n_sites())
    }
}

pub fn jump_targets(c: SpinConfig, n_sites: usize) -> Vec<(usize, SpinConfig)> {
    (0..n_sites)
        .filter(|&k| c.is_up(k))
        .map(|k| (k, c.lower(k)))
        .collect()
}

fn push_merged<T: Real>(
    out: &mut Vec<(SpinConfig, Complex<T>)>,
    start: usize,
    target: SpinConfig,
    amp: Complex<T>,
) {
    match out[start..].iter_mut().find(|(t, _)| *t == target) {
        Some(slot) => slot.1 = slot.1 + amp,
        None => out.push((target, amp)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_site(jx: f64, jy: f64, jz: f64) -> XyzModel<f64> {
        let lat = build_lattice(1, 2, false).unwrap();
        XyzModel::new(lat, ModelParams::xyz(jx, jy, jz))
    }

    // bit 0 = site 0; "up-down" means site 0 up, site 1 down
    const UP_DN: SpinConfig = SpinConfig(0b01);
    const DN_UP: SpinConfig = SpinConfig(0b10);
    const UP_UP: SpinConfig = SpinConfig(0b11);
    const DN_DN: SpinConfig = SpinConfig(0b00);

    #[test]
    fn bond_counts() {
        assert_eq!(build_lattice(2, 2, true).unwrap().bonds().len(), 8);
        assert_eq!(build_lattice(3, 3, true).unwrap().bonds().len(), 18);
        assert_eq!(build_lattice(2, 2, false).unwrap().bonds().len(), 4);
        assert_eq!(build_lattice(2, 2, true).unwrap().dedupe_bonds().bonds().len(), 4);
        for rows in 1..=4 {
            for cols in 1..=4 {
                let open = build_lattice(rows, cols, false).unwrap();
                assert_eq!(open.bonds().len(), rows * (cols - 1) + cols * (rows - 1));
                if rows >= 2 && cols >= 2 {
                    let per = build_lattice(rows, cols, true).unwrap();
                    assert_eq!(per.bonds().len(), 2 * rows * cols);
                }
            }
        }
    }

    #[test]
    fn bonds_are_valid_and_ordered() {
        let lat = build_lattice(3, 4, true).unwrap();
        for &(a, b) in lat.bonds() {
            assert_ne!(a, b);
            assert!(a < 12 && b < 12);
        }
        assert_eq!(&lat.bonds()[..2], &[(0, 1), (0, 4)]);
    }

    #[test]
    fn rejects_bad_lattices() {
        assert!(build_lattice(0, 3, false).is_err());
        assert!(build_lattice(1, 1, true).is_err());
        assert!(build_lattice(1, 1, false).is_ok());
        assert!(build_lattice(6, 6, false).is_err());
    }

    #[test]
    fn diagonal_elements() {
        let m = two_site(0.0, 0.0, 0.25);
        assert_eq!(m.hamiltonian_diagonal(UP_DN), -0.0625);
        assert_eq!(m.hamiltonian_diagonal(UP_UP), 0.0625);
        let m = XyzModel::new(build_lattice(2, 2, true).unwrap(), ModelParams::xyz(0.0, 0.0, 0.25));
        assert_eq!(m.hamiltonian_diagonal(SpinConfig::all_up(4)), 0.5);
        let m = two_site(1.0, 2.0, 0.0);
        assert_eq!(m.hamiltonian_diagonal(UP_DN), 0.0);
    }

    #[test]
    fn offdiagonal_exchange() {
        let m = two_site(0.225, 0.335, 0.25);
        let row = m.hamiltonian_offdiagonal(UP_DN);
        assert_eq!(row.len(), 1);
        assert_eq!(row[0].0, DN_UP);
        assert!((row[0].1.re - 0.14).abs() < 1e-15 && row[0].1.im == 0.0);
        let row = m.hamiltonian_offdiagonal(UP_UP);
        assert_eq!(row.len(), 1);
        assert_eq!(row[0].0, DN_DN);
        assert!((row[0].1.re + 0.0275).abs() < 1e-15);
        let iso = two_site(0.3, 0.3, 0.1);
        assert!(iso.hamiltonian_offdiagonal(UP_UP).is_empty());
    }

    #[test]
    fn field_signs() {
        let lat = build_lattice(1, 1, false).unwrap();
        let m = XyzModel::new(lat, ModelParams::xyz(0.0, 0.0, 0.0).with_field(0.1, std::f64::consts::FRAC_PI_2));
        let up = m.hamiltonian_offdiagonal(SpinConfig(1));
        let dn = m.hamiltonian_offdiagonal(SpinConfig(0));
        assert!((up[0].1.im - 0.1).abs() < 1e-15);
        assert!((dn[0].1.im + 0.1).abs() < 1e-15);
    }

    #[test]
    fn doubled_bonds_merge() {
        // 2x2 periodic: every pair of neighbours appears twice
        let per = XyzModel::new(build_lattice(2, 2, true).unwrap(), ModelParams::<f64>::xyz(0.2, 0.4, 0.0));
        let ded = XyzModel::new(
            build_lattice(2, 2, true).unwrap().dedupe_bonds(),
            ModelParams::xyz(0.2, 0.4, 0.0),
        );
        let c = SpinConfig(0b0110);
        let a = per.hamiltonian_offdiagonal(c);
        let b = ded.hamiltonian_offdiagonal(c);
        assert_eq!(a.len(), b.len());
        for ((ta, aa), (tb, ab)) in a.iter().zip(&b) {
            assert_eq!(ta, tb);
            assert!((aa.re - 2.0 * ab.re).abs() < 1e-15);
        }
    }

    #[test]
    fn hermitian_by_enumeration() {
        for (rows, cols, per) in [(1, 2, false), (2, 2, true), (2, 3, false), (1, 5, true), (2, 3, true)] {
            let lat = build_lattice(rows, cols, per).unwrap();
            let n = lat.n_sites();
            let m = XyzModel::new(lat, ModelParams::xyz(0.3, -0.7, 0.2).with_field(0.17, 0.9));
            for c in 0..(1u32 << n) {
                for (t, a) in m.hamiltonian_offdiagonal(SpinConfig(c)) {
                    let back = m
                        .hamiltonian_offdiagonal(t)
                        .into_iter()
                        .find(|(x, _)| *x == SpinConfig(c))
                        .expect("reverse element present")
                        .1;
                    assert!((back - a.conj()).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn real_without_field() {
        let m = XyzModel::new(build_lattice(2, 3, false).unwrap(), ModelParams::xyz(0.1, 0.9, 0.4));
        for c in 0..64 {
            for (_, a) in m.hamiltonian_offdiagonal(SpinConfig(c)) {
                assert_eq!(a.im, 0.0);
            }
        }
    }

    #[test]
    fn jumps() {
        let m = two_site(0.0, 0.0, 0.0);
        assert!(m.jump_targets(DN_DN).is_empty());
        assert_eq!(m.jump_targets(UP_DN), vec![(0, DN_DN)]);
        assert_eq!(m.jump_targets(UP_UP), vec![(0, DN_UP), (1, UP_DN)]);
    }

    #[test]
    fn single_precision() {
        let lat = build_lattice(1, 2, false).unwrap();
        let m = XyzModel::new(lat, ModelParams::<f32>::xyz(0.225, 0.335, 0.25));
        let row = m.hamiltonian_offdiagonal(UP_DN);
        assert!((row[0].1.re - 0.14f32).abs() < 1e-6);
    }
}
