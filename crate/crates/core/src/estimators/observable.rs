use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::liouvillian::ConfigPair;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Pauli observables supported by the ratio estimator.
///
/// Matrix elements are Gaussian integers times a real [`scale`], which keeps
/// the per-step accumulation exact and independent of summation order.
///
/// [`scale`]: Observable::scale
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Observable {
    /// `(1/N) sum_k sigma_k^axis`
    Magnetization(Axis),
    /// `sigma_site^axis`
    Site(Axis, usize),
}

impl Observable {
    pub fn scale(&self, n_sites: usize) -> f64 {
        match self {
            Observable::Magnetization(_) => 1.0 / n_sites as f64,
            Observable::Site(..) => 1.0,
        }
    }

    pub fn is_valid_for(&self, n_sites: usize) -> bool {
        match *self {
            Observable::Magnetization(_) => true,
            Observable::Site(_, k) => k < n_sites,
        }
    }

    /// Unscaled `<col|O|row>`, the element that multiplies `rho_{row,col}`.
    pub fn element(&self, pair: ConfigPair, n_sites: usize) -> Complex<i64> {
        let (axis, mask) = match *self {
            Observable::Magnetization(a) => (a, full_mask(n_sites)),
            Observable::Site(a, k) => (a, 1u32 << k),
        };
        let diff = pair.row.0 ^ pair.col.0;
        match axis {
            Axis::Z => {
                if diff != 0 {
                    return Complex::new(0, 0);
                }
                let up = (pair.row.0 & mask).count_ones() as i64;
                let n = mask.count_ones() as i64;
                Complex::new(2 * up - n, 0)
            }
            Axis::X | Axis::Y => {
                if diff.count_ones() != 1 || diff & mask == 0 {
                    return Complex::new(0, 0);
                }
                if axis == Axis::X {
                    Complex::new(1, 0)
                } else if pair.row.0 & diff != 0 {
                    // <dn|sigma_y|up>
                    Complex::new(0, 1)
                } else {
                    Complex::new(0, -1)
                }
            }
        }
    }

    /// True when the observable only has diagonal elements.
    pub fn is_diagonal(&self) -> bool {
        matches!(
            self,
            Observable::Magnetization(Axis::Z) | Observable::Site(Axis::Z, _)
        )
    }
}

fn full_mask(n: usize) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ax = |a: &Axis| match a {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        };
        match self {
            Observable::Magnetization(a) => write!(f, "m{}", ax(a)),
            Observable::Site(a, k) => write!(f, "s{}{}", ax(a), k),
        }
    }
}

impl FromStr for Observable {
    type Err = String;

    /// `mx`, `my`, `mz`, or `s<axis><site>` such as `sz3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let axis = |c: Option<char>| match c {
            Some('x') => Ok(Axis::X),
            Some('y') => Ok(Axis::Y),
            Some('z') => Ok(Axis::Z),
            _ => Err(format!("unknown observable `{s}`")),
        };
        let mut chars = s.chars();
        match chars.next() {
            Some('m') if s.len() == 2 => Ok(Observable::Magnetization(axis(chars.next())?)),
            Some('s') => {
                let a = axis(chars.next())?;
                let site = chars
                    .as_str()
                    .parse::<usize>()
                    .map_err(|_| format!("bad site index in `{s}`"))?;
                Ok(Observable::Site(a, site))
            }
            _ => Err(format!("unknown observable `{s}`")),
        }
    }
}

impl Serialize for Observable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Observable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
