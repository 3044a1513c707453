//! Steady-state estimators: ratio estimator with importance un-weighting,
//! blocking errors, initiator extrapolation and the field-response
//! susceptibility.

pub mod blocking;
pub mod extrapolate;
pub mod observable;
pub mod susceptibility;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::engine::PopulationTable;
use crate::liouvillian::ImportanceScheme;
use crate::Real;

pub use blocking::{blocking_error, ratio_blocking_error, BlockingResult};
pub use extrapolate::{initiator_extrapolate, Extrapolation, InitiatorPoint};
pub use observable::{Axis, Observable};
pub use susceptibility::{angular_average, susceptibility, FieldScan, SusceptibilityResult};

/// One step's contribution: `sum rho_ij O_ji / w_ij` and `sum rho_ii`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Measurement<T> {
    pub num_re: T,
    pub num_im: T,
    pub den: T,
}

/// Evaluate all observables on the current table in one pass.
///
/// Sums are accumulated as integers (diagonal and off-diagonal parts kept
/// apart) and only then scaled, so the result does not depend on the
/// iteration order of the table.
pub fn measure_all<T: Real>(
    pop: &PopulationTable<T>,
    observables: &[Observable],
    n_sites: usize,
    importance: &ImportanceScheme<T>,
) -> Vec<Measurement<T>> {
    let mut diag = vec![Complex::<i64>::new(0, 0); observables.len()];
    let mut off = vec![Complex::<i64>::new(0, 0); observables.len()];
    let mut den = 0i64;
    for (pair, cell) in pop.iter() {
        let rho = Complex::new(cell.re, cell.im);
        let is_diag = pair.is_diagonal();
        if is_diag {
            den += cell.re;
        }
        for (k, obs) in observables.iter().enumerate() {
            if is_diag || !obs.is_diagonal() {
                let o = obs.element(pair, n_sites);
                if o.re != 0 || o.im != 0 {
                    if is_diag {
                        diag[k] += rho * o;
                    } else {
                        off[k] += rho * o;
                    }
                }
            }
        }
    }
    // off-diagonal configurations carry weight exp(-p)
    let unweight = importance.p.exp();
    observables
        .iter()
        .enumerate()
        .map(|(k, obs)| {
            let scale = T::lit(obs.scale(n_sites));
            let int = |x: i64| T::from_i64(x).unwrap();
            Measurement {
                num_re: scale * (int(diag[k].re) + unweight * int(off[k].re)),
                num_im: scale * (int(diag[k].im) + unweight * int(off[k].im)),
                den: int(den),
            }
        })
        .collect()
}

pub fn measure<T: Real>(
    pop: &PopulationTable<T>,
    observable: Observable,
    n_sites: usize,
    importance: &ImportanceScheme<T>,
) -> Measurement<T> {
    measure_all(pop, &[observable], n_sites, importance)[0]
}

/// Running ratio estimator with per-step history for error analysis.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RatioAccumulator<T> {
    pub numerator: Complex<T>,
    pub denominator: T,
    pub history: Vec<(T, T)>,
}

impl<T: Real> RatioAccumulator<T> {
    pub fn push(&mut self, m: Measurement<T>) {
        self.numerator.re += m.num_re;
        self.numerator.im += m.num_im;
        self.denominator += m.den;
        self.history.push((m.num_re, m.den));
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    /// `Re(num) / den`, or `None` before any positive denominator.
    pub fn estimate(&self) -> Option<T> {
        (self.denominator > T::zero()).then(|| self.numerator.re / self.denominator)
    }

    /// `Im(num) / den`; should vanish for Hermitian observables.
    pub fn imaginary_part(&self) -> Option<T> {
        (self.denominator > T::zero()).then(|| self.numerator.im / self.denominator)
    }

    pub fn blocked(&self) -> BlockingResult<T> {
        ratio_blocking_error(&self.history)
    }
}
