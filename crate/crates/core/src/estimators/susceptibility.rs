//! In-plane linear response: the 2x2 susceptibility tensor from seven runs
//! (three field strengths along x, three along y, one at zero field) and
//! its angular average.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run, EngineParams};
use crate::estimators::observable::{Axis, Observable};
use crate::lattice::XyzModel;
use crate::{Error, Real, Result};

/// Trapezoidal nodes on `[0, 2 pi)`.
pub const QUADRATURE_NODES: usize = 720;

pub const FIELDS_PER_AXIS: usize = 3;

/// `(1/2pi) int |chi (cos t, sin t)| dt` by the periodic trapezoid rule.
pub fn angular_average<T: Real>(chi: &[[T; 2]; 2], nodes: usize) -> T {
    let n = T::from_usize(nodes).unwrap();
    let step = T::TAU() / n;
    (0..nodes)
        .map(|k| {
            let (s, c) = (step * T::from_usize(k).unwrap()).sin_cos();
            let vx = chi[0][0] * c + chi[0][1] * s;
            let vy = chi[1][0] * c + chi[1][1] * s;
            vx.hypot(vy)
        })
        .sum::<T>()
        / n
}

/// Gradient of [`angular_average`] with respect to the tensor entries.
fn angular_average_gradient<T: Real>(chi: &[[T; 2]; 2], nodes: usize) -> [[T; 2]; 2] {
    let n = T::from_usize(nodes).unwrap();
    let step = T::TAU() / n;
    let mut g = [[T::zero(); 2]; 2];
    for k in 0..nodes {
        let (s, c) = (step * T::from_usize(k).unwrap()).sin_cos();
        let v = [chi[0][0] * c + chi[0][1] * s, chi[1][0] * c + chi[1][1] * s];
        let norm = v[0].hypot(v[1]);
        if norm == T::zero() {
            continue;
        }
        let u = [c, s];
        for a in 0..2 {
            for b in 0..2 {
                g[a][b] += v[a] * u[b] / norm;
            }
        }
    }
    for row in &mut g {
        for x in row.iter_mut() {
            *x /= n;
        }
    }
    g
}

/// In-plane magnetizations `(M_x, M_y)` for the seven field settings, with
/// standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldScan<T> {
    pub fields: Vec<T>,
    pub zero: [T; 2],
    pub zero_err: [T; 2],
    /// Field along x (`theta = 0`), one entry per field strength.
    pub along_x: Vec<[T; 2]>,
    pub along_x_err: Vec<[T; 2]>,
    /// Field along y (`theta = pi/2`).
    pub along_y: Vec<[T; 2]>,
    pub along_y_err: Vec<[T; 2]>,
}

impl<T: Real> FieldScan<T> {
    fn sum_h2(&self) -> T {
        self.fields.iter().map(|&h| h * h).sum()
    }

    /// `chi[a][b] = dM_a / dh_b`: least-squares slope through the zero-field
    /// point.
    pub fn chi(&self) -> [[T; 2]; 2] {
        let h2 = self.sum_h2();
        let mut chi = [[T::zero(); 2]; 2];
        for (b, runs) in [&self.along_x, &self.along_y].into_iter().enumerate() {
            for a in 0..2 {
                chi[a][b] = self
                    .fields
                    .iter()
                    .zip(runs.iter())
                    .map(|(&h, m)| h * (m[a] - self.zero[a]))
                    .sum::<T>()
                    / h2;
            }
        }
        chi
    }

    /// Linear sensitivities `(d chi[a][b] / d input, sigma_input)` for every
    /// measured magnetization.
    fn sensitivities(&self) -> Vec<([[T; 2]; 2], T)> {
        let h2 = self.sum_h2();
        let hsum: T = self.fields.iter().copied().sum();
        let mut out = Vec::new();
        for a in 0..2 {
            let mut d = [[T::zero(); 2]; 2];
            d[a][0] = -hsum / h2;
            d[a][1] = -hsum / h2;
            out.push((d, self.zero_err[a]));
        }
        for (b, errs) in [&self.along_x_err, &self.along_y_err].into_iter().enumerate() {
            for (k, &h) in self.fields.iter().enumerate() {
                for a in 0..2 {
                    let mut d = [[T::zero(); 2]; 2];
                    d[a][b] = h / h2;
                    out.push((d, errs[k][a]));
                }
            }
        }
        out
    }

    pub fn chi_errors(&self) -> [[T; 2]; 2] {
        let mut var = [[T::zero(); 2]; 2];
        for (d, s) in self.sensitivities() {
            for a in 0..2 {
                for b in 0..2 {
                    var[a][b] += d[a][b] * d[a][b] * s * s;
                }
            }
        }
        var.map(|r| r.map(|v| v.sqrt()))
    }

    /// Linearised error of the angular average, including the correlation
    /// through the shared zero-field point.
    pub fn chi_av_error(&self, nodes: usize) -> T {
        let g = angular_average_gradient(&self.chi(), nodes);
        self.sensitivities()
            .into_iter()
            .map(|(d, s)| {
                let mut dv = T::zero();
                for a in 0..2 {
                    for b in 0..2 {
                        dv += g[a][b] * d[a][b];
                    }
                }
                dv * dv * s * s
            })
            .sum::<T>()
            .sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SusceptibilityResult<T> {
    pub chi: [[T; 2]; 2],
    pub chi_err: [[T; 2]; 2],
    pub chi_av: T,
    pub chi_av_err: T,
    pub scan: FieldScan<T>,
}

impl<T: Real> SusceptibilityResult<T> {
    pub fn from_scan(scan: FieldScan<T>) -> Self {
        let chi = scan.chi();
        SusceptibilityResult {
            chi,
            chi_err: scan.chi_errors(),
            chi_av: angular_average(&chi, QUADRATURE_NODES),
            chi_av_err: scan.chi_av_error(QUADRATURE_NODES),
            scan,
        }
    }
}

pub fn check_fields<T: Real>(fields: &[T]) -> Result<()> {
    if fields.len() != FIELDS_PER_AXIS {
        return Err(Error::param(
            "fields",
            format!("need {FIELDS_PER_AXIS} field values, got {}", fields.len()),
        ));
    }
    if !(fields[0] > T::zero()) || fields.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::param("fields", "must satisfy 0 < h1 < h2 < h3"));
    }
    Ok(())
}

/// The seven field settings, indexed by job number: 0 is zero field, 1..=3
/// along x, 4..=6 along y.
pub fn field_settings<T: Real>(model: &XyzModel<T>, fields: &[T]) -> Vec<XyzModel<T>> {
    let mut out = Vec::with_capacity(1 + 2 * fields.len());
    let with = |h: T, theta: T| {
        let mut m = model.clone();
        m.params.h = h;
        m.params.theta = theta;
        m
    };
    out.push(with(T::zero(), T::zero()));
    for &h in fields {
        out.push(with(h, T::zero()));
    }
    for &h in fields {
        out.push(with(h, T::FRAC_PI_2()));
    }
    out
}

/// Run the 3+3+1 protocol with a caller-supplied magnetization source.
///
/// `measure(model, job)` returns `((M_x, M_y), (err_x, err_y))`; the seven
/// jobs run in parallel.
pub fn susceptibility_with<T, F>(model: &XyzModel<T>, fields: &[T], measure: F) -> Result<SusceptibilityResult<T>>
where
    T: Real,
    F: Fn(&XyzModel<T>, usize) -> Result<([T; 2], [T; 2])> + Sync,
{
    check_fields(fields)?;
    let settings = field_settings(model, fields);
    let results: Vec<([T; 2], [T; 2])> = settings
        .par_iter()
        .enumerate()
        .map(|(job, m)| measure(m, job))
        .collect::<Result<_>>()?;
    let nf = fields.len();
    let scan = FieldScan {
        fields: fields.to_vec(),
        zero: results[0].0,
        zero_err: results[0].1,
        along_x: results[1..=nf].iter().map(|r| r.0).collect(),
        along_x_err: results[1..=nf].iter().map(|r| r.1).collect(),
        along_y: results[nf + 1..].iter().map(|r| r.0).collect(),
        along_y_err: results[nf + 1..].iter().map(|r| r.1).collect(),
    };
    Ok(SusceptibilityResult::from_scan(scan))
}

/// In-plane magnetizations from one engine run, with blocking errors.
pub fn run_magnetization<T: Real>(model: &XyzModel<T>, params: &EngineParams<T>) -> Result<([T; 2], [T; 2])> {
    let obs = [Observable::Magnetization(Axis::X), Observable::Magnetization(Axis::Y)];
    let out = run(model, params, &obs)?;
    if out.engaged_at.is_none() {
        return Err(Error::NotConverged(format!(
            "target population {} never reached",
            params.target_population
        )));
    }
    let mut value = [T::zero(); 2];
    let mut error = [T::zero(); 2];
    for (k, acc) in out.accumulators.iter().enumerate() {
        let b = acc.blocked();
        if !b.mean.is_finite() {
            return Err(Error::NotConverged("no measurement data".into()));
        }
        value[k] = b.mean;
        error[k] = b.error;
    }
    Ok((value, error))
}

/// Engine-driven protocol; job `k` runs with seed `params.seed + k`.
pub fn susceptibility<T: Real>(model: &XyzModel<T>, params: &EngineParams<T>, fields: &[T]) -> Result<SusceptibilityResult<T>> {
    susceptibility_with(model, fields, |m, job| {
        let p = EngineParams {
            seed: params.seed.wrapping_add(job as u64),
            ..params.clone()
        };
        run_magnetization(m, &p)
    })
}
