//! Linear extrapolation of initiator-biased estimates to `I_limit -> 0`.

use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitiatorPoint<T> {
    pub limit: T,
    pub estimate: T,
    pub error: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation<T> {
    pub intercept: T,
    pub intercept_error: T,
    pub slope: T,
    pub slope_error: T,
}

/// Error-weighted straight-line fit through the `use_lowest` points with the
/// smallest initiator limits (all points when `None`), evaluated at zero.
///
/// Points with zero error are only accepted when every error is zero, in
/// which case the fit is unweighted.
pub fn initiator_extrapolate<T: Real>(points: &[InitiatorPoint<T>], use_lowest: Option<usize>) -> Result<Extrapolation<T>> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.limit.partial_cmp(&b.limit).expect("finite limits"));
    if let Some(k) = use_lowest {
        pts.truncate(k);
    }
    if pts.len() < 2 {
        return Err(Error::InsufficientData("need at least two initiator limits".into()));
    }
    if pts.iter().all(|p| p.limit == pts[0].limit) {
        return Err(Error::InsufficientData("initiator limits are all equal".into()));
    }
    let all_exact = pts.iter().all(|p| p.error == T::zero());
    if !all_exact && pts.iter().any(|p| !(p.error > T::zero())) {
        return Err(Error::InsufficientData("errors must all be positive or all zero".into()));
    }
    let weight = |p: &InitiatorPoint<T>| {
        if all_exact {
            T::one()
        } else {
            (p.error * p.error).recip()
        }
    };
    let (mut s, mut sx, mut sxx, mut sy, mut sxy) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for p in &pts {
        let w = weight(p);
        s += w;
        sx += w * p.limit;
        sxx += w * p.limit * p.limit;
        sy += w * p.estimate;
        sxy += w * p.limit * p.estimate;
    }
    let det = s * sxx - sx * sx;
    let intercept = (sxx * sy - sx * sxy) / det;
    let slope = (s * sxy - sx * sy) / det;
    let (intercept_error, slope_error) = if all_exact {
        (T::zero(), T::zero())
    } else {
        ((sxx / det).sqrt(), (s / det).sqrt())
    };
    Ok(Extrapolation {
        intercept,
        intercept_error,
        slope,
        slope_error,
    })
}
