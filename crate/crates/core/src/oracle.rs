//! Dense reference solver for small lattices.
//!
//! The Liouvillian is assembled from Kronecker products of Pauli matrices in
//! column-stacking convention, so `vec(rho)[col * D + row] = rho[(row, col)]`
//! and `vec(A X B) = (B^T kron A) vec(X)`. This path shares nothing with the
//! element rules in [`crate::lattice`] and [`crate::liouvillian`] except the
//! bit convention: bit `k` of a state index is site `k`, 1 meaning up.

use nalgebra::{DMatrix, DVector, RealField};
use num_complex::Complex;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::estimators::observable::{Axis, Observable};
use crate::estimators::susceptibility::{susceptibility_with, SusceptibilityResult};
use crate::lattice::{ModelParams, XyzModel};
use crate::liouvillian::{connections_into, diagonal_element, ConfigPair, ConnectionScratch, ImportanceScheme};
use crate::lattice::SpinConfig;
use crate::{Error, Real, Result};

pub const MAX_SITES: usize = 5;

/// Pivot ratio below which the constrained system is treated as singular.
const DEGENERACY_TOL: f64 = 1e-11;

/// Scalars the dense solver accepts.
pub trait OracleScalar: Real + RealField {}
impl<T: Real + RealField> OracleScalar for T {}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLiouvillian<T: OracleScalar> {
    pub matrix: DMatrix<Complex<T>>,
    pub n_sites: usize,
    /// Hilbert-space dimension `2^N`.
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteadyState<T: OracleScalar> {
    pub rho: DMatrix<Complex<T>>,
    /// `||L rho||_2`.
    pub residual: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Euler,
    Rk4,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Integration<T: OracleScalar> {
    pub rho: DMatrix<Complex<T>>,
    /// `|Tr rho(t) - Tr rho(0)|`.
    pub trace_drift: T,
}

fn c<T: OracleScalar>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

fn zeros<T: OracleScalar>(n: usize) -> DMatrix<Complex<T>> {
    DMatrix::from_element(n, n, c(0.0, 0.0))
}

fn identity<T: OracleScalar>(n: usize) -> DMatrix<Complex<T>> {
    DMatrix::from_fn(n, n, |i, j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

/// Local 2x2 matrices in the basis (down, up).
fn pauli<T: OracleScalar>(axis: Axis) -> DMatrix<Complex<T>> {
    let m = match axis {
        Axis::X => [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
        // <up|sigma_y|down> = -i
        Axis::Y => [[c(0.0, 0.0), c(0.0, 1.0)], [c(0.0, -1.0), c(0.0, 0.0)]],
        Axis::Z => [[c(-1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]],
    };
    DMatrix::from_fn(2, 2, |i, j| m[i][j])
}

fn lowering<T: OracleScalar>() -> DMatrix<Complex<T>> {
    let mut m = zeros(2);
    m[(0, 1)] = c(1.0, 0.0);
    m
}

/// `I_{high} kron local kron I_{2^site}`: acts on bit `site`.
fn site_operator<T: OracleScalar>(local: &DMatrix<Complex<T>>, site: usize, n_sites: usize) -> DMatrix<Complex<T>> {
    let high = identity::<T>(1 << (n_sites - 1 - site));
    let low = identity::<T>(1 << site);
    high.kronecker(&local.kronecker(&low))
}

fn check_size(n_sites: usize) -> Result<()> {
    if n_sites > MAX_SITES {
        return Err(Error::OracleTooLarge {
            sites: n_sites,
            max: MAX_SITES,
        });
    }
    Ok(())
}

/// Dense Hamiltonian `sum_bonds (Jx XX + Jy YY + Jz ZZ)/4 + h sum_k (cos t X + sin t Y)`.
pub fn hamiltonian<T: OracleScalar>(model: &XyzModel<T>) -> Result<DMatrix<Complex<T>>> {
    let n = model.n_sites();
    check_size(n)?;
    let p = &model.params;
    let d = 1usize << n;
    let mut h = zeros::<T>(d);
    let ops: Vec<[DMatrix<Complex<T>>; 3]> = (0..n)
        .map(|k| [Axis::X, Axis::Y, Axis::Z].map(|a| site_operator(&pauli(a), k, n)))
        .collect();
    let quarter = T::lit(0.25);
    for &(a, b) in model.lattice.bonds() {
        for (axis, j) in [p.jx, p.jy, p.jz].into_iter().enumerate() {
            if j != T::zero() {
                h += (&ops[a][axis] * &ops[b][axis]) * Complex::from(j * quarter);
            }
        }
    }
    if p.h != T::zero() {
        let hx = Complex::from(p.h * Float::cos(p.theta));
        let hy = Complex::from(p.h * Float::sin(p.theta));
        for op in &ops {
            h += &op[0] * hx + &op[1] * hy;
        }
    }
    Ok(h)
}

/// `-i(1 kron H - H^T kron 1) + sum_j (gamma/2)(2 F* kron F - 1 kron F^dag F - F^T F* kron 1)`.
pub fn build_dense<T: OracleScalar>(model: &XyzModel<T>) -> Result<DenseLiouvillian<T>> {
    let n = model.n_sites();
    check_size(n)?;
    let d = 1usize << n;
    let h = hamiltonian(model)?;
    let id = identity::<T>(d);
    let minus_i = c::<T>(0.0, -1.0);
    let mut l = (id.kronecker(&h) - h.transpose().kronecker(&id)) * minus_i;
    let half_gamma = Complex::from(model.params.gamma * T::lit(0.5));
    if model.params.gamma != T::zero() {
        for k in 0..n {
            let f = site_operator(&lowering::<T>(), k, n);
            let fdf = f.adjoint() * &f;
            let two = c::<T>(2.0, 0.0);
            let term = f.conjugate().kronecker(&f) * two - id.kronecker(&fdf) - fdf.transpose().kronecker(&id);
            l += term * half_gamma;
        }
    }
    Ok(DenseLiouvillian {
        matrix: l,
        n_sites: n,
        dim: d,
    })
}

/// Position of `|row><col|` in the vectorized density matrix.
pub fn index_of(pair: ConfigPair, dim: usize) -> usize {
    pair.col.0 as usize * dim + pair.row.0 as usize
}

/// The same superoperator assembled from [`connections_into`] and
/// [`diagonal_element`] with no importance weighting and zero shift.
pub fn assemble_from_elements<T: OracleScalar>(model: &XyzModel<T>) -> Result<DMatrix<Complex<T>>> {
    let n = model.n_sites();
    check_size(n)?;
    let d = 1usize << n;
    let mut m = zeros::<T>(d * d);
    let importance = ImportanceScheme::none();
    let mut scratch = ConnectionScratch::default();
    let mut out = Vec::new();
    for col in 0..d as u32 {
        for row in 0..d as u32 {
            let src = ConfigPair::new(SpinConfig(row), SpinConfig(col));
            let j = index_of(src, d);
            m[(j, j)] += diagonal_element(model, src, T::zero());
            out.clear();
            connections_into(model, src, &importance, &mut scratch, &mut out);
            for conn in &out {
                m[(index_of(conn.target, d), j)] += conn.amplitude;
            }
        }
    }
    Ok(m)
}

fn vectorize<T: OracleScalar>(rho: &DMatrix<Complex<T>>) -> DVector<Complex<T>> {
    DVector::from_column_slice(rho.as_slice())
}

fn unvectorize<T: OracleScalar>(v: &DVector<Complex<T>>, dim: usize) -> DMatrix<Complex<T>> {
    DMatrix::from_column_slice(dim, dim, v.as_slice())
}

fn trace<T: OracleScalar>(rho: &DMatrix<Complex<T>>) -> Complex<T> {
    (0..rho.nrows()).map(|i| rho[(i, i)]).fold(c(0.0, 0.0), |a, b| a + b)
}

fn vec_norm<T: OracleScalar>(v: &DVector<Complex<T>>) -> T {
    Float::sqrt(v.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b))
}

impl<T: OracleScalar> DenseLiouvillian<T> {
    pub fn apply(&self, rho: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
        unvectorize(&(&self.matrix * vectorize(rho)), self.dim)
    }
}

impl<T: OracleScalar> SteadyState<T> {
    /// Eigenvalues of the (Hermitian) density matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<T> {
        let mut ev: Vec<T> = self.rho.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        ev
    }

    pub fn trace(&self) -> Complex<T> {
        trace(&self.rho)
    }

    /// Largest entry of `|rho - rho^dag|` in the stored matrix.
    pub fn hermiticity_error(&self) -> T {
        (&self.rho - self.rho.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), |a, b| Float::max(a, b))
    }
}

/// Solve `L rho = 0` with the first equation replaced by `Tr rho = 1`.
pub fn steady_state<T: OracleScalar>(l: &DenseLiouvillian<T>) -> Result<SteadyState<T>> {
    let d = l.dim;
    let mut a = l.matrix.clone();
    for j in 0..d * d {
        a[(0, j)] = c(0.0, 0.0);
    }
    for i in 0..d {
        a[(0, index_of(ConfigPair::diagonal(SpinConfig(i as u32)), d))] = c(1.0, 0.0);
    }
    let mut b = DVector::from_element(d * d, c::<T>(0.0, 0.0));
    b[0] = c(1.0, 0.0);

    let lu = a.lu();
    let u = lu.u();
    let pivots: Vec<T> = (0..d * d).map(|i| u[(i, i)].norm()).collect();
    let pmax = pivots.iter().copied().fold(T::zero(), |x, y| Float::max(x, y));
    let pmin = pivots.iter().copied().fold(T::infinity(), |x, y| Float::min(x, y));
    let ratio = if pmax > T::zero() { pmin / pmax } else { T::zero() };
    if ratio.as_f64() < DEGENERACY_TOL {
        return Err(Error::DegenerateSteadyState(ratio.as_f64()));
    }
    let v = lu
        .solve(&b)
        .ok_or_else(|| Error::Singular("constrained Liouvillian".into()))?;
    let rho = unvectorize(&v, d);
    let half = c::<T>(0.5, 0.0);
    let rho = (&rho + rho.adjoint()) * half;
    let residual = vec_norm(&(&l.matrix * vectorize(&rho)));
    Ok(SteadyState { rho, residual })
}

/// Time-evolve `rho0` for `steps` steps of size `dt`.
pub fn integrate<T: OracleScalar>(
    l: &DenseLiouvillian<T>,
    rho0: &DMatrix<Complex<T>>,
    dt: T,
    steps: usize,
    method: Method,
) -> Result<Integration<T>> {
    let mut v = vectorize(rho0);
    let norm0 = Float::max(vec_norm(&v), T::min_positive_value());
    let blowup = T::lit(1e8) * norm0;
    let dtc = Complex::from(dt);
    let half = Complex::from(dt * T::lit(0.5));
    let sixth = Complex::from(dt / T::lit(6.0));
    let two = c::<T>(2.0, 0.0);
    for s in 0..steps {
        v = match method {
            Method::Euler => {
                let k1 = &l.matrix * &v;
                &v + k1 * dtc
            }
            Method::Rk4 => {
                let k1 = &l.matrix * &v;
                let k2 = &l.matrix * (&v + &k1 * half);
                let k3 = &l.matrix * (&v + &k2 * half);
                let k4 = &l.matrix * (&v + &k3 * dtc);
                &v + (k1 + k2 * two + k3 * two + k4) * sixth
            }
        };
        let norm = vec_norm(&v);
        if !Float::is_finite(norm) || norm > blowup {
            return Err(Error::Unstable {
                step: s + 1,
                norm: norm.as_f64(),
            });
        }
    }
    let rho = unvectorize(&v, l.dim);
    let trace_drift = (trace(&rho) - trace(rho0)).norm();
    Ok(Integration { rho, trace_drift })
}

/// Dense matrix of an observable.
pub fn observable_matrix<T: OracleScalar>(obs: Observable, n_sites: usize) -> Result<DMatrix<Complex<T>>> {
    check_size(n_sites)?;
    if !obs.is_valid_for(n_sites) {
        return Err(Error::param("observable", format!("{obs} not defined on {n_sites} sites")));
    }
    Ok(match obs {
        Observable::Site(axis, k) => site_operator(&pauli(axis), k, n_sites),
        Observable::Magnetization(axis) => {
            let mut m = zeros::<T>(1 << n_sites);
            for k in 0..n_sites {
                m += site_operator(&pauli(axis), k, n_sites);
            }
            m * Complex::from(T::one() / T::from_usize(n_sites).unwrap())
        }
    })
}

/// `Re Tr(O rho) / Re Tr(rho)`.
pub fn exact_expectation<T: OracleScalar>(rho: &DMatrix<Complex<T>>, obs: Observable) -> Result<T> {
    let d = rho.nrows();
    let n_sites = d.trailing_zeros() as usize;
    let o = observable_matrix::<T>(obs, n_sites)?;
    Ok(trace(&(o * rho)).re / trace(rho).re)
}

/// Steady-state magnetizations of a model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactMagnetization<T> {
    pub mx: T,
    pub my: T,
    pub mz: T,
    pub residual: T,
}

pub fn exact_magnetization<T: OracleScalar>(model: &XyzModel<T>) -> Result<ExactMagnetization<T>> {
    let ss = steady_state(&build_dense(model)?)?;
    let m = |a| exact_expectation(&ss.rho, Observable::Magnetization(a));
    Ok(ExactMagnetization {
        mx: m(Axis::X)?,
        my: m(Axis::Y)?,
        mz: m(Axis::Z)?,
        residual: ss.residual,
    })
}

/// Exact susceptibility through the same seven-point fit the stochastic
/// pipeline uses, with zero errors.
pub fn exact_susceptibility<T: OracleScalar>(model: &XyzModel<T>, fields: &[T]) -> Result<SusceptibilityResult<T>> {
    susceptibility_with(model, fields, |m, _| {
        let e = exact_magnetization(m)?;
        Ok(([e.mx, e.my], [T::zero(), T::zero()]))
    })
}

/// Frozen oracle output for one parameter set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldenRecord {
    pub rows: usize,
    pub cols: usize,
    pub periodic: bool,
    pub params: ModelParams<f64>,
    pub mz: f64,
    pub sx: f64,
    pub sy: f64,
    pub residual: f64,
}

impl GoldenRecord {
    pub fn compute(model: &XyzModel<f64>) -> Result<Self> {
        let e = exact_magnetization(model)?;
        Ok(GoldenRecord {
            rows: model.lattice.rows,
            cols: model.lattice.cols,
            periodic: model.lattice.periodic,
            params: model.params,
            mz: e.mz,
            sx: e.mx,
            sy: e.my,
            residual: e.residual,
        })
    }
}
