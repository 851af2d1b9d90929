//! The conditional-expectation operator A of the weak-record chain and the
//! reduction operators built from it.
//!
//! A acts on sequences by Av(l) = (1/q_l)·Σ_{k≥l} v(k)·p_k. Everything here
//! works in tail-weighted coordinates u_l = v_l·q_l, where the action
//! collapses to a plain suffix sum (Av)_weighted(l) = Σ_{k≥l} u_k·c_k — one
//! backward O(M) pass per application. The weighting also tames growth: in
//! the flagship spectral example the eigenvector grows like 1.94^k while its
//! weighted form decays like 0.97^k.
//!
//! Regression vectors e_m (the m-step conditional means), deviation vectors
//! d_m (distance from the affine law), and the reduction operators
//! B_m = Σ_{k=0}^{m−1} γ1^{m−1−k} A^k = ∏_{k=1}^{m−1}(A − γ1λ_k I)
//! are all evaluated on a truncation window with the suffix-sum tail beyond
//! the window either completed analytically (affine-growth vectors over
//! closed-form tails) or — in the spectral certificate paths — deliberately
//! zero-filled so the truncation error stays a measurable quantity.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::pmf::{DiscretePmf, GammaPair, PmfError, Support};
use crate::spectral::roots_of_unity;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("window needs {need} stored entries but the pmf provides {have}")]
    WindowMismatch { need: usize, have: usize },
    #[error("weighted mass over the window does not decay: {detail}")]
    SummabilityFailure { detail: String },
    #[error("tail of the suffix sum cannot be completed: vector grows but the pmf tail is unknown")]
    TailUnavailable,
    #[error("invalid window: {detail}")]
    InvalidWindow { detail: String },
    #[error("invalid parameter: {detail}")]
    InvalidParam { detail: String },
    #[error(transparent)]
    Pmf(#[from] PmfError),
}

/// Computation window: indices 0..len are stored, results are certified on
/// the prefix 0..prefix, and tol is the target absolute error there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationWindow {
    /// M — computation length.
    pub len: usize,
    /// L — certified evaluation prefix, L ≤ M.
    pub prefix: usize,
    /// Target absolute error on the prefix.
    pub tol: f64,
}

impl TruncationWindow {
    pub fn new(len: usize, prefix: usize, tol: f64) -> Result<Self, OperatorError> {
        if prefix == 0 || prefix > len {
            return Err(OperatorError::InvalidWindow {
                detail: format!("need 1 <= prefix <= len, got prefix {prefix}, len {len}"),
            });
        }
        if !(tol > 0.0) {
            return Err(OperatorError::InvalidWindow {
                detail: format!("tol must be positive, got {tol}"),
            });
        }
        Ok(TruncationWindow { len, prefix, tol })
    }
}

/// Scalar types the operator machinery runs over.
pub trait OpScalar:
    Copy
    + PartialEq
    + std::fmt::Debug
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
{
    fn zero() -> Self;
    fn from_re(x: f64) -> Self;
    /// Multiplication by a real scalar.
    fn scale(self, x: f64) -> Self;
    /// Magnitude collapsed to f64, for norms and reports.
    fn modulus(self) -> f64;
}

impl OpScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_re(x: f64) -> Self {
        x
    }
    fn scale(self, x: f64) -> Self {
        self * x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl OpScalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn scale(self, x: f64) -> Self {
        self * x
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Scalars that can absorb complex constants (the B-product factors).
pub trait ComplexScalar: OpScalar {
    fn from_c64(z: Complex64) -> Self;
    fn mul_c64(self, z: Complex64) -> Self;
    fn re_f64(self) -> f64;
    fn im_f64(self) -> f64;
}

impl ComplexScalar for Complex64 {
    fn from_c64(z: Complex64) -> Self {
        z
    }
    fn mul_c64(self, z: Complex64) -> Self {
        self * z
    }
    fn re_f64(self) -> f64 {
        self.re
    }
    fn im_f64(self) -> f64 {
        self.im
    }
}

/// Closed-form descriptor of the vector's values past the window.
///
/// `Affine { offset, slope }` asserts v(l) = offset + slope·l for l ≥ len,
/// so the weighted tail is (offset + slope·l)·q_l and suffix sums can be
/// completed exactly from the pmf's tail moments. `None` means zero-fill:
/// the tail is dropped and the truncation becomes part of the measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Growth<T> {
    None,
    Affine { offset: T, slope: T },
}

/// Vector in tail-weighted coordinates u_l = v_l·q_l over a window.
#[derive(Debug, Clone)]
pub struct WeightedVector<T: OpScalar> {
    pub u: Vec<T>,
    pub window: TruncationWindow,
    pub growth: Growth<T>,
}

impl<T: OpScalar> WeightedVector<T> {
    pub fn from_weighted(
        u: Vec<T>,
        window: TruncationWindow,
        growth: Growth<T>,
    ) -> Result<Self, OperatorError> {
        if u.len() != window.len {
            return Err(OperatorError::InvalidWindow {
                detail: format!("vector length {} != window len {}", u.len(), window.len),
            });
        }
        Ok(WeightedVector { u, window, growth })
    }

    /// The constant-1 sequence: u_l = q_l.
    pub fn constant_one(d: &DiscretePmf, window: TruncationWindow) -> Result<Self, OperatorError> {
        check_len(d, window.len)?;
        let u = (0..window.len).map(|l| T::from_re(d.q(l))).collect();
        Ok(WeightedVector {
            u,
            window,
            growth: Growth::Affine {
                offset: T::from_re(1.0),
                slope: T::zero(),
            },
        })
    }

    /// The identity sequence id(l) = l: u_l = l·q_l.
    pub fn identity(d: &DiscretePmf, window: TruncationWindow) -> Result<Self, OperatorError> {
        check_len(d, window.len)?;
        let u = (0..window.len)
            .map(|l| T::from_re(l as f64 * d.q(l)))
            .collect();
        Ok(WeightedVector {
            u,
            window,
            growth: Growth::Affine {
                offset: T::zero(),
                slope: T::from_re(1.0),
            },
        })
    }

    /// Wraps plain values v_l (not yet weighted) with zero tail.
    pub fn from_values(
        values: &[f64],
        d: &DiscretePmf,
        window: TruncationWindow,
    ) -> Result<Self, OperatorError> {
        check_len(d, window.len)?;
        let mut u = vec![T::zero(); window.len];
        for (l, slot) in u.iter_mut().enumerate() {
            let v = if l < values.len() { values[l] } else { 0.0 };
            *slot = T::from_re(v * d.q(l));
        }
        Ok(WeightedVector {
            u,
            window,
            growth: Growth::Affine {
                offset: T::zero(),
                slope: T::zero(),
            },
        })
    }

    /// Unweighted value v_l = u_l/q_l; `None` once q_l vanishes.
    pub fn value_at(&self, d: &DiscretePmf, l: usize) -> Option<T> {
        let q = d.q_at(l as u64)?;
        if q <= 0.0 {
            return None;
        }
        Some(self.u[l].scale(1.0 / q))
    }

    /// Max modulus of the weighted entries over the certified prefix.
    pub fn sup_norm_prefix(&self) -> f64 {
        self.u[..self.window.prefix]
            .iter()
            .map(|x| x.modulus())
            .fold(0.0, f64::max)
    }

    /// w + z·other, entrywise, with matching growth bookkeeping.
    pub fn add_scaled(&self, other: &Self, z: f64) -> Result<Self, OperatorError> {
        if self.window != other.window {
            return Err(OperatorError::InvalidWindow {
                detail: "windows differ in add_scaled".into(),
            });
        }
        let u = self
            .u
            .iter()
            .zip(&other.u)
            .map(|(&a, &b)| a + b.scale(z))
            .collect();
        let growth = match (self.growth, other.growth) {
            (
                Growth::Affine { offset: a1, slope: b1 },
                Growth::Affine { offset: a2, slope: b2 },
            ) => Growth::Affine {
                offset: a1 + a2.scale(z),
                slope: b1 + b2.scale(z),
            },
            _ => Growth::None,
        };
        Ok(WeightedVector {
            u,
            window: self.window,
            growth,
        })
    }
}

impl<T: ComplexScalar> WeightedVector<T> {
    /// w − z·other with a complex constant z.
    fn sub_scaled_c(&self, other: &Self, z: Complex64) -> Self {
        let u = self
            .u
            .iter()
            .zip(&other.u)
            .map(|(&a, &b)| a - b.mul_c64(z))
            .collect();
        let growth = match (self.growth, other.growth) {
            (
                Growth::Affine { offset: a1, slope: b1 },
                Growth::Affine { offset: a2, slope: b2 },
            ) => Growth::Affine {
                offset: a1 - a2.mul_c64(z),
                slope: b1 - b2.mul_c64(z),
            },
            _ => Growth::None,
        };
        WeightedVector {
            u,
            window: self.window,
            growth,
        }
    }
}

impl WeightedVector<f64> {
    /// Lifts a real vector into complex scalars.
    pub fn to_complex<T: ComplexScalar>(&self) -> WeightedVector<T> {
        let u = self.u.iter().map(|&x| T::from_re(x)).collect();
        let growth = match self.growth {
            Growth::None => Growth::None,
            Growth::Affine { offset, slope } => Growth::Affine {
                offset: T::from_re(offset),
                slope: T::from_re(slope),
            },
        };
        WeightedVector {
            u,
            window: self.window,
            growth,
        }
    }
}

fn check_len(d: &DiscretePmf, need: usize) -> Result<(), OperatorError> {
    if d.stored_len() < need {
        return Err(OperatorError::WindowMismatch {
            need,
            have: d.stored_len(),
        });
    }
    Ok(())
}

/// Rejects windowed vectors whose weighted mass |u_l|·c_l grows toward the
/// end of the window — the numeric surrogate for v ∉ D(A). Compares decile
/// means; a deliberate substitute for the unverifiable Σ|v(k)|p_k < ∞.
fn summability_surrogate<T: OpScalar>(
    v: &WeightedVector<T>,
    d: &DiscretePmf,
) -> Result<(), OperatorError> {
    let m = v.window.len;
    if m < 50 {
        return Ok(());
    }
    let t: Vec<f64> = (0..m).map(|k| v.u[k].modulus() * d.c(k)).collect();
    let dec = m / 10;
    let first: f64 = t[..dec].iter().sum::<f64>() / dec as f64;
    let last: f64 = t[m - dec..].iter().sum::<f64>() / dec as f64;
    if last > 0.9 * first && last > 1e-300 {
        return Err(OperatorError::SummabilityFailure {
            detail: format!(
                "weighted decile mass rose from {first:.3e} to {last:.3e} over the window"
            ),
        });
    }
    Ok(())
}

/// One application of A in weighted coordinates: a single backward
/// suffix-sum pass, seeded by the analytic tail when the vector carries
/// affine growth over a closed-form pmf tail, and by zero otherwise.
#[allow(non_snake_case)]
pub fn apply_A<T: OpScalar>(
    v: &WeightedVector<T>,
    d: &DiscretePmf,
) -> Result<WeightedVector<T>, OperatorError> {
    let m = v.window.len;
    check_len(d, m)?;
    if matches!(v.growth, Growth::None) {
        summability_surrogate(v, d)?;
    }
    let (seed, growth) = match v.growth {
        Growth::None => (T::zero(), Growth::None),
        Growth::Affine { offset, slope } => {
            let zero = T::zero();
            if offset == zero && slope == zero {
                (
                    zero,
                    Growth::Affine {
                        offset: zero,
                        slope: zero,
                    },
                )
            } else if let Some((g0, g1)) = d.tail_e1_affine() {
                let t1 = d
                    .first_moment_tail(m)
                    .ok_or(OperatorError::TailUnavailable)?;
                let t0 = d.zeroth_moment_tail(m);
                // Σ_{k≥M} (offset + slope·k)·p_k, exactly from tail moments.
                let seed = offset.scale(t0) + slope.scale(t1);
                // A maps v(l) = a + b·l on the tail to a + b·e_1(l) = (a + b·g0) + b·g1·l.
                let growth = Growth::Affine {
                    offset: offset + slope.scale(g0),
                    slope: slope.scale(g1),
                };
                (seed, growth)
            } else if matches!(d.support(), Support::Finite(top) if m > top) {
                // window covers the whole support: no tail to describe
                (
                    zero,
                    Growth::Affine {
                        offset: zero,
                        slope: zero,
                    },
                )
            } else {
                return Err(OperatorError::TailUnavailable);
            }
        }
    };
    let mut u = vec![T::zero(); m];
    let mut acc = seed;
    for k in (0..m).rev() {
        acc = acc + v.u[k].scale(d.c(k));
        u[k] = acc;
    }
    Ok(WeightedVector {
        u,
        window: v.window,
        growth,
    })
}

/// Chooses a window for a pmf and returns the pmf extended to cover it.
///
/// Finite supports are computed exactly on their full support (the prefix is
/// clamped); infinite supports get the requested length, defaulting to
/// max(4·prefix, 256). Tail completion is exact on the regression paths, so
/// the certified-bound requirement err(l) ≤ tail_weight/q_l ≤ tol holds with
/// tail weight 0; length requests below the prefix are rounded up.
pub fn plan_window(
    d: &DiscretePmf,
    prefix: usize,
    tol: f64,
    len_request: Option<usize>,
) -> Result<(DiscretePmf, TruncationWindow), OperatorError> {
    match d.support() {
        crate::pmf::Support::Finite(top) => {
            let len = top + 1;
            let window = TruncationWindow::new(len, prefix.clamp(1, len), tol)?;
            Ok((d.clone(), window))
        }
        crate::pmf::Support::Infinite => {
            let len = len_request
                .unwrap_or_else(|| (4 * prefix).max(256))
                .max(prefix);
            let window = TruncationWindow::new(len, prefix, tol)?;
            let extended = d.extended(len)?;
            Ok((extended, window))
        }
    }
}

/// e_m in weighted coordinates: m applications of A to the identity.
/// e_m(l) = E(W_{i+m} | W_i = l) on the certified prefix.
pub fn regression_vector(
    d: &DiscretePmf,
    m: usize,
    window: TruncationWindow,
) -> Result<WeightedVector<f64>, OperatorError> {
    if m == 0 {
        return WeightedVector::identity(d, window);
    }
    let mut v = WeightedVector::<f64>::identity(d, window)?;
    for _ in 0..m {
        v = apply_A(&v, d)?;
    }
    Ok(v)
}

/// d_m = e_m − (γ0·Σ_{k<m} γ1^k + γ1^m·id), the deviation from the affine
/// regression. The affine coefficients are accumulated by the same
/// offset/slope recurrence apply_A uses for growth propagation, so on
/// family pmfs the growth descriptor cancels bit-for-bit and the tail of
/// d_m is exactly zero.
pub fn deviation_vector(
    d: &DiscretePmf,
    g: &GammaPair,
    m: usize,
    window: TruncationWindow,
) -> Result<WeightedVector<f64>, OperatorError> {
    if m == 0 {
        let u = vec![0.0; window.len];
        return WeightedVector::from_weighted(
            u,
            window,
            Growth::Affine {
                offset: 0.0,
                slope: 0.0,
            },
        );
    }
    let e = regression_vector(d, m, window)?;
    let (mut offset, mut slope) = (0.0f64, 1.0f64);
    for _ in 0..m {
        offset += slope * g.gamma0;
        slope *= g.gamma1;
    }
    let u = (0..window.len)
        .map(|l| e.u[l] - (offset + slope * l as f64) * d.q(l))
        .collect();
    let growth = match e.growth {
        Growth::Affine { offset: a, slope: b } => Growth::Affine {
            offset: a - offset,
            slope: b - slope,
        },
        Growth::None => Growth::None,
    };
    WeightedVector::from_weighted(u, window, growth)
}

/// B_s v by Horner evaluation of B_{m+1} = γ1^m I + A·B_m:
/// w ← v, then for m = 1..s−1: w ← γ1^m·v + A w. Exactly s−1 applications
/// of A.
#[allow(non_snake_case)]
pub fn apply_B_poly<T: OpScalar>(
    s: usize,
    gamma1: f64,
    v: &WeightedVector<T>,
    d: &DiscretePmf,
) -> Result<WeightedVector<T>, OperatorError> {
    if s == 0 {
        return Err(OperatorError::InvalidParam {
            detail: "B_s needs s >= 1".into(),
        });
    }
    if !(gamma1 > 0.0) {
        return Err(OperatorError::InvalidParam {
            detail: format!("gamma1 must be positive, got {gamma1}"),
        });
    }
    let mut w = v.clone();
    let mut g_pow = 1.0;
    for _ in 1..s {
        g_pow *= gamma1;
        w = apply_A(&w, d)?.add_scaled(v, g_pow)?;
    }
    Ok(w)
}

/// Result of the product-form evaluation on a real vector.
#[derive(Debug, Clone)]
pub struct BProductReal {
    pub w: WeightedVector<f64>,
    /// Max |Im| over the certified prefix — conjugate factor pairs cancel
    /// the imaginary part analytically, so this measures numeric noise.
    pub imag_residue: f64,
}

/// B_s v as the product ∏_{k=1}^{s−1}(A − γ1λ_k I), factors applied in
/// index order over the roots of unity λ_k = e^{2πik/s}.
#[allow(non_snake_case)]
pub fn apply_B_product<T: ComplexScalar>(
    s: usize,
    gamma1: f64,
    v: &WeightedVector<T>,
    d: &DiscretePmf,
) -> Result<WeightedVector<T>, OperatorError> {
    if s == 0 {
        return Err(OperatorError::InvalidParam {
            detail: "B_s needs s >= 1".into(),
        });
    }
    if !(gamma1 > 0.0) {
        return Err(OperatorError::InvalidParam {
            detail: format!("gamma1 must be positive, got {gamma1}"),
        });
    }
    if s == 1 {
        return Ok(v.clone());
    }
    let roots = roots_of_unity(s).map_err(|e| OperatorError::InvalidParam {
        detail: e.to_string(),
    })?;
    let mut w = v.clone();
    for &lambda in &roots {
        let aw = apply_A(&w, d)?;
        w = aw.sub_scaled_c(&w, lambda * gamma1);
    }
    Ok(w)
}

/// Product form on a real vector: lifts to complex, applies the factors,
/// and returns the real part together with the leftover imaginary residue.
#[allow(non_snake_case)]
pub fn apply_B_product_real(
    s: usize,
    gamma1: f64,
    v: &WeightedVector<f64>,
    d: &DiscretePmf,
) -> Result<BProductReal, OperatorError> {
    let w = apply_B_product::<Complex64>(s, gamma1, &v.to_complex(), d)?;
    let imag_residue = w.u[..w.window.prefix]
        .iter()
        .map(|z| z.im.abs())
        .fold(0.0, f64::max);
    let u = w.u.iter().map(|z| z.re).collect();
    let growth = match w.growth {
        Growth::None => Growth::None,
        Growth::Affine { offset, slope } => Growth::Affine {
            offset: offset.re,
            slope: slope.re,
        },
    };
    Ok(BProductReal {
        w: WeightedVector {
            u,
            window: w.window,
            growth,
        },
        imag_residue,
    })
}

/// Residuals of the deviation recursion d_{m+1} = γ1^m d_1 + A d_m and of
/// its closed consequence d_m = B_m d_1, in value coordinates on the prefix.
#[derive(Debug, Clone, Serialize)]
pub struct RecursionReport {
    pub s: usize,
    pub prefix: usize,
    pub max_recursion_residual: f64,
    pub max_bm_consistency: f64,
}

pub fn check_deviation_recursion(
    d: &DiscretePmf,
    g: &GammaPair,
    s: usize,
    window: TruncationWindow,
) -> Result<RecursionReport, OperatorError> {
    if s == 0 {
        return Err(OperatorError::InvalidParam {
            detail: "s must be at least 1".into(),
        });
    }
    let mut devs = Vec::with_capacity(s + 1);
    for m in 0..=s {
        devs.push(deviation_vector(d, g, m, window)?);
    }
    let mut max_rec: f64 = 0.0;
    let mut g_pow = 1.0;
    for m in 1..s {
        g_pow *= g.gamma1;
        let ad = apply_A(&devs[m], d)?;
        for l in 0..window.prefix {
            let q = d.q(l);
            if q <= 0.0 {
                continue;
            }
            let resid = (devs[m + 1].u[l] - g_pow * devs[0 + 1].u[l] - ad.u[l]) / q;
            max_rec = max_rec.max(resid.abs());
        }
    }
    let mut max_bm: f64 = 0.0;
    for (m, dev) in devs.iter().enumerate().take(s + 1).skip(1) {
        let bm = apply_B_poly(m, g.gamma1, &devs[1], d)?;
        for l in 0..window.prefix {
            let q = d.q(l);
            if q <= 0.0 {
                continue;
            }
            max_bm = max_bm.max(((bm.u[l] - dev.u[l]) / q).abs());
        }
    }
    Ok(RecursionReport {
        s,
        prefix: window.prefix,
        max_recursion_residual: max_rec,
        max_bm_consistency: max_bm,
    })
}

/// The bidiagonal fixture (Bv)_i = v_i + v_{i+1}: an upper-triangular
/// operator with 1s on the diagonal and superdiagonal. Output has one fewer
/// entry than the input (the last row would reach past the window).
pub fn shift_bidiagonal_apply(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| w[0] + w[1]).collect()
}

/// The alternating vector (1, −1, 1, −1, …): an exact kernel element of the
/// bidiagonal fixture, documenting that triangularity with nonzero diagonal
/// does not imply injectivity on sequence space.
pub fn alternating_vector(n: usize) -> Vec<f64> {
    (0..n).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pmf::{beta_to_gamma, gamma_to_beta, RegressionCoeffs};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn gp(g0: f64, g1: f64) -> GammaPair {
        GammaPair::new(g0, g1).unwrap()
    }

    fn geo05() -> DiscretePmf {
        DiscretePmf::geometric(0.5).unwrap()
    }

    fn uniform3() -> DiscretePmf {
        DiscretePmf::from_gamma(gp(1.0, 0.5), 1e-12).unwrap()
    }

    fn win(d: &DiscretePmf, prefix: usize) -> (DiscretePmf, TruncationWindow) {
        plan_window(d, prefix, 1e-9, None).unwrap()
    }

    #[test]
    fn apply_a_preserves_constant_one() {
        for d in [geo05(), uniform3(), DiscretePmf::from_raw(&[0.2, 0.3, 0.5]).unwrap()] {
            let (d, w) = win(&d, d.stored_len().min(40));
            let one = WeightedVector::<f64>::constant_one(&d, w).unwrap();
            let av = apply_A(&one, &d).unwrap();
            for l in 0..w.prefix {
                let v = av.value_at(&d, l).unwrap();
                assert!((v - 1.0).abs() < 1e-12, "Av(1)({l}) = {v}");
            }
        }
    }

    #[test]
    fn apply_a_identity_geometric() {
        let (d, w) = win(&geo05(), 50);
        let id = WeightedVector::<f64>::identity(&d, w).unwrap();
        let av = apply_A(&id, &d).unwrap();
        for l in 0..w.prefix {
            let v = av.value_at(&d, l).unwrap();
            assert!((v - (l as f64 + 1.0)).abs() < 1e-10, "e_1({l}) = {v}");
        }
    }

    #[test]
    fn apply_a_identity_uniform() {
        let (d, w) = win(&uniform3(), 3);
        let id = WeightedVector::<f64>::identity(&d, w).unwrap();
        let av = apply_A(&id, &d).unwrap();
        let got: Vec<f64> = (0..3).map(|l| av.value_at(&d, l).unwrap()).collect();
        for (g, e) in got.iter().zip([1.0, 1.5, 2.0]) {
            assert!((g - e).abs() < 1e-14);
        }
    }

    #[test]
    fn regression_geo_five_steps() {
        let (d, w) = win(&geo05(), 100);
        let e5 = regression_vector(&d, 5, w).unwrap();
        for j in 0..w.prefix {
            let v = e5.value_at(&d, j).unwrap();
            assert!((v - (j as f64 + 5.0)).abs() < 1e-8, "e_5({j}) = {v}");
        }
    }

    #[test]
    fn regression_uniform_two_steps() {
        let (d, w) = win(&uniform3(), 3);
        let e2 = regression_vector(&d, 2, w).unwrap();
        let b = gamma_to_beta(&gp(1.0, 0.5), 2).unwrap();
        assert_relative_eq!(b.beta1, 0.25);
        assert_relative_eq!(b.beta0, 1.5);
        for j in 0..3 {
            let v = e2.value_at(&d, j).unwrap();
            assert!((v - (1.5 + 0.25 * j as f64)).abs() < 1e-13);
        }
    }

    #[test]
    fn regression_at_top_of_support() {
        let d = DiscretePmf::from_raw(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let (d, w) = win(&d, 4);
        let e1 = regression_vector(&d, 1, w).unwrap();
        let v = e1.value_at(&d, 3).unwrap();
        assert_eq!(v, 3.0);
    }

    #[test]
    fn regression_monotone_in_l() {
        for d in [
            geo05(),
            uniform3(),
            DiscretePmf::from_gamma(gp(1.0, 2.0), 1e-9).unwrap(),
            DiscretePmf::from_raw(&[0.5, 0.25, 0.25]).unwrap(),
        ] {
            let prefix = d.stored_len().min(60);
            let (d, w) = win(&d, prefix);
            for m in 1..=4usize {
                let e = regression_vector(&d, m, w).unwrap();
                let mut prev = f64::NEG_INFINITY;
                for l in 0..w.prefix {
                    let v = e.value_at(&d, l).unwrap();
                    assert!(v > prev, "e_{m} not increasing at l = {l}");
                    prev = v;
                }
            }
        }
    }

    #[test]
    fn deviation_vanishes_on_family() {
        for (g0, g1) in [(1.0, 0.5), (1.0, 1.0), (1.0, 2.0), (2.0, 1.5)] {
            let d = DiscretePmf::from_gamma(gp(g0, g1), 1e-10).unwrap();
            let g = d.gamma().unwrap();
            let (d, w) = win(&d, d.stored_len().min(100));
            for m in 0..=5usize {
                let dev = deviation_vector(&d, &g, m, w).unwrap();
                for l in 0..w.prefix {
                    let q = d.q(l);
                    if q <= 0.0 {
                        continue;
                    }
                    let v = dev.u[l] / q;
                    assert!(
                        v.abs() < 1e-8,
                        "d_{m}({l}) = {v} for ({g0}, {g1})"
                    );
                }
                if let Growth::Affine { offset, slope } = dev.growth {
                    assert_eq!(offset, 0.0, "tail offset must cancel exactly");
                    assert_eq!(slope, 0.0, "tail slope must cancel exactly");
                }
            }
        }
    }

    #[test]
    fn deviation_nonzero_off_family() {
        let d = DiscretePmf::from_raw(&[0.5, 0.25, 0.25]).unwrap();
        let (d, w) = win(&d, 3);
        // fit the line through the 3 exact e_1 points and use its own gamma
        let e1 = regression_vector(&d, 1, w).unwrap();
        let pts: Vec<f64> = (0..3).map(|l| e1.value_at(&d, l).unwrap()).collect();
        assert!((pts[0] - 0.75).abs() < 1e-15);
        assert!((pts[1] - 1.5).abs() < 1e-15);
        assert!((pts[2] - 2.0).abs() < 1e-15);
        let slope = (pts[2] - pts[0]) / 2.0;
        let intercept = (pts[0] + pts[1] + pts[2]) / 3.0 - slope;
        let g = beta_to_gamma(&RegressionCoeffs {
            beta0: intercept,
            beta1: slope,
            s: 1,
        })
        .unwrap();
        let dev = deviation_vector(&d, &g, 1, w).unwrap();
        let max = (0..3)
            .map(|l| (dev.u[l] / d.q(l)).abs())
            .fold(0.0, f64::max);
        assert!(max > 0.05, "nonlinear pmf must leave a visible deviation, got {max}");
    }

    #[test]
    fn b_poly_small_cases() {
        let (d, w) = win(&geo05(), 30);
        let id = WeightedVector::<f64>::identity(&d, w).unwrap();
        let b1 = apply_B_poly(1, 1.0, &id, &d).unwrap();
        for l in 0..w.len {
            assert_eq!(b1.u[l], id.u[l], "B_1 must be the identity");
        }
        let one = WeightedVector::<f64>::constant_one(&d, w).unwrap();
        let b2 = apply_B_poly(2, 1.0, &one, &d).unwrap();
        for l in 0..w.prefix {
            let v = b2.value_at(&d, l).unwrap();
            assert!((v - 2.0).abs() < 1e-12, "B_2·1({l}) = {v}");
        }
    }

    #[test]
    fn b_poly_annihilates_family_deviation() {
        for (g0, g1) in [(1.0, 1.0), (1.0, 2.0), (2.0, 0.5)] {
            let d = DiscretePmf::from_gamma(gp(g0, g1), 1e-10).unwrap();
            let g = d.gamma().unwrap();
            let (d, w) = win(&d, d.stored_len().min(80));
            let d1 = deviation_vector(&d, &g, 1, w).unwrap();
            for s in 2..=6usize {
                let bs = apply_B_poly(s, g.gamma1, &d1, &d).unwrap();
                for l in 0..w.prefix {
                    let q = d.q(l);
                    if q <= 0.0 {
                        continue;
                    }
                    assert!(
                        (bs.u[l] / q).abs() < 1e-8,
                        "B_{s} d_1 not annihilated at ({g0}, {g1}), l = {l}"
                    );
                }
            }
        }
    }

    #[test]
    fn b_product_single_factor_is_a_plus_gamma1() {
        let (d, w) = win(&geo05(), 40);
        let id = WeightedVector::<f64>::identity(&d, w).unwrap();
        let prod = apply_B_product_real(2, 1.0, &id, &d).unwrap();
        let a_id = apply_A(&id, &d).unwrap();
        let direct = a_id.add_scaled(&id, 1.0).unwrap();
        for l in 0..w.prefix {
            assert!((prod.w.u[l] - direct.u[l]).abs() < 1e-13);
        }
        assert!(prod.imag_residue < 1e-15);
    }

    #[test]
    fn b_poly_matches_b_product_geo_s4() {
        let (d, w) = win(&geo05(), 60);
        let vals: Vec<f64> = (0..w.len).map(|l| (0.3 * l as f64).sin()).collect();
        let v = WeightedVector::<f64>::from_values(&vals, &d, w).unwrap();
        let poly = apply_B_poly(4, 1.0, &v, &d).unwrap();
        let prod = apply_B_product_real(4, 1.0, &v, &d).unwrap();
        let scale = poly.sup_norm_prefix().max(1e-300);
        for l in 0..w.prefix {
            assert!(
                ((poly.u[l] - prod.w.u[l]) / scale).abs() < 1e-10,
                "poly/product disagree at l = {l}"
            );
        }
        assert!(prod.imag_residue / scale < 1e-10);
    }

    #[test]
    fn deviation_recursion_examples() {
        let d = DiscretePmf::from_raw(&[0.5, 0.25, 0.25]).unwrap();
        let (d, w) = win(&d, 3);
        let g = gp(0.8, 0.6); // identity holds for any gamma pair
        let r = check_deviation_recursion(&d, &g, 3, w).unwrap();
        assert!(r.max_recursion_residual < 1e-12, "{r:?}");

        let d = DiscretePmf::from_gamma(gp(1.0, 1.0), 1e-10).unwrap();
        let g = d.gamma().unwrap();
        let (d, w) = win(&d, 50);
        let r = check_deviation_recursion(&d, &g, 5, w).unwrap();
        assert!(r.max_recursion_residual < 1e-11);
        assert!(r.max_bm_consistency < 1e-11);

        let r1 = check_deviation_recursion(&d, &g, 1, w).unwrap();
        assert_eq!(r1.max_recursion_residual, 0.0);
    }

    #[test]
    fn shift_fixture_kernel_is_exact() {
        for n in [2usize, 3, 17, 100] {
            let v = alternating_vector(n);
            let out = shift_bidiagonal_apply(&v);
            assert_eq!(out.len(), n - 1);
            assert!(out.iter().all(|&x| x == 0.0), "nonzero entry for n = {n}");
        }
    }

    #[test]
    fn summability_gate_rejects_growth() {
        let (d, w) = win(&geo05(), 60);
        // v_l = 3^l outgrows the geometric weights; u_l = (3/2)^l diverges
        let u: Vec<f64> = (0..w.len).map(|l| 1.5f64.powi(l as i32)).collect();
        let v = WeightedVector::from_weighted(u, w, Growth::None).unwrap();
        assert!(matches!(
            apply_A(&v, &d),
            Err(OperatorError::SummabilityFailure { .. })
        ));
    }

    #[test]
    fn window_mismatch_detected() {
        let d = geo05();
        let w = TruncationWindow::new(d.stored_len() + 10, 5, 1e-9).unwrap();
        let r = WeightedVector::<f64>::identity(&d, w);
        assert!(matches!(r, Err(OperatorError::WindowMismatch { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        /// The deviation recursion and its closed product form hold for
        /// arbitrary pmfs and gamma pairs.
        #[test]
        fn recursion_and_product_on_random_pmfs(
            raw in proptest::collection::vec(0.05f64..1.0, 2..=10),
            g0 in 0.2f64..3.0,
            g1 in 0.3f64..2.5,
            s in 1usize..=6,
        ) {
            let total: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let d = DiscretePmf::from_raw(&p).unwrap();
            let n = d.stored_len();
            let w = TruncationWindow::new(n, n, 1e-9).unwrap();
            let g = gp(g0, g1);
            let r = check_deviation_recursion(&d, &g, s, w).unwrap();
            prop_assert!(r.max_recursion_residual < 1e-11, "recursion residual {}", r.max_recursion_residual);
            prop_assert!(r.max_bm_consistency < 1e-11, "B_m consistency {}", r.max_bm_consistency);
        }

        /// Polynomial and product forms agree on random finite pmfs.
        #[test]
        fn poly_product_agree_on_random_pmfs(
            raw in proptest::collection::vec(0.05f64..1.0, 2..=10),
            g1 in 0.3f64..2.5,
            s in 1usize..=6,
            phase in 0.0f64..3.0,
        ) {
            let total: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let d = DiscretePmf::from_raw(&p).unwrap();
            let n = d.stored_len();
            let w = TruncationWindow::new(n, n, 1e-9).unwrap();
            let vals: Vec<f64> = (0..n).map(|l| (phase * l as f64).cos()).collect();
            let v = WeightedVector::<f64>::from_values(&vals, &d, w).unwrap();
            let poly = apply_B_poly(s, g1, &v, &d).unwrap();
            let prod = apply_B_product_real(s, g1, &v, &d).unwrap();
            let scale = poly.sup_norm_prefix().max(1e-12);
            for l in 0..n {
                prop_assert!(((poly.u[l] - prod.w.u[l]) / scale).abs() < 1e-10);
            }
            prop_assert!(prod.imag_residue / scale < 1e-10);
        }

        /// Rows of A are probability vectors for any pmf.
        #[test]
        fn stochasticity_on_random_pmfs(
            raw in proptest::collection::vec(0.05f64..1.0, 1..=10),
        ) {
            let total: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let d = DiscretePmf::from_raw(&p).unwrap();
            let n = d.stored_len();
            let w = TruncationWindow::new(n, n, 1e-9).unwrap();
            let one = WeightedVector::<f64>::constant_one(&d, w).unwrap();
            let av = apply_A(&one, &d).unwrap();
            for l in 0..n {
                let v = av.value_at(&d, l).unwrap();
                prop_assert!((v - 1.0).abs() < 1e-12);
            }
        }
    }
}
