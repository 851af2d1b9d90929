//! Discrete parent distributions for weak-record chains.
//!
//! A law on {0, 1, …, N} (N ≤ ∞) is held as its probability prefix `p`,
//! tail sequence `q_k = P(X ≥ k)`, and hazards `c_k = p_k/q_k`. Three
//! parametric families arise from requiring the adjacent record regression
//! to be affine, E(W_{i+1} | W_i = j) = γ0 + γ1·j:
//!
//! * γ1 < 1 — finite support N = γ0/(1−γ1), which must be a positive integer;
//! * γ1 = 1 — geometric with success probability 1/(1+γ0);
//! * γ1 > 1 — infinite support with rational tail decay q_j ~ j^{−γ1/(γ1−1)}.
//!
//! All three satisfy the tail recursion
//! q_{j+1}·(γ0 + γ1 − (1−γ1)j) = q_j·(γ0 − (1−γ1)j), which is what the
//! constructor iterates. Infinite supports store a prefix and carry an exact
//! closed-form tail descriptor so downstream suffix sums can be completed
//! analytically instead of truncated.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

/// Longest stored prefix the constructors will materialize.
const MAX_STORED: usize = 1 << 23;

/// Shortest stored prefix for infinite supports.
const MIN_STORED: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum PmfError {
    #[error("gamma parameters must be positive finite reals, got ({gamma0}, {gamma1})")]
    InvalidGamma { gamma0: f64, gamma1: f64 },
    #[error("gamma1 < 1 requires gamma0/(1-gamma1) to be a positive integer within 1e-9, got {value}")]
    NonIntegerSupport { value: f64 },
    #[error("probabilities must sum to 1 within 1e-9, got {sum}")]
    NotNormalized { sum: f64 },
    #[error("probability at index {index} is negative")]
    NegativeMass { index: usize },
    #[error("probability at index {index} is zero inside the support; hazards must stay in (0,1)")]
    ZeroMass { index: usize },
    #[error("invalid regression coefficients: {detail}")]
    InvalidCoeffs { detail: String },
    #[error("prefix must leave positive tail mass and contain no zero atoms: {detail}")]
    InvalidPrefix { detail: String },
    #[error("requested table of {requested} entries exceeds the {MAX_STORED}-entry cap")]
    TableTooLarge { requested: usize },
    #[error("pmf with an unknown tail cannot be extended beyond its stored prefix")]
    CannotExtend,
}

/// Regression pair of the adjacent-step conditional mean e_1(j) = γ0 + γ1·j.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaPair {
    pub gamma0: f64,
    pub gamma1: f64,
}

impl GammaPair {
    pub fn new(gamma0: f64, gamma1: f64) -> Result<Self, PmfError> {
        if !(gamma0 > 0.0 && gamma1 > 0.0 && gamma0.is_finite() && gamma1.is_finite()) {
            return Err(PmfError::InvalidGamma { gamma0, gamma1 });
        }
        Ok(GammaPair { gamma0, gamma1 })
    }
}

/// Coefficients of the s-step regression E(W_{i+s} | W_i = j) = β0 + β1·j.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionCoeffs {
    pub beta0: f64,
    pub beta1: f64,
    pub s: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Support {
    Finite(usize),
    Infinite,
}

/// Provenance of the distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// Built from a GammaPair by the adjacent-linearity recursion.
    Parametric(GammaPair),
    /// User-supplied finite probability vector.
    Raw,
    /// User-supplied prefix of an otherwise unspecified law.
    Prefix,
}

/// Closed-form continuation of `q` past the stored prefix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailModel {
    /// Finite support: nothing past the end.
    Finite,
    /// q_{k+1} = ratio·q_k for every k (constant hazard).
    Geometric { ratio: f64 },
    /// q_j = exp(lnΓ(a+j) − lnΓ(b+j) + ln_scale); decays like j^{a−b}.
    Rational { a: f64, b: f64, ln_scale: f64 },
    /// No continuation is known.
    Unknown,
}

/// Discrete law with tails, hazards, and an exact tail descriptor.
#[derive(Debug, Clone)]
pub struct DiscretePmf {
    p: Vec<f64>,
    q: Vec<f64>,
    c: Vec<f64>,
    support: Support,
    family: Family,
    tail_model: TailModel,
    /// Suffix first moments Σ_{i≥k} i·p_i for finite supports (len = p.len()+1).
    moment1_suffix: Option<Vec<f64>>,
}

impl DiscretePmf {
    /// Builds the unique family law with e_1(j) = γ0 + γ1·j.
    ///
    /// For infinite supports the stored prefix is the shortest one whose
    /// remaining tail mass is below `tail_mass_target` (capped at
    /// `MAX_STORED` entries; the closed-form tail model is exact either way).
    pub fn from_gamma(g: GammaPair, tail_mass_target: f64) -> Result<Self, PmfError> {
        assert!(
            tail_mass_target > 0.0 && tail_mass_target < 1.0,
            "tail_mass_target must lie in (0,1)"
        );
        let GammaPair { gamma0, gamma1 } = g;
        if gamma1 < 1.0 {
            let n_real = gamma0 / (1.0 - gamma1);
            let n = n_real.round();
            if (n_real - n).abs() > 1e-9 || n < 1.0 {
                return Err(PmfError::NonIntegerSupport { value: n_real });
            }
            let n = n as usize;
            if n + 1 > MAX_STORED {
                return Err(PmfError::TableTooLarge { requested: n + 1 });
            }
            // Snap γ0 so the support endpoint is exact; then the hazard
            // denominator γ1 + (1−γ1)(N−j) hits γ1 exactly at j = N, making
            // c_N = 1 and q_{N+1} = 0 in floating point, not just nearly.
            let gamma0 = (1.0 - gamma1) * n as f64;
            let g = GammaPair { gamma0, gamma1 };
            let mut p = Vec::with_capacity(n + 1);
            let mut q = Vec::with_capacity(n + 2);
            let mut c = Vec::with_capacity(n + 1);
            q.push(1.0);
            for j in 0..=n {
                let cj = gamma1 / (gamma1 + (1.0 - gamma1) * (n - j) as f64);
                let qj = q[j];
                let pj = qj * cj;
                c.push(cj);
                p.push(pj);
                q.push(qj - pj);
            }
            let pmf = DiscretePmf {
                moment1_suffix: Some(suffix_first_moments(&p)),
                p,
                q,
                c,
                support: Support::Finite(n),
                family: Family::Parametric(g),
                tail_model: TailModel::Finite,
            };
            pmf.validate();
            Ok(pmf)
        } else {
            Self::build_infinite(g, |q_m, m| q_m < tail_mass_target || m >= MAX_STORED)
        }
    }

    /// Rebuilds an infinite family prefix out to at least `min_len` entries.
    fn build_infinite(
        g: GammaPair,
        stop: impl Fn(f64, usize) -> bool,
    ) -> Result<Self, PmfError> {
        let GammaPair { gamma0, gamma1 } = g;
        debug_assert!(gamma1 >= 1.0);
        let mut p = Vec::new();
        let mut q = vec![1.0];
        let mut c = Vec::new();
        let mut j = 0usize;
        loop {
            let cj = gamma1 / (gamma0 + gamma1 + (gamma1 - 1.0) * j as f64);
            let qj = q[j];
            let pj = qj * cj;
            c.push(cj);
            p.push(pj);
            q.push(qj - pj);
            j += 1;
            if j >= MIN_STORED && stop(q[j], j) {
                break;
            }
        }
        let tail_model = if gamma1 == 1.0 {
            TailModel::Geometric { ratio: 1.0 - c[0] }
        } else {
            let a = gamma0 / (gamma1 - 1.0);
            let b = (gamma0 + gamma1) / (gamma1 - 1.0);
            TailModel::Rational {
                a,
                b,
                ln_scale: ln_gamma(b) - ln_gamma(a),
            }
        };
        let pmf = DiscretePmf {
            p,
            q,
            c,
            support: Support::Infinite,
            family: Family::Parametric(g),
            tail_model,
            moment1_suffix: None,
        };
        pmf.validate();
        Ok(pmf)
    }

    /// Wraps an explicit finite probability vector.
    ///
    /// The vector is renormalized through its suffix sums so that q_0 = 1,
    /// q_{k+1} = q_k − p_k, and c_N = 1 hold exactly. Trailing zeros are
    /// dropped; zeros inside the support are rejected because every hazard
    /// below the endpoint must lie in (0,1).
    pub fn from_raw(p_in: &[f64]) -> Result<Self, PmfError> {
        for (index, &v) in p_in.iter().enumerate() {
            if v < 0.0 || !v.is_finite() {
                return Err(PmfError::NegativeMass { index });
            }
        }
        let end = p_in
            .iter()
            .rposition(|&v| v > 0.0)
            .ok_or(PmfError::NotNormalized { sum: 0.0 })?;
        let p_in = &p_in[..=end];
        if let Some(index) = p_in.iter().position(|&v| v == 0.0) {
            return Err(PmfError::ZeroMass { index });
        }
        let mut suffix = vec![0.0; p_in.len() + 1];
        for k in (0..p_in.len()).rev() {
            suffix[k] = suffix[k + 1] + p_in[k];
        }
        let total = suffix[0];
        if (total - 1.0).abs() > 1e-9 {
            return Err(PmfError::NotNormalized { sum: total });
        }
        let n = p_in.len() - 1;
        // q by the exact subtraction chain; the endpoint atom absorbs the
        // rounding so that q_{N+1} = 0 and c_N = 1 hold exactly too.
        let mut q = vec![1.0f64; n + 2];
        let mut p = vec![0.0f64; n + 1];
        for k in 0..n {
            p[k] = p_in[k] / total;
            q[k + 1] = q[k] - p[k];
            if q[k + 1] <= 0.0 {
                return Err(PmfError::ZeroMass { index: k + 1 });
            }
        }
        p[n] = q[n];
        q[n + 1] = 0.0;
        let mut c: Vec<f64> = (0..=n).map(|k| p[k] / q[k]).collect();
        c[n] = 1.0;
        let pmf = DiscretePmf {
            moment1_suffix: Some(suffix_first_moments(&p)),
            p,
            q,
            c,
            support: Support::Finite(n),
            family: Family::Raw,
            tail_model: TailModel::Finite,
        };
        pmf.validate();
        Ok(pmf)
    }

    /// Wraps a strict prefix of an unspecified infinite law.
    ///
    /// The entries must be positive and sum to strictly less than 1; the
    /// remainder stays as unresolved tail mass with `TailModel::Unknown`.
    /// Spectral tests on such a pmf fall back to numeric trend verdicts.
    pub fn from_prefix(p_in: &[f64]) -> Result<Self, PmfError> {
        if p_in.is_empty() {
            return Err(PmfError::InvalidPrefix {
                detail: "empty prefix".into(),
            });
        }
        for (index, &v) in p_in.iter().enumerate() {
            if v < 0.0 || !v.is_finite() {
                return Err(PmfError::NegativeMass { index });
            }
            if v == 0.0 {
                return Err(PmfError::ZeroMass { index });
            }
        }
        let mut q = vec![1.0];
        for (k, &pk) in p_in.iter().enumerate() {
            let next = q[k] - pk;
            if next <= 0.0 {
                return Err(PmfError::InvalidPrefix {
                    detail: format!("prefix mass reaches 1 by index {k}, leaving no tail"),
                });
            }
            q.push(next);
        }
        let c: Vec<f64> = (0..p_in.len()).map(|k| p_in[k] / q[k]).collect();
        let pmf = DiscretePmf {
            p: p_in.to_vec(),
            q,
            c,
            support: Support::Infinite,
            family: Family::Prefix,
            tail_model: TailModel::Unknown,
            moment1_suffix: None,
        };
        pmf.validate();
        Ok(pmf)
    }

    /// Geometric law with success probability `theta`: p_k = θ(1−θ)^k.
    pub fn geometric(theta: f64) -> Result<Self, PmfError> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(PmfError::InvalidGamma {
                gamma0: (1.0 - theta) / theta,
                gamma1: 1.0,
            });
        }
        Self::from_gamma(
            GammaPair {
                gamma0: (1.0 - theta) / theta,
                gamma1: 1.0,
            },
            1e-12,
        )
    }

    /// Returns a copy whose stored prefix has at least `min_len` entries.
    pub fn extended(&self, min_len: usize) -> Result<Self, PmfError> {
        if min_len <= self.stored_len() {
            return Ok(self.clone());
        }
        if min_len > MAX_STORED {
            return Err(PmfError::TableTooLarge {
                requested: min_len,
            });
        }
        match (self.family, self.support) {
            (_, Support::Finite(_)) => Ok(self.clone()),
            (Family::Parametric(g), Support::Infinite) => {
                Self::build_infinite(g, |_, m| m >= min_len)
            }
            _ => Err(PmfError::CannotExtend),
        }
    }

    pub fn stored_len(&self) -> usize {
        self.p.len()
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn tail_model(&self) -> TailModel {
        self.tail_model
    }

    pub fn gamma(&self) -> Option<GammaPair> {
        match self.family {
            Family::Parametric(g) => Some(g),
            _ => None,
        }
    }

    /// Human-readable family label for reports.
    pub fn family_label(&self) -> &'static str {
        match (self.family, self.tail_model) {
            (Family::Raw, _) => "raw",
            (Family::Prefix, _) => "prefix",
            (Family::Parametric(_), TailModel::Finite) => "finite-linear",
            (Family::Parametric(_), TailModel::Geometric { .. }) => "geometric",
            (Family::Parametric(_), TailModel::Rational { .. }) => "rational-tail",
            (Family::Parametric(_), TailModel::Unknown) => unreachable!(),
        }
    }

    /// p_k for k inside the stored prefix.
    pub fn p(&self, k: usize) -> f64 {
        self.p[k]
    }

    /// q_k for k ≤ stored_len (the last entry is the unstored tail mass).
    pub fn q(&self, k: usize) -> f64 {
        self.q[k]
    }

    /// c_k for k inside the stored prefix.
    pub fn c(&self, k: usize) -> f64 {
        self.c[k]
    }

    /// The stored tail-mass array q_0..q_{stored_len} as a slice, for
    /// binary searches over the CDF.
    pub fn q_prefix(&self) -> &[f64] {
        &self.q
    }

    /// p_k for arbitrary k, via the closed-form tail hazard when k is past
    /// the stored prefix. `None` when the tail is unknown.
    pub fn p_at(&self, k: u64) -> Option<f64> {
        if k < self.stored_len() as u64 {
            return Some(self.p[k as usize]);
        }
        match self.tail_model {
            TailModel::Finite => Some(0.0),
            _ => Some(self.q_at(k)? * self.c_at(k)?),
        }
    }

    /// q_k for arbitrary k, using the closed-form tail when k is past the
    /// stored prefix. `None` when the tail is unknown.
    pub fn q_at(&self, k: u64) -> Option<f64> {
        if k <= self.stored_len() as u64 {
            return Some(self.q[k as usize]);
        }
        match self.tail_model {
            TailModel::Finite => Some(0.0),
            TailModel::Geometric { ratio } => {
                let n = self.stored_len() as u64;
                Some(self.q[n as usize] * ratio.powf((k - n) as f64))
            }
            TailModel::Rational { a, b, ln_scale } => {
                let kf = k as f64;
                Some((ln_gamma(a + kf) - ln_gamma(b + kf) + ln_scale).exp())
            }
            TailModel::Unknown => None,
        }
    }

    /// c_k for arbitrary k past the stored prefix, from the tail model.
    pub fn c_at(&self, k: u64) -> Option<f64> {
        if k < self.stored_len() as u64 {
            return Some(self.c[k as usize]);
        }
        match self.tail_model {
            TailModel::Finite => None,
            TailModel::Geometric { ratio } => Some(1.0 - ratio),
            TailModel::Rational { .. } => {
                let g = self.gamma().expect("rational tails are gamma-built");
                Some(g.gamma1 / (g.gamma0 + g.gamma1 + (g.gamma1 - 1.0) * k as f64))
            }
            TailModel::Unknown => None,
        }
    }

    /// Affine coefficients (g0, g1) of the adjacent regression on the tail:
    /// E(W_{i+1} | W_i = l) = g0 + g1·l for l at or past the stored prefix.
    ///
    /// For finite supports the weighted tail is identically zero, so (0, 0)
    /// is returned and never actually weighs in. Unknown tails yield `None`.
    pub fn tail_e1_affine(&self) -> Option<(f64, f64)> {
        match self.family {
            // e_1(l) = γ0 + γ1·l holds exactly on the whole support of a
            // family law, finite supports included (γ0 + γ1·N = N there)
            Family::Parametric(g) => Some((g.gamma0, g.gamma1)),
            _ => None,
        }
    }

    /// Σ_{k≥m} k·p_k for m within the stored prefix, completed in closed form.
    /// `None` when the tail is unknown.
    pub fn first_moment_tail(&self, m: usize) -> Option<f64> {
        assert!(m <= self.stored_len());
        match self.tail_model {
            TailModel::Finite => {
                let mom = self.moment1_suffix.as_ref().expect("finite supports store moments");
                Some(mom[m])
            }
            TailModel::Geometric { .. } | TailModel::Rational { .. } => {
                let (g0, g1) = self.tail_e1_affine().expect("family tail");
                Some((g0 + g1 * m as f64) * self.q[m])
            }
            TailModel::Unknown => None,
        }
    }

    /// Σ_{k≥m} p_k = q_m for m within the stored prefix.
    pub fn zeroth_moment_tail(&self, m: usize) -> f64 {
        self.q[m]
    }

    /// Full first moment Σ k·p_k with the stored sum completed analytically.
    /// `None` when the tail is unknown.
    pub fn mean(&self) -> Option<f64> {
        let partial = self.partial_mean();
        self.first_moment_tail(self.stored_len())
            .map(|tail| partial + tail)
    }

    /// Σ k·p_k over the stored prefix only.
    pub fn partial_mean(&self) -> f64 {
        self.p
            .iter()
            .enumerate()
            .map(|(k, &pk)| k as f64 * pk)
            .sum()
    }

    fn validate(&self) {
        let n = self.p.len();
        assert!(n > 0, "pmf must store at least one atom");
        assert_eq!(self.q.len(), n + 1);
        assert_eq!(self.c.len(), n);
        assert_eq!(self.q[0], 1.0);
        for k in 0..n {
            debug_assert!(self.p[k] >= 0.0 && self.p[k].is_finite());
            debug_assert!(
                self.q[k + 1] == self.q[k] - self.p[k],
                "tail recursion broken at {k}"
            );
        }
        match self.support {
            Support::Finite(top) => {
                assert_eq!(n, top + 1);
                assert_eq!(self.c[top], 1.0, "hazard at the support end must be 1");
                assert_eq!(self.q[top + 1], 0.0);
                for k in 0..top {
                    assert!(
                        self.c[k] > 0.0 && self.c[k] < 1.0,
                        "hazard {} out of (0,1) at {k}",
                        self.c[k]
                    );
                }
            }
            Support::Infinite => {
                for k in 0..n {
                    assert!(
                        self.c[k] > 0.0 && self.c[k] < 1.0,
                        "hazard {} out of (0,1) at {k}",
                        self.c[k]
                    );
                }
                // deep extensions may drive the stored q into (or through)
                // the denormal range; hazards stay exact via closed forms,
                // so a vanished stored tail is legal for family laws only
                if matches!(self.family, Family::Parametric(_)) {
                    assert!(self.q[n] >= 0.0, "stored tail mass went negative");
                } else {
                    assert!(self.q[n] > 0.0, "infinite support must keep tail mass");
                }
            }
        }
    }
}

fn suffix_first_moments(p: &[f64]) -> Vec<f64> {
    let mut mom = vec![0.0; p.len() + 1];
    for k in (0..p.len()).rev() {
        mom[k] = mom[k + 1] + k as f64 * p[k];
    }
    mom
}

/// Σ_{k=0}^{s−1} g^k, the partial geometric sum regular at g = 1.
pub fn geom_sum(g: f64, s: usize) -> f64 {
    let mut acc = 0.0;
    let mut pow = 1.0;
    for _ in 0..s {
        acc += pow;
        pow *= g;
    }
    acc
}

/// Maps s-step regression coefficients to the adjacent-step pair:
/// γ1 = β1^{1/s}, γ0 = β0 / Σ_{k<s} γ1^k.
pub fn beta_to_gamma(b: &RegressionCoeffs) -> Result<GammaPair, PmfError> {
    if b.s == 0 {
        return Err(PmfError::InvalidCoeffs {
            detail: "s must be at least 1".into(),
        });
    }
    if !(b.beta0 > 0.0 && b.beta1 > 0.0) || !b.beta0.is_finite() || !b.beta1.is_finite() {
        return Err(PmfError::InvalidCoeffs {
            detail: format!("beta0 = {}, beta1 = {} must be positive", b.beta0, b.beta1),
        });
    }
    let gamma1 = b.beta1.powf(1.0 / b.s as f64);
    let gamma0 = b.beta0 / geom_sum(gamma1, b.s);
    GammaPair::new(gamma0, gamma1)
}

/// Maps the adjacent-step pair to s-step coefficients:
/// β1 = γ1^s, β0 = γ0 · Σ_{k<s} γ1^k.
pub fn gamma_to_beta(g: &GammaPair, s: usize) -> Result<RegressionCoeffs, PmfError> {
    if s == 0 {
        return Err(PmfError::InvalidCoeffs {
            detail: "s must be at least 1".into(),
        });
    }
    Ok(RegressionCoeffs {
        beta0: g.gamma0 * geom_sum(g.gamma1, s),
        beta1: g.gamma1.powi(s as i32),
        s,
    })
}

/// Verdict of the finite-conditional-moments check.
#[derive(Debug, Clone, Serialize)]
pub struct MembershipReport {
    pub member: bool,
    pub conclusive: bool,
    pub s: usize,
    pub family: String,
    pub partial_mean: f64,
    pub completed_mean: Option<f64>,
    pub rationale: String,
}

/// Certifies that every conditional mean E(W_{i+m} | W_i = j), m ≤ s, is
/// finite, so the s-step regression is well defined.
pub fn check_moment_membership(d: &DiscretePmf, s: usize) -> MembershipReport {
    let partial_mean = d.partial_mean();
    let completed_mean = d.mean();
    let (member, conclusive, rationale) = match d.tail_model() {
        TailModel::Finite => (
            true,
            true,
            "finite support: all conditional moments are finite sums".to_string(),
        ),
        TailModel::Geometric { ratio } => (
            true,
            true,
            format!("geometric tail (ratio {ratio}): exponential decay dominates every polynomial"),
        ),
        TailModel::Rational { a, b, .. } => (
            true,
            true,
            format!(
                "rational tail q_j ~ j^{{{:.6}}}: exponent exceeds 1, so E X < ∞ and the affine \
                 conditional means stay finite at every step",
                a - b
            ),
        ),
        TailModel::Unknown => (
            false,
            false,
            "tail unknown: finiteness of conditional moments cannot be certified".to_string(),
        ),
    };
    MembershipReport {
        member,
        conclusive,
        s,
        family: d.family_label().to_string(),
        partial_mean,
        completed_mean,
        rationale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gp(g0: f64, g1: f64) -> GammaPair {
        GammaPair::new(g0, g1).unwrap()
    }

    #[test]
    fn uniform_family_member() {
        let d = DiscretePmf::from_gamma(gp(1.0, 0.5), 1e-12).unwrap();
        assert_eq!(d.support(), Support::Finite(2));
        for k in 0..3 {
            assert_relative_eq!(d.p(k), 1.0 / 3.0, max_relative = 1e-15);
        }
        assert_relative_eq!(d.q(1), 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(d.q(2), 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(d.c(0), 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(d.c(1), 0.5, max_relative = 1e-15);
        assert_eq!(d.c(2), 1.0);
        assert_eq!(d.q(3), 0.0);
    }

    #[test]
    fn geometric_family_member() {
        let d = DiscretePmf::from_gamma(gp(1.0, 1.0), 1e-12).unwrap();
        assert_eq!(d.support(), Support::Infinite);
        for k in 0..30 {
            assert_eq!(d.p(k), 0.5f64.powi(k as i32 + 1));
            assert_eq!(d.q(k), 0.5f64.powi(k as i32));
            assert_eq!(d.c(k), 0.5);
        }
        match d.tail_model() {
            TailModel::Geometric { ratio } => assert_eq!(ratio, 0.5),
            other => panic!("expected geometric tail, got {other:?}"),
        }
    }

    #[test]
    fn rational_family_member() {
        let d = DiscretePmf::from_gamma(gp(1.0, 2.0), 1e-9).unwrap();
        assert_eq!(d.support(), Support::Infinite);
        for j in 0..200usize {
            let jf = j as f64;
            assert_relative_eq!(d.q(j), 2.0 / ((jf + 1.0) * (jf + 2.0)), max_relative = 1e-13);
            assert_relative_eq!(
                d.p(j),
                4.0 / ((jf + 1.0) * (jf + 2.0) * (jf + 3.0)),
                max_relative = 1e-12
            );
            assert_relative_eq!(d.c(j), 2.0 / (jf + 3.0), max_relative = 1e-13);
        }
    }

    #[test]
    fn rational_tail_closed_form_matches_recursion() {
        let d = DiscretePmf::from_gamma(gp(1.5, 2.5), 1e-6).unwrap();
        let longer = d.extended(d.stored_len() + 500).unwrap();
        for k in [d.stored_len() as u64 + 1, d.stored_len() as u64 + 499] {
            let closed = d.q_at(k).unwrap();
            let recursed = longer.q(k as usize);
            assert_relative_eq!(closed, recursed, max_relative = 1e-12);
        }
    }

    #[test]
    fn geometric_tail_closed_form_matches_recursion() {
        let d = DiscretePmf::from_gamma(gp(2.0, 1.0), 1e-6).unwrap();
        let longer = d.extended(d.stored_len() + 100).unwrap();
        let k = d.stored_len() as u64 + 77;
        assert_relative_eq!(d.q_at(k).unwrap(), longer.q(k as usize), max_relative = 1e-12);
    }

    #[test]
    fn non_integer_support_is_rejected() {
        let err = DiscretePmf::from_gamma(gp(1.3, 0.5), 1e-12).unwrap_err();
        assert!(matches!(err, PmfError::NonIntegerSupport { .. }));
        // support 0 (point mass at the origin) contradicts e_1(0) = γ0 > 0
        let err = DiscretePmf::from_gamma(gp(1e-10, 0.5), 1e-12).unwrap_err();
        assert!(matches!(err, PmfError::NonIntegerSupport { .. }));
    }

    #[test]
    fn near_integer_support_is_snapped_exactly() {
        let d = DiscretePmf::from_gamma(gp(1.0 + 4e-10, 0.5), 1e-12).unwrap();
        assert_eq!(d.support(), Support::Finite(2));
        assert_eq!(d.c(2), 1.0);
        assert_eq!(d.q(3), 0.0);
        let g = d.gamma().unwrap();
        assert_eq!(g.gamma0, 1.0);
    }

    #[test]
    fn raw_examples() {
        let d = DiscretePmf::from_raw(&[0.5, 0.25, 0.25]).unwrap();
        assert_eq!(d.q(0), 1.0);
        assert_eq!(d.q(1), 0.5);
        assert_eq!(d.q(2), 0.25);
        assert_eq!(d.c(0), 0.5);
        assert_eq!(d.c(1), 0.5);
        assert_eq!(d.c(2), 1.0);

        let point = DiscretePmf::from_raw(&[1.0]).unwrap();
        assert_eq!(point.q(0), 1.0);
        assert_eq!(point.c(0), 1.0);
        assert_eq!(point.support(), Support::Finite(0));

        assert!(matches!(
            DiscretePmf::from_raw(&[0.5, 0.6]).unwrap_err(),
            PmfError::NotNormalized { .. }
        ));
        assert!(matches!(
            DiscretePmf::from_raw(&[0.5, -0.1, 0.6]).unwrap_err(),
            PmfError::NegativeMass { index: 1 }
        ));
        assert!(matches!(
            DiscretePmf::from_raw(&[0.5, 0.0, 0.5]).unwrap_err(),
            PmfError::ZeroMass { index: 1 }
        ));
    }

    #[test]
    fn raw_trailing_zeros_are_trimmed() {
        let d = DiscretePmf::from_raw(&[0.5, 0.5, 0.0, 0.0]).unwrap();
        assert_eq!(d.support(), Support::Finite(1));
        assert_eq!(d.c(1), 1.0);
    }

    #[test]
    fn prefix_keeps_tail_mass_open() {
        let d = DiscretePmf::from_prefix(&[0.5, 0.25, 0.125]).unwrap();
        assert_eq!(d.support(), Support::Infinite);
        assert_eq!(d.tail_model(), TailModel::Unknown);
        assert_eq!(d.q(3), 0.125);
        assert!(d.q_at(10).is_none());
        assert!(d.mean().is_none());
        assert!(matches!(
            DiscretePmf::from_prefix(&[0.5, 0.5]).unwrap_err(),
            PmfError::InvalidPrefix { .. }
        ));
    }

    #[test]
    fn completed_mean_equals_gamma0() {
        // e_1(0) = γ0 is exactly the mean of the law, for all three families
        for (g0, g1) in [
            (1.0, 0.5),
            (2.0, 0.5),
            (0.5, 1.0),
            (1.0, 1.0),
            (2.0, 1.0),
            (0.5, 1.5),
            (1.0, 1.5),
            (1.0, 2.0),
            (2.0, 2.0),
        ] {
            let d = DiscretePmf::from_gamma(gp(g0, g1), 1e-10).unwrap();
            let mean = d.mean().unwrap();
            assert!(
                (mean - d.gamma().unwrap().gamma0).abs() < 1e-9,
                "mean {mean} vs gamma0 {g0} at ({g0}, {g1})"
            );
        }
    }

    #[test]
    fn first_moment_tail_telescopes() {
        // With U_j = (γ0 + γ1 j)·q_j, the identity U_j − U_{j+1} = j·p_j
        // pins the closed-form tail moment non-circularly.
        for (g0, g1) in [(1.0, 1.0), (2.0, 1.0), (1.0, 2.0), (0.5, 1.5)] {
            let d = DiscretePmf::from_gamma(gp(g0, g1), 1e-9).unwrap();
            for j in 0..d.stored_len().min(200) - 1 {
                let u = |m: usize| (g0 + g1 * m as f64) * d.q(m);
                let lhs = u(j) - u(j + 1);
                let rhs = j as f64 * d.p(j);
                assert!(
                    (lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()),
                    "telescoping broke at j = {j} for ({g0}, {g1})"
                );
            }
        }
    }

    #[test]
    fn stored_prefix_meets_tail_mass_target() {
        let d = DiscretePmf::from_gamma(gp(1.0, 1.5), 1e-10).unwrap();
        let n = d.stored_len();
        assert!(d.q(n) < 1e-10);
        assert!(d.q(n - 1) >= 1e-10 || n == MIN_STORED);
    }

    #[test]
    fn tail_recursion_consistency() {
        for (g0, g1) in [(1.0, 0.5), (1.0, 1.0), (1.0, 2.0), (2.0, 1.5)] {
            let d = DiscretePmf::from_gamma(gp(g0, g1), 1e-9).unwrap();
            let g = d.gamma().unwrap();
            let check_upto = d.stored_len().min(500);
            for j in 0..check_upto.saturating_sub(1) {
                let jf = j as f64;
                let lhs = d.q(j + 1) * (g.gamma0 + g.gamma1 - (1.0 - g.gamma1) * jf);
                let rhs = d.q(j) * (g.gamma0 - (1.0 - g.gamma1) * jf);
                assert!(
                    (lhs - rhs).abs() <= 1e-13 * (1.0 + rhs.abs()),
                    "recursion inconsistent at j = {j} for ({g0}, {g1})"
                );
            }
        }
    }

    #[test]
    fn beta_gamma_examples() {
        let g = beta_to_gamma(&RegressionCoeffs {
            beta0: 3.0,
            beta1: 4.0,
            s: 2,
        })
        .unwrap();
        assert_relative_eq!(g.gamma0, 1.0, max_relative = 1e-14);
        assert_relative_eq!(g.gamma1, 2.0, max_relative = 1e-14);

        let g = beta_to_gamma(&RegressionCoeffs {
            beta0: 5.0,
            beta1: 1.0,
            s: 5,
        })
        .unwrap();
        assert_relative_eq!(g.gamma0, 1.0, max_relative = 1e-14);
        assert_eq!(g.gamma1, 1.0);

        let g = beta_to_gamma(&RegressionCoeffs {
            beta0: 1.0,
            beta1: 1.0,
            s: 1,
        })
        .unwrap();
        assert_eq!((g.gamma0, g.gamma1), (1.0, 1.0));

        assert!(beta_to_gamma(&RegressionCoeffs {
            beta0: -1.0,
            beta1: 1.0,
            s: 1,
        })
        .is_err());
    }

    #[test]
    fn beta_gamma_round_trip_grid() {
        for &g0 in &[0.5, 1.0, 2.0] {
            for &g1 in &[0.5, 1.0, 1.5, 2.0] {
                for s in 1..=6usize {
                    let g = gp(g0, g1);
                    let b = gamma_to_beta(&g, s).unwrap();
                    let back = beta_to_gamma(&b).unwrap();
                    assert_relative_eq!(back.gamma0, g0, max_relative = 1e-12);
                    assert_relative_eq!(back.gamma1, g1, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn membership_examples() {
        let geo = DiscretePmf::geometric(0.5).unwrap();
        let r = check_moment_membership(&geo, 5);
        assert!(r.member && r.conclusive);
        assert_relative_eq!(r.completed_mean.unwrap(), 1.0, max_relative = 1e-9);

        let uniform = DiscretePmf::from_gamma(gp(1.0, 0.5), 1e-12).unwrap();
        let r = check_moment_membership(&uniform, 3);
        assert!(r.member);
        assert_relative_eq!(r.completed_mean.unwrap(), 1.0, max_relative = 1e-12);

        let heavy = DiscretePmf::from_gamma(gp(1.0, 2.0), 1e-9).unwrap();
        let r = check_moment_membership(&heavy, 2);
        assert!(r.member && r.conclusive);
        assert_relative_eq!(r.completed_mean.unwrap(), 1.0, max_relative = 1e-9);

        let unknown = DiscretePmf::from_prefix(&[0.4, 0.3]).unwrap();
        let r = check_moment_membership(&unknown, 2);
        assert!(!r.member && !r.conclusive);
    }

    #[test]
    fn e1_oracle_direct_summation() {
        // (1/q_j)·Σ_{k≥j} k·p_k = γ0 + γ1·j, tail completed analytically
        for (g0, g1) in [(1.0, 0.5), (2.0, 0.5), (1.0, 1.0), (1.0, 1.5), (1.0, 2.0)] {
            let d = DiscretePmf::from_gamma(gp(g0, g1), 1e-10).unwrap();
            let n = d.stored_len();
            for j in [0usize, 1, 2, 5, 17].iter().copied().filter(|&j| j < n) {
                let mut s = 0.0;
                for k in (j..n).rev() {
                    s += k as f64 * d.p(k);
                }
                s += d.first_moment_tail(n).unwrap();
                let e1 = s / d.q(j);
                assert!(
                    (e1 - (g0 + g1 * j as f64)).abs() < 1e-9,
                    "e_1({j}) = {e1} off the line for ({g0}, {g1})"
                );
            }
        }
    }

    #[test]
    fn geometric_constructor_matches_family() {
        let d = DiscretePmf::geometric(0.3).unwrap();
        for k in 0..20 {
            assert_relative_eq!(d.p(k), 0.3 * 0.7f64.powi(k as i32), max_relative = 1e-12);
        }
    }
}
