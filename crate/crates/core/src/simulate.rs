//! Monte Carlo generation of weak-record sequences.
//!
//! Two independent generators: literal extraction of weak records from an
//! iid stream (the definition), and direct simulation of the record Markov
//! chain through its transition kernel P(W_n = k | W_{n−1} = l) = p_k/q_l.
//! Agreement between the two, and between empirical conditional means and
//! the operator module's exact e_s values, is the cross-validation the
//! regression identities are checked against.

use std::collections::BTreeMap;

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::pmf::{DiscretePmf, PmfError, Support};

/// Hard cap on raw draws per path in iid extraction. Waiting times between
/// weak records are finite in expectation but unbounded; the cap turns a
/// pathological run into an error instead of a hang.
pub const DEFAULT_DRAW_CAP: u64 = 100_000_000;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("draw budget of {cap} raw samples exhausted after {records} records")]
    StreamBudgetExceeded { cap: u64, records: usize },
    #[error("start value {start} is outside the support")]
    StartOutsideSupport { start: u64 },
    #[error("law has an unknown tail beyond its stored prefix; cannot sample state {state}")]
    UnsampleableTail { state: u64 },
    #[error("need at least {need} paths per conditioning value, got {got}")]
    TooFewPaths { need: usize, got: usize },
    #[error("line fit needs at least 2 distinct abscissas")]
    DegenerateDesign,
    #[error("joint-law report needs a finite support with at most {max} atoms")]
    SupportTooLarge { max: usize },
    #[error(transparent)]
    Pmf(#[from] PmfError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PathSource {
    IidExtraction,
    Markov,
}

/// One simulated weak-record path W_1 ≤ W_2 ≤ … (or W_0 ≤ … ≤ W_steps for
/// the Markov sampler, whose start is chosen by the caller).
#[derive(Debug, Clone, Serialize)]
pub struct RecordPath {
    pub values: Vec<u64>,
    pub source: PathSource,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegressionEstimate {
    pub j: u64,
    pub s: usize,
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
}

fn q_of(d: &DiscretePmf, l: u64) -> Result<f64, SimError> {
    d.q_at(l).ok_or(SimError::UnsampleableTail { state: l })
}

/// Inverse-CDF draw of X conditioned on X ≥ l: the smallest k ≥ l with
/// q_{k+1} < v·q_l, v uniform on (0, 1]. Within the stored prefix this is
/// a binary search; past it, the closed-form tail q_at is searched by
/// doubling (needed for the polynomially decaying laws, where walking
/// would not terminate in reasonable time).
fn draw_conditional(d: &DiscretePmf, l: u64, rng: &mut impl Rng) -> Result<u64, SimError> {
    let ql = q_of(d, l)?;
    if ql <= 0.0 {
        return Err(SimError::StartOutsideSupport { start: l });
    }
    let v: f64 = 1.0 - rng.random::<f64>();
    let t = v * ql;
    let n = d.stored_len();
    if l + 1 <= n as u64 {
        let offset = (l + 1) as usize;
        let tail = &d.q_prefix()[offset..=n];
        let m = tail.partition_point(|&x| x >= t);
        if m < tail.len() {
            return Ok(l + m as u64);
        }
        if let Support::Finite(top) = d.support() {
            // q at the end of a finite support is exactly 0 < t
            return Ok(top as u64);
        }
    }
    // all stored tail masses are ≥ t: invert the closed-form tail
    let mut lo = (n as u64).max(l + 1); // q_at(lo) ≥ t known
    let mut hi = lo.max(1) * 2;
    loop {
        let qh = d
            .q_at(hi)
            .ok_or(SimError::UnsampleableTail { state: hi })?;
        if qh < t {
            break;
        }
        lo = hi;
        if hi > (1 << 62) {
            return Err(SimError::UnsampleableTail { state: hi });
        }
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let qm = d
            .q_at(mid)
            .ok_or(SimError::UnsampleableTail { state: mid })?;
        if qm >= t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi - 1)
}

/// Simulates the iid stream X_1, X_2, … and extracts weak records by the
/// rule T_1 = 1, T_n = inf{k > T_{n−1} : X_k ≥ X_{T_{n−1}}}.
pub fn sample_iid_records(
    d: &DiscretePmf,
    n_records: usize,
    seed: u64,
) -> Result<RecordPath, SimError> {
    sample_iid_records_capped(d, n_records, seed, DEFAULT_DRAW_CAP)
}

pub fn sample_iid_records_capped(
    d: &DiscretePmf,
    n_records: usize,
    seed: u64,
    draw_cap: u64,
) -> Result<RecordPath, SimError> {
    assert!(n_records >= 1, "need at least one record");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n_records);
    let mut draws = 0u64;
    let mut current = draw_conditional(d, 0, &mut rng)?;
    draws += 1;
    values.push(current);
    while values.len() < n_records {
        if draws >= draw_cap {
            return Err(SimError::StreamBudgetExceeded {
                cap: draw_cap,
                records: values.len(),
            });
        }
        let x = draw_conditional(d, 0, &mut rng)?;
        draws += 1;
        if x >= current {
            current = x;
            values.push(x);
        }
    }
    Ok(RecordPath {
        values,
        source: PathSource::IidExtraction,
        seed,
    })
}

/// Simulates the record chain directly: each step draws from the law of X
/// conditioned on X ≥ current state. Statistically equivalent to iid
/// extraction restarted at the start value, at a fraction of the draws.
pub fn sample_markov_chain(
    d: &DiscretePmf,
    start: u64,
    steps: usize,
    seed: u64,
) -> Result<RecordPath, SimError> {
    let q_start = d.q_at(start).unwrap_or(0.0);
    if q_start <= 0.0 {
        return Err(SimError::StartOutsideSupport { start });
    }
    if let Support::Finite(top) = d.support() {
        if start > top as u64 {
            return Err(SimError::StartOutsideSupport { start });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(steps + 1);
    values.push(start);
    let mut state = start;
    for _ in 0..steps {
        state = draw_conditional(d, state, &mut rng)?;
        values.push(state);
    }
    Ok(RecordPath {
        values,
        source: PathSource::Markov,
        seed,
    })
}

fn substream(seed: u64, j: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((j << 32).wrapping_add(path + 1));
    rng
}

/// Empirical E(W_{i+s} | W_i = j) for each conditioning value, from
/// `paths_per_j` independent chains of length s. Conditioning values run in
/// parallel; each path owns the RNG substream (seed, j, path), so results
/// do not depend on scheduling.
pub fn estimate_regression(
    d: &DiscretePmf,
    s: usize,
    j_values: &[u64],
    paths_per_j: usize,
    seed: u64,
) -> Result<Vec<RegressionEstimate>, SimError> {
    if paths_per_j < 100 {
        return Err(SimError::TooFewPaths {
            need: 100,
            got: paths_per_j,
        });
    }
    j_values
        .par_iter()
        .map(|&j| {
            if d.q_at(j).unwrap_or(0.0) <= 0.0 {
                return Err(SimError::StartOutsideSupport { start: j });
            }
            let mut sum = 0.0f64;
            let mut sumsq = 0.0f64;
            for path in 0..paths_per_j {
                let mut rng = substream(seed, j, path as u64);
                let mut state = j;
                for _ in 0..s {
                    state = draw_conditional(d, state, &mut rng)?;
                }
                let x = state as f64;
                sum += x;
                sumsq += x * x;
            }
            let n = paths_per_j as f64;
            let mean = sum / n;
            let var = ((sumsq - n * mean * mean) / (n - 1.0)).max(0.0);
            Ok(RegressionEstimate {
                j,
                s,
                mean,
                stderr: (var / n).sqrt(),
                n_samples: paths_per_j as u64,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct LineFit {
    pub beta0_hat: f64,
    pub beta1_hat: f64,
    pub max_standardized_residual: f64,
}

/// Inverse-variance weighted least squares through (j, mean ± stderr)
/// points. A stderr of 0 gets unit weight so exact points still fit.
pub fn fit_line(points: &[(f64, f64, f64)]) -> Result<LineFit, SimError> {
    let mut sw = 0.0;
    let mut swx = 0.0;
    let mut swy = 0.0;
    let mut swxx = 0.0;
    let mut swxy = 0.0;
    for &(x, y, se) in points {
        let w = if se > 0.0 { 1.0 / (se * se) } else { 1.0 };
        sw += w;
        swx += w * x;
        swy += w * y;
        swxx += w * x * x;
        swxy += w * x * y;
    }
    let denom = sw * swxx - swx * swx;
    if points.len() < 2 || denom.abs() < 1e-12 * sw * swxx.max(1.0) {
        return Err(SimError::DegenerateDesign);
    }
    let beta1 = (sw * swxy - swx * swy) / denom;
    let beta0 = (swy - beta1 * swx) / sw;
    let max_std = points
        .iter()
        .map(|&(x, y, se)| {
            let r = y - (beta0 + beta1 * x);
            if se > 0.0 {
                (r / se).abs()
            } else {
                r.abs()
            }
        })
        .fold(0.0, f64::max);
    Ok(LineFit {
        beta0_hat: beta0,
        beta1_hat: beta1,
        max_standardized_residual: max_std,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TvStateRow {
    pub state: u64,
    pub count: u64,
    pub tv: f64,
}

/// Total-variation comparison between empirical transition frequencies of
/// iid-extracted records and the kernel p_k/q_l, per conditioning state.
#[derive(Debug, Clone, Serialize)]
pub struct TvReport {
    pub per_state: Vec<TvStateRow>,
    pub max_tv: f64,
    pub transitions: u64,
    pub min_count: u64,
    pub censored_paths: u64,
}

/// Runs many short iid-extraction paths and tallies record transitions.
/// Only states observed at least `min_count` times enter the verdict —
/// rarer states carry too much sampling noise for a TV bound.
///
/// A path that exhausts its draw budget is abandoned, keeping the
/// transitions it already produced: a recorded value is independent of the
/// waiting time that precedes it, so stopping mid-wait cannot bias any
/// cell. (For heavy-tailed laws the expected wait after a deep record is
/// infinite, so a budget is not optional.)
pub fn transition_tv_report(
    d: &DiscretePmf,
    target_transitions: u64,
    records_per_path: usize,
    min_count: u64,
    seed: u64,
) -> Result<TvReport, SimError> {
    assert!(records_per_path >= 2);
    let per_path = (records_per_path - 1) as u64;
    let n_paths = target_transitions.div_ceil(per_path);
    type Tally = (BTreeMap<u64, BTreeMap<u64, u64>>, u64);
    let tally: Result<Tally, SimError> = (0..n_paths)
        .into_par_iter()
        .try_fold(
            || (BTreeMap::new(), 0u64),
            |(mut acc, mut censored): Tally, path| {
                let mut rng = substream(seed, 0, path);
                let mut draws = 0u64;
                let mut current = draw_conditional(d, 0, &mut rng)?;
                draws += 1;
                let mut found = 1usize;
                while found < records_per_path {
                    if draws >= DEFAULT_DRAW_CAP {
                        censored += 1;
                        break;
                    }
                    let x = draw_conditional(d, 0, &mut rng)?;
                    draws += 1;
                    if x >= current {
                        *acc.entry(current).or_default().entry(x).or_insert(0) += 1;
                        current = x;
                        found += 1;
                    }
                }
                Ok((acc, censored))
            },
        )
        .try_reduce(
            || (BTreeMap::new(), 0u64),
            |(mut a, ca), (b, cb)| {
                for (state, row) in b {
                    let dst = a.entry(state).or_default();
                    for (k, n) in row {
                        *dst.entry(k).or_insert(0) += n;
                    }
                }
                Ok((a, ca + cb))
            },
        );
    let (counts, censored_paths) = tally?;
    let mut per_state = Vec::new();
    let mut max_tv = 0.0f64;
    let mut transitions = 0u64;
    for (state, row) in &counts {
        let total: u64 = row.values().sum();
        transitions += total;
        if total < min_count {
            continue;
        }
        let ql = q_of(d, *state)?;
        let mut tv = 0.0;
        let mut covered = 0.0;
        let top = *row.keys().next_back().expect("nonempty row");
        for k in *state..=top.max(d.stored_len() as u64 - 1) {
            let pk = d
                .p_at(k)
                .ok_or(SimError::UnsampleableTail { state: k })?;
            let pi = pk / ql;
            let f = *row.get(&k).unwrap_or(&0) as f64 / total as f64;
            tv += (f - pi).abs();
            covered += pi;
        }
        tv += (1.0 - covered).max(0.0); // unobserved far tail
        tv *= 0.5;
        max_tv = max_tv.max(tv);
        per_state.push(TvStateRow {
            state: *state,
            count: total,
            tv,
        });
    }
    Ok(TvReport {
        per_state,
        max_tv,
        transitions,
        min_count,
        censored_paths,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Joint3Cell {
    pub triple: (u64, u64, u64),
    pub expected: f64,
    pub observed: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Joint3Report {
    pub cells: Vec<Joint3Cell>,
    pub max_abs_z: f64,
    pub paths: u64,
}

/// Empirical joint law of the first three weak records against the product
/// formula P(W_1 = k_1, W_2 = k_2, W_3 = k_3) = c_{k1}·c_{k2}·p_{k3} on
/// monotone triples. Finite small supports only.
pub fn joint3_report(d: &DiscretePmf, paths: usize, seed: u64) -> Result<Joint3Report, SimError> {
    let top = match d.support() {
        Support::Finite(top) if top <= 8 => top,
        _ => return Err(SimError::SupportTooLarge { max: 8 }),
    };
    let base = top + 1;
    let ncells = base * base * base;
    let counts: Result<Vec<u64>, SimError> = (0..paths as u64)
        .into_par_iter()
        .try_fold(
            || vec![0u64; ncells],
            |mut acc, path| {
                let mut rng = substream(seed, 1, path);
                let mut draws = 0u64;
                let mut vals = [0u64; 3];
                let mut current = draw_conditional(d, 0, &mut rng)?;
                draws += 1;
                vals[0] = current;
                let mut found = 1;
                while found < 3 {
                    if draws >= DEFAULT_DRAW_CAP {
                        return Err(SimError::StreamBudgetExceeded {
                            cap: DEFAULT_DRAW_CAP,
                            records: found,
                        });
                    }
                    let x = draw_conditional(d, 0, &mut rng)?;
                    draws += 1;
                    if x >= current {
                        current = x;
                        vals[found] = x;
                        found += 1;
                    }
                }
                let idx =
                    (vals[0] as usize * base + vals[1] as usize) * base + vals[2] as usize;
                acc[idx] += 1;
                Ok(acc)
            },
        )
        .try_reduce(
            || vec![0u64; ncells],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Ok(a)
            },
        );
    let counts = counts?;
    let n = paths as f64;
    let mut cells = Vec::new();
    let mut max_abs_z = 0.0f64;
    for k1 in 0..=top as u64 {
        for k2 in k1..=top as u64 {
            for k3 in k2..=top as u64 {
                let expected = d.c(k1 as usize) * d.c(k2 as usize) * d.p(k3 as usize);
                let idx = (k1 as usize * base + k2 as usize) * base + k3 as usize;
                let observed = counts[idx] as f64 / n;
                let se = (expected * (1.0 - expected) / n).sqrt();
                let z = if se > 0.0 {
                    (observed - expected) / se
                } else {
                    0.0
                };
                max_abs_z = max_abs_z.max(z.abs());
                cells.push(Joint3Cell {
                    triple: (k1, k2, k3),
                    expected,
                    observed,
                    z,
                });
            }
        }
    }
    Ok(Joint3Report {
        cells,
        max_abs_z,
        paths: paths as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{plan_window, regression_vector};
    use crate::pmf::GammaPair;

    fn uniform3() -> DiscretePmf {
        DiscretePmf::from_raw(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap()
    }

    #[test]
    fn point_mass_paths_are_constant_zero() {
        let d = DiscretePmf::from_raw(&[1.0]).unwrap();
        let path = sample_iid_records(&d, 10, 7).unwrap();
        assert_eq!(path.values, vec![0; 10]);
        let path = sample_markov_chain(&d, 0, 10, 7).unwrap();
        assert_eq!(path.values, vec![0; 11]);
    }

    #[test]
    fn paths_are_deterministic_and_nondecreasing() {
        let d = DiscretePmf::geometric(0.5).unwrap();
        let a = sample_iid_records(&d, 20, 42).unwrap();
        let b = sample_iid_records(&d, 20, 42).unwrap();
        assert_eq!(a.values, b.values);
        assert!(a.values.windows(2).all(|w| w[1] >= w[0]));
        let a = sample_markov_chain(&d, 3, 50, 42).unwrap();
        let b = sample_markov_chain(&d, 3, 50, 42).unwrap();
        assert_eq!(a.values, b.values);
        assert!(a.values.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(a.values[0], 3);
    }

    #[test]
    fn markov_top_state_is_absorbing() {
        let d = uniform3();
        let path = sample_markov_chain(&d, 2, 25, 11).unwrap();
        assert_eq!(path.values, vec![2; 26]);
    }

    #[test]
    fn markov_start_outside_support_errors() {
        let d = uniform3();
        assert!(matches!(
            sample_markov_chain(&d, 5, 3, 0),
            Err(SimError::StartOutsideSupport { start: 5 })
        ));
    }

    #[test]
    fn budget_guard_trips_on_deep_records() {
        let d = DiscretePmf::geometric(0.5).unwrap();
        let err = sample_iid_records_capped(&d, 40, 1, 2_000).unwrap_err();
        assert!(matches!(err, SimError::StreamBudgetExceeded { .. }));
    }

    #[test]
    fn uniform_transition_probability_matches() {
        // P(W_2 = 2 | W_1 = 1) = (1/3)/(2/3) = 1/2
        let d = uniform3();
        let mut hits = 0u64;
        let mut total = 0u64;
        for seed in 0..20_000u64 {
            let path = sample_iid_records(&d, 2, 900_000 + seed).unwrap();
            if path.values[0] == 1 {
                total += 1;
                if path.values[1] == 2 {
                    hits += 1;
                }
            }
        }
        let f = hits as f64 / total as f64;
        let se = (0.5 * 0.5 / total as f64).sqrt();
        assert!((f - 0.5).abs() < 3.0 * se, "f = {f}, total = {total}");
    }

    #[test]
    fn geo_transition_law_tv() {
        let d = DiscretePmf::geometric(0.5).unwrap();
        let report = transition_tv_report(&d, 200_000, 4, 5_000, 2024).unwrap();
        assert!(report.transitions >= 200_000);
        assert!(!report.per_state.is_empty());
        assert!(report.max_tv < 0.02, "max tv {}", report.max_tv);
    }

    #[test]
    fn markov_means_match_exact_regression() {
        let d = DiscretePmf::geometric(0.5).unwrap();
        let est = estimate_regression(&d, 5, &[0], 20_000, 7).unwrap();
        let e = &est[0];
        assert!(
            (e.mean - 5.0).abs() <= 3.0 * e.stderr,
            "mean {} ± {}",
            e.mean,
            e.stderr
        );

        let d = uniform3();
        let est = estimate_regression(&d, 2, &[0], 20_000, 8).unwrap();
        let e = &est[0];
        assert!((e.mean - 1.5).abs() <= 3.0 * e.stderr);
    }

    #[test]
    fn regression_grid_agrees_with_operator_module() {
        let d = DiscretePmf::geometric(0.5).unwrap();
        let js: Vec<u64> = (0..10).collect();
        let est = estimate_regression(&d, 5, &js, 10_000, 31337).unwrap();
        let (ext, w) = plan_window(&d, 16, 1e-9, None).unwrap();
        let e5 = regression_vector(&ext, 5, w).unwrap();
        for r in &est {
            let exact = e5.value_at(&ext, r.j as usize).unwrap();
            let z = (r.mean - exact) / r.stderr;
            assert!(z.abs() <= 3.0, "j = {}: z = {z}", r.j);
        }
    }

    #[test]
    fn heavy_tail_regression_matches_line() {
        let d = DiscretePmf::from_gamma(GammaPair::new(1.0, 2.0).unwrap(), 1e-9).unwrap();
        let js: Vec<u64> = (0..6).collect();
        let est = estimate_regression(&d, 2, &js, 20_000, 99).unwrap();
        for r in &est {
            let exact = 3.0 + 4.0 * r.j as f64;
            let z = (r.mean - exact) / r.stderr;
            assert!(z.abs() <= 3.0, "j = {}: mean {} vs {exact}, z = {z}", r.j, r.mean);
        }
    }

    #[test]
    fn estimates_are_deterministic() {
        let d = DiscretePmf::geometric(0.5).unwrap();
        let a = estimate_regression(&d, 3, &[0, 1, 2], 500, 5).unwrap();
        let b = estimate_regression(&d, 3, &[0, 1, 2], 500, 5).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mean, y.mean);
            assert_eq!(x.stderr, y.stderr);
        }
        let c = &a[0];
        assert!(c.stderr > 0.0 && c.stderr.is_finite());
    }

    #[test]
    fn too_few_paths_rejected() {
        let d = DiscretePmf::geometric(0.5).unwrap();
        assert!(matches!(
            estimate_regression(&d, 1, &[0], 99, 0),
            Err(SimError::TooFewPaths { .. })
        ));
    }

    #[test]
    fn fit_line_recovers_exact_data() {
        let pts: Vec<(f64, f64, f64)> = (0..6)
            .map(|j| (j as f64, 1.5 + 0.25 * j as f64, 1.0))
            .collect();
        let fit = fit_line(&pts).unwrap();
        assert!((fit.beta0_hat - 1.5).abs() < 1e-12);
        assert!((fit.beta1_hat - 0.25).abs() < 1e-12);
        assert!(fit.max_standardized_residual < 1e-12);
    }

    #[test]
    fn fit_line_flags_nonlinear_points() {
        let pts = [(0.0, 0.75, 0.005), (1.0, 1.5, 0.005), (2.0, 2.0, 0.005)];
        let fit = fit_line(&pts).unwrap();
        assert!(fit.max_standardized_residual > 10.0);
    }

    #[test]
    fn fit_line_degenerate_design() {
        assert!(matches!(
            fit_line(&[(1.0, 2.0, 1.0), (1.0, 2.5, 1.0)]),
            Err(SimError::DegenerateDesign)
        ));
        assert!(matches!(
            fit_line(&[(1.0, 2.0, 1.0)]),
            Err(SimError::DegenerateDesign)
        ));
    }

    #[test]
    fn joint3_cells_match_product_formula() {
        let d = uniform3();
        let report = joint3_report(&d, 100_000, 1234).unwrap();
        let monotone = report
            .cells
            .iter()
            .filter(|c| c.expected > 0.0)
            .count();
        assert_eq!(monotone, 10);
        assert!(report.max_abs_z <= 3.0, "max |z| = {}", report.max_abs_z);
        let total: f64 = report.cells.iter().map(|c| c.expected).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn joint3_requires_small_finite_support() {
        let d = DiscretePmf::geometric(0.5).unwrap();
        assert!(matches!(
            joint3_report(&d, 1000, 0),
            Err(SimError::SupportTooLarge { .. })
        ));
    }

    #[test]
    fn heavy_tail_conditional_draws_go_past_the_stored_prefix() {
        let d = DiscretePmf::from_gamma(GammaPair::new(1.0, 2.0).unwrap(), 1e-6).unwrap();
        let n = d.stored_len() as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut seen_beyond = false;
        for _ in 0..4000 {
            let k = draw_conditional(&d, n - 2, &mut rng).unwrap();
            assert!(k >= n - 2);
            if k >= n {
                seen_beyond = true;
            }
        }
        assert!(seen_beyond, "tail fallback never exercised");
    }
}
