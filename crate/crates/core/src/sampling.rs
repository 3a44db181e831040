//! Generative-model access, empirical kernel estimation, reward perturbation
//! and the concentration-bound formulas that size the sample budget.
//!
//! Every `(s, a)` pair owns an independent ChaCha stream: the key is the
//! master seed and the stream id is `(s << 32) | a`. The k-th draw of a pair
//! sits at a fixed word position, so a pair's samples do not depend on the
//! order in which pairs are visited.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CmdpError, Result};
use crate::mdp::{CmdpSpec, Kernel, Table};

/// Stream id reserved for reward perturbations; never collides with a pair id
/// because action indices stay below `u32::MAX`.
const PERTURBATION_STREAM: u64 = u64::MAX;

/// Words of ChaCha output consumed by one `f64` draw.
const WORDS_PER_DRAW: u128 = 2;

fn pair_stream_id(s: usize, a: usize) -> u64 {
    ((s as u64) << 32) | (a as u64)
}

/// Inverse-CDF draw from a probability row.
fn inverse_cdf(row: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    for (i, &p) in row.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    // rounding left the cumulative sum just below u
    row.iter().rposition(|&p| p > 0.0).unwrap_or(row.len() - 1)
}

/// Seeded access to `P(· | s, a)` of a known CMDP.
#[derive(Debug, Clone, Copy)]
pub struct GenerativeModel<'a> {
    spec: &'a CmdpSpec,
    master_seed: u64,
}

impl<'a> GenerativeModel<'a> {
    pub fn new(spec: &'a CmdpSpec, master_seed: u64) -> Self {
        GenerativeModel { spec, master_seed }
    }

    pub fn spec(&self) -> &'a CmdpSpec {
        self.spec
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    fn check_pair(&self, s: usize, a: usize) -> Result<()> {
        if s >= self.spec.num_states() {
            return Err(CmdpError::IndexOutOfRange {
                what: "state",
                index: s,
                size: self.spec.num_states(),
            });
        }
        if a >= self.spec.num_actions() {
            return Err(CmdpError::IndexOutOfRange {
                what: "action",
                index: a,
                size: self.spec.num_actions(),
            });
        }
        Ok(())
    }

    fn pair_rng(&self, s: usize, a: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(pair_stream_id(s, a));
        rng
    }

    /// The `draw`-th sample of `s' ~ P(· | s, a)`.
    pub fn sample_next_state(&self, s: usize, a: usize, draw: u64) -> Result<usize> {
        self.check_pair(s, a)?;
        let mut rng = self.pair_rng(s, a);
        rng.set_word_pos(draw as u128 * WORDS_PER_DRAW);
        let u: f64 = rng.gen();
        Ok(inverse_cdf(self.spec.kernel.row(s, a), u))
    }

    /// Sequential draws for one pair; the k-th item equals
    /// `sample_next_state(s, a, k)`.
    pub fn stream(&self, s: usize, a: usize) -> Result<PairStream<'a>> {
        self.check_pair(s, a)?;
        Ok(PairStream {
            row: self.spec.kernel.row(s, a),
            rng: self.pair_rng(s, a),
        })
    }
}

pub struct PairStream<'a> {
    row: &'a [f64],
    rng: ChaCha8Rng,
}

impl Iterator for PairStream<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        let u: f64 = self.rng.gen();
        Some(inverse_cdf(self.row, u))
    }
}

/// Transition counts `N(s' | s, a)` and the estimate `P̂ = N(s'|s,a) / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalModel {
    n_per_pair: u64,
    counts: Vec<u64>,
    kernel_hat: Kernel,
}

impl EmpiricalModel {
    pub fn from_counts(
        num_states: usize,
        num_actions: usize,
        counts: Vec<u64>,
        n_per_pair: u64,
    ) -> Result<Self> {
        if n_per_pair == 0 {
            return Err(CmdpError::param("n_per_pair", 0.0, "need at least one sample per pair"));
        }
        let expected = num_states * num_actions * num_states;
        if counts.len() != expected {
            return Err(CmdpError::mismatch("count entries", expected, counts.len()));
        }
        for row in counts.chunks(num_states) {
            let total: u64 = row.iter().sum();
            if total != n_per_pair {
                return Err(CmdpError::param(
                    "counts",
                    total as f64,
                    "row total differs from n_per_pair",
                ));
            }
        }
        let n = n_per_pair as f64;
        let probs = counts.iter().map(|&c| c as f64 / n).collect();
        Ok(EmpiricalModel {
            n_per_pair,
            counts,
            kernel_hat: Kernel::new(num_states, num_actions, probs)?,
        })
    }

    pub fn n_per_pair(&self) -> u64 {
        self.n_per_pair
    }

    pub fn count(&self, s: usize, a: usize, next: usize) -> u64 {
        let ns = self.kernel_hat.num_states();
        self.counts[(s * self.kernel_hat.num_actions() + a) * ns + next]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn kernel_hat(&self) -> &Kernel {
        &self.kernel_hat
    }

    /// The empirical CMDP: `P̂` in place of `P`, the given (perturbed) reward
    /// and thresholds, everything else taken from `base`.
    pub fn empirical_cmdp(&self, base: &CmdpSpec, reward: &Table, thresholds: Vec<f64>) -> Result<CmdpSpec> {
        base.with_model(self.kernel_hat.clone(), reward.clone(), thresholds)
    }
}

/// Draws exactly `n_per_pair` next states for every `(s, a)`.
pub fn estimate_kernel(model: &GenerativeModel<'_>, n_per_pair: u64) -> Result<EmpiricalModel> {
    if n_per_pair == 0 {
        return Err(CmdpError::param("n_per_pair", 0.0, "need at least one sample per pair"));
    }
    let spec = model.spec();
    let (ns, na) = (spec.num_states(), spec.num_actions());
    let mut counts = vec![0u64; ns * na * ns];
    for s in 0..ns {
        for a in 0..na {
            let base = (s * na + a) * ns;
            for next in model.stream(s, a)?.take(n_per_pair as usize) {
                counts[base + next] += 1;
            }
        }
    }
    EmpiricalModel::from_counts(ns, na, counts, n_per_pair)
}

/// `r_p = r + xi` with `xi ~ U[0, omega)` i.i.d. per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedReward {
    pub r_p: Table,
    pub xi: Table,
    pub omega: f64,
    pub seed: u64,
}

pub fn perturb_rewards(reward: &Table, omega: f64, seed: u64) -> Result<PerturbedReward> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(CmdpError::param("omega", omega, "perturbation magnitude must lie in [0,1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(PERTURBATION_STREAM);
    let (ns, na) = (reward.num_states(), reward.num_actions());
    let mut xi = Table::filled(ns, na, 0.0);
    let mut r_p = reward.clone();
    for s in 0..ns {
        for a in 0..na {
            let u: f64 = rng.gen();
            let x = u * omega;
            xi.set(s, a, x);
            r_p.set(s, a, reward.get(s, a) + x);
        }
    }
    Ok(PerturbedReward {
        r_p,
        xi,
        omega,
        seed,
    })
}

/// Inputs of the concentration formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub delta: f64,
    pub omega: f64,
    pub d: usize,
    pub upper: f64,
    pub eps1: f64,
    pub num_states: usize,
    pub num_actions: usize,
    pub gamma: f64,
    pub n: u64,
}

/// Evaluated concentration quantities.
///
/// `iota` is the gap guaranteed for every net point, `c_delta` the constant
/// `C(δ)` for data-dependent policies, `c_prime_delta` and `b_delta_n` the
/// constant and deviation bound for a fixed, data-independent policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationBound {
    pub inputs: BoundInputs,
    pub log_iota: f64,
    pub iota: f64,
    pub c_delta: f64,
    pub c_prime_delta: f64,
    pub b_delta_n: f64,
    /// Per-pair budget `4 C(δ/d) / (1-γ)` required by the data-dependent
    /// bound.
    pub n_required: f64,
    /// Per-pair budget `4 C'(δ/d) / (1-γ)` required by the fixed-policy bound.
    pub n_required_fixed_policy: f64,
}

fn horizon_log_factor(gamma: f64) -> f64 {
    // log(e / (1-γ))
    1.0 - (1.0 - gamma).ln()
}

/// `log ι = log(ω δ (1-γ) ε₁^d / (30 U^d |S| |A|²))`.
fn log_iota(inp: &BoundInputs) -> f64 {
    let d = inp.d as f64;
    inp.omega.ln() + inp.delta.ln() + (1.0 - inp.gamma).ln() + d * inp.eps1.ln()
        - 30f64.ln()
        - d * inp.upper.ln()
        - (inp.num_states as f64).ln()
        - 2.0 * (inp.num_actions as f64).ln()
}

/// `C(δ) = 72 log(16 (1+ω+dU) |S||A| log(e/(1-γ)) / ((1-γ)² ι δ))`, with `ι`
/// held at the value for the run's failure probability.
fn c_of(inp: &BoundInputs, log_iota: f64, delta: f64) -> f64 {
    let d = inp.d as f64;
    let log_num = (16.0 * (1.0 + inp.omega + d * inp.upper)).ln()
        + (inp.num_states as f64).ln()
        + (inp.num_actions as f64).ln()
        + horizon_log_factor(inp.gamma).ln();
    72.0 * (log_num - 2.0 * (1.0 - inp.gamma).ln() - log_iota - delta.ln())
}

/// `C'(δ) = 72 log(4 |S| log(e/(1-γ)) / δ)`.
fn c_prime_of(inp: &BoundInputs, delta: f64) -> f64 {
    72.0 * ((4.0 * inp.num_states as f64 * horizon_log_factor(inp.gamma)).ln() - delta.ln())
}

/// `B(δ, N) = sqrt(C'(δ) / ((1-γ)³ N))`.
pub fn fixed_policy_deviation(c_prime: f64, gamma: f64, n: u64) -> f64 {
    (c_prime / ((1.0 - gamma).powi(3) * n as f64)).sqrt()
}

pub fn compute_bounds(inp: BoundInputs) -> Result<ConcentrationBound> {
    if !(inp.delta > 0.0 && inp.delta < 1.0) {
        return Err(CmdpError::param("delta", inp.delta, "must lie in (0,1)"));
    }
    if !(inp.omega > 0.0 && inp.omega <= 1.0) {
        return Err(CmdpError::param("omega", inp.omega, "must lie in (0,1]"));
    }
    if !(inp.eps1 > 0.0 && inp.eps1 <= inp.upper) {
        return Err(CmdpError::param("eps1", inp.eps1, "must satisfy 0 < eps1 <= U"));
    }
    if !(0.0..1.0).contains(&inp.gamma) {
        return Err(CmdpError::param("gamma", inp.gamma, "must lie in [0,1)"));
    }
    if inp.d == 0 || inp.num_states == 0 || inp.num_actions == 0 {
        return Err(CmdpError::param("d", inp.d as f64, "sizes must be positive"));
    }
    if inp.n == 0 {
        return Err(CmdpError::param("n", 0.0, "need at least one sample per pair"));
    }

    let log_iota = log_iota(&inp);
    let c_delta = c_of(&inp, log_iota, inp.delta);
    let c_prime_delta = c_prime_of(&inp, inp.delta);
    let per_constraint = inp.delta / inp.d as f64;
    let scale = 4.0 / (1.0 - inp.gamma);
    Ok(ConcentrationBound {
        inputs: inp,
        log_iota,
        iota: log_iota.exp(),
        c_delta,
        c_prime_delta,
        b_delta_n: fixed_policy_deviation(c_prime_delta, inp.gamma, inp.n),
        n_required: scale * c_of(&inp, log_iota, per_constraint),
        n_required_fixed_policy: scale * c_prime_of(&inp, per_constraint),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_with_rows(rows: Vec<Vec<f64>>) -> CmdpSpec {
        // one action per state; row i is P(· | i, 0)
        let ns = rows.len();
        let kernel = Kernel::from_nested(&rows.into_iter().map(|r| vec![r]).collect::<Vec<_>>()).unwrap();
        let mut rho = vec![0.0; ns];
        rho[0] = 1.0;
        CmdpSpec::new(0.5, kernel, Table::filled(ns, 1, 0.5), vec![], vec![], rho).unwrap()
    }

    #[test]
    fn point_mass_row_always_hits() {
        let spec = spec_with_rows(vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let model = GenerativeModel::new(&spec, 11);
        for k in 0..200 {
            assert_eq!(model.sample_next_state(0, 0, k).unwrap(), 1);
        }
    }

    #[test]
    fn replay_is_identical_and_matches_stream() {
        let spec = spec_with_rows(vec![vec![0.2, 0.3, 0.5], vec![0.5, 0.5, 0.0], vec![0.1, 0.1, 0.8]]);
        let model = GenerativeModel::new(&spec, 99);
        let first: Vec<usize> = model.stream(2, 0).unwrap().take(64).collect();
        let second: Vec<usize> = model.stream(2, 0).unwrap().take(64).collect();
        assert_eq!(first, second);
        for (k, &x) in first.iter().enumerate() {
            assert_eq!(model.sample_next_state(2, 0, k as u64).unwrap(), x);
        }
        let other: Vec<usize> = GenerativeModel::new(&spec, 100).stream(2, 0).unwrap().take(64).collect();
        assert_ne!(first, other);
    }

    #[test]
    fn fair_coin_frequency() {
        let spec = spec_with_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        let model = GenerativeModel::new(&spec, 3);
        let zeros = model.stream(0, 0).unwrap().take(10_000).filter(|&x| x == 0).count();
        let freq = zeros as f64 / 1e4;
        assert!((0.47..=0.53).contains(&freq), "{freq}");
    }

    #[test]
    fn out_of_range_pair() {
        let spec = spec_with_rows(vec![vec![1.0]]);
        let model = GenerativeModel::new(&spec, 0);
        assert!(model.sample_next_state(1, 0, 0).is_err());
        assert!(model.sample_next_state(0, 1, 0).is_err());
    }

    #[test]
    fn counts_normalize() {
        let emp = EmpiricalModel::from_counts(2, 1, vec![3, 1, 0, 4], 4).unwrap();
        assert_eq!(emp.kernel_hat().row(0, 0), &[0.75, 0.25]);
        assert!(EmpiricalModel::from_counts(2, 1, vec![3, 0, 0, 4], 4).is_err());
    }

    #[test]
    fn deterministic_kernel_is_recovered_exactly() {
        let spec = spec_with_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let emp = estimate_kernel(&GenerativeModel::new(&spec, 5), 7).unwrap();
        assert_eq!(emp.kernel_hat(), &spec.kernel);
        assert_eq!(emp.count(0, 0, 1), 7);
    }

    #[test]
    fn large_budget_concentrates() {
        let spec = spec_with_rows(vec![vec![0.3, 0.7], vec![0.3, 0.7]]);
        let emp = estimate_kernel(&GenerativeModel::new(&spec, 8), 100_000).unwrap();
        let err = (emp.kernel_hat().prob(0, 0, 0) - 0.3).abs();
        assert!(err <= 0.01, "{err}");
    }

    #[test]
    fn zero_budget_rejected() {
        let spec = spec_with_rows(vec![vec![1.0]]);
        assert!(estimate_kernel(&GenerativeModel::new(&spec, 0), 0).is_err());
    }

    #[test]
    fn perturbation_contract() {
        let r = Table::new(2, 2, vec![0.1, 0.2, 0.3, 1.0]).unwrap();
        let zero = perturb_rewards(&r, 0.0, 4).unwrap();
        assert_eq!(zero.r_p, r);

        let a = perturb_rewards(&r, 0.3, 4).unwrap();
        let b = perturb_rewards(&r, 0.3, 4).unwrap();
        assert_eq!(a, b);
        for (i, (&rp, &base)) in a.r_p.as_slice().iter().zip(r.as_slice()).enumerate() {
            let xi = a.xi.as_slice()[i];
            assert!((0.0..0.3).contains(&xi));
            assert!(base <= rp && rp <= base + 0.3);
        }

        assert!(perturb_rewards(&r, -0.1, 0).is_err());
        assert!(perturb_rewards(&r, 1.5, 0).is_err());
    }

    #[test]
    fn perturbation_mean() {
        let r = Table::filled(1000, 1, 0.0);
        let p = perturb_rewards(&r, 0.5, 17).unwrap();
        let mean = p.xi.as_slice().iter().sum::<f64>() / 1000.0;
        assert!((0.22..=0.28).contains(&mean), "{mean}");
    }

    fn example_inputs() -> BoundInputs {
        BoundInputs {
            delta: 0.1,
            omega: 0.5,
            d: 1,
            upper: 2.0,
            eps1: 0.5,
            num_states: 2,
            num_actions: 2,
            gamma: 0.5,
            n: 1_000_000,
        }
    }

    #[test]
    fn bound_domain_errors() {
        let mut inp = example_inputs();
        inp.delta = 1.0;
        assert!(compute_bounds(inp).is_err());
        let mut inp = example_inputs();
        inp.omega = 0.0;
        assert!(compute_bounds(inp).is_err());
        let mut inp = example_inputs();
        inp.eps1 = 3.0;
        assert!(compute_bounds(inp).is_err());
        let mut inp = example_inputs();
        inp.gamma = 1.0;
        assert!(compute_bounds(inp).is_err());
    }

    #[test]
    fn log_space_survives_many_constraints() {
        let mut inp = example_inputs();
        inp.d = 400;
        inp.eps1 = 1e-3;
        inp.upper = 1e3;
        let b = compute_bounds(inp).unwrap();
        assert!(b.c_delta.is_finite() && b.c_delta > 0.0);
        assert!(b.log_iota.is_finite());
    }
}
