//! Sampled counterparts of the analytic growth and bond costs.
//!
//! Trial `t` draws from its own ChaCha8 stream `t` under the common seed, and per-trial
//! results are reduced in trial order, so output does not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{derived, total_cost, GateProbabilities};
use crate::error::{Error, Result};
use crate::graphstate::{forge_vertical_bond, GraphState};

/// What happens when repeated failures use up a chain during a join.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DestroyPolicy {
    /// Lengths keep shrinking past zero and the join retries until success.
    #[default]
    SignedLength,
    /// The join gives up once either chain is gone; the survivor is kept.
    Stop,
    /// Both chains are rebuilt from scratch at length `L0`, cost charged.
    Restart,
}

impl std::str::FromStr for DestroyPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "signed-length" | "signed" => Ok(DestroyPolicy::SignedLength),
            "stop" => Ok(DestroyPolicy::Stop),
            "restart" => Ok(DestroyPolicy::Restart),
            other => Err(Error::Parse(format!("unknown destroy policy {other:?}"))),
        }
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Estimate {
        let n = xs.len();
        if n == 0 {
            return Estimate {
                mean: f64::NAN,
                stderr: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Estimate { mean, stderr: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Estimate {
            mean,
            stderr: (var / n as f64).sqrt(),
        }
    }

    /// `|mean − target| ≤ k · stderr`, with a little slack for zero-variance samples.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr + 1e-9 * target.abs().max(1.0)
    }

    pub fn z_score(&self, target: f64) -> f64 {
        if self.stderr == 0.0 {
            if (self.mean - target).abs() < 1e-12 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - target) / self.stderr
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimStats {
    /// Completed trials; depleted ones are excluded from the estimates.
    pub trials: usize,
    pub depletions: usize,
    /// Entangling attempts, insurance repeats included.
    pub attempts: Estimate,
    pub definite_outcomes: Estimate,
    /// Final chain length (growth).
    pub final_length: Option<Estimate>,
    /// Qubits used up on each chain (bond).
    pub consumed: Option<Estimate>,
    /// `attempts − slope · final_length`, whose expectation is the cost-line intercept under
    /// [`DestroyPolicy::SignedLength`].
    pub cost_offset: Option<Estimate>,
}

impl SimStats {
    /// Ratio of mean attempts to mean final length.
    pub fn cost_per_qubit(&self) -> Option<f64> {
        self.final_length.map(|l| self.attempts.mean / l.mean)
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

#[derive(Clone, Copy)]
struct Sampler {
    success: f64,
    insurance: f64,
}

impl Sampler {
    fn new(probs: &GateProbabilities) -> Self {
        let [s, i, _] = probs.as_f64();
        Sampler {
            success: s,
            insurance: i,
        }
    }

    /// Repeats through insurance; returns `(succeeded, attempts)`.
    fn definite<R: Rng>(&self, rng: &mut R) -> (bool, u64) {
        let mut attempts = 0;
        loop {
            attempts += 1;
            let r: f64 = rng.random();
            if r < self.success {
                return (true, attempts);
            }
            if r >= self.success + self.insurance {
                return (false, attempts);
            }
        }
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    attempts: u64,
    definite: u64,
}

impl Sampler {
    /// Divide and conquer: both halves are discarded when their join fails.
    fn offline<R: Rng>(&self, l0: u64, rng: &mut R, t: &mut Tally) {
        if l0 <= 1 {
            return;
        }
        loop {
            self.offline(l0 / 2, rng, t);
            self.offline(l0 / 2, rng, t);
            let (ok, a) = self.definite(rng);
            t.attempts += a;
            t.definite += 1;
            if ok {
                return;
            }
        }
    }

    fn join<R: Rng>(
        &self,
        mut la: i64,
        mut lb: i64,
        l0: u64,
        policy: DestroyPolicy,
        rng: &mut R,
        t: &mut Tally,
    ) -> i64 {
        loop {
            let (ok, a) = self.definite(rng);
            t.attempts += a;
            t.definite += 1;
            if ok {
                return la + lb;
            }
            la -= 1;
            lb -= 1;
            if policy == DestroyPolicy::SignedLength || (la > 0 && lb > 0) {
                continue;
            }
            match policy {
                DestroyPolicy::Stop => return la.max(0) + lb.max(0),
                DestroyPolicy::Restart => {
                    self.offline(l0, rng, t);
                    self.offline(l0, rng, t);
                    la = l0 as i64;
                    lb = l0 as i64;
                }
                DestroyPolicy::SignedLength => unreachable!(),
            }
        }
    }

    fn grow<R: Rng>(&self, l0: u64, rounds: u32, policy: DestroyPolicy, rng: &mut R, t: &mut Tally) -> i64 {
        if rounds == 0 {
            self.offline(l0, rng, t);
            return l0 as i64;
        }
        let la = self.grow(l0, rounds - 1, policy, rng, t);
        let lb = self.grow(l0, rounds - 1, policy, rng, t);
        self.join(la, lb, l0, policy, rng, t)
    }
}

fn require_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::NoTrials);
    }
    Ok(())
}

/// Grows `2^rounds` chains of length `l0` into one by repeated pairwise joins.
pub fn mc_chain_growth(
    probs: &GateProbabilities,
    l0: u64,
    rounds: u32,
    policy: DestroyPolicy,
    trials: usize,
    seed: u64,
) -> Result<SimStats> {
    require_trials(trials)?;
    if l0 == 0 || !l0.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(l0));
    }
    if rounds > 40 {
        return Err(Error::InvalidProbabilities(format!(
            "{rounds} doubling rounds is too many"
        )));
    }
    derived(probs)?;
    let slope = total_cost(probs, l0).map(|line| super::to_f64(&line.slope));
    if policy != DestroyPolicy::Stop {
        // the other policies only terminate in expectation above the threshold
        total_cost(probs, l0)?;
    }
    let sampler = Sampler::new(probs);
    let results: Vec<(i64, Tally)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let mut t = Tally::default();
            let l = sampler.grow(l0, rounds, policy, &mut rng, &mut t);
            (l, t)
        })
        .collect();
    let lengths: Vec<f64> = results.iter().map(|(l, _)| *l as f64).collect();
    let attempts: Vec<f64> = results.iter().map(|(_, t)| t.attempts as f64).collect();
    let definite: Vec<f64> = results.iter().map(|(_, t)| t.definite as f64).collect();
    let cost_offset = slope.ok().map(|s| {
        let d: Vec<f64> = attempts.iter().zip(&lengths).map(|(n, l)| n - s * l).collect();
        Estimate::from_samples(&d)
    });
    Ok(SimStats {
        trials,
        depletions: 0,
        attempts: Estimate::from_samples(&attempts),
        definite_outcomes: Estimate::from_samples(&definite),
        final_length: Some(Estimate::from_samples(&lengths)),
        consumed: None,
        cost_offset,
    })
}

/// One join of two length-`l` chains under [`DestroyPolicy::Stop`].
pub fn mc_one_round(probs: &GateProbabilities, l: u64, trials: usize, seed: u64) -> Result<SimStats> {
    require_trials(trials)?;
    derived(probs)?;
    let sampler = Sampler::new(probs);
    let results: Vec<(i64, Tally)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let mut t = Tally::default();
            let len = sampler.join(l as i64, l as i64, l, DestroyPolicy::Stop, &mut rng, &mut t);
            (len, t)
        })
        .collect();
    let lengths: Vec<f64> = results.iter().map(|(l, _)| *l as f64).collect();
    let attempts: Vec<f64> = results.iter().map(|(_, t)| t.attempts as f64).collect();
    let definite: Vec<f64> = results.iter().map(|(_, t)| t.definite as f64).collect();
    Ok(SimStats {
        trials,
        depletions: 0,
        attempts: Estimate::from_samples(&attempts),
        definite_outcomes: Estimate::from_samples(&definite),
        final_length: Some(Estimate::from_samples(&lengths)),
        consumed: None,
        cost_offset: None,
    })
}

/// Chain length that runs out with probability below `1e-12` per bond.
pub fn bond_chain_length(probs: &GateProbabilities) -> Result<usize> {
    let d = derived(probs)?;
    let pf = super::to_f64(&d.failure);
    let rounds = if pf <= 0.0 {
        1
    } else if pf >= 1.0 {
        return Err(Error::InvalidProbabilities("p_s must be positive".into()));
    } else {
        ((1e-12f64).ln() / pf.ln()).ceil() as usize + 1
    };
    Ok(2 * rounds + 2)
}

/// Forges a vertical bond between the ends of two fresh chains of `chain_len` qubits on the
/// graph-state simulator. `chain_len = None` picks [`bond_chain_length`].
pub fn mc_bond(
    probs: &GateProbabilities,
    trials: usize,
    seed: u64,
    chain_len: Option<usize>,
) -> Result<SimStats> {
    require_trials(trials)?;
    let len = match chain_len {
        Some(n) => n,
        None => bond_chain_length(probs)?,
    };
    if len < 3 {
        return Err(Error::InvalidGraph(format!(
            "chains of {len} qubits cannot hold a bond"
        )));
    }
    let offset = len + 1;
    let chain_a = GraphState::chain(0..len);
    let chain_b = GraphState::chain(offset..offset + len);
    let results: Vec<Result<Option<(usize, usize, usize)>>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            match forge_vertical_bond(&chain_a, &chain_b, 0, offset, probs, &mut rng) {
                Ok((_, rec)) => Ok(Some((rec.consumed[0], rec.attempts, rec.definite_outcomes))),
                Err(Error::Depleted { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut consumed = Vec::with_capacity(trials);
    let mut attempts = Vec::with_capacity(trials);
    let mut definite = Vec::with_capacity(trials);
    let mut depletions = 0;
    for r in results {
        match r? {
            Some((c, a, d)) => {
                consumed.push(c as f64);
                attempts.push(a as f64);
                definite.push(d as f64);
            }
            None => depletions += 1,
        }
    }
    Ok(SimStats {
        trials: consumed.len(),
        depletions,
        attempts: Estimate::from_samples(&attempts),
        definite_outcomes: Estimate::from_samples(&definite),
        final_length: None,
        consumed: Some(Estimate::from_samples(&consumed)),
        cost_offset: None,
    })
}

/// `(N̄ + 1/p_s) / (L̄ − 2p_f/p_s)`: slope implied by sampled growth.
pub fn slope_estimate(probs: &GateProbabilities, stats: &SimStats) -> Option<f64> {
    let l = stats.final_length?.mean;
    let [ps, _, pf] = probs.as_f64();
    Some((stats.attempts.mean + 1.0 / ps) / (l - 2.0 * pf / ps))
}

#[cfg(test)]
mod tests {
    use super::super::{consumed_length, offline_cost, one_round_expected_length, to_f64};
    use super::*;

    fn p(s: f64, i: f64, f: f64) -> GateProbabilities {
        GateProbabilities::from_f64(s, i, f).unwrap()
    }

    #[test]
    fn offline_matches_closed_form() {
        let probs = p(0.3, 0.3, 0.4);
        let stats = mc_chain_growth(&probs, 4, 0, DestroyPolicy::SignedLength, 20_000, 3).unwrap();
        assert!(stats
            .attempts
            .within(to_f64(&offline_cost(&probs, 4).unwrap()), 4.0));
        assert_eq!(stats.final_length.unwrap().mean, 4.0);
    }

    #[test]
    fn signed_length_offset_is_the_intercept() {
        let probs = p(0.5, 0.0, 0.5);
        let line = total_cost(&probs, 4).unwrap();
        let stats = mc_chain_growth(&probs, 4, 3, DestroyPolicy::SignedLength, 20_000, 11).unwrap();
        assert!(stats.cost_offset.unwrap().within(to_f64(&line.intercept), 4.0));
    }

    #[test]
    fn one_round_expectation() {
        let probs = p(0.3, 0.3, 0.4);
        let stats = mc_one_round(&probs, 6, 40_000, 5).unwrap();
        let expected = to_f64(&one_round_expected_length(&probs, 6).unwrap());
        assert!(stats.final_length.unwrap().within(expected, 4.0));
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let probs = p(0.4, 0.4, 0.2);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| mc_chain_growth(&probs, 2, 3, DestroyPolicy::Restart, 500, 9).unwrap())
        };
        let (a, b) = (run(1), run(4));
        assert_eq!(a.attempts, b.attempts);
        assert_eq!(a.final_length, b.final_length);
    }

    #[test]
    fn bond_consumption() {
        let probs = p(0.4, 0.3, 0.3);
        let stats = mc_bond(&probs, 4_000, 1, None).unwrap();
        assert_eq!(stats.depletions, 0);
        assert!(stats
            .consumed
            .unwrap()
            .within(to_f64(&consumed_length(&probs).unwrap()), 4.0));
        assert!(stats.attempts.within(1.0 / 0.4, 4.0));
    }

    #[test]
    fn short_chains_deplete() {
        let probs = p(0.2, 0.2, 0.6);
        let stats = mc_bond(&probs, 500, 2, Some(4)).unwrap();
        assert!(stats.depletions > 0);
        assert_eq!(stats.trials + stats.depletions, 500);
    }

    #[test]
    fn rejects_bad_arguments() {
        let probs = p(0.2, 0.2, 0.6);
        assert!(matches!(
            mc_chain_growth(&probs, 8, 1, DestroyPolicy::Stop, 0, 0),
            Err(Error::NoTrials)
        ));
        assert!(matches!(
            mc_chain_growth(&probs, 4, 1, DestroyPolicy::SignedLength, 10, 0),
            Err(Error::InfeasibleGrowth { .. })
        ));
        assert!(mc_chain_growth(&probs, 4, 1, DestroyPolicy::Stop, 10, 0).is_ok());
    }
}
