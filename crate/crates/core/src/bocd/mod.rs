//! The run-length filter.
//!
//! Run length `r` at time `t` means the current segment began at `t − r`,
//! except `r = t`, which is the segment that was already running before the
//! first observation. The changepoint branch `r = 0` is predicted by the
//! prior; growth from `r` to `r + 1` by that hypothesis' posterior.

mod likelihood;
mod segmentation;

pub use likelihood::{keyed_rng, DmLikelihood, DmPrepared, Likelihood, PredictiveMode, StandardLikelihood};
pub use segmentation::{backtrack, SegmentationResult};

pub(crate) use likelihood::logsumexp;

use crate::error::{Error, Result};
use crate::series::Series;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HazardSpec {
    h: f64,
    ln_h: f64,
    ln_survive: f64,
}

impl HazardSpec {
    pub fn constant(h: f64) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::InvalidArgument(format!("hazard must lie in (0, 1), got {h}")));
        }
        Ok(Self { h, ln_h: h.ln(), ln_survive: (-h).ln_1p() })
    }

    pub fn rate(&self) -> f64 {
        self.h
    }
}

impl Default for HazardSpec {
    fn default() -> Self {
        Self::constant(0.01).expect("default hazard is valid")
    }
}

#[derive(Debug, Clone)]
pub struct Entry<P> {
    pub run_length: usize,
    /// log p(r_t | x_{1:t}).
    pub log_prob: f64,
    /// Viterbi score, shifted so the best hypothesis is 0.
    pub viterbi: f64,
    pub posterior: P,
}

#[derive(Debug, Clone)]
pub struct RunLengthState<P> {
    time: usize,
    entries: Vec<Entry<P>>,
    log_evidence: f64,
}

/// Bookkeeping from one filter step.
#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    /// Run length at `t − 1` that the best path into `r_t = 0` came from.
    pub change_parent: usize,
    /// log p(x_t | x_{1:t−1}) under the (pruned) filter.
    pub log_increment: f64,
}

impl<P: Clone> RunLengthState<P> {
    pub fn new(prior: P) -> Self {
        Self {
            time: 0,
            entries: vec![Entry { run_length: 0, log_prob: 0.0, viterbi: 0.0, posterior: prior }],
            log_evidence: 0.0,
        }
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn entries(&self) -> &[Entry<P>] {
        &self.entries
    }

    pub fn log_evidence(&self) -> f64 {
        self.log_evidence
    }

    /// log p(r_t, x_{1:t}) for each retained r.
    pub fn log_joint(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().map(|e| (e.run_length, e.log_prob + self.log_evidence))
    }

    /// Most probable run length.
    pub fn modal_run_length(&self) -> usize {
        self.entries
            .iter()
            .fold((0, f64::NEG_INFINITY), |best, e| if e.log_prob > best.1 { (e.run_length, e.log_prob) } else { best })
            .0
    }

    /// Advance by one observation; `prune = None` keeps every hypothesis.
    pub fn step<L>(&mut self, lik: &L, x: &[f64], hazard: &HazardSpec, prune: Option<usize>) -> Result<StepInfo>
    where
        L: Likelihood<Post = P>,
    {
        let t = self.time + 1;
        let prep = lik.prepare(x)?;
        let n = self.entries.len();

        let lp_prior = lik.log_predictive(lik.prior(), &prep, t, 0)?;
        let mut growth_lp = Vec::with_capacity(n);
        for e in &self.entries {
            growth_lp.push(lik.log_predictive(&e.posterior, &prep, t, e.run_length + 1)?);
        }
        if lp_prior == f64::NEG_INFINITY && growth_lp.iter().all(|v| *v == f64::NEG_INFINITY) {
            return Err(Error::ZeroDensity { t, x: x.to_vec() });
        }
        if lp_prior.is_nan() || growth_lp.iter().any(|v| v.is_nan()) {
            return Err(Error::NonFinite(format!("predictive density at t={t}")));
        }

        let prev_mass = logsumexp(self.entries.iter().map(|e| e.log_prob));
        let change_mass = prev_mass + lp_prior + hazard.ln_h;
        let (change_parent, best_v) = self
            .entries
            .iter()
            .fold((0, f64::NEG_INFINITY), |b, e| if e.viterbi > b.1 { (e.run_length, e.viterbi) } else { b });

        let mut cp_post = lik.prior().clone();
        lik.update(&mut cp_post, &prep)?;
        let mut next = Vec::with_capacity(n + 1);
        next.push(Entry {
            run_length: 0,
            log_prob: change_mass,
            viterbi: best_v + lp_prior + hazard.ln_h,
            posterior: cp_post,
        });
        for (e, lp) in std::mem::take(&mut self.entries).into_iter().zip(growth_lp) {
            let mut post = e.posterior;
            lik.update(&mut post, &prep)?;
            next.push(Entry {
                run_length: e.run_length + 1,
                log_prob: e.log_prob + lp + hazard.ln_survive,
                viterbi: e.viterbi + lp + hazard.ln_survive,
                posterior: post,
            });
        }

        let increment = logsumexp(next.iter().map(|e| e.log_prob));
        if let Some(k) = prune {
            prune_top_k(&mut next, k.max(1));
        }
        let kept = logsumexp(next.iter().map(|e| e.log_prob));
        let v_max = next.iter().map(|e| e.viterbi).fold(f64::NEG_INFINITY, f64::max);
        for e in &mut next {
            e.log_prob -= kept;
            if v_max.is_finite() {
                e.viterbi -= v_max;
            }
        }
        self.entries = next;
        self.time = t;
        self.log_evidence += increment;
        Ok(StepInfo { change_parent, log_increment: increment })
    }
}

/// Keep `r = 0` plus the `k − 1` most probable other hypotheses, ordered by run length.
fn prune_top_k<P>(entries: &mut Vec<Entry<P>>, k: usize) {
    if entries.len() <= k {
        return;
    }
    // entries[0] is r = 0
    let mut rest: Vec<Entry<P>> = entries.drain(1..).collect();
    rest.sort_by(|a, b| b.log_prob.total_cmp(&a.log_prob).then(a.run_length.cmp(&b.run_length)));
    rest.truncate(k - 1);
    rest.sort_by_key(|e| e.run_length);
    entries.extend(rest);
}

/// Runs the filter over a whole series, recording everything needed for the
/// outputs. On error the partial result is returned with `error` set.
pub fn run_filter<L: Likelihood>(lik: &L, data: &Series, hazard: &HazardSpec, prune: Option<usize>) -> SegmentationResult {
    let start = Instant::now();
    let mut state = RunLengthState::new(lik.prior().clone());
    let mut result = SegmentationResult::with_capacity(data.len());
    for x in data.rows() {
        let step_start = Instant::now();
        let info = match state.step(lik, x, hazard, prune) {
            Ok(info) => info,
            Err(e) => {
                result.error = Some(e.to_string());
                break;
            }
        };
        result.per_step_nanos.push(step_start.elapsed().as_nanos() as u64);
        result.record(&state, info);
    }
    result.finish(&state);
    result.total_ms = start.elapsed().as_secs_f64() * 1e3;
    result
}
