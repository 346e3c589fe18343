use super::{RunLengthState, StepInfo};

/// Everything a detector run produces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SegmentationResult {
    /// For each t (from 1), the retained `(r, log p(r_t | x_{1:t}))` pairs.
    pub runlength_trace: Vec<Vec<(usize, f64)>>,
    pub modal_run_lengths: Vec<usize>,
    /// Best parent of the changepoint branch at each t.
    pub change_parents: Vec<usize>,
    pub map_changepoints: Vec<usize>,
    pub log_evidence: f64,
    pub per_step_nanos: Vec<u64>,
    pub total_ms: f64,
    /// Set when the run stopped early; the other fields cover the steps completed.
    pub error: Option<String>,
}

impl SegmentationResult {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            runlength_trace: Vec::with_capacity(n),
            modal_run_lengths: Vec::with_capacity(n),
            change_parents: Vec::with_capacity(n),
            per_step_nanos: Vec::with_capacity(n),
            ..Default::default()
        }
    }

    pub fn record<P: Clone>(&mut self, state: &RunLengthState<P>, info: StepInfo) {
        self.runlength_trace
            .push(state.entries().iter().map(|e| (e.run_length, e.log_prob)).collect());
        self.modal_run_lengths.push(state.modal_run_length());
        self.change_parents.push(info.change_parent);
    }

    /// Fill in the MAP segmentation and evidence from the final state.
    pub fn finish<P: Clone>(&mut self, state: &RunLengthState<P>) {
        let best = state
            .entries()
            .iter()
            .fold((0, f64::NEG_INFINITY), |b, e| if e.viterbi > b.1 { (e.run_length, e.viterbi) } else { b })
            .0;
        self.map_changepoints = backtrack(state.time(), best, &self.change_parents);
        self.log_evidence = state.log_evidence();
    }

    pub fn len(&self) -> usize {
        self.modal_run_lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modal_run_lengths.is_empty()
    }
}

/// Changepoint times along the Viterbi path ending at run length `r` at time `t`.
///
/// `change_parents[s - 1]` is the best predecessor run length of `r_s = 0`.
/// A segment starting at time 1 is not a changepoint.
pub fn backtrack(mut t: usize, mut r: usize, change_parents: &[usize]) -> Vec<usize> {
    let mut cps = Vec::new();
    while t > 0 && r < t {
        let start = t - r;
        if start > 1 {
            cps.push(start);
        }
        r = change_parents[start - 1];
        t = start - 1;
    }
    cps.reverse();
    cps
}
