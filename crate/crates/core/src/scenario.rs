//! Scenarios and behaviors of classical black boxes.
//!
//! A [`Scenario`] fixes the classical terminals of a box: how many parties
//! there are, how many inputs each party can choose from, and how many
//! outputs each (party, input) pair can produce. A [`Behavior`] is the
//! conditional probability table `P(outputs | inputs)` on those terminals.
//!
//! All tables share one flat layout: joint inputs are enumerated
//! lexicographically with party 0 slowest, and inside every input block the
//! joint outputs are enumerated the same way.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for normalization and no-signalling checks.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct Scenario {
    outputs: Vec<Vec<usize>>,
    block_offsets: Vec<usize>,
}

impl TryFrom<Vec<Vec<usize>>> for Scenario {
    type Error = Error;

    fn try_from(outputs: Vec<Vec<usize>>) -> Result<Self> {
        Scenario::new(outputs)
    }
}

impl From<Scenario> for Vec<Vec<usize>> {
    fn from(s: Scenario) -> Self {
        s.outputs
    }
}

impl Scenario {
    /// Builds a scenario from the output table `outputs[party][input]`.
    pub fn new(outputs: Vec<Vec<usize>>) -> Result<Self> {
        if outputs.is_empty() {
            return Err(Error::InvalidScenario("at least one party is required".into()));
        }
        for (party, row) in outputs.iter().enumerate() {
            if row.is_empty() {
                return Err(Error::InvalidScenario(format!("party {party} has no inputs")));
            }
            if let Some(input) = row.iter().position(|&o| o == 0) {
                return Err(Error::InvalidScenario(format!(
                    "party {party}, input {input} has no outputs"
                )));
            }
        }

        let joint_inputs = outputs
            .iter()
            .try_fold(1usize, |acc, row| acc.checked_mul(row.len()))
            .ok_or_else(|| Error::InvalidScenario("joint input count overflows".into()))?;

        let mut block_offsets = Vec::with_capacity(joint_inputs + 1);
        block_offsets.push(0usize);
        let mut inputs = vec![0usize; outputs.len()];
        let mut offset = 0usize;
        for _ in 0..joint_inputs {
            let size = inputs
                .iter()
                .enumerate()
                .try_fold(1usize, |acc, (k, &x)| acc.checked_mul(outputs[k][x]))
                .ok_or_else(|| Error::InvalidScenario("behavior dimension overflows".into()))?;
            offset = offset
                .checked_add(size)
                .ok_or_else(|| Error::InvalidScenario("behavior dimension overflows".into()))?;
            block_offsets.push(offset);
            increment(&mut inputs, |k| outputs[k].len());
        }

        Ok(Scenario {
            outputs,
            block_offsets,
        })
    }

    /// Every party has `inputs` inputs and every input has `outputs` outputs.
    pub fn uniform(parties: usize, inputs: usize, outputs: usize) -> Result<Self> {
        Scenario::new(vec![vec![outputs; inputs]; parties])
    }

    /// The two-party, two-input, two-output scenario.
    pub fn chsh() -> Self {
        Scenario::uniform(2, 2, 2).expect("(2,2,2) is a valid scenario")
    }

    pub fn parties(&self) -> usize {
        self.outputs.len()
    }

    pub fn inputs(&self, party: usize) -> usize {
        self.outputs[party].len()
    }

    pub fn inputs_per_party(&self) -> Vec<usize> {
        self.outputs.iter().map(Vec::len).collect()
    }

    pub fn outputs(&self, party: usize, input: usize) -> usize {
        self.outputs[party][input]
    }

    pub fn output_table(&self) -> &[Vec<usize>] {
        &self.outputs
    }

    pub fn joint_inputs(&self) -> usize {
        self.block_offsets.len() - 1
    }

    /// Length of the flat probability table.
    pub fn dim(&self) -> usize {
        *self.block_offsets.last().unwrap()
    }

    /// True when every party has `inputs` inputs with `outputs` outputs each.
    pub fn is_uniform(&self, parties: usize, inputs: usize, outputs: usize) -> bool {
        self.parties() == parties
            && self
                .outputs
                .iter()
                .all(|row| row.len() == inputs && row.iter().all(|&o| o == outputs))
    }

    pub fn block_range(&self, block: usize) -> std::ops::Range<usize> {
        self.block_offsets[block]..self.block_offsets[block + 1]
    }

    /// Lexicographic index of a joint input (party 0 slowest).
    pub fn input_block(&self, inputs: &[usize]) -> Result<usize> {
        self.check_inputs(inputs)?;
        Ok(inputs
            .iter()
            .enumerate()
            .fold(0, |acc, (k, &x)| acc * self.outputs[k].len() + x))
    }

    /// Inverse of [`Scenario::input_block`].
    pub fn block_inputs(&self, block: usize) -> Vec<usize> {
        let mut rest = block;
        let mut inputs = vec![0; self.parties()];
        for k in (0..self.parties()).rev() {
            let n = self.outputs[k].len();
            inputs[k] = rest % n;
            rest /= n;
        }
        inputs
    }

    fn check_inputs(&self, inputs: &[usize]) -> Result<()> {
        if inputs.len() != self.parties() {
            return Err(Error::WrongLength {
                expected: self.parties(),
                got: inputs.len(),
            });
        }
        for (party, &x) in inputs.iter().enumerate() {
            if x >= self.outputs[party].len() {
                return Err(Error::OutOfRange {
                    party,
                    what: "input",
                    value: x,
                    limit: self.outputs[party].len(),
                });
            }
        }
        Ok(())
    }

    /// Flat index of `P(outputs | inputs)`.
    pub fn flat_index(&self, inputs: &[usize], outputs: &[usize]) -> Result<usize> {
        let block = self.input_block(inputs)?;
        if outputs.len() != self.parties() {
            return Err(Error::WrongLength {
                expected: self.parties(),
                got: outputs.len(),
            });
        }
        let mut within = 0usize;
        for (party, (&x, &a)) in inputs.iter().zip(outputs).enumerate() {
            let limit = self.outputs[party][x];
            if a >= limit {
                return Err(Error::OutOfRange {
                    party,
                    what: "output",
                    value: a,
                    limit,
                });
            }
            within = within * limit + a;
        }
        Ok(self.block_offsets[block] + within)
    }

    /// Inverse of [`Scenario::flat_index`]: `(inputs, outputs)` for an index.
    pub fn decode(&self, index: usize) -> (Vec<usize>, Vec<usize>) {
        assert!(index < self.dim(), "index {index} out of range");
        let block = self.block_offsets.partition_point(|&o| o <= index) - 1;
        let inputs = self.block_inputs(block);
        let mut rest = index - self.block_offsets[block];
        let mut outputs = vec![0; self.parties()];
        for k in (0..self.parties()).rev() {
            let n = self.outputs[k][inputs[k]];
            outputs[k] = rest % n;
            rest /= n;
        }
        (inputs, outputs)
    }

    /// Calls `f(index, inputs, outputs)` for every entry in flat order.
    pub fn for_each_entry(&self, mut f: impl FnMut(usize, &[usize], &[usize])) {
        let mut index = 0;
        for block in 0..self.joint_inputs() {
            let inputs = self.block_inputs(block);
            let mut outputs = vec![0; self.parties()];
            for _ in self.block_range(block) {
                f(index, &inputs, &outputs);
                index += 1;
                increment(&mut outputs, |k| self.outputs[k][inputs[k]]);
            }
        }
    }
}

/// Mixed-radix increment with the last position fastest.
pub(crate) fn increment(digits: &mut [usize], radix: impl Fn(usize) -> usize) {
    for k in (0..digits.len()).rev() {
        digits[k] += 1;
        if digits[k] < radix(k) {
            return;
        }
        digits[k] = 0;
    }
}

/// A validated conditional probability table. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Behavior {
    scenario: Scenario,
    probs: Vec<f64>,
}

impl Behavior {
    /// Checks `raw` against `scenario` and renormalizes each input block.
    pub fn new(scenario: Scenario, raw: Vec<f64>, tol: f64) -> Result<Self> {
        if raw.len() != scenario.dim() {
            return Err(Error::WrongLength {
                expected: scenario.dim(),
                got: raw.len(),
            });
        }
        if let Some(index) = raw.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let mut probs = raw;
        for block in 0..scenario.joint_inputs() {
            let range = scenario.block_range(block);
            for i in range.clone() {
                let p = probs[i];
                if p < -tol {
                    return Err(Error::NegativeEntry {
                        block,
                        inputs: scenario.block_inputs(block),
                        index: i,
                        value: p,
                    });
                }
                if p > 1.0 + tol {
                    return Err(Error::EntryAboveOne {
                        block,
                        inputs: scenario.block_inputs(block),
                        index: i,
                        value: p,
                    });
                }
            }
            let slice = &mut probs[range];
            for p in slice.iter_mut() {
                *p = p.clamp(0.0, 1.0);
            }
            let sum: f64 = slice.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::Normalization {
                    block,
                    inputs: scenario.block_inputs(block),
                    sum,
                });
            }
            // Leave blocks that already sum to 1 up to rounding untouched,
            // so that parsing an emitted table reproduces it bit for bit.
            if (sum - 1.0).abs() > slice.len() as f64 * f64::EPSILON {
                for p in slice.iter_mut() {
                    *p /= sum;
                }
            }
        }
        Ok(Behavior { scenario, probs })
    }

    /// Builds a behavior from `P(outputs | inputs)` evaluated on every entry.
    pub fn from_fn(
        scenario: Scenario,
        tol: f64,
        mut f: impl FnMut(&[usize], &[usize]) -> f64,
    ) -> Result<Self> {
        let mut probs = vec![0.0; scenario.dim()];
        scenario.for_each_entry(|i, x, a| probs[i] = f(x, a));
        Behavior::new(scenario, probs, tol)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, inputs: &[usize], outputs: &[usize]) -> Result<f64> {
        Ok(self.probs[self.scenario.flat_index(inputs, outputs)?])
    }

    /// Inner product with a coefficient table in the same layout.
    pub fn dot(&self, coeffs: &[f64]) -> f64 {
        debug_assert_eq!(coeffs.len(), self.probs.len());
        self.probs.iter().zip(coeffs).map(|(p, c)| p * c).sum()
    }

    /// Largest entrywise difference from another behavior on the same scenario.
    pub fn max_abs_diff(&self, other: &Behavior) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Marginal distribution of one party's output for every joint input:
    /// `result[block][a] = Σ P(outputs | inputs)` over outputs with `outputs[party] = a`.
    pub fn party_marginals(&self, party: usize) -> Vec<Vec<f64>> {
        let s = &self.scenario;
        let mut marg: Vec<Vec<f64>> = (0..s.joint_inputs())
            .map(|b| vec![0.0; s.outputs(party, s.block_inputs(b)[party])])
            .collect();
        s.for_each_entry(|i, x, a| {
            let block = s.input_block(x).expect("entry inputs in range");
            marg[block][a[party]] += self.probs[i];
        });
        marg
    }

    /// Merges output `from` into output `into` at one (party, input) and
    /// removes `from`; the output count there shrinks by one.
    pub fn bin_outputs(&self, party: usize, input: usize, from: usize, into: usize) -> Result<Behavior> {
        let s = &self.scenario;
        if party >= s.parties() {
            return Err(Error::OutOfRange {
                party,
                what: "party",
                value: party,
                limit: s.parties(),
            });
        }
        if input >= s.inputs(party) {
            return Err(Error::OutOfRange {
                party,
                what: "input",
                value: input,
                limit: s.inputs(party),
            });
        }
        let n = s.outputs(party, input);
        for v in [from, into] {
            if v >= n {
                return Err(Error::OutOfRange {
                    party,
                    what: "output",
                    value: v,
                    limit: n,
                });
            }
        }
        if from == into || n < 2 {
            return Err(Error::Precondition("binning needs two distinct outputs".into()));
        }
        let mut table = s.output_table().to_vec();
        table[party][input] -= 1;
        let target = Scenario::new(table)?;
        let mut probs = vec![0.0; target.dim()];
        s.for_each_entry(|i, x, a| {
            let mut b = a.to_vec();
            if x[party] == input {
                let mut v = if a[party] == from { into } else { a[party] };
                if v > from {
                    v -= 1;
                }
                b[party] = v;
            }
            let j = target.flat_index(x, &b).expect("binned index in range");
            probs[j] += self.probs[i];
        });
        Behavior::new(target, probs, DEFAULT_TOL)
    }

    /// Bins the last output of every (party, input) that has at least two
    /// outputs into output 0.
    pub fn bin_last_into_first(&self) -> Result<Behavior> {
        let mut current = self.clone();
        for party in 0..self.scenario.parties() {
            for input in 0..self.scenario.inputs(party) {
                let n = current.scenario.outputs(party, input);
                if n >= 2 {
                    current = current.bin_outputs(party, input, n - 1, 0)?;
                }
            }
        }
        Ok(current)
    }
}

/// Validates a raw table against a scenario.
pub fn validate_behavior(scenario: &Scenario, raw: &[f64], tol: f64) -> Result<Behavior> {
    Behavior::new(scenario.clone(), raw.to_vec(), tol)
}

/// Convex combination of behaviors on one scenario.
pub fn mix(components: &[(f64, &Behavior)]) -> Result<Behavior> {
    let (_, first) = components
        .first()
        .ok_or_else(|| Error::Precondition("mix needs at least one component".into()))?;
    let scenario = first.scenario();
    let mut sum = 0.0;
    for (index, (w, b)) in components.iter().enumerate() {
        if !w.is_finite() || *w < 0.0 {
            return Err(Error::NegativeWeight { index, weight: *w });
        }
        if b.scenario() != scenario {
            return Err(Error::ScenarioMismatch);
        }
        sum += w;
    }
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::WeightSum { sum });
    }
    let mut probs = vec![0.0; scenario.dim()];
    for (w, b) in components {
        for (acc, p) in probs.iter_mut().zip(b.probs()) {
            *acc += w * p;
        }
    }
    Behavior::new(scenario.clone(), probs, DEFAULT_TOL)
}

/// Location of the largest marginal dependence on remote inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstMarginal {
    pub party: usize,
    pub input: usize,
    pub output: usize,
    /// The two remote joint inputs (one entry per party; the entry of
    /// `party` itself is its own input) whose marginals differ most.
    pub remote_inputs: (Vec<usize>, Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoSignallingReport {
    pub max_defect: f64,
    pub worst_party: usize,
    pub worst_marginal: Option<WorstMarginal>,
}

impl NoSignallingReport {
    pub fn is_no_signalling(&self, tol: f64) -> bool {
        self.max_defect <= tol
    }
}

/// Largest change of any one-party marginal under a change of the other
/// parties' inputs.
pub fn no_signalling_defect(behavior: &Behavior) -> NoSignallingReport {
    let s = behavior.scenario();
    let mut report = NoSignallingReport {
        max_defect: 0.0,
        worst_party: 0,
        worst_marginal: None,
    };
    for party in 0..s.parties() {
        let marg = behavior.party_marginals(party);
        for input in 0..s.inputs(party) {
            let blocks: Vec<usize> = (0..s.joint_inputs())
                .filter(|&b| s.block_inputs(b)[party] == input)
                .collect();
            for output in 0..s.outputs(party, input) {
                let (mut lo, mut hi) = (blocks[0], blocks[0]);
                for &b in &blocks {
                    if marg[b][output] < marg[lo][output] {
                        lo = b;
                    }
                    if marg[b][output] > marg[hi][output] {
                        hi = b;
                    }
                }
                let defect = marg[hi][output] - marg[lo][output];
                if defect > report.max_defect {
                    let (first, second) = (lo.min(hi), lo.max(hi));
                    report = NoSignallingReport {
                        max_defect: defect,
                        worst_party: party,
                        worst_marginal: Some(WorstMarginal {
                            party,
                            input,
                            output,
                            remote_inputs: (s.block_inputs(first), s.block_inputs(second)),
                        }),
                    };
                }
            }
        }
    }
    report
}

/// Names accepted by [`named_behavior`].
pub const BEHAVIOR_NAMES: [&str; 3] = ["uniform", "pr_box", "signalling_demo"];

/// Catalog of reference behaviors.
///
/// `uniform` works on any scenario (default (2,2,2)); `pr_box`
/// (`P(a,b|x,y) = 1/2` iff `a ⊕ b = x·y`) and `signalling_demo`
/// (`a = y`, `b = 0`) require (2,2,2).
pub fn named_behavior(name: &str, scenario: Option<&Scenario>) -> Result<Behavior> {
    let chsh = Scenario::chsh();
    let scenario = scenario.unwrap_or(&chsh).clone();
    match name {
        "uniform" => Behavior::from_fn(scenario.clone(), DEFAULT_TOL, |x, _| {
            let block = scenario.input_block(x).unwrap();
            1.0 / scenario.block_range(block).len() as f64
        }),
        "pr_box" | "signalling_demo" => {
            if scenario != chsh {
                return Err(Error::Precondition(format!(
                    "`{name}` is defined on the (2,2,2) scenario only"
                )));
            }
            if name == "pr_box" {
                Behavior::from_fn(scenario, DEFAULT_TOL, |x, a| {
                    if (a[0] ^ a[1]) == (x[0] & x[1]) {
                        0.5
                    } else {
                        0.0
                    }
                })
            } else {
                Behavior::from_fn(scenario, DEFAULT_TOL, |x, a| {
                    if a[0] == x[1] && a[1] == 0 {
                        1.0
                    } else {
                        0.0
                    }
                })
            }
        }
        other => Err(Error::UnknownName(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_index_examples() {
        let s = Scenario::chsh();
        assert_eq!(s.dim(), 16);
        assert_eq!(s.flat_index(&[0, 0], &[0, 0]).unwrap(), 0);
        assert_eq!(s.flat_index(&[1, 1], &[1, 1]).unwrap(), 15);
        assert_eq!(s.flat_index(&[0, 1], &[1, 0]).unwrap(), 6);
    }

    #[test]
    fn flat_index_range_errors_name_party() {
        let s = Scenario::chsh();
        let err = s.flat_index(&[0, 2], &[0, 0]).unwrap_err();
        assert!(matches!(err, Error::OutOfRange { party: 1, what: "input", .. }));
        let err = s.flat_index(&[0, 0], &[3, 0]).unwrap_err();
        assert!(matches!(err, Error::OutOfRange { party: 0, what: "output", .. }));
    }

    #[test]
    fn flat_index_is_bijective_on_irregular_scenario() {
        let s = Scenario::new(vec![vec![2, 3], vec![1], vec![3, 2, 2]]).unwrap();
        let mut seen = vec![false; s.dim()];
        let mut count = 0;
        for x0 in 0..2 {
            for x2 in 0..3 {
                let x = [x0, 0, x2];
                for a0 in 0..s.outputs(0, x0) {
                    for a2 in 0..s.outputs(2, x2) {
                        let i = s.flat_index(&x, &[a0, 0, a2]).unwrap();
                        assert!(!seen[i]);
                        seen[i] = true;
                        assert_eq!(s.decode(i), (x.to_vec(), vec![a0, 0, a2]));
                        count += 1;
                    }
                }
            }
        }
        assert_eq!(count, s.dim());
        let mut visited = 0;
        s.for_each_entry(|i, x, a| {
            assert_eq!(s.flat_index(x, a).unwrap(), i);
            visited += 1;
        });
        assert_eq!(visited, s.dim());
    }

    #[test]
    fn zero_counts_are_rejected() {
        assert!(Scenario::new(vec![]).is_err());
        assert!(Scenario::new(vec![vec![]]).is_err());
        assert!(Scenario::new(vec![vec![2, 0]]).is_err());
    }

    #[test]
    fn validation_reports_offending_block() {
        let s = Scenario::chsh();
        let mut raw = vec![0.25; 16];
        raw[8] = 0.15;
        let err = validate_behavior(&s, &raw, 1e-9).unwrap_err();
        match err {
            Error::Normalization { block, inputs, sum } => {
                assert_eq!(block, 2);
                assert_eq!(inputs, vec![1, 0]);
                assert!((sum - 0.9).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
        let mut raw = vec![0.25; 16];
        raw[5] = -0.01;
        raw[4] = 0.26;
        assert!(matches!(
            validate_behavior(&s, &raw, 1e-9),
            Err(Error::NegativeEntry { block: 1, .. })
        ));
        assert!(matches!(
            validate_behavior(&s, &raw[..15], 1e-9),
            Err(Error::WrongLength { expected: 16, got: 15 })
        ));
    }

    #[test]
    fn validation_renormalizes_within_tolerance() {
        let s = Scenario::chsh();
        let mut raw = vec![0.25; 16];
        raw[0] += 5e-10;
        let b = validate_behavior(&s, &raw, 1e-9).unwrap();
        let sum: f64 = b.probs()[0..4].iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mix_identity_and_idempotence() {
        let pr = named_behavior("pr_box", None).unwrap();
        assert_eq!(mix(&[(1.0, &pr)]).unwrap(), pr);
        assert_eq!(mix(&[(0.5, &pr), (0.5, &pr)]).unwrap(), pr);
        assert!(matches!(mix(&[(0.6, &pr), (0.6, &pr)]), Err(Error::WeightSum { .. })));
        let other = named_behavior("uniform", Some(&Scenario::uniform(2, 2, 3).unwrap())).unwrap();
        assert_eq!(mix(&[(0.5, &pr), (0.5, &other)]), Err(Error::ScenarioMismatch));
    }

    #[test]
    fn named_catalog() {
        let u = named_behavior("uniform", None).unwrap();
        assert!(u.probs().iter().all(|&p| p == 0.25));
        let pr = named_behavior("pr_box", None).unwrap();
        assert_eq!(pr.prob(&[1, 1], &[0, 1]).unwrap(), 0.5);
        assert_eq!(pr.prob(&[1, 1], &[0, 0]).unwrap(), 0.0);
        assert_eq!(pr.prob(&[0, 1], &[1, 1]).unwrap(), 0.5);
        let sig = named_behavior("signalling_demo", None).unwrap();
        assert_eq!(sig.prob(&[0, 1], &[1, 0]).unwrap(), 1.0);
        assert!(matches!(named_behavior("nope", None), Err(Error::UnknownName(_))));
    }

    #[test]
    fn defect_examples() {
        assert_eq!(no_signalling_defect(&named_behavior("uniform", None).unwrap()).max_defect, 0.0);
        assert_eq!(no_signalling_defect(&named_behavior("pr_box", None).unwrap()).max_defect, 0.0);
        let r = no_signalling_defect(&named_behavior("signalling_demo", None).unwrap());
        assert_eq!(r.max_defect, 1.0);
        assert_eq!(r.worst_party, 0);
        let w = r.worst_marginal.unwrap();
        assert_eq!(w.remote_inputs.0[1], 0);
        assert_eq!(w.remote_inputs.1[1], 1);
    }

    #[test]
    fn binning_merges_outputs() {
        let s = Scenario::uniform(2, 2, 3).unwrap();
        let u = named_behavior("uniform", Some(&s)).unwrap();
        let binned = u.bin_last_into_first().unwrap();
        assert_eq!(binned.scenario(), &Scenario::chsh());
        assert!((binned.prob(&[0, 0], &[0, 0]).unwrap() - 4.0 / 9.0).abs() < 1e-15);
        assert!((binned.prob(&[1, 0], &[1, 1]).unwrap() - 1.0 / 9.0).abs() < 1e-15);
    }
}
