//! Local deterministic strategies and the vertices of the local polytope.
//!
//! A deterministic strategy assigns one output to every (party, input). It
//! is local by construction: the output of a party can only depend on that
//! party's own input. Strategies are numbered in mixed radix over the
//! assignment table read party by party, input by input, with party 0 and
//! input 0 most significant.

use std::ops::Add;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scenario::{mix, Behavior, Scenario, DEFAULT_TOL};

/// Default cap on the number of deterministic strategies.
pub const DEFAULT_STRATEGY_CAP: u128 = 10_000_000;

/// Number of deterministic strategies, `Π_party Π_input outputs(party, input)`.
pub fn strategy_count(scenario: &Scenario) -> u128 {
    scenario
        .output_table()
        .iter()
        .flatten()
        .fold(1u128, |acc, &o| acc.saturating_mul(o as u128))
}

fn check_cap(scenario: &Scenario, cap: u128) -> Result<usize> {
    let count = strategy_count(scenario);
    if count > cap || count > usize::MAX as u128 {
        return Err(Error::TooLarge {
            what: "deterministic strategies",
            count,
            cap,
            hint: "",
        });
    }
    Ok(count as usize)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeterministicStrategy {
    scenario: Scenario,
    assignment: Vec<Vec<usize>>,
}

impl DeterministicStrategy {
    pub fn new(scenario: Scenario, assignment: Vec<Vec<usize>>) -> Result<Self> {
        if assignment.len() != scenario.parties() {
            return Err(Error::WrongLength {
                expected: scenario.parties(),
                got: assignment.len(),
            });
        }
        for (party, row) in assignment.iter().enumerate() {
            if row.len() != scenario.inputs(party) {
                return Err(Error::WrongLength {
                    expected: scenario.inputs(party),
                    got: row.len(),
                });
            }
            for (input, &a) in row.iter().enumerate() {
                let limit = scenario.outputs(party, input);
                if a >= limit {
                    return Err(Error::OutOfRange {
                        party,
                        what: "output",
                        value: a,
                        limit,
                    });
                }
            }
        }
        Ok(DeterministicStrategy {
            scenario,
            assignment,
        })
    }

    /// The strategy with the given enumeration index.
    pub fn from_index(scenario: &Scenario, index: usize) -> Result<Self> {
        let count = strategy_count(scenario);
        if index as u128 >= count {
            return Err(Error::OutOfRange {
                party: 0,
                what: "strategy index",
                value: index,
                limit: count.min(usize::MAX as u128) as usize,
            });
        }
        let mut rest = index;
        let mut assignment: Vec<Vec<usize>> = scenario
            .output_table()
            .iter()
            .map(|row| vec![0; row.len()])
            .collect();
        for party in (0..scenario.parties()).rev() {
            for input in (0..scenario.inputs(party)).rev() {
                let n = scenario.outputs(party, input);
                assignment[party][input] = rest % n;
                rest /= n;
            }
        }
        Ok(DeterministicStrategy {
            scenario: scenario.clone(),
            assignment,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn assignment(&self) -> &[Vec<usize>] {
        &self.assignment
    }

    pub fn index(&self) -> usize {
        let mut index = 0usize;
        for (party, row) in self.assignment.iter().enumerate() {
            for (input, &a) in row.iter().enumerate() {
                index = index * self.scenario.outputs(party, input) + a;
            }
        }
        index
    }

    /// `j = F(i)`: every party answers from its own input only.
    pub fn apply(&self, inputs: &[usize]) -> Result<Vec<usize>> {
        self.scenario.input_block(inputs)?;
        Ok(inputs
            .iter()
            .enumerate()
            .map(|(party, &x)| self.assignment[party][x])
            .collect())
    }

    /// Flat index of the single nonzero entry in every input block.
    pub fn support(&self) -> Vec<usize> {
        support_of(&self.scenario, &self.assignment)
    }

    /// The 0/1 behavior of this strategy: a vertex of the local polytope.
    pub fn behavior(&self) -> Behavior {
        let mut probs = vec![0.0; self.scenario.dim()];
        for i in self.support() {
            probs[i] = 1.0;
        }
        Behavior::new(self.scenario.clone(), probs, DEFAULT_TOL)
            .expect("deterministic tables are valid behaviors")
    }
}

fn support_of(scenario: &Scenario, assignment: &[Vec<usize>]) -> Vec<usize> {
    (0..scenario.joint_inputs())
        .map(|block| {
            let x = scenario.block_inputs(block);
            let a: Vec<usize> = x.iter().enumerate().map(|(k, &xk)| assignment[k][xk]).collect();
            scenario.flat_index(&x, &a).expect("assigned outputs are in range")
        })
        .collect()
}

/// All deterministic strategies in enumeration order.
pub fn enumerate_strategies(scenario: &Scenario, cap: u128) -> Result<Vec<DeterministicStrategy>> {
    let count = check_cap(scenario, cap)?;
    Ok((0..count)
        .map(|i| DeterministicStrategy::from_index(scenario, i).expect("index below count"))
        .collect())
}

/// Supports (one flat index per input block) of every strategy, in order.
pub fn vertex_supports(scenario: &Scenario, cap: u128) -> Result<Vec<Vec<usize>>> {
    let count = check_cap(scenario, cap)?;
    let mut out = Vec::with_capacity(count);
    let mut assignment: Vec<Vec<usize>> = scenario
        .output_table()
        .iter()
        .map(|row| vec![0; row.len()])
        .collect();
    for _ in 0..count {
        out.push(support_of(scenario, &assignment));
        advance(scenario, &mut assignment);
    }
    Ok(out)
}

fn advance(scenario: &Scenario, assignment: &mut [Vec<usize>]) {
    for party in (0..scenario.parties()).rev() {
        for input in (0..scenario.inputs(party)).rev() {
            assignment[party][input] += 1;
            if assignment[party][input] < scenario.outputs(party, input) {
                return;
            }
            assignment[party][input] = 0;
        }
    }
}

/// Maximum of `⟨coeffs, v⟩` over all vertices `v`, with the smallest
/// maximizing strategy index.
pub fn local_bound_of<T>(scenario: &Scenario, coeffs: &[T], cap: u128) -> Result<(T, usize)>
where
    T: Copy + PartialOrd + Add<Output = T> + Zero,
{
    if coeffs.len() != scenario.dim() {
        return Err(Error::WrongLength {
            expected: scenario.dim(),
            got: coeffs.len(),
        });
    }
    let count = check_cap(scenario, cap)?;
    let mut assignment: Vec<Vec<usize>> = scenario
        .output_table()
        .iter()
        .map(|row| vec![0; row.len()])
        .collect();
    let blocks: Vec<Vec<usize>> = (0..scenario.joint_inputs())
        .map(|b| scenario.block_inputs(b))
        .collect();
    let mut best: Option<(T, usize)> = None;
    let mut outputs = vec![0usize; scenario.parties()];
    for index in 0..count {
        let mut value = T::zero();
        for x in &blocks {
            for (k, &xk) in x.iter().enumerate() {
                outputs[k] = assignment[k][xk];
            }
            value = value + coeffs[scenario.flat_index(x, &outputs).expect("in range")];
        }
        match best {
            Some((b, _)) if !(value > b) => {}
            _ => best = Some((value, index)),
        }
        advance(scenario, &mut assignment);
    }
    Ok(best.expect("at least one strategy"))
}

/// [`local_bound_of`] on real coefficients with the default cap.
pub fn local_bound(scenario: &Scenario, coeffs: &[f64]) -> Result<(f64, usize)> {
    local_bound_of(scenario, coeffs, DEFAULT_STRATEGY_CAP)
}

/// A probability distribution over local deterministic strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalModel {
    scenario: Scenario,
    weights: Vec<(usize, f64)>,
}

impl LocalModel {
    pub fn new(scenario: Scenario, weights: Vec<(usize, f64)>) -> Result<Self> {
        let count = strategy_count(&scenario);
        if weights.is_empty() {
            return Err(Error::InvalidModel("no strategies".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut sum = 0.0;
        for &(index, w) in &weights {
            if index as u128 >= count {
                return Err(Error::InvalidModel(format!("strategy index {index} >= {count}")));
            }
            if !seen.insert(index) {
                return Err(Error::InvalidModel(format!("strategy index {index} repeated")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidModel(format!("weight {w} for strategy {index} is not positive")));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::WeightSum { sum });
        }
        Ok(LocalModel { scenario, weights })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn weights(&self) -> &[(usize, f64)] {
        &self.weights
    }

    /// The behavior `Σ Pr(F) · v_F`.
    pub fn behavior(&self) -> Result<Behavior> {
        let total: f64 = self.weights.iter().map(|(_, w)| w).sum();
        let vertices: Vec<(f64, Behavior)> = self
            .weights
            .iter()
            .map(|&(i, w)| {
                let s = DeterministicStrategy::from_index(&self.scenario, i)?;
                Ok((w / total, s.behavior()))
            })
            .collect::<Result<_>>()?;
        let refs: Vec<(f64, &Behavior)> = vertices.iter().map(|(w, b)| (*w, b)).collect();
        mix(&refs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{named_behavior, no_signalling_defect};

    #[test]
    fn strategy_counts() {
        assert_eq!(enumerate_strategies(&Scenario::chsh(), DEFAULT_STRATEGY_CAP).unwrap().len(), 16);
        let lifted = Scenario::uniform(2, 2, 3).unwrap();
        assert_eq!(enumerate_strategies(&lifted, DEFAULT_STRATEGY_CAP).unwrap().len(), 81);
        let single = Scenario::new(vec![vec![5]]).unwrap();
        assert_eq!(enumerate_strategies(&single, DEFAULT_STRATEGY_CAP).unwrap().len(), 5);
        let big = Scenario::uniform(3, 4, 4).unwrap();
        assert!(matches!(
            enumerate_strategies(&big, DEFAULT_STRATEGY_CAP),
            Err(Error::TooLarge { count: 16_777_216, .. })
        ));
    }

    #[test]
    fn enumeration_order_and_apply() {
        let s = Scenario::chsh();
        let all = enumerate_strategies(&s, DEFAULT_STRATEGY_CAP).unwrap();
        for (i, st) in all.iter().enumerate() {
            assert_eq!(st.index(), i);
        }
        // 6 = 0b0110: Alice (0, 1), Bob (1, 0).
        assert_eq!(all[6].assignment(), &[vec![0, 1], vec![1, 0]]);
        assert_eq!(all[6].apply(&[1, 0]).unwrap(), vec![1, 1]);
        let identity = DeterministicStrategy::new(s.clone(), vec![vec![0, 1], vec![0, 1]]).unwrap();
        assert_eq!(identity.apply(&[0, 1]).unwrap(), vec![0, 1]);
        assert_eq!(all[0].apply(&[1, 1]).unwrap(), vec![0, 0]);
        assert!(all[0].apply(&[2, 0]).is_err());
    }

    #[test]
    fn vertex_behaviors() {
        let s = Scenario::chsh();
        let all = enumerate_strategies(&s, DEFAULT_STRATEGY_CAP).unwrap();
        let b0 = all[0].behavior();
        for x in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            assert_eq!(b0.prob(&x, &[0, 0]).unwrap(), 1.0);
        }
        let supports = vertex_supports(&s, DEFAULT_STRATEGY_CAP).unwrap();
        for (st, sup) in all.iter().zip(&supports) {
            assert_eq!(&st.support(), sup);
            assert_eq!(no_signalling_defect(&st.behavior()).max_defect, 0.0);
        }
        let verts: Vec<Behavior> = all.iter().map(|s| s.behavior()).collect();
        let parts: Vec<(f64, &Behavior)> = verts.iter().map(|b| (1.0 / 16.0, b)).collect();
        assert_eq!(mix(&parts).unwrap(), named_behavior("uniform", None).unwrap());
    }

    #[test]
    fn bounds_of_simple_functionals() {
        let s = Scenario::chsh();
        assert_eq!(local_bound(&s, &[0.0; 16]).unwrap(), (0.0, 0));
        let v = DeterministicStrategy::from_index(&s, 9).unwrap().behavior();
        let (bound, arg) = local_bound(&s, v.probs()).unwrap();
        assert_eq!(bound, 4.0);
        assert_eq!(arg, 9);
        let ints: Vec<i64> = v.probs().iter().map(|&p| p as i64).collect();
        assert_eq!(local_bound_of(&s, &ints, DEFAULT_STRATEGY_CAP).unwrap(), (4, 9));
    }

    #[test]
    fn local_model_validation() {
        let s = Scenario::chsh();
        assert!(LocalModel::new(s.clone(), vec![(0, 0.5), (0, 0.5)]).is_err());
        assert!(LocalModel::new(s.clone(), vec![(16, 1.0)]).is_err());
        assert!(LocalModel::new(s.clone(), vec![(1, 0.7)]).is_err());
        let m = LocalModel::new(s, vec![(0, 0.5), (15, 0.5)]).unwrap();
        let b = m.behavior().unwrap();
        assert_eq!(b.prob(&[0, 0], &[1, 1]).unwrap(), 0.5);
    }
}
