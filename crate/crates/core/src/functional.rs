//! Bell functionals: linear inequalities `⟨coeffs, P⟩ ≤ local_bound` on
//! behaviors, and their canonical form.
//!
//! Two coefficient tables define the same inequality on no-signalling
//! behaviors when they differ by a combination of per-block normalization
//! vectors and marginal-difference vectors (the "gauge"). The canonical form
//! removes the gauge by orthogonal projection, scales the largest absolute
//! coefficient to 1, and switches to small integers when every coefficient
//! is a multiple of a common `1/q` with `q ≤ 64`. For CHSH this is the
//! familiar correlator form `E00 + E01 + E10 − E11 ≤ 2`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::local::{local_bound_of, DEFAULT_STRATEGY_CAP};
use crate::scenario::{Behavior, Scenario};

/// Largest denominator tried when looking for an integer form.
pub const MAX_DENOMINATOR: u32 = 64;

/// Where a functional came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Facet,
    Certificate,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Facet => "facet",
            Provenance::Certificate => "certificate",
        }
    }

    pub fn parse(s: &str) -> Option<Provenance> {
        match s {
            "facet" => Some(Provenance::Facet),
            "certificate" => Some(Provenance::Certificate),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BellFunctional {
    scenario: Scenario,
    coeffs: Vec<f64>,
    local_bound: f64,
    maximizer: usize,
    provenance: Option<Provenance>,
}

impl BellFunctional {
    /// Computes the local bound by vertex enumeration.
    pub fn new(scenario: Scenario, coeffs: Vec<f64>) -> Result<Self> {
        if let Some(index) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let (local_bound, maximizer) = local_bound_of(&scenario, &coeffs, DEFAULT_STRATEGY_CAP)?;
        Ok(BellFunctional {
            scenario,
            coeffs,
            local_bound,
            maximizer,
            provenance: None,
        })
    }

    /// Checks a stored bound against the recomputed one (within 1e-9).
    pub fn with_stored_bound(scenario: Scenario, coeffs: Vec<f64>, stored: f64) -> Result<Self> {
        let f = BellFunctional::new(scenario, coeffs)?;
        if (f.local_bound - stored).abs() > 1e-9 * (1.0 + stored.abs()) {
            return Err(Error::BoundMismatch {
                stored,
                computed: f.local_bound,
            });
        }
        Ok(f)
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn local_bound(&self) -> f64 {
        self.local_bound
    }

    /// Smallest strategy index attaining the local bound.
    pub fn maximizer(&self) -> usize {
        self.maximizer
    }

    pub fn provenance(&self) -> Option<Provenance> {
        self.provenance
    }

    pub fn value(&self, behavior: &Behavior) -> f64 {
        behavior.dot(&self.coeffs)
    }

    /// `⟨coeffs, P⟩ − local_bound`; positive means the inequality is violated.
    pub fn violation(&self, behavior: &Behavior) -> f64 {
        self.value(behavior) - self.local_bound
    }

    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.fract() == 0.0)
    }

    /// Canonical form on no-signalling behaviors.
    pub fn canonical(&self) -> Result<BellFunctional> {
        let projector = GaugeProjector::new(&self.scenario);
        let projected = projector.project(&self.coeffs);
        self.rescaled(projected)
    }

    /// Canonical scaling only, without removing the gauge. Used for
    /// signalling behaviors, where gauge terms change the value.
    pub fn scaled(&self) -> Result<BellFunctional> {
        self.rescaled(self.coeffs.clone())
    }

    fn rescaled(&self, coeffs: Vec<f64>) -> Result<BellFunctional> {
        let original = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let largest = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if largest <= 1e-12 * original.max(1.0) {
            return Err(Error::DegenerateFunctional(
                "functional is constant on no-signalling behaviors".into(),
            ));
        }
        let scaled: Vec<f64> = coeffs.iter().map(|c| c / largest).collect();
        let coeffs = integer_form(&scaled).unwrap_or(scaled);
        let mut f = BellFunctional::new(self.scenario.clone(), coeffs)?;
        f.provenance = self.provenance;
        Ok(f)
    }

    /// Same inequality with coefficients permuted: `new[perm[i]] = old[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<BellFunctional> {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for (i, &j) in perm.iter().enumerate() {
            coeffs[j] = self.coeffs[i];
        }
        let mut f = BellFunctional::new(self.scenario.clone(), coeffs)?;
        f.provenance = self.provenance;
        Ok(f)
    }

    /// Exact comparison of coefficients and bound.
    pub fn same_inequality(&self, other: &BellFunctional) -> bool {
        self.scenario == other.scenario
            && self.coeffs == other.coeffs
            && self.local_bound == other.local_bound
    }
}

/// Multiplies by the smallest `q ≤ 64` making every coefficient an integer
/// (within `q · 1e-9`), and returns the rounded integers.
fn integer_form(coeffs: &[f64]) -> Option<Vec<f64>> {
    (1..=MAX_DENOMINATOR).find_map(|q| {
        let q = q as f64;
        let ok = coeffs
            .iter()
            .all(|c| (c * q - (c * q).round()).abs() <= 1e-9 * q);
        ok.then(|| {
            coeffs
                .iter()
                .map(|c| {
                    let v = (c * q).round();
                    if v == 0.0 {
                        0.0
                    } else {
                        v
                    }
                })
                .collect()
        })
    })
}

/// Orthogonal projector onto the complement of the gauge subspace spanned by
/// per-block normalization vectors and one-party marginal differences.
#[derive(Debug, Clone)]
pub struct GaugeProjector {
    basis: Vec<Vec<f64>>,
}

impl GaugeProjector {
    pub fn new(scenario: &Scenario) -> Self {
        let dim = scenario.dim();
        let mut generators: Vec<Vec<f64>> = Vec::new();
        for block in 0..scenario.joint_inputs() {
            let mut g = vec![0.0; dim];
            for i in scenario.block_range(block) {
                g[i] = 1.0;
            }
            generators.push(g);
        }
        // Marginal of `party` at (input, output) under remote block vs. the
        // remote block with all other inputs 0.
        for party in 0..scenario.parties() {
            for block in 0..scenario.joint_inputs() {
                let x = scenario.block_inputs(block);
                if x.iter().enumerate().all(|(k, &v)| k == party || v == 0) {
                    continue;
                }
                let mut reference = vec![0; x.len()];
                reference[party] = x[party];
                for output in 0..scenario.outputs(party, x[party]) {
                    let mut g = vec![0.0; dim];
                    scenario.for_each_entry(|i, xi, a| {
                        if a[party] != output {
                            return;
                        }
                        if xi == x.as_slice() {
                            g[i] += 1.0;
                        } else if xi == reference.as_slice() {
                            g[i] -= 1.0;
                        }
                    });
                    generators.push(g);
                }
            }
        }
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for mut g in generators {
            let norm0 = dot(&g, &g).sqrt();
            // Two passes of modified Gram–Schmidt.
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(&g, q);
                    for (v, w) in g.iter_mut().zip(q) {
                        *v -= c * w;
                    }
                }
            }
            let norm = dot(&g, &g).sqrt();
            if norm > 1e-10 * norm0.max(1.0) {
                for v in &mut g {
                    *v /= norm;
                }
                basis.push(g);
            }
        }
        GaugeProjector { basis }
    }

    /// Dimension of the gauge subspace.
    pub fn gauge_rank(&self) -> usize {
        self.basis.len()
    }

    pub fn project(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut c = coeffs.to_vec();
        for _ in 0..2 {
            for q in &self.basis {
                let k = dot(&c, q);
                for (v, w) in c.iter_mut().zip(q) {
                    *v -= k * w;
                }
            }
        }
        let scale = coeffs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for v in &mut c {
            if v.abs() <= 1e-14 * scale {
                *v = 0.0;
            }
        }
        c
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// CHSH coefficients on (2,2,2): `sign(x,y)·(−1)^(a⊕b)` with `sign = −1`
/// only for `x = y = 1`, so that `⟨c, P⟩ = E00 + E01 + E10 − E11`.
pub fn chsh_coefficients() -> Vec<f64> {
    let s = Scenario::chsh();
    let mut c = vec![0.0; s.dim()];
    s.for_each_entry(|i, x, a| {
        let sign = if x[0] == 1 && x[1] == 1 { -1.0 } else { 1.0 };
        let parity = if (a[0] ^ a[1]) == 0 { 1.0 } else { -1.0 };
        c[i] = sign * parity;
    });
    c
}

/// The CHSH inequality `E00 + E01 + E10 − E11 ≤ 2`.
pub fn chsh_functional() -> BellFunctional {
    BellFunctional::new(Scenario::chsh(), chsh_coefficients()).expect("CHSH is well formed")
}

/// Positivity inequality `−P(entry) ≤ 0` for one flat entry.
pub fn positivity_functional(scenario: &Scenario, entry: usize) -> Result<BellFunctional> {
    if entry >= scenario.dim() {
        return Err(Error::WrongLength {
            expected: scenario.dim(),
            got: entry,
        });
    }
    let mut c = vec![0.0; scenario.dim()];
    c[entry] = -1.0;
    BellFunctional::new(scenario.clone(), c)
}
