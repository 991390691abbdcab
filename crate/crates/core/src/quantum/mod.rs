//! Bipartite quantum systems and the behaviors they generate.

mod linalg;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use linalg::CMatrix;

use crate::error::{Error, Result};
use crate::scenario::{Behavior, Scenario, DEFAULT_TOL};

pub const STATE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
pub const EFFECT_TOL: f64 = 1e-10;
pub const MAX_RANDOM_DIM: usize = 4;

/// A density operator on `C^dA ⊗ C^dB`, Alice on the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    dims: (usize, usize),
    rho: CMatrix,
}

impl QuantumState {
    pub fn new(dims: (usize, usize), rho: CMatrix) -> Result<Self> {
        let (da, db) = dims;
        if da == 0 || db == 0 {
            return Err(Error::DimensionMismatch("zero local dimension".into()));
        }
        if rho.dim() != da * db {
            return Err(Error::DimensionMismatch(format!(
                "density operator is {0}×{0}, dims {da}·{db} need {1}",
                rho.dim(),
                da * db
            )));
        }
        let herm = rho.hermiticity_defect();
        if herm > STATE_TOL {
            return Err(Error::Quantum(format!("state is not Hermitian (defect {herm:e})")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::Quantum(format!("state trace is {tr}, not 1")));
        }
        let min = rho.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::Quantum(format!("state has eigenvalue {min:e}")));
        }
        Ok(QuantumState { dims, rho })
    }

    /// `|ψ⟩⟨ψ|` for a normalized vector.
    pub fn pure(dims: (usize, usize), psi: &[Complex64]) -> Result<Self> {
        QuantumState::new(dims, CMatrix::outer(psi))
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }
}

/// Effects for each input of one party.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    dim: usize,
    settings: Vec<Vec<CMatrix>>,
}

impl MeasurementSet {
    pub fn new(dim: usize, settings: Vec<Vec<CMatrix>>) -> Result<Self> {
        if settings.is_empty() {
            return Err(Error::Quantum("measurement set has no inputs".into()));
        }
        for (x, effects) in settings.iter().enumerate() {
            if effects.is_empty() {
                return Err(Error::Quantum(format!("input {x} has no effects")));
            }
            let mut sum = CMatrix::zeros(dim);
            for (a, m) in effects.iter().enumerate() {
                if m.dim() != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "input {x} effect {a} is {0}×{0}, expected {dim}×{dim}",
                        m.dim()
                    )));
                }
                let herm = m.hermiticity_defect();
                if herm > EFFECT_TOL {
                    return Err(Error::Quantum(format!(
                        "input {x} effect {a} is not Hermitian (defect {herm:e})"
                    )));
                }
                let min = m.min_eigenvalue();
                if min < -EFFECT_TOL {
                    return Err(Error::Quantum(format!(
                        "input {x} effect {a} has eigenvalue {min:e}"
                    )));
                }
                sum = sum.add(m);
            }
            let gap = sum.max_abs_diff(&CMatrix::identity(dim));
            if gap > EFFECT_TOL {
                return Err(Error::Quantum(format!(
                    "effects of input {x} miss the identity by {gap:e}"
                )));
            }
        }
        Ok(MeasurementSet { dim, settings })
    }

    /// Qubit projective measurements along x–z plane angles.
    pub fn qubit_angles(angles: &[f64]) -> Self {
        let settings = angles
            .iter()
            .map(|&t| vec![qubit_projector(t, 1.0), qubit_projector(t, -1.0)])
            .collect();
        MeasurementSet { dim: 2, settings }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inputs(&self) -> usize {
        self.settings.len()
    }

    pub fn outputs(&self) -> Vec<usize> {
        self.settings.iter().map(Vec::len).collect()
    }

    pub fn settings(&self) -> &[Vec<CMatrix>] {
        &self.settings
    }
}

/// `(I + sign·n̂·σ)/2` with `n̂ = (sin θ, 0, cos θ)`.
pub fn qubit_projector(theta: f64, sign: f64) -> CMatrix {
    let (s, c) = theta.sin_cos();
    CMatrix::from_real(
        2,
        &[
            0.5 * (1.0 + sign * c),
            0.5 * sign * s,
            0.5 * sign * s,
            0.5 * (1.0 - sign * c),
        ],
    )
    .expect("2×2")
}

/// Appends a no-click outcome `(1−η)·I` and scales every other effect by `η`.
pub fn lift_with_efficiency(mset: &MeasurementSet, eta: f64) -> Result<MeasurementSet> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Precondition(format!("efficiency {eta} is outside [0, 1]")));
    }
    let settings = mset
        .settings
        .iter()
        .map(|effects| {
            let mut lifted: Vec<CMatrix> = effects.iter().map(|m| m.scale(eta)).collect();
            lifted.push(CMatrix::identity(mset.dim).scale(1.0 - eta));
            lifted
        })
        .collect();
    Ok(MeasurementSet {
        dim: mset.dim,
        settings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BellSetup {
    state: QuantumState,
    alice: MeasurementSet,
    bob: MeasurementSet,
}

impl BellSetup {
    pub fn new(state: QuantumState, alice: MeasurementSet, bob: MeasurementSet) -> Result<Self> {
        let (da, db) = state.dims();
        if alice.dim() != da || bob.dim() != db {
            return Err(Error::DimensionMismatch(format!(
                "state dims ({da}, {db}) but measurements act on ({}, {})",
                alice.dim(),
                bob.dim()
            )));
        }
        Ok(BellSetup { state, alice, bob })
    }

    pub fn state(&self) -> &QuantumState {
        &self.state
    }

    pub fn alice(&self) -> &MeasurementSet {
        &self.alice
    }

    pub fn bob(&self) -> &MeasurementSet {
        &self.bob
    }

    pub fn scenario(&self) -> Scenario {
        Scenario::new(vec![self.alice.outputs(), self.bob.outputs()])
            .expect("measurement sets are non-empty")
    }

    /// Both parties' detectors at efficiency `eta`.
    pub fn lifted(&self, eta: f64) -> Result<BellSetup> {
        Ok(BellSetup {
            state: self.state.clone(),
            alice: lift_with_efficiency(&self.alice, eta)?,
            bob: lift_with_efficiency(&self.bob, eta)?,
        })
    }
}

/// Born rule: `P(a,b|x,y) = Tr[ρ (M_a^x ⊗ M_b^y)]`.
pub fn behavior_from_setup(setup: &BellSetup) -> Result<Behavior> {
    let rho = setup.state.rho();
    Behavior::from_fn(setup.scenario(), DEFAULT_TOL, |x, a| {
        let m = setup.alice.settings[x[0]][a[0]].kron(&setup.bob.settings[x[1]][a[1]]);
        rho.trace_product(&m).re
    })
}

pub const SETUP_NAMES: [&str; 3] = ["singlet_chsh", "werner", "product_basis"];

pub const ALICE_ANGLES: [f64; 2] = [0.0, FRAC_PI_2];
/// Bob's CHSH axes `{π/4, −π/4}` with the outcome labels exchanged, so that
/// the correlator sum comes out at `+2√2` rather than `−2√2`.
pub const BOB_ANGLES: [f64; 2] = [FRAC_PI_4 + PI, -FRAC_PI_4 + PI];

/// `(|01⟩ − |10⟩)/√2`.
pub fn singlet_vector() -> Vec<Complex64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        Complex64::new(0.0, 0.0),
        Complex64::new(h, 0.0),
        Complex64::new(-h, 0.0),
        Complex64::new(0.0, 0.0),
    ]
}

/// Singlet measured along arbitrary x–z plane angles.
pub fn singlet_with_angles(alice: &[f64], bob: &[f64]) -> BellSetup {
    let state = QuantumState::pure((2, 2), &singlet_vector()).expect("singlet is a state");
    BellSetup::new(
        state,
        MeasurementSet::qubit_angles(alice),
        MeasurementSet::qubit_angles(bob),
    )
    .expect("qubit setup")
}

pub fn werner_state(v: f64) -> Result<QuantumState> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Precondition(format!("visibility {v} is outside [0, 1]")));
    }
    let singlet = CMatrix::outer(&singlet_vector());
    let rho = singlet.scale(v).add(&CMatrix::identity(4).scale((1.0 - v) / 4.0));
    QuantumState::new((2, 2), rho)
}

/// Catalog: `singlet_chsh`, `werner` (parameter `v`, also spelled
/// `werner(v)`), and `product_basis` (`|00⟩` with two computational-basis
/// inputs per side).
pub fn named_setup(name: &str, param: Option<f64>) -> Result<BellSetup> {
    let (base, inline) = match name.split_once('(') {
        Some((b, rest)) => {
            let arg = rest
                .strip_suffix(')')
                .ok_or_else(|| Error::UnknownName(name.to_string()))?;
            let v: f64 = arg
                .trim()
                .parse()
                .map_err(|_| Error::Precondition(format!("bad parameter in `{name}`")))?;
            (b.trim(), Some(v))
        }
        None => (name.trim(), None),
    };
    let param = inline.or(param);
    match base {
        "singlet_chsh" => Ok(singlet_with_angles(&ALICE_ANGLES, &BOB_ANGLES)),
        "werner" => {
            let v = param.ok_or_else(|| Error::Precondition("werner needs a visibility".into()))?;
            BellSetup::new(
                werner_state(v)?,
                MeasurementSet::qubit_angles(&ALICE_ANGLES),
                MeasurementSet::qubit_angles(&BOB_ANGLES),
            )
        }
        "product_basis" => {
            let zero = [
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
            ];
            BellSetup::new(
                QuantumState::pure((2, 2), &zero)?,
                MeasurementSet::qubit_angles(&[0.0, 0.0]),
                MeasurementSet::qubit_angles(&[0.0, 0.0]),
            )
        }
        _ => Err(Error::UnknownName(name.to_string())),
    }
}

/// Random pure state with random projective measurements.
///
/// The stream is `ChaCha8Rng::seed_from_u64(seed)` sampled through
/// `rand_distr::StandardNormal`, consumed in this order:
/// 1. the state, `dA·dB` amplitudes as (re, im) pairs, then normalized;
/// 2. for Alice's inputs and then Bob's, a `d × d` matrix in row-major order
///    as (re, im) pairs. Its columns are orthonormalized by modified
///    Gram–Schmidt from column 0, and column `k` gives the effect `|u_k⟩⟨u_k|`.
pub fn random_setup(seed: u64, dims: (usize, usize), inputs: (usize, usize)) -> Result<BellSetup> {
    for d in [dims.0, dims.1] {
        if d == 0 || d > MAX_RANDOM_DIM {
            return Err(Error::DimensionMismatch(format!(
                "random setups support local dimensions 1..={MAX_RANDOM_DIM}, got {d}"
            )));
        }
    }
    if inputs.0 == 0 || inputs.1 == 0 {
        return Err(Error::Precondition("each party needs at least one input".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> Complex64 {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    };

    let mut psi: Vec<Complex64> = (0..dims.0 * dims.1).map(|_| normal()).collect();
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut psi {
        *z /= norm;
    }
    let state = QuantumState::pure(dims, &psi)?;

    let mut party = |d: usize, n: usize| -> Result<MeasurementSet> {
        let settings = (0..n)
            .map(|_| {
                let m: Vec<Complex64> = (0..d * d).map(|_| normal()).collect();
                orthonormal_columns(&m, d)
                    .iter()
                    .map(|u| CMatrix::outer(u))
                    .collect()
            })
            .collect();
        MeasurementSet::new(d, settings)
    };
    let alice = party(dims.0, inputs.0)?;
    let bob = party(dims.1, inputs.1)?;
    BellSetup::new(state, alice, bob)
}

fn orthonormal_columns(m: &[Complex64], d: usize) -> Vec<Vec<Complex64>> {
    let mut cols: Vec<Vec<Complex64>> = (0..d).map(|c| (0..d).map(|r| m[r * d + c]).collect()).collect();
    for k in 0..d {
        for j in 0..k {
            let proj: Complex64 = (0..d).map(|i| cols[j][i].conj() * cols[k][i]).sum();
            for i in 0..d {
                let v = cols[j][i];
                cols[k][i] -= proj * v;
            }
        }
        let norm = cols[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut cols[k] {
            *z /= norm;
        }
    }
    cols
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{named_behavior, no_signalling_defect};

    fn correlator(b: &Behavior, x: usize, y: usize) -> f64 {
        let mut e = 0.0;
        for a0 in 0..2 {
            for a1 in 0..2 {
                let s = if a0 == a1 { 1.0 } else { -1.0 };
                e += s * b.prob(&[x, y], &[a0, a1]).unwrap();
            }
        }
        e
    }

    #[test]
    fn singlet_correlators_on_grid() {
        let angles: Vec<f64> = (0..10).map(|i| -PI + 2.0 * PI * i as f64 / 10.0 + 0.1).collect();
        let setup = singlet_with_angles(&angles, &angles);
        let b = behavior_from_setup(&setup).unwrap();
        for (x, &ta) in angles.iter().enumerate() {
            for (y, &tb) in angles.iter().enumerate() {
                assert!((correlator(&b, x, y) + (ta - tb).cos()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singlet_chsh_reaches_two_root_two() {
        let b = behavior_from_setup(&named_setup("singlet_chsh", None).unwrap()).unwrap();
        let s = correlator(&b, 0, 0) + correlator(&b, 0, 1) + correlator(&b, 1, 0) - correlator(&b, 1, 1);
        assert!((s - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn werner_endpoints() {
        let singlet = behavior_from_setup(&named_setup("singlet_chsh", None).unwrap()).unwrap();
        let w1 = behavior_from_setup(&named_setup("werner(1.0)", None).unwrap()).unwrap();
        assert!(w1.max_abs_diff(&singlet) < 1e-15);
        let w0 = behavior_from_setup(&named_setup("werner", Some(0.0)).unwrap()).unwrap();
        assert!(w0.max_abs_diff(&named_behavior("uniform", None).unwrap()) < 1e-15);
        assert!(named_setup("werner(1.5)", None).is_err());
        assert!(matches!(named_setup("ghz", None), Err(Error::UnknownName(_))));
    }

    #[test]
    fn product_basis_is_deterministic() {
        let b = behavior_from_setup(&named_setup("product_basis", None).unwrap()).unwrap();
        for x in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            assert_eq!(b.prob(&x, &[0, 0]).unwrap(), 1.0);
        }
    }

    #[test]
    fn maximally_mixed_gives_uniform_marginals() {
        let rho = CMatrix::identity(6).scale(1.0 / 6.0);
        let state = QuantumState::new((2, 3), rho).unwrap();
        let r = random_setup(3, (2, 3), (2, 2)).unwrap();
        let setup = BellSetup::new(state, r.alice().clone(), r.bob().clone()).unwrap();
        let b = behavior_from_setup(&setup).unwrap();
        for p in b.probs() {
            assert!((p - 1.0 / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn efficiency_lifting() {
        let setup = named_setup("singlet_chsh", None).unwrap();
        let lifted = setup.lifted(0.9).unwrap();
        assert_eq!(lifted.scenario(), Scenario::new(vec![vec![3, 3], vec![3, 3]]).unwrap());
        MeasurementSet::new(2, lifted.alice().settings().to_vec()).unwrap();
        let b = behavior_from_setup(&lifted).unwrap();
        for x in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            assert!((b.prob(&x, &[2, 2]).unwrap() - 0.01).abs() < 1e-12);
        }

        let none = behavior_from_setup(&setup.lifted(0.0).unwrap()).unwrap();
        assert_eq!(none.prob(&[1, 0], &[2, 2]).unwrap(), 1.0);

        let full = behavior_from_setup(&setup.lifted(1.0).unwrap()).unwrap();
        let ideal = behavior_from_setup(&setup).unwrap();
        let binned = full.bin_last_into_first().unwrap();
        assert!(binned.max_abs_diff(&ideal) < 1e-15);
        assert!(setup.lifted(-0.1).is_err());
    }

    #[test]
    fn random_setups_are_reproducible() {
        let a = random_setup(7, (3, 2), (2, 3)).unwrap();
        let b = random_setup(7, (3, 2), (2, 3)).unwrap();
        assert_eq!(a, b);
        let c = random_setup(8, (3, 2), (2, 3)).unwrap();
        let diff = a.alice().settings()[0][0].max_abs_diff(&c.alice().settings()[0][0]);
        assert!(diff > 1e-6);
        let beh = behavior_from_setup(&a).unwrap();
        assert!(no_signalling_defect(&beh).max_defect <= 1e-9);
        assert!(random_setup(1, (5, 2), (2, 2)).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let state = werner_state(0.5).unwrap();
        let m3 = MeasurementSet::new(3, vec![vec![CMatrix::identity(3)]]).unwrap();
        assert!(matches!(
            BellSetup::new(state, m3, MeasurementSet::qubit_angles(&[0.0])),
            Err(Error::DimensionMismatch(_))
        ));
        let bad = MeasurementSet::new(2, vec![vec![CMatrix::identity(2).scale(0.5)]]);
        assert!(bad.is_err());
    }
}
