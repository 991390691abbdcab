//! Decision procedures on behaviors: local-polytope membership, the
//! three-way classification, inequality derivation and threshold sweeps.

use crate::error::{Error, Result};
use crate::facets::{facet_through, lift_facet, ReducedCoordinates};
use crate::functional::{BellFunctional, Provenance};
use crate::local::{strategy_count, vertex_supports, LocalModel, DEFAULT_STRATEGY_CAP};
use crate::lp::{solve, verify_certificate, Bound, LinearProgram, LpError, LpStatus, Sense, SolveOptions};
use crate::quantum::{behavior_from_setup, BellSetup};
use crate::scenario::{mix, no_signalling_defect, Behavior, NoSignallingReport, Scenario};

/// Local models must reproduce their behavior to this accuracy.
pub const REPRODUCTION_TOL: f64 = 1e-7;

/// Strategy cap for the membership LP (one column per strategy).
pub const MEMBERSHIP_STRATEGY_CAP: u128 = 4096;

/// Reduced dimension up to which certificates are refined to facets.
const REFINE_MAX_DIM: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipOptions {
    /// A nonlocal verdict needs canonical violation above this.
    pub tol: f64,
    /// Refine certificates of no-signalling behaviors to facets.
    pub refine: bool,
    pub strategy_cap: u128,
}

impl Default for MembershipOptions {
    fn default() -> Self {
        MembershipOptions {
            tol: crate::scenario::DEFAULT_TOL,
            refine: true,
            strategy_cap: MEMBERSHIP_STRATEGY_CAP,
        }
    }
}

/// Evidence that a behavior lies outside the local polytope.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlocalWitness {
    /// Canonical inequality, local bound recomputed by vertex enumeration.
    pub functional: BellFunctional,
    pub value: f64,
    /// `value − local_bound`, in the canonical normalization.
    pub violation: f64,
    /// The functional read directly off the Farkas vector.
    pub raw: BellFunctional,
    /// True when `functional` was refined to a facet of the polytope.
    pub refined: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Membership {
    Local(LocalModel),
    Nonlocal(NonlocalWitness),
}

impl Membership {
    pub fn is_local(&self) -> bool {
        matches!(self, Membership::Local(_))
    }
}

/// `Σ_F q_F v_F = p`, `Σ_F q_F = 1`, `q ≥ 0`: one row per behavior entry
/// plus the normalization row, one column per deterministic strategy.
pub fn membership_lp(behavior: &Behavior, strategy_cap: u128) -> Result<LinearProgram> {
    let scenario = behavior.scenario();
    let supports = vertex_supports(scenario, strategy_cap)?;
    let dim = scenario.dim();
    let mut a = vec![vec![0.0; supports.len()]; dim + 1];
    for (j, support) in supports.iter().enumerate() {
        for &i in support {
            a[i][j] = 1.0;
        }
        a[dim][j] = 1.0;
    }
    let mut b = behavior.probs().to_vec();
    b.push(1.0);
    Ok(LinearProgram::new(a, b)?)
}

pub fn membership(behavior: &Behavior, tol: f64) -> Result<Membership> {
    membership_with(
        behavior,
        &MembershipOptions {
            tol,
            ..MembershipOptions::default()
        },
    )
}

pub fn membership_with(behavior: &Behavior, opts: &MembershipOptions) -> Result<Membership> {
    let scenario = behavior.scenario();
    let lp = membership_lp(behavior, opts.strategy_cap)?;
    let outcome = solve(&lp, &SolveOptions::default())?;
    let report = verify_certificate(&lp, &outcome);
    if !report.passed {
        return Err(LpError::VerificationFailed(report.failures.join("; ")).into());
    }
    match outcome.status {
        LpStatus::Feasible | LpStatus::Optimal => {
            let q = outcome.x.expect("feasible outcome carries a point");
            let weights: Vec<(usize, f64)> = q
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 1e-12)
                .map(|(j, &w)| (j, w))
                .collect();
            let total: f64 = weights.iter().map(|(_, w)| w).sum();
            let weights = weights.into_iter().map(|(j, w)| (j, w / total)).collect();
            let model = LocalModel::new(scenario.clone(), weights)?;
            let gap = model.behavior()?.max_abs_diff(behavior);
            if gap > REPRODUCTION_TOL {
                return Err(LpError::VerificationFailed(format!(
                    "local model misses the behavior by {gap:e}"
                ))
                .into());
            }
            Ok(Membership::Local(model))
        }
        LpStatus::Infeasible => {
            let y = outcome.y.expect("infeasible outcome carries a certificate");
            let raw = BellFunctional::new(scenario.clone(), y[..scenario.dim()].to_vec())?
                .with_provenance(Provenance::Certificate);
            let witness = witness_from_certificate(behavior, raw, opts)?;
            if witness.violation <= opts.tol {
                return Err(Error::Undecided {
                    infeasibility: outcome.infeasibility,
                    violation: witness.violation,
                });
            }
            Ok(Membership::Nonlocal(witness))
        }
        LpStatus::Unbounded => unreachable!("membership LP has no objective"),
    }
}

fn witness_from_certificate(
    behavior: &Behavior,
    raw: BellFunctional,
    opts: &MembershipOptions,
) -> Result<NonlocalWitness> {
    let signalling = !no_signalling_defect(behavior).is_no_signalling(opts.tol);
    let plain = if signalling { raw.scaled() } else { raw.canonical() };
    let plain = match plain {
        Ok(f) => f,
        Err(Error::DegenerateFunctional(_)) => raw.scaled()?,
        Err(e) => return Err(e),
    };
    let mut best = (plain, false);
    if opts.refine && !signalling {
        if let Some(f) = refine_to_facet(behavior, &raw)? {
            if f.violation(behavior) > opts.tol {
                best = (f, true);
            }
        }
    }
    let (functional, refined) = best;
    let value = functional.value(behavior);
    Ok(NonlocalWitness {
        violation: value - functional.local_bound(),
        value,
        functional,
        raw,
        refined,
    })
}

/// Replaces a separating functional by a facet through its tight face.
///
/// With `r` the reduced coordinates and `r0` the vertex centroid, solves
/// `max y·(r_p − r0)` subject to `y·(r_j − r0) ≤ 1` for every vertex, with
/// equality on the raw functional's tight vertices. A basic optimum is a
/// vertex of the polar, hence a facet; it is rebuilt exactly from its tight
/// vertices. Returns `None` when any step does not go through.
fn refine_to_facet(behavior: &Behavior, raw: &BellFunctional) -> Result<Option<BellFunctional>> {
    let scenario = behavior.scenario();
    let rc = ReducedCoordinates::new(scenario);
    let d = rc.dim();
    if d == 0 || d > REFINE_MAX_DIM {
        return Ok(None);
    }
    let vertices = rc.vertices();
    let n = vertices.len();
    let supports = vertex_supports(scenario, DEFAULT_STRATEGY_CAP)?;
    let values: Vec<f64> = supports
        .iter()
        .map(|s| s.iter().map(|&i| raw.coeffs()[i]).sum())
        .collect();
    let scale = raw.coeffs().iter().fold(1.0f64, |m, c| m.max(c.abs()));
    let tight: Vec<bool> = values
        .iter()
        .map(|v| raw.local_bound() - v <= 1e-7 * scale)
        .collect();

    let mut r0 = vec![0.0; d];
    for v in &vertices {
        for (c, &x) in r0.iter_mut().zip(v) {
            *c += x as f64 / n as f64;
        }
    }
    let rp = rc.project(behavior);

    for use_tight in [true, false] {
        let slacks: Vec<usize> = (0..n).filter(|&j| !(use_tight && tight[j])).collect();
        let cols = d + slacks.len();
        let mut a = vec![vec![0.0; cols]; n];
        for (j, row) in a.iter_mut().enumerate() {
            for k in 0..d {
                row[k] = vertices[j][k] as f64 - r0[k];
            }
        }
        for (s, &j) in slacks.iter().enumerate() {
            a[j][d + s] = 1.0;
        }
        let mut objective: Vec<f64> = (0..d).map(|k| rp[k] - r0[k]).collect();
        objective.resize(cols, 0.0);
        let mut lp = LinearProgram::new(a, vec![1.0; n])?.with_objective(Sense::Maximize, objective)?;
        for k in 0..d {
            lp = lp.with_bound(k, Bound::FREE)?;
        }
        let outcome = match solve(&lp, &SolveOptions::default()) {
            Ok(o) if o.status == LpStatus::Optimal => o,
            Ok(_) => continue,
            Err(LpError::VerificationFailed(_)) => continue,
            Err(e) => return Err(e.into()),
        };
        let y = outcome.x.expect("optimal outcome carries a point");
        let on_facet: Vec<usize> = (0..n)
            .filter(|&j| {
                let t: f64 = (0..d).map(|k| y[k] * (vertices[j][k] as f64 - r0[k])).sum();
                t >= 1.0 - 1e-7
            })
            .collect();
        let Some(facet) = facet_through(&vertices, &on_facet, d) else {
            continue;
        };
        let f = lift_facet(&rc, &facet)?.with_provenance(Provenance::Certificate);
        return Ok(Some(f));
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Local,
    WeaklyNonlocal,
    Signalling,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Local => "Local",
            Verdict::WeaklyNonlocal => "WeaklyNonlocal",
            Verdict::Signalling => "Signalling",
        }
    }
}

/// A verdict together with the one witness that backs it.
#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    Local(LocalModel),
    WeaklyNonlocal(NonlocalWitness),
    Signalling(NoSignallingReport),
}

impl Classification {
    pub fn verdict(&self) -> Verdict {
        match self {
            Classification::Local(_) => Verdict::Local,
            Classification::WeaklyNonlocal(_) => Verdict::WeaklyNonlocal,
            Classification::Signalling(_) => Verdict::Signalling,
        }
    }

    /// What an experimenter at the terminals can conclude.
    pub fn summary(&self) -> String {
        match self {
            Classification::Local(m) => format!(
                "Local: the input/output statistics are reproduced by a mixture of {} local \
                 deterministic strategies, so nothing observed at the terminals rules out a \
                 local mechanism inside the box.",
                m.weights().len()
            ),
            Classification::WeaklyNonlocal(w) => format!(
                "WeaklyNonlocal: no-signalling holds, but the statistics violate a Bell \
                 inequality (value {:.6} > local bound {:.6}); no local mixture explains the \
                 box, yet it cannot be used to signal.",
                w.value,
                w.functional.local_bound()
            ),
            Classification::Signalling(r) => format!(
                "Signalling: a one-party marginal shifts by {:.6} when the remote input changes, \
                 so the box transmits information between its terminals.",
                r.max_defect
            ),
        }
    }
}

/// Signalling check first, then membership.
pub fn classify(behavior: &Behavior, tol: f64) -> Result<Classification> {
    classify_with(
        behavior,
        &MembershipOptions {
            tol,
            ..MembershipOptions::default()
        },
    )
}

pub fn classify_with(behavior: &Behavior, opts: &MembershipOptions) -> Result<Classification> {
    let report = no_signalling_defect(behavior);
    if !report.is_no_signalling(opts.tol) {
        return Ok(Classification::Signalling(report));
    }
    Ok(match membership_with(behavior, opts)? {
        Membership::Local(m) => Classification::Local(m),
        Membership::Nonlocal(w) => Classification::WeaklyNonlocal(w),
    })
}

/// A canonical inequality violated by a nonlocal behavior.
pub fn derive_critical_inequality(behavior: &Behavior, tol: f64) -> Result<NonlocalWitness> {
    match membership(behavior, tol)? {
        Membership::Local(_) => Err(Error::NoViolation),
        Membership::Nonlocal(w) => Ok(w),
    }
}

/// `S = E00 + E01 + E10 − E11` on the (2,2,2) scenario.
pub fn chsh_value(behavior: &Behavior) -> Result<f64> {
    if behavior.scenario() != &Scenario::chsh() {
        return Err(Error::Precondition(
            "CHSH value needs the (2 parties, 2 inputs, 2 outputs) scenario".into(),
        ));
    }
    let mut s = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            let sign = if x == 1 && y == 1 { -1.0 } else { 1.0 };
            for a in 0..2 {
                for b in 0..2 {
                    let parity = if a == b { 1.0 } else { -1.0 };
                    s += sign * parity * behavior.prob(&[x, y], &[a, b])?;
                }
            }
        }
    }
    Ok(s)
}

/// Upper bound of `⟨c, p⟩` over the local polytope from the LP
/// `max c·p` s.t. `p = V q`, `Σ q = 1`, `q ≥ 0`, `p` free.
pub fn lp_local_bound(scenario: &Scenario, coeffs: &[f64]) -> Result<f64> {
    if coeffs.len() != scenario.dim() {
        return Err(Error::WrongLength {
            expected: scenario.dim(),
            got: coeffs.len(),
        });
    }
    let supports = vertex_supports(scenario, MEMBERSHIP_STRATEGY_CAP)?;
    let dim = scenario.dim();
    let n = supports.len();
    let mut a = vec![vec![0.0; dim + n]; dim + 1];
    for (i, row) in a.iter_mut().take(dim).enumerate() {
        row[i] = 1.0;
    }
    for (j, support) in supports.iter().enumerate() {
        for &i in support {
            a[i][dim + j] = -1.0;
        }
        a[dim][dim + j] = 1.0;
    }
    let mut b = vec![0.0; dim];
    b.push(1.0);
    let mut objective = coeffs.to_vec();
    objective.resize(dim + n, 0.0);
    let mut lp = LinearProgram::new(a, b)?.with_objective(Sense::Maximize, objective)?;
    for i in 0..dim {
        lp = lp.with_bound(i, Bound::FREE)?;
    }
    let outcome = solve(&lp, &SolveOptions::default())?;
    match (outcome.status, outcome.objective) {
        (LpStatus::Optimal, Some(v)) => Ok(v),
        (status, _) => Err(LpError::VerificationFailed(format!(
            "local-bound LP ended {status:?}"
        ))
        .into()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult {
    pub parameter: &'static str,
    /// Largest parameter value certified local.
    pub critical: f64,
    /// `(local side, nonlocal side)`.
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub tolerance: f64,
}

/// Bisection on `[0, 1]` for a family that is local at 0 and nonlocal at 1.
/// Points that the oracle cannot certify local count as nonlocal, so the
/// reported value is always certified local.
fn bisect(
    parameter: &'static str,
    tol: f64,
    mut at: impl FnMut(f64) -> Result<Behavior>,
) -> Result<ThresholdResult> {
    if !(tol > 0.0) {
        return Err(Error::Precondition(format!("bisection tolerance {tol} must be positive")));
    }
    let opts = MembershipOptions {
        refine: false,
        ..MembershipOptions::default()
    };
    let mut is_local = |t: f64| -> Result<bool> {
        match membership_with(&at(t)?, &opts) {
            Ok(m) => Ok(m.is_local()),
            Err(Error::Undecided { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    };
    if !is_local(0.0)? {
        return Err(Error::Precondition(format!("{parameter} = 0 endpoint is not local")));
    }
    if is_local(1.0)? {
        return Err(Error::Precondition(format!(
            "{parameter} = 1 endpoint is local; no threshold exists"
        )));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if is_local(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(ThresholdResult {
        parameter,
        critical: lo,
        bracket: (lo, hi),
        iterations,
        tolerance: tol,
    })
}

/// Largest `v` with `v·P + (1−v)·N` local.
pub fn visibility_threshold(pure: &Behavior, noise: &Behavior, tol: f64) -> Result<ThresholdResult> {
    if pure.scenario() != noise.scenario() {
        return Err(Error::ScenarioMismatch);
    }
    bisect("visibility", tol, |v| mix(&[(v, pure), (1.0 - v, noise)]))
}

/// Largest detector efficiency `η` at which the lifted setup is local in the
/// scenario with an extra no-click outcome per input.
pub fn efficiency_threshold(setup: &BellSetup, tol: f64) -> Result<ThresholdResult> {
    let lifted = setup.lifted(1.0)?.scenario();
    if strategy_count(&lifted) > MEMBERSHIP_STRATEGY_CAP {
        return Err(Error::TooLarge {
            what: "lifted scenario strategies",
            count: strategy_count(&lifted),
            cap: MEMBERSHIP_STRATEGY_CAP,
            hint: "",
        });
    }
    bisect("efficiency", tol, |eta| behavior_from_setup(&setup.lifted(eta)?))
}
