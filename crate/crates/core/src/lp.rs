//! Dense two-phase primal simplex with Bland's rule.
//!
//! Problems are stated as `A x = b` with per-variable bounds (nonnegative by
//! default) and an optional linear objective. Every outcome carries its own
//! evidence: a primal point for feasible problems, dual multipliers for
//! optimal ones, a Farkas vector for infeasible ones and a recession ray for
//! unbounded ones. [`solve`] refuses to return an outcome whose evidence
//! fails [`verify_certificate`].

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::exact::{self, rational};

/// Residual and margin threshold applied by [`verify_certificate`].
pub const VERIFY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("LP dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("LP data contains a non-finite entry")]
    NonFinite,
    #[error("LP with {rows} rows and {cols} columns exceeds the cap {cap}")]
    TooLarge { rows: usize, cols: usize, cap: usize },
    #[error("simplex stalled after {iterations} iterations")]
    Stalled { iterations: usize },
    #[error("LP outcome failed self-verification: {0}")]
    VerificationFailed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub sense: Sense,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub lower: f64,
    pub upper: f64,
}

impl Bound {
    pub const NONNEGATIVE: Bound = Bound {
        lower: 0.0,
        upper: f64::INFINITY,
    };
    pub const FREE: Bound = Bound {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };

    pub fn boxed(lower: f64, upper: f64) -> Bound {
        Bound { lower, upper }
    }

    /// `sup { g·x : x in [lower, upper] }`, `None` when unbounded.
    fn sup(&self, g: f64) -> Option<f64> {
        if g > 0.0 {
            self.upper.is_finite().then_some(g * self.upper)
        } else if g < 0.0 {
            self.lower.is_finite().then_some(g * self.lower)
        } else {
            Some(0.0)
        }
    }
}

/// `A x = b` with bounds on `x` and an optional objective.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    objective: Option<Objective>,
    bounds: Vec<Bound>,
}

impl LinearProgram {
    /// Feasibility problem `A x = b, x ≥ 0` from dense rows.
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self, LpError> {
        let rows = a.len();
        if b.len() != rows {
            return Err(LpError::DimensionMismatch(format!(
                "{rows} rows but right-hand side of length {}",
                b.len()
            )));
        }
        let cols = a.first().map_or(0, Vec::len);
        if let Some(r) = a.iter().position(|row| row.len() != cols) {
            return Err(LpError::DimensionMismatch(format!(
                "row {r} has {} entries, expected {cols}",
                a[r].len()
            )));
        }
        let flat: Vec<f64> = a.into_iter().flatten().collect();
        Self::from_dense(rows, cols, flat, b)
    }

    /// Feasibility problem from a row-major `rows × cols` matrix.
    pub fn from_dense(rows: usize, cols: usize, a: Vec<f64>, b: Vec<f64>) -> Result<Self, LpError> {
        if a.len() != rows * cols || b.len() != rows {
            return Err(LpError::DimensionMismatch(format!(
                "matrix of {} entries for {rows}×{cols}, rhs of length {}",
                a.len(),
                b.len()
            )));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite);
        }
        Ok(LinearProgram {
            rows,
            cols,
            a,
            b,
            objective: None,
            bounds: vec![Bound::NONNEGATIVE; cols],
        })
    }

    pub fn with_objective(mut self, sense: Sense, coeffs: Vec<f64>) -> Result<Self, LpError> {
        if coeffs.len() != self.cols {
            return Err(LpError::DimensionMismatch(format!(
                "objective of length {} for {} columns",
                coeffs.len(),
                self.cols
            )));
        }
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite);
        }
        self.objective = Some(Objective { sense, coeffs });
        Ok(self)
    }

    pub fn with_bound(mut self, col: usize, bound: Bound) -> Result<Self, LpError> {
        if col >= self.cols {
            return Err(LpError::DimensionMismatch(format!("no column {col}")));
        }
        if bound.lower.is_nan()
            || bound.upper.is_nan()
            || bound.lower > bound.upper
            || bound.lower == f64::INFINITY
            || bound.upper == f64::NEG_INFINITY
        {
            return Err(LpError::DimensionMismatch(format!(
                "column {col}: empty bound [{}, {}]",
                bound.lower, bound.upper
            )));
        }
        self.bounds[col] = bound;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.cols + c]
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn objective(&self) -> Option<&Objective> {
        self.objective.as_ref()
    }

    pub fn bounds(&self) -> &[Bound] {
        &self.bounds
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.a[r * self.cols..(r + 1) * self.cols]
    }

    /// `Aᵀ y`.
    fn transpose_mul(&self, y: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            if yr != 0.0 {
                for (gj, a) in g.iter_mut().zip(self.row(r)) {
                    *gj += yr * a;
                }
            }
        }
        g
    }

    fn residual(&self, x: &[f64]) -> f64 {
        (0..self.rows)
            .map(|r| {
                let ax: f64 = self.row(r).iter().zip(x).map(|(a, v)| a * v).sum();
                (ax - self.b[r]).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Optimality and feasibility tolerance.
    pub tol: f64,
    /// Smallest pivot magnitude accepted in the ratio test.
    pub pivot_tol: f64,
    pub max_iters: usize,
    /// Cap on rows and on columns.
    pub max_size: usize,
    /// Re-derive the final basis in exact rational arithmetic.
    pub exact_recheck: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-9,
            pivot_tol: 1e-10,
            max_iters: 200_000,
            max_size: 4096,
            exact_recheck: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    /// Objective present and attained.
    Optimal,
    /// No objective; a feasible point was found.
    Feasible,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactCheck {
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Primal point (optimal, feasible, unbounded).
    pub x: Option<Vec<f64>>,
    /// Row multipliers: optimal duals, or a Farkas vector when infeasible.
    pub y: Option<Vec<f64>>,
    /// Improving recession direction when unbounded.
    pub ray: Option<Vec<f64>>,
    pub objective: Option<f64>,
    pub iterations: usize,
    pub exact: Option<ExactCheck>,
    /// Phase-one objective (sum of artificial values) at termination.
    pub infeasibility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub status: LpStatus,
    /// `‖A x − b‖∞` of the primal point.
    pub residual: Option<f64>,
    /// Largest bound violation of the primal point.
    pub bound_violation: Option<f64>,
    /// Largest sign violation of `Aᵀy` (or reduced costs) on unbounded directions.
    pub dual_violation: Option<f64>,
    /// `yᵀb − sup{yᵀA x : x within bounds}` for infeasible outcomes.
    pub farkas_margin: Option<f64>,
    /// Lagrangian bound minus attained objective (optimal outcomes).
    pub duality_gap: Option<f64>,
    /// Objective improvement along the ray, `‖A d‖∞` (unbounded outcomes).
    pub ray_gain: Option<f64>,
    pub ray_residual: Option<f64>,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Recomputes every verification inequality for `outcome` against `lp`.
pub fn verify_certificate(lp: &LinearProgram, outcome: &LpOutcome) -> VerificationReport {
    let mut report = VerificationReport {
        status: outcome.status,
        residual: None,
        bound_violation: None,
        dual_violation: None,
        farkas_margin: None,
        duality_gap: None,
        ray_gain: None,
        ray_residual: None,
        passed: true,
        failures: Vec::new(),
    };
    let fail = |report: &mut VerificationReport, msg: String| {
        report.passed = false;
        report.failures.push(msg);
    };

    let needs_point = matches!(
        outcome.status,
        LpStatus::Optimal | LpStatus::Feasible | LpStatus::Unbounded
    );
    if needs_point {
        match &outcome.x {
            Some(x) if x.len() == lp.cols => {
                let residual = lp.residual(x);
                let bound_violation = x
                    .iter()
                    .zip(&lp.bounds)
                    .map(|(v, bd)| (bd.lower - v).max(v - bd.upper).max(0.0))
                    .fold(0.0, f64::max);
                report.residual = Some(residual);
                report.bound_violation = Some(bound_violation);
                if residual > VERIFY_TOL {
                    fail(&mut report, format!("primal residual {residual:e}"));
                }
                if bound_violation > VERIFY_TOL {
                    fail(&mut report, format!("bound violation {bound_violation:e}"));
                }
            }
            _ => fail(&mut report, "missing primal point".into()),
        }
    }

    match outcome.status {
        LpStatus::Feasible => {}
        LpStatus::Optimal => match (&outcome.x, &outcome.y, &lp.objective) {
            (Some(x), Some(y), Some(obj)) if y.len() == lp.rows => {
                let primal: f64 = obj.coeffs.iter().zip(x).map(|(c, v)| c * v).sum();
                let aty = lp.transpose_mul(y);
                let flip = if obj.sense == Sense::Maximize { 1.0 } else { -1.0 };
                // Lagrangian bound in maximize form.
                let mut bound: f64 = flip * y.iter().zip(&lp.b).map(|(a, b)| a * b).sum::<f64>();
                let mut dual_violation = 0.0f64;
                for j in 0..lp.cols {
                    let g = flip * (obj.coeffs[j] - aty[j]);
                    match lp.bounds[j].sup(g) {
                        Some(s) => bound += s,
                        None => dual_violation = dual_violation.max(g.abs()),
                    }
                }
                let gap = bound - flip * primal;
                report.dual_violation = Some(dual_violation);
                report.duality_gap = Some(gap);
                if dual_violation > VERIFY_TOL {
                    fail(&mut report, format!("dual infeasibility {dual_violation:e}"));
                }
                if gap.abs() > VERIFY_TOL * (1.0 + primal.abs()) {
                    fail(&mut report, format!("duality gap {gap:e}"));
                }
                if let Some(v) = outcome.objective {
                    if (v - primal).abs() > VERIFY_TOL * (1.0 + primal.abs()) {
                        fail(&mut report, format!("reported objective {v} != {primal}"));
                    }
                }
            }
            _ => fail(&mut report, "optimal outcome without point, duals or objective".into()),
        },
        LpStatus::Infeasible => match &outcome.y {
            Some(y) if y.len() == lp.rows => {
                let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let aty = lp.transpose_mul(y);
                let mut margin: f64 = y.iter().zip(&lp.b).map(|(a, b)| a * b).sum();
                let mut dual_violation = 0.0f64;
                for (g, bd) in aty.iter().zip(&lp.bounds) {
                    match bd.sup(*g) {
                        Some(s) => margin -= s,
                        None => dual_violation = dual_violation.max(g.abs()),
                    }
                }
                let rel = if scale > 0.0 { dual_violation / scale } else { 0.0 };
                report.dual_violation = Some(rel);
                report.farkas_margin = Some(margin);
                if scale == 0.0 {
                    fail(&mut report, "zero Farkas vector".into());
                }
                if rel > 1e-9 {
                    fail(&mut report, format!("Farkas sign violation {rel:e}"));
                }
                if margin <= 0.0 {
                    fail(&mut report, format!("Farkas margin {margin:e} not positive"));
                }
            }
            _ => fail(&mut report, "infeasible outcome without Farkas vector".into()),
        },
        LpStatus::Unbounded => match (&outcome.ray, &lp.objective) {
            (Some(d), Some(obj)) if d.len() == lp.cols => {
                let norm = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let ad = (0..lp.rows)
                    .map(|r| lp.row(r).iter().zip(d).map(|(a, v)| a * v).sum::<f64>().abs())
                    .fold(0.0, f64::max);
                let mut gain: f64 = obj.coeffs.iter().zip(d).map(|(c, v)| c * v).sum();
                if obj.sense == Sense::Minimize {
                    gain = -gain;
                }
                let wrong_way = d
                    .iter()
                    .zip(&lp.bounds)
                    .map(|(v, bd)| {
                        let mut bad = 0.0f64;
                        if bd.lower.is_finite() {
                            bad = bad.max(-v);
                        }
                        if bd.upper.is_finite() {
                            bad = bad.max(*v);
                        }
                        bad
                    })
                    .fold(0.0, f64::max);
                report.ray_gain = Some(gain);
                report.ray_residual = Some(ad);
                if norm == 0.0 || ad > VERIFY_TOL * norm || wrong_way > VERIFY_TOL * norm {
                    fail(&mut report, format!("ray residual {ad:e}, bound violation {wrong_way:e}"));
                }
                if gain <= 0.0 {
                    fail(&mut report, format!("ray does not improve the objective ({gain:e})"));
                }
            }
            _ => fail(&mut report, "unbounded outcome without ray".into()),
        },
    }
    report
}

/// How an original variable is expressed through standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = lower + s`
    Shift { col: usize, lower: f64 },
    /// `x = upper − s`
    Mirror { col: usize, upper: f64 },
    /// `x = s⁺ − s⁻`
    Split { pos: usize, neg: usize },
}

/// `A' s = b'`, `s ≥ 0`, minimize `c'ᵀ s`, with rows sign-flipped so `b' ≥ 0`.
struct StandardForm {
    rows: usize,
    cols: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    cost: Vec<f64>,
    maps: Vec<VarMap>,
    /// `-1` on rows negated to make the right-hand side nonnegative.
    signs: Vec<f64>,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> StandardForm {
        let mut maps = Vec::with_capacity(lp.cols);
        let mut cols = 0usize;
        let mut upper_rows = Vec::new();
        for bd in &lp.bounds {
            if bd.lower.is_finite() {
                maps.push(VarMap::Shift {
                    col: cols,
                    lower: bd.lower,
                });
                if bd.upper.is_finite() {
                    upper_rows.push((cols, bd.upper - bd.lower));
                }
                cols += 1;
            } else if bd.upper.is_finite() {
                maps.push(VarMap::Mirror {
                    col: cols,
                    upper: bd.upper,
                });
                cols += 1;
            } else {
                maps.push(VarMap::Split {
                    pos: cols,
                    neg: cols + 1,
                });
                cols += 2;
            }
        }
        let slack_start = cols;
        cols += upper_rows.len();
        let rows = lp.rows + upper_rows.len();
        let mut a = vec![0.0; rows * cols];
        let mut b = lp.b.clone();
        for r in 0..lp.rows {
            for (j, map) in maps.iter().enumerate() {
                let v = lp.entry(r, j);
                if v == 0.0 {
                    continue;
                }
                match *map {
                    VarMap::Shift { col, lower } => {
                        a[r * cols + col] = v;
                        b[r] -= v * lower;
                    }
                    VarMap::Mirror { col, upper } => {
                        a[r * cols + col] = -v;
                        b[r] -= v * upper;
                    }
                    VarMap::Split { pos, neg } => {
                        a[r * cols + pos] = v;
                        a[r * cols + neg] = -v;
                    }
                }
            }
        }
        for (k, &(col, width)) in upper_rows.iter().enumerate() {
            let r = lp.rows + k;
            a[r * cols + col] = 1.0;
            a[r * cols + slack_start + k] = 1.0;
            b.push(width);
        }
        let mut cost = vec![0.0; cols];
        if let Some(obj) = &lp.objective {
            let sign = if obj.sense == Sense::Maximize { -1.0 } else { 1.0 };
            for (j, map) in maps.iter().enumerate() {
                let c = sign * obj.coeffs[j];
                match *map {
                    VarMap::Shift { col, .. } => cost[col] = c,
                    VarMap::Mirror { col, .. } => cost[col] = -c,
                    VarMap::Split { pos, neg } => {
                        cost[pos] = c;
                        cost[neg] = -c;
                    }
                }
            }
        }
        let mut signs = vec![1.0; rows];
        for r in 0..rows {
            if b[r] < 0.0 {
                signs[r] = -1.0;
                b[r] = -b[r];
                for v in &mut a[r * cols..(r + 1) * cols] {
                    *v = -*v;
                }
            }
        }
        StandardForm {
            rows,
            cols,
            a,
            b,
            cost,
            maps,
            signs,
        }
    }

    fn to_original(&self, s: &[f64]) -> Vec<f64> {
        self.maps
            .iter()
            .map(|map| match *map {
                VarMap::Shift { col, lower } => lower + s[col],
                VarMap::Mirror { col, upper } => upper - s[col],
                VarMap::Split { pos, neg } => s[pos] - s[neg],
            })
            .collect()
    }

    fn direction_to_original(&self, d: &[f64]) -> Vec<f64> {
        self.maps
            .iter()
            .map(|map| match *map {
                VarMap::Shift { col, .. } => d[col],
                VarMap::Mirror { col, .. } => -d[col],
                VarMap::Split { pos, neg } => d[pos] - d[neg],
            })
            .collect()
    }
}

/// Simplex tableau over `[A' | I]` with an explicit basis.
struct Tableau {
    rows: usize,
    /// Structural columns; artificials occupy `n..n + rows`.
    n: usize,
    width: usize,
    t: Vec<f64>,
    basis: Vec<usize>,
}

enum RunEnd {
    Optimal,
    Unbounded(usize),
}

impl Tableau {
    fn new(sf: &StandardForm) -> Tableau {
        let rows = sf.rows;
        let n = sf.cols;
        let width = n + rows + 1;
        let mut t = vec![0.0; rows * width];
        for r in 0..rows {
            t[r * width..r * width + n].copy_from_slice(&sf.a[r * n..(r + 1) * n]);
            t[r * width + n + r] = 1.0;
            t[r * width + width - 1] = sf.b[r];
        }
        Tableau {
            rows,
            n,
            width,
            t,
            basis: (n..n + rows).collect(),
        }
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = 1.0 / self.t[pr * w + pc];
        for v in &mut self.t[pr * w..(pr + 1) * w] {
            *v *= inv;
        }
        self.t[pr * w + pc] = 1.0;
        let pivot_row: Vec<f64> = self.t[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.t[r * w + pc];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[r * w..(r + 1) * w];
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
            row[pc] = 0.0;
            if row[w - 1] < 0.0 && row[w - 1] > -1e-12 {
                row[w - 1] = 0.0;
            }
        }
        self.basis[pr] = pc;
    }

    /// Runs Bland-rule simplex minimizing `cost` over columns `0..allowed`.
    fn run(
        &mut self,
        cost: &[f64],
        allowed: usize,
        opts: &SolveOptions,
        iterations: &mut usize,
    ) -> Result<RunEnd, LpError> {
        loop {
            let cb: Vec<f64> = self.basis.iter().map(|&j| cost[j]).collect();
            let mut entering = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut d = cost[j];
                for (r, c) in cb.iter().enumerate() {
                    if *c != 0.0 {
                        d -= c * self.at(r, j);
                    }
                }
                if d < -opts.tol {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else {
                return Ok(RunEnd::Optimal);
            };

            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let v = self.at(r, col);
                if v > opts.pivot_tol {
                    let ratio = self.rhs(r).max(0.0) / v;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((br, best)) => {
                            let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                            if ratio < best && !tie || tie && self.basis[r] < self.basis[br] {
                                Some((r, ratio))
                            } else {
                                Some((br, best))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leave else {
                return Ok(RunEnd::Unbounded(col));
            };

            *iterations += 1;
            if *iterations > opts.max_iters {
                return Err(LpError::Stalled {
                    iterations: *iterations - 1,
                });
            }
            self.pivot(row, col);
        }
    }

    fn primal(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for (r, &j) in self.basis.iter().enumerate() {
            if j < self.n {
                s[j] = self.rhs(r).max(0.0);
            }
        }
        s
    }

    fn artificial_sum(&self) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .filter(|(_, &j)| j >= self.n)
            .map(|(r, _)| self.rhs(r).max(0.0))
            .sum()
    }

    /// `c_Bᵀ B⁻¹`, read off the artificial columns.
    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        for (r, &j) in self.basis.iter().enumerate() {
            let c = cost[j];
            if c != 0.0 {
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi += c * self.at(r, self.n + i);
                }
            }
        }
        y
    }

    /// Pivots zero-level artificials out of the basis where possible.
    fn drive_out_artificials(&mut self, opts: &SolveOptions) {
        for r in 0..self.rows {
            if self.basis[r] < self.n {
                continue;
            }
            let col = (0..self.n)
                .filter(|j| !self.basis.contains(j))
                .max_by(|&a, &b| self.at(r, a).abs().total_cmp(&self.at(r, b).abs()));
            if let Some(c) = col {
                if self.at(r, c).abs() > opts.pivot_tol.max(1e-9) {
                    self.pivot(r, c);
                }
            }
        }
    }
}

/// Solves `lp`; every returned outcome has passed [`verify_certificate`].
pub fn solve(lp: &LinearProgram, opts: &SolveOptions) -> Result<LpOutcome, LpError> {
    if lp.rows > opts.max_size || lp.cols > opts.max_size {
        return Err(LpError::TooLarge {
            rows: lp.rows,
            cols: lp.cols,
            cap: opts.max_size,
        });
    }
    let sf = StandardForm::build(lp);
    let signs = &sf.signs;
    let mut tab = Tableau::new(&sf);
    let n = sf.cols;
    let mut iterations = 0usize;

    let mut phase_one_cost = vec![0.0; n + sf.rows];
    for c in &mut phase_one_cost[n..] {
        *c = 1.0;
    }
    match tab.run(&phase_one_cost, n, opts, &mut iterations)? {
        RunEnd::Optimal => {}
        RunEnd::Unbounded(_) => unreachable!("phase one is bounded below by zero"),
    }
    let infeasibility = tab.artificial_sum();

    let mut outcome = if infeasibility > opts.tol {
        let y_std = tab.duals(&phase_one_cost);
        let mut y: Vec<f64> = (0..lp.rows).map(|r| signs[r] * y_std[r]).collect();
        let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale > 0.0 {
            for v in &mut y {
                *v /= scale;
            }
        }
        LpOutcome {
            status: LpStatus::Infeasible,
            x: None,
            y: Some(y),
            ray: None,
            objective: None,
            iterations,
            exact: None,
            infeasibility,
        }
    } else {
        tab.drive_out_artificials(opts);
        match &lp.objective {
            None => {
                let x = clamp_to_bounds(sf.to_original(&tab.primal()), &lp.bounds);
                LpOutcome {
                    status: LpStatus::Feasible,
                    x: Some(x),
                    y: None,
                    ray: None,
                    objective: None,
                    iterations,
                    exact: None,
                    infeasibility,
                }
            }
            Some(obj) => {
                let mut cost = sf.cost.clone();
                cost.resize(n + sf.rows, 0.0);
                match tab.run(&cost, n, opts, &mut iterations)? {
                    RunEnd::Optimal => {
                        let x = clamp_to_bounds(sf.to_original(&tab.primal()), &lp.bounds);
                        let y_std = tab.duals(&cost);
                        let flip = if obj.sense == Sense::Maximize { -1.0 } else { 1.0 };
                        let y: Vec<f64> = (0..lp.rows).map(|r| flip * signs[r] * y_std[r]).collect();
                        let value = obj.coeffs.iter().zip(&x).map(|(c, v)| c * v).sum();
                        LpOutcome {
                            status: LpStatus::Optimal,
                            x: Some(x),
                            y: Some(y),
                            ray: None,
                            objective: Some(value),
                            iterations,
                            exact: None,
                            infeasibility,
                        }
                    }
                    RunEnd::Unbounded(col) => {
                        let x = clamp_to_bounds(sf.to_original(&tab.primal()), &lp.bounds);
                        let mut d = vec![0.0; n];
                        d[col] = 1.0;
                        for (r, &j) in tab.basis.iter().enumerate() {
                            if j < n {
                                d[j] = -tab.at(r, col);
                            }
                        }
                        LpOutcome {
                            status: LpStatus::Unbounded,
                            x: Some(x),
                            y: None,
                            ray: Some(sf.direction_to_original(&d)),
                            objective: None,
                            iterations,
                            exact: None,
                            infeasibility,
                        }
                    }
                }
            }
        }
    };

    let report = verify_certificate(lp, &outcome);
    if !report.passed {
        return Err(LpError::VerificationFailed(report.failures.join("; ")));
    }
    if opts.exact_recheck {
        outcome.exact = Some(exact_recheck(&sf, &tab.basis, outcome.status));
    }
    Ok(outcome)
}

fn clamp_to_bounds(mut x: Vec<f64>, bounds: &[Bound]) -> Vec<f64> {
    for (v, bd) in x.iter_mut().zip(bounds) {
        if *v < bd.lower && *v > bd.lower - 1e-9 {
            *v = bd.lower;
        }
        if *v > bd.upper && *v < bd.upper + 1e-9 {
            *v = bd.upper;
        }
    }
    x
}

/// Re-derives the final basis of a solve in exact rational arithmetic and
/// checks that its status holds without any tolerance.
fn exact_recheck(sf: &StandardForm, basis: &[usize], status: LpStatus) -> ExactCheck {
    let m = sf.rows;
    let n = sf.cols;
    let column = |j: usize| -> Vec<BigRational> {
        if j < n {
            (0..m).map(|r| rational(sf.a[r * n + j])).collect()
        } else {
            (0..m)
                .map(|r| {
                    if r == j - n {
                        BigRational::from_integer(BigInt::from(1))
                    } else {
                        BigRational::zero()
                    }
                })
                .collect()
        }
    };
    let cols: Vec<Vec<BigRational>> = basis.iter().map(|&j| column(j)).collect();
    let bmat: Vec<Vec<BigRational>> = (0..m).map(|r| cols.iter().map(|c| c[r].clone()).collect()).collect();
    let bt: Vec<Vec<BigRational>> = cols.clone();
    let b: Vec<BigRational> = sf.b.iter().map(|&v| rational(v)).collect();
    let Some(xb) = exact::solve(bmat, b.clone()) else {
        return ExactCheck {
            passed: false,
            detail: "final basis is singular in exact arithmetic".into(),
        };
    };
    let fail = |detail: String| ExactCheck { passed: false, detail };

    let dual_of = |cost: &dyn Fn(usize) -> BigRational| -> Option<Vec<BigRational>> {
        let cb: Vec<BigRational> = basis.iter().map(|&j| cost(j)).collect();
        exact::solve(bt.clone(), cb)
    };
    let dot_col = |y: &[BigRational], j: usize| -> BigRational {
        let mut s = BigRational::zero();
        for r in 0..m {
            let a = sf.a[r * n + j];
            if a != 0.0 {
                s += &y[r] * rational(a);
            }
        }
        s
    };

    match status {
        LpStatus::Feasible | LpStatus::Optimal => {
            for (r, (v, &j)) in xb.iter().zip(basis).enumerate() {
                if v.is_negative() {
                    return fail(format!("basic variable in row {r} is negative"));
                }
                if j >= n && !v.is_zero() {
                    return fail(format!("artificial in row {r} is nonzero: feasible only to tolerance"));
                }
            }
            if status == LpStatus::Optimal {
                let cost = |j: usize| if j < n { rational(sf.cost[j]) } else { BigRational::zero() };
                let Some(y) = dual_of(&cost) else {
                    return fail("singular basis transpose".into());
                };
                for j in 0..n {
                    if basis.contains(&j) {
                        continue;
                    }
                    let d = cost(j) - dot_col(&y, j);
                    if d.is_negative() {
                        return fail(format!("column {j} has negative reduced cost"));
                    }
                }
            }
            ExactCheck {
                passed: true,
                detail: "basis is exactly primal feasible".to_string()
                    + if status == LpStatus::Optimal { " and dual feasible" } else { "" },
            }
        }
        LpStatus::Infeasible => {
            let one = BigRational::from_integer(BigInt::from(1));
            let cost = |j: usize| if j < n { BigRational::zero() } else { one.clone() };
            let Some(y) = dual_of(&cost) else {
                return fail("singular basis transpose".into());
            };
            for j in 0..n {
                if dot_col(&y, j).is_positive() {
                    return fail(format!("Farkas sign condition fails on column {j}"));
                }
            }
            let yb: BigRational = y.iter().zip(&b).map(|(a, c)| a * c).sum();
            if !yb.is_positive() {
                return fail("Farkas margin is not positive".into());
            }
            ExactCheck {
                passed: true,
                detail: "Farkas certificate holds exactly".into(),
            }
        }
        LpStatus::Unbounded => ExactCheck {
            passed: true,
            detail: "not checked for unbounded outcomes".into(),
        },
    }
}
