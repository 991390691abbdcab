//! Facets of the local polytope.
//!
//! The local polytope is not full-dimensional in raw behavior coordinates,
//! so facets are computed in reduced coordinates: for every nonempty set of
//! parties `S`, inputs `x_S` and outputs `a_S` avoiding the last output of
//! each `(party, input)`, the marginal `P_S(a_S | x_S)`. Vertices have 0/1
//! reduced coordinates, so the double-description method below runs in exact
//! integer arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact::{self, dot_i64, int_row, normalize_gcd, primitive};
use crate::functional::{positivity_functional, BellFunctional, Provenance};
use crate::local::{strategy_count, DeterministicStrategy};
use crate::scenario::{Behavior, Scenario};

/// Size limits for [`enumerate_facets`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FacetCaps {
    pub max_vertices: usize,
    pub max_reduced_dim: usize,
}

impl Default for FacetCaps {
    fn default() -> Self {
        FacetCaps {
            max_vertices: 256,
            max_reduced_dim: 16,
        }
    }
}

/// One reduced coordinate `P_S(a_S | x_S)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedCoordinate {
    /// `(party, input, output)` for each party in `S`, in party order.
    pub terms: Vec<(usize, usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct ReducedCoordinates {
    scenario: Scenario,
    coords: Vec<ReducedCoordinate>,
    /// Flat behavior indices summed by each coordinate, with every party
    /// outside `S` at input 0.
    rows: Vec<Vec<usize>>,
}

impl ReducedCoordinates {
    pub fn new(scenario: &Scenario) -> Self {
        let n = scenario.parties();
        let mut coords = Vec::new();
        for mask in 1u64..(1u64 << n) {
            let members: Vec<usize> = (0..n).filter(|k| mask >> k & 1 == 1).collect();
            // Odometer over (input, output) of each member.
            let mut choice: Vec<(usize, usize)> = vec![(0, 0); members.len()];
            let valid = |choice: &[(usize, usize)]| {
                members
                    .iter()
                    .zip(choice)
                    .all(|(&k, &(x, a))| a + 1 < scenario.outputs(k, x))
            };
            loop {
                if valid(&choice) {
                    coords.push(ReducedCoordinate {
                        terms: members
                            .iter()
                            .zip(&choice)
                            .map(|(&k, &(x, a))| (k, x, a))
                            .collect(),
                    });
                }
                let mut pos = members.len();
                let mut done = true;
                while pos > 0 {
                    pos -= 1;
                    let k = members[pos];
                    let (x, a) = &mut choice[pos];
                    *a += 1;
                    if *a + 1 < scenario.outputs(k, *x).max(1) {
                        done = false;
                        break;
                    }
                    *a = 0;
                    *x += 1;
                    if *x < scenario.inputs(k) {
                        done = false;
                        break;
                    }
                    *x = 0;
                }
                if done {
                    break;
                }
            }
        }
        let rows = coords
            .iter()
            .map(|c| {
                let mut idx = Vec::new();
                scenario.for_each_entry(|i, x, a| {
                    let in_block = (0..n).all(|k| match c.terms.iter().find(|t| t.0 == k) {
                        Some(&(_, xk, ak)) => x[k] == xk && a[k] == ak,
                        None => x[k] == 0,
                    });
                    if in_block {
                        idx.push(i);
                    }
                });
                idx
            })
            .collect();
        ReducedCoordinates {
            scenario: scenario.clone(),
            coords,
            rows,
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coordinates(&self) -> &[ReducedCoordinate] {
        &self.coords
    }

    /// Reduced coordinates of a behavior.
    pub fn project(&self, behavior: &Behavior) -> Vec<f64> {
        self.rows
            .iter()
            .map(|idx| idx.iter().map(|&i| behavior.probs()[i]).sum())
            .collect()
    }

    /// 0/1 reduced coordinates of a deterministic strategy.
    pub fn vertex(&self, strategy: &DeterministicStrategy) -> Vec<i64> {
        self.coords
            .iter()
            .map(|c| {
                c.terms
                    .iter()
                    .all(|&(k, x, a)| strategy.assignment()[k][x] == a) as i64
            })
            .collect()
    }

    pub fn vertices(&self) -> Vec<Vec<i64>> {
        let count = strategy_count(&self.scenario) as usize;
        (0..count)
            .map(|i| {
                let s = DeterministicStrategy::from_index(&self.scenario, i).expect("index in range");
                self.vertex(&s)
            })
            .collect()
    }

    /// Full-coordinate coefficients `c` with `⟨c, P⟩ = ⟨reduced, project(P)⟩`.
    pub fn lift(&self, reduced: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; self.scenario.dim()];
        for (w, idx) in reduced.iter().zip(&self.rows) {
            for &i in idx {
                c[i] += w;
            }
        }
        c
    }
}

/// A facet `a·r ≤ b` in reduced coordinates, as a primitive integer vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedFacet {
    pub normal: Vec<BigInt>,
    pub bound: BigInt,
}

impl ReducedFacet {
    fn from_ray(h: &[BigInt]) -> Self {
        ReducedFacet {
            bound: h[0].clone(),
            normal: h[1..].iter().map(|v| -v).collect(),
        }
    }

    fn to_f64(&self) -> (Vec<f64>, f64) {
        (
            self.normal.iter().map(|v| v.to_f64().expect("finite")).collect(),
            self.bound.to_f64().expect("finite"),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct BitSet(Vec<u64>);

impl BitSet {
    fn new(bits: usize) -> Self {
        BitSet(vec![0; bits.div_ceil(64)])
    }

    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn and(&self, other: &BitSet) -> BitSet {
        BitSet(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn count(&self) -> u32 {
        self.0.iter().map(|w| w.count_ones()).sum()
    }

    fn is_subset(&self, other: &BitSet) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }
}

struct Ray {
    h: Vec<BigInt>,
    zeros: BitSet,
}

/// Facets of `conv(vertices)` for full-dimensional 0/1 point sets, by the
/// double-description method with insertion in the given order.
pub fn double_description(vertices: &[Vec<i64>], dim: usize) -> Result<Vec<ReducedFacet>> {
    if dim == 0 {
        return Ok(Vec::new());
    }
    let rows: Vec<Vec<i64>> = vertices
        .iter()
        .map(|v| std::iter::once(1).chain(v.iter().copied()).collect())
        .collect();

    // First dim + 1 affinely independent vertices in order.
    let mut initial: Vec<usize> = Vec::new();
    let mut echelon: Vec<Vec<BigRational>> = Vec::new();
    for (j, row) in rows.iter().enumerate() {
        let mut candidate = echelon.clone();
        candidate.push(int_row(row));
        if exact::rank(&candidate) > echelon.len() {
            echelon = candidate;
            initial.push(j);
            if initial.len() == dim + 1 {
                break;
            }
        }
    }
    if initial.len() < dim + 1 {
        return Err(Error::Precondition(format!(
            "vertices span dimension {} < {dim}",
            initial.len().saturating_sub(1)
        )));
    }

    // Initial rays: columns of the inverse of the initial rows.
    let m0: Vec<Vec<BigRational>> = initial.iter().map(|&j| int_row(&rows[j])).collect();
    let mut rays: Vec<Ray> = Vec::new();
    for i in 0..=dim {
        let e: Vec<BigRational> = (0..=dim)
            .map(|k| BigRational::from_integer(BigInt::from((k == i) as i64)))
            .collect();
        let col = exact::solve(m0.clone(), e).expect("initial rows are independent");
        let mut zeros = BitSet::new(rows.len());
        for (k, &j) in initial.iter().enumerate() {
            if k != i {
                zeros.insert(j);
            }
        }
        rays.push(Ray {
            h: primitive(&col),
            zeros,
        });
    }

    for (j, row) in rows.iter().enumerate() {
        if initial.contains(&j) {
            continue;
        }
        let values: Vec<BigInt> = rays.iter().map(|r| dot_i64(&r.h, row)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&r| values[r].is_positive()).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&r| values[r].is_negative()).collect();
        if neg.is_empty() {
            for (r, v) in rays.iter_mut().zip(&values) {
                if v.is_zero() {
                    r.zeros.insert(j);
                }
            }
            continue;
        }
        let mut created: Vec<Ray> = Vec::new();
        for &p in &pos {
            for &q in &neg {
                let common = rays[p].zeros.and(&rays[q].zeros);
                if (common.count() as usize) + 1 < dim {
                    continue;
                }
                let adjacent = rays
                    .iter()
                    .enumerate()
                    .all(|(r, ray)| r == p || r == q || !common.is_subset(&ray.zeros));
                if !adjacent {
                    continue;
                }
                let h: Vec<BigInt> = rays[q]
                    .h
                    .iter()
                    .zip(&rays[p].h)
                    .map(|(hq, hp)| &values[p] * hq - &values[q] * hp)
                    .collect();
                let mut zeros = common;
                zeros.insert(j);
                created.push(Ray {
                    h: normalize_gcd(h),
                    zeros,
                });
            }
        }
        let mut next: Vec<Ray> = Vec::with_capacity(rays.len() + created.len());
        for (r, v) in rays.into_iter().zip(values) {
            if v.is_negative() {
                continue;
            }
            let mut r = r;
            if v.is_zero() {
                r.zeros.insert(j);
            }
            next.push(r);
        }
        next.extend(created);
        rays = next;
    }
    Ok(rays.iter().map(|r| ReducedFacet::from_ray(&r.h)).collect())
}

/// The unique facet through the given vertices, oriented so that every
/// vertex satisfies it; `None` when they do not span a hyperplane.
pub fn facet_through(vertices: &[Vec<i64>], tight: &[usize], dim: usize) -> Option<ReducedFacet> {
    let rows: Vec<Vec<BigRational>> = tight
        .iter()
        .map(|&j| int_row(&std::iter::once(1).chain(vertices[j].iter().copied()).collect::<Vec<_>>()))
        .collect();
    let ns = exact::nullspace(&rows, dim + 1);
    if ns.len() != 1 {
        return None;
    }
    let mut h = primitive(&ns[0]);
    let values: Vec<BigInt> = vertices
        .iter()
        .map(|v| {
            let row: Vec<i64> = std::iter::once(1).chain(v.iter().copied()).collect();
            dot_i64(&h, &row)
        })
        .collect();
    let has_pos = values.iter().any(|v| v.is_positive());
    let has_neg = values.iter().any(|v| v.is_negative());
    match (has_pos, has_neg) {
        (true, true) | (false, false) => None,
        (false, true) => {
            h = h.into_iter().map(|v| -v).collect();
            Some(ReducedFacet::from_ray(&h))
        }
        (true, false) => Some(ReducedFacet::from_ray(&h)),
    }
}

/// Lifts a reduced facet to behavior coordinates and canonicalizes it.
pub fn lift_facet(rc: &ReducedCoordinates, facet: &ReducedFacet) -> Result<BellFunctional> {
    let (normal, bound) = facet.to_f64();
    let lifted = BellFunctional::new(rc.scenario.clone(), rc.lift(&normal))?;
    if (lifted.local_bound() - bound).abs() > 1e-9 * (1.0 + bound.abs()) {
        return Err(Error::BoundMismatch {
            stored: bound,
            computed: lifted.local_bound(),
        });
    }
    Ok(lifted.canonical()?.with_provenance(Provenance::Facet))
}

/// Complete facet list of the local polytope, canonicalized and deduplicated.
pub fn enumerate_facets(scenario: &Scenario, caps: FacetCaps) -> Result<Vec<BellFunctional>> {
    const HINT: &str = "; use certificate mode (derive-inequality) instead";
    let count = strategy_count(scenario);
    if count > caps.max_vertices as u128 {
        return Err(Error::TooLarge {
            what: "local polytope vertices",
            count,
            cap: caps.max_vertices as u128,
            hint: HINT,
        });
    }
    let rc = ReducedCoordinates::new(scenario);
    if rc.dim() > caps.max_reduced_dim {
        return Err(Error::TooLarge {
            what: "reduced dimension",
            count: rc.dim() as u128,
            cap: caps.max_reduced_dim as u128,
            hint: HINT,
        });
    }
    let vertices = rc.vertices();
    let reduced = double_description(&vertices, rc.dim())?;
    let mut out: Vec<BellFunctional> = Vec::new();
    for facet in &reduced {
        let f = lift_facet(&rc, facet)?;
        if !out.iter().any(|g| g.same_inequality(&f)) {
            out.push(f);
        }
    }
    Ok(out)
}

/// Canonical positivity inequalities `P(entry) ≥ 0`, one per distinct form.
pub fn positivity_facets(scenario: &Scenario) -> Result<Vec<BellFunctional>> {
    let mut out: Vec<BellFunctional> = Vec::new();
    for entry in 0..scenario.dim() {
        let f = positivity_functional(scenario, entry)?.canonical()?;
        if !out.iter().any(|g| g.same_inequality(&f)) {
            out.push(f);
        }
    }
    Ok(out)
}

/// True when `f` coincides with a canonical positivity inequality.
pub fn is_positivity(f: &BellFunctional) -> Result<bool> {
    Ok(positivity_facets(f.scenario())?.iter().any(|p| p.same_inequality(f)))
}
