//! Values recomputed by code that does not share the library's algorithms.

use std::f64::consts::PI;

use bellbox::analysis::{chsh_value, derive_critical_inequality, membership, Membership};
use bellbox::facets::{is_positivity, ReducedCoordinates};
use bellbox::functional::chsh_coefficients;
use bellbox::local::local_bound_of;
use bellbox::quantum::{behavior_from_setup, named_setup, singlet_with_angles};
use bellbox::symmetry::relabellings;
use bellbox::{
    enumerate_facets, local_bound, mix, named_behavior, BellFunctional, Behavior, FacetCaps,
    Scenario,
};

/// CHSH over explicit ±1 response tables `(A0, A1, B0, B1)`.
#[test]
fn chsh_local_bound_by_sign_tables() {
    let mut best = i64::MIN;
    for bits in 0..16u32 {
        let sign = |k: u32| if bits >> k & 1 == 0 { 1i64 } else { -1 };
        let (a0, a1, b0, b1) = (sign(3), sign(2), sign(1), sign(0));
        best = best.max(a0 * b0 + a0 * b1 + a1 * b0 - a1 * b1);
    }
    assert_eq!(best, 2);

    let ints: Vec<i64> = chsh_coefficients().iter().map(|&c| c as i64).collect();
    let (bound, _) = local_bound_of(&Scenario::chsh(), &ints, 1 << 20).unwrap();
    assert_eq!(bound, best);
}

#[test]
fn flat_index_matches_closed_form() {
    let s = Scenario::chsh();
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    assert_eq!(s.flat_index(&[x, y], &[a, b]).unwrap(), (2 * x + y) * 4 + 2 * a + b);
                }
            }
        }
    }
}

/// `E(a, b) = −cos(a − b)` for the singlet, summed by hand.
#[test]
fn tsirelson_value_from_closed_form() {
    let alice = [0.0, PI / 2.0];
    let bob = [PI / 4.0 + PI, -PI / 4.0 + PI];
    let e = |x: usize, y: usize| -(alice[x] - bob[y]).cos();
    let closed = e(0, 0) + e(0, 1) + e(1, 0) - e(1, 1);
    assert!((closed - 2.0 * 2f64.sqrt()).abs() < 1e-14);
    let b = behavior_from_setup(&named_setup("singlet_chsh", None).unwrap()).unwrap();
    assert!((chsh_value(&b).unwrap() - closed).abs() < 1e-12);
}

#[test]
fn pr_box_table_sum() {
    let pr = named_behavior("pr_box", None).unwrap();
    let mut s = 0.0;
    for x in 0..2usize {
        for y in 0..2usize {
            for a in 0..2usize {
                for b in 0..2usize {
                    let p = if a ^ b == x & y { 0.5 } else { 0.0 };
                    let e = if a == b { p } else { -p };
                    s += if x & y == 1 { -e } else { e };
                }
            }
        }
    }
    assert_eq!(s, 4.0);
    assert_eq!(chsh_value(&pr).unwrap(), 4.0);
}

fn solve_nullspace(rows: &[Vec<f64>]) -> Option<Vec<f64>> {
    // Gaussian elimination with partial pivoting; succeeds when the
    // nullspace is exactly one-dimensional.
    let mut m = rows.to_vec();
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())) else {
            break;
        };
        if m[p][c].abs() < 1e-9 {
            continue;
        }
        m.swap(r, p);
        let piv = m[r][c];
        for v in m[r].iter_mut() {
            *v /= piv;
        }
        for i in 0..m.len() {
            if i != r {
                let f = m[i][c];
                for k in 0..cols {
                    m[i][k] -= f * m[r][k];
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    if pivots.len() != cols - 1 {
        return None;
    }
    let free = (0..cols).find(|c| !pivots.contains(c))?;
    let mut h = vec![0.0; cols];
    h[free] = 1.0;
    for (i, &p) in pivots.iter().enumerate() {
        h[p] = -m[i][free];
    }
    Some(h)
}

fn subsets(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for i in start..n {
        if n - i < k - cur.len() {
            break;
        }
        cur.push(i);
        subsets(n, k, i + 1, cur, out);
        cur.pop();
    }
}

/// Every hyperplane through 8 affinely independent vertices that leaves all
/// 16 on one side, found in floating point.
fn brute_force_facets(scenario: &Scenario) -> Vec<BellFunctional> {
    let rc = ReducedCoordinates::new(scenario);
    let d = rc.dim();
    let vertices: Vec<Vec<f64>> = rc
        .vertices()
        .iter()
        .map(|v| v.iter().map(|&x| x as f64).collect())
        .collect();
    let mut all = Vec::new();
    subsets(vertices.len(), d, 0, &mut Vec::new(), &mut all);
    let mut out: Vec<BellFunctional> = Vec::new();
    for subset in all {
        let rows: Vec<Vec<f64>> = subset
            .iter()
            .map(|&j| std::iter::once(1.0).chain(vertices[j].iter().copied()).collect())
            .collect();
        let Some(h) = solve_nullspace(&rows) else { continue };
        let vals: Vec<f64> = vertices
            .iter()
            .map(|v| h[0] + v.iter().zip(&h[1..]).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let sign = if vals.iter().all(|&v| v >= -1e-9) {
            1.0
        } else if vals.iter().all(|&v| v <= 1e-9) {
            -1.0
        } else {
            continue;
        };
        // h0 + h·r ≥ 0  ⇔  (−h)·r ≤ h0.
        let normal: Vec<f64> = h[1..].iter().map(|v| -sign * v).collect();
        let f = BellFunctional::new(scenario.clone(), rc.lift(&normal))
            .unwrap()
            .canonical()
            .unwrap();
        if !out.iter().any(|g| g.same_inequality(&f)) {
            out.push(f);
        }
    }
    out
}

fn same_set(a: &[BellFunctional], b: &[BellFunctional]) -> bool {
    a.len() == b.len() && a.iter().all(|f| b.iter().any(|g| g.same_inequality(f)))
}

#[test]
fn facet_census_matches_brute_force() {
    let s = Scenario::chsh();
    let dd = enumerate_facets(&s, FacetCaps::default()).unwrap();
    let brute = brute_force_facets(&s);
    assert_eq!(dd.len(), 24);
    assert!(same_set(&dd, &brute), "double description and brute force disagree");
    let positivity = dd.iter().filter(|f| is_positivity(f).unwrap()).count();
    assert_eq!(positivity, 16);
    for f in dd.iter().filter(|f| !is_positivity(f).unwrap()) {
        assert_eq!(f.local_bound(), 2.0);
        assert!(f.coeffs().iter().all(|c| c.abs() == 1.0));
    }
}

#[test]
fn segment_scenario_matches_brute_force() {
    let s = Scenario::new(vec![vec![2], vec![3]]).unwrap();
    let dd = enumerate_facets(&s, FacetCaps::default()).unwrap();
    assert!(same_set(&dd, &brute_force_facets(&s)));
}

#[test]
fn facet_set_is_closed_under_relabelling() {
    let s = Scenario::chsh();
    let facets = enumerate_facets(&s, FacetCaps::default()).unwrap();
    for perm in relabellings(&s, 1 << 20).unwrap() {
        for f in &facets {
            let g = f.permuted(&perm).unwrap().canonical().unwrap();
            assert!(facets.iter().any(|h| h.same_inequality(&g)));
        }
    }
}

fn relabelled(b: &Behavior, perm: &[usize]) -> Behavior {
    let mut p = vec![0.0; b.probs().len()];
    for (i, &j) in perm.iter().enumerate() {
        p[j] = b.probs()[i];
    }
    Behavior::new(b.scenario().clone(), p, 1e-12).unwrap()
}

/// Certificates derived from many nonlocal behaviors all land in the census.
#[test]
fn certificates_canonicalize_into_facets() {
    let s = Scenario::chsh();
    let facets = enumerate_facets(&s, FacetCaps::default()).unwrap();
    let uniform = named_behavior("uniform", None).unwrap();
    let pr = named_behavior("pr_box", None).unwrap();
    let group = relabellings(&s, 1 << 20).unwrap();
    let mut nonlocal = Vec::new();
    for (k, perm) in group.iter().enumerate().step_by(5) {
        let v = 0.55 + 0.4 * (k as f64 / group.len() as f64);
        nonlocal.push(relabelled(&mix(&[(v, &pr), (1.0 - v, &uniform)]).unwrap(), perm));
    }
    for k in 0..40 {
        let t = k as f64 * 0.37;
        let setup = singlet_with_angles(&[t, t + 1.3 + 0.1 * (k % 5) as f64], &[t + 0.6, t - 0.9]);
        nonlocal.push(behavior_from_setup(&setup).unwrap());
    }
    let mut checked = 0;
    for b in &nonlocal {
        match membership(b, 1e-9).unwrap() {
            Membership::Local(_) => {}
            Membership::Nonlocal(w) => {
                assert!(w.refined);
                assert!(facets.iter().any(|f| f.same_inequality(&w.functional)));
                // The reported bound is the vertex-enumeration bound.
                let (bound, _) = local_bound(&s, w.functional.coeffs()).unwrap();
                assert_eq!(bound, w.functional.local_bound());
                checked += 1;
            }
        }
    }
    assert!(checked >= 40, "only {checked} nonlocal samples");
    let w = derive_critical_inequality(&pr, 1e-9).unwrap();
    assert!((w.violation - 2.0).abs() < 1e-9);
}
