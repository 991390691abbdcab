//! Relabellings of parties, inputs and outputs, as permutations of the flat
//! behavior layout.

use crate::error::{Error, Result};
use crate::scenario::Scenario;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

fn product(lists: &[Vec<Vec<usize>>]) -> Vec<Vec<Vec<usize>>> {
    lists.iter().fold(vec![Vec::new()], |acc, options| {
        acc.into_iter()
            .flat_map(|prefix| {
                options.iter().map(move |o| {
                    let mut p = prefix.clone();
                    p.push(o.clone());
                    p
                })
            })
            .collect()
    })
}

/// Every relabelling that maps the scenario onto itself, as a map
/// `old flat index → new flat index`. The identity comes first.
pub fn relabellings(scenario: &Scenario, cap: usize) -> Result<Vec<Vec<usize>>> {
    let n = scenario.parties();
    let mut size: u128 = (1..=n as u128).product();
    for k in 0..n {
        size = size.saturating_mul((1..=scenario.inputs(k) as u128).product());
        for x in 0..scenario.inputs(k) {
            size = size.saturating_mul((1..=scenario.outputs(k, x) as u128).product());
        }
    }
    if size > cap as u128 {
        return Err(Error::TooLarge {
            what: "relabelling group",
            count: size,
            cap: cap as u128,
            hint: "",
        });
    }

    let input_perms: Vec<Vec<Vec<usize>>> = (0..n).map(|k| permutations(scenario.inputs(k))).collect();
    let output_lists: Vec<Vec<Vec<usize>>> = (0..n)
        .flat_map(|k| (0..scenario.inputs(k)).map(move |x| (k, x)))
        .map(|(k, x)| permutations(scenario.outputs(k, x)))
        .collect();
    let output_choices = product(&output_lists);
    let input_choices = product(&input_perms);

    let mut out = Vec::new();
    for parties in permutations(n) {
        for inputs in &input_choices {
            // Relabelled scenario must coincide with the original.
            let consistent = (0..n).all(|k| {
                scenario.inputs(k) == scenario.inputs(parties[k])
                    && (0..scenario.inputs(k))
                        .all(|x| scenario.outputs(k, x) == scenario.outputs(parties[k], inputs[k][x]))
            });
            if !consistent {
                continue;
            }
            for outputs in &output_choices {
                let mut perm = vec![0; scenario.dim()];
                scenario.for_each_entry(|i, x, a| {
                    let mut nx = vec![0; n];
                    let mut na = vec![0; n];
                    let mut slot = 0;
                    for k in 0..n {
                        for xi in 0..scenario.inputs(k) {
                            if xi == x[k] {
                                nx[parties[k]] = inputs[k][xi];
                                na[parties[k]] = outputs[slot][a[k]];
                            }
                            slot += 1;
                        }
                    }
                    perm[i] = scenario.flat_index(&nx, &na).expect("relabelling stays in range");
                });
                out.push(perm);
            }
        }
    }
    Ok(out)
}
