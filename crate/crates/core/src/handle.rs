//! Handles for closed subgroups that need not live in a family's
//! descriptor algebra.
//!
//! A handle names the closure of the group generated by finitely many
//! elements, together with a descriptor bounding it from outside. When the
//! bound is exact the descriptor *is* the subgroup. Handles are compared at
//! a resolution `k`: two handles are congruent at `k` when they generate
//! the same cosets modulo the basis subgroup `U_k`.

use crate::cert::{Certificate, Verdict};
use crate::error::{Error, Result};
use crate::family::Family;
use rand::RngCore;
use std::collections::{BTreeMap, VecDeque};

#[derive(Debug, Clone)]
pub struct Handle<F: Family> {
    pub gens: Vec<F::Elt>,
    /// Closed-subgroup descriptor containing the handle's group.
    pub outer: F::Desc,
    /// Whether `outer` equals the handle's group exactly.
    pub exact: bool,
}

impl<F: Family> Handle<F> {
    pub fn generated(gens: Vec<F::Elt>, outer: F::Desc) -> Self {
        Handle { gens, outer, exact: false }
    }

    pub fn exact(outer: F::Desc) -> Self {
        Handle { gens: Vec::new(), outer, exact: true }
    }

    pub fn exact_with_gens(gens: Vec<F::Elt>, outer: F::Desc) -> Self {
        Handle { gens, outer, exact: true }
    }
}

/// All cosets `w·U` for words `w` over the generators and their inverses,
/// keyed canonically; the flag reports whether the enumeration saturated
/// within the budget.
pub fn generated_cosets<F: Family>(
    fam: &F,
    gens: &[F::Elt],
    u: &F::Desc,
    budget: u64,
) -> Result<(BTreeMap<String, F::Elt>, bool)> {
    let mut steps: Vec<F::Elt> = Vec::new();
    for g in gens {
        steps.push(g.clone());
        steps.push(fam.invert(g)?);
    }
    let id = fam.identity();
    let mut seen = BTreeMap::new();
    seen.insert(fam.coset_key(&id, u)?, id.clone());
    let mut queue = VecDeque::from([id]);
    while let Some(w) = queue.pop_front() {
        for s in &steps {
            let next = fam.compose(s, &w)?;
            let key = fam.coset_key(&next, u)?;
            if !seen.contains_key(&key) {
                if seen.len() as u64 >= budget {
                    return Ok((seen, false));
                }
                seen.insert(key, next.clone());
                queue.push_back(next);
            }
        }
    }
    Ok((seen, true))
}

/// Is `x` in `⟨gens⟩·U`? Sound in both directions when the coset
/// enumeration saturates; otherwise a miss is only `Unknown`.
pub fn member_of_generated<F: Family>(
    fam: &F,
    gens: &[F::Elt],
    x: &F::Elt,
    u: &F::Desc,
    budget: u64,
) -> Result<Verdict> {
    let key = fam.coset_key(x, u)?;
    let (seen, saturated) = generated_cosets(fam, gens, u, budget)?;
    if seen.contains_key(&key) {
        return Ok(Verdict::True(Certificate::exact(format!(
            "coset reached by a generator word ({} cosets enumerated)",
            seen.len()
        ))));
    }
    if saturated {
        Ok(Verdict::False(format!(
            "coset enumeration saturated at {} cosets without reaching the element",
            seen.len()
        )))
    } else {
        Ok(Verdict::Unknown(budget.min(u32::MAX as u64) as u32))
    }
}

/// Representatives used to compare a handle against another: its generators
/// and, for exact handles, sampled elements of the descriptor.
fn representatives<F: Family>(fam: &F, h: &Handle<F>, rng: &mut dyn RngCore) -> Vec<F::Elt> {
    let mut out = h.gens.clone();
    if h.exact {
        for _ in 0..6 {
            if let Some(x) = fam.sample_in(&h.outer, rng) {
                out.push(x);
            }
        }
    }
    out
}

fn side_contained<F: Family>(
    fam: &F,
    reps: &[F::Elt],
    target: &Handle<F>,
    u: &F::Desc,
    budget: u64,
) -> Result<Verdict> {
    let mut weakest: Option<Verdict> = None;
    for x in reps {
        // the outer bound refutes immediately
        if !fam.product_member(x, &target.outer, u).unwrap_or(true) {
            return Ok(Verdict::False(format!(
                "an element escapes the outer bound modulo the basis subgroup: {x:?}"
            )));
        }
        let v = if target.exact {
            match fam.product_member(x, &target.outer, u) {
                Ok(true) => Verdict::True(Certificate::exact(
                    "membership in the exact descriptor modulo the basis subgroup",
                )),
                Ok(false) => {
                    Verdict::False(format!("element outside the exact descriptor: {x:?}"))
                }
                Err(_) => member_of_generated(fam, &target.gens, x, u, budget)?,
            }
        } else {
            member_of_generated(fam, &target.gens, x, u, budget)?
        };
        match v {
            Verdict::False(w) => return Ok(Verdict::False(w)),
            Verdict::Unknown(k) => weakest = Some(Verdict::Unknown(k)),
            Verdict::True(_) => {}
        }
    }
    Ok(weakest.unwrap_or_else(|| {
        Verdict::True(Certificate::exact("all representatives carried over"))
    }))
}

/// Congruence of two handles at resolution `k`: equality of the groups they
/// name modulo `U_k = basis(k)`.
pub fn congruent_at<F: Family>(
    fam: &F,
    a: &Handle<F>,
    b: &Handle<F>,
    resolution: u32,
    budget: u64,
    rng: &mut dyn RngCore,
) -> Result<Verdict> {
    if a.exact && b.exact {
        return Ok(if a.outer == b.outer {
            Verdict::True(Certificate::exact("exact descriptors coincide"))
        } else {
            // descriptors are canonical within each family
            Verdict::False(format!(
                "exact descriptors differ: {} vs {}",
                fam.describe(&a.outer),
                fam.describe(&b.outer)
            ))
        });
    }
    let u = fam.basis(resolution);
    let reps_a = representatives(fam, a, rng);
    let reps_b = representatives(fam, b, rng);
    if reps_a.is_empty() && reps_b.is_empty() {
        return Err(Error::Invalid("handles with no generators or samples".into()));
    }
    let fwd = side_contained(fam, &reps_a, b, &u, budget)?;
    if fwd.is_false() {
        return Ok(fwd);
    }
    let bwd = side_contained(fam, &reps_b, a, &u, budget)?;
    if bwd.is_false() {
        return Ok(bwd);
    }
    if fwd.is_true() && bwd.is_true() {
        Ok(Verdict::True(Certificate::stabilized(
            resolution,
            "mutual containment of representatives modulo the basis subgroup",
        )))
    } else {
        Ok(Verdict::Unknown(resolution))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::padic::PadicModel;
    use crate::model::tree::{TreeAut, TreeModel, Vertex};
    use num::BigRational;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn coset_enumeration_saturates_for_compact_generation() {
        let fam = PadicModel::new(2, 1);
        // translations by n/2 fill exactly two cosets of Z_2
        let x = fam.translation(vec![rat(1, 2)]).unwrap();
        let u = Family::basis(&fam, 0);
        let (seen, saturated) = generated_cosets(&fam, &[x.clone()], &u, 16).unwrap();
        assert!(saturated);
        assert_eq!(seen.len(), 2);
        // adding the halving scaling makes the group non-compact over U_0
        let t = fam.scaling(vec![-1]).unwrap();
        let (seen, saturated) = generated_cosets(&fam, &[x, t], &u, 16).unwrap();
        assert!(!saturated);
        assert_eq!(seen.len(), 16);
        // an integer translation saturates immediately
        let y = fam.translation(vec![rat(3, 1)]).unwrap();
        let (seen, saturated) = generated_cosets(&fam, &[y], &u, 16).unwrap();
        assert!(saturated);
        assert_eq!(seen.len(), 1);
    }

    #[test]
    fn membership_in_generated_group() {
        let fam = PadicModel::new(2, 1);
        let u = Family::basis(&fam, 3);
        let g = fam.translation(vec![rat(1, 4)]).unwrap();
        let x = fam.translation(vec![rat(3, 4)]).unwrap();
        assert!(member_of_generated(&fam, &[g.clone()], &x, &u, 1000)
            .unwrap()
            .is_true());
        let z = fam.translation(vec![rat(1, 8)]).unwrap();
        let v = member_of_generated(&fam, &[g], &z, &u, 1000).unwrap();
        assert!(v.is_false(), "{v:?}");
    }

    #[test]
    fn handle_congruence_exact_vs_generated() {
        let fam = PadicModel::new(2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // two generated handles of the same group are congruent
        let a = Handle::<PadicModel>::generated(
            vec![fam.translation(vec![rat(1, 2)]).unwrap()],
            Family::whole(&fam),
        );
        let b = Handle::<PadicModel>::generated(
            vec![
                fam.translation(vec![rat(1, 2)]).unwrap(),
                fam.translation(vec![rat(3, 2)]).unwrap(),
            ],
            Family::whole(&fam),
        );
        let v = congruent_at(&fam, &a, &b, 2, 4096, &mut rng).unwrap();
        assert!(v.is_true(), "{v:?}");
        // a genuinely bigger group is refuted
        let c = Handle::<PadicModel>::generated(
            vec![fam.translation(vec![rat(1, 8)]).unwrap()],
            Family::whole(&fam),
        );
        let v = congruent_at(&fam, &a, &c, 4, 4096, &mut rng).unwrap();
        assert!(v.is_false(), "{v:?}");
    }

    #[test]
    fn tree_handles_compare_by_cosets() {
        let fam = TreeModel::new(vec![2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut l1 = BTreeMap::new();
        l1.insert(Vertex::spine(0), vec![2u8, 1u8]);
        let a = fam.single(0, TreeAut::portrait(l1)).unwrap();
        let mut l2 = BTreeMap::new();
        l2.insert(Vertex::spine(1), vec![2u8, 1u8]);
        let b = fam.single(0, TreeAut::portrait(l2)).unwrap();
        let ha = Handle::<TreeModel>::generated(vec![a.clone()], Family::whole(&fam));
        let hab = Handle::<TreeModel>::generated(vec![a, b.clone()], Family::whole(&fam));
        // ⟨a⟩ does not reach b's coset at radius 2
        let v = congruent_at(&fam, &ha, &hab, 2, 10_000, &mut rng).unwrap();
        assert!(v.is_false(), "{v:?}");
        // the same generating set in different order is congruent
        let hba = Handle::<TreeModel>::generated(
            vec![b, hab.gens[0].clone()],
            Family::whole(&fam),
        );
        let v = congruent_at(&fam, &hab, &hba, 2, 10_000, &mut rng).unwrap();
        assert!(v.is_true(), "{v:?}");
    }
}
