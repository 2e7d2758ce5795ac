//! Residuals of group actions: the core generated by contraction groups,
//! the discrete residual and its transfinite iteration, proximality
//! searches against a compact subgroup, distality classification, and
//! reduced envelopes of compactly generated subgroups.

use num::BigUint;
use rand::RngCore;

use crate::cert::{Certificate, Verdict};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::flat::uniscalar_generators;
use crate::handle::Handle;

/// The closed subgroup generated by the contraction groups of the given
/// elements and their inverses: outer descriptor in closed form, generator
/// list sampled from the contraction closures.
pub fn tits_core<F: Family>(
    fam: &F,
    xs: &[F::Elt],
    rng: &mut dyn RngCore,
) -> Result<Handle<F>> {
    let mut outer = fam.trivial_desc();
    for x in xs {
        let (fwd, _) = fam.closed_contraction(x)?;
        let (bwd, _) = fam.closed_contraction(&fam.invert(x)?)?;
        outer = fam.product(&outer, &fwd)?;
        outer = fam.product(&outer, &bwd)?;
    }
    let mut gens = Vec::new();
    if outer != fam.trivial_desc() {
        for _ in 0..6 {
            if let Some(e) = fam.sample_in(&outer, rng) {
                if !fam.is_identity(&e) {
                    gens.push(e);
                }
            }
        }
    }
    Ok(Handle::exact_with_gens(gens, outer))
}

/// The discrete residual: the intersection of the open subgroups invariant
/// under the generators.
pub fn discrete_residual<F: Family>(fam: &F, gens: &[F::Elt]) -> Result<F::Desc> {
    fam.min_invariant_open(&fam.whole(), gens, true)
}

/// Verifies the closed-form identity for the discrete residual of a flat
/// group: it is the product of the core generated by the contraction
/// groups with the residual of the uniscalar part.
pub fn residual_identity<F: Family>(
    fam: &F,
    gens: &[F::Elt],
    rng: &mut dyn RngCore,
) -> Result<Verdict> {
    let res = discrete_residual(fam, gens)?;
    let tits = tits_core(fam, gens, rng)?;
    let unis = uniscalar_generators(fam, gens)?;
    let nub_u = if unis.is_empty() {
        fam.trivial_desc()
    } else {
        fam.min_invariant_open(&fam.whole(), &unis, true)?
    };
    let expected = fam.product(&tits.outer, &nub_u)?;
    if res == expected {
        Ok(Verdict::True(Certificate::exact(
            "residual equals the product of the contraction core with the uniscalar-part nub",
        )))
    } else {
        Ok(Verdict::False(format!(
            "residual {} differs from contraction core times uniscalar nub {}",
            fam.describe(&res),
            fam.describe(&expected)
        )))
    }
}

/// The descending chain of iterated residuals, starting from the whole
/// group and recomputing the residual inside each stage, until it
/// stabilises or the stage cap is hit.
pub fn residual_chain<F: Family>(
    fam: &F,
    gens: &[F::Elt],
    max_stages: u32,
) -> Result<(Vec<F::Desc>, Certificate)> {
    let mut chain = vec![fam.whole()];
    for _ in 0..max_stages {
        let cur = chain.last().unwrap().clone();
        let next = fam.min_invariant_open(&cur, gens, true)?;
        if next == cur {
            return Ok((
                chain,
                Certificate::exact("chain reached a stage equal to its own residual"),
            ));
        }
        let done = next == fam.trivial_desc();
        chain.push(next);
        if done {
            return Ok((chain, Certificate::exact("chain reached the trivial group")));
        }
    }
    Ok((chain, Certificate::bounded(max_stages, "stage cap reached")))
}

/// A proximality certificate: an element of the compact subgroup that
/// remains inside every stage of the shrinking conjugate intersections,
/// witnessed by explicit conjugating words.
#[derive(Debug, Clone)]
pub struct ProximalWitness<F: Family> {
    pub x: F::Elt,
    /// The stabilised normal core `∩_h h K h⁻¹`.
    pub core: F::Desc,
    /// For each stage `n`: the conjugating word and the stage descriptor
    /// `K(n)` it lands the witness in.
    pub trace: Vec<(u32, String, F::Desc)>,
}

/// Searches for an element of `K` that every stage `K(n)` of conjugate
/// intersections still reaches by conjugation, i.e. a proximality witness
/// for the action of the group on `K`.  Errors with [`Error::CoreIsOpen`]
/// when the normal core of `K` is open in `K`, in which case no such
/// element can exist.
pub fn proximal_search<F: Family>(
    fam: &F,
    hgens: &[F::Elt],
    k: &F::Desc,
    budget_n: u32,
    rng: &mut dyn RngCore,
) -> Result<ProximalWitness<F>> {
    let (core, _) = fam.u_zero(hgens, k, budget_n)?;
    if fam.index(k, &core).is_ok() {
        return Err(Error::CoreIsOpen);
    }
    // the stages K(n) = ∩_{|y| ≤ n} y⁻¹ K y
    let mut stages: Vec<F::Desc> = Vec::new();
    let mut cur = k.clone();
    for _ in 1..=budget_n {
        let mut next = fam.intersect(&cur, k);
        for g in hgens {
            next = fam.intersect(&next, &fam.conj_desc(g, &cur)?);
            next = fam.intersect(&next, &fam.conj_desc(&fam.invert(g)?, &cur)?);
        }
        cur = next;
        stages.push(cur.clone());
    }
    // conjugating words over the generators, breadth-first
    let mut words: Vec<(String, F::Elt)> = vec![("1".into(), fam.identity())];
    let mut frontier = words.clone();
    for _ in 0..budget_n {
        let mut next = Vec::new();
        for (w, e) in &frontier {
            for (i, g) in hgens.iter().enumerate() {
                for (suffix, step) in [(format!("g{i}"), g.clone()), (format!("g{i}^-1"), fam.invert(g)?)] {
                    let we = fam.compose(e, &step)?;
                    let name = if w == "1" { suffix } else { format!("{w}·{suffix}") };
                    next.push((name, we));
                }
            }
            if words.len() + next.len() > 4000 {
                break;
            }
        }
        words.extend(next.clone());
        frontier = next;
    }
    let k1 = &stages[0];
    let mut candidates: Vec<F::Elt> = Vec::new();
    for _ in 0..24 {
        if let Some(x) = fam.sample_in(k, rng) {
            if !fam.is_identity(&x) && fam.member(&x, k) && !fam.member(&x, k1) {
                candidates.push(x);
            }
        }
    }
    'cand: for x in candidates {
        let mut trace = Vec::new();
        for (n, kn) in stages.iter().enumerate() {
            let mut hit = None;
            for (w, y) in &words {
                // x ∈ y K(n) y⁻¹ ⟺ y⁻¹ x y ∈ K(n)
                let moved = fam.conj(&fam.invert(y)?, &x)?;
                if fam.member(&moved, kn) {
                    hit = Some((n as u32 + 1, w.clone(), kn.clone()));
                    break;
                }
            }
            match hit {
                Some(entry) => trace.push(entry),
                None => continue 'cand,
            }
        }
        return Ok(ProximalWitness { x, core, trace });
    }
    Err(Error::BudgetExhausted(budget_n as u64))
}

/// Classification of the action of a group on a compact subgroup.
#[derive(Debug)]
pub enum Distality<F: Family> {
    /// The group normalises a compact open subgroup of `K`; the residual
    /// data inside `K` was checked to collapse accordingly.
    Distal { invariant: F::Desc, residuals_agree: Verdict },
    /// A proximality witness was found.
    NonDistal(ProximalWitness<F>),
    /// Neither an invariant subgroup nor a witness within the budget.
    Unknown(u32),
}

/// Distality trichotomy for the action of `hgens` on the compact group `k`.
pub fn distality_report<F: Family>(
    fam: &F,
    hgens: &[F::Elt],
    k: &F::Desc,
    resolution: u32,
    rng: &mut dyn RngCore,
) -> Result<Distality<F>> {
    // (a) an invariant compact open subgroup of K
    for j in 0..=resolution {
        let cand = fam.intersect(k, &fam.basis(j));
        if !fam.is_compact(&cand) || cand == fam.trivial_desc() {
            continue;
        }
        let invariant = hgens.iter().try_fold(true, |acc, g| {
            Ok::<_, Error>(acc && fam.conj_desc(g, &cand)? == cand)
        })?;
        if invariant {
            // inside K the residual chain must stabilise at once
            let res_k = fam.min_invariant_open(k, hgens, true)?;
            let (chain, _) = residual_chain(fam, hgens, resolution.max(2))?;
            let res_g = chain.get(1).cloned().unwrap_or_else(|| fam.whole());
            let residuals_agree = if fam.intersect(&res_g, k) == res_k {
                Verdict::True(Certificate::exact(
                    "residual inside K matches the global residual cut to K",
                ))
            } else {
                Verdict::False("residuals inside and outside K disagree".into())
            };
            return Ok(Distality::Distal { invariant: cand, residuals_agree });
        }
    }
    // (b) a proximality witness
    match proximal_search(fam, hgens, k, resolution.max(4), rng) {
        Ok(w) => Ok(Distality::NonDistal(w)),
        Err(Error::CoreIsOpen) => Err(Error::CoreIsOpen),
        Err(Error::BudgetExhausted(_)) => Ok(Distality::Unknown(resolution)),
        Err(e) => Err(e),
    }
}

/// The reduced envelope of a compactly generated subgroup, with sampled
/// verification that the generated group equals the product of the
/// contraction core, the conjugate core of a common tidy subgroup, and the
/// subgroup itself.
#[derive(Debug)]
pub struct EnvelopeReport<F: Family> {
    pub envelope: Handle<F>,
    pub u_zero: F::Desc,
    /// Two-way sampled membership between the generated envelope and the
    /// triple product.
    pub equality: Verdict,
    /// Whether the closure of (contraction core)·K is cocompact in the
    /// envelope, with the observed coset constant.
    pub cocompact: Verdict,
    pub cocompact_constant: u64,
}

/// Test `x ∈ T·U₀·K` by sweeping words `k` over the subgroup generators and
/// checking `x·k⁻¹ ∈ T·U₀`.
fn triple_product_member<F: Family>(
    fam: &F,
    x: &F::Elt,
    t: &F::Desc,
    u0: &F::Desc,
    kwords: &[F::Elt],
) -> Result<bool> {
    for k in kwords {
        let moved = fam.compose(x, &fam.invert(k)?)?;
        if fam.product_member(&moved, t, u0)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Words over the generators and their inverses up to the given length.
fn word_ball<F: Family>(fam: &F, gens: &[F::Elt], len: u32, cap: usize) -> Result<Vec<F::Elt>> {
    let mut out = vec![fam.identity()];
    let mut frontier = out.clone();
    for _ in 0..len {
        let mut next = Vec::new();
        for e in &frontier {
            for g in gens {
                for w in [fam.compose(e, g)?, fam.compose(e, &fam.invert(g)?)?] {
                    if !out.contains(&w) && !next.contains(&w) {
                        next.push(w);
                    }
                }
            }
        }
        out.extend(next.clone());
        frontier = next;
        if out.len() > cap {
            out.truncate(cap);
            break;
        }
    }
    Ok(out)
}

pub fn reduced_envelope<F: Family>(
    fam: &F,
    kgens: &[F::Elt],
    resolution: u32,
    budget: u64,
    samples: u32,
    rng: &mut dyn RngCore,
) -> Result<EnvelopeReport<F>> {
    let tits = tits_core(fam, kgens, rng)?;
    let Some((tidy, _)) = crate::flat::find_common_tidy(fam, kgens, resolution)? else {
        return Err(Error::Unsupported(
            "no common tidy subgroup found for the envelope base".into(),
        ));
    };
    let (u0, _) = fam.u_zero(kgens, &tidy, resolution)?;
    let mut env_gens = tits.gens.clone();
    for _ in 0..4 {
        if let Some(e) = fam.sample_in(&u0, rng) {
            env_gens.push(e);
        }
    }
    env_gens.extend(kgens.iter().cloned());
    let outer = fam.product(&fam.product(&tits.outer, &u0)?, &fam.whole())?;
    let envelope = Handle::generated(env_gens.clone(), outer);

    let kwords = word_ball(fam, kgens, resolution.max(4), 600)?;
    // the membership resolution is kept shallow: coset keys at depth two
    // already separate the sampled products, and deep keys make the
    // enumeration balloon
    let u_res = fam.basis(resolution.min(2));
    let (reached, saturated) = crate::handle::generated_cosets(fam, &env_gens, &u_res, budget)?;
    let mut checked = 0u32;
    let mut forward_checked = 0u32;
    let mut failures = Vec::new();
    let mut unknowns = 0u32;
    for i in 0..samples {
        if i % 2 == 0 {
            // product → envelope: a sampled t·u·k must be reachable by
            // envelope generator words modulo the resolution subgroup
            let t = fam.sample_in(&tits.outer, rng);
            let u = fam.sample_in(&u0, rng);
            let k = &kwords[rng.next_u32() as usize % kwords.len()];
            let (Some(t), Some(u)) = (t, u) else { continue };
            let x = fam.compose(&fam.compose(&t, &u)?, k)?;
            if reached.contains_key(&fam.coset_key(&x, &u_res)?) {
                checked += 1;
                forward_checked += 1;
            } else if saturated {
                failures.push("product sample escapes the envelope".into());
            } else {
                unknowns += 1;
            }
        } else {
            // envelope → product: a random envelope word must decompose
            let mut w = fam.identity();
            for _ in 0..=(rng.next_u32() % 4) {
                let g = &env_gens[rng.next_u32() as usize % env_gens.len()];
                w = if rng.next_u32() % 2 == 0 {
                    fam.compose(&w, g)?
                } else {
                    fam.compose(&w, &fam.invert(g)?)?
                };
            }
            if triple_product_member(fam, &w, &tits.outer, &u0, &kwords)? {
                checked += 1;
            } else {
                failures.push("envelope word fails to decompose as t·u·k".into());
            }
        }
    }
    // a truncated enumeration that confirmed nothing in the forward
    // direction is a resource failure, not a negative result
    if !saturated && unknowns > 0 && forward_checked == 0 {
        return Err(Error::BudgetExhausted(budget));
    }
    let equality = if !failures.is_empty() {
        Verdict::False(failures.swap_remove(0))
    } else if checked == 0 {
        Verdict::Unknown(resolution)
    } else {
        let mut cert = Certificate::stabilized(
            resolution,
            format!("{checked} sampled memberships verified in both directions"),
        );
        if unknowns > 0 {
            cert.push(format!("{unknowns} samples inconclusive within budget"));
        }
        Verdict::True(cert)
    };

    // cocompactness of cl(T·K) in the envelope: count coset classes of
    // envelope words modulo T·K·U_j as j rises
    let ewords = word_ball(fam, &env_gens, 2, 40)?;
    let mut counts = Vec::new();
    for j in 1..=resolution {
        let uj = fam.basis(j);
        let mut reps: Vec<F::Elt> = Vec::new();
        'word: for w in &ewords {
            for r in &reps {
                let d = fam.compose(&fam.invert(r)?, w)?;
                if triple_product_member(fam, &d, &tits.outer, &uj, &kwords)? {
                    continue 'word;
                }
            }
            reps.push(w.clone());
        }
        counts.push(reps.len() as u64);
    }
    let constant = counts.last().copied().unwrap_or(1);
    let stable = counts.windows(2).all(|w| w[0] == w[1]);
    let cocompact = if stable {
        Verdict::True(Certificate::stabilized(
            resolution,
            format!("coset count {constant} constant across tested resolutions"),
        ))
    } else {
        Verdict::False(format!("coset counts {counts:?} grow with the resolution"))
    };

    Ok(EnvelopeReport {
        envelope,
        u_zero: u0,
        equality,
        cocompact,
        cocompact_constant: constant,
    })
}

/// Whether an element generates a contraction core that is cocompact in the
/// closure of the group it generates together with the element; anisotropic
/// elements are excluded outright.
pub fn p_set_membership<F: Family>(
    fam: &F,
    g: &F::Elt,
    resolution: u32,
    rng: &mut dyn RngCore,
) -> Result<Verdict> {
    let tits = tits_core(fam, &[g.clone()], rng)?;
    if tits.outer == fam.trivial_desc() {
        return Ok(Verdict::False(
            "both contraction groups are trivial: the element is anisotropic".into(),
        ));
    }
    // count classes of powers of g modulo (contraction core)·U_j: membership
    // in the set requires the count to stop growing with the power radius
    let uj = fam.basis(resolution.min(3));
    let mut counts = Vec::new();
    for r in 1..=resolution.max(4) {
        let mut reps: Vec<F::Elt> = Vec::new();
        let mut pow = fam.identity();
        let mut powers = vec![fam.identity()];
        for _ in 1..=r {
            pow = fam.compose(&pow, g)?;
            powers.push(pow.clone());
            powers.push(fam.invert(&pow)?);
        }
        'p: for w in &powers {
            for rep in &reps {
                let d = fam.compose(&fam.invert(rep)?, w)?;
                if fam.product_member(&d, &tits.outer, &uj)? {
                    continue 'p;
                }
            }
            reps.push(w.clone());
        }
        counts.push(reps.len() as u64);
    }
    let tail_stable = counts.len() >= 2 && counts[counts.len() - 1] == counts[counts.len() - 2];
    if tail_stable {
        Ok(Verdict::True(Certificate::stabilized(
            resolution,
            format!(
                "power classes modulo the contraction core stabilise at {}",
                counts.last().unwrap()
            ),
        )))
    } else {
        Ok(Verdict::False(format!(
            "power classes modulo the contraction core keep growing: {counts:?}"
        )))
    }
}

/// Scale of the image of an element in a quotient divides its scale; this
/// helper reports both values for a family that can drop coordinates.
pub fn scale_pair_divides(ambient: &BigUint, quotient: &BigUint) -> bool {
    num::Zero::is_zero(&(ambient % quotient))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cert::Grade;
    use crate::model::finite_level::{badnub_model, badnub_w, LevelAut};
    use crate::model::padic::{Exp, PadicDescriptor, PadicModel};
    use crate::model::shift::{ShiftModel, Sided};
    use crate::model::tree::{TreeAut, TreeModel};
    use crate::fingroup::{FiniteGroup, FiniteGroupRef};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn residual_chain_of_the_tower_has_three_stages() {
        let m = badnub_model(4).unwrap();
        let gens: Vec<LevelAut> = (0..3).map(|i| LevelAut::Named(format!("h{i}"))).collect();
        let (chain, cert) = residual_chain(&m, &gens, 5).unwrap();
        assert_eq!(chain.len(), 3);
        assert_eq!(chain[1], badnub_w(4));
        assert_eq!(chain[2], Family::trivial_desc(&m));
        assert_eq!(cert.grade, Grade::Exact);
    }

    #[test]
    fn residual_identity_on_flat_fixtures() {
        let mut r = rng();
        let m = PadicModel::new(2, 1);
        let t = m.scaling(vec![1]).unwrap();
        assert!(residual_identity(&m, &[t], &mut r).unwrap().is_true());

        let m2 = badnub_model(3).unwrap();
        let gens: Vec<LevelAut> = (0..2).map(|i| LevelAut::Named(format!("h{i}"))).collect();
        assert!(residual_identity(&m2, &gens, &mut r).unwrap().is_true());

        let tm = TreeModel::new(vec![2]).unwrap();
        let tau = tm.single(0, TreeAut::translation(1)).unwrap();
        assert!(residual_identity(&tm, &[tau], &mut r).unwrap().is_true());
    }

    #[test]
    fn proximal_witness_for_the_one_sided_shift() {
        let mut r = rng();
        let f = FiniteGroupRef::new(FiniteGroup::cyclic(2));
        let m = ShiftModel::new(f, Sided::One);
        let sigma = m.shift_element(1);
        let k = m.basis(0);
        let w = proximal_search(&m, &[sigma], &k, 8, &mut r).unwrap();
        assert_eq!(w.trace.len(), 8);
        // every stage is certified by an explicit conjugating word
        for (n, word, _) in &w.trace {
            assert!(*n >= 1);
            assert!(!word.is_empty());
        }
        assert!(Family::member(&m, &w.x, &k));
    }

    #[test]
    fn proximal_search_detects_an_open_core() {
        let mut r = rng();
        let m = PadicModel::new(2, 1);
        let x = m.translation(vec![num::BigRational::from_integer(1.into())]).unwrap();
        let k = PadicDescriptor::Vector(vec![Exp::Fin(0)]);
        // a translation normalises Z_2, so the core is all of K
        assert!(matches!(
            proximal_search(&m, &[x], &k, 6, &mut r),
            Err(Error::CoreIsOpen)
        ));
    }

    #[test]
    fn proximal_witness_for_the_scaling_action() {
        let mut r = rng();
        let m = PadicModel::new(2, 1);
        let t = m.scaling(vec![1]).unwrap();
        let k = PadicDescriptor::Vector(vec![Exp::Fin(0)]);
        let w = proximal_search(&m, &[t], &k, 6, &mut r).unwrap();
        // the witness is a unit: inside Z_2 but outside 2 Z_2
        assert!(Family::member(&m, &w.x, &k));
        assert!(!Family::member(&m, &w.x, &PadicDescriptor::Vector(vec![Exp::Fin(1)])));
        assert_eq!(w.core, PadicDescriptor::Vector(vec![Exp::PosInf]));
    }

    #[test]
    fn distality_trichotomy() {
        let mut r = rng();
        let m = PadicModel::new(2, 1);
        let t = m.scaling(vec![1]).unwrap();
        let k = PadicDescriptor::Vector(vec![Exp::Fin(0)]);
        match distality_report(&m, &[t], &k, 6, &mut r).unwrap() {
            Distality::NonDistal(_) => {}
            other => panic!("expected a proximality witness, got {other:?}"),
        }
        // the trivial action normalises K itself: the core is open
        let id = PadicModel::identity(&m);
        assert!(matches!(
            distality_report(&m, &[id], &k, 4, &mut r),
            Ok(Distality::Distal { .. }) | Err(Error::CoreIsOpen)
        ));
    }

    #[test]
    fn p_set_classification() {
        let mut r = rng();
        let m = PadicModel::new(2, 1);
        let t = m.scaling(vec![1]).unwrap();
        // Q_2 contains no positive power of t: the core is not cocompact
        assert!(p_set_membership(&m, &t, 4, &mut r).unwrap().is_false());
        // the identity is anisotropic
        let id = PadicModel::identity(&m);
        assert!(p_set_membership(&m, &id, 4, &mut r).unwrap().is_false());
        // a tree translation: the contraction core has index two in the
        // closure of what it generates with the element
        let tm = TreeModel::new(vec![2]).unwrap();
        let tau = tm.single(0, TreeAut::translation(1)).unwrap();
        let v = p_set_membership(&tm, &tau, 4, &mut r).unwrap();
        assert!(v.is_true(), "{v:?}");
    }

    #[test]
    fn envelope_of_independent_scalings() {
        let mut r = rng();
        let m = PadicModel::new(2, 2);
        let a = m.scaling(vec![1, 0]).unwrap();
        let b = m.scaling(vec![0, 1]).unwrap();
        let rep = reduced_envelope(&m, &[a, b], 3, 4_000, 40, &mut r).unwrap();
        assert!(rep.equality.is_true(), "{:?}", rep.equality);
        assert!(rep.cocompact.is_true(), "{:?}", rep.cocompact);
    }
}
