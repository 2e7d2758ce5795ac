//! Contraction groups, their closures, and nubs.
//!
//! `con(g)` is the set of `x` with `gⁿ x g⁻ⁿ → 1`. Its closure decomposes
//! as `cl(con(g)) = con(g) · nub(g)` where the nub is the intersection of
//! the closures of the two contraction groups `con(g)` and `con(g⁻¹)` —
//! equivalently the intersection of all subgroups tidy for `g`. `g` is
//! anisotropic when both contraction groups are trivial.

use crate::cert::{Certificate, Grade, Verdict};
use crate::error::Result;
use crate::family::Family;
use rand::RngCore;

/// Whether `gⁿ x g⁻ⁿ → 1`, tested by entry into the neighbourhood basis
/// down to `basis(resolution)` with persistence over three further steps.
pub fn contracts<F: Family>(
    fam: &F,
    g: &F::Elt,
    x: &F::Elt,
    resolution: u32,
) -> Result<Verdict> {
    let target = fam.basis(resolution);
    let cap = 2 * resolution + 8;
    let mut y = x.clone();
    for n in 0..cap {
        if fam.member(&y, &target) {
            // persistence: stays inside once entered
            let mut z = y.clone();
            for _ in 0..3 {
                z = fam.conj(g, &z)?;
                if !fam.member(&z, &target) {
                    return Ok(Verdict::Unknown(resolution));
                }
            }
            return Ok(Verdict::True(Certificate::stabilized(
                resolution,
                format!("conjugates enter basis level {resolution} at power {n} and persist"),
            )));
        }
        y = fam.conj(g, &y)?;
    }
    Ok(Verdict::Unknown(resolution))
}

/// Report on the contraction group of one element.
#[derive(Debug, Clone)]
pub struct ContractionReport<D> {
    /// Descriptor of `cl(con(g))`.
    pub closure: D,
    /// Whether `con(g)` itself is closed.
    pub is_closed: Verdict,
    /// Descriptor of the nub, with its grade.
    pub nub: D,
    pub nub_grade: Grade,
    /// Whether both `con(g)` and `con(g⁻¹)` are trivial.
    pub anisotropic: Verdict,
}

pub fn contraction_report<F: Family>(
    fam: &F,
    g: &F::Elt,
    resolution: u32,
) -> Result<ContractionReport<F::Desc>> {
    let (closure, closed) = fam.closed_contraction(g)?;
    let (bwd_closure, _) = fam.closed_contraction(&fam.invert(g)?)?;
    let (nub, nub_grade) = fam.nub(g, resolution)?;
    let is_closed = if closed {
        Verdict::True(Certificate::exact(
            "contraction group closed by the structural form",
        ))
    } else {
        Verdict::False(
            "the nub is nontrivial and meets the contraction group only at the identity".into(),
        )
    };
    let trivial = fam.trivial_desc();
    let anisotropic = if closure == trivial && bwd_closure == trivial {
        Verdict::True(Certificate::exact(
            "both contraction groups have trivial closure",
        ))
    } else {
        Verdict::False("a contraction group is nontrivial".into())
    };
    Ok(ContractionReport { closure, is_closed, nub, nub_grade, anisotropic })
}

/// Sampled check of `cl(con(g)) = con(g) · nub(g)`: elements of the closure
/// must contract modulo the nub — the conjugate trajectory ends up inside
/// `nub · basis(resolution)` and persists — and contraction samples composed
/// with nub samples must land back in the closure.
pub fn closure_decomposition_check<F: Family>(
    fam: &F,
    g: &F::Elt,
    resolution: u32,
    rng: &mut dyn RngCore,
    samples: usize,
) -> Result<Verdict> {
    let (closure, _) = fam.closed_contraction(g)?;
    let (nub, _) = fam.nub(g, resolution)?;
    let cap = 2 * resolution + 10;
    let mut tested = 0usize;
    for _ in 0..samples {
        let x = match fam.sample_in(&closure, rng) {
            Some(x) => x,
            None => continue,
        };
        tested += 1;
        // trajectory must enter nub·U_k and persist three steps
        let mut y = x.clone();
        let mut entered = None;
        for n in 0..cap {
            if fam.product_member(&y, &nub, &fam.basis(resolution))? {
                let mut z = y.clone();
                let mut stays = true;
                for _ in 0..3 {
                    z = fam.conj(g, &z)?;
                    if !fam.product_member(&z, &nub, &fam.basis(resolution))? {
                        stays = false;
                        break;
                    }
                }
                if stays {
                    entered = Some(n);
                    break;
                }
            }
            y = fam.conj(g, &y)?;
        }
        match entered {
            Some(_) => {}
            None => {
                return Ok(Verdict::False(format!(
                    "a sampled element of the closure does not contract modulo the nub: {x:?}"
                )))
            }
        }
        // nub elements multiplied back stay inside the closure
        if let Some(m) = fam.sample_in(&nub, rng) {
            let xm = fam.compose(&x, &m)?;
            if !fam.member(&xm, &closure) {
                return Ok(Verdict::False(
                    "closure not stable under multiplication by the nub".into(),
                ));
            }
        }
    }
    if tested == 0 {
        return Ok(Verdict::Unknown(resolution));
    }
    Ok(Verdict::True(Certificate::stabilized(
        resolution,
        format!("{tested} sampled closure elements contract modulo the nub"),
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::padic::PadicModel;
    use crate::model::shift::{ShiftModel, Sided};
    use crate::model::tree::{TreeAut, TreeModel};
    use num::BigRational;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn padic_translations_contract_under_expansion() {
        let fam = PadicModel::new(2, 1);
        // conj by t multiplies vectors by 2, so translations contract
        let t = fam.scaling(vec![1]).unwrap();
        let x = fam.translation(vec![BigRational::from_integer(3.into())]).unwrap();
        assert!(contracts(&fam, &t, &x, 4).unwrap().is_true());
        let tinv = Family::invert(&fam, &t).unwrap();
        assert!(!contracts(&fam, &tinv, &x, 4).unwrap().is_true());
        let rep = contraction_report(&fam, &t, 4).unwrap();
        assert!(rep.is_closed.is_true());
        assert_eq!(rep.nub, Family::trivial_desc(&fam));
        assert!(rep.anisotropic.is_false());
    }

    #[test]
    fn two_sided_shift_contraction_not_closed() {
        let alphabet = Arc::new(crate::fingroup::FiniteGroup::cyclic(2));
        let fam = ShiftModel::new(alphabet, Sided::Two);
        let sigma = fam.shift_element(1);
        let rep = contraction_report(&fam, &sigma, 4).unwrap();
        assert!(rep.is_closed.is_false());
        assert_eq!(rep.closure, fam.vector_all());
        assert_eq!(rep.nub, fam.vector_all());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v = closure_decomposition_check(&fam, &sigma, 3, &mut rng, 12).unwrap();
        assert!(v.is_true(), "{v:?}");
    }

    #[test]
    fn one_sided_shift_contraction_closed() {
        let alphabet = Arc::new(crate::fingroup::FiniteGroup::cyclic(2));
        let fam = ShiftModel::new(alphabet, Sided::One);
        let sigma = fam.shift_element(1);
        let rep = contraction_report(&fam, &sigma, 4).unwrap();
        assert!(rep.is_closed.is_true());
        assert_eq!(rep.closure, fam.vector_all());
        assert_eq!(rep.nub, Family::trivial_desc(&fam));
        // finitely supported vectors contract under the shift
        let mut f = std::collections::BTreeMap::new();
        f.insert(0i64, 1u16);
        let x = fam.element(f, crate::model::shift::ZBij::identity()).unwrap();
        assert!(contracts(&fam, &sigma, &x, 4).unwrap().is_true());
    }

    #[test]
    fn tree_translation_nub_and_samples() {
        let fam = TreeModel::new(vec![2]).unwrap();
        let t = fam.single(0, TreeAut::translation(1)).unwrap();
        let rep = contraction_report(&fam, &t, 4).unwrap();
        assert!(rep.is_closed.is_false());
        assert_eq!(rep.nub_grade, Grade::Stabilized(4));
        // sampled contraction elements do contract
        for x in fam.sample_contraction_elements(&t, 3) {
            assert!(contracts(&fam, &t, &x, 3).unwrap().is_true());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = closure_decomposition_check(&fam, &t, 3, &mut rng, 10).unwrap();
        assert!(v.is_true(), "{v:?}");
    }

    #[test]
    fn elliptic_elements_are_anisotropic() {
        let fam = TreeModel::new(vec![2]).unwrap();
        let mut local = std::collections::BTreeMap::new();
        local.insert(crate::model::tree::Vertex::spine(0), vec![2u8, 1u8]);
        let e = fam.single(0, TreeAut::portrait(local)).unwrap();
        let rep = contraction_report(&fam, &e, 4).unwrap();
        assert!(rep.anisotropic.is_true());
        assert!(rep.is_closed.is_true());
    }
}
