//! A common interface over the structured group families.
//!
//! Every family offers exact element arithmetic, a neighbourhood basis of
//! compact open subgroups, and a closed-subgroup descriptor algebra with
//! conjugation, intersections, indices and membership. The engines for
//! tidiness, scales, contraction groups, flatness and residuals are written
//! once against this trait.

use crate::error::{Error, Result};
use crate::model::finite_level::{LevelAut, LevelDescriptor, LevelModel};
use crate::model::padic::{PadicDescriptor, PadicElement, PadicModel};
use crate::model::shift::{ShiftDescriptor, ShiftElement, ShiftModel, Tail, ZBij};
use crate::model::tree::{TreeAut, TreeComp, TreeDescriptor, TreeElement, TreeModel, Vertex};
use num::{BigInt, BigRational, BigUint, One, Zero};
use rand::Rng;
use rand::RngCore;
use std::collections::BTreeMap;
use std::fmt::Debug;

pub trait Family {
    type Elt: Clone + Eq + Debug;
    type Desc: Clone + PartialEq + Debug;

    fn identity(&self) -> Self::Elt;
    fn compose(&self, a: &Self::Elt, b: &Self::Elt) -> Result<Self::Elt>;
    fn invert(&self, a: &Self::Elt) -> Result<Self::Elt>;
    fn conj(&self, g: &Self::Elt, x: &Self::Elt) -> Result<Self::Elt> {
        let gx = self.compose(g, x)?;
        self.compose(&gx, &self.invert(g)?)
    }
    fn is_identity(&self, a: &Self::Elt) -> bool {
        *a == self.identity()
    }

    fn whole(&self) -> Self::Desc;
    fn trivial_desc(&self) -> Self::Desc;
    /// Descending neighbourhood basis of compact open subgroups.
    fn basis(&self, k: u32) -> Self::Desc;
    fn is_open(&self, d: &Self::Desc) -> bool;
    fn is_compact(&self, d: &Self::Desc) -> bool;

    fn conj_desc(&self, g: &Self::Elt, d: &Self::Desc) -> Result<Self::Desc>;
    fn intersect(&self, a: &Self::Desc, b: &Self::Desc) -> Self::Desc;
    /// Product set `A·B` when it is again a subgroup the family can denote.
    fn product(&self, a: &Self::Desc, b: &Self::Desc) -> Result<Self::Desc>;
    fn contains(&self, sup: &Self::Desc, sub: &Self::Desc) -> bool;
    fn index(&self, sup: &Self::Desc, sub: &Self::Desc) -> Result<BigUint>;
    fn member(&self, x: &Self::Elt, d: &Self::Desc) -> bool;
    fn coset_reps(&self, sup: &Self::Desc, sub: &Self::Desc, bound: u64)
        -> Result<Vec<Self::Elt>>;
    /// Canonical key of the left coset `x·D` for compact open `D`.
    fn coset_key(&self, x: &Self::Elt, d: &Self::Desc) -> Result<String>;
    fn supports_coset_reps(&self) -> bool {
        true
    }
    fn describe(&self, d: &Self::Desc) -> String;

    /// Closed-form scale of the inner automorphism of `g`.
    fn closed_scale(&self, g: &Self::Elt) -> Result<BigUint>;
    /// Closure of the contraction group of `g`, and whether the contraction
    /// group itself is closed.
    fn closed_contraction(&self, g: &Self::Elt) -> Result<(Self::Desc, bool)>;
    /// Intersection of the open subgroups of `ambient` invariant under
    /// conjugation by the generators (`family = true`: invariant under the
    /// whole set at once; `false` not used for cyclic refinements here).
    fn min_invariant_open(
        &self,
        ambient: &Self::Desc,
        gens: &[Self::Elt],
        family: bool,
    ) -> Result<Self::Desc>;

    /// Membership of `x` in the product set `A·B`, which need not be a
    /// subgroup the family can denote.
    fn product_member(&self, x: &Self::Elt, a: &Self::Desc, b: &Self::Desc) -> Result<bool> {
        Ok(self.member(x, &self.product(a, b)?))
    }

    /// The nub of `g`: the intersection of the closures of the contraction
    /// groups of `g` and `g⁻¹` — equivalently the intersection of all tidy
    /// subgroups. The returned grade records whether the descriptor is exact
    /// or a truncation at the stated resolution.
    fn nub(&self, g: &Self::Elt, _resolution: u32) -> Result<(Self::Desc, crate::cert::Grade)> {
        let (fwd, _) = self.closed_contraction(g)?;
        let (bwd, _) = self.closed_contraction(&self.invert(g)?)?;
        Ok((self.intersect(&fwd, &bwd), crate::cert::Grade::Exact))
    }

    /// Whether the nub of `g` is contained in `d`.
    fn nub_subset(&self, g: &Self::Elt, d: &Self::Desc) -> Result<bool> {
        let (nub, grade) = self.nub(g, 0)?;
        if grade != crate::cert::Grade::Exact {
            return Err(Error::Unsupported("nub containment needs an exact nub".into()));
        }
        Ok(self.contains(d, &nub))
    }

    /// Logarithmic displacement data of an element: one integer per
    /// translation axis of the family (coordinate drift, shift amount, or
    /// per-component translation length). Additive under composition for
    /// commuting elements; the integer lattice spanned by generator vectors
    /// computes flat ranks.
    fn drift_vector(&self, g: &Self::Elt) -> Result<Vec<i64>>;

    /// `U₀ = ∩_{h∈⟨gens⟩} h U h⁻¹`, by a closed form or by stabilising
    /// partial intersections; the grade records which.
    fn u_zero(
        &self,
        gens: &[Self::Elt],
        u: &Self::Desc,
        resolution: u32,
    ) -> Result<(Self::Desc, crate::cert::Grade)> {
        // generic fixpoint iteration; families with genuinely divergent
        // conjugate chains override with their closed forms
        let mut cur = u.clone();
        for _ in 0..=resolution + 4 {
            let mut next = cur.clone();
            for g in gens {
                next = self.intersect(&next, &self.conj_desc(g, &cur)?);
                next = self.intersect(&next, &self.conj_desc(&self.invert(g)?, &cur)?);
            }
            if next == cur {
                return Ok((cur, crate::cert::Grade::Exact));
            }
            cur = next;
        }
        Err(Error::Unsupported(
            "conjugate intersection did not stabilise".into(),
        ))
    }

    /// Pseudorandom element for property checks and sampled memberships.
    fn sample(&self, rng: &mut dyn RngCore) -> Self::Elt;
    /// Pseudorandom element of the subgroup `d`, if the family can sample it.
    fn sample_in(&self, d: &Self::Desc, rng: &mut dyn RngCore) -> Option<Self::Elt>;
}

impl Family for PadicModel {
    type Elt = PadicElement;
    type Desc = PadicDescriptor;

    fn identity(&self) -> PadicElement {
        PadicModel::identity(self)
    }
    fn compose(&self, a: &PadicElement, b: &PadicElement) -> Result<PadicElement> {
        Ok(PadicModel::compose(self, a, b))
    }
    fn invert(&self, a: &PadicElement) -> Result<PadicElement> {
        Ok(PadicModel::invert(self, a))
    }
    fn whole(&self) -> PadicDescriptor {
        PadicModel::whole(self)
    }
    fn trivial_desc(&self) -> PadicDescriptor {
        PadicModel::trivial(self)
    }
    fn basis(&self, k: u32) -> PadicDescriptor {
        PadicModel::basis(self, k)
    }
    fn is_open(&self, d: &PadicDescriptor) -> bool {
        PadicModel::is_open(self, d)
    }
    fn is_compact(&self, d: &PadicDescriptor) -> bool {
        PadicModel::is_compact(self, d)
    }
    fn conj_desc(&self, g: &PadicElement, d: &PadicDescriptor) -> Result<PadicDescriptor> {
        Ok(PadicModel::conj_descriptor(self, g, d))
    }
    fn intersect(&self, a: &PadicDescriptor, b: &PadicDescriptor) -> PadicDescriptor {
        PadicModel::intersect(self, a, b)
    }
    fn product(&self, a: &PadicDescriptor, b: &PadicDescriptor) -> Result<PadicDescriptor> {
        Ok(PadicModel::product(self, a, b))
    }
    fn contains(&self, sup: &PadicDescriptor, sub: &PadicDescriptor) -> bool {
        PadicModel::contains(self, sup, sub)
    }
    fn index(&self, sup: &PadicDescriptor, sub: &PadicDescriptor) -> Result<BigUint> {
        PadicModel::index(self, sup, sub)
    }
    fn member(&self, x: &PadicElement, d: &PadicDescriptor) -> bool {
        PadicModel::member(self, x, d)
    }
    fn coset_reps(
        &self,
        sup: &PadicDescriptor,
        sub: &PadicDescriptor,
        bound: u64,
    ) -> Result<Vec<PadicElement>> {
        PadicModel::coset_reps(self, sup, sub, bound)
    }
    fn coset_key(&self, x: &PadicElement, d: &PadicDescriptor) -> Result<String> {
        PadicModel::coset_key(self, x, d)
    }
    fn describe(&self, d: &PadicDescriptor) -> String {
        PadicModel::describe(self, d)
    }
    fn closed_scale(&self, g: &PadicElement) -> Result<BigUint> {
        Ok(PadicModel::closed_scale(self, g))
    }
    fn closed_contraction(&self, g: &PadicElement) -> Result<(PadicDescriptor, bool)> {
        // vector-part contraction groups are always closed here
        Ok((PadicModel::closed_contraction(self, g), true))
    }
    fn min_invariant_open(
        &self,
        ambient: &PadicDescriptor,
        gens: &[PadicElement],
        _family: bool,
    ) -> Result<PadicDescriptor> {
        let global = PadicModel::invariant_open_intersection(self, gens);
        if *ambient == Family::whole(self) {
            return Ok(global);
        }
        // relatively open invariant subgroups of a vector-part ambient are
        // its intersections with invariant open subgroups of the vector part
        Ok(PadicModel::intersect(self, ambient, &global))
    }
    fn drift_vector(&self, g: &PadicElement) -> Result<Vec<i64>> {
        if g.perm.iter().enumerate().any(|(i, &j)| i != j) {
            return Err(Error::Unsupported(
                "displacement vectors are only defined for diagonal elements".into(),
            ));
        }
        Ok(g.m.clone())
    }
    fn u_zero(
        &self,
        gens: &[PadicElement],
        u: &PadicDescriptor,
        _resolution: u32,
    ) -> Result<(PadicDescriptor, crate::cert::Grade)> {
        Ok((
            PadicModel::conjugate_core(self, gens, u),
            crate::cert::Grade::Exact,
        ))
    }
    fn sample(&self, rng: &mut dyn RngCore) -> PadicElement {
        let v = (0..self.n)
            .map(|_| {
                let num: i64 = rng.gen_range(-8..=8);
                let den_pow: u32 = rng.gen_range(0..=2);
                BigRational::new(BigInt::from(num), BigInt::from(self.p).pow(den_pow))
            })
            .collect();
        let m = (0..self.n).map(|_| rng.gen_range(-2..=2)).collect();
        let mut perm: Vec<usize> = (0..self.n).collect();
        for i in (1..perm.len()).rev() {
            let j = rng.gen_range(0..=i);
            perm.swap(i, j);
        }
        self.element(v, m, perm).expect("sampled element is valid")
    }
    fn sample_in(&self, d: &PadicDescriptor, rng: &mut dyn RngCore) -> Option<PadicElement> {
        use crate::model::padic::Exp;
        match d {
            PadicDescriptor::Whole => Some(Family::sample(self, rng)),
            PadicDescriptor::Vector(e) => {
                let v = e
                    .iter()
                    .map(|exp| {
                        let a = BigInt::from(rng.gen_range(-8i64..=8));
                        match exp {
                            Exp::PosInf => BigRational::zero(),
                            Exp::Fin(k) if *k >= 0 => {
                                BigRational::from_integer(a * BigInt::from(self.p).pow(*k as u32))
                            }
                            Exp::Fin(k) => {
                                BigRational::new(a, BigInt::from(self.p).pow((-k) as u32))
                            }
                            Exp::NegInf => {
                                BigRational::new(a, BigInt::from(self.p).pow(3))
                            }
                        }
                    })
                    .collect();
                self.translation(v).ok()
            }
        }
    }
}

impl Family for ShiftModel {
    type Elt = ShiftElement;
    type Desc = ShiftDescriptor;

    fn identity(&self) -> ShiftElement {
        ShiftModel::identity(self)
    }
    fn compose(&self, a: &ShiftElement, b: &ShiftElement) -> Result<ShiftElement> {
        Ok(ShiftModel::compose(self, a, b))
    }
    fn invert(&self, a: &ShiftElement) -> Result<ShiftElement> {
        Ok(ShiftModel::invert(self, a))
    }
    fn whole(&self) -> ShiftDescriptor {
        ShiftModel::whole(self)
    }
    fn trivial_desc(&self) -> ShiftDescriptor {
        ShiftModel::trivial(self)
    }
    fn basis(&self, k: u32) -> ShiftDescriptor {
        ShiftModel::basis(self, k)
    }
    fn is_open(&self, d: &ShiftDescriptor) -> bool {
        ShiftModel::is_open(self, d)
    }
    fn is_compact(&self, d: &ShiftDescriptor) -> bool {
        ShiftModel::is_compact(self, d)
    }
    fn conj_desc(&self, g: &ShiftElement, d: &ShiftDescriptor) -> Result<ShiftDescriptor> {
        Ok(ShiftModel::conj_descriptor(self, g, d))
    }
    fn intersect(&self, a: &ShiftDescriptor, b: &ShiftDescriptor) -> ShiftDescriptor {
        ShiftModel::intersect(self, a, b)
    }
    fn product(&self, a: &ShiftDescriptor, b: &ShiftDescriptor) -> Result<ShiftDescriptor> {
        ShiftModel::product(self, a, b)
    }
    fn contains(&self, sup: &ShiftDescriptor, sub: &ShiftDescriptor) -> bool {
        ShiftModel::contains(self, sup, sub)
    }
    fn index(&self, sup: &ShiftDescriptor, sub: &ShiftDescriptor) -> Result<BigUint> {
        ShiftModel::index(self, sup, sub)
    }
    fn member(&self, x: &ShiftElement, d: &ShiftDescriptor) -> bool {
        ShiftModel::member(self, x, d)
    }
    fn coset_reps(
        &self,
        sup: &ShiftDescriptor,
        sub: &ShiftDescriptor,
        bound: u64,
    ) -> Result<Vec<ShiftElement>> {
        ShiftModel::coset_reps(self, sup, sub, bound)
    }
    fn coset_key(&self, x: &ShiftElement, d: &ShiftDescriptor) -> Result<String> {
        ShiftModel::coset_key(self, x, d)
    }
    fn describe(&self, d: &ShiftDescriptor) -> String {
        ShiftModel::describe(self, d)
    }
    fn closed_scale(&self, g: &ShiftElement) -> Result<BigUint> {
        Ok(ShiftModel::closed_scale(self, g))
    }
    fn closed_contraction(&self, g: &ShiftElement) -> Result<(ShiftDescriptor, bool)> {
        Ok(ShiftModel::closed_contraction(self, g))
    }
    fn min_invariant_open(
        &self,
        ambient: &ShiftDescriptor,
        gens: &[ShiftElement],
        _family: bool,
    ) -> Result<ShiftDescriptor> {
        let global = ShiftModel::invariant_open_intersection(self, gens);
        if *ambient == Family::whole(self) {
            return Ok(global);
        }
        // an invariant ambient below the whole group is a product of columns;
        // its invariant relatively open subgroups are its intersections with
        // invariant open subgroups of the vector part
        Ok(ShiftModel::intersect(self, ambient, &global))
    }
    fn drift_vector(&self, g: &ShiftElement) -> Result<Vec<i64>> {
        Ok(vec![g.act.m])
    }
    fn u_zero(
        &self,
        gens: &[ShiftElement],
        u: &ShiftDescriptor,
        resolution: u32,
    ) -> Result<(ShiftDescriptor, crate::cert::Grade)> {
        // a few passes of conjugate intersection either reach a fixpoint or
        // keep translating a trivial region across the line, in which case
        // every coordinate is eventually annihilated
        let mut cur = u.clone();
        for _ in 0..=resolution + 4 {
            let mut next = cur.clone();
            for g in gens {
                next = ShiftModel::intersect(self, &next, &ShiftModel::conj_descriptor(self, g, &cur));
                let gi = ShiftModel::invert(self, g);
                next = ShiftModel::intersect(self, &next, &ShiftModel::conj_descriptor(self, &gi, &cur));
            }
            if next == cur {
                return Ok((cur, crate::cert::Grade::Exact));
            }
            cur = next;
        }
        Ok((ShiftModel::trivial(self), crate::cert::Grade::Exact))
    }
    fn sample(&self, rng: &mut dyn RngCore) -> ShiftElement {
        let order = self.alphabet.order() as u16;
        let mut f = BTreeMap::new();
        for i in -2i64..=2 {
            let v = rng.gen_range(0..order);
            if v != 0 {
                f.insert(i, v);
            }
        }
        let m: i64 = rng.gen_range(-2..=2);
        let act = if rng.gen_bool(0.3) && m == 0 {
            let a: i64 = rng.gen_range(-2..=1);
            let mut map = BTreeMap::new();
            map.insert(a, a + 1);
            map.insert(a + 1, a);
            ZBij::from_map(0, map).expect("transposition is a bijection")
        } else {
            ZBij::shift(m)
        };
        self.element(f, act).expect("sampled element is valid")
    }
    fn sample_in(&self, d: &ShiftDescriptor, rng: &mut dyn RngCore) -> Option<ShiftElement> {
        let order = self.alphabet.order() as u16;
        match d {
            ShiftDescriptor::Whole => Some(Family::sample(self, rng)),
            ShiftDescriptor::VectorAll => {
                let mut f = BTreeMap::new();
                for i in -2i64..=2 {
                    let v = rng.gen_range(0..order);
                    if v != 0 {
                        f.insert(i, v);
                    }
                }
                self.element(f, ZBij::identity()).ok()
            }
            ShiftDescriptor::Window { lo, cols, left, right } => {
                let mut f = BTreeMap::new();
                for (off, col) in cols.iter().enumerate() {
                    let v = col[rng.gen_range(0..col.len())];
                    if v != 0 {
                        f.insert(lo + off as i64, v);
                    }
                }
                let hi = lo + cols.len() as i64;
                for t in 1..=2i64 {
                    if *left == Tail::Full {
                        let v = rng.gen_range(0..order);
                        if v != 0 {
                            f.insert(lo - t, v);
                        }
                    }
                    if *right == Tail::Full {
                        let v = rng.gen_range(0..order);
                        if v != 0 {
                            f.insert(hi - 1 + t, v);
                        }
                    }
                }
                self.element(f, ZBij::identity()).ok()
            }
        }
    }
}

impl Family for LevelModel {
    type Elt = LevelAut;
    type Desc = LevelDescriptor;

    fn identity(&self) -> LevelAut {
        LevelAut::Inner(LevelModel::identity(self))
    }
    fn compose(&self, a: &LevelAut, b: &LevelAut) -> Result<LevelAut> {
        match (a, b) {
            (LevelAut::Inner(x), LevelAut::Inner(y)) => {
                Ok(LevelAut::Inner(LevelModel::compose(self, *x, *y)))
            }
            (LevelAut::Named(x), LevelAut::Named(y)) if x == y => {
                // named automorphisms are involutions
                Ok(LevelAut::Inner(LevelModel::identity(self)))
            }
            _ => Err(Error::Unsupported(
                "mixed words in outer automorphisms are not represented".into(),
            )),
        }
    }
    fn invert(&self, a: &LevelAut) -> Result<LevelAut> {
        self.invert_aut(a)
    }
    fn conj(&self, g: &LevelAut, x: &LevelAut) -> Result<LevelAut> {
        match x {
            LevelAut::Inner(a) => Ok(LevelAut::Inner(self.apply_aut(g, *a)?)),
            LevelAut::Named(_) => Err(Error::Unsupported(
                "conjugating an outer automorphism is not represented".into(),
            )),
        }
    }
    fn whole(&self) -> LevelDescriptor {
        LevelModel::whole(self)
    }
    fn trivial_desc(&self) -> LevelDescriptor {
        LevelModel::trivial(self)
    }
    fn basis(&self, k: u32) -> LevelDescriptor {
        LevelModel::basis(self, k)
    }
    fn is_open(&self, d: &LevelDescriptor) -> bool {
        LevelModel::is_open(self, d)
    }
    fn is_compact(&self, _d: &LevelDescriptor) -> bool {
        true
    }
    fn conj_desc(&self, g: &LevelAut, d: &LevelDescriptor) -> Result<LevelDescriptor> {
        self.apply_aut_descriptor(g, d)
    }
    fn intersect(&self, a: &LevelDescriptor, b: &LevelDescriptor) -> LevelDescriptor {
        LevelModel::intersect(self, a, b)
    }
    fn product(&self, a: &LevelDescriptor, b: &LevelDescriptor) -> Result<LevelDescriptor> {
        let p = self.group.product_set(a, b);
        if self.group.is_subgroup(&p) {
            Ok(p)
        } else {
            Err(Error::Unsupported("product set is not a subgroup".into()))
        }
    }
    fn contains(&self, sup: &LevelDescriptor, sub: &LevelDescriptor) -> bool {
        LevelModel::contains(self, sup, sub)
    }
    fn index(&self, sup: &LevelDescriptor, sub: &LevelDescriptor) -> Result<BigUint> {
        LevelModel::index(self, sup, sub)
    }
    fn member(&self, x: &LevelAut, d: &LevelDescriptor) -> bool {
        match x {
            LevelAut::Inner(a) => LevelModel::member(self, *a, d),
            LevelAut::Named(_) => false,
        }
    }
    fn coset_reps(
        &self,
        sup: &LevelDescriptor,
        sub: &LevelDescriptor,
        bound: u64,
    ) -> Result<Vec<LevelAut>> {
        Ok(LevelModel::coset_reps(self, sup, sub, bound)?
            .into_iter()
            .map(LevelAut::Inner)
            .collect())
    }
    fn coset_key(&self, x: &LevelAut, d: &LevelDescriptor) -> Result<String> {
        match x {
            LevelAut::Inner(a) => Ok(LevelModel::coset_key(self, *a, d)),
            LevelAut::Named(_) => Err(Error::Unsupported(
                "outer automorphisms have no coset key".into(),
            )),
        }
    }
    fn describe(&self, d: &LevelDescriptor) -> String {
        format!("subgroup of order {}", d.len())
    }
    fn closed_scale(&self, _g: &LevelAut) -> Result<BigUint> {
        // compact-by-finite truncations are uniscalar
        Ok(BigUint::one())
    }
    fn closed_contraction(&self, _g: &LevelAut) -> Result<(LevelDescriptor, bool)> {
        // finite-order automorphisms of a profinite truncation contract
        // nothing
        Ok((LevelModel::trivial(self), true))
    }
    fn min_invariant_open(
        &self,
        ambient: &LevelDescriptor,
        gens: &[LevelAut],
        family: bool,
    ) -> Result<LevelDescriptor> {
        let (_raw, stable) = self.invariant_open_intersection(ambient, gens, family)?;
        Ok(stable)
    }
    fn drift_vector(&self, _g: &LevelAut) -> Result<Vec<i64>> {
        // a compact-by-finite truncation has no translation axes
        Ok(Vec::new())
    }
    fn sample(&self, rng: &mut dyn RngCore) -> LevelAut {
        LevelAut::Inner(rng.gen_range(0..self.group.order()) as u16)
    }
    fn sample_in(&self, d: &LevelDescriptor, rng: &mut dyn RngCore) -> Option<LevelAut> {
        if d.is_empty() {
            return None;
        }
        Some(LevelAut::Inner(d[rng.gen_range(0..d.len())]))
    }
}

impl Family for TreeModel {
    type Elt = TreeElement;
    type Desc = TreeDescriptor;

    fn identity(&self) -> TreeElement {
        TreeModel::identity(self)
    }
    fn compose(&self, a: &TreeElement, b: &TreeElement) -> Result<TreeElement> {
        Ok(TreeModel::compose(self, a, b))
    }
    fn invert(&self, a: &TreeElement) -> Result<TreeElement> {
        Ok(TreeModel::invert(self, a))
    }
    fn whole(&self) -> TreeDescriptor {
        TreeModel::whole(self)
    }
    fn trivial_desc(&self) -> TreeDescriptor {
        TreeModel::trivial(self)
    }
    fn basis(&self, k: u32) -> TreeDescriptor {
        TreeModel::basis(self, k)
    }
    fn is_open(&self, d: &TreeDescriptor) -> bool {
        TreeModel::is_open(self, d)
    }
    fn is_compact(&self, d: &TreeDescriptor) -> bool {
        TreeModel::is_compact(self, d)
    }
    fn conj_desc(&self, g: &TreeElement, d: &TreeDescriptor) -> Result<TreeDescriptor> {
        Ok(TreeModel::conj_descriptor(self, g, d))
    }
    fn intersect(&self, a: &TreeDescriptor, b: &TreeDescriptor) -> TreeDescriptor {
        TreeModel::intersect(self, a, b)
    }
    fn product(&self, a: &TreeDescriptor, b: &TreeDescriptor) -> Result<TreeDescriptor> {
        TreeModel::product(self, a, b)
    }
    fn contains(&self, sup: &TreeDescriptor, sub: &TreeDescriptor) -> bool {
        TreeModel::contains(self, sup, sub)
    }
    fn index(&self, sup: &TreeDescriptor, sub: &TreeDescriptor) -> Result<BigUint> {
        TreeModel::index(self, sup, sub)
    }
    fn member(&self, x: &TreeElement, d: &TreeDescriptor) -> bool {
        TreeModel::member(self, x, d)
    }
    fn coset_reps(
        &self,
        _sup: &TreeDescriptor,
        _sub: &TreeDescriptor,
        _bound: u64,
    ) -> Result<Vec<TreeElement>> {
        // cosets of fixators in fixators rarely admit end-fixing finitary
        // representatives, so enumeration with elements is not offered
        Err(Error::Unsupported(
            "tree coset enumeration with representatives".into(),
        ))
    }
    fn supports_coset_reps(&self) -> bool {
        false
    }
    fn coset_key(&self, x: &TreeElement, d: &TreeDescriptor) -> Result<String> {
        TreeModel::coset_key(self, x, d)
    }
    fn describe(&self, d: &TreeDescriptor) -> String {
        TreeModel::describe(self, d)
    }
    fn closed_scale(&self, g: &TreeElement) -> Result<BigUint> {
        Ok(TreeModel::closed_scale(self, g))
    }
    fn closed_contraction(&self, g: &TreeElement) -> Result<(TreeDescriptor, bool)> {
        Ok(TreeModel::contraction_outer(self, g))
    }
    fn product_member(&self, x: &TreeElement, a: &TreeDescriptor, b: &TreeDescriptor) -> Result<bool> {
        let (cs_a, cs_b) = match (a, b) {
            (TreeDescriptor::Whole, _) | (_, TreeDescriptor::Whole) => return Ok(true),
            (TreeDescriptor::Comps(x), TreeDescriptor::Comps(y)) => (x, y),
        };
        if x.perm.iter().enumerate().any(|(i, &j)| i != j) {
            return Ok(false);
        }
        for ((ca, cb), g) in cs_a.iter().zip(cs_b).zip(&x.comps) {
            let ok = match (ca, cb) {
                (TreeComp::Full, _) | (_, TreeComp::Full) => true,
                (TreeComp::Even, c) | (c, TreeComp::Even) => {
                    // the other factor is inside the even subgroup
                    let _ = c;
                    g.is_even()
                }
                (TreeComp::Trivial, TreeComp::Trivial) => g.is_identity(),
                (TreeComp::Trivial, TreeComp::Fix(t)) => t.iter().all(|v| g.apply(v) == *v),
                (TreeComp::Fix(s), TreeComp::Trivial) => s.iter().all(|v| g.apply(v) == *v),
                (TreeComp::Fix(s), TreeComp::Fix(t)) => {
                    // g ∈ Fix(S)·Fix(T) iff some automorphism fixing S agrees
                    // with g on T: the finite partial map must be a partial
                    // isometry (trees are homogeneous for finite isometries)
                    t.iter().all(|v| {
                        let img = g.apply(v);
                        (!s.contains(v) || img == *v)
                            && s.iter().all(|w| w.dist(&img) == w.dist(v))
                    })
                }
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn nub(&self, g: &TreeElement, resolution: u32) -> Result<(TreeDescriptor, crate::cert::Grade)> {
        if self.cycles_with_translation(g).iter().all(|(_, m)| *m == 0) {
            return Ok((Family::trivial_desc(self), crate::cert::Grade::Exact));
        }
        let h = resolution as i64 + 2;
        let d = self.axis_fixator_truncated(g, h)?;
        Ok((d, crate::cert::Grade::Stabilized(resolution)))
    }

    fn nub_subset(&self, g: &TreeElement, d: &TreeDescriptor) -> Result<bool> {
        self.axis_fixator_fixes(g, d)
    }

    fn min_invariant_open(
        &self,
        ambient: &TreeDescriptor,
        gens: &[TreeElement],
        _family: bool,
    ) -> Result<TreeDescriptor> {
        let global = TreeModel::invariant_open_intersection(self, gens);
        if *ambient == Family::whole(self) {
            return Ok(global);
        }
        // within an invariant ambient the invariant relatively open
        // subgroups are its intersections with the global ones
        Ok(TreeModel::intersect(self, ambient, &global))
    }
    fn drift_vector(&self, g: &TreeElement) -> Result<Vec<i64>> {
        if g.perm.iter().enumerate().any(|(i, &j)| i != j) {
            return Err(Error::Unsupported(
                "displacement vectors are only defined for component-preserving elements".into(),
            ));
        }
        Ok(g.comps.iter().map(|c| c.m).collect())
    }
    fn u_zero(
        &self,
        gens: &[TreeElement],
        u: &TreeDescriptor,
        resolution: u32,
    ) -> Result<(TreeDescriptor, crate::cert::Grade)> {
        // hyperbolic generators grow the fixed set along their axes without
        // bound; truncate the intersection at the stated resolution
        let mut cur = u.clone();
        for _ in 0..=resolution + 2 {
            let mut next = cur.clone();
            for g in gens {
                next = TreeModel::intersect(self, &next, &TreeModel::conj_descriptor(self, g, &cur));
                let gi = TreeModel::invert(self, g);
                next = TreeModel::intersect(self, &next, &TreeModel::conj_descriptor(self, &gi, &cur));
            }
            if next == cur {
                return Ok((cur, crate::cert::Grade::Exact));
            }
            cur = next;
        }
        Ok((cur, crate::cert::Grade::Stabilized(resolution)))
    }
    fn sample(&self, rng: &mut dyn RngCore) -> TreeElement {
        let comps = self
            .qs
            .iter()
            .map(|&q| {
                let m: i64 = rng.gen_range(-1..=1);
                let mut g = TreeAut::translation(m);
                for _ in 0..rng.gen_range(0..3u32) {
                    let level: i64 = rng.gen_range(-1..=1);
                    let branch = if rng.gen_bool(0.5) { vec![] } else { vec![2u8] };
                    let mut p: Vec<u8> = (1..=q).collect();
                    let i = rng.gen_range(0..p.len());
                    let j = rng.gen_range(0..p.len());
                    p.swap(i, j);
                    let mut local = BTreeMap::new();
                    local.insert(Vertex::new(level, branch), p);
                    g = g.compose(&TreeAut::portrait(local));
                }
                g
            })
            .collect();
        // sampled elements keep the component permutation trivial
        TreeElement { perm: (0..self.k()).collect(), comps }
    }
    fn sample_in(&self, d: &TreeDescriptor, rng: &mut dyn RngCore) -> Option<TreeElement> {
        match d {
            TreeDescriptor::Whole => Some(Family::sample(self, rng)),
            TreeDescriptor::Comps(cs) => {
                let comps: Vec<TreeAut> = cs
                    .iter()
                    .zip(&self.qs)
                    .map(|(c, &q)| match c {
                        TreeComp::Trivial => TreeAut::identity(),
                        TreeComp::Full | TreeComp::Even => {
                            // even: elliptic portraits are type-preserving
                            let mut local = BTreeMap::new();
                            let level: i64 = rng.gen_range(-1..=1);
                            let mut p: Vec<u8> = (1..=q).collect();
                            p.swap(0, (q - 1) as usize);
                            local.insert(Vertex::spine(level), p);
                            TreeAut::portrait(local)
                        }
                        TreeComp::Fix(s) => {
                            // swap labels below a vertex hanging off the
                            // fixed set
                            let h = s.iter().map(|v| v.height()).max().unwrap_or(0);
                            let depth = h + 1 + rng.gen_range(0..2i64);
                            let mut p: Vec<u8> = (1..=q).collect();
                            p.swap(0, (q - 1) as usize);
                            let mut local = BTreeMap::new();
                            local.insert(Vertex::spine(depth), p);
                            TreeAut::portrait(local)
                        }
                    })
                    .collect();
                let e = TreeElement { perm: (0..self.k()).collect(), comps };
                if TreeModel::member(self, &e, d) {
                    Some(e)
                } else {
                    None
                }
            }
        }
    }
}
