//! Finite tower models: a finite group presented as the deepest level of a
//! tower of quotients, together with a declared descending chain of open
//! subgroups and a table of named automorphisms.
//!
//! Everything is exhaustively computable. Answers about the profinite group
//! the tower truncates are read off "modulo the deepest level": the raw
//! intersection of invariant open subgroups always contains the last chain
//! member, and the stable answer is the minimal invariant subgroup with the
//! same image at that depth.
//!
//! An optional saturation rule encodes invariance under a whole (possibly
//! uncountable) automorphism family that the finitely many named generators
//! cannot express: a subgroup counts as family-invariant only if it avoids
//! the trigger region or swallows the required subgroup.

use crate::error::{Error, Result};
use crate::fingroup::{FiniteGroup, FiniteGroupRef};
use num::BigUint;
use std::collections::BTreeMap;
use std::sync::OnceLock;

pub type LevelElement = u16;
/// Sorted element set forming a subgroup.
pub type LevelDescriptor = Vec<u16>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LevelAut {
    Inner(u16),
    Named(String),
}

/// Family-invariance rule: a subgroup `S` is invariant under the declared
/// full automorphism family only if `S ⊆ trigger_outside` or `S ⊇ require`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatRule {
    pub trigger_outside: Vec<u16>,
    pub require: Vec<u16>,
}

#[derive(Debug, Clone)]
pub struct LevelModel {
    pub group: FiniteGroupRef,
    /// `chain[0]` is the whole group; strictly descending open subgroups.
    pub chain: Vec<Vec<u16>>,
    pub auts: BTreeMap<String, Vec<u16>>,
    pub saturation: Option<SatRule>,
    subgroups: OnceLock<Vec<Vec<u16>>>,
}

impl LevelModel {
    pub fn new(
        group: FiniteGroupRef,
        chain: Vec<Vec<u16>>,
        auts: BTreeMap<String, Vec<u16>>,
        saturation: Option<SatRule>,
    ) -> Result<Self> {
        if chain.is_empty() || chain[0].len() != group.order() {
            return Err(Error::Invalid("chain must start at the whole group".into()));
        }
        for (i, sub) in chain.iter().enumerate() {
            if !group.is_subgroup(sub) {
                return Err(Error::Invalid(format!("chain[{i}] is not a subgroup")));
            }
            if i > 0 && !is_subset(sub, &chain[i - 1]) {
                return Err(Error::Invalid(format!("chain[{i}] not inside chain[{}]", i - 1)));
            }
        }
        for (name, table) in &auts {
            if !is_automorphism(&group, table) {
                return Err(Error::Invalid(format!("'{name}' is not an automorphism")));
            }
        }
        Ok(LevelModel { group, chain, auts, saturation, subgroups: OnceLock::new() })
    }

    pub fn depth(&self) -> usize {
        self.chain.len()
    }

    pub fn identity(&self) -> LevelElement {
        0
    }

    pub fn compose(&self, a: LevelElement, b: LevelElement) -> LevelElement {
        self.group.mul(a, b)
    }

    pub fn invert(&self, a: LevelElement) -> LevelElement {
        self.group.inv(a)
    }

    pub fn apply_aut(&self, aut: &LevelAut, x: LevelElement) -> Result<LevelElement> {
        match aut {
            LevelAut::Inner(g) => Ok(self.group.conj(*g, x)),
            LevelAut::Named(name) => {
                let table = self
                    .auts
                    .get(name)
                    .ok_or_else(|| Error::Invalid(format!("unknown automorphism '{name}'")))?;
                Ok(table[x as usize])
            }
        }
    }

    pub fn invert_aut(&self, aut: &LevelAut) -> Result<LevelAut> {
        match aut {
            LevelAut::Inner(g) => Ok(LevelAut::Inner(self.group.inv(*g))),
            LevelAut::Named(name) => {
                // invert the table and register it under a derived name
                let table = self
                    .auts
                    .get(name)
                    .ok_or_else(|| Error::Invalid(format!("unknown automorphism '{name}'")))?;
                let mut inv = vec![0u16; table.len()];
                for (i, &j) in table.iter().enumerate() {
                    inv[j as usize] = i as u16;
                }
                if inv == *table {
                    Ok(LevelAut::Named(name.clone()))
                } else {
                    Err(Error::Unsupported(format!(
                        "inverse of '{name}' is not registered; register it explicitly"
                    )))
                }
            }
        }
    }

    pub fn whole(&self) -> LevelDescriptor {
        self.chain[0].clone()
    }

    pub fn trivial(&self) -> LevelDescriptor {
        vec![0]
    }

    /// Basis clamps at the deepest declared level: the truncation never
    /// pretends the trivial subgroup is open.
    pub fn basis(&self, k: u32) -> LevelDescriptor {
        let i = (k as usize).min(self.chain.len() - 1);
        self.chain[i].clone()
    }

    fn deepest(&self) -> &Vec<u16> {
        self.chain.last().unwrap()
    }

    pub fn is_open(&self, d: &LevelDescriptor) -> bool {
        is_subset(self.deepest(), d)
    }

    pub fn conj_descriptor(&self, g: LevelElement, d: &LevelDescriptor) -> LevelDescriptor {
        self.group.conj_set(g, d)
    }

    pub fn apply_aut_descriptor(&self, aut: &LevelAut, d: &LevelDescriptor) -> Result<LevelDescriptor> {
        let mut out: Vec<u16> = d.iter().map(|&x| self.apply_aut(aut, x)).collect::<Result<_>>()?;
        out.sort_unstable();
        Ok(out)
    }

    pub fn intersect(&self, a: &LevelDescriptor, b: &LevelDescriptor) -> LevelDescriptor {
        FiniteGroup::intersect_sets(a, b)
    }

    pub fn contains(&self, sup: &LevelDescriptor, sub: &LevelDescriptor) -> bool {
        is_subset(sub, sup)
    }

    pub fn index(&self, sup: &LevelDescriptor, sub: &LevelDescriptor) -> Result<BigUint> {
        if !self.contains(sup, sub) {
            return Err(Error::NotNested("level descriptors not nested".into()));
        }
        Ok(BigUint::from((sup.len() / sub.len()) as u64))
    }

    pub fn member(&self, x: LevelElement, d: &LevelDescriptor) -> bool {
        d.binary_search(&x).is_ok()
    }

    pub fn coset_reps(
        &self,
        sup: &LevelDescriptor,
        sub: &LevelDescriptor,
        bound: u64,
    ) -> Result<Vec<LevelElement>> {
        let size = (sup.len() / sub.len()) as u64;
        if size > bound {
            return Err(Error::EnumerationTooLarge { size, bound });
        }
        let mut covered = vec![false; self.group.order()];
        let mut reps = Vec::new();
        for &x in sup {
            if covered[x as usize] {
                continue;
            }
            reps.push(x);
            for &h in sub {
                covered[self.group.mul(x, h) as usize] = true;
            }
        }
        Ok(reps)
    }

    pub fn coset_key(&self, x: LevelElement, d: &LevelDescriptor) -> String {
        let min = d.iter().map(|&h| self.group.mul(x, h)).min().unwrap();
        min.to_string()
    }

    fn all_subgroups(&self) -> &Vec<Vec<u16>> {
        self.subgroups.get_or_init(|| self.group.all_subgroups())
    }

    fn passes_saturation(&self, s: &LevelDescriptor) -> bool {
        match &self.saturation {
            None => true,
            Some(rule) => is_subset(s, &rule.trigger_outside) || is_subset(&rule.require, s),
        }
    }

    /// Is `s` invariant under every generator (and the saturation rule when
    /// `family` is set)?
    pub fn is_invariant(&self, s: &LevelDescriptor, gens: &[LevelAut], family: bool) -> Result<bool> {
        for g in gens {
            if self.apply_aut_descriptor(g, s)? != *s {
                return Ok(false);
            }
        }
        if family && !self.passes_saturation(s) {
            return Ok(false);
        }
        Ok(true)
    }

    /// All subgroups of `ambient` that are relatively open (contain
    /// `ambient ∩ U_deepest`) and invariant.
    pub fn invariant_relatively_open(
        &self,
        ambient: &LevelDescriptor,
        gens: &[LevelAut],
        family: bool,
    ) -> Result<Vec<LevelDescriptor>> {
        let floor = self.intersect(ambient, self.deepest());
        let mut out = Vec::new();
        for s in self.all_subgroups() {
            if is_subset(s, ambient)
                && is_subset(&floor, s)
                && self.is_invariant(s, gens, family)?
            {
                out.push(s.clone());
            }
        }
        Ok(out)
    }

    /// Raw intersection of the invariant relatively-open subgroups of
    /// `ambient`, and its stable core: the minimal invariant subgroup with
    /// the same image modulo the deepest chain level.
    pub fn invariant_open_intersection(
        &self,
        ambient: &LevelDescriptor,
        gens: &[LevelAut],
        family: bool,
    ) -> Result<(LevelDescriptor, LevelDescriptor)> {
        let opens = self.invariant_relatively_open(ambient, gens, family)?;
        let mut raw = ambient.clone();
        for s in &opens {
            raw = self.intersect(&raw, s);
        }
        // descend: minimal invariant S ⊆ raw with S · U_deepest = raw · U_deepest
        let floor = self.intersect(ambient, self.deepest());
        let target = self.group.product_set(&raw, &floor);
        let mut best: Option<Vec<u16>> = None;
        for s in self.all_subgroups() {
            if !is_subset(s, &raw) || !self.is_invariant(s, gens, family)? {
                continue;
            }
            if self.group.product_set(s, &floor) == target {
                if best.as_ref().map_or(true, |b| s.len() < b.len()) {
                    best = Some(s.clone());
                }
            }
        }
        let stable = best.unwrap_or_else(|| raw.clone());
        Ok((raw, stable))
    }
}

fn is_subset(sub: &[u16], sup: &[u16]) -> bool {
    sub.iter().all(|x| sup.binary_search(x).is_ok())
}

fn is_automorphism(g: &FiniteGroup, table: &[u16]) -> bool {
    let n = g.order();
    if table.len() != n || table[0] != 0 {
        return false;
    }
    let mut seen = vec![false; n];
    for &x in table {
        if (x as usize) >= n || seen[x as usize] {
            return false;
        }
        seen[x as usize] = true;
    }
    for a in 0..n as u16 {
        for b in 0..n as u16 {
            if table[g.mul(a, b) as usize] != g.mul(table[a as usize], table[b as usize]) {
                return false;
            }
        }
    }
    true
}

/// The nilpotent tower model from the bad-nub construction: the elementary
/// abelian group `V ⊕ W` with `V = F_2[t]/(t^d)` and `W = F_2`, acted on by
/// the linear maps `h_i : (v, w) ↦ (v, w + v_i)` for `i ≤ d-2`, with the
/// saturation rule standing in for the full family of continuous maps
/// `V → W`: any subgroup reaching outside `0 ⊕ W` must contain `0 ⊕ W`.
pub fn badnub_model(d: usize) -> Result<LevelModel> {
    if !(2..=5).contains(&d) {
        return Err(Error::Invalid("badnub depth must be between 2 and 5".into()));
    }
    let bits = d + 1; // coordinates 0..d are t^0..t^{d-1}, coordinate d is W
    let n: u16 = 1 << bits;
    let table: Vec<Vec<u16>> = (0..n).map(|a| (0..n).map(|b| a ^ b).collect()).collect();
    let names = (0..n).map(|x| format!("{x:0width$b}", width = bits)).collect();
    let group = FiniteGroupRef::new(FiniteGroup::from_table(&format!("V{d}+W"), table, names)?);
    // chain: whole, V ⊕ 0, tV ⊕ 0, ..., t^{d-1}V ⊕ 0
    let mut chain = vec![(0..n).collect::<Vec<u16>>()];
    for k in 0..d {
        let sub: Vec<u16> = (0..n)
            .filter(|&x| x & (1 << d) == 0 && (0..k).all(|i| x & (1 << i) == 0))
            .collect();
        chain.push(sub);
    }
    let mut auts = BTreeMap::new();
    for i in 0..d.saturating_sub(1) {
        let table: Vec<u16> = (0..n)
            .map(|x| if x & (1 << i) != 0 { x ^ (1 << d) } else { x })
            .collect();
        auts.insert(format!("h{i}"), table);
    }
    let w_only: Vec<u16> = vec![0, 1 << d];
    let saturation = Some(SatRule { trigger_outside: w_only.clone(), require: w_only });
    LevelModel::new(group, chain, auts, saturation)
}

/// The subgroup `0 ⊕ W` of a bad-nub model.
pub fn badnub_w(d: usize) -> LevelDescriptor {
    vec![0, 1 << d]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn badnub_structure() {
        let m = badnub_model(4).unwrap();
        assert_eq!(m.group.order(), 32);
        assert_eq!(m.depth(), 5);
        assert_eq!(m.basis(0).len(), 32);
        assert_eq!(m.basis(4).len(), 2);
        assert_eq!(m.basis(9), m.basis(4)); // clamped
        assert!(m.is_open(&m.basis(4)));
        assert!(!m.is_open(&badnub_w(4)));
    }

    #[test]
    fn named_automorphisms_act() {
        let m = badnub_model(3).unwrap();
        let h0 = LevelAut::Named("h0".into());
        // h0 sends (t^0, 0) to (t^0, w)
        assert_eq!(m.apply_aut(&h0, 0b0001).unwrap(), 0b1001);
        assert_eq!(m.apply_aut(&h0, 0b0010).unwrap(), 0b0010);
        // involution: inverse resolves to itself
        assert_eq!(m.invert_aut(&h0).unwrap(), h0);
    }

    #[test]
    fn family_residual_is_w() {
        let m = badnub_model(4).unwrap();
        let gens: Vec<LevelAut> = (0..3).map(|i| LevelAut::Named(format!("h{i}"))).collect();
        let (raw, stable) = m.invariant_open_intersection(&m.whole(), &gens, true).unwrap();
        // raw contains the truncation floor; the stable core is exactly W
        assert!(is_subset(&m.basis(4), &raw));
        assert_eq!(stable, badnub_w(4));
    }

    #[test]
    fn cyclic_residuals_trivial() {
        let m = badnub_model(4).unwrap();
        for i in 0..3 {
            let gens = vec![LevelAut::Named(format!("h{i}"))];
            let (_, stable) = m.invariant_open_intersection(&m.whole(), &gens, false).unwrap();
            assert_eq!(stable, vec![0], "h{i} should have trivial stable core");
        }
    }

    #[test]
    fn second_residual_vanishes() {
        let m = badnub_model(4).unwrap();
        let gens: Vec<LevelAut> = (0..3).map(|i| LevelAut::Named(format!("h{i}"))).collect();
        let w = badnub_w(4);
        let (_, stable) = m.invariant_open_intersection(&w, &gens, true).unwrap();
        assert_eq!(stable, vec![0]);
    }

    #[test]
    fn coset_enumeration() {
        let m = badnub_model(3).unwrap();
        let reps = m.coset_reps(&m.basis(0), &m.basis(2), 100).unwrap();
        assert_eq!(reps.len(), m.group.order() / m.basis(2).len());
        let keys: std::collections::BTreeSet<String> =
            reps.iter().map(|&r| m.coset_key(r, &m.basis(2))).collect();
        assert_eq!(keys.len(), reps.len());
    }
}
