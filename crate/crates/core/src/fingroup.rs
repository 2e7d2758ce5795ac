//! Small finite groups given by multiplication tables.
//!
//! Used as the alphabet group of shift models and as the levels of finite
//! tower models. Everything here is exhaustively computable.

use crate::error::{Error, Result};
use std::collections::BTreeSet;
use std::sync::Arc;

/// A finite group on elements `0..n` with `0` the identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    pub name: String,
    /// `table[a][b]` is the product `a * b`.
    pub table: Vec<Vec<u16>>,
    pub inverse: Vec<u16>,
    /// Display names of elements, `names[0] == "1"`.
    pub names: Vec<String>,
}

pub type FiniteGroupRef = Arc<FiniteGroup>;

impl FiniteGroup {
    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn mul(&self, a: u16, b: u16) -> u16 {
        self.table[a as usize][b as usize]
    }

    pub fn inv(&self, a: u16) -> u16 {
        self.inverse[a as usize]
    }

    pub fn conj(&self, g: u16, x: u16) -> u16 {
        self.mul(self.mul(g, x), self.inv(g))
    }

    pub fn element_index(&self, name: &str) -> Result<u16> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| i as u16)
            .ok_or_else(|| Error::Invalid(format!("unknown element '{name}' of {}", self.name)))
    }

    /// Build a group from a multiplication table, verifying the axioms.
    pub fn from_table(name: &str, table: Vec<Vec<u16>>, names: Vec<String>) -> Result<Self> {
        let n = table.len();
        if names.len() != n || table.iter().any(|r| r.len() != n) {
            return Err(Error::Invalid(format!("ragged table for {name}")));
        }
        for a in 0..n {
            if table[0][a] != a as u16 || table[a][0] != a as u16 {
                return Err(Error::Invalid(format!("0 is not an identity in {name}")));
            }
        }
        let mut inverse = vec![u16::MAX; n];
        for a in 0..n {
            for b in 0..n {
                if table[a][b] == 0 {
                    inverse[a] = b as u16;
                }
            }
        }
        if inverse.iter().any(|&i| i == u16::MAX) {
            return Err(Error::Invalid(format!("missing inverse in {name}")));
        }
        for a in 0..n as u16 {
            for b in 0..n as u16 {
                for c in 0..n as u16 {
                    let ab = table[a as usize][b as usize];
                    let bc = table[b as usize][c as usize];
                    if table[ab as usize][c as usize] != table[a as usize][bc as usize] {
                        return Err(Error::Invalid(format!("{name} is not associative")));
                    }
                }
            }
        }
        Ok(FiniteGroup { name: name.to_string(), table, inverse, names })
    }

    /// The cyclic group of order `n`, written additively.
    pub fn cyclic(n: u16) -> Self {
        let table = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        let names = (0..n)
            .map(|i| if i == 0 { "1".to_string() } else { format!("a{i}") })
            .collect();
        let inverse = (0..n).map(|a| (n - a) % n).collect();
        FiniteGroup { name: format!("C{n}"), table, inverse, names }
    }

    /// The symmetric group on `deg` points (desk scale: `deg <= 4`).
    pub fn symmetric(deg: usize) -> Self {
        let perms = all_perms(deg);
        let n = perms.len();
        let idx = |p: &Vec<usize>| perms.iter().position(|q| q == p).unwrap() as u16;
        let mut table = vec![vec![0u16; n]; n];
        for (a, pa) in perms.iter().enumerate() {
            for (b, pb) in perms.iter().enumerate() {
                // (pa ∘ pb)(i) = pa(pb(i))
                let prod: Vec<usize> = (0..deg).map(|i| pa[pb[i]]).collect();
                table[a][b] = idx(&prod);
            }
        }
        let names = perms.iter().map(|p| perm_name(p)).collect();
        let mut inverse = vec![0u16; n];
        for (a, pa) in perms.iter().enumerate() {
            let mut inv = vec![0usize; deg];
            for i in 0..deg {
                inv[pa[i]] = i;
            }
            inverse[a] = idx(&inv);
        }
        FiniteGroup { name: format!("S{deg}"), table, inverse, names }
    }

    /// Subgroup generated by `gens`, as a sorted element list.
    pub fn generated(&self, gens: &[u16]) -> Vec<u16> {
        let mut seen: BTreeSet<u16> = BTreeSet::new();
        seen.insert(0);
        let mut frontier = vec![0u16];
        while let Some(x) = frontier.pop() {
            for &g in gens {
                for y in [self.mul(x, g), self.mul(x, self.inv(g))] {
                    if seen.insert(y) {
                        frontier.push(y);
                    }
                }
            }
        }
        seen.into_iter().collect()
    }

    /// All subgroups, each as a sorted element list. Exhaustive; fine for
    /// the desk-scale orders used here.
    pub fn all_subgroups(&self) -> Vec<Vec<u16>> {
        let n = self.order() as u16;
        let mut out: BTreeSet<Vec<u16>> = BTreeSet::new();
        out.insert(vec![0]);
        // close under adding one generator at a time
        let mut frontier: Vec<Vec<u16>> = vec![vec![0]];
        while let Some(sub) = frontier.pop() {
            for g in 1..n {
                if sub.binary_search(&g).is_ok() {
                    continue;
                }
                let mut gens: Vec<u16> = sub.clone();
                gens.push(g);
                let bigger = self.generated(&gens);
                if out.insert(bigger.clone()) {
                    frontier.push(bigger);
                }
            }
        }
        out.into_iter().collect()
    }

    /// Check that a sorted element list is closed under the group operations.
    pub fn is_subgroup(&self, elts: &[u16]) -> bool {
        if elts.binary_search(&0).is_err() {
            return false;
        }
        for &a in elts {
            if elts.binary_search(&self.inv(a)).is_err() {
                return false;
            }
            for &b in elts {
                if elts.binary_search(&self.mul(a, b)).is_err() {
                    return false;
                }
            }
        }
        true
    }

    /// Intersection of two sorted element lists.
    pub fn intersect_sets(a: &[u16], b: &[u16]) -> Vec<u16> {
        a.iter().filter(|x| b.binary_search(x).is_ok()).copied().collect()
    }

    /// Product set `A * B`, sorted.
    pub fn product_set(&self, a: &[u16], b: &[u16]) -> Vec<u16> {
        let mut out = BTreeSet::new();
        for &x in a {
            for &y in b {
                out.insert(self.mul(x, y));
            }
        }
        out.into_iter().collect()
    }

    /// Conjugate of a sorted element list by `g`.
    pub fn conj_set(&self, g: u16, s: &[u16]) -> Vec<u16> {
        let mut out: Vec<u16> = s.iter().map(|&x| self.conj(g, x)).collect();
        out.sort_unstable();
        out
    }
}

fn all_perms(deg: usize) -> Vec<Vec<usize>> {
    // identity first so index 0 is the group identity
    let mut perms = vec![(0..deg).collect::<Vec<_>>()];
    let mut rest: Vec<Vec<usize>> = Vec::new();
    permute(&mut (0..deg).collect::<Vec<_>>(), 0, &mut rest);
    rest.retain(|p| *p != perms[0]);
    rest.sort();
    perms.extend(rest);
    perms
}

fn permute(v: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == v.len() {
        out.push(v.clone());
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, out);
        v.swap(k, i);
    }
}

fn perm_name(p: &[usize]) -> String {
    // cycle notation on points 1..deg
    let n = p.len();
    let mut seen = vec![false; n];
    let mut s = String::new();
    for start in 0..n {
        if seen[start] || p[start] == start {
            seen[start] = true;
            continue;
        }
        s.push('(');
        let mut i = start;
        let mut first = true;
        while !seen[i] {
            seen[i] = true;
            if !first {
                s.push(' ');
            }
            s.push_str(&(i + 1).to_string());
            first = false;
            i = p[i];
        }
        s.push(')');
    }
    if s.is_empty() {
        s.push('1');
    }
    s
}
