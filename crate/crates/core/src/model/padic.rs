//! The p-adic toral family: `G = Q_p^n ⋊ (Z^n ⋊ Sym(n))`.
//!
//! Elements are triples `(v, m, π)` with `v` an exact rational vector,
//! `m` an integer exponent vector and `π` a coordinate permutation. The
//! acting part conjugates the vector part by `w_i ↦ p^{m_i} · w_{π⁻¹(i)}`.
//! Closed subgroups of the vector part are tracked exactly as exponent
//! vectors: the coordinate-wise products `∏ p^{e_i} Z_p`, where an exponent
//! of `-∞` means the full line and `+∞` the trivial coordinate.

use crate::error::{Error, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{BigUint, One, Signed, Zero};
use std::fmt;

pub type Perm = Vec<usize>;

pub fn perm_identity(n: usize) -> Perm {
    (0..n).collect()
}

pub fn perm_compose(a: &Perm, b: &Perm) -> Perm {
    // (a ∘ b)(i) = a(b(i))
    b.iter().map(|&i| a[i]).collect()
}

pub fn perm_inverse(a: &Perm) -> Perm {
    let mut inv = vec![0; a.len()];
    for (i, &j) in a.iter().enumerate() {
        inv[j] = i;
    }
    inv
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PadicElement {
    pub v: Vec<BigRational>,
    pub m: Vec<i64>,
    pub perm: Perm,
}

/// Exponent of one coordinate of a vector-part subgroup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exp {
    /// The full line `Q_p`.
    NegInf,
    /// `p^e Z_p`.
    Fin(i64),
    /// The trivial coordinate `{0}`.
    PosInf,
}

impl Exp {
    fn max(self, other: Exp) -> Exp {
        match (self, other) {
            (Exp::PosInf, _) | (_, Exp::PosInf) => Exp::PosInf,
            (Exp::NegInf, e) | (e, Exp::NegInf) => e,
            (Exp::Fin(a), Exp::Fin(b)) => Exp::Fin(a.max(b)),
        }
    }
    fn min(self, other: Exp) -> Exp {
        match (self, other) {
            (Exp::NegInf, _) | (_, Exp::NegInf) => Exp::NegInf,
            (Exp::PosInf, e) | (e, Exp::PosInf) => e,
            (Exp::Fin(a), Exp::Fin(b)) => Exp::Fin(a.min(b)),
        }
    }
    fn shift(self, d: i64) -> Exp {
        match self {
            Exp::Fin(e) => Exp::Fin(e + d),
            inf => inf,
        }
    }
    /// `self ≤ other` as exponents means the subgroup with exponent `self`
    /// CONTAINS the one with exponent `other`.
    fn le(self, other: Exp) -> bool {
        match (self, other) {
            (Exp::NegInf, _) => true,
            (_, Exp::PosInf) => true,
            (Exp::Fin(a), Exp::Fin(b)) => a <= b,
            _ => false,
        }
    }
}

impl fmt::Display for Exp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exp::NegInf => write!(f, "-inf"),
            Exp::Fin(e) => write!(f, "{e}"),
            Exp::PosInf => write!(f, "+inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PadicDescriptor {
    /// `∏ p^{e_i} Z_p` inside the vector part.
    Vector(Vec<Exp>),
    /// The entire group, acting part included.
    Whole,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadicModel {
    pub p: u32,
    pub n: usize,
}

impl PadicModel {
    pub fn new(p: u32, n: usize) -> Self {
        PadicModel { p, n }
    }

    pub fn identity(&self) -> PadicElement {
        PadicElement {
            v: vec![BigRational::zero(); self.n],
            m: vec![0; self.n],
            perm: perm_identity(self.n),
        }
    }

    pub fn element(&self, v: Vec<BigRational>, m: Vec<i64>, perm: Perm) -> Result<PadicElement> {
        if v.len() != self.n || m.len() != self.n || perm.len() != self.n {
            return Err(Error::Invalid("element arity does not match model rank".into()));
        }
        let mut seen = vec![false; self.n];
        for &i in &perm {
            if i >= self.n || seen[i] {
                return Err(Error::Invalid("not a permutation".into()));
            }
            seen[i] = true;
        }
        Ok(PadicElement { v, m, perm })
    }

    /// Pure translation.
    pub fn translation(&self, v: Vec<BigRational>) -> Result<PadicElement> {
        self.element(v, vec![0; self.n], perm_identity(self.n))
    }

    /// Pure scaling element with exponent vector `m`.
    pub fn scaling(&self, m: Vec<i64>) -> Result<PadicElement> {
        self.element(vec![BigRational::zero(); self.n], m, perm_identity(self.n))
    }

    fn p_big(&self) -> BigInt {
        BigInt::from(self.p)
    }

    fn p_pow(&self, e: i64) -> BigRational {
        if e >= 0 {
            BigRational::from_integer(self.p_big().pow(e as u32))
        } else {
            BigRational::new(BigInt::one(), self.p_big().pow((-e) as u32))
        }
    }

    /// Action of the acting part `(m, π)` on a vector: `w_i ↦ p^{m_i} w_{π⁻¹(i)}`.
    fn act(&self, m: &[i64], perm: &Perm, w: &[BigRational]) -> Vec<BigRational> {
        let pinv = perm_inverse(perm);
        (0..self.n)
            .map(|i| &w[pinv[i]] * self.p_pow(m[i]))
            .collect()
    }

    pub fn compose(&self, a: &PadicElement, b: &PadicElement) -> PadicElement {
        let v = a
            .v
            .iter()
            .zip(self.act(&a.m, &a.perm, &b.v))
            .map(|(x, y)| x + y)
            .collect();
        // (m, π)(m', π') = (m + π·m', π π') with (π·m')_i = m'_{π⁻¹(i)}
        let pinv = perm_inverse(&a.perm);
        let m = (0..self.n).map(|i| a.m[i] + b.m[pinv[i]]).collect();
        let perm = perm_compose(&a.perm, &b.perm);
        PadicElement { v, m, perm }
    }

    pub fn invert(&self, a: &PadicElement) -> PadicElement {
        let perm = perm_inverse(&a.perm);
        // inverse acting part (m', π⁻¹) with m'_i = -m_{π(i)}
        let m: Vec<i64> = (0..self.n).map(|i| -a.m[a.perm[i]]).collect();
        let v = self
            .act(&m, &perm, &a.v)
            .into_iter()
            .map(|x| -x)
            .collect();
        PadicElement { v, m, perm }
    }

    pub fn conj_element(&self, g: &PadicElement, x: &PadicElement) -> PadicElement {
        self.compose(&self.compose(g, x), &self.invert(g))
    }

    pub fn whole(&self) -> PadicDescriptor {
        PadicDescriptor::Whole
    }

    pub fn trivial(&self) -> PadicDescriptor {
        PadicDescriptor::Vector(vec![Exp::PosInf; self.n])
    }

    /// Compact open basis `U_k = ∏ p^k Z_p^n`.
    pub fn basis(&self, k: u32) -> PadicDescriptor {
        PadicDescriptor::Vector(vec![Exp::Fin(k as i64); self.n])
    }

    pub fn is_open(&self, d: &PadicDescriptor) -> bool {
        match d {
            PadicDescriptor::Whole => true,
            PadicDescriptor::Vector(e) => e.iter().all(|x| !matches!(x, Exp::PosInf)),
        }
    }

    pub fn is_compact(&self, d: &PadicDescriptor) -> bool {
        match d {
            PadicDescriptor::Whole => false,
            PadicDescriptor::Vector(e) => e.iter().all(|x| !matches!(x, Exp::NegInf)),
        }
    }

    pub fn conj_descriptor(&self, g: &PadicElement, d: &PadicDescriptor) -> PadicDescriptor {
        match d {
            PadicDescriptor::Whole => PadicDescriptor::Whole,
            PadicDescriptor::Vector(e) => {
                // e'_i = e_{π⁻¹(i)} + m_i : conjugation scales coordinate i by p^{m_i}
                let pinv = perm_inverse(&g.perm);
                PadicDescriptor::Vector(
                    (0..self.n).map(|i| e[pinv[i]].shift(g.m[i])).collect(),
                )
            }
        }
    }

    pub fn intersect(&self, a: &PadicDescriptor, b: &PadicDescriptor) -> PadicDescriptor {
        match (a, b) {
            (PadicDescriptor::Whole, d) | (d, PadicDescriptor::Whole) => d.clone(),
            (PadicDescriptor::Vector(e), PadicDescriptor::Vector(f)) => PadicDescriptor::Vector(
                e.iter().zip(f).map(|(x, y)| x.max(*y)).collect(),
            ),
        }
    }

    /// Product of two vector-part subgroups (they commute), exponent-wise min.
    pub fn product(&self, a: &PadicDescriptor, b: &PadicDescriptor) -> PadicDescriptor {
        match (a, b) {
            (PadicDescriptor::Whole, _) | (_, PadicDescriptor::Whole) => PadicDescriptor::Whole,
            (PadicDescriptor::Vector(e), PadicDescriptor::Vector(f)) => PadicDescriptor::Vector(
                e.iter().zip(f).map(|(x, y)| x.min(*y)).collect(),
            ),
        }
    }

    pub fn contains(&self, sup: &PadicDescriptor, sub: &PadicDescriptor) -> bool {
        match (sup, sub) {
            (PadicDescriptor::Whole, _) => true,
            (_, PadicDescriptor::Whole) => false,
            (PadicDescriptor::Vector(e), PadicDescriptor::Vector(f)) => {
                e.iter().zip(f).all(|(x, y)| x.le(*y))
            }
        }
    }

    pub fn index(&self, sup: &PadicDescriptor, sub: &PadicDescriptor) -> Result<BigUint> {
        if !self.contains(sup, sub) {
            return Err(Error::NotNested(format!(
                "{} does not contain {}",
                self.describe(sup),
                self.describe(sub)
            )));
        }
        match (sup, sub) {
            (PadicDescriptor::Whole, PadicDescriptor::Whole) => Ok(BigUint::one()),
            (PadicDescriptor::Whole, _) => Err(Error::InfiniteIndex(
                "the whole group has infinite index over any vector subgroup".into(),
            )),
            (_, PadicDescriptor::Whole) => unreachable!(),
            (PadicDescriptor::Vector(e), PadicDescriptor::Vector(f)) => {
                let mut idx = BigUint::one();
                for (x, y) in e.iter().zip(f) {
                    match (x, y) {
                        (Exp::NegInf, Exp::NegInf) | (Exp::PosInf, Exp::PosInf) => {}
                        (Exp::Fin(a), Exp::Fin(b)) => {
                            idx *= BigUint::from(self.p).pow((b - a) as u32);
                        }
                        (_, Exp::PosInf) | (Exp::NegInf, Exp::Fin(_)) => {
                            return Err(Error::InfiniteIndex(format!(
                                "coordinate gap {x}..{y} is infinite"
                            )));
                        }
                        _ => unreachable!(),
                    }
                }
                Ok(idx)
            }
        }
    }

    pub fn member(&self, x: &PadicElement, d: &PadicDescriptor) -> bool {
        match d {
            PadicDescriptor::Whole => true,
            PadicDescriptor::Vector(e) => {
                x.m.iter().all(|&m| m == 0)
                    && x.perm.iter().enumerate().all(|(i, &j)| i == j)
                    && x.v.iter().zip(e).all(|(v, exp)| match exp {
                        Exp::NegInf => true,
                        Exp::PosInf => v.is_zero(),
                        Exp::Fin(k) => valuation(v, self.p).map_or(true, |val| val >= *k),
                    })
            }
        }
    }

    /// Representatives of the cosets of `sub` in `sup` (both vector
    /// descriptors with finite index).
    pub fn coset_reps(
        &self,
        sup: &PadicDescriptor,
        sub: &PadicDescriptor,
        bound: u64,
    ) -> Result<Vec<PadicElement>> {
        let size = self.index(sup, sub)?;
        if size > BigUint::from(bound) {
            let approx = u64::try_from(&size).unwrap_or(u64::MAX);
            return Err(Error::EnumerationTooLarge { size: approx, bound });
        }
        let (e, f) = match (sup, sub) {
            (PadicDescriptor::Vector(e), PadicDescriptor::Vector(f)) => (e, f),
            _ => return Err(Error::Unsupported("coset reps need vector descriptors".into())),
        };
        let mut reps = vec![vec![BigRational::zero(); self.n]];
        for i in 0..self.n {
            if let (Exp::Fin(a), Exp::Fin(b)) = (e[i], f[i]) {
                let count = self.p.pow((b - a) as u32) as i64;
                let mut next = Vec::with_capacity(reps.len() * count as usize);
                for rep in &reps {
                    for j in 0..count {
                        let mut r = rep.clone();
                        r[i] = BigRational::from_integer(BigInt::from(j)) * self.p_pow(a);
                        next.push(r);
                    }
                }
                reps = next;
            }
        }
        reps.into_iter().map(|v| self.translation(v)).collect()
    }

    /// Canonical key identifying the left coset `x · D` for compact open `D`.
    pub fn coset_key(&self, x: &PadicElement, d: &PadicDescriptor) -> Result<String> {
        let e = match d {
            PadicDescriptor::Vector(e) if self.is_compact(d) && self.is_open(d) => e,
            _ => return Err(Error::Unsupported("coset keys need a compact open descriptor".into())),
        };
        // x·D has vector parts v + β_{a_x}(D); reduce v modulo the conjugated exponents
        let mut key = format!("m={:?} perm={:?} v=", x.m, x.perm);
        let pinv = perm_inverse(&x.perm);
        for i in 0..self.n {
            let conj_exp = match e[pinv[i]] {
                Exp::Fin(k) => k + x.m[i],
                _ => unreachable!(),
            };
            let r = reduce_mod_power(&x.v[i], self.p, conj_exp);
            key.push_str(&format!("{r},"));
        }
        Ok(key)
    }

    pub fn describe(&self, d: &PadicDescriptor) -> String {
        match d {
            PadicDescriptor::Whole => "G".to_string(),
            PadicDescriptor::Vector(e) => {
                let parts: Vec<String> = e.iter().map(|x| x.to_string()).collect();
                format!("prod p^({})Zp", parts.join(","))
            }
        }
    }

    pub fn describe_element(&self, x: &PadicElement) -> String {
        let vs: Vec<String> = x.v.iter().map(|r| r.to_string()).collect();
        format!("({}; m={:?}; perm={:?})", vs.join(","), x.m, x.perm)
    }

    /// Cycles of the coordinate permutation together with their exponent drift.
    pub fn cycles_with_drift(&self, g: &PadicElement) -> Vec<(Vec<usize>, i64)> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut cyc = Vec::new();
            let mut i = start;
            let mut drift = 0i64;
            while !seen[i] {
                seen[i] = true;
                cyc.push(i);
                drift += g.m[i];
                i = g.perm[i];
            }
            out.push((cyc, drift));
        }
        out
    }

    /// Scale of conjugation by `g`, by the closed form: each permutation
    /// cycle with exponent drift `S` contributes `p^{max(0, -S)}`.
    pub fn closed_scale(&self, g: &PadicElement) -> BigUint {
        let mut s = BigUint::one();
        for (_, drift) in self.cycles_with_drift(g) {
            if drift < 0 {
                s *= BigUint::from(self.p).pow((-drift) as u32);
            }
        }
        s
    }

    /// The contraction group of `g`: full lines on cycles with positive
    /// drift, trivial elsewhere. Always closed in this family.
    pub fn closed_contraction(&self, g: &PadicElement) -> PadicDescriptor {
        let mut exps = vec![Exp::PosInf; self.n];
        for (cyc, drift) in self.cycles_with_drift(g) {
            if drift > 0 {
                for i in cyc {
                    exps[i] = Exp::NegInf;
                }
            }
        }
        PadicDescriptor::Vector(exps)
    }

    /// Smallest intersection of open subgroups invariant under every
    /// generator: a coordinate component survives (is trivial in the
    /// intersection) exactly when a consistent exponent potential exists,
    /// i.e. no generator word moves a coordinate around a loop with nonzero
    /// total drift.
    pub fn invariant_open_intersection(&self, gens: &[PadicElement]) -> PadicDescriptor {
        // union-find over coordinates linked by any generator's permutation
        let mut comp: Vec<usize> = (0..self.n).collect();
        fn find(comp: &mut Vec<usize>, i: usize) -> usize {
            if comp[i] != i {
                let r = find(comp, comp[i]);
                comp[i] = r;
            }
            comp[i]
        }
        for g in gens {
            for i in 0..self.n {
                let (a, b) = (find(&mut comp, i), find(&mut comp, g.perm[i]));
                if a != b {
                    comp[a] = b;
                }
            }
        }
        // potential assignment per component: BFS over edges i --(+m)--> π(i)
        let mut pot: Vec<Option<i64>> = vec![None; self.n];
        let mut bad = vec![false; self.n];
        for start in 0..self.n {
            if pot[start].is_some() {
                continue;
            }
            pot[start] = Some(0);
            let mut frontier = vec![start];
            while let Some(i) = frontier.pop() {
                let pi = pot[i].unwrap();
                for g in gens {
                    // edge i -> π(i): invariance forces e_{π(i)} = e_i + m_{π(i)}
                    let j = g.perm[i];
                    let pj = pi + g.m[j];
                    match pot[j] {
                        None => {
                            pot[j] = Some(pj);
                            frontier.push(j);
                        }
                        Some(old) if old != pj => bad[find(&mut comp, j)] = true,
                        _ => {}
                    }
                    // reverse edge
                    let ginv = self.invert(g);
                    let j = ginv.perm[i];
                    let pj = pi + ginv.m[j];
                    match pot[j] {
                        None => {
                            pot[j] = Some(pj);
                            frontier.push(j);
                        }
                        Some(old) if old != pj => bad[find(&mut comp, j)] = true,
                        _ => {}
                    }
                }
            }
        }
        let exps = (0..self.n)
            .map(|i| {
                if bad[find(&mut comp, i)] {
                    Exp::NegInf
                } else {
                    Exp::PosInf
                }
            })
            .collect();
        PadicDescriptor::Vector(exps)
    }

    /// `∩_{h ∈ ⟨gens⟩} h D h⁻¹` in closed form.
    ///
    /// Coordinates are linked by the generators' permutations with an
    /// additive exponent cocycle.  A coordinate sitting in an orbit with a
    /// nonzero-weight cycle receives arbitrarily large exponents under
    /// conjugation, so its intersection is the zero coordinate; otherwise a
    /// consistent potential exists and the intersection is the finite
    /// maximum of transported exponents over the orbit.
    pub fn conjugate_core(&self, gens: &[PadicElement], d: &PadicDescriptor) -> PadicDescriptor {
        let e = match d {
            PadicDescriptor::Whole => return PadicDescriptor::Whole,
            PadicDescriptor::Vector(e) => e.clone(),
        };
        let mut comp: Vec<usize> = (0..self.n).collect();
        fn find(comp: &mut Vec<usize>, i: usize) -> usize {
            if comp[i] != i {
                let r = find(comp, comp[i]);
                comp[i] = r;
            }
            comp[i]
        }
        for g in gens {
            for i in 0..self.n {
                let (a, b) = (find(&mut comp, i), find(&mut comp, g.perm[i]));
                if a != b {
                    comp[a] = b;
                }
            }
        }
        let mut pot: Vec<Option<i64>> = vec![None; self.n];
        let mut bad = vec![false; self.n];
        for start in 0..self.n {
            if pot[start].is_some() {
                continue;
            }
            pot[start] = Some(0);
            let mut frontier = vec![start];
            while let Some(i) = frontier.pop() {
                let pi = pot[i].unwrap();
                for g in gens {
                    for h in [g.clone(), self.invert(g)] {
                        // conjugation by h sends exponent e_i to position
                        // h.perm[i] shifted by h.m[h.perm[i]]
                        let j = h.perm[i];
                        let pj = pi + h.m[j];
                        match pot[j] {
                            None => {
                                pot[j] = Some(pj);
                                frontier.push(j);
                            }
                            Some(old) if old != pj => bad[find(&mut comp, j)] = true,
                            _ => {}
                        }
                    }
                }
            }
        }
        let exps = (0..self.n)
            .map(|i| {
                let c = find(&mut comp, i);
                if bad[c] {
                    return Exp::PosInf;
                }
                let mut acc = Exp::NegInf;
                for j in 0..self.n {
                    if find(&mut comp, j) != c {
                        continue;
                    }
                    // transporting e_j to coordinate i adds pot_i − pot_j
                    let moved = e[j].shift(pot[i].unwrap() - pot[j].unwrap());
                    acc = acc.max(moved);
                }
                acc
            })
            .collect();
        PadicDescriptor::Vector(exps)
    }
}

/// p-adic valuation of a nonzero rational; `None` for zero (valuation +∞).
pub fn valuation(r: &BigRational, p: u32) -> Option<i64> {
    if r.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut num = r.numer().abs();
    let mut den = r.denom().abs();
    let mut val = 0i64;
    while (&num % &p).is_zero() {
        num /= &p;
        val += 1;
    }
    while (&den % &p).is_zero() {
        den /= &p;
        val -= 1;
    }
    Some(val)
}

/// Canonical representative of `r + p^k Z_p` with value in `[0, p^k)` and
/// denominator a power of `p`. Requires `r ∈ p^{-j} Z_p` for some `j ≥ 0`
/// (true of every rational: invert the prime-to-p part of the denominator).
pub fn reduce_mod_power(r: &BigRational, p: u32, k: i64) -> BigRational {
    let pb = BigInt::from(p);
    // write r = a / (p^j d) with gcd(d, p) = 1
    let mut den = r.denom().clone();
    let mut j = 0i64;
    while (&den % &pb).is_zero() {
        den /= &pb;
        j += 1;
    }
    // r ≡ (a d⁻¹ mod p^{k+j}) / p^j  (mod p^k Z_p), when k + j > 0
    if k + j <= 0 {
        return BigRational::zero();
    }
    let modulus = pb.pow((k + j) as u32);
    let dinv = mod_inverse(&den, &modulus).expect("denominator prime to p");
    let a = r.numer() * dinv % &modulus;
    let a = ((a % &modulus) + &modulus) % &modulus;
    BigRational::new(a, pb.pow(j as u32)) * BigRational::from_integer(BigInt::one())
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let (g, x, _) = ext_gcd(&(((a % m) + m) % m), m);
    if g != BigInt::one() {
        return None;
    }
    Some(((x % m) + m) % m)
}

fn ext_gcd(a: &BigInt, b: &BigInt) -> (BigInt, BigInt, BigInt) {
    if b.is_zero() {
        (a.clone(), BigInt::one(), BigInt::zero())
    } else {
        let (g, x, y) = ext_gcd(b, &(a % b));
        (g, y.clone(), x - (a / b) * y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::traits::FromPrimitive;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn q2() -> PadicModel {
        PadicModel::new(2, 1)
    }

    #[test]
    fn group_axioms_rank_one() {
        let m = q2();
        let t = m.scaling(vec![1]).unwrap();
        let x = m.translation(vec![rat(3, 4)]).unwrap();
        let id = m.identity();
        assert_eq!(m.compose(&t, &m.invert(&t)), id);
        assert_eq!(m.compose(&x, &m.invert(&x)), id);
        let y = m.compose(&t, &x);
        assert_eq!(m.compose(&m.invert(&t), &y), x);
    }

    #[test]
    fn conjugation_scales_lattice() {
        let m = q2();
        let t = m.scaling(vec![1]).unwrap();
        let z2 = m.basis(0);
        // t Z_2 t⁻¹ = 2 Z_2
        assert_eq!(m.conj_descriptor(&t, &z2), PadicDescriptor::Vector(vec![Exp::Fin(1)]));
        let tinv = m.invert(&t);
        assert_eq!(m.conj_descriptor(&tinv, &z2), PadicDescriptor::Vector(vec![Exp::Fin(-1)]));
    }

    #[test]
    fn index_and_reps() {
        let m = q2();
        let idx = m.index(&m.basis(0), &m.basis(3)).unwrap();
        assert_eq!(idx, BigUint::from_u64(8).unwrap());
        let reps = m.coset_reps(&m.basis(0), &m.basis(3), 100).unwrap();
        assert_eq!(reps.len(), 8);
        // all reps distinct modulo basis(3)
        let keys: std::collections::BTreeSet<String> = reps
            .iter()
            .map(|r| m.coset_key(r, &m.basis(3)).unwrap())
            .collect();
        assert_eq!(keys.len(), 8);
    }

    #[test]
    fn closed_scale_matches_drift() {
        let m = q2();
        let t = m.scaling(vec![1]).unwrap();
        assert_eq!(m.closed_scale(&t), BigUint::one());
        assert_eq!(m.closed_scale(&m.invert(&t)), BigUint::from_u64(2).unwrap());
        // rank 2 with a swap and drift (1, -1): cycle drift 0 → uniscalar
        let m2 = PadicModel::new(2, 2);
        let swap = m2
            .element(vec![rat(0, 1), rat(0, 1)], vec![1, -1], vec![1, 0])
            .unwrap();
        assert_eq!(m2.closed_scale(&swap), BigUint::one());
    }

    #[test]
    fn contraction_closed_form() {
        let m = PadicModel::new(3, 2);
        let g = m.scaling(vec![2, -1]).unwrap();
        assert_eq!(
            m.closed_contraction(&g),
            PadicDescriptor::Vector(vec![Exp::NegInf, Exp::PosInf])
        );
        assert_eq!(
            m.closed_contraction(&m.invert(&g)),
            PadicDescriptor::Vector(vec![Exp::PosInf, Exp::NegInf])
        );
    }

    #[test]
    fn valuation_of_rationals() {
        assert_eq!(valuation(&rat(3, 4), 2), Some(-2));
        assert_eq!(valuation(&rat(8, 3), 2), Some(3));
        assert_eq!(valuation(&rat(0, 1), 2), None);
    }

    #[test]
    fn reduction_mod_power() {
        // 1/3 ≡ 3 (mod 8): 3·3 = 9 ≡ 1
        assert_eq!(reduce_mod_power(&rat(1, 3), 2, 3), rat(3, 1));
        // 3/4 mod 2 Z_2: 3/4 = 0.11 + ... canonical in [0, 2) with denom 4
        let r = reduce_mod_power(&rat(3, 4), 2, 1);
        assert_eq!(r, rat(3, 4));
        assert_eq!(reduce_mod_power(&rat(11, 4), 2, 1), rat(3, 4));
    }

    #[test]
    fn conjugate_core_closed_forms() {
        let m = q2();
        let t = m.scaling(vec![1]).unwrap();
        // ∩_n tⁿ Z_2 t⁻ⁿ = ∩_n 2ⁿ Z_2 = {0}
        assert_eq!(
            m.conjugate_core(&[t.clone()], &PadicDescriptor::Vector(vec![Exp::Fin(0)])),
            PadicDescriptor::Vector(vec![Exp::PosInf])
        );
        // a translation normalises nothing it moves, but fixes exponents
        let x = m.translation(vec![rat(1, 1)]).unwrap();
        assert_eq!(
            m.conjugate_core(&[x], &PadicDescriptor::Vector(vec![Exp::Fin(2)])),
            PadicDescriptor::Vector(vec![Exp::Fin(2)])
        );
        // zero-drift swap: the conjugates are [0,0] and [1,−1]; their
        // intersection takes the coordinate-wise larger exponent
        let m2 = PadicModel::new(2, 2);
        let swap = m2
            .element(vec![rat(0, 1), rat(0, 1)], vec![1, -1], vec![1, 0])
            .unwrap();
        assert_eq!(
            m2.conjugate_core(
                &[swap.clone()],
                &PadicDescriptor::Vector(vec![Exp::Fin(0), Exp::Fin(0)])
            ),
            PadicDescriptor::Vector(vec![Exp::Fin(1), Exp::Fin(0)])
        );
        assert_eq!(
            m2.conjugate_core(&[swap.clone()], &m2.conj_descriptor(&swap, &m2.basis(0))),
            m2.conjugate_core(&[swap], &m2.basis(0))
        );
    }

    #[test]
    fn invariant_open_intersection_detects_drift() {
        let m = q2();
        let t = m.scaling(vec![1]).unwrap();
        // ⟨t⟩ admits no invariant compact open: the intersection is the full line
        assert_eq!(
            m.invariant_open_intersection(&[t]),
            PadicDescriptor::Vector(vec![Exp::NegInf])
        );
        // a pure translation leaves every p^k Z_p invariant
        let x = m.translation(vec![rat(1, 2)]).unwrap();
        assert_eq!(
            m.invariant_open_intersection(&[x]),
            PadicDescriptor::Vector(vec![Exp::PosInf])
        );
        // swap with zero drift: consistent potential exists
        let m2 = PadicModel::new(2, 2);
        let swap = m2
            .element(vec![rat(0, 1), rat(0, 1)], vec![1, -1], vec![1, 0])
            .unwrap();
        assert_eq!(
            m2.invariant_open_intersection(&[swap]),
            PadicDescriptor::Vector(vec![Exp::PosInf, Exp::PosInf])
        );
        // swap with net drift: no invariant open below the full plane
        let drift = m2
            .element(vec![rat(0, 1), rat(0, 1)], vec![1, 1], vec![1, 0])
            .unwrap();
        assert_eq!(
            m2.invariant_open_intersection(&[drift]),
            PadicDescriptor::Vector(vec![Exp::NegInf, Exp::NegInf])
        );
    }
}
