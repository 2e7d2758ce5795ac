//! Textual scenario format: a model family plus named elements, with a
//! canonical serialisation. `parse(to_text(s)) == s` byte for byte.
//!
//! ```text
//! scenario padic-t
//! family padic p=2 n=1
//! element t = (0; t^1)
//! element x = (1; t^0)
//! ```
//!
//! Element literals per family:
//! - p-adic toral: `(3/4, 0; t^2, t^0)` with an optional `; perm=[1,0]`
//!   part for a coordinate permutation;
//! - shift: `{-1:a1, 0:a1} * s^3` — finitely supported configuration times
//!   a power of the shift;
//! - finite tower: a named automorphism (`h0`) or a group element name
//!   (`01001`);
//! - tree product: `(perm=[0,1]; C1: portrait{0=[2,1,3]} * tau^1; C2: id)`
//!   with vertices written `level` or `level/b1.b2...`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context, Result};
use num::{BigInt, BigRational, One};

use tdlc_core::catalog::Fixture;
use tdlc_core::fingroup::{FiniteGroup, FiniteGroupRef};
use tdlc_core::model::finite_level::{badnub_model, LevelAut, LevelModel};
use tdlc_core::model::padic::{PadicElement, PadicModel};
use tdlc_core::model::shift::{ShiftElement, ShiftModel, Sided, ZBij};
use tdlc_core::model::tree::{TreeAut, TreeElement, TreeModel, Vertex};

pub struct Scenario {
    pub name: String,
    pub body: Body,
}

pub enum Body {
    Padic(PadicModel, Vec<(String, PadicElement)>),
    Shift(ShiftModel, Vec<(String, ShiftElement)>),
    Level(LevelModel, usize, Vec<(String, LevelAut)>),
    Tree(TreeModel, Vec<(String, TreeElement)>),
}

impl Scenario {
    /// The canonical text form; parsing it back yields an equal scenario.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario {}", self.name);
        match &self.body {
            Body::Padic(m, els) => {
                let _ = writeln!(out, "family padic p={} n={}", m.p, m.n);
                for (name, g) in els {
                    let _ = writeln!(out, "element {name} = {}", padic_to_text(g));
                }
            }
            Body::Shift(m, els) => {
                let sided = match m.sided {
                    Sided::One => "one",
                    Sided::Two => "two",
                };
                let _ = writeln!(out, "family shift alphabet={} sided={sided}", m.alphabet.name);
                for (name, g) in els {
                    let _ = writeln!(
                        out,
                        "element {name} = {}",
                        shift_to_text(&m.alphabet, g).unwrap_or_else(|_| "<unrepresentable>".into())
                    );
                }
            }
            Body::Level(_, d, els) => {
                let _ = writeln!(out, "family level badnub d={d}");
                for (name, g) in els {
                    let lit = match g {
                        LevelAut::Named(s) => s.clone(),
                        LevelAut::Inner(x) => match &self.body {
                            Body::Level(m, _, _) => m.group.names[*x as usize].clone(),
                            _ => unreachable!(),
                        },
                    };
                    let _ = writeln!(out, "element {name} = {lit}");
                }
            }
            Body::Tree(m, els) => {
                let qs: Vec<String> = m.qs.iter().map(|q| q.to_string()).collect();
                let _ = writeln!(out, "family tree q={}", qs.join(","));
                for (name, g) in els {
                    let _ = writeln!(out, "element {name} = {}", tree_to_text(g));
                }
            }
        }
        out
    }

    /// Captures a catalog fixture as a scenario.
    pub fn from_fixture(f: &Fixture) -> Scenario {
        let name = f.id().to_string();
        let body = match f {
            Fixture::Padic(g) => Body::Padic(
                g.family.clone(),
                g.elements.iter().map(|(n, e)| (n.to_string(), e.clone())).collect(),
            ),
            Fixture::Shift(g) => Body::Shift(
                g.family.clone(),
                g.elements.iter().map(|(n, e)| (n.to_string(), e.clone())).collect(),
            ),
            Fixture::Level(g) => Body::Level(
                g.family.clone(),
                g.family.chain.len() - 1,
                g.elements.iter().map(|(n, e)| (n.to_string(), e.clone())).collect(),
            ),
            Fixture::Tree(g) => Body::Tree(
                g.family.clone(),
                g.elements.iter().map(|(n, e)| (n.to_string(), e.clone())).collect(),
            ),
        };
        Scenario { name, body }
    }

    pub fn parse(text: &str) -> Result<Scenario> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| anyhow!("empty scenario"))?;
        let name = header
            .strip_prefix("scenario ")
            .ok_or_else(|| anyhow!("expected 'scenario <name>', got '{header}'"))?
            .trim()
            .to_string();
        let family_line = lines.next().ok_or_else(|| anyhow!("missing 'family' line"))?;
        let fam = family_line
            .strip_prefix("family ")
            .ok_or_else(|| anyhow!("expected 'family ...', got '{family_line}'"))?
            .trim();
        let element_lines: Vec<(String, String)> = lines
            .map(|l| {
                let rest = l
                    .strip_prefix("element ")
                    .ok_or_else(|| anyhow!("expected 'element <name> = <literal>', got '{l}'"))?;
                let (n, lit) = rest
                    .split_once('=')
                    .ok_or_else(|| anyhow!("missing '=' in element line '{l}'"))?;
                Ok((n.trim().to_string(), lit.trim().to_string()))
            })
            .collect::<Result<_>>()?;

        let (kind, args) = fam.split_once(' ').unwrap_or((fam, ""));
        let body = match kind {
            "padic" => {
                let p: u32 = kv(args, "p")?.parse().context("p")?;
                let n: usize = kv(args, "n")?.parse().context("n")?;
                let m = PadicModel::new(p, n);
                let els = element_lines
                    .iter()
                    .map(|(nm, lit)| Ok((nm.clone(), padic_from_text(&m, lit)?)))
                    .collect::<Result<_>>()?;
                Body::Padic(m, els)
            }
            "shift" => {
                let alphabet = group_by_name(&kv(args, "alphabet")?)?;
                let sided = match kv(args, "sided")?.as_str() {
                    "one" => Sided::One,
                    "two" => Sided::Two,
                    other => bail!("unknown sidedness '{other}'"),
                };
                let m = ShiftModel::new(alphabet, sided);
                let els = element_lines
                    .iter()
                    .map(|(nm, lit)| Ok((nm.clone(), shift_from_text(&m, lit)?)))
                    .collect::<Result<_>>()?;
                Body::Shift(m, els)
            }
            "level" => {
                let (sub, rest) = args.split_once(' ').unwrap_or((args, ""));
                if sub != "badnub" {
                    bail!("unknown tower family '{sub}'");
                }
                let d: usize = kv(rest, "d")?.parse().context("d")?;
                let m = badnub_model(d).map_err(|e| anyhow!(e.to_string()))?;
                let els = element_lines
                    .iter()
                    .map(|(nm, lit)| Ok((nm.clone(), level_from_text(&m, lit)?)))
                    .collect::<Result<_>>()?;
                Body::Level(m, d, els)
            }
            "tree" => {
                let qs: Vec<u8> = kv(args, "q")?
                    .split(',')
                    .map(|s| s.trim().parse().context("q"))
                    .collect::<Result<_>>()?;
                let m = TreeModel::new(qs).map_err(|e| anyhow!(e.to_string()))?;
                let els = element_lines
                    .iter()
                    .map(|(nm, lit)| Ok((nm.clone(), tree_from_text(&m, lit)?)))
                    .collect::<Result<_>>()?;
                Body::Tree(m, els)
            }
            other => bail!("unknown family '{other}'"),
        };
        Ok(Scenario { name, body })
    }
}

/// Extracts `key=value` from a space-separated argument list.
fn kv(args: &str, key: &str) -> Result<String> {
    args.split_whitespace()
        .find_map(|tok| tok.strip_prefix(&format!("{key}=")))
        .map(str::to_string)
        .ok_or_else(|| anyhow!("missing '{key}=' in '{args}'"))
}

fn group_by_name(name: &str) -> Result<FiniteGroupRef> {
    if let Some(n) = name.strip_prefix('C') {
        let n: u16 = n.parse().context("cyclic order")?;
        return Ok(FiniteGroupRef::new(FiniteGroup::cyclic(n)));
    }
    if let Some(d) = name.strip_prefix('S') {
        let d: usize = d.parse().context("symmetric degree")?;
        return Ok(FiniteGroupRef::new(FiniteGroup::symmetric(d)));
    }
    bail!("unknown alphabet group '{name}' (expected C<n> or S<n>)")
}

// ---- p-adic toral literals -------------------------------------------------

fn rat_to_text(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn rat_from_text(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().with_context(|| format!("numerator '{n}'"))?;
    let d: BigInt = d.parse().with_context(|| format!("denominator '{d}'"))?;
    if d == BigInt::from(0) {
        bail!("zero denominator in '{s}'");
    }
    Ok(BigRational::new(n, d))
}

fn padic_to_text(g: &PadicElement) -> String {
    let vs: Vec<String> = g.v.iter().map(rat_to_text).collect();
    let ts: Vec<String> = g.m.iter().map(|m| format!("t^{m}")).collect();
    let mut s = format!("({}; {}", vs.join(", "), ts.join(", "));
    if g.perm.iter().enumerate().any(|(i, &p)| i != p) {
        let ps: Vec<String> = g.perm.iter().map(|p| p.to_string()).collect();
        let _ = write!(s, "; perm=[{}]", ps.join(","));
    }
    s.push(')');
    s
}

fn padic_from_text(m: &PadicModel, lit: &str) -> Result<PadicElement> {
    let inner = lit
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| anyhow!("p-adic literal must be parenthesised: '{lit}'"))?;
    let parts: Vec<&str> = inner.split(';').map(str::trim).collect();
    if !(2..=3).contains(&parts.len()) {
        bail!("expected '(v...; t^m...)' with an optional perm part in '{lit}'");
    }
    let v: Vec<BigRational> =
        parts[0].split(',').map(rat_from_text).collect::<Result<_>>()?;
    let mv: Vec<i64> = parts[1]
        .split(',')
        .map(|t| {
            t.trim()
                .strip_prefix("t^")
                .ok_or_else(|| anyhow!("expected 't^<k>', got '{t}'"))?
                .parse()
                .context("exponent")
        })
        .collect::<Result<_>>()?;
    let perm: Vec<usize> = match parts.get(2) {
        Some(p) => {
            let body = p
                .strip_prefix("perm=[")
                .and_then(|s| s.strip_suffix(']'))
                .ok_or_else(|| anyhow!("expected 'perm=[...]', got '{p}'"))?;
            body.split(',')
                .map(|x| x.trim().parse().context("perm entry"))
                .collect::<Result<_>>()?
        }
        None => (0..m.n).collect(),
    };
    m.element(v, mv, perm).map_err(|e| anyhow!(e.to_string()))
}

// ---- shift literals --------------------------------------------------------

fn shift_to_text(alphabet: &FiniteGroup, g: &ShiftElement) -> Result<String> {
    if !g.act.except.is_empty() {
        bail!("only pure shift actions have a literal form");
    }
    let entries: Vec<String> = g
        .f
        .iter()
        .map(|(i, x)| format!("{i}:{}", alphabet.names[*x as usize]))
        .collect();
    Ok(format!("{{{}}} * s^{}", entries.join(", "), g.act.m))
}

fn shift_from_text(m: &ShiftModel, lit: &str) -> Result<ShiftElement> {
    let (conf, act) = lit
        .split_once('*')
        .ok_or_else(|| anyhow!("expected '{{...}} * s^<m>' in '{lit}'"))?;
    let conf = conf.trim();
    let shift: i64 = act
        .trim()
        .strip_prefix("s^")
        .ok_or_else(|| anyhow!("expected 's^<m>', got '{act}'"))?
        .parse()
        .context("shift power")?;
    let body = conf
        .strip_prefix('{')
        .and_then(|s| s.strip_suffix('}'))
        .ok_or_else(|| anyhow!("configuration must be braced: '{conf}'"))?;
    let mut f = BTreeMap::new();
    for entry in body.split(',').map(str::trim).filter(|e| !e.is_empty()) {
        let (pos, name) = entry
            .split_once(':')
            .ok_or_else(|| anyhow!("expected '<pos>:<letter>', got '{entry}'"))?;
        let pos: i64 = pos.trim().parse().context("position")?;
        let idx = m
            .alphabet
            .element_index(name.trim())
            .map_err(|e| anyhow!(e.to_string()))?;
        f.insert(pos, idx);
    }
    m.element(f, ZBij::shift(shift)).map_err(|e| anyhow!(e.to_string()))
}

// ---- finite tower literals -------------------------------------------------

fn level_from_text(m: &LevelModel, lit: &str) -> Result<LevelAut> {
    let lit = lit.trim();
    if m.auts.contains_key(lit) {
        return Ok(LevelAut::Named(lit.to_string()));
    }
    let idx = m.group.element_index(lit).map_err(|e| anyhow!(e.to_string()))?;
    Ok(LevelAut::Inner(idx))
}

// ---- tree product literals -------------------------------------------------

fn vertex_to_text(v: &Vertex) -> String {
    if v.branch.is_empty() {
        v.level.to_string()
    } else {
        let bs: Vec<String> = v.branch.iter().map(|b| b.to_string()).collect();
        format!("{}/{}", v.level, bs.join("."))
    }
}

fn vertex_from_text(s: &str) -> Result<Vertex> {
    let (level, branch) = match s.split_once('/') {
        Some((l, b)) => (
            l.trim().parse::<i64>().context("vertex level")?,
            b.split('.')
                .map(|x| x.trim().parse::<u8>().context("branch label"))
                .collect::<Result<Vec<u8>>>()?,
        ),
        None => (s.trim().parse::<i64>().context("vertex level")?, Vec::new()),
    };
    Ok(Vertex::new(level, branch))
}

fn comp_to_text(a: &TreeAut) -> String {
    if a.local.is_empty() && a.m == 0 {
        return "id".to_string();
    }
    if a.local.is_empty() {
        return format!("tau^{}", a.m);
    }
    let entries: Vec<String> = a
        .local
        .iter()
        .map(|(v, p)| {
            let ps: Vec<String> = p.iter().map(|x| x.to_string()).collect();
            format!("{}=[{}]", vertex_to_text(v), ps.join(","))
        })
        .collect();
    format!("portrait{{{}}} * tau^{}", entries.join(", "), a.m)
}

fn comp_from_text(s: &str) -> Result<TreeAut> {
    let s = s.trim();
    if s == "id" {
        return Ok(TreeAut::identity());
    }
    if let Some(power) = s.strip_prefix("tau^") {
        return Ok(TreeAut::translation(power.trim().parse().context("translation length")?));
    }
    let (portrait, power) = s
        .split_once('*')
        .ok_or_else(|| anyhow!("expected 'portrait{{...}} * tau^<m>' in '{s}'"))?;
    let m: i64 = power
        .trim()
        .strip_prefix("tau^")
        .ok_or_else(|| anyhow!("expected 'tau^<m>', got '{power}'"))?
        .parse()
        .context("translation length")?;
    let body = portrait
        .trim()
        .strip_prefix("portrait{")
        .and_then(|x| x.strip_suffix('}'))
        .ok_or_else(|| anyhow!("portrait must be braced: '{portrait}'"))?;
    let mut local = BTreeMap::new();
    // entries look like `0=[2,1,3]` or `0/1.2=[1,2,3]`; commas inside the
    // brackets are not separators, so split on `], ` boundaries
    for entry in body.split("],").map(str::trim).filter(|e| !e.is_empty()) {
        let entry = entry.strip_suffix(']').unwrap_or(entry);
        let (vtx, perm) = entry
            .split_once("=[")
            .ok_or_else(|| anyhow!("expected '<vertex>=[...]', got '{entry}'"))?;
        let perm: Vec<u8> = perm
            .split(',')
            .map(|x| x.trim().parse().context("label"))
            .collect::<Result<_>>()?;
        local.insert(vertex_from_text(vtx)?, perm);
    }
    let mut aut = TreeAut::portrait(local);
    aut.m = m;
    Ok(aut)
}

fn tree_to_text(g: &TreeElement) -> String {
    let ps: Vec<String> = g.perm.iter().map(|p| p.to_string()).collect();
    let mut s = format!("(perm=[{}]", ps.join(","));
    for (i, comp) in g.comps.iter().enumerate() {
        let _ = write!(s, "; C{}: {}", i + 1, comp_to_text(comp));
    }
    s.push(')');
    s
}

fn tree_from_text(m: &TreeModel, lit: &str) -> Result<TreeElement> {
    let inner = lit
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| anyhow!("tree literal must be parenthesised: '{lit}'"))?;
    let mut parts = inner.split(';').map(str::trim);
    let perm_part = parts.next().ok_or_else(|| anyhow!("missing perm part"))?;
    let perm: Vec<usize> = perm_part
        .strip_prefix("perm=[")
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| anyhow!("expected 'perm=[...]', got '{perm_part}'"))?
        .split(',')
        .map(|x| x.trim().parse().context("perm entry"))
        .collect::<Result<_>>()?;
    let mut comps = Vec::new();
    for (i, part) in parts.enumerate() {
        let want = format!("C{}:", i + 1);
        let body = part
            .strip_prefix(&want)
            .ok_or_else(|| anyhow!("expected '{want} ...', got '{part}'"))?;
        comps.push(comp_from_text(body)?);
    }
    m.element(perm, comps).map_err(|e| anyhow!(e.to_string()))
}

// ---- equality for round-trip checks ----------------------------------------

impl PartialEq for Body {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Body::Padic(a, x), Body::Padic(b, y)) => a.p == b.p && a.n == b.n && x == y,
            (Body::Shift(a, x), Body::Shift(b, y)) => {
                a.alphabet == b.alphabet && a.sided == b.sided && x == y
            }
            (Body::Level(_, d, x), Body::Level(_, e, y)) => d == e && x == y,
            (Body::Tree(a, x), Body::Tree(b, y)) => a.qs == b.qs && x == y,
            _ => false,
        }
    }
}
