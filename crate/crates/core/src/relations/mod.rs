//! Finite measured equivalence relations with Følner families.
//!
//! The ground set is `{0, …, M−1}`. A finite relation is invariant exactly
//! when its weights are constant on classes, so that is what validation
//! checks.

mod covering;
mod instances;

pub use covering::{
    check_covering, covering_select, doubling_constant, maximal_check, non_shrinking, CoveringCheck, MaximalCheck,
    NonShrinking,
};
pub use instances::{boundary_instance, random_instance, BoundaryInstance, RandomInstance, RandomInstanceConfig};

use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::rational::{fmt_fraction, parse_rational, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteRelation {
    class_of: Vec<usize>,
    classes: Vec<Vec<usize>>,
    weights: Vec<Rational>,
}

impl FiniteRelation {
    /// `class_ids[b]` is any label; points with equal labels are related.
    /// `weights = None` means uniform.
    pub fn new(class_ids: &[usize], weights: Option<Vec<Rational>>) -> Result<FiniteRelation> {
        let m = class_ids.len();
        if m == 0 {
            return Err(Error::InvalidRelation("empty ground set".into()));
        }
        let weights = weights.unwrap_or_else(|| vec![Rational::new(1.into(), m.into()); m]);
        if weights.len() != m {
            return Err(Error::InvalidRelation(format!("{} weights for {m} points", weights.len())));
        }
        if weights.iter().any(|w| w.is_negative()) {
            return Err(Error::InvalidRelation("negative weight".into()));
        }
        if !weights.iter().sum::<Rational>().is_one() {
            return Err(Error::InvalidRelation("weights do not sum to 1".into()));
        }
        let mut label: BTreeMap<usize, usize> = BTreeMap::new();
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut class_of = Vec::with_capacity(m);
        for (b, id) in class_ids.iter().enumerate() {
            let next = label.len();
            let c = *label.entry(*id).or_insert(next);
            if c == classes.len() {
                classes.push(Vec::new());
            }
            let first = classes[c].first().copied();
            if let Some(a) = first {
                if weights[a] != weights[b] {
                    return Err(Error::InvalidRelation(format!(
                        "weights differ inside a class: {a} has {}, {b} has {}",
                        weights[a], weights[b]
                    )));
                }
            }
            classes[c].push(b);
            class_of.push(c);
        }
        Ok(FiniteRelation { class_of, classes, weights })
    }

    pub fn len(&self) -> usize {
        self.class_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_of.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Class index of `b`; classes are numbered by first appearance.
    pub fn class_of(&self, b: usize) -> usize {
        self.class_of[b]
    }

    /// Sorted members of the class of `b`.
    pub fn class_members(&self, b: usize) -> &[usize] {
        &self.classes[self.class_of[b]]
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn weight(&self, b: usize) -> &Rational {
        &self.weights[b]
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    /// `ν(S)` for a set given as a membership mask.
    pub fn measure_of_mask(&self, mask: &[bool]) -> Rational {
        mask.iter().zip(&self.weights).filter(|(m, _)| **m).map(|(_, w)| w.clone()).sum()
    }

    /// `ν(S)` for a set given by its (distinct) members.
    pub fn measure(&self, set: &[usize]) -> Rational {
        set.iter().map(|&b| self.weights[b].clone()).sum()
    }

    /// `‖f‖_1 = Σ ν(b)|f(b)|`.
    pub fn l1_norm(&self, f: &[Rational]) -> Rational {
        f.iter().zip(&self.weights).map(|(v, w)| v.abs() * w).sum()
    }
}

/// `F_n(b)` for `n = 1..=n_max`, each a nonempty sorted subset of the class of `b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FolnerFamily {
    sets: Vec<Vec<Vec<usize>>>,
}

impl FolnerFamily {
    /// `sets[n − 1][b] = F_n(b)`.
    pub fn new(relation: &FiniteRelation, sets: Vec<Vec<Vec<usize>>>) -> Result<FolnerFamily> {
        if sets.is_empty() {
            return Err(Error::InvalidRelation("family needs n_max >= 1".into()));
        }
        let mut clean = Vec::with_capacity(sets.len());
        for (i, level) in sets.into_iter().enumerate() {
            if level.len() != relation.len() {
                return Err(Error::InvalidRelation(format!("level {} has {} sets", i + 1, level.len())));
            }
            let mut out = Vec::with_capacity(level.len());
            for (b, mut s) in level.into_iter().enumerate() {
                s.sort_unstable();
                s.dedup();
                if s.is_empty() {
                    return Err(Error::InvalidRelation(format!("F_{}({b}) is empty", i + 1)));
                }
                if let Some(&c) = s.iter().find(|&&c| c >= relation.len() || relation.class_of(c) != relation.class_of(b)) {
                    return Err(Error::InvalidRelation(format!("F_{}({b}) leaves the class at {c}", i + 1)));
                }
                out.push(s);
            }
            clean.push(out);
        }
        Ok(FolnerFamily { sets: clean })
    }

    /// `F_n(b) = {b}` for all `n`.
    pub fn singletons(relation: &FiniteRelation, n_max: usize) -> FolnerFamily {
        FolnerFamily { sets: vec![(0..relation.len()).map(|b| vec![b]).collect(); n_max] }
    }

    /// `F_n(b) = class(b)` for all `n`.
    pub fn full_classes(relation: &FiniteRelation, n_max: usize) -> FolnerFamily {
        FolnerFamily { sets: vec![(0..relation.len()).map(|b| relation.class_members(b).to_vec()).collect(); n_max] }
    }

    pub fn n_max(&self) -> usize {
        self.sets.len()
    }

    pub fn len(&self) -> usize {
        self.sets[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets[0].is_empty()
    }

    /// `F_n(b)`, `1 <= n <= n_max`.
    pub fn set(&self, n: usize, b: usize) -> &[usize] {
        &self.sets[n - 1][b]
    }

    /// True if `b ∈ F_n(b)` for every `b` and `n`.
    pub fn contains_centers(&self) -> bool {
        self.sets.iter().all(|level| level.iter().enumerate().all(|(b, s)| s.binary_search(&b).is_ok()))
    }
}

/// A class-preserving bijection of the ground set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InnerAutomorphism {
    map: Vec<usize>,
}

impl InnerAutomorphism {
    pub fn new(relation: &FiniteRelation, map: Vec<usize>) -> Result<InnerAutomorphism> {
        if map.len() != relation.len() {
            return Err(Error::InvalidRelation(format!("map has {} entries", map.len())));
        }
        let mut hit = vec![false; map.len()];
        for (b, &c) in map.iter().enumerate() {
            if c >= map.len() || std::mem::replace(&mut hit[c], true) {
                return Err(Error::InvalidRelation(format!("map is not a bijection at {b}")));
            }
            if relation.class_of(b) != relation.class_of(c) {
                return Err(Error::InvalidRelation(format!("{b} ↦ {c} leaves the class")));
            }
        }
        Ok(InnerAutomorphism { map })
    }

    pub fn identity(len: usize) -> InnerAutomorphism {
        InnerAutomorphism { map: (0..len).collect() }
    }

    pub fn apply(&self, b: usize) -> usize {
        self.map[b]
    }

    pub fn table(&self) -> &[usize] {
        &self.map
    }
}

/// Injective integer labels used to order sets of equal radius.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TieBreak(Vec<i64>);

impl TieBreak {
    pub fn new(labels: Vec<i64>) -> Result<TieBreak> {
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("tie-break labels must be distinct".into()));
        }
        Ok(TieBreak(labels))
    }

    /// `T(b) = b`.
    pub fn identity(len: usize) -> TieBreak {
        TieBreak((0..len as i64).collect())
    }

    pub fn label(&self, b: usize) -> i64 {
        self.0[b]
    }
}

fn check_len(relation: &FiniteRelation, len: usize) -> Result<()> {
    if len != relation.len() {
        return Err(Error::InvalidParameter(format!("{len} values for {} points", relation.len())));
    }
    Ok(())
}

/// `A_n[F; f](b) = |F_n(b)|^{-1} Σ_{c ∈ F_n(b)} f(c)`.
pub fn relation_average(relation: &FiniteRelation, family: &FolnerFamily, f: &[Rational], n: usize) -> Result<Vec<Rational>> {
    check_len(relation, f.len())?;
    if n == 0 || n > family.n_max() {
        return Err(Error::InvalidParameter(format!("index {n} outside 1..={}", family.n_max())));
    }
    Ok((0..relation.len())
        .map(|b| {
            let s = family.set(n, b);
            s.iter().map(|&c| f[c].clone()).sum::<Rational>() / Rational::from_integer(s.len().into())
        })
        .collect())
}

/// `E[f | invariant sets]`: the `ν`-weighted mean over each class.
pub fn invariant_cond_exp(relation: &FiniteRelation, f: &[Rational]) -> Result<Vec<Rational>> {
    check_len(relation, f.len())?;
    let means: Vec<Rational> = relation
        .classes()
        .iter()
        .map(|c| {
            let mass: Rational = c.iter().map(|&b| relation.weight(b).clone()).sum();
            if mass.is_zero() {
                return Rational::zero();
            }
            c.iter().map(|&b| relation.weight(b) * &f[b]).sum::<Rational>() / mass
        })
        .collect();
    Ok((0..relation.len()).map(|b| means[relation.class_of(b)].clone()).collect())
}

/// `|F_n(b) Δ φ(F_n(b))| / |F_n(b)|` for every `b`.
pub fn folner_defect(family: &FolnerFamily, phi: &InnerAutomorphism, n: usize) -> Vec<Rational> {
    (0..family.len())
        .map(|b| {
            let s = family.set(n, b);
            let mut image: Vec<usize> = s.iter().map(|&c| phi.apply(c)).collect();
            image.sort_unstable();
            let common = s.iter().filter(|c| image.binary_search(c).is_ok()).count();
            Rational::new((2 * (s.len() - common)).into(), s.len().into())
        })
        .collect()
}

/// Pointwise `(|A_n[f − f∘φ](b)|, 2‖f‖_∞ · defect(b))`; the first never
/// exceeds the second.
pub fn coboundary_bound(
    relation: &FiniteRelation,
    family: &FolnerFamily,
    f: &[Rational],
    phi: &InnerAutomorphism,
    n: usize,
) -> Result<Vec<(Rational, Rational)>> {
    check_len(relation, f.len())?;
    let g: Vec<Rational> = (0..f.len()).map(|b| &f[b] - &f[phi.apply(b)]).collect();
    let avg = relation_average(relation, family, &g, n)?;
    let sup = f.iter().map(|v| v.abs()).max().unwrap_or_else(Rational::zero);
    let two_sup = Rational::from_integer(2.into()) * sup;
    Ok(avg
        .into_iter()
        .zip(folner_defect(family, phi, n))
        .map(|(a, d)| (a.abs(), &two_sup * d))
        .collect())
}

/// Instance text: `points M classes K`, `class b k`, `nu b num/den`,
/// `folner n b: b1 b2 …`.
pub fn dump_instance(relation: &FiniteRelation, family: &FolnerFamily) -> String {
    let mut out = format!("points {} classes {}\n", relation.len(), relation.class_count());
    for b in 0..relation.len() {
        writeln!(out, "class {b} {}", relation.class_of(b)).unwrap();
    }
    for b in 0..relation.len() {
        writeln!(out, "nu {b} {}", fmt_fraction(relation.weight(b))).unwrap();
    }
    for n in 1..=family.n_max() {
        for b in 0..relation.len() {
            write!(out, "folner {n} {b}:").unwrap();
            for c in family.set(n, b) {
                write!(out, " {c}").unwrap();
            }
            out.push('\n');
        }
    }
    out
}

pub fn parse_instance(text: &str) -> Result<(FiniteRelation, FolnerFamily)> {
    let mut size: Option<(usize, usize)> = None;
    let mut class: Vec<Option<usize>> = Vec::new();
    let mut nu: Vec<Option<Rational>> = Vec::new();
    let mut sets: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        let num = |s: &str| {
            s.trim_end_matches(':')
                .parse::<usize>()
                .map_err(|_| Error::parse(line, raw.find(s).unwrap_or(0) + 1, format!("expected an integer, got {s:?}")))
        };
        match (toks[0], size) {
            ("points", None) => {
                if toks.len() != 4 || toks[2] != "classes" {
                    return Err(Error::parse(line, 1, "expected `points M classes K`"));
                }
                let m = num(toks[1])?;
                size = Some((m, num(toks[3])?));
                class = vec![None; m];
                nu = vec![None; m];
            }
            (_, None) => return Err(Error::parse(line, 1, "expected header `points M classes K` first")),
            ("class" | "nu", Some((m, k))) => {
                if toks.len() != 3 {
                    return Err(Error::parse(line, 1, format!("expected `{} b value`", toks[0])));
                }
                let b = num(toks[1])?;
                if b >= m {
                    return Err(Error::parse(line, 1, format!("point {b} out of range")));
                }
                if toks[0] == "class" {
                    let c = num(toks[2])?;
                    if c >= k {
                        return Err(Error::parse(line, 1, format!("class {c} out of range")));
                    }
                    class[b] = Some(c);
                } else {
                    nu[b] = Some(parse_rational(toks[2], line, raw.find(toks[2]).unwrap_or(0) + 1)?);
                }
            }
            ("folner", Some((m, _))) => {
                if toks.len() < 3 || !toks[2].ends_with(':') {
                    return Err(Error::parse(line, 1, "expected `folner n b: members`"));
                }
                let n = num(toks[1])?;
                let b = num(toks[2])?;
                if n == 0 || b >= m {
                    return Err(Error::parse(line, 1, "folner index out of range"));
                }
                let members = toks[3..].iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
                sets.insert((n, b), members);
            }
            (other, _) => return Err(Error::parse(line, 1, format!("unknown directive {other:?}"))),
        }
    }
    let (m, _) = size.ok_or_else(|| Error::parse(1, 1, "missing header"))?;
    let ids = class
        .into_iter()
        .enumerate()
        .map(|(b, c)| c.ok_or_else(|| Error::parse(1, 1, format!("missing class for {b}"))))
        .collect::<Result<Vec<_>>>()?;
    let weights = if nu.iter().all(Option::is_none) {
        None
    } else {
        Some(nu.into_iter().enumerate().map(|(b, w)| w.ok_or_else(|| Error::parse(1, 1, format!("missing nu for {b}")))).collect::<Result<Vec<_>>>()?)
    };
    let relation = FiniteRelation::new(&ids, weights)?;
    let n_max = sets.keys().map(|k| k.0).max().unwrap_or(0);
    let mut levels = vec![vec![Vec::new(); m]; n_max];
    for ((n, b), s) in sets {
        levels[n - 1][b] = s;
    }
    let family = FolnerFamily::new(&relation, levels)?;
    Ok((relation, family))
}
