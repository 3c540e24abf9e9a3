//! Finite-resolution versions of the maps `ω`, `ψω` used for automatic
//! ergodicity, and of the finite-order inner automorphisms of the horosphere
//! relation.

use std::collections::BTreeMap;

use super::BoundaryPrefix;
use crate::error::{Error, Result};
use crate::free_group::{FreeGroup, Letter, ReducedWord};

fn allowed_middle(g: FreeGroup, prev: Letter, next: Letter) -> Vec<Letter> {
    g.letters().filter(|&l| l != prev.inverse() && l != next.inverse()).collect()
}

/// The bijection `K` on the middle letter of a triple `(s_{n-1}, s_n, s_{n+1})`.
///
/// On reduced triples it is the cyclic successor of `s_n` inside
/// `D = S \ {s_{n-1}^{-1}, s_{n+1}^{-1}}` (canonical letter order), so the
/// output avoids `s_{n-1}^{-1}`, `s_n` and `s_{n+1}^{-1}`. Non-reduced triples
/// are left alone, which keeps `K` a bijection of `S^3`.
pub fn k_derangement(g: FreeGroup, prev: Letter, cur: Letter, next: Letter) -> Letter {
    let d = allowed_middle(g, prev, next);
    match d.iter().position(|&l| l == cur) {
        Some(i) => d[(i + 1) % d.len()],
        None => cur,
    }
}

pub fn k_derangement_inverse(g: FreeGroup, prev: Letter, cur: Letter, next: Letter) -> Letter {
    let d = allowed_middle(g, prev, next);
    match d.iter().position(|&l| l == cur) {
        Some(i) => d[(i + d.len() - 1) % d.len()],
        None => cur,
    }
}

fn check_n(p: &BoundaryPrefix, n: usize) -> Result<()> {
    if n <= 5 {
        return Err(Error::InvalidParameter(format!("these maps need n > 5, got {n}")));
    }
    p.require_depth(n + 1)
}

fn replace_nth(p: &BoundaryPrefix, n: usize, l: Letter) -> BoundaryPrefix {
    let mut letters = p.word().letters().to_vec();
    letters[n - 1] = l;
    BoundaryPrefix::new(p.group().reduced(letters).expect("K keeps triples reduced")).unwrap()
}

/// `ω`: replace coordinate `n` by `s'_n` from [`k_derangement`]. Depth is preserved.
pub fn omega(p: &BoundaryPrefix, n: usize) -> Result<BoundaryPrefix> {
    check_n(p, n)?;
    let s = |i| p.letter(i);
    Ok(replace_nth(p, n, k_derangement(p.group(), s(n - 1), s(n), s(n + 1))))
}

pub fn omega_inverse(p: &BoundaryPrefix, n: usize) -> Result<BoundaryPrefix> {
    check_n(p, n)?;
    let s = |i| p.letter(i);
    Ok(replace_nth(p, n, k_derangement_inverse(p.group(), s(n - 1), s(n), s(n + 1))))
}

/// `ψω(s) = (s_3, …, s_{n-1}, s'_n, s_n^{-1}, s'_n, s_{n+1}, …)`.
/// Reads `n + 1` letters; the output has the same depth as the input.
pub fn psi_omega(p: &BoundaryPrefix, n: usize) -> Result<BoundaryPrefix> {
    check_n(p, n)?;
    let s = |i| p.letter(i);
    let s_prime = k_derangement(p.group(), s(n - 1), s(n), s(n + 1));
    let mut letters: Vec<Letter> = (3..n).map(s).collect();
    letters.extend([s_prime, s(n).inverse(), s_prime]);
    letters.extend_from_slice(&p.word().letters()[n..]);
    BoundaryPrefix::new(p.group().reduced(letters).expect("ψω output is reduced"))
}

/// `ψ = (ψω) ∘ ω^{-1}`.
pub fn psi(p: &BoundaryPrefix, n: usize) -> Result<BoundaryPrefix> {
    psi_omega(&omega_inverse(p, n)?, n)
}

/// `g_1 = (s_1⋯s_{n-1}s'_n)(s_1⋯s_n)^{-1}`, so that `g_1 ξ = ω(ξ)` with unit
/// Radon–Nikodym derivative.
pub fn omega_witness(p: &BoundaryPrefix, n: usize) -> Result<ReducedWord> {
    let w = omega(p, n)?;
    w.word().prefix(n).times(&p.word().prefix(n).invert())
}

/// `g = (s_3⋯s_{n-1})s'_n(s_1⋯s_n)^{-1}`: `ψω(ξ) = g·ω(ξ)` and `P_∂²ω(ξ) = g·ξ`.
pub fn psi_omega_witness(p: &BoundaryPrefix, n: usize) -> Result<ReducedWord> {
    let w = omega(p, n)?;
    let head = w.word().letters()[2..n].to_vec();
    p.group().reduce(head)?.times(&p.word().prefix(n).invert())
}

/// `g_2` with `g_2 η = ψ(η)`, computed through `ω^{-1}(η)`.
pub fn psi_witness(p: &BoundaryPrefix, n: usize) -> Result<ReducedWord> {
    let pre = omega_inverse(p, n)?;
    // at ω(pre) = p the witness of ψω(pre) is g with g·ω(pre) = ψω(pre)
    psi_omega_witness(&pre, n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecurrenceMap {
    Omega,
    PsiOmega,
}

pub fn recurrence_map(p: &BoundaryPrefix, n: usize, which: RecurrenceMap) -> Result<BoundaryPrefix> {
    match which {
        RecurrenceMap::Omega => omega(p, n),
        RecurrenceMap::PsiOmega => psi_omega(p, n),
    }
}

/// `P_∂²`.
#[cfg(test)]
pub(crate) fn shift2(p: &BoundaryPrefix) -> Result<BoundaryPrefix> {
    super::shift(&super::shift(p)?)
}

/// A map on boundary points that reads only the first `order` letters and
/// keeps letter `order` fixed, given as a permutation `β` of depth-`order`
/// reduced words. Only the moved words are stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteOrderMap {
    group: FreeGroup,
    order: usize,
    moved: BTreeMap<ReducedWord, ReducedWord>,
}

impl FiniteOrderMap {
    pub fn identity(group: FreeGroup, order: usize) -> FiniteOrderMap {
        FiniteOrderMap { group, order, moved: BTreeMap::new() }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn group(&self) -> FreeGroup {
        self.group
    }

    pub fn is_identity(&self) -> bool {
        self.moved.is_empty()
    }

    /// `β` on one depth-`order` word.
    pub fn beta(&self, w: &ReducedWord) -> ReducedWord {
        self.moved.get(w).cloned().unwrap_or_else(|| w.clone())
    }

    /// Applies the induced boundary map to a prefix of depth `>= order`.
    pub fn apply(&self, p: &BoundaryPrefix) -> Result<BoundaryPrefix> {
        p.require_depth(self.order)?;
        let head = self.beta(&p.word().prefix(self.order));
        let mut letters = head.letters().to_vec();
        letters.extend_from_slice(&p.word().letters()[self.order..]);
        BoundaryPrefix::new(self.group.reduced(letters)?)
    }

    /// The full permutation table of `S_order(e)` in lexicographic order.
    pub fn table(&self) -> Vec<(ReducedWord, ReducedWord)> {
        self.group.sphere(self.order).map(|w| (self.beta(&w), w)).map(|(b, w)| (w, b)).collect()
    }
}

/// A finite-order inner automorphism of the horosphere relation mapping `p`
/// to `q`: the transposition of `π_m(p)` and `π_m(q)` on depth-`m` words.
///
/// `p` and `q` must share letter `m` and every letter beyond it that both
/// know; then they differ by an element with unit derivative.
pub fn build_inner_automorphism(p: &BoundaryPrefix, q: &BoundaryPrefix, m: usize) -> Result<FiniteOrderMap> {
    if p.group() != q.group() {
        return Err(Error::RankMismatch { expected: p.group().rank(), found: q.group().rank() });
    }
    if m == 0 {
        return Err(Error::InvalidParameter("order must be >= 1".into()));
    }
    p.require_depth(m)?;
    q.require_depth(m)?;
    let common = p.depth().min(q.depth());
    if let Some(i) = (m..=common).find(|&i| p.letter(i) != q.letter(i)) {
        return Err(Error::IncompatiblePair(format!("{p} and {q} differ at coordinate {i} >= {m}")));
    }
    let (a, b) = (p.word().prefix(m), q.word().prefix(m));
    let mut map = FiniteOrderMap::identity(p.group(), m);
    if a != b {
        map.moved.insert(a.clone(), b.clone());
        map.moved.insert(b, a);
    }
    Ok(map)
}
