//! The boundary of the free group at finite resolution.
//!
//! A boundary point is known only through a finite prefix `(ξ_1, …, ξ_L)`.
//! Every operation states how many letters it reads and fails with
//! [`Error::InsufficientDepth`] instead of guessing at unseen letters.

mod maps;
mod sets;

pub use maps::{
    build_inner_automorphism, k_derangement, k_derangement_inverse, omega, omega_inverse, omega_witness,
    recurrence_map, psi, psi_omega, psi_omega_witness, psi_witness, FiniteOrderMap, RecurrenceMap,
};
pub use sets::{folner_set, horoball_elements, horosphere_at_radius, horosphere_elements, FolnerKind};

use num_bigint::BigInt;
use num_traits::One;
use std::fmt;

use crate::error::{Error, Result};
use crate::free_group::{FreeGroup, Letter, ReducedWord};
use crate::rational::{pow_i, Rational};

/// A boundary point known to depth `L >= 1`, or equivalently the cylinder
/// `O_p` of all boundary points starting with these letters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundaryPrefix {
    word: ReducedWord,
}

impl BoundaryPrefix {
    pub fn new(word: ReducedWord) -> Result<BoundaryPrefix> {
        if word.is_empty() {
            return Err(Error::depth(1, 0));
        }
        Ok(BoundaryPrefix { word })
    }

    pub fn parse(group: FreeGroup, text: &str) -> Result<BoundaryPrefix> {
        BoundaryPrefix::new(group.parse_word(text)?)
    }

    pub fn depth(&self) -> usize {
        self.word.len()
    }

    pub fn word(&self) -> &ReducedWord {
        &self.word
    }

    pub fn into_word(self) -> ReducedWord {
        self.word
    }

    pub fn group(&self) -> FreeGroup {
        self.word.group()
    }

    /// `ξ_i`, 1-based.
    pub fn letter(&self, i: usize) -> Letter {
        self.word.letter(i)
    }

    pub fn require_depth(&self, needed: usize) -> Result<()> {
        if self.depth() < needed {
            return Err(Error::depth(needed, self.depth()));
        }
        Ok(())
    }

    /// `π_L`: the first `L` letters.
    pub fn truncate(&self, depth: usize) -> Result<BoundaryPrefix> {
        self.require_depth(depth)?;
        BoundaryPrefix::new(self.word.prefix(depth))
    }

    /// True if `self` extends `w`, i.e. the point lies in the cylinder `O_w`.
    pub fn starts_with(&self, w: &ReducedWord) -> bool {
        self.word.letters().starts_with(w.letters())
    }
}

impl fmt::Display for BoundaryPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.word.fmt(f)
    }
}

/// `ν(O_p) = (2r)^{-1}(2r-1)^{-|p|+1}`, and `ν(O_e) = 1`.
pub fn cylinder_measure(p: &ReducedWord) -> Rational {
    let g = p.group();
    if p.is_empty() {
        return Rational::one();
    }
    Rational::new(BigInt::one(), BigInt::from(g.num_letters())) * pow_i(g.branching() as u64, 1 - p.len() as i64)
}

/// `O(stem) − O(stem · excluded)`; for `g = t_1⋯t_{2n}` this is the set of
/// boundary points on whose horosphere through `e` the element `g` lies.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AnnulusSet {
    stem: ReducedWord,
    excluded: Letter,
}

impl AnnulusSet {
    pub fn new(stem: ReducedWord, excluded: Letter) -> Result<AnnulusSet> {
        if stem.extended(excluded).is_none() {
            return Err(Error::InvalidParameter(format!("{stem}·{excluded} is not reduced")));
        }
        Ok(AnnulusSet { stem, excluded })
    }

    /// The annulus `O′(g)` of an even-length word `g = t_1⋯t_{2n}`, `n >= 1`.
    pub fn of_even_word(g: &ReducedWord) -> Result<AnnulusSet> {
        if g.is_empty() || g.len() % 2 == 1 {
            return Err(Error::EvenRadiusRequired(g.len()));
        }
        let n = g.len() / 2;
        AnnulusSet::new(g.prefix(n), g.letter(n + 1))
    }

    pub fn parse(group: FreeGroup, text: &str) -> Result<AnnulusSet> {
        let (stem, excl) = text
            .split_once('!')
            .ok_or_else(|| Error::parse(1, 1, format!("expected stem!letter, got {text:?}")))?;
        let stem = group.parse_word(stem)?;
        let excl = group.parse_word(excl)?;
        if excl.len() != 1 {
            return Err(Error::parse(1, text.find('!').unwrap_or(0) + 2, "excluded part must be one letter"));
        }
        AnnulusSet::new(stem, excl.letter(1))
    }

    pub fn stem(&self) -> &ReducedWord {
        &self.stem
    }

    pub fn excluded(&self) -> Letter {
        self.excluded
    }

    pub fn excluded_cylinder(&self) -> ReducedWord {
        self.stem.extended(self.excluded).expect("checked at construction")
    }

    pub fn measure(&self) -> Rational {
        cylinder_measure(&self.stem) - cylinder_measure(&self.excluded_cylinder())
    }

    /// Membership of a boundary point; reads `|stem| + 1` letters.
    pub fn contains(&self, p: &BoundaryPrefix) -> Result<bool> {
        let n = self.stem.len();
        p.require_depth(n + 1)?;
        Ok(p.starts_with(&self.stem) && p.letter(n + 1) != self.excluded)
    }
}

impl fmt::Display for AnnulusSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}!{}", self.stem, self.excluded)
    }
}

fn same_group(a: FreeGroup, b: FreeGroup) -> Result<()> {
    if a != b {
        return Err(Error::RankMismatch { expected: a.rank(), found: b.rank() });
    }
    Ok(())
}

/// Cancellation count `k` of `g = t_1⋯t_n` against `ξ`: the largest `k <= n`
/// with `ξ_i^{-1} = t_{n+1-i}` for all `i <= k`.
pub fn cancellation(g: &ReducedWord, p: &BoundaryPrefix) -> Result<usize> {
    same_group(g.group(), p.group())?;
    let n = g.len();
    let mut k = 0;
    while k < n {
        if k == p.depth() {
            return Err(Error::depth(k + 1, p.depth()));
        }
        if p.letter(k + 1).inverse() == g.letter(n - k) {
            k += 1;
        } else {
            break;
        }
    }
    Ok(k)
}

/// `g · ξ = (t_1, …, t_{n-k}, ξ_{k+1}, …, ξ_L)` together with `k`.
pub fn boundary_action(g: &ReducedWord, p: &BoundaryPrefix) -> Result<(BoundaryPrefix, usize)> {
    let k = cancellation(g, p)?;
    let n = g.len();
    if k == p.depth() {
        // everything known about ξ cancelled; the image has no known letters
        return Err(Error::depth(p.depth() + 1, p.depth()));
    }
    let mut letters = Vec::with_capacity(n + p.depth() - 2 * k);
    letters.extend_from_slice(&g.letters()[..n - k]);
    letters.extend_from_slice(&p.word().letters()[k..]);
    let word = g.group().reduced(letters).expect("boundary action preserves reducedness");
    Ok((BoundaryPrefix { word }, k))
}

/// `(dν∘g/dν)(ξ) = (2r-1)^{2k-n}`.
pub fn radon_nikodym(g: &ReducedWord, p: &BoundaryPrefix) -> Result<Rational> {
    let k = cancellation(g, p)? as i64;
    Ok(pow_i(g.group().branching() as u64, 2 * k - g.len() as i64))
}

/// `h_ξ(g) = m - n` for the split `g = ξ_1⋯ξ_n t_1⋯t_m` with `t_1 ≠ ξ_{n+1}`.
pub fn horofunction(p: &BoundaryPrefix, g: &ReducedWord) -> Result<i64> {
    same_group(g.group(), p.group())?;
    p.require_depth(g.len())?;
    let common = g
        .letters()
        .iter()
        .zip(p.word().letters())
        .take_while(|(a, b)| a == b)
        .count();
    Ok(g.len() as i64 - 2 * common as i64)
}

/// `d_∂(ξ, η) = 1/n` where `n` is the first position at which they differ.
pub fn boundary_metric(p: &BoundaryPrefix, q: &BoundaryPrefix) -> Result<Rational> {
    same_group(p.group(), q.group())?;
    let depth = p.depth().min(q.depth());
    (1..=depth)
        .find(|&i| p.letter(i) != q.letter(i))
        .map(|i| Rational::new(BigInt::one(), BigInt::from(i)))
        .ok_or_else(|| Error::depth(depth + 1, depth))
}

/// `P_∂(ξ) = ξ_1^{-1} ξ`: drop the first letter.
pub fn shift(p: &BoundaryPrefix) -> Result<BoundaryPrefix> {
    p.require_depth(2)?;
    Ok(BoundaryPrefix { word: p.word().suffix_from(1) })
}
