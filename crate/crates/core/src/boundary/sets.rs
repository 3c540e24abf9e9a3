use super::BoundaryPrefix;
use crate::error::{Error, Result};
use crate::free_group::{Letter, ReducedWord};

/// Elements of `H_ξ ∩ S_{2n}(e)`: the words `ξ_1⋯ξ_n t_1⋯t_n` in reduced form
/// with `t_1 ≠ ξ_{n+1}`. Reads `n + 1` letters of `p`. There are
/// `(2r-2)(2r-1)^{n-1}` of them for `n >= 1`; `n = 0` gives `{e}`.
pub fn horosphere_elements(p: &BoundaryPrefix, n: usize) -> Result<Vec<ReducedWord>> {
    p.require_depth(n + 1)?;
    let g = p.group();
    if n == 0 {
        return Ok(vec![g.identity()]);
    }
    let stem = p.word().prefix(n);
    let blocked = [p.letter(n).inverse(), p.letter(n + 1)];
    let block = g.branching().pow(n as u32 - 1);
    let mut out = Vec::with_capacity((g.num_letters() - 2) * block);
    for t1 in g.letters().filter(|l| !blocked.contains(l)) {
        // reduced tails of length n with first letter t1 occupy one contiguous index block
        for idx in t1.code() * block..(t1.code() + 1) * block {
            let tail = g.word_at(n, idx);
            let mut letters = stem.letters().to_vec();
            letters.extend_from_slice(tail.letters());
            out.push(g.reduced(letters).expect("t_1 avoids ξ_n^{-1}"));
        }
    }
    Ok(out)
}

/// `H_ξ ∩ S_radius(e)`, rejecting odd radii (horospheres through `e` contain
/// only even-length words).
pub fn horosphere_at_radius(p: &BoundaryPrefix, radius: usize) -> Result<Vec<ReducedWord>> {
    if radius % 2 == 1 {
        return Err(Error::EvenRadiusRequired(radius));
    }
    horosphere_elements(p, radius / 2)
}

/// `H_ξ ∩ B_{2n}(e)`, which has `(2r-1)^n` elements.
pub fn horoball_elements(p: &BoundaryPrefix, n: usize) -> Result<Vec<ReducedWord>> {
    p.require_depth(n + 1)?;
    let mut out = Vec::new();
    for j in 0..=n {
        out.extend(horosphere_elements(p, j)?);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FolnerKind {
    Ball,
    Sphere,
}

/// Depth-`L` truncations of the horospherical ball `𝓑_{2n}(ξ)` or sphere
/// `𝓢_{2n}(ξ)`: all reduced `(t_1, …, t_L)` with `t_i = ξ_i` for `i > n`,
/// and for the sphere also `t_n ≠ ξ_n`. Sorted lexicographically.
pub fn folner_set(p: &BoundaryPrefix, n: usize, kind: FolnerKind, depth: usize) -> Result<Vec<BoundaryPrefix>> {
    if depth < n + 1 {
        return Err(Error::depth(n + 1, depth));
    }
    p.require_depth(depth)?;
    let g = p.group();
    let tail = &p.word().letters()[n..depth];
    if n == 0 {
        return Ok(vec![p.truncate(depth)?]);
    }
    // grow t_n, t_{n-1}, …, t_1 backwards from the fixed tail
    let mut heads: Vec<Vec<Letter>> = g
        .letters()
        .filter(|&l| l != tail[0].inverse())
        .filter(|&l| kind == FolnerKind::Ball || l != p.letter(n))
        .map(|l| vec![l])
        .collect();
    for _ in 1..n {
        heads = heads
            .into_iter()
            .flat_map(|h| {
                let next = *h.last().unwrap();
                g.letters().filter(move |&l| l != next.inverse()).map(move |l| {
                    let mut h2 = h.clone();
                    h2.push(l);
                    h2
                })
            })
            .collect();
    }
    let mut out: Vec<BoundaryPrefix> = heads
        .into_iter()
        .map(|mut h| {
            h.reverse();
            h.extend_from_slice(tail);
            BoundaryPrefix::new(g.reduced(h).expect("constructed reduced")).unwrap()
        })
        .collect();
    out.sort();
    Ok(out)
}
