//! Averaging operators of a finite action, evaluated without enumerating
//! spheres.
//!
//! Every operator here is a weighted sum of `f(g^{-1}x)` over a set of words
//! that is a union of "sectors": all words of some length extending a fixed
//! prefix, minus a few first letters after it. Sector sums come from the
//! recursion in `dp`. The brute-force versions enumerate words and exist as
//! oracles.

mod convergence;
mod dp;

pub use convergence::{convergence_report, ConvergenceReport, ConvergenceRow, TrendStats};

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::actions::{FiniteAction, Observable};
use crate::boundary::{
    boundary_action, horoball_elements, horosphere_elements, omega, omega_witness, psi_witness, BoundaryPrefix,
};
use crate::densities::{cylinder_integrals, eta_from_density, mu_from_density, sector_density, BoundaryDensity, SphereMeasure};
use crate::error::{Error, Result};
use crate::free_group::{FreeGroup, Letter, ReducedWord};
use crate::rational::{from_biguint, Rational};
use dp::{common_denominator, Exact, Levels, SumEngine};

/// Largest sphere the brute-force oracles will enumerate.
pub const DEFAULT_SPHERE_CAP: u128 = 1_000_000;

/// Exact or floating-point evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Exact,
    Float,
}

/// Values of one average at every point.
#[derive(Clone, Debug, PartialEq)]
pub enum Averages {
    Exact(Observable),
    /// Floating-point values; every consumer labels them approximate.
    Approx(Vec<f64>),
}

impl Averages {
    pub fn exact(&self) -> Option<&Observable> {
        match self {
            Averages::Exact(o) => Some(o),
            Averages::Approx(_) => None,
        }
    }

    pub fn is_approx(&self) -> bool {
        matches!(self, Averages::Approx(_))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Averages::Exact(o) => o.to_f64(),
            Averages::Approx(v) => v.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Averages::Exact(o) => o.len(),
            Averages::Approx(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AverageRow {
    pub n: usize,
    pub values: Averages,
}

/// One family of averages evaluated at several indices.
#[derive(Clone, Debug, PartialEq)]
pub struct AverageTable {
    pub family: String,
    pub rows: Vec<AverageRow>,
}

impl AverageTable {
    pub fn row(&self, n: usize) -> Option<&Averages> {
        self.rows.iter().find(|r| r.n == n).map(|r| &r.values)
    }

    pub fn is_approx(&self) -> bool {
        self.rows.iter().any(|r| r.values.is_approx())
    }
}

fn check_observable(action: &FiniteAction, len: usize) -> Result<()> {
    if len != action.len() {
        return Err(Error::InvalidParameter(format!(
            "observable has {len} values for {} points",
            action.len()
        )));
    }
    Ok(())
}

fn check_group(action: &FiniteAction, group: FreeGroup) -> Result<()> {
    if action.group() != group {
        return Err(Error::RankMismatch { expected: action.group().rank(), found: group.rank() });
    }
    Ok(())
}

fn sphere_scale(group: FreeGroup, n: usize) -> Rational {
    Rational::from_integer(1.into()) / from_biguint(&group.sphere_size(n))
}

/// Visits every `w` in `S_depth(e)` in lexicographic order together with the
/// table `x ↦ w^{-1}x`.
fn for_each_word_table(action: &FiniteAction, depth: usize, mut visit: impl FnMut(usize, &ReducedWord, &[u32])) {
    fn go(
        action: &FiniteAction,
        w: ReducedWord,
        table: Vec<u32>,
        depth: usize,
        count: &mut usize,
        visit: &mut dyn FnMut(usize, &ReducedWord, &[u32]),
    ) {
        if w.len() == depth {
            visit(*count, &w, &table);
            *count += 1;
            return;
        }
        for l in action.group().letters() {
            let Some(child) = w.extended(l) else { continue };
            let back = action.table(l.inverse());
            let next = table.iter().map(|&y| back[y as usize]).collect();
            go(action, child, next, depth, count, visit);
        }
    }
    let id = (0..action.len() as u32).collect();
    go(action, action.group().identity(), id, depth, &mut 0, &mut visit);
}

/// `Σ_g μ(g) f(g^{-1}x)` as raw engine sums; `weights` are the prefix-table
/// weights already converted by the caller.
fn weighted_sums<E: SumEngine>(engine: &mut E, action: &FiniteAction, mu: &SphereMeasure, weights: &[E::Value]) -> Vec<E::Value> {
    let d = mu.depth();
    let k = mu.radius() - d;
    engine.advance_to(k);
    let mut acc = vec![E::Value::zero(); action.len()];
    for_each_word_table(action, d, |i, w, back| {
        if mu.weights()[i].is_zero() {
            return;
        }
        let excluded: Vec<Letter> = match w.last() {
            Some(l) if k > 0 => vec![l.inverse()],
            _ => vec![],
        };
        for (x, a) in acc.iter_mut().enumerate() {
            let s = if d == 0 { engine.total(x) } else { engine.excluding(back[x] as usize, &excluded) };
            *a = a.clone() + weights[i].clone() * s;
        }
    });
    acc
}

fn weighted_with<E: SumEngine>(mut engine: E, action: &FiniteAction, mu: &SphereMeasure) -> Averages {
    let l = common_denominator(mu.weights());
    let weights: Vec<E::Value> = mu.weights().iter().map(|q| E::weight(q, &l)).collect();
    let sums = weighted_sums(&mut engine, action, mu, &weights);
    let scale = engine.unit() / Rational::from_integer(l);
    E::finish(sums, &scale)
}

fn float_engine<'a>(action: &'a FiniteAction, f: &Observable) -> Levels<'a, f64> {
    Levels::new(action, f.to_f64())
}

/// Weighted average in either mode.
pub fn weighted_average_mode(action: &FiniteAction, f: &Observable, mu: &SphereMeasure, mode: Mode) -> Result<Averages> {
    check_observable(action, f.len())?;
    check_group(action, mu.group())?;
    Ok(match mode {
        Mode::Exact => weighted_with(Exact::new(action, f), action, mu),
        Mode::Float => weighted_with(float_engine(action, f), action, mu),
    })
}

/// `μ(f)(x) = Σ_{g ∈ S_n(e)} f(g^{-1}x) μ(g)`, exact.
pub fn weighted_average(action: &FiniteAction, f: &Observable, mu: &SphereMeasure) -> Result<Observable> {
    match weighted_average_mode(action, f, mu, Mode::Exact)? {
        Averages::Exact(o) => Ok(o),
        Averages::Approx(_) => unreachable!(),
    }
}

/// Oracle for [`weighted_average`]: enumerates the sphere word by word.
pub fn weighted_bruteforce(action: &FiniteAction, f: &Observable, mu: &SphereMeasure, cap: u128) -> Result<Observable> {
    check_observable(action, f.len())?;
    check_group(action, mu.group())?;
    let group = action.group();
    let size = group.sphere_len(mu.radius()).unwrap_or(u128::MAX);
    if size > cap {
        return Err(Error::ResourceCap { what: "sphere enumeration", size, cap });
    }
    let mut acc = vec![Rational::zero(); action.len()];
    for g in group.sphere(mu.radius()) {
        let w = mu.weight(&g);
        if w.is_zero() {
            continue;
        }
        let inv = g.invert();
        for (x, a) in acc.iter_mut().enumerate() {
            *a += &w * &f[action.apply_word(&inv, x)];
        }
    }
    Ok(Observable::new(acc))
}

/// Uniform spherical averages `|S_n|^{-1} Σ_{|g|=n} f(g^{-1}x)` at the given
/// radii (increasing), from one pass of the recursion.
pub fn spherical_averages(action: &FiniteAction, f: &Observable, radii: &[usize], mode: Mode) -> Result<Vec<Averages>> {
    fn run<E: SumEngine>(mut engine: E, action: &FiniteAction, radii: &[usize]) -> Vec<Averages> {
        radii
            .iter()
            .map(|&n| {
                engine.advance_to(n);
                let sums = (0..action.len()).map(|x| engine.total(x)).collect();
                E::finish(sums, &(engine.unit() * sphere_scale(action.group(), n)))
            })
            .collect()
    }
    check_observable(action, f.len())?;
    if radii.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter("radii must be increasing".into()));
    }
    Ok(match mode {
        Mode::Exact => run(Exact::new(action, f), action, radii),
        Mode::Float => run(float_engine(action, f), action, radii),
    })
}

/// Exact uniform spherical averages for radii `0..=n_max`.
pub fn spherical_dp(action: &FiniteAction, f: &Observable, n_max: usize) -> Result<AverageTable> {
    let radii: Vec<usize> = (0..=n_max).collect();
    let values = spherical_averages(action, f, &radii, Mode::Exact)?;
    Ok(AverageTable {
        family: "spherical".into(),
        rows: radii.into_iter().zip(values).map(|(n, values)| AverageRow { n, values }).collect(),
    })
}

/// Oracle: `|S_n|^{-1} Σ_{|g|=n} f(g^{-1}x)` by enumeration.
pub fn sphere_bruteforce(action: &FiniteAction, f: &Observable, n: usize, cap: u128) -> Result<Observable> {
    weighted_bruteforce(action, f, &SphereMeasure::uniform(action.group(), n), cap)
}

/// Uniform average over words of length `n` that start with `w`.
pub fn sector_average(action: &FiniteAction, f: &Observable, w: &ReducedWord, n: usize) -> Result<Observable> {
    if n < w.len() {
        return Err(Error::InvalidParameter(format!("sector {w} needs radius >= {}", w.len())));
    }
    weighted_average(action, f, &mu_from_density(&sector_density(w)?, n)?)
}

/// `y = (ξ_1⋯ξ_n)^{-1}x` for every x, built one letter at a time.
struct PrefixWalk<'a> {
    action: &'a FiniteAction,
    back: Vec<u32>,
    len: usize,
}

impl<'a> PrefixWalk<'a> {
    fn new(action: &'a FiniteAction) -> Self {
        PrefixWalk { action, back: (0..action.len() as u32).collect(), len: 0 }
    }

    fn push(&mut self, l: Letter) {
        let t = self.action.table(l.inverse());
        for y in self.back.iter_mut() {
            *y = t[*y as usize];
        }
        self.len += 1;
    }
}

/// Sum of `f(h^{-1}x)` over `h ∈ H_ξ ∩ S_{2n}(e)`: with `h = ξ_1⋯ξ_n t_1⋯t_n`
/// these are the words of length `n` at `y = (ξ_1⋯ξ_n)^{-1}x` whose first
/// letter avoids `ξ_n^{-1}` and `ξ_{n+1}`.
fn horosphere_sums<E: SumEngine>(engine: &E, walk: &PrefixWalk, p: &BoundaryPrefix) -> Vec<E::Value> {
    let n = walk.len;
    debug_assert_eq!(engine.level(), n);
    if n == 0 {
        return (0..walk.back.len()).map(|x| engine.total(x)).collect();
    }
    let excluded = [p.letter(n).inverse(), p.letter(n + 1)];
    walk.back.iter().map(|&y| engine.excluding(y as usize, &excluded)).collect()
}

fn horosphere_count(group: FreeGroup, n: usize) -> BigInt {
    if n == 0 {
        return 1.into();
    }
    BigInt::from(group.num_letters() - 2) * BigInt::from(group.branching()).pow(n as u32 - 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum HoroKind {
    Sphere,
    Ball,
}

/// Horospherical sphere or ball averages at `n ∈ ns` (increasing), one pass.
fn horo_averages(
    action: &FiniteAction,
    f: &Observable,
    p: &BoundaryPrefix,
    ns: &[usize],
    kind: HoroKind,
    mode: Mode,
) -> Result<Vec<Averages>> {
    fn run<E: SumEngine>(mut engine: E, action: &FiniteAction, p: &BoundaryPrefix, ns: &[usize], kind: HoroKind) -> Vec<Averages> {
        let group = action.group();
        let mut walk = PrefixWalk::new(action);
        let mut ball: Vec<E::Value> = horosphere_sums(&engine, &walk, p);
        let mut out = Vec::with_capacity(ns.len());
        for &n in ns {
            while walk.len < n {
                walk.push(p.letter(walk.len + 1));
                engine.advance_to(walk.len);
                if kind == HoroKind::Ball {
                    let s = horosphere_sums(&engine, &walk, p);
                    ball = ball.into_iter().zip(s).map(|(a, b)| a + b).collect();
                }
            }
            let (sums, count) = match kind {
                HoroKind::Sphere => (horosphere_sums(&engine, &walk, p), horosphere_count(group, n)),
                HoroKind::Ball => (ball.clone(), BigInt::from(group.branching()).pow(n as u32)),
            };
            out.push(E::finish(sums, &(engine.unit() / Rational::from_integer(count))));
        }
        out
    }
    check_observable(action, f.len())?;
    check_group(action, p.group())?;
    if ns.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter("indices must be increasing".into()));
    }
    if let Some(&last) = ns.last() {
        p.require_depth(last + 1)?;
    }
    if kind == HoroKind::Sphere && ns.first() == Some(&0) {
        return Err(Error::InvalidParameter("horospherical averages need n >= 1".into()));
    }
    Ok(match mode {
        Mode::Exact => run(Exact::new(action, f), action, p, ns, kind),
        Mode::Float => run(float_engine(action, f), action, p, ns, kind),
    })
}

fn exact(a: Averages) -> Observable {
    match a {
        Averages::Exact(o) => o,
        Averages::Approx(_) => unreachable!("exact mode"),
    }
}

/// `((2r−2)(2r−1)^{n−1})^{-1} Σ_{h ∈ H_ξ ∩ S_{2n}(e)} f(h^{-1}x)`.
pub fn horospherical_average(action: &FiniteAction, f: &Observable, p: &BoundaryPrefix, n: usize) -> Result<Observable> {
    Ok(exact(horo_averages(action, f, p, &[n], HoroKind::Sphere, Mode::Exact)?.remove(0)))
}

/// `(2r−1)^{-n} Σ_{h ∈ H_ξ ∩ B_{2n}(e)} f(h^{-1}x)`.
pub fn ball_average(action: &FiniteAction, f: &Observable, p: &BoundaryPrefix, n: usize) -> Result<Observable> {
    Ok(exact(horo_averages(action, f, p, &[n], HoroKind::Ball, Mode::Exact)?.remove(0)))
}

fn average_over(action: &FiniteAction, f: &Observable, words: &[ReducedWord]) -> Observable {
    let k = Rational::from_integer(words.len().into());
    Observable::new(
        (0..action.len())
            .map(|x| words.iter().map(|h| f[action.apply_word(&h.invert(), x)].clone()).sum::<Rational>() / &k)
            .collect(),
    )
}

/// Oracle for [`horospherical_average`] through the explicit element list.
pub fn horospherical_bruteforce(action: &FiniteAction, f: &Observable, p: &BoundaryPrefix, n: usize) -> Result<Observable> {
    check_observable(action, f.len())?;
    Ok(average_over(action, f, &horosphere_elements(p, n)?))
}

/// Oracle for [`ball_average`].
pub fn ball_bruteforce(action: &FiniteAction, f: &Observable, p: &BoundaryPrefix, n: usize) -> Result<Observable> {
    check_observable(action, f.len())?;
    Ok(average_over(action, f, &horoball_elements(p, n)?))
}

/// The density-integrated horospherical average, computed two ways.
#[derive(Clone, Debug, PartialEq)]
pub struct BridgeAverages {
    /// `Σ_g f(g^{-1}x) η_{2n}^ψ(g)`.
    pub via_eta: Observable,
    /// `Σ_w ν(O_w) ψ(w) A_{2n}[H; f](x, w)` over cylinders fine enough to fix
    /// both `ψ` and the horosphere.
    pub via_horospheres: Observable,
}

pub fn boundary_integrated_average(
    action: &FiniteAction,
    f: &Observable,
    psi: &BoundaryDensity,
    n: usize,
) -> Result<BridgeAverages> {
    check_observable(action, f.len())?;
    check_group(action, psi.group())?;
    let via_eta = weighted_average(action, f, &eta_from_density(psi, n)?)?;

    let group = action.group();
    let depth = (n + 1).max(psi.depth());
    let fine = psi.refine(depth)?;
    let mut engine = Exact::new(action, f);
    engine.advance_to(n);
    let l = common_denominator(fine.values());
    let mut acc = vec![BigInt::zero(); action.len()];
    for (w, v) in fine.iter() {
        if v.is_zero() {
            continue;
        }
        let c = Exact::weight(v, &l);
        let stem = w.prefix(n).invert();
        let excluded = [w.letter(n).inverse(), w.letter(n + 1)];
        for (x, a) in acc.iter_mut().enumerate() {
            *a += &c * engine.excluding(action.apply_word(&stem, x), &excluded);
        }
    }
    let scale = engine.unit() * fine.cell_measure()
        / Rational::from_integer(l * horosphere_count(group, n));
    let via_horospheres = exact(Exact::finish(acc, &scale));
    Ok(BridgeAverages { via_eta, via_horospheres })
}

/// `max_n |A_n f|` over the rows with `n >= 1`: the maximal function
/// truncated to the computed range.
pub fn maximal_profile(table: &AverageTable) -> Result<Averages> {
    let rows: Vec<&AverageRow> = table.rows.iter().filter(|r| r.n >= 1).collect();
    let first = rows.first().ok_or_else(|| Error::InvalidParameter("no rows with n >= 1".into()))?;
    if table.is_approx() {
        let mut best: Vec<f64> = first.values.to_f64().iter().map(|v| v.abs()).collect();
        for r in &rows[1..] {
            for (b, v) in best.iter_mut().zip(r.values.to_f64()) {
                *b = b.max(v.abs());
            }
        }
        return Ok(Averages::Approx(best));
    }
    let mut best = first.values.exact().unwrap().abs().into_values();
    for r in &rows[1..] {
        for (b, v) in best.iter_mut().zip(r.values.exact().unwrap().iter()) {
            if v.abs() > *b {
                *b = v.abs();
            }
        }
    }
    Ok(Averages::Exact(Observable::new(best)))
}

/// `λ{x : values(x) > t}`.
pub fn level_set_mass(action: &FiniteAction, values: &[Rational], t: &Rational) -> Rational {
    values.iter().zip(action.weights()).filter(|(v, _)| *v > t).map(|(_, w)| w.clone()).sum()
}

/// `⟨π′(f_{x,2n}), ψ⟩ = Σ_{g ∈ S_{2n}(e)} f(g^{-1}x) ∫_{O_g} ψ dν`, at one point.
///
/// Words are grouped by their first `min(2n, depth ψ)` letters; inside a group
/// the integrals are equal and the sum of `f(g^{-1}x)` is a sector sum.
pub fn weak_pairing(action: &FiniteAction, f: &Observable, x: usize, psi: &BoundaryDensity, n: usize) -> Result<Rational> {
    check_observable(action, f.len())?;
    check_group(action, psi.group())?;
    if x >= action.len() {
        return Err(Error::InvalidParameter(format!("point {x} out of range")));
    }
    let radius = 2 * n;
    let d = radius.min(psi.depth());
    let integrals = if d == 0 { vec![psi.integral()] } else { cylinder_integrals(psi, d)? };
    let group = action.group();
    let per_word = if d == 0 {
        Rational::from_integer(1.into()) / from_biguint(&group.sphere_size(radius))
    } else {
        Rational::new(1.into(), BigInt::from(group.branching()).pow((radius - d) as u32))
    };
    let mut engine = Exact::new(action, f);
    engine.advance_to(radius - d);
    let mut total = Rational::zero();
    for (w, integral) in group.sphere(d).zip(&integrals) {
        if integral.is_zero() {
            continue;
        }
        let s = match w.last() {
            None => engine.total(x),
            Some(l) => {
                let excluded: &[Letter] = if radius > d { &[l.inverse()] } else { &[] };
                engine.excluding(action.apply_word(&w.invert(), x), excluded)
            }
        };
        total += integral * Rational::from_integer(s);
    }
    Ok(total * &per_word * engine.unit())
}

/// Oracle for [`weak_pairing`] by enumeration of `S_{2n}(e)`.
pub fn weak_pairing_bruteforce(
    action: &FiniteAction,
    f: &Observable,
    x: usize,
    psi: &BoundaryDensity,
    n: usize,
    cap: u128,
) -> Result<Rational> {
    let radius = 2 * n;
    let size = action.group().sphere_len(radius).unwrap_or(u128::MAX);
    if size > cap {
        return Err(Error::ResourceCap { what: "sphere enumeration", size, cap });
    }
    let depth = radius.max(psi.depth());
    let fine = cylinder_integrals(psi, depth)?;
    let block = if depth == radius { 1 } else { action.group().branching().pow((depth - radius) as u32) };
    let mut total = Rational::zero();
    for (i, g) in action.group().sphere(radius).enumerate() {
        let integral: Rational = if radius == 0 {
            fine.iter().sum()
        } else {
            fine[i * block..(i + 1) * block].iter().sum()
        };
        total += integral * &f[action.apply_word(&g.invert(), x)];
    }
    Ok(total)
}

/// The three lifts of the recurrence maps to `X × ∂F`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lift {
    /// `(x, ξ) ↦ (x, ω(ξ))`.
    Omega,
    /// `(x, ξ) ↦ (g_1x, g_1ξ)` with `g_1ξ = ω(ξ)`.
    Phi,
    /// `(x, ξ) ↦ (g_2x, g_2ξ)` with `g_2ξ = ψ(ξ)`.
    Psi,
}

pub fn recurrence_lift(
    action: &FiniteAction,
    x: usize,
    p: &BoundaryPrefix,
    n: usize,
    which: Lift,
) -> Result<(usize, BoundaryPrefix)> {
    check_group(action, p.group())?;
    let moved = |g: ReducedWord| -> Result<(usize, BoundaryPrefix)> {
        Ok((action.apply_word(&g, x), boundary_action(&g, p)?.0))
    };
    match which {
        Lift::Omega => Ok((x, omega(p, n)?)),
        Lift::Phi => moved(omega_witness(p, n)?),
        Lift::Psi => moved(psi_witness(p, n)?),
    }
}

/// An averaging family indexed by `n >= 1`, always over words of length `2n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FamilySpec {
    /// Uniform on `S_{2n}(e)`.
    Spherical,
    /// Uniform on the words of `S_{2n}(e)` starting with `w`.
    Sector(ReducedWord),
    /// `μ_{2n}^ψ`.
    MuPsi(BoundaryDensity),
    /// `η_{2n}^ψ`.
    EtaPsi(BoundaryDensity),
    /// Uniform on `H_ξ ∩ S_{2n}(e)`.
    Horospherical(BoundaryPrefix),
    /// Uniform on `H_ξ ∩ B_{2n}(e)`.
    Ball(BoundaryPrefix),
}

impl FamilySpec {
    pub fn label(&self) -> String {
        match self {
            FamilySpec::Spherical => "spherical".into(),
            FamilySpec::Sector(w) => format!("sector({w})"),
            FamilySpec::MuPsi(_) => "mu_psi".into(),
            FamilySpec::EtaPsi(_) => "eta_psi".into(),
            FamilySpec::Horospherical(p) => format!("horospherical({p})"),
            FamilySpec::Ball(p) => format!("ball({p})"),
        }
    }
}

/// Averages of a family at the indices `ns` (increasing, all `>= 1`).
pub fn family_table(action: &FiniteAction, f: &Observable, family: &FamilySpec, ns: &[usize], mode: Mode) -> Result<AverageTable> {
    if ns.first() == Some(&0) || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("family indices must be increasing and >= 1".into()));
    }
    let values: Vec<Averages> = match family {
        FamilySpec::Spherical => {
            let radii: Vec<usize> = ns.iter().map(|n| 2 * n).collect();
            spherical_averages(action, f, &radii, mode)?
        }
        FamilySpec::Horospherical(p) => horo_averages(action, f, p, ns, HoroKind::Sphere, mode)?,
        FamilySpec::Ball(p) => horo_averages(action, f, p, ns, HoroKind::Ball, mode)?,
        FamilySpec::Sector(w) => {
            let rho = sector_density(w)?;
            ns.iter()
                .map(|&n| {
                    if 2 * n < w.len() {
                        return Err(Error::InvalidParameter(format!("sector {w} needs 2n >= {}", w.len())));
                    }
                    weighted_average_mode(action, f, &mu_from_density(&rho, 2 * n)?, mode)
                })
                .collect::<Result<_>>()?
        }
        FamilySpec::MuPsi(psi) => ns
            .iter()
            .map(|&n| weighted_average_mode(action, f, &mu_from_density(psi, 2 * n)?, mode))
            .collect::<Result<_>>()?,
        FamilySpec::EtaPsi(psi) => ns
            .iter()
            .map(|&n| weighted_average_mode(action, f, &eta_from_density(psi, n)?, mode))
            .collect::<Result<_>>()?,
    };
    Ok(AverageTable {
        family: family.label(),
        rows: ns.iter().zip(values).map(|(&n, values)| AverageRow { n, values }).collect(),
    })
}

/// `∫ |A f| dλ`.
pub fn l1_mass(action: &FiniteAction, values: &[Rational]) -> Rational {
    values.iter().zip(action.weights()).map(|(v, w)| v.abs() * w).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio, to_f64};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn group(r: usize) -> FreeGroup {
        FreeGroup::new(r).unwrap()
    }

    fn random_prefix(rng: &mut ChaCha8Rng, g: FreeGroup, depth: usize) -> BoundaryPrefix {
        let mut letters: Vec<Letter> = Vec::new();
        while letters.len() < depth {
            let l = Letter::from_code(rng.gen_range(0..g.num_letters()));
            if letters.last().is_none_or(|p| p.inverse() != l) {
                letters.push(l);
            }
        }
        BoundaryPrefix::new(g.reduced(letters).unwrap()).unwrap()
    }

    #[test]
    fn dp_matches_bruteforce() {
        for r in 2..=3 {
            for seed in 0..4 {
                let a = FiniteAction::random(group(r), 15, seed).unwrap();
                let f = Observable::random(15, 7, &mut ChaCha8Rng::seed_from_u64(seed));
                let max = if r == 2 { 6 } else { 4 };
                let table = spherical_dp(&a, &f, max).unwrap();
                for n in 0..=max {
                    let brute = sphere_bruteforce(&a, &f, n, DEFAULT_SPHERE_CAP).unwrap();
                    assert_eq!(table.row(n).unwrap().exact().unwrap(), &brute, "r={r} n={n}");
                }
            }
        }
    }

    #[test]
    fn small_radius_by_hand() {
        let a = FiniteAction::random(group(2), 9, 3).unwrap();
        let f = Observable::random(9, 5, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(&sphere_bruteforce(&a, &f, 0, 10).unwrap(), &f);
        let one = sphere_bruteforce(&a, &f, 1, 10).unwrap();
        for x in 0..9 {
            let s: Rational = group(2).letters().map(|l| f[a.step(l.inverse(), x)].clone()).sum();
            assert_eq!(one[x], s / int(4));
        }
    }

    #[test]
    fn i128_overflow_switches_to_big_integers() {
        let a = FiniteAction::random(group(3), 11, 8).unwrap();
        let big = Rational::from_integer(BigInt::from(i64::MAX) * BigInt::from(1i64 << 40));
        let f = Observable::new((0..11).map(|x| if x % 2 == 0 { big.clone() } else { -big.clone() }).collect());
        let table = spherical_dp(&a, &f, 30).unwrap();
        assert_eq!(table.row(3).unwrap().exact().unwrap(), &sphere_bruteforce(&a, &f, 3, 1000).unwrap());
        let float = spherical_averages(&a, &f, &[30], Mode::Float).unwrap();
        let exact = table.row(30).unwrap().to_f64();
        for (x, y) in float[0].to_f64().iter().zip(exact) {
            assert!((x - y).abs() <= 1e-6 * to_f64(&big));
        }
    }

    #[test]
    fn constants_and_invariant_observables_are_fixed() {
        let a = FiniteAction::random_weighted(group(2), 14, 3, 1).unwrap();
        let c = Observable::constant(14, ratio(5, 3));
        let t = spherical_dp(&a, &c, 8).unwrap();
        assert!(t.rows.iter().all(|r| r.values.exact() == Some(&c)));
        let f = a.cond_exp_even(&Observable::random(14, 9, &mut ChaCha8Rng::seed_from_u64(2)));
        let t = spherical_dp(&a, &f, 8).unwrap();
        for n in (0..=8).step_by(2) {
            assert_eq!(t.row(n).unwrap().exact().unwrap(), &f);
        }
    }

    #[test]
    fn weighted_fast_path_matches_enumeration() {
        let g = group(2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for seed in 0..5 {
            let a = FiniteAction::random(g, 12, seed).unwrap();
            let f = Observable::random(12, 6, &mut rng);
            let psi = BoundaryDensity::random(g, rng.gen_range(1..=3), &mut rng).unwrap();
            for n in 0..=5 {
                let mu = mu_from_density(&psi, n).unwrap();
                assert_eq!(weighted_average(&a, &f, &mu).unwrap(), weighted_bruteforce(&a, &f, &mu, 10_000).unwrap());
            }
            for n in 1..=3 {
                let eta = eta_from_density(&psi, n).unwrap();
                assert_eq!(weighted_average(&a, &f, &eta).unwrap(), weighted_bruteforce(&a, &f, &eta, 10_000).unwrap());
            }
            let word = g.word_at(4, rng.gen_range(0..108));
            let delta = SphereMeasure::point_mass(&word).unwrap();
            let direct: Vec<Rational> = (0..12).map(|x| f[a.apply_word(&word.invert(), x)].clone()).collect();
            assert_eq!(weighted_average(&a, &f, &delta).unwrap().values(), &direct[..]);
            let uniform = SphereMeasure::uniform(g, 5);
            assert_eq!(&weighted_average(&a, &f, &uniform).unwrap(), spherical_dp(&a, &f, 5).unwrap().row(5).unwrap().exact().unwrap());
        }
    }

    #[test]
    fn sector_average_is_uniform_over_the_sector() {
        let g = group(2);
        let a = FiniteAction::random(g, 10, 5).unwrap();
        let f = Observable::random(10, 4, &mut ChaCha8Rng::seed_from_u64(5));
        let w = g.parse_word("a1").unwrap();
        for n in 1..=3 {
            let words: Vec<ReducedWord> = g.sphere(2 * n).filter(|h| h.first() == w.first()).collect();
            assert_eq!(sector_average(&a, &f, &w, 2 * n).unwrap(), average_over(&a, &f, &words));
        }
    }

    #[test]
    fn horospherical_matches_element_lists() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for r in 2..=3 {
            let g = group(r);
            let a = FiniteAction::random(g, 13, r as u64).unwrap();
            let f = Observable::random(13, 6, &mut rng);
            for _ in 0..5 {
                let p = random_prefix(&mut rng, g, 6);
                for n in 1..=4 {
                    assert_eq!(horospherical_average(&a, &f, &p, n).unwrap(), horospherical_bruteforce(&a, &f, &p, n).unwrap());
                    assert_eq!(ball_average(&a, &f, &p, n).unwrap(), ball_bruteforce(&a, &f, &p, n).unwrap());
                }
                let table = family_table(&a, &f, &FamilySpec::Ball(p.clone()), &[1, 2, 3], Mode::Exact).unwrap();
                assert_eq!(table.row(3).unwrap().exact().unwrap(), &ball_average(&a, &f, &p, 3).unwrap());
            }
        }
    }

    #[test]
    fn horospherical_reads_only_n_plus_one_letters() {
        let g = group(2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = FiniteAction::random(g, 11, 9).unwrap();
        let f = Observable::random(11, 6, &mut rng);
        for _ in 0..100 {
            let n = rng.gen_range(1..=4);
            let p = random_prefix(&mut rng, g, n + 4);
            let mut q = random_prefix(&mut rng, g, n + 4);
            let mut letters = p.word().letters()[..n + 1].to_vec();
            letters.extend_from_slice(&q.word().letters()[n + 1..]);
            if let Ok(w) = g.reduced(letters) {
                q = BoundaryPrefix::new(w).unwrap();
                assert_eq!(horospherical_average(&a, &f, &p, n).unwrap(), horospherical_average(&a, &f, &q, n).unwrap());
            }
        }
        let p = random_prefix(&mut rng, g, 3);
        assert!(matches!(horospherical_average(&a, &f, &p, 3), Err(Error::InsufficientDepth { .. })));
    }

    #[test]
    fn bridge_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for r in 2..=3 {
            let g = group(r);
            for seed in 0..3 {
                let a = FiniteAction::random(g, 20, seed).unwrap();
                let f = Observable::random(20, 9, &mut rng);
                let psi = BoundaryDensity::random(g, rng.gen_range(1..=3), &mut rng).unwrap();
                for n in 1..=3 {
                    let b = boundary_integrated_average(&a, &f, &psi, n).unwrap();
                    assert_eq!(b.via_eta, b.via_horospheres);
                }
            }
        }
        let g = group(2);
        let a = FiniteAction::random(g, 20, 1).unwrap();
        let f = Observable::random(20, 9, &mut rng);
        let b = boundary_integrated_average(&a, &f, &BoundaryDensity::uniform(g), 2).unwrap();
        assert_eq!(&b.via_eta, spherical_dp(&a, &f, 4).unwrap().row(4).unwrap().exact().unwrap());
    }

    #[test]
    fn maximal_profile_dominates() {
        let a = FiniteAction::random(group(2), 16, 3).unwrap();
        let f = Observable::random(16, 5, &mut ChaCha8Rng::seed_from_u64(9));
        let t = spherical_dp(&a, &f, 6).unwrap();
        let m = maximal_profile(&t).unwrap();
        let m = m.exact().unwrap();
        for r in t.rows.iter().filter(|r| r.n >= 1) {
            for (x, v) in r.values.exact().unwrap().iter().enumerate() {
                assert!(m[x] >= v.abs());
            }
        }
        let c = Observable::constant(16, int(-3));
        let mc = maximal_profile(&spherical_dp(&a, &c, 4).unwrap()).unwrap();
        assert!(mc.exact().unwrap().iter().all(|v| *v == int(3)));
        assert_eq!(level_set_mass(&a, mc.exact().unwrap(), &int(2)), int(1));
    }

    #[test]
    fn weak_pairing_three_ways() {
        let g = group(2);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for seed in 0..5 {
            let a = FiniteAction::random(g, 12, seed).unwrap();
            let f = Observable::random(12, 5, &mut rng);
            let psi = BoundaryDensity::random(g, rng.gen_range(1..=4), &mut rng).unwrap();
            for n in 0..=3 {
                let mu = weighted_average(&a, &f, &mu_from_density(&psi, 2 * n).unwrap()).unwrap();
                for x in 0..12 {
                    let w = weak_pairing(&a, &f, x, &psi, n).unwrap();
                    assert_eq!(w, mu[x]);
                    assert_eq!(w, weak_pairing_bruteforce(&a, &f, x, &psi, n, 10_000).unwrap());
                }
            }
            let c = Observable::constant(12, int(2));
            assert_eq!(weak_pairing(&a, &c, 0, &psi, 3).unwrap(), int(2));
        }
    }

    #[test]
    fn lifts() {
        let g = group(2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = FiniteAction::random(g, 10, 2).unwrap();
        for _ in 0..50 {
            let n = rng.gen_range(6..=9);
            let p = random_prefix(&mut rng, g, n + 4);
            let x = rng.gen_range(0..10);
            let (y, q) = recurrence_lift(&a, x, &p, n, Lift::Omega).unwrap();
            assert_eq!(y, x);
            assert_eq!(crate::boundary::boundary_metric(&p, &q).unwrap(), ratio(1, n as i64));
            let (y1, q1) = recurrence_lift(&a, x, &p, n, Lift::Phi).unwrap();
            assert_eq!(q1, q);
            assert_eq!(y1, a.apply_word(&omega_witness(&p, n).unwrap(), x));
            let (_, q2) = recurrence_lift(&a, x, &q, n, Lift::Psi).unwrap();
            assert_eq!(q2, crate::boundary::psi(&q, n).unwrap());
        }
    }
}
