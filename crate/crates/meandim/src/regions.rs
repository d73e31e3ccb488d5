//! Exact region algebra with two backends.
//!
//! - Cylinder backend: finite unions of cylinder sets in a subshift,
//!   normalized to a common coordinate span. Cylinders are clopen, so
//!   closure = interior = the set itself and the boundary is empty; every
//!   Boolean operation is an exact finite set operation on window words.
//! - Interval backend: finite unions of half-open rational intervals on the
//!   circle `[0,1)`, for the rotation surrogate. Boundaries are the finite
//!   endpoint sets, tracked exactly.
//!
//! All operations are pure; a region never mutates.

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::dynsys::{parse_word, word_to_string, SymbolicSystem, SystemKind};
use crate::error::{Error, Result};
use crate::rat::{parse_rat, rat_to_string, wrap_unit, Rat};

/// A finite-complexity subset of the system's space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Region {
    /// `{x : x[lo..lo+len) ∈ words}`; canonical form keeps `words` a subset
    /// of the language at length `len`. The empty region is `len = 0`,
    /// `words = ∅`.
    Cylinders { lo: i64, len: usize, words: BTreeSet<Vec<u8>> },
    /// Sorted, disjoint, non-adjacent half-open intervals inside `[0,1)`.
    Intervals { intervals: Vec<(Rat, Rat)> },
}

impl Region {
    /// The empty region (cylinder backend).
    pub fn empty() -> Region {
        Region::Cylinders { lo: 0, len: 0, words: BTreeSet::new() }
    }

    /// A single cylinder `[word]@offset` (unvalidated against a language
    /// until it meets an operation that needs the system).
    pub fn cylinder(word: &[u8], offset: i64) -> Region {
        let mut words = BTreeSet::new();
        words.insert(word.to_vec());
        Region::Cylinders { lo: offset, len: word.len(), words }
    }

    /// Union of cylinders `[w]@o`, normalized to their common span.
    pub fn from_cylinders(sys: &SymbolicSystem, cyls: &[(Vec<u8>, i64)]) -> Result<Region> {
        if cyls.is_empty() {
            return Ok(Region::empty());
        }
        let lo = cyls.iter().map(|(_, o)| *o).min().unwrap();
        let hi = cyls.iter().map(|(w, o)| o + w.len() as i64).max().unwrap();
        let mut acc = Region::empty();
        for (w, o) in cyls {
            if w.is_empty() {
                return Err(Error::Malformed("empty cylinder word".into()));
            }
            let r = Region::cylinder(w, *o);
            acc = acc.union(&r, sys)?;
        }
        // ensure the canonical span is the full hull even if unions shrank it
        acc.expand_to(sys, lo, hi)
    }

    /// Whole space as the union of all length-1 cylinders at offset 0.
    pub fn whole_space(sys: &SymbolicSystem) -> Result<Region> {
        match &sys.kind {
            SystemKind::RotationSurrogate { .. } => {
                Ok(Region::Intervals { intervals: vec![(Rat::zero(), Rat::one())] })
            }
            _ => {
                let words: BTreeSet<Vec<u8>> = sys.language(1)?.iter().cloned().collect();
                Ok(Region::Cylinders { lo: 0, len: 1, words })
            }
        }
    }

    /// Union of half-open intervals, canonicalized (wrapped into `[0,1)`,
    /// sorted, merged).
    pub fn intervals(list: Vec<(Rat, Rat)>) -> Result<Region> {
        let mut pieces: Vec<(Rat, Rat)> = Vec::new();
        for (a, b) in list {
            if a >= b {
                return Err(Error::Malformed("interval endpoints must satisfy a < b".into()));
            }
            if &b - &a >= Rat::one() {
                return Ok(Region::Intervals { intervals: vec![(Rat::zero(), Rat::one())] });
            }
            let a2 = wrap_unit(&a);
            let b2 = &a2 + (&b - &a);
            if b2 <= Rat::one() {
                pieces.push((a2, b2));
            } else {
                pieces.push((a2, Rat::one()));
                pieces.push((Rat::zero(), b2 - Rat::one()));
            }
        }
        Ok(Region::Intervals { intervals: merge_intervals(pieces) })
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Region::Cylinders { words, .. } => words.is_empty(),
            Region::Intervals { intervals } => intervals.is_empty(),
        }
    }

    /// Coordinate span `[lo, hi)` of the cylinder backend; `None` for the
    /// empty region or the interval backend.
    pub fn span(&self) -> Option<(i64, i64)> {
        match self {
            Region::Cylinders { lo, len, words } if !words.is_empty() => {
                Some((*lo, lo + *len as i64))
            }
            _ => None,
        }
    }

    /// All words `w` of length `hi − lo` such that a configuration matching
    /// `w` on `[lo, hi)` lies in the region. Requires the span to contain
    /// this region's span.
    pub fn expanded_words(
        &self,
        sys: &SymbolicSystem,
        lo: i64,
        hi: i64,
    ) -> Result<BTreeSet<Vec<u8>>> {
        let Region::Cylinders { lo: rlo, len, words } = self else {
            return Err(Error::UnsupportedBackend("expanded_words needs cylinders".into()));
        };
        if words.is_empty() {
            return Ok(BTreeSet::new());
        }
        let (rlo, rhi) = (*rlo, rlo + *len as i64);
        if lo > rlo || hi < rhi || lo >= hi {
            return Err(Error::MismatchedWindows(format!(
                "span [{lo},{hi}) does not contain region span [{rlo},{rhi})"
            )));
        }
        let total = (hi - lo) as usize;
        let off = (rlo - lo) as usize;
        let lang = sys.language(total)?;
        Ok(lang
            .iter()
            .filter(|w| words.contains(&w[off..off + len]))
            .cloned()
            .collect())
    }

    /// Re-normalize this cylinder region to the given (larger) span.
    pub fn expand_to(&self, sys: &SymbolicSystem, lo: i64, hi: i64) -> Result<Region> {
        if self.is_empty() {
            return Ok(Region::Cylinders { lo, len: (hi - lo) as usize, words: BTreeSet::new() });
        }
        let words = self.expanded_words(sys, lo, hi)?;
        Ok(Region::Cylinders { lo, len: (hi - lo) as usize, words })
    }

    fn common_span(&self, other: &Region) -> Option<(i64, i64)> {
        match (self.span(), other.span()) {
            (Some((a, b)), Some((c, d))) => Some((a.min(c), b.max(d))),
            (Some(s), None) | (None, Some(s)) => Some(s),
            (None, None) => None,
        }
    }

    pub fn union(&self, other: &Region, sys: &SymbolicSystem) -> Result<Region> {
        match (self, other) {
            (Region::Intervals { intervals: a }, Region::Intervals { intervals: b }) => {
                let mut all = a.clone();
                all.extend(b.iter().cloned());
                Ok(Region::Intervals { intervals: merge_intervals(all) })
            }
            (Region::Cylinders { .. }, Region::Cylinders { .. }) => {
                let Some((lo, hi)) = self.common_span(other) else {
                    return Ok(Region::empty());
                };
                let mut w = self.expand_to(sys, lo, hi)?.take_words();
                w.extend(other.expand_to(sys, lo, hi)?.take_words());
                Ok(canonical_cylinders(lo, hi, w))
            }
            _ => Err(Error::UnsupportedBackend("mixed region backends".into())),
        }
    }

    pub fn intersect(&self, other: &Region, sys: &SymbolicSystem) -> Result<Region> {
        match (self, other) {
            (Region::Intervals { intervals: a }, Region::Intervals { intervals: b }) => {
                let mut out = Vec::new();
                for (a1, b1) in a {
                    for (a2, b2) in b {
                        let lo = a1.clone().max(a2.clone());
                        let hi = b1.clone().min(b2.clone());
                        if lo < hi {
                            out.push((lo, hi));
                        }
                    }
                }
                Ok(Region::Intervals { intervals: merge_intervals(out) })
            }
            (Region::Cylinders { .. }, Region::Cylinders { .. }) => {
                if self.is_empty() || other.is_empty() {
                    return Ok(Region::empty());
                }
                let (lo, hi) = self.common_span(other).unwrap();
                let a = self.expand_to(sys, lo, hi)?.take_words();
                let b = other.expand_to(sys, lo, hi)?.take_words();
                let w: BTreeSet<Vec<u8>> = a.intersection(&b).cloned().collect();
                Ok(canonical_cylinders(lo, hi, w))
            }
            _ => Err(Error::UnsupportedBackend("mixed region backends".into())),
        }
    }

    pub fn subtract(&self, other: &Region, sys: &SymbolicSystem) -> Result<Region> {
        match (self, other) {
            (Region::Intervals { intervals: a }, Region::Intervals { .. }) => {
                let comp = other.complement(sys)?;
                Region::Intervals { intervals: a.clone() }.intersect(&comp, sys)
            }
            (Region::Cylinders { .. }, Region::Cylinders { .. }) => {
                if self.is_empty() {
                    return Ok(Region::empty());
                }
                if other.is_empty() {
                    return Ok(self.clone());
                }
                let (lo, hi) = self.common_span(other).unwrap();
                let a = self.expand_to(sys, lo, hi)?.take_words();
                let b = other.expand_to(sys, lo, hi)?.take_words();
                let w: BTreeSet<Vec<u8>> = a.difference(&b).cloned().collect();
                Ok(canonical_cylinders(lo, hi, w))
            }
            _ => Err(Error::UnsupportedBackend("mixed region backends".into())),
        }
    }

    pub fn complement(&self, sys: &SymbolicSystem) -> Result<Region> {
        match self {
            Region::Intervals { intervals } => {
                let mut out = Vec::new();
                let mut cursor = Rat::zero();
                for (a, b) in intervals {
                    if &cursor < a {
                        out.push((cursor.clone(), a.clone()));
                    }
                    cursor = b.clone();
                }
                if cursor < Rat::one() {
                    out.push((cursor, Rat::one()));
                }
                Ok(Region::Intervals { intervals: merge_intervals(out) })
            }
            Region::Cylinders { .. } => {
                if self.is_empty() {
                    return Region::whole_space(sys);
                }
                let (lo, hi) = self.span().unwrap();
                let words = self.expanded_words(sys, lo, hi)?;
                let all: BTreeSet<Vec<u8>> =
                    sys.language((hi - lo) as usize)?.iter().cloned().collect();
                let w: BTreeSet<Vec<u8>> = all.difference(&words).cloned().collect();
                Ok(canonical_cylinders(lo, hi, w))
            }
        }
    }

    /// Exact image under `T^i` (shift: `[w]@lo ↦ [w]@(lo+i)`; rotation:
    /// rotate every interval by `i · angle`).
    pub fn translate(&self, i: i64, sys: &SymbolicSystem) -> Result<Region> {
        match self {
            Region::Cylinders { lo, len, words } => {
                Ok(Region::Cylinders { lo: lo + i, len: *len, words: words.clone() })
            }
            Region::Intervals { intervals } => {
                if let SystemKind::RotationSurrogate { angle, .. } = &sys.kind {
                    let delta = angle * Rat::from_integer(i.into());
                    let shifted: Vec<(Rat, Rat)> = intervals
                        .iter()
                        .map(|(a, b)| (a + &delta, b + &delta))
                        .collect();
                    if shifted.is_empty() {
                        return Ok(self.clone());
                    }
                    Region::intervals(shifted)
                } else {
                    Err(Error::UnsupportedBackend(
                        "interval regions need a rotation system".into(),
                    ))
                }
            }
        }
    }

    /// Exact disjointness over all allowed configurations.
    pub fn disjoint(&self, other: &Region, sys: &SymbolicSystem) -> Result<bool> {
        Ok(self.intersect(other, sys)?.is_empty())
    }

    /// Does the closure of `self` meet the closure of `other`? In the
    /// cylinder backend (clopen sets) this is plain non-disjointness; in the
    /// interval backend touching endpoints count, including across the
    /// `1 ≡ 0` wrap.
    pub fn meets_closure(&self, other: &Region, sys: &SymbolicSystem) -> Result<bool> {
        if !self.disjoint(other, sys)? {
            return Ok(true);
        }
        match (self, other) {
            (Region::Intervals { intervals: a }, Region::Intervals { intervals: b }) => {
                for p in interval_boundary(a) {
                    if point_in_closure(b, &p) {
                        return Ok(true);
                    }
                }
                for p in interval_boundary(b) {
                    if point_in_closure(a, &p) {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            _ => Ok(false),
        }
    }

    /// Exact containment.
    pub fn subset_of(&self, other: &Region, sys: &SymbolicSystem) -> Result<bool> {
        Ok(self.subtract(other, sys)?.is_empty())
    }

    /// Boundary point set (interval backend); empty for clopen cylinders.
    pub fn boundary_points(&self) -> BTreeSet<Rat> {
        match self {
            Region::Cylinders { .. } => BTreeSet::new(),
            Region::Intervals { intervals } => interval_boundary(intervals),
        }
    }

    fn take_words(self) -> BTreeSet<Vec<u8>> {
        match self {
            Region::Cylinders { words, .. } => words,
            _ => unreachable!("cylinder backend expected"),
        }
    }

    pub fn descriptor(&self) -> RegionDescriptor {
        match self {
            Region::Cylinders { lo, words, .. } => RegionDescriptor::Cylinders {
                cylinders: words
                    .iter()
                    .map(|w| CylinderDescriptor { word: word_to_string(w), offset: *lo })
                    .collect(),
            },
            Region::Intervals { intervals } => RegionDescriptor::Intervals {
                intervals: intervals
                    .iter()
                    .map(|(a, b)| [rat_to_string(a), rat_to_string(b)])
                    .collect(),
            },
        }
    }

    pub fn from_descriptor(d: &RegionDescriptor, sys: &SymbolicSystem) -> Result<Region> {
        match d {
            RegionDescriptor::Cylinders { cylinders } => {
                let cyls = cylinders
                    .iter()
                    .map(|c| Ok((parse_word(&c.word)?, c.offset)))
                    .collect::<Result<Vec<_>>>()?;
                Region::from_cylinders(sys, &cyls)
            }
            RegionDescriptor::Intervals { intervals } => {
                let list = intervals
                    .iter()
                    .map(|[a, b]| Ok((parse_rat(a)?, parse_rat(b)?)))
                    .collect::<Result<Vec<_>>>()?;
                Region::intervals(list)
            }
        }
    }
}

fn canonical_cylinders(lo: i64, hi: i64, words: BTreeSet<Vec<u8>>) -> Region {
    if words.is_empty() {
        Region::empty()
    } else {
        Region::Cylinders { lo, len: (hi - lo) as usize, words }
    }
}

fn merge_intervals(mut v: Vec<(Rat, Rat)>) -> Vec<(Rat, Rat)> {
    v.sort();
    let mut out: Vec<(Rat, Rat)> = Vec::new();
    for (a, b) in v {
        match out.last_mut() {
            Some((_, pb)) if a <= *pb => {
                if b > *pb {
                    *pb = b;
                }
            }
            _ => out.push((a, b)),
        }
    }
    out
}

fn interval_boundary(intervals: &[(Rat, Rat)]) -> BTreeSet<Rat> {
    if intervals.len() == 1 && intervals[0].0.is_zero() && intervals[0].1.is_one() {
        return BTreeSet::new(); // full circle
    }
    let mut out = BTreeSet::new();
    for (a, b) in intervals {
        out.insert(wrap_unit(a));
        out.insert(wrap_unit(b));
    }
    // a shared endpoint where two pieces meet across the wrap is interior
    if intervals.first().map(|i| i.0.is_zero()) == Some(true)
        && intervals.last().map(|i| i.1.is_one()) == Some(true)
    {
        out.remove(&Rat::zero());
    }
    out
}

fn point_in_closure(intervals: &[(Rat, Rat)], p: &Rat) -> bool {
    intervals
        .iter()
        .any(|(a, b)| (a <= p && p <= b) || (b.is_one() && p.is_zero()))
}

/// Do the regions jointly cover the whole space? Exact over all allowed
/// configuration windows (cylinders) or the whole circle (intervals).
pub fn covers_space(rs: &[Region], sys: &SymbolicSystem) -> Result<bool> {
    let mut acc = match rs.first() {
        None => return Ok(false),
        Some(Region::Intervals { .. }) => Region::Intervals { intervals: Vec::new() },
        Some(Region::Cylinders { .. }) => Region::empty(),
    };
    for r in rs {
        acc = acc.union(r, sys)?;
    }
    match &acc {
        Region::Intervals { intervals } => {
            Ok(intervals.len() == 1 && intervals[0].0.is_zero() && intervals[0].1.is_one())
        }
        Region::Cylinders { .. } => {
            if acc.is_empty() {
                return Ok(false);
            }
            let (lo, hi) = acc.span().unwrap();
            let words = acc.expanded_words(sys, lo, hi)?;
            Ok(words.len() == sys.language((hi - lo) as usize)?.len())
        }
    }
}

/// Split `region` into pieces covering it such that each piece meets (in
/// closure) at most `d` members of `family`. Errors with a general-position
/// failure when some minimal piece unavoidably meets `d + 1` members.
pub fn refine_meeting_few(
    region: &Region,
    family: &[Region],
    d: usize,
    sys: &SymbolicSystem,
) -> Result<Vec<Region>> {
    if region.is_empty() {
        return Ok(Vec::new());
    }
    if family.is_empty() {
        return Ok(vec![region.clone()]);
    }
    match region {
        Region::Cylinders { .. } => {
            // expand everything to a common span; atoms (single full-span
            // words) are either inside or disjoint from each member, so
            // grouping atoms by their membership signature gives minimal
            // pieces with exact meeting counts
            let (mut lo, mut hi) = region.span().unwrap();
            for f in family {
                if let Some((a, b)) = f.span() {
                    lo = lo.min(a);
                    hi = hi.max(b);
                }
            }
            let words = region.expanded_words(sys, lo, hi)?;
            let fam_words: Vec<BTreeSet<Vec<u8>>> = family
                .iter()
                .map(|f| f.expand_to(sys, lo, hi).map(Region::take_words))
                .collect::<Result<_>>()?;
            let mut groups: std::collections::BTreeMap<Vec<usize>, BTreeSet<Vec<u8>>> =
                std::collections::BTreeMap::new();
            for w in words {
                let sig: Vec<usize> = fam_words
                    .iter()
                    .enumerate()
                    .filter(|(_, fw)| fw.contains(&w))
                    .map(|(i, _)| i)
                    .collect();
                if sig.len() > d {
                    return Err(Error::Infeasible(format!(
                        "window word {} meets {} family members (> {d})",
                        word_to_string(&w),
                        sig.len()
                    )));
                }
                groups.entry(sig).or_default().insert(w);
            }
            Ok(groups
                .into_values()
                .map(|ws| canonical_cylinders(lo, hi, ws))
                .collect())
        }
        Region::Intervals { intervals } => {
            // Recursively split each interval of R: a piece meeting more than
            // d members in closure gets cut between two separated contact
            // sets. When the contacts cannot be separated (overlapping
            // closures), the count is unavoidable and we fail loudly.
            let mut pieces: Vec<Region> = Vec::new();
            let mut stack: Vec<(Rat, Rat)> = intervals.clone();
            let mut steps = 0usize;
            while let Some((a, b)) = stack.pop() {
                steps += 1;
                if steps > 64 * (family.len() + 1) {
                    return Err(Error::Infeasible("interval refinement did not terminate".into()));
                }
                let piece = Region::Intervals { intervals: vec![(a.clone(), b.clone())] };
                // closed contact interval of each member with [a, b]
                let mut contacts: Vec<(Rat, Rat)> = Vec::new();
                for f in family {
                    if piece.meets_closure(f, sys)? {
                        let Region::Intervals { intervals: fv } = f else {
                            return Err(Error::UnsupportedBackend("mixed region backends".into()));
                        };
                        let mut lo: Option<Rat> = None;
                        let mut hi: Option<Rat> = None;
                        for (fa, fb) in fv {
                            let s = fa.clone().max(a.clone());
                            let e = fb.clone().min(b.clone());
                            if s <= e {
                                lo = Some(lo.map_or(s.clone(), |v: Rat| v.min(s)));
                                hi = Some(hi.map_or(e.clone(), |v: Rat| v.max(e)));
                            }
                        }
                        // contact may be via the 1 ≡ 0 wrap only; treat it as
                        // touching the matching endpoint of the piece
                        let (s, e) = match (lo, hi) {
                            (Some(s), Some(e)) => (s, e),
                            _ => {
                                if point_in_closure(fv, &wrap_unit(&a)) {
                                    (a.clone(), a.clone())
                                } else {
                                    (b.clone(), b.clone())
                                }
                            }
                        };
                        contacts.push((s, e));
                    }
                }
                if contacts.len() <= d {
                    pieces.push(piece);
                    continue;
                }
                // find a gap between contact blocks to cut at
                contacts.sort();
                let mut cut: Option<Rat> = None;
                let mut reach = contacts[0].1.clone();
                for c in &contacts[1..] {
                    if reach < c.0 {
                        cut = Some((&reach + &c.0) / Rat::from_integer(2.into()));
                        break;
                    }
                    if c.1 > reach {
                        reach = c.1.clone();
                    }
                }
                match cut {
                    Some(p) if p > a && p < b => {
                        stack.push((a, p.clone()));
                        stack.push((p, b));
                    }
                    _ => {
                        return Err(Error::Infeasible(format!(
                            "interval piece meets {} inseparable family members (> {d})",
                            contacts.len()
                        )));
                    }
                }
            }
            pieces.sort_by(|x, y| match (x, y) {
                (Region::Intervals { intervals: a }, Region::Intervals { intervals: b }) => {
                    a.cmp(b)
                }
                _ => std::cmp::Ordering::Equal,
            });
            Ok(pieces)
        }
    }
}

/// Weak general-position test on the boundaries of the given regions: true
/// iff every subcollection of at least `d + 1` boundary sets has empty
/// common intersection. Cylinder boundaries are empty, so the cylinder
/// backend always passes.
pub fn check_general_position_weak(regions: &[Region], d: usize) -> bool {
    let boundaries: Vec<BTreeSet<Rat>> = regions.iter().map(|r| r.boundary_points()).collect();
    let n = boundaries.len();
    if n < d + 1 {
        return true;
    }
    // it suffices to check size d+1 subcollections (larger intersections are
    // contained in some (d+1)-fold one)
    let mut idx: Vec<usize> = (0..=d).collect();
    loop {
        let mut inter = boundaries[idx[0]].clone();
        for &i in &idx[1..] {
            inter = inter.intersection(&boundaries[i]).cloned().collect();
        }
        if !inter.is_empty() {
            return false;
        }
        // next combination
        let k = d + 1;
        let mut pos = k;
        loop {
            if pos == 0 {
                return true;
            }
            pos -= 1;
            if idx[pos] + 1 <= n - (k - pos) {
                idx[pos] += 1;
                for j in pos + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// A single cylinder in a JSON descriptor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CylinderDescriptor {
    pub word: String,
    pub offset: i64,
}

/// JSON shape of a region: `{"cylinders": [...]}` or `{"intervals": [...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegionDescriptor {
    Cylinders { cylinders: Vec<CylinderDescriptor> },
    Intervals { intervals: Vec<[String; 2]> },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;
    use proptest::prelude::*;

    fn full2() -> SymbolicSystem {
        SymbolicSystem::full_shift(2, 12).unwrap()
    }

    fn rot() -> SymbolicSystem {
        SymbolicSystem::rotation_surrogate(rat(3, 101), vec![rat(0, 1), rat(1, 2)], 20).unwrap()
    }

    #[test]
    fn translate_group_action() {
        let sys = full2();
        let r = Region::cylinder(&[1, 0], 0);
        assert_eq!(r.translate(0, &sys).unwrap(), r);
        let rt = r.translate(3, &sys).unwrap().translate(-3, &sys).unwrap();
        assert_eq!(rt, r);
        let shifted = r.translate(2, &sys).unwrap();
        assert_eq!(shifted.span(), Some((2, 4)));
    }

    #[test]
    fn disjoint_and_cover_examples() {
        let sys = full2();
        let r = Region::cylinder(&[1, 0], 0);
        let comp = r.complement(&sys).unwrap();
        assert!(r.disjoint(&comp, &sys).unwrap());
        assert!(covers_space(&[r.clone(), comp], &sys).unwrap());

        let zero = Region::cylinder(&[0], 0);
        let one = Region::cylinder(&[1], 0);
        assert!(covers_space(&[zero, one], &sys).unwrap());

        // [10]@0 and [01]@1 meet in the word 101
        let a = Region::cylinder(&[1, 0], 0);
        let b = Region::cylinder(&[0, 1], 1);
        assert!(!a.disjoint(&b, &sys).unwrap());
        let inter = a.intersect(&b, &sys).unwrap();
        let words = inter.expanded_words(&sys, 0, 3).unwrap();
        assert_eq!(words.into_iter().collect::<Vec<_>>(), vec![vec![1, 0, 1]]);
    }

    #[test]
    fn golden_mean_respects_language() {
        let sys = SymbolicSystem::golden_mean(10).unwrap();
        // [1]@0 and [1]@1 cannot co-occur (11 forbidden)
        let a = Region::cylinder(&[1], 0);
        let b = Region::cylinder(&[1], 1);
        assert!(a.disjoint(&b, &sys).unwrap());
    }

    #[test]
    fn refine_meeting_few_cylinders() {
        let sys = full2();
        let r = Region::cylinder(&[0], 0);
        assert_eq!(refine_meeting_few(&r, &[], 0, &sys).unwrap(), vec![r.clone()]);

        // family the region avoids: pieces are clean
        let fam = vec![Region::cylinder(&[1], 0)];
        let pieces = refine_meeting_few(&r, &fam, 0, &sys).unwrap();
        let mut total = Region::empty();
        for p in &pieces {
            for f in &fam {
                assert!(p.disjoint(f, &sys).unwrap());
            }
            total = total.union(p, &sys).unwrap();
        }
        assert!(total.subset_of(&r, &sys).unwrap() && r.subset_of(&total, &sys).unwrap());

        // impossible demand: r itself is inside a member but d=0
        let fam = vec![Region::cylinder(&[0], 0)];
        assert!(matches!(refine_meeting_few(&r, &fam, 0, &sys), Err(Error::Infeasible(_))));
    }

    #[test]
    fn refine_meeting_few_intervals() {
        let sys = rot();
        let r = Region::intervals(vec![(rat(1, 4), rat(3, 4))]).unwrap();
        let fam = vec![
            Region::intervals(vec![(rat(1, 5), rat(3, 10))]).unwrap(),
            Region::intervals(vec![(rat(7, 10), rat(4, 5))]).unwrap(),
        ];
        let pieces = refine_meeting_few(&r, &fam, 1, &sys).unwrap();
        assert!(pieces.len() >= 2 && pieces.len() <= 3);
        let mut union = Region::Intervals { intervals: vec![] };
        for p in &pieces {
            union = union.union(p, &sys).unwrap();
        }
        assert_eq!(union, r);
    }

    #[test]
    fn general_position_weak() {
        // clopen cylinders: vacuous
        let rs = vec![Region::cylinder(&[0], 0), Region::cylinder(&[1], 0)];
        assert!(check_general_position_weak(&rs, 0));

        // shared endpoint: fails at d=1
        let a = Region::intervals(vec![(rat(0, 1), rat(1, 2))]).unwrap();
        let b = Region::intervals(vec![(rat(1, 2), rat(3, 4))]).unwrap();
        assert!(!check_general_position_weak(&[a.clone(), b], 1));

        // all endpoints distinct: passes at d=1
        let c = Region::intervals(vec![(rat(1, 3), rat(2, 3))]).unwrap();
        assert!(check_general_position_weak(&[a, c], 1));
    }

    #[test]
    fn interval_algebra() {
        let sys = rot();
        let a = Region::intervals(vec![(rat(0, 1), rat(1, 2))]).unwrap();
        let b = a.complement(&sys).unwrap();
        assert!(a.disjoint(&b, &sys).unwrap());
        assert!(covers_space(&[a.clone(), b.clone()], &sys).unwrap());
        // half-open: closures touch at 1/2 and at the wrap 0 ≡ 1
        assert!(a.meets_closure(&b, &sys).unwrap());
        // translation by the rotation angle
        let t = a.translate(1, &sys).unwrap();
        assert_eq!(t, Region::intervals(vec![(rat(3, 101), rat(1, 2) + rat(3, 101))]).unwrap());
        let back = t.translate(-1, &sys).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn descriptor_roundtrip() {
        let sys = full2();
        let r = Region::from_cylinders(&sys, &[(vec![1, 0], 0), (vec![0, 1], 1)]).unwrap();
        let json = serde_json::to_string(&r.descriptor()).unwrap();
        let d: RegionDescriptor = serde_json::from_str(&json).unwrap();
        let back = Region::from_descriptor(&d, &sys).unwrap();
        assert_eq!(back, r);

        let iv = Region::intervals(vec![(rat(1, 3), rat(2, 3))]).unwrap();
        let json = serde_json::to_string(&iv.descriptor()).unwrap();
        let d: RegionDescriptor = serde_json::from_str(&json).unwrap();
        let back = Region::from_descriptor(&d, &rot()).unwrap();
        assert_eq!(back, iv);
    }

    fn arb_cyl_region() -> impl Strategy<Value = Region> {
        // random small unions of width-<=2 cylinders at offsets in [-2, 2]
        proptest::collection::vec(
            (proptest::collection::vec(0u8..2, 1..3), -2i64..3),
            1..4,
        )
        .prop_map(|cyls| {
            let sys = SymbolicSystem::full_shift(2, 12).unwrap();
            Region::from_cylinders(&sys, &cyls).unwrap()
        })
    }

    proptest! {
        #[test]
        fn translate_distributes(a in arb_cyl_region(), b in arb_cyl_region(), i in -3i64..4) {
            let sys = full2();
            let lhs = a.union(&b, &sys).unwrap().translate(i, &sys).unwrap();
            let rhs = a.translate(i, &sys).unwrap().union(&b.translate(i, &sys).unwrap(), &sys).unwrap();
            // compare extensionally over a common span
            let lo = lhs.span().unwrap().0.min(rhs.span().unwrap().0);
            let hi = lhs.span().unwrap().1.max(rhs.span().unwrap().1);
            prop_assert_eq!(
                lhs.expanded_words(&sys, lo, hi).unwrap(),
                rhs.expanded_words(&sys, lo, hi).unwrap()
            );

            let lhs = a.intersect(&b, &sys).unwrap().translate(i, &sys).unwrap();
            let rhs = a.translate(i, &sys).unwrap().intersect(&b.translate(i, &sys).unwrap(), &sys).unwrap();
            prop_assert_eq!(lhs.is_empty(), rhs.is_empty());
            if !lhs.is_empty() {
                let lo = lhs.span().unwrap().0.min(rhs.span().unwrap().0);
                let hi = lhs.span().unwrap().1.max(rhs.span().unwrap().1);
                prop_assert_eq!(
                    lhs.expanded_words(&sys, lo, hi).unwrap(),
                    rhs.expanded_words(&sys, lo, hi).unwrap()
                );
            }
        }

        #[test]
        fn disjoint_two_routes_agree(a in arb_cyl_region(), b in arb_cyl_region()) {
            let sys = full2();
            // route 1: canonical-form intersection emptiness
            let r1 = a.intersect(&b, &sys).unwrap().is_empty();
            // route 2: brute scan over expanded words
            let (lo_a, hi_a) = a.span().unwrap();
            let (lo_b, hi_b) = b.span().unwrap();
            let (lo, hi) = (lo_a.min(lo_b), hi_a.max(hi_b));
            let wa = a.expanded_words(&sys, lo, hi).unwrap();
            let wb = b.expanded_words(&sys, lo, hi).unwrap();
            let r2 = wa.intersection(&wb).next().is_none();
            prop_assert_eq!(r1, r2);
        }
    }
}
