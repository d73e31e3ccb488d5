//! Tower machinery: interval colorings, disjointification of region pairs,
//! marker construction with exhaustively verified certificates, open/closed
//! marker interconversion, and return-time functions derived from markers.
//!
//! A depth-`N` marker is a region `W` with `W ∩ T^i(W) = ∅` for
//! `i = 1..N−1` whose forward iterates `T^1(W), …, T^m(W)` cover the space
//! for some return bound `m`.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::dynsys::{SymbolicSystem, Window};
use crate::error::{Error, Result};
use crate::rat::{rat_int, Rat};
use crate::regions::{covers_space, refine_meeting_few, Region, RegionDescriptor};

/// Return bound for disjointifying a pair at tower depth `N` in dimension
/// `d`: `(2d + 2)·N − 1`.
pub fn marker_constant(d: usize, n: usize) -> usize {
    (2 * d + 2) * n - 1
}

/// Pick the least color `k ∈ {1..2d+1}` whose index interval
/// `I_k = {kN−N+1, …, kN+N−1}` avoids every hit. Each hit blocks at most
/// two intervals, so with at most `d` hits a free color always exists.
pub fn interval_coloring(hits: &[usize], d: usize, n: usize) -> Result<usize> {
    let m = marker_constant(d, n);
    if hits.len() > d {
        return Err(Error::PigeonholeFailure { hits: hits.to_vec(), d, n });
    }
    if hits.iter().any(|&h| h < 1 || h > m) {
        return Err(Error::Precondition("hit index outside {1..m}".into()));
    }
    for k in 1..=2 * d + 1 {
        let lo = k * n + 1 - n;
        let hi = k * n + n - 1;
        if hits.iter().all(|&h| h < lo || h > hi) {
            return Ok(k);
        }
    }
    Err(Error::PigeonholeFailure { hits: hits.to_vec(), d, n })
}

/// One colored piece of the disjointification.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ColoredPiece {
    pub piece: RegionDescriptor,
    pub hits: Vec<usize>,
    pub color: usize,
}

/// Everything `disjointify` produced, for inspection and re-verification.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DisjointifyTranscript {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub residual: RegionDescriptor,
    pub pieces: Vec<ColoredPiece>,
    pub w: RegionDescriptor,
}

fn require_disjoint_iterates(
    a: &Region,
    upto: usize,
    sys: &SymbolicSystem,
    what: &str,
) -> Result<()> {
    for i in 1..=upto {
        if a.meets_closure(&a.translate(i as i64, sys)?, sys)? {
            return Err(Error::Precondition(format!(
                "{what} meets its own iterate at shift {i}"
            )));
        }
    }
    Ok(())
}

/// Merge `U` (whose iterates are disjoint to depth `N`) with `V` (whose
/// iterates are disjoint to depth `m = marker_constant(d, N)`) into a region
/// `W ⊇ U` that keeps depth-`N` disjointness and pulls `V` under the
/// iterates `T^1(W), …, T^m(W)`: the residual of `V` not already reached
/// from `U` is split into pieces each touching at most `d` iterates of `U`,
/// and each piece is shifted back by a colored multiple of `N` chosen so
/// that no new overlap appears.
pub fn disjointify(
    sys: &SymbolicSystem,
    u: &Region,
    v: &Region,
    n: usize,
    d: usize,
) -> Result<(Region, DisjointifyTranscript)> {
    if n == 0 {
        return Err(Error::Precondition("depth must be positive".into()));
    }
    let m = marker_constant(d, n);
    require_disjoint_iterates(u, n - 1, sys, "first region")?;
    require_disjoint_iterates(v, m, sys, "second region")?;

    // residual: the part of V not already covered by forward iterates of U
    let mut residual = v.clone();
    let mut translates = Vec::with_capacity(m);
    for i in 1..=m {
        let ti = u.translate(i as i64, sys)?;
        residual = residual.subtract(&ti, sys)?;
        translates.push(ti);
    }

    let pieces = refine_meeting_few(&residual, &translates, d, sys)?;
    let mut w = u.clone();
    let mut colored = Vec::new();
    for piece in &pieces {
        let mut hits = Vec::new();
        for (idx, ti) in translates.iter().enumerate() {
            if piece.meets_closure(ti, sys)? {
                hits.push(idx + 1);
            }
        }
        let color = interval_coloring(&hits, d, n)?;
        w = w.union(&piece.translate(-((color * n) as i64), sys)?, sys)?;
        colored.push(ColoredPiece { piece: piece.descriptor(), hits, color });
    }

    let transcript = DisjointifyTranscript {
        n,
        d,
        m,
        residual: residual.descriptor(),
        pieces: colored,
        w: w.descriptor(),
    };
    check_disjointify(sys, u, v, &w, n, d)?;
    Ok((w, transcript))
}

/// Independent postcondition checker for `disjointify`: containment of `U`,
/// coverage of `V` by `T^1(W)..T^m(W)`, and depth-`N` disjointness of `W`.
/// Uses only region primitives, none of the construction above.
pub fn check_disjointify(
    sys: &SymbolicSystem,
    u: &Region,
    v: &Region,
    w: &Region,
    n: usize,
    d: usize,
) -> Result<()> {
    let m = marker_constant(d, n);
    if !u.subset_of(w, sys)? {
        return Err(Error::VerificationFailed("first region not contained in result".into()));
    }
    let mut reached = v.clone();
    for i in 1..=m {
        reached = reached.subtract(&w.translate(i as i64, sys)?, sys)?;
    }
    if !reached.is_empty() {
        return Err(Error::VerificationFailed(
            "second region not covered by forward iterates of result".into(),
        ));
    }
    for i in 1..n {
        if w.meets_closure(&w.translate(i as i64, sys)?, sys)? {
            return Err(Error::VerificationFailed(format!(
                "result meets its own iterate at shift {i}"
            )));
        }
    }
    Ok(())
}

/// A verified depth-`N` marker: the region, its return bound, and the
/// construction transcript.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarkerCertificate {
    /// disjointness depth: W ∩ T^i(W) = ∅ for i = 1..N−1
    pub n: usize,
    /// verified return bound: T^1(W), …, T^m(W) cover the space
    pub m: usize,
    pub d: usize,
    pub w: RegionDescriptor,
    pub transcript: Vec<String>,
}

impl MarkerCertificate {
    pub fn region(&self, sys: &SymbolicSystem) -> Result<Region> {
        Region::from_descriptor(&self.w, sys)
    }
}

/// Build a depth-`N` marker on an aperiodic system: start from a cylinder
/// partition fine enough that every cell has `N·marker_constant(d,N)`
/// disjoint iterates, then fold the cells in one at a time with
/// `disjointify`.
pub fn build_marker(sys: &SymbolicSystem, n: usize, d: usize) -> Result<MarkerCertificate> {
    if n == 0 {
        return Err(Error::Precondition("depth must be positive".into()));
    }
    let m = marker_constant(d, n);
    let mut transcript = Vec::new();

    // aperiodicity up to the scales the construction touches
    let period_bound = m.min(sys.max_window / 2).max(1);
    let periodic = sys.enumerate_periodic_points(period_bound)?;
    if !periodic.is_empty() {
        return Err(Error::Precondition(format!(
            "system has periodic points up to period {period_bound}"
        )));
    }
    transcript.push(format!("no periodic points up to period {period_bound}"));

    if n == 1 {
        // no disjointness required: the whole space is a marker
        let w = Region::whole_space(sys)?;
        transcript.push("depth 1: whole space, return bound 1".into());
        let cert =
            MarkerCertificate { n, m: 1, d, w: w.descriptor(), transcript };
        verify_marker(&cert, sys)?;
        return Ok(cert);
    }

    // starting cover: widen cylinders until every cell has m disjoint
    // iterates, the precondition each folding step actually uses
    let need = m;
    let mut start: Option<(usize, Vec<Region>)> = None;
    for width in 1..=sys.max_window.saturating_sub(need) {
        let cover = crate::covers::Cover::cylinder_partition(sys, width, 0)?;
        let mut ok = true;
        for member in &cover.members {
            for i in 1..=need {
                if member.meets_closure(&member.translate(i as i64, sys)?, sys)? {
                    ok = false;
                    break;
                }
            }
            if !ok {
                break;
            }
        }
        if ok {
            start = Some((width, cover.members));
            break;
        }
    }
    let Some((width, cells)) = start else {
        return Err(Error::WindowExceeded { needed: sys.max_window + 1, max: sys.max_window });
    };
    transcript.push(format!(
        "starting cover: {} cylinders of width {width}, each with {need} disjoint iterates",
        cells.len()
    ));

    let mut w = cells[0].clone();
    for (idx, cell) in cells.iter().enumerate().skip(1) {
        let (next, _t) = disjointify(sys, &w, cell, n, d)?;
        transcript.push(format!("folded cell {idx}: postconditions re-verified"));
        w = next;
    }

    // shift once so coverage starts at iterate 1, then find the bound
    // actually achieved
    let mut m_achieved = None;
    for bound in 1..=m + 1 {
        let translates: Vec<Region> = (1..=bound)
            .map(|i| w.translate(i as i64, sys))
            .collect::<Result<_>>()?;
        if covers_space(&translates, sys)? {
            m_achieved = Some(bound);
            break;
        }
    }
    let Some(m_achieved) = m_achieved else {
        return Err(Error::VerificationFailed(
            "forward iterates fail to cover the space within the return bound".into(),
        ));
    };
    transcript.push(format!(
        "pair bound {m}, verified return bound {m_achieved}"
    ));

    let cert =
        MarkerCertificate { n, m: m_achieved, d, w: w.descriptor(), transcript };
    verify_marker(&cert, sys)?;
    Ok(cert)
}

/// Exhaustive certificate verifier. Works directly on word sets and the
/// language, sharing no logic with the construction: disjointness scans
/// every admissible word for a double match, coverage scans every
/// admissible window for a missing match.
pub fn verify_marker(cert: &MarkerCertificate, sys: &SymbolicSystem) -> Result<()> {
    let region = cert.region(sys)?;
    match &region {
        Region::Cylinders { lo: _, len, words } => {
            if words.is_empty() {
                return Err(Error::VerificationFailed("empty marker".into()));
            }
            let len = *len;
            // disjointness: no admissible word carries the marker pattern
            // at offsets 0 and i simultaneously
            for i in 1..cert.n {
                for w in sys.language(len + i)?.iter() {
                    if words.contains(&w[0..len]) && words.contains(&w[i..i + len]) {
                        return Err(Error::VerificationFailed(format!(
                            "marker self-overlap at shift {i}"
                        )));
                    }
                }
            }
            // coverage: every admissible window of length m + len contains
            // the pattern at one of the offsets 0..m−1 (these correspond to
            // membership in T^i(W) for i = 1..m)
            for w in sys.language(cert.m + len)?.iter() {
                if !(0..cert.m).any(|i| words.contains(&w[i..i + len])) {
                    return Err(Error::VerificationFailed(
                        "window not reached by forward iterates".into(),
                    ));
                }
            }
            Ok(())
        }
        Region::Intervals { .. } => {
            for i in 1..cert.n {
                if region.meets_closure(&region.translate(i as i64, sys)?, sys)? {
                    return Err(Error::VerificationFailed(format!(
                        "marker self-overlap at shift {i}"
                    )));
                }
            }
            let translates: Vec<Region> = (1..=cert.m)
                .map(|i| region.translate(i as i64, sys))
                .collect::<Result<_>>()?;
            if !covers_space(&translates, sys)? {
                return Err(Error::VerificationFailed(
                    "iterates fail to cover the circle".into(),
                ));
            }
            Ok(())
        }
    }
}

/// Which way to convert a marker.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MarkerDirection {
    /// closed marker → open marker (outward tube)
    ToOpen,
    /// open marker → closed marker (inward tube)
    ToClosed,
}

fn grow_intervals(intervals: &[(Rat, Rat)], eps: &Rat) -> Result<Region> {
    let grown: Vec<(Rat, Rat)> = intervals
        .iter()
        .map(|(a, b)| {
            let a2 = a - eps;
            let b2 = b + eps;
            (
                if a2 < Rat::zero() { Rat::zero() } else { a2 },
                if b2 > Rat::one() { Rat::one() } else { b2 },
            )
        })
        .collect();
    Region::intervals(grown)
}

fn shrink_intervals(intervals: &[(Rat, Rat)], eps: &Rat) -> Result<Region> {
    let shrunk: Vec<(Rat, Rat)> = intervals
        .iter()
        .filter_map(|(a, b)| {
            let a2 = a + eps;
            let b2 = b - eps;
            (a2 < b2).then_some((a2, b2))
        })
        .collect();
    Region::intervals(shrunk)
}

/// Convert between open and closed markers. Cylinder regions are clopen, so
/// both directions are the identity. Interval regions are tubed outward
/// (preserving iterate disjointness) or inward (preserving coverage), with
/// the tube radius halved until the defining conditions re-verify.
pub fn marker_interconvert(
    f: &Region,
    direction: MarkerDirection,
    n: usize,
    m: usize,
    sys: &SymbolicSystem,
) -> Result<Region> {
    let cert = MarkerCertificate {
        n,
        m,
        d: 0,
        w: f.descriptor(),
        transcript: Vec::new(),
    };
    verify_marker(&cert, sys)?;
    let Region::Intervals { intervals } = f else {
        return Ok(f.clone());
    };
    let mut eps = crate::rat::rat(1, 4);
    for _ in 0..32 {
        let candidate = match direction {
            MarkerDirection::ToOpen => grow_intervals(intervals, &eps)?,
            MarkerDirection::ToClosed => shrink_intervals(intervals, &eps)?,
        };
        let cand_cert = MarkerCertificate {
            n,
            m,
            d: 0,
            w: candidate.descriptor(),
            transcript: Vec::new(),
        };
        if verify_marker(&cand_cert, sys).is_ok() {
            return Ok(candidate);
        }
        eps /= rat_int(2);
    }
    Err(Error::RetriesExhausted { tries: 32, context: "marker tube radius search".into() })
}

/// Return-time function of a marker: `n(x) = min{k ≥ 0 : T^{−k}x ∈ W}`,
/// computable from a window of length `m +` marker width. Its exceptional
/// set (where the cocycle rule `n(Tx) = n(x) + 1` breaks) is `T^{−1}(W)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RokhlinFunction {
    pub w: RegionDescriptor,
    /// disjointness depth inherited from the marker
    pub n_depth: usize,
    /// return bound: 0 ≤ n(x) ≤ m everywhere
    pub m: usize,
}

impl RokhlinFunction {
    /// Window span (relative to the evaluation point) needed to evaluate.
    pub fn window_needed(&self, sys: &SymbolicSystem) -> Result<(i64, i64)> {
        let region = Region::from_descriptor(&self.w, sys)?;
        let (lo, hi) = region
            .span()
            .ok_or_else(|| Error::Precondition("empty marker region".into()))?;
        Ok((lo, hi + self.m as i64))
    }

    /// Evaluate `n` at the point `T^{shift}(x)` described by the window.
    pub fn eval_at(&self, x: &Window, shift: i64, sys: &SymbolicSystem) -> Result<u64> {
        let region = Region::from_descriptor(&self.w, sys)?;
        let Region::Cylinders { lo, len, words } = &region else {
            return Err(Error::UnsupportedBackend(
                "return-time evaluation needs the cylinder backend".into(),
            ));
        };
        for k in 0..=self.m as i64 {
            // T^{−k}(T^shift x) ∈ W ⟺ x ∈ T^{k−shift}(W), i.e. the window
            // matches the marker word set at offset lo + k − shift
            let base = lo + k - shift;
            let mut sub = Vec::with_capacity(*len);
            for j in 0..*len as i64 {
                let Some(s) = x.at(base + j) else {
                    return Err(Error::MismatchedWindows(format!(
                        "window too short to evaluate return time at shift {shift}"
                    )));
                };
                sub.push(s);
            }
            if words.contains(&sub) {
                return Ok(k as u64);
            }
        }
        Err(Error::VerificationFailed("return time exceeds the bound".into()))
    }

    pub fn eval(&self, x: &Window, sys: &SymbolicSystem) -> Result<u64> {
        self.eval_at(x, 0, sys)
    }

    /// The exceptional set `T^{−1}(W)`.
    pub fn exceptional_set(&self, sys: &SymbolicSystem) -> Result<Region> {
        Region::from_descriptor(&self.w, sys)?.translate(-1, sys)
    }

    /// Does the window's point lie in the exceptional set?
    pub fn is_exceptional(&self, x: &Window, shift: i64, sys: &SymbolicSystem) -> Result<bool> {
        Ok(self.eval_at(x, shift + 1, sys)? == 0)
    }
}

/// Derive the return-time function of a verified marker and re-check the
/// exceptional-set disjointness it inherits.
pub fn rokhlin_from_marker(
    cert: &MarkerCertificate,
    sys: &SymbolicSystem,
) -> Result<RokhlinFunction> {
    verify_marker(cert, sys)?;
    let f = RokhlinFunction { w: cert.w.clone(), n_depth: cert.n, m: cert.m };
    let e = f.exceptional_set(sys)?;
    for i in 1..cert.n {
        if e.meets_closure(&e.translate(i as i64, sys)?, sys)? {
            return Err(Error::VerificationFailed(format!(
                "exceptional set meets its iterate at shift {i}"
            )));
        }
    }
    Ok(f)
}
