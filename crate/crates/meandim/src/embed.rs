//! Embedding constructors: partitions of unity over region covers, vertex
//! tables with periodic-extension and cyclic-shift operators, randomized
//! table samplers with exact rank certificates, clamped extensions, the
//! tower interpolation evaluator, factor combination, periodic immersions,
//! and the compatibility / ε-embedding verifiers.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::covers::Cover;
use crate::dynsys::{metric_distance, SymbolicSystem, Window};
use crate::error::{Error, Result};
use crate::independence::{
    affinely_independent, paired_symbol_matrix_check, rank_exact, sample_unit_rat,
    IndependenceCertificate, PeriodicitySubspace, RankCheck, SymbolLayout, MAX_TRIES,
};
use crate::rat::{ceil_i64, floor_i64, fract, mod_i64, pow2_neg, rat, rat_int, Rat};
use crate::regions::Region;
use crate::towers::{MarkerCertificate, RokhlinFunction};

fn clamp01(x: Rat) -> Rat {
    if x < Rat::zero() {
        Rat::zero()
    } else if x > Rat::one() {
        Rat::one()
    } else {
        x
    }
}

/// Read the word of `T^{shift}x` on the absolute span `[lo, hi)`.
fn read_word(x: &Window, lo: i64, hi: i64, shift: i64) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity((hi - lo).max(0) as usize);
    for j in lo..hi {
        let Some(s) = x.at(j - shift) else {
            return Err(Error::MismatchedWindows(format!(
                "window does not cover position {} (shift {shift})",
                j - shift
            )));
        };
        out.push(s);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Partition of unity
// ---------------------------------------------------------------------------

/// A rational partition of unity subordinate to a region cover. Weights are
/// computed from exact distances to member complements, measured on the
/// cover's common span; each member carries a deterministic anchor word
/// where its weight is exactly 1.
#[derive(Clone, Debug)]
pub struct PartitionOfUnity {
    pub members: Vec<Region>,
    /// common span on which memberships and distances are decided
    pub span: (i64, i64),
    member_words: Vec<BTreeSet<Vec<u8>>>,
    complement_words: Vec<BTreeSet<Vec<u8>>>,
    pub anchors: Vec<Window>,
}

/// Build a partition of unity over a cylinder-region cover. Every member
/// must contain a witness word lying in no other member (the anchor);
/// otherwise the cover must be shrunk by the caller.
pub fn partition_of_unity(cover: &Cover, sys: &SymbolicSystem) -> Result<PartitionOfUnity> {
    if cover.members.is_empty() {
        return Err(Error::Precondition("empty cover".into()));
    }
    if cover.members.iter().any(Region::is_empty) {
        return Err(Error::Precondition("cover contains an empty member".into()));
    }
    let mut lo = i64::MAX;
    let mut hi = i64::MIN;
    for m in &cover.members {
        let Some((a, b)) = m.span() else {
            return Err(Error::Precondition("empty cover member".into()));
        };
        lo = lo.min(a);
        hi = hi.max(b);
    }
    let lang = sys.language((hi - lo) as usize)?;
    let mut member_words = Vec::new();
    let mut complement_words = Vec::new();
    for m in &cover.members {
        let words = m.expanded_words(sys, lo, hi)?;
        let comp: BTreeSet<Vec<u8>> =
            lang.iter().filter(|w| !words.contains(*w)).cloned().collect();
        member_words.push(words);
        complement_words.push(comp);
    }
    // anchors: lexicographically least word in the member and in no other
    let mut anchors = Vec::new();
    for (i, words) in member_words.iter().enumerate() {
        let anchor = words
            .iter()
            .find(|w| {
                member_words
                    .iter()
                    .enumerate()
                    .all(|(j, other)| j == i || !other.contains(*w))
            })
            .cloned()
            .ok_or_else(|| {
                Error::Precondition(format!(
                    "cover member {i} has no witness word outside all other members"
                ))
            })?;
        anchors.push(Window::new(lo, anchor));
    }
    Ok(PartitionOfUnity {
        members: cover.members.clone(),
        span: (lo, hi),
        member_words,
        complement_words,
        anchors,
    })
}

impl PartitionOfUnity {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Distance from the word (read on the common span) to the complement
    /// of member `i`: `2^{−j}` where `j` is the largest radius to which
    /// some complement word agrees with it; 0 if the word is outside.
    fn member_distance(&self, word: &[u8], i: usize) -> Rat {
        if !self.member_words[i].contains(word) {
            return Rat::zero();
        }
        if self.complement_words[i].is_empty() {
            return Rat::one();
        }
        let mut best: Option<u64> = None;
        for c in &self.complement_words[i] {
            let first = word
                .iter()
                .zip(c.iter())
                .enumerate()
                .filter(|(_, (a, b))| a != b)
                .map(|(idx, _)| (self.span.0 + idx as i64).unsigned_abs())
                .min()
                .expect("complement word must differ inside the span");
            best = Some(best.map_or(first, |b| b.max(first)));
        }
        pow2_neg(best.unwrap() as u32)
    }

    /// Weights `ψ_U(T^{shift}x)`: exact rationals summing to 1.
    pub fn weights_at(&self, x: &Window, shift: i64, sys: &SymbolicSystem) -> Result<Vec<Rat>> {
        let _ = sys;
        let word = read_word(x, self.span.0, self.span.1, shift)?;
        let dists: Vec<Rat> = (0..self.len()).map(|i| self.member_distance(&word, i)).collect();
        let total: Rat = dists.iter().fold(Rat::zero(), |a, b| a + b);
        if total.is_zero() {
            return Err(Error::Precondition("point outside the cover".into()));
        }
        Ok(dists.into_iter().map(|d| d / &total).collect())
    }

    /// Support `α_x = {U : ψ_U(x) > 0}` at `T^{shift}x`.
    pub fn support_at(&self, x: &Window, shift: i64) -> Result<Vec<usize>> {
        let word = read_word(x, self.span.0, self.span.1, shift)?;
        let s: Vec<usize> =
            (0..self.len()).filter(|&i| self.member_words[i].contains(&word)).collect();
        if s.is_empty() {
            return Err(Error::Precondition("point outside the cover".into()));
        }
        Ok(s)
    }

    /// All realizable supports (distinct membership signatures over the
    /// span language).
    pub fn support_sets(&self, sys: &SymbolicSystem) -> Result<Vec<Vec<usize>>> {
        let lang = sys.language((self.span.1 - self.span.0) as usize)?;
        let mut seen = BTreeSet::new();
        for w in lang.iter() {
            let sig: Vec<usize> =
                (0..self.len()).filter(|&i| self.member_words[i].contains(w)).collect();
            if !sig.is_empty() {
                seen.insert(sig);
            }
        }
        Ok(seen.into_iter().collect())
    }

    /// Overlap order of the cover on its own support: the maximal number
    /// of members meeting at a covered word, minus one.
    pub fn cover_ord(&self, sys: &SymbolicSystem) -> Result<usize> {
        let lang = sys.language((self.span.1 - self.span.0) as usize)?;
        let max_count = lang
            .iter()
            .map(|w| self.member_words.iter().filter(|m| m.contains(w)).count())
            .max()
            .unwrap_or(0);
        if max_count == 0 {
            return Err(Error::Precondition("cover has empty support".into()));
        }
        Ok(max_count - 1)
    }
}

// ---------------------------------------------------------------------------
// Vertex tables
// ---------------------------------------------------------------------------

/// A map from cover members to blocks `v_U ∈ ([0,1]^d)^n`, stored flat as
/// `n·d` rationals per member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexTable {
    /// number of `d`-blocks per vector
    pub n: usize,
    pub d: usize,
    #[serde(with = "crate::rat::rat_mat_serde")]
    pub vectors: Vec<Vec<Rat>>,
}

impl VertexTable {
    pub fn new(n: usize, d: usize, vectors: Vec<Vec<Rat>>) -> Result<VertexTable> {
        if n == 0 || d == 0 || vectors.iter().any(|v| v.len() != n * d) {
            return Err(Error::Precondition("vertex vectors must have n·d coordinates".into()));
        }
        Ok(VertexTable { n, d, vectors })
    }

    /// Block `k` of a flat vector.
    pub fn block(v: &[Rat], d: usize, k: usize) -> &[Rat] {
        &v[k * d..(k + 1) * d]
    }
}

/// Periodic extension: `v^{⊕n}|_k = v|_{k mod m}` for a vector of `m`
/// `d`-blocks extended to `n` blocks.
pub fn oplus(v: &[Rat], d: usize, blocks_out: usize) -> Vec<Rat> {
    let m = v.len() / d;
    let mut out = Vec::with_capacity(blocks_out * d);
    for k in 0..blocks_out {
        out.extend_from_slice(VertexTable::block(v, d, k % m));
    }
    out
}

/// Cyclic block shift: `v^{•l}|_k = v|_{(k+l) mod m}`.
pub fn bullet(v: &[Rat], d: usize, l: usize) -> Vec<Rat> {
    let m = v.len() / d;
    let mut out = Vec::with_capacity(v.len());
    for k in 0..m {
        out.extend_from_slice(VertexTable::block(v, d, (k + l) % m));
    }
    out
}

/// Contiguous block slice `v|_{from}^{from+blocks−1}`.
pub fn block_slice(v: &[Rat], d: usize, from: usize, blocks: usize) -> Vec<Rat> {
    v[from * d..(from + blocks) * d].to_vec()
}

/// `F(T^{shift}x) = Σ_U ψ_U(T^{shift}x)·v_U`, a vector of `n·d` rationals.
pub fn f_eval(
    pou: &PartitionOfUnity,
    table: &VertexTable,
    x: &Window,
    shift: i64,
    sys: &SymbolicSystem,
) -> Result<Vec<Rat>> {
    if table.vectors.len() != pou.len() {
        return Err(Error::Precondition("table and cover sizes differ".into()));
    }
    let w = pou.weights_at(x, shift, sys)?;
    let mut out = vec![Rat::zero(); table.n * table.d];
    for (psi, v) in w.iter().zip(&table.vectors) {
        if psi.is_zero() {
            continue;
        }
        for (o, c) in out.iter_mut().zip(v.iter()) {
            *o += psi * c;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Randomized table constructors with certificates
// ---------------------------------------------------------------------------

/// Certificate attached to a sampled vertex table: the rank facts verified
/// and any symbolic-layout witnesses for repeated-symbol configurations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FCertificate {
    pub seed: u64,
    pub attempts: usize,
    pub checks: Vec<RankCheck>,
    pub paired: Vec<IndependenceCertificate>,
}

fn sample_near(
    rng: &mut ChaCha8Rng,
    target: &[Rat],
    eps: &Rat,
) -> Vec<Rat> {
    // perturbation within ε/4 keeps the anchor bound ‖F(q_U) − ṽ_U‖ < ε/2
    let quarter = eps / rat_int(4);
    target
        .iter()
        .map(|t| {
            let r = sample_unit_rat(rng); // in [0,1]
            clamp01(t + (r * rat_int(2) - Rat::one()) * &quarter)
        })
        .collect()
}

fn sample_table(
    rng: &mut ChaCha8Rng,
    targets: &VertexTable,
    eps: &Rat,
) -> VertexTable {
    VertexTable {
        n: targets.n,
        d: targets.d,
        vectors: targets.vectors.iter().map(|t| sample_near(rng, t, eps)).collect(),
    }
}

/// Sample two tables near their targets so that for every realizable
/// support pair the family `{v¹_U} ∪ {(v²_U)^{⊕n₁}}` is affinely
/// independent; then no value of the first map can equal a periodically
/// extended value of the second.
#[allow(clippy::too_many_arguments)]
pub fn build_f_disjoint(
    pou1: &PartitionOfUnity,
    pou2: &PartitionOfUnity,
    targets1: &VertexTable,
    targets2: &VertexTable,
    n1: usize,
    n2: usize,
    d: usize,
    eps: &Rat,
    seed: u64,
    sys: &SymbolicSystem,
) -> Result<(VertexTable, VertexTable, FCertificate)> {
    if n1 < n2 {
        return Err(Error::Precondition("first block count must be the larger".into()));
    }
    if targets1.n != n1 || targets2.n != n2 || targets1.d != d || targets2.d != d {
        return Err(Error::Precondition("target shapes disagree with (n, d)".into()));
    }
    let ord1 = pou1.cover_ord(sys)?;
    let ord2 = pou2.cover_ord(sys)?;
    if 2 * ord1 >= n1 * d || 2 * ord2 >= n2 * d {
        return Err(Error::Precondition("cover order too large for the block size".into()));
    }
    // supports must be spatially disjoint
    let mut r1 = Region::empty();
    for m in &pou1.members {
        r1 = r1.union(m, sys)?;
    }
    for m in &pou2.members {
        if !r1.disjoint(m, sys)? {
            return Err(Error::Precondition("cover supports are not disjoint".into()));
        }
    }

    let supports1 = pou1.support_sets(sys)?;
    let supports2 = pou2.support_sets(sys)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'attempt: for attempt in 1..=MAX_TRIES {
        let t1 = sample_table(&mut rng, targets1, eps);
        let t2 = sample_table(&mut rng, targets2, eps);
        let mut checks = Vec::new();
        for a in &supports1 {
            for b in &supports2 {
                let mut fam: Vec<Vec<Rat>> =
                    a.iter().map(|&u| t1.vectors[u].clone()).collect();
                fam.extend(b.iter().map(|&u| oplus(&t2.vectors[u], d, n1)));
                if !affinely_independent(&fam)? {
                    continue 'attempt;
                }
                checks.push(RankCheck {
                    description: format!(
                        "supports {a:?} + extended {b:?} affinely independent"
                    ),
                    expected: 1,
                    observed: 1,
                });
            }
        }
        let cert = FCertificate { seed, attempts: attempt, checks, paired: Vec::new() };
        return Ok((t1, t2, cert));
    }
    Err(Error::RetriesExhausted {
        tries: MAX_TRIES,
        context: "disjoint-support table sampling".into(),
    })
}

/// Layout induced by a support pair under the cyclic shift `l` (shared
/// members reuse their symbols rotated by `l·d` coordinates); only defined
/// when the shape is (2k−1) × 2k.
fn translation_layout(
    a: &[usize],
    b: &[usize],
    nd: usize,
    shift: usize,
) -> Option<SymbolLayout> {
    let cols = a.len() + b.len();
    if cols != nd + 1 || nd % 2 == 0 {
        return None;
    }
    let k = (nd + 1) / 2;
    let mut entries = vec![vec![0u32; cols]; nd];
    let mut ids: BTreeMap<usize, u32> = BTreeMap::new();
    let mut next = 0u32;
    for (col, &u) in a.iter().enumerate() {
        let base = *ids.entry(u).or_insert_with(|| {
            let v = next;
            next += nd as u32;
            v
        });
        for (row, e) in entries.iter_mut().enumerate() {
            e[col] = base + row as u32;
        }
    }
    for (j, &u) in b.iter().enumerate() {
        let col = a.len() + j;
        let base = *ids.entry(u).or_insert_with(|| {
            let v = next;
            next += nd as u32;
            v
        });
        for (row, e) in entries.iter_mut().enumerate() {
            e[col] = base + ((row + shift) % nd) as u32;
        }
    }
    let layout = SymbolLayout { k, entries };
    layout.validate().ok().map(|()| layout)
}

/// Sample a table near its targets so that for every realizable support
/// pair the family `{v_U} ∪ {(v_U)^{•l}}` is affinely independent; then no
/// value of the map can equal a cyclically shifted value.
#[allow(clippy::too_many_arguments)]
pub fn build_f_translation(
    pou: &PartitionOfUnity,
    targets: &VertexTable,
    n: usize,
    l: usize,
    d: usize,
    eps: &Rat,
    seed: u64,
    sys: &SymbolicSystem,
) -> Result<(VertexTable, FCertificate)> {
    if l == 0 || l >= n {
        return Err(Error::Precondition("shift must satisfy 1 <= l <= n−1".into()));
    }
    if targets.n != n || targets.d != d {
        return Err(Error::Precondition("target shapes disagree with (n, d)".into()));
    }
    let ord_g = pou.cover_ord(sys)?;
    if 2 * ord_g >= n * d {
        return Err(Error::Precondition("cover order too large for the block size".into()));
    }
    let supports = pou.support_sets(sys)?;
    let nd = n * d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'attempt: for attempt in 1..=MAX_TRIES {
        let t = sample_table(&mut rng, targets, eps);
        let mut checks = Vec::new();
        let mut paired = Vec::new();
        for a in &supports {
            for b in &supports {
                let mut fam: Vec<Vec<Rat>> =
                    a.iter().map(|&u| t.vectors[u].clone()).collect();
                fam.extend(b.iter().map(|&u| bullet(&t.vectors[u], d, l)));
                if !affinely_independent(&fam)? {
                    continue 'attempt;
                }
                checks.push(RankCheck {
                    description: format!(
                        "supports {a:?} + shifted {b:?} affinely independent"
                    ),
                    expected: 1,
                    observed: 1,
                });
                if a.iter().any(|u| b.contains(u)) {
                    if let Some(layout) = translation_layout(a, b, nd, l * d) {
                        paired.push(paired_symbol_matrix_check(&layout, seed ^ attempt as u64)?);
                    }
                }
            }
        }
        let cert = FCertificate { seed, attempts: attempt, checks, paired };
        return Ok((t, cert));
    }
    Err(Error::RetriesExhausted {
        tries: MAX_TRIES,
        context: "shifted-support table sampling".into(),
    })
}

/// Sample a table of `N` blocks so that every convex combination of two
/// values at consecutive window offsets avoids the periodicity subspace of
/// period `n` over `2S` blocks: for every realizable support pair and every
/// offset, the subspace basis together with the involved slices has full
/// expected rank `nd + |γ₀| + |γ₁|`, which rules out all mixing weights at
/// once.
#[allow(clippy::too_many_arguments)]
pub fn build_f_avoid_periodic(
    pou: &PartitionOfUnity,
    targets: &VertexTable,
    big_n: usize,
    s: usize,
    n: usize,
    d: usize,
    eps: &Rat,
    seed: u64,
    sys: &SymbolicSystem,
) -> Result<(VertexTable, FCertificate)> {
    if big_n <= 2 * s {
        return Err(Error::Precondition("need N > 2S".into()));
    }
    if targets.n != big_n || targets.d != d {
        return Err(Error::Precondition("target shapes disagree with (N, d)".into()));
    }
    let ord_g = pou.cover_ord(sys)?;
    // ord(γ)+1 ≤ (S − n/2)·d, kept in integers
    if 2 * (ord_g + 1) > (2 * s).saturating_sub(n) * d {
        return Err(Error::Precondition(
            "cover order too large for the periodicity-avoidance bound".into(),
        ));
    }
    let sub = PeriodicitySubspace::new(n, s, d)?;
    let basis = sub.basis();
    let nd = n * d;
    let supports = pou.support_sets(sys)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'attempt: for attempt in 1..=MAX_TRIES {
        let t = sample_table(&mut rng, targets, eps);
        let mut checks = Vec::new();
        for g0 in &supports {
            for g1 in &supports {
                let expected = nd + g0.len() + g1.len();
                for l in 0..big_n - 2 * s {
                    let mut fam = basis.clone();
                    for &u in g0 {
                        fam.push(block_slice(&t.vectors[u], d, l, 2 * s));
                    }
                    for &u in g1 {
                        fam.push(block_slice(&t.vectors[u], d, l + 1, 2 * s));
                    }
                    let observed = rank_exact(&fam);
                    if observed != expected {
                        continue 'attempt;
                    }
                    checks.push(RankCheck {
                        description: format!(
                            "offset {l}: subspace + slices of {g0:?}/{g1:?} full rank"
                        ),
                        expected,
                        observed,
                    });
                }
            }
        }
        let cert = FCertificate { seed, attempts: attempt, checks, paired: Vec::new() };
        return Ok((t, cert));
    }
    Err(Error::RetriesExhausted {
        tries: MAX_TRIES,
        context: "periodicity-avoiding table sampling".into(),
    })
}

// ---------------------------------------------------------------------------
// Embedding functions
// ---------------------------------------------------------------------------

/// A possibly non-integer tower coordinate: the marker return time plus a
/// constant rational offset.
#[derive(Clone, Debug)]
pub struct RealRokhlin {
    pub base: RokhlinFunction,
    pub offset: Rat,
}

impl RealRokhlin {
    pub fn integer(base: RokhlinFunction) -> RealRokhlin {
        RealRokhlin { base, offset: Rat::zero() }
    }

    pub fn eval_at(&self, x: &Window, shift: i64, sys: &SymbolicSystem) -> Result<Rat> {
        Ok(rat_int(self.base.eval_at(x, shift, sys)? as i64) + &self.offset)
    }
}

/// A window-evaluable map into `[0,1]^d` for some `d`.
#[derive(Clone, Debug)]
pub enum EmbeddingFunction {
    /// constant value
    Constant { value: Vec<Rat> },
    /// `f(x) = F(x)|_block`
    TableBlock { pou: PartitionOfUnity, table: VertexTable, block: usize },
    /// tower interpolation: `f(x) = (1−n′)·F(T^{−n̲}x)|_{n̲} + n′·F(T^{−n̄}x)|_{n̄}`
    Interpolated { pou: PartitionOfUnity, table: VertexTable, rokhlin: RealRokhlin, m: usize },
    /// direct block read `F(T^{−n̲}x)|_{n̲}`, requiring an integer tower
    /// coordinate
    DirectBlock { pou: PartitionOfUnity, table: VertexTable, rokhlin: RealRokhlin, m: usize },
    /// base-|alphabet| digit code of the window `[0, width)`: injective on
    /// width-`width` words
    DigitCode { width: usize },
    /// `clamp(f̃ + g)` with `g` supported on a clopen region
    Clamped {
        tilde: Box<EmbeddingFunction>,
        region: Region,
        span: (i64, i64),
        corrections: BTreeMap<Vec<u8>, Vec<Rat>>,
    },
    /// coordinate concatenation
    Concat { parts: Vec<EmbeddingFunction> },
}

impl EmbeddingFunction {
    /// Output dimension.
    pub fn dim(&self) -> usize {
        match self {
            EmbeddingFunction::Constant { value } => value.len(),
            EmbeddingFunction::TableBlock { table, .. }
            | EmbeddingFunction::Interpolated { table, .. }
            | EmbeddingFunction::DirectBlock { table, .. } => table.d,
            EmbeddingFunction::DigitCode { .. } => 1,
            EmbeddingFunction::Clamped { tilde, .. } => tilde.dim(),
            EmbeddingFunction::Concat { parts } => parts.iter().map(|p| p.dim()).sum(),
        }
    }

    /// Evaluate at `T^{shift}x`.
    pub fn eval_at(&self, x: &Window, shift: i64, sys: &SymbolicSystem) -> Result<Vec<Rat>> {
        match self {
            EmbeddingFunction::Constant { value } => Ok(value.clone()),
            EmbeddingFunction::TableBlock { pou, table, block } => {
                let v = f_eval(pou, table, x, shift, sys)?;
                Ok(VertexTable::block(&v, table.d, *block).to_vec())
            }
            EmbeddingFunction::Interpolated { pou, table, rokhlin, m } => {
                let nv = rokhlin.eval_at(x, shift, sys)?;
                let m_i = *m as i64;
                let lo_idx = mod_i64(floor_i64(&nv), m_i) as usize;
                let hi_idx = mod_i64(ceil_i64(&nv), m_i) as usize;
                let frac = fract(&nv);
                let v_lo = f_eval(pou, table, x, shift - lo_idx as i64, sys)?;
                let b_lo = VertexTable::block(&v_lo, table.d, lo_idx);
                if frac.is_zero() {
                    return Ok(b_lo.to_vec());
                }
                let v_hi = f_eval(pou, table, x, shift - hi_idx as i64, sys)?;
                let b_hi = VertexTable::block(&v_hi, table.d, hi_idx);
                let one_m = Rat::one() - &frac;
                Ok(b_lo
                    .iter()
                    .zip(b_hi)
                    .map(|(a, b)| a * &one_m + b * &frac)
                    .collect())
            }
            EmbeddingFunction::DirectBlock { pou, table, rokhlin, m } => {
                let nv = rokhlin.eval_at(x, shift, sys)?;
                if !fract(&nv).is_zero() {
                    return Err(Error::Precondition(
                        "direct block read needs an integer tower coordinate".into(),
                    ));
                }
                let idx = mod_i64(floor_i64(&nv), *m as i64) as usize;
                let v = f_eval(pou, table, x, shift - idx as i64, sys)?;
                Ok(VertexTable::block(&v, table.d, idx).to_vec())
            }
            EmbeddingFunction::DigitCode { width } => {
                let word = read_word(x, 0, *width as i64, shift)?;
                let base = rat_int(
                    sys.alphabet.len().max(2) as i64,
                );
                let mut value = Rat::zero();
                let mut scale = Rat::one();
                for s in word {
                    scale /= &base;
                    value += rat_int(s as i64) * &scale;
                }
                Ok(vec![value])
            }
            EmbeddingFunction::Clamped { tilde, region, span, corrections } => {
                let mut v = tilde.eval_at(x, shift, sys)?;
                let word = read_word(x, span.0, span.1, shift)?;
                let in_region = match region {
                    Region::Cylinders { .. } => {
                        region.expanded_words(sys, span.0, span.1)?.contains(&word)
                    }
                    Region::Intervals { .. } => {
                        return Err(Error::UnsupportedBackend(
                            "clamped extension needs the cylinder backend".into(),
                        ))
                    }
                };
                if in_region {
                    let delta = corrections.get(&word).ok_or_else(|| {
                        Error::VerificationFailed("missing correction for region word".into())
                    })?;
                    v = v
                        .iter()
                        .zip(delta)
                        .map(|(a, b)| clamp01(a + b))
                        .collect();
                }
                Ok(v)
            }
            EmbeddingFunction::Concat { parts } => {
                let mut out = Vec::new();
                for p in parts {
                    out.extend(p.eval_at(x, shift, sys)?);
                }
                Ok(out)
            }
        }
    }

    pub fn eval(&self, x: &Window, sys: &SymbolicSystem) -> Result<Vec<Rat>> {
        self.eval_at(x, 0, sys)
    }
}

/// Extend a partial map defined on a clopen region to the whole space by
/// clamping a corrected version of the ambient target: `f = clamp(f̃ + g)`
/// where `g` carries `f_partial − f̃` on the region and vanishes elsewhere.
/// The correction gap must stay below `ε`.
pub fn clamp_extend(
    f_partial: &EmbeddingFunction,
    region: &Region,
    f_tilde: &EmbeddingFunction,
    eps: &Rat,
    sys: &SymbolicSystem,
) -> Result<EmbeddingFunction> {
    let Some((lo, hi)) = region.span() else {
        // empty region: nothing to correct
        return Ok(f_tilde.clone());
    };
    if f_partial.dim() != f_tilde.dim() {
        return Err(Error::Precondition("dimension mismatch".into()));
    }
    let words = region.expanded_words(sys, lo, hi)?;
    let mut corrections = BTreeMap::new();
    for w in words {
        let x = Window::new(lo, w.clone());
        let a = f_partial.eval(&x, sys)?;
        let b = f_tilde.eval(&x, sys)?;
        let delta: Vec<Rat> = a.iter().zip(&b).map(|(p, q)| p - q).collect();
        if delta.iter().any(|c| c.abs() >= *eps) {
            return Err(Error::Precondition(format!(
                "partial map deviates from the target by at least {eps} on the region"
            )));
        }
        corrections.insert(w, delta);
    }
    Ok(EmbeddingFunction::Clamped {
        tilde: Box::new(f_tilde.clone()),
        region: region.clone(),
        span: (lo, hi),
        corrections,
    })
}

/// `(f(T^a x), …, f(T^b x))`.
pub fn orbit_window(
    f: &EmbeddingFunction,
    sys: &SymbolicSystem,
    x: &Window,
    a: i64,
    b: i64,
) -> Result<Vec<Vec<Rat>>> {
    (a..=b).map(|k| f.eval_at(x, k, sys)).collect()
}

/// Do the orbit maps of `f` separate every pair in `K` within the shift
/// range? Returns the margin: the least over pairs of the largest
/// coordinate gap achieved.
pub fn check_k_compatible(
    f: &EmbeddingFunction,
    k_pairs: &[(Window, Window)],
    shifts: (i64, i64),
    sys: &SymbolicSystem,
) -> Result<(bool, Option<Rat>)> {
    let mut margin: Option<Rat> = None;
    for (x, y) in k_pairs {
        let mut best = Rat::zero();
        let mut evaluated = false;
        for k in shifts.0..=shifts.1 {
            let (Ok(fx), Ok(fy)) = (f.eval_at(x, k, sys), f.eval_at(y, k, sys)) else {
                continue;
            };
            evaluated = true;
            for (a, b) in fx.iter().zip(&fy) {
                let gap = (a - b).abs();
                if gap > best {
                    best = gap;
                }
            }
        }
        if !evaluated {
            return Err(Error::WindowExceeded { needed: 0, max: sys.max_window });
        }
        if best.is_zero() {
            return Ok((false, None));
        }
        margin = Some(match margin {
            None => best,
            Some(m) => m.min(best),
        });
    }
    Ok((true, margin))
}

// ---------------------------------------------------------------------------
// Parameter planning and the interpolation pipeline
// ---------------------------------------------------------------------------

/// Tower parameters for the interpolation construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlanParams {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    #[serde(with = "crate::rat::rat_serde")]
    pub eps_prime: Rat,
    #[serde(with = "crate::rat::rat_serde")]
    pub mdim_used: Rat,
}

/// Choose `(N, M, S, ε′)` with `N` divisible by 16, `M = N/2`, `S = M/8`,
/// and `S·d > N·m̂·(1+2ε′)` where `m̂` substitutes `1/32` for a zero
/// estimate. `ε′` is the first workable value on the grid `1/4, 1/8, …`.
pub fn plan_embedding_parameters(mdim_est: &Rat, d: usize) -> Result<PlanParams> {
    if mdim_est < &Rat::zero() {
        return Err(Error::Precondition("negative mean-dimension estimate".into()));
    }
    if mdim_est * rat_int(16) >= rat_int(d as i64) {
        return Err(Error::Precondition(
            "mean-dimension estimate must be below d/16".into(),
        ));
    }
    let used = if mdim_est.is_zero() { rat(1, 32) } else { mdim_est.clone() };
    let bound = rat_int(d as i64) / rat_int(16); // S·d/N with S = N/16
    let mut eps_prime = rat(1, 4);
    let mut found = false;
    for _ in 0..20 {
        if &used * (Rat::one() + &eps_prime * rat_int(2)) < bound {
            found = true;
            break;
        }
        eps_prime /= rat_int(2);
    }
    if !found {
        return Err(Error::Precondition("no workable interpolation slack".into()));
    }
    // the defining inequality is scale-invariant in N, so the smallest
    // 16-divisible choice works
    let n = 16;
    Ok(PlanParams { n, m: n / 2, s: n / 16, eps_prime, mdim_used: used })
}

/// Assemble the tower interpolation evaluator from a vertex table and a
/// tower coordinate of height `m`.
pub fn build_embedding_function(
    pou: &PartitionOfUnity,
    table: &VertexTable,
    rokhlin: RealRokhlin,
    m: usize,
) -> Result<EmbeddingFunction> {
    if table.n != m {
        return Err(Error::Precondition("table block count must equal the tower height".into()));
    }
    if table.vectors.len() != pou.len() {
        return Err(Error::Precondition("table and cover sizes differ".into()));
    }
    if rokhlin.offset < Rat::zero() {
        return Err(Error::Precondition("tower offset must be nonnegative".into()));
    }
    Ok(EmbeddingFunction::Interpolated {
        pou: pou.clone(),
        table: table.clone(),
        rokhlin,
        m,
    })
}

/// The factor map paired with the embedding in separation checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactorMap {
    /// the identity factor: separates exactly what the metric separates
    Identity,
    /// the trivial factor: separates nothing
    Collapse,
}

impl FactorMap {
    pub fn separation(&self, x: &Window, y: &Window) -> Result<Rat> {
        match self {
            FactorMap::Identity => metric_distance(x, y),
            FactorMap::Collapse => Ok(Rat::zero()),
        }
    }
}

/// Result of an exhaustive ε-embedding sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub ok: bool,
    pub pairs_total: usize,
    pub pairs_required: usize,
    /// worst separation margin over the required pairs (`None` when no
    /// pair needed separating)
    #[serde(with = "crate::rat::rat_opt_serde")]
    pub margin: Option<Rat>,
    pub witness: Option<(String, String)>,
}

/// Exhaustively sweep all admissible window pairs at the given width: every
/// pair at metric distance ≥ ε must be separated by the factor map or by
/// some evaluable orbit coordinate of `f`.
pub fn check_epsilon_embedding(
    f: &EmbeddingFunction,
    pi: &FactorMap,
    eps: &Rat,
    width: usize,
    sys: &SymbolicSystem,
) -> Result<EmbeddingReport> {
    let left = -((width / 2) as i64);
    let lang = sys.language(width)?;
    let words: Vec<&Vec<u8>> = lang.iter().collect();
    let mut pairs_total = 0usize;
    let mut pairs_required = 0usize;
    let mut margin: Option<Rat> = None;
    for i in 0..words.len() {
        for j in i + 1..words.len() {
            pairs_total += 1;
            let x = Window::new(left, words[i].clone());
            let y = Window::new(left, words[j].clone());
            let dist = metric_distance(&x, &y)?;
            if &dist < eps {
                continue;
            }
            pairs_required += 1;
            let mut best = pi.separation(&x, &y)?;
            if best.is_zero() {
                // fall back to evaluable orbit coordinates of f
                for k in left..=left + width as i64 {
                    let (Ok(fx), Ok(fy)) = (f.eval_at(&x, k, sys), f.eval_at(&y, k, sys))
                    else {
                        continue;
                    };
                    for (a, b) in fx.iter().zip(&fy) {
                        let gap = (a - b).abs();
                        if gap > best {
                            best = gap;
                        }
                    }
                }
            }
            if best.is_zero() {
                return Ok(EmbeddingReport {
                    ok: false,
                    pairs_total,
                    pairs_required,
                    margin: None,
                    witness: Some((
                        crate::dynsys::word_to_string(words[i]),
                        crate::dynsys::word_to_string(words[j]),
                    )),
                });
            }
            margin = Some(match margin {
                None => best,
                Some(m) => m.min(best),
            });
        }
    }
    Ok(EmbeddingReport { ok: true, pairs_total, pairs_required, margin, witness: None })
}

/// Certificate that a map takes pairwise distinct values on all admissible
/// words of a given width.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InjectivityCertificate {
    pub width: usize,
    pub words_checked: usize,
}

/// Verify window-injectivity of a 1-dimensional map.
pub fn check_injective_on_windows(
    h: &EmbeddingFunction,
    width: usize,
    sys: &SymbolicSystem,
) -> Result<InjectivityCertificate> {
    let lang = sys.language(width)?;
    let mut seen: BTreeMap<Vec<Rat>, Vec<u8>> = BTreeMap::new();
    for w in lang.iter() {
        let x = Window::new(0, w.clone());
        let v = h.eval(&x, sys)?;
        if let Some(prev) = seen.insert(v, w.clone()) {
            return Err(Error::VerificationFailed(format!(
                "map collides on words {} and {}",
                crate::dynsys::word_to_string(&prev),
                crate::dynsys::word_to_string(w)
            )));
        }
    }
    Ok(InjectivityCertificate { width, words_checked: lang.len() })
}

/// Append an injective window code behind the factor map: the combined map
/// separates whatever either part separates. The injectivity of `h` is
/// re-verified, not trusted.
pub fn combine_with_factor(
    g: &EmbeddingFunction,
    h: &EmbeddingFunction,
    width: usize,
    pi: &FactorMap,
    sys: &SymbolicSystem,
) -> Result<(EmbeddingFunction, InjectivityCertificate)> {
    if *pi == FactorMap::Collapse {
        return Err(Error::Precondition(
            "the trivial factor admits no injective composition".into(),
        ));
    }
    let cert = check_injective_on_windows(h, width, sys)?;
    Ok((
        EmbeddingFunction::Concat { parts: vec![g.clone(), h.clone()] },
        cert,
    ))
}

// ---------------------------------------------------------------------------
// Periodic immersion
// ---------------------------------------------------------------------------

/// A vertex table along one periodic orbit: block `k` is the value at
/// `T^k` of the orbit's canonical point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrbitTable {
    /// canonical primitive cycle (lexicographically least rotation)
    pub word: Vec<u8>,
    pub period: usize,
    #[serde(with = "crate::rat::rat_vec_serde")]
    pub values: Vec<Rat>,
}

/// A map on the periodic points of period ≤ `m_max`, injective on orbit
/// coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodicImmersion {
    pub m_max: usize,
    pub d: usize,
    pub orbits: Vec<OrbitTable>,
    pub seed: u64,
    pub attempts: usize,
    pub points: usize,
}

impl PeriodicImmersion {
    /// Value at phase `k` of orbit `o`.
    pub fn value(&self, o: usize, k: usize) -> &[Rat] {
        let t = &self.orbits[o];
        VertexTable::block(&t.values, self.d, k % t.period)
    }

    /// Are all points of the periodic set separated by some orbit
    /// coordinate?
    pub fn check_injective(&self) -> Result<()> {
        let mut points: Vec<(usize, usize)> = Vec::new();
        for (o, t) in self.orbits.iter().enumerate() {
            for p in 0..t.period {
                points.push((o, p));
            }
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let (o1, p1) = points[i];
                let (o2, p2) = points[j];
                let l = lcm(self.orbits[o1].period, self.orbits[o2].period);
                let separated = (0..l).any(|k| self.value(o1, p1 + k) != self.value(o2, p2 + k));
                if !separated {
                    return Err(Error::VerificationFailed(format!(
                        "orbit points ({o1},{p1}) and ({o2},{p2}) share all orbit coordinates"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn lcm(a: usize, b: usize) -> usize {
    num_integer::lcm(a, b)
}

/// Construct a map on all periodic points of period ≤ `m_max` whose orbit
/// coordinates are injective: values along each orbit must not repeat under
/// any cyclic shift, and across orbits no periodic extension of one orbit's
/// values may match a shift of another's. Verified exhaustively.
pub fn build_periodic_immersion(
    sys: &SymbolicSystem,
    m_max: usize,
    d: usize,
    seed: u64,
) -> Result<PeriodicImmersion> {
    if d == 0 {
        return Err(Error::Precondition("dimension must be positive".into()));
    }
    let pset = sys.enumerate_periodic_points(m_max)?;
    let orbits_meta: Vec<(Vec<u8>, usize)> =
        pset.points.iter().map(|w| (w.clone(), w.len())).collect();
    let points: usize = orbits_meta.iter().map(|(_, p)| p).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'attempt: for attempt in 1..=MAX_TRIES {
        let orbits: Vec<OrbitTable> = orbits_meta
            .iter()
            .map(|(w, p)| OrbitTable {
                word: w.clone(),
                period: *p,
                values: (0..p * d).map(|_| sample_unit_rat(&mut rng)).collect(),
            })
            .collect();
        let imm = PeriodicImmersion { m_max, d, orbits, seed, attempts: attempt, points };
        // within-orbit constraint: values aperiodic under cyclic shifts
        for t in &imm.orbits {
            for l in 1..t.period {
                if bullet(&t.values, d, l) == t.values {
                    continue 'attempt;
                }
            }
        }
        if imm.check_injective().is_err() {
            continue 'attempt;
        }
        return Ok(imm);
    }
    Err(Error::RetriesExhausted { tries: MAX_TRIES, context: "periodic immersion sampling".into() })
}

// ---------------------------------------------------------------------------
// Full interpolation pipeline
// ---------------------------------------------------------------------------

/// Everything produced by the end-to-end construction; reconstructible
/// bit-exactly from the recorded data.
#[derive(Clone, Debug)]
pub struct EmbeddingPipeline {
    pub params: PlanParams,
    pub marker: MarkerCertificate,
    pub cover_width: usize,
    pub table: VertexTable,
    pub certificate: FCertificate,
    pub seed: u64,
    pub epsilon: Rat,
    pub f: EmbeddingFunction,
}

/// Run the whole construction on an aperiodic subshift: plan tower
/// parameters, build a deep marker and its return-time function, pick a
/// cylinder-partition cover, sample a vertex table near the constant-½
/// target, and assemble the interpolation evaluator.
pub fn build_embedding_pipeline(
    sys: &SymbolicSystem,
    d: usize,
    epsilon: &Rat,
    seed: u64,
) -> Result<EmbeddingPipeline> {
    if d == 0 || epsilon <= &Rat::zero() {
        return Err(Error::Precondition("need d >= 1 and ε > 0".into()));
    }
    let params = plan_embedding_parameters(&Rat::zero(), d)?;
    let m_height = params.m;
    // the exceptional set must have 2M−2 disjoint iterates
    let marker = crate::towers::build_marker(sys, 2 * m_height - 1, 0)?;
    let rokhlin = crate::towers::rokhlin_from_marker(&marker, sys)?;

    let cover_width = params.n + 1;
    let cover = Cover::cylinder_partition(sys, cover_width, 0)?;
    let pou = partition_of_unity(&cover, sys)?;

    // target: the constant map at ½ in every coordinate
    let half = vec![rat(1, 2); m_height * d];
    let targets = VertexTable::new(m_height, d, vec![half; pou.len()])?;

    // sample pairwise-distinct vertex vectors near the target
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampled = None;
    let mut attempts = 0;
    for attempt in 1..=MAX_TRIES {
        attempts = attempt;
        let t = sample_table(&mut rng, &targets, epsilon);
        let distinct = t
            .vectors
            .iter()
            .collect::<BTreeSet<_>>()
            .len()
            == t.vectors.len();
        if distinct {
            sampled = Some(t);
            break;
        }
    }
    let Some(table) = sampled else {
        return Err(Error::RetriesExhausted {
            tries: MAX_TRIES,
            context: "pipeline table sampling".into(),
        });
    };
    let certificate = FCertificate {
        seed,
        attempts,
        checks: vec![RankCheck {
            description: "vertex vectors pairwise distinct".into(),
            expected: 1,
            observed: 1,
        }],
        paired: Vec::new(),
    };
    let f = build_embedding_function(&pou, &table, RealRokhlin::integer(rokhlin), m_height)?;
    Ok(EmbeddingPipeline {
        params,
        marker,
        cover_width,
        table,
        certificate,
        seed,
        epsilon: epsilon.clone(),
        f,
    })
}

/// Serializable record of a pipeline run, sufficient to rebuild the exact
/// evaluator.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmbeddingArtifact {
    pub system: crate::dynsys::SystemDescriptor,
    pub d: usize,
    pub seed: u64,
    #[serde(with = "crate::rat::rat_serde")]
    pub epsilon: Rat,
    pub params: PlanParams,
    pub marker: MarkerCertificate,
    pub cover_width: usize,
    pub table: VertexTable,
}

impl EmbeddingArtifact {
    pub fn from_pipeline(sys: &SymbolicSystem, d: usize, p: &EmbeddingPipeline) -> Self {
        EmbeddingArtifact {
            system: sys.descriptor(),
            d,
            seed: p.seed,
            epsilon: p.epsilon.clone(),
            params: p.params.clone(),
            marker: p.marker.clone(),
            cover_width: p.cover_width,
            table: p.table.clone(),
        }
    }

    /// Rebuild the evaluator, re-verifying the marker certificate.
    pub fn rebuild(&self) -> Result<(SymbolicSystem, EmbeddingFunction)> {
        let sys = self.system.build()?;
        crate::towers::verify_marker(&self.marker, &sys)?;
        let rokhlin = crate::towers::rokhlin_from_marker(&self.marker, &sys)?;
        let cover = Cover::cylinder_partition(&sys, self.cover_width, 0)?;
        let pou = partition_of_unity(&cover, &sys)?;
        let f = build_embedding_function(
            &pou,
            &self.table,
            RealRokhlin::integer(rokhlin),
            self.params.m,
        )?;
        Ok((sys, f))
    }
}
