//! Randomized general-position constructions with exact certificates.
//!
//! "Almost surely" statements about Lebesgue-generic vectors are realized as
//! a falsifiable procedure: sample exact rationals uniformly from the grid
//! `k/(2³¹−1)`, verify the claimed rank condition with exact arithmetic,
//! resample on failure up to a fixed retry bound, and record everything in a
//! certificate that re-verifies from its own data.

use num_traits::Signed;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{det_laplace, rank, Matrix, Poly};
use crate::rat::{rat_int, Rat};

/// Denominator of the sampling grid.
pub const SAMPLE_DENOM: i64 = (1 << 31) - 1;

/// Resampling bound; exceeding it signals a bug, not bad luck.
pub const MAX_TRIES: usize = 16;

/// Draw one grid rational in `[0, 1]`.
pub fn sample_unit_rat(rng: &mut ChaCha8Rng) -> Rat {
    crate::rat::rat(rng.gen_range(0..=SAMPLE_DENOM), SAMPLE_DENOM)
}

/// Draw a vector of grid rationals.
pub fn sample_vector(rng: &mut ChaCha8Rng, m: usize) -> Vec<Rat> {
    (0..m).map(|_| sample_unit_rat(rng)).collect()
}

/// Exact rank of a rational matrix (rows).
pub fn rank_exact(matrix: &Matrix<Rat>) -> usize {
    rank(matrix)
}

/// Are the vectors affinely independent (differences to the first vector
/// linearly independent)?
pub fn affinely_independent(vs: &[Vec<Rat>]) -> Result<bool> {
    if vs.is_empty() {
        return Err(Error::Precondition("affine independence of an empty list".into()));
    }
    let m = vs[0].len();
    if vs.iter().any(|v| v.len() != m) {
        return Err(Error::Precondition("vectors of unequal dimension".into()));
    }
    if vs.len() == 1 {
        return Ok(true);
    }
    let diffs: Matrix<Rat> = vs[1..]
        .iter()
        .map(|v| v.iter().zip(&vs[0]).map(|(a, b)| a - b).collect())
        .collect();
    Ok(rank(&diffs) == vs.len() - 1)
}

/// One recorded exact rank fact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankCheck {
    pub description: String,
    pub expected: usize,
    pub observed: usize,
}

/// Which construction a certificate certifies; used to re-run the exact
/// checks from the certificate data alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CertKind {
    /// rank(given ∪ sampled) = |given| + |sampled| in dimension `m`
    LinearExtension { m: usize },
    /// given ∪ sampled affinely independent in dimension `m`
    AffineExtension { m: usize },
    /// two overlapping-coordinate vectors add 2 to dim(V); `sampled` holds
    /// the scalar stream `x_1..x_{r+m}` as one row
    RankTwoExtension { r: usize, m: usize },
    /// columns of the realized symbol layout are affinely independent
    PairedSymbol { layout: SymbolLayout },
}

/// A reproducible, self-verifying record of a randomized construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndependenceCertificate {
    pub kind: CertKind,
    pub seed: u64,
    /// how many samples were drawn before the checks passed (1 = first try)
    pub attempts: usize,
    #[serde(with = "crate::rat::rat_mat_serde")]
    pub given: Vec<Vec<Rat>>,
    #[serde(with = "crate::rat::rat_mat_serde")]
    pub sampled: Vec<Vec<Rat>>,
    pub checks: Vec<RankCheck>,
}

impl IndependenceCertificate {
    /// Re-verify every recorded fact from the certificate alone.
    pub fn verify(&self) -> Result<()> {
        let recomputed = match &self.kind {
            CertKind::LinearExtension { m } => {
                let mut all = self.given.clone();
                all.extend(self.sampled.iter().cloned());
                if all.iter().any(|v| v.len() != *m) {
                    return Err(Error::VerificationFailed("dimension mismatch".into()));
                }
                vec![RankCheck {
                    description: "rank of given + sampled vectors".into(),
                    expected: all.len(),
                    observed: rank(&all),
                }]
            }
            CertKind::AffineExtension { m } => {
                let mut all = self.given.clone();
                all.extend(self.sampled.iter().cloned());
                if all.iter().any(|v| v.len() != *m) {
                    return Err(Error::VerificationFailed("dimension mismatch".into()));
                }
                vec![RankCheck {
                    description: "affine rank of given + sampled points".into(),
                    expected: 1,
                    observed: affinely_independent(&all)? as usize,
                }]
            }
            CertKind::RankTwoExtension { r, m } => {
                let xs = self
                    .sampled
                    .first()
                    .ok_or_else(|| Error::VerificationFailed("missing sample row".into()))?;
                if xs.len() != r + m {
                    return Err(Error::VerificationFailed("sample stream length".into()));
                }
                let w1 = xs[0..*m].to_vec();
                let w2 = xs[*r..r + m].to_vec();
                let base = rank(&self.given);
                let mut all = self.given.clone();
                all.push(w1);
                all.push(w2);
                vec![RankCheck {
                    description: "dim(V + W) − dim(V)".into(),
                    expected: 2,
                    observed: rank(&all) - base,
                }]
            }
            CertKind::PairedSymbol { layout } => {
                layout.validate()?;
                let values = self
                    .sampled
                    .first()
                    .ok_or_else(|| Error::VerificationFailed("missing symbol values".into()))?;
                let cols = layout.realize(values)?;
                vec![RankCheck {
                    description: "columns affinely independent".into(),
                    expected: 1,
                    observed: affinely_independent(&cols)? as usize,
                }]
            }
        };
        if recomputed != self.checks {
            return Err(Error::VerificationFailed(format!(
                "certificate checks do not reproduce: stored {:?}, recomputed {recomputed:?}",
                self.checks
            )));
        }
        if let Some(bad) = self.checks.iter().find(|c| c.expected != c.observed) {
            return Err(Error::VerificationFailed(format!(
                "check failed: {} (expected {}, observed {})",
                bad.description, bad.expected, bad.observed
            )));
        }
        Ok(())
    }
}

/// Extend a linearly independent family by `s` sampled vectors keeping full
/// rank `r + s` (requires `r + s ≤ m`).
pub fn sample_linear_extension(
    given: &[Vec<Rat>],
    s: usize,
    m: usize,
    seed: u64,
) -> Result<(Vec<Vec<Rat>>, IndependenceCertificate)> {
    let r = given.len();
    if r + s > m {
        return Err(Error::Precondition(format!("need r + s <= m, got {r} + {s} > {m}")));
    }
    if given.iter().any(|v| v.len() != m) {
        return Err(Error::Precondition("given vectors not of dimension m".into()));
    }
    if rank(&given.to_vec()) != r {
        return Err(Error::Precondition("given vectors are not linearly independent".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=MAX_TRIES {
        let sampled: Vec<Vec<Rat>> = (0..s).map(|_| sample_vector(&mut rng, m)).collect();
        let mut all = given.to_vec();
        all.extend(sampled.iter().cloned());
        let observed = rank(&all);
        if observed == r + s {
            let cert = IndependenceCertificate {
                kind: CertKind::LinearExtension { m },
                seed,
                attempts: attempt,
                given: given.to_vec(),
                sampled: sampled.clone(),
                checks: vec![RankCheck {
                    description: "rank of given + sampled vectors".into(),
                    expected: r + s,
                    observed,
                }],
            };
            return Ok((sampled, cert));
        }
    }
    Err(Error::RetriesExhausted {
        tries: MAX_TRIES,
        context: format!("linear extension r={r}, s={s}, m={m}"),
    })
}

/// Extend a family to `r + s` affinely independent points in dimension `m`
/// (requires `r + s ≤ m + 1`). The `r + s = m + 1` case first reaches `m`
/// linearly independent vectors and then adjoins a shifted sample
/// `v' + v_1`, following the two-step construction.
pub fn sample_affine_extension(
    given: &[Vec<Rat>],
    s: usize,
    m: usize,
    seed: u64,
) -> Result<(Vec<Vec<Rat>>, IndependenceCertificate)> {
    let r = given.len();
    if r + s > m + 1 {
        return Err(Error::Precondition(format!("need r + s <= m + 1, got {r} + {s}")));
    }
    if given.iter().any(|v| v.len() != m) {
        return Err(Error::Precondition("given vectors not of dimension m".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=MAX_TRIES {
        let sampled: Vec<Vec<Rat>> = if r + s <= m {
            (0..s).map(|_| sample_vector(&mut rng, m)).collect()
        } else {
            // r + s = m + 1: first fill to m vectors, then shift a fresh
            // sample by the first point
            let mut head: Vec<Vec<Rat>> = (0..s.saturating_sub(1))
                .map(|_| sample_vector(&mut rng, m))
                .collect();
            let mut all = given.to_vec();
            all.extend(head.iter().cloned());
            debug_assert_eq!(all.len(), m);
            let v1 = all
                .first()
                .ok_or_else(|| Error::Precondition("m + 1 points need m >= 1".into()))?
                .clone();
            let vprime = sample_vector(&mut rng, m);
            let last: Vec<Rat> = vprime.iter().zip(&v1).map(|(a, b)| a + b).collect();
            head.push(last);
            head
        };
        let mut all = given.to_vec();
        all.extend(sampled.iter().cloned());
        if affinely_independent(&all)? {
            let cert = IndependenceCertificate {
                kind: CertKind::AffineExtension { m },
                seed,
                attempts: attempt,
                given: given.to_vec(),
                sampled: sampled.clone(),
                checks: vec![RankCheck {
                    description: "affine rank of given + sampled points".into(),
                    expected: 1,
                    observed: 1,
                }],
            };
            return Ok((sampled, cert));
        }
    }
    Err(Error::RetriesExhausted {
        tries: MAX_TRIES,
        context: format!("affine extension r={r}, s={s}, m={m}"),
    })
}

/// Sample a scalar stream `x_1..x_{r+m}` and verify that the two
/// overlapping-coordinate vectors `(x_1..x_m)` and `(x_{r+1}..x_{r+m})`
/// extend `V = span(given)` by exactly 2 dimensions.
pub fn rank_two_extension_check(
    given: &[Vec<Rat>],
    r: usize,
    m: usize,
    seed: u64,
) -> Result<IndependenceCertificate> {
    if r == 0 || r >= m {
        return Err(Error::Precondition(format!("need 1 <= r < m, got r={r}, m={m}")));
    }
    if given.len() > m - 2 || given.iter().any(|v| v.len() != m) {
        return Err(Error::Precondition("need dim(V) <= m − 2 with vectors in R^m".into()));
    }
    let base = rank(&given.to_vec());
    if base != given.len() {
        return Err(Error::Precondition("given vectors are not linearly independent".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=MAX_TRIES {
        let xs = sample_vector(&mut rng, r + m);
        let w1 = xs[0..m].to_vec();
        let w2 = xs[r..r + m].to_vec();
        let mut all = given.to_vec();
        all.push(w1);
        all.push(w2);
        if rank(&all) == base + 2 {
            return Ok(IndependenceCertificate {
                kind: CertKind::RankTwoExtension { r, m },
                seed,
                attempts: attempt,
                given: given.to_vec(),
                sampled: vec![xs],
                checks: vec![RankCheck {
                    description: "dim(V + W) − dim(V)".into(),
                    expected: 2,
                    observed: 2,
                }],
            });
        }
    }
    Err(Error::RetriesExhausted {
        tries: MAX_TRIES,
        context: format!("rank-two extension r={r}, m={m}"),
    })
}

/// A symbolic matrix layout with `2k − 1` rows and `2k` columns: entry
/// `entries[i][j]` is a symbol id. Valid when no symbol repeats within a row
/// or a column and no symbol appears more than twice overall.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolLayout {
    pub k: usize,
    pub entries: Vec<Vec<u32>>,
}

impl SymbolLayout {
    pub fn rows(&self) -> usize {
        2 * self.k - 1
    }

    pub fn cols(&self) -> usize {
        2 * self.k
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0
            || self.entries.len() != self.rows()
            || self.entries.iter().any(|r| r.len() != self.cols())
        {
            return Err(Error::Malformed("layout shape must be (2k−1) × 2k".into()));
        }
        let mut count: std::collections::BTreeMap<u32, Vec<(usize, usize)>> =
            std::collections::BTreeMap::new();
        for (i, row) in self.entries.iter().enumerate() {
            for (j, &s) in row.iter().enumerate() {
                count.entry(s).or_default().push((i, j));
            }
        }
        for (s, occ) in &count {
            if occ.len() > 2 {
                return Err(Error::Malformed(format!("symbol {s} appears {} times", occ.len())));
            }
            if occ.len() == 2 {
                let ((i1, j1), (i2, j2)) = (occ[0], occ[1]);
                if i1 == i2 || j1 == j2 {
                    return Err(Error::Malformed(format!(
                        "symbol {s} repeats within a row or column"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn num_symbols(&self) -> usize {
        let mut set = std::collections::BTreeSet::new();
        for row in &self.entries {
            set.extend(row.iter().copied());
        }
        set.len()
    }

    /// Substitute `values[s]` for symbol `s` and return the columns.
    pub fn realize(&self, values: &[Rat]) -> Result<Vec<Vec<Rat>>> {
        let mut cols = vec![vec![rat_int(0); self.rows()]; self.cols()];
        for (i, row) in self.entries.iter().enumerate() {
            for (j, &s) in row.iter().enumerate() {
                let v = values
                    .get(s as usize)
                    .ok_or_else(|| Error::Malformed(format!("missing value for symbol {s}")))?;
                cols[j][i] = v.clone();
            }
        }
        Ok(cols)
    }

    /// Columns as symbolic polynomials (one variable per symbol).
    pub fn symbolic_columns(&self) -> Vec<Vec<Poly>> {
        let mut cols = vec![vec![Poly::constant(0); self.rows()]; self.cols()];
        for (i, row) in self.entries.iter().enumerate() {
            for (j, &s) in row.iter().enumerate() {
                cols[j][i] = Poly::var(s);
            }
        }
        cols
    }

    /// All-distinct-symbols layout of size `k`.
    pub fn all_distinct(k: usize) -> SymbolLayout {
        let rows = 2 * k - 1;
        let cols = 2 * k;
        let entries = (0..rows)
            .map(|i| (0..cols).map(|j| (i * cols + j) as u32).collect())
            .collect();
        SymbolLayout { k, entries }
    }

    /// The layouts actually produced by the translation construction: the
    /// matrix has `k` left columns and `k` right columns; the first `p`
    /// right columns reuse the symbols of the corresponding left columns
    /// cyclically shifted by `s` rows; all other symbols are fresh.
    pub fn translation_family(k: usize) -> Vec<SymbolLayout> {
        let n = 2 * k - 1; // rows
        let mut out = Vec::new();
        for p in 0..=k {
            for shift in 1..n.max(2) {
                if p > 0 && shift >= n {
                    continue;
                }
                let mut next_sym = 0u32;
                let mut entries = vec![vec![0u32; 2 * k]; n];
                // left columns: fresh symbols, column j owns symbols
                // indexed by row
                let mut left_syms = vec![vec![0u32; n]; k];
                for (j, ls) in left_syms.iter_mut().enumerate() {
                    for (i, slot) in ls.iter_mut().enumerate() {
                        *slot = next_sym;
                        entries[i][j] = next_sym;
                        next_sym += 1;
                    }
                }
                for j in 0..k {
                    if j < p {
                        // shared column: row i holds the left symbol at
                        // row (i + shift) mod n
                        for i in 0..n {
                            entries[i][k + j] = left_syms[j][(i + shift) % n];
                        }
                    } else {
                        for entry_row in entries.iter_mut() {
                            entry_row[k + j] = next_sym;
                            next_sym += 1;
                        }
                    }
                }
                let layout = SymbolLayout { k, entries };
                if layout.validate().is_ok() && !out.contains(&layout) {
                    out.push(layout);
                }
                if p == 0 {
                    break; // shift is irrelevant without shared columns
                }
            }
        }
        out
    }

    /// Every abstract valid layout of size `k` up to renaming of symbols:
    /// choose a partial matching of the `(2k−1) · 2k` cells into pairs with
    /// distinct rows and columns; matched cells share a symbol, all other
    /// cells are fresh. Exponential — only usable for `k ≤ 2`.
    pub fn all_abstract(k: usize) -> Vec<SymbolLayout> {
        let rows = 2 * k - 1;
        let cols = 2 * k;
        let cells: Vec<(usize, usize)> =
            (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).collect();
        let mut out = Vec::new();
        // pairs[c] = partner cell index, usize::MAX if unpaired
        fn rec(
            idx: usize,
            cells: &[(usize, usize)],
            partner: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if idx == cells.len() {
                out.push(partner.clone());
                return;
            }
            if partner[idx] != usize::MAX {
                rec(idx + 1, cells, partner, out);
                return;
            }
            // leave unpaired
            rec(idx + 1, cells, partner, out);
            // pair with a later free cell in a different row and column
            let (ri, ci) = cells[idx];
            for j in idx + 1..cells.len() {
                if partner[j] != usize::MAX {
                    continue;
                }
                let (rj, cj) = cells[j];
                if ri != rj && ci != cj {
                    partner[idx] = j;
                    partner[j] = idx;
                    rec(idx + 1, cells, partner, out);
                    partner[idx] = usize::MAX;
                    partner[j] = usize::MAX;
                }
            }
        }
        let mut matchings = Vec::new();
        rec(0, &cells, &mut vec![usize::MAX; cells.len()], &mut matchings);
        for matching in matchings {
            let mut entries = vec![vec![u32::MAX; cols]; rows];
            let mut next = 0u32;
            for (c, &(i, j)) in cells.iter().enumerate() {
                if entries[i][j] != u32::MAX {
                    continue;
                }
                entries[i][j] = next;
                if matching[c] != usize::MAX {
                    let (i2, j2) = cells[matching[c]];
                    entries[i2][j2] = next;
                }
                next += 1;
            }
            out.push(SymbolLayout { k, entries });
        }
        out
    }
}

/// Randomized check of the paired-symbol lemma: substitute grid rationals
/// for the symbols and verify the 2k columns are affinely independent.
pub fn paired_symbol_matrix_check(
    layout: &SymbolLayout,
    seed: u64,
) -> Result<IndependenceCertificate> {
    layout.validate()?;
    let nsym = 1 + layout
        .entries
        .iter()
        .flat_map(|r| r.iter().copied())
        .max()
        .unwrap_or(0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=MAX_TRIES {
        let values = sample_vector(&mut rng, nsym);
        let cols = layout.realize(&values)?;
        if affinely_independent(&cols)? {
            return Ok(IndependenceCertificate {
                kind: CertKind::PairedSymbol { layout: layout.clone() },
                seed,
                attempts: attempt,
                given: Vec::new(),
                sampled: vec![values],
                checks: vec![RankCheck {
                    description: "columns affinely independent".into(),
                    expected: 1,
                    observed: 1,
                }],
            });
        }
    }
    Err(Error::RetriesExhausted {
        tries: MAX_TRIES,
        context: format!("paired-symbol realization k={}", layout.k),
    })
}

/// Does the layout's affine-independence determinant vanish identically?
/// Exact symbolic test: subtract the last column from the others and expand
/// the resulting square polynomial matrix.
pub fn layout_det_identically_zero(layout: &SymbolLayout) -> Result<bool> {
    layout.validate()?;
    let cols = layout.symbolic_columns();
    let n = layout.rows();
    let last = &cols[layout.cols() - 1];
    let reduced: Matrix<Poly> = (0..n)
        .map(|i| (0..n).map(|j| cols[j][i].clone() - last[i].clone()).collect())
        .collect();
    Ok(det_laplace(&reduced).is_identically_zero())
}

/// Report of the exhaustive symbolic verification at small `k`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BruteVerifyReport {
    pub k: usize,
    pub layouts_checked: usize,
    pub all_nonzero: bool,
    /// whether every abstract layout was exhausted (k ≤ 2) or only the
    /// family generated by the translation construction (k = 3)
    pub abstract_exhaustive: bool,
}

/// Exhaustive symbolic verification that the determinant polynomial is not
/// identically zero for every structurally distinct layout: all abstract
/// layouts at `k ≤ 2`, the translation-construction family at `k = 3`.
pub fn brute_verify(k: usize) -> Result<BruteVerifyReport> {
    if k == 0 || k > 3 {
        return Err(Error::Precondition("brute_verify supports 1 <= k <= 3".into()));
    }
    let (layouts, abstract_exhaustive) = if k <= 2 {
        let mut ls = SymbolLayout::all_abstract(k);
        for extra in SymbolLayout::translation_family(k) {
            if !ls.contains(&extra) {
                ls.push(extra);
            }
        }
        (ls, true)
    } else {
        (SymbolLayout::translation_family(k), false)
    };
    let mut all_nonzero = true;
    for layout in &layouts {
        if layout_det_identically_zero(layout)? {
            all_nonzero = false;
        }
    }
    Ok(BruteVerifyReport { k, layouts_checked: layouts.len(), all_nonzero, abstract_exhaustive })
}

/// The periodicity subspace of `2S` blocks of size `d`: vectors whose blocks
/// agree along residues mod `n`. Its dimension is `n · d` (for `n ≤ 2S`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicitySubspace {
    pub n: usize,
    pub s: usize,
    pub d: usize,
}

impl PeriodicitySubspace {
    pub fn new(n: usize, s: usize, d: usize) -> Result<PeriodicitySubspace> {
        if n == 0 || s == 0 || d == 0 || n > 2 * s {
            return Err(Error::Precondition(format!(
                "need 1 <= n <= 2S with positive d, got n={n}, S={s}, d={d}"
            )));
        }
        Ok(PeriodicitySubspace { n, s, d })
    }

    pub fn ambient_dim(&self) -> usize {
        2 * self.s * self.d
    }

    /// Indicator basis: one vector per (residue mod n, block coordinate).
    pub fn basis(&self) -> Vec<Vec<Rat>> {
        let mut out = Vec::new();
        for res in 0..self.n {
            for coord in 0..self.d {
                let mut v = vec![rat_int(0); self.ambient_dim()];
                for block in 0..2 * self.s {
                    if block % self.n == res {
                        v[block * self.d + coord] = rat_int(1);
                    }
                }
                out.push(v);
            }
        }
        out
    }

    pub fn contains(&self, z: &[Rat]) -> Result<bool> {
        Ok(self.distance(z)? == rat_int(0))
    }

    /// Max coordinate gap over congruent block pairs (sup-norm convention).
    pub fn distance(&self, z: &[Rat]) -> Result<Rat> {
        if z.len() != self.ambient_dim() {
            return Err(Error::Precondition(format!(
                "vector has {} coordinates, expected {}",
                z.len(),
                self.ambient_dim()
            )));
        }
        let mut worst = rat_int(0);
        for a in 0..2 * self.s {
            for b in a + 1..2 * self.s {
                if a % self.n == b % self.n {
                    for i in 0..self.d {
                        let gap = (&z[a * self.d + i] - &z[b * self.d + i]).abs();
                        if gap > worst {
                            worst = gap;
                        }
                    }
                }
            }
        }
        Ok(worst)
    }
}

/// Is `p` in the convex hull of `vertices`? Exact: searches affinely
/// independent subsets (of size ≤ dim + 1) for nonnegative barycentric
/// coordinates. Intended for small vertex counts.
pub fn in_convex_hull(p: &[Rat], vertices: &[Vec<Rat>]) -> Result<bool> {
    if vertices.is_empty() {
        return Ok(false);
    }
    let dim = p.len();
    if vertices.iter().any(|v| v.len() != dim) {
        return Err(Error::Precondition("dimension mismatch".into()));
    }
    let max_size = (dim + 1).min(vertices.len());
    let n = vertices.len();
    for size in 1..=max_size {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let subset: Vec<&Vec<Rat>> = idx.iter().map(|&i| &vertices[i]).collect();
            if let Some(lambda) = barycentric(p, &subset) {
                if lambda.iter().all(|l| l >= &rat_int(0)) {
                    return Ok(true);
                }
            }
            // next combination
            let mut pos = size;
            let mut advanced = false;
            while pos > 0 {
                pos -= 1;
                if idx[pos] + 1 <= n - (size - pos) {
                    idx[pos] += 1;
                    for j in pos + 1..size {
                        idx[j] = idx[j - 1] + 1;
                    }
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break;
            }
        }
    }
    Ok(false)
}

/// Solve `Σ λ_i v_i = p`, `Σ λ_i = 1` exactly; `None` when inconsistent.
pub fn barycentric(p: &[Rat], vertices: &[&Vec<Rat>]) -> Option<Vec<Rat>> {
    let dim = p.len();
    let cols = vertices.len();
    // rows: one per coordinate plus the normalization row
    let mut a: Matrix<Rat> = (0..dim)
        .map(|i| vertices.iter().map(|v| v[i].clone()).collect())
        .collect();
    a.push(vec![rat_int(1); cols]);
    let mut b: Vec<Rat> = p.to_vec();
    b.push(rat_int(1));
    crate::linalg::solve(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    fn v(xs: &[i64]) -> Vec<Rat> {
        xs.iter().map(|&x| rat_int(x)).collect()
    }

    #[test]
    fn rank_and_affine_examples() {
        assert_eq!(rank_exact(&vec![v(&[1, 0, 0]), v(&[0, 1, 0]), v(&[0, 0, 1])]), 3);
        assert_eq!(rank_exact(&vec![v(&[0, 0]), v(&[0, 0])]), 0);
        assert_eq!(rank_exact(&vec![v(&[1, 2]), v(&[2, 4]), v(&[3, 6])]), 1);

        assert!(affinely_independent(&[v(&[0, 0]), v(&[1, 0]), v(&[0, 1])]).unwrap());
        assert!(!affinely_independent(&[v(&[0, 0]), v(&[1, 0]), v(&[2, 0])]).unwrap());
        // 4 points in the plane are never affinely independent
        assert!(!affinely_independent(&[v(&[0, 0]), v(&[1, 0]), v(&[0, 1]), v(&[1, 1])])
            .unwrap());
    }

    #[test]
    fn linear_extension_basics() {
        // full-rank sample from nothing
        let (sampled, cert) = sample_linear_extension(&[], 4, 4, 7).unwrap();
        assert_eq!(sampled.len(), 4);
        assert_eq!(cert.attempts, 1);
        cert.verify().unwrap();

        // s = 0 is trivial
        let given = vec![v(&[1, 0, 0])];
        let (sampled, cert) = sample_linear_extension(&given, 0, 3, 7).unwrap();
        assert!(sampled.is_empty());
        cert.verify().unwrap();

        // reproducibility from the seed
        let (s1, _) = sample_linear_extension(&given, 2, 3, 99).unwrap();
        let (s2, _) = sample_linear_extension(&given, 2, 3, 99).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn affine_extension_edge_case() {
        // r = 0, s = m + 1: m + 1 affinely independent points in R^m
        for m in 1..=4usize {
            let (sampled, cert) = sample_affine_extension(&[], m + 1, m, 13).unwrap();
            assert_eq!(sampled.len(), m + 1);
            assert!(affinely_independent(&sampled).unwrap());
            cert.verify().unwrap();
        }
        // single extra point over a single given point
        let (_, cert) = sample_affine_extension(&[v(&[0, 0])], 1, 2, 3).unwrap();
        cert.verify().unwrap();
    }

    #[test]
    fn rank_two_extension_basics() {
        // V empty, m=2, r=1: vectors (x1,x2),(x2,x3)
        let cert = rank_two_extension_check(&[], 1, 2, 21).unwrap();
        cert.verify().unwrap();

        // dim(V) = m − 2 forces total rank m; maximal overlap r = m − 1
        let given = vec![v(&[1, 0, 0, 0]), v(&[0, 1, 0, 0])];
        let cert = rank_two_extension_check(&given, 3, 4, 22).unwrap();
        cert.verify().unwrap();
    }

    #[test]
    fn certificate_tamper_detected() {
        let (_, mut cert) = sample_linear_extension(&[], 2, 3, 5).unwrap();
        cert.verify().unwrap();
        cert.sampled[0][0] = cert.sampled[0][1].clone();
        // either the rank drops or the stored check no longer reproduces
        assert!(cert.verify().is_err() || rank(&cert.sampled) == 2);
        cert.checks[0].expected = 99;
        assert!(cert.verify().is_err());
    }

    #[test]
    fn layout_validation() {
        let good = SymbolLayout::all_distinct(2);
        good.validate().unwrap();
        // symbol twice in a row is invalid
        let mut bad = good.clone();
        bad.entries[0][1] = bad.entries[0][0];
        assert!(bad.validate().is_err());
    }

    #[test]
    fn paired_symbol_base_case() {
        // k = 1: [a, b] with a ≠ b
        let layout = SymbolLayout { k: 1, entries: vec![vec![0, 1]] };
        let cert = paired_symbol_matrix_check(&layout, 11).unwrap();
        cert.verify().unwrap();
        assert!(!layout_det_identically_zero(&layout).unwrap());
        // degenerate layout a = a would repeat within a row
        let bad = SymbolLayout { k: 1, entries: vec![vec![0, 0]] };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn paired_symbol_k2() {
        // all symbols distinct
        let layout = SymbolLayout::all_distinct(2);
        paired_symbol_matrix_check(&layout, 17).unwrap().verify().unwrap();
        assert!(!layout_det_identically_zero(&layout).unwrap());

        // one repeated symbol off-row/off-column
        let mut entries = SymbolLayout::all_distinct(2).entries;
        entries[1][1] = entries[0][0];
        let layout = SymbolLayout { k: 2, entries };
        layout.validate().unwrap();
        paired_symbol_matrix_check(&layout, 18).unwrap().verify().unwrap();
        assert!(!layout_det_identically_zero(&layout).unwrap());
    }

    #[test]
    fn translation_family_nonempty_and_valid() {
        for k in 1..=3usize {
            let fam = SymbolLayout::translation_family(k);
            assert!(!fam.is_empty());
            for l in &fam {
                l.validate().unwrap();
            }
        }
        assert!(SymbolLayout::translation_family(3).len() >= 10);
    }

    #[test]
    fn brute_verify_small() {
        let r1 = brute_verify(1).unwrap();
        assert!(r1.all_nonzero && r1.abstract_exhaustive);
        let r2 = brute_verify(2).unwrap();
        assert!(r2.all_nonzero && r2.abstract_exhaustive);
        assert!(r2.layouts_checked >= 11_000); // all partial matchings of 3×4 cells
    }

    #[test]
    fn periodicity_subspace_examples() {
        let sub = PeriodicitySubspace::new(1, 1, 1).unwrap();
        assert!(sub.contains(&[rat(3, 10), rat(3, 10)]).unwrap());
        assert!(!sub.contains(&[rat(3, 10), rat(2, 5)]).unwrap());
        assert_eq!(sub.distance(&[rat(3, 10), rat(2, 5)]).unwrap(), rat(1, 10));

        let sub = PeriodicitySubspace::new(2, 2, 1).unwrap();
        assert!(sub.contains(&v(&[5, 7, 5, 7])).unwrap());
        assert!(!sub.contains(&v(&[5, 7, 5, 8])).unwrap());

        // basis has rank n·d
        for (n, s, d) in [(1usize, 1usize, 1usize), (2, 2, 1), (3, 4, 2), (2, 3, 2)] {
            let sub = PeriodicitySubspace::new(n, s, d).unwrap();
            let b = sub.basis();
            assert_eq!(b.len(), n * d);
            assert_eq!(rank(&b), n * d);
            for vb in &b {
                assert!(sub.contains(vb).unwrap());
            }
        }
    }

    #[test]
    fn convex_hull_helper() {
        let verts = vec![v(&[0, 0]), v(&[1, 0]), v(&[0, 1])];
        assert!(in_convex_hull(&[rat(1, 4), rat(1, 4)], &verts).unwrap());
        assert!(in_convex_hull(&[rat_int(1), rat_int(0)], &verts).unwrap());
        assert!(!in_convex_hull(&[rat_int(1), rat_int(1)], &verts).unwrap());
        assert!(!in_convex_hull(&[rat(-1, 10), rat(1, 10)], &verts).unwrap());
    }

    #[test]
    fn failure_rate_small_sample() {
        // over 100 seeded trials per sampler, no first-attempt failures
        let mut failures = 0usize;
        for seed in 0..100u64 {
            let (_, c1) = sample_linear_extension(&[], 3, 3, seed).unwrap();
            let (_, c2) = sample_affine_extension(&[], 4, 3, seed).unwrap();
            let c3 = rank_two_extension_check(&[], 2, 4, seed).unwrap();
            failures += (c1.attempts > 1) as usize
                + (c2.attempts > 1) as usize
                + (c3.attempts > 1) as usize;
        }
        assert_eq!(failures, 0);
    }
}
