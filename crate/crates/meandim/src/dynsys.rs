//! Desk-scale dynamical systems presented as language oracles.
//!
//! A system answers "which words of length ℓ are allowed?" for ℓ up to a
//! declared `max_window`, and refuses beyond it. The compact space behind the
//! oracle is only ever touched through bounded windows; every downstream
//! operation declares the window it needs.
//!
//! Supported presentations:
//! - full shifts,
//! - shifts of finite type (forbidden words; the language is computed on the
//!   trimmed de Bruijn graph so every reported word really occurs in a
//!   bi-infinite configuration),
//! - primitive substitution subshifts (aperiodic testbeds),
//! - a rotation surrogate: the coding of a circle rotation by a rational
//!   `p/q` whose denominator exceeds `max_window`, so no periodicity is
//!   visible inside any answered window.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rat::{parse_rat, pow2_neg, rat_to_string, wrap_unit, Rat};

/// How the subshift (or surrogate) is presented.
#[derive(Clone, Debug, PartialEq)]
pub enum SystemKind {
    FullShift,
    Sft { forbidden: Vec<Vec<u8>> },
    Substitution { rule: BTreeMap<u8, Vec<u8>> },
    /// Coding of the circle rotation by `angle = p/q` against the partition
    /// whose cells are `[cuts[i], cuts[i+1])` (last cell wraps to 1). The
    /// denominator `q` must exceed `max_window`.
    RotationSurrogate { angle: Rat, cuts: Vec<Rat> },
}

/// A shift system presented by a language oracle.
///
/// Immutable after construction; the internal language cache is behind a
/// mutex, so shared read-only use across threads is safe.
#[derive(Debug)]
pub struct SymbolicSystem {
    pub alphabet: Vec<u8>,
    pub kind: SystemKind,
    pub max_window: usize,
    cache: Mutex<HashMap<usize, Arc<Vec<Vec<u8>>>>>,
}

impl Clone for SymbolicSystem {
    fn clone(&self) -> Self {
        SymbolicSystem {
            alphabet: self.alphabet.clone(),
            kind: self.kind.clone(),
            max_window: self.max_window,
            cache: Mutex::new(HashMap::new()),
        }
    }
}

impl PartialEq for SymbolicSystem {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet
            && self.kind == other.kind
            && self.max_window == other.max_window
    }
}

/// A finite window of a configuration: symbols at coordinates
/// `left, left+1, …, left+len−1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub left: i64,
    pub symbols: Vec<u8>,
}

impl Window {
    pub fn new(left: i64, symbols: Vec<u8>) -> Self {
        Window { left, symbols }
    }

    pub fn right(&self) -> i64 {
        self.left + self.symbols.len() as i64
    }

    /// Symbol at absolute coordinate `i`, if inside the window.
    pub fn at(&self, i: i64) -> Option<u8> {
        if i < self.left || i >= self.right() {
            None
        } else {
            Some(self.symbols[(i - self.left) as usize])
        }
    }
}

/// Render a word with one character per symbol (`0–9`, then `a–z`).
pub fn word_to_string(w: &[u8]) -> String {
    w.iter()
        .map(|&s| char::from_digit(s as u32, 36).expect("symbol out of range for rendering"))
        .collect()
}

/// Inverse of [`word_to_string`].
pub fn parse_word(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .map(|c| {
            c.to_digit(36)
                .map(|d| d as u8)
                .ok_or_else(|| Error::Malformed(format!("bad symbol {c:?} in word {s:?}")))
        })
        .collect()
}

impl SymbolicSystem {
    pub fn full_shift(num_symbols: u8, max_window: usize) -> Result<Self> {
        if num_symbols == 0 || max_window == 0 {
            return Err(Error::Precondition("full_shift needs symbols and a window".into()));
        }
        Ok(SymbolicSystem {
            alphabet: (0..num_symbols).collect(),
            kind: SystemKind::FullShift,
            max_window,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn sft(num_symbols: u8, forbidden: Vec<Vec<u8>>, max_window: usize) -> Result<Self> {
        if num_symbols == 0 || max_window == 0 {
            return Err(Error::Precondition("sft needs symbols and a window".into()));
        }
        for w in &forbidden {
            if w.is_empty() {
                return Err(Error::Malformed("empty forbidden word".into()));
            }
            if w.iter().any(|&s| s >= num_symbols) {
                return Err(Error::Malformed(format!(
                    "forbidden word {} uses a symbol outside the alphabet",
                    word_to_string(w)
                )));
            }
        }
        Ok(SymbolicSystem {
            alphabet: (0..num_symbols).collect(),
            kind: SystemKind::Sft { forbidden },
            max_window,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Golden-mean shift: binary, `11` forbidden.
    pub fn golden_mean(max_window: usize) -> Result<Self> {
        Self::sft(2, vec![vec![1, 1]], max_window)
    }

    /// Substitution subshift. The rule must be defined on every symbol it
    /// emits and is assumed primitive (every symbol eventually reaches every
    /// other); the standard aperiodic desk testbed is `0→01, 1→0`.
    pub fn substitution(rule: BTreeMap<u8, Vec<u8>>, max_window: usize) -> Result<Self> {
        if rule.is_empty() || max_window == 0 {
            return Err(Error::Precondition("substitution needs a rule and a window".into()));
        }
        for (s, image) in &rule {
            if image.is_empty() {
                return Err(Error::Malformed(format!("empty image for symbol {s}")));
            }
            for t in image {
                if !rule.contains_key(t) {
                    return Err(Error::Malformed(format!(
                        "rule image uses symbol {t} with no rule of its own"
                    )));
                }
            }
        }
        let alphabet: Vec<u8> = rule.keys().copied().collect();
        Ok(SymbolicSystem {
            alphabet,
            kind: SystemKind::Substitution { rule },
            max_window,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Fibonacci substitution subshift (`0→01, 1→0`).
    pub fn fibonacci(max_window: usize) -> Result<Self> {
        let mut rule = BTreeMap::new();
        rule.insert(0u8, vec![0, 1]);
        rule.insert(1u8, vec![0]);
        Self::substitution(rule, max_window)
    }

    /// Rotation surrogate: rotation by `angle` (a reduced rational whose
    /// denominator exceeds `max_window`) coded against `cuts`, an increasing
    /// list of rationals in `[0,1)` starting at 0; cell `i` is
    /// `[cuts[i], cuts[i+1])`.
    pub fn rotation_surrogate(angle: Rat, cuts: Vec<Rat>, max_window: usize) -> Result<Self> {
        let angle = wrap_unit(&angle);
        let q = angle.denom().clone();
        if q <= num_bigint::BigInt::from(max_window) {
            return Err(Error::Precondition(format!(
                "rotation denominator {q} must exceed max_window {max_window}"
            )));
        }
        if cuts.is_empty() || !cuts[0].is_zero() {
            return Err(Error::Malformed("cuts must start at 0".into()));
        }
        for w in cuts.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Malformed("cuts must be strictly increasing".into()));
            }
        }
        if cuts.last().unwrap() >= &Rat::one() {
            return Err(Error::Malformed("cuts must lie in [0,1)".into()));
        }
        if cuts.len() > u8::MAX as usize {
            return Err(Error::Malformed("too many partition cells".into()));
        }
        Ok(SymbolicSystem {
            alphabet: (0..cuts.len() as u8).collect(),
            kind: SystemKind::RotationSurrogate { angle, cuts },
            max_window,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn check_window(&self, needed: usize) -> Result<()> {
        if needed > self.max_window {
            Err(Error::WindowExceeded { needed, max: self.max_window })
        } else {
            Ok(())
        }
    }

    /// All allowed words of length `len`, sorted. Every reported word occurs
    /// in a bi-infinite configuration.
    pub fn language(&self, len: usize) -> Result<Arc<Vec<Vec<u8>>>> {
        if len == 0 {
            return Err(Error::Precondition("language length must be positive".into()));
        }
        self.check_window(len)?;
        if let Some(hit) = self.cache.lock().unwrap().get(&len) {
            return Ok(hit.clone());
        }
        let words = match &self.kind {
            SystemKind::FullShift => full_words(&self.alphabet, len),
            SystemKind::Sft { forbidden } => sft_words(&self.alphabet, forbidden, len)?,
            SystemKind::Substitution { rule } => substitution_words(rule, len)?,
            SystemKind::RotationSurrogate { angle, cuts } => rotation_words(angle, cuts, len),
        };
        let arc = Arc::new(words);
        self.cache.lock().unwrap().insert(len, arc.clone());
        Ok(arc)
    }

    /// Membership test against the language oracle.
    pub fn is_allowed(&self, word: &[u8]) -> Result<bool> {
        let lang = self.language(word.len())?;
        Ok(lang.binary_search_by(|w| w.as_slice().cmp(word)).is_ok())
    }

    /// Would the bi-infinite repetition of `w` be admissible? (Exact for
    /// full shifts and SFTs; for substitutions checked at the full window,
    /// which is decisive for periods up to `max_window / 2`; the rotation
    /// surrogate shows no periodicity inside its windows.)
    pub fn periodic_admissible(&self, w: &[u8]) -> Result<bool> {
        if w.is_empty() {
            return Err(Error::Precondition("empty period word".into()));
        }
        match &self.kind {
            SystemKind::FullShift => Ok(w.iter().all(|s| self.alphabet.contains(s))),
            SystemKind::Sft { forbidden } => {
                let maxf = forbidden.iter().map(|f| f.len()).max().unwrap_or(1);
                let ext = repeat_to(w, w.len() + maxf);
                Ok(!forbidden.iter().any(|f| contains_word(&ext, f))
                    && w.iter().all(|s| self.alphabet.contains(s)))
            }
            SystemKind::Substitution { .. } => {
                let len = self.max_window;
                let ext = repeat_to(w, len + w.len() - 1);
                for start in 0..w.len() {
                    if !self.is_allowed(&ext[start..start + len])? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            SystemKind::RotationSurrogate { .. } => Ok(false),
        }
    }

    /// All periodic points of period ≤ `m`, stratified by exact period.
    pub fn enumerate_periodic_points(&self, m: usize) -> Result<PeriodicSet> {
        if m == 0 {
            return Err(Error::Precondition("period bound must be positive".into()));
        }
        self.check_window(m)?;
        let mut strata: BTreeMap<usize, Vec<Vec<u8>>> = BTreeMap::new();
        for n in 1..=m {
            let mut cycles: BTreeSet<Vec<u8>> = BTreeSet::new();
            for w in self.language(n)?.iter() {
                if exact_period(w) != n {
                    continue; // counted in an earlier stratum
                }
                if self.periodic_admissible(w)? {
                    cycles.insert(canonical_rotation(w));
                }
            }
            strata.insert(n, cycles.into_iter().collect());
        }
        let points = strata.values().flat_map(|v| v.iter().cloned()).collect();
        Ok(PeriodicSet { period_bound: m, points, strata })
    }

    pub fn descriptor(&self) -> SystemDescriptor {
        SystemDescriptor::from(self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.descriptor())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let d: SystemDescriptor = serde_json::from_str(s)?;
        d.build()
    }
}

/// All periodic points of period ≤ `period_bound`, as primitive cycles
/// (lexicographically least rotation of the period word). A cycle of length
/// `n` stands for its `n` distinct points.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicSet {
    pub period_bound: usize,
    pub points: Vec<Vec<u8>>,
    pub strata: BTreeMap<usize, Vec<Vec<u8>>>,
}

impl PeriodicSet {
    /// Number of periodic points (each length-`n` cycle contributes `n`).
    pub fn point_count(&self) -> usize {
        self.strata.iter().map(|(n, cs)| n * cs.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Distance `2^{−k}` where `k` is the least `|i|` at which the centered
/// windows disagree; `0` if they agree everywhere shown.
pub fn metric_distance(x: &Window, y: &Window) -> Result<Rat> {
    if x.symbols.len() != y.symbols.len() || x.left != y.left {
        return Err(Error::MismatchedWindows(format!(
            "windows [{}..{}) and [{}..{}) are not aligned",
            x.left,
            x.right(),
            y.left,
            y.right()
        )));
    }
    if !(x.left <= 0 && x.right() > 0) {
        return Err(Error::MismatchedWindows("windows must contain coordinate 0".into()));
    }
    let mut best: Option<u64> = None;
    for i in x.left..x.right() {
        if x.at(i) != y.at(i) {
            let k = i.unsigned_abs();
            best = Some(best.map_or(k, |b| b.min(k)));
        }
    }
    Ok(match best {
        None => Rat::zero(),
        Some(k) => pow2_neg(k as u32),
    })
}

fn repeat_to(w: &[u8], len: usize) -> Vec<u8> {
    (0..len).map(|i| w[i % w.len()]).collect()
}

fn contains_word(haystack: &[u8], needle: &[u8]) -> bool {
    haystack.windows(needle.len()).any(|w| w == needle)
}

fn exact_period(w: &[u8]) -> usize {
    let n = w.len();
    (1..=n)
        .find(|&p| n % p == 0 && w.iter().enumerate().all(|(i, &s)| s == w[i % p]))
        .unwrap()
}

fn canonical_rotation(w: &[u8]) -> Vec<u8> {
    let n = w.len();
    (0..n)
        .map(|r| {
            let mut v = Vec::with_capacity(n);
            v.extend_from_slice(&w[r..]);
            v.extend_from_slice(&w[..r]);
            v
        })
        .min()
        .unwrap()
}

fn full_words(alphabet: &[u8], len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                alphabet.iter().map(move |&s| {
                    let mut v = w.clone();
                    v.push(s);
                    v
                })
            })
            .collect();
    }
    out
}

/// SFT language via the trimmed de Bruijn graph: vertices are locally
/// admissible words of length `k−1` (`k` = longest forbidden word), edges are
/// symbol extensions, and vertices without both an in-edge and an out-edge
/// are removed until stable. Paths in the trimmed graph are exactly the words
/// occurring in bi-infinite admissible configurations.
fn sft_words(alphabet: &[u8], forbidden: &[Vec<u8>], len: usize) -> Result<Vec<Vec<u8>>> {
    // Symbols killed by length-1 forbidden words just shrink the alphabet.
    let live: Vec<u8> = alphabet
        .iter()
        .copied()
        .filter(|s| !forbidden.iter().any(|f| f.len() == 1 && f[0] == *s))
        .collect();
    let long: Vec<&Vec<u8>> = forbidden.iter().filter(|f| f.len() >= 2).collect();
    if live.is_empty() {
        return Err(Error::Malformed("every symbol is forbidden".into()));
    }
    if long.is_empty() {
        return Ok(full_words(&live, len));
    }
    let k = long.iter().map(|f| f.len()).max().unwrap();
    let m = k - 1;
    let locally_ok = |w: &[u8]| !long.iter().any(|f| contains_word(w, f));
    // vertices: locally admissible words of length m
    let mut vertices: BTreeSet<Vec<u8>> =
        full_words(&live, m).into_iter().filter(|w| locally_ok(w)).collect();
    // trim until every vertex has an in-edge and an out-edge
    loop {
        let has_out = |u: &Vec<u8>| {
            live.iter().any(|&s| {
                let mut v = u[1..].to_vec();
                v.push(s);
                let mut edge = u.clone();
                edge.push(s);
                vertices.contains(&v) && locally_ok(&edge)
            })
        };
        let has_in = |u: &Vec<u8>| {
            live.iter().any(|&s| {
                let mut v = vec![s];
                v.extend_from_slice(&u[..m - 1]);
                let mut edge = vec![s];
                edge.extend_from_slice(u);
                vertices.contains(&v) && locally_ok(&edge)
            })
        };
        let keep: BTreeSet<Vec<u8>> =
            vertices.iter().filter(|u| has_out(u) && has_in(u)).cloned().collect();
        if keep.len() == vertices.len() {
            break;
        }
        vertices = keep;
    }
    if vertices.is_empty() {
        return Err(Error::Malformed("the forbidden words leave an empty subshift".into()));
    }
    if len < m {
        // factors of surviving vertices: every vertex lies on a bi-infinite
        // path, so each of its factors occurs
        let set: BTreeSet<Vec<u8>> =
            vertices.iter().flat_map(|v| v.windows(len).map(|w| w.to_vec())).collect();
        return Ok(set.into_iter().collect());
    }
    // extend each vertex along edges to length `len`
    let mut words: Vec<Vec<u8>> = vertices.iter().cloned().collect();
    while words[0].len() < len {
        words = words
            .into_iter()
            .flat_map(|w| {
                live.iter()
                    .filter_map(|&s| {
                        let mut v = w[w.len() - m + 1..].to_vec();
                        v.push(s);
                        let tail_ok = vertices.contains(&v)
                            && locally_ok(&w[w.len().saturating_sub(k - 1)..]
                                .iter()
                                .copied()
                                .chain(std::iter::once(s))
                                .collect::<Vec<_>>());
                        tail_ok.then(|| {
                            let mut x = w.clone();
                            x.push(s);
                            x
                        })
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        if words.is_empty() {
            return Err(Error::Malformed("the forbidden words leave an empty subshift".into()));
        }
    }
    words.sort();
    Ok(words)
}

/// Language of a primitive substitution: iterate the rule from the first
/// symbol until the factor set of the requested length is stable across an
/// iteration (with a generous length cushion).
fn substitution_words(rule: &BTreeMap<u8, Vec<u8>>, len: usize) -> Result<Vec<Vec<u8>>> {
    let apply = |w: &[u8]| -> Vec<u8> { w.iter().flat_map(|s| rule[s].iter().copied()).collect() };
    let factors = |w: &[u8]| -> BTreeSet<Vec<u8>> {
        w.windows(len).map(|f| f.to_vec()).collect()
    };
    let mut w = vec![*rule.keys().next().unwrap()];
    let mut prev: Option<BTreeSet<Vec<u8>>> = None;
    for _ in 0..64 {
        w = apply(&w);
        if w.len() >= 4 * len {
            let f = factors(&w);
            if prev.as_ref() == Some(&f) {
                return Ok(f.into_iter().collect());
            }
            prev = Some(f);
        }
        if w.len() > 8_000_000 {
            break;
        }
    }
    Err(Error::Infeasible("substitution language did not stabilize".into()))
}

/// Language of the rotation coding: the itinerary word of `x` is constant on
/// the arcs cut by `{c − i·angle : c a cut, 0 ≤ i < len}`, so one sample per
/// arc enumerates the language exactly.
fn rotation_words(angle: &Rat, cuts: &[Rat], len: usize) -> Vec<Vec<u8>> {
    let symbol_at = |u: &Rat| -> u8 {
        let u = wrap_unit(u);
        let mut sym = 0u8;
        for (i, c) in cuts.iter().enumerate() {
            if *c <= u {
                sym = i as u8;
            }
        }
        sym
    };
    let mut boundaries: BTreeSet<Rat> = BTreeSet::new();
    for c in cuts {
        for i in 0..len {
            boundaries.insert(wrap_unit(&(c - angle * Rat::from_integer(i.into()))));
        }
    }
    let pts: Vec<Rat> = boundaries.into_iter().collect();
    let mut words: BTreeSet<Vec<u8>> = BTreeSet::new();
    for (j, a) in pts.iter().enumerate() {
        let b = if j + 1 < pts.len() { pts[j + 1].clone() } else { &pts[0] + Rat::one() };
        let mid = (a + &b) / Rat::from_integer(2.into());
        let word: Vec<u8> = (0..len)
            .map(|i| symbol_at(&(&mid + angle * Rat::from_integer(i.into()))))
            .collect();
        words.insert(word);
    }
    words.into_iter().collect()
}

/// JSON descriptor for a system. Words are strings with one character per
/// symbol; rationals are `"p/q"` strings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemDescriptor {
    pub kind: String,
    pub alphabet: Vec<u8>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub forbidden: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub rule: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cuts: Vec<String>,
    pub max_window: usize,
}

impl From<&SymbolicSystem> for SystemDescriptor {
    fn from(s: &SymbolicSystem) -> Self {
        let mut d = SystemDescriptor {
            kind: String::new(),
            alphabet: s.alphabet.clone(),
            forbidden: Vec::new(),
            rule: BTreeMap::new(),
            angle: None,
            cuts: Vec::new(),
            max_window: s.max_window,
        };
        match &s.kind {
            SystemKind::FullShift => d.kind = "full_shift".into(),
            SystemKind::Sft { forbidden } => {
                d.kind = "sft".into();
                d.forbidden = forbidden.iter().map(|w| word_to_string(w)).collect();
            }
            SystemKind::Substitution { rule } => {
                d.kind = "substitution".into();
                d.rule = rule
                    .iter()
                    .map(|(k, v)| (word_to_string(&[*k]), word_to_string(v)))
                    .collect();
            }
            SystemKind::RotationSurrogate { angle, cuts } => {
                d.kind = "rotation_surrogate".into();
                d.angle = Some(rat_to_string(angle));
                d.cuts = cuts.iter().map(rat_to_string).collect();
            }
        }
        d
    }
}

impl SystemDescriptor {
    pub fn build(&self) -> Result<SymbolicSystem> {
        match self.kind.as_str() {
            "full_shift" => SymbolicSystem::full_shift(self.alphabet.len() as u8, self.max_window),
            "sft" => {
                let forbidden =
                    self.forbidden.iter().map(|w| parse_word(w)).collect::<Result<Vec<_>>>()?;
                SymbolicSystem::sft(self.alphabet.len() as u8, forbidden, self.max_window)
            }
            "substitution" => {
                let mut rule = BTreeMap::new();
                for (k, v) in &self.rule {
                    let kw = parse_word(k)?;
                    if kw.len() != 1 {
                        return Err(Error::Malformed(format!("rule key {k:?} is not a symbol")));
                    }
                    rule.insert(kw[0], parse_word(v)?);
                }
                SymbolicSystem::substitution(rule, self.max_window)
            }
            "rotation_surrogate" => {
                let angle = parse_rat(
                    self.angle.as_deref().ok_or_else(|| Error::Malformed("missing angle".into()))?,
                )?;
                let cuts = self.cuts.iter().map(|c| parse_rat(c)).collect::<Result<Vec<_>>>()?;
                SymbolicSystem::rotation_surrogate(angle, cuts, self.max_window)
            }
            other => Err(Error::Malformed(format!("unknown system kind {other:?}"))),
        }
    }
}
