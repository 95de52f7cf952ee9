//! The free group F_k with its word metric.
//!
//! Letters are packed codes: generator `i` is `2i`, its inverse `2i + 1`, so
//! inversion is `code ^ 1`. Words serialize over `a, A, b, B, ...` with
//! uppercase standing for the inverse letter.
//!
//! The Cayley graph is the (2k)-regular tree, so the metric is 0-hyperbolic:
//! Gromov products are common-prefix lengths and the shadow grid step is 1,
//! which makes the annuli of the grid exact spheres.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rank and derived constants of F_k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupParams {
    k: usize,
}

impl GroupParams {
    pub fn new(k: usize) -> Result<Self> {
        if !(2..=13).contains(&k) {
            return Err(Error::Input(format!("rank k must be in 2..=13, got {k}")));
        }
        Ok(Self { k })
    }

    /// F_2, the group all acceptance runs use.
    pub fn f2() -> Self {
        Self { k: 2 }
    }

    pub fn rank(&self) -> usize {
        self.k
    }

    /// Number of letters, 2k.
    pub fn alphabet(&self) -> usize {
        2 * self.k
    }

    /// Branching q = 2k - 1 of the tree.
    pub fn q(&self) -> usize {
        2 * self.k - 1
    }

    pub fn qf(&self) -> f64 {
        self.q() as f64
    }

    /// Critical exponent log(2k - 1), in nats.
    pub fn delta(&self) -> f64 {
        self.qf().ln()
    }

    /// Shadow grid step. On a tree the grid annuli are exact spheres.
    pub fn shadow_step(&self) -> f64 {
        1.0
    }

    /// |C_m| as an exact integer. Saturates instead of wrapping past u128.
    pub fn sphere_size(&self, m: usize) -> u128 {
        if m == 0 {
            return 1;
        }
        let q = self.q() as u128;
        let mut n = self.alphabet() as u128;
        for _ in 1..m {
            n = n.saturating_mul(q);
        }
        n
    }

    pub fn ball_size(&self, r: usize) -> u128 {
        (0..=r).fold(0u128, |acc, m| acc.saturating_add(self.sphere_size(m)))
    }

    /// log |C_m|, usable far beyond the range of exact counts.
    pub fn log_sphere_size(&self, m: usize) -> f64 {
        if m == 0 {
            0.0
        } else {
            (self.alphabet() as f64).ln() + (m - 1) as f64 * self.delta()
        }
    }

    pub fn sphere_size_f64(&self, m: usize) -> f64 {
        if m == 0 {
            1.0
        } else {
            self.alphabet() as f64 * self.qf().powi((m - 1) as i32)
        }
    }

    pub fn ball_size_f64(&self, r: usize) -> f64 {
        (0..=r).map(|m| self.sphere_size_f64(m)).sum()
    }

    pub fn letter_char(&self, code: u8) -> char {
        let base = b'a' + code / 2;
        if code % 2 == 0 {
            base as char
        } else {
            base.to_ascii_uppercase() as char
        }
    }

    pub fn letter_code(&self, ch: char) -> Result<u8> {
        if !ch.is_ascii_alphabetic() {
            return Err(Error::Input(format!("unknown letter symbol {ch:?}")));
        }
        let lower = ch.to_ascii_lowercase() as u8;
        let gen = lower - b'a';
        if gen as usize >= self.k {
            return Err(Error::Input(format!(
                "letter {ch:?} outside the alphabet of F_{}",
                self.k
            )));
        }
        Ok(2 * gen + u8::from(ch.is_ascii_uppercase()))
    }

    /// Parse a word string and freely reduce it.
    pub fn parse(&self, s: &str) -> Result<Word> {
        let s = s.trim();
        if s.is_empty() || s == "e" {
            return Ok(Word::identity());
        }
        let codes = s
            .chars()
            .map(|c| self.letter_code(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Word::reduce(&codes))
    }

    pub fn format(&self, w: &Word) -> String {
        if w.is_identity() {
            return "e".to_string();
        }
        w.letters().iter().map(|&c| self.letter_char(c)).collect()
    }

    /// The generator `a_i` as a word.
    pub fn generator(&self, i: usize) -> Word {
        debug_assert!(i < self.k);
        Word(vec![(2 * i) as u8])
    }

    /// Position of a reduced word of length m in the sphere enumeration order.
    pub fn sphere_rank(&self, w: &Word) -> usize {
        let q = self.q();
        let mut rank = 0usize;
        let mut prev: Option<u8> = None;
        for &c in w.letters() {
            let digit = match prev {
                None => c as usize,
                Some(p) => {
                    let forbidden = p ^ 1;
                    if c < forbidden {
                        c as usize
                    } else {
                        c as usize - 1
                    }
                }
            };
            rank = if prev.is_none() { digit } else { rank * q + digit };
            prev = Some(c);
        }
        rank
    }

    /// Inverse of [`GroupParams::sphere_rank`].
    pub fn sphere_unrank(&self, m: usize, mut rank: usize) -> Word {
        if m == 0 {
            return Word::identity();
        }
        let q = self.q();
        let mut digits = vec![0usize; m];
        for i in (1..m).rev() {
            digits[i] = rank % q;
            rank /= q;
        }
        digits[0] = rank;
        let mut letters = Vec::with_capacity(m);
        for (i, &d) in digits.iter().enumerate() {
            let c = if i == 0 {
                d as u8
            } else {
                let forbidden = letters[i - 1] ^ 1u8;
                if (d as u8) < forbidden {
                    d as u8
                } else {
                    d as u8 + 1
                }
            };
            letters.push(c);
        }
        Word(letters)
    }
}

/// Explicit resource limits. Exceeding one is a typed error, never a silent
/// truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResourceCaps {
    pub max_sphere_words: u128,
    pub max_support: usize,
    pub max_dense_dim: usize,
}

impl Default for ResourceCaps {
    fn default() -> Self {
        Self {
            max_sphere_words: 20_000_000,
            max_support: 2_000_000,
            max_dense_dim: 2_500,
        }
    }
}

/// A reduced word: the group element and the unit of the metric.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    /// Free reduction of a raw code sequence.
    pub fn reduce(codes: &[u8]) -> Self {
        let mut out: Vec<u8> = Vec::with_capacity(codes.len());
        for &c in codes {
            if out.last() == Some(&(c ^ 1)) {
                out.pop();
            } else {
                out.push(c);
            }
        }
        Word(out)
    }

    /// Wrap codes already known to be reduced.
    pub fn from_reduced(codes: Vec<u8>) -> Self {
        debug_assert!(codes.windows(2).all(|p| p[0] != p[1] ^ 1));
        Word(codes)
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|p| p[0] != p[1] ^ 1)
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|c| c ^ 1).collect())
    }

    /// Group product `self * other`.
    pub fn mul(&self, other: &Word) -> Word {
        let cancel = self
            .0
            .iter()
            .rev()
            .zip(other.0.iter())
            .take_while(|(a, b)| **a == **b ^ 1)
            .count();
        let mut out = Vec::with_capacity(self.len() + other.len() - 2 * cancel);
        out.extend_from_slice(&self.0[..self.len() - cancel]);
        out.extend_from_slice(&other.0[cancel..]);
        Word(out)
    }

    /// Length of the product without building it.
    pub fn mul_len(&self, other: &Word) -> usize {
        let cancel = self
            .0
            .iter()
            .rev()
            .zip(other.0.iter())
            .take_while(|(a, b)| **a == **b ^ 1)
            .count();
        self.len() + other.len() - 2 * cancel
    }

    pub fn common_prefix_len(&self, other: &Word) -> usize {
        self.0
            .iter()
            .zip(other.0.iter())
            .take_while(|(a, b)| a == b)
            .count()
    }

    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.len())].to_vec())
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn last(&self) -> Option<u8> {
        self.0.last().copied()
    }

    /// Append a letter, which must not cancel.
    pub fn extended(&self, code: u8) -> Word {
        debug_assert!(self.last() != Some(code ^ 1));
        let mut v = self.0.clone();
        v.push(code);
        Word(v)
    }

    pub fn pow(&self, n: i64) -> Word {
        let base = if n >= 0 { self.clone() } else { self.inverse() };
        let mut acc = Word::identity();
        for _ in 0..n.unsigned_abs() {
            acc = acc.mul(&base);
        }
        acc
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        for &c in &self.0 {
            let base = b'a' + c / 2;
            let ch = if c % 2 == 0 {
                base as char
            } else {
                base.to_ascii_uppercase() as char
            };
            write!(f, "{ch}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Word metric d(x, y) = |x^{-1} y|.
pub fn distance(x: &Word, y: &Word) -> usize {
    x.inverse().mul_len(y)
}

/// Gromov product (x, y)_e. On the tree this is the common-prefix length.
pub fn gromov_product(x: &Word, y: &Word) -> usize {
    x.common_prefix_len(y)
}

/// Lazy enumeration of a sphere C_m by an odometer over the allowed letters.
pub struct SphereIter {
    alphabet: u8,
    letters: Vec<u8>,
    done: bool,
}

impl SphereIter {
    fn new(params: &GroupParams, m: usize) -> Self {
        let alphabet = params.alphabet() as u8;
        let mut letters = Vec::with_capacity(m);
        for i in 0..m {
            letters.push(Self::first_allowed(i, &letters, 0, alphabet).unwrap_or(0));
        }
        Self {
            alphabet,
            letters,
            done: false,
        }
    }

    fn first_allowed(pos: usize, letters: &[u8], from: u8, alphabet: u8) -> Option<u8> {
        (from..alphabet).find(|&c| pos == 0 || c != letters[pos - 1] ^ 1)
    }

    fn advance(&mut self) {
        let m = self.letters.len();
        for i in (0..m).rev() {
            let cur = self.letters[i];
            if let Some(c) = Self::first_allowed(i, &self.letters, cur + 1, self.alphabet) {
                self.letters[i] = c;
                for j in i + 1..m {
                    self.letters[j] =
                        Self::first_allowed(j, &self.letters, 0, self.alphabet).unwrap_or(0);
                }
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for SphereIter {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.done {
            return None;
        }
        let w = Word(self.letters.clone());
        if self.letters.is_empty() {
            self.done = true;
        } else {
            self.advance();
        }
        Some(w)
    }
}

/// All reduced words of length m, each once, in rank order.
pub fn enumerate_sphere(params: &GroupParams, m: usize, caps: &ResourceCaps) -> Result<SphereIter> {
    let needed = params.sphere_size(m);
    if needed > caps.max_sphere_words {
        return Err(Error::ResourceCap {
            what: "sphere enumeration",
            needed,
            cap: caps.max_sphere_words,
        });
    }
    Ok(SphereIter::new(params, m))
}

/// All reduced words of length ≤ r, by increasing length.
pub fn enumerate_ball(params: &GroupParams, r: usize, caps: &ResourceCaps) -> Result<Vec<Word>> {
    let needed = params.ball_size(r);
    if needed > caps.max_sphere_words {
        return Err(Error::ResourceCap {
            what: "ball enumeration",
            needed,
            cap: caps.max_sphere_words,
        });
    }
    let mut out = Vec::with_capacity(needed as usize);
    for m in 0..=r {
        out.extend(SphereIter::new(params, m));
    }
    Ok(out)
}

/// A finitely supported real function on the group.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseGroupFunction {
    entries: BTreeMap<Word, f64>,
}

impl SparseGroupFunction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dirac(w: Word) -> Self {
        let mut f = Self::new();
        f.set(w, 1.0);
        f
    }

    pub fn from_entries<I: IntoIterator<Item = (Word, f64)>>(entries: I) -> Self {
        let mut f = Self::new();
        for (w, v) in entries {
            f.add_at(w, v);
        }
        f
    }

    pub fn indicator_sphere(params: &GroupParams, m: usize, caps: &ResourceCaps) -> Result<Self> {
        Ok(Self::from_entries(
            enumerate_sphere(params, m, caps)?.map(|w| (w, 1.0)),
        ))
    }

    pub fn indicator_ball(params: &GroupParams, r: usize, caps: &ResourceCaps) -> Result<Self> {
        Ok(Self::from_entries(
            enumerate_ball(params, r, caps)?.into_iter().map(|w| (w, 1.0)),
        ))
    }

    /// Set a value; zero removes the key.
    pub fn set(&mut self, w: Word, v: f64) {
        debug_assert!(w.is_reduced());
        if v == 0.0 {
            self.entries.remove(&w);
        } else {
            self.entries.insert(w, v);
        }
    }

    pub fn add_at(&mut self, w: Word, v: f64) {
        let cur = self.get(&w);
        self.set(w, cur + v);
    }

    pub fn get(&self, w: &Word) -> f64 {
        self.entries.get(w).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Word, f64)> {
        self.entries.iter().map(|(w, v)| (w, *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Smallest r with support inside B_r (0 for the zero function).
    pub fn support_radius(&self) -> usize {
        self.entries.keys().map(Word::len).max().unwrap_or(0)
    }

    pub fn l1_norm(&self) -> f64 {
        self.entries.values().map(|v| v.abs()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.entries.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn sum(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.entries.values().all(|&v| v >= 0.0)
    }

    /// f*(g) = f(g^{-1}) for real f.
    pub fn adjoint(&self) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|(w, v)| (w.inverse(), *v))
                .collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_entries(self.entries.iter().map(|(w, v)| (w.clone(), c * v)))
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, v) in other.iter() {
            out.add_at(w.clone(), v);
        }
        out
    }

    /// (f * g)(z) = Σ_x f(x) g(x^{-1} z).
    pub fn convolve(&self, other: &Self, max_support: usize) -> Result<Self> {
        let mut acc: BTreeMap<Word, f64> = BTreeMap::new();
        for (x, fx) in &self.entries {
            for (y, gy) in &other.entries {
                *acc.entry(x.mul(y)).or_insert(0.0) += fx * gy;
            }
            if acc.len() > max_support {
                return Err(Error::ResourceCap {
                    what: "convolution support",
                    needed: acc.len() as u128,
                    cap: max_support as u128,
                });
            }
        }
        acc.retain(|_, v| *v != 0.0);
        Ok(Self { entries: acc })
    }

    /// Average over spheres: the radial projection.
    pub fn radialize(&self, params: &GroupParams) -> RadialFunction {
        let r = self.support_radius();
        let mut coeffs = vec![0.0; r + 1];
        for (w, v) in &self.entries {
            coeffs[w.len()] += v;
        }
        for (m, c) in coeffs.iter_mut().enumerate() {
            *c /= params.sphere_size_f64(m);
        }
        RadialFunction::new(coeffs)
    }
}

/// Σ_m c_m 1_{C_m}: a radial function given by its sphere coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialFunction {
    coeffs: Vec<f64>,
}

impl RadialFunction {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    /// A_m = 1_{C_m}.
    pub fn sphere(m: usize) -> Self {
        let mut c = vec![0.0; m + 1];
        c[m] = 1.0;
        Self::new(c)
    }

    pub fn dirac_e() -> Self {
        Self::sphere(0)
    }

    pub fn ball(r: usize) -> Self {
        Self::new(vec![1.0; r + 1])
    }

    /// Avr_r = 1_{B_r} / |B_r|, with the exact integer ball size.
    pub fn ball_average(params: &GroupParams, r: usize) -> Self {
        let size = params.ball_size(r) as f64;
        Self::new(vec![1.0 / size; r + 1])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn radius(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn l2_norm_sq(&self, params: &GroupParams) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| c * c * params.sphere_size_f64(m))
            .sum()
    }

    pub fn l2_norm(&self, params: &GroupParams) -> f64 {
        self.l2_norm_sq(params).sqrt()
    }

    pub fn l1_norm(&self, params: &GroupParams) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| c.abs() * params.sphere_size_f64(m))
            .sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.coeffs.iter().all(|&c| c >= 0.0)
    }

    pub fn embed(&self, params: &GroupParams, caps: &ResourceCaps) -> Result<SparseGroupFunction> {
        let mut f = SparseGroupFunction::new();
        for (m, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for w in enumerate_sphere(params, m, caps)? {
                f.set(w, c);
            }
        }
        Ok(f)
    }

    /// Product in the radial algebra, built from the tree recurrence
    /// A_1 A_1 = A_2 + (q+1) A_0 and A_1 A_m = A_{m+1} + q A_{m-1} (m ≥ 2).
    pub fn radial_convolve(&self, other: &Self, params: &GroupParams) -> Self {
        let q = params.qf();
        let n = self.radius() + other.radius() + 1;
        let mut out = vec![0.0; n];
        // P_m = A_m * other, generated by the recurrence.
        let mut prev = pad(other.coeffs.clone(), n);
        accumulate(&mut out, &prev, self.coeffs[0]);
        if self.radius() >= 1 {
            let mut cur = apply_a1(&prev, q);
            accumulate(&mut out, &cur, self.coeffs[1]);
            for m in 1..self.radius() {
                let mut next = apply_a1(&cur, q);
                let back = if m == 1 { q + 1.0 } else { q };
                for (x, p) in next.iter_mut().zip(&prev) {
                    *x -= back * p;
                }
                accumulate(&mut out, &next, self.coeffs[m + 1]);
                prev = cur;
                cur = next;
            }
        }
        Self::new(out)
    }
}

fn pad(mut v: Vec<f64>, n: usize) -> Vec<f64> {
    v.resize(n, 0.0);
    v
}

fn accumulate(out: &mut [f64], v: &[f64], c: f64) {
    if c != 0.0 {
        for (o, x) in out.iter_mut().zip(v) {
            *o += c * x;
        }
    }
}

/// Multiplication by A_1 on sphere coefficients. The top coefficient must be
/// zero or the result is truncated; callers size buffers for the final radius.
fn apply_a1(v: &[f64], q: f64) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    for (m, &c) in v.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        if m + 1 < n {
            out[m + 1] += c;
        }
        match m {
            0 => {}
            1 => out[0] += (q + 1.0) * c,
            _ => out[m - 1] += q * c,
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2() -> GroupParams {
        GroupParams::f2()
    }

    #[test]
    fn reduce_examples() {
        let p = f2();
        assert!(p.parse("aA").unwrap().is_identity());
        assert_eq!(p.format(&p.parse("abBa").unwrap()), "aa");
        assert_eq!(p.format(&p.parse("a").unwrap()), "a");
        assert!(p.parse("ax").is_err());
        assert!(p.parse("a1").is_err());
    }

    #[test]
    fn reduce_is_idempotent() {
        let w = Word::reduce(&[0, 2, 3, 1, 0, 0]);
        assert_eq!(Word::reduce(w.letters()), w);
    }

    #[test]
    fn gromov_product_examples() {
        let p = f2();
        let x = p.parse("ab").unwrap();
        let y = p.parse("abA").unwrap();
        assert_eq!(gromov_product(&x, &y), 2);
        assert_eq!(gromov_product(&x, &Word::identity()), 0);
        assert_eq!(gromov_product(&y, &y), 3);
        // Tree identity against the metric definition.
        let twice = x.len() + y.len() - distance(&x, &y);
        assert_eq!(twice, 4);
    }

    #[test]
    fn sphere_enumeration_counts() {
        let p = f2();
        let caps = ResourceCaps::default();
        let s0: Vec<_> = enumerate_sphere(&p, 0, &caps).unwrap().collect();
        assert_eq!(s0, vec![Word::identity()]);
        let s1: Vec<_> = enumerate_sphere(&p, 1, &caps)
            .unwrap()
            .map(|w| p.format(&w))
            .collect();
        assert_eq!(s1, vec!["a", "A", "b", "B"]);
        assert_eq!(enumerate_sphere(&p, 3, &caps).unwrap().count(), 36);
        for m in 0..8 {
            assert_eq!(
                enumerate_sphere(&p, m, &caps).unwrap().count() as u128,
                p.sphere_size(m)
            );
        }
        let f3 = GroupParams::new(3).unwrap();
        assert_eq!(enumerate_sphere(&f3, 4, &caps).unwrap().count(), 6 * 125);
    }

    #[test]
    fn sphere_enumeration_cap_is_typed() {
        let caps = ResourceCaps {
            max_sphere_words: 100,
            ..ResourceCaps::default()
        };
        assert!(matches!(
            enumerate_sphere(&f2(), 5, &caps),
            Err(Error::ResourceCap { .. })
        ));
    }

    #[test]
    fn rank_round_trip() {
        let p = f2();
        let caps = ResourceCaps::default();
        for (i, w) in enumerate_sphere(&p, 5, &caps).unwrap().enumerate() {
            assert_eq!(p.sphere_rank(&w), i);
            assert_eq!(p.sphere_unrank(5, i), w);
        }
    }

    #[test]
    fn sphere_counts_are_exact_far_out() {
        let p = f2();
        assert_eq!(p.sphere_size(70), 4 * 3u128.pow(69));
        assert!((p.log_sphere_size(70) - (p.sphere_size(70) as f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn convolution_examples() {
        let p = f2();
        let caps = ResourceCaps::default();
        let a = p.parse("a").unwrap();
        let b = p.parse("b").unwrap();
        let f = SparseGroupFunction::from_entries([(a.clone(), 2.0), (p.parse("bA").unwrap(), -1.0)]);
        let e = SparseGroupFunction::dirac(Word::identity());
        assert_eq!(e.convolve(&f, 100).unwrap(), f);
        let ab = SparseGroupFunction::dirac(a.clone())
            .convolve(&SparseGroupFunction::dirac(b), 100)
            .unwrap();
        assert_eq!(ab, SparseGroupFunction::dirac(p.parse("ab").unwrap()));

        let c1 = SparseGroupFunction::indicator_sphere(&p, 1, &caps).unwrap();
        let sq = c1.convolve(&c1, 1000).unwrap();
        assert_eq!(sq.get(&Word::identity()), 4.0);
        assert_eq!(sq.len(), 13);
        for w in enumerate_sphere(&p, 2, &caps).unwrap() {
            assert_eq!(sq.get(&w), 1.0);
        }
        for w in enumerate_sphere(&p, 1, &caps).unwrap() {
            assert_eq!(sq.get(&w), 0.0);
        }
    }

    #[test]
    fn convolution_support_cap() {
        let p = f2();
        let caps = ResourceCaps::default();
        let b2 = SparseGroupFunction::indicator_ball(&p, 2, &caps).unwrap();
        assert!(matches!(b2.convolve(&b2, 10), Err(Error::ResourceCap { .. })));
    }

    #[test]
    fn radial_convolve_examples() {
        let p = f2();
        let a1 = RadialFunction::sphere(1);
        assert_eq!(
            a1.radial_convolve(&a1, &p).coeffs(),
            &[4.0, 0.0, 1.0]
        );
        assert_eq!(
            a1.radial_convolve(&RadialFunction::sphere(2), &p).coeffs(),
            &[0.0, 3.0, 0.0, 1.0]
        );
        let a3 = RadialFunction::sphere(3);
        assert_eq!(RadialFunction::dirac_e().radial_convolve(&a3, &p), a3);
    }

    #[test]
    fn radialize_inverts_embed() {
        let p = f2();
        let caps = ResourceCaps::default();
        let f = RadialFunction::new(vec![0.5, -1.0, 2.0, 0.25]);
        let back = f.embed(&p, &caps).unwrap().radialize(&p);
        for (x, y) in back.coeffs().iter().zip(f.coeffs()) {
            assert!((x - y).abs() < 1e-15);
        }
        let emb = f.embed(&p, &caps).unwrap();
        assert!((emb.l2_norm() - f.l2_norm(&p)).abs() < 1e-12);
    }

    #[test]
    fn ball_average_uses_exact_size() {
        let p = f2();
        let avr = RadialFunction::ball_average(&p, 3);
        assert_eq!(avr.coeffs()[0], 1.0 / 53.0);
    }
}
