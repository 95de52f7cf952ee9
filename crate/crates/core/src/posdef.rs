//! Positive definite functions on F_k with pointwise φ ≥ 0, and Gram-matrix
//! certification of positive definiteness.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{enumerate_ball, GroupParams, RadialFunction, ResourceCaps, SparseGroupFunction, Word};
use crate::numeric::{log_sum_exp, symmetric_eigenvalues};

/// Membership predicates for the shipped subgroups.
#[derive(Debug, Clone, PartialEq)]
pub enum SubgroupSpec {
    /// ⟨w⟩, stored as w = u c u⁻¹ with c cyclically reduced.
    Cyclic { conj: Word, core: Word },
    /// Kernel of g ↦ (exponent sum of generator `letter`) mod `modulus`.
    ExponentSum { letter: usize, modulus: u32 },
}

impl SubgroupSpec {
    pub fn cyclic(w: &Word) -> Result<Self> {
        if w.is_identity() {
            return Err(Error::Input("cyclic subgroup needs a nontrivial generator".into()));
        }
        let l = w.letters();
        let mut u = 0;
        while l[u] == l[l.len() - 1 - u] ^ 1 {
            u += 1;
        }
        Ok(SubgroupSpec::Cyclic {
            conj: Word::from_reduced(l[..u].to_vec()),
            core: Word::from_reduced(l[u..l.len() - u].to_vec()),
        })
    }

    pub fn contains(&self, g: &Word) -> bool {
        match self {
            SubgroupSpec::Cyclic { conj, core } => {
                let h = conj.inverse().mul(g).mul(conj);
                if h.is_identity() {
                    return true;
                }
                if h.len() % core.len() != 0 {
                    return false;
                }
                let n = (h.len() / core.len()) as i64;
                h == core.pow(n) || h == core.pow(-n)
            }
            SubgroupSpec::ExponentSum { letter, modulus } => {
                let sum: i64 = g
                    .letters()
                    .iter()
                    .filter(|&&c| (c >> 1) as usize == *letter)
                    .map(|&c| if c & 1 == 0 { 1 } else { -1 })
                    .sum();
                sum.rem_euclid(*modulus as i64) == 0
            }
        }
    }

    fn log_sphere_count(&self, params: &GroupParams, m: usize) -> f64 {
        match self {
            SubgroupSpec::Cyclic { conj, core } => {
                if m == 0 {
                    return 0.0;
                }
                let base = 2 * conj.len();
                if m > base && (m - base) % core.len() == 0 {
                    2f64.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            SubgroupSpec::ExponentSum { letter, modulus } => {
                exponent_sum_log_count(params, *letter, *modulus as usize, m)
            }
        }
    }
}

/// log #{|g| = m : exponent sum of `letter` ≡ 0 mod n}, by a transfer
/// recursion over (last letter, residue) rescaled every step.
fn exponent_sum_log_count(params: &GroupParams, letter: usize, n: usize, m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    let a = params.alphabet();
    let step = |c: usize| -> usize {
        if c >> 1 != letter {
            0
        } else if c & 1 == 0 {
            1
        } else {
            n - 1
        }
    };
    let mut state = vec![0.0f64; a * n];
    for c in 0..a {
        state[c * n + step(c) % n] += 1.0;
    }
    let mut log_scale = 0.0;
    for _ in 1..m {
        let mut next = vec![0.0f64; a * n];
        for prev in 0..a {
            for r in 0..n {
                let v = state[prev * n + r];
                if v == 0.0 {
                    continue;
                }
                for c in (0..a).filter(|&c| c != prev ^ 1) {
                    next[c * n + (r + step(c)) % n] += v;
                }
            }
        }
        let hi = next.iter().copied().fold(0.0, f64::max);
        for x in next.iter_mut() {
            *x /= hi;
        }
        log_scale += hi.ln();
        state = next;
    }
    let total: f64 = (0..a).map(|c| state[c * n]).sum();
    if total == 0.0 {
        f64::NEG_INFINITY
    } else {
        log_scale + total.ln()
    }
}

/// Finitely supported table of values on a ball; zero outside.
#[derive(Debug, Clone)]
pub struct TableData {
    values: BTreeMap<Word, f64>,
    radius: usize,
    outside_reads: Arc<AtomicU64>,
}

impl TableData {
    pub fn values(&self) -> &BTreeMap<Word, f64> {
        &self.values
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Evaluations that fell outside the table's ball.
    pub fn outside_reads(&self) -> u64 {
        self.outside_reads.load(Ordering::Relaxed)
    }
}

impl PartialEq for TableData {
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values && self.radius == other.radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleKind {
    Trivial,
    Dirac,
    Subgroup(SubgroupSpec),
    Haagerup { t: f64 },
    HarishChandra { s: f64 },
    Table(TableData),
}

/// φ(n) = Σ α_i e^{-τ_i n} + β·[n = 0] on radial oracles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpSum {
    pub terms: Vec<(f64, f64)>,
    pub atom: f64,
}

impl ExpSum {
    pub fn value(&self, n: usize) -> f64 {
        let mut v: f64 = self.terms.iter().map(|(a, t)| a * (-t * n as f64).exp()).sum();
        if n == 0 {
            v += self.atom;
        }
        v
    }
}

/// φ(g) ≤ amp·e^{-rate |g|}, and φ = 0 beyond `support` when finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub amp: f64,
    pub rate: f64,
    pub support: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct PosDefOracle {
    name: String,
    params: GroupParams,
    kind: OracleKind,
}

impl PosDefOracle {
    pub fn trivial(params: &GroupParams) -> Self {
        Self::build(params, "trivial".into(), OracleKind::Trivial)
    }

    pub fn dirac(params: &GroupParams) -> Self {
        Self::build(params, "dirac".into(), OracleKind::Dirac)
    }

    pub fn subgroup(params: &GroupParams, spec: SubgroupSpec) -> Self {
        let name = match &spec {
            SubgroupSpec::Cyclic { conj, core } => {
                format!("cyclic:{}", params.format(&conj.mul(core).mul(&conj.inverse())))
            }
            SubgroupSpec::ExponentSum { letter, modulus } => format!(
                "kernel:{}:{}",
                params.letter_char(2 * *letter as u8),
                modulus
            ),
        };
        Self::build(params, name, OracleKind::Subgroup(spec))
    }

    pub fn cyclic(params: &GroupParams, w: &Word) -> Result<Self> {
        Ok(Self::subgroup(params, SubgroupSpec::cyclic(w)?))
    }

    pub fn exponent_kernel(params: &GroupParams, letter: usize, modulus: u32) -> Result<Self> {
        if letter >= params.rank() || modulus < 1 {
            return Err(Error::Input(format!(
                "kernel oracle needs a generator index < {} and modulus ≥ 1",
                params.rank()
            )));
        }
        Ok(Self::subgroup(params, SubgroupSpec::ExponentSum { letter, modulus }))
    }

    /// e^{-t|g|}.
    pub fn haagerup(params: &GroupParams, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Input(format!("haagerup needs t > 0, got {t}")));
        }
        Ok(Self::build(params, format!("haagerup:{t}"), OracleKind::Haagerup { t }))
    }

    /// e^{-(1-s)δ|g|}, whose critical exponent is s.
    pub fn haagerup_s(params: &GroupParams, s: f64) -> Result<Self> {
        if !(s < 1.0) {
            return Err(Error::Input(format!("haagerup exponent must be < 1, got {s}")));
        }
        let mut o = Self::haagerup(params, (1.0 - s) * params.delta())?;
        o.name = format!("haagerup-s:{s}");
        Ok(o)
    }

    /// The spherical function c_s(g) = ∫ e^{-sδ b_ξ(g,e)} dν_PS(ξ).
    pub fn harish_chandra(params: &GroupParams, s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Input(format!("harish-chandra needs 0 ≤ s ≤ 1, got {s}")));
        }
        Ok(Self::build(params, format!("hc:{s}"), OracleKind::HarishChandra { s }))
    }

    /// Table without any checks; see [`PosDefOracle::table`].
    pub fn table_unchecked(params: &GroupParams, entries: BTreeMap<Word, f64>) -> Self {
        let radius = entries.keys().map(Word::len).max().unwrap_or(0);
        let data = TableData {
            values: entries,
            radius,
            outside_reads: Arc::new(AtomicU64::new(0)),
        };
        Self::build(params, "table".into(), OracleKind::Table(data))
    }

    /// Validated table: φ(e) = 1, φ ≥ 0, symmetric, and a passing Gram check
    /// on the largest ball on which the table determines the Gram matrix.
    pub fn table(
        params: &GroupParams,
        entries: BTreeMap<Word, f64>,
        caps: &ResourceCaps,
    ) -> Result<(Self, TableValidation)> {
        let oracle = Self::table_unchecked(params, entries);
        let report = oracle.validate_table(caps)?;
        if !report.passed {
            return Err(Error::Validation(report.failures.join("; ")));
        }
        Ok((oracle, report))
    }

    pub fn table_from_csv(params: &GroupParams, path: &Path, caps: &ResourceCaps) -> Result<(Self, TableValidation)> {
        let mut o = Self::table(params, read_table_csv(params, path)?, caps)?;
        o.0.name = format!("table:{}", path.display());
        Ok(o)
    }

    fn build(params: &GroupParams, name: String, kind: OracleKind) -> Self {
        Self {
            name,
            params: params.clone(),
            kind,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &OracleKind {
        &self.kind
    }

    pub fn params(&self) -> &GroupParams {
        &self.params
    }

    pub fn eval(&self, g: &Word) -> f64 {
        match &self.kind {
            OracleKind::Subgroup(spec) => f64::from(u8::from(spec.contains(g))),
            OracleKind::Table(data) => match data.values.get(g) {
                Some(v) => *v,
                None => {
                    if g.len() > data.radius {
                        data.outside_reads.fetch_add(1, Ordering::Relaxed);
                    }
                    0.0
                }
            },
            _ => self.radial_value(g.len()).unwrap(),
        }
    }

    pub fn is_radial(&self) -> bool {
        !matches!(self.kind, OracleKind::Subgroup(_) | OracleKind::Table(_))
    }

    /// φ on the sphere of radius n, for radial oracles.
    pub fn radial_value(&self, n: usize) -> Option<f64> {
        match &self.kind {
            OracleKind::Trivial => Some(1.0),
            OracleKind::Dirac => Some(if n == 0 { 1.0 } else { 0.0 }),
            OracleKind::Haagerup { t } => Some((-t * n as f64).exp()),
            OracleKind::HarishChandra { s } => Some(hc_closed_form(&self.params, *s, n)),
            _ => None,
        }
    }

    /// log φ(n) for radial oracles; -inf where φ vanishes.
    pub fn log_radial_value(&self, n: usize) -> Option<f64> {
        match &self.kind {
            OracleKind::Haagerup { t } => Some(-t * n as f64),
            _ => self.radial_value(n).map(f64::ln),
        }
    }

    /// Normalized exponent (units of δ) where it is known in closed form.
    pub fn declared_exponent(&self) -> Option<f64> {
        let delta = self.params.delta();
        match &self.kind {
            OracleKind::Trivial => Some(1.0),
            OracleKind::Dirac => Some(0.0),
            OracleKind::Subgroup(SubgroupSpec::Cyclic { .. }) => Some(0.0),
            OracleKind::Subgroup(SubgroupSpec::ExponentSum { .. }) => Some(1.0),
            OracleKind::Haagerup { t } => Some((1.0 - t / delta).max(0.0)),
            OracleKind::HarishChandra { s } => Some(s.max(1.0 - s)),
            OracleKind::Table(_) => Some(0.0),
        }
    }

    /// p such that φ lies in ℓ^{p+ε} for every ε > 0, clamped below at 2.
    pub fn integrability_p(&self) -> Option<f64> {
        let delta = self.params.delta();
        match &self.kind {
            OracleKind::Dirac | OracleKind::Table(_) => Some(2.0),
            OracleKind::Haagerup { t } => Some((delta / t).max(2.0)),
            OracleKind::HarishChandra { s } => Some((1.0 / (1.0 - s.max(1.0 - s))).max(2.0)),
            _ => None,
        }
    }

    /// Whether the envelope is exact for this oracle rather than the generic
    /// φ ≤ φ(e) bound.
    pub fn envelope_declared(&self) -> bool {
        !matches!(self.kind, OracleKind::Trivial)
    }

    pub fn envelope(&self) -> Envelope {
        match &self.kind {
            OracleKind::Trivial | OracleKind::Subgroup(_) => Envelope {
                amp: 1.0,
                rate: 0.0,
                support: None,
            },
            OracleKind::Dirac => Envelope {
                amp: 1.0,
                rate: 0.0,
                support: Some(0),
            },
            OracleKind::Haagerup { t } => Envelope {
                amp: 1.0,
                rate: *t,
                support: None,
            },
            OracleKind::HarishChandra { s } => hc_envelope(&self.params, *s),
            OracleKind::Table(data) => Envelope {
                amp: data.values.values().copied().fold(0.0, f64::max),
                rate: 0.0,
                support: Some(data.radius),
            },
        }
    }

    /// Σ_{|g| = m} φ(g) ≤ amp·e^{rate·m}, and 0 beyond the support.
    pub fn sphere_envelope(&self) -> Envelope {
        let q = self.params.qf();
        let grow = (q + 1.0) / q;
        let delta = self.params.delta();
        match &self.kind {
            OracleKind::Subgroup(SubgroupSpec::Cyclic { .. }) => Envelope {
                amp: 2.0,
                rate: 0.0,
                support: None,
            },
            OracleKind::Table(data) => Envelope {
                amp: (0..=data.radius)
                    .map(|m| self.log_sphere_sum(m).exp())
                    .fold(0.0, f64::max),
                rate: 0.0,
                support: Some(data.radius),
            },
            _ => {
                let e = self.envelope();
                Envelope {
                    amp: e.amp * grow.max(1.0),
                    rate: delta - e.rate,
                    support: e.support,
                }
            }
        }
    }

    /// Radial oracles as an exponential sum, where one exists.
    pub fn exp_sum_form(&self) -> Option<ExpSum> {
        let delta = self.params.delta();
        match &self.kind {
            OracleKind::Trivial => Some(ExpSum {
                terms: vec![(1.0, 0.0)],
                atom: 0.0,
            }),
            OracleKind::Dirac => Some(ExpSum {
                terms: vec![],
                atom: 1.0,
            }),
            OracleKind::Haagerup { t } => Some(ExpSum {
                terms: vec![(1.0, *t)],
                atom: 0.0,
            }),
            OracleKind::HarishChandra { s } => {
                let (a, b) = hc_coefficients(&self.params, *s)?;
                Some(ExpSum {
                    terms: vec![(a, s * delta), (b, (1.0 - s) * delta)],
                    atom: 0.0,
                })
            }
            _ => None,
        }
    }

    /// log Σ_{|g| = m} φ(g), exact; -inf when the sphere sum vanishes.
    pub fn log_sphere_sum(&self, m: usize) -> f64 {
        let p = &self.params;
        match &self.kind {
            OracleKind::Subgroup(spec) => spec.log_sphere_count(p, m),
            OracleKind::Table(data) => {
                let s: f64 = data
                    .values
                    .iter()
                    .filter(|(w, _)| w.len() == m)
                    .map(|(_, v)| *v)
                    .sum();
                if s > 0.0 {
                    s.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            _ => p.log_sphere_size(m) + self.log_radial_value(m).unwrap(),
        }
    }

    pub fn sphere_sum(&self, m: usize) -> f64 {
        self.log_sphere_sum(m).exp()
    }

    /// Report-friendly summary.
    pub fn describe(&self) -> OracleInfo {
        OracleInfo {
            name: self.name.clone(),
            declared_exponent: self.declared_exponent(),
            envelope: self.envelope(),
            envelope_declared: self.envelope_declared(),
            radial: self.is_radial(),
            outside_table_reads: match &self.kind {
                OracleKind::Table(d) => Some(d.outside_reads()),
                _ => None,
            },
        }
    }

    pub fn validate_table(&self, caps: &ResourceCaps) -> Result<TableValidation> {
        let OracleKind::Table(data) = &self.kind else {
            return Err(Error::Input("not a table oracle".into()));
        };
        let mut failures = Vec::new();
        let at_e = data.values.get(&Word::identity()).copied().unwrap_or(0.0);
        if (at_e - 1.0).abs() > 1e-12 {
            failures.push(format!("φ(e) = {at_e}, expected 1"));
        }
        let negatives: Vec<String> = data
            .values
            .iter()
            .filter(|(_, v)| **v < 0.0 || !v.is_finite())
            .map(|(w, v)| format!("{}={v}", self.params.format(w)))
            .collect();
        if !negatives.is_empty() {
            failures.push(format!("negative or non-finite values: {}", negatives.join(",")));
        }
        let asym: Vec<String> = data
            .values
            .iter()
            .filter(|(w, v)| {
                let other = data.values.get(&w.inverse()).copied().unwrap_or(0.0);
                (other - **v).abs() > 1e-12 * v.abs().max(1.0)
            })
            .map(|(w, _)| self.params.format(w))
            .collect();
        if !asym.is_empty() {
            failures.push(format!("φ(g) ≠ φ(g⁻¹) at {}", asym.join(",")));
        }
        let psd = psd_check(self, data.radius / 2, 1e-8, caps)?;
        if !psd.positive {
            failures.push(format!(
                "Gram matrix on the ball of radius {} not positive (min eigenvalue {:e})",
                psd.radius, psd.min_eigenvalue
            ));
        }
        Ok(TableValidation {
            entries: data.values.len(),
            radius: data.radius,
            passed: failures.is_empty(),
            failures,
            psd,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleInfo {
    pub name: String,
    pub declared_exponent: Option<f64>,
    pub envelope: Envelope,
    pub envelope_declared: bool,
    pub radial: bool,
    pub outside_table_reads: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableValidation {
    pub entries: usize,
    pub radius: usize,
    pub passed: bool,
    pub failures: Vec<String>,
    pub psd: PsdCertificate,
}

/// Rows of `word,value`; an optional header line starting with "word" is skipped.
pub fn read_table_csv(params: &GroupParams, path: &Path) -> Result<BTreeMap<Word, f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut out = BTreeMap::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
        if i == 0 && rec.get(0).is_some_and(|s| s.eq_ignore_ascii_case("word")) {
            continue;
        }
        if rec.len() != 2 {
            return Err(Error::Validation(format!(
                "{} line {}: expected `word,value`, got {} fields",
                path.display(),
                i + 1,
                rec.len()
            )));
        }
        let w = params
            .parse(&rec[0])
            .map_err(|e| Error::Validation(format!("{} line {}: {e}", path.display(), i + 1)))?;
        let v: f64 = rec[1].parse().map_err(|_| {
            Error::Validation(format!("{} line {}: bad value {:?}", path.display(), i + 1, &rec[1]))
        })?;
        if out.insert(w, v).is_some() {
            return Err(Error::Validation(format!(
                "{} line {}: duplicate word {:?}",
                path.display(),
                i + 1,
                &rec[0]
            )));
        }
    }
    if out.is_empty() {
        return Err(Error::Validation(format!("{}: empty table", path.display())));
    }
    Ok(out)
}

/// Coefficients (A, B) with c_s(m) = A q^{-sm} + B q^{-(1-s)m}; None at s = ½
/// where the two exponentials merge.
pub fn hc_coefficients(params: &GroupParams, s: f64) -> Option<(f64, f64)> {
    let q = params.qf();
    let r = q.powf(2.0 * s - 1.0);
    if (r - 1.0).abs() < 1e-9 {
        return None;
    }
    let a = (r - q) / ((q + 1.0) * (r - 1.0));
    let b = q / (q + 1.0) + (q - 1.0) / ((q + 1.0) * (r - 1.0));
    Some((a, b))
}

pub fn hc_closed_form(params: &GroupParams, s: f64, m: usize) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let q = params.qf();
    let mf = m as f64;
    match hc_coefficients(params, s) {
        Some((a, b)) => a * q.powf(-s * mf) + b * q.powf(-(1.0 - s) * mf),
        None => q.powf(-mf / 2.0) * (1.0 + (q - 1.0) / (q + 1.0) * mf),
    }
}

fn hc_envelope(params: &GroupParams, s: f64) -> Envelope {
    let delta = params.delta();
    let slow = s.min(1.0 - s);
    match hc_coefficients(params, s) {
        Some((a, b)) => {
            let (slow_c, fast_c) = if s > 0.5 { (b, a) } else { (a, b) };
            Envelope {
                amp: slow_c + fast_c.max(0.0),
                rate: slow * delta,
                support: None,
            }
        }
        None => {
            let q = params.qf();
            let c = (q - 1.0) / (q + 1.0);
            let rate = 0.49 * delta;
            let eta = 0.5 * delta - rate;
            let m_star = (1.0 / eta - 1.0 / c).max(0.0);
            let amp = (1.0 + c * m_star) * (-eta * m_star).exp();
            Envelope {
                amp: amp.max(1.0),
                rate,
                support: None,
            }
        }
    }
}

/// Gram-matrix certificate.
#[derive(Debug, Clone, Serialize)]
pub struct PsdCertificate {
    pub radius: usize,
    pub matrix_dim: usize,
    pub min_eigenvalue: f64,
    pub trace_over_dim: f64,
    pub tolerance: f64,
    pub precheck_ok: bool,
    pub positive: bool,
}

/// Minimal eigenvalue of [φ(g⁻¹h)] over the ball B_radius. A negative value
/// of φ on B_{2·radius} fails the pointwise precheck before the eigensolve.
pub fn psd_check(phi: &PosDefOracle, radius: usize, tolerance: f64, caps: &ResourceCaps) -> Result<PsdCertificate> {
    let p = phi.params();
    let dim = p.ball_size(radius);
    if dim > caps.max_dense_dim as u128 {
        return Err(Error::ResourceCap {
            what: "Gram matrix dimension",
            needed: dim,
            cap: caps.max_dense_dim as u128,
        });
    }
    let ball = enumerate_ball(p, radius, caps)?;
    let n = ball.len();
    let inv: Vec<Word> = ball.iter().map(Word::inverse).collect();
    let mut gram = DMatrix::zeros(n, n);
    let mut precheck_ok = true;
    for i in 0..n {
        for j in i..n {
            let v = phi.eval(&inv[i].mul(&ball[j]));
            if v < 0.0 || !v.is_finite() {
                precheck_ok = false;
            }
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let trace_over_dim = gram.trace() / n as f64;
    let min_eigenvalue = symmetric_eigenvalues(gram)[0];
    let positive = precheck_ok && min_eigenvalue >= -tolerance * trace_over_dim.abs();
    Ok(PsdCertificate {
        radius,
        matrix_dim: n,
        min_eigenvalue,
        trace_over_dim,
        tolerance,
        precheck_ok,
        positive,
    })
}

/// Σ_g f(g) φ(g).
pub fn coefficient_sum(phi: &PosDefOracle, f: &SparseGroupFunction) -> f64 {
    let terms: Vec<f64> = f.iter().map(|(g, v)| v * phi.eval(g)).collect();
    crate::numeric::pairwise_sum(&terms)
}

/// Σ_m f_m Σ_{|g|=m} φ(g), through exact sphere sums.
pub fn coefficient_sum_radial(phi: &PosDefOracle, f: &RadialFunction) -> f64 {
    let (pos, neg): (Vec<f64>, Vec<f64>) = f
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .fold((vec![], vec![]), |(mut pos, mut neg), (m, c)| {
            let l = c.abs().ln() + phi.log_sphere_sum(m);
            if *c > 0.0 {
                pos.push(l);
            } else {
                neg.push(l);
            }
            (pos, neg)
        });
    log_sum_exp(pos).exp() - log_sum_exp(neg).exp()
}

/// Textual oracle selector used in configs and on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleSpec {
    Trivial,
    Dirac,
    Cyclic(String),
    Kernel { letter: char, modulus: u32 },
    Haagerup(f64),
    HaagerupS(f64),
    HarishChandra(f64),
    Table(String),
}

impl OracleSpec {
    pub fn build(&self, params: &GroupParams, caps: &ResourceCaps) -> Result<PosDefOracle> {
        match self {
            OracleSpec::Trivial => Ok(PosDefOracle::trivial(params)),
            OracleSpec::Dirac => Ok(PosDefOracle::dirac(params)),
            OracleSpec::Cyclic(w) => PosDefOracle::cyclic(params, &params.parse(w)?),
            OracleSpec::Kernel { letter, modulus } => {
                let code = params.letter_code(*letter)?;
                PosDefOracle::exponent_kernel(params, (code >> 1) as usize, *modulus)
            }
            OracleSpec::Haagerup(t) => PosDefOracle::haagerup(params, *t),
            OracleSpec::HaagerupS(s) => PosDefOracle::haagerup_s(params, *s),
            OracleSpec::HarishChandra(s) => PosDefOracle::harish_chandra(params, *s),
            OracleSpec::Table(path) => Ok(PosDefOracle::table_from_csv(params, Path::new(path), caps)?.0),
        }
    }
}

/// Build an oracle from its textual spec, e.g. `haagerup-s:0.75`.
pub fn make_oracle(params: &GroupParams, spec: &str, caps: &ResourceCaps) -> Result<PosDefOracle> {
    spec.parse::<OracleSpec>()?.build(params, caps)
}

impl FromStr for OracleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |a: Option<&str>| -> Result<f64> {
            a.ok_or_else(|| Error::Input(format!("oracle {head:?} needs a parameter")))?
                .parse()
                .map_err(|_| Error::Input(format!("bad oracle parameter in {s:?}")))
        };
        match head {
            "trivial" => Ok(OracleSpec::Trivial),
            "dirac" => Ok(OracleSpec::Dirac),
            "cyclic" | "subgroup" => Ok(OracleSpec::Cyclic(arg.unwrap_or("a").to_string())),
            "kernel" => {
                let a = arg.ok_or_else(|| Error::Input("kernel oracle needs letter:modulus".into()))?;
                let (l, m) = a
                    .split_once(':')
                    .ok_or_else(|| Error::Input("kernel oracle needs letter:modulus".into()))?;
                let mut chars = l.chars();
                let letter = match (chars.next(), chars.next()) {
                    (Some(c), None) => c,
                    _ => return Err(Error::Input(format!("bad kernel letter {l:?}"))),
                };
                let modulus = m
                    .parse()
                    .map_err(|_| Error::Input(format!("bad kernel modulus {m:?}")))?;
                Ok(OracleSpec::Kernel { letter, modulus })
            }
            "haagerup" => Ok(OracleSpec::Haagerup(num(arg)?)),
            "haagerup-s" => Ok(OracleSpec::HaagerupS(num(arg)?)),
            "hc" | "harish-chandra" => Ok(OracleSpec::HarishChandra(num(arg)?)),
            "table" => Ok(OracleSpec::Table(
                arg.ok_or_else(|| Error::Input("table oracle needs a CSV path".into()))?
                    .to_string(),
            )),
            _ => Err(Error::Input(format!("unknown oracle {s:?}"))),
        }
    }
}

impl fmt::Display for OracleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleSpec::Trivial => write!(f, "trivial"),
            OracleSpec::Dirac => write!(f, "dirac"),
            OracleSpec::Cyclic(w) => write!(f, "cyclic:{w}"),
            OracleSpec::Kernel { letter, modulus } => write!(f, "kernel:{letter}:{modulus}"),
            OracleSpec::Haagerup(t) => write!(f, "haagerup:{t}"),
            OracleSpec::HaagerupS(s) => write!(f, "haagerup-s:{s}"),
            OracleSpec::HarishChandra(s) => write!(f, "hc:{s}"),
            OracleSpec::Table(p) => write!(f, "table:{p}"),
        }
    }
}
