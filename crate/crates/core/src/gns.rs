//! Twisted GNS pair measures m_n on Γ̄ × Γ̄ at finite truncation, their
//! boundary blocks, conformality diagnostics, the conditional expectation,
//! Knapp–Stein kernels and Harish-Chandra functions.
//!
//! m_n(F) = (1/Z) Σ_{|g|,|h| ≤ M} F(g,h) φ(g⁻¹h) w(|g|) w(|h|) with
//! w(a) = θ(a) e^{-σδa}. The block at depth N holds m_n(Ĉ_u × Ĉ_v) where
//! Ĉ_u = {x ∈ Γ̄ : x starts with u} contains group elements as well as rays.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::boundary::{cylinder_mass, cylinders, shadow, BoundaryKernelMatrix, Cylinder};
use crate::error::{Error, Result};
use crate::group::{enumerate_ball, GroupParams, ResourceCaps, Word};
use crate::numeric::{pairwise_sum, symmetric_eigenvalues};
use crate::poincare::{critical_exponent, double_tail_bound, SlowGrowthTheta};
use crate::posdef::{OracleKind, PosDefOracle, SubgroupSpec};

/// Cells with less than this fraction of the block mass are left out of
/// relative-deviation audits.
pub const MASS_FLOOR: f64 = 1e-6;

/// σ_j = s + 0.2·2^{-j}.
pub fn sigma_schedule(s: f64, steps: usize) -> Vec<f64> {
    (0..steps).map(|j| s + 0.2 * 0.5f64.powi(j as i32)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PairMeasureOptions {
    pub tail_frac: f64,
    pub start_truncation: usize,
    pub max_truncation: usize,
    /// Largest |g| for which translated cylinder masses are needed.
    pub max_shift: usize,
    /// Budget of (g, h) evaluations for non-radial oracles.
    pub max_pairs: u128,
}

impl Default for PairMeasureOptions {
    fn default() -> Self {
        Self {
            tail_frac: 1e-6,
            start_truncation: 64,
            max_truncation: 1 << 15,
            max_shift: 1,
            max_pairs: 60_000_000,
        }
    }
}

/// Exact Γ̄-cylinder pair masses for radial φ(n) = Σ α_i e^{-τ_i n} + β[n=0].
/// Quantities are stored relative to w(l): rhat[i][l] = R_i(l)/w(l) and
/// dhat[l] = D(l)/w(l)², where R_i(l) = Σ_{b>l} q^{b-l} e^{-τ_i(b-l)} w(b) and
/// D(l) is the mass of Ĉ_x × Ĉ_x for any |x| = l.
#[derive(Debug, Clone)]
struct RadialEngine {
    q: f64,
    log_w: Vec<f64>,
    alphas: Vec<f64>,
    taus: Vec<f64>,
    atom: f64,
    rhat: Vec<Vec<f64>>,
    dhat: Vec<f64>,
}

impl RadialEngine {
    fn new(params: &GroupParams, log_w: Vec<f64>, alphas: Vec<f64>, taus: Vec<f64>, atom: f64) -> Self {
        let q = params.qf();
        let m = log_w.len() - 1;
        let rho: Vec<f64> = (0..m).map(|l| (log_w[l + 1] - log_w[l]).exp()).collect();
        let mut rhat = vec![vec![0.0; m + 1]; alphas.len()];
        for (i, tau) in taus.iter().enumerate() {
            let f = q * (-tau).exp();
            for l in (0..m).rev() {
                rhat[i][l] = f * rho[l] * (1.0 + rhat[i][l + 1]);
            }
        }
        let at_zero: f64 = alphas.iter().sum::<f64>() + atom;
        let mut dhat = vec![0.0; m + 1];
        dhat[m] = at_zero;
        for l in (0..m).rev() {
            let mut own = at_zero;
            for (i, a) in alphas.iter().enumerate() {
                let r = rhat[i][l];
                own += a * (2.0 * r + (q - 1.0) / q * r * r);
            }
            dhat[l] = own + q * rho[l] * rho[l] * dhat[l + 1];
        }
        Self {
            q,
            log_w,
            alphas,
            taus,
            atom,
            rhat,
            dhat,
        }
    }

    fn m(&self) -> usize {
        self.log_w.len() - 1
    }

    fn w(&self, l: usize) -> f64 {
        self.log_w[l].exp()
    }

    /// T_i(l) = Σ_{a ≥ l} q^{a-l} w(a) e^{-τ_i a}.
    fn t(&self, i: usize, l: usize) -> f64 {
        if l > self.m() {
            return 0.0;
        }
        (self.log_w[l] - self.taus[i] * l as f64).exp() * (1.0 + self.rhat[i][l])
    }

    fn d(&self, l: usize) -> f64 {
        if l > self.m() {
            return 0.0;
        }
        (2.0 * self.log_w[l]).exp() * self.dhat[l]
    }

    fn z(&self) -> f64 {
        let q = self.q;
        let w0 = self.w(0);
        let mut z = w0 * w0 * (self.alphas.iter().sum::<f64>() + self.atom) + (q + 1.0) * self.d(1);
        for (i, a) in self.alphas.iter().enumerate() {
            let t1 = self.t(i, 1);
            z += a * ((q + 1.0) * q * t1 * t1 + 2.0 * (q + 1.0) * w0 * t1);
        }
        z
    }

    fn pair_mass(&self, w1: &Word, w2: &Word) -> f64 {
        let (l1, l2) = (w1.len(), w2.len());
        let c = w1.common_prefix_len(w2);
        if c < l1 && c < l2 {
            return self
                .alphas
                .iter()
                .enumerate()
                .map(|(i, a)| a * (2.0 * self.taus[i] * c as f64).exp() * self.t(i, l1) * self.t(i, l2))
                .sum();
        }
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        let mut total = self.d(hi);
        if hi > self.m() {
            return 0.0;
        }
        for cp in lo..hi {
            let wc = self.w(cp);
            for (i, a) in self.alphas.iter().enumerate() {
                let th = self.t(i, hi);
                let tau = self.taus[i];
                total += a * wc * (tau * cp as f64).exp() * th;
                total += a * (self.q - 1.0) * (2.0 * tau * cp as f64).exp() * self.t(i, cp + 1) * th;
            }
        }
        total
    }
}

/// Pair masses of Ĉ_{w1} × Ĉ_{w2} for all nonempty words of length ≤ L,
/// accumulated from enumerated pairs truncated to their L-prefixes.
#[derive(Debug, Clone)]
struct EnumEngine {
    index: BTreeMap<Word, usize>,
    words: Vec<Word>,
    masses: Vec<f64>,
    z: f64,
}

impl EnumEngine {
    fn pair_mass(&self, w1: &Word, w2: &Word) -> f64 {
        match (self.index.get(w1), self.index.get(w2)) {
            (Some(&i), Some(&j)) => self.masses[i * self.words.len() + j],
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone)]
enum MassEngine {
    Radial(RadialEngine),
    Enumerated(EnumEngine),
}

impl MassEngine {
    fn pair_mass(&self, w1: &Word, w2: &Word) -> f64 {
        match self {
            MassEngine::Radial(r) => r.pair_mass(w1, w2),
            MassEngine::Enumerated(e) => e.pair_mass(w1, w2),
        }
    }

    fn z(&self) -> f64 {
        match self {
            MassEngine::Radial(r) => r.z(),
            MassEngine::Enumerated(e) => e.z,
        }
    }
}

/// Discretized m_n.
#[derive(Debug, Clone)]
pub struct PairMeasure {
    pub params: GroupParams,
    pub phi: String,
    pub sigma: f64,
    pub theta: SlowGrowthTheta,
    pub truncation_m: usize,
    pub depth: usize,
    /// Unnormalized total, the truncated P_{θ,2}.
    pub normalization: f64,
    pub tail_bound: f64,
    pub interior_mass: f64,
    /// m_n(Ĉ_u × Ĉ_v), cells in sphere-rank order.
    pub boundary_block: DMatrix<f64>,
    pub cells: Vec<Cylinder>,
    pub delta_eff: f64,
    pub exponent_source: &'static str,
    engine: MassEngine,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairMeasureSummary {
    pub phi: String,
    pub sigma: f64,
    pub truncation_m: usize,
    pub depth: usize,
    pub normalization: f64,
    pub tail_bound: f64,
    pub interior_mass: f64,
    pub block_mass: f64,
    pub delta_eff: f64,
    pub exponent_source: &'static str,
    pub engine: &'static str,
}

impl PairMeasure {
    pub fn summary(&self) -> PairMeasureSummary {
        PairMeasureSummary {
            phi: self.phi.clone(),
            sigma: self.sigma,
            truncation_m: self.truncation_m,
            depth: self.depth,
            normalization: self.normalization,
            tail_bound: self.tail_bound,
            interior_mass: self.interior_mass,
            block_mass: self.block_mass(),
            delta_eff: self.delta_eff,
            exponent_source: self.exponent_source,
            engine: match self.engine {
                MassEngine::Radial(_) => "radial",
                MassEngine::Enumerated(_) => "enumerated",
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.cells.len()
    }

    pub fn block_mass(&self) -> f64 {
        pairwise_sum(self.boundary_block.as_slice())
    }

    /// Normalized m_n(Ĉ_{w1} × Ĉ_{w2}).
    pub fn cylinder_pair_mass(&self, w1: &Word, w2: &Word) -> f64 {
        self.engine.pair_mass(w1, w2) / self.normalization
    }

    /// Block rescaled to total mass 1: the estimate of the limit measure on
    /// ∂Γ × ∂Γ at this depth.
    pub fn normalized_block(&self) -> DMatrix<f64> {
        &self.boundary_block / self.block_mass()
    }

    pub fn is_radial(&self) -> bool {
        matches!(self.engine, MassEngine::Radial(_))
    }
}

/// Builds m_n, growing the truncation until the tail of P_{θ,2} is below
/// `tail_frac` of the partial sum.
pub fn pair_measure(
    phi: &PosDefOracle,
    sigma: f64,
    theta: &SlowGrowthTheta,
    depth: usize,
    opts: &PairMeasureOptions,
    caps: &ResourceCaps,
) -> Result<PairMeasure> {
    let p = phi.params().clone();
    if depth == 0 {
        return Err(Error::Input("pair measure depth must be ≥ 1".into()));
    }
    let (delta_eff, exponent_source) = effective_exponent(phi)?;
    let threshold = (delta_eff / p.delta()).max(0.5);
    if !(sigma > threshold) {
        return Err(Error::Diverged(format!(
            "{} needs σ > {threshold}, got {sigma}",
            phi.name()
        )));
    }
    let radial = phi.exp_sum_form();
    let mut m = opts.start_truncation.max(depth + opts.max_shift + 1);
    if radial.is_none() {
        m = depth + opts.max_shift;
    }
    loop {
        let tail = double_tail_bound(phi, sigma, theta.log_max(), m);
        let engine = match &radial {
            Some(form) => {
                let log_w = log_weights(&p, theta, sigma, m);
                let (alphas, taus): (Vec<f64>, Vec<f64>) = form.terms.iter().copied().unzip();
                MassEngine::Radial(RadialEngine::new(&p, log_w, alphas, taus, form.atom))
            }
            None => MassEngine::Enumerated(enumerate_engine(phi, sigma, theta, m, depth + opts.max_shift, opts, caps)?),
        };
        let z = engine.z();
        let passed = tail <= opts.tail_frac * z;
        let next = if radial.is_some() { 2 * m } else { m + 1 };
        if passed || next > opts.max_truncation || (radial.is_none() && pair_budget(phi, next) > opts.max_pairs) {
            if !passed {
                return Err(Error::Precision(format!(
                    "tail certificate failed for {} at σ = {sigma}: bound {tail:e} vs {:e} at M = {m}",
                    phi.name(),
                    opts.tail_frac * z
                )));
            }
            return finish(phi, &p, sigma, theta, m, depth, z, tail, engine, delta_eff, exponent_source, caps);
        }
        m = next;
    }
}

fn effective_exponent(phi: &PosDefOracle) -> Result<(f64, &'static str)> {
    let delta = phi.params().delta();
    let (s, source) = match phi.declared_exponent() {
        Some(s) => (s, "declared"),
        None => (critical_exponent(phi, (4, 12))?.s_hat, "estimated"),
    };
    Ok((s.max(0.5) * delta, source))
}

fn log_weights(p: &GroupParams, theta: &SlowGrowthTheta, sigma: f64, m: usize) -> Vec<f64> {
    (0..=m)
        .map(|a| theta.log_eval(a as f64) - sigma * p.delta() * a as f64)
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn finish(
    phi: &PosDefOracle,
    p: &GroupParams,
    sigma: f64,
    theta: &SlowGrowthTheta,
    m: usize,
    depth: usize,
    z: f64,
    tail: f64,
    engine: MassEngine,
    delta_eff: f64,
    exponent_source: &'static str,
    caps: &ResourceCaps,
) -> Result<PairMeasure> {
    let cells = cylinders(p, depth, caps)?;
    let n = cells.len();
    if n > caps.max_dense_dim {
        return Err(Error::ResourceCap {
            what: "boundary block dimension",
            needed: n as u128,
            cap: caps.max_dense_dim as u128,
        });
    }
    let block = match &engine {
        MassEngine::Radial(r) => {
            // Depends only on the common prefix length of the two cells.
            let u = cells[0].prefix();
            let by_cp: Vec<f64> = (0..=depth)
                .map(|c| {
                    let v = if c == depth {
                        u.clone()
                    } else {
                        Word::from_reduced(partner(p, u, c))
                    };
                    r.pair_mass(u, &v) / z
                })
                .collect();
            DMatrix::from_fn(n, n, |i, j| by_cp[cells[i].prefix().common_prefix_len(cells[j].prefix())])
        }
        MassEngine::Enumerated(e) => {
            DMatrix::from_fn(n, n, |i, j| e.pair_mass(cells[i].prefix(), cells[j].prefix()) / z)
        }
    };
    let block_mass = pairwise_sum(block.as_slice());
    Ok(PairMeasure {
        params: p.clone(),
        phi: phi.name().to_string(),
        sigma,
        theta: theta.clone(),
        truncation_m: m,
        depth,
        normalization: z,
        tail_bound: tail,
        interior_mass: 1.0 - block_mass,
        boundary_block: block,
        cells,
        delta_eff,
        exponent_source,
        engine,
    })
}

/// A word of the same length as u sharing exactly c letters with it.
fn partner(p: &GroupParams, u: &Word, c: usize) -> Vec<u8> {
    let l = u.letters();
    let mut out = l[..c].to_vec();
    let prev = if c == 0 { None } else { Some(l[c - 1]) };
    let first = (0..p.alphabet() as u8)
        .find(|&x| x != l[c] && Some(x ^ 1) != prev)
        .unwrap();
    out.push(first);
    while out.len() < l.len() {
        let last = *out.last().unwrap();
        out.push(if last == 1 { 1 } else { 0 });
    }
    debug_assert!(Word::from_reduced(out.clone()).is_reduced());
    out
}

fn support_list(phi: &PosDefOracle, radius: usize) -> Option<Vec<(Word, f64)>> {
    match phi.kind() {
        OracleKind::Subgroup(SubgroupSpec::Cyclic { conj, core }) => {
            let mut out = vec![(Word::identity(), 1.0)];
            let mut n = 1i64;
            loop {
                let x = conj.mul(&core.pow(n)).mul(&conj.inverse());
                if x.len() > radius {
                    break;
                }
                out.push((x.inverse(), 1.0));
                out.push((x, 1.0));
                n += 1;
            }
            Some(out)
        }
        OracleKind::Table(t) => Some(t.values().iter().map(|(w, v)| (w.clone(), *v)).collect()),
        OracleKind::Dirac => Some(vec![(Word::identity(), 1.0)]),
        _ => None,
    }
}

fn pair_budget(phi: &PosDefOracle, m: usize) -> u128 {
    let p = phi.params();
    let ball = p.ball_size(m);
    match support_list(phi, 2 * m) {
        Some(s) => ball.saturating_mul(s.len() as u128),
        None => ball.saturating_mul(ball),
    }
}

fn enumerate_engine(
    phi: &PosDefOracle,
    sigma: f64,
    theta: &SlowGrowthTheta,
    m: usize,
    fine: usize,
    opts: &PairMeasureOptions,
    caps: &ResourceCaps,
) -> Result<EnumEngine> {
    let p = phi.params();
    let budget = pair_budget(phi, m);
    if budget > opts.max_pairs {
        return Err(Error::ResourceCap {
            what: "enumerated pair evaluations",
            needed: budget,
            cap: opts.max_pairs,
        });
    }
    let fine_words: Vec<Word> = enumerate_ball(p, fine, caps)?.into_iter().skip(1).collect();
    let nf = fine_words.len();
    if (nf as u128) * (nf as u128) > 30_000_000 {
        return Err(Error::ResourceCap {
            what: "enumerated cylinder table",
            needed: (nf * nf) as u128,
            cap: 30_000_000,
        });
    }
    let index: BTreeMap<Word, usize> = fine_words.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
    let ball = enumerate_ball(p, m, caps)?;
    let log_w = log_weights(p, theta, sigma, m);
    let support = support_list(phi, 2 * m);
    let trunc = |x: &Word| -> Option<usize> {
        if x.is_identity() {
            None
        } else {
            Some(index[&x.prefix(x.len().min(fine))])
        }
    };
    let chunk = ball.len().div_ceil(16).max(1);
    let parts: Vec<(f64, Vec<f64>)> = ball
        .par_chunks(chunk)
        .map(|gs| {
            let mut local = vec![0.0; nf * nf];
            let mut z = 0.0;
            for g in gs {
                let wg = log_w[g.len()];
                let gi = trunc(g);
                let mut visit = |h: &Word, val: f64| {
                    if h.len() > m || val == 0.0 {
                        return;
                    }
                    let wt = val * (wg + log_w[h.len()]).exp();
                    z += wt;
                    if let (Some(i), Some(j)) = (gi, trunc(h)) {
                        local[i * nf + j] += wt;
                    }
                };
                match &support {
                    Some(s) => {
                        for (x, v) in s {
                            visit(&g.mul(x), *v);
                        }
                    }
                    None => {
                        let ginv = g.inverse();
                        for h in &ball {
                            visit(h, phi.eval(&ginv.mul(h)));
                        }
                    }
                }
            }
            (z, local)
        })
        .collect();
    let mut exact = vec![0.0; nf * nf];
    let mut z = 0.0;
    for (pz, local) in parts {
        z += pz;
        for (a, b) in exact.iter_mut().zip(local) {
            *a += b;
        }
    }
    // Aggregate exact entries into Γ̄-cylinder masses, deepest words first.
    let children: Vec<Vec<usize>> = fine_words
        .iter()
        .map(|w| {
            if w.len() == fine {
                return vec![];
            }
            (0..p.alphabet() as u8)
                .filter(|&c| Some(c ^ 1) != w.last())
                .map(|c| index[&w.extended(c)])
                .collect()
        })
        .collect();
    let mut order: Vec<usize> = (0..nf).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(fine_words[i].len()));
    let mut rows = exact;
    for &i in &order {
        for &c in &children[i] {
            for j in 0..nf {
                rows[i * nf + j] += rows[c * nf + j];
            }
        }
    }
    let mut masses = rows;
    for &j in &order {
        for &c in &children[j] {
            for i in 0..nf {
                masses[i * nf + j] += masses[i * nf + c];
            }
        }
    }
    Ok(EnumEngine {
        index,
        words: fine_words,
        masses,
        z,
    })
}

/// Relative deviation of the pushforward g_*m from the conformal prediction
/// e^{-δ_eff(b_ξ(g,e) + b_η(g,e))} on depth-N cell pairs.
#[derive(Debug, Clone, Serialize)]
pub struct ConformalReport {
    pub g: String,
    pub deviation: f64,
    pub cells_used: usize,
}

pub fn conformal_check(pm: &PairMeasure, g: &Word) -> Result<ConformalReport> {
    if g.len() >= pm.depth {
        return Err(Error::Precision(format!(
            "|g| = {} needs depth > |g|, have {}",
            g.len(),
            pm.depth
        )));
    }
    let floor = MASS_FLOOR * pm.block_mass();
    let ginv = g.inverse();
    let n = pm.dim();
    let b: Vec<i64> = pm
        .cells
        .iter()
        .map(|c| g.len() as i64 - 2 * g.common_prefix_len(c.prefix()) as i64)
        .collect();
    let moved: Vec<Word> = pm.cells.iter().map(|c| ginv.mul(c.prefix())).collect();
    let rows: Vec<(f64, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut worst = 0.0f64;
            let mut used = 0;
            for j in 0..n {
                let here = pm.boundary_block[(i, j)];
                if here < floor || here <= 0.0 {
                    continue;
                }
                let there = pm.cylinder_pair_mass(&moved[i], &moved[j]);
                let pred = (-pm.delta_eff * (b[i] + b[j]) as f64).exp();
                worst = worst.max((there / here - pred).abs() / pred);
                used += 1;
            }
            (worst, used)
        })
        .collect();
    let used: usize = rows.iter().map(|r| r.1).sum();
    if used == 0 {
        return Err(Error::Degenerate("mass floor leaves no cells".into()));
    }
    Ok(ConformalReport {
        g: pm.params.format(g),
        deviation: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        cells_used: used,
    })
}

#[derive(Debug, Clone)]
pub struct ConditionalExpectationMatrix {
    pub depth: usize,
    pub entries: DMatrix<f64>,
    pub marginals: Vec<f64>,
    pub dropped_rows: Vec<usize>,
}

impl ConditionalExpectationMatrix {
    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.entries.nrows())
            .filter(|i| !self.dropped_rows.contains(i))
            .map(|i| (self.entries.row(i).sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// max |ν_i E_ij - ν_j E_ji|.
    pub fn max_symmetry_error(&self) -> f64 {
        let n = self.entries.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let d = self.marginals[i] * self.entries[(i, j)] - self.marginals[j] * self.entries[(j, i)];
                worst = worst.max(d.abs());
            }
        }
        worst
    }
}

/// E_ij = block_ij / ν_i with ν_i the row marginal of the normalized block.
pub fn conditional_expectation(pm: &PairMeasure) -> Result<ConditionalExpectationMatrix> {
    let block = pm.normalized_block();
    if !block.iter().any(|x| *x != 0.0) {
        return Err(Error::Degenerate("boundary block is zero".into()));
    }
    let n = block.nrows();
    let marginals: Vec<f64> = (0..n).map(|i| block.row(i).sum()).collect();
    let dropped_rows: Vec<usize> = (0..n).filter(|&i| marginals[i] <= 0.0).collect();
    let entries = DMatrix::from_fn(n, n, |i, j| {
        if marginals[i] > 0.0 {
            block[(i, j)] / marginals[i]
        } else {
            0.0
        }
    });
    Ok(ConditionalExpectationMatrix {
        depth: pm.depth,
        entries,
        marginals,
        dropped_rows,
    })
}

/// f1ᵀ B f2 with B the normalized block.
pub fn boundary_form(pm: &PairMeasure, f1: &[f64], f2: &[f64]) -> Result<f64> {
    let n = pm.dim();
    if f1.len() != n || f2.len() != n {
        return Err(Error::Input(format!(
            "cylinder functions need {n} values, got {} and {}",
            f1.len(),
            f2.len()
        )));
    }
    let block = pm.normalized_block();
    let v1 = nalgebra::DVector::from_column_slice(f1);
    let v2 = nalgebra::DVector::from_column_slice(f2);
    Ok(v1.dot(&(&block * v2)))
}

#[derive(Debug, Clone, Serialize)]
pub struct FormSpectrum {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub second_eigenvalue: f64,
    pub mean_diagonal: f64,
    pub relative_min: f64,
}

pub fn form_spectrum(m: &DMatrix<f64>) -> FormSpectrum {
    let n = m.nrows();
    let mean_diagonal = m.trace() / n as f64;
    let ev = symmetric_eigenvalues(m.clone());
    FormSpectrum {
        min_eigenvalue: ev[0],
        max_eigenvalue: ev[n - 1],
        second_eigenvalue: if n > 1 { ev[n - 2] } else { 0.0 },
        mean_diagonal,
        relative_min: ev[0] / mean_diagonal.abs(),
    }
}

pub fn boundary_form_spectrum(pm: &PairMeasure) -> FormSpectrum {
    form_spectrum(&pm.normalized_block())
}

pub type KnappSteinMatrix = BoundaryKernelMatrix;

/// Average of q^{2(1-s)(ξ,η)} over a depth-N cell squared:
/// q^{2(1-s)N}((q-1)/q)/(1 - q^{1-2s}).
pub fn knapp_stein_diagonal(params: &GroupParams, s: f64, depth: usize) -> f64 {
    let q = params.qf();
    q.powf(2.0 * (1.0 - s) * depth as f64) * ((q - 1.0) / q) / (1.0 - q.powf(1.0 - 2.0 * s))
}

/// Dense kernel of I_s on depth-N cells: q^{2(1-s)(u,v)} off the diagonal and
/// the exact cell average on it.
pub fn knapp_stein_matrix(params: &GroupParams, s: f64, depth: usize, caps: &ResourceCaps) -> Result<KnappSteinMatrix> {
    if !(s > 0.5 && s <= 1.0) {
        return Err(Error::Input(format!("Knapp–Stein kernel needs ½ < s ≤ 1, got {s}")));
    }
    let size = params.sphere_size(depth);
    if size > caps.max_dense_dim as u128 {
        return Err(Error::ResourceCap {
            what: "Knapp–Stein matrix dimension",
            needed: size,
            cap: caps.max_dense_dim as u128,
        });
    }
    let cells = cylinders(params, depth, caps)?;
    let n = cells.len();
    let q = params.qf();
    let by_cp: Vec<f64> = (0..depth).map(|c| q.powf(2.0 * (1.0 - s) * c as f64)).collect();
    let diag = knapp_stein_diagonal(params, s, depth);
    let entries = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag
        } else {
            by_cp[cells[i].prefix().common_prefix_len(cells[j].prefix())]
        }
    });
    Ok(KnappSteinMatrix {
        k: params.rank(),
        depth,
        s,
        entries,
        weights: vec![cylinder_mass(params, depth); n],
    })
}

/// Spectrum of the mass-weighted Knapp–Stein form.
pub fn knapp_stein_spectrum(ks: &KnappSteinMatrix) -> FormSpectrum {
    form_spectrum(&ks.weighted())
}

/// Σ_j K_ij ν_j, which is the same for every cell.
fn knapp_stein_row_mass(params: &GroupParams, s: f64, depth: usize) -> f64 {
    let q = params.qf();
    let mut total = q.powi(depth as i32);
    for c in 1..depth {
        total += (q - 1.0) * q.powi((depth - c - 1) as i32) * q.powf(2.0 * (1.0 - s) * c as f64);
    }
    (total + knapp_stein_diagonal(params, s, depth)) * cylinder_mass(params, depth)
}

/// c_s(m) = ∫ e^{-sδ b_ξ(g,e)} dν_PS(ξ) for |g| = m, bucketing ξ by its common
/// prefix length with g.
pub fn density_coefficient(params: &GroupParams, s: f64, m: usize) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let q = params.qf();
    let mf = m as f64;
    let mut total = q / (q + 1.0) * q.powf(-s * mf);
    for j in 1..m {
        total += (q - 1.0) / (q + 1.0) * q.powi(-(j as i32)) * q.powf(-s * (mf - 2.0 * j as f64));
    }
    total + q.powf(1.0 - mf) / (q + 1.0) * q.powf(s * mf)
}

#[derive(Debug, Clone, Serialize)]
pub struct HarishChandraValue {
    pub g: String,
    pub length: usize,
    pub c_s: f64,
    pub xi_s: f64,
}

/// c_s(g) from the prefix sum and Ξ_s(g) = Q_s(π_s(g)1, 1)/Q_s(1, 1) from
/// depth-N cells.
pub fn harish_chandra(params: &GroupParams, s: f64, g: &Word, depth: usize, caps: &ResourceCaps) -> Result<HarishChandraValue> {
    if !(s > 0.5 && s <= 1.0) {
        return Err(Error::Input(format!("Knapp–Stein pairing needs ½ < s ≤ 1, got {s}")));
    }
    if g.len() >= depth {
        return Err(Error::Precision(format!(
            "|g| = {} needs depth > |g|, have {depth}",
            g.len()
        )));
    }
    let delta = params.delta();
    let row = knapp_stein_row_mass(params, s, depth);
    let nu = cylinder_mass(params, depth);
    let mut pairs: Vec<f64> = Vec::new();
    for c in crate::group::enumerate_sphere(params, depth, caps)? {
        let b = g.len() as f64 - 2.0 * g.common_prefix_len(&c) as f64;
        pairs.push(nu * (-s * delta * b).exp() * row);
    }
    let q11 = row * 1.0;
    Ok(HarishChandraValue {
        g: params.format(g),
        length: g.len(),
        c_s: density_coefficient(params, s, g.len()),
        xi_s: pairwise_sum(&pairs) / q11,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Bracket {
    pub min: f64,
    pub max: f64,
    pub spread: f64,
    pub values: Vec<f64>,
}

impl Bracket {
    pub fn from_values(values: Vec<f64>) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            min,
            max,
            spread: max / min,
            values,
        }
    }
}

/// c_s(m) e^{(1-s)δm} for m = 0..=max_len.
pub fn harish_chandra_bracket(params: &GroupParams, s: f64, max_len: usize) -> Bracket {
    let delta = params.delta();
    Bracket::from_values(
        (0..=max_len)
            .map(|m| density_coefficient(params, s, m) * ((1.0 - s) * delta * m as f64).exp())
            .collect(),
    )
}

/// (c_s c_{s'})(m) e^{(1-t)δm} for m = 0..=max_len, where s + s' = 1 + t.
pub fn fusion_check(params: &GroupParams, s: f64, s2: f64, t: f64, max_len: usize) -> Result<Bracket> {
    let ok = |x: f64| x > 0.5 && x <= 1.0;
    if !(ok(s) && ok(s2) && ok(t)) {
        return Err(Error::Input(format!(
            "fusion needs ½ < s, s', t ≤ 1, got ({s}, {s2}, {t})"
        )));
    }
    if (s + s2 - 1.0 - t).abs() > 1e-12 {
        return Err(Error::Input(format!("fusion needs s + s' = 1 + t, got {s} + {s2} vs 1 + {t}")));
    }
    let delta = params.delta();
    Ok(Bracket::from_values(
        (0..=max_len)
            .map(|m| {
                density_coefficient(params, s, m)
                    * density_coefficient(params, s2, m)
                    * ((1.0 - t) * delta * m as f64).exp()
            })
            .collect(),
    ))
}

/// Exact m_s block m_s(C_u × C_v), normalized to total mass 1.
pub fn m_s_block(params: &GroupParams, s: f64, depth: usize, caps: &ResourceCaps) -> Result<DMatrix<f64>> {
    let ks = knapp_stein_matrix(params, s, depth, caps)?;
    let n = ks.dim();
    let raw = DMatrix::from_fn(n, n, |i, j| ks.weights[i] * ks.entries[(i, j)] * ks.weights[j]);
    let total = pairwise_sum(raw.as_slice());
    Ok(raw / total)
}

fn max_relative_deviation(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let total: f64 = b.iter().sum();
    a.iter()
        .zip(b.iter())
        .filter(|(_, y)| **y >= MASS_FLOOR * total && **y > 0.0)
        .map(|(x, y)| (x - y).abs() / y)
        .fold(0.0, f64::max)
}

/// Max relative deviation between the normalized block of m_n and the
/// normalized m_s block, on cells above the mass floor.
pub fn nat_comp_deviation(pm: &PairMeasure, s: f64, caps: &ResourceCaps) -> Result<f64> {
    let target = m_s_block(&pm.params, s, pm.depth, caps)?;
    Ok(max_relative_deviation(&pm.normalized_block(), &target))
}

#[derive(Debug, Clone, Serialize)]
pub struct MuTRow {
    pub t: f64,
    pub tv_mu: f64,
    pub mu_total: f64,
    pub pair_tv: f64,
    pub pair_max_rel_dev: f64,
    pub pair_symmetry_defect: f64,
    pub pair_total: f64,
}

/// μ_t(Ĉ_u) against ν_PS and the m_{s;t} block against m_s along a t schedule.
/// m_{s;t} = e^{2(1-s)δ(g,h)} μ_t ⊗ μ_t is the pair measure of
/// φ = e^{-(1-s)δ|g|} at σ = t/δ - 1 + s.
pub fn mu_t_convergence(
    params: &GroupParams,
    s: f64,
    ts: &[f64],
    depth: usize,
    opts: &PairMeasureOptions,
    caps: &ResourceCaps,
) -> Result<Vec<MuTRow>> {
    let delta = params.delta();
    let q = params.qf();
    let phi = PosDefOracle::haagerup_s(params, s)?;
    let target = m_s_block(params, s, depth, caps)?;
    let cells = cylinders(params, depth, caps)?;
    ts.iter()
        .map(|&t| {
            if !(t > delta) {
                return Err(Error::Input(format!("μ_t needs t > δ, got {t}")));
            }
            // Σ_m |C_m| e^{-tm} in closed form.
            let x = q * (-t).exp();
            let total = 1.0 + (q + 1.0) / q * x / (1.0 - x);
            let inner: f64 = (0..depth).map(|m| params.sphere_size_f64(m) * (-t * m as f64).exp()).sum();
            let per_cell = (total - inner) / total / cells.len() as f64;
            let nu = cylinder_mass(params, depth);
            let cell_tv: f64 = cells.iter().map(|_| (per_cell - nu).abs()).sum();
            let interior = inner / total;
            let tv_mu = 0.5 * (cell_tv + interior);
            let mu_total = interior + per_cell * cells.len() as f64;

            let sigma = t / delta - 1.0 + s;
            let pm = pair_measure(&phi, sigma, &SlowGrowthTheta::one(), depth, opts, caps)?;
            let block = &pm.boundary_block;
            let pair_tv = 0.5
                * (block
                    .iter()
                    .zip(target.iter())
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>()
                    + pm.interior_mass);
            let sym = (block - block.transpose()).amax();
            Ok(MuTRow {
                t,
                tv_mu,
                mu_total,
                pair_tv,
                pair_max_rel_dev: max_relative_deviation(&pm.normalized_block(), &target),
                pair_symmetry_defect: sym,
                pair_total: pm.interior_mass + pm.block_mass(),
            })
        })
        .collect()
}

/// m(1_O ⊗ 1_O)^{½} e^{δ_eff|γ|} for the shadow O = O(γ; r0).
pub fn upper_shadow_check(pm: &PairMeasure, gamma: &Word, r0: f64) -> Result<f64> {
    if gamma.is_empty() || gamma.len() >= pm.depth {
        return Err(Error::Precision(format!(
            "shadow of a word of length {} needs 1 ≤ |γ| < depth {}",
            gamma.len(),
            pm.depth
        )));
    }
    let o = shadow(&pm.params, gamma, r0)?;
    if o.len() != 1 {
        return Err(Error::Degenerate(format!(
            "shadow O({}, {r0}) is the whole boundary",
            pm.params.format(gamma)
        )));
    }
    let w = o[0].prefix();
    let mass = pm.cylinder_pair_mass(w, w);
    if !(mass > 0.0) {
        return Err(Error::Degenerate("shadow carries no mass".into()));
    }
    Ok(mass.sqrt() * (pm.delta_eff * gamma.len() as f64).exp())
}

/// Generalized Knapp–Stein relation in weak form: with
/// X(g)_ij = m(π_s(g)1_i ⊗ 1_j), the relation E π_s(g) = π_s^*(g) E reads
/// X(g) = X(g⁻¹)ᵀ. Returns max |X(g) - X(g⁻¹)ᵀ| / max |X(g)|.
pub fn knapp_stein_relation_defect(pm: &PairMeasure, g: &Word) -> Result<f64> {
    if 2 * g.len() >= pm.depth {
        return Err(Error::Precision(format!(
            "relation at |g| = {} needs depth > {}",
            g.len(),
            2 * g.len()
        )));
    }
    let s = pm.delta_eff;
    let n = pm.dim();
    let x = |h: &Word| -> DMatrix<f64> {
        let moved: Vec<(Word, f64)> = pm
            .cells
            .iter()
            .map(|c| {
                let img = h.mul(c.prefix());
                let b = h.len() as f64 - 2.0 * h.common_prefix_len(&img) as f64;
                (img, (-s * b).exp())
            })
            .collect();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .map(|j| moved[i].1 * pm.cylinder_pair_mass(&moved[i].0, pm.cells[j].prefix()))
                    .collect()
            })
            .collect();
        DMatrix::from_fn(n, n, |i, j| rows[i][j])
    };
    let xg = x(g);
    let xinv = x(&g.inverse());
    let scale = xg.amax();
    if scale == 0.0 {
        return Err(Error::Degenerate("relation matrix vanishes".into()));
    }
    Ok((&xg - xinv.transpose()).amax() / scale)
}

/// B_n(f) = m_n(f ⊗ f) for f on group elements, by direct summation over the
/// support; the normalization is the truncated P_{θ,2}.
pub fn group_form(
    phi: &PosDefOracle,
    sigma: f64,
    theta: &SlowGrowthTheta,
    m: usize,
    f: &crate::group::SparseGroupFunction,
) -> Result<f64> {
    let p = phi.params();
    let z = crate::poincare::double_series(phi, sigma, theta, m)?.partial;
    let w = |x: &Word| (theta.log_eval(x.len() as f64) - sigma * p.delta() * x.len() as f64).exp();
    let entries: Vec<(&Word, f64)> = f.iter().filter(|(x, _)| x.len() <= m).collect();
    let mut terms = Vec::with_capacity(entries.len() * entries.len());
    for (g, fg) in &entries {
        let ginv = g.inverse();
        for (h, fh) in &entries {
            terms.push(fg * fh * phi.eval(&ginv.mul(h)) * w(g) * w(h));
        }
    }
    Ok(pairwise_sum(&terms) / z)
}

/// μ_n(f) = Σ f(g) θ(|g|) e^{-σδ|g|} / P_θ(1; σ) at truncation m.
pub fn group_marginal(
    params: &GroupParams,
    sigma: f64,
    theta: &SlowGrowthTheta,
    m: usize,
    f: &crate::group::SparseGroupFunction,
) -> Result<f64> {
    let p = crate::poincare::poincare_series_theta(&PosDefOracle::trivial(params), sigma, theta, m)?.partial;
    let terms: Vec<f64> = f
        .iter()
        .filter(|(x, _)| x.len() <= m)
        .map(|(x, v)| v * (theta.log_eval(x.len() as f64) - sigma * params.delta() * x.len() as f64).exp())
        .collect();
    Ok(pairwise_sum(&terms) / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::SparseGroupFunction;
    use crate::poincare::double_series;

    fn p() -> GroupParams {
        GroupParams::f2()
    }

    fn caps() -> ResourceCaps {
        ResourceCaps::default()
    }

    fn build(phi: &PosDefOracle, sigma: f64, depth: usize) -> PairMeasure {
        pair_measure(phi, sigma, &SlowGrowthTheta::one(), depth, &PairMeasureOptions::default(), &caps()).unwrap()
    }

    #[test]
    fn normalization_matches_double_series() {
        for (phi, sigma) in [
            (PosDefOracle::trivial(&p()), 1.3),
            (PosDefOracle::haagerup(&p(), 0.4).unwrap(), 0.9),
            (PosDefOracle::harish_chandra(&p(), 0.7).unwrap(), 0.95),
            (PosDefOracle::dirac(&p()), 0.8),
        ] {
            let log_w: Vec<f64> = (0..=30).map(|a| -sigma * p().delta() * a as f64).collect();
            let form = phi.exp_sum_form().unwrap();
            let (al, ta): (Vec<f64>, Vec<f64>) = form.terms.iter().copied().unzip();
            let eng = RadialEngine::new(&p(), log_w, al, ta, form.atom);
            let ds = double_series(&phi, sigma, &SlowGrowthTheta::one(), 30).unwrap().partial;
            assert!((eng.z() - ds).abs() < 1e-10 * ds, "{}: {} vs {ds}", phi.name(), eng.z());
        }
    }

    #[test]
    fn radial_masses_match_enumeration() {
        let params = p();
        let phi = PosDefOracle::haagerup(&params, 0.5).unwrap();
        let sigma = 0.9;
        let m = 5;
        let log_w: Vec<f64> = (0..=m).map(|a| -sigma * params.delta() * a as f64).collect();
        let form = phi.exp_sum_form().unwrap();
        let (al, ta): (Vec<f64>, Vec<f64>) = form.terms.iter().copied().unzip();
        let eng = RadialEngine::new(&params, log_w.clone(), al, ta, form.atom);
        let ball = enumerate_ball(&params, m, &caps()).unwrap();
        let brute = |w1: &Word, w2: &Word| -> f64 {
            let mut t = 0.0;
            for g in ball.iter().filter(|g| w1.is_prefix_of(g)) {
                for h in ball.iter().filter(|h| w2.is_prefix_of(h)) {
                    t += phi.eval(&g.inverse().mul(h)) * (log_w[g.len()] + log_w[h.len()]).exp();
                }
            }
            t
        };
        for (a, b) in [("a", "a"), ("a", "b"), ("ab", "aB"), ("a", "abA"), ("abA", "a"), ("aa", "aab"), ("B", "B"), ("ab", "ba")] {
            let (w1, w2) = (params.parse(a).unwrap(), params.parse(b).unwrap());
            let exact = brute(&w1, &w2);
            let got = eng.pair_mass(&w1, &w2);
            assert!((got - exact).abs() < 1e-12 * exact.max(1e-300), "{a},{b}: {got} vs {exact}");
        }
    }

    #[test]
    fn enumerated_engine_agrees_with_radial_on_trivial_kernel() {
        let params = p();
        let table = PosDefOracle::haagerup(&params, 0.6).unwrap();
        let log_w = log_weights(&params, &SlowGrowthTheta::one(), 1.0, 4);
        let opts = PairMeasureOptions::default();
        let e = enumerate_engine(&table, 1.0, &SlowGrowthTheta::one(), 4, 2, &opts, &caps()).unwrap();
        let form = table.exp_sum_form().unwrap();
        let (al, ta): (Vec<f64>, Vec<f64>) = form.terms.iter().copied().unzip();
        let r = RadialEngine::new(&params, log_w, al, ta, form.atom);
        assert!((e.z - r.z()).abs() < 1e-12 * r.z());
        for (a, b) in [("a", "b"), ("ab", "ab"), ("a", "aB"), ("Ba", "b")] {
            let (w1, w2) = (params.parse(a).unwrap(), params.parse(b).unwrap());
            let x = r.pair_mass(&w1, &w2);
            assert!((e.pair_mass(&w1, &w2) - x).abs() < 1e-12 * x, "{a},{b}");
        }
    }

    #[test]
    fn trivial_oracle_factorizes() {
        let params = p();
        for sigma in sigma_schedule(1.0, 4) {
            let pm = build(&PosDefOracle::trivial(&params), sigma, 3);
            let nb = pm.normalized_block();
            let nu = cylinder_mass(&params, 3);
            for x in nb.iter() {
                assert!((x - nu * nu).abs() < 1e-12 * nu * nu);
            }
            let f1: Vec<f64> = (0..pm.dim()).map(|i| (i % 5) as f64).collect();
            let f2: Vec<f64> = (0..pm.dim()).map(|i| 1.0 + (i % 3) as f64).collect();
            let e1: f64 = f1.iter().sum::<f64>() * nu;
            let e2: f64 = f2.iter().sum::<f64>() * nu;
            assert!((boundary_form(&pm, &f1, &f2).unwrap() - e1 * e2).abs() < 1e-12);
        }
    }

    #[test]
    fn group_form_of_trivial_is_square_of_marginal() {
        let params = p();
        let phi = PosDefOracle::trivial(&params);
        let f = SparseGroupFunction::from_entries(
            [("a", 1.0), ("bA", -2.0), ("", 0.5), ("abb", 3.0)]
                .iter()
                .map(|(w, v)| (params.parse(w).unwrap(), *v)),
        );
        let theta = SlowGrowthTheta::one();
        let b = group_form(&phi, 1.2, &theta, 12, &f).unwrap();
        let mu = group_marginal(&params, 1.2, &theta, 12, &f).unwrap();
        assert!((b - mu * mu).abs() < 1e-12 * b.abs().max(1e-300));
    }

    #[test]
    fn tail_certificate_and_interior_mass() {
        let pm = build(&PosDefOracle::haagerup(&p(), 0.4).unwrap(), 0.75, 4);
        assert!(pm.tail_bound <= 1e-6 * pm.normalization);
        assert!(pm.interior_mass > 0.0 && pm.interior_mass < 1.0);
        let total = pm.interior_mass + pm.block_mass();
        assert!((total - 1.0).abs() < 1e-12);
        let err = pair_measure(&PosDefOracle::haagerup(&p(), 0.4).unwrap(), 0.6, &SlowGrowthTheta::one(), 4, &PairMeasureOptions::default(), &caps());
        assert!(matches!(err, Err(Error::Diverged(_))));
    }

    #[test]
    fn conformal_deviation_shrinks_along_schedule() {
        let params = p();
        let s = 0.75;
        let phi = PosDefOracle::haagerup_s(&params, s).unwrap();
        let g = params.parse("a").unwrap();
        let devs: Vec<f64> = sigma_schedule(s, 4)
            .into_iter()
            .map(|sig| conformal_check(&build(&phi, sig, 4), &g).unwrap().deviation)
            .collect();
        assert!(devs.windows(2).all(|w| w[1] < w[0]), "{devs:?}");
        assert!(devs[3] <= 0.25, "{devs:?}");
    }

    #[test]
    fn conditional_expectation_rows_and_symmetry() {
        let params = p();
        for phi in [
            PosDefOracle::haagerup_s(&params, 0.8).unwrap(),
            PosDefOracle::dirac(&params),
            PosDefOracle::trivial(&params),
        ] {
            let pm = build(&phi, 1.05, 3);
            let e = conditional_expectation(&pm).unwrap();
            assert!(e.max_row_sum_error() < 1e-12);
            assert!(e.max_symmetry_error() < 1e-14);
        }
    }

    #[test]
    fn cyclic_pair_measure_via_enumeration() {
        let params = p();
        let phi = PosDefOracle::cyclic(&params, &params.parse("a").unwrap()).unwrap();
        let opts = PairMeasureOptions {
            tail_frac: 1e-2,
            ..Default::default()
        };
        let pm = pair_measure(&phi, 0.9, &SlowGrowthTheta::one(), 2, &opts, &caps()).unwrap();
        assert!(!pm.is_radial());
        let e = conditional_expectation(&pm).unwrap();
        assert!(e.max_row_sum_error() < 1e-12);
        assert!(boundary_form_spectrum(&pm).relative_min > -1e-8);
    }

    #[test]
    fn knapp_stein_positive_and_rank_one_at_one() {
        let params = p();
        for s in [0.6, 0.75, 0.9] {
            let ks = knapp_stein_matrix(&params, s, 6, &caps()).unwrap();
            assert!(knapp_stein_spectrum(&ks).relative_min > -1e-8);
        }
        let one = knapp_stein_spectrum(&knapp_stein_matrix(&params, 1.0, 4, &caps()).unwrap());
        assert!(one.second_eigenvalue.abs() < 1e-12 * one.max_eigenvalue);
        assert!(knapp_stein_matrix(&params, 0.5, 3, &caps()).is_err());
    }

    #[test]
    fn knapp_stein_pairing_gives_density_coefficient() {
        let params = p();
        for s in [0.6, 0.75, 1.0] {
            for w in ["", "a", "ab", "aBa"] {
                let g = params.parse(w).unwrap();
                let hc = harish_chandra(&params, s, &g, 5, &caps()).unwrap();
                assert!((hc.xi_s - hc.c_s).abs() < 1e-12, "{s} {w}: {hc:?}");
                let closed = crate::posdef::hc_closed_form(&params, s, g.len());
                assert!((closed - hc.c_s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fusion_bracket_and_preconditions() {
        let params = p();
        let b = fusion_check(&params, 0.8, 0.9, 0.7, 12).unwrap();
        assert!(b.min > 0.0 && b.spread < 50.0);
        assert!(fusion_check(&params, 0.75, 0.75, 0.5, 12).is_err());
        assert!(fusion_check(&params, 0.8, 0.8, 0.7, 12).is_err());
        let hc = harish_chandra_bracket(&params, 0.75, 12);
        assert!(hc.min > 0.0 && hc.spread < 20.0);
    }

    #[test]
    fn mu_t_tends_to_patterson_sullivan() {
        let params = p();
        let d = params.delta();
        let ts: Vec<f64> = [0.5, 0.25, 0.125].iter().map(|e| d + e).collect();
        let rows = mu_t_convergence(&params, 0.8, &ts, 3, &PairMeasureOptions::default(), &caps()).unwrap();
        assert!(rows.windows(2).all(|w| w[1].tv_mu < w[0].tv_mu));
        assert!(rows.windows(2).all(|w| w[1].pair_tv < w[0].pair_tv));
        for r in &rows {
            assert!((r.mu_total - 1.0).abs() < 1e-12);
            assert!(r.pair_symmetry_defect < 1e-15);
        }
    }

    #[test]
    fn shadows_and_relation_defect() {
        let params = p();
        let pm = build(&PosDefOracle::haagerup_s(&params, 0.75).unwrap(), 0.8, 6);
        let ratios: Vec<f64> = (1..=5)
            .map(|n| upper_shadow_check(&pm, &params.parse(&"ab".repeat(3)[..n]).unwrap(), 0.5).unwrap())
            .collect();
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
        assert!(hi / lo < 20.0, "{ratios:?}");
        let whole = upper_shadow_check(&pm, &params.parse("ab").unwrap(), 3.0);
        assert!(matches!(whole, Err(Error::Degenerate(_))));
        let g = params.parse("a").unwrap();
        let phi = PosDefOracle::haagerup_s(&params, 0.75).unwrap();
        let defects: Vec<f64> = sigma_schedule(0.75, 4)
            .into_iter()
            .map(|sig| knapp_stein_relation_defect(&build(&phi, sig, 4), &g).unwrap())
            .collect();
        assert!(defects.windows(2).all(|w| w[1] < w[0]), "{defects:?}");
        assert!(defects[3] < 0.2, "{defects:?}");
    }
}
