//! Operator norms, representation norms, transfer inequalities, entropy,
//! boundary-norm bounds and rapid decay.
//!
//! ‖λ(f)‖ is estimated by the Haagerup power sequence
//! a_n = ‖(f*·f)^{*2n}‖₂^{1/4n} over dyadic n, which increases to the norm.
//! Lower bounds for ‖π_φ(f)‖ come from ((T^{2n}v, v)/‖v‖²)^{1/4n} with
//! T = π(f*·f) and v = π(h)1_φ for probe functions h.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::boundary::{density_rep_matrix, sphere_density_sum};
use crate::error::{Error, Result};
use crate::group::{enumerate_ball, GroupParams, RadialFunction, ResourceCaps, SparseGroupFunction, Word};
use crate::numeric::{fit_line, least_squares, pairwise_sum, signed_log_sum, symmetric_eigenvalues};
use crate::poincare::critical_exponent;
use crate::posdef::{coefficient_sum, OracleKind, PosDefOracle};
use crate::spherical::{ScaledCyclic, ScaledRadial};

const MONOTONE_SLACK: f64 = 1e-12;

/// A function on the group, radial or given pointwise.
#[derive(Debug, Clone)]
pub enum GroupFn {
    Radial(RadialFunction),
    Sparse(SparseGroupFunction),
}

impl GroupFn {
    pub fn radius(&self) -> usize {
        match self {
            GroupFn::Radial(f) => f.radius(),
            GroupFn::Sparse(f) => f.support_radius(),
        }
    }

    pub fn l1_norm(&self, params: &GroupParams) -> f64 {
        match self {
            GroupFn::Radial(f) => f.l1_norm(params),
            GroupFn::Sparse(f) => f.l1_norm(),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        match self {
            GroupFn::Radial(f) => f.is_nonnegative(),
            GroupFn::Sparse(f) => f.is_nonnegative(),
        }
    }

    pub fn sum(&self, params: &GroupParams) -> f64 {
        match self {
            GroupFn::Radial(f) => f
                .coeffs()
                .iter()
                .enumerate()
                .map(|(m, c)| c * params.sphere_size_f64(m))
                .sum(),
            GroupFn::Sparse(f) => f.sum(),
        }
    }

    pub fn to_sparse(&self, params: &GroupParams, caps: &ResourceCaps) -> Result<SparseGroupFunction> {
        match self {
            GroupFn::Radial(f) => f.embed(params, caps),
            GroupFn::Sparse(f) => Ok(f.clone()),
        }
    }

    /// Σ_m (m+1) ‖f|_{C_m}‖₂.
    pub fn rd_bound(&self, params: &GroupParams) -> f64 {
        match self {
            GroupFn::Radial(f) => f
                .coeffs()
                .iter()
                .enumerate()
                .map(|(m, c)| (m as f64 + 1.0) * c.abs() * params.sphere_size_f64(m).sqrt())
                .sum(),
            GroupFn::Sparse(f) => {
                let mut sq = vec![0.0; f.support_radius() + 1];
                for (w, v) in f.iter() {
                    sq[w.len()] += v * v;
                }
                sq.iter().enumerate().map(|(m, s)| (m as f64 + 1.0) * s.sqrt()).sum()
            }
        }
    }

    fn dirac_multiple(&self) -> Option<f64> {
        match self {
            GroupFn::Radial(f) if f.radius() == 0 => Some(f.coeffs()[0]),
            GroupFn::Sparse(f) => {
                let mut it = f.iter().filter(|(_, v)| *v != 0.0);
                match (it.next(), it.next()) {
                    (Some((w, v)), None) if w.is_identity() => Some(v),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    /// The radial profile, if the function is radial.
    fn as_radial(&self, params: &GroupParams) -> Option<RadialFunction> {
        match self {
            GroupFn::Radial(f) => Some(f.clone()),
            GroupFn::Sparse(f) => {
                let rad = f.radialize(params);
                let mut counts = vec![0u128; rad.radius() + 1];
                for (w, v) in f.iter() {
                    if v != rad.coeffs()[w.len()] {
                        return None;
                    }
                    counts[w.len()] += 1;
                }
                let full = counts
                    .iter()
                    .enumerate()
                    .all(|(m, c)| *c == params.sphere_size(m) || (*c == 0 && rad.coeffs()[m] == 0.0));
                full.then_some(rad)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralEstimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub uncertainty: f64,
    pub certified_upper: f64,
    pub method: String,
    pub iterations: usize,
    /// (n, a_n) for the dyadic n used.
    pub sequence: Vec<(usize, f64)>,
    pub monotone: bool,
}

impl SpectralEstimate {
    fn exact(value: f64, method: &str) -> Self {
        Self {
            value,
            lower: value,
            upper: value,
            uncertainty: 0.0,
            certified_upper: value,
            method: method.into(),
            iterations: 1,
            sequence: vec![(1, value)],
            monotone: true,
        }
    }

    fn from_sequence(sequence: Vec<(usize, f64)>, certified_upper: f64, method: String) -> Result<Self> {
        let Some(&(_, last)) = sequence.last() else {
            return Err(Error::Degenerate("empty power sequence".into()));
        };
        let uncertainty = if sequence.len() >= 2 {
            (last - sequence[sequence.len() - 2].1).max(0.0)
        } else {
            (certified_upper - last).max(0.0)
        };
        let monotone = sequence
            .windows(2)
            .all(|w| w[1].1 >= w[0].1 * (1.0 - MONOTONE_SLACK));
        let lower = last.min(certified_upper);
        Ok(Self {
            value: last,
            lower,
            upper: (last + uncertainty).min(certified_upper).max(lower),
            uncertainty,
            certified_upper,
            method,
            iterations: sequence.len(),
            sequence,
            monotone,
        })
    }
}

fn dyadic(n_max: usize) -> Result<Vec<usize>> {
    if n_max == 0 {
        return Err(Error::Input("n_max must be ≥ 1".into()));
    }
    let mut out = vec![];
    let mut n = 1;
    while n <= n_max {
        out.push(n);
        n *= 2;
    }
    Ok(out)
}

/// Haagerup power sequence for ‖λ(f)‖.
pub fn regular_norm(params: &GroupParams, f: &GroupFn, n_max: usize, caps: &ResourceCaps) -> Result<SpectralEstimate> {
    let ns = dyadic(n_max)?;
    let certified = f.l1_norm(params).min(f.rd_bound(params));
    if let Some(c) = f.dirac_multiple() {
        return Ok(SpectralEstimate::exact(c.abs(), "dirac"));
    }
    if let Some(rad) = f.as_radial(params) {
        let fs = ScaledRadial::from_radial(&rad, params);
        let big_f = fs.convolve(&fs, params);
        let mut h = big_f.convolve(&big_f, params);
        let mut seq = vec![(0, (big_f.log_l2_norm() / 2.0).exp())];
        for (i, &n) in ns.iter().enumerate() {
            if i > 0 {
                h = h.convolve(&h, params);
            }
            seq.push((n, (h.log_l2_norm() / (4 * n) as f64).exp()));
        }
        return SpectralEstimate::from_sequence(seq, certified, "haagerup-power/radial".into());
    }
    let sparse = f.to_sparse(params, caps)?;
    if let Some((_, c)) = ScaledCyclic::from_sparse(&sparse) {
        let big_f = c.adjoint().convolve(&c);
        let mut h = big_f.convolve(&big_f);
        let mut seq = vec![(0, (big_f.log_l2_norm() / 2.0).exp())];
        for (i, &n) in ns.iter().enumerate() {
            if i > 0 {
                h = h.convolve(&h);
            }
            seq.push((n, (h.log_l2_norm() / (4 * n) as f64).exp()));
        }
        return SpectralEstimate::from_sequence(seq, certified, "haagerup-power/cyclic".into());
    }
    let seq = sparse_power_sequence(&sparse, &ns, caps, |h| h.l2_norm().ln())?;
    SpectralEstimate::from_sequence(seq, certified, "haagerup-power/sparse".into())
}

/// Runs H = (f*·f)^{*2n} over dyadic n until the support cap is hit and
/// records exp(stat(H)/4n); n = 0 stands for f*·f itself with exponent ½.
fn sparse_power_sequence(
    f: &SparseGroupFunction,
    ns: &[usize],
    caps: &ResourceCaps,
    stat: impl Fn(&SparseGroupFunction) -> f64,
) -> Result<Vec<(usize, f64)>> {
    let big_f = f.adjoint().convolve(f, caps.max_support)?;
    let mut seq = vec![(0, (stat(&big_f) / 2.0).exp())];
    let mut h = match big_f.convolve(&big_f, caps.max_support) {
        Ok(h) => h,
        Err(Error::ResourceCap { .. }) => return Ok(seq),
        Err(e) => return Err(e),
    };
    for (i, &n) in ns.iter().enumerate() {
        if i > 0 {
            match h.convolve(&h, caps.max_support) {
                Ok(next) => h = next,
                Err(Error::ResourceCap { .. }) => break,
                Err(e) => return Err(e),
            }
        }
        seq.push((n, (stat(&h) / (4 * n) as f64).exp()));
    }
    Ok(seq)
}

/// {Dir_e} ∪ `count` seeded random ±1 functions on B_2.
pub fn default_probes(params: &GroupParams, count: usize, seed: u64, caps: &ResourceCaps) -> Result<Vec<SparseGroupFunction>> {
    let ball = enumerate_ball(params, 2, caps)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![SparseGroupFunction::dirac(Word::identity())];
    for _ in 0..count {
        out.push(SparseGroupFunction::from_entries(
            ball.iter()
                .map(|w| (w.clone(), if rng.gen::<bool>() { 1.0 } else { -1.0 })),
        ));
    }
    Ok(out)
}

/// Random nonnegative function on B_r: each element kept with probability ½
/// and given a uniform value in (0, 1].
pub fn random_positive_function(params: &GroupParams, r: usize, rng: &mut ChaCha8Rng, caps: &ResourceCaps) -> Result<SparseGroupFunction> {
    let ball = enumerate_ball(params, r, caps)?;
    loop {
        let f = SparseGroupFunction::from_entries(
            ball.iter()
                .filter_map(|w| rng.gen::<bool>().then(|| (w.clone(), 1.0 - rng.gen::<f64>()))),
        );
        if f.len() > 0 {
            return Ok(f);
        }
    }
}

/// (sign, log|Σ_{|g|=m} φ(g)|).
fn signed_sphere_sum(phi: &PosDefOracle, m: usize) -> (f64, f64) {
    match phi.kind() {
        OracleKind::Table(t) => {
            let s: f64 = t.values().iter().filter(|(w, _)| w.len() == m).map(|(_, v)| *v).sum();
            if s == 0.0 {
                (0.0, f64::NEG_INFINITY)
            } else {
                (s.signum(), s.abs().ln())
            }
        }
        _ => {
            let l = phi.log_sphere_sum(m);
            if l == f64::NEG_INFINITY {
                (0.0, l)
            } else {
                (1.0, l)
            }
        }
    }
}

fn log_phi_on_word(phi: &PosDefOracle, w: &Word) -> (f64, f64) {
    if let Some(l) = phi.log_radial_value(w.len()) {
        if l.is_finite() {
            return (1.0, l);
        }
    }
    let v = phi.eval(w);
    if v == 0.0 {
        (0.0, f64::NEG_INFINITY)
    } else {
        (v.signum(), v.abs().ln())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeResult {
    pub probe: usize,
    pub best: f64,
    pub sequence: Vec<(usize, f64)>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RepNormReport {
    pub estimate: SpectralEstimate,
    pub probes: Vec<ProbeResult>,
}

/// Certified lower bound for ‖π_φ(f)‖ from probe coefficient sums.
pub fn rep_norm_lower(
    phi: &PosDefOracle,
    f: &GroupFn,
    n_max: usize,
    probes: &[SparseGroupFunction],
    caps: &ResourceCaps,
) -> Result<RepNormReport> {
    let params = phi.params();
    let ns = dyadic(n_max)?;
    let l1 = f.l1_norm(params);
    if matches!(phi.kind(), OracleKind::Trivial) && f.is_nonnegative() {
        return Ok(RepNormReport {
            estimate: SpectralEstimate::exact(f.sum(params), "exact/trivial"),
            probes: vec![],
        });
    }
    if probes.is_empty() {
        return Err(Error::Input("probe set is empty".into()));
    }
    let mut results = vec![];
    for (i, h) in probes.iter().enumerate() {
        let is_e = GroupFn::Sparse(h.clone()).dirac_multiple().is_some();
        let seq = if is_e {
            dirac_probe_sequence(phi, f, &ns, caps)
        } else {
            general_probe_sequence(phi, f, h, &ns, caps)
        };
        results.push(match seq {
            Ok(seq) => ProbeResult {
                probe: i,
                best: seq.iter().map(|p| p.1).fold(0.0, f64::max),
                sequence: seq,
                skipped: None,
            },
            Err(Error::ResourceCap { what, .. }) => ProbeResult {
                probe: i,
                best: 0.0,
                sequence: vec![],
                skipped: Some(format!("cap: {what}")),
            },
            Err(e) => return Err(e),
        });
    }
    let best = results
        .iter()
        .filter(|r| !r.sequence.is_empty())
        .max_by(|a, b| a.best.total_cmp(&b.best))
        .ok_or_else(|| Error::Degenerate("no probe produced a value".into()))?;
    // Each a_n is a certified lower bound; report the best one.
    let mut seq = best.sequence.clone();
    let mut running = 0.0f64;
    for p in seq.iter_mut() {
        running = running.max(p.1);
        p.1 = running;
    }
    let mut est = SpectralEstimate::from_sequence(seq, l1, format!("probe-{}", best.probe))?;
    est.monotone = best.sequence.windows(2).all(|w| w[1].1 >= w[0].1 * (1.0 - MONOTONE_SLACK));
    Ok(RepNormReport {
        estimate: est,
        probes: results,
    })
}

fn dirac_probe_sequence(phi: &PosDefOracle, f: &GroupFn, ns: &[usize], caps: &ResourceCaps) -> Result<Vec<(usize, f64)>> {
    let params = phi.params();
    if let Some(rad) = f.as_radial(params) {
        let fs = ScaledRadial::from_radial(&rad, params);
        let big_f = fs.convolve(&fs, params);
        let mut sums: Vec<(f64, f64)> = vec![];
        let mut pair = |h: &ScaledRadial| -> Option<f64> {
            while sums.len() <= h.radius() {
                sums.push(signed_sphere_sum(phi, sums.len()));
            }
            let terms: Vec<(f64, f64)> = h
                .amps()
                .iter()
                .enumerate()
                .filter(|(m, a)| **a != 0.0 && sums[*m].0 != 0.0)
                .map(|(m, a)| (a.signum() * sums[m].0, a.abs().ln() - 0.5 * params.log_sphere_size(m) + sums[m].1))
                .collect();
            let (sign, l) = signed_log_sum(&terms);
            (sign > 0.0).then_some(l + h.log_scale())
        };
        let mut seq = vec![];
        if let Some(l) = pair(&big_f) {
            seq.push((0, (l / 2.0).exp()));
        }
        let mut h = big_f.convolve(&big_f, params);
        for (i, &n) in ns.iter().enumerate() {
            if i > 0 {
                h = h.convolve(&h, params);
            }
            if let Some(l) = pair(&h) {
                seq.push((n, (l / (4 * n) as f64).exp()));
            }
        }
        return Ok(seq);
    }
    let sparse = f.to_sparse(params, caps)?;
    if let Some((gen, c)) = ScaledCyclic::from_sparse(&sparse) {
        let pair = |h: &ScaledCyclic| -> Option<f64> {
            let (lo, hi) = h.exponent_range();
            let terms: Vec<(f64, f64)> = (lo..=hi)
                .filter_map(|k| {
                    let (s, l) = h.log_value_at(k);
                    if s == 0.0 {
                        return None;
                    }
                    let (ps, pl) = log_phi_on_word(phi, &ScaledCyclic::word_at(gen, k));
                    (ps != 0.0).then_some((s * ps, l + pl))
                })
                .collect();
            let (sign, l) = signed_log_sum(&terms);
            (sign > 0.0).then_some(l)
        };
        let big_f = c.adjoint().convolve(&c);
        let mut seq = vec![];
        if let Some(l) = pair(&big_f) {
            seq.push((0, (l / 2.0).exp()));
        }
        let mut h = big_f.convolve(&big_f);
        for (i, &n) in ns.iter().enumerate() {
            if i > 0 {
                h = h.convolve(&h);
            }
            if let Some(l) = pair(&h) {
                seq.push((n, (l / (4 * n) as f64).exp()));
            }
        }
        return Ok(seq);
    }
    general_probe_sequence(phi, f, &SparseGroupFunction::dirac(Word::identity()), ns, caps)
}

fn general_probe_sequence(
    phi: &PosDefOracle,
    f: &GroupFn,
    h: &SparseGroupFunction,
    ns: &[usize],
    caps: &ResourceCaps,
) -> Result<Vec<(usize, f64)>> {
    let params = phi.params();
    let sparse = f.to_sparse(params, caps)?;
    let identity = GroupFn::Sparse(h.clone()).dirac_multiple().is_some();
    let hstar = h.adjoint();
    let norm = coefficient_sum(phi, &hstar.convolve(h, caps.max_support)?);
    if !(norm > 0.0) {
        return Err(Error::Degenerate("probe has zero norm in the representation".into()));
    }
    // (π(G)v, v)/‖v‖² for v = π(h)1_φ.
    let pairing = |g: &SparseGroupFunction| -> Result<Option<f64>> {
        let c = if identity {
            coefficient_sum(phi, g) * h.iter().next().map(|(_, v)| v * v).unwrap_or(1.0)
        } else {
            match hstar.convolve(g, caps.max_support).and_then(|x| x.convolve(h, caps.max_support)) {
                Ok(x) => coefficient_sum(phi, &x),
                Err(Error::ResourceCap { .. }) => return Ok(None),
                Err(e) => return Err(e),
            }
        };
        Ok(Some(c / norm))
    };
    let big_f = sparse.adjoint().convolve(&sparse, caps.max_support)?;
    let mut seq = vec![];
    match pairing(&big_f)? {
        Some(c) if c > 0.0 => seq.push((0, c.sqrt())),
        _ => {}
    }
    let mut pw: Option<SparseGroupFunction> = None;
    for &n in ns {
        let next = match &pw {
            None => big_f.convolve(&big_f, caps.max_support),
            Some(p) => p.convolve(p, caps.max_support),
        };
        match next {
            Ok(x) => pw = Some(x),
            Err(Error::ResourceCap { .. }) => break,
            Err(e) => return Err(e),
        }
        match pairing(pw.as_ref().unwrap())? {
            Some(c) if c > 0.0 => seq.push((n, c.powf(1.0 / (4 * n) as f64))),
            Some(_) => {}
            None => break,
        }
    }
    if seq.is_empty() {
        return Err(Error::ResourceCap {
            what: "probe power support",
            needed: 0,
            cap: caps.max_support as u128,
        });
    }
    Ok(seq)
}

/// δ[π] in absolute units, with its source.
pub fn absolute_exponent(phi: &PosDefOracle) -> Result<(f64, &'static str)> {
    let delta = phi.params().delta();
    match phi.declared_exponent() {
        Some(s) => Ok((s * delta, "declared")),
        None => Ok((critical_exponent(phi, (4, 12))?.s_hat * delta, "estimated")),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TransferReport {
    pub phi: String,
    pub support_radius: usize,
    pub exponent_factor: f64,
    pub rep_lower: f64,
    pub regular_upper: f64,
    pub bound: f64,
    pub uncertainty: f64,
    pub margin: f64,
    pub holds: bool,
}

fn transfer_report(
    phi: &PosDefOracle,
    f: &GroupFn,
    exponent_factor: f64,
    n_max: usize,
    probes: &[SparseGroupFunction],
    caps: &ResourceCaps,
) -> Result<TransferReport> {
    let lower = rep_norm_lower(phi, f, n_max, probes, caps)?.estimate;
    let reg = regular_norm(phi.params(), f, n_max, caps)?;
    Ok(compare_transfer(phi.name(), f.radius(), exponent_factor, &lower, &reg))
}

fn compare_transfer(
    name: &str,
    r: usize,
    exponent_factor: f64,
    lower: &SpectralEstimate,
    reg: &SpectralEstimate,
) -> TransferReport {
    let factor = (exponent_factor * r as f64).exp();
    let bound = factor * reg.upper;
    let uncertainty = factor * reg.uncertainty + lower.uncertainty + 1e-12 * bound;
    let margin = bound + uncertainty - lower.lower;
    TransferReport {
        phi: name.to_string(),
        support_radius: r,
        exponent_factor,
        rep_lower: lower.lower,
        regular_upper: reg.upper,
        bound,
        uncertainty,
        margin,
        holds: margin >= 0.0,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FuzzCase {
    pub index: usize,
    pub support: usize,
    pub radius: usize,
    pub regular: f64,
    pub reports: Vec<TransferReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FuzzReport {
    pub cases: Vec<FuzzCase>,
    pub checks: usize,
    pub violations: usize,
    pub min_margin: f64,
}

/// Seeded random nonnegative f on B_radius against each oracle, with the
/// cyclic-vector probe and powers up to (f*·f)^{*2}; the powers are shared
/// between the regular and the representation side.
pub fn transfer_fuzz(
    params: &GroupParams,
    oracles: &[PosDefOracle],
    count: usize,
    radius: usize,
    seed: u64,
    caps: &ResourceCaps,
) -> Result<FuzzReport> {
    use rayon::prelude::*;
    let exps: Vec<f64> = oracles
        .iter()
        .map(|o| absolute_exponent(o).map(|(d, _)| 0.5 * d))
        .collect::<Result<_>>()?;
    let cases: Vec<FuzzCase> = (0..count)
        .into_par_iter()
        .map(|i| -> Result<FuzzCase> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let f = random_positive_function(params, radius, &mut rng, caps)?;
            let gf = GroupFn::Sparse(f.clone());
            let certified = gf.l1_norm(params).min(gf.rd_bound(params));
            let big_f = f.adjoint().convolve(&f, caps.max_support)?;
            let sq = big_f.convolve(&big_f, caps.max_support)?;
            let reg = SpectralEstimate::from_sequence(
                vec![(0, big_f.l2_norm().sqrt()), (1, sq.l2_norm().powf(0.25))],
                certified,
                "haagerup-power/sparse".into(),
            )?;
            let reports = oracles
                .iter()
                .zip(&exps)
                .map(|(phi, e)| {
                    let e0 = phi.eval(&Word::identity());
                    let mut seq = vec![];
                    let c0 = coefficient_sum(phi, &big_f) / e0;
                    if c0 > 0.0 {
                        seq.push((0, c0.sqrt()));
                    }
                    let c1 = coefficient_sum(phi, &sq) / e0;
                    if c1 > 0.0 {
                        seq.push((1, c1.powf(0.25)));
                    }
                    let mut running = 0.0f64;
                    for p in seq.iter_mut() {
                        running = running.max(p.1);
                        p.1 = running;
                    }
                    let lower = SpectralEstimate::from_sequence(seq, gf.l1_norm(params), "probe-0".into())?;
                    Ok(compare_transfer(phi.name(), gf.radius(), *e, &lower, &reg))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(FuzzCase {
                index: i,
                support: f.len(),
                radius: gf.radius(),
                regular: reg.value,
                reports,
            })
        })
        .collect::<Result<_>>()?;
    let checks = cases.iter().map(|c| c.reports.len()).sum();
    let violations = cases.iter().flat_map(|c| &c.reports).filter(|r| !r.holds).count();
    let min_margin = cases
        .iter()
        .flat_map(|c| &c.reports)
        .map(|r| r.margin)
        .fold(f64::INFINITY, f64::min);
    Ok(FuzzReport {
        cases,
        checks,
        violations,
        min_margin,
    })
}

/// ‖π(f)‖ ≤ e^{δ[π] r(f)/2} ‖λ(f)‖ with estimators on both sides.
pub fn transfer_bound_check(
    phi: &PosDefOracle,
    f: &GroupFn,
    n_max: usize,
    probes: &[SparseGroupFunction],
    caps: &ResourceCaps,
) -> Result<TransferReport> {
    let (d, _) = absolute_exponent(phi)?;
    transfer_report(phi, f, 0.5 * d, n_max, probes, caps)
}

#[derive(Debug, Clone, Serialize)]
pub struct LpTransferReport {
    pub p: f64,
    pub report: TransferReport,
    /// The exponent factor of the ℓ^p bound against the δ[π]/2 one.
    pub lp_factor: f64,
    pub exponent_factor: f64,
}

/// ‖π(f)‖ ≤ e^{((p-2)/2p) δ r(f)} ‖λ(f)‖ for φ in ℓ^{p+ε}.
pub fn lp_transfer_check(
    phi: &PosDefOracle,
    f: &GroupFn,
    p: Option<f64>,
    n_max: usize,
    probes: &[SparseGroupFunction],
    caps: &ResourceCaps,
) -> Result<LpTransferReport> {
    let declared = phi
        .integrability_p()
        .ok_or_else(|| Error::Input(format!("{} has no declared integrability", phi.name())))?;
    let p = p.unwrap_or(declared);
    if p < declared || p < 2.0 {
        return Err(Error::Input(format!(
            "{} is only known to lie in ℓ^{{{declared}+ε}}, got p = {p}",
            phi.name()
        )));
    }
    let delta = phi.params().delta();
    let lp_factor = (p - 2.0) / (2.0 * p) * delta;
    let (d, _) = absolute_exponent(phi)?;
    Ok(LpTransferReport {
        p,
        report: transfer_report(phi, f, lp_factor, n_max, probes, caps)?,
        lp_factor,
        exponent_factor: 0.5 * d,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyRow {
    pub r: usize,
    pub log_upper: f64,
    pub log_lower: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyReport {
    pub phi: String,
    pub rows: Vec<EntropyRow>,
    pub h_lower: f64,
    pub h_upper: f64,
    pub formula: f64,
    pub exact: bool,
}

impl EntropyReport {
    pub fn contains_formula(&self, rel_tol: f64) -> bool {
        self.formula >= self.h_lower * (1.0 - rel_tol) - 1e-15 && self.formula <= self.h_upper * (1.0 + rel_tol) + 1e-15
    }
}

/// Slope of log y ≈ a + b r + c log(r+1), returned as -b.
pub fn entropy_slope(rs: &[usize], logs: &[f64]) -> f64 {
    if logs.iter().all(|l| *l == 0.0) {
        return 0.0;
    }
    let design: Vec<Vec<f64>> = rs
        .iter()
        .map(|&r| vec![1.0, r as f64, (r as f64 + 1.0).ln()])
        .collect();
    -least_squares(&design, logs)[1]
}

/// Bracket for h(π) = -limsup (1/r) log ‖π(Avr_r)‖ against δ - max(δ[π], δ/2).
/// The lower edge comes from e^{δ[π]r/2}‖λ(Avr_r)‖, the upper edge from
/// rep_norm_lower with the cyclic vector.
pub fn entropy_estimate(
    phi: &PosDefOracle,
    r_range: (usize, usize),
    n_max: usize,
    caps: &ResourceCaps,
) -> Result<EntropyReport> {
    let params = phi.params();
    let (lo, hi) = r_range;
    if lo == 0 || hi < lo + 2 {
        return Err(Error::Input(format!("entropy range needs 1 ≤ lo and hi ≥ lo + 2, got {lo}..{hi}")));
    }
    let delta = params.delta();
    let (d, _) = absolute_exponent(phi)?;
    let formula = delta - d.max(0.5 * delta);
    let probes = vec![SparseGroupFunction::dirac(Word::identity())];
    let mut rows = vec![];
    let trivial = matches!(phi.kind(), OracleKind::Trivial);
    for r in lo..=hi {
        if trivial {
            // Avr_r acts as the identity on the trivial representation.
            rows.push(EntropyRow {
                r,
                log_upper: 0.0,
                log_lower: 0.0,
            });
            continue;
        }
        let f = GroupFn::Radial(RadialFunction::ball_average(params, r));
        let lower = rep_norm_lower(phi, &f, n_max, &probes, caps)?.estimate;
        let reg = regular_norm(params, &f, n_max, caps)?;
        let upper = ((0.5 * d * r as f64).exp() * reg.upper).min(1.0);
        rows.push(EntropyRow {
            r,
            log_upper: upper.ln(),
            log_lower: lower.lower.ln(),
        });
    }
    let rs: Vec<usize> = rows.iter().map(|x| x.r).collect();
    let a = entropy_slope(&rs, &rows.iter().map(|x| x.log_upper).collect::<Vec<_>>());
    let b = entropy_slope(&rs, &rows.iter().map(|x| x.log_lower).collect::<Vec<_>>());
    let exact = rows.iter().all(|x| x.log_upper == 0.0 && x.log_lower == 0.0);
    Ok(EntropyReport {
        phi: phi.name().to_string(),
        rows,
        h_lower: a.min(b),
        h_upper: a.max(b),
        formula,
        exact,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryNormReport {
    pub s: f64,
    pub depth: usize,
    pub sup_norm: f64,
    pub eigen_norm: Option<f64>,
    pub within: Option<bool>,
}

/// sup_ξ (π_s(f)1)(ξ), exact on depth-N cells.
pub fn boundary_sup_norm(params: &GroupParams, s: f64, f: &GroupFn, caps: &ResourceCaps) -> Result<f64> {
    let delta = params.delta();
    match f {
        GroupFn::Radial(rad) => Ok(rad
            .coeffs()
            .iter()
            .enumerate()
            .map(|(m, c)| c * sphere_density_sum(params, m, s))
            .sum()),
        GroupFn::Sparse(sp) => {
            let depth = sp.support_radius() + 1;
            let cells = crate::boundary::cylinders(params, depth, caps)?;
            Ok(cells
                .iter()
                .map(|c| {
                    let terms: Vec<f64> = sp
                        .iter()
                        .map(|(g, v)| {
                            let b = g.len() as f64 - 2.0 * g.common_prefix_len(c.prefix()) as f64;
                            v * (-s * delta * b).exp()
                        })
                        .collect();
                    pairwise_sum(&terms)
                })
                .fold(f64::NEG_INFINITY, f64::max))
        }
    }
}

/// Sup-norm of π_s(f)1 and, given a PSD form B on depth-N cells, the norm of
/// the cell matrix of π_s(f) in the seminorm u ↦ (uᵀBu)^{1/2}.
pub fn boundary_norm_bound(
    params: &GroupParams,
    s: f64,
    f: &GroupFn,
    depth: usize,
    form: Option<&DMatrix<f64>>,
    caps: &ResourceCaps,
) -> Result<BoundaryNormReport> {
    if !f.is_nonnegative() {
        return Err(Error::Input("boundary norm bound needs f ≥ 0".into()));
    }
    let sparse_for_sym = f.to_sparse(params, caps)?;
    let adj = sparse_for_sym.adjoint();
    if sparse_for_sym.iter().any(|(w, v)| (adj.get(w) - v).abs() > 1e-15 * v.abs().max(1.0)) {
        return Err(Error::Input("boundary norm bound needs a symmetric f".into()));
    }
    if f.radius() >= depth {
        return Err(Error::Precision(format!("r(f) = {} needs depth > r(f), got {depth}", f.radius())));
    }
    let sup_norm = boundary_sup_norm(params, s, f, caps)?;
    let eigen_norm = match form {
        None => None,
        Some(b) => Some(form_norm(&density_rep_matrix(params, &sparse_for_sym, s, depth, caps)?.to_dense(), b)?),
    };
    Ok(BoundaryNormReport {
        s,
        depth,
        sup_norm,
        eigen_norm,
        within: eigen_norm.map(|e| e <= sup_norm * (1.0 + 1e-9)),
    })
}

/// sup (TuᵀB Tu / uᵀBu)^{1/2} over u outside the kernel of B.
pub fn form_norm(t: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let n = b.nrows();
    if t.nrows() != n || t.ncols() != n {
        return Err(Error::Input(format!("form of size {n} vs operator {}×{}", t.nrows(), t.ncols())));
    }
    let sym = (b + b.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigen();
    let scale = sym.trace().abs() / n as f64;
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-8 * scale {
        return Err(Error::Validation(format!("boundary form is not PSD: min eigenvalue {min:e}")));
    }
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 1e-12 * top).collect();
    let k = keep.len();
    let half_inv = DMatrix::from_fn(n, k, |i, j| {
        let c = keep[j];
        eig.eigenvectors[(i, c)] / eig.eigenvalues[c].sqrt()
    });
    let m = half_inv.transpose() * t.transpose() * &sym * t * &half_inv;
    let ev = symmetric_eigenvalues((&m + m.transpose()) * 0.5);
    Ok(ev[k - 1].max(0.0).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct RrdRow {
    pub r: usize,
    pub norm: f64,
    pub l2: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RrdReport {
    pub rows: Vec<RrdRow>,
    pub c: f64,
    pub c_global: f64,
    pub m: f64,
    pub r_squared: f64,
    pub holds: bool,
}

impl RrdReport {
    /// ‖λ(f)‖ ≤ C' r^m ‖f‖₂ with m from the fit and C' the smallest constant
    /// covering the whole family, r = max(radius, 1).
    pub fn bounds(&self, params: &GroupParams, f: &RadialFunction, n_max: usize, caps: &ResourceCaps) -> Result<bool> {
        let norm = regular_norm(params, &GroupFn::Radial(f.clone()), n_max, caps)?;
        let r = f.radius().max(1) as f64;
        Ok(norm.lower <= self.c_global * r.powf(self.m) * f.l2_norm(params))
    }
}

/// Fits ‖λ(f_r)‖/‖f_r‖₂ ≈ C r^m over a radial family.
pub fn rrd_check(
    params: &GroupParams,
    family: &[(usize, RadialFunction)],
    n_max: usize,
    r2_threshold: f64,
    caps: &ResourceCaps,
) -> Result<RrdReport> {
    if family.len() < 2 {
        return Err(Error::Input("rapid decay fit needs at least two members".into()));
    }
    let mut rows = vec![];
    for (r, f) in family {
        let norm = regular_norm(params, &GroupFn::Radial(f.clone()), n_max, caps)?.value;
        let l2 = f.l2_norm(params);
        rows.push(RrdRow {
            r: *r,
            norm,
            l2,
            ratio: norm / l2,
        });
    }
    let x: Vec<f64> = rows.iter().map(|row| (row.r.max(1) as f64).ln()).collect();
    let y: Vec<f64> = rows.iter().map(|row| row.ratio.ln()).collect();
    let fit = fit_line(&x, &y);
    let c_global = rows
        .iter()
        .map(|row| row.ratio / (row.r.max(1) as f64).powf(fit.slope))
        .fold(0.0, f64::max);
    Ok(RrdReport {
        c: fit.intercept.exp(),
        c_global,
        m: fit.slope,
        r_squared: fit.r_squared,
        holds: fit.slope <= 3.0 && fit.r_squared >= r2_threshold,
        rows,
    })
}
