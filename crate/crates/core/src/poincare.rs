//! Weighted Poincaré series Σ θ(|g|) e^{-σδ|g|} φ(g), exponent regression,
//! Patterson's slow-growth weight θ and the double series P_{θ,2}.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::GroupParams;
use crate::numeric::{fit_line, log_sum_exp, pairwise_sum};
use crate::posdef::PosDefOracle;

/// Partial sum, a certified bound on what is left, and the divergence verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesValue {
    pub partial: f64,
    pub tail_bound: f64,
    pub truncation_m: usize,
    pub diverged: bool,
    pub envelope_declared: bool,
}

impl SeriesValue {
    pub fn upper(&self) -> f64 {
        self.partial + self.tail_bound
    }
}

const DIVERGENCE_CEILING: f64 = 1e12;
const RATIO_RUN: usize = 5;

/// Non-decreasing, piecewise log-linear θ ≥ 1, constant after the last
/// breakpoint. On (t_{n-1}, t_n] it grows like e^{ε_n δ (t - t_{n-1})}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlowGrowthTheta {
    pub delta: f64,
    pub breakpoints: Vec<f64>,
    pub rates: Vec<f64>,
    pub log_values: Vec<f64>,
    pub stage_sums: Vec<f64>,
}

impl SlowGrowthTheta {
    pub fn one() -> Self {
        Self {
            delta: 1.0,
            breakpoints: vec![0.0],
            rates: vec![],
            log_values: vec![0.0],
            stage_sums: vec![],
        }
    }

    pub fn is_constant(&self) -> bool {
        self.log_values.iter().all(|v| *v == 0.0)
    }

    pub fn log_eval(&self, t: f64) -> f64 {
        let b = &self.breakpoints;
        if t <= b[0] {
            return self.log_values[0];
        }
        match b.iter().position(|&x| t <= x) {
            Some(i) => self.log_values[i - 1] + self.rates[i - 1] * self.delta * (t - b[i - 1]),
            None => *self.log_values.last().unwrap(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.log_eval(t).exp()
    }

    pub fn log_max(&self) -> f64 {
        self.log_values.iter().copied().fold(0.0, f64::max)
    }

    /// Checks θ(u+t) ≤ e^{εu} θ(t) on an integer grid of t ≥ T, u ≥ 0, where
    /// T is the first breakpoint after which every segment grows slower than ε.
    pub fn slow_growth_audit(&self, eps: f64, span: usize) -> SlowGrowthAudit {
        let mut threshold = self.breakpoints[0];
        for (i, r) in self.rates.iter().enumerate() {
            if r * self.delta > eps {
                threshold = self.breakpoints[i + 1];
            }
        }
        let t0 = threshold.ceil() as usize;
        let mut samples = 0;
        let mut violations = 0;
        let mut monotone = true;
        for t in t0..=t0 + span {
            let lt = self.log_eval(t as f64);
            for u in 0..=span {
                let lu = self.log_eval((t + u) as f64);
                samples += 1;
                if lu > eps * u as f64 + lt + 1e-12 {
                    violations += 1;
                }
                if lu + 1e-12 < lt {
                    monotone = false;
                }
            }
        }
        SlowGrowthAudit {
            eps,
            threshold_t: threshold,
            samples,
            violations,
            non_decreasing: monotone && self.log_values.windows(2).all(|w| w[1] >= w[0]),
            at_least_one: self.log_values.iter().all(|v| *v >= 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlowGrowthAudit {
    pub eps: f64,
    pub threshold_t: f64,
    pub samples: usize,
    pub violations: usize,
    pub non_decreasing: bool,
    pub at_least_one: bool,
}

/// P_θ(φ; σ) truncated at |g| ≤ m_max.
pub fn poincare_series(phi: &PosDefOracle, sigma: f64, m_max: usize) -> Result<SeriesValue> {
    poincare_series_theta(phi, sigma, &SlowGrowthTheta::one(), m_max)
}

pub fn poincare_series_theta(
    phi: &PosDefOracle,
    sigma: f64,
    theta: &SlowGrowthTheta,
    m_max: usize,
) -> Result<SeriesValue> {
    let p = phi.params();
    let delta = p.delta();
    if !(sigma > 0.0) {
        return Err(Error::Input(format!("σ must be positive, got {sigma}")));
    }
    let log_terms: Vec<f64> = (0..=m_max)
        .into_par_iter()
        .map(|m| theta.log_eval(m as f64) - sigma * delta * m as f64 + phi.log_sphere_sum(m))
        .collect();
    // Ascending order keeps partial sums monotone in m_max.
    let partial: f64 = log_terms.iter().map(|l| l.exp()).sum();

    let mut run = 0;
    let mut ratio_flag = false;
    let mut prev = f64::NEG_INFINITY;
    for &l in &log_terms {
        if l == f64::NEG_INFINITY {
            continue;
        }
        if prev > f64::NEG_INFINITY && l >= prev {
            run += 1;
            if run >= RATIO_RUN {
                ratio_flag = true;
            }
        } else {
            run = 0;
        }
        prev = l;
    }
    let declared_flag = phi
        .declared_exponent()
        .is_some_and(|s| phi.envelope().support.is_none() && sigma <= s);
    let diverged = declared_flag || ratio_flag || partial > DIVERGENCE_CEILING;

    let env = phi.sphere_envelope();
    let tail_bound = if diverged {
        f64::INFINITY
    } else if env.support.is_some_and(|r| r <= m_max) {
        0.0
    } else {
        let x = (env.rate - sigma * delta).exp();
        if x >= 1.0 {
            f64::INFINITY
        } else {
            (theta.log_max() + env.amp.ln() + (m_max + 1) as f64 * (env.rate - sigma * delta)).exp()
                / (1.0 - x)
        }
    };
    Ok(SeriesValue {
        partial,
        tail_bound,
        truncation_m: m_max,
        diverged,
        envelope_declared: phi.envelope_declared(),
    })
}

/// Slope of log Σ_{C_m} φ against mδ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentEstimate {
    pub s_hat: f64,
    pub stderr: f64,
    pub window: (usize, usize),
    pub log_spherical_sums: Vec<f64>,
    pub points_used: usize,
    pub r_squared: f64,
    pub finite_support: bool,
}

pub fn critical_exponent(phi: &PosDefOracle, window: (usize, usize)) -> Result<ExponentEstimate> {
    let (lo, hi) = window;
    check_window(window)?;
    let sums: Vec<f64> = (lo..=hi).map(|m| phi.log_sphere_sum(m)).collect();
    if let Some(r) = phi.envelope().support {
        // Finitely supported φ: the series converges for every σ > 0.
        if (0..=r).any(|m| phi.log_sphere_sum(m) > f64::NEG_INFINITY) {
            return Ok(ExponentEstimate {
                s_hat: 0.0,
                stderr: 0.0,
                window,
                log_spherical_sums: sums,
                points_used: 0,
                r_squared: 1.0,
                finite_support: true,
            });
        }
    }
    exponent_from_log_sums(phi.params(), window, sums)
}

fn check_window((lo, hi): (usize, usize)) -> Result<()> {
    if hi < lo + 3 {
        return Err(Error::Input(format!("exponent window ({lo}, {hi}) needs m_max ≥ m_min + 3")));
    }
    Ok(())
}

/// Regression on precomputed log spherical sums for m in the window; zero
/// spheres are skipped.
pub fn exponent_from_log_sums(
    params: &GroupParams,
    window: (usize, usize),
    log_sums: Vec<f64>,
) -> Result<ExponentEstimate> {
    check_window(window)?;
    let delta = params.delta();
    let (x, y): (Vec<f64>, Vec<f64>) = log_sums
        .iter()
        .enumerate()
        .filter(|(_, l)| l.is_finite())
        .map(|(i, l)| ((window.0 + i) as f64 * delta, *l))
        .unzip();
    if x.len() < 2 {
        return Err(Error::UndefinedExponent(format!(
            "fewer than two nonzero spherical sums on window ({}, {})",
            window.0, window.1
        )));
    }
    let fit = fit_line(&x, &y);
    Ok(ExponentEstimate {
        s_hat: fit.slope,
        stderr: fit.slope_stderr,
        window,
        log_spherical_sums: log_sums,
        points_used: x.len(),
        r_squared: fit.r_squared,
        finite_support: false,
    })
}

/// Greedy construction of θ: stage n picks the smallest integer t_n ≥ t_{n-1} + 2
/// with Σ_{t_{n-1} < |g| ≤ t_n} θ(|g|) e^{-σ_n δ|g|} φ_n(g) ≥ n. θ ≡ 1 is
/// returned when every undressed stage series diverges and reaches its target.
pub fn patterson_theta(
    phis: &[PosDefOracle],
    sigmas: &[f64],
    eps: &[f64],
    max_width: usize,
) -> Result<SlowGrowthTheta> {
    let n = phis.len();
    if n == 0 || sigmas.len() != n || eps.len() != n {
        return Err(Error::Input("θ construction needs equally long, nonempty schedules".into()));
    }
    if sigmas.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Input("σ schedule must be non-increasing".into()));
    }
    if eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Input("ε schedule must be positive and non-increasing".into()));
    }
    let delta = phis[0].params().delta();
    let undressed_diverges = phis.iter().zip(sigmas).all(|(phi, &s)| {
        phi.declared_exponent().is_some_and(|d| s <= d && phi.envelope().support.is_none())
    });
    if undressed_diverges {
        let zeros = vec![0.0; n];
        if let Ok(theta) = greedy_theta(phis, sigmas, &zeros, delta, max_width) {
            return Ok(theta);
        }
    }
    for ((phi, &s), &e) in phis.iter().zip(sigmas).zip(eps) {
        if let Some(d) = phi.declared_exponent() {
            if !(s > d && s - e < d) {
                return Err(Error::Input(format!(
                    "stage for {} needs σ > {d} > σ - ε, got σ = {s}, ε = {e}",
                    phi.name()
                )));
            }
        }
    }
    greedy_theta(phis, sigmas, eps, delta, max_width)
}

fn greedy_theta(
    phis: &[PosDefOracle],
    sigmas: &[f64],
    eps: &[f64],
    delta: f64,
    max_width: usize,
) -> Result<SlowGrowthTheta> {
    let mut theta = SlowGrowthTheta {
        delta,
        breakpoints: vec![0.0],
        rates: vec![],
        log_values: vec![0.0],
        stage_sums: vec![],
    };
    for (i, ((phi, &s), &e)) in phis.iter().zip(sigmas).zip(eps).enumerate() {
        let target = (i + 1) as f64;
        let t_prev = *theta.breakpoints.last().unwrap() as usize;
        let log_theta_prev = *theta.log_values.last().unwrap();
        let mut log_sum = f64::NEG_INFINITY;
        let mut found = None;
        for m in t_prev + 1..=t_prev + max_width {
            let lt = log_theta_prev + e * delta * (m - t_prev) as f64;
            let term = lt - s * delta * m as f64 + phi.log_sphere_sum(m);
            log_sum = log_sum_exp([log_sum, term]);
            if m >= t_prev + 2 && log_sum >= target.ln() {
                found = Some(m);
                break;
            }
        }
        let Some(t_n) = found else {
            return Err(Error::ResourceCap {
                what: "θ annulus width",
                needed: max_width as u128 + 1,
                cap: max_width as u128,
            });
        };
        theta.rates.push(e);
        theta.breakpoints.push(t_n as f64);
        theta
            .log_values
            .push(log_theta_prev + e * delta * (t_n - t_prev) as f64);
        theta.stage_sums.push(log_sum.exp());
    }
    Ok(theta)
}

/// log K_M(n) = log Σ_{|g|, |gx| ≤ M} w(|g|) w(|gx|) for any fixed |x| = n,
/// with w(a) = θ(a) e^{-σδa}; g is bucketed by length a and by the number j
/// of letters it cancels against x.
pub fn log_pair_kernel(params: &GroupParams, log_w: &[f64], n: usize) -> f64 {
    let q = params.qf();
    let lq = q.ln();
    let lqm1 = (q - 1.0).ln();
    let m = log_w.len() - 1;
    let mut terms = Vec::new();
    for a in 0..=m {
        for j in 0..=a.min(n) {
            let b = a + n - 2 * j;
            if b > m {
                continue;
            }
            let log_count = if a == 0 {
                0.0
            } else if n == 0 {
                params.log_sphere_size(a)
            } else if j == 0 {
                a as f64 * lq
            } else if j == a {
                0.0
            } else if j < n {
                lqm1 + (a - j - 1) as f64 * lq
            } else {
                (a - n) as f64 * lq
            };
            terms.push(log_count + log_w[a] + log_w[b]);
        }
    }
    log_sum_exp(terms)
}

/// P_{θ,2}(φ; σ) over |g|, |h| ≤ m_max, as Σ_n (Σ_{C_n} φ) K_M(n).
pub fn double_series(
    phi: &PosDefOracle,
    sigma: f64,
    theta: &SlowGrowthTheta,
    m_max: usize,
) -> Result<SeriesValue> {
    let p = phi.params();
    let delta = p.delta();
    if !(sigma > 0.0) {
        return Err(Error::Input(format!("σ must be positive, got {sigma}")));
    }
    let log_w: Vec<f64> = (0..=m_max)
        .map(|a| theta.log_eval(a as f64) - sigma * delta * a as f64)
        .collect();
    let terms: Vec<f64> = (0..=2 * m_max)
        .into_par_iter()
        .map(|n| {
            let ls = phi.log_sphere_sum(n);
            if ls == f64::NEG_INFINITY {
                0.0
            } else {
                (ls + log_pair_kernel(p, &log_w, n)).exp()
            }
        })
        .collect();
    let partial = pairwise_sum(&terms);
    let threshold = phi.declared_exponent().unwrap_or(0.0).max(0.5);
    let finite = phi.envelope().support.is_some();
    let diverged = sigma <= 0.5 || (!finite && sigma <= threshold) || partial > DIVERGENCE_CEILING;
    let tail_bound = if diverged {
        f64::INFINITY
    } else {
        double_tail_bound(phi, sigma, theta.log_max(), m_max)
    };
    Ok(SeriesValue {
        partial,
        tail_bound,
        truncation_m: m_max,
        diverged,
        envelope_declared: phi.envelope_declared(),
    })
}

/// Bound on the pairs with max(|g|, |h|) > M. Grouping pairs by x = g⁻¹h with
/// |x| = n, g of length i + j cancelling j letters of x, the pair count is
/// ≤ ((q+1)/q) q^i and the weight ≤ Θ² e^{-σδn} α^i with α = e^{(1-2σ)δ};
/// max(|g|, |h|) > M forces i > M - n. Sphere sums of |φ| are ≤ A e^{ρn}.
pub fn double_tail_bound(phi: &PosDefOracle, sigma: f64, log_theta_max: f64, m: usize) -> f64 {
    let p = phi.params();
    let q = p.qf();
    let delta = p.delta();
    let env = phi.sphere_envelope();
    let alpha = ((1.0 - 2.0 * sigma) * delta).exp();
    let r = (env.rate - sigma * delta).exp();
    if alpha >= 1.0 {
        return f64::INFINITY;
    }
    let pref = env.amp * (q + 1.0) / q * (2.0 * log_theta_max).exp() / (1.0 - alpha);
    let last = match env.support {
        Some(s) => s,
        None => m + 1,
    };
    let mut total = 0.0;
    for n in 0..=last {
        let k = (m + 1).saturating_sub(n) as i32;
        total += (n + 1) as f64 * r.powi(n as i32) * alpha.powi(k);
    }
    if env.support.is_none() {
        if r >= 1.0 {
            return f64::INFINITY;
        }
        let nn = (m + 2) as f64;
        total += r.powf(nn) * ((nn + 1.0) / (1.0 - r) + r / (1.0 - r).powi(2));
    }
    pref * total
}

/// P_θ(φ; σ) / √P_{θ,2}(φ; σ) along a σ schedule, both at the same truncation.
pub fn sphericity_ratio(
    phi: &PosDefOracle,
    sigmas: &[f64],
    theta: &SlowGrowthTheta,
    m_max: usize,
) -> Result<Vec<f64>> {
    sigmas
        .iter()
        .map(|&s| {
            let single = poincare_series_theta(phi, s, theta, m_max)?;
            let double = double_series(phi, s, theta, m_max)?;
            if single.diverged || double.diverged {
                return Err(Error::Diverged(format!("{} at σ = {s}", phi.name())));
            }
            Ok(single.partial / double.partial.sqrt())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{enumerate_ball, ResourceCaps, Word};

    fn p() -> GroupParams {
        GroupParams::f2()
    }

    #[test]
    fn trivial_series_closed_form() {
        let g = p();
        let v = poincare_series(&PosDefOracle::trivial(&g), 2.0, 40).unwrap();
        assert!(!v.diverged);
        assert!(v.tail_bound < 1e-9);
        assert!((v.partial - 5.0 / 3.0).abs() < 1e-12);
        assert!(v.partial <= 5.0 / 3.0 && 5.0 / 3.0 <= v.upper() + 1e-15);
    }

    #[test]
    fn dirac_series_is_one() {
        let g = p();
        for s in [0.01, 0.5, 3.0] {
            let v = poincare_series(&PosDefOracle::dirac(&g), s, 10).unwrap();
            assert_eq!((v.partial, v.tail_bound, v.diverged), (1.0, 0.0, false));
        }
        assert!(poincare_series(&PosDefOracle::dirac(&g), 0.0, 10).is_err());
    }

    #[test]
    fn haagerup_convergence_threshold() {
        let g = p();
        let h = PosDefOracle::haagerup_s(&g, 0.75).unwrap();
        let v = poincare_series(&h, 0.8, 400).unwrap();
        assert!(!v.diverged && v.tail_bound.is_finite());
        // Σ (4/3) x^m for m ≥ 1, x = 3^{-0.05}
        let x = 3f64.powf(-0.05);
        let exact = 1.0 + 4.0 / 3.0 * x / (1.0 - x);
        assert!(v.partial <= exact && exact <= v.upper() * (1.0 + 1e-12));
        assert!(poincare_series(&h, 0.7, 400).unwrap().diverged);
    }

    #[test]
    fn ratio_rule_flags_divergence_without_declared_exponent() {
        let g = p();
        let mut t = std::collections::BTreeMap::new();
        t.insert(Word::identity(), 1.0);
        let o = PosDefOracle::table_unchecked(&g, t);
        assert!(!poincare_series(&o, 0.1, 20).unwrap().diverged);
        let k = PosDefOracle::exponent_kernel(&g, 0, 2).unwrap();
        assert!(poincare_series(&k, 0.9, 40).unwrap().diverged);
    }

    #[test]
    fn exponent_examples() {
        let g = p();
        let e = critical_exponent(&PosDefOracle::trivial(&g), (2, 12)).unwrap();
        assert!((e.s_hat - 1.0).abs() < 1e-12 && e.stderr < 1e-12);
        let e = critical_exponent(&PosDefOracle::cyclic(&g, &g.parse("a").unwrap()).unwrap(), (4, 12)).unwrap();
        assert!(e.s_hat.abs() < 1e-12 && e.stderr < 0.02);
        let e = critical_exponent(&PosDefOracle::haagerup_s(&g, 0.75).unwrap(), (4, 12)).unwrap();
        assert!((e.s_hat - 0.75).abs() < 1e-12);
        let e = critical_exponent(&PosDefOracle::dirac(&g), (4, 12)).unwrap();
        assert_eq!((e.s_hat, e.stderr), (0.0, 0.0));
        assert!(critical_exponent(&PosDefOracle::trivial(&g), (4, 6)).is_err());
        let zero = exponent_from_log_sums(&g, (4, 8), vec![f64::NEG_INFINITY; 5]);
        assert!(matches!(zero, Err(Error::UndefinedExponent(_))));
    }

    #[test]
    fn theta_for_constant_sequence() {
        let g = p();
        let n = 8;
        let phis = vec![PosDefOracle::trivial(&g); n];
        let sigmas: Vec<f64> = (1..=n).map(|i| 1.0 + 1.0 / i as f64).collect();
        let eps: Vec<f64> = (1..=n).map(|i| 2.0 / i as f64).collect();
        let theta = patterson_theta(&phis, &sigmas, &eps, 10_000).unwrap();
        assert_eq!(theta.stage_sums.len(), n);
        // Direct check: the annulus sums of θ e^{-σδ|g|} reach n.
        for i in 0..n {
            let lo = theta.breakpoints[i] as usize;
            let hi = theta.breakpoints[i + 1] as usize;
            let s: f64 = (lo + 1..=hi)
                .map(|m| theta.eval(m as f64) * (-sigmas[i] * g.delta() * m as f64).exp() * g.sphere_size_f64(m))
                .sum();
            assert!(s >= (i + 1) as f64 * (1.0 - 1e-12));
            assert!(hi >= lo + 2);
        }
        let audit = theta.slow_growth_audit(0.05, 200);
        assert_eq!(audit.violations, 0);
        assert!(audit.non_decreasing && audit.at_least_one);
    }

    #[test]
    fn theta_is_one_at_the_critical_exponent() {
        let g = p();
        let phis = vec![PosDefOracle::trivial(&g); 4];
        let theta = patterson_theta(&phis, &[1.0; 4], &[0.1; 4], 1000).unwrap();
        assert!(theta.is_constant());
        let h = vec![PosDefOracle::haagerup_s(&g, 0.75).unwrap(); 3];
        let theta = patterson_theta(&h, &[0.75; 3], &[0.1; 3], 1000).unwrap();
        assert!(theta.is_constant());
    }

    #[test]
    fn theta_preconditions() {
        let g = p();
        let phis = vec![PosDefOracle::trivial(&g); 2];
        assert!(patterson_theta(&phis, &[1.1, 1.2], &[0.2, 0.2], 100).is_err());
        assert!(patterson_theta(&phis, &[1.2, 1.1], &[0.1, 0.2], 100).is_err());
        assert!(patterson_theta(&phis, &[1.2, 1.1], &[0.1, 0.05], 100).is_err());
        let cap = patterson_theta(&phis[..1], &[1.5], &[0.6], 1);
        assert!(matches!(cap, Err(Error::ResourceCap { .. })));
    }

    #[test]
    fn double_series_of_dirac_is_single_series_at_twice_sigma() {
        let g = p();
        let d = double_series(&PosDefOracle::dirac(&g), 1.0, &SlowGrowthTheta::one(), 40).unwrap();
        assert!((d.partial - 5.0 / 3.0).abs() < 1e-12);
        assert!(d.tail_bound < 1e-9);
        let single = poincare_series(&PosDefOracle::trivial(&g), 1.5, 30).unwrap();
        let d = double_series(&PosDefOracle::dirac(&g), 0.75, &SlowGrowthTheta::one(), 30).unwrap();
        assert!((d.partial - single.partial).abs() < 1e-12 * single.partial);
    }

    #[test]
    fn double_series_matches_brute_force() {
        let g = p();
        let caps = ResourceCaps::default();
        let ball = enumerate_ball(&g, 4, &caps).unwrap();
        let theta = SlowGrowthTheta {
            delta: g.delta(),
            breakpoints: vec![0.0, 2.0, 3.0],
            rates: vec![0.3, 0.1],
            log_values: vec![0.0, 0.6 * g.delta(), 0.7 * g.delta()],
            stage_sums: vec![],
        };
        for phi in [
            PosDefOracle::haagerup_s(&g, 0.75).unwrap(),
            PosDefOracle::cyclic(&g, &g.parse("a").unwrap()).unwrap(),
            PosDefOracle::trivial(&g),
        ] {
            let sigma = 0.9;
            let w = |x: &Word| theta.eval(x.len() as f64) * (-sigma * g.delta() * x.len() as f64).exp();
            let mut brute = 0.0;
            for x in &ball {
                for y in &ball {
                    brute += phi.eval(&x.inverse().mul(y)) * w(x) * w(y);
                }
            }
            let fast = double_series(&phi, sigma, &theta, 4).unwrap().partial;
            assert!((brute - fast).abs() < 1e-11 * brute, "{}", phi.name());
        }
    }

    #[test]
    fn double_series_tail_brackets_the_limit() {
        let g = p();
        let phi = PosDefOracle::haagerup_s(&g, 0.75).unwrap();
        let one = SlowGrowthTheta::one();
        let far = double_series(&phi, 0.95, &one, 160).unwrap();
        assert!(far.tail_bound < 1e-6 * far.partial);
        for m in [10, 20, 40] {
            let near = double_series(&phi, 0.95, &one, m).unwrap();
            assert!(near.partial <= far.partial);
            assert!(near.upper() >= far.partial);
        }
        assert!(double_series(&PosDefOracle::trivial(&g), 0.9, &one, 20).unwrap().diverged);
    }

    #[test]
    fn sphericity_examples() {
        let g = p();
        let one = SlowGrowthTheta::one();
        let h = PosDefOracle::haagerup_s(&g, 0.75).unwrap();
        let r = sphericity_ratio(&h, &[0.85, 0.8, 0.77], &one, 120).unwrap();
        assert!(r.iter().all(|x| *x >= 0.05));
        let r = sphericity_ratio(&PosDefOracle::trivial(&g), &[1.1, 1.05], &one, 60).unwrap();
        assert!(r.iter().all(|x| *x >= 1.0 - 1e-12));
        let r = sphericity_ratio(&PosDefOracle::dirac(&g), &[0.9, 0.7], &one, 60).unwrap();
        assert!(r.iter().all(|x| *x > 0.0));
        assert!(sphericity_ratio(&PosDefOracle::trivial(&g), &[0.9], &one, 20).is_err());
    }
}
