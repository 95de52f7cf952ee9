//! Scaled representations for deep convolution powers.
//!
//! Convolution powers of order several thousand overflow f64 both in their
//! values and in sphere sizes, so powers are carried as `exp(log_scale) * v`
//! with `v` of unit norm. Radial functions use the orthonormal sphere basis
//! e_m = A_m / sqrt|C_m|; multiplication by A_1 is then the symmetric Jacobi
//! matrix with off-diagonals sqrt(q+1) (between e_0 and e_1) and sqrt(q).

use crate::group::{GroupParams, RadialFunction, Word};
use crate::numeric::signed_log_sum;

/// `exp(log_scale) * Σ_m amps[m] e_m` with e_m the normalized sphere basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledRadial {
    log_scale: f64,
    amps: Vec<f64>,
}

impl ScaledRadial {
    pub fn from_radial(f: &RadialFunction, params: &GroupParams) -> Self {
        let amps = f
            .coeffs()
            .iter()
            .enumerate()
            .map(|(m, c)| c * (0.5 * params.log_sphere_size(m)).exp())
            .collect();
        Self {
            log_scale: 0.0,
            amps,
        }
        .normalized()
    }

    pub fn radius(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn amps(&self) -> &[f64] {
        &self.amps
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    fn normalized(mut self) -> Self {
        let n = self.amps.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 0.0 && n.is_finite() {
            for a in &mut self.amps {
                *a /= n;
            }
            self.log_scale += n.ln();
        }
        self
    }

    /// log ‖f‖_2.
    pub fn log_l2_norm(&self) -> f64 {
        self.log_scale + self.amps.iter().map(|a| a * a).sum::<f64>().sqrt().ln()
    }

    /// Back to plain sphere coefficients (only sensible for small radius).
    pub fn to_radial(&self, params: &GroupParams) -> RadialFunction {
        RadialFunction::new(
            self.amps
                .iter()
                .enumerate()
                .map(|(m, a)| a * (self.log_scale - 0.5 * params.log_sphere_size(m)).exp())
                .collect(),
        )
    }

    /// Radial convolution, via T_m = A_m / sqrt|C_m| generated by
    /// T_{m+1} = J T_m / sqrt(q) - T_{m-1} (m ≥ 2).
    pub fn convolve(&self, other: &Self, params: &GroupParams) -> Self {
        let q = params.qf();
        let sq = q.sqrt();
        let sq1 = (q + 1.0).sqrt();
        let (a, b) = if self.radius() <= other.radius() {
            (self, other)
        } else {
            (other, self)
        };
        let n = a.radius() + b.radius() + 1;
        let mut out = vec![0.0; n];
        let mut t_prev = b.amps.clone();
        t_prev.resize(n, 0.0);
        axpy(&mut out, a.amps[0], &t_prev);
        if a.radius() >= 1 {
            let mut t_cur = jacobi(&t_prev, sq, sq1);
            for x in &mut t_cur {
                *x /= sq1;
            }
            axpy(&mut out, a.amps[1], &t_cur);
            for m in 1..a.radius() {
                let mut t_next = jacobi(&t_cur, sq, sq1);
                let back = if m == 1 { sq1 / sq } else { 1.0 };
                for (x, p) in t_next.iter_mut().zip(&t_prev) {
                    *x = *x / sq - back * p;
                }
                axpy(&mut out, a.amps[m + 1], &t_next);
                t_prev = std::mem::replace(&mut t_cur, t_next);
            }
        }
        Self {
            log_scale: a.log_scale + b.log_scale,
            amps: out,
        }
        .normalized()
    }

    /// log of Σ_g F(g) φ(g) for a radial φ given by `log_phi(m)` (which may be
    /// -inf). Returns (sign, log|value|).
    pub fn log_pairing(&self, params: &GroupParams, log_phi: impl Fn(usize) -> f64) -> (f64, f64) {
        let terms: Vec<(f64, f64)> = self
            .amps
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(m, a)| {
                (
                    a.signum(),
                    a.abs().ln() + 0.5 * params.log_sphere_size(m) + log_phi(m),
                )
            })
            .collect();
        let (s, l) = signed_log_sum(&terms);
        (s, l + self.log_scale)
    }

    /// log of Σ_m (m+1) ‖F|_{C_m}‖_2, which dominates ‖λ(F)‖ by the Haagerup
    /// inequality for functions supported on one sphere.
    pub fn log_rd_bound(&self) -> f64 {
        let s: f64 = self
            .amps
            .iter()
            .enumerate()
            .map(|(m, a)| (m as f64 + 1.0) * a.abs())
            .sum();
        self.log_scale + s.ln()
    }
}

fn axpy(out: &mut [f64], c: f64, x: &[f64]) {
    if c != 0.0 {
        for (o, v) in out.iter_mut().zip(x) {
            *o += c * v;
        }
    }
}

/// Multiplication by A_1 in the orthonormal sphere basis.
fn jacobi(v: &[f64], sq: f64, sq1: f64) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    if n > 1 {
        out[0] = sq1 * v[1];
        out[1] = sq1 * v[0];
    }
    if n > 2 {
        out[1] += sq * v[2];
    }
    for m in 2..n {
        let up = if m + 1 < n { v[m + 1] } else { 0.0 };
        out[m] = sq * (v[m - 1] + up);
    }
    out
}

/// A function on the cyclic subgroup generated by one letter, carried as a
/// scaled vector over exponents `offset..offset + vals.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledCyclic {
    log_scale: f64,
    offset: i64,
    vals: Vec<f64>,
}

impl ScaledCyclic {
    /// Recognize a sparse function supported on ⟨x⟩ for a single letter x.
    pub fn from_sparse(f: &crate::group::SparseGroupFunction) -> Option<(u8, Self)> {
        let mut gen: Option<u8> = None;
        let mut pts: Vec<(i64, f64)> = Vec::new();
        for (w, v) in f.iter() {
            let letters = w.letters();
            if letters.is_empty() {
                pts.push((0, v));
                continue;
            }
            let first = letters[0];
            if letters.iter().any(|&c| c != first) {
                return None;
            }
            let base = first & !1;
            match gen {
                None => gen = Some(base),
                Some(g) if g != base => return None,
                _ => {}
            }
            let n = letters.len() as i64;
            pts.push((if first & 1 == 0 { n } else { -n }, v));
        }
        let gen = gen.unwrap_or(0);
        let lo = pts.iter().map(|p| p.0).min()?;
        let hi = pts.iter().map(|p| p.0).max()?;
        let mut vals = vec![0.0; (hi - lo + 1) as usize];
        for (n, v) in pts {
            vals[(n - lo) as usize] += v;
        }
        Some((
            gen,
            Self {
                log_scale: 0.0,
                offset: lo,
                vals,
            }
            .normalized(),
        ))
    }

    fn normalized(mut self) -> Self {
        let n = self.vals.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 0.0 && n.is_finite() {
            for a in &mut self.vals {
                *a /= n;
            }
            self.log_scale += n.ln();
        }
        self
    }

    pub fn adjoint(&self) -> Self {
        let mut vals = self.vals.clone();
        vals.reverse();
        Self {
            log_scale: self.log_scale,
            offset: -(self.offset + self.vals.len() as i64 - 1),
            vals,
        }
    }

    pub fn convolve(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.vals.len() + other.vals.len() - 1];
        for (i, a) in self.vals.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in other.vals.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self {
            log_scale: self.log_scale + other.log_scale,
            offset: self.offset + other.offset,
            vals: out,
        }
        .normalized()
    }

    /// Smallest and largest exponent carried.
    pub fn exponent_range(&self) -> (i64, i64) {
        (self.offset, self.offset + self.vals.len() as i64 - 1)
    }

    pub fn log_l2_norm(&self) -> f64 {
        self.log_scale + self.vals.iter().map(|a| a * a).sum::<f64>().sqrt().ln()
    }

    /// Value at x^n, as (sign, log|value|).
    pub fn log_value_at(&self, n: i64) -> (f64, f64) {
        let i = n - self.offset;
        if i < 0 || i as usize >= self.vals.len() {
            return (0.0, f64::NEG_INFINITY);
        }
        let v = self.vals[i as usize];
        if v == 0.0 {
            (0.0, f64::NEG_INFINITY)
        } else {
            (v.signum(), v.abs().ln() + self.log_scale)
        }
    }

    /// Haagerup bound: x^n and x^{-n} share the sphere of radius |n|.
    pub fn log_rd_bound(&self) -> f64 {
        let len = self.vals.len() as i64;
        let maxn = (self.offset.abs()).max((self.offset + len - 1).abs());
        let mut s = 0.0;
        for m in 0..=maxn {
            let mut sq = 0.0;
            for n in [m, -m] {
                let i = n - self.offset;
                if i >= 0 && i < len {
                    sq += self.vals[i as usize].powi(2);
                }
                if m == 0 {
                    break;
                }
            }
            s += (m as f64 + 1.0) * sq.sqrt();
        }
        self.log_scale + f64::ln(s)
    }

    pub fn word_at(gen: u8, n: i64) -> Word {
        let code = if n >= 0 { gen } else { gen | 1 };
        Word::from_reduced(vec![code; n.unsigned_abs() as usize])
    }
}
