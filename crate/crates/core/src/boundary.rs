//! The boundary of F_k as the space of infinite reduced words, discretized by
//! cylinders of uniform depth.
//!
//! With visual parameter 1 the Patterson–Sullivan measure is the uniform
//! cylinder measure: ν(C_w) = 1 / ((q+1) q^{|w|-1}). The covering multiplicity
//! of shadows is 1 on the tree, so every shadow-lemma constant is explicit.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{enumerate_sphere, GroupParams, ResourceCaps, SparseGroupFunction, Word};

/// The set of boundary points whose reduced ray starts with `prefix`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cylinder {
    prefix: Word,
}

impl Cylinder {
    pub fn new(prefix: Word) -> Result<Self> {
        if prefix.is_empty() {
            return Err(Error::Input("cylinder prefix must be nonempty".into()));
        }
        Ok(Self { prefix })
    }

    pub fn parse(params: &GroupParams, s: &str) -> Result<Self> {
        Self::new(params.parse(s)?)
    }

    pub fn prefix(&self) -> &Word {
        &self.prefix
    }

    pub fn depth(&self) -> usize {
        self.prefix.len()
    }

    /// ν_PS(C_w).
    pub fn mass(&self, params: &GroupParams) -> f64 {
        cylinder_mass(params, self.depth())
    }

    /// The one-letter refinements of this cylinder.
    pub fn children(&self, params: &GroupParams) -> Vec<Cylinder> {
        let last = self.prefix.last().unwrap();
        (0..params.alphabet() as u8)
            .filter(|&c| c != last ^ 1)
            .map(|c| Cylinder {
                prefix: self.prefix.extended(c),
            })
            .collect()
    }
}

pub fn cylinder_mass(params: &GroupParams, depth: usize) -> f64 {
    debug_assert!(depth >= 1);
    (-(params.log_sphere_size(depth))).exp()
}

/// Depth-N cylinders in sphere-rank order.
pub fn cylinders(params: &GroupParams, depth: usize, caps: &ResourceCaps) -> Result<Vec<Cylinder>> {
    if depth == 0 {
        return Err(Error::Input("cylinder depth must be at least 1".into()));
    }
    Ok(enumerate_sphere(params, depth, caps)?
        .map(|prefix| Cylinder { prefix })
        .collect())
}

/// Gromov product of two boundary cylinders; on the diagonal only a lower
/// bound is resolved at this depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoundaryProduct {
    pub value: usize,
    pub exact: bool,
}

pub fn boundary_gromov_product(c1: &Cylinder, c2: &Cylinder) -> BoundaryProduct {
    let value = c1.prefix.common_prefix_len(&c2.prefix);
    let exact = value < c1.depth().min(c2.depth());
    BoundaryProduct { value, exact }
}

/// b_ξ(g, e) = |g| - 2 (g, ξ) for ξ in `c`.
pub fn busemann(c: &Cylinder, g: &Word) -> Result<i64> {
    if g.len() >= c.depth() {
        return Err(Error::Precision(format!(
            "cylinder of depth {} cannot resolve b_ξ({g}, e) with |g| = {}",
            c.depth(),
            g.len()
        )));
    }
    Ok(busemann_unchecked(&c.prefix, g))
}

pub(crate) fn busemann_unchecked(prefix: &Word, g: &Word) -> i64 {
    g.len() as i64 - 2 * g.common_prefix_len(prefix) as i64
}

/// Shadow O(g; R0) = {ξ : (ξ, g) ≥ |g| - R0}. Gromov products are integers,
/// so this is the cylinder of the prefix of g of length |g| - floor(R0); the
/// whole boundary (all first-letter cylinders) once that length drops to 0.
pub fn shadow(params: &GroupParams, g: &Word, r0: f64) -> Result<Vec<Cylinder>> {
    if g.is_empty() {
        return Err(Error::Input("shadow needs |g| ≥ 1".into()));
    }
    if !(r0 >= 0.0) {
        return Err(Error::Input(format!("shadow radius must be ≥ 0, got {r0}")));
    }
    let drop = r0.floor() as usize;
    if drop >= g.len() {
        return cylinders(params, 1, &ResourceCaps::default());
    }
    Ok(vec![Cylinder {
        prefix: g.prefix(g.len() - drop),
    }])
}

pub fn total_mass(params: &GroupParams, cyls: &[Cylinder]) -> f64 {
    cyls.iter().map(|c| c.mass(params)).sum()
}

/// Image of the cylinder under g together with the conformal factor
/// e^{-sδ b_ξ(g^{-1}, e)}, constant on the cylinder. At s = 1 the factor is
/// ν(g C)/ν(C), and factors multiply along compositions.
pub fn act(params: &GroupParams, g: &Word, c: &Cylinder, s: f64) -> Result<(Cylinder, f64)> {
    if g.len() >= c.depth() {
        return Err(Error::Precision(format!(
            "cylinder depth {} too shallow to act by a word of length {}",
            c.depth(),
            g.len()
        )));
    }
    let b = busemann_unchecked(&c.prefix, &g.inverse());
    let image = g.mul(&c.prefix);
    Ok((Cylinder { prefix: image }, (-s * params.delta() * b as f64).exp()))
}

/// Sparse operator on depth-N cylinder functions, rows in sphere-rank order.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderOperator {
    pub depth: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl CylinderOperator {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|(j, a)| a * v[*j]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for (j, a) in row {
                m[(i, *j)] += a;
            }
        }
        m
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

/// Depth-N indices of the cells making up the cylinder of `v`, which may be
/// shorter or longer than N.
pub(crate) fn cells_under(params: &GroupParams, v: &Word, depth: usize) -> Vec<usize> {
    if v.len() >= depth {
        return vec![params.sphere_rank(&v.prefix(depth))];
    }
    let mut out = Vec::new();
    let mut stack = vec![v.clone()];
    while let Some(w) = stack.pop() {
        if w.len() == depth {
            out.push(params.sphere_rank(&w));
            continue;
        }
        for c in 0..params.alphabet() as u8 {
            if w.last() != Some(c ^ 1) {
                stack.push(w.extended(c));
            }
        }
    }
    out.sort_unstable();
    out
}

/// Matrix of π_s(f) = Σ f(g) π_s(g), π_s(g)ψ(ξ) = e^{-sδ b_ξ(g,e)} ψ(g^{-1}ξ),
/// on depth-N cylinder functions. When g^{-1} C_u is coarser than a cell the
/// row averages ψ over it with ν_PS weights (conditional expectation onto the
/// cylinder σ-algebra); constants are reproduced exactly.
pub fn density_rep_matrix(
    params: &GroupParams,
    f: &SparseGroupFunction,
    s: f64,
    depth: usize,
    caps: &ResourceCaps,
) -> Result<CylinderOperator> {
    let r = f.support_radius();
    if r >= depth {
        return Err(Error::Precision(format!(
            "support radius {r} needs cylinder depth > {r}, got {depth}"
        )));
    }
    let cells = cylinders(params, depth, caps)?;
    let delta = params.delta();
    let terms: Vec<(Word, Word, f64)> = f.iter().map(|(g, v)| (g.clone(), g.inverse(), v)).collect();
    let rows = cells
        .par_iter()
        .map(|cell| {
            let u = cell.prefix();
            let mut row: BTreeMap<usize, f64> = BTreeMap::new();
            for (g, ginv, fg) in &terms {
                let weight = fg * (-s * delta * busemann_unchecked(u, g) as f64).exp();
                let target = ginv.mul(u);
                let under = cells_under(params, &target, depth);
                let share = weight / under.len() as f64;
                for j in under {
                    *row.entry(j).or_insert(0.0) += share;
                }
            }
            row.into_iter().filter(|(_, a)| *a != 0.0).collect()
        })
        .collect();
    Ok(CylinderOperator { depth, rows })
}

/// Exact Σ_{|g| ≤ L} e^{-sδ b_ξ(g, e)} for ξ in `c`, by bucketing g according
/// to its common prefix with ξ. The value does not depend on the cylinder.
pub fn ball_density_sum(params: &GroupParams, l: usize, s: f64, c: &Cylinder) -> Result<f64> {
    if c.depth() <= l {
        return Err(Error::Precision(format!(
            "cylinder depth {} cannot resolve balls of radius {l}",
            c.depth()
        )));
    }
    Ok((0..=l).map(|m| sphere_density_sum(params, m, s)).sum())
}

/// Σ_{|g| = m} e^{-sδ b_ξ(g, e)}.
pub fn sphere_density_sum(params: &GroupParams, m: usize, s: f64) -> f64 {
    let q = params.qf();
    if m == 0 {
        return 1.0;
    }
    // j = common prefix length with ξ, b = m - 2j.
    let mut total = q.powi(m as i32) * q.powf(-s * m as f64);
    for j in 1..m {
        let count = (q - 1.0) * q.powi((m - j - 1) as i32);
        total += count * q.powf(-s * (m as f64 - 2.0 * j as f64));
    }
    total + q.powf(s * m as f64)
}

/// Dense kernel on depth-N cylinders with per-cylinder ν_PS weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryKernelMatrix {
    pub k: usize,
    pub depth: usize,
    pub s: f64,
    pub entries: DMatrix<f64>,
    pub weights: Vec<f64>,
}

const BINARY_MAGIC: &[u8; 4] = b"PKM1";

impl BoundaryKernelMatrix {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// ψ^T diag(ν) K diag(ν) φ.
    pub fn form(&self, psi: &[f64], phi: &[f64]) -> f64 {
        let n = self.dim();
        let mut total = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.entries[(i, j)] * self.weights[j] * phi[j];
            }
            total += psi[i] * self.weights[i] * row;
        }
        total
    }

    /// The symmetric matrix diag(√ν) K diag(√ν), whose spectrum is that of the
    /// mass-weighted form relative to L²(ν).
    pub fn weighted(&self) -> DMatrix<f64> {
        let sw: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        DMatrix::from_fn(self.dim(), self.dim(), |i, j| sw[i] * self.entries[(i, j)] * sw[j])
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "# depth={},s={},k={}", self.depth, self.s, self.k)?;
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| format!("{:e}", self.entries[(i, j)]))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Little-endian: magic, depth (u32), s (f64), k (u32), dim (u32),
    /// weights, then entries row-major.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(self.depth as u32).to_le_bytes())?;
        w.write_all(&self.s.to_le_bytes())?;
        w.write_all(&(self.k as u32).to_le_bytes())?;
        w.write_all(&(self.dim() as u32).to_le_bytes())?;
        for x in &self.weights {
            w.write_all(&x.to_le_bytes())?;
        }
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                w.write_all(&self.entries[(i, j)].to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Input("not a boundary kernel matrix file".into()));
        }
        let depth = read_u32(&mut r)? as usize;
        let s = read_f64(&mut r)?;
        let k = read_u32(&mut r)? as usize;
        let dim = read_u32(&mut r)? as usize;
        let weights = (0..dim).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
        let mut entries = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                entries[(i, j)] = read_f64(&mut r)?;
            }
        }
        Ok(Self {
            k,
            depth,
            s,
            entries,
            weights,
        })
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> GroupParams {
        GroupParams::f2()
    }

    fn cyl(s: &str) -> Cylinder {
        Cylinder::parse(&p(), s).unwrap()
    }

    #[test]
    fn boundary_product_examples() {
        assert_eq!(
            boundary_gromov_product(&cyl("ab"), &cyl("aB")),
            BoundaryProduct { value: 1, exact: true }
        );
        assert_eq!(
            boundary_gromov_product(&cyl("ab"), &cyl("ab")),
            BoundaryProduct { value: 2, exact: false }
        );
        assert_eq!(boundary_gromov_product(&cyl("a"), &cyl("b")).value, 0);
    }

    #[test]
    fn busemann_examples() {
        let g = p();
        assert_eq!(busemann(&cyl("aaa"), &g.parse("a").unwrap()).unwrap(), -1);
        assert_eq!(busemann(&cyl("aaa"), &g.parse("b").unwrap()).unwrap(), 1);
        assert_eq!(busemann(&cyl("abA"), &Word::identity()).unwrap(), 0);
        assert!(matches!(
            busemann(&cyl("ab"), &g.parse("ab").unwrap()),
            Err(Error::Precision(_))
        ));
    }

    #[test]
    fn shadow_examples() {
        let g = p();
        let sh = shadow(&g, &g.parse("ab").unwrap(), 0.5).unwrap();
        assert_eq!(sh, vec![cyl("ab")]);
        assert!((total_mass(&g, &sh) - 1.0 / 12.0).abs() < 1e-16);
        let sh = shadow(&g, &g.parse("a").unwrap(), 0.5).unwrap();
        assert!((total_mass(&g, &sh) - 0.25).abs() < 1e-16);
        let wide = shadow(&g, &g.parse("ab").unwrap(), 1.5).unwrap();
        assert_eq!(wide, vec![cyl("a")]);
        let all = shadow(&g, &g.parse("ab").unwrap(), 7.0).unwrap();
        assert!((total_mass(&g, &all) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn act_examples() {
        let g = p();
        let s = 0.7;
        let c = cyl("aab");
        let (img, w) = act(&g, &g.parse("a").unwrap(), &c, s).unwrap();
        assert_eq!(img, cyl("aaab"));
        // ξ starts with a, so b_ξ(a^{-1}) = 1: the image is smaller.
        assert!((w - (-s * g.delta()).exp()).abs() < 1e-15);
        let (img, w) = act(&g, &Word::identity(), &c, s).unwrap();
        assert_eq!((img, w), (c.clone(), 1.0));
        let (img, w) = act(&g, &g.parse("A").unwrap(), &c, s).unwrap();
        assert_eq!(img, cyl("ab"));
        assert!((w - (s * g.delta()).exp()).abs() < 1e-12);
        assert!(act(&g, &g.parse("abab").unwrap(), &c, s).is_err());
    }

    #[test]
    fn act_composes_with_multiplied_weights() {
        let g = p();
        let caps = ResourceCaps::default();
        let x = g.parse("aB").unwrap();
        let y = g.parse("b").unwrap();
        for c in cylinders(&g, 5, &caps).unwrap() {
            let (c1, w1) = act(&g, &y, &c, 0.8).unwrap();
            let (c2, w2) = act(&g, &x, &c1, 0.8).unwrap();
            let (c3, w3) = act(&g, &x.mul(&y), &c, 0.8).unwrap();
            assert_eq!(c2, c3);
            assert!((w1 * w2 - w3).abs() < 1e-12 * w3);
        }
    }

    #[test]
    fn masses_partition_and_refine() {
        let g = p();
        let caps = ResourceCaps::default();
        for n in 1..=10 {
            let total: f64 = cylinders(&g, n, &caps).unwrap().iter().map(|c| c.mass(&g)).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        let c = cyl("abA");
        let kids: f64 = c.children(&g).iter().map(|k| k.mass(&g)).sum();
        assert!((kids - c.mass(&g)).abs() < 1e-14 * kids);
    }

    #[test]
    fn conformal_pushforward_is_probability() {
        let g = p();
        let caps = ResourceCaps::default();
        let cells = cylinders(&g, 6, &caps).unwrap();
        for w in ["a", "ab", "BAb", "abab", "aBBa"] {
            let x = g.parse(w).unwrap();
            let total: f64 = cells
                .iter()
                .map(|c| {
                    let (img, wt) = act(&g, &x, c, 1.0).unwrap();
                    // weight at s = 1 predicts ν(g C)
                    assert!((c.mass(&g) * wt - img.mass(&g)).abs() < 1e-15);
                    c.mass(&g) * wt
                })
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ball_density_sum_examples() {
        let g = p();
        let c = cyl("abab");
        assert_eq!(ball_density_sum(&g, 0, 0.75, &c).unwrap(), 1.0);
        let l1 = ball_density_sum(&g, 1, 0.75, &c).unwrap();
        let expect = 1.0 + 3.0 * 3f64.powf(-0.75) + 3f64.powf(0.75);
        assert!((l1 - expect).abs() < 1e-14);
        assert!((l1 - 4.5956).abs() < 1e-4);
        assert!(ball_density_sum(&g, 4, 0.75, &c).is_err());
    }

    #[test]
    fn ball_density_sum_matches_direct_enumeration() {
        let g = p();
        let caps = ResourceCaps::default();
        let c = Cylinder::new(g.parse("aBaaBab").unwrap()).unwrap();
        for s in [0.5, 0.75, 1.0] {
            let mut direct = 0.0;
            for m in 0..=5 {
                for x in enumerate_sphere(&g, m, &caps).unwrap() {
                    direct += (-s * g.delta() * busemann(&c, &x).unwrap() as f64).exp();
                }
            }
            let closed = ball_density_sum(&g, 5, s, &c).unwrap();
            assert!((direct - closed).abs() < 1e-10 * closed);
        }
    }

    #[test]
    fn density_matrix_reproduces_ball_sums_on_constants() {
        let g = p();
        let caps = ResourceCaps::default();
        let ball = SparseGroupFunction::indicator_ball(&g, 3, &caps).unwrap();
        let m = density_rep_matrix(&g, &ball, 0.75, 5, &caps).unwrap();
        let ones = vec![1.0; m.dim()];
        let out = m.apply(&ones);
        let expect = ball_density_sum(&g, 3, 0.75, &cyl("aaaaa")).unwrap();
        for v in out {
            assert!((v - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn density_matrix_identity_and_precision() {
        let g = p();
        let caps = ResourceCaps::default();
        let id = density_rep_matrix(&g, &SparseGroupFunction::dirac(Word::identity()), 0.6, 3, &caps)
            .unwrap();
        for (i, row) in id.rows.iter().enumerate() {
            assert_eq!(row, &vec![(i, 1.0)]);
        }
        let f = SparseGroupFunction::dirac(g.parse("abb").unwrap());
        assert!(matches!(
            density_rep_matrix(&g, &f, 0.6, 3, &caps),
            Err(Error::Precision(_))
        ));
    }

    #[test]
    fn half_density_is_unitary_on_constants_and_one_preserves_mass() {
        let g = p();
        let caps = ResourceCaps::default();
        let n = 6;
        let nu = cylinder_mass(&g, n);
        for w in ["a", "aB", "bab"] {
            let f = SparseGroupFunction::dirac(g.parse(w).unwrap());
            let half = density_rep_matrix(&g, &f, 0.5, n, &caps).unwrap();
            let v = half.apply(&vec![1.0; half.dim()]);
            let norm: f64 = v.iter().map(|x| nu * x * x).sum();
            assert!((norm - 1.0).abs() < 1e-12);
            let one = density_rep_matrix(&g, &f, 1.0, n, &caps).unwrap();
            let v = one.apply(&vec![1.0; one.dim()]);
            let mass: f64 = v.iter().map(|x| nu * x).sum();
            assert!((mass - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_matrix_binary_round_trip() {
        let dir = std::env::temp_dir().join(format!("pkm-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let m = BoundaryKernelMatrix {
            k: 2,
            depth: 1,
            s: 0.75,
            entries: DMatrix::from_fn(4, 4, |i, j| 1.0 + (i * j) as f64),
            weights: vec![0.25; 4],
        };
        let path = dir.join("k.bin");
        m.write_binary(&path).unwrap();
        assert_eq!(BoundaryKernelMatrix::read_binary(&path).unwrap(), m);
        m.write_csv(&dir.join("k.csv")).unwrap();
        let text = std::fs::read_to_string(dir.join("k.csv")).unwrap();
        assert!(text.starts_with("# depth=1,s=0.75,k=2\n"));
    }
}
