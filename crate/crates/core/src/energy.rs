//! The Dirichlet form, its energy measures, the pair measure `Γ`, capacity
//! and normal contractions.
//!
//! Double sums run over ordered pairs `x != y`, so each unordered edge is
//! seen twice and the generator carries a factor 2.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::graph_form::GraphForm;

fn check_vec(g: &GraphForm, u: &[f64]) -> Result<()> {
    check_len(g.n(), u.len())
}

/// `h(u, v) = sum_{x != y} j (u(x)-u(y)) (v(x)-v(y)) + sum_x u v (k + nu)`.
///
/// `nu` is a signed per-vertex weight (not a density against `m`).
pub fn energy(g: &GraphForm, nu: Option<&[f64]>, u: &[f64], v: &[f64]) -> Result<f64> {
    check_vec(g, u)?;
    check_vec(g, v)?;
    if let Some(nu) = nu {
        check_vec(g, nu)?;
    }
    let mut total = jump_energy_unchecked(g, u, v);
    for x in 0..g.n() {
        let pot = g.killing()[x] + nu.map_or(0.0, |p| p[x]);
        total += u[x] * v[x] * pot;
    }
    Ok(total)
}

/// Jump part only: `sum_{x != y} j (u(x)-u(y)) (v(x)-v(y))`.
pub fn jump_energy(g: &GraphForm, u: &[f64], v: &[f64]) -> Result<f64> {
    check_vec(g, u)?;
    check_vec(g, v)?;
    Ok(jump_energy_unchecked(g, u, v))
}

fn jump_energy_unchecked(g: &GraphForm, u: &[f64], v: &[f64]) -> f64 {
    let mut total = 0.0;
    for x in 0..g.n() {
        for &(y, w) in g.neighbors(x) {
            total += w * (u[x] - u[y]) * (v[x] - v[y]);
        }
    }
    total
}

/// `(u, v)` in `L^2(X, m)`.
pub fn inner(g: &GraphForm, u: &[f64], v: &[f64]) -> f64 {
    g.mass().iter().zip(u).zip(v).map(|((m, a), b)| m * a * b).sum()
}

pub fn norm_sq(g: &GraphForm, u: &[f64]) -> f64 {
    inner(g, u, u)
}

/// Which energy measure to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    /// Killing part, `u(x)^2 k(x)`.
    A,
    /// Jump part, `sum_y j(x, y) (u(x) - u(y))^2`.
    B,
    /// Non-killing part; equal to `B` on graphs since the strongly local part vanishes.
    D,
}

impl FromStr for Part {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" | "A" => Ok(Part::A),
            "b" | "B" => Ok(Part::B),
            "d" | "D" => Ok(Part::D),
            other => Err(Error::UnknownPart(other.to_string())),
        }
    }
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Part::A => "a",
            Part::B => "b",
            Part::D => "d",
        })
    }
}

/// Per-vertex values of an energy measure (the mass of each singleton).
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyMeasure {
    pub part: Part,
    pub values: Vec<f64>,
}

impl EnergyMeasure {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `sum_x f(x) mu({x})`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.values.iter().zip(f).map(|(a, b)| a * b).sum()
    }

    /// Measure of a vertex set.
    pub fn of_set(&self, set: &[usize]) -> f64 {
        set.iter().map(|&x| self.values[x]).sum()
    }
}

pub fn energy_measure(g: &GraphForm, u: &[f64], part: Part) -> Result<EnergyMeasure> {
    check_vec(g, u)?;
    let values = match part {
        Part::A => u.iter().zip(g.killing()).map(|(a, k)| a * a * k).collect(),
        Part::B | Part::D => jump_measure(g, u, u),
    };
    Ok(EnergyMeasure { part, values })
}

/// Bilinear jump measure `mu^(b)(u, v)(x) = sum_y j (u(x)-u(y)) (v(x)-v(y))`.
pub fn energy_measure_bilinear(g: &GraphForm, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    check_vec(g, u)?;
    check_vec(g, v)?;
    Ok(jump_measure(g, u, v))
}

fn jump_measure(g: &GraphForm, u: &[f64], v: &[f64]) -> Vec<f64> {
    (0..g.n())
        .map(|x| {
            g.neighbors(x)
                .iter()
                .map(|&(y, w)| w * (u[x] - u[y]) * (v[x] - v[y]))
                .sum()
        })
        .collect()
}

/// Sparse ordered-pair entries of `Γ(u, v)(x, y) = j (u(x)-u(y)) (v(x)-v(y))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaMatrix {
    pub entries: Vec<(usize, usize, f64)>,
}

impl GammaMatrix {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.entries
            .iter()
            .find(|&&(a, b, _)| a == x && b == y)
            .map_or(0.0, |e| e.2)
    }
}

pub fn gamma_matrix(g: &GraphForm, u: &[f64], v: &[f64]) -> Result<GammaMatrix> {
    check_vec(g, u)?;
    check_vec(g, v)?;
    let mut entries = Vec::new();
    for x in 0..g.n() {
        for &(y, w) in g.neighbors(x) {
            entries.push((x, y, w * (u[x] - u[y]) * (v[x] - v[y])));
        }
    }
    Ok(GammaMatrix { entries })
}

/// `sum_{x != y} f(x, y) j (u(x)-u(y)) (v(x)-v(y))`.
pub fn gamma_integral<F>(g: &GraphForm, f: F, u: &[f64], v: &[f64]) -> Result<f64>
where
    F: Fn(usize, usize) -> f64,
{
    check_vec(g, u)?;
    check_vec(g, v)?;
    let mut total = 0.0;
    for x in 0..g.n() {
        for &(y, w) in g.neighbors(x) {
            let d = (u[x] - u[y]) * (v[x] - v[y]);
            if d != 0.0 {
                total += f(x, y) * w * d;
            }
        }
    }
    Ok(total)
}

/// Residual of the product rule and the magnitude it should be compared with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeibnizResidual {
    pub residual: f64,
    pub scale: f64,
}

/// `|∬ f dΓ(uv, w) - ∬ f u(x) dΓ(v, w) - ∬ f v(y) dΓ(u, w)|`.
///
/// `scale` is the sum of absolute values of all summands of the three integrals.
pub fn leibniz_residual<F>(g: &GraphForm, f: F, u: &[f64], v: &[f64], w: &[f64]) -> Result<LeibnizResidual>
where
    F: Fn(usize, usize) -> f64,
{
    for vec in [u, v, w] {
        check_vec(g, vec)?;
    }
    let mut diff = 0.0;
    let mut scale = 0.0;
    for x in 0..g.n() {
        for &(y, j) in g.neighbors(x) {
            let fw = f(x, y) * j * (w[x] - w[y]);
            let lhs = fw * (u[x] * v[x] - u[y] * v[y]);
            let first = fw * u[x] * (v[x] - v[y]);
            let second = fw * v[y] * (u[x] - u[y]);
            diff += lhs - first - second;
            scale += lhs.abs() + first.abs() + second.abs();
        }
    }
    Ok(LeibnizResidual {
        residual: diff.abs(),
        scale,
    })
}

/// Matrix `A` with `u^T A v = E(u, v) + sum nu u v`; `nu = None` means zero.
pub fn form_matrix(g: &GraphForm, nu: Option<&[f64]>) -> Result<DMatrix<f64>> {
    let n = g.n();
    if let Some(nu) = nu {
        check_vec(g, nu)?;
    }
    let mut a = DMatrix::zeros(n, n);
    for x in 0..n {
        let mut diag = g.killing()[x] + nu.map_or(0.0, |p| p[x]);
        for &(y, w) in g.neighbors(x) {
            diag += 2.0 * w;
            a[(x, y)] -= 2.0 * w;
        }
        a[(x, x)] += diag;
    }
    Ok(a)
}

/// `(Hu)(x) = (1/m(x)) [2 sum_y j (u(x) - u(y)) + (k(x) + nu(x)) u(x)]`.
pub fn generator_apply(g: &GraphForm, nu: Option<&[f64]>, u: &[f64]) -> Result<Vec<f64>> {
    check_vec(g, u)?;
    if let Some(nu) = nu {
        check_vec(g, nu)?;
    }
    Ok((0..g.n()).map(|x| generator_row(g, nu, u, x)).collect())
}

pub(crate) fn generator_row(g: &GraphForm, nu: Option<&[f64]>, u: &[f64], x: usize) -> f64 {
    let jump: f64 = g.neighbors(x).iter().map(|&(y, w)| w * (u[x] - u[y])).sum();
    let pot = g.killing()[x] + nu.map_or(0.0, |p| p[x]);
    (2.0 * jump + pot * u[x]) / g.mass()[x]
}

/// `M^(-1/2) A M^(-1/2)`, symmetric and similar to the generator.
pub fn generator_matrix(g: &GraphForm, nu: Option<&[f64]>) -> Result<DMatrix<f64>> {
    let mut a = form_matrix(g, nu)?;
    let s: Vec<f64> = g.mass().iter().map(|m| 1.0 / m.sqrt()).collect();
    let n = g.n();
    for j in 0..n {
        for i in 0..n {
            a[(i, j)] *= s[i] * s[j];
        }
    }
    Ok(a)
}

/// Value and minimizer of `inf { E(v) + ||v||^2 : v = 1 on A }`.
#[derive(Debug, Clone, PartialEq)]
pub struct Capacity {
    pub value: f64,
    pub minimizer: Vec<f64>,
}

/// Solves `(L + M) v = 0` off `set` with `v = 1` on `set`. The maximum
/// principle puts `v` in `[0, 1]`, so this is also the `1_A <= v` infimum.
pub fn capacity(g: &GraphForm, set: &[usize]) -> Result<Capacity> {
    let n = g.n();
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut fixed = vec![false; n];
    for &x in set {
        if x >= n {
            return Err(Error::InvalidParameter(format!("vertex {x} outside window")));
        }
        fixed[x] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&x| !fixed[x]).collect();
    let mut v = vec![1.0; n];
    if !free.is_empty() {
        let mut a = form_matrix(g, None)?;
        for x in 0..n {
            a[(x, x)] += g.mass()[x];
        }
        let k = free.len();
        let mut aff = DMatrix::zeros(k, k);
        let mut rhs = DVector::zeros(k);
        for (i, &x) in free.iter().enumerate() {
            for (j, &y) in free.iter().enumerate() {
                aff[(i, j)] = a[(x, y)];
            }
            rhs[i] = -(0..n).filter(|&y| fixed[y]).map(|y| a[(x, y)]).sum::<f64>();
        }
        let chol = aff
            .cholesky()
            .ok_or_else(|| Error::Solver("capacity system not positive definite".into()))?;
        let sol = chol.solve(&rhs);
        for (i, &x) in free.iter().enumerate() {
            v[x] = sol[i];
        }
    }
    let value = energy(g, None, &v, &v)? + norm_sq(g, &v);
    Ok(Capacity { value, minimizer: v })
}

/// Normal contractions: `T(0) = 0` and `|T(a) - T(b)| <= |a - b|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Contraction {
    Identity,
    /// Clamp to `[lo, hi]` with `lo <= 0 <= hi`.
    Clamp {
        lo: f64,
        hi: f64,
    },
    Abs,
    /// `t -> (t ∧ 1) ∨ 0`.
    UnitClamp,
}

impl Contraction {
    pub fn apply(&self, t: f64) -> f64 {
        match *self {
            Contraction::Identity => t,
            Contraction::Clamp { lo, hi } => t.clamp(lo, hi),
            Contraction::Abs => t.abs(),
            Contraction::UnitClamp => t.clamp(0.0, 1.0),
        }
    }

    fn check(&self) -> Result<()> {
        match *self {
            Contraction::Clamp { lo, hi } if !(lo <= 0.0 && 0.0 <= hi) => {
                Err(Error::InvalidParameter(format!("clamp [{lo}, {hi}] does not fix 0")))
            }
            _ => Ok(()),
        }
    }
}

/// `E(u) - E(T ∘ u)`; nonnegative for every Dirichlet form.
pub fn contraction_check(g: &GraphForm, u: &[f64], t: Contraction) -> Result<f64> {
    t.check()?;
    let tu: Vec<f64> = u.iter().map(|&x| t.apply(x)).collect();
    Ok(energy(g, None, u, u)? - energy(g, None, &tu, &tu)?)
}
