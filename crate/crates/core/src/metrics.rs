//! Pseudo-metrics on a window and the intrinsic-metric machinery built on them:
//! distance functions, cut-offs, row-sum and definitional checks, metrics from
//! Lipschitz budget sets, jump size, McShane extensions.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{energy_measure, Part};
use crate::error::{check_len, Error, Result};
use crate::graph_form::{degree_measure, fmt_num, GraphForm};
use crate::linalg::linear_fit;

/// Relative slack for exact identities and inequalities.
pub const REL_TOL: f64 = 1e-12;

/// Profile `f` applied to the Euclidean lattice distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Identity,
    /// `f(t) = t^beta ∧ t`.
    PowerCap {
        beta: f64,
    },
}

impl Profile {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Profile::Identity => t,
            Profile::PowerCap { beta } => t.powf(beta).min(t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PseudoMetric {
    /// Dense symmetric `n x n` table, row-major.
    Table { n: usize, values: Vec<f64> },
    /// `scale * f(|x - y|)` on lattice coordinates.
    Coordinate {
        coords: Vec<Vec<i64>>,
        scale: f64,
        profile: Profile,
    },
    /// Shortest-path distance for symmetric edge budgets; may be infinite.
    Path { budgets: Vec<Vec<(usize, f64)>> },
}

/// `a - b` with `inf - inf = 0`.
#[inline]
fn gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        a - b
    }
}

impl PseudoMetric {
    pub fn table_from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; n * n];
        for x in 0..n {
            for y in 0..n {
                values[x * n + y] = if x == y { 0.0 } else { f(x, y) };
            }
        }
        PseudoMetric::Table { n, values }
    }

    /// `ϱ(x, y) = 1` iff `x != y` and `center ∈ {x, y}`.
    pub fn star(n: usize, center: usize) -> Self {
        Self::table_from_fn(n, |x, y| if x == center || y == center { 1.0 } else { 0.0 })
    }

    pub fn zero(n: usize) -> Self {
        Self::table_from_fn(n, |_, _| 0.0)
    }

    /// `scale * f(|x - y|)` using the coordinates stored on `g`.
    pub fn coordinate(g: &GraphForm, scale: f64, profile: Profile) -> Result<Self> {
        let coords = g.coords().ok_or(Error::MissingCoordinates)?.to_vec();
        Ok(PseudoMetric::Coordinate { coords, scale, profile })
    }

    /// `|x - y| / sqrt(2d)` on a lattice window.
    pub fn lattice_intrinsic(g: &GraphForm) -> Result<Self> {
        let d = g
            .coords()
            .and_then(|c| c.first())
            .map(|c| c.len())
            .ok_or(Error::MissingCoordinates)?;
        Self::coordinate(g, 1.0 / ((2 * d) as f64).sqrt(), Profile::Identity)
    }

    pub fn n(&self) -> usize {
        match self {
            PseudoMetric::Table { n, .. } => *n,
            PseudoMetric::Coordinate { coords, .. } => coords.len(),
            PseudoMetric::Path { budgets } => budgets.len(),
        }
    }

    pub fn dist(&self, x: usize, y: usize) -> f64 {
        match self {
            PseudoMetric::Table { n, values } => values[x * n + y],
            PseudoMetric::Coordinate { coords, scale, profile } => {
                if x == y {
                    return 0.0;
                }
                let t: f64 = coords[x]
                    .iter()
                    .zip(&coords[y])
                    .map(|(a, b)| ((a - b) as f64).powi(2))
                    .sum::<f64>()
                    .sqrt();
                scale * profile.eval(t)
            }
            PseudoMetric::Path { budgets } => dijkstra(budgets, &[x], Some(y))[y],
        }
    }

    /// `ϱ(x, ·)`.
    pub fn row(&self, x: usize) -> Vec<f64> {
        match self {
            PseudoMetric::Path { budgets } => dijkstra(budgets, &[x], None),
            _ => (0..self.n()).map(|y| self.dist(x, y)).collect(),
        }
    }

    pub fn to_table(&self) -> PseudoMetric {
        match self {
            PseudoMetric::Table { .. } => self.clone(),
            _ => {
                let n = self.n();
                let mut values = Vec::with_capacity(n * n);
                for x in 0..n {
                    values.extend(self.row(x));
                }
                PseudoMetric::Table { n, values }
            }
        }
    }

    /// `ϱ ∧ cap`, as a table.
    pub fn truncated(&self, cap: f64) -> PseudoMetric {
        let n = self.n();
        let t = self.to_table();
        let PseudoMetric::Table { values, .. } = t else {
            unreachable!()
        };
        PseudoMetric::Table {
            n,
            values: values.into_iter().map(|v| v.min(cap)).collect(),
        }
    }

    /// Scales every distance by `t >= 0`.
    pub fn scaled(&self, t: f64) -> PseudoMetric {
        match self {
            PseudoMetric::Table { n, values } => PseudoMetric::Table {
                n: *n,
                values: values.iter().map(|v| v * t).collect(),
            },
            PseudoMetric::Coordinate { coords, scale, profile } => PseudoMetric::Coordinate {
                coords: coords.clone(),
                scale: scale * t,
                profile: *profile,
            },
            PseudoMetric::Path { budgets } => PseudoMetric::Path {
                budgets: budgets
                    .iter()
                    .map(|r| r.iter().map(|&(y, w)| (y, w * t)).collect())
                    .collect(),
            },
        }
    }

    /// First violated pseudo-metric axiom, checked exhaustively for `n <= 300`
    /// and on `10^5` seeded random triples otherwise.
    pub fn check_axioms(&self, seed: u64) -> Option<AxiomViolation> {
        let n = self.n();
        let t = if n <= 300 || matches!(self, PseudoMetric::Path { .. }) {
            self.to_table()
        } else {
            self.clone()
        };
        let d = |x: usize, y: usize| t.dist(x, y);
        let tol = |v: f64| REL_TOL * v.abs().max(1.0);
        let check_triple = |x: usize, y: usize, z: usize| -> Option<AxiomViolation> {
            let (xy, xz, zy) = (d(x, y), d(x, z), d(z, y));
            if xy > xz + zy + tol(xy) {
                Some(AxiomViolation::Triangle {
                    x,
                    y,
                    z,
                    excess: xy - xz - zy,
                })
            } else {
                None
            }
        };
        for x in 0..n {
            if d(x, x) != 0.0 {
                return Some(AxiomViolation::Diagonal { x, value: d(x, x) });
            }
        }
        if n <= 300 {
            for x in 0..n {
                for y in 0..n {
                    let (a, b) = (d(x, y), d(y, x));
                    if !(a >= 0.0) || (a - b).abs() > tol(a) {
                        return Some(AxiomViolation::Symmetry { x, y });
                    }
                }
            }
            for x in 0..n {
                for y in 0..n {
                    for z in 0..n {
                        if let Some(v) = check_triple(x, y, z) {
                            return Some(v);
                        }
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..100_000 {
                let (x, y, z) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
                let (a, b) = (d(x, y), d(y, x));
                if !(a >= 0.0) || (a - b).abs() > tol(a) {
                    return Some(AxiomViolation::Symmetry { x, y });
                }
                if let Some(v) = check_triple(x, y, z) {
                    return Some(v);
                }
            }
        }
        None
    }

    /// Dense lower-triangular dump: header `n`, then row `i` lists `ϱ(i, 0..i)`.
    pub fn dump(&self) -> String {
        let n = self.n();
        let mut s = format!("{n}\n");
        for x in 1..n {
            let row = self.row(x);
            let line: Vec<String> = row[..x].iter().map(|&v| fmt_num(v)).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AxiomViolation {
    Diagonal { x: usize, value: f64 },
    Symmetry { x: usize, y: usize },
    Triangle { x: usize, y: usize, z: usize, excess: f64 },
}

#[derive(Copy, Clone, PartialEq)]
struct State {
    cost: f64,
    node: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source Dijkstra; stops early once `target` is settled.
fn dijkstra(adj: &[Vec<(usize, f64)>], sources: &[usize], target: Option<usize>) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = 0.0;
        heap.push(State { cost: 0.0, node: s });
    }
    while let Some(State { cost, node }) = heap.pop() {
        if cost > dist[node] {
            continue;
        }
        if Some(node) == target {
            break;
        }
        for &(next, w) in &adj[node] {
            let c = cost + w;
            if c < dist[next] {
                dist[next] = c;
                heap.push(State { cost: c, node: next });
            }
        }
    }
    dist
}

/// `ϱ_A(x) = min_{y ∈ A} ϱ(x, y)`.
pub fn dist_to_set(rho: &PseudoMetric, set: &[usize]) -> Result<Vec<f64>> {
    if set.is_empty() {
        return Err(Error::EmptySet);
    }
    let n = rho.n();
    if let Some(&bad) = set.iter().find(|&&x| x >= n) {
        return Err(Error::InvalidParameter(format!("vertex {bad} outside window")));
    }
    Ok(match rho {
        PseudoMetric::Path { budgets } => dijkstra(budgets, set, None),
        PseudoMetric::Coordinate { coords, scale, profile } if coords.first().is_some_and(|c| c.len() == 1) => {
            // Profiles are nondecreasing, so the nearest point of the set wins.
            let mut pts: Vec<i64> = set.iter().map(|&y| coords[y][0]).collect();
            pts.sort_unstable();
            pts.dedup();
            coords
                .iter()
                .map(|c| {
                    let c = c[0];
                    let i = pts.partition_point(|&p| p < c);
                    let near = [i.checked_sub(1), (i < pts.len()).then_some(i)]
                        .into_iter()
                        .flatten()
                        .map(|k| (pts[k] - c).unsigned_abs())
                        .min()
                        .expect("set is nonempty");
                    if near == 0 {
                        0.0
                    } else {
                        scale * profile.eval(near as f64)
                    }
                })
                .collect()
        }
        _ => (0..n)
            .map(|x| set.iter().map(|&y| rho.dist(x, y)).fold(f64::INFINITY, f64::min))
            .collect(),
    })
}

/// `ϱ_{E^c}`, or all-infinite when `E` is the whole window.
fn dist_to_complement(rho: &PseudoMetric, set: &[usize]) -> Result<Vec<f64>> {
    let comp = complement(rho.n(), set);
    if comp.is_empty() {
        Ok(vec![f64::INFINITY; rho.n()])
    } else {
        dist_to_set(rho, &comp)
    }
}

pub fn complement(n: usize, set: &[usize]) -> Vec<usize> {
    let mut inside = vec![false; n];
    for &x in set {
        inside[x] = true;
    }
    (0..n).filter(|&x| !inside[x]).collect()
}

/// `η_{E,a} = (1 - ϱ_E / a)^+`.
pub fn cutoff(rho: &PseudoMetric, set: &[usize], a: f64) -> Result<Vec<f64>> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("cut-off width {a} must be > 0")));
    }
    Ok(dist_to_set(rho, set)?
        .into_iter()
        .map(|d| (1.0 - d / a).max(0.0))
        .collect())
}

/// `B_r(E) = {x : ϱ_E(x) <= r}`.
pub fn ball(rho: &PseudoMetric, set: &[usize], r: f64) -> Result<Vec<usize>> {
    let d = dist_to_set(rho, set)?;
    Ok((0..rho.n()).filter(|&x| within(d[x], r)).collect())
}

/// `d <= r` up to relative `1e-12`, so radii built from the same constants
/// as the distances are not lost to rounding.
#[inline]
pub fn within(d: f64, r: f64) -> bool {
    d <= r + REL_TOL * r.abs()
}

/// `A_r(E) = B_r(E) ∩ B_r(E^c)`.
pub fn annulus(rho: &PseudoMetric, set: &[usize], r: f64) -> Result<Vec<usize>> {
    let d_in = dist_to_set(rho, set)?;
    let d_out = dist_to_complement(rho, set)?;
    Ok((0..rho.n())
        .filter(|&x| within(d_in[x], r) && within(d_out[x], r))
        .collect())
}

/// Distances `ϱ(x, y)` aligned with `g.neighbors(x)`.
fn neighbor_dists(g: &GraphForm, rho: &PseudoMetric, x: usize) -> Vec<f64> {
    match rho {
        PseudoMetric::Path { .. } => {
            let row = rho.row(x);
            g.neighbors(x).iter().map(|&(y, _)| row[y]).collect()
        }
        _ => g.neighbors(x).iter().map(|&(y, _)| rho.dist(x, y)).collect(),
    }
}

/// `sum_y ϱ(x, y)^2 j(x, y)` for every vertex.
pub fn rowsums(g: &GraphForm, rho: &PseudoMetric) -> Result<Vec<f64>> {
    check_len(g.n(), rho.n())?;
    Ok((0..g.n())
        .map(|x| {
            neighbor_dists(g, rho, x)
                .iter()
                .zip(g.neighbors(x))
                .map(|(d, &(_, w))| if w == 0.0 { 0.0 } else { d * d * w })
                .sum()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowsumReport {
    /// `m(x) - sum_y ϱ(x, y)^2 j(x, y)`.
    pub slack: Vec<f64>,
    pub interior_min: f64,
    pub interior_argmin: Option<usize>,
    /// Smallest slack over boundary vertices; window truncation removed jump
    /// mass there, so it does not enter the verdict.
    pub boundary_min: Option<f64>,
    pub pass: bool,
}

/// Sufficient row-sum criterion `sum_y ϱ^2 j <= m(x)` at interior vertices.
pub fn intrinsic_rowsum_check(g: &GraphForm, rho: &PseudoMetric) -> Result<RowsumReport> {
    let sums = rowsums(g, rho)?;
    let slack: Vec<f64> = g.mass().iter().zip(&sums).map(|(m, s)| m - s).collect();
    let mut interior_min = f64::INFINITY;
    let mut interior_argmin = None;
    let mut boundary_min: Option<f64> = None;
    let mut pass = true;
    for x in 0..g.n() {
        if g.is_interior(x) {
            if slack[x] < interior_min {
                interior_min = slack[x];
                interior_argmin = Some(x);
            }
            if slack[x] < -REL_TOL * g.mass()[x] {
                pass = false;
            }
        } else {
            boundary_min = Some(boundary_min.map_or(slack[x], |b| b.min(slack[x])));
        }
    }
    Ok(RowsumReport {
        slack,
        interior_min,
        interior_argmin,
        boundary_min,
        pass,
    })
}

/// Witness measures `m_b + m_c <= m`; `m_c` vanishes on graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct IntrinsicWitness {
    pub m_b: Vec<f64>,
    pub m_c: Vec<f64>,
}

impl IntrinsicWitness {
    pub fn full_mass(g: &GraphForm) -> Self {
        IntrinsicWitness {
            m_b: g.mass().to_vec(),
            m_c: vec![0.0; g.n()],
        }
    }

    pub fn validate(&self, g: &GraphForm) -> Result<()> {
        check_len(g.n(), self.m_b.len())?;
        check_len(g.n(), self.m_c.len())?;
        for x in 0..g.n() {
            if self.m_b[x] < 0.0 || self.m_c[x] < 0.0 {
                return Err(Error::InvalidParameter(format!("negative witness at vertex {x}")));
            }
            if self.m_c[x] != 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "m_c must vanish on graphs (vertex {x})"
                )));
            }
            if self.m_b[x] + self.m_c[x] > g.mass()[x] * (1.0 + REL_TOL) {
                return Err(Error::InvalidParameter(format!("m_b + m_c > m at vertex {x}")));
            }
        }
        Ok(())
    }
}

/// One `(A, T)` pair of the definitional check.
#[derive(Debug, Clone, PartialEq)]
pub struct DefinitionalSample {
    pub set: Vec<usize>,
    pub cap: f64,
}

/// All singletons, 50 random sets, each with `T ∈ {∞, median distance, small}`.
pub fn default_samples(g: &GraphForm, rho: &PseudoMetric, seed: u64) -> Vec<DefinitionalSample> {
    let n = g.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dists: Vec<f64> = (0..2000.min(n * n))
        .map(|_| rho.dist(rng.random_range(0..n), rng.random_range(0..n)))
        .filter(|d| *d > 0.0 && d.is_finite())
        .collect();
    dists.sort_by(f64::total_cmp);
    let median = dists.get(dists.len() / 2).copied().unwrap_or(1.0);
    let caps = [f64::INFINITY, median, 1e-3 * median];
    let mut sets: Vec<Vec<usize>> = (0..n).map(|x| vec![x]).collect();
    for _ in 0..50 {
        let size = rng.random_range(1..=n.min(8));
        let mut s = sample(&mut rng, n, size).into_vec();
        s.sort_unstable();
        sets.push(s);
    }
    sets.into_iter()
        .flat_map(|set| {
            caps.iter()
                .map(move |&cap| DefinitionalSample { set: set.clone(), cap })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefinitionalReport {
    /// `max (mu^(b)(ϱ_A ∧ T)(x) - m_b(x))` over samples and interior vertices.
    pub worst_violation: f64,
    pub vertex: Option<usize>,
    pub sample: Option<usize>,
    pub samples_checked: usize,
    pub pass: bool,
}

/// Hunts for `(A, T)` with `mu^(b)(ϱ_A ∧ T) > m_b` at an interior vertex.
pub fn definitional_check(
    g: &GraphForm,
    rho: &PseudoMetric,
    witness: &IntrinsicWitness,
    samples: &[DefinitionalSample],
) -> Result<DefinitionalReport> {
    witness.validate(g)?;
    check_len(g.n(), rho.n())?;
    let scale = g.mass().iter().cloned().fold(0.0, f64::max);
    let mut worst = f64::NEG_INFINITY;
    let mut vertex = None;
    let mut sample_idx = None;
    for (k, s) in samples.iter().enumerate() {
        let u: Vec<f64> = dist_to_set(rho, &s.set)?.into_iter().map(|d| d.min(s.cap)).collect();
        for x in 0..g.n() {
            if !g.is_interior(x) {
                continue;
            }
            let mu: f64 = g
                .neighbors(x)
                .iter()
                .map(|&(y, w)| {
                    let d = gap(u[x], u[y]);
                    w * d * d
                })
                .sum();
            let excess = mu - witness.m_b[x];
            if excess > worst {
                worst = excess;
                vertex = Some(x);
                sample_idx = Some(k);
            }
        }
    }
    Ok(DefinitionalReport {
        worst_violation: worst,
        vertex,
        sample: sample_idx,
        samples_checked: samples.len(),
        pass: worst <= REL_TOL * scale,
    })
}

/// Symmetric per-edge Lipschitz budgets on the support of `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeBudgetSet {
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl EdgeBudgetSet {
    pub fn uniform(g: &GraphForm, w: f64) -> Self {
        Self::from_rule(g, |_, _, _| w)
    }

    /// Budget on `x ~ y` is `min(rule(x, y, j), rule(y, x, j))`.
    pub fn from_rule(g: &GraphForm, rule: impl Fn(usize, usize, f64) -> f64) -> Self {
        let rows = (0..g.n())
            .map(|x| {
                g.neighbors(x)
                    .iter()
                    .filter(|&&(_, j)| j > 0.0)
                    .map(|&(y, j)| (y, rule(x, y, j).min(rule(y, x, j))))
                    .collect()
            })
            .collect();
        EdgeBudgetSet { rows }
    }

    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        self.rows[x].iter().find(|&&(z, _)| z == y).map(|e| e.1)
    }
}

/// `(u(x) - u(y))^2 <= min(1, m(x) / m'(x))` for all `x ~ y`.
pub fn budgets_m1(g: &GraphForm) -> EdgeBudgetSet {
    let deg = degree_measure(g);
    let m = g.mass();
    EdgeBudgetSet::from_rule(g, |x, _, _| (1.0f64).min(m[x] / deg[x]).sqrt())
}

/// `(u(x) - u(y))^2 <= min(1, m(x) / (j(x, y) deg(x)))` for all `x ~ y`.
pub fn budgets_m2(g: &GraphForm) -> EdgeBudgetSet {
    let count: Vec<f64> = (0..g.n())
        .map(|x| g.neighbors(x).iter().filter(|&&(_, j)| j > 0.0).count() as f64)
        .collect();
    let m = g.mass();
    EdgeBudgetSet::from_rule(g, |x, _, j| (1.0f64).min(m[x] / (j * count[x])).sqrt())
}

/// `sup { f(x) - f(y) : |f(a) - f(b)| <= w(a, b) on edges }`, i.e. the
/// shortest-path metric of the budgets.
pub fn budget_metric(budgets: &EdgeBudgetSet) -> PseudoMetric {
    PseudoMetric::Path {
        budgets: budgets.rows.clone(),
    }
}

/// Combinatorial graph distance `d_g` on the support of `j`.
pub fn graph_distance(g: &GraphForm) -> PseudoMetric {
    budget_metric(&EdgeBudgetSet::uniform(g, 1.0))
}

/// Lower factor `min(1, inf_x sqrt(m(x) / m'(x)))` with `factor * d_g <= ϱ^{M1} <= d_g`.
pub fn m1_sandwich_factor(g: &GraphForm) -> f64 {
    let deg = degree_measure(g);
    g.mass()
        .iter()
        .zip(&deg)
        .filter(|(_, &d)| d > 0.0)
        .map(|(m, d)| (m / d).sqrt())
        .fold(1.0, f64::min)
}

/// `max { ϱ(x, y) : j(x, y) > 0 }` over the window.
pub fn jump_size(g: &GraphForm, rho: &PseudoMetric) -> Result<f64> {
    check_len(g.n(), rho.n())?;
    let mut s: f64 = 0.0;
    for x in 0..g.n() {
        for (d, &(_, w)) in neighbor_dists(g, rho, x).iter().zip(g.neighbors(x)) {
            if w > 0.0 {
                s = s.max(*d);
            }
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "trend", rename_all = "snake_case")]
pub enum JumpTrend {
    /// Window values stabilized at the given jump size.
    Finite { value: f64 },
    /// Window values keep growing with the window.
    Infinite,
    /// Neither stable nor strictly growing.
    Undetermined,
}

/// Classifies window jump sizes listed in order of increasing window.
pub fn classify_jump_trend(values: &[f64]) -> JumpTrend {
    if values.len() < 2 {
        return JumpTrend::Undetermined;
    }
    let last = values[values.len() - 1];
    let prev = values[values.len() - 2];
    if (last - prev).abs() <= REL_TOL * last.abs().max(1.0) {
        JumpTrend::Finite { value: last }
    } else if values.windows(2).all(|w| w[1] > w[0]) {
        JumpTrend::Infinite
    } else {
        JumpTrend::Undetermined
    }
}

/// Pointwise maximum as a table.
pub fn max_combine(a: &PseudoMetric, b: &PseudoMetric) -> Result<PseudoMetric> {
    check_len(a.n(), b.n())?;
    let (ta, tb) = (a.to_table(), b.to_table());
    Ok(PseudoMetric::table_from_fn(a.n(), |x, y| {
        ta.dist(x, y).max(tb.dist(x, y))
    }))
}

/// McShane extension `u(x) = min_i (g_i + ϱ(x, p_i))`.
pub fn mcshane_extension(rho: &PseudoMetric, anchors: &[(usize, f64)]) -> Result<Vec<f64>> {
    if anchors.is_empty() {
        return Err(Error::EmptySet);
    }
    let rows: Vec<Vec<f64>> = anchors.iter().map(|&(p, _)| rho.row(p)).collect();
    for (i, &(p, gp)) in anchors.iter().enumerate() {
        for &(q, gq) in &anchors[i + 1..] {
            let d = rows[i][q];
            if (gp - gq).abs() > d + REL_TOL * d.abs().max(1.0) {
                return Err(Error::InadmissibleAnchors {
                    first: p,
                    second: q,
                    gap: (gp - gq).abs(),
                    dist: d,
                });
            }
        }
    }
    Ok((0..rho.n())
        .map(|x| {
            anchors
                .iter()
                .zip(&rows)
                .map(|(&(_, gv), row)| gv + row[x])
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

/// Random admissible anchors: each new value is drawn inside the interval the
/// previous anchors allow.
pub fn random_anchors<R: Rng>(rho: &PseudoMetric, count: usize, rng: &mut R) -> Vec<(usize, f64)> {
    let n = rho.n();
    let count = count.min(n).max(1);
    let points = sample(rng, n, count).into_vec();
    let mut anchors: Vec<(usize, f64)> = Vec::with_capacity(count);
    for p in points {
        let row = rho.row(p);
        let lo = anchors
            .iter()
            .map(|&(q, g)| g - row[q])
            .fold(f64::NEG_INFINITY, f64::max);
        let hi = anchors.iter().map(|&(q, g)| g + row[q]).fold(f64::INFINITY, f64::min);
        let value = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => lo + (hi - lo) * rng.random::<f64>(),
            (true, false) => lo + rng.random::<f64>(),
            (false, true) => hi - rng.random::<f64>(),
            (false, false) => rng.random_range(-1.0..1.0),
        };
        anchors.push((p, value));
    }
    anchors
}

/// Random 1-Lipschitz function: McShane extension of seeded random anchors.
pub fn lipschitz_sample(rho: &PseudoMetric, anchors: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_anchors(rho, anchors, &mut rng);
    mcshane_extension(rho, &a)
}

/// `max |ϱ^{(M(ϱ))} - ϱ|` where `M(ϱ)` is the set of all 1-Lipschitz
/// functions. The supremum is the path closure of the table; near-ties within
/// relative `1e-12` are not counted as shortcuts, so a genuine pseudo-metric
/// returns exactly 0.
pub fn roundtrip_check(rho: &PseudoMetric) -> f64 {
    let n = rho.n();
    let t = rho.to_table();
    let PseudoMetric::Table { mut values, .. } = t else {
        unreachable!()
    };
    let orig = values.clone();
    for z in 0..n {
        for x in 0..n {
            let xz = values[x * n + z];
            if !xz.is_finite() {
                continue;
            }
            for y in 0..n {
                let via = xz + values[z * n + y];
                let cur = values[x * n + y];
                if via < cur - REL_TOL * cur.abs().max(1.0) {
                    values[x * n + y] = via;
                }
            }
        }
    }
    orig.iter()
        .zip(&values)
        .map(|(a, b)| gap(*a, *b).abs())
        .fold(0.0, f64::max)
}

/// Smallest scale `c` with `sum_y (c f(|x-y|))^2 j(x, y) <= m(x)` at every
/// interior vertex.
pub fn auto_scale(g: &GraphForm, profile: Profile) -> Result<f64> {
    let unit = PseudoMetric::coordinate(g, 1.0, profile)?;
    let sums = rowsums(g, &unit)?;
    let worst = g
        .interior_vertices()
        .into_iter()
        .map(|x| sums[x] / g.mass()[x])
        .fold(0.0, f64::max);
    if worst <= 0.0 {
        return Err(Error::InvalidParameter("profile has zero row sums".into()));
    }
    Ok(1.0 / worst.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffBoundsReport {
    /// `max a^2 mu^(d)(η)(x) / m(x)` over interior vertices; at most 1.
    pub max_scaled_ratio: f64,
    pub cutoff_bound_holds: bool,
    /// Largest `mu^(d)(η)(x)` at an interior vertex outside `A_{s+a}(E)`.
    pub outside_annulus_max: f64,
    pub annulus_bound_holds: bool,
    pub energy_measure: Vec<f64>,
    pub annulus: Vec<usize>,
}

/// `mu^(d)(η_{E,a}) <= m / a^2` and `a^2 mu^(d)(η) <= 1_{A_{s+a}(E)} m`.
pub fn cutoff_energy_bounds(
    g: &GraphForm,
    rho: &PseudoMetric,
    set: &[usize],
    a: f64,
    s: f64,
) -> Result<CutoffBoundsReport> {
    check_len(g.n(), rho.n())?;
    let eta = cutoff(rho, set, a)?;
    let mu = energy_measure(g, &eta, Part::D)?.values;
    let ann = annulus(rho, set, s + a)?;
    let mut in_ann = vec![false; g.n()];
    for &x in &ann {
        in_ann[x] = true;
    }
    let mut max_ratio: f64 = 0.0;
    let mut outside: f64 = 0.0;
    let mut annulus_ok = true;
    for x in g.interior_vertices() {
        let r = a * a * mu[x] / g.mass()[x];
        max_ratio = max_ratio.max(r);
        if !in_ann[x] {
            outside = outside.max(mu[x]);
        }
        let bound = if in_ann[x] { 1.0 } else { 0.0 };
        if r > bound + REL_TOL {
            annulus_ok = false;
        }
    }
    Ok(CutoffBoundsReport {
        max_scaled_ratio: max_ratio,
        cutoff_bound_holds: max_ratio <= 1.0 + REL_TOL,
        outside_annulus_max: outside,
        annulus_bound_holds: annulus_ok,
        energy_measure: mu,
        annulus: ann,
    })
}

/// Energy measure of a cut-off outside its support, as a function of the
/// lattice distance `δ` to that support, on one side of a 1-d window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecaySide {
    pub delta: Vec<f64>,
    pub measure: Vec<f64>,
    /// Fitted slope of `ln mu^(d)(η)` against `δ`.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffDecay {
    pub right: DecaySide,
    pub left: DecaySide,
}

/// Decay of `mu^(d)(η_{E,a})(x)` away from `supp η` on a 1-d window, using
/// vertices at lattice distance at least `min_delta` from the support.
pub fn cutoff_decay_profile(
    g: &GraphForm,
    rho: &PseudoMetric,
    set: &[usize],
    a: f64,
    min_delta: i64,
) -> Result<CutoffDecay> {
    let coords = g.coords().ok_or(Error::MissingCoordinates)?;
    if coords.first().map_or(true, |c| c.len() != 1) {
        return Err(Error::InvalidParameter("decay profile needs a 1-d window".into()));
    }
    let eta = cutoff(rho, set, a)?;
    let mu = energy_measure(g, &eta, Part::D)?.values;
    let supp: Vec<i64> = (0..g.n()).filter(|&x| eta[x] > 0.0).map(|x| coords[x][0]).collect();
    let (lo, hi) = (
        supp.iter().min().copied().ok_or(Error::EmptySet)?,
        *supp.iter().max().unwrap(),
    );
    let side = |right: bool| {
        let mut pts: Vec<(f64, f64)> = (0..g.n())
            .filter_map(|x| {
                let c = coords[x][0];
                let delta = if right { c - hi } else { lo - c };
                (delta >= min_delta && mu[x] > 0.0).then_some((delta as f64, mu[x]))
            })
            .collect();
        pts.sort_by(|p, q| p.0.total_cmp(&q.0));
        let delta: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let measure: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let logs: Vec<f64> = measure.iter().map(|m| m.ln()).collect();
        let slope = linear_fit(&delta, &logs).map(|f| f.0);
        DecaySide { delta, measure, slope }
    };
    Ok(CutoffDecay {
        right: side(true),
        left: side(false),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SetRowsumReport {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `sum_{x ∈ E} sum_y ϱ(x, y)^2 j(x, y) <= m_b(E)`.
pub fn set_rowsum_check(
    g: &GraphForm,
    rho: &PseudoMetric,
    witness: &IntrinsicWitness,
    set: &[usize],
) -> Result<SetRowsumReport> {
    witness.validate(g)?;
    let sums = rowsums(g, rho)?;
    let lhs: f64 = set.iter().map(|&x| sums[x]).sum();
    let rhs: f64 = set.iter().map(|&x| witness.m_b[x]).sum();
    Ok(SetRowsumReport {
        lhs,
        rhs,
        pass: lhs <= rhs + REL_TOL * rhs.abs().max(1.0),
    })
}
