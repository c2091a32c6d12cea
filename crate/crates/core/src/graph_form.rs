//! Finite windows of weighted graphs carrying a non-local Dirichlet form.
//!
//! A [`GraphForm`] stores masses `m`, symmetric jump weights `j`, killing
//! weights `k`, and an interior flag per vertex. Jump weights are stored as
//! weights, not as densities against `m x m`, so every double sum in the crate
//! reads `sum_{x != y} j(x, y) (...)` over ordered pairs.
//!
//! The window is a truncation of a possibly infinite graph. `tail_bound(x)`
//! bounds the jump mass that the truncation removed from row `x`; vertices
//! whose tail is below the configured tolerance are *interior*, and every
//! verdict elsewhere in the crate is taken over interior vertices only.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tail tolerance for the interior rule of long-range kernels.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-8;

/// How interior vertices are selected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteriorRule {
    /// interior(x) iff tail_bound(x) <= tolerance.
    Tolerance(f64),
    /// interior(x) iff every coordinate is at least `margin` lattice steps
    /// away from the window edge.
    Margin(usize),
}

impl Default for InteriorRule {
    fn default() -> Self {
        InteriorRule::Tolerance(DEFAULT_TAIL_TOLERANCE)
    }
}

fn one() -> f64 {
    1.0
}

/// Parameter carrier for the model catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Nearest-neighbour lattice on `Z^d ∩ [-R, R]^d`.
    Lattice {
        dim: usize,
        radius: usize,
        #[serde(default = "one")]
        weight: f64,
        #[serde(default = "one")]
        mass: f64,
        #[serde(default)]
        killing: f64,
        #[serde(default)]
        interior: InteriorRule,
    },
    /// One-dimensional power-law kernel `j(x, y) = |x - y|^(-1 - alpha)`.
    Powerlaw {
        radius: usize,
        alpha: f64,
        #[serde(default)]
        interior: InteriorRule,
    },
    /// One-dimensional exponential kernel: `c` on nearest neighbours and
    /// `c exp(-beta |x - y|)` beyond.
    Exponential {
        radius: usize,
        beta: f64,
        #[serde(default = "one")]
        c: f64,
        #[serde(default)]
        interior: InteriorRule,
    },
    /// Two hubs `a1, a2` joined to every `b_n`, each `b_n` carrying a leaf `c_n`.
    TopoExample { n: usize },
    /// `X = {1, 2, 3}`, unit weights on `{1,2}` and `{2,3}`.
    ThreePoint,
    /// Grid on `[-1, 1]` with jumps only between mirror points `x` and `-x`.
    Mirror { n: usize },
    /// Arbitrary graph given by masses and an undirected edge list.
    Explicit {
        mass: Vec<f64>,
        #[serde(default)]
        killing: Option<Vec<f64>>,
        edges: Vec<(usize, usize, f64)>,
        #[serde(default)]
        interior: Option<Vec<bool>>,
    },
}

impl ModelSpec {
    pub fn lattice(dim: usize, radius: usize) -> Self {
        ModelSpec::Lattice {
            dim,
            radius,
            weight: 1.0,
            mass: 1.0,
            killing: 0.0,
            interior: InteriorRule::default(),
        }
    }

    pub fn powerlaw(radius: usize, alpha: f64, interior: InteriorRule) -> Self {
        ModelSpec::Powerlaw {
            radius,
            alpha,
            interior,
        }
    }

    pub fn exponential(radius: usize, beta: f64, interior: InteriorRule) -> Self {
        ModelSpec::Exponential {
            radius,
            beta,
            c: 1.0,
            interior,
        }
    }

    /// The same model with a different window radius, if the kind has one.
    pub fn with_radius(&self, new_radius: usize) -> Option<Self> {
        let mut spec = self.clone();
        match &mut spec {
            ModelSpec::Lattice { radius, .. }
            | ModelSpec::Powerlaw { radius, .. }
            | ModelSpec::Exponential { radius, .. } => {
                *radius = new_radius;
                Some(spec)
            }
            _ => None,
        }
    }

    pub fn radius(&self) -> Option<usize> {
        match self {
            ModelSpec::Lattice { radius, .. }
            | ModelSpec::Powerlaw { radius, .. }
            | ModelSpec::Exponential { radius, .. } => Some(*radius),
            _ => None,
        }
    }

    /// Lattice dimension of models that carry coordinates.
    pub fn dim(&self) -> Option<usize> {
        match self {
            ModelSpec::Lattice { dim, .. } => Some(*dim),
            ModelSpec::Powerlaw { .. } | ModelSpec::Exponential { .. } => Some(1),
            _ => None,
        }
    }

    fn validate_params(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        let check_rule = |rule: &InteriorRule| match rule {
            InteriorRule::Tolerance(t) if !(*t >= 0.0 && t.is_finite()) => Err(Error::InvalidParameter(format!(
                "tail tolerance {t} must be finite and >= 0"
            ))),
            _ => Ok(()),
        };
        match self {
            ModelSpec::Lattice {
                dim,
                radius,
                weight,
                mass,
                killing,
                interior,
            } => {
                if !(1..=3).contains(dim) {
                    return bad(format!("lattice dimension {dim} not in {{1, 2, 3}}"));
                }
                if *radius < 1 {
                    return bad("window radius must be >= 1".into());
                }
                if !(*weight > 0.0 && weight.is_finite()) {
                    return bad(format!("edge weight {weight} must be positive"));
                }
                if !(*mass > 0.0 && mass.is_finite()) {
                    return bad(format!("mass {mass} must be positive"));
                }
                if !(*killing >= 0.0 && killing.is_finite()) {
                    return bad(format!("killing {killing} must be >= 0"));
                }
                check_rule(interior)
            }
            ModelSpec::Powerlaw {
                radius,
                alpha,
                interior,
            } => {
                if *radius < 1 {
                    return bad("window radius must be >= 1".into());
                }
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return bad(format!("alpha {alpha} not in (0, 2)"));
                }
                check_rule(interior)
            }
            ModelSpec::Exponential {
                radius,
                beta,
                c,
                interior,
            } => {
                if *radius < 1 {
                    return bad("window radius must be >= 1".into());
                }
                if !(*beta > 0.0 && beta.is_finite()) {
                    return bad(format!("beta {beta} must be > 0"));
                }
                if !(*c > 0.0 && c.is_finite()) {
                    return bad(format!("kernel constant {c} must be > 0"));
                }
                check_rule(interior)
            }
            ModelSpec::TopoExample { n } => {
                if *n < 1 {
                    return bad("topo_example needs n >= 1".into());
                }
                Ok(())
            }
            ModelSpec::ThreePoint => Ok(()),
            ModelSpec::Mirror { n } => {
                if *n < 2 || n % 2 != 0 {
                    return bad(format!("mirror grid size {n} must be even and >= 2"));
                }
                Ok(())
            }
            ModelSpec::Explicit {
                mass,
                killing,
                edges,
                interior,
            } => {
                let n = mass.len();
                if n == 0 {
                    return bad("explicit model needs at least one vertex".into());
                }
                if let Some(k) = killing {
                    if k.len() != n {
                        return Err(Error::DimensionMismatch {
                            expected: n,
                            got: k.len(),
                        });
                    }
                }
                if let Some(i) = interior {
                    if i.len() != n {
                        return Err(Error::DimensionMismatch {
                            expected: n,
                            got: i.len(),
                        });
                    }
                }
                for &(x, y, _) in edges {
                    if x >= n || y >= n {
                        return bad(format!("edge ({x}, {y}) references a vertex >= {n}"));
                    }
                    if x == y {
                        return bad(format!("self-loop at vertex {x}"));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Finite window of a weighted graph with its Dirichlet-form data.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphForm {
    mass: Vec<f64>,
    killing: Vec<f64>,
    interior: Vec<bool>,
    tail_bound: Vec<f64>,
    tail_tolerance: f64,
    coords: Option<Vec<Vec<i64>>>,
    rows: Vec<Vec<(usize, f64)>>,
    model: Option<ModelSpec>,
}

/// Raw constituents of a [`GraphForm`]; no invariant is enforced.
#[derive(Debug, Clone, Default)]
pub struct GraphParts {
    pub mass: Vec<f64>,
    pub killing: Vec<f64>,
    pub interior: Vec<bool>,
    pub tail_bound: Vec<f64>,
    pub tail_tolerance: f64,
    pub coords: Option<Vec<Vec<i64>>>,
    /// Directed rows `x -> [(y, j(x, y))]`.
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl GraphForm {
    /// Assembles a graph without checking anything; run [`GraphForm::validate`]
    /// to get the diagnostics.
    pub fn from_parts(parts: GraphParts) -> Self {
        let mut rows = parts.rows;
        for row in &mut rows {
            row.sort_by_key(|&(y, _)| y);
        }
        GraphForm {
            mass: parts.mass,
            killing: parts.killing,
            interior: parts.interior,
            tail_bound: parts.tail_bound,
            tail_tolerance: parts.tail_tolerance,
            coords: parts.coords,
            rows,
            model: None,
        }
    }

    /// Symmetric graph from an undirected edge list; all vertices interior,
    /// zero killing, zero tail.
    pub fn from_edges(mass: Vec<f64>, edges: &[(usize, usize, f64)]) -> Self {
        let n = mass.len();
        let mut rows = vec![Vec::new(); n];
        for &(x, y, w) in edges {
            rows[x].push((y, w));
            rows[y].push((x, w));
        }
        Self::from_parts(GraphParts {
            mass,
            killing: vec![0.0; n],
            interior: vec![true; n],
            tail_bound: vec![0.0; n],
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            coords: None,
            rows,
        })
    }

    pub fn with_killing(mut self, killing: Vec<f64>) -> Self {
        self.killing = killing;
        self
    }

    pub fn with_interior(mut self, interior: Vec<bool>) -> Self {
        self.interior = interior;
        self
    }

    pub fn n(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn killing(&self) -> &[f64] {
        &self.killing
    }

    pub fn interior(&self) -> &[bool] {
        &self.interior
    }

    pub fn is_interior(&self, x: usize) -> bool {
        self.interior[x]
    }

    pub fn interior_vertices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&x| self.interior[x]).collect()
    }

    pub fn tail_bound(&self) -> &[f64] {
        &self.tail_bound
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.tail_tolerance
    }

    pub fn coords(&self) -> Option<&[Vec<i64>]> {
        self.coords.as_deref()
    }

    /// Model this graph was built from, when built by [`build_model`].
    pub fn model(&self) -> Option<&ModelSpec> {
        self.model.as_ref()
    }

    /// Row `x` of the jump weights, sorted by neighbour index.
    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.rows[x]
    }

    /// `j(x, y)`, zero when absent.
    pub fn weight(&self, x: usize, y: usize) -> f64 {
        let row = &self.rows[x];
        match row.binary_search_by_key(&y, |&(z, _)| z) {
            Ok(i) => row[i].1,
            Err(_) => 0.0,
        }
    }

    /// Undirected edges `(x, y, j)` with `x < y`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(x, row)| row.iter().filter(move |&&(y, _)| x < y).map(move |&(y, w)| (x, y, w)))
    }

    /// Index of the vertex with the given lattice coordinates, if present.
    pub fn index_of(&self, c: &[i64]) -> Option<usize> {
        let coords = self.coords.as_ref()?;
        match &self.model {
            Some(spec) => {
                let r = spec.radius()? as i64;
                let side = 2 * r + 1;
                let mut idx = 0i64;
                for &ci in c {
                    if ci.abs() > r {
                        return None;
                    }
                    idx = idx * side + (ci + r);
                }
                let idx = idx as usize;
                (idx < coords.len() && coords[idx] == c).then_some(idx)
            }
            None => coords.iter().position(|v| v == c),
        }
    }

    /// Diagnostics listing every invariant violation. Empty iff valid.
    pub fn validate(&self) -> Vec<Violation> {
        let n = self.n();
        let mut out = Vec::new();
        for (field, len) in [
            ("killing", self.killing.len()),
            ("interior", self.interior.len()),
            ("tail_bound", self.tail_bound.len()),
            ("rows", self.rows.len()),
        ] {
            if len != n {
                out.push(Violation::LengthMismatch {
                    field,
                    expected: n,
                    got: len,
                });
            }
        }
        if !out.is_empty() {
            return out;
        }
        if let Some(c) = &self.coords {
            if c.len() != n {
                out.push(Violation::LengthMismatch {
                    field: "coords",
                    expected: n,
                    got: c.len(),
                });
            }
        }
        for x in 0..n {
            if !(self.mass[x] > 0.0 && self.mass[x].is_finite()) {
                out.push(Violation::NonPositiveMass {
                    vertex: x,
                    value: self.mass[x],
                });
            }
            if !(self.killing[x] >= 0.0 && self.killing[x].is_finite()) {
                out.push(Violation::NegativeKilling {
                    vertex: x,
                    value: self.killing[x],
                });
            }
            let mut degree = 0.0;
            for &(y, w) in &self.rows[x] {
                if y >= n {
                    out.push(Violation::DanglingEdge { from: x, to: y });
                    continue;
                }
                if y == x {
                    if w != 0.0 {
                        out.push(Violation::SelfLoop { vertex: x, value: w });
                    }
                    continue;
                }
                if !(w >= 0.0 && w.is_finite()) {
                    out.push(Violation::NegativeWeight { x, y, value: w });
                }
                let back = self.weight(y, x);
                if x < y && back != w {
                    out.push(Violation::Asymmetric {
                        x,
                        y,
                        forward: w,
                        backward: back,
                    });
                }
                degree += w;
            }
            // pairs only present in the reverse direction
            for &(y, _) in &self.rows[x] {
                if y < n && y != x && x > y && self.rows[y].binary_search_by_key(&x, |&(z, _)| z).is_err() {
                    out.push(Violation::Asymmetric {
                        x: y,
                        y: x,
                        forward: 0.0,
                        backward: self.weight(x, y),
                    });
                }
            }
            if !degree.is_finite() {
                out.push(Violation::InfiniteDegree { vertex: x });
            }
            if !(self.tail_bound[x] >= 0.0) {
                out.push(Violation::NegativeTail {
                    vertex: x,
                    value: self.tail_bound[x],
                });
            }
            if self.interior[x] && self.tail_bound[x] > self.tail_tolerance {
                out.push(Violation::InteriorTail {
                    vertex: x,
                    tail: self.tail_bound[x],
                    tolerance: self.tail_tolerance,
                });
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Line-oriented text dump: header `n e`, `n` vertex lines
    /// `id m k interior [coords...]`, then `e` edge lines `x y j` with `x < y`.
    pub fn dump(&self) -> String {
        let edges: Vec<_> = self.edges().collect();
        let mut s = format!("{} {}\n", self.n(), edges.len());
        for x in 0..self.n() {
            s.push_str(&format!(
                "{} {} {} {}",
                x,
                fmt_num(self.mass[x]),
                fmt_num(self.killing[x]),
                u8::from(self.interior[x])
            ));
            if let Some(c) = &self.coords {
                for ci in &c[x] {
                    s.push_str(&format!(" {ci}"));
                }
            }
            s.push('\n');
        }
        for (x, y, w) in edges {
            s.push_str(&format!("{} {} {}\n", x, y, fmt_num(w)));
        }
        s
    }
}

/// 17 significant digits, round-trips every finite `f64`.
pub fn fmt_num(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

fn parse_num(tok: &str) -> std::result::Result<f64, String> {
    tok.parse::<f64>().map_err(|e| format!("bad number `{tok}`: {e}"))
}

/// Error produced when a graph dump cannot be parsed.
#[derive(Debug, Clone, PartialEq)]
pub struct DumpParseError(pub String);

impl fmt::Display for DumpParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "graph dump: {}", self.0)
    }
}

impl std::error::Error for DumpParseError {}

impl FromStr for GraphForm {
    type Err = DumpParseError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let err = |m: String| DumpParseError(m);
        let mut lines = s.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| err("empty input".into()))?;
        let mut h = header.split_whitespace();
        let n: usize = h
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err("bad header".into()))?;
        let e: usize = h
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err("bad header".into()))?;
        let mut mass = Vec::with_capacity(n);
        let mut killing = Vec::with_capacity(n);
        let mut interior = Vec::with_capacity(n);
        let mut coords: Vec<Vec<i64>> = Vec::with_capacity(n);
        for i in 0..n {
            let line = lines.next().ok_or_else(|| err(format!("missing vertex line {i}")))?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() < 4 {
                return Err(err(format!("vertex line {i} too short")));
            }
            if toks[0].parse::<usize>().ok() != Some(i) {
                return Err(err(format!("vertex line {i} has id `{}`", toks[0])));
            }
            mass.push(parse_num(toks[1]).map_err(err)?);
            killing.push(parse_num(toks[2]).map_err(err)?);
            interior.push(toks[3] == "1");
            let c = toks[4..]
                .iter()
                .map(|t| t.parse::<i64>().map_err(|e| err(format!("bad coordinate `{t}`: {e}"))))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            coords.push(c);
        }
        let mut rows = vec![Vec::new(); n];
        for k in 0..e {
            let line = lines.next().ok_or_else(|| err(format!("missing edge line {k}")))?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(err(format!("edge line {k} malformed")));
            }
            let x: usize = toks[0].parse().map_err(|_| err(format!("edge line {k}: bad vertex")))?;
            let y: usize = toks[1].parse().map_err(|_| err(format!("edge line {k}: bad vertex")))?;
            if x >= n || y >= n {
                return Err(err(format!("edge line {k}: vertex out of range")));
            }
            let w = parse_num(toks[2]).map_err(err)?;
            rows[x].push((y, w));
            rows[y].push((x, w));
        }
        let has_coords = coords.iter().any(|c| !c.is_empty());
        Ok(GraphForm::from_parts(GraphParts {
            tail_bound: vec![0.0; n],
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            coords: has_coords.then_some(coords),
            mass,
            killing,
            interior,
            rows,
        }))
    }
}

/// One invariant violation found by [`GraphForm::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    LengthMismatch {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    NonPositiveMass {
        vertex: usize,
        value: f64,
    },
    NegativeKilling {
        vertex: usize,
        value: f64,
    },
    NegativeWeight {
        x: usize,
        y: usize,
        value: f64,
    },
    SelfLoop {
        vertex: usize,
        value: f64,
    },
    Asymmetric {
        x: usize,
        y: usize,
        forward: f64,
        backward: f64,
    },
    DanglingEdge {
        from: usize,
        to: usize,
    },
    InfiniteDegree {
        vertex: usize,
    },
    NegativeTail {
        vertex: usize,
        value: f64,
    },
    InteriorTail {
        vertex: usize,
        tail: f64,
        tolerance: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LengthMismatch { field, expected, got } => {
                write!(f, "{field} has length {got}, expected {expected}")
            }
            Violation::NonPositiveMass { vertex, value } => {
                write!(f, "positivity violation at vertex {vertex}: m = {value}")
            }
            Violation::NegativeKilling { vertex, value } => {
                write!(f, "negative killing weight at vertex {vertex}: k = {value}")
            }
            Violation::NegativeWeight { x, y, value } => {
                write!(f, "negative jump weight at pair ({x}, {y}): j = {value}")
            }
            Violation::SelfLoop { vertex, value } => {
                write!(f, "diagonal jump weight at vertex {vertex}: j = {value}")
            }
            Violation::Asymmetric {
                x,
                y,
                forward,
                backward,
            } => {
                write!(f, "symmetry violation at pair ({x}, {y}): {forward} vs {backward}")
            }
            Violation::DanglingEdge { from, to } => {
                write!(f, "edge from {from} to missing vertex {to}")
            }
            Violation::InfiniteDegree { vertex } => write!(f, "m'({vertex}) is not finite"),
            Violation::NegativeTail { vertex, value } => {
                write!(f, "tail bound at vertex {vertex} is {value}")
            }
            Violation::InteriorTail {
                vertex,
                tail,
                tolerance,
            } => write!(
                f,
                "interior vertex {vertex} has tail bound {tail} above tolerance {tolerance}"
            ),
        }
    }
}

/// `m'(x) = sum_y j(x, y)`.
pub fn degree_measure(g: &GraphForm) -> Vec<f64> {
    (0..g.n())
        .map(|x| g.neighbors(x).iter().map(|&(_, w)| w).sum())
        .collect()
}

/// Seeded connected random graph: a path backbone plus each other pair with
/// probability `density`; masses in `[0.5, 2]`, weights in `[0.1, 2]`, every
/// vertex interior.
pub fn random_graph(n: usize, density: f64, seed: u64) -> GraphForm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mass: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let mut edges = Vec::new();
    for x in 0..n {
        for y in x + 1..n {
            if y == x + 1 || rng.random::<f64>() < density {
                edges.push((x, y, rng.random_range(0.1..2.0)));
            }
        }
    }
    GraphForm::from_edges(mass, &edges)
}

/// Vertex indices of `topo_example(N)`: `a1 = 0`, `a2 = 1`, `b_n = 2n`,
/// `c_n = 2n + 1` for `n = 1..=N`.
pub mod topo {
    pub const A1: usize = 0;
    pub const A2: usize = 1;

    pub fn b(n: usize) -> usize {
        2 * n
    }

    pub fn c(n: usize) -> usize {
        2 * n + 1
    }
}

/// Positions of the mirror grid: `x_i = -1 + 2 i / N`, skipping `x = 0`.
/// Returns `(i, x_i)` pairs in vertex order.
pub fn mirror_points(n: usize) -> Vec<(usize, f64)> {
    (0..=n)
        .filter(|&i| 2 * i != n)
        .map(|i| (i, -1.0 + 2.0 * i as f64 / n as f64))
        .collect()
}

/// Builds the window described by `spec`; the result always validates.
pub fn build_model(spec: &ModelSpec) -> Result<GraphForm> {
    spec.validate_params()?;
    let mut g = match spec {
        ModelSpec::Lattice {
            dim,
            radius,
            weight,
            mass,
            killing,
            interior,
        } => build_lattice(*dim, *radius, *weight, *mass, *killing, *interior),
        ModelSpec::Powerlaw {
            radius,
            alpha,
            interior,
        } => {
            let a = *alpha;
            build_line(
                *radius,
                |d| (d as f64).powf(-1.0 - a),
                // sum_{k > D} k^(-1-a) <= (D+1)^(-1-a) + (D+1)^(-a) / a
                |d| {
                    let t = (d + 1) as f64;
                    t.powf(-1.0 - a) + t.powf(-a) / a
                },
                *interior,
            )
        }
        ModelSpec::Exponential {
            radius,
            beta,
            c,
            interior,
        } => {
            let (b, c) = (*beta, *c);
            let q = (-b).exp();
            build_line(
                *radius,
                move |d| if d == 1 { c } else { c * (-b * d as f64).exp() },
                move |d| {
                    if d == 0 {
                        c + c * (-2.0 * b).exp() / (1.0 - q)
                    } else {
                        c * (-b * (d + 1) as f64).exp() / (1.0 - q)
                    }
                },
                *interior,
            )
        }
        ModelSpec::TopoExample { n } => Ok(build_topo(*n)),
        ModelSpec::ThreePoint => Ok(GraphForm::from_edges(vec![1.0; 3], &[(0, 1, 1.0), (1, 2, 1.0)])),
        ModelSpec::Mirror { n } => Ok(build_mirror(*n)),
        ModelSpec::Explicit {
            mass,
            killing,
            edges,
            interior,
        } => {
            let mut g = GraphForm::from_edges(mass.clone(), edges);
            if let Some(k) = killing {
                g.killing = k.clone();
            }
            if let Some(i) = interior {
                g.interior = i.clone();
            }
            Ok(g)
        }
    }?;
    g.model = Some(spec.clone());
    if g.interior.iter().all(|&b| !b) {
        return Err(Error::WindowTooSmall("no vertex satisfies the interior rule".into()));
    }
    debug_assert!(g.is_valid(), "{:?}", g.validate());
    Ok(g)
}

fn lattice_coords(dim: usize, radius: usize) -> Vec<Vec<i64>> {
    let r = radius as i64;
    let side = (2 * radius + 1) as u64;
    let total = side.pow(dim as u32) as usize;
    (0..total)
        .map(|mut idx| {
            let mut c = vec![0i64; dim];
            for i in (0..dim).rev() {
                c[i] = (idx % side as usize) as i64 - r;
                idx /= side as usize;
            }
            c
        })
        .collect()
}

fn apply_interior_rule(rule: InteriorRule, radius: usize, coords: &[Vec<i64>], tail: &[f64]) -> (Vec<bool>, f64) {
    match rule {
        InteriorRule::Tolerance(tol) => (tail.iter().map(|&t| t <= tol).collect(), tol),
        InteriorRule::Margin(k) => {
            let r = radius as i64;
            let interior: Vec<bool> = coords
                .iter()
                .map(|c| c.iter().all(|&ci| r - ci.abs() >= k as i64))
                .collect();
            let tol = interior
                .iter()
                .zip(tail)
                .filter(|(&i, _)| i)
                .map(|(_, &t)| t)
                .fold(0.0, f64::max);
            (interior, tol)
        }
    }
}

fn build_lattice(
    dim: usize,
    radius: usize,
    weight: f64,
    mass: f64,
    killing: f64,
    rule: InteriorRule,
) -> Result<GraphForm> {
    let coords = lattice_coords(dim, radius);
    let n = coords.len();
    let r = radius as i64;
    let side = 2 * r + 1;
    let index = |c: &[i64]| c.iter().fold(0i64, |acc, &ci| acc * side + ci + r) as usize;
    let mut rows = vec![Vec::with_capacity(2 * dim); n];
    let mut tail = vec![0.0; n];
    let mut nb = vec![0i64; dim];
    for (x, c) in coords.iter().enumerate() {
        for i in 0..dim {
            for step in [-1i64, 1] {
                nb.copy_from_slice(c);
                nb[i] += step;
                if nb[i].abs() <= r {
                    rows[x].push((index(&nb), weight));
                } else {
                    tail[x] += weight;
                }
            }
        }
    }
    let (interior, tol) = apply_interior_rule(rule, radius, &coords, &tail);
    Ok(GraphForm::from_parts(GraphParts {
        mass: vec![mass; n],
        killing: vec![killing; n],
        interior,
        tail_bound: tail,
        tail_tolerance: tol,
        coords: Some(coords),
        rows,
    }))
}

/// All-pairs kernel on `[-R, R] ∩ Z`; `kernel(d)` is the weight at lattice
/// distance `d >= 1`, `tail(D)` bounds `sum_{k > D} kernel(k)`.
fn build_line(
    radius: usize,
    kernel: impl Fn(usize) -> f64,
    tail: impl Fn(usize) -> f64,
    rule: InteriorRule,
) -> Result<GraphForm> {
    let coords = lattice_coords(1, radius);
    let n = coords.len();
    let weights: Vec<f64> = (0..n).map(|d| if d == 0 { 0.0 } else { kernel(d) }).collect();
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|x| {
            (0..n)
                .filter(|&y| y != x)
                .map(|y| (y, weights[x.abs_diff(y)]))
                .collect()
        })
        .collect();
    let tail_bound: Vec<f64> = (0..n).map(|x| tail(x) + tail(n - 1 - x)).collect();
    let (interior, tol) = apply_interior_rule(rule, radius, &coords, &tail_bound);
    Ok(GraphForm::from_parts(GraphParts {
        mass: vec![1.0; n],
        killing: vec![0.0; n],
        interior,
        tail_bound,
        tail_tolerance: tol,
        coords: Some(coords),
        rows,
    }))
}

fn build_topo(n_max: usize) -> GraphForm {
    let n = 2 * n_max + 2;
    let mut edges = Vec::with_capacity(3 * n_max);
    for k in 1..=n_max {
        let w = 1.0 / (k * k) as f64;
        edges.push((topo::A1, topo::b(k), w));
        edges.push((topo::A2, topo::b(k), w));
        edges.push((topo::b(k), topo::c(k), k as f64));
    }
    let mut g = GraphForm::from_edges(vec![1.0; n], &edges);
    // sum_{k > N} 1/k^2 <= 1/N
    let hub_tail = 1.0 / n_max as f64;
    g.tail_bound[topo::A1] = hub_tail;
    g.tail_bound[topo::A2] = hub_tail;
    g.interior = g.tail_bound.iter().map(|&t| t <= DEFAULT_TAIL_TOLERANCE).collect();
    g
}

fn build_mirror(n_grid: usize) -> GraphForm {
    let pts = mirror_points(n_grid);
    let h = 2.0 / n_grid as f64;
    let n = pts.len();
    let mut edges = Vec::with_capacity(n / 2);
    for (v, &(i, x)) in pts.iter().enumerate() {
        if x > 0.0 {
            let mirror = n_grid - i;
            let partner = if mirror < n_grid / 2 { mirror } else { mirror - 1 };
            debug_assert_eq!(pts[partner].0, mirror);
            // each unordered pair is counted twice, so half a cell per orientation
            edges.push((partner, v, x.powf(-2.5) * h / 2.0));
        }
    }
    let mut g = GraphForm::from_edges(vec![h; n], &edges);
    g.coords = Some(pts.iter().map(|&(i, _)| vec![i as i64]).collect());
    g
}
