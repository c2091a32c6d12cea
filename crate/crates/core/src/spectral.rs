//! Operators of perturbed forms `h = E + ν⁺ - ν⁻`, window spectra, generalized
//! eigenfunctions, the ground state transform, Caccioppoli and Shnol
//! inequalities and ratio tests for spectrum membership.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::energy::{energy, energy_measure, generator_apply, generator_matrix, inner, norm_sq, Part};
use crate::error::{check_len, Error, Result};
use crate::graph_form::{GraphForm, ModelSpec};
use crate::linalg::{lanczos_extremes, linear_fit, symmetric_eigenvalues};
use crate::metrics::{annulus, ball, cutoff, jump_size, PseudoMetric, REL_TOL};

/// Largest window handled by the dense eigensolver.
pub const DENSE_LIMIT: usize = 4000;

/// `q` used when `ν⁻ = 0` and no certificate was supplied.
pub const TRIVIAL_Q: f64 = 1e-6;

/// `ν⁻(u) <= q E(u) + C_q ||u||^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub q: f64,
    pub c_q: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedForm {
    pub base: GraphForm,
    pub nu_plus: Vec<f64>,
    pub nu_minus: Vec<f64>,
    pub certificate: Option<BoundCertificate>,
}

fn check_nonneg(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !(*x >= 0.0) || !x.is_finite()) {
        Some(i) => Err(Error::InvalidParameter(format!(
            "weight {} at vertex {i} must be finite and >= 0",
            v[i]
        ))),
        None => Ok(()),
    }
}

impl PerturbedForm {
    pub fn new(base: GraphForm) -> Self {
        let n = base.n();
        PerturbedForm {
            base,
            nu_plus: vec![0.0; n],
            nu_minus: vec![0.0; n],
            certificate: None,
        }
    }

    pub fn with_nu_plus(mut self, nu: Vec<f64>) -> Result<Self> {
        check_len(self.base.n(), nu.len())?;
        check_nonneg(&nu)?;
        self.nu_plus = nu;
        Ok(self)
    }

    /// Sets `ν⁻` and drops any certificate issued for the previous value.
    pub fn with_nu_minus(mut self, nu: Vec<f64>) -> Result<Self> {
        check_len(self.base.n(), nu.len())?;
        check_nonneg(&nu)?;
        self.nu_minus = nu;
        self.certificate = None;
        Ok(self)
    }

    /// Attaches `(q, C_q)` after checking it with [`form_bound_check`].
    pub fn with_certificate(mut self, q: f64, c_q: f64) -> Result<Self> {
        let rep = form_bound_check(&self.base, &self.nu_minus, q, c_q)?;
        if !rep.pass {
            return Err(Error::Precondition(format!(
                "form bound fails for q = {q}, C_q = {c_q} (min eigenvalue {})",
                rep.min_eigenvalue
            )));
        }
        self.certificate = Some(BoundCertificate { q, c_q });
        Ok(self)
    }

    /// Attaches `(q, min_Cq(q))`.
    pub fn certify(self, q: f64) -> Result<Self> {
        let c_q = min_cq(&self.base, &self.nu_minus, q)?;
        let c_q = c_q * (1.0 + 1e-9) + 1e-12;
        self.with_certificate(q, c_q)
    }

    pub fn graph(&self) -> &GraphForm {
        &self.base
    }

    /// Signed `ν = ν⁺ - ν⁻`.
    pub fn nu(&self) -> Vec<f64> {
        self.nu_plus.iter().zip(&self.nu_minus).map(|(p, m)| p - m).collect()
    }

    /// The attached certificate, or `(TRIVIAL_Q, 0)` when `ν⁻ = 0`.
    pub fn certificate_or_trivial(&self) -> Result<BoundCertificate> {
        match self.certificate {
            Some(c) => Ok(c),
            None if self.nu_minus.iter().all(|&v| v == 0.0) => Ok(BoundCertificate { q: TRIVIAL_Q, c_q: 0.0 }),
            None => Err(Error::Precondition(
                "ν⁻ is nonzero but no form-bound certificate is attached".into(),
            )),
        }
    }

    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        generator_apply(&self.base, Some(&self.nu()), u)
    }

    /// `h(u, v)`.
    pub fn form(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        energy(&self.base, Some(&self.nu()), u, v)
    }

    /// Symmetrized operator `M^(-1/2) (L + diag(k + ν)) M^(-1/2)`.
    pub fn symmetric_matrix(&self) -> Result<DMatrix<f64>> {
        generator_matrix(&self.base, Some(&self.nu()))
    }
}

/// Sorted eigenvalues of `H` on the whole window.
pub fn spectrum(h: &PerturbedForm) -> Result<Vec<f64>> {
    let n = h.base.n();
    if n > DENSE_LIMIT {
        return Err(Error::Precondition(format!(
            "window of {n} vertices exceeds the dense limit {DENSE_LIMIT}; use extreme_eigenvalues"
        )));
    }
    Ok(symmetric_eigenvalues(h.symmetric_matrix()?))
}

fn interior_submatrix(h: &PerturbedForm) -> Result<(Vec<usize>, DMatrix<f64>)> {
    let idx = h.base.interior_vertices();
    if idx.is_empty() {
        return Err(Error::WindowTooSmall("no interior vertices".into()));
    }
    if idx.len() > DENSE_LIMIT {
        return Err(Error::Precondition(format!(
            "interior exceeds the dense limit {DENSE_LIMIT}"
        )));
    }
    let full = h.symmetric_matrix()?;
    let k = idx.len();
    let sub = DMatrix::from_fn(k, k, |i, j| full[(idx[i], idx[j])]);
    Ok((idx, sub))
}

/// Sorted eigenvalues of the interior restriction of `H` (Dirichlet truncation).
pub fn spectrum_interior(h: &PerturbedForm) -> Result<Vec<f64>> {
    Ok(symmetric_eigenvalues(interior_submatrix(h)?.1))
}

/// Eigenpairs of the interior restriction of `H`, ascending, with
/// eigenvectors extended by zero and normalized in `L^2(m)`.
pub fn interior_eigenpairs(h: &PerturbedForm) -> Result<Vec<(f64, Vec<f64>)>> {
    let (idx, sub) = interior_submatrix(h)?;
    let eig = SymmetricEigen::new(sub);
    let m = h.base.mass();
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..idx.len())
        .map(|c| {
            let mut u = vec![0.0; h.base.n()];
            for (i, &x) in idx.iter().enumerate() {
                u[x] = eig.eigenvectors[(i, c)] / m[x].sqrt();
            }
            (eig.eigenvalues[c], u)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs)
}

/// `(λ_min, λ_max)` of `H` by Lanczos; for windows beyond the dense limit.
pub fn extreme_eigenvalues(h: &PerturbedForm, steps: usize, seed: u64) -> Result<(f64, f64)> {
    let nu = h.nu();
    let sq: Vec<f64> = h.base.mass().iter().map(|m| m.sqrt()).collect();
    let g = &h.base;
    Ok(lanczos_extremes(g.n(), steps, seed, |v| {
        let w: Vec<f64> = v.iter().zip(&sq).map(|(a, s)| a / s).collect();
        let hw = generator_apply(g, Some(&nu), &w).expect("lengths match");
        hw.iter().zip(&sq).map(|(a, s)| a * s).collect()
    }))
}

/// `min_i |λ - eigs_i|`.
pub fn distance_to_spectrum(eigs: &[f64], lambda: f64) -> f64 {
    eigs.iter().map(|e| (e - lambda).abs()).fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FormBoundReport {
    /// Smallest eigenvalue of `M^(-1/2) (q L + C_q M - N) M^(-1/2)`.
    pub min_eigenvalue: f64,
    pub scale: f64,
    pub pass: bool,
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("q = {q} must lie in (0, 1)")))
    }
}

fn nu_over_m(g: &GraphForm, nu_minus: &[f64]) -> Result<Vec<f64>> {
    check_len(g.n(), nu_minus.len())?;
    check_nonneg(nu_minus)?;
    Ok(nu_minus.iter().zip(g.mass()).map(|(v, m)| v / m).collect())
}

/// `ν⁻(u) <= q E(u) + C_q ||u||^2` as a matrix inequality.
pub fn form_bound_check(g: &GraphForm, nu_minus: &[f64], q: f64, c_q: f64) -> Result<FormBoundReport> {
    check_q(q)?;
    let d = nu_over_m(g, nu_minus)?;
    let mut a = generator_matrix(g, None)? * q;
    for x in 0..g.n() {
        a[(x, x)] += c_q - d[x];
    }
    let scale = a.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    let min = symmetric_eigenvalues(a)[0];
    Ok(FormBoundReport {
        min_eigenvalue: min,
        scale,
        pass: min >= -1e-10 * scale,
    })
}

/// Smallest `C_q >= 0` with `ν⁻ <= q E + C_q`: the top eigenvalue of
/// `M^(-1/2) (N - q L) M^(-1/2)`, clipped at 0.
pub fn min_cq(g: &GraphForm, nu_minus: &[f64], q: f64) -> Result<f64> {
    check_q(q)?;
    let d = nu_over_m(g, nu_minus)?;
    if d.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let mut a = generator_matrix(g, None)? * (-q);
    for x in 0..g.n() {
        a[(x, x)] += d[x];
    }
    let ev = symmetric_eigenvalues(a);
    Ok(ev[ev.len() - 1].max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenCandidate {
    pub u: Vec<f64>,
    pub lambda: f64,
    /// `max |(Hu)(x) - λ u(x)|` over interior vertices.
    pub residual_sup: f64,
    /// `(sum_x m(x) |(Hu)(x) - λ u(x)|^2)^(1/2)` over interior vertices.
    pub residual_l2: f64,
}

/// Interior residual of the eigenvalue equation `Hu = λu`.
pub fn gen_eigen_residual(h: &PerturbedForm, u: &[f64], lambda: f64) -> Result<EigenCandidate> {
    check_len(h.base.n(), u.len())?;
    if u.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroVector);
    }
    let hu = h.apply(u)?;
    let mut sup: f64 = 0.0;
    let mut l2 = 0.0;
    for x in h.base.interior_vertices() {
        let r = hu[x] - lambda * u[x];
        sup = sup.max(r.abs());
        l2 += h.base.mass()[x] * r * r;
    }
    Ok(EigenCandidate {
        u: u.to_vec(),
        lambda,
        residual_sup: sup,
        residual_l2: l2.sqrt(),
    })
}

fn lattice_params(g: &GraphForm, dims: usize) -> Result<(f64, f64, f64)> {
    match g.model() {
        Some(ModelSpec::Lattice {
            dim,
            weight,
            mass,
            killing,
            ..
        }) => {
            check_len(*dim, dims)?;
            Ok((*weight, *mass, *killing))
        }
        _ => Err(Error::NotLattice),
    }
}

fn product_wave(g: &GraphForm, rates: &[f64], f: fn(f64) -> f64) -> Result<Vec<f64>> {
    let coords = g.coords().ok_or(Error::MissingCoordinates)?;
    Ok(coords
        .iter()
        .map(|c| c.iter().zip(rates).map(|(&xi, &t)| f(t * xi as f64)).product())
        .collect())
}

/// `u(x) = prod_i cos(θ_i x_i)` with `λ = (4w/m) sum_i (1 - cos θ_i) + k/m`.
pub fn plane_wave(g: &GraphForm, theta: &[f64]) -> Result<(Vec<f64>, f64)> {
    let (w, m, k) = lattice_params(g, theta.len())?;
    let u = product_wave(g, theta, f64::cos)?;
    let lambda = 4.0 * w / m * theta.iter().map(|t| 1.0 - t.cos()).sum::<f64>() + k / m;
    Ok((u, lambda))
}

/// `u(x) = prod_i cosh(μ_i x_i)` with `λ = (4w/m) sum_i (1 - cosh μ_i) + k/m`.
pub fn cosh_wave(g: &GraphForm, mu: &[f64]) -> Result<(Vec<f64>, f64)> {
    let (w, m, k) = lattice_params(g, mu.len())?;
    let u = product_wave(g, mu, f64::cosh)?;
    let lambda = 4.0 * w / m * mu.iter().map(|t| 1.0 - t.cosh()).sum::<f64>() + k / m;
    Ok((u, lambda))
}

fn check_interior_support(g: &GraphForm, f: &[f64]) -> Result<()> {
    check_len(g.n(), f.len())?;
    match (0..g.n()).find(|&x| f[x] != 0.0 && !g.is_interior(x)) {
        Some(x) => Err(Error::SupportOutsideInterior(x)),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GstVariant {
    /// `h(φ, ψ) - λ(φ, ψ) = sum u(x) u(y) dΓ(φ/u, ψ/u)`.
    Inverse,
    /// `h(uφ, uψ) - λ(uφ, uψ) = sum u(x) u(y) dΓ(φ, ψ)`.
    Multiplicative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GstReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// Sum of the magnitudes of all contributions.
    pub scale: f64,
    pub relative: f64,
}

/// Ground state transform identity for a generalized eigenfunction `u`.
pub fn gst_check(
    h: &PerturbedForm,
    u: &[f64],
    lambda: f64,
    phi: &[f64],
    psi: &[f64],
    variant: GstVariant,
) -> Result<GstReport> {
    let g = &h.base;
    check_len(g.n(), u.len())?;
    check_interior_support(g, phi)?;
    check_interior_support(g, psi)?;
    let (left_phi, left_psi, f, k): (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) = match variant {
        GstVariant::Inverse => {
            if let Some(x) = (0..g.n()).find(|&x| !(u[x] > 0.0)) {
                return Err(Error::NonPositive { vertex: x, value: u[x] });
            }
            let f = phi.iter().zip(u).map(|(a, b)| a / b).collect();
            let k = psi.iter().zip(u).map(|(a, b)| a / b).collect();
            (phi.to_vec(), psi.to_vec(), f, k)
        }
        GstVariant::Multiplicative => {
            let lp = phi.iter().zip(u).map(|(a, b)| a * b).collect();
            let ls = psi.iter().zip(u).map(|(a, b)| a * b).collect();
            (lp, ls, phi.to_vec(), psi.to_vec())
        }
    };
    let hf = h.form(&left_phi, &left_psi)?;
    let lf = lambda * inner(g, &left_phi, &left_psi);
    let mut rhs = 0.0;
    let mut abs = 0.0;
    for x in 0..g.n() {
        for &(y, w) in g.neighbors(x) {
            let t = u[x] * u[y] * w * (f[x] - f[y]) * (k[x] - k[y]);
            rhs += t;
            abs += t.abs();
        }
    }
    let lhs = hf - lf;
    let residual = (lhs - rhs).abs();
    let scale = hf.abs() + lf.abs() + abs;
    Ok(GstReport {
        lhs,
        rhs,
        residual,
        scale,
        relative: if scale > 0.0 { residual / scale } else { residual },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AllegrettoPiepenbrink {
    /// `min (Hu)/u` over interior vertices.
    pub lambda_lo: f64,
    /// `max (Hu)/u` over interior vertices.
    pub lambda_hi: f64,
    /// Bottom of the interior restriction of `H`.
    pub lambda_min: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Checks `min (Hu)/u <= λ_min(H_interior)` for strictly positive `u`.
pub fn allegretto_piepenbrink(h: &PerturbedForm, u: &[f64]) -> Result<AllegrettoPiepenbrink> {
    let g = &h.base;
    check_len(g.n(), u.len())?;
    if let Some(x) = (0..g.n()).find(|&x| !(u[x] > 0.0)) {
        return Err(Error::NonPositive { vertex: x, value: u[x] });
    }
    let hu = h.apply(u)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for x in g.interior_vertices() {
        let r = hu[x] / u[x];
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let lambda_min = spectrum_interior(h)?[0];
    let margin = lambda_min - lo;
    let scale = lambda_min.abs().max(lo.abs()).max(1.0);
    Ok(AllegrettoPiepenbrink {
        lambda_lo: lo,
        lambda_hi: hi,
        lambda_min,
        margin,
        pass: margin >= -1e-10 * scale,
    })
}

/// Caccioppoli constant with its ingredients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaccioppoliConstant {
    pub q: f64,
    pub c_q: f64,
    /// Free parameter of the absorption step, `(1-q) / (8 max(q, 1-q)^2)`.
    pub s_choice: f64,
    pub value: f64,
}

/// `C = (2/(1-q)) max((λ + C_q)^+, q + 1/(4S))`.
pub fn caccioppoli_constant(lambda: f64, cert: BoundCertificate) -> CaccioppoliConstant {
    let q = cert.q;
    let s = (1.0 - q) / (8.0 * q.max(1.0 - q).powi(2));
    let value = 2.0 / (1.0 - q) * (lambda + cert.c_q).max(0.0).max(q + 1.0 / (4.0 * s));
    CaccioppoliConstant {
        q,
        c_q: cert.c_q,
        s_choice: s,
        value,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaccioppoliReport {
    /// `sum_x η(x)^2 mu^(d)(u)(x)`.
    pub lhs: f64,
    pub rhs: f64,
    pub constant: CaccioppoliConstant,
    /// `||uη||^2`.
    pub l2_term: f64,
    /// `sum_x u(x)^2 mu^(d)(η)(x)`.
    pub cutoff_term: f64,
    /// `h(u, uη²) - λ(u, uη²)`, required to be `<= 0` up to rounding.
    pub precondition_gap: f64,
    pub pass: bool,
}

/// `∫ η² dmu^(d)(u) <= C (||uη||² + ∫ u² dmu^(d)(η))` for a subsolution `u`.
pub fn caccioppoli(h: &PerturbedForm, u: &[f64], lambda: f64, eta: &[f64]) -> Result<CaccioppoliReport> {
    let g = &h.base;
    check_len(g.n(), u.len())?;
    check_interior_support(g, eta)?;
    let cert = h.certificate_or_trivial()?;
    let ue2: Vec<f64> = u.iter().zip(eta).map(|(a, e)| a * e * e).collect();
    let hv = h.form(u, &ue2)?;
    let lv = lambda * inner(g, u, &ue2);
    let gap = hv - lv;
    if gap > 1e-9 * (hv.abs() + lv.abs()).max(f64::MIN_POSITIVE) {
        return Err(Error::Precondition(format!("h(u, uη²) - λ(u, uη²) = {gap} > 0")));
    }
    let mu_u = energy_measure(g, u, Part::D)?.values;
    let mu_eta = energy_measure(g, eta, Part::D)?.values;
    let lhs: f64 = eta.iter().zip(&mu_u).map(|(e, m)| e * e * m).sum();
    let ue: Vec<f64> = u.iter().zip(eta).map(|(a, e)| a * e).collect();
    let l2_term = norm_sq(g, &ue);
    let cutoff_term: f64 = u.iter().zip(&mu_eta).map(|(a, m)| a * a * m).sum();
    let constant = caccioppoli_constant(lambda, cert);
    let rhs = constant.value * (l2_term + cutoff_term);
    Ok(CaccioppoliReport {
        lhs,
        rhs,
        constant,
        l2_term,
        cutoff_term,
        precondition_gap: gap,
        pass: lhs <= rhs * (1.0 + REL_TOL) + f64::MIN_POSITIVE,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShnolReport {
    /// `|(h - λ)(uη₁², v)|²`.
    pub lhs: f64,
    pub rhs: f64,
    /// `3 max(4 + 16/s², 4 C_cacc / a²)`.
    pub constant: f64,
    pub caccioppoli: CaccioppoliConstant,
    /// `2 sqrt(E(v)) sqrt(P1)`.
    pub t_energy: f64,
    /// `(2/a) ||v|| sqrt(C_cacc (P2 + P3))`.
    pub t_caccioppoli: f64,
    /// `(4/s) ||v|| sqrt(P1)`.
    pub t_long_jump: f64,
    /// `∫ u² dmu^(b)(η₁)`.
    pub p1: f64,
    /// `∫ u² dmu^(b)(η₂)`.
    pub p2: f64,
    /// `||u 1_{A_{2a+s}(E)}||²`.
    pub p3: f64,
    /// `E(v) + ||v||²`.
    pub e1_v: f64,
    pub pass: bool,
}

fn check_ball_inside(g: &GraphForm, rho: &PseudoMetric, set: &[usize], r: f64) -> Result<()> {
    match ball(rho, set, r)?.into_iter().find(|&x| !g.is_interior(x)) {
        Some(x) => Err(Error::Precondition(format!(
            "ball of radius {r} reaches non-interior vertex {x}"
        ))),
        None => Ok(()),
    }
}

fn weighted_mu(g: &GraphForm, u: &[f64], eta: &[f64]) -> Result<f64> {
    let mu = energy_measure(g, eta, Part::B)?.values;
    Ok(u.iter().zip(&mu).map(|(a, m)| a * a * m).sum())
}

fn mass_on(g: &GraphForm, u: &[f64], set: &[usize]) -> f64 {
    set.iter().map(|&x| g.mass()[x] * u[x] * u[x]).sum()
}

/// Shnol-type bound `|(h - λ)(uη₁², v)|² <= C E₁(v) (P1 + P2 + P3)` with
/// `η₁ = η_{E,a}`, `η₂ = η_{A_{a+s}(E), a}`.
#[allow(clippy::too_many_arguments)]
pub fn shnol_bound(
    h: &PerturbedForm,
    rho: &PseudoMetric,
    u: &[f64],
    lambda: f64,
    set: &[usize],
    a: f64,
    s: f64,
    v: &[f64],
) -> Result<ShnolReport> {
    let g = &h.base;
    check_len(g.n(), u.len())?;
    check_len(g.n(), v.len())?;
    if !(a > 0.0 && s > 0.0) {
        return Err(Error::InvalidParameter(format!("a = {a} and s = {s} must be > 0")));
    }
    let js = jump_size(g, rho)?;
    if js > s * (1.0 + REL_TOL) {
        return Err(Error::Precondition(format!("jump size {js} exceeds s = {s}")));
    }
    check_ball_inside(g, rho, set, 2.0 * a + s)?;
    let cert = h.certificate_or_trivial()?;
    let eta1 = cutoff(rho, set, a)?;
    let ann1 = annulus(rho, set, a + s)?;
    let eta2 = if ann1.is_empty() {
        vec![0.0; g.n()]
    } else {
        cutoff(rho, &ann1, a)?
    };
    let ann2 = annulus(rho, set, 2.0 * a + s)?;
    let ue2: Vec<f64> = u.iter().zip(&eta1).map(|(x, e)| x * e * e).collect();
    let val = h.form(&ue2, v)? - lambda * inner(g, &ue2, v);
    let lhs = val * val;
    let p1 = weighted_mu(g, u, &eta1)?;
    let p2 = weighted_mu(g, u, &eta2)?;
    let p3 = mass_on(g, u, &ann2);
    let e_v = energy(g, None, v, v)?;
    let nv = norm_sq(g, v);
    let cacc = caccioppoli_constant(lambda, cert);
    let t_energy = 2.0 * e_v.sqrt() * p1.sqrt();
    let t_caccioppoli = 2.0 / a * nv.sqrt() * (cacc.value * (p2 + p3)).sqrt();
    let t_long_jump = 4.0 / s * nv.sqrt() * p1.sqrt();
    let constant = 3.0 * (4.0 + 16.0 / (s * s)).max(4.0 * cacc.value / (a * a));
    let e1_v = e_v + nv;
    let rhs = constant * e1_v * (p1 + p2 + p3);
    Ok(ShnolReport {
        lhs,
        rhs,
        constant,
        caccioppoli: cacc,
        t_energy,
        t_caccioppoli,
        t_long_jump,
        p1,
        p2,
        p3,
        e1_v,
        pass: lhs <= rhs * (1.0 + REL_TOL) + f64::MIN_POSITIVE,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShnolVerdict {
    InSpectrum,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShnolRatioReport {
    /// 1-based positions in the supplied shell sequence that fit the interior.
    pub indices: Vec<usize>,
    /// `||1_{A_{2s+2a}(E_n)} u||² / ||1_{E_n} u||²`.
    pub annulus_ratio: Vec<f64>,
    /// `(P1 + P2 + P3) / ||1_{E_n} u||²` with the terms of [`shnol_bound`].
    pub energy_ratio: Vec<f64>,
    pub slope: Option<f64>,
    pub threshold: f64,
    pub verdict: ShnolVerdict,
    /// `dist(λ, spectrum of the window)` when eigenvalues were supplied.
    pub window_distance: Option<f64>,
}

/// Annulus-to-bulk ratios along nested sets `E_n`; "in spectrum" iff the
/// fitted trend decreases and the last ratio is below `threshold`.
#[allow(clippy::too_many_arguments)]
pub fn shnol_ratio(
    h: &PerturbedForm,
    rho: &PseudoMetric,
    u: &[f64],
    lambda: f64,
    sets: &[Vec<usize>],
    a: f64,
    s: f64,
    threshold: f64,
    window_eigs: Option<&[f64]>,
) -> Result<ShnolRatioReport> {
    let g = &h.base;
    check_len(g.n(), u.len())?;
    let mut indices = Vec::new();
    let mut annulus_ratio = Vec::new();
    let mut energy_ratio = Vec::new();
    for (i, set) in sets.iter().enumerate() {
        if set.is_empty() || check_ball_inside(g, rho, set, 2.0 * a + 2.0 * s).is_err() {
            continue;
        }
        let bulk = mass_on(g, u, set);
        if bulk == 0.0 {
            continue;
        }
        let outer = mass_on(g, u, &annulus(rho, set, 2.0 * s + 2.0 * a)?);
        let eta1 = cutoff(rho, set, a)?;
        let ann1 = annulus(rho, set, a + s)?;
        let eta2 = if ann1.is_empty() {
            vec![0.0; g.n()]
        } else {
            cutoff(rho, &ann1, a)?
        };
        let p = weighted_mu(g, u, &eta1)? + weighted_mu(g, u, &eta2)? + mass_on(g, u, &annulus(rho, set, 2.0 * a + s)?);
        indices.push(i + 1);
        annulus_ratio.push(outer / bulk);
        energy_ratio.push(p / bulk);
    }
    if indices.is_empty() {
        return Err(Error::NoAdmissibleShell);
    }
    let xs: Vec<f64> = indices.iter().map(|&i| i as f64).collect();
    let slope = linear_fit(&xs, &annulus_ratio).map(|f| f.0);
    let last = annulus_ratio[annulus_ratio.len() - 1];
    let decreasing = last == 0.0 || slope.is_some_and(|s| s < 0.0);
    let verdict = if decreasing && last < threshold {
        ShnolVerdict::InSpectrum
    } else {
        ShnolVerdict::Inconclusive
    };
    Ok(ShnolRatioReport {
        indices,
        annulus_ratio,
        energy_ratio,
        slope,
        threshold,
        verdict,
        window_distance: window_eigs.map(|e| distance_to_spectrum(e, lambda)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellDecay {
    pub gamma: f64,
    /// Fitted slope of `ln m(F_n)` against `n`.
    pub log_mass_slope: f64,
    /// `m(F_n) e^(-γn) -> 0`, read as `slope < γ`.
    pub decays: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedNorm {
    /// Partial sums of `||w u 1_{F_n}||²`.
    pub partial: Vec<f64>,
    /// Last increment at most 5% of the total.
    pub bounded: bool,
}

/// Shells of condition (C) with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShellDecomposition {
    /// Step `k = 2s + 2a`.
    pub k: f64,
    /// `E_1 ⊆ E_2 ⊆ ...` with `E_{n+1} = B_k(E_n)`.
    pub sets: Vec<Vec<usize>>,
    /// `F_1 = E_1`, `F_{n+1} = E_{n+1} \ E_n`.
    pub shells: Vec<Vec<usize>>,
    pub shell_mass: Vec<f64>,
    /// `w = (n sqrt(m(F_n)))^(-1)` on `F_n`, 0 elsewhere.
    pub weight: Vec<f64>,
    pub decay: Vec<ShellDecay>,
    pub weighted_norm: Option<WeightedNorm>,
}

/// Builds the shells `E_{n+1} = B_k(E_n)` while they stay interior.
#[allow(clippy::too_many_arguments)]
pub fn condition_c(
    g: &GraphForm,
    rho: &PseudoMetric,
    e1: &[usize],
    a: f64,
    s: f64,
    u: Option<&[f64]>,
    gammas: &[f64],
) -> Result<ShellDecomposition> {
    if e1.is_empty() {
        return Err(Error::EmptySet);
    }
    let k = 2.0 * s + 2.0 * a;
    let mut sets: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = e1.to_vec();
    current.sort_unstable();
    current.dedup();
    if current.iter().all(|&x| g.is_interior(x)) {
        sets.push(current.clone());
        while sets.len() <= g.n() {
            let next = ball(rho, &current, k)?;
            if next.len() == current.len() || next.iter().any(|&x| !g.is_interior(x)) {
                break;
            }
            sets.push(next.clone());
            current = next;
        }
    }
    if sets.len() < 3 {
        return Err(Error::ShellsExhausted(sets.len()));
    }
    let mut shells = vec![sets[0].clone()];
    for w in sets.windows(2) {
        let inner_set: std::collections::HashSet<usize> = w[0].iter().copied().collect();
        shells.push(w[1].iter().copied().filter(|x| !inner_set.contains(x)).collect());
    }
    let shell_mass: Vec<f64> = shells.iter().map(|f| f.iter().map(|&x| g.mass()[x]).sum()).collect();
    let mut weight = vec![0.0; g.n()];
    for (i, f) in shells.iter().enumerate() {
        let wn = 1.0 / ((i + 1) as f64 * shell_mass[i].sqrt());
        for &x in f {
            weight[x] = wn;
        }
    }
    let xs: Vec<f64> = (1..=shells.len()).map(|n| n as f64).collect();
    let ys: Vec<f64> = shell_mass.iter().map(|m| m.ln()).collect();
    let slope = linear_fit(&xs, &ys).map_or(0.0, |f| f.0);
    let decay = gammas
        .iter()
        .map(|&gamma| ShellDecay {
            gamma,
            log_mass_slope: slope,
            decays: slope < gamma,
        })
        .collect();
    let weighted_norm = match u {
        Some(u) => {
            check_len(g.n(), u.len())?;
            let mut total = 0.0;
            let partial: Vec<f64> = shells
                .iter()
                .map(|f| {
                    total += f.iter().map(|&x| g.mass()[x] * (weight[x] * u[x]).powi(2)).sum::<f64>();
                    total
                })
                .collect();
            let n = partial.len();
            let inc = partial[n - 1] - partial[n - 2];
            Some(WeightedNorm {
                bounded: inc <= 0.05 * partial[n - 1],
                partial,
            })
        }
        None => None,
    };
    Ok(ShellDecomposition {
        k,
        sets,
        shells,
        shell_mass,
        weight,
        decay,
        weighted_norm,
    })
}
