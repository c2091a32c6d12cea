use dflab_core::energy::{capacity, energy};
use dflab_core::graph_form::{build_model, mirror_points, random_graph, ModelSpec};
use dflab_core::metrics::{roundtrip_check, PseudoMetric};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense simplex for `max c^T z` subject to `A z <= b`, `z >= 0`, `b >= 0`,
/// Bland's rule. Returns `None` when unbounded.
fn simplex(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<f64> {
    let (rows, cols) = (a.len(), c.len());
    let width = cols + rows + 1;
    let mut t: Vec<Vec<f64>> = (0..rows)
        .map(|i| {
            let mut r = a[i].clone();
            r.extend((0..rows).map(|j| if i == j { 1.0 } else { 0.0 }));
            r.push(b[i]);
            r
        })
        .collect();
    let mut obj: Vec<f64> = c.iter().map(|v| -v).collect();
    obj.extend(std::iter::repeat(0.0).take(rows + 1));
    let mut basis: Vec<usize> = (cols..cols + rows).collect();
    loop {
        let Some(enter) = (0..width - 1).find(|&j| obj[j] < -1e-12) else {
            return Some(obj[width - 1]);
        };
        let mut leave = None;
        let mut best = f64::INFINITY;
        for i in 0..rows {
            if t[i][enter] > 1e-12 {
                let r = t[i][width - 1] / t[i][enter];
                if r < best - 1e-15 || (r <= best + 1e-15 && leave.is_some_and(|l: usize| basis[i] < basis[l])) {
                    best = r;
                    leave = Some(i);
                }
            }
        }
        let l = leave?;
        let p = t[l][enter];
        t[l].iter_mut().for_each(|v| *v /= p);
        let pivot = t[l].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != l {
                let f = row[enter];
                row.iter_mut().zip(&pivot).for_each(|(v, q)| *v -= f * q);
            }
        }
        let f = obj[enter];
        obj.iter_mut().zip(&pivot).for_each(|(v, q)| *v -= f * q);
        basis[l] = enter;
    }
}

/// `sup { f(x) - f(y) : |f(a) - f(b)| <= ϱ(a, b) }` with `f(y) = 0` and
/// `f = p - q`, `p, q >= 0`.
fn lipschitz_sup(rho: &PseudoMetric, x: usize, y: usize) -> f64 {
    let n = rho.n();
    let free: Vec<usize> = (0..n).filter(|&z| z != y).collect();
    let k = free.len();
    let col = |z: usize| free.iter().position(|&w| w == z);
    let mut a = Vec::new();
    let mut b = Vec::new();
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            let mut row = vec![0.0; 2 * k];
            if let Some(i) = col(s) {
                row[i] += 1.0;
                row[k + i] -= 1.0;
            }
            if let Some(i) = col(t) {
                row[i] -= 1.0;
                row[k + i] += 1.0;
            }
            a.push(row);
            b.push(rho.dist(s, t));
        }
    }
    let mut c = vec![0.0; 2 * k];
    let i = col(x).unwrap();
    c[i] = 1.0;
    c[k + i] = -1.0;
    simplex(&a, &b, &c).expect("bounded")
}

#[test]
fn roundtrip_agrees_with_linear_program() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..30 {
        let n = rng.random_range(2..=6);
        let raw: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.1..3.0)).collect();
        let rho = PseudoMetric::table_from_fn(n, |x, y| raw[x.min(y) * n + x.max(y)]);
        let mut dev: f64 = 0.0;
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    dev = dev.max((lipschitz_sup(&rho, x, y) - rho.dist(x, y)).abs());
                }
            }
        }
        let got = roundtrip_check(&rho);
        assert!((got - dev).abs() < 1e-9, "trial {trial}: {got} vs {dev}");
    }
    let metric = PseudoMetric::table_from_fn(4, |x, y| (x as f64 - y as f64).abs());
    assert_eq!(roundtrip_check(&metric), 0.0);
}

#[test]
fn capacity_matches_grid_search() {
    let g = build_model(&ModelSpec::ThreePoint).unwrap();
    let mut best = f64::INFINITY;
    let steps = 600;
    for i in 0..=steps {
        for j in 0..=steps {
            let v = [i as f64 / steps as f64, 1.0, j as f64 / steps as f64];
            let e = energy(&g, None, &v, &v).unwrap() + v.iter().map(|x| x * x).sum::<f64>();
            best = best.min(e);
        }
    }
    let cap = capacity(&g, &[1]).unwrap();
    assert!((cap.value - 7.0 / 3.0).abs() < 1e-10);
    assert!(cap.value <= best + 1e-12 && best - cap.value < 1e-4);
}

#[test]
fn capacity_beats_coordinate_descent() {
    let g = random_graph(5, 0.5, 21);
    let set = [2usize];
    let cap = capacity(&g, &set).unwrap();
    let mut v = vec![0.5; 5];
    v[2] = 1.0;
    let e1 = |v: &[f64]| energy(&g, None, v, v).unwrap() + v.iter().zip(g.mass()).map(|(x, m)| m * x * x).sum::<f64>();
    for _ in 0..200 {
        for x in (0..5).filter(|x| *x != 2) {
            let mut lo = 0.0;
            let mut hi = 1.0;
            for _ in 0..80 {
                let (a, b) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
                v[x] = a;
                let fa = e1(&v);
                v[x] = b;
                let fb = e1(&v);
                if fa < fb {
                    hi = b;
                } else {
                    lo = a;
                }
            }
            v[x] = 0.5 * (lo + hi);
        }
    }
    assert!((e1(&v) - cap.value).abs() < 1e-9);
}

fn mirror_energy(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let g = build_model(&ModelSpec::Mirror { n }).unwrap();
    let u: Vec<f64> = mirror_points(n).iter().map(|&(_, x)| f(x)).collect();
    energy(&g, None, &u, &u).unwrap()
}

/// `∫_0^1 (f(x) - f(-x))^2 x^(-5/2) dx` in closed form for the three test
/// functions: `8`, `0` and `+∞` (the partial integral from `h` is `4 ln(1/h)`).
#[test]
fn mirror_energies_against_improper_integrals() {
    let u = |x: f64| x;
    let v = |x: f64| x.abs().powf(-0.25);
    let uv = |x: f64| x * x.abs().powf(-0.25);
    let sizes = [64usize, 128, 256, 512, 1024];
    let eu: Vec<f64> = sizes.iter().map(|&n| mirror_energy(n, u)).collect();
    let ev: Vec<f64> = sizes.iter().map(|&n| mirror_energy(n, v)).collect();
    let euv: Vec<f64> = sizes.iter().map(|&n| mirror_energy(n, uv)).collect();
    let du: Vec<f64> = eu.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(du.windows(2).all(|w| w[1] < w[0]));
    // Right-endpoint sum of 4 x^(-1/2): 8 + 4 ζ(1/2) sqrt(h) + O(h).
    let zeta_half = -1.460_354_508_809_586_8;
    for (&n, &e) in sizes.iter().zip(&eu) {
        let h = 2.0 / n as f64;
        assert!((e - (8.0 + 4.0 * zeta_half * h.sqrt())).abs() < 2.0 * h, "{n}: {e}");
    }
    assert!(ev.iter().all(|&e| e.abs() < 1e-12));
    for w in euv.windows(2) {
        let inc = w[1] - w[0];
        assert!((inc - 4.0 * 2f64.ln()).abs() <= 0.1 * 4.0 * 2f64.ln(), "{inc}");
    }
}
