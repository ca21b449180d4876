//! Brute-force reference implementation on the full 2^L Hilbert space.
//!
//! Nothing here calls into the library's numerics: the Hamiltonian is built
//! from Kronecker products of spin matrices, spectra come from a cyclic
//! Jacobi solver, and the partial trace runs over every environment
//! configuration. Basis index = spin configuration bits, bit i set = site i up.

#![allow(dead_code)]

use num_complex::Complex64 as C;

pub const ZERO: C = C { re: 0.0, im: 0.0 };

/// Row-major dense complex matrix.
#[derive(Clone, Debug)]
pub struct Dense {
    pub n: usize,
    pub a: Vec<C>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Dense { n, a: vec![ZERO; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[C]]) -> Self {
        let n = rows.len();
        Dense { n, a: rows.iter().flat_map(|r| r.iter().copied()).collect() }
    }

    pub fn mul(&self, b: &Dense) -> Dense {
        let n = self.n;
        let mut c = Dense::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let x = self[(i, k)];
                if x == ZERO {
                    continue;
                }
                for j in 0..n {
                    c.a[i * n + j] += x * b.a[k * n + j];
                }
            }
        }
        c
    }

    pub fn add(&self, b: &Dense, s: C) -> Dense {
        Dense { n: self.n, a: self.a.iter().zip(&b.a).map(|(x, y)| x + s * y).collect() }
    }

    pub fn scale(&self, s: C) -> Dense {
        Dense { n: self.n, a: self.a.iter().map(|x| x * s).collect() }
    }

    pub fn adjoint(&self) -> Dense {
        let n = self.n;
        let mut m = Dense::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self[(j, i)].conj();
            }
        }
        m
    }

    pub fn apply(&self, v: &[C]) -> Vec<C> {
        (0..self.n).map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum()).collect()
    }

    pub fn kron(&self, b: &Dense) -> Dense {
        let n = self.n * b.n;
        let mut m = Dense::zeros(n);
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..b.n {
                    for l in 0..b.n {
                        m[(i * b.n + k, j * b.n + l)] = self[(i, j)] * b[(k, l)];
                    }
                }
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for Dense {
    type Output = C;
    fn index(&self, (i, j): (usize, usize)) -> &C {
        &self.a[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Dense {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C {
        &mut self.a[i * self.n + j]
    }
}

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Spin-1/2 matrices in the local order (|↓⟩, |↑⟩), matching bit 0 / bit 1.
pub fn spin(axis: char) -> Dense {
    match axis {
        'x' => Dense::from_rows(&[&[ZERO, c(0.5, 0.0)], &[c(0.5, 0.0), ZERO]]),
        'y' => Dense::from_rows(&[&[ZERO, c(0.0, 0.5)], &[c(0.0, -0.5), ZERO]]),
        'z' => Dense::from_rows(&[&[c(-0.5, 0.0), ZERO], &[ZERO, c(0.5, 0.0)]]),
        _ => unreachable!(),
    }
}

/// `op` acting on `site` of an `l`-site chain. Site 0 is the least
/// significant bit, so it is the rightmost Kronecker factor.
pub fn embed(op: &Dense, site: usize, l: usize) -> Dense {
    let mut m = Dense::identity(1);
    for s in (0..l).rev() {
        m = m.kron(if s == site { op } else { &IDENTITY2 });
    }
    m
}

static IDENTITY2: std::sync::LazyLock<Dense> = std::sync::LazyLock::new(|| Dense::identity(2));

/// Chain description for the oracle, independent of the library's types.
#[derive(Clone, Debug)]
pub struct Chain {
    pub l: usize,
    pub j: f64,
    pub delta: f64,
    pub fields: Vec<f64>,
    pub alice: usize,
    pub bob: usize,
    /// Bob has no bonds and no field.
    pub isolated_bob: bool,
    pub psi_minus: bool,
}

/// Full 2^L Hamiltonian, optionally keeping only terms inside `window`.
pub fn full_hamiltonian(ch: &Chain, window: Option<std::ops::Range<usize>>) -> Dense {
    let l = ch.l;
    let w = window.unwrap_or(0..l);
    let dim = 1 << l;
    let mut h = Dense::zeros(dim);
    let (sx, sy, sz) = (spin('x'), spin('y'), spin('z'));
    for i in 0..l - 1 {
        if !(w.contains(&i) && w.contains(&(i + 1))) {
            continue;
        }
        if ch.isolated_bob && (i == ch.bob || i + 1 == ch.bob) {
            continue;
        }
        let xx = embed(&sx, i, l).mul(&embed(&sx, i + 1, l));
        let yy = embed(&sy, i, l).mul(&embed(&sy, i + 1, l));
        let zz = embed(&sz, i, l).mul(&embed(&sz, i + 1, l));
        h = h.add(&xx, c(ch.j, 0.0)).add(&yy, c(ch.j, 0.0)).add(&zz, c(ch.delta, 0.0));
    }
    for i in 0..l {
        if !w.contains(&i) || (ch.isolated_bob && i == ch.bob) {
            continue;
        }
        h = h.add(&embed(&sz, i, l), c(ch.fields[i], 0.0));
    }
    h
}

/// Bell pair on (alice, bob) times the Néel pattern ↑↓↑↓… on the remaining
/// sites in increasing order.
pub fn full_initial_state(ch: &Chain) -> Vec<C> {
    let mut env = 0usize;
    let mut up = true;
    for s in 0..ch.l {
        if s == ch.alice || s == ch.bob {
            continue;
        }
        if up {
            env |= 1 << s;
        }
        up = !up;
    }
    let mut psi = vec![ZERO; 1 << ch.l];
    let r = std::f64::consts::FRAC_1_SQRT_2;
    psi[env | (1 << ch.alice)] = c(r, 0.0);
    psi[env | (1 << ch.bob)] = c(if ch.psi_minus { -r } else { r }, 0.0);
    psi
}

/// Cyclic Jacobi eigensolver for a real symmetric matrix given row-major.
/// Returns ascending eigenvalues and eigenvectors as columns (row-major).
pub fn jacobi_eigh(a_in: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = a_in.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j].powi(2))
            .sum();
        let total: f64 = a.iter().map(|x| x * x).sum();
        if off <= 1e-34 * total.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = cs * akp - sn * akq;
                    a[k * n + q] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = cs * apk - sn * aqk;
                    a[q * n + k] = sn * apk + cs * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = cs * vkp - sn * vkq;
                    v[k * n + q] = sn * vkp + cs * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let vals = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vecs[k * n + new] = v[k * n + old];
        }
    }
    (vals, vecs)
}

/// Eigenvalues of a complex Hermitian matrix via the real embedding
/// [[Re, −Im], [Im, Re]], whose spectrum is the original one doubled.
pub fn hermitian_eigenvalues(m: &Dense) -> Vec<f64> {
    let n = m.n;
    let mut r = vec![0.0; 4 * n * n];
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            r[i * 2 * n + j] = z.re;
            r[i * 2 * n + j + n] = -z.im;
            r[(i + n) * 2 * n + j] = z.im;
            r[(i + n) * 2 * n + j + n] = z.re;
        }
    }
    let (vals, _) = jacobi_eigh(&r, 2 * n);
    vals.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

/// Spectral evolution for a real symmetric H.
pub struct FullPropagator {
    pub energies: Vec<f64>,
    pub vectors: Vec<f64>,
    pub n: usize,
}

impl FullPropagator {
    pub fn new(h: &Dense) -> Self {
        let n = h.n;
        assert!(h.a.iter().all(|z| z.im == 0.0), "oracle H is real");
        let re: Vec<f64> = h.a.iter().map(|z| z.re).collect();
        let (energies, vectors) = jacobi_eigh(&re, n);
        FullPropagator { energies, vectors, n }
    }

    pub fn evolve(&self, psi0: &[C], t: f64) -> Vec<C> {
        let n = self.n;
        let coeff: Vec<C> = (0..n)
            .map(|k| {
                let overlap: C = (0..n).map(|i| psi0[i] * self.vectors[i * n + k]).sum();
                overlap * C::from_polar(1.0, -self.energies[k] * t)
            })
            .collect();
        (0..n).map(|i| (0..n).map(|k| coeff[k] * self.vectors[i * n + k]).sum()).collect()
    }
}

/// exp(−iHt) by Taylor series with scaling and squaring.
pub fn expm_minus_i(h: &Dense, t: f64) -> Dense {
    let norm = h.max_abs() * h.n as f64 * t.abs();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let a = h.scale(c(0.0, -t / 2f64.powi(squarings as i32)));
    let mut term = Dense::identity(h.n);
    let mut sum = Dense::identity(h.n);
    for k in 1..30 {
        term = term.mul(&a).scale(c(1.0 / k as f64, 0.0));
        sum = sum.add(&term, c(1.0, 0.0));
    }
    for _ in 0..squarings {
        sum = sum.mul(&sum);
    }
    sum
}

/// ρ_AB in the order |↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩ by summing over every
/// configuration of the other sites.
pub fn full_partial_trace(psi: &[C], l: usize, alice: usize, bob: usize) -> Dense {
    let idx = |cfg: usize| (if cfg >> alice & 1 == 1 { 0 } else { 2 }) + (if cfg >> bob & 1 == 1 { 0 } else { 1 });
    let pair_mask = (1 << alice) | (1 << bob);
    let mut rho = Dense::zeros(4);
    for x in 0..1usize << l {
        for y in 0..1usize << l {
            if x & !pair_mask != y & !pair_mask {
                continue;
            }
            rho[(idx(x), idx(y))] += psi[x] * psi[y].conj();
        }
    }
    rho
}

pub fn oracle_negativity(rho: &Dense) -> f64 {
    let mut pt = Dense::zeros(4);
    for i in 0..4 {
        for j in 0..4 {
            let (a, b, ap, bp) = (i / 2, i % 2, j / 2, j % 2);
            pt[(i, j)] = rho[(2 * a + bp, 2 * ap + b)];
        }
    }
    2.0 * hermitian_eigenvalues(&pt).iter().filter(|&&m| m < 0.0).map(|m| -m).sum::<f64>()
}

/// Largest modulus of the entries outside the X pattern (diagonal plus
/// anti-diagonal).
pub fn off_x_weight(rho: &Dense) -> f64 {
    let mut w: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            if i != j && i + j != 3 {
                w = w.max(rho[(i, j)].norm());
            }
        }
    }
    w
}

/// Closed-form concurrence of an X state:
/// 2 max(0, |ρ₁₂| − √(ρ₀₀ρ₃₃), |ρ₀₃| − √(ρ₁₁ρ₂₂)).
pub fn x_state_concurrence(rho: &Dense) -> f64 {
    let d = |i: usize| rho[(i, i)].re.max(0.0);
    let a = rho[(1, 2)].norm() - (d(0) * d(3)).sqrt();
    let b = rho[(0, 3)].norm() - (d(1) * d(2)).sqrt();
    2.0 * a.max(b).max(0.0)
}

/// General Wootters concurrence through the Jacobi solver.
pub fn oracle_concurrence(rho: &Dense) -> f64 {
    // √ρ from the real embedding's eigenvectors is awkward; use the
    // non-Hermitian route: eigenvalues of ρρ̃ via the characteristic
    // polynomial, rooted with Durand-Kerner.
    let yy = Dense::from_rows(&[
        &[ZERO, ZERO, ZERO, c(-1.0, 0.0)],
        &[ZERO, ZERO, c(1.0, 0.0), ZERO],
        &[ZERO, c(1.0, 0.0), ZERO, ZERO],
        &[c(-1.0, 0.0), ZERO, ZERO, ZERO],
    ]);
    let conj = Dense { n: 4, a: rho.a.iter().map(|z| z.conj()).collect() };
    let tilde = yy.mul(&conj).mul(&yy);
    let m = rho.mul(&tilde);
    let mut lambdas: Vec<f64> = char_poly_roots(&m).iter().map(|z| z.re.max(0.0).sqrt()).collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0)
}

/// Roots of det(zI − M) for a 4×4 M: Faddeev-LeVerrier coefficients, then
/// Durand-Kerner iteration.
pub fn char_poly_roots(m: &Dense) -> Vec<C> {
    let n = m.n;
    let mut coeffs = vec![C::new(1.0, 0.0)];
    let mut mk = Dense::zeros(n);
    for k in 1..=n {
        let prev = coeffs[k - 1];
        let ident = Dense::identity(n).scale(prev);
        mk = m.mul(&mk.add(&ident, C::new(1.0, 0.0)));
        let tr: C = (0..n).map(|i| mk[(i, i)]).sum();
        coeffs.push(-tr / k as f64);
    }
    let eval = |z: C| coeffs.iter().fold(ZERO, |acc, &a| acc * z + a);
    let mut roots: Vec<C> = (0..n).map(|k| C::new(0.4, 0.9).powu(k as u32)).collect();
    for _ in 0..2000 {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            let denom: C = (0..n).filter(|&j| j != i).map(|j| roots[i] - roots[j]).product();
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-18 {
            break;
        }
    }
    roots
}

pub fn formation(concurrence: f64) -> f64 {
    let c = concurrence.min(1.0);
    let x = (1.0 + (1.0 - c * c).sqrt()) / 2.0;
    let h = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    h(x) + h(1.0 - x)
}

/// ⟨ψ|H|ψ⟩ and ‖ψ‖.
pub fn energy_and_norm(h: &Dense, psi: &[C]) -> (f64, f64) {
    let hp = h.apply(psi);
    let e: C = psi.iter().zip(&hp).map(|(a, b)| a.conj() * b).sum();
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    (e.re, norm)
}
pub mod compare;
