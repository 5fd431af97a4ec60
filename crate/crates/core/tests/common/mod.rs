#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use maslov::linalg::{self, CMat, RMat};
use maslov::random;
use maslov::souriau::souriau;
use maslov::{LagrangianFrame, LagrangianPath, Path, SymplecticSpace, UnitaryMatrix, UnitaryPath};
use num_complex::Complex64;
use rand::Rng;

pub fn space(n: usize) -> Arc<SymplecticSpace> {
    Arc::new(SymplecticSpace::standard(n).unwrap())
}

/// Frame of the Lagrangian `Z(R^n)` for a unitary `Z`, built by hand.
pub fn frame_of(space: &Arc<SymplecticSpace>, z: &CMat) -> LagrangianFrame {
    let n = z.nrows();
    let m = RMat::from_fn(2 * n, n, |i, j| if i < n { z[(i, j)].re } else { z[(i - n, j)].im });
    LagrangianFrame::new(space, m).unwrap()
}

/// The loop `mu(t) = U(t) J(lambda)` with `U(t) = e^{i pi t}` on the first `k`
/// vertical directions and the identity elsewhere.
pub fn half_turn_loop(n: usize, k: usize) -> (Arc<SymplecticSpace>, LagrangianFrame, LagrangianPath) {
    let sp = space(n);
    let lambda = sp.horizontal();
    let s2 = sp.clone();
    let path = Path::from_fn(
        move |t| {
            let mut f = RMat::zeros(2 * n, n);
            for j in 0..n {
                let a = if j < k { PI * t } else { 0.0 };
                f[(j, j)] = -a.sin();
                f[(n + j, j)] = a.cos();
            }
            LagrangianFrame::new(&s2, f)
        },
        8,
    )
    .unwrap();
    (sp, lambda, path)
}

fn exp_i_sym(s: &RMat) -> CMat {
    let (vals, vecs) = linalg::sym_eigen(s);
    let q = linalg::to_complex(&vecs);
    let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|v| Complex64::from_polar(1.0, *v)),
    ));
    &q * d * q.adjoint()
}

/// Random smooth path `Z0 exp(i (t A + sin(2 pi t) B + t^2 C))` in frame form.
pub fn random_path(sp: &Arc<SymplecticSpace>, scale: f64, rng: &mut impl Rng) -> LagrangianPath {
    let n = sp.n();
    let z0 = random::unitary(n, rng);
    let a = random::symmetric(n, rng) * scale;
    let b = random::symmetric(n, rng) * (0.5 * scale);
    let c = random::symmetric(n, rng) * (0.5 * scale);
    let s2 = sp.clone();
    Path::from_fn(
        move |t| {
            let s = &a * t + &b * (2.0 * PI * t).sin() + &c * (t * t);
            Ok(frame_of(&s2, &(&z0 * exp_i_sym(&s))))
        },
        16,
    )
    .unwrap()
}

/// Random smooth loop `Z0 exp(i (sin(2 pi t) A + (1 - cos(2 pi t)) B))`.
pub fn random_loop(sp: &Arc<SymplecticSpace>, scale: f64, rng: &mut impl Rng) -> LagrangianPath {
    let n = sp.n();
    let z0 = random::unitary(n, rng);
    let a = random::symmetric(n, rng) * scale;
    let b = random::symmetric(n, rng) * scale;
    let s2 = sp.clone();
    Path::from_fn(
        move |t| {
            let w = 2.0 * PI * t;
            let s = &a * w.sin() + &b * (1.0 - w.cos());
            Ok(frame_of(&s2, &(&z0 * exp_i_sym(&s))))
        },
        16,
    )
    .unwrap()
}

/// Loop winding `k` times: `e^{2 pi i k t}` on one complex direction of a
/// random unitary frame, relative to `lambda = Z0(R^n)` rotated by a quarter turn.
pub fn winding_loop(sp: &Arc<SymplecticSpace>, k: i64, rng: &mut impl Rng) -> (LagrangianFrame, LagrangianPath) {
    let n = sp.n();
    let z0 = random::unitary(n, rng);
    let mut rot = CMat::identity(n, n);
    rot[(0, 0)] = Complex64::new(0.0, 1.0);
    let lambda = frame_of(sp, &(&z0 * &rot));
    let s2 = sp.clone();
    let path = Path::from_fn(
        move |t| {
            let mut d = CMat::identity(n, n);
            d[(0, 0)] = Complex64::from_polar(1.0, PI * k as f64 * t);
            Ok(frame_of(&s2, &(&z0 * d)))
        },
        8 * (k.unsigned_abs() as usize).max(1),
    )
    .unwrap();
    (lambda, path)
}

fn phases_around_minus_one(u: &UnitaryMatrix) -> Vec<f64> {
    // U is normal: diagonalize the Hermitian combination Re U + 0.37 Im U and
    // read the eigenvalues of -U off the diagonal of V* (-U) V
    let m = -u.matrix().clone();
    let re = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let im = (&m - m.adjoint()) * Complex64::new(0.0, -0.5);
    let h = re + im * Complex64::new(0.37, 0.0);
    let v = nalgebra::SymmetricEigen::new(h).eigenvectors;
    let d = v.adjoint() * &m * &v;
    (0..d.nrows())
        .map(|i| {
            let th = d[(i, i)].arg();
            if th.abs() < 1e-7 { 0.0 } else { th }
        })
        .collect()
}

/// Signed count of eigenphase trajectories through `-1` on a dense resample:
/// upward passes `theta < 0 <= theta'` count +1, downward passes
/// `theta >= 0 > theta'` count -1.
pub fn dense_oracle_unitary(u: &dyn Fn(f64) -> UnitaryMatrix, samples: usize) -> i64 {
    let mut prev = phases_around_minus_one(&u(0.0));
    let mut count = 0i64;
    for s in 1..=samples {
        let t = s as f64 / samples as f64;
        let next = phases_around_minus_one(&u(t));
        let mut used = vec![false; next.len()];
        for &p in &prev {
            let mut best = (f64::INFINITY, 0);
            for (j, &q) in next.iter().enumerate() {
                if used[j] {
                    continue;
                }
                let mut d = (q - p).rem_euclid(2.0 * PI);
                if d > PI {
                    d -= 2.0 * PI;
                }
                if d.abs() < best.0 {
                    best = (d.abs(), j);
                }
            }
            used[best.1] = true;
            let q = next[best.1];
            // only near-zero passes matter; wraps through pi are ignored
            if p.abs() < 1.0 && q.abs() < 1.0 {
                if p < 0.0 && q >= 0.0 {
                    count += 1;
                } else if p >= 0.0 && q < 0.0 {
                    count -= 1;
                }
            }
        }
        prev = next;
    }
    count
}

pub fn dense_oracle(path: &LagrangianPath, lambda: &LagrangianFrame, samples: usize) -> i64 {
    let r = path.refiner().expect("oracle needs a refiner").clone();
    let l = lambda.clone();
    dense_oracle_unitary(&move |t| souriau(&l, &r(t).unwrap()).unwrap(), samples)
}

pub fn unitary_path(f: impl Fn(f64) -> UnitaryMatrix + Send + Sync + 'static, intervals: usize) -> UnitaryPath {
    Path::from_fn(move |t| Ok(f(t)), intervals).unwrap()
}

/// Random `B` with `bJ B = -B bJ`: `[[P, Q], [Q, -P]]` with `P`, `Q` symmetric.
pub fn anticommuting(n: usize, scale: f64, rng: &mut impl Rng) -> RMat {
    let p = random::symmetric(n, rng) * scale;
    let q = random::symmetric(n, rng) * scale;
    linalg::vstack(&[&linalg::hstack(&[&p, &q]), &linalg::hstack(&[&q, &(-&p)])])
}

fn clamp_norm(m: RMat, bound: f64) -> RMat {
    let s = m.clone().singular_values().max();
    if s > bound { m * (bound / s) } else { m }
}

/// Random admissible boundary problem with `C_t = C0 cos(pi t) + C1 sin(pi t)`,
/// `|C_t| <= 2`, sampled at `samples` points.
pub fn random_family(n: usize, samples: usize, rng: &mut impl Rng) -> maslov::spectral::BoundaryProblem {
    let sp = space(n);
    let b = anticommuting(n, 0.3, rng);
    let c0 = clamp_norm(random::symmetric(2 * n, rng), 1.4);
    let c1 = clamp_norm(random::symmetric(2 * n, rng), 1.4);
    let family = (0..samples)
        .map(|k| {
            let t = k as f64 / (samples - 1) as f64;
            (t, &c0 * (PI * t).cos() + &c1 * (PI * t).sin())
        })
        .collect();
    let l0 = random::lagrangian(&sp, rng);
    let l1 = random::lagrangian(&sp, rng);
    maslov::spectral::BoundaryProblem::new(b, family, l0, l1).unwrap()
}

/// `N = 1`, `B = 0`, `C_t = t I` for `t` in `[-pi/2, pi/2]`, both boundary
/// conditions `span(e_1)`.
pub fn rotation_family(samples: usize) -> maslov::spectral::BoundaryProblem {
    let sp = space(1);
    let family = (0..samples)
        .map(|k| {
            let t = -PI / 2.0 + PI * k as f64 / (samples - 1) as f64;
            (t, RMat::identity(2, 2) * t)
        })
        .collect();
    maslov::spectral::BoundaryProblem::new(RMat::zeros(2, 2), family, sp.horizontal(), sp.horizontal()).unwrap()
}
