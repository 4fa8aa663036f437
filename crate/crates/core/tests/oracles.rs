//! Checks against independent computations: explicit projector traces,
//! dense sphere sampling and brute force over classical strategies.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qrac::classical::{classical_maxmin, Constraint};
use qrac::optimal::pmax;
use qrac::pauli_bloch::C64;
use qrac::{density_from_bloch, parity_prob, BellDiagonal, DecodingSet, RacTask, TwoQubitBloch, UnitVector3};

fn pauli() -> [Matrix2<C64>; 3] {
    let (o, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    let j = C64::new(0.0, 1.0);
    [
        Matrix2::new(o, i, i, o),
        Matrix2::new(o, -j, j, o),
        Matrix2::new(i, o, o, -i),
    ]
}

fn projector(dir: &Vector3<f64>, sign: f64) -> Matrix2<C64> {
    let s = pauli();
    let dot = s[0] * C64::from(dir[0]) + s[1] * C64::from(dir[1]) + s[2] * C64::from(dir[2]);
    (Matrix2::identity() + dot * C64::from(sign)) * C64::from(0.5)
}

fn kron(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

fn random_unit(rng: &mut ChaCha8Rng) -> UnitVector3 {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    let r = (1.0 - z * z).sqrt();
    UnitVector3::from_array([r * phi.cos(), r * phi.sin(), z]).unwrap()
}

fn random_state(rng: &mut ChaCha8Rng) -> TwoQubitBloch {
    loop {
        let t: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
        if let Ok(bd) = BellDiagonal::new(t[0], t[1], t[2]) {
            let m = random_unit(rng).into_inner() * rng.random_range(0.0..0.3);
            let n = random_unit(rng).into_inner() * rng.random_range(0.0..0.3);
            let s = bd.to_bloch().with_local(m, n);
            if s.is_valid_state() {
                return s;
            }
        }
    }
}

#[test]
fn parity_matches_projector_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let s = random_state(&mut rng);
        let rho = density_from_bloch(&s).unwrap();
        let (a, b) = (random_unit(&mut rng), random_unit(&mut rng));
        for xk in 0..2u8 {
            let mut p = 0.0;
            for (sa, sb) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let same = sa == sb;
                if same == (xk == 0) {
                    let pi = kron(&projector(&a, sa), &projector(&b, sb));
                    p += (rho.matrix() * pi).trace().re;
                }
            }
            assert!((p - parity_prob(&s, &a, &b, xk)).abs() < 1e-12);
        }
    }
}

/// Fibonacci lattice: `count` nearly uniform points on the sphere.
fn fibonacci_sphere(count: usize) -> Vec<Vector3<f64>> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            Vector3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

fn worst_projection(a: &Vector3<f64>, targets: &[Vector3<f64>]) -> f64 {
    targets.iter().map(|v| a.dot(v)).fold(f64::INFINITY, f64::min)
}

/// Per string `x`, the best encodings on the lattice are each refined by
/// repeated grid searches over shrinking caps; the worst case is the minimum
/// over `x`.
fn sampled_pmax(s: &TwoQubitBloch, dec: &DecodingSet, points: &[Vector3<f64>]) -> f64 {
    let n = dec.len();
    let task = RacTask::new(n).unwrap();
    let t = Vector3::from(s.correlations());
    let spacing = (4.0 * PI / points.len() as f64).sqrt();
    let zoom = |start: Vector3<f64>, targets: &[Vector3<f64>]| {
        let (mut center, mut top) = (start, worst_projection(&start, targets));
        let mut radius = 2.0 * spacing;
        let steps = 30;
        for _ in 0..16 {
            let e1 = center.cross(&Vector3::new(0.3, -0.5, 0.8)).normalize();
            let e2 = center.cross(&e1);
            let h = radius / steps as f64;
            let base = center;
            for i in -steps..=steps {
                for j in -steps..=steps {
                    let a = (base + e1 * (i as f64 * h) + e2 * (j as f64 * h)).normalize();
                    let v = worst_projection(&a, targets);
                    if v > top {
                        (center, top) = (a, v);
                    }
                }
            }
            radius *= 0.5;
        }
        top
    };
    let best = |targets: &[Vector3<f64>]| {
        let mut scored: Vec<(f64, Vector3<f64>)> = points.iter().map(|a| (worst_projection(a, targets), *a)).collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        scored.iter().take(8).map(|(_, a)| zoom(*a, targets)).fold(f64::NEG_INFINITY, f64::max)
    };
    (0..task.num_strings())
        .map(|x| {
            let targets: Vec<Vector3<f64>> = (0..n)
                .map(|k| t.component_mul(&dec.directions()[k]) * if task.bit(x, k) == 0 { 1.0 } else { -1.0 })
                .collect();
            best(&targets)
        })
        .fold(f64::INFINITY, f64::min)
        .mul_add(0.5, 0.5)
}

#[test]
fn closed_form_matches_dense_sphere_sampling() {
    let points = fibonacci_sphere(20_000);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in [2, 3] {
        for _ in 0..25 {
            let t: [f64; 3] = loop {
                let t: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
                if BellDiagonal::new(t[0], t[1], t[2]).is_ok() {
                    break t;
                }
            };
            let s = BellDiagonal::new(t[0], t[1], t[2]).unwrap().to_bloch();
            let dec = loop {
                let d: Vec<_> = (0..n).map(|_| random_unit(&mut rng)).collect();
                let v: Vec<_> = d.iter().map(|u| u.into_inner()).collect();
                let ok = v[0].cross(&v[1]).norm() > 0.1
                    && (n == 2 || (v[0].cross(&v[2]).norm() > 0.1 && v[1].cross(&v[2]).norm() > 0.1 && v[0].cross(&v[1]).dot(&v[2]).abs() > 0.1));
                if ok {
                    break DecodingSet::new(d);
                }
            };
            let closed = pmax(&s, &dec).unwrap().p_max;
            let sampled = sampled_pmax(&s, &dec, &points);
            assert!(sampled <= closed + 1e-12, "n={n} t={t:?}: sampled {sampled} > closed {closed}");
            assert!(closed - sampled < 1e-5, "n={n} t={t:?}: closed {closed}, sampled {sampled}");
        }
    }
}

/// Worst case of a deterministic-given-shared-bits strategy with source `p`.
fn brute_force_classical(bob_uniform: bool) -> f64 {
    let grid = 12;
    let mut best: f64 = 0.0;
    // Encoders: for each x, bits sent for r_a in {0,1}; 2^(4·2) choices.
    // Decoders: for each k, guess as a function of (c, r_b); 2^(2·4) choices.
    let mut success = vec![[[0u8; 4]; 256]; 256];
    for enc in 0..256usize {
        for dec in 0..256usize {
            for ra in 0..2 {
                for rb in 0..2 {
                    let mut row = 0u8;
                    for x in 0..4 {
                        let c = (enc >> (2 * x + ra)) & 1;
                        for k in 0..2 {
                            let guess = (dec >> (4 * k + 2 * c + rb)) & 1;
                            if guess == (x >> (1 - k)) & 1 {
                                row |= 1 << (2 * x + k);
                            }
                        }
                    }
                    success[enc][dec][2 * ra + rb] = row;
                }
            }
        }
    }
    for i in 0..=grid {
        for j in 0..=grid - i {
            for k in 0..=grid - i - j {
                let l = grid - i - j - k;
                let p = [i, j, k, l].map(|v| v as f64 / grid as f64);
                if bob_uniform && (p[0] + p[2] - 0.5).abs() > 1e-12 {
                    continue;
                }
                for table in &success {
                    for rows in table {
                        let worst = (0..8)
                            .map(|bit| (0..4).filter(|r| rows[*r] >> bit & 1 == 1).map(|r| p[r]).sum::<f64>())
                            .fold(f64::INFINITY, f64::min);
                        best = best.max(worst);
                    }
                }
            }
        }
    }
    best
}

#[test]
fn classical_two_bit_optimum_matches_brute_force() {
    let free = brute_force_classical(false);
    assert!((free - 2.0 / 3.0).abs() < 1e-12, "brute force {free}");
    assert_eq!(classical_maxmin(2, Constraint::Unrestricted).unwrap().exact, "2/3");
    let fixed = brute_force_classical(true);
    assert!((fixed - 0.5).abs() < 1e-12, "brute force {fixed}");
    assert_eq!(classical_maxmin(2, Constraint::BobMaximallyMixed).unwrap().exact, "1/2");
}
