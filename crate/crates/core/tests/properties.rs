use nalgebra::{Matrix3, Matrix4, Rotation3, Vector3};
use proptest::prelude::*;

use qrac::classical::{classical_maxmin, strategy_worstcase, ClassicalStrategy, Constraint};
use qrac::lp::{q, LinearProgram, Q};
use qrac::measures::{advantage_predicates, measure_set};
use qrac::optimal::{equal_projection_residual, orthogonal_min_2to1, pmax, pmax_2to1, equalized_bound_2to1};
use qrac::oracle::{oracle_pmax, SphereSearchConfig};
use qrac::pauli_bloch::C64;
use qrac::rac::evaluate;
use qrac::{
    bloch_from_density, canonicalize, density_from_bloch, parity_prob, BellDiagonal, DecodingSet, DensityMatrix4,
    RacTask, TwoQubitBloch, UnitVector3,
};

fn bell_diagonal() -> impl Strategy<Value = BellDiagonal> {
    [-1.0f64..=1.0, -1.0f64..=1.0, -1.0f64..=1.0]
        .prop_filter_map("outside tetrahedron", |t| BellDiagonal::new(t[0], t[1], t[2]).ok())
}

fn unit() -> impl Strategy<Value = UnitVector3> {
    (-1.0f64..=1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(z, phi)| {
        let r = (1.0 - z * z).sqrt();
        UnitVector3::from_array([r * phi.cos(), r * phi.sin(), z]).unwrap()
    })
}

fn rotation() -> impl Strategy<Value = Matrix3<f64>> {
    (unit(), 0.0f64..std::f64::consts::TAU)
        .prop_map(|(axis, angle)| *Rotation3::from_axis_angle(&nalgebra::Unit::new_unchecked(axis.into_inner()), angle).matrix())
}

fn decodings(n: usize) -> impl Strategy<Value = DecodingSet> {
    prop::collection::vec(unit(), n).prop_filter_map("nearly degenerate", move |d| {
        let v: Vec<_> = d.iter().map(|u| u.into_inner()).collect();
        let apart = (0..n).all(|i| (i + 1..n).all(|j| v[i].cross(&v[j]).norm() > 0.05));
        let volume = n == 2 || v[0].cross(&v[1]).dot(&v[2]).abs() > 0.05;
        (apart && volume).then(|| DecodingSet::new(d))
    })
}

/// `GG†/tr` for a random complex `G`: a full-rank mixed state.
fn density() -> impl Strategy<Value = DensityMatrix4> {
    prop::collection::vec(-1.0f64..1.0, 32).prop_map(|v| {
        let g = Matrix4::from_fn(|r, c| C64::new(v[4 * r + c], v[16 + 4 * r + c]));
        let m = g * g.adjoint();
        let tr = m.trace();
        DensityMatrix4::new(m / tr).unwrap()
    })
}

fn sorted_abs(v: [f64; 3]) -> [f64; 3] {
    let mut a = v.map(f64::abs);
    a.sort_by(|x, y| y.total_cmp(x));
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bloch_round_trip(rho in density()) {
        let back = density_from_bloch(&bloch_from_density(&rho)).unwrap();
        let err = (back.matrix() - rho.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12);
    }

    #[test]
    fn parity_probabilities_sum_to_one(rho in density(), a in unit(), b in unit()) {
        let s = bloch_from_density(&rho);
        let total = parity_prob(&s, &a, &b, 0) + parity_prob(&s, &a, &b, 1);
        prop_assert!((total - 1.0).abs() < 1e-14);
        let p = parity_prob(&s, &a, &b, 0);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&p));
    }

    #[test]
    fn parity_ignores_local_vectors(bd in bell_diagonal(), m in unit(), n in unit(), a in unit(), b in unit()) {
        let s = bd.to_bloch();
        let moved = s.with_local(m.into_inner() * 0.3, n.into_inner() * 0.2);
        prop_assert_eq!(parity_prob(&s, &a, &b, 1), parity_prob(&moved, &a, &b, 1));
    }

    #[test]
    fn canonicalize_keeps_spectrum_and_statistics(
        bd in bell_diagonal(), ra in rotation(), rb in rotation(), a in unit(), b in unit(),
    ) {
        let raw = TwoQubitBloch::new(Vector3::zeros(), Vector3::zeros(), ra * Matrix3::from_diagonal(&Vector3::from(bd.t())) * rb.transpose());
        let (canon, rot) = canonicalize(&raw);
        let want = sorted_abs(bd.t());
        let got = canon.correlations();
        for i in 0..3 {
            prop_assert!((got[i].abs() - want[i]).abs() < 1e-12);
        }
        prop_assert!(got[0].abs() >= got[1].abs() && got[1].abs() >= got[2].abs());
        prop_assert!((rot.alice.determinant() - 1.0).abs() < 1e-12);
        prop_assert!((rot.bob.determinant() - 1.0).abs() < 1e-12);
        let p_raw = parity_prob(&raw, &a, &b, 0);
        let p_canon = parity_prob(&canon, &rot.alice_to_canonical(&a), &rot.bob_to_canonical(&b), 0);
        prop_assert!((p_raw - p_canon).abs() < 1e-12);
    }

    #[test]
    fn tetrahedron_matches_eigenvalues(t in [-1.0f64..=1.0, -1.0f64..=1.0, -1.0f64..=1.0]) {
        let s = TwoQubitBloch::diagonal(Vector3::zeros(), Vector3::zeros(), t);
        let inside = BellDiagonal::new(t[0], t[1], t[2]).map(|_| ()).is_ok();
        // Stay clear of the boundary where tolerances decide.
        let [t1, t2, t3] = t;
        let w = [1.0 - t1 - t2 - t3, 1.0 - t1 + t2 + t3, 1.0 + t1 - t2 + t3, 1.0 + t1 + t2 - t3];
        prop_assume!(w.iter().all(|x| x.abs() > 1e-6));
        prop_assert_eq!(inside, s.is_valid_state());
    }

    #[test]
    fn report_statistics(bd in bell_diagonal(), dec in decodings(3), enc in prop::collection::vec(unit(), 8)) {
        let task = RacTask::new(3).unwrap();
        let enc = qrac::EncodingSet::new(enc);
        let r = evaluate(&task, &bd.to_bloch(), &enc, &dec).unwrap();
        let probs = r.probabilities();
        let mean = probs.iter().sum::<f64>() / probs.len() as f64;
        prop_assert!((r.p_avg() - mean).abs() < 1e-14);
        prop_assert_eq!(r.p_min(), probs.iter().copied().fold(f64::INFINITY, f64::min));
        let (x, k) = r.worst_pair();
        prop_assert_eq!(r.prob(x, k), r.p_min());
    }

    #[test]
    fn flipping_encodings_of_complements_preserves_success(bd in bell_diagonal(), dec in decodings(2), enc in prop::collection::vec(unit(), 4)) {
        let task = RacTask::new(2).unwrap();
        let s = bd.to_bloch();
        let mirrored: Vec<_> = (0..4).map(|x| enc[task.complement(x)].flipped()).collect();
        let a = evaluate(&task, &s, &qrac::EncodingSet::new(enc), &dec).unwrap();
        let b = evaluate(&task, &s, &qrac::EncodingSet::new(mirrored), &dec).unwrap();
        for x in 0..4 {
            for k in 0..2 {
                prop_assert!((a.prob(x, k) - b.prob(task.complement(x), k)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn closed_form_encodings_attain_pmax(
        bd in bell_diagonal(),
        (n, dec) in (2usize..=3).prop_flat_map(|n| (Just(n), decodings(n))),
    ) {
        let s = bd.to_bloch();
        let opt = pmax(&s, &dec).unwrap();
        let r = evaluate(&RacTask::new(n).unwrap(), &s, &opt.encodings, &dec).unwrap();
        prop_assert!((r.p_min() - opt.p_max).abs() < 1e-12);
        prop_assert!(equal_projection_residual(&s, &opt.encodings, &dec).unwrap() < 1e-9 || bd.t().iter().any(|t| t.abs() < 1e-9));
        prop_assert!((0.5..=1.0).contains(&opt.p_max));
    }

    #[test]
    fn pmax_grows_with_correlation_strength(bd in bell_diagonal(), dec in decodings(3), f in 0.0f64..1.0) {
        let s = bd.to_bloch();
        let weak = pmax(&s.scaled_correlations(f), &dec).unwrap().p_max;
        let strong = pmax(&s, &dec).unwrap().p_max;
        prop_assert!(weak <= strong + 1e-12);
        prop_assert!((weak - 0.5 - f * (strong - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn pmax_ignores_axis_signs_of_decodings(bd in bell_diagonal(), dec in decodings(2), flip in any::<[bool; 2]>()) {
        let s = bd.to_bloch();
        let flipped = DecodingSet::new(dec.directions().iter().zip(flip).map(|(d, f)| if f { d.flipped() } else { *d }).collect());
        let a = pmax_2to1(&s, &dec).unwrap().p_max;
        let b = pmax_2to1(&s, &flipped).unwrap().p_max;
        prop_assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn principal_axes_formula(bd in bell_diagonal()) {
        let s = bd.ordered().to_bloch();
        let t = s.correlations().map(f64::abs);
        let p = pmax_2to1(&s, &DecodingSet::principal_axes(2)).unwrap().p_max;
        let want = if t[1] == 0.0 { 0.5 } else { 0.5 * (1.0 + t[0] * t[1] / t[0].hypot(t[1])) };
        prop_assert!((p - want).abs() < 1e-14);
    }

    #[test]
    fn orthogonal_minimum_beats_half_iff_t3_nonzero(bd in bell_diagonal()) {
        let s = bd.ordered().to_bloch();
        let p = orthogonal_min_2to1(&s).unwrap();
        prop_assert_eq!(p > 0.5, s.correlations()[2] != 0.0);
        prop_assert_eq!(p > 0.5, advantage_predicates(&bd).all_orthogonal_2to1);
    }

    #[test]
    fn pmax_invariant_under_axis_permutation(bd in bell_diagonal(), dec in decodings(3)) {
        let s = bd.to_bloch();
        let t = bd.t();
        let permuted = TwoQubitBloch::diagonal(Vector3::zeros(), Vector3::zeros(), [t[2], t[0], t[1]]);
        let moved = DecodingSet::new(dec.directions().iter().map(|d| {
            let v = d.to_array();
            UnitVector3::from_array([v[2], v[0], v[1]]).unwrap()
        }).collect());
        let a = pmax(&s, &dec).unwrap().p_max;
        let b = pmax(&permuted, &moved).unwrap().p_max;
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn equalized_bound_never_exceeds_pmax(bd in bell_diagonal(), dec in decodings(2)) {
        let s = bd.to_bloch();
        let bound = equalized_bound_2to1(&s, &dec).unwrap();
        let exact = pmax_2to1(&s, &dec).unwrap().p_max;
        prop_assert!(bound <= exact + 1e-12);
    }

    #[test]
    fn measure_chain_is_monotone(a in bell_diagonal(), b in bell_diagonal()) {
        let (ma, mb) = (measure_set(&a), measure_set(&b));
        if ma.s3 < mb.s3 {
            prop_assert!(ma.q3 <= mb.q3 && ma.p_orth <= mb.p_orth);
        }
        prop_assert!(ma.s3 <= ma.s2);
        prop_assert!((0.0..=1.0).contains(&ma.d_geom));
    }

    #[test]
    fn zero_discord_means_no_universal_advantage(t in -1.0f64..=1.0) {
        let bd = BellDiagonal::new(t, 0.0, 0.0).unwrap();
        let m = measure_set(&bd);
        prop_assert!(m.d_geom.abs() < 1e-12);
        prop_assert!(!advantage_predicates(&bd).necessary_all_decodings);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn oracle_never_beats_closed_form(bd in bell_diagonal(), dec in decodings(3)) {
        let s = bd.to_bloch();
        let cfg = SphereSearchConfig { coarse_grid: 40, ..Default::default() };
        let closed = pmax(&s, &dec).unwrap().p_max;
        let oracle = oracle_pmax(&RacTask::new(3).unwrap(), &s, &dec, &cfg).unwrap().p_max;
        prop_assert!(oracle <= closed + 1e-9);
    }

    #[test]
    fn random_strategies_stay_below_the_optimum(
        enc in prop::collection::vec(any::<[bool; 2]>(), 4),
        dec in prop::collection::vec(any::<[[bool; 2]; 2]>(), 2),
        w in [0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0],
    ) {
        let total: f64 = w.iter().sum();
        prop_assume!(total > 1e-6);
        let strat = ClassicalStrategy {
            encoder: enc.iter().map(|e| e.map(u8::from)).collect(),
            decoders: dec.iter().map(|d| d.map(|r| r.map(u8::from))).collect(),
            source: [[w[0] / total, w[1] / total], [w[2] / total, w[3] / total]],
        };
        prop_assert!(strategy_worstcase(2, &strat).unwrap() <= 2.0 / 3.0 + 1e-12);
        let bob = [strat.source[0][0] + strat.source[1][0], strat.source[0][1] + strat.source[1][1]];
        if (bob[0] - 0.5).abs() < 1e-12 {
            prop_assert!(strategy_worstcase(2, &strat).unwrap() <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn random_programs_certify(
        c in prop::collection::vec(-5i64..=5, 3),
        a in prop::collection::vec(prop::collection::vec(-4i64..=4, 3), 1..4),
        b in prop::collection::vec(0i64..=6, 4),
        probes in prop::collection::vec([0i64..=4, 0i64..=4, 0i64..=4], 20),
    ) {
        let mut lp = LinearProgram::new(c.iter().map(|v| q(*v, 1)).collect());
        for (row, rhs) in a.iter().zip(&b) {
            lp.add_le(row.iter().map(|v| q(*v, 1)).collect(), q(*rhs, 1));
        }
        // Box keeps the program bounded.
        lp.add_le(vec![q(1, 1); 3], q(4, 1));
        let sol = lp.solve().unwrap();
        prop_assert!(sol.certify(&lp));
        let dot = |u: &[Q], v: &[Q]| u.iter().zip(v).fold(q(0, 1), |s, (p, r)| s + p * r);
        for p in probes {
            let x: Vec<Q> = p.iter().map(|v| q(*v, 2)).collect();
            let feasible = lp.a_ub.iter().zip(&lp.b_ub).all(|(row, rhs)| dot(row, &x) <= *rhs);
            if feasible {
                prop_assert!(dot(&lp.c, &x) <= sol.value);
            }
        }
    }
}

#[test]
fn bob_constraint_never_helps() {
    for n in [2, 3] {
        let free = classical_maxmin(n, Constraint::Unrestricted).unwrap();
        let fixed = classical_maxmin(n, Constraint::BobMaximallyMixed).unwrap();
        assert!(fixed.value <= free.value);
        assert!(free.value <= free.shared_randomness_bound);
    }
}
