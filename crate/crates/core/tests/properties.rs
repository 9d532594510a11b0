use std::f64::consts::PI;

use proptest::prelude::*;
use vff::field::canonical_phase;
use vff::{
    eval_local, phase_shift, psf_attenuation, sample_grid, sample_grid_naive, translate_grid, FieldGrid, FrequencyBank,
    LocalField, PsfSpec, SampleSpec,
};

fn omega() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-4.0 * PI..4.0 * PI)
}

fn bank(n: usize) -> impl Strategy<Value = FrequencyBank> {
    prop::collection::vec(omega(), n - 1).prop_map(|mut w| {
        w.insert(0, [0.0; 3]);
        FrequencyBank::new(w, 0).unwrap()
    })
}

fn field(channels: usize, n: usize) -> impl Strategy<Value = LocalField> {
    prop::collection::vec(prop::array::uniform2(-1.0..1.0f64), channels * n)
        .prop_map(move |p| LocalField::from_pairs(channels, n, p).unwrap())
}

fn offset() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-0.5..0.5f64)
}

fn psf() -> impl Strategy<Value = PsfSpec> {
    prop_oneof![
        Just(PsfSpec::point()),
        (0.1..5.0f64).prop_map(|s| PsfSpec::isotropic(s).unwrap()),
        prop::array::uniform3(0.1..5.0f64).prop_map(|[a, b, c]| PsfSpec::new(a, b, c).unwrap()),
    ]
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn evaluation_is_linear(
        (b, f, g) in bank(6).prop_flat_map(|b| (Just(b), field(3, 6), field(3, 6))),
        u in offset(), psf in psf(), alpha in -3.0..3.0f64, beta in -3.0..3.0f64,
    ) {
        let lhs = eval_local(&f.combine(alpha, &g, beta).unwrap(), &b, u, &psf).unwrap();
        let ef = eval_local(&f, &b, u, &psf).unwrap();
        let eg = eval_local(&g, &b, u, &psf).unwrap();
        let rhs: Vec<f64> = ef.iter().zip(&eg).map(|(x, y)| alpha * x + beta * y).collect();
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn shifts_compose(
        (b, f) in bank(5).prop_flat_map(|b| (Just(b), field(2, 5))),
        d1 in prop::array::uniform3(-3.0..3.0f64), d2 in prop::array::uniform3(-3.0..3.0f64),
    ) {
        let twice = phase_shift(&phase_shift(&f, &b, d1).unwrap(), &b, d2).unwrap();
        let once = phase_shift(&f, &b, [d1[0] + d2[0], d1[1] + d2[1], d1[2] + d2[2]]).unwrap();
        let a: Vec<f64> = twice.pairs().iter().flatten().copied().collect();
        let c: Vec<f64> = once.pairs().iter().flatten().copied().collect();
        prop_assert!(close(&a, &c, 1e-12));
    }

    #[test]
    fn shift_translates_evaluation(
        (b, f) in bank(5).prop_flat_map(|b| (Just(b), field(3, 5))),
        u in offset(), d in prop::array::uniform3(-2.0..2.0f64), psf in psf(),
    ) {
        let a = eval_local(&phase_shift(&f, &b, d).unwrap(), &b, u, &psf).unwrap();
        let c = eval_local(&f, &b, [u[0] - d[0], u[1] - d[1], u[2] - d[2]], &psf).unwrap();
        prop_assert!(close(&a, &c, 1e-10));
    }

    #[test]
    fn shift_preserves_amplitude(
        (b, f) in bank(5).prop_flat_map(|b| (Just(b), field(1, 5))),
        d in prop::array::uniform3(-5.0..5.0f64),
    ) {
        let g = phase_shift(&f, &b, d).unwrap();
        for i in 0..5 {
            let (a0, _) = f.amp_phase(0, i);
            let (a1, p1) = g.amp_phase(0, i);
            prop_assert!((a0 - a1).abs() <= 1e-12);
            prop_assert!(p1 > -PI - 1e-12 && p1 <= PI + 1e-12);
        }
    }

    #[test]
    fn attenuation_bounded_and_monotone(w in omega(), s1 in 0.05..10.0f64, s2 in 0.05..10.0f64) {
        let (lo, hi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
        let a_lo = psf_attenuation(w, &PsfSpec::isotropic(lo).unwrap());
        let a_hi = psf_attenuation(w, &PsfSpec::isotropic(hi).unwrap());
        prop_assert!((0.0..=1.0).contains(&a_lo));
        prop_assert!(a_lo <= a_hi);
        prop_assert_eq!(psf_attenuation(w, &PsfSpec::point()), 1.0);
        prop_assert_eq!(psf_attenuation([0.0; 3], &PsfSpec::isotropic(lo).unwrap()), 1.0);
    }

    #[test]
    fn canonical_phase_in_range(phi in -100.0..100.0f64) {
        let c = canonical_phase(phi);
        prop_assert!((-PI..PI).contains(&c));
        prop_assert!(((phi - c) / (2.0 * PI)).fract().abs() < 1e-9
            || (1.0 - ((phi - c) / (2.0 * PI)).fract().abs()) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn batched_matches_naive(
        t in 1usize..4, h in 1usize..7, w in 1usize..7,
        s in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0]),
        r in prop::sample::select(vec![1.0, 2.0, 2.5]),
        b in bank(4), psf in psf(), seed in any::<u64>(),
    ) {
        let dims = [t, h, w];
        let len = t * h * w * 2 * 4 * 2;
        let mut x = seed;
        let coeffs: Vec<f64> = (0..len)
            .map(|_| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        let grid = FieldGrid::<f64>::from_coeffs(dims, 2, b, coeffs).unwrap();
        let spec = SampleSpec::new(dims, s, r).unwrap();
        let fast = sample_grid(&grid, &spec, &psf).unwrap();
        let slow = sample_grid_naive(&grid, &spec, &psf).unwrap();
        prop_assert_eq!(fast.dims(), slow.dims());
        prop_assert!(close(fast.data(), slow.data(), 1e-10));
    }

    #[test]
    fn integer_translation_moves_values(
        (b, f) in bank(4).prop_flat_map(|b| (Just(b), field(1, 4))),
        dx in -2i32..=2, dy in -2i32..=2,
    ) {
        let dims = [1, 6, 6];
        let grid = FieldGrid::<f64>::from_fn(dims, 1, b.clone(), |[t, y, x]| {
            phase_shift(&f, &b, [-(x as f64), -(y as f64), -(t as f64)]).unwrap()
        })
        .unwrap();
        let moved = translate_grid(&grid, [dx as f64, dy as f64, 0.0]).unwrap();
        let spec = SampleSpec::identity(dims);
        let before = sample_grid(&grid, &spec, &PsfSpec::point()).unwrap();
        let after = sample_grid(&moved, &spec, &PsfSpec::point()).unwrap();
        for y in 2..4 {
            for x in 2..4 {
                let src = before.get(0, (y - dy) as usize, (x - dx) as usize, 0);
                prop_assert!((after.get(0, y as usize, x as usize, 0) - src).abs() < 1e-9);
            }
        }
    }
}
