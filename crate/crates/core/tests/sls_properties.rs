use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stepsls::hlip::{push_to_disturbance, s2s_matrices, HlipParams, GRAVITY};
use stepsls::sets::BoxSet;
use stepsls::sls::{
    build_profile, controller_reset, controller_step, rollout, synthesize, verify_robust, DisturbanceProfile,
    FirController, RunningWindows, SlsWeights, SynthesisProblem,
};

struct Setup {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    xe: BoxSet,
    ue: BoxSet,
    s0: BoxSet,
    d: BoxSet,
    wext: BoxSet,
    profile: DisturbanceProfile,
}

fn setup(rng: &mut ChaCha8Rng) -> Setup {
    let h = HlipParams::new(rng.gen_range(0.6..1.0), rng.gen_range(0.3..0.45), GRAVITY, rng.gen_range(30.0..70.0)).unwrap();
    let (a, b) = s2s_matrices(&h);
    let w = push_to_disturbance(rng.gen_range(5.0..40.0), &h);
    let wext = BoxSet::hull(&[vec![w[0], w[1]], vec![-w[0], -w[1]]]).unwrap();
    let d = BoxSet::symmetric(&[rng.gen_range(0.0..0.003), rng.gen_range(0.0..0.01)]).unwrap();
    let s0 = BoxSet::symmetric(&[rng.gen_range(0.04..0.1), rng.gen_range(0.15..0.4)]).unwrap();
    let nf = rng.gen_range(3..=5);
    let profile = build_profile(&s0, &wext, &d, nf).unwrap();
    Setup {
        a: DMatrix::from_column_slice(2, 2, a.as_slice()),
        b: DMatrix::from_column_slice(2, 1, b.as_slice()),
        xe: BoxSet::symmetric(&[0.6, 2.5]).unwrap(),
        ue: BoxSet::interval(-0.6, 0.6).unwrap(),
        s0,
        d,
        wext,
        profile,
    }
}

fn solve(s: &Setup, windows: bool) -> stepsls::Result<FirController> {
    let pushed = s.wext.minkowski_sum(&s.d).unwrap();
    let w = SlsWeights::uniform(2, 1);
    synthesize(&SynthesisProblem {
        a: &s.a,
        b: &s.b,
        profile: &s.profile,
        xe: &s.xe,
        ue: &s.ue,
        s0: &s.s0,
        weights: &w,
        running_windows: windows.then_some(RunningWindows { pushed: &pushed, residual: &s.d }),
    })
}

fn sample(rng: &mut ChaCha8Rng, b: &BoxSet) -> DVector<f64> {
    DVector::from_iterator(b.dim(), b.lo().iter().zip(b.hi()).map(|(l, h)| rng.gen_range(*l..=*h)))
}

#[test]
fn random_syntheses_verify_at_every_vertex() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut feasible = 0;
    for _ in 0..50 {
        let s = setup(&mut rng);
        let Ok(c) = solve(&s, false) else { continue };
        feasible += 1;
        assert!(c.structural_residual() <= 1e-7);
        let r = verify_robust(&c, &s.profile, &s.xe, &s.ue, &s.s0).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.sequences_checked, 4usize.pow(s.profile.horizon() as u32));
    }
    assert!(feasible >= 40, "only {feasible} of 50 random problems were feasible");
}

#[test]
fn interior_sequences_never_beat_the_vertex_margins() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let s = setup(&mut rng);
    let c = solve(&s, false).unwrap();
    let r = verify_robust(&c, &s.profile, &s.xe, &s.ue, &s.s0).unwrap();
    let nf = c.horizon();
    for _ in 0..10_000 {
        let w: Vec<DVector<f64>> = s.profile.sets().iter().map(|set| sample(&mut rng, set)).collect();
        for (i, (e, u)) in rollout(&c, &w).iter().enumerate() {
            let set = if i + 1 < nf { &s.xe } else { &s.s0 };
            for (m, floor) in set.margins(e.as_slice()).iter().zip(&r.state_margins[i]) {
                assert!(*m >= floor - 1e-12);
            }
            for (m, floor) in s.ue.margins(u.as_slice()).iter().zip(&r.input_margins[i]) {
                assert!(*m >= floor - 1e-12);
            }
        }
    }
}

#[test]
fn long_runs_stay_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let s = setup(&mut rng);
    let c = solve(&s, true).unwrap();
    let mut state = controller_reset(&c);
    let mut e = sample(&mut rng, &s.s0);
    for k in 0..5_000 {
        let (u, next) = controller_step(&c, &state, &e);
        state = next;
        assert!(s.xe.contains(e.as_slice(), 1e-9), "step {k}: e = {e}");
        assert!(s.ue.contains(u.as_slice(), 1e-9), "step {k}: u = {u}");
        let mut w = sample(&mut rng, &s.d);
        if k % 50 == 49 {
            w += sample(&mut rng, &s.wext);
        }
        e = &c.a * &e + &c.b * &u + w;
    }
    assert!(state.buffer().iter().all(|w| w.iter().all(|v| v.is_finite())));
}

#[test]
fn text_round_trip_preserves_the_controller() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let s = setup(&mut rng);
    let c = solve(&s, true).unwrap();
    let back = FirController::from_text(&c.to_text()).unwrap();
    assert_eq!(back, c);
    assert_eq!(back.to_text(), c.to_text());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn impulse_response_matches_the_taps(seed in any::<u64>(), tap in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = setup(&mut rng);
        let Ok(c) = solve(&s, false) else { return Ok(()) };
        let nf = c.horizon();
        let tap = tap % nf;
        let dir = DVector::from_vec(vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
        let mut w = vec![DVector::zeros(2); nf + 3];
        w[0] = dir.clone();
        let mut state = controller_reset(&c);
        let mut e = w[0].clone();
        for k in 0..w.len() {
            let (u, next) = controller_step(&c, &state, &e);
            state = next;
            if k == tap {
                prop_assert!((&e - &c.phi_x[tap] * &dir).amax() <= 1e-9);
                prop_assert!((&u - &c.phi_u[tap] * &dir).amax() <= 1e-9);
            }
            if k >= nf {
                prop_assert!(e.amax() <= 1e-9 && u.amax() <= 1e-9);
            }
            if k + 1 < w.len() {
                e = &c.a * &e + &c.b * &u + &w[k + 1];
            }
        }
    }
}
