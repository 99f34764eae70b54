//! Property tests over the invariants of compositions, actions, the
//! projection used by the baselines, the loss functions, the single-phase
//! stall latch and parameter sampling. Each property runs 10 000 cases.

use clmid_core::ddqn::{action_space, apply_action, is_feasible, Action};
use clmid_core::load_models::electronic::{electronic_fvl, ElectronicParams};
use clmid_core::load_models::single_phase::{
    advance_single_phase, single_phase_output, SinglePhaseParams, SinglePhaseState,
};
use clmid_core::load_models::{sample_params, stream_seed};
use clmid_core::metrics::{pinball, sorted_quantile};
use clmid_core::search_baselines::project;
use clmid_core::{LoadComposition, ModelLayout, ParamRanges};
use proptest::prelude::*;

const CASES: u32 = 10_000;
const RHO: f64 = 0.01;

fn cfg() -> ProptestConfig {
    ProptestConfig::with_cases(CASES)
}

fn layout() -> impl Strategy<Value = ModelLayout> {
    prop_oneof![Just(ModelLayout::ZipIm), Just(ModelLayout::Wecc)]
}

/// A point on the simplex reached from normalized nonnegative weights.
fn composition() -> impl Strategy<Value = LoadComposition> {
    layout().prop_flat_map(|l| {
        prop::collection::vec(0.0f64..1.0, l.len())
            .prop_map(move |w| LoadComposition::from_weights(l, &w).unwrap())
    })
}

fn single_phase_params() -> impl Strategy<Value = SinglePhaseParams> {
    (0.3f64..0.7, 0.01f64..0.25, 0.01f64..0.1, 0.0f64..=1.0, 0.05f64..0.2, 0.05f64..0.2).prop_map(
        |(v_stall, gap_brk, gap_rst, f_rst, r_stall, x_stall)| SinglePhaseParams {
            v_brk: v_stall + gap_brk,
            v_stall,
            v_rst: v_stall + gap_brk + gap_rst,
            f_rst,
            r_stall,
            x_stall,
            p0: 1.0,
            q0: 0.0,
        },
    )
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn from_weights_lands_on_the_simplex(l in layout(), w in prop::collection::vec(-1.0f64..10.0, 6)) {
        let c = LoadComposition::from_weights(l, &w[..l.len()]).unwrap();
        prop_assert!((c.sum() - 1.0).abs() < 1e-12);
        prop_assert!(c.fractions().iter().all(|f| (0.0..=1.0).contains(f)));
        prop_assert!((c.dynamic_share() + c.static_share() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn actions_conserve_load(s in composition(), pick in any::<prop::sample::Index>()) {
        let actions = action_space(s.len());
        let a = actions[pick.index(actions.len())];
        let feasible = is_feasible(&s, a, RHO);
        prop_assert_eq!(feasible, s.fractions()[a.src] + 1e-9 >= RHO);
        match apply_action(&s, a, RHO) {
            Ok(next) => {
                prop_assert!(feasible);
                prop_assert!((next.sum() - s.sum()).abs() < 1e-12);
                prop_assert!(next.fractions().iter().all(|f| *f >= 0.0));
                let moved = s.fractions()[a.src] - next.fractions()[a.src];
                prop_assert!((moved - RHO).abs() < 1e-9);
                prop_assert!((next.fractions()[a.dst] - s.fractions()[a.dst] - moved).abs() < 1e-12);
                for i in (0..s.len()).filter(|i| *i != a.src && *i != a.dst) {
                    prop_assert_eq!(next.fractions()[i], s.fractions()[i]);
                }
                // the reverse move returns to the start
                let back = apply_action(&next, Action { src: a.dst, dst: a.src }, RHO).unwrap();
                prop_assert!(back.max_abs_diff(&s) < 1e-12);
            }
            Err(_) => prop_assert!(!feasible),
        }
    }

    #[test]
    fn projection_is_a_valid_composition(
        l in layout(),
        w in prop::collection::vec(prop_oneof![-5.0f64..5.0, Just(f64::NAN), Just(f64::INFINITY)], 6),
    ) {
        let c = project(l, &w[..l.len()]).unwrap();
        prop_assert!(c.validate().is_ok());
        prop_assert!((c.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_fixes_simplex_points(s in composition()) {
        let p = project(s.layout, s.fractions()).unwrap();
        prop_assert!(p.max_abs_diff(&s) < 1e-12);
    }

    #[test]
    fn pinball_is_nonnegative_and_zero_only_on_equality(x_hat in -10.0f64..10.0, x in -10.0f64..10.0, tau in 0.0f64..=1.0) {
        let l = pinball(x_hat, x, tau);
        prop_assert!(l >= 0.0);
        let d = x_hat - x;
        let expected = if d >= 0.0 { tau * d } else { (tau - 1.0) * d };
        prop_assert!((l - expected).abs() <= 1e-12 * (1.0 + d.abs()));
        prop_assert_eq!(pinball(x, x, tau), 0.0);
    }

    #[test]
    fn quantiles_are_bounded_and_monotone(
        mut xs in prop::collection::vec(-5.0f64..5.0, 1..40),
        a in 0.0f64..=1.0,
        b in 0.0f64..=1.0,
    ) {
        xs.sort_by(f64::total_cmp);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let q_lo = sorted_quantile(&xs, lo);
        let q_hi = sorted_quantile(&xs, hi);
        prop_assert!(xs[0] <= q_lo && q_hi <= xs[xs.len() - 1]);
        prop_assert!(q_lo <= q_hi + 1e-12);
    }

    #[test]
    fn stall_latch_follows_threshold_ordering(
        p in single_phase_params(),
        volts in prop::collection::vec(0.0f64..1.1, 1..60),
    ) {
        let dt = 1.0 / 240.0;
        let mut st = SinglePhaseState::new(1.0);
        let mut min_seen = 1.0f64;
        let mut ramp_prev = 0.0;
        for v in volts {
            let was_stalled = st.stalled;
            st = advance_single_phase(v, &p, st, dt);
            min_seen = min_seen.min(v);
            // latched exactly when the voltage has gone below v_stall
            prop_assert_eq!(st.stalled, min_seen < p.v_stall);
            prop_assert!(!was_stalled || st.stalled);
            prop_assert!((0.0..=1.0).contains(&st.restart_ramp));
            if was_stalled {
                prop_assert!(st.restart_ramp >= ramp_prev);
                // the ramp only advances above the restart voltage
                if v <= p.v_rst {
                    prop_assert_eq!(st.restart_ramp, ramp_prev);
                }
            }
            ramp_prev = st.restart_ramp;
            let (pp, qq) = single_phase_output(v, &p, &st);
            prop_assert!(pp.is_finite() && qq.is_finite());
            if !st.stalled {
                prop_assert_eq!((pp, qq), p.running_pq(v));
            } else if st.restart_ramp == 0.0 {
                let (ps, qs) = p.stall_pq(v);
                prop_assert!((pp - ps).abs() < 1e-12 && (qq - qs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn electronic_fraction_is_bounded(
        v_d2 in 0.3f64..0.6,
        span in 0.01f64..0.3,
        fr_cel in 0.0f64..=1.0,
        v in 0.0f64..1.2,
        dip in 0.0f64..1.2,
    ) {
        let params = ElectronicParams { v_d1: v_d2 + span, v_d2, fr_cel, pf_elc: 1.0, p0: 1.0 };
        let min_seen = dip.min(v);
        let f = electronic_fvl(v, &params, min_seen);
        prop_assert!((0.0..=1.0).contains(&f));
        // never more connected than an undisturbed load, never less than at the minimum
        prop_assert!(f >= electronic_fvl(min_seen, &params, min_seen) - 1e-12);
    }

    #[test]
    fn sampled_parameters_respect_ranges_and_ordering(seed in any::<u64>()) {
        let r = ParamRanges::default();
        let p = sample_params(&r, seed);
        prop_assert!(p.validate().is_ok());
        for (m, mr) in [(&p.ma, &r.ma), (&p.mb, &r.mb), (&p.mc, &r.mc)] {
            prop_assert!(m.l_s > m.l_p && m.l_p > m.l_pp && m.t_p0 > m.t_pp0);
            prop_assert!(mr.r_s.contains(m.r_s) && mr.h.contains(m.h) && mr.l_pp.contains(m.l_pp));
            prop_assert_eq!(m.e_trq, mr.e_trq);
        }
        let s = &p.single_phase;
        prop_assert!(s.v_stall < s.v_brk && s.v_brk < s.v_rst);
        prop_assert!(r.single_phase.f_rst.contains(s.f_rst));
        prop_assert!(p.electronic.v_d2 < p.electronic.v_d1);
        let z = &p.zip;
        prop_assert!((z.p1c + z.p2c + z.p3c - 1.0).abs() < 1e-12);
        prop_assert!((z.q1c + z.q2c + z.q3c - 1.0).abs() < 1e-12);
        prop_assert_eq!(sample_params(&r, seed), p);
    }

    #[test]
    fn stream_seeds_are_distinct_per_index(base in any::<u64>(), i in 0u64..1_000_000, j in 0u64..1_000_000) {
        prop_assume!(i != j);
        prop_assert_ne!(stream_seed(base, i), stream_seed(base, j));
    }
}
