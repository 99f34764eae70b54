//! Independent oracles and numerical checks shared by the integration tests.
#![allow(dead_code)]

use clmid_core::ddqn::Mlp;
use clmid_core::load_models::{sample_params, ImParams, ImState, OMEGA_0};
use clmid_core::{make_fault_trace, simulate, FaultScenario, LoadComposition, ParamRanges, SimConfig, VoltageTrace};
use num_complex::Complex64;

/// Derivatives `[dE'_q, dE'_d, dE''_q, dE''_d, ds]` written directly from the
/// complex-phasor form of the fifth-order model, with `E = E_d + j E_q`.
pub fn im_derivatives_oracle(x: &ImState, p: &ImParams, v: Complex64) -> [f64; 5] {
    let j = Complex64::i();
    let e_p = Complex64::new(x.e_dp, x.e_qp);
    let e_pp = Complex64::new(x.e_dpp, x.e_qpp);
    let i = (v - e_pp) / Complex64::new(p.r_s, p.l_pp);
    let sw = j * x.slip * OMEGA_0;
    let d_ep = -(e_p - j * (p.l_s - p.l_p) * i) / p.t_p0 - sw * e_p;
    let d_epp = (1.0 / p.t_pp0 - 1.0 / p.t_p0) * e_p
        + j * ((p.l_s - p.l_p) / p.t_p0 + (p.l_p - p.l_pp) / p.t_pp0) * i
        - e_pp / p.t_pp0
        - sw * e_pp;
    let t_m = x.t_m0 * (1.0 - x.slip).powf(p.e_trq);
    let d_s = (t_m - (e_pp * i.conj()).re) / (2.0 * p.h);
    [d_ep.im, d_ep.re, d_epp.im, d_epp.re, d_s]
}

/// Terminal P and Q as `V conj(I)` from the phasor form.
pub fn im_pq_oracle(x: &ImState, p: &ImParams, v: Complex64) -> (f64, f64) {
    let i = (v - Complex64::new(x.e_dpp, x.e_qpp)) / Complex64::new(p.r_s, p.l_pp);
    let s = v * i.conj();
    (s.re, s.im)
}

/// Steady-state active power at slip `s` from the zero-derivative conditions
/// of the phasor model, solved as a 2x2 complex linear system in `(E', E'')`.
pub fn steady_power_oracle(p: &ImParams, s: f64, v0: f64) -> f64 {
    let j = Complex64::i();
    let v = Complex64::new(v0, 0.0);
    let z = Complex64::new(p.r_s, p.l_pp);
    let x_tr = p.l_s - p.l_p;
    let c = x_tr / p.t_p0 + (p.l_p - p.l_pp) / p.t_pp0;
    let sw = j * s * OMEGA_0;
    // 0 = -(E' - j x_tr (V - E'')/Z)/Tp0 - sw E'
    // 0 = (1/Tpp0 - 1/Tp0) E' + j c (V - E'')/Z - E''/Tpp0 - sw E''
    let a11 = -1.0 / p.t_p0 - sw;
    let a12 = -j * x_tr / (z * p.t_p0);
    let b1 = -j * x_tr * v / (z * p.t_p0);
    let a21 = Complex64::new(1.0 / p.t_pp0 - 1.0 / p.t_p0, 0.0);
    let a22 = -j * c / z - 1.0 / p.t_pp0 - sw;
    let b2 = -j * c * v / z;
    let det = a11 * a22 - a12 * a21;
    let e_pp = (a11 * b2 - a21 * b1) / det;
    let i = (v - e_pp) / z;
    (v * i.conj()).re
}

/// Max relative error between backprop and central differences of the
/// squared TD loss of one output.
pub fn mlp_fd_error(sizes: &[usize], seed: u64) -> f64 {
    let net = Mlp::new(sizes, seed);
    let x: Vec<f64> = (0..sizes[0]).map(|i| -0.3 + 0.11 * i as f64).collect();
    let a = sizes[sizes.len() - 1] / 2;
    let y = -0.2;
    let loss = |n: &Mlp| 0.5 * (n.forward(&x)[a] - y).powi(2);
    let cache = net.forward_cached(&x);
    let mut d = vec![0.0; net.output_size()];
    d[a] = cache.output()[a] - y;
    let mut grad = vec![0.0; net.params.len()];
    net.backward(&cache, &d, &mut grad);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for k in 0..net.params.len() {
        let mut up = net.clone();
        up.params[k] += h;
        let mut dn = net.clone();
        dn.params[k] -= h;
        let fd = (loss(&up) - loss(&dn)) / (2.0 * h);
        let scale = grad[k].abs().max(fd.abs());
        if scale > 1e-7 {
            worst = worst.max((grad[k] - fd).abs() / scale);
        }
    }
    worst
}

pub fn case_two() -> LoadComposition {
    LoadComposition::wecc([0.3637, 0.1430, 0.0914, 0.1526, 0.1088, 0.1405]).unwrap()
}

/// Ratio of successive max-abs differences of the P/Q trace as the RK4
/// substep count doubles: `|x(n) - x(2n)| / |x(2n) - x(4n)|`.
pub fn step_halving_ratio(comp: &LoadComposition, v_fault: f64, substeps: usize) -> f64 {
    let base = SimConfig {
        t_end: 1.0,
        substeps,
        ..Default::default()
    };
    let v = make_fault_trace(
        &FaultScenario {
            v_fault,
            ..Default::default()
        },
        &base,
    )
    .unwrap();
    let params = sample_params(&ParamRanges::default(), 1);
    let run = |n: usize| {
        let cfg = SimConfig { substeps: n, ..base.clone() };
        simulate(comp, &params, &v, &cfg).unwrap()
    };
    let (a, b, c) = (run(substeps), run(2 * substeps), run(4 * substeps));
    a.max_abs_diff(&b) / b.max_abs_diff(&c)
}

/// Largest departure of P and Q from their initial values under a constant
/// nominal voltage over `t_end` seconds.
pub fn equilibrium_drift(comp: &LoadComposition, t_end: f64) -> f64 {
    let cfg = SimConfig {
        t_end,
        ..Default::default()
    };
    let v = VoltageTrace::constant(1.0, cfg.dt, cfg.sample_count());
    let params = sample_params(&ParamRanges::default(), 1);
    let t = simulate(comp, &params, &v, &cfg).unwrap();
    let dp = t.p.iter().map(|p| (p - t.p[0]).abs()).fold(0.0, f64::max);
    let dq = t.q.iter().map(|q| (q - t.q[0]).abs()).fold(0.0, f64::max);
    dp.max(dq)
}
