use num_complex::Complex64;

use super::{PQTrace, SimConfig, VoltageSource, VoltageTrace};
use crate::composition::{Component, LoadComposition};
use crate::error::{ClmError, Result};
use crate::load_models::motor::{self, ImParams, ImState, SLIP_MAX, SLIP_MIN};
use crate::load_models::single_phase::{advance_single_phase, single_phase_output, SinglePhaseParams, SinglePhaseState};
use crate::load_models::{electronic_fvl, electronic_pq, zip_pq, CompositeParams, ElectronicParams, ZipParams};

/// Fractions below this are treated as absent components.
const MIN_FRACTION: f64 = 1e-12;
const FIXED_POINT_MAX_ITER: usize = 20;
const FIXED_POINT_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
struct MotorUnit {
    params: ImParams,
    /// Motor base in bus per-unit.
    scale: f64,
    t_m0: f64,
}

/// An initialized composite load: component models scaled to the bus base,
/// dynamic motor states and the algebraic latches.
#[derive(Clone, Debug)]
pub struct CompositeLoad {
    motors: Vec<MotorUnit>,
    single_phase: Option<(SinglePhaseParams, f64)>,
    single_phase_state: SinglePhaseState,
    electronic: Option<ElectronicParams>,
    electronic_v_min: f64,
    zip: Option<ZipParams>,
    shunt_b: f64,
    feeder: Option<Complex64>,
    /// Motor states, `ImState::DIM` entries per motor.
    pub state: Vec<f64>,
}

impl CompositeLoad {
    /// Builds every component at the initial system voltage so that the bus
    /// draws exactly 1 pu active power, split according to `comp`.
    pub fn initialize(comp: &LoadComposition, params: &CompositeParams, v_sys0: f64, cfg: &SimConfig) -> Result<Self> {
        comp.validate()?;
        params.validate()?;
        cfg.validate()?;
        if !(v_sys0 > 0.0 && v_sys0.is_finite()) {
            return Err(ClmError::InvalidParameter(format!("initial voltage must be > 0, got {v_sys0}")));
        }
        let f = comp.component_fractions();
        let q_bus = cfg.reactive_ratio();
        let feeder = cfg
            .feeder_coupling
            .then(|| Complex64::new(cfg.feeder_r, cfg.feeder_x));

        // load-side voltage carrying the initial bus power through the feeder
        let mut v_load = Complex64::new(v_sys0, 0.0);
        if let Some(z) = feeder {
            let s = Complex64::new(1.0, q_bus);
            let mut converged = false;
            for _ in 0..100 {
                let next = v_sys0 - z * (s / v_load).conj();
                let delta = (next - v_load).norm();
                v_load = next;
                if delta < 1e-13 {
                    converged = true;
                    break;
                }
            }
            if !converged || !v_load.norm().is_finite() {
                return Err(ClmError::FixedPointNonConvergence { step: 0 });
            }
        }
        let v0 = v_load.norm();
        let angle = v_load.arg();

        let mut motors = Vec::new();
        let mut state = Vec::new();
        let mut q_total = 0.0;
        for (component, mp) in [Component::MotorA, Component::MotorB, Component::MotorC]
            .into_iter()
            .zip(params.motors())
        {
            let share = f[component.index()];
            if share <= MIN_FRACTION {
                continue;
            }
            let st = motor::im_init(mp, cfg.motor_load_factor, v0)?;
            let scale = share / cfg.motor_load_factor;
            let (_, q) = motor::im_pq(&st, mp, v0, 0.0);
            q_total += scale * q;
            let st = st.rotated(angle);
            state.extend_from_slice(&st.to_array());
            motors.push(MotorUnit {
                params: *mp,
                scale,
                t_m0: st.t_m0,
            });
        }

        let share = f[Component::SinglePhase.index()];
        let single_phase = if share > MIN_FRACTION {
            let sp = params.single_phase.anchored_at(v0, 1.0, q_bus)?;
            q_total += share * q_bus;
            Some((sp, share))
        } else {
            None
        };

        let share = f[Component::Electronic.index()];
        let electronic = if share > MIN_FRACTION {
            let fvl = electronic_fvl(v0, &params.electronic, v0);
            if fvl <= 0.0 {
                return Err(ClmError::InvalidParameter(format!(
                    "electronic load fully tripped at initial voltage {v0}"
                )));
            }
            let el = ElectronicParams {
                p0: share / fvl,
                ..params.electronic
            };
            q_total += electronic_pq(v0, &el, v0).1;
            Some(el)
        } else {
            None
        };

        let share = f[Component::Zip.index()];
        let zip = if share > MIN_FRACTION {
            let z = ZipParams {
                p0: share,
                q0: share * q_bus,
                v0,
                ..params.zip
            };
            q_total += z.q0;
            Some(z)
        } else {
            None
        };

        let shunt_b = if cfg.compensate_bus_q {
            (q_bus - q_total) / (v0 * v0)
        } else {
            0.0
        };

        Ok(CompositeLoad {
            motors,
            single_phase,
            single_phase_state: SinglePhaseState::new(v0),
            electronic,
            electronic_v_min: v0,
            zip,
            shunt_b,
            feeder,
            state,
        })
    }

    fn motor_state(&self, x: &[f64], i: usize) -> ImState {
        let o = i * ImState::DIM;
        ImState::from_slice(&x[o..o + ImState::DIM], self.motors[i].t_m0)
    }

    /// Bus-base P/Q of the algebraic components, including the shunt.
    fn algebraic_pq(&self, v: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut q = self.shunt_b * v * v;
        if let Some((sp, scale)) = &self.single_phase {
            let (a, b) = single_phase_output(v, sp, &self.single_phase_state);
            p += scale * a;
            q += scale * b;
        }
        if let Some(el) = &self.electronic {
            let (a, b) = electronic_pq(v, el, self.electronic_v_min);
            p += a;
            q += b;
        }
        if let Some(z) = &self.zip {
            let (a, b) = zip_pq(v, z);
            p += a;
            q += b;
        }
        (p, q)
    }

    fn motor_pq(&self, x: &[f64], v: Complex64) -> (f64, f64) {
        let mut p = 0.0;
        let mut q = 0.0;
        for (i, m) in self.motors.iter().enumerate() {
            let st = self.motor_state(x, i);
            let (a, b) = motor::im_pq(&st, &m.params, v.re, v.im);
            p += m.scale * a;
            q += m.scale * b;
        }
        (p, q)
    }

    /// Load-side terminal voltage for a given system voltage magnitude.
    ///
    /// Motor currents are linear in the terminal voltage and are folded into
    /// the feeder equation exactly; the fixed point iterates only on the
    /// voltage-dependent algebraic loads.
    fn terminal_voltage(&self, v_sys: f64, x: &[f64], step: usize) -> Result<Complex64> {
        let Some(z) = self.feeder else {
            return Ok(Complex64::new(v_sys, 0.0));
        };
        let mut y_motor = Complex64::new(0.0, 0.0);
        let mut i_source = Complex64::new(0.0, 0.0);
        for (i, m) in self.motors.iter().enumerate() {
            let st = self.motor_state(x, i);
            let y = m.scale / Complex64::new(m.params.r_s, m.params.l_pp);
            y_motor += y;
            i_source += y * Complex64::new(st.e_dpp, st.e_qpp);
        }
        let denom = 1.0 + z * y_motor;
        let mut v = Complex64::new(v_sys, 0.0);
        for _ in 0..FIXED_POINT_MAX_ITER {
            let (p, q) = self.algebraic_pq(v.norm());
            let i_alg = (Complex64::new(p, q) / v).conj();
            let next = (v_sys + z * (i_source - i_alg)) / denom;
            let delta = (next - v).norm();
            v = next;
            if !v.norm().is_finite() {
                break;
            }
            if delta < FIXED_POINT_TOL {
                return Ok(v);
            }
        }
        Err(ClmError::FixedPointNonConvergence { step })
    }

    fn derivatives(&self, x: &[f64], v: Complex64, dx: &mut [f64]) -> Result<()> {
        for (i, m) in self.motors.iter().enumerate() {
            let st = self.motor_state(x, i);
            let d = motor::im_derivatives(&st, &m.params, v.re, v.im)?;
            dx[i * ImState::DIM..(i + 1) * ImState::DIM].copy_from_slice(&d.to_array());
        }
        Ok(())
    }

    /// Total bus P/Q as seen at the system side.
    fn bus_pq(&self, v_sys: f64, v: Complex64) -> (f64, f64) {
        let (pa, qa) = self.algebraic_pq(v.norm());
        let (pm, qm) = self.motor_pq(&self.state, v);
        let s_load = Complex64::new(pa + pm, qa + qm);
        match self.feeder {
            None => (s_load.re, s_load.im),
            Some(_) => {
                let i = (s_load / v).conj();
                let s = Complex64::new(v_sys, 0.0) * i.conj();
                (s.re, s.im)
            }
        }
    }

    fn advance_latches(&mut self, v: f64, dt: f64) {
        if let Some((sp, _)) = &self.single_phase {
            self.single_phase_state = advance_single_phase(v, sp, self.single_phase_state, dt);
        }
        self.electronic_v_min = self.electronic_v_min.min(v);
    }

    pub fn single_phase_state(&self) -> &SinglePhaseState {
        &self.single_phase_state
    }

    pub fn motor_count(&self) -> usize {
        self.motors.len()
    }

    pub fn shunt_susceptance(&self) -> f64 {
        self.shunt_b
    }
}

struct Rk4Scratch {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Scratch {
    fn new(n: usize) -> Self {
        Rk4Scratch {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

/// Integrates the motor states across sample interval `k` in `substeps` RK4 steps.
fn integrate_interval<S: VoltageSource + ?Sized>(
    load: &mut CompositeLoad,
    source: &S,
    k: usize,
    substeps: usize,
    sc: &mut Rk4Scratch,
) -> Result<()> {
    if load.motors.is_empty() {
        return Ok(());
    }
    let h = source.dt() / substeps as f64;
    let mut x = std::mem::take(&mut load.state);
    let n = x.len();
    let rhs = |load: &CompositeLoad, tau: f64, y: &[f64], out: &mut [f64]| -> Result<()> {
        let v = load.terminal_voltage(source.within(k, tau), y, k)?;
        load.derivatives(y, v, out)
    };
    let result = (|| {
        for j in 0..substeps {
            let tau = j as f64 * h;
            rhs(load, tau, &x, &mut sc.k1)?;
            for i in 0..n {
                sc.tmp[i] = x[i] + 0.5 * h * sc.k1[i];
            }
            rhs(load, tau + 0.5 * h, &sc.tmp, &mut sc.k2)?;
            for i in 0..n {
                sc.tmp[i] = x[i] + 0.5 * h * sc.k2[i];
            }
            rhs(load, tau + 0.5 * h, &sc.tmp, &mut sc.k3)?;
            for i in 0..n {
                sc.tmp[i] = x[i] + h * sc.k3[i];
            }
            rhs(load, tau + h, &sc.tmp, &mut sc.k4)?;
            for i in 0..n {
                x[i] += h / 6.0 * (sc.k1[i] + 2.0 * sc.k2[i] + 2.0 * sc.k3[i] + sc.k4[i]);
            }
            for m in 0..load.motors.len() {
                let s = &mut x[m * ImState::DIM + 4];
                *s = s.clamp(SLIP_MIN, SLIP_MAX);
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(ClmError::NumericalDivergence);
            }
        }
        Ok(())
    })();
    load.state = x;
    result.map_err(|e| match e {
        ClmError::NumericalDivergence => ClmError::DivergenceAtStep { step: k },
        other => other,
    })
}

/// Drives the composite load with an arbitrary voltage source.
pub fn simulate_source<S: VoltageSource + ?Sized>(
    comp: &LoadComposition,
    params: &CompositeParams,
    source: &S,
    cfg: &SimConfig,
) -> Result<PQTrace> {
    let n = source.len();
    if n == 0 {
        return Err(ClmError::TooFewSamples { needed: 1, got: 0 });
    }
    let v0 = source.sample(0);
    let mut load = CompositeLoad::initialize(comp, params, v0, cfg)?;
    let mut sc = Rk4Scratch::new(load.state.len());
    let mut p = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    for k in 0..n {
        let v_sys = source.sample(k);
        let mut v = load.terminal_voltage(v_sys, &load.state, k)?;
        load.advance_latches(v.norm(), if k == 0 { 0.0 } else { source.dt() });
        if load.feeder.is_some() {
            v = load.terminal_voltage(v_sys, &load.state, k)?;
        }
        let (pk, qk) = load.bus_pq(v_sys, v);
        if !(pk.is_finite() && qk.is_finite()) {
            return Err(ClmError::DivergenceAtStep { step: k });
        }
        p.push(pk);
        q.push(qk);
        if k + 1 < n {
            integrate_interval(&mut load, source, k, cfg.substeps, &mut sc)?;
        }
    }
    PQTrace::new(source.dt(), p, q)
}

/// Simulates the composite load against a sampled voltage trace.
pub fn simulate(comp: &LoadComposition, params: &CompositeParams, trace: &VoltageTrace, cfg: &SimConfig) -> Result<PQTrace> {
    trace.validate()?;
    simulate_source(comp, params, trace, cfg)
}
