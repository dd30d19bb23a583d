//! Closed-loop assembly: plant, altitude loop, reference generator, internal
//! model, observers and the saturated output-feedback law.

use std::f64::consts::FRAC_PI_2;

use crate::altitude::{altitude_control, AltitudeParams, BetaBounds};
use crate::controller::{
    ideal_control, lumped_drift, robust_control, validate_gains, CertificationReport, ControllerParams,
    Envelope,
};
use crate::error::{ensure, Error, Result};
use crate::internal_model::{
    build_internal_model, im_deriv, psi_matrix, solve_regulator, InternalModel, RegulatorSolution,
};
use crate::normal_form::{beta_state, error_coords, forward_transform, plant_state_for_errors, ErrorCoords};
use crate::numerics::{rk4_step, Matrix};
use crate::observer::{
    HermiteSegment, Jet, ObserverGains, ObserverPropagator, ObserverState, NOMINAL_KAPPA, NOMINAL_L,
};
use crate::plant::{plant_deriv, ControlInput, PlantState, DEFAULT_GRAVITY};
use crate::reference::{
    closed_form_reference, closed_form_state, exo_init, exo_matrix, ExoParams, ExoState, ReferenceMode,
};

/// Attitude margin below `π/2` at which a run is aborted.
pub const ABORT_MARGIN: f64 = 1e-3;

/// Grid resolution of the input-gain certification.
pub const CERT_GRID: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Periodic,
    Polynomial,
    Custom,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Periodic => "periodic",
            Scenario::Polynomial => "polynomial",
            Scenario::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "periodic" => Some(Scenario::Periodic),
            "polynomial" => Some(Scenario::Polynomial),
            "custom" => Some(Scenario::Custom),
            _ => None,
        }
    }
}

/// Observer gain preset. `Nominal` (spelled `paper` in configs and on the
/// command line) uses the stock `κ`; `Fast` lowers it for quick runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainPreset {
    Nominal,
    Fast,
}

pub const FAST_KAPPA: f64 = 100.0;

impl GainPreset {
    pub fn kappa(self) -> f64 {
        match self {
            GainPreset::Nominal => NOMINAL_KAPPA,
            GainPreset::Fast => FAST_KAPPA,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GainPreset::Nominal => "paper",
            GainPreset::Fast => "fast",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "paper" => Some(GainPreset::Nominal),
            "fast" => Some(GainPreset::Fast),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub reference: ReferenceMode,
    pub t_final: f64,
    pub dt_plant: f64,
    pub dt_observer: f64,
    pub preset: GainPreset,
    pub kappa: f64,
    pub l: [f64; 4],
    pub g: f64,
    pub altitude: AltitudeParams,
    pub controller: ControllerParams,
    pub envelope: Envelope,
    pub initial: PlantState,
    pub internal_model: bool,
    /// Fraction of the horizon used for steady-state metrics.
    pub tail_fraction: f64,
}

impl SimConfig {
    /// Defaults for a named scenario: 30 s periodic run with the internal
    /// model, or 10 s polynomial run without it.
    pub fn for_scenario(scenario: Scenario) -> Self {
        let g = DEFAULT_GRAVITY;
        let (reference, t_final, internal_model) = match scenario {
            Scenario::Polynomial => (ReferenceMode::polynomial_preset(), 10.0, false),
            _ => (ReferenceMode::periodic_preset(), 30.0, true),
        };
        Self {
            scenario,
            reference,
            t_final,
            dt_plant: 1e-3,
            dt_observer: 1e-3,
            preset: GainPreset::Nominal,
            kappa: NOMINAL_KAPPA,
            l: NOMINAL_L,
            g,
            altitude: AltitudeParams::nominal(g),
            controller: ControllerParams::nominal(g),
            envelope: Envelope::default(),
            initial: PlantState::default(),
            internal_model,
            tail_fraction: 0.25,
        }
    }

    pub fn with_preset(mut self, preset: GainPreset) -> Self {
        self.preset = preset;
        self.kappa = preset.kappa();
        self
    }

    pub fn beta_bounds(&self) -> BetaBounds {
        BetaBounds::from_ell(self.altitude.ell, self.g)
    }

    pub fn observer_gains(&self) -> Result<ObserverGains> {
        ObserverGains::new(self.kappa, self.l, &self.beta_bounds())
    }

    /// Number of plant steps and observer substeps per plant step.
    pub fn step_counts(&self) -> Result<(usize, usize)> {
        ensure(self.t_final > 0.0 && self.t_final.is_finite(), || {
            format!("t_final must be positive, got {}", self.t_final)
        })?;
        ensure(self.dt_plant > 0.0 && self.dt_plant.is_finite(), || {
            format!("dt_plant must be positive, got {}", self.dt_plant)
        })?;
        ensure(self.dt_observer > 0.0 && self.dt_observer <= self.dt_plant, || {
            format!(
                "dt_observer must lie in (0, dt_plant], got {} with dt_plant {}",
                self.dt_observer, self.dt_plant
            )
        })?;
        let n = (self.t_final / self.dt_plant).round();
        ensure(n >= 1.0 && (n * self.dt_plant - self.t_final).abs() <= 1e-9 * self.t_final, || {
            format!("t_final {} is not a multiple of dt_plant {}", self.t_final, self.dt_plant)
        })?;
        let m = (self.dt_plant / self.dt_observer).round();
        ensure(m >= 1.0 && (m * self.dt_observer - self.dt_plant).abs() <= 1e-9 * self.dt_plant, || {
            format!("dt_plant {} is not a multiple of dt_observer {}", self.dt_plant, self.dt_observer)
        })?;
        ensure(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0, || {
            format!("tail fraction must lie in (0, 1], got {}", self.tail_fraction)
        })?;
        Ok((n as usize, m as usize))
    }
}

/// One time sample of every logged signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRecord {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub theta: f64,
    pub psi: f64,
    pub x_ref: f64,
    pub y_ref: f64,
    pub z_ref: f64,
    pub ex: f64,
    pub ey: f64,
    pub ez: f64,
    pub u0: f64,
    pub u1: f64,
    pub u2: f64,
    pub beta: f64,
    pub eta: [f64; 6],
    pub ehat1: [f64; 4],
    pub sigma1: f64,
    pub ehat2: [f64; 4],
    pub sigma2: f64,
    /// `|θ|, |ψ| < π/2` and `cos θ cos ψ ≥ g / (g + ℓ)`.
    pub env_ok: bool,
}

/// Side channel recorded alongside the log: the drift each `σᵢ` estimates
/// and the distance of `η` from its steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftSample {
    pub t: f64,
    pub sigma_true: [f64; 2],
    pub eta_tilde_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub tail_start: f64,
    pub rms_ex: f64,
    pub rms_ey: f64,
    pub max_abs_ez_tail: f64,
    pub max_abs_theta: f64,
    pub max_abs_psi: f64,
    pub min_tilt_cos: f64,
    pub tilt_threshold: f64,
    pub envelope_violations: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub eta_tilde_terminal: Option<f64>,
}

impl Metrics {
    /// `key = value` lines in a fixed order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        put("tail_start", format!("{:e}", self.tail_start));
        put("rms_ex", format!("{:e}", self.rms_ex));
        put("rms_ey", format!("{:e}", self.rms_ey));
        put("max_abs_ez_tail", format!("{:e}", self.max_abs_ez_tail));
        put("max_abs_theta", format!("{:e}", self.max_abs_theta));
        put("max_abs_psi", format!("{:e}", self.max_abs_psi));
        put("min_tilt_cos", format!("{:e}", self.min_tilt_cos));
        put("tilt_threshold", format!("{:e}", self.tilt_threshold));
        put("envelope_violations", self.envelope_violations.to_string());
        put("beta_min", format!("{:e}", self.beta_min));
        put("beta_max", format!("{:e}", self.beta_max));
        put("eta_tilde_terminal", self.eta_tilde_terminal.map_or_else(|| "n/a".into(), |v| format!("{v:e}")));
        s
    }
}

/// Metrics computed from a log. RMS values integrate by the trapezoid rule
/// over `t ≥ t_end − tail_fraction·(t_end − t_0)`.
pub fn metrics(log: &[LogRecord], tail_fraction: f64, g: f64, ell: f64) -> Result<Metrics> {
    let (first, last) = match (log.first(), log.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::Contract("metrics of an empty log".into())),
    };
    ensure(tail_fraction > 0.0 && tail_fraction <= 1.0, || {
        format!("tail fraction must lie in (0, 1], got {tail_fraction}")
    })?;
    let tail_start = last.t - tail_fraction * (last.t - first.t);
    let tail: Vec<&LogRecord> = log.iter().filter(|r| r.t >= tail_start).collect();
    let rms = |f: fn(&LogRecord) -> f64| {
        if tail.len() < 2 {
            return f(tail[0]).abs();
        }
        let mut acc = 0.0;
        for w in tail.windows(2) {
            let (a, b) = (f(w[0]), f(w[1]));
            acc += 0.5 * (a * a + b * b) * (w[1].t - w[0].t);
        }
        let span = tail[tail.len() - 1].t - tail[0].t;
        (acc / span).sqrt()
    };

    let mut m = Metrics {
        tail_start,
        rms_ex: rms(|r| r.ex),
        rms_ey: rms(|r| r.ey),
        max_abs_ez_tail: tail.iter().map(|r| r.ez.abs()).fold(0.0, f64::max),
        max_abs_theta: 0.0,
        max_abs_psi: 0.0,
        min_tilt_cos: f64::INFINITY,
        tilt_threshold: g / (g + ell),
        envelope_violations: 0,
        beta_min: f64::INFINITY,
        beta_max: f64::NEG_INFINITY,
        eta_tilde_terminal: None,
    };
    for r in log {
        m.max_abs_theta = m.max_abs_theta.max(r.theta.abs());
        m.max_abs_psi = m.max_abs_psi.max(r.psi.abs());
        m.min_tilt_cos = m.min_tilt_cos.min(r.theta.cos() * r.psi.cos());
        m.beta_min = m.beta_min.min(r.beta);
        m.beta_max = m.beta_max.max(r.beta);
        if !r.env_ok {
            m.envelope_violations += 1;
        }
    }
    Ok(m)
}

pub fn envelope_ok(theta: f64, psi: f64, g: f64, ell: f64) -> bool {
    theta.abs() < FRAC_PI_2 && psi.abs() < FRAC_PI_2 && theta.cos() * psi.cos() >= g / (g + ell)
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub log: Vec<LogRecord>,
    pub metrics: Metrics,
    pub certification: CertificationReport,
    pub regulator: Option<RegulatorSolution>,
    pub drift: Vec<DriftSample>,
}

/// Everything fixed for the duration of a run.
struct Loop {
    g: f64,
    altitude: AltitudeParams,
    controller: ControllerParams,
    bounds: BetaBounds,
    im: InternalModel,
    exo: ExoParams,
    psi: Matrix,
    reference: ReferenceMode,
}

impl Loop {
    fn new(c: &SimConfig) -> Result<Self> {
        c.altitude.validate(c.g)?;
        let exo = exo_init(&c.reference)?;
        let im = build_internal_model(exo.rho1, exo.rho2, c.internal_model)?;
        Ok(Self {
            g: c.g,
            altitude: c.altitude,
            controller: c.controller.clone(),
            bounds: c.beta_bounds(),
            psi: psi_matrix(exo.rho1, exo.rho2, c.g),
            im,
            exo,
            reference: c.reference,
        })
    }

    fn rho(&self) -> [f64; 2] {
        [self.exo.rho1, self.exo.rho2]
    }

    /// Derivative of the stacked `(plant, η)` state with `ū` held.
    fn deriv(&self, x: &[f64], ubar: [f64; 2], out: &mut [f64]) -> Result<()> {
        let s = PlantState::from_slice(&x[..10]);
        let eta: [f64; 6] = x[10..16].try_into().expect("16-vector");
        let (deta, u) = im_deriv(&self.im, &eta, ubar);
        let input = ControlInput { u0: altitude_control(s.z, s.vz, &self.altitude), u1: u[0], u2: u[1] };
        let ds = plant_deriv(&s, &input, self.g)?.to_array();
        out[..10].copy_from_slice(&ds);
        out[10..].copy_from_slice(&deta);
        Ok(())
    }
}

fn check_attitude(s: &PlantState, t: f64) -> Result<()> {
    if !s.is_finite() {
        return Err(Error::NonFinite(format!("plant state at t = {t}")));
    }
    let limit = FRAC_PI_2 - ABORT_MARGIN;
    if s.theta.abs() >= limit || s.psi.abs() >= limit {
        return Err(Error::OutOfEnvelope(format!(
            "attitude left the transform envelope at t = {t}: theta = {}, psi = {}",
            s.theta, s.psi
        )));
    }
    Ok(())
}

/// Measured tracking errors `x̃`, `ỹ` with their first three derivatives,
/// taken from the plant state through the chain coordinates:
/// `(ξᵢ₁, ξᵢ₂, βξᵢ₃, β̇ξᵢ₃ + βξᵢ₄)` minus the reference jet `(wᵢ₁, wᵢ₂, wᵢ₃, −ρᵢwᵢ₂)`.
pub fn measurement_jets(
    s: &PlantState,
    w: &ExoState,
    altitude: &AltitudeParams,
    rho: [f64; 2],
    g: f64,
) -> [Jet; 2] {
    let xi = forward_transform(s, g);
    let b = beta_state(s, altitude, g);
    let jet = |axis: usize| {
        let x = xi.axis(axis);
        let r = w.block(axis);
        [x[0] - r[0], x[1] - r[1], b.beta * x[2] - r[2], b.dbeta * x[2] + b.beta * x[3] + rho[axis] * r[1]]
    };
    [jet(0), jet(1)]
}

fn stack(s: &PlantState, eta: &[f64; 6]) -> Vec<f64> {
    let mut x = s.to_array().to_vec();
    x.extend_from_slice(eta);
    x
}

/// Runs the output-feedback loop. Refuses to start if the gains do not
/// certify.
pub fn simulate(c: &SimConfig) -> Result<SimOutput> {
    let (n, substeps) = c.step_counts()?;
    let certification = validate_gains(&c.controller, &c.envelope, &c.beta_bounds(), CERT_GRID, c.g)?;
    if !certification.passed() {
        return Err(Error::Certification(certification.to_string()));
    }
    let gains = c.observer_gains()?;
    let lp = Loop::new(c)?;
    let regulator = if c.internal_model {
        Some(solve_regulator(
            &exo_matrix(lp.exo.rho1, lp.exo.rho2),
            &lp.im.f,
            &lp.im.g,
            &lp.im.gamma,
            &lp.psi,
        )?)
    } else {
        None
    };
    let rho = lp.rho();
    let dt = c.dt_plant;
    let dt_obs = c.dt_observer;
    let bbar_rows = [c.controller.bbar_row(0), c.controller.bbar_row(1)];

    let mut s = c.initial;
    check_attitude(&s, 0.0)?;
    let mut eta = [0.0; 6];
    let mut obs = [ObserverState::default(); 2];
    let mut log = Vec::with_capacity(n + 1);
    let mut drift = Vec::with_capacity(n + 1);

    for k in 0..=n {
        let t = k as f64 * dt;
        let w = closed_form_state(t, &lp.reference);
        let (xr, yr) = closed_form_reference(t, &lp.reference);
        let meas = [s.x - xr, s.y - yr];
        let (ubar, u) = robust_control(&obs[0], &obs[1], &eta, &lp.im, &lp.controller);
        let b = beta_state(&s, &lp.altitude, lp.g);
        let u0 = altitude_control(s.z, s.vz, &lp.altitude);
        log.push(LogRecord {
            t,
            x: s.x,
            y: s.y,
            z: s.z,
            theta: s.theta,
            psi: s.psi,
            x_ref: xr,
            y_ref: yr,
            z_ref: lp.altitude.z_star,
            ex: meas[0],
            ey: meas[1],
            ez: s.z - lp.altitude.z_star,
            u0,
            u1: u[0],
            u2: u[1],
            beta: b.beta,
            eta,
            ehat1: obs[0].ehat,
            sigma1: obs[0].sigma,
            ehat2: obs[1].ehat,
            sigma2: obs[1].sigma,
            env_ok: envelope_ok(s.theta, s.psi, lp.g, lp.altitude.ell),
        });
        drift.push(DriftSample {
            t,
            sigma_true: lumped_drift(&s, &w, &b, u, ubar, &lp.controller, rho, lp.g),
            eta_tilde_norm: regulator.as_ref().map(|r| eta_tilde(&eta, &r.sigma, &w.0).1),
        });
        if k == n {
            break;
        }

        let x = stack(&s, &eta);
        let x = rk4_step(|_, xx, d| lp.deriv(xx, ubar, d), t, &x, dt)?;
        let s_next = PlantState::from_slice(&x[..10]);
        let t_next = (k + 1) as f64 * dt;
        check_attitude(&s_next, t_next)?;
        let b_next = beta_state(&s_next, &lp.altitude, lp.g).beta;

        let w_next = closed_form_state(t_next, &lp.reference);
        let jets = measurement_jets(&s, &w, &lp.altitude, rho, lp.g);
        let jets_next = measurement_jets(&s_next, &w_next, &lp.altitude, rho, lp.g);
        let prop = ObserverPropagator::new(&gains, 0.5 * (b.beta + b_next), dt_obs)?;
        for (axis, o) in obs.iter_mut().enumerate() {
            let row = bbar_rows[axis];
            let drive = row[0] * ubar[0] + row[1] * ubar[1];
            let seg = HermiteSegment::new(&jets[axis], &jets_next[axis], dt)?;
            for j in 0..substeps {
                if substeps == 1 {
                    *o = prop.step(o, &seg, drive);
                } else {
                    let part = seg.sub(j as f64 * dt_obs, (j + 1) as f64 * dt_obs)?;
                    *o = prop.step(o, &part, drive);
                }
            }
            if !o.is_finite() {
                return Err(Error::NonFinite(format!("observer {} at t = {t_next}", axis + 1)));
            }
        }
        s = s_next;
        eta = x[10..16].try_into().expect("16-vector");
    }

    let mut m = metrics(&log, c.tail_fraction, lp.g, lp.altitude.ell)?;
    m.eta_tilde_terminal = drift.last().and_then(|d| d.eta_tilde_norm);
    Ok(SimOutput { log, metrics: m, certification, regulator, drift })
}

/// `(η − Σw, ‖η − Σw‖₂)`
fn eta_tilde(eta: &[f64; 6], sigma: &Matrix, w: &[f64; 6]) -> ([f64; 6], f64) {
    let sw = sigma.mul_vec(w).expect("6x6 by 6");
    let mut d = [0.0; 6];
    for i in 0..6 {
        d[i] = eta[i] - sw[i];
    }
    (d, d.iter().map(|v| v * v).sum::<f64>().sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealSample {
    pub t: f64,
    pub e_norm: f64,
}

/// Closes the loop with the full-state linearizing law, starting from
/// error coordinates `e0` at `z = z*` with `η = Σw(0)`.
pub fn simulate_ideal(c: &SimConfig, e0: &ErrorCoords) -> Result<Vec<IdealSample>> {
    c.step_counts()?;
    let lp = Loop::new(c)?;
    let rho = lp.rho();
    let reg = if c.internal_model {
        Some(solve_regulator(&exo_matrix(rho[0], rho[1]), &lp.im.f, &lp.im.g, &lp.im.gamma, &lp.psi)?)
    } else {
        None
    };
    let w0 = closed_form_state(0.0, &lp.reference);
    let s = plant_state_for_errors(e0, &w0, rho, lp.altitude.z_star, 0.0, &lp.altitude, lp.g)?;
    run_ideal(c, lp, reg, s)
}

/// Ideal-law closed loop started from the configured initial plant state.
pub fn simulate_ideal_from_initial(c: &SimConfig) -> Result<Vec<IdealSample>> {
    let lp = Loop::new(c)?;
    let rho = lp.rho();
    let reg = if c.internal_model {
        Some(solve_regulator(&exo_matrix(rho[0], rho[1]), &lp.im.f, &lp.im.g, &lp.im.gamma, &lp.psi)?)
    } else {
        None
    };
    run_ideal(c, lp, reg, c.initial)
}

fn run_ideal(
    c: &SimConfig,
    lp: Loop,
    reg: Option<RegulatorSolution>,
    mut s: PlantState,
) -> Result<Vec<IdealSample>> {
    let (n, _) = c.step_counts()?;
    let rho = lp.rho();
    let bounds = lp.bounds;
    let w0 = closed_form_state(0.0, &lp.reference);
    let mut eta = match &reg {
        Some(r) => eta_tilde(&[0.0; 6], &r.sigma, &w0.0).0.map(|v| -v),
        None => [0.0; 6],
    };

    let errors = |s: &PlantState, t: f64| -> Result<ErrorCoords> {
        let w = closed_form_state(t, &lp.reference);
        let b = beta_state(s, &lp.altitude, lp.g);
        error_coords(&forward_transform(s, lp.g), &w, b.beta, b.dbeta, rho, &bounds)
    };
    let mut out = Vec::with_capacity(n + 1);
    let dt = c.dt_plant;
    for k in 0..=n {
        let t = k as f64 * dt;
        out.push(IdealSample { t, e_norm: errors(&s, t)?.norm() });
        if k == n {
            break;
        }
        let x = stack(&s, &eta);
        let x = rk4_step(
            |tt, xx, d| {
                let s = PlantState::from_slice(&xx[..10]);
                let eta: [f64; 6] = xx[10..16].try_into().expect("16-vector");
                let w = closed_form_state(tt, &lp.reference);
                let et = match &reg {
                    Some(r) => eta_tilde(&eta, &r.sigma, &w.0).0,
                    None => eta,
                };
                let b = beta_state(&s, &lp.altitude, lp.g);
                let ubar =
                    ideal_control(&s, &w, &et, &b, &lp.im, &lp.controller, &lp.psi, rho, &bounds, lp.g)?;
                lp.deriv(xx, ubar, d)
            },
            t,
            &x,
            dt,
        )?;
        s = PlantState::from_slice(&x[..10]);
        check_attitude(&s, (k + 1) as f64 * dt)?;
        eta = x[10..16].try_into().expect("16-vector");
    }
    Ok(out)
}
