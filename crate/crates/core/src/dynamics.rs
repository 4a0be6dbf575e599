//! Continuous-time plant models and the fixed-step integrator that advances them.
//!
//! The longitudinal plant is a point mass driven by a braking force with an
//! optional quadratic aerodynamic drag term. The lateral plant is the linear
//! single-track model in lateral velocity and yaw rate, extended with planar
//! kinematics for heading and lateral position.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Largest accepted integration step, seconds.
pub const MAX_STEP: f64 = 0.1;

/// Number of bisection iterations used to locate the zero-speed crossing.
const STOP_BISECTION_ITERS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongitudinalState {
    /// Position along the travel axis, m.
    pub x: f64,
    /// Forward speed, m/s.
    pub v: f64,
}

impl LongitudinalState {
    pub fn new(x: f64, v: f64) -> Self {
        Self { x, v }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LongitudinalParams {
    /// Vehicle mass, kg.
    pub mass: f64,
    pub drag_enabled: bool,
    /// Air density, kg/m^3.
    pub rho: f64,
    /// Drag coefficient.
    pub c_d: f64,
    /// Frontal area, m^2.
    pub area: f64,
}

impl Default for LongitudinalParams {
    fn default() -> Self {
        Self {
            mass: 1725.0,
            drag_enabled: true,
            rho: 1.225,
            c_d: 0.3,
            area: 2.2,
        }
    }
}

impl LongitudinalParams {
    pub fn without_drag(mass: f64) -> Self {
        Self {
            mass,
            drag_enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("plant.mass", self.mass),
            ("plant.rho", self.rho),
            ("plant.c_d", self.c_d),
            ("plant.area", self.area),
        ] {
            ensure_finite(name, value)?;
        }
        if self.mass <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "plant.mass must be positive, got {}",
                self.mass
            )));
        }
        if self.rho < 0.0 || self.c_d < 0.0 || self.area < 0.0 {
            return Err(Error::InvalidParameter(
                "plant.rho, plant.c_d and plant.area must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Aerodynamic force on the vehicle, N. Always opposes the motion.
    pub fn drag_force(&self, v: f64) -> f64 {
        if self.drag_enabled {
            -0.5 * self.rho * self.c_d * self.area * v * v.abs()
        } else {
            0.0
        }
    }
}

/// Time derivative `(dx/dt, dv/dt)` of the longitudinal plant under `force`
/// (negative decelerates).
pub fn longitudinal_derivative(
    state: LongitudinalState,
    force: f64,
    params: &LongitudinalParams,
) -> Result<(f64, f64)> {
    ensure_finite("x", state.x)?;
    ensure_finite("v", state.v)?;
    ensure_finite("force", force)?;
    params.validate()?;
    Ok(longitudinal_rhs(state.v, force, params))
}

fn longitudinal_rhs(v: f64, force: f64, params: &LongitudinalParams) -> (f64, f64) {
    (v, (force + params.drag_force(v)) / params.mass)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LateralState {
    /// Lateral velocity in the body frame, m/s.
    pub v_y: f64,
    /// Yaw rate, rad/s.
    pub psi_dot: f64,
    /// Heading relative to the reference path, rad.
    pub psi: f64,
    /// Lateral position, m.
    pub y: f64,
}

impl LateralState {
    fn to_array(self) -> [f64; 4] {
        [self.v_y, self.psi_dot, self.psi, self.y]
    }

    fn from_array(a: [f64; 4]) -> Self {
        Self {
            v_y: a[0],
            psi_dot: a[1],
            psi: a[2],
            y: a[3],
        }
    }
}

/// Physical constants of the single-track model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LateralParams {
    /// Front axle cornering stiffness, N/rad.
    pub c_f: f64,
    /// Rear axle cornering stiffness, N/rad.
    pub c_r: f64,
    /// Center of mass to front axle, m.
    pub l_f: f64,
    /// Center of mass to rear axle, m.
    pub l_r: f64,
    pub mass: f64,
    /// Yaw inertia, kg m^2.
    pub i_z: f64,
    /// Longitudinal speed, m/s. Held constant.
    pub v_x: f64,
    /// External yaw torque, N m.
    pub m_z: f64,
    /// Steering saturation, rad.
    pub max_steer: f64,
}

impl Default for LateralParams {
    fn default() -> Self {
        Self {
            c_f: 80_000.0,
            c_r: 80_000.0,
            l_f: 1.2,
            l_r: 1.6,
            mass: 1725.0,
            i_z: 2500.0,
            v_x: 8.0,
            m_z: 0.0,
            max_steer: 0.5,
        }
    }
}

impl LateralParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("c_f", self.c_f),
            ("c_r", self.c_r),
            ("l_f", self.l_f),
            ("l_r", self.l_r),
            ("mass", self.mass),
            ("i_z", self.i_z),
            ("v_x", self.v_x),
            ("max_steer", self.max_steer),
        ];
        for (name, value) in fields {
            ensure_finite(name, value)?;
            if value <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "lateral parameter {name} must be positive, got {value}"
                )));
            }
        }
        ensure_finite("m_z", self.m_z)
    }

    /// State matrix of the `(v_y, psi_dot)` subsystem.
    pub fn system_matrix(&self) -> [[f64; 2]; 2] {
        let Self {
            c_f,
            c_r,
            l_f,
            l_r,
            mass,
            i_z,
            v_x,
            ..
        } = *self;
        let moment_arm = c_r * l_r - c_f * l_f;
        [
            [-(c_r + c_f) / (mass * v_x), moment_arm / (mass * v_x) - v_x],
            [
                moment_arm / (i_z * v_x),
                -(c_r * l_r * l_r + c_f * l_f * l_f) / (i_z * v_x),
            ],
        ]
    }

    /// Input column for the front steering angle.
    pub fn steer_input(&self) -> [f64; 2] {
        [self.c_f / self.mass, self.c_f * self.l_f / self.i_z]
    }

    /// Input column for the yaw torque.
    pub fn torque_input(&self) -> [f64; 2] {
        [0.0, 1.0 / self.i_z]
    }

    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let [[a, b], [c, d]] = self.system_matrix();
        let half_trace = 0.5 * (a + d);
        let det = a * d - b * c;
        let disc = Complex64::new(half_trace * half_trace - det, 0.0).sqrt();
        [half_trace + disc, half_trace - disc]
    }

    /// Equilibrium `(v_y, psi_dot)` under a constant steering angle and the
    /// configured yaw torque.
    pub fn steady_state(&self, delta_f: f64) -> Result<(f64, f64)> {
        self.validate()?;
        let [[a, b], [c, d]] = self.system_matrix();
        let [bs0, bs1] = self.steer_input();
        let [bt0, bt1] = self.torque_input();
        let rhs0 = -(bs0 * delta_f + bt0 * self.m_z);
        let rhs1 = -(bs1 * delta_f + bt1 * self.m_z);
        let det = a * d - b * c;
        if det == 0.0 {
            return Err(Error::InvalidParameter(
                "singular lateral system matrix".into(),
            ));
        }
        Ok(((rhs0 * d - b * rhs1) / det, (a * rhs1 - c * rhs0) / det))
    }
}

/// Time derivative of the lateral state, ordered `(v_y, psi_dot, psi, y)`.
pub fn lateral_derivative(
    state: LateralState,
    delta_f: f64,
    params: &LateralParams,
) -> Result<[f64; 4]> {
    params.validate()?;
    ensure_finite("delta_f", delta_f)?;
    for value in state.to_array() {
        ensure_finite("lateral state", value)?;
    }
    if delta_f.abs() > params.max_steer {
        return Err(Error::InvalidInput(format!(
            "steering angle {delta_f} rad exceeds limit {} rad",
            params.max_steer
        )));
    }
    Ok(lateral_rhs(&state.to_array(), delta_f, params))
}

fn lateral_rhs(s: &[f64; 4], delta_f: f64, params: &LateralParams) -> [f64; 4] {
    let [v_y, psi_dot, psi, _] = *s;
    let [[a, b], [c, d]] = params.system_matrix();
    let [bs0, bs1] = params.steer_input();
    let [bt0, bt1] = params.torque_input();
    [
        a * v_y + b * psi_dot + bs0 * delta_f + bt0 * params.m_z,
        c * v_y + d * psi_dot + bs1 * delta_f + bt1 * params.m_z,
        psi_dot,
        params.v_x * psi.sin() + v_y * psi.cos(),
    ]
}

fn check_step(dt: f64) -> Result<()> {
    if dt.is_finite() && dt > 0.0 && dt <= MAX_STEP {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "time step must lie in (0, {MAX_STEP}] s, got {dt}"
        )))
    }
}

/// One classical fourth-order Runge-Kutta step of `dy/dt = f(y)`.
pub fn integrate_step<const N: usize, F>(y: [f64; N], dt: f64, f: F) -> Result<[f64; N]>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    check_step(dt)?;
    Ok(rk4(&y, dt, &f))
}

fn rk4<const N: usize, F>(y: &[f64; N], dt: f64, f: &F) -> [f64; N]
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let offset = |base: &[f64; N], k: &[f64; N], h: f64| -> [f64; N] {
        std::array::from_fn(|i| base[i] + h * k[i])
    };
    let k1 = f(y);
    let k2 = f(&offset(y, &k1, 0.5 * dt));
    let k3 = f(&offset(y, &k2, 0.5 * dt));
    let k4 = f(&offset(y, &k3, dt));
    std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Advances the brake-only longitudinal plant by `dt` under a force held
/// constant over the step.
///
/// If the speed would cross zero inside the step, the crossing instant is
/// located by bisection and the vehicle is left at rest at the position it
/// reached there. A vehicle at rest under a non-positive force stays put.
pub fn step_longitudinal(
    state: LongitudinalState,
    force: f64,
    params: &LongitudinalParams,
    dt: f64,
) -> Result<LongitudinalState> {
    check_step(dt)?;
    ensure_finite("x", state.x)?;
    ensure_finite("v", state.v)?;
    ensure_finite("force", force)?;
    params.validate()?;
    if state.v < 0.0 {
        return Err(Error::InvalidInput(format!(
            "brake-only plant cannot start reversing, v = {}",
            state.v
        )));
    }
    if state.v == 0.0 && force <= 0.0 {
        return Ok(state);
    }

    let rhs = |s: &[f64; 2]| {
        let (dx, dv) = longitudinal_rhs(s[1], force, params);
        [dx, dv]
    };
    let start = [state.x, state.v];
    let [x, v] = rk4(&start, dt, &rhs);
    if v >= 0.0 {
        return Ok(LongitudinalState { x, v });
    }

    let (mut lo, mut hi) = (0.0, dt);
    for _ in 0..STOP_BISECTION_ITERS {
        let mid = 0.5 * (lo + hi);
        if rk4(&start, mid, &rhs)[1] >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let [x_stop, _] = rk4(&start, lo, &rhs);
    Ok(LongitudinalState { x: x_stop, v: 0.0 })
}

/// Advances the lateral plant by `dt` with the steering angle held.
pub fn step_lateral(
    state: LateralState,
    delta_f: f64,
    params: &LateralParams,
    dt: f64,
) -> Result<LateralState> {
    lateral_derivative(state, delta_f, params)?;
    let next = integrate_step(state.to_array(), dt, |s| lateral_rhs(s, delta_f, params))?;
    Ok(LateralState::from_array(next))
}
