//! Two-resource depletion model driven by an on/off task indicator δ(t):
//!
//! ```text
//! w   = (k_b / t^ρ) · (1 − A)·B / (K_B + B) · δ
//! dA  = w − (k_w / t^ρ) · A / (K_A + A)
//! dB  = −w + (k_r / t^ρ) · (B_max − B) · (1 − δ)
//! ```
//!
//! The right-hand side is non-smooth at every phase boundary, so the
//! integrator never lets an RK4 step straddle one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DynamicsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CogParams {
    pub k_w: f64,
    pub k_r: f64,
    pub k_b: f64,
    #[serde(rename = "K_A")]
    pub half_sat_a: f64,
    #[serde(rename = "K_B")]
    pub half_sat_b: f64,
    #[serde(rename = "B_max")]
    pub b_max: f64,
    pub rho: f64,
    pub a0_init: f64,
    pub b0_init: f64,
    /// Integration start time in minutes; the schedule begins here.
    pub t_start: f64,
}

impl Default for CogParams {
    fn default() -> Self {
        Self {
            k_w: 0.2,
            k_r: 0.3,
            k_b: 0.4,
            half_sat_a: 0.1,
            half_sat_b: 0.1,
            b_max: 1.0,
            rho: 0.5,
            a0_init: 0.3,
            b0_init: 1.0,
            t_start: 1.0,
        }
    }
}

/// Admissible-range guards applied on top of the structural constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamGuards {
    /// Exclusive upper bound on ρ.
    pub rho_max: f64,
}

impl Default for ParamGuards {
    fn default() -> Self {
        Self { rho_max: 1.0 }
    }
}

impl CogParams {
    pub fn validate(&self) -> Result<()> {
        self.validate_with(&ParamGuards::default())
    }

    pub fn validate_with(&self, guards: &ParamGuards) -> Result<()> {
        let bad = |msg: String| Err(DynamicsError::InvalidParams(msg));
        for (name, v) in [("k_w", self.k_w), ("k_r", self.k_r), ("k_b", self.k_b)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and >= 0, got {v}"));
            }
        }
        for (name, v) in [("K_A", self.half_sat_a), ("K_B", self.half_sat_b), ("B_max", self.b_max)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        if !(self.rho >= 0.0 && self.rho < guards.rho_max) {
            return bad(format!("rho must lie in [0, {}), got {}", guards.rho_max, self.rho));
        }
        if !(self.t_start > 0.0 && self.t_start.is_finite()) {
            return Err(DynamicsError::SingularTime(self.t_start));
        }
        if !(0.0..=1.0).contains(&self.a0_init) {
            return bad(format!("A0_init must lie in [0, 1], got {}", self.a0_init));
        }
        if !(0.0..=self.b_max).contains(&self.b0_init) {
            return bad(format!("B0_init must lie in [0, B_max], got {}", self.b0_init));
        }
        Ok(())
    }

    pub fn get(&self, p: CogParam) -> f64 {
        match p {
            CogParam::KW => self.k_w,
            CogParam::KR => self.k_r,
            CogParam::KB => self.k_b,
            CogParam::HalfSatA => self.half_sat_a,
            CogParam::HalfSatB => self.half_sat_b,
            CogParam::BMax => self.b_max,
            CogParam::Rho => self.rho,
        }
    }

    /// Setting `B_max` below `B0_init` lowers `B0_init` to the new capacity,
    /// so the reserve starts full rather than over capacity.
    pub fn set(&mut self, p: CogParam, v: f64) {
        match p {
            CogParam::KW => self.k_w = v,
            CogParam::KR => self.k_r = v,
            CogParam::KB => self.k_b = v,
            CogParam::HalfSatA => self.half_sat_a = v,
            CogParam::HalfSatB => self.half_sat_b = v,
            CogParam::BMax => {
                self.b_max = v;
                self.b0_init = self.b0_init.min(v);
            }
            CogParam::Rho => self.rho = v,
        }
    }

    pub fn with(mut self, p: CogParam, v: f64) -> Self {
        self.set(p, v);
        self
    }
}

/// The fittable model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CogParam {
    #[serde(rename = "k_w")]
    KW,
    #[serde(rename = "k_r")]
    KR,
    #[serde(rename = "k_b")]
    KB,
    #[serde(rename = "K_A")]
    HalfSatA,
    #[serde(rename = "K_B")]
    HalfSatB,
    #[serde(rename = "B_max")]
    BMax,
    #[serde(rename = "rho")]
    Rho,
}

impl CogParam {
    pub const ALL: [CogParam; 7] = [
        CogParam::KW,
        CogParam::KR,
        CogParam::KB,
        CogParam::HalfSatA,
        CogParam::HalfSatB,
        CogParam::BMax,
        CogParam::Rho,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CogParam::KW => "k_w",
            CogParam::KR => "k_r",
            CogParam::KB => "k_b",
            CogParam::HalfSatA => "K_A",
            CogParam::HalfSatB => "K_B",
            CogParam::BMax => "B_max",
            CogParam::Rho => "rho",
        }
    }

    /// Strictly positive parameters, which optimisers treat in log space.
    pub fn is_positive(self) -> bool {
        self != CogParam::Rho
    }
}

impl fmt::Display for CogParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CogParam {
    type Err = DynamicsError;

    fn from_str(s: &str) -> Result<Self> {
        CogParam::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| DynamicsError::InvalidParams(format!("unknown parameter '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseKind {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub kind: PhaseKind,
    /// Minutes.
    pub duration: f64,
}

/// Alternating on/off phases, starting on-task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSchedule {
    phases: Vec<Phase>,
}

impl TaskSchedule {
    /// A trailing zero-length off-phase is dropped; every other phase must
    /// have positive duration.
    pub fn new(mut phases: Vec<Phase>) -> Result<Self> {
        if matches!(phases.last(), Some(p) if p.kind == PhaseKind::Off && p.duration == 0.0) {
            phases.pop();
        }
        if phases.is_empty() {
            return Err(DynamicsError::InvalidSchedule("no phases".into()));
        }
        for (i, p) in phases.iter().enumerate() {
            let expected = if i % 2 == 0 { PhaseKind::On } else { PhaseKind::Off };
            if p.kind != expected {
                return Err(DynamicsError::InvalidSchedule(format!(
                    "phase {i} should be {expected:?}, phases alternate starting on-task"
                )));
            }
            if !(p.duration > 0.0 && p.duration.is_finite()) {
                return Err(DynamicsError::InvalidSchedule(format!(
                    "phase {i} has non-positive duration {}",
                    p.duration
                )));
            }
        }
        Ok(Self { phases })
    }

    /// Build from alternating durations `[on, off, on, off, ...]`.
    pub fn from_durations(durations: &[f64]) -> Result<Self> {
        Self::new(
            durations
                .iter()
                .enumerate()
                .map(|(i, &duration)| Phase {
                    kind: if i % 2 == 0 { PhaseKind::On } else { PhaseKind::Off },
                    duration,
                })
                .collect(),
        )
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn task_count(&self) -> usize {
        self.phases.iter().filter(|p| p.kind == PhaseKind::On).count()
    }

    /// Absolute phase boundaries; `phases().len() + 1` values from `t_start`.
    pub fn boundaries(&self, t_start: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.phases.len() + 1);
        let mut t = t_start;
        out.push(t);
        for p in &self.phases {
            t += p.duration;
            out.push(t);
        }
        out
    }
}

/// Time derivatives `(dA/dt, dB/dt)`.
pub fn cog_rhs(a: f64, b: f64, t: f64, on_task: bool, p: &CogParams) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(DynamicsError::SingularTime(t));
    }
    Ok(rhs(a, b, t, on_task, p))
}

#[inline(always)]
fn rhs(a: f64, b: f64, t: f64, on_task: bool, p: &CogParams) -> (f64, f64) {
    rhs_scaled(a, b, t.powf(-p.rho), on_task, p)
}

/// Right-hand side with the time factor `t^(−ρ)` supplied by the caller.
#[inline]
fn rhs_scaled(a: f64, b: f64, scale: f64, on_task: bool, p: &CogParams) -> (f64, f64) {
    let consumption = p.k_w * scale * a / (p.half_sat_a + a);
    if on_task {
        let w = p.k_b * scale * (1.0 - a) * b / (p.half_sat_b + b);
        (w - consumption, -w)
    } else {
        (-consumption, p.k_r * scale * (p.b_max - b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrationConfig {
    /// Nominal RK4 step in minutes.
    pub step: f64,
    /// Record the state after every step instead of only at phase boundaries.
    pub dense: bool,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            step: 0.01,
            dense: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// A at the end of each on-phase, by task.
    pub a_end: Vec<f64>,
    /// End time of each on-phase, by task.
    pub t_end: Vec<f64>,
    /// Number of times a state component had to be clamped into range.
    pub clamp_events: usize,
}

impl Trajectory {
    pub fn task_count(&self) -> usize {
        self.a_end.len()
    }
}

/// Fixed-step RK4 over the schedule, restarting at every phase boundary.
///
/// Each phase is split into equal nominal steps with the last one shortened
/// to end exactly on the boundary. After every step A is clamped to [0, 1]
/// and B to [0, B_max].
pub fn integrate_schedule(
    p: &CogParams,
    sched: &TaskSchedule,
    cfg: &IntegrationConfig,
) -> Result<Trajectory> {
    if !(cfg.step > 0.0 && cfg.step.is_finite()) {
        return Err(DynamicsError::InvalidParams(format!("step must be positive, got {}", cfg.step)));
    }
    p.validate()?;
    let bounds = sched.boundaries(p.t_start);
    let tasks = sched.task_count();
    let mut traj = Trajectory {
        times: vec![p.t_start],
        a: vec![p.a0_init],
        b: vec![p.b0_init],
        a_end: Vec::with_capacity(tasks),
        t_end: Vec::with_capacity(tasks),
        clamp_events: 0,
    };
    let (mut a, mut b) = (p.a0_init, p.b0_init);
    let h_nominal = cfg.step;

    for (idx, phase) in sched.phases().iter().enumerate() {
        let on = phase.kind == PhaseKind::On;
        let (t0, t1) = (bounds[idx], bounds[idx + 1]);
        let steps = ((phase.duration / h_nominal) - 1e-9).ceil().max(1.0) as usize;
        let mut t = t0;
        let mut scale_t = t.powf(-p.rho);
        for s in 0..steps {
            let t_next = if s + 1 == steps { t1 } else { t0 + (s + 1) as f64 * h_nominal };
            let h = t_next - t;
            let half = 0.5 * h;
            let scale_mid = (t + half).powf(-p.rho);
            let scale_next = t_next.powf(-p.rho);
            let (ka1, kb1) = rhs_scaled(a, b, scale_t, on, p);
            let (ka2, kb2) = rhs_scaled(a + half * ka1, b + half * kb1, scale_mid, on, p);
            let (ka3, kb3) = rhs_scaled(a + half * ka2, b + half * kb2, scale_mid, on, p);
            let (ka4, kb4) = rhs_scaled(a + h * ka3, b + h * kb3, scale_next, on, p);
            t = t_next;
            scale_t = scale_next;
            a += h / 6.0 * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4);
            b += h / 6.0 * (kb1 + 2.0 * kb2 + 2.0 * kb3 + kb4);
            if !(a.is_finite() && b.is_finite()) {
                return Err(DynamicsError::NonFiniteState { phase: idx });
            }
            let ca = a.clamp(0.0, 1.0);
            let cb = b.clamp(0.0, p.b_max);
            traj.clamp_events += usize::from(ca != a) + usize::from(cb != b);
            a = ca;
            b = cb;
            if cfg.dense && s + 1 < steps {
                traj.times.push(t_next);
                traj.a.push(a);
                traj.b.push(b);
            }
        }
        traj.times.push(t1);
        traj.a.push(a);
        traj.b.push(b);
        if on {
            traj.a_end.push(a);
            traj.t_end.push(t1);
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schedule(durations: &[f64]) -> TaskSchedule {
        TaskSchedule::from_durations(durations).unwrap()
    }

    #[test]
    fn rhs_hand_evaluation() {
        let p = CogParams {
            k_w: 0.2,
            k_b: 0.4,
            half_sat_a: 0.1,
            half_sat_b: 0.1,
            rho: 0.5,
            ..CogParams::default()
        };
        let (da, db) = cog_rhs(0.5, 0.5, 1.0, true, &p).unwrap();
        // w = 0.4·0.5·(0.5/0.6), consumption = 0.2·(0.5/0.6)
        let w = 0.4 * 0.5 * (0.5 / 0.6);
        assert!((da - (w - 0.2 * 0.5 / 0.6)).abs() < 1e-15);
        assert!(da.abs() < 1e-15);
        assert!((db + 0.5 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn off_task_never_increases_a() {
        let p = CogParams::default();
        for &(a, b, t) in &[(0.5, 0.2, 1.0), (0.01, 1.0, 30.0), (1.0, 0.0, 2.5)] {
            let (da, _) = cog_rhs(a, b, t, false, &p).unwrap();
            assert!(da <= 0.0);
        }
    }

    #[test]
    fn on_task_conversion_conserves_total() {
        let p = CogParams {
            k_w: 0.0,
            k_r: 0.0,
            ..CogParams::default()
        };
        let (da, db) = cog_rhs(0.3, 0.7, 2.0, true, &p).unwrap();
        assert_eq!(da + db, 0.0);
    }

    #[test]
    fn singular_time_rejected() {
        let p = CogParams::default();
        assert_eq!(cog_rhs(0.1, 0.1, 0.0, true, &p), Err(DynamicsError::SingularTime(0.0)));
        let bad = CogParams {
            t_start: 0.0,
            ..p
        };
        assert_eq!(
            integrate_schedule(&bad, &schedule(&[1.0]), &IntegrationConfig::default()),
            Err(DynamicsError::SingularTime(0.0))
        );
    }

    #[test]
    fn single_task_records_one_end_value() {
        let p = CogParams::default();
        let s = TaskSchedule::new(vec![
            Phase { kind: PhaseKind::On, duration: 3.0 },
            Phase { kind: PhaseKind::Off, duration: 0.0 },
        ])
        .unwrap();
        assert_eq!(s.phases().len(), 1);
        let tr = integrate_schedule(&p, &s, &IntegrationConfig::default()).unwrap();
        assert_eq!(tr.a_end.len(), 1);
        assert_eq!(tr.t_end, vec![4.0]);
    }

    #[test]
    fn schedule_validation() {
        assert!(TaskSchedule::from_durations(&[]).is_err());
        assert!(TaskSchedule::from_durations(&[1.0, -1.0, 2.0]).is_err());
        assert!(TaskSchedule::new(vec![Phase { kind: PhaseKind::Off, duration: 1.0 }]).is_err());
        let s = schedule(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.task_count(), 2);
        assert_eq!(s.boundaries(1.0), vec![1.0, 2.0, 4.0, 7.0, 11.0]);
    }

    #[test]
    fn params_validation() {
        assert!(CogParams::default().validate().is_ok());
        let p = CogParams { rho: 1.0, ..CogParams::default() };
        assert!(p.validate().is_err());
        assert!(p.validate_with(&ParamGuards { rho_max: 2.0 }).is_ok());
        let p = CogParams { b0_init: 2.0, ..CogParams::default() };
        assert!(p.validate().is_err());
        let p = CogParams { half_sat_a: 0.0, ..CogParams::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn shrinking_capacity_caps_initial_reserve() {
        let p = CogParams::default().with(CogParam::BMax, 0.5);
        assert_eq!(p.b0_init, 0.5);
        assert!(p.validate().is_ok());
        let p = CogParams::default().with(CogParam::BMax, 2.0);
        assert_eq!(p.b0_init, 1.0);
    }

    #[test]
    fn param_names_round_trip() {
        for p in CogParam::ALL {
            assert_eq!(p.name().parse::<CogParam>().unwrap(), p);
            let v = CogParams::default().with(p, 0.123).get(p);
            assert_eq!(v, 0.123);
        }
        assert!("kw".parse::<CogParam>().is_err());
    }

    #[test]
    fn boundaries_are_hit_exactly() {
        let p = CogParams::default();
        let s = schedule(&[0.037, 1.2345, 2.0]);
        let cfg = IntegrationConfig { step: 0.01, dense: true };
        let tr = integrate_schedule(&p, &s, &cfg).unwrap();
        for b in s.boundaries(p.t_start) {
            assert!(tr.times.contains(&b), "missing boundary {b}");
        }
        assert!(tr.times.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 0.01 + 1e-12));
    }
}
