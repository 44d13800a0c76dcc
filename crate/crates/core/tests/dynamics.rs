use infofit::datagen::{sample_schedule, ScheduleGenConfig};
use infofit::dynamics::{integrate_schedule, CogParams, IntegrationConfig, TaskSchedule};

fn dense(step: f64) -> IntegrationConfig {
    IntegrationConfig { step, dense: true }
}

fn default_schedule() -> TaskSchedule {
    sample_schedule(&ScheduleGenConfig::default(), 11).unwrap()
}

#[test]
fn total_resource_is_conserved_without_consumption_or_recovery() {
    let p = CogParams {
        k_w: 0.0,
        k_r: 0.0,
        ..CogParams::default()
    };
    // 100 minutes of alternating 7/3-minute work/rest blocks.
    let durations: Vec<f64> = (0..20).map(|i| if i % 2 == 0 { 7.0 } else { 3.0 }).collect();
    let sched = TaskSchedule::from_durations(&durations).unwrap();
    let traj = integrate_schedule(&p, &sched, &dense(0.01)).unwrap();
    let total0 = p.a0_init + p.b0_init;
    let drift = traj
        .a
        .iter()
        .zip(&traj.b)
        .map(|(a, b)| (a + b - total0).abs())
        .fold(0.0, f64::max);
    assert!(drift <= 1e-8, "drift {drift}");
    assert_eq!(traj.clamp_events, 0);
    assert!((traj.times.last().unwrap() - (p.t_start + 100.0)).abs() < 1e-9);
}

/// With k_b = 0 the conversion term vanishes and A obeys the separable ODE
/// dA/dt = −k_w t^(−ρ) A/(K_A + A), whose solution satisfies
/// K_A ln A + A = K_A ln A₀ + A₀ − k_w (t^(1−ρ) − t₀^(1−ρ)) / (1−ρ).
fn separable_solution(p: &CogParams, t: f64) -> f64 {
    let ka = p.half_sat_a;
    let e = 1.0 - p.rho;
    let rhs = ka * p.a0_init.ln() + p.a0_init - p.k_w * (t.powf(e) - p.t_start.powf(e)) / e;
    let mut a = p.a0_init;
    for _ in 0..100 {
        let f = ka * a.ln() + a - rhs;
        let step = f / (ka / a + 1.0);
        a = (a - step).max(a * 1e-3);
        if step.abs() < 1e-16 {
            break;
        }
    }
    a
}

#[test]
fn rk4_global_error_is_fourth_order() {
    let p = CogParams {
        k_b: 0.0,
        k_w: 0.5,
        ..CogParams::default()
    };
    let sched = TaskSchedule::from_durations(&[6.0]).unwrap();
    let exact = separable_solution(&p, p.t_start + 6.0);
    let errors: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&h| {
            let traj = integrate_schedule(&p, &sched, &IntegrationConfig { step: h, dense: false }).unwrap();
            (traj.a_end[0] - exact).abs()
        })
        .collect();
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((4.0..=64.0).contains(&ratio), "errors {errors:?}");
    }
    assert!(errors[2] < 1e-9, "errors {errors:?}");
}

#[test]
fn halving_the_step_barely_moves_task_end_values() {
    let p = CogParams::default();
    let sched = default_schedule();
    let coarse = integrate_schedule(&p, &sched, &IntegrationConfig { step: 0.01, dense: false }).unwrap();
    let fine = integrate_schedule(&p, &sched, &IntegrationConfig { step: 0.005, dense: false }).unwrap();
    assert_eq!(coarse.a_end.len(), sched.task_count());
    let worst = coarse
        .a_end
        .iter()
        .zip(&fine.a_end)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-7, "worst change {worst}");
}

#[test]
fn default_parameters_never_clamp() {
    let p = CogParams::default();
    for seed in 0..5 {
        let sched = sample_schedule(&ScheduleGenConfig::default(), seed).unwrap();
        let traj = integrate_schedule(&p, &sched, &dense(0.01)).unwrap();
        assert_eq!(traj.clamp_events, 0, "seed {seed}");
        assert!(traj.a.iter().all(|a| (0.0..=1.0).contains(a)));
        assert!(traj.b.iter().all(|b| (0.0..=p.b_max).contains(b)));
    }
}

#[test]
fn resource_never_rises_while_resting_without_recovery() {
    let p = CogParams {
        k_r: 0.0,
        ..CogParams::default()
    };
    let sched = TaskSchedule::from_durations(&[2.0, 30.0, 1.0, 45.0]).unwrap();
    let traj = integrate_schedule(&p, &sched, &dense(0.01)).unwrap();
    let bounds = sched.boundaries(p.t_start);
    for (lo, hi) in [(bounds[1], bounds[2]), (bounds[3], bounds[4])] {
        let a: Vec<f64> = traj
            .times
            .iter()
            .zip(&traj.a)
            .filter(|(t, _)| **t >= lo - 1e-12 && **t <= hi + 1e-12)
            .map(|(_, a)| *a)
            .collect();
        assert!(a.len() > 100);
        assert!(a.windows(2).all(|w| w[1] <= w[0]));
    }
}
