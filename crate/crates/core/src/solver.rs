//! Staggered (alternating-minimization) solution of the coupled
//! displacement/damage problem and the quasi-static time loop with
//! prescribed-displacement loading.

use crate::bounds::solve_box_constrained;
use crate::error::{Error, Result};
use crate::fem2d::{
    assemble_damage, assemble_internal_force, probe_stress, solve_displacement, total_energy,
    EnergyBreakdown, MaterialMap,
};
use crate::materials::{equivalent_elastic_constants, InterlayerModel};
use crate::mesh::{GlassSubmesh, Mesh2D};
use crate::output::ProbeRecord;
use crate::phasefield::PhaseFieldFormulation;
use serde::{Deserialize, Serialize};

/// Convergence control of the staggered loop and its inner solves.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct StaggeredConfig {
    /// Relative total-energy tolerance between staggered iterations.
    pub energy_tolerance: f64,
    /// Relative residual tolerance of the displacement Newton loop.
    pub newton_tolerance: f64,
    pub max_staggered_iters: usize,
    pub max_newton_iters: usize,
    /// Relative KKT tolerance of the bound-constrained damage solve.
    pub kkt_tolerance: f64,
}

impl Default for StaggeredConfig {
    fn default() -> Self {
        StaggeredConfig {
            energy_tolerance: 1e-6,
            newton_tolerance: 1e-11,
            max_staggered_iters: 500,
            max_newton_iters: 50,
            kkt_tolerance: 1e-8,
        }
    }
}

impl StaggeredConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.energy_tolerance > 0.0) {
            errs.push("energy_tolerance must be > 0".to_string());
        }
        if !(self.newton_tolerance > 0.0) {
            errs.push("newton_tolerance must be > 0".to_string());
        }
        if !(self.kkt_tolerance > 0.0) {
            errs.push("kkt_tolerance must be > 0".to_string());
        }
        if self.max_staggered_iters == 0 {
            errs.push("max_staggered_iters must be >= 1".to_string());
        }
        if self.max_newton_iters == 0 {
            errs.push("max_newton_iters must be >= 1".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

/// The discretized 2D problem: geometry plus materials and formulation.
pub struct Model2D {
    pub mesh: Mesh2D,
    pub sub: GlassSubmesh,
    pub mats: MaterialMap,
    pub formulation: PhaseFieldFormulation,
    /// Pre-damaged glass-submesh nodes (initial cracks); becomes the
    /// starting field and irreversibility floor of a run.
    pub initial_damage: Option<Vec<f64>>,
}

/// Dirichlet loading: fixed constraints plus displacement-driven dofs that
/// ramp with the prescribed displacement w_bar (downward, hence -w_bar).
#[derive(Debug, Clone)]
pub struct LoadingPlan {
    pub fixed: Vec<(usize, f64)>,
    /// Dofs prescribed to -w_bar (transverse loading points).
    pub driven: Vec<usize>,
    /// Reported reaction = -(sum of internal forces at `driven`) * scale;
    /// the scale carries the out-of-plane width and any symmetry factor.
    pub reaction_scale: f64,
}

impl LoadingPlan {
    pub fn constraints(&self, w_bar: f64) -> Vec<(usize, f64)> {
        let mut c = self.fixed.clone();
        c.extend(self.driven.iter().map(|&d| (d, -w_bar)));
        c
    }
}

/// Evolving fields of one simulation.
#[derive(Debug, Clone)]
pub struct SimulationState {
    pub t: f64,
    pub w_bar: f64,
    pub u: Vec<f64>,
    /// Damage on glass-submesh nodes.
    pub d: Vec<f64>,
    pub energy: EnergyBreakdown,
}

impl SimulationState {
    pub fn new(model: &Model2D) -> Self {
        SimulationState {
            t: 0.0,
            w_bar: 0.0,
            u: vec![0.0; 2 * model.mesh.nodes.len()],
            d: vec![0.0; model.sub.node_map.len()],
            energy: EnergyBreakdown::default(),
        }
    }
}

/// Convergence record of one staggered solve at fixed pseudo-time.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub staggered_iters: usize,
    pub xi: f64,
    /// Total energy after each staggered iteration.
    pub energy_history: Vec<f64>,
    pub newton_iters_last: usize,
}

/// Alternating minimization at the current (t, w_bar): displacement solve,
/// bound-constrained damage solve, repeat until the relative total-energy
/// change drops below tolerance. The damage at entry is the
/// irreversibility lower bound for the whole step.
pub fn staggered_step(
    model: &Model2D,
    plan: &LoadingPlan,
    state: &mut SimulationState,
    cfg: &StaggeredConfig,
) -> Result<StepReport> {
    let constraints = plan.constraints(state.w_bar);
    let d_lower = state.d.clone();
    let mut e_prev = f64::NAN;
    let mut history = Vec::new();
    #[allow(unused_assignments)]
    let mut newton_last = 0;
    for i in 0..cfg.max_staggered_iters {
        let sol = solve_displacement(
            &model.mesh,
            &model.sub,
            &model.mats,
            &model.formulation,
            &state.d,
            &constraints,
            &state.u,
            cfg.newton_tolerance,
            cfg.max_newton_iters,
        )?;
        state.u = sol.u;
        newton_last = sol.newton_iters;

        let sys = assemble_damage(
            &model.mesh,
            &model.sub,
            &model.mats,
            &model.formulation,
            &state.u,
            &d_lower,
        )?;
        let dsol =
            solve_box_constrained(&sys.matrix, &sys.rhs, &sys.lower, &sys.upper, cfg.kkt_tolerance)?;
        state.d = dsol.x;

        let energy = total_energy(
            &model.mesh,
            &model.sub,
            &model.mats,
            &model.formulation,
            &state.u,
            &state.d,
        )?;
        let e = energy.total();
        if !e.is_finite() {
            return Err(Error::Solver(format!("non-finite energy at t = {}", state.t)));
        }
        state.energy = energy;
        history.push(e);
        // relative energy criterion, absolute near zero energy
        let xi = if e.abs() < 1e-20 {
            (e - e_prev).abs()
        } else {
            ((e - e_prev) / e).abs()
        };
        if i > 0 && xi <= cfg.energy_tolerance {
            return Ok(StepReport {
                staggered_iters: i + 1,
                xi,
                energy_history: history,
                newton_iters_last: newton_last,
            });
        }
        e_prev = e;
    }
    Err(Error::Solver(format!(
        "staggered loop did not converge in {} iterations at t = {} (last energies {:?})",
        cfg.max_staggered_iters,
        state.t,
        &history[history.len().saturating_sub(3)..]
    )))
}

/// Piecewise-constant time-increment schedule: segments of (until, dt).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Schedule(pub Vec<(f64, f64)>);

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.0.is_empty() {
            errs.push("schedule must have at least one segment".to_string());
        }
        let mut prev_until = 0.0;
        for (i, &(until, dt)) in self.0.iter().enumerate() {
            if !(dt > 0.0) {
                errs.push(format!("schedule segment {i}: increment must be > 0"));
            }
            if !(until > prev_until) {
                errs.push(format!(
                    "schedule segment {i}: end time {until} must exceed {prev_until}"
                ));
            }
            prev_until = until;
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }
}

/// Elements whose stress is recorded each accepted step.
#[derive(Debug, Clone, Copy)]
pub struct ProbeElements {
    /// Bottom-fiber element at midspan (largest tensile stress).
    pub mid_bottom: usize,
    /// Triangle pairs of the two bottom cells in the midspan column,
    /// ordered [bottom cell, bottom cell, cell above, cell above]. When
    /// present, the recorded midspan stress is linearly extrapolated to
    /// the bottom surface from the two cell-average stresses; the
    /// triangle-constant values oscillate around the bending profile and
    /// only their cell means lie on it.
    pub mid_stack: Option<[usize; 4]>,
    /// Top-fiber element a quarter span from midspan, if registered.
    pub quarter_top: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    ScheduleComplete,
    Localization,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RunOptions {
    /// Loading-head rate (m/s); w_bar = rate * t.
    pub rate: f64,
    pub temperature: f64,
    /// Reaction drop below this fraction of the running peak terminates
    /// the run as localization.
    pub localization_drop: f64,
}

pub struct RunResult {
    pub records: Vec<ProbeRecord>,
    pub termination: Termination,
    pub state: SimulationState,
    pub peak_reaction: f64,
    /// Midspan bottom-fiber stress at the peak-reaction step.
    pub failure_stress: f64,
    /// One formatted line per accepted step:
    /// `t, w_bar, staggered_iters, xi, R, sigma_probe, max_d`.
    pub log: Vec<String>,
}

/// Advances the prescribed displacement along the schedule, refreshing the
/// interlayer equivalent modulus each step for laminates, until the
/// schedule ends or the reaction collapses (localization).
pub fn run_quasistatic(
    model: &mut Model2D,
    plan: &LoadingPlan,
    probes: &ProbeElements,
    schedule: &Schedule,
    opts: &RunOptions,
    interlayer: Option<&InterlayerModel>,
    cfg: &StaggeredConfig,
    mut snapshot: Option<&mut dyn FnMut(usize, &Model2D, &SimulationState) -> Result<()>>,
) -> Result<RunResult> {
    schedule.validate()?;
    cfg.validate()?;
    if !(opts.rate > 0.0) {
        return Err(Error::config("loading rate must be > 0"));
    }
    if !(0.0..=1.0).contains(&opts.localization_drop) {
        return Err(Error::config(
            "localization_drop must be a fraction in [0, 1]",
        ));
    }

    let mut state = SimulationState::new(model);
    if let Some(d0) = &model.initial_damage {
        if d0.len() != state.d.len() {
            return Err(Error::config(
                "initial damage length does not match the glass submesh",
            ));
        }
        state.d.copy_from_slice(d0);
    }
    let mut records = Vec::new();
    let mut log = Vec::new();
    let mut peak_reaction = 0.0f64;
    let mut failure_stress = 0.0f64;
    let mut termination = Termination::ScheduleComplete;

    'time: for &(until, dt) in &schedule.0 {
        while state.t < until - 1e-12 {
            let t = (state.t + dt).min(until);
            state.t = t;
            state.w_bar = opts.rate * t;
            if let Some(model_int) = interlayer {
                let (e, nu) = equivalent_elastic_constants(model_int, t, opts.temperature)?;
                model.mats.interlayer = Some((e, nu));
            }
            let report = staggered_step(model, plan, &mut state, cfg)?;

            let f_int = assemble_internal_force(
                &model.mesh,
                &model.sub,
                &model.mats,
                &model.formulation,
                &state.d,
                &state.u,
            )?;
            let reaction =
                -plan.driven.iter().map(|&d| f_int[d]).sum::<f64>() * plan.reaction_scale;
            let sigma_mid = {
                let s1 = probe_stress(
                    &model.mesh,
                    &model.sub,
                    &model.mats,
                    &model.formulation,
                    &state.u,
                    &state.d,
                    probes.mid_bottom,
                )?
                .sig_xx;
                match probes.mid_stack {
                    Some(stack) => {
                        let mut s = [0.0f64; 4];
                        for (v, &e) in s.iter_mut().zip(&stack) {
                            *v = probe_stress(
                                &model.mesh,
                                &model.sub,
                                &model.mats,
                                &model.formulation,
                                &state.u,
                                &state.d,
                                e,
                            )?
                            .sig_xx;
                        }
                        let cell_lo = 0.5 * (s[0] + s[1]);
                        let cell_hi = 0.5 * (s[2] + s[3]);
                        // cell centers sit half a cell and 1.5 cells above
                        // the surface
                        1.5 * cell_lo - 0.5 * cell_hi
                    }
                    None => s1,
                }
            };
            let sigma_quarter = match probes.quarter_top {
                Some(e) => {
                    probe_stress(
                        &model.mesh,
                        &model.sub,
                        &model.mats,
                        &model.formulation,
                        &state.u,
                        &state.d,
                        e,
                    )?
                    .sig_xx
                }
                None => f64::NAN,
            };
            let max_d = state.d.iter().cloned().fold(0.0, f64::max);

            records.push(ProbeRecord {
                t_s: t,
                w_bar_m: state.w_bar,
                r_n: reaction,
                sigma_mid_pa: sigma_mid,
                sigma_quarter_top_pa: sigma_quarter,
                max_d,
                staggered_iters: report.staggered_iters,
            });
            log.push(format!(
                "t={t:.6} w_bar={:.6e} staggered_iters={} xi={:.3e} R={:.6e} sigma_probe={:.6e} max_d={:.6}",
                state.w_bar, report.staggered_iters, report.xi, reaction, sigma_mid, max_d
            ));

            if let Some(cb) = snapshot.as_deref_mut() {
                cb(records.len() - 1, model, &state)?;
            }
            if reaction > peak_reaction {
                peak_reaction = reaction;
                failure_stress = sigma_mid;
            }
            if peak_reaction > 0.0 && reaction < (1.0 - opts.localization_drop) * peak_reaction {
                termination = Termination::Localization;
                break 'time;
            }
        }
    }

    Ok(RunResult {
        records,
        termination,
        state,
        peak_reaction,
        failure_stress,
        log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::{MaterialGlass, StrengthField};
    use crate::mesh::{build_section_mesh, glass_submesh, LayerTag, RefinementSpec, Symmetry};
    use crate::phasefield::{
        EnergySplit, FormulationKind, SolveScheme,
    };

    /// Small half-model cantilever-like bend strip for solver unit tests:
    /// clamped-ish at x = 0 via symmetry, transverse load at the far end.
    fn tiny_model(kind: FormulationKind, scheme: SolveScheme) -> (Model2D, LoadingPlan, ProbeElements) {
        let length = 0.06;
        let thickness = 0.01;
        let mesh = build_section_mesh(
            length,
            &[(thickness, LayerTag::GlassMono)],
            &RefinementSpec::uniform(2.5e-3),
            Symmetry::Half,
            &[],
        )
        .unwrap();
        let sub = glass_submesh(&mesh).unwrap();
        let glass = MaterialGlass::annealed(231.4, 3e-3);
        let mats = MaterialMap {
            glass,
            strength: StrengthField::uniform(45e6),
            interlayer: None,
        };
        let formulation = PhaseFieldFormulation::new(kind, EnergySplit::Spectral, scheme);

        // symmetry plane at x = length: u_x = 0 for all nodes there;
        // support at x = 0 bottom: u_y = 0; drive the top node at x = length.
        let mut fixed = Vec::new();
        for (n, &(x, _)) in mesh.nodes.iter().enumerate() {
            if (x - length).abs() < 1e-12 {
                fixed.push((2 * n, 0.0));
            }
        }
        let support = mesh.node_at(0.0, 0.0).unwrap();
        fixed.push((2 * support + 1, 0.0));
        let load_node = mesh.node_at(length, thickness).unwrap();
        let probes = ProbeElements {
            mid_bottom: mesh.bottom_element_at(length - 1e-9).unwrap(),
            mid_stack: None,
            quarter_top: None,
        };
        let plan = LoadingPlan {
            fixed,
            driven: vec![2 * load_node + 1],
            reaction_scale: 2.0 * 0.36,
        };
        (
            Model2D { mesh, sub, mats, formulation, initial_damage: None },
            plan,
            probes,
        )
    }

    #[test]
    fn zero_load_converges_immediately_with_no_damage() {
        let (model, plan, _) = tiny_model(FormulationKind::PfP, SolveScheme::Hybrid);
        let mut state = SimulationState::new(&model);
        let report = staggered_step(&model, &plan, &mut state, &StaggeredConfig::default()).unwrap();
        assert_eq!(report.staggered_iters, 2); // two sweeps to confirm xi = 0
        assert!(state.d.iter().all(|&d| d == 0.0));
        assert!(state.u.iter().all(|&u| u.abs() < 1e-16));
        assert_eq!(state.energy.total(), 0.0);
    }

    #[test]
    fn elastic_range_matches_direct_linear_solve() {
        let (model, plan, _) = tiny_model(FormulationKind::PfP, SolveScheme::Hybrid);
        let mut state = SimulationState::new(&model);
        state.w_bar = 1e-7; // far below the damage threshold
        staggered_step(&model, &plan, &mut state, &StaggeredConfig::default()).unwrap();
        assert!(state.d.iter().all(|&d| d == 0.0), "PF-P elastic phase violated");

        // direct solve with the undamaged stiffness
        let direct = crate::fem2d::solve_displacement(
            &model.mesh,
            &model.sub,
            &model.mats,
            &model.formulation,
            &vec![0.0; model.sub.node_map.len()],
            &plan.constraints(state.w_bar),
            &vec![0.0; state.u.len()],
            1e-11,
            50,
        )
        .unwrap();
        let scale = direct.u.iter().map(|v| v.abs()).fold(1e-300, f64::max);
        for (a, b) in state.u.iter().zip(&direct.u) {
            assert!((a - b).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn staggered_energy_monotone_nonincreasing_anisotropic() {
        let (model, plan, _) = tiny_model(FormulationKind::PfB, SolveScheme::Anisotropic);
        let mut state = SimulationState::new(&model);
        // load high enough to grow damage so the loop actually alternates
        state.w_bar = 3e-4;
        let report = staggered_step(&model, &plan, &mut state, &StaggeredConfig::default()).unwrap();
        assert!(state.d.iter().cloned().fold(0.0, f64::max) > 1e-3, "no damage grown");
        for w in report.energy_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "energy increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn irreversibility_and_box_constraint_across_steps() {
        let (mut model, plan, probes) = tiny_model(FormulationKind::PfB, SolveScheme::Hybrid);
        let schedule = Schedule(vec![(6.0, 2.0), (13.0, 3.5)]);
        let opts = RunOptions {
            rate: 1e-5,
            temperature: 25.0,
            localization_drop: 0.9,
        };
        let mut prev_d: Option<Vec<f64>> = None;
        // re-run step by step to observe intermediate fields
        let mut state = SimulationState::new(&model);
        let mut increments = Vec::new();
        let mut t_prev = 0.0;
        for &(until, dt) in &schedule.0 {
            while state.t < until - 1e-12 {
                let t = (state.t + dt).min(until);
                increments.push(t - t_prev);
                t_prev = t;
                state.t = t;
                state.w_bar = opts.rate * t;
                staggered_step(&model, &plan, &mut state, &StaggeredConfig::default()).unwrap();
                for &d in &state.d {
                    assert!((0.0..=1.0).contains(&d));
                }
                if let Some(prev) = &prev_d {
                    for (now, before) in state.d.iter().zip(prev) {
                        assert!(now >= before, "irreversibility violated");
                    }
                }
                prev_d = Some(state.d.clone());
            }
        }
        // schedule honored: 3 steps of 2.0 then 2 of 3.5
        assert_eq!(increments, vec![2.0, 2.0, 2.0, 3.5, 3.5]);

        // the driver reproduces the same trajectory
        let result = run_quasistatic(
            &mut model,
            &plan,
            &probes,
            &schedule,
            &opts,
            None,
            &StaggeredConfig::default(),
            None,
        )
        .unwrap();
        assert_eq!(result.records.len(), 5);
        assert_eq!(result.termination, Termination::ScheduleComplete);
        let times: Vec<f64> = result.records.iter().map(|r| r.t_s).collect();
        assert_eq!(times, vec![2.0, 4.0, 6.0, 9.5, 13.0]);
        for r in &result.records {
            assert!((r.w_bar_m - opts.rate * r.t_s).abs() < 1e-18);
        }
    }

    #[test]
    fn schedule_validation_rejects_bad_segments() {
        assert!(Schedule(vec![]).validate().is_err());
        assert!(Schedule(vec![(1.0, 0.0)]).validate().is_err());
        assert!(Schedule(vec![(1.0, 0.1), (0.5, 0.1)]).validate().is_err());
        assert!(Schedule(vec![(1.0, 0.1), (2.0, 0.01)]).validate().is_ok());
    }

    #[test]
    fn config_validation_lists_every_violation() {
        let bad = StaggeredConfig {
            energy_tolerance: -1.0,
            newton_tolerance: 0.0,
            max_staggered_iters: 0,
            max_newton_iters: 0,
            kkt_tolerance: -2.0,
        };
        match bad.validate() {
            Err(Error::Config(errs)) => assert_eq!(errs.len(), 5),
            other => panic!("expected config error, got {other:?}"),
        }
    }
}

