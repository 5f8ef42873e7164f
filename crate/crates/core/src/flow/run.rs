use serde::{Deserialize, Serialize};

use super::{
    compute_h, enforce_area_constraint, roundness_energy, select_timestep, step_positions, BlowUpKind,
    FlowConfig, FlowError, FlowState,
};
use crate::diagnostics::{self, DiagnosticsRecord, TimeSeries};
use crate::geometry::GeometryCache;
use crate::mesh::{self, MeshMode, TriMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Converged,
    TimeLimit,
    BlowUp(BlowUpKind),
}

impl Termination {
    /// Stable label used in `summary.json`.
    pub fn label(&self) -> String {
        match self {
            Termination::Converged => "Converged".into(),
            Termination::TimeLimit => "TimeLimit".into(),
            Termination::BlowUp(k) => format!("BlowUp({k:?})"),
        }
    }

    pub fn is_blow_up(&self) -> bool {
        matches!(self, Termination::BlowUp(_))
    }
}

#[derive(Debug, Clone)]
pub struct FlowRun {
    pub series: TimeSeries,
    pub final_state: FlowState,
    pub termination: Termination,
    pub steps: usize,
}

/// [`run_flow_with`] without a snapshot observer.
pub fn run_flow(mesh: TriMesh, config: &FlowConfig) -> Result<FlowRun, FlowError> {
    run_flow_with(mesh, config, |_, _| {})
}

/// Runs until convergence (roundness energy below `roundness_tol` times its
/// initial value), `t_max`, or a blow-up. Blow-ups end the run normally with
/// [`Termination::BlowUp`]; only invalid input is an error.
///
/// `on_snapshot` sees every recorded state, e.g. to write meshes.
pub fn run_flow_with(
    mesh: TriMesh,
    config: &FlowConfig,
    mut on_snapshot: impl FnMut(&FlowState, &DiagnosticsRecord),
) -> Result<FlowRun, FlowError> {
    config.validate()?;
    let dimension = mesh.dimension();
    let mut state = FlowState::new(mesh)?;
    let mut series = TimeSeries::new(dimension);
    series.metadata = serde_json::json!({ "config": config, "dimension": dimension });

    let mut scale = 1.0;
    let mut limit = config.blowup_max_a;
    let t_eps = 1e-12 * config.t_max.max(1.0);

    let termination = loop {
        let cache = match GeometryCache::compute(&state.mesh) {
            Ok(c) => c,
            Err(_) => break Termination::BlowUp(BlowUpKind::MeshDegeneracy),
        };
        state.h = compute_h(&cache)?;
        let max_a = cache.second_form_norm.iter().copied().fold(0.0, f64::max);
        let limit = *limit.get_or_insert(1e3 * max_a);
        let energy = roundness_energy(state.mesh.mode(), &cache);

        let verdict = if !(state.h.is_finite() && max_a.is_finite() && energy.is_finite()) {
            Some(Termination::BlowUp(BlowUpKind::NonFinite))
        } else if max_a > limit {
            Some(Termination::BlowUp(BlowUpKind::CurvatureBound))
        } else if state.mesh.mode() == MeshMode::Surface
            && mesh::validate(&state.mesh).min_angle < config.min_angle
        {
            Some(Termination::BlowUp(BlowUpKind::MeshDegeneracy))
        } else if energy < config.roundness_tol * state.initial_roundness {
            Some(Termination::Converged)
        } else if state.t >= config.t_max - t_eps {
            Some(Termination::TimeLimit)
        } else {
            None
        };

        let finite = verdict != Some(Termination::BlowUp(BlowUpKind::NonFinite));
        if finite && (state.step_index % config.snapshot_every == 0 || verdict.is_some()) {
            let record = diagnostics::record_snapshot(&state, &cache, config, scale);
            let ode = diagnostics::ode_terms(state.t, state.h, &cache);
            on_snapshot(&state, &record);
            series.push(record, ode);
            scale = 1.0;
        }
        if let Some(v) = verdict {
            break v;
        }

        let dt = match select_timestep(&state.mesh, &cache, state.h, config) {
            Ok(dt) => dt.min(config.t_max - state.t),
            Err(FlowError::BlowUp(k)) => break Termination::BlowUp(k),
            Err(e) => return Err(e),
        };
        let next = match step_positions(&state.mesh, &cache, state.h, dt, config.stepping) {
            Ok(x) => x,
            Err(FlowError::BlowUp(k)) => break Termination::BlowUp(k),
            Err(e) => return Err(e),
        };
        state.mesh.set_vertices(next);
        state.t += dt;
        state.step_index += 1;
        if config.area_projection {
            scale *= enforce_area_constraint(&mut state);
        }
    };

    Ok(FlowRun {
        steps: state.step_index,
        series,
        final_state: state,
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_icosphere, Vec3};

    #[test]
    fn sphere_hits_time_limit() {
        let m = gen_icosphere(1.0, Vec3::zeros(), 2);
        let cfg = FlowConfig {
            t_max: 0.05,
            ..FlowConfig::default()
        };
        let run = run_flow(m.clone(), &cfg).unwrap();
        assert_eq!(run.termination, Termination::TimeLimit);
        assert!((run.final_state.t - 0.05).abs() < 1e-12);
        let ts = run.series.times();
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*ts.last().unwrap(), run.final_state.t);
        let disp = m
            .vertices()
            .iter()
            .zip(run.final_state.mesh.vertices())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(disp < 1e-3, "{disp}");
    }

    #[test]
    fn tiny_curvature_bound_blows_up_cleanly() {
        let m = crate::mesh::gen_ellipsoid(2.0, 0.5, 0.5, 2);
        let cfg = FlowConfig {
            blowup_max_a: Some(1.0),
            ..FlowConfig::default()
        };
        let run = run_flow(m, &cfg).unwrap();
        assert_eq!(run.termination, Termination::BlowUp(BlowUpKind::CurvatureBound));
        assert_eq!(run.series.records.len(), 1);
        assert_eq!(run.termination.label(), "BlowUp(CurvatureBound)");
    }

    #[test]
    fn invalid_config_is_an_error() {
        let m = gen_icosphere(1.0, Vec3::zeros(), 1);
        let cfg = FlowConfig {
            t_max: -1.0,
            ..FlowConfig::default()
        };
        assert!(matches!(run_flow(m, &cfg), Err(FlowError::InvalidConfig(_))));
    }
}
