//! Running sequences of actions.

use crate::exec::step;
use crate::io::{state_digest, StepRecord};
use crate::model::{Action, AndroidState, Platform, Response};
use crate::validity::{check_validity, ValidityReport};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub initial: AndroidState,
    pub actions: Vec<Action>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub action: Action,
    pub response: Response,
    pub digest: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TraceReport {
    pub steps: Vec<TraceStep>,
    /// `states[i]` is the state after `steps[i]`.
    pub states: Vec<AndroidState>,
}

impl TraceReport {
    pub fn responses(&self) -> Vec<Response> {
        self.steps.iter().map(|s| s.response).collect()
    }

    pub fn records(&self) -> Vec<StepRecord> {
        self.steps
            .iter()
            .enumerate()
            .map(|(index, s)| StepRecord {
                index,
                action: s.action.clone(),
                response: s.response,
                digest: s.digest.clone(),
            })
            .collect()
    }
}

/// Runs every action in order. Error responses leave the state unchanged
/// and execution continues. Refuses an invalid initial state.
pub fn run_trace(t: &Trace, platform: &Platform) -> Result<TraceReport, ValidityReport> {
    let report = check_validity(&t.initial, platform);
    if !report.is_valid() {
        return Err(report);
    }
    Ok(run_unchecked(&t.initial, &t.actions, platform, false))
}

/// Runs `actions` from `initial` without checking it first, optionally
/// stopping after the first error response.
pub fn run_unchecked(
    initial: &AndroidState,
    actions: &[Action],
    platform: &Platform,
    stop_on_error: bool,
) -> TraceReport {
    let mut report = TraceReport::default();
    let mut current = initial.clone();
    for a in actions {
        let r = step(&current, a, platform);
        report.steps.push(TraceStep {
            action: a.clone(),
            response: r.resp,
            digest: state_digest(&r.st),
        });
        report.states.push(r.st.clone());
        current = r.st;
        if stop_on_error && !r.resp.is_ok() {
            break;
        }
    }
    report
}

/// The state after the last step, or `fallback` when nothing ran.
pub fn last_state(report: &TraceReport, fallback: &AndroidState) -> AndroidState {
    report.states.last().cloned().unwrap_or_else(|| fallback.clone())
}

/// Final state of running `actions` from `initial`.
pub fn final_state(initial: &AndroidState, actions: &[Action], platform: &Platform) -> AndroidState {
    actions
        .iter()
        .fold(initial.clone(), |s, a| step(&s, a, platform).st)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ErrorCode, Manifest};

    fn install(app: &str) -> Action {
        Action::Install {
            app: app.into(),
            manifest: Manifest::default(),
            cert: "k".into(),
            resources: vec![],
        }
    }

    #[test]
    fn empty_trace_has_no_states() {
        let t = Trace {
            initial: AndroidState::empty(),
            actions: vec![],
        };
        let r = run_trace(&t, &Platform::default()).unwrap();
        assert!(r.states.is_empty());
        assert_eq!(last_state(&r, &t.initial), t.initial);
    }

    #[test]
    fn first_error_keeps_initial_state() {
        let t = Trace {
            initial: AndroidState::empty(),
            actions: vec![Action::Uninstall { app: "a".into() }, install("a")],
        };
        let r = run_trace(&t, &Platform::default()).unwrap();
        assert_eq!(r.states[0], t.initial);
        assert_eq!(r.steps[0].response, Response::Error(ErrorCode::NoSuchApp));
        assert!(r.steps[1].response.is_ok());
        assert_eq!(last_state(&r, &t.initial), r.states[1]);
    }

    #[test]
    fn invalid_initial_is_rejected() {
        let mut s = AndroidState::empty();
        s.installed_apps.insert("ghost".into());
        let t = Trace {
            initial: s,
            actions: vec![],
        };
        assert!(run_trace(&t, &Platform::default()).is_err());
    }

    #[test]
    fn stop_on_error_truncates() {
        let actions = vec![install("a"), install("a"), install("b")];
        let r = run_unchecked(&AndroidState::empty(), &actions, &Platform::default(), true);
        assert_eq!(r.steps.len(), 2);
        let full = run_unchecked(&AndroidState::empty(), &actions, &Platform::default(), false);
        assert_eq!(full.steps.len(), 3);
        assert_eq!(final_state(&AndroidState::empty(), &actions, &Platform::default()), full.states[2]);
    }
}
