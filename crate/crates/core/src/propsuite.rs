//! The security properties of the model as runnable checks.
//!
//! Universally quantified properties are checked over generated inputs;
//! existential ones are exhibited by the shipped fixtures.

use std::collections::BTreeSet;

use rand::Rng;

use crate::axiomatic;
use crate::exec::step;
use crate::fixtures;
use crate::genfuzz::{
    self, gen_action, gen_constrained_trace, gen_valid_state_with, rng_from_seed, shrink_actions,
    ConstrainedTrace, TraceGoal,
};
use crate::io::{emit_trace, parse_trace, TraceFile};
use crate::model::{
    Action, AndroidState, AppId, CompId, InstanceId, OpTy, Perm, PermId, PermLevel, Platform, Response,
    SysCall, Uri,
};
use crate::queries as q;
use crate::traces::{final_state, last_state, run_trace, Trace};
use crate::validity::check_validity;

// ----------------------------------------------------------------- fixtures

const IMPLICIT_GRANT_TEXT: &str = include_str!("../fixtures/implicit_group_grant.trace.json");
const START_REVOCABLE_TEXT: &str = include_str!("../fixtures/start_right_revocable.trace.json");
const DELEGATION_TEXT: &str = include_str!("../fixtures/delegation_survives_revoke.trace.json");
const INSTALL_GUARDS_TEXT: &str = include_str!("../fixtures/install_guards.trace.json");

/// The shipped fixtures, by file name.
pub fn shipped_fixtures() -> Vec<(&'static str, TraceFile)> {
    [
        (fixtures::IMPLICIT_GRANT, IMPLICIT_GRANT_TEXT),
        (fixtures::START_REVOCABLE, START_REVOCABLE_TEXT),
        (fixtures::DELEGATION_SURVIVES, DELEGATION_TEXT),
        (fixtures::INSTALL_GUARDS, INSTALL_GUARDS_TEXT),
    ]
    .into_iter()
    .map(|(name, text)| (name, parse_trace(text).expect("shipped fixture parses")))
    .collect()
}

fn fixture(text: &str) -> TraceFile {
    parse_trace(text).expect("shipped fixture parses")
}

fn inline_initial(t: &TraceFile) -> AndroidState {
    t.initial_state(std::path::Path::new(".")).expect("fixtures carry inline states")
}

// -------------------------------------------------------------- property 1

/// A grant of a grouped permission never succeeds.
pub fn check_grouped_grant_refused(s: &AndroidState, perm: &Perm, app: &AppId, platform: &Platform) -> bool {
    let a = Action::Grant {
        perm: perm.id.clone(),
        app: app.clone(),
    };
    !step(s, &a, platform).resp.is_ok()
}

// -------------------------------------------------------------- property 2

#[derive(Clone, Debug)]
pub struct ImplicitGrantWitness {
    pub state: AndroidState,
    pub perm: Perm,
    pub app: AppId,
    pub platform: Platform,
}

/// A valid state where an app holds a dangerous permission that was never
/// individually granted to it and that it does not define.
pub fn implicit_grant_witness() -> ImplicitGrantWitness {
    let t = fixture(IMPLICIT_GRANT_TEXT);
    let state = final_state(&inline_initial(&t), &t.actions, &t.platform);
    let perm = t.platform.builtin(&"WRITE_CONTACTS".into()).cloned().expect("built-in");
    ImplicitGrantWitness {
        state,
        perm,
        app: "contacts.sync".into(),
        platform: t.platform,
    }
}

pub fn implicit_grant_holds(w: &ImplicitGrantWitness) -> bool {
    let s = &w.state;
    check_validity(s, &w.platform).is_valid()
        && w.perm.level == PermLevel::Dangerous
        && !q::get_granted_perms_for_app(&w.app, s).is_some_and(|g| g.contains(&w.perm.id))
        && !q::get_def_perms_for_app(&w.app, s).contains(&w.perm)
        && q::app_has_permission(&w.app, &w.perm, s)
}

// -------------------------------------------------------------- property 3

/// Hypotheses: `ic` runs `c`, and every permission `sac` requires resolves
/// to a normal permission listed in the manifest of `c`'s app.
pub fn normal_call_hypotheses(s: &AndroidState, sac: &SysCall, c: &CompId, ic: InstanceId, platform: &Platform) -> bool {
    let Some(required) = platform.syscalls.get(sac) else {
        return false;
    };
    let Some(app) = q::get_app_from_cmp(c, s) else {
        return false;
    };
    let Some(m) = q::get_manifest_for_app(app, s) else {
        return false;
    };
    check_validity(s, platform).is_valid()
        && s.running.get(&ic) == Some(c)
        && required.iter().all(|pid| {
            q::resolve_perm(pid, s, platform).is_some_and(|p| p.level == PermLevel::Normal)
                && m.used_perms.contains(pid)
        })
}

/// The call succeeds and leaves the state unchanged.
pub fn check_normal_call(s: &AndroidState, sac: &SysCall, ic: InstanceId, platform: &Platform) -> bool {
    let r = step(s, &Action::Call { ic, sac: sac.clone() }, platform);
    r.resp.is_ok() && &r.st == s
}

/// A generated configuration satisfying the property 3 hypotheses: a
/// state, a platform extended with a fresh system call requiring normal
/// permissions the caller lists, and the calling instance.
#[derive(Clone, Debug)]
pub struct NormalCallConfig {
    pub state: AndroidState,
    pub platform: Platform,
    pub sac: SysCall,
    pub component: CompId,
    pub ic: InstanceId,
}

pub fn gen_normal_call_config(seed: u64, base: &Platform) -> Option<NormalCallConfig> {
    let mut rng = rng_from_seed(seed);
    for _ in 0..16 {
        let size = rng.gen_range(1..=5);
        let state = gen_valid_state_with(&mut rng, size, base);
        let running: Vec<(InstanceId, CompId)> = state.running.iter().map(|(k, v)| (*k, v.clone())).collect();
        if running.is_empty() {
            continue;
        }
        let (ic, component) = running[rng.gen_range(0..running.len())].clone();
        let app = q::get_app_from_cmp(&component, &state)?.clone();
        let m = q::get_manifest_for_app(&app, &state)?;
        let normal: Vec<PermId> = m
            .used_perms
            .iter()
            .filter(|pid| q::resolve_perm(pid, &state, base).is_some_and(|p| p.level == PermLevel::Normal))
            .cloned()
            .collect();
        let required: BTreeSet<PermId> = normal.into_iter().filter(|_| rng.gen_bool(0.7)).collect();
        let sac = SysCall::from(format!("normalCall{}", rng.gen_range(0..1000)));
        let mut platform = base.clone();
        platform.syscalls.insert(sac.clone(), required);
        return Some(NormalCallConfig {
            state,
            platform,
            sac,
            component,
            ic,
        });
    }
    None
}

// ------------------------------------------------------- properties 4 and 5

/// Hypotheses of the explicit-grant property on a constrained trace.
pub fn explicit_grant_premises(t: &ConstrainedTrace, platform: &Platform) -> bool {
    let last = final_state(&t.initial, &t.actions, platform);
    check_validity(&t.initial, platform).is_valid()
        && t.initial.installed_apps.contains(&t.app)
        && t.perm.level == PermLevel::Dangerous
        && !t.perm.is_grouped()
        && q::app_has_permission(&t.app, &t.perm, &last)
        && !q::app_has_permission(&t.app, &t.perm, &t.initial)
        && !t.actions.contains(&Action::Uninstall { app: t.app.clone() })
}

/// Conclusion: the trace contains the explicit grant.
pub fn check_explicit_grant(t: &ConstrainedTrace) -> bool {
    t.actions.contains(&Action::Grant {
        perm: t.perm.id.clone(),
        app: t.app.clone(),
    })
}

fn revoke_of(t: &ConstrainedTrace) -> Action {
    Action::Revoke {
        perm: t.perm.id.clone(),
        app: t.app.clone(),
    }
}

/// Hypotheses of the revoked-stays-revoked property.
pub fn revoke_sticks_premises(t: &ConstrainedTrace, platform: &Platform) -> bool {
    let r = step(&t.initial, &revoke_of(t), platform);
    check_validity(&t.initial, platform).is_valid()
        && t.perm.level == PermLevel::Dangerous
        && !t.perm.is_grouped()
        && !q::get_def_perms_for_app(&t.app, &t.initial).contains(&t.perm)
        && r.resp.is_ok()
        && !t.actions.contains(&Action::Uninstall { app: t.app.clone() })
        && !t.actions.contains(&Action::Grant {
            perm: t.perm.id.clone(),
            app: t.app.clone(),
        })
}

/// Conclusion: after the revoke and the trace, the app lacks the permission.
pub fn check_revoke_sticks(t: &ConstrainedTrace, platform: &Platform) -> bool {
    let snd = step(&t.initial, &revoke_of(t), platform).st;
    let last = final_state(&snd, &t.actions, platform);
    !q::app_has_permission(&t.app, &t.perm, &last)
}

/// Shrinks a counterexample to the smallest action list that still meets
/// the hypotheses and violates the conclusion.
pub fn shrink_counterexample(t: &ConstrainedTrace, platform: &Platform) -> ConstrainedTrace {
    let still_fails = |actions: &[Action]| {
        let c = ConstrainedTrace {
            actions: actions.to_vec(),
            ..t.clone()
        };
        match t.goal {
            TraceGoal::ExplicitGrant => explicit_grant_premises(&c, platform) && !check_explicit_grant(&c),
            TraceGoal::RevokedStaysRevoked => revoke_sticks_premises(&c, platform) && !check_revoke_sticks(&c, platform),
        }
    };
    ConstrainedTrace {
        actions: shrink_actions(&t.actions, still_fails),
        ..t.clone()
    }
}

/// The replayable trace file of a constrained trace. For the
/// revoked-stays-revoked goal the revoke is the first action.
pub fn constrained_trace_file(t: &ConstrainedTrace, platform: &Platform) -> TraceFile {
    let mut actions = t.actions.clone();
    if t.goal == TraceGoal::RevokedStaysRevoked {
        actions.insert(0, revoke_of(t));
    }
    TraceFile::new(Some(t.initial.clone()), platform.clone(), actions)
}

// -------------------------------------------------------------- property 6

#[derive(Clone, Debug)]
pub struct StartRevocableWitness {
    pub initial: AndroidState,
    pub actions: Vec<Action>,
    pub caller: CompId,
    pub callee: CompId,
    pub caller_app: AppId,
    pub callee_app: AppId,
    pub perm: Perm,
    pub platform: Platform,
}

/// A valid state where a component may start another app's activity, and
/// an uninstall-free action list after which it no longer may.
pub fn start_revocable_witness() -> StartRevocableWitness {
    let t = fixture(START_REVOCABLE_TEXT);
    let perm = t.platform.builtin(&"CAMERA".into()).cloned().expect("built-in");
    StartRevocableWitness {
        initial: inline_initial(&t),
        actions: t.actions,
        caller: "mail.main".into(),
        callee: "camera.capture".into(),
        caller_app: "mail".into(),
        callee_app: "camera".into(),
        perm,
        platform: t.platform,
    }
}

pub fn start_revocable_holds(w: &StartRevocableWitness) -> bool {
    let s0 = &w.initial;
    let platform = &w.platform;
    let (Some((_, caller)), Some((_, callee))) = (q::find_component(&w.caller, s0), q::find_component(&w.callee, s0))
    else {
        return false;
    };
    let Ok(report) = run_trace(
        &Trace {
            initial: s0.clone(),
            actions: w.actions.clone(),
        },
        platform,
    ) else {
        return false;
    };
    let last = last_state(&report, s0);
    let all_valid = report.states.iter().all(|s| check_validity(s, platform).is_valid());
    let no_uninstall = !w.actions.iter().any(|a| {
        matches!(a, Action::Uninstall { app } if *app == w.caller_app || *app == w.callee_app)
    });
    w.perm.level == PermLevel::Dangerous
        && !w.perm.is_grouped()
        && w.caller_app != w.callee_app
        && !q::get_def_perms_for_app(&w.caller_app, s0).contains(&w.perm)
        && q::in_app(&w.caller, &w.caller_app, s0)
        && q::in_app(&w.callee, &w.callee_app, s0)
        && q::cmp_protected_by_perm(callee) == Some(&w.perm.id)
        && q::can_start(caller, callee, s0, platform)
        && no_uninstall
        && all_valid
        && !q::can_start(caller, callee, &last, platform)
}

// -------------------------------------------------------------- property 7

#[derive(Clone, Debug)]
pub struct DelegationFixture {
    pub state: AndroidState,
    pub perm: PermId,
    pub app: AppId,
    pub other_app: AppId,
    pub ic: InstanceId,
    pub other_ic: InstanceId,
    pub provider: CompId,
    pub uri: Uri,
    pub platform: Platform,
}

pub fn delegation_fixture() -> DelegationFixture {
    let t = fixture(DELEGATION_TEXT);
    DelegationFixture {
        state: inline_initial(&t),
        perm: fixtures::PHOTO_PERM.into(),
        app: "gallery".into(),
        other_app: "editor".into(),
        ic: InstanceId(0),
        other_ic: InstanceId(1),
        provider: fixtures::PHOTO_PROVIDER.into(),
        uri: fixtures::PHOTO_URI.into(),
        platform: t.platform,
    }
}

impl DelegationFixture {
    /// Grant, delegate to the other app, revoke.
    pub fn actions(&self) -> Vec<Action> {
        vec![
            Action::Grant {
                perm: self.perm.clone(),
                app: self.app.clone(),
            },
            Action::GrantP {
                ic: self.ic,
                cp: self.provider.clone(),
                app: self.other_app.clone(),
                uri: self.uri.clone(),
                op: OpTy::Read,
            },
            Action::Revoke {
                perm: self.perm.clone(),
                app: self.app.clone(),
            },
        ]
    }

    fn read_by(&self, ic: InstanceId) -> Action {
        Action::Read {
            ic,
            cp: self.provider.clone(),
            uri: self.uri.clone(),
        }
    }

    /// Hypotheses on the fixture's initial state.
    pub fn hypotheses_hold(&self) -> bool {
        let s = &self.state;
        let platform = &self.platform;
        let Some((_, cp)) = q::find_provider(&self.provider, s) else {
            return false;
        };
        let runs = |ic: InstanceId, app: &AppId| {
            s.running.get(&ic).is_some_and(|c| q::get_app_from_cmp(c, s) == Some(app))
        };
        check_validity(s, platform).is_valid()
            && step(s, &self.actions()[0], platform).resp.is_ok()
            && runs(self.ic, &self.app)
            && runs(self.other_ic, &self.other_app)
            && q::can_grant(cp, &self.uri, s)
            && q::exists_res(cp, &self.uri, s)
            && q::component_is_exported(cp)
            && q::permission_required_for_read(cp) == Some(&self.perm)
    }

    fn after(&self, extra: &[Action]) -> AndroidState {
        let mut actions = self.actions();
        actions.extend_from_slice(extra);
        let report = run_trace(
            &Trace {
                initial: self.state.clone(),
                actions,
            },
            &self.platform,
        )
        .expect("fixture state is valid");
        last_state(&report, &self.state)
    }

    /// Response of the other app's read after grant, delegate, revoke.
    pub fn delegated_read(&self) -> Response {
        step(&self.after(&[]), &self.read_by(self.other_ic), &self.platform).resp
    }

    /// The same read after additionally revoking the delegation.
    pub fn delegated_read_after_revoke_del(&self) -> Response {
        let revoke_del = Action::RevokeDel {
            ic: self.ic,
            cp: self.provider.clone(),
            uri: self.uri.clone(),
            op: OpTy::Read,
        };
        step(&self.after(&[revoke_del]), &self.read_by(self.other_ic), &self.platform).resp
    }

    /// The delegating app's own read after the revoke.
    pub fn own_read_after_revoke(&self) -> Response {
        step(&self.after(&[]), &self.read_by(self.ic), &self.platform).resp
    }
}

pub fn check_delegation_survives(fx: &DelegationFixture) -> bool {
    fx.hypotheses_hold() && fx.delegated_read() == Response::Ok
}

// ------------------------------------------------------------- soundness

/// Checks one step against the declarative relation: a success must meet
/// the precondition and postcondition, and an error must leave the state
/// unchanged with a code the failed precondition admits.
pub fn differential_soundness(s: &AndroidState, a: &Action, platform: &Platform) -> Result<(), String> {
    let r = step(s, a, platform);
    let verdict = axiomatic::pre(s, a, platform);
    match r.resp {
        Response::Ok => {
            if !verdict.pre_holds {
                return Err(format!(
                    "step succeeded but the precondition fails with {:?}",
                    verdict.acceptable_errors
                ));
            }
            if !axiomatic::post(s, a, &r.st, platform) {
                return Err("step succeeded but the successor violates the postcondition".into());
            }
        }
        Response::Error(ec) => {
            if verdict.pre_holds {
                return Err(format!("step answered {ec} but the precondition holds"));
            }
            if !verdict.acceptable_errors.contains(&ec) {
                return Err(format!(
                    "step answered {ec}, acceptable codes are {:?}",
                    verdict.acceptable_errors
                ));
            }
            if r.st != *s {
                return Err(format!("step answered {ec} but changed the state"));
            }
        }
    }
    Ok(())
}

/// The successor of a valid state is valid.
pub fn validity_preserved(s: &AndroidState, a: &Action, platform: &Platform) -> Result<(), String> {
    let report = check_validity(&step(s, a, platform).st, platform);
    if report.is_valid() {
        Ok(())
    } else {
        Err(format!("successor is invalid: {report}"))
    }
}

// ---------------------------------------------------------------- runner

pub const PROPERTY_NAMES: [&str; 9] = [
    "grouped-grant", "implicit-grant", "normal-call", "explicit-grant", "revoke-sticks", "start-revocable", "delegation", "soundness", "validity",
];

/// Result of running one named property.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Replayable trace of the first (shrunk) failure, if any.
    pub counterexample: Option<String>,
    pub note: Option<String>,
}

impl PropOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    fn new(name: &'static str) -> Self {
        PropOutcome {
            name,
            cases: 0,
            failures: 0,
            counterexample: None,
            note: None,
        }
    }

    fn record(&mut self, ok: bool, counterexample: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.counterexample.is_none() {
                self.counterexample = Some(counterexample());
            }
        }
    }
}

fn single_step_counterexample(s: &AndroidState, a: &Action, platform: &Platform) -> String {
    emit_trace(&TraceFile::new(Some(s.clone()), platform.clone(), vec![a.clone()]))
}

fn state_size(seed: u64) -> usize {
    (seed % 5 + 1) as usize
}

/// Grouped dangerous permissions resolvable in `s`.
fn grouped_perms(s: &AndroidState, platform: &Platform) -> Vec<Perm> {
    let mut out: Vec<Perm> = platform.builtin_perms.iter().filter(|p| p.is_grouped()).cloned().collect();
    for (_, ps) in s.defined_perms.iter() {
        out.extend(ps.iter().filter(|p| p.is_grouped()).cloned());
    }
    out
}

pub fn run_grouped_grant(cases: usize, seed: u64, platform: &Platform) -> PropOutcome {
    let mut out = PropOutcome::new("grouped-grant");
    let mut rng = rng_from_seed(seed);
    for i in 0..cases {
        let s = gen_valid_state_with(&mut rng, state_size(i as u64), platform);
        let perms = grouped_perms(&s, platform);
        let perm = perms[rng.gen_range(0..perms.len())].clone();
        let mut apps: Vec<AppId> = q::present_apps(&s).into_iter().cloned().collect();
        apps.push("ghost".into());
        let app = apps[rng.gen_range(0..apps.len())].clone();
        let ok = check_grouped_grant_refused(&s, &perm, &app, platform);
        out.record(ok, || {
            let a = Action::Grant { perm: perm.id.clone(), app: app.clone() };
            single_step_counterexample(&s, &a, platform)
        });
    }
    out
}

pub fn run_implicit_grant() -> PropOutcome {
    let mut out = PropOutcome::new("implicit-grant");
    let w = implicit_grant_witness();
    out.record(implicit_grant_holds(&w), || IMPLICIT_GRANT_TEXT.to_string());
    out
}

pub fn run_normal_call(cases: usize, seed: u64, platform: &Platform) -> PropOutcome {
    let mut out = PropOutcome::new("normal-call");
    let mut k = 0u64;
    while out.cases < cases {
        let config = gen_normal_call_config(seed.wrapping_add(k), platform);
        k += 1;
        let Some(c) = config else { continue };
        if !normal_call_hypotheses(&c.state, &c.sac, &c.component, c.ic, &c.platform) {
            out.note = Some("a generated configuration failed its own hypotheses".into());
            out.failures += 1;
            continue;
        }
        let ok = check_normal_call(&c.state, &c.sac, c.ic, &c.platform);
        out.record(ok, || {
            single_step_counterexample(&c.state, &Action::Call { ic: c.ic, sac: c.sac.clone() }, &c.platform)
        });
    }
    out
}

fn run_constrained(name: &'static str, goal: TraceGoal, cases: usize, seed: u64, platform: &Platform) -> PropOutcome {
    let mut out = PropOutcome::new(name);
    for i in 0..cases as u64 {
        let t = match gen_constrained_trace(seed.wrapping_add(i), goal, platform) {
            Ok(t) => t,
            Err(e) => {
                out.note = Some(e.to_string());
                out.failures += 1;
                continue;
            }
        };
        let (hyp, concl) = match goal {
            TraceGoal::ExplicitGrant => (explicit_grant_premises(&t, platform), check_explicit_grant(&t)),
            TraceGoal::RevokedStaysRevoked => (revoke_sticks_premises(&t, platform), check_revoke_sticks(&t, platform)),
        };
        if !hyp {
            out.note = Some(format!("generated trace {i} does not meet the hypotheses"));
            out.failures += 1;
            continue;
        }
        out.record(concl, || {
            let shrunk = shrink_counterexample(&t, platform);
            emit_trace(&constrained_trace_file(&shrunk, platform))
        });
    }
    out
}

pub fn run_explicit_grant(cases: usize, seed: u64, platform: &Platform) -> PropOutcome {
    run_constrained("explicit-grant", TraceGoal::ExplicitGrant, cases, seed, platform)
}

pub fn run_revoke_sticks(cases: usize, seed: u64, platform: &Platform) -> PropOutcome {
    run_constrained("revoke-sticks", TraceGoal::RevokedStaysRevoked, cases, seed, platform)
}

pub fn run_start_revocable() -> PropOutcome {
    let mut out = PropOutcome::new("start-revocable");
    out.record(start_revocable_holds(&start_revocable_witness()), || START_REVOCABLE_TEXT.to_string());
    out
}

pub fn run_delegation() -> PropOutcome {
    let mut out = PropOutcome::new("delegation");
    out.record(check_delegation_survives(&delegation_fixture()), || DELEGATION_TEXT.to_string());
    out
}

/// Differential soundness (`soundness`) or validity invariance
/// (`validity`) over generated state and action pairs.
pub fn run_step_check(
    name: &'static str,
    cases: usize,
    seed: u64,
    bias: f64,
    platform: &Platform,
) -> PropOutcome {
    let check: fn(&AndroidState, &Action, &Platform) -> Result<(), String> = match name {
        "validity" => validity_preserved,
        _ => differential_soundness,
    };
    let mut out = PropOutcome::new(name);
    let mut rng = rng_from_seed(seed);
    let mut s = AndroidState::empty();
    for i in 0..cases {
        if i % 20 == 0 {
            s = gen_valid_state_with(&mut rng, state_size(i as u64 / 20), platform);
        }
        let a = gen_action(&mut rng, &s, platform, bias);
        let result = check(&s, &a, platform);
        if let Err(msg) = &result {
            out.note.get_or_insert_with(|| msg.clone());
        }
        out.record(result.is_ok(), || single_step_counterexample(&s, &a, platform));
    }
    out
}

/// Runs the named property (or all of them) with `cases` generated cases
/// for the universally quantified ones.
pub fn run_props(only: Option<&str>, cases: usize, seed: u64, platform: &Platform) -> Result<Vec<PropOutcome>, String> {
    let names: Vec<&str> = match only {
        Some(n) if PROPERTY_NAMES.contains(&n) => vec![n],
        Some(n) => return Err(format!("unknown property {n:?}; known: {}", PROPERTY_NAMES.join(", "))),
        None => PROPERTY_NAMES.to_vec(),
    };
    Ok(names
        .into_iter()
        .map(|n| match n {
            "grouped-grant" => run_grouped_grant(cases, seed, platform),
            "implicit-grant" => run_implicit_grant(),
            "normal-call" => run_normal_call(cases, seed, platform),
            "explicit-grant" => run_explicit_grant(cases, seed, platform),
            "revoke-sticks" => run_revoke_sticks(cases, seed, platform),
            "start-revocable" => run_start_revocable(),
            "delegation" => run_delegation(),
            "soundness" => run_step_check("soundness", cases, seed, genfuzz::DEFAULT_BIAS, platform),
            _ => run_step_check("validity", cases, seed, genfuzz::DEFAULT_BIAS, platform),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ErrorCode;

    #[test]
    fn implicit_grant_witness_holds() {
        let w = implicit_grant_witness();
        assert!(implicit_grant_holds(&w));
    }

    #[test]
    fn start_right_witness_holds() {
        assert!(start_revocable_holds(&start_revocable_witness()));
    }

    #[test]
    fn delegation_survives_but_revoke_del_and_own_read_fail() {
        let fx = delegation_fixture();
        assert!(check_delegation_survives(&fx));
        assert_eq!(
            fx.delegated_read_after_revoke_del(),
            Response::Error(ErrorCode::NoReadPermission)
        );
        assert_eq!(fx.own_read_after_revoke(), Response::Error(ErrorCode::NoReadPermission));
    }

    #[test]
    fn ungrouped_dangerous_grant_is_not_blocked() {
        let fx = delegation_fixture();
        let grant = &fx.actions()[0];
        assert!(step(&fx.state, grant, &fx.platform).resp.is_ok());
    }

    #[test]
    fn small_runs_pass() {
        let p = Platform::sample();
        for outcome in run_props(None, 30, 3, &p).unwrap() {
            assert!(outcome.passed(), "{outcome:?}");
        }
    }

    #[test]
    fn unknown_property_is_rejected() {
        assert!(run_props(Some("prop9"), 1, 0, &Platform::sample()).is_err());
    }

    #[test]
    fn unlisted_normal_permission_blocks_call() {
        let fx = delegation_fixture();
        let mut platform = fx.platform.clone();
        platform.syscalls.insert("net".into(), ["INTERNET".into()].into());
        let r = step(&fx.state, &Action::Call { ic: fx.ic, sac: "net".into() }, &platform);
        assert_eq!(r.resp, Response::Error(ErrorCode::SacPermissionMissing));
        platform.syscalls.insert("idle".into(), BTreeSet::new());
        assert!(check_normal_call(&fx.state, &"idle".into(), fx.ic, &platform));
    }
}
