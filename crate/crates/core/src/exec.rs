//! The functional reference validation mechanism.
//!
//! Every action has a `*_pre` function that checks its guards in a fixed
//! order and returns the first failing one, a `*_post` function computing the
//! successor state, and a `*_safe` function composing the two. [`step`]
//! dispatches on the action. On error the input state is returned unchanged.

use std::collections::BTreeSet;

use crate::model::{
    default_value, Action, AndroidState, AppId, Cert, CompId, Component, ErrorCode, Intent,
    IntentClass, IntentId, IntentKind, InstanceId, Manifest, OpTy, PermGroupId, PermId,
    PermLevel, PermanentDelegation, Platform, ResId, Response, SentIntent, StepResult, SysCall,
    Uri, Value,
};
use crate::queries as q;

type Guard = Option<ErrorCode>;

fn fail(ec: ErrorCode) -> Guard {
    Some(ec)
}

fn safe(s: &AndroidState, pre: Guard, post: impl FnOnce() -> AndroidState) -> StepResult {
    match pre {
        Some(ec) => StepResult {
            resp: Response::Error(ec),
            st: s.clone(),
        },
        None => StepResult {
            resp: Response::Ok,
            st: post(),
        },
    }
}

/// Executes one action.
pub fn step(s: &AndroidState, a: &Action, platform: &Platform) -> StepResult {
    match a {
        Action::Install {
            app,
            manifest,
            cert,
            resources,
        } => install_safe(app, manifest, cert, resources, s, platform),
        Action::Uninstall { app } => uninstall_safe(app, s),
        Action::Grant { perm, app } => grant_safe(perm, app, s, platform),
        Action::Revoke { perm, app } => revoke_safe(perm, app, s),
        Action::GrantPermGroup { group, app } => grant_group_safe(group, app, s, platform),
        Action::RevokePermGroup { group, app } => revoke_group_safe(group, app, s),
        Action::HasPermission { .. } => StepResult {
            resp: Response::Ok,
            st: s.clone(),
        },
        Action::Read { ic, cp, uri } => read_safe(*ic, cp, uri, s, platform),
        Action::Write { ic, cp, uri, value } => write_safe(*ic, cp, uri, value, s, platform),
        Action::StartActivity { intent, ic } | Action::StartActivityRes { intent, ic, .. } => {
            start_activity_safe(intent, *ic, s)
        }
        Action::StartService { intent, ic } => start_service_safe(intent, *ic, s),
        Action::SendBroadcast { intent, ic, perm } | Action::SendOrdBroadcast { intent, ic, perm } => {
            send_broadcast_safe(intent, *ic, perm.as_ref(), s)
        }
        Action::SendStickyBroadcast { intent, ic } => send_sticky_broadcast_safe(intent, *ic, s),
        Action::ResolveIntent { intent, app } => resolve_intent_safe(intent, app, s),
        Action::ReceiveIntent { intent, ic, app } => receive_intent_safe(intent, *ic, app, s, platform),
        Action::Stop { ic } => stop_safe(*ic, s),
        Action::GrantP {
            ic,
            cp,
            app,
            uri,
            op,
        } => grant_p_safe(*ic, cp, app, uri, *op, s, platform),
        Action::RevokeDel { ic, cp, uri, op } => revoke_del_safe(*ic, cp, uri, *op, s),
        Action::Call { ic, sac } => call_safe(*ic, sac, s, platform),
    }
}

// ---------------------------------------------------------------- install

fn has_duplicates<T: Ord>(items: impl IntoIterator<Item = T>) -> bool {
    let mut v: Vec<T> = items.into_iter().collect();
    v.sort();
    v.windows(2).any(|w| w[0] == w[1])
}

fn is_app_installed(app: &AppId, s: &AndroidState) -> bool {
    s.installed_apps.contains(app) || s.system_image.iter().any(|sa| &sa.id == app)
}

fn cmp_id_in_state(c: &Component, s: &AndroidState) -> bool {
    q::all_components(s).iter().any(|(_, other)| other.id == c.id)
}

fn auth_perms(m: &Manifest, s: &AndroidState) -> bool {
    m.defined_perms.iter().all(|p| q::definer_of(&p.id, s).is_none())
}

pub fn install_pre(
    app: &AppId,
    m: &Manifest,
    _c: &Cert,
    _l_res: &[ResId],
    s: &AndroidState,
) -> Option<ErrorCode> {
    if is_app_installed(app, s) {
        return fail(ErrorCode::AppAlreadyInstalled);
    }
    if has_duplicates(m.components.iter().map(|c| &c.id)) {
        return fail(ErrorCode::DuplicatedCmpId);
    }
    if has_duplicates(m.defined_perms.iter().map(|p| &p.id)) {
        return fail(ErrorCode::DuplicatedPermId);
    }
    if m.components.iter().any(|c| cmp_id_in_state(c, s)) {
        return fail(ErrorCode::CmpAlreadyDefined);
    }
    if !auth_perms(m, s) {
        return fail(ErrorCode::PermAlreadyDefined);
    }
    if !m.components.iter().all(q::cmp_declares_intent_filters_correctly) {
        return fail(ErrorCode::FaultyIntentFilter);
    }
    None
}

pub fn install_post(
    app: &AppId,
    m: &Manifest,
    c: &Cert,
    l_res: &[ResId],
    s: &AndroidState,
    platform: &Platform,
) -> AndroidState {
    let mut st = s.clone();
    st.installed_apps.insert(app.clone());
    st.granted_groups.insert(app.clone(), BTreeSet::new());
    st.granted_perms.insert(app.clone(), BTreeSet::new());
    for r in l_res {
        st.resources.insert((app.clone(), r.clone()), default_value());
    }
    st.manifests.insert(app.clone(), m.clone());
    st.certs.insert(app.clone(), c.clone());
    let non_system = m
        .defined_perms
        .iter()
        .filter(|p| !platform.is_builtin(&p.id))
        .cloned()
        .collect();
    st.defined_perms.insert(app.clone(), non_system);
    st
}

pub fn install_safe(
    app: &AppId,
    m: &Manifest,
    c: &Cert,
    l_res: &[ResId],
    s: &AndroidState,
    platform: &Platform,
) -> StepResult {
    safe(s, install_pre(app, m, c, l_res, s), || {
        install_post(app, m, c, l_res, s, platform)
    })
}

// -------------------------------------------------------------- uninstall

pub fn uninstall_pre(app: &AppId, s: &AndroidState) -> Option<ErrorCode> {
    if q::is_system_app(app, s) {
        return fail(ErrorCode::AppIsSystem);
    }
    if !s.installed_apps.contains(app) {
        return fail(ErrorCode::NoSuchApp);
    }
    if s.running.keys().any(|ic| q::instance_component(*ic, s).is_some_and(|(a, _)| a == app)) {
        return fail(ErrorCode::AppHasRunningInstances);
    }
    None
}

pub fn uninstall_post(app: &AppId, s: &AndroidState) -> AndroidState {
    let own_components: BTreeSet<CompId> = s
        .manifests
        .get(app)
        .map(|m| m.components.iter().map(|c| c.id.clone()).collect())
        .unwrap_or_default();
    let own_perms: BTreeSet<PermId> = s
        .defined_perms
        .get(app)
        .map(|ps| ps.iter().map(|p| p.id.clone()).collect())
        .unwrap_or_default();

    let mut st = s.clone();
    st.installed_apps.remove(app);
    st.granted_groups.remove(app);
    st.granted_perms.remove(app);
    for granted in st.granted_perms.values_mut() {
        granted.retain(|p| !own_perms.contains(p));
    }
    st.manifests.remove(app);
    st.certs.remove(app);
    st.defined_perms.remove(app);
    st.resources.retain(|(owner, _), _| owner != app);
    st.del_p_perms
        .retain(|d| &d.app != app && !own_components.contains(&d.provider));
    st.del_t_perms.retain(|d| !own_components.contains(&d.provider));
    st
}

pub fn uninstall_safe(app: &AppId, s: &AndroidState) -> StepResult {
    safe(s, uninstall_pre(app, s), || uninstall_post(app, s))
}

// ------------------------------------------------------- grant and revoke

pub fn grant_pre(pid: &PermId, app: &AppId, s: &AndroidState, platform: &Platform) -> Option<ErrorCode> {
    let Some(manifest) = q::get_manifest_for_app(app, s) else {
        return fail(ErrorCode::NoSuchApp);
    };
    let Some(perm) = q::resolve_perm(pid, s, platform) else {
        return fail(ErrorCode::NoSuchPerm);
    };
    if perm.level != PermLevel::Dangerous {
        return fail(ErrorCode::PermWrongLevel);
    }
    if perm.is_grouped() {
        return fail(ErrorCode::PermIsGrouped);
    }
    if !manifest.used_perms.contains(pid) {
        return fail(ErrorCode::PermNotInManifest);
    }
    if q::get_granted_perms_for_app(app, s).is_some_and(|ps| ps.contains(pid)) {
        return fail(ErrorCode::PermAlreadyGranted);
    }
    None
}

pub fn grant_post(pid: &PermId, app: &AppId, s: &AndroidState) -> AndroidState {
    let mut st = s.clone();
    match st.granted_perms.get_mut(app) {
        Some(ps) => {
            ps.insert(pid.clone());
        }
        None => st.granted_perms.insert(app.clone(), BTreeSet::from([pid.clone()])),
    }
    st
}

pub fn grant_safe(pid: &PermId, app: &AppId, s: &AndroidState, platform: &Platform) -> StepResult {
    safe(s, grant_pre(pid, app, s, platform), || grant_post(pid, app, s))
}

pub fn revoke_pre(pid: &PermId, app: &AppId, s: &AndroidState) -> Option<ErrorCode> {
    if !q::get_granted_perms_for_app(app, s).is_some_and(|ps| ps.contains(pid)) {
        return fail(ErrorCode::PermNotGranted);
    }
    None
}

pub fn revoke_post(pid: &PermId, app: &AppId, s: &AndroidState) -> AndroidState {
    let mut st = s.clone();
    if let Some(ps) = st.granted_perms.get_mut(app) {
        ps.remove(pid);
    }
    st
}

pub fn revoke_safe(pid: &PermId, app: &AppId, s: &AndroidState) -> StepResult {
    safe(s, revoke_pre(pid, app, s), || revoke_post(pid, app, s))
}

pub fn grant_group_pre(
    g: &PermGroupId,
    app: &AppId,
    s: &AndroidState,
    platform: &Platform,
) -> Option<ErrorCode> {
    let Some(manifest) = q::get_manifest_for_app(app, s) else {
        return fail(ErrorCode::NoSuchApp);
    };
    let requested = manifest.used_perms.iter().any(|pid| {
        q::resolve_perm(pid, s, platform)
            .is_some_and(|p| p.level == PermLevel::Dangerous && p.group.as_ref() == Some(g))
    });
    if !requested {
        return fail(ErrorCode::GroupNotInManifest);
    }
    if q::get_granted_groups_for_app(app, s).is_some_and(|gs| gs.contains(g)) {
        return fail(ErrorCode::GroupAlreadyGranted);
    }
    None
}

pub fn grant_group_post(g: &PermGroupId, app: &AppId, s: &AndroidState) -> AndroidState {
    let mut st = s.clone();
    match st.granted_groups.get_mut(app) {
        Some(gs) => {
            gs.insert(g.clone());
        }
        None => st.granted_groups.insert(app.clone(), BTreeSet::from([g.clone()])),
    }
    st
}

pub fn grant_group_safe(g: &PermGroupId, app: &AppId, s: &AndroidState, platform: &Platform) -> StepResult {
    safe(s, grant_group_pre(g, app, s, platform), || grant_group_post(g, app, s))
}

pub fn revoke_group_pre(g: &PermGroupId, app: &AppId, s: &AndroidState) -> Option<ErrorCode> {
    if !q::get_granted_groups_for_app(app, s).is_some_and(|gs| gs.contains(g)) {
        return fail(ErrorCode::GroupNotGranted);
    }
    None
}

pub fn revoke_group_post(g: &PermGroupId, app: &AppId, s: &AndroidState) -> AndroidState {
    let mut st = s.clone();
    if let Some(gs) = st.granted_groups.get_mut(app) {
        gs.remove(g);
    }
    st
}

pub fn revoke_group_safe(g: &PermGroupId, app: &AppId, s: &AndroidState) -> StepResult {
    safe(s, revoke_group_pre(g, app, s), || revoke_group_post(g, app, s))
}

// ------------------------------------------------------ provider access

/// Checks shared by read and write; returns the resource key on success.
fn provider_access_pre(
    ic: InstanceId,
    cp: &CompId,
    u: &Uri,
    op: OpTy,
    s: &AndroidState,
    platform: &Platform,
) -> Result<(AppId, ResId), ErrorCode> {
    let (caller_app, _) = q::instance_component(ic, s).ok_or(ErrorCode::InstanceNotRunning)?;
    let (provider_app, provider) = q::find_provider(cp, s).ok_or(ErrorCode::NoSuchProvider)?;
    if !q::exists_res(provider, u, s) {
        return Err(ErrorCode::NoSuchResource);
    }
    if !q::may_access(caller_app, ic, provider, provider_app, u, op, s, platform) {
        return Err(if !provider.exported {
            ErrorCode::NotExported
        } else if op == OpTy::Write {
            ErrorCode::NoWritePermission
        } else {
            ErrorCode::NoReadPermission
        });
    }
    Ok((provider_app.clone(), provider.resource_map[u].clone()))
}

pub fn read_pre(ic: InstanceId, cp: &CompId, u: &Uri, s: &AndroidState, platform: &Platform) -> Option<ErrorCode> {
    provider_access_pre(ic, cp, u, OpTy::Read, s, platform).err()
}

pub fn read_safe(ic: InstanceId, cp: &CompId, u: &Uri, s: &AndroidState, platform: &Platform) -> StepResult {
    safe(s, read_pre(ic, cp, u, s, platform), || s.clone())
}

pub fn write_pre(ic: InstanceId, cp: &CompId, u: &Uri, s: &AndroidState, platform: &Platform) -> Option<ErrorCode> {
    provider_access_pre(ic, cp, u, OpTy::Write, s, platform).err()
}

pub fn write_post(key: (AppId, ResId), v: &Value, s: &AndroidState) -> AndroidState {
    let mut st = s.clone();
    st.resources.insert(key, v.clone());
    st
}

pub fn write_safe(
    ic: InstanceId,
    cp: &CompId,
    u: &Uri,
    v: &Value,
    s: &AndroidState,
    platform: &Platform,
) -> StepResult {
    match provider_access_pre(ic, cp, u, OpTy::Write, s, platform) {
        Err(ec) => safe(s, Some(ec), || unreachable!()),
        Ok(key) => safe(s, None, || write_post(key, v, s)),
    }
}

// ---------------------------------------------------------- sending intents

fn send_pre(i: &Intent, ic: InstanceId, kind_ok: bool, s: &AndroidState) -> Option<ErrorCode> {
    if !q::is_running(ic, s) {
        return fail(ErrorCode::InstanceNotRunning);
    }
    if s.sent_intents.iter().any(|si| si.intent.id == i.id) {
        return fail(ErrorCode::IntentIdInUse);
    }
    if !kind_ok {
        return fail(ErrorCode::IntentKindMismatch);
    }
    None
}

pub fn send_post(i: &Intent, ic: InstanceId, s: &AndroidState) -> AndroidState {
    let mut st = s.clone();
    st.sent_intents.insert(SentIntent {
        sender: ic,
        intent: i.clone(),
    });
    st
}

pub fn start_activity_pre(i: &Intent, ic: InstanceId, s: &AndroidState) -> Option<ErrorCode> {
    send_pre(i, ic, i.kind.class() == IntentClass::ActivityStart, s)
}

pub fn start_activity_safe(i: &Intent, ic: InstanceId, s: &AndroidState) -> StepResult {
    safe(s, start_activity_pre(i, ic, s), || send_post(i, ic, s))
}

pub fn start_service_pre(i: &Intent, ic: InstanceId, s: &AndroidState) -> Option<ErrorCode> {
    send_pre(i, ic, i.kind == IntentKind::StartService, s)
}

pub fn start_service_safe(i: &Intent, ic: InstanceId, s: &AndroidState) -> StepResult {
    safe(s, start_service_pre(i, ic, s), || send_post(i, ic, s))
}

pub fn send_broadcast_pre(i: &Intent, ic: InstanceId, p: Option<&PermId>, s: &AndroidState) -> Option<ErrorCode> {
    let kind_ok = match &i.kind {
        IntentKind::Broadcast(q) | IntentKind::OrderedBroadcast(q) => q.as_ref() == p,
        _ => false,
    };
    send_pre(i, ic, kind_ok, s)
}

pub fn send_broadcast_safe(i: &Intent, ic: InstanceId, p: Option<&PermId>, s: &AndroidState) -> StepResult {
    safe(s, send_broadcast_pre(i, ic, p, s), || send_post(i, ic, s))
}

pub fn send_sticky_broadcast_pre(i: &Intent, ic: InstanceId, s: &AndroidState) -> Option<ErrorCode> {
    send_pre(i, ic, i.kind == IntentKind::StickyBroadcast, s)
}

pub fn send_sticky_broadcast_safe(i: &Intent, ic: InstanceId, s: &AndroidState) -> StepResult {
    safe(s, send_sticky_broadcast_pre(i, ic, s), || send_post(i, ic, s))
}

// ------------------------------------------------- resolving and receiving

fn pending<'a>(iid: &IntentId, s: &'a AndroidState) -> Option<&'a SentIntent> {
    s.sent_intents.iter().find(|si| &si.intent.id == iid)
}

/// Lowest-id component of `app` with a well-formed filter accepting `class`.
pub fn resolution_target<'a>(class: IntentClass, app: &AppId, s: &'a AndroidState) -> Option<&'a Component> {
    q::get_manifest_for_app(app, s)?
        .components
        .iter()
        .filter(|c| {
            q::cmp_declares_intent_filters_correctly(c)
                && c.intent_filters
                    .iter()
                    .any(|f| f.accepted_intent_kinds.contains(&class))
        })
        .min_by(|a, b| a.id.cmp(&b.id))
}

pub fn resolve_intent_pre(iid: &IntentId, app: &AppId, s: &AndroidState) -> Option<ErrorCode> {
    let Some(si) = pending(iid, s) else {
        return fail(ErrorCode::IntentNotPending);
    };
    if si.intent.target.is_some() {
        return fail(ErrorCode::IntentAlreadyResolved);
    }
    if !q::is_app_present(app, s) {
        return fail(ErrorCode::NoSuchApp);
    }
    if resolution_target(si.intent.kind.class(), app, s).is_none() {
        return fail(ErrorCode::IntentNotResolvable);
    }
    None
}

pub fn resolve_intent_post(iid: &IntentId, app: &AppId, s: &AndroidState) -> AndroidState {
    let mut st = s.clone();
    let si = pending(iid, s).expect("resolve_intent_post called without a pending intent");
    let target = resolution_target(si.intent.kind.class(), app, s)
        .expect("resolve_intent_post called without a matching component");
    st.sent_intents.remove(si);
    let mut resolved = si.clone();
    resolved.intent.target = Some(target.id.clone());
    st.sent_intents.insert(resolved);
    st
}

pub fn resolve_intent_safe(iid: &IntentId, app: &AppId, s: &AndroidState) -> StepResult {
    safe(s, resolve_intent_pre(iid, app, s), || resolve_intent_post(iid, app, s))
}

pub fn receive_intent_pre(
    iid: &IntentId,
    ic: InstanceId,
    app: &AppId,
    s: &AndroidState,
    platform: &Platform,
) -> Option<ErrorCode> {
    let Some((_, sender_cmp)) = q::instance_component(ic, s) else {
        return fail(ErrorCode::InstanceNotRunning);
    };
    let Some(si) = s
        .sent_intents
        .iter()
        .find(|si| si.sender == ic && &si.intent.id == iid)
    else {
        return fail(ErrorCode::IntentNotPending);
    };
    let Some(target) = &si.intent.target else {
        return fail(ErrorCode::IntentNotResolved);
    };
    let Some(receiver) = q::get_manifest_for_app(app, s)
        .and_then(|m| m.components.iter().find(|c| &c.id == target))
    else {
        return fail(ErrorCode::TargetNotInApp);
    };
    let class = si.intent.kind.class();
    if receiver.is_provider() || receiver.kind != class.receiver_kind() {
        return fail(ErrorCode::IntentKindMismatch);
    }
    let allowed = match class {
        IntentClass::ActivityStart | IntentClass::ServiceStart => {
            q::can_start(sender_cmp, receiver, s, platform)
        }
        IntentClass::Broadcast => si
            .intent
            .kind
            .broadcast_perm()
            .is_none_or(|p| q::app_has_permission_id(app, p, s, platform)),
    };
    if !allowed {
        return fail(ErrorCode::GuardNotSatisfied);
    }
    None
}

/// Successor of the largest instance id mentioned in `s`.
pub fn fresh_instance_id(s: &AndroidState) -> InstanceId {
    q::instance_ids_in_use(s)
        .last()
        .map(|ic| ic.next())
        .unwrap_or(InstanceId(0))
}

pub fn receive_intent_post(iid: &IntentId, ic: InstanceId, s: &AndroidState) -> AndroidState {
    let si = s
        .sent_intents
        .iter()
        .find(|si| si.sender == ic && &si.intent.id == iid)
        .expect("receive_intent_post called without a pending intent");
    let target = si.intent.target.clone().expect("receive_intent_post on implicit intent");
    let mut st = s.clone();
    st.running.insert(fresh_instance_id(s), target);
    if si.intent.kind != IntentKind::StickyBroadcast {
        st.sent_intents.remove(si);
    }
    st
}

pub fn receive_intent_safe(
    iid: &IntentId,
    ic: InstanceId,
    app: &AppId,
    s: &AndroidState,
    platform: &Platform,
) -> StepResult {
    safe(s, receive_intent_pre(iid, ic, app, s, platform), || {
        receive_intent_post(iid, ic, s)
    })
}

// ------------------------------------------------------------------- stop

pub fn stop_pre(ic: InstanceId, s: &AndroidState) -> Option<ErrorCode> {
    if !q::is_running(ic, s) {
        return fail(ErrorCode::InstanceNotRunning);
    }
    None
}

pub fn stop_post(ic: InstanceId, s: &AndroidState) -> AndroidState {
    let mut st = s.clone();
    st.running.remove(&ic);
    st.del_t_perms.retain(|d| d.instance != ic);
    st
}

pub fn stop_safe(ic: InstanceId, s: &AndroidState) -> StepResult {
    safe(s, stop_pre(ic, s), || stop_post(ic, s))
}

// ------------------------------------------------------------ delegation

#[allow(clippy::too_many_arguments)]
pub fn grant_p_pre(
    ic: InstanceId,
    cp: &CompId,
    app: &AppId,
    u: &Uri,
    pt: OpTy,
    s: &AndroidState,
    platform: &Platform,
) -> Option<ErrorCode> {
    let Some((caller_app, _)) = q::instance_component(ic, s) else {
        return fail(ErrorCode::InstanceNotRunning);
    };
    if !q::is_app_present(app, s) {
        return fail(ErrorCode::NoSuchApp);
    }
    let Some((provider_app, provider)) = q::find_provider(cp, s) else {
        return fail(ErrorCode::NoSuchProvider);
    };
    if !q::can_grant(provider, u, s) {
        return fail(ErrorCode::CannotGrantUri);
    }
    if !q::exists_res(provider, u, s) {
        return fail(ErrorCode::NoSuchResource);
    }
    if !q::component_is_exported(provider) {
        return fail(ErrorCode::NotExported);
    }
    let may = |op| q::may_access(caller_app, ic, provider, provider_app, u, op, s, platform);
    if pt.covers(OpTy::Read) && pt != OpTy::Write && !may(OpTy::Read) {
        return fail(ErrorCode::NoReadPermission);
    }
    if pt != OpTy::Read && !may(OpTy::Write) {
        return fail(ErrorCode::NoWritePermission);
    }
    None
}

pub fn grant_p_post(cp: &CompId, app: &AppId, u: &Uri, pt: OpTy, s: &AndroidState) -> AndroidState {
    let mut st = s.clone();
    st.del_p_perms.insert(PermanentDelegation {
        app: app.clone(),
        provider: cp.clone(),
        uri: u.clone(),
        op: pt,
    });
    st
}

#[allow(clippy::too_many_arguments)]
pub fn grant_p_safe(
    ic: InstanceId,
    cp: &CompId,
    app: &AppId,
    u: &Uri,
    pt: OpTy,
    s: &AndroidState,
    platform: &Platform,
) -> StepResult {
    safe(s, grant_p_pre(ic, cp, app, u, pt, s, platform), || {
        grant_p_post(cp, app, u, pt, s)
    })
}

pub fn revoke_del_pre(ic: InstanceId, cp: &CompId, u: &Uri, s: &AndroidState) -> Option<ErrorCode> {
    if !q::is_running(ic, s) {
        return fail(ErrorCode::InstanceNotRunning);
    }
    let Some((_, provider)) = q::find_provider(cp, s) else {
        return fail(ErrorCode::NoSuchProvider);
    };
    if !q::exists_res(provider, u, s) {
        return fail(ErrorCode::NoSuchResource);
    }
    None
}

pub fn revoke_del_post(cp: &CompId, u: &Uri, pt: OpTy, s: &AndroidState) -> AndroidState {
    let mut st = s.clone();
    st.del_p_perms
        .retain(|d| !(&d.provider == cp && &d.uri == u && pt.covers(d.op)));
    st.del_t_perms
        .retain(|d| !(&d.provider == cp && &d.uri == u && pt.covers(d.op)));
    st
}

pub fn revoke_del_safe(ic: InstanceId, cp: &CompId, u: &Uri, pt: OpTy, s: &AndroidState) -> StepResult {
    safe(s, revoke_del_pre(ic, cp, u, s), || revoke_del_post(cp, u, pt, s))
}

// ------------------------------------------------------------------- call

pub fn call_pre(ic: InstanceId, sac: &SysCall, s: &AndroidState, platform: &Platform) -> Option<ErrorCode> {
    let Some((app, _)) = q::instance_component(ic, s) else {
        return fail(ErrorCode::InstanceNotRunning);
    };
    let Some(required) = platform.syscalls.get(sac) else {
        return fail(ErrorCode::UnknownSystemCall);
    };
    if !required.iter().all(|p| q::app_has_permission_id(app, p, s, platform)) {
        return fail(ErrorCode::SacPermissionMissing);
    }
    None
}

pub fn call_safe(ic: InstanceId, sac: &SysCall, s: &AndroidState, platform: &Platform) -> StepResult {
    safe(s, call_pre(ic, sac, s, platform), || s.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ComponentKind, IntentFilter, Perm};
    use crate::validity::check_validity;

    fn manifest(comps: Vec<Component>, used: &[&str], defs: Vec<Perm>) -> Manifest {
        Manifest {
            components: comps,
            used_perms: used.iter().map(|p| PermId::from(*p)).collect(),
            defined_perms: defs,
            ..Manifest::default()
        }
    }

    fn install(s: &AndroidState, app: &str, m: Manifest, res: &[&str], p: &Platform) -> StepResult {
        step(
            s,
            &Action::Install {
                app: app.into(),
                manifest: m,
                cert: Cert::from(format!("k-{app}")),
                resources: res.iter().map(|r| ResId::from(*r)).collect(),
            },
            p,
        )
    }

    #[test]
    fn install_fresh_app_into_empty_state() {
        let p = Platform::sample();
        let r = install(&AndroidState::empty(), "a", manifest(vec![], &[], vec![]), &["r1", "r2"], &p);
        assert_eq!(r.resp, Response::Ok);
        assert!(r.st.installed_apps.contains(&AppId::from("a")));
        assert_eq!(r.st.granted_perms.get(&"a".into()), Some(&BTreeSet::new()));
        assert_eq!(r.st.granted_groups.get(&"a".into()), Some(&BTreeSet::new()));
        assert_eq!(r.st.resources.get(&("a".into(), "r1".into())), Some(&default_value()));
        assert!(check_validity(&r.st, &p).is_valid());
    }

    #[test]
    fn installing_twice_is_refused_and_state_kept() {
        let p = Platform::sample();
        let s = install(&AndroidState::empty(), "a", manifest(vec![], &[], vec![]), &[], &p).st;
        let r = install(&s, "a", manifest(vec![], &[], vec![]), &[], &p);
        assert_eq!(r.resp, Response::Error(ErrorCode::AppAlreadyInstalled));
        assert_eq!(r.st, s);
    }

    #[test]
    fn builtin_perms_are_not_registered_as_defined() {
        let p = Platform::sample();
        let m = manifest(
            vec![],
            &[],
            vec![
                Perm::new("INTERNET", None, PermLevel::Normal),
                Perm::new("a.OWN", None, PermLevel::Normal),
            ],
        );
        let s = install(&AndroidState::empty(), "a", m, &[], &p).st;
        let defs = s.defined_perms.get(&"a".into()).unwrap();
        assert_eq!(defs.len(), 1);
        assert!(defs.iter().all(|d| d.id == PermId::from("a.OWN")));
    }

    #[test]
    fn has_permission_is_always_ok() {
        let p = Platform::sample();
        let s = AndroidState::empty();
        let r = step(&s, &Action::HasPermission { perm: "X".into(), app: "nobody".into() }, &p);
        assert_eq!(r, StepResult { resp: Response::Ok, st: s });
    }

    #[test]
    fn grant_of_grouped_perm_is_refused() {
        let p = Platform::sample();
        let s = install(&AndroidState::empty(), "a", manifest(vec![], &["READ_CONTACTS"], vec![]), &[], &p).st;
        let r = step(&s, &Action::Grant { perm: "READ_CONTACTS".into(), app: "a".into() }, &p);
        assert_eq!(r.resp, Response::Error(ErrorCode::PermIsGrouped));
        assert_eq!(r.st, s);
    }

    #[test]
    fn revoke_removes_ungrouped_dangerous_perm() {
        let p = Platform::sample();
        let a = AppId::from("a");
        let mut s = install(&AndroidState::empty(), "a", manifest(vec![], &["CAMERA"], vec![]), &[], &p).st;
        s = step(&s, &Action::Grant { perm: "CAMERA".into(), app: a.clone() }, &p).st;
        let cam = q::resolve_perm(&"CAMERA".into(), &s, &p).unwrap();
        assert!(q::app_has_permission(&a, &cam, &s));
        let r = step(&s, &Action::Revoke { perm: "CAMERA".into(), app: a.clone() }, &p);
        assert!(r.resp.is_ok());
        assert!(!q::app_has_permission(&a, &cam, &r.st));
    }

    #[test]
    fn stop_drops_temporary_delegations() {
        let p = Platform::default();
        let mut cp = Component::new("a.cp", ComponentKind::ContentProvider);
        cp.resource_map.insert("u".into(), "r".into());
        let m = manifest(vec![cp, Component::new("a.act", ComponentKind::Activity)], &[], vec![]);
        let mut s = install(&AndroidState::empty(), "a", m, &["r"], &p).st;
        s.running.insert(InstanceId(3), "a.act".into());
        s.del_t_perms.insert(crate::model::TemporaryDelegation {
            instance: InstanceId(3),
            provider: "a.cp".into(),
            uri: "u".into(),
            op: OpTy::Read,
        });
        assert!(check_validity(&s, &p).is_valid());
        let r = step(&s, &Action::Stop { ic: InstanceId(3) }, &p);
        assert!(r.resp.is_ok());
        assert!(r.st.del_t_perms.is_empty());
        assert!(check_validity(&r.st, &p).is_valid());
    }

    #[test]
    fn intent_lifecycle_creates_instance() {
        let p = Platform::default();
        let sender = Component::new("a.main", ComponentKind::Activity);
        let receiver = Component::new("b.recv", ComponentKind::BroadcastReceiver)
            .with_filter(IntentFilter::new(ComponentKind::BroadcastReceiver, [IntentClass::Broadcast]));
        let mut s = install(&AndroidState::empty(), "a", manifest(vec![sender], &[], vec![]), &[], &p).st;
        s = install(&s, "b", manifest(vec![receiver], &[], vec![]), &[], &p).st;
        s.running.insert(InstanceId(7), "a.main".into());
        let i = Intent::implicit("i1", IntentKind::StickyBroadcast);
        let steps = [
            Action::SendStickyBroadcast { intent: i, ic: InstanceId(7) },
            Action::ResolveIntent { intent: "i1".into(), app: "b".into() },
            Action::ReceiveIntent { intent: "i1".into(), ic: InstanceId(7), app: "b".into() },
        ];
        for a in &steps {
            let r = step(&s, a, &p);
            assert!(r.resp.is_ok(), "{a:?} -> {}", r.resp);
            s = r.st;
        }
        assert_eq!(s.running.get(&InstanceId(8)), Some(&CompId::from("b.recv")));
        // sticky intents stay pending
        assert_eq!(s.sent_intents.len(), 1);
        assert!(check_validity(&s, &p).is_valid());
    }
}
