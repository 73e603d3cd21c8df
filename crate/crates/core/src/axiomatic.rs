//! Declarative pre/postconditions of every action.
//!
//! These are checkers, not transformers: [`pre`] evaluates every conjunct of
//! the precondition and reports the code of each one that fails, and
//! [`post`] decides whether a candidate successor state is related to the
//! original by the action. Nothing here calls into [`crate::exec`].

use std::collections::BTreeSet;

use crate::model::{
    default_value, Action, AndroidState, AppId, CompId, Component, ErrorCode, FiniteMap, Intent,
    IntentClass, IntentId, IntentKind, InstanceId, Manifest, OpTy, PermanentDelegation, PermGroupId,
    PermId, PermLevel, Platform, SentIntent, TemporaryDelegation, Uri,
};
use crate::queries as q;

/// Result of evaluating a precondition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomaticVerdict {
    pub pre_holds: bool,
    /// Every error code that is an acceptable answer. Empty iff `pre_holds`.
    pub acceptable_errors: BTreeSet<ErrorCode>,
}

impl AxiomaticVerdict {
    fn from_failures(failures: impl IntoIterator<Item = ErrorCode>) -> Self {
        let acceptable_errors: BTreeSet<ErrorCode> = failures.into_iter().collect();
        AxiomaticVerdict {
            pre_holds: acceptable_errors.is_empty(),
            acceptable_errors,
        }
    }
}

/// Collects the codes of failing conjuncts.
#[derive(Default)]
struct Conjuncts(Vec<ErrorCode>);

impl Conjuncts {
    fn require(&mut self, holds: bool, ec: ErrorCode) {
        if !holds {
            self.0.push(ec);
        }
    }
}

pub fn pre(s: &AndroidState, a: &Action, platform: &Platform) -> AxiomaticVerdict {
    let mut c = Conjuncts::default();
    match a {
        Action::Install { app, manifest, .. } => install_pre(&mut c, app, manifest, s),
        Action::Uninstall { app } => uninstall_pre(&mut c, app, s),
        Action::Grant { perm, app } => grant_pre(&mut c, perm, app, s, platform),
        Action::Revoke { perm, app } => c.require(granted_perm(app, perm, s), ErrorCode::PermNotGranted),
        Action::GrantPermGroup { group, app } => grant_group_pre(&mut c, group, app, s, platform),
        Action::RevokePermGroup { group, app } => {
            c.require(granted_group(app, group, s), ErrorCode::GroupNotGranted)
        }
        Action::HasPermission { .. } => {}
        Action::Read { ic, cp, uri } => access_pre(&mut c, *ic, cp, uri, OpTy::Read, s, platform),
        Action::Write { ic, cp, uri, .. } => access_pre(&mut c, *ic, cp, uri, OpTy::Write, s, platform),
        Action::StartActivity { intent, ic } | Action::StartActivityRes { intent, ic, .. } => {
            let kind_ok = matches!(
                intent.kind,
                IntentKind::StartActivity | IntentKind::StartActivityForResult(_)
            );
            send_pre(&mut c, intent, *ic, kind_ok, s)
        }
        Action::StartService { intent, ic } => {
            send_pre(&mut c, intent, *ic, matches!(intent.kind, IntentKind::StartService), s)
        }
        Action::SendBroadcast { intent, ic, perm } | Action::SendOrdBroadcast { intent, ic, perm } => {
            let kind_ok = match &intent.kind {
                IntentKind::Broadcast(p) => p == perm,
                IntentKind::OrderedBroadcast(p) => p == perm,
                _ => false,
            };
            send_pre(&mut c, intent, *ic, kind_ok, s)
        }
        Action::SendStickyBroadcast { intent, ic } => {
            send_pre(&mut c, intent, *ic, matches!(intent.kind, IntentKind::StickyBroadcast), s)
        }
        Action::ResolveIntent { intent, app } => resolve_pre(&mut c, intent, app, s),
        Action::ReceiveIntent { intent, ic, app } => receive_pre(&mut c, intent, *ic, app, s, platform),
        Action::Stop { ic } => c.require(s.running.contains_key(ic), ErrorCode::InstanceNotRunning),
        Action::GrantP {
            ic,
            cp,
            app,
            uri,
            op,
        } => grant_p_pre(&mut c, *ic, cp, app, uri, *op, s, platform),
        Action::RevokeDel { ic, cp, uri, .. } => {
            c.require(s.running.contains_key(ic), ErrorCode::InstanceNotRunning);
            match q::find_provider(cp, s) {
                None => c.require(false, ErrorCode::NoSuchProvider),
                Some((_, provider)) => {
                    c.require(provider.resource_map.contains_key(uri), ErrorCode::NoSuchResource)
                }
            }
        }
        Action::Call { ic, sac } => {
            let caller = q::instance_component(*ic, s);
            c.require(caller.is_some(), ErrorCode::InstanceNotRunning);
            let required = platform.syscalls.get(sac);
            c.require(required.is_some(), ErrorCode::UnknownSystemCall);
            if let (Some((app, _)), Some(required)) = (caller, required) {
                let all_held = required.iter().all(|pid| {
                    q::resolve_perm(pid, s, platform).is_some_and(|p| q::app_has_permission(app, &p, s))
                });
                c.require(all_held, ErrorCode::SacPermissionMissing);
            }
        }
    }
    AxiomaticVerdict::from_failures(c.0)
}

/// Whether `ec` is an acceptable error answer to `a` in `s`.
pub fn error_msg(s: &AndroidState, a: &Action, ec: ErrorCode, platform: &Platform) -> bool {
    pre(s, a, platform).acceptable_errors.contains(&ec)
}

// ------------------------------------------------------------ preconditions

fn component_ids_in_state(s: &AndroidState) -> BTreeSet<&CompId> {
    q::all_components(s).into_iter().map(|(_, c)| &c.id).collect()
}

fn perm_ids_defined_by_apps(s: &AndroidState) -> BTreeSet<&PermId> {
    s.installed_apps
        .iter()
        .filter_map(|app| s.defined_perms.get(app))
        .flatten()
        .chain(s.system_image.iter().flat_map(|sa| sa.manifest.defined_perms.iter()))
        .map(|p| &p.id)
        .collect()
}

fn install_pre(c: &mut Conjuncts, app: &AppId, m: &Manifest, s: &AndroidState) {
    let is_app_installed =
        s.installed_apps.contains(app) || s.system_image.iter().any(|sa| &sa.id == app);
    c.require(!is_app_installed, ErrorCode::AppAlreadyInstalled);

    let cmp_ids: BTreeSet<&CompId> = m.components.iter().map(|x| &x.id).collect();
    c.require(cmp_ids.len() == m.components.len(), ErrorCode::DuplicatedCmpId);

    let perm_ids: BTreeSet<&PermId> = m.defined_perms.iter().map(|p| &p.id).collect();
    c.require(perm_ids.len() == m.defined_perms.len(), ErrorCode::DuplicatedPermId);

    let in_state = component_ids_in_state(s);
    c.require(cmp_ids.is_disjoint(&in_state), ErrorCode::CmpAlreadyDefined);

    let auth_perms = perm_ids.is_disjoint(&perm_ids_defined_by_apps(s));
    c.require(auth_perms, ErrorCode::PermAlreadyDefined);

    let filters_ok = m.components.iter().all(|comp| {
        comp.intent_filters.iter().all(|f| {
            f.declared_kind == comp.kind
                && f.accepted_intent_kinds.iter().all(|k| k.receiver_kind() == comp.kind)
        })
    });
    c.require(filters_ok, ErrorCode::FaultyIntentFilter);
}

fn uninstall_pre(c: &mut Conjuncts, app: &AppId, s: &AndroidState) {
    c.require(!q::is_system_app(app, s), ErrorCode::AppIsSystem);
    c.require(s.installed_apps.contains(app), ErrorCode::NoSuchApp);
    if let Some(m) = s.manifests.get(app) {
        let own: BTreeSet<&CompId> = m.components.iter().map(|x| &x.id).collect();
        let idle = s.running.iter().all(|(_, cid)| !own.contains(cid));
        c.require(idle, ErrorCode::AppHasRunningInstances);
    }
}

fn granted_perm(app: &AppId, pid: &PermId, s: &AndroidState) -> bool {
    s.granted_perms.get(app).is_some_and(|ps| ps.contains(pid))
}

fn granted_group(app: &AppId, g: &PermGroupId, s: &AndroidState) -> bool {
    s.granted_groups.get(app).is_some_and(|gs| gs.contains(g))
}

fn grant_pre(c: &mut Conjuncts, pid: &PermId, app: &AppId, s: &AndroidState, platform: &Platform) {
    let manifest = q::get_manifest_for_app(app, s);
    c.require(manifest.is_some(), ErrorCode::NoSuchApp);
    let perm = q::resolve_perm(pid, s, platform);
    c.require(perm.is_some(), ErrorCode::NoSuchPerm);
    if let Some(p) = &perm {
        c.require(p.level == PermLevel::Dangerous, ErrorCode::PermWrongLevel);
        c.require(!q::permission_is_grouped(p), ErrorCode::PermIsGrouped);
    }
    if let Some(m) = manifest {
        c.require(q::get_app_requested_perms(m).contains(pid), ErrorCode::PermNotInManifest);
    }
    c.require(!granted_perm(app, pid, s), ErrorCode::PermAlreadyGranted);
}

fn grant_group_pre(c: &mut Conjuncts, g: &PermGroupId, app: &AppId, s: &AndroidState, platform: &Platform) {
    let manifest = q::get_manifest_for_app(app, s);
    c.require(manifest.is_some(), ErrorCode::NoSuchApp);
    if let Some(m) = manifest {
        let group_requested = m
            .used_perms
            .iter()
            .filter_map(|pid| q::resolve_perm(pid, s, platform))
            .any(|p| p.level == PermLevel::Dangerous && p.group.as_ref() == Some(g));
        c.require(group_requested, ErrorCode::GroupNotInManifest);
    }
    c.require(!granted_group(app, g, s), ErrorCode::GroupAlreadyGranted);
}

/// Caller may `op` (read or write) the resource: same app, exported with the
/// guard held, or delegated.
fn access_allowed(
    caller_app: &AppId,
    ic: InstanceId,
    provider_app: &AppId,
    provider: &Component,
    uri: &Uri,
    op: OpTy,
    s: &AndroidState,
    platform: &Platform,
) -> bool {
    let guard = match op {
        OpTy::Read => q::permission_required_for_read(provider),
        _ => q::permission_required_for_write(provider),
    };
    let guard_held = match guard {
        None => true,
        Some(pid) => {
            q::resolve_perm(pid, s, platform).is_some_and(|p| q::app_has_permission(caller_app, &p, s))
        }
    };
    let by_app = s.del_p_perms.iter().any(|d| {
        &d.app == caller_app && d.provider == provider.id && &d.uri == uri && (d.op == op || d.op == OpTy::Rw)
    });
    let by_instance = s.del_t_perms.iter().any(|d| {
        d.instance == ic && d.provider == provider.id && &d.uri == uri && (d.op == op || d.op == OpTy::Rw)
    });
    caller_app == provider_app || (provider.exported && guard_held) || by_app || by_instance
}

fn denial_code(provider: &Component, op: OpTy) -> ErrorCode {
    if !provider.exported {
        ErrorCode::NotExported
    } else if op == OpTy::Read {
        ErrorCode::NoReadPermission
    } else {
        ErrorCode::NoWritePermission
    }
}

fn access_pre(
    c: &mut Conjuncts,
    ic: InstanceId,
    cp: &CompId,
    uri: &Uri,
    op: OpTy,
    s: &AndroidState,
    platform: &Platform,
) {
    let caller = q::instance_component(ic, s);
    c.require(caller.is_some(), ErrorCode::InstanceNotRunning);
    let provider = q::find_provider(cp, s);
    c.require(provider.is_some(), ErrorCode::NoSuchProvider);
    if let Some((_, prov)) = provider {
        c.require(q::exists_res(prov, uri, s), ErrorCode::NoSuchResource);
    }
    if let (Some((caller_app, _)), Some((provider_app, prov))) = (caller, provider) {
        let ok = access_allowed(caller_app, ic, provider_app, prov, uri, op, s, platform);
        c.require(ok, denial_code(prov, op));
    }
}

fn send_pre(c: &mut Conjuncts, i: &Intent, ic: InstanceId, kind_ok: bool, s: &AndroidState) {
    c.require(s.running.contains_key(&ic), ErrorCode::InstanceNotRunning);
    let used: BTreeSet<&IntentId> = s.sent_intents.iter().map(|si| &si.intent.id).collect();
    c.require(!used.contains(&i.id), ErrorCode::IntentIdInUse);
    c.require(kind_ok, ErrorCode::IntentKindMismatch);
}

/// Components of `app` with a well-formed filter accepting `class`.
fn filter_matches(class: IntentClass, app: &AppId, s: &AndroidState) -> BTreeSet<CompId> {
    let Some(m) = q::get_manifest_for_app(app, s) else {
        return BTreeSet::new();
    };
    m.components
        .iter()
        .filter(|comp| {
            comp.intent_filters.iter().any(|f| f.accepted_intent_kinds.contains(&class))
                && q::cmp_declares_intent_filters_correctly(comp)
        })
        .map(|comp| comp.id.clone())
        .collect()
}

fn resolve_pre(c: &mut Conjuncts, iid: &IntentId, app: &AppId, s: &AndroidState) {
    let entry = s.sent_intents.iter().find(|si| &si.intent.id == iid);
    c.require(entry.is_some(), ErrorCode::IntentNotPending);
    let present = q::is_app_present(app, s);
    c.require(present, ErrorCode::NoSuchApp);
    if let Some(si) = entry {
        c.require(si.intent.target.is_none(), ErrorCode::IntentAlreadyResolved);
        if present {
            let found = !filter_matches(si.intent.kind.class(), app, s).is_empty();
            c.require(found, ErrorCode::IntentNotResolvable);
        }
    }
}

fn receive_pre(
    c: &mut Conjuncts,
    iid: &IntentId,
    ic: InstanceId,
    app: &AppId,
    s: &AndroidState,
    platform: &Platform,
) {
    let sender = q::instance_component(ic, s);
    c.require(sender.is_some(), ErrorCode::InstanceNotRunning);
    let entry = s
        .sent_intents
        .iter()
        .find(|si| si.sender == ic && &si.intent.id == iid);
    c.require(entry.is_some(), ErrorCode::IntentNotPending);
    let Some(si) = entry else { return };
    c.require(si.intent.target.is_some(), ErrorCode::IntentNotResolved);
    let Some(target) = &si.intent.target else { return };
    let receiver = q::get_manifest_for_app(app, s)
        .and_then(|m| m.components.iter().find(|comp| &comp.id == target));
    c.require(receiver.is_some(), ErrorCode::TargetNotInApp);
    let Some(receiver) = receiver else { return };
    let class = si.intent.kind.class();
    let kind_ok = match class {
        IntentClass::ActivityStart => receiver.kind == crate::model::ComponentKind::Activity,
        IntentClass::ServiceStart => receiver.kind == crate::model::ComponentKind::Service,
        IntentClass::Broadcast => receiver.kind == crate::model::ComponentKind::BroadcastReceiver,
    };
    c.require(kind_ok, ErrorCode::IntentKindMismatch);
    let guard_ok = match &si.intent.kind {
        IntentKind::Broadcast(Some(pid)) | IntentKind::OrderedBroadcast(Some(pid)) => {
            q::resolve_perm(pid, s, platform).is_some_and(|p| q::app_has_permission(app, &p, s))
        }
        IntentKind::Broadcast(None) | IntentKind::OrderedBroadcast(None) | IntentKind::StickyBroadcast => true,
        _ => match sender {
            Some((_, sender_cmp)) => q::can_start(sender_cmp, receiver, s, platform),
            None => false,
        },
    };
    c.require(guard_ok, ErrorCode::GuardNotSatisfied);
}

#[allow(clippy::too_many_arguments)]
fn grant_p_pre(
    c: &mut Conjuncts,
    ic: InstanceId,
    cp: &CompId,
    app: &AppId,
    uri: &Uri,
    pt: OpTy,
    s: &AndroidState,
    platform: &Platform,
) {
    let caller = q::instance_component(ic, s);
    c.require(caller.is_some(), ErrorCode::InstanceNotRunning);
    c.require(q::is_app_present(app, s), ErrorCode::NoSuchApp);
    let provider = q::find_provider(cp, s);
    c.require(provider.is_some(), ErrorCode::NoSuchProvider);
    let Some((provider_app, prov)) = provider else { return };
    c.require(q::can_grant(prov, uri, s), ErrorCode::CannotGrantUri);
    c.require(q::exists_res(prov, uri, s), ErrorCode::NoSuchResource);
    c.require(q::component_is_exported(prov), ErrorCode::NotExported);
    if let Some((caller_app, _)) = caller {
        if matches!(pt, OpTy::Read | OpTy::Rw) {
            let ok = access_allowed(caller_app, ic, provider_app, prov, uri, OpTy::Read, s, platform);
            c.require(ok, ErrorCode::NoReadPermission);
        }
        if matches!(pt, OpTy::Write | OpTy::Rw) {
            let ok = access_allowed(caller_app, ic, provider_app, prov, uri, OpTy::Write, s, platform);
            c.require(ok, ErrorCode::NoWritePermission);
        }
    }
}

// ----------------------------------------------------------- postconditions

/// The twelve state components, for frame conditions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Field {
    InstalledApps,
    GrantedGroups,
    GrantedPerms,
    Running,
    DelPPerms,
    DelTPerms,
    Resources,
    SentIntents,
    Manifests,
    Certs,
    DefinedPerms,
    SystemImage,
}

/// All components not listed in `changed` are equal in `s` and `s2`.
fn same_other_fields(s: &AndroidState, s2: &AndroidState, changed: &[Field]) -> bool {
    let keep = |f: Field| !changed.contains(&f);
    (!keep(Field::InstalledApps) || s.installed_apps == s2.installed_apps)
        && (!keep(Field::GrantedGroups) || s.granted_groups == s2.granted_groups)
        && (!keep(Field::GrantedPerms) || s.granted_perms == s2.granted_perms)
        && (!keep(Field::Running) || s.running == s2.running)
        && (!keep(Field::DelPPerms) || s.del_p_perms == s2.del_p_perms)
        && (!keep(Field::DelTPerms) || s.del_t_perms == s2.del_t_perms)
        && (!keep(Field::Resources) || s.resources == s2.resources)
        && (!keep(Field::SentIntents) || s.sent_intents == s2.sent_intents)
        && (!keep(Field::Manifests) || s.manifests == s2.manifests)
        && (!keep(Field::Certs) || s.certs == s2.certs)
        && (!keep(Field::DefinedPerms) || s.defined_perms == s2.defined_perms)
        && (!keep(Field::SystemImage) || s.system_image == s2.system_image)
}

/// `new` is `old` with `key` bound to `value` (added or overwritten) and
/// every other binding untouched.
fn binds<K: Ord, V: PartialEq>(old: &FiniteMap<K, V>, new: &FiniteMap<K, V>, key: &K, value: &V) -> bool {
    let mut expected_keys = old.key_set();
    expected_keys.insert(key);
    !new.has_duplicate_keys()
        && new.key_set() == expected_keys
        && new.get(key) == Some(value)
        && old.keys().filter(|k| *k != key).all(|k| new.get(k) == old.get(k))
}

/// `new` is `old` restricted to the keys satisfying `keep`.
fn restricts<K: Ord, V: PartialEq>(
    old: &FiniteMap<K, V>,
    new: &FiniteMap<K, V>,
    keep: impl Fn(&K) -> bool,
) -> bool {
    let expected: BTreeSet<&K> = old.keys().filter(|k| keep(k)).collect();
    new.key_set() == expected && expected.iter().all(|k| new.get(k) == old.get(k))
}

pub fn post(s: &AndroidState, a: &Action, s2: &AndroidState, platform: &Platform) -> bool {
    use Field::*;
    match a {
        Action::Install {
            app,
            manifest,
            cert,
            resources,
        } => {
            let add_manifest = binds(&s.manifests, &s2.manifests, app, manifest);
            let add_cert = binds(&s.certs, &s2.certs, app, cert);
            let non_system: BTreeSet<_> = manifest
                .defined_perms
                .iter()
                .filter(|p| !platform.is_builtin(&p.id))
                .cloned()
                .collect();
            let add_def_perms = binds(&s.defined_perms, &s2.defined_perms, app, &non_system);
            let mut apps = s.installed_apps.clone();
            apps.insert(app.clone());
            let add_app = s2.installed_apps == apps;
            let add_res = {
                let mut keys = s.resources.key_set();
                let new_keys: Vec<_> = resources.iter().map(|r| (app.clone(), r.clone())).collect();
                keys.extend(new_keys.iter());
                !s2.resources.has_duplicate_keys()
                    && s2.resources.key_set() == keys
                    && new_keys.iter().all(|k| s2.resources.get(k) == Some(&default_value()))
                    && s
                        .resources
                        .keys()
                        .filter(|k| !new_keys.contains(k))
                        .all(|k| s2.resources.get(k) == s.resources.get(k))
            };
            let init_perm_lists = binds(&s.granted_perms, &s2.granted_perms, app, &BTreeSet::new())
                && binds(&s.granted_groups, &s2.granted_groups, app, &BTreeSet::new());
            let frame = same_other_fields(
                s,
                s2,
                &[InstalledApps, GrantedGroups, GrantedPerms, Resources, Manifests, Certs, DefinedPerms],
            );
            add_manifest && add_cert && add_def_perms && add_app && add_res && init_perm_lists && frame
        }
        Action::Uninstall { app } => {
            let comps: BTreeSet<&CompId> = s
                .manifests
                .get(app)
                .map(|m| m.components.iter().map(|x| &x.id).collect())
                .unwrap_or_default();
            let own_perms: BTreeSet<&PermId> = s
                .defined_perms
                .get(app)
                .map(|ps| ps.iter().map(|p| &p.id).collect())
                .unwrap_or_default();
            let mut apps = s.installed_apps.clone();
            apps.remove(app);
            let not_app = |k: &AppId| k != app;
            let perms_ok = {
                let expected: BTreeSet<&AppId> = s.granted_perms.keys().filter(|k| not_app(k)).collect();
                s2.granted_perms.key_set() == expected
                    && expected.iter().all(|k| {
                        let before = s.granted_perms.get(k).unwrap();
                        let after: BTreeSet<&PermId> =
                            before.iter().filter(|p| !own_perms.contains(p)).collect();
                        s2.granted_perms.get(k).map(|x| x.iter().collect::<BTreeSet<_>>()) == Some(after)
                    })
            };
            let del_p: BTreeSet<PermanentDelegation> = s
                .del_p_perms
                .iter()
                .filter(|d| &d.app != app && !comps.contains(&d.provider))
                .cloned()
                .collect();
            let del_t: BTreeSet<TemporaryDelegation> = s
                .del_t_perms
                .iter()
                .filter(|d| !comps.contains(&d.provider))
                .cloned()
                .collect();
            s2.installed_apps == apps
                && restricts(&s.granted_groups, &s2.granted_groups, not_app)
                && perms_ok
                && restricts(&s.manifests, &s2.manifests, not_app)
                && restricts(&s.certs, &s2.certs, not_app)
                && restricts(&s.defined_perms, &s2.defined_perms, not_app)
                && restricts(&s.resources, &s2.resources, |(owner, _)| owner != app)
                && s2.del_p_perms == del_p
                && s2.del_t_perms == del_t
                && same_other_fields(
                    s,
                    s2,
                    &[
                        InstalledApps, GrantedGroups, GrantedPerms, Manifests, Certs, DefinedPerms,
                        Resources, DelPPerms, DelTPerms,
                    ],
                )
        }
        Action::Grant { perm, app } | Action::Revoke { perm, app } => {
            let mut expected = s.granted_perms.get(app).cloned().unwrap_or_default();
            if matches!(a, Action::Grant { .. }) {
                expected.insert(perm.clone());
            } else {
                expected.remove(perm);
            }
            binds(&s.granted_perms, &s2.granted_perms, app, &expected)
                && same_other_fields(s, s2, &[GrantedPerms])
        }
        Action::GrantPermGroup { group, app } | Action::RevokePermGroup { group, app } => {
            let mut expected = s.granted_groups.get(app).cloned().unwrap_or_default();
            if matches!(a, Action::GrantPermGroup { .. }) {
                expected.insert(group.clone());
            } else {
                expected.remove(group);
            }
            binds(&s.granted_groups, &s2.granted_groups, app, &expected)
                && same_other_fields(s, s2, &[GrantedGroups])
        }
        Action::HasPermission { .. } | Action::Read { .. } | Action::Call { .. } => s2 == s,
        Action::Write { cp, uri, value, .. } => {
            let Some((owner, prov)) = q::find_provider(cp, s) else {
                return false;
            };
            let Some(res) = prov.resource_map.get(uri) else {
                return false;
            };
            binds(&s.resources, &s2.resources, &(owner.clone(), res.clone()), value)
                && same_other_fields(s, s2, &[Resources])
        }
        Action::StartActivity { intent, ic }
        | Action::StartActivityRes { intent, ic, .. }
        | Action::StartService { intent, ic }
        | Action::SendBroadcast { intent, ic, .. }
        | Action::SendOrdBroadcast { intent, ic, .. }
        | Action::SendStickyBroadcast { intent, ic } => {
            let entry = SentIntent {
                sender: *ic,
                intent: intent.clone(),
            };
            let mut expected = s.sent_intents.clone();
            expected.insert(entry);
            s2.sent_intents == expected && same_other_fields(s, s2, &[SentIntents])
        }
        Action::ResolveIntent { intent, app } => {
            let Some(si) = s.sent_intents.iter().find(|si| &si.intent.id == intent) else {
                return false;
            };
            let Some(target) = filter_matches(si.intent.kind.class(), app, s).into_iter().next() else {
                return false;
            };
            let mut resolved = si.clone();
            resolved.intent.target = Some(target);
            let mut expected: BTreeSet<SentIntent> =
                s.sent_intents.iter().filter(|x| *x != si).cloned().collect();
            expected.insert(resolved);
            s2.sent_intents == expected && same_other_fields(s, s2, &[SentIntents])
        }
        Action::ReceiveIntent { intent, ic, .. } => {
            let Some(si) = s
                .sent_intents
                .iter()
                .find(|si| si.sender == *ic && &si.intent.id == intent)
            else {
                return false;
            };
            let Some(target) = &si.intent.target else {
                return false;
            };
            let new_keys: Vec<&InstanceId> =
                s2.running.keys().filter(|k| !s.running.contains_key(k)).collect();
            let fresh_ok = match new_keys.as_slice() {
                [k] => !q::instance_ids_in_use(s).contains(k) && s2.running.get(k) == Some(target),
                _ => false,
            };
            let running_ok = fresh_ok
                && !s2.running.has_duplicate_keys()
                && s.running.iter().all(|(k, v)| s2.running.get(k) == Some(v));
            let sent_ok = if si.intent.kind == IntentKind::StickyBroadcast {
                s2.sent_intents == s.sent_intents
            } else {
                let expected: BTreeSet<SentIntent> =
                    s.sent_intents.iter().filter(|x| *x != si).cloned().collect();
                s2.sent_intents == expected
            };
            running_ok && sent_ok && same_other_fields(s, s2, &[Running, SentIntents])
        }
        Action::Stop { ic } => {
            let del_t: BTreeSet<TemporaryDelegation> =
                s.del_t_perms.iter().filter(|d| d.instance != *ic).cloned().collect();
            restricts(&s.running, &s2.running, |k| k != ic)
                && s2.del_t_perms == del_t
                && same_other_fields(s, s2, &[Running, DelTPerms])
        }
        Action::GrantP {
            cp, app, uri, op, ..
        } => {
            let mut expected = s.del_p_perms.clone();
            expected.insert(PermanentDelegation {
                app: app.clone(),
                provider: cp.clone(),
                uri: uri.clone(),
                op: *op,
            });
            s2.del_p_perms == expected && same_other_fields(s, s2, &[DelPPerms])
        }
        Action::RevokeDel { cp, uri, op, .. } => {
            let revoked = |provider: &CompId, u: &Uri, mode: OpTy| {
                provider == cp && u == uri && (*op == OpTy::Rw || *op == mode)
            };
            let del_p: BTreeSet<_> = s
                .del_p_perms
                .iter()
                .filter(|d| !revoked(&d.provider, &d.uri, d.op))
                .cloned()
                .collect();
            let del_t: BTreeSet<_> = s
                .del_t_perms
                .iter()
                .filter(|d| !revoked(&d.provider, &d.uri, d.op))
                .cloned()
                .collect();
            s2.del_p_perms == del_p
                && s2.del_t_perms == del_t
                && same_other_fields(s, s2, &[DelPPerms, DelTPerms])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cert, ComponentKind, Perm, ResId};

    fn install(app: &str, comps: Vec<Component>) -> Action {
        Action::Install {
            app: app.into(),
            manifest: Manifest {
                components: comps,
                ..Manifest::default()
            },
            cert: Cert::from("k"),
            resources: vec![ResId::from("r")],
        }
    }

    fn installed_state(p: &Platform) -> AndroidState {
        crate::exec::step(&AndroidState::empty(), &install("a", vec![]), p).st
    }

    #[test]
    fn fresh_install_pre_holds() {
        let p = Platform::default();
        let v = pre(&AndroidState::empty(), &install("a", vec![]), &p);
        assert!(v.pre_holds);
        assert!(v.acceptable_errors.is_empty());
    }

    #[test]
    fn reinstall_admits_app_already_installed() {
        let p = Platform::default();
        let s = installed_state(&p);
        let a = install("a", vec![]);
        assert!(error_msg(&s, &a, ErrorCode::AppAlreadyInstalled, &p));
        assert!(!error_msg(&AndroidState::empty(), &a, ErrorCode::AppAlreadyInstalled, &p));
    }

    #[test]
    fn relation_admits_every_failing_install_guard() {
        let p = Platform::default();
        let s = installed_state(&p);
        let dup = install(
            "a",
            vec![
                Component::new("x", ComponentKind::Activity),
                Component::new("x", ComponentKind::Service),
            ],
        );
        let v = pre(&s, &dup, &p);
        assert!(v.acceptable_errors.contains(&ErrorCode::AppAlreadyInstalled));
        assert!(v.acceptable_errors.contains(&ErrorCode::DuplicatedCmpId));
        assert!(error_msg(&s, &dup, ErrorCode::DuplicatedCmpId, &p));
    }

    #[test]
    fn grouped_grant_never_holds() {
        let p = Platform::sample();
        let s = crate::exec::step(
            &AndroidState::empty(),
            &Action::Install {
                app: "a".into(),
                manifest: Manifest {
                    used_perms: ["READ_CONTACTS".into()].into(),
                    ..Manifest::default()
                },
                cert: "k".into(),
                resources: vec![],
            },
            &p,
        )
        .st;
        let v = pre(&s, &Action::Grant { perm: "READ_CONTACTS".into(), app: "a".into() }, &p);
        assert!(!v.pre_holds);
        assert!(v.acceptable_errors.contains(&ErrorCode::PermIsGrouped));
    }

    #[test]
    fn install_post_rejects_unchanged_state() {
        let p = Platform::default();
        let s = AndroidState::empty();
        assert!(!post(&s, &install("a", vec![]), &s, &p));
        let s2 = crate::exec::step(&s, &install("a", vec![]), &p).st;
        assert!(post(&s, &install("a", vec![]), &s2, &p));
    }

    #[test]
    fn has_permission_post_is_identity() {
        let p = Platform::default();
        let s = installed_state(&p);
        let a = Action::HasPermission { perm: "X".into(), app: "a".into() };
        assert!(post(&s, &a, &s, &p));
        assert!(!post(&s, &a, &AndroidState::empty(), &p));
        assert!(pre(&AndroidState::empty(), &a, &p).pre_holds);
    }

    #[test]
    fn no_error_is_acceptable_when_pre_holds() {
        let p = Platform::default();
        let a = install("a", vec![]);
        for ec in ErrorCode::ALL {
            assert!(!error_msg(&AndroidState::empty(), &a, *ec, &p));
        }
    }

    #[test]
    fn normal_syscall_perm_listed_allows_call() {
        let p = Platform::sample();
        let mut s = crate::exec::step(
            &AndroidState::empty(),
            &Action::Install {
                app: "a".into(),
                manifest: Manifest {
                    components: vec![Component::new("a.main", ComponentKind::Activity)],
                    used_perms: ["INTERNET".into()].into(),
                    ..Manifest::default()
                },
                cert: "k".into(),
                resources: vec![],
            },
            &p,
        )
        .st;
        s.running.insert(InstanceId(0), "a.main".into());
        let call = Action::Call { ic: InstanceId(0), sac: "openSocket".into() };
        assert!(pre(&s, &call, &p).pre_holds);
        let camera = Action::Call { ic: InstanceId(0), sac: "takePicture".into() };
        assert_eq!(
            pre(&s, &camera, &p).acceptable_errors,
            BTreeSet::from([ErrorCode::SacPermissionMissing])
        );
        let _ = Perm::new("unused", None, PermLevel::Normal);
    }
}
