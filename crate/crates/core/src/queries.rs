//! Helper functions and predicates over a state, shared by the axiomatic and
//! the executable semantics.
//!
//! Everything here is total: lookups that can fail return `Option`, and
//! predicates about absent apps or components are simply false.

use std::collections::BTreeSet;

use crate::model::{
    AndroidState, AppId, Cert, CompId, Component, InstanceId, Manifest, OpTy, Perm, PermGroupId,
    PermId, PermLevel, Platform, SysImgApp, Uri,
};

pub fn get_installed_apps(s: &AndroidState) -> &BTreeSet<AppId> {
    &s.installed_apps
}

pub fn system_app<'a>(app: &AppId, s: &'a AndroidState) -> Option<&'a SysImgApp> {
    s.system_image.iter().find(|sa| &sa.id == app)
}

pub fn is_system_app(app: &AppId, s: &AndroidState) -> bool {
    system_app(app, s).is_some()
}

/// Installed by the user or shipped with the system image.
pub fn is_app_present(app: &AppId, s: &AndroidState) -> bool {
    s.installed_apps.contains(app) || is_system_app(app, s)
}

/// Ids of every app present on the device.
pub fn present_apps(s: &AndroidState) -> BTreeSet<&AppId> {
    s.installed_apps
        .iter()
        .chain(s.system_image.iter().map(|sa| &sa.id))
        .collect()
}

pub fn get_manifest_for_app<'a>(app: &AppId, s: &'a AndroidState) -> Option<&'a Manifest> {
    if s.installed_apps.contains(app) {
        if let Some(m) = s.manifests.get(app) {
            return Some(m);
        }
    }
    system_app(app, s).map(|sa| &sa.manifest)
}

pub fn get_cert_for_app<'a>(app: &AppId, s: &'a AndroidState) -> Option<&'a Cert> {
    if s.installed_apps.contains(app) {
        if let Some(c) = s.certs.get(app) {
            return Some(c);
        }
    }
    system_app(app, s).map(|sa| &sa.cert)
}

/// Permissions defined by `app`. For system apps these come straight from
/// their manifest.
pub fn get_def_perms_for_app(app: &AppId, s: &AndroidState) -> BTreeSet<Perm> {
    if let Some(ps) = s.defined_perms.get(app) {
        return ps.clone();
    }
    system_app(app, s)
        .map(|sa| sa.manifest.defined_perms.iter().cloned().collect())
        .unwrap_or_default()
}

pub fn get_granted_perms_for_app<'a>(app: &AppId, s: &'a AndroidState) -> Option<&'a BTreeSet<PermId>> {
    s.granted_perms.get(app)
}

pub fn get_granted_groups_for_app<'a>(
    app: &AppId,
    s: &'a AndroidState,
) -> Option<&'a BTreeSet<PermGroupId>> {
    s.granted_groups.get(app)
}

pub fn get_running_components(s: &AndroidState) -> impl Iterator<Item = (&InstanceId, &CompId)> {
    s.running.iter()
}

pub fn is_running(ic: InstanceId, s: &AndroidState) -> bool {
    s.running.contains_key(&ic)
}

/// Every (app, manifest) pair of present apps: installed apps first, then
/// the system image.
pub fn app_manifests(s: &AndroidState) -> Vec<(&AppId, &Manifest)> {
    let mut out: Vec<(&AppId, &Manifest)> = s
        .manifests
        .iter()
        .filter(|(app, _)| s.installed_apps.contains(*app))
        .collect();
    out.extend(s.system_image.iter().map(|sa| (&sa.id, &sa.manifest)));
    out
}

/// Every component declared by a present app, with its owner.
pub fn all_components(s: &AndroidState) -> Vec<(&AppId, &Component)> {
    app_manifests(s)
        .into_iter()
        .flat_map(|(app, m)| m.components.iter().map(move |c| (app, c)))
        .collect()
}

pub fn find_component<'a>(cid: &CompId, s: &'a AndroidState) -> Option<(&'a AppId, &'a Component)> {
    all_components(s).into_iter().find(|(_, c)| &c.id == cid)
}

pub fn get_app_from_cmp<'a>(cid: &CompId, s: &'a AndroidState) -> Option<&'a AppId> {
    find_component(cid, s).map(|(app, _)| app)
}

pub fn in_app(cid: &CompId, app: &AppId, s: &AndroidState) -> bool {
    get_manifest_for_app(app, s).is_some_and(|m| m.components.iter().any(|c| &c.id == cid))
}

/// The content provider `cid` together with its owning app.
pub fn find_provider<'a>(cid: &CompId, s: &'a AndroidState) -> Option<(&'a AppId, &'a Component)> {
    find_component(cid, s).filter(|(_, c)| c.is_provider())
}

/// The component a running instance executes, with its owning app.
pub fn instance_component<'a>(
    ic: InstanceId,
    s: &'a AndroidState,
) -> Option<(&'a AppId, &'a Component)> {
    s.running.get(&ic).and_then(|cid| find_component(cid, s))
}

pub fn cmp_protected_by_perm(c: &Component) -> Option<&PermId> {
    c.required_perm.as_ref()
}

pub fn component_is_exported(c: &Component) -> bool {
    c.exported
}

pub fn exists_res(cp: &Component, u: &Uri, _s: &AndroidState) -> bool {
    cp.is_provider() && cp.resource_map.contains_key(u)
}

pub fn permission_required_for_read(c: &Component) -> Option<&PermId> {
    if c.is_provider() {
        c.read_perm.as_ref()
    } else {
        None
    }
}

pub fn permission_required_for_write(c: &Component) -> Option<&PermId> {
    if c.is_provider() {
        c.write_perm.as_ref()
    } else {
        None
    }
}

pub fn get_app_requested_perms(m: &Manifest) -> &BTreeSet<PermId> {
    &m.used_perms
}

pub fn get_permission_id(p: &Perm) -> &PermId {
    &p.id
}

pub fn get_permission_level(p: &Perm) -> PermLevel {
    p.level
}

pub fn permission_is_grouped(p: &Perm) -> bool {
    p.group.is_some()
}

/// The app that defines permission `pid`, if any app does.
pub fn definer_of<'a>(pid: &PermId, s: &'a AndroidState) -> Option<&'a AppId> {
    s.defined_perms
        .iter()
        .find(|(app, ps)| s.installed_apps.contains(*app) && ps.iter().any(|p| &p.id == pid))
        .map(|(app, _)| app)
        .or_else(|| {
            s.system_image
                .iter()
                .find(|sa| sa.manifest.defined_perms.iter().any(|p| &p.id == pid))
                .map(|sa| &sa.id)
        })
}

/// Looks a permission id up among the platform permissions, the permissions
/// defined by installed apps and those defined by system apps.
pub fn resolve_perm(pid: &PermId, s: &AndroidState, platform: &Platform) -> Option<Perm> {
    if let Some(p) = platform.builtin(pid) {
        return Some(p.clone());
    }
    s.defined_perms
        .iter()
        .filter(|(app, _)| s.installed_apps.contains(*app))
        .flat_map(|(_, ps)| ps.iter())
        .chain(s.system_image.iter().flat_map(|sa| sa.manifest.defined_perms.iter()))
        .find(|p| &p.id == pid)
        .cloned()
}

pub fn is_manufacturer_signed(app: &AppId, s: &AndroidState) -> bool {
    system_app(app, s).is_some_and(|sa| sa.is_manufacturer_signed)
}

fn signed_like_definer(app: &AppId, p: &Perm, s: &AndroidState) -> bool {
    match definer_of(&p.id, s) {
        Some(definer) => match (get_cert_for_app(app, s), get_cert_for_app(definer, s)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        },
        // Platform permissions are defined by the device manufacturer.
        None => is_manufacturer_signed(app, s),
    }
}

/// Whether `app` holds permission `p`.
pub fn app_has_permission(app: &AppId, p: &Perm, s: &AndroidState) -> bool {
    let Some(manifest) = get_manifest_for_app(app, s) else {
        return false;
    };
    if get_def_perms_for_app(app, s).iter().any(|d| d.id == p.id) {
        return true;
    }
    if !manifest.used_perms.contains(&p.id) {
        return false;
    }
    match p.level {
        PermLevel::Normal => true,
        PermLevel::Dangerous => match &p.group {
            Some(g) => get_granted_groups_for_app(app, s).is_some_and(|gs| gs.contains(g)),
            None => get_granted_perms_for_app(app, s).is_some_and(|ps| ps.contains(&p.id)),
        },
        PermLevel::Signature => signed_like_definer(app, p, s),
        PermLevel::SignatureOrSystem => {
            signed_like_definer(app, p, s) || is_manufacturer_signed(app, s)
        }
    }
}

/// Like [`app_has_permission`] but starting from an id; unknown ids are not held.
pub fn app_has_permission_id(app: &AppId, pid: &PermId, s: &AndroidState, platform: &Platform) -> bool {
    resolve_perm(pid, s, platform).is_some_and(|p| app_has_permission(app, &p, s))
}

pub fn can_grant(cp: &Component, u: &Uri, _s: &AndroidState) -> bool {
    cp.is_provider() && cp.grant_uris.contains(u)
}

/// Whether the app owning `caller` may create a running instance of `callee`.
pub fn can_start(caller: &Component, callee: &Component, s: &AndroidState, platform: &Platform) -> bool {
    let (Some(caller_app), Some(callee_app)) =
        (get_app_from_cmp(&caller.id, s), get_app_from_cmp(&callee.id, s))
    else {
        return false;
    };
    if caller_app == callee_app {
        return true;
    }
    if !callee.exported {
        return false;
    }
    let app_guard = get_manifest_for_app(callee_app, s).and_then(|m| m.app_required_perm.as_ref());
    [callee.required_perm.as_ref(), app_guard]
        .into_iter()
        .flatten()
        .all(|g| app_has_permission_id(caller_app, g, s, platform))
}

pub fn delegated_access(
    caller_app: &AppId,
    caller_inst: InstanceId,
    cp: &Component,
    u: &Uri,
    op: OpTy,
    s: &AndroidState,
) -> bool {
    s.del_p_perms
        .iter()
        .any(|d| &d.app == caller_app && d.provider == cp.id && &d.uri == u && d.op.covers(op))
        || s.del_t_perms.iter().any(|d| {
            d.instance == caller_inst && d.provider == cp.id && &d.uri == u && d.op.covers(op)
        })
}

/// Whether the instance `ic` of `caller_app` may perform `op` (read or
/// write) on `u` of provider `cp` owned by `provider_app`: own provider,
/// delegation, or exported with the guard held.
#[allow(clippy::too_many_arguments)]
pub fn may_access(
    caller_app: &AppId,
    ic: InstanceId,
    cp: &Component,
    provider_app: &AppId,
    u: &Uri,
    op: OpTy,
    s: &AndroidState,
    platform: &Platform,
) -> bool {
    if caller_app == provider_app || delegated_access(caller_app, ic, cp, u, op, s) {
        return true;
    }
    let guard = match op {
        OpTy::Read => permission_required_for_read(cp),
        OpTy::Write => permission_required_for_write(cp),
        OpTy::Rw => {
            return may_access(caller_app, ic, cp, provider_app, u, OpTy::Read, s, platform)
                && may_access(caller_app, ic, cp, provider_app, u, OpTy::Write, s, platform)
        }
    };
    cp.exported && guard.is_none_or(|g| app_has_permission_id(caller_app, g, s, platform))
}

/// An intent filter is well-formed when it is attached to a component of
/// its declared kind and only accepts intents that kind can receive.
pub fn cmp_declares_intent_filters_correctly(c: &Component) -> bool {
    c.intent_filters.iter().all(|f| {
        f.declared_kind == c.kind
            && f.accepted_intent_kinds
                .iter()
                .all(|k| k.receiver_kind() == c.kind)
    })
}

/// Every InstanceId mentioned anywhere in the state.
pub fn instance_ids_in_use(s: &AndroidState) -> BTreeSet<InstanceId> {
    s.running
        .keys()
        .copied()
        .chain(s.del_t_perms.iter().map(|d| d.instance))
        .chain(s.sent_intents.iter().map(|si| si.sender))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ComponentKind, IntentFilter, IntentClass};

    fn app(id: &str, comps: Vec<Component>, used: &[&str]) -> (AppId, Manifest) {
        (
            AppId::from(id),
            Manifest {
                components: comps,
                used_perms: used.iter().map(|p| PermId::from(*p)).collect(),
                ..Manifest::default()
            },
        )
    }

    fn install_raw(s: &mut AndroidState, (id, m): (AppId, Manifest), cert: &str, defs: Vec<Perm>) {
        s.installed_apps.insert(id.clone());
        s.manifests.insert(id.clone(), m);
        s.certs.insert(id.clone(), Cert::from(cert));
        s.defined_perms.insert(id.clone(), defs.into_iter().collect());
        s.granted_perms.insert(id.clone(), BTreeSet::new());
        s.granted_groups.insert(id, BTreeSet::new());
    }

    fn fixture() -> (AndroidState, Platform) {
        let platform = Platform::sample();
        let mut s = AndroidState::empty();
        install_raw(
            &mut s,
            app(
                "owner",
                vec![Component::new("owner.act", ComponentKind::Activity)
                    .exported(true)
                    .guarded_by("owner.SECRET")],
                &[],
            ),
            "k-owner",
            vec![
                Perm::new("owner.SECRET", None, PermLevel::Dangerous),
                Perm::new("owner.SIG", None, PermLevel::Signature),
            ],
        );
        install_raw(
            &mut s,
            app(
                "alice",
                vec![Component::new("alice.main", ComponentKind::Activity)],
                &["INTERNET", "CAMERA", "READ_CONTACTS", "owner.SECRET", "owner.SIG"],
            ),
            "k-alice",
            vec![],
        );
        (s, platform)
    }

    fn perm(pid: &str, s: &AndroidState, p: &Platform) -> Perm {
        resolve_perm(&PermId::from(pid), s, p).unwrap()
    }

    #[test]
    fn normal_perm_listed_is_held_without_grant() {
        let (s, p) = fixture();
        assert!(app_has_permission(&"alice".into(), &perm("INTERNET", &s, &p), &s));
    }

    #[test]
    fn grouped_dangerous_held_through_group_only() {
        let (mut s, p) = fixture();
        let rc = perm("READ_CONTACTS", &s, &p);
        let alice = AppId::from("alice");
        assert!(!app_has_permission(&alice, &rc, &s));
        s.granted_groups.get_mut(&alice).unwrap().insert("CONTACTS".into());
        assert!(app_has_permission(&alice, &rc, &s));
        assert!(!s.granted_perms.get(&alice).unwrap().contains(&rc.id));
    }

    #[test]
    fn ungrouped_dangerous_needs_individual_grant() {
        let (mut s, p) = fixture();
        let cam = perm("CAMERA", &s, &p);
        let alice = AppId::from("alice");
        assert!(!app_has_permission(&alice, &cam, &s));
        s.granted_perms.get_mut(&alice).unwrap().insert(cam.id.clone());
        assert!(app_has_permission(&alice, &cam, &s));
    }

    #[test]
    fn unlisted_permission_is_not_held() {
        let (mut s, p) = fixture();
        let sensors = perm("BODY_SENSORS", &s, &p);
        let alice = AppId::from("alice");
        s.granted_perms.get_mut(&alice).unwrap().insert(sensors.id.clone());
        assert!(!app_has_permission(&alice, &sensors, &s));
    }

    #[test]
    fn self_defined_permission_is_held() {
        let (s, p) = fixture();
        assert!(app_has_permission(&"owner".into(), &perm("owner.SECRET", &s, &p), &s));
    }

    #[test]
    fn signature_requires_same_cert() {
        let (mut s, p) = fixture();
        let sig = perm("owner.SIG", &s, &p);
        let alice = AppId::from("alice");
        assert!(!app_has_permission(&alice, &sig, &s));
        s.certs.insert(alice.clone(), Cert::from("k-owner"));
        assert!(app_has_permission(&alice, &sig, &s));
    }

    #[test]
    fn can_start_branches() {
        let (mut s, p) = fixture();
        let caller = find_component(&"alice.main".into(), &s).unwrap().1.clone();
        let callee = find_component(&"owner.act".into(), &s).unwrap().1.clone();
        assert!(can_start(&caller, &caller, &s, &p));
        assert!(!can_start(&caller, &callee, &s, &p));
        s.granted_perms.get_mut(&"alice".into()).unwrap().insert("owner.SECRET".into());
        assert!(can_start(&caller, &callee, &s, &p));
    }

    #[test]
    fn exported_unguarded_callee_can_be_started() {
        let (mut s, p) = fixture();
        let open = Component::new("owner.open", ComponentKind::Service).exported(true);
        let owner = AppId::from("owner");
        s.manifests.get_mut(&owner).unwrap().components.push(open.clone());
        let caller = find_component(&"alice.main".into(), &s).unwrap().1.clone();
        assert!(can_start(&caller, &open, &s, &p));
        let hidden = Component::new("owner.hidden", ComponentKind::Service);
        s.manifests.get_mut(&owner).unwrap().components.push(hidden.clone());
        assert!(!can_start(&caller, &hidden, &s, &p));
    }

    #[test]
    fn delegation_modes() {
        let mut s = AndroidState::empty();
        let cp = Component::new("cp", ComponentKind::ContentProvider);
        let u = Uri::from("content://x");
        let app = AppId::from("a");
        assert!(!delegated_access(&app, InstanceId(1), &cp, &u, OpTy::Read, &s));
        s.del_p_perms.insert(crate::model::PermanentDelegation {
            app: app.clone(),
            provider: cp.id.clone(),
            uri: u.clone(),
            op: OpTy::Rw,
        });
        assert!(delegated_access(&app, InstanceId(1), &cp, &u, OpTy::Write, &s));
        assert!(delegated_access(&app, InstanceId(1), &cp, &u, OpTy::Read, &s));
    }

    #[test]
    fn can_grant_is_membership() {
        let mut cp = Component::new("cp", ComponentKind::ContentProvider);
        cp.resource_map.insert("u".into(), "r".into());
        cp.grant_uris.insert("u".into());
        let s = AndroidState::empty();
        assert!(can_grant(&cp, &"u".into(), &s));
        assert!(!can_grant(&cp, &"v".into(), &s));
    }

    #[test]
    fn accessors_on_empty_state() {
        let s = AndroidState::empty();
        assert!(get_installed_apps(&s).is_empty());
        assert!(!permission_is_grouped(&Perm::new("X", None, PermLevel::Dangerous)));
        let (s, _) = fixture();
        assert!(in_app(&"alice.main".into(), &"alice".into(), &s));
        assert!(!in_app(&"alice.main".into(), &"owner".into(), &s));
    }

    #[test]
    fn filter_well_formedness() {
        let good = Component::new("a", ComponentKind::Activity)
            .with_filter(IntentFilter::new(ComponentKind::Activity, [IntentClass::ActivityStart]));
        assert!(cmp_declares_intent_filters_correctly(&good));
        let bad = Component::new("b", ComponentKind::Activity)
            .with_filter(IntentFilter::new(ComponentKind::Activity, [IntentClass::Broadcast]));
        assert!(!cmp_declares_intent_filters_correctly(&bad));
        let mislabeled = Component::new("c", ComponentKind::Service)
            .with_filter(IntentFilter::new(ComponentKind::Activity, []));
        assert!(!cmp_declares_intent_filters_correctly(&mislabeled));
    }
}
