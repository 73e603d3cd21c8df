//! Seeded generators of valid states, actions and constrained traces.
//!
//! Everything here is deterministic in the seed. Generated states are built
//! by stepping the executable model, plus direct seeding of the parts no
//! action can create from scratch (the system image, running instances and
//! temporary delegations), and every state is re-certified by the validity
//! checker before it is handed out.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::axiomatic;
use crate::exec::{fresh_instance_id, step};
use crate::model::{
    Action, ActionKind, AndroidState, AppId, Cert, CompId, Component, ComponentKind, Intent,
    IntentClass, IntentFilter, IntentId, IntentKind, InstanceId, Manifest, OpTy, Perm, PermGroupId,
    PermId, PermLevel, Platform, ResId, SysCall, SysImgApp, TemporaryDelegation, Uri, Value,
};
use crate::queries as q;
use crate::validity::check_validity;

pub type FuzzRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> FuzzRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Default probability of asking for a precondition-satisfying action.
pub const DEFAULT_BIAS: f64 = 0.7;

/// How many random candidates to try before giving up on a kind.
const CANDIDATE_ATTEMPTS: usize = 48;

const CERTS: [&str; 3] = ["certA", "certB", "certC"];
const MANUFACTURER_CERT: &str = "manufacturer";

// ---------------------------------------------------------------- manifests

fn gen_level(rng: &mut FuzzRng) -> PermLevel {
    match rng.gen_range(0..8) {
        0..=3 => PermLevel::Dangerous,
        4 | 5 => PermLevel::Normal,
        6 => PermLevel::Signature,
        _ => PermLevel::SignatureOrSystem,
    }
}

/// A well-formed manifest for `app` plus the resource ids it ships with.
/// Component and permission ids are prefixed by the app id.
pub fn gen_manifest(
    rng: &mut FuzzRng,
    app: &str,
    perm_pool: &[PermId],
    group_pool: &[PermGroupId],
) -> (Manifest, Vec<ResId>) {
    let mut defined = Vec::new();
    for k in 0..rng.gen_range(0..=2) {
        let level = gen_level(rng);
        let group = if level == PermLevel::Dangerous && rng.gen_bool(0.5) {
            match group_pool.choose(rng) {
                Some(g) if rng.gen_bool(0.3) => Some(g.clone()),
                _ => Some(PermGroupId::from(format!("{app}.G"))),
            }
        } else {
            None
        };
        defined.push(Perm {
            id: format!("{app}.P{k}").into(),
            group,
            level,
        });
    }

    let mut pool: Vec<PermId> = perm_pool.to_vec();
    pool.extend(defined.iter().map(|p| p.id.clone()));
    let pick = |rng: &mut FuzzRng| pool.choose(rng).cloned();

    let mut components = Vec::new();
    let mut resources = Vec::new();
    for j in 0..rng.gen_range(1..=4) {
        let kind = *[
            ComponentKind::Activity,
            ComponentKind::Service,
            ComponentKind::BroadcastReceiver,
            ComponentKind::ContentProvider,
        ]
        .choose(rng)
        .unwrap();
        let mut c = Component::new(format!("{app}.c{j}"), kind).exported(rng.gen_bool(0.6));
        if kind == ComponentKind::ContentProvider {
            for k in 0..rng.gen_range(1..=2) {
                let uri = Uri::from(format!("content://{app}.c{j}/r{k}"));
                let res = ResId::from(format!("c{j}r{k}"));
                c.resource_map.insert(uri.clone(), res.clone());
                resources.push(res);
                if rng.gen_bool(0.6) {
                    c.grant_uris.insert(uri);
                }
            }
            if rng.gen_bool(0.5) {
                c.read_perm = pick(rng);
            }
            if rng.gen_bool(0.5) {
                c.write_perm = pick(rng);
            }
        } else {
            if rng.gen_bool(0.35) {
                c.required_perm = pick(rng);
            }
            if rng.gen_bool(0.75) {
                let class = match kind {
                    ComponentKind::Activity => IntentClass::ActivityStart,
                    ComponentKind::Service => IntentClass::ServiceStart,
                    _ => IntentClass::Broadcast,
                };
                c = c.with_filter(IntentFilter::new(kind, [class]));
            }
        }
        components.push(c);
    }
    if rng.gen_bool(0.2) {
        resources.push(ResId::from("prefs"));
    }

    let used_perms = pool.iter().filter(|_| rng.gen_bool(0.35)).cloned().collect();
    let app_required_perm = if rng.gen_bool(0.1) { pick(rng) } else { None };
    let manifest = Manifest {
        components,
        min_sdk: Some(rng.gen_range(21..=23)),
        target_sdk: Some(23),
        used_perms,
        defined_perms: defined,
        app_required_perm,
    };
    (manifest, resources)
}

// ------------------------------------------------------------------- pools

/// Identifiers currently meaningful in a state, with decoys for the error
/// branches.
struct Pools {
    apps: Vec<AppId>,
    installed: Vec<AppId>,
    perms: Vec<PermId>,
    groups: Vec<PermGroupId>,
    components: Vec<(AppId, Component)>,
    providers: Vec<(AppId, Component)>,
    instances: Vec<InstanceId>,
    syscalls: Vec<SysCall>,
}

impl Pools {
    fn of(s: &AndroidState, platform: &Platform) -> Self {
        let mut perms: BTreeSet<PermId> = platform.builtin_perms.iter().map(|p| p.id.clone()).collect();
        let mut groups: BTreeSet<PermGroupId> =
            platform.builtin_perms.iter().filter_map(|p| p.group.clone()).collect();
        for (_, ps) in s.defined_perms.iter() {
            perms.extend(ps.iter().map(|p| p.id.clone()));
            groups.extend(ps.iter().filter_map(|p| p.group.clone()));
        }
        for sa in &s.system_image {
            perms.extend(sa.manifest.defined_perms.iter().map(|p| p.id.clone()));
            groups.extend(sa.manifest.defined_perms.iter().filter_map(|p| p.group.clone()));
        }
        let components: Vec<(AppId, Component)> = q::all_components(s)
            .into_iter()
            .map(|(a, c)| (a.clone(), c.clone()))
            .collect();
        let providers = components.iter().filter(|(_, c)| c.is_provider()).cloned().collect();
        Pools {
            apps: q::present_apps(s).into_iter().cloned().collect(),
            installed: s.installed_apps.iter().cloned().collect(),
            perms: perms.into_iter().collect(),
            groups: groups.into_iter().collect(),
            components,
            providers,
            instances: s.running.keys().copied().collect(),
            syscalls: platform.syscalls.keys().cloned().collect(),
        }
    }
}

/// Picks from `items`, or returns `decoy` with probability `noise` (and
/// always when `items` is empty).
fn pick_or<T: Clone>(rng: &mut FuzzRng, items: &[T], decoy: T, noise: f64) -> T {
    if items.is_empty() || rng.gen_bool(noise) {
        decoy
    } else {
        items.choose(rng).unwrap().clone()
    }
}

const NOISE: f64 = 0.12;

fn ghost_app() -> AppId {
    AppId::from("ghost")
}

fn pick_app(rng: &mut FuzzRng, p: &Pools) -> AppId {
    pick_or(rng, &p.apps, ghost_app(), NOISE)
}

fn pick_perm(rng: &mut FuzzRng, p: &Pools) -> PermId {
    pick_or(rng, &p.perms, PermId::from("ghost.P"), NOISE)
}

fn pick_group(rng: &mut FuzzRng, p: &Pools) -> PermGroupId {
    pick_or(rng, &p.groups, PermGroupId::from("ghost.G"), NOISE)
}

fn unused_instance(s: &AndroidState) -> InstanceId {
    fresh_instance_id(s).next()
}

fn pick_instance(rng: &mut FuzzRng, p: &Pools, s: &AndroidState) -> InstanceId {
    pick_or(rng, &p.instances, unused_instance(s), NOISE)
}

fn pick_op(rng: &mut FuzzRng) -> OpTy {
    *[OpTy::Read, OpTy::Write, OpTy::Rw].choose(rng).unwrap()
}

/// A provider id (occasionally a non-provider or unknown component) and
/// one of its URIs (occasionally a foreign or unknown one).
fn pick_provider_uri(rng: &mut FuzzRng, p: &Pools, grantable: bool) -> (CompId, Uri) {
    let cp = if p.providers.is_empty() || rng.gen_bool(NOISE) {
        pick_or(rng, &p.components, (ghost_app(), Component::new("ghost.cp", ComponentKind::ContentProvider)), NOISE).1
    } else {
        p.providers.choose(rng).unwrap().1.clone()
    };
    let own: Vec<Uri> = if grantable && rng.gen_bool(0.8) {
        cp.grant_uris.iter().cloned().collect()
    } else {
        cp.resource_map.keys().cloned().collect()
    };
    let uri = pick_or(rng, &own, Uri::from("content://ghost/r"), NOISE);
    (cp.id, uri)
}

fn fresh_intent_id(s: &AndroidState) -> IntentId {
    let used: BTreeSet<&IntentId> = s.sent_intents.iter().map(|si| &si.intent.id).collect();
    (0..)
        .map(|n| IntentId::from(format!("i{n}")))
        .find(|id| !used.contains(id))
        .unwrap()
}

fn fresh_app_id(s: &AndroidState) -> AppId {
    (0..)
        .map(|n| AppId::from(format!("app{n}")))
        .find(|a| !q::is_app_present(a, s))
        .unwrap()
}

fn gen_intent_kind(rng: &mut FuzzRng, wanted: ActionKind, p: &Pools) -> IntentKind {
    let perm = if rng.gen_bool(0.4) { Some(pick_perm(rng, p)) } else { None };
    let matching = match wanted {
        ActionKind::StartActivity => IntentKind::StartActivity,
        ActionKind::StartActivityRes => IntentKind::StartActivityForResult(rng.gen_range(0..4)),
        ActionKind::StartService => IntentKind::StartService,
        ActionKind::SendBroadcast => IntentKind::Broadcast(perm),
        ActionKind::SendOrdBroadcast => IntentKind::OrderedBroadcast(perm),
        _ => IntentKind::StickyBroadcast,
    };
    if rng.gen_bool(0.85) {
        matching
    } else {
        [
            IntentKind::StartActivity,
            IntentKind::StartService,
            IntentKind::Broadcast(None),
            IntentKind::StickyBroadcast,
        ]
        .choose(rng)
        .unwrap()
        .clone()
    }
}

fn gen_intent(rng: &mut FuzzRng, wanted: ActionKind, p: &Pools, s: &AndroidState) -> Intent {
    let id = match s.sent_intents.iter().collect::<Vec<_>>().choose(rng) {
        Some(si) if rng.gen_bool(NOISE) => si.intent.id.clone(),
        _ => fresh_intent_id(s),
    };
    let kind = gen_intent_kind(rng, wanted, p);
    let mut intent = Intent::implicit(id, kind);
    if rng.gen_bool(0.25) {
        if let Some((_, c)) = p.components.choose(rng) {
            intent.target = Some(c.id.clone());
        }
    }
    if rng.gen_bool(0.3) {
        intent.payload = Some(Value::from(format!("v{}", rng.gen_range(0..3))));
    }
    intent
}

// ------------------------------------------------------------ install cases

/// A fresh install, mutated with probability one half into one that breaks
/// one of the install guards.
fn gen_install(rng: &mut FuzzRng, p: &Pools, s: &AndroidState) -> Action {
    let mut app = fresh_app_id(s);
    let (mut manifest, resources) = gen_manifest(rng, app.as_str(), &p.perms, &p.groups);
    if rng.gen_bool(0.5) {
        match rng.gen_range(0..6) {
            0 => app = pick_or(rng, &p.apps, app.clone(), 0.0),
            1 => {
                let c = manifest.components[0].clone();
                manifest.components.push(c);
            }
            2 => {
                let p0 = Perm::new(format!("{app}.Pdup"), None, PermLevel::Normal);
                manifest.defined_perms.push(p0.clone());
                manifest.defined_perms.push(p0);
            }
            3 => {
                if let Some((_, c)) = p.components.choose(rng) {
                    manifest.components[0].id = c.id.clone();
                }
            }
            4 => {
                let defined: Vec<PermId> = p
                    .perms
                    .iter()
                    .filter(|pid| q::definer_of(pid, s).is_some())
                    .cloned()
                    .collect();
                if let Some(pid) = defined.choose(rng) {
                    manifest.defined_perms.push(Perm::new(pid.clone(), None, PermLevel::Normal));
                }
            }
            _ => {
                let c = &mut manifest.components[0];
                let wrong = if c.kind == ComponentKind::Activity {
                    IntentClass::Broadcast
                } else {
                    IntentClass::ActivityStart
                };
                c.intent_filters = vec![IntentFilter::new(c.kind, [wrong])];
            }
        }
    }
    Action::Install {
        app,
        manifest,
        cert: Cert::from(*CERTS.choose(rng).unwrap()),
        resources,
    }
}

// ---------------------------------------------------------------- actions

/// A random action of the given kind, biased towards identifiers that
/// occur in `s`. Nothing guarantees whether its precondition holds.
fn candidate(rng: &mut FuzzRng, kind: ActionKind, p: &Pools, s: &AndroidState, platform: &Platform) -> Action {
    match kind {
        ActionKind::Install => gen_install(rng, p, s),
        ActionKind::Uninstall => {
            let app = if rng.gen_bool(0.7) {
                pick_or(rng, &p.installed, ghost_app(), NOISE)
            } else {
                pick_app(rng, p)
            };
            Action::Uninstall { app }
        }
        ActionKind::Grant | ActionKind::Revoke | ActionKind::HasPermission => {
            let app = pick_app(rng, p);
            let perm = if rng.gen_bool(0.6) {
                let own: Vec<PermId> = match kind {
                    ActionKind::Revoke => s.granted_perms.get(&app).map(|g| g.iter().cloned().collect()),
                    _ => q::get_manifest_for_app(&app, s).map(|m| m.used_perms.iter().cloned().collect()),
                }
                .unwrap_or_default();
                {
                    let decoy = pick_perm(rng, p);
                    pick_or(rng, &own, decoy, 0.0)
                }
            } else {
                pick_perm(rng, p)
            };
            match kind {
                ActionKind::Grant => Action::Grant { perm, app },
                ActionKind::Revoke => Action::Revoke { perm, app },
                _ => Action::HasPermission { perm, app },
            }
        }
        ActionKind::GrantPermGroup | ActionKind::RevokePermGroup => {
            let app = pick_app(rng, p);
            let group = if rng.gen_bool(0.6) {
                let own: Vec<PermGroupId> = if kind == ActionKind::RevokePermGroup {
                    s.granted_groups.get(&app).map(|g| g.iter().cloned().collect()).unwrap_or_default()
                } else {
                    q::get_manifest_for_app(&app, s)
                        .map(|m| {
                            m.used_perms
                                .iter()
                                .filter_map(|pid| q::resolve_perm(pid, s, platform))
                                .filter_map(|perm| perm.group)
                                .collect()
                        })
                        .unwrap_or_default()
                };
                {
                    let decoy = pick_group(rng, p);
                    pick_or(rng, &own, decoy, 0.0)
                }
            } else {
                pick_group(rng, p)
            };
            if kind == ActionKind::GrantPermGroup {
                Action::GrantPermGroup { group, app }
            } else {
                Action::RevokePermGroup { group, app }
            }
        }
        ActionKind::Read | ActionKind::Write => {
            let ic = pick_instance(rng, p, s);
            let (cp, uri) = pick_provider_uri(rng, p, false);
            if kind == ActionKind::Read {
                Action::Read { ic, cp, uri }
            } else {
                let value = Value::from(format!("v{}", rng.gen_range(0..4)));
                Action::Write { ic, cp, uri, value }
            }
        }
        ActionKind::StartActivity
        | ActionKind::StartActivityRes
        | ActionKind::StartService
        | ActionKind::SendBroadcast
        | ActionKind::SendOrdBroadcast
        | ActionKind::SendStickyBroadcast => {
            let ic = pick_instance(rng, p, s);
            let intent = gen_intent(rng, kind, p, s);
            match kind {
                ActionKind::StartActivity => Action::StartActivity { intent, ic },
                ActionKind::StartActivityRes => Action::StartActivityRes {
                    token: rng.gen_range(0..4),
                    intent,
                    ic,
                },
                ActionKind::StartService => Action::StartService { intent, ic },
                ActionKind::SendBroadcast | ActionKind::SendOrdBroadcast => {
                    let perm = match &intent.kind {
                        IntentKind::Broadcast(x) | IntentKind::OrderedBroadcast(x) if rng.gen_bool(0.9) => x.clone(),
                        _ => Some(pick_perm(rng, p)),
                    };
                    if kind == ActionKind::SendBroadcast {
                        Action::SendBroadcast { intent, ic, perm }
                    } else {
                        Action::SendOrdBroadcast { intent, ic, perm }
                    }
                }
                _ => Action::SendStickyBroadcast { intent, ic },
            }
        }
        ActionKind::ResolveIntent => {
            let pending: Vec<&crate::model::SentIntent> = s.sent_intents.iter().collect();
            let (intent, class) = match pending.choose(rng) {
                Some(si) if !rng.gen_bool(NOISE) => (si.intent.id.clone(), Some(si.intent.kind.class())),
                _ => (fresh_intent_id(s), None),
            };
            let accepting: Vec<AppId> = match class {
                Some(class) => p
                    .apps
                    .iter()
                    .filter(|a| crate::exec::resolution_target(class, a, s).is_some())
                    .cloned()
                    .collect(),
                None => vec![],
            };
            let decoy = pick_app(rng, p);
            let app = pick_or(rng, &accepting, decoy, 0.2);
            Action::ResolveIntent { intent, app }
        }
        ActionKind::ReceiveIntent => {
            let sent: Vec<&crate::model::SentIntent> = s.sent_intents.iter().collect();
            match sent.choose(rng) {
                Some(si) if !rng.gen_bool(NOISE) => {
                    let owner = si
                        .intent
                        .target
                        .as_ref()
                        .and_then(|t| q::get_app_from_cmp(t, s))
                        .cloned();
                    let app = match owner {
                        Some(o) if rng.gen_bool(0.85) => o,
                        _ => pick_app(rng, p),
                    };
                    let ic = if rng.gen_bool(0.9) { si.sender } else { pick_instance(rng, p, s) };
                    Action::ReceiveIntent {
                        intent: si.intent.id.clone(),
                        ic,
                        app,
                    }
                }
                _ => Action::ReceiveIntent {
                    intent: fresh_intent_id(s),
                    ic: pick_instance(rng, p, s),
                    app: pick_app(rng, p),
                },
            }
        }
        ActionKind::Stop => Action::Stop {
            ic: pick_instance(rng, p, s),
        },
        ActionKind::GrantP => {
            let ic = pick_instance(rng, p, s);
            let (cp, uri) = pick_provider_uri(rng, p, true);
            Action::GrantP {
                ic,
                cp,
                app: pick_app(rng, p),
                uri,
                op: pick_op(rng),
            }
        }
        ActionKind::RevokeDel => {
            let ic = pick_instance(rng, p, s);
            let existing: Vec<(CompId, Uri, OpTy)> = s
                .del_p_perms
                .iter()
                .map(|d| (d.provider.clone(), d.uri.clone(), d.op))
                .chain(s.del_t_perms.iter().map(|d| (d.provider.clone(), d.uri.clone(), d.op)))
                .collect();
            let (cp, uri, op) = match existing.choose(rng) {
                Some(x) if rng.gen_bool(0.7) => {
                    let op = if rng.gen_bool(0.7) { x.2 } else { pick_op(rng) };
                    (x.0.clone(), x.1.clone(), op)
                }
                _ => {
                    let (cp, uri) = pick_provider_uri(rng, p, false);
                    (cp, uri, pick_op(rng))
                }
            };
            Action::RevokeDel { ic, cp, uri, op }
        }
        ActionKind::Call => Action::Call {
            ic: pick_instance(rng, p, s),
            sac: pick_or(rng, &p.syscalls, SysCall::from("ghostCall"), NOISE),
        },
    }
}

/// An action of `kind` whose precondition holds (`want_valid`) or fails,
/// as judged by the declarative precondition. `None` when no such action
/// was found; some kinds are impossible in some states, and a
/// `hasPermission` never fails its precondition.
pub fn gen_action_of_kind(
    rng: &mut FuzzRng,
    s: &AndroidState,
    platform: &Platform,
    kind: ActionKind,
    want_valid: bool,
) -> Option<Action> {
    let pools = Pools::of(s, platform);
    (0..CANDIDATE_ATTEMPTS)
        .map(|_| candidate(rng, kind, &pools, s, platform))
        .find(|a| axiomatic::pre(s, a, platform).pre_holds == want_valid)
}

/// An action plausible in `s`: with probability `bias` one whose
/// precondition holds, otherwise one whose precondition fails.
pub fn gen_action(rng: &mut FuzzRng, s: &AndroidState, platform: &Platform, bias: f64) -> Action {
    loop {
        let want_valid = rng.gen_bool(bias.clamp(0.0, 1.0));
        let kind = *ActionKind::ALL.choose(rng).unwrap();
        if let Some(a) = gen_action_of_kind(rng, s, platform, kind, want_valid) {
            return a;
        }
    }
}

// ----------------------------------------------------------------- states

/// Kinds used to evolve a generated state, with weights.
const EVOLVE_KINDS: [(ActionKind, u32); 14] = [
    (ActionKind::Install, 2),
    (ActionKind::Uninstall, 1),
    (ActionKind::Grant, 4),
    (ActionKind::Revoke, 1),
    (ActionKind::GrantPermGroup, 4),
    (ActionKind::RevokePermGroup, 1),
    (ActionKind::Write, 2),
    (ActionKind::StartActivity, 2),
    (ActionKind::StartService, 2),
    (ActionKind::SendBroadcast, 2),
    (ActionKind::SendStickyBroadcast, 1),
    (ActionKind::ResolveIntent, 4),
    (ActionKind::ReceiveIntent, 3),
    (ActionKind::GrantP, 3),
];

fn pick_weighted(rng: &mut FuzzRng) -> ActionKind {
    EVOLVE_KINDS.choose_weighted(rng, |(_, w)| *w).unwrap().0
}

fn gen_system_image(rng: &mut FuzzRng, platform: &Platform) -> Vec<SysImgApp> {
    let builtin: Vec<PermId> = platform.builtin_perms.iter().map(|p| p.id.clone()).collect();
    let groups: Vec<PermGroupId> = platform.builtin_perms.iter().filter_map(|p| p.group.clone()).collect();
    (0..rng.gen_range(0..=2))
        .map(|i| {
            let id = format!("sys{i}");
            let (manifest, _) = gen_manifest(rng, &id, &builtin, &groups);
            SysImgApp {
                id: id.into(),
                manifest,
                cert: MANUFACTURER_CERT.into(),
                is_manufacturer_signed: rng.gen_bool(0.8),
            }
        })
        .collect()
}

fn seed_running(rng: &mut FuzzRng, s: &mut AndroidState, prob: f64) {
    let startable: Vec<CompId> = q::all_components(s)
        .into_iter()
        .filter(|(_, c)| !c.is_provider())
        .map(|(_, c)| c.id.clone())
        .collect();
    for cid in startable {
        if rng.gen_bool(prob) {
            let ic = fresh_instance_id(s);
            s.running.insert(ic, cid);
        }
    }
}

fn seed_temporary_delegations(rng: &mut FuzzRng, s: &mut AndroidState) {
    let instances: Vec<InstanceId> = s.running.keys().copied().collect();
    let targets: Vec<(CompId, Uri)> = q::all_components(s)
        .into_iter()
        .filter(|(_, c)| c.is_provider())
        .flat_map(|(_, c)| c.resource_map.keys().map(|u| (c.id.clone(), u.clone())).collect::<Vec<_>>())
        .collect();
    if instances.is_empty() || targets.is_empty() {
        return;
    }
    for _ in 0..rng.gen_range(0..=2) {
        let (provider, uri) = targets.choose(rng).unwrap().clone();
        s.del_t_perms.insert(TemporaryDelegation {
            instance: *instances.choose(rng).unwrap(),
            provider,
            uri,
            op: pick_op(rng),
        });
    }
}

/// Certifies a generated state, aborting loudly if it is not valid. Such an
/// abort means some step produced an invalid state from a valid one.
fn certify(s: AndroidState, platform: &Platform, context: &str) -> AndroidState {
    let report = check_validity(&s, platform);
    assert!(
        report.is_valid(),
        "generated state is invalid ({context}): {report}\n{}",
        crate::io::emit_state(&s)
    );
    s
}

/// A valid state with about `size` user apps, deterministic in `seed`.
pub fn gen_valid_state(seed: u64, size: usize, platform: &Platform) -> AndroidState {
    let mut rng = rng_from_seed(seed);
    gen_valid_state_with(&mut rng, size, platform)
}

pub fn gen_valid_state_with(rng: &mut FuzzRng, size: usize, platform: &Platform) -> AndroidState {
    let mut s = AndroidState::with_system_image(gen_system_image(rng, platform));
    s = certify(s, platform, "system image");

    for _ in 0..size {
        let pools = Pools::of(&s, platform);
        let app = fresh_app_id(&s);
        let (manifest, resources) = gen_manifest(rng, app.as_str(), &pools.perms, &pools.groups);
        let a = Action::Install {
            app,
            manifest,
            cert: Cert::from(*CERTS.choose(rng).unwrap()),
            resources,
        };
        s = step(&s, &a, platform).st;
    }
    if size == 0 {
        return s;
    }

    seed_running(rng, &mut s, 0.4);
    s = certify(s, platform, "seeded instances");

    for _ in 0..size * 4 {
        let kind = pick_weighted(rng);
        if let Some(a) = gen_action_of_kind(rng, &s, platform, kind, true) {
            s = step(&s, &a, platform).st;
        }
    }
    seed_temporary_delegations(rng, &mut s);
    certify(s, platform, "after evolution")
}

// ------------------------------------------------------- constrained traces

/// Which quantified trace property a constrained trace is built for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceGoal {
    /// An installed app ends up holding an ungrouped dangerous permission
    /// it did not hold initially, with no uninstall of the app.
    ExplicitGrant,
    /// An ungrouped dangerous permission the app does not define was just
    /// revoked, and neither the app's uninstall nor a regrant follows.
    RevokedStaysRevoked,
}

/// A trace together with the app and permission it quantifies over.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstrainedTrace {
    pub goal: TraceGoal,
    pub initial: AndroidState,
    pub app: AppId,
    pub perm: Perm,
    pub actions: Vec<Action>,
}

impl ConstrainedTrace {
    /// Actions that the hypotheses exclude from the trace.
    pub fn forbidden(&self) -> Vec<Action> {
        forbidden_actions(self.goal, &self.app, &self.perm)
    }
}

pub fn forbidden_actions(goal: TraceGoal, app: &AppId, perm: &Perm) -> Vec<Action> {
    let mut out = vec![Action::Uninstall { app: app.clone() }];
    if goal == TraceGoal::RevokedStaysRevoked {
        out.push(Action::Grant {
            perm: perm.id.clone(),
            app: app.clone(),
        });
    }
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("no state satisfying the {0:?} hypotheses was found after {1} attempts")]
    Unsatisfiable(TraceGoal, usize),
}

const CONSTRAINED_ATTEMPTS: usize = 64;

/// Ungrouped dangerous permissions `app` lists as used, resolved in `s`.
fn ungrouped_dangerous_used(app: &AppId, s: &AndroidState, platform: &Platform) -> Vec<Perm> {
    q::get_manifest_for_app(app, s)
        .map(|m| {
            m.used_perms
                .iter()
                .filter_map(|pid| q::resolve_perm(pid, s, platform))
                .filter(|p| p.level == PermLevel::Dangerous && !p.is_grouped())
                .collect()
        })
        .unwrap_or_default()
}

/// An action aimed at `app` and `perm` or, most of the time, any
/// plausible action. Never one of `forbidden`.
fn gen_trace_action(
    rng: &mut FuzzRng,
    s: &AndroidState,
    platform: &Platform,
    app: &AppId,
    perm: &Perm,
    forbidden: &[Action],
) -> Action {
    loop {
        let a = if rng.gen_bool(0.35) {
            let groups: Vec<PermGroupId> = Pools::of(s, platform).groups;
            let group = pick_or(rng, &groups, PermGroupId::from("ghost.G"), 0.1);
            match rng.gen_range(0..6) {
                0 => Action::Grant {
                    perm: perm.id.clone(),
                    app: app.clone(),
                },
                1 => Action::Revoke {
                    perm: perm.id.clone(),
                    app: app.clone(),
                },
                2 => Action::GrantPermGroup { group, app: app.clone() },
                3 => Action::RevokePermGroup { group, app: app.clone() },
                4 => Action::HasPermission {
                    perm: perm.id.clone(),
                    app: app.clone(),
                },
                _ => Action::Uninstall { app: app.clone() },
            }
        } else {
            gen_action(rng, s, platform, DEFAULT_BIAS)
        };
        if !forbidden.contains(&a) {
            return a;
        }
    }
}

/// Builds a trace meeting the hypotheses of `goal` by construction. The
/// caller is expected to re-check them on the result.
pub fn gen_constrained_trace(seed: u64, goal: TraceGoal, platform: &Platform) -> Result<ConstrainedTrace, GenError> {
    let mut rng = rng_from_seed(seed);
    for _ in 0..CONSTRAINED_ATTEMPTS {
        let size = rng.gen_range(2..=5);
        let s0 = gen_valid_state_with(&mut rng, size, platform);
        let built = match goal {
            TraceGoal::ExplicitGrant => build_explicit_grant(&mut rng, s0, platform),
            TraceGoal::RevokedStaysRevoked => build_revoked_stays_revoked(&mut rng, s0, platform),
        };
        if let Some(t) = built {
            return Ok(t);
        }
    }
    Err(GenError::Unsatisfiable(goal, CONSTRAINED_ATTEMPTS))
}

fn build_explicit_grant(rng: &mut FuzzRng, s0: AndroidState, platform: &Platform) -> Option<ConstrainedTrace> {
    let choices: Vec<(AppId, Perm)> = s0
        .installed_apps
        .iter()
        .flat_map(|app| {
            ungrouped_dangerous_used(app, &s0, platform)
                .into_iter()
                .filter(|p| !q::app_has_permission(app, p, &s0))
                .map(|p| (app.clone(), p))
                .collect::<Vec<_>>()
        })
        .collect();
    let (app, perm) = choices.choose(rng)?.clone();
    let forbidden = forbidden_actions(TraceGoal::ExplicitGrant, &app, &perm);
    let mut actions = Vec::new();
    let mut cur = s0.clone();
    for _ in 0..rng.gen_range(0..=10) {
        let a = gen_trace_action(rng, &cur, platform, &app, &perm, &forbidden);
        cur = step(&cur, &a, platform).st;
        actions.push(a);
    }
    if !q::app_has_permission(&app, &perm, &cur) {
        // The only action the hypotheses leave for acquiring the permission.
        let a = Action::Grant {
            perm: perm.id.clone(),
            app: app.clone(),
        };
        cur = step(&cur, &a, platform).st;
        actions.push(a);
        for _ in 0..rng.gen_range(0..=3) {
            let a = gen_trace_action(rng, &cur, platform, &app, &perm, &forbidden);
            cur = step(&cur, &a, platform).st;
            actions.push(a);
        }
    }
    q::app_has_permission(&app, &perm, &cur).then_some(ConstrainedTrace {
        goal: TraceGoal::ExplicitGrant,
        initial: s0,
        app,
        perm,
        actions,
    })
}

fn build_revoked_stays_revoked(
    rng: &mut FuzzRng,
    s0: AndroidState,
    platform: &Platform,
) -> Option<ConstrainedTrace> {
    let choices: Vec<(AppId, Perm)> = q::present_apps(&s0)
        .into_iter()
        .flat_map(|app| {
            let own: BTreeSet<PermId> = q::get_def_perms_for_app(app, &s0).into_iter().map(|p| p.id).collect();
            ungrouped_dangerous_used(app, &s0, platform)
                .into_iter()
                .filter(|p| !own.contains(&p.id))
                .map(|p| (app.clone(), p))
                .collect::<Vec<_>>()
        })
        .collect();
    let (app, perm) = choices.choose(rng)?.clone();
    let mut initial = s0;
    if !q::get_granted_perms_for_app(&app, &initial).is_some_and(|g| g.contains(&perm.id)) {
        let r = step(
            &initial,
            &Action::Grant {
                perm: perm.id.clone(),
                app: app.clone(),
            },
            platform,
        );
        if !r.resp.is_ok() {
            return None;
        }
        initial = r.st;
    }
    let revoke = Action::Revoke {
        perm: perm.id.clone(),
        app: app.clone(),
    };
    let mut cur = step(&initial, &revoke, platform).st;
    let forbidden = forbidden_actions(TraceGoal::RevokedStaysRevoked, &app, &perm);
    let mut actions = Vec::new();
    for _ in 0..rng.gen_range(0..=12) {
        let a = gen_trace_action(rng, &cur, platform, &app, &perm, &forbidden);
        cur = step(&cur, &a, platform).st;
        actions.push(a);
    }
    Some(ConstrainedTrace {
        goal: TraceGoal::RevokedStaysRevoked,
        initial,
        app,
        perm,
        actions,
    })
}

/// Greedily removes chunks of `actions` while `keep` still holds of the
/// remainder. `keep(actions)` must hold on entry.
pub fn shrink_actions(actions: &[Action], keep: impl Fn(&[Action]) -> bool) -> Vec<Action> {
    let mut cur = actions.to_vec();
    let mut chunk = cur.len().max(1);
    while chunk >= 1 {
        let mut i = 0;
        let mut progressed = false;
        while i < cur.len() {
            let end = (i + chunk).min(cur.len());
            let mut candidate = cur[..i].to_vec();
            candidate.extend_from_slice(&cur[end..]);
            if keep(&candidate) {
                cur = candidate;
                progressed = true;
            } else {
                i += chunk;
            }
        }
        if !progressed {
            if chunk == 1 {
                break;
            }
            chunk /= 2;
        }
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_states_are_deterministic_and_valid() {
        let p = Platform::sample();
        for seed in 0..20 {
            let a = gen_valid_state(seed, 4, &p);
            assert_eq!(a, gen_valid_state(seed, 4, &p));
            assert!(check_validity(&a, &p).is_valid());
        }
    }

    #[test]
    fn size_zero_has_no_user_apps() {
        let p = Platform::sample();
        for seed in 0..10 {
            assert!(gen_valid_state(seed, 0, &p).installed_apps.is_empty());
        }
    }

    #[test]
    fn generated_states_are_populated() {
        let p = Platform::sample();
        let states: Vec<_> = (0..30).map(|seed| gen_valid_state(seed, 5, &p)).collect();
        assert!(states.iter().any(|s| !s.running.is_empty()));
        assert!(states.iter().any(|s| !s.sent_intents.is_empty()));
        assert!(states.iter().any(|s| !s.del_p_perms.is_empty()));
        assert!(states.iter().any(|s| !s.del_t_perms.is_empty()));
        assert!(states.iter().any(|s| !s.system_image.is_empty()));
        assert!(states.iter().any(|s| s.granted_perms.iter().any(|(_, g)| !g.is_empty())));
    }

    #[test]
    fn bias_extremes_select_the_branch() {
        let p = Platform::sample();
        let mut rng = rng_from_seed(7);
        for seed in 0..40 {
            let s = gen_valid_state(seed, 3, &p);
            let ok = gen_action(&mut rng, &s, &p, 1.0);
            assert!(axiomatic::pre(&s, &ok, &p).pre_holds, "{ok:?}");
            let bad = gen_action(&mut rng, &s, &p, 0.0);
            assert!(!axiomatic::pre(&s, &bad, &p).pre_holds, "{bad:?}");
        }
    }

    #[test]
    fn constrained_traces_avoid_forbidden_actions() {
        let p = Platform::sample();
        for goal in [TraceGoal::ExplicitGrant, TraceGoal::RevokedStaysRevoked] {
            for seed in 0..20 {
                let t = gen_constrained_trace(seed, goal, &p).unwrap();
                for f in t.forbidden() {
                    assert!(!t.actions.contains(&f));
                }
                assert!(check_validity(&t.initial, &p).is_valid());
            }
        }
    }

    #[test]
    fn shrinking_keeps_the_predicate() {
        let actions: Vec<Action> = (0..9)
            .map(|i| Action::Stop { ic: InstanceId(i) })
            .collect();
        let keep = |xs: &[Action]| xs.contains(&Action::Stop { ic: InstanceId(4) });
        let shrunk = shrink_actions(&actions, keep);
        assert_eq!(shrunk, vec![Action::Stop { ic: InstanceId(4) }]);
    }
}
