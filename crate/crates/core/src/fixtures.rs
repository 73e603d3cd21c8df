//! Builders for the shipped scenario traces in `fixtures/`.
//!
//! The files themselves are the artifact; these builders only document how
//! they were produced and let `record_fixtures` regenerate them.

use crate::exec::step;
use crate::model::{
    Action, AndroidState, Component, ComponentKind, InstanceId, IntentClass, IntentFilter, Manifest,
    OpTy, Perm, PermLevel, Platform, ResId,
};

/// File names of the shipped fixtures, relative to `fixtures/`.
pub const IMPLICIT_GRANT: &str = "implicit_group_grant.trace.json";
pub const START_REVOCABLE: &str = "start_right_revocable.trace.json";
pub const DELEGATION_SURVIVES: &str = "delegation_survives_revoke.trace.json";
pub const INSTALL_GUARDS: &str = "install_guards.trace.json";

pub const ALL: [&str; 4] = [IMPLICIT_GRANT, START_REVOCABLE, DELEGATION_SURVIVES, INSTALL_GUARDS];

fn install(app: &str, manifest: Manifest, cert: &str, resources: &[&str]) -> Action {
    Action::Install {
        app: app.into(),
        manifest,
        cert: cert.into(),
        resources: resources.iter().map(|r| ResId::from(*r)).collect(),
    }
}

fn must_step(s: AndroidState, a: &Action, platform: &Platform) -> AndroidState {
    let r = step(&s, a, platform);
    assert!(r.resp.is_ok(), "fixture setup step failed: {a:?} -> {}", r.resp);
    r.st
}

/// A contacts app granted the CONTACTS group, then asked whether it holds
/// WRITE_CONTACTS.
pub fn implicit_grant() -> (Option<AndroidState>, Vec<Action>) {
    let manifest = Manifest {
        components: vec![Component::new("contacts.sync.main", ComponentKind::Activity)],
        used_perms: ["READ_CONTACTS".into(), "WRITE_CONTACTS".into()].into(),
        ..Manifest::default()
    };
    let actions = vec![
        install("contacts.sync", manifest, "certA", &[]),
        Action::GrantPermGroup {
            group: "CONTACTS".into(),
            app: "contacts.sync".into(),
        },
        Action::HasPermission {
            perm: "WRITE_CONTACTS".into(),
            app: "contacts.sync".into(),
        },
    ];
    (None, actions)
}

/// A running mail activity that may start the camera app's capture
/// activity only while it holds CAMERA.
pub fn start_revocable(platform: &Platform) -> (Option<AndroidState>, Vec<Action>) {
    let mail = Manifest {
        components: vec![Component::new("mail.main", ComponentKind::Activity)],
        used_perms: ["CAMERA".into()].into(),
        ..Manifest::default()
    };
    let camera = Manifest {
        components: vec![Component::new("camera.capture", ComponentKind::Activity)
            .exported(true)
            .guarded_by("CAMERA")
            .with_filter(IntentFilter::new(ComponentKind::Activity, [IntentClass::ActivityStart]))],
        used_perms: ["CAMERA".into()].into(),
        ..Manifest::default()
    };
    let mut s = AndroidState::empty();
    for a in [
        install("mail", mail, "certA", &[]),
        install("camera", camera, "certB", &[]),
        Action::Grant {
            perm: "CAMERA".into(),
            app: "mail".into(),
        },
    ] {
        s = must_step(s, &a, platform);
    }
    s.running.insert(InstanceId(0), "mail.main".into());
    let actions = vec![Action::Revoke {
        perm: "CAMERA".into(),
        app: "mail".into(),
    }];
    (Some(s), actions)
}

pub const PHOTO_PERM: &str = "store.READ_PHOTOS";
pub const PHOTO_PROVIDER: &str = "store.photos";
pub const PHOTO_URI: &str = "content://store.photos/album";

/// A gallery (instance 0) that may read a photo store once granted
/// READ_PHOTOS, and an editor (instance 1) that never holds it.
pub fn delegation_survives() -> (Option<AndroidState>, Vec<Action>) {
    let platform = Platform::sample();
    let mut provider = Component::new(PHOTO_PROVIDER, ComponentKind::ContentProvider).exported(true);
    provider.read_perm = Some(PHOTO_PERM.into());
    provider.resource_map.insert(PHOTO_URI.into(), "album".into());
    provider.grant_uris.insert(PHOTO_URI.into());
    let store = Manifest {
        components: vec![provider],
        defined_perms: vec![Perm::new(PHOTO_PERM, None, PermLevel::Dangerous)],
        ..Manifest::default()
    };
    let gallery = Manifest {
        components: vec![Component::new("gallery.main", ComponentKind::Activity)],
        used_perms: [PHOTO_PERM.into()].into(),
        ..Manifest::default()
    };
    let editor = Manifest {
        components: vec![Component::new("editor.main", ComponentKind::Activity)],
        ..Manifest::default()
    };
    let mut s = AndroidState::empty();
    for a in [
        install("store", store, "certA", &["album"]),
        install("gallery", gallery, "certB", &[]),
        install("editor", editor, "certC", &[]),
    ] {
        s = must_step(s, &a, &platform);
    }
    s.running.insert(InstanceId(0), "gallery.main".into());
    s.running.insert(InstanceId(1), "editor.main".into());
    let actions = vec![
        Action::Grant {
            perm: PHOTO_PERM.into(),
            app: "gallery".into(),
        },
        Action::GrantP {
            ic: InstanceId(0),
            cp: PHOTO_PROVIDER.into(),
            app: "editor".into(),
            uri: PHOTO_URI.into(),
            op: OpTy::Read,
        },
        Action::Revoke {
            perm: PHOTO_PERM.into(),
            app: "gallery".into(),
        },
        Action::Read {
            ic: InstanceId(1),
            cp: PHOTO_PROVIDER.into(),
            uri: PHOTO_URI.into(),
        },
    ];
    (Some(s), actions)
}

/// Installs exercising each install guard in turn, interleaved with
/// successful ones.
pub fn install_guards() -> (Option<AndroidState>, Vec<Action>) {
    let activity = |id: &str| Component::new(id, ComponentKind::Activity);
    let plain = |comps: Vec<Component>| Manifest {
        components: comps,
        ..Manifest::default()
    };
    let defines = |comps: Vec<Component>, perms: Vec<Perm>| Manifest {
        components: comps,
        defined_perms: perms,
        ..Manifest::default()
    };
    let normal = |id: &str| Perm::new(id, None, PermLevel::Normal);
    let bad_filter = activity("d.main").with_filter(IntentFilter::new(ComponentKind::Activity, [IntentClass::Broadcast]));
    let actions = vec![
        install("a", defines(vec![activity("a.main")], vec![normal("a.P")]), "certA", &["r"]),
        install("a", plain(vec![activity("x"), activity("x")]), "certA", &[]),
        install("b", plain(vec![activity("b.x"), activity("b.x")]), "certA", &[]),
        install("b", defines(vec![activity("b.main")], vec![normal("b.P"), normal("b.P")]), "certA", &[]),
        install("b", plain(vec![activity("a.main")]), "certA", &[]),
        install("b", defines(vec![activity("b.main")], vec![normal("a.P")]), "certA", &[]),
        install("d", plain(vec![bad_filter]), "certA", &[]),
        install("b", defines(vec![activity("b.main")], vec![normal("INTERNET")]), "certB", &[]),
        Action::Uninstall { app: "a".into() },
        install("a", plain(vec![activity("a.main")]), "certC", &[]),
    ];
    (None, actions)
}

/// Every fixture by file name.
pub fn build_all() -> Vec<(&'static str, Option<AndroidState>, Vec<Action>)> {
    let platform = Platform::sample();
    let (s1, a1) = implicit_grant();
    let (s2, a2) = start_revocable(&platform);
    let (s3, a3) = delegation_survives();
    let (s4, a4) = install_guards();
    vec![
        (IMPLICIT_GRANT, s1, a1),
        (START_REVOCABLE, s2, a2),
        (DELEGATION_SURVIVES, s3, a3),
        (INSTALL_GUARDS, s4, a4),
    ]
}
