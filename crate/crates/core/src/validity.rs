//! Well-formedness of states.
//!
//! [`check_validity`] reports every violated clause instead of a single
//! boolean so that broken states produced by a faulty transition can be
//! diagnosed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::{AndroidState, AppId, CompId, Platform};
use crate::queries;

/// One well-formedness clause.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClauseId {
    /// Component ids are distinct across installed and system apps.
    V1,
    /// No component belongs to two different apps.
    V2,
    /// No running instance is a content provider.
    V3,
    /// Temporary delegations reference running instances and present providers.
    V4,
    /// Running components belong to present apps.
    V5,
    /// Apps owning resource values are present.
    V6,
    /// Manifests, certs and defined-permission domains are the user apps.
    V7,
    /// Granted-permission and granted-group domains are all present apps.
    V8,
    /// User app ids differ from system app ids, which are pairwise distinct.
    V9,
    /// Permissions defined by apps have distinct ids.
    V10,
    /// Every partial map has a duplicate-free domain.
    V11,
    /// Every individually granted permission exists.
    V12,
    /// Sent intents have distinct ids.
    V13,
}

impl ClauseId {
    pub const ALL: [ClauseId; 13] = [
        ClauseId::V1,
        ClauseId::V2,
        ClauseId::V3,
        ClauseId::V4,
        ClauseId::V5,
        ClauseId::V6,
        ClauseId::V7,
        ClauseId::V8,
        ClauseId::V9,
        ClauseId::V10,
        ClauseId::V11,
        ClauseId::V12,
        ClauseId::V13,
    ];

    pub fn code(self) -> &'static str {
        match self {
            ClauseId::V1 => "V1",
            ClauseId::V2 => "V2",
            ClauseId::V3 => "V3",
            ClauseId::V4 => "V4",
            ClauseId::V5 => "V5",
            ClauseId::V6 => "V6",
            ClauseId::V7 => "V7",
            ClauseId::V8 => "V8",
            ClauseId::V9 => "V9",
            ClauseId::V10 => "V10",
            ClauseId::V11 => "V11",
            ClauseId::V12 => "V12",
            ClauseId::V13 => "V13",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ClauseId::V1 => "component identifiers are pairwise distinct",
            ClauseId::V2 => "no component belongs to two applications",
            ClauseId::V3 => "no running instance of a content provider",
            ClauseId::V4 => "temporary delegations name running instances and present providers",
            ClauseId::V5 => "running components belong to present applications",
            ClauseId::V6 => "resource owners are present applications",
            ClauseId::V7 => "manifests/certs/definedPerms domains equal the user-installed apps",
            ClauseId::V8 => "grantedPerms/grantedGroups domains equal all present apps",
            ClauseId::V9 => "user and system application ids are distinct",
            ClauseId::V10 => "application-defined permission ids are distinct",
            ClauseId::V11 => "partial maps have duplicate-free domains",
            ClauseId::V12 => "individually granted permissions exist in the system",
            ClauseId::V13 => "sent intents have distinct identifiers",
        }
    }
}

impl fmt::Display for ClauseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidityReport {
    pub violations: BTreeSet<ClauseId>,
    /// Human-readable detail, one line per offending item.
    pub messages: Vec<(ClauseId, String)>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn flag(&mut self, clause: ClauseId, msg: impl Into<String>) {
        self.violations.insert(clause);
        self.messages.push((clause, msg.into()));
    }
}

impl fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return writeln!(f, "valid");
        }
        for (clause, msg) in &self.messages {
            writeln!(f, "{clause}: {} ({msg})", clause.description())?;
        }
        Ok(())
    }
}

pub fn valid_state(s: &AndroidState, platform: &Platform) -> bool {
    check_validity(s, platform).is_valid()
}

pub fn check_validity(s: &AndroidState, platform: &Platform) -> ValidityReport {
    let mut report = ValidityReport::default();
    let components = queries::all_components(s);
    let present = queries::present_apps(s);

    // V1
    let mut id_counts: BTreeMap<&CompId, usize> = BTreeMap::new();
    for (_, c) in &components {
        *id_counts.entry(&c.id).or_default() += 1;
    }
    for (id, n) in &id_counts {
        if *n > 1 {
            report.flag(ClauseId::V1, format!("component id `{id}` declared {n} times"));
        }
    }

    // V2
    for (i, (a, c)) in components.iter().enumerate() {
        if components[i + 1..].iter().any(|(b, d)| a != b && c == d) {
            report.flag(ClauseId::V2, format!("component `{}` declared by several apps", c.id));
        }
    }

    // V3 and V5
    for (ic, cid) in s.running.iter() {
        match components.iter().find(|(_, c)| &c.id == cid) {
            Some((_, c)) if c.is_provider() => {
                report.flag(ClauseId::V3, format!("instance {ic} runs provider `{cid}`"))
            }
            Some(_) => {}
            None => report.flag(ClauseId::V5, format!("instance {ic} runs unknown component `{cid}`")),
        }
    }

    // V4
    for d in &s.del_t_perms {
        if !s.running.contains_key(&d.instance) {
            report.flag(ClauseId::V4, format!("delTPerms entry for stopped instance {}", d.instance));
        }
        if !components.iter().any(|(_, c)| c.id == d.provider && c.is_provider()) {
            report.flag(ClauseId::V4, format!("delTPerms entry over unknown provider `{}`", d.provider));
        }
    }

    // V6
    for (app, res) in s.resources.keys() {
        if !present.contains(app) {
            report.flag(ClauseId::V6, format!("resources entry ({app}, {res}) of absent app"));
        }
    }

    // V7
    let installed: BTreeSet<&AppId> = s.installed_apps.iter().collect();
    for (name, domain) in [
        ("manifests", s.manifests.key_set()),
        ("certs", s.certs.key_set()),
        ("definedPerms", s.defined_perms.key_set()),
    ] {
        if domain != installed {
            report.flag(ClauseId::V7, format!("domain of {name} differs from installedApps"));
        }
    }

    // V8
    for (name, domain) in [
        ("grantedPerms", s.granted_perms.key_set()),
        ("grantedGroups", s.granted_groups.key_set()),
    ] {
        if domain != present {
            report.flag(ClauseId::V8, format!("domain of {name} differs from present apps"));
        }
    }

    // V9
    let mut sys_ids: BTreeSet<&AppId> = BTreeSet::new();
    for sa in &s.system_image {
        if !sys_ids.insert(&sa.id) {
            report.flag(ClauseId::V9, format!("system app id `{}` repeated", sa.id));
        }
        if s.installed_apps.contains(&sa.id) {
            report.flag(ClauseId::V9, format!("`{}` is both user-installed and a system app", sa.id));
        }
    }

    // V10
    let mut seen = BTreeSet::new();
    let defined = s
        .defined_perms
        .iter()
        .flat_map(|(_, ps)| ps.iter())
        .chain(s.system_image.iter().flat_map(|sa| sa.manifest.defined_perms.iter()));
    for p in defined {
        if !seen.insert(&p.id) {
            report.flag(ClauseId::V10, format!("permission `{}` defined more than once", p.id));
        }
    }

    // V11
    for (name, dup) in [
        ("grantedGroups", s.granted_groups.has_duplicate_keys()),
        ("grantedPerms", s.granted_perms.has_duplicate_keys()),
        ("running", s.running.has_duplicate_keys()),
        ("resources", s.resources.has_duplicate_keys()),
        ("manifests", s.manifests.has_duplicate_keys()),
        ("certs", s.certs.has_duplicate_keys()),
        ("definedPerms", s.defined_perms.has_duplicate_keys()),
    ] {
        if dup {
            report.flag(ClauseId::V11, format!("{name} binds a key twice"));
        }
    }

    // V12
    for (app, ps) in s.granted_perms.iter() {
        for pid in ps {
            if queries::resolve_perm(pid, s, platform).is_none() {
                report.flag(ClauseId::V12, format!("`{app}` granted unknown permission `{pid}`"));
            }
        }
    }

    // V13
    let mut intent_ids = BTreeSet::new();
    for si in &s.sent_intents {
        if !intent_ids.insert(&si.intent.id) {
            report.flag(ClauseId::V13, format!("intent id `{}` sent twice", si.intent.id));
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    fn installed(s: &mut AndroidState, app: &str, comps: Vec<Component>) {
        let id = AppId::from(app);
        s.installed_apps.insert(id.clone());
        s.manifests.insert(
            id.clone(),
            Manifest {
                components: comps,
                ..Manifest::default()
            },
        );
        s.certs.insert(id.clone(), Cert::from("k"));
        s.defined_perms.insert(id.clone(), BTreeSet::new());
        s.granted_perms.insert(id.clone(), BTreeSet::new());
        s.granted_groups.insert(id, BTreeSet::new());
    }

    fn violations(s: &AndroidState) -> BTreeSet<ClauseId> {
        check_validity(s, &Platform::default()).violations
    }

    #[test]
    fn empty_state_is_valid() {
        assert!(violations(&AndroidState::empty()).is_empty());
    }

    #[test]
    fn shared_component_id_is_v1() {
        let mut s = AndroidState::empty();
        installed(&mut s, "a", vec![Component::new("c", ComponentKind::Activity)]);
        installed(&mut s, "b", vec![Component::new("c", ComponentKind::Service)]);
        assert_eq!(violations(&s), BTreeSet::from([ClauseId::V1]));
    }

    #[test]
    fn identical_component_in_two_apps_is_v1_and_v2() {
        let mut s = AndroidState::empty();
        installed(&mut s, "a", vec![Component::new("c", ComponentKind::Activity)]);
        installed(&mut s, "b", vec![Component::new("c", ComponentKind::Activity)]);
        assert_eq!(violations(&s), BTreeSet::from([ClauseId::V1, ClauseId::V2]));
    }

    #[test]
    fn running_provider_is_v3() {
        let mut s = AndroidState::empty();
        installed(&mut s, "a", vec![Component::new("cp", ComponentKind::ContentProvider)]);
        s.running.insert(InstanceId(0), "cp".into());
        assert_eq!(violations(&s), BTreeSet::from([ClauseId::V3]));
    }

    #[test]
    fn unknown_granted_perm_is_v12() {
        let mut s = AndroidState::empty();
        installed(&mut s, "a", vec![]);
        s.granted_perms.get_mut(&"a".into()).unwrap().insert("GHOST".into());
        assert_eq!(violations(&s), BTreeSet::from([ClauseId::V12]));
        let platform = Platform {
            builtin_perms: [Perm::new("GHOST", None, PermLevel::Dangerous)].into(),
            ..Platform::default()
        };
        assert!(check_validity(&s, &platform).is_valid());
    }

    #[test]
    fn stale_temporary_delegation_is_v4() {
        let mut s = AndroidState::empty();
        let mut cp = Component::new("cp", ComponentKind::ContentProvider);
        cp.resource_map.insert("u".into(), "r".into());
        installed(&mut s, "a", vec![cp, Component::new("act", ComponentKind::Activity)]);
        s.running.insert(InstanceId(1), "act".into());
        s.del_t_perms.insert(TemporaryDelegation {
            instance: InstanceId(1),
            provider: "cp".into(),
            uri: "u".into(),
            op: OpTy::Read,
        });
        assert!(violations(&s).is_empty());
        s.running.remove(&InstanceId(1));
        assert_eq!(violations(&s), BTreeSet::from([ClauseId::V4]));
    }

    #[test]
    fn domain_mismatches() {
        let mut s = AndroidState::empty();
        installed(&mut s, "a", vec![]);
        s.certs.remove(&"a".into());
        assert_eq!(violations(&s), BTreeSet::from([ClauseId::V7]));

        let mut s = AndroidState::with_system_image([SysImgApp {
            id: "sys".into(),
            manifest: Manifest::default(),
            cert: "m".into(),
            is_manufacturer_signed: true,
        }]);
        assert!(violations(&s).is_empty());
        s.granted_groups.remove(&"sys".into());
        assert_eq!(violations(&s), BTreeSet::from([ClauseId::V8]));
    }

    #[test]
    fn user_app_shadowing_system_app_is_v9() {
        let mut s = AndroidState::with_system_image([SysImgApp {
            id: "a".into(),
            manifest: Manifest::default(),
            cert: "m".into(),
            is_manufacturer_signed: true,
        }]);
        installed(&mut s, "a", vec![]);
        assert!(violations(&s).contains(&ClauseId::V9));
    }

    #[test]
    fn duplicate_keys_and_intents() {
        let mut s = AndroidState::empty();
        installed(&mut s, "a", vec![Component::new("act", ComponentKind::Activity)]);
        s.running.push_raw(InstanceId(1), "act".into());
        s.running.push_raw(InstanceId(1), "act".into());
        assert_eq!(violations(&s), BTreeSet::from([ClauseId::V11]));

        let mut s = AndroidState::empty();
        for sender in [1, 2] {
            s.sent_intents.insert(SentIntent {
                sender: InstanceId(sender),
                intent: Intent::implicit("i", IntentKind::StartService),
            });
        }
        assert_eq!(violations(&s), BTreeSet::from([ClauseId::V13]));
    }

    #[test]
    fn duplicated_permission_definitions_are_v10() {
        let mut s = AndroidState::empty();
        installed(&mut s, "a", vec![]);
        installed(&mut s, "b", vec![]);
        for app in ["a", "b"] {
            s.defined_perms
                .get_mut(&app.into())
                .unwrap()
                .insert(Perm::new("P", None, PermLevel::Normal));
        }
        assert_eq!(violations(&s), BTreeSet::from([ClauseId::V10]));
    }

    #[test]
    fn orphan_resources_and_instances() {
        let mut s = AndroidState::empty();
        s.resources.insert(("ghost".into(), "r".into()), default_value());
        s.running.insert(InstanceId(0), "nowhere".into());
        assert_eq!(violations(&s), BTreeSet::from([ClauseId::V5, ClauseId::V6]));
    }
}
