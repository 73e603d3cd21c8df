//! Domain types of the permission model: identifiers, manifests, components,
//! intents, the machine state and the action/response vocabulary.
//!
//! Nothing here enforces well-formedness. A state built from these types may
//! be arbitrarily broken; [`crate::validity`] decides whether it is valid.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

macro_rules! string_id {
    ($($(#[$doc:meta])* $name:ident;)*) => {$(
        $(#[$doc])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Self {
                Self(s.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    )*};
}

string_id! {
    /// Application identifier.
    AppId;
    PermId;
    PermGroupId;
    CompId;
    IntentId;
    Uri;
    ResId;
    /// Signing certificate. Two apps are signed alike iff their certs are equal.
    Cert;
    /// Identifier of a privileged platform API call.
    SysCall;
    /// Opaque resource payload.
    Value;
}

/// The payload every freshly installed resource starts with.
pub fn default_value() -> Value {
    Value::from("initVal")
}

/// Identifier of a running component instance.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct InstanceId(pub u64);

impl InstanceId {
    pub fn next(self) -> InstanceId {
        InstanceId(self.0 + 1)
    }
}

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PermLevel {
    Normal,
    Dangerous,
    Signature,
    SignatureOrSystem,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Perm {
    pub id: PermId,
    #[serde(default)]
    pub group: Option<PermGroupId>,
    pub level: PermLevel,
}

impl Perm {
    pub fn new(id: impl Into<PermId>, group: Option<&str>, level: PermLevel) -> Self {
        Perm {
            id: id.into(),
            group: group.map(PermGroupId::from),
            level,
        }
    }

    pub fn is_grouped(&self) -> bool {
        self.group.is_some()
    }
}

/// Access mode on a content provider resource.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum OpTy {
    Read,
    Write,
    Rw,
}

impl OpTy {
    /// Whether a delegation of mode `self` permits an access of mode `op`.
    pub fn covers(self, op: OpTy) -> bool {
        self == op || self == OpTy::Rw
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ComponentKind {
    Activity,
    Service,
    BroadcastReceiver,
    ContentProvider,
}

/// The coarse class of an intent, as named in intent filters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum IntentClass {
    ActivityStart,
    ServiceStart,
    Broadcast,
}

impl IntentClass {
    /// The component kind that may legitimately accept intents of this class.
    pub fn receiver_kind(self) -> ComponentKind {
        match self {
            IntentClass::ActivityStart => ComponentKind::Activity,
            IntentClass::ServiceStart => ComponentKind::Service,
            IntentClass::Broadcast => ComponentKind::BroadcastReceiver,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IntentFilter {
    pub declared_kind: ComponentKind,
    pub accepted_intent_kinds: BTreeSet<IntentClass>,
}

impl IntentFilter {
    pub fn new(declared_kind: ComponentKind, accepted: impl IntoIterator<Item = IntentClass>) -> Self {
        IntentFilter {
            declared_kind,
            accepted_intent_kinds: accepted.into_iter().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Component {
    pub id: CompId,
    pub kind: ComponentKind,
    #[serde(default)]
    pub exported: bool,
    #[serde(default)]
    pub required_perm: Option<PermId>,
    #[serde(default)]
    pub read_perm: Option<PermId>,
    #[serde(default)]
    pub write_perm: Option<PermId>,
    #[serde(default)]
    pub resource_map: BTreeMap<Uri, ResId>,
    #[serde(default)]
    pub grant_uris: BTreeSet<Uri>,
    #[serde(default)]
    pub intent_filters: Vec<IntentFilter>,
}

impl Component {
    /// A bare, unexported component of the given kind.
    pub fn new(id: impl Into<CompId>, kind: ComponentKind) -> Self {
        Component {
            id: id.into(),
            kind,
            exported: false,
            required_perm: None,
            read_perm: None,
            write_perm: None,
            resource_map: BTreeMap::new(),
            grant_uris: BTreeSet::new(),
            intent_filters: Vec::new(),
        }
    }

    pub fn exported(mut self, exported: bool) -> Self {
        self.exported = exported;
        self
    }

    pub fn guarded_by(mut self, perm: impl Into<PermId>) -> Self {
        self.required_perm = Some(perm.into());
        self
    }

    pub fn with_filter(mut self, filter: IntentFilter) -> Self {
        self.intent_filters.push(filter);
        self
    }

    pub fn is_provider(&self) -> bool {
        self.kind == ComponentKind::ContentProvider
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub components: Vec<Component>,
    #[serde(default)]
    pub min_sdk: Option<u32>,
    #[serde(default)]
    pub target_sdk: Option<u32>,
    #[serde(default)]
    pub used_perms: BTreeSet<PermId>,
    #[serde(default)]
    pub defined_perms: Vec<Perm>,
    #[serde(default)]
    pub app_required_perm: Option<PermId>,
}

/// What an intent asks for.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum IntentKind {
    StartActivity,
    StartActivityForResult(u64),
    StartService,
    Broadcast(Option<PermId>),
    OrderedBroadcast(Option<PermId>),
    StickyBroadcast,
}

impl IntentKind {
    pub fn class(&self) -> IntentClass {
        match self {
            IntentKind::StartActivity | IntentKind::StartActivityForResult(_) => {
                IntentClass::ActivityStart
            }
            IntentKind::StartService => IntentClass::ServiceStart,
            IntentKind::Broadcast(_)
            | IntentKind::OrderedBroadcast(_)
            | IntentKind::StickyBroadcast => IntentClass::Broadcast,
        }
    }

    /// Permission a receiver must hold, for broadcasts that carry one.
    pub fn broadcast_perm(&self) -> Option<&PermId> {
        match self {
            IntentKind::Broadcast(p) | IntentKind::OrderedBroadcast(p) => p.as_ref(),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Intent {
    pub id: IntentId,
    pub kind: IntentKind,
    /// `None` while the intent is implicit.
    #[serde(default)]
    pub target: Option<CompId>,
    #[serde(default)]
    pub payload: Option<Value>,
}

impl Intent {
    pub fn implicit(id: impl Into<IntentId>, kind: IntentKind) -> Self {
        Intent {
            id: id.into(),
            kind,
            target: None,
            payload: None,
        }
    }

    pub fn explicit(id: impl Into<IntentId>, kind: IntentKind, target: impl Into<CompId>) -> Self {
        Intent {
            id: id.into(),
            kind,
            target: Some(target.into()),
            payload: None,
        }
    }
}

/// An application shipped with the system image.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SysImgApp {
    pub id: AppId,
    pub manifest: Manifest,
    pub cert: Cert,
    pub is_manufacturer_signed: bool,
}

/// A finite partial function stored as an association list.
///
/// Entries are kept sorted by key, but duplicate keys are representable so
/// that states with a non-functional map can be built and rejected by the
/// validity checker. Lookups return the first binding.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FiniteMap<K, V> {
    entries: Vec<(K, V)>,
}

impl<K, V> Default for FiniteMap<K, V> {
    fn default() -> Self {
        FiniteMap { entries: Vec::new() }
    }
}

impl<K: Ord, V> FiniteMap<K, V> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a map from raw entries, keeping duplicate keys.
    pub fn from_entries(entries: impl IntoIterator<Item = (K, V)>) -> Self {
        let mut entries: Vec<(K, V)> = entries.into_iter().collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        FiniteMap { entries }
    }

    pub fn get(&self, key: &K) -> Option<&V> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn get_mut(&mut self, key: &K) -> Option<&mut V> {
        self.entries.iter_mut().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn contains_key(&self, key: &K) -> bool {
        self.entries.iter().any(|(k, _)| k == key)
    }

    /// Binds `key` to `value`, dropping every previous binding of `key`.
    pub fn insert(&mut self, key: K, value: V) {
        self.entries.retain(|(k, _)| *k != key);
        let at = self.entries.partition_point(|(k, _)| *k < key);
        self.entries.insert(at, (key, value));
    }

    /// Appends a binding without removing existing ones.
    pub fn push_raw(&mut self, key: K, value: V) {
        let at = self.entries.partition_point(|(k, _)| *k <= key);
        self.entries.insert(at, (key, value));
    }

    pub fn remove(&mut self, key: &K) {
        self.entries.retain(|(k, _)| k != key);
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&K, &V) -> bool) {
        self.entries.retain(|(k, v)| keep(k, v));
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &V)> {
        self.entries.iter().map(|(k, v)| (k, v))
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut V> {
        self.entries.iter_mut().map(|(_, v)| v)
    }

    pub fn keys(&self) -> impl Iterator<Item = &K> {
        self.entries.iter().map(|(k, _)| k)
    }

    pub fn key_set(&self) -> BTreeSet<&K> {
        self.keys().collect()
    }

    pub fn has_duplicate_keys(&self) -> bool {
        self.entries.windows(2).any(|w| w[0].0 == w[1].0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl<K: Ord, V> FromIterator<(K, V)> for FiniteMap<K, V> {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        Self::from_entries(iter)
    }
}

impl<K: Serialize, V: Serialize> Serialize for FiniteMap<K, V> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.entries.serialize(serializer)
    }
}

impl<'de, K: Deserialize<'de> + Ord, V: Deserialize<'de>> Deserialize<'de> for FiniteMap<K, V> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let entries = Vec::<(K, V)>::deserialize(deserializer)?;
        Ok(FiniteMap::from_entries(entries))
    }
}

/// Permanent delegation: `app` may perform `op` on `uri` of provider `provider`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PermanentDelegation {
    pub app: AppId,
    pub provider: CompId,
    pub uri: Uri,
    pub op: OpTy,
}

/// Temporary delegation held by a running instance.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TemporaryDelegation {
    pub instance: InstanceId,
    pub provider: CompId,
    pub uri: Uri,
    pub op: OpTy,
}

/// An intent sent by a running instance and not yet consumed.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SentIntent {
    pub sender: InstanceId,
    pub intent: Intent,
}

/// The twelve-component machine state.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AndroidState {
    pub installed_apps: BTreeSet<AppId>,
    pub granted_groups: FiniteMap<AppId, BTreeSet<PermGroupId>>,
    pub granted_perms: FiniteMap<AppId, BTreeSet<PermId>>,
    pub running: FiniteMap<InstanceId, CompId>,
    pub del_p_perms: BTreeSet<PermanentDelegation>,
    pub del_t_perms: BTreeSet<TemporaryDelegation>,
    pub resources: FiniteMap<(AppId, ResId), Value>,
    pub sent_intents: BTreeSet<SentIntent>,
    pub manifests: FiniteMap<AppId, Manifest>,
    pub certs: FiniteMap<AppId, Cert>,
    pub defined_perms: FiniteMap<AppId, BTreeSet<Perm>>,
    pub system_image: BTreeSet<SysImgApp>,
}

impl AndroidState {
    pub fn empty() -> Self {
        Self::default()
    }

    /// A state with only the given system image, each system app having
    /// empty grant sets.
    pub fn with_system_image(apps: impl IntoIterator<Item = SysImgApp>) -> Self {
        let mut s = AndroidState::default();
        for app in apps {
            s.granted_groups.insert(app.id.clone(), BTreeSet::new());
            s.granted_perms.insert(app.id.clone(), BTreeSet::new());
            s.system_image.insert(app);
        }
        s
    }
}

/// Platform permissions that exist without any app defining them, and the
/// permission requirements of privileged API calls.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Platform {
    #[serde(default)]
    pub builtin_perms: BTreeSet<Perm>,
    #[serde(default)]
    pub syscalls: BTreeMap<SysCall, BTreeSet<PermId>>,
}

impl Platform {
    pub fn builtin(&self, id: &PermId) -> Option<&Perm> {
        self.builtin_perms.iter().find(|p| &p.id == id)
    }

    pub fn is_builtin(&self, id: &PermId) -> bool {
        self.builtin(id).is_some()
    }

    /// A small sample catalog resembling the Android 6 platform permissions.
    pub fn sample() -> Self {
        use PermLevel::*;
        let builtin_perms = [
            Perm::new("INTERNET", None, Normal),
            Perm::new("VIBRATE", None, Normal),
            Perm::new("CAMERA", None, Dangerous),
            Perm::new("BODY_SENSORS", None, Dangerous),
            Perm::new("READ_CONTACTS", Some("CONTACTS"), Dangerous),
            Perm::new("WRITE_CONTACTS", Some("CONTACTS"), Dangerous),
            Perm::new("READ_CALENDAR", Some("CALENDAR"), Dangerous),
            Perm::new("WRITE_CALENDAR", Some("CALENDAR"), Dangerous),
            Perm::new("BIND_DEVICE_ADMIN", None, Signature),
            Perm::new("INSTALL_PACKAGES", None, SignatureOrSystem),
        ]
        .into_iter()
        .collect();
        let ids = |xs: &[&str]| xs.iter().map(|x| PermId::from(*x)).collect::<BTreeSet<_>>();
        let syscalls = [
            ("openSocket", ids(&["INTERNET"])),
            ("vibrate", ids(&["VIBRATE"])),
            ("uptime", ids(&[])),
            ("takePicture", ids(&["CAMERA"])),
            ("queryContacts", ids(&["READ_CONTACTS"])),
            ("installPackage", ids(&["INSTALL_PACKAGES"])),
        ]
        .into_iter()
        .map(|(k, v)| (SysCall::from(k), v))
        .collect();
        Platform {
            builtin_perms,
            syscalls,
        }
    }
}

/// One request to the reference monitor.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Action {
    Install {
        app: AppId,
        #[serde(rename = "m")]
        manifest: Manifest,
        #[serde(rename = "c")]
        cert: Cert,
        #[serde(rename = "lRes")]
        resources: Vec<ResId>,
    },
    Uninstall {
        app: AppId,
    },
    Grant {
        #[serde(rename = "p")]
        perm: PermId,
        app: AppId,
    },
    Revoke {
        #[serde(rename = "p")]
        perm: PermId,
        app: AppId,
    },
    GrantPermGroup {
        #[serde(rename = "g")]
        group: PermGroupId,
        app: AppId,
    },
    RevokePermGroup {
        #[serde(rename = "g")]
        group: PermGroupId,
        app: AppId,
    },
    HasPermission {
        #[serde(rename = "p")]
        perm: PermId,
        app: AppId,
    },
    Read {
        ic: InstanceId,
        cp: CompId,
        #[serde(rename = "u")]
        uri: Uri,
    },
    Write {
        ic: InstanceId,
        cp: CompId,
        #[serde(rename = "u")]
        uri: Uri,
        #[serde(rename = "val")]
        value: Value,
    },
    StartActivity {
        #[serde(rename = "i")]
        intent: Intent,
        ic: InstanceId,
    },
    StartActivityRes {
        #[serde(rename = "i")]
        intent: Intent,
        #[serde(rename = "n")]
        token: u64,
        ic: InstanceId,
    },
    StartService {
        #[serde(rename = "i")]
        intent: Intent,
        ic: InstanceId,
    },
    SendBroadcast {
        #[serde(rename = "i")]
        intent: Intent,
        ic: InstanceId,
        #[serde(rename = "p")]
        perm: Option<PermId>,
    },
    SendOrdBroadcast {
        #[serde(rename = "i")]
        intent: Intent,
        ic: InstanceId,
        #[serde(rename = "p")]
        perm: Option<PermId>,
    },
    #[serde(rename = "sendSBroadcast")]
    SendStickyBroadcast {
        #[serde(rename = "i")]
        intent: Intent,
        ic: InstanceId,
    },
    ResolveIntent {
        #[serde(rename = "i")]
        intent: IntentId,
        app: AppId,
    },
    ReceiveIntent {
        #[serde(rename = "i")]
        intent: IntentId,
        ic: InstanceId,
        app: AppId,
    },
    Stop {
        ic: InstanceId,
    },
    GrantP {
        ic: InstanceId,
        cp: CompId,
        app: AppId,
        #[serde(rename = "u")]
        uri: Uri,
        #[serde(rename = "pt")]
        op: OpTy,
    },
    RevokeDel {
        ic: InstanceId,
        cp: CompId,
        #[serde(rename = "u")]
        uri: Uri,
        #[serde(rename = "pt")]
        op: OpTy,
    },
    Call {
        ic: InstanceId,
        sac: SysCall,
    },
}

/// Discriminant of [`Action`], used for coverage accounting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionKind {
    Install,
    Uninstall,
    Grant,
    Revoke,
    GrantPermGroup,
    RevokePermGroup,
    HasPermission,
    Read,
    Write,
    StartActivity,
    StartActivityRes,
    StartService,
    SendBroadcast,
    SendOrdBroadcast,
    SendStickyBroadcast,
    ResolveIntent,
    ReceiveIntent,
    Stop,
    GrantP,
    RevokeDel,
    Call,
}

impl ActionKind {
    pub const ALL: [ActionKind; 21] = [
        ActionKind::Install,
        ActionKind::Uninstall,
        ActionKind::Grant,
        ActionKind::Revoke,
        ActionKind::GrantPermGroup,
        ActionKind::RevokePermGroup,
        ActionKind::HasPermission,
        ActionKind::Read,
        ActionKind::Write,
        ActionKind::StartActivity,
        ActionKind::StartActivityRes,
        ActionKind::StartService,
        ActionKind::SendBroadcast,
        ActionKind::SendOrdBroadcast,
        ActionKind::SendStickyBroadcast,
        ActionKind::ResolveIntent,
        ActionKind::ReceiveIntent,
        ActionKind::Stop,
        ActionKind::GrantP,
        ActionKind::RevokeDel,
        ActionKind::Call,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::Install => "install",
            ActionKind::Uninstall => "uninstall",
            ActionKind::Grant => "grant",
            ActionKind::Revoke => "revoke",
            ActionKind::GrantPermGroup => "grantPermGroup",
            ActionKind::RevokePermGroup => "revokePermGroup",
            ActionKind::HasPermission => "hasPermission",
            ActionKind::Read => "read",
            ActionKind::Write => "write",
            ActionKind::StartActivity => "startActivity",
            ActionKind::StartActivityRes => "startActivityRes",
            ActionKind::StartService => "startService",
            ActionKind::SendBroadcast => "sendBroadcast",
            ActionKind::SendOrdBroadcast => "sendOrdBroadcast",
            ActionKind::SendStickyBroadcast => "sendSBroadcast",
            ActionKind::ResolveIntent => "resolveIntent",
            ActionKind::ReceiveIntent => "receiveIntent",
            ActionKind::Stop => "stop",
            ActionKind::GrantP => "grantP",
            ActionKind::RevokeDel => "revokeDel",
            ActionKind::Call => "call",
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Install { .. } => ActionKind::Install,
            Action::Uninstall { .. } => ActionKind::Uninstall,
            Action::Grant { .. } => ActionKind::Grant,
            Action::Revoke { .. } => ActionKind::Revoke,
            Action::GrantPermGroup { .. } => ActionKind::GrantPermGroup,
            Action::RevokePermGroup { .. } => ActionKind::RevokePermGroup,
            Action::HasPermission { .. } => ActionKind::HasPermission,
            Action::Read { .. } => ActionKind::Read,
            Action::Write { .. } => ActionKind::Write,
            Action::StartActivity { .. } => ActionKind::StartActivity,
            Action::StartActivityRes { .. } => ActionKind::StartActivityRes,
            Action::StartService { .. } => ActionKind::StartService,
            Action::SendBroadcast { .. } => ActionKind::SendBroadcast,
            Action::SendOrdBroadcast { .. } => ActionKind::SendOrdBroadcast,
            Action::SendStickyBroadcast { .. } => ActionKind::SendStickyBroadcast,
            Action::ResolveIntent { .. } => ActionKind::ResolveIntent,
            Action::ReceiveIntent { .. } => ActionKind::ReceiveIntent,
            Action::Stop { .. } => ActionKind::Stop,
            Action::GrantP { .. } => ActionKind::GrantP,
            Action::RevokeDel { .. } => ActionKind::RevokeDel,
            Action::Call { .. } => ActionKind::Call,
        }
    }
}

macro_rules! error_codes {
    ($($variant:ident => $name:literal,)*) => {
        /// Reason an action was refused.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum ErrorCode {
            $($variant,)*
        }

        impl ErrorCode {
            pub const ALL: &'static [ErrorCode] = &[$(ErrorCode::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(ErrorCode::$variant => $name,)*
                }
            }

            pub fn from_name(name: &str) -> Option<ErrorCode> {
                match name {
                    $($name => Some(ErrorCode::$variant),)*
                    _ => None,
                }
            }
        }
    };
}

error_codes! {
    AppAlreadyInstalled => "app_already_installed",
    DuplicatedCmpId => "duplicated_cmp_id",
    DuplicatedPermId => "duplicated_perm_id",
    CmpAlreadyDefined => "cmp_already_defined",
    PermAlreadyDefined => "perm_already_defined",
    FaultyIntentFilter => "faulty_intent_filter",
    NoSuchApp => "no_such_app",
    AppIsSystem => "app_is_system",
    AppHasRunningInstances => "app_has_running_instances",
    NoSuchPerm => "no_such_perm",
    PermNotInManifest => "perm_not_in_manifest",
    PermWrongLevel => "perm_wrong_level",
    PermIsGrouped => "perm_is_grouped",
    PermAlreadyGranted => "perm_already_granted",
    PermNotGranted => "perm_not_granted",
    GroupNotInManifest => "group_not_in_manifest",
    GroupAlreadyGranted => "group_already_granted",
    GroupNotGranted => "group_not_granted",
    InstanceNotRunning => "instance_not_running",
    NoSuchProvider => "no_such_provider",
    NoSuchResource => "no_such_resource",
    NotExported => "not_exported",
    NoReadPermission => "no_read_permission",
    NoWritePermission => "no_write_permission",
    IntentIdInUse => "intent_id_in_use",
    IntentKindMismatch => "intent_kind_mismatch",
    IntentNotPending => "intent_not_pending",
    IntentNotResolvable => "intent_not_resolvable",
    IntentAlreadyResolved => "intent_already_resolved",
    IntentNotResolved => "intent_not_resolved",
    TargetNotInApp => "target_not_in_app",
    GuardNotSatisfied => "guard_not_satisfied",
    CannotGrantUri => "cannot_grant_uri",
    UnknownSystemCall => "unknown_system_call",
    SacPermissionMissing => "sac_permission_missing",
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for ErrorCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for ErrorCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        ErrorCode::from_name(&name)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown error code `{name}`")))
    }
}

/// Answer of the monitor to a single action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Response {
    Ok,
    Error(ErrorCode),
}

impl Response {
    pub fn is_ok(&self) -> bool {
        matches!(self, Response::Ok)
    }

    pub fn error_code(&self) -> Option<ErrorCode> {
        match self {
            Response::Ok => None,
            Response::Error(ec) => Some(*ec),
        }
    }
}

impl fmt::Display for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Response::Ok => f.write_str("ok"),
            Response::Error(ec) => f.write_str(ec.name()),
        }
    }
}

impl Serialize for Response {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Response {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        if name == "ok" {
            return Ok(Response::Ok);
        }
        ErrorCode::from_name(&name)
            .map(Response::Error)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown response `{name}`")))
    }
}

/// Outcome of one step: the response and the successor state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepResult {
    pub resp: Response,
    pub st: AndroidState,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_value_is_constant() {
        assert_eq!(default_value(), default_value());
    }

    #[test]
    fn finite_map_insert_replaces_and_push_raw_duplicates() {
        let mut m: FiniteMap<u32, &str> = FiniteMap::new();
        m.insert(2, "b");
        m.insert(1, "a");
        m.insert(2, "c");
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![(&1, &"a"), (&2, &"c")]);
        assert!(!m.has_duplicate_keys());
        m.push_raw(1, "z");
        assert!(m.has_duplicate_keys());
        assert_eq!(m.get(&1), Some(&"a"));
        m.remove(&1);
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn rw_covers_both_modes() {
        assert!(OpTy::Rw.covers(OpTy::Read));
        assert!(OpTy::Rw.covers(OpTy::Write));
        assert!(OpTy::Read.covers(OpTy::Read));
        assert!(!OpTy::Read.covers(OpTy::Write));
        assert!(!OpTy::Write.covers(OpTy::Rw));
    }

    #[test]
    fn error_code_names_round_trip() {
        for ec in ErrorCode::ALL {
            assert_eq!(ErrorCode::from_name(ec.name()), Some(*ec));
        }
        assert_eq!(ErrorCode::from_name("nope"), None);
    }
}
