use droidsec::genfuzz::{gen_action, gen_valid_state, rng_from_seed};
use droidsec::io::{emit_trace, parse_trace, TraceFile};
use droidsec::queries as q;
use droidsec::traces::run_unchecked;
use droidsec::{check_validity, step, Action, Platform};
use proptest::prelude::*;

fn random_walk(seed: u64, size: usize, len: usize) -> (droidsec::AndroidState, Vec<Action>) {
    let platform = Platform::sample();
    let s = gen_valid_state(seed, size, &platform);
    let mut rng = rng_from_seed(seed.wrapping_add(1));
    let mut cur = s.clone();
    let mut actions = vec![];
    for _ in 0..len {
        let a = gen_action(&mut rng, &cur, &platform, 0.7);
        cur = step(&cur, &a, &platform).st;
        actions.push(a);
    }
    (s, actions)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_reachable_state_is_valid(seed in any::<u64>(), size in 0usize..5, len in 0usize..25) {
        let platform = Platform::sample();
        let (s, actions) = random_walk(seed, size, len);
        let report = run_unchecked(&s, &actions, &platform, false);
        for st in &report.states {
            prop_assert!(check_validity(st, &platform).is_valid());
        }
    }

    #[test]
    fn prefix_replay_agrees(seed in any::<u64>(), size in 0usize..5, len in 1usize..20, cut in 0usize..20) {
        let platform = Platform::sample();
        let (s, actions) = random_walk(seed, size, len);
        let cut = cut.min(actions.len());
        let full = run_unchecked(&s, &actions, &platform, false);
        let prefix = run_unchecked(&s, &actions[..cut], &platform, false);
        prop_assert_eq!(&full.records()[..cut], &prefix.records()[..]);
    }

    #[test]
    fn trace_files_round_trip(seed in any::<u64>(), size in 0usize..4, len in 0usize..10) {
        let (s, actions) = random_walk(seed, size, len);
        let file = TraceFile::new(Some(s), Platform::sample(), actions);
        let text = emit_trace(&file);
        let back = parse_trace(&text).unwrap();
        prop_assert_eq!(emit_trace(&back), text);
        prop_assert_eq!(back, file);
    }

    #[test]
    fn grouped_permissions_ignore_individual_grants(seed in any::<u64>(), size in 1usize..5) {
        let platform = Platform::sample();
        let s = gen_valid_state(seed, size, &platform);
        for app in q::present_apps(&s) {
            for p in platform.builtin_perms.iter().filter(|p| p.group.is_some()) {
                let mut t = s.clone();
                let held = q::app_has_permission(app, p, &s);
                let mut grants = t.granted_perms.get(app).cloned().unwrap_or_default();
                if !grants.insert(p.id.clone()) {
                    grants.remove(&p.id);
                }
                t.granted_perms.insert(app.clone(), grants);
                prop_assert_eq!(q::app_has_permission(app, p, &t), held);
            }
        }
    }

    #[test]
    fn granting_never_takes_permissions_away(seed in any::<u64>(), size in 1usize..5, len in 1usize..15) {
        let platform = Platform::sample();
        let (s, actions) = random_walk(seed, size, len);
        let mut cur = s;
        for a in actions {
            let r = step(&cur, &a, &platform);
            if matches!(a, Action::Grant { .. } | Action::GrantPermGroup { .. }) && r.resp.is_ok() {
                let mut perms: Vec<_> = platform.builtin_perms.iter().cloned().collect();
                for app in q::present_apps(&cur) {
                    perms.extend(q::get_def_perms_for_app(app, &cur));
                }
                for app in q::present_apps(&cur) {
                    for p in &perms {
                        if q::app_has_permission(app, p, &cur) {
                            prop_assert!(q::app_has_permission(app, p, &r.st));
                        }
                    }
                }
            }
            cur = r.st;
        }
    }
}
