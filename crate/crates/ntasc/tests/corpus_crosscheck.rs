use ntasc::contextual::find_restriction;
use ntasc::corpus::corpus;
use ntasc::model::normalize_sync_guards;
use ntasc::regions::DEFAULT_BUDGET;
use ntasc::smod::{analysis_smod, sad_reachable, Engine};

#[test]
fn error_reachability_matches_restriction_on_random_networks() {
    let mut mismatches = Vec::new();
    for (i, n) in corpus(0, 500).into_iter().enumerate() {
        let n = normalize_sync_guards(&n);
        let sad = sad_reachable(&analysis_smod(&n), Engine::Region, DEFAULT_BUDGET).unwrap().is_some();
        let restr = find_restriction(&n, DEFAULT_BUDGET).unwrap().is_some();
        if sad != restr {
            mismatches.push((i, sad, restr));
        }
    }
    assert!(mismatches.is_empty(), "{mismatches:?}");
}

#[test]
fn region_and_zone_engines_agree_on_random_networks() {
    let mut mismatches = Vec::new();
    for (i, n) in corpus(0, 500).into_iter().enumerate() {
        let s = analysis_smod(&normalize_sync_guards(&n));
        let r = sad_reachable(&s, Engine::Region, DEFAULT_BUDGET).unwrap().is_some();
        let z = sad_reachable(&s, Engine::Zone, DEFAULT_BUDGET).unwrap().is_some();
        if r != z {
            mismatches.push(i);
        }
    }
    assert!(mismatches.is_empty(), "{mismatches:?}");
}
