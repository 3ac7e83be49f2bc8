use proptest::prelude::*;

use super::*;
use crate::baselines::BaselineKind;
use crate::runner::run_episode;

fn small(splits: &[(&str, usize)]) -> Profile {
    Profile::custom("custom", splits.iter().map(|(n, c)| (n.to_string(), *c)).collect())
}

#[test]
fn quotas_balance_within_one() {
    let w: Vec<(u8, f64)> = (0..4).map(|k| (k, 1.0)).collect();
    assert_eq!(quotas(&w, 8), vec![(0, 2), (1, 2), (2, 2), (3, 2)]);
    assert_eq!(quotas(&w, 6), vec![(0, 2), (1, 2), (2, 1), (3, 1)]);
    let skew = [("a", 3.0), ("b", 1.0), ("c", 0.0)];
    assert_eq!(quotas(&skew, 10), vec![("a", 8), ("b", 2), ("c", 0)]);
}

#[test]
fn eight_tasks_two_per_domain() {
    let tasks = generate_split(&small(&[("train", 8)]), 1, "train", 8).unwrap();
    let q = split_quality(&tasks);
    assert_eq!(q.domains.values().copied().collect::<Vec<_>>(), [2, 2, 2, 2]);
    assert!(tasks.iter().all(|t| t.task_id.starts_with("train-")));
}

#[test]
fn profiles_and_overrides() {
    let large = Profile::named("large").unwrap();
    let sizes: Vec<usize> = large.splits.iter().map(|(_, c)| *c).collect();
    assert_eq!(sizes, [5000, 800, 1000]);
    assert!(matches!(Profile::named("huge"), Err(GenerateError::UnknownProfile(_))));

    let mut p = Profile::named("small").unwrap();
    p.override_split("test=7").unwrap();
    p.override_split("extra=3").unwrap();
    assert_eq!(p.splits.last().unwrap(), &("extra".to_string(), 3));
    assert_eq!(p.splits[2], ("test".to_string(), 7));
    for bad in ["test", "test=", "=4", "test=-1", "test=0", "a/b=2"] {
        assert!(p.override_split(bad).is_err(), "{bad}");
    }
}

#[test]
fn mixes_must_sum_to_one() {
    let mut p = small(&[("train", 4)]);
    p.domain_mix.insert(Domain::Crud, 0.5);
    assert!(matches!(
        generate_split(&p, 0, "train", 4),
        Err(GenerateError::BadMix { .. })
    ));
}

#[test]
fn deterministic_and_seed_sensitive() {
    let p = small(&[("dev", 40)]);
    let a = canonical::to_jsonl(&generate_split(&p, 3, "dev", 40).unwrap()).unwrap();
    let b = canonical::to_jsonl(&generate_split(&p, 3, "dev", 40).unwrap()).unwrap();
    let c = canonical::to_jsonl(&generate_split(&p, 4, "dev", 40).unwrap()).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn task_ids_hash_the_record() {
    let tasks = generate_split(&small(&[("test", 30)]), 9, "test", 30).unwrap();
    for (i, t) in tasks.iter().enumerate() {
        let mut blank = t.clone();
        blank.task_id.clear();
        let hash = canonical::digest(&blank).unwrap();
        assert_eq!(t.task_id, format!("test-{i}-{}", &hash[..8]));
    }
}

#[test]
fn one_fault_per_task_balanced_families() {
    let tasks = generate_split(&small(&[("test", 100)]), 5, "test", 100).unwrap();
    assert!(tasks.iter().all(|t| t.fault_plan.len() == 1));
    let q = split_quality(&tasks);
    assert!(q.fault_families.values().all(|&c| c == 20), "{:?}", q.fault_families);
    assert!(!q.fault_families.contains_key("none"));
}

/// Without its fault, every generated task is solvable by following the goal.
#[test]
fn fault_free_tasks_are_solvable() {
    let tasks = generate_split(&small(&[("train", 120)]), 11, "train", 120).unwrap();
    for mut t in tasks {
        t.fault_plan.clear();
        t.tool_schemas = default_schemas(t.domain);
        let trace = run_episode(&t, &mut BaselineKind::SchemaRepair.agent());
        assert!(trace.success(), "{}: {:?}", t.task_id, trace.termination);
    }
}

#[test]
fn manifest_round_trip_and_tamper() {
    let dir = tempfile::tempdir().unwrap();
    let p = small(&[("train", 12), ("dev", 4), ("test", 8)]);
    let manifest = write_dataset(&p, 2, dir.path()).unwrap();
    assert_eq!(Manifest::load(dir.path()).unwrap(), manifest);
    assert!(manifest.frozen);
    assert_eq!(verify_manifest(&manifest, dir.path()), vec![]);
    assert_eq!(load_split(dir.path(), "dev").unwrap().len(), 4);

    let dev = dir.path().join("dev.tasks.jsonl");
    let mut bytes = fs::read(&dev).unwrap();
    bytes[10] ^= 0x01;
    fs::write(&dev, &bytes).unwrap();
    let found = verify_manifest(&manifest, dir.path());
    assert_eq!(found.len(), 1);
    assert_eq!(found[0].split, "dev");

    fs::remove_file(dir.path().join("test.tasks.jsonl")).unwrap();
    let found = verify_manifest(&manifest, dir.path());
    assert_eq!(
        found.iter().map(|m| m.split.as_str()).collect::<Vec<_>>(),
        ["dev", "test"]
    );
}

#[test]
fn repeated_task_uniqueness() {
    let one = generate_split(&small(&[("x", 1)]), 0, "x", 1).unwrap();
    let repeated = vec![one[0].clone(); 5];
    let q = split_quality(&repeated);
    assert_eq!(q.instruction_uniqueness, 0.2);
    assert_eq!(q.state_uniqueness, 0.2);
    let report = quality_report([("x", &repeated[..])]);
    assert_eq!(report.duplicate_task_id_count, 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn histograms_within_one(count in 1usize..60, seed in any::<u64>()) {
        let tasks = generate_split(&small(&[("s", count)]), seed, "s", count).unwrap();
        let q = split_quality(&tasks);
        let expected = count as f64 / 4.0;
        for d in Domain::ALL {
            let got = *q.domains.get(d.as_str()).unwrap_or(&0) as f64;
            prop_assert!((got - expected).abs() < 1.0);
        }
        prop_assert_eq!(quality_report([("s", &tasks[..])]).duplicate_task_id_count, 0);
    }
}
