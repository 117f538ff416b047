use proptest::prelude::*;
use stacksim::model::Workload;
use stacksim::workloads::*;

#[test]
fn builtin_round_trip_through_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("builtin.csv");
    let set = builtin_table1();
    set.save_csv(&path).unwrap();
    let back = load_csv(&path).unwrap();
    assert_eq!(back.entries(), set.entries());
    assert_eq!(
        std::fs::read_to_string(&path).unwrap().lines().next(),
        Some("name,M,K,N")
    );
}

proptest! {
    #[test]
    fn canonical_files_are_byte_stable(rows in prop::collection::vec((1u64..1_000_000, 1u64..1_000_000, 1u64..1_000_000), 1..30)) {
        let entries: Vec<Workload> = rows
            .iter()
            .enumerate()
            .map(|(i, &(m, k, n))| Workload::new(format!("layer{i}"), m, k, n).unwrap())
            .collect();
        let mut first = Vec::new();
        WorkloadSet::new(entries, "p").unwrap().write_csv(&mut first).unwrap();
        let parsed = read_csv(first.as_slice(), "mem").unwrap();
        let mut second = Vec::new();
        parsed.write_csv(&mut second).unwrap();
        prop_assert_eq!(first, second);
    }
}
