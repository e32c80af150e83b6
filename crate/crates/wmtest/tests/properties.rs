mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wmtest::axioms::{compute_ob, compute_ob_one_hop};
use wmtest::decide::{decide, Options};
use wmtest::hardness::{bounded_value_transform, parse_formula, plan, witness_extension, Assignment, Family};
use wmtest::io::{parse_execution, serialize_abstract, serialize_concrete, Document};
use wmtest::{check_concrete, AbstractExecution, ConcreteExecution, MemoryModel};

fn execution(seed: u64) -> AbstractExecution {
    common::random_execution(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn concrete(seed: u64) -> Option<ConcreteExecution> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = common::random_execution(&mut rng);
    common::random_concrete(&x, &mut rng)
}

fn holds(c: &ConcreteExecution, m: MemoryModel) -> bool {
    check_concrete(c, m).expect("axiomatic model")
}

fn reparse_concrete(c: &ConcreteExecution) -> ConcreteExecution {
    parse_execution(&serialize_concrete(c))
        .expect("serialized execution parses")
        .to_concrete()
        .expect("rf and mo present")
        .expect("well formed")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn model_checks_respect_strength(seed in any::<u64>()) {
        let Some(c) = concrete(seed) else { return Ok(()) };
        let pairs = [
            (MemoryModel::SRA, MemoryModel::RA),
            (MemoryModel::RA, MemoryModel::WRA),
            (MemoryModel::RA, MemoryModel::RelaxedAcyclic),
            (MemoryModel::CM, MemoryModel::WRA),
            (MemoryModel::RelaxedAcyclic, MemoryModel::Relaxed),
        ];
        for (strong, weak) in pairs {
            prop_assert!(!holds(&c, strong) || holds(&c, weak), "{strong} holds but {weak} fails");
        }
    }

    #[test]
    fn observed_before_grows_along_po(seed in any::<u64>()) {
        let Some(c) = concrete(seed) else { return Ok(()) };
        let x = c.base();
        for t in 0..x.threads().len() {
            let events = x.thread_events(t);
            for pair in events.windows(2) {
                prop_assert!(compute_ob(&c, pair[0]).is_subset(&compute_ob(&c, pair[1])));
            }
            for &e in events {
                prop_assert!(compute_ob_one_hop(&c, e).is_subset(&compute_ob(&c, e)));
            }
        }
    }

    #[test]
    fn abstract_text_round_trips(seed in any::<u64>()) {
        let x = execution(seed);
        let doc = parse_execution(&serialize_abstract(&x)).expect("serialized execution parses");
        prop_assert_eq!(doc, Document::Abstract(x));
    }

    #[test]
    fn concrete_text_round_trips(seed in any::<u64>()) {
        let Some(c) = concrete(seed) else { return Ok(()) };
        prop_assert_eq!(reparse_concrete(&c), c);
    }

    #[test]
    fn witnesses_satisfy_their_model(seed in any::<u64>()) {
        let x = execution(seed);
        for m in [MemoryModel::WRA, MemoryModel::RA, MemoryModel::SRA, MemoryModel::CM, MemoryModel::RelaxedAcyclic] {
            let v = decide(&x, m, Options::default());
            if let Some(w) = &v.witness {
                prop_assert!(holds(w, m), "{m} witness rejected");
                prop_assert_eq!(w.base(), &x);
            }
        }
    }
}

#[test]
fn generated_instances_round_trip() {
    let f = parse_formula("4 2\n1 2 3\n2 3 4").unwrap();
    let a: Assignment = "1001".parse().unwrap();
    for family in [Family::RelaxedAcyclic, Family::Ra] {
        let p = plan(&f, family);
        let x = p.execution();
        let y = bounded_value_transform(&x, &p).unwrap();
        for x in [x, y] {
            let doc = parse_execution(&serialize_abstract(&x)).unwrap();
            assert_eq!(doc, Document::Abstract(x));
        }
        let w = witness_extension(&f, &a, family).unwrap();
        assert_eq!(reparse_concrete(&w), w);
    }
}
