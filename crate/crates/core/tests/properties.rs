use mpl_core::pmf::TabularPmf;
use mpl_core::support::{enumerate_partitions, enumerate_subsets, SupportSpec};
use mpl_core::{PartitionId, SubsetId};
use proptest::prelude::*;

fn pmf_strategy() -> impl Strategy<Value = TabularPmf> {
    prop::collection::vec(2usize..4, 1..4).prop_flat_map(|radices| {
        let len: usize = radices.iter().product();
        prop::collection::vec(0.0f64..1.0, len).prop_filter_map("all zero", move |w| {
            let total: f64 = w.iter().sum();
            if total <= 1e-6 {
                return None;
            }
            let values = radices.iter().map(|&r| (0..r as i64).collect()).collect();
            let spec = SupportSpec::new(values).ok()?;
            TabularPmf::new(spec, w.iter().map(|x| x / total).collect()).ok()
        })
    })
}

proptest! {
    #[test]
    fn marginals_and_conditionals_normalize(f in pmf_strategy()) {
        let spec = f.spec().clone();
        for s in enumerate_subsets(&spec).unwrap() {
            let m = f.marginalize(s).unwrap();
            prop_assert!((m.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        for t in enumerate_partitions(&spec).unwrap() {
            let c = f.condition(t).unwrap();
            let mut r = 0;
            while let Some(row) = c.rows.get(r) {
                if let Some(row) = row {
                    prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
                r += 1;
            }
            let table = f.table(t.into()).unwrap();
            prop_assert_eq!(table.sup_distance(&table).unwrap(), 0.0);
        }
    }

    #[test]
    fn ids_round_trip_through_text(mask in 1u64..(1 << 12), other in 1u64..(1 << 12)) {
        let s = SubsetId::new(mask).unwrap();
        prop_assert_eq!(s.to_string().parse::<SubsetId>().unwrap(), s);
        let right = other & !mask;
        if right != 0 {
            let p = PartitionId::new(mask, right).unwrap();
            prop_assert_eq!(p.to_string().parse::<PartitionId>().unwrap(), p);
        }
    }
}
