use ekcg::linalg::SparseSpdMatrix;
use ekcg_harness::{read_matrix_market, write_matrix_market};
use proptest::prelude::*;
use proptest::test_runner::FileFailurePersistence;

/// Random diagonally dominant matrix with arbitrary-magnitude entries.
fn dominant(n: usize, edges: &[(usize, usize, f64)], shift: f64) -> SparseSpdMatrix {
    let mut diag = vec![shift; n];
    let mut t = Vec::new();
    for &(i, j, v) in edges {
        let (i, j) = (i % n, j % n);
        if i == j {
            continue;
        }
        t.push((i, j, v));
        t.push((j, i, v));
        diag[i] += v.abs();
        diag[j] += v.abs();
    }
    t.extend(diag.iter().enumerate().map(|(i, &d)| (i, i, d)));
    SparseSpdMatrix::from_triplets(n, &t).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: Some(Box::new(FileFailurePersistence::Off)), ..ProptestConfig::default() })]

    #[test]
    fn round_trip_is_exact(
        n in 1usize..40,
        edges in prop::collection::vec((0usize..40, 0usize..40, -1e6f64..1e6), 0..120),
        shift in 1e-9f64..1e3,
    ) {
        let a = dominant(n, &edges, shift);
        let mut text = Vec::new();
        write_matrix_market(&a, &mut text).unwrap();
        prop_assert_eq!(read_matrix_market(text.as_slice()).unwrap(), a);
    }
}
