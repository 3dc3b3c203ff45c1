use gaugeforge::f2core::{image_basis, inverse, kernel_basis, rank, solve, F2Matrix, F2Vector, Span};
use proptest::prelude::*;

fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = F2Matrix> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop::collection::vec(any::<bool>(), c), r).prop_map(move |rows| {
            F2Matrix::from_rows(c, rows.iter().map(|b| F2Vector::from_bools(b)).collect()).unwrap()
        })
    })
}

/// Matrices with exactly `cols` columns and up to `max_rows` rows.
fn matrix_with(max_rows: usize, cols: usize) -> impl Strategy<Value = F2Matrix> {
    (1..=max_rows).prop_flat_map(move |r| {
        prop::collection::vec(prop::collection::vec(any::<bool>(), cols), r)
            .prop_map(move |rows| F2Matrix::from_rows(cols, rows.iter().map(|b| F2Vector::from_bools(b)).collect()).unwrap())
    })
}

proptest! {
    #[test]
    fn rank_nullity(m in matrix(12, 12)) {
        let k = kernel_basis(&m);
        prop_assert_eq!(rank(&m) + k.len(), m.cols());
        for v in &k {
            prop_assert!(m.mul_vec(v).unwrap().is_zero());
        }
        prop_assert_eq!(Span::from_vectors(m.cols(), &k).dim(), k.len());
    }

    #[test]
    fn row_rank_equals_column_rank(m in matrix(12, 12)) {
        prop_assert_eq!(rank(&m), rank(&m.transpose()));
        prop_assert_eq!(image_basis(&m).len(), rank(&m));
    }

    #[test]
    fn solve_finds_preimages(m in matrix(10, 10), bits in prop::collection::vec(any::<bool>(), 10)) {
        let x = F2Vector::from_bools(&bits[..m.cols()]);
        let b = m.mul_vec(&x).unwrap();
        let y = solve(&m, &b).unwrap().expect("b is in the image");
        prop_assert_eq!(m.mul_vec(&y).unwrap(), b);
    }

    #[test]
    fn solve_rejects_exactly_outside_image(m in matrix(8, 8), bits in prop::collection::vec(any::<bool>(), 8)) {
        let b = F2Vector::from_bools(&bits[..m.rows()]);
        let image = Span::from_vectors(m.rows(), &image_basis(&m));
        prop_assert_eq!(solve(&m, &b).unwrap().is_some(), image.contains(&b));
    }

    #[test]
    fn inverse_when_full_rank(m in matrix(8, 8)) {
        let square = m.rows() == m.cols() && rank(&m) == m.rows();
        match inverse(&m) {
            Some(inv) => {
                prop_assert!(square);
                prop_assert_eq!(m.mul(&inv).unwrap(), F2Matrix::identity(m.rows()));
            }
            None => prop_assert!(!square),
        }
    }

    #[test]
    fn product_rank_bound((a, b) in (1..=8usize).prop_flat_map(|k| (matrix_with(8, k), matrix_with(8, k).prop_map(|m| m.transpose())))) {
        let ab = a.mul(&b).unwrap();
        prop_assert!(rank(&ab) <= rank(&a).min(rank(&b)));
    }
}
