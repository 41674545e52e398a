use lowbit::kernels::{dot_binary, mbm};
use lowbit::tensor::BitMatrix;
use proptest::prelude::*;

fn pm1(bit: bool) -> i64 {
    if bit {
        1
    } else {
        -1
    }
}

fn row(bits: &[bool]) -> Vec<u64> {
    BitMatrix::from_fn(1, bits.len(), |_, c| bits[c]).row(0).to_vec()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn dot_and_mbm_match_elementwise_sums(
        (x, y, z) in (1usize..1500).prop_flat_map(|n| (
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(any::<bool>(), n),
        ))
    ) {
        let n = x.len();
        let dot: i64 = (0..n).map(|i| pm1(x[i]) * pm1(y[i])).sum();
        let masked: i64 = (0..n).filter(|&i| z[i]).map(|i| pm1(x[i]) * pm1(y[i])).sum();
        let (rx, ry, rz) = (row(&x), row(&y), row(&z));
        prop_assert_eq!(dot_binary(&rx, &ry, n).unwrap(), dot);
        prop_assert_eq!(mbm(&rx, &ry, &rz, n).unwrap(), masked);
    }
}

#[test]
fn mbm_with_full_mask_is_dot() {
    let n = 777;
    let x = row(&(0..n).map(|i| i % 3 == 0).collect::<Vec<_>>());
    let y = row(&(0..n).map(|i| i % 5 < 2).collect::<Vec<_>>());
    let ones = row(&vec![true; n]);
    assert_eq!(mbm(&x, &y, &ones, n).unwrap(), dot_binary(&x, &y, n).unwrap());
    let zeros = row(&vec![false; n]);
    assert_eq!(mbm(&x, &y, &zeros, n).unwrap(), 0);
}

#[test]
fn length_errors() {
    assert!(dot_binary(&[0; 8], &[0; 16], 64).is_err());
    assert!(dot_binary(&[0; 1], &[0; 1], 65).is_err());
    assert!(mbm(&[0; 8], &[0; 8], &[0; 1], 8).is_err());
}
