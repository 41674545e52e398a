use lowbit::apb::{apb_forward, decompose_apb, load_layer, store_layer, ApbParams};
use lowbit::tensor::io::{load_thm, read_tensor, store_thm, write_tensor};
use lowbit::tensor::{BitMatrix, CsrMatrix, DenseMatrix, Tensor};
use lowbit::transform::{decompose_thm, TwoBitMatrix};
use proptest::prelude::*;

fn round_trip(t: &Tensor) -> Tensor {
    let mut buf = Vec::new();
    write_tensor(&mut buf, t).unwrap();
    read_tensor(buf.as_slice()).unwrap()
}

fn dense() -> impl Strategy<Value = DenseMatrix> {
    (1usize..20, 1usize..40).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop_oneof![Just(0.0f32), -1e6f32..1e6], r * c)
            .prop_map(move |v| DenseMatrix::new(r, c, v).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn tensors_survive_a_round_trip(m in dense(), lane in prop::sample::select(vec![64usize, 128, 256, 512])) {
        let t = Tensor::Dense(m.clone());
        prop_assert_eq!(round_trip(&t), t);
        let b = BitMatrix::from_fn_with_lane(m.rows(), m.cols(), lane, |r, c| m.get(r, c) > 0.0).unwrap();
        let t = Tensor::Bits(b);
        prop_assert_eq!(round_trip(&t), t);
        let t = Tensor::Csr(CsrMatrix::from_dense(&m));
        prop_assert_eq!(round_trip(&t), t);
    }

    #[test]
    fn truncation_is_an_error(m in dense(), cut in 1usize..64) {
        let mut buf = Vec::new();
        write_tensor(&mut buf, &Tensor::Csr(CsrMatrix::from_dense(&m))).unwrap();
        let keep = buf.len().saturating_sub(cut);
        prop_assert!(read_tensor(&buf[..keep]).is_err());
    }
}

#[test]
fn planes_and_layers_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let q = TwoBitMatrix::from_fn(5, 70, 0.125, |r, c| ((r * 7 + c) % 4) as u8).unwrap();
    let planes = decompose_thm(&q).with_gamma(Some(0.5)).unwrap();
    store_thm(dir.path().join("q"), &planes).unwrap();
    assert_eq!(load_thm(dir.path().join("q")).unwrap(), planes);

    let w = DenseMatrix::from_fn(6, 33, |r, c| ((r * 33 + c) as f32 * 0.37).sin() * 2.0);
    let p = ApbParams::new(0.6, 0.5).unwrap();
    let layer = decompose_apb(&apb_forward(&w, &p), 0.6).unwrap();
    assert!(layer.nnz() > 0);
    store_layer(dir.path().join("l"), &layer).unwrap();
    let back = load_layer(dir.path().join("l")).unwrap();
    assert_eq!(back, layer);
    assert_eq!(back.reconstruct(), apb_forward(&w, &p));
}
