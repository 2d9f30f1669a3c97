use proptest::collection::vec;
use proptest::prelude::*;
use synthve::checkpoint::{decode_model, encode_model, load_model, save_model};
use synthve::jsonl::{read_manifest, read_pairs, write_manifest, write_pairs};
use synthve::store_io::{decode_store, encode_store, read_store, write_store};
use synthve::synthetic::{generate, SyntheticSpec};
use synthve_core::mlp::{Activation, Mlp, Params};
use synthve_core::{EmbeddingStore, Label};

fn store_strategy() -> impl Strategy<Value = EmbeddingStore> {
    (1usize..20, 0usize..30).prop_flat_map(|(dim, n)| {
        (
            Just(dim),
            proptest::collection::btree_set("[a-zA-Z0-9_\\-é/]{1,24}", n),
            vec(any::<f32>().prop_filter("finite", |x| x.is_finite()), dim * n),
        )
            .prop_map(|(dim, ids, data)| EmbeddingStore::new(dim, ids.into_iter().collect(), data).unwrap())
    })
}

fn model_strategy() -> impl Strategy<Value = Mlp<f32>> {
    (1usize..12, 1usize..10, prop_oneof![Just(Label::ALL.to_vec()), Just(vec![Label::Contradiction, Label::Entailment])], any::<bool>())
        .prop_flat_map(|(d_in, h, labels, relu)| {
            let d_out = labels.len();
            (
                vec(-1e6f32..1e6, d_in * h),
                vec(-1e6f32..1e6, h),
                vec(-1e6f32..1e6, h * d_out),
                vec(-1e6f32..1e6, d_out),
            )
                .prop_map(move |(w1, b1, w2, b2)| {
                    let act = if relu { Activation::Relu } else { Activation::Identity };
                    Mlp::new(d_in, h, labels.clone(), act, Params { w1, b1, w2, b2 }).unwrap()
                })
        })
}

proptest! {
    #[test]
    fn store_round_trip(store in store_strategy()) {
        let bytes = encode_store(&store).unwrap();
        let back = decode_store(&bytes).unwrap();
        prop_assert_eq!(&back, &store);
        prop_assert_eq!(encode_store(&back).unwrap(), bytes);
    }

    #[test]
    fn checkpoint_round_trip(model in model_strategy()) {
        let bytes = encode_model(&model);
        let back = decode_model(&bytes).unwrap();
        prop_assert_eq!(&back, &model);
        prop_assert_eq!(encode_model(&back), bytes);
    }

    #[test]
    fn truncated_store_rejected(store in store_strategy(), cut in any::<prop::sample::Index>()) {
        let bytes = encode_store(&store).unwrap();
        let at = cut.index(bytes.len());
        prop_assert!(decode_store(&bytes[..at]).is_err());
    }
}

#[test]
fn file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate(&SyntheticSpec { originals: [4, 2, 2], ..Default::default() }).unwrap();
    let sp = dir.path().join("s.veem");
    write_store(&ds.store, &sp).unwrap();
    let store = read_store(&sp).unwrap();
    assert_eq!(store, ds.store);

    let mp = dir.path().join("m.jsonl");
    write_manifest(&mp, &ds.entries).unwrap();
    let manifest = read_manifest(&mp, &store).unwrap();
    assert_eq!(manifest.entries(), &ds.entries[..]);

    let pp = dir.path().join("p.jsonl");
    write_pairs(&pp, &ds.pairs).unwrap();
    let pairs = read_pairs(&pp, &store, &manifest).unwrap();
    assert_eq!(pairs.examples, ds.pairs);
    assert_eq!(pairs.resolved.len(), ds.pairs.len());

    let model = Mlp::<f32>::init(5 * store.dim(), 7, Label::ALL.to_vec(), Activation::Relu, 3).unwrap();
    let cp = dir.path().join("model.bin");
    save_model(&model, &cp).unwrap();
    assert_eq!(load_model(&cp).unwrap(), model);
    assert_eq!(std::fs::read(&cp).unwrap(), encode_model(&model));
}
