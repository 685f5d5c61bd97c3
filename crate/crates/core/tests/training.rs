use spamlens_core::dataset::{gen_synthetic, ingest, split, DatasetSplit};
use spamlens_core::model::{
    load_checkpoint, save_checkpoint, train, write_checkpoint, CnnModel, ModelError, TrainConfig,
};
use spamlens_core::Label;

fn small_split(n: usize) -> DatasetSplit {
    let dir = tempfile::tempdir().unwrap();
    gen_synthetic(n, 3, &dir.path().join("c")).unwrap();
    let (samples, _) = ingest(&dir.path().join("c")).unwrap();
    split(samples, 3).unwrap()
}

#[test]
fn full_batch_descent_lowers_the_loss() {
    let data = small_split(4);
    let config = TrainConfig {
        learning_rate: 1e-6,
        epochs: 4,
        batch_size: data.train.len(),
        ..TrainConfig::default()
    };
    let (_, history) = train(CnnModel::build(1), &data, &config).unwrap();
    let losses: Vec<f64> = history.iter().map(|r| r.loss).collect();
    assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
}

#[test]
fn training_is_reproducible_and_checkpoints_roundtrip() {
    let data = small_split(3);
    let config = TrainConfig {
        epochs: 2,
        batch_size: 2,
        seed: 9,
        ..TrainConfig::default()
    };
    let (a, ha) = train(CnnModel::build(9), &data, &config).unwrap();
    let (b, hb) = train(CnnModel::build(9), &data, &config).unwrap();
    assert_eq!(ha, hb);
    let bytes = write_checkpoint(&a);
    assert_eq!(bytes, write_checkpoint(&b));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    save_checkpoint(&a, &path).unwrap();
    let back = load_checkpoint(&path).unwrap();
    for (p, q) in a.params().zip(back.params()) {
        let bits =
            |t: &spamlens_core::Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(p), bits(q));
    }
    assert_eq!(write_checkpoint(&back), bytes);
}

#[test]
fn single_class_is_rejected_before_training() {
    let mut data = small_split(3);
    data.train.retain(|s| s.label == Label::Spam);
    let err = train(CnnModel::build(0), &data, &TrainConfig::default()).unwrap_err();
    assert!(matches!(err, ModelError::SingleClass(Label::Spam)));
}

#[test]
fn default_config_matches_published_hyperparameters() {
    let c = TrainConfig::default();
    assert_eq!((c.learning_rate, c.epochs, c.batch_size), (1e-4, 30, 20));
}
