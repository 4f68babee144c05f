use aniso_lobe::amortizer::{load_weights, save_weights, Amortizer, PosEncConfig};
use aniso_lobe::distributions::AsgParams;
use aniso_lobe::{rng, Error, WeightsError};

fn net() -> Amortizer {
    Amortizer::init(4, PosEncConfig::default(), &mut rng::stream(11, "weights-file"))
}

#[test]
fn saved_weights_predict_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.bin");
    let a = net();
    save_weights(&a, &path).unwrap();
    let b = load_weights(&path).unwrap();
    assert_eq!(a.mlp.checksum(), b.mlp.checksum());
    let p = AsgParams::bandwidths(270.0, 0.01).unwrap();
    assert_eq!(a.predict(&p).unwrap(), b.predict(&p).unwrap());
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 1);
}

#[test]
fn damaged_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.bin");
    save_weights(&net(), &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();

    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(load_weights(&path), Err(Error::Weights(WeightsError::Truncated { .. }))));

    let mut bad = bytes.clone();
    bad[0] ^= 0xff;
    std::fs::write(&path, &bad).unwrap();
    assert!(matches!(load_weights(&path), Err(Error::Weights(WeightsError::BadMagic))));

    let mut long = bytes.clone();
    long.push(0);
    std::fs::write(&path, &long).unwrap();
    assert!(matches!(load_weights(&path), Err(Error::Weights(WeightsError::TrailingBytes(1)))));

    assert!(matches!(load_weights(&dir.path().join("missing.bin")), Err(Error::Io(_))));
}
