//! File format checks with independently computed expectations: a
//! hand-rolled header decoder for the binary image format and full-precision
//! CSV round trips.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use almask_cli::csv_io::{load_csv, write_dataset_csv};
use almask_cli::idx::{encode_images, encode_labels, load_idx_images, load_idx_labels, load_idx_pair};
use almask_core::{Dataset, Matrix};

fn write_tmp(dir: &Path, name: &str, bytes: &[u8]) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, bytes).unwrap();
    p
}

/// Reference-shape file pair: 60,000 images of 28x28 with labels cycling
/// through 10 classes. Only headers and payload length are interesting here.
#[test]
fn full_size_image_pair_has_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let n: usize = 60_000;
    let d: usize = 28 * 28;
    let mut pixels = vec![0u8; n * d];
    for (i, px) in pixels.iter_mut().enumerate() {
        *px = (i % 251) as u8;
    }
    let labels: Vec<u8> = (0..n).map(|i| (i % 10) as u8).collect();
    let img = write_tmp(dir.path(), "imgs", &encode_images(n as u32, 28, 28, &pixels));
    let lab = write_tmp(dir.path(), "labs", &encode_labels(&labels));

    let images = load_idx_images(&img).unwrap();
    assert_eq!(images.n, 60_000);
    assert_eq!(images.d, 784);
    let parsed = load_idx_labels(&lab).unwrap();
    assert_eq!(parsed.len(), 60_000);
    assert_eq!(parsed.iter().copied().max().unwrap() + 1, 10);
    // spot-check the rescale away from the endpoints
    assert_eq!(images.pixels[250], 250.0 / 255.0);
}

/// A second decoder written from the format description alone; both routes
/// must agree bit for bit on a random file.
#[test]
fn loader_matches_independent_decoder() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD0C5);
    let (n, rows, cols) = (50usize, 3usize, 4usize);
    let d = rows * cols;
    let pixels: Vec<u8> = (0..n * d).map(|_| rng.r#gen()).collect();
    let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..5)).collect();

    let dir = tempfile::tempdir().unwrap();
    let img = write_tmp(
        dir.path(),
        "imgs",
        &encode_images(n as u32, rows as u32, cols as u32, &pixels),
    );
    let lab = write_tmp(dir.path(), "labs", &encode_labels(&labels));
    let ds = load_idx_pair(&img, &lab).unwrap();

    // independent route: minimal decode with direct index arithmetic
    let raw = std::fs::read(&img).unwrap();
    let be = |o: usize| -> usize {
        ((raw[o] as usize) << 24)
            | ((raw[o + 1] as usize) << 16)
            | ((raw[o + 2] as usize) << 8)
            | raw[o + 3] as usize
    };
    assert_eq!(be(0), 2051);
    assert_eq!(be(4), n);
    assert_eq!(be(8) * be(12), d);
    for i in 0..n {
        for j in 0..d {
            let expected = f64::from(raw[16 + i * d + j]) / 255.0;
            assert_eq!(ds.feature_row(i)[j], expected, "pixel ({i},{j})");
        }
        assert_eq!(ds.label(i).unwrap(), labels[i] as usize);
    }
    assert_eq!(ds.n_classes(), 1 + labels.iter().copied().max().unwrap() as usize);
}

#[test]
fn csv_parse_error_cites_later_rows_too() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.csv");
    std::fs::write(&p, "a,b,y\n0,1,0\n1,oops,1\n2,2,0\n").unwrap();
    let err = load_csv(&p, Some("y")).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("row 2"), "{msg}");
    assert!(msg.contains("`b`"), "{msg}");
}

#[test]
fn csv_round_trip_is_exact_across_magnitudes() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC5F);
    let scales = [1e-12, 1e-3, 1.0, 1e7, 1e15];
    let feats = Matrix::from_fn(24, 5, |i, _| {
        let base: f64 = rng.r#gen::<f64>() * 2.0 - 1.0;
        base * scales[i % scales.len()]
    });
    let labels: Vec<usize> = (0..24).map(|i| i % 4).collect();
    let ds = Dataset::new(feats, Some(labels), 4).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.csv");
    write_dataset_csv(&p, &ds, Some("y")).unwrap();
    let back = load_csv(&p, Some("y")).unwrap();
    assert_eq!(back.len(), ds.len());
    assert_eq!(back.n_features(), ds.n_features());
    for i in 0..ds.len() {
        for j in 0..ds.n_features() {
            assert!(
                back.feature_row(i)[j].to_bits() == ds.feature_row(i)[j].to_bits(),
                "({i},{j}): {} != {}",
                back.feature_row(i)[j],
                ds.feature_row(i)[j]
            );
        }
        assert_eq!(back.label(i), ds.label(i));
    }
}

/// Point REAL_IDX_DIR at a directory holding train-images-idx3-ubyte and
/// train-labels-idx1-ubyte to check the published reference pair.
#[test]
fn reference_pair_loads_when_available() {
    let Some(dir) = std::env::var_os("REAL_IDX_DIR") else {
        eprintln!("REAL_IDX_DIR unset; skipping reference file check");
        return;
    };
    let dir = PathBuf::from(dir);
    let ds = load_idx_pair(
        &dir.join("train-images-idx3-ubyte"),
        &dir.join("train-labels-idx1-ubyte"),
    )
    .unwrap();
    assert_eq!(ds.len(), 60_000);
    assert_eq!(ds.n_features(), 784);
    assert_eq!(ds.n_classes(), 10);
}
