//! Reads MNIST in IDX format. With two arguments (images, labels) it loads
//! those files; otherwise it writes a tiny generated IDX pair first so the
//! example runs offline.
//!
//! Run with `cargo run --example mnist_ingest [images labels]`.

use std::path::PathBuf;

use uavfl::cli::ingest_mnist;
use uavfl::cli::mnist::encode_idx;

fn main() -> uavfl::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (images, labels) = match args.as_slice() {
        [i, l] => (PathBuf::from(i), PathBuf::from(l)),
        _ => {
            let dir = std::env::temp_dir();
            let n = 30;
            let pixels: Vec<f64> = (0..n * 28 * 28).map(|i| (i % 29) as f64 / 28.0).collect();
            let digits: Vec<usize> = (0..n).map(|i| i % 10).collect();
            let (img, lab) = encode_idx(&pixels, &digits, 28, 28);
            let (i, l) = (dir.join("uavfl-demo-images.idx"), dir.join("uavfl-demo-labels.idx"));
            std::fs::write(&i, img)?;
            std::fs::write(&l, lab)?;
            (i, l)
        }
    };
    let data = ingest_mnist(&images, &labels)?;
    println!("{} samples of dimension {}", data.len(), data.dim);
    println!("per class {:?}", data.class_histogram());
    let first = data.row(0);
    println!("first image: label {}, mean intensity {:.3}", data.labels[0], first.iter().sum::<f64>() / first.len() as f64);
    Ok(())
}
