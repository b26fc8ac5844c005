//! Pair counts of the writer-independent protocol on a corpus shaped like
//! MCYT-100: 100 writers with 25 genuine signatures and 25 skilled forgeries.

use std::error::Error;

use osvnet::ingest::{Dataset, FeatureVector, Label};
use osvnet::protocol::{build_split, verify_writer_disjointness, SplitSpec, TestMode};

pub fn run() -> Result<(), Box<dyn Error>> {
    let vectors = (0..100).flat_map(|w| {
        (0..50).map(move |s| FeatureVector {
            writer_id: format!("w{w:03}"),
            sample_id: format!("s{s:02}"),
            label: if s < 25 { Label::Genuine } else { Label::Forgery },
            values: vec![0.0],
        })
    });
    let ds = Dataset::from_vectors("mcyt-shaped", 1, vectors)?;

    println!("{:>4} {:>14} {:>12} {:>12} {:>10}", "K", "test mode", "train pairs", "test pairs", "disjoint");
    for (k, mode) in [(95, TestMode::WithForgery), (95, TestMode::GenuineOnly), (50, TestMode::WithForgery), (1, TestMode::WithForgery)] {
        let spec = SplitSpec { k, test_mode: mode, train_genuine_only: mode == TestMode::GenuineOnly, ..SplitSpec::default() };
        let split = build_split(&ds, &spec)?;
        println!(
            "{k:>4} {:>14} {:>12} {:>12} {:>10}",
            format!("{mode:?}"),
            split.train.len(),
            split.test.len(),
            verify_writer_disjointness(&split.train, &split.test)
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run()
}
