//! The contrastive loss at a few distances, and the binary cross-entropy
//! head that scores `|e1 - e2|` instead.

use std::error::Error;

use osvnet::siamese::{bce_head_loss, contrastive_loss, pair_distance};

pub fn run() -> Result<(), Box<dyn Error>> {
    let anchor = [0.2, 0.4, 0.1];
    println!("{:>8} {:>12} {:>12}", "distance", "same writer", "forgery");
    for d in [0.0, 0.25, 0.5, 0.9, 1.0, 1.5] {
        let other = [anchor[0] + d, anchor[1], anchor[2]];
        let same = contrastive_loss(&anchor, &other, true, 1.0);
        let diff = contrastive_loss(&anchor, &other, false, 1.0);
        println!("{:>8.2} {:>12.4} {:>12.4}", pair_distance(&anchor, &other), same.loss, diff.loss);
    }

    let weights = [-3.0, -3.0, -3.0];
    for (label, other) in [("close", [0.25, 0.4, 0.1]), ("far", [0.9, 0.9, 0.8])] {
        let bce = bce_head_loss(&anchor, &other, &weights, 1.0, true);
        println!("bce head, {label} pair: p(same) {:.3}, loss if genuine {:.3}", bce.probability, bce.loss);
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run()
}
