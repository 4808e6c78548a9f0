//! Builds an index over a handful of words and prints each word's position.

use consensus::mphf::{build_bucketed, BucketSize, MphfConfig, MphfIndex};

fn main() {
    let words = [
        "apple", "banana", "cherry", "damson", "elderberry", "fig", "grape", "huckleberry",
    ];
    let cfg = MphfConfig::new(0.1, BucketSize::Fixed(4)).with_seed(1);
    let (index, report) = build_bucketed(&words, &cfg).expect("build");
    println!("{} keys, {:.2} bits/key", report.n, report.bits_per_key);

    let restored = MphfIndex::deserialize(&index.serialize()).expect("round trip");
    for w in words {
        println!("{w:>12} -> {}", restored.query(w.as_bytes()));
    }
}
