//! Print the cross-validated accuracy table over every built-in study
//! preset, plus the derived comparisons the synthetic studies are designed
//! to exhibit (size ordering, pinch-vs-chord gap, grid-distance falloff).
//!
//! ```text
//! cargo run --release --example accuracy_trends [seed]
//! ```

use std::collections::BTreeSet;

use magprints::classifier::{cross_validate, DEFAULT_EPOCHS, DEFAULT_FOLDS, DEFAULT_LAMBDA};
use magprints::magnetics::Polarity;
use magprints::presets::{
    by_name, filter_by_cells, generate_dataset, study1, study1_two_fingerprints, study2,
    study2_chorded, study3,
};
use magprints::synth::Grid;

fn cv(dataset: &magprints::classifier::Dataset, seed: u64) -> (f64, f64) {
    let report = cross_validate(dataset, DEFAULT_FOLDS, DEFAULT_LAMBDA, DEFAULT_EPOCHS, seed)
        .expect("cross-validation");
    (report.mean_accuracy, report.std_dev)
}

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    println!("seed {seed}\n");
    println!("{:<34}{:>10}{:>9}", "dataset", "mean %", "SD");

    let row = |name: &str, dataset: &magprints::classifier::Dataset| -> f64 {
        let start = std::time::Instant::now();
        let (mean, sd) = cv(dataset, seed);
        println!("{name:<34}{mean:>10.2}{sd:>9.2}  ({:.1}s)", start.elapsed().as_secs_f64());
        mean
    };

    // Tap studies: size sweep of the single fingerprint, all discs 0.8 mm tall.
    let mut tap = std::collections::BTreeMap::new();
    for diameter in [3.2, 7.9, 12.7] {
        let preset = study1(diameter, 0.8, Polarity::NorthUp).unwrap();
        let dataset = generate_dataset(&preset, seed).unwrap();
        let mean = row(&format!("taps 1fp {diameter}x0.8"), &dataset);
        tap.insert(format!("{diameter}"), mean);
    }

    // Two fingerprints, opposite polarities, same 12.7 mm disc as the
    // single-fingerprint row above so the number-of-magnets effect is isolated.
    let preset = study1_two_fingerprints(12.7, 0.8).unwrap();
    let dataset = generate_dataset(&preset, seed).unwrap();
    let two_fp = row("taps 2fp 12.7x0.8", &dataset);

    // Pinches, plain vs chorded hands.
    let preset = study2(7.9, 0.8, Polarity::NorthUp).unwrap();
    let dataset = generate_dataset(&preset, seed).unwrap();
    let pinch = row("pinch 7.9x0.8", &dataset);

    let preset = study2_chorded(12.7, 0.8).unwrap();
    let dataset = generate_dataset(&preset, seed).unwrap();
    let chord = row("chorded pinch 12.7x0.8", &dataset);

    // Tablet grid: height sweep, full grid vs sensor-near sub-grid.
    let grid = Grid::new(8, 6).unwrap();
    let near: BTreeSet<(u32, u32)> =
        grid.cells_near_sensor(4.0, 3.0).unwrap().into_iter().collect();
    let mut tablet_full = std::collections::BTreeMap::new();
    let mut tablet_sub = std::collections::BTreeMap::new();
    for height in [0.8, 1.6, 2.4] {
        let preset = study3(12.7, height, Polarity::NorthUp).unwrap();
        let dataset = generate_dataset(&preset, seed).unwrap();
        let full = row(&format!("tablet 12.7x{height} 8x6"), &dataset);
        let sub_ds = filter_by_cells(&dataset, &near).unwrap();
        let sub = row(&format!("tablet 12.7x{height} 4x3 sub"), &sub_ds);
        tablet_full.insert(format!("{height}"), full);
        tablet_sub.insert(format!("{height}"), sub);
    }

    println!("\nderived comparisons:");
    let ok = |b: bool| if b { "ok " } else { "FAIL" };
    println!("  [{}] 1fp 7.9 >= 95                 ({:.2})", ok(tap["7.9"] >= 95.0), tap["7.9"]);
    println!(
        "  [{}] 2fp >= 90, < 1fp same disc    ({:.2} vs {:.2})",
        ok(two_fp >= 90.0 && two_fp < tap["12.7"]),
        two_fp,
        tap["12.7"]
    );
    println!(
        "  [{}] size order 3.2 < 7.9          ({:.2} < {:.2})",
        ok(tap["3.2"] < tap["7.9"]),
        tap["3.2"],
        tap["7.9"]
    );
    println!(
        "  [{}] |7.9 - 12.7| <= 3             ({:.2} vs {:.2})",
        ok((tap["7.9"] - tap["12.7"]).abs() <= 3.0),
        tap["7.9"],
        tap["12.7"]
    );
    println!("  [{}] pinch >= 95                   ({pinch:.2})", ok(pinch >= 95.0));
    println!(
        "  [{}] chord <= pinch - 10           ({chord:.2} vs {pinch:.2})",
        ok(chord <= pinch - 10.0)
    );
    println!(
        "  [{}] tablet 0.8: full < sub        ({:.2} < {:.2})",
        ok(tablet_full["0.8"] < tablet_sub["0.8"]),
        tablet_full["0.8"],
        tablet_sub["0.8"]
    );
    println!(
        "  [{}] tablet full: 2.4 >= 0.8       ({:.2} vs {:.2})",
        ok(tablet_full["2.4"] >= tablet_full["0.8"]),
        tablet_full["2.4"],
        tablet_full["0.8"]
    );

    // Exercise the name-based lookup too, so the example covers the CLI path.
    let _ = by_name("study1", 7.9, 0.8, Polarity::NorthUp).unwrap();
}
