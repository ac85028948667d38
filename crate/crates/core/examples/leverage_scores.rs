//! The four score vectors available for two-column designs.

use irt_coreset::leverage::{leverage_l1, leverage_l2, leverage_l2_sketched, lewis_weights_l1};
use irt_coreset::model::Row2;

fn main() -> irt_coreset::Result<()> {
    let rows: Vec<Row2> = (0..2000).map(|j| [((j as f64) * 0.37).sin() * 2.0, -1.0]).chain([[9.0, -1.0]]).collect();

    let l2 = leverage_l2(&rows);
    let sketched = leverage_l2_sketched(&rows, 64, 1)?;
    let l1 = leverage_l1(&rows);
    let lewis = lewis_weights_l1(&rows, 100, 1e-12)?;
    let last = rows.len() - 1;

    println!("{:<10} {:>10} {:>12}", "kind", "sum", "outlier");
    for (name, s) in [("l2", &l2), ("l2 sketch", &sketched), ("l1", &l1), ("lewis", &lewis)] {
        println!("{name:<10} {:>10.6} {:>12.6}", s.sum(), s.values[last]);
    }
    Ok(())
}
