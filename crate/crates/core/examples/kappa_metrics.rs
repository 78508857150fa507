//! Confusion matrices, Cohen's kappa and overall accuracy.

use aset::eval::{confusion, kappa, overall_accuracy, ConfusionMatrix};

fn main() -> aset::Result<()> {
    let cm = ConfusionMatrix::from_counts(vec![vec![25, 5], vec![10, 60]])?;
    println!("{cm}");
    println!("kappa {:.4}, accuracy {:.2}\n", kappa(&cm)?, overall_accuracy(&cm)?);

    let truth = [0, 0, 1, 1, 2, 2, 2, 1];
    let pred = [0, 1, 1, 1, 2, 2, 0, 1];
    let cm = confusion(&truth, &pred, 3)?;
    println!("{cm}");
    println!("kappa {:.4}, accuracy {:.4}\n", kappa(&cm)?, overall_accuracy(&cm)?);

    // a classifier that ignores its input agrees with the truth only by chance
    let chance = ConfusionMatrix::from_counts(vec![vec![8, 12, 4], vec![4, 6, 2], vec![6, 9, 3]])?;
    println!("chance-level kappa {:.2e}", kappa(&chance)?);
    Ok(())
}
