//! One conditional problem: a weighted logistic regression in two parameters
//! solved by projected Newton under box constraints.

use irt_coreset::model::{conditional_nll, SignedDesign};
use irt_coreset::solver::{conditional_gradient, fit_conditional};

fn main() -> irt_coreset::Result<()> {
    // Rows are -y_j (theta_j, -1) for five examinees answering one item.
    let theta = [-1.5, -0.5, 0.0, 0.7, 1.8];
    let y = [-1.0, -1.0, 1.0, -1.0, 1.0];
    let rows = theta.iter().zip(&y).map(|(t, s)| [-s * t, *s]).collect();
    let design = SignedDesign::logistic(rows, vec![1.0; 5])?;

    let out = fit_conditional(&design, [0.01, -6.0], [5.0, 6.0], [1.0, 0.0], 1e-10, 100)?;
    println!("a = {:.5}, b = {:.5}", out.x[0], out.x[1]);
    println!("objective {:.6} after {} Newton steps", out.objective, out.steps);
    println!("check {:.6}, gradient {:?}", conditional_nll(&design, &out.x), conditional_gradient(&design, &out.x));
    Ok(())
}
