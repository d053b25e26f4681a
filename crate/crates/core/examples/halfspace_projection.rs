// Closed-form projection onto the intersection of two half-spaces, checked
// against Dykstra's alternating projections.

use parhybrid::{euclid, project_oracle, project_two_halfspaces, ConvexSet};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let first = ConvexSet::half_space(euclid(&[1.0, 1.0, 0.0]), 1.0);
    let second = ConvexSet::half_space(euclid(&[1.0, -2.0, 0.5]), 0.0);
    for x in [euclid(&[0.0, 0.0, 0.0]), euclid(&[3.0, 0.0, 1.0]), euclid(&[2.0, 2.0, -1.0])] {
        let exact = project_two_halfspaces(&x, &first, &second)?;
        let oracle = project_oracle(&x, &[first.clone(), second.clone()], 2000)?;
        println!(
            "P({:?}) = {:?}  |exact - dykstra| = {:.1e}",
            x.coords(),
            exact.coords(),
            exact.distance(&oracle)?
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("half-space projection example failed");
}
