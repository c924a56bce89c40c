//! Dev benchmark: free-annulus modulus at increasing resolution, solved by
//! both paths (constraint generation vs flow iteration) for comparison.

use std::time::Instant;

use tbmod_core::geom::domain::PlanarDomain;
use tbmod_core::geom::Point;
use tbmod_core::solver::annulus_family_modulus;

fn main() {
    let dom = PlanarDomain::new(Vec::new(), true).unwrap();
    let center = Point::new(0.0, 0.0);
    let (r_in, r_out) = (1.0, 8.0);
    let target = 2.0 * std::f64::consts::PI / (8.0f64).ln();
    let divisors: Vec<f64> = std::env::args()
        .skip(1)
        .map(|s| s.parse().expect("divisor"))
        .collect();
    let divisors = if divisors.is_empty() { vec![10.0, 15.0, 20.0, 25.0] } else { divisors };
    for d in divisors {
        let h = r_in / d;
        let t0 = Instant::now();
        let res = annulus_family_modulus(&dom, center, r_in, r_out, h, 1e-3, None).unwrap();
        println!(
            "h=r_in/{d:>5}: value {:.6} ({:+.2}% of {target:.4})  iters {}  rows {}  {:.1}s",
            res.value,
            100.0 * (res.value - target) / target,
            res.iterations,
            res.constraint_count,
            t0.elapsed().as_secs_f64()
        );
    }
}
