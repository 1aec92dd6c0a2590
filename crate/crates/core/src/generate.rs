//! Seeded synthetic instances with warehouse-location-like geometry.
//!
//! Facilities and customers are scattered over a square; the unit shipping
//! cost grows with distance. All costs are integral, so optimal values are
//! exact in floating point.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::instance::Instance;

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub customers: usize,
    pub facilities: usize,
    /// Probability that any given customer pair is incompatible.
    pub incompat_density: f64,
    pub demand: (u64, u64),
    pub capacity: (u64, u64),
    pub opening_cost: (u64, u64),
    /// Side length of the square; unit shipping cost is
    /// `1 + round(distance * distance_cost)`.
    pub side: f64,
    pub distance_cost: f64,
}

impl GeneratorConfig {
    pub fn new(customers: usize, facilities: usize, incompat_density: f64) -> Self {
        Self {
            customers,
            facilities,
            incompat_density,
            demand: (5, 35),
            capacity: (60, 200),
            opening_cost: (300, 900),
            side: 100.0,
            distance_cost: 0.5,
        }
    }
}

/// Generates a deterministic instance for `seed`. Total capacity is at least
/// 1.2 times total demand: when the random draw falls short, the missing
/// units are spread round-robin over the facilities.
///
/// # Panics
///
/// When a count is zero, a range is empty or not positive, or the density
/// lies outside `[0, 1]`.
pub fn generate_instance(seed: u64, config: &GeneratorConfig) -> Instance {
    let GeneratorConfig {
        customers: n,
        facilities: m,
        incompat_density,
        demand,
        capacity,
        opening_cost,
        side,
        distance_cost,
    } = *config;
    assert!(n > 0 && m > 0, "generator needs at least one customer and facility");
    assert!((0.0..=1.0).contains(&incompat_density), "density must lie in [0, 1]");
    assert!(demand.0 >= 1 && demand.0 <= demand.1, "bad demand range");
    assert!(capacity.0 >= 1 && capacity.0 <= capacity.1, "bad capacity range");
    assert!(opening_cost.0 <= opening_cost.1, "bad opening cost range");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| (rng.gen::<f64>() * side, rng.gen::<f64>() * side);
    let sites: Vec<(f64, f64)> = (0..m).map(|_| point(&mut rng)).collect();
    let clients: Vec<(f64, f64)> = (0..n).map(|_| point(&mut rng)).collect();

    let demands: Vec<u64> = (0..n)
        .map(|_| rng.gen_range(demand.0..=demand.1))
        .collect();
    let mut capacities: Vec<u64> = (0..m)
        .map(|_| rng.gen_range(capacity.0..=capacity.1))
        .collect();
    let opening_costs: Vec<f64> = (0..m)
        .map(|_| rng.gen_range(opening_cost.0..=opening_cost.1) as f64)
        .collect();

    // 5 * capacity >= 6 * demand, exactly in integers.
    let total_demand: u64 = demands.iter().sum();
    let required = (6 * total_demand).div_ceil(5);
    let mut total_capacity: u64 = capacities.iter().sum();
    let mut j = 0;
    while total_capacity < required {
        let missing = required - total_capacity;
        let step = missing.div_ceil((m - j) as u64).max(1);
        capacities[j] += step;
        total_capacity += step;
        j = (j + 1) % m;
    }

    let ship_costs: Vec<Vec<f64>> = clients
        .iter()
        .map(|&(cx, cy)| {
            sites
                .iter()
                .map(|&(fx, fy)| {
                    let dist = ((cx - fx).powi(2) + (cy - fy).powi(2)).sqrt();
                    1.0 + (dist * distance_cost).round()
                })
                .collect()
        })
        .collect();

    let mut pairs = Vec::new();
    if incompat_density > 0.0 {
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(incompat_density) {
                    pairs.push((a, b));
                }
            }
        }
    }

    Instance::new(demands, capacities, opening_costs, ship_costs, pairs)
        .expect("generated data satisfies the instance invariants")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::parse_instance;

    #[test]
    fn same_seed_same_instance() {
        let cfg = GeneratorConfig::new(6, 3, 0.1);
        assert_eq!(generate_instance(1, &cfg), generate_instance(1, &cfg));
        assert_ne!(generate_instance(1, &cfg), generate_instance(2, &cfg));
    }

    #[test]
    fn zero_density_has_no_pairs() {
        let inst = generate_instance(3, &GeneratorConfig::new(40, 10, 0.0));
        assert!(inst.incompatible_pairs().is_empty());
    }

    #[test]
    fn slack_is_enforced_even_for_tight_ranges() {
        let mut cfg = GeneratorConfig::new(30, 4, 0.0);
        cfg.capacity = (1, 2);
        let inst = generate_instance(9, &cfg);
        assert!(5 * inst.total_capacity() >= 6 * inst.total_demand());
    }

    #[test]
    fn wlp01_scale_instance_is_clean() {
        // wlp01 has 50 facilities and 115 customers.
        let inst = generate_instance(7, &GeneratorConfig::new(115, 50, 0.02));
        let text = inst.to_string();
        let parsed = parse_instance(&text).unwrap();
        assert_eq!(parsed, inst);
        assert!(parsed.feasibility_bound().capacity_covers_demand);
        assert!(5 * parsed.total_capacity() >= 6 * parsed.total_demand());
    }
}
