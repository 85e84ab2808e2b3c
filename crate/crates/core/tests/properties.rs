use proptest::prelude::*;

use replicable::parity::{gaussian_solve, Gf2System};
use replicable::rstat::{ProbVector, RoundingGrid};
use replicable::{BitVector, Error};

fn system(max_dim: usize) -> impl Strategy<Value = (usize, Vec<(u64, bool)>)> {
    (1..=max_dim).prop_flat_map(|d| (Just(d), prop::collection::vec((0..1u64 << d, any::<bool>()), 1..12)))
}

proptest! {
    #[test]
    fn gaussian_solve_matches_brute_force((d, rows) in system(8)) {
        let sys = Gf2System::from_rows(
            d,
            rows.iter().map(|&(a, c)| (BitVector::from_index(a, d), c)).collect(),
        ).unwrap();
        let brute: Vec<u64> = (0..1u64 << d)
            .filter(|&w| rows.iter().all(|&(a, c)| ((a & w).count_ones() % 2 == 1) == c))
            .collect();
        match gaussian_solve(&sys) {
            Err(Error::Inconsistent) => prop_assert!(brute.is_empty()),
            Err(e) => prop_assert!(false, "{e}"),
            Ok(sol) => {
                prop_assert_eq!(brute.len(), 1usize << sol.free_vars.len());
                prop_assert_eq!(sol.rank() + sol.free_vars.len(), d);
                let k = sol.free_vars.len();
                let mut found: Vec<u64> = (0..1u64 << k)
                    .map(|v| sol.with_free(&BitVector::from_index(v, k)).to_index())
                    .collect();
                found.sort_unstable();
                prop_assert_eq!(found, brute);
            }
        }
    }

    #[test]
    fn hex_roundtrip(bits in prop::collection::vec(any::<bool>(), 0..200)) {
        let v = BitVector::from_bools(&bits);
        prop_assert_eq!(BitVector::from_hex(&v.to_hex(), bits.len()).unwrap(), v.clone());
        prop_assert_eq!(BitVector::from_bytes(&v.to_bytes(), bits.len()).unwrap(), v);
    }

    #[test]
    fn rounding_moves_at_most_half_a_cell(
        alpha in 1e-4f64..1.0,
        rho in 0.01f64..0.99,
        frac in 0.0f64..1.0,
        v in -1e3f64..1e3,
    ) {
        let width = 6.0 * alpha / rho;
        let grid = RoundingGrid::with_offset(width, frac * width);
        let r = grid.round(v).unwrap();
        prop_assert!((r - v).abs() <= width / 2.0 * (1.0 + 1e-9));
        prop_assert_eq!(grid.round(r).unwrap(), r);
    }

    #[test]
    fn repair_lands_on_simplex(v in prop::collection::vec(-2.0f64..2.0, 1..40)) {
        let p = ProbVector::repair(v).unwrap();
        prop_assert!(p.as_slice().iter().all(|&x| x >= 0.0));
        let sum: f64 = p.as_slice().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 4.0 * f64::EPSILON, "{}", sum);
    }
}
