use hutchinson::bounds::{sample_size, tail_theorem, BoundQuery, Method, SubGamma};
use hutchinson::operator::{generate, read_matrix_market, write_matrix_market, GeneratorSpec};
use hutchinson::oracle::{exact_distribution, variance_formula};
use hutchinson::{estimate_trace, quadratic_form, DenseSymmetric, SymmetricOperator};
use proptest::prelude::*;

fn symmetric(max_dim: usize) -> impl Strategy<Value = DenseSymmetric> {
    (1..=max_dim).prop_flat_map(|m| {
        prop::collection::vec(-1e3..1e3f64, m * m).prop_map(move |mut data| {
            for i in 0..m {
                for j in 0..i {
                    data[i * m + j] = data[j * m + i];
                }
            }
            DenseSymmetric::from_row_major(m, data).unwrap()
        })
    })
}

fn wishart_spec() -> impl Strategy<Value = GeneratorSpec> {
    (2..=9usize, 1..=12usize, any::<u64>()).prop_map(|(m, k, seed)| GeneratorSpec::wishart(m, k, seed))
}

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn estimate_is_bit_reproducible(spec in wishart_spec(), n in 1u64..600, seed in any::<u64>()) {
        let a = generate(&spec).unwrap();
        let reference = estimate_trace(&a, n, seed).unwrap();
        for threads in [1, 3] {
            let again = pool(threads).install(|| estimate_trace(&a, n, seed).unwrap());
            prop_assert_eq!(again.mean.to_bits(), reference.mean.to_bits());
            prop_assert_eq!(again.sample_variance.to_bits(), reference.sample_variance.to_bits());
        }
        prop_assert!(reference.min_q <= reference.mean && reference.mean <= reference.max_q);
    }

    #[test]
    fn single_probe_matches_quadratic_form(spec in wishart_spec(), seed in any::<u64>()) {
        let a = generate(&spec).unwrap();
        let est = estimate_trace(&a, 1, seed).unwrap();
        let z = hutchinson::sampler::rademacher(a.dim(), seed, 0);
        prop_assert_eq!(est.mean.to_bits(), quadratic_form(&a, &z).unwrap().to_bits());
    }

    #[test]
    fn matrix_market_round_trip_is_exact(a in symmetric(7)) {
        let mut buf = Vec::new();
        write_matrix_market(&a, &mut buf).unwrap();
        let back = read_matrix_market(buf.as_slice()).unwrap();
        prop_assert_eq!(back.as_row_major(), a.as_row_major());
    }

    #[test]
    fn sample_size_is_monotone(eps in 0.01..0.37f64, d_eps in 0.0..0.004f64, delta in 1e-9..0.99f64, shrink in 0.01..1.0f64) {
        for method in Method::ALL {
            let q = BoundQuery::new(eps, delta).with_rank(100);
            let base = sample_size(&q, method).unwrap();
            let looser = BoundQuery::new(eps + d_eps, delta).with_rank(100);
            prop_assert!(sample_size(&looser, method).unwrap() <= base);
            let stricter = BoundQuery::new(eps, delta * shrink).with_rank(100);
            prop_assert!(sample_size(&stricter, method).unwrap() >= base);
        }
    }

    #[test]
    fn planned_size_meets_its_tail(eps in 0.005..0.374f64, delta in 1e-12..0.999f64) {
        let n = sample_size(&BoundQuery::new(eps, delta), Method::ThisWork).unwrap();
        prop_assert!(tail_theorem(eps, n).unwrap() <= delta * (1.0 + 1e-12));
    }

    #[test]
    fn subgamma_sum_dominates_parts(parts in prop::collection::vec((0.0..5.0f64, 0.0..3.0f64), 1..6), frac in 0.01..0.99f64) {
        let parts: Vec<SubGamma> = parts.into_iter().map(|(v, c)| SubGamma::new(v, c).unwrap()).collect();
        let total = SubGamma::sum(&parts).unwrap();
        let c_max = parts.iter().map(|p| p.c).fold(0.0, f64::max);
        let t = if c_max > 0.0 { frac / c_max } else { frac };
        let separate: f64 = parts.iter().map(|p| p.mgf_envelope(t).unwrap()).sum();
        prop_assert!(total.mgf_envelope(t).unwrap() >= separate * (1.0 - 1e-12));
    }

    #[test]
    fn exact_oracle_is_consistent(spec in wishart_spec()) {
        let a = generate(&spec).unwrap();
        let dist = exact_distribution(&a).unwrap();
        let tr = a.exact_trace();
        prop_assert!((dist.mean() - tr).abs() <= 1e-12 * tr);
        let var = dist.abs_moment(2) * tr * tr;
        prop_assert!((var - variance_formula(&a)).abs() <= 1e-10 * var.max(1e-300));
        for d in 1..8 {
            prop_assert!(dist.abs_norm(d) <= dist.abs_norm(d + 1) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn generated_matrices_are_psd(spec in wishart_spec()) {
        let a = generate(&spec).unwrap();
        prop_assert!(a.check_psd().is_ok());
        prop_assert!(a.rank().unwrap() <= spec.k.min(spec.dim));
    }
}
