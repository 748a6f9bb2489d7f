use std::collections::BTreeMap;

use proptest::prelude::*;
use sil_core::sieve::{Sieve, SieveConfig};
use sil_core::{mean_over, MultiplicativeFunction};

fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        let mut k = 0;
        while n % d == 0 {
            n /= d;
            k += 1;
        }
        if k > 0 {
            out.push((d, k));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn direct(f: &MultiplicativeFunction, n: u64) -> f64 {
    factor(n).into_iter().map(|(p, k)| f.prime_power(p, k).unwrap()).product()
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn functions() -> Vec<MultiplicativeFunction> {
    let table = MultiplicativeFunction::parse_definition(
        "half",
        "* 1 0.5\n2 1 -1\n2 2 1\n3 1 0\n",
    )
    .unwrap();
    vec![
        MultiplicativeFunction::liouville(),
        MultiplicativeFunction::moebius_sign(),
        MultiplicativeFunction::constant_one(),
        MultiplicativeFunction::random_sign_on_primes(11),
        table,
    ]
}

#[test]
fn range_evaluation_matches_factorization() {
    let sieve = Sieve::new(SieveConfig::new(777, Default::default()).unwrap());
    for f in functions() {
        let vals = f.evaluate_range(&sieve, 1..5000).unwrap();
        for (i, v) in vals.iter().enumerate() {
            let n = i as u64 + 1;
            assert!((v - direct(&f, n)).abs() < 1e-15, "{} at {n}", f.name());
            assert!(v.abs() <= 1.0);
        }
    }
}

#[test]
fn block_evaluation_agrees_with_range_evaluation() {
    let sieve = Sieve::new(SieveConfig::default());
    let block = sieve.sieve_block(100_000..110_000).unwrap();
    for f in functions() {
        assert_eq!(
            f.evaluate_on_block(&block).unwrap(),
            f.evaluate_range(&sieve, 100_000..110_000).unwrap()
        );
    }
}

#[test]
fn partial_tables_name_the_missing_power() {
    let mut entries = BTreeMap::new();
    entries.insert((2, 1), -1.0);
    let f = MultiplicativeFunction::from_table("sparse", entries, None).unwrap();
    let err = f.evaluate_range(&Sieve::new(SieveConfig::default()), 1..10).unwrap_err();
    assert!(err.to_string().contains("f(2^2)") || err.to_string().contains("f(3^1)"), "{err}");
}

#[test]
fn means() {
    assert!((mean_over(&MultiplicativeFunction::constant_one(), 100).unwrap() - 1.01).abs() < 1e-15);
    assert_eq!(mean_over(&MultiplicativeFunction::liouville(), 5).unwrap(), 0.0);
    assert!(mean_over(&MultiplicativeFunction::liouville(), 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn multiplicative_on_coprime_pairs(m in 1u64..100_000, n in 1u64..100_000, which in 0usize..5) {
        prop_assume!(gcd(m, n) == 1);
        let f = &functions()[which];
        let sieve = Sieve::with_bound(SieveConfig::default(), 10_000_000_001).unwrap();
        let at = |k: u64| f.evaluate_range(&sieve, k..k + 1).unwrap()[0];
        prop_assert!((at(m * n) - at(m) * at(n)).abs() < 1e-15);
    }

    #[test]
    fn random_signs_are_completely_multiplicative(m in 1u64..100_000, n in 1u64..100_000, seed in any::<u64>()) {
        let f = MultiplicativeFunction::random_sign_on_primes(seed);
        let sieve = Sieve::with_bound(SieveConfig::default(), 10_000_000_001).unwrap();
        let at = |k: u64| f.evaluate_range(&sieve, k..k + 1).unwrap()[0];
        prop_assert_eq!(at(m * n), at(m) * at(n));
    }
}
