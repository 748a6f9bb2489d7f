"""Smoke test for the `sil` extension module.

Build and install first:
    cd crates/py && maturin build --release -o /tmp/wheels && pip install /tmp/wheels/sil-*.whl
"""

import math

import sil


def trial_liouville(n):
    k, m, p = 0, n, 2
    while p * p <= m:
        while m % p == 0:
            m //= p
            k += 1
        p += 1
    if m > 1:
        k += 1
    return -1 if k % 2 else 1


def check_sieve():
    block = sil.sieve_block(1, 200, 3, 7)
    assert len(block) == 199
    assert block.liouville == [trial_liouville(n) for n in range(1, 200)]
    assert block.window_omega[105 - 1] == 3
    assert sil.primes_in(3, 20) == [3, 5, 7, 11, 13, 17, 19]
    lam = sil.MultiplicativeFunction.liouville()
    assert lam.values(1, 200) == [float(v) for v in block.liouville]


def check_functions():
    r = sil.MultiplicativeFunction.random(7)
    v = r.values(1, 60)
    for a in range(1, 8):
        for b in range(1, 8):
            assert v[a * b - 1] == v[a - 1] * v[b - 1]
    f = sil.MultiplicativeFunction.from_definition("* 1 -1\n2 1 0.5\n")
    assert f.prime_power(2, 1) == 0.5
    assert f.prime_power(3, 1) == -1.0


def check_variance():
    x, delta = 10_000, 0.5
    rep = sil.variance(x, delta)
    h = int(math.floor(x ** delta))
    vals = sil.MultiplicativeFunction.liouville().values(x, 2 * x + h + 1)
    brute = sum((sum(vals[i + 1 : i + h + 1]) / h) ** 2 for i in range(x)) / x
    assert abs(rep["variance"] - brute) <= 1e-12 * brute, (rep["variance"], brute)
    try:
        sil.variance(x, 1.5)
    except ValueError:
        pass
    else:
        raise AssertionError("delta outside (0,1) accepted")


def check_dirichlet():
    p = sil.DirichletPoly.from_function(1000)
    t = 17.3
    direct = sum(
        c * n ** (-1 - 1j * t)
        for n, c in zip(range(1000, 2001), sil.MultiplicativeFunction.liouville().values(1000, 2001))
    )
    assert abs(p.eval(t) - direct) < 1e-12
    est = p.mean_square(0.0, 100.0)
    assert est["accepted"]
    assert 0.0 < p.mvt_ratio(100.0) < 10.0


def check_decompositions():
    for row in sil.ramare_decompose(1000, 3, 20, [0.0, 1.0, 17.3, 1000.0]):
        assert row["relative_closure"] < 1e-12
        assert row["residual_support_violations"] == 0
    split = sil.DyadicSplit(1000, 3, 20, 2.0)
    for t in [0.0, 1.0, 17.3, 1000.0]:
        m = split.main_term(t)
        assert abs(split.reconstruct(t) + m) <= 1e-9 * max(abs(m), 1e-300)
    assert split.max_boundary_coeff() <= 1.0 + 1e-12


def check_pipeline():
    rep = sil.lemma3_compare(2000, 0.5, budget=1e8)
    assert 0.0 < rep["ratio"] <= 1.0
    chain = sil.lemma4_chain(100_000, 0.5, 316.0, window=(3, 46))
    assert chain["total"]["measured"] > 0.0
    study = sil.scaling_study([0.5], [1000, 4000], lemma3_max_x=0, mvt_max_x=0)
    assert len(study["rows"]) == 2
    assert study["trends"][0]["variance_decreasing"]


def main():
    for check in [check_sieve, check_functions, check_variance, check_dirichlet, check_decompositions, check_pipeline]:
        check()
        print(f"ok  {check.__name__}")
    print("smoke test passed")


if __name__ == "__main__":
    main()
