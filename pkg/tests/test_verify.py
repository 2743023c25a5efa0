import pytest

from rlab.errors import ConfigurationError
from rlab.verify import SUITES, run_suite


@pytest.mark.parametrize("name,knobs", [
    ("elo", {"max_n": 14, "lists_per_n": 4}),
    ("modular_elo", {"max_m": 16, "lists_per_m": 2, "n_values": (10, 60),
                     "maximizer_checks": 10}),
    ("hoeffding", {"max_n": 12, "lists_per_n": 3}),
    ("paley_zygmund", {"max_n": 12, "lists_per_n": 3}),
    ("combine_scales", {"cases": 60}),
    ("prefix", {"cases": 60}),
    ("local_clt", {"n_max": 2000}),
    ("exponent_fit", {}),
])
def test_suites_pass_at_reduced_size(name, knobs):
    res = run_suite(name, **knobs)
    assert res.suite == name
    assert res.cases_run > 0
    assert res.failures == []


def test_registry_complete():
    assert set(SUITES) == {"elo", "modular_elo", "hoeffding", "paley_zygmund",
                           "combine_scales", "prefix", "local_clt", "exponent_fit"}


def test_unknown_suite():
    with pytest.raises(ConfigurationError):
        run_suite("nope")


def test_deterministic_for_fixed_seed():
    a = run_suite("elo", seed=7, max_n=10, lists_per_n=3)
    b = run_suite("elo", seed=7, max_n=10, lists_per_n=3)
    assert a == b


def test_local_clt_constant_recorded():
    res = run_suite("local_clt", n_max=500)
    # the scaled error peaks at the very first even n
    assert res.empirical_constants["local_clt_c"] == pytest.approx(0.12838, abs=1e-4)
