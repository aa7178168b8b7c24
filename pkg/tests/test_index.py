import math

import pytest
from hypothesis import assume, given, settings, strategies as st

from sitmark.errors import DomainError, ValidationError
from sitmark.index import ProviderQuote, capped_weights, compute_tpi, qualifies_as_sit, sit_equivalent_price

OK = {"MMLU": 90.0, "HumanEval": 70.0, "GSM8K": 95.0}


def quote(pid, raw=1.0, cap_score=100.0, vol=1.0, bench=OK):
    return ProviderQuote(pid, raw, cap_score, vol, dict(bench))


def threshold_oracle(volumes, cap):
    """Capped weights as min(cap, c * V_i) with c found by bisection so they sum to 1."""
    total = sum(volumes)
    lo, hi = 0.0, total / min(v for v in volumes if v > 0)
    for _ in range(200):
        c = 0.5 * (lo + hi)
        s = sum(min(cap, c * v / total) for v in volumes)
        lo, hi = (c, hi) if s < 1 else (lo, c)
    c = 0.5 * (lo + hi)
    return [min(cap, c * v / total) for v in volumes]


@pytest.mark.parametrize(
    "scores, expected",
    [((86, 67, 92), True), ((85.9, 99, 99), False), ((90, 70, 95), True), ((99, 66.99, 99), False), ((99, 99, 91.9), False)],
)
def test_qualification(scores, expected):
    assert qualifies_as_sit(dict(zip(("MMLU", "HumanEval", "GSM8K"), scores))) is expected


def test_qualification_case_insensitive_and_missing_key():
    assert qualifies_as_sit({"mmlu": 90, "humaneval": 70, "gsm8k": 95})
    with pytest.raises(ValidationError, match="HumanEval"):
        qualifies_as_sit({"MMLU": 90, "GSM8K": 95})


def test_sit_equivalent_price_examples():
    assert sit_equivalent_price(quote("a", raw=2.5, cap_score=100.0)) == 2.5
    assert sit_equivalent_price(quote("a", raw=1.0, cap_score=200.0)) == 0.5
    assert sit_equivalent_price(quote("a", raw=3.0, cap_score=80.0), 100.0) == pytest.approx(3.75, abs=1e-15)
    with pytest.raises(DomainError):
        quote("a", cap_score=0.0)


def test_weights_examples():
    with pytest.raises(DomainError, match="at least 4"):
        capped_weights([quote("a"), quote("b")], 0.30)
    w = capped_weights([quote(k) for k in "abcd"], 0.30)
    assert all(v == pytest.approx(0.25, abs=1e-15) for v in w.values())
    w = capped_weights([quote("a", vol=70), quote("b", vol=20), quote("c", vol=5), quote("d", vol=5)], 0.30)
    expected = threshold_oracle([70, 20, 5, 5], 0.30)
    for k, e in zip("abcd", expected):
        assert w[k] == pytest.approx(e, abs=1e-12)
    assert [w[k] for k in "abcd"] == pytest.approx([0.30, 0.30, 0.20, 0.20], abs=1e-12)


def test_weight_errors():
    with pytest.raises(DomainError, match="zero"):
        capped_weights([quote(k, vol=0.0) for k in "abcd"])
    with pytest.raises(ValidationError, match="duplicate"):
        capped_weights([quote("a"), quote("a"), quote("b"), quote("c")])
    with pytest.raises(DomainError):
        capped_weights([])
    # zero-volume providers do not count toward feasibility
    with pytest.raises(DomainError):
        capped_weights([quote("a"), quote("b"), quote("c"), quote("d", vol=0.0)], 0.30)


def test_tpi_examples():
    assert compute_tpi([quote("solo", raw=1.7)], cap=1.0).tpi == pytest.approx(1.7)
    assert compute_tpi([quote("a", raw=2.0), quote("b", raw=4.0)], cap=0.5).tpi == pytest.approx(3.0, abs=1e-15)
    qs = [quote(k, raw=p, vol=v) for k, p, v in zip("abcd", (1.0, 2.0, 3.0, 4.0), (70, 20, 5, 5))]
    assert compute_tpi(qs).tpi == pytest.approx(2.3, abs=1e-12)


def test_tpi_rejects_unqualified_provider():
    qs = [quote(k) for k in "abcd"] + [quote("weak", bench={"MMLU": 80, "HumanEval": 70, "GSM8K": 95})]
    with pytest.raises(ValidationError, match="weak"):
        compute_tpi(qs)
    with pytest.raises(ValidationError, match="nobench"):
        compute_tpi([quote(k) for k in "abcd"] + [quote("nobench", bench={"MMLU": 90})])


volumes = st.lists(st.floats(min_value=1e-3, max_value=1e6), min_size=4, max_size=12)
caps = st.floats(min_value=0.05, max_value=1.0)


@settings(max_examples=200)
@given(volumes, caps)
def test_weights_match_threshold_oracle(vols, cap):
    assume(cap * len(vols) >= 1)
    w = capped_weights([quote(f"p{i}", vol=v) for i, v in enumerate(vols)], cap)
    got = [w[f"p{i}"] for i in range(len(vols))]
    assert math.fsum(got) == pytest.approx(1.0, abs=1e-12)
    assert max(got) <= cap + 1e-12
    assert got == pytest.approx(threshold_oracle(vols, cap), abs=1e-9)


@settings(max_examples=200)
@given(volumes, caps)
def test_cap_idempotence(vols, cap):
    assume(cap * len(vols) >= 1)
    w = capped_weights([quote(f"p{i}", vol=v) for i, v in enumerate(vols)], cap)
    again = capped_weights([quote(k, vol=v) for k, v in w.items() if v > 0], cap)
    for k, v in again.items():
        assert v == pytest.approx(w[k], abs=1e-12)


@given(volumes, caps, caps)
def test_cap_monotonicity(vols, c1, c2):
    lo, hi = sorted((c1, c2))
    assume(lo * len(vols) >= 1)
    qs = [quote(f"p{i}", vol=v) for i, v in enumerate(vols)]
    assert max(capped_weights(qs, lo).values()) <= max(capped_weights(qs, hi).values()) + 1e-12


prices = st.floats(min_value=0.01, max_value=100.0)


@st.composite
def quote_sets(draw):
    n = draw(st.integers(4, 10))
    return [
        quote(f"p{i}", raw=draw(prices), cap_score=draw(st.floats(10.0, 200.0)), vol=draw(st.floats(0.1, 1e4)))
        for i in range(n)
    ]


@given(quote_sets(), st.floats(min_value=1e-3, max_value=1e3))
def test_tpi_scale_equivariance(qs, c):
    scaled = [ProviderQuote(q.provider_id, q.raw_price * c, q.capability_score, q.volume, q.benchmarks) for q in qs]
    assert compute_tpi(scaled).tpi == pytest.approx(c * compute_tpi(qs).tpi, rel=1e-12)


@given(quote_sets(), st.randoms(use_true_random=False))
def test_tpi_permutation_invariance(qs, r):
    shuffled = list(qs)
    r.shuffle(shuffled)
    assert compute_tpi(shuffled).tpi == pytest.approx(compute_tpi(qs).tpi, rel=1e-13)


@given(quote_sets(), st.floats(min_value=0.1, max_value=10.0))
def test_tpi_capability_invariance(qs, c):
    first = qs[0]
    moved = [ProviderQuote(first.provider_id, first.raw_price * c, first.capability_score * c, first.volume, first.benchmarks)] + qs[1:]
    assert compute_tpi(moved).tpi == pytest.approx(compute_tpi(qs).tpi, rel=1e-12)
