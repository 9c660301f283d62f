import pytest

from tsconformal import dependence as D
from tsconformal import verify as V
from tsconformal.acceptance import criterion_9


def test_quick_suite_passes():
    out = V.run_verification_suite(seed=0, scale="quick")
    failed = [c for c in out["checks"] if not c["passed"]]
    assert out["passed"], failed
    assert len(out["checks"]) == len(V.INVARIANTS) + 10


def test_off_by_one_order_index_is_caught(monkeypatch):
    real = V.order_index
    monkeypatch.setattr(V, "order_index", lambda b, m: real(b, m) + 1)
    assert not V.check_quantile_properties(0).passed


def test_mutated_deletion_is_caught(monkeypatch):
    real = D.deletion_indices

    def broken(m, k, tau, j):
        idx = real(m, k, tau, j)
        return idx[::-1] if j == 1 and tau > 0 else idx

    monkeypatch.setattr(D, "deletion_indices", broken)
    assert not criterion_9().passed
    assert not V.check_deletion_laws(0).passed


def test_crashing_check_becomes_failure(monkeypatch):
    def boom(seed):
        raise RuntimeError("boom")

    monkeypatch.setattr(V, "INVARIANTS", [boom])
    out = V.run_verification_suite(criteria=[])
    assert not out["passed"] and "boom" in out["checks"][0]["summary"]


def test_bad_scale():
    with pytest.raises(ValueError):
        V.run_verification_suite(scale="huge")
