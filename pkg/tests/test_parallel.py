import pytest

from invertcert.certify import Region, certify_estimators
from invertcert.mapping import corpus_lookup, estimator_family_for
from invertcert.parallel import ENV_THREADS, ordered_map, thread_count
from invertcert.sampling import SamplingPlan


def test_default_is_single_threaded(monkeypatch):
    monkeypatch.delenv(ENV_THREADS, raising=False)
    assert thread_count() == 1


@pytest.mark.parametrize("raw", ["0", "-2", "many"])
def test_bad_thread_counts(monkeypatch, raw):
    monkeypatch.setenv(ENV_THREADS, raw)
    with pytest.raises(ValueError):
        thread_count()


def test_order_is_preserved(monkeypatch):
    monkeypatch.setenv(ENV_THREADS, "4")
    assert ordered_map(lambda i: i * i, range(50)) == [i * i for i in range(50)]


def test_certificates_do_not_depend_on_thread_count(monkeypatch):
    f = corpus_lookup("sqrt_case")
    args = (f, estimator_family_for(f), Region.interval(-2, 2, grid=5), SamplingPlan())
    monkeypatch.setenv(ENV_THREADS, "1")
    one = certify_estimators(*args).to_dict()
    monkeypatch.setenv(ENV_THREADS, "3")
    three = certify_estimators(*args).to_dict()
    assert one == three
