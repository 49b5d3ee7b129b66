import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from dysubc import DySubC
from dysubc.graph import TemporalEvent, build_graph
from dysubc.synthetic import drifting_communities


@pytest.fixture(scope="module")
def graph():
    return build_graph(drifting_communities(n=40, n_events=300, seed=3), n=40)


def test_params_roundtrip():
    model = DySubC(k=7, variant="-R")
    params = model.get_params()
    assert params["k"] == 7 and params["variant"] == "-R" and params["epochs"] == 800
    twin = clone(model)
    assert twin.get_params() == params
    model.set_params(alpha=3.0)
    assert model.alpha == 3.0


def test_variant_wiring():
    m = DySubC(variant="-S-N-R", lam=0.5)
    assert m.sampler_config().use_time is False
    cfg = m.train_config()
    assert cfg.lam == 0.0 and cfg.time_readout is False
    full = DySubC().train_config()
    assert full.lam == 0.5 and full.time_readout
    assert DySubC(time_weights=False).sampler_config().use_time is False
    with pytest.raises(ValueError):
        DySubC(variant="-Q").train_config()


def test_fit_transform(graph):
    model = DySubC(k=6, dim=5, epochs=2, seed=1)
    emb = model.fit_transform(graph)
    assert emb.shape == (40, 5) and np.isfinite(emb).all()
    np.testing.assert_array_equal(model.transform([3, 0]), emb[[3, 0]])
    assert len(model.subgraphs_) == 40 and len(model.history_) == 2
    again = DySubC(k=6, dim=5, epochs=2, seed=1).fit(graph)
    assert again.embeddings_.tobytes() == emb.tobytes()


def test_transform_errors(graph):
    with pytest.raises(NotFittedError):
        DySubC().transform([0])
    model = DySubC(k=4, dim=3, epochs=1).fit(graph)
    with pytest.raises(IndexError):
        model.transform([40])
    with pytest.raises(TypeError):
        model.transform([0.5])
    with pytest.raises(ValueError):
        model.transform(build_graph([TemporalEvent(0, 1, 1.0)]))


def test_fit_rejects_non_graph():
    with pytest.raises(TypeError):
        DySubC().fit(np.zeros((3, 3)))
