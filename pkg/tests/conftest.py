import numpy as np
import pytest

from hyponorm import AreaMeasure, BetaWeight, JacobiOperator, MomentProvider, SymbolParams


@pytest.fixture(scope="session")
def area():
    return MomentProvider(AreaMeasure())


@pytest.fixture(scope="session")
def beta1():
    return MomentProvider(BetaWeight(1.0))


def make_op(n, s, measure=None, **kw):
    return JacobiOperator(SymbolParams(n, s), MomentProvider(measure or AreaMeasure(), **kw))


def dense_top(band, n, N):
    A = np.zeros((N, N))
    for k, a in enumerate(band):
        A[k + n, k] = A[k, k + n] = a
    return np.linalg.eigvalsh(A)
