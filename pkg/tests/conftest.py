import pytest

from flaghardy import (
    SampledFunction,
    SignalSpec,
    build_filter_bank,
    flag_project,
    lp_norm,
    make_grid,
    synthesize,
)


@pytest.fixture(scope="session")
def grid6():
    return make_grid(1, 1, 6)


@pytest.fixture(scope="session")
def grid7():
    return make_grid(1, 1, 7)


@pytest.fixture(scope="session")
def bank6(grid6):
    return build_filter_bank(grid6, (0, 4), (0, 4))


@pytest.fixture(scope="session")
def bank6_sharp(grid6):
    return build_filter_bank(grid6, (0, 4), (0, 4), "shannon-sharp")


@pytest.fixture(scope="session")
def bank7(grid7):
    return build_filter_bank(grid7, (0, 5), (0, 5))


def unit_signal(spec: SignalSpec, grid, bank=None) -> SampledFunction:
    """Synthesized signal, optionally flag-projected, normalized in L2."""
    f = synthesize(spec, grid)
    if bank is not None:
        f = flag_project(f, bank)
    n2 = lp_norm(f, 2.0)
    return f.copy_with(f.values / n2) if n2 > 0 else f


@pytest.fixture(scope="session")
def random7(grid7, bank7):
    return unit_signal(SignalSpec("band-limited-random", seed=3), grid7, bank7)


@pytest.fixture(scope="session")
def bump7(grid7, bank7):
    spec = SignalSpec("gaussian-bump", center=(0.5, 0.5), widths=(1 / 16, 1 / 10))
    return unit_signal(spec, grid7, bank7)


def rel_l2(f: SampledFunction, g: SampledFunction) -> float:
    diff = f.copy_with(f.values - g.values)
    denom = lp_norm(f, 2.0)
    return lp_norm(diff, 2.0) / denom if denom > 0 else lp_norm(diff, 2.0)
