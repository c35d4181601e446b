import random

import pytest
from gmpy2 import mpq
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from hodgeprobe.abelian import from_catalog, product
from hodgeprobe.exterior import KForm, basis_masks

settings.register_profile(
    "exact",
    deadline=None,
    max_examples=40,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("exact")

small_rationals = st.builds(
    lambda a, b: mpq(a, b), st.integers(-5, 5), st.integers(1, 4)
)


@st.composite
def kforms(draw, dim, degree, max_terms=6):
    masks = basis_masks(dim, degree)
    picked = draw(st.lists(st.sampled_from(masks), max_size=max_terms, unique=True)) if masks else []
    return KForm(dim, degree, {m: draw(small_rationals) for m in picked})


def random_form(rng: random.Random, dim: int, degree: int, terms: int = 6) -> KForm:
    masks = basis_masks(dim, degree)
    chosen = rng.sample(masks, min(terms, len(masks)))
    return KForm(dim, degree, {m: mpq(rng.randint(-4, 4), rng.randint(1, 3)) for m in chosen})


@pytest.fixture(scope="session")
def A1():
    return from_catalog("A1")


@pytest.fixture(scope="session")
def A2():
    return from_catalog("A2")


@pytest.fixture(scope="session")
def A3():
    return from_catalog("A3")


@pytest.fixture(scope="session")
def A1_cubed(A1):
    return product(A1, A1, A1)


ACCEPTANCE: list = []


def record_criterion(number: int, title: str, passed: bool, seconds: float) -> str:
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {title} ({seconds:.1f} s)"
    ACCEPTANCE.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
