import pytest
from hypothesis import settings

from statgenus.abelian_core import AbelianPGroup
from statgenus.block_ring import nontrivial_blocks

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def z3():
    return AbelianPGroup.parse("3")


@pytest.fixture(scope="session")
def z9():
    return AbelianPGroup.parse("9")


@pytest.fixture(scope="session")
def z3sq():
    return AbelianPGroup.parse("3x3")


@pytest.fixture(scope="session")
def z3_block(z3):
    return nontrivial_blocks(z3)[0]
