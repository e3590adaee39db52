"""Shared fixtures: the reference scenario and its heavyweight state builds.

The SPDC pair at the reference operating point (n_s=0.01, kappa=0.01,
n_b=20) takes a few hundred ms to build and decompose, so everything that
needs it shares one session-scoped copy.
"""

import math

import pytest

from qillum import (
    ScenarioParams,
    TruncationSpec,
    build_displaced_thermal,
    build_rho0,
    build_rho1,
    helstrom_single_shot,
    thermal_cutoff,
    thermal_state,
)

TAIL = 1e-9


@pytest.fixture(scope="session")
def ref_params():
    return ScenarioParams(n_s=0.01, kappa=0.01, n_b=20.0)


@pytest.fixture(scope="session")
def ref_trunc(ref_params):
    return TruncationSpec.for_params(ref_params, tail_tol=TAIL)


@pytest.fixture(scope="session")
def spdc_pair(ref_params, ref_trunc):
    return build_rho0(ref_params, ref_trunc), build_rho1(ref_params, ref_trunc)


@pytest.fixture(scope="session")
def coherent_pair(ref_params):
    """Thermal vs displaced-thermal single-mode pair on one shared cutoff."""
    cutoff = thermal_cutoff(ref_params.kappa * ref_params.n_s + ref_params.n_b, TAIL)
    rho0 = thermal_state(ref_params.n_b, cutoff)
    rho1 = build_displaced_thermal(
        math.sqrt(ref_params.kappa * ref_params.n_s), ref_params.n_b, cutoff,
        tail_tol=TAIL,
    )
    return rho0, rho1


@pytest.fixture(scope="session")
def ref_helstrom(spdc_pair):
    return helstrom_single_shot(*spdc_pair)
