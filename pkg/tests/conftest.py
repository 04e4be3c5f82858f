import math

import numpy as np
import pytest

from pkmsizing.kinetostatics import VafBounds
from pkmsizing.mechanisms import MechanismGeometry, inverse_kinematics
from pkmsizing.planar_core import Vec2
from pkmsizing.sizing_compare import design_mechanism

BOUNDS = VafBounds(1.0 / 3.0, 3.0)


def fd_inverse_jacobian(geom, p: Vec2, h: float = 1e-6) -> np.ndarray:
    """Central differences of IK: d(rho)/d(x, y)."""
    cols = []
    for dp in (Vec2(h, 0.0), Vec2(0.0, h)):
        qp = inverse_kinematics(geom, p + dp, check_mode=False)
        qm = inverse_kinematics(geom, p - dp, check_mode=False)
        cols.append([(qp[0] - qm[0]) / (2 * h), (qp[1] - qm[1]) / (2 * h)])
    return np.array(cols).T


def circle_line_rho(center_across: float, along: float, L: float, sigma: int) -> float:
    """Brute-force oracle: root of (rho - along)^2 + across^2 = L^2 by bisection on the mode's side."""
    lo, hi = (along - L, along) if sigma > 0 else (along, along + L)
    f = lambda r: (r - along) ** 2 + center_across ** 2 - L * L  # noqa: E731
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if (f(lo) > 0) == (f(mid) > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def random_regular_poses(geom, n, rng, margin=0.05):
    """Reachable poses on the working branch, away from both singularities."""
    from pkmsizing.mechanisms import kinematics_arrays

    L = geom.L
    out = []
    while len(out) < n:
        if geom.kind.value == "biglide":
            x = rng.uniform(-L, L, 4 * n)
            y = rng.uniform(margin * L, (1 - margin) * L, 4 * n)
        else:
            x = rng.uniform(-0.95 * L, 0.95 * L, 4 * n)
            y = rng.uniform(-0.95 * L, 0.95 * L, 4 * n)
        k = kinematics_arrays(geom, x, y)
        with np.errstate(invalid="ignore"):
            ok = (k.assembly_ok & (np.abs(k.det_a) > margin * L * L)
                  & (np.abs(k.b1) > margin * L) & (np.abs(k.b2) > margin * L))
        out += [Vec2(float(a), float(b)) for a, b in zip(x[ok], y[ok])]
    return out[:n]


@pytest.fixture(scope="session")
def designs():
    return {
        "biglide": design_mechanism("biglide", BOUNDS, 1.0),
        "orthoglide2": design_mechanism("orthoglide2", BOUNDS, 1.0),
    }


@pytest.fixture(scope="session")
def designs_2m():
    return {
        "biglide": design_mechanism("biglide", BOUNDS, 2.0),
        "orthoglide2": design_mechanism("orthoglide2", BOUNDS, 2.0),
    }


@pytest.fixture
def ortho():
    return MechanismGeometry.orthoglide(1.0)


@pytest.fixture
def big():
    return MechanismGeometry.biglide(1.0)


T_ISO = 2.0 / math.sqrt(13.0)  # corner where lambda_max = 3 along x = y


# acceptance verdicts, one line per criterion, repeated in the terminal summary
VERDICTS: dict[int, str] = {}


def record_verdict(number: int, title: str, ok: bool, detail: str = "") -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title}" + (f" ({detail})" if detail else "")
    VERDICTS[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[n])
