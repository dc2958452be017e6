"""Exact state-vector laboratory for generalised quantum search.

Submodules: :mod:`corevec` (states, operators, frames), :mod:`geometry`
(ray distances and step formulas), :mod:`grover` and :mod:`vrotor` (the two
search engines), :mod:`qsl` (time-dependent evolution and speed-limit
envelopes), :mod:`adjudicate` and :mod:`cli`.
"""

from .corevec import (
    DegenerateFrameError,
    StateVector,
    SubspaceFrame,
    apply,
    haar_random_unitary,
    inner_product,
    make_frame,
    two_plane_rotation,
    walsh_hadamard,
)
from .geometry import (
    bargmann_angle,
    fs_distance,
    grover_steps_eq2,
    one_step_displacement,
    v_steps_eq5,
    v_steps_eq7,
)
from .grover import (
    IterationTrace,
    NoCouplingError,
    SearchSpec,
    build_q,
    detect_slippage,
    run_grover,
    success_probability,
)
from .vrotor import build_v, run_vsearch, scaling_fit

__version__ = "0.1.0"
