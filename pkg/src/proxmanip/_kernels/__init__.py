"""Hot kernels with a compiled core and a numpy fallback.

The Cython extension ``_core`` is used when it has been built; otherwise the
pure numpy ``_fallback`` module is imported.  Set ``PROXMANIP_BACKEND=numpy``
to force the fallback (used by the benchmark and the parity tests).
"""

import os

from . import _fallback as fallback

core = None
if os.environ.get("PROXMANIP_BACKEND", "").lower() != "numpy":
    try:
        from . import _core as core
    except ImportError:  # extension not built
        core = None

active = core if core is not None else fallback
BACKEND = active.BACKEND

tip_poses = active.tip_poses
step_batch = active.step_batch
contact_flags = active.contact_flags
rollout_costs = active.rollout_costs
raycast_batch = active.raycast_batch
beam_log_likelihood = active.beam_log_likelihood

__all__ = [
    "BACKEND",
    "beam_log_likelihood",
    "contact_flags",
    "core",
    "fallback",
    "raycast_batch",
    "rollout_costs",
    "step_batch",
    "tip_poses",
]
