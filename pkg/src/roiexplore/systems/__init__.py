from .base import (
    DivergentRollout,
    RolloutConfig,
    System,
    ZeroKernel,
    grid_to_png,
    is_homogeneous,
    quantize_to_export,
)
from .gray_scott import (
    GRAY_SCOTT_CONFIG,
    GrayScottParams,
    gray_scott_system,
    init_gray_scott,
    rollout_gray_scott,
    step_gray_scott,
)
from .lenia import (
    LENIA_CONFIG,
    KernelParams,
    LeniaParams,
    growth,
    init_lenia,
    lenia_kernel,
    lenia_system,
    rollout_lenia,
    step_lenia,
)
from .perlin import perlin_noise

SYSTEMS = {"gray_scott": gray_scott_system, "lenia": lenia_system}


def make_system(name: str) -> System:
    try:
        return SYSTEMS[name]()
    except KeyError:
        raise ValueError(f"unknown system {name!r}; choose from {sorted(SYSTEMS)}")
