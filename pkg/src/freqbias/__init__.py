"""Frequency bias of Fourier-features networks: training, a damped heat
equation model of the residual spectrum, and its finite element solution."""

__version__ = "0.1.0"

from .analysis import compare, ensemble_aggregate, estimate_kappa  # noqa: E402
from .fem import assemble, build_mesh, evolve, project_initial  # noqa: E402
from .network import TrainConfig, forward, init_network, loss_and_grad, train  # noqa: E402
from .pde import build_coefficients, frozen_solution, frozen_trace  # noqa: E402
from .spectral import (  # noqa: E402
    Normal,
    RoundedSine,
    SampleGrid,
    SpectralTrace,
    Tabulated,
    Uniform,
    dft_forward,
    dft_inverse,
    sample_weights,
)
