"""Sustainability modelling toolkit.

Submodules cover chaotic climate dynamics (``climate``), predator-prey and
resource-limited ecosystems (``ecosystem``), pollutant transport and
abatement (``pollution``), energy return on investment (``energy``), crime
dynamics and police deployment (``socio``), tipping-point diagnostics
(``indicators``) and scenario files (``scenario``, ``runner``, ``cli``).
"""

__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402

__all__ = ["BACKEND", "__version__"]
