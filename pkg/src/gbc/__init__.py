"""Curvature invariants of closed-form metrics, their integrals over
compact manifolds, and numerical verification of the Gauss-Bonnet-Chern
integral, dimensional curvature identities, and the Lovelock variational
identity."""

__version__ = "0.1.0"

from .backend import active_backend
from .catalog import catalog, catalog_names, gbc_expected_value, product, scaled, sign_flip
from .geometry import (Chart, CurvatureBundle, MetricField, curvature_at,
                       curvature_batch, cylinder_extend, restrict_equator)
from .invariants import (homogeneity_check, lovelock_tensor,
                         pfaffian_density, pfaffian_invariant, raw_invariant,
                         reduction_check)
from .jets import Jet2, jet_var
from .quadrature import QuadGrid, build_grid, cylinder_integral_check, integrate_density
from .tenalg import PointTensor, contract_product, gen_delta, kulkarni_nomizu, random_curvature
from .variational import (Perturbation, el_check, el_pairing, family_sweep,
                          gateaux_derivative, random_perturbation,
                          weight_forcing_check)

__all__ = [
    "__version__", "active_backend",
    "catalog", "catalog_names", "gbc_expected_value", "product", "scaled", "sign_flip",
    "Chart", "CurvatureBundle", "MetricField", "curvature_at", "curvature_batch",
    "cylinder_extend", "restrict_equator",
    "homogeneity_check", "lovelock_tensor", "pfaffian_density",
    "pfaffian_invariant", "raw_invariant", "reduction_check",
    "Jet2", "jet_var",
    "QuadGrid", "build_grid", "cylinder_integral_check", "integrate_density",
    "PointTensor", "contract_product", "gen_delta", "kulkarni_nomizu", "random_curvature",
    "Perturbation", "el_check", "el_pairing", "family_sweep",
    "gateaux_derivative", "random_perturbation", "weight_forcing_check",
]
