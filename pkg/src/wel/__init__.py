"""Numerical toolkit for weakly Einstein four-manifolds."""

from .catalog import builtin
from .constructions import ConstructedMetric, build_family, eps, gc_family, gk_family, kpc_probe, exaot_verify
from .dsl import ScalarField, parse
from .metric import MetricChart, curvature_at
from .singer_thorpe import STData, nine_case_table
from .weakly_einstein import match_case, signature_at, we_residuals

__all__ = [
    "ConstructedMetric", "MetricChart", "STData", "ScalarField", "build_family", "builtin", "curvature_at",
    "eps", "exaot_verify", "gc_family", "gk_family", "kpc_probe", "match_case", "nine_case_table", "parse",
    "signature_at", "we_residuals",
]
