"""Kernel selection: compiled extension when built, numpy fallback otherwise."""

try:
    from ._cykernel import IMPLEMENTATION, backward_induction, policy_values
except ImportError:  # pragma: no cover - depends on build environment
    from .pykernel import IMPLEMENTATION, backward_induction, policy_values

__all__ = ["IMPLEMENTATION", "backward_induction", "policy_values"]
