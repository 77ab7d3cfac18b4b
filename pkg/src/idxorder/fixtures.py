"""Small named instances used by tests, docs, and CLI examples."""

from __future__ import annotations

from .model import Instance, make_instance

__all__ = ["fix_compete", "fix_build", "fix_alliance", "fix_dom"]


def fix_compete() -> Instance:
    """Two competing single-index plans for one query."""
    return make_instance(
        name="fix-compete",
        indexes=[(0, 10.0), (1, 30.0)],
        queries=[(0, 100.0)],
        plans=[(0, 0, [0], 5.0), (1, 0, [1], 20.0)],
    )


def fix_build() -> Instance:
    """fix_compete plus a build interaction: index 1 helps build index 0."""
    return make_instance(
        name="fix-build",
        indexes=[(0, 10.0), (1, 30.0)],
        queries=[(0, 100.0)],
        plans=[(0, 0, [0], 5.0), (1, 0, [1], 20.0)],
        build_interactions=[(0, 1, 6.0)],
    )


def fix_alliance() -> Instance:
    """Two indexes that only pay off together through one joint plan."""
    return make_instance(
        name="fix-alliance",
        indexes=[(0, 10.0), (1, 10.0)],
        queries=[(0, 100.0)],
        plans=[(0, 0, [0, 1], 50.0)],
    )


def fix_dom() -> Instance:
    """Index 0's best case (helped by index 2) still trails index 1."""
    return make_instance(
        name="fix-dom",
        indexes=[(0, 10.0), (1, 10.0), (2, 10.0)],
        queries=[(0, 100.0), (1, 100.0), (2, 100.0)],
        plans=[(0, 0, [0], 1.0), (1, 1, [0, 2], 3.0), (2, 2, [1], 5.0)],
    )
