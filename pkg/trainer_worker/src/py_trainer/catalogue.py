"""Classifier families the worker can serve.

A small, dependency-light catalogue (tree, linear, nearest-neighbor,
forest); the manifest maps arbitrary learner names onto these families
with per-learner hyper-parameters.
"""

from __future__ import annotations

from sklearn.ensemble import RandomForestClassifier
from sklearn.linear_model import LogisticRegression
from sklearn.neighbors import KNeighborsClassifier
from sklearn.tree import DecisionTreeClassifier

_SEEDED = ("decision_tree", "logistic_regression", "random_forest")

_FAMILIES = {
    "decision_tree": DecisionTreeClassifier,
    "logistic_regression": LogisticRegression,
    "k_neighbors": KNeighborsClassifier,
    "random_forest": RandomForestClassifier,
}


class UnknownFamilyError(ValueError):
    pass


def build_classifier(family: str, params: dict, seed: int):
    """Instantiate one catalogue classifier, seeded for determinism."""
    try:
        cls = _FAMILIES[family]
    except KeyError:
        raise UnknownFamilyError(
            f"unknown classifier family {family!r}; known: {sorted(_FAMILIES)}"
        ) from None
    kwargs = dict(params)
    if family in _SEEDED:
        kwargs.setdefault("random_state", seed)
    return cls(**kwargs)
