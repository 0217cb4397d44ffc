"""Built-in named experiment configurations."""
from __future__ import annotations

import copy

from .config import SCHEMA_VERSION, ConfigError, validate

SQRT2_MINUS_1 = "0.41421356237309504880168872420969807856967187537694"

_SCENARIOS = {
    "rotation-reversible": {
        "description": "a=1, both operators the rotation by sqrt(2)-1, A_0 the mode-1 projector, f = e_1",
        "basis": {"kind": "spectral", "M": 64},
        "operators": {
            "R": {"kind": "rotation", "alpha": SQRT2_MINUS_1, "precision": 50, "symbol": "sqrt2-1"},
            "P1": {"kind": "mode_projector", "modes": [1]},
        },
        "chain": {"T": ["R", "R"], "A": ["P1"]},
        "f": {"kind": "mode", "m": 1},
        "average": {"N": 100000, "checkpoints": [10, 100, 1000, 10000, 100000]},
        "predict": {"form": "full", "max_sup_err": 1e-3},
        "decompose": {"operators": ["R"]},
        "validate": {"operators": ["R"]},
    },
    "rotation-rational": {
        "description": "a=1, both operators the rotation by 1/2, A_0 = I, f = e_1",
        "basis": {"kind": "spectral", "M": 64},
        "operators": {"H": {"kind": "rotation", "alpha": "1/2"}, "I": {"kind": "identity"}},
        "chain": {"T": ["H", "H"], "A": ["I"]},
        "f": {"kind": "mode", "m": 1},
        "average": {"N": 1024, "checkpoints": [2, 4, 8, 16, 64, 256, 1024]},
        "predict": {"form": "full", "max_sup_err": 1e-12},
        "decompose": {"operators": ["H"]},
        "validate": {"operators": ["H"]},
    },
    "doubling-stable": {
        "description": "a=1, doubling permutation mod 101, random doubly stochastic A_0, mean-zero random f",
        "seed": 20240601,
        "basis": {"kind": "spatial", "G": 101},
        "operators": {"D": {"kind": "doubling"}, "S": {"kind": "doubly_stochastic"}},
        "chain": {"T": ["D", "D"], "A": ["S"]},
        "f": {"kind": "random", "mean_zero": True, "real": True},
        "average": {"N": 10000, "checkpoints": [100, 1000, 10000], "abs": True},
        "decompose": {"operators": ["D", "S"]},
        "validate": {"operators": ["D", "S"]},
    },
    "shift-validate": {
        "description": "cyclic shift on 64 grid points, a transitive permutation",
        "basis": {"kind": "spatial", "G": 64},
        "operators": {"C": {"kind": "permutation", "shift": 1}},
        "chain": {"T": ["C"]},
        "f": {"kind": "mode", "m": 1},
        "average": {"N": 4096},
        "validate": {"operators": ["C"]},
        "decompose": {"operators": ["C"]},
    },
    "bohr-weight": {
        "description": "rotation average of e_1 with Bohr weight a_n = 0.7 gamma^n + 0.3, gamma resonant with e_1",
        "basis": {"kind": "spectral", "M": 8},
        "operators": {"R": {"kind": "rotation", "alpha": SQRT2_MINUS_1, "precision": 50, "symbol": "sqrt2-1"}},
        "chain": {"T": ["R"]},
        "f": {"kind": "mode", "m": 1},
        "average": {"N": 100000, "checkpoints": [1000, 100000],
                    "weight": {"gamma_turns": [0.5857864376269049, 0.0], "qs": [0.7, 0.3]}},
    },
    "rotation-flow": {
        "description": "continuous rotation flow x -> x + alpha t, trivial chain, f = e_1",
        "basis": {"kind": "spectral", "M": 4},
        "f": {"kind": "mode", "m": 1},
        "semigroup": {"generators": [{"kind": "rotation_flow", "alpha": 0.41421356237309503}],
                      "horizon": 10.0, "h": 0.01, "checkpoints": [1.0, 5.0, 10.0]},
    },
    "shift-flow": {
        "description": "jump semigroup of the cyclic shift on 16 points; integral tends to the mean",
        "basis": {"kind": "spatial", "G": 16},
        "operators": {"C": {"kind": "permutation", "shift": 1}},
        "f": {"kind": "random", "real": True},
        "seed": 7,
        "semigroup": {"generators": [{"kind": "permutation_laplacian", "permutation": "C"}],
                      "horizon": 500.0, "h": 0.05, "checkpoints": [10.0, 100.0, 500.0]},
    },
    "volterra": {
        "description": "twisted compactness certificates for the Volterra splitting",
        "seed": 11,
        "volterra": {"epsilon": [1.0, 0.1, 0.01], "trials": 500},
    },
}


def names() -> list[str]:
    return sorted(_SCENARIOS)


def describe(name: str) -> str:
    return _SCENARIOS[name].get("description", "")


def get(name: str) -> dict:
    if name not in _SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r} (available: {', '.join(names())})")
    cfg = {"schema_version": SCHEMA_VERSION, "name": name, **copy.deepcopy(_SCENARIOS[name])}
    validate(cfg)
    return cfg
