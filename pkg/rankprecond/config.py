"""Campaign configuration files."""

import json
import logging
from numbers import Integral, Real

from rankprecond.algebras import AlgebraId
from rankprecond.blackdot import DIAG_MODES
from rankprecond.errors import ConfigError, RankPrecondError
from rankprecond.structured import (
    DENSE_CAP,
    hankel,
    hankel_from_symbol,
    identity,
    symbol_from_json,
    toeplitz,
    toeplitz_from_symbol,
)
from rankprecond.util import vector_from_json

logger = logging.getLogger(__name__)

SCHEMA = 1

SOLVERS = ("cg", "gmres")

# Names accepted after "explicit:".
EXPLICIT_METHODS = (
    "symbol",
    "zeta",
    "kms",
    "rational",
    "power",
    "log",
    "hankel",
    "hartley_kms",
)

DEFAULTS = {
    "schema": SCHEMA,
    "algebra": "circ:1,0",
    "method": "blackdot",
    "epsilon": 1e-8,
    "r_max": 32,
    "solver": "cg",
    "tol": 1e-10,
    "maxit": 1000,
    "restart": 50,
    "sizes": [64],
    "seed": 0,
    "dense_cap": DENSE_CAP,
    "delta": None,
    "diag_mode": "oracle_diag",
    "outlier_epsilon": 1e-6,
    "control": False,
    "output": None,
}


class CampaignConfig(dict):
    """A benchmark campaign: matrix, algebra, method and solver settings.

    Parameters
    ----------
    matrix : dict, optional
        Matrix description, one of {"identity": true},
        {"symbol": {...}, "structure": "toeplitz" | "hankel"},
        {"toeplitz": {"a": [...], "b": [...]}} or
        {"hankel": {"u": [...], "v": [...]}}. Explicit vectors fix n.
        Defaults to the identity.
    **fields
        Overrides of the defaults.

    Raises
    ------
    ConfigError
        If a field is missing, unknown or out of range.
    """

    def __init__(self, matrix=None, **fields):
        unknown = set(fields) - set(DEFAULTS)
        if unknown:
            raise ConfigError(
                f"Unknown configuration keys: {', '.join(sorted(unknown))}."
            )
        self.update(DEFAULTS)
        self.update(fields)
        self["matrix"] = {"identity": True} if matrix is None else dict(matrix)
        self.validate()

    def validate(self):
        if self["schema"] != SCHEMA:
            raise ConfigError(
                f"Unsupported schema {self['schema']!r}; expected {SCHEMA}."
            )
        _positive(self, "epsilon", Real)
        _positive(self, "tol", Real)
        _positive(self, "r_max", Integral)
        _positive(self, "maxit", Integral)
        _positive(self, "restart", Integral)
        _positive(self, "dense_cap", Integral)
        seed = self["seed"]
        if not isinstance(seed, Integral) or isinstance(seed, bool) or seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {seed!r}.")
        if self["solver"] not in SOLVERS:
            raise ConfigError(
                f"solver must be one of {SOLVERS}, got {self['solver']!r}."
            )
        if self["diag_mode"] not in DIAG_MODES:
            raise ConfigError(f"diag_mode must be one of {DIAG_MODES}.")
        if self["delta"] is not None and not isinstance(self["delta"], Real):
            raise ConfigError(f"delta must be a number or null, got {self['delta']!r}.")
        if self["outlier_epsilon"] is not None:
            _positive(self, "outlier_epsilon", Real)
        try:
            AlgebraId.parse(self["algebra"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"Invalid algebra: {exc}")
        self._validate_method()
        self._validate_matrix()
        sizes = self["sizes"]
        if (
            not isinstance(sizes, (list, tuple))
            or not sizes
            or not all(isinstance(n, Integral) and n >= 2 for n in sizes)
        ):
            raise ConfigError(
                f"sizes must be a nonempty list of integers >= 2, got {sizes!r}."
            )

    def _validate_method(self):
        method = self["method"]
        if method in ("blackdot", "none", "explicit"):
            return
        family, _, name = str(method).partition(":")
        if family != "explicit" or name not in EXPLICIT_METHODS:
            raise ConfigError(
                f"method must be blackdot, none or explicit:<name> with name in "
                f"{EXPLICIT_METHODS}, got {method!r}."
            )

    def _validate_matrix(self):
        matrix = self["matrix"]
        keys = set(matrix) - {"structure"}
        if len(keys) != 1 or not keys <= {"identity", "symbol", "toeplitz", "hankel"}:
            raise ConfigError(
                f"Matrix must have exactly one kind, got {sorted(matrix)}."
            )
        if matrix.get("structure", "toeplitz") not in ("toeplitz", "hankel"):
            raise ConfigError(f"Unknown structure {matrix['structure']!r}.")
        try:
            if "symbol" in matrix:
                symbol_from_json(matrix["symbol"])
            elif "toeplitz" in matrix or "hankel" in matrix:
                self.matrix_at(self.sizes[0])
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError, RankPrecondError) as exc:
            raise ConfigError(f"Invalid matrix description: {exc}")

    @property
    def algebra_id(self):
        return AlgebraId.parse(self["algebra"])

    @property
    def symbol(self):
        """The SymbolSpec of the matrix, or None for explicit vectors."""
        if "symbol" not in self["matrix"]:
            return None
        return symbol_from_json(self["matrix"]["symbol"])

    @property
    def structure(self):
        matrix = self["matrix"]
        if "hankel" in matrix:
            return "hankel"
        return matrix.get("structure", "toeplitz")

    @property
    def sizes(self):
        """Matrix sizes; explicit vectors override the configured list."""
        matrix = self["matrix"]
        if "toeplitz" in matrix:
            return [len(matrix["toeplitz"]["a"])]
        if "hankel" in matrix:
            return [len(matrix["hankel"]["u"])]
        return sorted(int(n) for n in self["sizes"])

    def matrix_at(self, n):
        """The structured matrix of size n described by the campaign."""
        matrix = self["matrix"]
        if "identity" in matrix:
            return identity(n)
        if "toeplitz" in matrix:
            a = vector_from_json(matrix["toeplitz"]["a"])
            b = vector_from_json(matrix["toeplitz"].get("b", matrix["toeplitz"]["a"]))
            return toeplitz(a, b)
        if "hankel" in matrix:
            return hankel(
                vector_from_json(matrix["hankel"]["u"]),
                vector_from_json(matrix["hankel"]["v"]),
            )
        if self.structure == "hankel":
            return hankel_from_symbol(self.symbol, n)
        return toeplitz_from_symbol(self.symbol, n)

    def overridden(self, **fields):
        """Copy with the fields that are not None replaced."""
        values = dict(self)
        values.update({k: v for k, v in fields.items() if v is not None})
        matrix = values.pop("matrix")
        return CampaignConfig(matrix, **values)


def _positive(config, key, kind):
    value = config[key]
    if not isinstance(value, kind) or isinstance(value, bool) or not value > 0:
        raise ConfigError(f"{key} must be positive, got {value!r}.")


def load_config(path):
    """Read a campaign from a JSON file.

    Parameters
    ----------
    path : str
        Path to the JSON campaign file.

    Returns
    -------
    config : CampaignConfig

    Raises
    ------
    ConfigError
        If the file cannot be read, is not valid JSON or fails validation.
    """
    try:
        with open(path) as f:
            obj = json.load(f)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"Cannot read configuration {path}: {exc}")
    if not isinstance(obj, dict):
        raise ConfigError("The configuration must be a JSON object.")
    if "schema" not in obj:
        raise ConfigError('The configuration must declare "schema": 1.')
    obj = dict(obj)
    matrix = obj.pop("matrix", None)
    logger.debug("Loaded configuration %s.", path)
    return CampaignConfig(matrix, **obj)
