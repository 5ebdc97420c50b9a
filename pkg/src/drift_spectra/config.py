"""Strict job-configuration parsing.

Config files are line-oriented ``key = value`` under ``[problem]`` and
``[output]`` sections.  String values are double-quoted, lists are
comma-separated, blank lines and lines starting with ``#`` are ignored.
Unknown keys are fatal: a silent typo in ``epsilon`` would invalidate an
order fit.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

from .errors import ConfigError

KINDS = ("drift", "dirichlet", "thin", "converge", "corollary1", "prop2",
         "gapcheck", "residual", "prop4")
SOLVERS = ("auto", "dense", "iterative")
CONVENTIONS = ("model-consistent", "paper-literal")

_PROBLEM_KEYS = {"kind", "domain", "phi", "f", "epsilon", "nx", "nt", "n",
                 "num_eigs", "tol", "solver", "seed", "convention",
                 "n_pairs", "trials", "check_tol"}
_OUTPUT_KEYS = {"csv", "json"}

# kinds that consume a weight expression
_WEIGHT_REQUIRED = ("drift", "thin", "converge", "gapcheck", "residual", "prop4")
_WEIGHT_FORBIDDEN = ("corollary1", "prop2")
_EPS_LIST_KINDS = ("converge", "residual", "corollary1")


@dataclass
class JobConfig:
    kind: str
    domain: tuple
    phi: str | None = None
    f: str | None = None
    epsilon: list = field(default_factory=list)
    nx: int = 400
    nt: int = 8
    n: int = 2000
    num_eigs: int = 6
    tol: float = 1e-8
    solver: str = "auto"
    seed: int = 42
    convention: str = "model-consistent"
    n_pairs: int = 40
    trials: int = 100
    check_tol: float = 5e-3
    csv_path: str | None = None
    json_path: str | None = None

    def echo(self) -> dict:
        d = asdict(self)
        d["domain"] = list(self.domain)
        return d


def _parse_value(raw: str, key: str, lineno: int):
    raw = raw.strip()
    if not raw:
        raise ConfigError(f"line {lineno}: empty value for {key!r}")
    if raw.startswith('"'):
        if not (raw.endswith('"') and len(raw) >= 2):
            raise ConfigError(f"line {lineno}: unterminated string for {key!r}")
        return raw[1:-1]
    parts = [p.strip() for p in raw.split(",")]
    nums = []
    for p in parts:
        try:
            nums.append(int(p))
        except ValueError:
            try:
                nums.append(float(p))
            except ValueError:
                raise ConfigError(
                    f"line {lineno}: malformed number {p!r} for {key!r}") from None
    return nums if len(nums) > 1 else nums[0]


def _parse_sections(text: str) -> dict:
    sections: dict = {}
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError(f"line {lineno}: malformed section header")
            current = stripped[1:-1].strip()
            if current not in ("problem", "output"):
                raise ConfigError(f"line {lineno}: unknown section {current!r}")
            sections.setdefault(current, {})
            continue
        if current is None:
            raise ConfigError(f"line {lineno}: key outside of a section")
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        known = _PROBLEM_KEYS if current == "problem" else _OUTPUT_KEYS
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in [{current}]")
        if key in sections[current]:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        sections[current][key] = _parse_value(raw, key, lineno)
    return sections


def _require_int(value, key: str, minimum: int = 1) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ConfigError(f"{key!r} must be an integer >= {minimum}, got {value!r}")
    return value


def build_config(problem: dict, output: dict | None = None) -> JobConfig:
    """Validate raw key/value dictionaries into a JobConfig."""
    problem = dict(problem)
    output = dict(output or {})
    unknown = set(problem) - _PROBLEM_KEYS
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")
    unknown = set(output) - _OUTPUT_KEYS
    if unknown:
        raise ConfigError(f"unknown output keys {sorted(unknown)}")

    kind = problem.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")
    domain = problem.get("domain")
    if (not isinstance(domain, list) or len(domain) != 2
            or not all(isinstance(v, (int, float)) for v in domain)):
        raise ConfigError("domain must be two numbers 'a, b'")
    a, b = float(domain[0]), float(domain[1])
    if not a < b:
        raise ConfigError(f"domain needs a < b, got [{a}, {b}]")

    phi = problem.get("phi")
    f = problem.get("f")
    if phi is not None and not isinstance(phi, str):
        raise ConfigError("phi must be a quoted expression string")
    if f is not None and not isinstance(f, str):
        raise ConfigError("f must be a quoted expression string")
    if phi is not None and f is not None:
        raise ConfigError("exactly one of phi/f may be given")
    if kind in _WEIGHT_REQUIRED and phi is None and f is None:
        raise ConfigError(f"{kind} job needs exactly one of phi/f")
    if kind in _WEIGHT_FORBIDDEN and (phi is not None or f is not None):
        raise ConfigError(f"{kind} job derives its weight; phi/f not allowed")

    eps_raw = problem.get("epsilon")
    if eps_raw is None:
        epsilon = []
    else:
        epsilon = [float(e) for e in (eps_raw if isinstance(eps_raw, list) else [eps_raw])]
    if kind == "thin":
        if len(epsilon) != 1:
            raise ConfigError("thin job needs a single epsilon")
    elif kind in _EPS_LIST_KINDS:
        minimum = 4 if kind == "converge" else 1
        if len(epsilon) < minimum:
            raise ConfigError(f"{kind} job needs at least {minimum} epsilon values")
        if any(e <= 0 for e in epsilon):
            raise ConfigError("epsilon values must be positive")
        if len(epsilon) > 1:
            if any(y >= x for x, y in zip(epsilon, epsilon[1:])):
                raise ConfigError("epsilon list must be strictly descending")
            r0 = epsilon[1] / epsilon[0]
            if any(abs(y / x - r0) > 1e-6 * r0 for x, y in zip(epsilon, epsilon[1:])):
                raise ConfigError("epsilon list must be geometric")
    elif epsilon:
        raise ConfigError(f"{kind} job does not take epsilon")

    cfg = JobConfig(kind=kind, domain=(a, b), phi=phi, f=f, epsilon=epsilon)
    cfg.nx = _require_int(problem.get("nx", cfg.nx), "nx", 2)
    cfg.nt = _require_int(problem.get("nt", cfg.nt), "nt", 2)
    cfg.n = _require_int(problem.get("n", cfg.n), "n", 1)
    cfg.num_eigs = _require_int(problem.get("num_eigs", cfg.num_eigs), "num_eigs", 0)
    cfg.seed = _require_int(problem.get("seed", cfg.seed), "seed", 0)
    cfg.n_pairs = _require_int(problem.get("n_pairs", cfg.n_pairs), "n_pairs", 2)
    cfg.trials = _require_int(problem.get("trials", cfg.trials), "trials", 1)

    tol = problem.get("tol", cfg.tol)
    if not isinstance(tol, (int, float)) or not tol > 0:
        raise ConfigError(f"tol must be positive, got {tol!r}")
    cfg.tol = float(tol)
    check_tol = problem.get("check_tol", cfg.check_tol)
    if not isinstance(check_tol, (int, float)) or not check_tol > 0:
        raise ConfigError(f"check_tol must be positive, got {check_tol!r}")
    cfg.check_tol = float(check_tol)

    solver = problem.get("solver", cfg.solver)
    if solver not in SOLVERS:
        raise ConfigError(f"solver must be one of {SOLVERS}, got {solver!r}")
    cfg.solver = solver
    convention = problem.get("convention", cfg.convention)
    if convention not in CONVENTIONS:
        raise ConfigError(f"convention must be one of {CONVENTIONS}")
    cfg.convention = convention

    csv_path = output.get("csv")
    json_path = output.get("json")
    if csv_path is not None and not isinstance(csv_path, str):
        raise ConfigError("csv output path must be a quoted string")
    if json_path is not None and not isinstance(json_path, str):
        raise ConfigError("json output path must be a quoted string")
    cfg.csv_path = csv_path
    cfg.json_path = json_path
    return cfg


def load_config(path: str) -> JobConfig:
    """Parse and validate a config file."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise ConfigError(f"config {path!r} is not ASCII: {exc}") from exc
    sections = _parse_sections(text)
    if "problem" not in sections:
        raise ConfigError("missing [problem] section")
    return build_config(sections["problem"], sections.get("output"))
