"""
Parameter files.

A parameter file holds one `KEY value ...` entry per line; `#` starts a
comment. Vector values are written `( v1 v2 ... )`, or `* v` to broadcast a
scalar to every coordinate. DIMENSION, BB_EXE, BB_OUTPUT_TYPE and X0 are
mandatory; X0 may be repeated to give several starting points. BB_EXE is
either an executable path (relative paths are resolved against the file's
directory) or `builtin:<name>` for a bundled bench problem.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ValidationError

from madsopt.bench.problems import get_problem
from madsopt.cli.process_evaluator import ProcessEvaluator
from madsopt.errors import MissingKey, OutputError, ParamParseError, UnknownKey
from madsopt.schemas.params import SEARCH_ORDER, BarrierKind, OrderingStrategy, Params, SearchKind
from madsopt.schemas.problem import OutputKind, Problem, ValidatedProblem
from madsopt.utils.numeric import format_float, parse_float
from madsopt.utils.param_normalization import ParamEntry, ParamPayload, param_normalizer
from madsopt.validators.params import default_params
from madsopt.validators.problem import validate_problem

logger = logging.getLogger(__name__)

BUILTIN_PREFIX = "builtin:"

MANDATORY_KEYS = ("DIMENSION", "BB_EXE", "BB_OUTPUT_TYPE", "X0")

# Keys mapped onto Params fields; dump_params writes them in this order
PARAM_KEYS = (
    "MAX_BB_EVAL",
    "MAX_ITERATIONS",
    "SEED",
    "INITIAL_FRAME_SIZE",
    "FRAME_ADJUSTMENT",
    "EPSILON",
    "OPPORTUNISM",
    "ORDERING",
    "SEARCHES",
    "SPECULATIVE_COUNT",
    "NM_MAX_TRIALS",
    "LH_COUNT",
    "QUAD_MAX_EVALS",
    "BARRIER",
    "NB_THREADS",
    "GROUP_MAX_SIZE",
    "MEGA_SEARCH_POLL",
    "PSD",
    "PSD_WORKER_BUDGET",
    "PSD_COVERAGE",
)

FILE_KEYS = ("CACHE_FILE", "HISTORY_FILE")

KNOWN_KEYS = frozenset(
    MANDATORY_KEYS + ("PROBLEM_NAME", "LOWER_BOUND", "UPPER_BOUND") + PARAM_KEYS + FILE_KEYS
)

# Problem-defining keys a hot restart may not change
IMMUTABLE_KEYS = ("DIMENSION", "BB_OUTPUT_TYPE", "X0")

_TRUE = {"yes", "y", "true", "1", "on"}
_FALSE = {"no", "n", "false", "0", "off"}


class ParamFile(BaseModel):
    """Parsed and normalized parameter file."""
    
    path: Optional[Path] = None
    entries: Dict[str, List[ParamEntry]]
    
    model_config = {
        "frozen": True
    }
    
    def has(self, key: str) -> bool:
        return key in self.entries
    
    def entry(self, key: str) -> ParamEntry:
        """Last entry of a key."""
        try:
            return self.entries[key][-1]
        except KeyError:
            raise MissingKey(f"Missing mandatory key {key}") from None
    
    @property
    def base_dir(self) -> Path:
        return self.path.parent if self.path is not None else Path.cwd()
    
    def file_path(self, key: str) -> Optional[Path]:
        """CACHE_FILE / HISTORY_FILE resolved against the file's directory."""
        if not self.has(key):
            return None
        value = _single(self.entry(key))
        path = Path(value)
        return path if path.is_absolute() else self.base_dir / path
    
    @property
    def cache_file(self) -> Optional[Path]:
        return self.file_path("CACHE_FILE")
    
    @property
    def history_file(self) -> Optional[Path]:
        return self.file_path("HISTORY_FILE")


def _single(entry: ParamEntry) -> str:
    if len(entry.values) != 1:
        raise ParamParseError(f"{entry.key} expects one value, got {len(entry.values)}", entry.line)
    return entry.values[0]


def _int(entry: ParamEntry) -> int:
    token = _single(entry)
    try:
        return int(token)
    except ValueError:
        raise ParamParseError(f"{entry.key}: '{token}' is not an integer", entry.line) from None


def _float(entry: ParamEntry) -> float:
    values = entry.values
    # A scalar may also be written with the broadcast or vector syntax
    if len(values) == 2 and values[0] == "*":
        values = values[1:]
    elif len(values) == 3 and values[0] == "(" and values[2] == ")":
        values = values[1:2]
    if len(values) != 1:
        raise ParamParseError(f"{entry.key} expects one value, got {len(entry.values)}", entry.line)
    try:
        return parse_float(values[0])
    except ValueError:
        raise ParamParseError(f"{entry.key}: '{values[0]}' is not a number", entry.line) from None


def _bool(entry: ParamEntry) -> bool:
    token = _single(entry).lower()
    if token in _TRUE:
        return True
    if token in _FALSE:
        return False
    raise ParamParseError(f"{entry.key}: '{token}' is not yes/no", entry.line)


def parse_vector(entry: ParamEntry, n: int, missing: Optional[float] = None) -> Tuple[float, ...]:
    """
    Parse `( v1 ... vn )` or `* v`.
    
    Args:
        entry: Entry to parse
        n: Dimension
        missing: Value of a `-` token (no bound), None to reject it
    
    Returns:
        Tuple[float, ...]: n values
    
    Raises:
        ParamParseError: On a malformed vector or a wrong length
    """
    tokens = list(entry.values)
    if len(tokens) == 2 and tokens[0] == "*":
        tokens = [tokens[1]] * n
    elif tokens and tokens[0] == "(":
        if tokens[-1] != ")":
            raise ParamParseError(f"{entry.key}: missing ')'", entry.line)
        tokens = tokens[1:-1]
    values = []
    for token in tokens:
        if token == "-" and missing is not None:
            values.append(missing)
            continue
        try:
            values.append(float(token))
        except ValueError:
            raise ParamParseError(f"{entry.key}: '{token}' is not a number", entry.line) from None
    if len(values) != n:
        raise ParamParseError(f"{entry.key} has {len(values)} values, expected {n}", entry.line)
    return tuple(values)


def _tokenize(line: str) -> List[str]:
    """Split a line, detaching parentheses glued to values."""
    return line.replace("(", " ( ").replace(")", " ) ").split()


def read_param_text(text: str, path: Optional[Path] = None) -> ParamFile:
    """
    Parse parameter file text.
    
    Raises:
        UnknownKey: If a key is not recognized
    """
    payload: ParamPayload = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *values = _tokenize(line)
        key = key.upper()
        payload.setdefault(key, []).append(ParamEntry(key=key, values=tuple(values), line=lineno))
    
    normalized = param_normalizer.normalize_payload(payload)
    for key, entries in normalized.items():
        if key not in KNOWN_KEYS:
            raise UnknownKey(f"Unknown key {key}", entries[0].line or None)
    return ParamFile(path=path, entries=normalized)


def read_param_file(path: Path | str) -> ParamFile:
    """
    Read a parameter file.
    
    Raises:
        OutputError: If the file cannot be read
        UnknownKey: If a key is not recognized
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OutputError(path, exc.strerror or str(exc)) from exc
    return read_param_text(text, path)


def _evaluator(pf: ParamFile, output_count: int):
    """Evaluator and default problem name designated by BB_EXE."""
    entry = pf.entry("BB_EXE")
    target = " ".join(entry.values)
    if not target:
        raise ParamParseError("BB_EXE expects a value", entry.line)
    if target.lower().startswith(BUILTIN_PREFIX):
        name = target[len(BUILTIN_PREFIX):]
        try:
            return get_problem(name).evaluator, name
        except KeyError as exc:
            raise ParamParseError(str(exc).strip("'\""), entry.line) from None
    bb_path = Path(target)
    if not bb_path.is_absolute():
        bb_path = pf.base_dir / bb_path
    return ProcessEvaluator(bb_path, output_count), bb_path.stem


def build_problem(pf: ParamFile) -> ValidatedProblem:
    """
    Problem defined by a parameter file.
    
    Raises:
        MissingKey: If a mandatory key is absent
        ParamParseError: On an unparsable value
        ProblemError: If the problem violates its invariants
    """
    for key in MANDATORY_KEYS:
        pf.entry(key)
    n = _int(pf.entry("DIMENSION"))
    if n < 1:
        raise ParamParseError(f"DIMENSION must be >= 1, got {n}", pf.entry("DIMENSION").line)
    
    kinds_entry = pf.entry("BB_OUTPUT_TYPE")
    try:
        kinds = tuple(OutputKind(token.upper()) for token in kinds_entry.values)
    except ValueError as exc:
        raise ParamParseError(f"BB_OUTPUT_TYPE: {exc}", kinds_entry.line) from None
    if not kinds:
        raise ParamParseError("BB_OUTPUT_TYPE expects at least one output", kinds_entry.line)
    
    evaluator, default_name = _evaluator(pf, len(kinds))
    lower = parse_vector(pf.entry("LOWER_BOUND"), n, missing=float("-inf")) if pf.has("LOWER_BOUND") else None
    upper = parse_vector(pf.entry("UPPER_BOUND"), n, missing=float("inf")) if pf.has("UPPER_BOUND") else None
    name = " ".join(pf.entry("PROBLEM_NAME").values) if pf.has("PROBLEM_NAME") else default_name
    
    return validate_problem(Problem(
        name=name or "problem",
        n=n,
        output_kinds=kinds,
        lower=lower,
        upper=upper,
        x0=tuple(parse_vector(entry, n) for entry in pf.entries["X0"]),
        evaluator=evaluator,
    ))


def _ordering(entry: ParamEntry) -> OrderingStrategy:
    token = _single(entry).lower()
    try:
        return OrderingStrategy(token)
    except ValueError:
        choices = ", ".join(s.value for s in OrderingStrategy)
        raise ParamParseError(f"ORDERING: '{token}' is not one of {choices}", entry.line) from None


def _searches(entry: ParamEntry) -> frozenset:
    tokens = [t.lower() for t in entry.values]
    if tokens in ([], ["none"]):
        return frozenset()
    try:
        return frozenset(SearchKind(t) for t in tokens)
    except ValueError as exc:
        raise ParamParseError(f"SEARCHES: {exc}", entry.line) from None


def _psd(entry: ParamEntry) -> Dict[str, object]:
    tokens = entry.values
    if not tokens:
        raise ParamParseError("PSD expects ON n_s n_mt or OFF", entry.line)
    switch = tokens[0].lower()
    if switch not in _TRUE | _FALSE or len(tokens) not in (1, 3) or (switch in _TRUE and len(tokens) != 3):
        raise ParamParseError("PSD expects ON n_s n_mt or OFF", entry.line)
    values = {"psd_enabled": switch in _TRUE}
    if len(tokens) == 1:
        return values
    try:
        return {**values, "psd_ns": int(tokens[1]), "psd_nmt": int(tokens[2])}
    except ValueError:
        raise ParamParseError("PSD: n_s and n_mt must be integers", entry.line) from None


def build_params(pf: ParamFile, problem: ValidatedProblem, **overrides) -> Params:
    """
    Parameters defined by a parameter file.
    
    Args:
        pf: Parameter file
        problem: Problem built from the same file
        **overrides: Params fields replacing the file values (command line)
    
    Raises:
        ParamParseError: On an unparsable or invalid value
    """
    readers = {
        "MAX_BB_EVAL": ("max_bb_eval", _int),
        "MAX_ITERATIONS": ("max_iterations", _int),
        "SEED": ("seed", _int),
        "INITIAL_FRAME_SIZE": ("delta0", _float),
        "FRAME_ADJUSTMENT": ("tau", _float),
        "EPSILON": ("eps_stop", _float),
        "OPPORTUNISM": ("opportunism", _bool),
        "ORDERING": ("ordering", _ordering),
        "SEARCHES": ("searches_enabled", _searches),
        "SPECULATIVE_COUNT": ("speculative_count", _int),
        "NM_MAX_TRIALS": ("nm_max_trials", _int),
        "LH_COUNT": ("lh_count", _int),
        "QUAD_MAX_EVALS": ("quad_max_evals", _int),
        "BARRIER": ("barrier_kind", lambda e: BarrierKind(_single(e).lower())),
        "NB_THREADS": ("n_workers", _int),
        "GROUP_MAX_SIZE": ("group_max_size", _int),
        "MEGA_SEARCH_POLL": ("mega_search_poll", _bool),
        "PSD_WORKER_BUDGET": ("psd_worker_budget", _int),
        "PSD_COVERAGE": ("psd_coverage_threshold", _int),
    }
    values: Dict[str, object] = {}
    for key, (field, read) in readers.items():
        if pf.has(key):
            entry = pf.entry(key)
            try:
                values[field] = read(entry)
            except ValueError as exc:
                raise ParamParseError(f"{key}: {exc}", entry.line) from None
    if pf.has("PSD"):
        values.update(_psd(pf.entry("PSD")))
        if values.get("psd_enabled") and "n_workers" not in values:
            values["n_workers"] = values["psd_nmt"]
    values.update(overrides)
    try:
        return default_params(problem, **values)
    except ValidationError as exc:
        raise ParamParseError(f"Invalid parameters: {exc}") from None


def parse_params(path: Path | str, **overrides) -> Tuple[ValidatedProblem, Params]:
    """
    Read a parameter file into a problem and its parameters.
    
    Args:
        path: Parameter file
        **overrides: Params fields replacing the file values
    
    Returns:
        Tuple[ValidatedProblem, Params]: Problem (with its evaluator) and parameters
    
    Raises:
        MissingKey: If a mandatory key is absent
        UnknownKey: If a key is not recognized
        ParamParseError: On an unparsable value, with its line number
    """
    pf = read_param_file(path)
    problem = build_problem(pf)
    params = build_params(pf, problem, **overrides)
    logger.debug("Read %s: problem %s (n=%d, m=%d)", path, problem.name, problem.n, problem.m)
    return problem, params


def _yes_no(flag: bool) -> str:
    return "yes" if flag else "no"


def _vector(values) -> str:
    return "( " + " ".join(format_float(v) for v in values) + " )"


def dump_params(
    problem: ValidatedProblem,
    params: Params,
    bb_exe: str,
    cache_file: Optional[Path | str] = None,
    history_file: Optional[Path | str] = None,
) -> str:
    """
    Canonical parameter file text of a problem and its parameters.
    
    Reading the text back gives the same problem (evaluator aside) and
    the same parameters.
    
    Args:
        problem: Validated problem
        params: Parameters
        bb_exe: BB_EXE value (a path or `builtin:<name>`)
        cache_file: CACHE_FILE value
        history_file: HISTORY_FILE value
    
    Returns:
        str: Parameter file text
    """
    lines = [
        f"PROBLEM_NAME {problem.name}",
        f"DIMENSION {problem.n}",
        f"BB_EXE {bb_exe}",
        "BB_OUTPUT_TYPE " + " ".join(kind.value for kind in problem.output_kinds),
    ]
    lines += [f"X0 {_vector(x0)}" for x0 in problem.x0]
    lines += [
        f"LOWER_BOUND {_vector(problem.lower)}",
        f"UPPER_BOUND {_vector(problem.upper)}",
        f"MAX_BB_EVAL {params.max_bb_eval}",
    ]
    if params.max_iterations is not None:
        lines.append(f"MAX_ITERATIONS {params.max_iterations}")
    searches = [kind.value for kind in SEARCH_ORDER if kind in params.searches_enabled] or ["none"]
    lines += [
        f"SEED {params.seed}",
        f"INITIAL_FRAME_SIZE {format_float(params.delta0)}",
        f"FRAME_ADJUSTMENT {format_float(params.tau)}",
        f"EPSILON {format_float(params.eps_stop)}",
        f"OPPORTUNISM {_yes_no(params.opportunism)}",
        f"ORDERING {params.ordering.value}",
        "SEARCHES " + " ".join(searches),
        f"SPECULATIVE_COUNT {params.speculative_count}",
        f"NM_MAX_TRIALS {params.nm_max_trials}",
    ]
    if params.lh_count is not None:
        lines.append(f"LH_COUNT {params.lh_count}")
    lines += [
        f"QUAD_MAX_EVALS {params.quad_max_evals}",
        f"BARRIER {params.barrier_kind.value}",
        f"NB_THREADS {params.n_workers}",
        f"GROUP_MAX_SIZE {params.group_max_size}",
        f"MEGA_SEARCH_POLL {_yes_no(params.mega_search_poll)}",
        f"PSD {'ON' if params.psd_enabled else 'OFF'} {params.psd_ns} {params.psd_nmt}",
        f"PSD_WORKER_BUDGET {params.psd_worker_budget}",
    ]
    if params.psd_coverage_threshold is not None:
        lines.append(f"PSD_COVERAGE {params.psd_coverage_threshold}")
    if cache_file is not None:
        lines.append(f"CACHE_FILE {cache_file}")
    if history_file is not None:
        lines.append(f"HISTORY_FILE {history_file}")
    return "\n".join(lines) + "\n"


def immutable_changes(pf: ParamFile, problem: ValidatedProblem) -> List[str]:
    """
    Problem-defining keys whose value differs from a running problem.
    
    Args:
        pf: Re-read parameter file
        problem: Problem of the run in progress
    
    Returns:
        List[str]: Changed keys among IMMUTABLE_KEYS
    """
    changed = []
    try:
        if _int(pf.entry("DIMENSION")) != problem.n:
            changed.append("DIMENSION")
    except (MissingKey, ParamParseError):
        changed.append("DIMENSION")
    kinds = tuple(token.upper() for token in pf.entries.get("BB_OUTPUT_TYPE", [ParamEntry(key="")])[-1].values)
    if kinds != tuple(kind.value for kind in problem.output_kinds):
        changed.append("BB_OUTPUT_TYPE")
    try:
        x0 = tuple(parse_vector(entry, problem.n) for entry in pf.entries.get("X0", []))
    except ParamParseError:
        x0 = None
    if x0 != problem.x0:
        changed.append("X0")
    return changed
