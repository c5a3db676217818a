"""
Key normalization for parameter files.

Parameter files written for older releases or other solvers use alias keys.
The normalizer rewrites them to the current key set before validation and
fills in the defaults of optional keys.
"""

from typing import Callable, Dict, List, Tuple

from pydantic import BaseModel

from madsopt.schemas.params import SearchKind


class ParamEntry(BaseModel):
    """One `KEY value ...` line of a parameter file."""
    
    key: str
    values: Tuple[str, ...] = ()
    line: int = 0
    
    model_config = {
        "frozen": True
    }


# Parsed file: entries per key, in file order (X0 may repeat)
ParamPayload = Dict[str, List[ParamEntry]]
Migration = Callable[[ParamPayload], ParamPayload]


def _enable_search(old_key: str, kind: SearchKind) -> Migration:
    """Migration turning a `<X>_SEARCH yes|no` switch into a SEARCHES entry."""
    
    def migrate(payload: ParamPayload) -> ParamPayload:
        entry = payload.pop(old_key)[-1]
        switch = entry.values[0].lower() if entry.values else "yes"
        if switch in ("no", "false", "0"):
            return payload
        searches = payload.setdefault("SEARCHES", [ParamEntry(key="SEARCHES", line=entry.line)])
        current = searches[-1]
        if kind.value not in (v.lower() for v in current.values):
            searches[-1] = current.model_copy(update={"values": current.values + (kind.value,)})
        return payload
    
    return migrate


def _migrate_lh_search(payload: ParamPayload) -> ParamPayload:
    """`LH_SEARCH n0 ni` enables the LH search with ni points per iteration."""
    entry = payload.pop("LH_SEARCH")[-1]
    counts = [v for v in entry.values if v.isdigit()]
    per_iteration = int(counts[-1]) if counts else 1
    if per_iteration == 0:
        return payload
    payload["LH_SEARCH"] = [entry.model_copy(update={"values": ("yes",)})]
    payload = _enable_search("LH_SEARCH", SearchKind.LH)(payload)
    payload.setdefault("LH_COUNT", [ParamEntry(key="LH_COUNT", values=(str(per_iteration),), line=entry.line)])
    return payload


class ParamKeyNormalizer:
    """Handles normalization of parameter file keys."""
    
    def __init__(self):
        """Initialize the normalizer with key mappings and defaults."""
        # Alias keys: plain renames or migration functions
        self.field_mappings: Dict[str, str | Callable] = {
            "BB_MAX_EVAL": "MAX_BB_EVAL",
            "MAX_EVAL": "MAX_BB_EVAL",
            "MAX_ITER": "MAX_ITERATIONS",
            "MIN_FRAME_SIZE": "EPSILON",
            "NB_THREADS_OPENMP": "NB_THREADS",
            "BB_MAX_BLOCK_SIZE": "GROUP_MAX_SIZE",
            "EVAL_QUEUE_SORT": "ORDERING",
            "LH_SEARCH": _migrate_lh_search,
            "SPECULATIVE_SEARCH": _enable_search("SPECULATIVE_SEARCH", SearchKind.SPECULATIVE),
            "NM_SEARCH": _enable_search("NM_SEARCH", SearchKind.NM),
            "QUAD_MODEL_SEARCH": _enable_search("QUAD_MODEL_SEARCH", SearchKind.QUAD),
        }
        
        # Values of optional keys absent from the file
        self.defaults: Dict[str, Tuple[str, ...]] = {
            "SEED": ("0",),
            "OPPORTUNISM": ("yes",),
            "MEGA_SEARCH_POLL": ("no",),
        }
    
    def normalize_payload(self, payload: ParamPayload) -> ParamPayload:
        """
        Rewrite alias keys and add defaults.
        
        Args:
            payload: Entries per upper-case key
        
        Returns:
            ParamPayload: New payload using the current key set only
        """
        normalized = {key: list(entries) for key, entries in payload.items()}
        
        for old_key, new_key in self.field_mappings.items():
            if old_key not in normalized:
                continue
            if callable(new_key):
                normalized = new_key(normalized)
            else:
                moved = [e.model_copy(update={"key": new_key}) for e in normalized.pop(old_key)]
                normalized.setdefault(new_key, []).extend(moved)
        
        for key, values in self.defaults.items():
            if key not in normalized:
                normalized[key] = [ParamEntry(key=key, values=values)]
        
        return normalized
    
    def add_field_mapping(self, old_key: str, new_key: str | Callable) -> None:
        """
        Add an alias key.
        
        Args:
            old_key: Alias (upper case)
            new_key: Current key or migration function
        """
        self.field_mappings[old_key.upper()] = new_key
    
    def add_default(self, key: str, values: Tuple[str, ...]) -> None:
        """
        Add a default for an optional key.
        
        Args:
            key: Key (upper case)
            values: Tokens used when the key is absent
        """
        self.defaults[key.upper()] = tuple(values)


# Global instance used by the parameter file parser
param_normalizer = ParamKeyNormalizer()
