"""
Catalog of the constrained analytic benchmark problems.

Entries record the size of each problem. Five are bundled; the others must
be provided through the madsopt.problems entry points.
"""

import logging
from typing import Dict, List

from pydantic import BaseModel, Field

from madsopt.bench.problems import BenchProblem, get_problem

logger = logging.getLogger(__name__)


class CatalogEntry(BaseModel):
    """Size and bound information of a catalog problem."""
    
    name: str
    n: int = Field(..., ge=1)
    m: int = Field(..., ge=0)
    bounded: bool
    registry_name: str
    
    model_config = {
        "frozen": True
    }


CONSTRAINED_CATALOG: List[CatalogEntry] = [
    CatalogEntry(name="CHENWANG_F2", n=8, m=6, bounded=True, registry_name="chenwang_f2"),
    CatalogEntry(name="CHENWANG_F3", n=10, m=8, bounded=True, registry_name="chenwang_f3"),
    CatalogEntry(name="CRESCENT", n=10, m=2, bounded=False, registry_name="crescent10"),
    CatalogEntry(name="DISK", n=10, m=1, bounded=False, registry_name="disk10"),
    CatalogEntry(name="G210", n=10, m=2, bounded=True, registry_name="g210"),
    CatalogEntry(name="G220", n=20, m=2, bounded=True, registry_name="g220"),
    CatalogEntry(name="HS19", n=2, m=2, bounded=True, registry_name="hs19"),
    CatalogEntry(name="HS83", n=5, m=6, bounded=True, registry_name="hs83"),
    CatalogEntry(name="HS114", n=9, m=6, bounded=True, registry_name="hs114"),
    CatalogEntry(name="MAD6", n=5, m=7, bounded=False, registry_name="mad6"),
    CatalogEntry(name="MDO", n=10, m=10, bounded=True, registry_name="mdo"),
    CatalogEntry(name="MEZMONTES", n=2, m=2, bounded=True, registry_name="mezmontes"),
    CatalogEntry(name="OPTENG_RBF", n=3, m=4, bounded=True, registry_name="opteng_rbf"),
    CatalogEntry(name="PENTAGON", n=6, m=15, bounded=False, registry_name="pentagon6"),
    CatalogEntry(name="SNAKE", n=2, m=2, bounded=False, registry_name="snake2"),
    CatalogEntry(name="SPRING", n=3, m=4, bounded=True, registry_name="spring"),
    CatalogEntry(name="TAOWANG_F2", n=7, m=4, bounded=True, registry_name="taowang_f2"),
    CatalogEntry(name="ZHAOWANG_F5", n=13, m=9, bounded=True, registry_name="zhaowang_f5"),
]

CATALOG_BY_NAME: Dict[str, CatalogEntry] = {entry.name: entry for entry in CONSTRAINED_CATALOG}


def resolve(name: str) -> BenchProblem:
    """
    Problem of a catalog entry.
    
    Args:
        name: Catalog name (e.g. "HS19")
        
    Returns:
        BenchProblem: Bundled or plugin-provided problem
        
    Raises:
        KeyError: If the name is not in the catalog, the problem is neither
            bundled nor registered, or its size does not match the entry
    """
    entry = CATALOG_BY_NAME[name.upper()]
    problem = get_problem(entry.registry_name)
    if problem.n != entry.n or problem.m != entry.m:
        raise KeyError(
            f"Problem '{entry.registry_name}' has n={problem.n}, m={problem.m}; "
            f"catalog expects n={entry.n}, m={entry.m}"
        )
    return problem


def available_problems() -> List[BenchProblem]:
    """Problems of the entries that are bundled or registered, in catalog order."""
    problems = []
    for entry in CONSTRAINED_CATALOG:
        try:
            problems.append(resolve(entry.name))
        except KeyError as exc:
            logger.debug("Skipping catalog entry %s: %s", entry.name, exc)
    return problems
