from logging import getLogger

logger = getLogger("adelic_slopes")

from adelic_slopes.bundle import (  # noqa: E402
    AdelicBundle,
    AdelicMatrix,
    body_bundle,
    degree,
    dual,
    hermitian_bundle,
    height_map,
    height_vector,
    john_bundle,
    lowner_bundle,
)
from adelic_slopes.config import (  # noqa: E402
    CheckConfig,
    EnumerationConfig,
    OutputConfig,
    OutputFormat,
    Settings,
    SolverConfig,
    SuiteName,
)
from adelic_slopes.dtos import CheckReport, Summary  # noqa: E402
from adelic_slopes.schemas import dump_bundle, load_bundle, parse_bundle  # noqa: E402
from adelic_slopes.slopes import canonical_polygon, hn_filtration, mu_bracket  # noqa: E402
from adelic_slopes.verify import run_suite, run_suite_async, summarize  # noqa: E402

__all__ = [
    "AdelicBundle",
    "AdelicMatrix",
    "CheckConfig",
    "CheckReport",
    "EnumerationConfig",
    "OutputConfig",
    "OutputFormat",
    "Settings",
    "SolverConfig",
    "SuiteName",
    "Summary",
    "body_bundle",
    "canonical_polygon",
    "degree",
    "dual",
    "dump_bundle",
    "height_map",
    "height_vector",
    "hermitian_bundle",
    "hn_filtration",
    "john_bundle",
    "load_bundle",
    "lowner_bundle",
    "mu_bracket",
    "parse_bundle",
    "run_suite",
    "run_suite_async",
    "summarize",
]
