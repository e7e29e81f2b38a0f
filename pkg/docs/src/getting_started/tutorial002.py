from adelic_slopes import EnumerationConfig, Settings, SolverConfig, run_suite
from adelic_slopes.config import CheckConfig, OutputConfig, OutputFormat

settings = Settings(
    solver=SolverConfig(tol=1e-8, max_iter=1000),
    enumeration=EnumerationConfig(radius_factor=1.5, rank_guard=6),
    check=CheckConfig(seed=7, workers=4),
    output=OutputConfig(format=OutputFormat.TEXT, digits=8),
)

reports = run_suite("hermitian-exact", 10, settings=settings)
