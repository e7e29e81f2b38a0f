import anyio
from adelic_slopes import run_suite_async, summarize


async def main() -> None:
    reports = await run_suite_async("all", 20, seed=7, workers=4)
    print(summarize(reports))
    for report in reports:
        if not report.passed:
            print(report.to_record())


anyio.run(main)
