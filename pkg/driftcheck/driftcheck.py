#!/usr/bin/env python3

# MIT License
#
# Copyright (c) 2026 driftcheck contributors
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.


from __future__ import annotations

import asyncio
import concurrent.futures
import logging as __logging
import os
import sys

import driftcheck.args
import driftcheck.dclogging as dclogging
import driftcheck.report as report
import driftcheck.runner as runner
import driftcheck.scenario as scenario
from driftcheck.runner import RunOptions
from driftcheck.scenario import ScenarioException

module_logger = __logging.getLogger(__name__)


def _get_logger(name: str):
    global module_logger
    return module_logger.getChild(name)


APP_NAME = "driftcheck"
verbose_set = False


def _emit(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)


def run(args) -> int:
    sc = scenario.load_scenario(args.scenario)
    result = runner.run_scenario(sc, RunOptions(levels=args.levels, timings=args.timings))
    _emit(report.report_json(result), args.out)
    if args.csv:
        _emit(report.convergence_csv_from_report(result), args.csv)
    return result.exit_code()


def converge(args) -> int:
    sc = scenario.load_scenario(args.scenario)
    study = runner.converge(sc, RunOptions(levels=args.levels))
    table = report.convergence_csv(study)
    if args.csv:
        _emit(table, args.csv)
    else:
        sys.stdout.write(table)
    rich = study.richardson
    order = "n/a" if rich.observed_order is None else f"{rich.observed_order:.4f}"
    print(f"extrapolate {rich.extrapolate!r} (error estimate {rich.error_estimate:.3e}, observed order {order})",
          file=sys.stderr)
    return 0


def spectrum(args) -> int:
    sc = scenario.load_scenario(args.scenario)
    result = runner.spectrum(sc, args.k, RunOptions(levels=args.levels))
    for i, (value, residual) in enumerate(zip(result.eigenvalues, result.residuals), start=1):
        print(f"{i} {float(value)!r} {float(residual):.3e}")
    return 0


def list_catalog() -> int:
    for sc in scenario.catalog():
        print(f"{sc.id}: checks = [{', '.join(c.name for c in sc.checks)}]")
    return 0


async def run_catalog(out_dir: str, jobs: int = 1, levels: int | None = None) -> int:
    """Run every catalog scenario on a thread pool; reports are written in scenario-id order."""
    log = _get_logger("run_catalog")
    _loop = asyncio.get_running_loop()
    os.makedirs(out_dir, exist_ok=True)
    scenarios = sorted(scenario.catalog(), key=lambda s: s.id)
    options = RunOptions(levels=levels)
    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs, thread_name_prefix="scenario") as pool:
        results = await asyncio.gather(*[_loop.run_in_executor(pool, runner.run_scenario, sc, options)
                                         for sc in scenarios])
    for result in results:
        report.write_report(result, os.path.join(out_dir, f"{result.scenario_id}.json"))
        log.info(f"{result.scenario_id}: exit {result.exit_code()}")
    codes = [r.exit_code() for r in results]
    return 2 if 2 in codes else 0


async def _driftcheck_cli_main():
    global verbose_set
    log = _get_logger("main")
    args = driftcheck.args.Args(sys.argv)
    verbose_set = args.verbose > 0
    dclogging.configure(args.verbose, args.quiet)

    try:
        if args.run:
            return run(args)
        if args.converge:
            return converge(args)
        if args.spectrum:
            return spectrum(args)
        if args.catalog:
            if args.run_all:
                if not args.out:
                    print("catalog --run-all needs --out DIR")
                    return 1
                return await run_catalog(args.out, args.jobs, args.levels)
            return list_catalog()
    except ScenarioException as e:
        log.error(f"scenario: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1

    print("")
    print(driftcheck.args.usage)
    print("")
    return 1


def driftcheck_cli():
    global verbose_set
    return_code = 1
    exc = None
    try:
        return_code = asyncio.run(_driftcheck_cli_main())
    except SystemExit as e:
        return_code = e.code if isinstance(e.code, int) else 1
    except KeyboardInterrupt:
        pass
    except Exception as ex:
        print(f"Unhandled exception: {ex}")
        exc = ex
    if verbose_set and exc:
        raise exc
    sys.exit(return_code if return_code is not None else 255)


if __name__ == "__main__":
    driftcheck_cli()
