import sys

import docopt

import driftcheck

usage = \
'''
Usage:
    driftcheck run <scenario> [--out FILE] [--csv FILE] [--levels N] [--timings] [-v... | -q...]
    driftcheck converge <scenario> [--csv FILE] [--levels N] [-v... | -q...]
    driftcheck spectrum <scenario> --k N [--levels N] [-v... | -q...]
    driftcheck catalog [--run-all --out DIR] [--jobs N] [-v... | -q...]
    driftcheck -h
    driftcheck --version

Arguments:
    <scenario>                   Scenario file, or the name of a shipped catalog scenario

Options:
    -o FILE --out FILE           Write the JSON report to FILE (run), or reports into
                                   directory DIR (catalog --run-all). Default: stdout
    --csv FILE                   Write the eigenvalue convergence table to FILE
    -l N --levels N              Number of refinement levels, overrides the scenario
    -t --timings                 Record per-check runtime in the report. Reports are
                                   no longer byte-identical across runs
    -k N --k N                   Number of eigenvalues to compute
    -a --run-all                 Run every catalog scenario
    -j N --jobs N                Scenarios run concurrently by --run-all [default: 1]
    -q --quiet                   Increase quietness (move level up), multiple increases effect
                                          DEFAULT LOGGING LEVEL
                                                  CRITICAL (silent)
                                                  ERROR
                                   driftcheck ->  WARNING
                                                  INFO
                                                  DEBUG    (insane)
    -v --verbose                 Increase verbosity (move level down), multiple increases effect
    --version                    Show version
    -h --help                    Show this help
'''


def _positive(value, name: str):
    if value is None:
        return None
    try:
        number = int(value)
        if number < 1:
            raise ValueError(value)
        return number
    except ValueError:
        print(f"Invalid value for {name}")
        sys.exit(1)


class Args:
    def __init__(self, argv: [str]):
        global usage
        try:
            self.argv = argv
            args = docopt.docopt(usage, argv=self.argv[1:], version=f"driftcheck {driftcheck.__version__}")

            self.run = args.get("run", None) or False
            self.converge = args.get("converge", None) or False
            self.spectrum = args.get("spectrum", None) or False
            self.catalog = args.get("catalog", None) or False
            self.scenario = args.get("<scenario>", None)
            self.out = args.get("--out", None)
            self.csv = args.get("--csv", None)
            self.timings = args.get("--timings", None) or False
            self.run_all = args.get("--run-all", None) or False
            self.verbose = args.get("--verbose", None) or 0
            self.quiet = args.get("--quiet", None) or 0
            self.levels = _positive(args.get("--levels", None), "--levels")
            self.k = _positive(args.get("--k", None), "--k")
            self.jobs = _positive(args.get("--jobs", None), "--jobs") or 1
            self.help = args.get("--help", None) or False
        except docopt.DocoptExit:
            print()
            print(usage)
            sys.exit(1)
        except Exception as e:
            print(f"Error parsing arguments: {e}")
            print()
            print(usage)
            sys.exit(1)

        if self.help:
            sys.exit(0)
