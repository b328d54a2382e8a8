#!/usr/bin/env python3
"""
app.py
Command-line front end of the matching-polytope laboratory. It resolves the run
configuration, sets up the session files, dispatches to one experiment and
writes its report to stdout (and, with --out, to a timestamped session
directory).
Modules:
    LabCommands
    LabConfig
    Diagnostics
    argparse
    logging
Functions:
    FileSetup(config, command) -> dict:
        Creates the session directory and returns the paths of the report and log files.
    parse_args(argv) -> argparse.Namespace:
        Parses command-line arguments.
    main(argv) -> int:
        Runs one sub-command and maps its outcome to the process exit code.
"""
# -*- coding: utf-8 -*-

import sys

if sys.version_info < (3, 9):
    raise Exception("This script requires Python 3.9 or later. Please upgrade Python.")

# modules
from . import Diagnostics
from . import LabCommands
from . import LabConfig
from .LabErrors import (
    BudgetExceeded,
    CapExceeded,
    InfeasibleScale,
    LabError,
    NoPerfectMatching,
    ParseError,
    TooManyPairs,
    TooManyVariables,
)
import argparse
import logging
import os

# libraries
import pyperclip

log = logging.getLogger("matchinglab")

EXIT_PARSE = 2
EXIT_LIMIT = 3
EXIT_NO_MATCHING = 4
EXIT_CHECK_FAILED = 5
EXIT_OTHER = 6

_LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def FileSetup(config: LabConfig.RunConfig, command: str) -> dict:
    '''
    Create DIR/<command>_<date>T<time>/ for the session.

    :param config: Resolved run configuration; ``out_dir`` is the parent directory.
    :param command: Sub-command name, used as the directory prefix.
    :return: Paths of the session directory, report files and log file.
    :rtype: dict[str, str]
    '''

    # create date and time strings for file creation
    date, start_time, start_time_file, _ = Diagnostics.GetDateTime()

    # create the output directory structure for the session
    data_dir = config.out_dir + '/'
    if not os.path.exists(data_dir):
        os.makedirs(data_dir)
    output_dir = data_dir + command + "_" + date + "T" + start_time_file
    suffix = 1
    while os.path.exists(output_dir):
        suffix += 1
        output_dir = data_dir + command + "_" + date + "T" + start_time_file + f"_{suffix}"
    os.mkdir(output_dir)

    log_filename = output_dir + "/run.log"
    with open(log_filename, "w") as fp:
        fp.write("matchinglab " + command + ": " + date + " at " + start_time + "\n\n")

    return {
        "output_dir": output_dir,
        "json_filename": output_dir + "/report.json",
        "text_filename": output_dir + "/report.txt",
        "log_filename": log_filename,
    }


def _add_common(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("run configuration (overrides the selected INI set)")
    group.add_argument("--settings", help="INI file with configuration sets (default ~/MatchingLab.ini)")
    group.add_argument("--config", help="configuration set to use instead of SelectedConfig")
    group.add_argument("--profile", help="scale profile h,t,width (city height, ladders per forall gadget, city width)")
    group.add_argument("--cap", type=int, help="maximum number of perfect matchings to enumerate")
    group.add_argument("--budget", type=int, help="maximum number of search states")
    group.add_argument("--workers", type=int, help="worker processes for diameter and pattern searches")
    group.add_argument("--format", choices=LabConfig.FORMATS, help="report format on stdout")
    group.add_argument("--seed", type=int, help="seed for randomised instances and samplers")
    group.add_argument("--out", metavar="DIR", help="write a session directory with report and log under DIR")
    group.add_argument("--copy", action="store_true", default=None, help="copy the rendered report to the clipboard")
    noise = group.add_mutually_exclusive_group()
    noise.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    noise.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")


def parse_args(argv=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog='matchinglab',
        description='Exact experiments on bipartite perfect matching polytopes and their hardness gadgets.',
        epilog='Exit codes: 0 all checks passed, 2 parse error, 3 cap or budget exceeded, '
               '4 no perfect matching, 5 a check failed, 6 any other error.')
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("diam", help="exact diameter of the perfect matching polytope of a graph")
    p.add_argument("graph", help="graph file (.json or .graphml)")
    p.add_argument("--threshold", type=int, help="answer 'is the diameter at most T?'")
    _add_common(p)

    p = sub.add_parser("verify", help="exhaustively check one gadget lemma")
    p.add_argument("lemma", choices=sorted(LabCommands.LEMMAS))
    p.add_argument("--h", type=int, help="tower height")
    p.add_argument("--t", type=int, help="ladders per forall gadget")
    p.add_argument("--t-c", dest="t_c", type=int, help="city width")
    p.add_argument("--h-c", dest="h_c", type=int, help="city height")
    p.add_argument("--n", type=int, help="instance size (semi-default, inapprox)")
    p.add_argument("--k", type=int, help="designated pairs (semi-default)")
    p.add_argument("--trials", type=int, help="random trials (semi-default)")
    _add_common(p)

    p = sub.add_parser("reduce", help="build a reduction graph and report its census")
    p.add_argument("kind", choices=("gh", "folklore", "inapprox"))
    p.add_argument("input", help="HamInstance JSON, DIMACS CNF or undirected graph file")
    p.add_argument("--paper", action="store_true", help="paper-scale profile, census only")
    p.add_argument("--check", action="store_true", help="also run the exact oracle on the input")
    _add_common(p)

    p = sub.add_parser("roundtrip", help="synthesise and extract flip sequences end to end")
    p.add_argument("instance", nargs="?", help="HamInstance JSON")
    p.add_argument("--generate", nargs=3, metavar=("KIND", "N", "K"),
                   help="generate an instance instead: KIND is yes, no or random")
    p.add_argument("--max-patterns", dest="max_patterns", type=int, default=4,
                   help="number of start patterns to run (default 4)")
    p.add_argument("--scramble", type=int, default=0,
                   help="random flips applied to M_P before projecting (default 0)")
    _add_common(p)

    p = sub.add_parser("catalog", help="DOT drawings of every gadget kind")
    _add_common(p)

    args = parser.parse_args(argv)
    return args


def _setup_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=_LOG_FORMAT, stream=sys.stderr)
    logging.getLogger("matchinglab").setLevel(level)


def _verify_params(args: argparse.Namespace) -> dict:
    keys = ("h", "t", "t_c", "h_c", "n", "k", "trials")
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _dispatch(args: argparse.Namespace, config: LabConfig.RunConfig,
              diag: Diagnostics.Diagnostics) -> LabCommands.Report:
    if args.command == "diam":
        return LabCommands.cmd_diam(args.graph, config, args.threshold, diag)
    if args.command == "verify":
        return LabCommands.cmd_verify(args.lemma, _verify_params(args), config, diag)
    if args.command == "reduce":
        return LabCommands.cmd_reduce(args.kind, args.input, config, diag, paper=args.paper, check=args.check)
    if args.command == "roundtrip":
        generate = None
        if args.generate:
            kind, n, k = args.generate
            try:
                generate = (kind, int(n), int(k))
            except ValueError as exc:
                raise ParseError(f"--generate expects KIND N K with integer N and K: {exc}") from exc
        return LabCommands.cmd_roundtrip(config, args.instance, generate, args.max_patterns, args.scramble, diag)
    return LabCommands.cmd_catalog(config, diag)


def _exit_code(exc: LabError) -> int:
    if isinstance(exc, ParseError):
        return EXIT_PARSE
    if isinstance(exc, (CapExceeded, BudgetExceeded, InfeasibleScale, TooManyPairs, TooManyVariables)):
        return EXIT_LIMIT
    if isinstance(exc, NoPerfectMatching):
        return EXIT_NO_MATCHING
    return EXIT_OTHER


def main(argv=None) -> int:

    args = parse_args(argv)
    _setup_logging(args)
    diag = Diagnostics.Diagnostics()

    try:
        config = LabConfig.RunConfig.resolve(args)
    except LabError as exc:
        log.error("configuration: %s", exc)
        return EXIT_OTHER

    # set up the session directory before running so the log captures everything
    file_paths = None
    handler = None
    if config.out_dir:
        file_paths = FileSetup(config, args.command)
        handler = logging.FileHandler(file_paths["log_filename"], mode="a", encoding="utf-8")
        handler.setFormatter(logging.Formatter(_LOG_FORMAT))
        logging.getLogger("matchinglab").addHandler(handler)

    try:
        try:
            report = _dispatch(args, config, diag)
        except LabError as exc:
            code = _exit_code(exc)
            diag.error(type(exc).__name__, str(exc))
            print(f"matchinglab {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
            return code
        except OSError as exc:
            diag.error("input", str(exc))
            print(f"matchinglab {args.command}: {exc}", file=sys.stderr)
            return EXIT_PARSE

        text = LabCommands.render_report(report, config.fmt)
        sys.stdout.write(text)

        if config.copy:
            try:
                pyperclip.copy(text)
                diag.info("report copied to the clipboard")
            except pyperclip.PyperclipException as exc:
                diag.warning("clipboard unavailable", str(exc))

        if file_paths is not None:
            with open(file_paths["json_filename"], "w", encoding="utf-8") as fp:
                fp.write(LabCommands.render_report(report, "json"))
            with open(file_paths["text_filename"], "w", encoding="utf-8") as fp:
                fp.write(LabCommands.render_report(report, "table"))
            for name, blob in report.artefacts.items():
                with open(os.path.join(file_paths["output_dir"], name), "wb") as fp:
                    fp.write(blob)
            log.info("session files written to %s", file_paths["output_dir"])

        return report.exit_code
    finally:
        if handler is not None:
            logging.getLogger("matchinglab").removeHandler(handler)
            handler.close()


if (__name__ == '__main__'):
    sys.exit(main())
