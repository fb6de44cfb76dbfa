import os
import sys
import logging
import argparse
import subprocess

from Config import ConfigValidationError
from System.RunConfig import validate_config
from System.RunPipeline import RunPipeline
from System.Report import RunReport
from System.Datastore import IntegrityError

REPO_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

# Exit codes
EXIT_SUCCESS        = 0
EXIT_FAILURE        = 1
EXIT_INVALID_CONFIG = 2
EXIT_INCOMPLETE     = 3


def configure_logging(verbosity):
    level = logging.DEBUG if verbosity > 0 else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s: %(message)s")


def get_git_version():
    # Commit of the code producing the outputs; None outside a git checkout
    try:
        output = subprocess.check_output(["git", "rev-parse", "HEAD"], cwd=REPO_DIR, stderr=subprocess.DEVNULL)
        return output.decode("utf-8").strip()
    except (OSError, subprocess.CalledProcessError):
        logging.debug("No git commit found for %s" % REPO_DIR)
        return None


def add_config_arguments(parser):
    parser.add_argument("--config", dest="config_file", default=None,
                        help="Run config (.config or .json). Defaults come from the preset.")
    parser.add_argument("--seed", type=int, default=None, help="Master seed, unsigned 64-bit integer.")
    parser.add_argument("--workers", type=int, default=None, help="Number of trajectory worker threads.")
    parser.add_argument("--preset", default=None, help="Parameter preset: paper (default), paper_tabulated_tq, paper_kick_3pi4 or fast.")
    parser.add_argument("-v", "--verbose", dest="verbosity", action="count", default=0,
                        help="Increase verbosity of the program.")


def build_parser():
    parser = argparse.ArgumentParser(prog="CombConductor",
                                     description="Photon number monitoring with a comb driven qubit.")
    subparsers = parser.add_subparsers(dest="command")
    subparsers.required = True

    run_parser = subparsers.add_parser("run", help="Run the experiment named in the config.")
    add_config_arguments(run_parser)

    validate_parser = subparsers.add_parser("validate", help="Validate a config and print it fully resolved.")
    add_config_arguments(validate_parser)

    acceptance_parser = subparsers.add_parser("acceptance", help="Run the acceptance criteria.")
    add_config_arguments(acceptance_parser)

    report_parser = subparsers.add_parser("report", help="Summarize finished runs.")
    report_parser.add_argument("locations", nargs="+", help="Run manifests or run output directories.")
    report_parser.add_argument("--output_dir", default="combconductor_report", help="Directory of the summary tables.")
    report_parser.add_argument("-v", "--verbose", dest="verbosity", action="count", default=0,
                               help="Increase verbosity of the program.")
    return parser


def run_command(args, acceptance=False):
    pipeline = RunPipeline(args.config_file, args.preset, args.seed, args.workers, acceptance=acceptance)
    git_version = get_git_version()
    err = False
    err_msg = None
    code = EXIT_SUCCESS

    try:
        pipeline.load()
        pipeline.validate()
        pipeline.run()
        if not pipeline.passed():
            logging.error("One or more acceptance criteria failed.")
            code = EXIT_FAILURE
    except (ConfigValidationError, SystemError) as e:
        logging.error("Run aborted before any computation: %s" % e)
        err, err_msg = True, str(e)
        code = EXIT_INVALID_CONFIG
    except BaseException as e:
        logging.error("Run failed!")
        if str(e) != "":
            logging.error("Received the following message:\n%s" % e)
        err, err_msg = True, "%s: %s" % (e.__class__.__name__, e)
        code = EXIT_FAILURE

    try:
        pipeline.publish_report(err, err_msg, git_version)
    except BaseException:
        code = code if code != EXIT_SUCCESS else EXIT_FAILURE
    finally:
        pipeline.clean_up()
    return code


def validate_command(args):
    run_config, errors = validate_config(config_file=args.config_file, preset=args.preset, seed=args.seed,
                                         workers=args.workers)
    if errors:
        for error in errors:
            logging.error("Invalid run config: %s" % error)
        return EXIT_INVALID_CONFIG
    sys.stdout.write(run_config.to_text())
    return EXIT_SUCCESS


def report_command(args):
    report = RunReport(args.locations, args.output_dir)
    try:
        report.load()
    except IntegrityError as e:
        logging.error("Report aborted: %s" % e)
        return EXIT_INCOMPLETE
    report.aggregate()
    report.write()
    if not report.is_complete():
        for location, reason in report.incomplete.items():
            logging.error("Incomplete run %s: %s" % (location, reason))
        return EXIT_INCOMPLETE
    return EXIT_SUCCESS


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_logging(args.verbosity)

    if args.command == "run":
        return run_command(args)
    if args.command == "acceptance":
        return run_command(args, acceptance=True)
    if args.command == "validate":
        return validate_command(args)
    return report_command(args)
