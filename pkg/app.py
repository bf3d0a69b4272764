import argparse
import logging
import os
import sys

from database.record_db import RecordDB
from database.run_db import RunDB
from mechanics.errors import EXIT_CODES, ShellError
from scenarios.config import apply_overrides, load_config
from scenarios.output import read_rows
from scenarios.report import write_convergence_pdf
from scenarios.runner import convergence_study, point_drive, run_case, sweep

logger = logging.getLogger("viscoshell")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class Console:
    """Dispatches the subcommands and keeps the run registry in ``<out>/runs.db``."""

    def __init__(self, args):
        self.args = args
        self.out = args.out
        os.makedirs(self.out, exist_ok=True)
        db_path = os.path.join(self.out, "runs.db")
        self.runs = RunDB(db_path)
        self.records = RecordDB(db_path)

    def config(self):
        config = load_config(self.args.config)
        return apply_overrides(config, dt=self.args.dt, t_end=self.args.tend, threads=self.args.threads)

    def execute(self):
        handler = {
            "run": self.run,
            "point": self.point,
            "converge": self.converge,
            "sweep": self.sweep,
            "report": self.report,
        }[self.args.command]
        return handler()

    def _registered(self, command, action):
        config = self.config()
        run_id = self.runs.insert(
            config.name, command, config.model_dump_json(), config.time.dt, config.time.t_end, self.out
        )
        try:
            summary = action(config)
        except ShellError:
            self.runs.update_status(run_id, "failed")
            raise
        self.runs.update_status(run_id, "done")
        return run_id, summary

    def run(self):
        run_id, summary = self._registered("run", lambda c: run_case(c, self.out))
        self.records.insert_series(run_id, summary["series"])
        logger.info("%s finished: %d rows in %s", summary["name"], summary["rows"], self.out)

    def point(self):
        run_id, summary = self._registered("point", lambda c: point_drive(c, self.out))
        self.records.insert_series(run_id, summary["series"])
        logger.info("%s point drive finished: %d rows", summary["name"], summary["rows"])

    def converge(self):
        run_id, summary = self._registered(
            "converge", lambda c: convergence_study(c, self.out, c.solver.threads)
        )
        result = summary["convergence"]
        for row in result.rows:
            self.records.insert_convergence(
                run_id, row["sweep"], row["quantity"], row["parameter"], row["value"], row["error"]
            )
        for (s, q), order in result.orders.items():
            logger.info("%s against %s: fitted order %.4f", q, s, order)
        if self.args.pdf:
            path = os.path.join(self.out, f"{summary['name']}_convergence.pdf")
            write_convergence_pdf(path, summary["name"], result.rows, result.orders)

    def sweep(self):
        run_id, summary = self._registered("sweep", lambda c: sweep(c, self.out, c.solver.threads))
        self.records.insert_series(run_id, summary["series"])
        logger.info("%s sweep finished: %d rows", summary["name"], summary["rows"])

    def report(self):
        name = self.config().name
        rows = read_rows(os.path.join(self.out, f"{name}_convergence.csv"))
        orders = {
            (r["sweep"], r["quantity"]): r["order"]
            for r in read_rows(os.path.join(self.out, f"{name}_orders.csv"))
        }
        for row in rows:
            if row.get("local_order") == "":
                row["local_order"] = None
        write_convergence_pdf(os.path.join(self.out, f"{name}_convergence.pdf"), name, rows, orders)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="viscoshell", description="Viscoelastic Kirchhoff-Love shell simulations and verification."
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("run", "run a scenario"),
        ("point", "drive a single material point"),
        ("converge", "convergence study against a closed-form solution"),
        ("sweep", "frequency or parameter sweep"),
        ("report", "PDF report of an existing convergence study"),
    ):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", required=True, help="scenario JSON file")
        cmd.add_argument("--out", default="out", help="output directory")
        cmd.add_argument("--dt", type=float, default=None, help="override the time step")
        cmd.add_argument("--tend", type=float, default=None, help="override the end time")
        cmd.add_argument("--threads", type=int, default=None, help="worker threads for assembly, studies and sweeps")
        if name == "converge":
            cmd.add_argument("--pdf", action="store_true", help="also write a PDF report")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)
    try:
        Console(args).execute()
    except ShellError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_CODES.get(exc.category, 1)
    except OSError as exc:
        logger.error("%s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
