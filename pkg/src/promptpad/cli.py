"""Command line: serve, simulate, replay."""

from __future__ import annotations

import argparse
import json
import sys

from .config import Config


def cmd_serve(args) -> int:
    import uvicorn

    from .genai import make_oracle
    from .server.app import create_app
    from .server.service import Hub

    cfg = Config.load(args.config)
    oracle = make_oracle(cfg.oracle, max_concurrent=cfg.gen_concurrency)
    hub = Hub(
        oracle,
        data_dir=cfg.data_dir,
        fsync_every=cfg.fsync_every,
        exec_timeout_ms=cfg.exec_timeout_ms,
    )
    app = create_app(hub, ui_dir=cfg.ui_dir or None)
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="info")
    return 0


def cmd_simulate(args) -> int:
    from .simulator import load_script, render_report, run_script

    script = load_script(args.script)
    report = run_script(script, seed=args.seed)
    rendered = render_report(report)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(rendered + "\n")
    for a in report["assertions"]:
        status = "PASS" if a["ok"] else "FAIL"
        detail = f"  ({a['detail']})" if a["detail"] else ""
        print(f"{status} step {a['step']}: {a['kind']}{detail}")
    print(f"ops={report['opCount']} converged={report['converged']}")
    print("events: " + json.dumps(report["eventCounts"]))
    return 0 if report["allAssertionsPassed"] and report["converged"] else 1


def cmd_replay(args) -> int:
    from .ops import SyncOp
    from .persist import EventLog
    from .replica import Replica

    payloads, good_end = EventLog.replay(args.log)
    replica = Replica("replay", "replay")
    ops = [SyncOp.from_obj(json.loads(p.decode("utf-8"))) for p in payloads]
    replica.integrate(ops)
    print(f"records={len(payloads)} intactBytes={good_end}")
    print(f"digest={replica.state.digest()}")
    print(replica.state.snapshot_text())
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="promptpad",
        description="Collaborative natural-language programming server",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the document server")
    p.add_argument("--config", default=None, help="YAML config file")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("simulate", help="run a scripted multi-client session")
    p.add_argument("--script", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", default=None, help="write the JSON report here")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("replay", help="refold an op log and print the snapshot")
    p.add_argument("--log", required=True)
    p.set_defaults(fn=cmd_replay)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
