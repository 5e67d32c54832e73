"""Headless command-line client of the application facade.

State persists between invocations through a session project file
(``--session``, ``$VAULT_SESSION``, or ``~/.local/state/vault/session.mvproj``):
every command that touches data opens the session first and saves it back
on success, so ``vault load toy.csv`` followed by ``vault info`` sees the
loaded dataset.

Long-running plugins print one ``PROGRESS <instanceId> <iter>/<total>``
line per update when ``--wait`` is given. Exit code 0 on success, 1 on
any framework error (message on stderr), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from vault.app import Application
from vault.errors import VaultError
from vault.service.protocol import DEFAULT_PORT, ServiceConfig


def default_session_path() -> Path:
    env = os.environ.get("VAULT_SESSION")
    if env:
        return Path(env)
    return Path.home() / ".local" / "state" / "vault" / "session.mvproj"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vault",
        description="Headless loading, analysis, and project manipulation.")
    parser.add_argument("--session", type=Path, default=None,
                        help="session project file (default: $VAULT_SESSION or "
                             "~/.local/state/vault/session.mvproj)")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="serve the web frontend and wire protocol")
    serve.add_argument("--bind", default="127.0.0.1")
    serve.add_argument("--port", type=int,
                       default=int(os.environ.get("VAULT_PORT", DEFAULT_PORT)))
    serve.add_argument("--static-dir", type=Path, default=None,
                       help="directory with the built frontend bundle")

    load = sub.add_parser("load", help="load a file into the session")
    load.add_argument("path", type=Path)
    kind = load.add_mutually_exclusive_group()
    kind.add_argument("--csv", action="store_true")
    kind.add_argument("--bin", action="store_true")
    kind.add_argument("--stack", action="store_true",
                      help="treat PATH as a folder holding a grayscale image stack")
    load.add_argument("--subsample", type=int, default=1, metavar="F",
                      help="block-mean pooling factor for image stacks")
    load.add_argument("--name", default=None)
    load.add_argument("--delimiter", default=",")
    load.add_argument("--no-header", action="store_true")

    run = sub.add_parser("run", help="run an analytics/transformation plugin")
    run.add_argument("plugin_id")
    run.add_argument("--input", required=True, help="dataset name or guid")
    run.add_argument("--param", action="append", default=[], metavar="K=V")
    run.add_argument("--wait", action="store_true",
                     help="print PROGRESS lines while the computation runs")

    save = sub.add_parser("save", help="save the session to a project archive")
    save.add_argument("path", type=Path)

    open_ = sub.add_parser("open", help="open a project archive as the session")
    open_.add_argument("path", type=Path)

    sub.add_parser("info", help="print the dataset hierarchy")

    export = sub.add_parser("export", help="export a dataset")
    export.add_argument("dataset", help="dataset name or guid")
    export.add_argument("--csv", type=Path, required=True, metavar="PATH")
    return parser


def _open_session(app: Application, session: Path) -> None:
    if session.exists():
        app.load_project(session)


def _save_session(app: Application, session: Path) -> None:
    session.parent.mkdir(parents=True, exist_ok=True)
    app.save_project(session)


def _kind_for(args) -> str:
    if args.csv:
        return "csv"
    if args.bin:
        return "bin"
    if args.stack:
        return "stack"
    if args.path.is_dir():
        return "stack"
    return {".csv": "csv", ".bin": "bin"}.get(args.path.suffix.lower(), "csv")


def cmd_load(app: Application, args) -> int:
    kind = _kind_for(args)
    if kind == "csv":
        dataset = app.load_file(args.path, "csv", delimiter=args.delimiter,
                                has_header=not args.no_header, name=args.name)
        created = [dataset]
    elif kind == "bin":
        created = [app.load_file(args.path, "bin", name=args.name)]
    else:
        points_id, image_id = app.load_file(args.path, "stack",
                                            subsample=args.subsample, name=args.name)
        created = [points_id, image_id]
    for dataset in created:
        rec = app.data.record(dataset)
        print(f"loaded {rec.name} [{dataset}]")
    return 0


def cmd_run(app: Application, args) -> int:
    dataset = app.resolve_dataset(args.input)
    instance_id = app.submit(app.registry.instantiate, args.plugin_id, [dataset])
    for pair in args.param:
        if "=" not in pair:
            raise VaultError(f"--param expects K=V, got {pair!r}")
        key, value = pair.split("=", 1)
        app.set_instance_param(instance_id, key, value)
    if args.wait:
        app.registry.instance(instance_id).progress_listeners.append(
            lambda done, total: print(f"PROGRESS {instance_id} {done}/{total}", flush=True))
    state = app.registry.run_to_completion(instance_id)
    if state.value == "Failed":
        raise VaultError(f"{args.plugin_id} failed: "
                         f"{app.registry.instance(instance_id).last_error}")
    output = app.registry.instance(instance_id).output_dataset
    if output:
        print(f"finished {args.plugin_id}: output "
              f"{app.data.record(output).name} [{output}]")
    return 0


def cmd_info(app: Application) -> int:
    nodes = app.hierarchy_snapshot()
    by_parent: dict = {}
    for node in nodes:
        by_parent.setdefault(node["parentGuid"], []).append(node)

    def describe(node) -> str:
        if node["kind"] == "points":
            shape = f"{node['effectiveCount']}x{node['numDims']}"
        elif node["kind"] == "image":
            shape = f"{node['width']}x{node['height']} px"
        else:
            shape = f"{len(node['clusters'])} clusters"
        return f"{node['name']} ({node['kind']}, {shape}) [{node['guid']}]"

    def walk(parent, depth):
        for node in by_parent.get(parent, []):
            print("  " * depth + describe(node))
            walk(node["guid"], depth + 1)

    walk(None, 0)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    session = args.session or default_session_path()
    app = Application()
    try:
        if args.command == "serve":
            _open_session(app, session)
            from vault.service.server import serve
            serve(app, ServiceConfig(bind_address=args.bind, port=args.port,
                                     static_dir=args.static_dir))
            return 0
        if args.command == "load":
            _open_session(app, session)
            code = cmd_load(app, args)
            _save_session(app, session)
            return code
        if args.command == "run":
            _open_session(app, session)
            code = cmd_run(app, args)
            _save_session(app, session)
            return code
        if args.command == "save":
            _open_session(app, session)
            app.save_project(args.path)
            print(f"saved {args.path}")
            return 0
        if args.command == "open":
            report = app.load_project(args.path)
            for plugin_id in report.skipped_plugins:
                print(f"warning: skipped unknown plugin {plugin_id}", file=sys.stderr)
            _save_session(app, session)
            print(f"opened {args.path}")
            return 0
        if args.command == "info":
            _open_session(app, session)
            return cmd_info(app)
        if args.command == "export":
            _open_session(app, session)
            app.export_csv(args.dataset, args.csv)
            print(f"exported {args.dataset} -> {args.csv}")
            return 0
        raise VaultError(f"unknown command {args.command!r}")
    except VaultError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
