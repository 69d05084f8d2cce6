"""Command-line front end covering the whole workflow:

build a vocabulary (``vocab ...``), load and maintain objects
(``data ...``), browse (``view ...``), produce documents (``report ...``),
and run the HTTP service (``serve``).

Exit codes: 0 success, 1 domain error (one ``code: message`` line on
stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from ..errors import BindFailure, EngineError, KindMismatch
from ..ingest import ImportMapping, inspect, run_import
from ..recognition import match_report
from ..reports import export_store, list_report, object_report
from ..store import Store
from ..values import Kind, parse_text
from .. import vocabulary as vocab_mod
from .service import DATA_DIR_ENV, OBJECTS_FILE, VOCABULARY_FILE, create_app

DEFAULT_PORT = 8750


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except EngineError as exc:
        print(f"{exc.code}: {exc.message}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="panoptica",
        description="Schema-driven navigational data engine.",
    )
    parser.add_argument(
        "--data-dir",
        default=None,
        help=f"data directory holding {VOCABULARY_FILE} and {OBJECTS_FILE} "
        f"(default: ${DATA_DIR_ENV} or the working directory)",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    # vocab ------------------------------------------------------------------
    vocab = commands.add_parser("vocab", help="build and compile vocabularies").add_subparsers(
        dest="subcommand", required=True
    )

    p = vocab.add_parser("new", help="create an empty vocabulary document")
    p.add_argument("file")
    p.add_argument("name")
    p.set_defaults(handler=cmd_vocab_new)

    p = vocab.add_parser("add-class", help="add a class")
    p.add_argument("file")
    p.add_argument("class_name", metavar="class")
    p.add_argument("--intermediate", action="store_true")
    p.set_defaults(handler=cmd_vocab_add_class)

    p = vocab.add_parser("add-attr", help="add an attribute to a class")
    p.add_argument("file")
    p.add_argument("class_name", metavar="class")
    p.add_argument("name")
    p.add_argument("kind", choices=[k.value for k in Kind])
    p.add_argument("--target", help="target class (link attributes)")
    p.add_argument("--required", action="store_true")
    p.set_defaults(handler=cmd_vocab_add_attr)

    p = vocab.add_parser("add-rel", help="add an intermediate class realizing a relationship")
    p.add_argument("file")
    p.add_argument("name")
    p.add_argument("participants", nargs="+", metavar="class")
    p.set_defaults(handler=cmd_vocab_add_rel)

    p = vocab.add_parser("validate", help="check well-formedness")
    p.add_argument("file")
    p.set_defaults(handler=cmd_vocab_validate)

    p = vocab.add_parser("compile-ddl", help="emit SQL DDL for the vocabulary")
    p.add_argument("file")
    p.add_argument("-o", "--output", help="write to a file instead of stdout")
    p.set_defaults(handler=cmd_vocab_compile)

    # data -------------------------------------------------------------------
    data = commands.add_parser("data", help="load and maintain objects").add_subparsers(
        dest="subcommand", required=True
    )

    p = data.add_parser("insert", help="insert one object")
    p.add_argument("class_name", metavar="class")
    p.add_argument(
        "--set",
        dest="assignments",
        action="append",
        default=[],
        metavar="ATTR=VALUE",
        help="attribute value; repeatable; link values are integer ids",
    )
    p.set_defaults(handler=cmd_data_insert)

    p = data.add_parser("inspect", help="recognize the structure of a delimited source")
    p.add_argument("source")
    p.set_defaults(handler=cmd_data_inspect)

    p = data.add_parser("import", help="bulk-load a delimited source")
    p.add_argument("source")
    p.add_argument("--class", dest="class_name", help="target class (default: best match)")
    p.add_argument(
        "--map",
        dest="mappings",
        action="append",
        default=[],
        metavar="COLUMN=ATTR",
        help="explicit column mapping; repeatable (default: proposed mapping)",
    )
    p.add_argument(
        "--resolve",
        dest="resolutions",
        action="append",
        default=[],
        metavar="ATTR=by_label|by_id",
        help="link resolution per attribute",
    )
    p.add_argument("--policy", choices=["reject_row", "create_stub"], default="reject_row")
    p.set_defaults(handler=cmd_data_import)

    p = data.add_parser("delete", help="delete an object")
    p.add_argument("id", type=int)
    p.add_argument("--detach", action="store_true", help="clear optional incoming links first")
    p.set_defaults(handler=cmd_data_delete)

    # view -------------------------------------------------------------------
    view = commands.add_parser("view", help="browse the information space").add_subparsers(
        dest="subcommand", required=True
    )

    p = view.add_parser("focus", help="show an object with its full context")
    p.add_argument("id", type=int)
    p.set_defaults(handler=cmd_view_focus)

    p = view.add_parser("list", help="list the objects of a class")
    p.add_argument("class_name", metavar="class")
    p.set_defaults(handler=cmd_view_list)

    # report -----------------------------------------------------------------
    report = commands.add_parser("report", help="generate documents").add_subparsers(
        dest="subcommand", required=True
    )

    p = report.add_parser("object", help="object report (focus + context)")
    p.add_argument("id", type=int)
    p.add_argument("--format", choices=["txt", "html", "xml"], default="txt")
    p.add_argument("-o", "--output")
    p.set_defaults(handler=cmd_report_object)

    p = report.add_parser("list", help="list report for a class")
    p.add_argument("class_name", metavar="class")
    p.add_argument("--format", choices=["txt", "csv", "html", "xml"], default="txt")
    p.add_argument("--columns", help="comma-separated attribute names (default: all)")
    p.add_argument("-o", "--output")
    p.set_defaults(handler=cmd_report_list)

    p = report.add_parser("export", help="export vocabulary and objects")
    p.add_argument("--format", choices=["sql", "xml"], default="sql")
    p.add_argument("-o", "--output")
    p.set_defaults(handler=cmd_report_export)

    # serve ------------------------------------------------------------------
    p = commands.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.add_argument("--session-ttl", type=float, default=3600.0, help="idle session expiry, seconds")
    p.set_defaults(handler=cmd_serve)

    return parser


# --- helpers ------------------------------------------------------------------


def data_dir(args: argparse.Namespace) -> Path:
    if args.data_dir is not None:
        return Path(args.data_dir)
    return Path(os.environ.get(DATA_DIR_ENV, "."))


def open_store(args: argparse.Namespace) -> Store:
    directory = data_dir(args)
    vocabulary = vocab_mod.load(directory / VOCABULARY_FILE)
    objects_path = directory / OBJECTS_FILE
    if objects_path.exists():
        return Store.load(objects_path, vocabulary)
    return Store(vocabulary)


def save_store(args: argparse.Namespace, store: Store) -> None:
    store.save(data_dir(args) / OBJECTS_FILE)


def parse_assignment(text: str) -> tuple[str, str]:
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise ValueError(f"expected NAME=VALUE, got {text!r}")
    return name, value


def write_output(document: str, output: str | None) -> None:
    if output:
        Path(output).write_text(document, encoding="utf-8")
    else:
        sys.stdout.write(document)


# --- vocab commands ---------------------------------------------------------


def cmd_vocab_new(args: argparse.Namespace) -> int:
    vocab_mod.save(vocab_mod.Vocabulary(name=args.name), args.file)
    print(f"created {args.file}")
    return 0


def cmd_vocab_add_class(args: argparse.Namespace) -> int:
    vocabulary = vocab_mod.load(args.file)
    vocabulary = vocab_mod.create_class(vocabulary, args.class_name, args.intermediate)
    vocab_mod.save(vocabulary, args.file)
    print(f"added class {args.class_name}")
    return 0


def cmd_vocab_add_attr(args: argparse.Namespace) -> int:
    vocabulary = vocab_mod.load(args.file)
    attr = vocab_mod.AttributeDef(
        name=args.name, kind=Kind(args.kind), target_class=args.target, required=args.required
    )
    vocabulary = vocab_mod.add_attribute(vocabulary, args.class_name, attr)
    vocab_mod.save(vocabulary, args.file)
    print(f"added {args.class_name}.{args.name}")
    return 0


def cmd_vocab_add_rel(args: argparse.Namespace) -> int:
    vocabulary = vocab_mod.load(args.file)
    vocabulary = vocab_mod.create_relationship(vocabulary, args.name, args.participants)
    vocab_mod.save(vocabulary, args.file)
    print(f"added relationship {args.name} ({len(args.participants)} participants)")
    return 0


def cmd_vocab_validate(args: argparse.Namespace) -> int:
    diagnostics = vocab_mod.validate(vocab_mod.load(args.file))
    if not diagnostics:
        print("OK")
        return 0
    for diagnostic in diagnostics:
        print(str(diagnostic), file=sys.stderr)
    return 1


def cmd_vocab_compile(args: argparse.Namespace) -> int:
    write_output(vocab_mod.compile_ddl(vocab_mod.load(args.file)), args.output)
    return 0


# --- data commands -----------------------------------------------------------


def cmd_data_insert(args: argparse.Namespace) -> int:
    store = open_store(args)
    cls = store.vocabulary.require_class(args.class_name)
    values = {}
    for assignment in args.assignments:
        name, raw = parse_assignment(assignment)
        attr = cls.attribute(name)
        if attr is None:
            values[name] = raw  # let the store report the unknown attribute
            continue
        try:
            values[name] = parse_text(attr.kind, raw)
        except ValueError as exc:
            raise KindMismatch(f"{args.class_name!r}.{name}: {exc}") from None
    object_id = store.insert(args.class_name, values)
    save_store(args, store)
    print(object_id)
    return 0


def cmd_data_inspect(args: argparse.Namespace) -> int:
    store = open_store(args)
    text = Path(args.source).read_text(encoding="utf-8")
    result = inspect(store.vocabulary, text, store)
    for match in result.matches:
        print(match_report(match))
    print(f"delimiter: {result.delimiter!r}")
    print(f"proposed class: {result.mapping.class_name}")
    for column, attr in result.mapping.column_map.items():
        print(f"  {column} -> {attr}")
    return 0


def cmd_data_import(args: argparse.Namespace) -> int:
    store = open_store(args)
    text = Path(args.source).read_text(encoding="utf-8")
    if args.class_name and args.mappings:
        column_map = dict(parse_assignment(m) for m in args.mappings)
        mapping = ImportMapping(args.class_name, column_map)
    else:
        proposal = inspect(store.vocabulary, text, store).mapping
        class_name = args.class_name or proposal.class_name
        column_map = dict(parse_assignment(m) for m in args.mappings) or dict(proposal.column_map)
        mapping = ImportMapping(class_name, column_map, dict(proposal.link_resolution))
    resolutions = dict(parse_assignment(r) for r in args.resolutions)
    mapping = ImportMapping(
        mapping.class_name,
        mapping.column_map,
        {**mapping.link_resolution, **resolutions},
        args.policy,
    )
    report = run_import(store, mapping, text)
    save_store(args, store)
    print(json.dumps(report.to_payload(), indent=2))
    return 0


def cmd_data_delete(args: argparse.Namespace) -> int:
    store = open_store(args)
    store.delete(args.id, detach=args.detach)
    save_store(args, store)
    print(f"deleted {args.id}")
    return 0


# --- view commands ---------------------------------------------------------------


def cmd_view_focus(args: argparse.Namespace) -> int:
    store = open_store(args)
    sys.stdout.write(object_report(store, args.id, "txt"))
    return 0


def cmd_view_list(args: argparse.Namespace) -> int:
    store = open_store(args)
    for record in store.objects_of(args.class_name):
        print(f"{record.id}\t{store.label(record.id)}")
    return 0


# --- report commands ----------------------------------------------------------------


def cmd_report_object(args: argparse.Namespace) -> int:
    store = open_store(args)
    write_output(object_report(store, args.id, args.format), args.output)
    return 0


def cmd_report_list(args: argparse.Namespace) -> int:
    store = open_store(args)
    columns = [c for c in args.columns.split(",") if c] if args.columns else []
    write_output(list_report(store, args.class_name, None, columns, args.format), args.output)
    return 0


def cmd_report_export(args: argparse.Namespace) -> int:
    store = open_store(args)
    write_output(export_store(store, store.vocabulary, args.format), args.output)
    return 0


# --- serve ------------------------------------------------------------------------


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    app = create_app(data_dir(args), session_ttl=args.session_ttl)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    except OSError as exc:
        raise BindFailure(f"cannot bind {args.host}:{args.port}: {exc}") from exc
    return 0


if __name__ == "__main__":
    sys.exit(main())
