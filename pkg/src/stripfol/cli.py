"""Command-line front end.

Exit codes: 0 success, 1 invalid model, 2 failed verification, 3 I/O or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .fibration import TrivAtlas, build_atlas, kaplan_decomposition, verify_atlas
from .generate import FIXTURES, fixture_text
from .leafspace import build_leaf_space, export_graph, hypothesis_report
from .model import ModelError, StripModel, double_model, format_model, model_from_dict, model_to_dict, parse_model, validate_model

EXIT_OK, EXIT_INVALID, EXIT_UNVERIFIED, EXIT_IO = 0, 1, 2, 3


class InputError(Exception):
    pass


def _read(source: str) -> str:
    if source == "-":
        return sys.stdin.read()
    path = Path(source)
    if path.exists():
        try:
            return path.read_text(encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot read {source}: {exc}") from None
    if source in FIXTURES:
        return fixture_text(source)
    raise InputError(f"no such file: {source}")


def _load_model(source: str) -> StripModel:
    text = _read(source)
    try:
        if text.lstrip().startswith("{"):
            return model_from_dict(json.loads(text))
        return parse_model(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}: malformed JSON: {exc}") from None
    except ModelError as exc:
        where = f"{source}:{exc.line}" if exc.line else source
        raise InputError(f"{where}: {exc.message}") from None


def _require_valid(m: StripModel) -> None:
    report = validate_model(m)
    if not report.ok:
        raise InvalidModel(report.issues)


class InvalidModel(Exception):
    def __init__(self, issues: list[str]):
        super().__init__("; ".join(issues))
        self.issues = issues


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _positive_fraction(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _collar(text: str) -> Fraction:
    value = _positive_fraction(text)
    if value > Fraction(1, 2):
        raise argparse.ArgumentTypeError("collar must lie in (0, 1/2]")
    return value


def _grid(text: str) -> int:
    value = int(text)
    if not 3 <= value <= 1001:
        raise argparse.ArgumentTypeError("grid must lie in [3, 1001]")
    return value


# -- subcommands ------------------------------------------------------------------


def cmd_validate(args) -> tuple[int, str]:
    m = _load_model(args.input)
    report = validate_model(m)
    if args.format == "json":
        out = _dumps({"valid": report.ok, "issues": report.issues})
    else:
        out = str(report) + "\n"
    for issue in report.issues:
        print(f"invalid model: {issue}", file=sys.stderr)
    return (EXIT_OK if report.ok else EXIT_INVALID), out


def cmd_analyze(args) -> tuple[int, str]:
    m = _load_model(args.input)
    _require_valid(m)
    gY = build_leaf_space(m)
    hyp = hypothesis_report(m, gY)
    kd = kaplan_decomposition(m)
    data = hyp.to_dict()
    data["nonseparated_pairs"] = [list(p) for p in gY.pairs()]
    data["kaplan_components"] = [
        {"strips": [sid for sid, _ in c.strips], "shape": c.shape, "ends": list(c.ends)} for c in kd.components
    ]
    if args.format == "json":
        return EXIT_OK, _dumps(data)
    lines = [f"special points: {len(hyp.special)}" + (f" ({', '.join(hyp.special)})" if hyp.special else "")]
    for name in ("all_leaves_noncompact", "special_family_locally_finite", "t1", "hausdorff", "locally_euclidean"):
        check = data[name]
        lines.append(f"{name} = {str(check['holds']).lower()}: {check['certificate']}")
    for v, w in gY.pairs():
        lines.append(f"non-separated: {v} {w}")
    lines.append(f"kaplan components: {len(kd.components)}")
    return EXIT_OK, "\n".join(lines) + "\n"


def cmd_leafspace(args) -> tuple[int, str]:
    m = _load_model(args.input)
    _require_valid(m)
    return EXIT_OK, export_graph(build_leaf_space(m), args.format)


def cmd_trivialize(args) -> tuple[int, str]:
    m = _load_model(args.input)
    _require_valid(m)
    atlas = build_atlas(m, spacing=args.spacing, collar=args.collar)
    return EXIT_OK, _dumps(atlas.to_dict())


def cmd_verify(args) -> tuple[int, str]:
    text = _read(args.input)
    try:
        atlas = TrivAtlas.from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.input}: malformed JSON: {exc}") from None
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise InputError(f"{args.input}: not an atlas document: {exc}") from None
    _require_valid(atlas.model)
    report = verify_atlas(atlas, grid=args.grid)
    out = report.to_csv() if args.format == "csv" else report.to_json()
    return (EXIT_OK if report.passed else EXIT_UNVERIFIED), out


def cmd_double(args) -> tuple[int, str]:
    m = _load_model(args.input)
    _require_valid(m)
    doubled, _ = double_model(m)
    if args.format == "json":
        return EXIT_OK, _dumps(model_to_dict(doubled))
    return EXIT_OK, format_model(doubled)


def cmd_export(args) -> tuple[int, str]:
    m = _load_model(args.input)
    if args.format == "json":
        return EXIT_OK, _dumps(model_to_dict(m))
    return EXIT_OK, format_model(m)


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the I/O-or-parse code, keeping 2 for failed verification."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_IO, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stripfol", description="Leaf spaces and trivializing atlases of striped foliated surfaces.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name: str, func, help_text: str, formats: tuple[str, ...]):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("input", help="model file, fixture name (M0-M4) or - for stdin")
        p.add_argument("--format", choices=formats, default=formats[0])
        p.add_argument("-o", "--output", help="write to this file instead of stdout")
        p.set_defaults(func=func)
        return p

    add("validate", cmd_validate, "check the structural invariants of a model", ("text", "json"))
    add("analyze", cmd_analyze, "leaf-space hypotheses, special points and strip components", ("text", "json"))
    add("leafspace", cmd_leafspace, "export the leaf-space graph", ("json", "dot"))
    p = add("trivialize", cmd_trivialize, "build a trivializing atlas (JSON)", ("json",))
    p.add_argument("--spacing", type=_positive_fraction, default=Fraction(1), help="tower spacing M (default 1)")
    p.add_argument("--collar", type=_collar, default=None, help="collar depth in (0, 1/2] (default: model collar)")
    p = add("verify", cmd_verify, "grid-verify an atlas produced by trivialize", ("json", "csv"))
    p.add_argument("--grid", type=_grid, default=101, help="grid resolution per axis (default 101)")
    add("double", cmd_double, "double a model along its boundary", ("model", "json"))
    add("export", cmd_export, "convert between the model text format and JSON", ("json", "model"))
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code, out = args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InvalidModel as exc:
        for issue in exc.issues:
            print(f"invalid model: {issue}", file=sys.stderr)
        return EXIT_INVALID
    if args.output:
        try:
            Path(args.output).write_text(out, encoding="utf-8")
        except OSError as exc:
            print(f"error: cannot write {args.output}: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        sys.stdout.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
