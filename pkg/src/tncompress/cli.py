"""Command-line interface.

Exit codes: 0 on success, 1 when a verification fails, 2 on input errors
(including size limits). Machine output is one ``key=value`` pair per line.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import algorithm, bounds, flow, mps, network, protocols
from .tensor import tensor_from_dict

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


@dataclass
class Report:
    """Ordered result fields plus an optional table for CSV output."""

    fields: list[tuple[str, Any]] = field(default_factory=list)
    header: list[str] | None = None
    rows: list[list[Any]] = field(default_factory=list)
    ok: bool = True

    def add(self, key: str, value: Any) -> None:
        self.fields.append((key, value))


def _machine(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, complex):
        return f"{value.real!r}{value.imag:+}j"
    if isinstance(value, (list, tuple)):
        return ",".join(_machine(v) for v in value)
    return str(value)


def _human(value: Any) -> str:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.6g}"
    if isinstance(value, complex):
        return f"{value.real:.6g}{value.imag:+.6g}j"
    if isinstance(value, (list, tuple)):
        return ", ".join(_human(v) for v in value)
    return str(value)


def render(report: Report, fmt: str) -> str:
    if fmt == "machine":
        lines = [f"{k}={_machine(v)}" for k, v in report.fields]
        if report.header:
            for i, row in enumerate(report.rows):
                lines += [f"row.{i}.{h}={_machine(v)}" for h, v in zip(report.header, row)]
        return "\n".join(lines) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if report.header:
            writer.writerow(report.header)
            writer.writerows([[_machine(v) for v in row] for row in report.rows])
        else:
            writer.writerow([k for k, _ in report.fields])
            writer.writerow([_machine(v) for _, v in report.fields])
        return buf.getvalue()
    width = max((len(k) for k, _ in report.fields), default=0)
    lines = [f"{k.replace('_', ' '):<{width}}  {_human(v)}" for k, v in report.fields]
    if report.header:
        lines.append("  ".join(report.header))
        lines += ["  ".join(_human(v) for v in row) for row in report.rows]
    return "\n".join(lines) + "\n"


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def _positive(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return value


def _load_json(path: str) -> Any:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _load_vectors(path: str) -> list[np.ndarray]:
    """Vectors stored as ``{"states": [...]}``, each a tensor record or [re, im] list."""
    record = _load_json(path)
    items = record.get("states") if isinstance(record, dict) else record
    if not isinstance(items, list) or not items:
        raise ValueError(f"{path}: expected a nonempty list of states")
    vectors = []
    for item in items:
        if isinstance(item, dict):
            vectors.append(tensor_from_dict(item).data.reshape(-1))
        else:
            vectors.append(tensor_from_dict({"shape": [len(item)], "entries": item}).data)
    return vectors


def cmd_validate(args: argparse.Namespace) -> Report:
    obj = network.load_network(args.template)
    if isinstance(obj, network.NetworkSpec):
        problems = network.validate_network(obj)
    else:
        problems = network.validate_template(obj)
    report = Report(ok=not problems)
    report.add("valid", not problems)
    report.add("violations", len(problems))
    for i, p in enumerate(problems):
        report.add(f"violation_{i}", p)
    return report


def cmd_mincut(args: argparse.Namespace) -> Report:
    obj = network.load_network(args.template)
    template = obj.template if isinstance(obj, network.NetworkSpec) else obj
    g = flow.build_flow_network(template)
    cut = flow.min_cut(g)
    report = Report()
    report.add("min_cut_bits", cut.capacity_bits)
    report.add("max_flow_bits", flow.max_flow(g))
    report.add("cut_dimension", cut.cut_dimension)
    report.add("memory_qubits", flow.memory_qubits(cut))
    report.add("source_side", sorted(cut.source_side))
    report.add("cut_edges", [a.edge for a in cut.cut_edges])
    return report


def cmd_bounds(args: argparse.Namespace) -> Report:
    report = Report(header=["case", "n", "m", "d_p", "d_c", "bits", "qubits"])
    for case in args.case.split(","):
        for n in _ints(args.n):
            for m in _ints(args.m):
                for dp in _ints(args.dp):
                    for dc in _ints(args.dc):
                        q = bounds.BoundQuery(case, n, m, dp, dc, args.extra)
                        bits, qubits = bounds.table1_bound(q)
                        report.rows.append([q.case.value, n, m, dp, dc, bits, qubits])
    if len(report.rows) == 1:
        for h, v in zip(report.header, report.rows[0]):
            report.add(h, v)
        report.header, report.rows = None, []
    else:
        report.add("rows", len(report.rows))
    return report


def cmd_mps_roundtrip(args: argparse.Namespace) -> Report:
    if args.mps:
        families = [(args.seed, mps.load_mps(args.mps))]
    else:
        families = [
            (s, mps.random_mps(args.n, args.dp, args.dc, s))
            for s in range(args.seed, args.seed + args.seeds)
        ]
    worst, worst_neg, mem_dims, qubits = 0.0, math.inf, [], []
    outside = 0
    for s, family in families:
        if family.boundary != "variable":
            raise ValueError("round trip needs a variable-boundary MPS")
        circuit = protocols.build_encoding_circuit(family)
        rng = np.random.default_rng([s, 1])
        for _ in range(args.pairs):
            left, right = mps.random_boundary(family, rng)
            psi = mps.eval_statevector(family, left, right)
            back = protocols.decode(protocols.encode(psi, circuit), circuit)
            worst = max(worst, float(np.linalg.norm(back - psi) / np.linalg.norm(psi)))
            x = rng.standard_normal(psi.shape) + 1j * rng.standard_normal(psi.shape)
            back = protocols.decode(protocols.encode(x, circuit), circuit)
            res = float(np.linalg.norm(back - x) / np.linalg.norm(x))
            worst_neg = min(worst_neg, res)
            outside += res > 1e-3
        mem_dims.append(circuit.memory_dim)
        qubits.append(circuit.memory_qubits)
    bond = max(f.max_bond for _, f in families)
    ok = worst <= args.tol and max(mem_dims) <= bond * bond
    report = Report(ok=ok)
    report.add("result", "PASS" if ok else "FAIL")
    report.add("families", len(families))
    report.add("pairs_per_family", args.pairs)
    report.add("max_residual", worst)
    report.add("tolerance", args.tol)
    report.add("max_memory_dim", max(mem_dims))
    report.add("memory_qubits", max(qubits))
    report.add("bond_squared", bond * bond)
    report.add("negative_control_min_residual", worst_neg)
    report.add("negative_control_fraction_above_1e-3", outside / (len(families) * args.pairs))
    return report


def cmd_local_compress(args: argparse.Namespace) -> Report:
    if args.template:
        net = network.load_network(args.template)
        if not isinstance(net, network.NetworkSpec):
            raise ValueError("local-compress needs a network file with tensors")
        if not args.physical:
            raise ValueError("--physical edge list is required with --template")
        physical = args.physical.split(",")
    else:
        family = mps.random_mps(args.n + args.nprime, args.dp, args.dc, args.seed)
        net = mps.mps_network(family)
        physical = [f"p{k:03d}" for k in range(1, args.n + 1)]
    v = protocols.local_support_isometry(net, physical)
    op = network.evaluate_operator(net)
    out_ids = [e.id for e in op.out_edges]
    positions = [out_ids.index(e) for e in physical]
    rng = np.random.default_rng([args.seed, 2])
    worst = 0.0
    for _ in range(args.pairs):
        x = rng.standard_normal(op.matrix.shape[1]) + 1j * rng.standard_normal(op.matrix.shape[1])
        psi = (op.matrix.data @ x).reshape(op.out_dims)
        fixed = protocols.apply_local_projector(v, psi, positions)
        worst = max(worst, float(np.linalg.norm(fixed - psi) / np.linalg.norm(psi)))
    env = [e for e in out_ids if e not in physical]
    bound = protocols.local_memory_bound(net.template, env)
    qubits = (v.support_rank - 1).bit_length()
    ok = worst <= args.tol and qubits <= bound
    report = Report(ok=ok)
    report.add("result", "PASS" if ok else "FAIL")
    report.add("support_rank", v.support_rank)
    report.add("memory_qubits", qubits)
    report.add("flow_bound_qubits", bound)
    report.add("max_residual", worst)
    report.add("tolerance", args.tol)
    return report


def cmd_gap(args: argparse.Namespace) -> Report:
    rep = algorithm.gap_report(args.r)
    ok = rep.block_difference <= args.tol
    report = Report(ok=ok)
    report.add("r", rep.r)
    report.add("closed_form", rep.closed_form)
    report.add("numeric", rep.block_gap)
    report.add("difference", rep.block_difference)
    report.add("literal_gap", rep.literal_gap)
    report.add("literal_difference", rep.literal_difference)
    report.add("literal_mismatch", rep.literal_mismatch)
    if args.format == "csv":
        spectrum = algorithm.channel_spectrum(algorithm.fiducial_family(args.r))
        report.header = ["index", "real", "imag", "modulus"]
        report.rows = [
            [i, float(z.real), float(z.imag), float(abs(z))]
            for i, z in enumerate(spectrum.eigenvalues)
        ]
    return report


def cmd_gram(args: argparse.Namespace) -> Report:
    f = algorithm.FiducialSet.from_states(_load_vectors(args.states))
    g = algorithm.w_factor(algorithm.gram_matrix(f, args.tol))
    defect = float(np.linalg.norm(g.w.conj().T @ g.w - g.gram))
    ok = defect <= 1e-10 * float(np.linalg.norm(g.gram))
    report = Report(ok=ok)
    report.add("m", f.m)
    report.add("dim", f.dim)
    report.add("rank", g.rank)
    report.add("memory_qubits", (g.rank - 1).bit_length() if g.rank else 0)
    report.add("factor_defect", defect)
    for j, row in enumerate(g.gram):
        report.add(f"gram_{j}", [complex(z) for z in row])
    for j, row in enumerate(g.w):
        report.add(f"w_{j}", [complex(z) for z in row])
    return report


def cmd_rank_vs_cut(args: argparse.Namespace) -> Report:
    obj = network.load_network(args.template)
    template = obj.template if isinstance(obj, network.NetworkSpec) else obj
    seeds = list(range(args.seed, args.seed + args.seeds))
    rep = flow.log3_bound_check(template, seeds)
    ok = rep.rank_below_cut and rep.within_log3
    report = Report(ok=ok)
    report.add("min_cut_bits", rep.min_cut_bits)
    report.add("rank_bits", list(rep.rank_bits))
    report.add("max_rank_bits", rep.max_rank_bits)
    report.add("ratio", rep.ratio)
    report.add("rank_below_cut", rep.rank_below_cut)
    report.add("common_base", rep.common_base if rep.common_base is not None else "none")
    report.add(
        "ceil_equality", "n/a" if rep.ceil_equality is None else rep.ceil_equality
    )
    report.add("within_log3", rep.within_log3)
    return report


def cmd_frame(args: argparse.Namespace) -> Report:
    cases = []
    if args.states:
        if not args.psi:
            raise ValueError("--psi is required with --states")
        cases.append((_load_vectors(args.states), _load_vectors(args.psi)[0]))
    else:
        rng = np.random.default_rng(args.seed)
        if args.dim is None or args.s is None:
            raise ValueError("random mode needs --dim and --s")
        for _ in range(args.trials):
            sig = rng.standard_normal((args.s, args.dim)) + 1j * rng.standard_normal((args.s, args.dim))
            sig /= np.linalg.norm(sig, axis=1, keepdims=True)
            psi = rng.standard_normal(args.dim) + 1j * rng.standard_normal(args.dim)
            cases.append((sig, psi / np.linalg.norm(psi)))
    results = [algorithm.frame_decompose(sig, psi) for sig, psi in cases]
    worst = max(r.residual for r in results)
    guaranteed = sum(r.guaranteed_bound_holds for r in results)
    stated = sum(r.stated_bound_holds for r in results)
    ok = worst <= args.tol and guaranteed == len(results)
    report = Report(ok=ok)
    report.add("trials", len(results))
    report.add("max_residual", worst)
    report.add("min_success_probability", min(r.success_probability for r in results))
    report.add("guaranteed_bound_holds", guaranteed)
    report.add("stated_bound_holds", stated)
    if len(results) == 1:
        report.add("coefficients", [complex(c) for c in results[0].coefficients])
        report.add("success_probability", results[0].success_probability)
        report.add("lambda_min", results[0].lambda_min)
    return report


def cmd_emulate_cost(args: argparse.Namespace) -> Report:
    gap = args.gap if args.gap is not None else algorithm.gap_closed_form(args.r)
    report = Report()
    report.add("r", args.r)
    report.add("eps", args.eps)
    report.add("gap", gap)
    report.add("estimate", algorithm.emulator_sample_estimate(args.r, args.eps, gap))
    report.add("note", "scaling only, unknown constant set to 1")
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tncompress", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("human", "csv", "machine"), default="human")
    common.add_argument("--out", help="write the report here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check a template or network file")
    p.add_argument("--template", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("mincut", parents=[common], help="min-cut memory bound of a template")
    p.add_argument("--template", required=True)
    p.set_defaults(func=cmd_mincut)

    p = sub.add_parser("bounds", parents=[common], help="closed-form bounds over a grid")
    p.add_argument("--case", required=True, help="comma-separated cases")
    p.add_argument("--n", default="1")
    p.add_argument("--m", default="1")
    p.add_argument("--dp", default="2")
    p.add_argument("--dc", default="2")
    p.add_argument("--extra", type=float, default=0.0)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("mps-roundtrip", parents=[common], help="pairwise protocol round trip")
    p.add_argument("--mps")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--dp", type=int, default=2)
    p.add_argument("--dc", type=int, default=2)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--pairs", type=int, default=20)
    p.add_argument("--tol", type=_positive, default=1e-9)
    p.set_defaults(func=cmd_mps_roundtrip)

    p = sub.add_parser("local-compress", parents=[common], help="subsystem compression check")
    p.add_argument("--template", help="network file; default is a random MPS split")
    p.add_argument("--physical", help="comma-separated output edges kept locally")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--nprime", type=int, default=2)
    p.add_argument("--dp", type=int, default=2)
    p.add_argument("--dc", type=int, default=2)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--pairs", type=int, default=20)
    p.add_argument("--tol", type=_positive, default=1e-10)
    p.set_defaults(func=cmd_local_compress)

    p = sub.add_parser("gap", parents=[common], help="reflection channel gap")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--tol", type=_positive, default=1e-9)
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("gram", parents=[common], help="Gram matrix, rank and factor")
    p.add_argument("--states", required=True)
    p.add_argument("--tol", type=_positive, default=1e-10)
    p.set_defaults(func=cmd_gram)

    p = sub.add_parser("rank-vs-cut", parents=[common], help="random ranks against the min-cut")
    p.add_argument("--template", required=True)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_rank_vs_cut)

    p = sub.add_parser("frame", parents=[common], help="frame expansion and success probability")
    p.add_argument("--states")
    p.add_argument("--psi")
    p.add_argument("--dim", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--tol", type=_positive, default=1e-9)
    p.set_defaults(func=cmd_frame)

    p = sub.add_parser("emulate-cost", parents=[common], help="emulator sample-count scaling")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--gap", type=float)
    p.set_defaults(func=cmd_emulate_cost)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.func(args)
    except (ValueError, KeyError, OSError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = render(report, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if report.ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
