"""Command line front end: run analyses over a JSON document of connections."""
import argparse
from concurrent.futures import ThreadPoolExecutor
import os
import sys

from . import linalg as la
from .connection import (Connection, Family, LinearData, check_integrability,
                         check_nilpotent_residues, residues)
from .document import (connection_to_json, constant_to_json, dumps, linear_data_to_json,
                       matrix_to_json, parse_document)
from .errors import DocumentError, LogConnError
from .homological import (HorizontalMorphism, de_rham_cohomology, ext1, ga_rep,
                          homomorphism_law_holds, horizontal_sections, kernel_cokernel,
                          lift_rank1, nilpotent_log, pushforward_log_point,
                          u_bicomplex_cohomology)
from .normal_form import (expand_from_linear_data, gauge_normal_form, nilpotent_trigonalize,
                          reduce_with_gauge)
from .connection import conjugate, restrict
from .series import Derivation

COMMANDS = ("check", "normal-form", "reduce", "expand", "kernel-cokernel", "sections",
            "cohomology", "ext1", "bicomplex-verify", "lift-rank1", "push-forward", "ga-rep")


class JobError(LogConnError):
    pass


def _get(doc, args, key, kind):
    name = args.get(key)
    if name is None:
        raise JobError(f"missing argument {key!r}")
    obj = doc.objects.get(name)
    if not isinstance(obj, kind):
        raise JobError(f"{name!r} is not a {kind.__name__}")
    return obj


def _job_check(doc, args):
    C = _get(doc, args, "connection", Connection)
    integ = check_integrability(C)
    certs = {"integrable": integ.passed, "degree_checked": integ.degree}
    if not integ.passed:
        certs["failing_pair"] = list(integ.pair)
        certs["residual"] = matrix_to_json(integ.residual)
        return "fail", certs, {}
    nil = check_nilpotent_residues(C, assume_integrable=True)
    certs["nilpotent_residues"] = nil.passed
    certs["combinations_checked"] = nil.combinations_checked
    if not nil.passed:
        certs["witness"] = constant_to_json(nil.witness)
        certs["witness_source"] = nil.where
    result = {"residues": {d.name: constant_to_json(m) for d, m in residues(C).items}}
    return ("pass" if nil.passed else "fail"), certs, result


def _job_normal_form(doc, args):
    C = _get(doc, args, "connection", Connection)
    pivot = int(args.get("pivot", 1))
    res = [m.constant_term() for d, m in C.items() if d.kind == "log"]
    P, _ = nilpotent_trigonalize(res, C.rank)
    Ct = conjugate(C, P)
    nf = gauge_normal_form(Ct, pivot)
    U = nf.gauge.U
    H = Ct.matrix(f"log{pivot}")
    theta = C.derivations[pivot - 1]
    eq = (H @ U + U.derive(theta) - U @ nf.matrix).is_zero()
    bal = all(k[pivot - 1] == k[pivot] for k in nf.matrix.blocks)
    certs = {"defining_equation_zero": eq, "balanced_support": bal,
             "stabilized": nf.stabilized, "achieved_degree": nf.achieved_degree}
    result = {"basis_change": constant_to_json(P), "gauge": matrix_to_json(U),
              "normalized_matrix": matrix_to_json(nf.matrix)}
    return ("pass" if eq and bal else "fail"), certs, result


def _job_reduce(doc, args):
    C = _get(doc, args, "connection", Connection)
    red = reduce_with_gauge(C)
    E = expand_from_linear_data(red.linear_data, C.ring, C.family)
    cert = red.gauge.certificate(C, E)
    cert["stabilized"] = red.stabilized
    return ("pass" if cert["zero"] else "fail"), cert, {
        "linear_data": linear_data_to_json(red.linear_data), "gauge": matrix_to_json(red.gauge.U)}


def _job_expand(doc, args):
    L = _get(doc, args, "linear_data", LinearData)
    fam = args.get("family")
    C = expand_from_linear_data(L, doc.ring.without_u(), Family(fam) if fam else None)
    return "ok", {}, {"connection": connection_to_json(C)}


def _job_kernel_cokernel(doc, args):
    phi = _get(doc, args, "morphism", HorizontalMorphism)
    kc = kernel_cokernel(phi)
    certs = dict(kc.certificates)
    ok = all(v for k, v in certs.items() if k != "ranks")
    return ("pass" if ok else "fail"), certs, {
        "kernel": connection_to_json(kc.kernel), "cokernel": connection_to_json(kc.cokernel),
        "image": connection_to_json(kc.image),
        "inclusion": matrix_to_json(kc.inclusion.mat), "projection": matrix_to_json(kc.projection.mat)}


def _job_sections(doc, args):
    C = _get(doc, args, "connection", Connection)
    sec = horizontal_sections(C)
    return "ok", {}, {"dim": sec.dim, "basis": matrix_to_json(sec.basis)}


def _job_cohomology(doc, args):
    name = args.get("connection", args.get("linear_data"))
    obj = doc.objects.get(name)
    if not isinstance(obj, (Connection, LinearData)):
        raise JobError("cohomology needs a connection or linear data")
    rep = de_rham_cohomology(obj, args.get("family"))
    return "ok", {"euler_characteristic_ok": rep.euler_ok()}, rep.as_dict()


def _job_ext1(doc, args):
    a, b = doc.objects.get(args.get("source")), doc.objects.get(args.get("target"))
    if not (isinstance(a, (Connection, LinearData)) and type(a) is type(b)):
        raise JobError("ext1 needs two connections or two linear data")
    res = ext1(a, b)
    exts = [connection_to_json(e) if isinstance(e, Connection) else linear_data_to_json(e)
            for e in res.extensions]
    return "ok", {"h1_dim": res.h1_dim, "consistent": res.h1_dim == res.dim}, {
        "dim": res.dim, "cocycles": [[constant_to_json(b) for b in c] for c in res.cocycles],
        "extensions": exts}


def _job_bicomplex(doc, args):
    C = _get(doc, args, "connection", Connection)
    u = args.get("u_trunc", doc.ring.u_trunc if doc.ring.u_trunc is not None else 2)
    rep = u_bicomplex_cohomology(C, int(u))
    return ("pass" if rep.verdict == "equal on stabilized degrees" else "fail"), {
        "column_exact": rep.column_exact, "kernel_of_p_u_acyclic": rep.kernel_acyclic,
        "verdict": rep.verdict}, rep.as_dict()


def _job_lift(doc, args):
    C = _get(doc, args, "connection", Connection)
    lift = lift_rank1(C)
    top = Derivation("log", C.ring.r)
    ok = restrict(lift) == C
    return ("pass" if ok else "fail"), {"restricts_to_input": ok}, {
        "lift": connection_to_json(lift), "absolute_matrix": matrix_to_json(lift.matrix(top))}


def _job_push(doc, args):
    C = _get(doc, args, "connection", Connection)
    L = pushforward_log_point(C)
    return "pass", {"nilpotent": True}, {"linear_data": linear_data_to_json(L)}


def _job_ga(doc, args):
    L = _get(doc, args, "linear_data", LinearData)
    if len(L.nilpotents) != 1:
        raise JobError("ga-rep needs linear data with one nilpotent")
    rep = ga_rep(L.nilpotents[0])
    law = homomorphism_law_holds(rep)
    back = la.equal(nilpotent_log(rep), L.nilpotents[0])
    return ("pass" if law and back else "fail"), {"homomorphism_law": law, "log_round_trip": back}, {
        "coefficients": [constant_to_json(c) for c in rep.coeffs]}


HANDLERS = {
    "check": _job_check, "normal-form": _job_normal_form, "reduce": _job_reduce,
    "expand": _job_expand, "kernel-cokernel": _job_kernel_cokernel, "sections": _job_sections,
    "cohomology": _job_cohomology, "ext1": _job_ext1, "bicomplex-verify": _job_bicomplex,
    "lift-rank1": _job_lift, "push-forward": _job_push, "ga-rep": _job_ga,
}


def run_job(doc, index, job):
    report = {"job": index, "command": job["command"], "args": job["args"],
              "ring": doc.ring.describe()}
    handler = HANDLERS.get(job["command"])
    if handler is None:
        report.update(verdict="error", message=f"unknown command {job['command']!r}",
                      certificates={}, result={})
        return report
    try:
        verdict, certs, result = handler(doc, job["args"])
        report.update(verdict=verdict, certificates=certs, result=result)
    except LogConnError as exc:
        report.update(verdict="error", message=str(exc), certificates={}, result={})
    return report


def thread_count():
    raw = os.environ.get("LOGCONN_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def run_jobs(doc, jobs=None):
    """Reports for the jobs, in document order."""
    jobs = doc.jobs if jobs is None else jobs
    workers = min(thread_count(), max(1, len(jobs)))
    if workers == 1:
        return [run_job(doc, i, j) for i, j in enumerate(jobs)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ij: run_job(doc, *ij), enumerate(jobs)))


def exit_status(reports):
    return 0 if all(r["verdict"] in ("pass", "ok") for r in reports) else 1


def format_text(reports):
    lines = []
    for r in reports:
        args = ", ".join(f"{k}={v}" for k, v in sorted(r["args"].items()))
        line = f"[{r['job']}] {r['command']}({args}): {r['verdict'].upper()}"
        if r.get("message"):
            line += f" - {r['message']}"
        certs = {k: v for k, v in r["certificates"].items() if isinstance(v, (bool, int, str))}
        if certs:
            line += " | " + ", ".join(f"{k}={v}" for k, v in sorted(certs.items()))
        if r["command"] == "cohomology" and "dims" in r["result"]:
            line += f" | dims={r['result']['dims']}"
        lines.append(line)
    ok = exit_status(reports) == 0
    lines.append(f"{len(reports)} job(s), {'all passed' if ok else 'failures present'}")
    return "\n".join(lines) + "\n"


def _select_jobs(doc, command, bindings):
    if command == "run":
        return doc.jobs
    if bindings:
        return [{"command": command, "args": bindings}]
    listed = [j for j in doc.jobs if j["command"] == command]
    if listed:
        return listed
    wanted = LinearData if command in ("expand", "ga-rep") else Connection
    key = "linear_data" if wanted is LinearData else "connection"
    if command == "kernel-cokernel":
        wanted, key = HorizontalMorphism, "morphism"
    return [{"command": command, "args": {key: name}}
            for name, obj in doc.objects.items() if isinstance(obj, wanted)]


def _parse_binding(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    key, value = text.split("=", 1)
    if value.lstrip("-").isdigit():
        return key, int(value)
    return key, value


def build_parser():
    parser = argparse.ArgumentParser(prog="logconn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run",) + COMMANDS:
        p = sub.add_parser(name, help="run the document's job list" if name == "run" else f"run {name} jobs")
        p.add_argument("--input", required=True, help="document path, or - for stdin")
        p.add_argument("--output", help="report path (default stdout)")
        p.add_argument("--format", choices=("json", "text"), default="json")
        p.add_argument("--trunc", type=int, help="override the truncation bound")
        p.add_argument("--u-trunc", type=int, dest="u_trunc", help="override the u truncation bound")
        p.add_argument("--arg", action="append", default=[], type=_parse_binding,
                       help="argument binding key=value (repeatable)")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        if ns.input == "-":
            text = sys.stdin.read()
        else:
            with open(ns.input, encoding="utf-8") as fh:
                text = fh.read()
        doc = parse_document(text, ns.trunc, ns.u_trunc)
    except (OSError, DocumentError) as exc:
        print(f"logconn: {exc}", file=sys.stderr)
        return 2
    jobs = _select_jobs(doc, ns.command, dict(ns.arg))
    reports = run_jobs(doc, jobs)
    if ns.format == "json":
        out = dumps({"reports": reports, "summary": {
            "jobs": len(reports), "passed": exit_status(reports) == 0}})
    else:
        out = format_text(reports)
    if ns.output:
        with open(ns.output, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return exit_status(reports)


if __name__ == "__main__":
    sys.exit(main())
