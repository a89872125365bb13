"""Command-line front end.

One workflow per invocation: read a system file, run the requested
analysis, print a report (text by default, JSON on request), and mirror
the JSON to a path when asked.  Exit codes: 0 on success, 2 when an
--expect check fails, 1 on input or resource errors.
"""

from __future__ import annotations

import argparse
import json
import sys as _sys
from importlib import resources

from .basis import diff_rank, syzygies
from .duality import five_step_test, projectivity_check, torsion_witnesses
from .errors import DelosError
from .geometry import (ContactDensityForm, CurvatureLikeTensor, Metric,
                       conformal_killing_system, coordinate_field,
                       hj_contact_system, killing_system, contact_system,
                       vessiot_scalar, weyl_split)
from .involution import formal_integrability_complete, is_involutive
from .report import AnalysisReport
from .sysfile import SystemFile, _eval_coeff, parse_system_file

CHAIN_STAGES = 8


def _read_file(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load(path):
    text = _read_file(path)
    sf = parse_system_file(text)
    return sf, text


def _mat_equal(a, b):
    if a.rows != b.rows or a.cols != b.cols:
        return False
    return all((a.entry(i, j) - b.entry(i, j)).is_zero
               for i in range(a.rows) for j in range(a.cols))


def _emit(report, args, exit_code=0):
    if args.format == "json":
        _sys.stdout.write(report.to_json())
    else:
        _sys.stdout.write(report.render_text())
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
    return exit_code

def _check_expect(report, args, key):
    if not args.expect:
        return 0
    got = str(report.verdicts.get(key, ""))
    want = args.expect
    if want in ("yes", "parametrizable", "involutive", "projective"):
        ok = got in ("yes", "zero", "parametrizable", "involutive",
                     "projective") or got == want
    else:
        ok = got == want
    if not ok:
        report.note("expected %s=%s, got %s" % (key, want, got))
        return 2
    return 0


def _witnesses_into(report, witnesses, source):
    for w in witnesses:
        report.add_witness(w.text, w.annihilator_texts(), source)


# -- workflows ---------------------------------------------------------------

def cmd_adjoint(args):
    sf, text = _load(args.file)
    rep = AnalysisReport("adjoint", text, sf.name or args.file,
                         seed=args.seed, bounds={"degree": args.bound})
    with rep.stage("parse"):
        system = sf.system()
    with rep.stage("adjoint"):
        ad = system.matrix.adjoint()
    rep.add_matrix("input", system.matrix)
    rep.add_matrix("adjoint", ad)
    if system.matrix.rows == system.matrix.cols:
        rep.set_verdict("self_adjoint",
                        "yes" if _mat_equal(system.matrix, ad) else "no")
    return _emit(rep, args, _check_expect(rep, args, "self_adjoint"))


def cmd_cc(args):
    sf, text = _load(args.file)
    rep = AnalysisReport("cc", text, sf.name or args.file,
                         seed=args.seed, bounds={"degree": args.bound})
    with rep.stage("parse"):
        system = sf.system()
    with rep.stage("syzygies"):
        cc = syzygies(system.matrix).cc_matrix
    rep.add_matrix("input", system.matrix)
    rep.add_matrix("compatibility", cc)
    rep.set_verdict("cc_rows", cc.rows)
    return _emit(rep, args, _check_expect(rep, args, "cc_rows"))


def cmd_involution(args):
    sf, text = _load(args.file)
    rep = AnalysisReport("involution", text, sf.name or args.file,
                         seed=args.seed, bounds={"degree": args.bound})
    with rep.stage("parse"):
        system = sf.system()
    with rep.stage("cartan"):
        res = is_involutive(system)
    rep.add_matrix("input", system.matrix)
    rep.set_verdict("involutive", "yes" if res.involutive else "no")
    rep.note("certifying coordinates: %s" % res.coordinates)
    if not res.involutive:
        rep.note("failure: %s (%r)" % (res.reason, res.failing))
    if res.tableau:
        rep.add_dimensions(
            "class tableau", ["class", "rows"],
            [[str(k), v] for k, v in sorted(res.tableau.items(),
                                            reverse=True)])
    return _emit(rep, args, _check_expect(rep, args, "involutive"))


def cmd_complete(args):
    sf, text = _load(args.file)
    rep = AnalysisReport("complete", text, sf.name or args.file,
                         seed=args.seed, bounds={"degree": args.bound})
    with rep.stage("parse"):
        system = sf.system()
    with rep.stage("complete"):
        comp = formal_integrability_complete(system)
    rep.add_matrix("input", system.matrix)
    rep.add_matrix("completed", comp.system.matrix)
    added = 0
    for step in comp.trace:
        if step["action"] == "project":
            added += len(step["added"])
            for eq in step["added"]:
                rep.note("added: %s = 0" % eq)
        elif step["action"] == "prolong":
            rep.note("prolonged to order %d" % step["order"])
    rep.set_verdict("added_equations", added)
    rep.set_verdict("order", comp.system.q)
    for e in comp.events:
        rep.note("pivot denominator: %s" % e)
    with rep.stage("cartan"):
        res = is_involutive(comp.system)
    rep.set_verdict("involutive", "yes" if res.involutive else "no")
    if res.tableau:
        rep.add_dimensions(
            "class tableau", ["class", "rows"],
            [[str(k), v] for k, v in sorted(res.tableau.items(),
                                            reverse=True)])
    return _emit(rep, args, _check_expect(rep, args, "involutive"))


def cmd_partest(args):
    sf, text = _load(args.file)
    stages = "ext1+ext2" if args.stages == "ext2" else (args.stages or "ext1")
    rep = AnalysisReport("partest", text, sf.name or args.file,
                         seed=args.seed, bounds={"degree": args.bound,
                                                 "annihilator": args.bound})
    with rep.stage("parse"):
        system = sf.system()
    with rep.stage("five_step"):
        res = five_step_test(system.matrix, stages=stages,
                             annihilator_bound=args.bound)
    rep.add_matrix("input", res.input)
    rep.add_matrix("adjoint", res.ad_input)
    rep.add_matrix("adjoint_relations", res.ad_param)
    rep.add_matrix("candidate_parametrization", res.param)
    rep.add_matrix("candidate_compatibility", res.cc_param)
    rep.set_verdict("ext1", res.verdict_ext1)
    if res.verdict_ext2 is not None:
        rep.add_matrix("second_adjoint_relations", res.ad_pre)
        rep.add_matrix("pre_parametrization", res.pre)
        rep.add_matrix("pre_compatibility", res.cc_pre)
        rep.set_verdict("ext2", res.verdict_ext2)
    rep.set_verdict("parametrizable", "yes" if res.parametrizable else "no")
    _witnesses_into(rep, res.torsion, "five_step")
    with rep.stage("projectivity"):
        try:
            proj = projectivity_check(system.matrix)
            rep.set_verdict("projective", "yes" if proj.projective else "no")
            if proj.certificate:
                rep.note("projectivity: %s" % proj.certificate)
        except DelosError as e:
            rep.note("projectivity undecided: %s" % e)
    code = _check_expect(rep, args, "parametrizable")
    return _emit(rep, args, code)


def cmd_dims(args):
    sf, text = _load(args.file)
    rep = AnalysisReport("dims", text, sf.name or args.file,
                         seed=args.seed, bounds={"degree": args.bound})
    with rep.stage("parse"):
        system = sf.system()
    with rep.stage("chain"):
        seq = [system.matrix.cols, system.matrix.rows]
        labels = ["unknowns", "input"]
        cur = system.matrix
        for k in range(CHAIN_STAGES):
            cc = syzygies(cur).cc_matrix
            if cc.rows == 0:
                break
            seq.append(cc.rows)
            labels.append("cc%d" % (k + 1))
            cur = cc
        else:
            rep.note("chain truncated after %d stages" % CHAIN_STAGES)
    rep.add_matrix("input", system.matrix)
    rep.add_dimensions("operator chain", labels, [["rows"] + seq])
    rep.set_verdict("chain", " ".join(str(v) for v in seq))
    rep.set_verdict("diff_rank", diff_rank(system.matrix))
    return _emit(rep, args, _check_expect(rep, args, "chain"))


def _parse_components(text, field):
    vals = []
    for k, part in enumerate(text.split(",")):
        part = part.strip()
        if not part:
            raise DelosError("empty component %d in %r" % (k + 1, text))
        vals.append(_eval_coeff(field, part, 1))
    return vals


def _load_tensor(path, field):
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    n = field.n

    def leaf(v):
        if isinstance(v, str):
            return _eval_coeff(field, v, 1)
        if isinstance(v, int):
            return field(v)
        raise DelosError("tensor entries must be expression strings")

    if not (isinstance(data, list) and len(data) == n):
        raise DelosError("tensor file must hold an %d^4 nested array" % n)
    return CurvatureLikeTensor(
        field, [[[[leaf(data[k][l][i][j]) for j in range(n)]
                  for i in range(n)] for l in range(n)] for k in range(n)])


def cmd_geom(args):
    shape = args.shape
    rep = AnalysisReport("geom %s" % shape,
                         json.dumps({"shape": shape, "metric": args.metric,
                                     "n": args.n, "omega": args.omega}),
                         shape, seed=args.seed, bounds={"degree": args.bound})
    if shape in ("killing", "conformal"):
        g = (Metric.euclidean(args.n) if args.metric == "euclidean"
             else Metric.minkowski(args.n))
        system = (killing_system(g) if shape == "killing"
                  else conformal_killing_system(g))
        name = "%s-%s-n%d" % (shape, args.metric, args.n)
    elif shape == "contact":
        if not args.omega:
            raise DelosError("geom contact needs --omega \"c1,c2,...\"")
        probe = [p for p in args.omega.split(",")]
        F = coordinate_field(len(probe))
        w = ContactDensityForm(F, _parse_components(args.omega, F))
        system = contact_system(w)
        name = "contact-n%d" % F.n
        if F.n == 3:
            rep.set_verdict("vessiot", str(vessiot_scalar(w)))
    elif shape == "hj":
        system = hj_contact_system()
        name = "hamilton-jacobi"
    elif shape == "weyl-split":
        if not args.input:
            raise DelosError("geom weyl-split needs --input tensor.json")
        g = (Metric.euclidean(args.n) if args.metric == "euclidean"
             else Metric.minkowski(args.n))
        rho = _load_tensor(args.input, g.field)
        with rep.stage("split"):
            parts = weyl_split(rho, g)
        sigma, tau = parts["sigma"], parts["tau"]
        rep.set_verdict("sigma_trace_free",
                        "yes" if sigma.ricci_trace() ==
                        [[g.field.zero] * g.n for _ in range(g.n)] else "no")
        rep.set_verdict("sigma_zero", "yes" if sigma.is_zero() else "no")
        nz = sum(1 for a in sigma.components for b in a for c in b
                 for e in c if not e.is_zero)
        rep.set_verdict("sigma_nonzero_entries", nz)
        for i in range(g.n):
            rep.note("tau row %d: %s" % (i + 1, ", ".join(
                str(tau[i][j]) for j in range(g.n))))
        return _emit(rep, args, _check_expect(rep, args, "sigma_zero"))
    else:
        raise DelosError("unknown geom shape %r" % shape)
    sf = SystemFile.from_system(system, name=name)
    rep.add_matrix("system", system.matrix)
    rep.set_verdict("equations", system.matrix.rows)
    out_text = sf.render()
    for k, v in rep.verdicts.items():
        if k != "equations":
            out_text += "# %s: %s\n" % (k, v)
    if args.format == "json":
        d = rep.to_dict()
        d["system_text"] = out_text
        _sys.stdout.write(json.dumps(d, indent=2) + "\n")
    else:
        _sys.stdout.write(out_text)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(rep.to_json())
    return 0


# -- the packaged corpus -----------------------------------------------------

def corpus_names():
    root = resources.files("delos").joinpath("data/systems")
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".sys"))


def corpus_text(name):
    return resources.files("delos").joinpath(
        "data/systems/%s" % name).read_text(encoding="utf-8")


def _chain_dims(mat, stages=CHAIN_STAGES):
    seq = [mat.cols, mat.rows]
    cur = mat
    for _ in range(stages):
        cc = syzygies(cur).cc_matrix
        if cc.rows == 0:
            break
        seq.append(cc.rows)
        cur = cc
    return seq


def run_expect_checks(sf, bound=3):
    """Evaluate a file's expect entries; (key, want, got, ok) per entry."""
    system = sf.system()
    mat = system.matrix
    results = []
    cache = {}

    def five(stages):
        if stages not in cache:
            cache[stages] = five_step_test(mat, stages=stages,
                                           annihilator_bound=bound)
        return cache[stages]

    for key, want in sf.expect:
        if key == "m":
            got = str(system.m)
        elif key == "q":
            got = str(system.q)
        elif key == "equations":
            got = str(mat.rows)
        elif key == "cc_rows":
            got = str(syzygies(mat).cc_matrix.rows)
        elif key == "dims":
            got = " ".join(str(v) for v in _chain_dims(mat))
        elif key == "diff_rank":
            got = str(diff_rank(mat))
        elif key == "ext1":
            got = five("ext1").verdict_ext1
        elif key == "ext2":
            got = five("ext1+ext2").verdict_ext2
        elif key == "parametrizable":
            got = "yes" if five("ext1+ext2").parametrizable else "no"
        elif key == "projective":
            got = "yes" if projectivity_check(mat).projective else "no"
        elif key == "free":
            got = "yes" if projectivity_check(mat).free else "no"
        elif key == "torsion_witness":
            ws = torsion_witnesses(mat, annihilator_bound=bound)
            got = ws[0].text if ws else ""
        elif key == "involutive":
            got = "yes" if is_involutive(system).involutive else "no"
        elif key == "completion_added":
            comp = formal_integrability_complete(system)
            got = str(sum(len(s["added"]) for s in comp.trace
                          if s["action"] == "project"))
        elif key == "self_adjoint":
            ad = mat.adjoint()
            got = ("yes" if mat.rows == mat.cols and _mat_equal(mat, ad)
                   else "no")
        else:
            results.append((key, want, "unsupported expect key", False))
            continue
        results.append((key, want, got, got == want))
    return results


def cmd_selftest(args):
    rep = AnalysisReport("selftest", "", "packaged corpus",
                         seed=args.seed, bounds={"degree": args.bound})
    names = corpus_names()
    if args.filter:
        names = [n for n in names if args.filter in n]
    rows = []
    failed = 0
    for name in names:
        sf = parse_system_file(corpus_text(name))
        with rep.stage(name):
            try:
                checks = run_expect_checks(sf, bound=args.bound)
                bad = [c for c in checks if not c[3]]
            except DelosError as e:
                bad = [("error", "", str(e), False)]
                checks = bad
        status = "PASS" if not bad else "FAIL"
        if bad:
            failed += 1
            for key, want, got, _ in bad:
                rep.note("%s: %s expected %r, got %r" % (name, key, want, got))
        rows.append([name, status, len(checks)])
    rep.add_dimensions("selftest", ["system", "status", "checks"], rows)
    rep.set_verdict("failed", failed)
    return _emit(rep, args, 0 if failed == 0 else 2)


# -- argument wiring ---------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--report", metavar="PATH",
                        help="also write the JSON report here")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--bound", type=int, default=3,
                        help="degree budget for witness searches")
    common.add_argument("--seed", type=int, default=None,
                        help="coordinate-change seed, recorded in the report")
    common.add_argument("--expect", metavar="VERDICT",
                        help="exit 2 unless the headline verdict matches")
    p = argparse.ArgumentParser(
        prog="delos",
        description="exact symbolic analysis of linear PDE systems")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, needs_file in (
            ("adjoint", cmd_adjoint, True),
            ("cc", cmd_cc, True),
            ("involution", cmd_involution, True),
            ("complete", cmd_complete, True),
            ("partest", cmd_partest, True),
            ("dims", cmd_dims, True),
            ("selftest", cmd_selftest, False)):
        sp = sub.add_parser(name, parents=[common])
        if needs_file:
            sp.add_argument("file", help="system file in the frozen format")
        if name == "partest":
            sp.add_argument("--stages", choices=("ext1", "ext2", "ext1+ext2"),
                            default="ext1")
        if name == "selftest":
            sp.add_argument("--filter", metavar="SUBSTR",
                            help="only run matching corpus entries")
        sp.set_defaults(fn=fn)
    gp = sub.add_parser("geom", parents=[common])
    gp.add_argument("shape",
                    choices=("killing", "conformal", "contact", "weyl-split",
                             "hj"))
    gp.add_argument("--metric", choices=("euclidean", "minkowski"),
                    default="euclidean")
    gp.add_argument("--n", type=int, default=3)
    gp.add_argument("--omega", help="comma-separated form components")
    gp.add_argument("--input", help="tensor JSON (nested expression strings)")
    gp.set_defaults(fn=cmd_geom)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except FileNotFoundError as e:
        _sys.stderr.write("error: %s\n" % e)
        return 1
    except DelosError as e:
        _sys.stderr.write("error: %s\n" % e)
        return 1


if __name__ == "__main__":
    _sys.exit(main())
