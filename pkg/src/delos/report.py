"""Structured run reports.

Every driver records what it was given, what it produced, and the knobs
that could have changed the answer (orderings, sign conventions, seeds,
search bounds).  Two runs over the same input produce byte-identical JSON
except for the timing section.  The shape is pinned by
data/report-schema.json and versioned through the "schema" field.
"""

from __future__ import annotations

import hashlib
import json
import time
from contextlib import contextmanager
from importlib import resources

from . import __version__

SCHEMA_ID = "delos-report/1"

_DISCLOSURES = {
    "adjoint_sign": "a*d^mu maps to (-1)^|mu| d^mu a",
    "module_order": "position over term, leftmost column strongest, "
                    "grevlex on derivatives",
    "action": "operators act on the left of column vectors",
}


class AnalysisReport:
    """Accumulates one workflow's inputs, stages, and verdicts."""

    def __init__(self, workflow, input_text="", input_name="",
                 seed=None, bounds=None):
        self.workflow = workflow
        self.input_name = input_name
        self.input_digest = hashlib.sha256(
            input_text.encode("utf-8")).hexdigest()
        self.disclosures = dict(_DISCLOSURES)
        self.disclosures["seed"] = seed
        self.disclosures["bounds"] = dict(bounds) if bounds else {}
        self.matrices = []
        self.verdicts = {}
        self.dimensions = []
        self.witnesses = []
        self.notes = []
        self.timing = {}

    def add_matrix(self, name, mat):
        self.matrices.append({
            "name": name,
            "rows": mat.rows,
            "cols": mat.cols,
            "row_labels": list(mat.row_labels),
            "col_labels": list(mat.col_labels),
            "equations": mat.format_rows(),
        })

    def set_verdict(self, name, value):
        self.verdicts[name] = value

    def add_dimensions(self, name, columns, rows):
        self.dimensions.append({
            "name": name,
            "columns": list(columns),
            "rows": [[v if isinstance(v, str) else int(v) for v in r]
                     for r in rows],
        })

    def add_witness(self, text, annihilators=(), source=""):
        self.witnesses.append({
            "text": text,
            "annihilators": list(annihilators),
            "source": source,
        })

    def note(self, text):
        self.notes.append(text)

    @contextmanager
    def stage(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.timing[name] = round(time.perf_counter() - t0, 6)

    # -- serialization -----------------------------------------------------

    def to_dict(self, with_timing=True):
        out = {
            "schema": SCHEMA_ID,
            "tool": "delos",
            "version": __version__,
            "workflow": self.workflow,
            "input_name": self.input_name,
            "input_digest": self.input_digest,
            "disclosures": self.disclosures,
            "matrices": self.matrices,
            "verdicts": self.verdicts,
            "dimensions": self.dimensions,
            "witnesses": self.witnesses,
            "notes": self.notes,
        }
        if with_timing:
            out["timing"] = self.timing
        return out

    def to_json(self, with_timing=True):
        return json.dumps(self.to_dict(with_timing=with_timing), indent=2,
                          sort_keys=False) + "\n"

    def render_text(self):
        lines = ["%s report (delos %s)" % (self.workflow, __version__)]
        if self.input_name:
            lines.append("input: %s" % self.input_name)
        lines.append("digest: %s" % self.input_digest[:16])
        for m in self.matrices:
            lines.append("")
            lines.append("%s (%dx%d, columns %s):"
                         % (m["name"], m["rows"], m["cols"],
                            " ".join(m["col_labels"])))
            for lab, eq in zip(m["row_labels"], m["equations"]):
                lines.append("  %s: %s" % (lab, eq))
        for d in self.dimensions:
            lines.append("")
            lines.append("%s:" % d["name"])
            widths = [max(len(str(c)), *(len(str(r[i])) for r in d["rows"]))
                      for i, c in enumerate(d["columns"])]
            lines.append("  " + "  ".join(str(c).rjust(w)
                         for c, w in zip(d["columns"], widths)))
            for r in d["rows"]:
                lines.append("  " + "  ".join(str(v).rjust(w)
                             for v, w in zip(r, widths)))
        if self.witnesses:
            lines.append("")
            lines.append("witnesses:")
            for w in self.witnesses:
                ann = (" annihilated by %s" % ", ".join(w["annihilators"])
                       if w["annihilators"] else "")
                lines.append("  %s%s" % (w["text"], ann))
        if self.verdicts:
            lines.append("")
            for k, v in self.verdicts.items():
                lines.append("%s: %s" % (k, v))
        for n in self.notes:
            lines.append("note: %s" % n)
        if self.timing:
            lines.append("")
            lines.append("timing: " + "  ".join(
                "%s %.3fs" % (k, v) for k, v in self.timing.items()))
        return "\n".join(lines) + "\n"


def load_schema():
    with resources.files("delos").joinpath(
            "data/report-schema.json").open("r", encoding="utf-8") as fh:
        return json.load(fh)


def validate_report(data):
    """Schema-check a report dict; needs the jsonschema package."""
    import jsonschema
    jsonschema.validate(instance=data, schema=load_schema())
