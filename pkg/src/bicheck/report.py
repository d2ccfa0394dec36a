"""Report documents shared by the text and JSON renderings.

A report is a plain dict (see ``docs/report-schema.md``).  Text output is
rendered from the same dict, so both formats always carry the same findings,
and the exit status is computed from the dict alone.
"""

from __future__ import annotations

import json

from bicheck.model import format_value
from bicheck.refinement import RULE_TAGS, CheckConfig, Finding

SCHEMA_VERSION = "1.0"

EXIT_OK, EXIT_FINDINGS, EXIT_INPUT, EXIT_RESOURCE = 0, 1, 2, 3


def config_dict(config: CheckConfig) -> dict:
    relax = []
    if config.relax_virtual_ops:
        relax.append("virtual-ops")
    if config.relax_abstract_classes:
        relax.append("abstract-classes")
    return {"mode": config.mode, "relax": relax, "stateCap": config.state_cap}


def finding_dict(f: Finding) -> dict:
    ob = f.obligation
    return {
        "kind": ob.kind.value,
        "rule": RULE_TAGS[ob.kind],
        "subclass": ob.subclass,
        "superclass": ob.superclass,
        "op": ob.op,
        "aspect": ob.aspect,
        "verdict": f.verdict.value,
        "witness": None if f.witness is None else {k: format_value(v) for k, v in f.witness.items()},
        "note": f.note,
    }


def lint_dict(lf) -> dict:
    return {"kind": "Freeness", "class": lf.class_name, "severity": lf.severity, "message": lf.message}


def new_report(command: str, spec: str, config: dict) -> dict:
    return {
        "version": SCHEMA_VERSION,
        "command": command,
        "spec": spec,
        "config": config,
        "findings": [],
        "divergence": None,
        "errors": [],
    }


def exit_status(report: dict) -> int:
    """Exit code implied by a (possibly deserialised) report."""
    errors = report.get("errors") or []
    if errors:
        return EXIT_RESOURCE if any(e.get("category") == "resource" for e in errors) else EXIT_INPUT
    cmd = report["command"]
    findings = report.get("findings") or []
    if cmd == "check":
        return EXIT_FINDINGS if any(f["verdict"] == "Fails" for f in findings) else EXIT_OK
    if cmd == "lint":
        return EXIT_FINDINGS if any(f["severity"] == "Error" for f in findings) else EXIT_OK
    if cmd == "trace":
        return EXIT_OK if report.get("divergence") is None else EXIT_FINDINGS
    return EXIT_OK


def overall(report: dict) -> str:
    return "NonConformant" if any(f.get("verdict") == "Fails" for f in report["findings"]) else "Conformant"


def finding_line(d: dict) -> str:
    if d["kind"] == "Freeness":
        return f"[{d['severity']}] freeness  constraint on {d['class']}: {d['message']}"
    target = d["subclass"] + (f".{d['op']}" if d["op"] else "")
    line = f"[{d['verdict']}] {d['rule']}  {target} vs {d['superclass']}"
    if d["aspect"]:
        line += f" ({d['aspect']})"
    if d["witness"]:
        line += "  witness: " + ", ".join(f"{k}={v}" for k, v in d["witness"].items())
    if d["note"]:
        line += f"  -- {d['note']}"
    return line


def render_text(report: dict) -> str:
    cfg = report["config"]
    head = f"{report['command']} {report['spec']}"
    if "mode" in cfg:
        head += f"  mode={cfg['mode']} relax={','.join(cfg['relax']) or 'none'}"
    lines = [head]
    lines += [finding_line(d) for d in report["findings"]]
    if report["command"] == "check" and not report["errors"]:
        lines.append(f"overall: {overall(report)}")
    if report["command"] == "trace" and not report["errors"]:
        div = report["divergence"]
        if div is None:
            lines.append(f"no divergence up to depth {cfg['depth']}")
        else:
            lines.append(
                f"divergence at step {div['step']}: {div['reason']} on "
                f"[{', '.join(div['trace'])}]  -- {div['detail']}"
            )
            lines += div["transcript"]
    for e in report["errors"]:
        lines.append(f"error: {e['message']}")
    return "\n".join(lines) + "\n"


def render_json(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"
