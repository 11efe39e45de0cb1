from __future__ import annotations

import io
import json

import numpy as np
import pytest

from credible_sdp.annotator import (
    CHECK_RTOL,
    LISTING_FLAVORS,
    TRACE_SCHEMA,
    TraceFormatError,
    check_trace,
    emit_annotated_listing,
    parse_trace,
    write_trace,
)
from credible_sdp.monitor import INIT_IDS, LOOP_IDS
from credible_sdp.problem import build_problem
from credible_sdp.solver import SolverOptions

# -- line surgery helpers ------------------------------------------------------


def trace_lines(trace: bytes) -> list[str]:
    return trace.decode("utf-8").splitlines()


def reassemble(lines: list[str]) -> bytes:
    return ("\n".join(lines) + "\n").encode("utf-8")


def edit_line(trace: bytes, index: int, mutate) -> bytes:
    """Apply ``mutate`` to the parsed JSON object on line ``index``."""
    lines = trace_lines(trace)
    obj = json.loads(lines[index])
    mutate(obj)
    lines[index] = json.dumps(obj)
    return reassemble(lines)


def find_line(trace: bytes, predicate) -> int:
    for i, line in enumerate(trace_lines(trace)):
        if predicate(json.loads(line)):
            return i
    raise AssertionError("no line matched")


# -- serialization --------------------------------------------------------------


def test_trace_layout(example_trace, example_report):
    lines = trace_lines(example_trace)
    n_iter = example_report.iterations
    assert len(lines) == 1 + 16 + n_iter * 13 + 1
    head = json.loads(lines[0])
    assert head["type"] == "header"
    assert head["schema"] == TRACE_SCHEMA
    assert head["problem_hash"] == example_report.problem.problem_hash
    assert (head["n"], head["m"]) == (2, 3)
    foot = json.loads(lines[-1])
    assert foot["type"] == "footer"
    assert foot["status"] == "Converged"
    assert foot["iterations"] == n_iter
    assert foot["budget"] == example_report.budget
    assert foot["records"] == 16 + 12 * n_iter
    assert "violation_id" not in foot


def test_trace_floats_roundtrip_exactly(example_trace, example_report):
    trace = parse_trace(example_trace)
    snap = example_report.snapshots[0]
    line = trace.iterations[0]["state"]
    np.testing.assert_array_equal(np.array(line["X"]), snap.state.X)
    np.testing.assert_array_equal(np.array(line["dX"]), snap.step.dX)
    assert line["phi"] == snap.state.phi
    assert line["mu"] == snap.state.mu
    head_x = np.array(trace.header["init_state"]["X"])
    np.testing.assert_array_equal(head_x, example_report.initial_state.X)


def test_write_trace_tees_to_sink(example_report):
    sink = io.BytesIO()
    data = write_trace(example_report, sink)
    assert sink.getvalue() == data


def test_parse_trace_collects_iteration_blocks(example_trace):
    trace = parse_trace(example_trace)
    assert len(trace.init_records) == 16
    assert [rec["id"] for rec in trace.init_records] == list(INIT_IDS)
    assert len(trace.iterations) == 56
    for block in trace.iterations:
        assert [rec["id"] for rec in block["records"]] == list(LOOP_IDS)


def test_parse_trace_accepts_str_input(example_trace):
    assert parse_trace(example_trace.decode("utf-8")).footer["status"] == "Converged"


# -- structural rejection ---------------------------------------------------------


def test_parse_rejects_empty_input():
    with pytest.raises(TraceFormatError):
        parse_trace(b"")


def test_parse_rejects_non_json_line(example_trace):
    lines = trace_lines(example_trace)
    lines[3] = "not json at all"
    with pytest.raises(TraceFormatError):
        parse_trace(reassemble(lines))


def test_parse_rejects_unknown_schema(example_trace):
    bad = edit_line(example_trace, 0, lambda obj: obj.update(schema="cts-99"))
    with pytest.raises(TraceFormatError):
        parse_trace(bad)


def test_parse_rejects_missing_footer(example_trace):
    lines = trace_lines(example_trace)[:-1]
    with pytest.raises(TraceFormatError):
        parse_trace(reassemble(lines))


def test_parse_rejects_header_elsewhere(example_trace):
    lines = trace_lines(example_trace)
    lines.insert(5, lines[0])
    with pytest.raises(TraceFormatError):
        parse_trace(reassemble(lines))


def test_parse_rejects_init_record_after_iterations(example_trace):
    lines = trace_lines(example_trace)
    init_rec = lines[1]  # phase "init"
    lines.insert(len(lines) - 1, init_rec)
    with pytest.raises(TraceFormatError):
        parse_trace(reassemble(lines))


# -- checking a genuine trace -------------------------------------------------------


def test_check_trace_clean_roundtrip(example_trace, example_problem):
    result = check_trace(example_trace, example_problem)
    assert result.clean
    assert result.iterations == 56
    assert result.records_checked == 16 + 56 * 12
    assert "trace OK" in result.describe()


def test_check_trace_accepts_parsed_input(example_trace, example_problem):
    result = check_trace(parse_trace(example_trace), example_problem)
    assert result.clean


def test_check_trace_rejects_wrong_problem(example_trace):
    other = build_problem(
        np.eye(2),
        [np.diag([1.0, -1.0]), np.array([[0.0, 1.0], [1.0, 0.0]])],
        [0.5, -0.25],
    )
    with pytest.raises(TraceFormatError, match="hash"):
        check_trace(example_trace, other)


# -- tamper detection -----------------------------------------------------------------


def finding_ids(result):
    return [(f.kind, f.record_id) for f in result.findings]


def test_check_flags_tampered_measured_value(example_trace, example_problem):
    idx = find_line(
        example_trace,
        lambda o: o.get("type") == "record" and o.get("id") == "I4" and o.get("iteration") == 7,
    )
    bad = edit_line(example_trace, idx, lambda o: o.update(measured=o["measured"] * 2.0))
    result = check_trace(bad, example_problem)
    assert not result.clean
    assert any(f.kind == "recompute" and f.record_id == "I4" for f in result.findings)


def test_check_flags_flipped_verdict(example_trace, example_problem):
    idx = find_line(
        example_trace,
        lambda o: o.get("type") == "record" and o.get("id") == "I8" and o.get("iteration") == 3,
    )
    bad = edit_line(example_trace, idx, lambda o: o.update(passed=False))
    result = check_trace(bad, example_problem)
    assert any(f.kind == "verdict" and f.record_id == "I8" for f in result.findings)


def test_check_flags_tampered_anchor_text(example_trace, example_problem):
    idx = find_line(
        example_trace,
        lambda o: o.get("type") == "record" and o.get("id") == "I3" and o.get("iteration") == 1,
    )
    bad = edit_line(example_trace, idx, lambda o: o.update(anchor="phi-0.99*phim<0"))
    result = check_trace(bad, example_problem)
    assert any(f.record_id == "I3" for f in result.findings)


def test_check_flags_tampered_detail_value(example_trace, example_problem):
    idx = find_line(
        example_trace,
        lambda o: o.get("type") == "record" and o.get("id") == "I9" and o.get("iteration") == 2,
    )
    bad = edit_line(
        example_trace, idx,
        lambda o: o["detail"].update(primal_residual=o["detail"]["primal_residual"] + 1e-3),
    )
    result = check_trace(bad, example_problem)
    assert any(f.kind == "recompute" and f.record_id == "I9" for f in result.findings)


def test_check_flags_broken_iterate_chain(example_trace, example_problem):
    idx = find_line(
        example_trace,
        lambda o: o.get("type") == "iteration" and o.get("iteration") == 5,
    )

    def bump_x(obj):
        obj["X"][0][0] += 1e-5

    bad = edit_line(example_trace, idx, bump_x)
    result = check_trace(bad, example_problem)
    assert not result.clean
    assert any(f.kind == "chain" and f.where == "iteration 5" for f in result.findings)
    # the next block's (Xm == previous X) link must snap as well
    assert any(f.kind == "chain" and f.where == "iteration 6" for f in result.findings)


def test_check_flags_tampered_scalar_recompute(example_trace, example_problem):
    idx = find_line(
        example_trace,
        lambda o: o.get("type") == "iteration" and o.get("iteration") == 9,
    )
    bad = edit_line(example_trace, idx, lambda o: o.update(phi=o["phi"] * (1 + 1e-6)))
    result = check_trace(bad, example_problem)
    assert any(f.kind == "recompute" and f.where == "iteration 9" for f in result.findings)


def test_check_flags_dropped_record(example_trace, example_problem):
    idx = find_line(
        example_trace,
        lambda o: o.get("type") == "record" and o.get("id") == "I11" and o.get("iteration") == 4,
    )
    lines = trace_lines(example_trace)
    del lines[idx]
    result = check_trace(reassemble(lines), example_problem)
    assert any(f.kind == "catalog" for f in result.findings)
    assert any(f.kind == "footer" for f in result.findings)  # record count is off too


def test_check_flags_tampered_footer(example_trace, example_problem):
    last = len(trace_lines(example_trace)) - 1
    for field, value in [("iterations", 55), ("budget", 57), ("status", "DivergenceGuard"),
                         ("final_gap", 2e-8)]:
        bad = edit_line(example_trace, last, lambda o, f=field, v=value: o.update({f: v}))
        result = check_trace(bad, example_problem)
        assert any(f.kind == "footer" for f in result.findings), field


def test_check_flags_tampered_header_options(example_trace, example_problem):
    bad = edit_line(example_trace, 0, lambda o: o["options"].update(sigma=0.74))
    result = check_trace(bad, example_problem)
    assert not result.clean


def test_check_flags_tampered_header_init_state(example_trace, example_problem):
    def bump(obj):
        obj["init_state"]["phi"] *= 1 + 1e-6

    bad = edit_line(example_trace, 0, bump)
    result = check_trace(bad, example_problem)
    assert any(f.record_id == "init-phi-definition" for f in result.findings)


def test_check_flags_header_dimension_lie(example_trace, example_problem):
    bad = edit_line(example_trace, 0, lambda o: o.update(m=4))
    result = check_trace(bad, example_problem)
    assert any(f.where == "header" for f in result.findings)


def test_describe_reports_failures(example_trace, example_problem):
    bad = edit_line(example_trace, 0, lambda o: o["options"].update(sigma=0.74))
    text = check_trace(bad, example_problem).describe()
    assert "FAILED" in text


# -- annotated listings ----------------------------------------------------------------


def test_listing_is_deterministic(example_problem):
    a = emit_annotated_listing(example_problem)
    b = emit_annotated_listing(example_problem)
    assert a.text == b.text
    assert a.contract_index == b.contract_index


def test_listing_contains_required_literals(example_problem):
    text = emit_annotated_listing(example_problem).text
    assert "phi-0.76*phim<0" in text
    assert "trace(X*Z)<=0.1" in text
    assert "ensures" in text and "requires" in text


def test_listing_covers_every_contract(example_problem):
    listing = emit_annotated_listing(example_problem)
    ids = {entry[0] for entry in listing.contract_index}
    assert ids == set(LOOP_IDS) | set(INIT_IDS)
    for rid, line_no, kind, expr in listing.contract_index:
        assert kind in ("requires", "ensures")
        line = listing.lines[line_no - 1]
        assert f"[{rid}]" in line
        assert expr in line


def test_listing_flavors_share_contract_content(example_problem):
    pm = emit_annotated_listing(example_problem, flavor="pseudo-matlab")
    cl = emit_annotated_listing(example_problem, flavor="c-like")
    assert [e[0] for e in pm.contract_index] == [e[0] for e in cl.contract_index]
    assert [e[3] for e in pm.contract_index] == [e[3] for e in cl.contract_index]
    assert pm.text != cl.text
    assert "%%" in pm.text and "/*@" in cl.text and "*/" in cl.text


def test_listing_substitutes_nondefault_parameters(example_problem):
    opts = SolverOptions(sigma=0.5, gap_ceiling=0.2)
    text = emit_annotated_listing(example_problem, opts).text
    assert "phi-0.51*phim<0" in text
    assert "trace(X*Z)<=0.2" in text
    assert "phi-0.76*phim<0" not in text


def test_listing_embeds_problem_data(example_problem):
    text = emit_annotated_listing(example_problem).text
    assert "n = 2; m = 3;" in text
    assert "0.4" in text and "-0.750999" in text
    assert example_problem.problem_hash[:12] in text


def test_listing_rejects_unknown_flavor(example_problem):
    with pytest.raises(ValueError, match="flavor"):
        emit_annotated_listing(example_problem, flavor="fortran")
    assert LISTING_FLAVORS == ("pseudo-matlab", "c-like")


def test_listing_requires_a_warm_start():
    prob = build_problem(
        np.eye(2),
        [np.diag([1.0, -1.0]), np.array([[0.0, 1.0], [1.0, 0.0]])],
        [0.5, -0.25],
    )
    with pytest.raises(ValueError):
        emit_annotated_listing(prob)


def test_check_rtol_is_tight():
    assert CHECK_RTOL == 1e-12
