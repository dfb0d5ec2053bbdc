"""Problem loading, validation, and serialization round trips."""

import dataclasses
import json

import numpy as np
import pytest

from conftest import building_dict, random_problem
from lqgbisect import (
    ProblemFormatError,
    example_path,
    load_problem,
    load_problem_file,
    problem_to_json,
    validate,
)


def test_building_example_loads(building):
    assert (building.n, building.m, building.N) == (4, 1, 1000)
    assert building.A.shape == (4, 4)
    assert building.B.shape == (4, 1)
    assert building.Q.shape == (1000, 4, 4)
    assert building.R.shape == (1000, 1, 1)
    assert building.gamma == 25000.0
    assert np.array_equal(building.z, [25.0, 25.0, 30.0, 24.0])
    # broadcast weights are the same matrix at every step
    assert np.array_equal(building.Q[0], building.Q[371])
    assert building.Qf[0, 3] == -1.0


def test_arrays_are_read_only(building):
    with pytest.raises(ValueError):
        building.A[0, 0] = 2.0


def test_broadcast_matches_explicit_per_step():
    d_single = building_dict(N=7)
    d_explicit = building_dict(N=7)
    d_explicit["Q"] = [d_single["Q"] for _ in range(7)]
    p_single = load_problem(d_single)
    p_explicit = load_problem(d_explicit)
    assert np.array_equal(p_single.Q, p_explicit.Q)


def test_missing_field_names_it():
    d = building_dict()
    del d["B"]
    with pytest.raises(ProblemFormatError, match="'B'"):
        load_problem(d)


def test_wrong_shape_names_field():
    d = building_dict()
    d["B"] = [[0.025], [0.0], [0.0]]
    with pytest.raises(ProblemFormatError, match="'B'.*expected shape \\(4, 1\\)"):
        load_problem(d)


def test_wrong_weight_count_rejected():
    d = building_dict(N=5)
    d["Q"] = [d["Qf"] for _ in range(4)]
    with pytest.raises(ProblemFormatError, match="'Q'"):
        load_problem(d)


def test_ragged_matrix_rejected():
    d = building_dict()
    d["A"] = [[1.0, 0.0], [1.0]]
    with pytest.raises(ProblemFormatError, match="'A'"):
        load_problem(d)


def test_non_numeric_gamma_rejected():
    with pytest.raises(ProblemFormatError, match="'gamma'"):
        load_problem(building_dict(gamma="lots"))


def test_invalid_json_text_rejected():
    with pytest.raises(ProblemFormatError, match="invalid JSON"):
        load_problem("{not json")
    with pytest.raises(ProblemFormatError, match="JSON object"):
        load_problem("[1, 2, 3]")


def test_round_trip_is_bitwise(tmp_path):
    rng = np.random.default_rng(7)
    p = random_problem(rng, n=3, m=2, N=9)
    text = problem_to_json(p)
    q = load_problem(text)
    for name in ("A", "B", "Q", "R", "Qf", "Qt", "Rt", "Qft", "z", "V", "W"):
        assert np.array_equal(getattr(p, name), getattr(q, name)), name
    assert (p.n, p.m, p.N, p.gamma) == (q.n, q.m, q.N, q.gamma)

    path = tmp_path / "prob.json"
    path.write_text(text)
    r = load_problem_file(path)
    assert np.array_equal(p.Q, r.Q)


def test_constant_weights_collapse_on_save(building):
    data = json.loads(problem_to_json(building))
    # written back as one matrix, not 1000 copies
    assert np.asarray(data["Q"]).shape == (4, 4)
    assert np.asarray(data["R"]).shape == (1, 1)


def test_loader_symmetrizes_weights():
    d = building_dict()
    d["Qf"] = [
        [1.0, 0.2, 0.0, -1.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 1.0],
    ]
    p = load_problem(d)
    assert p.Qf[0, 1] == p.Qf[1, 0] == 0.1


def test_validate_building_ok(building):
    rep = validate(building)
    assert rep.ok
    assert not rep.violations
    assert any("V singular" in w for w in rep.warnings)


def test_validate_flags_indefinite_weight(building):
    bad_q = building.Q.copy()
    bad_q[0] = -np.eye(4)
    rep = validate(dataclasses.replace(building, Q=bad_q))
    assert not rep.ok
    fields = [v[0] for v in rep.violations]
    assert "Q[0]" in fields
    _, check, measured = rep.violations[0]
    assert check == "positive semidefinite"
    assert measured < 0


def test_validate_flags_asymmetric_covariance(building):
    bad_w = np.array([
        [0.01, 1e-3, 0.0, 0.0],
        [0.0, 0.01, 0.0, 0.0],
        [0.0, 0.0, 0.01, 0.0],
        [0.0, 0.0, 0.0, 0.0],
    ])
    rep = validate(dataclasses.replace(building, W=bad_w))
    assert not rep.ok
    assert any(v[0] == "W" and v[1] == "symmetric" for v in rep.violations)


def test_validate_flags_wrong_shape(building):
    rep = validate(dataclasses.replace(building, B=np.zeros((3, 1))))
    assert not rep.ok
    assert any(v[0] == "B" and v[1] == "shape" for v in rep.violations)


def test_validate_flags_nonfinite(building):
    rep = validate(dataclasses.replace(building, gamma=float("inf")))
    assert not rep.ok
    assert any(v[0] == "gamma" and v[1] == "finite" for v in rep.violations)


def test_validate_collects_multiple_violations(building):
    bad_q = building.Q.copy()
    bad_q[0] = -np.eye(4)
    bad_q[3] = -2 * np.eye(4)
    rep = validate(dataclasses.replace(building, Q=bad_q, gamma=float("nan")))
    assert len(rep.violations) >= 3


def test_asymmetric_dynamics_are_fine(building):
    # A and B carry no symmetry contract
    assert building.A[0, 2] != building.A[2, 0]
    assert validate(building).ok


def test_bundled_fixed_ref_variant(building_fixed_ref):
    rep = validate(building_fixed_ref)
    assert rep.ok
    assert building_fixed_ref.W[2, 2] == 0.0
    assert building_fixed_ref.W[3, 3] == 0.0


def test_example_path_resolves():
    assert example_path("building").exists()
    assert example_path("building_fixed_ref.json").exists()
    with pytest.raises(ProblemFormatError):
        load_problem_file(example_path("no_such_example"))
