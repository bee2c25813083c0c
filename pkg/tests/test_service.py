import struct
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from laserbench import geometry
from laserbench.config import default_config
from laserbench.coverage import (
    coverage_report,
    rasterize,
    read_heatmap_layer,
    stamp_hits,
    write_heatmap_layer,
)
from laserbench.operator_sim import OperatorModel, RngSeed, simulate_pass
from laserbench.planner import plan_treatment
from laserbench.service import create_app
from laserbench.surface import save_mesh

FOREHEAD = default_config().patches[0]
SELECTION = [[12.0, 12.0], [52.0, 12.0], [52.0, 62.0], [12.0, 62.0]]


@pytest.fixture()
def client():
    with TestClient(create_app()) as c:
        yield c


@pytest.fixture(scope="module")
def patch_mesh(tmp_path_factory):
    # the same padded forehead surface the CLI builds from the default config
    path = tmp_path_factory.mktemp("mesh") / "forehead.ply"
    save_mesh(FOREHEAD.build_region().surface, path)
    return path


def make_session(client, patch_mesh, selection=SELECTION, exclusions=None):
    sid = client.post("/sessions").json()["session_id"]
    r = client.post(f"/sessions/{sid}/mesh", content=patch_mesh.read_bytes())
    assert r.status_code == 200
    body = {"selection": selection}
    if exclusions is not None:
        body["exclusions"] = exclusions
    r = client.post(f"/sessions/{sid}/region", json=body)
    assert r.status_code == 200
    return sid


# ---------------------------------------------------------------------------
# the paint -> plan -> score happy path


def test_full_round_matches_in_process_core(client, patch_mesh):
    sid = make_session(client, patch_mesh)
    r = client.post(f"/sessions/{sid}/plan", json={"pattern": "hex"})
    assert r.status_code == 200
    assert r.json()["validation"]["violations"] == []
    served = client.get(f"/sessions/{sid}/coverage", params={"pixel": 0.2}).json()

    cfg = default_config()
    region = FOREHEAD.build_region()
    plan = plan_treatment(region, cfg.laser, cfg.kin, cfg.standoff)
    expected = coverage_report(region, plan, 0.2)
    assert served["coverage_pct"] == expected.coverage_pct
    assert served["phi_union_mm2"] == expected.phi_union
    assert served["U_mm2"] == expected.U
    assert served["shots"] == expected.shots


def test_mesh_response_reports_geometry(client, patch_mesh):
    sid = client.post("/sessions").json()["session_id"]
    doc = client.post(f"/sessions/{sid}/mesh", content=patch_mesh.read_bytes()).json()
    assert doc["area_mm2"] == pytest.approx((40 + 24) * (50 + 24))
    assert doc["uv_bounds"]["max"] == [64.0, 74.0]


def test_region_reports_operable_area(client, patch_mesh):
    sid = make_session(client, patch_mesh)
    doc = client.get(f"/sessions/{sid}/region").json()
    assert doc["operable_area_mm2"] == pytest.approx(2000.0, rel=1e-3)
    assert doc["region"]["selection"] == SELECTION


def test_region_round_trips_exact_vertices(client, patch_mesh):
    # painted polygon must come back bit-identical for save/reload fidelity
    jagged = [[12.0, 12.0], [50.25, 13.125], [51.0, 60.5], [12.5, 61.0625]]
    sid = make_session(client, patch_mesh, selection=jagged)
    doc = client.get(f"/sessions/{sid}/region").json()
    assert doc["region"]["selection"] == jagged


def test_simulate_deterministic_by_seed(client, patch_mesh):
    sid = make_session(client, patch_mesh)
    a = client.post(f"/sessions/{sid}/simulate", json={"seed": 5}).json()
    b = client.post(f"/sessions/{sid}/simulate", json={"seed": 5}).json()
    assert a == b
    c = client.post(f"/sessions/{sid}/simulate", json={"seed": 6}).json()
    assert a != c


def test_simulate_accepts_custom_model(client, patch_mesh):
    sid = make_session(client, patch_mesh)
    model = OperatorModel(aim_sigma=2.0, drift_sigma=1.0, rate_mean=2.5)
    r = client.post(
        f"/sessions/{sid}/simulate",
        json={"seed": 11, "model": model.to_json(), "source": "human"},
    )
    assert r.status_code == 200
    doc = r.json()["plan"]
    assert doc["source"] == "human"
    region = FOREHEAD.build_region()
    expected = simulate_pass(
        region, default_config().laser, model, RngSeed(11), 20.0, "human"
    )
    assert len(doc["shots"]) == expected.n_shots
    assert doc["shots"][0]["x"] == expected.centers[0, 0]


def test_statelessness_rebuilt_session_identical(client, patch_mesh):
    outputs = []
    for _ in range(2):
        sid = make_session(client, patch_mesh)
        client.post(f"/sessions/{sid}/plan", json={})
        outputs.append(client.get(f"/sessions/{sid}/coverage").json())
    assert outputs[0] == outputs[1]


# ---------------------------------------------------------------------------
# heatmap layer


def test_heatmap_equals_core_bytes(client, patch_mesh):
    sid = make_session(client, patch_mesh)
    client.post(f"/sessions/{sid}/simulate", json={"seed": 8})
    blob = client.get(f"/sessions/{sid}/heatmap", params={"pixel": 0.5}).content

    region = FOREHEAD.build_region()
    cfg = default_config()
    plan = simulate_pass(region, cfg.laser, cfg.human_model, RngSeed(8), 20.0, "human")
    mask = rasterize(region, 0.5)
    counts = stamp_hits(mask, region.surface.project(plan.centers), cfg.laser.spot_radius)
    assert blob == write_heatmap_layer(counts, 0.5)

    w, h, px = struct.unpack("<IIf", blob[:12])
    assert (h, w) == counts.shape
    assert px == np.float32(0.5)
    layer_counts, layer_px = read_heatmap_layer(blob)
    assert layer_px == np.float32(0.5)
    assert np.array_equal(layer_counts, counts)
    # human aim noise piles shots onto shared pixels: multi-hit area exists
    assert layer_counts.max() >= 2


def test_heatmap_max_one_for_lattice_plan(client, patch_mesh):
    sid = make_session(client, patch_mesh)
    client.post(f"/sessions/{sid}/plan", json={})
    blob = client.get(f"/sessions/{sid}/heatmap", params={"pixel": 0.5}).content
    counts, _ = read_heatmap_layer(blob)
    assert counts.max() == 1  # non-overlapping footprints by construction


# ---------------------------------------------------------------------------
# error contract


def test_unknown_session_404(client):
    assert client.get("/sessions/feedbeef/coverage").status_code == 404
    assert client.post("/sessions/feedbeef/plan", json={}).status_code == 404


def test_malformed_json_body_400(client, patch_mesh):
    sid = make_session(client, patch_mesh)
    r = client.post(
        f"/sessions/{sid}/region",
        content=b"{not json",
        headers={"content-type": "application/json"},
    )
    assert r.status_code == 400


def test_bad_polygon_400_with_field_name(client, patch_mesh):
    sid = client.post("/sessions").json()["session_id"]
    client.post(f"/sessions/{sid}/mesh", content=patch_mesh.read_bytes())
    r = client.post(f"/sessions/{sid}/region", json={"selection": [[0, 0], [1, 1]]})
    assert r.status_code == 400
    assert "selection" in r.json()["detail"]
    r = client.post(
        f"/sessions/{sid}/region",
        json={"selection": SELECTION, "exclusions": [{"boundary": "nope"}]},
    )
    assert r.status_code == 400


def test_bad_mesh_400(client):
    sid = client.post("/sessions").json()["session_id"]
    r = client.post(f"/sessions/{sid}/mesh", content=b"ply\nnot really\n")
    assert r.status_code == 400
    assert client.post(f"/sessions/{sid}/mesh", content=b"").status_code == 400


def test_region_before_mesh_422(client):
    sid = client.post("/sessions").json()["session_id"]
    r = client.post(f"/sessions/{sid}/region", json={"selection": SELECTION})
    assert r.status_code == 422
    assert "no mesh" in r.json()["detail"]["message"]


def test_plan_before_region_422(client, patch_mesh):
    sid = client.post("/sessions").json()["session_id"]
    client.post(f"/sessions/{sid}/mesh", content=patch_mesh.read_bytes())
    assert client.post(f"/sessions/{sid}/plan", json={}).status_code == 422


def test_coverage_before_plan_422(client, patch_mesh):
    sid = make_session(client, patch_mesh)
    assert client.get(f"/sessions/{sid}/coverage").status_code == 422


def test_fully_excluded_selection_422(client, patch_mesh):
    sid = client.post("/sessions").json()["session_id"]
    client.post(f"/sessions/{sid}/mesh", content=patch_mesh.read_bytes())
    hole = geometry.rectangle(0, 0, 64, 74).tolist()
    r = client.post(
        f"/sessions/{sid}/region",
        json={"selection": SELECTION, "exclusions": [{"label": "custom", "boundary": hole}]},
    )
    assert r.status_code == 422
    assert "zero operable" in r.json()["detail"]["message"]


def test_bad_query_pixel_400(client, patch_mesh):
    sid = make_session(client, patch_mesh)
    client.post(f"/sessions/{sid}/plan", json={})
    assert client.get(f"/sessions/{sid}/coverage", params={"pixel": -1}).status_code == 400


def test_concurrent_mutation_409(client, patch_mesh):
    # hold the session's mutation lock as an in-flight request would:
    # every mutating endpoint must refuse with 409, reads still serve
    sid = make_session(client, patch_mesh)
    client.post(f"/sessions/{sid}/plan", json={})
    state = client.app.state.sessions[sid]
    assert state.lock.acquire(blocking=False)
    try:
        assert client.post(f"/sessions/{sid}/plan", json={}).status_code == 409
        assert (
            client.post(f"/sessions/{sid}/simulate", json={"seed": 1}).status_code == 409
        )
        assert (
            client.post(f"/sessions/{sid}/region", json={"selection": SELECTION}).status_code
            == 409
        )
        assert client.get(f"/sessions/{sid}/coverage").status_code == 200
    finally:
        state.lock.release()
    assert client.post(f"/sessions/{sid}/plan", json={}).status_code == 200


# ---------------------------------------------------------------------------
# async trial jobs


def test_trial_job_lifecycle(client):
    body = {
        "n_subjects": 3,
        "pixel_size_mm": 0.3,
        "patches": [
            {"site": "forehead", "width_mm": 30, "height_mm": 30, "curvature_radius_mm": None}
        ],
    }
    r = client.post("/trials", json=body)
    assert r.status_code == 202
    job = r.json()["job_id"]
    for _ in range(300):
        doc = client.get(f"/trials/{job}").json()
        if doc["status"] != "running":
            break
        time.sleep(0.05)
    assert doc["status"] == "done"
    result = doc["result"]
    assert result["format"] == "trial-result/1"
    assert len(result["rows"]) == 3 * 2 * 1
    assert set(result["tests"]) == {"coverage_pct", "shots", "duration"}


def test_trial_job_bad_config_400(client):
    assert client.post("/trials", json={"n_subjects": 1}).status_code == 400


def test_unknown_job_404(client):
    assert client.get("/trials/deadbeef").status_code == 404
