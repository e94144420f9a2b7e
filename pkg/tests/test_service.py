import base64

import numpy as np
import pytest
from fastapi.testclient import TestClient

from attnedit.grids import deserialize_grid, serialize_grid
from attnedit.pipeline import EditConfig, EditRequest, baseline_roundtrip, run_edit
from attnedit.service import create_app

from conftest import random_grid

SMALL_CFG = {"inversion_steps": 4, "edit_step": 2, "hidden": 8, "d_k": 4, "heads": 1}


@pytest.fixture()
def client():
    return TestClient(create_app())


def make_session(client, **kw):
    body = {"scene": "blob-8x8", "config": SMALL_CFG}
    body.update(kw)
    r = client.post("/sessions", json=body)
    assert r.status_code == 200, r.text
    return r.json()


class TestSessions:
    def test_named_scene(self, client):
        info = make_session(client)
        assert info["status"] == "created"
        assert (info["height"], info["width"]) == (8, 8)

    def test_idempotent_token(self, client):
        a = make_session(client, request_token="tok")
        b = make_session(client, request_token="tok")
        assert a["id"] == b["id"]

    def test_uploaded_grid_dims_echoed(self, client):
        g = random_grid(1, 2, 5, 7)
        b64 = base64.b64encode(serialize_grid(g)).decode()
        r = client.post("/sessions", json={"grid_b64": b64, "config": SMALL_CFG})
        assert r.status_code == 200
        assert (r.json()["channels"], r.json()["height"], r.json()["width"]) == (2, 5, 7)

    def test_malformed_grid(self, client):
        r = client.post("/sessions", json={"grid_b64": base64.b64encode(b"junk").decode()})
        assert r.status_code == 400
        assert r.json()["code"] == "invalid_grid"

    def test_unknown_scene(self, client):
        r = client.post("/sessions", json={"scene": "nope"})
        assert r.status_code == 400
        assert r.json()["field"] == "scene"

    def test_missing_input(self, client):
        r = client.post("/sessions", json={})
        assert r.status_code == 400

    def test_unknown_session(self, client):
        r = client.get("/sessions/zzz")
        assert r.status_code == 404
        assert r.json()["code"] == "session_not_found"


class TestAttention:
    def test_weights_sum_to_one(self, client):
        sid = make_session(client)["id"]
        r = client.get(f"/sessions/{sid}/attention", params={"x": 3, "y": 4})
        assert r.status_code == 200
        w = np.array(r.json()["weights"])
        assert w.shape == (8, 8)
        assert abs(w.sum() - 1.0) < 1e-6

    def test_uniform_hook(self, client):
        cfg = dict(SMALL_CFG, zero_weights=True)
        sid = make_session(client, config=cfg)["id"]
        w = np.array(client.get(f"/sessions/{sid}/attention",
                                params={"x": 0, "y": 0}).json()["weights"])
        assert np.allclose(w, 1 / 64)

    def test_matches_direct_library_call(self, client):
        from attnedit.attention import aggregate_records
        from attnedit.diffusion import build_weights, ddim_invert
        from attnedit.scenes import NAMED_SCENES

        sid = make_session(client)["id"]
        got = np.array(client.get(f"/sessions/{sid}/attention",
                                  params={"x": 2, "y": 5}).json()["weights"])
        grid = NAMED_SCENES["blob-8x8"]().grid
        cfg = EditConfig.from_json(SMALL_CFG)
        dcfg = cfg.denoiser_config(grid)
        trace = ddim_invert(grid, cfg.inversion_steps, dcfg, cfg.schedule(),
                            build_weights(dcfg))
        expected = aggregate_records(trace.records)[5 * 8 + 2].reshape(8, 8)
        assert np.max(np.abs(got - expected)) < 1e-9

    def test_out_of_bounds(self, client):
        sid = make_session(client)["id"]
        r = client.get(f"/sessions/{sid}/attention", params={"x": 8, "y": 0})
        assert r.status_code == 400
        assert r.json()["code"] == "out_of_bounds"

    def test_ppm_format(self, client):
        sid = make_session(client)["id"]
        r = client.get(f"/sessions/{sid}/attention",
                       params={"x": 1, "y": 1, "format": "ppm"})
        assert r.content.startswith(b"P6\n8 8\n255\n")


class TestMaskPreview:
    def test_huge_tau_handle_only(self, client):
        sid = make_session(client)["id"]
        r = client.get(f"/sessions/{sid}/mask", params={"x": 3, "y": 4, "tau": 1e6})
        bits = np.array(r.json()["bits"])
        assert bits.sum() == 1 and bits[4, 3] == 1

    def test_nested_across_tau(self, client):
        sid = make_session(client)["id"]
        prev = None
        for tau in (2.1, 2.0, 1.9, 1.8, 1.0):
            bits = np.array(client.get(f"/sessions/{sid}/mask",
                                       params={"x": 3, "y": 4, "tau": tau}).json()["bits"])
            if prev is not None:
                assert np.all(prev <= bits)
            prev = bits

    def test_invalid_tau(self, client):
        sid = make_session(client)["id"]
        r = client.get(f"/sessions/{sid}/mask", params={"x": 1, "y": 1, "tau": 0})
        assert r.status_code == 400
        assert r.json()["field"] == "tau"


class TestEdits:
    POINTS = [{"handle": {"x": 3, "y": 4}, "target": {"x": 5, "y": 4}}]

    def test_zero_drag_equals_baseline(self, client):
        from attnedit.scenes import NAMED_SCENES

        sid = make_session(client)["id"]
        pts = [{"handle": {"x": 3, "y": 4}, "target": {"x": 3, "y": 4}}]
        r = client.post(f"/sessions/{sid}/edits", json={"points": pts})
        out = deserialize_grid(client.get(r.json()["result_url"]).content)
        cfg = EditConfig.from_json(SMALL_CFG)
        base = baseline_roundtrip(NAMED_SCENES["blob-8x8"]().grid, cfg)
        assert np.max(np.abs(out.values - base.values)) < 1e-6  # f32 wire

    def test_api_matches_library_bytes(self, client):
        from attnedit.scenes import NAMED_SCENES

        sid = make_session(client)["id"]
        r = client.post(f"/sessions/{sid}/edits", json={"points": self.POINTS})
        body = client.get(r.json()["result_url"]).content
        cfg = EditConfig.from_json(SMALL_CFG)
        from attnedit.movement import DragInstruction
        from attnedit.grids import Point
        rep = run_edit(EditRequest(grid=NAMED_SCENES["blob-8x8"]().grid,
                                   instructions=(DragInstruction(Point(3, 4), Point(5, 4)),),
                                   config=cfg))
        assert body == serialize_grid(rep.output)

    def test_edits_are_versioned_not_mutated(self, client):
        sid = make_session(client)["id"]
        r0 = client.post(f"/sessions/{sid}/edits", json={"points": self.POINTS})
        r1 = client.post(f"/sessions/{sid}/edits", json={
            "points": [{"handle": {"x": 3, "y": 4}, "target": {"x": 2, "y": 2}}]})
        assert (r0.json()["n"], r1.json()["n"]) == (0, 1)
        b0 = client.get(f"/sessions/{sid}/edits/0/result").content
        b0_again = client.get(f"/sessions/{sid}/edits/0/result").content
        assert b0 == b0_again

    def test_identical_request_identical_bytes(self, client):
        sid = make_session(client)["id"]
        r0 = client.post(f"/sessions/{sid}/edits", json={"points": self.POINTS})
        r1 = client.post(f"/sessions/{sid}/edits", json={"points": self.POINTS})
        a = client.get(r0.json()["result_url"]).content
        b = client.get(r1.json()["result_url"]).content
        assert a == b

    def test_inpaint_via_mask_body(self, client):
        sid = make_session(client)["id"]
        bits = [[0] * 8 for _ in range(8)]
        bits[4][3] = 1
        r = client.post(f"/sessions/{sid}/edits", json={
            "mask": {"height": 8, "width": 8, "bits": bits}})
        assert r.status_code == 200
        assert r.json()["blanks_filled"] == 1

    def test_validation_error_fields(self, client):
        sid = make_session(client)["id"]
        r = client.post(f"/sessions/{sid}/edits", json={
            "points": [{"handle": {"x": 99, "y": 0}, "target": {"x": 0, "y": 0}}]})
        assert r.status_code == 400
        r2 = client.post(f"/sessions/{sid}/edits", json={"points": []})
        assert r2.status_code == 400

    def test_missing_edit_404(self, client):
        sid = make_session(client)["id"]
        assert client.get(f"/sessions/{sid}/edits/5/result").status_code == 404

    def test_result_ppm(self, client):
        sid = make_session(client)["id"]
        client.post(f"/sessions/{sid}/edits", json={"points": self.POINTS})
        assert client.get(f"/sessions/{sid}/edits/0/result.ppm").content.startswith(b"P6\n")
