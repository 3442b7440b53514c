import time

import pytest
from fastapi.testclient import TestClient

from admmnet.service import create_app


@pytest.fixture
def client():
    return TestClient(create_app())


def blobs_request(**overrides):
    body = {
        "synthetic": {"kind": "blobs", "n_samples": 60, "n_features": 2,
                      "classes": 2, "separation": 6.0},
        "arch": [2, 6, 2],
        "warmup_iters": 3,
        "train_iters": 5,
        "test_fraction": 0.0,
    }
    body.update(overrides)
    return body


def wait_finished(client, run_id, timeout=30.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        status = client.get(f"/runs/{run_id}").json()
        if status["state"] in ("finished", "failed"):
            return status
        time.sleep(0.02)
    raise TimeoutError(f"run {run_id} did not finish")


class TestSubmit:
    def test_accepted_and_finishes(self, client):
        resp = client.post("/runs", json=blobs_request())
        assert resp.status_code == 202
        status = wait_finished(client, resp.json()["run_id"])
        assert status["state"] == "finished"
        assert status["iterations_done"] == 8
        assert status["final"]["train_accuracy"] >= 0.9

    def test_arch_class_mismatch_rejected(self, client):
        resp = client.post("/runs", json=blobs_request(arch=[2, 6, 3]))
        assert resp.status_code == 422

    def test_validation_error(self, client):
        resp = client.post("/runs", json=blobs_request(gamma=-1.0))
        assert resp.status_code == 422

    def test_distributed_run(self, client):
        resp = client.post("/runs", json=blobs_request(workers=3))
        assert resp.status_code == 202
        status = wait_finished(client, resp.json()["run_id"])
        assert status["state"] == "finished"


class TestQueries:
    def test_unknown_run_404(self, client):
        assert client.get("/runs/deadbeef").status_code == 404
        assert client.get("/runs/deadbeef/metrics").status_code == 404

    def test_list_runs(self, client):
        run_id = client.post("/runs", json=blobs_request()).json()["run_id"]
        wait_finished(client, run_id)
        listing = client.get("/runs").json()
        assert [r["run_id"] for r in listing["runs"]] == [run_id]

    def test_metrics_history(self, client):
        run_id = client.post("/runs", json=blobs_request()).json()["run_id"]
        wait_finished(client, run_id)
        history = client.get(f"/runs/{run_id}/metrics").json()["history"]
        assert [r["iteration"] for r in history] == list(range(1, 9))
        assert history[-1]["test_accuracy"] is None


class TestPredict:
    def test_predicts_classes(self, client):
        run_id = client.post("/runs", json=blobs_request()).json()["run_id"]
        wait_finished(client, run_id)
        resp = client.post(
            f"/runs/{run_id}/predict",
            json={"samples": [[0.0, 0.0], [1.0, -1.0]]},
        )
        assert resp.status_code == 200
        body = resp.json()
        assert len(body["classes"]) == 2
        assert all(c in (0, 1) for c in body["classes"])

    def test_conflict_before_finish(self, client):
        run_id = client.post(
            "/runs", json=blobs_request(train_iters=400, warmup_iters=400,
                                        synthetic={"kind": "blobs",
                                                   "n_samples": 2000})
        ).json()["run_id"]
        resp = client.post(f"/runs/{run_id}/predict", json={"samples": [[0.0, 0.0]]})
        assert resp.status_code == 409
        wait_finished(client, run_id, timeout=120.0)

    def test_feature_mismatch(self, client):
        run_id = client.post("/runs", json=blobs_request()).json()["run_id"]
        wait_finished(client, run_id)
        resp = client.post(f"/runs/{run_id}/predict", json={"samples": [[1.0]]})
        assert resp.status_code == 422


def test_failed_run_reports_error(client):
    # arch input width disagrees with the feature count -> background failure
    resp = client.post("/runs", json=blobs_request(arch=[3, 6, 2]))
    assert resp.status_code == 202
    status = wait_finished(client, resp.json()["run_id"])
    assert status["state"] == "failed"
    assert "features" in status["error"]
