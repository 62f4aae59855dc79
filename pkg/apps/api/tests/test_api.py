from uuid import UUID, uuid4

import pytest
from fastapi.testclient import TestClient

from apps.api.main import app

SMALL = {
    "n_nodes": 20,
    "n_publishers": 5,
    "n_adapters": 3,
    "epochs": 3,
    "rounds_per_epoch": 10,
    "seeds": [0],
}

SMALL_OPTIMAL = {
    "n_nodes": 20,
    "n_publishers": 3,
    "pub_dist": "unif",
    "n_adapters": 1,
    "epochs": 4,
    "rounds_per_epoch": 10,
    "seeds": [0],
}


def test_health_reports_limits() -> None:
    client = TestClient(app)
    res = client.get("/health")
    assert res.status_code == 200
    body = res.json()
    assert body["status"] == "ok"
    assert body["workers"] == 1
    assert body["max_api_graphs"] == 50


def test_every_response_carries_a_correlation_id() -> None:
    client = TestClient(app)
    res = client.get("/health")
    UUID(res.headers["X-Correlation-ID"])
    assert client.get("/health").headers["X-Correlation-ID"] != res.headers["X-Correlation-ID"]


def test_caller_correlation_id_is_reused_when_valid() -> None:
    client = TestClient(app)
    mine = str(uuid4())
    assert client.get("/health", headers={"X-Correlation-ID": mine}).headers[
        "X-Correlation-ID"
    ] == mine
    echoed = client.get("/health", headers={"X-Correlation-ID": "not-a-uuid"})
    assert echoed.headers["X-Correlation-ID"] != "not-a-uuid"
    UUID(echoed.headers["X-Correlation-ID"])


def test_complete_estimates_the_missing_cell() -> None:
    client = TestClient(app)
    res = client.post(
        "/complete",
        json={"values": [[0, 5, 9], [2, 7, None]], "peers": [4, 8, 15], "K": 1, "reg_weight": 1e-6},
    )
    assert res.status_code == 200
    body = res.json()
    assert body["class_counts"]["estimable"] == 1
    assert body["class_counts"]["observed"] == 5
    assert body["classes"][1] == ["observed", "observed", "estimable"]
    [estimate] = body["raw_estimates"]
    assert estimate["row"] == 1
    assert estimate["peer"] == 15
    assert estimate["value"] == pytest.approx(11.0, abs=1e-2)
    assert estimate["ambiguous"] is False
    assert body["converged"] is True
    assert set(body["scores"]) == {"4", "8", "15"}


def test_complete_keeps_symbolic_cells_undefined() -> None:
    client = TestClient(app)
    res = client.post(
        "/complete",
        json={
            "values": [[0, 5, 9], [2, None, None]],
            "symbolic": [[False, False, False], [False, True, False]],
            "K": 1,
        },
    )
    assert res.status_code == 200
    body = res.json()
    assert body["classes"][1] == ["observed", "symbolic", "infeasible"]
    assert body["completed"][1][1] is None
    assert body["raw_estimates"] == []


def test_complete_rejects_bad_grids() -> None:
    client = TestClient(app)
    assert client.post("/complete", json={"values": [[0, 1], [2]]}).status_code == 422
    assert client.post("/complete", json={"values": [[0, 1]], "K": 0}).status_code == 422
    res = client.post("/complete", json={"values": [[0, -1]]})
    assert res.status_code == 400


def test_optimal_study_is_stored_and_listed() -> None:
    client = TestClient(app)
    res = client.post("/experiments/optimal", json={"config": SMALL_OPTIMAL, "n_graphs": 2})
    assert res.status_code == 200
    run = res.json()
    assert run["kind"] == "optimal"
    assert run["result"]["n_graphs"] == 2
    assert len(run["result"]["graphs"]) == 2
    assert run["correlation_id"] == res.headers["X-Correlation-ID"]

    listed = client.get("/experiments").json()
    assert [r["run_id"] for r in listed] == [run["run_id"]]
    assert listed[0]["headline"] == run["result"]["fraction_retained"]

    fetched = client.get(f"/experiments/{run['run_id']}")
    assert fetched.status_code == 200
    assert fetched.json()["result"]["graphs"] == run["result"]["graphs"]


def test_comparison_study_reports_both_strategies() -> None:
    client = TestClient(app)
    res = client.post("/experiments/compare", json=SMALL)
    assert res.status_code == 200
    result = res.json()["result"]
    assert set(result["percentiles"]) == {"goldfish", "perigee"}
    assert len(result["percentiles"]["goldfish"]) == 3
    assert result["digests"]["goldfish"] == result["digests"]["perigee"]


def test_study_size_is_capped(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("GOLDFISH_MAX_API_GRAPHS", "1")
    client = TestClient(app)
    res = client.post("/experiments/optimal", json={"config": SMALL_OPTIMAL, "n_graphs": 2})
    assert res.status_code == 400
    assert "use the CLI" in res.json()["detail"]
    res = client.post("/experiments/compare", json={**SMALL, "seeds": [0, 1]})
    assert res.status_code == 400
    assert client.get("/experiments").json() == []


def test_invalid_config_is_unprocessable() -> None:
    client = TestClient(app)
    res = client.post("/experiments/compare", json={**SMALL, "n_publishers": 50})
    assert res.status_code == 422
    res = client.post("/experiments/compare", json={**SMALL, "topology": "measured"})
    assert res.status_code == 422


def test_unknown_run_is_404() -> None:
    client = TestClient(app)
    assert client.get(f"/experiments/{uuid4()}").status_code == 404
