from tests.conftest import FIXTURES

SMALL = {"samples": 2000}


def test_check_script(client):
    response = client.post("/api/scripts/check", json={"text": (FIXTURES / "abs_chi.pos").read_text()})
    assert response.status_code == 200
    data = response.json()
    assert data["statements"] == 7
    assert data["kinds"][0] == "domain"


def test_check_syntax_error(client):
    response = client.post("/api/scripts/check", json={"text": "domain t in [-1, 1];\nbase_gen 1 - s;\n"})
    assert response.status_code == 400
    detail = response.json()["detail"]
    assert detail["error"] == "ScriptSyntaxError"
    assert detail["details"]["line"] == 2
    assert detail["details"]["column"] == 14


def test_format_script(client):
    response = client.post("/api/scripts/fmt", json={"text": "domain t in [0,1];base_gen t;"})
    assert response.status_code == 200
    assert response.json()["text"] == "domain t in [0, 1];\nbase_gen t;\n"


def test_run_script(client):
    payload = {"text": (FIXTURES / "abs_chi.pos").read_text(), "source": "abs_chi.pos", "seed": 5, **SMALL}
    response = client.post("/api/scripts/run", json=payload)
    assert response.status_code == 200
    data = response.json()
    assert data["report"]["exit_code"] == 0
    assert data["report"]["seed"] == 5
    assert data["report"]["final_mode"] == "closure"
    assert data["tower"].startswith("tower v1")
    assert len(data["certificates"]) == 1
    assert data["text"].startswith("run report for abs_chi.pos")


def test_run_failure_is_reported(client):
    payload = {"text": (FIXTURES / "isolated_zero_bad.pos").read_text(), **SMALL}
    response = client.post("/api/scripts/run", json=payload)
    assert response.status_code == 200
    report = response.json()["report"]
    assert report["exit_code"] == 2
    assert report["outcomes"][-1]["witness"] == "t=0"


def test_run_validation(client):
    response = client.post("/api/scripts/run", json={"text": "domain t in [0, 1];", "samples": 0})
    assert response.status_code == 422
    assert response.json()["error"]["code"] == "VALIDATION_ERROR"


def test_health(client):
    assert client.get("/health").json()["status"] == "healthy"
    assert client.get("/api/system/health").status_code == 200


def test_capabilities(client):
    data = client.get("/api/system/capabilities").json()
    assert "chi" in data["adjunctions"]
    assert "comp" in data["checks"]
    assert set(data["libraries"]) == {"numpy", "scipy", "sympy"}
