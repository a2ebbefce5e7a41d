"""
Tests for the REST API.
"""

import copy

import pytest
from fastapi.testclient import TestClient

from weakpath import __version__
from weakpath.api import app
from weakpath.fixtures import FIXTURES


@pytest.fixture
def client():
    return TestClient(app)


class TestAPI:
    """Test suite for the FastAPI app."""

    def test_root(self, client):
        """Test the root endpoint answers."""
        response = client.get("/")
        assert response.status_code == 200
        assert response.json() == {"message": "weakpath API ready"}

    def test_health(self, client):
        """Test the health check reports the version."""
        body = client.get("/health").json()
        assert body["status"] == "healthy"
        assert body["version"] == __version__

    def test_scenarios(self, client):
        """Test every scenario has a fixture."""
        body = client.get("/scenarios").json()
        assert set(body["scenarios"]) == set(body["fixtures"])

    def test_fixture(self, client):
        """Test a fixture config is served as JSON."""
        response = client.get("/fixtures/interferometer")
        assert response.status_code == 200
        assert response.json()["scenario"] == "interferometer"

    def test_unknown_fixture(self, client):
        """Test unknown fixtures are 404."""
        assert client.get("/fixtures/tunnelling").status_code == 404

    def test_run(self, client):
        """Test running the interferometer fixture."""
        response = client.post("/run", json=FIXTURES["interferometer"])
        assert response.status_code == 200
        body = response.json()
        assert body["scenario"] == "interferometer"
        assert body["result"]["sites"]["C"]["Re"] == pytest.approx(0.5)

    def test_run_is_cached(self, client):
        """Test a repeated config returns the same result."""
        first = client.post("/run", json=FIXTURES["interferometer"]).json()["result"]
        second = client.post("/run", json=FIXTURES["interferometer"]).json()["result"]
        assert first == second

    def test_bad_config(self, client):
        """Test config errors are 422 with the offending key path."""
        config = copy.deepcopy(FIXTURES["interferometer"])
        config["parameters"]["mirrors"] = 3
        response = client.post("/run", json=config)
        assert response.status_code == 422
        assert response.json()["detail"]["key_path"] == ["parameters", "mirrors"]

    def test_physics_error(self, client):
        """Test physics rejections are 400 with the error type."""
        config = copy.deepcopy(FIXTURES["interferometer"])
        config["parameters"]["b_f"] = [0.0, 0.0, 1.0]
        response = client.post("/run", json=config)
        assert response.status_code == 400
        assert response.json()["detail"]["type"] == "DenominatorUnderflowError"
