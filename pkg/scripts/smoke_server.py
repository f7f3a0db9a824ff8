#!/usr/bin/env python3
"""
Smoke test for a running mginf HTTP server.

Posts the example scenarios to each endpoint and checks a few known values.
"""

import json
import math
import sys
from pathlib import Path

import httpx

BASE_URL = "http://localhost:8000"
SCENARIOS = Path(__file__).parent / "scenarios"


def print_section(title):
    """Print a section header."""
    print(f"\n{'=' * 60}")
    print(f"  {title}")
    print(f"{'=' * 60}\n")


def load(name):
    return json.loads((SCENARIOS / name).read_text())


def test_root(client):
    print_section("Testing Root Endpoint")
    response = client.get("/")
    print(f"GET / → Status: {response.status_code}")
    assert response.status_code == 200
    assert response.json()["status"] == "ok"


def test_moments(client):
    print_section("Testing /moments (M|M|∞, rho = 1)")
    response = client.post("/moments", json=load("exponential.json"))
    response.raise_for_status()
    for row in response.json():
        print(f"t={row['t']:<6g} mean={row['mean']:.9f} variance={row['variance']:.9f}")
        assert abs(row["mean"] - 1.0) < 1e-9


def test_busy_period(client):
    print_section("Testing /busy-period (closed form)")
    response = client.post("/busy-period", json=load("beta_constant.json"))
    response.raise_for_status()
    sidecar = response.json()["sidecar"]
    print(f"atom={sidecar['atom_at_zero']:.6f} mean={sidecar['mean']:.6f}")
    assert abs(sidecar["mean"] - (math.e - 1.0)) < 1e-6


def test_check_monotone(client):
    print_section("Testing /check-monotone (constant-variance law)")
    response = client.post("/check-monotone?kind=variance", json=load("constant_variance.json"))
    response.raise_for_status()
    report = response.json()
    print(f"holds={report['condition_holds_everywhere']} derivative_min={report['derivative_min']:.3g}")
    assert report["condition_holds_everywhere"]


def main():
    try:
        with httpx.Client(base_url=BASE_URL, timeout=120.0) as client:
            test_root(client)
            test_moments(client)
            test_busy_period(client)
            test_check_monotone(client)
    except httpx.ConnectError:
        print("\n[ERROR] Could not connect to server!")
        print("Please start the server first:")
        print("  uvicorn src.mginf.server:app --reload --port 8000")
        return 1
    except (AssertionError, httpx.HTTPStatusError) as e:
        print(f"\n[ERROR] Smoke test failed: {e!r}")
        return 1

    print("\n[OK] Server answers every endpoint.\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
