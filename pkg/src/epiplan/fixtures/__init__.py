"""Bundled synthetic fixtures: knowledge base, scenarios, and gold checklists."""

from __future__ import annotations

import json
from pathlib import Path

FIXTURES_ROOT = Path(__file__).parent


def kb_dir() -> Path:
    return FIXTURES_ROOT / "kb"


def scenarios_dir() -> Path:
    return FIXTURES_ROOT / "scenarios"


def checklists_dir() -> Path:
    return FIXTURES_ROOT / "checklists"


def load_scenario(scenario_id: str) -> dict:
    path = scenarios_dir() / f"{scenario_id}.json"
    return json.loads(path.read_text(encoding="utf-8"))


def load_all_scenarios() -> list[dict]:
    return [json.loads(p.read_text(encoding="utf-8")) for p in sorted(scenarios_dir().glob("*.json"))]
