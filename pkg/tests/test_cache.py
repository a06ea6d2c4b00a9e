import json
from dataclasses import replace

import pytest

from app.cli.run_config import load_run_config
from app.core.errors import CacheMismatch, IoError, ParseError
from app.core.planner import build_graph, plan_task
from app.core.sampling import default_grasp_set
from app.core.scene import load_scene, load_task
from app.services.graph_cache import build_hash, load_cache, save_cache

from conftest import fixture_path


@pytest.fixture(scope="module")
def task1():
    config = load_run_config(fixture_path("task1_run.json"))
    scene = load_scene(config.scene)
    grasps = default_grasp_set(scene)
    settings = config.graph_settings()
    result = build_graph(scene, grasps, config.discretization, settings)
    digest = build_hash(scene, grasps, config.discretization, settings)
    return config, scene, grasps, result, digest


def test_cache_files_are_deterministic(task1, tmp_path):
    _, _, _, result, digest = task1
    save_cache(tmp_path / "a.json", result, digest)
    save_cache(tmp_path / "b.json", result, digest)
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_reloaded_graph_plans_the_same_path(task1, tmp_path):
    config, scene, grasps, result, digest = task1
    save_cache(tmp_path / "graph.json", result, digest)
    loaded = load_cache(tmp_path / "graph.json", grasps, digest)

    assert loaded.candidates == result.candidates
    assert loaded.graph.node_counts() == result.graph.node_counts()
    assert loaded.graph.edge_counts() == result.graph.edge_counts()
    assert len(loaded.rejected) == len(result.rejected)
    for edge in result.graph.edges():
        assert loaded.graph.edge(edge.source, edge.target) == edge

    task = load_task(scene, config.task)
    fresh = plan_task(scene, result.graph, task)
    cached = plan_task(scene, loaded.graph, task)
    assert [n.id for n in cached.nodes] == [n.id for n in fresh.nodes]
    assert cached.edges == fresh.edges
    assert cached.cost == fresh.cost


def test_changed_scene_changes_the_hash(task1):
    config, scene, grasps, _, digest = task1
    heavier = replace(scene, object=replace(scene.object, mass=scene.object.mass * 2))
    assert build_hash(heavier, grasps, config.discretization, config.graph_settings()) != digest
    fewer = build_hash(scene, grasps[:3], config.discretization, config.graph_settings())
    assert fewer != digest


def test_stale_cache_is_rejected(task1, tmp_path):
    _, _, grasps, result, digest = task1
    save_cache(tmp_path / "graph.json", result, digest)
    with pytest.raises(CacheMismatch):
        load_cache(tmp_path / "graph.json", grasps, "0" * 64)


def test_cache_version_is_checked(task1, tmp_path):
    _, _, grasps, result, digest = task1
    path = tmp_path / "graph.json"
    save_cache(path, result, digest)
    data = json.loads(path.read_text(encoding="utf-8"))
    data["version"] = -1
    path.write_text(json.dumps(data), encoding="utf-8")
    with pytest.raises(CacheMismatch):
        load_cache(path, grasps, digest)


def test_broken_cache_files(task1, tmp_path):
    _, _, grasps, result, digest = task1
    path = tmp_path / "graph.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ParseError):
        load_cache(path, grasps, digest)

    path.write_text(json.dumps({"format": "something else"}), encoding="utf-8")
    with pytest.raises(ParseError):
        load_cache(path, grasps, digest)

    save_cache(path, result, digest)
    data = json.loads(path.read_text(encoding="utf-8"))
    del data["nodes"][0]["pose"]
    path.write_text(json.dumps(data), encoding="utf-8")
    with pytest.raises(ParseError):
        load_cache(path, grasps, digest)

    with pytest.raises(IoError):
        load_cache(tmp_path / "missing.json", grasps, digest)
