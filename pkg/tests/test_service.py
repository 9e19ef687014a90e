"""Session service: endpoints, revisions, coalescing, program equivalence."""

import json
import struct

import numpy as np
import pytest
from fastapi.testclient import TestClient

from sculpt3d.deform import HandleDeformer, Pose, Skeleton, Joint, quat_about_axis
from sculpt3d.deform import rig_to_record
from sculpt3d.mesh import load_obj, make_box, make_cylinder, save_obj
from sculpt3d.render import load_color_png, load_depth_png, load_mask_png
from sculpt3d.service import create_app, decode_mesh_buffers


@pytest.fixture()
def client(tmp_path):
    app = create_app(artifact_root=tmp_path / "artifacts")
    with TestClient(app) as c:
        yield c


def cube_obj_bytes(tmp_path):
    path = tmp_path / "cube.obj"
    save_obj(make_box(), path)
    return path.read_bytes()


def make_session(client):
    resp = client.post("/sessions")
    assert resp.status_code == 201
    return resp.json()["id"]


def upload(client, sid, body):
    return client.post(
        f"/sessions/{sid}/meshes", content=body,
        headers={"content-type": "text/plain"})


HANDLE_IDS = [0, 1, 2, 6]


def handles_record(mesh):
    return {
        "type": "handles",
        "vertex_ids": HANDLE_IDS,
        "targets": mesh.positions[HANDLE_IDS].tolist(),
    }


def pulled_targets(mesh):
    t = mesh.positions[HANDLE_IDS].copy()
    t[:, 1] += 0.4
    return t


# ---------------------------------------------------------------------------
# lifecycle and geometry


def test_create_session(client):
    resp = client.post("/sessions")
    assert resp.status_code == 201
    sid = resp.json()["id"]
    assert isinstance(sid, str) and sid
    info = client.get(f"/sessions/{sid}")
    assert info.status_code == 200
    assert info.json()["revision"] == 0
    assert info.json()["instances"] == []


def test_unknown_session_404(client):
    assert client.get("/sessions/nope").status_code == 404
    assert client.post("/sessions/nope/render").status_code == 404


def test_upload_names_first_instance_model(client, tmp_path):
    sid = make_session(client)
    resp = upload(client, sid, cube_obj_bytes(tmp_path))
    assert resp.status_code == 201
    body = resp.json()
    assert body["instance"] == "model"
    assert body["revision"] == 1
    second = upload(client, sid, cube_obj_bytes(tmp_path))
    assert second.json()["instance"] == "model-2"
    info = client.get(f"/sessions/{sid}").json()
    assert info["instances"] == ["model", "model-2"]


def test_upload_rejects_bad_obj(client):
    sid = make_session(client)
    resp = upload(client, sid, b"v 0 0\nf 1 2 3\n")
    assert resp.status_code == 400
    assert "detail" in resp.json()


def test_mesh_binary_round_trip(client, tmp_path):
    sid = make_session(client)
    upload(client, sid, cube_obj_bytes(tmp_path))
    resp = client.get(f"/sessions/{sid}/instances/model/mesh")
    assert resp.status_code == 200
    assert resp.headers["content-type"] == "application/octet-stream"
    positions, triangles = decode_mesh_buffers(resp.content)
    box = make_box()
    assert np.array_equal(positions, box.positions.astype("<f4"))
    assert np.array_equal(triangles, box.triangles.astype("<u4"))
    # layout words: little-endian u32 counts, f32 positions, u32 indices
    nv, nt = struct.unpack_from("<II", resp.content)
    assert (nv, nt) == (box.n_vertices, box.n_triangles)


def test_mesh_unknown_instance_404(client, tmp_path):
    sid = make_session(client)
    upload(client, sid, cube_obj_bytes(tmp_path))
    resp = client.get(f"/sessions/{sid}/instances/ghost/mesh")
    assert resp.status_code == 404
    assert "ghost" in resp.json()["detail"]


# ---------------------------------------------------------------------------
# rig + deform


def test_handle_deform_matches_direct_solver_bitwise(client, tmp_path):
    sid = make_session(client)
    upload(client, sid, cube_obj_bytes(tmp_path))
    box = make_box()
    rig = handles_record(box)
    r = client.post(f"/sessions/{sid}/instances/model/rig", json=rig)
    assert r.status_code == 200
    assert r.json()["rig"] == "handles"

    targets = pulled_targets(box)
    r = client.post(
        f"/sessions/{sid}/instances/model/deform",
        json={"targets": targets.tolist()},
    )
    assert r.status_code == 200
    rev = r.json()["revision"]

    direct = HandleDeformer(HANDLE_IDS).fit(box).transform(targets)
    got = client.get(f"/sessions/{sid}/instances/model/mesh", params={"rev": rev})
    positions, triangles = decode_mesh_buffers(got.content)
    assert np.array_equal(positions, direct.positions.astype("<f4"))
    assert np.array_equal(triangles, direct.triangles.astype("<u4"))


def test_skeleton_and_cage_deform(client, tmp_path):
    sid = make_session(client)
    cyl = make_cylinder(radius=0.3, height=2.0, segments=12, rings=8)
    path = tmp_path / "cyl.obj"
    save_obj(cyl, path)
    upload(client, sid, path.read_bytes())
    root = np.eye(4); root[1, 3] = -1.0
    mid = np.eye(4); mid[1, 3] = 1.0
    skeleton = Skeleton([Joint("root", None, root), Joint("mid", 0, mid)])
    r = client.post(
        f"/sessions/{sid}/instances/model/rig", json=rig_to_record(skeleton))
    assert r.status_code == 200 and r.json()["rig"] == "skeleton"
    quat = quat_about_axis([0, 0, 1], 35.0)
    r = client.post(
        f"/sessions/{sid}/instances/model/deform",
        json={"rotations": {"mid": list(quat)}},
    )
    assert r.status_code == 200
    got = client.get(f"/sessions/{sid}/instances/model/mesh")
    positions, _ = decode_mesh_buffers(got.content)
    from sculpt3d.deform import SkeletonDeformer
    pose = Pose.identity(2)
    pose.rotations[1] = quat
    direct = SkeletonDeformer(skeleton).fit(cyl).transform(pose)
    assert np.array_equal(positions, direct.positions.astype("<f4"))

    # unknown joint is a client error naming the joint
    r = client.post(
        f"/sessions/{sid}/instances/model/deform",
        json={"rotations": {"elbow": [1, 0, 0, 0]}},
    )
    assert r.status_code == 400 and "elbow" in r.json()["detail"]


def test_deform_unknown_instance_404_names_instance(client, tmp_path):
    sid = make_session(client)
    upload(client, sid, cube_obj_bytes(tmp_path))
    r = client.post(
        f"/sessions/{sid}/instances/missing-thing/deform", json={"targets": []})
    assert r.status_code == 404
    assert "missing-thing" in r.json()["detail"]


def test_deform_without_rig_400(client, tmp_path):
    sid = make_session(client)
    upload(client, sid, cube_obj_bytes(tmp_path))
    r = client.post(
        f"/sessions/{sid}/instances/model/deform", json={"targets": [[0, 0, 0]]})
    assert r.status_code == 400
    assert "rig" in r.json()["detail"]


def test_deform_payload_must_match_rig(client, tmp_path):
    sid = make_session(client)
    upload(client, sid, cube_obj_bytes(tmp_path))
    client.post(
        f"/sessions/{sid}/instances/model/rig", json=handles_record(make_box()))
    r = client.post(
        f"/sessions/{sid}/instances/model/deform",
        json={"rotations": {"root": [1, 0, 0, 0]}},
    )
    assert r.status_code == 400
    assert "handles" in r.json()["detail"]


def test_rig_conflicts_with_inflight_solve(client, tmp_path):
    sid = make_session(client)
    upload(client, sid, cube_obj_bytes(tmp_path))
    store = client.app.state.store
    session = store.get(sid)
    with session.write_lock:  # simulate a solve holding the writer slot
        r = client.post(
            f"/sessions/{sid}/instances/model/rig",
            json=handles_record(make_box()))
    assert r.status_code == 409
    # lock released: same request now succeeds
    r = client.post(
        f"/sessions/{sid}/instances/model/rig", json=handles_record(make_box()))
    assert r.status_code == 200


# ---------------------------------------------------------------------------
# revision history


def test_revisions_keep_last_two(client, tmp_path):
    sid = make_session(client)
    upload(client, sid, cube_obj_bytes(tmp_path))          # rev 1
    box = make_box()
    client.post(
        f"/sessions/{sid}/instances/model/rig", json=handles_record(box))  # rev 2
    targets = pulled_targets(box)
    client.post(
        f"/sessions/{sid}/instances/model/deform",
        json={"targets": targets.tolist()})                 # rev 3
    url = f"/sessions/{sid}/instances/model/mesh"
    assert client.get(url, params={"rev": 3}).status_code == 200
    assert client.get(url, params={"rev": 2}).status_code == 200
    stale = client.get(url, params={"rev": 1})
    assert stale.status_code == 404
    assert "1" in stale.json()["detail"]
    assert client.get(url, params={"rev": 99}).status_code == 404
    # rev 2 (pre-deform) still serves the undeformed cube
    positions, _ = decode_mesh_buffers(
        client.get(url, params={"rev": 2}).content)
    assert np.array_equal(positions, box.positions.astype("<f4"))


# ---------------------------------------------------------------------------
# render + artifacts


def test_render_writes_three_artifacts(client, tmp_path):
    sid = make_session(client)
    upload(client, sid, cube_obj_bytes(tmp_path))
    r = client.post(f"/sessions/{sid}/render")
    assert r.status_code == 200
    body = r.json()
    urls = [body["color"], body["depth"], body["mask"]]
    images = []
    for url in urls:
        resp = client.get(url)
        assert resp.status_code == 200, url
        images.append(resp.content)
    color = client.get(body["color"]).content
    # artifacts decode and agree on dimensions
    import io
    from PIL import Image

    dims = {Image.open(io.BytesIO(blob)).size for blob in images}
    assert dims == {(512, 384)}
    meta = client.get(body["depth"] + ".meta")
    assert meta.status_code == 200
    lo, hi = map(float, meta.text.split())
    assert 0 < lo <= hi


def test_render_empty_session_still_renders_background(client):
    sid = make_session(client)
    r = client.post(f"/sessions/{sid}/render")
    assert r.status_code == 200
    mask_url = r.json()["mask"]
    from PIL import Image
    import io

    mask = np.asarray(Image.open(io.BytesIO(client.get(mask_url).content)))
    assert (mask == 0).all()


# ---------------------------------------------------------------------------
# enhancement endpoint


def test_enhance_runs_and_audits(client, tmp_path):
    sid = make_session(client)
    upload(client, sid, cube_obj_bytes(tmp_path))
    r = client.post(
        f"/sessions/{sid}/enhance",
        json={
            "config": {
                "T": 10,
                "tau_f": 0.2,
                "tau_A": 0.5,
                "refiner_fraction": 0.1,
                "feature_layers": ["down0"],
                "attention_layers": ["down0", "down1", "mid"],
                "schedule": {"kind": "linear", "beta_start": 0.001,
                             "beta_end": 0.1},
            },
            "prompt": "an ornate cube",
        },
    )
    assert r.status_code == 200
    body = r.json()
    assert body["steps"] == 10
    audit = client.get(body["audit"])
    assert audit.status_code == 200
    lines = [json.loads(l) for l in audit.text.splitlines()]
    assert len(lines) == 11
    assert lines[0]["step"] == 10
    assert lines[-1] == {
        "step": 0, "predictor": "identity-decoder", "overridden_layers": []}
    assert sum(1 for l in lines
               if any(n.startswith("A:") for n in l["overridden_layers"])) == 5
    enhanced = client.get(body["enhanced"])
    assert enhanced.status_code == 200


def test_enhance_rejects_unknown_predictor(client, tmp_path):
    sid = make_session(client)
    upload(client, sid, cube_obj_bytes(tmp_path))
    r = client.post(
        f"/sessions/{sid}/enhance", json={"predictor": "sdxl-turbo"})
    assert r.status_code == 400
    assert "sdxl-turbo" in r.json()["detail"]


# ---------------------------------------------------------------------------
# websocket stream: coalescing + ordering


def ws_deform_msg(seq, targets):
    return {
        "type": "deform",
        "instance": "model",
        "seq": seq,
        "targets": np.asarray(targets).tolist(),
    }


def drain_revision(ws):
    """Read one revision announcement plus its binary frame."""
    header = ws.receive_json()
    assert header["type"] == "revision"
    blob = ws.receive_bytes()
    return header, blob


def test_stream_solves_and_streams_buffers(client, tmp_path):
    sid = make_session(client)
    upload(client, sid, cube_obj_bytes(tmp_path))
    box = make_box()
    client.post(
        f"/sessions/{sid}/instances/model/rig", json=handles_record(box))
    targets = pulled_targets(box)
    with client.websocket_connect(f"/sessions/{sid}/stream") as ws:
        ws.send_json(ws_deform_msg(1, targets))
        header, blob = drain_revision(ws)
        assert header["seq"] == 1
        assert header["instance"] == "model"
        positions, triangles = decode_mesh_buffers(blob)
        direct = HandleDeformer(HANDLE_IDS).fit(box).transform(targets)
        assert np.array_equal(positions, direct.positions.astype("<f4"))
        assert np.array_equal(triangles, direct.triangles.astype("<u4"))


def test_stream_coalesces_rapid_messages(client, tmp_path):
    sid = make_session(client)
    upload(client, sid, cube_obj_bytes(tmp_path))
    box = make_box()
    client.post(
        f"/sessions/{sid}/instances/model/rig", json=handles_record(box))
    t1 = pulled_targets(box)
    t2 = pulled_targets(box) + [0.0, 0.2, 0.0]
    session = client.app.state.store.get(sid)
    with client.websocket_connect(f"/sessions/{sid}/stream") as ws:
        # hold the writer slot, as an in-flight solve would, so both
        # messages arrive before the stream can dispatch anything
        session.write_lock.acquire()
        try:
            ws.send_json(ws_deform_msg(1, t1))
            ws.send_json(ws_deform_msg(2, t2))
        finally:
            session.write_lock.release()
        header, blob = drain_revision(ws)
        # only the latest was solved; the first is acknowledged as superseded
        assert header["seq"] == 2
        assert header["superseded"] == [1]
        positions, _ = decode_mesh_buffers(blob)
        direct = HandleDeformer(HANDLE_IDS).fit(box).transform(t2)
        assert np.array_equal(positions, direct.positions.astype("<f4"))

    info = client.get(f"/sessions/{sid}").json()
    assert info["solves"] == 1
    assert info["dropped"] == 1


def test_stream_revisions_monotonic(client, tmp_path):
    sid = make_session(client)
    upload(client, sid, cube_obj_bytes(tmp_path))
    box = make_box()
    client.post(
        f"/sessions/{sid}/instances/model/rig", json=handles_record(box))
    revs = []
    with client.websocket_connect(f"/sessions/{sid}/stream") as ws:
        for i in range(3):
            targets = pulled_targets(box) + [0.0, 0.05 * i, 0.0]
            ws.send_json(ws_deform_msg(i, targets))
            header, _ = drain_revision(ws)
            revs.append(header["revision"])
    assert revs == sorted(revs)
    assert len(set(revs)) == len(revs)


def test_stream_error_message_keeps_connection(client, tmp_path):
    sid = make_session(client)
    upload(client, sid, cube_obj_bytes(tmp_path))
    box = make_box()
    client.post(
        f"/sessions/{sid}/instances/model/rig", json=handles_record(box))
    with client.websocket_connect(f"/sessions/{sid}/stream") as ws:
        ws.send_json({"type": "deform", "instance": "ghost", "seq": 7,
                      "targets": [[0, 0, 0]]})
        err = ws.receive_json()
        assert err["type"] == "error"
        assert err["seq"] == 7
        assert "ghost" in err["message"]
        # stream stays usable afterwards
        ws.send_json(ws_deform_msg(8, pulled_targets(box)))
        header, _ = drain_revision(ws)
        assert header["seq"] == 8


# ---------------------------------------------------------------------------
# API/CLI equivalence (also exercised in the acceptance suite)


def test_endpoint_sequence_matches_edit_program_bitwise(client, tmp_path):
    from sculpt3d.scene import load_edit_program, run_edit_program

    assets = tmp_path / "assets"
    assets.mkdir()
    save_obj(make_box(), assets / "cube.obj")
    box = make_box()
    targets = pulled_targets(box)
    program = {
        "units": "m",
        "edits": [
            {"op": "load", "mesh": "cube.obj"},
            {"op": "handles", "ids": HANDLE_IDS,
             "targets": targets.tolist()},
            {"op": "render", "out": "shot"},
        ],
    }
    ppath = tmp_path / "edits.sculpt.json"
    ppath.write_text(json.dumps(program))
    out = tmp_path / "batch"
    result = run_edit_program(load_edit_program(ppath), assets, out_dir=out)
    batch_files = {p.name: p.read_bytes() for p in result.artifacts}

    sid = make_session(client)
    upload(client, sid, (assets / "cube.obj").read_bytes())
    client.post(
        f"/sessions/{sid}/instances/model/rig", json=handles_record(box))
    client.post(
        f"/sessions/{sid}/instances/model/deform",
        json={"targets": targets.tolist()})
    body = client.post(f"/sessions/{sid}/render").json()

    pairs = [("color", "shot.png"), ("depth", "shot_depth.png"),
             ("mask", "shot_mask.png")]
    for key, name in pairs:
        assert client.get(body[key]).content == batch_files[name], name
    assert client.get(body["depth"] + ".meta").content == batch_files[
        "shot_depth.png.meta"]
