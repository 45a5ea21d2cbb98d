import json
import re

import pytest
from click.testing import CliRunner

from conftest import GOLDEN, SCRIPTED, golden_checksums, load_scenes
from cxd.cli import main
from cxd.plan import CompositionPlan

NO_REMOTE = {"CXD_PLANNER_URL": "", "CXD_DENOISER_URL": "", "CXD_RETOUCH_URL": ""}


@pytest.fixture
def run(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    runner = CliRunner()

    def invoke(*args):
        return runner.invoke(main, [str(a) for a in args], env=NO_REMOTE)

    return invoke


def test_analyze_simple_and_complex(run):
    res = run("analyze", "a cat")
    assert res.exit_code == 0
    assert json.loads(res.output)["verdict"] == "simple"
    report = json.loads(run("analyze", "a bird above a pond").output)
    assert report["verdict"] == "complex"
    assert report["spatial"] == [{"subject": 0, "object": 1, "kind": "above"}]


def test_empty_prompt_is_input_error(run):
    res = run("analyze", "   ")
    assert res.exit_code == 2
    assert "EmptyPrompt" in res.output


def test_missing_lexicon_is_input_error(run, tmp_path):
    assert run("analyze", "a cat", "--lexicon", tmp_path / "none.lex").exit_code == 2


def test_plan_with_svg(run, tmp_path):
    out, svg = tmp_path / "plan.json", tmp_path / "plan.svg"
    res = run("plan", load_scenes()[0]["prompt"], "-o", out, "--svg", svg)
    assert res.exit_code == 0, res.output
    plan = CompositionPlan.from_json(out.read_text(encoding="utf-8"))
    text = svg.read_text(encoding="utf-8")
    rects = re.findall(r'<rect class="region" data-index="(\d+)" x="([\d.]+)" y="([\d.]+)" '
                       r'width="([\d.]+)" height="([\d.]+)"', text)
    assert len(rects) == len(plan.foreground)
    for (i, x, y, w, h), box in zip(rects, plan.boxes):
        assert [float(x), float(y), float(w), float(h)] == box.as_list()


def test_plan_stdout_round_trips(run):
    res = run("plan", "a cup on a table")
    plan = CompositionPlan.from_json(res.output)
    assert CompositionPlan.from_json(plan.to_json()) == plan


def test_plan_with_scripted_fixtures(run):
    scene = load_scenes()[2]
    res = run("plan", scene["prompt"], "--planner", "scripted", "--fixtures", SCRIPTED)
    assert res.exit_code == 0, res.output
    assert res.output == (GOLDEN / "biomes_plan.json").read_text(encoding="utf-8")


def test_scripted_without_fixtures_is_input_error(run):
    assert run("plan", "a cup on a table", "--planner", "scripted").exit_code == 2


def test_scripted_gap_is_backend_error(run, tmp_path):
    res = run("plan", "a cup on a table", "--planner", "scripted", "--fixtures", tmp_path / "empty")
    assert res.exit_code == 4


def test_infeasible_layout_exit_code(run):
    res = run("plan", "a cat left of and right of a dog")
    assert res.exit_code == 3
    assert "LayoutInfeasible" in res.output


def test_remote_planner_unconfigured(run):
    assert run("plan", "a cup on a table", "--planner", "remote").exit_code == 4


def test_paint_golden(run, tmp_path):
    golden = golden_checksums()
    out = tmp_path / "z.cxdl"
    res = run("paint", GOLDEN / "turtle_plan.json", "--steps", 8, "--seed", 7, "-o", out)
    assert res.exit_code == 0, res.output
    assert res.output.strip() == golden["sha256"]["turtle"]


def test_paint_rejects_bad_options(run, tmp_path):
    plan = GOLDEN / "turtle_plan.json"
    assert run("paint", plan, "--steps", 0).exit_code == 2
    assert run("paint", plan, "--omega", 1.5).exit_code == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{}", encoding="utf-8")
    assert run("paint", bad).exit_code == 2


def test_paint_remote_unconfigured(run):
    assert run("paint", GOLDEN / "turtle_plan.json", "--denoiser", "remote").exit_code == 4


def test_generate_needs_services(run):
    res = run("generate", "a cup on a table")
    assert res.exit_code == 4
    assert "CXD_DENOISER_URL" in res.output


def test_generate_with_mock(run, tmp_path):
    res = run("generate", "a cup on a table", "--denoiser", "mock", "--skip-retouch",
              "--out-dir", tmp_path / "run", "--steps", 2, "--height", 8, "--width", 8)
    assert res.exit_code == 0, res.output
    assert re.fullmatch(r"[0-9a-f]{64}", res.output.strip())
    assert (tmp_path / "run" / "plan.json").exists()


def test_generate_mock_cannot_retouch(run):
    assert run("generate", "a cup on a table", "--denoiser", "mock").exit_code == 4


def test_config_file_is_used(run, tmp_path, monkeypatch):
    plan = GOLDEN / "turtle_plan.json"
    (tmp_path / "cxd.toml").write_text("[modulation]\nsteps = 2\nheight = 8\nwidth = 8\n",
                                       encoding="utf-8")
    from_file = run("paint", plan, "-o", tmp_path / "a.cxdl")
    elsewhere = tmp_path / "elsewhere"
    elsewhere.mkdir()
    monkeypatch.chdir(elsewhere)
    from_flags = run("paint", plan, "--steps", 2, "--height", 8, "--width", 8, "-o", "b.cxdl")
    defaults = run("paint", plan, "-o", "c.cxdl")
    assert from_file.exit_code == from_flags.exit_code == 0
    assert from_file.output == from_flags.output != defaults.output


def test_explicit_config_must_exist(run, tmp_path):
    assert run("--config", tmp_path / "none.toml", "analyze", "a cat").exit_code == 2


def test_bad_config_is_input_error(run, tmp_path):
    (tmp_path / "cxd.toml").write_text("[nope]\n", encoding="utf-8")
    assert run("analyze", "a cat").exit_code == 2


def test_paint_is_repeatable(run, tmp_path):
    plan = GOLDEN / "greenhouse_plan.json"
    args = ("paint", plan, "--steps", 3, "--height", 16, "--width", 16, "--lambda-pos", 0.8)
    first, second = run(*args, "-o", tmp_path / "a.cxdl"), run(*args, "-o", tmp_path / "b.cxdl")
    assert first.output == second.output
    assert (tmp_path / "a.cxdl").read_bytes() == (tmp_path / "b.cxdl").read_bytes()


def test_mock_generate_matches_paint(run, tmp_path):
    prompt = load_scenes()[1]["prompt"]
    gen = run("generate", prompt, "--denoiser", "mock", "--skip-retouch",
              "--latent-out", tmp_path / "gen.cxdl", "--out-dir", tmp_path / "out",
              "--steps", 8, "--seed", 7)
    paint = run("paint", tmp_path / "out" / "plan.json", "--steps", 8, "--seed", 7,
                "-o", tmp_path / "paint.cxdl")
    assert gen.exit_code == paint.exit_code == 0
    assert gen.output == paint.output == golden_checksums()["sha256"]["turtle"] + "\n"
    assert (tmp_path / "gen.cxdl").read_bytes() == (tmp_path / "paint.cxdl").read_bytes()


@pytest.fixture
def fake_services():
    """Denoise, decode and retouch endpoints on a loopback HTTP server."""
    import threading
    from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

    from cxd import latent as L
    from cxd.backends.denoiser import mock_denoise

    received = []

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):
            pass

        def do_POST(self):
            body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
            if self.path == "/denoise":
                z = mock_denoise(L.from_json(body["latent"]), body["prompt"])
                reply = {"latent": L.to_json(z)}
            elif self.path == "/decode":
                reply = {"image_ref": "https://images.example.test/draft.png"}
            else:
                received.append(body)
                reply = {"image_ref": "https://images.example.test/final.png"}
            data = json.dumps(reply).encode()
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

    server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_address[1]}", received
    finally:
        server.shutdown()
        server.server_close()


def test_generate_against_live_services(tmp_path, monkeypatch, fake_services):
    from cxd.backends.retouch import build_retouch_request

    url, received = fake_services
    monkeypatch.chdir(tmp_path)
    env = {"CXD_PLANNER_URL": "", "CXD_DENOISER_URL": url, "CXD_RETOUCH_URL": url}
    res = CliRunner().invoke(main, ["generate", load_scenes()[0]["prompt"], "--out-dir", "out",
                                    "--steps", "2", "--height", "8", "--width", "8"], env=env)
    assert res.exit_code == 0, res.output
    assert res.output.strip() == "https://images.example.test/final.png"

    plan = CompositionPlan.from_json((tmp_path / "out" / "plan.json").read_text(encoding="utf-8"))
    expected = build_retouch_request(plan, "https://images.example.test/draft.png").to_dict()
    written = json.loads((tmp_path / "out" / "retouch_request.json").read_text(encoding="utf-8"))
    assert written == expected == received[0]
    assert (tmp_path / "out" / "image_ref.txt").read_text().strip() == res.output.strip()
