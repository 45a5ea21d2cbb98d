import pytest

from cxd.config import load_config


def test_defaults(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = load_config(env={})
    assert cfg.backends.planner == "template" and cfg.backends.denoiser == "mock"
    assert cfg.modulation.steps == 8 and cfg.modulation.omega == 0.7
    assert cfg.lexicons.max_concepts == 4 and cfg.source is None


def test_file_and_env(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "cxd.toml").write_text(
        '[backends]\nplanner = "remote"\ntimeout = 5\n'
        '[modulation]\nomega = 0.5\nseed = 3\n'
        '[lexicons]\npath = "my.lex"\n',
        encoding="utf-8",
    )
    cfg = load_config(env={"CXD_PLANNER_URL": "http://p", "CXD_RETOUCH_URL": "http://r"})
    assert cfg.source == "cxd.toml"
    assert cfg.backends.planner == "remote" and cfg.backends.timeout == 5
    assert cfg.backends.planner_url == "http://p" and cfg.backends.retouch_url == "http://r"
    assert cfg.backends.denoiser_url is None
    assert cfg.modulation.omega == 0.5 and cfg.modulation.seed == 3
    assert cfg.lexicons.path == "my.lex"


def test_relative_lexicon_path_follows_the_file(tmp_path):
    sub = tmp_path / "conf"
    sub.mkdir()
    (sub / "c.toml").write_text('[lexicons]\npath = "x.lex"\n', encoding="utf-8")
    assert load_config(sub / "c.toml", env={}).lexicons.path == str(sub / "x.lex")


@pytest.mark.parametrize("text", ['[backends]\nplaner = "x"\n', '[extra]\na = 1\n'])
def test_unknown_keys(tmp_path, text):
    path = tmp_path / "c.toml"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ValueError, match="unknown"):
        load_config(path, env={})


def test_missing_explicit_file(tmp_path):
    with pytest.raises(OSError):
        load_config(tmp_path / "none.toml", env={})
