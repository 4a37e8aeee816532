import pytest

from discs.config import ConfigError, RunConfig, load_config, parse_config


def test_defaults_follow_hyperparameter_table():
    c = RunConfig()
    assert (c.batch_size, c.disc_batch_size, c.buffer_size) == (1024, 16384, 2_000_000)
    assert (c.gamma, c.alpha, c.tau, c.lr) == (0.99, 0.1, 0.005, 3e-4)
    assert (c.collect_steps, c.update_steps, c.policy_every, c.target_every) == (8, 8, 8, 8)
    assert c.disc_every == 50_000 and c.disc_warmup == 50_000
    assert c.m == 2 and c.hipps_k == 1 and c.method == "discs"


def test_round_trip_through_text(tmp_path):
    c = RunConfig.desk(method="visr", seed=3, q_hidden=(32, 16))
    assert parse_config(c.dumps()) == c
    path = tmp_path / "run.cfg"
    path.write_text("preset = desk  # small\nmethod = sac\nseed = 7\ntotal_timesteps = 1.6e4\n")
    d = load_config(path)
    assert d.method == "sac" and d.seed == 7 and d.total_timesteps == 16000
    assert d.batch_size == RunConfig.desk().batch_size


@pytest.mark.parametrize("text", ["bogus = 1", "batch_size", "batch_size = x", "method = ppo", "preset = huge",
                                  "lr = -1", "m = 1", "total_timesteps = 13", "hipps_k = 0", "env = maze"])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_diayn_allows_m1_and_from_dict_rejects_unknown():
    assert parse_config("method = diayn\nm = 1").m == 1
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"nope": 1})


def test_shipped_config_files_load():
    from pathlib import Path
    paths = sorted((Path(__file__).parent.parent / "configs").glob("*.cfg"))
    assert paths
    for path in paths:
        cfg = load_config(path)
        assert cfg.method in ("discs", "visr", "sac", "diayn")
