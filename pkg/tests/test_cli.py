import json
import subprocess
import sys
import threading
from pathlib import Path

import numpy as np
import pytest

import covsteer
from covsteer.actionspace import Action
from covsteer.bridge import connect_dut, serve_tcp
from covsteer.cli import cmd_report, cmd_run, main
from covsteer.config import build_config
from covsteer.env import episode_seed, stimulus_rng
from covsteer.errors import ReportError
from covsteer.reporting import read_episode_log
from covsteer.rle import RleDut

SRC_DIR = str(Path(covsteer.__file__).resolve().parent.parent)


def write_config(tmp_path, obj, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return path


def rle_config(**kw):
    base = {
        "dut": "rle",
        "agent": "cem",
        "episodes": 120,
        "seed": 5,
        "multipliers": {"e3_partial_count": 1},
    }
    base.update(kw)
    return base


class TestCmdRun:
    def test_artifacts_written(self, tmp_path):
        cfg = build_config(rle_config(episodes=30))
        out = cmd_run(cfg, tmp_path / "run")
        assert (out / "episodes.csv").exists()
        assert (out / "summary.json").exists()
        assert (out / "histograms.csv").exists()

    def test_single_episode_single_row(self, tmp_path):
        cfg = build_config(rle_config(episodes=1, agent="random"))
        out = cmd_run(cfg, tmp_path / "run")
        lines = (out / "episodes.csv").read_text().splitlines()
        assert len(lines) == 2  # header + one data row
        assert lines[0] == (
            "episode,zero_prob,count_width,seq_length,"
            "e0_word_full,e1_zc_full,e2_counter_mid,e3_partial_count,reward"
        )

    def test_byte_identical_reruns(self, tmp_path):
        cfg = build_config(rle_config())
        out1 = cmd_run(cfg, tmp_path / "a")
        out2 = cmd_run(cfg, tmp_path / "b")
        assert (out1 / "episodes.csv").read_bytes() == (out2 / "episodes.csv").read_bytes()
        assert (out1 / "summary.json").read_bytes() == (out2 / "summary.json").read_bytes()

    def test_summary_totals_match_csv_sums(self, tmp_path):
        cfg = build_config(rle_config(episodes=80))
        out = cmd_run(cfg, tmp_path / "run")
        summary = json.loads((out / "summary.json").read_text())
        log = read_episode_log(out)
        assert summary["event_totals"] == {
            name: sum(col) for name, col in zip(log.event_names, log.counts)
        }
        assert summary["episodes"] == 80
        assert summary["total_reward"] == pytest.approx(sum(log.rewards))
        assert summary["agent_snapshot"]["kind"] == "cem"
        assert "out_dir" in summary["applied_defaults"]

    def test_csv_replay_reproduces_counts(self, tmp_path):
        # The log is loss-free: logged actions + derived episode seeds
        # reproduce the logged counts exactly.
        cfg = build_config(rle_config(episodes=40, agent="random"))
        out = cmd_run(cfg, tmp_path / "run")
        log = read_episode_log(out)
        dut = RleDut()
        for row in range(len(log.episodes)):
            episode = log.episodes[row]
            seed = episode_seed(cfg.seed, episode)
            dut.reset(seed)
            action = Action(tuple(col[row] for col in log.knob_values))
            _, counts = dut.step(action, stimulus_rng(seed))
            assert counts == tuple(col[row] for col in log.counts)

    def test_axi_run(self, tmp_path):
        cfg = build_config(
            {
                "dut": "axi",
                "agent": "random",
                "episodes": 25,
                "seed": 3,
                "multipliers": {"fifo_full_slave_4": 1},
                "dut_params": {"cycles_per_step": 50},
            }
        )
        out = cmd_run(cfg, tmp_path / "axi")
        log = read_episode_log(out)
        assert log.knob_names == ("lower_slave", "upper_slave")
        assert len(log.event_names) == 10

    def test_histograms_csv_totals(self, tmp_path):
        cfg = build_config(rle_config(episodes=40))
        out = cmd_run(cfg, tmp_path / "run")
        lines = (out / "histograms.csv").read_text().splitlines()
        assert lines[0] == "knob,lo,hi,count"
        per_knob = {}
        for ln in lines[1:]:
            knob, _, _, count = ln.split(",")
            per_knob[knob] = per_knob.get(knob, 0) + int(count)
        assert per_knob == {"zero_prob": 40, "count_width": 40, "seq_length": 40}


class TestCmdReport:
    def make_runs(self, tmp_path):
        steered = cmd_run(build_config(rle_config(episodes=60)), tmp_path / "steered")
        baseline = cmd_run(
            build_config(rle_config(episodes=60, agent="random")), tmp_path / "baseline"
        )
        return steered, baseline

    def test_two_run_comparison_has_ratios(self, tmp_path):
        steered, baseline = self.make_runs(tmp_path)
        report = cmd_report([steered, baseline], tmp_path / "report.json")
        assert len(report["runs"]) == 2
        assert len(report["ratios"]) == 1
        ratio = report["ratios"][0]["ratio_first_over_this"]["e3_partial_count"]
        first = report["runs"][0]["event_totals"]["e3_partial_count"]
        second = report["runs"][1]["event_totals"]["e3_partial_count"]
        assert ratio == pytest.approx(first / second)
        assert (tmp_path / "report.json").exists()

    def test_single_log_totals_only(self, tmp_path):
        cfg = build_config(rle_config(episodes=20))
        out = cmd_run(cfg, tmp_path / "only")
        report = cmd_report([out], tmp_path / "r.json")
        assert report["ratios"] == []
        assert report["runs"][0]["episodes"] == 20

    def test_schema_mismatch_rejected(self, tmp_path):
        rle_out = cmd_run(build_config(rle_config(episodes=10)), tmp_path / "rle")
        axi_out = cmd_run(
            build_config({"dut": "axi", "episodes": 10, "dut_params": {"cycles_per_step": 20}}),
            tmp_path / "axi",
        )
        with pytest.raises(ReportError, match="schemas"):
            cmd_report([rle_out, axi_out], tmp_path / "r.json")

    def test_csv_path_without_sidecar_still_reads_bundled_schema(self, tmp_path):
        out = cmd_run(build_config(rle_config(episodes=10)), tmp_path / "run")
        (out / "summary.json").unlink()
        log = read_episode_log(out / "episodes.csv")
        assert log.knob_names == ("zero_prob", "count_width", "seq_length")


class TestMainEntry:
    def test_run_and_report_exit_zero(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path, rle_config(episodes=15))
        out_dir = tmp_path / "out"
        assert main(["run", "--config", str(cfg_path), "--out", str(out_dir)]) == 0
        assert main(["report", str(out_dir), "--out", str(tmp_path / "rep.json")]) == 0
        captured = capsys.readouterr()
        assert "e3_partial_count" in captured.out

    def test_flag_overrides_apply(self, tmp_path):
        cfg_path = write_config(tmp_path, rle_config(episodes=50, agent="cem"))
        out_dir = tmp_path / "out"
        assert (
            main(
                [
                    "run", "--config", str(cfg_path), "--episodes", "7",
                    "--agent", "random", "--seed", "9", "--out", str(out_dir),
                ]
            )
            == 0
        )
        log = read_episode_log(out_dir)
        assert len(log.episodes) == 7
        summary = json.loads((out_dir / "summary.json").read_text())
        assert summary["config"]["agent"] == "random"
        assert summary["config"]["seed"] == 9
        assert summary["agent_snapshot"]["kind"] == "random"

    def test_bad_config_exits_nonzero(self, tmp_path, capsys):
        cfg_path = write_config(tmp_path, {"dut": "rle", "episodes": -1})
        assert main(["run", "--config", str(cfg_path)]) == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_config_exits_nonzero(self, tmp_path, capsys):
        assert main(["run", "--config", str(tmp_path / "nope.json")]) == 1

    def test_report_schema_mismatch_exits_nonzero(self, tmp_path, capsys):
        rle_out = cmd_run(build_config(rle_config(episodes=5)), tmp_path / "rle")
        axi_out = cmd_run(
            build_config({"dut": "axi", "episodes": 5, "dut_params": {"cycles_per_step": 10}}),
            tmp_path / "axi",
        )
        assert main(["report", str(rle_out), str(axi_out)]) == 1


class TestServeStdio:
    def test_subprocess_session_matches_in_process(self):
        proc = subprocess.Popen(
            [sys.executable, "-m", "covsteer", "serve", "--dut", "rle", "--stdio"],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            env={"PYTHONPATH": SRC_DIR, "PATH": "/usr/bin:/bin"},
        )
        try:
            proxy = connect_dut(proc.stdout, proc.stdin)
            seed, action = 42, Action((0.4, 6.0, 300.0))
            obs0 = proxy.reset(seed)
            obs, counts = proxy.step(action, None)

            dut = RleDut()
            local0 = dut.reset(seed)
            local_obs, local_counts = dut.step(action, stimulus_rng(seed))
            assert obs0 == tuple(local0)
            assert obs == tuple(local_obs)
            assert counts == tuple(local_counts)
        finally:
            proc.stdin.close()
            proc.stdout.close()
            proc.wait(timeout=10)
        assert proc.returncode == 0


class TestServeTcpCli:
    def test_serve_port_subprocess(self):
        proc = subprocess.Popen(
            [sys.executable, "-m", "covsteer", "serve", "--dut", "axi", "--port", "0"],
            stderr=subprocess.PIPE,
            env={"PYTHONPATH": SRC_DIR, "PATH": "/usr/bin:/bin"},
        )
        try:
            announce = proc.stderr.readline().decode()
            assert announce.startswith("serving axi on 127.0.0.1:")
            port = int(announce.rsplit(":", 1)[1])
            from covsteer.bridge import connect_tcp

            proxy = connect_tcp("127.0.0.1", port, timeout=10)
            try:
                assert proxy.event_names()[4] == "fifo_full_slave_4"
                proxy.reset(1)
                _, counts = proxy.step(Action((4.0, 4.0)), None)
                assert counts[4] == 65
            finally:
                proxy.close()
        finally:
            proc.terminate()
            proc.wait(timeout=10)


class TestBridgeAbort:
    def serve_then_die(self, episodes_before_death=3):
        """Minimal server that answers a few episodes, then drops the link."""
        import socket as socket_mod

        from covsteer.bridge import Hello, Reset, ResetAck, Step, StepAck, decode, encode
        from covsteer.env import stimulus_rng

        server = socket_mod.socket()
        server.bind(("127.0.0.1", 0))
        server.listen()
        port = server.getsockname()[1]

        def run():
            conn, _ = server.accept()
            with conn:
                rfile, wfile = conn.makefile("rb"), conn.makefile("wb")
                dut = RleDut()
                wfile.write(encode(Hello(1, dut.action_space(), dut.event_names())))
                wfile.flush()
                rng = None
                answered = 0
                while answered < episodes_before_death:
                    msg = decode(rfile.readline())
                    if isinstance(msg, Reset):
                        obs = dut.reset(msg.seed)
                        rng = stimulus_rng(msg.seed)
                        wfile.write(encode(ResetAck(tuple(obs))))
                    else:
                        obs, counts = dut.step(Action(msg.action), rng)
                        wfile.write(
                            encode(StepAck(tuple(obs), tuple(counts), True))
                        )
                        answered += 1
                    wfile.flush()
            server.close()

        thread = threading.Thread(target=run, daemon=True)
        thread.start()
        return port, thread

    def test_midcampaign_close_aborts_with_partial_log(self, tmp_path):
        port, thread = self.serve_then_die(episodes_before_death=3)
        cfg = build_config(
            rle_config(episodes=10, agent="random", dut=f"bridge:127.0.0.1:{port}")
        )
        out_dir = tmp_path / "partial"
        with pytest.raises(Exception) as exc_info:
            cmd_run(cfg, out_dir)
        from covsteer.errors import TransportError

        assert isinstance(exc_info.value, TransportError)
        thread.join(timeout=5)
        rows = (out_dir / "episodes.csv").read_text().splitlines()
        assert len(rows) == 1 + 3  # header + the episodes that completed

    def test_main_exits_nonzero_on_bridge_failure(self, tmp_path):
        port, thread = self.serve_then_die(episodes_before_death=2)
        cfg_path = write_config(
            tmp_path,
            rle_config(episodes=10, agent="random", dut=f"bridge:127.0.0.1:{port}"),
        )
        out_dir = tmp_path / "out"
        assert main(["run", "--config", str(cfg_path), "--out", str(out_dir)]) == 1
        thread.join(timeout=5)
        assert (out_dir / "episodes.csv").exists()


class TestRunOverBridge:
    def test_bridged_run_byte_identical_to_local(self, tmp_path):
        bound = {}
        ready = threading.Event()

        def on_bound(port):
            bound["port"] = port
            ready.set()

        server = threading.Thread(
            target=serve_tcp,
            kwargs=dict(dut_factory=RleDut, port=0, max_sessions=1, on_bound=on_bound),
            daemon=True,
        )
        server.start()
        assert ready.wait(5)

        local_cfg = build_config(rle_config(episodes=40, agent="random"))
        local_out = cmd_run(local_cfg, tmp_path / "local")

        bridged_cfg = build_config(
            rle_config(
                episodes=40, agent="random", dut=f"bridge:127.0.0.1:{bound['port']}"
            )
        )
        bridged_out = cmd_run(bridged_cfg, tmp_path / "bridged")
        server.join(timeout=5)

        assert (
            (local_out / "episodes.csv").read_bytes()
            == (bridged_out / "episodes.csv").read_bytes()
        )
