from xorlog.checker.cli import main


def test_explore_pass(capsys):
    assert main(["--mode", "explore", "--threads", "2", "--appends", "1", "--readers", "1"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "terminal_states=" in out


def test_explore_cas_fetch(capsys):
    assert main(["--threads", "2", "--impl", "cas"]) == 0
    assert main(["--threads", "2", "--xor-mode", "fetch", "--reader-op", "poll",
                 "--readers", "1", "--reader-ops", "2"]) == 0


def test_explore_too_large(capsys):
    assert main(["--threads", "4"]) == 2
    assert "config error" in capsys.readouterr().err


def test_stress_runs(capsys):
    assert main(["--mode", "stress", "--threads", "2", "--appends", "100", "--readers", "1",
                 "--runs", "2", "--seed", "9"]) == 0
    out = capsys.readouterr().out
    assert "run=0 PASS" in out and "run=1 PASS" in out


def test_stress_bad_capacity():
    assert main(["--mode", "stress", "--threads", "2", "--appends", "100",
                 "--capacity", "10"]) == 2


def test_violation_exit_code(monkeypatch, capsys):
    from xorlog.checker import cli
    from xorlog.checker.history import Verdict
    from xorlog.checker.machine import ExploreResult

    bad = ExploreResult(Verdict(False, "P1", "slot 0 reads 0", ("T0 fetch_inc C 0",)))
    monkeypatch.setattr(cli, "explore", lambda cfg: bad)
    assert main([]) == 1
    out = capsys.readouterr().out
    assert "FAIL P1" in out and "T0 fetch_inc C 0" in out
