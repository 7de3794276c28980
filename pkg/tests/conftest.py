import pytest


@pytest.fixture(autouse=True)
def _pristine_registries():
    """Registries are process-global copy-on-update; isolate tests."""
    import ecotrace.carbon as carbon
    import ecotrace.telemetry as telemetry

    saved = carbon._intensity_registry, telemetry._gpu_registry
    yield
    carbon._intensity_registry, telemetry._gpu_registry = saved


@pytest.fixture
def home(tmp_path, monkeypatch):
    """Isolated store root; nothing touches the user's real home."""
    root = tmp_path / "ecotrace-home"
    monkeypatch.setenv("ECOTRACE_HOME", str(root))
    return root


@pytest.fixture
def run_cli(capsys):
    """Invoke the CLI in-process, returning (exit_code, stdout, stderr)."""
    from ecotrace.cli import main

    def invoke(*argv):
        code = main(list(argv))
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    return invoke
