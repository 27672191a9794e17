import runpy
from pathlib import Path

BENCH = Path(__file__).resolve().parent.parent / "benchmarks" / "bench_kernels.py"


def test_benchmark_runs_small(capsys):
    mod = runpy.run_path(str(BENCH))
    mod["main"](["--repeat", "1", "--n-kappa", "8", "--n-phi", "8", "--n-xi", "8", "--n-tau", "64"])
    out = capsys.readouterr().out
    assert "resonant_sum" in out and "image_kernel" in out
