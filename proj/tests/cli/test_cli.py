"""End-to-end checks of the drexp tool: outputs, exit codes, schemas, determinism."""

import json
import math
import os
import pathlib
import subprocess

import jsonschema
import pytest
from referencing import Registry, Resource
from scipy.stats import chi2

TOOL = os.environ.get("DREXP_TOOL", "build/drexp")
SCHEMAS = pathlib.Path(os.environ.get("DREXP_SCHEMAS", "schemas"))


def registry():
    reg = Registry()
    for p in SCHEMAS.glob("*.schema.json"):
        doc = json.loads(p.read_text())
        res = Resource.from_contents(doc)
        reg = reg.with_resource(doc["$id"], res).with_resource(p.name, res)
    return reg


REGISTRY = registry()


def validate(instance, schema_name):
    schema = json.loads((SCHEMAS / schema_name).read_text())
    jsonschema.Draft202012Validator(schema, registry=REGISTRY).validate(instance)


def run(*args, cwd=None):
    return subprocess.run([TOOL, *map(str, args)], capture_output=True, text=True, cwd=cwd)


def write_lines(path, values):
    path.write_text("".join(f"{v}\n" for v in values))
    return path


@pytest.fixture
def gauss100(tmp_path):
    # mean 0, N = 100
    return write_lines(tmp_path / "g.csv", [1, -1] * 50)


def test_evaluate_gamma_inf_gaussian(gauss100):
    r = run("evaluate", "--family", "gaussian-kv", "--sigma2", 1, "--phi", "x", "--k", 2, "--gamma", "inf", gauss100)
    assert r.returncode == 0, r.stderr
    out = json.loads(r.stdout)
    validate(out, "evaluate.schema.json")
    # sqrt(2k/N) with k = 2, N = 100
    assert out["value"] == pytest.approx(math.sqrt(4 / 100), rel=1e-8)
    assert out["status"] == "finite"
    assert out["manifest"]["inputs"][0]["bytes"] == gauss100.stat().st_size


def test_evaluate_small_k_is_mle_expectation(tmp_path):
    data = write_lines(tmp_path / "d.csv", [0.5, 1.5, 2.0, 0.0])
    r = run("evaluate", "--family", "gaussian-kv", "--phi", "x", "--k", "0.000001", "--gamma", 1, data)
    assert r.returncode == 0, r.stderr
    assert json.loads(r.stdout)["value"] == pytest.approx(1.0, abs=1e-5)


def test_evaluate_square_blows_up(gauss100):
    r = run("evaluate", "--family", "gaussian-kv", "--phi", "x^2", "--beta", 100, "--k", 2, gauss100)
    assert r.returncode == 0, r.stderr
    out = json.loads(r.stdout)
    validate(out, "evaluate.schema.json")
    assert out["status"] == "+inf"
    assert out["value"] == "+inf"


def test_evaluate_writes_out_file(gauss100, tmp_path):
    dest = tmp_path / "r.json"
    r = run("evaluate", "--family", "gaussian-kv", "--k", 1, "--out", dest, gauss100)
    assert r.returncode == 0 and r.stdout == ""
    validate(json.loads(dest.read_text()), "evaluate.schema.json")


def test_config_file_supplies_defaults(tmp_path):
    data = write_lines(tmp_path / "c.csv", [1, 1, 0])
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"evaluate": {"family": "bernoulli", "k": 1, "gamma": "inf"}}))
    a = json.loads(run("--config", cfg, "evaluate", data).stdout)
    b = json.loads(run("evaluate", "--family", "bernoulli", "--k", 1, "--gamma", "inf", data).stdout)
    assert a["value"] == b["value"]
    # explicit flags win over the file
    c = json.loads(run("--config", cfg, "evaluate", "--k", 2, data).stdout)
    assert c["value"] > a["value"]


def test_malformed_row_names_line(tmp_path):
    data = tmp_path / "bad.csv"
    data.write_text("1\n0\n\nabc\n")
    r = run("evaluate", "--family", "bernoulli", "--k", 1, data)
    assert r.returncode == 1
    assert "bad.csv:4" in r.stderr


@pytest.mark.parametrize(
    "args",
    [
        ["evaluate", "--family", "nope", "--k", 1],
        ["evaluate", "--family", "bernoulli"],
        ["evaluate", "--family", "bernoulli", "--k", -1],
        ["interval", "--family", "bernoulli"],
        ["interval", "--family", "bernoulli", "--level", 0.95, "--k", 1],
        ["frobnicate"],
    ],
)
def test_usage_errors_exit_1(args, tmp_path):
    data = write_lines(tmp_path / "b.csv", [1, 0, 1])
    r = run(*args, data)
    assert r.returncode == 1, (r.stdout, r.stderr)


def test_interval_wilks_level(gauss100):
    r = run("interval", "--family", "gaussian-kv", "--level", 0.95, gauss100)
    assert r.returncode == 0, r.stderr
    out = json.loads(r.stdout)
    validate(out, "interval.schema.json")
    k = chi2.ppf(0.95, 1) / 2
    half = math.sqrt(2 * k / 100)
    assert out["lower"] == pytest.approx(-half, rel=1e-7)
    assert out["upper"] == pytest.approx(half, rel=1e-7)
    cal = out["calibration"]
    assert cal["chi2_quantile"] == pytest.approx(chi2.ppf(0.95, 1), rel=1e-10)
    assert cal["k"] == pytest.approx(k, rel=1e-10)
    assert cal["dimension"] == 1


def test_interval_tiny_k_degenerates(gauss100):
    out = json.loads(run("interval", "--family", "gaussian-kv", "--k", "0.0000001", gauss100).stdout)
    assert out["upper"] - out["lower"] < 1e-3
    assert out["lower"] <= 0 <= out["upper"]


def test_two_coins(tmp_path):
    few = write_lines(tmp_path / "few.csv", [1, 1, 0])
    many = write_lines(tmp_path / "many.csv", [1] * 2000 + [0] * 1000)
    a = json.loads(run("interval", "--family", "bernoulli", "--level", 0.95, few).stdout)
    b = json.loads(run("interval", "--family", "bernoulli", "--level", 0.95, many).stdout)
    assert a["lower"] < b["lower"] < b["upper"] < a["upper"]
    assert b["upper"] - b["lower"] < a["upper"] - a["lower"]


def test_oracle_all_pass(tmp_path):
    dest = tmp_path / "oracle.json"
    r = run("oracle", "--out", dest)
    assert r.returncode == 0, r.stdout
    out = json.loads(dest.read_text())
    validate(out, "oracle.schema.json")
    assert out["failed"] == 0
    assert f"{out['total']} checks, 0 failed" in r.stdout
    assert any(c["as_printed"] is not None for c in out["checks"])


def test_oracle_selector(tmp_path):
    r = run("oracle", "--check", "entropic")
    assert r.returncode == 0
    assert "3 checks, 0 failed" in r.stdout
    assert run("oracle", "--check", "nope").returncode == 1


def test_simulate_schema_and_determinism(tmp_path):
    cfg = tmp_path / "w.json"
    cfg.write_text(json.dumps({"studies": [{"study": "wilks", "replications": 40}, {"study": "dynamic"}]}))
    validate(json.loads(cfg.read_text()), "study_config.schema.json")
    r1 = run("simulate", "--config", cfg, "--out-dir", tmp_path / "a")
    r2 = run("simulate", "--config", cfg, "--out-dir", tmp_path / "b")
    assert r1.returncode == 0 and r2.returncode == 0, r1.stderr
    assert len(r1.stdout.strip().splitlines()) == 2
    assert "coverage" in r1.stdout
    for stem in ("wilks", "dynamic"):
        report = json.loads((tmp_path / "a" / f"{stem}.json").read_text())
        validate(report, "study_report.schema.json")
        assert (tmp_path / "a" / f"{stem}.csv").read_bytes() == (tmp_path / "b" / f"{stem}.csv").read_bytes()
    r3 = run("--seed", 99, "simulate", "--config", cfg, "--out-dir", tmp_path / "c")
    assert r3.returncode == 0
    assert json.loads((tmp_path / "c" / "wilks.json").read_text())["manifest"]["config"]["seed"] == 99


def test_simulate_rejects_unknown_field(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"study": "wilks", "replicatons": 3}))
    r = run("simulate", "--config", cfg, "--out-dir", tmp_path)
    assert r.returncode == 1
    assert "$.replicatons" in r.stderr


def test_samples_validate():
    root = SCHEMAS.parent / "samples"
    configs = sorted(root.glob("*.study.json"))
    assert configs
    for p in configs:
        validate(json.loads(p.read_text()), "study_config.schema.json")


def test_laplace_expression_outcome_is_finite_below_n_over_k(tmp_path):
    # βμ − α(μ)/k is piecewise linear in μ with kinks at the data, so for β < N/k
    # the supremum is attained at an observation.
    xs = [round(0.37 * i - 7.3 + (0.11 if i % 3 else -0.05) * i, 4) for i in range(41)]
    data = write_lines(tmp_path / "l.csv", xs)
    beta, k = 10.0, 1.0
    med = sorted(xs)[20]
    alpha = lambda m: sum(abs(x - m) for x in xs) - sum(abs(x - med) for x in xs)
    expected = max(beta * m - alpha(m) / k for m in xs)
    r = run("evaluate", "--family", "laplace", "--phi", "x", "--beta", beta, "--k", k, data)
    assert r.returncode == 0, r.stderr
    out = json.loads(r.stdout)
    assert out["status"] == "finite"
    assert out["value"] == pytest.approx(expected, rel=1e-6)


def test_custom_family_with_restricted_domain(tmp_path):
    # Geometric on {0, 1, ...}: T = x, A = −log(1 − e^θ) on θ < 0. P(X ≥ 5) = q⁵ is
    # increasing in q, so the γ = ∞ upper value is q⁵ at the upper root of α(q) = k.
    from scipy.optimize import brentq

    xs = list(range(6))
    data = write_lines(tmp_path / "geo.csv", xs)
    k = 1.92
    ll = lambda q: sum(x * math.log(q) + math.log(1 - q) for x in xs)
    qh = sum(xs) / len(xs) / (1 + sum(xs) / len(xs))
    qhi = brentq(lambda q: ll(qh) - ll(q) - k, qh, 1 - 1e-12)
    support = ",".join(str(i) for i in range(401))
    r = run("evaluate", "--family", "custom", "--stat", "x", "--log-partition", "-log(1 - exp(theta1))",
            "--support-points", support, "--theta-domain=-inf,0", "--phi", "x >= 5", "--gamma", "inf", "--k", k, data)
    assert r.returncode == 0, r.stderr
    out = json.loads(r.stdout)
    validate(out, "evaluate.schema.json")
    assert out["e_mle"] == pytest.approx(qh**5, rel=1e-8)
    assert out["value"] == pytest.approx(qhi**5, rel=1e-6)
    assert run("evaluate", "--family", "custom", "--stat", "x", "--log-partition", "x", "--theta-domain", "0",
               data).returncode == 1
