import io
import subprocess
import sys
from importlib import resources

import numpy as np
import pytest

from conftest import CSI_TABLE, rel_error
from multmodel import cli, generate, oracle
from multmodel.builders import from_table, to_table
from multmodel.engine import Network, normalize, run_query
from multmodel.errors import FormatError, ParseError
from multmodel.io import parse_model, read_model, write_model
from multmodel.lattice import Domains, canonicalize

NETWORKS = resources.files("multmodel") / "networks"
BUNDLED = sorted(p.name for p in NETWORKS.iterdir() if p.name.endswith((".mm", ".uai")))

HEADER = "MULTMODEL 1\nVARS 4\nDOMS 2 2 2 2\n"


def run_cli(*argv):
    buf = io.StringIO()
    code = cli.main(list(map(str, argv)), out=buf)
    return code, buf.getvalue()


class TestParse:
    def test_table_block(self):
        net = parse_model("MULTMODEL 1\nVARS 2\nDOMS 2 2\nTABLE 2 0 1\n0.56 0.14 0.12 0.18\n")
        (f,) = net.factors
        assert f.kind == "table" and len(f) == 4
        assert np.array_equal(to_table(f), [0.56, 0.14, 0.12, 0.18])

    def test_mult_element(self):
        d = Domains((2, 2, 2, 2))
        net = parse_model(HEADER + "MULT 4 0 1 2 3 1\n0.65 4 0:{1} 1:{1} 2:{1} 3:{0}\n")
        (f,) = net.factors
        assert f.elements == ((canonicalize({0: [1], 1: [1], 2: [1], 3: [0]}, d), 0.65),)

    def test_top_and_value_sets(self):
        d = Domains((3,))
        net = parse_model("MULTMODEL 1\nVARS 1\nDOMS 3\nMULT 1 0 2\n2 0\n0.5 1 0:{0|2}\n")
        assert dict(net.factors[0].elements) == {canonicalize({}, d): 2.0,
                                                 canonicalize({0: [0, 2]}, d): 0.5}

    def test_dgraph_failure(self):
        text = HEADER + "DGRAPH 1 0 1\n0.5 1 0:{0}\n"
        with pytest.raises(FormatError):
            parse_model(text)

    def test_noisy_or_and_loglin(self):
        text = ("MULTMODEL 1\nVARS 3\nDOMS 2 2 2\nNOISYOR 2 2 0 1 1 0.2 0.4\n"
                "LOGLIN 2 0 1 2\n0.5 0\n1.5 2 0:{1} 1:{0}\n")
        net = parse_model(text)
        assert [f.kind for f in net.factors] == ["noisy-or", "log-linear"]
        assert len(net.factors[0]) == 2 ** 2 + 2 + 1

    @pytest.mark.parametrize("text, line", [
        ("MULTMODEL 1\nVARS 1\nDOMS 2\nTABLE 1 0\n0.5 abc\n", 5),
        ("MULTMODEL 1\nVARS 1\nDOMS 2\n\nFROB 1 0\n", 5),
        ("MULTMODEL 1\nVARS 1\nDOMS 2\nMULT 1 0 1\n1.0 1 0-{1}\n", 5),
        ("MULTMODEL 2\n", 1),
        ("HELLO\n", 1),
    ])
    def test_parse_error_lines(self, text, line):
        with pytest.raises(ParseError) as exc:
            parse_model(text)
        assert exc.value.lineno == line
        assert str(exc.value).startswith(f"line {line}:")

    @pytest.mark.parametrize("body", [
        "TABLE 1 7\n0.5 0.5\n",          # unknown variable
        "MULT 1 0 1\n1.0 1 1:{0}\n",     # variable outside block scope
        "MULT 1 0 1\n1.0 1 0:{5}\n",     # value out of domain
        "NOISYOR 0 1 1 0.0 0.5\n",       # zero leak
        "LOGLIN 1 0 2\n1.0 1 0:{1}\n2.0 1 0:{1}\n",  # duplicate term
    ])
    def test_format_errors(self, body):
        with pytest.raises(FormatError):
            parse_model("MULTMODEL 1\nVARS 2\nDOMS 2 2\n" + body)

    def test_truncated(self):
        with pytest.raises(ParseError):
            parse_model("MULTMODEL 1\nVARS 1\nDOMS 2\nTABLE 1 0\n0.5\n")

    def test_uai(self):
        net = read_model(NETWORKS / "chain.uai")
        assert net.domains.cardinalities == (2, 2, 3)
        assert [f.scope for f in net.factors] == [(0,), (0, 1), (1, 2)]
        assert np.array_equal(to_table(net.factors[2]), [0.2, 0.3, 0.5, 0.1, 0.1, 0.8])

    def test_uai_bad_count(self):
        with pytest.raises(FormatError):
            parse_model("MARKOV\n1\n2\n1\n1 0\n3\n0.1 0.2 0.3\n")


class TestRoundTrip:
    @pytest.mark.parametrize("name", [n for n in BUNDLED if n.endswith(".mm")])
    def test_bundled(self, name):
        net = read_model(NETWORKS / name)
        again = parse_model(write_model(net))
        assert again == net
        assert [f.kind for f in again.factors] == [f.kind for f in net.factors]

    def test_csi4_dgraph(self, csi_domains, csi_dgraph):
        again = parse_model(write_model(Network(csi_domains, (csi_dgraph,))))
        assert again.factors[0].elements == csi_dgraph.elements
        assert len(again.factors[0]) == 6

    def test_empty(self):
        net = Network(Domains(()))
        assert parse_model(write_model(net)) == net
        net = Network(Domains((2, 3)))
        assert parse_model(write_model(net)) == net

    def test_bit_exact(self):
        rng = np.random.default_rng(4)
        d = Domains((3, 3))
        vals = rng.uniform(-1e3, 1e3, size=9) * 10.0 ** rng.integers(-300, 300, size=9)
        net = Network(d, (from_table(d, (1, 0), vals),))
        assert np.array_equal(to_table(parse_model(write_model(net)).factors[0]), vals)

    @pytest.mark.parametrize("seed", range(10))
    def test_random_mixed(self, seed):
        net = generate.random_network(np.random.default_rng(seed), max_vars=6)
        assert parse_model(write_model(net)) == net

    def test_non_finite_rejected(self):
        d = Domains((2,))
        net = Network(d, (from_table(d, (0,), [1.0, 2.0]).replace(
            elements=((canonicalize({0: [0]}, d), float("inf")),)),))
        with pytest.raises(FormatError):
            write_model(net)


class TestCli:
    def path(self, name):
        return str(NETWORKS / name)

    def test_query(self):
        code, out = run_cli("query", "--model", self.path("bn_ab.mm"), "--query", "1",
                            "--evidence", "0=1", "--heuristic", "min-fill")
        assert code == 0
        assert "P(X1 | X0=1)" in out
        assert " 0  0.12  0.4" in out and " 1  0.18  0.6" in out

    @pytest.mark.parametrize("name", BUNDLED)
    def test_query_matches_oracle(self, name):
        net = read_model(NETWORKS / name)
        for q in range(net.n_vars):
            want = oracle.marginal(net, [q])
            got = normalize(run_query(net, [q])).values
            assert rel_error(got, want / want.sum()) <= 1e-9
            code_q, out_q = run_cli("query", "--model", self.path(name), "--query", q)
            code_o, out_o = run_cli("oracle", "--model", self.path(name), "--query", q)
            assert code_q == code_o == 0
            rows_q = [ln.split() for ln in out_q.splitlines()[1:1 + net.domains[q] + 1]]
            rows_o = [ln.split() for ln in out_o.splitlines()[1:1 + net.domains[q] + 1]]
            assert rows_q[0] == rows_o[0]
            for a, b in zip(rows_q[1:], rows_o[1:]):
                assert rel_error([float(x) for x in a[1:]], [float(x) for x in b[1:]]) <= 1e-9

    def test_convert_positive(self, tmp_path):
        target = tmp_path / "pos.mm"
        code, _ = run_cli("convert", "--model", self.path("csi4_table.mm"),
                          "--to", "positive", "--tol", "1e-9", "--output", target)
        assert code == 0
        text = target.read_text()
        assert text.count("MULT ") == 1 and "MULT 4 0 1 2 3 8" in text
        (f,) = read_model(target).factors
        assert len(f) == 8
        assert rel_error(to_table(f), CSI_TABLE) <= 1e-9

    def test_convert_table_and_mult(self):
        code, out = run_cli("convert", "--model", self.path("csi4_dgraph.mm"), "--to", "table")
        assert code == 0
        assert np.array_equal(to_table(parse_model(out).factors[0]), CSI_TABLE)
        code, out = run_cli("convert", "--model", self.path("csi4_dgraph.mm"), "--to", "mult")
        assert code == 0 and "MULT 4 0 1 2 3 6" in out

    def test_stats_validate(self):
        code, out = run_cli("stats", "--model", self.path("mixed.mm"))
        assert code == 0 and "interaction graph" in out
        code, out = run_cli("validate", "--model", self.path("csi4_dgraph.mm"))
        assert code == 0 and out.strip().endswith("valid")

    def test_bench_table(self):
        code, out = run_cli("bench", "--seed", 3)
        assert code == 0
        assert "values agree <= 1e-12" in out
        assert "candidate counts equal table sizes" in out

    def test_bench_noisyor(self):
        code, out = run_cli("bench", "--kind", "noisyor", "--seed", 1)
        assert code == 0 and "values agree" in out

    def test_exit_codes(self, tmp_path):
        bad_syntax = tmp_path / "a.mm"
        bad_syntax.write_text("MULTMODEL 1\nVARS x\n")
        bad_model = tmp_path / "b.mm"
        bad_model.write_text("MULTMODEL 1\nVARS 1\nDOMS 2\nDGRAPH 1 0 1\n1 1 0:{0}\n")
        zero = tmp_path / "c.mm"
        zero.write_text("MULTMODEL 1\nVARS 2\nDOMS 2 2\nTABLE 1 0\n1 0\nTABLE 1 1\n0.5 0.5\n")
        degenerate = tmp_path / "d.mm"
        degenerate.write_text("MULTMODEL 1\nVARS 2\nDOMS 2 2\nMULT 2 0 1 2\n"
                              "-1 1 0:{1}\n2 2 0:{1} 1:{1}\n")
        wide = tmp_path / "e.mm"
        wide.write_text("MULTMODEL 1\nVARS 30\nDOMS " + " 2" * 30 + "\n")
        bn = self.path("bn_ab.mm")
        assert run_cli()[0] == 1
        assert run_cli("query", "--model", bn)[0] == 1
        assert run_cli("query", "--model", bn, "--query", "0", "--evidence", "0=1")[0] == 1
        assert run_cli("query", "--model", bn, "--query", "0", "--order", "0")[0] == 1
        assert run_cli("query", "--model", tmp_path / "missing.mm", "--query", "0")[0] == 1
        assert run_cli("query", "--model", bad_syntax, "--query", "0")[0] == 2
        assert run_cli("query", "--model", bad_model, "--query", "0")[0] == 3
        assert run_cli("query", "--model", zero, "--query", "1", "--evidence", "0=1")[0] == 4
        assert run_cli("query", "--model", degenerate, "--query", "1")[0] == 4
        assert run_cli("oracle", "--model", wide, "--query", "0")[0] == 5

    def test_console_script_module(self):
        proc = subprocess.run([sys.executable, "-m", "multmodel.cli", "oracle", "--model",
                               self.path("bn_ab.mm"), "--query", "1"],
                              capture_output=True, text=True, check=False)
        assert proc.returncode == 0 and "0.68" in proc.stdout
