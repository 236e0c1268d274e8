"""DSL parsing, subcommand outputs, determinism, exit codes."""

import json
from fractions import Fraction

import pytest

from mme.cli import (CLIInputError, ParseError, PotentialSpec, format_spec,
                     main, parse_monomial, parse_potential)
from mme.master import SelfAdjointError

F = Fraction


class TestParser:
    def test_power_expansion(self):
        spec = parse_potential("X1^4", 1)
        assert spec.terms == ((F(1), (1, 1, 1, 1)),)

    def test_two_sided_terms(self):
        spec = parse_potential("0.5*X1*X2 + 0.5*X2*X1", 2)
        assert spec.terms == ((F(1, 2), (1, 2)), (F(1, 2), (2, 1)))

    def test_decimal_to_exact_rational(self):
        spec = parse_potential("0.125*X1", 1)
        assert spec.terms == ((F(1, 8), (1,)),)

    def test_signs_and_merging(self):
        spec = parse_potential("X1^2 - 2*X1^2 + X2", 2)
        assert spec.terms == ((F(-1), (1, 1)), (F(1), (2,)))

    def test_constant_term(self):
        spec = parse_potential("3 + X1^2", 1)
        assert (F(3), ()) in spec.terms

    def test_whitespace_tolerated(self):
        assert parse_potential(" X1 * X2 ", 2) == parse_potential("X1*X2", 2)

    def test_offsets_in_errors(self):
        with pytest.raises(ParseError) as e:
            parse_potential("X1^4 + $", 1)
        assert e.value.offset == 7
        with pytest.raises(ParseError):
            parse_potential("X9", 2)  # color outside arity
        with pytest.raises(ParseError):
            parse_potential("X", 1)

    def test_cross_term_is_trace_selfadjoint(self):
        # tr(X1 X2) is real by cyclicity: accepted
        parse_potential("X1*X2", 2).to_potential()

    def test_selfadjoint_rejection_names_monomial(self):
        with pytest.raises(SelfAdjointError) as e:
            parse_potential("X1*X1*X2*X1*X2*X2", 2).to_potential()
        assert "X1X1X2X1X2X2" in str(e.value)

    def test_monomial_helper(self):
        assert parse_monomial("X1^2", 1) == (1, 1)
        with pytest.raises(CLIInputError):
            parse_monomial("2*X1", 1)
        with pytest.raises(CLIInputError):
            parse_monomial("X1+X1", 1)


class TestRoundTrip:
    def test_parse_print_parse(self):
        for src, d in [("X1^4", 1), ("0.5*X1*X2 + 0.5*X2*X1", 2),
                       ("X1^2 - 3*X2^2 + X1*X2*X1*X2", 2), ("2", 1)]:
            spec = parse_potential(src, d)
            assert parse_potential(format_spec(spec), d) == spec

    def test_format_examples(self):
        spec = PotentialSpec(((F(1), (1, 1)),), 1)
        assert format_spec(spec) == "X1*X1"
        assert format_spec(PotentialSpec((), 1)) == "0"


class TestCommands:
    def test_maps_count(self, capsys):
        rc = main(["maps", "--root", "X1^4", "--genus", "0", "--vertices", ""])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out == {"schema": "mme/1", "command": "maps", "genus": 0,
                       "root": "X1*X1*X1*X1", "vertices": "", "count": 2}

    def test_maps_csv(self, capsys):
        rc = main(["maps", "--root", "X1^4", "--genus", "1", "--vertices", "",
                   "--format", "csv"])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "genus,vertices,count"
        assert lines[1] == "1,-,1"

    def test_maps_table(self, capsys):
        rc = main(["maps", "--root", "X1^2", "--d", "1", "--table",
                   "--potential", "X1^4", "--genus", "1", "--lambda-order", "1",
                   "--format", "csv"])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "genus,root,vertices,count"
        assert "0,X1X1,X1X1X1X1,8" in lines
        assert "1,X1X1,X1X1X1X1,4" in lines
        rc = main(["maps", "--root", "X1^2", "--table"])
        assert rc == 1  # table needs a potential

    def test_budget_exit_one(self, capsys):
        rc = main(["expand", "--potential", "X1^2", "--d", "1",
                   "--genus", "0", "--lambda-order", "99"])
        assert rc == 1

    def test_expand_matches_oracle(self, capsys):
        argv = ["--potential", "X1^4", "--d", "1", "--observable", "X1^2",
                "--genus", "1", "--lambda-order", "2"]
        assert main(["expand", *argv]) == 0
        expand_out = json.loads(capsys.readouterr().out)
        assert main(["oracle", *argv]) == 0
        oracle_out = json.loads(capsys.readouterr().out)
        assert expand_out["series"] == oracle_out["series"]
        assert expand_out["series"][1]["lambda_coeffs"] == ["0", "-4", "240"]

    def test_expand_at_lambda(self, capsys):
        rc = main(["expand", "--potential", "X1^2", "--d", "1", "--observable",
                   "X1^2", "--genus", "0", "--lambda-order", "3",
                   "--lambda", "1/4"])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out["at_lambda"]["values"][0] == str(F(1) - F(2, 4) + F(4, 16) - F(8, 64))

    def test_entropy(self, capsys):
        rc = main(["entropy", "--potential", "X1^4", "--d", "1",
                   "--lambda", "0", "--lambda-order", "3"])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out["chi"] == "0" and out["identity_check"] is True

    def test_verify_quadratic_exit_zero(self, capsys):
        assert main(["verify", "--suite", "quadratic"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["ok"] is True

    def test_unknown_suite(self, capsys):
        assert main(["verify", "--suite", "nope"]) == 1

    def test_input_errors_exit_one(self, capsys):
        assert main(["expand", "--potential", "X1^$", "--d", "1"]) == 1
        assert main(["expand", "--d", "1"]) == 1
        assert main(["expand", "--potential", "i*X1", "--d", "1"]) == 1

    def test_sample_small(self, capsys):
        argv = ["sample", "--potential", "X1^2", "--d", "1", "--lambda", "0.0",
                "--n", "6", "--steps", "900", "--burnin", "100",
                "--thinning", "2", "--chains", "1", "--seed", "4"]
        assert main(argv) == 0
        out = json.loads(capsys.readouterr().out)
        assert abs(out["observables"]["X1^2"]["mean"] - 1.0) < 0.2

    def test_determinism_byte_identical(self, capsys):
        argv = ["sample", "--potential", "X1^2", "--d", "1", "--lambda", "0.0",
                "--n", "4", "--steps", "500", "--burnin", "50",
                "--thinning", "2", "--chains", "2", "--seed", "9"]
        assert main(argv) == 0
        first = capsys.readouterr().out
        assert main(argv) == 0
        second = capsys.readouterr().out
        assert first == second

    def test_out_file_and_config(self, tmp_path, capsys):
        cfg = tmp_path / "job.cfg"
        cfg.write_text("potential = X1^2\nd = 1\nobservable = X1^2\n"
                       "genus = 0\nlambda_order = 2\n")
        out = tmp_path / "res.json"
        rc = main(["expand", "--config", str(cfg), "--out", str(out)])
        assert rc == 0
        data = json.loads(out.read_text())
        assert data["series"][0]["lambda_coeffs"] == ["1", "-2", "4"]
        # flags override config values
        rc = main(["expand", "--config", str(cfg), "--lambda-order", "1",
                   "--out", str(out)])
        assert rc == 0
        assert json.loads(out.read_text())["series"][0]["lambda_coeffs"] == ["1", "-2"]

    def test_bad_config_line(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("potential X1^2\n")
        assert main(["expand", "--config", str(cfg)]) == 1
