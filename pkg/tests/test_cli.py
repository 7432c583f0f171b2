import json
import math

import numpy as np
import pytest

from tswave import cli, dispersion, osresolvent
from tswave.params import SpectralParams


def fast_cfg(**kw):
    base = dict(regime="eighth", amplitude=2.0, eps_list=[1e-12], grid_n=700)
    base.update(kw)
    return cli.RunConfig(**base)


class TestRunConfig:
    def test_empty_eps_list_rejected(self):
        with pytest.raises(ValueError):
            cli.RunConfig(eps_list=[])

    def test_eps_list_must_decrease(self):
        with pytest.raises(ValueError):
            cli.RunConfig(eps_list=[1e-10, 1e-8])

    def test_beta_range(self):
        with pytest.raises(ValueError):
            cli.RunConfig(regime="beta", beta=0.125, eps_list=[1e-10])

    def test_tolerances_positive(self):
        with pytest.raises(ValueError):
            cli.RunConfig(eps_list=[1e-10], picard_tol=0.0)

    def test_params_builder(self):
        cfg = cli.RunConfig(regime="beta", amplitude=1.0, beta=0.115,
                            eps_list=[1e-10])
        p = cfg.params(1e-10)
        assert p.beta == 0.115 and not p.is_eighth


class TestConfigFile:
    def test_file_plus_flag_override(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# comment\nregime=eighth\namplitude=3.0\n"
                        "eps_list=1e-8,1e-10\ngrid_n=800\n")
        parser_args = type("Args", (), {})()
        parser_args.config = str(path)
        parser_args.amplitude_a = 2.0     # flag overrides file amplitude
        cfg = cli.build_config(parser_args)
        assert cfg.amplitude == 2.0
        assert cfg.eps_list == [1e-8, 1e-10]
        assert cfg.grid_n == 800

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("bogus=1\n")
        args = type("Args", (), {"config": str(path)})()
        with pytest.raises(ValueError):
            cli.build_config(args)


@pytest.fixture(scope="module")
def sweep(tmp_path_factory):
    cfg = fast_cfg(out=str(tmp_path_factory.mktemp("sweep") / "out.csv"))
    rows, footer, text = cli.run_sweep(cfg)
    return cfg, rows, footer, text


class TestSweep:

    def test_row_contents(self, sweep):
        cfg, rows, footer, text = sweep
        row = rows[0]
        assert row["status"] == "ok"
        assert row["winding"] == 1
        assert row["im_c_app"] > 0.0
        assert row["growth_rate"] > 0.0
        assert math.isfinite(row["e1s_l2"])

    def test_deterministic_output(self, sweep):
        cfg, rows, footer, text = sweep
        _, _, text2 = cli.run_sweep(cfg)
        assert text2 == text

    def test_csv_schema(self, sweep):
        cfg, rows, footer, text = sweep
        header = text.splitlines()[0].split(",")
        assert header == cli.SWEEP_COLUMNS

    def test_failed_row_is_recorded_not_raised(self):
        cfg = fast_cfg(eps_list=[1e-8])
        rows = [cli.sweep_row(cfg, 1e-8)]
        assert rows[0]["status"] == "winding=0"
        assert rows[0]["winding"] == 0
        assert math.isfinite(rows[0]["min_gamma0_boundary"])
        assert math.isfinite(rows[0]["e1s_l2"])   # audit still runs

    def test_json_format(self):
        cfg = fast_cfg(fmt="json")
        rows, footer, text = cli.run_sweep(cfg)
        payload = json.loads(text)
        assert payload["rows"][0]["status"] == "ok"

    def test_footer_slopes(self):
        cfg = fast_cfg(eps_list=[1e-11, 1e-12])
        rows, footer, text = cli.run_sweep(cfg)
        assert "slope_e1s_l2" in footer
        assert "# slope_e1s_l2" in text

    def test_exit_codes(self, tmp_path, capsys):
        rc_ok = cli.main(["sweep", "--A", "2", "--eps", "1e-12",
                          "--grid-n", "700", "--out", str(tmp_path / "a.csv")])
        assert rc_ok == 0
        rc_bad = cli.main(["sweep", "--A", "2", "--eps", "1e-8",
                           "--grid-n", "700", "--out", str(tmp_path / "b.csv")])
        assert rc_bad == 1

    def test_worker_pool_matches_serial(self):
        cfg = fast_cfg(eps_list=[1e-11, 1e-12], jobs=2)
        rows_pool, _, text_pool = cli.run_sweep(cfg)
        cfg1 = fast_cfg(eps_list=[1e-11, 1e-12], jobs=1)
        _, _, text_serial = cli.run_sweep(cfg1)
        assert text_pool == text_serial


class TestOtherCommands:
    def test_root_command(self, capsys):
        rc = cli.main(["root", "--A", "2", "--eps", "1e-12"])
        out = capsys.readouterr().out
        payload = json.loads(out)
        assert rc == 0
        assert payload[0]["certified"] is True
        assert payload[0]["winding"] == 1

    def test_validate_command(self, capsys):
        rc = cli.main(["validate", "--A", "2", "--eps", "1e-12"])
        payload = json.loads(capsys.readouterr().out)
        assert rc == 0
        assert payload["structure_ok"] is True

    def test_audit_command(self, capsys):
        rc = cli.main(["audit", "--A", "2", "--eps", "1e-12", "--grid-n", "700"])
        payload = json.loads(capsys.readouterr().out)
        assert rc == 0
        assert payload[0]["tau1_measured"] > 0.0
        assert payload[0]["e3s_l2w"] > 0.0

    def test_airy_table(self, capsys):
        rc = cli.main(["airy-table", "--k", "0,1", "--re", "0:4:3",
                       "--im", "0:1:2"])
        out = capsys.readouterr().out.splitlines()
        assert rc == 0
        assert out[0] == "k,re_z,im_z,re_ai,im_ai,branch"
        assert any(line.endswith("series") for line in out[1:])


@pytest.fixture(scope="module")
def exported():
    p0 = SpectralParams.eighth(2.0, 1e-12)
    rep = dispersion.certify_eighth(p0)
    c = p0.chat_to_c(rep.c_root)
    bvp = osresolvent.build_bvp(p0, n_nodes=900)
    t_list = [0.0, 5e-4, 1e-3]
    rows, energies, text = cli.export_mode(c, p0, t_list, nx=12, ny=48,
                                           bvp=bvp)
    return p0, c, t_list, rows, energies


class TestExportMode:

    def test_energy_normalized_and_exponential(self, exported):
        p0, c, t_list, rows, energies = exported
        assert energies[0] == pytest.approx(1.0)
        rate = 2.0 * p0.alpha * c.imag / p0.sqrt_eps
        for t, e in zip(t_list, energies):
            assert e == pytest.approx(math.exp(rate * t), rel=1e-10)

    def test_magnetic_field_vanishes_at_wall(self, exported):
        p0, c, t_list, rows, energies = exported
        wall = [r for r in rows if r[2] == 0.0]
        hx_scale = max(abs(r[5]) for r in rows)
        assert max(abs(r[6]) for r in wall) <= 1e-12 * hx_scale

    def test_discrete_divergence_refines(self):
        p0 = SpectralParams.eighth(2.0, 1e-12)
        rep = dispersion.certify_eighth(p0)
        c = p0.chat_to_c(rep.c_root)
        bvp = osresolvent.build_bvp(p0, n_nodes=900)

        # the y lattice must resolve the viscous sub-layer (scale n^{-1/3}
        # in Y) for the finite-difference divergence to be meaningful
        y_span = 2.0 * p0.sqrt_eps

        def max_div(nx, ny):
            rows, _, _ = cli.export_mode(c, p0, [0.0], nx=nx, ny=ny, bvp=bvp,
                                         y_span=y_span)
            arr = np.array([r[:7] for r in rows])
            xs = np.unique(arr[:, 1])
            ys = np.unique(arr[:, 2])
            u = arr[:, 3].reshape(len(xs), len(ys))
            v = arr[:, 4].reshape(len(xs), len(ys))
            dx, dy = xs[1] - xs[0], ys[1] - ys[0]
            # x is periodic over the exported wavelength
            div = (np.roll(u, -1, 0) - np.roll(u, 1, 0))[:, 1:-1] / (2 * dx) \
                + (v[:, 2:] - v[:, :-2]) / (2 * dy)
            return np.max(np.abs(div)), np.max(np.abs(u))

        d1, scale = max_div(16, 400)
        d2, _ = max_div(32, 800)
        assert d2 < d1 / 2.0
        # the stream-function construction cancels the wave-scale derivatives
        wavenumber = p0.alpha / p0.sqrt_eps
        assert d1 < 0.05 * wavenumber * scale


def test_cli_error_exit(capsys):
    rc = cli.main(["sweep", "--A", "2", "--eps-list", "1e-8,1e-6"])
    assert rc == 2
    assert "error" in capsys.readouterr().err
