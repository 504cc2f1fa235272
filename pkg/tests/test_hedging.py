import math

import numpy as np
import pytest

from fracsmooth.errors import ConfigError
from fracsmooth.hedging import (estimates_to_csv, l2_tracking_error,
                                tracking_error_process,
                                tracking_error_terminal, z_regularity)
from fracsmooth.model import MarketModel
from fracsmooth.payoffs import Payoff
from fracsmooth.timenets import make_theta_net

MODEL = MarketModel(s0=1.0, sigma=1.0, mu=0.0, T=1.0)


def test_affine_hedge_is_exact():
    p = Payoff.affine(0.5, 2.0)
    net = make_theta_net(16, 1.0, 1.0)
    for measure in ("martingale", "historical"):
        sample = tracking_error_terminal(p, MODEL, net, 500, 7,
                                         measure=measure)
        assert np.max(np.abs(sample.terminal_errors)) < 1e-12


def test_terminal_error_centered_under_martingale_measure():
    p = Payoff.call(1.0)
    net = make_theta_net(32, 1.0, 1.0)
    sample = tracking_error_terminal(p, MODEL, net, 50_000, 11)
    errs = sample.terminal_errors
    assert abs(errs.mean()) < 4.0 * errs.std() / math.sqrt(errs.size)


def test_error_shrinks_with_refinement():
    p = Payoff.call(1.0)
    e_coarse = l2_tracking_error(p, MODEL, make_theta_net(8, 1.0, 1.0),
                                 20_000, 5)
    e_fine = l2_tracking_error(p, MODEL, make_theta_net(128, 1.0, 1.0),
                               20_000, 5)
    assert e_fine.l2_error < 0.5 * e_coarse.l2_error
    assert e_fine.stderr > 0.0


def test_process_values_at_eval_times():
    p = Payoff.call(1.0)
    net = make_theta_net(8, 1.0, 1.0)
    ev = [0.3, 0.6]
    sample = tracking_error_process(p, MODEL, net, 2000, 13, ev)
    assert sample.process_values.shape == (2000, 2)
    # the tracking error is a martingale started at 0 under the pricing
    # measure, so each time slice is centered
    for col in range(2):
        v = sample.process_values[:, col]
        assert abs(v.mean()) < 4.0 * v.std() / math.sqrt(v.size)
    with pytest.raises(ConfigError):
        tracking_error_process(p, MODEL, net, 10, 0, [1.0])


def test_thread_invariance():
    p = Payoff.binary(1.0)
    net = make_theta_net(16, 0.5, 1.0)
    a = tracking_error_terminal(p, MODEL, net, 5000, 3, threads=1)
    b = tracking_error_terminal(p, MODEL, net, 5000, 3, threads=8)
    np.testing.assert_array_equal(a.terminal_errors, b.terminal_errors)


def test_net_maturity_mismatch_rejected():
    p = Payoff.call(1.0)
    net = make_theta_net(8, 1.0, 2.0)
    with pytest.raises(ConfigError):
        tracking_error_terminal(p, MODEL, net, 10, 0)
    with pytest.raises(ConfigError):
        l2_tracking_error(p, MODEL, make_theta_net(8, 1.0, 1.0), 1, 0)


def test_estimates_to_csv(tmp_path):
    p = Payoff.call(1.0)
    net = make_theta_net(8, 1.0, 1.0)
    est = l2_tracking_error(p, MODEL, net, 100, 2)
    path = tmp_path / "est.csv"
    estimates_to_csv(path, [(p, MODEL, est, 2, "martingale")])
    lines = path.read_text().splitlines()
    assert lines[0].startswith("payoff_kind,")
    fields = lines[1].split(",")
    assert fields[0] == "call"
    assert float(fields[-2]) == est.l2_error


def test_z_regularity_matches_monte_carlo_binary():
    p = Payoff.binary(1.0)
    net = make_theta_net(16, 1.0, 1.0)
    quad = z_regularity(p, MODEL, net)
    m = 100_000
    sq = tracking_error_terminal(p, MODEL, net, m, 17).terminal_errors ** 2
    se = sq.std(ddof=1) / math.sqrt(m)
    assert abs(sq.mean() - quad) < 3.0 * se


def test_z_regularity_affine_vanishes():
    # the integrand is an exact cancellation of O(10)-sized terms, so the
    # quadrature leaves rounding residue far below any hedging error
    p = Payoff.affine(1.0, 3.0)
    net = make_theta_net(4, 1.0, 1.0)
    assert abs(z_regularity(p, MODEL, net)) < 1e-5


def test_z_regularity_refinement_halves_error():
    p = Payoff.call(1.0)
    a = z_regularity(p, MODEL, make_theta_net(8, 1.0, 1.0))
    b = z_regularity(p, MODEL, make_theta_net(16, 1.0, 1.0))
    assert b == pytest.approx(a / 2.0, rel=0.1)
