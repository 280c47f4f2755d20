import numpy as np
import pytest

from clipreg.adversary import (
    AdversaryError,
    Budget,
    DictSpec,
    ascend,
    best_gain_element,
    correlation,
    invisibility_audit,
    sigma_dr,
)
from clipreg.measure import (
    FunctionOracle,
    build_quadrature,
    l2_norm_sq,
    oracle_from_net,
    oracle_from_values,
    sigma_l1,
)
from clipreg.netcore import DomainSpec, Layer, RepCert, RepNet
from clipreg.zoo import planted_net
from conftest import const_oracle

SMALL = Budget(restarts=16, iterations=150)


class TestDictSpec:
    def test_arch(self, dom2):
        assert DictSpec(3, 2, dom2).arch() == [2, 3, 3, 1]

    def test_depth_zero(self, dom2):
        assert DictSpec(5, 0, dom2).arch() == [2, 1]

    def test_rejects_bad_width(self, dom2):
        with pytest.raises(AdversaryError):
            DictSpec(0, 1, dom2)

    def test_rejects_negative_depth(self, dom2):
        with pytest.raises(AdversaryError):
            DictSpec(2, -1, dom2)


class TestCorrelation:
    def test_constant_pair(self, dom1, quad1):
        net = RepNet(dom1, (Layer(np.zeros((1, 1)), np.array([1.0])),))
        assert correlation(quad1, net, const_oracle(1)) == pytest.approx(1.0)

    def test_sign_flip(self, dom1, quad1):
        net = RepNet(dom1, (Layer(np.zeros((1, 1)), np.array([1.0])),))
        assert correlation(quad1, net, const_oracle(-1)) == pytest.approx(-1.0)


class TestAscend:
    def test_deterministic(self, dom2, quad2):
        f = FunctionOracle(lambda X: np.sign(X[:, 0]), "step")
        a = ascend(quad2, DictSpec(2, 1, dom2), f, SMALL, seed=11)
        b = ascend(quad2, DictSpec(2, 1, dom2), f, SMALL, seed=11)
        assert a.value == b.value
        assert np.array_equal(a.witness.layers[0].W, b.witness.layers[0].W)

    def test_value_matches_full_quad_rescore(self, dom2, quad2):
        f = FunctionOracle(lambda X: np.sign(X[:, 0] * X[:, 1]), "sp")
        res = ascend(quad2, DictSpec(2, 1, dom2), f, SMALL, seed=3)
        assert res.value == pytest.approx(
            abs(correlation(quad2, res.witness, f)), abs=1e-12)

    def test_per_restart_bounded_by_value(self, dom2, quad2):
        f = FunctionOracle(lambda X: X[:, 0] ** 2 - 0.5, "par")
        res = ascend(quad2, DictSpec(2, 1, dom2), f, SMALL, seed=9)
        assert res.restarts_run == SMALL.restarts
        assert len(res.per_restart_values) == SMALL.restarts
        assert max(res.per_restart_values) == pytest.approx(res.value)

    def test_recovers_planted_self_correlation(self, dom2, quad2):
        net = planted_net(dom2, 1, 0, seed=21)
        f = oracle_from_net(net)
        res = ascend(quad2, DictSpec(1, 0, dom2), f, Budget(32, 250), seed=5)
        # the planted element itself achieves <f,f> = ||f||^2
        assert res.value >= l2_norm_sq(quad2, f) - 0.01

    def test_matches_brute_force_grid(self):
        # oracle: exhaustive (a, c) grid at resolution 0.005 over the
        # one-dimensional (1|0) family clip(a*w + c) against sin(8*pi*w);
        # best achievable correlation ~ 1/(8*pi).
        dom = DomainSpec(1, 1.0)
        quad = build_quadrature(dom, "low-discrepancy", 4096, seed=3)
        f = FunctionOracle(lambda X: np.sin(8 * np.pi * X[:, 0]), "hf")
        grid_value = 0.039788859319036946
        res = ascend(quad, DictSpec(1, 0, dom), f, Budget(64, 400), seed=2)
        assert res.value == pytest.approx(grid_value, abs=0.01)

    def test_warm_start_never_hurts(self, dom2, quad2):
        f = FunctionOracle(lambda X: np.sign(X[:, 0]), "step")
        spec = DictSpec(2, 1, dom2)
        tiny = Budget(restarts=2, iterations=20)
        cold = ascend(quad2, spec, f, Budget(32, 250), seed=7)
        warm = ascend(quad2, spec, f, tiny, seed=99, warm_start=cold.witness)
        # the injected witness is iterate 0 of entry 0 and is always scored
        assert warm.value >= cold.value - 1e-12

    def test_witness_respects_arch(self, dom2, quad2):
        f = FunctionOracle(lambda X: X[:, 0], "lin")
        res = ascend(quad2, DictSpec(3, 2, dom2), f, Budget(4, 30), seed=1)
        assert res.witness.satisfies(RepCert(3, 2))
        assert abs(res.witness.layers[-1].b[0]) <= dom2.bias_bound(3)

    def test_result_serializes(self, dom2, quad2):
        f = FunctionOracle(lambda X: X[:, 1], "lin")
        res = ascend(quad2, DictSpec(1, 0, dom2), f, Budget(4, 30), seed=1)
        d = res.to_dict()
        assert d["lower_bound_only"] is True
        assert d["value"] == res.value
        assert d["budget"]["restarts"] == 4


class TestBestGainElement:
    def test_gain_never_below_correlation_pick(self, dom2, quad2):
        f = FunctionOracle(lambda X: np.sign(X[:, 0]), "step")
        spec = DictSpec(2, 1, dom2)
        corr = ascend(quad2, spec, f, SMALL, seed=13)
        net = best_gain_element(quad2, spec, f, SMALL, seed=14,
                                warm_start=corr.witness)

        def realized_gain(h):
            hv = oracle_from_net(h).values(quad2)
            fv = f.values(quad2)
            c = float(np.dot(quad2.weights, hv * fv))
            h2 = max(float(np.dot(quad2.weights, hv * hv)), 1e-14)
            return c * c / h2

        assert realized_gain(net) >= realized_gain(corr.witness) - 1e-9

    def test_deterministic(self, dom2, quad2):
        f = FunctionOracle(lambda X: X[:, 0] * X[:, 1], "prod")
        spec = DictSpec(1, 0, dom2)
        a = best_gain_element(quad2, spec, f, SMALL, seed=4)
        b = best_gain_element(quad2, spec, f, SMALL, seed=4)
        assert np.array_equal(a.layers[0].W, b.layers[0].W)


class TestSigmaDr:
    def test_zero_on_identical(self, dom2, quad2):
        f = FunctionOracle(lambda X: X[:, 0], "lin")
        res = sigma_dr(quad2, DictSpec(2, 1, dom2), f, f, Budget(4, 30), seed=1)
        assert res.value == pytest.approx(0.0, abs=1e-12)

    def test_symmetric_exactly(self, dom2, quad2):
        f = FunctionOracle(lambda X: np.sign(X[:, 0]), "step")
        g = const_oracle(0)
        spec = DictSpec(2, 1, dom2)
        ab = sigma_dr(quad2, spec, f, g, SMALL, seed=6)
        ba = sigma_dr(quad2, spec, g, f, SMALL, seed=6)
        assert ab.value == ba.value

    def test_bounded_by_twice_l1(self, dom2, quad2):
        rng = np.random.default_rng(31)
        spec = DictSpec(2, 1, dom2)
        for trial in range(5):
            f = oracle_from_values(quad2, rng.uniform(-1, 1, quad2.size))
            g = oracle_from_values(quad2, rng.uniform(-1, 1, quad2.size))
            res = sigma_dr(quad2, spec, f, g, Budget(8, 60), seed=trial)
            assert res.value <= 2.0 * sigma_l1(quad2, f, g) + 1e-9


class TestInvisibilityAudit:
    def test_visible_function_flagged(self, dom2, quad2):
        audit = invisibility_audit(quad2, DictSpec(2, 1, dom2), const_oracle(1),
                                   epsilon=0.3, budget=SMALL, seed=2)
        assert audit["invisible_up_to_budget"] is False
        assert audit["note"] == "witness exceeds threshold"
        assert audit["result"].value > 0.3

    def test_zero_function_invisible(self, dom2, quad2):
        audit = invisibility_audit(quad2, DictSpec(2, 1, dom2), const_oracle(0),
                                   epsilon=0.3, budget=Budget(4, 30), seed=2)
        assert audit["invisible_up_to_budget"] is True
        assert audit["note"] == "no witness found at this budget"
