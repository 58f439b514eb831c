import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from polardecomp.channel import ChannelSpec
from polardecomp.codec import CSV_HEADER, PolarCode, bit_reversal, channel_llr, encode, sc_decode, simulate
from polardecomp.errors import DomainError
from polardecomp.oracle import polar_matrix


def _brute_force_sc(llr, frozen, margins=None):
    # each bit decided from its exact posterior given all LLRs and the
    # earlier decisions, with later bits uniform
    L = llr.size
    B = polar_matrix(L).astype(int)
    u_hat = np.zeros(L, dtype=np.uint8)
    margins = [] if margins is None else margins
    for i in range(L):
        if frozen[i]:
            continue
        logp = [-np.inf, -np.inf]
        for tail in itertools.product((0, 1), repeat=L - i - 1):
            for b in (0, 1):
                u = np.concatenate([u_hat[:i], [b], tail]).astype(int)
                x = u @ B % 2
                logp[b] = np.logaddexp(logp[b], -np.sum(x * llr))
        u_hat[i] = int(logp[1] > logp[0])
        margins.append(abs(logp[1] - logp[0]))
    return u_hat


class TestPolarCode:
    def test_sorted_and_rate(self):
        code = PolarCode(8, (8, 4, 6, 7))
        assert code.info_set == (4, 6, 7, 8)
        assert code.K == 4 and code.rate == 0.5
        np.testing.assert_array_equal(code.frozen_mask, [1, 1, 1, 0, 1, 0, 0, 0])

    @pytest.mark.parametrize("L,info", [(6, (1,)), (8, (0,)), (8, (9,)), (8, (2, 2))])
    def test_invalid(self, L, info):
        with pytest.raises(DomainError):
            PolarCode(L, info)


class TestEncode:
    def test_examples(self):
        np.testing.assert_array_equal(encode([1, 0]), [1, 0])
        np.testing.assert_array_equal(encode([0, 1]), [1, 1])
        np.testing.assert_array_equal(encode([0, 0, 0, 1]), [1, 1, 1, 1])
        np.testing.assert_array_equal(encode([0, 1, 0, 0]), [1, 1, 0, 0])

    @pytest.mark.parametrize("L", [2, 4, 8, 16, 32, 64])
    def test_matches_generator(self, L):
        rng = np.random.default_rng(L)
        u = rng.integers(0, 2, (20, L))
        np.testing.assert_array_equal(encode(u), u @ polar_matrix(L) % 2)

    @pytest.mark.parametrize("L", [2, 4, 8, 16, 32, 64])
    def test_involution(self, L):
        u = np.random.default_rng(L).integers(0, 2, (10, L))
        np.testing.assert_array_equal(encode(encode(u)), u)

    def test_bit_reversal(self):
        np.testing.assert_array_equal(bit_reversal(8), [0, 4, 2, 6, 1, 5, 3, 7])
        u = np.random.default_rng(0).integers(0, 2, 8)
        np.testing.assert_array_equal(encode(u, bit_reverse=True), encode(u)[bit_reversal(8)])

    def test_length_errors(self):
        with pytest.raises(DomainError):
            encode([1, 0, 1])
        with pytest.raises(DomainError):
            encode([1, 0, 1, 1], L=8)


class TestDecode:
    @pytest.mark.parametrize("L", [2, 4, 8, 16, 64, 256])
    def test_noiseless_round_trip(self, L):
        rng = np.random.default_rng(L)
        info = rng.choice(np.arange(1, L + 1), L // 2, replace=False)
        code = PolarCode(L, info)
        u = np.zeros((5, L), dtype=np.uint8)
        u[:, np.array(code.info_set) - 1] = rng.integers(0, 2, (5, code.K))
        llr = np.where(encode(u) == 0, np.inf, -np.inf)
        np.testing.assert_array_equal(sc_decode(llr, code), u)

    def test_all_frozen(self):
        code = PolarCode(8, ())
        llr = np.random.default_rng(0).normal(size=8)
        np.testing.assert_array_equal(sc_decode(llr, code), np.zeros(8))

    def test_zero_llr_ties_to_zero(self):
        code = PolarCode(4, (1, 2, 3, 4))
        np.testing.assert_array_equal(sc_decode(np.zeros(4), code), np.zeros(4))

    def test_length_error(self):
        with pytest.raises(DomainError):
            sc_decode(np.zeros(5), PolarCode(8, (8,)))

    def test_single_and_batch_agree(self):
        code = PolarCode(16, range(9, 17))
        llr = np.random.default_rng(1).normal(1.0, 2.0, (6, 16))
        batch = sc_decode(llr, code)
        for k in range(6):
            np.testing.assert_array_equal(sc_decode(llr[k], code), batch[k])

    @pytest.mark.parametrize("info", [(5, 6, 7, 8), (2, 4, 6, 7, 8), (1, 2, 3, 4, 5, 6, 7, 8), (4, 8)])
    def test_matches_exact_posterior(self, info):
        code = PolarCode(8, info)
        rng = np.random.default_rng(len(info))
        for _ in range(25):
            llr = rng.normal(0.5, 2.0, 8)
            np.testing.assert_array_equal(sc_decode(llr, code), _brute_force_sc(llr, code.frozen_mask))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-20, 20), min_size=4, max_size=4), st.sets(st.integers(1, 4)))
    def test_matches_exact_posterior_random(self, llr, info):
        code = PolarCode(4, info)
        llr = np.array(llr)
        margins = []
        expected = _brute_force_sc(llr, code.frozen_mask, margins)
        # a near-tie may round either way and then steer every later decision
        if min(margins, default=1.0) > 1e-9:
            np.testing.assert_array_equal(sc_decode(llr, code), expected)

    def test_rate_one_is_hard_decision(self):
        # SC on the full code returns the source word of the sliced channel output
        spec = ChannelSpec.from_snr_db(1.0)
        code = PolarCode(16, range(1, 17))
        rng = np.random.default_rng(4)
        y = rng.normal(0.0, spec.sigma, (200, 16)) + spec.amplitude * rng.integers(0, 2, (200, 16))
        llr = channel_llr(y, spec)
        np.testing.assert_array_equal(encode(sc_decode(llr, code)), (llr < 0).astype(np.uint8))


class TestSimulate:
    def test_csv_header_and_rows(self):
        spec = ChannelSpec.from_snr_db(0.0)
        table = simulate(PolarCode(8, (4, 6, 7, 8)), spec, [0.0, 1.0], frames=200, seed=1)
        lines = table.to_csv().splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert len(lines) == 3
        assert lines[1].startswith("0.0,200,")

    def test_reproducible(self):
        spec = ChannelSpec.from_snr_db(0.0)
        code = PolarCode(16, range(9, 17))
        a = simulate(code, spec, [0.0, 2.0], frames=500, seed=3).to_csv()
        b = simulate(code, spec, [0.0, 2.0], frames=500, seed=3).to_csv()
        assert a == b

    def test_grid_points_are_independent_streams(self):
        # a point's result does not depend on the points simulated before it
        spec = ChannelSpec.from_snr_db(0.0)
        code = PolarCode(8, (4, 6, 7, 8))
        a = simulate(code, spec, [1.0, 3.0], frames=400, seed=3).rows[0]
        b = simulate(code, spec, [1.0], frames=400, seed=3).rows[0]
        assert a == b

    def test_codeword_error_rate_of_rate_one_code(self):
        # re-encoded decisions are sliced channel outputs, so their error rate is Q(A / 2 sigma)
        spec = ChannelSpec.from_snr_db(2.0)
        code = PolarCode(8, range(1, 9))
        rng = np.random.default_rng(9)
        n = 40_000
        u = rng.integers(0, 2, (n, 8)).astype(np.uint8)
        x = encode(u)
        y = spec.amplitude * x + rng.normal(0.0, spec.sigma, (n, 8))
        x_hat = encode(sc_decode(channel_llr(y, spec), code))
        q = special.ndtr(-spec.amplitude / (2 * spec.sigma))
        rate = np.mean(x_hat != x)
        assert abs(rate - q) < 3 * np.sqrt(q * (1 - q) / x.size)
        fer = np.mean((x_hat != x).any(axis=1))
        expected = 1 - (1 - q) ** 8
        assert abs(fer - expected) < 3 * np.sqrt(expected * (1 - expected) / n)

    def test_improves_with_snr(self):
        spec = ChannelSpec.from_snr_db(0.0)
        table = simulate(PolarCode(16, (8, 10, 11, 12, 13, 14, 15, 16)), spec, [-2.0, 2.0, 8.0], frames=4_000, seed=0)
        ber = [r.ber for r in table.rows]
        assert ber[0] > ber[1] > ber[2]
        assert ber[2] < 1e-3

    def test_frames_positive(self):
        with pytest.raises(DomainError):
            simulate(PolarCode(2, (2,)), ChannelSpec(1.0), [0.0], frames=0)
