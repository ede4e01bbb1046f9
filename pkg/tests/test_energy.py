import pytest

from sensorpress.energy import (
    CpuCostTable,
    RadioModel,
    cycles_compress,
    cycles_residual,
    e_clk,
    energy_compressed,
    energy_raw,
    s_bit,
    savings_report,
)

ZERO_CPU = CpuCostTable(0, 0, 0, 0, 0, 0)


def test_e_clk():
    assert e_clk() == pytest.approx(1.85e-9, rel=1e-12)
    assert e_clk(RadioModel(f_clk=6.6e6)) == pytest.approx(e_clk() / 2)
    assert e_clk(RadioModel(i_mcu=0.0)) == 0.0
    with pytest.raises(ValueError):
        e_clk(RadioModel(f_clk=0))


def test_s_bit():
    assert s_bit() == pytest.approx(233.75e-6, rel=1e-4)
    assert s_bit(RadioModel(i_rx=0.0)) == pytest.approx(206.25e-6, rel=1e-12)
    assert s_bit(RadioModel(data_rate=19200)) == pytest.approx(s_bit() / 2)


def test_bit_in_cycles():
    # one radio bit costs about 126,351 CPU cycles
    assert s_bit() / e_clk() == pytest.approx(126_351, abs=1)


def test_cycles_compress():
    assert cycles_compress(1, 0) == 840
    assert cycles_compress(0, 0) == 0
    assert cycles_compress(90, 32) == 840 * 90 + 763 * 90 * 32 + 52589 * 32 == 3_955_888


def test_cycles_affine():
    for K in (1, 5, 20):
        a, b, c = (cycles_compress(L, K) for L in (10, 20, 30))
        assert b - a == c - b
    for L in (1, 7, 90):
        a, b, c = (cycles_compress(L, K) for K in (10, 20, 30))
        assert b - a == c - b
    cross = cycles_compress(2, 2) - cycles_compress(1, 2) - cycles_compress(2, 1) + cycles_compress(1, 1)
    assert cross == 763


def test_cost_table_validation():
    with pytest.raises(ValueError):
        CpuCostTable(add=-1)
    with pytest.raises(ValueError):
        CpuCostTable(add=1.5)


def test_energy_compressed_value():
    e = energy_compressed(90, 32, 5)
    assert e == pytest.approx(1.85e-9 * 3_955_888 + 32 * 32 * 233.75e-6 * 5, rel=1e-4)
    assert e == pytest.approx(1.204, abs=1e-3)


def test_energy_hops_linear():
    radio = 32 * 32 * s_bit()
    assert energy_compressed(90, 32, 2) - energy_compressed(90, 32, 1) == pytest.approx(radio)
    with pytest.raises(ValueError):
        energy_compressed(90, 32, 0)


def test_degenerate_identity():
    assert energy_compressed(50, 50, 3, table=ZERO_CPU) == pytest.approx(energy_raw(50, 3))


def test_energy_raw():
    assert energy_raw(90, 1) == pytest.approx(2880 * 233.75e-6, rel=1e-4)
    assert energy_raw(90, 4) == pytest.approx(4 * energy_raw(90, 1))
    assert energy_raw(0, 1) == 0.0


def test_savings_report_ratio():
    (row,) = savings_report(90, 32, [5])
    assert row.ratio == pytest.approx(2.80, abs=0.06)
    assert row.worthwhile


def test_not_worthwhile_flag():
    # compressing 90 readings into 89 code values costs more than it saves
    (row,) = savings_report(90, 89, [1])
    assert not row.worthwhile


def test_ratio_nondecreasing_in_hops():
    ratios = [r.ratio for r in savings_report(90, 32, range(1, 21))]
    assert all(b >= a for a, b in zip(ratios, ratios[1:]))


def test_large_l_ratio_excess_is_cpu_share():
    # E_AE / E_raw = K/L + cpu/E_raw; with zero CPU cost it is exactly K/L.
    # The default table's L*K cycle term grows faster than the radio term,
    # so the CPU share rises with L rather than vanishing.
    for L in (10**3, 10**6):
        K = L // 4
        ratio = energy_compressed(L, K, 1) / energy_raw(L, 1)
        cpu_share = e_clk() * cycles_compress(L, K) / energy_raw(L, 1)
        assert ratio == pytest.approx(0.25 + cpu_share, rel=1e-12)
        assert energy_compressed(L, K, 1, table=ZERO_CPU) / energy_raw(L, 1) == pytest.approx(0.25)


def test_residual_stage_is_optional():
    base = energy_compressed(90, 32, 1)
    extra = energy_compressed(90, 32, 1, include_residual_stage=True)
    assert extra - base == pytest.approx(e_clk() * cycles_residual(90, 32))
