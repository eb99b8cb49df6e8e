import re
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from scipy import stats

from spikecopula.copula import DependenceSummary, pseudo_observations
from spikecopula.intervals import enumerate_cases
from spikecopula.network import FptSample, NetworkSpec, SpikeTrains
from spikecopula.report import (PlotSpec, dependence_table, marker_opacity, network_diagram,
                                panel_matrix, scatterplot_svg)

NS = {"s": "http://www.w3.org/2000/svg"}
SIZE = 320


def circles(svg):
    root = ET.fromstring(svg.encode())
    return root, [(float(c.get("cx")), float(c.get("cy"))) for c in root.iterfind(".//s:g[@class='points']/s:circle", NS)]


def unit_coords(svg, size=SIZE):
    _, pts = circles(svg)
    a = np.array(pts)
    return a[:, 0] / size, 1 - a[:, 1] / size


def test_scatterplot_is_wellformed_and_deterministic():
    r = np.random.default_rng(0)
    pobs = pseudo_observations(r.standard_normal((200, 2)))
    a = scatterplot_svg(pobs, PlotSpec(title="x < y & z"))
    b = scatterplot_svg(pobs, PlotSpec(title="x < y & z"))
    assert a == b
    root, pts = circles(a)
    assert root.tag.endswith("svg") and len(pts) == 200
    assert "x &lt; y &amp; z" in a


def test_comonotone_points_on_diagonal():
    x = np.arange(50.0)
    u, v = unit_coords(scatterplot_svg(pseudo_observations(np.column_stack([x, x ** 3]))))
    np.testing.assert_allclose(u, v, atol=0.01)


def test_independent_scatter_is_uniform():
    r = np.random.default_rng(1)
    n = 10_000
    u, v = unit_coords(scatterplot_svg(pseudo_observations(r.standard_normal((n, 2)))))
    counts, _, _ = np.histogram2d(np.clip(u, 0, 1 - 1e-9), np.clip(v, 1e-9, 1), bins=10, range=[[0, 1], [0, 1]])
    chi2 = ((counts - n / 100) ** 2 / (n / 100)).sum()
    assert chi2 < stats.chi2.ppf(0.99, 99)


def test_opacity_scales_with_n():
    assert marker_opacity(10_000) == 0.25
    assert marker_opacity(10) == 1.0
    assert marker_opacity(10**8) == 0.05


def test_scatterplot_rejects_outside_unit_square():
    from spikecopula.copula import PseudoObservations
    with pytest.raises(ValueError):
        scatterplot_svg(PseudoObservations(np.array([0.5, 1.2]), np.array([0.1, 0.2])))


def _cell_points(root, r, c):
    g = root.find(f".//s:g[@class='cell'][@data-row='{r}'][@data-col='{c}']", NS)
    return g, [(float(e.get("cx")), float(e.get("cy"))) for e in g.iterfind(".//s:circle", NS)]


def test_fpt_panel_matrix_layout_and_transposition():
    r = np.random.default_rng(2)
    times = r.gamma(5, size=(300, 3))
    svg = panel_matrix(FptSample(times, np.arange(300)))
    root = ET.fromstring(svg.encode())
    cells = root.findall(".//s:g[@class='cell']", NS)
    assert len(cells) == 9
    assert sorted(int(c.get("data-row")) for c in cells if c.get("data-empty") == "1") == [0, 1, 2]
    cell = 150
    for i, j in ((0, 1), (0, 2), (1, 2)):
        _, a = _cell_points(root, i, j)
        _, b = _cell_points(root, j, i)
        ua = np.array([(x, cell - y) for x, y in a])
        ub = np.array([(cell - y, x) for x, y in b])
        np.testing.assert_allclose(ua, ub, atol=0.011)


def test_two_neuron_case_grid():
    r = np.random.default_rng(3)
    trains = SpikeTrains([np.cumsum(r.exponential(10, 200)), np.cumsum(r.exponential(10, 200))])
    svg = panel_matrix(enumerate_cases(trains))
    root = ET.fromstring(svg.encode())
    assert len(root.findall(".//s:g[@class='cell']", NS)) == 4
    for label in ("FWD-A", "BWD-A", "FWD-B", "BWD-B"):
        assert f">{label}<" in svg


def test_three_neuron_case_grid_needs_target():
    r = np.random.default_rng(4)
    trains = SpikeTrains([np.cumsum(r.exponential(10, 200)) for _ in range(3)])
    cases = enumerate_cases(trains)
    with pytest.raises(ValueError):
        panel_matrix(cases)
    svg = panel_matrix(cases, target=1, direction="backward")
    root = ET.fromstring(svg.encode())
    assert len(root.findall(".//s:g[@class='cell'][@data-empty='1']", NS)) == 3
    assert ">D_A<" in svg and ">D_C<" in svg


def _edges(svg):
    root = ET.fromstring(svg.encode())
    return [(e.get("class"), e.get("data-source"), e.get("data-target"), e.get("marker-end"))
            for e in root.iterfind(".//s:line", NS)], root


def test_network_diagram_single_excitatory_edge():
    edges, root = _edges(network_diagram(NetworkSpec.with_jumps(2, {(0, 1): 3.0})))
    assert edges == [("edge excitatory", "1", "2", "url(#arrow)")]
    labels = [t.text for t in root.iterfind(".//s:text[@class='edge-label']", NS)]
    assert labels == ["3"]


def test_network_diagram_inhibitory_edge():
    edges, _ = _edges(network_diagram(NetworkSpec.with_jumps(3, {(1, 2): -3.0})))
    assert edges == [("edge inhibitory", "2", "3", "url(#dot)")]


def test_network_diagram_isolated_nodes():
    edges, root = _edges(network_diagram(NetworkSpec.standard(3)))
    assert edges == []
    assert len(root.findall(".//s:g[@class='node']", NS)) == 3


def test_network_diagram_reciprocal_edges_separate():
    svg = network_diagram(NetworkSpec.with_jumps(2, {(0, 1): 1.0, (1, 0): 1.0}))
    ys = sorted(set(re.findall(r'y1="([\d.]+)"', svg)))
    assert len(ys) == 2


def _summary(label, tau, p):
    return DependenceSummary(label, 100, 0.1, tau, 0.1, p)


def test_table_renders_insignificant_tau_as_zero():
    text, csv_text = dependence_table([_summary("FPT-12", 0.013, 0.4), _summary("FPT-13", 0.3, 1e-9)])
    lines = text.splitlines()
    assert len(lines) == 3
    assert lines[1].split()[3] == "0.00"
    assert lines[2].split()[3] == "0.30"
    assert "0.0130" in csv_text


def test_table_single_row():
    text, csv_text = dependence_table([_summary("X", 0.5, 0.001)])
    assert len(text.splitlines()) == 2 and len(csv_text.splitlines()) == 2
    with pytest.raises(ValueError):
        dependence_table([])
