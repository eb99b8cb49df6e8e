"""Reference values and network set-ups for the bundled reproduction presets."""
from __future__ import annotations

from .network import NetworkSpec

# (r, tau, rho) of first-passage-time pairs, correlated-noise model
TABLE2 = {
    0.5: (0.38, 0.28, 0.40),
    0.8: (0.68, 0.52, 0.68),
    0.91: (0.80, 0.68, 0.83),
    -0.91: (-0.56, -0.48, -0.70),
}

# (h12, h21) -> (r, tau, rho), jump model
TABLE3 = {
    (1, 1): (0.34, 0.35, 0.43),
    (3, 3): (0.93, 0.92, 0.94),
    (3, 0): (0.49, 0.45, 0.55),
    (3, 1): (0.62, 0.63, 0.70),
    (-1, -1): (-0.23, -0.18, -0.30),
    (-3, -3): (-0.47, -0.29, -0.53),
    (3, -3): (0.35, 0.32, 0.36),
}

# topology -> (tau12, tau23, tau13); 0 stands for "not significant at 5%"
TABLE4 = {
    "correlated-noise": (0.67, 0.67, 0.67),
    "fully-connected": (0.48, 0.48, 0.48),
    "hub-driving": (0.28, 0.46, 0.28),
    "converging": (0.0, 0.30, 0.31),
    "chain": (0.47, 0.28, 0.53),
    "excite-inhibit": (0.0, 0.44, 0.14),
}

# spike-train cases -> (r, tau, rho)
TABLE5 = {  # correlated noise, c = 0.5
    "FWD-A": (0.16, 0.09, 0.13),
    "BWD-A": (0.19, 0.11, 0.16),
    "FWD-B": (0.17, 0.10, 0.15),
    "BWD-B": (0.16, 0.09, 0.13),
}
TABLE6 = {  # jump model, h12 = h21 = 1
    "FWD-A": (0.15, 0.13, 0.16),
    "BWD-A": (0.19, 0.15, 0.19),
    "FWD-B": (0.16, 0.14, 0.17),
    "BWD-B": (0.20, 0.16, 0.21),
}


def jump2(h12: float, h21: float) -> NetworkSpec:
    return NetworkSpec.with_jumps(2, {(0, 1): h12, (1, 0): h21})


def three_neuron(topology: str, h: float = 3.0) -> NetworkSpec:
    """3-neuron networks used for the FPT and spike-train galleries (0-based links)."""
    links = {
        "fully-connected": {(i, j): h for i in range(3) for j in range(3) if i != j},
        "hub-driving": {(0, 1): h, (0, 2): h},
        "converging": {(0, 2): h, (1, 2): h},
        "chain": {(0, 1): h, (1, 2): h},
        "excite-inhibit": {(0, 2): h, (1, 2): -h},
    }
    if topology == "correlated-noise":
        return NetworkSpec.standard(3, corr=0.91)
    if topology not in links:
        raise KeyError(f"unknown topology {topology!r}")
    return NetworkSpec.with_jumps(3, links[topology])


def table4_network(topology: str) -> NetworkSpec:
    # the fully-connected FPT network uses 1 mV jumps, the others 3 mV
    return three_neuron(topology, 1.0 if topology == "fully-connected" else 3.0)


SPIKE_GALLERY = ("fully-connected", "chain", "hub-driving", "converging")
