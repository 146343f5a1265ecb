#!/usr/bin/env python3
"""Regenerates the bundled feeder and tariff fixtures.

Writes into crates/core/fixtures/. The output is deterministic.

  ieee123.json      IEEE 123-bus test feeder topology at 4.16 kV with 91
                    residential load nodes (the 85 spot loads plus six lateral
                    buses), four step regulators, per-phase decoupled
                    impedances.
  synthetic48.json  A 24 kV rural-style feeder with 48 residential load nodes.
  ladder.json       Uniform 12-section ladder, identical branches and loads,
                    no regulators.
  duke_tou_2018.json  Seasonal TOU schedule with $13/kW monthly demand charge.
"""

import json
import math
import os
import random

OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "fixtures")

# Ohms per mile, per phase: the phase self impedance of each IEEE line
# configuration. Mutual terms are dropped by the decoupled model.
CONFIGS = {
    1: ("ABC", 0.4576, 1.0780),
    2: ("ABC", 0.4666, 1.0482),
    3: ("ABC", 0.4615, 1.0651),
    4: ("ABC", 0.4615, 1.0651),
    5: ("ABC", 0.4666, 1.0482),
    6: ("ABC", 0.4576, 1.0780),
    7: ("AC", 0.4576, 1.0780),
    8: ("AB", 0.4576, 1.0780),
    9: ("A", 1.3292, 1.3475),
    10: ("B", 1.3292, 1.3475),
    11: ("C", 1.3292, 1.3475),
    12: ("ABC", 1.5209, 0.7521),
}

# from, to, length (ft), configuration
LINES = """
1 2 175 10
1 3 250 11
1 7 300 1
3 4 200 11
3 5 325 11
5 6 250 11
7 8 200 1
8 12 225 10
8 9 225 9
8 13 300 1
9 14 425 9
13 34 150 11
13 18 825 2
14 11 250 9
14 10 250 9
15 16 375 11
15 17 350 11
18 19 250 9
18 21 300 2
19 20 325 9
21 22 525 10
21 23 250 2
23 24 550 11
23 25 275 2
25 26 350 7
25 28 200 2
26 27 275 7
26 31 225 11
27 33 500 9
28 29 300 2
29 30 350 2
30 250 200 2
31 32 300 11
34 15 100 11
35 36 650 8
35 40 250 1
36 37 300 9
36 38 250 10
38 39 325 10
40 41 325 11
40 42 250 1
42 43 500 10
42 44 200 1
44 45 200 9
44 47 250 1
45 46 300 9
47 48 150 4
47 49 250 4
49 50 250 4
50 51 250 4
51 151 500 4
52 53 200 1
53 54 125 1
54 55 275 1
54 57 350 3
55 56 275 1
57 58 250 10
57 60 750 3
58 59 250 10
60 61 550 5
60 62 250 12
62 63 175 12
63 64 350 12
64 65 425 12
65 66 325 12
67 68 200 9
67 72 275 3
67 97 250 3
68 69 275 9
69 70 325 9
70 71 275 9
72 73 275 11
72 76 200 3
73 74 350 11
74 75 400 11
76 77 400 6
76 86 700 3
77 78 100 6
78 79 225 6
78 80 475 6
80 81 475 6
81 82 250 6
81 84 675 11
82 83 250 6
84 85 475 11
86 87 450 6
87 88 175 9
87 89 275 6
89 90 225 10
89 91 225 6
91 92 300 11
91 93 225 6
93 94 275 9
93 95 300 6
95 96 200 10
97 98 275 3
98 99 550 3
99 100 300 3
100 450 800 3
101 102 225 11
101 105 275 3
102 103 325 11
103 104 700 11
105 106 225 10
105 108 325 3
106 107 575 10
108 109 450 9
108 300 1000 3
109 110 300 9
110 111 575 9
110 112 125 9
112 113 525 9
113 114 325 9
135 35 375 4
152 52 400 1
160 67 350 6
197 101 250 3
149 1 400 1
"""

# Closed switches and regulator positions modelled as short ties.
TIES = [("13", "152"), ("18", "135"), ("60", "160"), ("97", "197"), ("150", "149")]

REGULATORS = [
    # branch, setpoint, bandwidth
    ("150-149", 1.0458, 0.0167),
    ("9-14", 1.0, 0.0167),
    ("25-26", 1.0, 0.0167),
    ("160-67", 1.0167, 0.0167),
]

# Spot loads: bus -> (phase, kW). Three-phase loads are balanced.
LOADS = {
    "1": ("A", 40), "2": ("B", 20), "4": ("C", 40), "5": ("C", 20), "6": ("C", 40),
    "7": ("A", 20), "9": ("A", 40), "10": ("A", 20), "11": ("A", 40), "12": ("B", 20),
    "16": ("C", 40), "17": ("C", 20), "19": ("A", 40), "20": ("A", 40), "22": ("B", 40),
    "24": ("C", 40), "28": ("A", 40), "29": ("A", 40), "30": ("C", 40), "31": ("C", 20),
    "32": ("C", 20), "33": ("A", 40), "34": ("C", 40), "35": ("A", 40), "37": ("A", 40),
    "38": ("B", 20), "39": ("B", 20), "41": ("C", 20), "42": ("A", 20), "43": ("B", 40),
    "45": ("A", 20), "46": ("A", 20), "47": ("ABC", 105), "48": ("ABC", 210),
    "49": ("ABC", 140), "50": ("C", 40), "51": ("A", 20), "52": ("A", 40), "53": ("A", 40),
    "55": ("A", 20), "56": ("B", 20), "58": ("B", 20), "59": ("B", 20), "60": ("A", 20),
    "62": ("C", 40), "63": ("A", 40), "64": ("B", 75), "65": ("ABC", 140), "66": ("C", 75),
    "68": ("A", 20), "69": ("A", 40), "70": ("A", 20), "71": ("A", 40), "73": ("C", 40),
    "74": ("C", 40), "75": ("C", 40), "76": ("ABC", 245), "77": ("B", 40), "79": ("A", 40),
    "80": ("B", 40), "82": ("A", 40), "83": ("C", 20), "84": ("C", 20), "85": ("C", 40),
    "86": ("B", 20), "87": ("B", 40), "88": ("A", 40), "90": ("B", 40), "92": ("C", 40),
    "94": ("A", 40), "95": ("B", 20), "96": ("B", 20), "98": ("A", 40), "99": ("B", 40),
    "100": ("C", 40), "102": ("C", 20), "103": ("C", 40), "104": ("C", 40), "106": ("B", 40),
    "107": ("B", 40), "109": ("A", 40), "111": ("A", 20), "112": ("A", 20), "113": ("A", 40),
    "114": ("A", 20),
    # Lateral buses carrying residential load in this fixture.
    "15": ("C", 20), "27": ("A", 20), "36": ("B", 20), "57": ("ABC", 60), "78": ("B", 20),
    "110": ("A", 20),
}

# Residential nodal peaks are the spot loads scaled to a ~2.4 MW feeder.
IEEE123_PEAK_SCALE = 0.70


def round6(x):
    return float(f"{x:.6f}")


def ieee123():
    branches = []
    phases_of = {"150": "ABC"}
    for line in LINES.strip().splitlines():
        a, b, ft, cfg = line.split()
        ph, r, x = CONFIGS[int(cfg)]
        miles = int(ft) / 5280.0
        branches.append({"id": f"{a}-{b}", "from": a, "to": b, "phases": ph,
                         "r_ohm": round6(r * miles), "x_ohm": round6(x * miles)})
    for a, b in TIES:
        branches.append({"id": f"{a}-{b}", "from": a, "to": b, "phases": "ABC",
                         "r_ohm": 0.001, "x_ohm": 0.001})
    # Bus phases follow the feeding branch; walk from the source.
    children = {}
    for br in branches:
        children.setdefault(br["from"], []).append(br)
    stack = ["150"]
    while stack:
        bus = stack.pop()
        for br in children.get(bus, []):
            phases_of[br["to"]] = br["phases"]
            stack.append(br["to"])
    def bus_key(b):
        return (int(b), b)
    buses = [{"id": b, "phases": phases_of[b], "kv_ll": 4.16, **({"source": True} if b == "150" else {})}
             for b in sorted(phases_of, key=bus_key)]
    load_nodes = []
    for bus in sorted(LOADS, key=bus_key):
        ph, kw = LOADS[bus]
        assert set(ph) <= set(phases_of[bus]), (bus, ph, phases_of[bus])
        load_nodes.append({"bus": bus, "phase": ph, "peak_kw": round6(kw * IEEE123_PEAK_SCALE)})
    regulators = [{"branch": b, "setpoint_pu": s, "bandwidth_pu": bw, "tap_step_pu": 0.00625,
                   "delay_s": 30.0, "tap_min": -16, "tap_max": 16, "tap": 0}
                  for b, s, bw in REGULATORS]
    assert len(load_nodes) == 91, len(load_nodes)
    return {"name": "ieee123", "base_kva": 1000.0, "buses": buses, "branches": branches,
            "regulators": regulators, "load_nodes": load_nodes}


def synthetic48():
    """24 kV trunk with four laterals; 48 single-phase residential nodes."""
    rng = random.Random(48)
    buses = [{"id": "sub", "phases": "ABC", "kv_ll": 24.0, "source": True}]
    branches = []
    load_nodes = []
    # 336 ACSR trunk, #2 ACSR single-phase laterals.
    trunk_r, trunk_x = 0.3061, 0.6270
    lat_r, lat_x = 1.69, 1.41
    prev = "sub"
    for t in range(1, 9):
        bus = f"t{t}"
        buses.append({"id": bus, "phases": "ABC", "kv_ll": 24.0})
        miles = rng.uniform(0.8, 1.6)
        branches.append({"id": f"{prev}-{bus}", "from": prev, "to": bus, "phases": "ABC",
                         "r_ohm": round6(trunk_r * miles), "x_ohm": round6(trunk_x * miles)})
        prev = bus
    n = 0
    for t in range(1, 9):
        phase = "ABC"[t % 3]
        up = f"t{t}"
        for k in range(6):
            bus = f"l{t}_{k}"
            buses.append({"id": bus, "phases": phase, "kv_ll": 24.0})
            miles = rng.uniform(0.3, 0.9)
            branches.append({"id": f"{up}-{bus}", "from": up, "to": bus, "phases": phase,
                             "r_ohm": round6(lat_r * miles), "x_ohm": round6(lat_x * miles)})
            load_nodes.append({"bus": bus, "phase": phase, "peak_kw": round6(rng.uniform(80, 170))})
            up = bus
            n += 1
    assert n == 48
    regulators = [{"branch": "t4-t5", "setpoint_pu": 1.0167, "bandwidth_pu": 0.0167, "tap_step_pu": 0.00625,
                   "delay_s": 45.0, "tap_min": -16, "tap_max": 16, "tap": 0}]
    return {"name": "synthetic48", "base_kva": 10000.0, "buses": buses, "branches": branches,
            "regulators": regulators, "load_nodes": load_nodes}


def ladder():
    buses = [{"id": "s", "phases": "ABC", "kv_ll": 4.16, "source": True}]
    branches = []
    load_nodes = []
    prev = "s"
    for k in range(1, 13):
        bus = f"b{k}"
        buses.append({"id": bus, "phases": "ABC", "kv_ll": 4.16})
        branches.append({"id": f"{prev}-{bus}", "from": prev, "to": bus, "phases": "ABC",
                         "r_ohm": 0.12, "x_ohm": 0.24})
        load_nodes.append({"bus": bus, "phase": "ABC", "peak_kw": 60.0})
        prev = bus
    return {"name": "ladder", "base_kva": 1000.0, "buses": buses, "branches": branches,
            "regulators": [], "load_nodes": load_nodes}


def duke_tou_2018():
    return {
        "name": "duke_tou_2018",
        "demand_charge_usd_per_kw": 13.0,
        "seasons": [
            {"name": "summer", "months": [6, 7, 8, 9], "periods": [
                {"label": "off-peak", "hours": [[20, 11]], "rate_usd_per_kwh": 0.07063},
                {"label": "partial-peak", "hours": [[11, 13], [18, 20]], "rate_usd_per_kwh": 0.11996},
                {"label": "peak", "hours": [[13, 18]], "rate_usd_per_kwh": 0.23507},
            ]},
            {"name": "winter", "months": [10, 11, 12, 1, 2, 3, 4, 5], "periods": [
                {"label": "off-peak", "hours": [[20, 6], [12, 13]], "rate_usd_per_kwh": 0.07063},
                {"label": "partial-peak", "hours": [[9, 12], [13, 17], [17, 20]], "rate_usd_per_kwh": 0.11708},
                {"label": "peak", "hours": [[6, 9]], "rate_usd_per_kwh": 0.22356},
            ]},
        ],
    }


def main():
    os.makedirs(OUT, exist_ok=True)
    for name, doc in [("ieee123.json", ieee123()), ("synthetic48.json", synthetic48()),
                      ("ladder.json", ladder()), ("duke_tou_2018.json", duke_tou_2018())]:
        with open(os.path.join(OUT, name), "w") as f:
            json.dump(doc, f, indent=1)
            f.write("\n")


if __name__ == "__main__":
    main()
