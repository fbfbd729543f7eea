#!/usr/bin/env python3
"""Regenerates data/fixture_layout.json, the mock control-room layout.

Top-level tabs sit in a 40 px bar; each panel view draws its children below
that bar, so sibling boxes never overlap the tabs.
"""
import json
import pathlib
import sys

nodes = {}
edges = []


def node(id_, kind, bbox, name=None, aliases=()):
    nodes[id_] = {
        "id": id_,
        "name": name or id_,
        "aliases": list(aliases),
        "kind": kind,
        "bbox": list(bbox),
    }


def contain(parent, child):
    edges.append((parent, child))


node("initial", "container", (0, 0, 1920, 1080), name="Initial Interface")

tabs = [
    ("Flowchart", "container"),
    ("Trends", "container"),
    ("Alarms", "container"),
    ("Acknowledge", "control"),
    ("Reactor Power", "parameter"),
]
for i, (tab, kind) in enumerate(tabs):
    node(tab, kind, (170 * i, 0, 160, 40))
    contain("initial", tab)

systems = ["Nuclear Island System", "Conventional Island System", "Auxiliary System", "Electrical System"]
for i, system in enumerate(systems):
    node(system, "container", (40, 80 + 100 * i, 320, 70))
    contain("Flowchart", system)

# Second route to the electrical panels.
contain("Trends", "Electrical System")
node("Trend Display", "parameter", (400, 80, 300, 60))
contain("Trends", "Trend Display")

node("Alarm List", "parameter", (40, 80, 400, 60))
contain("Alarms", "Alarm List")


def spaced(panel):
    # "2LABDW001" -> "2 LAB DW001"
    return f"{panel[0]} {panel[1:panel.index('DW')]} {panel[panel.index('DW'):]}"


panels = {
    "Nuclear Island System": {
        "2LABDW001": ["2LBA10CP801C", "2LAB10CF801D", "2LBA10CP801A", "2LAB10CF801B", "2LBA10CP801B",
                      ("2LBA10AA404", ["2LB10AA404"]), "2LAB10CT801"],
        "1JETDW001": ["1JET01CP001", "1JET01CT001", "1JET01CL001", "1JET01CF001"],
        "2KLADW001": ["2KLA10CP001"],
    },
    "Conventional Island System": {
        "0PCBDW001": ["Outlet Pressure of Open-Cycle Cooling Water Pump",
                      "Cooling Water Outlet Temperature of Generator Air Cooler",
                      "Phase A Current of Open-Cycle Cooling Water Pump",
                      "Cooling Water Outlet Temperature of Vacuum Pump Cooler",
                      "Inlet Pressure of Open-Cycle Cooling Water Pump"],
        "0LBHDW001": ["Outlet Temperature of No.1 Steam Generator", "2LAB10CF001", "1LBA10CP801A",
                      "2LBA10CP701A", "Bypass Steam Temperature No.1",
                      ("1LBA10CP701B", ["#1 steam generator outlet pressure"])],
        "0MKADW001": ["0MKA10CE001"],
    },
    "Auxiliary System": {
        "0KBEDW101": ["0KBE10CP007", "0KBE10CT001", "0KBE10CP001", "0KBE10CT002", "0KBE10CP005",
                      "0KBE10CP004", "0KBE10CL001"],
        "0QJBDW001": ["0QJB10CP001"],
    },
    "Electrical System": {
        "0ELEDW002": ["Power Factor", "Terminal Voltage", "Excitation Current", "Excitation Voltage",
                      "Generator Reactive Power", "Generator Active Power"],
        "0ELEDW001": ["Grid Frequency"],
    },
}

for system, by_panel in panels.items():
    for i, (panel, params) in enumerate(by_panel.items()):
        node(panel, "container", (60 + 300 * i, 120, 260, 60), aliases=[spaced(panel)])
        contain(system, panel)
        for j, param in enumerate(params):
            aliases = []
            if isinstance(param, tuple):
                param, aliases = param
            row, col = divmod(j, 3)
            node(param, "parameter", (80 + 600 * col, 220 + 120 * row, 520, 60), aliases=aliases)
            contain(panel, param)

doc = {
    "version": 1,
    "root": "initial",
    "nodes": [nodes[k] for k in sorted(nodes)],
    "edges": [{"parent": p, "child": c} for p, c in sorted(edges)],
}

out = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else pathlib.Path(__file__).parent.parent / "data" / "fixture_layout.json"
out.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
