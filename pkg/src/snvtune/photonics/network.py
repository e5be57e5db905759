"""Multiport switch networks assembled from 2x2 elements on a DAG.

A network description names external inputs/outputs, the elements (each
with ``in0, in1, out0, out1`` ports) and the edges joining them. Every port
must be used exactly once and the element graph must be acyclic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter

import numpy as np

from ..errors import TopologyError
from .switch import DoubleMZI, SingleMZI, best_transmission

ELEMENT_TYPES = {"mzi": SingleMZI, "dcps": DoubleMZI}


@dataclass(frozen=True)
class NetworkElement:
    name: str
    device: object
    phase_keys: tuple  # global phase-setting names, one per device phase

    def transfer(self, settings) -> np.ndarray:
        return self.device.transfer([settings[k] for k in self.phase_keys])


@dataclass
class SwitchNetwork:
    inputs: tuple
    outputs: tuple
    elements: dict
    edges: dict  # destination port -> source port
    order: tuple  # element names in topological order
    phase_settings: dict = field(default_factory=dict)

    def transfer(self, settings=None) -> np.ndarray:
        """Field transfer matrix, rows = outputs, columns = inputs."""
        s = dict(self.phase_settings)
        if settings:
            s.update(settings)
        missing = {k for el in self.elements.values() for k in el.phase_keys} - set(s)
        if missing:
            raise KeyError(f"unset phases: {sorted(missing)}")
        out = np.zeros((len(self.outputs), len(self.inputs)), dtype=complex)
        mats = {name: self.elements[name].transfer(s) for name in self.order}
        for j, src in enumerate(self.inputs):
            amp = {src: 1.0 + 0j}
            for name in self.order:
                vin = np.array([amp.get(self.edges[f"{name}.in{p}"], 0j) for p in (0, 1)])
                vout = mats[name] @ vin
                amp[f"{name}.out0"], amp[f"{name}.out1"] = vout
            for i, dst in enumerate(self.outputs):
                out[i, j] = amp.get(self.edges[dst], 0j)
        return out

    def power_matrix(self, settings=None) -> np.ndarray:
        return np.abs(self.transfer(settings)) ** 2

    def path(self, channel: str, output: str):
        """Ordered ``(element, in_port, out_port)`` hops from ``channel`` to ``output``."""
        forward = {src: dst for dst, src in self.edges.items()}
        try:
            return self._reach(channel, output, forward)
        except TopologyError:
            raise TopologyError(f"no path from {channel!r} to {output!r}") from None

    def _reach(self, port, output, forward):
        dst = forward.get(port)
        if dst is None:
            raise TopologyError(f"port {port!r} is not connected")
        if dst in self.outputs:
            if dst == output:
                return []
            raise TopologyError("dead end")
        name, p = dst.split(".")
        for q in (0, 1):
            try:
                return [(name, int(p[-1]), q)] + self._reach(f"{name}.out{q}", output, forward)
            except TopologyError:
                continue
        raise TopologyError("dead end")


def _port_names(name):
    return [f"{name}.in0", f"{name}.in1"], [f"{name}.out0", f"{name}.out1"]


def compose_network(config: dict) -> SwitchNetwork:
    """Build a :class:`SwitchNetwork` from its JSON description.

    ``config`` keys: ``inputs``, ``outputs``, ``elements`` (list of
    ``{name, type, ratios, phases}``), ``edges`` (list of ``[src, dst]``) and
    optional ``phase_settings``.
    """
    inputs = tuple(config["inputs"])
    outputs = tuple(config["outputs"])
    elements = {}
    for spec in config["elements"]:
        kind = spec["type"]
        if kind not in ELEMENT_TYPES:
            raise TopologyError(f"element {spec['name']!r}: unknown type {kind!r}")
        cls = ELEMENT_TYPES[kind]
        ratios = tuple(spec.get("ratios", (0.5,) * (2 if kind == "mzi" else 4)))
        device = cls(*ratios) if kind == "mzi" else cls(ratios)
        keys = tuple(spec.get("phases", [f"{spec['name']}.{p}" for p in cls.phase_names]))
        if len(keys) != len(cls.phase_names):
            raise TopologyError(f"element {spec['name']!r} needs {len(cls.phase_names)} phase names")
        if spec["name"] in elements:
            raise TopologyError(f"duplicate element {spec['name']!r}")
        elements[spec["name"]] = NetworkElement(spec["name"], device, keys)

    sources = set(inputs)
    sinks = set(outputs)
    for name in elements:
        ins, outs = _port_names(name)
        sources.update(outs)
        sinks.update(ins)

    edges, used_src = {}, set()
    problems = []
    for src, dst in config["edges"]:
        if src not in sources:
            problems.append(f"edge source {src!r} is not an input or element output")
        elif src in used_src:
            problems.append(f"port {src!r} drives more than one edge")
        if dst not in sinks:
            problems.append(f"edge destination {dst!r} is not an output or element input")
        elif dst in edges:
            problems.append(f"port {dst!r} is driven more than once")
        used_src.add(src)
        edges[dst] = src
    problems += [f"dangling port {p!r}" for p in sorted(sources - used_src)]
    problems += [f"dangling port {p!r}" for p in sorted(sinks - set(edges))]
    if problems:
        raise TopologyError("; ".join(problems))

    graph = {name: set() for name in elements}
    for dst, src in edges.items():
        if "." in dst and "." in src:
            graph[dst.split(".")[0]].add(src.split(".")[0])
    try:
        order = tuple(TopologicalSorter(graph).static_order())
    except CycleError as exc:
        raise TopologyError(f"network contains a cycle: {exc.args[1]}") from None

    phases = {k: 0.0 for el in elements.values() for k in el.phase_keys}
    unknown = set(config.get("phase_settings", {})) - set(phases)
    if unknown:
        raise TopologyError(f"phase settings for unknown phases: {sorted(unknown)}")
    phases.update(config.get("phase_settings", {}))
    return SwitchNetwork(inputs, outputs, elements, edges, order, phases)


def route(network: SwitchNetwork, channel: str, output: str) -> dict:
    """Phase settings steering ``channel`` into ``output`` at maximum power.

    Each element on the path is set independently to maximize its own
    in-port to out-port transmission; other phases keep their values.
    """
    settings = dict(network.phase_settings)
    for name, pin, pout in network.path(channel, output):
        el = network.elements[name]
        phases, _ = best_transmission(el.device, pout, pin)
        settings.update(zip(el.phase_keys, phases))
    return settings


def insertion_loss_db(network: SwitchNetwork, channel: str, output: str, settings=None) -> float:
    p = network.power_matrix(settings)[network.outputs.index(output), network.inputs.index(channel)]
    return float(-10.0 * np.log10(p))
