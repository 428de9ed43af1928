"""Protocol layer on top of the link model.

Beam sweeping at the anchor frequency, serving-path decisions, round-robin
scheduling, per-RB SINR at the data frequency, threshold link adaptation
with an outer loop, CBR traffic, and the per-TTI simulation step.

The forwarding node is amplify-and-forward with a gain cap: equal output
power per RB until the configured fixed gain saturates.  All measurements
(sweeps, RSRP, SINR estimates) happen at f1; only the data plane moves to
f1 + delta_f, which is the whole point of the exercise.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .channel import (
    PathLossModel,
    RadioNode,
    dbm_to_watts,
    link_gain,
    noise_power,
    path_loss,
    shadowing_field,
    watts_to_dbm,
)
from .config import McsRow, RunConfig
from .geometry import Direction
from .patterns import dft_codebook, element_gain, steering_vector, ula_beam_sines
from .squint import (
    FrequencyPlan,
    apply_compensation,
    compensation_vector,
    disambiguate_peak,
    find_all_main_directions,
)
from .scenario import Scenario, build_scenario, move_ues

__all__ = [
    "OllaState",
    "KpiRecord",
    "RsrpReport",
    "ServingChoice",
    "Bearer",
    "Simulation",
    "ncr_gain",
    "beam_sweep",
    "serving_decision",
    "rr_schedule",
    "link_adapt",
    "olla_update",
    "transmit",
    "build_simulation",
    "step",
    "run_drop",
]

RB_SUBCARRIERS = 12


@dataclass(frozen=True)
class OllaState:
    offset_db: float = 0.0
    step_ack_db: float = 0.1
    step_nack_db: float = 1.0


def olla_update(olla: OllaState, ack: bool) -> OllaState:
    if ack:
        return replace(olla, offset_db=olla.offset_db + olla.step_ack_db)
    return replace(olla, offset_db=olla.offset_db - olla.step_nack_db)


@dataclass(frozen=True)
class KpiRecord:
    drop: int
    tti: int
    ue: int
    path: str  # direct | via
    mode: str
    n_rbs: int
    sinr_db: float
    mcs: int
    ack: bool
    bits: int


@dataclass(frozen=True)
class RsrpReport:
    ue: int
    path: str
    gnb_beam: int
    access_beam: int  # -1 on the direct path
    rsrp_dbm: float


@dataclass(frozen=True)
class ServingChoice:
    path: str
    gnb_beam: int
    access_beam: int
    rsrp_dbm: float


def ncr_gain(
    p_ncr_dbm: float,
    noise_w: float,
    gamma: float,
    p_tx_w: float,
    fixed_gain_db: float = 60.0,
) -> float:
    """Forwarding gain: fixed gain until the output-power budget binds."""
    cap = 10.0 ** (fixed_gain_db / 10.0)
    p_in = noise_w + gamma * p_tx_w
    if p_in <= 0.0:
        return cap
    return min(cap, dbm_to_watts(p_ncr_dbm) / p_in)


def link_adapt(sinr_est_db: float, olla: OllaState, mcs_table: Sequence[McsRow]) -> int:
    if not mcs_table:
        raise ValueError("empty MCS table")
    effective = sinr_est_db + olla.offset_db
    chosen = mcs_table[0].index
    for row in mcs_table:
        if row.threshold_db <= effective:
            chosen = row.index
    return chosen


def transmit(
    mcs: int,
    sinr_actual_db: float,
    mcs_table: Sequence[McsRow],
    rb_bandwidth_hz: float = RB_SUBCARRIERS * 60e3,
    slot_s: float = 0.25e-3,
) -> Tuple[bool, int]:
    """Threshold decoding: ACK iff the actual SINR clears the MCS threshold.

    Returns (ack, per-RB payload bits).
    """
    row = mcs_table[mcs]
    if sinr_actual_db >= row.threshold_db:
        return True, int(row.spectral_efficiency * rb_bandwidth_hz * slot_s)
    return False, 0


@dataclass
class Bearer:
    ue: int
    pending_bits: int
    last_grant_seq: int
    rb_bits: int  # planned TB bits per RB at the current MCS


def rr_schedule(bearers: List[Bearer], n_rbs: int, grant_seq: int = 0) -> Tuple[List[Optional[int]], int]:
    """Assign each RB to the least-recently-granted backlogged bearer.

    A bearer drops out once its granted capacity covers its queue, so
    nobody hoards RBs they cannot fill.  Returns the per-RB UE ids and
    the advanced grant counter; bearer grant stamps update in place.
    """
    # stamps must strictly exceed every current wait mark, otherwise the
    # first grant of a fresh system would not reset the winner's priority
    if bearers:
        grant_seq = max(grant_seq, max(b.last_grant_seq for b in bearers) + 1)
    granted = {b.ue: 0 for b in bearers}
    alloc: List[Optional[int]] = []
    for _ in range(n_rbs):
        eligible = [
            b
            for b in bearers
            if b.pending_bits > granted[b.ue] * max(b.rb_bits, 1)
        ]
        if not eligible:
            alloc.append(None)
            continue
        pick = min(eligible, key=lambda b: (b.last_grant_seq, b.ue))
        pick.last_grant_seq = grant_seq
        grant_seq += 1
        granted[pick.ue] += 1
        alloc.append(pick.ue)
    return alloc, grant_seq


def _beam_power_scores(
    node: RadioNode, codebook: np.ndarray, freq_hz: float, toward: np.ndarray
) -> np.ndarray:
    """|B|^2 of every codebook row toward a global position."""
    d = node.local_direction(toward)
    psi = steering_vector(node.array, freq_hz, d)
    return np.abs(codebook @ psi) ** 2 * element_gain(node.pattern, d)


def _path_term(model: PathLossModel, a: np.ndarray, b: np.ndarray, f: float, shadow_db: float) -> float:
    d = float(np.linalg.norm(np.asarray(b, float) - np.asarray(a, float)))
    return 10.0 ** (-(path_loss(model, d, f) + shadow_db) / 10.0)


def beam_sweep(network: "Simulation", codebooks: Dict[str, np.ndarray], f1: float) -> List[RsrpReport]:
    """Measure every candidate beam chain at the anchor frequency.

    Direct reports cover each (gNB beam, UE); via reports fix the current
    backhaul pair and scan the forwarding node's access codebook.  UEs are
    omni so RSRP factors into beam score times path term.
    """
    scn = network.scenario
    reports: List[RsrpReport] = []
    p_rb_w = dbm_to_watts(network.p_gnb_rb_dbm)
    gamma_b = network.backhaul_gain(f1)
    g = network.forwarding_gain(gamma_b)
    for ue_idx, ue in enumerate(scn.ues):
        scores = _beam_power_scores(scn.gnb, codebooks["gnb"], f1, ue.position)
        base = _path_term(
            network.pathloss_gnb_ue, scn.gnb.position, ue.position,
            f1, network.shadow_gnb(ue.position),
        )
        for k, sc in enumerate(scores):
            reports.append(
                RsrpReport(ue_idx, "direct", k, -1, watts_to_dbm(p_rb_w * base * sc))
            )

        acc_scores = _beam_power_scores(
            scn.ncr_access, codebooks["access"], f1, ue.position
        )
        acc_base = _path_term(
            network.pathloss, scn.ncr_access.position, ue.position,
            f1, network.shadow_ncr(ue.position),
        )
        chain = p_rb_w * gamma_b * g
        for k, sc in enumerate(acc_scores):
            rsrp = watts_to_dbm(chain * acc_base * sc)
            reports.append(
                RsrpReport(ue_idx, "via", network.backhaul_pair[0], k, rsrp)
            )
    return reports


def serving_decision(reports: Sequence[RsrpReport], ue: int) -> ServingChoice:
    """Highest RSRP wins; ties prefer the direct path, then the lower beam."""
    mine = [r for r in reports if r.ue == ue]
    if not mine:
        raise ValueError(f"no reports for ue {ue}")
    order = {"direct": 0, "via": 1}
    best = min(
        mine, key=lambda r: (-r.rsrp_dbm, order[r.path], r.gnb_beam, r.access_beam)
    )
    return ServingChoice(best.path, best.gnb_beam, best.access_beam, best.rsrp_dbm)


@dataclass
class Simulation:
    cfg: RunConfig
    mode: str
    delta_f_hz: float
    gnb_elements: int
    drop: int
    scenario: Scenario
    mcs_table: List[McsRow]
    codebooks: Dict[str, np.ndarray]
    beam_sines: Dict[str, np.ndarray]
    shadow_gnb: object
    shadow_ncr: object
    rng_mobility: np.random.Generator
    # static link budget pieces
    p_gnb_rb_dbm: float
    p_ncr_rb_dbm: float
    noise_ue_w: float
    noise_ncr_w: float
    noise_ue_dbm: float
    pathloss: PathLossModel
    pathloss_gnb_ue: PathLossModel
    pathloss_gnb_ncr: PathLossModel
    # evolving state
    backhaul_pair: Tuple[int, int] = (0, 0)
    serving: List[ServingChoice] = field(default_factory=list)
    olla: List[OllaState] = field(default_factory=list)
    queues: List[List[int]] = field(default_factory=list)
    last_grant_seq: List[int] = field(default_factory=list)
    grant_seq: int = 0
    records: List[KpiRecord] = field(default_factory=list)
    _comp_cache: Dict[Tuple[str, int], np.ndarray] = field(default_factory=dict)

    @property
    def f1(self) -> float:
        return self.cfg.rf.f1_hz

    @property
    def f_data(self) -> float:
        if self.mode == "baseline":
            return self.f1
        return self.f1 + self.delta_f_hz

    def forwarding_gain(self, gamma_b: float) -> float:
        return ncr_gain(
            self.p_ncr_rb_dbm,
            self.noise_ncr_w,
            gamma_b,
            dbm_to_watts(self.p_gnb_rb_dbm),
            self.cfg.ran.ncr_fixed_gain_db,
        )

    def _compensated_weights(self, kind: str, k: int) -> np.ndarray:
        """Codebook row with the phase correction for f1 + delta_f applied.

        The correction aims at the measured main-lobe peak; the nominal
        codebook angle only disambiguates when the beam has grating twins.
        """
        key = (kind, k)
        if key not in self._comp_cache:
            raw = self.codebooks[kind][k]
            node = {
                "gnb": self.scenario.gnb,
                "access": self.scenario.ncr_access,
                "backhaul": self.scenario.ncr_backhaul,
            }[kind]
            sine = float(self.beam_sines[kind][k])
            nominal = Direction(float(np.degrees(np.arcsin(np.clip(sine, -1.0, 1.0)))), 90.0)
            mains = find_all_main_directions(
                node.array, node.pattern, raw, self.f1, threshold_db=3.0
            )
            target = disambiguate_peak(mains, nominal)
            comp = compensation_vector(
                node.array, FrequencyPlan(self.f1, self.delta_f_hz), target
            )
            self._comp_cache[key] = apply_compensation(raw, comp)
        return self._comp_cache[key]

    def _plane_weights(self, kind: str, k: int, mode: str) -> np.ndarray:
        if mode == "compensated" and self.delta_f_hz != 0.0:
            return self._compensated_weights(kind, k)
        return self.codebooks[kind][k]

    def backhaul_gain(self, freq_hz: float) -> float:
        """gNB to forwarding-node measurement gain with the current pair."""
        kg, kb = self.backhaul_pair
        scn = self.scenario
        return link_gain(
            scn.gnb, scn.ncr_backhaul, freq_hz,
            self.codebooks["gnb"][kg], self.codebooks["backhaul"][kb],
            model=self.pathloss_gnb_ncr,
            shadowing_db=self.shadow_gnb(scn.ncr_backhaul.position),
        )

    def update_backhaul(self) -> None:
        scn = self.scenario
        g_scores = _beam_power_scores(
            scn.gnb, self.codebooks["gnb"], self.f1, scn.ncr_backhaul.position
        )
        b_scores = _beam_power_scores(
            scn.ncr_backhaul, self.codebooks["backhaul"], self.f1, scn.gnb.position
        )
        self.backhaul_pair = (int(np.argmax(g_scores)), int(np.argmax(b_scores)))

    def update_serving(self) -> None:
        reports = beam_sweep(self, self.codebooks, self.f1)
        self.serving = [
            serving_decision(reports, ue) for ue in range(len(self.scenario.ues))
        ]

    def est_sinr_db(self, ue: int) -> float:
        """Reported SINR: measured on the serving chain at f1 with raw beams.

        Through a forwarding node this includes the amplified noise the node
        injects, which the UE cannot tell apart from its own noise floor.
        """
        return self._chain_sinr(ue, self.f1, "baseline")

    def compute_sinr(
        self, ue: int, rb: int, allocation: Sequence[Optional[int]],
        f_data: Optional[float] = None, mode: Optional[str] = None,
    ) -> float:
        """Actual per-RB SINR on the serving chain at the data frequency."""
        if rb >= len(allocation) or allocation[rb] != ue:
            raise ValueError(f"ue {ue} not scheduled on rb {rb}")
        mode = self.mode if mode is None else mode
        f = (self.f1 if mode == "baseline" else self.f1 + self.delta_f_hz) if f_data is None else f_data
        return self._chain_sinr(ue, f, mode)

    def _chain_sinr(self, ue: int, f: float, mode: str) -> float:
        scn = self.scenario
        choice = self.serving[ue]
        target = scn.ues[ue]
        if choice.path == "direct":
            wg = self._plane_weights("gnb", choice.gnb_beam, mode)
            s = dbm_to_watts(self.p_gnb_rb_dbm) * link_gain(
                scn.gnb, target, f, wg, None,
                model=self.pathloss_gnb_ue,
                shadowing_db=self.shadow_gnb(target.position),
            )
            return 10.0 * np.log10(s / self.noise_ue_w)
        kg, kb = self.backhaul_pair
        wg = self._plane_weights("gnb", kg, mode)
        wb = self._plane_weights("backhaul", kb, mode)
        gamma_b = link_gain(
            scn.gnb, scn.ncr_backhaul, f, wg, wb,
            model=self.pathloss_gnb_ncr,
            shadowing_db=self.shadow_gnb(scn.ncr_backhaul.position),
        )
        g = self.forwarding_gain(gamma_b)
        wa = self._plane_weights("access", choice.access_beam, mode)
        gamma_a = link_gain(
            scn.ncr_access, target, f, wa, None,
            model=self.pathloss,
            shadowing_db=self.shadow_ncr(target.position),
        )
        signal = dbm_to_watts(self.p_gnb_rb_dbm) * gamma_b * g * gamma_a
        fwd_noise = g * self.noise_ncr_w * gamma_a
        return 10.0 * np.log10(signal / (fwd_noise + self.noise_ue_w))


def build_simulation(
    cfg: RunConfig,
    mcs_table: List[McsRow],
    mode: str,
    delta_f_hz: float,
    gnb_elements: int,
    drop: int,
) -> Simulation:
    scenario = build_scenario(cfg, gnb_elements)
    f1 = cfg.rf.f1_hz
    over = cfg.arrays.oversampling
    cb_gnb = dft_codebook(gnb_elements, over)
    cb_backhaul = dft_codebook(cfg.arrays.ncr_backhaul_elements, over)
    codebooks = {"gnb": cb_gnb, "access": cb_gnb, "backhaul": cb_backhaul}
    beam_sines = {
        "gnb": ula_beam_sines(gnb_elements, over),
        "access": ula_beam_sines(gnb_elements, over),
        "backhaul": ula_beam_sines(cfg.arrays.ncr_backhaul_elements, over),
    }

    # per-drop streams: shadowing maps per transmitter plus UE mobility;
    # seeds depend only on (master seed, drop) so modes share the world
    root = np.random.SeedSequence(cfg.run.seed)
    drop_seq = root.spawn(cfg.run.drops)[drop]
    seq_gnb, seq_ncr, seq_mob = drop_seq.spawn(3)
    shadow_gnb = shadowing_field(
        seq_gnb, cfg.channel.shadowing_dcorr_m, cfg.channel.shadowing_sigma_db
    )
    shadow_ncr = shadowing_field(
        seq_ncr, cfg.channel.shadowing_dcorr_m, cfg.channel.shadowing_sigma_db
    )

    n_rbs = cfg.ran.n_rbs
    nf = cfg.channel.noise_figure_db
    noise_rb_dbm = noise_power(RB_SUBCARRIERS, cfg.ran.scs_hz, nf)
    sim = Simulation(
        cfg=cfg,
        mode=mode,
        delta_f_hz=delta_f_hz,
        gnb_elements=gnb_elements,
        drop=drop,
        scenario=scenario,
        mcs_table=mcs_table,
        codebooks=codebooks,
        beam_sines=beam_sines,
        shadow_gnb=shadow_gnb,
        shadow_ncr=shadow_ncr,
        rng_mobility=np.random.default_rng(seq_mob),
        p_gnb_rb_dbm=cfg.ran.gnb_power_dbm - 10.0 * np.log10(n_rbs),
        p_ncr_rb_dbm=cfg.ran.ncr_power_dbm - 10.0 * np.log10(n_rbs),
        noise_ue_w=dbm_to_watts(noise_rb_dbm),
        noise_ncr_w=dbm_to_watts(noise_rb_dbm),
        noise_ue_dbm=noise_rb_dbm,
        pathloss=PathLossModel(**vars(cfg.channel.pathloss)),
        pathloss_gnb_ue=PathLossModel(**vars(cfg.pathloss_gnb_ue())),
        pathloss_gnb_ncr=PathLossModel(**vars(cfg.pathloss_gnb_ncr())),
    )
    n_ues = cfg.scenario.n_ues
    sim.olla = [
        OllaState(0.0, cfg.ran.olla_step_ack_db, cfg.ran.olla_step_nack_db)
        for _ in range(n_ues)
    ]
    sim.queues = [[] for _ in range(n_ues)]
    sim.last_grant_seq = [0] * n_ues
    return sim


def step(sim: Simulation, tti: int) -> List[KpiRecord]:
    """One TTI: move, arrivals, sweeps, schedule, transmit, outer loop.

    Sweeps and SINR estimates live at f1; transmissions are judged at the
    mode's data frequency.  Returns the KPI records emitted this TTI.
    """
    cfg = sim.cfg
    scn = sim.scenario
    move_ues(scn, cfg.ran.slot_s, sim.rng_mobility)
    if tti % cfg.traffic.period_slots == 0:
        for q in sim.queues:
            q.append(cfg.traffic.packet_bits)
    if tti % cfg.ran.backhaul_sweep_period_ttis == 0:
        sim.update_backhaul()
    if tti % cfg.ran.access_sweep_period_ttis == 0:
        sim.update_serving()

    rb_bw = RB_SUBCARRIERS * cfg.ran.scs_hz
    mcs_plan: Dict[int, int] = {}
    bearers: List[Bearer] = []
    for ue, q in enumerate(sim.queues):
        pending = sum(q)
        if pending == 0:
            continue
        mcs = link_adapt(sim.est_sinr_db(ue), sim.olla[ue], sim.mcs_table)
        mcs_plan[ue] = mcs
        per_rb = int(sim.mcs_table[mcs].spectral_efficiency * rb_bw * cfg.ran.slot_s)
        bearers.append(Bearer(ue, pending, sim.last_grant_seq[ue], per_rb))
    alloc, sim.grant_seq = rr_schedule(bearers, cfg.ran.n_rbs, sim.grant_seq)
    for b in bearers:
        sim.last_grant_seq[b.ue] = b.last_grant_seq

    out: List[KpiRecord] = []
    granted = sorted({u for u in alloc if u is not None})
    for ue in granted:
        n_rbs = alloc.count(ue)
        sinr = sim.compute_sinr(ue, alloc.index(ue), alloc)
        mcs = mcs_plan[ue]
        ack, per_rb_bits = transmit(mcs, sinr, sim.mcs_table, rb_bw, cfg.ran.slot_s)
        delivered = 0
        if ack:
            delivered = min(sum(sim.queues[ue]), per_rb_bits * n_rbs)
            left = delivered
            q = sim.queues[ue]
            while left > 0:
                if q[0] <= left:
                    left -= q.pop(0)
                else:
                    q[0] -= left
                    left = 0
        sim.olla[ue] = olla_update(sim.olla[ue], ack)
        out.append(
            KpiRecord(
                drop=sim.drop, tti=tti, ue=ue, path=sim.serving[ue].path,
                mode=sim.mode, n_rbs=n_rbs, sinr_db=float(sinr), mcs=mcs,
                ack=ack, bits=delivered,
            )
        )
    sim.records.extend(out)
    return out


def run_drop(
    cfg: RunConfig,
    mcs_table: List[McsRow],
    mode: str,
    delta_f_hz: float,
    gnb_elements: int,
    drop: int,
) -> Simulation:
    sim = build_simulation(cfg, mcs_table, mode, delta_f_hz, gnb_elements, drop)
    for tti in range(cfg.run.ttis):
        step(sim, tti)
    return sim
