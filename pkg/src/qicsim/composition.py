"""Building new protocols from old ones.

* :func:`parallel` / :func:`repeat_n` run protocols side by side on the
  tensor product of their inputs (``x = x1 * |X2| + x2``).
* :func:`convex_mix` runs one of two protocols chosen by a pre-shared
  selector. Both branches are rewritten into a merged form where each party
  keeps a single memory register per step, so that the two branches can be
  combined by selector-controlled isometries.
* :func:`split_marginal` fixes one factor of a product input inside the
  pre-shared state, yielding a protocol on the other factor alone.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from .engine import (
    A_IN,
    ALICE,
    B_IN,
    BOB,
    R1,
    R2,
    RESERVED,
    InputDistribution,
    ProtocolSpec,
    Step,
    embed_input,
    other,
    sender_of,
)
from .errors import InputError, LabelError
from .linalg import (
    _COLUMN,
    GlobalPureState,
    Isometry,
    RegisterLayout,
    _apply_raw,
    _split,
    compose,
    tensor,
)

EMPTY = RegisterLayout((), ())


def _noop() -> Isometry:
    return Isometry(EMPTY, EMPTY, np.ones((1, 1)))


def relabel(p: ProtocolSpec, mapping: Mapping[str, str], name: str | None = None) -> ProtocolSpec:
    """Rename non-reserved registers."""
    bad = RESERVED & (set(mapping) | set(mapping.values()))
    if bad:
        raise LabelError(f"cannot relabel reserved registers {sorted(bad)}")
    steps = [
        Step(st.sender, st.isometry.relabel(mapping), tuple(mapping.get(l, l) for l in st.message))
        for st in p.steps
    ]
    pre = None
    if p.prestate is not None:
        pre = GlobalPureState(p.prestate.layout.relabel(mapping), p.prestate.amplitudes)
    return ProtocolSpec(
        p.x_size,
        p.y_size,
        steps,
        pre,
        {mapping.get(l, l): o for l, o in p.owners.items()},
        {k: tuple(mapping.get(l, l) for l in v) for k, v in p.outputs.items()},
        p.name if name is None else name,
    )


def pad_rounds(p: ProtocolSpec, rounds: int) -> ProtocolSpec:
    """Extend ``p`` to ``rounds`` messages with idle steps sending empty messages.

    An empty message is a 1-dimensional register: it adds nothing to QCC or QIC.
    """
    if rounds < p.rounds:
        raise InputError(f"cannot shrink a {p.rounds}-round protocol to {rounds}")
    extra = [Step(sender_of(i), _noop()) for i in range(p.rounds + 2, rounds + 2)]
    return ProtocolSpec(p.x_size, p.y_size, list(p.steps) + extra, p.prestate, p.owners, p.outputs, p.name)


def append_local(p: ProtocolSpec, party: str, v: Isometry) -> ProtocolSpec:
    """Fold a local isometry into ``party``'s last step; outputs are unchanged."""
    idx = max(i for i, st in enumerate(p.steps) if st.sender == party)
    steps = list(p.steps)
    st = steps[idx]
    steps[idx] = Step(st.sender, compose(st.isometry, v), st.message)
    return ProtocolSpec(p.x_size, p.y_size, steps, p.prestate, p.owners, p.outputs, p.name)


def _tagged(p: ProtocolSpec, tag: str) -> ProtocolSpec:
    # bypasses reserved-label checks: the result is only used as raw parts
    mapping = {l: f"{tag}.{l}" for l in p.dims()}
    steps = [
        Step(st.sender, st.isometry.relabel(mapping), tuple(mapping[l] for l in st.message))
        for st in p.steps
    ]
    pre = None
    if p.prestate is not None:
        pre = GlobalPureState(p.prestate.layout.relabel(mapping), p.prestate.amplitudes)
    owners = {mapping[l]: o for l, o in p.owners.items()}
    outputs = {k: tuple(mapping[l] for l in v) for k, v in p.outputs.items()}
    return steps, pre, owners, outputs


def _splitter(label: str, parts: Sequence[tuple[str, int]]) -> Isometry:
    total = math.prod(d for _, d in parts)
    return Isometry(RegisterLayout((label,), (total,)), RegisterLayout.of(parts), np.eye(total))


def parallel_many(protocols: Sequence[ProtocolSpec], tags: Sequence[str] | None = None) -> ProtocolSpec:
    """Run several protocols at once; rounds = the maximum of theirs.

    Coordinate ``k``'s registers are prefixed with ``tags[k] + "."``.
    Shorter protocols idle after their final step.
    """
    if not protocols:
        raise InputError("need at least one protocol")
    tags = [str(k + 1) for k in range(len(protocols))] if tags is None else list(tags)
    r = max(q.rounds for q in protocols)
    parts = [_tagged(pad_rounds(q, r), t) for q, t in zip(protocols, tags)]
    steps = []
    for i in range(r + 1):
        v = parts[0][0][i].isometry
        msg = list(parts[0][0][i].message)
        for pp in parts[1:]:
            v = v.tensor(pp[0][i].isometry)
            msg += pp[0][i].message
        if i == 0:
            v = compose(_splitter(A_IN, [(f"{t}.{A_IN}", q.x_size) for q, t in zip(protocols, tags)]), v)
        if i == 1:
            v = compose(_splitter(B_IN, [(f"{t}.{B_IN}", q.y_size) for q, t in zip(protocols, tags)]), v)
        steps.append(Step(sender_of(i + 1), v, tuple(msg)))
    pre = None
    owners: dict[str, str] = {}
    for _, ps, ow, _ in parts:
        if ps is not None:
            pre = ps if pre is None else tensor(pre, ps)
            owners.update(ow)
    outputs = {
        ALICE: tuple(l for pp in parts for l in pp[3][ALICE]),
        BOB: tuple(l for pp in parts for l in pp[3][BOB]),
    }
    return ProtocolSpec(
        math.prod(q.x_size for q in protocols),
        math.prod(q.y_size for q in protocols),
        steps,
        pre,
        owners,
        outputs,
        "parallel(" + ", ".join(q.name or "?" for q in protocols) + ")",
    )


def parallel(p1: ProtocolSpec, p2: ProtocolSpec) -> ProtocolSpec:
    """``p1 (x) p2`` with ``max(r1, r2)`` rounds."""
    return parallel_many([p1, p2])


def _or_into_disj(inputs: RegisterLayout, label: str) -> Isometry:
    def fn(*z):
        return tuple(z) + (0 if any(z) else 1,)

    return Isometry.from_function(inputs, inputs.concat(RegisterLayout((label,), (2,))), fn)


def repeat_n(p: ProtocolSpec, n: int, aggregate: str | None = None) -> ProtocolSpec:
    """``n`` parallel copies of ``p`` on coordinate-wise inputs.

    With ``aggregate="disj"`` each party also computes ``NOT OR(outputs)`` into a
    fresh ``DISJ_A`` / ``DISJ_B`` register, which becomes its only output; this
    turns ``n`` copies of an AND protocol into a ``DISJ_n`` protocol.
    """
    if n < 1:
        raise InputError("n must be at least 1")
    q = parallel_many([p] * n, [f"c{k + 1}" for k in range(n)])
    if aggregate is None:
        return q
    if aggregate != "disj":
        raise InputError(f"unknown aggregate {aggregate!r}")
    dims = q._final_dims
    for party, label in ((ALICE, "DISJ_A"), (BOB, "DISJ_B")):
        outs = q.outputs[party]
        if any(dims[l] != 2 for l in outs):
            raise InputError("DISJ aggregation needs single-bit outputs")
        q = append_local(q, party, _or_into_disj(RegisterLayout(outs, tuple(2 for _ in outs)), label))
        q = ProtocolSpec(
            q.x_size, q.y_size, q.steps, q.prestate, q.owners, {**q.outputs, party: (label,)}, q.name
        )
    return ProtocolSpec(
        q.x_size, q.y_size, q.steps, q.prestate, q.owners, q.outputs, f"{p.name or '?'}^{n}+DISJ"
    )


# ---------------------------------------------------------------------------
# splitting a protocol on a product input


def split_marginal(
    p: ProtocolSpec,
    fixed: InputDistribution,
    keep: int,
    x_sizes: tuple[int, int],
    y_sizes: tuple[int, int],
) -> ProtocolSpec:
    """Protocol on coordinate ``keep`` (0 or 1) of a two-coordinate input.

    The other coordinate's purified input ``fixed`` becomes pre-shared
    entanglement: its input registers go to Alice and Bob, and its reference
    copies go to Bob when ``keep == 0`` and to Alice when ``keep == 1``. With
    this choice the two marginal protocols' information costs add up to that
    of ``p`` on the product input, term by term, via the chain rule.
    """
    if keep not in (0, 1):
        raise InputError("keep must be 0 or 1")
    if x_sizes[0] * x_sizes[1] != p.x_size or y_sizes[0] * y_sizes[1] != p.y_size:
        raise InputError("coordinate sizes do not factor the protocol's alphabets")
    drop = 1 - keep
    if (fixed.x_size, fixed.y_size) != (x_sizes[drop], y_sizes[drop]):
        raise InputError("fixed distribution does not match the dropped coordinate")
    joint = {A_IN: "joint.A_in", B_IN: "joint.B_in"}
    steps = [
        Step(st.sender, st.isometry.relabel(joint), st.message) for st in p.steps
    ]
    emb = embed_input(fixed)
    aux = {A_IN: "aux.A_in", B_IN: "aux.B_in", R1: "aux.R1", R2: "aux.R2"}
    emb = GlobalPureState(emb.layout.relabel(aux), emb.amplitudes)
    ref_owner = BOB if keep == 0 else ALICE
    owners = dict(p.owners)
    owners.update({"aux.A_in": ALICE, "aux.B_in": BOB, "aux.R1": ref_owner, "aux.R2": ref_owner})
    pre = emb if p.prestate is None else tensor(emb, p.prestate)

    def merger(party_in: str, aux_label: str, sizes: tuple[int, int]) -> Isometry:
        pieces = [(party_in, sizes[keep]), (aux_label, sizes[drop])]
        if keep == 1:
            pieces.reverse()
        total = sizes[0] * sizes[1]
        return Isometry(RegisterLayout.of(pieces), RegisterLayout((joint[party_in],), (total,)), np.eye(total))

    s0, s1 = steps[0], steps[1]
    steps[0] = Step(s0.sender, compose(merger(A_IN, "aux.A_in", x_sizes), s0.isometry), s0.message)
    steps[1] = Step(s1.sender, compose(merger(B_IN, "aux.B_in", y_sizes), s1.isometry), s1.message)
    return ProtocolSpec(
        x_sizes[keep], y_sizes[keep], steps, pre, owners, p.outputs, f"{p.name or '?'}|coord{keep + 1}"
    )


# ---------------------------------------------------------------------------
# convex mixing


def _local_map(
    v: Isometry,
    in_labels: Sequence[str],
    in_dims: Sequence[int],
    out_order_first: Sequence[str],
    message: Sequence[str],
) -> tuple[np.ndarray, list[str], list[int], int, int]:
    """Full local action of ``v`` on a party's whole holding.

    Returns the matrix from ``in_labels`` (flattened in order) to
    ``[kept..., message...]`` with ``out_order_first`` leading the kept part,
    the kept labels and dims, the flat size of ``out_order_first`` and of the
    message.
    """
    lay = RegisterLayout(tuple(in_labels), tuple(in_dims))
    din = lay.total
    full = lay.concat(RegisterLayout((_COLUMN,), (din,)))
    amps, after = _apply_raw(np.eye(din, dtype=np.complex128).reshape(-1), full, v)
    kept = [l for l in after.labels if l != _COLUMN and l not in message]
    kept = list(out_order_first) + [l for l in kept if l not in out_order_first]
    order = kept + list(message)
    m = _split(amps, after, order)
    kept_dims = [after.dim(l) for l in kept]
    lead = math.prod(after.dim(l) for l in out_order_first)
    msg = math.prod(after.dim(l) for l in message)
    return m, kept, kept_dims, lead, msg


def _complete(y: np.ndarray, used_cols: np.ndarray, d_in: int) -> np.ndarray:
    """Isometry ``d_out x d_in`` equal to ``y`` on ``used_cols``, completed orthonormally."""
    d_out, n = y.shape
    full = np.zeros((d_out, d_in), dtype=np.complex128)
    full[:, used_cols] = y
    free = np.setdiff1d(np.arange(d_in), used_cols)
    if free.size:
        q, _ = np.linalg.qr(y, mode="complete") if n else (np.eye(d_out, dtype=np.complex128), None)
        full[:, free] = q[:, n : n + free.size]
    return full


def convex_mix(p: float, p1: ProtocolSpec, p2: ProtocolSpec) -> ProtocolSpec:
    """Run ``p1`` with probability ``p`` and ``p2`` otherwise.

    The parties pre-share ``sqrt(p)|00> + sqrt(1-p)|11>`` in ``sel_A, sel_B``
    and every step applies the selected branch's isometry, controlled on the
    sender's selector copy. Memory and message registers are padded to a
    common size; the information cost is exactly ``p QIC(p1) + (1-p) QIC(p2)``.
    """
    if not 0.0 <= p <= 1.0:
        raise InputError("mixing weight must lie in [0, 1]")
    if (p1.x_size, p1.y_size) != (p2.x_size, p2.y_size):
        raise InputError("branches have different input alphabets")
    for party in (ALICE, BOB):
        if p1.output_dims(party) != p2.output_dims(party):
            raise InputError(f"branches have different output sizes for {party}")
    r = max(p1.rounds, p2.rounds)
    branches = [pad_rounds(p1, r), pad_rounds(p2, r)]
    weights = [p, 1.0 - p]

    # merged prestate: selector copies plus each branch's entanglement padded to a common size
    t_labels = {party: [] for party in (ALICE, BOB)}
    for b in branches:
        lay = b.prestate.layout if b.prestate is not None else EMPTY
        t_labels_b = {party: [l for l in lay.labels if b.owners.get(l) == party] for party in (ALICE, BOB)}
        t_labels[ALICE].append(t_labels_b[ALICE])
        t_labels[BOB].append(t_labels_b[BOB])
    t_dim = {
        party: max(math.prod(b.dims()[l] for l in t_labels[party][k]) for k, b in enumerate(branches))
        for party in (ALICE, BOB)
    }
    pre = np.zeros((2, 2, t_dim[ALICE], t_dim[BOB]), dtype=np.complex128)
    for k, b in enumerate(branches):
        ta, tb = t_labels[ALICE][k], t_labels[BOB][k]
        da = math.prod(b.dims()[l] for l in ta)
        db = math.prod(b.dims()[l] for l in tb)
        if b.prestate is not None:
            block = _split(b.prestate.amplitudes, b.prestate.layout, ta).reshape(da, db)
        else:
            block = np.ones((1, 1))
        pre[k, k, :da, :db] = math.sqrt(weights[k]) * block
    prestate = GlobalPureState(
        RegisterLayout(("sel_A", "sel_B", "T_A", "T_B"), (2, 2, t_dim[ALICE], t_dim[BOB])), pre.reshape(-1)
    )
    owners = {"sel_A": ALICE, "sel_B": BOB, "T_A": ALICE, "T_B": BOB}

    # per party: combined register list and, per branch, the branch holding order and its embedding
    comb = {ALICE: [(A_IN, p1.x_size), ("T_A", t_dim[ALICE])], BOB: [(B_IN, p1.y_size), ("T_B", t_dim[BOB])]}
    hold = {}
    emb = {}
    for k, b in enumerate(branches):
        for party, inp, size in ((ALICE, A_IN, p1.x_size), (BOB, B_IN, p1.y_size)):
            tl = t_labels[party][k]
            hold[k, party] = [inp] + tl
            dt = math.prod(b.dims()[l] for l in tl)
            idx = np.arange(size * dt)
            emb[k, party] = (idx // dt) * t_dim[party] + idx % dt
    transit = {k: [] for k in range(2)}
    live_dims = []
    for b in branches:
        ld = {A_IN: p1.x_size, B_IN: p1.y_size}
        if b.prestate is not None:
            ld.update(b.prestate.layout.items())
        live_dims.append(ld)
    c_prev = None  # (label, dim)
    last_step = {sender_of(r + 1): r + 1, sender_of(r): r}
    steps = []
    outputs = {}
    for i in range(1, r + 2):
        s = sender_of(i)
        is_last = last_step[s] == i
        in_reg = comb[s] + ([c_prev] if c_prev else [])
        d_k = math.prod(d for _, d in comb[s])
        c_in = c_prev[1] if c_prev else 1
        d_in = d_k * c_in
        maps = []
        for k, b in enumerate(branches):
            st = b.steps[i - 1]
            labels = hold[k, s] + transit[k]
            dims_ = [live_dims[k][l] for l in labels]
            lead_labels = list(b.outputs[s]) if is_last else []
            m, kept, kept_dims, lead, msg = _local_map(st.isometry, labels, dims_, lead_labels, st.message)
            rest = math.prod(kept_dims) // lead
            maps.append((m, kept, kept_dims, lead, rest, msg))
            for l in st.isometry.inputs.labels:
                live_dims[k].pop(l, None)
            live_dims[k].update(st.isometry.outputs.items())
        out_dim = maps[0][3] if is_last else 1
        c_out = max(mp[5] for mp in maps) if i <= r else 1
        mem = max(max(mp[4] for mp in maps), -(-d_in // (out_dim * c_out)))
        out_reg = ([(f"out_{s}", out_dim)] if is_last else []) + [(f"mem{s}{i}", mem)]
        msg_reg = [(f"c{i}", c_out)] if i <= r else []
        d_out = out_dim * mem * c_out
        blocks = []
        new_emb = {}
        for k, (m, kept, kept_dims, lead, rest, msg) in enumerate(maps):
            # rows: branch (lead, rest, msg) -> combined (lead, mem, c_out)
            o, rr, mm = np.meshgrid(np.arange(lead), np.arange(rest), np.arange(msg), indexing="ij")
            rows = ((o * mem + rr) * c_out + mm).reshape(-1)
            y = np.zeros((d_out, m.shape[1]), dtype=np.complex128)
            y[rows, :] = m
            # cols: branch (holding, msg_in) -> combined (embedded holding, msg_in)
            n_msg_in = m.shape[1] // emb[k, s].size
            cols = (emb[k, s][:, None] * c_in + np.arange(n_msg_in)[None, :]).reshape(-1)
            blocks.append(_complete(y, cols, d_in))
            o2, rr2 = np.meshgrid(np.arange(lead), np.arange(rest), indexing="ij")
            new_emb[k] = (o2 * mem + rr2).reshape(-1)
            hold[k, s] = kept
            transit[k] = list(branches[k].steps[i - 1].message)
        mat = np.zeros((2 * d_out, 2 * d_in), dtype=np.complex128)
        mat[:d_out, :d_in] = blocks[0]
        mat[d_out:, d_in:] = blocks[1]
        sel = (f"sel_{s}", 2)
        v = Isometry(RegisterLayout.of([sel] + in_reg), RegisterLayout.of([sel] + out_reg + msg_reg), mat)
        steps.append(Step(s, v, tuple(l for l, _ in msg_reg)))
        comb[s] = out_reg
        for k in range(2):
            emb[k, s] = new_emb[k]
        c_prev = msg_reg[0] if msg_reg else None
        if is_last:
            outputs[s] = (f"out_{s}",)
    return ProtocolSpec(
        p1.x_size,
        p1.y_size,
        steps,
        prestate,
        owners,
        outputs,
        f"mix({p:g}, {p1.name or '?'}, {p2.name or '?'})",
    )
