"""Generated log corpora with known templates, for tests and smoke runs.

Templates use typed slots such as ``{blk}`` or ``{ip}``; each slot type draws
from its own value pool, so hosts and block ids recur across lines the way
they do in real service logs. None of this is real Loghub data.
"""

from __future__ import annotations

import re

import numpy as np

from .corpus import Dataset, TokenizerConfig, make_dataset
from .labeler import LabeledSentence, WordLabel

_SLOT = re.compile(r"\{(\w+)\}")

SERVICE_TEMPLATES = (
    "Receiving block {blk} src {ip} dest {ip}",
    "PacketResponder {int} for block {blk} terminating",
    "Received block {blk} of size {size} from {ip}",
    "BLOCK* NameSystem.addStoredBlock blockMap updated {ip} is added to {blk} size {size}",
    "Verification succeeded for {blk}",
    "Deleting block {blk} file {path}",
    "BLOCK* NameSystem.allocateBlock {path} {blk}",
    "Served block {blk} to {ip}",
    "Connection request from old client {ip} will be dropped if server is in r-o mode",
    "Accepted socket connection from {ip}",
)

INTERFACE_TEMPLATES = (
    "Interface {port_id} change state to down",
    "Interface {port_id} change state to up",
)

# shapes and relative frequencies in the spirit of public 2k service samples
LOGHUB_LIKE = {
    "HDFS": (
        ("Receiving block {blk} src: {ip}:{port} dest: {ip}:{port}", 290),
        ("PacketResponder {int} for block {blk} terminating", 310),
        ("Received block {blk} of size {size} from {ip}", 290),
        ("BLOCK* NameSystem.addStoredBlock: blockMap updated: {ip}:{port} is added to {blk} size {size}", 310),
        ("BLOCK* NameSystem.allocateBlock: {path}. {blk}", 115),
        ("Verification succeeded for {blk}", 60),
        ("Deleting block {blk} file {path}", 260),
        ("BLOCK* NameSystem.delete: {blk} is added to invalidSet of {ip}:{port}", 230),
        ("{ip}:{port} Served block {blk} to {ip}", 80),
        ("{ip}:{port}:Got exception while serving {blk} to {ip}:", 70),
        ("Receiving empty packet for block {blk}", 5),
        ("PacketResponder {blk} {int} Exception java.io.IOException: Broken pipe", 10),
        ("BLOCK* ask {ip}:{port} to replicate {blk} to datanode(s) {ip}:{port}", 10),
        ("{ip}:{port}:Transmitted block {blk} to {ip}:{port}", 10),
    ),
    "Zookeeper": (
        ("Received connection request {ip}:{port}", 200),
        ("Connection broken for id {int}, my id = {int}, error =", 120),
        ("Interrupted while waiting for message on queue", 110),
        ("Send worker leaving thread", 120),
        ("Interrupting SendWorker", 110),
        ("Notification time out: {int}", 100),
        ("Cannot open channel to {int} at election address {ip}:{port}", 140),
        ("Accepted socket connection from {ip}:{port}", 170),
        ("Client attempting to establish new session at {ip}:{port}", 120),
        ("Established session {hex} with negotiated timeout {int} for client {ip}:{port}", 120),
        ("Closed socket connection for client {ip}:{port} which had sessionid {hex}", 170),
        ("Expiring session {hex}, timeout of {int}ms exceeded", 90),
        ("Processed session termination for sessionid: {hex}", 90),
        ("caught end of stream exception", 80),
        ("Unexpected Exception:", 40),
        ("Got user-level KeeperException when processing sessionid:{hex} type:create cxid:{hex} "
         "zxid:{hex} txntype:-1 reqpath:n/a Error Path:{path} Error:KeeperErrorCode = NodeExists", 20),
    ),
    "Proxifier": (
        ("{host}:{port} open through proxy {host}:{port} HTTPS", 600),
        ("{host}:{port} close, {int} bytes sent, {int} bytes received, lifetime {dur}", 700),
        ("{host}:{port} close, {int} bytes ({size}) sent, {int} bytes ({size}) received, lifetime {dur}", 500),
        ("{host}:{port} error : Could not connect to proxy {host}:{port} - connection attempt failed with error {int}", 100),
        ("{host}:{port} open through proxy {host}:{port} SOCKS5", 80),
        ("{host}:{port} close, {int} bytes sent, {int} bytes received, lifetime <1 sec", 20),
    ),
    "BGL": (
        ("generating core.{int}", 300),
        ("instruction cache parity error corrected", 250),
        ("CE sym {int}, at {hex}, mask {hex}", 200),
        ("{int} double-hummer alignment exceptions", 150),
        ("data TLB error interrupt", 100),
        ("ciod: failed to read message prefix on control stream (CioStream socket to {ip}:{port}", 150),
        ("ciod: Error reading message prefix after LOGIN_MESSAGE on CioStream socket to {ip}:{port}", 120),
        ("total of {int} ddr error(s) detected and corrected", 200),
        ("iar {hex} dear {hex}", 150),
        ("Lustre mount FAILED : {node} : block_id : location", 100),
        ("rts: kernel terminated for reason {int}", 50),
        ("data storage interrupt", 30),
    ),
    "Hadoop": (
        ("Progress of TaskAttempt {attempt} is : {float}", 400),
        ("Address change detected. Old: {host}/{ip}:{port} New: {host}:{port}", 250),
        ("Retrying connect to server: {host}:{port}. Already tried {int} time(s); maxRetries={int}", 300),
        ("KILLING {attempt}", 60),
        ("{attempt} TaskAttempt Transitioned from RUNNING to SUCCESS_CONTAINER_CLEANUP", 150),
        ("Processing the event EventType: CONTAINER_REMOTE_CLEANUP for container {container} taskAttempt {attempt}", 150),
        ("ERROR IN CONTACTING RM.", 150),
        ("Task: {attempt} - exited : java.net.NoRouteToHostException: No Route to Host", 100),
        ("Assigned container {container} to {attempt}", 150),
        ("DefaultSpeculator.addSpeculativeAttempt -- we are speculating {task}", 50),
        ("Num completed Tasks: {int}", 100),
        ("Recalculating schedule, headroom=<memory:{int}, vCores:{int}>", 100),
    ),
}


class _ValuePools:
    """Finite value pools per slot type; draws are uniform within each pool."""

    def __init__(self, rng: np.random.Generator, n: int):
        self.rng = rng
        r = rng.integers
        self.pools = {
            "ip": ["/10.{}.{}.{}".format(*r(0, 256, size=3)) for _ in range(40)],
            "host": [f"host-{int(v)}.example.net" for v in r(0, 10 ** 6, size=60)],
            "blk": ["blk_" + str(int(v) * (-1 if int(v) % 3 == 0 else 1)) for v in r(10 ** 17, 10 ** 18, size=max(1, n // 3))],
            "node": ["R{:02d}-M{}-N{}-C:J{:02d}-U{:02d}".format(*r(0, 16, size=5)) for _ in range(80)],
            "path": [f"/user/root/rand{int(v)}/_temporary/part-{int(w):05d}" for v, w in zip(r(0, 50, size=60), r(0, 99, size=60))],
            "attempt": [f"attempt_1445144423722_0020_m_{int(v):06d}_{int(w)}" for v, w in zip(r(0, 20, size=60), r(0, 2, size=60))],
            "container": [f"container_1445144423722_0020_01_{int(v):06d}" for v in r(0, 30, size=60)],
            "task": [f"task_1445144423722_0020_m_{int(v):06d}" for v in r(0, 20, size=40)],
        }

    def draw(self, kind: str) -> str:
        rng = self.rng
        pool = self.pools.get(kind)
        if pool is not None:
            return pool[int(rng.integers(len(pool)))]
        if kind == "port":
            return str(int(rng.choice([50010, 2888, 3888, 443, 80, 8030])) if rng.random() < 0.5
                       else int(rng.integers(1024, 65536)))
        if kind == "int":
            return str(int(rng.integers(0, 10 ** int(rng.integers(1, 7)))))
        if kind == "size":
            return str(int(rng.integers(1000, 70000000)))
        if kind == "hex":
            return "0x" + format(int(rng.integers(0, 2 ** 48)), "x")
        if kind == "float":
            return f"{rng.random():.7f}"
        if kind == "dur":
            return "{:02d}:{:02d}".format(*rng.integers(0, 60, size=2))
        if kind == "port_id":
            return "te-{}/{}/{}".format(*rng.integers(0, 100, size=3))
        raise KeyError(f"unknown slot type {kind!r}")


def render(template: str, pools: _ValuePools) -> str:
    return _SLOT.sub(lambda m: pools.draw(m.group(1)), template)


def templated_corpus(n: int, templates=SERVICE_TEMPLATES, seed: int = 0, name: str = "synthetic",
                     weights=None, config: TokenizerConfig = TokenizerConfig()) -> Dataset:
    """``n`` lines drawn from ``templates`` with random variable values.

    Ground-truth groups are ``E1``, ``E2``, ... by template index.
    """
    rng = np.random.default_rng(seed)
    pools = _ValuePools(rng, n)
    if weights is not None:
        weights = np.asarray(weights, dtype=float)
        weights = weights / weights.sum()
    picks = rng.choice(len(templates), size=n, p=weights)
    contents = [render(templates[k], pools) for k in picks]
    truth = [f"E{k + 1}" for k in picks]
    return make_dataset(name, contents, truth, config)


def loghub_like(name: str, n: int = 2000, seed: int = 0) -> Dataset:
    """Synthetic stand-in shaped like one of the five public 2k samples."""
    entries = LOGHUB_LIKE[name]
    return templated_corpus(n, [t for t, _ in entries], seed=seed, name=f"{name}-like",
                            weights=[w for _, w in entries])


def two_template_corpus(n: int = 500, seed: int = 0) -> Dataset:
    return templated_corpus(n, INTERFACE_TEMPLATES, seed=seed, name="interface")


def long_range_corpus(n: int, length: int = 12, lag: int = 4, seed: int = 0,
                      alphabet: int = 6) -> list[LabeledSentence]:
    """Sentences whose label at ``i`` is VARIABLE iff token ``i - lag`` is ``"k0"``.

    A width-3 window centred on ``i`` never contains ``i - lag`` for lag >= 2.
    """
    rng = np.random.default_rng(seed)
    out = []
    for rid in range(n):
        toks = [f"k{int(v)}" for v in rng.integers(0, alphabet, size=length)]
        labels = tuple(WordLabel.VARIABLE if i >= lag and toks[i - lag] == "k0" else WordLabel.TEMPLATE
                       for i in range(length))
        out.append(LabeledSentence(rid, tuple(toks), labels, 0))
    return out
