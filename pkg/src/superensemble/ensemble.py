"""Tree-to-network pipeline and the SECL1 model file.

The tree ranks features and its predicted class becomes one extra 0/1
input column of the RBF network, which makes the final decision.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import data as _data
from .data import Dataset, EncoderState, Schema, encode, fit_encoder
from .rbfn import RbfNetwork, RbfTrainConfig, predict_rbfn, train_rbfn
from .tree import Criterion, TreeModel, grow_tree, predict_tree, rank_features

FORMAT_VERSION = "SECL1"


@dataclass(frozen=True)
class PipelineConfig:
    criterion: Criterion = Criterion.HELLINGER
    minsplit_fraction: float = 0.1
    top_m: Optional[int] = None
    rbfn: RbfTrainConfig = field(default_factory=RbfTrainConfig)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "criterion", Criterion.parse(self.criterion))
        if not 0 < self.minsplit_fraction <= 1:
            raise ValueError(f"minsplit fraction must be in (0, 1], got {self.minsplit_fraction}")
        if self.top_m is not None and self.top_m < 1:
            raise ValueError(f"top_m must be positive, got {self.top_m}")

    def minsplit(self, n_train: int) -> int:
        return max(2, math.ceil(self.minsplit_fraction * n_train))


@dataclass(frozen=True, eq=False)
class SuperensembleModel:
    schema: Schema
    classes: tuple
    tree: TreeModel
    selected_features: tuple
    encoder: EncoderState
    net: RbfNetwork

    @property
    def input_dim(self) -> int:
        return self.encoder.width + 1


def _network_inputs(dataset: Dataset, rows, model_tree: TreeModel, encoder: EncoderState):
    tree_out = predict_tree(model_tree, dataset.X[rows])
    return encode(dataset, rows, encoder, extra_column=tree_out), tree_out


def fit_superensemble(dataset: Dataset, train, validation=None, config: PipelineConfig = PipelineConfig(),
                      inspect: Optional[dict] = None) -> SuperensembleModel:
    """Fit tree, select features, and train the network on [features | tree output].

    Validation rows only feed the network's hidden-unit selection. When
    ``inspect`` is a dict it receives the intermediate inputs for checking.
    """
    train = np.asarray(train, dtype=np.intp)
    validation = None if validation is None or len(validation) == 0 else np.asarray(validation, dtype=np.intp)
    tree = grow_tree(dataset.X[train], dataset.y[train], dataset.categorical_mask,
                     config.criterion, config.minsplit(train.size))
    selected = rank_features(tree, config.top_m) or list(range(dataset.d))
    encoder = fit_encoder(dataset, train, selected)
    Z, tree_out = _network_inputs(dataset, train, tree, encoder)
    val = None
    if validation is not None:
        Zv, _ = _network_inputs(dataset, validation, tree, encoder)
        val = (Zv, dataset.y[validation])
    net = train_rbfn(Z, dataset.y[train], config.rbfn.with_seed(config.seed), val)
    if inspect is not None:
        inspect.update(train_inputs=Z, tree_output=tree_out, validation=val)
    return SuperensembleModel(dataset.schema, tuple(dataset.classes), tree, tuple(selected), encoder, net)


def _check_schema(model: SuperensembleModel, dataset: Dataset):
    if dataset.schema.fingerprint() != model.schema.fingerprint():
        raise _data.DataError("dataset schema does not match the model's schema")


def predict_superensemble(model: SuperensembleModel, dataset: Dataset, rows=None) -> np.ndarray:
    _check_schema(model, dataset)
    rows = np.arange(dataset.n) if rows is None else np.asarray(rows, dtype=np.intp)
    if rows.size == 0:
        return np.empty(0, dtype=np.int8)
    Z, _ = _network_inputs(dataset, rows, model.tree, model.encoder)
    return predict_rbfn(model.net, Z)


# ---------------------------------------------------------------------------
# SECL1 persistence


class ModelFormatError(ValueError):
    """The model file cannot be read."""


class ModelVersionError(ModelFormatError):
    pass


class ModelChecksumError(ModelFormatError):
    pass


class ModelTruncatedError(ModelFormatError):
    pass


def _f(x) -> str:
    return format(float(x), ".17g")


def dumps(model: SuperensembleModel) -> str:
    tree = model.tree
    lines = [f"{FORMAT_VERSION} {model.schema.fingerprint()}", "[SCHEMA]"]
    lines += model.schema.to_text().splitlines()
    lines.append("classes " + " ".join(model.classes))

    lines.append("[TREE]")
    lines.append(f"criterion {tree.criterion.value} minsplit {tree.minsplit} nodes {tree.n_nodes} "
                 f"features {tree.n_features}")
    lines.append("importances " + " ".join(_f(v) for v in tree.importances))
    for i in range(tree.n_nodes):
        p, q = tree.counts[i]
        if tree.feature[i] < 0:
            lines.append(f"L {tree.label[i]} {p} {q}")
        else:
            kind = "c" if tree.is_categorical[i] else "n"
            lines.append(f"N {tree.feature[i]} {kind} {_f(tree.threshold[i])} {_f(tree.score[i])} {p} {q}")

    lines.append("[FEATURES]")
    lines.append(" ".join(str(j) for j in model.selected_features))

    enc = model.encoder
    lines.append("[ENCODER]")
    for j, kind, mean, sd, size in zip(enc.features, enc.kinds, enc.means, enc.sds, enc.sizes):
        if kind == _data.NUMERIC:
            lines.append(f"num {j} {_f(mean)} {_f(sd)}")
        else:
            lines.append(f"cat {j} {size}")

    net = model.net
    lines.append("[RBFN]")
    lines.append(f"k {net.k} d {net.dim}")
    lines.append(f"bias {_f(net.bias)}")
    for j in range(net.k):
        lines.append(" ".join([*(_f(v) for v in net.centers[j]), _f(net.widths[j]), _f(net.weights[j])]))
    body = "\n".join(lines) + "\n"
    return body + f"CRC32 {zlib.crc32(body.encode('utf-8')):08x}\n"


def save_model(model: SuperensembleModel, path) -> None:
    text = dumps(model)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _sections(lines):
    sections, current = {}, None
    for line in lines:
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            sections[current] = []
        elif current is not None:
            sections[current].append(line)
    return sections


def loads(text: str) -> SuperensembleModel:
    first = text.split("\n", 1)[0]
    if not first.startswith(FORMAT_VERSION + " "):
        found = first.split(" ", 1)[0] if first else "<empty>"
        raise ModelVersionError(f"unsupported model format {found!r}, expected {FORMAT_VERSION}")
    body, sep, tail = text.rstrip("\n").rpartition("\n")
    if not sep or not tail.startswith("CRC32 "):
        raise ModelTruncatedError("model file is truncated (no checksum line)")
    body += "\n"
    if f"{zlib.crc32(body.encode('utf-8')):08x}" != tail[6:].strip():
        raise ModelChecksumError("model file checksum mismatch")
    try:
        return _parse(body)
    except (KeyError, IndexError, ValueError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelTruncatedError(f"model file is incomplete or malformed: {exc}") from None


def _parse(body: str) -> SuperensembleModel:
    lines = body.rstrip("\n").split("\n")
    schema_hash = lines[0].split()[1]
    sec = _sections(lines[1:])
    for name in ("SCHEMA", "TREE", "FEATURES", "ENCODER", "RBFN"):
        if name not in sec:
            raise ModelTruncatedError(f"model file lacks the [{name}] section")

    schema_lines = [ln for ln in sec["SCHEMA"] if not ln.startswith("classes ")]
    schema = _data.parse_schema("\n".join(schema_lines))
    if schema.fingerprint() != schema_hash:
        raise ModelFormatError("schema section does not match the header fingerprint")
    classes = tuple(next(ln for ln in sec["SCHEMA"] if ln.startswith("classes ")).split()[1:3])

    tl = sec["TREE"]
    head = tl[0].split()
    criterion, minsplit, n_nodes, n_features = Criterion.parse(head[1]), int(head[3]), int(head[5]), int(head[7])
    importances = np.array([float(v) for v in tl[1].split()[1:]], dtype=np.float64)
    node_lines = tl[2:]
    if len(node_lines) != n_nodes:
        raise ModelTruncatedError(f"tree lists {len(node_lines)} nodes, header says {n_nodes}")
    feature = np.full(n_nodes, -1, dtype=np.intp)
    threshold = np.zeros(n_nodes)
    is_cat = np.zeros(n_nodes, dtype=bool)
    score = np.zeros(n_nodes)
    label = np.zeros(n_nodes, dtype=np.int8)
    counts = np.zeros((n_nodes, 2), dtype=np.int64)
    left = np.full(n_nodes, -1, dtype=np.intp)
    right = np.full(n_nodes, -1, dtype=np.intp)
    for i, ln in enumerate(node_lines):
        parts = ln.split()
        if parts[0] == "L":
            label[i] = int(parts[1])
            counts[i] = (int(parts[2]), int(parts[3]))
        else:
            feature[i] = int(parts[1])
            is_cat[i] = parts[2] == "c"
            threshold[i] = float(parts[3])
            score[i] = float(parts[4])
            counts[i] = (int(parts[5]), int(parts[6]))
            label[i] = 1 if counts[i, 0] > counts[i, 1] else 0
    _link_preorder(feature, left, right)
    tree = TreeModel(feature, threshold, is_cat, left, right, label, counts, score, criterion, minsplit,
                     importances, np.array([f.is_categorical for f in schema.features], dtype=bool))
    if n_features != len(schema.features):
        raise ModelFormatError("tree feature count disagrees with the schema")

    selected = tuple(int(v) for v in sec["FEATURES"][0].split()) if sec["FEATURES"] else ()

    feats, kinds, means, sds, sizes = [], [], [], [], []
    for ln in sec["ENCODER"]:
        parts = ln.split()
        feats.append(int(parts[1]))
        if parts[0] == "num":
            kinds.append(_data.NUMERIC)
            means.append(float(parts[2]))
            sds.append(float(parts[3]))
            sizes.append(1)
        else:
            kinds.append(_data.CATEGORICAL)
            means.append(0.0)
            sds.append(1.0)
            sizes.append(int(parts[2]))
    encoder = EncoderState(tuple(feats), tuple(kinds), np.array(means), np.array(sds), tuple(sizes))

    rl = sec["RBFN"]
    head = rl[0].split()
    k, d = int(head[1]), int(head[3])
    bias = float(rl[1].split()[1])
    rows = [[float(v) for v in ln.split()] for ln in rl[2:]]
    if len(rows) != k or any(len(r) != d + 2 for r in rows):
        raise ModelTruncatedError("network section is incomplete")
    arr = np.array(rows, dtype=np.float64).reshape(k, d + 2)
    net = RbfNetwork(arr[:, :d], arr[:, d], arr[:, d + 1], bias)
    if net.dim != encoder.width + 1:
        raise ModelFormatError("network input width disagrees with the encoder")
    return SuperensembleModel(schema, classes, tree, selected, encoder, net)


def _link_preorder(feature, left, right):
    """Rebuild child links of a pre-order node list."""
    stack = []  # internal nodes still waiting for a right child
    for i in range(feature.shape[0]):
        if i > 0:
            parent = stack[-1] if stack else None
            if parent is None:
                raise ModelFormatError("tree node list is not a valid pre-order sequence")
            if left[parent] < 0:
                left[parent] = i
            else:
                right[parent] = i
                stack.pop()
        if feature[i] >= 0:
            stack.append(i)
    if stack:
        raise ModelTruncatedError("tree node list ends before every internal node has two children")


def load_model(path) -> SuperensembleModel:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            text = fh.read()
    except UnicodeDecodeError:
        raise ModelChecksumError("model file is not valid text") from None
    return loads(text)
