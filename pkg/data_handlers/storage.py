"""
Storage module for networks, MCMC traces, manifests and reports
Local filesystem only: CSV for tables, NPZ for Z draws, JSON for manifests.
"""
import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from data_handlers.network import EdgeKind, Network
from inference.state import ChainState, ChainTrace
from models.prior import ShrinkageState
from utils.validators import NetworkFormatError, validate_index_base

# Setup logging
logger = logging.getLogger('storage')

# header cells of dense CSVs written by save_network: node_0, node_1, ...
DENSE_LABEL = 'node_'

TRACE_CSV = 'trace_chain{k}.csv'
Z_DRAWS = 'z_draws_chain{k}.npz'


def ensure_directory(path):
    """Create directory if not exists"""
    Path(path).mkdir(parents=True, exist_ok=True)


def _to_builtin(value):
    """json.dump default hook for numpy scalars/arrays and enums."""
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if hasattr(value, 'value'):
        return value.value
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def save_json(data, path):
    """Save a dict as pretty-printed JSON, creating parent directories."""
    path = Path(path)
    ensure_directory(path.parent)
    with open(path, 'w') as f:
        json.dump(data, f, indent=2, default=_to_builtin, allow_nan=True)
    logger.debug(f"Saved {path}")
    return str(path)


def load_json(path):
    with open(path, 'r') as f:
        return json.load(f)


# ========================
# Networks
# ========================

def _is_numeric_row(row):
    try:
        [float(v) for v in row]
        return True
    except (TypeError, ValueError):
        return False


def dense_header(n):
    """Column labels save_network writes above a dense adjacency matrix."""
    return [f"{DENSE_LABEL}{i}" for i in range(n)]


def _read_rows(path):
    """Numeric rows of a CSV plus its header cells (None when the first row is numeric)."""
    try:
        frame = pd.read_csv(path, header=None, dtype=str, skip_blank_lines=True,
                            skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise NetworkFormatError(f"{path} contains no rows") from e
    except pd.errors.ParserError as e:
        raise NetworkFormatError(f"{path}: rows have inconsistent column counts ({str(e)[:80]})") from e
    frame = frame.dropna(how='all')
    if frame.empty:
        raise NetworkFormatError(f"{path} contains no rows")
    header = None
    if not _is_numeric_row(frame.iloc[0].dropna().tolist()):
        header = [str(v).strip() for v in frame.iloc[0].dropna().tolist()]
        frame = frame.iloc[1:]
    if frame.empty:
        raise NetworkFormatError(f"{path} contains no rows")
    try:
        return frame.apply(pd.to_numeric).to_numpy(dtype=float), header
    except ValueError as e:
        raise NetworkFormatError(f"{path}: non-numeric value ({e})") from e


def _dense_from_edge_list(rows, index_base, n_nodes):
    if rows.shape[1] not in (2, 3):
        raise NetworkFormatError(f"edge list rows need 2 or 3 columns, got {rows.shape[1]}")
    if np.isnan(rows[:, :2]).any():
        raise NetworkFormatError("edge list has missing node indices")

    nodes = rows[:, :2]
    if np.any(nodes != np.round(nodes)):
        raise NetworkFormatError("node indices must be integers")
    nodes = nodes.astype(np.int64) - index_base
    if np.any(nodes < 0):
        raise NetworkFormatError(f"node index below the index base {index_base}")

    if rows.shape[1] == 3:
        weights = np.where(np.isnan(rows[:, 2]), 1.0, rows[:, 2])
    else:
        weights = np.ones(len(rows))

    n = int(nodes.max()) + 1 if len(nodes) else 0
    if n_nodes is not None:
        if n_nodes < n:
            raise NetworkFormatError(f"edge list references node {n - 1 + index_base} but n_nodes={n_nodes}")
        n = n_nodes

    for (i, j), w in zip(nodes, weights):
        if i == j and w != 0:
            raise NetworkFormatError(f"self-loop on node {i + index_base} (row '{i + index_base},{j + index_base},{w:g}')")

    dense = np.zeros((n, n))
    # later rows overwrite earlier ones for repeated dyads
    dense[nodes[:, 0], nodes[:, 1]] = weights
    return dense


def detect_format(rows, header=None):
    """
    'dense' for files carrying the save_network header, for square tables wider
    than an edge list, or for 2x2 and 3x3 tables whose diagonal is all zero;
    'edgelist' otherwise.
    """
    n_rows, n_cols = rows.shape
    if header is not None and header == dense_header(n_cols):
        return 'dense'
    if n_rows == n_cols and n_cols > 3:
        return 'dense'
    if n_rows == n_cols >= 2 and not np.isnan(rows).any() and np.all(np.diag(rows) == 0):
        return 'dense'
    return 'edgelist'


def load_network(path, kind=EdgeKind.BINARY, directed=False, fmt='auto', index_base=0, n_nodes=None):
    """
    Load a network from an edge-list or dense adjacency CSV.

    Args:
        path: CSV file
        kind: EdgeKind.BINARY or EdgeKind.COUNT
        directed: Keep asymmetric dyads; undirected input is symmetrized by the
            max of (i,j) and (j,i)
        fmt: 'edgelist', 'dense' or 'auto' (see detect_format)
        index_base: 0 or 1, node numbering of edge lists
        n_nodes: Optional node count for edge lists with isolated trailing nodes

    Returns:
        Network
    """
    validate_index_base(index_base)
    rows, header = _read_rows(path)

    if fmt == 'auto':
        fmt = detect_format(rows, header)

    if fmt == 'dense':
        if rows.shape[0] != rows.shape[1]:
            raise NetworkFormatError(f"dense adjacency must be square, got {rows.shape[0]}x{rows.shape[1]}")
        if np.isnan(rows).any():
            raise NetworkFormatError("dense adjacency has missing entries")
        dense = rows
    elif fmt == 'edgelist':
        dense = _dense_from_edge_list(rows, index_base, n_nodes)
    else:
        raise NetworkFormatError(f"unknown network format {fmt!r}")

    if np.any(dense < 0):
        raise NetworkFormatError("edge values must be non-negative")
    if not directed:
        dense = np.maximum(dense, dense.T)

    net = Network(dense, kind=EdgeKind(kind), directed=directed)
    logger.info(f"Loaded {net} from {path}")
    return net


def save_network(net, path):
    """Write the dense adjacency matrix as integer CSV under a node_0..node_{n-1} header."""
    path = Path(path)
    ensure_directory(path.parent)
    np.savetxt(path, net.edges, fmt='%d', delimiter=',', header=','.join(dense_header(net.n)), comments='')
    return str(path)


# ========================
# Traces
# ========================

def trace_frame(trace):
    """Scalar trace columns: iter, alpha, delta_1..p, omega_1..p, loglik."""
    p = trace.delta.shape[1]
    columns = {'iter': trace.iterations, 'alpha': trace.alpha}
    for h in range(p):
        columns[f'delta_{h + 1}'] = trace.delta[:, h]
    for h in range(p):
        columns[f'omega_{h + 1}'] = trace.omega[:, h]
    columns['loglik'] = trace.log_lik
    return pd.DataFrame(columns)


def save_trace(trace, out_dir):
    """
    Save one chain: scalar parameters as CSV, Z draws and bookkeeping as NPZ.

    Returns: dict with the two file paths
    """
    out_dir = Path(out_dir)
    ensure_directory(out_dir)
    k = trace.chain_index

    csv_path = out_dir / TRACE_CSV.format(k=k)
    trace_frame(trace).to_csv(csv_path, index=False, float_format='%.17g')

    npz_path = out_dir / Z_DRAWS.format(k=k)
    np.savez(
        npz_path,
        Z=trace.Z,
        reference_Z=trace.reference_Z,
        reference_log_lik=np.float64(trace.reference_log_lik),
        counters=np.array([trace.z_accepted, trace.z_proposed,
                           trace.alpha_accepted, trace.alpha_proposed,
                           trace.clip_count], dtype=np.int64),
        meta=np.array([trace.chain_index, trace.seed], dtype=np.int64),
        kind=np.array(trace.kind),
        wall_time=np.float64(trace.wall_time),
        step_z=np.float64(np.nan if trace.step_z is None else trace.step_z),
    )
    return {'trace': str(csv_path), 'z_draws': str(npz_path)}


def _optional_float(npz, key):
    if key not in npz.files:
        return None
    value = float(npz[key])
    return None if np.isnan(value) else value


def load_trace(out_dir, chain_index):
    """Rebuild a ChainTrace saved by save_trace."""
    out_dir = Path(out_dir)
    frame = pd.read_csv(out_dir / TRACE_CSV.format(k=chain_index))
    p = sum(1 for c in frame.columns if c.startswith('delta_'))

    with np.load(out_dir / Z_DRAWS.format(k=chain_index)) as npz:
        counters = npz['counters']
        meta = npz['meta']
        return ChainTrace(
            chain_index=int(meta[0]),
            seed=int(meta[1]),
            kind=str(npz['kind']),
            iterations=frame['iter'].to_numpy(dtype=np.int64),
            Z=npz['Z'],
            alpha=frame['alpha'].to_numpy(dtype=float),
            delta=frame[[f'delta_{h + 1}' for h in range(p)]].to_numpy(dtype=float),
            omega=frame[[f'omega_{h + 1}' for h in range(p)]].to_numpy(dtype=float),
            log_lik=frame['loglik'].to_numpy(dtype=float),
            reference_Z=npz['reference_Z'],
            reference_log_lik=float(npz['reference_log_lik']),
            z_accepted=int(counters[0]),
            z_proposed=int(counters[1]),
            alpha_accepted=int(counters[2]),
            alpha_proposed=int(counters[3]),
            clip_count=int(counters[4]),
            wall_time=float(npz['wall_time']),
            step_z=_optional_float(npz, 'step_z'),
        )


def load_traces(out_dir):
    """Load every chain found in a fit directory, ordered by chain index."""
    out_dir = Path(out_dir)
    indices = sorted(
        int(path.stem.rsplit('chain', 1)[1])
        for path in out_dir.glob(TRACE_CSV.format(k='*'))
    )
    if not indices:
        raise FileNotFoundError(f"No trace files in {out_dir}")
    return [load_trace(out_dir, k) for k in indices]


def save_state_dump(state, path):
    """Write a ChainState as JSON (used for last-good-state dumps)."""
    return save_json({
        'iteration': state.iteration,
        'alpha': state.alpha,
        'log_lik': state.log_lik,
        'delta': state.shrink.delta,
        'omega': state.shrink.omega,
        'Z': state.Z,
    }, path)


def load_state_dump(path):
    data = load_json(path)
    return ChainState(
        Z=np.asarray(data['Z'], dtype=float),
        alpha=float(data['alpha']),
        shrink=ShrinkageState.from_delta(data['delta']),
        log_lik=float(data['log_lik']),
        iteration=int(data['iteration']),
    )


def save_frame(frame, path):
    path = Path(path)
    ensure_directory(path.parent)
    frame.to_csv(path, index=False, float_format='%.17g')
    return str(path)
