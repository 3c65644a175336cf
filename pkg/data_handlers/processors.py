"""
Graph statistics computed from a Network: density, transitivity, geodesic distances.
"""
import networkx as nx
import numpy as np

from data_handlers.network import EdgeKind, Network
from utils.validators import ValidationError


def density(net):
    """
    Fraction of ordered pairs i != j with a nonzero entry.

    Undirected networks count each symmetric dyad twice over a denominator
    of n(n-1), so both conventions agree.
    """
    if net.n < 2:
        raise ValidationError("density needs at least two nodes")
    return float(np.count_nonzero(net.offdiag_values())) / net.n_pairs


def _undirected_graph(net):
    return nx.from_numpy_array(net.symmetrized_binary())


def transitivity(net):
    """
    3 x triangles / connected triples on the binarized, symmetrized graph.

    Returns 0 when the graph has no connected triple.
    """
    if net.n < 3:
        return 0.0
    return float(nx.transitivity(_undirected_graph(net)))


def geodesic_distances(net):
    """
    Shortest-path hop counts on the binarized, symmetrized graph.

    Unreachable pairs get (largest finite distance + 1) so the matrix stays
    finite and usable for multidimensional scaling.
    """
    n = net.n
    dist = np.full((n, n), np.inf)
    for source, lengths in nx.all_pairs_shortest_path_length(_undirected_graph(net)):
        for target, hops in lengths.items():
            dist[source, target] = hops

    finite = np.isfinite(dist)
    if not finite.all():
        largest = dist[finite].max()
        dist[~finite] = largest + 1
    np.fill_diagonal(dist, 0.0)
    return dist


def binarize(net):
    """Binary copy of a network (entries > 0), keeping directedness."""
    if net.kind == EdgeKind.BINARY:
        return net
    return Network(net.binarized(), kind=EdgeKind.BINARY, directed=net.directed)


def describe_network(net):
    """
    Summary statistics of a network.

    Returns:
        dict with n, edge count, density, transitivity, kind, directedness and,
        for count networks, the mean and variance of the off-diagonal counts.
    """
    values = net.offdiag_values()
    n_edges = int(np.count_nonzero(values))
    if not net.directed:
        n_edges //= 2

    summary = {
        'n': net.n,
        'kind': net.kind.value,
        'directed': net.directed,
        'edges': n_edges,
        'density': density(net) if net.n >= 2 else 0.0,
        'transitivity': transitivity(net),
    }
    if net.kind == EdgeKind.COUNT:
        summary['count_mean'] = float(values.mean()) if values.size else 0.0
        summary['count_variance'] = float(values.var(ddof=1)) if values.size > 1 else 0.0
        summary['max_count'] = int(values.max()) if values.size else 0
    return summary
