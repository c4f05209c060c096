#!/usr/bin/env python
# Copyright 2025 The PySCF Developers. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
#

'''
Compact metric graphs and their piecewise-linear finite element meshes.

A metric graph is a set of vertices embedded in the plane and a set of edges,
each edge being an interval [0, l_e] glued to its end vertices.  A point of
the graph is addressed by ``(edge id, arclength t)``.  The mesh subdivides
every edge uniformly and maps all edge end nodes at a vertex onto one global
degree of freedom, which makes every piecewise-linear field continuous across
vertices.
'''

import os
import json
import math
from collections import namedtuple
import numpy
import networkx

# coordinates of the interior nodes are placed on the straight segment between
# the end vertices; analysis uses arclength only
POINT_TOL = 1e-12
NODE_SNAP = 1e-12

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'data')


class GraphError(ValueError):
    pass


GraphPoint = namedtuple('GraphPoint', ['edge', 't'])
GraphPoint.__doc__ = '''A point on a metric graph, x = (edge id, arclength t), 0 <= t <= l_e'''


class MetricGraph:
    '''Compact connected metric graph with a planar embedding.

    Attributes:
        vertex_ids : list
            Vertex ids (str or int) in input order.
        coords : ndarray of shape (nvertex, 2)
            Planar coordinates (z1, z2) of the vertices.
        edge_ids : list
            Edge ids in input order.
        edges : ndarray of shape (nedge, 2)
            Source and target vertex indices (positions in vertex_ids).
        lengths : ndarray of shape (nedge,)
            Edge lengths l_e > 0.
    '''
    def __init__(self, vertices, edges, name=None):
        self.name = name
        self.vertex_ids = []
        coords = []
        for v in vertices:
            if isinstance(v, dict):
                try:
                    vid, x, y = v['id'], v['x'], v['y']
                except KeyError as e:
                    raise GraphError(f'vertex {v} misses key {e}')
            else:
                vid, x, y = v
            self.vertex_ids.append(_check_id(vid, 'vertex'))
            coords.append((float(x), float(y)))
        self.coords = numpy.asarray(coords, dtype=float).reshape(-1, 2)
        self._vertex_index = {}
        for i, vid in enumerate(self.vertex_ids):
            if vid in self._vertex_index:
                raise GraphError(f'duplicated vertex id {vid!r}')
            self._vertex_index[vid] = i
        if not numpy.isfinite(self.coords).all():
            raise GraphError('vertex coordinates must be finite')

        self.edge_ids = []
        pairs = []
        lengths = []
        for e in edges:
            if isinstance(e, dict):
                try:
                    eid, src, tgt = e['id'], e['source'], e['target']
                except KeyError as err:
                    raise GraphError(f'edge {e} misses key {err}')
                length = e.get('length')
            elif len(e) == 3:
                eid, src, tgt = e
                length = None
            else:
                eid, src, tgt, length = e
            eid = _check_id(eid, 'edge')
            for vid in (src, tgt):
                if vid not in self._vertex_index:
                    raise GraphError(f'edge {eid!r} references unknown vertex {vid!r}')
            i, j = self._vertex_index[src], self._vertex_index[tgt]
            if length is None:
                length = float(numpy.linalg.norm(self.coords[j] - self.coords[i]))
                if length <= 0:
                    raise GraphError(f'edge {eid!r} has coincident endpoints and no '
                                     'explicit length')
            else:
                length = float(length)
                if not (length > 0 and math.isfinite(length)):
                    raise GraphError(f'edge {eid!r} has non-positive length {length}')
            self.edge_ids.append(eid)
            pairs.append((i, j))
            lengths.append(length)
        self.edges = numpy.asarray(pairs, dtype=int).reshape(-1, 2)
        self.lengths = numpy.asarray(lengths, dtype=float)
        self._edge_index = {}
        for k, eid in enumerate(self.edge_ids):
            if eid in self._edge_index:
                raise GraphError(f'duplicated edge id {eid!r}')
            self._edge_index[eid] = k
        self.check_sanity()

    @property
    def nvertex(self):
        return len(self.vertex_ids)

    @property
    def nedge(self):
        return len(self.edge_ids)

    @property
    def total_length(self):
        return float(self.lengths.sum())

    def check_sanity(self):
        if self.nvertex == 0 or self.nedge == 0:
            raise GraphError('a metric graph needs at least one vertex and one edge')
        g = self.to_networkx()
        if not networkx.is_connected(g):
            comps = [sorted(c, key=str) for c in networkx.connected_components(g)]
            isolated = [c for c in comps if len(c) < max(len(x) for x in comps)]
            raise GraphError(f'graph is disconnected; {len(comps)} components, '
                             f'detached vertices {isolated[0]}')
        return self

    def to_networkx(self):
        '''MultiGraph keyed by edge id with a ``length`` attribute per edge'''
        g = networkx.MultiGraph()
        for vid, z in zip(self.vertex_ids, self.coords):
            g.add_node(vid, pos=tuple(z))
        for eid, (i, j), length in zip(self.edge_ids, self.edges, self.lengths):
            g.add_edge(self.vertex_ids[i], self.vertex_ids[j], key=eid, length=length)
        return g

    def vertex_index(self, vid):
        try:
            return self._vertex_index[vid]
        except KeyError:
            raise GraphError(f'unknown vertex id {vid!r}')

    def edge_index(self, eid):
        try:
            return self._edge_index[eid]
        except KeyError:
            pass
        # ids read back from text files arrive as str
        for key, k in self._edge_index.items():
            if str(key) == str(eid):
                return k
        raise GraphError(f'unknown edge id {eid!r}')

    def degree(self, vid):
        i = self.vertex_index(vid)
        return int((self.edges == i).sum())

    def vertex_of(self, point, tol=POINT_TOL):
        '''Index of the vertex a GraphPoint sits on, or None for edge-interior points'''
        k = self.edge_index(point.edge)
        length = self.lengths[k]
        if abs(point.t) <= tol * length:
            return int(self.edges[k, 0])
        if abs(point.t - length) <= tol * length:
            return int(self.edges[k, 1])
        return None

    def point_equal(self, p, q, tol=POINT_TOL):
        '''Point equality on the graph.  The d representations of a vertex
        of degree d compare equal.'''
        vp = self.vertex_of(p, tol)
        vq = self.vertex_of(q, tol)
        if vp is not None or vq is not None:
            return vp == vq
        kp = self.edge_index(p.edge)
        kq = self.edge_index(q.edge)
        return kp == kq and abs(p.t - q.t) <= tol * self.lengths[kp]

    def vertex_points(self, vid):
        '''All GraphPoint representations of a vertex'''
        i = self.vertex_index(vid)
        pts = []
        for eid, (a, b), length in zip(self.edge_ids, self.edges, self.lengths):
            if a == i:
                pts.append(GraphPoint(eid, 0.))
            if b == i:
                pts.append(GraphPoint(eid, float(length)))
        return pts

    def embed(self, point):
        '''Planar coordinates of a GraphPoint by linear interpolation along the edge'''
        k = self.edge_index(point.edge)
        i, j = self.edges[k]
        s = point.t / self.lengths[k]
        return (1 - s) * self.coords[i] + s * self.coords[j]

    def to_dict(self):
        return {
            'name': self.name,
            'vertices': [{'id': vid, 'x': float(z[0]), 'y': float(z[1])}
                         for vid, z in zip(self.vertex_ids, self.coords)],
            'edges': [{'id': eid, 'source': self.vertex_ids[i],
                       'target': self.vertex_ids[j], 'length': float(length)}
                      for eid, (i, j), length in zip(self.edge_ids, self.edges,
                                                      self.lengths)],
        }

    def __repr__(self):
        return (f'<{self.__class__.__name__} {self.name or ""} nvertex={self.nvertex} '
                f'nedge={self.nedge} length={self.total_length:.6g}>')


def _check_id(x, kind):
    if isinstance(x, bool) or not isinstance(x, (str, int)):
        raise GraphError(f'{kind} id {x!r} must be a string or an integer')
    return x


def graph_from_dict(doc, name=None):
    if not isinstance(doc, dict) or 'vertices' not in doc or 'edges' not in doc:
        raise GraphError('graph document needs top-level keys "vertices" and "edges"')
    return MetricGraph(doc['vertices'], doc['edges'], name=name or doc.get('name'))


def load_graph(path):
    '''Read a graph file (JSON with "vertices" [{id, x, y}] and
    "edges" [{id, source, target, length?}]).  ``builtin:<name>`` selects
    one of the bundled graphs (interval, star3, letter).
    '''
    if isinstance(path, str) and path.startswith('builtin:'):
        name = path.split(':', 1)[1]
        path = os.path.join(DATA_DIR, f'{name}.json')
        if not os.path.isfile(path):
            raise GraphError(f'no bundled graph named {name!r}')
    try:
        with open(path, 'r', encoding='utf-8') as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise GraphError(f'cannot parse graph file {path}: {e}')
    name = os.path.splitext(os.path.basename(str(path)))[0]
    return graph_from_dict(doc, name=doc.get('name', name) if isinstance(doc, dict) else name)


def interval(length=1.):
    '''The graph [0, length]'''
    return MetricGraph([(0, 0., 0.), (1, length, 0.)], [(0, 0, 1)], name='interval')


def star(nleg=3, length=1.):
    '''Star graph with a center vertex and ``nleg`` edges of equal length'''
    vertices = [('c', 0., 0.)]
    edges = []
    for k in range(nleg):
        phi = 2 * math.pi * k / nleg
        vertices.append((f'l{k}', length * math.cos(phi), length * math.sin(phi)))
        edges.append((k, 'c', f'l{k}', length))
    return MetricGraph(vertices, edges, name=f'star{nleg}')


class Mesh:
    '''Uniform per-edge subdivision of a MetricGraph.

    DOFs are numbered vertices first (input order), then the interior nodes
    edge by edge (input order).

    Attributes:
        graph : MetricGraph
        h : float
            Requested mesh size.
        nelem_edge : ndarray of int
            Number of elements on each edge.
        node_t : list of ndarray
            Arclength positions of the nodes of each edge, both ends included.
        dofmap : list of ndarray of int
            Global DOF of every node of each edge.
        n_dof : int
        coords : ndarray of shape (n_dof, 2)
            Embedded coordinates (z1, z2) of every DOF.
        elem_dofs : ndarray of shape (nelem, 2)
            Left and right DOF of every element, elements numbered edge by edge.
        elem_width : ndarray of shape (nelem,)
        elem_edge : ndarray of shape (nelem,)
            Edge index of each element.
        elem_offset : ndarray of shape (nedge+1,)
            First global element id of each edge.
    '''
    def __init__(self, graph, h):
        if not (h > 0 and math.isfinite(h)):
            raise ValueError(f'mesh size h must be positive, got {h}')
        self.graph = graph
        self.h = float(h)
        nv = graph.nvertex
        # ceil(l/h) with protection against l/h landing one ulp above an integer
        ratio = graph.lengths / self.h
        self.nelem_edge = numpy.maximum(1, numpy.ceil(ratio - 1e-9 * ratio)).astype(int)

        self.node_t = []
        self.dofmap = []
        coords = [graph.coords]
        offset = nv
        for k, (n, length) in enumerate(zip(self.nelem_edge, graph.lengths)):
            i, j = graph.edges[k]
            t = numpy.linspace(0., length, n + 1)
            t[-1] = length
            dofs = numpy.empty(n + 1, dtype=int)
            dofs[0] = i
            dofs[-1] = j
            dofs[1:-1] = numpy.arange(offset, offset + n - 1)
            offset += n - 1
            s = t[1:-1, None] / length
            coords.append((1 - s) * graph.coords[i] + s * graph.coords[j])
            self.node_t.append(t)
            self.dofmap.append(dofs)
        self.n_dof = offset
        self.coords = numpy.vstack(coords)

        self.elem_dofs = numpy.vstack([numpy.column_stack((d[:-1], d[1:]))
                                       for d in self.dofmap])
        self.elem_width = numpy.hstack([numpy.diff(t) for t in self.node_t])
        self.elem_edge = numpy.repeat(numpy.arange(graph.nedge), self.nelem_edge)
        self.elem_offset = numpy.hstack(([0], numpy.cumsum(self.nelem_edge)))

    @property
    def nelem(self):
        return len(self.elem_width)

    @property
    def nvertex(self):
        return self.graph.nvertex

    def locate(self, point):
        '''Containing element and local coordinate of a GraphPoint.

        Returns:
            (global element id, local coordinate s in [0, 1]).  A point on an
            interior node belongs to the element on its left; t = 0 gives
            (first element, 0) and t = l_e gives (last element, 1).
        '''
        k = self.graph.edge_index(point.edge)
        length = self.graph.lengths[k]
        n = self.nelem_edge[k]
        t = float(point.t)
        if t < -POINT_TOL * length or t > length * (1 + POINT_TOL):
            raise ValueError(f'point {point} is off the graph: t outside [0, {length}]')
        t = min(max(t, 0.), length)
        nodes = self.node_t[k]
        # points within rounding of a node sit exactly on it
        m = int(numpy.searchsorted(nodes, t))
        for cand in (m - 1, m):
            if 0 <= cand <= n and abs(nodes[cand] - t) <= NODE_SNAP * length:
                t = nodes[cand]
                break
        ie = min(max(int(numpy.searchsorted(nodes, t, side='left')) - 1, 0), n - 1)
        local = (t - nodes[ie]) / (nodes[ie+1] - nodes[ie])
        return int(self.elem_offset[k] + ie), float(local)

    def interpolation_weights(self, point):
        '''(dofs, weights) such that p(point) = weights . p[dofs]'''
        ielem, s = self.locate(point)
        i, j = self.elem_dofs[ielem]
        return numpy.array([i, j]), numpy.array([1. - s, s])

    def dof_points(self):
        '''One GraphPoint per DOF, vertices represented through their first
        incident edge'''
        pts = [None] * self.n_dof
        for eid, t, dofs in zip(self.graph.edge_ids, self.node_t, self.dofmap):
            for tk, d in zip(t, dofs):
                if pts[d] is None:
                    pts[d] = GraphPoint(eid, float(tk))
        return pts

    def node_table(self):
        '''Rows (edge id, t, z1, z2, dof) for every node occurrence on every
        edge; vertex DOFs appear once per incident edge'''
        rows = []
        for eid, t, dofs in zip(self.graph.edge_ids, self.node_t, self.dofmap):
            for tk, d in zip(t, dofs):
                rows.append((eid, float(tk), self.coords[d, 0], self.coords[d, 1], int(d)))
        return rows

    def same_as(self, other):
        if self is other:
            return True
        return (isinstance(other, Mesh) and self.n_dof == other.n_dof and
                self.graph is other.graph and self.h == other.h)

    def __repr__(self):
        return f'<{self.__class__.__name__} h={self.h:g} nelem={self.nelem} n_dof={self.n_dof}>'


def build_mesh(graph, h):
    '''Uniform subdivision of every edge into ceil(l_e/h) elements with
    shared vertex DOFs'''
    return Mesh(graph, h)


def locate(mesh, point):
    return mesh.locate(point)
