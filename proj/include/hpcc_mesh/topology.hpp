// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

#include "hpcc_mesh/transport.hpp"

namespace hpcc_mesh::transport {

enum class TopologyKind { ring, torus2d, pq_grid };

std::string_view to_string(TopologyKind k);
TopologyKind topology_from_string(std::string_view name);

// Grid coordinate: p is the row, q the column.
struct GridCoord {
    int p = 0;
    int q = 0;
    friend constexpr bool operator==(GridCoord, GridCoord) = default;
};

struct Topology {
    TopologyKind kind = TopologyKind::ring;
    int rows = 1;  // P
    int cols = 1;  // Q

    static Topology ring() { return {TopologyKind::ring, 1, 1}; }
    static Topology torus(int rows, int cols) { return {TopologyKind::torus2d, rows, cols}; }
    static Topology grid(int rows, int cols) { return {TopologyKind::pq_grid, rows, cols}; }

    // Throws ConfigError if the dims do not cover `world_size` ranks.
    void validate(int world_size) const;
};

struct RingNeighbors {
    RankId prev;
    RankId next;
};

struct TorusNeighbors {
    RankId up;
    RankId down;
    RankId left;
    RankId right;
};

struct NeighborMap {
    GridCoord coord;  // (p, q); (0, r) on a ring
    RingNeighbors ring{};
    TorusNeighbors torus{};
};

// Row-major rank <-> coordinate mapping on a P x Q grid.
inline GridCoord grid_coord(RankId r, int cols) { return {r.index / cols, r.index % cols}; }
inline RankId grid_rank(GridCoord c, int cols) { return RankId(c.p * cols + c.q); }

RingNeighbors ring_neighbors(RankId self, int world_size);
TorusNeighbors torus_neighbors(RankId self, int rows, int cols);

NeighborMap topology_neighbors(const Topology& topo, RankId self, int world_size);

}  // namespace hpcc_mesh::transport
