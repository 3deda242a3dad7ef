// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "hpcc_mesh/topology.hpp"

#include <string>

#include "hpcc_mesh/error.hpp"

namespace hpcc_mesh::transport {

std::string_view to_string(TopologyKind k) {
    switch (k) {
        case TopologyKind::ring: return "ring";
        case TopologyKind::torus2d: return "torus2d";
        case TopologyKind::pq_grid: return "pq_grid";
    }
    return "?";
}

TopologyKind topology_from_string(std::string_view name) {
    if (name == "ring") return TopologyKind::ring;
    if (name == "torus2d" || name == "torus") return TopologyKind::torus2d;
    if (name == "pq_grid" || name == "grid") return TopologyKind::pq_grid;
    throw ConfigError("unknown topology '" + std::string(name) + "'");
}

void Topology::validate(int world_size) const {
    if (world_size < 1) throw ConfigError("world size must be at least 1");
    if (kind == TopologyKind::ring) return;
    if (rows < 1 || cols < 1 || rows * cols != world_size) {
        throw ConfigError("topology " + std::to_string(rows) + "x" + std::to_string(cols) +
                          " does not match world size " + std::to_string(world_size));
    }
}

RingNeighbors ring_neighbors(RankId self, int world_size) {
    if (world_size < 1 || self.index < 0 || self.index >= world_size) {
        throw ConfigError("rank outside ring");
    }
    return {RankId((self.index + world_size - 1) % world_size),
            RankId((self.index + 1) % world_size)};
}

TorusNeighbors torus_neighbors(RankId self, int rows, int cols) {
    if (rows < 1 || cols < 1 || self.index < 0 || self.index >= rows * cols) {
        throw ConfigError("rank outside torus");
    }
    const GridCoord c = grid_coord(self, cols);
    return {grid_rank({(c.p + rows - 1) % rows, c.q}, cols),
            grid_rank({(c.p + 1) % rows, c.q}, cols),
            grid_rank({c.p, (c.q + cols - 1) % cols}, cols),
            grid_rank({c.p, (c.q + 1) % cols}, cols)};
}

NeighborMap topology_neighbors(const Topology& topo, RankId self, int world_size) {
    topo.validate(world_size);
    NeighborMap m;
    m.ring = ring_neighbors(self, world_size);
    if (topo.kind == TopologyKind::ring) {
        m.coord = {0, self.index};
        return m;
    }
    m.coord = grid_coord(self, topo.cols);
    m.torus = torus_neighbors(self, topo.rows, topo.cols);
    return m;
}

}  // namespace hpcc_mesh::transport
