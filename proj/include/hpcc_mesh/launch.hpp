// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpcc_mesh/backends.hpp"
#include "hpcc_mesh/transport.hpp"

namespace hpcc_mesh::transport {

struct LaunchOptions {
    Backend backend = Backend::concurrent;
    int world_size = 1;
    VirtualParams virtual_params;
    Endpoint rendezvous;
    std::chrono::milliseconds timeout = std::chrono::seconds(120);
};

struct RankOutcome {
    bool ok = false;
    nlohmann::json value;
    std::string error;
};

struct LaunchResult {
    std::vector<RankOutcome> ranks;
    // Logical clock of each rank at exit (virtual backend only).
    std::vector<double> final_clocks;

    bool ok() const;
    // The root cause: the first failure that is not a consequence of
    // another rank aborting the world.
    std::string first_error() const;
};

// The code one rank runs. The returned JSON is shipped back to the launcher
// (as CBOR across process boundaries on the socket backend).
using RankProgram = std::function<nlohmann::json(Communicator&)>;

// Spawns `world_size` ranks on the selected backend and runs `program` on
// each: threads for the in-process backends, forked worker processes
// connected over localhost TCP for the socket backend.
LaunchResult launch_ranks(const LaunchOptions& options, const RankProgram& program);

}  // namespace hpcc_mesh::transport
