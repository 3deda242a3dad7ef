// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "hpcc_mesh/transport.hpp"

// Untimed result-collection helpers built on point-to-point messages with
// reserved tags. They do not show up in the traffic counters.
namespace hpcc_mesh::transport {

// Root receives every rank's payload in rank order; others get {}.
std::vector<Bytes> gather(Communicator& comm, RankId root, const Bytes& payload);

// Root's payload replaces everyone else's.
void broadcast(Communicator& comm, RankId root, Bytes& payload);

// Every rank's value, in rank order, on every rank.
std::vector<double> allgather(Communicator& comm, double value);

double allreduce_max(Communicator& comm, double value);
double allreduce_sum(Communicator& comm, double value);

// Elementwise maximum; every rank must pass the same length.
std::vector<double> allreduce_max(Communicator& comm, const std::vector<double>& values);

}  // namespace hpcc_mesh::transport
