// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "hpcc_mesh/collectives.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>

#include "hpcc_mesh/error.hpp"

namespace hpcc_mesh::transport {

namespace {
constexpr Tag kGatherTag = kReservedTagBase + 0x200;
constexpr Tag kBroadcastTag = kReservedTagBase + 0x201;
}  // namespace

std::vector<Bytes> gather(Communicator& comm, RankId root, const Bytes& payload) {
    if (comm.rank() != root) {
        comm.send_internal(root, kGatherTag, payload);
        return {};
    }
    std::vector<Bytes> out(static_cast<std::size_t>(comm.size()));
    for (int r = 0; r < comm.size(); ++r) {
        out[static_cast<std::size_t>(r)] = (r == root.index) ? payload : comm.recv_internal(RankId(r), kGatherTag);
    }
    return out;
}

void broadcast(Communicator& comm, RankId root, Bytes& payload) {
    if (comm.rank() == root) {
        for (int r = 0; r < comm.size(); ++r) {
            if (r != root.index) comm.send_internal(RankId(r), kBroadcastTag, payload);
        }
    } else {
        payload = comm.recv_internal(root, kBroadcastTag);
    }
}

std::vector<double> allgather(Communicator& comm, double value) {
    Bytes mine(sizeof(double));
    std::memcpy(mine.data(), &value, sizeof(double));
    const RankId root(0);
    auto parts = gather(comm, root, mine);
    Bytes all;
    if (comm.rank() == root) {
        for (const auto& p : parts) all.insert(all.end(), p.begin(), p.end());
    }
    broadcast(comm, root, all);
    return from_bytes<double>(all);
}

double allreduce_max(Communicator& comm, double value) {
    const auto all = allgather(comm, value);
    return *std::max_element(all.begin(), all.end());
}

double allreduce_sum(Communicator& comm, double value) {
    const auto all = allgather(comm, value);
    // Rank order, so every rank computes the same sum.
    return std::accumulate(all.begin(), all.end(), 0.0);
}

std::vector<double> allreduce_max(Communicator& comm, const std::vector<double>& values) {
    const RankId root(0);
    auto parts = gather(comm, root, Bytes(as_bytes_of(values).begin(), as_bytes_of(values).end()));
    Bytes reduced;
    if (comm.rank() == root) {
        std::vector<double> out = values;
        for (const auto& p : parts) {
            const auto v = from_bytes<double>(p);
            if (v.size() != out.size()) throw TransportError("allreduce_max: ranks disagree on vector length");
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], v[i]);
        }
        reduced.assign(as_bytes_of(out).begin(), as_bytes_of(out).end());
    }
    broadcast(comm, root, reduced);
    return from_bytes<double>(reduced);
}

}  // namespace hpcc_mesh::transport
