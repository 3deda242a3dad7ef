// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "hpcc_mesh/beff.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <numeric>

#include "hpcc_mesh/collectives.hpp"
#include "hpcc_mesh/error.hpp"
#include "hpcc_mesh/topology.hpp"

namespace hpcc_mesh::beff {

using transport::Bytes;
using transport::Communicator;
using transport::Tag;

namespace {

// One tag per direction so the two exchanges use independent channels.
constexpr Tag kForwardTag = 0x100;
constexpr Tag kBackwardTag = 0x101;

// Smallest interval a monotonic clock can report; keeps rates finite.
constexpr double kMinInterval = 1e-9;

// Copy between "device" memory and the host staging buffer.
void stage_copy(Bytes& to, const Bytes& from) {
    to.resize(from.size());
    if (!from.empty()) std::memcpy(to.data(), from.data(), from.size());
}

}  // namespace

std::string_view to_string(Mode m) { return m == Mode::staged ? "staged" : "direct"; }

Mode mode_from_string(std::string_view name) {
    if (name == "staged") return Mode::staged;
    if (name == "direct") return Mode::direct;
    throw ConfigError("unknown mode '" + std::string(name) + "' (expected staged or direct)");
}

std::vector<std::size_t> message_sizes() {
    std::vector<std::size_t> out;
    for (int e = 0; e < kNumSizes; ++e) out.push_back(std::size_t{1} << e);
    return out;
}

std::uint64_t default_iterations(std::size_t bytes) {
    return std::max<std::uint64_t>(1, (std::uint64_t{1} << 15) / bytes);
}

std::uint64_t BeffConfig::iterations(std::size_t bytes) const {
    return iterations_override != 0 ? iterations_override : default_iterations(bytes);
}

void BeffConfig::validate() const {
    if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
}

std::byte fill_byte(std::size_t bytes) {
    return static_cast<std::byte>(std::bit_width(bytes) - 1);
}

bool payload_valid(std::span<const std::byte> payload, std::size_t bytes) {
    if (payload.size() != bytes) return false;
    const std::byte want = fill_byte(bytes);
    return std::all_of(payload.begin(), payload.end(), [&](std::byte b) { return b == want; });
}

double effective_bandwidth(std::span<const double> per_size_best) {
    if (per_size_best.size() != kNumSizes) {
        throw ConfigError("effective bandwidth needs " + std::to_string(kNumSizes) + " values, got " +
                          std::to_string(per_size_best.size()));
    }
    return std::accumulate(per_size_best.begin(), per_size_best.end(), 0.0) / kNumSizes;
}

BeffResult run_beff(Communicator& comm, const BeffConfig& cfg) {
    cfg.validate();
    const int world = comm.size();
    if (world < 2 && cfg.mode == Mode::direct) {
        throw ConfigError("direct mode needs at least 2 ranks; use staged mode on a single rank");
    }
    const auto nb = transport::ring_neighbors(comm.rank(), world);

    BeffResult result;
    result.world_size = world;
    result.mode = cfg.mode;

    for (std::size_t bytes : message_sizes()) {
        SizeResult sr;
        sr.bytes = bytes;
        sr.iterations = cfg.iterations(bytes);
        bool local_valid = true;

        for (int rep = 0; rep < cfg.repetitions; ++rep) {
            Bytes forward(bytes, fill_byte(bytes));
            Bytes backward(bytes, fill_byte(bytes));
            Bytes stage_f, stage_b;

            comm.barrier();
            const double t0 = comm.now();
            run_hook(cfg.on_repetition, comm, rep);
            for (std::uint64_t it = 0; it < sr.iterations; ++it) {
                if (cfg.mode == Mode::staged) {
                    stage_copy(stage_f, forward);
                    stage_copy(stage_b, backward);
                    comm.send(nb.next, kForwardTag, stage_f);
                    comm.send(nb.prev, kBackwardTag, stage_b);
                    stage_f = comm.recv(nb.prev, kForwardTag);
                    stage_b = comm.recv(nb.next, kBackwardTag);
                    stage_copy(forward, stage_f);
                    stage_copy(backward, stage_b);
                } else {
                    comm.send(nb.next, kForwardTag, forward);
                    comm.send(nb.prev, kBackwardTag, backward);
                    forward = comm.recv(nb.prev, kForwardTag);
                    backward = comm.recv(nb.next, kBackwardTag);
                }
            }
            const double elapsed = comm.now() - t0;
            local_valid = local_valid && payload_valid(forward, bytes) && payload_valid(backward, bytes);

            const double slowest = std::max(transport::allreduce_max(comm, elapsed), kMinInterval);
            sr.rep_time.push_back(slowest);
            sr.local_rep_time.push_back(elapsed);
            sr.rep_bandwidth.push_back(static_cast<double>(world) * 2.0 * static_cast<double>(bytes) *
                                       static_cast<double>(sr.iterations) / slowest);
        }

        sr.valid = transport::allreduce_max(comm, local_valid ? 0.0 : 1.0) == 0.0;
        const auto best = std::min_element(sr.rep_time.begin(), sr.rep_time.end()) - sr.rep_time.begin();
        sr.best_time = sr.rep_time[static_cast<std::size_t>(best)];
        sr.best_bandwidth = sr.rep_bandwidth[static_cast<std::size_t>(best)];
        if (!sr.valid && result.validation_ok) {
            result.validation_ok = false;
            result.failure = "payload validation failed for message size " + std::to_string(bytes);
        }
        result.sizes.push_back(std::move(sr));
    }

    std::vector<double> best;
    for (const auto& sr : result.sizes) best.push_back(sr.best_bandwidth);
    result.effective_bandwidth = effective_bandwidth(best);
    return result;
}

}  // namespace hpcc_mesh::beff
