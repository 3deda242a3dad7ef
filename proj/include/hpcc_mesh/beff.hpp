// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hpcc_mesh/timing.hpp"
#include "hpcc_mesh/transport.hpp"

namespace hpcc_mesh::beff {

enum class Mode { staged, direct };

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view name);

inline constexpr int kNumSizes = 21;

// 2^0 .. 2^20 bytes.
std::vector<std::size_t> message_sizes();

// max(1, 2^15 / L)
std::uint64_t default_iterations(std::size_t bytes);

struct BeffConfig {
    Mode mode = Mode::direct;
    int repetitions = 1;
    // 0 selects default_iterations for every size.
    std::uint64_t iterations_override = 0;
    RepetitionHook on_repetition;

    std::uint64_t iterations(std::size_t bytes) const;
    void validate() const;
};

struct SizeResult {
    std::size_t bytes = 0;
    std::uint64_t iterations = 0;
    // Aggregated bandwidth world * 2 * L * iterations / t_slowest per repetition.
    std::vector<double> rep_bandwidth;
    std::vector<double> rep_time;
    std::vector<double> local_rep_time;  // this rank
    double best_bandwidth = 0;
    double best_time = 0;
    bool valid = true;
};

struct BeffResult {
    int world_size = 0;
    Mode mode = Mode::direct;
    std::vector<SizeResult> sizes;
    // Mean over the 21 per-size maxima, aggregated over ranks.
    double effective_bandwidth = 0;
    bool validation_ok = true;
    std::string failure;

    // Per-rank (equivalently per kernel pair) view of a size's best bandwidth.
    double per_rank_bandwidth(std::size_t index) const { return sizes.at(index).best_bandwidth / world_size; }
};

// Every payload byte carries log2(L) mod 256.
std::byte fill_byte(std::size_t bytes);
bool payload_valid(std::span<const std::byte> payload, std::size_t bytes);

// Arithmetic mean of exactly kNumSizes values.
double effective_bandwidth(std::span<const double> per_size_best);

// Collective: every rank of `comm` calls it. Exchanges with both ring
// neighbors; world size 1 is allowed in staged mode only (self loop).
BeffResult run_beff(transport::Communicator& comm, const BeffConfig& cfg);

}  // namespace hpcc_mesh::beff
