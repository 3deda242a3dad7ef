// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hpcc_mesh/timing.hpp"
#include "hpcc_mesh/transport.hpp"

namespace hpcc_mesh::randomaccess {

inline constexpr std::uint64_t kPoly = 0x7;
// Verification pass bound on the fraction of wrong table entries.
inline constexpr double kErrorThreshold = 0.01;

// (s << 1) ^ (msb(s) ? POLY : 0)
std::uint64_t lfsr_step(std::uint64_t s);

// Sequence value at `position`, starting from 1 at position 0, via 64x64
// GF(2) matrix powers.
std::uint64_t lfsr_skip(std::uint64_t position);

struct RaConfig {
    int table_log = 16;      // global table of 2^m words
    int rng_log = 2;         // K = 2^k lanes per rank
    int distance = 1;        // shift register slots between lanes
    int update_factor = 4;   // U = factor * table size
    int repetitions = 1;
    RepetitionHook on_repetition;

    std::uint64_t table_size() const { return std::uint64_t{1} << table_log; }
    int lanes() const { return 1 << rng_log; }
    std::uint64_t updates() const { return static_cast<std::uint64_t>(update_factor) * table_size(); }
    void validate(int world_size) const;
};

// One rank's lockstep sequencer: K lanes feed a shift register of K * D
// slots, lane i inserting at slot i * D; the last slot drains into the table.
class ShiftRegister {
public:
    ShiftRegister(int lanes, int distance, std::uint64_t updates, std::uint64_t local_begin,
                  std::uint64_t local_end, std::uint64_t table_size);

    // One clock: drain the last slot, shift, let every lane act once.
    // Returns the drained update, if any.
    std::optional<std::uint64_t> step();
    bool done() const;

    // Numbers each lane has consumed (inserted or filtered out).
    const std::vector<std::uint64_t>& consumed() const { return consumed_; }
    std::uint64_t stalls() const { return stalls_; }

private:
    struct Lane {
        std::uint64_t state;
        std::uint64_t remaining;
    };

    std::vector<Lane> lanes_;
    std::vector<std::optional<std::uint64_t>> slots_;
    std::size_t head_ = 0;  // physical index of logical slot 0
    int distance_;
    std::uint64_t local_begin_, local_end_, mask_;
    std::vector<std::uint64_t> consumed_;
    std::uint64_t stalls_ = 0;
    std::uint64_t in_flight_ = 0;
};

struct RaResult {
    std::vector<double> rep_time;
    std::vector<double> local_rep_time;
    double time = 0;
    std::uint64_t updates = 0;
    double gups = 0;  // updates / second / 1e9
    double error_ratio = 0;
    bool verify_ok = false;
    std::uint64_t applied = 0;                // this rank
    std::vector<std::uint64_t> lane_consumed;  // this rank
    std::vector<std::uint64_t> local_table;    // this rank's slice
};

// Scalar single-rank loop: table[i] = i, then for u in [0, U):
// v = value at position u + 1; table[v & (size - 1)] ^= v.
std::vector<std::uint64_t> reference_randomaccess(std::uint64_t table_size, std::uint64_t updates);

// Re-applies the whole sequence and returns mismatches / table size.
double verify_randomaccess(std::vector<std::uint64_t> table, std::uint64_t updates);

// Collective; world size must be a power of two. The table is gathered to
// rank 0 for verification and the ratio broadcast back.
RaResult run_randomaccess(transport::Communicator& comm, const RaConfig& cfg);

}  // namespace hpcc_mesh::randomaccess
