// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>

#include "hpcc_mesh/transport.hpp"

// Analytical performance predictors for the communication schemes. All
// functions are pure; sizes in bytes, times in seconds, rates per second.
namespace hpcc_mesh::netmodel {

struct ChannelParams {
    double latency = 520e-9;      // c_l
    double frequency = 156.25e6;  // c_f
    double width = 32.0;          // c_w, bytes
    int channels_per_pair = 2;    // c_n'
    int replications = 2;         // r

    static ChannelParams from_link(const transport::LinkModel& link, int replications = 2);
};

// latency + bytes / bandwidth. An infinite bandwidth makes the time
// size-independent.
struct AffineTime {
    double latency = 0;
    double bandwidth = std::numeric_limits<double>::infinity();

    double operator()(double bytes) const { return latency + bytes / bandwidth; }
};

// Device->host copy, host network exchange, host->device copy.
struct StagedParams {
    AffineTime pcie_write;
    AffineTime mpi;
    AffineTime pcie_read;

    static StagedParams from_link(const transport::StagedLink& link);
};

// 2L / (pcie_write(L) + mpi(L) + pcie_read(L))
double model_staged_bandwidth(std::uint64_t bytes, const StagedParams& p);

// Execution time of a send/receive kernel pair exchanging `messages`
// messages of `bytes` each: ceil(L / (c_n' c_w)) i / c_f + i c_l.
double model_channel_time(std::uint64_t bytes, std::uint64_t messages, const ChannelParams& p);

// Bandwidth of one kernel pair: 2L / model_channel_time(L, 1).
double model_channel_bandwidth(std::uint64_t bytes, const ChannelParams& p);

// Time for one transposed block of width b: t_mpi + 3 b^2 / (c_w c_f), with
// the channel width counted in values per beat.
double model_ptrans_block_time(std::uint64_t block_width, double values_per_beat, double frequency,
                               double t_mpi);

// Global memory bandwidth needed to keep r channels busy: 3 r c_w c_f.
double model_ptrans_memory_bandwidth(int replications, const ChannelParams& p);

// Network-bound transpose rate: ranks * r * (c_w / value_bytes) * c_f, one
// addition per transferred value.
double model_ptrans_peak_flops(int num_ranks, int replications, const ChannelParams& p,
                               double value_bytes = 4.0);

}  // namespace hpcc_mesh::netmodel
