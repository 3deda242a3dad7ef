// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "hpcc_mesh/netmodel.hpp"

#include <cmath>
#include <string>

#include "hpcc_mesh/error.hpp"

namespace hpcc_mesh::netmodel {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
}

double beats(std::uint64_t bytes, const ChannelParams& p) {
    return std::ceil(static_cast<double>(bytes) / (p.channels_per_pair * p.width));
}

}  // namespace

ChannelParams ChannelParams::from_link(const transport::LinkModel& link, int replications) {
    return {link.latency, link.frequency, link.width, link.channels_per_pair, replications};
}

StagedParams StagedParams::from_link(const transport::StagedLink& link) {
    return {{0.0, link.write_bw}, {link.host_net_latency, link.host_net_bw}, {0.0, link.read_bw}};
}

double model_staged_bandwidth(std::uint64_t bytes, const StagedParams& p) {
    require(bytes >= 1, "message size must be at least 1 byte");
    const double len = static_cast<double>(bytes);
    return 2.0 * len / (p.pcie_write(len) + p.mpi(len) + p.pcie_read(len));
}

double model_channel_time(std::uint64_t bytes, std::uint64_t messages, const ChannelParams& p) {
    require(bytes >= 1, "message size must be at least 1 byte");
    require(messages >= 1, "message count must be at least 1");
    const double i = static_cast<double>(messages);
    return beats(bytes, p) * i / p.frequency + i * p.latency;
}

double model_channel_bandwidth(std::uint64_t bytes, const ChannelParams& p) {
    return 2.0 * static_cast<double>(bytes) / model_channel_time(bytes, 1, p);
}

double model_ptrans_block_time(std::uint64_t block_width, double values_per_beat, double frequency,
                               double t_mpi) {
    require(block_width >= 1, "block width must be at least 1");
    require(values_per_beat > 0 && frequency > 0, "channel width and frequency must be positive");
    const double b = static_cast<double>(block_width);
    return t_mpi + 3.0 * b * b / (values_per_beat * frequency);
}

double model_ptrans_memory_bandwidth(int replications, const ChannelParams& p) {
    require(replications >= 1, "replications must be at least 1");
    return 3.0 * replications * p.width * p.frequency;
}

double model_ptrans_peak_flops(int num_ranks, int replications, const ChannelParams& p, double value_bytes) {
    require(num_ranks >= 1, "rank count must be at least 1");
    require(replications >= 1, "replications must be at least 1");
    require(value_bytes > 0, "value size must be positive");
    return num_ranks * replications * (p.width / value_bytes) * p.frequency;
}

}  // namespace hpcc_mesh::netmodel
