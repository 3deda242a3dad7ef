// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <cmath>
#include <string>
#include <thread>

#include "hpcc_mesh/error.hpp"
#include "hpcc_mesh/transport.hpp"

namespace hpcc_mesh::transport {

std::string_view to_string(Backend b) {
    switch (b) {
        case Backend::concurrent: return "inproc";
        case Backend::virtual_time: return "virtual";
        case Backend::socket: return "tcp";
    }
    return "?";
}

Backend backend_from_string(std::string_view name) {
    if (name == "inproc" || name == "concurrent") return Backend::concurrent;
    if (name == "virtual" || name == "virtual_time") return Backend::virtual_time;
    if (name == "tcp" || name == "socket") return Backend::socket;
    throw ConfigError("unknown transport '" + std::string(name) + "'");
}

std::string_view to_string(ClockKind c) {
    return c == ClockKind::logical ? "logical" : "monotonic";
}

double LinkModel::occupancy(std::size_t bytes) const {
    const double len = static_cast<double>(bytes);
    if (staged) {
        return len / staged->write_bw + len / staged->host_net_bw + len / staged->read_bw;
    }
    const double beat = channels_per_pair * width;
    return std::ceil(len / beat) / frequency;
}

double LinkModel::transfer_time(std::size_t bytes) const {
    return occupancy(bytes) + (staged ? staged->host_net_latency : latency);
}

void LinkModel::validate() const {
    if (!(latency > 0) || !(width > 0) || !(frequency > 0) || channels_per_pair < 1) {
        throw ConfigError("link parameters must be strictly positive");
    }
    if (staged && (!(staged->write_bw > 0) || !(staged->read_bw > 0) ||
                   !(staged->host_net_bw > 0) || !(staged->host_net_latency > 0))) {
        throw ConfigError("staged link parameters must be strictly positive");
    }
}

Communicator::Communicator(RankId rank, int size, Backend backend)
    : rank_(rank), size_(size), backend_(backend) {
    if (size < 1) throw ConfigError("world size must be at least 1");
    if (rank.index < 0 || rank.index >= size) throw ConfigError("rank outside world");
}

void Communicator::check_peer(RankId peer) const {
    if (peer.index < 0 || peer.index >= size_) {
        throw TransportError("rank " + std::to_string(peer.index) + " is not reachable in a world of " +
                             std::to_string(size_));
    }
}

void Communicator::check_user_tag(Tag tag) {
    if (tag >= kReservedTagBase) throw TransportError("tag " + std::to_string(tag) + " is reserved");
}

void Communicator::send(RankId to, Tag tag, std::span<const std::byte> payload) {
    check_peer(to);
    check_user_tag(tag);
    do_send(to, tag, payload);
    counters_.bytes_sent += payload.size();
    counters_.messages_sent += 1;
    counters_.bytes_by_tag[tag] += payload.size();
    counters_.messages_by_tag[tag] += 1;
}

Bytes Communicator::recv(RankId from, Tag tag) {
    check_peer(from);
    check_user_tag(tag);
    return do_recv(from, tag);
}

bool Communicator::probe(RankId from, Tag tag) {
    check_peer(from);
    check_user_tag(tag);
    return do_probe(from, tag);
}

Bytes Communicator::sendrecv(RankId to, RankId from, Tag tag, std::span<const std::byte> payload) {
    // Every backend buffers sends on the receiving side, so posting the send
    // first cannot block on the peer's matching receive.
    send(to, tag, payload);
    return recv(from, tag);
}

void Communicator::send_internal(RankId to, Tag tag, std::span<const std::byte> payload) {
    check_peer(to);
    do_send(to, tag, payload);
}

Bytes Communicator::recv_internal(RankId from, Tag tag) {
    check_peer(from);
    return do_recv(from, tag);
}

void Communicator::barrier() { do_barrier(); }

double Communicator::now() { return do_now(); }

double Communicator::virtual_clock() {
    if (backend_ != Backend::virtual_time) {
        throw UnsupportedError("virtual_clock requires the virtual transport");
    }
    return do_now();
}

void Communicator::compute(double flops, double bytes) { do_compute(flops, bytes); }

void Communicator::advance(double seconds) {
    if (seconds > 0) do_advance(seconds);
}

void Communicator::do_advance(double seconds) {
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

}  // namespace hpcc_mesh::transport
