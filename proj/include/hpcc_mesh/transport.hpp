// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hpcc_mesh::transport {

using Bytes = std::vector<std::byte>;
using Tag = std::uint32_t;

// Tags at or above this value are used by the transport itself (barrier,
// result gathering). Benchmarks must stay below it.
inline constexpr Tag kReservedTagBase = 0xF0000000u;

struct RankId {
    int index = 0;

    constexpr RankId() = default;
    constexpr explicit RankId(int i) : index(i) {}
    friend constexpr auto operator<=>(RankId, RankId) = default;
};

enum class Backend { concurrent, virtual_time, socket };

std::string_view to_string(Backend b);
Backend backend_from_string(std::string_view name);

enum class ClockKind { monotonic, logical };

std::string_view to_string(ClockKind c);

// Host-side staged path: device->host copy, host network exchange,
// host->device copy. Bandwidths in bytes/s, latency in seconds.
struct StagedLink {
    double write_bw = 11.2e9;
    double read_bw = 11.2e9;
    double host_net_bw = 12.5e9;
    double host_net_latency = 1e-6;
};

// Point-to-point channel characteristics. Defaults are the serial channel
// IP of the BittWare 520N board.
struct LinkModel {
    double latency = 520e-9;      // seconds
    double width = 32.0;          // bytes per beat
    double frequency = 156.25e6;  // beats per second
    int channels_per_pair = 2;
    std::optional<StagedLink> staged;

    // Bytes per second of one channel group (c_n' * c_w * c_f).
    double channel_bandwidth() const { return channels_per_pair * width * frequency; }

    // Link occupancy of one message (excludes latency).
    double occupancy(std::size_t bytes) const;

    // send clock -> arrival clock offset on an idle link.
    double transfer_time(std::size_t bytes) const;

    void validate() const;
};

// Cost model for the discrete-event backend. Compute charges are
// max(flops / flop_rate, bytes / memory_bandwidth); a rate of 0 makes that
// term free.
struct VirtualParams {
    LinkModel link;
    double flop_rate = 1e11;
    double memory_bandwidth = 5e10;
};

struct TrafficCounters {
    std::uint64_t bytes_sent = 0;
    std::uint64_t messages_sent = 0;
    std::unordered_map<Tag, std::uint64_t> bytes_by_tag;
    std::unordered_map<Tag, std::uint64_t> messages_by_tag;
};

// A rank's handle onto the message-passing world. Confined to the thread
// that runs the rank.
class Communicator {
public:
    virtual ~Communicator() = default;

    Communicator(const Communicator&) = delete;
    Communicator& operator=(const Communicator&) = delete;

    RankId rank() const { return rank_; }
    int size() const { return size_; }
    Backend backend() const { return backend_; }
    ClockKind clock_kind() const {
        return backend_ == Backend::virtual_time ? ClockKind::logical : ClockKind::monotonic;
    }

    void send(RankId to, Tag tag, std::span<const std::byte> payload);
    Bytes recv(RankId from, Tag tag);

    // True if a message from `from` with `tag` can be received without
    // blocking.
    bool probe(RankId from, Tag tag);

    // Send to `to` and receive from `from` without deadlocking when the
    // peers do the same.
    Bytes sendrecv(RankId to, RankId from, Tag tag, std::span<const std::byte> payload);

    void barrier();

    // Seconds. Monotonic wall clock, or the rank's logical clock.
    double now();

    // Logical clock; throws UnsupportedError on real backends.
    double virtual_clock();

    // Charge local work. Advances the logical clock on the virtual backend,
    // no-op elsewhere (the work itself costs wall time there).
    void compute(double flops, double bytes);

    // Inject a delay: logical on the virtual backend, a sleep elsewhere.
    void advance(double seconds);

    const TrafficCounters& counters() const { return counters_; }
    void reset_counters() { counters_ = {}; }

    // Transport-internal traffic (reserved tags) bypasses the counters.
    void send_internal(RankId to, Tag tag, std::span<const std::byte> payload);
    Bytes recv_internal(RankId from, Tag tag);

protected:
    Communicator(RankId rank, int size, Backend backend);

    virtual void do_send(RankId to, Tag tag, std::span<const std::byte> payload) = 0;
    virtual Bytes do_recv(RankId from, Tag tag) = 0;
    virtual bool do_probe(RankId from, Tag tag) = 0;
    virtual void do_barrier() = 0;
    virtual double do_now() = 0;
    virtual void do_compute(double /*flops*/, double /*bytes*/) {}
    virtual void do_advance(double seconds);

private:
    void check_peer(RankId peer) const;
    static void check_user_tag(Tag tag);

    RankId rank_;
    int size_;
    Backend backend_;
    TrafficCounters counters_;
};

template <class T>
std::span<const std::byte> as_bytes_of(const std::vector<T>& v) {
    return std::as_bytes(std::span<const T>(v));
}

template <class T>
std::vector<T> from_bytes(const Bytes& b) {
    std::vector<T> out(b.size() / sizeof(T));
    if (!out.empty()) std::memcpy(out.data(), b.data(), out.size() * sizeof(T));
    return out;
}

}  // namespace hpcc_mesh::transport
