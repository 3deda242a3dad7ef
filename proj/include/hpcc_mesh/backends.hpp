// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hpcc_mesh/transport.hpp"

namespace hpcc_mesh::transport {

namespace detail {
class ConcurrentState;
class VirtualScheduler;
}  // namespace detail

// Ranks are threads of one process sharing a router.
class ConcurrentWorld {
public:
    explicit ConcurrentWorld(int world_size,
                             std::chrono::milliseconds timeout = std::chrono::seconds(120));
    ~ConcurrentWorld();

    int size() const { return size_; }
    std::unique_ptr<Communicator> communicator(RankId rank);

    // Fails every blocked and future operation with TransportError.
    void abort(const std::string& reason);

private:
    int size_;
    std::shared_ptr<detail::ConcurrentState> state_;
};

// Discrete-event world. Ranks run on their own threads but only one runs at
// a time; the scheduler always resumes the runnable rank with the smallest
// logical clock (ties by rank index), so runs are deterministic.
class VirtualWorld {
public:
    VirtualWorld(int world_size, VirtualParams params);
    ~VirtualWorld();

    int size() const { return size_; }
    const VirtualParams& params() const { return params_; }

    std::unique_ptr<Communicator> communicator(RankId rank);

    // Called on the rank's own thread before its first operation and after
    // its last one.
    void enter(RankId rank);
    void finish(RankId rank);

    void abort(const std::string& reason);

    // Final logical clock of each rank.
    std::vector<double> clocks() const;

private:
    int size_;
    VirtualParams params_;
    std::shared_ptr<detail::VirtualScheduler> sched_;
};

// Wire format: u64le payload_length | u32le tag | payload.
inline constexpr std::size_t kFrameHeaderSize = 12;
inline constexpr std::uint64_t kMaxFramePayload = std::uint64_t{1} << 31;

// Throws SizeError for payloads the wire format cannot carry.
void check_frame_size(std::uint64_t length);

std::array<std::byte, kFrameHeaderSize> encode_frame_header(std::uint64_t length, Tag tag);

struct FrameHeader {
    std::uint64_t length;
    Tag tag;
};
FrameHeader decode_frame_header(std::span<const std::byte, kFrameHeaderSize> raw);

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
};

Endpoint parse_endpoint(const std::string& text);

// Process-local end of the socket world. Construction performs the
// rendezvous: registers with the launcher at `rendezvous`, receives the port
// table, and connects the full mesh.
struct SocketSession;

class SocketWorker {
public:
    SocketWorker(const Endpoint& rendezvous, RankId rank, int world_size,
                 std::chrono::milliseconds timeout = std::chrono::seconds(120));
    ~SocketWorker();

    std::unique_ptr<Communicator> communicator();

    // Report the rank's serialized result (or failure) to the launcher.
    void report(bool ok, const Bytes& payload);

private:
    std::shared_ptr<SocketSession> session_;
};

// Launcher side of the rendezvous.
class SocketRendezvous {
public:
    explicit SocketRendezvous(const Endpoint& listen_on);
    ~SocketRendezvous();

    Endpoint endpoint() const;

    // Accept `world_size` registrations and distribute the port table.
    void establish(int world_size, std::chrono::milliseconds timeout);

    struct Report {
        bool ok = false;
        Bytes payload;
    };
    // One report per rank; a worker that disconnects without reporting
    // yields ok=false with an explanatory payload.
    std::vector<Report> collect(std::chrono::milliseconds timeout);

private:
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::string host_;
    std::vector<int> worker_fds_;
};

// Sends/receives one frame on a connected stream socket.
void write_frame(int fd, Tag tag, std::span<const std::byte> payload);
bool read_frame(int fd, Tag& tag, Bytes& payload);

}  // namespace hpcc_mesh::transport
