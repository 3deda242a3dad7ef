// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>
#include <string>
#include <thread>

#include "hpcc_mesh/backends.hpp"
#include "hpcc_mesh/error.hpp"
#include "mailbox.hpp"

namespace hpcc_mesh::transport {

namespace {

constexpr Tag kHelloTag = kReservedTagBase + 0x100;
constexpr Tag kTableTag = kReservedTagBase + 0x101;
constexpr Tag kResultTag = kReservedTagBase + 0x102;
constexpr Tag kFailureTag = kReservedTagBase + 0x103;
constexpr Tag kBarrierTag = kReservedTagBase + 0x104;

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

void write_all(int fd, const std::byte* data, std::size_t len) {
    while (len > 0) {
        const ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError(errno_text("send"));
        }
        data += n;
        len -= static_cast<std::size_t>(n);
    }
}

// False on orderly EOF before the first byte.
bool read_all(int fd, std::byte* data, std::size_t len) {
    std::size_t got = 0;
    while (got < len) {
        const ssize_t n = ::recv(fd, data + got, len - got, 0);
        if (n == 0) {
            if (got == 0) return false;
            throw TransportError("connection closed mid-frame");
        }
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError(errno_text("recv"));
        }
        got += static_cast<std::size_t>(n);
    }
    return true;
}

void put_le(std::byte* out, std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out[i] = static_cast<std::byte>((v >> (8 * i)) & 0xFF);
}

std::uint64_t get_le(const std::byte* in, int width) {
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
    return v;
}

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    const std::string h = (host == "localhost") ? "127.0.0.1" : host;
    if (::inet_pton(AF_INET, h.c_str(), &addr.sin_addr) != 1) {
        throw ConfigError("not an IPv4 address: " + host);
    }
    return addr;
}

int listen_on(const std::string& host, std::uint16_t port, int backlog, std::uint16_t& bound_port) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw TransportError(errno_text("socket"));
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr = make_addr(host, port);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(fd, backlog) != 0) {
        const std::string msg = errno_text("bind/listen");
        ::close(fd);
        throw TransportError(msg);
    }
    socklen_t len = sizeof(addr);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    bound_port = ntohs(addr.sin_port);
    return fd;
}

void set_nodelay(int fd) {
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

int connect_to(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
        const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) throw TransportError(errno_text("socket"));
        sockaddr_in addr = make_addr(host, port);
        if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) {
            set_nodelay(fd);
            return fd;
        }
        const std::string msg = errno_text("connect");
        ::close(fd);
        if (std::chrono::steady_clock::now() > deadline) throw TimeoutError(msg);
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
}

int accept_with_timeout(int listen_fd, std::chrono::milliseconds timeout) {
    pollfd p{listen_fd, POLLIN, 0};
    for (;;) {
        const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
        if (rc < 0 && errno == EINTR) continue;
        if (rc == 0) throw TimeoutError("rendezvous accept timed out");
        if (rc < 0) throw TransportError(errno_text("poll"));
        break;
    }
    const int fd = ::accept(listen_fd, nullptr, nullptr);
    if (fd < 0) throw TransportError(errno_text("accept"));
    set_nodelay(fd);
    return fd;
}

void set_recv_timeout(int fd, std::chrono::milliseconds timeout) {
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
}

}  // namespace

std::array<std::byte, kFrameHeaderSize> encode_frame_header(std::uint64_t length, Tag tag) {
    std::array<std::byte, kFrameHeaderSize> h{};
    put_le(h.data(), length, 8);
    put_le(h.data() + 8, tag, 4);
    return h;
}

FrameHeader decode_frame_header(std::span<const std::byte, kFrameHeaderSize> raw) {
    return {get_le(raw.data(), 8), static_cast<Tag>(get_le(raw.data() + 8, 4))};
}

Endpoint parse_endpoint(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos) throw ConfigError("endpoint must be host:port, got '" + text + "'");
    Endpoint e;
    e.host = text.substr(0, colon);
    const std::string port = text.substr(colon + 1);
    try {
        const unsigned long v = std::stoul(port);
        if (v > 65535) throw std::out_of_range("port");
        e.port = static_cast<std::uint16_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("bad port in endpoint '" + text + "'");
    }
    return e;
}

void check_frame_size(std::uint64_t length) {
    if (length > kMaxFramePayload) {
        throw SizeError("frame payload of " + std::to_string(length) + " bytes exceeds 2^31");
    }
}

void write_frame(int fd, Tag tag, std::span<const std::byte> payload) {
    check_frame_size(payload.size());
    const auto header = encode_frame_header(payload.size(), tag);
    write_all(fd, header.data(), header.size());
    if (!payload.empty()) write_all(fd, payload.data(), payload.size());
}

bool read_frame(int fd, Tag& tag, Bytes& payload) {
    std::array<std::byte, kFrameHeaderSize> raw{};
    if (!read_all(fd, raw.data(), raw.size())) return false;
    const FrameHeader h = decode_frame_header(raw);
    check_frame_size(h.length);
    tag = h.tag;
    payload.resize(h.length);
    if (h.length > 0 && !read_all(fd, payload.data(), payload.size())) {
        throw TransportError("connection closed mid-frame");
    }
    return true;
}

struct SocketSession {
    int rank = 0;
    int size = 1;
    std::chrono::milliseconds timeout{};
    int rendezvous_fd = -1;
    std::vector<int> peer_fds;
    std::vector<std::thread> readers;
    detail::Mailbox mailbox;
    std::mutex write_mu;
    bool shut = false;

    ~SocketSession() { shutdown(); }

    void start_readers() {
        for (int peer = 0; peer < size; ++peer) {
            const int fd = peer_fds[static_cast<std::size_t>(peer)];
            if (fd < 0) continue;
            readers.emplace_back([this, fd, peer] {
                try {
                    Tag tag = 0;
                    Bytes payload;
                    while (read_frame(fd, tag, payload)) mailbox.push(peer, tag, std::move(payload));
                    mailbox.close_sender(peer, "connection closed");
                } catch (const std::exception& e) {
                    mailbox.close_sender(peer, e.what());
                }
            });
        }
    }

    void shutdown() {
        if (shut) return;
        shut = true;
        for (int fd : peer_fds) {
            if (fd >= 0) ::shutdown(fd, SHUT_WR);
        }
        for (auto& t : readers) t.join();
        for (int fd : peer_fds) {
            if (fd >= 0) ::close(fd);
        }
        if (rendezvous_fd >= 0) ::close(rendezvous_fd);
    }
};

namespace {

class SocketCommunicator final : public Communicator {
public:
    SocketCommunicator(std::shared_ptr<SocketSession> s)
        : Communicator(RankId(s->rank), s->size, Backend::socket), s_(std::move(s)) {}

protected:
    void do_send(RankId to, Tag tag, std::span<const std::byte> payload) override {
        check_frame_size(payload.size());
        if (to.index == rank().index) {
            s_->mailbox.push(to.index, tag, Bytes(payload.begin(), payload.end()));
            return;
        }
        std::lock_guard lock(s_->write_mu);
        write_frame(s_->peer_fds[static_cast<std::size_t>(to.index)], tag, payload);
    }

    Bytes do_recv(RankId from, Tag tag) override { return s_->mailbox.pop(from.index, tag, s_->timeout); }

    bool do_probe(RankId from, Tag tag) override { return s_->mailbox.contains(from.index, tag); }

    void do_barrier() override {
        const RankId root(0);
        if (rank() == root) {
            for (int r = 1; r < size(); ++r) recv_internal(RankId(r), kBarrierTag);
            for (int r = 1; r < size(); ++r) send_internal(RankId(r), kBarrierTag, {});
        } else {
            send_internal(root, kBarrierTag, {});
            recv_internal(root, kBarrierTag);
        }
    }

    double do_now() override {
        return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
    }

private:
    std::shared_ptr<SocketSession> s_;
};

}  // namespace

SocketWorker::SocketWorker(const Endpoint& rendezvous, RankId rank, int world_size,
                           std::chrono::milliseconds timeout)
    : session_(std::make_shared<SocketSession>()) {
    auto& s = *session_;
    s.rank = rank.index;
    s.size = world_size;
    s.timeout = timeout;
    s.peer_fds.assign(static_cast<std::size_t>(world_size), -1);

    std::uint16_t my_port = 0;
    const int listen_fd = listen_on(rendezvous.host, 0, world_size + 1, my_port);
    try {
        s.rendezvous_fd = connect_to(rendezvous.host, rendezvous.port, timeout);
        std::array<std::byte, 6> hello{};
        put_le(hello.data(), static_cast<std::uint64_t>(rank.index), 4);
        put_le(hello.data() + 4, my_port, 2);
        write_frame(s.rendezvous_fd, kHelloTag, hello);

        set_recv_timeout(s.rendezvous_fd, timeout);
        Tag tag = 0;
        Bytes table;
        if (!read_frame(s.rendezvous_fd, tag, table) || tag != kTableTag ||
            table.size() != static_cast<std::size_t>(world_size) * 2) {
            throw TransportError("rendezvous did not deliver a port table");
        }
        set_recv_timeout(s.rendezvous_fd, std::chrono::milliseconds(0));

        for (int peer = 0; peer < rank.index; ++peer) {
            const auto port = static_cast<std::uint16_t>(get_le(table.data() + 2 * peer, 2));
            const int fd = connect_to(rendezvous.host, port, timeout);
            std::array<std::byte, 4> id{};
            put_le(id.data(), static_cast<std::uint64_t>(rank.index), 4);
            write_all(fd, id.data(), id.size());
            s.peer_fds[static_cast<std::size_t>(peer)] = fd;
        }
        for (int n = rank.index + 1; n < world_size; ++n) {
            const int fd = accept_with_timeout(listen_fd, timeout);
            std::array<std::byte, 4> id{};
            if (!read_all(fd, id.data(), id.size())) throw TransportError("peer closed during handshake");
            const auto peer = static_cast<int>(get_le(id.data(), 4));
            if (peer <= rank.index || peer >= world_size || s.peer_fds[static_cast<std::size_t>(peer)] >= 0) {
                ::close(fd);
                throw TransportError("unexpected handshake from rank " + std::to_string(peer));
            }
            s.peer_fds[static_cast<std::size_t>(peer)] = fd;
        }
    } catch (...) {
        ::close(listen_fd);
        throw;
    }
    ::close(listen_fd);
    s.start_readers();
}

SocketWorker::~SocketWorker() = default;

std::unique_ptr<Communicator> SocketWorker::communicator() {
    return std::make_unique<SocketCommunicator>(session_);
}

void SocketWorker::report(bool ok, const Bytes& payload) {
    write_frame(session_->rendezvous_fd, ok ? kResultTag : kFailureTag, payload);
}

SocketRendezvous::SocketRendezvous(const Endpoint& listen_on_endpoint) : host_(listen_on_endpoint.host) {
    listen_fd_ = listen_on(listen_on_endpoint.host, listen_on_endpoint.port, 128, port_);
}

SocketRendezvous::~SocketRendezvous() {
    for (int fd : worker_fds_) {
        if (fd >= 0) ::close(fd);
    }
    if (listen_fd_ >= 0) ::close(listen_fd_);
}

Endpoint SocketRendezvous::endpoint() const { return {host_, port_}; }

void SocketRendezvous::establish(int world_size, std::chrono::milliseconds timeout) {
    worker_fds_.assign(static_cast<std::size_t>(world_size), -1);
    std::vector<std::uint16_t> ports(static_cast<std::size_t>(world_size), 0);
    for (int n = 0; n < world_size; ++n) {
        const int fd = accept_with_timeout(listen_fd_, timeout);
        set_recv_timeout(fd, timeout);
        Tag tag = 0;
        Bytes hello;
        if (!read_frame(fd, tag, hello) || tag != kHelloTag || hello.size() != 6) {
            ::close(fd);
            throw TransportError("malformed rendezvous registration");
        }
        const auto rank = static_cast<int>(get_le(hello.data(), 4));
        if (rank < 0 || rank >= world_size || worker_fds_[static_cast<std::size_t>(rank)] >= 0) {
            ::close(fd);
            throw TransportError("duplicate or out-of-range rank " + std::to_string(rank) + " at rendezvous");
        }
        worker_fds_[static_cast<std::size_t>(rank)] = fd;
        ports[static_cast<std::size_t>(rank)] = static_cast<std::uint16_t>(get_le(hello.data() + 4, 2));
    }
    Bytes table(ports.size() * 2);
    for (std::size_t r = 0; r < ports.size(); ++r) put_le(table.data() + 2 * r, ports[r], 2);
    for (int fd : worker_fds_) write_frame(fd, kTableTag, table);
}

std::vector<SocketRendezvous::Report> SocketRendezvous::collect(std::chrono::milliseconds timeout) {
    std::vector<Report> out(worker_fds_.size());
    for (std::size_t r = 0; r < worker_fds_.size(); ++r) {
        const int fd = worker_fds_[r];
        auto fail = [&](const std::string& why) {
            out[r].ok = false;
            out[r].payload.clear();
            for (char c : why) out[r].payload.push_back(static_cast<std::byte>(c));
        };
        try {
            set_recv_timeout(fd, timeout);
            Tag tag = 0;
            Bytes payload;
            if (!read_frame(fd, tag, payload)) {
                fail("rank " + std::to_string(r) + " exited without reporting");
            } else if (tag == kResultTag || tag == kFailureTag) {
                out[r].ok = (tag == kResultTag);
                out[r].payload = std::move(payload);
            } else {
                fail("rank " + std::to_string(r) + " sent an unexpected frame");
            }
        } catch (const std::exception& e) {
            fail("rank " + std::to_string(r) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace hpcc_mesh::transport
