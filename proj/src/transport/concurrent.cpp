// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <condition_variable>
#include <mutex>

#include "hpcc_mesh/backends.hpp"
#include "hpcc_mesh/error.hpp"
#include "mailbox.hpp"

namespace hpcc_mesh::transport {

namespace detail {

class ConcurrentState {
public:
    ConcurrentState(int size, std::chrono::milliseconds timeout)
        : mailboxes(static_cast<std::size_t>(size)), timeout(timeout), size_(size) {}

    void barrier() {
        std::unique_lock lock(mu_);
        if (aborted_) throw TransportError(abort_reason_);
        const std::uint64_t gen = generation_;
        if (++arrived_ == size_) {
            arrived_ = 0;
            ++generation_;
            cv_.notify_all();
            return;
        }
        const bool released = cv_.wait_for(lock, timeout, [&] { return generation_ != gen || aborted_; });
        if (aborted_) throw TransportError(abort_reason_);
        if (!released) throw TimeoutError("barrier timed out; a rank did not arrive");
    }

    void abort(const std::string& reason) {
        {
            std::lock_guard lock(mu_);
            if (!aborted_) {
                aborted_ = true;
                abort_reason_ = reason;
            }
        }
        cv_.notify_all();
        for (auto& m : mailboxes) m.abort(reason);
    }

    std::vector<Mailbox> mailboxes;
    std::chrono::milliseconds timeout;

private:
    int size_;
    std::mutex mu_;
    std::condition_variable cv_;
    int arrived_ = 0;
    std::uint64_t generation_ = 0;
    bool aborted_ = false;
    std::string abort_reason_;
};

}  // namespace detail

namespace {

class ConcurrentCommunicator final : public Communicator {
public:
    ConcurrentCommunicator(std::shared_ptr<detail::ConcurrentState> state, RankId rank, int size)
        : Communicator(rank, size, Backend::concurrent), state_(std::move(state)) {}

protected:
    void do_send(RankId to, Tag tag, std::span<const std::byte> payload) override {
        state_->mailboxes[static_cast<std::size_t>(to.index)].push(rank().index, tag,
                                                                   Bytes(payload.begin(), payload.end()));
    }

    Bytes do_recv(RankId from, Tag tag) override {
        return own().pop(from.index, tag, state_->timeout);
    }

    bool do_probe(RankId from, Tag tag) override { return own().contains(from.index, tag); }

    void do_barrier() override { state_->barrier(); }

    double do_now() override {
        return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
    }

private:
    detail::Mailbox& own() { return state_->mailboxes[static_cast<std::size_t>(rank().index)]; }

    std::shared_ptr<detail::ConcurrentState> state_;
};

}  // namespace

ConcurrentWorld::ConcurrentWorld(int world_size, std::chrono::milliseconds timeout)
    : size_(world_size) {
    if (world_size < 1) throw ConfigError("world size must be at least 1");
    state_ = std::make_shared<detail::ConcurrentState>(world_size, timeout);
}

ConcurrentWorld::~ConcurrentWorld() = default;

std::unique_ptr<Communicator> ConcurrentWorld::communicator(RankId rank) {
    return std::make_unique<ConcurrentCommunicator>(state_, rank, size_);
}

void ConcurrentWorld::abort(const std::string& reason) { state_->abort(reason); }

}  // namespace hpcc_mesh::transport
