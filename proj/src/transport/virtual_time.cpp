// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <tuple>

#include "hpcc_mesh/backends.hpp"
#include "hpcc_mesh/error.hpp"

namespace hpcc_mesh::transport {

namespace detail {

class VirtualScheduler {
public:
    VirtualScheduler(int size, VirtualParams params)
        : params_(std::move(params)), ranks_(static_cast<std::size_t>(size)) {
        // Every rank starts runnable at clock 0; rank 0 has the smallest key.
        current_ = 0;
    }

    void enter(int r) {
        std::unique_lock lock(mu_);
        wait_turn(r, lock);
    }

    void finish(int r) {
        std::unique_lock lock(mu_);
        ranks_[idx(r)].status = Status::done;
        if (current_ == r) schedule();
    }

    void send(int from, int to, Tag tag, std::span<const std::byte> payload) {
        std::unique_lock lock(mu_);
        check_aborted();
        auto& self = ranks_[idx(from)];
        double arrival = self.clock;
        if (to != from) {
            // A (sender, receiver, tag) triple is one directed channel group;
            // its two directions and distinct tags never contend.
            double& busy = link_busy_[{from, to, tag}];
            const double start = std::max(self.clock, busy);
            const double occupancy = params_.link.occupancy(payload.size());
            busy = start + occupancy;
            arrival = start + params_.link.transfer_time(payload.size());
        }
        auto& dst = ranks_[idx(to)];
        dst.inbox[{from, tag}].push_back({arrival, Bytes(payload.begin(), payload.end())});
        if (dst.status == Status::blocked_recv && dst.wait_from == from && dst.wait_tag == tag) {
            dst.status = Status::runnable;
            dst.clock = std::max(dst.clock, dst.inbox[{from, tag}].front().arrival);
        }
    }

    Bytes recv(int r, int from, Tag tag) {
        std::unique_lock lock(mu_);
        check_aborted();
        auto& self = ranks_[idx(r)];
        auto q = self.inbox.find({from, tag});
        if (q == self.inbox.end() || q->second.empty()) {
            self.status = Status::blocked_recv;
            self.wait_from = from;
            self.wait_tag = tag;
            schedule();
            wait_turn(r, lock);
            q = self.inbox.find({from, tag});
        }
        InFlight msg = std::move(q->second.front());
        q->second.pop_front();
        if (q->second.empty()) self.inbox.erase(q);
        self.clock = std::max(self.clock, msg.arrival);
        return std::move(msg.payload);
    }

    bool probe(int r, int from, Tag tag) {
        std::unique_lock lock(mu_);
        check_aborted();
        // Let every rank that is behind us catch up, so any message that can
        // arrive before our clock has been sent.
        schedule();
        wait_turn(r, lock);
        auto& self = ranks_[idx(r)];
        auto q = self.inbox.find({from, tag});
        return q != self.inbox.end() && !q->second.empty() && q->second.front().arrival <= self.clock;
    }

    void barrier(int r) {
        std::unique_lock lock(mu_);
        check_aborted();
        auto& self = ranks_[idx(r)];
        self.status = Status::blocked_barrier;
        barrier_max_ = std::max(barrier_max_, self.clock);
        if (++barrier_count_ == static_cast<int>(ranks_.size())) {
            for (auto& rs : ranks_) {
                rs.status = Status::runnable;
                rs.clock = barrier_max_;
            }
            barrier_count_ = 0;
            barrier_max_ = 0;
            return;
        }
        schedule();
        wait_turn(r, lock);
    }

    double clock(int r) {
        std::lock_guard lock(mu_);
        return ranks_[idx(r)].clock;
    }

    void add_time(int r, double seconds) {
        std::lock_guard lock(mu_);
        ranks_[idx(r)].clock += seconds;
    }

    void abort(const std::string& reason) {
        std::lock_guard lock(mu_);
        abort_locked(reason);
    }

    std::vector<double> clocks() {
        std::lock_guard lock(mu_);
        std::vector<double> out;
        for (auto& rs : ranks_) out.push_back(rs.clock);
        return out;
    }

    const VirtualParams& params() const { return params_; }

private:
    enum class Status { runnable, blocked_recv, blocked_barrier, done };

    struct InFlight {
        double arrival;
        Bytes payload;
    };

    struct RankState {
        double clock = 0;
        Status status = Status::runnable;
        int wait_from = -1;
        Tag wait_tag = 0;
        std::map<std::pair<int, Tag>, std::deque<InFlight>> inbox;
        std::condition_variable cv;
    };

    static std::size_t idx(int r) { return static_cast<std::size_t>(r); }

    void check_aborted() const {
        if (aborted_) throw TransportError(abort_reason_);
    }

    // Hand the processor to the runnable rank with the smallest clock.
    void schedule() {
        int best = -1;
        for (int r = 0; r < static_cast<int>(ranks_.size()); ++r) {
            const auto& rs = ranks_[idx(r)];
            if (rs.status != Status::runnable) continue;
            if (best < 0 || rs.clock < ranks_[idx(best)].clock) best = r;
        }
        if (best >= 0) {
            current_ = best;
            ranks_[idx(best)].cv.notify_one();
            return;
        }
        current_ = -1;
        const bool all_done = std::all_of(ranks_.begin(), ranks_.end(),
                                          [](const RankState& rs) { return rs.status == Status::done; });
        if (!all_done) abort_locked(describe_deadlock());
    }

    std::string describe_deadlock() const {
        std::string msg = "virtual transport deadlock:";
        for (std::size_t r = 0; r < ranks_.size(); ++r) {
            const auto& rs = ranks_[r];
            msg += " rank " + std::to_string(r);
            switch (rs.status) {
                case Status::blocked_recv:
                    msg += " waits for (" + std::to_string(rs.wait_from) + ", tag " + std::to_string(rs.wait_tag) +
                           ");";
                    break;
                case Status::blocked_barrier: msg += " waits in barrier;"; break;
                case Status::done: msg += " finished;"; break;
                case Status::runnable: msg += " runnable;"; break;
            }
        }
        return msg;
    }

    void wait_turn(int r, std::unique_lock<std::mutex>& lock) {
        ranks_[idx(r)].cv.wait(lock, [&] { return current_ == r || aborted_; });
        check_aborted();
    }

    void abort_locked(const std::string& reason) {
        if (!aborted_) {
            aborted_ = true;
            abort_reason_ = reason;
        }
        for (auto& rs : ranks_) rs.cv.notify_all();
    }

    VirtualParams params_;
    std::mutex mu_;
    std::vector<RankState> ranks_;
    std::map<std::tuple<int, int, Tag>, double> link_busy_;
    int current_ = -1;
    int barrier_count_ = 0;
    double barrier_max_ = 0;
    bool aborted_ = false;
    std::string abort_reason_;
};

}  // namespace detail

namespace {

class VirtualCommunicator final : public Communicator {
public:
    VirtualCommunicator(std::shared_ptr<detail::VirtualScheduler> sched, RankId rank, int size)
        : Communicator(rank, size, Backend::virtual_time), sched_(std::move(sched)) {}

protected:
    void do_send(RankId to, Tag tag, std::span<const std::byte> payload) override {
        sched_->send(rank().index, to.index, tag, payload);
    }
    Bytes do_recv(RankId from, Tag tag) override { return sched_->recv(rank().index, from.index, tag); }
    bool do_probe(RankId from, Tag tag) override { return sched_->probe(rank().index, from.index, tag); }
    void do_barrier() override { sched_->barrier(rank().index); }
    double do_now() override { return sched_->clock(rank().index); }

    void do_compute(double flops, double bytes) override {
        const auto& p = sched_->params();
        double t = 0;
        if (p.flop_rate > 0) t = std::max(t, flops / p.flop_rate);
        if (p.memory_bandwidth > 0) t = std::max(t, bytes / p.memory_bandwidth);
        if (t > 0) sched_->add_time(rank().index, t);
    }

    void do_advance(double seconds) override { sched_->add_time(rank().index, seconds); }

private:
    std::shared_ptr<detail::VirtualScheduler> sched_;
};

}  // namespace

VirtualWorld::VirtualWorld(int world_size, VirtualParams params) : size_(world_size), params_(params) {
    if (world_size < 1) throw ConfigError("world size must be at least 1");
    params_.link.validate();
    sched_ = std::make_shared<detail::VirtualScheduler>(world_size, params_);
}

VirtualWorld::~VirtualWorld() = default;

std::unique_ptr<Communicator> VirtualWorld::communicator(RankId rank) {
    return std::make_unique<VirtualCommunicator>(sched_, rank, size_);
}

void VirtualWorld::enter(RankId rank) { sched_->enter(rank.index); }
void VirtualWorld::finish(RankId rank) { sched_->finish(rank.index); }
void VirtualWorld::abort(const std::string& reason) { sched_->abort(reason); }
std::vector<double> VirtualWorld::clocks() const { return sched_->clocks(); }

}  // namespace hpcc_mesh::transport
