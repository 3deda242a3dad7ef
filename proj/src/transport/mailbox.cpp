// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "mailbox.hpp"

#include "hpcc_mesh/error.hpp"

namespace hpcc_mesh::transport::detail {

void Mailbox::push(int from, Tag tag, Bytes payload) {
    {
        std::lock_guard lock(mu_);
        queues_[{from, tag}].push_back(std::move(payload));
    }
    cv_.notify_all();
}

Bytes Mailbox::pop(int from, Tag tag, std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    const auto key = std::make_pair(from, tag);
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
        if (aborted_) throw TransportError(abort_reason_);
        auto it = queues_.find(key);
        if (it != queues_.end() && !it->second.empty()) {
            Bytes out = std::move(it->second.front());
            it->second.pop_front();
            if (it->second.empty()) queues_.erase(it);
            return out;
        }
        if (auto c = closed_.find(from); c != closed_.end()) {
            throw TransportError("peer " + std::to_string(from) + " disconnected: " + c->second);
        }
        if (cv_.wait_until(lock, deadline) == std::cv_status::timeout) {
            throw TimeoutError("timed out waiting for a message from rank " + std::to_string(from) +
                               " with tag " + std::to_string(tag));
        }
    }
}

bool Mailbox::contains(int from, Tag tag) {
    std::lock_guard lock(mu_);
    if (aborted_) throw TransportError(abort_reason_);
    auto it = queues_.find({from, tag});
    return it != queues_.end() && !it->second.empty();
}

void Mailbox::abort(const std::string& reason) {
    {
        std::lock_guard lock(mu_);
        if (!aborted_) {
            aborted_ = true;
            abort_reason_ = reason;
        }
    }
    cv_.notify_all();
}

void Mailbox::close_sender(int from, const std::string& reason) {
    {
        std::lock_guard lock(mu_);
        closed_.emplace(from, reason);
    }
    cv_.notify_all();
}

}  // namespace hpcc_mesh::transport::detail
