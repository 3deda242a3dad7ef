// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <utility>

#include "hpcc_mesh/transport.hpp"

namespace hpcc_mesh::transport::detail {

// Per-rank receive queues keyed by (sender, tag). Thread-safe; one consumer.
class Mailbox {
public:
    void push(int from, Tag tag, Bytes payload);

    // Blocks until a matching message arrives, the sender is marked closed,
    // the mailbox is aborted, or the timeout expires.
    Bytes pop(int from, Tag tag, std::chrono::milliseconds timeout);

    bool contains(int from, Tag tag);

    // Wakes every waiter; later pops throw TransportError(reason).
    void abort(const std::string& reason);

    // No more messages will arrive from `from`; pending ones stay readable.
    void close_sender(int from, const std::string& reason);

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::map<std::pair<int, Tag>, std::deque<Bytes>> queues_;
    std::map<int, std::string> closed_;
    bool aborted_ = false;
    std::string abort_reason_;
};

}  // namespace hpcc_mesh::transport::detail
