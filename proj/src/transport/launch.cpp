// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "hpcc_mesh/launch.hpp"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <memory>
#include <thread>

#include "hpcc_mesh/error.hpp"

namespace hpcc_mesh::transport {

namespace {

constexpr const char* kAbortPrefix = "world aborted: ";

std::string text_of(const Bytes& b) {
    std::string s;
    s.reserve(b.size());
    for (auto c : b) s.push_back(static_cast<char>(c));
    return s;
}

LaunchResult launch_threads(const LaunchOptions& opt, const RankProgram& program) {
    LaunchResult result;
    result.ranks.resize(static_cast<std::size_t>(opt.world_size));

    std::unique_ptr<ConcurrentWorld> concurrent;
    std::unique_ptr<VirtualWorld> virt;
    if (opt.backend == Backend::virtual_time) {
        virt = std::make_unique<VirtualWorld>(opt.world_size, opt.virtual_params);
    } else {
        concurrent = std::make_unique<ConcurrentWorld>(opt.world_size, opt.timeout);
    }

    auto abort_world = [&](const std::string& why) {
        if (virt) virt->abort(kAbortPrefix + why);
        if (concurrent) concurrent->abort(kAbortPrefix + why);
    };

    std::vector<std::thread> threads;
    threads.reserve(result.ranks.size());
    for (int r = 0; r < opt.world_size; ++r) {
        threads.emplace_back([&, r] {
            auto& out = result.ranks[static_cast<std::size_t>(r)];
            try {
                const RankId id(r);
                auto comm = virt ? virt->communicator(id) : concurrent->communicator(id);
                if (virt) virt->enter(id);
                out.value = program(*comm);
                out.ok = true;
                if (virt) virt->finish(id);
            } catch (const std::exception& e) {
                out.ok = false;
                out.error = e.what();
                abort_world("rank " + std::to_string(r) + " failed: " + e.what());
            }
        });
    }
    for (auto& t : threads) t.join();
    if (virt) result.final_clocks = virt->clocks();
    return result;
}

[[noreturn]] void run_worker(const LaunchOptions& opt, const Endpoint& rendezvous, int rank,
                             const RankProgram& program) {
    int code = 0;
    std::unique_ptr<SocketWorker> worker;
    try {
        worker = std::make_unique<SocketWorker>(rendezvous, RankId(rank), opt.world_size, opt.timeout);
        auto comm = worker->communicator();
        const nlohmann::json value = program(*comm);
        // Nobody tears down its sockets while a peer may still be reading.
        comm->barrier();
        const auto cbor = nlohmann::json::to_cbor(value);
        Bytes payload(cbor.size());
        std::memcpy(payload.data(), cbor.data(), cbor.size());
        worker->report(true, payload);
    } catch (const std::exception& e) {
        code = 1;
        if (worker) {
            try {
                const std::string msg = e.what();
                Bytes payload(msg.size());
                std::memcpy(payload.data(), msg.data(), msg.size());
                worker->report(false, payload);
            } catch (...) {
            }
        }
    }
    worker.reset();
    ::_exit(code);
}

LaunchResult launch_processes(const LaunchOptions& opt, const RankProgram& program) {
    SocketRendezvous rendezvous(opt.rendezvous);
    const Endpoint ep = rendezvous.endpoint();

    std::vector<pid_t> children;
    for (int r = 0; r < opt.world_size; ++r) {
        const pid_t pid = ::fork();
        if (pid < 0) {
            for (pid_t c : children) ::kill(c, SIGKILL);
            for (pid_t c : children) ::waitpid(c, nullptr, 0);
            throw TransportError("fork failed");
        }
        if (pid == 0) run_worker(opt, ep, r, program);
        children.push_back(pid);
    }

    LaunchResult result;
    try {
        rendezvous.establish(opt.world_size, opt.timeout);
        const auto reports = rendezvous.collect(opt.timeout);
        for (const auto& rep : reports) {
            RankOutcome o;
            o.ok = rep.ok;
            if (rep.ok) {
                o.value = nlohmann::json::from_cbor(rep.payload);
            } else {
                o.error = text_of(rep.payload);
            }
            result.ranks.push_back(std::move(o));
        }
    } catch (...) {
        for (pid_t c : children) ::kill(c, SIGKILL);
        for (pid_t c : children) ::waitpid(c, nullptr, 0);
        throw;
    }
    for (pid_t c : children) ::waitpid(c, nullptr, 0);
    return result;
}

}  // namespace

bool LaunchResult::ok() const {
    for (const auto& r : ranks) {
        if (!r.ok) return false;
    }
    return !ranks.empty();
}

std::string LaunchResult::first_error() const {
    std::string fallback;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        const auto& r = ranks[i];
        if (r.ok) continue;
        const std::string msg = "rank " + std::to_string(i) + ": " + r.error;
        if (r.error.rfind(kAbortPrefix, 0) != 0 && r.error.find("disconnected") == std::string::npos) return msg;
        if (fallback.empty()) fallback = msg;
    }
    return fallback;
}

LaunchResult launch_ranks(const LaunchOptions& options, const RankProgram& program) {
    if (options.world_size < 1) throw ConfigError("world size must be at least 1");
    if (options.backend == Backend::socket) return launch_processes(options, program);
    return launch_threads(options, program);
}

}  // namespace hpcc_mesh::transport
