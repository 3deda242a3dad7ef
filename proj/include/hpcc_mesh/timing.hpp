// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>

#include "hpcc_mesh/transport.hpp"

namespace hpcc_mesh {

// Runs on every rank right after the timed region of a repetition opens.
// Tests use it to inject per-rank delays with Communicator::advance.
using RepetitionHook = std::function<void(transport::Communicator&, int repetition)>;

inline void run_hook(const RepetitionHook& hook, transport::Communicator& comm, int repetition) {
    if (hook) hook(comm, repetition);
}

}  // namespace hpcc_mesh
