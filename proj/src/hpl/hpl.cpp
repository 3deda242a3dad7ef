// SPDX-FileCopyrightText: © 2026 The hpcc-mesh Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "hpcc_mesh/hpl.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <string>

#include "hpcc_mesh/collectives.hpp"
#include "hpcc_mesh/error.hpp"

namespace hpcc_mesh::hpl {

using blockmat::Block;
using blockmat::BlockIndex;
using blockmat::DenseMatrix;
using transport::Bytes;
using transport::Communicator;
using transport::GridCoord;
using transport::RankId;
using transport::Tag;

std::string_view to_string(Mode m) { return m == Mode::staged ? "staged" : "direct"; }

Mode mode_from_string(std::string_view name) {
    if (name == "staged") return Mode::staged;
    if (name == "direct") return Mode::direct;
    throw ConfigError("unknown mode '" + std::string(name) + "' (expected staged or direct)");
}

blockmat::MatrixLayout HplConfig::layout() const {
    return {n, block_size(), torus, torus, blockmat::Distribution::pq};
}

void HplConfig::validate(int world_size) const {
    if (block_log < 0 || block_log > 12) throw ConfigError("block_log must be in [0, 12]");
    if (register_log < 0 || register_log > block_log) {
        throw ConfigError("register block must not exceed the block size");
    }
    layout().validate();
    if (torus < 1 || torus * torus != world_size) {
        throw ConfigError("HPL needs a square torus with T*T = world size; got T=" + std::to_string(torus) + " for " +
                          std::to_string(world_size) + " ranks");
    }
    if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
    const std::uint64_t nb = static_cast<std::uint64_t>(n / block_size());
    if (4 * (nb + nb * nb) >= transport::kReservedTagBase) throw ConfigError("too many blocks for the tag space");
}

double hpl_flops(int n) {
    const double d = static_cast<double>(n);
    return 2.0 * d * d * d / 3.0;
}

Tag block_tag(BlockKind kind, int index, int k, int nblocks) {
    return static_cast<Tag>(kind) + 4u * static_cast<Tag>(index + nblocks * k);
}

std::vector<GridCoord> IterationPlan::route_right(GridCoord origin, int torus) const {
    std::vector<GridCoord> out;
    for (int d = 1; d <= route_length; ++d) out.push_back({origin.p, (origin.q + d) % torus});
    return out;
}

std::vector<GridCoord> IterationPlan::route_down(GridCoord origin, int torus) const {
    std::vector<GridCoord> out;
    for (int d = 1; d <= route_length; ++d) out.push_back({(origin.p + d) % torus, origin.q});
    return out;
}

IterationPlan plan_iteration(int k, int nblocks, int torus) {
    if (k < 0 || k >= nblocks) throw ConfigError("iteration index out of range");
    IterationPlan plan;
    plan.k = k;
    const int a = k % torus;
    plan.lu_owner = {a, a};
    // Trailing blocks k+1, k+2, ... sit at distances 1, 2, ... from the owner.
    plan.route_length = std::min(nblocks - k - 1, torus - 1);
    plan.lu_row = plan.route_right(plan.lu_owner, torus);
    plan.lu_col = plan.route_down(plan.lu_owner, torus);
    plan.tasks.resize(static_cast<std::size_t>(torus * torus));
    auto at = [&](int p, int q) -> RankTasks& { return plan.tasks[static_cast<std::size_t>(p * torus + q)]; };
    at(a, a).lu = true;
    for (int j = k + 1; j < nblocks; ++j) at(a, j % torus).top.push_back(j);
    for (int i = k + 1; i < nblocks; ++i) at(i % torus, a).left.push_back(i);
    for (int i = k + 1; i < nblocks; ++i) {
        for (int j = k + 1; j < nblocks; ++j) at(i % torus, j % torus).inner.push_back({i, j});
    }
    return plan;
}

namespace {

template <class T>
class LuEngine {
public:
    LuEngine(Communicator& comm, const HplConfig& cfg, blockmat::BlockMatrix<T>& a)
        : comm_(comm),
          cfg_(cfg),
          a_(a),
          nb_(cfg.n / cfg.block_size()),
          torus_(cfg.torus),
          bs_(cfg.block_size()),
          me_(transport::grid_coord(comm.rank(), cfg.torus)),
          timing_(static_cast<std::size_t>(nb_)) {
        for (int k = 0; k < nb_; ++k) timing_[static_cast<std::size_t>(k)].k = k;
    }

    void run() {
        for (int k = 0; k < nb_; ++k) iteration(k);
        flush();
    }

    const std::vector<IterationTiming>& timing() const { return timing_; }
    int lu_tasks() const { return lu_tasks_; }

private:
    struct InnerTask {
        int k;
        BlockIndex idx;
        std::shared_ptr<const Block<T>> l;
        std::shared_ptr<const Block<T>> u;
    };

    RankId rank_of(GridCoord c) const { return transport::grid_rank(c, torus_); }
    IterationTiming& timing(int k) { return timing_[static_cast<std::size_t>(k)]; }

    double block_cube() const { return static_cast<double>(bs_) * bs_ * bs_; }
    double block_bytes() const { return static_cast<double>(bs_) * bs_ * sizeof(T); }

    void run_inner(const InnerTask& t) {
        const double t0 = comm_.now();
        blockmat::block_matmul_sub(a_.at(t.idx.row, t.idx.col), *t.l, *t.u, {cfg_.register_block()});
        comm_.compute(2.0 * block_cube(), 3.0 * block_bytes());
        timing(t.k).inner += comm_.now() - t0;
    }

    void flush() {
        while (!deferred_.empty()) {
            run_inner(deferred_.front());
            deferred_.pop_front();
        }
    }

    // Receives a message, running deferred updates while it is in flight.
    Bytes recv_progress(RankId from, Tag tag, int k) {
        const double t0 = comm_.now();
        double worked = 0;
        while (!deferred_.empty() && !comm_.probe(from, tag)) {
            const double w0 = comm_.now();
            run_inner(deferred_.front());
            deferred_.pop_front();
            worked += comm_.now() - w0;
        }
        Bytes raw = comm_.recv(from, tag);
        timing(k).communication += comm_.now() - t0 - worked;
        return raw;
    }

    void send_along(const std::vector<GridCoord>& route, Tag tag, const Block<T>& blk, int k) {
        if (route.empty()) return;
        const double t0 = comm_.now();
        const Bytes raw = blk.to_bytes();
        if (cfg_.mode == Mode::direct) {
            comm_.send(rank_of(route.front()), tag, raw);
        } else {
            for (const auto& c : route) comm_.send(rank_of(c), tag, raw);
        }
        timing(k).communication += comm_.now() - t0;
    }

    // Receives a block travelling from `origin` along `route`, which must
    // contain this rank, forwarding it one hop further in direct mode.
    Block<T> receive_along(const std::vector<GridCoord>& route, GridCoord origin, Tag tag, int k) {
        const auto it = std::find(route.begin(), route.end(), me_);
        if (it == route.end()) throw Error("internal: rank is not on the block route");
        const auto d = static_cast<std::size_t>(it - route.begin());
        const bool direct = cfg_.mode == Mode::direct;
        const RankId from = (direct && d > 0) ? rank_of(route[d - 1]) : rank_of(origin);
        Bytes raw = recv_progress(from, tag, k);
        if (direct && d + 1 < route.size()) {
            const double t0 = comm_.now();
            comm_.send(rank_of(route[d + 1]), tag, raw);
            timing(k).communication += comm_.now() - t0;
        }
        return Block<T>::from_bytes(bs_, raw);
    }

    void iteration(int k) {
        const IterationPlan plan = plan_iteration(k, nb_, torus_);
        const RankTasks& mine = plan.tasks[static_cast<std::size_t>(comm_.rank().index)];
        const int a = k % torus_;
        const Tag lu_tag = block_tag(BlockKind::lu, 0, k, nb_);

        // (a) LU of the diagonal block, then its row and column broadcast.
        Block<T> lu;
        const bool on_lu_row = std::find(plan.lu_row.begin(), plan.lu_row.end(), me_) != plan.lu_row.end();
        const bool on_lu_col = std::find(plan.lu_col.begin(), plan.lu_col.end(), me_) != plan.lu_col.end();
        if (mine.lu) {
            const double t0 = comm_.now();
            Block<T>& diag = a_.at(k, k);
            try {
                blockmat::block_lu_decompose(diag);
            } catch (const NumericalError& e) {
                throw NumericalError("iteration " + std::to_string(k) + ": " + e.what());
            }
            comm_.compute(2.0 / 3.0 * block_cube(), 2.0 * block_bytes());
            ++lu_tasks_;
            timing(k).lu += comm_.now() - t0;
            lu = diag;
            send_along(plan.lu_row, lu_tag, lu, k);
            send_along(plan.lu_col, lu_tag, lu, k);
        } else if (on_lu_row) {
            lu = receive_along(plan.lu_row, plan.lu_owner, lu_tag, k);
        } else if (on_lu_col) {
            lu = receive_along(plan.lu_col, plan.lu_owner, lu_tag, k);
        }

        // (b) top and left updates, forwarded down and right.
        for (int j : mine.top) {
            const double t0 = comm_.now();
            Block<T>& top = a_.at(k, j);
            blockmat::block_top_update(lu, top);
            comm_.compute(block_cube(), 2.0 * block_bytes());
            timing(k).top_left += comm_.now() - t0;
            send_along(plan.route_down(me_, torus_), block_tag(BlockKind::top, j, k, nb_), top, k);
        }
        for (int i : mine.left) {
            const double t0 = comm_.now();
            Block<T>& left = a_.at(i, k);
            Block<T> lt;
            try {
                lt = blockmat::block_left_update(lu, left);
            } catch (const NumericalError& e) {
                throw NumericalError("iteration " + std::to_string(k) + ": " + e.what());
            }
            left = lt.transposed();
            comm_.compute(block_cube(), 2.0 * block_bytes());
            timing(k).top_left += comm_.now() - t0;
            send_along(plan.route_right(me_, torus_), block_tag(BlockKind::left, i, k, nb_), lt, k);
        }

        // (c) collect the operands of this rank's inner updates.
        std::set<int> rows, cols;
        for (const auto& idx : mine.inner) {
            rows.insert(idx.row);
            cols.insert(idx.col);
        }
        std::map<int, std::shared_ptr<const Block<T>>> tops, lefts;
        for (int j : cols) {
            if (me_.p == a) {
                tops[j] = std::make_shared<const Block<T>>(a_.at(k, j));
            } else {
                const GridCoord origin{a, me_.q};
                tops[j] = std::make_shared<const Block<T>>(
                    receive_along(plan.route_down(origin, torus_), origin, block_tag(BlockKind::top, j, k, nb_), k));
            }
        }
        for (int i : rows) {
            if (me_.q == a) {
                lefts[i] = std::make_shared<const Block<T>>(a_.at(i, k));
            } else {
                const GridCoord origin{me_.p, a};
                const Block<T> lt = receive_along(plan.route_right(origin, torus_), origin,
                                                  block_tag(BlockKind::left, i, k, nb_), k);
                lefts[i] = std::make_shared<const Block<T>>(lt.transposed());
            }
        }

        // (d) trailing updates. Blocks of row and column k+1 feed the next
        // iteration and go first; with overlap the rest trail behind the
        // next communication phase but always precede that block's next
        // update.
        flush();
        for (const auto& idx : mine.inner) {
            InnerTask task{k, idx, lefts.at(idx.row), tops.at(idx.col)};
            const bool critical = idx.row == k + 1 || idx.col == k + 1;
            if (cfg_.overlap && !critical) {
                deferred_.push_back(std::move(task));
            } else {
                run_inner(task);
            }
        }
    }

    Communicator& comm_;
    const HplConfig& cfg_;
    blockmat::BlockMatrix<T>& a_;
    int nb_;
    int torus_;
    int bs_;
    GridCoord me_;
    std::vector<IterationTiming> timing_;
    std::deque<InnerTask> deferred_;
    int lu_tasks_ = 0;
};

std::vector<double> flatten(const std::vector<IterationTiming>& t) {
    std::vector<double> out;
    for (const auto& it : t) out.insert(out.end(), {it.lu, it.communication, it.top_left, it.inner});
    return out;
}

std::vector<IterationTiming> unflatten(const std::vector<double>& v) {
    std::vector<IterationTiming> out;
    for (std::size_t i = 0; i + 3 < v.size(); i += 4) {
        out.push_back({static_cast<int>(i / 4), v[i], v[i + 1], v[i + 2], v[i + 3]});
    }
    return out;
}

}  // namespace

template <class T>
HplResult<T> run_hpl(Communicator& comm, const HplConfig& cfg) {
    cfg.validate(comm.size());
    const auto layout = cfg.layout();

    HplResult<T> result;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        auto a = blockmat::generate_diag_dominant<T>(layout, comm.rank(), cfg.seed);
        LuEngine<T> engine(comm, cfg, a);

        comm.barrier();
        const double t0 = comm.now();
        run_hook(cfg.on_repetition, comm, rep);
        engine.run();
        const double elapsed = comm.now() - t0;

        const double slowest = transport::allreduce_max(comm, elapsed);
        const auto timing = unflatten(transport::allreduce_max(comm, flatten(engine.timing())));
        if (result.rep_time.empty() || slowest < result.lu_time) {
            result.lu_time = slowest;
            result.iterations = timing;
            result.factors = std::move(a);
            result.lu_tasks = engine.lu_tasks();
        }
        result.rep_time.push_back(slowest);
        result.local_rep_time.push_back(elapsed);
    }
    result.flops = hpl_flops(cfg.n);
    result.gflops = result.flops / result.lu_time / 1e9;

    // Reference solve on rank 0, outside the timed region.
    const RankId root(0);
    const auto lu = blockmat::gather_dense(comm, result.factors, root);
    Bytes residual(sizeof(double));
    if (comm.rank() == root) {
        const auto b = blockmat::diag_dominant_rhs<T>(cfg.seed, cfg.n);
        double r = std::numeric_limits<double>::infinity();
        try {
            r = residual_error(solve_reference(lu, b), b);
        } catch (const NumericalError&) {
        }
        std::memcpy(residual.data(), &r, sizeof(double));
    }
    transport::broadcast(comm, root, residual);
    std::memcpy(&result.residual_error, residual.data(), sizeof(double));
    result.solve_ok = result.residual_error <= kResidualThreshold;
    return result;
}

template <class T>
std::vector<T> solve_reference(const DenseMatrix<T>& lu, const std::vector<T>& b) {
    const int n = lu.size();
    if (static_cast<int>(b.size()) != n) throw ConfigError("right-hand side length does not match the matrix");
    std::vector<T> y(b);
    for (int i = 0; i < n; ++i) {
        T s = y[static_cast<std::size_t>(i)];
        for (int j = 0; j < i; ++j) s -= lu(i, j) * y[static_cast<std::size_t>(j)];
        y[static_cast<std::size_t>(i)] = s;
    }
    std::vector<T> x(y);
    for (int i = n - 1; i >= 0; --i) {
        T s = x[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < n; ++j) s -= lu(i, j) * x[static_cast<std::size_t>(j)];
        if (lu(i, i) == T{0}) throw NumericalError("singular U: zero at diagonal position " + std::to_string(i));
        x[static_cast<std::size_t>(i)] = s / lu(i, i);
    }
    return x;
}

template <class T>
double residual_error(const std::vector<T>& x, const std::vector<T>& b) {
    if (x.size() != b.size() || x.empty()) throw ConfigError("residual needs equal, non-empty vectors");
    double err = 0, bnorm = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        err = std::max(err, std::fabs(static_cast<double>(x[i]) - 1.0));
        bnorm = std::max(bnorm, std::fabs(static_cast<double>(b[i])));
    }
    const double eps = std::numeric_limits<T>::epsilon();
    return err / (static_cast<double>(x.size()) * bnorm * eps);
}

#define HPCC_MESH_INSTANTIATE_HPL(T)                                                          \
    template HplResult<T> run_hpl<T>(Communicator&, const HplConfig&);                        \
    template std::vector<T> solve_reference(const DenseMatrix<T>&, const std::vector<T>&);    \
    template double residual_error(const std::vector<T>&, const std::vector<T>&);

HPCC_MESH_INSTANTIATE_HPL(float)
HPCC_MESH_INSTANTIATE_HPL(double)

}  // namespace hpcc_mesh::hpl
