#include "train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_set>
#include <utility>

#include "error.hpp"
#include "features.hpp"
#include "krylov.hpp"
#include "loss.hpp"
#include "rng.hpp"

namespace pclab {

namespace {

// Seed-derivation tags, one per independent random stream.
constexpr std::uint64_t kTagShuffle = 1;
constexpr std::uint64_t kTagProbe = 2;
constexpr std::uint64_t kTagRhs = 3;

void check_config(const TrainConfig& cfg) {
    if (cfg.epochs < 1 || cfg.batch_size < 1)
        throw DimensionError("train: epochs and batch_size must be at least 1");
    if (!(cfg.lr > 0.0)) throw DimensionError("train: lr must be positive");
    if (cfg.mode != PrecondKind::NIC && cfg.mode != PrecondKind::GnnIC)
        throw DimensionError("train: mode must be nic or gnnic");
}

void check_no_leakage(const std::vector<TrainSample>& train_set,
                      const std::vector<TrainSample>& val_set) {
    std::unordered_set<std::string> ids;
    for (const auto& s : train_set) ids.insert(s.id);
    for (const auto& s : val_set)
        if (ids.count(s.id))
            throw DimensionError("train: validation sample '" + s.id +
                                 "' also appears in the training set");
}

// Per-sample work that does not depend on the parameters. l carries the
// lower-triangle pattern once; only its values change per step.
struct Prepared {
    std::size_t orig = 0;  // position in the caller's training vector
    Graph g;
    SparseCsr a_csr;
    SparseCoo l;
    std::vector<double> ic;  // IC(0) values on the same pattern, GnnIC only
};

std::vector<Prepared> prepare(const std::vector<TrainSample>& set,
                              PrecondKind mode, bool log_warnings,
                              std::vector<nlohmann::json>& log) {
    std::vector<Prepared> out;
    out.reserve(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        Prepared p;
        p.orig = i;
        if (mode == PrecondKind::GnnIC) {
            try {
                p.ic = ic0(set[i].a).factor.matrix.values;
            } catch (const NumericError& e) {
                if (log_warnings)
                    log.push_back({{"type", "warning"},
                                   {"sample", set[i].id},
                                   {"message", std::string("skipped: ") + e.what()}});
                std::fprintf(stderr, "warning: training sample %s skipped: %s\n",
                             set[i].id.c_str(), e.what());
                continue;
            }
        }
        p.g = build_graph(set[i].a);
        p.a_csr = coo_to_csr(set[i].a);
        p.l.n_rows = p.l.n_cols = p.g.n;
        p.l.rows = p.g.edge_rows;
        p.l.cols = p.g.edge_cols;
        p.l.values.assign(p.g.edge_feat.size(), 0.0);
        if (mode == PrecondKind::GnnIC && p.ic.size() != p.l.values.size())
            throw NumericError("train: ic0 pattern disagrees with the graph for sample " +
                               set[i].id);
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace

AdamState adam_init(std::size_t n_params) {
    AdamState st;
    st.m.assign(n_params, 0.0);
    st.v.assign(n_params, 0.0);
    return st;
}

bool adam_step(AdamState& state, std::vector<double>& params,
               std::span<const double> grads, double lr_t) {
    if (params.size() != grads.size() || state.m.size() != params.size() ||
        state.v.size() != params.size())
        throw DimensionError("adam_step: parameter, gradient and state sizes differ");
    for (double g : grads)
        if (!std::isfinite(g)) return false;
    state.step += 1;
    const double c1 = 1.0 - std::pow(AdamState::kBeta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(AdamState::kBeta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        state.m[k] = AdamState::kBeta1 * state.m[k] + (1.0 - AdamState::kBeta1) * grads[k];
        state.v[k] =
            AdamState::kBeta2 * state.v[k] + (1.0 - AdamState::kBeta2) * grads[k] * grads[k];
        const double mhat = state.m[k] / c1;
        const double vhat = state.v[k] / c2;
        params[k] -= lr_t * mhat / (std::sqrt(vhat) + AdamState::kEps);
    }
    return true;
}

double lr_schedule(Index step, double lr, Index warmup_steps) {
    if (step < 1) throw DimensionError("lr_schedule: step counts from 1");
    if (warmup_steps <= 0 || step >= warmup_steps) return lr;
    return lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
}

std::size_t best_epoch_index(const std::vector<double>& val_mean_iters) {
    if (val_mean_iters.empty())
        throw DimensionError("best_epoch_index: empty history");
    return static_cast<std::size_t>(
        std::min_element(val_mean_iters.begin(), val_mean_iters.end()) -
        val_mean_iters.begin());
}

std::uint64_t probe_seed(std::uint64_t seed, Index step, std::size_t sample_index) {
    return derive_seed(seed, kTagProbe, static_cast<std::uint64_t>(step),
                       static_cast<std::uint64_t>(sample_index));
}

std::uint64_t shuffle_seed(std::uint64_t seed, Index epoch) {
    return derive_seed(seed, kTagShuffle, static_cast<std::uint64_t>(epoch));
}

std::uint64_t validation_rhs_seed(std::uint64_t seed, std::size_t val_index) {
    return derive_seed(seed, kTagRhs, static_cast<std::uint64_t>(val_index));
}

TrainState TrainState::fresh(const GnnModel& init) {
    TrainState st;
    st.model = init;
    st.adam = adam_init(init.param_count());
    st.best = init;
    return st;
}

nlohmann::json train_state_to_json(const TrainState& s) {
    return {{"format", "pclab-train-state"},
            {"version", 1},
            {"model", model_to_json(s.model)},
            {"adam_m", s.adam.m},
            {"adam_v", s.adam.v},
            {"adam_step", s.adam.step},
            {"epochs_done", s.epochs_done},
            {"steps_done", s.steps_done},
            {"val_history", s.val_history},
            {"best_model", model_to_json(s.best)},
            {"best_epoch", s.best_epoch}};
}

TrainState train_state_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("format", "") != "pclab-train-state")
        throw FormatError("train state: missing or wrong format marker");
    if (j.value("version", 0) != 1)
        throw FormatError("train state: unsupported version");
    TrainState st;
    st.model = model_from_json(j.at("model"));
    st.adam.m = j.at("adam_m").get<std::vector<double>>();
    st.adam.v = j.at("adam_v").get<std::vector<double>>();
    st.adam.step = j.at("adam_step").get<Index>();
    if (st.adam.m.size() != st.model.param_count() ||
        st.adam.v.size() != st.model.param_count())
        throw FormatError("train state: accumulator sizes disagree with the model");
    st.epochs_done = j.at("epochs_done").get<Index>();
    st.steps_done = j.at("steps_done").get<Index>();
    st.val_history = j.at("val_history").get<std::vector<double>>();
    st.best = model_from_json(j.at("best_model"));
    st.best_epoch = j.at("best_epoch").get<Index>();
    return st;
}

std::vector<nlohmann::json> train_epochs(TrainState& state, const TrainConfig& cfg,
                                         const std::vector<TrainSample>& train_set,
                                         const std::vector<TrainSample>& val_set,
                                         Index stop_after_epoch) {
    check_config(cfg);
    if (train_set.empty()) throw DimensionError("train: empty training set");
    check_no_leakage(train_set, val_set);

    std::vector<nlohmann::json> log;
    auto prepared = prepare(train_set, cfg.mode, state.epochs_done == 0, log);
    if (prepared.empty())
        throw NumericError("train: every training sample was skipped");

    const Index n_usable = static_cast<Index>(prepared.size());
    const Index steps_per_epoch = (n_usable + cfg.batch_size - 1) / cfg.batch_size;
    const Index total_steps = steps_per_epoch * cfg.epochs;
    const Index warmup = cfg.warmup_steps >= 0 ? cfg.warmup_steps
                                               : std::max<Index>(1, total_steps / 20);

    struct ValPrepared {
        const TrainSample* s;
        SparseCsr a;
        std::vector<double> b;
    };
    std::vector<ValPrepared> vals;
    vals.reserve(val_set.size());
    for (std::size_t i = 0; i < val_set.size(); ++i) {
        ValPrepared v;
        v.s = &val_set[i];
        v.a = coo_to_csr(val_set[i].a);
        const std::uint64_t rhs_seed = validation_rhs_seed(cfg.seed, i);
        v.b.resize(static_cast<std::size_t>(val_set[i].a.n_rows));
        for (std::size_t r = 0; r < v.b.size(); ++r)
            v.b[r] = 2.0 * uniform_at(rhs_seed, r) - 1.0;
        vals.push_back(std::move(v));
    }

    const Index last_epoch =
        stop_after_epoch < 0 ? cfg.epochs : std::min(stop_after_epoch, cfg.epochs);

    while (state.epochs_done < last_epoch) {
        const Index epoch = state.epochs_done + 1;

        std::vector<std::size_t> order(prepared.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng shuffle(shuffle_seed(cfg.seed, epoch));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle.next_below(i)]);

        for (Index batch_start = 0; batch_start < n_usable;
             batch_start += cfg.batch_size) {
            const Index batch_end = std::min(batch_start + cfg.batch_size, n_usable);
            const Index step = state.steps_done + 1;
            const double lr_t = lr_schedule(step, cfg.lr, warmup);

            std::vector<double> grad_sum(state.model.param_count(), 0.0);
            double loss_sum = 0.0;
            for (Index k = batch_start; k < batch_end; ++k) {
                auto& p = prepared[order[static_cast<std::size_t>(k)]];
                const double n = static_cast<double>(p.g.n);
                const auto z = rademacher(probe_seed(cfg.seed, step, p.orig),
                                          static_cast<std::size_t>(p.g.n));
                GnnTape tape;
                const auto out = gnn_forward(state.model, p.g, &tape);
                for (std::size_t e = 0; e < out.size(); ++e)
                    p.l.values[e] = cfg.mode == PrecondKind::NIC
                                        ? p.g.sigma * out[e]
                                        : p.ic[e] + out[e];
                const auto res = hutchinson_loss(p.l, p.a_csr, z, true);
                loss_sum += res.value / n;
                const double chain = (cfg.mode == PrecondKind::NIC ? p.g.sigma : 1.0) / n;
                std::vector<double> upstream(res.grad.size());
                for (std::size_t e = 0; e < upstream.size(); ++e)
                    upstream[e] = chain * res.grad[e];
                const auto grad = gnn_backward(state.model, p.g, tape, upstream);
                for (std::size_t q = 0; q < grad_sum.size(); ++q)
                    grad_sum[q] += grad[q];
            }
            if (!adam_step(state.adam, state.model.params, grad_sum, lr_t))
                log.push_back({{"type", "warning"},
                               {"step", step},
                               {"message", "non-finite batch gradient, update skipped"}});
            state.steps_done = step;
            log.push_back({{"type", "step"},
                           {"step", step},
                           {"epoch", epoch},
                           {"loss", loss_sum / static_cast<double>(batch_end - batch_start)},
                           {"lr", lr_t}});
        }

        if (!vals.empty()) {
            double iter_sum = 0.0;
            for (const auto& v : vals) {
                double iters;
                try {
                    const auto p = cfg.mode == PrecondKind::NIC
                                       ? nic_predict(state.model, v.s->a)
                                       : gnn_ic_predict(state.model, v.s->a);
                    SolveConfig sc;
                    sc.rel_tol = cfg.val_rel_tol;
                    sc.max_iters = cfg.val_max_iters;
                    const auto [x, rep] = pcg(v.a, v.b, p, sc);
                    iters = static_cast<double>(rep.iterations);
                } catch (const NumericError&) {
                    iters = static_cast<double>(cfg.val_max_iters);
                }
                iter_sum += iters;
            }
            const double mean = iter_sum / static_cast<double>(vals.size());
            state.val_history.push_back(mean);
            log.push_back(
                {{"type", "epoch"}, {"epoch", epoch}, {"val_mean_iters", mean}});
            if (best_epoch_index(state.val_history) ==
                static_cast<std::size_t>(epoch - 1)) {
                state.best = state.model;
                state.best_epoch = epoch;
            }
        } else {
            // Without validation the latest parameters stand in for the best.
            state.best = state.model;
            state.best_epoch = epoch;
        }
        state.epochs_done = epoch;
    }
    return log;
}

TrainResult train(const GnnModel& init, const TrainConfig& cfg,
                  const std::vector<TrainSample>& train_set,
                  const std::vector<TrainSample>& val_set) {
    TrainState st = TrainState::fresh(init);
    TrainResult r;
    r.log = train_epochs(st, cfg, train_set, val_set);
    r.best = st.best;
    r.best_epoch = st.best_epoch;
    r.best_val_iters =
        st.val_history.empty() ? 0.0 : st.val_history[best_epoch_index(st.val_history)];
    return r;
}

}  // namespace pclab
