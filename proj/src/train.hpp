#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gnn.hpp"
#include "precond.hpp"
#include "sparse.hpp"

namespace pclab {

struct TrainSample {
    std::string id;
    SparseCoo a;
};

struct TrainConfig {
    Index epochs = 50;
    double lr = 0.005;
    // Negative means "resolve to 5% of the total step count".
    Index warmup_steps = -1;
    Index batch_size = 8;
    std::uint64_t seed = 0;
    // NIC trains the factor directly; GnnIC trains the correction on top
    // of IC(0). Other kinds are rejected.
    PrecondKind mode = PrecondKind::GnnIC;
    double val_rel_tol = 1e-6;
    Index val_max_iters = 2000;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    Index step = 0;

    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;
};

AdamState adam_init(std::size_t n_params);

// One bias-corrected Adam update in place. A non-finite gradient aborts
// the whole step: false is returned and neither the parameters nor the
// moment accumulators move.
bool adam_step(AdamState& state, std::vector<double>& params,
               std::span<const double> grads, double lr_t);

// Linear ramp 0 -> lr across the first warmup_steps steps, constant lr
// afterwards. step counts from 1; warmup_steps <= 0 disables the ramp.
double lr_schedule(Index step, double lr, Index warmup_steps);

// First index holding the minimum (the selection rule for the returned
// checkpoint: fewest mean validation iterations, earliest epoch on ties).
std::size_t best_epoch_index(const std::vector<double>& val_mean_iters);

// The random streams a run draws from, exposed so any step can be
// replayed outside the loop. step and epoch count from 1; sample_index
// and val_index are positions in the caller's vectors.
std::uint64_t probe_seed(std::uint64_t seed, Index step, std::size_t sample_index);
std::uint64_t shuffle_seed(std::uint64_t seed, Index epoch);
std::uint64_t validation_rhs_seed(std::uint64_t seed, std::size_t val_index);

// Everything the loop mutates, serialisable between epochs so a run can
// stop and resume with a bit-identical log.
struct TrainState {
    GnnModel model;
    AdamState adam;
    Index epochs_done = 0;
    Index steps_done = 0;
    std::vector<double> val_history;  // mean validation iterations per epoch
    GnnModel best;                    // snapshot at the best epoch so far
    Index best_epoch = 0;             // 1-based; 0 until validation ran

    static TrainState fresh(const GnnModel& init);
};

nlohmann::json train_state_to_json(const TrainState& s);
TrainState train_state_from_json(const nlohmann::json& j);

struct TrainResult {
    GnnModel best;
    Index best_epoch = 0;
    double best_val_iters = 0.0;
    std::vector<nlohmann::json> log;
};

// Advances the state until cfg.epochs (or stop_after_epoch, if that comes
// first) and returns the log lines produced by this call. Per step each
// batch sample gets a fresh Rademacher probe, its stochastic
// factorisation loss is divided by the sample's dimension, and gradients
// are summed across the batch before a single Adam update. After every
// epoch the candidate preconditioner is evaluated by PCG on the
// validation samples and the epoch with the fewest mean iterations is
// kept. Validation ids must not occur in the training set. In GnnIC mode
// a sample whose IC(0) factorisation breaks down is skipped with a
// warning line.
std::vector<nlohmann::json> train_epochs(TrainState& state,
                                         const TrainConfig& cfg,
                                         const std::vector<TrainSample>& train_set,
                                         const std::vector<TrainSample>& val_set,
                                         Index stop_after_epoch = -1);

// Fresh state, all epochs, best checkpoint out.
TrainResult train(const GnnModel& init, const TrainConfig& cfg,
                  const std::vector<TrainSample>& train_set,
                  const std::vector<TrainSample>& val_set);

}  // namespace pclab
