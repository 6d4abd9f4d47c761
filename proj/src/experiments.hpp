#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparse.hpp"

namespace pclab {

// Config-driven experiment commands. Each one validates its config,
// writes artifacts under the configured output directory, and returns a
// summary that repeats the fully resolved config, so every file can be
// traced back to the exact settings and seed that produced it.
nlohmann::json cmd_gen(const nlohmann::json& config);
nlohmann::json cmd_train(const nlohmann::json& config);
nlohmann::json cmd_eval(const nlohmann::json& config);
nlohmann::json cmd_crossscale(const nlohmann::json& config);
nlohmann::json cmd_dropout(const nlohmann::json& config);
nlohmann::json cmd_analyze(const nlohmann::json& config);

// name in {gen, train, eval, crossscale, dropout, analyze}.
nlohmann::json run_command(const std::string& name, const nlohmann::json& config);

// Seed conventions, exposed so artifacts can be reproduced externally.
// Matrices are seeded per (run seed, split, index); the right-hand side
// of every solve is uniform [-1, 1] derived from the matrix seed alone,
// so any command evaluating the same matrix uses the same system.
std::uint64_t dataset_matrix_seed(std::uint64_t seed, const std::string& split,
                                  Index index);
std::vector<double> experiment_rhs(std::uint64_t matrix_seed, Index n);

}  // namespace pclab
