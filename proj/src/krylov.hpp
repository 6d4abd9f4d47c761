#pragma once

#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "precond.hpp"
#include "sparse.hpp"

namespace pclab {

struct SolveConfig {
    double rel_tol = 1e-6;
    // Negative means the default cap of 10 n.
    Index max_iters = -1;
    bool record_residuals = false;
};

struct SolveReport {
    Index iterations = 0;
    bool converged = false;
    // Recurrence residual ||r_k|| / ||b|| at exit.
    double final_rel_residual = 0.0;
    // Recomputed ||b - A x|| / ||b||; residual_mismatch flags a gap
    // between the two larger than 10 rel_tol.
    double true_rel_residual = 0.0;
    bool residual_mismatch = false;
    double p_time = 0.0;
    double cg_time = 0.0;
    double total_time = 0.0;
    double tri_solve_time_per_iter = 0.0;
    // ||r_k||/||b|| for k = 0..iterations when recording was requested.
    std::vector<double> residual_history;
};

// Forward substitution; rows must be column-sorted and strictly lower
// plus diagonal. Throws NumericError naming the row on a zero diagonal.
std::vector<double> tri_solve_lower(const SparseCsr& l, std::span<const double> b);

// Backward substitution for an upper-triangular matrix.
std::vector<double> tri_solve_upper(const SparseCsr& u, std::span<const double> b);

// Conjugate gradient from x0 = 0 stopping at ||r_k||/||b|| <= rel_tol.
// Non-convergence is reported, not thrown.
std::pair<std::vector<double>, SolveReport> cg(const SparseCsr& a,
                                               std::span<const double> b,
                                               const SolveConfig& cfg);

// Preconditioned variant: factor kinds apply two triangular solves per
// iteration (L y = r, then L^T z = y), Jacobi divides by the diagonal.
std::pair<std::vector<double>, SolveReport> pcg(const SparseCsr& a,
                                                std::span<const double> b,
                                                const Preconditioner& p,
                                                const SolveConfig& cfg);

nlohmann::json report_to_json(const SolveReport& r);

}  // namespace pclab
