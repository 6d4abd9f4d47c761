#pragma once

#include <utility>
#include <vector>

#include "gnn.hpp"
#include "sparse.hpp"

namespace pclab {

enum class PrecondKind { None, Jacobi, IC0, NIC, GnnIC };

const char* precond_kind_name(PrecondKind k);

// Immutable after construction. Jacobi carries the diagonal, the factor
// kinds carry L with P = L L^T. p_time is construction wall time.
struct Preconditioner {
    PrecondKind kind = PrecondKind::None;
    std::vector<double> diag;
    LowerFactor factor;
    double p_time = 0.0;
};

Preconditioner make_none();

// payload d_i = a_ii; application divides the residual by d.
Preconditioner jacobi(const SparseCoo& a);

// Incomplete Cholesky without fill: L on lower_triangle(a)'s pattern
// with (L L^T)_ij = a_ij on that pattern. A nonpositive pivot triggers
// a diagonal shift A + alpha I, alpha doubling from 1e-8 max|a_ii|, 3
// retries; the factor then belongs to the shifted matrix. Throws
// NumericError naming the row when the shifts run out.
Preconditioner ic0(const SparseCoo& a);

// Direct prediction: factor = assemble_factor(build_graph(a), forward).
Preconditioner nic_predict(const GnnModel& model, const SparseCoo& a);

// Learned correction on top of IC(0): off-diagonal L_ic + o, diagonal
// L_ic + exp(o/2) (the network's transformed diagonal output), keeping
// the diagonal strictly above IC's. The correction is applied in the
// network's output units, not rescaled by sigma.
Preconditioner gnn_ic_predict(const GnnModel& model, const SparseCoo& a);

// Drops off-diagonal factor entries with |v| <= eps. Diagonals always
// survive so the triangular solves stay well posed.
Preconditioner fill_in_dropout(const Preconditioner& p, double eps);

struct ErrorStats {
    double mean = 0.0;
    double max = 0.0;
    std::vector<double> values;
};

// Per-entry |pred - ref| / |ref| split into diagonal and off-diagonal
// populations. Patterns must match exactly.
std::pair<ErrorStats, ErrorStats> factor_relative_error(const LowerFactor& pred,
                                                        const LowerFactor& ref);

}  // namespace pclab
