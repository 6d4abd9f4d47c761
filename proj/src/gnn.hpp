#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "features.hpp"
#include "sparse.hpp"

namespace pclab {

// Network shape: three message-passing blocks over the lower-triangle
// graph. Every multilayer perceptron is two linear layers with tanh in
// between and hidden width 8. Edge features stay 1-dimensional; blocks
// 2 and 3 additionally see the original edge feature (skip
// concatenation), so their edge input is [e_current, e_original].
inline constexpr int kHidden = 8;
inline constexpr int kBlocks = 3;

// Per-block MLP input widths.
//   edge updater: concat(e..., x_i, x_j)
//   node updater: concat(x, m_sum, m_mean)
inline constexpr int kEdgeIn[kBlocks] = {1 + 2 * kNodeFeatures, 2 + 2 * kHidden,
                                         2 + 2 * kHidden};
inline constexpr int kNodeIn[kBlocks] = {kNodeFeatures + 2, kHidden + 2,
                                         kHidden + 2};

// Offsets of every tensor inside the flat parameter vector. Weights are
// row-major (out x in).
struct ParamLayout {
    struct Mlp {
        std::size_t w1, b1, w2, b2;
        int in, out;
    };
    std::size_t gain, bias;   // graph-norm affine over the 9 input features
    Mlp edge[kBlocks];
    Mlp node[kBlocks];
    std::size_t total;
};

const ParamLayout& param_layout();

struct GnnModel {
    std::vector<double> params;

    std::size_t param_count() const { return params.size(); }

    // Uniform [-s, s] per layer with s = 1/sqrt(fan_in); norm affine
    // starts at gain 1, bias 0.
    static GnnModel init(std::uint64_t seed);

    // All MLP parameters zero, gain 1, bias 0. The network then outputs
    // 0 off-diagonal and exp(0/2) = 1 on the diagonal.
    static GnnModel zero();
};

// Intermediates recorded by the forward pass, consumed by the backward
// pass. x[0] is the normalized 9-wide input, x[b] the 8-wide node state
// after block b. e_out holds raw edge outputs (before the diagonal
// transform); out the transformed values actually returned.
struct GnnTape {
    std::vector<double> xhat;
    std::vector<double> x[kBlocks + 1];
    std::vector<double> e_hid[kBlocks];
    std::vector<double> e_out[kBlocks];
    std::vector<double> n_hid[kBlocks];
    std::vector<double> msum[kBlocks];
    std::vector<double> mmean[kBlocks];
    std::vector<double> cnt;
    std::vector<double> out;
};

// Edge values aligned with g's edge order. Diagonal outputs pass
// through o -> exp(o/2) and are therefore strictly positive. Throws
// NumericError naming the block if an activation turns non-finite.
// A tape is filled when given, enabling gnn_backward.
std::vector<double> gnn_forward(const GnnModel& model, const Graph& g,
                                GnnTape* tape = nullptr);

// Exact reverse-mode gradient of sum_k upstream[k] * output[k] with
// respect to every parameter, same layout as model.params.
std::vector<double> gnn_backward(const GnnModel& model, const Graph& g,
                                 const GnnTape& tape,
                                 std::span<const double> upstream);

// Places edge values on g's lower-triangle pattern and multiplies by
// g.sigma so the factor lives in the original matrix units. Throws
// NumericError on a nonpositive diagonal (cannot happen for
// gnn_forward output).
LowerFactor assemble_factor(const Graph& g, std::span<const double> edge_values);

// Lossless checkpoint of the architecture constants and parameters.
nlohmann::json model_to_json(const GnnModel& m);
GnnModel model_from_json(const nlohmann::json& j);

}  // namespace pclab
