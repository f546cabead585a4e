#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "made/masks.hpp"
#include "made/rng.hpp"

namespace made {

enum class Activation { relu, softplus };

struct Architecture {
    int dims = 0;
    std::vector<int> hidden_sizes;
    Activation activation = Activation::relu;
    bool use_direct = false;
    bool use_conditioning = false;

    int depth() const { return static_cast<int>(hidden_sizes.size()); }
    void validate() const;  // throws std::invalid_argument
};

/// One Eigen matrix per parameter tensor. Bias vectors are stored as
/// single-column matrices so that every tensor can be visited uniformly;
/// optional tensors are 0x0 when their feature is off. The visit order of
/// for_each_tensor is fixed (W1..WL, b1..bL, V, c, A, U1..UL, Uout) and is
/// also the model-file payload order.
struct TensorBundle {
    std::vector<Eigen::MatrixXd> W;  // K^l x K^{l-1}, K^0 = D
    std::vector<Eigen::MatrixXd> b;  // K^l x 1
    Eigen::MatrixXd V;               // D x K^L
    Eigen::MatrixXd c;               // D x 1
    Eigen::MatrixXd A;               // D x D (direct connections)
    std::vector<Eigen::MatrixXd> U;  // conditioning companions of W
    Eigen::MatrixXd U_out;           // conditioning companion of V

    static TensorBundle zeros_like(const Architecture& arch);

    template <typename Fn>
    void for_each_tensor(Fn&& fn) {
        for (auto& w : W) fn(w);
        for (auto& bias : b) fn(bias);
        fn(V);
        fn(c);
        if (A.size()) fn(A);
        for (auto& u : U) fn(u);
        if (U_out.size()) fn(U_out);
    }

    template <typename Fn>
    void for_each_tensor(Fn&& fn) const {
        const_cast<TensorBundle*>(this)->for_each_tensor(
            [&](Eigen::MatrixXd& t) { fn(const_cast<const Eigen::MatrixXd&>(t)); });
    }

    bool all_finite() const;
};

using Gradients = TensorBundle;

struct MadeParams {
    Architecture arch;
    TensorBundle t;
};

/// Everything the backward pass needs from a forward pass, plus the output
/// probabilities. prob is sigmoid(logits); all likelihood math goes through
/// the logits so saturated probabilities never reach a log.
struct ForwardTrace {
    std::vector<Eigen::MatrixXd> pre;  // z^l, N x K^l
    std::vector<Eigen::MatrixXd> act;  // h^l = g(z^l)
    Eigen::MatrixXd logits;            // N x D
    Eigen::MatrixXd prob;              // N x D
};

/// Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases.
/// Deterministic per seed.
MadeParams init_params(const Architecture& arch, Rng& rng);

/// Masked forward pass over a batch (one example per row, entries in {0,1}).
/// Increments the global forward-pass counter exactly once per call.
ForwardTrace forward(const MadeParams& params, const MaskSet& masks,
                     const Eigen::MatrixXd& X);

/// Cross-entropy of each example against its reconstruction, in nats,
/// computed from the logits via stable softplus.
Eigen::VectorXd nll_per_example(const Eigen::MatrixXd& X,
                                const ForwardTrace& trace);

/// Single-example convenience; trace must come from x.
double nll(const Eigen::VectorXd& x, const ForwardTrace& trace);

/// log p(x) for every row of X in one network pass.
Eigen::VectorXd log_prob(const MadeParams& params, const MaskSet& masks,
                         const Eigen::MatrixXd& X);

/// Mean NLL over the batch and its gradients for every parameter tensor.
/// Gradient tensors are zero wherever the corresponding mask is zero.
std::pair<double, Gradients> loss_and_gradients(const MadeParams& params,
                                                const MaskSet& masks,
                                                const Eigen::MatrixXd& X);

/// Number of forward passes executed so far in this process. Exists so tests
/// can pin the one-pass-per-batch evaluation contract.
std::uint64_t forward_pass_count();

}  // namespace made
