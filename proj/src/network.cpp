#include "made/network.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>

namespace made {

namespace {

std::atomic<std::uint64_t> g_forward_passes{0};

double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation act) {
    if (act == Activation::relu) {
        return z.cwiseMax(0.0);
    }
    return z.unaryExpr([](double v) { return softplus(v); });
}

// ReLU derivative at exactly 0 is 0 (strict inequality below).
Eigen::MatrixXd activate_grad(const Eigen::MatrixXd& z, Activation act) {
    if (act == Activation::relu) {
        return (z.array() > 0.0).cast<double>();
    }
    return z.unaryExpr([](double v) { return sigmoid(v); });
}

// Per-unit bias including the conditioning term (U masked, times ones).
Eigen::VectorXd effective_bias(const Eigen::MatrixXd& bias,
                               const Eigen::MatrixXd& conditioning,
                               const Eigen::MatrixXd& mask) {
    Eigen::VectorXd out = bias.col(0);
    if (conditioning.size()) {
        out += conditioning.cwiseProduct(mask).rowwise().sum();
    }
    return out;
}

void check_consistent(const MadeParams& params, const MaskSet& masks,
                      const Eigen::MatrixXd& X) {
    const Architecture& arch = params.arch;
    if (X.cols() != arch.dims) {
        throw std::invalid_argument("input width " + std::to_string(X.cols()) +
                                    " does not match model dimension " +
                                    std::to_string(arch.dims));
    }
    if (masks.dims() != arch.dims ||
        static_cast<int>(masks.hidden.size()) != arch.depth()) {
        throw std::invalid_argument("mask set does not match architecture");
    }
    for (int l = 0; l < arch.depth(); ++l) {
        if (masks.hidden[l].rows() != params.t.W[l].rows() ||
            masks.hidden[l].cols() != params.t.W[l].cols()) {
            throw std::invalid_argument("hidden mask shape mismatch at layer " +
                                        std::to_string(l + 1));
        }
    }
    if (arch.use_direct && !masks.has_direct()) {
        throw std::invalid_argument("architecture expects a direct mask");
    }
    if (!((X.array() == 0.0) || (X.array() == 1.0)).all()) {
        throw std::domain_error("inputs must be binary 0/1");
    }
}

}  // namespace

void Architecture::validate() const {
    if (dims < 2) {
        throw std::invalid_argument("model dimension must be >= 2");
    }
    if (hidden_sizes.empty()) {
        throw std::invalid_argument("need at least one hidden layer");
    }
    for (int k : hidden_sizes) {
        if (k < 1) {
            throw std::invalid_argument("hidden layer sizes must be >= 1");
        }
    }
}

TensorBundle TensorBundle::zeros_like(const Architecture& arch) {
    TensorBundle t;
    int prev = arch.dims;
    for (int k : arch.hidden_sizes) {
        t.W.emplace_back(Eigen::MatrixXd::Zero(k, prev));
        t.b.emplace_back(Eigen::MatrixXd::Zero(k, 1));
        prev = k;
    }
    t.V = Eigen::MatrixXd::Zero(arch.dims, prev);
    t.c = Eigen::MatrixXd::Zero(arch.dims, 1);
    if (arch.use_direct) {
        t.A = Eigen::MatrixXd::Zero(arch.dims, arch.dims);
    }
    if (arch.use_conditioning) {
        int p = arch.dims;
        for (int k : arch.hidden_sizes) {
            t.U.emplace_back(Eigen::MatrixXd::Zero(k, p));
            p = k;
        }
        t.U_out = Eigen::MatrixXd::Zero(arch.dims, p);
    }
    return t;
}

bool TensorBundle::all_finite() const {
    bool ok = true;
    for_each_tensor([&](const Eigen::MatrixXd& t) {
        if (!t.allFinite()) ok = false;
    });
    return ok;
}

MadeParams init_params(const Architecture& arch, Rng& rng) {
    arch.validate();
    MadeParams params{arch, TensorBundle::zeros_like(arch)};

    // Fill order and element order (rows, then columns) are fixed so a seed
    // always produces the same parameters.
    auto fill_glorot = [&](Eigen::MatrixXd& w, int fan_in, int fan_out) {
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index col = 0; col < w.cols(); ++col) {
                w(r, col) = rng.uniform(-bound, bound);
            }
        }
    };

    for (auto& w : params.t.W) {
        fill_glorot(w, static_cast<int>(w.cols()), static_cast<int>(w.rows()));
    }
    fill_glorot(params.t.V, static_cast<int>(params.t.V.cols()),
                static_cast<int>(params.t.V.rows()));
    if (params.t.A.size()) {
        fill_glorot(params.t.A, arch.dims, arch.dims);
    }
    for (auto& u : params.t.U) {
        fill_glorot(u, static_cast<int>(u.cols()), static_cast<int>(u.rows()));
    }
    if (params.t.U_out.size()) {
        fill_glorot(params.t.U_out, static_cast<int>(params.t.U_out.cols()),
                    static_cast<int>(params.t.U_out.rows()));
    }
    return params;
}

ForwardTrace forward(const MadeParams& params, const MaskSet& masks,
                     const Eigen::MatrixXd& X) {
    check_consistent(params, masks, X);
    const Architecture& arch = params.arch;
    const int depth = arch.depth();

    ForwardTrace trace;
    trace.pre.reserve(depth);
    trace.act.reserve(depth);

    const Eigen::MatrixXd* h = &X;
    for (int l = 0; l < depth; ++l) {
        const Eigen::MatrixXd masked =
            params.t.W[l].cwiseProduct(masks.hidden[l]);
        const Eigen::VectorXd bias = effective_bias(
            params.t.b[l], arch.use_conditioning ? params.t.U[l] : Eigen::MatrixXd(),
            masks.hidden[l]);
        Eigen::MatrixXd z = *h * masked.transpose();
        z.rowwise() += bias.transpose();
        trace.pre.push_back(std::move(z));
        trace.act.push_back(activate(trace.pre.back(), arch.activation));
        h = &trace.act.back();
    }

    const Eigen::MatrixXd masked_v = params.t.V.cwiseProduct(masks.output);
    const Eigen::VectorXd out_bias =
        effective_bias(params.t.c, params.t.U_out, masks.output);
    trace.logits = *h * masked_v.transpose();
    trace.logits.rowwise() += out_bias.transpose();
    if (arch.use_direct) {
        trace.logits.noalias() += X * params.t.A.cwiseProduct(masks.direct).transpose();
    }
    trace.prob = trace.logits.unaryExpr([](double z) { return sigmoid(z); });

    g_forward_passes.fetch_add(1, std::memory_order_relaxed);
    return trace;
}

Eigen::VectorXd nll_per_example(const Eigen::MatrixXd& X,
                                const ForwardTrace& trace) {
    if (X.rows() != trace.logits.rows() || X.cols() != trace.logits.cols()) {
        throw std::invalid_argument("trace does not match input batch");
    }
    // x*softplus(-z) + (1-x)*softplus(z) == softplus(z) - x*z
    const Eigen::MatrixXd sp =
        trace.logits.unaryExpr([](double z) { return softplus(z); });
    return (sp - X.cwiseProduct(trace.logits)).rowwise().sum();
}

double nll(const Eigen::VectorXd& x, const ForwardTrace& trace) {
    return nll_per_example(x.transpose(), trace)(0);
}

Eigen::VectorXd log_prob(const MadeParams& params, const MaskSet& masks,
                         const Eigen::MatrixXd& X) {
    return -nll_per_example(X, forward(params, masks, X));
}

std::pair<double, Gradients> loss_and_gradients(const MadeParams& params,
                                                const MaskSet& masks,
                                                const Eigen::MatrixXd& X) {
    const Architecture& arch = params.arch;
    const int depth = arch.depth();
    const double n = static_cast<double>(X.rows());

    const ForwardTrace trace = forward(params, masks, X);
    const double loss = nll_per_example(X, trace).sum() / n;

    Gradients grads = TensorBundle::zeros_like(arch);

    // d(mean loss)/d(logit); the 1/n folds the batch average into every
    // downstream product.
    Eigen::MatrixXd delta = (trace.prob - X) / n;

    grads.c.col(0) = delta.colwise().sum();
    const Eigen::MatrixXd& h_last = depth ? trace.act[depth - 1] : X;
    grads.V = (delta.transpose() * h_last).cwiseProduct(masks.output);
    if (arch.use_direct) {
        grads.A = (delta.transpose() * X).cwiseProduct(masks.direct);
    }
    if (arch.use_conditioning) {
        grads.U_out =
            (grads.c * Eigen::RowVectorXd::Ones(masks.output.cols()))
                .cwiseProduct(masks.output);
    }

    Eigen::MatrixXd back = delta * params.t.V.cwiseProduct(masks.output);
    for (int l = depth - 1; l >= 0; --l) {
        back = back.cwiseProduct(activate_grad(trace.pre[l], arch.activation));
        grads.b[l].col(0) = back.colwise().sum();
        const Eigen::MatrixXd& h_prev = l == 0 ? X : trace.act[l - 1];
        grads.W[l] = (back.transpose() * h_prev).cwiseProduct(masks.hidden[l]);
        if (arch.use_conditioning) {
            grads.U[l] =
                (grads.b[l] * Eigen::RowVectorXd::Ones(masks.hidden[l].cols()))
                    .cwiseProduct(masks.hidden[l]);
        }
        if (l > 0) {
            back = (back * params.t.W[l].cwiseProduct(masks.hidden[l])).eval();
        }
    }
    return {loss, std::move(grads)};
}

std::uint64_t forward_pass_count() {
    return g_forward_passes.load(std::memory_order_relaxed);
}

}  // namespace made
