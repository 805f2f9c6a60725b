#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dcpa/autodiff.hpp"
#include "dcpa/mask.hpp"
#include "dcpa/rng.hpp"

// Segmentation losses with an optional stochastic penalty, and the ADAM
// update. The penalty (class weight for cross-entropy, beta for the soft
// F-score) is drawn per mini-batch from the grid {1, 1+s, ..., <= alpha}.

namespace dcpa {

enum class LossKind { cross_entropy, dice };

struct LossConfig {
    LossKind kind = LossKind::dice;
    bool stochastic = true;
    double alpha = 5.0;   // upper end of the penalty grid
    double step = 0.5;    // grid step
    double eps = 1e-6;    // smoothing for soft ratios and log floors
    std::uint64_t seed = 0;

    int grid_size() const {
        return 1 + static_cast<int>(std::floor((alpha - 1.0) / step + 1e-9));
    }

    void validate() const {
        if (alpha < 1.0) throw ConfigError("loss: alpha must be >= 1, got " + std::to_string(alpha));
        if (step <= 0.0) throw ConfigError("loss: step must be > 0, got " + std::to_string(step));
        if (eps < 0.0) throw ConfigError("loss: eps must be >= 0");
        if (grid_size() < 1) throw ConfigError("loss: empty penalty grid");
    }
};

inline const char* loss_kind_name(LossKind k) {
    return k == LossKind::dice ? "dice" : "cross_entropy";
}

// Uniform draw from {1, 1+s, 1+2s, ...} intersected with [1, alpha].
// Returns exactly 1 when the stochastic flag is off.
inline double draw_penalty(const LossConfig& cfg, Rng& rng) {
    if (!cfg.stochastic) return 1.0;
    const int n = cfg.grid_size();
    const auto i = rng.next_index(n);
    return 1.0 + static_cast<double>(i) * cfg.step;
}

// F_beta combination of a precision/recall pair (0 when both are 0).
inline double fbeta_score(double precision, double recall, double beta) {
    const double b2 = beta * beta;
    const double den = b2 * precision + recall;
    if (den == 0.0) return 0.0;
    return (1.0 + b2) * precision * recall / den;
}

namespace detail {

template <typename T>
void check_probs_target(const TensorT<T>& probs, const SegMask& target, const char* op) {
    if (probs.rank() != 3 || probs.dim(0) != 2) {
        throw ShapeError(std::string(op) + ": probabilities must be [2,H,W], got " + shape_str(probs.shape()));
    }
    if (probs.dim(1) != target.h || probs.dim(2) != target.w) {
        throw ShapeError(std::string(op) + ": target " + std::to_string(target.h) + "x" +
                         std::to_string(target.w) + " does not match probabilities " + shape_str(probs.shape()));
    }
}

}  // namespace detail

// Mean over pixels of -[w * t * log(q1) + (1-t) * log(q0)], with log
// arguments floored at eps. Channel 1 is the disc class; the penalty w
// multiplies the positive-class term only.
template <typename T>
class WeightedCrossEntropyNode final : public NodeT<T> {
public:
    WeightedCrossEntropyNode(NodeTPtr<T> probs, std::shared_ptr<const SegMask> target, double w, double eps)
        : NodeT<T>({std::move(probs)}), target_(std::move(target)), w_(w), eps_(eps) {
        this->value_ = TensorT<T>({1});
        const TensorT<T>& p = this->inputs_[0]->value();
        detail::check_probs_target(p, *target_, "weighted_cross_entropy");
        const std::size_t n = target_->size();
        const T* q0 = p.data();
        const T* q1 = p.data() + n;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (target_->data[i]) {
                acc -= w_ * std::log(std::max(static_cast<double>(q1[i]), eps_));
            } else {
                acc -= std::log(std::max(static_cast<double>(q0[i]), eps_));
            }
        }
        this->scalar_ = acc / static_cast<double>(n);
        this->value_[0] = static_cast<T>(this->scalar_);
    }
    const char* op_name() const override { return "weighted_cross_entropy"; }

    void propagate() override {
        if (!this->inputs_[0]->needs_grad()) return;
        const TensorT<T>& p = this->inputs_[0]->value();
        const std::size_t n = target_->size();
        const T* q0 = p.data();
        const T* q1 = p.data() + n;
        const double g = static_cast<double>(this->grad()[0]) / static_cast<double>(n);
        auto& gi = this->inputs_[0]->grad();
        for (std::size_t i = 0; i < n; ++i) {
            if (target_->data[i]) {
                const double q = static_cast<double>(q1[i]);
                if (q >= eps_) gi[n + i] += static_cast<T>(-g * w_ / q);
            } else {
                const double q = static_cast<double>(q0[i]);
                if (q >= eps_) gi[i] += static_cast<T>(-g / q);
            }
        }
    }

private:
    std::shared_ptr<const SegMask> target_;
    double w_;
    double eps_;
};

// 1 - F_beta with soft counts: S = sum q1*t, Q = sum q1, Tp = sum t,
// precision = S/(Q+eps), recall = S/(Tp+eps). For S > 0 the F_beta of that
// pair reduces to (1+b^2)*S / (b^2*(Tp+eps) + (Q+eps)), which is also the
// form differentiated here; it degrades to 0 instead of 0/0 on empty sums.
template <typename T>
class SoftFBetaLossNode final : public NodeT<T> {
public:
    SoftFBetaLossNode(NodeTPtr<T> probs, std::shared_ptr<const SegMask> target, double beta, double eps)
        : NodeT<T>({std::move(probs)}), target_(std::move(target)), beta_(beta), eps_(eps) {
        this->value_ = TensorT<T>({1});
        const TensorT<T>& p = this->inputs_[0]->value();
        detail::check_probs_target(p, *target_, "soft_fbeta_loss");
        const std::size_t n = target_->size();
        const T* q1 = p.data() + n;
        double s = 0.0, q_sum = 0.0;
        std::int64_t t_sum = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double q = static_cast<double>(q1[i]);
            q_sum += q;
            if (target_->data[i]) {
                s += q;
                ++t_sum;
            }
        }
        const double b2 = beta_ * beta_;
        s_ = s;
        den_ = b2 * (static_cast<double>(t_sum) + eps_) + (q_sum + eps_);
        const double f = (1.0 + b2) * s_ / den_;
        this->scalar_ = 1.0 - f;
        this->value_[0] = static_cast<T>(this->scalar_);
    }
    const char* op_name() const override { return "soft_fbeta_loss"; }

    void propagate() override {
        if (!this->inputs_[0]->needs_grad()) return;
        const std::size_t n = target_->size();
        const double g = static_cast<double>(this->grad()[0]);
        const double b2 = beta_ * beta_;
        // d(loss)/dq1[i] = -(1+b^2) * (t_i * den - S) / den^2
        const double c = g * (1.0 + b2) / (den_ * den_);
        auto& gi = this->inputs_[0]->grad();
        for (std::size_t i = 0; i < n; ++i) {
            const double t = target_->data[i] ? 1.0 : 0.0;
            gi[n + i] += static_cast<T>(-c * (t * den_ - s_));
        }
    }

private:
    std::shared_ptr<const SegMask> target_;
    double beta_;
    double eps_;
    double s_ = 0.0;
    double den_ = 1.0;
};

template <typename T>
NodeTPtr<T> weighted_cross_entropy(NodeTPtr<T> probs, std::shared_ptr<const SegMask> target, double w,
                                   double eps = 1e-6) {
    return std::make_shared<WeightedCrossEntropyNode<T>>(std::move(probs), std::move(target), w, eps);
}

template <typename T>
NodeTPtr<T> soft_fbeta_loss(NodeTPtr<T> probs, std::shared_ptr<const SegMask> target, double beta,
                            double eps = 1e-6) {
    return std::make_shared<SoftFBetaLossNode<T>>(std::move(probs), std::move(target), beta, eps);
}

// Builds the configured loss with the already-drawn penalty value.
template <typename T>
NodeTPtr<T> make_loss(const LossConfig& cfg, NodeTPtr<T> probs, std::shared_ptr<const SegMask> target,
                      double penalty) {
    if (cfg.kind == LossKind::cross_entropy) {
        return weighted_cross_entropy(std::move(probs), std::move(target), penalty, cfg.eps);
    }
    return soft_fbeta_loss(std::move(probs), std::move(target), penalty, cfg.eps);
}

// ---------------------------------------------------------------------------
// ADAM

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Per-parameter first/second moment accumulators; slot i mirrors the shape of
// parameter i.
struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::int64_t t = 0;

    static AdamState init(const std::vector<std::size_t>& param_sizes) {
        AdamState s;
        s.m.reserve(param_sizes.size());
        s.v.reserve(param_sizes.size());
        for (std::size_t n : param_sizes) {
            s.m.emplace_back(n, 0.0);
            s.v.emplace_back(n, 0.0);
        }
        return s;
    }
};

// Bias-corrected ADAM update, applied in place. Throws NumericError naming
// the first parameter with a non-finite gradient; parameters are untouched in
// that case and the step counter does not advance.
inline void adam_step(std::vector<Tensor*>& params, const std::vector<std::vector<float>>& grads,
                      const std::vector<std::string>& names, AdamState& state, const AdamConfig& cfg) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw ShapeError("adam_step: parameter/gradient/state counts differ");
    }
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (grads[p].size() != params[p]->size()) {
            throw ShapeError("adam_step: gradient shape mismatch for " + names[p]);
        }
        for (float g : grads[p]) {
            if (!std::isfinite(g)) {
                throw NumericError("adam_step: non-finite gradient in parameter '" + names[p] + "'");
            }
        }
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t p = 0; p < params.size(); ++p) {
        float* theta = params[p]->data();
        const std::vector<float>& g = grads[p];
        std::vector<double>& m = state.m[p];
        std::vector<double>& v = state.v[p];
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double gi = static_cast<double>(g[i]);
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            theta[i] = static_cast<float>(static_cast<double>(theta[i]) -
                                          cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
        }
    }
}

}  // namespace dcpa
