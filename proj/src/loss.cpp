#include "prtransx/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace prtransx {

namespace {

double sign0(double x) {
    if (x > 0.0) return 1.0;
    if (x < 0.0) return -1.0;
    return 0.0;
}

}  // namespace

void Hyperparams::validate(std::size_t relation_count) const {
    if (!(lambda > 0.0)) throw ConfigError("loss.lambda must be > 0");
    if (!(eps_n > 0.0 && eps_n < eps_p && eps_p < 1.0)) {
        throw ConfigError("loss requires 0 < eps_n < eps_p < 1");
    }
    if (!(gamma >= 0.0)) throw ConfigError("loss.gamma must be >= 0");
    if (!(margin_weight_scale >= 0.0)) throw ConfigError("loss.k must be >= 0");
    if (!(weight_exponent_cap > 0.0)) throw ConfigError("loss.weight_cap must be > 0");
    if (alpha.size() != relation_count || beta.size() != relation_count) {
        throw ConfigError("loss.alpha/loss.beta must have one weight per relation (" +
                          std::to_string(relation_count) + ")");
    }
    for (double a : alpha) {
        if (!(a >= 0.0)) throw ConfigError("loss.alpha weights must be >= 0");
    }
    for (double b : beta) {
        if (!(b >= 0.0)) throw ConfigError("loss.beta weights must be >= 0");
    }
}

double Hyperparams::alpha_for(int relation) const {
    return alpha.at(static_cast<std::size_t>(relation));
}

double Hyperparams::beta_for(int relation) const {
    return beta.at(static_cast<std::size_t>(relation));
}

double phi(double f, double lambda) {
    if (f < 0.0) throw std::invalid_argument("phi: score must be nonnegative");
    return std::exp(-lambda * f);
}

double phi_inv(double p, double lambda) {
    if (!(p > 0.0) || p > 1.0) throw std::domain_error("phi_inv: probability must be in (0, 1]");
    return std::log(1.0 / p) / lambda;
}

double clamp_probability(double p_raw, const Hyperparams& hyper, bool is_negative) {
    if (is_negative) return hyper.eps_n;
    return std::max(p_raw, hyper.eps_p);
}

double margin_pair_loss(double s, double s_neg, double gamma) {
    return std::max(s + gamma - s_neg, 0.0);
}

double positive_prob_loss(double p, double f, const Hyperparams& hyper) {
    return std::abs(phi_inv(p, hyper.lambda) - f);
}

double negative_prob_loss(double f_neg, const Hyperparams& hyper) {
    return std::max(phi_inv(hyper.eps_n, hyper.lambda) - f_neg, 0.0);
}

double pair_weight(double s, double s_neg, const Hyperparams& hyper) {
    const double hinge = margin_pair_loss(s, s_neg, hyper.gamma);
    const double exponent = std::min(hyper.margin_weight_scale * hinge, hyper.weight_exponent_cap);
    return std::exp(exponent);
}

double combined_pair_loss(double s, double s_neg, double p_clamped, int relation,
                          const Hyperparams& hyper) {
    const double w = pair_weight(s, s_neg, hyper);
    double loss = w * (hyper.alpha_for(relation) * positive_prob_loss(p_clamped, s, hyper) +
                       hyper.beta_for(relation) * negative_prob_loss(s_neg, hyper));
    if (hyper.add_margin_term) loss += margin_pair_loss(s, s_neg, hyper.gamma);
    return loss;
}

PairGrad grad_combined(double s, double s_neg, double p_clamped, int relation,
                       const Hyperparams& hyper, bool detach_weight) {
    const double alpha = hyper.alpha_for(relation);
    const double beta = hyper.beta_for(relation);
    const double target_pos = phi_inv(p_clamped, hyper.lambda);
    const double target_neg = phi_inv(hyper.eps_n, hyper.lambda);
    const double w = pair_weight(s, s_neg, hyper);

    // d|target - s|/ds with sign(0) := 0.
    const double d_pl_pos = -sign0(target_pos - s);
    const double d_pl_neg = (target_neg - s_neg > 0.0) ? -1.0 : 0.0;

    PairGrad g;
    g.d_s = w * alpha * d_pl_pos;
    g.d_s_neg = w * beta * d_pl_neg;

    if (!detach_weight) {
        const double hinge = s + hyper.gamma - s_neg;
        const bool active = hinge > 0.0;
        const bool saturated = hyper.margin_weight_scale * std::max(hinge, 0.0) >= hyper.weight_exponent_cap;
        if (active && !saturated) {
            const double pl_sum = alpha * positive_prob_loss(p_clamped, s, hyper) +
                                  beta * negative_prob_loss(s_neg, hyper);
            const double dw = w * hyper.margin_weight_scale * pl_sum;
            g.d_s += dw;
            g.d_s_neg -= dw;
        }
    }
    if (hyper.add_margin_term) {
        const PairGrad m = grad_margin(s, s_neg, hyper.gamma);
        g.d_s += m.d_s;
        g.d_s_neg += m.d_s_neg;
    }
    return g;
}

PairGrad grad_margin(double s, double s_neg, double gamma) {
    PairGrad g;
    if (s + gamma - s_neg > 0.0) {
        g.d_s = 1.0;
        g.d_s_neg = -1.0;
    }
    return g;
}

}  // namespace prtransx
