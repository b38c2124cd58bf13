#pragma once

#include <cstddef>
#include <vector>

#include "prtransx/errors.hpp"

namespace prtransx {

// Loss hyperparameters. Defaults are the reference configuration used for
// all models: lambda=10, K=1000, gamma=1, eps_p=1e-4, eps_n=1e-13, and the
// per-relation weights in schema relation order.
struct Hyperparams {
    double lambda = 10.0;              // scaling coefficient of the score<->probability map
    double margin_weight_scale = 1000.0;  // K
    double gamma = 1.0;                // margin
    double eps_p = 1e-4;               // minimum valid-triplet probability
    double eps_n = 1e-13;              // probability assigned to negative triplets
    std::vector<double> alpha = {1, 1, 1, 1, 1, 10};
    std::vector<double> beta = {15, 10, 10, 15, 10, 0};
    // Bounds K*hinge before exponentiation. exp(x) overflows double precision
    // near x = 709, which K=1000 reaches for hinge violations above ~0.709;
    // the cap keeps margin violations dominant while staying finite. Set to
    // +infinity to disable (the trainer's non-finite guard then fires).
    double weight_exponent_cap = 60.0;
    // When set, the total loss additionally includes the plain margin hinge.
    bool add_margin_term = false;

    void validate(std::size_t relation_count) const;
    double alpha_for(int relation) const;
    double beta_for(int relation) const;
};

// p = e^(-lambda * f), the score -> probability map. Requires f >= 0.
double phi(double f, double lambda);

// f = ln(1/p) / lambda, the probability -> score map. Requires 0 < p <= 1.
double phi_inv(double p, double lambda);

// Positive triplets get max(p_raw, eps_p); negatives are pinned to eps_n.
double clamp_probability(double p_raw, const Hyperparams& hyper, bool is_negative);

// [s + gamma - s_neg]_+, one summand of the margin ranking loss.
double margin_pair_loss(double s, double s_neg, double gamma);

// |phi_inv(p) - f| for a positive triplet with clamped probability p.
double positive_prob_loss(double p, double f, const Hyperparams& hyper);

// [phi_inv(eps_n) - f_neg]_+ for the corresponding negative triplet.
double negative_prob_loss(double f_neg, const Hyperparams& hyper);

// exp(min(K * [s + gamma - s_neg]_+, weight_exponent_cap)).
double pair_weight(double s, double s_neg, const Hyperparams& hyper);

// w * (alpha_r * PL_pos + beta_r * PL_neg), optionally + the margin hinge.
double combined_pair_loss(double s, double s_neg, double p_clamped, int relation,
                          const Hyperparams& hyper);

struct PairGrad {
    double d_s = 0.0;
    double d_s_neg = 0.0;
};

// Gradient of combined_pair_loss with respect to the two scores. With
// detach_weight the exponential weight is treated as a constant coefficient;
// otherwise the product rule through exp(K * hinge) is applied (saturated
// weights have zero derivative). Subgradients at kinks are zero.
PairGrad grad_combined(double s, double s_neg, double p_clamped, int relation,
                       const Hyperparams& hyper, bool detach_weight = true);

// Gradient of the plain margin hinge with respect to the two scores.
PairGrad grad_margin(double s, double s_neg, double gamma);

}  // namespace prtransx
