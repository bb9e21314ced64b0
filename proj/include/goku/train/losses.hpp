#pragma once

#include "goku/ad/ops.hpp"
#include "goku/core/tensor.hpp"
#include "goku/train/window.hpp"

namespace goku::train {

// Mean squared error over all elements, divided by the mean absolute value
// of the target so losses are comparable across observation scales.
// Throws DegenerateInput when the target is identically zero.
double reconstruction_loss(const Mat& pred, const Mat& target);
double reconstruction_loss(const Tensor3& pred, const Tensor3& target);
ad::Var reconstruction_loss_graph(ad::Graph& g, ad::Var pred, const Mat& target);

// Multiple-shooting junction mismatch: lambda / n_junctions times the summed
// squared gap between each window's integrated endpoint and the next
// window's inferred initial value, averaged over the batch. Columns of both
// inputs are laid out [window * batch + sample]. Zero for a single window.
double continuity_penalty(const Mat& window_ends, const Mat& window_z0, const WindowPlan& plan,
                          double lambda);
// Graph version; returns an invalid Var when there is nothing to penalize
// (single window or lambda == 0).
ad::Var continuity_penalty_graph(ad::Graph& g, ad::Var window_ends, ad::Var window_z0,
                                 const WindowPlan& plan, double lambda);

// KL(N(mu, diag(exp(logvar))) || N(0, I)), summed over latent dimensions and
// averaged over columns.
double kl_term(const Mat& mu, const Mat& logvar);
ad::Var kl_term_graph(ad::Graph& g, ad::Var mu, ad::Var logvar);

}  // namespace goku::train
