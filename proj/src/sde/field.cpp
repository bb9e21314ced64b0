#include "goku/sde/field.hpp"

#include "goku/core/errors.hpp"

namespace goku::sde {

Vec neural_vector_field(const DenseStack& net, const Vec& state) {
    if (net.weights.empty() || net.weights.size() != net.biases.size())
        throw InvalidArgument("neural_vector_field: empty or mismatched layer stack");
    Vec h = state;
    for (std::size_t k = 0; k < net.weights.size(); ++k) {
        const Mat& w = net.weights[k];
        const Mat& b = net.biases[k];
        if (w.cols() != h.size() || b.rows() != w.rows() || b.cols() != 1)
            throw InvalidArgument("neural_vector_field: layer shape mismatch");
        h = ((w * h + b.col(0)).array().tanh()).matrix();
    }
    if (h.size() != state.size())
        throw InvalidArgument("neural_vector_field: output dim must equal state dim");
    return h;
}

ad::Var neural_vector_field_graph(const std::vector<ad::Var>& weights,
                                  const std::vector<ad::Var>& biases, ad::Var state) {
    if (weights.empty() || weights.size() != biases.size())
        throw InvalidArgument("neural_vector_field_graph: empty or mismatched layer stack");
    ad::Var h = state;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        h = ad::tanh_op(ad::affine(weights[k], h, biases[k]));
    }
    if (h.rows() != state.rows())
        throw InvalidArgument("neural_vector_field_graph: output dim must equal state dim");
    return h;
}

}  // namespace goku::sde
